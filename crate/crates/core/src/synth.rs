//! Synthetic benchmark with known structure:
//!
//! ```text
//! A ~ N(1, 2)    B ~ N(2, 1)    C = A + B    D = 2A + 3    Z = B + C / D
//! ```
//!
//! Noise is added to the predictors A..D after the derived columns are
//! computed; Z stays clean. Rows with `|D| < 1e-6` are redrawn so Z is finite.
//! Clean samples come from stream `(seed, 0, SynthSample)` and noise from
//! `(seed, 0, SynthNoise)`; noise draws are made even at 0% so the clean part
//! of a dataset is the same at every noise level for a given seed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::expr::ExpressionTree;
use crate::gp::{evolve, GpConfig};
use crate::rng::{stream, Role};

/// Rows whose true denominator is smaller than this are redrawn.
pub const MIN_ABS_DENOMINATOR: f64 = 1e-6;
/// Added to a data seed to obtain the seed of its clean holdout set.
pub const HOLDOUT_SEED_OFFSET: u64 = 1_000_003;
pub const RUN_HEADER: [&str; 6] = ["noise", "seed", "best_mse", "support_jaccard", "runtime_sec", "best_expression"];
pub const PREDICTORS: [&str; 4] = ["A", "B", "C", "D"];
pub const RESPONSE: &str = "Z";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    /// Noise standard deviation as a fraction of each cell's magnitude
    /// (0.02 = 2%).
    pub noise_percent: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n: 500, seed: 0, noise_percent: 0.0 }
    }
}

impl SynthConfig {
    pub const NOISE_PRESETS: [f64; 3] = [0.0, 0.02, 0.05];

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.noise_percent >= 0.0 && self.noise_percent.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise_percent must be >= 0, got {}", self.noise_percent)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralEquation {
    pub variable: String,
    pub equation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub response: String,
    pub equations: Vec<StructuralEquation>,
    pub parents: BTreeMap<String, BTreeSet<String>>,
    pub ancestors: BTreeMap<String, BTreeSet<String>>,
}

fn set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl GroundTruth {
    pub fn standard() -> Self {
        let eq = |v: &str, e: &str| StructuralEquation { variable: v.into(), equation: e.into() };
        let parents = BTreeMap::from([
            ("A".to_string(), set(&[])),
            ("B".to_string(), set(&[])),
            ("C".to_string(), set(&["A", "B"])),
            ("D".to_string(), set(&["A"])),
            ("Z".to_string(), set(&["B", "C", "D"])),
        ]);
        let mut ancestors = BTreeMap::new();
        for var in parents.keys() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&String> = parents[var].iter().collect();
            while let Some(p) = stack.pop() {
                if seen.insert(p.clone()) {
                    stack.extend(parents[p].iter());
                }
            }
            ancestors.insert(var.clone(), seen);
        }
        Self {
            response: RESPONSE.into(),
            equations: vec![
                eq("A", "A ~ N(1, 2)"),
                eq("B", "B ~ N(2, 1)"),
                eq("C", "C = A + B"),
                eq("D", "D = 2A + 3"),
                eq("Z", "Z = B + C / D"),
            ],
            parents,
            ancestors,
        }
    }

    /// Variable sets that each give an exact description of the response:
    /// its direct parents, and the root causes obtained by substituting the
    /// deterministic intermediate variables.
    pub fn equivalent_supports(&self) -> Vec<BTreeSet<String>> {
        let direct = self.parents[&self.response].clone();
        let roots: BTreeSet<String> = self.ancestors[&self.response]
            .iter()
            .filter(|v| self.parents[*v].is_empty())
            .cloned()
            .collect();
        vec![direct, roots]
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ground truth serializes");
        s.push('\n');
        s
    }
}

/// Samples the benchmark dataset (columns A, B, C, D, Z).
pub fn generate(config: &SynthConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let n = config.n;
    let mut sample = stream(config.seed, 0, Role::SynthSample);
    let mut noise = stream(config.seed, 0, Role::SynthNoise);
    let mut cols: [Vec<f64>; 5] = Default::default();
    for c in cols.iter_mut() {
        c.reserve(n);
    }
    for _ in 0..n {
        let (a, b, d) = loop {
            let a = 1.0 + 2.0 * sample.sample::<f64, _>(StandardNormal);
            let b = 2.0 + sample.sample::<f64, _>(StandardNormal);
            let d = 2.0 * a + 3.0;
            if d.abs() >= MIN_ABS_DENOMINATOR {
                break (a, b, d);
            }
        };
        let c = a + b;
        let z = b + c / d;
        for (slot, v) in [a, b, c, d].into_iter().enumerate() {
            let eps: f64 = noise.sample(StandardNormal);
            cols[slot].push(v + config.noise_percent * v.abs() * eps);
        }
        cols[4].push(z);
    }
    let names = ["A", "B", "C", "D", "Z"].map(str::to_string);
    let data = Dataset::from_columns(names.into_iter().zip(cols))?;
    Ok((data, GroundTruth::standard()))
}

/// Clean holdout set paired with data seed `seed`.
pub fn holdout(n: usize, seed: u64) -> Result<Dataset> {
    let cfg = SynthConfig { n, seed: seed.wrapping_add(HOLDOUT_SEED_OFFSET), noise_percent: 0.0 };
    Ok(generate(&cfg)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureScore {
    /// Best Jaccard similarity between the fitted tree's variables and any
    /// exact support of the response.
    pub support_jaccard: f64,
    pub mse_on_clean: f64,
    pub r2_on_clean: f64,
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Scores a fitted tree against the known structure and a clean holdout.
pub fn structure_score(fitted: &ExpressionTree, truth: &GroundTruth, clean: &Dataset) -> Result<StructureScore> {
    let support = fitted.dependency_set();
    let support_jaccard = if support.is_empty() {
        0.0
    } else {
        truth.equivalent_supports().iter().map(|s| jaccard(&support, s)).fold(0.0, f64::max)
    };
    let target = clean.require(&truth.response)?;
    let pred = fitted.evaluate_batch(clean)?;
    let n = target.len() as f64;
    let sse: f64 = pred.iter().zip(target).map(|(p, y)| (p - y).powi(2)).sum();
    let mean = target.iter().sum::<f64>() / n;
    let sst: f64 = target.iter().map(|y| (y - mean).powi(2)).sum();
    let mse = sse / n;
    Ok(StructureScore {
        support_jaccard,
        mse_on_clean: if mse.is_finite() { mse } else { f64::INFINITY },
        r2_on_clean: if sst > 0.0 { 1.0 - sse / sst } else { f64::NAN },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub noise: f64,
    pub seed: u64,
    /// MSE of the best tree on the clean holdout.
    pub best_mse: f64,
    pub support_jaccard: f64,
    pub r2: f64,
    pub runtime_sec: f64,
    pub best_expression: String,
    /// Best-ever fitness after each generation.
    pub fitness_trajectory: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseAggregate {
    pub noise: f64,
    pub runs: usize,
    pub min_best_mse: f64,
    pub median_best_mse: f64,
    pub max_r2: f64,
    pub mean_support_jaccard: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub runs: Vec<BenchmarkRun>,
}

/// Runs the search `repeats` times per noise level. Repeat `r` uses data
/// seed `synth.seed + r` and search seed `gp_config.seed + r`.
pub fn run_benchmark(gp_config: &GpConfig, synth_configs: &[SynthConfig], repeats: usize) -> Result<BenchmarkReport> {
    let mut report = BenchmarkReport::default();
    for synth in synth_configs {
        for r in 0..repeats as u64 {
            report.runs.push(run_one(gp_config, synth, r)?);
        }
    }
    Ok(report)
}

/// One benchmark cell: generate, fit, and score against a clean holdout.
pub fn run_one(gp_config: &GpConfig, synth: &SynthConfig, repeat: u64) -> Result<BenchmarkRun> {
    let data_seed = synth.seed.wrapping_add(repeat);
    let cfg = SynthConfig { seed: data_seed, ..synth.clone() };
    let gp = GpConfig { seed: gp_config.seed.wrapping_add(repeat), ..gp_config.clone() };
    let (data, truth) = generate(&cfg)?;
    let clean = holdout(synth.n, data_seed)?;
    let started = Instant::now();
    let fit = evolve(&data, &truth.response, &gp)?;
    let runtime_sec = started.elapsed().as_secs_f64();
    let score = structure_score(&fit.best.tree, &truth, &clean)?;
    let mut best = f64::INFINITY;
    let fitness_trajectory = fit
        .history
        .iter()
        .map(|s| {
            best = best.min(s.min_fitness);
            best
        })
        .collect();
    log::info!(
        "noise {} seed {}: holdout mse {:.3e}, jaccard {:.2}, {:.1}s, {}",
        synth.noise_percent,
        gp.seed,
        score.mse_on_clean,
        score.support_jaccard,
        runtime_sec,
        fit.best.tree
    );
    Ok(BenchmarkRun {
        noise: synth.noise_percent,
        seed: gp.seed,
        best_mse: score.mse_on_clean,
        support_jaccard: score.support_jaccard,
        r2: score.r2_on_clean,
        runtime_sec,
        best_expression: fit.best.tree.to_infix(),
        fitness_trajectory,
    })
}

impl BenchmarkReport {
    /// Per-noise-level summary, in order of first appearance.
    pub fn aggregate(&self) -> Vec<NoiseAggregate> {
        let mut levels: Vec<f64> = Vec::new();
        for r in &self.runs {
            if !levels.contains(&r.noise) {
                levels.push(r.noise);
            }
        }
        levels
            .into_iter()
            .map(|noise| {
                let runs: Vec<&BenchmarkRun> = self.runs.iter().filter(|r| r.noise == noise).collect();
                let mut mses: Vec<f64> = runs.iter().map(|r| r.best_mse).collect();
                mses.sort_by(f64::total_cmp);
                NoiseAggregate {
                    noise,
                    runs: runs.len(),
                    min_best_mse: mses[0],
                    median_best_mse: crate::dataset::quantile(&mses, 0.5).unwrap_or(f64::NAN),
                    max_r2: runs.iter().map(|r| r.r2).fold(f64::NEG_INFINITY, f64::max),
                    mean_support_jaccard: runs.iter().map(|r| r.support_jaccard).sum::<f64>() / runs.len() as f64,
                }
            })
            .collect()
    }

    pub fn write_runs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RUN_HEADER)?;
        for r in &self.runs {
            w.write_record([
                r.noise.to_string(),
                r.seed.to_string(),
                r.best_mse.to_string(),
                r.support_jaccard.to_string(),
                format!("{:.3}", r.runtime_sec),
                r.best_expression.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_aggregate_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["noise", "runs", "min_best_mse", "median_best_mse", "max_r2", "mean_support_jaccard"])?;
        for a in self.aggregate() {
            w.write_record([
                a.noise.to_string(),
                a.runs.to_string(),
                a.min_best_mse.to_string(),
                a.median_best_mse.to_string(),
                a.max_r2.to_string(),
                a.mean_support_jaccard.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
