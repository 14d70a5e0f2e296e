//! `ecd` command-line front end: generate synthetic data, fit, analyze with
//! relative impact stratification, run counterfactuals and simplify.
//!
//! Settings come from an optional TOML run configuration (see [`config`])
//! and are overridden by flags. Logs go to stderr; artifacts go to the
//! output directory. Only `--stdout` puts machine-readable output on stdout.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ecd_core::gp::{self, write_history_csv, ModelDocument};
use ecd_core::ris::{
    counterfactual, quartile_impact_table_with, simplify_by_impact, BaselineSpec, BaselineStrategy, ImpactReport,
    PerturbationMode, PerturbationSpec,
};
use ecd_core::synth::{self, SynthConfig};
use ecd_core::{dataset, Bindings, ExpressionTree};

pub use config::{CsvSource, DataSource, RisSettings, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "ecd", version, about = "Evolutionary causal discovery: symbolic regression and impact analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic benchmark dataset and its ground truth.
    Gen {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// Fit an expression tree to the response.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        gp: GpArgs,
    },
    /// Quartile impact table for a fitted model.
    Ris {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        perturbation: PerturbationArgs,
        /// Where the other predictors sit while one is perturbed.
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Evaluate one intervention on a hand-specified scenario.
    Counterfactual {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Scenario values, e.g. "B=2,C=3,D=5".
        #[arg(long)]
        scenario: String,
        /// Intervention that sets a variable, e.g. "D=6".
        #[arg(long, conflicts_with = "perturb")]
        set: Option<String>,
        /// Variable to perturb with --mode/--magnitude instead of --set.
        #[arg(long)]
        perturb: Option<String>,
        #[command(flatten)]
        perturbation: PerturbationArgs,
    },
    /// Replace subtrees that do not react to any perturbation by constants.
    Simplify {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        data: DataArgs,
        /// Largest tolerated change, at a node or at the output.
        #[arg(long)]
        threshold: Option<f64>,
        /// Relative perturbation used to probe the nodes.
        #[arg(long)]
        magnitude: Option<f64>,
    },
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for data generation and search; overrides the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the primary artifact to stdout.
    #[arg(long)]
    pub stdout: bool,
}

#[derive(Debug, Default, Args)]
pub struct SynthArgs {
    /// Synthetic sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Synthetic noise as a fraction of each value (0.02 = 2%).
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "synth")]
    pub data: Option<PathBuf>,
    /// Response column (with --data).
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated predictor columns (with --data).
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    /// Row filter, e.g. "Sex == 1 and Age in [30,60]".
    #[arg(long)]
    pub filter: Option<String>,
    /// Use the synthetic benchmark as data.
    #[arg(long)]
    pub synth: bool,
    #[command(flatten)]
    pub synth_args: SynthArgs,
}

#[derive(Debug, Default, Args)]
pub struct GpArgs {
    /// Hyperparameter preset: default, synthetic, ehr.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub parsimony: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    /// Model JSON written by `fit` [default: <out>/model.json].
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct PerturbationArgs {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Fraction for relative mode, step for absolute, value for set-to.
    #[arg(long, allow_hyphen_values = true)]
    pub magnitude: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Relative,
    Absolute,
    SetTo,
}

impl From<ModeArg> for PerturbationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Relative => PerturbationMode::Relative,
            ModeArg::Absolute => PerturbationMode::Absolute,
            ModeArg::SetTo => PerturbationMode::SetTo,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    CoQuartile,
    Median,
}

impl From<StrategyArg> for BaselineStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::CoQuartile => BaselineStrategy::CoQuartile,
            StrategyArg::Median => BaselineStrategy::Median,
        }
    }
}

/// Configuration file (if any) with flag overrides applied.
fn resolve(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    Ok(cfg)
}

fn apply_synth_args(synth: &mut SynthConfig, args: &SynthArgs) {
    if let Some(n) = args.n {
        synth.n = n;
    }
    if let Some(noise) = args.noise {
        synth.noise_percent = noise;
    }
}

fn apply_data_args(cfg: &mut RunConfig, args: &DataArgs) -> Result<()> {
    if let Some(path) = &args.data {
        let (Some(response), Some(predictors)) = (&args.response, &args.predictors) else {
            bail!("--data needs --response and --predictors");
        };
        cfg.synth = None;
        cfg.data = Some(CsvSource {
            path: path.clone(),
            response: response.clone(),
            predictors: predictors.clone(),
            filter: args.filter.clone(),
            missing: Default::default(),
        });
    } else if args.synth {
        cfg.data = None;
        cfg.synth.get_or_insert_with(SynthConfig::default);
    } else if let Some(src) = cfg.data.as_mut() {
        if let Some(r) = &args.response {
            src.response = r.clone();
        }
        if let Some(p) = &args.predictors {
            src.predictors = p.clone();
        }
        if args.filter.is_some() {
            src.filter = args.filter.clone();
        }
    }
    if let Some(s) = cfg.synth.as_mut() {
        apply_synth_args(s, &args.synth_args);
    }
    Ok(())
}

fn apply_gp_args(cfg: &mut RunConfig, args: &GpArgs) -> Result<()> {
    if let Some(name) = &args.preset {
        let seed = cfg.gp.seed;
        cfg.gp = ecd_core::GpConfig { seed, ..ecd_core::GpConfig::preset(name)? };
    }
    if let Some(v) = args.population {
        cfg.gp.population_size = v;
    }
    if let Some(v) = args.generations {
        cfg.gp.generations = v;
    }
    if let Some(v) = args.max_depth {
        cfg.gp.max_depth = v;
    }
    if let Some(v) = args.parsimony {
        cfg.gp.parsimony_coeff = v;
    }
    Ok(())
}

fn apply_perturbation_args(settings: &mut RisSettings, args: &PerturbationArgs) {
    if let Some(m) = args.mode {
        settings.mode = m.into();
    }
    if let Some(v) = args.magnitude {
        settings.magnitude = v;
    }
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn load_model(args: &ModelArgs, cfg: &RunConfig) -> Result<ModelDocument> {
    let path = args.model.clone().unwrap_or_else(|| cfg.out_dir().join("model.json"));
    let text = fs::read_to_string(&path).with_context(|| format!("reading model {}", path.display()))?;
    ModelDocument::from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

/// Model plus data whose columns cover the model's variables.
fn model_and_data(model: &ModelArgs, data: &DataArgs, cfg: &mut RunConfig) -> Result<(ModelDocument, DataSource)> {
    apply_data_args(cfg, data)?;
    cfg.apply_seed();
    let doc = load_model(model, cfg)?;
    let source = cfg.load_data()?;
    for v in &doc.variables {
        source.data.require(v).with_context(|| format!("data lacks model variable `{v}`"))?;
    }
    Ok((doc, source))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common, synth } => cmd_gen(&common, &synth),
        Command::Fit { common, data, gp } => cmd_fit(&common, &data, &gp),
        Command::Ris { common, model, data, perturbation, strategy } => {
            cmd_ris(&common, &model, &data, &perturbation, strategy)
        }
        Command::Counterfactual { common, model, scenario, set, perturb, perturbation } => {
            cmd_counterfactual(&common, &model, &scenario, set.as_deref(), perturb.as_deref(), &perturbation)
        }
        Command::Simplify { common, model, data, threshold, magnitude } => {
            cmd_simplify(&common, &model, &data, threshold, magnitude)
        }
    }
}

pub fn cmd_gen(common: &CommonArgs, args: &SynthArgs) -> Result<()> {
    let mut cfg = resolve(common)?;
    let mut synth_cfg = cfg.synth.take().unwrap_or_default();
    if let Some(seed) = cfg.seed {
        synth_cfg.seed = seed;
    }
    apply_synth_args(&mut synth_cfg, args);
    let (data, truth) = synth::generate(&synth_cfg)?;
    let out = cfg.out_dir();
    let csv_path = out.join("data.csv");
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    dataset::write_csv(&data, &csv_path)?;
    log::info!("wrote {} ({} rows)", csv_path.display(), data.n_rows());
    write(&out, "ground_truth.json", truth.to_json())?;
    if common.stdout {
        print!("{}", fs::read_to_string(&csv_path)?);
    }
    Ok(())
}

pub fn cmd_fit(common: &CommonArgs, data: &DataArgs, gp_args: &GpArgs) -> Result<()> {
    let mut cfg = resolve(common)?;
    apply_data_args(&mut cfg, data)?;
    apply_gp_args(&mut cfg, gp_args)?;
    cfg.apply_seed();
    let source = cfg.load_data()?;
    log::info!(
        "fitting {} ~ {} on {} rows (population {}, {} generations, seed {})",
        source.response,
        source.predictors.join(", "),
        source.data.n_rows(),
        cfg.gp.population_size,
        cfg.gp.generations,
        cfg.gp.seed
    );
    let fit = gp::evolve_with_predictors(&source.data, &source.response, &source.predictors, &cfg.gp)?;
    log::info!("best {} (fitness {:.6e}, mse {:.6e}, {:?})", fit.best.tree, fit.best.fitness, fit.best.raw_mse, fit.terminated_by);

    let out = cfg.out_dir();
    let doc = ModelDocument::from_fit(&fit, &cfg.gp);
    let json = doc.to_json();
    write(&out, "model.json", &json)?;
    let mut history = Vec::new();
    write_history_csv(&fit.history, &mut history)?;
    write(&out, "history.csv", history)?;
    write(&out, "expression.txt", format!("{}\n", doc.expression))?;
    write(&out, "model.dot", doc.tree.to_dot(None)?)?;
    if common.stdout {
        print!("{json}");
    }
    Ok(())
}

pub fn cmd_ris(
    common: &CommonArgs,
    model: &ModelArgs,
    data: &DataArgs,
    perturbation: &PerturbationArgs,
    strategy: Option<StrategyArg>,
) -> Result<()> {
    let mut cfg = resolve(common)?;
    apply_perturbation_args(&mut cfg.ris, perturbation);
    if let Some(s) = strategy {
        cfg.ris.strategy = s.into();
    }
    let (doc, source) = model_and_data(model, data, &mut cfg)?;
    let table = quartile_impact_table_with(
        &doc.tree,
        &source.data,
        &doc.variables,
        cfg.ris.mode,
        cfg.ris.magnitude,
        cfg.ris.strategy,
    )?;
    let out = cfg.out_dir();
    let text = table.to_text(&doc.response);
    write(&out, "ris_table.txt", &text)?;
    write(&out, "ris_table.json", table.to_json())?;
    for (var, quartile, report) in table.iter_cells() {
        write(&out, &format!("ris/{var}_{quartile}.dot"), doc.tree.to_dot(Some(&report.annotations()))?)?;
    }
    if common.stdout {
        print!("{text}");
    }
    Ok(())
}

fn parse_assignment(text: &str) -> Result<(String, f64)> {
    let (name, value) = text.split_once('=').with_context(|| format!("expected NAME=VALUE, got `{text}`"))?;
    let name = name.trim();
    if name.is_empty() {
        bail!("empty variable name in `{text}`");
    }
    let value: f64 = value.trim().parse().with_context(|| format!("bad number in `{text}`"))?;
    if !value.is_finite() {
        bail!("non-finite value in `{text}`");
    }
    Ok((name.to_string(), value))
}

/// Parses `"A=1,B=2.5"`.
pub fn parse_scenario(text: &str) -> Result<Bindings> {
    let mut values = Bindings::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = parse_assignment(part)?;
        if values.insert(name.clone(), value).is_some() {
            bail!("`{name}` assigned twice in scenario");
        }
    }
    Ok(values)
}

/// Human-readable counterfactual summary.
pub fn render_counterfactual(tree: &ExpressionTree, response: &str, scenario: &BaselineSpec, spec: &PerturbationSpec, r: &ImpactReport) -> String {
    let mut s = String::new();
    let values: Vec<String> = scenario.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
    s.push_str(&format!("Scenario: {}\n", values.join(", ")));
    let intervention = match spec.mode {
        PerturbationMode::SetTo => format!("{} := {}", spec.variable, spec.magnitude),
        _ => format!("{} ({})", spec.variable, spec.describe()),
    };
    s.push_str(&format!("Intervention: {intervention}\n"));
    s.push_str(&format!("Baseline {response}: {:.3}\n", r.baseline_output));
    s.push_str(&format!("Counterfactual {response}: {:.3}\n", r.perturbed_output));
    s.push_str(&format!("Impact: {:+.3}\n", r.impact));
    let top = r.most_changed_internal_nodes(tree, 2);
    if !top.is_empty() {
        s.push_str("Most changed internal nodes:\n");
        for n in top {
            s.push_str(&format!(
                "  n{} {}: {:.3} -> {:.3} ({:+.3})\n",
                n.id,
                tree.subtree(n.id).to_infix(),
                n.baseline,
                n.perturbed,
                n.delta
            ));
        }
    }
    for w in &r.warnings {
        s.push_str(&format!("Warning: {w:?}\n"));
    }
    s
}

pub fn cmd_counterfactual(
    common: &CommonArgs,
    model: &ModelArgs,
    scenario: &str,
    set: Option<&str>,
    perturb: Option<&str>,
    perturbation: &PerturbationArgs,
) -> Result<()> {
    let mut cfg = resolve(common)?;
    apply_perturbation_args(&mut cfg.ris, perturbation);
    let doc = load_model(model, &cfg)?;
    let scenario = BaselineSpec::new("scenario", parse_scenario(scenario)?);
    let spec = match (set, perturb) {
        (Some(a), None) => {
            let (name, value) = parse_assignment(a)?;
            PerturbationSpec::set_to(name, value)
        }
        (None, Some(var)) => PerturbationSpec { variable: var.to_string(), mode: cfg.ris.mode, magnitude: cfg.ris.magnitude },
        _ => bail!("give exactly one of --set NAME=VALUE or --perturb NAME"),
    };
    let report = counterfactual(&doc.tree, &scenario, &spec)?;
    let out = cfg.out_dir();
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write(&out, "counterfactual.json", &json)?;
    write(&out, "counterfactual.dot", doc.tree.to_dot(Some(&report.annotations()))?)?;
    if common.stdout {
        print!("{json}");
    } else {
        print!("{}", render_counterfactual(&doc.tree, &doc.response, &scenario, &spec, &report));
    }
    Ok(())
}

pub fn cmd_simplify(
    common: &CommonArgs,
    model: &ModelArgs,
    data: &DataArgs,
    threshold: Option<f64>,
    magnitude: Option<f64>,
) -> Result<()> {
    let mut cfg = resolve(common)?;
    if let Some(t) = threshold {
        cfg.ris.threshold = t;
    }
    if let Some(m) = magnitude {
        cfg.ris.magnitude = m;
    }
    let (doc, source) = model_and_data(model, data, &mut cfg)?;
    let s = simplify_by_impact(&doc.tree, &source.data, &doc.variables, cfg.ris.magnitude, cfg.ris.threshold)?;
    let (fitness, raw_mse) = if source.data.has_column(&doc.response) {
        gp::fitness(&s.tree, &source.data, &doc.response, doc.config.parsimony_coeff)?
    } else {
        (doc.fitness, doc.raw_mse)
    };
    let simplified = ModelDocument::new(&doc.response, &doc.variables, s.tree.clone(), fitness, raw_mse, &doc.config);
    let out = cfg.out_dir();
    let json = simplified.to_json();
    write(&out, "simplified_model.json", &json)?;
    write(&out, "simplified_model.dot", s.tree.to_dot(None)?)?;
    if common.stdout {
        print!("{json}");
    } else {
        println!("size {} -> {} ({} subtrees pruned)", doc.tree.size(), s.tree.size(), s.pruned.len());
        println!("{}", simplified.expression);
    }
    Ok(())
}
