use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Operator;

/// Hyperparameters of the evolutionary search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub population_size: usize,
    /// Maximum number of evaluated generations, including the initial one.
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub tournament_size: usize,
    pub max_depth: usize,
    /// Depth ramp `(min, max)` for ramped half-and-half initialization.
    pub init_depth_range: (usize, usize),
    /// Fitness penalty per node.
    pub parsimony_coeff: f64,
    pub elitism_count: usize,
    /// Ephemeral constants are drawn uniformly from this interval.
    pub constant_range: (f64, f64),
    pub seed: u64,
    /// Stop once the best fitness is at or below this value.
    pub fitness_threshold: f64,
    /// Stop after this many consecutive generations without improvement of
    /// the best fitness; 0 disables the check.
    pub stagnation_generations: usize,
    pub operators: Vec<Operator>,
}

/// Improvement of the best fitness smaller than this counts as stagnation.
pub const STAGNATION_TOLERANCE: f64 = 1e-12;

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            population_size: 2000,
            generations: 30,
            crossover_prob: 0.5,
            mutation_prob: 0.1,
            tournament_size: 7,
            max_depth: 8,
            init_depth_range: (2, 5),
            parsimony_coeff: 0.001,
            elitism_count: 1,
            constant_range: (-5.0, 5.0),
            seed: 0,
            fitness_threshold: 0.0,
            stagnation_generations: 10,
            operators: Operator::ALL.to_vec(),
        }
    }
}

impl GpConfig {
    /// Population and operator rates used for the synthetic benchmark at
    /// full scale.
    pub fn synthetic() -> Self {
        Self { population_size: 50_000, crossover_prob: 0.5, mutation_prob: 0.1, generations: 30, ..Self::default() }
    }

    /// Population and operator rates used for the survey (EHR) analysis.
    pub fn ehr() -> Self {
        Self { population_size: 100_000, crossover_prob: 0.6, mutation_prob: 0.2, generations: 30, ..Self::default() }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default()),
            "synthetic" => Ok(Self::synthetic()),
            "ehr" => Ok(Self::ehr()),
            other => Err(Error::InvalidConfig(format!(
                "unknown preset `{other}` (expected default, synthetic or ehr)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 2 {
            return fail(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if self.generations < 1 {
            return fail("generations must be >= 1".into());
        }
        for (name, p) in [("crossover_prob", self.crossover_prob), ("mutation_prob", self.mutation_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.tournament_size < 1 {
            return fail("tournament_size must be >= 1".into());
        }
        if self.max_depth < 1 {
            return fail("max_depth must be >= 1".into());
        }
        let (lo, hi) = self.init_depth_range;
        if lo < 1 || lo > hi || hi > self.max_depth {
            return fail(format!(
                "init_depth_range ({lo}, {hi}) must satisfy 1 <= min <= max <= max_depth ({})",
                self.max_depth
            ));
        }
        if !(self.parsimony_coeff >= 0.0 && self.parsimony_coeff.is_finite()) {
            return fail(format!("parsimony_coeff must be a nonnegative real, got {}", self.parsimony_coeff));
        }
        if self.elitism_count >= self.population_size {
            return fail(format!(
                "elitism_count ({}) must be below population_size ({})",
                self.elitism_count, self.population_size
            ));
        }
        let (clo, chi) = self.constant_range;
        if !(clo.is_finite() && chi.is_finite() && clo < chi) {
            return fail(format!("constant_range ({clo}, {chi}) must be a finite interval with lo < hi"));
        }
        if self.fitness_threshold.is_nan() || self.fitness_threshold < 0.0 {
            return fail(format!("fitness_threshold must be >= 0, got {}", self.fitness_threshold));
        }
        if self.operators.is_empty() {
            return fail("operators must not be empty".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_presets_validate() {
        for name in ["default", "synthetic", "ehr"] {
            GpConfig::preset(name).unwrap().validate().unwrap();
        }
        assert_eq!(GpConfig::synthetic().population_size, 50_000);
        let ehr = GpConfig::ehr();
        assert_eq!((ehr.population_size, ehr.crossover_prob, ehr.mutation_prob), (100_000, 0.6, 0.2));
        assert!(GpConfig::preset("huge").is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            GpConfig { population_size: 1, ..Default::default() },
            GpConfig { generations: 0, ..Default::default() },
            GpConfig { crossover_prob: 1.5, ..Default::default() },
            GpConfig { mutation_prob: -0.1, ..Default::default() },
            GpConfig { tournament_size: 0, ..Default::default() },
            GpConfig { init_depth_range: (0, 3), ..Default::default() },
            GpConfig { init_depth_range: (4, 3), ..Default::default() },
            GpConfig { init_depth_range: (2, 9), ..Default::default() },
            GpConfig { parsimony_coeff: -1.0, ..Default::default() },
            GpConfig { elitism_count: 2000, ..Default::default() },
            GpConfig { constant_range: (1.0, 1.0), ..Default::default() },
            GpConfig { fitness_threshold: f64::NAN, ..Default::default() },
            GpConfig { operators: vec![], ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: GpConfig = serde_json::from_str(r#"{"population_size": 10, "operators": ["add"]}"#).unwrap();
        assert_eq!(cfg.population_size, 10);
        assert_eq!(cfg.operators, vec![Operator::Add]);
        assert_eq!(cfg.generations, 30);
    }
}
