//! Declarative run configuration, read from TOML.
//!
//! ```toml
//! seed = 0
//! out = "runs/ehr"
//!
//! [data]                       # or a [synth] section, not both
//! path = "cdc2022.csv"         # relative to this file
//! response = "BMI"
//! predictors = ["GeneralHealth", "SmokerStatus", "AlcoholDrinkers", "SleepHours"]
//! filter = "Sex == 1 and AgeCategory in [5,9]"
//! missing = "drop_row"         # or "fail"
//!
//! [gp]
//! preset = "ehr"                # optional starting point, then field overrides
//! population_size = 5000
//!
//! [ris]
//! mode = "relative"            # relative | absolute | set_to
//! magnitude = 0.05
//! threshold = 0.0
//! strategy = "co_quartile"     # co_quartile | median
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ecd_core::dataset::{load_csv_columns, MissingPolicy, Predicate};
use ecd_core::ris::{BaselineStrategy, PerturbationMode, DEFAULT_MAGNITUDE};
use ecd_core::synth::{self, SynthConfig};
use ecd_core::{Dataset, GpConfig, RoleConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    pub response: String,
    pub predictors: Vec<String>,
    #[serde(default)]
    pub filter: Option<String>,
    #[serde(default)]
    pub missing: MissingPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisSettings {
    pub mode: PerturbationMode,
    pub magnitude: f64,
    pub threshold: f64,
    pub strategy: BaselineStrategy,
}

impl Default for RisSettings {
    fn default() -> Self {
        Self { mode: PerturbationMode::Relative, magnitude: DEFAULT_MAGNITUDE, threshold: 0.0, strategy: BaselineStrategy::CoQuartile }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data: Option<CsvSource>,
    pub synth: Option<SynthConfig>,
    pub gp: GpConfig,
    pub ris: RisSettings,
}

/// A loaded dataset with its roles.
pub struct DataSource {
    pub data: Dataset,
    pub response: String,
    pub predictors: Vec<String>,
}

impl RunConfig {
    /// Parses a configuration. `[gp] preset = "..."` selects the base
    /// hyperparameters that the other `[gp]` keys then override.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).context("invalid TOML")?;
        if let Some(toml::Value::Table(gp)) = table.get_mut("gp") {
            if let Some(preset) = gp.remove("preset") {
                let name = preset.as_str().context("gp.preset must be a string")?;
                let toml::Value::Table(mut merged) = toml::Value::try_from(GpConfig::preset(name)?)? else {
                    unreachable!("GpConfig serializes to a table")
                };
                merged.extend(std::mem::take(gp));
                *gp = merged;
            }
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().context("invalid run configuration")?;
        if cfg.data.is_some() && cfg.synth.is_some() {
            bail!("configure either [data] or [synth], not both");
        }
        Ok(cfg)
    }

    /// Reads a configuration file; relative data paths are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))?;
        if let (Some(data), Some(dir)) = (cfg.data.as_mut(), path.parent()) {
            if data.path.is_relative() {
                data.path = dir.join(&data.path);
            }
        }
        Ok(cfg)
    }

    /// Copies the run seed into every seeded section.
    pub fn apply_seed(&mut self) {
        if let Some(seed) = self.seed {
            self.gp.seed = seed;
            if let Some(s) = self.synth.as_mut() {
                s.seed = seed;
            }
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn load_data(&self) -> Result<DataSource> {
        match (&self.data, &self.synth) {
            (Some(_), Some(_)) => bail!("configure either a CSV data source or a synthetic one, not both"),
            (None, None) => bail!("no data source: pass --data/--response/--predictors, --synth, or a config with [data] or [synth]"),
            (None, Some(s)) => {
                let (data, truth) = synth::generate(s)?;
                Ok(DataSource {
                    data,
                    response: truth.response,
                    predictors: synth::PREDICTORS.iter().map(|p| p.to_string()).collect(),
                })
            }
            (Some(src), None) => {
                let roles = RoleConfig::new(src.response.clone(), src.predictors.clone());
                roles.validate()?;
                let predicate: Option<Predicate> = src.filter.as_deref().map(str::parse).transpose()?;
                let mut names = roles.all_columns();
                for c in predicate.iter().flat_map(Predicate::columns) {
                    if !names.contains(&c) {
                        names.push(c);
                    }
                }
                let mut data = load_csv_columns(&src.path, &names, src.missing)?;
                if let Some(p) = &predicate {
                    data = p.filter_rows(&data)?;
                    log::info!("filter `{p}` kept {} rows", data.n_rows());
                }
                let data = data.select(&roles.all_columns())?;
                Ok(DataSource { data, response: src.response.clone(), predictors: src.predictors.clone() })
            }
        }
    }
}
