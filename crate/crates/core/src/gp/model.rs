use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{FitResult, GenerationStats, GpConfig};
use crate::error::{Error, Result};
use crate::expr::{ExpressionTree, Operator};

pub const MODEL_FORMAT: &str = "ecd-model";
pub const MODEL_VERSION: u32 = 1;
pub const HISTORY_HEADER: [&str; 5] = ["generation", "min_fitness", "mean_fitness", "diversity", "best_expression"];

/// Serialized best model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub response: String,
    pub variables: Vec<String>,
    pub operators: Vec<Operator>,
    pub expression: String,
    pub tree: ExpressionTree,
    pub fitness: f64,
    pub raw_mse: f64,
    pub seed: u64,
    pub config: GpConfig,
}

impl ModelDocument {
    pub fn from_fit(fit: &FitResult, config: &GpConfig) -> Self {
        Self::new(&fit.response, &fit.variables, fit.best.tree.clone(), fit.best.fitness, fit.best.raw_mse, config)
    }

    pub fn new(
        response: &str,
        variables: &[String],
        tree: ExpressionTree,
        fitness: f64,
        raw_mse: f64,
        config: &GpConfig,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            response: response.to_string(),
            variables: variables.to_vec(),
            operators: config.operators.clone(),
            expression: tree.to_infix(),
            tree,
            fitness,
            raw_mse,
            seed: config.seed,
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("model document: {e}")))?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::InvalidConfig(format!("model document: unexpected format `{}`", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::InvalidConfig(format!("model document: unsupported version {}", doc.version)));
        }
        Ok(doc)
    }
}

/// Writes generation telemetry as CSV with [`HISTORY_HEADER`].
pub fn write_history_csv<W: Write>(history: &[GenerationStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTORY_HEADER)?;
    for s in history {
        w.write_record([
            s.generation.to_string(),
            s.min_fitness.to_string(),
            s.mean_fitness.to_string(),
            s.diversity.to_string(),
            s.best_expression.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_json_round_trip_and_checks() {
        let tree: ExpressionTree = "B + C / D".parse().unwrap();
        let doc = ModelDocument::new("Z", &["B".into(), "C".into(), "D".into()], tree, 0.005, 0.0, &GpConfig::default());
        let json = doc.to_json();
        assert!(json.contains("\"expression\": \"(B + (C / D))\""));
        assert_eq!(ModelDocument::from_json(&json).unwrap(), doc);

        let wrong = json.replace("\"ecd-model\"", "\"other\"");
        assert!(ModelDocument::from_json(&wrong).is_err());
        assert!(ModelDocument::from_json("{}").is_err());
    }

    #[test]
    fn history_csv_layout() {
        let history = vec![GenerationStats {
            generation: 0,
            min_fitness: 0.5,
            mean_fitness: 2.0,
            diversity: 0.25,
            best_expression: "(A + B)".into(),
        }];
        let mut buf = Vec::new();
        write_history_csv(&history, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "generation,min_fitness,mean_fitness,diversity,best_expression\n0,0.5,2,0.25,(A + B)\n"
        );
    }
}
