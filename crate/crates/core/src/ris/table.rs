use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{quartile_baselines, ris, BaselineSpec, ImpactReport, PerturbationMode, PerturbationSpec, QUARTILE_LABELS};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::expr::ExpressionTree;

/// Where the non-perturbed predictors sit while one predictor is perturbed
/// at a given quartile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineStrategy {
    /// Every predictor at the same quartile.
    #[default]
    CoQuartile,
    /// The other predictors at their medians.
    Median,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuartileRow {
    pub variable: String,
    /// Impact at Q1, Q2, Q3.
    pub impacts: [f64; 3],
}

/// Impact of perturbing each predictor at each quartile baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuartileImpactTable {
    pub mode: PerturbationMode,
    pub magnitude: f64,
    pub strategy: BaselineStrategy,
    pub quartiles: [BaselineSpec; 3],
    /// Tree output at each co-quartile baseline.
    pub baselines: [f64; 3],
    pub rows: Vec<QuartileRow>,
    /// Full report behind every cell, row-major.
    #[serde(skip)]
    pub cells: Vec<[ImpactReport; 3]>,
}

pub fn quartile_impact_table(
    tree: &ExpressionTree,
    data: &Dataset,
    predictors: &[String],
    mode: PerturbationMode,
    magnitude: f64,
) -> Result<QuartileImpactTable> {
    quartile_impact_table_with(tree, data, predictors, mode, magnitude, BaselineStrategy::CoQuartile)
}

pub fn quartile_impact_table_with(
    tree: &ExpressionTree,
    data: &Dataset,
    predictors: &[String],
    mode: PerturbationMode,
    magnitude: f64,
    strategy: BaselineStrategy,
) -> Result<QuartileImpactTable> {
    let quartiles = quartile_baselines(data, predictors)?;
    let mut baselines = [0.0; 3];
    for (out, q) in baselines.iter_mut().zip(&quartiles) {
        *out = tree.evaluate(&q.values)?;
    }
    let mut rows = Vec::with_capacity(predictors.len());
    let mut cells = Vec::with_capacity(predictors.len());
    for var in predictors {
        let spec = PerturbationSpec { variable: var.clone(), mode, magnitude };
        let mut reports = Vec::with_capacity(3);
        for q in &quartiles {
            let baseline = match strategy {
                BaselineStrategy::CoQuartile => q.clone(),
                BaselineStrategy::Median => {
                    let mut values = quartiles[1].values.clone();
                    values.insert(var.clone(), q.values.get(var).expect("predictor has quartiles"));
                    BaselineSpec::new(q.label.clone(), values)
                }
            };
            reports.push(ris(tree, &baseline, std::slice::from_ref(&spec))?.remove(0));
        }
        let reports: [ImpactReport; 3] = reports.try_into().expect("three quartiles");
        rows.push(QuartileRow { variable: var.clone(), impacts: [0, 1, 2].map(|i| reports[i].impact) });
        cells.push(reports);
    }
    Ok(QuartileImpactTable { mode, magnitude, strategy, quartiles, baselines, rows, cells })
}

/// Three-decimal signed impact; values that round to zero print as `±0.000`.
pub fn format_impact(v: f64) -> String {
    let s = format!("{v:+.3}");
    if s == "+0.000" || s == "-0.000" {
        "±0.000".to_string()
    } else {
        s
    }
}

impl QuartileImpactTable {
    fn perturbation_label(&self) -> String {
        PerturbationSpec { variable: String::new(), mode: self.mode, magnitude: self.magnitude }.describe()
    }

    /// Aligned text layout: one row per predictor with impacts at the three
    /// quartiles (3 decimals), then the calculated response at each quartile
    /// baseline (1 decimal).
    pub fn to_text(&self, response: &str) -> String {
        let label_width = self
            .rows
            .iter()
            .map(|r| r.variable.chars().count())
            .chain([
                "Predictive Variable".len(),
                format!("({})", self.perturbation_label()).chars().count(),
                format!("{response} Calculated Baseline").chars().count(),
            ])
            .max()
            .unwrap_or(0);
        let col = 10;
        let rule = "-".repeat(label_width + 3 * col);
        let mut out = String::new();
        let _ = writeln!(out, "{:<label_width$}{:>w$}", "Predictive Variable", format!("Impact on {response} at Quartiles"), w = 3 * col);
        let _ = writeln!(
            out,
            "{:<label_width$}{:>col$}{:>col$}{:>col$}",
            format!("({})", self.perturbation_label()),
            "1st",
            "2nd",
            "3rd"
        );
        let _ = writeln!(out, "{rule}");
        for row in &self.rows {
            let _ = write!(out, "{:<label_width$}", row.variable);
            for v in row.impacts {
                let _ = write!(out, "{:>col$}", format_impact(v));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "{rule}");
        let _ = write!(out, "{:<label_width$}", format!("{response} Calculated Baseline"));
        for v in self.baselines {
            let _ = write!(out, "{:>col$}", format!("{v:.1}"));
        }
        out.push('\n');
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    /// `(variable, quartile label, report)` for every cell.
    pub fn iter_cells(&self) -> impl Iterator<Item = (&str, &'static str, &ImpactReport)> {
        self.cells.iter().flat_map(|reports| {
            reports.iter().zip(QUARTILE_LABELS).map(|(r, q)| (r.variable.as_str(), q, r))
        })
    }
}
