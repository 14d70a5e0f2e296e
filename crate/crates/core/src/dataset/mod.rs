//! Tabular data: named real-valued columns, variable roles, CSV ingestion,
//! summary statistics and cohort filtering.

mod csv_io;
mod filter;
mod stats;

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, load_csv_columns, write_csv, MissingPolicy};
pub use filter::{filter_rows, Clause, Comparison, Predicate};
pub use stats::{quantile, sorted_finite, summarize, ColumnSummary};

/// Named columns of equal length.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    columns: IndexMap<String, Vec<f64>>,
    n_rows: usize,
}

impl Dataset {
    pub fn from_columns<I>(columns: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut map = IndexMap::new();
        let mut n_rows = None;
        for (name, values) in columns {
            if name.is_empty() {
                return Err(Error::InvalidConfig("column names must be nonempty".into()));
            }
            match n_rows {
                None => n_rows = Some(values.len()),
                Some(n) if n != values.len() => {
                    return Err(Error::InvalidConfig(format!(
                        "column `{name}` has {} rows, expected {n}",
                        values.len()
                    )))
                }
                _ => {}
            }
            if map.insert(name.clone(), values).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate column `{name}`")));
            }
        }
        Ok(Self { columns: map, n_rows: n_rows.unwrap_or(0) })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.column(name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Subset of columns, in the requested order.
    pub fn select(&self, names: &[String]) -> Result<Dataset> {
        let cols = names
            .iter()
            .map(|n| Ok((n.clone(), self.require(n)?.to_vec())))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Dataset::from_columns(cols)?;
        out.n_rows = self.n_rows;
        Ok(out)
    }

    /// Keeps only the rows for which `keep[i]` is true.
    pub fn retain_rows(&self, keep: &[bool]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|(k, v)| {
                let col = v.iter().zip(keep).filter(|(_, &k)| k).map(|(x, _)| *x).collect();
                (k.clone(), col)
            })
            .collect();
        Dataset { columns, n_rows: keep.iter().filter(|&&k| k).count() }
    }

    /// Row `i` as a name → value map.
    pub fn row(&self, i: usize) -> crate::expr::Bindings {
        self.columns.iter().map(|(k, v)| (k.as_str(), v[i])).collect()
    }
}

/// Which column is the response and which are predictors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleConfig {
    pub response: String,
    pub predictors: Vec<String>,
    /// Code → label metadata for ordinal predictors, used only when labeling
    /// reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categorical_codings: Option<BTreeMap<String, Vec<(i64, String)>>>,
}

impl RoleConfig {
    pub fn new(response: impl Into<String>, predictors: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            response: response.into(),
            predictors: predictors.into_iter().map(Into::into).collect(),
            categorical_codings: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.response.is_empty() {
            return Err(Error::InvalidConfig("response name is empty".into()));
        }
        if self.predictors.is_empty() {
            return Err(Error::InvalidConfig("at least one predictor is required".into()));
        }
        if self.predictors.iter().any(|p| p == &self.response) {
            return Err(Error::InvalidConfig(format!(
                "response `{}` is also listed as a predictor",
                self.response
            )));
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidConfig("predictor name is empty".into()));
            }
            if self.predictors[..i].contains(p) {
                return Err(Error::InvalidConfig(format!("predictor `{p}` listed twice")));
            }
        }
        Ok(())
    }

    /// Response followed by the predictors.
    pub fn all_columns(&self) -> Vec<String> {
        std::iter::once(self.response.clone())
            .chain(self.predictors.iter().cloned())
            .collect()
    }

    pub fn check_against(&self, data: &Dataset) -> Result<()> {
        for name in self.all_columns() {
            data.require(&name)?;
        }
        Ok(())
    }
}
