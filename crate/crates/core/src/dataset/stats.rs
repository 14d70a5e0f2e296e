use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Percentile `p` in `[0, 1]` of an ascending slice, interpolating linearly
/// between the order statistics at positions `floor(h)` and `ceil(h)` with
/// `h = (n - 1) p`.
pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    Some(if lo == hi { sorted[lo] } else { sorted[lo] + frac * (sorted[hi] - sorted[lo]) })
}

/// Finite values of a column, sorted ascending.
pub fn sorted_finite(name: &str, values: &[f64]) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Err(Error::EmptyColumn(name.to_string()));
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

/// Summary statistics over the finite values of each named column.
pub fn summarize(data: &Dataset, names: &[String]) -> Result<Vec<ColumnSummary>> {
    names
        .iter()
        .map(|name| {
            let sorted = sorted_finite(name, data.require(name)?)?;
            let n = sorted.len();
            let mean = sorted.iter().sum::<f64>() / n as f64;
            let sd = if n > 1 {
                (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            let q = |p| quantile(&sorted, p).expect("nonempty");
            Ok(ColumnSummary {
                name: name.clone(),
                n,
                min: sorted[0],
                max: sorted[n - 1],
                mean,
                sd,
                q1: q(0.25),
                q2: q(0.5),
                q3: q(0.75),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(values: Vec<f64>) -> ColumnSummary {
        let d = Dataset::from_columns(vec![("x".to_string(), values)]).unwrap();
        summarize(&d, &["x".to_string()]).unwrap().remove(0)
    }

    #[test]
    fn five_values() {
        let s = one(vec![5.0, 1.0, 4.0, 2.0, 3.0]);
        assert_eq!((s.q1, s.q2, s.q3, s.mean), (2.0, 3.0, 4.0, 3.0));
        assert_eq!((s.min, s.max, s.n), (1.0, 5.0, 5));
        assert!((s.sd - 2.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_and_single() {
        let s = one(vec![7.0; 4]);
        assert_eq!(s.sd, 0.0);
        let s = one(vec![3.5]);
        assert_eq!([s.min, s.max, s.mean, s.q1, s.q2, s.q3], [3.5; 6]);
        assert_eq!(s.sd, 0.0);
    }

    #[test]
    fn even_count_median() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.5));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn errors() {
        let d = Dataset::from_columns(vec![("x".to_string(), vec![f64::NAN])]).unwrap();
        assert_eq!(summarize(&d, &["x".into()]).unwrap_err(), Error::EmptyColumn("x".into()));
        assert_eq!(summarize(&d, &["y".into()]).unwrap_err(), Error::MissingColumn("y".into()));
    }
}
