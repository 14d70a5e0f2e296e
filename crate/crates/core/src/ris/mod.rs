//! Relative impact stratification.
//!
//! A baseline assigns a value to every predictor. Perturbing one predictor
//! and re-evaluating every node of the fitted tree gives the change at each
//! internal node and at the root; the root change is the impact of the
//! perturbation. Baselines come from quartiles of the data
//! ([`quartile_impact_table`]) or from a hand-written scenario
//! ([`counterfactual`]). The per-node changes also drive
//! [`simplify_by_impact`].

mod simplify;
mod table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{quantile, Dataset};
use crate::error::{Error, Result};
use crate::expr::{Bindings, ExpressionTree, NodeId, Symbol};

pub use simplify::{simplify_by_impact, Simplified};
pub use table::{quartile_impact_table, quartile_impact_table_with, BaselineStrategy, QuartileImpactTable, QuartileRow};

/// Default relative perturbation: +5% of the baseline value.
pub const DEFAULT_MAGNITUDE: f64 = 0.05;

/// A full assignment of predictor values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub label: String,
    pub values: Bindings,
}

impl BaselineSpec {
    pub fn new(label: impl Into<String>, values: Bindings) -> Self {
        Self { label: label.into(), values }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    /// `v * (1 + magnitude)`; falls back to `v + magnitude` when `v == 0`.
    #[default]
    Relative,
    /// `v + magnitude`.
    Absolute,
    /// Replace `v` by `magnitude`.
    SetTo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub variable: String,
    pub mode: PerturbationMode,
    pub magnitude: f64,
}

impl PerturbationSpec {
    pub fn relative(variable: impl Into<String>, fraction: f64) -> Self {
        Self { variable: variable.into(), mode: PerturbationMode::Relative, magnitude: fraction }
    }

    pub fn absolute(variable: impl Into<String>, delta: f64) -> Self {
        Self { variable: variable.into(), mode: PerturbationMode::Absolute, magnitude: delta }
    }

    pub fn set_to(variable: impl Into<String>, value: f64) -> Self {
        Self { variable: variable.into(), mode: PerturbationMode::SetTo, magnitude: value }
    }

    /// Perturbed value of `v`, and whether the zero-baseline fallback applied.
    pub fn apply(&self, v: f64) -> (f64, bool) {
        match self.mode {
            PerturbationMode::Relative if v == 0.0 => (v + self.magnitude, true),
            PerturbationMode::Relative => (v * (1.0 + self.magnitude), false),
            PerturbationMode::Absolute => (v + self.magnitude, false),
            PerturbationMode::SetTo => (self.magnitude, false),
        }
    }

    pub fn describe(&self) -> String {
        match self.mode {
            PerturbationMode::Relative => {
                let sign = if self.magnitude >= 0.0 { "positive" } else { "negative" };
                format!("{}% {sign} perturbation", self.magnitude.abs() * 100.0)
            }
            PerturbationMode::Absolute => format!("{:+} absolute perturbation", self.magnitude),
            PerturbationMode::SetTo => format!("set to {}", self.magnitude),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisWarning {
    /// The perturbed variable does not occur in the tree.
    VariableNotInTree,
    /// The perturbed variable has no baseline value; nothing was perturbed.
    VariableNotInBaseline,
    /// Relative mode on a zero baseline was applied as an absolute step.
    ZeroBaselineAbsoluteFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeImpact {
    pub id: NodeId,
    pub baseline: f64,
    pub perturbed: f64,
    pub delta: f64,
}

/// Result of one perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub variable: String,
    pub baseline_label: String,
    pub mode: PerturbationMode,
    pub magnitude: f64,
    pub baseline_value: Option<f64>,
    pub perturbed_value: Option<f64>,
    pub baseline_output: f64,
    pub perturbed_output: f64,
    /// `perturbed_output - baseline_output`.
    pub impact: f64,
    /// One entry per node, in id order.
    pub node_impacts: Vec<NodeImpact>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<RisWarning>,
}

impl ImpactReport {
    pub fn node(&self, id: NodeId) -> Option<&NodeImpact> {
        self.node_impacts.get(id)
    }

    /// `{delta:+.3}` for every node, for DOT labels.
    pub fn annotations(&self) -> BTreeMap<NodeId, String> {
        self.node_impacts.iter().map(|n| (n.id, format!("{:+.3}", n.delta))).collect()
    }

    /// Up to `k` non-root operator nodes with the largest absolute change,
    /// ties broken by id.
    pub fn most_changed_internal_nodes(&self, tree: &ExpressionTree, k: usize) -> Vec<NodeImpact> {
        let mut internal: Vec<NodeImpact> = self
            .node_impacts
            .iter()
            .filter(|n| n.id != tree.root() && matches!(tree.symbol(n.id), Some(Symbol::Op(_))))
            .copied()
            .collect();
        internal.sort_by(|a, b| b.delta.abs().total_cmp(&a.delta.abs()).then(a.id.cmp(&b.id)));
        internal.truncate(k);
        internal
    }
}

fn check_baseline(tree: &ExpressionTree, baseline: &BaselineSpec) -> Result<()> {
    for name in tree.dependency_set() {
        match baseline.values.get(&name) {
            None => return Err(Error::MissingVariable(name)),
            Some(v) if !v.is_finite() => return Err(Error::NonFiniteBaseline(name)),
            Some(_) => {}
        }
    }
    Ok(())
}

/// Applies each perturbation to `baseline` in turn and reports the change at
/// every node and at the root.
pub fn ris(tree: &ExpressionTree, baseline: &BaselineSpec, perturbations: &[PerturbationSpec]) -> Result<Vec<ImpactReport>> {
    check_baseline(tree, baseline)?;
    let before = tree.evaluate_nodes(&baseline.values)?;
    let used = tree.dependency_set();
    perturbations
        .iter()
        .map(|p| {
            let mut warnings = Vec::new();
            if !used.contains(&p.variable) {
                warnings.push(RisWarning::VariableNotInTree);
            }
            let (baseline_value, perturbed_value, after) = match baseline.values.get(&p.variable) {
                None => {
                    warnings.push(RisWarning::VariableNotInBaseline);
                    (None, None, before.clone())
                }
                Some(v) => {
                    let (nv, fallback) = p.apply(v);
                    if fallback {
                        warnings.push(RisWarning::ZeroBaselineAbsoluteFallback);
                    }
                    if !nv.is_finite() {
                        return Err(Error::NonFiniteBaseline(p.variable.clone()));
                    }
                    let mut perturbed = baseline.values.clone();
                    perturbed.insert(p.variable.clone(), nv);
                    (Some(v), Some(nv), tree.evaluate_nodes(&perturbed)?)
                }
            };
            let node_impacts = before
                .iter()
                .map(|(id, b)| NodeImpact { id, baseline: b, perturbed: after[id], delta: after[id] - b })
                .collect();
            Ok(ImpactReport {
                variable: p.variable.clone(),
                baseline_label: baseline.label.clone(),
                mode: p.mode,
                magnitude: p.magnitude,
                baseline_value,
                perturbed_value,
                baseline_output: before.root(),
                perturbed_output: after.root(),
                impact: after.root() - before.root(),
                node_impacts,
                warnings,
            })
        })
        .collect()
}

/// Effect of a single intervention on a hand-specified scenario.
pub fn counterfactual(tree: &ExpressionTree, scenario: &BaselineSpec, intervention: &PerturbationSpec) -> Result<ImpactReport> {
    Ok(ris(tree, scenario, std::slice::from_ref(intervention))?.remove(0))
}

pub const QUARTILE_LABELS: [&str; 3] = ["Q1", "Q2", "Q3"];

/// 25th, 50th and 75th percentile of each predictor, with linear
/// interpolation between order statistics.
pub fn quartile_baselines(data: &Dataset, predictors: &[String]) -> Result<[BaselineSpec; 3]> {
    let mut out = QUARTILE_LABELS.map(|l| BaselineSpec::new(l, Bindings::new()));
    for name in predictors {
        let sorted = crate::dataset::sorted_finite(name, data.require(name)?)?;
        for (spec, p) in out.iter_mut().zip([0.25, 0.5, 0.75]) {
            spec.values.insert(name.clone(), quantile(&sorted, p).expect("nonempty"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree() -> ExpressionTree {
        "B + C / D".parse().unwrap()
    }

    fn base() -> BaselineSpec {
        BaselineSpec::new("b", [("B", 2.0), ("C", 3.0), ("D", 5.0)].into_iter().collect())
    }

    // Independent recursive evaluator.
    fn naive(t: &ExpressionTree, v: &Bindings) -> f64 {
        fn go(s: &[Symbol], pos: &mut usize, v: &Bindings) -> f64 {
            let sym = &s[*pos];
            *pos += 1;
            match sym {
                Symbol::Var(n) => v.get(n).unwrap(),
                Symbol::Const(c) => *c,
                Symbol::Op(op) => {
                    let a = go(s, pos, v);
                    let b = go(s, pos, v);
                    op.apply(a, b)
                }
            }
        }
        go(t.symbols(), &mut 0, v)
    }

    #[test]
    fn zero_perturbation() {
        for var in ["B", "C", "D"] {
            let r = &ris(&tree(), &base(), &[PerturbationSpec::relative(var, 0.0)]).unwrap()[0];
            assert_eq!(r.impact, 0.0);
            assert!(r.node_impacts.iter().all(|n| n.delta == 0.0));
        }
    }

    #[test]
    fn relative_five_percent_on_d() {
        let r = &ris(&tree(), &base(), &[PerturbationSpec::relative("D", 0.05)]).unwrap()[0];
        assert_eq!(r.perturbed_value, Some(5.0 * 1.05));
        let mut v = base().values;
        v.insert("D", 5.0 * 1.05);
        assert_eq!(r.impact, naive(&tree(), &v) - naive(&tree(), &base().values));
        assert!((r.impact - (-0.028571428571428)).abs() < 1e-12, "{}", r.impact);
        // Leaves B and C are untouched; the division node carries the change.
        assert_eq!(r.node(1).unwrap().delta, 0.0);
        assert_eq!(r.node(3).unwrap().delta, 0.0);
        assert_eq!(r.node(2).unwrap().delta, 3.0 / 5.25 - 3.0 / 5.0);
        assert_eq!(r.node(0).unwrap().delta, r.impact);
    }

    #[test]
    fn absolute_step_on_b() {
        let r = &ris(&tree(), &base(), &[PerturbationSpec::absolute("B", 0.1)]).unwrap()[0];
        assert_eq!(r.impact, (2.1 + 0.6) - (2.0 + 0.6));
        assert!((r.impact - 0.1).abs() < 1e-12);
    }

    #[test]
    fn counterfactual_set_to() {
        let r = counterfactual(&tree(), &base(), &PerturbationSpec::set_to("D", 6.0)).unwrap();
        assert_eq!(r.baseline_output, 2.0 + 3.0 / 5.0);
        assert_eq!(r.impact, (2.0 + 3.0 / 6.0) - (2.0 + 3.0 / 5.0));
        assert!((r.impact + 0.1).abs() < 1e-12);

        let same = counterfactual(&tree(), &base(), &PerturbationSpec::set_to("D", 5.0)).unwrap();
        assert_eq!(same.impact, 0.0);
    }

    #[test]
    fn warnings_and_errors() {
        let r = &ris(&tree(), &base(), &[PerturbationSpec::relative("Q", 0.05)]).unwrap()[0];
        assert_eq!(r.impact, 0.0);
        assert_eq!(r.warnings, vec![RisWarning::VariableNotInTree, RisWarning::VariableNotInBaseline]);

        let mut with_x = base();
        with_x.values.insert("X", 4.0);
        let r = &ris(&tree(), &with_x, &[PerturbationSpec::relative("X", 0.05)]).unwrap()[0];
        assert_eq!((r.impact, r.warnings.clone()), (0.0, vec![RisWarning::VariableNotInTree]));

        let mut zero = base();
        zero.values.insert("B", 0.0);
        let r = &ris(&tree(), &zero, &[PerturbationSpec::relative("B", 0.05)]).unwrap()[0];
        assert_eq!(r.perturbed_value, Some(0.05));
        assert_eq!(r.warnings, vec![RisWarning::ZeroBaselineAbsoluteFallback]);

        let partial = BaselineSpec::new("p", [("B", 1.0)].into_iter().collect());
        assert_eq!(ris(&tree(), &partial, &[]).unwrap_err(), Error::MissingVariable("C".into()));
        let mut nan = base();
        nan.values.insert("C", f64::NAN);
        assert_eq!(ris(&tree(), &nan, &[]).unwrap_err(), Error::NonFiniteBaseline("C".into()));
    }

    #[test]
    fn most_changed_nodes() {
        let t: ExpressionTree = "(A * B) + ((A + C) - C)".parse().unwrap();
        let b = BaselineSpec::new("s", [("A", 1.0), ("B", 10.0), ("C", 1.0)].into_iter().collect());
        let r = counterfactual(&t, &b, &PerturbationSpec::set_to("A", 2.0)).unwrap();
        let top: Vec<NodeId> = r.most_changed_internal_nodes(&t, 2).iter().map(|n| n.id).collect();
        // A * B changes by 10; (A + C) and its parent change by 1.
        assert_eq!(top, vec![1, 4]);
    }

    #[test]
    fn quartiles() {
        let d = Dataset::from_columns(vec![
            ("x".to_string(), vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            ("c".to_string(), vec![7.0; 5]),
        ])
        .unwrap();
        let [q1, q2, q3] = quartile_baselines(&d, &["x".into(), "c".into()]).unwrap();
        assert_eq!((q1.values.get("x"), q2.values.get("x"), q3.values.get("x")), (Some(2.0), Some(3.0), Some(4.0)));
        assert_eq!([q1.values.get("c"), q2.values.get("c"), q3.values.get("c")], [Some(7.0); 3]);
        assert_eq!((q1.label.as_str(), q3.label.as_str()), ("Q1", "Q3"));

        let even = Dataset::from_columns(vec![("x".to_string(), vec![4.0, 1.0, 3.0, 2.0])]).unwrap();
        assert_eq!(quartile_baselines(&even, &["x".into()]).unwrap()[1].values.get("x"), Some(2.5));

        let empty = Dataset::from_columns(vec![("x".to_string(), vec![f64::NAN])]).unwrap();
        assert_eq!(quartile_baselines(&empty, &["x".into()]).unwrap_err(), Error::EmptyColumn("x".into()));
    }

    #[test]
    fn describe_modes() {
        assert_eq!(PerturbationSpec::relative("x", 0.05).describe(), "5% positive perturbation");
        assert_eq!(PerturbationSpec::relative("x", -0.1).describe(), "10% negative perturbation");
        assert_eq!(PerturbationSpec::absolute("x", 0.5).describe(), "+0.5 absolute perturbation");
        assert_eq!(PerturbationSpec::set_to("x", 1.0).describe(), "set to 1");
    }
}
