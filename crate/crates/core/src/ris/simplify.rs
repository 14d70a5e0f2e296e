use serde::{Deserialize, Serialize};

use super::{quartile_baselines, ris, PerturbationSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::expr::{ExpressionTree, NodeId, Symbol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplified {
    pub tree: ExpressionTree,
    /// Ids, in the original tree, of the subtree roots replaced by constants.
    pub pruned: Vec<NodeId>,
}

/// Replaces maximal operator subtrees that do not react to any relative
/// perturbation of any predictor at any quartile baseline by their Q2 value.
///
/// A subtree is pruned when the largest absolute change at its root across
/// all `(predictor, quartile)` runs is at most `threshold` and the pruned
/// tree (together with everything pruned before it in preorder) still
/// reproduces the original outputs at Q1/Q2/Q3 within `threshold`.
pub fn simplify_by_impact(
    tree: &ExpressionTree,
    data: &Dataset,
    predictors: &[String],
    magnitude: f64,
    threshold: f64,
) -> Result<Simplified> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidConfig(format!("simplification threshold must be >= 0, got {threshold}")));
    }
    let quartiles = quartile_baselines(data, predictors)?;
    let mut max_delta = vec![0.0f64; tree.size()];
    for var in predictors {
        let spec = PerturbationSpec::relative(var.clone(), magnitude);
        for q in &quartiles {
            let report = ris(tree, q, std::slice::from_ref(&spec))?.remove(0);
            for n in &report.node_impacts {
                let d = n.delta.abs();
                // NaN changes count as unbounded.
                max_delta[n.id] = if d.is_nan() { f64::INFINITY } else { max_delta[n.id].max(d) };
            }
        }
    }
    let original: Vec<f64> = quartiles.iter().map(|q| tree.evaluate(&q.values)).collect::<Result<_>>()?;
    let median = tree.evaluate_nodes(&quartiles[1].values)?;

    let mut pruned: Vec<NodeId> = Vec::new();
    let mut current = tree.clone();
    let mut id = 0;
    while id < tree.size() {
        let end = tree.subtree_end(id);
        let value = median[id];
        let candidate = matches!(tree.symbol(id), Some(Symbol::Op(_))) && max_delta[id] <= threshold && value.is_finite();
        if candidate {
            let mut ids = pruned.clone();
            ids.push(id);
            let trial = rebuild(tree, &ids, &median)?;
            let within = quartiles
                .iter()
                .zip(&original)
                .map(|(q, o)| trial.evaluate(&q.values).map(|v| (v - o).abs() <= threshold))
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .all(|ok| ok);
            if within {
                pruned = ids;
                current = trial;
                id = end;
                continue;
            }
        }
        id += 1;
    }
    Ok(Simplified { tree: current, pruned })
}

/// Copies `tree`, emitting `Const(values[id])` in place of each subtree
/// rooted at one of `ids`.
fn rebuild(tree: &ExpressionTree, ids: &[NodeId], values: &crate::expr::NodeValues) -> Result<ExpressionTree> {
    let mut out = Vec::with_capacity(tree.size());
    let mut id = 0;
    while id < tree.size() {
        if ids.contains(&id) {
            out.push(Symbol::Const(values[id]));
            id = tree.subtree_end(id);
        } else {
            out.push(tree.symbols()[id].clone());
            id += 1;
        }
    }
    ExpressionTree::from_preorder(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    fn data() -> Dataset {
        generate(&SynthConfig::default()).unwrap().0
    }

    fn abcd() -> Vec<String> {
        ["A", "B", "C", "D"].map(String::from).to_vec()
    }

    #[test]
    fn zero_weight_subtree_is_pruned() {
        let tree: ExpressionTree = "B + 0 * A".parse().unwrap();
        let s = simplify_by_impact(&tree, &data(), &abcd(), 0.05, 0.0).unwrap();
        assert_eq!(s.pruned, vec![2]);
        assert_eq!(s.tree.to_infix(), "(B + 0)");
        let d = data();
        for q in quartile_baselines(&d, &abcd()).unwrap() {
            assert_eq!(s.tree.evaluate(&q.values).unwrap(), tree.evaluate(&q.values).unwrap());
        }
    }

    #[test]
    fn reactive_tree_is_unchanged() {
        let tree: ExpressionTree = "B + C / D".parse().unwrap();
        let s = simplify_by_impact(&tree, &data(), &abcd(), 0.05, 0.0).unwrap();
        assert!(s.pruned.is_empty());
        assert_eq!(s.tree, tree);
    }

    #[test]
    fn maximal_subtree_only() {
        // (0 * A) * (B - B) never changes; only its root is reported.
        let tree: ExpressionTree = "C + (0 * A) * (B - B)".parse().unwrap();
        let s = simplify_by_impact(&tree, &data(), &abcd(), 0.05, 1e-12).unwrap();
        assert_eq!(s.pruned, vec![2]);
        assert_eq!(s.tree.size(), 3);
    }

    #[test]
    fn threshold_must_be_nonnegative() {
        let tree: ExpressionTree = "B".parse().unwrap();
        assert!(matches!(simplify_by_impact(&tree, &data(), &abcd(), 0.05, -1.0), Err(Error::InvalidConfig(_))));
        assert!(simplify_by_impact(&tree, &data(), &abcd(), 0.05, f64::NAN).is_err());
    }
}
