use std::ops::Index;

use super::{Bindings, ExpressionTree, NodeId, Symbol};
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Value of every node after a bottom-up evaluation, indexed by [`NodeId`].
#[derive(Clone, Debug, PartialEq)]
pub struct NodeValues(Vec<f64>);

impl NodeValues {
    pub fn root(&self) -> f64 {
        self.0[0]
    }

    pub fn get(&self, id: NodeId) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.0.iter().copied().enumerate()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Index<NodeId> for NodeValues {
    type Output = f64;

    fn index(&self, id: NodeId) -> &f64 {
        &self.0[id]
    }
}

fn malformed(id: NodeId) -> Error {
    Error::MalformedTree(format!("operator at node {id} is missing operands"))
}

impl ExpressionTree {
    /// Value at the root under `bindings`.
    pub fn evaluate(&self, bindings: &Bindings) -> Result<f64> {
        let mut stack: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for (id, sym) in self.nodes.iter().enumerate().rev() {
            let v = match sym {
                Symbol::Var(name) => bindings
                    .get(name)
                    .ok_or_else(|| Error::MissingVariable(name.clone()))?,
                Symbol::Const(c) => *c,
                Symbol::Op(op) => {
                    let lhs = stack.pop().ok_or_else(|| malformed(id))?;
                    let rhs = stack.pop().ok_or_else(|| malformed(id))?;
                    op.apply(lhs, rhs)
                }
            };
            stack.push(v);
        }
        match (stack.pop(), stack.is_empty()) {
            (Some(v), true) => Ok(v),
            _ => Err(Error::MalformedTree("symbols do not form a single tree".into())),
        }
    }

    /// Value of every node, computed in one bottom-up pass.
    pub fn evaluate_nodes(&self, bindings: &Bindings) -> Result<NodeValues> {
        let n = self.nodes.len();
        let mut values = vec![0.0; n];
        // Ids of finished subtrees whose parent has not been visited yet.
        let mut ready: Vec<NodeId> = Vec::with_capacity(n);
        for id in (0..n).rev() {
            values[id] = match &self.nodes[id] {
                Symbol::Var(name) => bindings
                    .get(name)
                    .ok_or_else(|| Error::MissingVariable(name.clone()))?,
                Symbol::Const(c) => *c,
                Symbol::Op(op) => {
                    let lhs = ready.pop().ok_or_else(|| malformed(id))?;
                    let rhs = ready.pop().ok_or_else(|| malformed(id))?;
                    op.apply(values[lhs], values[rhs])
                }
            };
            ready.push(id);
        }
        if ready.len() != 1 {
            return Err(Error::MalformedTree("symbols do not form a single tree".into()));
        }
        Ok(NodeValues(values))
    }

    /// Root value for every row of `data`, computed column-wise.
    pub fn evaluate_batch(&self, data: &Dataset) -> Result<Vec<f64>> {
        let rows = data.n_rows();
        let mut stack: Vec<Column<'_>> = Vec::with_capacity(self.depth() + 2);
        for (id, sym) in self.nodes.iter().enumerate().rev() {
            let col = match sym {
                Symbol::Var(name) => Column::Borrowed(
                    data.column(name)
                        .ok_or_else(|| Error::MissingVariable(name.clone()))?,
                ),
                Symbol::Const(c) => Column::Scalar(*c),
                Symbol::Op(op) => {
                    let lhs = stack.pop().ok_or_else(|| malformed(id))?;
                    let rhs = stack.pop().ok_or_else(|| malformed(id))?;
                    lhs.combine(rhs, rows, |a, b| op.apply(a, b))
                }
            };
            stack.push(col);
        }
        match (stack.pop(), stack.is_empty()) {
            (Some(col), true) => Ok(col.into_vec(rows)),
            _ => Err(Error::MalformedTree("symbols do not form a single tree".into())),
        }
    }
}

enum Column<'a> {
    Borrowed(&'a [f64]),
    Owned(Vec<f64>),
    Scalar(f64),
}

impl Column<'_> {
    fn at(&self, i: usize) -> f64 {
        match self {
            Column::Borrowed(s) => s[i],
            Column::Owned(v) => v[i],
            Column::Scalar(c) => *c,
        }
    }

    fn combine(self, rhs: Column<'_>, rows: usize, f: impl Fn(f64, f64) -> f64) -> Column<'static> {
        match (self, rhs) {
            (Column::Scalar(a), Column::Scalar(b)) => Column::Scalar(f(a, b)),
            (Column::Owned(mut a), rhs) => {
                for (i, x) in a.iter_mut().enumerate() {
                    *x = f(*x, rhs.at(i));
                }
                Column::Owned(a)
            }
            (lhs, Column::Owned(mut b)) => {
                for (i, y) in b.iter_mut().enumerate() {
                    *y = f(lhs.at(i), *y);
                }
                Column::Owned(b)
            }
            (lhs, rhs) => Column::Owned((0..rows).map(|i| f(lhs.at(i), rhs.at(i))).collect()),
        }
    }

    fn into_vec(self, rows: usize) -> Vec<f64> {
        match self {
            Column::Borrowed(s) => s.to_vec(),
            Column::Owned(v) => v,
            Column::Scalar(c) => vec![c; rows],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Operator;

    fn t(s: &str) -> ExpressionTree {
        s.parse().unwrap()
    }

    fn b(pairs: &[(&str, f64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (*k, *v)).collect()
    }

    #[test]
    fn evaluate_examples() {
        let tree = t("B + C / D");
        let v = tree.evaluate(&b(&[("B", 2.0), ("C", 3.0), ("D", 5.0)])).unwrap();
        assert_eq!(v, 2.0 + 3.0 / 5.0);
        assert!((v - 2.6).abs() < 1e-15);

        assert_eq!(ExpressionTree::constant(7.0).evaluate(&Bindings::new()).unwrap(), 7.0);

        let div = ExpressionTree::binary(Operator::Pdiv, ExpressionTree::var("X"), ExpressionTree::var("Y"));
        assert_eq!(div.evaluate(&b(&[("X", 3.0), ("Y", 0.0)])).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_missing_variable() {
        let err = t("A + B").evaluate(&b(&[("A", 1.0)])).unwrap_err();
        assert_eq!(err, Error::MissingVariable("B".into()));
    }

    #[test]
    fn node_values_examples() {
        let tree = t("B + C / D");
        let vals = tree.evaluate_nodes(&b(&[("B", 2.0), ("C", 3.0), ("D", 5.0)])).unwrap();
        assert_eq!(vals.as_slice(), &[2.0 + 3.0 / 5.0, 2.0, 3.0 / 5.0, 3.0, 5.0]);

        let vals = ExpressionTree::constant(4.0).evaluate_nodes(&Bindings::new()).unwrap();
        assert_eq!(vals.as_slice(), &[4.0]);

        let vals = t("A * A").evaluate_nodes(&b(&[("A", 3.0)])).unwrap();
        assert_eq!(vals.as_slice(), &[9.0, 3.0, 3.0]);
    }

    #[test]
    fn batch_examples() {
        let data = Dataset::from_columns(vec![
            ("B".to_string(), vec![2.0, 0.0]),
            ("C".to_string(), vec![3.0, 1.0]),
            ("D".to_string(), vec![5.0, 2.0]),
        ])
        .unwrap();
        assert_eq!(t("B + C / D").evaluate_batch(&data).unwrap(), vec![2.0 + 0.6, 0.5]);

        let zero = ExpressionTree::constant(0.0).evaluate_batch(&data).unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);

        let single = Dataset::from_columns(vec![("A".to_string(), vec![1.5, -2.0])]).unwrap();
        assert_eq!(ExpressionTree::var("A").evaluate_batch(&single).unwrap(), vec![1.5, -2.0]);

        let err = t("A + Q").evaluate_batch(&single).unwrap_err();
        assert_eq!(err, Error::MissingVariable("Q".into()));
    }

    #[test]
    fn constant_batch_has_row_count() {
        let data = Dataset::from_columns(vec![("A".to_string(), vec![1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(ExpressionTree::constant(0.0).evaluate_batch(&data).unwrap(), vec![0.0; 3]);
    }
}
