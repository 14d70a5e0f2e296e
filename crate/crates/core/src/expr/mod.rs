//! Expression trees over dataset variables, constants and binary arithmetic.
//!
//! A tree is stored as its preorder symbol sequence. The preorder position of
//! a node is its [`NodeId`]: ids are dense, start at 0 for the root, and are
//! reassigned by any structural edit. A subtree always occupies a contiguous
//! range of the sequence, which keeps crossover and pruning to slice splices.

mod dot;
mod eval;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eval::NodeValues;

/// Preorder position of a node within its tree.
pub type NodeId = usize;

/// Denominators smaller than this in magnitude make [`pdiv`] return 1.
pub const PDIV_EPSILON: f64 = 1e-6;

/// Protected division: `x / y`, or `1.0` when `|y| < PDIV_EPSILON`.
#[inline]
pub fn pdiv(x: f64, y: f64) -> f64 {
    if y.abs() >= PDIV_EPSILON {
        x / y
    } else {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Add,
    Sub,
    Mul,
    Pdiv,
}

impl Operator {
    pub const ALL: [Operator; 4] = [Operator::Add, Operator::Sub, Operator::Mul, Operator::Pdiv];

    pub fn arity(self) -> usize {
        2
    }

    #[inline]
    pub fn apply(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Operator::Add => lhs + rhs,
            Operator::Sub => lhs - rhs,
            Operator::Mul => lhs * rhs,
            Operator::Pdiv => pdiv(lhs, rhs),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Operator::Add => "+",
            Operator::Sub => "-",
            Operator::Mul => "*",
            Operator::Pdiv => "/",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Operator::Add => "add",
            Operator::Sub => "sub",
            Operator::Mul => "mul",
            Operator::Pdiv => "pdiv",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Payload of a single node.
#[derive(Clone, Debug, PartialEq)]
pub enum Symbol {
    Var(String),
    Const(f64),
    Op(Operator),
}

impl Symbol {
    pub fn arity(&self) -> usize {
        match self {
            Symbol::Op(op) => op.arity(),
            _ => 0,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.arity() == 0
    }
}

/// Variable assignment used to evaluate a tree at a single point.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Option<f64> {
        self.0.insert(name.into(), value)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Bindings(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// A validated expression tree in preorder form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NestedNode", into = "NestedNode")]
pub struct ExpressionTree {
    nodes: Vec<Symbol>,
}

impl ExpressionTree {
    /// Builds a tree from a preorder symbol sequence, checking that it forms
    /// exactly one complete tree with nonempty names and finite constants.
    pub fn from_preorder(nodes: Vec<Symbol>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::MalformedTree("empty symbol sequence".into()));
        }
        let mut open = 1usize;
        for (i, sym) in nodes.iter().enumerate() {
            if open == 0 {
                return Err(Error::MalformedTree(format!(
                    "trailing symbols after complete tree at position {i}"
                )));
            }
            match sym {
                Symbol::Var(name) if name.is_empty() => {
                    return Err(Error::MalformedTree(format!("empty variable name at node {i}")))
                }
                Symbol::Const(v) if !v.is_finite() => {
                    return Err(Error::MalformedTree(format!("non-finite constant at node {i}")))
                }
                _ => {}
            }
            open = open - 1 + sym.arity();
        }
        if open != 0 {
            return Err(Error::MalformedTree(format!("{open} operand(s) missing")));
        }
        Ok(Self { nodes })
    }

    pub fn var(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "variable name must be nonempty");
        Self { nodes: vec![Symbol::Var(name)] }
    }

    pub fn constant(value: f64) -> Self {
        assert!(value.is_finite(), "constant must be finite");
        Self { nodes: vec![Symbol::Const(value)] }
    }

    pub fn binary(op: Operator, lhs: ExpressionTree, rhs: ExpressionTree) -> Self {
        let mut nodes = Vec::with_capacity(1 + lhs.nodes.len() + rhs.nodes.len());
        nodes.push(Symbol::Op(op));
        nodes.extend(lhs.nodes);
        nodes.extend(rhs.nodes);
        Self { nodes }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.nodes
    }

    pub fn symbol(&self, id: NodeId) -> Option<&Symbol> {
        self.nodes.get(id)
    }

    pub fn root(&self) -> NodeId {
        0
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        self.subtree_depth(0)
    }

    /// One past the last node id of the subtree rooted at `id`.
    pub fn subtree_end(&self, id: NodeId) -> NodeId {
        let mut open = 1usize;
        let mut j = id;
        while open > 0 {
            open = open - 1 + self.nodes[j].arity();
            j += 1;
        }
        j
    }

    pub fn subtree_depth(&self, id: NodeId) -> usize {
        let end = self.subtree_end(id);
        let mut heights: Vec<usize> = Vec::new();
        for sym in self.nodes[id..end].iter().rev() {
            let arity = sym.arity();
            let h = if arity == 0 {
                0
            } else {
                let start = heights.len() - arity;
                let h = 1 + heights[start..].iter().copied().max().unwrap_or(0);
                heights.truncate(start);
                h
            };
            heights.push(h);
        }
        heights.pop().unwrap_or(0)
    }

    /// Depth of every node measured from the root (root = 0).
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = vec![0; self.nodes.len()];
        let mut pending: Vec<(usize, usize)> = Vec::new();
        for (i, sym) in self.nodes.iter().enumerate() {
            let d = match pending.last_mut() {
                Some((depth, remaining)) => {
                    let d = *depth + 1;
                    *remaining -= 1;
                    if *remaining == 0 {
                        pending.pop();
                    }
                    d
                }
                None => 0,
            };
            depths[i] = d;
            if sym.arity() > 0 {
                pending.push((d, sym.arity()));
            }
        }
        depths
    }

    /// Ids of the direct children of `id`, in operand order.
    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes[id].arity());
        let mut next = id + 1;
        for _ in 0..self.nodes[id].arity() {
            out.push(next);
            next = self.subtree_end(next);
        }
        out
    }

    /// Parent id of every node; the root maps to `None`.
    pub fn parents(&self) -> Vec<Option<NodeId>> {
        let mut parents = vec![None; self.nodes.len()];
        for id in 0..self.nodes.len() {
            for child in self.children(id) {
                parents[child] = Some(id);
            }
        }
        parents
    }

    pub fn subtree(&self, id: NodeId) -> ExpressionTree {
        let end = self.subtree_end(id);
        Self { nodes: self.nodes[id..end].to_vec() }
    }

    /// Returns a copy with the subtree at `id` replaced by `replacement`.
    pub fn replace_subtree(&self, id: NodeId, replacement: &ExpressionTree) -> ExpressionTree {
        let end = self.subtree_end(id);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - id) + replacement.nodes.len());
        nodes.extend_from_slice(&self.nodes[..id]);
        nodes.extend_from_slice(&replacement.nodes);
        nodes.extend_from_slice(&self.nodes[end..]);
        Self { nodes }
    }

    /// Every variable name appearing at a leaf.
    pub fn dependency_set(&self) -> BTreeSet<String> {
        self.nodes
            .iter()
            .filter_map(|s| match s {
                Symbol::Var(name) => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    /// Whether the subtree at `id` contains a leaf referencing `name`.
    pub fn subtree_references(&self, id: NodeId, name: &str) -> bool {
        let end = self.subtree_end(id);
        self.nodes[id..end]
            .iter()
            .any(|s| matches!(s, Symbol::Var(v) if v == name))
    }

    /// Fully parenthesized infix rendering.
    pub fn to_infix(&self) -> String {
        let mut out = String::with_capacity(self.nodes.len() * 4);
        self.write_infix(0, &mut out);
        out
    }

    fn write_infix(&self, id: NodeId, out: &mut String) -> NodeId {
        match &self.nodes[id] {
            Symbol::Var(name) => {
                out.push_str(name);
                id + 1
            }
            Symbol::Const(v) => {
                out.push_str(&format_constant(*v));
                id + 1
            }
            Symbol::Op(op) => {
                out.push('(');
                let next = self.write_infix(id + 1, out);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                let end = self.write_infix(next, out);
                out.push(')');
                end
            }
        }
    }
}

impl fmt::Display for ExpressionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}

/// Shortest round-trip decimal rendering of a constant.
pub fn format_constant(v: f64) -> String {
    format!("{v}")
}

/// Nested JSON form of a tree: `{"var": ..}`, `{"const": ..}` or
/// `{"op": .., "children": [..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NestedNode {
    Var {
        var: String,
    },
    Const {
        #[serde(rename = "const")]
        value: f64,
    },
    Op {
        op: Operator,
        children: Vec<NestedNode>,
    },
}

impl NestedNode {
    fn flatten_into(self, out: &mut Vec<Symbol>) -> Result<()> {
        match self {
            NestedNode::Var { var } => out.push(Symbol::Var(var)),
            NestedNode::Const { value } => out.push(Symbol::Const(value)),
            NestedNode::Op { op, children } => {
                if children.len() != op.arity() {
                    return Err(Error::MalformedTree(format!(
                        "`{op}` expects {} children, found {}",
                        op.arity(),
                        children.len()
                    )));
                }
                out.push(Symbol::Op(op));
                for child in children {
                    child.flatten_into(out)?;
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<NestedNode> for ExpressionTree {
    type Error = Error;

    fn try_from(node: NestedNode) -> Result<Self> {
        let mut nodes = Vec::new();
        node.flatten_into(&mut nodes)?;
        ExpressionTree::from_preorder(nodes)
    }
}

impl From<ExpressionTree> for NestedNode {
    fn from(tree: ExpressionTree) -> Self {
        fn build(nodes: &[Symbol], pos: &mut usize) -> NestedNode {
            let sym = &nodes[*pos];
            *pos += 1;
            match sym {
                Symbol::Var(name) => NestedNode::Var { var: name.clone() },
                Symbol::Const(v) => NestedNode::Const { value: *v },
                Symbol::Op(op) => {
                    let children = (0..op.arity()).map(|_| build(nodes, pos)).collect();
                    NestedNode::Op { op: *op, children }
                }
            }
        }
        let mut pos = 0;
        build(&tree.nodes, &mut pos)
    }
}
