use std::collections::BTreeMap;
use std::fmt::Write;

use super::{format_constant, ExpressionTree, NodeId, Symbol};
use crate::error::{Error, Result};

fn escape(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

impl ExpressionTree {
    /// Graphviz rendering. Variables are boxes, constants dashed boxes and
    /// operators ellipses; edges run from child to parent, the direction in
    /// which values flow. Annotations are appended to the node label on a
    /// second line.
    pub fn to_dot(&self, annotations: Option<&BTreeMap<NodeId, String>>) -> Result<String> {
        if let Some(ann) = annotations {
            if let Some((&bad, _)) = ann.iter().find(|(id, _)| **id >= self.nodes.len()) {
                return Err(Error::UnknownNodeId(bad));
            }
        }
        let mut out = String::new();
        out.push_str("digraph expression {\n");
        out.push_str("  rankdir=BT;\n");
        for (id, sym) in self.nodes.iter().enumerate() {
            let (text, shape) = match sym {
                Symbol::Var(name) => (name.clone(), "shape=box"),
                Symbol::Const(v) => (format_constant(*v), "shape=box, style=dashed"),
                Symbol::Op(op) => (op.symbol().to_string(), "shape=ellipse"),
            };
            let label = match annotations.and_then(|a| a.get(&id)) {
                Some(note) => format!("{text}\n{note}"),
                None => text,
            };
            let _ = writeln!(out, "  n{id} [label=\"{}\", {shape}];", escape(&label));
        }
        for (child, parent) in self.parents().into_iter().enumerate() {
            if let Some(parent) = parent {
                let _ = writeln!(out, "  n{child} -> n{parent};");
            }
        }
        out.push_str("}\n");
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node() {
        let dot = ExpressionTree::constant(2.0).to_dot(None).unwrap();
        assert_eq!(dot.matches("[label=").count(), 1);
        assert_eq!(dot.matches("->").count(), 0);
    }

    #[test]
    fn shapes_edges_and_annotations() {
        let tree: ExpressionTree = "B + C / D".parse().unwrap();
        let dot = tree.to_dot(None).unwrap();
        assert_eq!(dot.matches("[label=").count(), 5);
        assert_eq!(dot.matches("->").count(), 4);
        assert!(dot.contains("n1 [label=\"B\", shape=box];"));
        assert!(dot.contains("n0 [label=\"+\", shape=ellipse];"));
        assert!(dot.contains("n3 -> n2;"));

        let ann = BTreeMap::from([(0, "+0.105".to_string())]);
        let dot = tree.to_dot(Some(&ann)).unwrap();
        assert!(dot.contains("n0 [label=\"+\\n+0.105\", shape=ellipse];"));
    }

    #[test]
    fn stray_annotation_rejected() {
        let tree: ExpressionTree = "B + C".parse().unwrap();
        let ann = BTreeMap::from([(9, "x".to_string())]);
        assert_eq!(tree.to_dot(Some(&ann)).unwrap_err(), Error::UnknownNodeId(9));
    }

    #[test]
    fn labels_are_escaped() {
        let tree = ExpressionTree::var("we\"ird");
        let dot = tree.to_dot(None).unwrap();
        assert!(dot.contains(r#"label="we\"ird""#));
    }
}
