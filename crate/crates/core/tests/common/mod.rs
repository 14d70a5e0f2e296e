#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ecd_core::expr::Symbol;
use ecd_core::{Bindings, ExpressionTree, Operator};
use proptest::prelude::*;
use rand::Rng;

pub const VARS: [&str; 4] = ["A", "B", "C", "D"];

fn leaf<R: Rng>(rng: &mut R) -> Symbol {
    if rng.random_bool(0.6) {
        Symbol::Var(VARS[rng.random_range(0..VARS.len())].to_string())
    } else {
        Symbol::Const((rng.random_range(-50..=50) as f64) / 10.0)
    }
}

fn push_random<R: Rng>(rng: &mut R, depth: usize, out: &mut Vec<Symbol>) {
    if depth == 0 || (!out.is_empty() && rng.random_bool(0.3)) {
        out.push(leaf(rng));
        return;
    }
    out.push(Symbol::Op(Operator::ALL[rng.random_range(0..4)]));
    push_random(rng, depth - 1, out);
    push_random(rng, depth - 1, out);
}

/// Random tree of depth at most `max_depth` over [`VARS`].
pub fn random_tree<R: Rng>(rng: &mut R, max_depth: usize) -> ExpressionTree {
    let mut nodes = Vec::new();
    push_random(rng, max_depth, &mut nodes);
    ExpressionTree::from_preorder(nodes).unwrap()
}

pub fn random_bindings<R: Rng>(rng: &mut R) -> Bindings {
    VARS.iter().map(|v| (*v, rng.random_range(-10.0..10.0))).collect()
}

pub fn arb_tree(max_depth: u32) -> impl Strategy<Value = ExpressionTree> {
    let leaf = prop_oneof![
        prop::sample::select(VARS.to_vec()).prop_map(|v| vec![Symbol::Var(v.to_string())]),
        (-1000i32..1000).prop_map(|c| vec![Symbol::Const(c as f64 / 100.0)]),
    ];
    leaf.prop_recursive(max_depth, 64, 2, |inner| {
        (0usize..4, inner.clone(), inner).prop_map(|(op, l, r)| {
            let mut v = vec![Symbol::Op(Operator::ALL[op])];
            v.extend(l);
            v.extend(r);
            v
        })
    })
    .prop_map(|nodes| ExpressionTree::from_preorder(nodes).unwrap())
}

pub fn arb_bindings() -> impl Strategy<Value = Bindings> {
    prop::array::uniform4(-100.0f64..100.0).prop_map(|xs| VARS.iter().copied().zip(xs).collect())
}

fn protected(x: f64, y: f64) -> f64 {
    if y.abs() < 1e-6 {
        1.0
    } else {
        x / y
    }
}

/// Recursive evaluator that shares nothing with the library's interpreter.
pub fn naive_eval(tree: &ExpressionTree, v: &Bindings) -> f64 {
    fn go(s: &[Symbol], pos: &mut usize, v: &Bindings) -> f64 {
        let sym = &s[*pos];
        *pos += 1;
        match sym {
            Symbol::Var(n) => v.get(n).unwrap(),
            Symbol::Const(c) => *c,
            Symbol::Op(op) => {
                let a = go(s, pos, v);
                let b = go(s, pos, v);
                match op {
                    Operator::Add => a + b,
                    Operator::Sub => a - b,
                    Operator::Mul => a * b,
                    Operator::Pdiv => protected(a, b),
                }
            }
        }
    }
    go(tree.symbols(), &mut 0, v)
}

/// Value and symbolic partial derivative with respect to `var`, plus the
/// smallest absolute division denominator met on the way.
pub fn value_and_partial(tree: &ExpressionTree, v: &Bindings, var: &str) -> (f64, f64, f64) {
    fn go(s: &[Symbol], pos: &mut usize, v: &Bindings, var: &str, min_den: &mut f64) -> (f64, f64) {
        let sym = &s[*pos];
        *pos += 1;
        match sym {
            Symbol::Var(n) => (v.get(n).unwrap(), if n == var { 1.0 } else { 0.0 }),
            Symbol::Const(c) => (*c, 0.0),
            Symbol::Op(op) => {
                let (a, da) = go(s, pos, v, var, min_den);
                let (b, db) = go(s, pos, v, var, min_den);
                match op {
                    Operator::Add => (a + b, da + db),
                    Operator::Sub => (a - b, da - db),
                    Operator::Mul => (a * b, da * b + a * db),
                    Operator::Pdiv => {
                        *min_den = min_den.min(b.abs());
                        (a / b, (da * b - a * db) / (b * b))
                    }
                }
            }
        }
    }
    let mut min_den = f64::INFINITY;
    let (f, d) = go(tree.symbols(), &mut 0, v, var, &mut min_den);
    (f, d, min_den)
}

#[derive(Debug)]
pub struct DotGraph {
    pub labels: BTreeMap<String, String>,
    pub edges: Vec<(String, String)>,
}

/// Minimal parser for the subset of DOT the library writes: one `digraph`
/// block with `id [attrs];` node statements, `a -> b;` edges and graph
/// attributes `key=value;`.
pub fn parse_dot(text: &str) -> Result<DotGraph, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let head = lines.next().ok_or("empty document")?;
    let name = head
        .strip_prefix("digraph ")
        .and_then(|r| r.strip_suffix('{'))
        .ok_or_else(|| format!("bad header `{head}`"))?;
    if name.trim().is_empty() || !name.trim().chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(format!("bad graph id `{name}`"));
    }
    let mut labels = BTreeMap::new();
    let mut edges = Vec::new();
    let mut closed = false;
    for line in lines {
        if closed {
            return Err(format!("content after closing brace: `{line}`"));
        }
        if line == "}" {
            closed = true;
            continue;
        }
        let stmt = line.strip_suffix(';').ok_or_else(|| format!("missing `;` in `{line}`"))?;
        if let Some((a, b)) = stmt.split_once(" -> ") {
            edges.push((ident(a)?, ident(b)?));
        } else if let Some((id, rest)) = stmt.split_once(" [") {
            let attrs = rest.strip_suffix(']').ok_or_else(|| format!("unterminated attributes in `{line}`"))?;
            let label = attrs
                .strip_prefix("label=\"")
                .and_then(quoted_prefix)
                .ok_or_else(|| format!("missing label in `{line}`"))?;
            if labels.insert(ident(id)?, label).is_some() {
                return Err(format!("duplicate node `{id}`"));
            }
        } else if stmt.split_once('=').is_some_and(|(k, _)| ident(k).is_ok()) {
            continue;
        } else {
            return Err(format!("unrecognized statement `{line}`"));
        }
    }
    if !closed {
        return Err("missing closing brace".into());
    }
    for (a, b) in &edges {
        for end in [a, b] {
            if !labels.contains_key(end) {
                return Err(format!("edge references undeclared node `{end}`"));
            }
        }
    }
    Ok(DotGraph { labels, edges })
}

fn ident(s: &str) -> Result<String, String> {
    let s = s.trim();
    if !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_') {
        Ok(s.to_string())
    } else {
        Err(format!("bad identifier `{s}`"))
    }
}

/// Content of a quoted string whose opening quote was already consumed,
/// honoring backslash escapes. Returns `None` if the quote never closes.
fn quoted_prefix(s: &str) -> Option<String> {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next()? {
                'n' => out.push('\n'),
                e => out.push(e),
            },
            '"' => return Some(out),
            _ => out.push(c),
        }
    }
    None
}

impl DotGraph {
    pub fn in_degree(&self, id: &str) -> usize {
        self.edges.iter().filter(|(_, b)| b == id).count()
    }

    pub fn is_acyclic(&self) -> bool {
        let mut indeg: BTreeMap<&str, usize> = self.labels.keys().map(|k| (k.as_str(), 0)).collect();
        for (_, b) in &self.edges {
            *indeg.get_mut(b.as_str()).unwrap() += 1;
        }
        let mut ready: Vec<&str> = indeg.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut seen = 0;
        while let Some(n) = ready.pop() {
            seen += 1;
            for (a, b) in &self.edges {
                if a == n {
                    let d = indeg.get_mut(b.as_str()).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.push(b);
                    }
                }
            }
        }
        seen == self.labels.len()
    }
}

/// Checks a DOT rendering of `tree`: it parses, is acyclic, has one node per
/// tree node, and exactly the variable and constant nodes have no incoming
/// edge while every operator has two.
pub fn check_dot(tree: &ExpressionTree, dot: &str) -> Result<(), String> {
    let g = parse_dot(dot)?;
    if g.labels.len() != tree.size() {
        return Err(format!("{} nodes for a tree of size {}", g.labels.len(), tree.size()));
    }
    if !g.is_acyclic() {
        return Err("cycle".into());
    }
    let ops: BTreeSet<&str> = Operator::ALL.iter().map(|o| o.symbol()).collect();
    for (id, label) in &g.labels {
        let head = label.split('\n').next().unwrap();
        let deg = g.in_degree(id);
        let is_op = ops.contains(head);
        if is_op && deg != 2 {
            return Err(format!("operator {id} has in-degree {deg}"));
        }
        if !is_op && deg != 0 {
            return Err(format!("leaf {id} `{head}` has in-degree {deg}"));
        }
    }
    let sinks = g.labels.keys().filter(|k| !g.edges.iter().any(|(a, _)| a == *k)).count();
    if sinks != 1 {
        return Err(format!("{sinks} nodes without outgoing edge"));
    }
    Ok(())
}
