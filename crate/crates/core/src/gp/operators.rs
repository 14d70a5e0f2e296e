//! Tree generation and the genetic operators: tournament selection, subtree
//! crossover, and subtree/point mutation.

use rand::Rng as _;

use super::{GpConfig, Individual};
use crate::error::{Error, Result};
use crate::expr::{ExpressionTree, NodeId, Operator, Symbol};
use crate::rng::Rng;

/// Subtree mutation draws replacement subtrees at most this deep.
pub const MUTATION_SUBTREE_DEPTH: usize = 2;
/// Subtree mutations exceeding `max_depth` are redrawn this many times before
/// falling back to a point mutation.
pub const MUTATION_RETRIES: usize = 10;

/// Primitive set the generators draw from.
#[derive(Clone, Debug)]
pub struct Primitives<'a> {
    pub variables: &'a [String],
    pub operators: &'a [Operator],
    pub constant_range: (f64, f64),
}

impl<'a> Primitives<'a> {
    pub fn new(variables: &'a [String], config: &'a GpConfig) -> Self {
        Self { variables, operators: &config.operators, constant_range: config.constant_range }
    }

    /// A variable (probability `v / (v + 1)` for `v` variables) or an
    /// ephemeral constant.
    pub fn random_leaf(&self, rng: &mut Rng) -> Symbol {
        let n = self.variables.len();
        let pick = rng.random_range(0..=n);
        if pick < n {
            Symbol::Var(self.variables[pick].clone())
        } else {
            let (lo, hi) = self.constant_range;
            Symbol::Const(rng.random_range(lo..hi))
        }
    }

    fn random_operator(&self, rng: &mut Rng) -> Operator {
        self.operators[rng.random_range(0..self.operators.len())]
    }

    /// Appends a random tree of depth in `[min_depth, max_depth]` in preorder.
    /// `full` trees place every leaf at `max_depth`; grown trees stop early at
    /// random once `min_depth` is reached.
    fn generate_into(&self, out: &mut Vec<Symbol>, depth: usize, min_depth: usize, max_depth: usize, full: bool, rng: &mut Rng) {
        let leaf = if depth >= max_depth {
            true
        } else if depth < min_depth || full {
            false
        } else {
            let terminals = self.variables.len() + 1;
            rng.random_range(0..terminals + self.operators.len()) < terminals
        };
        if leaf {
            out.push(self.random_leaf(rng));
        } else {
            let op = self.random_operator(rng);
            out.push(Symbol::Op(op));
            for _ in 0..op.arity() {
                self.generate_into(out, depth + 1, min_depth, max_depth, full, rng);
            }
        }
    }

    pub fn full(&self, depth: usize, rng: &mut Rng) -> ExpressionTree {
        let mut out = Vec::new();
        self.generate_into(&mut out, 0, depth, depth, true, rng);
        ExpressionTree::from_preorder(out).expect("generator emits complete trees")
    }

    pub fn grow(&self, min_depth: usize, max_depth: usize, rng: &mut Rng) -> ExpressionTree {
        let mut out = Vec::new();
        self.generate_into(&mut out, 0, min_depth, max_depth, false, rng);
        ExpressionTree::from_preorder(out).expect("generator emits complete trees")
    }
}

/// Ramped half-and-half: individual `i` gets target depth
/// `min + i mod span`, alternating full and grow every `span` individuals.
pub fn ramped_half_and_half(n: usize, prims: &Primitives<'_>, range: (usize, usize), rng: &mut Rng) -> Vec<ExpressionTree> {
    let (lo, hi) = range;
    let span = hi - lo + 1;
    (0..n)
        .map(|i| {
            let depth = lo + i % span;
            if (i / span) % 2 == 0 {
                prims.full(depth, rng)
            } else {
                prims.grow(lo, depth, rng)
            }
        })
        .collect()
}

fn better(a: &Individual, ia: usize, b: &Individual, ib: usize) -> bool {
    (a.fitness, a.tree.size(), ia) < (b.fitness, b.tree.size(), ib)
}

/// Tournament selection with replacement. Returns the index of the winner:
/// lowest fitness, then smallest tree, then earliest index.
pub fn select(population: &[Individual], tournament_size: usize, rng: &mut Rng) -> Result<usize> {
    if population.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut best = rng.random_range(0..population.len());
    for _ in 1..tournament_size.max(1) {
        let i = rng.random_range(0..population.len());
        if better(&population[i], i, &population[best], best) {
            best = i;
        }
    }
    Ok(best)
}

/// Indices of the `k` best individuals under the selection ordering.
pub fn elite_indices(population: &[Individual], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..population.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&population[a], &population[b]);
        x.fitness
            .total_cmp(&y.fitness)
            .then(x.tree.size().cmp(&y.tree.size()))
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Swaps the subtree at `at_a` of `a` with the subtree at `at_b` of `b`.
/// A child deeper than `max_depth` is replaced by a copy of its parent.
pub fn crossover_at(
    a: &ExpressionTree,
    b: &ExpressionTree,
    at_a: NodeId,
    at_b: NodeId,
    max_depth: usize,
) -> (ExpressionTree, ExpressionTree) {
    let child_a = a.replace_subtree(at_a, &b.subtree(at_b));
    let child_b = b.replace_subtree(at_b, &a.subtree(at_a));
    let child_a = if child_a.depth() > max_depth { a.clone() } else { child_a };
    let child_b = if child_b.depth() > max_depth { b.clone() } else { child_b };
    (child_a, child_b)
}

/// Subtree crossover at uniformly chosen nodes.
pub fn crossover(
    a: &ExpressionTree,
    b: &ExpressionTree,
    max_depth: usize,
    rng: &mut Rng,
) -> (ExpressionTree, ExpressionTree) {
    let at_a = rng.random_range(0..a.size());
    let at_b = rng.random_range(0..b.size());
    crossover_at(a, b, at_a, at_b, max_depth)
}

/// Replaces the symbol at `id` with a same-arity alternative: another
/// operator from the primitive set (unchanged when none exists) or a random
/// leaf.
pub fn point_mutate_at(tree: &ExpressionTree, id: NodeId, prims: &Primitives<'_>, rng: &mut Rng) -> ExpressionTree {
    let replacement = match &tree.symbols()[id] {
        Symbol::Op(op) => {
            let alternatives: Vec<Operator> = prims
                .operators
                .iter()
                .copied()
                .filter(|o| o != op && o.arity() == op.arity())
                .collect();
            if alternatives.is_empty() {
                return tree.clone();
            }
            Symbol::Op(alternatives[rng.random_range(0..alternatives.len())])
        }
        _ => prims.random_leaf(rng),
    };
    let mut nodes = tree.symbols().to_vec();
    nodes[id] = replacement;
    ExpressionTree::from_preorder(nodes).expect("arity-preserving edit")
}

/// Either a subtree replacement (fresh grown subtree of depth at most
/// [`MUTATION_SUBTREE_DEPTH`]) or a point mutation, with equal probability.
pub fn mutate(tree: &ExpressionTree, variables: &[String], config: &GpConfig, rng: &mut Rng) -> ExpressionTree {
    let prims = Primitives::new(variables, config);
    if rng.random_bool(0.5) {
        let depths = tree.node_depths();
        for _ in 0..MUTATION_RETRIES {
            let id = rng.random_range(0..tree.size());
            let fresh = prims.grow(0, MUTATION_SUBTREE_DEPTH, rng);
            if depths[id] + fresh.depth() <= config.max_depth {
                return tree.replace_subtree(id, &fresh);
            }
        }
    }
    let id = rng.random_range(0..tree.size());
    point_mutate_at(tree, id, &prims, rng)
}
