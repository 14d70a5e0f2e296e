//! Genetic-programming symbolic regression.
//!
//! Each generation is evaluated, the elite is copied unchanged, and the rest
//! of the next population is bred by tournament selection, subtree crossover
//! and mutation. Generation `t` breeds from the random stream
//! `(seed, t, Role::Breed)`; the initial population uses `(seed, 0, Role::Init)`.
//! Fitness evaluation runs in parallel and does not touch the random streams,
//! so results are identical regardless of thread count.

mod config;
mod model;
pub mod operators;

use std::collections::HashSet;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::expr::ExpressionTree;
use crate::rng::{stream, Role};

pub use config::{GpConfig, STAGNATION_TOLERANCE};
pub use model::{write_history_csv, ModelDocument, HISTORY_HEADER, MODEL_FORMAT, MODEL_VERSION};
pub use operators::{crossover, mutate, select, Primitives};

/// Fitness assigned when a tree's error is not finite.
pub const PENALTY_FITNESS: f64 = 1e300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub tree: ExpressionTree,
    /// `raw_mse + parsimony_coeff * size`; lower is better.
    pub fitness: f64,
    pub raw_mse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub min_fitness: f64,
    pub mean_fitness: f64,
    pub diversity: f64,
    pub best_expression: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxGenerations,
    FitnessThreshold,
    Stagnation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Best individual seen in any generation.
    pub best: Individual,
    pub history: Vec<GenerationStats>,
    pub terminated_by: Termination,
    pub response: String,
    pub variables: Vec<String>,
}

/// Mean squared error of `tree` against the response column, plus the
/// parsimony penalty. Returns `(fitness, raw_mse)`.
pub fn fitness(tree: &ExpressionTree, data: &Dataset, response: &str, parsimony_coeff: f64) -> Result<(f64, f64)> {
    let target = data.require(response)?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let predictions = tree.evaluate_batch(data)?;
    let sse: f64 = predictions.iter().zip(target).map(|(p, y)| (p - y) * (p - y)).sum();
    let mse = sse / data.n_rows() as f64;
    let raw_mse = if mse.is_finite() { mse } else { PENALTY_FITNESS };
    let fitness = raw_mse + parsimony_coeff * tree.size() as f64;
    Ok((fitness, raw_mse))
}

/// `(distinct infix forms - 1) / (population size - 1)`; 0 for a single
/// individual.
pub fn diversity(population: &[Individual]) -> Result<f64> {
    if population.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if population.len() == 1 {
        return Ok(0.0);
    }
    let distinct: HashSet<String> = population.iter().map(|i| i.tree.to_infix()).collect();
    Ok((distinct.len() - 1) as f64 / (population.len() - 1) as f64)
}

fn evaluate_all(trees: Vec<ExpressionTree>, data: &Dataset, response: &str, parsimony: f64) -> Result<Vec<Individual>> {
    trees
        .into_par_iter()
        .map(|tree| {
            let (fitness, raw_mse) = fitness(&tree, data, response, parsimony)?;
            Ok(Individual { tree, fitness, raw_mse })
        })
        .collect()
}

fn check_variables(variables: &[String]) -> Result<()> {
    if variables.is_empty() {
        return Err(Error::InvalidConfig("at least one predictor variable is required".into()));
    }
    Ok(())
}

/// Initial trees for `config.seed`: `population_size` ramped half-and-half
/// trees over `variables` and ephemeral constants.
pub fn init_trees(config: &GpConfig, variables: &[String]) -> Result<Vec<ExpressionTree>> {
    config.validate()?;
    check_variables(variables)?;
    let prims = Primitives::new(variables, config);
    let mut rng = stream(config.seed, 0, Role::Init);
    Ok(operators::ramped_half_and_half(config.population_size, &prims, config.init_depth_range, &mut rng))
}

/// Initial population, evaluated against `data`.
pub fn init_population(config: &GpConfig, variables: &[String], data: &Dataset, response: &str) -> Result<Vec<Individual>> {
    let trees = init_trees(config, variables)?;
    evaluate_all(trees, data, response, config.parsimony_coeff)
}

fn generation_stats(generation: usize, population: &[Individual]) -> Result<GenerationStats> {
    let best = &population[operators::elite_indices(population, 1)[0]];
    let n = population.len() as f64;
    let mean = population.iter().map(|i| i.fitness / n).sum::<f64>();
    Ok(GenerationStats {
        generation,
        min_fitness: best.fitness,
        // Guards against rounding in the sum when all fitness values are equal.
        mean_fitness: mean.max(best.fitness),
        diversity: diversity(population)?,
        best_expression: best.tree.to_infix(),
    })
}

fn breed(population: &[Individual], variables: &[String], config: &GpConfig, generation: usize) -> Result<Vec<ExpressionTree>> {
    let mut rng = stream(config.seed, generation as u64, Role::Breed);
    let n = config.population_size;
    let mut next: Vec<ExpressionTree> = operators::elite_indices(population, config.elitism_count)
        .into_iter()
        .map(|i| population[i].tree.clone())
        .collect();
    while next.len() < n {
        let a = select(population, config.tournament_size, &mut rng)?;
        let mut offspring = if rng.random_bool(config.crossover_prob) {
            let b = select(population, config.tournament_size, &mut rng)?;
            let (x, y) = crossover(&population[a].tree, &population[b].tree, config.max_depth, &mut rng);
            vec![x, y]
        } else {
            vec![population[a].tree.clone()]
        };
        offspring.truncate(n - next.len());
        for child in offspring {
            let child = if rng.random_bool(config.mutation_prob) {
                mutate(&child, variables, config, &mut rng)
            } else {
                child
            };
            next.push(child);
        }
    }
    Ok(next)
}

/// Fits `response` using every other column of `data` as a predictor.
pub fn evolve(data: &Dataset, response: &str, config: &GpConfig) -> Result<FitResult> {
    let predictors: Vec<String> = data.names().filter(|n| *n != response).map(str::to_string).collect();
    evolve_with_predictors(data, response, &predictors, config)
}

/// Fits `response` as a function of `predictors`.
pub fn evolve_with_predictors(data: &Dataset, response: &str, predictors: &[String], config: &GpConfig) -> Result<FitResult> {
    config.validate()?;
    check_variables(predictors)?;
    data.require(response)?;
    for p in predictors {
        if p == response {
            return Err(Error::InvalidConfig(format!("response `{response}` cannot also be a predictor")));
        }
        if !data.has_column(p) {
            return Err(Error::MissingVariable(p.clone()));
        }
    }
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if data.n_rows() < 2 {
        return Err(Error::InvalidConfig("at least two rows are required".into()));
    }

    let mut population = init_population(config, predictors, data, response)?;
    let mut history = Vec::with_capacity(config.generations);
    let mut best: Option<Individual> = None;
    let mut flat_generations = 0usize;
    let mut generation = 0usize;
    let terminated_by = loop {
        let stats = generation_stats(generation, &population)?;
        let gen_best = &population[operators::elite_indices(&population, 1)[0]];
        match &best {
            Some(b) if stats.min_fitness < b.fitness - STAGNATION_TOLERANCE => flat_generations = 0,
            Some(_) => flat_generations += 1,
            None => {}
        }
        if best.as_ref().is_none_or(|b| gen_best.fitness < b.fitness) {
            best = Some(gen_best.clone());
        }
        log::debug!(
            "gen {generation}: min {:.6e} mean {:.6e} diversity {:.3} best {}",
            stats.min_fitness,
            stats.mean_fitness,
            stats.diversity,
            stats.best_expression
        );
        history.push(stats);

        let best_fitness = best.as_ref().map(|b| b.fitness).unwrap_or(f64::INFINITY);
        if best_fitness <= config.fitness_threshold {
            break Termination::FitnessThreshold;
        }
        if config.stagnation_generations > 0 && flat_generations >= config.stagnation_generations {
            break Termination::Stagnation;
        }
        if generation + 1 >= config.generations {
            break Termination::MaxGenerations;
        }
        generation += 1;
        let trees = breed(&population, predictors, config, generation)?;
        population = evaluate_all(trees, data, response, config.parsimony_coeff)?;
    };

    Ok(FitResult {
        best: best.expect("at least one generation evaluated"),
        history,
        terminated_by,
        response: response.to_string(),
        variables: predictors.to_vec(),
    })
}
