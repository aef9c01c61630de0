//! Generational evolutionary algorithm over normalized genomes.
//!
//! Each new generation is built in four equal quarters:
//! 1. the best individual, unmutated, plus fitness-proportionate picks (mutated),
//! 2. segment-exchange (PMX) children of fitness-proportionate parents (mutated),
//! 3. freshly randomized genomes,
//! 4. the most novel individuals by mean genome distance (mutated).

use std::cmp::Ordering;
use std::fmt::Display;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gait::GaitGenome;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("cannot select from an empty population")]
    EmptyPopulation,
    #[error("individual {id} has no usable fitness")]
    Unevaluated { id: u64 },
    #[error("parent genomes differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("evaluation of individual {id} in generation {generation} failed: {message}")]
    Evaluation {
        generation: usize,
        id: u64,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_prob: f64,
    pub genome_len: usize,
    pub rng_seed: u64,
}

impl EvolutionConfig {
    pub fn new(genome_len: usize, mutation_prob: f64, rng_seed: u64) -> Self {
        Self {
            population_size: 256,
            generations: 50,
            mutation_prob,
            genome_len,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        if self.population_size == 0 || self.population_size % 4 != 0 {
            return Err(EvolutionError::InvalidConfig(format!(
                "population_size {} must be a positive multiple of 4",
                self.population_size
            )));
        }
        if self.generations == 0 {
            return Err(EvolutionError::InvalidConfig("generations must be >= 1".into()));
        }
        if !(self.mutation_prob > 0.0 && self.mutation_prob <= 1.0) {
            return Err(EvolutionError::InvalidConfig(format!(
                "mutation_prob {} must be in (0, 1]",
                self.mutation_prob
            )));
        }
        if self.genome_len == 0 {
            return Err(EvolutionError::InvalidConfig("genome_len must be >= 1".into()));
        }
        Ok(())
    }
}

/// How an individual entered its generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Initial,
    Elite,
    Parent,
    Child,
    Random,
    Novel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: GaitGenome,
    pub fitness: Option<f64>,
    /// Creation order; used for deterministic tie-breaks and evaluation seeds.
    pub id: u64,
    pub origin: Origin,
}

impl Individual {
    fn fitness_value(&self) -> Result<f64, EvolutionError> {
        match self.fitness {
            Some(f) if f.is_finite() => Ok(f),
            _ => Err(EvolutionError::Unevaluated { id: self.id }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub fitness_mean: f64,
    pub fitness_std: f64,
    pub best_fitness: f64,
    pub gene_mean: Vec<f64>,
    pub gene_std: Vec<f64>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let values: Vec<f64> = values.into_iter().collect();
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl GenerationStats {
    pub fn from_population(
        generation: usize,
        population: &[Individual],
    ) -> Result<Self, EvolutionError> {
        if population.is_empty() {
            return Err(EvolutionError::EmptyPopulation);
        }
        let fitness = population
            .iter()
            .map(Individual::fitness_value)
            .collect::<Result<Vec<_>, _>>()?;
        let (fitness_mean, fitness_std) = mean_std(fitness.iter().copied());
        let best_fitness = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let len = population[0].genome.len();
        let (gene_mean, gene_std) = (0..len)
            .map(|i| mean_std(population.iter().map(|ind| ind.genome.genes()[i])))
            .unzip();
        Ok(Self {
            generation,
            fitness_mean,
            fitness_std,
            best_fitness,
            gene_mean,
            gene_std,
        })
    }
}

/// Seed for evaluating individual `id` in a run seeded with `run_seed`.
pub fn evaluation_seed(run_seed: u64, id: u64) -> u64 {
    splitmix64(run_seed ^ splitmix64(id))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn random_genome<R: Rng + ?Sized>(len: usize, rng: &mut R) -> GaitGenome {
    GaitGenome::clamped((0..len).map(|_| rng.random::<f64>()).collect())
}

/// Roulette-wheel sampling with replacement over min-shifted fitness.
///
/// Weights are `f - min + eps` with `eps = 1e-6 * (max - min + 1)`, so
/// negative fitness is fine and the worst individual is nearly never drawn.
pub fn fitness_proportionate_select<'a, R: Rng + ?Sized>(
    population: &'a [Individual],
    count: usize,
    rng: &mut R,
) -> Result<Vec<&'a Individual>, EvolutionError> {
    if population.is_empty() {
        return Err(EvolutionError::EmptyPopulation);
    }
    let fitness = population
        .iter()
        .map(Individual::fitness_value)
        .collect::<Result<Vec<_>, _>>()?;
    let min = fitness.iter().copied().fold(f64::INFINITY, f64::min);
    let max = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let eps = 1e-6 * (max - min + 1.0);
    let wheel = WeightedIndex::new(fitness.iter().map(|f| f - min + eps))
        .map_err(|e| EvolutionError::InvalidConfig(format!("selection weights: {e}")))?;
    Ok((0..count).map(|_| &population[wheel.sample(rng)]).collect())
}

/// Mean Euclidean genome distance of each individual to all others,
/// returned in the order of `population`.
pub fn novelty_scores(population: &[Individual]) -> Vec<f64> {
    let n = population.len();
    if n < 2 {
        return vec![0.0; n];
    }
    // Sum in id order so scores do not depend on where individuals sit.
    let mut by_id: Vec<usize> = (0..n).collect();
    by_id.sort_by_key(|&i| population[i].id);
    let mut scores = vec![0.0; n];
    for &i in &by_id {
        let total: f64 = by_id
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| population[i].genome.euclidean_distance(&population[j].genome))
            .sum();
        scores[i] = total / (n - 1) as f64;
    }
    scores
}

/// The `count` most novel individuals, ties broken by lower id.
pub fn novelty_select(population: &[Individual], count: usize) -> Vec<&Individual> {
    let scores = novelty_scores(population);
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| population[a].id.cmp(&population[b].id))
    });
    order.into_iter().take(count).map(|i| &population[i]).collect()
}

/// Two-cut segment exchange: genes `[start, end)` from `a`, the rest from `b`.
pub fn pmx_crossover_with_cuts(
    a: &GaitGenome,
    b: &GaitGenome,
    start: usize,
    end: usize,
) -> Result<GaitGenome, EvolutionError> {
    if a.len() != b.len() {
        return Err(EvolutionError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let end = end.min(a.len());
    let start = start.min(end);
    let mut genes = b.genes().to_vec();
    genes[start..end].copy_from_slice(&a.genes()[start..end]);
    Ok(GaitGenome::clamped(genes))
}

/// Partially mapped crossover on real-valued genomes.
///
/// The mapping repair step of permutation PMX never fires on continuous,
/// duplicate-free genes, leaving a plain two-cut segment exchange with the
/// cut pair drawn uniformly from `0..=len`.
pub fn pmx_crossover<R: Rng + ?Sized>(
    a: &GaitGenome,
    b: &GaitGenome,
    rng: &mut R,
) -> Result<GaitGenome, EvolutionError> {
    if a.len() != b.len() {
        return Err(EvolutionError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(a.clone());
    }
    let cuts = index::sample(rng, a.len() + 1, 2);
    let (i, j) = (cuts.index(0), cuts.index(1));
    pmx_crossover_with_cuts(a, b, i.min(j), i.max(j))
}

/// With probability `p` per gene, adds a uniform delta from `[-p², p²)`,
/// then clamps into `[0, 1]`.
pub fn uniform_mutate<R: Rng + ?Sized>(genome: &GaitGenome, p: f64, rng: &mut R) -> GaitGenome {
    let reach = p * p;
    let genes = genome
        .genes()
        .iter()
        .map(|&g| {
            if rng.random::<f64>() < p {
                g + rng.random_range(-reach..reach)
            } else {
                g
            }
        })
        .collect();
    GaitGenome::clamped(genes)
}

/// Best individual: highest fitness, lowest id on ties.
pub fn best_individual(population: &[Individual]) -> Result<&Individual, EvolutionError> {
    let mut best: Option<(&Individual, f64)> = None;
    for ind in population {
        let f = ind.fitness_value()?;
        let better = match best {
            None => true,
            Some((b, bf)) => match f.total_cmp(&bf) {
                Ordering::Greater => true,
                Ordering::Equal => ind.id < b.id,
                Ordering::Less => false,
            },
        };
        if better {
            best = Some((ind, f));
        }
    }
    best.map(|(b, _)| b).ok_or(EvolutionError::EmptyPopulation)
}

/// Seeded source of new individuals for one run.
#[derive(Debug, Clone)]
pub struct Breeder {
    config: EvolutionConfig,
    rng: ChaCha8Rng,
    next_id: u64,
}

impl Breeder {
    pub fn new(config: EvolutionConfig) -> Result<Self, EvolutionError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        Ok(Self {
            config,
            rng,
            next_id: 0,
        })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    fn spawn(&mut self, genome: GaitGenome, origin: Origin) -> Individual {
        let id = self.next_id;
        self.next_id += 1;
        Individual {
            genome,
            fitness: None,
            id,
            origin,
        }
    }

    fn random_individual(&mut self, origin: Origin) -> Individual {
        let genome = random_genome(self.config.genome_len, &mut self.rng);
        self.spawn(genome, origin)
    }

    pub fn init_population(&mut self) -> Vec<Individual> {
        (0..self.config.population_size)
            .map(|_| self.random_individual(Origin::Initial))
            .collect()
    }

    /// Builds the next generation from an evaluated population.
    pub fn next_generation(
        &mut self,
        population: &[Individual],
    ) -> Result<Vec<Individual>, EvolutionError> {
        let n = self.config.population_size;
        let quarter = n / 4;
        let p = self.config.mutation_prob;
        let mut next = Vec::with_capacity(n);

        let mut elite = best_individual(population)?.clone();
        elite.origin = Origin::Elite;
        next.push(elite);

        let picks: Vec<GaitGenome> = fitness_proportionate_select(population, quarter - 1, &mut self.rng)?
            .into_iter()
            .map(|ind| ind.genome.clone())
            .collect();
        for g in picks {
            let g = uniform_mutate(&g, p, &mut self.rng);
            next.push(self.spawn(g, Origin::Parent));
        }

        for _ in 0..quarter {
            let parents = fitness_proportionate_select(population, 2, &mut self.rng)?;
            let child = pmx_crossover(&parents[0].genome, &parents[1].genome, &mut self.rng)?;
            let child = uniform_mutate(&child, p, &mut self.rng);
            next.push(self.spawn(child, Origin::Child));
        }

        for _ in 0..quarter {
            let ind = self.random_individual(Origin::Random);
            next.push(ind);
        }

        let novel: Vec<GaitGenome> = novelty_select(population, quarter)
            .into_iter()
            .map(|ind| ind.genome.clone())
            .collect();
        for g in novel {
            let g = uniform_mutate(&g, p, &mut self.rng);
            next.push(self.spawn(g, Origin::Novel));
        }

        debug_assert_eq!(next.len(), n);
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOutcome {
    pub final_population: Vec<Individual>,
    pub stats: Vec<GenerationStats>,
}

impl EvolutionOutcome {
    pub fn champion(&self) -> &Individual {
        best_individual(&self.final_population).expect("final population is evaluated")
    }
}

/// Evaluates every individual that has no fitness yet, in parallel.
///
/// `evaluator` receives the genome and a seed derived from the run seed and
/// the individual's id, so results do not depend on scheduling.
pub fn evaluate_population<F, E>(
    population: &mut [Individual],
    run_seed: u64,
    generation: usize,
    evaluator: &F,
) -> Result<(), EvolutionError>
where
    F: Fn(&GaitGenome, u64) -> Result<f64, E> + Sync,
    E: Display,
{
    let results: Vec<Option<Result<f64, String>>> = population
        .par_iter()
        .map(|ind| {
            ind.fitness.is_none().then(|| {
                evaluator(&ind.genome, evaluation_seed(run_seed, ind.id)).map_err(|e| e.to_string())
            })
        })
        .collect();
    for (ind, res) in population.iter_mut().zip(results) {
        match res {
            None => {}
            Some(Ok(f)) if f.is_finite() => ind.fitness = Some(f),
            Some(Ok(f)) => {
                return Err(EvolutionError::Evaluation {
                    generation,
                    id: ind.id,
                    message: format!("non-finite fitness {f}"),
                })
            }
            Some(Err(message)) => {
                return Err(EvolutionError::Evaluation {
                    generation,
                    id: ind.id,
                    message,
                })
            }
        }
    }
    Ok(())
}

/// Runs the full loop; `progress` sees the statistics of every evaluated generation.
pub fn run_evolution<F, E, P>(
    config: &EvolutionConfig,
    evaluator: F,
    mut progress: P,
) -> Result<EvolutionOutcome, EvolutionError>
where
    F: Fn(&GaitGenome, u64) -> Result<f64, E> + Sync,
    E: Display,
    P: FnMut(&GenerationStats),
{
    let mut breeder = Breeder::new(config.clone())?;
    let mut population = breeder.init_population();
    let mut stats = Vec::with_capacity(config.generations);

    for generation in 0..config.generations {
        if generation > 0 {
            population = breeder.next_generation(&population)?;
        }
        evaluate_population(&mut population, config.rng_seed, generation, &evaluator)?;
        let s = GenerationStats::from_population(generation, &population)?;
        progress(&s);
        stats.push(s);
    }

    Ok(EvolutionOutcome {
        final_population: population,
        stats,
    })
}
