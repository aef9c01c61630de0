//! Experiment harness: runs the (morphology × mutation probability × seed)
//! grid, writes per-run artifacts and the aggregate curves and tables.
//!
//! On-disk layout under the output directory:
//!
//! ```text
//! <morphology>/<prob>/<seed>/generations.csv
//! <morphology>/<prob>/<seed>/final_population.csv
//! <morphology>/<prob>/<seed>/champion.json
//! <morphology>/curve.csv
//! <morphology>/table3.csv
//! table3.csv
//! ```

mod files;
mod replay;
mod report;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{run_evolution, EvolutionConfig, EvolutionError, GenerationStats, Individual};
use crate::gait::GaitGenome;
use crate::kinematics::{Morphology, MorphologyKind};
use crate::sim::{evaluate_gait, SimConfig, SimError};

pub use files::{
    read_champion, read_final_population, read_generations, write_champion, write_final_population,
    write_generations, ChampionFile, GenomeFile,
};
pub use replay::{replay, ReplaySummary};
pub use report::{
    emit_learning_curves, final_generation_report, final_reports, load_records, write_aggregates,
    write_combined_table, CurvePoint, FinalReport, ReportRow,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("{path}: malformed file: {message}")]
    MalformedFile { path: PathBuf, message: String },
    #[error("{path}: malformed genome file: {message}")]
    MalformedGenomeFile { path: PathBuf, message: String },
    #[error("genome is for {found} ({genes} genes) but {expected} was requested")]
    MorphologyMismatch {
        expected: MorphologyKind,
        found: String,
        genes: usize,
    },
    #[error("incomplete runs: {0}")]
    IncompleteRuns(String),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl HarnessError {
    /// Stable identifier for machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::Io { .. } => "Io",
            HarnessError::InvalidPlan(_) => "InvalidPlan",
            HarnessError::MalformedFile { .. } => "MalformedFile",
            HarnessError::MalformedGenomeFile { .. } => "MalformedGenomeFile",
            HarnessError::MorphologyMismatch { .. } => "MorphologyMismatch",
            HarnessError::IncompleteRuns(_) => "IncompleteRuns",
            HarnessError::Evolution(_) => "EvolutionFailed",
            HarnessError::Sim(_) => "EvaluationFailed",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

/// Population size and generation count shared by every run of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionTemplate {
    pub population_size: usize,
    pub generations: usize,
}

impl Default for EvolutionTemplate {
    fn default() -> Self {
        Self {
            population_size: 256,
            generations: 50,
        }
    }
}

impl EvolutionTemplate {
    pub fn config(&self, kind: MorphologyKind, mutation_prob: f64, seed: u64) -> EvolutionConfig {
        EvolutionConfig {
            population_size: self.population_size,
            generations: self.generations,
            mutation_prob,
            genome_len: kind.genome_len(),
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub schema_version: u32,
    pub morphologies: Vec<MorphologyKind>,
    pub mutation_probs: Vec<f64>,
    pub seeds_per_prob: usize,
    /// Run seeds are `base_seed + 0 .. base_seed + seeds_per_prob`.
    pub base_seed: u64,
    pub evolution: EvolutionTemplate,
    pub sim: SimConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            morphologies: MorphologyKind::ALL.to_vec(),
            mutation_probs: vec![0.3, 0.5, 0.7],
            seeds_per_prob: 3,
            base_seed: 0,
            evolution: EvolutionTemplate::default(),
            sim: SimConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let plan: ExperimentPlan =
            serde_json::from_str(text).map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::InvalidPlan(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.morphologies.is_empty() || self.mutation_probs.is_empty() || self.seeds_per_prob == 0
        {
            return Err(HarnessError::InvalidPlan(
                "plan needs at least one morphology, mutation probability and seed".into(),
            ));
        }
        let invalid = |e: &dyn std::fmt::Display| HarnessError::InvalidPlan(e.to_string());
        for cell in self.cells() {
            self.evolution
                .config(cell.morphology, cell.mutation_prob, cell.seed)
                .validate()
                .map_err(|e| invalid(&e))?;
        }
        self.sim.validate().map_err(|e| invalid(&e))
    }

    pub fn runs_per_morphology(&self) -> usize {
        self.mutation_probs.len() * self.seeds_per_prob
    }

    /// Every run of the plan in execution order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &morphology in &self.morphologies {
            for &mutation_prob in &self.mutation_probs {
                for s in 0..self.seeds_per_prob as u64 {
                    cells.push(Cell {
                        morphology,
                        mutation_prob,
                        seed: self.base_seed + s,
                    });
                }
            }
        }
        cells
    }
}

/// One (morphology, mutation probability, seed) run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub morphology: MorphologyKind,
    pub mutation_prob: f64,
    pub seed: u64,
}

impl Cell {
    pub fn dir(&self, root: &Path) -> PathBuf {
        root.join(self.morphology.as_str())
            .join(format!("{}", self.mutation_prob))
            .join(self.seed.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub morphology: MorphologyKind,
    pub mutation_prob: f64,
    pub seed: u64,
    pub population_size: usize,
    pub generations: usize,
    pub stats: Vec<GenerationStats>,
    pub final_population: Vec<Individual>,
    pub champion: GaitGenome,
    pub champion_fitness: f64,
}

/// Evolves one cell and writes its artifacts under `cell.dir(out)`.
pub fn run_cell<P>(
    cell: Cell,
    template: &EvolutionTemplate,
    sim: &SimConfig,
    out: &Path,
    mut progress: P,
) -> Result<RunRecord, HarnessError>
where
    P: FnMut(&Cell, &GenerationStats),
{
    let config = template.config(cell.morphology, cell.mutation_prob, cell.seed);
    let morphology = Morphology::new(cell.morphology);
    let outcome = run_evolution(
        &config,
        |genome: &GaitGenome, seed| evaluate_gait(genome, &morphology, sim, seed).map(|e| e.fitness),
        |stats| progress(&cell, stats),
    )?;

    let champion = outcome.champion().clone();
    let record = RunRecord {
        morphology: cell.morphology,
        mutation_prob: cell.mutation_prob,
        seed: cell.seed,
        population_size: config.population_size,
        generations: config.generations,
        stats: outcome.stats,
        champion: champion.genome,
        champion_fitness: champion.fitness.expect("evaluated"),
        final_population: outcome.final_population,
    };

    let dir = cell.dir(out);
    fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
    write_generations(&dir.join("generations.csv"), cell.morphology, &record.stats)?;
    write_final_population(
        &dir.join("final_population.csv"),
        cell.morphology,
        &record.final_population,
    )?;
    write_champion(&dir.join("champion.json"), &ChampionFile::from_record(&record, sim))?;
    Ok(record)
}

/// Runs every cell of the plan into `out`, then writes the aggregates.
pub fn run_experiment<P>(
    plan: &ExperimentPlan,
    out: &Path,
    mut progress: P,
) -> Result<Vec<RunRecord>, HarnessError>
where
    P: FnMut(&Cell, &GenerationStats),
{
    plan.validate()?;
    fs::create_dir_all(out).map_err(HarnessError::io(out))?;
    let mut records = Vec::new();
    for cell in plan.cells() {
        records.push(run_cell(cell, &plan.evolution, &plan.sim, out, &mut progress)?);
    }
    write_aggregates(out, &records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_has_nine_runs_per_morphology() {
        let plan = ExperimentPlan::default();
        assert_eq!(plan.runs_per_morphology(), 9);
        assert_eq!(plan.cells().len(), 27);
        plan.validate().unwrap();
    }

    #[test]
    fn plan_json_defaults_and_validation() {
        let plan = ExperimentPlan::from_json(r#"{"schema_version": 1, "morphologies": ["active"]}"#)
            .unwrap();
        assert_eq!(plan.morphologies, vec![MorphologyKind::ActiveAnkle]);
        assert_eq!(plan.mutation_probs, vec![0.3, 0.5, 0.7]);
        assert!(ExperimentPlan::from_json(r#"{"schema_version": 2}"#).is_err());
        assert!(ExperimentPlan::from_json(r#"{"schema_version": 1, "bogus": 1}"#).is_err());
        assert!(ExperimentPlan::from_json(
            r#"{"schema_version": 1, "evolution": {"population_size": 10}}"#
        )
        .is_err());
    }

    #[test]
    fn cell_directory_layout() {
        let c = Cell {
            morphology: MorphologyKind::StaticAnkle,
            mutation_prob: 0.3,
            seed: 2,
        };
        assert_eq!(c.dir(Path::new("out")), PathBuf::from("out/static/0.3/2"));
    }
}
