use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaitlab_core::harness::{
    final_reports, load_records, replay, run_cell, run_experiment, write_aggregates, Cell,
    EvolutionTemplate, FinalReport,
};
use gaitlab_core::{ExperimentPlan, GenerationStats, HarnessError, MorphologyKind, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "gaitlab", version, about = "Evolve and replay gaits for a hub-supported biped")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a single evolutionary run.
    Evolve {
        #[arg(long)]
        morphology: MorphologyKind,
        #[arg(long = "mutation-prob")]
        mutation_prob: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 256)]
        pop: usize,
        #[arg(long, default_value_t = 50)]
        gens: usize,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run every cell of an experiment plan.
    Experiment {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-simulate a stored genome and report distance, time and speed.
    Replay {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        morphology: MorphologyKind,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Rebuild curve.csv and table3.csv from a finished output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn log_progress(cell: &Cell, s: &GenerationStats) {
    eprintln!(
        "{} p={} seed={} gen {:>3}: mean {:.4} std {:.4} best {:.4}",
        cell.morphology,
        cell.mutation_prob,
        cell.seed,
        s.generation,
        s.fitness_mean,
        s.fitness_std,
        s.best_fitness
    );
}

fn print_reports(reports: &[FinalReport]) {
    println!("{:<8} {:>12} {:>12}", "", "fitness", "std");
    for r in reports {
        let (m, s) = r.fitness();
        println!("{:<8} {:>12.4} {:>12.4}", r.morphology.as_str(), m, s);
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Evolve {
            morphology,
            mutation_prob,
            seed,
            pop,
            gens,
            out,
        } => {
            let cell = Cell {
                morphology,
                mutation_prob,
                seed,
            };
            let template = EvolutionTemplate {
                population_size: pop,
                generations: gens,
            };
            let record = run_cell(cell, &template, &SimConfig::default(), &out, log_progress)?;
            println!(
                "champion fitness {:.6} written to {}",
                record.champion_fitness,
                cell.dir(&out).join("champion.json").display()
            );
        }
        Command::Experiment { plan, out } => {
            let mut plan = ExperimentPlan::load(&plan)?;
            plan.output_dir = out.clone();
            let records = run_experiment(&plan, &out, log_progress)?;
            let reports = final_reports(&records)?;
            println!("{} runs written to {}", records.len(), out.display());
            print_reports(&reports);
        }
        Command::Replay {
            genome,
            morphology,
            csv,
        } => {
            let summary = replay(&genome, morphology, None, csv.as_deref())?;
            println!("{summary}");
        }
        Command::Report { input } => {
            let records = load_records(&input)?;
            let reports = write_aggregates(&input, &records)?;
            print_reports(&reports);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {}", e.code(), message);
            ExitCode::FAILURE
        }
    }
}
