use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, RunRecord, SCHEMA_VERSION};
use crate::evolution::{GenerationStats, Individual, Origin};
use crate::format::float;
use crate::gait::{GaitGenome, GENE_NAMES};
use crate::kinematics::MorphologyKind;
use crate::sim::SimConfig;

/// Best genome of a run plus enough context to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionFile {
    pub schema_version: u32,
    pub morphology: MorphologyKind,
    pub mutation_prob: f64,
    pub seed: u64,
    pub population_size: usize,
    pub generations: usize,
    pub fitness: f64,
    pub gene_names: Vec<String>,
    pub genes: Vec<f64>,
    pub sim: SimConfig,
}

impl ChampionFile {
    pub fn from_record(record: &RunRecord, sim: &SimConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            morphology: record.morphology,
            mutation_prob: record.mutation_prob,
            seed: record.seed,
            population_size: record.population_size,
            generations: record.generations,
            fitness: record.champion_fitness,
            gene_names: gene_names(record.morphology)
                .iter()
                .map(|s| s.to_string())
                .collect(),
            genes: record.champion.genes().to_vec(),
            sim: *sim,
        }
    }
}

/// Minimal genome document accepted by `replay`; a champion file qualifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeFile {
    #[serde(default = "schema_default")]
    pub schema_version: u32,
    #[serde(default)]
    pub morphology: Option<String>,
    pub genes: Vec<f64>,
    #[serde(default)]
    pub sim: Option<SimConfig>,
}

fn schema_default() -> u32 {
    SCHEMA_VERSION
}

impl GenomeFile {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let file: GenomeFile =
            serde_json::from_str(&text).map_err(|e| HarnessError::MalformedGenomeFile {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::MalformedGenomeFile {
                path: path.to_path_buf(),
                message: format!("unsupported schema_version {}", file.schema_version),
            });
        }
        Ok(file)
    }
}

pub(crate) fn gene_names(kind: MorphologyKind) -> &'static [&'static str] {
    &GENE_NAMES[..kind.genome_len()]
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, HarnessError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(HarnessError::io(path))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(HarnessError::io(path))
}

pub fn write_generations(
    path: &Path,
    kind: MorphologyKind,
    stats: &[GenerationStats],
) -> Result<(), HarnessError> {
    let names = gene_names(kind);
    let mut out = String::from("generation,fitness_mean,fitness_std,best_fitness");
    for n in names {
        out.push_str(&format!(",{n}_mean"));
    }
    for n in names {
        out.push_str(&format!(",{n}_std"));
    }
    out.push('\n');
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{}",
            s.generation,
            float(s.fitness_mean),
            float(s.fitness_std),
            float(s.best_fitness)
        ));
        for v in s.gene_mean.iter().chain(&s.gene_std) {
            out.push(',');
            out.push_str(&float(*v));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

fn origin_name(o: Origin) -> &'static str {
    match o {
        Origin::Initial => "initial",
        Origin::Elite => "elite",
        Origin::Parent => "parent",
        Origin::Child => "child",
        Origin::Random => "random",
        Origin::Novel => "novel",
    }
}

fn parse_origin(s: &str) -> Option<Origin> {
    Some(match s {
        "initial" => Origin::Initial,
        "elite" => Origin::Elite,
        "parent" => Origin::Parent,
        "child" => Origin::Child,
        "random" => Origin::Random,
        "novel" => Origin::Novel,
        _ => return None,
    })
}

pub fn write_final_population(
    path: &Path,
    kind: MorphologyKind,
    population: &[Individual],
) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    let io = HarnessError::io(path);
    let mut write = || -> std::io::Result<()> {
        write!(w, "id,origin,fitness")?;
        for n in gene_names(kind) {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for ind in population {
            write!(
                w,
                "{},{},{}",
                ind.id,
                origin_name(ind.origin),
                float(ind.fitness.unwrap_or(f64::NAN))
            )?;
            for g in ind.genome.genes() {
                write!(w, ",{}", float(*g))?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write().map_err(io)
}

pub fn write_champion(path: &Path, champion: &ChampionFile) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(champion).map_err(|e| {
        HarnessError::MalformedFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_champion(path: &Path) -> Result<ChampionFile, HarnessError> {
    let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::MalformedFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Data rows of a CSV file, split on commas; `#` lines and the header skipped.
fn csv_rows(path: &Path, columns: usize) -> Result<Vec<(usize, Vec<String>)>, HarnessError> {
    let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != columns {
            return Err(HarnessError::MalformedFile {
                path: path.to_path_buf(),
                message: format!("line {}: expected {columns} columns, got {}", i + 1, fields.len()),
            });
        }
        if !seen_header {
            seen_header = true;
            continue;
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

fn parse<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<T, HarnessError> {
    field.parse().map_err(|_| HarnessError::MalformedFile {
        path: path.to_path_buf(),
        message: format!("line {line}: cannot parse `{field}`"),
    })
}

pub fn read_generations(
    path: &Path,
    kind: MorphologyKind,
) -> Result<Vec<GenerationStats>, HarnessError> {
    let n = kind.genome_len();
    csv_rows(path, 4 + 2 * n)?
        .into_iter()
        .map(|(line, f)| {
            let nums = f[1..]
                .iter()
                .map(|v| parse::<f64>(path, line, v))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GenerationStats {
                generation: parse(path, line, &f[0])?,
                fitness_mean: nums[0],
                fitness_std: nums[1],
                best_fitness: nums[2],
                gene_mean: nums[3..3 + n].to_vec(),
                gene_std: nums[3 + n..].to_vec(),
            })
        })
        .collect()
}

pub fn read_final_population(
    path: &Path,
    kind: MorphologyKind,
) -> Result<Vec<Individual>, HarnessError> {
    let n = kind.genome_len();
    csv_rows(path, 3 + n)?
        .into_iter()
        .map(|(line, f)| {
            let genes = f[3..]
                .iter()
                .map(|v| parse::<f64>(path, line, v))
                .collect::<Result<Vec<_>, _>>()?;
            let genome = GaitGenome::new(genes).map_err(|e| HarnessError::MalformedFile {
                path: path.to_path_buf(),
                message: format!("line {line}: {e}"),
            })?;
            let origin = parse_origin(&f[1]).ok_or_else(|| HarnessError::MalformedFile {
                path: path.to_path_buf(),
                message: format!("line {line}: unknown origin `{}`", f[1]),
            })?;
            let fitness: f64 = parse(path, line, &f[2])?;
            Ok(Individual {
                genome,
                fitness: fitness.is_finite().then_some(fitness),
                id: parse(path, line, &f[0])?,
                origin,
            })
        })
        .collect()
}
