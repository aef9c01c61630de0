use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::files::{
    gene_names, read_champion, read_final_population, read_generations, write_text,
};
use super::{HarnessError, RunRecord};
use crate::evolution::mean_std;
use crate::format::float;
use crate::gait::{GaitGenome, GENE_NAMES};
use crate::kinematics::MorphologyKind;

/// Column order of the combined table.
const TABLE_ORDER: [MorphologyKind; 3] = [
    MorphologyKind::ActiveAnkle,
    MorphologyKind::StaticAnkle,
    MorphologyKind::NoFoot,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub generation: usize,
    pub fitness_mean: f64,
    pub fitness_std: f64,
    pub fitness_best: f64,
}

/// Aggregates per-generation statistics across runs.
///
/// The mean is the population-weighted mean of the run means, the spread is
/// the (weighted, population) standard deviation of the run means, and the
/// best is the maximum over runs.
pub fn emit_learning_curves(records: &[RunRecord]) -> Vec<CurvePoint> {
    let generations = records.iter().map(|r| r.stats.len()).max().unwrap_or(0);
    (0..generations)
        .map(|g| {
            let rows: Vec<(f64, f64, f64)> = records
                .iter()
                .filter_map(|r| {
                    r.stats
                        .get(g)
                        .map(|s| (r.population_size as f64, s.fitness_mean, s.best_fitness))
                })
                .collect();
            let weight: f64 = rows.iter().map(|r| r.0).sum();
            let mean = rows.iter().map(|r| r.0 * r.1).sum::<f64>() / weight;
            let var = rows.iter().map(|r| r.0 * (r.1 - mean) * (r.1 - mean)).sum::<f64>() / weight;
            let best = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
            CurvePoint {
                generation: g,
                fitness_mean: mean,
                fitness_std: var.sqrt(),
                fitness_best: best,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    /// `None` for genes the morphology does not have.
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalReport {
    pub morphology: MorphologyKind,
    pub runs: usize,
    pub individuals: usize,
    /// Fitness first, then every gene name in canonical order.
    pub rows: Vec<ReportRow>,
}

impl FinalReport {
    pub fn fitness(&self) -> (f64, f64) {
        (
            self.rows[0].mean.unwrap_or(f64::NAN),
            self.rows[0].std.unwrap_or(f64::NAN),
        )
    }

    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,mean,std\n");
        for r in &self.rows {
            let cell = |v: Option<f64>| v.map(float).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", r.name, cell(r.mean), cell(r.std)));
        }
        out
    }
}

/// Mean and population std of fitness and genes over every final-generation
/// individual of every run of one morphology.
pub fn final_generation_report(records: &[RunRecord]) -> Result<FinalReport, HarnessError> {
    let first = records
        .first()
        .ok_or_else(|| HarnessError::IncompleteRuns("no runs to report".into()))?;
    let kind = first.morphology;
    for r in records {
        if r.morphology != kind {
            return Err(HarnessError::IncompleteRuns(format!(
                "mixed morphologies {} and {}",
                kind, r.morphology
            )));
        }
        if r.stats.len() != r.generations || r.final_population.is_empty() {
            return Err(HarnessError::IncompleteRuns(format!(
                "{} run p={} seed={} has {} of {} generations",
                kind,
                r.mutation_prob,
                r.seed,
                r.stats.len(),
                r.generations
            )));
        }
    }

    let individuals: Vec<_> = records.iter().flat_map(|r| &r.final_population).collect();
    let fitness = individuals
        .iter()
        .map(|i| {
            i.fitness
                .ok_or_else(|| HarnessError::IncompleteRuns(format!("individual {} unevaluated", i.id)))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (fm, fs) = mean_std(fitness);
    let mut rows = vec![ReportRow {
        name: "fitness".into(),
        mean: Some(fm),
        std: Some(fs),
    }];
    let len = kind.genome_len();
    for (i, name) in GENE_NAMES.iter().enumerate() {
        let (mean, std) = if i < len {
            let (m, s) = mean_std(individuals.iter().map(|ind| ind.genome.genes()[i]));
            (Some(m), Some(s))
        } else {
            (None, None)
        };
        rows.push(ReportRow {
            name: name.to_string(),
            mean,
            std,
        });
    }
    Ok(FinalReport {
        morphology: kind,
        runs: records.len(),
        individuals: individuals.len(),
        rows,
    })
}

fn curves_csv(records: &[RunRecord]) -> String {
    let mut out = format!(
        "# pooled over {} runs: mean/std of per-run population means, best = max over runs\n",
        records.len()
    );
    out.push_str("generation,fitness_mean,fitness_std,fitness_best\n");
    for p in emit_learning_curves(records) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.generation,
            float(p.fitness_mean),
            float(p.fitness_std),
            float(p.fitness_best)
        ));
    }
    out
}

fn group(records: &[RunRecord]) -> BTreeMap<MorphologyKind, Vec<RunRecord>> {
    let mut by_kind: BTreeMap<MorphologyKind, Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        by_kind.entry(r.morphology).or_default().push(r.clone());
    }
    by_kind
}

/// Table-3 style report for every morphology present, in kind order.
pub fn final_reports(records: &[RunRecord]) -> Result<Vec<FinalReport>, HarnessError> {
    group(records)
        .values()
        .map(|recs| final_generation_report(recs))
        .collect()
}

/// Writes `<kind>/curve.csv` and `<kind>/table3.csv` for each morphology and
/// the combined `table3.csv`; returns the per-morphology reports.
pub fn write_aggregates(
    out: &Path,
    records: &[RunRecord],
) -> Result<Vec<FinalReport>, HarnessError> {
    let mut reports = Vec::new();
    for (kind, recs) in group(records) {
        let dir = out.join(kind.as_str());
        fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
        write_text(&dir.join("curve.csv"), &curves_csv(&recs))?;
        let report = final_generation_report(&recs)?;
        write_text(&dir.join("table3.csv"), &report.to_csv())?;
        reports.push(report);
    }
    write_combined_table(&out.join("table3.csv"), &reports)?;
    Ok(reports)
}

/// Side-by-side table: one mean/std column pair per morphology.
pub fn write_combined_table(path: &Path, reports: &[FinalReport]) -> Result<(), HarnessError> {
    let ordered: Vec<&FinalReport> = TABLE_ORDER
        .iter()
        .filter_map(|k| reports.iter().find(|r| r.morphology == *k))
        .collect();
    let mut out = String::from("parameter");
    for r in &ordered {
        out.push_str(&format!(",{0}_mean,{0}_std", r.morphology));
    }
    out.push('\n');
    let names = std::iter::once("fitness").chain(GENE_NAMES);
    for name in names {
        out.push_str(name);
        for r in &ordered {
            let row = r.row(name);
            let cell = |v: Option<f64>| v.map(float).unwrap_or_default();
            out.push_str(&format!(
                ",{},{}",
                cell(row.and_then(|x| x.mean)),
                cell(row.and_then(|x| x.std))
            ));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<(String, std::path::PathBuf)>, HarnessError> {
    let mut entries = Vec::new();
    for e in fs::read_dir(dir).map_err(HarnessError::io(dir))? {
        let e = e.map_err(HarnessError::io(dir))?;
        if e.path().is_dir() {
            entries.push((e.file_name().to_string_lossy().into_owned(), e.path()));
        }
    }
    entries.sort();
    Ok(entries)
}

/// Reads every completed run below `dir` (the layout written by `run_experiment`).
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut records = Vec::new();
    for kind in MorphologyKind::ALL {
        let kdir = dir.join(kind.as_str());
        if !kdir.is_dir() {
            continue;
        }
        let mut cells = Vec::new();
        for (_, pdir) in sorted_subdirs(&kdir)? {
            for (_, sdir) in sorted_subdirs(&pdir)? {
                let champion_path = sdir.join("champion.json");
                if !champion_path.is_file() {
                    return Err(HarnessError::IncompleteRuns(format!(
                        "{} has no champion.json",
                        sdir.display()
                    )));
                }
                cells.push((read_champion(&champion_path)?, sdir));
            }
        }
        cells.sort_by(|a, b| {
            a.0.mutation_prob
                .total_cmp(&b.0.mutation_prob)
                .then(a.0.seed.cmp(&b.0.seed))
        });
        for (champ, sdir) in cells {
            if champ.morphology != kind || champ.genes.len() != gene_names(kind).len() {
                return Err(HarnessError::MalformedFile {
                    path: sdir.join("champion.json"),
                    message: format!("expected a {kind} champion"),
                });
            }
            let champion = GaitGenome::new(champ.genes.clone()).map_err(|e| {
                HarnessError::MalformedFile {
                    path: sdir.join("champion.json"),
                    message: e.to_string(),
                }
            })?;
            records.push(RunRecord {
                morphology: kind,
                mutation_prob: champ.mutation_prob,
                seed: champ.seed,
                population_size: champ.population_size,
                generations: champ.generations,
                stats: read_generations(&sdir.join("generations.csv"), kind)?,
                final_population: read_final_population(&sdir.join("final_population.csv"), kind)?,
                champion,
                champion_fitness: champ.fitness,
            });
        }
    }
    if records.is_empty() {
        return Err(HarnessError::IncompleteRuns(format!(
            "no runs found under {}",
            dir.display()
        )));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{GenerationStats, Individual, Origin};

    fn record(kind: MorphologyKind, fitness: &[f64], means: &[f64]) -> RunRecord {
        let len = kind.genome_len();
        let pop: Vec<Individual> = fitness
            .iter()
            .enumerate()
            .map(|(i, &f)| Individual {
                genome: GaitGenome::uniform(0.25 * i as f64, len),
                fitness: Some(f),
                id: i as u64,
                origin: Origin::Initial,
            })
            .collect();
        let stats = means
            .iter()
            .enumerate()
            .map(|(g, &m)| GenerationStats {
                generation: g,
                fitness_mean: m,
                fitness_std: 0.0,
                best_fitness: m + 1.0,
                gene_mean: vec![0.5; len],
                gene_std: vec![0.0; len],
            })
            .collect();
        RunRecord {
            morphology: kind,
            mutation_prob: 0.5,
            seed: 0,
            population_size: pop.len(),
            generations: means.len(),
            stats,
            champion: pop[0].genome.clone(),
            champion_fitness: fitness[0],
            final_population: pop,
        }
    }

    #[test]
    fn report_uses_population_std() {
        let r = record(MorphologyKind::StaticAnkle, &[1.0, 2.0, 3.0], &[0.0]);
        let rep = final_generation_report(&[r]).unwrap();
        let (m, s) = rep.fitness();
        assert!((m - 2.0).abs() < 1e-15);
        assert!((s - 0.816496580927726).abs() < 1e-12);
        assert_eq!(rep.rows.len(), 10);
    }

    #[test]
    fn single_individual_has_zero_spread() {
        let rep = final_generation_report(&[record(MorphologyKind::ActiveAnkle, &[4.0], &[0.0])])
            .unwrap();
        assert_eq!(rep.fitness(), (4.0, 0.0));
        assert!(rep.rows.iter().all(|r| r.std == Some(0.0)));
    }

    #[test]
    fn nofoot_ankle_rows_are_empty() {
        let rep = final_generation_report(&[record(MorphologyKind::NoFoot, &[1.0, 2.0], &[0.0])])
            .unwrap();
        let filled = rep.rows.iter().filter(|r| r.mean.is_some()).count();
        assert_eq!(filled, 1 + 6);
        for name in &GENE_NAMES[6..] {
            let row = rep.row(name).unwrap();
            assert!(row.mean.is_none() && row.std.is_none());
        }
        assert!(rep.to_csv().contains("ankle_extension_amount,,\n"));
    }

    #[test]
    fn report_needs_complete_runs() {
        assert!(matches!(
            final_generation_report(&[]),
            Err(HarnessError::IncompleteRuns(_))
        ));
        let mut r = record(MorphologyKind::NoFoot, &[1.0], &[0.0, 1.0]);
        r.stats.pop();
        assert!(matches!(
            final_generation_report(&[r]),
            Err(HarnessError::IncompleteRuns(_))
        ));
    }

    #[test]
    fn curves_across_runs() {
        let a = record(MorphologyKind::NoFoot, &[1.0, 1.0], &[1.0, 2.0, 3.0]);
        let b = record(MorphologyKind::NoFoot, &[1.0, 1.0], &[3.0, 4.0, 5.0]);
        let c = emit_learning_curves(&[a.clone(), b]);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].fitness_mean, 2.0);
        assert_eq!(c[0].fitness_std, 1.0);
        assert_eq!(c[2].fitness_best, 6.0);
        let single = emit_learning_curves(&[a]);
        assert!(single.iter().all(|p| p.fitness_std == 0.0));
    }
}
