use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::files::GenomeFile;
use super::HarnessError;
use crate::gait::GaitGenome;
use crate::kinematics::{Morphology, MorphologyKind};
use crate::sim::{evaluate_gait_traced, write_trace_csv, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplaySummary {
    pub morphology: MorphologyKind,
    pub distance_m: f64,
    pub duration_s: f64,
    pub velocity_m_s: f64,
    pub fitness: f64,
}

impl fmt::Display for ReplaySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:>12} {:>9} {:>19}",
            "", "Distance (m)", "Time(s)", "Avg. velocity(m/s)"
        )?;
        write!(
            f,
            "{:<8} {:>12.2} {:>9.2} {:>19.2}",
            self.morphology.as_str(),
            self.distance_m,
            self.duration_s,
            self.velocity_m_s
        )
    }
}

/// Re-simulates a stored genome, optionally writing the per-step trace.
///
/// The simulation settings come from `sim`, else from the genome file, else
/// the defaults.
pub fn replay(
    genome_path: &Path,
    kind: MorphologyKind,
    sim: Option<SimConfig>,
    trace_csv: Option<&Path>,
) -> Result<ReplaySummary, HarnessError> {
    let file = GenomeFile::load(genome_path)?;
    if let Some(name) = &file.morphology {
        let matches = name.parse::<MorphologyKind>().map(|k| k == kind).unwrap_or(false);
        if !matches {
            return Err(HarnessError::MorphologyMismatch {
                expected: kind,
                found: name.clone(),
                genes: file.genes.len(),
            });
        }
    }
    if file.genes.len() != kind.genome_len() {
        return Err(HarnessError::MorphologyMismatch {
            expected: kind,
            found: format!("a {}-gene genome", file.genes.len()),
            genes: file.genes.len(),
        });
    }
    let genome =
        GaitGenome::new(file.genes.clone()).map_err(|e| HarnessError::MalformedGenomeFile {
            path: genome_path.to_path_buf(),
            message: e.to_string(),
        })?;
    let config = sim.or(file.sim).unwrap_or_default();
    let eval = evaluate_gait_traced(&genome, &Morphology::new(kind), &config, 0)?;

    if let Some(path) = trace_csv {
        let f = fs::File::create(path).map_err(HarnessError::io(path))?;
        let mut w = BufWriter::new(f);
        write_trace_csv(&mut w, kind, &eval.trace)
            .and_then(|_| w.flush())
            .map_err(HarnessError::io(path))?;
    }

    let duration_s = config.duration();
    Ok(ReplaySummary {
        morphology: kind,
        distance_m: eval.distance_m,
        duration_s,
        velocity_m_s: eval.distance_m / duration_s,
        fitness: eval.fitness,
    })
}
