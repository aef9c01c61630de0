//! Spline gait controller.
//!
//! A leg spends the first half of its cycle on the ground, sliding the foot
//! target in a straight line from touchdown back to liftoff, and the second
//! half in the air following a cubic Bezier curve back to touchdown. The two
//! legs run half a cycle apart. Footed legs either hold the ankle at 90° or,
//! for the active morphology, keep the sole level and add a toe-off kick at
//! the start of the lift.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    ankle_parallel_angle, inverse_kinematics, JointAngles, KinematicsError, Morphology,
    MorphologyKind, PlanarPoint,
};

/// Depth of the ground line below the hip, millimetres.
pub const GROUND_LINE_MM: f64 = 325.0;

/// Fraction of the cycle spent in the ground state.
pub const GROUND_FRACTION: f64 = 0.5;

/// Gene names in genome order.
pub const GENE_NAMES: [&str; 9] = [
    "touch_down_x",
    "touch_down_control_x",
    "touch_down_control_y",
    "lift_off_x",
    "lift_off_control_x",
    "lift_off_control_y",
    "ankle_extension_amount",
    "ankle_extension_speed",
    "ankle_extension_offset",
];

/// Physical range of each gene, in genome order (mm, mm, mm, mm, mm, mm, deg, deg/s, fraction).
pub const GENE_RANGES: [(f64, f64); 9] = [
    (0.0, 235.0),
    (0.0, 235.0),
    (285.0, 325.0),
    (-235.0, 0.0),
    (-325.0, 0.0),
    (285.0, 325.0),
    (0.0, 90.0),
    (0.0, 270.0),
    (0.0, 1.0),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaitError {
    #[error("genome has {got} genes, {kind} morphology needs {expected}")]
    GenomeLengthMismatch {
        kind: MorphologyKind,
        expected: usize,
        got: usize,
    },
    #[error("gene {index} = {value} is not a finite value in [0, 1]")]
    GeneOutOfRange { index: usize, value: f64 },
}

/// Normalized gait parameters, every gene in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GaitGenome(Vec<f64>);

impl GaitGenome {
    pub fn new(genes: Vec<f64>) -> Result<Self, GaitError> {
        if let Some((index, &value)) = genes
            .iter()
            .enumerate()
            .find(|(_, g)| !(g.is_finite() && (0.0..=1.0).contains(*g)))
        {
            return Err(GaitError::GeneOutOfRange { index, value });
        }
        Ok(Self(genes))
    }

    /// Builds a genome from arbitrary values by clamping into `[0, 1]`.
    /// NaN genes become 0.
    pub fn clamped(mut genes: Vec<f64>) -> Self {
        for g in &mut genes {
            *g = if g.is_nan() { 0.0 } else { g.clamp(0.0, 1.0) };
        }
        Self(genes)
    }

    pub fn uniform(value: f64, len: usize) -> Self {
        Self::clamped(vec![value; len])
    }

    pub fn genes(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn check_kind(&self, kind: MorphologyKind) -> Result<(), GaitError> {
        if self.len() != kind.genome_len() {
            return Err(GaitError::GenomeLengthMismatch {
                kind,
                expected: kind.genome_len(),
                got: self.len(),
            });
        }
        Ok(())
    }

    pub fn euclidean_distance(&self, other: &GaitGenome) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl AsRef<[f64]> for GaitGenome {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Physical gait parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParameters {
    pub touch_down: PlanarPoint,
    pub lift_off: PlanarPoint,
    pub touch_down_control: PlanarPoint,
    pub lift_off_control: PlanarPoint,
    /// Peak ankle extension, degrees.
    pub ankle_amount: f64,
    /// Degrees per second.
    pub ankle_speed: f64,
    /// Delay of the kick as a fraction of the lift state.
    pub ankle_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitPhase {
    /// Position in the cycle, `[0, 1)`.
    pub cycle_phase: f64,
    /// Cycle duration, seconds.
    pub period: f64,
}

impl GaitPhase {
    pub fn new(cycle_phase: f64, period: f64) -> Self {
        Self {
            cycle_phase,
            period,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrokeState {
    Ground,
    Lift,
}

impl StrokeState {
    pub fn of(phase: f64) -> Self {
        if phase < GROUND_FRACTION {
            StrokeState::Ground
        } else {
            StrokeState::Lift
        }
    }
}

fn lerp(lo: f64, hi: f64, t: f64) -> f64 {
    lo + (hi - lo) * t
}

fn gene_value(genome: &GaitGenome, index: usize) -> f64 {
    let (lo, hi) = GENE_RANGES[index];
    lerp(lo, hi, genome.genes()[index])
}

/// Maps each gene affinely onto its physical range.
pub fn denormalize(genome: &GaitGenome, kind: MorphologyKind) -> Result<GaitParameters, GaitError> {
    genome.check_kind(kind)?;
    let g = |i| gene_value(genome, i);
    let (ankle_amount, ankle_speed, ankle_offset) = if kind == MorphologyKind::ActiveAnkle {
        (g(6), g(7), g(8))
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok(GaitParameters {
        touch_down: PlanarPoint::new(g(0), GROUND_LINE_MM),
        touch_down_control: PlanarPoint::new(g(1), g(2)),
        lift_off: PlanarPoint::new(g(3), GROUND_LINE_MM),
        lift_off_control: PlanarPoint::new(g(4), g(5)),
        ankle_amount,
        ankle_speed,
        ankle_offset,
    })
}

/// Phase of `leg_index` given the cycle phase; leg 1 trails by half a cycle.
pub fn leg_phase(cycle_phase: f64, leg_index: usize) -> f64 {
    if leg_index % 2 == 0 {
        cycle_phase
    } else {
        (cycle_phase + 0.5) % 1.0
    }
}

pub fn bezier_point(
    s: f64,
    p0: PlanarPoint,
    c0: PlanarPoint,
    c1: PlanarPoint,
    p1: PlanarPoint,
) -> PlanarPoint {
    let r = 1.0 - s;
    let w0 = r * r * r;
    let w1 = 3.0 * r * r * s;
    let w2 = 3.0 * r * s * s;
    let w3 = s * s * s;
    PlanarPoint::new(
        w0 * p0.x + w1 * c0.x + w2 * c1.x + w3 * p1.x,
        w0 * p0.y + w1 * c0.y + w2 * c1.y + w3 * p1.y,
    )
}

/// Calf-end target for a leg at `phase`.
pub fn foot_target(phase: f64, params: &GaitParameters) -> (PlanarPoint, StrokeState) {
    match StrokeState::of(phase) {
        StrokeState::Ground => {
            let t = phase / GROUND_FRACTION;
            let x = lerp(params.touch_down.x, params.lift_off.x, t);
            (PlanarPoint::new(x, GROUND_LINE_MM), StrokeState::Ground)
        }
        StrokeState::Lift => {
            let s = (phase - GROUND_FRACTION) / (1.0 - GROUND_FRACTION);
            let p = bezier_point(
                s,
                params.lift_off,
                params.lift_off_control,
                params.touch_down_control,
                params.touch_down,
            );
            (p, StrokeState::Lift)
        }
    }
}

/// Bell-shaped kick profile `u² e^(1-u²)`; peaks at 1 when `u = 1`.
pub fn kick_profile(u: f64) -> f64 {
    let u2 = u * u;
    u2 * (1.0 - u2).exp()
}

/// Ankle extension in degrees beyond the level-sole angle.
pub fn ankle_kick(phase: GaitPhase, params: &GaitParameters) -> f64 {
    if StrokeState::of(phase.cycle_phase) == StrokeState::Ground || params.ankle_amount == 0.0 {
        return 0.0;
    }
    let lift_duration = phase.period * (1.0 - GROUND_FRACTION);
    let since_lift = (phase.cycle_phase - GROUND_FRACTION) * phase.period;
    let start = params.ankle_offset * lift_duration;
    if since_lift < start {
        return 0.0;
    }
    let u = params.ankle_speed * (since_lift - start) / 3.0;
    // The profile can round a hair above 1 near its peak.
    (params.ankle_amount * kick_profile(u)).min(params.ankle_amount)
}

/// Joint setpoints for one leg at `phase`.
pub fn joint_commands(
    phase: GaitPhase,
    params: &GaitParameters,
    morphology: &Morphology,
) -> Result<JointAngles, KinematicsError> {
    let (target, _) = foot_target(phase.cycle_phase, params);
    let angles = inverse_kinematics(target, &morphology.geometry)?;
    Ok(match morphology.kind {
        MorphologyKind::NoFoot => angles,
        MorphologyKind::StaticAnkle => angles.with_ankle(FRAC_PI_2),
        MorphologyKind::ActiveAnkle => {
            let level = ankle_parallel_angle(angles.hip, angles.knee);
            let kick = ankle_kick(phase, params);
            if kick == 0.0 {
                angles.with_ankle(level)
            } else {
                angles.with_ankle(level + kick.to_radians())
            }
        }
    })
}
