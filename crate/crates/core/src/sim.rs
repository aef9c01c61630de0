//! Kinematic simulation of the hub-supported walker.
//!
//! The body is held level by the hub, so there is no balance to model. Each
//! step the joint setpoints are applied instantly, the deepest foot vertex is
//! taken as the ground contact, and the hip height is set so that vertex sits
//! on the ground. While the same vertex of the same leg stays in contact it is
//! pinned in the world: whatever it moves backward relative to the hip, the
//! body moves forward. A change of stance leg or contact vertex yields no
//! progress for that step.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::float;
use crate::gait::{
    denormalize, joint_commands, leg_phase, GaitError, GaitGenome, GaitParameters, GaitPhase,
    StrokeState,
};
use crate::kinematics::{
    forward_kinematics, JointAngles, KinematicsError, LegLandmarks, Morphology, MorphologyKind,
};

/// Depth difference under which two legs count as equally deep, mm.
pub const LEG_TIE_MM: f64 = 1e-9;
/// Depth difference under which heel and toe count as a flat sole, mm.
pub const SOLE_TIE_MM: f64 = 1e-6;

const MM_PER_M: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Genome(#[from] GaitError),
    #[error("evaluation failed at step {step} (leg {leg}): {source}")]
    EvaluationFailed {
        step: usize,
        leg: usize,
        #[source]
        source: KinematicsError,
    },
}

/// Weights of the per-period reward `Δpos - w_joints·Δjoints - w_angle·angle - step_cost`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_joints: f64,
    pub w_angle: f64,
    pub step_cost: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_joints: 3.5e-4,
            w_angle: 5.0,
            step_cost: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Gait period, seconds.
    pub period: f64,
    pub steps_per_period: usize,
    pub periods: usize,
    pub reward_weights: RewardWeights,
    /// Standard deviation of Gaussian noise added to each step's progress, mm.
    /// Zero disables noise; the evaluation seed only matters when it is set.
    pub progress_noise_mm: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            period: 1.0,
            steps_per_period: 100,
            periods: 12,
            reward_weights: RewardWeights::default(),
            progress_noise_mm: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let w = &self.reward_weights;
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(SimError::InvalidConfig(format!("period {} must be > 0", self.period)));
        }
        if self.steps_per_period < 10 {
            return Err(SimError::InvalidConfig(format!(
                "steps_per_period {} must be >= 10",
                self.steps_per_period
            )));
        }
        if self.periods == 0 {
            return Err(SimError::InvalidConfig("periods must be >= 1".into()));
        }
        if [w.w_joints, w.w_angle, w.step_cost, self.progress_noise_mm]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(SimError::InvalidConfig(
                "reward weights and noise must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.periods * self.steps_per_period
    }

    pub fn duration(&self) -> f64 {
        self.periods as f64 * self.period
    }

    pub fn dt(&self) -> f64 {
        self.period / self.steps_per_period as f64
    }

    /// Cycle phase of global step `step`.
    pub fn phase_of(&self, step: usize) -> f64 {
        (step % self.steps_per_period) as f64 / self.steps_per_period as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    /// Forward progress, metres.
    pub x: f64,
    /// Hip height above the ground, millimetres.
    pub hip_height: f64,
    /// Always zero: the hub keeps the body level.
    pub body_pitch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContactVertex {
    Heel,
    Toe,
    Tip,
}

impl ContactVertex {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactVertex::Heel => "heel",
            ContactVertex::Toe => "toe",
            ContactVertex::Tip => "tip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    pub stance_leg: Option<usize>,
    pub contact_vertex: ContactVertex,
    /// Contact point x in the hip frame, mm.
    pub contact_x_body: f64,
}

/// Deepest vertex of one leg: `(vertex, x, depth)`.
fn lowest_vertex(legs: &LegLandmarks) -> (ContactVertex, f64, f64) {
    match (legs.heel, legs.toe) {
        (Some(heel), Some(toe)) => {
            if toe.y > heel.y + SOLE_TIE_MM {
                (ContactVertex::Toe, toe.x, toe.y)
            } else {
                (ContactVertex::Heel, heel.x, heel.y)
            }
        }
        _ => (ContactVertex::Tip, legs.ankle.x, legs.ankle.y),
    }
}

/// Picks the stance leg and its contact vertex; returns the hip height that
/// puts that vertex on the ground.
///
/// Equal depths prefer the leg in its ground stroke, then leg 0.
pub fn resolve_contact(legs: &[LegLandmarks; 2], strokes: [StrokeState; 2]) -> (ContactState, f64) {
    let low = [lowest_vertex(&legs[0]), lowest_vertex(&legs[1])];
    let stance = if (low[0].2 - low[1].2).abs() <= LEG_TIE_MM {
        if strokes[1] == StrokeState::Ground && strokes[0] != StrokeState::Ground {
            1
        } else {
            0
        }
    } else if low[0].2 > low[1].2 {
        0
    } else {
        1
    };
    let (vertex, x, depth) = low[stance];
    (
        ContactState {
            stance_leg: Some(stance),
            contact_vertex: vertex,
            contact_x_body: x,
        },
        depth,
    )
}

/// Per-step deltas produced by [`Walker::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDelta {
    /// Metres.
    pub dpos: f64,
    /// Radians, summed over actuated joints of both legs.
    pub djoints: f64,
}

fn joint_travel(kind: MorphologyKind, now: &JointAngles, prev: &JointAngles) -> f64 {
    let mut sum = (now.hip - prev.hip).abs() + (now.knee - prev.knee).abs();
    if kind == MorphologyKind::ActiveAnkle {
        if let (Some(a), Some(b)) = (now.ankle, prev.ankle) {
            sum += (a - b).abs();
        }
    }
    sum
}

/// Stateful walker: body pose plus the previous step's contact and commands.
#[derive(Debug, Clone)]
pub struct Walker {
    morphology: Morphology,
    body: BodyState,
    contact: Option<ContactState>,
    commands: Option<[JointAngles; 2]>,
}

impl Walker {
    pub fn new(morphology: Morphology) -> Self {
        Self {
            morphology,
            body: BodyState {
                x: 0.0,
                hip_height: 0.0,
                body_pitch: 0.0,
            },
            contact: None,
            commands: None,
        }
    }

    pub fn body(&self) -> &BodyState {
        &self.body
    }

    pub fn contact(&self) -> Option<&ContactState> {
        self.contact.as_ref()
    }

    /// Applies both legs' setpoints and advances the body.
    pub fn step(&mut self, commands: [JointAngles; 2], strokes: [StrokeState; 2]) -> StepDelta {
        let geom = &self.morphology.geometry;
        let kind = self.morphology.kind;
        let legs = [
            forward_kinematics(&commands[0], geom, kind),
            forward_kinematics(&commands[1], geom, kind),
        ];
        let (contact, hip_height) = resolve_contact(&legs, strokes);

        let dpos = match self.contact {
            Some(prev)
                if prev.stance_leg == contact.stance_leg
                    && prev.contact_vertex == contact.contact_vertex =>
            {
                -(contact.contact_x_body - prev.contact_x_body) / MM_PER_M
            }
            _ => 0.0,
        };
        let djoints = self.commands.map_or(0.0, |prev| {
            joint_travel(kind, &commands[0], &prev[0]) + joint_travel(kind, &commands[1], &prev[1])
        });

        self.body.x += dpos;
        self.body.hip_height = hip_height;
        self.contact = Some(contact);
        self.commands = Some(commands);
        StepDelta { dpos, djoints }
    }

    /// Shifts the body without touching contact bookkeeping (used for noise).
    fn nudge(&mut self, dx_m: f64) {
        self.body.x += dx_m;
    }
}

/// Measurements and reward for one gait period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    /// Metres.
    pub delta_pos: f64,
    /// Radians.
    pub delta_joints: f64,
    /// Mean absolute body pitch, radians.
    pub angle_body: f64,
    pub reward: f64,
}

/// Per-period reward. The step cost is subtracted first so that the
/// textbook cases come out as exact decimals.
pub fn period_reward(
    delta_pos: f64,
    delta_joints: f64,
    angle_body: f64,
    weights: &RewardWeights,
) -> PeriodOutcome {
    let reward = (delta_pos - weights.step_cost)
        - weights.w_joints * delta_joints
        - weights.w_angle * angle_body;
    PeriodOutcome {
        delta_pos,
        delta_joints,
        angle_body,
        reward,
    }
}

/// One simulated step, as exported by the trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time_s: f64,
    pub phase: f64,
    pub body_x_m: f64,
    pub hip_height_mm: f64,
    pub stance_leg: Option<usize>,
    pub contact_vertex: ContactVertex,
    pub angles: [JointAngles; 2],
    pub step_dpos_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub periods: Vec<PeriodOutcome>,
    pub distance_m: f64,
    pub trace: Vec<TraceRow>,
}

/// Simulates the gait and returns the summed period rewards.
pub fn evaluate_gait(
    genome: &GaitGenome,
    morphology: &Morphology,
    config: &SimConfig,
    seed: u64,
) -> Result<Evaluation, SimError> {
    simulate(genome, morphology, config, seed, false)
}

/// As [`evaluate_gait`] but also records every step.
pub fn evaluate_gait_traced(
    genome: &GaitGenome,
    morphology: &Morphology,
    config: &SimConfig,
    seed: u64,
) -> Result<Evaluation, SimError> {
    simulate(genome, morphology, config, seed, true)
}

fn simulate(
    genome: &GaitGenome,
    morphology: &Morphology,
    config: &SimConfig,
    seed: u64,
    record: bool,
) -> Result<Evaluation, SimError> {
    config.validate()?;
    let params = denormalize(genome, morphology.kind)?;
    let mut noise = if config.progress_noise_mm > 0.0 {
        let normal = Normal::new(0.0, config.progress_noise_mm / MM_PER_M)
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        Some((normal, ChaCha8Rng::seed_from_u64(seed)))
    } else {
        None
    };

    let mut walker = Walker::new(*morphology);
    let mut periods = Vec::with_capacity(config.periods);
    let mut trace = Vec::with_capacity(if record { config.total_steps() } else { 0 });

    for period in 0..config.periods {
        let mut dpos = 0.0;
        let mut djoints = 0.0;
        let mut pitch_sum = 0.0;
        for k in 0..config.steps_per_period {
            let step = period * config.steps_per_period + k;
            let phase = config.phase_of(step);
            let (commands, strokes) = leg_commands(phase, &params, morphology, config, step)?;
            let mut delta = walker.step(commands, strokes);
            if let Some((normal, rng)) = noise.as_mut() {
                let jitter = normal.sample(rng);
                walker.nudge(jitter);
                delta.dpos += jitter;
            }
            dpos += delta.dpos;
            djoints += delta.djoints;
            pitch_sum += walker.body().body_pitch.abs();

            if record {
                let contact = walker.contact().copied().expect("contact set after a step");
                trace.push(TraceRow {
                    step,
                    time_s: step as f64 * config.dt(),
                    phase,
                    body_x_m: walker.body().x,
                    hip_height_mm: walker.body().hip_height,
                    stance_leg: contact.stance_leg,
                    contact_vertex: contact.contact_vertex,
                    angles: commands,
                    step_dpos_m: delta.dpos,
                });
            }
        }
        let angle_body = pitch_sum / config.steps_per_period as f64;
        periods.push(period_reward(dpos, djoints, angle_body, &config.reward_weights));
    }

    Ok(Evaluation {
        fitness: periods.iter().map(|p| p.reward).sum(),
        distance_m: walker.body().x,
        periods,
        trace,
    })
}

fn leg_commands(
    phase: f64,
    params: &GaitParameters,
    morphology: &Morphology,
    config: &SimConfig,
    step: usize,
) -> Result<([JointAngles; 2], [StrokeState; 2]), SimError> {
    let mut commands = [JointAngles::default(); 2];
    let mut strokes = [StrokeState::Ground; 2];
    for leg in 0..2 {
        let p = leg_phase(phase, leg);
        strokes[leg] = StrokeState::of(p);
        commands[leg] = joint_commands(GaitPhase::new(p, config.period), params, morphology)
            .map_err(|source| SimError::EvaluationFailed { step, leg, source })?;
    }
    Ok((commands, strokes))
}

/// Writes the per-step trace as CSV with a single header row.
pub fn write_trace_csv<W: Write>(
    out: &mut W,
    kind: MorphologyKind,
    rows: &[TraceRow],
) -> io::Result<()> {
    let footed = kind.has_foot();
    let mut header = String::from(
        "step,time_s,phase,body_x_m,hip_height_mm,stance_leg,contact_vertex",
    );
    for leg in 0..2 {
        header.push_str(&format!(",leg{leg}_hip_rad,leg{leg}_knee_rad"));
        if footed {
            header.push_str(&format!(",leg{leg}_ankle_rad"));
        }
    }
    header.push_str(",step_dpos_m");
    writeln!(out, "{header}")?;

    for r in rows {
        let stance = r.stance_leg.map_or_else(String::new, |l| l.to_string());
        write!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            float(r.time_s),
            float(r.phase),
            float(r.body_x_m),
            float(r.hip_height_mm),
            stance,
            r.contact_vertex.as_str()
        )?;
        for a in &r.angles {
            write!(out, ",{},{}", float(a.hip), float(a.knee))?;
            if footed {
                write!(out, ",{}", float(a.ankle.unwrap_or(f64::NAN)))?;
            }
        }
        writeln!(out, ",{}", float(r.step_dpos_m))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::PlanarPoint;

    fn tip_leg(x: f64, y: f64) -> LegLandmarks {
        LegLandmarks {
            knee: PlanarPoint::new(0.0, 100.0),
            ankle: PlanarPoint::new(x, y),
            heel: None,
            toe: None,
        }
    }

    #[test]
    fn deeper_leg_wins() {
        let legs = [tip_leg(10.0, 325.0), tip_leg(-5.0, 300.0)];
        let (c, h) = resolve_contact(&legs, [StrokeState::Lift, StrokeState::Ground]);
        assert_eq!(c.stance_leg, Some(0));
        assert_eq!(c.contact_vertex, ContactVertex::Tip);
        assert_eq!(c.contact_x_body, 10.0);
        assert_eq!(h, 325.0);
    }

    #[test]
    fn tie_prefers_ground_leg_then_leg_zero() {
        let legs = [tip_leg(10.0, 325.0), tip_leg(-5.0, 325.0)];
        let (c, _) = resolve_contact(&legs, [StrokeState::Lift, StrokeState::Ground]);
        assert_eq!(c.stance_leg, Some(1));
        let (c, _) = resolve_contact(&legs, [StrokeState::Ground, StrokeState::Ground]);
        assert_eq!(c.stance_leg, Some(0));
        let (c, _) = resolve_contact(&legs, [StrokeState::Lift, StrokeState::Lift]);
        assert_eq!(c.stance_leg, Some(0));
    }

    #[test]
    fn tilted_static_foot_contacts_toe() {
        let m = Morphology::new(MorphologyKind::StaticAnkle);
        // Calf tilted backward (hip positive) with a fixed 90° ankle tips the toe down.
        let a = JointAngles::new(0.3, 0.0).with_ankle(std::f64::consts::FRAC_PI_2);
        let lm = forward_kinematics(&a, &m.geometry, m.kind);
        assert!(lm.toe.unwrap().y > lm.heel.unwrap().y);
        let level = forward_kinematics(
            &JointAngles::new(0.0, 0.0).with_ankle(std::f64::consts::FRAC_PI_2),
            &m.geometry,
            m.kind,
        );
        let (c, h) = resolve_contact(&[lm, level], [StrokeState::Ground, StrokeState::Lift]);
        assert_eq!(c.stance_leg, Some(0));
        assert_eq!(c.contact_vertex, ContactVertex::Toe);
        assert_eq!(h, lm.toe.unwrap().y);
    }

    fn nofoot_angles(x: f64) -> JointAngles {
        crate::kinematics::inverse_kinematics(
            PlanarPoint::new(x, 325.0),
            &Morphology::new(MorphologyKind::NoFoot).geometry,
        )
        .unwrap()
    }

    #[test]
    fn pinned_contact_moves_body() {
        let mut w = Walker::new(Morphology::new(MorphologyKind::NoFoot));
        let lifted = JointAngles::new(1.0, 2.0);
        let strokes = [StrokeState::Ground, StrokeState::Lift];
        let first = w.step([nofoot_angles(100.0), lifted], strokes);
        assert_eq!(first.dpos, 0.0);
        let d = w.step([nofoot_angles(90.0), lifted], strokes);
        assert!((d.dpos - 0.010).abs() < 1e-12, "{}", d.dpos);
        assert!((w.body().x - 0.010).abs() < 1e-12);
    }

    #[test]
    fn stance_handoff_gives_no_progress() {
        let mut w = Walker::new(Morphology::new(MorphologyKind::NoFoot));
        let lifted = JointAngles::new(1.0, 2.0);
        w.step([nofoot_angles(100.0), lifted], [StrokeState::Ground, StrokeState::Lift]);
        let d = w.step([lifted, nofoot_angles(50.0)], [StrokeState::Lift, StrokeState::Ground]);
        assert_eq!(d.dpos, 0.0);
        assert_eq!(w.contact().unwrap().stance_leg, Some(1));
    }

    #[test]
    fn frozen_commands_do_nothing() {
        let mut w = Walker::new(Morphology::new(MorphologyKind::NoFoot));
        let c = [nofoot_angles(30.0), JointAngles::new(0.1, 0.5)];
        let s = [StrokeState::Ground, StrokeState::Lift];
        w.step(c, s);
        let d = w.step(c, s);
        assert_eq!(d, StepDelta { dpos: 0.0, djoints: 0.0 });
    }

    #[test]
    fn reward_arithmetic() {
        let w = RewardWeights::default();
        assert_eq!(period_reward(0.0, 0.0, 0.0, &w).reward, -0.5);
        assert_eq!(period_reward(1.0, 100.0, 0.0, &w).reward, 0.465);
        assert!((period_reward(0.3, 20.0, 0.0, &w).reward + 0.207).abs() < 1e-15);
        // The pitch term is live even though the supported body never tilts.
        assert!((period_reward(0.0, 0.0, 0.1, &w).reward + 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = SimConfig {
            steps_per_period: 5,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            periods: 0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let mut bad = SimConfig::default();
        bad.reward_weights.w_joints = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wrong_genome_length_is_rejected() {
        let g = GaitGenome::uniform(0.5, 9);
        let err = evaluate_gait(&g, &Morphology::new(MorphologyKind::NoFoot), &SimConfig::default(), 0)
            .unwrap_err();
        assert!(matches!(err, SimError::Genome(_)));
    }

    #[test]
    fn short_leg_fails_evaluation() {
        let mut m = Morphology::new(MorphologyKind::NoFoot);
        m.geometry.thigh_len = 170.0;
        m.geometry.calf_len = 170.0;
        let err = evaluate_gait(&GaitGenome::uniform(0.5, 6), &m, &SimConfig::default(), 0)
            .unwrap_err();
        assert!(matches!(err, SimError::EvaluationFailed { step: 0, .. }));
    }

    #[test]
    fn noise_is_seeded() {
        let m = Morphology::new(MorphologyKind::NoFoot);
        let cfg = SimConfig {
            progress_noise_mm: 0.5,
            ..SimConfig::default()
        };
        let g = GaitGenome::uniform(0.5, 6);
        let a = evaluate_gait(&g, &m, &cfg, 7).unwrap();
        let b = evaluate_gait(&g, &m, &cfg, 7).unwrap();
        let c = evaluate_gait(&g, &m, &cfg, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.fitness, c.fitness);
    }

    #[test]
    fn trace_csv_shape() {
        let m = Morphology::new(MorphologyKind::ActiveAnkle);
        let cfg = SimConfig {
            periods: 1,
            steps_per_period: 10,
            ..SimConfig::default()
        };
        let e = evaluate_gait_traced(&GaitGenome::uniform(0.5, 9), &m, &cfg, 0).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, m.kind, &e.trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert_eq!(lines[0].split(',').count(), 14);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 14));
    }
}
