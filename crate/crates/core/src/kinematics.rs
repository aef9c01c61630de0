//! Planar kinematics of a two-link leg with an optional ankle-mounted foot.
//!
//! Everything is expressed in the hip frame: `x` points forward, `y` points
//! down from the hip joint, lengths are millimetres and angles radians.
//!
//! Angle convention:
//! - `hip` is measured from the straight-down vertical and is positive when
//!   the thigh swings backward.
//! - `knee` is the flexion of the calf relative to the thigh; the calf points
//!   along `hip - knee`, so the knee joint itself points backward (bird leg).
//! - `ankle` is the interior angle between the calf and the foot; at 90° the
//!   foot is perpendicular to the calf, larger values point the toe down.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on the outer reach boundary so a fully stretched leg
/// (e.g. the exact point `(0, L1 + L2)`) is still reachable.
const REACH_SLACK_MM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum KinematicsError {
    #[error("target ({x:.3}, {y:.3}) mm at distance {distance:.3} mm is outside the reachable annulus ({min:.3}, {max:.3}]")]
    UnreachableTarget {
        x: f64,
        y: f64,
        distance: f64,
        min: f64,
        max: f64,
    },
}

/// A point in the hip frame, millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: PlanarPoint) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector at `angle` from straight down, positive toward `-x`.
    fn from_down_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: -s, y: c }
    }
}

impl Add for PlanarPoint {
    type Output = PlanarPoint;
    fn add(self, rhs: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for PlanarPoint {
    type Output = PlanarPoint;
    fn sub(self, rhs: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<PlanarPoint> for f64 {
    type Output = PlanarPoint;
    fn mul(self, rhs: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self * rhs.x, self * rhs.y)
    }
}

impl fmt::Display for PlanarPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// Link and foot dimensions, millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegGeometry {
    pub thigh_len: f64,
    pub calf_len: f64,
    /// Perpendicular distance from the ankle joint to the sole.
    pub foot_drop: f64,
    /// Sole length behind the ankle.
    pub heel_ext: f64,
    /// Sole length ahead of the ankle.
    pub toe_ext: f64,
}

impl LegGeometry {
    pub const THIGH_LEN_MM: f64 = 230.0;
    pub const CALF_LEN_MM: f64 = 230.0;
    pub const FOOT_DROP_MM: f64 = 40.0;
    pub const HEEL_EXT_MM: f64 = 30.0;
    pub const TOE_EXT_MM: f64 = 80.0;

    /// Default footed leg.
    pub const fn footed() -> Self {
        Self {
            thigh_len: Self::THIGH_LEN_MM,
            calf_len: Self::CALF_LEN_MM,
            foot_drop: Self::FOOT_DROP_MM,
            heel_ext: Self::HEEL_EXT_MM,
            toe_ext: Self::TOE_EXT_MM,
        }
    }

    /// A bare two-link leg, foot fields zeroed.
    pub const fn two_link(thigh_len: f64, calf_len: f64) -> Self {
        Self {
            thigh_len,
            calf_len,
            foot_drop: 0.0,
            heel_ext: 0.0,
            toe_ext: 0.0,
        }
    }

    pub fn reach(&self) -> f64 {
        self.thigh_len + self.calf_len
    }

    /// Deepest point any leg landmark can reach below the hip.
    pub fn max_depth(&self) -> f64 {
        self.reach() + self.foot_drop.max(0.0) + self.heel_ext.max(self.toe_ext).max(0.0)
    }
}

impl Default for LegGeometry {
    fn default() -> Self {
        Self::footed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphologyKind {
    #[serde(rename = "nofoot")]
    NoFoot,
    #[serde(rename = "static")]
    StaticAnkle,
    #[serde(rename = "active")]
    ActiveAnkle,
}

impl MorphologyKind {
    pub const ALL: [MorphologyKind; 3] = [
        MorphologyKind::NoFoot,
        MorphologyKind::StaticAnkle,
        MorphologyKind::ActiveAnkle,
    ];

    pub fn has_foot(self) -> bool {
        !matches!(self, MorphologyKind::NoFoot)
    }

    pub fn actuated_joints(self) -> usize {
        match self {
            MorphologyKind::NoFoot | MorphologyKind::StaticAnkle => 2,
            MorphologyKind::ActiveAnkle => 3,
        }
    }

    pub fn genome_len(self) -> usize {
        match self {
            MorphologyKind::NoFoot | MorphologyKind::StaticAnkle => 6,
            MorphologyKind::ActiveAnkle => 9,
        }
    }

    /// Short name used on the command line and in output paths.
    pub fn as_str(self) -> &'static str {
        match self {
            MorphologyKind::NoFoot => "nofoot",
            MorphologyKind::StaticAnkle => "static",
            MorphologyKind::ActiveAnkle => "active",
        }
    }
}

impl fmt::Display for MorphologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown morphology `{0}` (expected nofoot, static or active)")]
pub struct ParseMorphologyError(pub String);

impl std::str::FromStr for MorphologyKind {
    type Err = ParseMorphologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nofoot" | "no_foot" | "no-foot" => Ok(MorphologyKind::NoFoot),
            "static" => Ok(MorphologyKind::StaticAnkle),
            "active" => Ok(MorphologyKind::ActiveAnkle),
            _ => Err(ParseMorphologyError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Morphology {
    pub kind: MorphologyKind,
    pub geometry: LegGeometry,
}

impl Morphology {
    /// Morphology with the default leg geometry; the foot is dropped for `NoFoot`.
    pub fn new(kind: MorphologyKind) -> Self {
        let geometry = if kind.has_foot() {
            LegGeometry::footed()
        } else {
            LegGeometry::two_link(LegGeometry::THIGH_LEN_MM, LegGeometry::CALF_LEN_MM)
        };
        Self { kind, geometry }
    }
}

impl From<MorphologyKind> for Morphology {
    fn from(kind: MorphologyKind) -> Self {
        Morphology::new(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAngles {
    pub hip: f64,
    pub knee: f64,
    /// Interior calf-foot angle; `None` for legs without a foot.
    pub ankle: Option<f64>,
}

impl JointAngles {
    pub fn new(hip: f64, knee: f64) -> Self {
        Self {
            hip,
            knee,
            ankle: None,
        }
    }

    pub fn with_ankle(self, ankle: f64) -> Self {
        Self {
            ankle: Some(ankle),
            ..self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.hip.is_finite() && self.knee.is_finite() && self.ankle.map_or(true, f64::is_finite)
    }
}

/// Leg landmarks in the hip frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegLandmarks {
    pub knee: PlanarPoint,
    /// Calf endpoint: the ankle joint, or the calf tip for a footless leg.
    pub ankle: PlanarPoint,
    pub heel: Option<PlanarPoint>,
    pub toe: Option<PlanarPoint>,
}

impl LegLandmarks {
    pub fn tip(&self) -> PlanarPoint {
        self.ankle
    }
}

/// Positions of knee, calf end and (for footed legs) heel and toe.
///
/// A footed morphology with no ankle angle set is evaluated at 90°.
pub fn forward_kinematics(
    angles: &JointAngles,
    geom: &LegGeometry,
    kind: MorphologyKind,
) -> LegLandmarks {
    let knee = geom.thigh_len * PlanarPoint::from_down_angle(angles.hip);
    let calf_dir = angles.hip - angles.knee;
    let ankle = knee + geom.calf_len * PlanarPoint::from_down_angle(calf_dir);

    if !kind.has_foot() {
        return LegLandmarks {
            knee,
            ankle,
            heel: None,
            toe: None,
        };
    }

    let ankle_angle = angles.ankle.unwrap_or(FRAC_PI_2);
    let forward = PlanarPoint::from_down_angle(calf_dir - PI + ankle_angle);
    let sole_normal = PlanarPoint::from_down_angle(calf_dir - FRAC_PI_2 + ankle_angle);
    let sole = ankle + geom.foot_drop * sole_normal;

    LegLandmarks {
        knee,
        ankle,
        heel: Some(sole - geom.heel_ext * forward),
        toe: Some(sole + geom.toe_ext * forward),
    }
}

/// Hip and knee angles placing the calf end at `target`.
///
/// Always returns the backward-knee branch, with `knee` in `[0, π)`.
pub fn inverse_kinematics(
    target: PlanarPoint,
    geom: &LegGeometry,
) -> Result<JointAngles, KinematicsError> {
    let l1 = geom.thigh_len;
    let l2 = geom.calf_len;
    let dist_sq = target.x * target.x + target.y * target.y;
    let dist = dist_sq.sqrt();
    let min = (l1 - l2).abs();
    let max = l1 + l2;

    if !target.is_finite() || dist <= min || dist > max + REACH_SLACK_MM {
        return Err(KinematicsError::UnreachableTarget {
            x: target.x,
            y: target.y,
            distance: dist,
            min,
            max,
        });
    }

    // Law of cosines: the angle opposite the hip-target line is π - knee.
    let cos_inner = ((l1 * l1 + l2 * l2 - dist_sq) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let knee = PI - cos_inner.acos();

    let cos_offset = ((l1 * l1 + dist_sq - l2 * l2) / (2.0 * l1 * dist)).clamp(-1.0, 1.0);
    let bearing = (-target.x).atan2(target.y);
    let hip = bearing + cos_offset.acos();

    Ok(JointAngles::new(hip, knee))
}

/// Ankle angle that keeps the sole horizontal for the given hip and knee.
pub fn ankle_parallel_angle(hip: f64, knee: f64) -> f64 {
    FRAC_PI_2 - (hip - knee)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    fn leg170() -> LegGeometry {
        LegGeometry {
            thigh_len: 170.0,
            calf_len: 170.0,
            foot_drop: 40.0,
            heel_ext: 30.0,
            toe_ext: 80.0,
        }
    }

    #[test]
    fn straight_leg_points_down() {
        let lm = forward_kinematics(&JointAngles::new(0.0, 0.0), &leg170(), MorphologyKind::NoFoot);
        assert!(lm.tip().distance(PlanarPoint::new(0.0, 340.0)) < EPS);
        assert!(lm.heel.is_none() && lm.toe.is_none());
    }

    #[test]
    fn perpendicular_foot_under_straight_calf() {
        let angles = JointAngles::new(0.0, 0.0).with_ankle(FRAC_PI_2);
        let lm = forward_kinematics(&angles, &leg170(), MorphologyKind::StaticAnkle);
        assert!(lm.toe.unwrap().distance(PlanarPoint::new(80.0, 380.0)) < EPS);
        assert!(lm.heel.unwrap().distance(PlanarPoint::new(-30.0, 380.0)) < EPS);
    }

    #[test]
    fn bent_knee_tip() {
        // Oracle: knee at 170*(−sin45, cos45), calf along −45°.
        let h = 45f64.to_radians();
        let knee_pt = PlanarPoint::new(-170.0 * h.sin(), 170.0 * h.cos());
        let tip = knee_pt + PlanarPoint::new(170.0 * h.sin(), 170.0 * h.cos());
        let lm = forward_kinematics(
            &JointAngles::new(h, FRAC_PI_2),
            &leg170(),
            MorphologyKind::NoFoot,
        );
        assert!(lm.tip().distance(tip) < EPS);
        assert!((lm.tip().y - 240.416).abs() < 1e-3);
        assert!(lm.tip().x.abs() < EPS);
        assert!(lm.knee.x < 0.0, "knee joint points backward");
    }

    #[test]
    fn ik_full_extension() {
        let a = inverse_kinematics(PlanarPoint::new(0.0, 340.0), &leg170()).unwrap();
        assert_eq!(a.knee, 0.0);
        assert_eq!(a.hip, 0.0);
    }

    #[test]
    fn ik_right_angle_knee() {
        let y = 170.0 * 2f64.sqrt();
        let a = inverse_kinematics(PlanarPoint::new(0.0, y), &leg170()).unwrap();
        assert!((a.knee - FRAC_PI_2).abs() < 1e-12);
        assert!((a.hip - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn ik_unreachable() {
        let err = inverse_kinematics(PlanarPoint::new(0.0, 400.0), &leg170()).unwrap_err();
        assert!(matches!(err, KinematicsError::UnreachableTarget { .. }));
        // Folded completely onto the hip is outside the knee range too.
        assert!(inverse_kinematics(PlanarPoint::new(0.0, 0.0), &leg170()).is_err());
        assert!(inverse_kinematics(PlanarPoint::new(f64::NAN, 100.0), &leg170()).is_err());
    }

    #[test]
    fn parallel_angle_examples() {
        assert!((ankle_parallel_angle(0.0, 0.0) - FRAC_PI_2).abs() < 1e-15);
        let a = ankle_parallel_angle(30f64.to_radians(), 0.0);
        assert!((a - 60f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn morphology_counts() {
        assert_eq!(MorphologyKind::NoFoot.genome_len(), 6);
        assert_eq!(MorphologyKind::StaticAnkle.genome_len(), 6);
        assert_eq!(MorphologyKind::ActiveAnkle.genome_len(), 9);
        assert_eq!(MorphologyKind::StaticAnkle.actuated_joints(), 2);
        assert_eq!(MorphologyKind::ActiveAnkle.actuated_joints(), 3);
        assert_eq!(Morphology::new(MorphologyKind::NoFoot).geometry.foot_drop, 0.0);
        assert!(Morphology::new(MorphologyKind::ActiveAnkle).geometry.reach() >= 325.0);
    }

    #[test]
    fn morphology_parse_round_trip() {
        for k in MorphologyKind::ALL {
            assert_eq!(k.as_str().parse::<MorphologyKind>().unwrap(), k);
        }
        assert!("hoof".parse::<MorphologyKind>().is_err());
    }
}
