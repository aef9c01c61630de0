use gaitlab_core::gait::{
    ankle_kick, bezier_point, foot_target, joint_commands, kick_profile, leg_phase, GENE_RANGES,
    GROUND_LINE_MM,
};
use gaitlab_core::kinematics::inverse_kinematics;
use gaitlab_core::{denormalize, GaitGenome, GaitPhase, Morphology, MorphologyKind, PlanarPoint, StrokeState};
use proptest::prelude::*;

fn genome(len: usize) -> impl Strategy<Value = GaitGenome> {
    prop::collection::vec(0.0f64..=1.0, len).prop_map(|g| GaitGenome::new(g).unwrap())
}

fn point() -> impl Strategy<Value = PlanarPoint> {
    (-500.0f64..500.0, -500.0f64..500.0).prop_map(|(x, y)| PlanarPoint::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bezier_endpoints_are_exact(p0 in point(), c0 in point(), c1 in point(), p1 in point()) {
        prop_assert_eq!(bezier_point(0.0, p0, c0, c1, p1), p0);
        prop_assert_eq!(bezier_point(1.0, p0, c0, c1, p1), p1);
        let mid = bezier_point(0.5, p0, c0, c1, p1);
        let expect = 0.125 * (p0 + p1) + 0.375 * (c0 + c1);
        prop_assert!(mid.distance(expect) < 1e-9);
    }

    #[test]
    fn trajectory_is_continuous(g in genome(6)) {
        let params = denormalize(&g, MorphologyKind::NoFoot).unwrap();
        let tiny = 1e-12;
        let at = |p: f64| foot_target(p, &params).0;
        prop_assert!(at(0.5 - tiny).distance(at(0.5)) < 1e-6);
        prop_assert!(at(1.0 - tiny).distance(at(0.0)) < 1e-6);
        // Sampled trajectory never jumps more than a bounded amount per step.
        for i in 0..1000 {
            let a = at(i as f64 / 1000.0);
            let b = at(((i + 1) % 1000) as f64 / 1000.0);
            prop_assert!(a.distance(b) < 10.0);
        }
    }

    #[test]
    fn every_target_is_reachable(g in genome(9), phase in 0.0f64..1.0) {
        let params = denormalize(&g, MorphologyKind::ActiveAnkle).unwrap();
        let (target, state) = foot_target(phase, &params);
        prop_assert!(target.y <= GROUND_LINE_MM + 1e-9);
        if state == StrokeState::Ground {
            prop_assert_eq!(target.y, GROUND_LINE_MM);
        }
        for kind in MorphologyKind::ALL {
            let m = Morphology::new(kind);
            prop_assert!(inverse_kinematics(target, &m.geometry).is_ok());
        }
    }

    #[test]
    fn legs_are_half_a_cycle_apart(phase in 0.0f64..1.0) {
        prop_assert_eq!(leg_phase(phase, 0), phase);
        let other = leg_phase(phase, 1);
        prop_assert!((0.0..1.0).contains(&other));
        let gap = (other - phase).rem_euclid(1.0);
        prop_assert!((gap - 0.5).abs() < 1e-12);
        prop_assert_ne!(StrokeState::of(phase), StrokeState::of(other));
    }

    #[test]
    fn denormalize_is_affine(g in genome(9)) {
        let p = denormalize(&g, MorphologyKind::ActiveAnkle).unwrap();
        let values = [
            p.touch_down.x, p.touch_down_control.x, p.touch_down_control.y,
            p.lift_off.x, p.lift_off_control.x, p.lift_off_control.y,
            p.ankle_amount, p.ankle_speed, p.ankle_offset,
        ];
        for (i, v) in values.iter().enumerate() {
            let (lo, hi) = GENE_RANGES[i];
            prop_assert!((v - (lo + (hi - lo) * g.genes()[i])).abs() < 1e-9);
            prop_assert!(*v >= lo.min(hi) - 1e-9 && *v <= lo.max(hi) + 1e-9);
        }
    }

    #[test]
    fn kick_is_bounded(g in genome(9), phase in 0.0f64..1.0, period in 0.2f64..3.0) {
        let params = denormalize(&g, MorphologyKind::ActiveAnkle).unwrap();
        let k = ankle_kick(GaitPhase::new(phase, period), &params);
        prop_assert!(k >= 0.0 && k <= params.ankle_amount);
        if phase < 0.5 {
            prop_assert_eq!(k, 0.0);
        }
    }

    #[test]
    fn kick_profile_peaks_at_one(u in -20.0f64..20.0) {
        let v = kick_profile(u);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= 1.0 + 1e-15);
    }

    #[test]
    fn static_ankle_is_fixed(g in genome(6), phase in 0.0f64..1.0) {
        let params = denormalize(&g, MorphologyKind::StaticAnkle).unwrap();
        let m = Morphology::new(MorphologyKind::StaticAnkle);
        let a = joint_commands(GaitPhase::new(phase, 1.0), &params, &m).unwrap();
        prop_assert_eq!(a.ankle, Some(std::f64::consts::FRAC_PI_2));
    }
}

#[test]
fn genome_length_is_checked() {
    assert!(denormalize(&GaitGenome::uniform(0.5, 6), MorphologyKind::ActiveAnkle).is_err());
    assert!(denormalize(&GaitGenome::uniform(0.5, 9), MorphologyKind::NoFoot).is_err());
    assert!(GaitGenome::new(vec![0.5, 1.2]).is_err());
}
