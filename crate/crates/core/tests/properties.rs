use proptest::prelude::*;
use wsa_core::aom::{attenuation_vs_frequency, attenuation_vs_voltage, calibrate, diffraction_efficiency, grid, AomModel, AomPhysics, VoltageCalibrationTable};
use wsa_core::attack::{per_station_gain, system_gain_factor, GainTable};
use wsa_core::keyrate::sns::sns_key_rate;
use wsa_core::keyrate::tf::tf_key_rate;
use wsa_core::params::{binary_entropy, single_arm_transmittance, ChannelParams, IntensitySettings, SystemParams};
use wsa_core::sweep::SweepSpec;

proptest! {
    #[test]
    fn entropy_symmetric(x in 0.0f64..=1.0) {
        let a = binary_entropy(x).unwrap();
        let b = binary_entropy(1.0 - x).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn entropy_rejects_outside_unit(x in prop_oneof![-1e3f64..-1e-12, 1.0 + 1e-12..1e3]) {
        prop_assert!(binary_entropy(x).is_err());
    }

    #[test]
    fn transmittance_decreasing_and_linear(l in 0.0f64..800.0, dl in 0.1f64..100.0, eta in 0.01f64..0.5, k in 0.1f64..2.0) {
        let ch = |l: f64, eta: f64| ChannelParams::new(0.2, l, eta, 1e-8, 0.03).unwrap();
        prop_assert!(single_arm_transmittance(&ch(l + dl, eta)) < single_arm_transmittance(&ch(l, eta)));
        let scaled = single_arm_transmittance(&ch(l, (eta * k).min(1.0)));
        let expected = single_arm_transmittance(&ch(l, eta)) * (eta * k).min(1.0) / eta;
        prop_assert!((scaled - expected).abs() <= 1e-12 * expected.max(1e-300));
    }

    #[test]
    fn intensity_ordering_enforced(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let ok = a > b && b > c;
        let r1 = IntensitySettings::new(a, b, c);
        let r2 = IntensitySettings::new(a, b, c);
        prop_assert_eq!(r1.is_ok(), ok);
        prop_assert_eq!(r1, r2);
    }

    #[test]
    fn efficiency_bounded_and_loss_floor(f in 0.0f64..1000.0) {
        let p = AomPhysics::default();
        let eff = diffraction_efficiency(f, &p);
        prop_assert!((0.0..=1.0).contains(&eff));
        prop_assert!(attenuation_vs_frequency(f, &p) >= p.delta_aom_db - 1e-12);
    }

    #[test]
    fn gain_monotone_symmetric(a in 0.0f64..=30.0, b in 0.0f64..=30.0) {
        let t = GainTable::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(per_station_gain(lo, &t).unwrap() <= per_station_gain(hi, &t).unwrap());
        let g = system_gain_factor(a, b, &t).unwrap();
        prop_assert_eq!(g, system_gain_factor(b, a, &t).unwrap());
        prop_assert!(g >= 1.0);
        prop_assert_eq!(g == 1.0, a == 0.0 && b == 0.0);
    }

    #[test]
    fn tf_overestimation(l in 0.0f64..700.0, g in 1.0f64..1.2) {
        let p = SystemParams::tf_default().with_length(l).unwrap();
        let e = tf_key_rate(&p, g).unwrap();
        if e.r_estimated > 0.0 && e.r_true > 0.0 {
            prop_assert!(e.r_estimated >= e.r_true);
        }
        prop_assert!(e.r_estimated.is_finite() && e.r_true.is_finite());
    }

    #[test]
    fn tf_collapse_at_unit_gain(l in 0.0f64..800.0) {
        let p = SystemParams::tf_default().with_length(l).unwrap();
        let e = tf_key_rate(&p, 1.0).unwrap();
        prop_assert_eq!(e.r_estimated.to_bits(), e.r_true.to_bits());
        prop_assert_eq!(e.estimated, e.truth);
    }

    #[test]
    fn sns_overestimation_and_probabilities(l in 0.0f64..1000.0, g in 1.0f64..1.2) {
        let p = SystemParams::sns_default().with_length(l).unwrap();
        let e = sns_key_rate(&p, g).unwrap();
        if e.r_estimated > 0.0 && e.r_true > 0.0 {
            prop_assert!(e.r_estimated >= e.r_true);
        }
        for q in [e.estimated, e.truth] {
            for v in [q.s1_l, q.e1_u, q.e_z] {
                prop_assert!((0.0..=1.0).contains(&v), "{v}");
            }
        }
    }

    #[test]
    fn sns_collapse_at_unit_gain(l in 0.0f64..1000.0) {
        let p = SystemParams::sns_default().with_length(l).unwrap();
        let e = sns_key_rate(&p, 1.0).unwrap();
        prop_assert_eq!(e.r_estimated.to_bits(), e.r_true.to_bits());
        prop_assert_eq!(e.estimated, e.truth);
    }

    #[test]
    fn sweep_display_round_trips(start in -1e3f64..1e3, span in 0.0f64..1e3, step in 1e-2f64..1e2) {
        let s = SweepSpec::new(wsa_core::sweep::Variable::Distance, start, start + span, step).unwrap();
        prop_assert_eq!(s.to_string().parse::<SweepSpec>().unwrap(), s);
        let v = s.values();
        prop_assert!(!v.is_empty() && *v.last().unwrap() <= s.stop + 1e-6 * step);
    }
}

#[test]
fn voltage_knots_exact() {
    let t = VoltageCalibrationTable::default();
    for (v, a) in t.entries() {
        assert_eq!(attenuation_vs_voltage(v, &t).value, a);
    }
}

#[test]
fn calibrated_point_is_frequency_minimum() {
    // both the measured table and the analytic curve
    for model in [AomModel::default(), AomModel::analytic(AomPhysics::default(), VoltageCalibrationTable::default())] {
        let cal = calibrate(&model, &grid(8.5, 15.0, 0.05), &grid(150.0, 240.0, 1.0)).unwrap();
        let at = |f: f64| model.attenuation(f, cal.v_o).db;
        for i in 1..=60 {
            let fd = 0.5 * i as f64;
            assert!(at(cal.f_o + fd) >= at(cal.f_o), "+{fd}");
            assert!(at(cal.f_o - fd) >= at(cal.f_o), "-{fd}");
        }
    }
}
