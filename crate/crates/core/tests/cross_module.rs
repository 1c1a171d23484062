use proptest::prelude::*;
use thermofield::diagnostics::{mandel_q, mandel_q_gated_vacuum};
use thermofield::gates::{conjugate_operator, gate_vacuum, GateOp};
use thermofield::hilbert::{c, max_abs_diff, reduced_nontilde, trace_of_product};
use thermofield::nogo_maps::{cloning_linearity_gap, temperature_map, thermal_ratio};
use thermofield::teleport::{run_teleport, BranchSelection, ChannelVariant, NumericOptions};
use thermofield::thermo::{excited_thermofield, thermal_density, thermal_vacuum};
use thermofield::{Engine, FockOperators, ThermalParams, C64};

fn amplitudes() -> impl Strategy<Value = (C64, C64)> {
    (0.0..std::f64::consts::FRAC_PI_2, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU)
        .prop_map(|(phi, x, y)| (C64::from_polar(phi.cos(), x), C64::from_polar(phi.sin(), y)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vacuum_reduces_to_thermal_density(nbar in 0.01f64..2.0) {
        let p = ThermalParams::from_nbar(nbar, 1.0).unwrap();
        let n = 20;
        let vac = thermal_vacuum(&p, n).unwrap();
        let reduced = reduced_nontilde(&vac.state, n + 1).unwrap();
        prop_assert!(max_abs_diff(&reduced, &thermal_density(&p, n).unwrap()) < 1e-14);
    }

    #[test]
    fn engines_agree_at_equal_temperature((a0, a1) in amplitudes(), nbar in 0.05f64..0.5) {
        let p = ThermalParams::from_nbar(nbar, 1.0).unwrap();
        let (source, channel) = ChannelVariant::Thermo.specs(p, p);
        let opts = NumericOptions { cutoff: 16 };
        let abs = run_teleport([a0, a1], &source, &channel, Engine::Abstract, BranchSelection::All, opts).unwrap();
        let num = run_teleport([a0, a1], &source, &channel, Engine::Numeric, BranchSelection::All, opts).unwrap();
        for (x, y) in abs.iter().zip(&num) {
            prop_assert_eq!(x.branch, y.branch);
            prop_assert!((x.probability - y.probability).abs() < 1e-9);
            for k in 0..2 {
                prop_assert!((x.bob_amplitudes[k] - y.bob_amplitudes[k]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn phase_gates_leave_photon_statistics_alone(nbar in 0.1f64..2.0, phi in 0.0..std::f64::consts::TAU) {
        let p = ThermalParams::from_nbar(nbar, 1.0).unwrap();
        let n = p.cutoff_for_tail(1e-16);
        let fock = FockOperators::new(n);
        let g = GateOp::phase(n, phi);
        let gated = mandel_q_gated_vacuum(&g, &p, n).unwrap();
        let plain = mandel_q(&thermal_density(&p, n).unwrap(), &fock.number).unwrap();
        prop_assert!((gated.q - plain.q).abs() < 1e-10);
        prop_assert!((plain.q - p.nbar).abs() < 1e-9);
    }

    #[test]
    fn gated_vacuum_reduces_to_conjugated_density(nbar in 0.1f64..1.0, seed in any::<u64>()) {
        let p = ThermalParams::from_nbar(nbar, 1.0).unwrap();
        let n = 10;
        let g = GateOp::random(n, &mut thermofield::random::seeded_rng(seed));
        let psi = gate_vacuum(&g, &p, n).unwrap();
        let rho_g = conjugate_operator(&g, &thermal_density(&p, n).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&reduced_nontilde(&psi, n + 1).unwrap(), &rho_g) < 1e-12);
    }

    #[test]
    fn cloning_gap_matches_closed_form((a0, a1) in amplitudes(), nbar in 0.1f64..1.0) {
        let p = ThermalParams::from_nbar(nbar, 1.0).unwrap();
        let n = 14;
        let e0 = thermal_vacuum(&p, n).unwrap().state;
        let e1 = excited_thermofield(&p, n).unwrap().state;
        let gap = cloning_linearity_gap(a0, a1, [&e0, &e1]).unwrap();
        let closed = ((a0 * (a0 - 1.0)).norm_sqr() + 2.0 * (a0 * a1).norm_sqr() + (a1 * (a1 - 1.0)).norm_sqr()).sqrt();
        prop_assert!((gap - closed).abs() < 1e-10);
    }

    #[test]
    fn temperature_map_lands_on_target(n1 in 0.1f64..2.0, n2 in 0.1f64..2.0) {
        let (p1, p2) = (ThermalParams::from_nbar(n1, 1.0).unwrap(), ThermalParams::from_nbar(n2, 1.0).unwrap());
        let n = 12;
        let out = temperature_map(&thermal_density(&p1, n).unwrap(), &p2, n).unwrap();
        prop_assert!((thermal_ratio(&out).unwrap() - p2.tanh_theta().powi(2)).abs() < 1e-12);
        let fock = FockOperators::new(n);
        let mean = trace_of_product(&out, &fock.number).re;
        prop_assert!(mean < p2.nbar + 1e-12);
    }
}

#[test]
fn zero_temperature_vacuum_is_fock_vacuum() {
    let p = ThermalParams::zero_temperature(1.0).unwrap();
    let vac = thermal_vacuum(&p, 6).unwrap();
    assert_eq!(vac.state[0], c(1.0, 0.0));
    assert!(vac.state.iter().skip(1).all(|z| *z == c(0.0, 0.0)));
    assert_eq!(vac.tail_mass, 0.0);
}
