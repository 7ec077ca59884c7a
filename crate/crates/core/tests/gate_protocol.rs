use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use tripod_gate::gate::*;
use tripod_gate::hamiltonian::HamiltonianSpec;
use tripod_gate::hilbert::{AtomLevel, HilbertSpace, QubitVector};
use tripod_gate::propagator::{propagate, PropagatorOptions};
use tripod_gate::pulses::{build_rotation_schedule, GateConfig};

fn space() -> HilbertSpace {
    HilbertSpace::new(HilbertSpace::DEFAULT_N_MAX).unwrap()
}

fn opts() -> PropagatorOptions {
    PropagatorOptions::endpoints_only(1e-9)
}

#[test]
fn non_control_branch_is_untouched() {
    let config = GateConfig { chi: 0.6, phi1: 0.9, ..GateConfig::default() };
    let basis = ControlBasis::from_config(&config);
    for target in [QubitVector::zero(), QubitVector::one()] {
        let input = product_input(basis.non_control(), target);
        let psi0 = computational_state(space(), &input);
        let run = run_gate(&config, space(), &psi0, &opts()).unwrap();
        let f = psi0.overlap(run.final_state()).unwrap().norm_sqr();
        assert!(f >= 0.99, "{f}");
    }
}

#[test]
fn step_one_moves_control_state_to_ancilla() {
    let config = GateConfig { chi: 1.1, phi1: -0.4, ..GateConfig::default() };
    let basis = ControlBasis::from_config(&config);
    for (s, target) in [(AtomLevel::G0, QubitVector::zero()), (AtomLevel::G1, QubitVector::one())] {
        let psi0 = computational_state(space(), &product_input(basis.control(), target));
        let run = run_gate(&config, space(), &psi0, &opts()).unwrap();
        let p = run.checkpoints[0].population(AtomLevel::Anc, s, 0).unwrap();
        assert!(p >= 0.99, "{p}");
    }
}

#[test]
fn control_branch_receives_rotation() {
    let config = GateConfig::default();
    let basis = ControlBasis::from_config(&config);
    let u = ideal_unitary(config.delta, config.theta, config.phi2);
    for s in 0..2 {
        let target = if s == 0 { QubitVector::zero() } else { QubitVector::one() };
        let psi0 = computational_state(space(), &product_input(basis.control(), target));
        let run = run_gate(&config, space(), &psi0, &opts()).unwrap();
        let rotated = QubitVector::normalized(u[(0, s)], u[(1, s)]);
        let expected = computational_state(space(), &product_input(basis.control(), rotated));
        let f = expected.overlap(run.final_state()).unwrap().norm_sqr();
        assert!(f >= 0.98, "{f}");
    }
}

#[test]
fn zero_rotation_gives_identity() {
    let config = GateConfig { delta: 0.0, xi: 0.0, xi_prime: 0.0, ..GateConfig::default() };
    let g = extract_gate_matrix(&config, space(), &opts()).unwrap();
    assert!(g.max_deviation(&Matrix4::identity()) <= 0.05, "{}", g.matrix);
}

#[test]
fn uncorrected_phase_shows_up_in_control_block() {
    let residual = 0.9;
    let base = GateConfig::default();
    let config = GateConfig {
        xi_prime: base.xi - base.delta / 2.0 - residual,
        phase_corrected: false,
        ..base
    };
    let g = extract_gate_matrix(&config, space(), &opts()).unwrap();
    let u = ideal_unitary(config.delta, config.theta, config.phi2);
    let block = g.matrix.fixed_view::<2, 2>(2, 2).into_owned();
    let ratio = (u.adjoint() * block).trace() / 2.0;
    assert!((ratio.arg() - residual).abs() < 0.05, "{ratio}");
    assert!(g.max_deviation(&ideal_gate(&config)) <= 0.05);
}

#[test]
fn random_gates_match_block_form() {
    let mut runner = TestRunner::new(Config { cases: 6, ..Config::default() });
    let strategy = (0.0..TAU, 0.0..PI / 2.0, -PI..PI, 0.0..PI / 2.0, -PI..PI);
    runner
        .run(&strategy, |(delta, theta, phi2, chi, phi1)| {
            let config = GateConfig { delta, theta, phi2, chi, phi1, xi: delta / 2.0, xi_prime: 0.0, ..GateConfig::default() };
            let g = extract_gate_matrix(&config, space(), &opts()).unwrap();
            let ideal = ideal_gate(&config);
            prop_assert!(g.average_fidelity(&ideal) >= 0.98, "{}", g.average_fidelity(&ideal));
            prop_assert!(g.leakage() <= 0.05);
            prop_assert!(g.unitarity_defect() <= 1e-2 * 4.0);
            Ok(())
        })
        .unwrap();
}

#[test]
fn rotation_sequence_leaves_computational_states_in_place() {
    let config = GateConfig { theta: 0.5, phi2: 1.2, delta: 2.3, xi: 1.15, ..GateConfig::default() };
    let schedule = build_rotation_schedule(&config).unwrap();
    let spec = HamiltonianSpec::new(space(), schedule, config.g1, config.g2, 0.0, 0.0).unwrap();
    let (t0, t1) = (spec.schedule().start(), spec.schedule().end());
    for (l1, l2) in [
        (AtomLevel::G0, AtomLevel::G0),
        (AtomLevel::G0, AtomLevel::G1),
        (AtomLevel::G1, AtomLevel::G0),
        (AtomLevel::G1, AtomLevel::G1),
    ] {
        let psi0 = space().basis_state(l1, l2, 0).unwrap();
        let traj = propagate(&spec, &psi0, t0, t1, &opts()).unwrap();
        let p = traj.final_state()[space().index(tripod_gate::hilbert::BasisLabel::new(l1, l2, 0)).unwrap()].norm_sqr();
        assert!(p >= 0.99, "{l1}{l2}: {p}");
    }
}

#[test]
fn fidelity_table_trends() {
    let grid = [
        TablePoint::new(14.0, 34.0, 4.0),
        TablePoint::new(14.0, 34.0, 1.0),
        TablePoint::new(14.0, 34.0, 0.0),
        TablePoint::new(14.0, 68.0, 4.0),
    ];
    let rows = fidelity_table(&GateConfig::default(), &grid, KappaConvention::FieldDecay, space(), &opts()).unwrap();
    for r in &rows {
        assert!(r.f_plus_mean() > r.f_minus_mean() || r.kappa_mhz == 0.0);
        for f in r.f_minus.iter().chain(&r.f_plus) {
            assert!((0.0..=1.0).contains(f));
        }
    }
    assert!(rows[0].f_minus_mean() < rows[1].f_minus_mean() && rows[1].f_minus_mean() < rows[2].f_minus_mean());
    assert!(rows[0].f_plus_mean() < rows[1].f_plus_mean() && rows[1].f_plus_mean() < rows[2].f_plus_mean());
    assert!(rows[3].f_minus_mean() > rows[0].f_minus_mean());
    assert!(rows[3].f_plus_mean() > rows[0].f_plus_mean());
    assert!(rows[2].f_minus_mean() >= 0.98 && rows[2].f_plus_mean() >= 0.98);
}

#[test]
fn field_convention_doubles_the_loss_exponent() {
    let point = [TablePoint::new(14.0, 34.0, 2.0)];
    let base = GateConfig::default();
    let field = fidelity_table(&base, &point, KappaConvention::FieldDecay, space(), &opts()).unwrap()[0];
    let photon = fidelity_table(&base, &[TablePoint::new(14.0, 34.0, 4.0)], KappaConvention::PhotonDecay, space(), &opts())
        .unwrap()[0];
    assert_eq!(field.f_minus, photon.f_minus);
    assert_eq!(field.f_plus, photon.f_plus);
}

#[test]
fn stronger_coupling_keeps_cavity_emptier() {
    let base = GateConfig::default();
    let input = product_input(QubitVector::minus(), QubitVector::one());
    let photons = |config: &GateConfig| {
        let psi0 = computational_state(space(), &input);
        let run = run_gate(config, space(), &psi0, &PropagatorOptions::default()).unwrap();
        integrated_photon_population(space(), &run.trajectory)
    };
    let weak = photons(&base);
    let strong = photons(&GateConfig { g1: 2.0 * base.g1, g2: 2.0 * base.g2, ..base.clone() });
    assert!(strong <= 0.5 * weak, "{weak} -> {strong}");
    let bound = (base.omega_max / base.g1).powi(2);
    let duration = tripod_gate::pulses::build_gate_schedule(&base).unwrap().duration();
    assert!(weak <= bound * duration);
}

#[test]
fn simulated_measurement_of_sigma_x() {
    let [sx, _, sz] = pauli();
    let (gate, out) =
        simulate_measurement(&GateConfig::default(), &sx, QubitVector::zero(), space(), &opts()).unwrap();
    assert!(gate.leakage() <= 0.05);
    for k in 0..2 {
        assert!((out.probabilities[k] - 0.5).abs() <= 0.02, "{:?}", out.probabilities);
        assert!(out.eigen_fidelities[k].unwrap() >= 0.98);
    }
    let (_, out) =
        simulate_measurement(&GateConfig::default(), &sz, QubitVector::plus(), space(), &opts()).unwrap();
    assert!((out.probabilities[0] - 0.5).abs() <= 0.02);
    assert!(out.eigen_fidelities.iter().all(|f| f.unwrap() >= 0.98));
    let not_reflection = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    assert!(simulate_measurement(&GateConfig::default(), &not_reflection, QubitVector::zero(), space(), &opts()).is_err());
}
