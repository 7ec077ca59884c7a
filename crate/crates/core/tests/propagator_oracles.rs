use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use tripod_gate::gate::{computational_state, product_input, run_gate};
use tripod_gate::hamiltonian::HamiltonianSpec;
use tripod_gate::hilbert::{HilbertSpace, QubitVector};
use tripod_gate::propagator::{
    integrate, propagate, ConstantGenerator, PropagatorOptions, TimeReversed,
};
use tripod_gate::pulses::GateConfig;

fn space() -> HilbertSpace {
    HilbertSpace::new(HilbertSpace::DEFAULT_N_MAX).unwrap()
}

fn plus_zero(space: HilbertSpace) -> tripod_gate::hilbert::StateVector {
    computational_state(space, &product_input(QubitVector::plus(), QubitVector::zero()))
}

#[test]
fn detuned_rabi_closed_form() {
    // H = (Ω/2)σ_x + (Δ/2)σ_z, generalized Rabi frequency W = √(Ω² + Δ²)
    let (omega, detuning) = (7.0, 3.0);
    let w = f64::hypot(omega, detuning);
    let h = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(detuning / 2.0, 0.0),
            C64::new(omega / 2.0, 0.0),
            C64::new(omega / 2.0, 0.0),
            C64::new(-detuning / 2.0, 0.0),
        ],
    );
    let psi = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let opts = PropagatorOptions { output_step: Some(0.05), ..Default::default() };
    let traj = integrate(&ConstantGenerator(h), &psi, 0.0, 3.0, &opts).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let (sn, cs) = (w * t / 2.0).sin_cos();
        let c0 = C64::new(cs, -detuning / w * sn);
        let c1 = C64::new(0.0, -omega / w * sn);
        assert!((s[0] - c0).norm() < 1e-8, "t = {t}");
        assert!((s[1] - c1).norm() < 1e-8, "t = {t}");
    }
}

#[test]
fn norm_conserved_over_full_gate_without_decay() {
    let space = space();
    let run = run_gate(&GateConfig::default(), space, &plus_zero(space), &PropagatorOptions::default())
        .unwrap();
    let worst = run.trajectory.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-8, "norm deviation {worst:e}");
    assert!(run.trajectory.times.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn self_convergence_under_tolerance_halving() {
    let space = space();
    let config = GateConfig::default();
    let psi0 = plus_zero(space);
    let finals: Vec<DVector<C64>> = [1e-7, 5e-8, 2.5e-8, 1e-11]
        .iter()
        .map(|&tol| {
            let run = run_gate(&config, space, &psi0, &PropagatorOptions::endpoints_only(tol)).unwrap();
            run.final_state().amplitudes().clone()
        })
        .collect();
    let reference = &finals[3];
    let errors: Vec<f64> = finals[..3].iter().map(|f| (f - reference).norm()).collect();
    assert!(errors[0] < 1e-5, "{errors:?}");
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
}

#[test]
fn forward_then_reversed_returns_initial_state() {
    let space = space();
    let spec = HamiltonianSpec::for_gate(space, &GateConfig::default()).unwrap();
    let (t0, t1) = (spec.schedule().start(), spec.schedule().end());
    let psi0 = plus_zero(space);
    let opts = PropagatorOptions::endpoints_only(1e-11);
    let forward = propagate(&spec, &psi0, t0, t1, &opts).unwrap();
    let reversed = TimeReversed { inner: &spec, t_end: t1 };
    let back = integrate(&reversed, forward.final_state(), 0.0, t1 - t0, &opts).unwrap();
    let err = (back.final_state() - psi0.amplitudes()).norm();
    assert!(err < 1e-6, "round trip error {err:e}");
}

#[test]
fn decay_makes_norm_non_increasing() {
    let space = space();
    let config = GateConfig { kappa: std::f64::consts::TAU * 4.1, ..GateConfig::default() };
    let minus = computational_state(space, &product_input(QubitVector::minus(), QubitVector::one()));
    let run = run_gate(&config, space, &minus, &PropagatorOptions::default()).unwrap();
    let norms = &run.trajectory.norms;
    assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    assert!(*norms.last().unwrap() < 0.99);
}

#[test]
fn identical_inputs_give_identical_trajectories() {
    let space = space();
    let opts = PropagatorOptions::default();
    let a = run_gate(&GateConfig::default(), space, &plus_zero(space), &opts).unwrap();
    let b = run_gate(&GateConfig::default(), space, &plus_zero(space), &opts).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
}
