//! Full three-step protocol, gate-matrix extraction, ideal targets, fidelity
//! sweeps and the projective-measurement composition.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::hamiltonian::{HamiltonianError, HamiltonianSpec};
use crate::hilbert::{AtomLevel, HilbertError, HilbertSpace, QubitVector, StateVector};
use crate::propagator::{propagate, PropagationError, PropagatorOptions, Trajectory};
use crate::pulses::{GateConfig, ScheduleError};

/// (δ, θ, φ⁽²⁾) realizing `|0> → (|0>+|1>)/√2`, `|1> → (−|0>+|1>)/√2`.
pub const R_PI_4: (f64, f64, f64) = (FRAC_PI_2, FRAC_PI_4, FRAC_PI_2);

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("initial state has weight {0:e} outside the computational subspace with an empty cavity")]
    NotComputational(f64),
    #[error("measurement operator is not a ±1 reflection (defect {0:e})")]
    NotReflection(f64),
    #[error("measurement operator is ±I and cannot be realized with δ = π")]
    TrivialReflection,
    #[error("grid entry {index} has negative κ ({kappa_mhz} MHz)")]
    NegativeKappa { index: usize, kappa_mhz: f64 },
}

/// The control state `|φ_c>` of the first qubit and its orthogonal partner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBasis {
    pub chi: f64,
    pub phi1: f64,
}

impl ControlBasis {
    pub fn from_config(config: &GateConfig) -> Self {
        Self { chi: config.chi, phi1: config.phi1 }
    }

    /// `cos χ|0> + sin χ e^{iφ}|1>`
    pub fn control(&self) -> QubitVector {
        let (s, c) = self.chi.sin_cos();
        QubitVector::normalized(C64::new(c, 0.0), C64::from_polar(s, self.phi1))
    }

    /// `cos χ e^{iφ}|1> − sin χ|0>`
    pub fn non_control(&self) -> QubitVector {
        let (s, c) = self.chi.sin_cos();
        QubitVector::normalized(C64::new(-s, 0.0), C64::from_polar(c, self.phi1))
    }

    /// Columns are the ordered basis {φ_nc 0, φ_nc 1, φ_c 0, φ_c 1} written in
    /// the computational basis {00, 01, 10, 11}.
    pub fn change_of_basis(&self) -> Matrix4<C64> {
        let mut b = Matrix4::zeros();
        for (k, q) in [self.non_control(), self.control()].iter().enumerate() {
            for s in 0..2 {
                b[(s, 2 * k + s)] = q.a0();
                b[(2 + s, 2 * k + s)] = q.a1();
            }
        }
        b
    }
}

/// Standard Pauli matrices (σ_x, σ_y, σ_z).
pub fn pauli() -> [Matrix2<C64>; 3] {
    [
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// `n = (sin 2θ cos φ, sin 2θ sin φ, cos 2θ)`
pub fn rotation_axis(theta: f64, phi2: f64) -> [f64; 3] {
    let (s, c) = (2.0 * theta).sin_cos();
    [s * phi2.cos(), s * phi2.sin(), c]
}

/// `n·σ`
pub fn axis_operator(n: [f64; 3]) -> Matrix2<C64> {
    let [sx, sy, sz] = pauli();
    sx * C64::from(n[0]) + sy * C64::from(n[1]) + sz * C64::from(n[2])
}

/// `U(δ, n) = cos(δ/2) I − i sin(δ/2) n·σ`
pub fn ideal_unitary(delta: f64, theta: f64, phi2: f64) -> Matrix2<C64> {
    let (s, c) = (delta / 2.0).sin_cos();
    Matrix2::identity() * C64::from(c) - axis_operator(rotation_axis(theta, phi2)) * (I * s)
}

/// The ideal gate in the control basis: `blockdiag(I, e^{i(ξ−ξ′−δ/2)} U)`.
pub fn ideal_gate(config: &GateConfig) -> Matrix4<C64> {
    let u = ideal_unitary(config.delta, config.theta, config.phi2)
        * C64::from_polar(1.0, config.phase_residual());
    let mut g = Matrix4::identity();
    g.fixed_view_mut::<2, 2>(2, 2).copy_from(&u);
    g
}

/// Embeds two-qubit amplitudes on {00, 01, 10, 11} with an empty cavity.
pub fn computational_state(space: HilbertSpace, amps: &Vector4<C64>) -> StateVector {
    let mut psi = space.zero_state();
    for (k, (l1, l2)) in computational_labels().into_iter().enumerate() {
        let idx = space
            .index(crate::hilbert::BasisLabel::new(l1, l2, 0))
            .expect("computational labels exist in every space");
        psi.amplitudes_mut()[idx] = amps[k];
    }
    psi
}

/// Amplitudes on {00, 01, 10, 11} with no photons.
pub fn computational_amplitudes(psi: &StateVector) -> Vector4<C64> {
    let labels = computational_labels();
    Vector4::from_fn(|k, _| psi.amplitude(labels[k].0, labels[k].1, 0).expect("valid label"))
}

fn computational_labels() -> [(AtomLevel, AtomLevel); 4] {
    use AtomLevel::{G0, G1};
    [(G0, G0), (G0, G1), (G1, G0), (G1, G1)]
}

/// Ideal output of the protocol for a computational input with an empty
/// cavity and no decay.
pub fn ideal_final_state(config: &GateConfig, space: HilbertSpace, input: &Vector4<C64>) -> StateVector {
    let b = ControlBasis::from_config(config).change_of_basis();
    let out = b * ideal_gate(config) * b.adjoint() * input;
    computational_state(space, &out)
}

/// Propagation record of one gate run.
#[derive(Debug, Clone)]
pub struct GateRun {
    pub trajectory: Trajectory,
    /// States at the end of steps 1, 2 and 3.
    pub checkpoints: Vec<StateVector>,
}

impl GateRun {
    pub fn final_state(&self) -> &StateVector {
        self.checkpoints.last().expect("three steps")
    }
}

/// Runs the seven-pulse protocol step by step.
pub fn run_gate(
    config: &GateConfig,
    space: HilbertSpace,
    psi0: &StateVector,
    opts: &PropagatorOptions,
) -> Result<GateRun, GateError> {
    let outside = psi0.norm_sqr() - computational_amplitudes(psi0).norm_squared();
    if outside > 1e-12 {
        return Err(GateError::NotComputational(outside));
    }
    let spec = HamiltonianSpec::for_gate(space, config)?;
    let mut trajectory: Option<Trajectory> = None;
    let mut checkpoints = Vec::with_capacity(3);
    let mut state = psi0.clone();
    for (t0, t1) in spec.schedule().steps() {
        let traj = if checkpoints.is_empty() {
            propagate(&spec, &state, t0, t1, opts)?
        } else {
            // later steps start from a possibly decayed state
            crate::propagator::integrate(&spec, state.amplitudes(), t0, t1, opts)?
        };
        state = StateVector::from_amplitudes(space, traj.final_state().clone())?;
        checkpoints.push(state.clone());
        match trajectory.as_mut() {
            Some(all) => all.extend(traj),
            None => trajectory = Some(traj),
        }
    }
    Ok(GateRun { trajectory: trajectory.expect("three steps"), checkpoints })
}

/// Time integral of the population with at least one photon.
pub fn integrated_photon_population(space: HilbertSpace, traj: &Trajectory) -> f64 {
    let pops: Vec<f64> = traj
        .states
        .iter()
        .map(|s| {
            StateVector::from_amplitudes(space, s.clone()).expect("same space").photon_population()
        })
        .collect();
    traj.times
        .windows(2)
        .zip(pops.windows(2))
        .map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1]))
        .sum()
}

/// Effective 4×4 gate in the ordered control basis {φ_nc 0, φ_nc 1, φ_c 0, φ_c 1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMatrix {
    pub matrix: Matrix4<C64>,
    pub basis: ControlBasis,
    /// Whether the global phase has been fixed.
    pub phase_fixed: bool,
}

impl GateMatrix {
    pub const BASIS_ORDER: [&'static str; 4] = ["phi_nc 0", "phi_nc 1", "phi_c 0", "phi_c 1"];

    /// Rotates the global phase so the largest φ_nc-block entry is real positive.
    pub fn fix_global_phase(mut self) -> Self {
        let mut best = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                if self.matrix[(i, j)].norm() > best.norm() {
                    best = self.matrix[(i, j)];
                }
            }
        }
        if best.norm() > 0.0 {
            let phase = best.conj() / best.norm();
            self.matrix *= phase;
        }
        self.phase_fixed = true;
        self
    }

    /// Frobenius norm of `G†G − I`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.matrix.adjoint() * self.matrix - Matrix4::identity()).norm()
    }

    /// Largest magnitude in the two off-diagonal 2×2 blocks.
    pub fn leakage(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if (i < 2) != (j < 2) {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// `|tr(G† G_ideal)| / 4`
    pub fn average_fidelity(&self, ideal: &Matrix4<C64>) -> f64 {
        (self.matrix.adjoint() * ideal).trace().norm() / 4.0
    }

    /// Largest elementwise deviation from `ideal`.
    pub fn max_deviation(&self, ideal: &Matrix4<C64>) -> f64 {
        (self.matrix - ideal).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The same operator on {00, 01, 10, 11}.
    pub fn to_computational(&self) -> Matrix4<C64> {
        let b = self.basis.change_of_basis();
        b * self.matrix * b.adjoint()
    }
}

/// Runs the four control-basis inputs and assembles `G[i][j] = <basis_i|ψ_final(basis_j)>`.
pub fn extract_gate_matrix(
    config: &GateConfig,
    space: HilbertSpace,
    opts: &PropagatorOptions,
) -> Result<GateMatrix, GateError> {
    let basis = ControlBasis::from_config(config);
    let b = basis.change_of_basis();
    let columns: Vec<Vector4<C64>> = (0..4)
        .into_par_iter()
        .map(|j| {
            let psi0 = computational_state(space, &b.column(j).into_owned());
            let run = run_gate(config, space, &psi0, opts)?;
            Ok(b.adjoint() * computational_amplitudes(run.final_state()))
        })
        .collect::<Result<_, GateError>>()?;
    let matrix = Matrix4::from_columns(&columns);
    Ok(GateMatrix { matrix, basis, phase_fixed: false }.fix_global_phase())
}

/// One row of the fidelity table; frequencies are ν = Ω/2π in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityRecord {
    pub omega_max_mhz: f64,
    pub g_mhz: f64,
    pub kappa_mhz: f64,
    /// Control |−>, targets |0> and |1>.
    pub f_minus: [f64; 2],
    /// Control |+>, targets |0> and |1>.
    pub f_plus: [f64; 2],
}

impl FidelityRecord {
    pub fn f_minus_mean(&self) -> f64 {
        0.5 * (self.f_minus[0] + self.f_minus[1])
    }

    pub fn f_plus_mean(&self) -> f64 {
        0.5 * (self.f_plus[0] + self.f_plus[1])
    }
}

/// How the κ of a fidelity-table point maps onto the Hamiltonian's photon
/// loss rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KappaConvention {
    /// κ is the cavity field decay rate; photons are lost at rate 2κ.
    #[default]
    FieldDecay,
    /// κ is the photon-number decay rate itself.
    PhotonDecay,
}

impl KappaConvention {
    /// Photon-number decay rate for a quoted κ.
    pub fn photon_loss_rate(self, kappa: f64) -> f64 {
        match self {
            Self::FieldDecay => 2.0 * kappa,
            Self::PhotonDecay => kappa,
        }
    }
}

/// Grid point of a fidelity table, in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TablePoint {
    pub omega_max_mhz: f64,
    pub g_mhz: f64,
    pub kappa_mhz: f64,
}

impl TablePoint {
    pub const fn new(omega_max_mhz: f64, g_mhz: f64, kappa_mhz: f64) -> Self {
        Self { omega_max_mhz, g_mhz, kappa_mhz }
    }

    /// `base` with Ω_max, both couplings and κ taken from this point. The
    /// transfer-laser peak keeps its ratio to Ω_max.
    pub fn apply(&self, base: &GateConfig, convention: KappaConvention) -> GateConfig {
        let omega_max = TAU * self.omega_max_mhz;
        let ratio = if base.omega_max > 0.0 { base.omega_transfer / base.omega_max } else { 1.0 };
        GateConfig {
            omega_max,
            omega_transfer: ratio * omega_max,
            g1: TAU * self.g_mhz,
            g2: TAU * self.g_mhz,
            kappa: convention.photon_loss_rate(TAU * self.kappa_mhz),
            ..base.clone()
        }
    }
}

/// The six (Ω_max, g, κ) points of the reference fidelity table, κ quoted as
/// a field decay rate.
pub const REFERENCE_GRID: [TablePoint; 6] = [
    TablePoint::new(14.0, 34.0, 4.1),
    TablePoint::new(14.0, 34.0, 2.05),
    TablePoint::new(14.0, 34.0, 1.0),
    TablePoint::new(14.0, 68.0, 4.1),
    TablePoint::new(14.0, 68.0, 2.05),
    TablePoint::new(14.0, 68.0, 1.0),
];

/// `|<ideal|numeric>|²` for a computational input, numeric state left unnormalized.
pub fn state_fidelity(
    config: &GateConfig,
    space: HilbertSpace,
    input: &Vector4<C64>,
    opts: &PropagatorOptions,
) -> Result<f64, GateError> {
    let psi0 = computational_state(space, input);
    let run = run_gate(config, space, &psi0, opts)?;
    let ideal = ideal_final_state(config, space, input);
    Ok(ideal.overlap(run.final_state())?.norm_sqr())
}

/// `|c>|t>` on {00, 01, 10, 11}.
pub fn product_input(control: QubitVector, target: QubitVector) -> Vector4<C64> {
    Vector4::new(
        control.a0() * target.a0(),
        control.a0() * target.a1(),
        control.a1() * target.a0(),
        control.a1() * target.a1(),
    )
}

/// Fidelities for controls |−>, |+> and targets |0>, |1> at each grid point.
/// All runs go out in parallel; rows come back in grid order.
pub fn fidelity_table(
    base: &GateConfig,
    grid: &[TablePoint],
    convention: KappaConvention,
    space: HilbertSpace,
    opts: &PropagatorOptions,
) -> Result<Vec<FidelityRecord>, GateError> {
    for (index, p) in grid.iter().enumerate() {
        if !(p.kappa_mhz >= 0.0) {
            return Err(GateError::NegativeKappa { index, kappa_mhz: p.kappa_mhz });
        }
    }
    let controls = [QubitVector::minus(), QubitVector::plus()];
    let targets = [QubitVector::zero(), QubitVector::one()];
    let jobs: Vec<(usize, usize, usize)> = (0..grid.len())
        .flat_map(|r| (0..2).flat_map(move |c| (0..2).map(move |t| (r, c, t))))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(r, c, t)| {
            let config = grid[r].apply(base, convention);
            state_fidelity(&config, space, &product_input(controls[c], targets[t]), opts)
        })
        .collect::<Result<_, GateError>>()?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(r, p)| {
            let v = &values[4 * r..4 * r + 4];
            FidelityRecord {
                omega_max_mhz: p.omega_max_mhz,
                g_mhz: p.g_mhz,
                kappa_mhz: p.kappa_mhz,
                f_minus: [v[0], v[1]],
                f_plus: [v[2], v[3]],
            }
        })
        .collect())
}

/// Checks that `m` is Hermitian and unitary with trace zero, i.e. `m = n·σ`.
pub fn reflection_axis(m: &Matrix2<C64>) -> Result<[f64; 3], GateError> {
    let unitary = (m.adjoint() * m - Matrix2::identity()).norm();
    let hermitian = (m - m.adjoint()).norm();
    let trace = m.trace().norm();
    if unitary > 1e-9 || hermitian > 1e-9 {
        return Err(GateError::NotReflection(unitary.max(hermitian)));
    }
    if trace > 1e-9 {
        return Err(GateError::TrivialReflection);
    }
    Ok([m[(1, 0)].re, m[(1, 0)].im, m[(0, 0)].re])
}

/// Gate configuration whose φ_c block equals `m`: control |1>, δ = π and the
/// branch phase chosen so that `e^{i(ξ−ξ′−π/2)} U(π, n) = n·σ`.
pub fn measurement_config(base: &GateConfig, m: &Matrix2<C64>) -> Result<GateConfig, GateError> {
    let n = reflection_axis(m)?;
    Ok(GateConfig {
        delta: PI,
        theta: 0.5 * n[2].clamp(-1.0, 1.0).acos(),
        phi2: n[1].atan2(n[0]),
        chi: FRAC_PI_2,
        phi1: 0.0,
        xi_prime: base.xi - PI,
        phase_corrected: false,
        ..base.clone()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    /// Probability of reading the control as 0 and 1.
    pub probabilities: [f64; 2],
    /// Normalized target state for each outcome (`None` when it never occurs).
    pub post_states: [Option<Vector2<C64>>; 2],
    /// `<post|P_±|post>` with `P_± = (I ± M)/2`; outcome 0 belongs to +1.
    pub eigen_fidelities: [Option<f64>; 2],
}

/// `(H ⊗ I) G (H ⊗ I)` applied to `|0>|input>`, followed by a readout of the control.
pub fn measurement_demo(
    gate_comp: &Matrix4<C64>,
    m: &Matrix2<C64>,
    input: QubitVector,
) -> Result<MeasurementOutcome, GateError> {
    reflection_axis(m)?;
    let h = C64::from(FRAC_1_SQRT_2);
    let hadamard = Matrix2::new(h, h, h, -h);
    let h_control = hadamard.kronecker(&Matrix2::<C64>::identity());
    let circuit = h_control * gate_comp * h_control;
    let out = circuit * product_input(QubitVector::zero(), input);
    let projectors = [
        (Matrix2::identity() + m) * C64::from(0.5),
        (Matrix2::identity() - m) * C64::from(0.5),
    ];
    let mut probabilities = [0.0; 2];
    let mut post_states = [None, None];
    let mut eigen_fidelities = [None, None];
    for k in 0..2 {
        let branch = Vector2::new(out[2 * k], out[2 * k + 1]);
        let p = branch.norm_squared();
        probabilities[k] = p;
        if p > 1e-12 {
            let post = branch.unscale(p.sqrt());
            eigen_fidelities[k] = Some(post.dotc(&(projectors[k] * post)).re);
            post_states[k] = Some(post);
        }
    }
    Ok(MeasurementOutcome { probabilities, post_states, eigen_fidelities })
}

/// Extracts the gate for `m` and runs the measurement circuit on `input`.
pub fn simulate_measurement(
    base: &GateConfig,
    m: &Matrix2<C64>,
    input: QubitVector,
    space: HilbertSpace,
    opts: &PropagatorOptions,
) -> Result<(GateMatrix, MeasurementOutcome), GateError> {
    let config = measurement_config(base, m)?;
    let gate = extract_gate_matrix(&config, space, opts)?;
    let outcome = measurement_demo(&gate.to_computational(), m, input)?;
    Ok((gate, outcome))
}
