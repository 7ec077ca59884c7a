//! Analytic dark states of the step-2 linkage, their numerical verification
//! against the kernel of H(t), and finite-difference nonadiabatic couplings.
//!
//! The second atom's laser couples `|Φ_c> = cos θ|0> + sin θ e^{iφ}|1>` to
//! `|e>` and leaves `|Φ_nc> = cos θ e^{iφ}|1> − sin θ|0>` untouched. The six
//! dark states fall into three pairs:
//!
//! ```text
//! Ψ1 = |0 Φ_nc>|0>
//! Ψ2 = cos η |0 Φ_c>|0> − sin η e^{−iφ₀}|0a>|1>
//! Ψ3 = |a Φ_nc>|0>
//! Ψ4 = sin φ |a Φ_c>|0> + cos ψ cos φ e^{i(φ₁−φ₀)}|1a>|0> − sin ψ cos φ e^{−iφ₀}|aa>|1>
//! Ψ5 = cos ψ e^{iφ₁}|1 Φ_nc>|0> − sin ψ |a Φ_nc>|1>
//! Ψ6 ∝ √2 cos η (cos ψ e^{iφ₁}|1 Φ_c>|0> − sin ψ |a Φ_c>|1>)
//!      − sin η e^{−iφ₀} (√2 cos ψ e^{iφ₁}|1a>|1> − sin ψ |aa>|2>)
//! ```
//!
//! with `φ₀` the phase of the `|0>` component of the atom-2 laser and `φ₁` the
//! phase of the atom-1 pump. `Ψ6` has squared norm
//! `1 + cos²η + sin²η cos²ψ` and is renormalized numerically.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hamiltonian::{HamiltonianError, HamiltonianSpec};
use crate::hilbert::{AtomFactor, AtomLevel, HilbertSpace, QubitVector, StateVector};
use crate::pulses::{Couplings, GateConfig, MixingAngles, PulseSchedule};

/// Relative eigenvalue threshold for membership in the numerical kernel.
pub const KERNEL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DarkStateError {
    #[error("transfer lasers are active at t = {0} µs; the dark-state formulas hold only for the rotation linkage")]
    TransferActive(f64),
    #[error("finite-difference step {dt} µs too large: halving it moves the coupling by {change:e}")]
    StepTooLarge { dt: f64, change: f64 },
    #[error("finite-difference step must be positive (got {0})")]
    BadStep(f64),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

/// The four second-atom states built from (θ, φ⁽²⁾).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi2States {
    pub nc: QubitVector,
    pub c: QubitVector,
    pub c2: QubitVector,
    pub c3: QubitVector,
}

pub fn phi_states(theta: f64, phi2: f64) -> Phi2States {
    let (s, c) = theta.sin_cos();
    let e = |r: f64| C64::from_polar(r, phi2);
    let re = |r: f64| C64::new(r, 0.0);
    let q = |a0, a1| QubitVector::new(a0, a1).expect("unit by construction");
    Phi2States {
        nc: q(re(-s), e(c)),
        c: q(re(c), e(s)),
        c2: q(re(-c), e(s)),
        c3: q(re(s), e(c)),
    }
}

/// Everything the analytic dark states depend on at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkParams {
    pub angles: MixingAngles,
    /// φ₀⁽²⁾
    pub atom2_phase0: f64,
    /// φ₁⁽¹⁾
    pub pump_phase: f64,
    pub theta: f64,
    pub phi2: f64,
}

impl DarkParams {
    /// Reads angles and phases off the instantaneous laser couplings.
    pub fn from_couplings(c: &Couplings, g1: f64, g2: f64, theta: f64, phi2: f64) -> Self {
        let angles = MixingAngles::from_fields(c.atom2_envelope(), c.pump1.norm(), g1, g2);
        let pump_phase = if c.pump1.norm() > 0.0 { -c.pump1.arg() } else { 0.0 };
        let atom2_phase0 = if c.atom2_0.norm() > 0.0 {
            -c.atom2_0.arg()
        } else if c.atom2_1.norm() > 0.0 {
            -c.atom2_1.arg() - phi2
        } else {
            0.0
        };
        Self { angles, atom2_phase0, pump_phase, theta, phi2 }
    }

    pub fn at(schedule: &PulseSchedule, t: f64, config: &GateConfig) -> Self {
        Self::from_couplings(
            &schedule.couplings(t),
            config.g1,
            config.g2,
            config.theta,
            config.phi2,
        )
    }
}

/// The six renormalized dark states; pairs (Ψ1,Ψ2), (Ψ3,Ψ4), (Ψ5,Ψ6).
#[derive(Debug, Clone, PartialEq)]
pub struct DarkStateSet {
    pub states: [StateVector; 6],
}

impl DarkStateSet {
    pub const SUBSPACES: [(usize, usize); 3] = [(0, 1), (2, 3), (4, 5)];

    /// Ψ_i with 1-based index as in the usual labelling.
    pub fn psi(&self, i: usize) -> &StateVector {
        &self.states[i - 1]
    }

    pub fn as_matrix(&self) -> DMatrix<C64> {
        let cols: Vec<DVector<C64>> =
            self.states.iter().map(|s| s.amplitudes().clone()).collect();
        DMatrix::from_columns(&cols)
    }
}

struct Builder {
    psi: StateVector,
}

impl Builder {
    fn new(space: HilbertSpace) -> Self {
        Self { psi: space.zero_state() }
    }

    fn add(mut self, coef: C64, a1: impl Into<AtomFactor>, a2: impl Into<AtomFactor>, n: usize) -> Self {
        let term = self.psi.space().embed_product(a1, a2, n).expect("valid dark-state term");
        self.psi = self.psi.add(&term.scaled(coef)).expect("same space");
        self
    }

    fn finish(self) -> StateVector {
        self.psi.normalized()
    }
}

pub fn analytic_dark_states(p: &DarkParams, space: HilbertSpace) -> DarkStateSet {
    use AtomLevel::{Anc, G0, G1};
    let MixingAngles { eta, psi, varphi, .. } = p.angles;
    let phi = phi_states(p.theta, p.phi2);
    let r = |x: f64| C64::new(x, 0.0);
    let ph = |x: f64| C64::from_polar(1.0, x);
    let (p0, p1) = (p.atom2_phase0, p.pump_phase);
    let rt2 = 2f64.sqrt();

    let psi1 = Builder::new(space).add(r(1.0), G0, phi.nc, 0).finish();
    let psi2 = Builder::new(space)
        .add(r(eta.cos()), G0, phi.c, 0)
        .add(-eta.sin() * ph(-p0), G0, Anc, 1)
        .finish();
    let psi3 = Builder::new(space).add(r(1.0), Anc, phi.nc, 0).finish();
    let psi4 = Builder::new(space)
        .add(r(varphi.sin()), Anc, phi.c, 0)
        .add(psi.cos() * varphi.cos() * ph(p1 - p0), G1, Anc, 0)
        .add(-psi.sin() * varphi.cos() * ph(-p0), Anc, Anc, 1)
        .finish();
    let psi5 = Builder::new(space)
        .add(psi.cos() * ph(p1), G1, phi.nc, 0)
        .add(r(-psi.sin()), Anc, phi.nc, 1)
        .finish();
    let psi6 = Builder::new(space)
        .add(rt2 * eta.cos() * psi.cos() * ph(p1), G1, phi.c, 0)
        .add(r(-rt2 * eta.cos() * psi.sin()), Anc, phi.c, 1)
        .add(-rt2 * eta.sin() * psi.cos() * ph(p1 - p0), G1, Anc, 1)
        .add(eta.sin() * psi.sin() * ph(-p0), Anc, Anc, 2)
        .finish();
    DarkStateSet { states: [psi1, psi2, psi3, psi4, psi5, psi6] }
}

/// Squared norm of the unnormalized Ψ6 combination above.
pub fn psi6_norm_sqr(angles: &MixingAngles) -> f64 {
    let (eta, psi) = (angles.eta, angles.psi);
    1.0 + eta.cos().powi(2) + eta.sin().powi(2) * psi.cos().powi(2)
}

fn require_rotation_linkage(spec: &HamiltonianSpec, t: f64) -> Result<(), DarkStateError> {
    if spec.couplings(t).transfer_active() {
        return Err(DarkStateError::TransferActive(t));
    }
    Ok(())
}

/// `‖H(t) Ψ_i‖ / max(g1, g2)` for each dark state.
pub fn kernel_residuals(
    spec: &HamiltonianSpec,
    t: f64,
    set: &DarkStateSet,
) -> Result<[f64; 6], DarkStateError> {
    require_rotation_linkage(spec, t)?;
    let h = spec.assemble(t)?;
    let scale = spec.g1().max(spec.g2());
    Ok(std::array::from_fn(|i| (&h * set.states[i].amplitudes()).norm() / scale))
}

/// Comparison of the analytic set with the numerically computed kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    /// Dimension of the full numerical kernel.
    pub kernel_dim: usize,
    /// Dimension of the kernel part with no amplitude on excited levels.
    pub ground_kernel_dim: usize,
    /// `1 − ‖P_ker Ψ_i‖²` for each dark state.
    pub deficits: [f64; 6],
    /// Largest principal angle between span{Ψ_i} and the kernel (rad).
    pub max_principal_angle: f64,
}

pub fn kernel_analysis(
    spec: &HamiltonianSpec,
    t: f64,
    set: &DarkStateSet,
) -> Result<KernelReport, DarkStateError> {
    require_rotation_linkage(spec, t)?;
    let h = spec.assemble(t)?;
    let eig = SymmetricEigen::new(h);
    let radius = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cols: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].abs() <= KERNEL_TOL * radius)
        .collect();
    let kernel = eig.eigenvectors.select_columns(&cols);

    let space = spec.space();
    let excited = space.excited_indices();
    let ground_kernel_dim = if kernel.ncols() == 0 {
        0
    } else {
        let rank = kernel
            .select_rows(&excited)
            .singular_values()
            .iter()
            .filter(|&&s| s > 1e-8)
            .count();
        kernel.ncols() - rank
    };

    let q = set.as_matrix().qr().q();
    let projected = &kernel * (kernel.adjoint() * &q);
    let residual = &q - projected;
    let sin_max = residual.singular_values().iter().fold(0.0f64, |m, &s| m.max(s));

    let deficits = std::array::from_fn(|i| {
        let v = set.states[i].amplitudes();
        let coeffs = kernel.adjoint() * v;
        (v.norm_squared() - coeffs.norm_squared()).max(0.0)
    });
    Ok(KernelReport {
        kernel_dim: kernel.ncols(),
        ground_kernel_dim,
        deficits,
        max_principal_angle: sin_max.min(1.0).asin(),
    })
}

/// Pairs `<Ψ_bra| d/dt |Ψ_ket>` within each dark subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DarkPair {
    /// `<Ψ2| d/dt |Ψ1>`
    TwoOne,
    /// `<Ψ4| d/dt |Ψ3>`
    FourThree,
    /// `<Ψ6| d/dt |Ψ5>`
    SixFive,
}

impl DarkPair {
    pub const ALL: [DarkPair; 3] = [Self::TwoOne, Self::FourThree, Self::SixFive];

    /// Zero-based (bra, ket) indices.
    pub fn indices(self) -> (usize, usize) {
        match self {
            Self::TwoOne => (1, 0),
            Self::FourThree => (3, 2),
            Self::SixFive => (5, 4),
        }
    }

    /// Closed-form coupling for a polarization angle changing at `theta_dot`.
    pub fn expected(self, angles: &MixingAngles, theta_dot: f64) -> f64 {
        match self {
            Self::TwoOne => -theta_dot * angles.eta.cos(),
            Self::FourThree => -theta_dot * angles.varphi.sin(),
            Self::SixFive => {
                -theta_dot * 2f64.sqrt() * angles.eta.cos() / psi6_norm_sqr(angles).sqrt()
            }
        }
    }
}

fn central_difference(
    pair: DarkPair,
    params_at: &impl Fn(f64) -> DarkParams,
    space: HilbertSpace,
    t: f64,
    dt: f64,
) -> C64 {
    let (bra, ket) = pair.indices();
    let here = analytic_dark_states(&params_at(t), space);
    let fwd = analytic_dark_states(&params_at(t + dt), space);
    let back = analytic_dark_states(&params_at(t - dt), space);
    let diff = (fwd.states[ket].amplitudes() - back.states[ket].amplitudes()) / C64::new(2.0 * dt, 0.0);
    here.states[bra].amplitudes().dotc(&diff)
}

/// Central-difference `<Ψ_bra(t)| [Ψ_ket(t+dt) − Ψ_ket(t−dt)] / 2dt>`.
///
/// The same quantity at `dt/2` must agree to 1e-6 (relative, floor 1e-3
/// rad/µs), otherwise the step is rejected as too coarse.
pub fn nonadiabatic_coupling(
    pair: DarkPair,
    params_at: impl Fn(f64) -> DarkParams,
    space: HilbertSpace,
    t: f64,
    dt: f64,
) -> Result<C64, DarkStateError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DarkStateError::BadStep(dt));
    }
    let coarse = central_difference(pair, &params_at, space, t, dt);
    let fine = central_difference(pair, &params_at, space, t, dt / 2.0);
    let change = (coarse - fine).norm();
    if change > 1e-6 * fine.norm().max(1e-3) {
        return Err(DarkStateError::StepTooLarge { dt, change });
    }
    Ok(coarse)
}

/// Times sampled for dark-state checks: the window between the centers of
/// the two pump pulses, clipped to where every transfer pulse is off.
pub fn rotation_window(schedule: &PulseSchedule) -> Option<(f64, f64)> {
    use crate::pulses::Drive;
    let pumps: Vec<f64> = schedule
        .pulses()
        .iter()
        .filter(|p| matches!(p.drive, Drive::Pump1 { .. }))
        .map(|p| p.envelope.first_center())
        .collect();
    let (mut lo, mut hi) = match pumps.as_slice() {
        [a, .., b] => (*a, *b),
        _ => return None,
    };
    let margin = 1e-9;
    for p in schedule.pulses() {
        if matches!(p.drive, Drive::Transfer(_) | Drive::TransferAncilla { .. }) {
            let (a, b) = p.envelope.support();
            if b <= lo + margin {
                lo = lo.max(b + margin);
            } else if a >= hi - margin {
                hi = hi.min(a - margin);
            }
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// Sinusoidal modulation `θ(t) = θ₀ + amplitude · sin(ω (t − t_ref))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThetaModulation {
    pub amplitude: f64,
    /// Angular frequency (rad/µs).
    pub omega: f64,
    pub t_ref: f64,
}

impl ThetaModulation {
    pub fn theta(&self, theta0: f64, t: f64) -> f64 {
        theta0 + self.amplitude * (self.omega * (t - self.t_ref)).sin()
    }

    pub fn theta_dot(&self, t: f64) -> f64 {
        self.amplitude * self.omega * (self.omega * (t - self.t_ref)).cos()
    }
}

/// One row of the dark-state report.
#[derive(Debug, Clone, PartialEq)]
pub struct DarkCheckRow {
    pub t: f64,
    pub residuals: [f64; 6],
    pub kernel: KernelReport,
    /// Finite-difference couplings (2,1), (4,3), (6,5).
    pub couplings: [C64; 3],
    /// Closed-form couplings for the same θ̇.
    pub expected: [f64; 3],
}

/// Samples `samples` equally spaced step-2 times and checks residuals,
/// kernel membership and nonadiabatic couplings.
pub fn dark_check(
    spec: &HamiltonianSpec,
    config: &GateConfig,
    samples: usize,
    modulation: ThetaModulation,
    dt: f64,
) -> Result<Vec<DarkCheckRow>, DarkStateError> {
    let schedule = spec.schedule();
    let (lo, hi) = rotation_window(schedule).unwrap_or((schedule.start(), schedule.end()));
    let space = spec.space();
    let step = if samples > 1 { (hi - lo) / (samples - 1) as f64 } else { 0.0 };
    (0..samples)
        .map(|k| {
            let t = lo + step * k as f64;
            let params = DarkParams::at(schedule, t, config);
            let set = analytic_dark_states(&params, space);
            let residuals = kernel_residuals(spec, t, &set)?;
            let kernel = kernel_analysis(spec, t, &set)?;
            let params_at = |s: f64| DarkParams {
                theta: modulation.theta(config.theta, s),
                ..DarkParams::at(schedule, s, config)
            };
            let mut couplings = [C64::default(); 3];
            let mut expected = [0.0; 3];
            for (i, pair) in DarkPair::ALL.into_iter().enumerate() {
                couplings[i] = nonadiabatic_coupling(pair, params_at, space, t, dt)?;
                expected[i] = pair.expected(&params_at(t).angles, modulation.theta_dot(t));
            }
            Ok(DarkCheckRow { t, residuals, kernel, couplings, expected })
        })
        .collect()
}
