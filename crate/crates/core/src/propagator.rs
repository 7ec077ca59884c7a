//! Adaptive Dormand–Prince 5(4) integration of `i dψ/dt = H_eff(t) ψ`.
//!
//! Stepping is fully deterministic: the same generator, initial state,
//! tolerance and output grid always produce bit-identical trajectories.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hamiltonian::HamiltonianSpec;
use crate::hilbert::StateVector;

/// Right-hand side `H(t) ψ` of the Schrödinger equation.
pub trait Generator: Sync {
    fn dim(&self) -> usize;

    /// Writes `H(t) psi` into `out`.
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);

    /// Time interval on which the generator is defined, if bounded.
    fn domain(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Time-independent dense generator.
#[derive(Debug, Clone)]
pub struct ConstantGenerator(pub DMatrix<C64>);

impl Generator for ConstantGenerator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.0.row(i).iter().zip(psi).map(|(h, p)| h * p).sum();
        }
    }
}

/// Runs `inner` backwards from `t_end`: `H̃(s) = −H(t_end − s)`.
pub struct TimeReversed<'a, G: Generator> {
    pub inner: &'a G,
    pub t_end: f64,
}

impl<G: Generator> Generator for TimeReversed<'_, G> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, s: f64, psi: &[C64], out: &mut [C64]) {
        self.inner.apply(self.t_end - s, psi, out);
        out.iter_mut().for_each(|o| *o = -*o);
    }

    fn domain(&self) -> Option<(f64, f64)> {
        self.inner.domain().map(|(a, b)| (self.t_end - b, self.t_end - a))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("empty or reversed interval [{t0}, {t1}]")]
    EmptyInterval { t0: f64, t1: f64 },
    #[error("interval [{t0}, {t1}] outside generator domain [{lo}, {hi}]")]
    OutsideDomain { t0: f64, t1: f64, lo: f64, hi: f64 },
    #[error("initial state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("initial state has dimension {got}, generator expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("step size underflow at t = {t} (h = {h:e}); tolerance {tol:e} not achievable")]
    StepUnderflow { t: f64, h: f64, tol: f64 },
    #[error("step budget of {0} exhausted at t = {1}")]
    TooManySteps(usize, f64),
    #[error("non-finite amplitude at t = {0}")]
    NonFinite(f64),
    #[error("tolerance must be in (0, 1), got {0}")]
    BadTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions {
    /// Local error tolerance, applied as both absolute and relative bound.
    pub tol: f64,
    /// Snapshot cadence (µs); `None` keeps only the endpoints.
    pub output_step: Option<f64>,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self { tol: 1e-10, output_step: Some(1e-3), max_steps: 20_000_000, min_step: 1e-13 }
    }
}

impl PropagatorOptions {
    pub fn endpoints_only(tol: f64) -> Self {
        Self { tol, output_step: None, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<C64>>,
    pub norms: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<C64> {
        self.states.last().expect("trajectory has at least one snapshot")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one snapshot")
    }

    pub fn norm_history(&self) -> Vec<(f64, f64)> {
        self.times.iter().copied().zip(self.norms.iter().copied()).collect()
    }

    /// Appends `other`, dropping its first snapshot when it repeats our last.
    pub fn extend(&mut self, other: Trajectory) {
        let skip = usize::from(
            self.times.last().is_some_and(|&t| other.times.first() == Some(&t)),
        );
        self.times.extend(other.times.into_iter().skip(skip));
        self.states.extend(other.states.into_iter().skip(skip));
        self.norms.extend(other.norms.into_iter().skip(skip));
        self.accepted_steps += other.accepted_steps;
        self.rejected_steps += other.rejected_steps;
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// `k = −i H(t) y`
fn rhs<G: Generator>(gen: &G, t: f64, y: &[C64], k: &mut [C64]) {
    gen.apply(t, y, k);
    for v in k.iter_mut() {
        *v = C64::new(v.im, -v.re);
    }
}

/// Integrates from `t0` to `t1` starting at `psi0` (any norm).
pub fn integrate<G: Generator>(
    gen: &G,
    psi0: &DVector<C64>,
    t0: f64,
    t1: f64,
    opts: &PropagatorOptions,
) -> Result<Trajectory, PropagationError> {
    let n = gen.dim();
    if psi0.len() != n {
        return Err(PropagationError::DimensionMismatch { got: psi0.len(), expected: n });
    }
    if !(t1 > t0) {
        return Err(PropagationError::EmptyInterval { t0, t1 });
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(PropagationError::BadTolerance(opts.tol));
    }
    if let Some((lo, hi)) = gen.domain() {
        let slack = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
        if t0 < lo - slack || t1 > hi + slack {
            return Err(PropagationError::OutsideDomain { t0, t1, lo, hi });
        }
    }

    let tol = opts.tol;
    let mut y: Vec<C64> = psi0.iter().copied().collect();
    let mut ynew = vec![C64::default(); n];
    let mut tmp = vec![C64::default(); n];
    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::default(); n]);

    let snapshot = |y: &[C64]| {
        let v = DVector::from_column_slice(y);
        let norm = v.norm();
        (v, norm)
    };
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        norms: Vec::new(),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let (v, nv) = snapshot(&y);
    traj.times.push(t0);
    traj.states.push(v);
    traj.norms.push(nv);

    let span = t1 - t0;
    // a grid point within rounding of t1 merges with t1
    let n_out = opts.output_step.map(|dt| (span / dt - 1e-9).ceil() as usize).unwrap_or(1).max(1);
    let out_time = |j: usize| -> f64 {
        match opts.output_step {
            Some(dt) if j < n_out => t0 + j as f64 * dt,
            _ => t1,
        }
    };
    let mut next_out = 1usize;

    rhs(gen, t0, &y, &mut k[0]);
    let mut t = t0;
    let mut h = {
        let d0 = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let d1 = k[0].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let guess = if d0 > 1e-5 && d1 > 1e-5 { 0.01 * d0 / d1 } else { 1e-6 * span };
        guess.min(span)
    };

    while next_out <= n_out {
        if traj.accepted_steps + traj.rejected_steps >= opts.max_steps {
            return Err(PropagationError::TooManySteps(opts.max_steps, t));
        }
        let target = out_time(next_out);
        let mut step = h;
        let mut lands = false;
        if t + step >= target - 1e-15 * target.abs().max(1.0) {
            step = target - t;
            lands = true;
        }
        if step < opts.min_step && !lands {
            return Err(PropagationError::StepUnderflow { t, h: step, tol });
        }

        // stages 2..6
        let stage = |coef: &[(usize, f64)], k: &[Vec<C64>; 7], tmp: &mut [C64]| {
            for i in 0..n {
                let mut acc = y[i];
                for &(j, a) in coef {
                    acc += k[j][i] * (a * step);
                }
                tmp[i] = acc;
            }
        };
        stage(&[(0, A21)], &k, &mut tmp);
        rhs(gen, t + C2 * step, &tmp, &mut k[1]);
        stage(&[(0, A31), (1, A32)], &k, &mut tmp);
        rhs(gen, t + C3 * step, &tmp, &mut k[2]);
        stage(&[(0, A41), (1, A42), (2, A43)], &k, &mut tmp);
        rhs(gen, t + C4 * step, &tmp, &mut k[3]);
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k, &mut tmp);
        rhs(gen, t + C5 * step, &tmp, &mut k[4]);
        stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k, &mut tmp);
        rhs(gen, t + step, &tmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = y[i]
                + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6)
                    * step;
        }
        rhs(gen, t + step, &ynew, &mut k[6]);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k[0][i] * E1
                + k[2][i] * E3
                + k[3][i] * E4
                + k[4][i] * E5
                + k[5][i] * E6
                + k[6][i] * E7)
                * step;
            let scale = tol + tol * y[i].norm().max(ynew[i].norm());
            err = err.max(e.norm() / scale);
        }
        if !err.is_finite() {
            return Err(PropagationError::NonFinite(t));
        }

        if err <= 1.0 {
            traj.accepted_steps += 1;
            t = if lands { target } else { t + step };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            if lands {
                let (v, nv) = snapshot(&y);
                traj.times.push(t);
                traj.states.push(v);
                traj.norms.push(nv);
                next_out += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // a step shortened to hit an output time says little about the natural size
            h = if lands { h.max(step * factor) } else { step * factor };
        } else {
            traj.rejected_steps += 1;
            h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < opts.min_step {
                return Err(PropagationError::StepUnderflow { t, h, tol });
            }
        }
    }
    Ok(traj)
}

/// Propagates a normalized state under the gate Hamiltonian.
pub fn propagate(
    spec: &HamiltonianSpec,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    opts: &PropagatorOptions,
) -> Result<Trajectory, PropagationError> {
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(PropagationError::NotNormalized(norm));
    }
    integrate(spec, psi0.amplitudes(), t0, t1, opts)
}
