//! Rotating-wave Hamiltonian of the two atoms and the cavity mode, plus the
//! non-Hermitian decay extension
//!
//! ```text
//! H_eff(t) = H(t) − i(κ/2) N_cav − i(Γ/2) P_exc
//! ```
//!
//! where `N_cav` counts photons and `P_exc` counts atoms in `e` or `e2`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hilbert::{AtomLevel, BasisLabel, HilbertSpace};
use crate::propagator::Generator;
use crate::pulses::{build_gate_schedule, Couplings, GateConfig, PulseSchedule, ScheduleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("time {t} µs outside schedule [{start}, {end}] µs")]
    OutsideSchedule { t: f64, start: f64, end: f64 },
    #[error("{name} must be non-negative (got {value})")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("cavity coupling {name} must be positive (got {value})")]
    NonPositiveCoupling { name: &'static str, value: f64 },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Term {
    Pump1,
    Atom2Zero,
    Atom2One,
    TransferZero,
    TransferOne,
    TransferAncilla,
    Cavity1,
    Cavity2,
}

/// One `|upper><lower|` element (its conjugate is implied).
#[derive(Debug, Clone, Copy)]
struct Link {
    upper: usize,
    lower: usize,
    term: Term,
    /// Matrix-element factor, e.g. `√n` for photon annihilation.
    weight: f64,
}

#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    space: HilbertSpace,
    schedule: PulseSchedule,
    g1: f64,
    g2: f64,
    kappa: f64,
    gamma: f64,
    links: Vec<Link>,
    /// Diagonal of the anti-Hermitian part, divided by −i.
    decay: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn new(
        space: HilbertSpace,
        schedule: PulseSchedule,
        g1: f64,
        g2: f64,
        kappa: f64,
        gamma: f64,
    ) -> Result<Self, HamiltonianError> {
        for (name, value) in [("g1", g1), ("g2", g2)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(HamiltonianError::NonPositiveCoupling { name, value });
            }
        }
        for (name, value) in [("kappa", kappa), ("gamma", gamma)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(HamiltonianError::NegativeRate { name, value });
            }
        }
        let links = build_links(&space);
        let decay = space
            .labels()
            .map(|l| 0.5 * kappa * l.photons as f64 + 0.5 * gamma * l.excitations() as f64)
            .collect();
        Ok(Self { space, schedule, g1, g2, kappa, gamma, links, decay })
    }

    /// Hamiltonian for the full seven-pulse gate described by `config`.
    pub fn for_gate(space: HilbertSpace, config: &GateConfig) -> Result<Self, HamiltonianError> {
        let schedule = build_gate_schedule(config)?;
        Self::new(space, schedule, config.g1, config.g2, config.kappa, config.gamma)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn schedule(&self) -> &PulseSchedule {
        &self.schedule
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn g2(&self) -> f64 {
        self.g2
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn couplings(&self, t: f64) -> Couplings {
        self.schedule.couplings(t)
    }

    fn check_time(&self, t: f64) -> Result<(), HamiltonianError> {
        if self.schedule.contains(t) {
            Ok(())
        } else {
            Err(HamiltonianError::OutsideSchedule {
                t,
                start: self.schedule.start(),
                end: self.schedule.end(),
            })
        }
    }

    fn coefficients(&self, t: f64) -> [C64; 8] {
        let c = self.schedule.couplings(t);
        [
            c.pump1,
            c.atom2_0,
            c.atom2_1,
            c.transfer_0,
            c.transfer_1,
            c.transfer_a,
            C64::new(self.g1, 0.0),
            C64::new(self.g2, 0.0),
        ]
    }

    /// Dense Hermitian H(t).
    pub fn assemble(&self, t: f64) -> Result<DMatrix<C64>, HamiltonianError> {
        self.check_time(t)?;
        let coeffs = self.coefficients(t);
        let dim = self.space.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for link in &self.links {
            let c = coeffs[link.term as usize] * link.weight;
            h[(link.upper, link.lower)] += c;
            h[(link.lower, link.upper)] += c.conj();
        }
        Ok(h)
    }

    /// Dense non-Hermitian H_eff(t).
    pub fn effective(&self, t: f64) -> Result<DMatrix<C64>, HamiltonianError> {
        let mut h = self.assemble(t)?;
        for (i, d) in self.decay.iter().enumerate() {
            h[(i, i)] -= C64::new(0.0, *d);
        }
        Ok(h)
    }
}

impl Generator for HamiltonianSpec {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let coeffs = self.coefficients(t);
        for (o, (p, d)) in out.iter_mut().zip(psi.iter().zip(&self.decay)) {
            *o = C64::new(0.0, -*d) * p;
        }
        for link in &self.links {
            let c = coeffs[link.term as usize] * link.weight;
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            out[link.upper] += c * psi[link.lower];
            out[link.lower] += c.conj() * psi[link.upper];
        }
    }

    fn domain(&self) -> Option<(f64, f64)> {
        Some((self.schedule.start(), self.schedule.end()))
    }
}

fn build_links(space: &HilbertSpace) -> Vec<Link> {
    use AtomLevel::*;
    let idx = |a1, a2, n| space.index(BasisLabel::new(a1, a2, n)).expect("valid label");
    let mut links = Vec::new();
    let mut push = |upper, lower, term, weight| links.push(Link { upper, lower, term, weight });
    for n in 0..=space.n_max() {
        for a2 in AtomLevel::ATOM2 {
            // atom 1 lasers
            push(idx(Exc, a2, n), idx(G1, a2, n), Term::Pump1, 1.0);
            push(idx(Exc2, a2, n), idx(G0, a2, n), Term::TransferZero, 1.0);
            push(idx(Exc2, a2, n), idx(G1, a2, n), Term::TransferOne, 1.0);
            push(idx(Exc2, a2, n), idx(Anc, a2, n), Term::TransferAncilla, 1.0);
            // atom 1 cavity: g1 â |e><a|
            if n >= 1 {
                push(idx(Exc, a2, n - 1), idx(Anc, a2, n), Term::Cavity1, (n as f64).sqrt());
            }
        }
        for a1 in AtomLevel::ATOM1 {
            push(idx(a1, Exc, n), idx(a1, G0, n), Term::Atom2Zero, 1.0);
            push(idx(a1, Exc, n), idx(a1, G1, n), Term::Atom2One, 1.0);
            if n >= 1 {
                push(idx(a1, Exc, n - 1), idx(a1, Anc, n), Term::Cavity2, (n as f64).sqrt());
            }
        }
    }
    links
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::QubitVector;
    use nalgebra::DVector;
    use std::f64::consts::TAU;

    fn spec_with(kappa: f64, gamma: f64) -> HamiltonianSpec {
        let cfg = GateConfig { kappa, gamma, ..GateConfig::default() };
        let space = HilbertSpace::new(3).unwrap();
        HamiltonianSpec::for_gate(space, &cfg).unwrap()
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn hermitian_at_many_times() {
        let spec = spec_with(0.0, 0.0);
        let s = spec.schedule().clone();
        for k in 0..200 {
            // deterministic quasi-random times
            let frac = (k as f64 * 0.618_033_988_75).fract();
            let t = s.start() + frac * s.duration();
            let h = spec.assemble(t).unwrap();
            let defect = max_abs(&(&h - h.adjoint()));
            assert!(defect <= 1e-12 * max_abs(&h), "t = {t}: {defect}");
        }
    }

    #[test]
    fn fields_off_only_cavity_terms() {
        let spec = spec_with(0.0, 0.0);
        let h = spec.assemble(spec.schedule().start()).unwrap();
        let space = spec.space();
        let ground = space.basis_state(AtomLevel::G0, AtomLevel::G0, 0).unwrap();
        let hpsi = &h * ground.amplitudes();
        assert!(hpsi.iter().all(|c| c.norm() == 0.0));
        // remaining elements are the cavity couplings g√n only
        let g = spec.g1();
        for v in h.iter().filter(|c| c.norm() > 1e-3) {
            let r = v.norm() / g;
            assert!([1.0, 2f64.sqrt(), 3f64.sqrt()].iter().any(|w| (r - w).abs() < 1e-12));
        }
    }

    #[test]
    fn effective_matches_assemble_without_decay() {
        let spec = spec_with(0.0, 0.0);
        let t = 0.6;
        assert_eq!(spec.assemble(t).unwrap(), spec.effective(t).unwrap());
    }

    #[test]
    fn decay_on_one_photon_states() {
        let kappa = TAU * 4.1;
        let spec = spec_with(kappa, 0.0);
        let h = spec.effective(spec.schedule().start()).unwrap();
        let space = spec.space();
        let i = space.index(BasisLabel::new(AtomLevel::G0, AtomLevel::G1, 1)).unwrap();
        assert!((h[(i, i)].im + kappa / 2.0).abs() < 1e-12);
        let j = space.index(BasisLabel::new(AtomLevel::G0, AtomLevel::G1, 2)).unwrap();
        assert!((h[(j, j)].im + kappa).abs() < 1e-12);
    }

    #[test]
    fn excited_decay_counts_both_atoms() {
        let gamma = 2.0;
        let spec = spec_with(0.0, gamma);
        let h = spec.effective(0.0).unwrap();
        let i = spec.space().index(BasisLabel::new(AtomLevel::Exc2, AtomLevel::Exc, 0)).unwrap();
        assert!((h[(i, i)].im + gamma).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let space = HilbertSpace::new(3).unwrap();
        let sched = build_gate_schedule(&GateConfig::default()).unwrap();
        assert!(matches!(
            HamiltonianSpec::new(space, sched.clone(), 1.0, 1.0, -1.0, 0.0),
            Err(HamiltonianError::NegativeRate { .. })
        ));
        let spec = HamiltonianSpec::new(space, sched, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(spec.assemble(-1.0), Err(HamiltonianError::OutsideSchedule { .. })));
    }

    #[test]
    fn apply_matches_dense_effective() {
        let spec = spec_with(3.0, 1.5);
        let dim = spec.space().dim();
        let psi = DVector::from_fn(dim, |i, _| C64::new((i as f64).sin(), (i as f64 * 0.3).cos()));
        for t in [0.2, 0.33, 0.6, 0.8, 1.1] {
            let dense = spec.effective(t).unwrap() * &psi;
            let mut out = vec![C64::new(0.0, 0.0); dim];
            spec.apply(t, psi.as_slice(), &mut out);
            for (a, b) in dense.iter().zip(&out) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn laser_links_only_on_listed_transitions() {
        // every nonzero element connects a ground-manifold ket to an excited ket
        let spec = spec_with(0.0, 0.0);
        let space = spec.space();
        let h = spec.assemble(0.6).unwrap();
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                if h[(i, j)].norm() > 0.0 {
                    let (a, b) = (space.label(i).unwrap(), space.label(j).unwrap());
                    assert_eq!(
                        (a.excitations() as i64 - b.excitations() as i64).abs(),
                        1,
                        "{a} <-> {b}"
                    );
                    let dn = a.photons as i64 - b.photons as i64;
                    assert!(dn.abs() <= 1);
                    // transitions into exc2 never exchange photons
                    if (a.atom1 == AtomLevel::Exc2) != (b.atom1 == AtomLevel::Exc2) {
                        assert_eq!(dn, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn non_coupled_target_state_is_dark_for_atom_two() {
        // At a step-2 time, H acting on |0 Φ_nc>|0> has no amplitude on |0 e>|n>.
        let cfg = GateConfig { theta: 0.41, phi2: 1.3, atom2_phase0: 0.2, ..GateConfig::default() };
        let space = HilbertSpace::new(3).unwrap();
        let spec = HamiltonianSpec::for_gate(space, &cfg).unwrap();
        let (th, ph) = (cfg.theta, cfg.phi2);
        let phi_nc = QubitVector::new(C64::new(-th.sin(), 0.0), C64::from_polar(th.cos(), ph)).unwrap();
        let psi = space.embed_product(AtomLevel::G0, phi_nc, 0).unwrap();
        let t = spec.schedule().pulses()[3].envelope.first_center();
        let out = spec.assemble(t).unwrap() * psi.amplitudes();
        for n in 0..=3 {
            let i = space.index(BasisLabel::new(AtomLevel::G0, AtomLevel::Exc, n)).unwrap();
            assert!(out[i].norm() < 1e-12);
        }
        // and the coupled state is not
        let phi_c = QubitVector::new(C64::new(th.cos(), 0.0), C64::from_polar(th.sin(), ph)).unwrap();
        let psi = space.embed_product(AtomLevel::G0, phi_c, 0).unwrap();
        let out = spec.assemble(t).unwrap() * psi.amplitudes();
        let i = space.index(BasisLabel::new(AtomLevel::G0, AtomLevel::Exc, 0)).unwrap();
        assert!(out[i].norm() > 1.0);
    }
}
