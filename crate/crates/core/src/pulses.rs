//! Gaussian pulse envelopes, elliptic polarization, and the seven-pulse gate
//! schedule.
//!
//! Internal units are angular frequency in rad/µs and time in µs.
//!
//! The gate runs in three steps:
//!
//! 1. `Ω_a(sti)` then `Ω_(sti)` transfer the control state `|φ_c>` of atom 1
//!    to `|a>` through the second excited level `e2`.
//! 2. `Ω₁⁽¹⁾`, a merged `Ω⁽²⁾`, and `Ω₁⁽¹⁾` again (phase advanced by δ) rotate
//!    atom 2 when atom 1 sits in `|a>`.
//! 3. `Ω_(sti)` then `Ω_a(sti)` return `|a>` to `|φ_c>`.

use std::f64::consts::{FRAC_PI_2, LN_2};

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Hard cutoff of every Gaussian lobe, in units of the FWHM on each side.
pub const TRUNCATION_FWHMS: f64 = 2.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative and finite (got {value})")]
    Negative { name: &'static str, value: f64 },
    #[error("inter-step gap {gap} µs is shorter than the pulse FWHM {fwhm} µs; consecutive steps would overlap")]
    StepsOverlap { gap: f64, fwhm: f64 },
    #[error("phase-corrected mode requires xi - xi' - delta/2 = 0 (residual {0})")]
    PhaseCondition(f64),
}

/// Gaussian with the given FWHM, truncated at `TRUNCATION_FWHMS · fwhm`.
pub fn gaussian(t: f64, center: f64, fwhm: f64, peak: f64) -> f64 {
    let x = t - center;
    if x.abs() > TRUNCATION_FWHMS * fwhm {
        return 0.0;
    }
    peak * (-4.0 * LN_2 * x * x / (fwhm * fwhm)).exp()
}

/// Split of an elliptic laser of amplitude `omega` into its `|0>` and `|1>`
/// components: `(Ω cos angle, Ω sin angle)`.
///
/// The same convention serves the atom-2 rotation laser (angle θ) and the
/// atom-1 transfer laser (angle χ): the state coupled by the laser is
/// `cos(angle)|0> + sin(angle) e^{iφ}|1>`.
pub fn elliptic_components(omega: f64, angle: f64) -> (f64, f64) {
    (omega * angle.cos(), omega * angle.sin())
}

/// Sum of equal-width Gaussian lobes, scaled so the maximum equals `peak`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub centers: Vec<f64>,
    pub fwhm: f64,
    pub peak: f64,
    lobe: f64,
}

impl Envelope {
    pub fn single(center: f64, fwhm: f64, peak: f64) -> Self {
        Self { centers: vec![center], fwhm, peak, lobe: peak }
    }

    /// Lobes at `centers`; overlapping lobes are scaled down together so the
    /// envelope never exceeds `peak`.
    pub fn merged(centers: Vec<f64>, fwhm: f64, peak: f64) -> Self {
        let unit = Self { centers, fwhm, peak: 1.0, lobe: 1.0 };
        let lo = unit.first_center();
        let hi = unit.centers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n = 4000;
        let max = (0..=n)
            .map(|k| unit.value(lo + (hi - lo) * k as f64 / n as f64))
            .fold(1.0, f64::max);
        Self { lobe: peak / max, peak, ..unit }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.centers.iter().map(|&c| gaussian(t, c, self.fwhm, self.lobe)).sum()
    }

    /// Support `[first, last]` including the truncation window.
    pub fn support(&self) -> (f64, f64) {
        let w = TRUNCATION_FWHMS * self.fwhm;
        let lo = self.centers.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.centers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - w, hi + w)
    }

    pub fn first_center(&self) -> f64 {
        self.centers.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Elliptically polarized laser driving `|0>` and `|1>` of one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticLaser {
    /// Polarization angle (θ for atom 2, χ for the atom-1 transfer laser).
    pub angle: f64,
    /// Phase of the `|0>` component.
    pub phase0: f64,
    /// Phase of the `|1>` component.
    pub phase1: f64,
}

impl EllipticLaser {
    /// Complex coefficients of `|exc><0|` and `|exc><1|` for envelope `omega`.
    pub fn couplings(&self, omega: f64) -> (C64, C64) {
        let (o0, o1) = elliptic_components(omega, self.angle);
        (C64::from_polar(o0, -self.phase0), C64::from_polar(o1, -self.phase1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    /// `Ω₁⁽¹⁾`: atom 1, `|1> ↔ |e>`.
    Pump1 { phase: f64 },
    /// `Ω⁽²⁾`: atom 2, `|0>,|1> ↔ |e>`.
    Atom2(EllipticLaser),
    /// `Ω⁽¹⁾_(sti)`: atom 1, `|0>,|1> ↔ |e2>`.
    Transfer(EllipticLaser),
    /// `Ω_a(sti)`: atom 1, `|a> ↔ |e2>`.
    TransferAncilla { phase: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub name: &'static str,
    pub envelope: Envelope,
    pub drive: Drive,
}

/// Complex coefficients `Ω e^{-iφ}` of every laser-driven `|upper><lower|`
/// term at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Couplings {
    /// atom 1: `|e><1|`
    pub pump1: C64,
    /// atom 2: `|e><0|`
    pub atom2_0: C64,
    /// atom 2: `|e><1|`
    pub atom2_1: C64,
    /// atom 1: `|e2><0|`
    pub transfer_0: C64,
    /// atom 1: `|e2><1|`
    pub transfer_1: C64,
    /// atom 1: `|e2><a|`
    pub transfer_a: C64,
}

impl Couplings {
    pub fn atom2_envelope(&self) -> f64 {
        (self.atom2_0.norm_sqr() + self.atom2_1.norm_sqr()).sqrt()
    }

    pub fn transfer_envelope(&self) -> f64 {
        (self.transfer_0.norm_sqr() + self.transfer_1.norm_sqr()).sqrt()
    }

    pub fn transfer_active(&self) -> bool {
        self.transfer_envelope() > 0.0 || self.transfer_a.norm() > 0.0
    }
}

/// Every parameter of one gate run, in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct GateConfig {
    /// Rotation angle δ.
    pub delta: f64,
    /// Rotation-axis polar parameter θ (atom-2 polarization angle).
    pub theta: f64,
    /// φ⁽²⁾ = φ₁⁽²⁾ − φ₀⁽²⁾.
    pub phi2: f64,
    /// Control-state angle χ.
    pub chi: f64,
    /// Control-state phase φ⁽¹⁾.
    pub phi1: f64,
    /// Relative phase of the step-1 transfer pair.
    pub xi: f64,
    /// Relative phase of the step-3 transfer pair.
    pub xi_prime: f64,
    /// Enforce ξ − ξ′ − δ/2 = 0.
    pub phase_corrected: bool,
    /// φ₁⁽¹⁾ of the first step-2 pump pulse; the second carries this plus δ.
    pub pump_phase: f64,
    /// φ₀⁽²⁾ of the atom-2 laser.
    pub atom2_phase0: f64,
    /// Peak of the step-2 lasers (rad/µs).
    pub omega_max: f64,
    /// Peak of the step-1/3 transfer lasers (rad/µs).
    pub omega_transfer: f64,
    pub g1: f64,
    pub g2: f64,
    /// Cavity field decay rate κ (rad/µs).
    pub kappa: f64,
    /// Optional excited-level decay rate Γ (rad/µs).
    pub gamma: f64,
    /// Pulse FWHM T_P (µs).
    pub fwhm: f64,
    /// Center-to-center delay within a counterintuitive pair (µs).
    pub delay: f64,
    /// Center-to-center gap between consecutive steps (µs).
    pub gap: f64,
    /// Separation of the two lobes of the merged `Ω⁽²⁾` pulse (µs).
    pub hold: f64,
}

impl Default for GateConfig {
    /// Field strengths of the reference experiment (Ω_max/2π = 14 MHz,
    /// g/2π = 34 MHz, T_P = 100 ns), control state |+>, and the R(π/4) target
    /// rotation, with κ = 0. The delay, hold and transfer-laser peak are
    /// calibrated against the reference fidelity table.
    fn default() -> Self {
        let two_pi = std::f64::consts::TAU;
        let (delta, theta, phi2) = crate::gate::R_PI_4;
        Self {
            delta,
            theta,
            phi2,
            chi: std::f64::consts::FRAC_PI_4,
            phi1: 0.0,
            xi: delta / 2.0,
            xi_prime: 0.0,
            phase_corrected: true,
            pump_phase: 0.0,
            atom2_phase0: 0.0,
            omega_max: two_pi * 14.0,
            omega_transfer: two_pi * 28.0,
            g1: two_pi * 34.0,
            g2: two_pi * 34.0,
            kappa: 0.0,
            gamma: 0.0,
            fwhm: 0.1,
            delay: 0.06,
            gap: 0.25,
            hold: 0.1,
        }
    }
}

impl GateConfig {
    /// Sets ξ′ so that ξ − ξ′ = δ/2 and turns phase correction on.
    pub fn with_phase_correction(mut self) -> Self {
        self.xi_prime = self.xi - self.delta / 2.0;
        self.phase_corrected = true;
        self
    }

    /// Residual phase ξ − ξ′ − δ/2 carried by the control branch.
    pub fn phase_residual(&self) -> f64 {
        self.xi - self.xi_prime - self.delta / 2.0
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        for (name, value) in [
            ("fwhm", self.fwhm),
            ("delay", self.delay),
            ("gap", self.gap),
            ("g1", self.g1),
            ("g2", self.g2),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ScheduleError::NonPositive { name, value });
            }
        }
        for (name, value) in [
            ("omega_max", self.omega_max),
            ("omega_transfer", self.omega_transfer),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("hold", self.hold),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ScheduleError::Negative { name, value });
            }
        }
        if self.gap < self.fwhm {
            return Err(ScheduleError::StepsOverlap { gap: self.gap, fwhm: self.fwhm });
        }
        if self.phase_corrected && self.phase_residual().abs() > 1e-12 {
            return Err(ScheduleError::PhaseCondition(self.phase_residual()));
        }
        Ok(())
    }

    fn atom2_laser(&self) -> EllipticLaser {
        EllipticLaser {
            angle: self.theta,
            phase0: self.atom2_phase0,
            phase1: self.atom2_phase0 + self.phi2,
        }
    }

    fn transfer_laser(&self) -> EllipticLaser {
        EllipticLaser { angle: self.chi, phase0: 0.0, phase1: self.phi1 }
    }
}

/// Ordered pulses plus the time window they span.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pulses: Vec<Pulse>,
    start: f64,
    end: f64,
    /// Boundaries between consecutive steps (one fewer than the step count).
    step_ends: Vec<f64>,
}

impl PulseSchedule {
    pub fn new(pulses: Vec<Pulse>, step_ends: Vec<f64>) -> Self {
        let start = pulses.iter().map(|p| p.envelope.support().0).fold(f64::INFINITY, f64::min);
        let end = pulses.iter().map(|p| p.envelope.support().1).fold(f64::NEG_INFINITY, f64::max);
        Self { pulses, start, end, step_ends }
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    /// Time windows of the steps, in order.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut edges = vec![self.start];
        edges.extend(&self.step_ends);
        edges.push(self.end);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Uniform grid from start to end inclusive.
    pub fn grid(&self, step: f64) -> Vec<f64> {
        let n = (self.duration() / step).ceil() as usize;
        (0..=n).map(|k| (self.start + k as f64 * step).min(self.end)).collect()
    }

    pub fn couplings(&self, t: f64) -> Couplings {
        let mut c = Couplings::default();
        for pulse in &self.pulses {
            let omega = pulse.envelope.value(t);
            if omega == 0.0 {
                continue;
            }
            match pulse.drive {
                Drive::Pump1 { phase } => c.pump1 += C64::from_polar(omega, -phase),
                Drive::Atom2(laser) => {
                    let (c0, c1) = laser.couplings(omega);
                    c.atom2_0 += c0;
                    c.atom2_1 += c1;
                }
                Drive::Transfer(laser) => {
                    let (c0, c1) = laser.couplings(omega);
                    c.transfer_0 += c0;
                    c.transfer_1 += c1;
                }
                Drive::TransferAncilla { phase } => {
                    c.transfer_a += C64::from_polar(omega, -phase)
                }
            }
        }
        c
    }
}

/// Builds the seven-pulse gate schedule.
pub fn build_gate_schedule(config: &GateConfig) -> Result<PulseSchedule, ScheduleError> {
    config.validate()?;
    let tp = config.fwhm;
    let dt = config.delay;
    let transfer = config.transfer_laser();

    let c1 = TRUNCATION_FWHMS * tp;
    let c2 = c1 + dt;
    let c3 = c2 + config.gap;
    let c4 = [c3 + dt, c3 + dt + config.hold];
    let c5 = c4[1] + dt;
    let c6 = c5 + config.gap;
    let c7 = c6 + dt;

    let pulses = vec![
        Pulse {
            name: "transfer_ancilla_1",
            envelope: Envelope::single(c1, tp, config.omega_transfer),
            drive: Drive::TransferAncilla { phase: config.xi },
        },
        Pulse {
            name: "transfer_1",
            envelope: Envelope::single(c2, tp, config.omega_transfer),
            drive: Drive::Transfer(transfer),
        },
        Pulse {
            name: "pump_1",
            envelope: Envelope::single(c3, tp, config.omega_max),
            drive: Drive::Pump1 { phase: config.pump_phase },
        },
        Pulse {
            name: "atom2",
            envelope: Envelope::merged(c4.to_vec(), tp, config.omega_max),
            drive: Drive::Atom2(config.atom2_laser()),
        },
        Pulse {
            name: "pump_2",
            envelope: Envelope::single(c5, tp, config.omega_max),
            drive: Drive::Pump1 { phase: config.pump_phase + config.delta },
        },
        Pulse {
            name: "transfer_2",
            envelope: Envelope::single(c6, tp, config.omega_transfer),
            drive: Drive::Transfer(transfer),
        },
        Pulse {
            name: "transfer_ancilla_2",
            envelope: Envelope::single(c7, tp, config.omega_transfer),
            drive: Drive::TransferAncilla { phase: config.xi_prime },
        },
    ];
    let step_ends = vec![0.5 * (c2 + c3), 0.5 * (c5 + c6)];
    Ok(PulseSchedule::new(pulses, step_ends))
}

/// The three step-2 pulses alone, with the same timing as in the full gate.
pub fn build_rotation_schedule(config: &GateConfig) -> Result<PulseSchedule, ScheduleError> {
    let full = build_gate_schedule(config)?;
    let pulses = full.pulses[2..5].to_vec();
    Ok(PulseSchedule::new(pulses, Vec::new()))
}

/// Dark-state mixing angles (η, ψ, φ) at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingAngles {
    /// tan η = Ω⁽²⁾ / g⁽²⁾
    pub eta: f64,
    /// tan ψ = Ω₁⁽¹⁾ / g⁽¹⁾
    pub psi: f64,
    /// tan φ = sin ψ / tan η
    pub varphi: f64,
    /// Both fields vanish and φ is undefined (reported as 0).
    pub degenerate: bool,
}

impl MixingAngles {
    pub fn from_fields(omega2: f64, omega11: f64, g1: f64, g2: f64) -> Self {
        let eta = omega2.atan2(g2);
        let psi = omega11.atan2(g1);
        let degenerate = eta == 0.0 && psi == 0.0;
        let varphi = if psi == 0.0 {
            0.0
        } else if eta == 0.0 {
            FRAC_PI_2
        } else {
            psi.sin().atan2(eta.tan())
        };
        Self { eta, psi, varphi, degenerate }
    }
}

pub fn mixing_angles(schedule: &PulseSchedule, t: f64, g1: f64, g2: f64) -> MixingAngles {
    let c = schedule.couplings(t);
    MixingAngles::from_fields(c.atom2_envelope(), c.pump1.norm(), g1, g2)
}

/// Field magnitudes (rad/µs) and phases (rad) sampled for export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub t: f64,
    pub pump1: f64,
    pub atom2: f64,
    pub transfer: f64,
    pub transfer_ancilla: f64,
    pub pump1_phase: f64,
    pub atom2_phase0: f64,
    pub atom2_phase1: f64,
    pub transfer_phase0: f64,
    pub transfer_phase1: f64,
    pub transfer_ancilla_phase: f64,
}

fn laser_phase(c: C64) -> f64 {
    if c.norm() == 0.0 {
        0.0
    } else {
        -c.arg()
    }
}

impl PulseSchedule {
    pub fn sample(&self, t: f64) -> FieldSample {
        let c = self.couplings(t);
        FieldSample {
            t,
            pump1: c.pump1.norm(),
            atom2: c.atom2_envelope(),
            transfer: c.transfer_envelope(),
            transfer_ancilla: c.transfer_a.norm(),
            pump1_phase: laser_phase(c.pump1),
            atom2_phase0: laser_phase(c.atom2_0),
            atom2_phase1: laser_phase(c.atom2_1),
            transfer_phase0: laser_phase(c.transfer_0),
            transfer_phase1: laser_phase(c.transfer_1),
            transfer_ancilla_phase: laser_phase(c.transfer_a),
        }
    }
}
