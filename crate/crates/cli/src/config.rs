//! JSON run configuration. Frequencies are ν = Ω/2π in MHz, times in ns;
//! angles and phases in radians.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tripod_gate::gate::KappaConvention;
use tripod_gate::hilbert::HilbertSpace;
use tripod_gate::propagator::PropagatorOptions;
use tripod_gate::pulses::GateConfig;

use crate::CliError;

const NS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KappaMeaning {
    /// κ is the cavity field decay rate (photon loss at 2κ).
    #[default]
    Field,
    /// κ is the photon-number decay rate.
    Photon,
}

impl From<KappaMeaning> for KappaConvention {
    fn from(k: KappaMeaning) -> Self {
        match k {
            KappaMeaning::Field => KappaConvention::FieldDecay,
            KappaMeaning::Photon => KappaConvention::PhotonDecay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DarkCheckOptions {
    pub samples: usize,
    /// Amplitude of a synthetic θ(t) modulation (rad); 0 keeps θ fixed.
    pub theta_amplitude: f64,
    /// Modulation frequency in MHz.
    pub theta_frequency_mhz: f64,
    pub dt_ns: f64,
}

impl Default for DarkCheckOptions {
    fn default() -> Self {
        Self { samples: 50, theta_amplitude: 0.0, theta_frequency_mhz: 1.5, dt_ns: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub delta: f64,
    pub theta: f64,
    pub phi2: f64,
    pub chi: f64,
    pub phi1: f64,
    /// Defaults to δ/2.
    pub xi: Option<f64>,
    /// Defaults to ξ − δ/2 when phase-corrected, otherwise 0.
    pub xi_prime: Option<f64>,
    pub phase_corrected: bool,
    pub pump_phase: f64,
    pub atom2_phase0: f64,
    pub omega_max_mhz: f64,
    pub omega_transfer_mhz: f64,
    pub g1_mhz: f64,
    pub g2_mhz: f64,
    pub kappa_mhz: f64,
    pub kappa_convention: KappaMeaning,
    pub gamma_mhz: f64,
    pub fwhm_ns: f64,
    pub delay_ns: f64,
    pub gap_ns: f64,
    pub hold_ns: f64,
    pub n_max: usize,
    pub tol: f64,
    /// Trajectory sampling cadence.
    pub output_step_ns: f64,
    /// Basis labels written to the trajectory CSV; empty means the four
    /// computational states with an empty cavity.
    pub labels: Vec<String>,
    pub dark_check: DarkCheckOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GateConfig::default();
        let mhz = |w: f64| w / TAU;
        Self {
            delta: g.delta,
            theta: g.theta,
            phi2: g.phi2,
            chi: g.chi,
            phi1: g.phi1,
            xi: None,
            xi_prime: None,
            phase_corrected: true,
            pump_phase: g.pump_phase,
            atom2_phase0: g.atom2_phase0,
            omega_max_mhz: mhz(g.omega_max),
            omega_transfer_mhz: mhz(g.omega_transfer),
            g1_mhz: mhz(g.g1),
            g2_mhz: mhz(g.g2),
            kappa_mhz: 0.0,
            kappa_convention: KappaMeaning::Field,
            gamma_mhz: 0.0,
            fwhm_ns: g.fwhm / NS,
            delay_ns: g.delay / NS,
            gap_ns: g.gap / NS,
            hold_ns: g.hold / NS,
            n_max: HilbertSpace::DEFAULT_N_MAX,
            tol: 1e-10,
            output_step_ns: 1.0,
            labels: Vec::new(),
            dark_check: DarkCheckOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<(), CliError> {
        self.gate()?
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.space()?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::Config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.output_step_ns > 0.0 && self.output_step_ns.is_finite()) {
            return Err(CliError::Config("output_step_ns must be positive".into()));
        }
        if self.dark_check.samples < 2 || !(self.dark_check.dt_ns > 0.0) {
            return Err(CliError::Config("dark_check needs samples >= 2 and dt_ns > 0".into()));
        }
        let space = self.space()?;
        for label in &self.labels {
            let parsed = label
                .parse()
                .map_err(|e: tripod_gate::hilbert::HilbertError| CliError::Config(e.to_string()))?;
            space.index(parsed).map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn with_kappa(mut self, kappa_mhz: Option<f64>) -> Result<Self, CliError> {
        if let Some(k) = kappa_mhz {
            self.kappa_mhz = k;
            self.validate()?;
        }
        Ok(self)
    }

    pub fn convention(&self) -> KappaConvention {
        self.kappa_convention.into()
    }

    pub fn gate(&self) -> Result<GateConfig, CliError> {
        let xi = self.xi.unwrap_or(self.delta / 2.0);
        let xi_prime = self.xi_prime.unwrap_or(if self.phase_corrected {
            xi - self.delta / 2.0
        } else {
            0.0
        });
        let convention = self.convention();
        let config = GateConfig {
            delta: self.delta,
            theta: self.theta,
            phi2: self.phi2,
            chi: self.chi,
            phi1: self.phi1,
            xi,
            xi_prime,
            phase_corrected: self.phase_corrected,
            pump_phase: self.pump_phase,
            atom2_phase0: self.atom2_phase0,
            omega_max: TAU * self.omega_max_mhz,
            omega_transfer: TAU * self.omega_transfer_mhz,
            g1: TAU * self.g1_mhz,
            g2: TAU * self.g2_mhz,
            kappa: convention.photon_loss_rate(TAU * self.kappa_mhz),
            gamma: TAU * self.gamma_mhz,
            fwhm: self.fwhm_ns * NS,
            delay: self.delay_ns * NS,
            gap: self.gap_ns * NS,
            hold: self.hold_ns * NS,
        };
        Ok(config)
    }

    pub fn space(&self) -> Result<HilbertSpace, CliError> {
        HilbertSpace::new(self.n_max).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn propagator(&self, with_grid: bool) -> PropagatorOptions {
        PropagatorOptions {
            tol: self.tol,
            output_step: with_grid.then_some(self.output_step_ns * NS),
            ..PropagatorOptions::default()
        }
    }
}
