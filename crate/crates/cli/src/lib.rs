//! Command-line front end for the tripod-atom cavity gate simulator.

pub mod commands;
pub mod config;
pub mod state;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use tripod_gate::darkstates::DarkStateError;
use tripod_gate::gate::GateError;
use tripod_gate::hilbert::HilbertError;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<GateError> for CliError {
    fn from(e: GateError) -> Self {
        match e {
            GateError::Schedule(_)
            | GateError::NotComputational(_)
            | GateError::NotReflection(_)
            | GateError::TrivialReflection
            | GateError::NegativeKappa { .. } => Self::Config(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<DarkStateError> for CliError {
    fn from(e: DarkStateError) -> Self {
        Self::Numerical(e.to_string())
    }
}

impl From<HilbertError> for CliError {
    fn from(e: HilbertError) -> Self {
        Self::Numerical(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "tripod-gate", version, about = "Cavity-mediated controlled-unitary gate between two tripod atoms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration (MHz / ns units); defaults apply when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override κ/2π in MHz
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propagate one initial state through the gate and write populations and phases
    Simulate {
        #[command(flatten)]
        common: Common,
        /// e.g. +0, -1, 01, or eight numbers re,im,... on 00,01,10,11
        #[arg(long, allow_hyphen_values = true)]
        initial_state: String,
    },
    /// Extract the 4x4 gate matrix in the control basis
    Tomography {
        #[command(flatten)]
        common: Common,
    },
    /// F- and F+ for a grid of (omega_max, g, kappa) points
    FidelityTable {
        #[command(flatten)]
        common: Common,
        /// CSV with columns omega_max_mhz,g_mhz,kappa_mhz; the reference grid if omitted
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Dark-state residuals, kernel projection and nonadiabatic couplings
    DarkCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Projective measurement of a +-1 observable through the gate
    DemoMeasure {
        #[command(flatten)]
        common: Common,
        /// x, y, z or eight numbers (row-major re,im)
        #[arg(long, default_value = "x", allow_hyphen_values = true)]
        operator: String,
        /// 0, 1, + or -
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        input: String,
    },
    /// Write the pulse envelopes and phases on the output grid
    ExportSchedule {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common, kappa_applies: bool) -> Result<RunConfig, CliError> {
    let config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if kappa_applies {
        config.with_kappa(common.kappa)
    } else {
        Ok(config)
    }
}

/// Runs one parsed command line; returns a short human-readable report.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate { common, initial_state } => {
            let config = load(&common, true)?;
            let s = commands::simulate(&config, &initial_state, &common.out)?;
            Ok(format!(
                "fidelity to ideal {:.6}, norm loss {:.3e}; wrote {}",
                s.fidelity_to_ideal,
                s.norm_loss,
                common.out.display()
            ))
        }
        Command::Tomography { common } => {
            let config = load(&common, true)?;
            let r = commands::tomography(&config, &common.out)?;
            Ok(format!(
                "average fidelity {:.6}, leakage {:.3e}, unitarity defect {:.3e}",
                r.average_fidelity, r.leakage, r.unitarity_defect
            ))
        }
        Command::FidelityTable { common, grid } => {
            let config = load(&common, false)?;
            let rows = commands::fidelity_table(&config, grid.as_deref(), common.kappa, &common.out)?;
            Ok(rows
                .iter()
                .map(|r| {
                    format!(
                        "({}, {}, {}) MHz: F- {:.3}  F+ {:.3}",
                        r.omega_max_mhz,
                        r.g_mhz,
                        r.kappa_mhz,
                        r.f_minus_mean(),
                        r.f_plus_mean()
                    )
                })
                .collect::<Vec<_>>()
                .join("\n"))
        }
        Command::DarkCheck { common } => {
            let config = load(&common, true)?;
            let path = commands::dark_check(&config, &common.out)?;
            Ok(format!("wrote {}", path.display()))
        }
        Command::DemoMeasure { common, operator, input } => {
            let config = load(&common, true)?;
            let r = commands::demo_measure(&config, &operator, &input, &common.out)?;
            Ok(format!("outcome probabilities {:.4} / {:.4}", r.probabilities[0], r.probabilities[1]))
        }
        Command::ExportSchedule { common } => {
            let config = load(&common, false)?;
            let path = commands::export_schedule(&config, &common.out)?;
            Ok(format!("wrote {}", path.display()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Io("x".into()).exit_code(), 2);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 3);
        assert_eq!(CliError::from(GateError::TrivialReflection).exit_code(), 2);
    }

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["tripod-gate", "simulate", "--initial-state", "-0", "--kappa", "2"]).unwrap();
        match cli.command {
            Command::Simulate { common, initial_state } => {
                assert_eq!(initial_state, "-0");
                assert_eq!(common.kappa, Some(2.0));
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["tripod-gate", "simulate"]).is_err());
    }
}
