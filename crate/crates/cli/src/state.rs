//! Parsing of initial-state and operator specifications.

use nalgebra::{Matrix2, Vector4};
use num_complex::Complex64 as C64;
use tripod_gate::gate::{pauli, product_input};
use tripod_gate::hilbert::QubitVector;

use crate::CliError;

fn qubit(c: char) -> Option<QubitVector> {
    match c {
        '0' => Some(QubitVector::zero()),
        '1' => Some(QubitVector::one()),
        '+' => Some(QubitVector::plus()),
        '-' => Some(QubitVector::minus()),
        _ => None,
    }
}

/// One-qubit spec: `0`, `1`, `+` or `-`.
pub fn parse_qubit(spec: &str) -> Result<QubitVector, CliError> {
    let mut chars = spec.trim().chars();
    match (chars.next().and_then(qubit), chars.next()) {
        (Some(q), None) => Ok(q),
        _ => Err(CliError::Config(format!("bad qubit state {spec:?}: expected 0, 1, + or -"))),
    }
}

/// Two-qubit initial state on {00, 01, 10, 11}.
///
/// Either two symbols from `0 1 + -` (control first, e.g. `+0`) or eight
/// comma-separated numbers `re,im` for each amplitude in order.
pub fn parse_initial_state(spec: &str) -> Result<Vector4<C64>, CliError> {
    let spec = spec.trim();
    if spec.contains(',') {
        let values: Vec<f64> = spec
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("bad amplitude list {spec:?}: {e}")))?;
        if values.len() != 8 {
            return Err(CliError::Config(format!(
                "explicit initial state needs 8 numbers, got {}",
                values.len()
            )));
        }
        let v = Vector4::from_fn(|k, _| C64::new(values[2 * k], values[2 * k + 1]));
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(CliError::Config(format!("initial state has norm {norm}, expected 1")));
        }
        return Ok(v);
    }
    let chars: Vec<char> = spec.chars().collect();
    match chars.as_slice() {
        [a, b] => match (qubit(*a), qubit(*b)) {
            (Some(c), Some(t)) => Ok(product_input(c, t)),
            _ => Err(CliError::Config(format!("bad initial state {spec:?}"))),
        },
        _ => Err(CliError::Config(format!(
            "bad initial state {spec:?}: use e.g. +0, -1, 01 or eight numbers"
        ))),
    }
}

/// `x`, `y`, `z`, or eight comma-separated numbers (row-major re,im).
pub fn parse_operator(spec: &str) -> Result<Matrix2<C64>, CliError> {
    let [sx, sy, sz] = pauli();
    match spec.trim() {
        "x" | "X" => Ok(sx),
        "y" | "Y" => Ok(sy),
        "z" | "Z" => Ok(sz),
        other => {
            let values: Vec<f64> = other
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(format!("bad operator {other:?}: {e}")))?;
            if values.len() != 8 {
                return Err(CliError::Config(format!(
                    "operator needs x, y, z or 8 numbers, got {other:?}"
                )));
            }
            Ok(Matrix2::from_fn(|i, j| {
                let k = 2 * (2 * i + j);
                C64::new(values[k], values[k + 1])
            }))
        }
    }
}
