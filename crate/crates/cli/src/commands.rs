//! One function per subcommand. Every command validates first, computes, and
//! only then writes its files.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use tripod_gate::darkstates::{dark_check as run_dark_check, ThetaModulation};
use tripod_gate::gate::{
    computational_state, extract_gate_matrix, fidelity_table as run_table, ideal_final_state,
    ideal_gate, integrated_photon_population, run_gate, simulate_measurement, GateMatrix,
    TablePoint, REFERENCE_GRID,
};
use tripod_gate::hamiltonian::HamiltonianSpec;
use tripod_gate::hilbert::{BasisLabel, StateVector};
use tripod_gate::pulses::build_gate_schedule;

use crate::config::RunConfig;
use crate::state::{parse_initial_state, parse_operator, parse_qubit};
use crate::CliError;

const US_TO_NS: f64 = 1e3;
const DEFAULT_LABELS: [&str; 6] = ["00_0", "01_0", "10_0", "11_0", "a0_0", "a1_0"];

fn create_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn io(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn fmt(x: f64) -> String {
    format!("{:.10e}", x + 0.0)
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn matrix_pairs(m: &Matrix4<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..4).map(|i| (0..4).map(|j| pair(m[(i, j)])).collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub initial_state: String,
    pub initial_amplitudes: Vec<[f64; 2]>,
    pub duration_ns: f64,
    pub final_norm: f64,
    pub norm_loss: f64,
    pub fidelity_to_ideal: f64,
    pub final_populations: BTreeMap<String, f64>,
    pub checkpoint_norms: Vec<f64>,
    pub max_photon_population: f64,
    pub integrated_photon_population_ns: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Trajectory CSV plus run summary.
pub fn simulate(config: &RunConfig, initial: &str, out: &Path) -> Result<SimulationSummary, CliError> {
    let amps = parse_initial_state(initial)?;
    let gate = config.gate()?;
    let space = config.space()?;
    let labels: Vec<BasisLabel> = if config.labels.is_empty() {
        DEFAULT_LABELS.iter().map(|l| l.parse().expect("valid default label")).collect()
    } else {
        config.labels.iter().map(|l| l.parse().expect("validated label")).collect()
    };
    let indices: Vec<usize> =
        labels.iter().map(|&l| space.index(l).map_err(|e| CliError::Config(e.to_string()))).collect::<Result<_, _>>()?;

    let psi0 = computational_state(space, &amps);
    let run = run_gate(&gate, space, &psi0, &config.propagator(true))?;
    let traj = &run.trajectory;
    let final_state = run.final_state();

    create_dir(out)?;
    let path = out.join("trajectory.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["t_ns".to_string()];
    header.extend(labels.iter().map(|l| format!("pop_{l}")));
    header.extend(labels.iter().map(|l| format!("phase_{l}")));
    header.push("norm".into());
    header.push("photon_population".into());
    w.write_record(&header).map_err(io(&path))?;
    let mut max_photons: f64 = 0.0;
    for ((t, s), n) in traj.times.iter().zip(&traj.states).zip(&traj.norms) {
        let photons = StateVector::from_amplitudes(space, s.clone())
            .expect("same space")
            .photon_population();
        max_photons = max_photons.max(photons);
        let mut row = vec![fmt(t * US_TO_NS)];
        row.extend(indices.iter().map(|&i| fmt(s[i].norm_sqr())));
        row.extend(indices.iter().map(|&i| fmt(if s[i].norm() > 1e-9 { s[i].arg() } else { 0.0 })));
        row.push(fmt(*n));
        row.push(fmt(photons));
        w.write_record(&row).map_err(io(&path))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;

    let ideal = ideal_final_state(&gate, space, &amps);
    let final_norm = final_state.norm();
    let summary = SimulationSummary {
        initial_state: initial.to_string(),
        initial_amplitudes: amps.iter().map(|&z| pair(z)).collect(),
        duration_ns: (traj.final_time() - traj.times[0]) * US_TO_NS,
        final_norm,
        norm_loss: 1.0 - final_norm * final_norm,
        fidelity_to_ideal: ideal.overlap(final_state)?.norm_sqr(),
        final_populations: labels
            .iter()
            .zip(&indices)
            .map(|(l, &i)| (l.to_string(), final_state.amplitudes()[i].norm_sqr()))
            .collect(),
        checkpoint_norms: run.checkpoints.iter().map(|c| c.norm()).collect(),
        max_photon_population: max_photons,
        integrated_photon_population_ns: integrated_photon_population(space, traj) * US_TO_NS,
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct TomographyReport {
    pub basis_order: Vec<String>,
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub ideal: Vec<Vec<[f64; 2]>>,
    pub computational_basis_order: Vec<String>,
    pub matrix_computational: Vec<Vec<[f64; 2]>>,
    pub global_phase_fixed: bool,
    pub average_fidelity: f64,
    pub leakage: f64,
    pub unitarity_defect: f64,
    pub max_deviation: f64,
}

impl TomographyReport {
    fn new(gate: &GateMatrix, ideal: &Matrix4<C64>) -> Self {
        Self {
            basis_order: GateMatrix::BASIS_ORDER.iter().map(|s| s.to_string()).collect(),
            matrix: matrix_pairs(&gate.matrix),
            ideal: matrix_pairs(ideal),
            computational_basis_order: ["00", "01", "10", "11"].iter().map(|s| s.to_string()).collect(),
            matrix_computational: matrix_pairs(&gate.to_computational()),
            global_phase_fixed: gate.phase_fixed,
            average_fidelity: gate.average_fidelity(ideal),
            leakage: gate.leakage(),
            unitarity_defect: gate.unitarity_defect(),
            max_deviation: gate.max_deviation(ideal),
        }
    }
}

pub fn tomography(config: &RunConfig, out: &Path) -> Result<TomographyReport, CliError> {
    let gate_config = config.gate()?;
    let gate = extract_gate_matrix(&gate_config, config.space()?, &config.propagator(false))?;
    let report = TomographyReport::new(&gate, &ideal_gate(&gate_config));
    create_dir(out)?;
    write_json(&out.join("gate_matrix.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridRow {
    pub omega_max_mhz: f64,
    pub g_mhz: f64,
    pub kappa_mhz: f64,
}

pub fn read_grid(path: &Path) -> Result<Vec<TablePoint>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let rows: Vec<GridRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: empty grid", path.display())));
    }
    for (i, r) in rows.iter().enumerate() {
        if !(r.kappa_mhz >= 0.0 && r.g_mhz > 0.0 && r.omega_max_mhz >= 0.0) {
            return Err(CliError::Config(format!("grid row {}: invalid values {r:?}", i + 1)));
        }
    }
    Ok(rows.iter().map(|r| TablePoint::new(r.omega_max_mhz, r.g_mhz, r.kappa_mhz)).collect())
}

pub fn fidelity_table(
    config: &RunConfig,
    grid: Option<&Path>,
    kappa_override: Option<f64>,
    out: &Path,
) -> Result<Vec<tripod_gate::gate::FidelityRecord>, CliError> {
    let mut points = match grid {
        Some(path) => read_grid(path)?,
        None => REFERENCE_GRID.to_vec(),
    };
    if let Some(k) = kappa_override {
        if !(k >= 0.0) {
            return Err(CliError::Config(format!("--kappa must be non-negative, got {k}")));
        }
        points.iter_mut().for_each(|p| p.kappa_mhz = k);
    }
    let rows = run_table(
        &config.gate()?,
        &points,
        config.convention(),
        config.space()?,
        &config.propagator(false),
    )?;
    create_dir(out)?;
    let path = out.join("fidelity_table.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "omega_max_mhz",
        "g_mhz",
        "kappa_mhz",
        "F_minus_0",
        "F_minus_1",
        "F_minus_mean",
        "F_plus_0",
        "F_plus_1",
        "F_plus_mean",
    ])
    .map_err(io(&path))?;
    for r in &rows {
        w.write_record([
            r.omega_max_mhz.to_string(),
            r.g_mhz.to_string(),
            r.kappa_mhz.to_string(),
            format!("{:.6}", r.f_minus[0]),
            format!("{:.6}", r.f_minus[1]),
            format!("{:.6}", r.f_minus_mean()),
            format!("{:.6}", r.f_plus[0]),
            format!("{:.6}", r.f_plus[1]),
            format!("{:.6}", r.f_plus_mean()),
        ])
        .map_err(io(&path))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(rows)
}

pub fn dark_check(config: &RunConfig, out: &Path) -> Result<PathBuf, CliError> {
    let gate = config.gate()?;
    let spec = HamiltonianSpec::for_gate(config.space()?, &gate)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let opts = &config.dark_check;
    let t_ref = spec.schedule().start();
    let modulation = ThetaModulation {
        amplitude: opts.theta_amplitude,
        omega: TAU * opts.theta_frequency_mhz,
        t_ref,
    };
    let rows = run_dark_check(&spec, &gate, opts.samples, modulation, opts.dt_ns / US_TO_NS)?;
    create_dir(out)?;
    let path = out.join("dark_check.csv");
    let mut w = csv_writer(&path)?;
    let mut header: Vec<String> = vec!["t_ns".into()];
    header.extend((1..=6).map(|i| format!("residual_{i}")));
    header.extend(["kernel_dim", "ground_kernel_dim", "psi6_kernel_deficit", "max_principal_angle"].map(String::from));
    for p in ["21", "43", "65"] {
        header.extend([format!("coupling_{p}_re"), format!("coupling_{p}_im"), format!("expected_{p}")]);
    }
    w.write_record(&header).map_err(io(&path))?;
    for row in &rows {
        let mut rec = vec![fmt(row.t * US_TO_NS)];
        rec.extend(row.residuals.iter().map(|&r| fmt(r)));
        rec.push(row.kernel.kernel_dim.to_string());
        rec.push(row.kernel.ground_kernel_dim.to_string());
        rec.push(fmt(row.kernel.deficits[5]));
        rec.push(fmt(row.kernel.max_principal_angle));
        for i in 0..3 {
            rec.extend([fmt(row.couplings[i].re), fmt(row.couplings[i].im), fmt(row.expected[i])]);
        }
        w.write_record(&rec).map_err(io(&path))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(path)
}

#[derive(Debug, Serialize)]
pub struct MeasurementReport {
    pub operator: Vec<Vec<[f64; 2]>>,
    pub input: [[f64; 2]; 2],
    pub probabilities: [f64; 2],
    pub post_states: [Option<[[f64; 2]; 2]>; 2],
    pub eigen_fidelities: [Option<f64>; 2],
    pub gate: TomographyReport,
}

pub fn demo_measure(
    config: &RunConfig,
    operator: &str,
    input: &str,
    out: &Path,
) -> Result<MeasurementReport, CliError> {
    let m = parse_operator(operator)?;
    let q = parse_qubit(input)?;
    let base = config.gate()?;
    let (gate, outcome) =
        simulate_measurement(&base, &m, q, config.space()?, &config.propagator(false))?;
    let measured = tripod_gate::gate::measurement_config(&base, &m)?;
    let report = MeasurementReport {
        operator: (0..2).map(|i| (0..2).map(|j| pair(m[(i, j)])).collect()).collect(),
        input: [pair(q.a0()), pair(q.a1())],
        probabilities: outcome.probabilities,
        post_states: outcome.post_states.map(|s| s.map(|v| [pair(v[0]), pair(v[1])])),
        eigen_fidelities: outcome.eigen_fidelities,
        gate: TomographyReport::new(&gate, &ideal_gate(&measured)),
    };
    create_dir(out)?;
    write_json(&out.join("measurement.json"), &report)?;
    Ok(report)
}

pub fn export_schedule(config: &RunConfig, out: &Path) -> Result<PathBuf, CliError> {
    let schedule = build_gate_schedule(&config.gate()?).map_err(|e| CliError::Config(e.to_string()))?;
    create_dir(out)?;
    let path = out.join("schedule.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "t_ns",
        "Omega_1_1",
        "Omega_2",
        "Omega_sti",
        "Omega_a_sti",
        "phase_1_1",
        "phase_2_0",
        "phase_2_1",
        "phase_sti_0",
        "phase_sti_1",
        "phase_a_sti",
    ])
    .map_err(io(&path))?;
    let mhz = |w: f64| fmt(w / TAU);
    for t in schedule.grid(config.output_step_ns / US_TO_NS) {
        let s = schedule.sample(t);
        w.write_record([
            fmt(t * US_TO_NS),
            mhz(s.pump1),
            mhz(s.atom2),
            mhz(s.transfer),
            mhz(s.transfer_ancilla),
            fmt(s.pump1_phase),
            fmt(s.atom2_phase0),
            fmt(s.atom2_phase1),
            fmt(s.transfer_phase0),
            fmt(s.transfer_phase1),
            fmt(s.transfer_ancilla_phase),
        ])
        .map_err(io(&path))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(path)
}
