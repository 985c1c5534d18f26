use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use bargmann::dynamics::{
    covariance_residual, equivalence_residual, evolve, spin_precession, CovarianceSetup, EquivalenceSetup,
    FrameHamiltonian, ResidualReport,
};
use bargmann::fields::{write_csv, write_dump, Precision};
use bargmann::hamiltonians::Potential;
use bargmann::numeric::Vec3;
use bargmann::{Error, Result};
use log::info;

use crate::scenario::{DiagnosticDef, GateDef, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome {
    pub diagnostic: String,
    pub key: String,
    pub value: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub passed: bool,
}

impl GateOutcome {
    pub fn label(&self) -> String {
        format!("{}.{}", self.diagnostic, self.key)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    /// Flat `diagnostic.key` measurements in declaration order.
    pub values: Vec<(String, f64)>,
    pub gates: Vec<GateOutcome>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn failing(&self) -> Vec<String> {
        self.gates.iter().filter(|g| !g.passed).map(GateOutcome::label).collect()
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// Flat key-value report.
    pub fn report_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.name);
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v:.9e}");
        }
        for g in &self.gates {
            let bound = match (g.min, g.max) {
                (Some(lo), Some(hi)) => format!("in [{lo:e}, {hi:e}]"),
                (Some(lo), None) => format!(">= {lo:e}"),
                (None, Some(hi)) => format!("<= {hi:e}"),
                (None, None) => String::new(),
            };
            let _ = writeln!(s, "gate.{} = {} ({bound})", g.label(), if g.passed { "pass" } else { "fail" });
        }
        let _ = writeln!(s, "status = {}", if self.passed() { "pass" } else { "fail" });
        s
    }
}

fn report_values(prefix: &str, r: &ResidualReport) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = [
        ("l2_distance", r.l2_distance),
        ("overlap_modulus", r.overlap_modulus),
        ("phase_residual", r.phase_residual),
        ("norm_drift", r.norm_drift),
        ("boundary_mass_max", r.boundary_mass_max),
    ]
    .into_iter()
    .map(|(k, x)| (format!("{prefix}.{k}"), x))
    .collect();
    v.extend(r.extra.iter().map(|(k, x)| (format!("{prefix}.{k}"), *x)));
    v
}

fn evaluate_gates(diag: &str, gates: &[GateDef], values: &[(String, f64)]) -> Result<Vec<GateOutcome>> {
    gates
        .iter()
        .map(|g| {
            let full = format!("{diag}.{}", g.key);
            let value = values
                .iter()
                .find(|(k, _)| *k == full)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Configuration(format!("gate refers to unknown measurement `{full}`")))?;
            let passed = g.min.is_none_or(|lo| value >= lo) && g.max.is_none_or(|hi| value <= hi) && value.is_finite();
            Ok(GateOutcome {
                diagnostic: diag.to_string(),
                key: g.key.clone(),
                value,
                min: g.min,
                max: g.max,
                passed,
            })
        })
        .collect()
}

/// Runs the scenario evolution and its diagnostics and writes the artifacts.
pub fn run_scenario(sc: &Scenario, precision: Precision) -> Result<RunOutcome> {
    info!("running scenario {}", sc.name);
    let mut src = FrameHamiltonian::new(sc.frame.clone(), sc.potential.clone(), sc.units, sc.grid);
    src.spin_frame = sc.spin_frame.clone();
    let mut integ = sc.integrator;
    if integ.sample_every == 0 {
        integ.sample_every = 1;
    }
    let ev = evolve(&sc.initial, &src, &integ)?;

    fs::create_dir_all(&sc.output_dir)?;
    let csv = sc.output_dir.join(format!("{}.observables.csv", sc.name));
    write_csv(BufWriter::new(fs::File::create(&csv)?), &ev.samples)?;
    let dump = sc.output_dir.join(format!("{}.state.bin", sc.name));
    write_dump(BufWriter::new(fs::File::create(&dump)?), &ev.psi, precision)?;

    let elapsed = (integ.t_end - sc.initial.t).max(f64::MIN_POSITIVE);
    let mut values = Vec::new();
    let mut gates = Vec::new();
    for d in &sc.diagnostics {
        let name = d.name();
        let measured: Vec<(String, f64)> = match d {
            DiagnosticDef::Observables { .. } => vec![
                (format!("{name}.norm_drift"), ev.norm_drift),
                (format!("{name}.norm_drift_per_time"), ev.norm_drift / elapsed),
                (format!("{name}.boundary_mass_max"), ev.boundary_mass_max),
                (format!("{name}.steps"), ev.steps as f64),
            ],
            DiagnosticDef::Covariance { .. } => {
                let r = covariance_residual(&CovarianceSetup {
                    frame: sc.frame.clone(),
                    potential: sc.potential.clone(),
                    psi0: sc.initial.clone(),
                    units: sc.units,
                    integ: sc.integrator,
                })?;
                report_values(name, &r)
            }
            DiagnosticDef::Equivalence { a, .. } => {
                let Potential::Uniform { g } = &sc.potential else {
                    return Err(Error::Configuration("equivalence requires a uniform potential".into()));
                };
                let base = EquivalenceSetup {
                    grid: sc.grid,
                    initial: sc.gaussian.ok_or_else(|| {
                        Error::Configuration("equivalence requires a Gaussian initial state".into())
                    })?,
                    units: sc.units,
                    integ: sc.integrator,
                };
                report_values(name, &equivalence_residual(g, &Vec3::from(*a), &base)?)
            }
            DiagnosticDef::SpinPrecession { omega, axis, .. } => {
                let s = spin_precession(*omega, &Vec3::from(*axis), sc.integrator.t_end, sc.integrator.dt)?;
                let rel = if *omega == 0.0 { s.frequency.abs() } else { (s.frequency - omega).abs() / omega.abs() };
                vec![
                    (format!("{name}.frequency"), s.frequency),
                    (format!("{name}.expected"), *omega),
                    (format!("{name}.relative_error"), rel),
                ]
            }
        };
        gates.extend(evaluate_gates(name, d.gates(), &measured)?);
        values.extend(measured);
    }
    let out = RunOutcome {
        name: sc.name.clone(),
        values,
        gates,
        files: vec![csv, dump, sc.output_dir.join(format!("{}.report.txt", sc.name))],
    };
    fs::write(&out.files[2], out.report_text())?;
    Ok(out)
}
