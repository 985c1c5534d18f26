//! Scenario files: TOML with one section per field of the scenario.

use std::path::{Path, PathBuf};

use bargmann::dynamics::IntegratorSpec;
use bargmann::fields::{read_dump, GaussianSpec, GridWavefunction, Units};
use bargmann::frames::{FrameSpec, RotationFamily, TranslationFamily};
use bargmann::grid::GridSpec;
use bargmann::hamiltonians::Potential;
use bargmann::numeric::{CubicSpline3, Mat3, Vec3};
use bargmann::{Error, Result};
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RotationDef {
    Identity,
    Constant { matrix: [[f64; 3]; 3] },
    ConstantRate { axis: [f64; 3], rate: f64 },
    /// Rotation vector sampled at knots.
    Spline { times: Vec<f64>, values: Vec<[f64; 3]> },
}

impl RotationDef {
    pub fn build(&self) -> Result<RotationFamily> {
        Ok(match self {
            RotationDef::Identity => RotationFamily::identity(),
            RotationDef::Constant { matrix } => {
                RotationFamily::Constant(Mat3::from_fn(|r, c| matrix[r][c]))
            }
            RotationDef::ConstantRate { axis, rate } => RotationFamily::about_axis(Vec3::from(*axis), *rate)?,
            RotationDef::Spline { times, values } => {
                RotationFamily::Spline(CubicSpline3::new(times.clone(), values.iter().map(|v| Vec3::from(*v)).collect())?)
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TranslationDef {
    Zero,
    /// `A(t) = Σ cₖ tᵏ`, lowest degree first, degree ≤ 3.
    Polynomial { coeffs: Vec<[f64; 3]> },
    Spline { times: Vec<f64>, values: Vec<[f64; 3]> },
}

impl TranslationDef {
    fn build(&self) -> Result<TranslationFamily> {
        Ok(match self {
            TranslationDef::Zero => TranslationFamily::Zero,
            TranslationDef::Polynomial { coeffs } => {
                TranslationFamily::Polynomial(coeffs.iter().map(|c| Vec3::from(*c)).collect())
            }
            TranslationDef::Spline { times, values } => {
                TranslationFamily::Spline(CubicSpline3::new(times.clone(), values.iter().map(|v| Vec3::from(*v)).collect())?)
            }
        })
    }
}

fn default_u() -> f64 {
    1.0
}

fn default_domain() -> [f64; 2] {
    [-1e6, 1e6]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDef {
    pub rotation: RotationDef,
    pub translation: TranslationDef,
    #[serde(default = "default_u")]
    pub u: f64,
    #[serde(default = "default_domain")]
    pub t_domain: [f64; 2],
}

impl FrameDef {
    pub fn build(&self) -> Result<FrameSpec> {
        FrameSpec::new(self.rotation.build()?, self.translation.build()?, self.u, (self.t_domain[0], self.t_domain[1]))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GaugeDef {
    A,
    B { rbar: RotationDef },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDef {
    pub dim: usize,
    pub n: Vec<usize>,
    pub box_length: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDef {
    Gaussian {
        center: [f64; 3],
        width: f64,
        #[serde(default)]
        momentum: [f64; 3],
        /// Spinor amplitudes as `[[re, im], [re, im]]`.
        spin: Option<[[f64; 2]; 2]>,
    },
    /// Binary state dump, relative to the scenario file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialDef {
    Zero,
    /// `Φ = g⃗·x⃗`, potential energy `m g⃗·x⃗`.
    Uniform { g: [f64; 3] },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDef {
    pub key: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiagnosticDef {
    Observables {
        #[serde(default)]
        gates: Vec<GateDef>,
    },
    /// Uses the initial state as the inertial state at `t = 0`.
    Covariance {
        #[serde(default)]
        gates: Vec<GateDef>,
    },
    /// Gravity from the uniform potential, frame acceleration `a`.
    Equivalence {
        a: [f64; 3],
        #[serde(default)]
        gates: Vec<GateDef>,
    },
    SpinPrecession {
        omega: f64,
        axis: [f64; 3],
        #[serde(default)]
        gates: Vec<GateDef>,
    },
}

impl DiagnosticDef {
    pub fn name(&self) -> &'static str {
        match self {
            DiagnosticDef::Observables { .. } => "observables",
            DiagnosticDef::Covariance { .. } => "covariance",
            DiagnosticDef::Equivalence { .. } => "equivalence",
            DiagnosticDef::SpinPrecession { .. } => "spin_precession",
        }
    }

    pub fn gates(&self) -> &[GateDef] {
        match self {
            DiagnosticDef::Observables { gates }
            | DiagnosticDef::Covariance { gates }
            | DiagnosticDef::Equivalence { gates, .. }
            | DiagnosticDef::SpinPrecession { gates, .. } => gates,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsDef {
    pub m: f64,
    pub hbar: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    /// Relative paths resolve against the scenario file.
    pub output_dir: PathBuf,
    pub units: Option<UnitsDef>,
    pub frame: FrameDef,
    pub gauge: GaugeDef,
    pub grid: GridDef,
    pub initial: InitialDef,
    pub potential: PotentialDef,
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub diagnostics: Vec<DiagnosticDef>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub source: PathBuf,
    pub output_dir: PathBuf,
    pub units: Units,
    pub frame: FrameSpec,
    pub spin_frame: Option<RotationFamily>,
    pub grid: GridSpec,
    pub initial: GridWavefunction,
    /// Set when the initial state is an analytic Gaussian.
    pub gaussian: Option<GaussianSpec>,
    pub potential: Potential,
    pub integrator: IntegratorSpec,
    pub diagnostics: Vec<DiagnosticDef>,
    pub def: ScenarioFile,
}

fn invalid(path: &Path, field: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: format!("field `{field}`: {e}"),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    /// Parses scenario text; `path` locates relative files and labels errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let def: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let units = match &def.units {
            Some(u) if !(u.m > 0.0 && u.hbar > 0.0) => return Err(invalid(path, "units", "m and hbar must be positive")),
            Some(u) => Units { m: u.m, hbar: u.hbar },
            None => Units::default(),
        };
        let frame = def.frame.build().map_err(|e| invalid(path, "frame", e))?;
        let spin_frame = match &def.gauge {
            GaugeDef::A => None,
            GaugeDef::B { rbar } => Some(rbar.build().map_err(|e| invalid(path, "gauge.rbar", e))?),
        };
        let grid = GridSpec::new(def.grid.dim, &def.grid.n, &def.grid.box_length).map_err(|e| invalid(path, "grid", e))?;
        let (initial, gaussian) = match &def.initial {
            InitialDef::Gaussian {
                center,
                width,
                momentum,
                spin,
            } => {
                let g = GaussianSpec {
                    center: *center,
                    width: *width,
                    momentum: *momentum,
                };
                let spin = spin.map(|s| [Complex64::new(s[0][0], s[0][1]), Complex64::new(s[1][0], s[1][1])]);
                let psi = GridWavefunction::gaussian(grid, &g, spin, units, def.name.as_str())
                    .map_err(|e| invalid(path, "initial", e))?;
                (psi, Some(g))
            }
            InitialDef::File { path: p } => {
                let full = base.join(p);
                let f = std::fs::File::open(&full).map_err(|e| invalid(path, "initial.path", format!("{}: {e}", full.display())))?;
                let (_, psi) = read_dump(std::io::BufReader::new(f)).map_err(|e| invalid(path, "initial.path", e))?;
                if psi.grid != grid {
                    return Err(invalid(path, "initial.path", "state dump grid differs from [grid]"));
                }
                (psi, None)
            }
        };
        let potential = match def.potential {
            PotentialDef::Zero => Potential::Zero,
            PotentialDef::Uniform { g } => Potential::Uniform { g: Vec3::from(g) },
        };
        def.integrator.validate().map_err(|e| invalid(path, "integrator", e))?;
        if spin_frame.is_some() && !initial.is_spinor() {
            return Err(invalid(path, "gauge", "gauge B carries a spin term and needs a spinor initial state"));
        }
        for (i, d) in def.diagnostics.iter().enumerate() {
            let field = format!("diagnostics[{i}]");
            for gate in d.gates() {
                if gate.min.is_none() && gate.max.is_none() {
                    return Err(invalid(path, &field, format!("gate `{}` needs min or max", gate.key)));
                }
            }
            match d {
                DiagnosticDef::Equivalence { .. } => {
                    if !matches!(potential, Potential::Uniform { .. }) {
                        return Err(invalid(path, &field, "equivalence requires a uniform potential"));
                    }
                    if gaussian.is_none() {
                        return Err(invalid(path, &field, "equivalence requires a Gaussian initial state"));
                    }
                }
                DiagnosticDef::Covariance { .. } if spin_frame.is_some() => {
                    return Err(invalid(path, &field, "covariance compares scalar evolutions and needs gauge A"));
                }
                DiagnosticDef::SpinPrecession { axis, .. } if Vec3::from(*axis).norm() == 0.0 => {
                    return Err(invalid(path, &field, "spin precession axis must be nonzero"));
                }
                _ => {}
            }
        }
        Ok(Self {
            name: def.name.clone(),
            source: path.to_path_buf(),
            output_dir: base.join(&def.output_dir),
            units,
            frame,
            spin_frame,
            grid,
            initial,
            gaussian,
            potential,
            integrator: def.integrator,
            diagnostics: def.diagnostics.clone(),
            def,
        })
    }
}
