//! Time evolution, analytic reference solutions and residual diagnostics.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{observables, pushforward, GaussianSpec, GridWavefunction, Observables, Units, BOUNDARY_CELLS};
use crate::frames::{FrameSpec, RotationFamily};
use crate::grid::GridSpec;
use crate::hamiltonians::{
    build_h_gravity, build_h_inert, build_h_spin, remainder_phase, HamiltonianTerm, Mat2c, Potential, TermOp,
};
use crate::numeric::{so3_exp, so3_vee, Mat3, Vec3};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Symmetric splitting with exact kinetic, rotation and spin flows.
    StrangSplit,
    /// Classical RK4 on the full spectral right-hand side.
    Rk4Spectral,
}

/// Upper bound on `dt |Ω|` for rotating frames.
pub const MAX_ROTATION_PER_STEP: f64 = 0.1;
/// Largest `dt · ħ k²_max / 2m` accepted by the RK4 integrator (its imaginary-axis limit is 2√2).
pub const MAX_RK4_KINETIC_PHASE: f64 = 2.5;

fn default_norm_tol() -> f64 {
    1e-8
}

fn default_boundary_cap() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub method: Method,
    /// Largest step; the step count is rounded up so that steps land on `t_end`.
    pub dt: f64,
    pub t_end: f64,
    /// Allowed `|‖ψ(t)‖² − ‖ψ(t₀)‖²|` per unit elapsed time (at least one unit).
    #[serde(default = "default_norm_tol")]
    pub norm_drift_tol: f64,
    #[serde(default = "default_boundary_cap")]
    pub boundary_mass_cap: f64,
    /// Record observables every this many steps (0: start and end only).
    #[serde(default)]
    pub sample_every: usize,
}

impl IntegratorSpec {
    pub fn new(method: Method, dt: f64, t_end: f64) -> Self {
        Self {
            method,
            dt,
            t_end,
            norm_drift_tol: default_norm_tol(),
            boundary_mass_cap: default_boundary_cap(),
            sample_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Validation(format!("time step must be positive, got {}", self.dt)));
        }
        if !self.t_end.is_finite() || !(self.norm_drift_tol > 0.0) || !(self.boundary_mass_cap > 0.0) {
            return Err(Error::Validation("integrator tolerances must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Supplies the Hamiltonian terms at any time.
pub trait HamiltonianSource {
    fn grid(&self) -> &GridSpec;
    fn units(&self) -> Units;
    fn terms_at(&self, t: f64) -> Result<Vec<HamiltonianTerm>>;
}

/// Kinetic, inertial, gravity and (gauge B) spin terms seen from a frame.
#[derive(Debug, Clone)]
pub struct FrameHamiltonian {
    pub frame: FrameSpec,
    /// `R̄(t)` of gauge B; `None` is gauge A.
    pub spin_frame: Option<RotationFamily>,
    pub potential: Potential,
    pub units: Units,
    pub grid: GridSpec,
}

impl FrameHamiltonian {
    pub fn new(frame: FrameSpec, potential: Potential, units: Units, grid: GridSpec) -> Self {
        Self {
            frame,
            spin_frame: None,
            potential,
            units,
            grid,
        }
    }

    pub fn free(units: Units, grid: GridSpec) -> Self {
        Self::new(FrameSpec::inertial(), Potential::Zero, units, grid)
    }

    pub fn with_spin_frame(mut self, rbar: RotationFamily) -> Self {
        self.spin_frame = Some(rbar);
        self
    }
}

impl HamiltonianSource for FrameHamiltonian {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn units(&self) -> Units {
        self.units
    }

    fn terms_at(&self, t: f64) -> Result<Vec<HamiltonianTerm>> {
        let state = self.frame.eval(t)?;
        let mut terms = vec![HamiltonianTerm::kinetic(self.units, self.grid)];
        terms.extend(build_h_inert(&state, self.units, &self.grid)?.into_iter().filter(|t| !t.is_zero()));
        if self.potential != Potential::Zero {
            terms.push(build_h_gravity(&self.potential, self.units, &self.frame, t, &self.grid)?);
        }
        if let Some(rbar) = &self.spin_frame {
            let spin = build_h_spin(&rbar.eval(t), self.units, &self.grid);
            if !spin.is_zero() {
                terms.push(spin);
            }
        }
        Ok(terms)
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub psi: GridWavefunction,
    pub steps: usize,
    pub norm_drift: f64,
    pub boundary_mass_max: f64,
    pub samples: Vec<Observables>,
}

struct Split {
    potential: Option<Vec<f64>>,
    kinetic: Option<(f64, f64)>,
    rotation: Mat3,
    spin: Option<Mat2c>,
}

fn split_terms(terms: &[HamiltonianTerm]) -> Split {
    let mut s = Split {
        potential: None,
        kinetic: None,
        rotation: Mat3::zeros(),
        spin: None,
    };
    for term in terms {
        match &term.op {
            TermOp::Kinetic { m, hbar } => s.kinetic = Some((*m, *hbar)),
            TermOp::Multiply(v) => match &mut s.potential {
                Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a += b),
                None => s.potential = Some(v.clone()),
            },
            TermOp::Rotational { w, .. } => s.rotation += w,
            TermOp::Spin(m) => s.spin = Some(s.spin.unwrap_or_else(Mat2c::zeros) + m),
        }
    }
    s
}

fn rotation_rate(terms: &[HamiltonianTerm]) -> f64 {
    let w = terms.iter().fold(Mat3::zeros(), |acc, t| match &t.op {
        TermOp::Rotational { w, .. } => acc + w,
        _ => acc,
    });
    so3_vee(&w).norm()
}

/// `exp(−i H dt/ħ)` for Hermitian 2×2 `H`.
pub fn spin_propagator(h: &Mat2c, dt: f64, hbar: f64) -> Mat2c {
    let h0 = 0.5 * (h[(0, 0)] + h[(1, 1)]).re;
    let hx = h[(0, 1)].re;
    let hy = -h[(0, 1)].im;
    let hz = 0.5 * (h[(0, 0)] - h[(1, 1)]).re;
    let mag = (hx * hx + hy * hy + hz * hz).sqrt();
    let theta = mag * dt / hbar;
    let global = Complex64::from_polar(1.0, -h0 * dt / hbar);
    let (cs, sn) = (theta.cos(), theta.sin());
    let k = if mag > 0.0 { sn / mag } else { 0.0 };
    let i = Complex64::new(0.0, 1.0);
    let m = Mat2c::new(
        Complex64::new(cs, 0.0) - i * k * hz,
        -i * k * Complex64::new(hx, -hy),
        -i * k * Complex64::new(hx, hy),
        Complex64::new(cs, 0.0) + i * k * hz,
    );
    m * global
}

fn multiply_phase(psi: &mut GridWavefunction, v: &[f64], factor: f64) {
    for comp in psi.comps.iter_mut() {
        comp.iter_mut().zip(v).for_each(|(a, b)| *a *= Complex64::from_polar(1.0, factor * b));
    }
}

fn strang_step(psi: &mut GridWavefunction, terms: &[HamiltonianTerm], dt: f64, hbar: f64) -> Result<()> {
    let s = split_terms(terms);
    if let Some(v) = &s.potential {
        multiply_phase(psi, v, -0.5 * dt / hbar);
    }
    let q = so3_exp(&(so3_vee(&s.rotation) * dt));
    let rotate = s.rotation.iter().any(|w| *w != 0.0);
    for comp in psi.comps.iter_mut() {
        if let Some((m, hb)) = s.kinetic {
            spectral::kinetic_flow(comp, &psi.grid, hb * dt / (2.0 * m));
        }
        if rotate {
            spectral::rotate(comp, &psi.grid, &q)?;
        }
    }
    if let Some(h) = &s.spin {
        let u = spin_propagator(h, dt, hbar);
        let (a, b) = (psi.comps[0].clone(), psi.comps[1].clone());
        for i in 0..a.len() {
            psi.comps[0][i] = u[(0, 0)] * a[i] + u[(0, 1)] * b[i];
            psi.comps[1][i] = u[(1, 0)] * a[i] + u[(1, 1)] * b[i];
        }
    }
    if let Some(v) = &s.potential {
        multiply_phase(psi, v, -0.5 * dt / hbar);
    }
    Ok(())
}

fn rhs(terms: &[HamiltonianTerm], psi: &GridWavefunction, hbar: f64) -> Result<GridWavefunction> {
    let mut out = crate::hamiltonians::apply_sum(terms, psi)?;
    let f = Complex64::new(0.0, -1.0 / hbar);
    out.comps.iter_mut().flatten().for_each(|v| *v *= f);
    Ok(out)
}

fn axpy(base: &GridWavefunction, k: &GridWavefunction, h: f64) -> GridWavefunction {
    let mut out = base.clone();
    for (o, kk) in out.comps.iter_mut().zip(&k.comps) {
        o.iter_mut().zip(kk).for_each(|(a, b)| *a += b * h);
    }
    out
}

fn rk4_step(psi: &mut GridWavefunction, src: &dyn HamiltonianSource, t: f64, dt: f64, hbar: f64) -> Result<()> {
    let mid = src.terms_at(t + 0.5 * dt)?;
    let k1 = rhs(&src.terms_at(t)?, psi, hbar)?;
    let k2 = rhs(&mid, &axpy(psi, &k1, 0.5 * dt), hbar)?;
    let k3 = rhs(&mid, &axpy(psi, &k2, 0.5 * dt), hbar)?;
    let k4 = rhs(&src.terms_at(t + dt)?, &axpy(psi, &k3, dt), hbar)?;
    for c in 0..psi.comps.len() {
        for i in 0..psi.comps[c].len() {
            psi.comps[c][i] += (k1.comps[c][i] + (k2.comps[c][i] + k3.comps[c][i]) * 2.0 + k4.comps[c][i]) * (dt / 6.0);
        }
    }
    Ok(())
}

/// Evolves `psi` from `psi.t` to `integ.t_end`.
pub fn evolve(psi: &GridWavefunction, src: &dyn HamiltonianSource, integ: &IntegratorSpec) -> Result<Evolution> {
    integ.validate()?;
    if psi.grid != *src.grid() {
        return Err(Error::Validation("wavefunction and Hamiltonian live on different grids".into()));
    }
    let units = src.units();
    let hbar = units.hbar;
    let t0 = psi.t;
    let span = integ.t_end - t0;
    if span < 0.0 {
        return Err(Error::Validation(format!("t_end {} precedes the state time {t0}", integ.t_end)));
    }
    let steps = if span == 0.0 { 0 } else { (span / integ.dt - 1e-9).ceil().max(1.0) as usize };
    let dt = if steps > 0 { span / steps as f64 } else { 0.0 };
    if integ.method == Method::Rk4Spectral {
        let g = src.grid();
        let k2: f64 = (0..g.dim).map(|a| (std::f64::consts::PI / g.dx(a)).powi(2)).sum();
        let phase = dt * hbar * k2 / (2.0 * units.m);
        if phase > MAX_RK4_KINETIC_PHASE {
            return Err(Error::Validation(format!(
                "dt ħk²/2m = {phase:.3e} at the grid cutoff exceeds the RK4 stability bound {MAX_RK4_KINETIC_PHASE}"
            )));
        }
    }
    let mut cur = psi.clone();
    let norm0 = cur.norm_sq();
    let mut drift = 0.0_f64;
    let mut bmax = cur.boundary_mass(BOUNDARY_CELLS);
    let mut samples = vec![observables(&cur, units)];
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        let mid = src.terms_at(t + 0.5 * dt)?;
        if mid.iter().any(|term| matches!(term.op, TermOp::Spin(_))) && !cur.is_spinor() {
            return Err(Error::Validation("spin term requires a two-component state".into()));
        }
        let rate = rotation_rate(&mid);
        if dt * rate > MAX_ROTATION_PER_STEP * (1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "dt |Ω| = {:.3e} exceeds the stability bound {MAX_ROTATION_PER_STEP}",
                dt * rate
            )));
        }
        match integ.method {
            Method::StrangSplit => strang_step(&mut cur, &mid, dt, hbar)?,
            Method::Rk4Spectral => rk4_step(&mut cur, src, t, dt, hbar)?,
        }
        cur.t = if n + 1 == steps { integ.t_end } else { t0 + (n + 1) as f64 * dt };
        let norm = cur.norm_sq();
        if !norm.is_finite() {
            return Err(Error::Integration {
                t: cur.t,
                message: "state became non-finite".into(),
            });
        }
        drift = drift.max((norm - norm0).abs());
        if drift > integ.norm_drift_tol * (cur.t - t0).max(1.0) {
            return Err(Error::Integration {
                t: cur.t,
                message: format!("norm drift {drift:.3e} exceeds {:.1e} per unit time", integ.norm_drift_tol),
            });
        }
        let b = cur.boundary_mass(BOUNDARY_CELLS);
        bmax = bmax.max(b);
        if b > integ.boundary_mass_cap {
            return Err(Error::Escape {
                t: cur.t,
                mass: b,
                cap: integ.boundary_mass_cap,
            });
        }
        if integ.sample_every > 0 && (n + 1) % integ.sample_every == 0 && n + 1 != steps {
            samples.push(observables(&cur, units));
        }
    }
    if steps > 0 {
        samples.push(observables(&cur, units));
    }
    Ok(Evolution {
        psi: cur,
        steps,
        norm_drift: drift,
        boundary_mass_max: bmax,
        samples,
    })
}

/// Closed-form solutions for Gaussian packets.
pub mod analytic {
    use super::*;

    /// Free spreading Gaussian at time `t` for the initial packet `g` at `t = 0`.
    pub fn free_gaussian(grid: &GridSpec, g: &GaussianSpec, units: Units, t: f64, tag: &str) -> GridWavefunction {
        linear_potential_gaussian(grid, g, units, &Vec3::zeros(), t, tag)
    }

    /// Solution for `V = F⃗·x⃗`:
    /// `ψ = exp(−i t F⃗·x⃗/ħ − i |F|² t³/(6mħ)) ψ_free(x⃗ + F⃗t²/2m, t)`.
    pub fn linear_potential_gaussian(
        grid: &GridSpec,
        g: &GaussianSpec,
        units: Units,
        force: &Vec3,
        t: f64,
        tag: &str,
    ) -> GridWavefunction {
        let Units { m, hbar } = units;
        let sigma = g.width;
        let tau = hbar * t / (2.0 * m * sigma * sigma);
        let one_it = Complex64::new(1.0, tau);
        let norm_axis = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) / one_it.sqrt();
        let values = grid
            .positions()
            .map(|x| {
                let y = x + force * (t * t / (2.0 * m));
                let mut v = Complex64::new(
                    0.0,
                    -t * force.dot(&x) / hbar - force.norm_squared() * t.powi(3) / (6.0 * m * hbar),
                )
                .exp();
                for a in 0..grid.dim {
                    let k = g.momentum[a] / hbar;
                    let vel = hbar * k / m;
                    let d = y[a] - g.center[a];
                    let arg = -Complex64::new((d - vel * t).powi(2), 0.0) / (4.0 * sigma * sigma * one_it)
                        + Complex64::new(0.0, k * d - hbar * k * k * t / (2.0 * m));
                    v *= norm_axis * arg.exp();
                }
                v
            })
            .collect();
        GridWavefunction {
            grid: *grid,
            comps: vec![values],
            t,
            frame_tag: tag.to_string(),
        }
    }
}

/// Distances between two states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub l2_distance: f64,
    pub overlap_modulus: f64,
    pub phase_residual: f64,
    pub norm_drift: f64,
    pub boundary_mass_max: f64,
    /// Additional named measurements, printed after the fixed keys.
    pub extra: Vec<(String, f64)>,
}

impl ResidualReport {
    /// Compares `b` against `a`; `phase_residual` is `|arg⟨a|b⟩|`.
    pub fn compare(a: &GridWavefunction, b: &GridWavefunction, norm_drift: f64, boundary_mass_max: f64) -> Self {
        let ov = a.inner(b);
        Self {
            l2_distance: a.l2_distance(b),
            overlap_modulus: ov.norm() / (a.norm_sq() * b.norm_sq()).sqrt(),
            phase_residual: ov.arg().abs(),
            norm_drift,
            boundary_mass_max,
            extra: Vec::new(),
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        match key {
            "l2_distance" => Some(self.l2_distance),
            "overlap_modulus" => Some(self.overlap_modulus),
            "phase_residual" => Some(self.phase_residual),
            "norm_drift" => Some(self.norm_drift),
            "boundary_mass_max" => Some(self.boundary_mass_max),
            _ => self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| *v),
        }
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "l2_distance = {:.6e}", self.l2_distance)?;
        writeln!(f, "overlap_modulus = {:.15}", self.overlap_modulus)?;
        writeln!(f, "phase_residual = {:.6e}", self.phase_residual)?;
        writeln!(f, "norm_drift = {:.6e}", self.norm_drift)?;
        writeln!(f, "boundary_mass_max = {:.6e}", self.boundary_mass_max)?;
        for (k, v) in &self.extra {
            writeln!(f, "{k} = {v:.9e}")?;
        }
        Ok(())
    }
}

/// Inputs of a frame-covariance check.
#[derive(Debug, Clone)]
pub struct CovarianceSetup {
    pub frame: FrameSpec,
    /// `Φ(x⃗)` in the inertial system.
    pub potential: Potential,
    /// Inertial state at the start time.
    pub psi0: GridWavefunction,
    pub units: Units,
    pub integ: IntegratorSpec,
}

/// Evolve-then-transform versus transform-then-evolve.
pub fn covariance_residual(setup: &CovarianceSetup) -> Result<ResidualReport> {
    let grid = setup.psi0.grid;
    let inertial = FrameHamiltonian::new(FrameSpec::inertial(), setup.potential.clone(), setup.units, grid);
    let moving = FrameHamiltonian::new(setup.frame.clone(), setup.potential.clone(), setup.units, grid);
    let lab = evolve(&setup.psi0, &inertial, &setup.integ)?;
    let path_a = pushforward(&setup.frame, &lab.psi, setup.units, "frame")?.psi;
    let start = pushforward(&setup.frame, &setup.psi0, setup.units, "frame")?.psi;
    let framed = evolve(&start, &moving, &setup.integ)?;
    Ok(ResidualReport::compare(
        &path_a,
        &framed.psi,
        lab.norm_drift.max(framed.norm_drift),
        lab.boundary_mass_max.max(framed.boundary_mass_max),
    ))
}

/// Inputs of an equivalence-principle check; scalar Gaussian initial state.
#[derive(Debug, Clone)]
pub struct EquivalenceSetup {
    pub grid: GridSpec,
    pub initial: GaussianSpec,
    pub units: Units,
    pub integ: IntegratorSpec,
}

pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    a - two_pi * (a / two_pi).round()
}

/// Uniform gravity `g⃗` seen from the frame accelerating with `a⃗`.
///
/// The frame evolution is compared with free evolution (overlap and global phase
/// against the remainder phase) and with the analytic solution for the residual force
/// `m(g⃗ − a⃗)` (L2 distance). The phases are reported under `expected_phase` and
/// `measured_phase`.
pub fn equivalence_residual(g: &Vec3, a: &Vec3, base: &EquivalenceSetup) -> Result<ResidualReport> {
    let frame = FrameSpec::uniform_acceleration(*a);
    let psi0 = GridWavefunction::gaussian(base.grid, &base.initial, None, base.units, "frame")?;
    let framed = evolve(
        &psi0,
        &FrameHamiltonian::new(frame.clone(), Potential::Uniform { g: *g }, base.units, base.grid),
        &base.integ,
    )?;
    let free = evolve(&psi0, &FrameHamiltonian::free(base.units, base.grid), &base.integ)?;
    let t = base.integ.t_end;
    let expected = remainder_phase(&frame, g, base.units, t)?;
    let mut oracle = analytic::linear_potential_gaussian(&base.grid, &base.initial, base.units, &((g - a) * base.units.m), t, "frame");
    let rot = Complex64::from_polar(1.0, expected);
    oracle.comps[0].iter_mut().for_each(|v| *v *= rot);

    let ov = free.psi.inner(&framed.psi);
    let measured = ov.arg();
    Ok(ResidualReport {
        l2_distance: oracle.l2_distance(&framed.psi),
        overlap_modulus: ov.norm() / (free.psi.norm_sq() * framed.psi.norm_sq()).sqrt(),
        phase_residual: wrap_angle(measured - expected).abs(),
        norm_drift: framed.norm_drift.max(free.norm_drift),
        boundary_mass_max: framed.boundary_mass_max.max(free.boundary_mass_max),
        extra: vec![("expected_phase".into(), expected), ("measured_phase".into(), measured)],
    })
}

#[derive(Debug, Clone)]
pub struct SpinPrecession {
    /// Precession rate about `axis`, positive when `⟨S⃗⟩` turns with the frame rotation.
    pub frequency: f64,
    pub times: Vec<f64>,
    pub spin: Vec<[f64; 3]>,
}

/// Evolves a spinor in gauge B with `R̄(t)` turning about `axis` at `omega_prime` and fits
/// the precession rate of `⟨S⃗⟩`.
pub fn spin_precession(omega_prime: f64, axis: &Vec3, t_end: f64, dt: f64) -> Result<SpinPrecession> {
    let n = axis.norm();
    if !(n > 0.0) {
        return Err(Error::Validation("spin precession needs a nonzero axis".into()));
    }
    let axis = axis / n;
    let e1 = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (e1 - axis * axis.dot(&e1)).normalize();
    let e2 = axis.cross(&e1);
    let (theta, phi) = (e1.z.clamp(-1.0, 1.0).acos(), e1.y.atan2(e1.x));
    let spin = [
        Complex64::new((0.5 * theta).cos(), 0.0),
        Complex64::from_polar((0.5 * theta).sin(), phi),
    ];
    let grid = GridSpec::cubic(1, 128, 64.0)?;
    let units = Units::default();
    let g = GaussianSpec {
        center: [0.0; 3],
        width: 4.0,
        momentum: [0.0; 3],
    };
    let psi0 = GridWavefunction::gaussian(grid, &g, Some(spin), units, "spin")?;
    let src = FrameHamiltonian::free(units, grid).with_spin_frame(RotationFamily::about_axis(axis, omega_prime)?);
    let mut integ = IntegratorSpec::new(Method::StrangSplit, dt, t_end);
    integ.sample_every = 1;
    let ev = evolve(&psi0, &src, &integ)?;
    let mut times = Vec::new();
    let mut spins = Vec::new();
    let mut angles: Vec<f64> = Vec::new();
    for o in &ev.samples {
        let s = Vec3::from(o.s.expect("spinor state"));
        let (px, py) = (s.dot(&e1), s.dot(&e2));
        if (px * px + py * py).sqrt() < 1e-8 {
            return Err(Error::numeric("spin has no component transverse to the axis", (px * px + py * py).sqrt()));
        }
        let a = py.atan2(px);
        let a = match angles.last() {
            Some(prev) => prev + wrap_angle(a - prev),
            None => a,
        };
        angles.push(a);
        times.push(o.t);
        spins.push([s.x, s.y, s.z]);
    }
    if times.len() < 3 {
        return Err(Error::numeric("too few samples to fit a precession rate", times.len() as f64));
    }
    let nf = times.len() as f64;
    let tm = times.iter().sum::<f64>() / nf;
    let am = angles.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, a) in times.iter().zip(&angles) {
        sxy += (t - tm) * (a - am);
        sxx += (t - tm) * (t - tm);
    }
    // H = −Ω⃗'·S⃗ gives dS⃗/dt = −Ω⃗' × S⃗
    Ok(SpinPrecession {
        frequency: -sxy / sxx,
        times,
        spin: spins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_band_limited;

    fn packet(width: f64, x0: f64, p0: f64) -> GaussianSpec {
        GaussianSpec {
            center: [x0, 0.0, 0.0],
            width,
            momentum: [p0, 0.0, 0.0],
        }
    }

    #[test]
    fn zero_duration_is_identity() {
        let g = GridSpec::cubic(1, 64, 16.0).unwrap();
        let psi = random_band_limited(&g, 1, 0.3, 1);
        let ev = evolve(&psi, &FrameHamiltonian::free(Units::default(), g), &IntegratorSpec::new(Method::StrangSplit, 0.1, 0.0)).unwrap();
        assert_eq!(ev.psi, psi);
        assert_eq!(ev.steps, 0);
    }

    #[test]
    fn rk4_rejects_steps_beyond_its_stability_bound() {
        let g = GridSpec::cubic(2, 128, 32.0).unwrap();
        let psi = GridWavefunction::gaussian(g, &packet(2.0, 0.0, 0.0), None, Units::default(), "x").unwrap();
        let h = FrameHamiltonian::free(Units::default(), g);
        let err = evolve(&psi, &h, &IntegratorSpec::new(Method::Rk4Spectral, 0.02, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(evolve(&psi, &h, &IntegratorSpec::new(Method::StrangSplit, 0.02, 1.0)).is_ok());
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        let g = GridSpec::cubic(1, 512, 64.0).unwrap();
        let units = Units::default();
        let p = packet(1.0, -1.0, 0.8);
        let psi = GridWavefunction::gaussian(g, &p, None, units, "lab").unwrap();
        for method in [Method::StrangSplit, Method::Rk4Spectral] {
            let dt = if method == Method::Rk4Spectral { 1e-3 } else { 0.1 };
            let ev = evolve(&psi, &FrameHamiltonian::free(units, g), &IntegratorSpec::new(method, dt, 1.0)).unwrap();
            let exact = analytic::free_gaussian(&g, &p, units, 1.0, "lab");
            let d = exact.l2_distance(&ev.psi);
            assert!(d <= 1e-6, "{method:?}: {d}");
        }
    }

    #[test]
    fn linear_potential_matches_closed_form_and_is_second_order() {
        let g = GridSpec::cubic(1, 512, 64.0).unwrap();
        let units = Units::default();
        let p = packet(1.0, 0.0, 0.0);
        let gv = Vec3::new(0.3, 0.0, 0.0);
        let psi = GridWavefunction::gaussian(g, &p, None, units, "lab").unwrap();
        let src = FrameHamiltonian::new(FrameSpec::inertial(), Potential::Uniform { g: gv }, units, g);
        let exact = analytic::linear_potential_gaussian(&g, &p, units, &(gv * units.m), 1.0, "lab");
        let err = |dt: f64| {
            let ev = evolve(&psi, &src, &IntegratorSpec::new(Method::StrangSplit, dt, 1.0)).unwrap();
            exact.l2_distance(&ev.psi)
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e2 <= 1e-5, "{e2}");
        assert!(e1 / e2 >= 3.5, "{e1} {e2}");
        let rk = evolve(&psi, &src, &IntegratorSpec::new(Method::Rk4Spectral, 2e-3, 1.0)).unwrap();
        assert!(exact.l2_distance(&rk.psi) <= 1e-6);
    }

    #[test]
    fn splitting_rotation_matches_rk4() {
        let g = GridSpec::cubic(2, 128, 32.0).unwrap();
        let units = Units::default();
        let p = GaussianSpec {
            center: [2.0, 1.0, 0.0],
            width: 2.0,
            momentum: [0.2, -0.1, 0.0],
        };
        let psi = GridWavefunction::gaussian(g, &p, None, units, "rot").unwrap();
        let frame = FrameSpec::new(
            RotationFamily::about_axis(Vec3::z(), 0.5).unwrap(),
            crate::frames::TranslationFamily::Polynomial(vec![Vec3::zeros(), Vec3::zeros(), Vec3::new(0.1, -0.05, 0.0)]),
            1.0,
            (-10.0, 10.0),
        )
        .unwrap();
        let src = FrameHamiltonian::new(frame, Potential::Zero, units, g);
        let a = evolve(&psi, &src, &IntegratorSpec::new(Method::StrangSplit, 0.005, 0.5)).unwrap();
        let b = evolve(&psi, &src, &IntegratorSpec::new(Method::Rk4Spectral, 0.005, 0.5)).unwrap();
        let d = a.psi.l2_distance(&b.psi);
        assert!(d < 1e-5, "{d}");
    }

    #[test]
    fn stability_guard_and_escape() {
        let g = GridSpec::cubic(2, 32, 16.0).unwrap();
        let units = Units::default();
        let psi = GridWavefunction::gaussian(
            g,
            &GaussianSpec {
                center: [0.0; 3],
                width: 4.0,
                momentum: [0.0; 3],
            },
            None,
            units,
            "x",
        )
        .unwrap();
        let src = FrameHamiltonian::new(FrameSpec::rotating(Vec3::z(), 2.0).unwrap(), Potential::Zero, units, g);
        let r = evolve(&psi, &src, &IntegratorSpec::new(Method::StrangSplit, 0.1, 0.5));
        assert!(matches!(r, Err(Error::Validation(_))));
        let mut integ = IntegratorSpec::new(Method::StrangSplit, 0.05, 2.0);
        integ.boundary_mass_cap = 1e-12;
        let r = evolve(&psi, &FrameHamiltonian::free(units, g), &integ);
        assert!(matches!(r, Err(Error::Escape { .. })));
    }

    #[test]
    fn norm_drift_gate() {
        let g = GridSpec::cubic(1, 64, 32.0).unwrap();
        let psi = GridWavefunction::gaussian(g, &packet(4.0, 0.0, 0.0), None, Units::default(), "x").unwrap();
        let mut integ = IntegratorSpec::new(Method::Rk4Spectral, 0.1, 2.0);
        integ.norm_drift_tol = 1e-15;
        let r = evolve(&psi, &FrameHamiltonian::free(Units::default(), g), &integ);
        assert!(matches!(r, Err(Error::Integration { .. })));
    }

    #[test]
    fn spin_propagator_matches_series() {
        let h = Mat2c::new(
            Complex64::new(0.3, 0.0),
            Complex64::new(0.2, -0.5),
            Complex64::new(0.2, 0.5),
            Complex64::new(-0.7, 0.0),
        );
        let dt = 0.37;
        let mut term = Mat2c::identity();
        let mut sum = Mat2c::identity();
        for k in 1..40 {
            term = term * h * Complex64::new(0.0, -dt / k as f64);
            sum += term;
        }
        let u = spin_propagator(&h, dt, 1.0);
        assert!((u - sum).iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn equivalence_cancels_gravity_up_to_cubic_phase() {
        let base = EquivalenceSetup {
            grid: GridSpec::cubic(1, 512, 64.0).unwrap(),
            initial: packet(1.0, 0.0, 0.0),
            units: Units::default(),
            integ: IntegratorSpec::new(Method::StrangSplit, 0.01, 1.0),
        };
        let gv = Vec3::new(0.5, 0.0, 0.0);
        let r = equivalence_residual(&gv, &gv, &base).unwrap();
        assert!(r.overlap_modulus >= 1.0 - 1e-6, "{r}");
        assert!(r.phase_residual <= 1e-3, "{r}");
        assert!((r.get("expected_phase").unwrap() - 0.25 / 6.0).abs() < 1e-12);
        let r = equivalence_residual(&gv, &Vec3::zeros(), &base).unwrap();
        assert!(r.l2_distance <= 1e-4, "{r}");
        let r = equivalence_residual(&Vec3::zeros(), &Vec3::zeros(), &base).unwrap();
        assert_eq!(r.overlap_modulus, 1.0);
    }

    #[test]
    fn spin_precesses_at_frame_rate() {
        let s = spin_precession(1.0, &Vec3::z(), 6.0, 0.05).unwrap();
        assert!((s.frequency - 1.0).abs() <= 1e-4, "{}", s.frequency);
        let s = spin_precession(0.3, &Vec3::x(), 6.0, 0.05).unwrap();
        assert!((s.frequency - 0.3).abs() <= 0.3e-4, "{}", s.frequency);
        let s = spin_precession(0.0, &Vec3::z(), 1.0, 0.05).unwrap();
        assert!(s.frequency.abs() < 1e-12);
        assert!(s.spin.windows(2).all(|w| (0..3).all(|k| (w[0][k] - w[1][k]).abs() < 1e-14)));
    }

    #[test]
    fn report_text_is_key_value() {
        let g = GridSpec::cubic(1, 32, 8.0).unwrap();
        let psi = random_band_limited(&g, 1, 0.3, 2);
        let r = ResidualReport::compare(&psi, &psi, 0.0, 0.0);
        let text = r.to_string();
        assert!(text.lines().all(|l| l.contains(" = ")));
        assert_eq!(r.l2_distance, 0.0);
        assert!((r.overlap_modulus - 1.0).abs() < 1e-14);
    }
}
