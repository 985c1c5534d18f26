//! Invariant suites: each check reports the measured value next to its bound.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    covariance_residual, equivalence_residual, evolve, spin_precession, CovarianceSetup, EquivalenceSetup,
    FrameHamiltonian, IntegratorSpec, Method,
};
use crate::error::{Error, Result};
use crate::fields::{observables, random_band_limited, GaussianSpec, GridWavefunction, Units};
use crate::frames::{angular_velocity, FrameSpec, RotationFamily, TranslationFamily};
use crate::geometry::{
    connection, eta, funfbein, gamma_set_at, gauge_b_time_component, max_abs4, metric_up, riemann_flatness,
    ConnectionStencil, Gauge, Mat4c, T,
};
use crate::grid::GridSpec;
use crate::hamiltonians::{
    apply_sum, build_h_inert, build_h_spin, levy_leblond_split, HamiltonianTerm, Potential,
};
use crate::numeric::{levi_civita, CubicSpline3, Vec3};
use crate::oracle::{jacobian_oracle, JACOBIAN_STEP};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Geometry,
    Gauges,
    Covariance,
    Equivalence,
    Spin,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Geometry, Suite::Gauges, Suite::Covariance, Suite::Equivalence, Suite::Spin];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Gauges => "gauges",
            Suite::Covariance => "covariance",
            Suite::Equivalence => "equivalence",
            Suite::Spin => "spin",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown suite '{s}' (expected geometry, gauges, covariance, equivalence or spin)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: Bound::AtMost(limit),
            passed: value <= limit,
            note: None,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: Bound::AtLeast(limit),
            passed: value >= limit,
            note: None,
        }
    }

    fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, lim) = match self.bound {
            Bound::AtMost(l) => ("<=", l),
            Bound::AtLeast(l) => (">=", l),
        };
        write!(
            f,
            "{} {} = {:.6e} ({op} {lim:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value
        )?;
        if let Some(n) = &self.note {
            write!(f, " [{n}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Run the grid refinement steps of the covariance suite.
    pub refine: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 2024,
            refine: true,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Geometry => geometry_checks(opts)?,
        Suite::Gauges => gauge_checks(opts)?,
        Suite::Covariance => covariance_checks(opts)?,
        Suite::Equivalence => equivalence_checks()?,
        Suite::Spin => spin_checks()?,
    };
    Ok(SuiteReport { suite, checks })
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

/// A randomized frame and event: fixed-axis rotation with `|ω| ≤ 5`, cubic translation.
#[derive(Debug, Clone)]
pub struct RandomSample {
    pub frame: FrameSpec,
    pub rbar: RotationFamily,
    pub t: f64,
    pub xp: Vec3,
}

pub fn random_sample(rng: &mut ChaCha8Rng) -> Result<RandomSample> {
    let degree = rng.random_range(0..=3usize);
    let coeffs = (0..=degree).map(|_| random_vec(rng, 1.0)).collect();
    let frame = FrameSpec::new(
        RotationFamily::about_axis(unit_vector(rng), rng.random_range(-5.0..5.0))?,
        TranslationFamily::Polynomial(coeffs),
        rng.random_range(0.5..2.0),
        (-10.0, 10.0),
    )?;
    let rbar = RotationFamily::about_axis(unit_vector(rng), rng.random_range(-5.0..5.0))?;
    Ok(RandomSample {
        frame,
        rbar,
        t: rng.random_range(-1.0..1.0),
        xp: random_vec(rng, 1.0),
    })
}

pub fn random_samples(n: usize, seed: u64) -> Result<Vec<RandomSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_sample(&mut rng)).collect()
}

fn geometry_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let (mut e_h, mut e_g, mut e_c, mut id_a, mut id_b, mut riem) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for s in random_samples(opts.samples, opts.seed)? {
        let u = s.frame.u;
        let st = s.frame.eval(s.t)?;
        let o = jacobian_oracle(&s.frame, s.t, &s.xp, JACOBIAN_STEP)?;
        let fa = funfbein(&st, &Gauge::A, &s.xp, u)?;
        let m = metric_up(&st, &s.xp, u)?;
        let c5 = connection(&st, &s.xp, u);
        e_h = e_h.max((o.funfbein - fa.h).amax());
        e_g = e_g.max((o.metric_up - m.up).amax());
        for l in 0..5 {
            for a in 0..5 {
                for b in 0..5 {
                    e_c = e_c.max((o.connection[l][a][b] - c5.gamma[l][a][b]).abs());
                }
            }
        }
        let fb = funfbein(&st, &Gauge::B(s.rbar.eval(s.t)), &s.xp, u)?;
        id_a = id_a.max((fa.h * eta() * fa.h.transpose() - m.up).amax());
        id_b = id_b.max((fb.h * eta() * fb.h.transpose() - m.up).amax());
        riem = riem.max(riemann_flatness(&ConnectionStencil::sample(&s.frame, s.t, &s.xp, 1e-3)?));
    }
    Ok(vec![
        Check::at_most("funfbein_vs_oracle", e_h, 1e-6),
        Check::at_most("metric_vs_oracle", e_g, 1e-6),
        Check::at_most("connection_vs_oracle", e_c, 1e-6),
        Check::at_most("funfbein_identity_gauge_a", id_a, 1e-12),
        Check::at_most("funfbein_identity_gauge_b", id_b, 1e-12),
        Check::at_most("riemann_max", riem, 1e-6),
    ])
}

/// Spin-connection structure in both gauges over the random sample set.
pub struct GaugeStructure {
    pub gauge_a_max: f64,
    pub gauge_b_time_vs_closed_form: f64,
    pub gauge_b_other_components: f64,
    pub gauge_b_off_diagonal_blocks: f64,
    pub gauge_b_rate_linearity: f64,
}

fn off_diagonal_blocks(m: &Mat4c) -> f64 {
    let mut v = 0.0_f64;
    for r in 0..4 {
        for c in 0..4 {
            if (r < 2) != (c < 2) {
                v = v.max(m[(r, c)].norm());
            }
        }
    }
    v
}

pub fn gauge_structure(samples: &[RandomSample]) -> Result<GaugeStructure> {
    let mut out = GaugeStructure {
        gauge_a_max: 0.0,
        gauge_b_time_vs_closed_form: 0.0,
        gauge_b_other_components: 0.0,
        gauge_b_off_diagonal_blocks: 0.0,
        gauge_b_rate_linearity: 0.0,
    };
    for s in samples {
        let u = s.frame.u;
        let st = s.frame.eval(s.t)?;
        let ga = gamma_set_at(&st, &Gauge::A, &s.xp, u)?;
        out.gauge_a_max = ga.spin_conn.iter().map(max_abs4).fold(out.gauge_a_max, f64::max);
        let rb = s.rbar.eval(s.t);
        let gb = gamma_set_at(&st, &Gauge::B(rb), &s.xp, u)?;
        out.gauge_b_time_vs_closed_form = out
            .gauge_b_time_vs_closed_form
            .max(max_abs4(&(gb.spin_conn[T] - gauge_b_time_component(&rb, u))));
        for mu in (0..5).filter(|&mu| mu != T) {
            out.gauge_b_other_components = out.gauge_b_other_components.max(max_abs4(&gb.spin_conn[mu]));
        }
        out.gauge_b_off_diagonal_blocks = out.gauge_b_off_diagonal_blocks.max(off_diagonal_blocks(&gb.spin_conn[T]));
        let RotationFamily::ConstantRate { axis, rate } = s.rbar else {
            return Err(Error::Validation("random R̄ families have a constant rate".into()));
        };
        let doubled = RotationFamily::about_axis(axis, 2.0 * rate)?.eval(s.t);
        let g2 = gamma_set_at(&st, &Gauge::B(doubled), &s.xp, u)?;
        out.gauge_b_rate_linearity = out
            .gauge_b_rate_linearity
            .max(max_abs4(&(g2.spin_conn[T] - gb.spin_conn[T] * Complex64::new(2.0, 0.0))));
    }
    Ok(out)
}

fn max_diff(a: &GridWavefunction, b: &GridWavefunction) -> f64 {
    a.comps
        .iter()
        .flatten()
        .zip(b.comps.iter().flatten())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

/// Largest pointwise deviations of the inertial and spin terms from
/// `−m a⃗·x⃗'`, `−Ω⃗·L⃗'` and `−Ω⃗'·S⃗` on random band-limited states.
pub struct OperatorIdentities {
    pub linear: f64,
    pub rotational: f64,
    pub spin: f64,
}

pub fn operator_identities(seed: u64) -> Result<OperatorIdentities> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let units = Units { m: 1.3, hbar: 0.8 };
    let g3 = GridSpec::cubic(3, 16, 8.0)?;
    let i = Complex64::new(0.0, 1.0);
    let mut out = OperatorIdentities {
        linear: 0.0,
        rotational: 0.0,
        spin: 0.0,
    };
    for k in 0..4 {
        let psi = random_band_limited(&g3, 1, 0.5, seed + k);

        let a = random_vec(&mut rng, 2.0);
        let st = FrameSpec::uniform_acceleration(a).eval(rng.random_range(-1.0..1.0))?;
        let [lin, _] = build_h_inert(&st, units, &g3)?;
        let got = lin.apply(&psi)?;
        for (n, x) in g3.positions().enumerate() {
            let expected = psi.comps[0][n] * (-units.m * a.dot(&x));
            out.linear = out.linear.max((got.comps[0][n] - expected).norm());
        }

        let frame = FrameSpec::rotating(unit_vector(&mut rng), rng.random_range(-3.0..3.0))?;
        let st = frame.eval(rng.random_range(-1.0..1.0))?;
        let omega = angular_velocity(&st.rotation_state())?;
        let [_, rot] = build_h_inert(&st, units, &g3)?;
        let got = rot.apply(&psi)?;
        let grads: Vec<Vec<Complex64>> = (0..3).map(|ax| spectral::derivative(&psi.comps[0], &g3, ax)).collect();
        for (n, x) in g3.positions().enumerate() {
            // Ω⃗·L⃗ = −iħ Ω_k ε_{kij} x_i ∂_j
            let mut ol = Complex64::new(0.0, 0.0);
            for kk in 0..3 {
                for ii in 0..3 {
                    for jj in 0..3 {
                        let e = levi_civita(kk, ii, jj);
                        if e != 0.0 {
                            ol += grads[jj][n] * (omega[kk] * e * x[ii]);
                        }
                    }
                }
            }
            ol *= -i * units.hbar;
            out.rotational = out.rotational.max((got.comps[0][n] + ol).norm());
        }

        let g1 = GridSpec::cubic(1, 32, 8.0)?;
        let chi = random_band_limited(&g1, 2, 0.5, seed + 100 + k);
        let w = random_vec(&mut rng, 3.0);
        let rbar = RotationFamily::about_axis(w, w.norm())?.eval(rng.random_range(-1.0..1.0));
        let got = build_h_spin(&rbar, units, &g1).apply(&chi)?;
        let h = 0.5 * units.hbar;
        for n in 0..g1.len() {
            let (up, dn) = (chi.comps[0][n], chi.comps[1][n]);
            // Ω⃗'·S⃗ with S⃗ = ħσ⃗/2
            let s_up = (up * w.z + dn * Complex64::new(w.x, -w.y)) * h;
            let s_dn = (up * Complex64::new(w.x, w.y) - dn * w.z) * h;
            out.spin = out.spin.max((got.comps[0][n] + s_up).norm()).max((got.comps[1][n] + s_dn).norm());
        }
    }
    Ok(out)
}

/// Lévy-Leblond elimination against kinetic + inertial (+ spin) terms, worst over random
/// in-plane frames and states; returns `(gauge A, gauge B)`.
pub fn reduction_residuals(seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = GridSpec::cubic(2, 32, 12.0)?;
    let (mut ea, mut eb) = (0.0_f64, 0.0_f64);
    for k in 0..4 {
        let planar = |rng: &mut ChaCha8Rng| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
        let coeffs = (0..4).map(|_| planar(&mut rng)).collect();
        let u = rng.random_range(0.5..2.0);
        let frame = FrameSpec::new(
            RotationFamily::about_axis(Vec3::z(), rng.random_range(-2.0..2.0))?,
            TranslationFamily::Polynomial(coeffs),
            u,
            (-10.0, 10.0),
        )?;
        let units = Units {
            m: rng.random_range(0.5..2.0),
            hbar: rng.random_range(0.5..1.5),
        };
        let t = rng.random_range(-1.0..1.0);
        let st = frame.eval(t)?;
        let rbar = RotationFamily::about_axis(unit_vector(&mut rng), rng.random_range(-3.0..3.0))?.eval(t);
        let [lin, rot] = build_h_inert(&st, units, &g)?;
        let base = vec![HamiltonianTerm::kinetic(units, g), lin, rot];
        let mut with_spin = base.clone();
        with_spin.push(build_h_spin(&rbar, units, &g));
        let la = levy_leblond_split(&st, &Gauge::A, u, units, &g)?;
        let lb = levy_leblond_split(&st, &Gauge::B(rbar), u, units, &g)?;
        let psi = random_band_limited(&g, 2, 0.5, seed + k);
        ea = ea.max(max_diff(&la.apply(&psi)?, &apply_sum(&base, &psi)?));
        eb = eb.max(max_diff(&lb.apply(&psi)?, &apply_sum(&with_spin, &psi)?));
    }
    Ok((ea, eb))
}

/// Spinor evolution in a rotating frame in gauge A and gauge B; returns the largest
/// deviation of `⟨x⃗⟩, ⟨p⃗⟩` and of `⟨S⃗⟩` after mapping gauge B back with `R̄(t)ᵀ`.
pub fn gauge_independence() -> Result<(f64, f64)> {
    let units = Units::default();
    let g = GridSpec::cubic(2, 128, 32.0)?;
    let p = GaussianSpec {
        center: [1.0, -0.5, 0.0],
        width: 2.0,
        momentum: [0.3, 0.2, 0.0],
    };
    let spin = [Complex64::new(0.8, 0.0), Complex64::new(0.36, 0.48)];
    let psi = GridWavefunction::gaussian(g, &p, Some(spin), units, "frame")?;
    let frame = FrameSpec::rotating(Vec3::z(), 0.5)?;
    let rbar = RotationFamily::about_axis(Vec3::new(0.3, -0.4, 1.0), 0.7)?;
    let integ = IntegratorSpec::new(Method::StrangSplit, 0.01, 1.0);
    let a = evolve(&psi, &FrameHamiltonian::new(frame.clone(), Potential::Zero, units, g), &integ)?;
    let b = evolve(
        &psi,
        &FrameHamiltonian::new(frame, Potential::Zero, units, g).with_spin_frame(rbar.clone()),
        &integ,
    )?;
    let oa = observables(&a.psi, units);
    let ob = observables(&b.psi, units);
    let mut space = 0.0_f64;
    for k in 0..3 {
        space = space.max((oa.x[k] - ob.x[k]).abs()).max((oa.p[k] - ob.p[k]).abs());
    }
    let sa = Vec3::from(oa.s.expect("spinor"));
    let sb = rbar.matrix_at(1.0).transpose() * Vec3::from(ob.s.expect("spinor"));
    Ok((space, (sa - sb).amax()))
}

fn gauge_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let gs = gauge_structure(&random_samples(opts.samples, opts.seed)?)?;
    let ops = operator_identities(opts.seed)?;
    let (ra, rb) = reduction_residuals(opts.seed)?;
    let (space, spin) = gauge_independence()?;
    Ok(vec![
        Check::at_most("gauge_a_spin_connection_max", gs.gauge_a_max, 1e-10),
        Check::at_most("gauge_b_time_component_vs_closed_form", gs.gauge_b_time_vs_closed_form, 1e-10),
        Check::at_most("gauge_b_spatial_components_max", gs.gauge_b_other_components, 1e-10),
        Check::at_most("gauge_b_off_diagonal_blocks_max", gs.gauge_b_off_diagonal_blocks, 1e-10),
        Check::at_most("gauge_b_rate_linearity", gs.gauge_b_rate_linearity, 1e-10),
        Check::at_most("h_inert_linear_vs_minus_ma_dot_x", ops.linear, 1e-10),
        Check::at_most("h_inert_rotational_vs_minus_omega_dot_l", ops.rotational, 1e-10),
        Check::at_most("h_spin_vs_minus_omega_dot_s", ops.spin, 1e-10),
        Check::at_most("reduction_gauge_a", ra, 1e-10),
        Check::at_most("reduction_gauge_b", rb, 1e-10),
        Check::at_most("gauge_independence_x_p", space, 1e-6),
        Check::at_most("gauge_independence_spin", spin, 1e-6),
    ])
}

/// Residuals below this are round-off: the scheme is exact for that case.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Covariance residual of a Gaussian packet on a grid, evolved to `t = 1`.
pub fn covariance_case(frame: &FrameSpec, grid: GridSpec, packet: &GaussianSpec, dt: f64) -> Result<f64> {
    let units = Units::default();
    let psi0 = GridWavefunction::gaussian(grid, packet, None, units, "lab")?;
    let r = covariance_residual(&CovarianceSetup {
        frame: frame.clone(),
        potential: Potential::Zero,
        psi0,
        units,
        integ: IntegratorSpec::new(Method::StrangSplit, dt, 1.0),
    })?;
    Ok(r.l2_distance)
}

pub fn acceleration_case() -> (FrameSpec, GridSpec, GaussianSpec, f64) {
    (
        FrameSpec::uniform_acceleration(Vec3::new(1.0, 0.0, 0.0)),
        GridSpec::cubic(1, 512, 32.0).expect("valid grid"),
        GaussianSpec {
            center: [0.0; 3],
            width: 1.0,
            momentum: [0.5, 0.0, 0.0],
        },
        0.01,
    )
}

pub fn rotation_case() -> (FrameSpec, GridSpec, GaussianSpec, f64) {
    (
        FrameSpec::rotating(Vec3::z(), 0.5).expect("valid frame"),
        GridSpec::cubic(2, 256, 32.0).expect("valid grid"),
        GaussianSpec {
            center: [1.5, 0.5, 0.0],
            width: 1.0,
            momentum: [0.5, -0.3, 0.0],
        },
        0.01,
    )
}

/// Rotation about `ẑ` with angle `0.5 t + 0.5 t³`.
pub fn variable_rate_rotation() -> Result<FrameSpec> {
    let knots: Vec<f64> = (0..=40).map(|i| -1.0 + 0.1 * i as f64).collect();
    let values = knots.iter().map(|t| Vec3::new(0.0, 0.0, 0.5 * t + 0.5 * t * t * t)).collect();
    FrameSpec::new(
        RotationFamily::Spline(CubicSpline3::new(knots, values)?),
        TranslationFamily::Zero,
        1.0,
        (-1.0, 3.0),
    )
}

/// `(coarse, refined)` residuals; refinement doubles every axis and halves `dt`.
pub fn refinement_pair(frame: &FrameSpec, grid: GridSpec, packet: &GaussianSpec, dt: f64) -> Result<(f64, f64)> {
    Ok((
        covariance_case(frame, grid, packet, dt)?,
        covariance_case(frame, grid.refined(), packet, 0.5 * dt)?,
    ))
}

fn shrink_check(name: &str, coarse: f64, fine: f64) -> Check {
    if coarse <= ROUNDOFF_FLOOR && fine <= ROUNDOFF_FLOOR {
        let mut c = Check::at_most(name, fine, ROUNDOFF_FLOOR);
        c.note = Some(format!("coarse {coarse:.3e}, both at round-off"));
        c
    } else {
        Check::at_least(name, coarse / fine, 2.0).noted(format!("coarse {coarse:.3e}, refined {fine:.3e}"))
    }
}

fn covariance_checks(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let (af, ag, ap, adt) = acceleration_case();
    let (rf, rg, rp, rdt) = rotation_case();
    let static_res = covariance_case(&FrameSpec::inertial(), ag, &ap, adt)?;
    let boost = covariance_case(&FrameSpec::boost(Vec3::new(0.4, 0.0, 0.0)), ag, &ap, adt)?;
    let mut checks = vec![Check::at_most("static_frame", static_res, 1e-12), Check::at_most("boost_1d", boost, 1e-3)];
    if opts.refine {
        let (a0, a1) = refinement_pair(&af, ag, &ap, adt)?;
        let (r0, r1) = refinement_pair(&rf, rg, &rp, rdt)?;
        let vf = variable_rate_rotation()?;
        let (v0, v1) = refinement_pair(&vf, rg, &rp, rdt)?;
        checks.extend([
            Check::at_most("acceleration_1d", a0, 1e-3),
            shrink_check("acceleration_1d_refinement", a0, a1),
            Check::at_most("rotation_2d", r0, 5e-3),
            shrink_check("rotation_2d_refinement", r0, r1),
            Check::at_most("variable_rotation_2d", v0, 5e-3),
            shrink_check("variable_rotation_2d_refinement", v0, v1),
        ]);
    } else {
        checks.push(Check::at_most("acceleration_1d", covariance_case(&af, ag, &ap, adt)?, 1e-3));
        checks.push(Check::at_most("rotation_2d", covariance_case(&rf, rg, &rp, rdt)?, 5e-3));
    }
    Ok(checks)
}

pub fn equivalence_base() -> EquivalenceSetup {
    EquivalenceSetup {
        grid: GridSpec::cubic(1, 512, 64.0).expect("valid grid"),
        initial: GaussianSpec {
            center: [0.0; 3],
            width: 1.0,
            momentum: [0.0; 3],
        },
        units: Units::default(),
        integ: IntegratorSpec::new(Method::StrangSplit, 0.01, 1.0),
    }
}

fn equivalence_checks() -> Result<Vec<Check>> {
    let base = equivalence_base();
    let g = Vec3::new(0.5, 0.0, 0.0);
    let cancel = equivalence_residual(&g, &g, &base)?;
    let residual = equivalence_residual(&g, &Vec3::zeros(), &base)?;
    let trivial = equivalence_residual(&Vec3::zeros(), &Vec3::zeros(), &base)?;
    let expected = cancel.get("expected_phase").unwrap_or(f64::NAN);
    Ok(vec![
        Check::at_least("a_eq_g_overlap", cancel.overlap_modulus, 1.0 - 1e-6),
        Check::at_most("a_eq_g_phase_residual", cancel.phase_residual, 1e-3)
            .noted(format!("expected phase {expected:.9e} rad")),
        Check::at_most("remainder_phase_vs_cubic_law", (expected - 0.25 / 6.0).abs(), 1e-12),
        Check::at_most("a_zero_vs_linear_potential_oracle", residual.l2_distance, 1e-4),
        Check::at_least("zero_gravity_overlap", trivial.overlap_modulus, 1.0),
    ])
}

fn spin_checks() -> Result<Vec<Check>> {
    let z = spin_precession(1.0, &Vec3::z(), 6.0, 0.05)?;
    let x = spin_precession(0.3, &Vec3::x(), 6.0, 0.05)?;
    let zero = spin_precession(0.0, &Vec3::z(), 1.0, 0.05)?;
    let s0 = zero.spin[0];
    let drift = zero
        .spin
        .iter()
        .flat_map(|s| (0..3).map(move |k| (s[k] - s0[k]).abs()))
        .fold(0.0_f64, f64::max);
    Ok(vec![
        Check::at_most("omega_1_z_relative_error", (z.frequency - 1.0).abs() / 1.0, 1e-4),
        Check::at_most("omega_0.3_x_relative_error", (x.frequency - 0.3).abs() / 0.3, 1e-4),
        Check::at_most("omega_0_spin_drift", drift, 1e-12),
    ])
}
