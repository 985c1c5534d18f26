//! Hamiltonian operators on grid wavefunctions: kinetic, inertial, spin and gravity terms,
//! and the reduction of the five-dimensional spinor equation to a Schrödinger equation.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{GridWavefunction, Units};
use crate::frames::{FrameSpec, FrameState, RotationState};
use crate::geometry::{gamma_set_at, Gauge, Mat4c, S, T};
use crate::grid::GridSpec;
use crate::numeric::{adaptive_simpson, levi_civita, Mat3, Vec3};
use crate::spectral;

pub type Mat2c = Matrix2<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Kinetic,
    InertialLinear,
    InertialRotational,
    Spin,
    Potential,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermOp {
    /// `−(ħ²/2m) ∇²`.
    Kinetic { m: f64, hbar: f64 },
    /// Pointwise multiplication by a real field.
    Multiply(Vec<f64>),
    /// `−iħ W_{ℓk} x_k ∂_ℓ` with `W` antisymmetric.
    Rotational { w: Mat3, hbar: f64 },
    /// Constant matrix on the spinor index.
    Spin(Mat2c),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub kind: TermKind,
    pub op: TermOp,
    pub hermitian: bool,
    pub grid: GridSpec,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl HamiltonianTerm {
    fn new(kind: TermKind, op: TermOp, grid: GridSpec) -> Self {
        Self {
            kind,
            op,
            hermitian: true,
            grid,
        }
    }

    pub fn kinetic(units: Units, grid: GridSpec) -> Self {
        Self::new(
            TermKind::Kinetic,
            TermOp::Kinetic {
                m: units.m,
                hbar: units.hbar,
            },
            grid,
        )
    }

    pub fn is_zero(&self) -> bool {
        match &self.op {
            TermOp::Kinetic { .. } => false,
            TermOp::Multiply(v) => v.iter().all(|x| *x == 0.0),
            TermOp::Rotational { w, .. } => w.iter().all(|x| *x == 0.0),
            TermOp::Spin(s) => s.iter().all(|x| x.norm() == 0.0),
        }
    }

    pub fn apply(&self, psi: &GridWavefunction) -> Result<GridWavefunction> {
        if psi.grid != self.grid {
            return Err(Error::Validation("Hamiltonian term and wavefunction live on different grids".into()));
        }
        let grid = &self.grid;
        let mut out = psi.clone();
        match &self.op {
            TermOp::Kinetic { m, hbar } => {
                let f = -hbar * hbar / (2.0 * m);
                for (o, p) in out.comps.iter_mut().zip(&psi.comps) {
                    *o = spectral::laplacian(p, grid).into_iter().map(|v| v * f).collect();
                }
            }
            TermOp::Multiply(v) => {
                for o in out.comps.iter_mut() {
                    o.iter_mut().zip(v).for_each(|(a, b)| *a *= b);
                }
            }
            TermOp::Rotational { w, hbar } => {
                for (o, p) in out.comps.iter_mut().zip(&psi.comps) {
                    *o = rotational_apply(w, *hbar, p, grid);
                }
            }
            TermOp::Spin(s) => {
                if !psi.is_spinor() {
                    return Err(Error::Validation("spin term applied to a scalar wavefunction".into()));
                }
                let (a, b) = (&psi.comps[0], &psi.comps[1]);
                out.comps[0] = a.iter().zip(b).map(|(x, y)| s[(0, 0)] * x + s[(0, 1)] * y).collect();
                out.comps[1] = a.iter().zip(b).map(|(x, y)| s[(1, 0)] * x + s[(1, 1)] * y).collect();
            }
        }
        Ok(out)
    }
}

fn rotational_apply(w: &Mat3, hbar: f64, p: &[Complex64], grid: &GridSpec) -> Vec<Complex64> {
    let mut out = vec![c(0.0, 0.0); p.len()];
    for l in 0..grid.dim {
        let coeff: Vec<f64> = grid.positions().map(|x| (0..grid.dim).map(|k| w[(l, k)] * x[k]).sum()).collect();
        if coeff.iter().all(|v| *v == 0.0) {
            continue;
        }
        let d = spectral::derivative(p, grid, l);
        for ((o, dv), cf) in out.iter_mut().zip(&d).zip(&coeff) {
            *o += dv * c(0.0, -hbar * cf);
        }
    }
    out
}

/// Sum of several terms applied to one state.
pub fn apply_sum(terms: &[HamiltonianTerm], psi: &GridWavefunction) -> Result<GridWavefunction> {
    let mut out = GridWavefunction::zeros(psi.grid, psi.n_components(), psi.t, psi.frame_tag.clone())?;
    for term in terms {
        let part = term.apply(psi)?;
        for (o, p) in out.comps.iter_mut().zip(&part.comps) {
            o.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
    }
    Ok(out)
}

const REPRESENTABLE_TOL: f64 = 1e-12;

/// Rejects frame motion that couples gridded and ungridded axes.
pub fn check_representable(state: &FrameState, grid: &GridSpec) -> Result<()> {
    let w = state.spin_matrix();
    for l in 0..3 {
        for k in 0..3 {
            if (l < grid.dim) != (k < grid.dim) && w[(l, k)].abs() > REPRESENTABLE_TOL {
                return Err(Error::Configuration(format!(
                    "frame rotation turns gridded axes into ungridded ones on a {}-D grid",
                    grid.dim
                )));
            }
        }
    }
    let accel = state.r * state.ddat;
    for k in grid.dim..3 {
        if accel[k].abs() > REPRESENTABLE_TOL {
            return Err(Error::Configuration(format!(
                "frame acceleration along ungridded axis {k} on a {}-D grid",
                grid.dim
            )));
        }
    }
    Ok(())
}

/// Inertial Hamiltonian `−m (R Ä̃)·x⃗' − iħ (Ṙ Rᵀ)_{ℓk} x'_k ∂'_ℓ` as its linear and
/// rotational parts.
pub fn build_h_inert(state: &FrameState, units: Units, grid: &GridSpec) -> Result<[HamiltonianTerm; 2]> {
    check_representable(state, grid)?;
    let accel = state.r * state.ddat;
    let v: Vec<f64> = grid.positions().map(|x| -units.m * accel.dot(&x)).collect();
    Ok([
        HamiltonianTerm::new(TermKind::InertialLinear, TermOp::Multiply(v), *grid),
        HamiltonianTerm::new(
            TermKind::InertialRotational,
            TermOp::Rotational {
                w: state.spin_matrix(),
                hbar: units.hbar,
            },
            *grid,
        ),
    ])
}

fn pauli_c() -> [Mat2c; 3] {
    let p = crate::geometry::pauli();
    p.map(|m| Mat2c::new(m[0][0], m[0][1], m[1][0], m[1][1]))
}

/// `(ħ/4) (Ṙ̄ R̄ᵀ)_{ℓk} ε_{kℓm} σ_m`, equal to `−Ω⃗'·S⃗`.
pub fn spin_matrix(rbar: &RotationState, hbar: f64) -> Mat2c {
    let w = rbar.spin_matrix();
    let sigma = pauli_c();
    let mut h = Mat2c::zeros();
    for l in 0..3 {
        for k in 0..3 {
            for m in 0..3 {
                let e = levi_civita(k, l, m);
                if e != 0.0 && w[(l, k)] != 0.0 {
                    h += sigma[m] * c(0.25 * hbar * w[(l, k)] * e, 0.0);
                }
            }
        }
    }
    h
}

pub fn build_h_spin(rbar: &RotationState, units: Units, grid: &GridSpec) -> HamiltonianTerm {
    HamiltonianTerm::new(TermKind::Spin, TermOp::Spin(spin_matrix(rbar, units.hbar)), *grid)
}

/// Gravitational potential `Φ(x⃗)` in the inertial system.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `Φ = g⃗·x⃗`.
    Uniform { g: Vec3 },
    Custom(SampledField),
}

/// `Φ` sampled on the points of a grid (not treated as periodic), cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl SampledField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "sampled field has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("sampled field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(&Vec3) -> f64>(grid: GridSpec, f: F) -> Result<Self> {
        let values = grid.positions().map(|x| f(&x)).collect();
        Self::new(grid, values)
    }

    /// Tensor-product cubic Lagrange interpolation.
    pub fn eval(&self, x: &Vec3) -> Result<f64> {
        let g = &self.grid;
        let mut base = [0usize; 3];
        let mut weights = [[0.0; 4]; 3];
        for a in 0..3 {
            if a >= g.dim {
                weights[a] = [1.0, 0.0, 0.0, 0.0];
                continue;
            }
            let dx = g.dx(a);
            let lo = g.coord(a, 0);
            let hi = g.coord(a, g.n[a] - 1);
            let eps = 1e-12 * dx;
            if x[a] < lo - eps || x[a] > hi + eps {
                return Err(Error::Extrapolation(format!(
                    "point {:?} leaves the sampled potential on axis {a} ([{lo}, {hi}])",
                    [x[0], x[1], x[2]]
                )));
            }
            let s = (x[a] - lo) / dx;
            let i0 = (s.floor() as isize - 1).clamp(0, g.n[a] as isize - 4) as usize;
            base[a] = i0;
            for (j, w) in weights[a].iter_mut().enumerate() {
                let mut v = 1.0;
                for q in 0..4 {
                    if q != j {
                        v *= (s - (i0 + q) as f64) / (j as f64 - q as f64);
                    }
                }
                *w = v;
            }
        }
        let span = |a: usize| if a < g.dim { 4 } else { 1 };
        let mut acc = 0.0;
        for i in 0..span(0) {
            for j in 0..span(1) {
                for k in 0..span(2) {
                    let w = weights[0][i] * weights[1][j] * weights[2][k];
                    let idx = [base[0] + i, base[1] + j, base[2] + k];
                    let flat = (0..g.dim).fold(0, |f, a| f * g.n[a] + idx[a]);
                    acc += w * self.values[flat];
                }
            }
        }
        Ok(acc)
    }
}

impl Potential {
    pub fn eval(&self, x: &Vec3) -> Result<f64> {
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Uniform { g } => Ok(g.dot(x)),
            Potential::Custom(f) => f.eval(x),
        }
    }
}

/// `m Φ(x⃗(x⃗', t))`, the potential pulled back through the inverse frame map.
pub fn build_h_gravity(
    pot: &Potential,
    units: Units,
    frame: &FrameSpec,
    t: f64,
    grid: &GridSpec,
) -> Result<HamiltonianTerm> {
    let state = frame.eval(t)?;
    let v = grid
        .positions()
        .map(|xp| Ok(units.m * pot.eval(&state.to_inertial(&xp))?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(HamiltonianTerm::new(TermKind::Potential, TermOp::Multiply(v), *grid))
}

/// Spatially constant part `−m g⃗·Ã` of a uniform field seen from a frame.
pub fn gravity_remainder(g: &Vec3, state: &FrameState, units: Units) -> f64 {
    -units.m * g.dot(&state.at)
}

/// Global phase `(m/ħ) ∫₀ᵗ g⃗·Ã dτ` accumulated by the frame wavefunction relative to the
/// solution without the constant remainder.
pub fn remainder_phase(frame: &FrameSpec, g: &Vec3, units: Units, t: f64) -> Result<f64> {
    let f = |tau: f64| frame.eval(tau).map(|s| g.dot(&s.at)).unwrap_or(f64::NAN);
    let (v, _) = adaptive_simpson(f, 0.0, t, 1e-13)?;
    Ok(units.m * v / units.hbar)
}

fn blk(m: &Mat4c, r: usize, col: usize) -> Mat2c {
    m.fixed_view::<2, 2>(2 * r, 2 * col).into_owned()
}

fn amax2(m: &Mat2c) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.norm()))
}

/// Spinor equation with the lower half `ψ'₂` eliminated.
///
/// With `∂'₅ → −iκ`, `κ = m u/ħ`, write the equation as `Σ γ'^μ ∂'_μ ψ' + M ψ' = 0`,
/// `M = Σ γ'^μ Γ'_μ − iκ γ'⁵`. In 2×2 blocks the upper row fixes
/// `ψ'₂ = −M₁₂⁻¹ (Σ_k B^k₁₁ ∂_k ψ'₁ + M₁₁ ψ'₁)` and the lower row gives
/// `iħ ∂_t ψ'₁ = −iħu T⁻¹ [Σ_k (B^k₂₁ ∂_k ψ'₁ + B^k₂₂ ∂_k ψ'₂) + M₂₁ ψ'₁ + M₂₂ ψ'₂]`,
/// where `B^μ = γ'^μ` and `T = (γ'⁴)₂₁`.
#[derive(Debug, Clone)]
pub struct LevyLeblond {
    pub grid: GridSpec,
    pub hbar: f64,
    pub u: f64,
    b11: Vec<[Mat2c; 3]>,
    b21: Vec<[Mat2c; 3]>,
    b22: Vec<[Mat2c; 3]>,
    m11: Vec<Mat2c>,
    m12_inv: Vec<Mat2c>,
    m21: Vec<Mat2c>,
    m22: Vec<Mat2c>,
    t_inv: Vec<Mat2c>,
}

const BLOCK_TOL: f64 = 1e-12;

pub fn levy_leblond_split(
    state: &FrameState,
    gauge: &Gauge,
    u: f64,
    units: Units,
    grid: &GridSpec,
) -> Result<LevyLeblond> {
    let kappa = units.m * u / units.hbar;
    let n = grid.len();
    let mut ll = LevyLeblond {
        grid: *grid,
        hbar: units.hbar,
        u,
        b11: Vec::with_capacity(n),
        b21: Vec::with_capacity(n),
        b22: Vec::with_capacity(n),
        m11: Vec::with_capacity(n),
        m12_inv: Vec::with_capacity(n),
        m21: Vec::with_capacity(n),
        m22: Vec::with_capacity(n),
        t_inv: Vec::with_capacity(n),
    };
    for xp in grid.positions() {
        let gs = gamma_set_at(state, gauge, &xp, u)?;
        let scale = gs.curved.iter().map(|g| g.iter().fold(0.0_f64, |a, v| a.max(v.norm()))).fold(1.0, f64::max);
        for mu in 0..5 {
            if mu != S && amax2(&blk(&gs.curved[mu], 0, 1)) > BLOCK_TOL * scale {
                return Err(Error::Representation(format!(
                    "γ'^{} couples ∂ψ'₂ into the constraint row",
                    mu + 1
                )));
            }
        }
        let g4 = &gs.curved[T];
        if [blk(g4, 0, 0), blk(g4, 0, 1), blk(g4, 1, 1)].iter().any(|b| amax2(b) > BLOCK_TOL * scale) {
            return Err(Error::Representation("γ'⁴ is not purely lower off-diagonal".into()));
        }
        let mut m = gs.curved[S] * c(0.0, -kappa);
        for mu in 0..5 {
            m += gs.curved[mu] * gs.spin_conn[mu];
        }
        let t_inv = blk(g4, 1, 0)
            .try_inverse()
            .ok_or_else(|| Error::Representation("time block of γ'⁴ is singular".into()))?;
        let m12_inv = blk(&m, 0, 1)
            .try_inverse()
            .ok_or_else(|| Error::Representation("constraint block M₁₂ is singular".into()))?;
        ll.b11.push(std::array::from_fn(|k| blk(&gs.curved[k], 0, 0)));
        ll.b21.push(std::array::from_fn(|k| blk(&gs.curved[k], 1, 0)));
        ll.b22.push(std::array::from_fn(|k| blk(&gs.curved[k], 1, 1)));
        ll.m11.push(blk(&m, 0, 0));
        ll.m12_inv.push(m12_inv);
        ll.m21.push(blk(&m, 1, 0));
        ll.m22.push(blk(&m, 1, 1));
        ll.t_inv.push(t_inv);
    }
    Ok(ll)
}

fn gradients(psi: &GridWavefunction) -> Vec<[Vec<Complex64>; 2]> {
    (0..psi.grid.dim)
        .map(|k| [0, 1].map(|ci| spectral::derivative(&psi.comps[ci], &psi.grid, k)))
        .collect()
}

fn mat_vec(m: &Mat2c, a: Complex64, b: Complex64) -> [Complex64; 2] {
    [m[(0, 0)] * a + m[(0, 1)] * b, m[(1, 0)] * a + m[(1, 1)] * b]
}

impl LevyLeblond {
    fn check(&self, psi1: &GridWavefunction) -> Result<()> {
        if psi1.grid != self.grid || !psi1.is_spinor() {
            return Err(Error::Validation("the reduced equation acts on two-component states on its own grid".into()));
        }
        Ok(())
    }

    /// The eliminated lower half `ψ'₂` of the spinor.
    pub fn constraint(&self, psi1: &GridWavefunction) -> Result<GridWavefunction> {
        self.check(psi1)?;
        let grads = gradients(psi1);
        let mut out = psi1.clone();
        for i in 0..self.grid.len() {
            let mut acc = mat_vec(&self.m11[i], psi1.comps[0][i], psi1.comps[1][i]);
            for (k, g) in grads.iter().enumerate() {
                let d = mat_vec(&self.b11[i][k], g[0][i], g[1][i]);
                acc[0] += d[0];
                acc[1] += d[1];
            }
            let v = mat_vec(&self.m12_inv[i], acc[0], acc[1]);
            out.comps[0][i] = -v[0];
            out.comps[1][i] = -v[1];
        }
        Ok(out)
    }

    /// Effective Hamiltonian acting on `ψ'₁`.
    pub fn apply(&self, psi1: &GridWavefunction) -> Result<GridWavefunction> {
        let psi2 = self.constraint(psi1)?;
        let g1 = gradients(psi1);
        let g2 = gradients(&psi2);
        let mut out = psi1.clone();
        let pref = c(0.0, -self.hbar * self.u);
        for i in 0..self.grid.len() {
            let mut acc = mat_vec(&self.m21[i], psi1.comps[0][i], psi1.comps[1][i]);
            let p2 = mat_vec(&self.m22[i], psi2.comps[0][i], psi2.comps[1][i]);
            acc[0] += p2[0];
            acc[1] += p2[1];
            for k in 0..self.grid.dim {
                let d1 = mat_vec(&self.b21[i][k], g1[k][0][i], g1[k][1][i]);
                let d2 = mat_vec(&self.b22[i][k], g2[k][0][i], g2[k][1][i]);
                acc[0] += d1[0] + d2[0];
                acc[1] += d1[1] + d2[1];
            }
            let v = mat_vec(&self.t_inv[i], acc[0], acc[1]);
            out.comps[0][i] = pref * v[0];
            out.comps[1][i] = pref * v[1];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_band_limited;
    use crate::frames::{RotationFamily, TranslationFamily};

    fn max_diff(a: &GridWavefunction, b: &GridWavefunction) -> f64 {
        a.comps
            .iter()
            .flatten()
            .zip(b.comps.iter().flatten())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
    }

    fn grid2() -> GridSpec {
        GridSpec::cubic(2, 32, 12.0).unwrap()
    }

    fn general_frame() -> FrameSpec {
        FrameSpec::new(
            RotationFamily::about_axis(Vec3::z(), 0.7).unwrap(),
            TranslationFamily::Polynomial(vec![
                Vec3::new(0.2, -0.1, 0.0),
                Vec3::new(0.3, 0.1, 0.0),
                Vec3::new(-0.4, 0.25, 0.0),
                Vec3::new(0.1, 0.05, 0.0),
            ]),
            1.0,
            (-5.0, 5.0),
        )
        .unwrap()
    }

    #[test]
    fn every_term_is_hermitian() {
        let g = grid2();
        let st = general_frame().eval(0.8).unwrap();
        let units = Units { m: 1.3, hbar: 0.9 };
        let [lin, rot] = build_h_inert(&st, units, &g).unwrap();
        let rbar = RotationFamily::about_axis(Vec3::new(0.3, 1.0, -0.2), 1.1).unwrap().eval(0.4);
        let pot = Potential::Custom(SampledField::from_fn(g, |x| (0.3 * x[0]).sin() + 0.1 * x[1] * x[1]).unwrap());
        let terms = [
            HamiltonianTerm::kinetic(units, g),
            lin,
            rot,
            build_h_spin(&rbar, units, &g),
            build_h_gravity(&pot, units, &FrameSpec::inertial(), 0.0, &g).unwrap(),
        ];
        for seed in 0..4 {
            let phi = random_band_limited(&g, 2, 0.5, seed);
            let psi = random_band_limited(&g, 2, 0.5, 100 + seed);
            for term in &terms {
                let lhs = phi.inner(&term.apply(&psi).unwrap());
                let rhs = term.apply(&phi).unwrap().inner(&psi);
                assert!((lhs - rhs).norm() <= 1e-10, "{:?}: {}", term.kind, (lhs - rhs).norm());
            }
        }
    }

    #[test]
    fn linear_acceleration_term() {
        let g = GridSpec::cubic(1, 64, 10.0).unwrap();
        let st = FrameSpec::uniform_acceleration(Vec3::new(0.7, 0.0, 0.0)).eval(1.2).unwrap();
        let [lin, rot] = build_h_inert(&st, Units { m: 2.0, hbar: 1.0 }, &g).unwrap();
        assert!(rot.is_zero());
        let TermOp::Multiply(v) = &lin.op else { panic!() };
        for (x, vv) in g.positions().zip(v) {
            assert!((vv + 2.0 * 0.7 * x[0]).abs() < 1e-15);
        }
        let st = FrameSpec::inertial().eval(1.0).unwrap();
        assert!(build_h_inert(&st, Units::default(), &g).unwrap().iter().all(|t| t.is_zero()));
    }

    #[test]
    fn rotation_term_is_minus_omega_dot_l() {
        let g = grid2();
        let omega = 0.5;
        let st = FrameSpec::rotating(Vec3::z(), omega).unwrap().eval(0.3).unwrap();
        let [_, rot] = build_h_inert(&st, Units::default(), &g).unwrap();
        let psi = random_band_limited(&g, 1, 0.5, 7);
        let dx = spectral::derivative(&psi.comps[0], &g, 0);
        let dy = spectral::derivative(&psi.comps[0], &g, 1);
        // L_z = −iħ (x ∂_y − y ∂_x)
        let lz: Vec<Complex64> = g
            .positions()
            .enumerate()
            .map(|(i, x)| c(0.0, -1.0) * (dy[i] * x[0] - dx[i] * x[1]))
            .collect();
        let out = rot.apply(&psi).unwrap();
        for (a, b) in out.comps[0].iter().zip(&lz) {
            assert!((a + b * omega).norm() < 1e-10);
        }
    }

    #[test]
    fn rotation_off_the_grid_plane_is_rejected() {
        let st = FrameSpec::rotating(Vec3::x(), 0.5).unwrap().eval(0.3).unwrap();
        assert!(matches!(build_h_inert(&st, Units::default(), &grid2()), Err(Error::Configuration(_))));
        let g1 = GridSpec::cubic(1, 32, 10.0).unwrap();
        let st = FrameSpec::rotating(Vec3::z(), 0.5).unwrap().eval(0.3).unwrap();
        assert!(matches!(build_h_inert(&st, Units::default(), &g1), Err(Error::Configuration(_))));
    }

    #[test]
    fn spin_term_is_minus_omega_dot_s() {
        let sigma = pauli_c();
        let hbar = 0.7;
        assert!(amax2(&spin_matrix(&RotationState::identity(), hbar)) == 0.0);
        for w in [Vec3::new(0.0, 0.0, 1.3), Vec3::new(0.4, -0.2, 0.9)] {
            let rbar = RotationFamily::about_axis(w, w.norm()).unwrap().eval(0.6);
            let expected = (0..3).fold(Mat2c::zeros(), |acc, m| acc + sigma[m] * c(-0.5 * hbar * w[m], 0.0));
            assert!(amax2(&(spin_matrix(&rbar, hbar) - expected)) < 1e-12);
        }
    }

    #[test]
    fn gravity_term_and_equivalence_cancellation() {
        let g1 = GridSpec::cubic(1, 64, 16.0).unwrap();
        let units = Units { m: 1.5, hbar: 1.0 };
        let gv = Vec3::new(0.5, 0.0, 0.0);
        let pot = Potential::Uniform { g: gv };
        let inertial = build_h_gravity(&pot, units, &FrameSpec::inertial(), 0.7, &g1).unwrap();
        let TermOp::Multiply(v) = &inertial.op else { panic!() };
        for (x, vv) in g1.positions().zip(v) {
            assert!((vv - 1.5 * 0.5 * x[0]).abs() < 1e-15);
        }
        let frame = FrameSpec::uniform_acceleration(gv);
        let t = 1.3;
        let st = frame.eval(t).unwrap();
        let [lin, _] = build_h_inert(&st, units, &g1).unwrap();
        let grav = build_h_gravity(&pot, units, &frame, t, &g1).unwrap();
        let psi = random_band_limited(&g1, 1, 0.5, 4);
        let sum = apply_sum(&[lin, grav], &psi).unwrap();
        let rem = gravity_remainder(&gv, &st, units);
        let residual: f64 = sum.comps[0]
            .iter()
            .zip(&psi.comps[0])
            .map(|(h, p)| (h - p * rem).norm_sqr())
            .sum::<f64>()
            * g1.cell_volume();
        assert!(residual.sqrt() <= 1e-10 * psi.norm_sq().sqrt());
        assert!(Potential::Zero.eval(&Vec3::new(1.0, 2.0, 3.0)).unwrap() == 0.0);
    }

    #[test]
    fn remainder_phase_has_cubic_law() {
        let gv = Vec3::new(0.5, 0.0, 0.0);
        let frame = FrameSpec::uniform_acceleration(gv);
        let phase = remainder_phase(&frame, &gv, Units::default(), 1.0).unwrap();
        assert!((phase - 0.25 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn sampled_field_interpolates_cubics_and_refuses_extrapolation() {
        let g = GridSpec::new(2, &[16, 32], &[4.0, 6.0]).unwrap();
        let f = |x: &Vec3| 0.3 * x[0].powi(3) - x[0] * x[1] + 0.5 * x[1].powi(2) + 1.0;
        let field = SampledField::from_fn(g, f).unwrap();
        for p in [Vec3::new(0.13, -0.71, 0.0), Vec3::new(-1.9, 2.6, 0.0), Vec3::new(1.7, 0.0, 0.0)] {
            assert!((field.eval(&p).unwrap() - f(&p)).abs() < 1e-12);
        }
        assert!(matches!(field.eval(&Vec3::new(2.0, 0.0, 0.0)), Err(Error::Extrapolation(_))));
        let pot = Potential::Custom(field);
        let frame = FrameSpec::uniform_acceleration(Vec3::new(1.0, 0.0, 0.0));
        assert!(matches!(
            build_h_gravity(&pot, Units::default(), &frame, 1.0, &g),
            Err(Error::Extrapolation(_))
        ));
    }

    fn reduced_matches(frame: &FrameSpec, t: f64, rbar: Option<RotationState>, units: Units, u: f64) -> f64 {
        let g = grid2();
        let frame = frame.clone().with_u(u).unwrap();
        let st = frame.eval(t).unwrap();
        let gauge = rbar.map_or(Gauge::A, Gauge::B);
        let ll = levy_leblond_split(&st, &gauge, u, units, &g).unwrap();
        let [lin, rot] = build_h_inert(&st, units, &g).unwrap();
        let mut terms = vec![HamiltonianTerm::kinetic(units, g), lin, rot];
        if let Some(r) = rbar {
            terms.push(build_h_spin(&r, units, &g));
        }
        let mut worst = 0.0_f64;
        for seed in 0..3 {
            let psi = random_band_limited(&g, 2, 0.5, 40 + seed);
            worst = worst.max(max_diff(&ll.apply(&psi).unwrap(), &apply_sum(&terms, &psi).unwrap()));
        }
        worst
    }

    #[test]
    fn reduction_in_static_frame_is_free_schrodinger() {
        let e = reduced_matches(&FrameSpec::inertial(), 0.0, None, Units::default(), 1.0);
        assert!(e < 1e-10, "{e}");
    }

    #[test]
    fn reduction_in_gauge_a_gives_inertial_hamiltonian() {
        let e = reduced_matches(&general_frame(), 0.9, None, Units { m: 1.7, hbar: 0.8 }, 1.3);
        assert!(e < 1e-10, "{e}");
    }

    #[test]
    fn reduction_in_gauge_b_adds_spin_term() {
        let rbar = RotationFamily::about_axis(Vec3::new(0.2, -0.5, 1.0), 0.9).unwrap().eval(0.9);
        let e = reduced_matches(&general_frame(), 0.9, Some(rbar), Units { m: 1.7, hbar: 0.8 }, 1.3);
        assert!(e < 1e-10, "{e}");
    }
}
