//! Bargmann-frame geometry at an event of a non-inertial frame.
//!
//! Index layout is fixed everywhere: curved and flat indices run over
//! `0..5 ↔ (x¹, x², x³, x⁴, x⁵)`, with [`T`] the time-like slot and [`S`]
//! the `s`-like slot. A fünfbein is stored with the curved index as row and
//! the flat index as column, `h[(μ, a)] = h^μ_a`.

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frames::{FrameSpec, FrameState, RotationState};
use crate::numeric::{Mat3, Vec3};

pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Mat4c = SMatrix<Complex64, 4, 4>;

/// Slot of `x⁴ = u t`.
pub const T: usize = 3;
/// Slot of `x⁵ = s / u`.
pub const S: usize = 4;

/// The flat metric `η` (its own inverse).
pub fn eta() -> Matrix5 {
    let mut m = Matrix5::zeros();
    for i in 0..3 {
        m[(i, i)] = 1.0;
    }
    m[(T, S)] = -1.0;
    m[(S, T)] = -1.0;
    m
}

/// Time and frame position a geometric object was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventTag {
    pub t: f64,
    pub xp: [f64; 3],
}

impl EventTag {
    fn new(t: f64, xp: &Vec3) -> Self {
        Self {
            t,
            xp: [xp[0], xp[1], xp[2]],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric5 {
    pub up: Matrix5,
    pub down: Matrix5,
    pub event: EventTag,
}

/// Affine connection `gamma[λ][μ][ν] = Γ'^λ_{μν}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection5 {
    pub gamma: [[[f64; 5]; 5]; 5],
    pub event: EventTag,
}

impl Connection5 {
    pub fn max_abs(&self) -> f64 {
        self.gamma.iter().flatten().flatten().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gauge {
    /// `h^μ_a = ∂x'^μ/∂x^a`.
    A,
    /// Gauge A followed by the local rotation `R̄(t)` of the flat spatial index.
    B(RotationState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Funfbein {
    pub h: Matrix5,
    pub gauge: Gauge,
    pub event: EventTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSet {
    pub flat: [Mat4c; 5],
    pub curved: [Mat4c; 5],
    pub spin_conn: [Mat4c; 5],
}

/// `g'^{μν}` at frame position `xp` and its inverse.
pub fn metric_up(state: &FrameState, xp: &Vec3, u: f64) -> Result<Metric5> {
    let w = state.dr * state.r.transpose();
    let wx = w * xp;
    let accel = state.r * state.ddat;
    let mut up = Matrix5::zeros();
    for i in 0..3 {
        up[(i, i)] = 1.0;
        up[(i, S)] = -wx[i] / u;
        up[(S, i)] = up[(i, S)];
    }
    up[(T, S)] = -1.0;
    up[(S, T)] = -1.0;
    up[(S, S)] = -2.0 / (u * u) * accel.dot(xp);
    let down = up
        .try_inverse()
        .ok_or_else(|| Error::numeric("frame metric is singular", up.determinant().abs()))?;
    let dev = (up * down - Matrix5::identity()).amax();
    if dev > 1e-12 {
        return Err(Error::numeric("frame metric inverse is inaccurate", dev));
    }
    Ok(Metric5 {
        up,
        down,
        event: EventTag::new(state.t, xp),
    })
}

/// `Γ'^λ_{μν}` at frame position `xp`; every component not set here vanishes.
pub fn connection(state: &FrameState, xp: &Vec3, u: f64) -> Connection5 {
    let mut g = [[[0.0; 5]; 5]; 5];
    let r_drt = state.r * state.dr.transpose();
    let accel = state.r * state.ddat;
    let r_ddrt_x = state.r * state.ddr.transpose() * xp;
    let (u2, u3) = (u * u, u * u * u);
    for i in 0..3 {
        for j in 0..3 {
            g[i][T][j] = r_drt[(i, j)] / u;
            g[i][j][T] = g[i][T][j];
        }
        g[i][T][T] = (r_ddrt_x[i] - accel[i]) / u2;
        g[S][T][i] = -accel[i] / u2;
        g[S][i][T] = g[S][T][i];
    }
    g[S][T][T] = -2.0 / u3 * (state.dr * state.ddat).dot(xp) - (state.r * state.dddat).dot(xp) / u3;
    Connection5 {
        gamma: g,
        event: EventTag::new(state.t, xp),
    }
}

fn funfbein_gauge_a(state: &FrameState, xp: &Vec3, u: f64) -> Matrix5 {
    let w = state.dr * state.r.transpose();
    let drift = w * xp + state.r * state.dat;
    let mut h = Matrix5::zeros();
    for i in 0..3 {
        for j in 0..3 {
            h[(i, j)] = state.r[(i, j)];
        }
        h[(i, T)] = drift[i] / u;
        h[(S, i)] = state.dat[i] / u;
    }
    h[(S, T)] = ((state.r * state.ddat).dot(xp) + 0.5 * state.dat.norm_squared()) / (u * u);
    h[(T, T)] = 1.0;
    h[(S, S)] = 1.0;
    h
}

/// Flat-index transformation taking gauge A to gauge B: `h_B = h_A · B`.
fn gauge_b_factor(rbar: &Mat3) -> Matrix5 {
    let mut b = Matrix5::identity();
    for k in 0..3 {
        for c in 0..3 {
            b[(k, c)] = rbar[(c, k)];
        }
    }
    b
}

pub fn funfbein_a(state: &FrameState, xp: &Vec3, u: f64) -> Funfbein {
    Funfbein {
        h: funfbein_gauge_a(state, xp, u),
        gauge: Gauge::A,
        event: EventTag::new(state.t, xp),
    }
}

pub fn funfbein_b(state: &FrameState, rbar: &RotationState, xp: &Vec3, u: f64) -> Result<Funfbein> {
    let dev = (rbar.r * rbar.r.transpose() - Mat3::identity()).amax();
    if dev > 1e-10 {
        return Err(Error::Validation(format!("R̄ is not orthogonal (|R̄R̄ᵀ - I| = {dev:.3e})")));
    }
    Ok(Funfbein {
        h: funfbein_gauge_a(state, xp, u) * gauge_b_factor(&rbar.r),
        gauge: Gauge::B(*rbar),
        event: EventTag::new(state.t, xp),
    })
}

pub fn funfbein(state: &FrameState, gauge: &Gauge, xp: &Vec3, u: f64) -> Result<Funfbein> {
    match gauge {
        Gauge::A => Ok(funfbein_a(state, xp, u)),
        Gauge::B(rbar) => funfbein_b(state, rbar, xp, u),
    }
}

/// `∂'_λ h^ν_b` for all five `λ`, from the analytic dependence on `(x', t)`.
pub fn funfbein_derivatives(state: &FrameState, gauge: &Gauge, xp: &Vec3, u: f64) -> [Matrix5; 5] {
    let mut d = [Matrix5::zeros(); 5];
    let w = state.dr * state.r.transpose();
    let accel = state.r * state.ddat;
    for k in 0..3 {
        for i in 0..3 {
            d[k][(i, T)] = w[(i, k)] / u;
        }
        d[k][(S, T)] = accel[k] / (u * u);
    }
    // ∂'_4 = (1/u) ∂_t at fixed x'
    let dw = state.ddr * state.r.transpose() + state.dr * state.dr.transpose();
    let drift_dot = dw * xp + state.dr * state.dat + state.r * state.ddat;
    let accel_dot = state.dr * state.ddat + state.r * state.dddat;
    let mut dt = Matrix5::zeros();
    for i in 0..3 {
        for j in 0..3 {
            dt[(i, j)] = state.dr[(i, j)];
        }
        dt[(i, T)] = drift_dot[i] / u;
        dt[(S, i)] = state.ddat[i] / u;
    }
    dt[(S, T)] = (accel_dot.dot(xp) + state.dat.dot(&state.ddat)) / (u * u);
    d[T] = dt / u;

    if let Gauge::B(rbar) = gauge {
        let h = funfbein_gauge_a(state, xp, u);
        let b = gauge_b_factor(&rbar.r);
        let mut db = Matrix5::zeros();
        for k in 0..3 {
            for c in 0..3 {
                db[(k, c)] = rbar.dr[(c, k)] / u;
            }
        }
        for (lambda, dl) in d.iter_mut().enumerate() {
            *dl *= b;
            if lambda == T {
                *dl += h * db;
            }
        }
    }
    d
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli matrices `σ₁, σ₂, σ₃`.
pub fn pauli() -> [[[Complex64; 2]; 2]; 3] {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    [[[o, l], [l, o]], [[o, -i], [i, o]], [[l, o], [o, -l]]]
}

fn block(tl: [[Complex64; 2]; 2], tr: [[Complex64; 2]; 2], bl: [[Complex64; 2]; 2], br: [[Complex64; 2]; 2]) -> Mat4c {
    Mat4c::from_fn(|r, col| {
        let (src, rr, cc) = match (r < 2, col < 2) {
            (true, true) => (&tl, r, col),
            (true, false) => (&tr, r, col - 2),
            (false, true) => (&bl, r - 2, col),
            (false, false) => (&br, r - 2, col - 2),
        };
        src[rr][cc]
    })
}

/// Flat γ-matrices with `{γ^a, γ^b} = 2 η^{ab}`.
///
/// Built in the diagonal basis `(x¹, x², x³, x₊, x₋)`, `x± = (x⁴ ± x⁵)/√2`,
/// with signature `(+, +, +, −, +)`:
///
/// ```text
/// Γ_k = diag(σ_k, −σ_k)   Γ₊ = [[0, −1], [1, 0]]   Γ₋ = [[0, 1], [1, 0]]
/// ```
///
/// and mapped back with `γ⁴ = (Γ₊ + Γ₋)/√2`, `γ⁵ = (Γ₊ − Γ₋)/√2`. The result
/// is `γ⁴ = √2 [[0, 0], [1, 0]]` and `γ⁵ = −√2 [[0, 1], [0, 0]]` in 2×2
/// blocks, so the upper and lower spinor halves separate.
pub fn gamma_flat() -> [Mat4c; 5] {
    let z = [[c(0.0, 0.0); 2]; 2];
    let one = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
    let neg = |m: [[Complex64; 2]; 2]| m.map(|row| row.map(|v| -v));
    let s = pauli();
    let plus = block(z, neg(one), one, z);
    let minus = block(z, one, one, z);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    [
        block(s[0], z, z, neg(s[0])),
        block(s[1], z, z, neg(s[1])),
        block(s[2], z, z, neg(s[2])),
        (plus + minus) * c(r2, 0.0),
        (plus - minus) * c(r2, 0.0),
    ]
}

/// Curved γ-matrices and the spin connection
/// `Γ'_λ = ⅛ [γ^a, γ^b] g'_{μν} h^μ_a 𝒟'_λ h^ν_b`.
pub fn spin_connection(
    fb: &Funfbein,
    m5: &Metric5,
    c5: &Connection5,
    state: &FrameState,
    u: f64,
) -> Result<GammaSet> {
    if fb.event != m5.event || fb.event != c5.event || fb.event.t != state.t {
        return Err(Error::Validation(format!(
            "geometry evaluated at different events: fünfbein {:?}, metric {:?}, connection {:?}, frame t = {}",
            fb.event, m5.event, c5.event, state.t
        )));
    }
    let xp = Vec3::from(fb.event.xp);
    let expected = funfbein(state, &fb.gauge, &xp, u)?;
    let dev = (expected.h - fb.h).amax();
    if dev > 1e-12 * (1.0 + fb.h.amax()) {
        return Err(Error::Validation(format!(
            "fünfbein does not match its gauge tag at this event (deviation {dev:.3e})"
        )));
    }
    let flat = gamma_flat();
    let curved: [Mat4c; 5] = std::array::from_fn(|mu| {
        (0..5).fold(Mat4c::zeros(), |acc, a| acc + flat[a] * c(fb.h[(mu, a)], 0.0))
    });
    let dh = funfbein_derivatives(state, &fb.gauge, &xp, u);
    let mut spin_conn = [Mat4c::zeros(); 5];
    for (lambda, out) in spin_conn.iter_mut().enumerate() {
        let mut cov = dh[lambda];
        for nu in 0..5 {
            for b in 0..5 {
                let corr: f64 = (0..5).map(|rho| c5.gamma[nu][lambda][rho] * fb.h[(rho, b)]).sum();
                cov[(nu, b)] += corr;
            }
        }
        let omega = fb.h.transpose() * m5.down * cov;
        for a in 0..5 {
            for b in 0..5 {
                if omega[(a, b)] != 0.0 {
                    let comm = flat[a] * flat[b] - flat[b] * flat[a];
                    *out += comm * c(omega[(a, b)] / 8.0, 0.0);
                }
            }
        }
    }
    Ok(GammaSet {
        flat,
        curved,
        spin_conn,
    })
}

/// Closed-form gauge-(b) time component `(i/4u) ε_{klm} (Ṙ̄R̄ᵀ)_{lk} diag(σ_m, σ_m)`.
pub fn gauge_b_time_component(rbar: &RotationState, u: f64) -> Mat4c {
    let w = rbar.spin_matrix();
    let sigma = pauli();
    let zero = [[c(0.0, 0.0); 2]; 2];
    let mut out = Mat4c::zeros();
    for m in 0..3 {
        let coef: f64 = (0..3)
            .flat_map(|k| (0..3).map(move |l| (k, l)))
            .map(|(k, l)| crate::numeric::levi_civita(k, l, m) * w[(l, k)])
            .sum();
        if coef != 0.0 {
            out += block(sigma[m], zero, zero, sigma[m]) * c(0.0, coef / (4.0 * u));
        }
    }
    out
}

/// Largest entry modulus of a 4×4 complex matrix.
pub fn max_abs4(m: &Mat4c) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

/// Full geometric bundle of a frame at one event.
pub fn gamma_set_at(state: &FrameState, gauge: &Gauge, xp: &Vec3, u: f64) -> Result<GammaSet> {
    let fb = funfbein(state, gauge, xp, u)?;
    let m5 = metric_up(state, xp, u)?;
    let c5 = connection(state, xp, u);
    spin_connection(&fb, &m5, &c5, state, u)
}

/// Samples of `Γ'` at `±step, ±2 step` along each coordinate direction around an event.
#[derive(Debug, Clone)]
pub struct ConnectionStencil {
    pub center: Connection5,
    /// `samples[dir] = [Γ(−2h), Γ(−h), Γ(+h), Γ(+2h)]`.
    pub samples: [[Connection5; 4]; 5],
    pub step: f64,
}

impl ConnectionStencil {
    pub fn sample(spec: &FrameSpec, t: f64, xp: &Vec3, step: f64) -> Result<Self> {
        let u = spec.u;
        let at = |dir: usize, delta: f64| -> Result<Connection5> {
            match dir {
                0..=2 => {
                    let mut p = *xp;
                    p[dir] += delta;
                    Ok(connection(&spec.eval(t)?, &p, u))
                }
                T => Ok(connection(&spec.eval(t + delta / u)?, xp, u)),
                _ => Ok(connection(&spec.eval(t)?, xp, u)),
            }
        };
        let offsets = [-2.0, -1.0, 1.0, 2.0];
        let mut samples: Vec<[Connection5; 4]> = Vec::with_capacity(5);
        for dir in 0..5 {
            let v: Vec<Connection5> = offsets.iter().map(|o| at(dir, o * step)).collect::<Result<_>>()?;
            samples.push(v.try_into().expect("four offsets"));
        }
        Ok(Self {
            center: at(S, 0.0)?,
            samples: samples.try_into().expect("five directions"),
            step,
        })
    }
}

/// Largest component of the Riemann tensor assembled from a connection stencil.
pub fn riemann_flatness(stencil: &ConnectionStencil) -> f64 {
    let g = &stencil.center.gamma;
    let h = stencil.step;
    // dg[ν][λ][μ][ρ] = ∂_ν Γ^λ_{μρ}, order-4 central differences
    let mut dg = [[[[0.0; 5]; 5]; 5]; 5];
    for (nu, s) in stencil.samples.iter().enumerate() {
        for l in 0..5 {
            for m in 0..5 {
                for r in 0..5 {
                    dg[nu][l][m][r] = (s[0].gamma[l][m][r] - 8.0 * s[1].gamma[l][m][r] + 8.0 * s[2].gamma[l][m][r]
                        - s[3].gamma[l][m][r])
                        / (12.0 * h);
                }
            }
        }
    }
    let mut worst = 0.0_f64;
    for l in 0..5 {
        for m in 0..5 {
            for n in 0..5 {
                for r in 0..5 {
                    let mut v = dg[n][l][m][r] - dg[r][l][m][n];
                    for s in 0..5 {
                        v += g[l][n][s] * g[s][m][r] - g[l][r][s] * g[s][m][n];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{RotationFamily, TranslationFamily};
    use approx::assert_abs_diff_eq;

    fn anti(a: &Mat4c, b: &Mat4c) -> Mat4c {
        a * b + b * a
    }

    fn max4(m: &Mat4c) -> f64 {
        m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
    }

    #[test]
    fn flat_gammas_reproduce_eta() {
        let g = gamma_flat();
        let eta = eta();
        for a in 0..5 {
            for b in 0..5 {
                let target = Mat4c::identity() * c(2.0 * eta[(a, b)], 0.0);
                assert!(max4(&(anti(&g[a], &g[b]) - target)) < 1e-12, "({a},{b})");
            }
        }
        assert!(max4(&(anti(&g[0], &g[0]) - Mat4c::identity() * c(2.0, 0.0))) < 1e-15);
        assert!(max4(&anti(&g[T], &g[T])) < 1e-15);
        assert!(max4(&(anti(&g[T], &g[S]) + Mat4c::identity() * c(2.0, 0.0))) < 1e-15);
    }

    #[test]
    fn static_frame_geometry_is_flat() {
        let st = FrameSpec::inertial().eval(0.4).unwrap();
        let xp = Vec3::new(0.3, -1.0, 2.0);
        let m = metric_up(&st, &xp, 1.0).unwrap();
        assert_eq!(m.up, eta());
        assert_eq!(connection(&st, &xp, 1.0).max_abs(), 0.0);
        assert_eq!(funfbein_a(&st, &xp, 1.0).h, Matrix5::identity());
        let gs = gamma_set_at(&st, &Gauge::A, &xp, 1.0).unwrap();
        for mu in 0..5 {
            assert!(max4(&(gs.curved[mu] - gs.flat[mu])) < 1e-15);
            assert_eq!(max4(&gs.spin_conn[mu]), 0.0);
        }
    }

    #[test]
    fn metric_examples() {
        let st = FrameSpec::uniform_acceleration(Vec3::x()).eval(0.8).unwrap();
        let m = metric_up(&st, &Vec3::x(), 1.0).unwrap();
        assert_abs_diff_eq!(m.up[(S, S)], -2.0, epsilon = 1e-15);
        let st = FrameSpec::rotating(Vec3::z(), 0.5).unwrap().eval(0.6).unwrap();
        let m = metric_up(&st, &Vec3::x(), 1.0).unwrap();
        assert_abs_diff_eq!(m.up[(1, S)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.up[(0, S)], 0.0, epsilon = 1e-15);
        assert!((m.up * m.down - Matrix5::identity()).amax() < 1e-12);
    }

    #[test]
    fn connection_examples() {
        let st = FrameSpec::uniform_acceleration(Vec3::new(0.0, 0.0, 9.8)).eval(1.0).unwrap();
        let c5 = connection(&st, &Vec3::new(0.2, 0.1, -0.3), 1.0);
        assert_abs_diff_eq!(c5.gamma[2][T][T], -9.8, epsilon = 1e-13);
        // x ↦ x × ω̂ rotation convention fixes these signs (checked by the Jacobian oracle)
        let st = FrameSpec::rotating(Vec3::z(), 0.5).unwrap().eval(0.3).unwrap();
        let c5 = connection(&st, &Vec3::zeros(), 1.0);
        assert_abs_diff_eq!(c5.gamma[0][T][1], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c5.gamma[1][T][0], 0.5, epsilon = 1e-15);
        for l in 0..5 {
            for m in 0..5 {
                for n in 0..5 {
                    assert_eq!(c5.gamma[l][m][n], c5.gamma[l][n][m]);
                }
            }
        }
    }

    #[test]
    fn funfbein_examples() {
        let st = FrameSpec::uniform_acceleration(Vec3::x()).eval(2.0).unwrap();
        let fb = funfbein_a(&st, &Vec3::new(0.5, 0.0, 0.0), 1.0);
        assert_abs_diff_eq!(fb.h[(S, 0)], 2.0, epsilon = 1e-15);
        assert_eq!(fb.h[(T, T)], 1.0);
        assert_eq!(fb.h[(S, S)], 1.0);
        for i in 0..3 {
            assert_eq!(fb.h[(i, S)], 0.0);
            assert_eq!(fb.h[(T, i)], 0.0);
        }
        assert_eq!(fb.h[(T, S)], 0.0);

        let rbar = RotationFamily::about_axis(Vec3::z(), 1.0).unwrap().eval(std::f64::consts::FRAC_PI_2);
        let fbb = funfbein_b(&st, &rbar, &Vec3::new(0.5, 0.0, 0.0), 1.0).unwrap();
        // (h'⁵₁, h'⁵₂) = R̄ (2, 0)
        let rotated = rbar.r * Vec3::new(2.0, 0.0, 0.0);
        assert_abs_diff_eq!(fbb.h[(S, 0)], rotated[0], epsilon = 1e-15);
        assert_abs_diff_eq!(fbb.h[(S, 1)], rotated[1], epsilon = 1e-15);
        let identity = funfbein_b(&st, &RotationState::identity(), &Vec3::new(0.5, 0.0, 0.0), 1.0).unwrap();
        assert_eq!(identity.h, fb.h);
    }

    #[test]
    fn metric_identity_in_both_gauges() {
        let spec = FrameSpec::new(
            RotationFamily::about_axis(Vec3::new(0.3, -1.0, 0.4), 2.1).unwrap(),
            TranslationFamily::Polynomial(vec![
                Vec3::new(0.1, 0.2, 0.0),
                Vec3::new(0.0, -0.5, 0.3),
                Vec3::new(0.7, 0.0, 0.2),
                Vec3::new(0.0, 0.1, -0.4),
            ]),
            1.7,
            (-3.0, 3.0),
        )
        .unwrap();
        let st = spec.eval(0.9).unwrap();
        let xp = Vec3::new(1.1, -0.4, 0.8);
        let m = metric_up(&st, &xp, spec.u).unwrap();
        let rbar = RotationFamily::about_axis(Vec3::new(1.0, 1.0, 0.0), -0.8).unwrap().eval(0.9);
        for fb in [funfbein_a(&st, &xp, spec.u), funfbein_b(&st, &rbar, &xp, spec.u).unwrap()] {
            let g = fb.h * eta() * fb.h.transpose();
            assert!((g - m.up).amax() < 1e-12);
        }
    }

    #[test]
    fn spin_connection_rejects_mismatched_events() {
        let st = FrameSpec::uniform_acceleration(Vec3::x()).eval(1.0).unwrap();
        let fb = funfbein_a(&st, &Vec3::x(), 1.0);
        let m5 = metric_up(&st, &Vec3::y(), 1.0).unwrap();
        let c5 = connection(&st, &Vec3::x(), 1.0);
        assert!(matches!(spin_connection(&fb, &m5, &c5, &st, 1.0), Err(Error::Validation(_))));
        let mut fb = funfbein_a(&st, &Vec3::y(), 1.0);
        fb.gauge = Gauge::B(RotationFamily::about_axis(Vec3::z(), 1.0).unwrap().eval(0.3));
        let c5 = connection(&st, &Vec3::y(), 1.0);
        assert!(matches!(spin_connection(&fb, &m5, &c5, &st, 1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn gauge_b_spin_connection_lives_in_time_slot() {
        let spec = FrameSpec::uniform_acceleration(Vec3::new(0.3, 0.0, -0.2));
        let st = spec.eval(0.7).unwrap();
        let omega = 0.9;
        let rbar = RotationFamily::about_axis(Vec3::z(), omega).unwrap().eval(0.7);
        let gs = gamma_set_at(&st, &Gauge::B(rbar), &Vec3::new(0.4, -0.2, 0.1), 1.0).unwrap();
        for mu in [0, 1, 2, S] {
            assert!(max4(&gs.spin_conn[mu]) < 1e-12);
        }
        // Γ'₄ = (i/4u) ε_{klm} (Ṙ̄R̄ᵀ)_{lk} diag(σ_m, σ_m); for rotation about z this is −(i ω/2) diag(σ₃, σ₃)
        let s3 = pauli()[2];
        let expected = block(s3, [[c(0.0, 0.0); 2]; 2], [[c(0.0, 0.0); 2]; 2], s3) * c(0.0, -omega / 2.0);
        assert!(max4(&(gs.spin_conn[T] - expected)) < 1e-12);
        assert!(max4(&(gauge_b_time_component(&rbar, 1.0) - expected)) < 1e-12);
    }

    #[test]
    fn riemann_vanishes_on_simple_frames() {
        let xp = Vec3::new(0.5, -0.3, 0.2);
        let st = ConnectionStencil::sample(&FrameSpec::inertial(), 0.2, &xp, 1e-3).unwrap();
        assert_eq!(riemann_flatness(&st), 0.0);
        let st = ConnectionStencil::sample(&FrameSpec::uniform_acceleration(Vec3::x()), 0.2, &xp, 1e-3).unwrap();
        assert!(riemann_flatness(&st) <= 1e-6);
        let st = ConnectionStencil::sample(&FrameSpec::rotating(Vec3::z(), 0.5).unwrap(), 0.2, &xp, 1e-3).unwrap();
        assert!(riemann_flatness(&st) <= 1e-6);
    }
}
