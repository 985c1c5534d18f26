//! Small numerical building blocks shared by the frame and geometry code.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Levi-Civita symbol on 0-based indices, `levi_civita(0, 1, 2) == 1`.
pub fn levi_civita(k: usize, l: usize, m: usize) -> f64 {
    match (k, l, m) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// The matrix `i v·J` with generators `(iJ_k)^l_m = ε_{klm}`.
pub fn so3_hat(v: &Vec3) -> Mat3 {
    let mut m = Mat3::zeros();
    for l in 0..3 {
        for n in 0..3 {
            m[(l, n)] = (0..3).map(|k| v[k] * levi_civita(k, l, n)).sum();
        }
    }
    m
}

/// Inverse of [`so3_hat`] applied to the antisymmetric part of `w`.
pub fn so3_vee(w: &Mat3) -> Vec3 {
    Vec3::from_fn(|k, _| {
        let mut acc = 0.0;
        for l in 0..3 {
            for n in 0..3 {
                acc += levi_civita(k, l, n) * w[(l, n)];
            }
        }
        0.5 * acc
    })
}

/// `exp(i v·J)`, evaluated with the Rodrigues formula.
///
/// Since `(i v·J) x = x × v`, this is the active rotation by `-|v|` about `v`.
pub fn so3_exp(v: &Vec3) -> Mat3 {
    let theta = v.norm();
    let k = so3_hat(v);
    if theta < 1e-8 {
        // series through second order; the remainder is below 1e-24
        return Mat3::identity() + k + 0.5 * k * k;
    }
    Mat3::identity() + (theta.sin() / theta) * k + ((1.0 - theta.cos()) / (theta * theta)) * k * k
}

/// Natural cubic spline through `(times[i], values[i])`, vector valued.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline3 {
    times: Vec<f64>,
    values: Vec<Vec3>,
    second: Vec<Vec3>,
}

impl CubicSpline3 {
    pub fn new(times: Vec<f64>, values: Vec<Vec3>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Validation(format!(
                "spline has {} knots but {} samples",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::Validation("spline needs at least two knots".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("spline knots must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Validation("spline samples must be finite".into()));
        }
        let n = times.len();
        let mut second = vec![Vec3::zeros(); n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let mut diag = vec![0.0; n];
            let mut rhs = vec![Vec3::zeros(); n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = times[i] - times[i - 1];
                let h1 = times[i + 1] - times[i];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
                if i > 1 {
                    let w = h0 / diag[i - 1];
                    diag[i] -= w * upper[i - 1];
                    let prev = rhs[i - 1];
                    rhs[i] -= w * prev;
                }
            }
            for i in (1..n - 1).rev() {
                let next = if i + 1 < n - 1 { second[i + 1] } else { Vec3::zeros() };
                second[i] = (rhs[i] - upper[i] * next) / diag[i];
            }
        }
        Ok(Self {
            times,
            values,
            second,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    /// Evaluates the spline; outside the knots the end pieces are continued.
    pub fn eval(&self, t: f64) -> Vec3 {
        let n = self.times.len();
        let i = match self.times.iter().position(|&tk| tk > t) {
            Some(0) => 0,
            Some(p) => (p - 1).min(n - 2),
            None => n - 2,
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * (h * h / 6.0)
    }
}

/// Step used by the order-4 central difference stencils for first and second derivatives.
pub const FD_STEP: f64 = 2e-3;
/// Step for the third-derivative stencil, which loses more digits to cancellation.
pub const FD_STEP_THIRD: f64 = 1e-2;

/// First, second and third derivatives at `t` from order-4 central stencils.
pub fn central_derivatives<T, F>(f: F, t: f64) -> (T, T, T)
where
    F: Fn(f64) -> T,
    T: std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + Clone,
{
    let h = FD_STEP;
    let (m2, m1, z, p1, p2) = (f(t - 2.0 * h), f(t - h), f(t), f(t + h), f(t + 2.0 * h));
    let d1 = (m2.clone() - m1.clone() * 8.0 + p1.clone() * 8.0 - p2.clone()) * (1.0 / (12.0 * h));
    let d2 = (m1 * 16.0 - m2 - z * 30.0 + p1 * 16.0 - p2) * (1.0 / (12.0 * h * h));
    let h3 = FD_STEP_THIRD;
    let s = |k: f64| f(t + k * h3);
    let d3 = (s(-3.0) - s(-2.0) * 8.0 + s(-1.0) * 13.0 - s(1.0) * 13.0 + s(2.0) * 8.0 - s(3.0))
        * (1.0 / (8.0 * h3 * h3 * h3));
    (d1, d2, d3)
}

/// Adaptive Simpson quadrature to an absolute tolerance.
///
/// Returns the integral and the accumulated error estimate; fails if the
/// recursion depth is exhausted before the tolerance is met.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    const MAX_DEPTH: u32 = 48;
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        budget: &mut u32,
        ok: &mut bool,
    ) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return (left + right + delta / 15.0, delta.abs() / 15.0);
        }
        if depth == 0 || *budget == 0 {
            *ok = false;
            return (left + right + delta / 15.0, delta.abs() / 15.0);
        }
        *budget -= 1;
        let (l, el) = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget, ok);
        let (r, er) = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget, ok);
        (l + r, el + er)
    }

    if a == b {
        return Ok((0.0, 0.0));
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut ok = true;
    let mut budget = 200_000;
    let (value, err) = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut budget, &mut ok);
    if !ok || !value.is_finite() {
        return Err(Error::numeric("adaptive quadrature did not converge", err));
    }
    Ok((value, err))
}

/// Polynomial with vector coefficients, lowest degree first.
pub(crate) fn poly3_eval(c: &[Vec3], t: f64) -> Vec3 {
    c.iter().rev().fold(Vec3::zeros(), |acc, ck| acc * t + ck)
}

pub(crate) fn poly3_derivative(c: &[Vec3]) -> Vec<Vec3> {
    c.iter().enumerate().skip(1).map(|(k, ck)| ck * k as f64).collect()
}

/// `∫₀ᵗ |p(τ)|² dτ` for a vector polynomial `p`, exactly.
pub(crate) fn poly3_norm_sq_integral(c: &[Vec3], t: f64) -> f64 {
    let mut acc = 0.0;
    for (i, ci) in c.iter().enumerate() {
        for (j, cj) in c.iter().enumerate() {
            let p = (i + j + 1) as i32;
            acc += ci.dot(cj) * t.powi(p) / p as f64;
        }
    }
    acc
}

pub fn max_abs3(m: &Mat3) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}
