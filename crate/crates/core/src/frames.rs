//! Frame motions `x' = R(t) x + A(t)` and the 5-dimensional Galilei maps.
//!
//! Coordinates are `(x¹, x², x³, x⁴, x⁵) = (x⃗, u t, s / u)`. A frame is a
//! rotation family `R(t)` together with a translation family `A(t)`; the
//! induced map on the fifth coordinate is the one fixed by requiring the
//! free Lagrangian `½ m ẋ² − m ṡ` to be invariant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    adaptive_simpson, central_derivatives, max_abs3, poly3_derivative, poly3_eval, poly3_norm_sq_integral,
    so3_exp, so3_hat, so3_vee, CubicSpline3, Mat3, Vec3,
};

/// Absolute tolerance of the `∫ |dÃ/dt|² dt` quadrature for spline families.
pub const QUADRATURE_TOL: f64 = 1e-10;

const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Time-dependent rotation `R(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RotationFamily {
    Constant(Mat3),
    /// `R(t) = exp(i ω⃗·J⃗ t)` with `ω⃗ = rate · axis`.
    ConstantRate { axis: Vec3, rate: f64 },
    /// Rotation vector `φ⃗(t)` sampled at knots; `R(t) = exp(i φ⃗(t)·J⃗)`.
    Spline(CubicSpline3),
}

/// Time-dependent translation `A(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TranslationFamily {
    Zero,
    /// Coefficients of `A(t) = c₀ + c₁ t + c₂ t² + c₃ t³`, lowest degree first.
    Polynomial(Vec<Vec3>),
    Spline(CubicSpline3),
}

/// `R` and its first three time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationState {
    pub r: Mat3,
    pub dr: Mat3,
    pub ddr: Mat3,
    pub dddr: Mat3,
}

impl RotationState {
    pub fn identity() -> Self {
        Self {
            r: Mat3::identity(),
            dr: Mat3::zeros(),
            ddr: Mat3::zeros(),
            dddr: Mat3::zeros(),
        }
    }

    /// `Ṙ Rᵀ`, antisymmetric for an orthogonal path.
    pub fn spin_matrix(&self) -> Mat3 {
        self.dr * self.r.transpose()
    }
}

impl RotationFamily {
    pub fn identity() -> Self {
        RotationFamily::Constant(Mat3::identity())
    }

    /// Rotation about the unit vector `axis` with angular velocity `rate · axis`.
    pub fn about_axis(axis: Vec3, rate: f64) -> Result<Self> {
        let norm = axis.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Validation("rotation axis must be a nonzero vector".into()));
        }
        if !rate.is_finite() {
            return Err(Error::Validation("rotation rate must be finite".into()));
        }
        Ok(RotationFamily::ConstantRate { axis: axis / norm, rate })
    }

    fn validate(&self) -> Result<()> {
        if let RotationFamily::Constant(r) = self {
            let dev = max_abs3(&(r * r.transpose() - Mat3::identity()));
            if dev > ORTHOGONALITY_TOL || (r.determinant() - 1.0).abs() > ORTHOGONALITY_TOL {
                return Err(Error::Validation(format!(
                    "constant rotation is not a proper orthogonal matrix (|RRᵀ - I| = {dev:.3e})"
                )));
            }
        }
        Ok(())
    }

    pub fn matrix_at(&self, t: f64) -> Mat3 {
        match self {
            RotationFamily::Constant(r) => *r,
            RotationFamily::ConstantRate { axis, rate } => so3_exp(&(axis * (rate * t))),
            RotationFamily::Spline(s) => so3_exp(&s.eval(t)),
        }
    }

    pub fn eval(&self, t: f64) -> RotationState {
        match self {
            RotationFamily::Constant(r) => RotationState {
                r: *r,
                dr: Mat3::zeros(),
                ddr: Mat3::zeros(),
                dddr: Mat3::zeros(),
            },
            RotationFamily::ConstantRate { axis, rate } => {
                let m = so3_hat(&(axis * *rate));
                let r = so3_exp(&(axis * (rate * t)));
                let dr = m * r;
                let ddr = m * dr;
                RotationState {
                    r,
                    dr,
                    ddr,
                    dddr: m * ddr,
                }
            }
            RotationFamily::Spline(_) => {
                let (dr, ddr, dddr) = central_derivatives(|s| self.matrix_at(s), t);
                RotationState {
                    r: self.matrix_at(t),
                    dr,
                    ddr,
                    dddr,
                }
            }
        }
    }
}

impl TranslationFamily {
    fn value(&self, t: f64) -> Vec3 {
        match self {
            TranslationFamily::Zero => Vec3::zeros(),
            TranslationFamily::Polynomial(c) => poly3_eval(c, t),
            TranslationFamily::Spline(s) => s.eval(t),
        }
    }

    /// `A` and its first three derivatives.
    fn eval(&self, t: f64) -> [Vec3; 4] {
        match self {
            TranslationFamily::Zero => [Vec3::zeros(); 4],
            TranslationFamily::Polynomial(c) => {
                let d1 = poly3_derivative(c);
                let d2 = poly3_derivative(&d1);
                let d3 = poly3_derivative(&d2);
                [poly3_eval(c, t), poly3_eval(&d1, t), poly3_eval(&d2, t), poly3_eval(&d3, t)]
            }
            TranslationFamily::Spline(_) => {
                let (d1, d2, d3) = central_derivatives(|s| self.value(s), t);
                [self.value(t), d1, d2, d3]
            }
        }
    }
}

/// Declarative frame motion.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub rotation: RotationFamily,
    pub translation: TranslationFamily,
    /// Velocity scale relating `x⁴ = u t` and `x⁵ = s / u`.
    pub u: f64,
    pub t_domain: (f64, f64),
}

impl FrameSpec {
    pub fn new(
        rotation: RotationFamily,
        translation: TranslationFamily,
        u: f64,
        t_domain: (f64, f64),
    ) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Validation(format!("velocity scale u must be positive, got {u}")));
        }
        let (t0, t1) = t_domain;
        if !(t0 <= t1) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::Validation(format!("invalid time domain [{t0}, {t1}]")));
        }
        if !(t0 <= 0.0 && 0.0 <= t1) {
            return Err(Error::Domain(format!(
                "time domain [{t0}, {t1}] must contain t = 0, where the x⁵ integral starts"
            )));
        }
        if let TranslationFamily::Polynomial(c) = &translation {
            if c.len() > 4 {
                return Err(Error::Validation("translation polynomial degree is limited to 3".into()));
            }
        }
        rotation.validate()?;
        Ok(Self {
            rotation,
            translation,
            u,
            t_domain,
        })
    }

    pub fn inertial() -> Self {
        Self::new(RotationFamily::identity(), TranslationFamily::Zero, 1.0, (-1e6, 1e6)).unwrap()
    }

    /// `R = I`, `A(t) = ½ a⃗ t²`.
    pub fn uniform_acceleration(a: Vec3) -> Self {
        Self::new(
            RotationFamily::identity(),
            TranslationFamily::Polynomial(vec![Vec3::zeros(), Vec3::zeros(), 0.5 * a]),
            1.0,
            (-1e6, 1e6),
        )
        .unwrap()
    }

    /// `R = I`, `A(t) = -v⃗ t`: a frame moving with velocity `v⃗`.
    pub fn boost(v: Vec3) -> Self {
        Self::new(
            RotationFamily::identity(),
            TranslationFamily::Polynomial(vec![Vec3::zeros(), -v]),
            1.0,
            (-1e6, 1e6),
        )
        .unwrap()
    }

    pub fn rotating(axis: Vec3, rate: f64) -> Result<Self> {
        Self::new(RotationFamily::about_axis(axis, rate)?, TranslationFamily::Zero, 1.0, (-1e6, 1e6))
    }

    pub fn with_u(mut self, u: f64) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Validation(format!("velocity scale u must be positive, got {u}")));
        }
        self.u = u;
        Ok(self)
    }

    pub fn with_domain(self, t_domain: (f64, f64)) -> Result<Self> {
        Self::new(self.rotation, self.translation, self.u, t_domain)
    }

    pub fn is_static(&self) -> bool {
        let rot_static = match &self.rotation {
            RotationFamily::Constant(_) => true,
            RotationFamily::ConstantRate { rate, .. } => *rate == 0.0,
            RotationFamily::Spline(_) => false,
        };
        let trans_static = match &self.translation {
            TranslationFamily::Zero => true,
            TranslationFamily::Polynomial(c) => c.iter().skip(1).all(|ck| ck.iter().all(|&v| v == 0.0)),
            TranslationFamily::Spline(_) => false,
        };
        rot_static && trans_static
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (t0, t1) = self.t_domain;
        if !(t >= t0 && t <= t1) {
            return Err(Error::Domain(format!("t = {t} outside frame domain [{t0}, {t1}]")));
        }
        Ok(())
    }

    /// `eval_frame`: all kinematic quantities of the frame at time `t`.
    pub fn eval(&self, t: f64) -> Result<FrameState> {
        self.check_time(t)?;
        let rot = self.rotation.eval(t);
        if let RotationFamily::Spline(_) = self.rotation {
            let dev = max_abs3(&(rot.r * rot.r.transpose() - Mat3::identity()));
            if dev > 1e-10 {
                return Err(Error::Validation(format!("rotation sample at t = {t} not orthogonal ({dev:.3e})")));
            }
        }
        let [a, da, dda, ddda] = self.translation.eval(t);
        Ok(FrameState::assemble(t, rot, [a, da, dda, ddda]))
    }

    /// `∫₀ᵗ |dÃ/dt|² dt'`, in closed form when the families allow it.
    pub fn tilde_velocity_integral(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let poly: Option<Vec<Vec3>> = match &self.translation {
            TranslationFamily::Zero => Some(vec![Vec3::zeros()]),
            TranslationFamily::Polynomial(c) => Some(c.clone()),
            TranslationFamily::Spline(_) => None,
        };
        match (&self.rotation, poly) {
            // |dÃ/dt| = |Ȧ| for constant R
            (RotationFamily::Constant(_), Some(c)) => Ok(poly3_norm_sq_integral(&poly3_derivative(&c), t)),
            // dÃ/dt = Rᵀ (Ȧ − M A) with M = Ṙ Rᵀ constant
            (RotationFamily::ConstantRate { axis, rate }, Some(c)) => {
                let m = so3_hat(&(axis * *rate));
                let d = poly3_derivative(&c);
                let p: Vec<Vec3> = (0..c.len())
                    .map(|k| d.get(k).copied().unwrap_or_else(Vec3::zeros) - m * c[k])
                    .collect();
                Ok(poly3_norm_sq_integral(&p, t))
            }
            _ => {
                let f = |s: f64| {
                    let rot = self.rotation.eval(s);
                    let [a, da, _, _] = self.translation.eval(s);
                    (rot.dr.transpose() * a + rot.r.transpose() * da).norm_squared()
                };
                let (value, _) = adaptive_simpson(f, 0.0, t, QUADRATURE_TOL)?;
                Ok(value)
            }
        }
    }

    /// `s' − s` for a point with inertial position `x` at time `t`.
    ///
    /// Equals `Ȧ̃·x + Ã·Ȧ̃ − ½ ∫₀ᵗ |Ȧ̃|²`, i.e. `u (x'⁵ − x⁵)`.
    pub fn s_shift(&self, state: &FrameState, x: &Vec3) -> Result<f64> {
        let integral = self.tilde_velocity_integral(state.t)?;
        Ok(state.dat.dot(x) + state.at.dot(&state.dat) - 0.5 * integral)
    }
}

/// Kinematics of a frame at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameState {
    pub t: f64,
    pub r: Mat3,
    pub dr: Mat3,
    pub ddr: Mat3,
    pub dddr: Mat3,
    pub a: Vec3,
    pub da: Vec3,
    pub dda: Vec3,
    pub ddda: Vec3,
    /// `Ã = Rᵀ A` and its derivatives.
    pub at: Vec3,
    pub dat: Vec3,
    pub ddat: Vec3,
    pub dddat: Vec3,
}

impl FrameState {
    fn assemble(t: f64, rot: RotationState, a: [Vec3; 4]) -> Self {
        let RotationState { r, dr, ddr, dddr } = rot;
        let (rt, drt, ddrt, dddrt) = (r.transpose(), dr.transpose(), ddr.transpose(), dddr.transpose());
        let [a0, a1, a2, a3] = a;
        Self {
            t,
            r,
            dr,
            ddr,
            dddr,
            a: a0,
            da: a1,
            dda: a2,
            ddda: a3,
            at: rt * a0,
            dat: drt * a0 + rt * a1,
            ddat: ddrt * a0 + 2.0 * drt * a1 + rt * a2,
            dddat: dddrt * a0 + 3.0 * ddrt * a1 + 3.0 * drt * a2 + rt * a3,
        }
    }

    /// `Ṙ Rᵀ`.
    pub fn spin_matrix(&self) -> Mat3 {
        self.dr * self.r.transpose()
    }

    pub fn rotation_state(&self) -> RotationState {
        RotationState {
            r: self.r,
            dr: self.dr,
            ddr: self.ddr,
            dddr: self.dddr,
        }
    }

    /// Inertial position of the frame point `x'`: `x = Rᵀ (x' − A)`.
    pub fn to_inertial(&self, xp: &Vec3) -> Vec3 {
        self.r.transpose() * (xp - self.a)
    }

    pub fn to_frame(&self, x: &Vec3) -> Vec3 {
        self.r * x + self.a
    }
}

/// Angular velocity `Ω⃗` defined by `Ṙ Rᵀ = i Ω⃗·J⃗`.
pub fn angular_velocity(rot: &RotationState) -> Result<Vec3> {
    let w = rot.spin_matrix();
    let asym = max_abs3(&(w + w.transpose()));
    if asym > 1e-10 * max_abs3(&w).max(1.0) {
        return Err(Error::Validation(format!("Ṙ Rᵀ is not antisymmetric (|W + Wᵀ| = {asym:.3e})")));
    }
    Ok(so3_vee(&w))
}

/// A point `(x⃗, x⁴, x⁵)` of the 5-dimensional Galilei space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event5 {
    pub x: [f64; 3],
    pub x4: f64,
    pub x5: f64,
}

impl Event5 {
    pub fn new(x: Vec3, x4: f64, x5: f64) -> Self {
        Self {
            x: [x[0], x[1], x[2]],
            x4,
            x5,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.x)
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.x[0], self.x[1], self.x[2], self.x4, self.x5]
    }

    pub fn from_array(c: [f64; 5]) -> Self {
        Self {
            x: [c[0], c[1], c[2]],
            x4: c[3],
            x5: c[4],
        }
    }

    /// `η_{μν} x^μ x^ν = x⃗² − 2 x⁴ x⁵`.
    pub fn quadratic_form(&self) -> f64 {
        self.position().norm_squared() - 2.0 * self.x4 * self.x5
    }
}

/// Inertial-to-inertial map with constant rotation `r` and boost velocity `v`.
pub fn transform_event_g5(r: &Mat3, v: &Vec3, u: f64, e: &Event5) -> Event5 {
    let rx = r * e.position();
    let x = rx - v * (e.x4 / u);
    let x5 = e.x5 - v.dot(&rx) / u + 0.5 * v.norm_squared() / (u * u) * e.x4;
    Event5::new(x, e.x4, x5)
}

/// Map from the inertial system to the frame described by `spec`.
pub fn transform_event_g5p(spec: &FrameSpec, e: &Event5) -> Result<Event5> {
    let u = spec.u;
    let state = spec.eval(e.x4 / u)?;
    let x = e.position();
    let xp = state.r * x + state.a;
    let shift = spec.s_shift(&state, &x)?;
    Ok(Event5::new(xp, e.x4, e.x5 + shift / u))
}

/// Inverse of [`transform_event_g5p`]: from frame coordinates back to the inertial system.
pub fn inverse_event_g5p(spec: &FrameSpec, ep: &Event5) -> Result<Event5> {
    let u = spec.u;
    let state = spec.eval(ep.x4 / u)?;
    let x = state.to_inertial(&ep.position());
    let shift = spec.s_shift(&state, &x)?;
    Ok(Event5::new(x, ep.x4, ep.x5 - shift / u))
}
