//! Independent finite-difference reconstruction of the frame geometry.
//!
//! Everything here is computed from the event maps alone: the Jacobian
//! `Λ = ∂x'/∂x` of [`transform_event_g5p`] is the gauge-A fünfbein, `Λ η Λᵀ` is
//! the metric, and `Γ'^λ_{μν} = Λ^λ_α ∂²x^α/∂x'^μ∂x'^ν` with second derivatives of
//! [`inverse_event_g5p`] is the connection. Differentiating the inverse map keeps
//! the large velocity entries of `Λ⁻¹` out of the round-off budget.

use crate::error::Result;
use crate::frames::{inverse_event_g5p, transform_event_g5p, Event5, FrameSpec};
use crate::geometry::{eta, Matrix5};
use crate::numeric::Vec3;

/// Default step for the Jacobian stencils (in coordinate units).
pub const JACOBIAN_STEP: f64 = 2e-3;

#[derive(Debug, Clone)]
pub struct JacobianOracle {
    pub funfbein: Matrix5,
    pub metric_up: Matrix5,
    pub connection: [[[f64; 5]; 5]; 5],
}

fn map(spec: &FrameSpec, x: &[f64; 5]) -> Result<[f64; 5]> {
    Ok(transform_event_g5p(spec, &Event5::from_array(*x))?.as_array())
}

fn unmap(spec: &FrameSpec, xp: &[f64; 5]) -> Result<[f64; 5]> {
    Ok(inverse_event_g5p(spec, &Event5::from_array(*xp))?.as_array())
}

fn shifted(x: &[f64; 5], moves: &[(usize, f64)]) -> [f64; 5] {
    let mut y = *x;
    for &(k, d) in moves {
        y[k] += d;
    }
    y
}

/// Sixth-order central first-derivative weights, denominator `60 h`.
const D1: [(f64, f64); 6] = [(-3.0, -1.0), (-2.0, 9.0), (-1.0, -45.0), (1.0, 45.0), (2.0, -9.0), (3.0, 1.0)];
/// Sixth-order central second-derivative weights without the centre, denominator `180 h²`.
const D2: [(f64, f64); 6] = [(-3.0, 2.0), (-2.0, -27.0), (-1.0, 270.0), (1.0, 270.0), (2.0, -27.0), (3.0, 2.0)];
const D2_CENTRE: f64 = -490.0;

/// Geometry of `spec` at frame time `t` and frame position `xp`, by finite differences.
pub fn jacobian_oracle(spec: &FrameSpec, t: f64, xp: &Vec3, step: f64) -> Result<JacobianOracle> {
    let ep = Event5::new(*xp, spec.u * t, 0.0);
    let x = inverse_event_g5p(spec, &ep)?.as_array();
    let h = step;

    let mut lam = Matrix5::zeros();
    for a in 0..5 {
        let mut acc = [0.0; 5];
        for (o, w) in D1 {
            let f = map(spec, &shifted(&x, &[(a, o * h)]))?;
            for m in 0..5 {
                acc[m] += w * f[m];
            }
        }
        for m in 0..5 {
            lam[(m, a)] = acc[m] / (60.0 * h);
        }
    }

    let xp0 = ep.as_array();
    let f0 = unmap(spec, &xp0)?;
    let mut second = [[[0.0; 5]; 5]; 5];
    for a in 0..5 {
        for b in a..5 {
            let mut acc = [0.0; 5];
            if a == b {
                for (o, w) in D2 {
                    let f = unmap(spec, &shifted(&xp0, &[(a, o * h)]))?;
                    for l in 0..5 {
                        acc[l] += w * f[l];
                    }
                }
                for l in 0..5 {
                    acc[l] = (acc[l] + D2_CENTRE * f0[l]) / (180.0 * h * h);
                }
            } else {
                for (oa, wa) in D1 {
                    for (ob, wb) in D1 {
                        let f = unmap(spec, &shifted(&xp0, &[(a, oa * h), (b, ob * h)]))?;
                        for l in 0..5 {
                            acc[l] += wa * wb * f[l];
                        }
                    }
                }
                for v in acc.iter_mut() {
                    *v /= 3600.0 * h * h;
                }
            }
            second[a][b] = acc;
            second[b][a] = acc;
        }
    }

    let mut connection = [[[0.0; 5]; 5]; 5];
    for (l, gl) in connection.iter_mut().enumerate() {
        for m in 0..5 {
            for n in 0..5 {
                gl[m][n] = (0..5).map(|a| lam[(l, a)] * second[m][n][a]).sum();
            }
        }
    }
    Ok(JacobianOracle {
        funfbein: lam,
        metric_up: lam * eta() * lam.transpose(),
        connection,
    })
}
