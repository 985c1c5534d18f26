//! FFT-based operations on a single complex field sampled on a [`GridSpec`].

use std::cell::RefCell;
use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::numeric::{Mat3, Vec3};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Visits every line along `axis`, handing `f` the flat index of its first point and a
/// contiguous copy of its values. The copy is written back afterwards.
pub fn for_each_line<F>(data: &mut [Complex64], grid: &GridSpec, axis: usize, mut f: F)
where
    F: FnMut(usize, &mut [Complex64]),
{
    let n = grid.n[axis];
    let stride = grid.stride(axis);
    let outer = grid.len() / (n * stride);
    if stride == 1 {
        for o in 0..outer {
            let start = o * n;
            f(start, &mut data[start..start + n]);
        }
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        for i in 0..stride {
            let start = o * n * stride + i;
            for (j, v) in line.iter_mut().enumerate() {
                *v = data[start + j * stride];
            }
            f(start, &mut line);
            for (j, v) in line.iter().enumerate() {
                data[start + j * stride] = *v;
            }
        }
    }
}

/// Transforms each line along `axis` to Fourier space, lets `f` modify the spectrum, and
/// transforms back.
pub fn filter_lines<F>(data: &mut [Complex64], grid: &GridSpec, axis: usize, mut f: F)
where
    F: FnMut(usize, &mut [Complex64]),
{
    let n = grid.n[axis];
    let fwd = plan(n, false);
    let inv = plan(n, true);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
    let norm = 1.0 / n as f64;
    for_each_line(data, grid, axis, |start, line| {
        fwd.process_with_scratch(line, &mut scratch);
        f(start, line);
        inv.process_with_scratch(line, &mut scratch);
        for v in line.iter_mut() {
            *v *= norm;
        }
    });
}

/// In-place FFT over every gridded axis; the inverse is normalized.
pub fn fft(data: &mut [Complex64], grid: &GridSpec, inverse: bool) {
    for axis in 0..grid.dim {
        let p = plan(grid.n[axis], inverse);
        let mut scratch = vec![Complex64::new(0.0, 0.0); p.get_inplace_scratch_len()];
        for_each_line(data, grid, axis, |_, line| p.process_with_scratch(line, &mut scratch));
    }
    if inverse {
        let norm = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= norm);
    }
}

/// Multiplies the full spectrum by `f(k⃗)`.
pub fn apply_multiplier<F>(data: &mut [Complex64], grid: &GridSpec, f: F)
where
    F: Fn(&Vec3) -> Complex64,
{
    fft(data, grid, false);
    for (flat, v) in data.iter_mut().enumerate() {
        let idx = grid.unravel(flat);
        let mut k = Vec3::zeros();
        for a in 0..grid.dim {
            k[a] = grid.wavenumber(a, idx[a]);
        }
        *v *= f(&k);
    }
    fft(data, grid, true);
}

/// `∂ψ/∂x_axis`, with the Nyquist mode dropped.
pub fn derivative(data: &[Complex64], grid: &GridSpec, axis: usize) -> Vec<Complex64> {
    let mut out = data.to_vec();
    if axis >= grid.dim {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        return out;
    }
    let n = grid.n[axis];
    let ik: Vec<Complex64> = (0..n)
        .map(|i| {
            if grid.is_nyquist(axis, i) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.wavenumber(axis, i))
            }
        })
        .collect();
    filter_lines(&mut out, grid, axis, |_, s| {
        for (v, m) in s.iter_mut().zip(&ik) {
            *v *= m;
        }
    });
    out
}

/// `∇²ψ` as `−|k|²` in Fourier space.
pub fn laplacian(data: &[Complex64], grid: &GridSpec) -> Vec<Complex64> {
    let mut out = data.to_vec();
    apply_multiplier(&mut out, grid, |k| Complex64::new(-k.norm_squared(), 0.0));
    out
}

/// Exact free flow `exp(−i c |k|²)`; for Schrödinger evolution `c = ħ dt / 2m`.
pub fn kinetic_flow(data: &mut [Complex64], grid: &GridSpec, c: f64) {
    apply_multiplier(data, grid, |k| Complex64::from_polar(1.0, -c * k.norm_squared()));
}

/// `ψ(x⃗) ↦ ψ(x⃗ − δ⃗)` along the gridded axes.
pub fn translate(data: &mut [Complex64], grid: &GridSpec, shift: &Vec3) {
    for axis in 0..grid.dim {
        let d = shift[axis];
        if d == 0.0 {
            continue;
        }
        let phase: Vec<Complex64> = (0..grid.n[axis])
            .map(|i| Complex64::from_polar(1.0, -grid.wavenumber(axis, i) * d))
            .collect();
        filter_lines(data, grid, axis, |_, s| {
            for (v, p) in s.iter_mut().zip(&phase) {
                *v *= p;
            }
        });
    }
}

/// `ψ(x⃗) ↦ ψ(x⃗ − c x_along ê_axis)`.
pub fn shear(data: &mut [Complex64], grid: &GridSpec, axis: usize, along: usize, c: f64) {
    let n = grid.n[axis];
    let k: Vec<f64> = (0..n).map(|i| grid.wavenumber(axis, i)).collect();
    filter_lines(data, grid, axis, |start, s| {
        let d = c * grid.coord(along, grid.unravel(start)[along]);
        for (v, kk) in s.iter_mut().zip(&k) {
            *v *= Complex64::from_polar(1.0, -kk * d);
        }
    });
}

/// Rotates the content of the `(a, b)` plane by `θ` (taking `ê_a` towards `ê_b`), as
/// three shears per piece of at most π/4.
pub fn rotate_plane(data: &mut [Complex64], grid: &GridSpec, a: usize, b: usize, theta: f64) {
    if theta == 0.0 {
        return;
    }
    let pieces = (theta.abs() / FRAC_PI_4).ceil().max(1.0) as usize;
    let phi = theta / pieces as f64;
    let alpha = -(0.5 * phi).tan();
    let beta = phi.sin();
    for _ in 0..pieces {
        shear(data, grid, a, b, alpha);
        shear(data, grid, b, a, beta);
        shear(data, grid, a, b, alpha);
    }
}

/// Tolerance on the structure of rotations passed to [`rotate`].
pub const ROTATION_TOL: f64 = 1e-12;

/// `ψ(x⃗) ↦ ψ(qᵀ x⃗)`: the content is actively rotated by `q`.
///
/// A 1-D grid accepts only rotations fixing its axis and a 2-D grid only rotations about
/// the third axis. 3-D rotations go through z-y-z Euler angles.
pub fn rotate(data: &mut [Complex64], grid: &GridSpec, q: &Mat3) -> Result<()> {
    match grid.dim {
        1 => {
            if (q[(0, 0)] - 1.0).abs() > ROTATION_TOL {
                return Err(Error::Configuration(
                    "a 1-D grid cannot represent a rotation that moves its axis".into(),
                ));
            }
        }
        2 => {
            if (q[(2, 2)] - 1.0).abs() > ROTATION_TOL {
                return Err(Error::Configuration(
                    "a 2-D grid can only represent rotations about the third axis".into(),
                ));
            }
            rotate_plane(data, grid, 0, 1, q[(1, 0)].atan2(q[(0, 0)]));
        }
        _ => {
            let (alpha, beta, gamma) = euler_zyz(q);
            rotate_plane(data, grid, 0, 1, gamma);
            rotate_plane(data, grid, 2, 0, beta);
            rotate_plane(data, grid, 0, 1, alpha);
        }
    }
    Ok(())
}

/// Angles with `q = R_z(α) R_y(β) R_z(γ)`.
pub fn euler_zyz(q: &Mat3) -> (f64, f64, f64) {
    let sb = (q[(0, 2)].powi(2) + q[(1, 2)].powi(2)).sqrt();
    let beta = sb.atan2(q[(2, 2)]);
    if sb > 1e-9 {
        (q[(1, 2)].atan2(q[(0, 2)]), beta, q[(2, 1)].atan2(-q[(2, 0)]))
    } else if q[(2, 2)] > 0.0 {
        (q[(1, 0)].atan2(q[(0, 0)]), 0.0, 0.0)
    } else {
        ((-q[(1, 0)]).atan2(-q[(0, 0)]), std::f64::consts::PI, 0.0)
    }
}
