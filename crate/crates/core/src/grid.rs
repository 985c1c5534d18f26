//! Uniform periodic Cartesian grids centred on the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Vec3;

pub const MIN_POINTS: usize = 16;

/// `dim` gridded axes, the first `dim` entries of `n` and `box_length` are used.
///
/// Points are `x_i = (i − n/2) dx` with `dx = L / n` and values are stored in
/// C order (last axis contiguous).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: [usize; 3],
    pub box_length: [f64; 3],
}

impl GridSpec {
    pub fn new(dim: usize, n: &[usize], box_length: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Validation(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if n.len() != dim || box_length.len() != dim {
            return Err(Error::Validation(format!(
                "grid needs {dim} point counts and box lengths, got {} and {}",
                n.len(),
                box_length.len()
            )));
        }
        let mut spec = Self {
            dim,
            n: [1; 3],
            box_length: [0.0; 3],
        };
        for a in 0..dim {
            if n[a] < MIN_POINTS || !n[a].is_power_of_two() {
                return Err(Error::Validation(format!(
                    "axis {a}: point count must be a power of two ≥ {MIN_POINTS}, got {}",
                    n[a]
                )));
            }
            if !(box_length[a] > 0.0) || !box_length[a].is_finite() {
                return Err(Error::Validation(format!("axis {a}: box length must be positive, got {}", box_length[a])));
            }
            spec.n[a] = n[a];
            spec.box_length[a] = box_length[a];
        }
        Ok(spec)
    }

    /// Same point count and box length on every axis.
    pub fn cubic(dim: usize, n: usize, box_length: f64) -> Result<Self> {
        Self::new(dim, &vec![n; dim], &vec![box_length; dim])
    }

    pub fn len(&self) -> usize {
        self.n[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self, axis: usize) -> f64 {
        self.box_length[axis] / self.n[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.dx(a)).product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        (i as f64 - (self.n[axis] / 2) as f64) * self.dx(axis)
    }

    /// Signed angular wavenumber of FFT bin `i`; the Nyquist bin maps to `−π/dx`.
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        let n = self.n[axis];
        let j = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
        2.0 * std::f64::consts::PI * j / self.box_length[axis]
    }

    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        i == self.n[axis] / 2
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..self.dim].iter().product()
    }

    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rem % self.n[a];
            rem /= self.n[a];
        }
        idx
    }

    /// Position of a flat index; ungridded coordinates are zero.
    pub fn position(&self, flat: usize) -> Vec3 {
        let idx = self.unravel(flat);
        let mut x = Vec3::zeros();
        for a in 0..self.dim {
            x[a] = self.coord(a, idx[a]);
        }
        x
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(|i| self.position(i))
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        (0..self.dim).all(|a| x[a].abs() <= 0.5 * self.box_length[a])
    }

    /// Whether a flat index lies within `cells` cells of any box edge.
    pub fn near_boundary(&self, flat: usize, cells: usize) -> bool {
        let idx = self.unravel(flat);
        (0..self.dim).any(|a| idx[a] < cells || idx[a] + cells >= self.n[a])
    }

    /// The grid with twice the points per axis on the same box.
    pub fn refined(&self) -> Self {
        let mut g = *self;
        for a in 0..self.dim {
            g.n[a] *= 2;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_coordinates() {
        let g = GridSpec::new(3, &[16, 32, 64], &[4.0, 8.0, 16.0]).unwrap();
        assert_eq!(g.len(), 16 * 32 * 64);
        assert_eq!(g.stride(2), 1);
        assert_eq!(g.stride(0), 32 * 64);
        let flat = 3 * 32 * 64 + 5 * 64 + 7;
        assert_eq!(g.unravel(flat), [3, 5, 7]);
        assert_eq!(g.coord(0, 8), 0.0);
        assert_eq!(g.coord(0, 0), -2.0);
        assert_eq!(g.position(flat), Vec3::new(-1.25, -2.75, -6.25));
        assert!(!g.near_boundary(flat, 2));
        assert!(g.near_boundary(1, 2));
        assert_eq!(g.wavenumber(0, 8), -2.0 * std::f64::consts::PI * 8.0 / 4.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::cubic(0, 16, 1.0).is_err());
        assert!(GridSpec::cubic(4, 16, 1.0).is_err());
        assert!(GridSpec::cubic(1, 8, 1.0).is_err());
        assert!(GridSpec::cubic(1, 48, 1.0).is_err());
        assert!(GridSpec::cubic(2, 16, 0.0).is_err());
        assert!(GridSpec::new(2, &[16], &[1.0, 1.0]).is_err());
    }
}
