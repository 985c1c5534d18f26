//! Grid wavefunctions, frame transport and observables.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{FrameSpec, FrameState};
use crate::grid::GridSpec;
use crate::numeric::Vec3;
use crate::spectral;

/// Mass and reduced Planck constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub m: f64,
    pub hbar: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { m: 1.0, hbar: 1.0 }
    }
}

/// Scalar (`1` component) or two-component spinor field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub grid: GridSpec,
    pub comps: Vec<Vec<Complex64>>,
    pub t: f64,
    pub frame_tag: String,
}

/// Isotropic Gaussian `(2πσ²)^(−d/4) exp(−|x⃗ − c⃗|²/4σ² + i p⃗·(x⃗ − c⃗)/ħ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    #[serde(default)]
    pub center: [f64; 3],
    pub width: f64,
    #[serde(default)]
    pub momentum: [f64; 3],
}

/// Minimum Gaussian width in grid cells.
pub const MIN_WIDTH_CELLS: f64 = 8.0;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl GridWavefunction {
    pub fn zeros(grid: GridSpec, components: usize, t: f64, frame_tag: impl Into<String>) -> Result<Self> {
        if components != 1 && components != 2 {
            return Err(Error::Validation(format!("wavefunctions have 1 or 2 components, got {components}")));
        }
        Ok(Self {
            grid,
            comps: vec![vec![zero(); grid.len()]; components],
            t,
            frame_tag: frame_tag.into(),
        })
    }

    pub fn from_components(
        grid: GridSpec,
        comps: Vec<Vec<Complex64>>,
        t: f64,
        frame_tag: impl Into<String>,
    ) -> Result<Self> {
        if comps.is_empty() || comps.len() > 2 || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Validation("component count or length does not match the grid".into()));
        }
        if comps.iter().flatten().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Validation("wavefunction contains non-finite values".into()));
        }
        Ok(Self {
            grid,
            comps,
            t,
            frame_tag: frame_tag.into(),
        })
    }

    /// Gaussian packet; a spinor is built when `spin` gives the (normalized) spin state.
    pub fn gaussian(
        grid: GridSpec,
        g: &GaussianSpec,
        spin: Option<[Complex64; 2]>,
        units: Units,
        frame_tag: impl Into<String>,
    ) -> Result<Self> {
        let min_dx = (0..grid.dim).map(|a| grid.dx(a)).fold(0.0_f64, f64::max);
        if !(g.width >= MIN_WIDTH_CELLS * min_dx) {
            return Err(Error::Validation(format!(
                "Gaussian width {} is below {MIN_WIDTH_CELLS} grid cells ({})",
                g.width,
                MIN_WIDTH_CELLS * min_dx
            )));
        }
        let c = Vec3::from(g.center);
        let p = Vec3::from(g.momentum);
        let amp = (2.0 * std::f64::consts::PI * g.width * g.width).powf(-(grid.dim as f64) / 4.0);
        let base: Vec<Complex64> = grid
            .positions()
            .map(|x| {
                let mut d = x - c;
                for a in grid.dim..3 {
                    d[a] = 0.0;
                }
                Complex64::from_polar(amp * (-d.norm_squared() / (4.0 * g.width * g.width)).exp(), p.dot(&d) / units.hbar)
            })
            .collect();
        let comps = match spin {
            None => vec![base],
            Some(s) => {
                let n = (s[0].norm_sqr() + s[1].norm_sqr()).sqrt();
                if !(n > 0.0) {
                    return Err(Error::Validation("spin state must be nonzero".into()));
                }
                s.iter().map(|sv| base.iter().map(|b| b * (sv / n)).collect()).collect()
            }
        };
        Self::from_components(grid, comps, 0.0, frame_tag)
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    pub fn is_spinor(&self) -> bool {
        self.comps.len() == 2
    }

    /// `⟨self|other⟩ = Σ ψ*φ dⁿx`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let dv = self.grid.cell_volume();
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>())
            .sum::<Complex64>()
            * dv
    }

    pub fn norm_sq(&self) -> f64 {
        let dv = self.grid.cell_volume();
        self.comps.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() * dv
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Validation(format!("cannot normalize a state of norm {n}")));
        }
        self.comps.iter_mut().flatten().for_each(|v| *v /= n);
        Ok(())
    }

    pub fn l2_distance(&self, other: &Self) -> f64 {
        let dv = self.grid.cell_volume();
        (self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * dv)
            .sqrt()
    }

    /// Probability within `cells` grid cells of the box edge.
    pub fn boundary_mass(&self, cells: usize) -> f64 {
        let dv = self.grid.cell_volume();
        let mut m = 0.0;
        for c in &self.comps {
            for (i, v) in c.iter().enumerate() {
                if self.grid.near_boundary(i, cells) {
                    m += v.norm_sqr();
                }
            }
        }
        m * dv
    }

    /// Fraction of spectral weight in the outer fifth of the band on any axis.
    pub fn band_edge_fraction(&self) -> f64 {
        let (mut edge, mut total) = (0.0, 0.0);
        for c in &self.comps {
            let mut s = c.clone();
            spectral::fft(&mut s, &self.grid, false);
            for (i, v) in s.iter().enumerate() {
                let idx = self.grid.unravel(i);
                let w = v.norm_sqr();
                total += w;
                let outer = (0..self.grid.dim).any(|a| {
                    let n = self.grid.n[a];
                    let j = if idx[a] < n / 2 { idx[a] } else { n - idx[a] };
                    j as f64 > 0.4 * n as f64
                });
                if outer {
                    edge += w;
                }
            }
        }
        if total > 0.0 {
            edge / total
        } else {
            0.0
        }
    }
}

/// Band-limited random field: Fourier modes with `|j| < fraction · n/2` on every axis.
pub fn random_band_limited(grid: &GridSpec, components: usize, fraction: f64, seed: u64) -> GridWavefunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..components)
        .map(|_| {
            let mut s: Vec<Complex64> = (0..grid.len())
                .map(|i| {
                    let idx = grid.unravel(i);
                    let inside = (0..grid.dim).all(|a| {
                        let n = grid.n[a];
                        let j = if idx[a] < n / 2 { idx[a] } else { n - idx[a] };
                        (j as f64) < fraction * (n / 2) as f64
                    });
                    let (re, im): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    if inside {
                        Complex64::new(re, im)
                    } else {
                        zero()
                    }
                })
                .collect();
            spectral::fft(&mut s, grid, true);
            s
        })
        .collect();
    let mut psi = GridWavefunction {
        grid: *grid,
        comps,
        t: 0.0,
        frame_tag: "random".into(),
    };
    psi.normalize().expect("random field is nonzero");
    psi
}

/// Largest violation of `(iħ ∂'₅ − m u) φ' = 0` for `φ' = exp(−i m s'/ħ) ψ'` at the
/// sampled `s'` values, with `∂'₅ = u ∂/∂s'` applied to the peel factor analytically.
pub fn peel_phase_check(units: Units, u: f64, psi: &[Complex64], s_samples: &[f64]) -> f64 {
    let Units { m, hbar } = units;
    let d5 = Complex64::new(0.0, hbar) * u * Complex64::new(0.0, -m / hbar);
    let mut worst = 0.0_f64;
    for &s in s_samples {
        let peel = Complex64::from_polar(1.0, -m * s / hbar);
        for v in psi {
            let phi = peel * v;
            worst = worst.max((d5 * phi - m * u * phi).norm());
        }
    }
    worst
}

/// Result of moving a wavefunction between frames.
#[derive(Debug, Clone)]
pub struct Transported {
    pub psi: GridWavefunction,
    /// Probability carried outside the target box by the coordinate map.
    pub mass_loss: f64,
}

/// Band-edge weight above which transported states count as under-resolved.
pub const BAND_EDGE_TOL: f64 = 1e-8;
/// Mass loss above which transport logs a truncation warning.
pub const MASS_LOSS_WARN: f64 = 1e-10;

const SLICE_TOL: f64 = 1e-12;

fn check_slice(state: &FrameState, grid: &GridSpec) -> Result<()> {
    for k in grid.dim..3 {
        if state.a[k].abs() > SLICE_TOL || state.dat[k].abs() > SLICE_TOL || state.ddat[k].abs() > SLICE_TOL {
            return Err(Error::Configuration(format!(
                "frame translation along ungridded axis {k} cannot be represented on a {}-D grid",
                grid.dim
            )));
        }
    }
    Ok(())
}

/// `m (s' − s)/ħ` at frame positions; `s' − s = Ȧ̃·Rᵀx' − ½∫₀ᵗ|Ȧ̃|²`.
fn transport_phase(spec: &FrameSpec, state: &FrameState, grid: &GridSpec, units: Units) -> Result<Vec<f64>> {
    let half_integral = 0.5 * spec.tilde_velocity_integral(state.t)?;
    let w = state.r * state.dat;
    Ok(grid
        .positions()
        .map(|xp| units.m * (w.dot(&xp) - half_integral) / units.hbar)
        .collect())
}

fn finish_transport(psi: GridWavefunction, mass_loss: f64) -> Result<Transported> {
    let edge = psi.band_edge_fraction();
    if edge > BAND_EDGE_TOL {
        return Err(Error::numeric("transported state is not resolved by the grid", edge));
    }
    if mass_loss > MASS_LOSS_WARN {
        log::warn!("frame transport moved probability {mass_loss:.3e} outside the box");
    }
    Ok(Transported { psi, mass_loss })
}

/// Inertial state at time `psi.t` to the frame `spec`:
/// `ψ'(x⃗') = exp(i m (s' − s)/ħ) ψ(Rᵀ(x⃗' − A⃗))`.
pub fn pushforward(spec: &FrameSpec, psi: &GridWavefunction, units: Units, frame_tag: &str) -> Result<Transported> {
    let grid = psi.grid;
    let state = spec.eval(psi.t)?;
    check_slice(&state, &grid)?;
    let dv = grid.cell_volume();
    let mut mass_loss = 0.0;
    for c in &psi.comps {
        for (i, v) in c.iter().enumerate() {
            if !grid.contains(&state.to_frame(&grid.position(i))) {
                mass_loss += v.norm_sqr() * dv;
            }
        }
    }
    let phase = transport_phase(spec, &state, &grid, units)?;
    let mut out = psi.clone();
    out.frame_tag = frame_tag.to_string();
    for c in out.comps.iter_mut() {
        spectral::rotate(c, &grid, &state.r)?;
        spectral::translate(c, &grid, &state.a);
        for (v, ph) in c.iter_mut().zip(&phase) {
            *v *= Complex64::from_polar(1.0, *ph);
        }
    }
    finish_transport(out, mass_loss)
}

/// Exact inverse of [`pushforward`]: frame state back to the inertial system.
pub fn pullback(spec: &FrameSpec, psi: &GridWavefunction, units: Units, frame_tag: &str) -> Result<Transported> {
    let grid = psi.grid;
    let state = spec.eval(psi.t)?;
    check_slice(&state, &grid)?;
    let dv = grid.cell_volume();
    let mut mass_loss = 0.0;
    for c in &psi.comps {
        for (i, v) in c.iter().enumerate() {
            if !grid.contains(&state.to_inertial(&grid.position(i))) {
                mass_loss += v.norm_sqr() * dv;
            }
        }
    }
    let phase = transport_phase(spec, &state, &grid, units)?;
    let mut out = psi.clone();
    out.frame_tag = frame_tag.to_string();
    for c in out.comps.iter_mut() {
        for (v, ph) in c.iter_mut().zip(&phase) {
            *v *= Complex64::from_polar(1.0, -*ph);
        }
        spectral::translate(c, &grid, &(-state.a));
        spectral::rotate(c, &grid, &state.r.transpose())?;
    }
    finish_transport(out, mass_loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub t: f64,
    pub norm: f64,
    pub x: [f64; 3],
    pub p: [f64; 3],
    pub l: [f64; 3],
    /// Spin expectation, spinors only.
    pub s: Option<[f64; 3]>,
    pub boundary_mass: f64,
}

/// Grid cells counted as "at the boundary".
pub const BOUNDARY_CELLS: usize = 2;

pub fn observables(psi: &GridWavefunction, units: Units) -> Observables {
    let grid = &psi.grid;
    let dv = grid.cell_volume();
    let norm = psi.norm_sq();
    let hbar = units.hbar;
    let mut x = Vec3::zeros();
    let mut p = Vec3::zeros();
    let mut l = Vec3::zeros();
    for c in &psi.comps {
        let grads: Vec<Vec<Complex64>> = (0..grid.dim).map(|a| spectral::derivative(c, grid, a)).collect();
        for (i, v) in c.iter().enumerate() {
            let pos = grid.position(i);
            let rho = v.norm_sqr();
            x += pos * rho;
            // −iħ ψ* ∂ψ, real part
            let mut mom = Vec3::zeros();
            for (a, g) in grads.iter().enumerate() {
                mom[a] = (v.conj() * g[i] * Complex64::new(0.0, -hbar)).re;
            }
            p += mom;
            l += pos.cross(&mom);
        }
    }
    let s = psi.is_spinor().then(|| {
        let (u, d) = (&psi.comps[0], &psi.comps[1]);
        let mut s = [0.0; 3];
        for (a, b) in u.iter().zip(d) {
            let ud = a.conj() * b;
            s[0] += 2.0 * ud.re;
            s[1] += 2.0 * ud.im;
            s[2] += a.norm_sqr() - b.norm_sqr();
        }
        s.map(|v| 0.5 * hbar * v * dv / norm)
    });
    let scale = dv / norm;
    Observables {
        t: psi.t,
        norm,
        x: (x * scale).into(),
        p: (p * scale).into(),
        l: (l * scale).into(),
        s,
        boundary_mass: psi.boundary_mass(BOUNDARY_CELLS) / norm,
    }
}

pub const CSV_HEADER: &str = "t,norm,x1,x2,x3,p1,p2,p3,L1,L2,L3,S1,S2,S3,boundary_mass";

impl Observables {
    pub fn csv_row(&self) -> String {
        let f = |v: f64| format!("{v:.15e}");
        let mut cols: Vec<String> = vec![f(self.t), f(self.norm)];
        cols.extend(self.x.iter().chain(&self.p).chain(&self.l).map(|v| f(*v)));
        match self.s {
            Some(s) => cols.extend(s.iter().map(|v| f(*v))),
            None => cols.extend(std::iter::repeat_n(String::new(), 3)),
        }
        cols.push(f(self.boundary_mass));
        cols.join(",")
    }
}

pub fn write_csv<W: Write>(mut w: W, rows: &[Observables]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

pub const DUMP_MAGIC: &[u8; 8] = b"BARGWF01";
pub const DUMP_HEADER_LEN: usize = 80;

/// Header of a binary state dump.
///
/// ```text
/// 0   magic "BARGWF01"
/// 8   u32 dim          12  u32 components
/// 16  u32 n[3]         28  u32 bytes per real (4 or 8)
/// 32  f64 box[3]       56  f64 t
/// 64  u64 FNV-1a of the frame tag
/// 72  u64 number of complex values that follow
/// ```
///
/// All fields little-endian; values follow component by component in C order as
/// interleaved `(re, im)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub grid: GridSpec,
    pub components: usize,
    pub precision: Precision,
    pub t: f64,
    pub frame_hash: u64,
    pub count: u64,
}

pub fn write_dump<W: Write>(mut w: W, psi: &GridWavefunction, precision: Precision) -> Result<()> {
    let g = &psi.grid;
    let mut h = Vec::with_capacity(DUMP_HEADER_LEN);
    h.extend_from_slice(DUMP_MAGIC);
    h.extend_from_slice(&(g.dim as u32).to_le_bytes());
    h.extend_from_slice(&(psi.comps.len() as u32).to_le_bytes());
    for a in 0..3 {
        let n = if a < g.dim { g.n[a] } else { 1 };
        h.extend_from_slice(&(n as u32).to_le_bytes());
    }
    let width: u32 = match precision {
        Precision::Single => 4,
        Precision::Double => 8,
    };
    h.extend_from_slice(&width.to_le_bytes());
    for a in 0..3 {
        h.extend_from_slice(&g.box_length[a].to_le_bytes());
    }
    h.extend_from_slice(&psi.t.to_le_bytes());
    h.extend_from_slice(&fnv1a64(psi.frame_tag.as_bytes()).to_le_bytes());
    h.extend_from_slice(&((g.len() * psi.comps.len()) as u64).to_le_bytes());
    debug_assert_eq!(h.len(), DUMP_HEADER_LEN);
    w.write_all(&h)?;
    let mut body = Vec::with_capacity(g.len() * psi.comps.len() * 2 * width as usize);
    for v in psi.comps.iter().flatten() {
        match precision {
            Precision::Single => {
                body.extend_from_slice(&(v.re as f32).to_le_bytes());
                body.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
            Precision::Double => {
                body.extend_from_slice(&v.re.to_le_bytes());
                body.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    w.write_all(&body)?;
    Ok(())
}

fn bad_dump(message: impl Into<String>) -> Error {
    Error::Parse {
        path: "<state dump>".into(),
        message: message.into(),
    }
}

/// Reads a dump; the loaded state's frame tag is the hex hash from the header.
pub fn read_dump<R: Read>(mut r: R) -> Result<(DumpHeader, GridWavefunction)> {
    let mut h = [0u8; DUMP_HEADER_LEN];
    r.read_exact(&mut h)?;
    if &h[0..8] != DUMP_MAGIC {
        return Err(bad_dump("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(h[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(h[o..o + 8].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(h[o..o + 8].try_into().unwrap());
    let dim = u32_at(8);
    let components = u32_at(12);
    if !(1..=3).contains(&dim) {
        return Err(bad_dump(format!("dimension {dim} out of range")));
    }
    let n: Vec<usize> = (0..dim).map(|a| u32_at(16 + 4 * a)).collect();
    let box_length: Vec<f64> = (0..dim).map(|a| f64_at(32 + 8 * a)).collect();
    let grid = GridSpec::new(dim, &n, &box_length).map_err(|e| bad_dump(e.to_string()))?;
    let precision = match u32_at(28) {
        4 => Precision::Single,
        8 => Precision::Double,
        w => return Err(bad_dump(format!("unsupported value width {w}"))),
    };
    let header = DumpHeader {
        grid,
        components,
        precision,
        t: f64_at(56),
        frame_hash: u64_at(64),
        count: u64_at(72),
    };
    if header.count != (grid.len() * components) as u64 {
        return Err(bad_dump("value count does not match grid"));
    }
    let width = if precision == Precision::Single { 4 } else { 8 };
    let mut body = vec![0u8; header.count as usize * 2 * width];
    r.read_exact(&mut body)?;
    let values: Vec<Complex64> = body
        .chunks_exact(2 * width)
        .map(|c| match precision {
            Precision::Single => Complex64::new(
                f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
            ),
            Precision::Double => Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            ),
        })
        .collect();
    let comps = values.chunks(grid.len()).map(|c| c.to_vec()).collect();
    let psi = GridWavefunction::from_components(grid, comps, header.t, format!("{:016x}", header.frame_hash))?;
    Ok((header, psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{RotationFamily, TranslationFamily};
    use approx::assert_abs_diff_eq;

    fn grid1() -> GridSpec {
        GridSpec::cubic(1, 256, 40.0).unwrap()
    }

    #[test]
    fn gaussian_is_normalized_and_centred() {
        let psi = GridWavefunction::gaussian(
            grid1(),
            &GaussianSpec {
                center: [0.0; 3],
                width: 1.5,
                momentum: [0.0; 3],
            },
            None,
            Units::default(),
            "lab",
        )
        .unwrap();
        let o = observables(&psi, Units::default());
        assert_abs_diff_eq!(o.norm, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(o.x[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(o.p[0], 0.0, epsilon = 1e-14);
        assert!(o.s.is_none());
    }

    #[test]
    fn width_rule_is_enforced() {
        let g = GaussianSpec {
            center: [0.0; 3],
            width: 1.0,
            momentum: [0.0; 3],
        };
        assert!(GridWavefunction::gaussian(grid1(), &g, None, Units::default(), "lab").is_err());
    }

    #[test]
    fn momentum_and_spin_expectations() {
        let g = GaussianSpec {
            center: [0.5, 0.0, 0.0],
            width: 2.0,
            momentum: [2.0, 0.0, 0.0],
        };
        let one = Complex64::new(1.0, 0.0);
        let psi = GridWavefunction::gaussian(grid1(), &g, Some([one, zero()]), Units::default(), "lab").unwrap();
        let o = observables(&psi, Units::default());
        assert!((o.p[0] - 2.0).abs() <= 1e-6);
        assert_abs_diff_eq!(o.s.unwrap()[2], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(o.x[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn angular_momentum_of_offset_moving_packet() {
        let g = GridSpec::cubic(2, 128, 32.0).unwrap();
        let spec = GaussianSpec {
            center: [1.0, 0.0, 0.0],
            width: 2.0,
            momentum: [0.0, 0.7, 0.0],
        };
        let psi = GridWavefunction::gaussian(g, &spec, None, Units::default(), "lab").unwrap();
        let o = observables(&psi, Units::default());
        assert_abs_diff_eq!(o.l[2], 0.7, epsilon = 1e-10);
    }

    #[test]
    fn peel_phase_satisfies_subsidiary_condition() {
        let psi = random_band_limited(&grid1(), 1, 0.5, 3);
        let s: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let r = peel_phase_check(Units { m: 2.0, hbar: 1.0 }, 3.0, &psi.comps[0][..32], &s);
        assert!(r <= 1e-14, "{r}");
        assert_eq!(peel_phase_check(Units { m: 0.0, hbar: 1.0 }, 3.0, &psi.comps[0][..32], &s), 0.0);
    }

    #[test]
    fn peel_phase_derivative_matches_finite_differences() {
        let (m, u, hbar) = (2.0, 3.0, 1.0);
        let v = Complex64::new(0.3, -0.8);
        let phi = |s: f64| Complex64::from_polar(1.0, -m * s / hbar) * v;
        for s in [-1.0, 0.2, 1.7] {
            let h = 1e-3;
            let d = (phi(s - 2.0 * h) - phi(s - h) * 8.0 + phi(s + h) * 8.0 - phi(s + 2.0 * h)) / (12.0 * h);
            let lhs = Complex64::new(0.0, hbar) * u * d;
            assert!((lhs - m * u * phi(s)).norm() < 1e-9);
        }
    }

    #[test]
    fn boost_pushforward_shifts_wavenumber() {
        let g = GridSpec::cubic(1, 128, 2.0 * std::f64::consts::PI * 8.0).unwrap();
        let k = 1.5;
        let v = 0.25;
        let plane = |kk: f64| -> Vec<Complex64> { g.positions().map(|x| Complex64::from_polar(1.0, kk * x[0])).collect() };
        let mut psi = GridWavefunction::from_components(g, vec![plane(k)], 0.7, "lab").unwrap();
        psi.normalize().unwrap();
        let spec = FrameSpec::boost(Vec3::new(v, 0.0, 0.0));
        let out = pushforward(&spec, &psi, Units::default(), "boost").unwrap().psi;
        // Galilean boost: k' = k − m v / ħ
        let mut target = GridWavefunction::from_components(g, vec![plane(k - v)], 0.7, "boost").unwrap();
        target.normalize().unwrap();
        let ov = target.inner(&out);
        assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-12);
        let aligned: Vec<Complex64> = target.comps[0].iter().map(|z| z * ov).collect();
        let d = aligned.iter().zip(&out.comps[0]).fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()));
        assert!(d < 1e-10);
    }

    #[test]
    fn accelerated_pushforward_moves_mean_and_keeps_norm() {
        let psi = GridWavefunction::gaussian(
            grid1(),
            &GaussianSpec {
                center: [-1.0, 0.0, 0.0],
                width: 1.5,
                momentum: [0.3, 0.0, 0.0],
            },
            None,
            Units::default(),
            "lab",
        )
        .map(|mut p| {
            p.t = 1.6;
            p
        })
        .unwrap();
        let spec = FrameSpec::uniform_acceleration(Vec3::new(1.0, 0.0, 0.0));
        let before = observables(&psi, Units::default());
        let out = pushforward(&spec, &psi, Units::default(), "accel").unwrap();
        let after = observables(&out.psi, Units::default());
        assert_abs_diff_eq!(after.norm, before.norm, epsilon = 1e-10);
        assert_abs_diff_eq!(after.x[0], before.x[0] + 0.5 * 1.6 * 1.6, epsilon = 1e-10);
        assert!(out.mass_loss < 1e-15);
        let back = pullback(&spec, &out.psi, Units::default(), "lab").unwrap().psi;
        assert!(back.l2_distance(&psi) < 1e-10);
    }

    #[test]
    fn rotating_transport_round_trips() {
        let g = GridSpec::cubic(2, 128, 32.0).unwrap();
        let mut psi = GridWavefunction::gaussian(
            g,
            &GaussianSpec {
                center: [2.0, -1.0, 0.0],
                width: 2.0,
                momentum: [0.4, 0.2, 0.0],
            },
            None,
            Units::default(),
            "lab",
        )
        .unwrap();
        psi.t = 1.3;
        let spec = FrameSpec::new(
            RotationFamily::about_axis(Vec3::z(), 0.5).unwrap(),
            TranslationFamily::Polynomial(vec![Vec3::zeros(), Vec3::new(0.2, 0.0, 0.0), Vec3::new(0.0, 0.3, 0.0)]),
            1.0,
            (-10.0, 10.0),
        )
        .unwrap();
        let out = pushforward(&spec, &psi, Units::default(), "rot").unwrap().psi;
        assert_abs_diff_eq!(out.norm_sq(), psi.norm_sq(), epsilon = 1e-10);
        let back = pullback(&spec, &out, Units::default(), "lab").unwrap().psi;
        assert!(back.l2_distance(&psi) < 1e-8);
    }

    #[test]
    fn transport_rejects_out_of_slice_motion() {
        let psi = random_band_limited(&grid1(), 1, 0.3, 1);
        let spec = FrameSpec::uniform_acceleration(Vec3::new(0.0, 1.0, 0.0));
        let mut p = psi.clone();
        p.t = 1.0;
        assert!(matches!(pushforward(&spec, &p, Units::default(), "x"), Err(Error::Configuration(_))));
    }

    #[test]
    fn dump_round_trip() {
        let g = GridSpec::new(2, &[16, 32], &[3.0, 5.0]).unwrap();
        let mut psi = random_band_limited(&g, 2, 0.5, 9);
        psi.t = 0.25;
        psi.frame_tag = "rotating".into();
        let mut buf = Vec::new();
        write_dump(&mut buf, &psi, Precision::Double).unwrap();
        assert_eq!(buf.len(), DUMP_HEADER_LEN + 2 * g.len() * 16);
        let (h, back) = read_dump(&buf[..]).unwrap();
        assert_eq!(back.comps, psi.comps);
        assert_eq!(h.frame_hash, fnv1a64(b"rotating"));
        assert_eq!(h.t, 0.25);
        let mut buf = Vec::new();
        write_dump(&mut buf, &psi, Precision::Single).unwrap();
        assert_eq!(buf.len(), DUMP_HEADER_LEN + 2 * g.len() * 8);
        let (h, back) = read_dump(&buf[..]).unwrap();
        assert_eq!(h.precision, Precision::Single);
        assert!(back.l2_distance(&psi) < 1e-6);
        buf[0] = b'X';
        assert!(read_dump(&buf[..]).is_err());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn csv_layout() {
        let psi = random_band_limited(&grid1(), 1, 0.3, 2);
        let row = observables(&psi, Units::default()).csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
    }
}
