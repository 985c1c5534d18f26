//! Shared workloads for the criterion benches.

use bargmann::dynamics::FrameHamiltonian;
use bargmann::fields::{GaussianSpec, GridWavefunction, Units};
use bargmann::frames::{FrameSpec, RotationFamily, TranslationFamily};
use bargmann::grid::GridSpec;
use bargmann::hamiltonians::Potential;
use bargmann::numeric::Vec3;

/// Accelerating frame rotating about z at `rate`, with `A(t) = ½ (0.3, 0.1, 0) t²`.
pub fn rotating_accelerating(rate: f64) -> FrameSpec {
    FrameSpec::new(
        RotationFamily::about_axis(Vec3::z(), rate).unwrap(),
        TranslationFamily::Polynomial(vec![Vec3::zeros(), Vec3::zeros(), Vec3::new(0.15, 0.05, 0.0)]),
        1.0,
        (-100.0, 100.0),
    )
    .unwrap()
}

/// Gaussian packet of width 2 on a `dim`-D cubic grid (`n` points per axis).
pub fn packet(dim: usize, n: usize, box_length: f64) -> GridWavefunction {
    let g = GridSpec::cubic(dim, n, box_length).unwrap();
    let spec = GaussianSpec {
        center: [1.0, -0.5, 0.0],
        width: 2.0,
        momentum: [0.3, 0.2, 0.0],
    };
    GridWavefunction::gaussian(g, &spec, None, Units::default(), "frame").unwrap()
}

pub fn hamiltonian(psi: &GridWavefunction, rate: f64) -> FrameHamiltonian {
    FrameHamiltonian::new(rotating_accelerating(rate), Potential::Uniform { g: Vec3::new(0.0, 0.2, 0.0) }, Units::default(), psi.grid)
}
