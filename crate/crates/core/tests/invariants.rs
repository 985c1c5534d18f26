use bargmann::dynamics::{analytic, evolve, spin_propagator, FrameHamiltonian, IntegratorSpec, Method};
use bargmann::fields::{pullback, pushforward, random_band_limited, GaussianSpec, GridWavefunction, Units};
use bargmann::frames::{inverse_event_g5p, transform_event_g5, transform_event_g5p, Event5, FrameSpec, RotationFamily, TranslationFamily};
use bargmann::geometry::{eta, funfbein_a, metric_up, Matrix5};
use bargmann::grid::GridSpec;
use bargmann::hamiltonians::{Mat2c, Potential};
use bargmann::numeric::{so3_exp, Vec3};
use bargmann::spectral;
use num_complex::Complex64;
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(a, b, c)| Vec3::new(a, b, c))
}

fn axis() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("nonzero axis", |v| v.norm() > 0.1)
}

fn frame() -> impl Strategy<Value = FrameSpec> {
    (axis(), -5.0..5.0, prop::collection::vec(vec3(1.0), 0..=4), 0.5..2.0).prop_map(|(ax, rate, coeffs, u)| {
        FrameSpec::new(
            RotationFamily::about_axis(ax, rate).unwrap(),
            TranslationFamily::Polynomial(coeffs),
            u,
            (-10.0, 10.0),
        )
        .unwrap()
    })
}

fn hermitian() -> impl Strategy<Value = Mat2c> {
    (-3.0..3.0, -3.0..3.0, -3.0..3.0, -3.0..3.0).prop_map(|(a, d, re, im)| {
        Mat2c::new(
            Complex64::new(a, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
            Complex64::new(d, 0.0),
        )
    })
}

fn cmax(m: &Mat2c) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_map_inverts(spec in frame(), x in vec3(2.0), x4 in -1.0..1.0, x5 in -1.0..1.0) {
        let e = Event5::new(x, x4, x5);
        let back = inverse_event_g5p(&spec, &transform_event_g5p(&spec, &e).unwrap()).unwrap();
        for (a, b) in back.as_array().iter().zip(e.as_array()) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn galilei_maps_preserve_quadratic_form(ax in axis(), angle in -3.0..3.0, v in vec3(2.0), u in 0.5..2.0,
                                            x in vec3(2.0), x4 in -2.0..2.0, x5 in -2.0..2.0) {
        let r = so3_exp(&(ax.normalize() * angle));
        let e = Event5::new(x, x4, x5);
        let ep = transform_event_g5(&r, &v, u, &e);
        prop_assert!((ep.quadratic_form() - e.quadratic_form()).abs() < 1e-11);
    }

    #[test]
    fn funfbein_reproduces_metric(spec in frame(), t in -1.0..1.0, xp in vec3(1.0)) {
        let st = spec.eval(t).unwrap();
        let m = metric_up(&st, &xp, spec.u).unwrap();
        let h = funfbein_a(&st, &xp, spec.u).h;
        prop_assert!((h * eta() * h.transpose() - m.up).amax() < 1e-11);
        prop_assert!((m.up * m.down - Matrix5::identity()).amax() < 1e-10);
    }

    #[test]
    fn spin_propagator_is_unitary(h in hermitian(), dt in 0.0..2.0, hbar in 0.5..2.0) {
        let u = spin_propagator(&h, dt, hbar);
        prop_assert!(cmax(&(u * u.adjoint() - Mat2c::identity())) < 1e-13);
    }

    #[test]
    fn spin_propagator_composes(h in hermitian(), dt in 0.0..1.0) {
        let one = spin_propagator(&h, 2.0 * dt, 1.0);
        let two = spin_propagator(&h, dt, 1.0) * spin_propagator(&h, dt, 1.0);
        prop_assert!(cmax(&(one - two)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn grid_rotation_is_unitary(ax in axis(), angle in -3.0..3.0, seed in 0u64..1000) {
        let g = GridSpec::cubic(3, 16, 8.0).unwrap();
        let psi = random_band_limited(&g, 1, 0.3, seed);
        let mut c = psi.comps[0].clone();
        spectral::rotate(&mut c, &g, &so3_exp(&(ax.normalize() * angle))).unwrap();
        let rotated = GridWavefunction::from_components(g, vec![c], 0.0, "rot").unwrap();
        prop_assert!((rotated.norm_sq() - psi.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn transport_round_trips(rate in -1.0..1.0, a0 in vec3(1.0), a1 in vec3(0.5), t in -1.5..1.5) {
        let g = GridSpec::cubic(2, 128, 32.0).unwrap();
        let mut psi = GridWavefunction::gaussian(
            g,
            &GaussianSpec { center: [1.0, -0.5, 0.0], width: 2.0, momentum: [0.3, -0.2, 0.0] },
            None,
            Units::default(),
            "lab",
        )
        .unwrap();
        psi.t = t;
        let planar = |v: Vec3| Vec3::new(v[0], v[1], 0.0);
        let spec = FrameSpec::new(
            RotationFamily::about_axis(Vec3::z(), rate).unwrap(),
            TranslationFamily::Polynomial(vec![planar(a0), planar(a1)]),
            1.0,
            (-10.0, 10.0),
        )
        .unwrap();
        let out = pushforward(&spec, &psi, Units::default(), "frame").unwrap().psi;
        prop_assert!((out.norm_sq() - psi.norm_sq()).abs() < 1e-10);
        let back = pullback(&spec, &out, Units::default(), "lab").unwrap().psi;
        prop_assert!(back.l2_distance(&psi) < 1e-8);
    }

    #[test]
    fn evolution_conserves_norm(rate in -0.8..0.8, acc in -1.0..1.0, method in prop::sample::select(vec![Method::StrangSplit, Method::Rk4Spectral])) {
        let g = GridSpec::cubic(2, 128, 32.0).unwrap();
        let units = Units::default();
        let psi = GridWavefunction::gaussian(
            g,
            &GaussianSpec { center: [1.0, 0.0, 0.0], width: 2.0, momentum: [0.2, 0.1, 0.0] },
            None,
            units,
            "frame",
        )
        .unwrap();
        let spec = FrameSpec::new(
            RotationFamily::about_axis(Vec3::z(), rate).unwrap(),
            TranslationFamily::Polynomial(vec![Vec3::zeros(), Vec3::zeros(), Vec3::new(0.5 * acc, 0.0, 0.0)]),
            1.0,
            (-10.0, 10.0),
        )
        .unwrap();
        let h = FrameHamiltonian::new(spec, Potential::Zero, units, g);
        let (dt, tol) = match method {
            Method::StrangSplit => (0.02, 1e-12),
            Method::Rk4Spectral => (0.005, 1e-8),
        };
        let ev = evolve(&psi, &h, &IntegratorSpec::new(method, dt, 1.0)).unwrap();
        prop_assert!(ev.norm_drift < tol, "{method:?} drift {}", ev.norm_drift);
    }
}

fn strang_error(dt: f64) -> f64 {
    let g = GridSpec::cubic(1, 512, 64.0).unwrap();
    let units = Units::default();
    let p = GaussianSpec { center: [-1.0, 0.0, 0.0], width: 1.0, momentum: [0.5, 0.0, 0.0] };
    let psi = GridWavefunction::gaussian(g, &p, None, units, "frame").unwrap();
    let h = FrameHamiltonian::new(FrameSpec::inertial(), Potential::Uniform { g: Vec3::new(0.7, 0.0, 0.0) }, units, g);
    let ev = evolve(&psi, &h, &IntegratorSpec::new(Method::StrangSplit, dt, 1.0)).unwrap();
    let exact = analytic::linear_potential_gaussian(&g, &p, units, &(units.m * Vec3::new(0.7, 0.0, 0.0)), 1.0, "frame");
    exact.l2_distance(&ev.psi)
}

#[test]
fn strang_splitting_is_second_order() {
    let coarse = strang_error(0.1);
    let fine = strang_error(0.05);
    let order = (coarse / fine).log2();
    assert!((1.8..2.3).contains(&order), "errors {coarse:.3e} {fine:.3e}, order {order:.2}");
}
