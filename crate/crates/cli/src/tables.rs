//! Aligned text tables of the frame geometry at one event.

use std::fmt::Write as _;

use bargmann::geometry::{connection, funfbein, metric_up, spin_connection, Gauge, Mat4c, Matrix5};
use bargmann::numeric::Vec3;
use bargmann::Result;

use crate::scenario::Scenario;

const AXES: [&str; 5] = ["1", "2", "3", "4", "5"];

fn real_table(out: &mut String, title: &str, m: &Matrix5) {
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:>4}", "");
    for c in AXES {
        let _ = write!(out, " {c:>14}");
    }
    let _ = writeln!(out);
    for r in 0..5 {
        let _ = write!(out, "{:>4}", AXES[r]);
        for c in 0..5 {
            let _ = write!(out, " {:>14.6e}", m[(r, c)] + 0.0);
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out);
}

fn complex_table(out: &mut String, title: &str, m: &Mat4c) {
    let _ = writeln!(out, "{title}");
    for r in 0..4 {
        let _ = write!(out, "    ");
        for c in 0..4 {
            let v = m[(r, c)];
            let _ = write!(out, " {:>13.6e}{:>+14.6e}i", v.re + 0.0, v.im + 0.0);
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out);
}

/// `g'`, `Γ'`, `h` and the spin connection `Γ'_μ` of the scenario's frame and gauge.
pub fn dump_geometry(sc: &Scenario, t: f64, xp: &Vec3) -> Result<String> {
    let u = sc.frame.u;
    let state = sc.frame.eval(t)?;
    let gauge = match &sc.spin_frame {
        None => Gauge::A,
        Some(rbar) => Gauge::B(rbar.eval(t)),
    };
    let m = metric_up(&state, xp, u)?;
    let c = connection(&state, xp, u);
    let fb = funfbein(&state, &gauge, xp, u)?;
    let gs = spin_connection(&fb, &m, &c, &state, u)?;

    let mut out = String::new();
    let gauge_name = if matches!(gauge, Gauge::A) { "A" } else { "B" };
    let _ = writeln!(
        out,
        "scenario {}  t = {t}  x' = ({}, {}, {})  u = {u}  gauge {gauge_name}\n",
        sc.name, xp[0], xp[1], xp[2]
    );
    real_table(&mut out, "g'^{mu nu}", &m.up);
    real_table(&mut out, "g'_{mu nu}", &m.down);
    for l in 0..5 {
        let g = Matrix5::from_fn(|a, b| c.gamma[l][a][b]);
        real_table(&mut out, &format!("Gamma'^{}_{{mu nu}}", AXES[l]), &g);
    }
    real_table(&mut out, "h^mu_a (row mu, column a)", &fb.h);
    for mu in 0..5 {
        complex_table(&mut out, &format!("Gamma'_{}", AXES[mu]), &gs.spin_conn[mu]);
    }
    Ok(out)
}
