//! gnuplot script emission. Axes are scaled to 10⁻²⁰ s and 10⁻¹² m.

use std::fmt::Write as _;

use rqt_core::trajectory::{Termination, Trajectory};

use crate::pipeline::Problem;

const T_SCALE: f64 = 1e-20;
/// fm per plotted length unit (10⁻¹² m).
const X_SCALE_FM: f64 = 1e3;

fn columns() -> String {
    // The divergence marker row holds x = ±inf; keep it out of autoscaling.
    format!("($1/{T_SCALE:e}):(strcol(4) eq 'divergence' ? NaN : $2/{X_SCALE_FM:e})")
}

pub fn gnuplot_script(
    problem: &Problem,
    figure: u8,
    quantum: &[(usize, &Trajectory)],
    classical: Option<&Trajectory>,
    nodes: bool,
) -> String {
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "# config_sha256={}", problem.hash).unwrap();
    writeln!(w, "set terminal pngcairo size 1000,700 enhanced").unwrap();
    writeln!(w, "set output 'fig{figure}.png'").unwrap();
    writeln!(w, "set datafile separator ','").unwrap();
    writeln!(w, "set datafile commentschars '#'").unwrap();
    writeln!(w, "set xlabel 't (10^{{-20}} s)'").unwrap();
    writeln!(w, "set ylabel 'x (10^{{-12}} m)'").unwrap();
    writeln!(w, "set key top left").unwrap();
    writeln!(w, "set grid").unwrap();
    for (_, t) in quantum {
        if let Termination::Divergence { time, .. } = t.termination {
            let t = time / T_SCALE;
            writeln!(w, "set arrow from {t:e}, graph 0 to {t:e}, graph 1 nohead dashtype 2 linecolor rgb 'red'").unwrap();
            writeln!(w, "set label 'x -> infinity at t = {time:.4e} s' at {t:e}, graph 0.95 right offset -1,0").unwrap();
        }
        if let Termination::TurningPoint { x } = t.termination {
            writeln!(w, "# trajectory truncated at x = {x:.6e} fm, ahead of the turning point").unwrap();
        }
    }

    let cols = columns();
    let mut curves = Vec::new();
    if classical.is_some() {
        curves.push(format!("'classical.csv' using {cols} with lines linewidth 2 linecolor rgb 'black' title 'purely relativistic'"));
    }
    for (i, t) in quantum {
        let title = match t.params {
            Some(p) => format!("a = {}, b = {}", p.a(), p.b()),
            None => format!("set {i}"),
        };
        curves.push(format!("'traj_{i}.csv' using {cols} with lines linewidth 1.5 title '{title}'"));
    }
    if nodes {
        curves.push(format!(
            "'nodes.csv' using ($1/{T_SCALE:e}):($2/{X_SCALE_FM:e}) with points pointtype 7 pointsize 1.5 linecolor rgb 'red' title 'Nodes'"
        ));
    }
    writeln!(w, "plot {}", curves.join(", \\\n     ")).unwrap();
    s
}
