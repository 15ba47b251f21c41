//! gnuplot scripts for the standard figures. Each script is run from the
//! output directory (`gnuplot fig1.gp`) and writes a PNG next to it.

use std::fmt::Write as _;

const COE_SURMISE: &str = "(pi/2)*x*exp(-pi*x**2/4)";
const CUE_SURMISE: &str = "(32/pi**2)*x**2*exp(-4*x**2/pi)";

fn preamble(out: &str, width: u32, height: u32) -> String {
    format!(
        "set terminal pngcairo size {width},{height} enhanced\nset output '{out}'\nset datafile separator ','\nset key top right\n"
    )
}

/// Panels are `(title, data file)`; data files are CSV with a header and
/// columns `x,estimate,stderr,n`.
pub fn spacing(panels: &[(String, String)]) -> String {
    let mut s = preamble("fig1.png", 600 * panels.len() as u32, 450);
    writeln!(s, "set multiplot layout 1,{}", panels.len()).unwrap();
    s.push_str("set xlabel 's'\nset ylabel 'P(s)'\nset xrange [0:4]\nset style fill solid 0.3\n");
    for (title, data) in panels {
        writeln!(s, "set title '{title}'").unwrap();
        writeln!(
            s,
            "plot '{data}' every ::1 using 1:2 with boxes title 'histogram', {COE_SURMISE} with lines lw 2 dt 1 title 'COE', {CUE_SURMISE} with lines lw 2 dt 2 title 'CUE'"
        )
        .unwrap();
    }
    s.push_str("unset multiplot\n");
    s
}

/// Panels are `(title, data file, baseline file, baseline column, label)`.
pub fn form_factor(out: &str, ylabel: &str, panels: &[(String, String, String, u32, String)], xmax: f64) -> String {
    let mut s = preamble(out, 600 * panels.len() as u32, 450);
    writeln!(s, "set multiplot layout 1,{}", panels.len()).unwrap();
    writeln!(s, "set xlabel 'τ'\nset ylabel '{ylabel}'\nset xrange [0:{xmax}]").unwrap();
    for (title, data, baseline, column, label) in panels {
        writeln!(s, "set title '{title}'").unwrap();
        writeln!(
            s,
            "plot '{data}' every ::1 using 1:2:3 with yerrorbars pt 7 ps 0.4 title 'simulation', '{baseline}' every ::1 using 1:{column} with lines lw 2 title '{label}'"
        )
        .unwrap();
    }
    s.push_str("unset multiplot\n");
    s
}

pub fn var_over_mean(data: &str, baseline: &str, column: u32) -> String {
    let mut s = preamble("var_over_mean.png", 700, 450);
    s.push_str("set xlabel 'τ'\nset ylabel 'var(C_t)/<C_t>'\nset logscale y\n");
    writeln!(
        s,
        "plot '{data}' every ::1 using 1:2:3 with yerrorbars pt 7 ps 0.4 title 'simulation', '{baseline}' every ::1 using 1:{column} with lines lw 2 title 'prediction'"
    )
    .unwrap();
    s
}

/// Collapse figure: simulated curves, transformed baselines, and `τ^{3/2}`.
pub fn collapse(out: &str, ylabel: &str, simulated: &[(String, String)], theory: &[(String, String, u32)]) -> String {
    let mut s = preamble(out, 700, 500);
    writeln!(s, "set xlabel 'τ^{{3/2}}'\nset ylabel '{ylabel}'\nset key top left").unwrap();
    let mut items = Vec::new();
    for (file, title) in simulated {
        items.push(format!(
            "'{file}' every ::1 using ($1**1.5):2:3 with yerrorbars pt 7 ps 0.4 title '{title}'"
        ));
    }
    for (file, title, column) in theory {
        items.push(format!("'{file}' every ::1 using ($1**1.5):{column} with lines lw 2 title '{title}'"));
    }
    items.push("x with lines dt 2 lc rgb 'black' title 'τ^{3/2}'".into());
    writeln!(s, "plot {}", items.join(", \\\n     ")).unwrap();
    s
}
