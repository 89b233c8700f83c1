//! CSV and SVG emission for harness reports.
//!
//! CSV files are UTF-8 with a `#` provenance comment, a header row, `.` as
//! the decimal separator and floats at 17 significant digits, so identical
//! runs produce byte-identical files. The SVG plot is standalone with no
//! external assets.

use std::fmt::Write as _;

use crate::harness::{BaselineReport, ConvergenceReport, ExpMomentReport};
use crate::integrators::PathResult;
use crate::params::SchemeParams;

/// 17 significant digits, enough to round-trip any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn params_comment(p: &SchemeParams) -> String {
    format!(
        "delta={} theta={} gamma1={} gamma2={} gamma3={}",
        fmt_f64(p.delta),
        fmt_f64(p.theta),
        fmt_f64(p.gamma1),
        fmt_f64(p.gamma2),
        fmt_f64(p.gamma3)
    )
}

/// One row per level plus a `fit` footer row carrying the fitted slopes.
pub fn convergence_csv(r: &ConvergenceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# converge model={} scheme={} {} t_final={} ref_level={} paths={} seed={}",
        r.model,
        r.scheme,
        params_comment(&r.params),
        fmt_f64(r.t_final),
        r.ref_level,
        r.paths,
        r.seed
    );
    out.push_str("scheme,model,level,h,m_paths,err_sup_l2,err_T_l2\n");
    for (i, lvl) in r.levels.iter().enumerate() {
        let h = r.t_final / (1u64 << lvl) as f64;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheme,
            r.model,
            lvl,
            fmt_f64(h),
            r.paths,
            fmt_f64(r.errors_sup[i]),
            fmt_f64(r.errors_terminal[i])
        );
    }
    let _ = writeln!(
        out,
        "{},{},fit,,{},{},{}",
        r.scheme,
        r.model,
        r.paths,
        fmt_f64(r.fitted_slope_sup),
        fmt_f64(r.fitted_slope_terminal)
    );
    out
}

pub fn exp_moment_csv(r: &ExpMomentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# expmoment model={} scheme={} alpha={} paths={} seed={}",
        r.model,
        r.scheme,
        fmt_f64(r.alpha),
        r.paths,
        r.seed
    );
    out.push_str("model,scheme,level,estimate,max_u0,max_exponent,clipped\n");
    for (i, lvl) in r.levels.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.model,
            r.scheme,
            lvl,
            fmt_f64(r.estimates[i]),
            fmt_f64(r.max_u0[i]),
            fmt_f64(r.max_exponent[i]),
            r.clipped[i]
        );
    }
    out
}

pub fn baseline_csv(r: &BaselineReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# baseline-em model={} paths={} seed={}",
        r.model, r.paths, r.seed
    );
    out.push_str("model,level,em_mean_sq,em_overflow,tamed_overflow\n");
    for (i, lvl) in r.levels.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.model,
            lvl,
            fmt_f64(r.em_mean_sq[i]),
            r.em_overflow[i],
            r.tamed_overflow[i]
        );
    }
    out
}

/// States of one path: `t, y1..yd`, with the stopping index in the comment.
pub fn path_csv(model: &str, scheme: &str, res: &PathResult, t_final: f64, seed: u64) -> String {
    let mut out = String::new();
    let n = res.len() - 1;
    let tau = res
        .tau_index
        .map(|k| k.to_string())
        .unwrap_or_else(|| "none".into());
    let _ = writeln!(
        out,
        "# simulate model={model} scheme={scheme} steps={n} t_final={} seed={seed} tau_index={tau}",
        fmt_f64(t_final)
    );
    out.push_str("t");
    for i in 1..=res.d {
        let _ = write!(out, ",y{i}");
    }
    out.push('\n');
    let h = t_final / n as f64;
    for k in 0..=n {
        let _ = write!(out, "{}", fmt_f64(k as f64 * h));
        for v in res.state(k) {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// Standalone log-log error plot: both error functionals against h, with
/// dashed rate guides of slope 0.5, 1 and 1.5 anchored at the coarsest
/// sup-norm point.
pub fn convergence_svg(r: &ConvergenceReport) -> String {
    let (w, h): (f64, f64) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 30.0, 50.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;

    let hs: Vec<f64> = r.levels.iter().map(|l| r.t_final / (1u64 << l) as f64).collect();
    let mut ys: Vec<f64> = Vec::new();
    for e in r.errors_sup.iter().chain(&r.errors_terminal) {
        if *e > 0.0 && e.is_finite() {
            ys.push(e.log2());
        }
    }
    let xs: Vec<f64> = hs.iter().map(|v| v.log2()).collect();
    let (xmin, xmax) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min) - 0.3,
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 0.3,
    );
    let (mut ymin, mut ymax) = (
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    if !ymin.is_finite() || !ymax.is_finite() {
        ymin = -1.0;
        ymax = 1.0;
    }
    // room for the guide lines
    ymin -= 0.8;
    ymax += 0.8;

    let px = |lx: f64| ml + (lx - xmin) / (xmax - xmin) * pw;
    let py = |ly: f64| mt + (ymax - ly) / (ymax - ymin) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">strong error vs h: {} on {} (paths={})</text>",
        ml, r.scheme, r.model, r.paths
    );
    // axes
    let _ = writeln!(
        svg,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
    );
    // x ticks: one per level
    for (lx, lvl) in xs.iter().zip(&r.levels) {
        let x = px(*lx);
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>",
            mt + ph,
            mt + ph + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">2^-{lvl}</text>",
            mt + ph + 18.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">h</text>",
        ml + pw / 2.0,
        mt + ph + 38.0
    );
    // y ticks at integer powers of two, decimated to at most ~8 labels
    let tick_step = (((ymax - ymin) / 8.0).ceil() as i64).max(1);
    let mut ty = (ymin.ceil() as i64 / tick_step) * tick_step;
    while (ty as f64) < ymax {
        if (ty as f64) > ymin {
            let y = py(ty as f64);
            let _ = writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>",
                ml - 5.0
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">2^{ty}</text>",
                ml - 8.0,
                y + 4.0
            );
        }
        ty += tick_step;
    }
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {})\">L2 error</text>",
        mt + ph / 2.0,
        mt + ph / 2.0
    );

    // rate guides anchored at the coarsest sup point
    if let Some((&x0, &e0)) = xs.first().zip(r.errors_sup.first()) {
        if e0 > 0.0 {
            let y0 = e0.log2();
            for (slope, dash) in [(0.5, "2,4"), (1.0, "6,4"), (1.5, "10,4")] {
                let y_end = y0 + slope * (xs.last().unwrap() - x0);
                let _ = writeln!(
                    svg,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"{dash}\"/>",
                    px(x0),
                    py(y0),
                    px(*xs.last().unwrap()),
                    py(y_end)
                );
                let _ = writeln!(
                    svg,
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"gray\">{slope}</text>",
                    px(*xs.last().unwrap()) + 2.0,
                    py(y_end) + 3.0
                );
            }
        }
    }

    // series
    for (errs, color, label) in [
        (&r.errors_sup, "#d62728", "sup"),
        (&r.errors_terminal, "#1f77b4", "terminal"),
    ] {
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(errs.iter())
            .filter(|(_, e)| **e > 0.0 && e.is_finite())
            .map(|(lx, e)| (px(*lx), py(e.log2())))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.join(" ")
        );
        for (x, y) in &pts {
            let _ = writeln!(svg, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{color}\"/>");
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{label}</text>",
            ml + pw - 60.0,
            mt + 15.0 + if label == "sup" { 0.0 } else { 14.0 }
        );
    }
    svg.push_str("</svg>\n");
    svg
}
