//! CSV rows and the SVG pressure plot.

use std::fmt::Write as _;

use bowen::geometry::PointCloud;
use bowen::thermo::PressureEstimate;
use bowen::SystemSpec;

pub const PRESSURE_HEADER: &str = "n,t,z_lo,z_hi,s_n_lo,s_n_hi";

/// One row per `(t, n)`, grouped by `t` in grid order.
pub fn pressure_csv(estimates: &[PressureEstimate]) -> String {
    let mut out = String::from(PRESSURE_HEADER);
    out.push('\n');
    for e in estimates {
        for r in &e.rows {
            let _ = writeln!(out, "{},{},{:e},{:e},{},{}", r.n, r.t, r.z_lo, r.z_hi, r.s_lo, r.s_hi);
        }
    }
    out
}

/// `x[,y],radius,word` with the word as dot-joined letter labels.
pub fn points_csv(cloud: &PointCloud, system: &SystemSpec) -> String {
    let mut out = String::from(if cloud.dim == 2 {
        "x,y,radius,word\n"
    } else {
        "x,radius,word\n"
    });
    let sched = system.schedule();
    for p in &cloud.points {
        let word: Vec<&str> = p
            .word
            .letters
            .iter()
            .enumerate()
            .map(|(k, &a)| sched.letter(p.word.start + k, a).label.as_str())
            .collect();
        if cloud.dim == 2 {
            let _ = write!(out, "{},{},", p.coords[0], p.coords[1]);
        } else {
            let _ = write!(out, "{},", p.coords[0]);
        }
        let _ = writeln!(out, "{:e},{}", p.radius, word.join("."));
    }
    out
}

/// `(t, s_lo, s_hi)` at the largest `n` of each `t` in a pressure CSV.
pub fn curve_from_csv(csv: &str) -> Vec<(f64, f64, f64)> {
    let mut best: Vec<(usize, f64, f64, f64)> = Vec::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            continue;
        }
        let (Ok(n), Ok(t), Ok(lo), Ok(hi)) = (f[0].parse::<usize>(), f[1].parse::<f64>(), f[4].parse(), f[5].parse())
        else {
            continue;
        };
        match best.iter_mut().find(|b| b.1 == t) {
            Some(b) if n > b.0 => *b = (n, t, lo, hi),
            Some(_) => {}
            None => best.push((n, t, lo, hi)),
        }
    }
    best.into_iter().map(|(_, t, lo, hi)| (t, lo, hi)).collect()
}

/// First `t` where the midpoint curve changes sign, by linear interpolation.
pub fn zero_crossing(curve: &[(f64, f64, f64)]) -> Option<f64> {
    let mid: Vec<(f64, f64)> = curve.iter().map(|&(t, lo, hi)| (t, 0.5 * (lo + hi))).collect();
    mid.windows(2).find_map(|w| {
        let ((t0, p0), (t1, p1)) = (w[0], w[1]);
        if p0 == 0.0 {
            Some(t0)
        } else if p0.signum() != p1.signum() && p1.is_finite() && p0.is_finite() {
            Some(t0 + (t1 - t0) * p0 / (p0 - p1))
        } else {
            None
        }
    })
}

/// Pressure-vs-`t` plot read back from the pressure CSV, with the zero crossing marked.
pub fn pressure_svg(csv: &str, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let curve: Vec<(f64, f64, f64)> = curve_from_csv(csv)
        .into_iter()
        .filter(|c| c.1.is_finite() && c.2.is_finite())
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    if curve.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let t0 = curve.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let t1 = curve.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let p0 = curve.iter().map(|c| c.1).fold(0.0, f64::min);
    let p1 = curve.iter().map(|c| c.2).fold(0.0, f64::max);
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let span_p = if p1 > p0 { p1 - p0 } else { 1.0 };
    let x = |t: f64| M + (t - t0) / span_t * (W - 2.0 * M);
    let y = |p: f64| H - M - (p - p0) / span_p * (H - 2.0 * M);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray"/>"#,
        x(t0),
        y(0.0),
        x(t1),
        y(0.0)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray"/>"#,
        x(t0),
        y(p0),
        x(t0),
        y(p1)
    );
    for (k, colour) in [(1usize, "steelblue"), (2, "darkorange")] {
        let pts: Vec<String> = curve
            .iter()
            .map(|c| {
                let p = if k == 1 { c.1 } else { c.2 };
                format!("{:.2},{:.2}", x(c.0), y(p))
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" points="{}"/>"#,
            pts.join(" ")
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{M}" y="{:.2}" font-family="sans-serif" font-size="11">t = {t0}</text>"#,
        H - M + 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">t = {t1}</text>"#,
        W - M,
        H - M + 16.0
    );
    if let Some(tz) = zero_crossing(&curve) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="crimson"/>"#,
            x(tz),
            y(0.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="crimson">zero near t = {tz:.4}</text>"#,
            x(tz) + 6.0,
            y(0.0) - 6.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
