//! Minimal SVG line plots rendered from the run outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::config::SweepParam;
use crate::experiment::RunOutput;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLOURS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return None;
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    Some((x0, x1, y0, y1))
}

/// Renders the series as polylines with axis labels, tick values and a legend.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], equal_aspect: bool) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let Some((mut x0, mut x1, mut y0, mut y1)) = bounds(series) else {
        svg.push_str("</svg>\n");
        return svg;
    };
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    if equal_aspect {
        let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        (x0, x1) = (cx - 0.5 * scale * pw, cx + 0.5 * scale * pw);
        (y0, y1) = (cy - 0.5 * scale * ph, cy + 0.5 * scale * ph);
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            HEIGHT - MARGIN + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    );
    for (i, s) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN - 6.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn run_label(run: &RunOutput) -> String {
    let r = &run.record;
    match r.sweep {
        Some((p, v)) => format!("{} {}={} seed {}", r.scheme, p.name(), v, r.seed),
        None => format!("{} seed {}", r.scheme, r.seed),
    }
}

/// Writes convergence.svg, trajectories.svg and, for sweeps, sweep.svg.
///
/// The convergence and trajectory plots show the first successful run of
/// each scheme; the sweep plot shows the mean WSR over seeds.
pub fn write_plots(dir: &Path, runs: &[RunOutput], sweep: Option<SweepParam>) -> io::Result<()> {
    let mut firsts: Vec<&RunOutput> = Vec::new();
    for run in runs.iter().filter(|r| r.record.error.is_none()) {
        if !firsts.iter().any(|f| f.record.scheme == run.record.scheme) {
            firsts.push(run);
        }
    }
    let conv: Vec<Series> = firsts
        .iter()
        .filter_map(|r| {
            let trace = r.trace.as_ref()?;
            Some(Series {
                label: run_label(r),
                points: trace.outer.iter().map(|o| (o.outer as f64, o.wsr)).collect(),
            })
        })
        .collect();
    fs::write(dir.join("convergence.svg"), line_plot("Convergence", "outer iteration", "WSR (bit/s/Hz)", &conv, false))?;

    let mut paths = Vec::new();
    for r in &firsts {
        if let Some(q) = &r.trajectory {
            for m in 0..q.num_uavs() {
                paths.push(Series {
                    label: format!("{} UAV {m}", r.record.scheme),
                    points: (0..q.num_slots()).map(|t| (q.at(m, t).x, q.at(m, t).y)).collect(),
                });
            }
        }
    }
    fs::write(dir.join("trajectories.svg"), line_plot("Trajectories", "x (m)", "y (m)", &paths, true))?;

    if let Some(param) = sweep {
        let mut means: BTreeMap<&str, BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
        for r in runs.iter().filter(|r| r.record.error.is_none()) {
            if let Some((_, v)) = r.record.sweep {
                let e = means.entry(r.record.scheme.name()).or_default().entry(v.to_bits()).or_insert((v, 0.0, 0));
                e.1 += r.record.wsr;
                e.2 += 1;
            }
        }
        let series: Vec<Series> = means
            .into_iter()
            .map(|(name, pts)| {
                let mut points: Vec<(f64, f64)> = pts.into_values().map(|(v, s, n)| (v, s / n as f64)).collect();
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series { label: name.to_string(), points }
            })
            .collect();
        fs::write(dir.join("sweep.svg"), line_plot("Mean WSR", param.name(), "WSR (bit/s/Hz)", &series, false))?;
    }
    Ok(())
}
