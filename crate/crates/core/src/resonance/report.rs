use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ResonanceReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Svg,
    Text,
}

fn create(dir: &Path, name: &str, out: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let p = dir.join(name);
    let f = File::create(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    out.push(p);
    Ok(BufWriter::new(f))
}

fn io_at(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(format!("{}: {e}", p.display()))
}

/// Writes `verdict.json` always, plus the requested formats. Returns the files written.
pub fn emit_report(report: &ResonanceReport, dir: impl AsRef<Path>, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    let mut out = Vec::new();

    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    let mut w = create(dir, "verdict.json", &mut out)?;
    writeln!(w, "{json}").map_err(io_at(dir))?;
    w.flush().map_err(io_at(dir))?;

    if formats.contains(&ReportFormat::Text) {
        let mut w = create(dir, "report.txt", &mut out)?;
        w.write_all(summary_text(report).as_bytes()).map_err(io_at(dir))?;
        w.flush().map_err(io_at(dir))?;
    }
    if formats.contains(&ReportFormat::Csv) {
        for (name, d) in [("mu", &report.dim_mu), ("nu", &report.dim_nu), ("conv", &report.dim_conv)] {
            let mut w = create(dir, &format!("entropy_profile_{name}.csv"), &mut out)?;
            d.profile.write_csv(&mut w)?;
            w.flush().map_err(io_at(dir))?;
        }
        for (i, lea) in report.lea.iter().enumerate() {
            let name = if i == 0 {
                "lea_series.csv".to_string()
            } else {
                format!("lea_series_{}.csv", mode_name(lea.mode))
            };
            let mut w = create(dir, &name, &mut out)?;
            lea.write_csv(&mut w)?;
            w.flush().map_err(io_at(dir))?;
        }
    }
    if formats.contains(&ReportFormat::Svg) {
        let series: Vec<(String, Vec<(f64, f64)>)> = [("mu", &report.dim_mu), ("nu", &report.dim_nu), ("mu*nu", &report.dim_conv)]
            .iter()
            .map(|(n, d)| (n.to_string(), d.profile.rows.iter().map(|r| (r.n as f64, r.bits)).collect()))
            .collect();
        let mut w = create(dir, "entropy_profiles.svg", &mut out)?;
        w.write_all(svg_line_chart("H_n (bits) against n", &series, &[]).as_bytes()).map_err(io_at(dir))?;
        w.flush().map_err(io_at(dir))?;
        if !report.lea.is_empty() {
            let series: Vec<(String, Vec<(f64, f64)>)> = report
                .lea
                .iter()
                .map(|l| {
                    let pts = l
                        .records
                        .iter()
                        .filter(|r| r.reliable)
                        .map(|r| (r.k as f64, r.h_conv / l.n_stride as f64))
                        .collect();
                    (mode_name(l.mode).to_string(), pts)
                })
                .collect();
            let e = report.verdict.expected;
            let mut w = create(dir, "lea_series.svg", &mut out)?;
            w.write_all(svg_line_chart("H_N / N against k", &series, &[e - 0.1, e]).as_bytes()).map_err(io_at(dir))?;
            w.flush().map_err(io_at(dir))?;
        }
    }
    Ok(out)
}

fn mode_name(m: crate::entropy::LeaMode) -> &'static str {
    match m {
        crate::entropy::LeaMode::Dyadic => "dyadic",
        crate::entropy::LeaMode::Cylinder => "cylinder",
    }
}

fn fmt_stderr(s: f64) -> String {
    if s.is_finite() { format!("{s:.4}") } else { "n/a".into() }
}

pub fn summary_text(r: &ResonanceReport) -> String {
    let mut s = String::new();
    let v = &r.verdict;
    let _ = writeln!(s, "classification: {}", v.classification);
    if let Some(c) = &v.caveat {
        let _ = writeln!(s, "caveat: {c}");
    }
    let _ = writeln!(s, "geometry: {:?}, samples {}, window n in [{}, {}], seed {}", r.config.geometry, r.config.samples, r.config.n_min, r.config.n_max, r.config.seed);
    let _ = writeln!(s);
    for (name, h) in [("mu", &r.hypotheses_mu), ("nu", &r.hypotheses_nu)] {
        let _ = writeln!(
            s,
            "{name}: separation {:?} (slack {:?}, gap {:.3e}), hyperbolic {:?}, irreducible {:?}, dominated {:?}",
            h.separation.verdict,
            h.separation_slack,
            h.separation.signed_gap,
            h.hyperbolic,
            h.irreducible.map(|i| i.is_irreducible()),
            h.dominated
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "dim mu      {:.4} +- {}", r.dim_mu.slope, fmt_stderr(r.dim_mu.stderr));
    let _ = writeln!(s, "dim nu      {:.4} +- {}", r.dim_nu.slope, fmt_stderr(r.dim_nu.stderr));
    let _ = writeln!(s, "dim mu*nu   {:.4} +- {}", r.dim_conv.slope, fmt_stderr(r.dim_conv.stderr));
    let _ = writeln!(s, "expected    {:.4}", v.expected);
    let _ = writeln!(s, "deficit     {:.4} (drop threshold {:.4}, combined stderr {:.4})", v.deficit, v.drop_threshold, v.stderr);
    if let Some(sc) = v.side_condition {
        let _ = writeln!(s, "dim mu > 1 > dim nu (either order): {sc}");
    }
    let _ = writeln!(s);
    for l in &r.lea {
        let _ = writeln!(s, "local entropy average ({}, N = {}): {:.4} over {} reliable k", mode_name(l.mode), l.n_stride, l.average, l.reliable_count);
    }
    for e in &r.lea_errors {
        let _ = writeln!(s, "local entropy average failed: {e}");
    }
    let a = &r.arithmetic;
    let _ = writeln!(s, "eigenvalue logs {:?}", r.eigen_logs);
    let _ = writeln!(s, "arithmetic: {}", a.json_line());
    if let Some((i, j)) = a.witness {
        let _ = writeln!(s, "witness pair ({i}, {j})");
    }
    for (name, d) in [("mu", &r.dynamics_mu), ("nu", &r.dynamics_nu)] {
        let _ = writeln!(s, "{name} Lyapunov: top {:.4}, bottom {:.4}", d.lyapunov.top, d.lyapunov.bottom);
        if let Some(f) = &d.furstenberg {
            let _ = writeln!(s, "{name} Furstenberg: max cell mass {:.3}, stationarity {:.4}, mean direction {:.4}", f.max_cell_mass, f.stationarity, f.mean_direction.angle());
        }
    }
    if let Some(f) = &r.fiber {
        let _ = writeln!(s, "fiber check pass rate {:.3} ({} evaluated)", f.pass_rate, f.evaluated);
    }
    for n in &v.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Minimal SVG polyline chart; `hlines` are drawn dashed.
pub fn svg_line_chart(title: &str, series: &[(String, Vec<(f64, f64)>)], hlines: &[f64]) -> String {
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for &y in hlines {
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{pad}" y="24" font-family="sans-serif" font-size="14">{title}</text>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    for (x, anchor, v) in [(sx(x0), "start", x0), (sx(x1), "end", x1)] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="{anchor}">{v:.3}</text>"#, h - pad + 16.0);
    }
    for (y, v) in [(sy(y0), y0), (sy(y1), y1)] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}" font-size="11" text-anchor="end">{v:.3}</text>"#, pad - 4.0);
    }
    for &y in hlines {
        let _ = writeln!(
            s,
            r##"<line x1="{pad}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
            w - pad,
            sy(y),
            sy(y)
        );
    }
    for (i, (name, p)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = p
            .iter()
            .filter(|q| q.0.is_finite() && q.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, d.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{c}">{name}</text>"#,
            w - pad - 90.0,
            pad + 16.0 * (i as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}
