use std::fmt::Write as _;

use serde::Serialize;
use twosite_core::ensemble::{EnsembleStats, SweepRow};

use crate::error::CliError;

/// Serializes records with a header row taken from the field names.
pub fn to_csv<R: Serialize>(records: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| CliError::Compute(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Compute(format!("csv: {e}")))
}

#[derive(Serialize)]
struct TraceRecord {
    t: f64,
    #[serde(rename = "T")]
    scaled: f64,
    p1_mean: f64,
    p1_stderr: f64,
    p2_mean: f64,
    p2_stderr: f64,
    norm_mean: f64,
}

pub fn trace_csv(stats: &EnsembleStats) -> Result<Vec<u8>, CliError> {
    let m = &stats.trace_mean;
    let e = &stats.trace_stderr;
    to_csv((0..m.len()).map(|k| TraceRecord {
        t: m.times[k],
        scaled: m.scaled_times[k],
        p1_mean: m.p1[k],
        p1_stderr: e.p1[k],
        p2_mean: m.p2[k],
        p2_stderr: e.p2[k],
        norm_mean: m.norm[k],
    }))
}

#[derive(Serialize)]
struct SweepRecord {
    #[serde(rename = "N")]
    n_levels: usize,
    lambda: f64,
    #[serde(rename = "S")]
    samples: usize,
    rate: f64,
    rate_stderr: f64,
    equilibrium_p1: f64,
    r_squared: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    to_csv(rows.iter().map(|r| SweepRecord {
        n_levels: r.n_levels,
        lambda: r.coupling,
        samples: r.samples,
        rate: r.rate(),
        rate_stderr: r.rate_stderr(),
        equilibrium_p1: r.equilibrium_p1,
        r_squared: r.r_squared(),
    }))
}

/// Line chart of `p1`, `p2` against `T` with the closed-form curves dashed.
pub fn trace_svg(stats: &EnsembleStats, closed: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let m = &stats.trace_mean;
    let t_max = m.scaled_times.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let sx = |t: f64| PAD + (W - 2.0 * PAD) * t / t_max;
    let sy = |p: f64| H - PAD - (H - 2.0 * PAD) * p;
    let polyline = |ys: &mut dyn Iterator<Item = f64>, color: &str, dash: &str| {
        let mut pts = String::new();
        for (t, y) in m.scaled_times.iter().zip(ys) {
            let _ = write!(pts, "{:.2},{:.2} ", sx(*t), sy(y));
        }
        format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>\n",
            pts.trim_end()
        )
    };
    let dashed = " stroke-dasharray=\"6,4\"";
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{PAD}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{y0}\" stroke=\"black\"/>\n",
        y0 = H - PAD,
        x1 = W - PAD,
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{tick}</text>",
            PAD - 6.0,
            sy(tick) + 4.0
        );
    }
    for k in 0..=4 {
        let t = t_max * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{:.3}</text>",
            sx(t),
            H - PAD + 16.0,
            t
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">T = lambda^2 t</text>",
        W / 2.0,
        H - 12.0
    );
    svg.push_str(&polyline(&mut m.p1.iter().copied(), "#1f77b4", ""));
    svg.push_str(&polyline(&mut m.p2.iter().copied(), "#d62728", ""));
    svg.push_str(&polyline(&mut closed.iter().map(|c| c.0), "#1f77b4", dashed));
    svg.push_str(&polyline(&mut closed.iter().map(|c| c.1), "#d62728", dashed));
    let legend = [
        ("#1f77b4", "", "p1 mean"),
        ("#d62728", "", "p2 mean"),
        ("#555555", dashed, "closed form"),
    ];
    for (i, (color, dash, label)) in legend.iter().enumerate() {
        let y = PAD + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{label}</text>",
            W - PAD - 110.0,
            W - PAD - 85.0,
            W - PAD - 80.0,
            y + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
