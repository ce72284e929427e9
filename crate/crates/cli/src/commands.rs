use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use twosite_core::bounds::{sweep_all, BoundCheckReport};
use twosite_core::diagrammatics::{catalan, count_by_class, matching_count, moment_monte_carlo, moment_sums};
use twosite_core::effective::{closed_form, poisson_resum, rate_ode, theta, DEFAULT_DECAY_RATE};
use twosite_core::ensemble::{
    fit_rate, run_scaled_ensemble, vanhove_sweep, EnsembleStats, RateFit, SweepPlan, SweepRow,
};
use twosite_core::model::make_initial_state;

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::RunDir;
use crate::output::{sweep_csv, to_csv, trace_csv, trace_svg};

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Compute(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Serialize)]
pub struct VerbatimCheck {
    pub rate: f64,
    pub z: f64,
    pub excluded_at_3_sigma: bool,
}

#[derive(Debug, Serialize)]
pub struct ClosedFormGap {
    pub window: (f64, f64),
    pub max_abs_gap: f64,
    /// Largest `|gap| / max(0.02, 3 stderr)` over the window.
    pub max_gap_over_tolerance: f64,
}

#[derive(Debug, Serialize)]
pub struct Equilibrium {
    #[serde(rename = "T")]
    pub scaled_time: f64,
    pub p1_mean: f64,
    pub p1_stderr: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub fit: Option<RateFit>,
    pub fit_error: Option<String>,
    pub reference_rate: f64,
    pub relative_deviation: f64,
    /// Imbalance rate if the rate equation is read with coefficient 4π.
    pub verbatim: VerbatimCheck,
    pub closed_form_gap: ClosedFormGap,
    pub equilibrium: Equilibrium,
}

fn closed_curve(cfg: &Config, scaled: &[f64]) -> Result<Vec<(f64, f64)>, CliError> {
    let p0 = cfg.initial_populations()?;
    scaled
        .iter()
        .map(|&t| closed_form(t, p0, DEFAULT_DECAY_RATE).map_err(CliError::from))
        .collect()
}

fn summarize(cfg: &Config, stats: &EnsembleStats, fit: Result<RateFit, String>) -> Result<SimulateSummary, CliError> {
    let window = cfg.window()?;
    let m = &stats.trace_mean;
    let closed = closed_curve(cfg, &m.scaled_times)?;
    let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
    for (k, &t) in m.scaled_times.iter().enumerate() {
        if t < window.0 || t > window.1 {
            continue;
        }
        let gap = (m.p1[k] - closed[k].0).abs();
        max_abs = max_abs.max(gap);
        max_rel = max_rel.max(gap / 0.02f64.max(3.0 * stats.trace_stderr.p1[k]));
    }
    let last = m.len() - 1;
    let (rate, stderr) = fit.as_ref().map_or((f64::NAN, f64::NAN), |f| (f.rate, f.rate_stderr));
    let verbatim_rate = 8.0 * PI;
    let z = (verbatim_rate - rate) / stderr;
    Ok(SimulateSummary {
        reference_rate: DEFAULT_DECAY_RATE,
        relative_deviation: (rate - DEFAULT_DECAY_RATE).abs() / DEFAULT_DECAY_RATE,
        verbatim: VerbatimCheck {
            rate: verbatim_rate,
            z,
            excluded_at_3_sigma: z.abs() > 3.0,
        },
        closed_form_gap: ClosedFormGap {
            window,
            max_abs_gap: max_abs,
            max_gap_over_tolerance: max_rel,
        },
        equilibrium: Equilibrium {
            scaled_time: m.scaled_times[last],
            p1_mean: m.p1[last],
            p1_stderr: stats.trace_stderr.p1[last],
        },
        fit_error: fit.as_ref().err().cloned(),
        fit: fit.ok(),
    })
}

fn check_initial_state(cfg: &Config) -> Result<(), CliError> {
    let initial = cfg.initial()?;
    make_initial_state(&cfg.spectrum()?, initial.site, initial.band)
        .map(|_| ())
        .map_err(|e| CliError::Usage(format!("config field initial_state: {e}")))
}

pub fn simulate(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let spectrum = cfg.spectrum()?;
    check_initial_state(cfg)?;
    let scaled = cfg.scaled_times()?;
    if !(spectrum.coupling > 0.0) {
        return Err(CliError::Usage("config field model.coupling: scaled time needs lambda > 0".into()));
    }
    let window = cfg.window()?;
    let samples = cfg.samples()?;
    let mut dir = RunDir::create(out, "simulate", cfg)?;

    let stats = run_scaled_ensemble(&spectrum, cfg.initial()?, &scaled, samples, cfg.seed)?;
    let fit = fit_rate(&stats, window).map_err(|e| e.to_string());
    if let Err(e) = &fit {
        eprintln!("warning: {e}");
    }
    let summary = summarize(cfg, &stats, fit)?;

    dir.write("trace.csv", &trace_csv(&stats)?)?;
    dir.write("trace.svg", trace_svg(&stats, &closed_curve(cfg, &scaled)?).as_bytes())?;
    dir.write("summary.json", &json(&summary)?)?;
    let manifest = dir.finish()?;

    println!("run {} -> {}", manifest.run_id, out.display());
    if let Some(f) = &summary.fit {
        println!(
            "rate = {:.4} +- {:.4} (4pi = {:.4}, relative deviation {:.4}); r^2 = {:.5}",
            f.rate, f.rate_stderr, DEFAULT_DECAY_RATE, summary.relative_deviation, f.r_squared
        );
    }
    println!(
        "8pi {} at 3 sigma (z = {:.2})",
        if summary.verbatim.excluded_at_3_sigma { "is excluded" } else { "is NOT excluded" },
        summary.verbatim.z
    );
    println!(
        "closed-form gap over window: max {:.4}, max gap / tolerance {:.3}",
        summary.closed_form_gap.max_abs_gap, summary.closed_form_gap.max_gap_over_tolerance
    );
    println!(
        "p1(T = {}) = {:.5} +- {:.5}",
        summary.equilibrium.scaled_time, summary.equilibrium.p1_mean, summary.equilibrium.p1_stderr
    );
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    rows: &'a [SweepRow],
    flagged: Vec<usize>,
}

pub fn sweep(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let base = cfg.spectrum()?;
    check_initial_state(cfg)?;
    if cfg.sweep.couplings.iter().any(|&l| !(l > 0.0)) {
        return Err(CliError::Usage("config field sweep.couplings: every lambda must be positive".into()));
    }
    let plan = SweepPlan {
        initial: cfg.initial()?,
        scaled_times: cfg.scaled_times()?,
        window: cfg.window()?,
        samples: cfg.samples()?,
        master_seed: cfg.seed,
    };
    let mut dir = RunDir::create(out, "sweep", cfg)?;
    let (rows, _) = vanhove_sweep(&base, &cfg.sweep.couplings, &cfg.sweep.sizes, &plan)?;
    let flagged: Vec<usize> = rows.iter().enumerate().filter(|(_, r)| r.fit.is_err()).map(|(i, _)| i).collect();
    for &i in &flagged {
        let r = &rows[i];
        eprintln!(
            "warning: row N={}, lambda={} flagged: {}",
            r.n_levels,
            r.coupling,
            r.fit.as_ref().unwrap_err()
        );
    }
    dir.write("sweep.csv", &sweep_csv(&rows)?)?;
    dir.write("sweep.json", &json(&SweepReport { rows: &rows, flagged })?)?;
    let manifest = dir.finish()?;

    println!("run {} -> {}", manifest.run_id, out.display());
    for r in &rows {
        println!(
            "N={} lambda={} S={} rate={:.4} rate_stderr={:.4} |rate-4pi|={:.4} equilibrium_p1={:.5}",
            r.n_levels,
            r.coupling,
            r.samples,
            r.rate(),
            r.rate_stderr(),
            (r.rate() - DEFAULT_DECAY_RATE).abs(),
            r.equilibrium_p1
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct DiagramRow {
    pub n: usize,
    pub m: usize,
    pub simple: u64,
    pub nested: u64,
    pub noncrossing: u64,
    pub crossing: u64,
    pub catalan: u64,
    pub matchings: u64,
    #[serde(rename = "match")]
    pub matches: bool,
}

pub fn diagrams(cfg: &Config, out: Option<&Path>) -> Result<(), CliError> {
    let (n, m) = (cfg.diagrams.n, cfg.diagrams.m);
    let counts = count_by_class(n, m)?;
    let k = ((n + m) / 2) as u64;
    let row = DiagramRow {
        n,
        m,
        simple: counts.simple,
        nested: counts.nested,
        noncrossing: counts.noncrossing(),
        crossing: counts.crossing,
        catalan: catalan(k),
        matchings: matching_count(k),
        matches: counts.noncrossing() == catalan(k) && counts.total() == matching_count(k),
    };
    println!(
        "n={}, m={}, simple={}, nested={}, noncrossing={}, crossing={}, catalan={}, match={}",
        row.n, row.m, row.simple, row.nested, row.noncrossing, row.crossing, row.catalan, row.matches
    );
    if let Some(out) = out {
        let mut dir = RunDir::create(out, "diagrams", cfg)?;
        dir.write("diagrams.csv", &to_csv([&row])?)?;
        dir.finish()?;
    }
    if !row.matches {
        return Err(CliError::Compute("class counts disagree with Catalan / (2k-1)!!".into()));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct MomentRow {
    pub k: usize,
    #[serde(rename = "N")]
    pub n_levels: usize,
    #[serde(rename = "S")]
    pub samples: usize,
    pub formula: f64,
    pub noncrossing: f64,
    pub crossing: f64,
    pub monte_carlo: f64,
    pub stderr: f64,
    pub z: f64,
}

pub fn moments(cfg: &Config, out: Option<&Path>) -> Result<(), CliError> {
    let s = &cfg.moments;
    let sums = moment_sums(s.k, s.n_levels)?;
    let mc = moment_monte_carlo(s.k, s.n_levels, s.samples, cfg.seed)?;
    let row = MomentRow {
        k: s.k,
        n_levels: s.n_levels,
        samples: s.samples,
        formula: sums.total(),
        noncrossing: sums.noncrossing,
        crossing: sums.crossing,
        monte_carlo: mc.mean,
        stderr: mc.stderr,
        z: (mc.mean - sums.total()) / mc.stderr,
    };
    println!(
        "k={}, N={}, S={}, formula={}, monte_carlo={:.6}, stderr={:.6}, z={:.3}",
        row.k, row.n_levels, row.samples, row.formula, row.monte_carlo, row.stderr, row.z
    );
    if let Some(out) = out {
        let mut dir = RunDir::create(out, "moments", cfg)?;
        dir.write("moments.csv", &to_csv([&row])?)?;
        dir.finish()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EffectiveRecord {
    #[serde(rename = "T")]
    scaled: f64,
    closed_p1: f64,
    closed_p2: f64,
    poisson_p1: f64,
    poisson_p2: f64,
    ode_p1: f64,
    ode_p2: f64,
}

pub fn effective(cfg: &Config, out: Option<&Path>) -> Result<(), CliError> {
    let e = &cfg.effective;
    if !(0.0..=1.0).contains(&e.p1) {
        return Err(CliError::Usage(format!("config field effective.p1: must lie in [0, 1], got {}", e.p1)));
    }
    let p0 = (e.p1, 1.0 - e.p1);
    let grid = cfg.scaled_times()?;
    let ode = rate_ode(&grid, p0, e.ode_coefficient, 1e-4)?;
    let mut records = Vec::with_capacity(grid.len());
    let (mut poisson_gap, mut ode_gap) = (0.0f64, 0.0f64);
    for (k, &t) in grid.iter().enumerate() {
        let c = closed_form(t, p0, DEFAULT_DECAY_RATE)?;
        let p = poisson_resum(t, p0, e.nbar_max)?;
        poisson_gap = poisson_gap.max((p.0 - c.0).abs()).max((p.1 - c.1).abs());
        ode_gap = ode_gap.max((ode.p1[k] - c.0).abs());
        records.push(EffectiveRecord {
            scaled: t,
            closed_p1: c.0,
            closed_p2: c.1,
            poisson_p1: p.0,
            poisson_p2: p.1,
            ode_p1: ode.p1[k],
            ode_p2: ode.p2[k],
        });
    }
    let mut theta_gap = 0.0f64;
    for j in 1..100 {
        let th = theta(0.05 + 0.9 * j as f64 / 100.0)?;
        let identity = twosite_core::C64::new(0.0, 1.0) * (th - th.conj());
        theta_gap = theta_gap.max((identity - twosite_core::C64::new(2.0 * PI, 0.0)).norm());
    }
    println!("max |poisson - closed| = {poisson_gap:.3e} (nbar_max = {})", e.nbar_max);
    println!(
        "max |ode - closed| = {ode_gap:.3e} (coefficient {:.6}, imbalance rate {:.6})",
        e.ode_coefficient,
        2.0 * e.ode_coefficient
    );
    println!("max |i(Theta - conj Theta) - 2pi| on the band = {theta_gap:.3e}");
    if let Some(out) = out {
        let mut dir = RunDir::create(out, "effective", cfg)?;
        dir.write("effective.csv", &to_csv(records)?)?;
        dir.finish()?;
    }
    Ok(())
}

pub fn verify_bounds(cfg: &Config, out: Option<&Path>) -> Result<(), CliError> {
    let reports: Vec<BoundCheckReport> = sweep_all(cfg.bounds.samples, cfg.seed)?;
    for r in &reports {
        println!(
            "{} samples={} constant={} max_ratio={:.6} violations={}",
            r.inequality_id.name(),
            r.samples,
            r.constant,
            r.max_ratio,
            r.violations
        );
    }
    if let Some(out) = out {
        let mut dir = RunDir::create(out, "verify-bounds", cfg)?;
        dir.write("bounds.json", &json(&reports)?)?;
        dir.finish()?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.inequality_id.name()).collect();
    if !failed.is_empty() {
        return Err(CliError::Compute(format!("bound violations in {}", failed.join(", "))));
    }
    Ok(())
}
