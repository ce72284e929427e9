//! Seeded ensemble averages over independent draws of `V`, relaxation-rate
//! fits and the weak-coupling sweep.
//!
//! Member `i` of an ensemble always uses `member_seed(master_seed, i)`.
//! Members are evaluated in parallel on the ambient rayon pool and reduced
//! sequentially in index order, so results do not depend on the number of
//! threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{assemble_hamiltonian, build_h0, make_initial_state, sample_interaction, Site, SpectrumConfig};
use crate::propagator::{eigendecompose, evolve, RelaxationTrace};
use crate::seeds::member_seed;
use crate::{Error, Result};

/// Initial condition: uniform over the levels of `site` with energy in `band`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub site: Site,
    pub band: (f64, f64),
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            site: Site::One,
            band: (0.3, 0.7),
        }
    }
}

/// Default fit window in scaled time `T`.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.02, 0.15);

/// Standard errors of the ensemble-mean trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStderr {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub norm: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub trace_mean: RelaxationTrace,
    pub trace_stderr: TraceStderr,
    pub n_samples: usize,
    pub member_seeds: Vec<u64>,
    /// Per-member traces, in member order.
    pub members: Vec<RelaxationTrace>,
}

/// `T_k = k * step` for `k = 0..` up to and including `t_max` (within rounding).
pub fn scaled_time_grid(t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::invalid("time grid", format!("need step > 0 and T_max >= 0, got {step}, {t_max}")));
    }
    let count = (t_max / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| k as f64 * step).collect())
}

/// Physical times `t = T / lambda^2` for a grid of scaled times.
pub fn physical_times(scaled: &[f64], coupling: f64) -> Result<Vec<f64>> {
    if coupling <= 0.0 {
        return Err(Error::invalid("coupling", "scaled time needs lambda > 0"));
    }
    let l2 = coupling * coupling;
    Ok(scaled.iter().map(|t| t / l2).collect())
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let s = count as f64;
    let mean = values.clone().sum::<f64>() / s;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / (s - 1.0);
    (mean, (var / s).sqrt())
}

/// Ensemble average of the site populations over `samples` draws of `V`.
pub fn run_ensemble(
    config: &SpectrumConfig,
    initial: InitialState,
    times: &[f64],
    samples: usize,
    master_seed: u64,
) -> Result<EnsembleStats> {
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one ensemble member"));
    }
    config.validate()?;
    let h0 = build_h0(config)?;
    let psi0 = make_initial_state(config, initial.site, initial.band)?;
    let member_seeds: Vec<u64> = (0..samples as u64).map(|i| member_seed(master_seed, i)).collect();

    let results: Vec<Result<RelaxationTrace>> = member_seeds
        .par_iter()
        .map(|&seed| {
            let v = sample_interaction(config, seed);
            let h = assemble_hamiltonian(&h0, &v, config.coupling)?;
            evolve(&psi0, &eigendecompose(&h)?, times)
        })
        .collect();
    let mut members = Vec::with_capacity(samples);
    for (index, r) in results.into_iter().enumerate() {
        members.push(r.map_err(|e| Error::Member {
            index,
            source: Box::new(e),
        })?);
    }
    Ok(aggregate(members, member_seeds))
}

/// [`run_ensemble`] on a grid of scaled times `T`, with `t = T / lambda^2`.
/// The returned traces carry the given `T` values exactly.
pub fn run_scaled_ensemble(
    config: &SpectrumConfig,
    initial: InitialState,
    scaled: &[f64],
    samples: usize,
    master_seed: u64,
) -> Result<EnsembleStats> {
    let times = physical_times(scaled, config.coupling)?;
    let mut stats = run_ensemble(config, initial, &times, samples, master_seed)?;
    for trace in std::iter::once(&mut stats.trace_mean).chain(stats.members.iter_mut()) {
        trace.scaled_times.copy_from_slice(scaled);
    }
    Ok(stats)
}

/// Mean trace and standard errors of a set of member traces on one grid.
pub fn aggregate(members: Vec<RelaxationTrace>, member_seeds: Vec<u64>) -> EnsembleStats {
    let s = members.len();
    let first = &members[0];
    let len = first.len();
    let mut mean = RelaxationTrace {
        times: first.times.clone(),
        scaled_times: first.scaled_times.clone(),
        p1: Vec::with_capacity(len),
        p2: Vec::with_capacity(len),
        norm: Vec::with_capacity(len),
    };
    let mut stderr = TraceStderr {
        p1: Vec::with_capacity(len),
        p2: Vec::with_capacity(len),
        norm: Vec::with_capacity(len),
    };
    for k in 0..len {
        let (m, e) = mean_and_stderr(members.iter().map(|t| t.p1[k]), s);
        mean.p1.push(m);
        stderr.p1.push(e);
        let (m, e) = mean_and_stderr(members.iter().map(|t| t.p2[k]), s);
        mean.p2.push(m);
        stderr.p2.push(e);
        let (m, e) = mean_and_stderr(members.iter().map(|t| t.norm[k]), s);
        mean.norm.push(m);
        stderr.norm.push(e);
    }
    EnsembleStats {
        trace_mean: mean,
        trace_stderr: stderr,
        n_samples: s,
        member_seeds,
        members,
    }
}

/// Log-linear fit of the imbalance `D(T) = p1 - p2`: `log D = intercept - rate * T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_window: (f64, f64),
    pub points: usize,
    /// Delete-one jackknife over ensemble members; NaN for a single trace.
    pub rate_stderr: f64,
}

/// Fits `log(p1 - p2)` against `T` over the samples with `T` in `window`.
pub fn fit_trace(trace: &RelaxationTrace, window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..trace.len() {
        let t = trace.scaled_times[k];
        if t < lo || t > hi {
            continue;
        }
        let d = trace.p1[k] - trace.p2[k];
        if !(d > 0.0) {
            return Err(Error::Fit(format!("imbalance {d:e} is not positive at T = {t}")));
        }
        xs.push(t);
        ys.push(d.ln());
    }
    if xs.len() < 4 {
        return Err(Error::Fit(format!(
            "only {} samples inside the window [{lo}, {hi}]; need at least 4",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    if !slope.is_finite() {
        return Err(Error::Fit("non-finite slope".into()));
    }
    Ok(RateFit {
        rate: -slope,
        intercept,
        r_squared,
        fit_window: window,
        points: xs.len(),
        rate_stderr: f64::NAN,
    })
}

/// Fits the ensemble-mean imbalance and attaches a jackknife standard error.
pub fn fit_rate(stats: &EnsembleStats, window: (f64, f64)) -> Result<RateFit> {
    let mut fit = fit_trace(&stats.trace_mean, window)?;
    let s = stats.members.len();
    if s < 2 {
        return Ok(fit);
    }
    let mut rates = Vec::with_capacity(s);
    for skip in 0..s {
        let rest: Vec<RelaxationTrace> = stats
            .members
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, t)| t.clone())
            .collect();
        let loo = aggregate(rest, Vec::new());
        rates.push(fit_trace(&loo.trace_mean, window)?.rate);
    }
    let mean = rates.iter().sum::<f64>() / s as f64;
    let ss: f64 = rates.iter().map(|r| (r - mean).powi(2)).sum();
    fit.rate_stderr = ((s as f64 - 1.0) / s as f64 * ss).sqrt();
    Ok(fit)
}

/// One `(N, lambda)` point of a weak-coupling sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_levels: usize,
    pub coupling: f64,
    pub samples: usize,
    /// `Err` text when the fit failed; the row is kept with NaN fit fields.
    pub fit: std::result::Result<RateFit, String>,
    pub equilibrium_p1: f64,
    pub equilibrium_p1_stderr: f64,
}

impl SweepRow {
    pub fn rate(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, |f| f.rate)
    }

    pub fn rate_stderr(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, |f| f.rate_stderr)
    }

    pub fn r_squared(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, |f| f.r_squared)
    }
}

/// Sweep settings shared by every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub initial: InitialState,
    /// Scaled times `T`; each row uses `t = T / lambda^2`.
    pub scaled_times: Vec<f64>,
    pub window: (f64, f64),
    pub samples: usize,
    pub master_seed: u64,
}

/// Runs one ensemble per `(N, lambda)` pair (N outer, lambda inner) on a
/// common `T` grid. Every row reuses `master_seed`, so rows with equal `N`
/// share their draws of `V`.
pub fn vanhove_sweep(
    base: &SpectrumConfig,
    couplings: &[f64],
    sizes: &[usize],
    plan: &SweepPlan,
) -> Result<(Vec<SweepRow>, Vec<EnsembleStats>)> {
    if couplings.is_empty() || sizes.is_empty() {
        return Err(Error::invalid("sweep", "lambda and N lists must be nonempty"));
    }
    let mut rows = Vec::new();
    let mut all_stats = Vec::new();
    for &n in sizes {
        for &lambda in couplings {
            let config = base.with_levels(n).with_coupling(lambda);
            let stats = run_scaled_ensemble(&config, plan.initial, &plan.scaled_times, plan.samples, plan.master_seed)?;
            let last = stats.trace_mean.len() - 1;
            rows.push(SweepRow {
                n_levels: n,
                coupling: lambda,
                samples: plan.samples,
                fit: fit_rate(&stats, plan.window).map_err(|e| e.to_string()),
                equilibrium_p1: stats.trace_mean.p1[last],
                equilibrium_p1_stderr: stats.trace_stderr.p1[last],
            });
            all_stats.push(stats);
        }
    }
    Ok((rows, all_stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn synthetic(rate: f64, amplitude: f64) -> RelaxationTrace {
        let t: Vec<f64> = (0..=60).map(|k| k as f64 * 0.005).collect();
        let d: Vec<f64> = t.iter().map(|t| amplitude * (-rate * t).exp()).collect();
        RelaxationTrace {
            times: t.clone(),
            scaled_times: t.clone(),
            p1: d.iter().map(|d| 0.5 + d / 2.0).collect(),
            p2: d.iter().map(|d| 0.5 - d / 2.0).collect(),
            norm: vec![1.0; t.len()],
        }
    }

    #[test]
    fn fit_recovers_exact_exponentials() {
        let fit = fit_trace(&synthetic(4.0 * PI, 1.0), DEFAULT_FIT_WINDOW).unwrap();
        assert!((fit.rate - 4.0 * PI).abs() < 1e-9);
        assert!(fit.intercept.abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let fit = fit_trace(&synthetic(2.0, 0.5), DEFAULT_FIT_WINDOW).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-9);
        assert!((fit.intercept - 0.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_bad_windows() {
        let mut trace = synthetic(2.0, 0.5);
        assert!(fit_trace(&trace, (0.0, 0.01)).is_err());
        trace.p1[10] = 0.2;
        assert!(matches!(fit_trace(&trace, (0.0, 0.3)), Err(Error::Fit(_))));
    }

    #[test]
    fn single_member_has_zero_stderr() {
        let cfg = SpectrumConfig::new(16, 0.1, 0.05, 0).unwrap();
        let times = physical_times(&scaled_time_grid(0.2, 0.05).unwrap(), 0.1).unwrap();
        let stats = run_ensemble(&cfg, InitialState::default(), &times, 1, 9).unwrap();
        assert_eq!(stats.trace_mean, stats.members[0]);
        assert!(stats.trace_stderr.p1.iter().all(|&e| e == 0.0));
        assert_eq!(stats.member_seeds, vec![member_seed(9, 0)]);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = SpectrumConfig::new(24, 0.1, 0.05, 0).unwrap();
        let times = physical_times(&scaled_time_grid(0.2, 0.02).unwrap(), 0.1).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&cfg, InitialState::default(), &times, 12, 77).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.trace_mean, b.trace_mean);
        assert_eq!(a.trace_stderr, b.trace_stderr);
    }

    #[test]
    fn mean_trace_conserves_probability() {
        let cfg = SpectrumConfig::new(32, 0.1, 0.05, 0).unwrap();
        let times = physical_times(&scaled_time_grid(0.3, 0.03).unwrap(), 0.1).unwrap();
        let stats = run_ensemble(&cfg, InitialState::default(), &times, 6, 1).unwrap();
        for k in 0..times.len() {
            assert!((stats.trace_mean.p1[k] + stats.trace_mean.p2[k] - 1.0).abs() < 1e-9);
            assert!(stats.trace_stderr.p1[k] >= 0.0);
        }
    }

    #[test]
    fn grid_helpers() {
        let grid = scaled_time_grid(0.3, 0.005).unwrap();
        assert_eq!(grid.len(), 61);
        assert!((grid[60] - 0.3).abs() < 1e-12);
        let t1 = physical_times(&grid, 0.1).unwrap();
        let t2 = physical_times(&grid, 0.05).unwrap();
        assert!((t2[10] / t1[10] - 4.0).abs() < 1e-12);
        assert!(physical_times(&grid, 0.0).is_err());
    }
}
