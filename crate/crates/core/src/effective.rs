//! Band resolvent `Theta`, the closed-form weak-coupling solution, its
//! Poisson resummation and the two-site rate equation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Imbalance decay rate of the closed-form solution.
pub const DEFAULT_DECAY_RATE: f64 = 4.0 * PI;

/// Default truncation of the Poisson series.
pub const DEFAULT_NBAR_MAX: usize = 60;

/// `Theta(alpha, eta) = ∫_0^1 -dω / (ω - alpha - i eta)`, from the
/// antiderivative `-log(ω - alpha - i eta)` with the principal logarithm.
/// Both endpoints lie in the lower half plane, so no branch cut is crossed.
pub fn theta_reg(alpha: f64, eta: f64) -> Result<C64> {
    if !(eta > 0.0 && eta.is_finite() && alpha.is_finite()) {
        return Err(Error::invalid("eta", format!("need finite eta > 0, got {eta}")));
    }
    let upper = C64::new(1.0 - alpha, -eta);
    let lower = C64::new(-alpha, -eta);
    Ok(-(upper.ln() - lower.ln()))
}

/// Boundary value `Theta(ω) = lim_{eta -> 0+} Theta(ω, eta)` on the open band:
/// `ln(ω / (1 - ω)) - i π`.
pub fn theta(omega: f64) -> Result<C64> {
    const MARGIN: f64 = 1e-6;
    if !(omega >= MARGIN && omega <= 1.0 - MARGIN) {
        return Err(Error::invalid(
            "omega",
            format!("must lie in [{MARGIN}, {}], got {omega}", 1.0 - MARGIN),
        ));
    }
    Ok(C64::new((omega / (1.0 - omega)).ln(), -PI))
}

/// Populations `(P^1, P^2)`.
pub type Populations = (f64, f64);

fn check_p0(p0: Populations) -> Result<()> {
    let (a, b) = p0;
    if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && ((a + b) - 1.0).abs() < 1e-12) {
        return Err(Error::invalid("p0", format!("need components in [0, 1] summing to 1, got ({a}, {b})")));
    }
    Ok(())
}

/// `P^x_T = (P0(x) + P0(x̄))/2 + (P0(x) - P0(x̄)) e^{-rate T} / 2`.
pub fn closed_form(t: f64, p0: Populations, rate: f64) -> Result<Populations> {
    if !(t >= 0.0) {
        return Err(Error::invalid("T", format!("must be nonnegative, got {t}")));
    }
    check_p0(p0)?;
    let mean = 0.5 * (p0.0 + p0.1);
    let half = 0.5 * (p0.0 - p0.1) * (-rate * t).exp();
    Ok((mean + half, mean - half))
}

/// Partial sum `sum_{nbar <= nbar_max} e^{-2πT} (2πT)^nbar / nbar!` times
/// `P0(x)` for even `nbar` and `P0(x̄)` for odd `nbar`.
pub fn poisson_resum(t: f64, p0: Populations, nbar_max: usize) -> Result<Populations> {
    if !(t >= 0.0) {
        return Err(Error::invalid("T", format!("must be nonnegative, got {t}")));
    }
    let mu = 2.0 * PI * t;
    let mut weight = (-mu).exp();
    let (mut even, mut odd) = (0.0, 0.0);
    for nbar in 0..=nbar_max {
        if nbar > 0 {
            weight *= mu / nbar as f64;
        }
        if nbar % 2 == 0 {
            even += weight;
        } else {
            odd += weight;
        }
    }
    Ok((even * p0.0 + odd * p0.1, even * p0.1 + odd * p0.0))
}

/// Solution of `dP^1/dT = -coeff (P^1 - P^2)`, `dP^2/dT = -coeff (P^2 - P^1)`
/// sampled on `grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTrace {
    pub scaled_times: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

/// Classical RK4 on the rate equation, with each grid interval split into
/// substeps of at most `max_step`.
pub fn rate_ode(grid: &[f64], p0: Populations, coeff: f64, max_step: f64) -> Result<RateTrace> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    if !(max_step > 0.0) {
        return Err(Error::invalid("max_step", "must be positive"));
    }
    let rhs = |p: [f64; 2]| [-coeff * (p[0] - p[1]), -coeff * (p[1] - p[0])];
    let mut state = [p0.0, p0.1];
    let mut out = RateTrace {
        scaled_times: grid.to_vec(),
        p1: Vec::with_capacity(grid.len()),
        p2: Vec::with_capacity(grid.len()),
    };
    for (idx, &t) in grid.iter().enumerate() {
        if idx > 0 {
            let span = t - grid[idx - 1];
            let steps = (span / max_step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let add = |p: [f64; 2], k: [f64; 2], s: f64| [p[0] + s * k[0], p[1] + s * k[1]];
                let k1 = rhs(state);
                let k2 = rhs(add(state, k1, h / 2.0));
                let k3 = rhs(add(state, k2, h / 2.0));
                let k4 = rhs(add(state, k3, h));
                for i in 0..2 {
                    state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        out.p1.push(state[0]);
        out.p2.push(state[1]);
    }
    Ok(out)
}

/// Closed-form effective dynamics for a given initial split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSolution {
    pub p0: Populations,
    pub decay_rate: f64,
}

impl EffectiveSolution {
    pub fn new(p0: Populations) -> Result<Self> {
        check_p0(p0)?;
        Ok(Self {
            p0,
            decay_rate: DEFAULT_DECAY_RATE,
        })
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.decay_rate = rate;
        self
    }

    pub fn at(&self, t: f64) -> Result<Populations> {
        closed_form(t, self.p0, self.decay_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive_complex, breakpoints, Tolerance};

    fn theta_by_quadrature(alpha: f64, eta: f64) -> C64 {
        let tol = Tolerance {
            abs: 1e-14,
            rel: 1e-13,
            max_intervals: 100_000,
        };
        adaptive_complex(|w| -C64::new(w - alpha, -eta).inv(), &breakpoints(0.0, 1.0, &[alpha]), tol).unwrap()
    }

    #[test]
    fn theta_boundary_values() {
        assert!(theta(0.5).unwrap().re.abs() < 1e-15);
        for w in [0.2, 0.5, 0.8] {
            let th = theta(w).unwrap();
            let identity = C64::new(0.0, 1.0) * (th - th.conj());
            assert!((identity - C64::new(2.0 * PI, 0.0)).norm() < 1e-9);
        }
        assert!(theta(0.0).is_err() && theta(1.0).is_err());
    }

    #[test]
    fn theta_reg_matches_quadrature() {
        for alpha in [-0.5, 0.1, 0.5, 0.93, 2.0] {
            let q = theta_by_quadrature(alpha, 0.1);
            let c = theta_reg(alpha, 0.1).unwrap();
            assert!((q - c).norm() < 1e-9, "alpha={alpha}: {q} vs {c}");
        }
        // Near the boundary value the integral of -Lorentzian is close to -π.
        let c = theta_reg(0.5, 1e-3).unwrap();
        let q = theta_by_quadrature(0.5, 1e-3);
        assert!((c.im + PI).abs() < 1e-2);
        assert!((q - c).norm() < 1e-8);
    }

    #[test]
    fn theta_reg_converges_to_boundary_value() {
        // Quadrature at eta = 1e-4 lands within 1e-3 of the limit, and the gap
        // shrinks with eta.
        let limit = theta(0.3).unwrap();
        let q = theta_by_quadrature(0.3, 1e-4);
        assert!((q - limit).norm() < 1e-3);
        let mut last = f64::INFINITY;
        for eta in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
            let gap = (theta_reg(0.3, eta).unwrap() - limit).norm();
            assert!(gap < last);
            last = gap;
        }
    }

    #[test]
    fn theta_reg_large_eta_decays() {
        let a = theta_reg(0.5, 1e3).unwrap().norm();
        let b = theta_reg(0.5, 2e3).unwrap().norm();
        assert!((a / b - 2.0).abs() < 1e-5);
        assert!(theta_reg(0.5, 0.0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form(0.0, (1.0, 0.0), DEFAULT_DECAY_RATE).unwrap(), (1.0, 0.0));
        let (a, b) = closed_form(1e3, (1.0, 0.0), DEFAULT_DECAY_RATE).unwrap();
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        let (a, b) = closed_form(2f64.ln() / (4.0 * PI), (1.0, 0.0), 4.0 * PI).unwrap();
        assert!((a - 0.75).abs() < 1e-15 && (b - 0.25).abs() < 1e-15);
        assert!(closed_form(-1.0, (1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn poisson_series_single_term_and_convergence() {
        let t = 0.2;
        let (a, b) = poisson_resum(t, (0.7, 0.3), 0).unwrap();
        let w = (-2.0 * PI * t).exp();
        assert!((a - 0.7 * w).abs() < 1e-16 && (b - 0.3 * w).abs() < 1e-16);
        let (a, b) = poisson_resum(0.1, (1.0, 0.0), 60).unwrap();
        let (c, d) = closed_form(0.1, (1.0, 0.0), DEFAULT_DECAY_RATE).unwrap();
        assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_ode_matches_closed_form_at_half_coefficient() {
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.025).collect();
        let ode = rate_ode(&grid, (1.0, 0.0), 2.0 * PI, 1e-3).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            let (a, _) = closed_form(t, (1.0, 0.0), 4.0 * PI).unwrap();
            assert!((ode.p1[k] - a).abs() < 1e-8);
            assert!((ode.p1[k] + ode.p2[k] - 1.0).abs() < 1e-14);
        }
        let flat = rate_ode(&grid, (0.8, 0.2), 0.0, 1e-2).unwrap();
        assert!(flat.p1.iter().all(|&p| p == 0.8));
    }

    #[test]
    fn rate_ode_step_halving_is_converged() {
        let grid = [0.0, 0.5, 1.0];
        let a = rate_ode(&grid, (1.0, 0.0), 4.0 * PI, 1e-3).unwrap();
        let b = rate_ode(&grid, (1.0, 0.0), 4.0 * PI, 5e-4).unwrap();
        for k in 0..3 {
            assert!((a.p1[k] - b.p1[k]).abs() < 1e-10);
        }
        // Verbatim coefficient 4π doubles the imbalance rate.
        let (expected, _) = closed_form(0.5, (1.0, 0.0), 8.0 * PI).unwrap();
        assert!((a.p1[1] - expected).abs() < 1e-8);
    }
}
