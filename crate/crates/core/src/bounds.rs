//! Numerical checks of the resolvent integral inequalities used in the
//! weak-coupling error analysis.
//!
//! Every check evaluates a left-hand side by quadrature and compares it with
//! `constant * rhs`. Constants the inequalities leave unspecified were fitted
//! once on the coarse grids in [`fit_constants`], multiplied by
//! [`FIT_MARGIN`] and frozen below; randomized sweeps then confirm them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::effective::{theta, theta_reg};
use crate::quadrature::{adaptive_with_breaks, breakpoints, graded_rule, quartic_integral, Tolerance};
use crate::seeds::member_seed;
use crate::{Error, Result, C64};

/// Range of pole positions `alpha, beta, x, y` in sweeps.
pub const POLE_RANGE: (f64, f64) = (-2.0, 3.0);
/// Range of `eta` in sweeps (sampled log-uniformly).
pub const ETA_RANGE: (f64, f64) = (1e-3, 0.5);
/// Upper end of `eta` for the four-propagator integral.
pub const FOUR_K_ETA_MAX: f64 = 0.2;
/// Half-width `C` of the integration range `[-C, C]`.
pub const HALF_WIDTH: f64 = 3.0;
/// Exponent of the fractional-power two-pole bound.
pub const DELTA: f64 = 0.75;
/// Edge cutoff for band energies `ω` in the `Theta` check.
pub const BAND_CUTOFF: f64 = 0.05;
/// Factor applied to coarse-grid maxima before freezing a constant.
pub const FIT_MARGIN: f64 = 1.25;
/// Ratios above `1 + RATIO_TOLERANCE` count as violations.
pub const RATIO_TOLERANCE: f64 = 1e-6;

/// Constant of the two-propagator product bound. With constant 1 the bound
/// fails for in-band poles (`k = p = 1`, `alpha = beta = 0.5`,
/// `eta = 0.01` gives about 310 against 100); Cauchy–Schwarz with
/// `∫_R dω / ((ω - a)^2 + eta^2) = π / eta` gives π.
pub const PRODUCT_CONSTANT: f64 = PI;
/// Frozen constant of the logarithmic two-pole bound.
pub const AB_LOG_CONSTANT: f64 = 14.3;
/// Frozen constant of the fractional-power two-pole bound at [`DELTA`].
pub const AB_DELTA_CONSTANT: f64 = 19.9;
/// Frozen constant of the four-propagator bound.
pub const FOUR_K_CONSTANT: f64 = 60.7;

fn tolerance() -> Tolerance {
    Tolerance {
        abs: 0.0,
        rel: 1e-10,
        max_intervals: 50_000,
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", format!("must be finite and positive, got {eta}")));
    }
    Ok(())
}

/// Left- and right-hand side of one inequality instance, before constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundSample {
    pub fn ratio(&self, constant: f64) -> f64 {
        self.lhs / (constant * self.rhs)
    }
}

/// `|∫_0^1 (-1/(ω - alpha - i eta))^k dω|` against
/// `|1/(1 - alpha - i eta)|^(k-1) + |1/(-alpha - i eta)|^(k-1)`.
pub fn power_bound(k: u32, alpha: f64, eta: f64) -> Result<BoundSample> {
    check_eta(eta)?;
    if k < 2 {
        return Err(Error::invalid("k", format!("need k >= 2, got {k}")));
    }
    let c = C64::new(alpha, eta);
    let f = |w: f64| (-(C64::new(w, 0.0) - c).inv()).powu(k);
    let breaks = breakpoints(0.0, 1.0, &[alpha]);
    let scale = adaptive_with_breaks(|w| f(w).norm(), &breaks, tolerance())?.value;
    let tol = Tolerance {
        abs: 1e-11 * scale,
        ..tolerance()
    };
    let re = adaptive_with_breaks(|w| f(w).re, &breaks, tol)?.value;
    let im = adaptive_with_breaks(|w| f(w).im, &breaks, tol)?.value;
    let rhs = C64::new(1.0 - alpha, -eta).norm().powi(1 - k as i32) + C64::new(-alpha, -eta).norm().powi(1 - k as i32);
    Ok(BoundSample {
        lhs: C64::new(re, im).norm(),
        rhs,
    })
}

/// Ratio of the single-propagator power bound (constant 1).
pub fn check_power_bound(k: u32, alpha: f64, eta: f64) -> Result<f64> {
    Ok(power_bound(k, alpha, eta)?.ratio(1.0))
}

/// `∫_0^1 |ω - alpha - i eta|^-k |ω - beta + i eta|^-p dω` against `eta^-(k+p-1)`.
pub fn product_bound(k: u32, p: u32, alpha: f64, beta: f64, eta: f64) -> Result<BoundSample> {
    check_eta(eta)?;
    if k + p < 2 {
        return Err(Error::invalid("k + p", format!("need k + p >= 2, got {}", k + p)));
    }
    let lhs = adaptive_with_breaks(
        |w| ((w - alpha).powi(2) + eta * eta).powf(-0.5 * k as f64) * ((w - beta).powi(2) + eta * eta).powf(-0.5 * p as f64),
        &breakpoints(0.0, 1.0, &[alpha, beta]),
        tolerance(),
    )?
    .value;
    Ok(BoundSample {
        lhs,
        rhs: eta.powi(1 - (k + p) as i32),
    })
}

/// Ratio of the product bound against [`PRODUCT_CONSTANT`].
pub fn check_product_bound(k: u32, p: u32, alpha: f64, beta: f64, eta: f64) -> Result<f64> {
    Ok(product_bound(k, p, alpha, beta, eta)?.ratio(PRODUCT_CONSTANT))
}

/// `C_delta = ∫_R (1 + u^2)^(-delta/2) du = √π Γ((delta-1)/2) / Γ(delta/2)`,
/// so that `∫_R |ω - alpha - i eta|^-delta dω = C_delta eta^(1-delta)`.
pub fn one_minus_a_constant(delta: f64) -> f64 {
    PI.sqrt() * gamma((delta - 1.0) / 2.0) / gamma(delta / 2.0)
}

/// `∫_{-C}^{C} |ω - alpha - i eta|^-delta dω` against `eta^(1-delta)`, `delta > 1`.
pub fn one_minus_a_bound(alpha: f64, eta: f64, delta: f64, half_width: f64) -> Result<BoundSample> {
    check_eta(eta)?;
    if !(delta > 1.0) {
        return Err(Error::invalid("delta", format!("need delta > 1, got {delta}")));
    }
    let lhs = adaptive_with_breaks(
        |w| ((w - alpha).powi(2) + eta * eta).powf(-0.5 * delta),
        &breakpoints(-half_width, half_width, &[alpha]),
        tolerance(),
    )?
    .value;
    Ok(BoundSample {
        lhs,
        rhs: eta.powf(1.0 - delta),
    })
}

fn two_pole(x: f64, y: f64, eta: f64, power: f64, half_width: f64) -> Result<f64> {
    Ok(adaptive_with_breaks(
        |a| (((x - a).powi(2) + eta * eta) * ((y - a).powi(2) + eta * eta)).powf(-0.5 * power),
        &breakpoints(-half_width, half_width, &[x, y]),
        tolerance(),
    )?
    .value)
}

/// `∫_{-C}^{C} dα / (|x - α - i eta| |y - α - i eta|)` against
/// `|log eta| / |x - y - i eta|`.
pub fn ab_log_bound(x: f64, y: f64, eta: f64, half_width: f64) -> Result<BoundSample> {
    check_eta(eta)?;
    Ok(BoundSample {
        lhs: two_pole(x, y, eta, 1.0, half_width)?,
        rhs: eta.ln().abs() / C64::new(x - y, -eta).norm(),
    })
}

/// `∫_{-C}^{C} dα |x - α - i eta|^-delta |y - α - i eta|^-delta` against
/// `|x - y - i eta|^-delta`, `delta < 1`.
pub fn ab_delta_bound(x: f64, y: f64, eta: f64, half_width: f64, delta: f64) -> Result<BoundSample> {
    check_eta(eta)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("need 0 < delta < 1, got {delta}")));
    }
    Ok(BoundSample {
        lhs: two_pole(x, y, eta, delta, half_width)?,
        rhs: C64::new(x - y, -eta).norm().powf(-delta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRatios {
    pub ab_log: f64,
    pub ab_delta: f64,
}

/// Ratios of both two-pole bounds against their frozen constants.
pub fn check_log_bounds(x: f64, y: f64, eta: f64, half_width: f64) -> Result<LogRatios> {
    if !(eta < 0.5) {
        return Err(Error::invalid("eta", format!("must lie below 0.5, got {eta}")));
    }
    if x.abs() > half_width || y.abs() > half_width {
        return Err(Error::invalid("x, y", format!("must lie in [-{half_width}, {half_width}]")));
    }
    Ok(LogRatios {
        ab_log: ab_log_bound(x, y, eta, half_width)?.ratio(AB_LOG_CONSTANT),
        ab_delta: ab_delta_bound(x, y, eta, half_width, DELTA)?.ratio(AB_DELTA_CONSTANT),
    })
}

/// Mesh controls for the four-propagator integral: Gauss–Legendre `order`
/// per panel, smallest panel `eta * finest`, widest panel `max_panel`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub order: usize,
    pub finest: f64,
    pub max_panel: f64,
}

impl Default for Mesh {
    fn default() -> Self {
        Self {
            order: 5,
            finest: 1.0,
            max_panel: 1.0,
        }
    }
}

impl Mesh {
    pub fn refined(self) -> Self {
        Self {
            order: self.order + 4,
            finest: self.finest / 2.0,
            max_panel: self.max_panel / 2.0,
        }
    }
}

/// `∫dα ∫dβ ∫_0^1 dω1 dω2` of four band propagators times
/// `|x - α - i eta|^-k`, with `α, β ∈ [-C, C]`.
///
/// The `ω` integrals factor into `F(α, β)^2` with
/// `F(α, β) = ∫_0^1 dω / (|ω - α - i eta| |ω - β - i eta|)`, which is
/// evaluated in closed form; the outer two integrals use graded meshes.
pub fn four_propagator_lhs(x: f64, k: u32, eta: f64, half_width: f64, mesh: Mesh) -> Result<f64> {
    check_eta(eta)?;
    let h = eta * mesh.finest;
    let outer = graded_rule(-half_width, half_width, &[x, 0.0, 1.0], h, mesh.max_panel, mesh.order);
    let mut total = 0.0;
    for (&alpha, &wa) in outer.nodes.iter().zip(&outer.weights) {
        let inner = graded_rule(-half_width, half_width, &[alpha, 0.0, 1.0], h, mesh.max_panel, mesh.order);
        let g = inner.integrate(|beta| quartic_integral(0.0, 1.0, alpha, beta, eta).powi(2));
        total += wa * g * ((x - alpha).powi(2) + eta * eta).powf(-0.5 * k as f64);
    }
    if !total.is_finite() {
        return Err(Error::Quadrature("four-propagator integral is not finite".into()));
    }
    Ok(total)
}

/// Four-propagator integral against `|log eta|^2 / eta^k`.
pub fn four_propagator_bound(x: f64, k: u32, eta: f64, half_width: f64) -> Result<BoundSample> {
    Ok(BoundSample {
        lhs: four_propagator_lhs(x, k, eta, half_width, Mesh::default())?,
        rhs: eta.ln().powi(2) / eta.powi(k as i32),
    })
}

/// Ratio of the four-propagator bound against [`FOUR_K_CONSTANT`].
pub fn check_four_propagator(x: f64, k: u32, eta: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::invalid("k", "need k >= 1"));
    }
    if !(eta > 0.0 && eta < FOUR_K_ETA_MAX) {
        return Err(Error::invalid("eta", format!("must lie in (0, {FOUR_K_ETA_MAX}), got {eta}")));
    }
    Ok(four_propagator_bound(x, k, eta, HALF_WIDTH)?.ratio(FOUR_K_CONSTANT))
}

/// `|Theta(alpha, eta) - Theta(ω)|` against
/// `|ω - alpha - i eta| (1/|1 - alpha - i eta| + 1/|1 - ω| + 1/|alpha + i eta| + 1/|ω|)`.
pub fn theta_lipschitz_bound(alpha: f64, omega: f64, eta: f64) -> Result<BoundSample> {
    let lhs = (theta_reg(alpha, eta)? - theta(omega)?).norm();
    let rhs = C64::new(omega - alpha, -eta).norm()
        * (1.0 / C64::new(1.0 - alpha, -eta).norm()
            + 1.0 / (1.0 - omega)
            + 1.0 / C64::new(alpha, eta).norm()
            + 1.0 / omega);
    Ok(BoundSample { lhs, rhs })
}

/// Ratio of the `Theta` Lipschitz bound (constant 1).
pub fn check_theta_lipschitz(alpha: f64, omega: f64, eta: f64) -> Result<f64> {
    if !(omega > BAND_CUTOFF && omega < 1.0 - BAND_CUTOFF) {
        return Err(Error::invalid("omega", format!("must lie in ({BAND_CUTOFF}, {})", 1.0 - BAND_CUTOFF)));
    }
    Ok(theta_lipschitz_bound(alpha, omega, eta)?.ratio(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InequalityId {
    Power,
    Product,
    OneMinusA,
    AbLog,
    AbDelta,
    FourK,
    ThetaLipschitz,
}

impl InequalityId {
    pub const ALL: [InequalityId; 7] = [
        InequalityId::Power,
        InequalityId::Product,
        InequalityId::OneMinusA,
        InequalityId::AbLog,
        InequalityId::AbDelta,
        InequalityId::FourK,
        InequalityId::ThetaLipschitz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityId::Power => "POWER",
            InequalityId::Product => "PRODUCT",
            InequalityId::OneMinusA => "ONE_MINUS_A",
            InequalityId::AbLog => "AB_LOG",
            InequalityId::AbDelta => "AB_DELTA",
            InequalityId::FourK => "FOUR_K",
            InequalityId::ThetaLipschitz => "THETA_LIPSCHITZ",
        }
    }

    /// Constant the ratio is taken against in sweeps.
    pub fn constant(self) -> f64 {
        match self {
            InequalityId::Power | InequalityId::ThetaLipschitz => 1.0,
            InequalityId::Product => PRODUCT_CONSTANT,
            InequalityId::OneMinusA => f64::NAN,
            InequalityId::AbLog => AB_LOG_CONSTANT,
            InequalityId::AbDelta => AB_DELTA_CONSTANT,
            InequalityId::FourK => FOUR_K_CONSTANT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub inequality_id: InequalityId,
    pub samples: usize,
    /// Constant multiplying the right-hand side (for `ONE_MINUS_A` the
    /// largest `C_delta` met in the sweep).
    pub constant: f64,
    /// Largest `lhs / (constant * rhs)`.
    pub max_ratio: f64,
    pub violations: usize,
    /// Samples above the right-hand side with constant 1, where the
    /// frozen constant differs from 1.
    pub unit_constant_exceedances: Option<usize>,
}

impl BoundCheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.max_ratio.is_finite()
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn pole<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(POLE_RANGE.0..POLE_RANGE.1)
}

/// One randomized instance: `(ratio against the sweep constant, ratio
/// against constant 1, constant used)`.
fn draw(id: InequalityId, seed: u64) -> Result<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = log_uniform(&mut rng, ETA_RANGE.0, ETA_RANGE.1);
    let unit = |s: BoundSample, c: f64| (s.ratio(c), s.ratio(1.0), c);
    Ok(match id {
        InequalityId::Power => {
            let k = rng.random_range(2..=5);
            let eta = log_uniform(&mut rng, ETA_RANGE.0, 1.0);
            unit(power_bound(k, pole(&mut rng), eta)?, 1.0)
        }
        InequalityId::Product => {
            let k = rng.random_range(1..=3);
            let p = rng.random_range(1..=3);
            let (a, b) = (pole(&mut rng), pole(&mut rng));
            unit(product_bound(k, p, a, b, eta)?, PRODUCT_CONSTANT)
        }
        InequalityId::OneMinusA => {
            let delta = rng.random_range(1.2..3.0);
            let c = one_minus_a_constant(delta);
            unit(one_minus_a_bound(pole(&mut rng), eta, delta, HALF_WIDTH)?, c)
        }
        InequalityId::AbLog => {
            let (x, y) = (pole(&mut rng), pole(&mut rng));
            unit(ab_log_bound(x, y, eta, HALF_WIDTH)?, AB_LOG_CONSTANT)
        }
        InequalityId::AbDelta => {
            let (x, y) = (pole(&mut rng), pole(&mut rng));
            unit(ab_delta_bound(x, y, eta, HALF_WIDTH, DELTA)?, AB_DELTA_CONSTANT)
        }
        InequalityId::FourK => {
            let k = rng.random_range(1..=3);
            let eta = log_uniform(&mut rng, ETA_RANGE.0, FOUR_K_ETA_MAX);
            unit(four_propagator_bound(pole(&mut rng), k, eta, HALF_WIDTH)?, FOUR_K_CONSTANT)
        }
        InequalityId::ThetaLipschitz => {
            let alpha = pole(&mut rng);
            let omega = rng.random_range(BAND_CUTOFF..1.0 - BAND_CUTOFF);
            unit(theta_lipschitz_bound(alpha, omega, eta)?, 1.0)
        }
    })
}

/// Randomized sweep of one inequality over `samples` parameter draws.
/// Sample `i` is drawn from `member_seed(seed, i)` independently of the
/// others.
pub fn sweep(id: InequalityId, samples: usize, seed: u64) -> Result<BoundCheckReport> {
    let stream = member_seed(seed, id as u64);
    let results: Vec<Result<(f64, f64, f64)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| draw(id, member_seed(stream, i)))
        .collect();
    let mut max_ratio = 0.0f64;
    let mut violations = 0;
    let mut unit_exceed = 0;
    let mut constant = 0.0f64;
    for r in results {
        let (ratio, unit, c) = r?;
        max_ratio = max_ratio.max(ratio);
        constant = constant.max(c);
        if !(ratio <= 1.0 + RATIO_TOLERANCE) {
            violations += 1;
        }
        if unit > 1.0 + RATIO_TOLERANCE {
            unit_exceed += 1;
        }
    }
    let reports_unit = matches!(
        id,
        InequalityId::Product | InequalityId::AbLog | InequalityId::AbDelta | InequalityId::FourK
    );
    Ok(BoundCheckReport {
        inequality_id: id,
        samples,
        constant,
        max_ratio,
        violations,
        unit_constant_exceedances: reports_unit.then_some(unit_exceed),
    })
}

/// Sweeps every inequality in [`InequalityId::ALL`].
pub fn sweep_all(samples: usize, seed: u64) -> Result<Vec<BoundCheckReport>> {
    InequalityId::ALL.iter().map(|&id| sweep(id, samples, seed)).collect()
}

/// Largest raw ratios `lhs / rhs` on the deterministic coarse grids the
/// frozen constants were fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub ab_log: f64,
    pub ab_delta: f64,
    pub four_k: f64,
}

const COARSE_POLES: [f64; 7] = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0];
const COARSE_ETAS: [f64; 5] = [1e-3, 1e-2, 0.05, 0.2, 0.5];
const COARSE_ETAS_FOUR_K: [f64; 4] = [1e-3, 1e-2, 0.05, 0.199];

/// Raw coarse-grid maxima; the frozen constants are these times
/// [`FIT_MARGIN`], rounded up.
pub fn fit_constants() -> Result<FittedConstants> {
    let mut pairs = Vec::new();
    for &x in &COARSE_POLES {
        for &y in &COARSE_POLES {
            for &eta in &COARSE_ETAS {
                pairs.push((x, y, eta));
            }
        }
    }
    let logs: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(x, y, eta)| {
            Ok((
                ab_log_bound(x, y, eta, HALF_WIDTH)?.ratio(1.0),
                ab_delta_bound(x, y, eta, HALF_WIDTH, DELTA)?.ratio(1.0),
            ))
        })
        .collect::<Result<_>>()?;
    let mut four = Vec::new();
    for &x in &COARSE_POLES {
        for k in 1..=3u32 {
            for &eta in &COARSE_ETAS_FOUR_K {
                four.push((x, k, eta));
            }
        }
    }
    let fours: Vec<f64> = four
        .par_iter()
        .map(|&(x, k, eta)| Ok(four_propagator_bound(x, k, eta, HALF_WIDTH)?.ratio(1.0)))
        .collect::<Result<_>>()?;
    Ok(FittedConstants {
        ab_log: logs.iter().map(|r| r.0).fold(0.0, f64::max),
        ab_delta: logs.iter().map(|r| r.1).fold(0.0, f64::max),
        four_k: fours.iter().copied().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_bound_examples() {
        assert!(check_power_bound(2, 0.5, 0.1).unwrap() <= 1.0);
        assert!(check_power_bound(2, 10.0, 1.0).unwrap() <= 1.0);
        assert!(check_power_bound(1, 0.5, 0.1).is_err());
    }

    #[test]
    fn power_bound_matches_antiderivative() {
        // ∫_0^1 (-1)^k (ω - c)^-k dω = (-1)^k [(1 - c)^(1-k) - (-c)^(1-k)] / (1 - k).
        for (k, alpha, eta) in [(2u32, 0.5, 0.1), (3, 0.2, 0.01), (5, -1.0, 0.3), (4, 0.999, 0.002)] {
            let c = C64::new(alpha, eta);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let exact = ((C64::new(1.0, 0.0) - c).powi(1 - k as i32) - (-c).powi(1 - k as i32)) * sign / (1.0 - k as f64);
            let s = power_bound(k, alpha, eta).unwrap();
            assert!((s.lhs - exact.norm()).abs() <= 1e-8 * exact.norm(), "k={k}: {} vs {}", s.lhs, exact.norm());
            // The closed form gives the ratio at most 1 / (k - 1).
            assert!(s.ratio(1.0) <= 1.0 / (k as f64 - 1.0) + 1e-9);
        }
    }

    #[test]
    fn product_bound_printed_constant_fails_in_band() {
        let s = product_bound(1, 1, 0.5, 0.5, 0.01).unwrap();
        let exact = 2.0 / 0.01 * (0.5f64 / 0.01).atan();
        assert!((s.lhs - exact).abs() < 1e-8 * exact);
        assert!(s.lhs > 100.0);
        assert!(s.ratio(PRODUCT_CONSTANT) <= 1.0);
        assert!(check_product_bound(2, 1, 0.3, 0.6, 0.1).unwrap() <= 1.0);
    }

    #[test]
    fn one_minus_a_constant_values() {
        // delta = 2: ∫ du / (1 + u^2) = π.
        assert!((one_minus_a_constant(2.0) - PI).abs() < 1e-12);
        // delta = 3: ∫ (1 + u^2)^(-3/2) du = 2.
        assert!((one_minus_a_constant(3.0) - 2.0).abs() < 1e-12);
        let s = one_minus_a_bound(0.5, 0.01, 2.0, HALF_WIDTH).unwrap();
        assert!(s.ratio(one_minus_a_constant(2.0)) <= 1.0);
    }

    #[test]
    fn ab_log_quadrature_matches_elliptic_closed_form() {
        for (x, y, eta) in [(0.0, 1.0, 0.01), (0.5, 0.5, 0.001), (-2.0, 3.0, 0.3), (1.0, 1.2, 0.05)] {
            let s = ab_log_bound(x, y, eta, HALF_WIDTH).unwrap();
            let closed = quartic_integral(-HALF_WIDTH, HALF_WIDTH, x, y, eta);
            assert!((s.lhs - closed).abs() < 1e-9 * closed, "{} vs {closed}", s.lhs);
        }
    }

    #[test]
    fn log_bounds_examples() {
        // Coincident poles: the right-hand side is |log eta| / eta.
        let s = ab_log_bound(0.7, 0.7, 0.01, HALF_WIDTH).unwrap();
        assert!((s.rhs - 0.01f64.ln().abs() / 0.01).abs() < 1e-9);
        let r = check_log_bounds(0.0, 1.0, 0.01, HALF_WIDTH).unwrap();
        assert!(r.ab_log <= 1.0 && r.ab_delta <= 1.0);
        assert!(check_log_bounds(0.0, 1.0, 0.6, HALF_WIDTH).is_err());
    }

    #[test]
    fn theta_lipschitz_examples() {
        assert!(check_theta_lipschitz(0.3, 0.5, 0.01).unwrap() <= 1.0);
        for eta in [1e-1, 1e-2, 1e-3, 1e-4] {
            let s = theta_lipschitz_bound(0.4, 0.4, eta).unwrap();
            assert!(s.ratio(1.0) <= 1.0);
        }
        assert!(check_theta_lipschitz(0.3, 0.01, 0.01).is_err());
    }

    #[test]
    fn four_propagator_is_mesh_converged() {
        for (x, k, eta) in [(0.5, 1, 0.05), (0.2, 2, 0.005), (-1.5, 3, 0.02)] {
            let coarse = four_propagator_lhs(x, k, eta, HALF_WIDTH, Mesh::default()).unwrap();
            let fine = four_propagator_lhs(x, k, eta, HALF_WIDTH, Mesh::default().refined()).unwrap();
            assert!((coarse - fine).abs() < 1e-3 * fine, "{coarse} vs {fine}");
        }
    }

    #[test]
    fn four_propagator_eta_scaling() {
        let r1 = check_four_propagator(0.5, 1, 0.05).unwrap();
        let r2 = check_four_propagator(0.5, 1, 0.025).unwrap();
        assert!(r1.is_finite() && r2 / r1 < 2.0 && r2 / r1 > 0.5);
        let a = four_propagator_lhs(0.5, 2, 0.02, HALF_WIDTH, Mesh::default()).unwrap();
        let b = four_propagator_lhs(0.5, 2, 0.01, HALF_WIDTH, Mesh::default()).unwrap();
        // At least the 2^k growth of eta^-k, up to the |log eta|^2 factor.
        let growth = b / a;
        let log_factor = (0.01f64.ln() / 0.02f64.ln()).powi(2);
        assert!(growth > 2.0 && growth < 4.0 * log_factor, "growth {growth}");
        assert!(check_four_propagator(0.5, 1, 0.3).is_err());
    }
}
