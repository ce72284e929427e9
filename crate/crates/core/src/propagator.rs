//! Exact evolution through the spectral decomposition of `H`, and the
//! truncated Duhamel (Dyson) series in powers of `lambda V`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::diag::Diag;
use faer::{Accum, Mat, Par};

use crate::model::{assemble_hamiltonian, BlockRandomMatrix, Hamiltonian, Site, WaveVector};
use crate::{Error, Result, C64};

/// `H = U diag(w) U^dagger`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralFactors {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<C64>,
    coupling: f64,
}

impl SpectralFactors {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Mat<C64> {
        &self.eigenvectors
    }

    /// Coupling of the Hamiltonian the factors came from; sets `T = lambda^2 t`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |U diag(w) U^dagger - H|`.
    pub fn reconstruction_error(&self, h: &Hamiltonian) -> f64 {
        let n = self.dimension();
        let u = &self.eigenvectors;
        let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * self.eigenvalues[j]);
        let mut rebuilt = Mat::<C64>::zeros(n, n);
        matmul(
            rebuilt.as_mut(),
            Accum::Replace,
            scaled.as_ref(),
            u.adjoint(),
            C64::new(1.0, 0.0),
            Par::Seq,
        );
        (rebuilt - h.dense()).as_ref().norm_max()
    }

    /// `max |U^dagger U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dimension();
        let mut gram = Mat::<C64>::zeros(n, n);
        matmul(
            gram.as_mut(),
            Accum::Replace,
            self.eigenvectors.adjoint(),
            self.eigenvectors.as_ref(),
            C64::new(1.0, 0.0),
            Par::Seq,
        );
        (gram - Mat::<C64>::identity(n, n)).as_ref().norm_max()
    }
}

/// Dense Hermitian eigendecomposition. Runs single-threaded inside the
/// solver; callers parallelize across independent Hamiltonians.
pub fn eigendecompose(h: &Hamiltonian) -> Result<SpectralFactors> {
    let dense = h.dense();
    let n = dense.nrows();
    let mut s = Diag::<C64>::zeros(n);
    let mut u = Mat::<C64>::zeros(n, n);
    let params = Default::default();
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<C64>(
        n,
        ComputeEigenvectors::Yes,
        Par::Seq,
        params,
    ));
    evd::self_adjoint_evd(
        dense.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        params,
    )
    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let eigenvalues: Vec<f64> = s.column_vector().iter().map(|z| z.re).collect();
    if eigenvalues.iter().any(|w| !w.is_finite()) || u.as_ref().has_nan() {
        return Err(Error::Eigensolver("solver returned non-finite values".into()));
    }
    Ok(SpectralFactors {
        eigenvalues,
        eigenvectors: u,
        coupling: h.coupling(),
    })
}

/// Site populations along a time grid, for one run or an ensemble mean.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationTrace {
    pub times: Vec<f64>,
    pub scaled_times: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub norm: Vec<f64>,
}

impl RelaxationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `p1 - p2` at every sample.
    pub fn imbalance(&self) -> Vec<f64> {
        self.p1.iter().zip(&self.p2).map(|(a, b)| a - b).collect()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("times", "must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("times", "must be strictly increasing"));
    }
    Ok(())
}

fn spectral_coefficients(psi0: &WaveVector, factors: &SpectralFactors) -> Result<Vec<C64>> {
    if psi0.dimension() != factors.dimension() {
        return Err(Error::DimensionMismatch {
            expected: factors.dimension(),
            found: psi0.dimension(),
        });
    }
    let u = &factors.eigenvectors;
    let psi = psi0.amplitudes();
    Ok((0..u.ncols())
        .map(|j| (0..u.nrows()).map(|i| u[(i, j)].conj() * psi[i]).sum())
        .collect())
}

/// `psi_t = U e^{-i w t} U^dagger psi0` at every entry of `times`, one column per time.
fn evolve_columns(psi0: &WaveVector, factors: &SpectralFactors, times: &[f64]) -> Result<Mat<C64>> {
    check_times(times)?;
    let c = spectral_coefficients(psi0, factors)?;
    let w = &factors.eigenvalues;
    let phased = Mat::from_fn(c.len(), times.len(), |j, k| c[j] * C64::cis(-w[j] * times[k]));
    let mut out = Mat::<C64>::zeros(c.len(), times.len());
    matmul(
        out.as_mut(),
        Accum::Replace,
        factors.eigenvectors.as_ref(),
        phased.as_ref(),
        C64::new(1.0, 0.0),
        Par::Seq,
    );
    Ok(out)
}

/// Evolved state at a single time.
pub fn evolve_state(psi0: &WaveVector, factors: &SpectralFactors, t: f64) -> Result<WaveVector> {
    let col = evolve_columns(psi0, factors, &[t])?;
    WaveVector::new((0..col.nrows()).map(|i| col[(i, 0)]).collect())
}

/// Site populations of `psi_t` over `times` (nonnegative, strictly increasing).
pub fn evolve(psi0: &WaveVector, factors: &SpectralFactors, times: &[f64]) -> Result<RelaxationTrace> {
    let cols = evolve_columns(psi0, factors, times)?;
    let n = psi0.n_levels();
    let lambda2 = factors.coupling * factors.coupling;
    let mut trace = RelaxationTrace {
        times: times.to_vec(),
        scaled_times: times.iter().map(|t| lambda2 * t).collect(),
        p1: Vec::with_capacity(times.len()),
        p2: Vec::with_capacity(times.len()),
        norm: Vec::with_capacity(times.len()),
    };
    for k in 0..times.len() {
        let col = cols.col(k);
        let p1: f64 = (0..n).map(|i| col[i].norm_sqr()).sum();
        let p2: f64 = (n..2 * n).map(|i| col[i].norm_sqr()).sum();
        trace.p1.push(p1);
        trace.p2.push(p2);
        trace.norm.push(p1 + p2);
    }
    Ok(trace)
}

/// Probability of `psi` on `site`.
pub fn site_probability(psi: &WaveVector, site: Site) -> f64 {
    psi.site_probability(site)
}

/// Trapezoid-grid controls for the Duhamel recursion. The grid starts at
/// `initial_steps` intervals and doubles until successive results differ
/// by less than `tolerance` in norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelGrid {
    pub initial_steps: usize,
    pub max_steps: usize,
    pub tolerance: f64,
}

impl Default for DuhamelGrid {
    fn default() -> Self {
        Self {
            initial_steps: 64,
            max_steps: 1 << 16,
            tolerance: 1e-6,
        }
    }
}

/// Terms `psi^(0..=M)(t)` of the Duhamel series on a converged grid.
#[derive(Debug, Clone)]
pub struct DuhamelSeries {
    pub terms: Vec<WaveVector>,
    pub steps: usize,
    /// Largest norm change across the final grid doubling.
    pub grid_change: f64,
}

impl DuhamelSeries {
    /// `sum_{n <= order} psi^(n)(t)`.
    pub fn partial_sum(&self, order: usize) -> WaveVector {
        let mut sum = WaveVector::zeros(self.terms[0].dimension());
        for term in &self.terms[..=order.min(self.terms.len() - 1)] {
            for (s, a) in sum.amplitudes_mut().iter_mut().zip(term.amplitudes()) {
                *s += a;
            }
        }
        sum
    }
}

fn duhamel_on_grid(
    max_order: usize,
    t: f64,
    h0: &Hamiltonian,
    v: &BlockRandomMatrix,
    coupling: f64,
    psi0: &WaveVector,
    steps: usize,
) -> Vec<Vec<C64>> {
    let dim = psi0.dimension();
    let e = h0.h0_diagonal();
    let h = t / steps as f64;
    let zero = C64::new(0.0, 0.0);
    // phi^(n)(s_j) in the interaction picture, for the current order.
    let mut phi: Vec<Vec<C64>> = vec![psi0.amplitudes().to_vec(); steps + 1];
    let mut finals = Vec::with_capacity(max_order + 1);
    let to_schrodinger = |phi_t: &[C64]| -> Vec<C64> {
        phi_t.iter().zip(e).map(|(a, &ek)| a * C64::cis(-ek * t)).collect()
    };
    finals.push(to_schrodinger(&phi[steps]));
    let mut rotated = vec![zero; dim];
    let mut g_prev = vec![zero; dim];
    let mut g_cur = vec![zero; dim];
    let prefactor = C64::new(0.0, -coupling * 0.5 * h);
    for _order in 1..=max_order {
        let mut next = vec![vec![zero; dim]; steps + 1];
        for j in 0..=steps {
            let s = j as f64 * h;
            for ((r, a), &ek) in rotated.iter_mut().zip(&phi[j]).zip(e) {
                *r = a * C64::cis(-ek * s);
            }
            v.apply(&rotated, &mut g_cur);
            for (g, &ek) in g_cur.iter_mut().zip(e) {
                *g *= C64::cis(ek * s);
            }
            if j > 0 {
                let (done, rest) = next.split_at_mut(j);
                let prev = &done[j - 1];
                for k in 0..dim {
                    rest[0][k] = prev[k] + prefactor * (g_prev[k] + g_cur[k]);
                }
            }
            std::mem::swap(&mut g_prev, &mut g_cur);
        }
        phi = next;
        finals.push(to_schrodinger(&phi[steps]));
    }
    finals
}

/// All Duhamel terms up to `max_order` at time `t`, for `H = H0 + lambda V`.
pub fn duhamel_series(
    max_order: usize,
    t: f64,
    h0: &Hamiltonian,
    v: &BlockRandomMatrix,
    coupling: f64,
    psi0: &WaveVector,
    grid: DuhamelGrid,
) -> Result<DuhamelSeries> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", format!("must be finite and nonnegative, got {t}")));
    }
    if psi0.dimension() != h0.dimension() || v.dimension() != h0.dimension() {
        return Err(Error::DimensionMismatch {
            expected: h0.dimension(),
            found: if psi0.dimension() != h0.dimension() {
                psi0.dimension()
            } else {
                v.dimension()
            },
        });
    }
    let mut steps = grid.initial_steps.max(1);
    let mut current = duhamel_on_grid(max_order, t, h0, v, coupling, psi0, steps);
    loop {
        if steps * 2 > grid.max_steps {
            return Err(Error::Quadrature(format!(
                "Duhamel grid did not reach tolerance {:e} within {} steps",
                grid.tolerance, grid.max_steps
            )));
        }
        let refined = duhamel_on_grid(max_order, t, h0, v, coupling, psi0, steps * 2);
        let change = current
            .iter()
            .zip(&refined)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        steps *= 2;
        current = refined;
        if change < grid.tolerance {
            let terms = current.into_iter().map(WaveVector::new).collect::<Result<Vec<_>>>()?;
            return Ok(DuhamelSeries {
                terms,
                steps,
                grid_change: change,
            });
        }
    }
}

/// The `n`-th Duhamel term `psi^(n)(t)`.
pub fn duhamel_term(
    n: usize,
    t: f64,
    h0: &Hamiltonian,
    v: &BlockRandomMatrix,
    coupling: f64,
    psi0: &WaveVector,
    grid: DuhamelGrid,
) -> Result<WaveVector> {
    let mut series = duhamel_series(n, t, h0, v, coupling, psi0, grid)?;
    Ok(series.terms.swap_remove(n))
}

/// `|| psi_t - sum_{n <= M} psi^(n)(t) ||` for `M = 0..=max_order`, with the
/// exact `psi_t` from the spectral decomposition of `H0 + lambda V`.
pub fn remainder_norms(
    max_order: usize,
    t: f64,
    h0: &Hamiltonian,
    v: &BlockRandomMatrix,
    coupling: f64,
    psi0: &WaveVector,
    grid: DuhamelGrid,
) -> Result<Vec<f64>> {
    let h = assemble_hamiltonian(h0, v, coupling)?;
    let exact = evolve_state(psi0, &eigendecompose(&h)?, t)?;
    let series = duhamel_series(max_order, t, h0, v, coupling, psi0, grid)?;
    Ok((0..=max_order)
        .map(|m| exact.distance(&series.partial_sum(m)))
        .collect())
}

/// `|| psi_t - sum_{n <= M} psi^(n)(t) ||`.
pub fn remainder_norm(
    order: usize,
    t: f64,
    h0: &Hamiltonian,
    v: &BlockRandomMatrix,
    coupling: f64,
    psi0: &WaveVector,
    grid: DuhamelGrid,
) -> Result<f64> {
    Ok(remainder_norms(order, t, h0, v, coupling, psi0, grid)?[order])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_h0, make_initial_state, sample_interaction, SpectrumConfig};

    fn setup(n: usize, lambda: f64, seed: u64) -> (Hamiltonian, BlockRandomMatrix, Hamiltonian, WaveVector) {
        let cfg = SpectrumConfig::new(n, lambda, 0.05, seed).unwrap();
        let h0 = build_h0(&cfg).unwrap();
        let v = sample_interaction(&cfg, seed);
        let h = assemble_hamiltonian(&h0, &v, lambda).unwrap();
        let psi = make_initial_state(&cfg, Site::One, (0.3, 0.7)).unwrap();
        (h0, v, h, psi)
    }

    #[test]
    fn zero_coupling_eigenvalues_are_h0_diagonal() {
        let (h0, _, _, _) = setup(4, 0.0, 0);
        let f = eigendecompose(&h0).unwrap();
        let expected = [0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0];
        for (w, e) in f.eigenvalues().iter().zip(expected) {
            assert!((w - e).abs() < 1e-14);
        }
    }

    #[test]
    fn two_by_two_hand_case() {
        // H0 = diag(1, 1), V1 = (1): eigenvalues 1 -/+ 1.
        let mut upper = Mat::<C64>::zeros(1, 1);
        upper[(0, 0)] = C64::new(1.0, 0.0);
        let v = BlockRandomMatrix::from_upper_block(upper).unwrap();
        let h = Hamiltonian::from_parts(vec![1.0, 1.0], v, 1.0).unwrap();
        let f = eigendecompose(&h).unwrap();
        assert!((f.eigenvalues()[0] - 0.0).abs() < 1e-14);
        assert!((f.eigenvalues()[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn factors_reconstruct_random_hamiltonian() {
        let (_, _, h, _) = setup(32, 0.3, 11);
        let f = eigendecompose(&h).unwrap();
        assert!(f.reconstruction_error(&h) < 1e-9);
        assert!(f.unitarity_defect() < 1e-10);
    }

    #[test]
    fn free_evolution_keeps_site_one() {
        let (h0, _, _, psi) = setup(16, 0.0, 1);
        let f = eigendecompose(&h0).unwrap();
        let trace = evolve(&psi, &f, &[0.0, 1.0, 10.0, 100.0]).unwrap();
        for k in 0..trace.len() {
            assert!((trace.p1[k] - 1.0).abs() < 1e-12);
            assert!(trace.p2[k].abs() < 1e-12);
        }
    }

    #[test]
    fn evolution_is_unitary_and_starts_at_initial_state() {
        let (_, _, h, psi) = setup(32, 0.2, 4);
        let f = eigendecompose(&h).unwrap();
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.7).collect();
        let trace = evolve(&psi, &f, &times).unwrap();
        assert!((trace.p1[0] - 1.0).abs() < 1e-12 && trace.p2[0].abs() < 1e-12);
        for k in 0..trace.len() {
            assert!((trace.norm[k] - 1.0).abs() < 1e-9);
            assert!((trace.p1[k] + trace.p2[k] - trace.norm[k]).abs() < 1e-10);
            assert!((trace.scaled_times[k] - 0.04 * times[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_decreasing_times() {
        let (_, _, h, psi) = setup(4, 0.2, 4);
        let f = eigendecompose(&h).unwrap();
        assert!(evolve(&psi, &f, &[1.0, 0.5]).is_err());
        assert!(evolve(&psi, &f, &[-1.0]).is_err());
    }

    #[test]
    fn evolve_state_matches_direct_exponential_series() {
        // Independent route: Taylor series of exp(-iHt) applied to psi0.
        let (_, _, h, psi) = setup(8, 0.5, 2);
        let f = eigendecompose(&h).unwrap();
        let t = 0.8;
        let got = evolve_state(&psi, &f, t).unwrap();
        let mut term = psi.amplitudes().to_vec();
        let mut sum = term.clone();
        for k in 1..60 {
            let ht = h.apply(&term);
            term = ht.iter().map(|a| a * C64::new(0.0, -t / k as f64)).collect();
            for (s, a) in sum.iter_mut().zip(&term) {
                *s += a;
            }
        }
        let expected = WaveVector::new(sum).unwrap();
        assert!(got.distance(&expected) < 1e-12);
    }

    #[test]
    fn duhamel_zeroth_and_first_order_limits() {
        let (h0, v, _, psi) = setup(8, 0.1, 3);
        let grid = DuhamelGrid::default();
        let t = 1.5;
        let zeroth = duhamel_term(0, t, &h0, &v, 0.1, &psi, grid).unwrap();
        assert!((zeroth.site_probability(Site::One) - 1.0).abs() < 1e-12);
        let first = duhamel_term(1, t, &h0, &v, 0.0, &psi, grid).unwrap();
        assert_eq!(first.norm(), 0.0);
    }

    #[test]
    fn remainder_vanishes_without_coupling() {
        let (h0, v, _, psi) = setup(8, 0.0, 3);
        let r = remainder_norms(3, 2.0, &h0, &v, 0.0, &psi, DuhamelGrid::default()).unwrap();
        assert!(r.iter().all(|&x| x < 1e-12), "{r:?}");
    }

    #[test]
    fn duhamel_partial_sums_approach_exact_evolution() {
        let (h0, v, _, psi) = setup(16, 0.1, 5);
        let r = remainder_norms(4, 1.0, &h0, &v, 0.1, &psi, DuhamelGrid::default()).unwrap();
        for m in 0..4 {
            assert!(r[m + 1] < r[m], "{r:?}");
        }
        assert!(r[4] < 1e-4, "{r:?}");
    }
}
