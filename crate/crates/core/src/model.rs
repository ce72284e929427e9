//! Unperturbed spectrum, block random interaction and admissible initial states.
//!
//! Basis vectors `|x, E_n>` are laid out site-major: index `(x - 1) * N + (n - 1)`.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Default distance of the initial-state support from the band edges.
pub const DEFAULT_EDGE_CUTOFF: f64 = 0.05;

/// Tolerance on `max |H - H^dagger|` accepted when assembling a Hamiltonian.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Site {
    One,
    Two,
}

impl Site {
    pub fn from_index(x: u8) -> Result<Self> {
        match x {
            1 => Ok(Site::One),
            2 => Ok(Site::Two),
            _ => Err(Error::invalid("site", format!("expected 1 or 2, got {x}"))),
        }
    }

    /// 1 or 2.
    pub fn label(self) -> u8 {
        match self {
            Site::One => 1,
            Site::Two => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Site::One => Site::Two,
            Site::Two => Site::One,
        }
    }

    fn block(self) -> usize {
        (self.label() - 1) as usize
    }
}

/// Model parameters: `N` levels per site, coupling `lambda`, edge cutoff `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub n_levels: usize,
    pub coupling: f64,
    pub edge_cutoff: f64,
    pub seed: u64,
}

impl SpectrumConfig {
    pub fn new(n_levels: usize, coupling: f64, edge_cutoff: f64, seed: u64) -> Result<Self> {
        let config = Self {
            n_levels,
            coupling,
            edge_cutoff,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_levels < 2 {
            return Err(Error::invalid(
                "n_levels",
                format!("need at least 2 levels per site, got {}", self.n_levels),
            ));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::invalid(
                "coupling",
                format!("must be finite and nonnegative, got {}", self.coupling),
            ));
        }
        if !(0.0..0.5).contains(&self.edge_cutoff) {
            return Err(Error::invalid(
                "edge_cutoff",
                format!("must lie in [0, 0.5), got {}", self.edge_cutoff),
            ));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        2 * self.n_levels
    }

    /// `E_n = n / N` for `n = 1..=N`.
    pub fn energy(&self, n: usize) -> f64 {
        n as f64 / self.n_levels as f64
    }

    pub fn energies(&self) -> Vec<f64> {
        (1..=self.n_levels).map(|n| self.energy(n)).collect()
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_levels(mut self, n_levels: usize) -> Self {
        self.n_levels = n_levels;
        self
    }
}

/// Hermitian `2N x 2N` interaction with vanishing diagonal blocks, stored
/// through its upper-right block `V1` (rows: site-1 levels, columns: site-2
/// levels). The lower-left block is `V1^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRandomMatrix {
    upper: Mat<C64>,
}

impl BlockRandomMatrix {
    pub fn zeros(n_levels: usize) -> Self {
        Self {
            upper: Mat::zeros(n_levels, n_levels),
        }
    }

    pub fn from_upper_block(upper: Mat<C64>) -> Result<Self> {
        if upper.nrows() != upper.ncols() {
            return Err(Error::DimensionMismatch {
                expected: upper.nrows(),
                found: upper.ncols(),
            });
        }
        Ok(Self { upper })
    }

    pub fn n_levels(&self) -> usize {
        self.upper.nrows()
    }

    pub fn dimension(&self) -> usize {
        2 * self.n_levels()
    }

    pub fn upper_block(&self) -> &Mat<C64> {
        &self.upper
    }

    /// Full `2N x 2N` matrix.
    pub fn dense(&self) -> Mat<C64> {
        let n = self.n_levels();
        let upper = &self.upper;
        Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, false) => upper[(i, j - n)],
            (false, true) => upper[(j, i - n)].conj(),
            _ => C64::new(0.0, 0.0),
        })
    }

    /// `V psi` without forming the dense matrix.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        let n = self.n_levels();
        debug_assert_eq!(psi.len(), 2 * n);
        let (top, bottom) = out.split_at_mut(n);
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.upper[(i, j)] * psi[n + j];
            }
            top[i] = acc;
        }
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                acc += self.upper[(i, j)].conj() * psi[i];
            }
            bottom[j] = acc;
        }
    }
}

/// `H = H0 + lambda V` with `H0 = diag(E_1..E_N, E_1..E_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    h0_diagonal: Vec<f64>,
    interaction: BlockRandomMatrix,
    coupling: f64,
}

impl Hamiltonian {
    /// Hamiltonian from an explicit diagonal, for spectra other than `n/N`
    /// (small hand-checkable cases).
    pub fn from_parts(h0_diagonal: Vec<f64>, interaction: BlockRandomMatrix, coupling: f64) -> Result<Self> {
        if h0_diagonal.len() != interaction.dimension() {
            return Err(Error::DimensionMismatch {
                expected: interaction.dimension(),
                found: h0_diagonal.len(),
            });
        }
        if h0_diagonal.iter().any(|e| !e.is_finite()) || !coupling.is_finite() {
            return Err(Error::invalid("h0_diagonal", "entries and coupling must be finite"));
        }
        Ok(Self {
            h0_diagonal,
            interaction,
            coupling,
        })
    }

    pub fn h0_diagonal(&self) -> &[f64] {
        &self.h0_diagonal
    }

    pub fn interaction(&self) -> &BlockRandomMatrix {
        &self.interaction
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn n_levels(&self) -> usize {
        self.h0_diagonal.len() / 2
    }

    pub fn dimension(&self) -> usize {
        self.h0_diagonal.len()
    }

    pub fn dense(&self) -> Mat<C64> {
        let mut h = self.interaction.dense();
        for (i, &e) in self.h0_diagonal.iter().enumerate() {
            for j in 0..h.ncols() {
                h[(i, j)] *= self.coupling;
            }
            h[(i, i)] += C64::new(e, 0.0);
        }
        h
    }

    /// `H psi`.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        self.interaction.apply(psi, &mut out);
        for ((o, &e), &p) in out.iter_mut().zip(&self.h0_diagonal).zip(psi) {
            *o = *o * self.coupling + p * e;
        }
        out
    }

    /// `<psi|H|psi>`, real for Hermitian `H`.
    pub fn expectation(&self, psi: &WaveVector) -> f64 {
        let h_psi = self.apply(psi.amplitudes());
        psi.amplitudes()
            .iter()
            .zip(&h_psi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// Largest entry of `|A - A^dagger|`.
pub fn hermiticity_defect(a: &Mat<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Unperturbed Hamiltonian (zero interaction, zero coupling).
pub fn build_h0(config: &SpectrumConfig) -> Result<Hamiltonian> {
    config.validate()?;
    let energies = config.energies();
    let mut h0_diagonal = energies.clone();
    h0_diagonal.extend_from_slice(&energies);
    Ok(Hamiltonian {
        h0_diagonal,
        interaction: BlockRandomMatrix::zeros(config.n_levels),
        coupling: 0.0,
    })
}

/// Draws `V1` with i.i.d. entries `(a + i b) / sqrt(2N)`, `a, b ~ N(0, 1)`,
/// so that `E[z] = 0` and `E[|z|^2] = 1/N`. Entries are filled row-major
/// from a ChaCha8 stream seeded with `seed`.
pub fn sample_interaction(config: &SpectrumConfig, seed: u64) -> BlockRandomMatrix {
    let n = config.n_levels;
    let scale = (2.0 * n as f64).sqrt().recip();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut upper = Mat::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            upper[(i, j)] = C64::new(re * scale, im * scale);
        }
    }
    BlockRandomMatrix { upper }
}

/// `H = H0 + lambda V`. The diagonal of `h0` is reused; any interaction it
/// already carries is replaced.
pub fn assemble_hamiltonian(
    h0: &Hamiltonian,
    v: &BlockRandomMatrix,
    coupling: f64,
) -> Result<Hamiltonian> {
    if v.dimension() != h0.dimension() {
        return Err(Error::DimensionMismatch {
            expected: h0.dimension(),
            found: v.dimension(),
        });
    }
    if !coupling.is_finite() {
        return Err(Error::invalid("coupling", "must be finite"));
    }
    let h = Hamiltonian {
        h0_diagonal: h0.h0_diagonal.clone(),
        interaction: v.clone(),
        coupling,
    };
    let deviation = hermiticity_defect(&h.dense());
    if deviation >= HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(h)
}

/// Complex amplitudes over `|x, E_n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveVector {
    amplitudes: Vec<C64>,
}

impl WaveVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() || amplitudes.len() % 2 != 0 {
            return Err(Error::invalid(
                "amplitudes",
                format!("length must be a positive even number, got {}", amplitudes.len()),
            ));
        }
        Ok(Self { amplitudes })
    }

    pub fn zeros(dimension: usize) -> Self {
        Self {
            amplitudes: vec![C64::new(0.0, 0.0); dimension],
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn n_levels(&self) -> usize {
        self.amplitudes.len() / 2
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, site: Site, n: usize) -> C64 {
        self.amplitudes[site.block() * self.n_levels() + n - 1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &WaveVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<psi| P^x |psi>`.
    pub fn site_probability(&self, site: Site) -> f64 {
        let n = self.n_levels();
        let start = site.block() * n;
        self.amplitudes[start..start + n]
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    }
}

/// Probability of finding `psi` on `site`.
pub fn site_probability(psi: &WaveVector, site: Site) -> f64 {
    psi.site_probability(site)
}

/// Uniform superposition of the levels of `site` with `lo < E_n <= hi`,
/// restricted to the admissible region `epsilon < E_n < 1 - epsilon`.
pub fn make_initial_state(config: &SpectrumConfig, site: Site, band: (f64, f64)) -> Result<WaveVector> {
    config.validate()?;
    let (lo, hi) = band;
    let eps = config.edge_cutoff;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid("band", format!("need lo < hi, got ({lo}, {hi})")));
    }
    if lo < eps || hi > 1.0 - eps {
        return Err(Error::invalid(
            "band",
            format!("({lo}, {hi}) must lie inside [{eps}, {}]", 1.0 - eps),
        ));
    }
    let n = config.n_levels;
    let support: Vec<usize> = (1..=n)
        .filter(|&k| {
            let e = config.energy(k);
            e > lo && e <= hi && e > eps && e < 1.0 - eps
        })
        .collect();
    if support.is_empty() {
        return Err(Error::EmptyBand { lo, hi });
    }
    let amp = C64::new((support.len() as f64).sqrt().recip(), 0.0);
    let mut psi = WaveVector::zeros(2 * n);
    for k in support {
        psi.amplitudes[site.block() * n + k - 1] = amp;
    }
    Ok(psi)
}
