use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest `k` accepted by [`enumerate_pairings`]: `(2k - 1)!! = 2_027_025`.
pub const MAX_PAIRING_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphClass {
    Simple,
    Nested,
    Crossing,
}

impl GraphClass {
    pub fn is_crossing(self) -> bool {
        self == GraphClass::Crossing
    }
}

/// A perfect matching of the slots `1..=n+m`. Slots `1..=m` are primed
/// factors, `m+1..=n+m` unprimed ones.
///
/// Energy variables sit on the boundaries between factors. Boundary `p`
/// (for `p = 0..=n+m`) carries `E'_{m-p}` for `p < m`, `E_0` (identified
/// with `E'_0`) for `p = m` and `E_{p-m}` for `p > m`; slot `a` joins
/// boundaries `a - 1` and `a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pairing {
    n: usize,
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    /// Validates that `pairs` (with `i < j`, 1-based) partition `1..=n+m`.
    pub fn new(n: usize, m: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let total = n + m;
        if total % 2 != 0 {
            return Err(Error::invalid("split", format!("n + m must be even, got {n} + {m}")));
        }
        if pairs.len() * 2 != total {
            return Err(Error::invalid(
                "pairs",
                format!("{} pairs cannot cover {total} slots", pairs.len()),
            ));
        }
        let mut seen = vec![false; total + 1];
        for &(i, j) in &pairs {
            if !(1 <= i && i < j && j <= total) {
                return Err(Error::invalid("pairs", format!("pair ({i}, {j}) out of order or range")));
            }
            for s in [i, j] {
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::invalid("pairs", format!("slot {s} used twice")));
                }
            }
        }
        Ok(Self { n, m, pairs })
    }

    pub(crate) fn new_unchecked(n: usize, m: usize, pairs: Vec<(usize, usize)>) -> Self {
        Self { n, m, pairs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.n + self.m
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The same matching read with a different primed/unprimed split.
    pub fn with_split(&self, n: usize, m: usize) -> Result<Self> {
        if n + m != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                found: n + m,
            });
        }
        Ok(Self {
            n,
            m,
            pairs: self.pairs.clone(),
        })
    }

    pub fn classify(&self) -> GraphClass {
        classify(self)
    }

    pub fn kappa(&self) -> usize {
        kappa(self).0
    }
}

/// Iterator over all perfect matchings of `2k` slots. The smallest unpaired
/// slot is matched with each larger free slot in turn, recursively, which
/// gives lexicographic order of the pair lists.
#[derive(Debug, Clone)]
pub struct PairingIter {
    k: usize,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for PairingIter {
    type Item = Vec<(usize, usize)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut free: Vec<usize> = (1..=2 * self.k).collect();
        let mut pairs = Vec::with_capacity(self.k);
        for &c in &self.counters {
            let first = free.remove(0);
            let partner = free.remove(c);
            pairs.push((first, partner));
        }
        // Advance the mixed-radix counter; level l has 2k - 2l - 1 choices.
        self.done = true;
        for l in (0..self.k).rev() {
            if self.counters[l] + 1 < 2 * (self.k - l) - 1 {
                self.counters[l] += 1;
                self.done = false;
                break;
            }
            self.counters[l] = 0;
        }
        Some(pairs)
    }
}

/// Every perfect matching of `2k` slots exactly once, in a fixed order.
pub fn enumerate_pairings(k: usize) -> Result<PairingIter> {
    if k > MAX_PAIRING_ORDER {
        return Err(Error::SizeLimit {
            what: "pairing order k",
            value: k,
            limit: MAX_PAIRING_ORDER,
        });
    }
    Ok(PairingIter {
        k,
        counters: vec![0; k],
        done: false,
    })
}

/// Every pairing with split `(n, m)`.
pub fn pairings_for_split(n: usize, m: usize) -> Result<impl Iterator<Item = Pairing>> {
    if (n + m) % 2 != 0 {
        return Err(Error::invalid("split", format!("n + m must be even, got {n} + {m}")));
    }
    Ok(enumerate_pairings((n + m) / 2)?.map(move |pairs| Pairing::new_unchecked(n, m, pairs)))
}

/// Crossing if some pairs satisfy `i < k < j < l`; otherwise nested if some
/// pairs satisfy `i < k < l < j <= m` or `m < i < k < l < j`; otherwise simple.
pub fn classify(p: &Pairing) -> GraphClass {
    let m = p.m;
    let mut nested = false;
    for (a, &(i, j)) in p.pairs.iter().enumerate() {
        for &(k, l) in &p.pairs[a + 1..] {
            let ((i, j), (k, l)) = if i < k { ((i, j), (k, l)) } else { ((k, l), (i, j)) };
            if k < j && j < l {
                return GraphClass::Crossing;
            }
            if l < j && (j <= m || m < i) {
                nested = true;
            }
        }
    }
    if nested {
        GraphClass::Nested
    } else {
        GraphClass::Simple
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }

    /// Class label per element, labels numbered by first appearance.
    fn labels(&mut self) -> (usize, Vec<usize>) {
        let n = self.0.len();
        let mut label_of_root = vec![usize::MAX; n];
        let mut labels = Vec::with_capacity(n);
        let mut count = 0;
        for x in 0..n {
            let r = self.find(x);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = count;
                count += 1;
            }
            labels.push(label_of_root[r]);
        }
        (count, labels)
    }
}

fn boundary_partition(p: &Pairing, cyclic: bool) -> (usize, Vec<usize>) {
    let total = p.order();
    let mut uf = UnionFind::new(total + 1);
    for &(a, b) in &p.pairs {
        uf.union(a - 1, b);
        uf.union(a, b - 1);
    }
    if cyclic {
        uf.union(0, total);
    }
    uf.labels()
}

/// Number of independent energy variables and the class label of each
/// boundary `0..=n+m` (see [`Pairing`] for the boundary layout).
pub fn kappa(p: &Pairing) -> (usize, Vec<usize>) {
    boundary_partition(p, false)
}

/// Same as [`kappa`] with the trace closure `E_0 = E_{2k}` imposed.
pub fn cyclic_kappa(p: &Pairing) -> (usize, Vec<usize>) {
    boundary_partition(p, true)
}

/// Whether `E'_m` (boundary 0) and `E_n` (boundary `n+m`) share a class.
pub fn ends_meet_check(p: &Pairing) -> bool {
    let (_, labels) = kappa(p);
    labels[0] == labels[p.order()]
}

/// Counting data of one independent energy variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplicity {
    /// Unprimed boundaries `E_0..E_n` in the class.
    pub left: usize,
    /// Primed boundaries `E'_0..E'_m` in the class.
    pub right: usize,
}

impl Multiplicity {
    pub fn total(self) -> usize {
        self.left + self.right
    }

    /// One side empty and the other at least 2.
    pub fn is_one_sided_multiple(self) -> bool {
        (self.left == 0 && self.right >= 2) || (self.right == 0 && self.left >= 2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub kappa: usize,
    pub class: GraphClass,
    /// Classes with total multiplicity at least 2, minus one.
    pub nbar: usize,
    /// Classes with total multiplicity 1.
    pub nprime: usize,
    /// Per class, in order of first boundary.
    pub multiplicities: Vec<Multiplicity>,
}

/// Multiplicity structure of a non-crossing pairing. `E_0` counts once on
/// each side, so the totals add up to `n + m + 2`.
pub fn multiplicities(p: &Pairing) -> Result<GraphSummary> {
    let class = classify(p);
    if class.is_crossing() {
        return Err(Error::CrossingPairing);
    }
    let (kappa, labels) = kappa(p);
    let mut mult = vec![Multiplicity { left: 0, right: 0 }; kappa];
    for (boundary, &label) in labels.iter().enumerate() {
        if boundary >= p.m {
            mult[label].left += 1;
        }
        if boundary <= p.m {
            mult[label].right += 1;
        }
    }
    let multiple = mult.iter().filter(|c| c.total() >= 2).count();
    Ok(GraphSummary {
        kappa,
        class,
        nbar: multiple.saturating_sub(1),
        nprime: mult.iter().filter(|c| c.total() == 1).count(),
        multiplicities: mult,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairing(n: usize, m: usize, pairs: &[(usize, usize)]) -> Pairing {
        Pairing::new(n, m, pairs.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_small_orders() {
        assert_eq!(enumerate_pairings(0).unwrap().collect::<Vec<_>>(), vec![vec![]]);
        assert_eq!(enumerate_pairings(1).unwrap().collect::<Vec<_>>(), vec![vec![(1, 2)]]);
        let k2: Vec<_> = enumerate_pairings(2).unwrap().collect();
        assert_eq!(
            k2,
            vec![vec![(1, 2), (3, 4)], vec![(1, 3), (2, 4)], vec![(1, 4), (2, 3)]]
        );
        assert!(enumerate_pairings(9).is_err());
    }

    #[test]
    fn pairing_validation() {
        assert!(Pairing::new(1, 1, vec![(1, 2)]).is_ok());
        assert!(Pairing::new(2, 1, vec![(1, 2)]).is_err());
        assert!(Pairing::new(2, 2, vec![(1, 2), (2, 3)]).is_err());
        assert!(Pairing::new(2, 2, vec![(2, 1), (3, 4)]).is_err());
    }

    #[test]
    fn classification_examples() {
        for (n, m) in [(4, 0), (2, 2), (0, 4), (3, 1)] {
            assert_eq!(pairing(n, m, &[(1, 2), (3, 4)]).classify(), GraphClass::Simple);
            assert_eq!(pairing(n, m, &[(1, 3), (2, 4)]).classify(), GraphClass::Crossing);
        }
        assert_eq!(pairing(4, 0, &[(1, 4), (2, 3)]).classify(), GraphClass::Nested);
        assert_eq!(pairing(0, 4, &[(1, 4), (2, 3)]).classify(), GraphClass::Nested);
        // Outer pair enclosing an outer pair is not a nest.
        assert_eq!(pairing(2, 2, &[(1, 4), (2, 3)]).classify(), GraphClass::Simple);
    }

    #[test]
    fn kappa_examples() {
        let single = pairing(1, 1, &[(1, 2)]);
        assert_eq!(single.kappa(), 2);
        assert!(ends_meet_check(&single));
        let crossing = pairing(2, 2, &[(1, 3), (2, 4)]);
        assert_eq!(crossing.kappa(), 1);
        let nn = pairing(2, 0, &[(1, 2)]);
        let (k, labels) = kappa(&nn);
        assert_eq!(k, 2);
        assert_eq!(labels[0], labels[2]);
        assert!(ends_meet_check(&nn));
    }

    #[test]
    fn multiplicity_examples() {
        let s = multiplicities(&pairing(1, 1, &[(1, 2)])).unwrap();
        let total: usize = s.multiplicities.iter().map(|c| c.total()).sum();
        assert_eq!(total, 4);
        assert_eq!(s.nbar, 1);
        assert_eq!(s.nprime, 0);

        let s = multiplicities(&pairing(2, 0, &[(1, 2)])).unwrap();
        assert_eq!(s.multiplicities, vec![Multiplicity { left: 2, right: 1 }, Multiplicity { left: 1, right: 0 }]);
        assert_eq!(s.nprime, 1);

        let s = multiplicities(&pairing(4, 0, &[(1, 4), (2, 3)])).unwrap();
        assert_eq!(s.class, GraphClass::Nested);
        assert!(s.multiplicities.iter().any(|c| c.is_one_sided_multiple()));

        assert!(matches!(
            multiplicities(&pairing(2, 2, &[(1, 3), (2, 4)])),
            Err(Error::CrossingPairing)
        ));
    }
}
