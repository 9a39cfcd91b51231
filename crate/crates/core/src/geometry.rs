//! Partitions of the cube `[0, L]³` into `m³` sub-cubes and the occupation
//! statistics `K₋`, `K₊`, `V` that drive the localization bounds.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::combin::binomial;
use crate::error::{invalid, Error, Result};

/// `2√3`, the diameter factor in the pair-distance bounds.
pub const TWO_SQRT3: f64 = 3.464_101_615_137_754_6;

/// The `M = m³` closed sub-cubes of side `ℓ = L/m`, indexed lexicographically
/// by integer corner `(i, j, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxPartition {
    side: f64,
    m: usize,
}

impl BoxPartition {
    pub fn new(side: f64, m: usize) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid(format!("cube side must be positive, got {side}")));
        }
        if m < 2 {
            return Err(invalid(format!("need m >= 2 boxes per axis, got {m}")));
        }
        Ok(Self { side, m })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Boxes per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Box side `ℓ`.
    pub fn ell(&self) -> f64 {
        self.side / self.m as f64
    }

    /// Number of boxes `M`.
    pub fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn corner(&self, j: usize) -> [usize; 3] {
        let m = self.m;
        [j / (m * m), (j / m) % m, j % m]
    }

    pub fn index_of(&self, c: [usize; 3]) -> usize {
        (c[0] * self.m + c[1]) * self.m + c[2]
    }

    /// Lower and upper corner of box `j`.
    pub fn bounds(&self, j: usize) -> ([f64; 3], [f64; 3]) {
        let c = self.corner(j);
        let l = self.ell();
        let lo = c.map(|x| x as f64 * l);
        (lo, lo.map(|x| x + l))
    }

    /// Box containing `x` (boxes are half-open except at the outer wall).
    pub fn locate(&self, x: [f64; 3]) -> Option<usize> {
        let l = self.ell();
        let mut c = [0usize; 3];
        for a in 0..3 {
            if !(0.0..=self.side).contains(&x[a]) {
                return None;
            }
            c[a] = ((x[a] / l) as usize).min(self.m - 1);
        }
        Some(self.index_of(c))
    }

    fn check(&self, j: usize) -> Result<()> {
        if j >= self.len() {
            Err(Error::IndexOutOfRange { index: j, len: self.len() })
        } else {
            Ok(())
        }
    }

    /// Distance between closed boxes; touching boxes are at distance zero.
    pub fn distance(&self, j: usize, k: usize) -> Result<f64> {
        self.check(j)?;
        self.check(k)?;
        Ok(self.distance_unchecked(j, k))
    }

    fn distance_unchecked(&self, j: usize, k: usize) -> f64 {
        let (a, b) = (self.corner(j), self.corner(k));
        let l = self.ell();
        let s: f64 = (0..3)
            .map(|ax| {
                let gap = a[ax].abs_diff(b[ax]).saturating_sub(1) as f64 * l;
                gap * gap
            })
            .sum();
        s.sqrt()
    }

    /// Whether distinct boxes `j` and `k` touch (share a face, edge or corner).
    pub fn adjacent(&self, j: usize, k: usize) -> bool {
        let (a, b) = (self.corner(j), self.corner(k));
        j != k && (0..3).all(|ax| a[ax].abs_diff(b[ax]) <= 1)
    }

    /// Boxes touching `j` (at most 26).
    pub fn neighbors(&self, j: usize) -> Vec<usize> {
        let c = self.corner(j);
        let m = self.m as isize;
        let mut out = Vec::with_capacity(26);
        for dx in -1isize..=1 {
            for dy in -1isize..=1 {
                for dz in -1isize..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let n = [c[0] as isize + dx, c[1] as isize + dy, c[2] as isize + dz];
                    if n.iter().all(|&v| (0..m).contains(&v)) {
                        out.push(self.index_of(n.map(|v| v as usize)));
                    }
                }
            }
        }
        out
    }
}

pub fn make_partition(side: f64, m: usize) -> Result<BoxPartition> {
    BoxPartition::new(side, m)
}

pub fn box_distance(p: &BoxPartition, j: usize, k: usize) -> Result<f64> {
    p.distance(j, k)
}

/// Particle counts per box.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupationVector(Vec<usize>);

impl OccupationVector {
    pub fn new(counts: Vec<usize>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(box, count)` for occupied boxes.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied().enumerate().filter(|&(_, n)| n > 0)
    }

    /// Box of each particle when particles are numbered box by box.
    pub fn assignment(&self) -> Vec<usize> {
        self.occupied().flat_map(|(j, n)| std::iter::repeat_n(j, n)).collect()
    }

    fn matches(&self, p: &BoxPartition) -> Result<()> {
        if self.len() != p.len() {
            Err(Error::Mismatch { expected: p.len(), got: self.len() })
        } else {
            Ok(())
        }
    }
}

/// `m_j`: number of particles in the boxes touching `B_j`.
pub fn neighbor_counts(p: &BoxPartition, n: &OccupationVector) -> Result<Vec<usize>> {
    n.matches(p)?;
    let mut m = vec![0usize; p.len()];
    for (k, nk) in n.occupied() {
        for j in p.neighbors(k) {
            m[j] += nk;
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStats {
    /// `Σ_{j<k, d_jk>0} n_j n_k / (d_jk + 2√3ℓ)`
    pub k_minus: f64,
    /// `Σ_{j<k, d_jk>0} n_j n_k / d_jk`
    pub k_plus: f64,
    /// `Σ_j n_j (n_j + m_j − 1)`
    pub v: u64,
    pub m_neigh: Vec<usize>,
}

pub fn localization_stats(p: &BoxPartition, n: &OccupationVector) -> Result<LocalizationStats> {
    let m_neigh = neighbor_counts(p, n)?;
    let occ: Vec<(usize, usize)> = n.occupied().collect();
    let shift = TWO_SQRT3 * p.ell();
    let mut k_minus = 0.0;
    let mut k_plus = 0.0;
    for (a, &(j, nj)) in occ.iter().enumerate() {
        for &(k, nk) in &occ[a + 1..] {
            let d = p.distance_unchecked(j, k);
            if d > 0.0 {
                let w = (nj * nk) as f64;
                k_minus += w / (d + shift);
                k_plus += w / d;
            }
        }
    }
    let v = occ.iter().map(|&(j, nj)| (nj * (nj + m_neigh[j] - 1)) as u64).sum();
    Ok(LocalizationStats { k_minus, k_plus, v, m_neigh })
}

/// Streaming enumeration of the compositions of `N` into `M` parts, in
/// descending lexicographic order, each part at most `cap`.
#[derive(Clone, Debug)]
pub struct Occupations {
    current: Option<Vec<usize>>,
    cap: usize,
}

impl Occupations {
    fn first(total: usize, parts: usize, cap: usize) -> Option<Vec<usize>> {
        let mut v = vec![0; parts];
        let mut rest = total;
        for x in v.iter_mut() {
            *x = rest.min(cap);
            rest -= *x;
        }
        (rest == 0).then_some(v)
    }
}

impl Iterator for Occupations {
    type Item = OccupationVector;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.current.take()?;
        let parts = cur.len();
        // successor: rightmost non-final position that can move one unit right
        let mut suffix = 0usize;
        let mut next = None;
        for i in (0..parts.saturating_sub(1)).rev() {
            suffix += cur[i + 1];
            let room = (parts - 1 - i).saturating_mul(self.cap);
            if cur[i] > 0 && room > suffix {
                let mut v = cur.clone();
                v[i] -= 1;
                let mut rest = suffix + 1;
                for x in v[i + 1..].iter_mut() {
                    *x = rest.min(self.cap);
                    rest -= *x;
                }
                next = Some(v);
                break;
            }
        }
        self.current = next;
        Some(OccupationVector(cur))
    }
}

pub fn enumerate_occupations(total: usize, parts: usize, cap: Option<usize>) -> Result<Occupations> {
    if parts == 0 {
        return Err(invalid("need at least one box"));
    }
    let cap = cap.unwrap_or(usize::MAX);
    Ok(Occupations { current: Occupations::first(total, parts, cap), cap })
}

/// Number of compositions enumerated by [`enumerate_occupations`].
pub fn occupation_count(total: usize, parts: usize, cap: Option<usize>) -> BigUint {
    match cap {
        None => binomial((total + parts - 1) as u64, (parts - 1) as u64),
        Some(cap) => {
            let mut ways = vec![BigUint::zero(); total + 1];
            ways[0] = BigUint::from(1u8);
            for _ in 0..parts {
                let mut next = vec![BigUint::zero(); total + 1];
                for (s, w) in ways.iter().enumerate() {
                    if w.is_zero() {
                        continue;
                    }
                    for add in 0..=cap.min(total - s) {
                        next[s + add] += w;
                    }
                }
                ways = next;
            }
            ways.swap_remove(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occ(p: &BoxPartition, entries: &[(usize, usize)]) -> OccupationVector {
        let mut v = vec![0; p.len()];
        for &(j, n) in entries {
            v[j] = n;
        }
        OccupationVector::new(v)
    }

    #[test]
    fn partition_basics() {
        let p = make_partition(1.0, 2).unwrap();
        assert_eq!(p.len(), 8);
        assert_eq!(p.ell(), 0.5);
        assert!(make_partition(0.0, 2).is_err());
        assert!(make_partition(1.0, 1).is_err());
        assert_eq!(p.index_of(p.corner(5)), 5);
        assert_eq!(p.corner(1), [0, 0, 1]);
    }

    #[test]
    fn distances() {
        let p = make_partition(3.0, 3).unwrap();
        let l = p.ell();
        assert_eq!(box_distance(&p, 4, 4).unwrap(), 0.0);
        // face, edge neighbours
        assert_eq!(p.distance(0, 1).unwrap(), 0.0);
        assert_eq!(p.distance(p.index_of([0, 0, 0]), p.index_of([1, 1, 0])).unwrap(), 0.0);
        assert_eq!(p.distance(p.index_of([0, 0, 0]), p.index_of([2, 0, 0])).unwrap(), l);
        let far = p.distance(p.index_of([0, 0, 0]), p.index_of([2, 2, 2])).unwrap();
        assert!((far - 3f64.sqrt() * l).abs() < 1e-15);
        assert!(p.distance(0, 27).is_err());
    }

    #[test]
    fn neighbour_counts_examples() {
        let p = make_partition(1.0, 2).unwrap();
        let ones = OccupationVector::new(vec![1; 8]);
        assert!(neighbor_counts(&p, &ones).unwrap().iter().all(|&m| m == 7));

        let p3 = make_partition(1.0, 3).unwrap();
        let centre = p3.index_of([1, 1, 1]);
        let n = occ(&p3, &[(centre, 1)]);
        let m = neighbor_counts(&p3, &n).unwrap();
        for j in 0..27 {
            assert_eq!(m[j], if j == centre { 0 } else { 1 });
        }
        let all = occ(&p3, &[(0, 5)]);
        let m = neighbor_counts(&p3, &all).unwrap();
        assert_eq!(m[0], 0);
        for j in p3.neighbors(0) {
            assert_eq!(m[j], 5);
        }
        assert_eq!(p3.neighbors(0).len(), 7);
        assert_eq!(p3.neighbors(centre).len(), 26);
        assert!(neighbor_counts(&p3, &ones).is_err());
    }

    #[test]
    fn stats_single_box_and_singletons() {
        let p = make_partition(3.0, 3).unwrap();
        let s = localization_stats(&p, &occ(&p, &[(13, 4)])).unwrap();
        assert_eq!((s.k_minus, s.k_plus, s.v), (0.0, 0.0, 12));

        let (a, b) = (p.index_of([0, 0, 0]), p.index_of([2, 0, 0]));
        let s = localization_stats(&p, &occ(&p, &[(a, 1), (b, 1)])).unwrap();
        let d = p.ell();
        assert!((s.k_minus - 1.0 / (d + TWO_SQRT3 * p.ell())).abs() < 1e-15);
        assert!((s.k_plus - 1.0 / d).abs() < 1e-15);
        assert_eq!(s.v, 0);
    }

    #[test]
    fn stats_against_pair_sum() {
        // direct enumeration over particle pairs
        let p = make_partition(2.0, 3).unwrap();
        let n = occ(&p, &[(0, 2), (26, 2), (2, 1), (1, 3)]);
        let s = localization_stats(&p, &n).unwrap();
        let parts = n.assignment();
        let (mut km, mut kp) = (0.0, 0.0);
        let mut same_or_adjacent = 0u64;
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let (bi, bj) = (parts[i], parts[j]);
                let d = p.distance(bi, bj).unwrap();
                if d > 0.0 {
                    km += 1.0 / (d + TWO_SQRT3 * p.ell());
                    kp += 1.0 / d;
                } else {
                    same_or_adjacent += 1;
                }
            }
        }
        assert!((s.k_minus - km).abs() < 1e-13);
        assert!((s.k_plus - kp).abs() < 1e-13);
        assert_eq!(s.v, 2 * same_or_adjacent);
    }

    #[test]
    fn enumeration_examples() {
        let all: Vec<Vec<usize>> = enumerate_occupations(2, 2, None).unwrap().map(|o| o.counts().to_vec()).collect();
        assert_eq!(all, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let capped: Vec<Vec<usize>> = enumerate_occupations(3, 2, Some(2)).unwrap().map(|o| o.counts().to_vec()).collect();
        assert_eq!(capped, vec![vec![2, 1], vec![1, 2]]);
        assert_eq!(occupation_count(10, 8, None), BigUint::from(19448u32));
        assert_eq!(enumerate_occupations(10, 8, None).unwrap().count(), 19448);
        assert_eq!(enumerate_occupations(5, 2, Some(2)).unwrap().count(), 0);
        assert_eq!(enumerate_occupations(0, 3, None).unwrap().count(), 1);
    }

    #[test]
    fn capped_count_matches_stream() {
        for total in 0..9 {
            for parts in 1..5 {
                for cap in 0..4 {
                    let streamed = enumerate_occupations(total, parts, Some(cap)).unwrap().count();
                    assert_eq!(BigUint::from(streamed), occupation_count(total, parts, Some(cap)));
                }
            }
        }
    }
}
