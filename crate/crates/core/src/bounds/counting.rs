//! Occupation-number, counting, entropy and tail-sum bounds.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::combin::binomial;
use crate::error::{invalid, Result};
use crate::geometry::{enumerate_occupations, localization_stats, make_partition, occupation_count, LocalizationStats, OccupationVector};
use crate::par::CompensatedSum;

/// `κ q^{−2/3} Σ_j [n_j − q]_+^{5/3} / ℓ²`.
pub fn kinetic_lower_bound(n: &OccupationVector, q: u32, ell: f64, kappa: f64) -> f64 {
    let mut s = CompensatedSum::default();
    for &nj in n.counts() {
        if nj > q as usize {
            s.add(((nj - q as usize) as f64).powf(5.0 / 3.0));
        }
    }
    kappa * (q as f64).powf(-2.0 / 3.0) * s.value() / (ell * ell)
}

fn single_box(nbar: u64, q: u32, ell: f64, kappa: f64) -> f64 {
    let excess = nbar.saturating_sub(q as u64) as f64;
    kappa * (q as f64).powf(-2.0 / 3.0) * excess.powf(5.0 / 3.0) / (ell * ell)
}

/// `sup_{μ ≥ 1} μ² [A − μ³ q]_+`, exact.
pub fn mu_opt_bound(a: u64, q: u64) -> u128 {
    assert!(q >= 1);
    let mut best = 0u128;
    let mut mu = 1u64;
    while (mu as u128).pow(3) * (q as u128) < a as u128 {
        let v = (mu as u128).pow(2) * (a as u128 - (mu as u128).pow(3) * q as u128);
        best = best.max(v);
        mu += 1;
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuScan {
    /// `min sup·q^{2/3}/[A − q]_+^{5/3}` over the scan
    pub c_star: f64,
    pub argmin: (u64, u64),
}

/// Best constant in `sup_μ μ²[A − μ³q]_+ ≥ c q^{−2/3}[A − q]_+^{5/3}` over
/// `q < A ≤ max_a`, `q ≤ max_q`.
pub fn mu_opt_constant(max_a: u64, max_q: u64) -> MuScan {
    let mut out = MuScan { c_star: f64::INFINITY, argmin: (0, 0) };
    for q in 1..=max_q {
        for a in q + 1..=max_a {
            let r = mu_opt_bound(a, q) as f64 * (q as f64).powf(2.0 / 3.0) / ((a - q) as f64).powf(5.0 / 3.0);
            if r < out.c_star {
                out = MuScan { c_star: r, argmin: (a, q) };
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxOccupation {
    /// largest `n̄` whose single-box kinetic bound stays below `E`
    pub bound: u64,
    /// `κ^{−3/5} q^{2/5} (Eℓ²)^{3/5}`
    pub surrogate: f64,
}

/// A state with energy below `E` cannot hold more than `bound` particles in
/// one box.
pub fn max_occupation(e: f64, ell: f64, q: u32, kappa: f64) -> Result<MaxOccupation> {
    if !(e >= 0.0) || !(ell > 0.0) || !(kappa > 0.0) || q == 0 {
        return Err(invalid("max_occupation needs E ≥ 0, ℓ > 0, κ > 0, q ≥ 1"));
    }
    let surrogate = kappa.powf(-0.6) * (q as f64).powf(0.4) * (e * ell * ell).powf(0.6);
    if e == 0.0 {
        return Ok(MaxOccupation { bound: q as u64, surrogate });
    }
    let x = (e * ell * ell * (q as f64).powf(2.0 / 3.0) / kappa).powf(0.6);
    let mut nbar = q as u64 + x.floor() as u64;
    while nbar > q as u64 && single_box(nbar, q, ell, kappa) >= e {
        nbar -= 1;
    }
    while single_box(nbar + 1, q, ell, kappa) < e {
        nbar += 1;
    }
    Ok(MaxOccupation { bound: nbar, surrogate })
}

/// `Π_j C(q, n_j)`.
pub fn ground_state_count(n: &OccupationVector, q: u32) -> BigUint {
    n.counts().iter().fold(BigUint::one(), |acc, &nj| acc * binomial(q as u64, nj as u64))
}

/// `Σ_{Σn_j = N} Π_j C(q, n_j)`, by multiplying out `(Σ_k C(q,k) x^k)^M`.
pub fn ground_state_sum(q: u32, m: usize, n: usize) -> BigUint {
    let factor: Vec<BigUint> = (0..=q as u64).map(|k| binomial(q as u64, k)).collect();
    let mut poly = vec![BigUint::zero(); n + 1];
    poly[0] = BigUint::one();
    for _ in 0..m {
        let mut next = vec![BigUint::zero(); n + 1];
        for (i, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (k, f) in factor.iter().enumerate() {
                if i + k > n {
                    break;
                }
                next[i + k] += c * f;
            }
        }
        poly = next;
    }
    poly.swap_remove(n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupationRow {
    pub counts: Vec<usize>,
    pub ground_count: BigUint,
    pub stats: LocalizationStats,
    pub kinetic: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupationTable {
    pub rows: Vec<OccupationRow>,
    /// `Σ_rows Π_j C(q, n_j)`.
    pub enumerated_sum: BigUint,
    /// The same sum from [`ground_state_sum`].
    pub ground_sum: BigUint,
    /// `C(qM, N)`.
    pub binomial: BigUint,
}

impl OccupationTable {
    /// Both sums agree with `C(qM, N)`.
    pub fn identity_holds(&self) -> bool {
        self.enumerated_sum == self.binomial && self.ground_sum == self.binomial
    }
}

/// Every occupation of `n` particles over the `m³` boxes of a cube of side
/// `side` with at most `q` per box (the support of the ground-state count),
/// with its localization statistics and kinetic lower bound.
pub fn occupation_table(side: f64, m: usize, n: usize, q: u32, kappa: f64, max_rows: usize) -> Result<OccupationTable> {
    let p = make_partition(side, m)?;
    let boxes = p.len();
    if occupation_count(n, boxes, Some(q as usize)) > BigUint::from(max_rows) {
        return Err(invalid("occupation table exceeds the row limit"));
    }
    let rows: Vec<OccupationRow> = enumerate_occupations(n, boxes, Some(q as usize))?
        .map(|o| {
            Ok(OccupationRow {
                ground_count: ground_state_count(&o, q),
                stats: localization_stats(&p, &o)?,
                kinetic: kinetic_lower_bound(&o, q, p.ell(), kappa),
                counts: o.counts().to_vec(),
            })
        })
        .collect::<Result<_>>()?;
    let enumerated_sum = rows.iter().map(|r| &r.ground_count).sum();
    Ok(OccupationTable {
        rows,
        enumerated_sum,
        ground_sum: ground_state_sum(q, boxes, n),
        binomial: binomial(q as u64 * boxes as u64, n as u64),
    })
}

/// `N ln(c q E^{3/2}/ρ)`.
pub fn entropy_bound(e: f64, n: usize, rho: f64, q: u32, c: f64) -> f64 {
    n as f64 * (c * q as f64 * e.powf(1.5) / rho).ln()
}

/// `N ln(qMe/N)`, the logarithm of the intermediate bound on `C(qM, N)`.
pub fn box_count_bound(q: u32, m: u64, n: usize) -> f64 {
    n as f64 * (q as f64 * m as f64 * std::f64::consts::E / n as f64).ln()
}

/// Largest `√count(≤E)·ρ/(q E^{3/2})` over the levels at or above `floor`:
/// the smallest `c` for which the two-particle counting bound holds on the
/// supplied levels. `levels` holds `(E, degeneracy)` in increasing order.
pub fn count_constant(levels: &[(f64, u64)], rho: f64, q: u32, floor: f64) -> f64 {
    let mut count = 0u64;
    let mut best: f64 = 0.0;
    for &(e, d) in levels {
        count += d;
        if e >= floor && e > 0.0 {
            best = best.max((count as f64).sqrt() * rho / (q as f64 * e.powf(1.5)));
        }
    }
    best
}

/// Asymptotic value of [`count_constant`] for two free particles in a cube:
/// `N(E) ≈ q²V²E³/(768π³)` against `(cqE^{3/2}/ρ)²` with `ρ = 2/V`.
pub fn weyl_count_constant() -> f64 {
    2.0 / (768.0 * std::f64::consts::PI.powi(3)).sqrt()
}

/// `κ` making the single-box kinetic bound exact at a computed ground state
/// of `n > q` particles in one box of side `ℓ`.
pub fn calibrate_kappa(ground: f64, n: usize, q: u32, ell: f64) -> Result<f64> {
    if n <= q as usize {
        return Err(invalid("κ calibration needs more than q particles in the box"));
    }
    Ok(ground * ell * ell * (q as f64).powf(2.0 / 3.0) / ((n - q as usize) as f64).powf(5.0 / 3.0))
}

/// Condition `(cq((k+2)Ē)^{3/2}/ρ)^N e^{−(k+½)βĒ} ≤ 2^{−k}` for all `k ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCondition {
    pub holds: bool,
    /// `k` at which `ln LHS + k ln 2` is largest
    pub worst_k: u64,
    /// that maximum (≤ 0 when the condition holds)
    pub worst_log: f64,
}

fn condition_log(beta: f64, e_bar: f64, n: usize, rho: f64, q: u32, c: f64, k: f64) -> f64 {
    let nf = n as f64;
    nf * (c * q as f64 / rho).ln() + 1.5 * nf * ((k + 2.0) * e_bar).ln() - (k + 0.5) * beta * e_bar
        + k * std::f64::consts::LN_2
}

pub fn tail_condition(beta: f64, e_bar: f64, n: usize, rho: f64, q: u32, c: f64) -> TailCondition {
    let slope = beta * e_bar - std::f64::consts::LN_2;
    if slope <= 0.0 {
        return TailCondition { holds: false, worst_k: u64::MAX, worst_log: f64::INFINITY };
    }
    // concave in k with stationary point k* = 3N/(2 slope) − 2
    let kstar = 1.5 * n as f64 / slope - 2.0;
    let mut cands = vec![0.0];
    if kstar > 0.0 {
        cands.push(kstar.floor());
        cands.push(kstar.ceil());
    }
    let (mut worst_k, mut worst_log) = (0u64, f64::NEG_INFINITY);
    for k in cands {
        let v = condition_log(beta, e_bar, n, rho, q, c, k);
        if v > worst_log {
            worst_log = v;
            worst_k = k as u64;
        }
    }
    TailCondition { holds: worst_log <= 0.0, worst_k, worst_log }
}

/// Smallest `c_η` (to relative `1e-10`) for which [`tail_condition`] holds at
/// `Ē = c_η N ln N/β`.
pub fn min_c_eta(beta: f64, n: usize, rho: f64, q: u32, c: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("c_η is defined through N ln N, N ≥ 2"));
    }
    let scale = n as f64 * (n as f64).ln() / beta;
    let ok = |ce: f64| tail_condition(beta, ce * scale, n, rho, q, c).holds;
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(invalid("no admissible c_η"));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSumReport {
    /// `2 e^{−βĒ/2}`
    pub bound: f64,
    /// `c_η N ln N/β`
    pub threshold: f64,
    pub applicable: bool,
    /// `Σ_{E_j ≥ Ē} e^{−βE_j}` over supplied levels
    pub true_tail: Option<f64>,
    pub margin: Option<f64>,
}

/// Tail-sum bound, with the true tail when levels `(E, degeneracy)` are given.
pub fn tail_sum_bound(beta: f64, e_bar: f64, n: usize, c_eta: f64, levels: Option<&[(f64, u64)]>) -> TailSumReport {
    let threshold = c_eta * n as f64 * (n as f64).ln() / beta;
    let bound = 2.0 * (-0.5 * beta * e_bar).exp();
    let true_tail = levels.map(|lv| {
        let mut s = CompensatedSum::default();
        lv.iter().filter(|(e, _)| *e >= e_bar).for_each(|(e, d)| s.add(*d as f64 * (-beta * e).exp()));
        s.value()
    });
    TailSumReport { bound, threshold, applicable: e_bar >= threshold, true_tail, margin: true_tail.map(|t| bound - t) }
}

/// `Σ_{k<K} N_g((k+2)Ē) e^{−(k+1)βĒ}` with `N_g` from the entropy bound, and
/// the matching geometric majorant `Σ_{k<K} 2^{−k} e^{−βĒ/2}`, in logs.
pub fn shell_series(beta: f64, e_bar: f64, n: usize, rho: f64, q: u32, c: f64, terms: usize) -> (f64, f64) {
    let lse = |v: &[f64]| {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    };
    let shells: Vec<f64> = (0..terms)
        .map(|k| entropy_bound((k as f64 + 2.0) * e_bar, n, rho, q, c) - (k as f64 + 1.0) * beta * e_bar)
        .collect();
    let geo: Vec<f64> = (0..terms).map(|k| -(k as f64) * std::f64::consts::LN_2 - 0.5 * beta * e_bar).collect();
    (lse(&shells), lse(&geo))
}
