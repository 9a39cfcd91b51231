//! Canonical (fixed `N`) free energy of non-interacting fermions with `q`
//! spin states over a given single-particle spectrum.

use serde::{Deserialize, Serialize};

use super::spectrum::SpectrumSlice;
use crate::combin::ln_binomial;
use crate::error::{invalid, Error, Result};
use crate::par::CompensatedSum;
use crate::quad::find_root;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Brute force for tiny slices, recursion for small `N`, otherwise the
    /// positive-term expansion, and the saddle point when that is too big.
    Auto,
    /// `Z_N = (1/N) Σ_k (−1)^{k−1} z_k Z_{N−k}`.
    Recursion,
    /// Elementary symmetric polynomials of the Boltzmann factors, in logs.
    Elementary,
    /// Sum over all `N`-subsets of single-particle states.
    Brute,
    /// Darwin–Fowler steepest descent on the grand partition function.
    SaddlePoint,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Self::Auto,
            "recursion" => Self::Recursion,
            "elementary" => Self::Elementary,
            "brute" => Self::Brute,
            "saddle" | "saddle_point" => Self::SaddlePoint,
            _ => return Err(invalid(format!("unknown method {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalOptions {
    pub method: Method,
    /// Largest tolerated `log10(Σ|terms| / |Z_N|)` in the recursion.
    pub max_digits_lost: f64,
    pub brute_max_states: usize,
    pub recursion_max_n: usize,
    /// Work budget `Σ_levels N·min(d, N)` for the elementary expansion.
    pub elementary_budget: f64,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            max_digits_lost: 5.0,
            brute_max_states: 20,
            recursion_max_n: 40,
            elementary_budget: 3e8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalResult {
    pub free_energy: f64,
    pub ln_z: f64,
    /// `q·Σ_{ε > cutoff} e^{−βε}`, when the spectrum knows its tail.
    pub truncation: Option<f64>,
    /// Same, relative to `z₁` over the slice.
    pub truncation_rel: Option<f64>,
    pub method: Method,
    pub digits_lost: f64,
}

/// Levels as `(ε, d)` with `d = q·multiplicity`.
fn levels(spec: &SpectrumSlice, q: u64) -> Vec<(f64, f64)> {
    spec.eigenvalues.iter().zip(&spec.multiplicities).map(|(e, m)| (*e, (q * *m) as f64)).collect()
}

pub fn canonical_free_energy(spec: &SpectrumSlice, q: u32, n: usize, beta: f64) -> Result<CanonicalResult> {
    canonical_free_energy_with(spec, q, n, beta, &CanonicalOptions::default())
}

pub fn canonical_free_energy_with(
    spec: &SpectrumSlice,
    q: u32,
    n: usize,
    beta: f64,
    opts: &CanonicalOptions,
) -> Result<CanonicalResult> {
    if q == 0 || !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid("need q >= 1 and finite beta > 0"));
    }
    let q64 = q as u64;
    let states = spec.state_count().saturating_mul(q64);
    if n as u64 > states {
        return Err(Error::Infeasible(format!(
            "{n} fermions do not fit into {states} states below the cutoff"
        )));
    }
    let e0 = spec.lowest().unwrap_or(0.0);
    let lv = levels(spec, q64);
    let (method, ln_z_shifted, digits_lost) = match opts.method {
        Method::Auto => auto(&lv, states, n, beta, e0, opts)?,
        Method::Recursion => {
            let (l, d) = recursion(&lv, n, beta, e0, opts.max_digits_lost)?;
            (Method::Recursion, l, d)
        }
        Method::Elementary => (Method::Elementary, elementary(&lv, n, beta, e0), 0.0),
        Method::Brute => (Method::Brute, brute(&lv, n, beta, e0, opts.brute_max_states)?, 0.0),
        Method::SaddlePoint => (Method::SaddlePoint, saddle(&lv, n, beta, e0)?, 0.0),
    };
    let ln_z = ln_z_shifted - beta * e0 * n as f64;
    let truncation = spec.tail_weight(beta).map(|t| q as f64 * t);
    let z1 = q as f64 * spec.partition_sum(beta);
    Ok(CanonicalResult {
        free_energy: -ln_z / beta,
        ln_z,
        truncation,
        truncation_rel: truncation.map(|t| t / z1),
        method,
        digits_lost,
    })
}

fn auto(
    lv: &[(f64, f64)],
    states: u64,
    n: usize,
    beta: f64,
    e0: f64,
    opts: &CanonicalOptions,
) -> Result<(Method, f64, f64)> {
    if states as usize <= opts.brute_max_states {
        return Ok((Method::Brute, brute(lv, n, beta, e0, opts.brute_max_states)?, 0.0));
    }
    if n <= opts.recursion_max_n {
        match recursion(lv, n, beta, e0, opts.max_digits_lost) {
            Ok((l, d)) => return Ok((Method::Recursion, l, d)),
            Err(Error::PrecisionLoss { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let work: f64 = lv.iter().map(|(_, d)| n as f64 * d.min(n as f64)).sum();
    if work <= opts.elementary_budget {
        Ok((Method::Elementary, elementary(lv, n, beta, e0), 0.0))
    } else {
        Ok((Method::SaddlePoint, saddle(lv, n, beta, e0)?, 0.0))
    }
}

/// Returns `ln Z_N` with energies shifted by `e0`, and the digits lost.
/// Works with `Y_n = Z_n / z₁ⁿ` so that `r_k = z_k / z₁ᵏ ≤ 1`.
fn recursion(lv: &[(f64, f64)], n: usize, beta: f64, e0: f64, max_lost: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let z = |k: usize| -> f64 {
        let mut s = CompensatedSum::default();
        for (e, d) in lv {
            s.add(d * (-(k as f64) * beta * (e - e0)).exp());
        }
        s.value()
    };
    let z1 = z(1);
    let r: Vec<f64> = (1..=n).map(|k| z(k) / z1.powi(k as i32)).collect();
    let mut y = vec![1.0f64];
    let mut lost: f64 = 0.0;
    for m in 1..=n {
        let mut acc = CompensatedSum::default();
        let mut mag = 0.0;
        for k in 1..=m {
            let t = r[k - 1] * y[m - k];
            let t = if k % 2 == 1 { t } else { -t };
            mag += t.abs();
            acc.add(t);
        }
        let v = acc.value() / m as f64;
        let digits = if v > 0.0 { (mag / m as f64 / v).log10() } else { f64::INFINITY };
        lost = lost.max(digits);
        if digits > max_lost || !(v > 0.0) {
            return Err(Error::PrecisionLoss { digits_lost: digits });
        }
        y.push(v);
    }
    Ok((y[n].ln() + n as f64 * z1.ln(), lost))
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln e_N` of the Boltzmann factors, level by level with binomial weights.
fn elementary(lv: &[(f64, f64)], n: usize, beta: f64, e0: f64) -> f64 {
    let mut e = vec![f64::NEG_INFINITY; n + 1];
    e[0] = 0.0;
    for &(eps, d) in lv {
        let x = -beta * (eps - e0);
        let jmax = (d as usize).min(n);
        let w: Vec<f64> = (0..=jmax).map(|j| ln_binomial(d, j as u64) + j as f64 * x).collect();
        let old = e.clone();
        for m in 1..=n {
            let mut acc = old[m];
            for j in 1..=jmax.min(m) {
                if old[m - j] > f64::NEG_INFINITY {
                    acc = log_add(acc, w[j] + old[m - j]);
                }
            }
            e[m] = acc;
        }
    }
    e[n]
}

fn brute(lv: &[(f64, f64)], n: usize, beta: f64, e0: f64, max_states: usize) -> Result<f64> {
    let states: Vec<f64> = lv.iter().flat_map(|&(e, d)| std::iter::repeat_n(e - e0, d as usize)).collect();
    if states.len() > max_states {
        return Err(Error::SizeLimit(format!("{} states exceed brute-force limit {max_states}", states.len())));
    }
    let s = states.len();
    let mut z = CompensatedSum::default();
    for mask in 0u32..(1u32 << s) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let e: f64 = (0..s).filter(|i| mask >> i & 1 == 1).map(|i| states[i]).sum();
        z.add((-beta * e).exp());
    }
    Ok(z.value().ln())
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn fermi(x: f64) -> f64 {
    // 1/(1 + e^x)
    if x > 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Darwin–Fowler: `ln Z_N ≈ ln Ξ(μ) − βμN − ½ ln(2πσ²)` at `⟨N⟩(μ) = N`.
fn saddle(lv: &[(f64, f64)], n: usize, beta: f64, e0: f64) -> Result<f64> {
    let nf = n as f64;
    let count = |mu: f64| -> f64 { lv.iter().map(|(e, d)| d * fermi(beta * (e - e0 - mu))).sum::<f64>() - nf };
    let t = 1.0 / beta;
    let (mut lo, mut hi) = (-t, t);
    while count(lo) > 0.0 {
        lo = lo * 2.0 - t;
        if lo < -1e6 * t {
            return Err(Error::NonConvergence { iterations: 0, residual: count(lo) });
        }
    }
    while count(hi) < 0.0 {
        hi = hi * 2.0 + t;
        if hi > 1e12 * t {
            return Err(Error::Infeasible(format!("{n} particles exceed the slice capacity")));
        }
    }
    let mu = find_root(count, lo, hi, 1e-15)?;
    let mut ln_xi = 0.0;
    let mut var = 0.0;
    for &(e, d) in lv {
        let x = beta * (e - e0 - mu);
        ln_xi += d * softplus(-x);
        let f = fermi(x);
        var += d * f * (1.0 - f);
    }
    if !(var > 0.0) {
        return Err(Error::PrecisionLoss { digits_lost: f64::INFINITY });
    }
    Ok(ln_xi - beta * mu * nf - 0.5 * (2.0 * std::f64::consts::PI * var).ln())
}
