//! The low-energy comparison parameter `δ` and the final free-energy ledger.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::freefermi::{box_free_energy, localized_free_energy, Boundary, CanonicalOptions};
use crate::geometry::BoxPartition;

use super::counting::{tail_condition, TailCondition};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    /// `c q^{1/5}(Eℓ²)^{3/10} N^{−1/3}(ρℓ³)^{−1/6}`
    pub first: f64,
    /// `c q^{2/5}(Eℓ²)^{11/10} N^{−7/6}(ρℓ³)^{−1/3}`
    pub second: f64,
    pub first_dominates: bool,
    /// `Eℓ² / min{N^{10/9}(ρℓ³)^{5/9}, N^{35/33}(ρℓ³)^{10/33}}`
    pub smallness_ratio: f64,
    pub small: bool,
    /// `Eℓ² ≥ 1`
    pub energy_scale_ok: bool,
}

pub fn delta_estimate(e: f64, ell: f64, n: usize, rho: f64, q: u32, c: f64) -> DeltaEstimate {
    let el2 = e * ell * ell;
    let nf = n as f64;
    let qf = q as f64;
    let d = rho * ell.powi(3);
    let first = c * qf.powf(0.2) * el2.powf(0.3) * nf.powf(-1.0 / 3.0) * d.powf(-1.0 / 6.0);
    let second = c * qf.powf(0.4) * el2.powf(1.1) * nf.powf(-7.0 / 6.0) * d.powf(-1.0 / 3.0);
    let cap = (nf.powf(10.0 / 9.0) * d.powf(5.0 / 9.0)).min(nf.powf(35.0 / 33.0) * d.powf(10.0 / 33.0));
    let smallness_ratio = el2 / cap;
    DeltaEstimate {
        delta: first + second,
        first,
        second,
        first_dominates: first > second,
        smallness_ratio,
        small: smallness_ratio < 1.0,
        energy_scale_ok: el2 >= 1.0,
    }
}

/// Smallest `E₀` with `Ē + 2E₀√δ ≤ E₀`, if any.
pub fn cutoff_scale(e_bar: f64, delta: f64) -> Option<f64> {
    (delta < 0.25).then(|| e_bar / (1.0 - 2.0 * delta.sqrt()))
}

/// `ρ^{−1/3} N^{1/63} (ln N)^{−23/21}`.
pub fn ideal_box_side(n: usize, rho: f64) -> f64 {
    let nf = n as f64;
    rho.powf(-1.0 / 3.0) * nf.powf(1.0 / 63.0) * nf.ln().powf(-23.0 / 21.0)
}

/// `c_η ρ^{2/3} N^{62/63} (ln N)^{23/21}`.
pub fn headline_deficit(n: usize, rho: f64, c_eta: f64) -> f64 {
    let nf = n as f64;
    c_eta * rho.powf(2.0 / 3.0) * nf.powf(62.0 / 63.0) * nf.ln().powf(23.0 / 21.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerConstants {
    /// counting constant in `N_g(E) ≤ (cqE^{3/2}/ρ)^N`
    pub c: f64,
    pub kappa: f64,
    pub c_eta: f64,
    /// prefactor of the `δ` estimate
    pub c_delta: f64,
}

impl Default for LedgerConstants {
    fn default() -> Self {
        Self { c: 1.0, kappa: 1.0, c_eta: 1.0, c_delta: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundLedger {
    pub beta: f64,
    pub n: usize,
    pub rho: f64,
    pub q: u32,
    pub constants: LedgerConstants,
    pub side: f64,
    pub ell_ideal: f64,
    pub ell: f64,
    pub m: usize,
    pub e_bar: f64,
    pub e0: Option<f64>,
    pub delta: DeltaEstimate,
    pub tail_condition: TailCondition,
    /// `finite_size_defect = c_η Nρ^{1/3}/ℓ`, `norm_penalty = 2E₀√δ`,
    /// `tail_term = T ln(1 + 2e^{−βĒ/2}e^{−2βE₀√δ}e^{βF(β,N,L,ℓ)})`.
    pub terms: BTreeMap<String, f64>,
    /// `F(β,N,L,ℓ)`
    pub f_local: f64,
    /// `F(β,N,L)`, Dirichlet cube
    pub f_free: f64,
    /// `F(β,N,L,ℓ) − 2E₀√δ − tail_term`, when feasible
    pub f_lower: Option<f64>,
    pub headline_deficit: f64,
    pub deficit_per_particle: f64,
    pub feasible: bool,
    pub blocking: Option<String>,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn assemble_ledger(beta: f64, n: usize, rho: f64, q: u32, k: &LedgerConstants) -> Result<BoundLedger> {
    if !(beta > 0.0) || !(rho > 0.0) || n < 2 || q == 0 {
        return Err(invalid("ledger needs β > 0, ρ > 0, N ≥ 2, q ≥ 1"));
    }
    let nf = n as f64;
    let side = (nf / rho).cbrt();
    let ell_ideal = ideal_box_side(n, rho);
    let m = ((side / ell_ideal).round() as usize).max(2);
    let p = BoxPartition::new(side, m)?;
    let ell = p.ell();
    let e_bar = k.c_eta * nf * nf.ln() / beta;
    let delta = delta_estimate(e_bar, ell, n, rho, q, k.c_delta);
    let e0 = cutoff_scale(e_bar, delta.delta);
    let tc = tail_condition(beta, e_bar, n, rho, q, k.c);

    let f_local = localized_free_energy(beta, n, &p, q)?.free_energy;
    let f_free = box_free_energy(beta, n, side, q, Boundary::Dirichlet, &CanonicalOptions::default())?.free_energy;

    let t = 1.0 / beta;
    let penalty = e0.map(|e0| 2.0 * e0 * delta.delta.sqrt());
    // without a feasible E₀ the penalty factor is dropped, which only enlarges
    // the logarithm
    let x = std::f64::consts::LN_2 - 0.5 * beta * e_bar - beta * penalty.unwrap_or(0.0) + beta * f_local;
    let tail_term = t * softplus(x);

    let mut terms = BTreeMap::new();
    terms.insert("finite_size_defect".to_string(), k.c_eta * nf * rho.cbrt() / ell);
    terms.insert("tail_term".to_string(), tail_term);
    if let Some(pn) = penalty {
        terms.insert("norm_penalty".to_string(), pn);
    }
    let f_lower = penalty.map(|pn| f_local - pn - tail_term);
    let headline = headline_deficit(n, rho, k.c_eta);
    let blocking = if e0.is_none() {
        let which = if delta.first_dominates { "first" } else { "second" };
        Some(format!("delta = {:.4} >= 1/4 ({which} term dominates)", delta.delta))
    } else {
        None
    };
    Ok(BoundLedger {
        beta,
        n,
        rho,
        q,
        constants: *k,
        side,
        ell_ideal,
        ell,
        m,
        e_bar,
        e0,
        delta,
        tail_condition: tc,
        terms,
        f_local,
        f_free,
        f_lower,
        headline_deficit: headline,
        deficit_per_particle: headline / nf,
        feasible: e0.is_some(),
        blocking,
    })
}
