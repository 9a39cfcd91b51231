//! Thermodynamic free-energy density and finite-volume free energies.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::canonical::{canonical_free_energy_with, CanonicalOptions, CanonicalResult};
use super::spectrum::{cube_spectrum, Boundary, SpectrumSlice};
use crate::error::{invalid, Error, Result};
use crate::geometry::BoxPartition;
use crate::quad::{find_root, integrate_adaptive};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoPoint {
    pub beta: f64,
    pub rho: f64,
    pub q: u32,
    pub mu: f64,
    pub f: f64,
    /// Pressure `p(μ*)`, so that `f = μ*ρ − p`.
    pub pressure: f64,
    /// Quadrature error estimate on `f`.
    pub error: f64,
}

/// `(3/5)(6π²/q)^{2/3} ρ^{5/3}`.
pub fn ground_state_density(rho: f64, q: u32) -> f64 {
    0.6 * (6.0 * PI * PI / q as f64).powf(2.0 / 3.0) * rho.powf(5.0 / 3.0)
}

/// `(6π²ρ/q)^{2/3}`.
pub fn fermi_energy(rho: f64, q: u32) -> f64 {
    (6.0 * PI * PI * rho / q as f64).powf(2.0 / 3.0)
}

const REL_TOL: f64 = 1e-11;
/// `β(P² − μ)` at the upper cut of the momentum integrals.
const EXP_CUT: f64 = 46.0;

/// Momentum range and breakpoints for integrands with a Fermi edge at `√μ`.
fn support(beta: f64, mu: f64) -> (f64, Vec<f64>) {
    let top = (mu.max(0.0) + EXP_CUT / beta).sqrt();
    let mut breaks = Vec::new();
    if mu > 0.0 {
        let edge = mu.sqrt();
        let w = 1.0 / (beta * edge.max(1e-300));
        breaks.extend([edge - 8.0 * w, edge, edge + 8.0 * w]);
    }
    (top, breaks)
}

/// `(q/2π²) ∫₀^∞ p² /(1 + e^{β(p²−μ)}) dp`.
pub fn density_at(beta: f64, mu: f64, q: u32) -> Result<f64> {
    let (top, breaks) = support(beta, mu);
    let f = |p: f64| {
        let x = beta * (p * p - mu);
        let occ = if x > 0.0 { let t = (-x).exp(); t / (1.0 + t) } else { 1.0 / (1.0 + x.exp()) };
        p * p * occ
    };
    let i = integrate_adaptive(f, 0.0, top, &breaks, 0.0, REL_TOL, 4000)?;
    Ok(q as f64 / (2.0 * PI * PI) * (i.value + tail_bound(beta, mu, top)))
}

/// `(qT/2π²) ∫₀^∞ p² ln(1 + e^{−β(p²−μ)}) dp`, with its error estimate.
pub fn pressure_at(beta: f64, mu: f64, q: u32) -> Result<(f64, f64)> {
    let (top, breaks) = support(beta, mu);
    let f = |p: f64| {
        let x = -beta * (p * p - mu);
        let lp = if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
        p * p * lp
    };
    let i = integrate_adaptive(f, 0.0, top, &breaks, 0.0, REL_TOL, 4000)?;
    let tail = tail_bound(beta, mu, top);
    let pref = q as f64 / (2.0 * PI * PI * beta);
    Ok((pref * (i.value + tail), pref * (i.error + tail)))
}

/// `∫_P^∞ p² e^{−β(p²−μ)} dp`, which bounds both integrands beyond `P`.
fn tail_bound(beta: f64, mu: f64, p: f64) -> f64 {
    let g = (-beta * (p * p - mu)).exp();
    g * (p / (2.0 * beta) + 1.0 / (4.0 * beta * beta * p))
}

/// `f(β,ρ) = sup_μ [μρ − p(μ)]`; the maximizer solves `n(μ) = ρ`.
pub fn f_density(beta: f64, rho: f64, q: u32) -> Result<ThermoPoint> {
    if !(beta > 0.0 && rho > 0.0 && beta.is_finite() && rho.is_finite()) || q == 0 {
        return Err(invalid("need beta > 0, rho > 0, q >= 1"));
    }
    let t = 1.0 / beta;
    // Boltzmann density bounds the Fermi one from above, so μ ≥ μ_classical.
    let mu_cl = t * (8.0 * (PI * beta).powf(1.5) * rho / q as f64).ln();
    let ef = fermi_energy(rho, q);
    let mut lo = mu_cl - t;
    let mut hi = ef + t;
    let excess = |mu: f64| density_at(beta, mu, q).map(|n| n - rho);
    let mut guard = 0;
    while excess(lo)? > 0.0 {
        lo -= (hi - lo).abs().max(t);
        guard += 1;
        if guard > 60 {
            return Err(Error::NonConvergence { iterations: guard, residual: lo });
        }
    }
    while excess(hi)? < 0.0 {
        hi += (hi - lo).abs().max(t);
        guard += 1;
        if guard > 120 {
            return Err(Error::NonConvergence { iterations: guard, residual: hi });
        }
    }
    let scale = hi.abs().max(lo.abs()).max(t);
    let mut failure = None;
    let mu = find_root(
        |m| match excess(m) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        1e-15 * scale,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let (pressure, err) = pressure_at(beta, mu, q)?;
    Ok(ThermoPoint { beta, rho, q, mu, f: mu * rho - pressure, pressure, error: err })
}

/// Single-particle energy up to which a slice must reach so that `N`
/// fermions and `≈ 46/β` of thermal headroom are covered.
pub fn fermi_cutoff(side: f64, copies: u64, bc: Boundary, q: u32, n: usize, beta: f64) -> f64 {
    let volume = copies as f64 * side.powi(3);
    let weyl = (6.0 * PI * PI * n as f64 / (q as f64 * volume)).powf(2.0 / 3.0);
    let floor = match bc {
        Boundary::Dirichlet => 3.0 * (PI / side).powi(2),
        Boundary::Neumann => 0.0,
    };
    1.25 * weyl + floor + EXP_CUT / beta
}

/// Complete slice of `copies` cubes able to host `n` fermions with thermal
/// headroom; the cutoff grows until the capacity suffices.
pub fn slice_for(side: f64, copies: u64, bc: Boundary, q: u32, n: usize, beta: f64) -> Result<SpectrumSlice> {
    let mut cutoff = fermi_cutoff(side, copies, bc, q, n, beta);
    for _ in 0..40 {
        let s = cube_spectrum(side, bc, cutoff)?.replicate(copies);
        if s.state_count().saturating_mul(q as u64) >= n as u64 + 1 {
            let top = s.eigenvalues.iter().rev().zip(s.multiplicities.iter().rev());
            // make sure the slice extends EXP_CUT/β above the N-th state
            let mut filled = s.state_count() * q as u64;
            let mut nth = 0.0;
            for (e, m) in top {
                filled -= m * q as u64;
                if filled < n as u64 {
                    nth = *e;
                    break;
                }
            }
            if cutoff >= nth + EXP_CUT / beta {
                return Ok(s);
            }
            cutoff = nth + EXP_CUT / beta;
            continue;
        }
        cutoff *= 2.0;
    }
    Err(Error::SizeLimit(format!("could not size a slice for {n} particles")))
}

/// `F(β,N,L)` in a cube with boundary condition `bc`.
pub fn box_free_energy(beta: f64, n: usize, side: f64, q: u32, bc: Boundary, opts: &CanonicalOptions) -> Result<CanonicalResult> {
    let s = slice_for(side, 1, bc, q, n, beta)?;
    canonical_free_energy_with(&s, q, n, beta, opts)
}

/// `F(β,N,L,ℓ)`: fermions in the union of the `M` boxes, Neumann on every box wall.
pub fn localized_free_energy(beta: f64, n: usize, p: &BoxPartition, q: u32) -> Result<CanonicalResult> {
    localized_free_energy_with(beta, n, p, q, &CanonicalOptions::default())
}

pub fn localized_free_energy_with(
    beta: f64,
    n: usize,
    p: &BoxPartition,
    q: u32,
    opts: &CanonicalOptions,
) -> Result<CanonicalResult> {
    let s = slice_for(p.ell(), p.len() as u64, Boundary::Neumann, q, n, beta)?;
    canonical_free_energy_with(&s, q, n, beta, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectPoint {
    pub m: usize,
    pub ell: f64,
    pub f_outer: f64,
    pub f_local: f64,
    /// `(F(β,N,L) − F(β,N,L,ℓ)) · ℓ / (N ρ^{1/3})`.
    pub constant: f64,
}

/// Localization defect over a ladder of box counts per axis; the fitted
/// constant is the maximum of [`DefectPoint::constant`].
pub fn localization_defect(beta: f64, n: usize, side: f64, q: u32, outer: Boundary, ms: &[usize]) -> Result<(Vec<DefectPoint>, f64)> {
    let opts = CanonicalOptions::default();
    let f_outer = box_free_energy(beta, n, side, q, outer, &opts)?.free_energy;
    let rho = n as f64 / side.powi(3);
    let mut points = Vec::new();
    for &m in ms {
        let p = BoxPartition::new(side, m)?;
        let f_local = localized_free_energy_with(beta, n, &p, q, &opts)?.free_energy;
        let constant = (f_outer - f_local) * p.ell() / (n as f64 * rho.cbrt());
        points.push(DefectPoint { m, ell: p.ell(), f_outer, f_local, constant });
    }
    let c = points.iter().map(|p| p.constant).fold(f64::NEG_INFINITY, f64::max);
    Ok((points, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freefermi::canonical::canonical_free_energy;

    #[test]
    fn zero_temperature_limit() {
        for q in [1, 2, 4] {
            let t = f_density(1e3, 1.0, q).unwrap();
            let g = ground_state_density(1.0, q);
            assert!((t.f - g).abs() < 1e-3 * g, "q={q}: {} vs {g}", t.f);
            assert!(t.f <= t.mu * t.rho);
        }
    }

    #[test]
    fn scaling_relation() {
        let (beta, rho, q) = (2.0, 3.0, 2);
        let a = f_density(beta, rho, q).unwrap().f;
        let b = rho.powf(5.0 / 3.0) * f_density(beta * rho.powf(2.0 / 3.0), 1.0, q).unwrap().f;
        assert!((a - b).abs() < 1e-9 * a.abs());
    }

    #[test]
    fn hot_gas_is_classical() {
        let (beta, rho, q) = (1e-3, 1.0, 2);
        let t = f_density(beta, rho, q).unwrap();
        let mu_cl = (8.0 * (PI * beta).powf(1.5) * rho / q as f64).ln() / beta;
        assert!(t.mu > mu_cl && (t.mu - mu_cl).abs() < 1e-2 * mu_cl.abs());
    }

    #[test]
    fn single_box_partition_is_plain_neumann() {
        // M = 1 is not a valid partition, so compare 2³ boxes of side 1
        // against eight replicated unit cubes directly
        let p = BoxPartition::new(2.0, 2).unwrap();
        let a = localized_free_energy(0.5, 4, &p, 2).unwrap();
        let s = cube_spectrum(1.0, Boundary::Neumann, 200.0).unwrap().replicate(8);
        let b = canonical_free_energy(&s, 2, 4, 0.5).unwrap();
        assert!((a.free_energy - b.free_energy).abs() < 1e-10 * b.free_energy.abs());
    }

    #[test]
    fn more_walls_lower_the_energy() {
        let opts = CanonicalOptions::default();
        let outer = box_free_energy(1.0, 4, 2.0, 2, Boundary::Neumann, &opts).unwrap().free_energy;
        let p = BoxPartition::new(2.0, 2).unwrap();
        let local = localized_free_energy(1.0, 4, &p, 2).unwrap().free_energy;
        assert!(local <= outer);
    }
}
