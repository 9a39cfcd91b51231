use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            _ => Err(invalid(format!("unknown boundary condition {s:?}"))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
        })
    }
}

/// Where a spectrum lives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `copies` disjoint cubes of side `side`.
    Cube { side: f64, copies: u64 },
    Ball { radius: f64 },
    /// Two particles in a cube, one permutation sector.
    TwoBody { side: f64, sector: String },
}

/// Sorted distinct eigenvalues with multiplicities, complete below `cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSlice {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<u64>,
    pub bc: Boundary,
    pub domain: Domain,
    pub cutoff: f64,
    /// Closed-form heat trace of the untruncated spectrum, when one exists.
    #[serde(default)]
    pub tail: Option<TailModel>,
}

/// Closed-form heat trace of the full spectrum, for truncation estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    /// Energy unit `(π/L)²`.
    pub unit: f64,
    pub bc: Boundary,
    pub copies: u64,
}

impl TailModel {
    /// `Σ_all mult·e^{−βε}`.
    pub fn heat_trace(&self, beta: f64) -> f64 {
        let t = beta * self.unit;
        let theta = theta(t, self.bc);
        self.copies as f64 * theta * theta * theta
    }
}

/// `Σ_k e^{−t k²}` over `k ≥ 0` (Neumann) or `k ≥ 1` (Dirichlet).
fn theta(t: f64, bc: Boundary) -> f64 {
    let start = match bc {
        Boundary::Dirichlet => 1,
        Boundary::Neumann => 0,
    };
    if t < 0.05 {
        // Poisson summation: Σ_{k∈ℤ} e^{−tk²} = √(π/t) Σ_j e^{−π²j²/t}
        let mut full = 1.0;
        for j in 1..4 {
            full += 2.0 * (-(PI * j as f64).powi(2) / t).exp();
        }
        full *= (PI / t).sqrt();
        return (full + 1.0) / 2.0 - start as f64;
    }
    let mut s = 0.0;
    let mut k = start as u64;
    loop {
        let term = (-t * (k * k) as f64).exp();
        s += term;
        if term < 1e-18 * s || (term == 0.0 && k > 0) {
            break s;
        }
        k += 1;
    }
}

impl SpectrumSlice {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn state_count(&self) -> u64 {
        self.multiplicities.iter().sum()
    }

    pub fn lowest(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    /// Number of states with energy `< e` (with multiplicity).
    pub fn count_below(&self, e: f64) -> u64 {
        self.eigenvalues.iter().zip(&self.multiplicities).take_while(|(x, _)| **x < e).map(|(_, m)| m).sum()
    }

    /// `Σ mult·e^{−βε}` over the slice.
    pub fn partition_sum(&self, beta: f64) -> f64 {
        self.eigenvalues.iter().zip(&self.multiplicities).map(|(e, m)| *m as f64 * (-beta * e).exp()).sum()
    }

    /// Exact Boltzmann weight of the states above the cutoff, when known.
    pub fn tail_weight(&self, beta: f64) -> Option<f64> {
        self.tail.map(|t| (t.heat_trace(beta) - self.partition_sum(beta)).max(0.0))
    }

    /// Repeat every level `copies` times.
    pub fn replicate(&self, copies: u64) -> Self {
        let mut out = self.clone();
        for m in &mut out.multiplicities {
            *m *= copies;
        }
        if let Domain::Cube { copies: c, .. } = &mut out.domain {
            *c *= copies;
        }
        if let Some(t) = &mut out.tail {
            t.copies *= copies;
        }
        out
    }

    /// Keep only levels `≤ cutoff`.
    pub fn truncate(&self, cutoff: f64) -> Self {
        let keep = self.eigenvalues.partition_point(|e| *e <= cutoff);
        let mut out = self.clone();
        out.eigenvalues.truncate(keep);
        out.multiplicities.truncate(keep);
        out.cutoff = cutoff.min(self.cutoff);
        out
    }

    /// Flatten into one entry per state.
    pub fn states(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(e, m)| std::iter::repeat_n(*e, *m as usize))
            .collect()
    }

    /// Group a list of (unsorted, possibly repeated) energies.
    pub fn from_values(mut values: Vec<f64>, bc: Boundary, domain: Domain, cutoff: f64, rel_tol: f64) -> Self {
        values.retain(|v| *v <= cutoff);
        values.sort_by(f64::total_cmp);
        let mut eigenvalues: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<u64> = Vec::new();
        for v in values {
            match eigenvalues.last() {
                Some(&last) if (v - last).abs() <= rel_tol * v.abs().max(last.abs()) => {
                    *multiplicities.last_mut().unwrap() += 1
                }
                _ => {
                    eigenvalues.push(v);
                    multiplicities.push(1);
                }
            }
        }
        Self { eigenvalues, multiplicities, bc, domain, cutoff, tail: None }
    }
}

/// Default cap on the number of states in a generated slice.
pub const MAX_STATES: u64 = 200_000_000;

/// Laplacian spectrum of a cube of side `side` below `cutoff`:
/// `(π/L)²(k₁² + k₂² + k₃²)` with `kᵢ ≥ 1` (Dirichlet) or `kᵢ ≥ 0` (Neumann).
pub fn cube_spectrum(side: f64, bc: Boundary, cutoff: f64) -> Result<SpectrumSlice> {
    cube_spectrum_limited(side, bc, cutoff, MAX_STATES)
}

pub fn cube_spectrum_limited(side: f64, bc: Boundary, cutoff: f64, max_states: u64) -> Result<SpectrumSlice> {
    if !(side > 0.0) || !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(invalid("cube side and cutoff must be positive"));
    }
    let unit = (PI / side).powi(2);
    let s_max = (cutoff / unit * (1.0 + 1e-12)).floor();
    // rough Weyl count of states below the cutoff
    let weyl = PI / 6.0 * s_max.powf(1.5);
    if weyl > 2.0 * max_states as f64 + 1e3 || s_max > 1e9 {
        return Err(Error::SizeLimit(format!(
            "about {weyl:.3e} states below cutoff {cutoff}; limit {max_states}"
        )));
    }
    let s_max = s_max as usize;
    let k0 = match bc {
        Boundary::Dirichlet => 1,
        Boundary::Neumann => 0,
    };
    let kmax = (s_max as f64).sqrt().floor() as usize;
    let mut counts = vec![0u64; s_max + 1];
    for a in k0..=kmax {
        let sa = a * a;
        for b in k0..=kmax {
            let sb = sa + b * b;
            if sb > s_max {
                break;
            }
            for c in k0..=kmax {
                let s = sb + c * c;
                if s > s_max {
                    break;
                }
                counts[s] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    if total > max_states {
        return Err(Error::SizeLimit(format!("{total} states below cutoff {cutoff}; limit {max_states}")));
    }
    let (eigenvalues, multiplicities) = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(s, c)| (s as f64 * unit, *c))
        .unzip();
    Ok(SpectrumSlice {
        eigenvalues,
        multiplicities,
        bc,
        domain: Domain::Cube { side, copies: 1 },
        cutoff,
        tail: Some(TailModel { unit, bc, copies: 1 }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_levels() {
        let n = cube_spectrum(2.0, Boundary::Neumann, 10.0).unwrap();
        let unit = (PI / 2.0).powi(2);
        assert_eq!(n.eigenvalues[0], 0.0);
        assert!((n.eigenvalues[1] - unit).abs() < 1e-14);
        assert_eq!(n.multiplicities[..2], [1, 3]);
        let d = cube_spectrum(2.0, Boundary::Dirichlet, 20.0).unwrap();
        assert!((d.eigenvalues[0] - 3.0 * unit).abs() < 1e-14);
        assert_eq!(d.multiplicities[1], 3);
    }

    #[test]
    fn count_matches_triple_loop() {
        let side = 1.3;
        let unit = (PI / side).powi(2);
        let d = cube_spectrum(side, Boundary::Dirichlet, 100.0 * unit).unwrap();
        let mut brute = 0u64;
        for a in 1..11u64 {
            for b in 1..11u64 {
                for c in 1..11u64 {
                    if a * a + b * b + c * c <= 100 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(d.state_count(), brute);
    }

    #[test]
    fn theta_branches_agree() {
        for bc in [Boundary::Dirichlet, Boundary::Neumann] {
            let t = 0.05;
            let series: f64 = (if bc == Boundary::Dirichlet { 1 } else { 0 }..2000)
                .map(|k: i64| (-t * (k * k) as f64).exp())
                .sum();
            assert!((theta(0.0499999, bc) - series).abs() < 1e-4 * series);
            assert!((theta(t, bc) - series).abs() < 1e-12 * series);
        }
    }

    #[test]
    fn tail_matches_direct_sum() {
        let beta = 0.005;
        let s = cube_spectrum(1.0, Boundary::Neumann, 400.0).unwrap();
        let mut direct = 0.0;
        for a in 0..80u64 {
            for b in 0..80u64 {
                for c in 0..80u64 {
                    let e = PI * PI * (a * a + b * b + c * c) as f64;
                    if e > 400.0 {
                        direct += (-beta * e).exp();
                    }
                }
            }
        }
        let t = s.tail_weight(beta).unwrap();
        assert!((t - direct).abs() < 1e-9 * direct, "{t} vs {direct}");
    }

    #[test]
    fn size_limit() {
        assert!(matches!(
            cube_spectrum_limited(1.0, Boundary::Neumann, 1e6, 1000),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn replicate_and_group() {
        let s = cube_spectrum(1.0, Boundary::Neumann, 30.0).unwrap().replicate(8);
        assert_eq!(s.multiplicities[0], 8);
        let g = SpectrumSlice::from_values(vec![2.0, 1.0, 1.0 + 1e-13, 5.0], Boundary::Neumann, Domain::Ball { radius: 1.0 }, 3.0, 1e-9);
        assert_eq!(g.eigenvalues, vec![1.0, 2.0]);
        assert_eq!(g.multiplicities, vec![2, 1]);
        assert_eq!(g.count_below(1.5), 2);
    }
}
