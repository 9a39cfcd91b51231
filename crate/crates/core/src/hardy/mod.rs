//! Local Hardy inequalities as generalized eigenproblems.
//!
//! For a domain `Ω` (ball or cube) and a point `y`, the smallest `λ` with
//! `c₀∫|∇f|² + c_m∫|f|² = λ·¼∫|f|²/|x−y|²` over trilinear finite elements
//! is an upper bound for the continuous infimum (conforming subspace).

mod mesh;
mod quadrature;

pub use mesh::{Assembled, Mesh};
pub use quadrature::WeightedQuadrature;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::GridField;
use crate::linalg::{lobpcg, CsrMatrix, LobpcgOptions, SymOperator};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HardyDomain {
    /// Ball of radius `radius` centred at the origin.
    Ball { radius: f64 },
    /// `[0, side]³`.
    Cube { side: f64 },
    /// Positive octant of the centred ball, free on the coordinate planes.
    /// For `y = 0` its spectrum is the reflection-even part of the full ball.
    BallOctant { radius: f64 },
}

impl HardyDomain {
    /// The length `ℓ` of the inequality.
    pub fn ell(&self) -> f64 {
        match *self {
            Self::Ball { radius } | Self::BallOctant { radius } => radius,
            Self::Cube { side } => side,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighProblem {
    pub domain: HardyDomain,
    pub y: [f64; 3],
    /// Cells per length `ℓ` (`h = ℓ / resolution`).
    pub resolution: usize,
    pub c_grad: f64,
    /// Absolute mass coefficient (the inequalities write it as `c/ℓ²`).
    pub c_mass: f64,
    /// Clamp `f = 0` on the outer boundary (classic Hardy setting).
    #[serde(default)]
    pub dirichlet: bool,
}

impl RayleighProblem {
    /// Lemma-style problem with mass coefficient `c1/ℓ²`.
    pub fn scaled(domain: HardyDomain, y: [f64; 3], resolution: usize, c0: f64, c1: f64) -> Self {
        let ell = domain.ell();
        Self { domain, y, resolution, c_grad: c0, c_mass: c1 / (ell * ell), dirichlet: false }
    }

    pub fn h(&self) -> f64 {
        self.domain.ell() / self.resolution as f64
    }

    pub fn mesh(&self) -> Result<Mesh> {
        if self.resolution < 2 {
            return Err(invalid("resolution must be at least 2"));
        }
        let h = self.h();
        Ok(match self.domain {
            HardyDomain::Cube { side } => {
                if !(side > 0.0) {
                    return Err(invalid("cube side must be positive"));
                }
                Mesh::new([0.0; 3], h, self.resolution, |_| true, self.dirichlet)
            }
            HardyDomain::Ball { radius } => {
                if !(radius > 0.0) {
                    return Err(invalid("ball radius must be positive"));
                }
                let r2 = radius * radius;
                Mesh::new([-radius; 3], h, 2 * self.resolution, |c| c.iter().map(|v| v * v).sum::<f64>() <= r2, self.dirichlet)
            }
            HardyDomain::BallOctant { radius } => {
                if !(radius > 0.0) {
                    return Err(invalid("ball radius must be positive"));
                }
                let r2 = radius * radius;
                Mesh::new([0.0; 3], h, self.resolution, |c| c.iter().map(|v| v * v).sum::<f64>() <= r2, self.dirichlet)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighResult {
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub dofs: usize,
    pub h: f64,
}

/// Eigensolver settings used by [`min_rayleigh`] and [`critical_mass`].
pub fn solver_options() -> LobpcgOptions {
    LobpcgOptions { block: Some(2), tol: 1e-5, max_iter: 5000, dense_below: 1500, ..Default::default() }
}

/// Smallest `λ` of `(c_grad K + c_mass M) u = λ W u`.
pub fn min_rayleigh(p: &RayleighProblem) -> Result<RayleighResult> {
    min_rayleigh_with(p, &solver_options())
}

pub fn min_rayleigh_with(p: &RayleighProblem, opts: &LobpcgOptions) -> Result<RayleighResult> {
    if p.c_grad < 0.0 || p.c_mass < 0.0 {
        return Err(invalid("coefficients must be non-negative"));
    }
    let mesh = p.mesh()?;
    if mesh.dofs() == 0 {
        return Err(invalid("mesh has no unknowns"));
    }
    let m = mesh.assemble(p.y);
    let a = m.stiffness.combine_same_pattern(p.c_grad, &m.mass, p.c_mass);
    check_definite(&a, p.dirichlet || p.c_mass > 0.0)?;
    let precond = jacobi(&a, &m.weighted);
    let r = lobpcg(&a, Some(&m.weighted), Some(&precond), 1, opts)?;
    Ok(RayleighResult {
        lambda: r.values[0],
        residual: r.residuals[0],
        iterations: r.iterations,
        dofs: mesh.dofs(),
        h: p.h(),
    })
}

fn check_definite(a: &CsrMatrix, strict: bool) -> Result<()> {
    let d = a.diagonal();
    let bad = d.iter().any(|v| if strict { !(*v > 0.0) } else { *v < 0.0 });
    if bad {
        Err(Error::LinearAlgebra("assembled operator is not positive on its diagonal".into()))
    } else {
        Ok(())
    }
}

/// Diagonal preconditioner from `A`, regularized by `W` where `A` vanishes.
fn jacobi(a: &CsrMatrix, w: &CsrMatrix) -> Vec<f64> {
    a.diagonal().iter().zip(w.diagonal()).map(|(x, y)| 1.0 / (x.abs() + 1e-3 * y.abs()).max(1e-300)).collect()
}

/// Smallest mass coefficient making `λ ≥ 1` for gradient coefficient `c0`:
/// `c_mass* = max_u (W − c0 K)[u] / M[u]`, returned as `c_mass*·ℓ²`.
pub fn critical_mass(domain: HardyDomain, y: [f64; 3], resolution: usize, c0: f64) -> Result<f64> {
    let p = RayleighProblem::scaled(domain, y, resolution, c0, 0.0);
    let mesh = p.mesh()?;
    let m = mesh.assemble(y);
    let a = m.stiffness.combine_same_pattern(c0, &m.weighted, -1.0);
    let precond: Vec<f64> = m
        .stiffness
        .combine_same_pattern(c0, &m.mass, 1.0 / (p.h() * p.h()))
        .diagonal()
        .iter()
        .map(|d| 1.0 / d)
        .collect();
    let r = lobpcg(&a, Some(&m.mass), Some(&precond), 1, &solver_options())?;
    let ell = domain.ell();
    Ok(-r.values[0] * ell * ell)
}

/// Extrapolated limit of a sequence computed at `h, h/2, h/4` (last three
/// entries), with the fitted order; falls back to first order when the
/// differences do not contract.
pub fn richardson(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n < 2 {
        return (values.first().copied().unwrap_or(f64::NAN), f64::NAN);
    }
    if n == 2 {
        return (2.0 * values[1] - values[0], 1.0);
    }
    let (a, b, c) = (values[n - 3], values[n - 2], values[n - 1]);
    let ratio = (a - b) / (b - c);
    let p = if ratio.is_finite() && ratio > 1.0 { ratio.log2() } else { 1.0 };
    (c - (b - c) / (2f64.powf(p) - 1.0), p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub c0: f64,
    /// `c₁*` at each resolution of the ladder, maximized over the `y` ensemble.
    pub c1_ladder: Vec<f64>,
    pub c1_extrapolated: f64,
    pub order: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub c0: f64,
    pub c1: f64,
    pub feasible: bool,
}

/// Empirical `(c₀, c₁)` frontier over a set of singular points and a grid
/// ladder, and feasibility of the candidate pairs against it.
pub fn best_constants(
    domain: HardyDomain,
    ys: &[[f64; 3]],
    ladder: &[usize],
    c0s: &[f64],
    candidates: &[(f64, f64)],
) -> Result<(Vec<FrontierPoint>, Vec<Feasibility>)> {
    if ys.is_empty() || ladder.is_empty() {
        return Err(invalid("need at least one point and one resolution"));
    }
    let mut grid: Vec<f64> = c0s.to_vec();
    grid.extend(candidates.iter().map(|c| c.0));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut frontier = Vec::new();
    for &c0 in &grid {
        let mut c1_ladder = Vec::new();
        for &res in ladder {
            let mut worst = f64::NEG_INFINITY;
            for &y in ys {
                worst = worst.max(critical_mass(domain, y, res, c0)?);
            }
            c1_ladder.push(worst);
        }
        let (c1_extrapolated, order) = richardson(&c1_ladder);
        frontier.push(FrontierPoint { c0, c1_ladder, c1_extrapolated, order });
    }
    let feas = candidates
        .iter()
        .map(|&(c0, c1)| {
            let f = frontier.iter().find(|f| f.c0 == c0).expect("candidate c0 is on the grid");
            let need = f.c1_extrapolated.max(*f.c1_ladder.last().unwrap());
            Feasibility { c0, c1, feasible: c1 >= need }
        })
        .collect();
    Ok((frontier, feas))
}

/// Which local inequality a scan exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// Ball of radius `ℓ`, singular point at the centre.
    Ball,
    /// Cube `[0, ℓ]³`, singular point anywhere.
    Box,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaScanOptions {
    pub lemma: Lemma,
    pub ell: f64,
    pub c0: f64,
    pub c1: f64,
    /// Number of singular points (box only; the ball uses its centre).
    pub samples: usize,
    pub resolution: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub y: [f64; 3],
    pub h: f64,
    pub lambda: f64,
    pub residual: f64,
    pub dofs: usize,
}

/// Singular points for a scan. For the box: the 8 corners, then 4 fixed
/// exterior points, then seeded uniform points in the cube, truncated to
/// `samples`.
pub fn lemma_points(lemma: Lemma, ell: f64, samples: usize, seed: u64) -> Vec<[f64; 3]> {
    match lemma {
        Lemma::Ball => vec![[0.0; 3]],
        Lemma::Box => {
            let mut ys: Vec<[f64; 3]> = (0..8).map(|c| [(c >> 2 & 1) as f64, (c >> 1 & 1) as f64, (c & 1) as f64]).collect();
            ys.extend([[1.5, 0.5, 0.5], [-0.3, 0.2, 0.7], [0.5, 1.25, -0.25], [1.2, 1.2, 1.2]]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while ys.len() < samples {
                ys.push([rng.random(), rng.random(), rng.random()]);
            }
            ys.truncate(samples);
            ys.into_iter().map(|y| y.map(|v| v * ell)).collect()
        }
    }
}

/// `λ_min` of the lemma's form at every point of [`lemma_points`].
pub fn lemma_scan(o: &LemmaScanOptions) -> Result<Vec<LemmaRow>> {
    if !(o.ell > 0.0) {
        return Err(invalid("ℓ must be positive"));
    }
    let domain = match o.lemma {
        // the centred ball problem is reflection-symmetric, so the octant
        // carries its lowest mode
        Lemma::Ball => HardyDomain::BallOctant { radius: o.ell },
        Lemma::Box => HardyDomain::Cube { side: o.ell },
    };
    lemma_points(o.lemma, o.ell, o.samples, o.seed)
        .into_iter()
        .map(|y| {
            let r = min_rayleigh(&RayleighProblem::scaled(domain, y, o.resolution, o.c0, o.c1))?;
            Ok(LemmaRow { y, h: r.h, lambda: r.lambda, residual: r.residual, dofs: r.dofs })
        })
        .collect()
}

/// Even extension of a field on `[a, a+ℓ]³` to `[a−ℓ, a+2ℓ]³` via
/// `τ(x) = −x` on `[−ℓ,0]`, `x` on `[0,ℓ]`, `2ℓ − x` on `[ℓ,2ℓ]` per axis.
pub fn reflect_extend(f: &GridField) -> Result<GridField> {
    let c = f.cells();
    if c[0] != c[1] || c[1] != c[2] {
        return Err(invalid("reflection needs the same number of cells on every axis"));
    }
    let n = c[0] as isize;
    let tau = |i: isize| -> usize {
        let x = i - n;
        (if x < 0 {
            -x
        } else if x > n {
            2 * n - x
        } else {
            x
        }) as usize
    };
    let big = 3 * c[0];
    let mut values = Vec::with_capacity((big + 1).pow(3));
    for i in 0..=big as isize {
        for j in 0..=big as isize {
            for k in 0..=big as isize {
                values.push(f.at(tau(i), tau(j), tau(k)));
            }
        }
    }
    let side = f.spacing() * c[0] as f64;
    let o = f.origin().map(|v| v - side);
    GridField::new(o, f.spacing(), [big; 3], values)
}
