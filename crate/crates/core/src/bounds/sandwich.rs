//! Two-sided comparison of `‖ψ‖_g` with `‖ψ‖` on `B(n)`.
//!
//! The test functions are products `ψ = Π_i φ_i(x_i)` with each `φ_i` a
//! polynomial on the box of particle `i`. Integrals are evaluated with tensor
//! Gauss–Legendre rules per particle. Particles sharing a box get rules of
//! different even orders, so no two nodes of a product rule coincide and `g`
//! is finite at every node.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{localization_stats, BoxPartition, OccupationVector};
use crate::par::CompensatedSum;
use crate::quad::gauss_legendre;
use crate::weight::g_lower_bound;

/// Polynomial in the local coordinates `u = (x − corner)/ℓ ∈ [0,1]³`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<([u32; 3], f64)>,
}

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Self { terms: vec![([0, 0, 0], c)] }
    }

    /// Random polynomial of total degree `≤ degree`, coefficients in
    /// `[-1, 1]`, plus a constant offset that keeps it away from zero.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, degree: u32) -> Self {
        let mut terms = Vec::new();
        for i in 0..=degree {
            for j in 0..=degree - i {
                for k in 0..=degree - i - j {
                    let mut c = rng.random_range(-1.0..1.0);
                    if i + j + k == 0 {
                        c += 1.5;
                    }
                    terms.push(([i, j, k], c));
                }
            }
        }
        Self { terms }
    }

    /// Value and gradient with respect to `u`.
    pub fn value_grad(&self, u: [f64; 3]) -> (f64, [f64; 3]) {
        let pw = |x: f64, e: u32| if e == 0 { 1.0 } else { x.powi(e as i32) };
        let dpw = |x: f64, e: u32| if e == 0 { 0.0 } else { e as f64 * x.powi(e as i32 - 1) };
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for &(e, c) in &self.terms {
            let p = [pw(u[0], e[0]), pw(u[1], e[1]), pw(u[2], e[2])];
            let d = [dpw(u[0], e[0]), dpw(u[1], e[1]), dpw(u[2], e[2])];
            v += c * p[0] * p[1] * p[2];
            g[0] += c * d[0] * p[1] * p[2];
            g[1] += c * p[0] * d[1] * p[2];
            g[2] += c * p[0] * p[1] * d[2];
        }
        (v, g)
    }
}

/// `ψ = Π_i φ_i(x_i)`, particle `i` in box `n.assignment()[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub orbitals: Vec<Polynomial>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichOptions {
    pub eps: f64,
    pub c0: f64,
    pub c1: f64,
    /// Gauss order per axis for the first particle in a box; the `r`-th
    /// particle in the same box uses `order + 2r`. Must be even.
    pub order: usize,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        Self { eps: 1.0, c0: 16.0, c1: 144.0, order: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// `‖ψ‖²`
    pub norm: f64,
    /// `‖ψ‖_g²`
    pub norm_g: f64,
    /// `(K₋ + V/4√3ℓ)² ‖ψ‖²`
    pub lower: f64,
    pub upper: f64,
    /// `Σ_i |N[i]| ∫ |∇_i ψ|² g²`
    pub gradient_term: f64,
    pub eps: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub pass: bool,
}

struct Particle {
    nodes: Vec<[f64; 3]>,
    /// normalized `w φ²`
    density: Vec<f64>,
    /// normalized `w |∇φ|²` (all zero when the gradient vanishes)
    grad_density: Vec<f64>,
    mass: f64,
    grad_mass: f64,
}

fn particle(p: &BoxPartition, b: usize, phi: &Polynomial, order: usize) -> Particle {
    let (x, w) = gauss_legendre(order);
    let ell = p.ell();
    let (lo, _) = p.bounds(b);
    let u: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let wu: Vec<f64> = w.iter().map(|t| 0.5 * t).collect();
    let vol = ell.powi(3);
    let n = order * order * order;
    let mut nodes = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    let mut grad_density = Vec::with_capacity(n);
    for i in 0..order {
        for j in 0..order {
            for k in 0..order {
                let loc = [u[i], u[j], u[k]];
                let wt = wu[i] * wu[j] * wu[k] * vol;
                let (v, g) = phi.value_grad(loc);
                nodes.push([lo[0] + ell * loc[0], lo[1] + ell * loc[1], lo[2] + ell * loc[2]]);
                density.push(wt * v * v);
                grad_density.push(wt * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]) / (ell * ell));
            }
        }
    }
    let mass = crate::par::sum_compensated(density.iter().copied());
    let grad_mass = crate::par::sum_compensated(grad_density.iter().copied());
    if mass > 0.0 {
        density.iter_mut().for_each(|d| *d /= mass);
    }
    if grad_mass > 0.0 {
        grad_density.iter_mut().for_each(|d| *d /= grad_mass);
    }
    Particle { nodes, density, grad_density, mass, grad_mass }
}

/// `U[c][i][j][x] = Σ_y ν_j^c(y)/|x − y|` and `W[c][i][j][x]` with `|x − y|²`,
/// `c = 0` for the density of `j`, `c = 1` for its gradient density.
struct Potentials {
    u: [Vec<Vec<Vec<f64>>>; 2],
    w: [Vec<Vec<Vec<f64>>>; 2],
}

fn potentials(parts: &[Particle]) -> Potentials {
    let n = parts.len();
    let empty = || vec![vec![Vec::new(); n]; n];
    let mut pot = Potentials { u: [empty(), empty()], w: [empty(), empty()] };
    let rows = crate::par::map_range(n * n, |ij| {
        let (i, j) = (ij / n, ij % n);
        if i == j {
            return None;
        }
        let (a, b) = (&parts[i], &parts[j]);
        let mut out = [vec![0.0; a.nodes.len()], vec![0.0; a.nodes.len()], vec![0.0; a.nodes.len()], vec![0.0; a.nodes.len()]];
        for (xi, x) in a.nodes.iter().enumerate() {
            let (mut u0, mut u1, mut w0, mut w1) = (0.0, 0.0, 0.0, 0.0);
            for (yi, y) in b.nodes.iter().enumerate() {
                let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
                let inv2 = 1.0 / r2;
                let inv = inv2.sqrt();
                u0 += b.density[yi] * inv;
                u1 += b.grad_density[yi] * inv;
                w0 += b.density[yi] * inv2;
                w1 += b.grad_density[yi] * inv2;
            }
            out[0][xi] = u0;
            out[1][xi] = u1;
            out[2][xi] = w0;
            out[3][xi] = w1;
        }
        Some(out)
    });
    for (ij, r) in rows.into_iter().enumerate() {
        if let Some([u0, u1, w0, w1]) = r {
            let (i, j) = (ij / n, ij % n);
            pot.u[0][i][j] = u0;
            pot.u[1][i][j] = u1;
            pot.w[0][i][j] = w0;
            pot.w[1][i][j] = w1;
        }
    }
    pot
}

/// `E[g²]` under the product of the per-particle probability measures, with
/// particle `swap` (if any) using its gradient density instead.
fn mean_g2(parts: &[Particle], pot: &Potentials, swap: Option<usize>) -> f64 {
    let n = parts.len();
    let c = |k: usize| usize::from(swap == Some(k));
    let meas = |k: usize| if swap == Some(k) { &parts[k].grad_density } else { &parts[k].density };
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut e1 = vec![0.0; pairs.len()];
    let mut total = CompensatedSum::default();
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let mi = meas(i);
        let u = &pot.u[c(j)][i][j];
        let w = &pot.w[c(j)][i][j];
        e1[p] = mi.iter().zip(u).map(|(a, b)| a * b).sum();
        total.add(mi.iter().zip(w).map(|(a, b)| a * b).sum());
    }
    for p in 0..pairs.len() {
        let (i, j) = pairs[p];
        for q in p + 1..pairs.len() {
            let (k, l) = pairs[q];
            let shared = [i, j].into_iter().find(|s| *s == k || *s == l);
            let cross = match shared {
                None => e1[p] * e1[q],
                Some(s) => {
                    let a = if s == i { j } else { i };
                    let b = if s == k { l } else { k };
                    let ua = &pot.u[c(a)][s][a];
                    let ub = &pot.u[c(b)][s][b];
                    meas(s).iter().zip(ua).zip(ub).map(|((m, x), y)| m * x * y).sum()
                }
            };
            total.add(2.0 * cross);
        }
    }
    total.value()
}

/// Evaluates both sides of the norm sandwich for a product state on `B(n)`.
pub fn norm_sandwich_check(
    psi: &ProductState,
    n: &OccupationVector,
    p: &BoxPartition,
    opts: &SandwichOptions,
) -> Result<SandwichReport> {
    if opts.eps <= 0.0 {
        return Err(invalid("ε must be positive"));
    }
    if opts.order < 2 || opts.order % 2 != 0 {
        return Err(invalid("quadrature order must be even and at least 2"));
    }
    let boxes = n.assignment();
    if boxes.len() != psi.orbitals.len() {
        return Err(Error::Mismatch { expected: boxes.len(), got: psi.orbitals.len() });
    }
    if boxes.len() < 2 {
        return Err(invalid("the weight needs at least two particles"));
    }
    let stats = localization_stats(p, n)?;
    let ell = p.ell();
    let mut rank = vec![0usize; p.len()];
    let parts: Vec<Particle> = boxes
        .iter()
        .zip(&psi.orbitals)
        .map(|(&b, phi)| {
            let r = rank[b];
            rank[b] += 1;
            particle(p, b, phi, opts.order + 2 * r)
        })
        .collect();
    if parts.iter().any(|q| q.mass == 0.0) {
        return Err(invalid("ψ vanishes identically"));
    }
    let pot = potentials(&parts);
    let norm: f64 = parts.iter().map(|q| q.mass).product();
    let norm_g = norm * mean_g2(&parts, &pot, None);

    let mut grad = CompensatedSum::default();
    for i in 0..parts.len() {
        if parts[i].grad_mass == 0.0 {
            continue;
        }
        let others: f64 = parts.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, q)| q.mass).product();
        let b = boxes[i];
        let neigh = (n.counts()[b] + stats.m_neigh[b] - 1) as f64;
        grad.add(neigh * parts[i].grad_mass * others * mean_g2(&parts, &pot, Some(i)));
    }
    let gradient_term = grad.value();

    let lg = g_lower_bound(&stats, ell);
    let v = stats.v as f64;
    let eps = opts.eps;
    let lower = lg * lg * norm;
    let upper = (1.0 + eps) * (stats.k_plus.powi(2) + opts.c1 * v * v / (eps * ell * ell)) * norm
        + if v > 0.0 { (1.0 + 1.0 / eps) * opts.c0 * v / (lg * lg) * gradient_term } else { 0.0 };
    // quadrature rounding only; the lower bound holds node by node
    let tol = 1e-12 * norm_g;
    let lower_margin = norm_g - lower;
    let upper_margin = upper - norm_g;
    Ok(SandwichReport {
        norm,
        norm_g,
        lower,
        upper,
        gradient_term,
        eps,
        lower_margin,
        upper_margin,
        pass: lower_margin >= -tol && upper_margin >= -tol,
    })
}

/// A random `(partition, occupation, ψ)` triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichInstance {
    pub side: f64,
    pub m: usize,
    pub occupation: OccupationVector,
    pub state: ProductState,
}

/// Draws `m ∈ [2, max_m]`, `N ∈ [2, max_n]` particles dropped uniformly into
/// the `m³` boxes, and quadratic orbitals.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_m: usize, max_n: usize) -> SandwichInstance {
    let m = rng.random_range(2..=max_m.max(2));
    let side = m as f64 * rng.random_range(0.5..2.0);
    let nb = m * m * m;
    let total = rng.random_range(2..=max_n.max(2));
    let mut counts = vec![0usize; nb];
    for _ in 0..total {
        counts[rng.random_range(0..nb)] += 1;
    }
    let state = ProductState { orbitals: (0..total).map(|_| Polynomial::random(rng, 2)).collect() };
    SandwichInstance { side, m, occupation: OccupationVector::new(counts), state }
}

impl SandwichInstance {
    pub fn check(&self, opts: &SandwichOptions) -> Result<SandwichReport> {
        let p = BoxPartition::new(self.side, self.m)?;
        norm_sandwich_check(&self.state, &self.occupation, &p, opts)
    }
}
