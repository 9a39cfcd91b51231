//! Two particles in a cube with the weight `g² = 1/|x₁ − x₂|²`, discretized
//! by Rayleigh–Ritz on symmetrized products of cube eigenfunctions.
//!
//! The singular weight is written as `1/r² = ∫₀^∞ e^{−t r²} dt`; each
//! exponential factorizes over the three axes, so every matrix element is a
//! short sum over `t` of products of one-dimensional double integrals.

use faer::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{invalid, Error, Result};
use crate::freefermi::Boundary;
use crate::par;
use crate::quad::GaussRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    /// Spatially symmetric, spin singlet-like: degeneracy `q(q−1)/2`.
    Symmetric,
    /// Spatially antisymmetric: degeneracy `q(q+1)/2`.
    Antisymmetric,
}

impl Sector {
    pub fn degeneracy(self, q: u32) -> u64 {
        let q = q as u64;
        match self {
            Self::Symmetric => q * (q.saturating_sub(1)) / 2,
            Self::Antisymmetric => q * (q + 1) / 2,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Self::Symmetric => 1.0,
            Self::Antisymmetric => -1.0,
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Symmetric => "symmetric",
            Self::Antisymmetric => "antisymmetric",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `g = 1/|x₁ − x₂|`.
    Interacting,
    /// `g ≡ 1`: the free problem in the same basis.
    Unit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyBoxProblem {
    pub side: f64,
    pub q: u32,
    /// Smooth functions: pairs of cube modes with `|k_a|² + |k_b|² ≤ basis_cutoff`.
    pub basis_cutoff: u32,
    /// Cusp functions `|x₁ − x₂|·P` for pairs up to this cutoff; `None` omits them.
    pub cusp_cutoff: Option<u32>,
    pub sector: Sector,
    pub bc: Boundary,
    pub weight: WeightKind,
}

impl TwoBodyBoxProblem {
    /// Interacting problem with cusp functions up to the same cutoff.
    pub fn new(side: f64, q: u32, basis_cutoff: u32, sector: Sector, bc: Boundary) -> Self {
        Self { side, q, basis_cutoff, cusp_cutoff: Some(basis_cutoff), sector, bc, weight: WeightKind::Interacting }
    }

    /// The `g ≡ 1` problem on the smooth basis.
    pub fn free(side: f64, q: u32, basis_cutoff: u32, sector: Sector, bc: Boundary) -> Self {
        Self { cusp_cutoff: None, weight: WeightKind::Unit, ..Self::new(side, q, basis_cutoff, sector, bc) }
    }

    fn validate(&self) -> Result<()> {
        if !(self.side > 0.0) || !self.side.is_finite() {
            return Err(invalid("box side must be positive"));
        }
        if self.q == 0 {
            return Err(invalid("q must be >= 1"));
        }
        if self.weight == WeightKind::Unit && self.cusp_cutoff.is_some() {
            return Err(invalid("cusp functions are only defined for the interacting weight"));
        }
        Ok(())
    }

    /// Same problem on the unit cube (spectra scale as `1/L²`).
    pub fn unit(&self) -> Self {
        Self { side: 1.0, ..self.clone() }
    }
}

/// Largest basis the assembler accepts.
pub const MAX_BASIS: usize = 9000;

type Mode = [u8; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Symmetrized product `P_ab`.
    Smooth,
    /// `|x₁ − x₂|·P_ab`.
    Cusp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisFunction {
    pub a: Mode,
    pub b: Mode,
    /// `|a|² + |b|²`.
    pub level: u32,
    pub kind: BasisKind,
}

fn first_mode(bc: Boundary) -> usize {
    match bc {
        Boundary::Dirichlet => 1,
        Boundary::Neumann => 0,
    }
}

/// One-particle cube modes with `|k|² ≤ cutoff`.
fn cube_modes(cutoff: u32, bc: Boundary) -> Vec<(Mode, u32)> {
    let k0 = first_mode(bc) as u32;
    let kmax = (cutoff as f64).sqrt() as u32;
    let mut out = Vec::new();
    for a in k0..=kmax {
        for b in k0..=kmax {
            for c in k0..=kmax {
                let s = a * a + b * b + c * c;
                if s <= cutoff {
                    out.push(([a as u8, b as u8, c as u8], s));
                }
            }
        }
    }
    out.sort_by_key(|&(m, s)| (s, m));
    out
}

/// Symmetrized pairs `(a, b)`, `a ≤ b` (symmetric) or `a < b`, with `|a|² + |b|² ≤ cutoff`.
fn sector_pairs(cutoff: u32, sector: Sector, bc: Boundary) -> Vec<(Mode, Mode, u32)> {
    let lowest = match bc {
        Boundary::Dirichlet => 3,
        Boundary::Neumann => 0,
    };
    let modes = cube_modes(cutoff.saturating_sub(lowest), bc);
    let mut out = Vec::new();
    for (i, &(a, sa)) in modes.iter().enumerate() {
        for &(b, sb) in &modes[i..] {
            if sa + sb > cutoff || (a == b && sector == Sector::Antisymmetric) {
                continue;
            }
            out.push((a, b, sa + sb));
        }
    }
    out.sort_by_key(|&(a, b, s)| (s, a, b));
    out
}

/// Smooth functions first, then cusp functions.
pub fn pair_basis(p: &TwoBodyBoxProblem) -> Vec<BasisFunction> {
    let mut out: Vec<BasisFunction> = sector_pairs(p.basis_cutoff, p.sector, p.bc)
        .into_iter()
        .map(|(a, b, level)| BasisFunction { a, b, level, kind: BasisKind::Smooth })
        .collect();
    if let Some(c) = p.cusp_cutoff {
        out.extend(
            sector_pairs(c, p.sector, p.bc)
                .into_iter()
                .map(|(a, b, level)| BasisFunction { a, b, level, kind: BasisKind::Cusp }),
        );
    }
    out
}

/// Nodes in `t` for `r^{−s} = Γ(s/2)⁻¹ ∫₀^∞ t^{s/2−1} e^{−t r²} dt`: node 0 is
/// `t = 0`, then a trapezoid rule in `ln t`, then a diagonal node (`t = ∞`)
/// carrying `∫_{t_max}^∞ e^{−t r²} dt` for `s = 2`.
struct ExpSum {
    /// Finite nodes, including `t = 0`.
    t: Vec<f64>,
    /// Weights for `r⁻¹, r⁻², r⁻³`, `nt = t.len() + 1` entries each.
    w1: Vec<f64>,
    w2: Vec<f64>,
    w3: Vec<f64>,
}

const LN_T_MIN: f64 = -40.0;
const LN_T_MAX: f64 = 30.0;
const LN_T_STEP: f64 = 0.4;

impl ExpSum {
    fn new() -> Self {
        let n = ((LN_T_MAX - LN_T_MIN) / LN_T_STEP).round() as usize;
        let nt = n + 3;
        let mut t = vec![0.0];
        let (mut w1, mut w2, mut w3) = (vec![0.0; nt], vec![0.0; nt], vec![0.0; nt]);
        let sqrt_pi = PI.sqrt();
        for k in 0..=n {
            let s = LN_T_MIN + k as f64 * LN_T_STEP;
            let tk = s.exp();
            let h = if k == 0 || k == n { 0.5 * LN_T_STEP } else { LN_T_STEP };
            t.push(tk);
            w1[k + 1] = h * tk.sqrt() / sqrt_pi;
            w2[k + 1] = h * tk;
            w3[k + 1] = 2.0 * h * tk.powf(1.5) / sqrt_pi;
        }
        // ∫_{ℝ³} e^{−t_max|z|²}/|z|² dz
        w2[nt - 1] = 2.0 * PI.powf(1.5) / LN_T_MAX.exp().sqrt();
        Self { t, w1, w2, w3 }
    }

    fn nt(&self) -> usize {
        self.t.len() + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Trig {
    Cos,
    Sin,
}

impl Trig {
    fn phase(self) -> f64 {
        match self {
            Trig::Cos => 0.0,
            Trig::Sin => -0.5 * PI,
        }
    }
    fn index(self) -> usize {
        self as usize
    }
}

/// `coef · T(freq·πx)`.
type Term = (Trig, usize, f64);

/// 1D mode `e_k` on `[0, 1]` or its derivative.
fn mode(k: usize, bc: Boundary, derivative: bool) -> Term {
    let kpi = k as f64 * PI;
    match (bc, derivative) {
        (Boundary::Neumann, false) => (Trig::Cos, k, if k == 0 { 1.0 } else { SQRT_2 }),
        (Boundary::Neumann, true) => (Trig::Sin, k, -SQRT_2 * kpi),
        (Boundary::Dirichlet, false) => (Trig::Sin, k, SQRT_2),
        (Boundary::Dirichlet, true) => (Trig::Cos, k, SQRT_2 * kpi),
    }
}

/// Product of two terms as a sum of two terms.
fn product(f: Term, g: Term) -> [Term; 2] {
    let (m, n) = (f.1, g.1);
    let c = 0.5 * f.2 * g.2;
    let diff = m.abs_diff(n);
    match (f.0, g.0) {
        (Trig::Cos, Trig::Cos) => [(Trig::Cos, diff, c), (Trig::Cos, m + n, c)],
        (Trig::Sin, Trig::Sin) => [(Trig::Cos, diff, c), (Trig::Cos, m + n, -c)],
        // sin(m)cos(n) = ½[sin(m+n) + sin(m−n)]
        (Trig::Sin, Trig::Cos) => [(Trig::Sin, m + n, c), (Trig::Sin, diff, if m >= n { c } else { -c })],
        (Trig::Cos, Trig::Sin) => [(Trig::Sin, m + n, c), (Trig::Sin, diff, if n >= m { c } else { -c })],
    }
}

/// `∫_lo^hi cos(kπx + φ) dx`.
fn cos_integral(k: f64, phase: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if k == 0.0 {
        (hi - lo) * phase.cos()
    } else {
        ((k * PI * hi + phase).sin() - (k * PI * lo + phase).sin()) / (k * PI)
    }
}

/// `C(u) = ∫ T₁(mπx) T₂(nπ(x − u)) dx` over `x, x − u ∈ [0, 1]`.
fn overlap(t1: Trig, m: usize, t2: Trig, n: usize, u: f64) -> f64 {
    let (lo, hi) = if u >= 0.0 { (u, 1.0) } else { (0.0, 1.0 + u) };
    let (p1, p2) = (t1.phase(), t2.phase());
    let (m, n) = (m as f64, n as f64);
    0.5 * (cos_integral(m - n, n * PI * u + p1 - p2, lo, hi) + cos_integral(m + n, -n * PI * u + p1 + p2, lo, hi))
}

/// `G[k₁][k₂](m, n, t) = ∫∫_{[0,1]²} T_{k₁}(mπx) T_{k₂}(nπy) K_t(x − y) dx dy` with
/// `K_t(u) = e^{−tu²}` (even) or `u e^{−tu²}` (odd). Layout
/// `((k₁·2 + k₂)·F + m)·F + n)·nt + it`; the last `it` is the diagonal node.
struct KernelTables {
    freqs: usize,
    nt: usize,
    even: Vec<f64>,
    odd: Vec<f64>,
}

impl KernelTables {
    fn new(freqs: usize, sum: &ExpSum) -> Self {
        let nt = sum.nt();
        let rule = GaussRule::new(2 * freqs + 48);
        let trig = [Trig::Cos, Trig::Sin];
        let per_t: Vec<(Vec<f64>, Vec<f64>)> = par::map_range(nt, |it| {
            let mut even = vec![0.0; 4 * freqs * freqs];
            let mut odd = vec![0.0; 4 * freqs * freqs];
            let diagonal = it == nt - 1;
            let t = if diagonal { 0.0 } else { sum.t[it] };
            let reach = if t > 0.0 { (9.5 / t.sqrt()).min(1.0) } else { 1.0 };
            let nodes: Vec<(f64, f64)> = rule.on(-reach, 0.0).chain(rule.on(0.0, reach)).collect();
            for (k1, &t1) in trig.iter().enumerate() {
                for (k2, &t2) in trig.iter().enumerate() {
                    for m in 0..freqs {
                        for n in 0..freqs {
                            let i = ((k1 * 2 + k2) * freqs + m) * freqs + n;
                            if diagonal {
                                even[i] = overlap(t1, m, t2, n, 0.0);
                                continue;
                            }
                            let (mut e, mut o) = (0.0, 0.0);
                            for &(u, w) in &nodes {
                                let v = w * (-t * u * u).exp() * overlap(t1, m, t2, n, u);
                                e += v;
                                o += v * u;
                            }
                            even[i] = e;
                            odd[i] = o;
                        }
                    }
                }
            }
            (even, odd)
        });
        let mut even = vec![0.0; 4 * freqs * freqs * nt];
        let mut odd = vec![0.0; 4 * freqs * freqs * nt];
        for (it, (e, o)) in per_t.into_iter().enumerate() {
            for i in 0..e.len() {
                even[i * nt + it] = e[i];
                odd[i * nt + it] = o[i];
            }
        }
        Self { freqs, nt, even, odd }
    }

    fn at(&self, odd: bool, x: Term, y: Term, it: usize) -> f64 {
        let i = ((x.0.index() * 2 + y.0.index()) * self.freqs + x.1) * self.freqs + y.1;
        let table = if odd { &self.odd } else { &self.even };
        x.2 * y.2 * table[i * self.nt + it]
    }

    /// `∫∫ f(x) g(y) K_t(x − y)` for products given as term pairs.
    fn pair(&self, odd: bool, f: &[Term; 2], g: &[Term; 2], it: usize) -> f64 {
        let mut v = 0.0;
        for &x in f {
            for &y in g {
                v += self.at(odd, x, y, it);
            }
        }
        v
    }
}

/// Per-axis tables over 1D mode indices `(a, c)` of particle 1 and `(b, d)`
/// of particle 2, `t` fastest:
/// - `vv`: `e_a e_c ⊗ e_b e_d`, even kernel;
/// - `gs`: `e_a′e_c′ ⊗ e_b e_d + e_a e_c ⊗ e_b′e_d′`, even kernel;
/// - `lv`: `e_a′e_c ⊗ e_b e_d`, odd kernel;
/// - `vl`: `e_a e_c ⊗ e_b′e_d`, odd kernel.
struct Tables {
    k: usize,
    nt: usize,
    vv: Vec<f64>,
    gs: Vec<f64>,
    lv: Vec<f64>,
    vl: Vec<f64>,
    sum: ExpSum,
}

impl Tables {
    fn new(kmax: usize, bc: Boundary, odd: bool) -> Self {
        let sum = ExpSum::new();
        let first = first_mode(bc);
        let k = kmax + 1 - first;
        let nt = sum.nt();
        let kt = KernelTables::new(2 * kmax + 1, &sum);
        let len = k * k * k * k * nt;
        let (mut vv, mut gs) = (vec![0.0; len], vec![0.0; len]);
        let (mut lv, mut vl) = if odd { (vec![0.0; len], vec![0.0; len]) } else { (Vec::new(), Vec::new()) };
        let m = |i: usize, d: bool| mode(i + first, bc, d);
        for a in 0..k {
            for c in 0..k {
                let v1 = product(m(a, false), m(c, false));
                let d1 = product(m(a, true), m(c, true));
                let l1 = product(m(a, true), m(c, false));
                for b in 0..k {
                    for d in 0..k {
                        let v2 = product(m(b, false), m(d, false));
                        let d2 = product(m(b, true), m(d, true));
                        let l2 = product(m(b, true), m(d, false));
                        let base = (((a * k + c) * k + b) * k + d) * nt;
                        for it in 0..nt {
                            vv[base + it] = kt.pair(false, &v1, &v2, it);
                            gs[base + it] = kt.pair(false, &d1, &v2, it) + kt.pair(false, &v1, &d2, it);
                            if odd && it < nt - 1 {
                                lv[base + it] = kt.pair(true, &l1, &v2, it);
                                vl[base + it] = kt.pair(true, &v1, &l2, it);
                            }
                        }
                    }
                }
            }
        }
        Self { k, nt, vv, gs, lv, vl, sum }
    }

    fn offset(&self, a: usize, c: usize, b: usize, d: usize) -> usize {
        (((a * self.k + c) * self.k + b) * self.k + d) * self.nt
    }

    /// Unsymmetrized `(mass, stiffness)` between `P_{AB}` (bra) and
    /// `P_{CD}` (ket), particle 1 in `A, C`, particle 2 in `B, D`.
    fn element(&self, kinds: (BasisKind, BasisKind), weight: WeightKind, bra: (&[usize; 3], &[usize; 3]), ket: (&[usize; 3], &[usize; 3])) -> (f64, f64) {
        let ((a, b), (c, d)) = (bra, ket);
        let nt = self.nt;
        let o: [usize; 3] = std::array::from_fn(|x| self.offset(a[x], c[x], b[x], d[x]));
        let vv: [&[f64]; 3] = std::array::from_fn(|x| &self.vv[o[x]..o[x] + nt]);
        let gs: [&[f64]; 3] = std::array::from_fn(|x| &self.gs[o[x]..o[x] + nt]);
        let prod = |t: usize| vv[0][t] * vv[1][t] * vv[2][t];
        let grad = |t: usize| gs[0][t] * vv[1][t] * vv[2][t] + vv[0][t] * (gs[1][t] * vv[2][t] + vv[1][t] * gs[2][t]);
        let others = |x: usize, t: usize| vv[(x + 1) % 3][t] * vv[(x + 2) % 3][t];
        let s = &self.sum;
        let (mut mass, mut stiff) = (0.0, 0.0);
        match (weight, kinds) {
            (WeightKind::Unit, _) => {
                mass = prod(0);
                stiff = grad(0);
            }
            (WeightKind::Interacting, (BasisKind::Smooth, BasisKind::Smooth)) => {
                for t in 0..nt {
                    mass += s.w2[t] * prod(t);
                    stiff += s.w2[t] * grad(t);
                }
            }
            (WeightKind::Interacting, (BasisKind::Smooth, BasisKind::Cusp)) => {
                // ∫ r⁻¹ ∇P·∇P′ + ∫ P′ (∇₁ − ∇₂)P · u / r³
                for t in 1..nt - 1 {
                    mass += s.w1[t] * prod(t);
                    let mut odd = 0.0;
                    for x in 0..3 {
                        odd += (self.lv[o[x] + t] - self.vl[o[x] + t]) * others(x, t);
                    }
                    stiff += s.w1[t] * grad(t) + s.w3[t] * odd;
                }
            }
            (WeightKind::Interacting, (BasisKind::Cusp, BasisKind::Smooth)) => {
                return self.element((BasisKind::Smooth, BasisKind::Cusp), weight, ket, bra);
            }
            (WeightKind::Interacting, (BasisKind::Cusp, BasisKind::Cusp)) => {
                // ∫ ∇P·∇P′ + 2∫ PP′/r² + ∫ (∇₁ − ∇₂)(PP′) · u / r²
                mass = prod(0);
                stiff = grad(0);
                let oc: [usize; 3] = std::array::from_fn(|x| self.offset(c[x], a[x], b[x], d[x]));
                let od: [usize; 3] = std::array::from_fn(|x| self.offset(a[x], c[x], d[x], b[x]));
                for t in 1..nt {
                    let mut odd = 0.0;
                    if t < nt - 1 {
                        for x in 0..3 {
                            let l = self.lv[o[x] + t] + self.lv[oc[x] + t];
                            let r = self.vl[o[x] + t] + self.vl[od[x] + t];
                            odd += (l - r) * others(x, t);
                        }
                    }
                    stiff += s.w2[t] * (2.0 * prod(t) + odd);
                }
            }
        }
        (mass, stiff)
    }
}

/// Dense sector matrices together with the basis labels.
#[derive(Clone, Debug)]
pub struct TwoBodyMatrices {
    pub stiffness: Mat<f64>,
    pub mass: Mat<f64>,
    pub basis: Vec<BasisFunction>,
    pub side: f64,
}

/// Weighted stiffness `Σ_i ∫ g²|∇_iψ|²` and mass `∫ g²|ψ|²` on the sector basis,
/// in physical units for `p.side`.
pub fn assemble_two_body(p: &TwoBodyBoxProblem) -> Result<TwoBodyMatrices> {
    p.validate()?;
    let basis = pair_basis(p);
    if basis.is_empty() {
        return Err(invalid("basis cutoff admits no pair states"));
    }
    if basis.len() > MAX_BASIS {
        return Err(Error::SizeLimit(format!(
            "{} basis functions exceed the limit {MAX_BASIS}; lower the basis cutoff",
            basis.len()
        )));
    }
    let kmax = basis.iter().flat_map(|f| f.a.iter().chain(f.b.iter())).copied().max().unwrap_or(1) as usize;
    let has_cusp = basis.iter().any(|f| f.kind == BasisKind::Cusp);
    let tables = Tables::new(kmax.max(1), p.bc, has_cusp);
    let first = first_mode(p.bc);
    let idx: Vec<([usize; 3], [usize; 3])> =
        basis.iter().map(|f| (f.a.map(|v| v as usize - first), f.b.map(|v| v as usize - first))).collect();
    let n = basis.len();
    let sign = p.sector.sign();
    let norm = |i: usize| if idx[i].0 == idx[i].1 { 0.5 } else { FRAC_1_SQRT_2 };
    let rows: Vec<Vec<(f64, f64)>> = par::map_range(n, |i| {
        let (a, b) = &idx[i];
        (i..n)
            .map(|j| {
                let (c, d) = &idx[j];
                let kinds = (basis[i].kind, basis[j].kind);
                let (m1, s1) = tables.element(kinds, p.weight, (a, b), (c, d));
                let (m2, s2) = tables.element(kinds, p.weight, (a, b), (d, c));
                let f = 2.0 * norm(i) * norm(j);
                (f * (m1 + sign * m2), f * (s1 + sign * s2))
            })
            .collect()
    });
    // Smooth mass/stiffness scale as L⁻², L⁻⁴; each cusp factor adds one power of L.
    let mut mass = Mat::<f64>::zeros(n, n);
    let mut stiffness = Mat::<f64>::zeros(n, n);
    let l = p.side;
    let cusp = |i: usize| if basis[i].kind == BasisKind::Cusp { l } else { 1.0 };
    let (ms, ss) = match p.weight {
        WeightKind::Interacting => (l.powi(-2), l.powi(-4)),
        WeightKind::Unit => (1.0, l.powi(-2)),
    };
    for (i, row) in rows.into_iter().enumerate() {
        for (off, (m, s)) in row.into_iter().enumerate() {
            let j = i + off;
            let c = cusp(i) * cusp(j);
            mass[(i, j)] = m * ms * c;
            mass[(j, i)] = m * ms * c;
            stiffness[(i, j)] = s * ss * c;
            stiffness[(j, i)] = s * ss * c;
        }
    }
    Ok(TwoBodyMatrices { stiffness, mass, basis, side: p.side })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(t: Trig, k: usize, x: f64) -> f64 {
        (k as f64 * PI * x + t.phase()).cos()
    }

    #[test]
    fn overlap_is_exact() {
        let rule = GaussRule::new(40);
        for (t1, m, t2, n, u) in [
            (Trig::Cos, 0, Trig::Cos, 0, 0.3),
            (Trig::Cos, 2, Trig::Sin, 3, -0.4),
            (Trig::Sin, 5, Trig::Cos, 1, 0.77),
            (Trig::Sin, 4, Trig::Sin, 4, 0.0),
        ] {
            let (lo, hi) = if u >= 0.0 { (u, 1.0) } else { (0.0, 1.0 + u) };
            let q = rule.integrate(lo, hi, |x| eval(t1, m, x) * eval(t2, n, x - u));
            assert!((q - overlap(t1, m, t2, n, u)).abs() < 1e-13);
        }
    }

    #[test]
    fn products_expand_exactly() {
        for bc in [Boundary::Neumann, Boundary::Dirichlet] {
            for (a, c) in [(1, 2), (3, 1), (2, 2)] {
                for (da, dc) in [(false, false), (true, false), (true, true)] {
                    let (f, g) = (mode(a, bc, da), mode(c, bc, dc));
                    let terms = product(f, g);
                    for x in [0.13, 0.5, 0.91] {
                        let direct = f.2 * eval(f.0, f.1, x) * g.2 * eval(g.0, g.1, x);
                        let sum: f64 = terms.iter().map(|t| t.2 * eval(t.0, t.1, x)).sum();
                        assert!((direct - sum).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_tables_against_direct_quadrature() {
        let sum = ExpSum::new();
        let kt = KernelTables::new(5, &sum);
        let rule = GaussRule::new(60);
        let probes = [0, 1, 40, 90, 120];
        for &it in &probes {
            let t = sum.t[it];
            for (t1, m, t2, n) in [(Trig::Cos, 0, Trig::Cos, 0), (Trig::Sin, 1, Trig::Cos, 3), (Trig::Sin, 4, Trig::Sin, 2)] {
                let (mut even, mut odd) = (0.0, 0.0);
                // split at the diagonal so the kernel peak is resolved
                for (x, wx) in rule.on(0.0, 1.0) {
                    for (lo, hi) in [(0.0, x), (x, 1.0)] {
                        let reach = if t > 0.0 { 12.0 / t.sqrt() } else { 1.0 };
                        let (lo, hi) = (lo.max(x - reach), hi.min(x + reach));
                        if hi <= lo {
                            continue;
                        }
                        for (y, wy) in rule.on(lo, hi) {
                            let u = x - y;
                            let v = wx * wy * eval(t1, m, x) * eval(t2, n, y) * (-t * u * u).exp();
                            even += v;
                            odd += v * u;
                        }
                    }
                }
                let f = (t1, m, 1.0);
                let g = (t2, n, 1.0);
                let scale = 1.0 / t.max(1.0).sqrt();
                assert!((kt.at(false, f, g, it) - even).abs() < 1e-10 * scale, "t={t}");
                assert!((kt.at(true, f, g, it) - odd).abs() < 1e-10 * scale, "t={t}");
            }
        }
    }

    #[test]
    fn exponential_sums_reproduce_powers() {
        let s = ExpSum::new();
        for r in [1e-3, 0.05, 0.4, 1.0, 1.7] {
            let sum = |w: &[f64]| -> f64 { s.t.iter().zip(w).map(|(t, w)| w * (-t * r * r).exp()).sum() };
            let tail2 = (-s.t.last().unwrap() * r * r).exp() / (r * r);
            assert!(((sum(&s.w2) + tail2) * r * r - 1.0).abs() < 1e-9, "r={r}");
            assert!((sum(&s.w1) * r - 1.0).abs() < 1e-8, "r={r}");
            assert!((sum(&s.w3) * r.powi(3) - 1.0).abs() < 1e-8, "r={r}");
        }
    }

    #[test]
    fn sector_sizes() {
        for bc in [Boundary::Neumann, Boundary::Dirichlet] {
            let sym = sector_pairs(14, Sector::Symmetric, bc);
            let anti = sector_pairs(14, Sector::Antisymmetric, bc);
            let diag = sym.iter().filter(|(a, b, _)| a == b).count();
            assert_eq!(sym.len(), anti.len() + diag);
        }
        assert_eq!(Sector::Symmetric.degeneracy(3) + Sector::Antisymmetric.degeneracy(3), 9);
        let p = TwoBodyBoxProblem::new(1.0, 2, 14, Sector::Symmetric, Boundary::Dirichlet);
        assert_eq!(pair_basis(&p).len(), 2 * sector_pairs(14, Sector::Symmetric, Boundary::Dirichlet).len());
    }

    #[test]
    fn unit_weight_is_diagonal() {
        let p = TwoBodyBoxProblem::free(2.0, 2, 9, Sector::Antisymmetric, Boundary::Dirichlet);
        let m = assemble_two_body(&p).unwrap();
        let unit = (PI / 2.0).powi(2);
        for i in 0..m.basis.len() {
            for j in 0..m.basis.len() {
                let want_m = if i == j { 1.0 } else { 0.0 };
                let want_s = if i == j { unit * m.basis[i].level as f64 } else { 0.0 };
                assert!((m.mass[(i, j)] - want_m).abs() < 1e-12);
                assert!((m.stiffness[(i, j)] - want_s).abs() < 1e-10);
            }
        }
    }

    /// With Dirichlet walls, `ψ = rP` satisfies `∫ r⁻²|∇(rP)|² = ∫ |∇P|²`
    /// after integration by parts, so the cusp block is the free problem.
    #[test]
    fn dirichlet_cusp_block_is_free() {
        for sector in [Sector::Symmetric, Sector::Antisymmetric] {
            let mut p = TwoBodyBoxProblem::new(1.0, 2, 13, sector, Boundary::Dirichlet);
            p.basis_cutoff = 6;
            let m = assemble_two_body(&p).unwrap();
            let cusp: Vec<usize> = (0..m.basis.len()).filter(|&i| m.basis[i].kind == BasisKind::Cusp).collect();
            assert!(cusp.len() > 5);
            for &i in &cusp {
                for &j in &cusp {
                    let want_m = if i == j { 1.0 } else { 0.0 };
                    let want_s = if i == j { PI * PI * m.basis[i].level as f64 } else { 0.0 };
                    assert!((m.mass[(i, j)] - want_m).abs() < 1e-12);
                    assert!((m.stiffness[(i, j)] - want_s).abs() < 1e-7 * want_s.max(1.0), "{i} {j}: {}", m.stiffness[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn side_scaling() {
        let p = TwoBodyBoxProblem::new(1.0, 2, 8, Sector::Symmetric, Boundary::Neumann);
        let a = assemble_two_body(&p).unwrap();
        let b = assemble_two_body(&TwoBodyBoxProblem { side: 2.5, ..p }).unwrap();
        let ea = crate::linalg::generalized_eigenvalues(&a.stiffness, &a.mass).unwrap();
        let eb = crate::linalg::generalized_eigenvalues(&b.stiffness, &b.mass).unwrap();
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x / 6.25 - y).abs() < 1e-8 * x.max(1.0));
        }
    }
}
