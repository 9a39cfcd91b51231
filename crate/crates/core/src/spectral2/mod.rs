//! Interacting spectra: the two-body radial form and the boxed `N = 2` model.

pub mod radial;
pub mod twobody;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::cache::Cache;
use crate::error::{invalid, Error, Result};
use crate::freefermi::Boundary;
use crate::linalg::{generalized_eigen, lobpcg, CsrMatrix, Eigenpairs, LobpcgOptions, SymOperator};

pub use radial::{integration_by_parts_sides, radial_spectrum, unitary_eigenvalue, RadialProblem};
pub use twobody::{assemble_two_body, pair_basis, BasisFunction, BasisKind, Sector, TwoBodyBoxProblem, TwoBodyMatrices, WeightKind, MAX_BASIS};

/// Lowest `k` eigenpairs of `A u = λ B u` to residual `tol`, with a Jacobi
/// preconditioner and a seeded random start.
pub fn lowest_modes(a: &dyn SymOperator, b: Option<&dyn SymOperator>, k: usize, tol: f64) -> Result<Eigenpairs> {
    let opts = LobpcgOptions { tol, ..LobpcgOptions::default() };
    lobpcg(a, b, None, k, &opts)
}

/// Cell-centred 7-point Neumann Laplacian on `[0, side]³` with `cells` cells per axis.
pub fn neumann_laplacian(cells: usize, side: f64) -> CsrMatrix {
    let h2 = (side / cells as f64).powi(2);
    let n = cells;
    let idx = |i: usize, j: usize, k: usize| ((i * n + j) * n + k) as u32;
    let rows = (0..n * n * n)
        .map(|p| {
            let (i, j, k) = (p / (n * n), (p / n) % n, p % n);
            let mut row = Vec::with_capacity(7);
            let mut diag = 0.0;
            let c = [i, j, k];
            for axis in 0..3 {
                for step in [-1i64, 1] {
                    let v = c[axis] as i64 + step;
                    if v < 0 || v >= n as i64 {
                        continue;
                    }
                    let mut d = c;
                    d[axis] = v as usize;
                    row.push((idx(d[0], d[1], d[2]), -1.0 / h2));
                    diag += 1.0 / h2;
                }
            }
            row.push((p as u32, diag));
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

/// Eigenvalue of [`neumann_laplacian`] for the mode `cos(kπx/side)`, per axis
/// `(2/h)² sin²(kπ/2n)`.
pub fn discrete_neumann_eigenvalue(cells: usize, side: f64, k: [usize; 3]) -> f64 {
    let h = side / cells as f64;
    k.iter().map(|&k| (2.0 / h * (k as f64 * PI / (2.0 * cells as f64)).sin()).powi(2)).sum()
}

/// Ritz values of one symmetry sector on the unit cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBodySpectrum {
    pub problem: TwoBodyBoxProblem,
    pub basis_size: usize,
    /// Ascending Ritz values for side 1.
    pub values: Vec<f64>,
    /// Relative residuals `‖Au − λBu‖ / (‖Bu‖ max(1, λ))`.
    pub residuals: Vec<f64>,
}

impl TwoBodySpectrum {
    /// Ritz values for box side `side`.
    pub fn values_at(&self, side: f64) -> impl Iterator<Item = f64> + '_ {
        let s = 1.0 / (side * side);
        self.values.iter().map(move |v| v * s)
    }

    /// Largest energy (side 1) reliably represented: half the top free pair
    /// energy in the basis.
    pub fn resolved_cutoff(&self) -> f64 {
        0.5 * PI * PI * self.problem.basis_cutoff as f64
    }
}

/// Full dense Rayleigh–Ritz solve of one sector at unit side.
pub fn two_body_spectrum(p: &TwoBodyBoxProblem) -> Result<TwoBodySpectrum> {
    let unit = p.unit();
    let m = assemble_two_body(&unit)?;
    let (values, vectors) = generalized_eigen(&m.stiffness, &m.mass)?;
    let n = values.len();
    let av = &m.stiffness * &vectors;
    let bv = &m.mass * &vectors;
    let residuals = crate::par::map_range(n, |j| {
        let (mut r2, mut b2) = (0.0, 0.0);
        for i in 0..n {
            r2 += (av[(i, j)] - values[j] * bv[(i, j)]).powi(2);
            b2 += bv[(i, j)].powi(2);
        }
        r2.sqrt() / (b2.sqrt() * values[j].abs().max(1.0))
    });
    if values.iter().any(|v| *v < -1e-8 * values.last().copied().unwrap_or(1.0).abs()) {
        return Err(Error::LinearAlgebra("negative Ritz value: weighted form is not positive".into()));
    }
    Ok(TwoBodySpectrum { problem: unit, basis_size: n, values, residuals })
}

/// Upper bound on `Σ_{E ≥ e} e^{−βE}` over the two-particle spectrum,
/// using the counting bound `N(E) ≤ (c q E^{3/2}/ρ)²`:
/// `∫_e^∞ β e^{−βE} N(E) dE`.
pub fn pair_tail_bound(beta: f64, e: f64, q: u32, rho: f64, c: f64) -> f64 {
    let k = (c * q as f64 / rho).powi(2);
    let b = beta;
    k * (-b * e).exp() * (e.powi(3) + 3.0 * e * e / b + 6.0 * e / (b * b) + 6.0 / (b * b * b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractingOptions {
    pub bc: Boundary,
    pub weight: WeightKind,
    /// Basis cutoff `|k_a|² + |k_b|²`.
    pub basis_cutoff: u32,
    /// Include the cusp functions `|x₁ − x₂|·P` (interacting weight only).
    pub cusp: bool,
    /// Energy cutoff for the Boltzmann sum; `None` uses the resolved cutoff.
    pub energy_cutoff: Option<f64>,
    /// Constant `c` of the two-particle counting bound.
    pub entropy_c: f64,
}

impl Default for InteractingOptions {
    fn default() -> Self {
        Self { bc: Boundary::Dirichlet, weight: WeightKind::Interacting, basis_cutoff: 30, cusp: true, energy_cutoff: None, entropy_c: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorSum {
    pub sector: Sector,
    pub degeneracy: u64,
    pub levels: usize,
    pub partition_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractingFreeEnergy {
    pub beta: f64,
    pub side: f64,
    pub q: u32,
    pub energy_cutoff: f64,
    /// `Σ_sectors deg Σ_{E < cutoff} e^{−βE}` over Ritz values.
    pub partition_sum: f64,
    pub tail_bound: f64,
    /// `−T ln Z`; `None` when the tail bound exceeds 10% of `Z`.
    pub free_energy: Option<f64>,
    /// `[−T ln(Z + tail), −T ln Z]`.
    pub interval: (f64, f64),
    pub sectors: Vec<SectorSum>,
}

/// Sectors contributing for `q` spin states.
pub fn active_sectors(q: u32) -> Vec<Sector> {
    [Sector::Symmetric, Sector::Antisymmetric].into_iter().filter(|s| s.degeneracy(q) > 0).collect()
}

/// `F_g(β, 2, L)` from precomputed sector spectra.
pub fn free_energy_from_spectra(
    beta: f64,
    side: f64,
    q: u32,
    spectra: &[TwoBodySpectrum],
    energy_cutoff: Option<f64>,
    entropy_c: f64,
) -> Result<InteractingFreeEnergy> {
    if !(beta > 0.0) || !(side > 0.0) {
        return Err(invalid("beta and side must be positive"));
    }
    let resolved = spectra.iter().map(|s| s.resolved_cutoff()).fold(f64::INFINITY, f64::min) / (side * side);
    let cutoff = energy_cutoff.unwrap_or(resolved);
    if cutoff > resolved * (1.0 + 1e-12) {
        return Err(invalid(format!("energy cutoff {cutoff} exceeds the resolved range {resolved}")));
    }
    let mut sectors = Vec::new();
    for sector in active_sectors(q) {
        let s = spectra
            .iter()
            .find(|s| s.problem.sector == sector)
            .ok_or_else(|| invalid(format!("missing {sector} spectrum")))?;
        let levels: Vec<f64> = s.values_at(side).filter(|&e| e < cutoff).collect();
        let sum = crate::par::sum_compensated(levels.iter().map(|e| (-beta * e).exp()));
        sectors.push(SectorSum { sector, degeneracy: sector.degeneracy(q), levels: levels.len(), partition_sum: sum });
    }
    let z: f64 = sectors.iter().map(|s| s.degeneracy as f64 * s.partition_sum).sum();
    if !(z > 0.0) {
        return Err(Error::Infeasible("no levels below the energy cutoff".into()));
    }
    let rho = 2.0 / side.powi(3);
    let tail = pair_tail_bound(beta, cutoff, q, rho, entropy_c);
    let upper = -z.ln() / beta;
    let lower = -(z + tail).ln() / beta;
    Ok(InteractingFreeEnergy {
        beta,
        side,
        q,
        energy_cutoff: cutoff,
        partition_sum: z,
        tail_bound: tail,
        free_energy: (tail <= 0.1 * z).then_some(upper),
        interval: (lower, upper),
        sectors,
    })
}

/// Unit-side problem of one sector for `(q, opts)`.
pub fn sector_problem(q: u32, sector: Sector, opts: &InteractingOptions) -> TwoBodyBoxProblem {
    match opts.weight {
        WeightKind::Unit => TwoBodyBoxProblem::free(1.0, q, opts.basis_cutoff, sector, opts.bc),
        WeightKind::Interacting => TwoBodyBoxProblem {
            cusp_cutoff: opts.cusp.then_some(opts.basis_cutoff),
            ..TwoBodyBoxProblem::new(1.0, q, opts.basis_cutoff, sector, opts.bc)
        },
    }
}

/// Solves every active sector for `(q, opts)` at unit side.
pub fn sector_spectra(q: u32, opts: &InteractingOptions) -> Result<Vec<TwoBodySpectrum>> {
    sector_spectra_cached(q, opts, None)
}

/// As [`sector_spectra`], reusing spectra stored in `cache`.
pub fn sector_spectra_cached(q: u32, opts: &InteractingOptions, cache: Option<&Cache>) -> Result<Vec<TwoBodySpectrum>> {
    active_sectors(q)
        .into_iter()
        .map(|sector| {
            let p = sector_problem(q, sector, opts);
            match cache {
                Some(c) => c.get_or_compute("twobody", &p, || two_body_spectrum(&p)).map(|(s, _)| s),
                None => two_body_spectrum(&p),
            }
        })
        .collect()
}

/// All Ritz levels below `cutoff` at side `side`, as `(E, degeneracy)` in
/// increasing order, sectors merged.
pub fn merged_levels(spectra: &[TwoBodySpectrum], side: f64, q: u32, cutoff: f64) -> Vec<(f64, u64)> {
    let mut out: Vec<(f64, u64)> = spectra
        .iter()
        .flat_map(|s| {
            let d = s.problem.sector.degeneracy(q);
            s.values_at(side).filter(move |&e| e < cutoff && d > 0).map(move |e| (e, d))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `F_g(β, 2, L) = −T ln Σ_sectors deg Σ_k e^{−βE_k}`, with the counting-bound tail.
pub fn interacting_free_energy(beta: f64, side: f64, q: u32, opts: &InteractingOptions) -> Result<InteractingFreeEnergy> {
    let spectra = sector_spectra(q, opts)?;
    free_energy_from_spectra(beta, side, q, &spectra, opts.energy_cutoff, opts.entropy_c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairLevel {
    pub sector: Sector,
    pub energy: f64,
    pub degeneracy: u64,
    pub residual: f64,
}

/// The boxed pair next to the same pair without interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub interacting: InteractingFreeEnergy,
    /// `F(β, 2, L)` of the free gas under the same walls.
    pub free: f64,
    /// Levels below the energy cutoff, ascending.
    pub levels: Vec<PairLevel>,
}

impl PairComparison {
    /// `F − F_g` on the pessimistic side of the `F_g` interval.
    pub fn margin(&self) -> f64 {
        self.free - self.interacting.interval.1
    }
}

/// `F_g(β, 2, L)` and `F(β, 2, L)` for one box, spectra optionally cached.
pub fn compare_pair(beta: f64, side: f64, q: u32, opts: &InteractingOptions, cache: Option<&Cache>) -> Result<PairComparison> {
    let spectra = sector_spectra_cached(q, opts, cache)?;
    let interacting = free_energy_from_spectra(beta, side, q, &spectra, opts.energy_cutoff, opts.entropy_c)?;
    let free = crate::freefermi::box_free_energy(beta, 2, side, q, opts.bc, &Default::default())?.free_energy;
    let mut levels: Vec<PairLevel> = spectra
        .iter()
        .flat_map(|s| {
            let degeneracy = s.problem.sector.degeneracy(q);
            s.values_at(side)
                .zip(&s.residuals)
                .filter(|(e, _)| *e < interacting.energy_cutoff)
                .map(move |(energy, &residual)| PairLevel { sector: s.problem.sector, energy, degeneracy, residual })
        })
        .collect();
    levels.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(PairComparison { interacting, free, levels })
}
