//! s-wave reduction of the two-body form `∫ (1/|x| − a⁻¹)² |∇f|²` on a ball.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::freefermi::{Boundary, Domain, SpectrumSlice};
use crate::linalg::generalized_eigenvalues;
use crate::quad::GaussRule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    /// `a⁻¹ ≤ 0`.
    pub a_inv: f64,
    pub radius: f64,
    /// Number of elements on `(0, R]`.
    pub elements: usize,
    /// Condition at `r = R`; `r = 0` is always natural.
    pub outer: Boundary,
}

impl RadialProblem {
    pub fn new(a_inv: f64, radius: f64, elements: usize) -> Self {
        Self { a_inv, radius, elements, outer: Boundary::Dirichlet }
    }

    pub fn h(&self) -> f64 {
        self.radius / self.elements as f64
    }

    /// `r² w(r)² = (1 − a⁻¹ r)²`, the radial measure of both forms.
    pub fn measure(&self, r: f64) -> f64 {
        (1.0 - self.a_inv * r).powi(2)
    }

    fn validate(&self) -> Result<()> {
        if self.a_inv > 0.0 || !self.a_inv.is_finite() {
            return Err(invalid(format!("a_inv must be <= 0, got {}", self.a_inv)));
        }
        if !(self.radius > 0.0) || self.elements < 2 {
            return Err(invalid("need R > 0 and at least two elements"));
        }
        Ok(())
    }

    /// Linear finite-element stiffness and mass on the nodes `r_i = i h`.
    /// Numerator `∫ r²w² |f′|² dr`, denominator `∫ r²w² f² dr`.
    pub fn assemble(&self) -> Result<(Mat<f64>, Mat<f64>)> {
        self.validate()?;
        let n_nodes = self.elements + 1;
        let dofs = match self.outer {
            Boundary::Dirichlet => n_nodes - 1,
            Boundary::Neumann => n_nodes,
        };
        let h = self.h();
        let g = GaussRule::new(3);
        let mut k = Mat::<f64>::zeros(dofs, dofs);
        let mut m = Mat::<f64>::zeros(dofs, dofs);
        for e in 0..self.elements {
            let (r0, r1) = (e as f64 * h, (e + 1) as f64 * h);
            let mut ke = [[0.0; 2]; 2];
            let mut me = [[0.0; 2]; 2];
            for (r, w) in g.on(r0, r1) {
                let mu = self.measure(r) * w;
                let phi = [(r1 - r) / h, (r - r0) / h];
                let dphi = [-1.0 / h, 1.0 / h];
                for a in 0..2 {
                    for b in 0..2 {
                        ke[a][b] += mu * dphi[a] * dphi[b];
                        me[a][b] += mu * phi[a] * phi[b];
                    }
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    let (i, j) = (e + a, e + b);
                    if i < dofs && j < dofs {
                        k[(i, j)] += ke[a][b];
                        m[(i, j)] += me[a][b];
                    }
                }
            }
        }
        Ok((k, m))
    }
}

/// Lowest `k` eigenvalues of the radial weighted form.
pub fn radial_spectrum(p: &RadialProblem, k: usize) -> Result<SpectrumSlice> {
    let (a, b) = p.assemble()?;
    if k == 0 {
        return Err(invalid("need k >= 1"));
    }
    // a mode needs a few elements per half wavelength to be resolved
    if k * 4 > p.elements {
        return Err(Error::SizeLimit(format!("{} elements cannot resolve {k} modes", p.elements)));
    }
    let values = generalized_eigenvalues(&a, &b)?;
    let vals: Vec<f64> = values.into_iter().take(k).collect();
    let cutoff = *vals.last().unwrap();
    let mut s = SpectrumSlice::from_values(vals, p.outer, Domain::Ball { radius: p.radius }, cutoff, 0.0);
    s.cutoff = cutoff;
    Ok(s)
}

/// `((2k+1)π / 2R)²`, the `a⁻¹ = 0` Dirichlet eigenvalues.
pub fn unitary_eigenvalue(radius: f64, k: usize) -> f64 {
    ((2 * k + 1) as f64 * std::f64::consts::PI / (2.0 * radius)).powi(2)
}

/// Both sides of `∫ r²w²|f′|² dr = ∫ |(r w f)′|² dr` for `f` vanishing at
/// the ends, by composite Gauss quadrature with `elements` panels.
pub fn integration_by_parts_sides(
    a_inv: f64,
    radius: f64,
    elements: usize,
    f: impl Fn(f64) -> (f64, f64),
) -> (f64, f64) {
    let g = GaussRule::new(6);
    let h = radius / elements as f64;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for e in 0..elements {
        for (r, w) in g.on(e as f64 * h, (e + 1) as f64 * h) {
            let (v, dv) = f(r);
            let rw = 1.0 - a_inv * r;
            lhs += w * rw * rw * dv * dv;
            let d = -a_inv * v + rw * dv;
            rhs += w * d * d;
        }
    }
    (lhs, rhs)
}
