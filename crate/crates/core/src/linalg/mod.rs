//! Sparse/dense symmetric operators and generalized eigensolvers.

mod csr;
mod dense;
mod lobpcg;

pub use csr::CsrMatrix;
pub use dense::{generalized_eigen, generalized_eigenvalues, symmetric_eigen, DenseSym};
pub use lobpcg::{lobpcg, Eigenpairs, LobpcgOptions};

/// A real symmetric linear operator.
pub trait SymOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;

    fn quad_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        crate::par::dot(x, &y)
    }
}

/// The identity on `R^n`.
#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl SymOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
    fn diagonal(&self) -> Vec<f64> {
        vec![1.0; self.0]
    }
}

/// `alpha * A + beta * B` without forming the sum.
pub struct Combination<'a> {
    pub alpha: f64,
    pub a: &'a dyn SymOperator,
    pub beta: f64,
    pub b: &'a dyn SymOperator,
}

impl SymOperator for Combination<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; x.len()];
        self.a.apply(x, y);
        self.b.apply(x, &mut t);
        crate::par::for_each_chunk_mut(y, 8192, |start, s| {
            for (k, v) in s.iter_mut().enumerate() {
                *v = self.alpha * *v + self.beta * t[start + k];
            }
        });
    }
    fn diagonal(&self) -> Vec<f64> {
        let da = self.a.diagonal();
        let db = self.b.diagonal();
        da.iter().zip(&db).map(|(a, b)| self.alpha * a + self.beta * b).collect()
    }
}
