use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Side};

use super::SymOperator;
use crate::error::{Error, Result};

/// Dense symmetric matrix as an operator.
#[derive(Clone, Debug)]
pub struct DenseSym(pub Mat<f64>);

impl SymOperator for DenseSym {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.0.nrows();
        crate::par::for_each_chunk_mut(y, 64, |start, out| {
            for (k, yi) in out.iter_mut().enumerate() {
                let i = start + k;
                let mut acc = 0.0;
                for j in 0..n {
                    acc += self.0[(i, j)] * x[j];
                }
                *yi = acc;
            }
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.0.nrows()).map(|i| self.0[(i, i)]).collect()
    }
}

fn sorted_eigen(c: &Mat<f64>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<f64>>)> {
    if vectors {
        let evd = c
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let n = c.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        let values = order.iter().map(|&i| s[i]).collect();
        let u = evd.U();
        let vecs = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
        Ok((values, Some(vecs)))
    } else {
        let mut values = c
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("eigenvalues failed: {e:?}")))?;
        values.sort_by(f64::total_cmp);
        Ok((values, None))
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let sym = Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let (v, u) = sorted_eigen(&sym, true)?;
    Ok((v, u.expect("vectors requested")))
}

fn reduce(a: &Mat<f64>, b: &Mat<f64>) -> Result<(Mat<f64>, Mat<f64>)> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Mismatch { expected: n, got: b.nrows() });
    }
    let llt = b
        .llt(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("B is not positive definite: {e:?}")))?;
    let l = llt.L().to_owned();
    let mut x = a.clone();
    solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l.as_ref(), c.as_mut(), Par::Seq);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    Ok((c, l))
}

/// Eigenvalues of the symmetric-definite pencil `A u = λ B u`, ascending.
pub fn generalized_eigenvalues(a: &Mat<f64>, b: &Mat<f64>) -> Result<Vec<f64>> {
    let (c, _) = reduce(a, b)?;
    Ok(sorted_eigen(&c, false)?.0)
}

/// Eigenpairs of `A u = λ B u`; the columns of the returned matrix are B-orthonormal.
pub fn generalized_eigen(a: &Mat<f64>, b: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let (c, l) = reduce(a, b)?;
    let (values, z) = sorted_eigen(&c, true)?;
    let mut z = z.expect("vectors requested");
    solve_upper_triangular_in_place(l.transpose(), z.as_mut(), Par::Seq);
    Ok((values, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencil_with_diagonal_b() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { [2.0, 6.0, 12.0][i] } else { 0.0 });
        let b = Mat::from_fn(3, 3, |i, j| if i == j { [1.0, 2.0, 3.0][i] } else { 0.0 });
        let ev = generalized_eigenvalues(&a, &b).unwrap();
        for (x, y) in ev.iter().zip([2.0, 3.0, 4.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn vectors_are_b_orthonormal() {
        let n = 6;
        let a = Mat::from_fn(n, n, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let b = Mat::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 } else if i.abs_diff(j) == 1 { 0.3 } else { 0.0 });
        let (vals, v) = generalized_eigen(&a, &b).unwrap();
        let btv = &b * &v;
        let gram = v.transpose() * &btv;
        let av = &a * &v;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() < 1e-10);
            }
            for r in 0..n {
                assert!((av[(r, i)] - vals[i] * btv[(r, i)]).abs() < 1e-10);
            }
        }
    }
}
