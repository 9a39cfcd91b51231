//! Block locally optimal preconditioned conjugate gradient (LOBPCG) for the
//! lowest eigenpairs of a symmetric-definite pencil `A u = λ B u`.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{generalized_eigen, symmetric_eigen, Identity, SymOperator};
use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Debug)]
pub struct LobpcgOptions {
    /// Block size; `None` means `2k`.
    pub block: Option<usize>,
    /// Residual tolerance `‖Au − λBu‖ / (‖Bu‖ max(1, |λ|))`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Restarts with an enlarged block after stagnation.
    pub max_restarts: usize,
    /// Below this dimension the pencil is solved densely.
    pub dense_below: usize,
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        Self { block: None, tol: 1e-6, max_iter: 3000, seed: 0x5eed_2b0d, max_restarts: 2, dense_below: 400 }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub block: usize,
    pub seed: u64,
}

type Block = Vec<Vec<f64>>;

fn apply_block(op: &dyn SymOperator, x: &Block) -> Block {
    x.iter()
        .map(|c| {
            let mut y = vec![0.0; c.len()];
            op.apply(c, &mut y);
            y
        })
        .collect()
}

/// Columns of `cols * coef` (coef has `cols.len()` rows).
fn combine(cols: &[&Vec<f64>], coef: &Mat<f64>) -> Block {
    let n = cols.first().map_or(0, |c| c.len());
    let m = coef.ncols();
    let mut out = vec![vec![0.0; n]; m];
    for (j, o) in out.iter_mut().enumerate() {
        par::for_each_chunk_mut(o, 4096, |start, s| {
            for (i, c) in cols.iter().enumerate() {
                let w = coef[(i, j)];
                if w == 0.0 {
                    continue;
                }
                for (k, v) in s.iter_mut().enumerate() {
                    *v += w * c[start + k];
                }
            }
        });
    }
    out
}

fn gram(x: &[&Vec<f64>], y: &[&Vec<f64>]) -> Mat<f64> {
    let mut g = Mat::zeros(x.len(), y.len());
    for i in 0..x.len() {
        for j in 0..y.len() {
            g[(i, j)] = par::dot(x[i], y[j]);
        }
    }
    g
}

fn symmetrize(g: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(g.nrows(), g.ncols(), |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
}

/// Basis change `Q` such that `Qᵀ G Q = I` on the numerically non-degenerate
/// subspace of the Gram matrix `G`.
fn svqb(g: &Mat<f64>) -> Result<Mat<f64>> {
    let n = g.nrows();
    let d: Vec<f64> = (0..n).map(|i| 1.0 / g[(i, i)].max(1e-300).sqrt()).collect();
    let scaled = Mat::from_fn(n, n, |i, j| d[i] * g[(i, j)] * d[j]);
    let (theta, v) = symmetric_eigen(&scaled)?;
    let top = theta.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..n).filter(|&i| theta[i] > 1e-12 * top).collect();
    if keep.is_empty() {
        return Err(Error::LinearAlgebra("basis collapsed".into()));
    }
    Ok(Mat::from_fn(n, keep.len(), |i, j| d[i] * v[(i, keep[j])] / theta[keep[j]].sqrt()))
}

fn dense_fallback(a: &dyn SymOperator, b: &dyn SymOperator, k: usize, seed: u64) -> Result<Eigenpairs> {
    let n = a.dim();
    let mut am = Mat::zeros(n, n);
    let mut bm = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        a.apply(&e, &mut col);
        for i in 0..n {
            am[(i, j)] = col[i];
        }
        b.apply(&e, &mut col);
        for i in 0..n {
            bm[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    let (vals, vecs) = generalized_eigen(&symmetrize(&am), &symmetrize(&bm))?;
    let k = k.min(n);
    Ok(Eigenpairs {
        values: vals[..k].to_vec(),
        vectors: (0..k).map(|j| (0..n).map(|i| vecs[(i, j)]).collect()).collect(),
        residuals: vec![0.0; k],
        iterations: 0,
        block: n,
        seed,
    })
}

/// Lowest `k` eigenpairs of `A u = λ B u` (`B = I` when `None`).
///
/// `precond` is a diagonal approximation of `A⁻¹`; Jacobi scaling of `A` is
/// used when absent.
pub fn lobpcg(
    a: &dyn SymOperator,
    b: Option<&dyn SymOperator>,
    precond: Option<&[f64]>,
    k: usize,
    opts: &LobpcgOptions,
) -> Result<Eigenpairs> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a {n}-dimensional pencil")));
    }
    let ident = Identity(n);
    let b: &dyn SymOperator = b.unwrap_or(&ident);
    if b.dim() != n {
        return Err(Error::Mismatch { expected: n, got: b.dim() });
    }
    let mut block = opts.block.unwrap_or(2 * k).max(k);
    if n <= opts.dense_below || 3 * block >= n {
        return dense_fallback(a, b, k, opts.seed);
    }
    let t: Vec<f64> = match precond {
        Some(p) => p.to_vec(),
        None => a.diagonal().iter().map(|&d| if d.abs() > 0.0 { 1.0 / d.abs() } else { 1.0 }).collect(),
    };

    let mut last_err = None;
    for attempt in 0..=opts.max_restarts {
        match lobpcg_run(a, b, &t, k, block, opts, attempt as u64) {
            Ok(r) => return Ok(r),
            Err(e) => {
                last_err = Some(e);
                block += k.max(2);
                if 3 * block >= n {
                    return dense_fallback(a, b, k, opts.seed);
                }
            }
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn lobpcg_run(
    a: &dyn SymOperator,
    b: &dyn SymOperator,
    t: &[f64],
    k: usize,
    m: usize,
    opts: &LobpcgOptions,
    attempt: u64,
) -> Result<Eigenpairs> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt));
    let x0: Block = (0..m).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();

    // Rayleigh–Ritz on the initial block.
    let ax0 = apply_block(a, &x0);
    let bx0 = apply_block(b, &x0);
    let refs: Vec<&Vec<f64>> = x0.iter().collect();
    let q = svqb(&symmetrize(&gram(&refs, &bx0.iter().collect::<Vec<_>>())))?;
    let ga = symmetrize(&(q.transpose() * gram(&refs, &ax0.iter().collect::<Vec<_>>()) * &q));
    let (mut lambda, y) = symmetric_eigen(&ga)?;
    let c = &q * &y;
    let c = Mat::from_fn(c.nrows(), m.min(c.ncols()), |i, j| c[(i, j)]);
    lambda.truncate(c.ncols());
    let mut x = combine(&refs, &c);
    let mut ax = combine(&ax0.iter().collect::<Vec<_>>(), &c);
    let mut bx = combine(&bx0.iter().collect::<Vec<_>>(), &c);
    let mut p: Block = Vec::new();
    let mut ap: Block = Vec::new();
    let mut bp: Block = Vec::new();
    let mut residuals = vec![f64::INFINITY; x.len()];

    for it in 0..opts.max_iter {
        if it > 0 && it % 25 == 0 {
            ax = apply_block(a, &x);
            bx = apply_block(b, &x);
        }
        // residuals
        let mut r: Block = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let rj: Vec<f64> = ax[j].iter().zip(&bx[j]).map(|(u, v)| u - lambda[j] * v).collect();
            let norm_b = par::dot(&bx[j], &bx[j]).sqrt();
            residuals[j] = par::dot(&rj, &rj).sqrt() / (norm_b * lambda[j].abs().max(1.0)).max(1e-300);
            r.push(rj);
        }
        if residuals[..k].iter().all(|&res| res <= opts.tol) {
            return Ok(Eigenpairs {
                values: lambda[..k].to_vec(),
                vectors: x[..k].to_vec(),
                residuals: residuals[..k].to_vec(),
                iterations: it,
                block: m,
                seed: opts.seed.wrapping_add(attempt),
            });
        }
        let active: Vec<usize> = (0..x.len()).filter(|&j| residuals[j] > opts.tol).collect();
        let w: Block = active
            .iter()
            .map(|&j| r[j].iter().zip(t).map(|(ri, ti)| ri * ti).collect())
            .collect();
        let aw = apply_block(a, &w);
        let bw = apply_block(b, &w);

        let mut s: Vec<&Vec<f64>> = x.iter().collect();
        s.extend(w.iter());
        s.extend(p.iter());
        let mut as_: Vec<&Vec<f64>> = ax.iter().collect();
        as_.extend(aw.iter());
        as_.extend(ap.iter());
        let mut bs: Vec<&Vec<f64>> = bx.iter().collect();
        bs.extend(bw.iter());
        bs.extend(bp.iter());

        let q = match svqb(&symmetrize(&gram(&s, &bs))) {
            Ok(q) => q,
            Err(_) => {
                // drop the search directions and retry with [X, W]
                p.clear();
                ap.clear();
                bp.clear();
                continue;
            }
        };
        let ga = symmetrize(&(q.transpose() * gram(&s, &as_) * &q));
        let (mu, y) = symmetric_eigen(&ga)?;
        let take = m.min(mu.len());
        let full = &q * &y;
        let c = Mat::from_fn(full.nrows(), take, |i, j| full[(i, j)]);
        let nx = x.len();
        let cp = Mat::from_fn(full.nrows(), take, |i, j| if i < nx { 0.0 } else { full[(i, j)] });

        let new_p = combine(&s, &cp);
        let new_ap = combine(&as_, &cp);
        let new_bp = combine(&bs, &cp);
        x = combine(&s, &c);
        ax = combine(&as_, &c);
        bx = combine(&bs, &c);
        lambda = mu[..take].to_vec();
        residuals.resize(take, f64::INFINITY);
        p = new_p;
        ap = new_ap;
        bp = new_bp;
    }
    let worst = residuals[..k.min(residuals.len())].iter().cloned().fold(0.0, f64::max);
    Err(Error::NonConvergence { iterations: opts.max_iter, residual: worst })
}
