//! Eigensolvers shared by the ground-state and cloning modules.
//!
//! Three tiers: dense Hermitian diagonalization (with a fast path for
//! matrices that are numerically real), restarted Lanczos with full
//! reorthogonalization for large matrix-free operators, and Sturm-sequence
//! bisection for the smallest eigenvalue of a symmetric tridiagonal matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest dimension the ground-state solvers diagonalize densely before
/// switching to Lanczos.
pub const DENSE_LIMIT: usize = 1024;

/// A Hermitian operator given by its action on a vector.
pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

impl LinearOp for DMatrix<Complex64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for j in 0..n {
                acc += self[(i, j)] * x[j];
            }
            *yi = acc;
        }
    }
}

/// Full Hermitian eigendecomposition, eigenvalues ascending.
pub struct Eigh {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DMatrix<Complex64>,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

/// Dense Hermitian eigendecomposition.  Matrices whose imaginary parts are
/// at rounding level are routed through the real symmetric solver, which is
/// several times faster.
pub fn eigh(h: &DMatrix<Complex64>) -> Eigh {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "eigh needs a square matrix");
    let scale = h.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
    let real = h.iter().all(|z| z.im.abs() <= 1e-13 * scale);
    let (mut values, vectors): (Vec<f64>, DMatrix<Complex64>) = if real {
        let hr = DMatrix::from_fn(n, n, |i, j| h[(i, j)].re);
        let se = hr.symmetric_eigen();
        let vc = DMatrix::from_fn(n, n, |i, j| Complex64::new(se.eigenvectors[(i, j)], 0.0));
        (se.eigenvalues.iter().copied().collect(), vc)
    } else {
        let se = h.clone().symmetric_eigen();
        (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_vectors = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    values.sort_by(f64::total_cmp);
    Eigh {
        values,
        vectors: sorted_vectors,
    }
}

/// Ground eigenpair of a dense Hermitian matrix.
pub fn dense_ground(h: &DMatrix<Complex64>) -> (f64, Vec<Complex64>) {
    let e = eigh(h);
    (e.values[0], e.vector(0))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Ground eigenpair via restarted Lanczos with full reorthogonalization.
///
/// Deterministic for a fixed `seed`; `start`, when given, overrides the
/// seeded random start vector.
pub fn lanczos_ground(
    op: &dyn LinearOp,
    start: Option<&[Complex64]>,
    tol: f64,
    seed: u64,
) -> Result<(f64, Vec<Complex64>)> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Invalid("empty operator".into()));
    }
    if n == 1 {
        let mut y = [Complex64::default()];
        op.apply(&[Complex64::new(1.0, 0.0)], &mut y);
        return Ok((y[0].re, vec![Complex64::new(1.0, 0.0)]));
    }

    let mut v0: Vec<Complex64> = match start {
        Some(s) if s.len() == n && norm(s) > 0.0 => s.to_vec(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect()
        }
    };
    let s = norm(&v0);
    v0.iter_mut().for_each(|z| *z /= s);

    let max_basis = n.min(160);
    let max_restarts = 400;
    let mut last_residual = f64::INFINITY;

    for _ in 0..max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![v0.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![Complex64::default(); n];
        let mut exhausted = false;

        while basis.len() <= max_basis {
            let v = basis.last().unwrap();
            op.apply(v, &mut w);
            alphas.push(dot(v, &w).re);
            // two-pass Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
            let beta = norm(&w);
            let scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1.0);
            if beta <= 1e-14 * scale {
                exhausted = true;
                break;
            }
            if basis.len() == max_basis {
                betas.push(beta);
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|z| z / beta).collect());
        }

        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if j == i + 1 || i == j + 1 {
                betas[i.min(j)]
            } else {
                0.0
            }
        });
        let se = t.symmetric_eigen();
        let mut kmin = 0;
        for k in 1..m {
            if se.eigenvalues[k] < se.eigenvalues[kmin] {
                kmin = k;
            }
        }
        let theta = se.eigenvalues[kmin];
        let y = se.eigenvectors.column(kmin);

        let mut ritz = vec![Complex64::default(); n];
        for (j, b) in basis.iter().enumerate().take(m) {
            let c = y[j];
            for (ri, bi) in ritz.iter_mut().zip(b) {
                *ri += bi * c;
            }
        }
        let rn = norm(&ritz);
        ritz.iter_mut().for_each(|z| *z /= rn);

        let tnorm = alphas
            .iter()
            .fold(0.0f64, |mx, a| mx.max(a.abs()))
            .max(betas.iter().fold(0.0f64, |mx, b| mx.max(*b)))
            .max(1.0);
        let residual = if exhausted || m == betas.len() + 1 {
            // Krylov space closed on itself: the Ritz pair is exact.
            0.0
        } else {
            (betas[m - 1] * y[m - 1]).abs()
        };
        last_residual = residual;
        if residual <= tol * tnorm {
            return Ok((theta, ritz));
        }
        v0 = ritz;
    }
    Err(Error::NoConvergence {
        iterations: max_restarts,
        residual: last_residual,
    })
}

/// Ground eigenpair, dense below [`DENSE_LIMIT`] and Lanczos above.
pub fn ground_state_of(op: &dyn LinearOp, dense: Option<&DMatrix<Complex64>>, seed: u64) -> Result<(f64, Vec<Complex64>)> {
    match dense {
        Some(h) if h.nrows() <= DENSE_LIMIT => Ok(dense_ground(h)),
        _ => lanczos_ground(op, None, 1e-13, seed),
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(diag, off)` strictly
/// below `x`, by the Sturm sequence of its LDL factorization.
fn tridiag_count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for (i, &a) in diag.iter().enumerate() {
        let mut di = a - x;
        if i > 0 {
            di -= off[i - 1] * off[i - 1] / d;
        }
        if di == 0.0 {
            di = -f64::MIN_POSITIVE;
        }
        if di < 0.0 {
            count += 1;
        }
        d = di;
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by bisection on the
/// Sturm count.  Robust for very large matrices where dense decomposition is
/// out of reach.
pub fn tridiag_smallest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    assert!(!diag.is_empty());
    assert_eq!(off.len() + 1, diag.len());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i < off.len() {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tridiag_count_below(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
