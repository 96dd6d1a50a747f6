//! Density operators on a phase-space group, their position and momentum
//! marginals, and the convolutions between phase-space functions and
//! operators.
//!
//! With the Haar convention of this crate the phase-space measure of a
//! single point is `dxi = 1/M` (`M` the point count of either side of an
//! exact group), and the convolution formulas come out with no stray
//! constants: a constant function `f = 1` convolved with an operator `A`
//! gives exactly `tr(A) * identity`, and `A * B` of two states is a
//! probability density on phase space.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{Group, Side};
use crate::linalg::eigh;
use crate::metrics::Distribution;
use crate::state::StateVector;

/// `alpha_(q,p)(A) = W(q,p) A W(q,p)^*`.
///
/// On truncated axes the translation is a compression: matrix elements
/// pushed across the cutoff are dropped.
pub fn translate_operator(
    group: &Group,
    a: &DMatrix<Complex64>,
    q: usize,
    p: usize,
) -> DMatrix<Complex64> {
    let n = group.len(Side::Position);
    let chars: Vec<Complex64> = (0..n).map(|x| group.character(p, x)).collect();
    let src: Vec<Option<usize>> = (0..n).map(|x| group.sub(Side::Position, x, q).ok()).collect();
    DMatrix::from_fn(n, n, |x, y| match (src[x], src[y]) {
        (Some(sx), Some(sy)) => chars[x] * chars[y].conj() * a[(sx, sy)],
        _ => Complex64::default(),
    })
}

/// The parity image `(beta_- A)[x, y] = A[-x, -y]`.
pub fn parity_conjugate(group: &Group, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = group.len(Side::Position);
    DMatrix::from_fn(n, n, |x, y| {
        a[(group.neg(Side::Position, x), group.neg(Side::Position, y))]
    })
}

/// `tr(A B)`.
pub fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::default();
    for x in 0..n {
        for y in 0..n {
            acc += a[(x, y)] * b[(y, x)];
        }
    }
    acc
}

/// A positive unit-trace operator in the position point basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    group: Group,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-12), unit trace (1e-12) and positivity;
    /// eigenvalue dust in `[-1e-10, 0)` is clipped to zero and the trace
    /// renormalized, anything more negative is rejected.
    pub fn new(group: Group, matrix: DMatrix<Complex64>) -> Result<DensityOperator> {
        let n = group.len(Side::Position);
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::GroupMismatch);
        }
        for x in 0..n {
            for y in 0..=x {
                if (matrix[(x, y)] - matrix[(y, x)].conj()).norm() > 1e-12 {
                    return Err(Error::InvalidOperator("not Hermitian".into()));
                }
            }
        }
        let trace: Complex64 = (0..n).map(|i| matrix[(i, i)]).sum();
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidOperator(format!(
                "trace {trace} is not 1"
            )));
        }
        let decomp = eigh(&matrix);
        if decomp.values[0] < -1e-10 {
            return Err(Error::InvalidOperator(format!(
                "negative eigenvalue {}",
                decomp.values[0]
            )));
        }
        let matrix = if decomp.values[0] < 0.0 {
            let clipped: Vec<f64> = decomp.values.iter().map(|v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let mut m = DMatrix::from_element(n, n, Complex64::default());
            for (k, lam) in clipped.iter().enumerate() {
                if *lam == 0.0 {
                    continue;
                }
                let v = decomp.vectors.column(k);
                for x in 0..n {
                    for y in 0..n {
                        m[(x, y)] += v[x] * v[y].conj() * (lam / total);
                    }
                }
            }
            m
        } else {
            matrix
        };
        Ok(DensityOperator { group, matrix })
    }

    fn from_valid(group: Group, matrix: DMatrix<Complex64>) -> DensityOperator {
        DensityOperator { group, matrix }
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn from_pure(psi: &StateVector) -> DensityOperator {
        let amps = psi.amplitudes();
        let n = amps.len();
        let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let matrix = DMatrix::from_fn(n, n, |x, y| amps[x] * amps[y].conj() / norm2);
        DensityOperator {
            group: psi.group().clone(),
            matrix,
        }
    }

    /// Convex combination of densities on the same group.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<DensityOperator> {
        let Some(((_, first), _)) = parts.split_first() else {
            return Err(Error::Invalid("empty mixture".into()));
        };
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if parts.iter().any(|(w, _)| *w < -1e-14) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid("mixture weights must be a probability vector".into()));
        }
        let n = first.matrix.nrows();
        let mut acc = DMatrix::from_element(n, n, Complex64::default());
        for (w, rho) in parts {
            if rho.group != first.group {
                return Err(Error::GroupMismatch);
            }
            acc += &rho.matrix * Complex64::new(*w, 0.0);
        }
        Ok(DensityOperator::from_valid(first.group.clone(), acc))
    }

    pub fn maximally_mixed(group: Group) -> DensityOperator {
        let n = group.len(Side::Position);
        let matrix = DMatrix::from_fn(n, n, |x, y| {
            if x == y {
                Complex64::new(1.0 / n as f64, 0.0)
            } else {
                Complex64::default()
            }
        });
        DensityOperator { group, matrix }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// `tr(rho E)` for an observable in the same basis.
    pub fn expectation(&self, obs: &DMatrix<Complex64>) -> Complex64 {
        trace_product(&self.matrix, obs)
    }

    /// `alpha_(q,p)(rho)`; on truncated axes mass past the cutoff is lost and
    /// the result's trace drops accordingly.
    pub fn translated(&self, q: usize, p: usize) -> DensityOperator {
        DensityOperator::from_valid(
            self.group.clone(),
            translate_operator(&self.group, &self.matrix, q, p),
        )
    }

    /// Diagonal in the position basis as a probability distribution on `X`.
    pub fn position_marginal(&self) -> Result<Distribution> {
        let probs: Vec<f64> = (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect();
        Distribution::from_probabilities(self.group.clone(), Side::Position, &probs)
    }

    /// Diagonal of `F rho F^*` as a probability distribution on the dual.
    pub fn momentum_marginal(&self) -> Result<Distribution> {
        let nx = self.group.len(Side::Position);
        let np = self.group.len(Side::Momentum);
        // columns of F rho, via the fast transform
        let mut f_rho = DMatrix::from_element(np, nx, Complex64::default());
        for y in 0..nx {
            let col: Vec<Complex64> = (0..nx).map(|x| self.matrix[(x, y)]).collect();
            let hat = self.group.fourier(&col)?;
            for p in 0..np {
                f_rho[(p, y)] = hat[p];
            }
        }
        let scale: f64 = self
            .group
            .axes()
            .iter()
            .map(|a| 1.0 / (a.cyclic_len() as f64).sqrt())
            .product();
        let probs: Vec<f64> = (0..np)
            .map(|p| {
                let mut acc = Complex64::default();
                for y in 0..nx {
                    // conj(F[p, y]) = scale * <p|y>
                    acc += f_rho[(p, y)] * self.group.character(p, y) * scale;
                }
                acc.re
            })
            .collect();
        Distribution::from_probabilities(self.group.clone(), Side::Momentum, &probs)
    }
}

/// A complex function on the finite phase space `X x X^`, stored row-major
/// with the position index outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceFunction {
    group: Group,
    values: Vec<Complex64>,
}

impl PhaseSpaceFunction {
    pub fn new(group: Group, values: Vec<Complex64>) -> Result<PhaseSpaceFunction> {
        if values.len() != group.len(Side::Position) * group.len(Side::Momentum) {
            return Err(Error::GroupMismatch);
        }
        Ok(PhaseSpaceFunction { group, values })
    }

    pub fn from_fn(group: Group, f: impl Fn(usize, usize) -> Complex64) -> PhaseSpaceFunction {
        let np = group.len(Side::Momentum);
        let nx = group.len(Side::Position);
        let mut values = Vec::with_capacity(nx * np);
        for q in 0..nx {
            for p in 0..np {
                values.push(f(q, p));
            }
        }
        PhaseSpaceFunction { group, values }
    }

    pub fn constant(group: Group, z: Complex64) -> PhaseSpaceFunction {
        let len = group.len(Side::Position) * group.len(Side::Momentum);
        PhaseSpaceFunction {
            group,
            values: vec![z; len],
        }
    }

    /// Point mass at `(q, p)` normalized against the phase-space cell, so
    /// that its phase-space integral is one.
    pub fn delta(group: Group, q: usize, p: usize) -> PhaseSpaceFunction {
        let np = group.len(Side::Momentum);
        let len = group.len(Side::Position) * np;
        let mut values = vec![Complex64::default(); len];
        values[q * np + p] = Complex64::new(1.0 / group.phase_cell(), 0.0);
        PhaseSpaceFunction { group, values }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, q: usize, p: usize) -> Complex64 {
        self.values[q * self.group.len(Side::Momentum) + p]
    }

    /// `sum_xi dxi f(xi)`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * Complex64::new(self.group.phase_cell(), 0.0)
    }
}

/// `f * A = sum_xi dxi f(xi) alpha_xi(A)`; preserves positivity when both
/// factors are positive.
pub fn convolve_function_operator(
    f: &PhaseSpaceFunction,
    a: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let g = f.group();
    let n = g.len(Side::Position);
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::GroupMismatch);
    }
    let np = g.len(Side::Momentum);
    let cell = Complex64::new(g.phase_cell(), 0.0);
    let mut acc = DMatrix::from_element(n, n, Complex64::default());
    for q in 0..n {
        for p in 0..np {
            let fv = f.at(q, p);
            if fv.norm_sqr() == 0.0 {
                continue;
            }
            acc += translate_operator(g, a, q, p) * (fv * cell);
        }
    }
    Ok(acc)
}

/// `(A * B)(xi) = tr(A alpha_xi(beta_- B))`, a commutative product taking two
/// states to a probability density on phase space.
pub fn convolve_operator_operator(
    group: &Group,
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<PhaseSpaceFunction> {
    let n = group.len(Side::Position);
    if a.nrows() != n || b.nrows() != n || a.ncols() != n || b.ncols() != n {
        return Err(Error::GroupMismatch);
    }
    let np = group.len(Side::Momentum);
    let b_flip = parity_conjugate(group, b);
    let chars: Vec<Vec<Complex64>> = (0..np)
        .map(|p| (0..n).map(|x| group.character(p, x)).collect())
        .collect();
    let mut values = Vec::with_capacity(n * np);
    for q in 0..n {
        let src: Vec<Option<usize>> =
            (0..n).map(|x| group.sub(Side::Position, x, q).ok()).collect();
        for ch in chars.iter().take(np) {
            let mut acc = Complex64::default();
            for x in 0..n {
                let Some(sx) = src[x] else { continue };
                for y in 0..n {
                    let Some(sy) = src[y] else { continue };
                    // tr(A alpha_xi(B-)) with alpha expanded elementwise
                    acc += a[(x, y)] * ch[y] * ch[x].conj() * b_flip[(sy, sx)];
                }
            }
            values.push(acc);
        }
    }
    PhaseSpaceFunction::new(group.clone(), values)
}

/// A reproducible random mixed state of the given rank.
pub fn random_density(group: &Group, rank: usize, seed: u64) -> DensityOperator {
    let n = group.len(Side::Position);
    let rank = rank.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, rank, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let m = &g * g.adjoint();
    let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
    DensityOperator::from_valid(group.clone(), m / Complex64::new(trace, 0.0))
}

/// A reproducible random normalized pure state.
pub fn random_pure_state(group: &Group, seed: u64) -> StateVector {
    let n = group.len(Side::Position);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    StateVector::new(group.clone(), amps)
        .expect("length matches by construction")
        .normalized()
        .expect("random vector is nonzero")
}
