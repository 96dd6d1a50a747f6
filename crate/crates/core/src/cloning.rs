//! Asymmetric universal cloners and phase-space covariant cloners as joint
//! position/momentum measurements.
//!
//! The universal cloner sends `phi` to `a phi (x) Omega + b Omega (x) phi`
//! with `Omega` the normalized maximally entangled vector.  Measuring a
//! basis on the first copy and another on the third yields a joint POVM
//! whose marginals are the ideal measurements mixed with white noise, so
//! its uncertainty pair `(delta |a|^2, delta |b|^2)` can be compared with
//! the sharp qudit trade-off.  The phase-space variant replaces the single
//! pair `(a, b)` with one coefficient per phase-space point and realizes
//! every covariant observable.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariant::{povm_from_generator, CovariantObservable};
use crate::error::{Error, Result};
use crate::group::{Group, Side};
use crate::metrics::{transport_distance, Distribution, MetricSpec};
use crate::operators::DensityOperator;
use crate::state::{fourier_matrix, StateVector};

const MAX_CLONE_DIM: usize = 8;

/// Amplitudes of the two-copy split; `1 = |a|^2 + |b|^2 + 2 Re(conj(a) b)/n`
/// makes the cloner an isometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClonerParams {
    pub n: usize,
    pub a: Complex64,
    pub b: Complex64,
}

impl ClonerParams {
    pub fn new(n: usize, a: Complex64, b: Complex64) -> Result<ClonerParams> {
        if !(2..=MAX_CLONE_DIM).contains(&n) {
            return Err(Error::Unsupported(format!(
                "cloner dimension {n} outside 2..={MAX_CLONE_DIM}"
            )));
        }
        let norm = a.norm_sqr() + b.norm_sqr() + 2.0 * (a.conj() * b).re / n as f64;
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "cloner amplitudes normalize to {norm}, not 1"
            )));
        }
        Ok(ClonerParams { n, a, b })
    }

    /// Real family: `a = s cos(phi)`, `b = s sin(phi)` with the scale fixed
    /// by the normalization constraint.  Angles in `(pi/2, pi)` give the
    /// opposite-sign branch where `|b|^2` exceeds 1.
    pub fn real_at_angle(n: usize, phi: f64) -> Result<ClonerParams> {
        let denom = 1.0 + (2.0 * phi).sin() / n as f64;
        if denom <= 1e-12 {
            return Err(Error::Invalid(format!("degenerate angle {phi}")));
        }
        let s = (1.0 / denom).sqrt();
        ClonerParams::new(
            n,
            Complex64::new(s * phi.cos(), 0.0),
            Complex64::new(s * phi.sin(), 0.0),
        )
    }
}

/// Normalized maximally entangled vector on two copies.
fn entangled_pair(n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); n * n];
    let s = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        v[j * n + j] = Complex64::new(s, 0.0);
    }
    v
}

/// The `n^3 x n` isometry `phi -> a phi (x) Omega + b Omega (x) phi`.
pub fn cloner_isometry(p: &ClonerParams) -> DMatrix<Complex64> {
    let n = p.n;
    let omega = entangled_pair(n);
    let mut v = DMatrix::from_element(n * n * n, n, Complex64::default());
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // phi (x) Omega places the input in the first slot
                v[(i * n * n + j * n + k, i)] += p.a * omega[j * n + k];
                // Omega (x) phi places it in the third
                v[(i * n * n + j * n + k, k)] += p.b * omega[i * n + j];
            }
        }
    }
    v
}

fn check_orthonormal_columns(u: &DMatrix<Complex64>) -> Result<()> {
    let n = u.ncols();
    if u.nrows() != n {
        return Err(Error::InvalidOperator("basis matrix not square".into()));
    }
    let gram = u.adjoint() * u;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            if (gram[(i, j)] - Complex64::new(want, 0.0)).norm() > 1e-10 {
                return Err(Error::InvalidOperator(
                    "basis columns are not orthonormal".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Joint POVM `G_{x,y} = V^* (F_x (x) 1 (x) E_y) V` for orthonormal bases
/// given as the columns of `f` and `e`; flat index `x * n + y`.
pub fn joint_povm_from_cloner(
    p: &ClonerParams,
    f: &DMatrix<Complex64>,
    e: &DMatrix<Complex64>,
) -> Result<Vec<DMatrix<Complex64>>> {
    check_orthonormal_columns(f)?;
    check_orthonormal_columns(e)?;
    let n = p.n;
    if f.nrows() != n || e.nrows() != n {
        return Err(Error::InvalidOperator("basis dimension mismatch".into()));
    }
    let v = cloner_isometry(p);
    let mut povm = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            // project slot 1 onto f_x and slot 3 onto e_y, then pull back
            let mut g = DMatrix::from_element(n, n, Complex64::default());
            for col in 0..n {
                let mut w = vec![Complex64::default(); n * n * n];
                // overlap of slot 1 with f_x and slot 3 with e_y
                for j in 0..n {
                    let mut amp = Complex64::default();
                    for i in 0..n {
                        for k in 0..n {
                            amp += f[(i, x)].conj()
                                * e[(k, y)].conj()
                                * v[(i * n * n + j * n + k, col)];
                        }
                    }
                    // re-embed the projected vector
                    for i in 0..n {
                        for k in 0..n {
                            w[i * n * n + j * n + k] += f[(i, x)] * e[(k, y)] * amp;
                        }
                    }
                }
                for row in 0..n {
                    let mut s = Complex64::default();
                    for idx in 0..n * n * n {
                        s += v[(idx, row)].conj() * w[idx];
                    }
                    g[(row, col)] = s;
                }
            }
            povm.push(g);
        }
    }
    Ok(povm)
}

/// Sum out the second outcome: the measured version of the `f` basis.
pub fn first_marginal(povm: &[DMatrix<Complex64>], n: usize, x: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(n, n, Complex64::default());
    for y in 0..n {
        m += &povm[x * n + y];
    }
    m
}

pub fn second_marginal(povm: &[DMatrix<Complex64>], n: usize, y: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(n, n, Complex64::default());
    for x in 0..n {
        m += &povm[x * n + y];
    }
    m
}

/// Worst-case discrete-metric transport distance between the measured and
/// ideal marginals, evaluated on the group's position/momentum bases.
pub fn cloner_uncertainty_pair(p: &ClonerParams, m: &MetricSpec) -> Result<(f64, f64)> {
    let g = Group::cyclic(p.n)?;
    let n = p.n;
    let position = DMatrix::identity(n, n);
    let momentum = fourier_matrix(&g).adjoint();
    let povm = joint_povm_from_cloner(p, &position, &momentum)?;

    let worst = |side: Side| -> Result<f64> {
        let mut worst = 0.0f64;
        for x in 0..n {
            let psi = match side {
                Side::Position => StateVector::point(g.clone(), x),
                Side::Momentum => {
                    let mut amps = vec![Complex64::default(); n];
                    amps[x] = Complex64::new(1.0, 0.0);
                    StateVector::from_momentum(g.clone(), amps)?
                }
            };
            let rho = DensityOperator::from_pure(&psi);
            let probs: Vec<f64> = (0..n)
                .map(|o| {
                    let marg = match side {
                        Side::Position => first_marginal(&povm, n, o),
                        Side::Momentum => second_marginal(&povm, n, o),
                    };
                    rho.expectation(&marg).re.max(0.0)
                })
                .collect();
            let out = Distribution::from_probabilities(g.clone(), side, &probs)?;
            let ideal = Distribution::point(g.clone(), side, x);
            worst = worst.max(transport_distance(&out, &ideal, m)?);
        }
        Ok(worst)
    };
    Ok((worst(Side::Momentum)?, worst(Side::Position)?))
}

/// Generator of the covariant observable realized by the cloner: the joint
/// effect at the phase-space origin, rescaled to unit trace.
pub fn covariant_from_cloner(p: &ClonerParams) -> Result<CovariantObservable> {
    let g = Group::cyclic(p.n)?;
    let n = p.n;
    let position = DMatrix::identity(n, n);
    let momentum = fourier_matrix(&g).adjoint();
    let povm = joint_povm_from_cloner(p, &position, &momentum)?;
    let rho_f = povm[0].scale(n as f64);
    let rho_f = DensityOperator::new(g, rho_f)?;
    povm_from_generator(rho_f)
}

/// Phase-space cloner from one coefficient per point: the two copies are
/// translated oppositely, `sum_(q,p) u(q,p) W(q,p) (x) W(-q,-p)`, with `u`
/// rescaled so the partial trace of `V^* V` over either slot is the
/// identity.
pub fn phase_space_cloner_matrix(g: &Group, u: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let n = g.len(Side::Position);
    let len_p = g.len(Side::Momentum);
    if u.len() != n * len_p {
        return Err(Error::Invalid(format!(
            "need {} coefficients, got {}",
            n * len_p,
            u.len()
        )));
    }
    let total: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    if total < 1e-300 {
        return Err(Error::Invalid("all cloner coefficients vanish".into()));
    }
    // partial trace of V*V equals n * sum |u|^2 times the identity
    let scale = 1.0 / (total * n as f64).sqrt();
    let mut v = DMatrix::from_element(n * n, n * n, Complex64::default());
    for q in 0..n {
        for p in 0..len_p {
            let c = u[q * len_p + p] * scale;
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let w1 = crate::state::weyl_matrix(g, q, p);
            let w2 = crate::state::weyl_matrix(
                g,
                g.neg(Side::Position, q),
                g.neg(Side::Momentum, p),
            );
            v += w1.kronecker(&w2).map(|z| z * c);
        }
    }
    Ok(v)
}

/// Build the covariant observable the phase-space cloner implements.  The
/// generator comes out of the origin effect and must match the rank-one
/// decomposition over momentum lines of the coefficients (with the
/// translation cocycle of our Weyl convention folded in); a mismatch is an
/// internal inconsistency and errors out.
pub fn phase_space_cloner(g: &Group, u: &[Complex64]) -> Result<CovariantObservable> {
    let n = g.len(Side::Position);
    let len_p = g.len(Side::Momentum);
    let v = phase_space_cloner_matrix(g, u)?;

    // origin effect: slot 1 sees the position-zero projector, slot 2 the
    // momentum-zero projector; trace out slot 1
    let f0 = StateVector::point(g.clone(), 0);
    let mut e0_amps = vec![Complex64::default(); len_p];
    e0_amps[0] = Complex64::new(1.0, 0.0);
    let e0 = StateVector::from_momentum(g.clone(), e0_amps)?;
    let proj = |s: &StateVector| {
        let a = s.amplitudes();
        DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj())
    };
    let big = v.adjoint() * proj(&f0).kronecker(&proj(&e0)) * &v;
    let mut rho = DMatrix::from_element(n, n, Complex64::default());
    for j in 0..n {
        for l in 0..n {
            let mut s = Complex64::default();
            for i in 0..n {
                s += big[(i * n + j, i * n + l)];
            }
            rho[(j, l)] = s;
        }
    }
    let tr = rho.trace().re;
    if tr <= 1e-14 {
        return Err(Error::InvalidOperator("origin effect has no weight".into()));
    }
    let rho = rho.scale(1.0 / tr);

    // rank-one reconstruction directly from the coefficients
    let total: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    let mut rebuilt = DMatrix::from_element(n, n, Complex64::default());
    for q in 0..n {
        let mut mom = vec![Complex64::default(); len_p];
        for p in 0..len_p {
            mom[p] = u[q * len_p + p].conj() * g.character(p, q).conj();
        }
        let psi = StateVector::from_momentum(g.clone(), mom)?;
        let amps = psi.amplitudes();
        for i in 0..n {
            for j in 0..n {
                rebuilt[(i, j)] += amps[i] * amps[j].conj() / total;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if (rho[(i, j)] - rebuilt[(i, j)]).norm() > 1e-10 {
                return Err(Error::InvalidOperator(format!(
                    "generator reconstruction mismatch at ({i}, {j})"
                )));
            }
        }
    }
    povm_from_generator(DensityOperator::new(g.clone(), rho)?)
}

/// Coefficients that make the phase-space cloner implement the covariant
/// observable generated by `target`: one momentum line per eigenvector,
/// weighted by its eigenvalue.
pub fn coefficients_for_target(g: &Group, target: &DensityOperator) -> Result<Vec<Complex64>> {
    let n = g.len(Side::Position);
    let len_p = g.len(Side::Momentum);
    let decomp = crate::linalg::eigh(target.matrix());
    let mut u = vec![Complex64::default(); n * len_p];
    for q in 0..n {
        // eigenvalues come out ascending; spread the large ones over q
        let k = n - 1 - q;
        let lam = decomp.values[k].max(0.0);
        if lam < 1e-15 {
            continue;
        }
        let vec = decomp.vector(k);
        let psi = StateVector::new(g.clone(), vec)?;
        let mom = psi.momentum_amplitudes();
        for p in 0..len_p {
            u[q * len_p + p] = lam.sqrt() * mom[p].conj() * g.character(p, q).conj();
        }
    }
    Ok(u)
}

/// Random unitary from the QR factorization of a complex Gaussian matrix.
pub fn random_unitary(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    // fix the column phases so the factorization is unique
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 1e-300 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}
