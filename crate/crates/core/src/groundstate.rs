//! Ground-state machinery for uncertainty trade-off curves.
//!
//! For a scenario (group, position metric with exponent `alpha`, momentum
//! metric with exponent `beta`) and a weight `t > 0`, the operator
//!
//! ```text
//! H(t) = D_P + t D_Q,   D_Q = diag d(x,0)^alpha,   D_P = F* diag d(p,0)^beta F
//! ```
//!
//! has ground energy `E(t) = min over states of dp^beta + t dq^alpha`, where
//! `dq`, `dp` are the deviations of the two marginals from zero.  Sweeping
//! `t` traces the lower boundary of the uncertainty region; the Legendre form
//! `bound(D) = max_t (E(t) - t D)` converts the sweep into a certified lower
//! bound for `dp^beta` given `dq^alpha = D`.
//!
//! Infinite exponents are handled by [`constrained_ground_state`]: the hard
//! side is restricted to a window `d(x,0) <= radius` (a Dirichlet condition)
//! and the other side's moment operator is minimized on that window.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{Group, Side};
use crate::linalg::{dense_ground, eigh, lanczos_ground, LinearOp, DENSE_LIMIT};
use crate::metrics::{
    deviation, point_distance, spread, validate_metric, Distribution, Exponent, MetricSpec,
};
use crate::state::StateVector;

/// A phase space with one metric-and-exponent pair per side.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub group: Group,
    pub metric_q: MetricSpec,
    pub metric_p: MetricSpec,
}

impl Scenario {
    pub fn new(group: Group, metric_q: MetricSpec, metric_p: MetricSpec) -> Result<Scenario> {
        validate_metric(metric_q.metric, &group, Side::Position)?;
        validate_metric(metric_p.metric, &group, Side::Momentum)?;
        Ok(Scenario {
            group,
            metric_q,
            metric_p,
        })
    }
}

/// `d(x, 0)^exponent` for every stored point of `side`.
pub fn moment_powers(group: &Group, side: Side, m: &MetricSpec) -> Result<Vec<f64>> {
    validate_metric(m.metric, group, side)?;
    let Exponent::Finite(a) = m.exponent else {
        return Err(Error::Unsupported(
            "infinite exponent is handled by the constrained solver".into(),
        ));
    };
    let zero = group.zero(side);
    Ok((0..group.len(side))
        .map(|i| point_distance(group, side, m.metric, i, zero).powf(a))
        .collect())
}

/// `H(t) = D_P + t D_Q`, stored through its diagonal pieces and applied
/// matrix-free via the fast Fourier transform.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    group: Group,
    t: f64,
    dq_pows: Vec<f64>,
    dp_pows: Vec<f64>,
}

pub fn build_hamiltonian(s: &Scenario, t: f64) -> Result<Hamiltonian> {
    if t <= 0.0 || !t.is_finite() {
        return Err(Error::Invalid(format!("weight t = {t} must be positive")));
    }
    Ok(Hamiltonian {
        group: s.group.clone(),
        t,
        dq_pows: moment_powers(&s.group, Side::Position, &s.metric_q)?,
        dp_pows: moment_powers(&s.group, Side::Momentum, &s.metric_p)?,
    })
}

impl LinearOp for Hamiltonian {
    fn dim(&self) -> usize {
        self.group.len(Side::Position)
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut hat = self.group.fourier(x).expect("dimension fixed by group");
        for (h, d) in hat.iter_mut().zip(&self.dp_pows) {
            *h *= *d;
        }
        let kinetic = self
            .group
            .fourier_adjoint(&hat)
            .expect("dimension fixed by group");
        for i in 0..x.len() {
            y[i] = kinetic[i] + x[i] * (self.t * self.dq_pows[i]);
        }
    }
}

impl Hamiltonian {
    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Upper bound on the operator norm (sum of the two diagonal maxima).
    pub fn norm_bound(&self) -> f64 {
        let dp = self.dp_pows.iter().fold(0.0f64, |m, v| m.max(*v));
        let dq = self.dq_pows.iter().fold(0.0f64, |m, v| m.max(*v));
        dp + self.t * dq
    }

    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, Complex64::default());
        let mut e = vec![Complex64::default(); n];
        let mut col = vec![Complex64::default(); n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            e[j] = Complex64::default();
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    pub fn expectation(&self, psi: &StateVector) -> f64 {
        let x = psi.amplitudes();
        let mut y = vec![Complex64::default(); x.len()];
        self.apply(x, &mut y);
        x.iter()
            .zip(&y)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>()
    }

    /// Smallest eigenpair: dense below [`DENSE_LIMIT`], Lanczos above.  The
    /// residual `|H psi - E psi|` is verified against `1e-9 * |H|`.
    pub fn ground_pair(&self, seed: u64) -> Result<(f64, StateVector)> {
        let n = self.dim();
        let (energy, vec) = if n <= DENSE_LIMIT {
            dense_ground(&self.dense())
        } else {
            lanczos_ground(self, None, 1e-12, seed)?
        };
        let mut hv = vec![Complex64::default(); n];
        self.apply(&vec, &mut hv);
        let residual: f64 = hv
            .iter()
            .zip(&vec)
            .map(|(a, b)| (a - b * energy).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale = self.norm_bound().max(1.0);
        if residual > 1e-9 * scale {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual,
            });
        }
        Ok((energy, StateVector::new(self.group.clone(), vec)?))
    }
}

/// Smallest eigenpair of an explicit Hermitian matrix with the same residual
/// guarantee as [`Hamiltonian::ground_pair`].
pub fn ground_state(h: &DMatrix<Complex64>) -> Result<(f64, Vec<Complex64>)> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::InvalidOperator("not square".into()));
    }
    let (energy, vec) = if n <= DENSE_LIMIT {
        dense_ground(h)
    } else {
        lanczos_ground(h, None, 1e-12, 7)?
    };
    let mut hv = vec![Complex64::default(); n];
    h.apply(&vec, &mut hv);
    let residual: f64 = hv
        .iter()
        .zip(&vec)
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = h.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0) * n as f64;
    if residual > 1e-9 * scale {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual,
        });
    }
    Ok((energy, vec))
}

/// One solved point of the trade-off sweep.
#[derive(Debug, Clone)]
pub struct UncertaintyPoint {
    pub t: f64,
    pub energy: f64,
    /// Deviation of the position marginal from 0 (state already centered).
    pub dq: f64,
    /// Deviation of the momentum marginal from 0.
    pub dp: f64,
    pub state: StateVector,
    /// Ground space was degenerate (gap below 1e-10); `degenerate_pairs`
    /// holds the moment pairs of the other ground vectors.
    pub degenerate: bool,
    pub degenerate_pairs: Vec<(f64, f64)>,
}

/// The sweep result: solved points plus a sampled Legendre envelope.
#[derive(Debug, Clone)]
pub struct UncertaintyRegion {
    pub points: Vec<UncertaintyPoint>,
    /// Samples `(D, bound(D))` of the convex, non-increasing lower boundary.
    pub envelope: Vec<(f64, f64)>,
}

impl UncertaintyRegion {
    /// `bound(D) = max_t (E(t) - t D)`, clamped at zero; evaluated exactly
    /// from the solved points.
    pub fn bound(&self, delta: f64) -> f64 {
        self.points
            .iter()
            .map(|p| p.energy - p.t * delta)
            .fold(0.0, f64::max)
    }
}

/// Logarithmic default grid: 64 weights spanning `[1e-3, 1e3]`.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 64)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Probability marginals of a pure state as distributions.
pub fn state_marginals(psi: &StateVector) -> Result<(Distribution, Distribution)> {
    let g = psi.group().clone();
    let mq = Distribution::from_probabilities(g.clone(), Side::Position, &psi.position_probabilities())?;
    let mp = Distribution::from_probabilities(g, Side::Momentum, &psi.momentum_probabilities())?;
    Ok((mq, mp))
}

/// Translate `psi` so both spread minimizers sit at 0.  On truncated models
/// the shift may push negligible tail mass over the cutoff; the result is
/// renormalized.
pub fn center_state(s: &Scenario, psi: &StateVector) -> Result<StateVector> {
    let (mq, mp) = state_marginals(psi)?;
    let x_star = spread(&mq, &s.metric_q)?.minimizer;
    let p_star = spread(&mp, &s.metric_p)?.minimizer;
    let g = psi.group();
    let shifted = psi.weyl(
        g.neg(Side::Position, x_star),
        g.neg(Side::Momentum, p_star),
    );
    shifted.normalized()
}

/// Deviations from zero of the two marginals of a (centered) state.
pub fn centered_moments(s: &Scenario, psi: &StateVector) -> Result<(f64, f64)> {
    let (mq, mp) = state_marginals(psi)?;
    let dq = deviation(&mq, s.group.zero(Side::Position), &s.metric_q)?;
    let dp = deviation(&mp, s.group.zero(Side::Momentum), &s.metric_p)?;
    Ok((dq, dp))
}

/// Solve the ground state for every `t`, center each state, record its
/// moment pair, and build the Legendre envelope.
pub fn sweep_tradeoff(s: &Scenario, t_grid: &[f64]) -> Result<UncertaintyRegion> {
    if t_grid.is_empty() {
        return Err(Error::Invalid("empty t grid".into()));
    }
    let mut ts: Vec<f64> = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(ts.len());
    for (k, &t) in ts.iter().enumerate() {
        let h = build_hamiltonian(s, t)?;
        let n = h.dim();
        let (energy, raw, degenerate, degenerate_pairs) = if n <= DENSE_LIMIT {
            let decomp = eigh(&h.dense());
            let energy = decomp.values[0];
            let mut pairs = Vec::new();
            let mut idx = 1;
            while idx < n && decomp.values[idx] - energy < 1e-10 {
                let v = StateVector::new(s.group.clone(), decomp.vector(idx))?;
                let centered = center_state(s, &v)?;
                let (dq, dp) = centered_moments(s, &centered)?;
                pairs.push((dq, dp));
                idx += 1;
            }
            let state = StateVector::new(s.group.clone(), decomp.vector(0))?;
            (energy, state, !pairs.is_empty(), pairs)
        } else {
            let (energy, vec) = h.ground_pair(1000 + k as u64)?;
            (energy, vec, false, Vec::new())
        };
        let state = center_state(s, &raw)?;
        let (dq, dp) = centered_moments(s, &state)?;
        points.push(UncertaintyPoint {
            t,
            energy,
            dq,
            dp,
            state,
            degenerate,
            degenerate_pairs,
        });
    }

    let alpha = match s.metric_q.exponent {
        Exponent::Finite(a) => a,
        Exponent::Infinity => unreachable!("rejected by build_hamiltonian"),
    };
    let dmax = points
        .iter()
        .map(|p| p.dq.powf(alpha))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let samples = 129;
    let envelope: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let delta = dmax * 1.05 * i as f64 / (samples - 1) as f64;
            let bound = points
                .iter()
                .map(|p| p.energy - p.t * delta)
                .fold(0.0, f64::max);
            (delta, bound)
        })
        .collect();
    Ok(UncertaintyRegion { points, envelope })
}

/// Restricted moment operator used by the constrained solver: project onto a
/// window on one side, apply the other side's diagonal moment through the
/// Fourier transform.
struct WindowedMomentOp<'a> {
    group: &'a Group,
    window: &'a [usize],
    pows: &'a [f64],
    /// Side the window lives on.
    hard: Side,
}

impl LinearOp for WindowedMomentOp<'_> {
    fn dim(&self) -> usize {
        self.window.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let full_len = self.group.len(self.hard);
        let mut full = vec![Complex64::default(); full_len];
        for (k, &idx) in self.window.iter().enumerate() {
            full[idx] = x[k];
        }
        let transformed = match self.hard {
            Side::Position => self.group.fourier(&full),
            Side::Momentum => self.group.fourier_adjoint(&full),
        }
        .expect("window indices are within the group");
        let weighted: Vec<Complex64> = transformed
            .iter()
            .zip(self.pows)
            .map(|(z, d)| z * *d)
            .collect();
        let back = match self.hard {
            Side::Position => self.group.fourier_adjoint(&weighted),
            Side::Momentum => self.group.fourier(&weighted),
        }
        .expect("window indices are within the group");
        for (k, &idx) in self.window.iter().enumerate() {
            y[k] = back[idx];
        }
    }
}

/// Ground pair of the soft side's moment operator with the hard side
/// restricted to `d(x, 0) <= radius` (Dirichlet window).  The hard side's
/// exponent must be infinite; the returned state lives on the full group
/// with support in the window.
pub fn constrained_ground_state(
    s: &Scenario,
    hard_side: Side,
    radius: f64,
) -> Result<(f64, StateVector)> {
    let (hard_metric, soft_metric) = match hard_side {
        Side::Position => (&s.metric_q, &s.metric_p),
        Side::Momentum => (&s.metric_p, &s.metric_q),
    };
    if hard_metric.exponent != Exponent::Infinity {
        return Err(Error::Unsupported(
            "constrained solver needs an infinite exponent on the hard side".into(),
        ));
    }
    let g = &s.group;
    let zero = g.zero(hard_side);
    let window: Vec<usize> = (0..g.len(hard_side))
        .filter(|&i| point_distance(g, hard_side, hard_metric.metric, i, zero) <= radius + 1e-12)
        .collect();
    if window.is_empty() {
        return Err(Error::Invalid(format!(
            "no points within radius {radius}"
        )));
    }
    let soft_side = hard_side.other();
    let pows = moment_powers(g, soft_side, soft_metric)?;
    let op = WindowedMomentOp {
        group: g,
        window: &window,
        pows: &pows,
        hard: hard_side,
    };
    let m = window.len();
    let (energy, coeffs) = if m <= DENSE_LIMIT {
        let mut h = DMatrix::from_element(m, m, Complex64::default());
        let mut e = vec![Complex64::default(); m];
        let mut col = vec![Complex64::default(); m];
        for j in 0..m {
            e[j] = Complex64::new(1.0, 0.0);
            op.apply(&e, &mut col);
            e[j] = Complex64::default();
            for i in 0..m {
                h[(i, j)] = col[i];
            }
        }
        dense_ground(&h)
    } else {
        lanczos_ground(&op, None, 1e-12, 2024)?
    };

    let mut full = vec![Complex64::default(); g.len(hard_side)];
    for (k, &idx) in window.iter().enumerate() {
        full[idx] = coeffs[k];
    }
    let state = match hard_side {
        Side::Position => StateVector::new(g.clone(), full)?,
        Side::Momentum => StateVector::from_momentum(g.clone(), full)?,
    };
    Ok((energy, state.normalized()?))
}

/// A constrained sweep point: hard-side radius against the soft side's
/// ground moment.
#[derive(Debug, Clone)]
pub struct ConstrainedPoint {
    pub radius: f64,
    pub energy: f64,
    pub dq: f64,
    pub dp: f64,
    pub state: StateVector,
}

/// Radius sweep for scenarios with an infinite exponent on `hard_side`; the
/// analogue of [`sweep_tradeoff`] in the slit geometry.
pub fn sweep_constrained_tradeoff(
    s: &Scenario,
    hard_side: Side,
    radii: &[f64],
) -> Result<Vec<ConstrainedPoint>> {
    if radii.is_empty() {
        return Err(Error::Invalid("empty radius grid".into()));
    }
    let mut rs: Vec<f64> = radii.to_vec();
    rs.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(rs.len());
    for &radius in &rs {
        let (energy, state) = constrained_ground_state(s, hard_side, radius)?;
        let (mq, mp) = state_marginals(&state)?;
        let dq = deviation(&mq, s.group.zero(Side::Position), &s.metric_q)?;
        let dp = deviation(&mp, s.group.zero(Side::Momentum), &s.metric_p)?;
        out.push(ConstrainedPoint {
            radius,
            energy,
            dq,
            dp,
            state,
        });
    }
    Ok(out)
}
