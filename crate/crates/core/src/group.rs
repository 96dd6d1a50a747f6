//! Finite and discretized models of locally compact abelian groups paired
//! with their duals.
//!
//! A [`Group`] describes a phase space `X x X^` through a list of axes.  Each
//! axis stores both the position side and the momentum (dual) side of one
//! factor:
//!
//! * `Cyclic { order: d }`: `Z_d` with `Z_d` dual, character
//!   `<p|x> = exp(2 pi i p x / d)`.
//! * `TruncatedIntegers { n_max: N, dual_len: M }`: the integers restricted
//!   to `[-N, N]`, dual discretized to `M >= 2N+1` points on the circle,
//!   character `<theta|x> = exp(i theta x)`.  Position addition is partial:
//!   sums that leave the range report [`Error::OutOfRange`].
//! * `DiscretizedCircle { len: M }`: angles `2 pi j / M` with integer dual
//!   stored on centered representatives, character `<k|theta> = exp(i k theta)`.
//! * `DiscretizedLine { len: N, half_width: L }`: grid of spacing `2L/N` on
//!   `[-L, L)`, dual grid of spacing `pi/L`, character `exp(i p x)`.  Both
//!   sides wrap periodically; states must keep their tails away from the
//!   boundary for the model to represent the real line faithfully.
//!
//! Amplitude vectors are stored as coefficients in the orthonormal point
//! basis, so the Fourier transform of this module is a plain unitary
//! (an isometry for oversampled truncated-integer duals).  Haar weights are
//! carried as metadata: the probability of a point is `weight * density`,
//! and the per-point phase-space measure is [`Group::phase_cell`].

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Which side of the phase space an object lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Position,
    Momentum,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Position => Side::Momentum,
            Side::Momentum => Side::Position,
        }
    }
}

/// One factor of a phase space; see the module docs for the catalogue.
#[derive(Debug, Clone, PartialEq)]
pub enum AxisKind {
    Cyclic { order: usize },
    TruncatedIntegers { n_max: i64, dual_len: usize },
    DiscretizedCircle { len: usize },
    DiscretizedLine { len: usize, half_width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
}

impl Axis {
    /// Number of stored points on `side`.
    pub fn len(&self, side: Side) -> usize {
        match (&self.kind, side) {
            (AxisKind::Cyclic { order }, _) => *order,
            (AxisKind::TruncatedIntegers { n_max, .. }, Side::Position) => {
                (2 * *n_max + 1) as usize
            }
            (AxisKind::TruncatedIntegers { dual_len, .. }, Side::Momentum) => *dual_len,
            (AxisKind::DiscretizedCircle { len }, _) => *len,
            (AxisKind::DiscretizedLine { len, .. }, _) => *len,
        }
    }

    /// Size of the underlying cyclic index group carrying the characters.
    pub fn cyclic_len(&self) -> usize {
        match &self.kind {
            AxisKind::Cyclic { order } => *order,
            AxisKind::TruncatedIntegers { dual_len, .. } => *dual_len,
            AxisKind::DiscretizedCircle { len } => *len,
            AxisKind::DiscretizedLine { len, .. } => *len,
        }
    }

    /// Haar weight of a point on `side`.
    ///
    /// Counting measure on discrete kinds, `2L/N` on the line, `2 pi / M` on
    /// the circle; each dual weight is fixed by `w * w_dual * cyclic_len = 1`,
    /// which is exactly the condition making the Fourier transform unitary.
    pub fn weight(&self, side: Side) -> f64 {
        let m = self.cyclic_len() as f64;
        let position = match &self.kind {
            AxisKind::Cyclic { .. } | AxisKind::TruncatedIntegers { .. } => 1.0,
            AxisKind::DiscretizedCircle { len } => std::f64::consts::TAU / *len as f64,
            AxisKind::DiscretizedLine { len, half_width } => 2.0 * half_width / *len as f64,
        };
        match side {
            Side::Position => position,
            Side::Momentum => 1.0 / (position * m),
        }
    }

    /// Numeric label of point `idx`: the integer for discrete kinds, the
    /// angle in `[0, 2 pi)` on the circle, the coordinate on the line.
    pub fn value(&self, side: Side, idx: usize) -> f64 {
        debug_assert!(idx < self.len(side));
        match (&self.kind, side) {
            (AxisKind::Cyclic { .. }, _) => idx as f64,
            (AxisKind::TruncatedIntegers { n_max, .. }, Side::Position) => {
                idx as f64 - *n_max as f64
            }
            (AxisKind::TruncatedIntegers { dual_len, .. }, Side::Momentum) => {
                std::f64::consts::TAU * idx as f64 / *dual_len as f64
            }
            (AxisKind::DiscretizedCircle { len }, Side::Position) => {
                std::f64::consts::TAU * idx as f64 / *len as f64
            }
            (AxisKind::DiscretizedCircle { len }, Side::Momentum) => {
                (idx as i64 - (*len as i64) / 2) as f64
            }
            (AxisKind::DiscretizedLine { len, half_width }, Side::Position) => {
                (idx as i64 - (*len as i64) / 2) as f64 * (2.0 * half_width / *len as f64)
            }
            (AxisKind::DiscretizedLine { len, half_width }, Side::Momentum) => {
                (idx as i64 - (*len as i64) / 2) as f64 * (std::f64::consts::PI / half_width)
            }
        }
    }

    /// Index of the zero element on `side`.
    pub fn zero(&self, side: Side) -> usize {
        match (&self.kind, side) {
            (AxisKind::Cyclic { .. }, _) => 0,
            (AxisKind::TruncatedIntegers { n_max, .. }, Side::Position) => *n_max as usize,
            (AxisKind::TruncatedIntegers { .. }, Side::Momentum) => 0,
            (AxisKind::DiscretizedCircle { .. }, Side::Position) => 0,
            (AxisKind::DiscretizedCircle { len }, Side::Momentum) => len / 2,
            (AxisKind::DiscretizedLine { len, .. }, _) => len / 2,
        }
    }

    /// Integer label in the underlying `Z_M` used by characters and the DFT.
    fn dft_label(&self, side: Side, idx: usize) -> i64 {
        match (&self.kind, side) {
            (AxisKind::Cyclic { .. }, _) => idx as i64,
            (AxisKind::TruncatedIntegers { n_max, .. }, Side::Position) => idx as i64 - n_max,
            (AxisKind::TruncatedIntegers { .. }, Side::Momentum) => idx as i64,
            (AxisKind::DiscretizedCircle { .. }, Side::Position) => idx as i64,
            (AxisKind::DiscretizedCircle { len }, Side::Momentum) => idx as i64 - (*len as i64) / 2,
            (AxisKind::DiscretizedLine { len, .. }, _) => idx as i64 - (*len as i64) / 2,
        }
    }

    /// Group addition on `side`; `None` when the sum leaves a truncated range.
    ///
    /// Works on the integer labels, so centered storage (circle duals, line
    /// grids) wraps where the labels wrap, not where the indices do.
    pub fn add(&self, side: Side, i: usize, j: usize) -> Option<usize> {
        match (&self.kind, side) {
            (AxisKind::TruncatedIntegers { n_max, .. }, Side::Position) => {
                let v = (i as i64 - n_max) + (j as i64 - n_max);
                if v.abs() <= *n_max {
                    Some((v + n_max) as usize)
                } else {
                    None
                }
            }
            _ => Some(self.wrap_label(side, self.dft_label(side, i) + self.dft_label(side, j))),
        }
    }

    /// Group negation on `side` (total for every stored kind).
    pub fn neg(&self, side: Side, i: usize) -> usize {
        match (&self.kind, side) {
            (AxisKind::TruncatedIntegers { n_max, .. }, Side::Position) => {
                (2 * *n_max) as usize - i
            }
            _ => self.wrap_label(side, -self.dft_label(side, i)),
        }
    }

    /// Index whose label is `l` modulo the cyclic length (total kinds only,
    /// where the stored window covers a full period).
    fn wrap_label(&self, side: Side, l: i64) -> usize {
        let m = self.cyclic_len() as i64;
        let min = self.dft_label(side, 0);
        (l - min).rem_euclid(m) as usize
    }
}

/// A phase space `X x X^` presented as a product of axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    axes: Vec<Axis>,
}

/// A point of the phase space: a position index paired with a momentum index
/// (flat, row-major over axes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhasePoint {
    pub q: usize,
    pub p: usize,
}

impl Group {
    pub fn cyclic(order: usize) -> Result<Group> {
        if order == 0 {
            return Err(Error::Invalid("cyclic group needs order >= 1".into()));
        }
        Ok(Group {
            axes: vec![Axis {
                kind: AxisKind::Cyclic { order },
            }],
        })
    }

    /// `n` qubit sites: the product of `n` copies of `Z_2`.
    pub fn bits(n: usize) -> Result<Group> {
        if n == 0 {
            return Err(Error::Invalid("bit string needs at least one site".into()));
        }
        Ok(Group {
            axes: (0..n)
                .map(|_| Axis {
                    kind: AxisKind::Cyclic { order: 2 },
                })
                .collect(),
        })
    }

    pub fn product(parts: Vec<Group>) -> Result<Group> {
        if parts.is_empty() {
            return Err(Error::Invalid("product of no groups".into()));
        }
        Ok(Group {
            axes: parts.into_iter().flat_map(|g| g.axes).collect(),
        })
    }

    /// Integers `-N ..= N` with the default `2N+1`-point dual grid.
    pub fn truncated_integers(n_max: i64) -> Result<Group> {
        Self::truncated_integers_with_dual(n_max, (2 * n_max + 1).max(1) as usize)
    }

    /// Integers `-N ..= N` with an oversampled `M`-point dual grid
    /// (`M >= 2N+1`), under which the Fourier map is an exact isometry.
    pub fn truncated_integers_with_dual(n_max: i64, dual_len: usize) -> Result<Group> {
        if n_max < 0 {
            return Err(Error::Invalid("truncation bound must be >= 0".into()));
        }
        if (dual_len as i64) < 2 * n_max + 1 {
            return Err(Error::Invalid(format!(
                "dual grid of {dual_len} points cannot resolve integers up to +/-{n_max}"
            )));
        }
        Ok(Group {
            axes: vec![Axis {
                kind: AxisKind::TruncatedIntegers { n_max, dual_len },
            }],
        })
    }

    pub fn discretized_circle(len: usize) -> Result<Group> {
        if len == 0 {
            return Err(Error::Invalid("circle grid needs >= 1 point".into()));
        }
        Ok(Group {
            axes: vec![Axis {
                kind: AxisKind::DiscretizedCircle { len },
            }],
        })
    }

    pub fn discretized_line(len: usize, half_width: f64) -> Result<Group> {
        if len < 2 || !len.is_multiple_of(2) {
            return Err(Error::Invalid("line grid needs an even number of points".into()));
        }
        if half_width.is_nan() || half_width <= 0.0 {
            return Err(Error::Invalid("line half-width must be positive".into()));
        }
        Ok(Group {
            axes: vec![Axis {
                kind: AxisKind::DiscretizedLine { len, half_width },
            }],
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dims(&self, side: Side) -> Vec<usize> {
        self.axes.iter().map(|a| a.len(side)).collect()
    }

    /// Number of stored points on `side`.
    pub fn len(&self, side: Side) -> usize {
        self.axes.iter().map(|a| a.len(side)).product()
    }

    /// True when every axis is an exact finite group (no truncation), so the
    /// position and momentum sides have equal point counts and the Weyl
    /// system is complete.
    pub fn is_exact(&self) -> bool {
        self.axes
            .iter()
            .all(|a| matches!(a.kind, AxisKind::Cyclic { .. }))
    }

    /// Haar weight of one point on `side` (product over axes).
    pub fn haar_weight(&self, side: Side) -> f64 {
        self.axes.iter().map(|a| a.weight(side)).product()
    }

    /// Phase-space measure of a single point `(q, p)`:
    /// `haar_weight(Position) * haar_weight(Momentum)`.
    pub fn phase_cell(&self) -> f64 {
        self.haar_weight(Side::Position) * self.haar_weight(Side::Momentum)
    }

    pub fn zero(&self, side: Side) -> usize {
        let dims = self.dims(side);
        let tuple: Vec<usize> = self.axes.iter().map(|a| a.zero(side)).collect();
        flat_index(&tuple, &dims)
    }

    pub fn index_to_tuple(&self, side: Side, idx: usize) -> Vec<usize> {
        let dims = self.dims(side);
        unflatten(idx, &dims)
    }

    pub fn tuple_to_index(&self, side: Side, tuple: &[usize]) -> usize {
        let dims = self.dims(side);
        flat_index(tuple, &dims)
    }

    /// Numeric labels of a point, one entry per axis.
    pub fn values(&self, side: Side, idx: usize) -> Vec<f64> {
        let tuple = self.index_to_tuple(side, idx);
        self.axes
            .iter()
            .zip(tuple)
            .map(|(a, c)| a.value(side, c))
            .collect()
    }

    /// Group addition; `Err(OutOfRange)` when a truncated axis overflows.
    pub fn add(&self, side: Side, i: usize, j: usize) -> Result<usize> {
        let dims = self.dims(side);
        let ti = unflatten(i, &dims);
        let tj = unflatten(j, &dims);
        let mut out = Vec::with_capacity(self.axes.len());
        for (a, (ci, cj)) in self.axes.iter().zip(ti.into_iter().zip(tj)) {
            out.push(a.add(side, ci, cj).ok_or(Error::OutOfRange)?);
        }
        Ok(flat_index(&out, &dims))
    }

    pub fn neg(&self, side: Side, i: usize) -> usize {
        let dims = self.dims(side);
        let t = unflatten(i, &dims);
        let out: Vec<usize> = self
            .axes
            .iter()
            .zip(t)
            .map(|(a, c)| a.neg(side, c))
            .collect();
        flat_index(&out, &dims)
    }

    pub fn sub(&self, side: Side, i: usize, j: usize) -> Result<usize> {
        self.add(side, i, self.neg(side, j))
    }

    /// The pairing `<p|x>` between a momentum point and a position point.
    pub fn character(&self, p: usize, x: usize) -> Complex64 {
        let pt = self.index_to_tuple(Side::Momentum, p);
        let xt = self.index_to_tuple(Side::Position, x);
        let mut phase = 0.0f64;
        for (a, (cp, cx)) in self.axes.iter().zip(pt.into_iter().zip(xt)) {
            let m = a.cyclic_len() as i64;
            let prod = a.dft_label(Side::Momentum, cp) * a.dft_label(Side::Position, cx);
            phase += std::f64::consts::TAU * (prod.rem_euclid(m)) as f64 / m as f64;
        }
        Complex64::from_polar(1.0, phase)
    }

    /// Forward Fourier transform of orthonormal-basis coefficients.
    ///
    /// `out(p) = M^(-1/2) sum_x conj(<p|x>) in(x)` per axis; unitary for exact
    /// kinds and an isometry for oversampled truncated duals.
    pub fn fourier(&self, data: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform(data, Side::Position)
    }

    /// Adjoint Fourier transform (momentum to position coefficients).
    pub fn fourier_adjoint(&self, data: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform(data, Side::Momentum)
    }

    fn transform(&self, data: &[Complex64], from: Side) -> Result<Vec<Complex64>> {
        if data.len() != self.len(from) {
            return Err(Error::GroupMismatch);
        }
        let to = from.other();
        let mut buf: Vec<Complex64> = data.to_vec();
        let mut dims = self.dims(from);
        for (ai, axis) in self.axes.iter().enumerate() {
            let in_len = axis.len(from);
            let out_len = axis.len(to);
            let m = axis.cyclic_len();
            let scale = 1.0 / (m as f64).sqrt();
            let direction = match from {
                Side::Position => FftDirection::Forward,
                Side::Momentum => FftDirection::Inverse,
            };
            let plan = fft_plan(m, direction);
            let in_slots: Vec<usize> = (0..in_len)
                .map(|i| axis.dft_label(from, i).rem_euclid(m as i64) as usize)
                .collect();
            let out_slots: Vec<usize> = (0..out_len)
                .map(|k| axis.dft_label(to, k).rem_euclid(m as i64) as usize)
                .collect();

            let inner: usize = dims[ai + 1..].iter().product();
            let outer: usize = dims[..ai].iter().product();
            let mut next = vec![Complex64::default(); outer * out_len * inner];
            let mut fiber = vec![Complex64::default(); m];
            for o in 0..outer {
                for r in 0..inner {
                    fiber.fill(Complex64::default());
                    for (i, &slot) in in_slots.iter().enumerate() {
                        fiber[slot] = buf[(o * in_len + i) * inner + r];
                    }
                    plan.process(&mut fiber);
                    for (k, &slot) in out_slots.iter().enumerate() {
                        next[(o * out_len + k) * inner + r] = fiber[slot] * scale;
                    }
                }
            }
            buf = next;
            dims[ai] = out_len;
        }
        Ok(buf)
    }
}

fn flat_index(tuple: &[usize], dims: &[usize]) -> usize {
    let mut idx = 0;
    for (c, d) in tuple.iter().zip(dims) {
        debug_assert!(c < d);
        idx = idx * d + c;
    }
    idx
}

fn unflatten(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        out[i] = idx % dims[i];
        idx /= dims[i];
    }
    out
}

fn fft_plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("fft planner lock");
    match direction {
        FftDirection::Forward => planner.plan_fft_forward(len),
        FftDirection::Inverse => planner.plan_fft_inverse(len),
    }
}
