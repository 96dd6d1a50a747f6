//! State vectors over a phase-space group and the Weyl (phase-space
//! translation) operators acting on them.
//!
//! Amplitudes are coefficients in the orthonormal point basis of the position
//! side.  The Weyl operator with parameters `(q, p)` acts as
//! `(W(q,p) psi)(x) = <p|x> psi(x - q)`: it moves a state localized at `0` to
//! one localized at `q` and shifts the momentum content by `p`.  The
//! composition law is `W(a) W(b) = conj(<p_b|q_a>) W(a + b)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{Group, Side};

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    group: Group,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(group: Group, amps: Vec<Complex64>) -> Result<StateVector> {
        if amps.len() != group.len(Side::Position) {
            return Err(Error::GroupMismatch);
        }
        Ok(StateVector { group, amps })
    }

    /// The point state concentrated on position index `x`.
    pub fn point(group: Group, x: usize) -> StateVector {
        let mut amps = vec![Complex64::default(); group.len(Side::Position)];
        amps[x] = Complex64::new(1.0, 0.0);
        StateVector { group, amps }
    }

    /// Build a state from momentum-side coefficients.
    pub fn from_momentum(group: Group, amps: Vec<Complex64>) -> Result<StateVector> {
        if amps.len() != group.len(Side::Momentum) {
            return Err(Error::GroupMismatch);
        }
        let pos = group.fourier_adjoint(&amps)?;
        Ok(StateVector { group, amps: pos })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn momentum_amplitudes(&self) -> Vec<Complex64> {
        self.group
            .fourier(&self.amps)
            .expect("state length always matches its group")
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Invalid("cannot normalize the zero vector".into()));
        }
        self.amps.iter_mut().for_each(|z| *z /= n);
        Ok(self)
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability mass of each position point (for a normalized state).
    pub fn position_probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn momentum_probabilities(&self) -> Vec<f64> {
        self.momentum_amplitudes()
            .iter()
            .map(|z| z.norm_sqr())
            .collect()
    }

    /// Apply the Weyl operator `W(q, p)`.
    ///
    /// On truncated-integer axes the translation is the compression of the
    /// integer shift: amplitude pushed past the cutoff is dropped, so the
    /// result can have norm below one.
    pub fn weyl(&self, q: usize, p: usize) -> StateVector {
        let g = &self.group;
        let n = g.len(Side::Position);
        let mut out = vec![Complex64::default(); n];
        for (x, slot) in out.iter_mut().enumerate() {
            if let Ok(src) = g.sub(Side::Position, x, q) {
                *slot = g.character(p, x) * self.amps[src];
            }
        }
        StateVector {
            group: g.clone(),
            amps: out,
        }
    }

    /// The parity-reversed state `psi(-x)`.
    pub fn parity(&self) -> StateVector {
        let g = &self.group;
        let n = g.len(Side::Position);
        let mut out = vec![Complex64::default(); n];
        for (x, o) in out.iter_mut().enumerate() {
            *o = self.amps[g.neg(Side::Position, x)];
        }
        StateVector {
            group: g.clone(),
            amps: out,
        }
    }
}

/// Dense matrix of `W(q, p)` in the position point basis.
pub fn weyl_matrix(group: &Group, q: usize, p: usize) -> DMatrix<Complex64> {
    let n = group.len(Side::Position);
    let mut m = DMatrix::from_element(n, n, Complex64::default());
    for y in 0..n {
        if let Ok(x) = group.add(Side::Position, y, q) {
            m[(x, y)] = group.character(p, x);
        }
    }
    m
}

/// Dense matrix of the Fourier transform: row `p`, column `x` holds
/// `scale * conj(<p|x>)`.
pub fn fourier_matrix(group: &Group) -> DMatrix<Complex64> {
    let np = group.len(Side::Momentum);
    let nx = group.len(Side::Position);
    let scale: f64 = group
        .axes()
        .iter()
        .map(|a| 1.0 / (a.cyclic_len() as f64).sqrt())
        .product();
    DMatrix::from_fn(np, nx, |p, x| group.character(p, x).conj() * scale)
}
