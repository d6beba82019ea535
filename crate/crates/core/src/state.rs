//! Phase-space points `(x, v)` with `v` in the closed unit ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on `|v| <= 1` to absorb round-off from normalisation.
pub const SPEED_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    x: Vec<f64>,
    v: Vec<f64>,
}

impl State {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidState("dimension must be at least 1".into()));
        }
        if x.len() != v.len() {
            return Err(Error::InvalidState(format!(
                "position has length {} but velocity has length {}",
                x.len(),
                v.len()
            )));
        }
        if x.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidState("non-finite coordinate".into()));
        }
        let speed = norm(&v);
        if speed > 1.0 + SPEED_TOLERANCE {
            return Err(Error::InvalidState(format!("|v| = {speed} exceeds 1")));
        }
        Ok(Self { x, v })
    }

    /// One-dimensional convenience constructor.
    pub fn scalar(x: f64, v: f64) -> Result<Self> {
        Self::new(vec![x], vec![v])
    }

    pub(crate) fn from_parts_unchecked(x: Vec<f64>, v: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), v.len());
        Self { x, v }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn radius(&self) -> f64 {
        norm(&self.x)
    }

    /// `x·v/|x|`, defined as 0 at the origin.
    pub fn ratio(&self) -> f64 {
        ratio(&self.x, &self.v)
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn ratio(x: &[f64], v: &[f64]) -> f64 {
    let r = norm(x);
    if r == 0.0 {
        0.0
    } else {
        (dot(x, v) / r).clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_fast_velocity() {
        assert!(State::new(vec![0.0, 0.0], vec![0.8, 0.8]).is_err());
        assert!(State::new(vec![0.0, 0.0], vec![0.6, 0.8]).is_ok());
    }

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(State::new(vec![0.0], vec![0.0, 0.0]).is_err());
        assert!(State::new(vec![], vec![]).is_err());
    }

    #[test]
    fn ratio_at_origin_is_zero() {
        let s = State::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(s.ratio(), 0.0);
        let s = State::scalar(-2.0, 0.5).unwrap();
        assert_eq!(s.ratio(), -0.5);
    }
}
