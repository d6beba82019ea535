use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{JumpChain, SimulationOptions};
use crate::empirics::hitting::ball_entry;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::quadrature::GaussLegendre;
use crate::rng::Streams;
use crate::state::{dot, norm, State};

/// Test functions with closed-form or smooth segment integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant,
    /// `e^{β|x| + γ|v|}`.
    Exponential { beta: f64, gamma: f64 },
    /// `x_coord^power`.
    CoordinateMoment { coord: usize, power: u32 },
}

impl TestFunction {
    pub fn value(&self, x: &[f64], v: &[f64]) -> f64 {
        match *self {
            TestFunction::Constant => 1.0,
            TestFunction::Exponential { beta, gamma } => (beta * norm(x) + gamma * norm(v)).exp(),
            TestFunction::CoordinateMoment { coord, power } => x[coord].powi(power as i32),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            TestFunction::Exponential { beta, gamma } if !(beta.is_finite() && gamma.is_finite()) => {
                Err(Error::InvalidArgument("exponential test function needs finite β, γ".into()))
            }
            TestFunction::CoordinateMoment { coord, .. } if coord >= dim => {
                Err(Error::InvalidArgument(format!("coordinate {coord} out of range")))
            }
            _ => Ok(()),
        }
    }

    /// `∫_a^b f(x + v s, v) ds`.
    pub fn segment_integral(&self, x: &[f64], v: &[f64], a: f64, b: f64) -> f64 {
        match *self {
            TestFunction::Constant => b - a,
            TestFunction::CoordinateMoment { coord, power } => {
                let (x, v) = (x[coord], v[coord]);
                if v == 0.0 {
                    x.powi(power as i32) * (b - a)
                } else {
                    let k = power as i32 + 1;
                    ((x + v * b).powi(k) - (x + v * a).powi(k)) / (k as f64 * v)
                }
            }
            TestFunction::Exponential { beta, gamma } => {
                let speed = norm(v);
                let scale = (gamma * speed).exp();
                if x.len() == 1 {
                    scale * abs_linear_exp_integral(beta, x[0], v[0], a, b)
                } else {
                    scale * radial_exp_integral(beta, x, v, a, b)
                }
            }
        }
    }
}

/// `∫_a^b e^{β(c₀ + c₁ s)} ds`.
fn linear_exp_integral(beta: f64, c0: f64, c1: f64, a: f64, b: f64) -> f64 {
    let k = beta * c1;
    let start = (beta * (c0 + c1 * a)).exp();
    if k == 0.0 {
        start * (b - a)
    } else {
        start * (k * (b - a)).exp_m1() / k
    }
}

/// `∫_a^b e^{β|x + v s|} ds` in one dimension, split at the zero crossing.
fn abs_linear_exp_integral(beta: f64, x: f64, v: f64, a: f64, b: f64) -> f64 {
    let sign = |s: f64| if x + v * s >= 0.0 { 1.0 } else { -1.0 };
    let cross = if v != 0.0 { -x / v } else { f64::NAN };
    if cross > a && cross < b {
        linear_exp_integral(beta, sign(a) * x, sign(a) * v, a, cross)
            + linear_exp_integral(beta, sign(b) * x, sign(b) * v, cross, b)
    } else {
        let sg = sign(0.5 * (a + b));
        linear_exp_integral(beta, sg * x, sg * v, a, b)
    }
}

/// `∫_a^b e^{β|x + v s|} ds` by composite Gauss–Legendre, split at the
/// closest approach to the origin.
fn radial_exp_integral(beta: f64, x: &[f64], v: &[f64], a: f64, b: f64) -> f64 {
    let gl = GaussLegendre::cached(16);
    let vv = dot(v, v);
    let closest = if vv > 0.0 { -dot(x, v) / vv } else { f64::NAN };
    let step = 1.0 / beta.abs().max(1.0);
    let mut cuts = vec![a];
    if closest > a && closest < b {
        cuts.push(closest);
    }
    cuts.push(b);
    let mut total = 0.0;
    let mut y = vec![0.0; x.len()];
    for w in cuts.windows(2) {
        let pieces = ((w[1] - w[0]) / step).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / pieces as f64;
        for i in 0..pieces {
            let lo = w[0] + h * i as f64;
            total += gl.integrate(lo, lo + h, |s| {
                for (yk, (xk, vk)) in y.iter_mut().zip(x.iter().zip(v)) {
                    *yk = xk + vk * s;
                }
                (beta * norm(&y)).exp()
            });
        }
    }
    total
}

/// Ratio estimate of `π(f)` from excursions between entries into `B(1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegenerationEstimate {
    pub function: TestFunction,
    pub ratio: f64,
    pub stderr: f64,
    pub excursions: usize,
    pub total_length: f64,
    /// Per-excursion `(∫f dt, length)`.
    #[serde(skip)]
    pub pieces: Vec<(f64, f64)>,
}

impl RegenerationEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("excursion,integral,length\n");
        for (i, (y, l)) in self.pieces.iter().enumerate() {
            writeln!(out, "{i},{y},{l}").unwrap();
        }
        out
    }
}

/// Minimum number of completed excursions for a conclusive estimate.
pub const MIN_EXCURSIONS: usize = 10;

/// Runs one long trajectory (stream 0 of `streams`) until `n_excursions`
/// excursions between successive entries into `B(1)` have completed, and
/// returns `Σ∫f / Σ length`.
pub fn regeneration_ratio(
    m: &Model,
    s0: &State,
    f: TestFunction,
    n_excursions: usize,
    jump_cap: usize,
    streams: Streams,
) -> Result<RegenerationEstimate> {
    m.check_state(s0)?;
    f.validate(m.dimension)?;
    let opts = SimulationOptions {
        jump_cap,
        ..Default::default()
    };
    let mut chain = JumpChain::new(m, s0.clone(), streams.rng(0), opts);
    let mut pieces = Vec::with_capacity(n_excursions);
    let (mut y, mut l) = (0.0, 0.0);
    let mut started = false;
    while pieces.len() < n_excursions {
        let tau = chain.holding_time_until(f64::INFINITY)?;
        let (x, v) = (chain.state().x(), chain.state().v());
        let outside = dot(x, x) > 1.0;
        let entry = if outside { ball_entry(x, v, tau, 1.0) } else { None };
        match entry {
            Some(s) => {
                if started {
                    y += f.segment_integral(x, v, 0.0, s);
                    l += s;
                    pieces.push((y, l));
                }
                started = true;
                if tau.is_infinite() {
                    break;
                }
                y = f.segment_integral(x, v, s, tau);
                l = tau - s;
            }
            None => {
                if tau.is_infinite() {
                    break;
                }
                if started {
                    y += f.segment_integral(x, v, 0.0, tau);
                    l += tau;
                }
            }
        }
        match chain.jump_after(tau) {
            Err(Error::RunawayRate { .. }) => break,
            r => r?,
        }
    }
    if pieces.len() < MIN_EXCURSIONS {
        return Err(Error::Inconclusive(format!(
            "only {} completed excursions (need {MIN_EXCURSIONS})",
            pieces.len()
        )));
    }
    let sum_y: f64 = pieces.iter().map(|p| p.0).sum();
    let sum_l: f64 = pieces.iter().map(|p| p.1).sum();
    let ratio = sum_y / sum_l;
    let resid: f64 = pieces.iter().map(|(y, l)| (y - ratio * l).powi(2)).sum();
    Ok(RegenerationEstimate {
        function: f,
        ratio,
        stderr: resid.sqrt() / sum_l,
        excursions: pieces.len(),
        total_length: sum_l,
        pieces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DEFAULT_JUMP_CAP;
    use proptest::prelude::*;

    #[test]
    fn constant_gives_exactly_one() {
        for (m, s0, seed) in [
            (Model::figure1(), State::scalar(5.0, -1.0).unwrap(), 1),
            (Model::signed_velocity_example(), State::scalar(-3.0, 0.2).unwrap(), 99),
        ] {
            let r = regeneration_ratio(&m, &s0, TestFunction::Constant, 200, DEFAULT_JUMP_CAP, Streams::new(seed)).unwrap();
            assert_eq!(r.ratio, 1.0);
            assert_eq!(r.excursions, 200);
        }
    }

    #[test]
    fn too_few_excursions_is_inconclusive() {
        let m = Model::figure1();
        let s0 = State::scalar(5.0, -1.0).unwrap();
        let r = regeneration_ratio(&m, &s0, TestFunction::Constant, 5, DEFAULT_JUMP_CAP, Streams::new(1));
        assert!(matches!(r, Err(Error::Inconclusive(_))));
    }

    #[test]
    fn odd_moment_of_symmetric_model_is_small() {
        let m = Model::figure1();
        let s0 = State::scalar(0.0, 0.5).unwrap();
        let f = TestFunction::CoordinateMoment { coord: 0, power: 1 };
        let r = regeneration_ratio(&m, &s0, f, 20_000, DEFAULT_JUMP_CAP, Streams::new(4)).unwrap();
        assert!(r.ratio.abs() < 4.0 * r.stderr, "{} ± {}", r.ratio, r.stderr);
    }

    #[test]
    fn radial_quadrature_matches_one_dimensional_closed_form() {
        // a 2-D ray along the first axis reduces to the 1-D formula
        let (beta, x, v) = (0.7, 2.0, -0.8);
        let closed = abs_linear_exp_integral(beta, x, v, 0.0, 6.0);
        let quad = radial_exp_integral(beta, &[x, 0.0], &[v, 0.0], 0.0, 6.0);
        assert!((closed - quad).abs() < 1e-9 * closed, "{closed} {quad}");
    }

    proptest! {
        #[test]
        fn closed_form_integrals_match_quadrature(
            x in -3.0f64..3.0, v in -1.0f64..1.0, b in 0.01f64..5.0, beta in -1.0f64..1.0, p in 0u32..4,
        ) {
            let gl = GaussLegendre::cached(64);
            let crossing = if v != 0.0 { vec![-x / v] } else { vec![] };
            let e = TestFunction::Exponential { beta, gamma: 0.3 };
            let quad = gl.integrate_split(0.0, b, &crossing, |s| e.value(&[x + v * s], &[v]));
            let closed = e.segment_integral(&[x], &[v], 0.0, b);
            prop_assert!((quad - closed).abs() <= 1e-10 * closed.abs().max(1.0));
            let mo = TestFunction::CoordinateMoment { coord: 0, power: p };
            let quad = gl.integrate(0.0, b, |s| mo.value(&[x + v * s], &[v]));
            let closed = mo.segment_integral(&[x], &[v], 0.0, b);
            prop_assert!((quad - closed).abs() <= 1e-9 * closed.abs().max(1.0));
        }
    }
}
