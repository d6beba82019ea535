use std::fmt::Write as _;

use serde::Serialize;

use crate::dynamics::{JumpChain, SimulationOptions};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::rng::{StreamRng, Streams};
use crate::state::{dot, State};

/// Empirical survival `P̂(S > n)` of the sign-change jump index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub n: Vec<u32>,
    pub survival: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

impl TailEstimate {
    /// Least-squares slope of `ln P̂(S > n)` over `lo..=hi`; `None` if a
    /// survival value in the window is zero.
    pub fn log_slope(&self, lo: u32, hi: u32) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .n
            .iter()
            .zip(&self.survival)
            .filter(|(n, _)| (lo..=hi).contains(*n))
            .map(|(&n, &p)| (n as f64, p.ln()))
            .collect();
        if pts.len() < 2 || pts.iter().any(|(_, y)| !y.is_finite()) {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,survival,stderr\n");
        for i in 0..self.n.len() {
            writeln!(out, "{},{},{}", self.n[i], self.survival[i], self.stderr[i]).unwrap();
        }
        out
    }
}

/// `S = inf{n ≥ 1 : X_{T_n} X_0 ≤ 0}` for one trajectory, or `None` if it
/// exceeds `n_max` (including paths that stop jumping).
fn sign_change_index(m: &Model, s0: &State, n_max: u32, rng: &mut StreamRng) -> Result<Option<u32>> {
    let x0 = s0.x()[0];
    let mut chain = JumpChain::new(m, s0.clone(), rng, SimulationOptions::default());
    for n in 1..=n_max {
        let tau = chain.holding_time_until(f64::INFINITY)?;
        if tau.is_infinite() {
            return Ok(None);
        }
        chain.jump_after(tau)?;
        if chain.state().x()[0] * x0 <= 0.0 {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Survival of `S` for `n = 0..=n_max` over `samples` trajectories.
pub fn estimate_tail_s(m: &Model, x0: f64, v0: f64, n_max: u32, samples: usize, streams: Streams) -> Result<TailEstimate> {
    if m.dimension != 1 {
        return Err(Error::InvalidArgument("the tail of S is defined for d = 1".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one trajectory".into()));
    }
    let s0 = State::scalar(x0, v0)?;
    m.check_state(&s0)?;
    let indices = streams.map(samples, |_, rng| sign_change_index(m, &s0, n_max, rng));
    let mut survivors = vec![0u64; n_max as usize + 1];
    for s in indices {
        let last = s?.map_or(n_max, |s| s - 1);
        for c in &mut survivors[..=last as usize] {
            *c += 1;
        }
    }
    let n_f = samples as f64;
    let survival: Vec<f64> = survivors.iter().map(|&c| c as f64 / n_f).collect();
    let stderr = survival.iter().map(|p| (p * (1.0 - p) / n_f).sqrt()).collect();
    Ok(TailEstimate {
        n: (0..=n_max).collect(),
        survival,
        stderr,
        samples,
    })
}

/// Hitting times, `None` for trajectories censored at the jump cap or that
/// never hit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingSamples {
    pub times: Vec<Option<f64>>,
}

impl HittingSamples {
    pub fn uncensored(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().flatten().copied()
    }

    pub fn censored(&self) -> usize {
        self.times.iter().filter(|t| t.is_none()).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.times.is_empty() {
            0.0
        } else {
            self.censored() as f64 / self.times.len() as f64
        }
    }

    /// Sample mean and standard error of the uncensored times.
    pub fn mean(&self) -> (f64, f64) {
        exponential_moment_of(self, |t| t)
    }

    /// CSV `i,time,censored`; censored rows have an empty time.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,time,censored\n");
        for (i, t) in self.times.iter().enumerate() {
            match t {
                Some(t) => writeln!(out, "{i},{t},0").unwrap(),
                None => writeln!(out, "{i},,1").unwrap(),
            }
        }
        out
    }
}

/// Mean and standard error of `e^{η T}` over the uncensored samples.
pub fn exponential_moment(samples: &HittingSamples, eta: f64) -> (f64, f64) {
    exponential_moment_of(samples, |t| (eta * t).exp())
}

fn exponential_moment_of(samples: &HittingSamples, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let vals: Vec<f64> = samples.uncensored().map(f).collect();
    let n = vals.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// First time `s ∈ [0, tau]` with `|x + v s| ≤ radius`, if any.
pub(crate) fn ball_entry(x: &[f64], v: &[f64], tau: f64, radius: f64) -> Option<f64> {
    let c = dot(x, x) - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let a = dot(v, v);
    let b = 2.0 * dot(x, v);
    let disc = b * b - 4.0 * a * c;
    if b >= 0.0 || disc < 0.0 {
        return None;
    }
    // smaller root, in the cancellation-free form
    let s = 2.0 * c / (-b + disc.sqrt());
    (s <= tau).then_some(s)
}

/// `τ = inf{t ≥ 0 : |X_t| ≤ 1}` along one trajectory, `None` if the jump
/// cap is reached first or the path escapes for good.
pub fn hitting_time_ball(m: &Model, s0: &State, jump_cap: usize, rng: &mut StreamRng) -> Result<Option<f64>> {
    let opts = SimulationOptions {
        jump_cap,
        ..Default::default()
    };
    let mut chain = JumpChain::new(m, s0.clone(), rng, opts);
    loop {
        let tau = chain.holding_time_until(f64::INFINITY)?;
        if let Some(s) = ball_entry(chain.state().x(), chain.state().v(), tau, 1.0) {
            return Ok(Some(chain.time() + s));
        }
        if tau.is_infinite() {
            return Ok(None);
        }
        match chain.jump_after(tau) {
            Err(Error::RunawayRate { .. }) => return Ok(None),
            r => r?,
        }
    }
}

pub fn estimate_hitting_ball(m: &Model, s0: &State, samples: usize, jump_cap: usize, streams: Streams) -> Result<HittingSamples> {
    m.check_state(s0)?;
    let times = streams
        .map(samples, |_, rng| hitting_time_ball(m, s0, jump_cap, rng))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(HittingSamples { times })
}

/// `Z = inf{t > 0 : X_t = 0}` along one 1-D trajectory.
fn hitting_time_zero(m: &Model, s0: &State, jump_cap: usize, rng: &mut StreamRng) -> Result<Option<f64>> {
    let opts = SimulationOptions {
        jump_cap,
        ..Default::default()
    };
    let mut chain = JumpChain::new(m, s0.clone(), rng, opts);
    loop {
        let tau = chain.holding_time_until(f64::INFINITY)?;
        let (x, v) = (chain.state().x()[0], chain.state().v()[0]);
        if x * v < 0.0 {
            let s = -x / v;
            if s <= tau {
                return Ok(Some(chain.time() + s));
            }
        }
        if tau.is_infinite() {
            return Ok(None);
        }
        match chain.jump_after(tau) {
            Err(Error::RunawayRate { .. }) => return Ok(None),
            r => r?,
        }
    }
}

pub fn estimate_hitting_z(m: &Model, x0: f64, v0: f64, samples: usize, jump_cap: usize, streams: Streams) -> Result<HittingSamples> {
    if m.dimension != 1 {
        return Err(Error::InvalidArgument("Z is defined for d = 1".into()));
    }
    if x0 == 0.0 {
        return Err(Error::InvalidArgument("Z needs x0 ≠ 0".into()));
    }
    let s0 = State::scalar(x0, v0)?;
    m.check_state(&s0)?;
    let times = streams
        .map(samples, |_, rng| hitting_time_zero(m, &s0, jump_cap, rng))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(HittingSamples { times })
}
