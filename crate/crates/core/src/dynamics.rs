//! Deterministic flow, inter-jump times and trajectory simulation.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::rng::Streams;
use crate::state::{norm, State};

/// Default bound on the number of jumps in one trajectory.
pub const DEFAULT_JUMP_CAP: usize = 10_000_000;

/// `(x + v t, v)`.
pub fn flow(s: &State, t: f64) -> State {
    let x = s.x().iter().zip(s.v()).map(|(x, v)| x + v * t).collect();
    State::from_parts_unchecked(x, s.v().to_vec())
}

/// `Λ(t) = ∫₀ᵗ λ(x + v s, v) ds`, summed exactly over the ray pieces.
pub fn cumulative_rate(m: &Model, s: &State, t: f64) -> Result<f64> {
    check_time(t)?;
    m.rate.ray(s.x(), s.v())?.cumulative(t)
}

/// `P(T₁ > t) = exp(-Λ(t))`.
pub fn survival(m: &Model, s: &State, t: f64) -> Result<f64> {
    Ok((-cumulative_rate(m, s, t)?).exp())
}

/// `Λ⁻¹(-ln u)`: the first jump time driven by the uniform draw `u`.
pub fn sample_jump_time(m: &Model, s: &State, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!("u = {u} must lie in (0, 1)")));
    }
    m.rate.ray(s.x(), s.v())?.invert(-u.ln())
}

/// First jump time by thinning against the constant `bound`.
pub fn sample_jump_time_thinning<R: Rng + ?Sized>(
    m: &Model,
    s: &State,
    bound: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut t = 0.0;
    let mut y = s.x().to_vec();
    loop {
        t += -open_unit(rng).ln() / bound;
        for (yk, (xk, vk)) in y.iter_mut().zip(s.x().iter().zip(s.v())) {
            *yk = xk + vk * t;
        }
        let rate = m.rate.value(&y, s.v())?;
        if rate > bound {
            return Err(Error::ThinningBound { bound, rate });
        }
        if rng.random::<f64>() * bound < rate {
            return Ok(t);
        }
    }
}

/// Draws a post-jump velocity from the model kernel at `s`.
pub fn sample_velocity<R: Rng + ?Sized>(m: &Model, s: &State, rng: &mut R) -> Vec<f64> {
    m.kernel.sample(s.x(), s.v(), rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSampler {
    Inversion,
    /// Requires a rate with a `thinning_bound`.
    Thinning,
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    pub jump_cap: usize,
    pub sampler: JumpSampler,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            jump_cap: DEFAULT_JUMP_CAP,
            sampler: JumpSampler::Inversion,
        }
    }
}

/// The embedded jump chain, advanced one jump at a time.
pub struct JumpChain<'a, R: Rng> {
    model: &'a Model,
    state: State,
    time: f64,
    jumps: usize,
    options: SimulationOptions,
    rng: R,
}

impl<'a, R: Rng> JumpChain<'a, R> {
    pub fn new(model: &'a Model, start: State, rng: R, options: SimulationOptions) -> Self {
        Self {
            model,
            state: start,
            time: 0.0,
            jumps: 0,
            options,
            rng,
        }
    }

    /// State right after the latest jump (or the start).
    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn jumps(&self) -> usize {
        self.jumps
    }

    /// Time until the next jump from the current state.
    pub fn next_holding_time(&mut self) -> Result<f64> {
        match self.options.sampler {
            JumpSampler::Inversion => {
                let u = open_unit(&mut self.rng);
                sample_jump_time(self.model, &self.state, u)
            }
            JumpSampler::Thinning => {
                let bound = self.model.rate.thinning_bound().ok_or_else(|| {
                    Error::InvalidModel("thinning needs a rate with a thinning bound".into())
                })?;
                sample_jump_time_thinning(self.model, &self.state, bound, &mut self.rng)
            }
        }
    }

    /// Like `next_holding_time`, but returns `f64::INFINITY` when the ray
    /// has no further jump and the rate stays defined through `horizon`.
    pub fn holding_time_until(&mut self, horizon: f64) -> Result<f64> {
        match self.next_holding_time() {
            Err(Error::OutsideTable { .. }) | Err(Error::ZeroTerminalRate)
                if self.time + exit_time(self.model, &self.state) >= horizon =>
            {
                Ok(f64::INFINITY)
            }
            other => other,
        }
    }

    /// Flows for `tau` and redraws the velocity at the arrival point.
    pub fn jump_after(&mut self, tau: f64) -> Result<()> {
        if self.jumps >= self.options.jump_cap {
            return Err(Error::RunawayRate {
                cap: self.options.jump_cap,
                time: self.time,
            });
        }
        let pre = flow(&self.state, tau);
        let v = sample_velocity(self.model, &pre, &mut self.rng);
        debug_assert!(norm(&v) <= 1.0 + crate::state::SPEED_TOLERANCE);
        let (x, _) = pre.into_parts();
        self.state = State::from_parts_unchecked(x, v);
        self.time += tau;
        self.jumps += 1;
        Ok(())
    }

    /// Samples the next holding time and performs the jump; returns the
    /// holding time.
    pub fn advance(&mut self) -> Result<f64> {
        let tau = self.next_holding_time()?;
        self.jump_after(tau)?;
        Ok(tau)
    }
}

/// Jump times `T₀ = 0 < T₁ < … < T_N ≤ horizon` with the post-jump states.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySkeleton {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub horizon: f64,
}

impl TrajectorySkeleton {
    pub fn jumps(&self) -> usize {
        self.times.len() - 1
    }

    /// The state at time `t`, interpolating along the segment containing `t`.
    pub fn position_at(&self, t: f64) -> Result<State> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        let n = self.times.partition_point(|&tn| tn <= t) - 1;
        Ok(flow(&self.states[n], t - self.times[n]))
    }

    /// CSV with header `n,T,x_1..x_d,v_1..v_d`.
    pub fn to_csv(&self) -> String {
        let d = self.states[0].dim();
        let mut out = String::from("n,T");
        for k in 1..=d {
            write!(out, ",x_{k}").unwrap();
        }
        for k in 1..=d {
            write!(out, ",v_{k}").unwrap();
        }
        out.push('\n');
        for (n, (t, s)) in self.times.iter().zip(&self.states).enumerate() {
            write!(out, "{n},{t}").unwrap();
            for c in s.x().iter().chain(s.v()) {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Simulates on `[0, horizon]` using stream 0 of `seed`.
pub fn simulate(m: &Model, s0: &State, horizon: f64, seed: u64) -> Result<TrajectorySkeleton> {
    simulate_with(m, s0, horizon, Streams::new(seed).rng(0), SimulationOptions::default())
}

pub fn simulate_with<R: Rng>(
    m: &Model,
    s0: &State,
    horizon: f64,
    rng: R,
    options: SimulationOptions,
) -> Result<TrajectorySkeleton> {
    m.check_state(s0)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be finite and nonnegative"
        )));
    }
    let mut chain = JumpChain::new(m, s0.clone(), rng, options);
    let mut times = vec![0.0];
    let mut states = vec![s0.clone()];
    loop {
        let tau = match chain.next_holding_time() {
            Ok(tau) => tau,
            Err(Error::OutsideTable { .. }) | Err(Error::ZeroTerminalRate)
                if chain.time() + exit_time(m, chain.state()) > horizon =>
            {
                break
            }
            Err(e) => return Err(e),
        };
        if chain.time() + tau > horizon {
            break;
        }
        chain.jump_after(tau)?;
        times.push(chain.time());
        states.push(chain.state().clone());
    }
    Ok(TrajectorySkeleton {
        times,
        states,
        horizon,
    })
}

/// How long the rate stays defined along the current ray.
fn exit_time(m: &Model, s: &State) -> f64 {
    m.rate
        .ray(s.x(), s.v())
        .map(|r| r.valid_until)
        .unwrap_or(0.0)
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "time {t} must be finite and nonnegative"
        )))
    }
}

/// Uniform draw on the open interval `(0, 1)`.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
