use serde::Serialize;

use crate::dynamics::open_unit;
use crate::empirics::hitting::{estimate_hitting_ball, exponential_moment, TailEstimate};
use crate::empirics::report::BoundReport;
use crate::error::{Error, Result};
use crate::kernel::uniform_ball;
use crate::lyapunov::{hitting_moment_bound, unit_vector, LyapunovParams};
use crate::model::Model;
use crate::onedim::{tail_bound_S, OneDimConstants, RateEnvelope};
use crate::rng::Streams;
use crate::state::State;

/// `P̂(S > n)` against the geometric bound for `n = 1..`.
pub fn tail_s_reports(
    est: &TailEstimate,
    x0: f64,
    v0: f64,
    alpha: f64,
    k: &OneDimConstants,
    env: &RateEnvelope,
) -> Result<Vec<BoundReport>> {
    est.n
        .iter()
        .zip(est.survival.iter().zip(&est.stderr))
        .filter(|(&n, _)| n >= 1)
        .map(|(&n, (&p, &se))| {
            let bound = tail_bound_S(x0, v0, alpha, k, n, env)?;
            Ok(BoundReport::new(format!("P(S>{n})"), bound, p, se, est.samples))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingCheck {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub report: BoundReport,
}

/// Starting states with `|x|` uniform on `(R, 2R]`, a uniform direction and
/// a velocity uniform in the unit ball.
pub fn hitting_starts(dim: usize, radius: f64, count: usize, streams: Streams) -> Vec<State> {
    streams.map(count, |_, rng| {
        let rho = radius * (1.0 + open_unit(rng));
        let x = unit_vector(dim, rng).into_iter().map(|c| c * rho).collect();
        State::new(x, uniform_ball(dim, rng)).expect("valid start")
    })
}

/// `E[e^{ητ}]` for the hitting time `τ` of `B(1)` against `H(x, v)` at each
/// start, with `samples` trajectories per start.
pub fn ball_hitting_certificate(
    m: &Model,
    p: &LyapunovParams,
    eta: f64,
    starts: &[State],
    samples: usize,
    jump_cap: usize,
    streams: Streams,
) -> Result<Vec<HittingCheck>> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
    }
    starts
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let h = estimate_hitting_ball(m, s, samples, jump_cap, streams.derive(i as u64))?;
            let (mean, se) = exponential_moment(&h, eta);
            let n = h.times.len() - h.censored();
            let report = BoundReport::new(format!("start_{i}"), hitting_moment_bound(p, s), mean, se, n)
                .with_censored_fraction(h.censored_fraction());
            Ok(HittingCheck {
                x: s.x().to_vec(),
                v: s.v().to_vec(),
                report,
            })
        })
        .collect()
}
