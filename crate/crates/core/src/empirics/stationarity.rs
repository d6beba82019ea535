use serde::{Deserialize, Serialize};

use crate::dynamics::{JumpChain, SimulationOptions};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::quadrature::GaussLegendre;
use crate::rng::Streams;
use crate::state::{dot, norm, State};

/// Smooth test functions with hand-coded generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationarityFunction {
    /// `f ≡ 1`.
    Constant,
    /// `f = e^{-|x|²}`.
    Gaussian,
    /// `f = (x·v) e^{-|x|²}`.
    GaussianFlux,
}

impl StationarityFunction {
    pub fn name(&self) -> &'static str {
        match self {
            StationarityFunction::Constant => "constant",
            StationarityFunction::Gaussian => "gaussian",
            StationarityFunction::GaussianFlux => "gaussian_flux",
        }
    }

    pub fn value(&self, x: &[f64], v: &[f64]) -> f64 {
        let g = (-dot(x, x)).exp();
        match self {
            StationarityFunction::Constant => 1.0,
            StationarityFunction::Gaussian => g,
            StationarityFunction::GaussianFlux => dot(x, v) * g,
        }
    }

    /// `Lf(x, v)` given the jump rate `rate = λ(x, v)`.
    pub fn generator(&self, m: &Model, x: &[f64], v: &[f64], rate: f64) -> f64 {
        let g = (-dot(x, x)).exp();
        let xv = dot(x, v);
        match self {
            StationarityFunction::Constant => 0.0,
            StationarityFunction::Gaussian => -2.0 * xv * g,
            StationarityFunction::GaussianFlux => {
                let transport = g * (dot(v, v) - 2.0 * xv * xv);
                let r = norm(x);
                let mean_ratio = if r == 0.0 {
                    0.0
                } else {
                    m.kernel
                        .ratio_law(x, v)
                        .expect(GaussLegendre::cached(16), &[], |u| u)
                };
                transport + rate * g * (r * mean_ratio - xv)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub function: StationarityFunction,
    pub mean: f64,
    pub stderr: f64,
    pub burn_in: f64,
    pub horizon: f64,
    pub batches: usize,
    pub jumps: usize,
}

impl StationarityReport {
    /// `|mean| ≤ 3·stderr`.
    pub fn consistent(&self) -> bool {
        self.mean.abs() <= 3.0 * self.stderr
    }
}

pub const BATCHES: usize = 20;

/// Longest sub-interval handed to one Gauss–Legendre rule.
const PIECE: f64 = 0.5;

/// Time average of `Lf(X_t, V_t)` over `[burn_in, horizon]` along one
/// trajectory (stream 0), with a batch-means standard error.
pub fn stationarity_diagnostic(
    m: &Model,
    s0: &State,
    f: StationarityFunction,
    horizon: f64,
    burn_in: f64,
    streams: Streams,
) -> Result<StationarityReport> {
    m.check_state(s0)?;
    if !(burn_in >= 0.0 && horizon > burn_in && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 ≤ burn-in < horizon < ∞, got {burn_in} and {horizon}"
        )));
    }
    let width = (horizon - burn_in) / BATCHES as f64;
    let mut sums = [0.0; BATCHES];
    let gl = GaussLegendre::cached(8);
    let mut chain = JumpChain::new(m, s0.clone(), streams.rng(0), SimulationOptions::default());
    let mut y = vec![0.0; m.dimension];
    while chain.time() < horizon {
        let tau = chain.holding_time_until(horizon)?;
        let t0 = chain.time();
        let lo = burn_in.max(t0);
        let hi = horizon.min(t0 + tau);
        if hi > lo && f != StationarityFunction::Constant {
            let (x, v) = (chain.state().x(), chain.state().v());
            let ray = m.rate.ray(x, v)?;
            let mut cuts: Vec<f64> = vec![lo, hi];
            cuts.extend(ray.starts.iter().map(|s| t0 + s).filter(|t| *t > lo && *t < hi));
            let first = ((lo - burn_in) / width).floor() as usize + 1;
            cuts.extend((first..BATCHES).map(|k| burn_in + width * k as f64).filter(|t| *t > lo && *t < hi));
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                let batch = (((0.5 * (w[0] + w[1]) - burn_in) / width) as usize).min(BATCHES - 1);
                let rate = ray.rate_at(0.5 * (w[0] + w[1]) - t0);
                let pieces = ((w[1] - w[0]) / PIECE).ceil().max(1.0) as usize;
                let h = (w[1] - w[0]) / pieces as f64;
                for i in 0..pieces {
                    let a = w[0] + h * i as f64;
                    sums[batch] += gl.integrate(a, a + h, |t| {
                        for (yk, (xk, vk)) in y.iter_mut().zip(x.iter().zip(v)) {
                            *yk = xk + vk * (t - t0);
                        }
                        f.generator(m, &y, v, rate)
                    });
                }
            }
        }
        if t0 + tau >= horizon {
            break;
        }
        chain.jump_after(tau)?;
    }
    let means: Vec<f64> = sums.iter().map(|s| s / width).collect();
    let mean = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(StationarityReport {
        function: f,
        mean,
        stderr: (var / BATCHES as f64).sqrt(),
        burn_in,
        horizon,
        batches: BATCHES,
        jumps: chain.jumps(),
    })
}
