//! The Lyapunov function `H(x, v) = e^{α|x|}(a + φ(x·v/|x|))` and its drift.
//!
//! Writing `r = x·v/|x|`, the generator splits as
//! `LH = e^{α|x|}(A₁ + A₂ + A₃)` with
//! `A₁ = α r (a + φ(r))`, `A₂ = φ'(r)(|v|² - r²)/|x|` and
//! `A₃ = λ(x, v) ∫ (φ(r') - φ(r)) Q(x, v, dv')`, `r' = x·v'/|x|`.

use rand::Rng;
use serde::Serialize;

use crate::assumptions::{a_interval, alpha_interval, theta1_interval, AssumptionConstants};
use crate::dynamics::{open_unit, JumpChain, SimulationOptions};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::Model;
use crate::quadrature::GaussLegendre;
use crate::rng::Streams;
use crate::state::{dot, norm, ratio, State};

/// C¹ nondecreasing shape function: `θ` on `[-1, -θ₁]`, `0` on `[0, 1]`,
/// and the cubic Hermite interpolant in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiFunction {
    pub theta1: f64,
    /// `sup |φ'|`, attained inside `(-θ₁, 0)`.
    pub m: f64,
}

impl PhiFunction {
    pub fn new(theta1: f64) -> Result<Self> {
        if !(theta1 > 0.0 && theta1 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "theta1 = {theta1} must lie in (0, 1)"
            )));
        }
        // φ'(θ) = (1 - t)(3t + 1) with t = (θ + θ₁)/θ₁ peaks at t = 1/3
        Ok(Self { theta1, m: 4.0 / 3.0 })
    }

    pub fn value(&self, theta: f64) -> f64 {
        if theta <= -self.theta1 {
            theta
        } else if theta >= 0.0 {
            0.0
        } else {
            let t = (theta + self.theta1) / self.theta1;
            -self.theta1 * (t - 1.0) * (t - 1.0) * (t + 1.0)
        }
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        if theta <= -self.theta1 {
            1.0
        } else if theta >= 0.0 {
            0.0
        } else {
            let t = (theta + self.theta1) / self.theta1;
            (1.0 - t) * (3.0 * t + 1.0)
        }
    }

    /// `∫_{-1}^{1} φ(θ) dθ = θ₁²/12 - 1/2`.
    pub fn integral(&self) -> f64 {
        self.theta1 * self.theta1 / 12.0 - 0.5
    }

    pub fn breakpoints(&self) -> [f64; 2] {
        [-self.theta1, 0.0]
    }
}

pub fn make_phi(theta1: f64) -> Result<PhiFunction> {
    PhiFunction::new(theta1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovParams {
    pub theta1: f64,
    pub alpha: f64,
    pub a: f64,
    pub phi: PhiFunction,
    /// Drift radius, when the parameters come from admissible constants.
    pub radius: Option<f64>,
    /// Measured drift rate, once [`drift_rate`] has run.
    pub eta: Option<f64>,
}

impl LyapunovParams {
    /// Parameters without reference to any assumption constants.
    pub fn free(theta1: f64, alpha: f64, a: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(a > 1.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need alpha > 0 and a > 1, got alpha = {alpha}, a = {a}"
            )));
        }
        Ok(Self {
            theta1,
            alpha,
            a,
            phi: PhiFunction::new(theta1)?,
            radius: None,
            eta: None,
        })
    }

    /// Parameters inside the admissible intervals of `c`, with the drift radius.
    pub fn certified(c: &AssumptionConstants, theta1: f64, alpha: f64, a: f64) -> Result<Self> {
        let outside = |name: &str, x: f64, lo: f64, hi: f64| {
            Err(Error::Infeasible(format!(
                "{name} = {x} lies outside its admissible interval ({lo}, {hi})"
            )))
        };
        let t = theta1_interval(c)?;
        if !t.contains(theta1) {
            return outside("theta1", theta1, t.lo, t.hi);
        }
        let al = alpha_interval(c, theta1)?;
        if !al.contains(alpha) {
            return outside("alpha", alpha, al.lo, al.hi);
        }
        let ai = a_interval(c, theta1, alpha)?;
        if !ai.contains(a) {
            return outside("a", a, ai.lo, ai.hi);
        }
        let mut p = Self::free(theta1, alpha, a)?;
        p.radius = Some(drift_radius(c, theta1, alpha, a, p.phi.m)?);
        Ok(p)
    }

    /// Midpoint of the `θ₁` interval, then of the `α` interval at that `θ₁`,
    /// then of the `a` interval at that `α`.
    pub fn from_midpoints(c: &AssumptionConstants) -> Result<Self> {
        let theta1 = theta1_interval(c)?.midpoint();
        let alpha = alpha_interval(c, theta1)?.midpoint();
        let a = a_interval(c, theta1, alpha)?.midpoint();
        Self::certified(c, theta1, alpha, a)
    }

    /// `inf H = a - 1`, approached near the origin with inward velocity.
    pub fn infimum(&self) -> f64 {
        self.a - 1.0
    }
}

/// `H(x, v)`; equal to `a` at the origin.
pub fn lyapunov_value(p: &LyapunovParams, s: &State) -> f64 {
    (p.alpha * s.radius()).exp() * (p.a + p.phi.value(s.ratio()))
}

/// How the kernel integral in `A₃` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelIntegral {
    /// Gauss–Legendre of the given order on each smooth piece of the law of
    /// `x·v'/|x|` (closed form for the uniform kernel in one dimension).
    Quadrature { order: usize },
    /// Sample mean of kernel draws, with its standard error.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for KernelIntegral {
    fn default() -> Self {
        KernelIntegral::Quadrature { order: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorTerms {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Standard error of `a3`; zero for deterministic quadrature.
    pub a3_stderr: f64,
    /// `a + φ(r)`, so that `LH/H = (a1 + a2 + a3)/weight`.
    pub weight: f64,
}

impl GeneratorTerms {
    pub fn sum(&self) -> f64 {
        self.a1 + self.a2 + self.a3
    }

    pub fn drift_ratio(&self) -> f64 {
        self.sum() / self.weight
    }
}

/// `E[φ(x·v'/|x|)]` under `Q(x, v, ·)`, with a standard error.
pub fn kernel_phi_mean(m: &Model, phi: &PhiFunction, s: &State, how: KernelIntegral) -> Result<(f64, f64)> {
    let value = match how {
        KernelIntegral::Quadrature { order } => {
            if m.dimension == 1 && m.kernel == KernelSpec::Uniform {
                (0.5 * phi.integral(), 0.0)
            } else {
                let gl = GaussLegendre::cached(order);
                let law = m.kernel.ratio_law(s.x(), s.v());
                (law.expect(gl, &phi.breakpoints(), |u| phi.value(u)), 0.0)
            }
        }
        KernelIntegral::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidArgument("need at least two kernel samples".into()));
            }
            let mut rng = Streams::new(seed).rng(0);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..samples {
                let f = phi.value(ratio(s.x(), &m.kernel.sample(s.x(), s.v(), &mut rng)));
                sum += f;
                sq += f * f;
            }
            let n = samples as f64;
            let mean = sum / n;
            let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (mean, (var / n).sqrt())
        }
    };
    if !value.0.is_finite() {
        return Err(Error::Quadrature(format!("non-finite kernel integral at {:?}", s)));
    }
    Ok(value)
}

/// The three terms of `LH e^{-α|x|}` at a state with `x ≠ 0`.
pub fn generator_terms(m: &Model, p: &LyapunovParams, s: &State, how: KernelIntegral) -> Result<GeneratorTerms> {
    let radius = s.radius();
    if radius == 0.0 {
        return Err(Error::Domain("the generator of H needs x != 0".into()));
    }
    let r = s.ratio();
    let phi_r = p.phi.value(r);
    let speed2 = dot(s.v(), s.v());
    let (mean, se) = kernel_phi_mean(m, &p.phi, s, how)?;
    let lambda = m.rate.value(s.x(), s.v())?;
    Ok(GeneratorTerms {
        a1: p.alpha * r * (p.a + phi_r),
        a2: p.phi.derivative(r) * (speed2 - r * r).max(0.0) / radius,
        a3: lambda * (mean - phi_r),
        a3_stderr: lambda * se,
        weight: p.a + phi_r,
    })
}

/// `LH(x, v)`.
pub fn generator_apply(m: &Model, p: &LyapunovParams, s: &State, how: KernelIntegral) -> Result<f64> {
    let terms = generator_terms(m, p, s, how)?;
    Ok((p.alpha * s.radius()).exp() * terms.sum())
}

/// `LH/H`, computed without the exponential factor.
pub fn drift_ratio(m: &Model, p: &LyapunovParams, s: &State, how: KernelIntegral) -> Result<f64> {
    Ok(generator_terms(m, p, s, how)?.drift_ratio())
}

/// The radius beyond which the drift inequality holds: the largest of `Δ`
/// and four terms `m/(…)` whose denominators are positive inside the
/// admissible intervals.
pub fn drift_radius(c: &AssumptionConstants, theta1: f64, alpha: f64, a: f64, m: f64) -> Result<f64> {
    let pt = c.p_theta0();
    let denominators = [
        ("alpha theta1 (a - 1) - lambda_max", alpha * theta1 * (a - 1.0) - c.lambda_max),
        ("lambda_min (p theta0 - theta1)", c.lambda_min * (pt - theta1)),
        ("p theta0 lambda_min - alpha theta_star a", pt * c.lambda_min - alpha * c.theta_star * a),
        ("p theta0 beta lambda_max - alpha a", pt * c.beta * c.lambda_max - alpha * a),
    ];
    let mut radius = c.delta;
    for (name, den) in denominators {
        if !(den > 0.0) {
            return Err(Error::Infeasible(format!(
                "{name} = {den} is not positive; the parameters lie outside their intervals"
            )));
        }
        radius = radius.max(m / den);
    }
    Ok(radius)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftPoint {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `LH/H` at the point.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub radius: f64,
    pub points: usize,
    pub design: String,
    /// `min(-LH/H)` over the sample.
    pub eta_hat: f64,
    pub worst: DriftPoint,
    /// Sampled points where `LH > 0`.
    pub counterexamples: Vec<DriftPoint>,
    /// `η̂ > 0`, with no counterexample.
    pub certified: bool,
    /// Every sampled point, in sample order.
    #[serde(skip)]
    pub sample: Vec<DriftPoint>,
}

/// Draws one state of the drift sample design around radius `radius`.
fn design_state<R: Rng + ?Sized>(dim: usize, radius: f64, i: usize, rng: &mut R) -> State {
    let rho = radius * (1.0 + 3.0 * open_unit(rng));
    let dir = unit_vector(dim, rng);
    let x: Vec<f64> = dir.iter().map(|c| c * rho).collect();
    let v = if i % 2 == 0 {
        unit_vector(dim, rng)
    } else {
        crate::kernel::uniform_ball(dim, rng)
    };
    State::from_parts_unchecked(x, v)
}

pub(crate) fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let n = norm(&g);
        if n > 0.0 {
            return g.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Empirical drift rate `η̂ = min(-LH/H)` over `n_points` states with
/// `|x|` uniform on `(R, 4R]`, uniform directions, and velocities
/// alternately uniform on the unit sphere and in the unit ball.
pub fn drift_rate(
    m: &Model,
    p: &LyapunovParams,
    n_points: usize,
    how: KernelIntegral,
    streams: Streams,
) -> Result<DriftReport> {
    let radius = p
        .radius
        .ok_or_else(|| Error::InvalidArgument("drift_rate needs certified parameters with a radius".into()))?;
    if n_points == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    let points = streams.map(n_points, |i, rng| -> Result<DriftPoint> {
        let s = design_state(m.dimension, radius, i, rng);
        let ratio = drift_ratio(m, p, &s, how)?;
        let (x, v) = s.into_parts();
        Ok(DriftPoint { x, v, ratio })
    });
    let points: Vec<DriftPoint> = points.into_iter().collect::<Result<_>>()?;
    let worst = points
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .cloned()
        .expect("nonempty sample");
    let counterexamples: Vec<DriftPoint> = points.iter().filter(|q| q.ratio > 0.0).cloned().collect();
    let eta_hat = -worst.ratio;
    Ok(DriftReport {
        radius,
        points: n_points,
        design: format!(
            "|x| uniform on ({radius}, {}], direction uniform on the sphere, v alternately uniform on the unit sphere and in the unit ball",
            4.0 * radius
        ),
        eta_hat,
        certified: eta_hat > 0.0 && counterexamples.is_empty(),
        worst,
        counterexamples,
        sample: points,
    })
}

/// The bound `E[e^{ητ}] ≤ H(x, v)` for the hitting time `τ` of `B(1)`.
pub fn hitting_moment_bound(p: &LyapunovParams, s: &State) -> f64 {
    lyapunov_value(p, s)
}

/// Estimate of `(E[H(X_h, V_h)] - H(x, v))/h` from `n` exact simulations
/// over `[0, h]`, with its standard error.
pub fn finite_difference_generator(
    m: &Model,
    p: &LyapunovParams,
    s: &State,
    h: f64,
    n: usize,
    streams: Streams,
) -> Result<(f64, f64)> {
    let h0 = lyapunov_value(p, s);
    let diffs = streams.map(n, |_, rng| -> Result<f64> {
        let mut chain = JumpChain::new(m, s.clone(), rng.clone(), SimulationOptions::default());
        loop {
            let tau = chain.next_holding_time()?;
            if chain.time() + tau > h {
                let end = crate::dynamics::flow(chain.state(), h - chain.time());
                return Ok(lyapunov_value(p, &end) - h0);
            }
            chain.jump_after(tau)?;
        }
    });
    let diffs: Vec<f64> = diffs.into_iter().collect::<Result<_>>()?;
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok((mean / h, (var / nf).sqrt() / h))
}
