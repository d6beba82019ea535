//! Checks of the ergodicity assumptions and the admissible Lyapunov constants.
//!
//! The d-dimensional route needs
//! * H1: `λ ≥ λ_min > 0` everywhere;
//! * H2: `λ_max = sup{λ(x, v) : x·v ≤ 0} < ∞`;
//! * H3: `Q(x, v, {x·v'/|x| ≤ -θ₀}) ≥ p` for all `x ≠ 0`;
//! * H4: `λ ≥ βλ_max` on `{x·v/|x| ≥ θ_*, |x| ≥ Δ}`, with
//!   `θ_* < (pθ₀)²λ_min/λ_max` and `β > 1/(pθ₀)²`.
//!
//! The one-dimensional route needs a position-free kernel with a density
//! bounded below (A1), joint symmetry `λ(x, v) = λ(-x, -v)` (A2), a positive
//! lower rate bound with `sup{λ(x, v) : x ≥ 0, v ≤ 0} < ∞` (A3), and the
//! contraction condition checked in [`crate::onedim`] (A4).
//!
//! For every built-in rate family the infima and suprema are exact: each
//! rate is constant on finitely many cells of `(|x|, x·v/|x|)` (or of the
//! signed `(x, v)` plane), and one probe per cell and per cell boundary
//! attains every value.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::rate::{Probe, RateSpec};
use crate::rng::Streams;
use crate::state::{dot, ratio};

/// Offset used to read the rate just across the `x·v = 0` boundary.
const BOUNDARY_NUDGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub p: f64,
    pub theta0: f64,
    pub theta_star: f64,
    pub beta: f64,
    pub delta: f64,
}

impl AssumptionConstants {
    pub fn p_theta0(&self) -> f64 {
        self.p * self.theta0
    }

    /// Checks every H4 side condition, naming the first one that fails.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Infeasible(m));
        let c = self;
        if !(c.lambda_min > 0.0) {
            return fail(format!("lambda_min = {} must be positive", c.lambda_min));
        }
        if !(c.lambda_min <= c.lambda_max && c.lambda_max.is_finite()) {
            return fail(format!(
                "need lambda_min <= lambda_max < inf, got {} and {}",
                c.lambda_min, c.lambda_max
            ));
        }
        if !(c.p > 0.0 && c.p <= 1.0) {
            return fail(format!("p = {} must lie in (0, 1]", c.p));
        }
        if !(c.theta0 > 0.0 && c.theta0 <= 1.0) {
            return fail(format!("theta0 = {} must lie in (0, 1]", c.theta0));
        }
        if !(c.delta > 0.0 && c.delta.is_finite()) {
            return fail(format!("delta = {} must be positive", c.delta));
        }
        let pt2 = c.p_theta0().powi(2);
        let theta_cap = pt2 * c.lambda_min / c.lambda_max;
        if !(c.theta_star >= 0.0 && c.theta_star < theta_cap) {
            return fail(format!(
                "theta_star = {} violates 0 <= theta_star < (p theta0)^2 lambda_min / lambda_max = {}",
                c.theta_star, theta_cap
            ));
        }
        if !(c.beta > 1.0 / pt2) {
            return fail(format!(
                "beta = {} violates beta > 1/(p theta0)^2 = {}",
                c.beta,
                1.0 / pt2
            ));
        }
        Ok(())
    }
}

/// Constants as supplied by a user; missing rate bounds and `p` are filled
/// in from the exact checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialConstants {
    #[serde(default)]
    pub lambda_min: Option<f64>,
    #[serde(default)]
    pub lambda_max: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    pub theta0: f64,
    pub theta_star: f64,
    pub beta: f64,
    pub delta: f64,
}

impl PartialConstants {
    pub fn complete(&self, m: &Model) -> Result<AssumptionConstants> {
        let (lambda_min, lambda_max) = match (self.lambda_min, self.lambda_max) {
            (Some(a), Some(b)) => (a, b),
            (lo, hi) => match check_h1_h2(m) {
                RateBoundsReport::Certified(b) => {
                    (lo.unwrap_or(b.lambda_min), hi.unwrap_or(b.lambda_max))
                }
                other => return Err(Error::Infeasible(other.describe())),
            },
        };
        let p = match self.p {
            Some(p) => p,
            None => check_h3(m, self.theta0)?.p,
        };
        Ok(AssumptionConstants {
            lambda_min,
            lambda_max,
            p,
            theta0: self.theta0,
            theta_star: self.theta_star,
            beta: self.beta,
            delta: self.delta,
        })
    }
}

/// An open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn nonempty(self, name: &str, why: &str) -> Result<Self> {
        if self.is_empty() {
            Err(Error::Infeasible(format!(
                "{name} interval ({}, {}) is empty: {why}",
                self.lo, self.hi
            )))
        } else {
            Ok(self)
        }
    }
}

/// The admissible `θ₁` interval, with the `α` interval at the midpoint `θ₁`
/// and the `a` interval at the midpoint `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantIntervals {
    pub theta1: Interval,
    pub alpha: Interval,
    pub a: Interval,
}

impl ConstantIntervals {
    /// `(θ₁, α, a)` chosen at successive midpoints.
    pub fn midpoints(&self) -> (f64, f64, f64) {
        (self.theta1.midpoint(), self.alpha.midpoint(), self.a.midpoint())
    }
}

pub fn theta1_interval(c: &AssumptionConstants) -> Result<Interval> {
    c.validate()?;
    let pt = c.p_theta0();
    Interval {
        lo: (c.theta_star * c.lambda_max / (pt * c.lambda_min)).max(1.0 / (pt * c.beta)),
        hi: pt,
    }
    .nonempty("theta1", "needs theta_star lambda_max/(p theta0 lambda_min) < p theta0 and beta > 1/(p theta0)^2")
}

/// `α` interval for a given `θ₁`; the `θ_*` term is dropped when `θ_* = 0`.
pub fn alpha_interval(c: &AssumptionConstants, theta1: f64) -> Result<Interval> {
    let pt = c.p_theta0();
    let drift = c.lambda_max / theta1;
    let first = if c.theta_star == 0.0 {
        f64::INFINITY
    } else {
        pt * c.lambda_min / c.theta_star - drift
    };
    let second = pt * c.beta * c.lambda_max - drift;
    Interval {
        lo: 0.0,
        hi: first.min(second),
    }
    .nonempty("alpha", "theta1 lies outside its admissible interval")
}

/// `a` interval for given `θ₁, α`; the `θ_*` term is dropped when `θ_* = 0`.
pub fn a_interval(c: &AssumptionConstants, theta1: f64, alpha: f64) -> Result<Interval> {
    let pt = c.p_theta0();
    let first = if c.theta_star == 0.0 {
        f64::INFINITY
    } else {
        pt * c.lambda_min / (alpha * c.theta_star)
    };
    Interval {
        lo: 1.0 + c.lambda_max / (alpha * theta1),
        hi: first.min(pt * c.beta * c.lambda_max / alpha),
    }
    .nonempty("a", "alpha lies outside its admissible interval")
}

pub fn admissible_intervals(c: &AssumptionConstants) -> Result<ConstantIntervals> {
    let theta1 = theta1_interval(c)?;
    let alpha = alpha_interval(c, theta1.midpoint())?;
    let a = a_interval(c, theta1.midpoint(), alpha.midpoint())?;
    Ok(ConstantIntervals { theta1, alpha, a })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBounds {
    pub lambda_min: f64,
    /// Supremum over `{x·v ≤ 0}` with `x·v = 0` on the non-positive side.
    pub lambda_max: f64,
    /// The same supremum if rates on `x·v = 0` took their outward value.
    pub lambda_max_outward_boundary: f64,
    /// The two boundary conventions give different `λ_max`.
    pub boundary_sensitive: bool,
    pub argmin: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RateBoundsReport {
    Certified(RateBounds),
    Violation {
        assumption: String,
        detail: String,
        witness: Option<Vec<Vec<f64>>>,
    },
    CannotCertify {
        reason: String,
    },
}

impl RateBoundsReport {
    pub fn bounds(&self) -> Option<&RateBounds> {
        match self {
            RateBoundsReport::Certified(b) => Some(b),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RateBoundsReport::Certified(b) => {
                format!("lambda_min = {}, lambda_max = {}", b.lambda_min, b.lambda_max)
            }
            RateBoundsReport::Violation {
                assumption, detail, ..
            } => format!("{assumption} violated: {detail}"),
            RateBoundsReport::CannotCertify { reason } => format!("cannot certify: {reason}"),
        }
    }
}

fn bounded_table(rate: &RateSpec) -> bool {
    matches!(rate, RateSpec::Tabulated(t) if t.has_bounded_support())
}

fn probe_value(rate: &RateSpec, p: &Probe) -> f64 {
    rate.value(&p.x, &p.v).expect("probes lie inside the rate domain")
}

/// The rate just outward of `x·v = 0` at a probe on that boundary.
fn outward_value(rate: &RateSpec, p: &Probe) -> f64 {
    let mut x = p.x.clone();
    if x.iter().all(|c| *c == 0.0) {
        x[0] = BOUNDARY_NUDGE;
    }
    let r = crate::state::norm(&x);
    let v: Vec<f64> = p
        .v
        .iter()
        .zip(&x)
        .map(|(vk, xk)| vk + BOUNDARY_NUDGE * xk / r)
        .collect();
    rate.value(&x, &v).expect("probes lie inside the rate domain")
}

fn witness(p: &Probe) -> Vec<Vec<f64>> {
    vec![p.x.clone(), p.v.clone()]
}

/// H1 and H2 by exact enumeration of the rate cells.
pub fn check_h1_h2(m: &Model) -> RateBoundsReport {
    if bounded_table(&m.rate) {
        return RateBoundsReport::CannotCertify {
            reason: "tabulated rate is undefined beyond its last radius edge".into(),
        };
    }
    let probes = m.rate.probes(m.dimension, &[], &[]);
    let mut min = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut max_inward = f64::NEG_INFINITY;
    let mut max_outward_boundary = f64::NEG_INFINITY;
    for p in &probes {
        let val = probe_value(&m.rate, p);
        if val < min {
            min = val;
            argmin = witness(p);
        }
        let xv = dot(&p.x, &p.v);
        if xv <= 0.0 {
            max_inward = max_inward.max(val);
        }
        if xv < 0.0 {
            max_outward_boundary = max_outward_boundary.max(val);
        } else if xv == 0.0 {
            max_outward_boundary = max_outward_boundary.max(outward_value(&m.rate, p));
        }
    }
    if !(min > 0.0) {
        return RateBoundsReport::Violation {
            assumption: "H1".into(),
            detail: format!("the rate reaches {min}"),
            witness: Some(argmin),
        };
    }
    if !max_inward.is_finite() {
        return RateBoundsReport::Violation {
            assumption: "H2".into(),
            detail: "unbounded rate on {x·v <= 0}".into(),
            witness: None,
        };
    }
    RateBoundsReport::Certified(RateBounds {
        lambda_min: min,
        lambda_max: max_inward,
        lambda_max_outward_boundary: max_outward_boundary,
        boundary_sensitive: max_inward != max_outward_boundary,
        argmin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum H3Method {
    Exact,
    /// One-sided Clopper–Pearson bound at the given confidence level.
    MonteCarlo { samples: usize, level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H3Report {
    pub theta0: f64,
    /// Infimum (or lower confidence bound) of the inward mass over `x ≠ 0`.
    pub p: f64,
    pub method: H3Method,
    /// A state attaining the infimum.
    pub witness: Vec<Vec<f64>>,
}

/// States covering every case of the built-in kernels: both half-lines in
/// one dimension, and radial velocities on each side of `0` and `±θ₀`.
fn h3_states(dim: usize, theta0: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let xs: Vec<f64> = if dim == 1 { vec![1.0, -1.0] } else { vec![1.0] };
    let mut rs = vec![-1.0, -theta0, -0.5 * theta0, 0.0, 0.5 * theta0, theta0, 0.5 * (1.0 + theta0), 1.0];
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let mut out = Vec::new();
    for &s in &xs {
        for &r in &rs {
            let mut x = vec![0.0; dim];
            let mut v = vec![0.0; dim];
            x[0] = s;
            v[0] = s * r;
            out.push((x, v));
        }
    }
    out
}

/// Exact H3 mass `inf_{x ≠ 0, v} Q(x, v, {x·v'/|x| ≤ -θ₀})`.
pub fn check_h3(m: &Model, theta0: f64) -> Result<H3Report> {
    check_theta0(theta0)?;
    let mut best = (f64::INFINITY, Vec::new());
    for (x, v) in h3_states(m.dimension, theta0) {
        let mass = m.kernel.ratio_law(&x, &v).mass_le(-theta0);
        if mass < best.0 {
            best = (mass, vec![x, v]);
        }
    }
    Ok(H3Report {
        theta0,
        p: best.0,
        method: H3Method::Exact,
        witness: best.1,
    })
}

/// H3 by sampling the kernel: the minimum over the state grid of a 99%
/// lower confidence bound on the inward mass.
pub fn check_h3_monte_carlo(
    m: &Model,
    theta0: f64,
    samples: usize,
    streams: Streams,
) -> Result<H3Report> {
    check_theta0(theta0)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let level = 0.99;
    let states = h3_states(m.dimension, theta0);
    let bounds = streams.map(states.len(), |i, rng| {
        let (x, v) = &states[i];
        let hits = (0..samples)
            .filter(|_| ratio(x, &m.kernel.sample(x, v, rng)) <= -theta0)
            .count();
        clopper_pearson_lower(hits, samples, 1.0 - level)
    });
    let (i, p) = bounds
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty state grid");
    Ok(H3Report {
        theta0,
        p,
        method: H3Method::MonteCarlo { samples, level },
        witness: vec![states[i].0.clone(), states[i].1.clone()],
    })
}

fn clopper_pearson_lower(k: usize, n: usize, alpha: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    Beta::new(k as f64, (n - k + 1) as f64)
        .expect("positive shape parameters")
        .inverse_cdf(alpha)
}

fn check_theta0(theta0: f64) -> Result<()> {
    if theta0 > 0.0 && theta0 <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("theta0 = {theta0} must lie in (0, 1]")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H4Report {
    pub holds: bool,
    /// Infimum of the rate over `{x·v/|x| ≥ θ_*, |x| ≥ Δ}`.
    pub infimum: f64,
    pub required: f64,
    /// A state where the rate falls short of `βλ_max`.
    pub witness: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// H4 by exact enumeration over the region `{x·v/|x| ≥ θ_*, |x| ≥ Δ}`.
pub fn check_h4(m: &Model, c: &AssumptionConstants) -> H4Report {
    let required = c.beta * c.lambda_max;
    if bounded_table(&m.rate) {
        return H4Report {
            holds: false,
            infimum: f64::NAN,
            required,
            witness: None,
            note: Some("tabulated rate is undefined on part of the region".into()),
        };
    }
    let mut inf = f64::INFINITY;
    let mut arg = None;
    for p in m.rate.probes(m.dimension, &[c.delta], &[c.theta_star]) {
        if crate::state::norm(&p.x) >= c.delta && ratio(&p.x, &p.v) >= c.theta_star {
            let val = probe_value(&m.rate, &p);
            if val < inf {
                inf = val;
                arg = Some(witness(&p));
            }
        }
    }
    let holds = inf >= required;
    H4Report {
        holds,
        infimum: inf,
        required,
        witness: if holds { None } else { arg },
        note: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A1Report {
    pub holds: bool,
    pub q_min: Option<f64>,
    pub detail: String,
}

/// A1: a position-free kernel whose density against counting plus Lebesgue
/// measure is bounded below on its support.
pub fn check_a1(m: &Model) -> A1Report {
    if m.dimension != 1 {
        return A1Report {
            holds: false,
            q_min: None,
            detail: "the one-dimensional route needs d = 1".into(),
        };
    }
    match m.kernel.q_min_1d() {
        Some(q) if q > 0.0 => A1Report {
            holds: true,
            q_min: Some(q),
            detail: "density bounded below on the support".into(),
        },
        Some(q) => A1Report {
            holds: false,
            q_min: Some(q),
            detail: "the kernel density vanishes somewhere on its support".into(),
        },
        None => A1Report {
            holds: false,
            q_min: None,
            detail: "the kernel depends on position".into(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A2Report {
    pub holds: bool,
    pub symmetric_support: bool,
    pub symmetric_rate: bool,
    pub witness: Option<Vec<f64>>,
}

/// A2: symmetric velocity support and `λ(x, v) = λ(-x, -v)`. Polar rates
/// are symmetric by construction; other rates are compared on every cell
/// probe plus a uniform `grid × grid` lattice over `[-10, 10] × [-1, 1]`.
pub fn check_a2_symmetry(m: &Model, grid: usize) -> A2Report {
    let symmetric_support = m.kernel.symmetric_support_1d();
    let mut witness = None;
    if m.dimension == 1 && !m.rate.is_polar() {
        let mut pts: Vec<(f64, f64)> = m
            .rate
            .probes(1, &[], &[])
            .into_iter()
            .map(|p| (p.x[0], p.v[0]))
            .collect();
        let g = grid.max(2);
        for i in 0..g {
            for j in 0..g {
                let x = -10.0 + 20.0 * i as f64 / (g - 1) as f64;
                let v = -1.0 + 2.0 * j as f64 / (g - 1) as f64;
                pts.push((x, v));
            }
        }
        witness = pts.into_iter().find_map(|(x, v)| {
            let a = m.rate.value(&[x], &[v]).ok()?;
            let b = m.rate.value(&[-x], &[-v]).ok()?;
            (a != b).then(|| vec![x, v])
        });
    }
    let symmetric_rate = witness.is_none();
    A2Report {
        holds: m.dimension == 1 && symmetric_support && symmetric_rate,
        symmetric_support,
        symmetric_rate,
        witness,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A3Report {
    pub holds: bool,
    pub lambda_min: f64,
    /// `sup{λ(x, v) : x ≥ 0, v ≤ 0}`.
    pub inward_sup: f64,
}

/// A3: `λ ≥ λ_min > 0` and a finite rate for `x ≥ 0, v ≤ 0`.
pub fn check_a3(m: &Model) -> Result<A3Report> {
    if m.dimension != 1 {
        return Err(Error::InvalidModel("A3 concerns one-dimensional models".into()));
    }
    if bounded_table(&m.rate) {
        return Err(Error::Infeasible(
            "tabulated rate is undefined beyond its last radius edge".into(),
        ));
    }
    let mut lambda_min = f64::INFINITY;
    let mut inward_sup = f64::NEG_INFINITY;
    for p in m.rate.probes(1, &[], &[]) {
        let val = probe_value(&m.rate, &p);
        lambda_min = lambda_min.min(val);
        if p.x[0] >= 0.0 && p.v[0] <= 0.0 {
            inward_sup = inward_sup.max(val);
        }
    }
    Ok(A3Report {
        holds: lambda_min > 0.0 && inward_sup.is_finite(),
        lambda_min,
        inward_sup,
    })
}

/// Draws a random constant set satisfying every side condition.
pub fn random_feasible_constants<R: Rng + ?Sized>(rng: &mut R) -> AssumptionConstants {
    let lambda_min = 0.1 + 2.0 * rng.random::<f64>();
    let lambda_max = lambda_min * (1.0 + 3.0 * rng.random::<f64>());
    let p = 0.05 + 0.95 * rng.random::<f64>();
    let theta0 = 0.05 + 0.95 * rng.random::<f64>();
    let pt2 = (p * theta0).powi(2);
    let theta_star = if rng.random::<f64>() < 0.2 {
        0.0
    } else {
        rng.random::<f64>() * pt2 * lambda_min / lambda_max
    };
    let beta = (1.0 + 1e-3 + 5.0 * rng.random::<f64>()) / pt2;
    AssumptionConstants {
        lambda_min,
        lambda_max,
        p,
        theta0,
        theta_star,
        beta,
        delta: 0.1 + 5.0 * rng.random::<f64>(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HRouteReport {
    pub h1_h2: RateBoundsReport,
    pub h3: H3Report,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<AssumptionConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h4: Option<H4Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<ConstantIntervals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<String>,
    /// Every H assumption was evaluated and holds.
    pub certified: bool,
    /// Some H assumption was shown to fail.
    pub failed: bool,
}

/// Runs H1–H4 and the interval construction. Without constants, H4 and the
/// intervals are not evaluated and H3 is reported at `theta0_default`.
pub fn h_route(m: &Model, constants: Option<&PartialConstants>, theta0_default: f64) -> Result<HRouteReport> {
    let h1_h2 = check_h1_h2(m);
    let theta0 = constants.map(|c| c.theta0).unwrap_or(theta0_default);
    let h3 = check_h3(m, theta0)?;
    let mut report = HRouteReport {
        failed: !matches!(h1_h2, RateBoundsReport::Certified(_)) || h3.p <= 0.0,
        h1_h2,
        h3,
        constants: None,
        h4: None,
        intervals: None,
        infeasibility: None,
        certified: false,
    };
    let Some(partial) = constants else {
        return Ok(report);
    };
    let c = match partial.complete(m) {
        Ok(c) => c,
        Err(e) => {
            report.infeasibility = Some(e.to_string());
            report.failed = true;
            return Ok(report);
        }
    };
    report.constants = Some(c);
    if let Some(b) = report.h1_h2.bounds() {
        if c.lambda_min > b.lambda_min || c.lambda_max < b.lambda_max {
            report.infeasibility = Some(format!(
                "supplied rate bounds ({}, {}) are not implied by the exact ones ({}, {})",
                c.lambda_min, c.lambda_max, b.lambda_min, b.lambda_max
            ));
            report.failed = true;
        }
    }
    if c.p > report.h3.p {
        report.infeasibility = Some(format!(
            "supplied p = {} exceeds the kernel's inward mass {}",
            c.p, report.h3.p
        ));
        report.failed = true;
    }
    let h4 = check_h4(m, &c);
    report.failed |= !h4.holds;
    report.h4 = Some(h4);
    match admissible_intervals(&c) {
        Ok(iv) => report.intervals = Some(iv),
        Err(e) => {
            report.infeasibility.get_or_insert(e.to_string());
            report.failed = true;
        }
    }
    report.certified = !report.failed;
    Ok(report)
}
