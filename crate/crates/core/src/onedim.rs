//! Moment bounds for the one-dimensional process through the velocity chain.
//!
//! With `vsup(v) = sup_{x>0} λ(x, v)` and `vinf(v) = inf_{x>0} λ(x, v)`,
//! `G(α, v) = vsup/(vsup - αv)` for `v < 0` and `vinf/(vinf - αv)` for
//! `v ≥ 0` bounds `E[e^{αVτ}]` for one holding time while the position stays
//! positive. A contraction `J(v', α) = ∫ G(α, v) Q(v', dv) ≤ J_* < 1`
//! then gives geometric tails for the sign-change index
//! `S = inf{n ≥ 1 : X_{T_n} X_0 ≤ 0}` and exponential moments for the
//! hitting time `Z` of the origin.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::ScalarLaw;
use crate::model::Model;
use crate::quadrature::GaussLegendre;
use crate::rate::RateSpec;

/// `vsup` and `vinf` as piecewise-constant functions of `v ∈ [-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEnvelope {
    /// Breakpoints in `v`, including `-1` and `1`.
    pub edges: Vec<f64>,
    /// `(vsup, vinf)` at each edge.
    pub at_edges: Vec<(f64, f64)>,
    /// `(vsup, vinf)` on the open gap after each edge.
    pub on_gaps: Vec<(f64, f64)>,
    /// `inf_{x>0, v∈(0,1]} λ(x, v)/v`.
    pub alpha_max: f64,
    /// Including `x = 0` in the sup/inf changes the envelope somewhere.
    pub closed_half_line_differs: bool,
}

impl RateEnvelope {
    pub fn new(rate: &RateSpec) -> Result<Self> {
        let mut edges = rate.velocity_edges_1d();
        edges.insert(0, -1.0);
        edges.push(1.0);
        let xs = rate.positive_axis_probes();
        let envelope_at = |v: f64, with_origin: bool| -> Result<(f64, f64)> {
            let mut hi = f64::NEG_INFINITY;
            let mut lo = f64::INFINITY;
            let origin = with_origin.then_some(0.0);
            for x in xs.iter().copied().chain(origin) {
                let val = rate.value(&[x], &[v])?;
                hi = hi.max(val);
                lo = lo.min(val);
            }
            Ok((hi, lo))
        };
        let mut at_edges = Vec::with_capacity(edges.len());
        let mut on_gaps = Vec::with_capacity(edges.len() - 1);
        let mut differs = false;
        for (i, &e) in edges.iter().enumerate() {
            at_edges.push(envelope_at(e, false)?);
            differs |= envelope_at(e, true)? != at_edges[i];
            if let Some(&next) = edges.get(i + 1) {
                let mid = 0.5 * (e + next);
                on_gaps.push(envelope_at(mid, false)?);
                differs |= envelope_at(mid, true)? != on_gaps[i];
            }
        }
        let mut alpha_max = f64::INFINITY;
        for (i, &e) in edges.iter().enumerate() {
            if e > 0.0 {
                alpha_max = alpha_max.min(at_edges[i].1 / e);
            }
            if let Some(&next) = edges.get(i + 1) {
                if next > 0.0 {
                    alpha_max = alpha_max.min(on_gaps[i].1 / next);
                }
            }
        }
        Ok(Self {
            edges,
            at_edges,
            on_gaps,
            alpha_max,
            closed_half_line_differs: differs,
        })
    }

    /// `(vsup(v), vinf(v))`.
    pub fn at(&self, v: f64) -> (f64, f64) {
        let i = self.edges.partition_point(|&e| e < v);
        if i < self.edges.len() && self.edges[i] == v {
            self.at_edges[i]
        } else {
            self.on_gaps[i.clamp(1, self.on_gaps.len()) - 1]
        }
    }

    pub fn vsup(&self, v: f64) -> f64 {
        self.at(v).0
    }

    pub fn vinf(&self, v: f64) -> f64 {
        self.at(v).1
    }

    /// The envelope value `G` uses at `v`: `vsup` for `v < 0`, `vinf` otherwise.
    fn level(&self, v: f64) -> f64 {
        if v < 0.0 {
            self.vsup(v)
        } else {
            self.vinf(v)
        }
    }

    /// Maximal intervals of `[lo, hi]` on which `level` is constant.
    fn level_pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
        let mut cuts: Vec<f64> = self
            .edges
            .iter()
            .copied()
            .chain(std::iter::once(0.0))
            .filter(|e| *e > lo && *e < hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut out = Vec::with_capacity(cuts.len() + 1);
        let mut a = lo;
        for b in cuts.into_iter().chain(std::iter::once(hi)) {
            out.push((a, b, self.level(0.5 * (a + b))));
            a = b;
        }
        out
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b = self.edges.clone();
        b.push(0.0);
        b
    }
}

/// `G(α, v)`.
pub fn g(alpha: f64, v: f64, env: &RateEnvelope) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::Domain(format!("alpha = {alpha} must be nonnegative")));
    }
    let c = env.level(v);
    let den = c - alpha * v;
    if !(den > 0.0) {
        return Err(Error::Domain(format!(
            "G({alpha}, {v}) undefined: alpha must stay below alpha_max = {}",
            env.alpha_max
        )));
    }
    Ok(c / den)
}

/// The constant in front of the tail bound; the same expression as `G`.
#[allow(non_snake_case)]
pub fn C(alpha: f64, v0: f64, env: &RateEnvelope) -> Result<f64> {
    g(alpha, v0, env)
}

fn require_one_dim(m: &Model) -> Result<()> {
    if m.dimension != 1 {
        return Err(Error::InvalidModel("the velocity-chain bounds need d = 1".into()));
    }
    Ok(())
}

/// `J(v', α)`: atoms summed exactly, flat parts through the logarithmic
/// antiderivative `∫ c/(c - αv) dv = -(c/α) ln(c - αv)` on each piece.
#[allow(non_snake_case)]
pub fn J(v_prev: f64, alpha: f64, m: &Model, env: &RateEnvelope) -> Result<f64> {
    require_one_dim(m)?;
    let law = m.kernel.velocity_law_1d(v_prev)?;
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for &(u, w) in &law.atoms {
        total += w * g(alpha, u, env)?;
    }
    for part in &law.parts {
        debug_assert_eq!(part.dim, 1);
        let density = part.mass / (part.hi - part.lo);
        for (lo, hi, c) in env.level_pieces(part.lo, part.hi) {
            let (d_lo, d_hi) = (c - alpha * lo, c - alpha * hi);
            if !(d_lo > 0.0 && d_hi > 0.0) {
                return Err(Error::Domain(format!(
                    "J undefined at alpha = {alpha}: alpha must stay below alpha_max = {}",
                    env.alpha_max
                )));
            }
            total += density * c / alpha * (d_lo / d_hi).ln();
        }
    }
    Ok(total)
}

/// `J(v', α)` by Gauss–Legendre of the given order on each envelope piece.
pub fn j_quadrature(v_prev: f64, alpha: f64, m: &Model, env: &RateEnvelope, order: usize) -> Result<f64> {
    require_one_dim(m)?;
    let law = m.kernel.velocity_law_1d(v_prev)?;
    let gl = GaussLegendre::cached(order);
    let mut err = None;
    let val = law.expect(gl, &env.breaks(), |v| {
        g(alpha, v, env).unwrap_or_else(|e| {
            err = Some(e);
            f64::NAN
        })
    });
    match err {
        Some(e) => Err(e),
        None => Ok(val),
    }
}

/// `∂J/∂α` at `α = 0`: `E[v/vsup(v) 1{v<0} + v/vinf(v) 1{v≥0}]`.
#[allow(non_snake_case)]
pub fn Jprime0(v_prev: f64, m: &Model, env: &RateEnvelope) -> Result<f64> {
    require_one_dim(m)?;
    let law = m.kernel.velocity_law_1d(v_prev)?;
    Ok(jprime0_of_law(&law, env))
}

fn jprime0_of_law(law: &ScalarLaw, env: &RateEnvelope) -> f64 {
    let mut total: f64 = law.atoms.iter().map(|&(u, w)| w * u / env.level(u)).sum();
    for part in &law.parts {
        let density = part.mass / (part.hi - part.lo);
        for (lo, hi, c) in env.level_pieces(part.lo, part.hi) {
            total += density * (hi * hi - lo * lo) / (2.0 * c);
        }
    }
    total
}

/// `(1/2)∫_{-1}^{1} G(α, v) dv` for the rate equal to 2 unless the radial
/// velocity is below `-1/2` (then 1/2), in closed form.
pub fn closed_form_example(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 2)")));
    }
    Ok((1.0 / (4.0 * alpha)) * ((0.5 + alpha) / (0.5 + 0.5 * alpha)).ln()
        + (1.0 / alpha) * ((2.0 + 0.5 * alpha) / (2.0 - alpha)).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneDimConstants {
    pub alpha_max: f64,
    /// Grid points `α` whose `sup_{v'} J(v', α)` stays below `j_star`,
    /// as the closed interval between the extreme ones.
    pub i_star: (f64, f64),
    pub j_star: f64,
    /// The grid minimiser of `sup_{v'} J(v', α)`.
    pub alpha_opt: f64,
}

impl OneDimConstants {
    pub fn contains(&self, alpha: f64) -> bool {
        let tol = 1e-12 * self.alpha_max.max(1.0);
        alpha >= self.i_star.0 - tol && alpha <= self.i_star.1 + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionScan {
    pub alpha_max: f64,
    /// `(α, sup_{v'} J(v', α))` on the scan grid.
    pub curve: Vec<(f64, f64)>,
    /// `None` when the supremum never drops below 1.
    pub constants: Option<OneDimConstants>,
}

impl ContractionScan {
    pub fn feasible(&self) -> bool {
        self.constants.is_some()
    }
}

/// Grid of previous velocities `v'`: 201 uniform points, the envelope edges
/// and every kernel atom reachable from them.
fn v_prev_grid(m: &Model, env: &RateEnvelope) -> Result<Vec<f64>> {
    let mut grid: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
    grid.extend(env.edges.iter().copied());
    grid.extend(env.edges.iter().map(|e| -e));
    let law = m.kernel.velocity_law_1d(0.0)?;
    grid.extend(law.atoms.iter().map(|a| a.0));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Scans `α` over `resolution` interior grid points of `(0, α_max)`, with
/// `J_* = min_α sup_{v'} J(v', α) + headroom`.
#[allow(non_snake_case)]
pub fn find_Istar_Jstar(m: &Model, resolution: usize, headroom: f64) -> Result<ContractionScan> {
    require_one_dim(m)?;
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let env = RateEnvelope::new(&m.rate)?;
    let alpha_max = env.alpha_max;
    if !(alpha_max > 0.0) {
        return Ok(ContractionScan {
            alpha_max,
            curve: Vec::new(),
            constants: None,
        });
    }
    let v_prev = v_prev_grid(m, &env)?;
    let mut curve = Vec::with_capacity(resolution);
    for k in 1..=resolution {
        let alpha = alpha_max * k as f64 / (resolution + 1) as f64;
        let mut sup = f64::NEG_INFINITY;
        for &vp in &v_prev {
            sup = sup.max(J(vp, alpha, m, &env)?);
        }
        curve.push((alpha, sup));
    }
    let (k_opt, &(alpha_opt, best)) = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("nonempty scan");
    let j_star = best + headroom;
    if !(j_star < 1.0) {
        return Ok(ContractionScan {
            alpha_max,
            curve,
            constants: None,
        });
    }
    let mut lo = k_opt;
    while lo > 0 && curve[lo - 1].1 <= j_star {
        lo -= 1;
    }
    let mut hi = k_opt;
    while hi + 1 < curve.len() && curve[hi + 1].1 <= j_star {
        hi += 1;
    }
    Ok(ContractionScan {
        alpha_max,
        constants: Some(OneDimConstants {
            alpha_max,
            i_star: (curve[lo].0, curve[hi].0),
            j_star,
            alpha_opt,
        }),
        curve,
    })
}

fn check_alpha(alpha: f64, k: &OneDimConstants) -> Result<f64> {
    let a = alpha.abs();
    if !k.contains(a) {
        return Err(Error::Domain(format!(
            "|alpha| = {a} lies outside I_* = [{}, {}]",
            k.i_star.0, k.i_star.1
        )));
    }
    Ok(a)
}

/// `e^{|α x₀|} C(|α|, ±v₀)`, reflecting the velocity when `x₀ < 0`.
fn kappa(x0: f64, v0: f64, alpha: f64, env: &RateEnvelope) -> Result<f64> {
    let v = if x0 < 0.0 { -v0 } else { v0 };
    Ok((alpha * x0).abs().exp() * C(alpha, v, env)?)
}

/// `P(S > n) ≤ e^{|αx₀|} C(|α|, v₀) J_*^{n-1}`.
#[allow(non_snake_case)]
pub fn tail_bound_S(x0: f64, v0: f64, alpha: f64, k: &OneDimConstants, n: u32, env: &RateEnvelope) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("the tail bound starts at n = 1".into()));
    }
    let a = check_alpha(alpha, k)?;
    Ok(kappa(x0, v0, a, env)? * k.j_star.powi(n as i32 - 1))
}

/// `E[e^{ηZ}] ≤ e^{|αx₀|} C(|α|, v₀) (1 - J_*)/J_*² / (1 - J_* λ_min/(λ_min - η))`.
pub fn hitting_moment_bound_1d(
    x0: f64,
    v0: f64,
    eta: f64,
    alpha: f64,
    k: &OneDimConstants,
    lambda_min: f64,
    env: &RateEnvelope,
) -> Result<f64> {
    let j = k.j_star;
    let cap = lambda_min * (1.0 - j);
    if !(eta > 0.0 && eta < cap) {
        return Err(Error::Domain(format!(
            "eta = {eta} must lie in (0, lambda_min (1 - J_*)) = (0, {cap})"
        )));
    }
    let a = check_alpha(alpha, k)?;
    let geometric = 1.0 - j * lambda_min / (lambda_min - eta);
    Ok(kappa(x0, v0, a, env)? * (1.0 - j) / (j * j) / geometric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fig1_env() -> RateEnvelope {
        RateEnvelope::new(&Model::figure1().rate).unwrap()
    }

    #[test]
    fn figure1_envelope() {
        let env = fig1_env();
        assert_eq!(env.at(-0.5), (1.0, 1.0));
        assert_eq!(env.at(0.5), (2.0, 2.0));
        // v = 0 gives x·v = 0, the non-positive branch
        assert_eq!(env.at(0.0), (1.0, 1.0));
        assert_eq!(env.alpha_max, 2.0);
        // at x = 0 the rate drops to the non-positive branch
        assert!(env.closed_half_line_differs);
    }

    #[test]
    fn g_examples() {
        let env = fig1_env();
        assert_eq!(g(0.0, 0.3, &env).unwrap(), 1.0);
        assert_eq!(g(0.7, 0.0, &env).unwrap(), 1.0);
        assert_abs_diff_eq!(g(1.0, -1.0, &env).unwrap(), 0.5, epsilon = 1e-15);
        assert!(g(2.0, 1.0, &env).is_err());
        assert_abs_diff_eq!(C(0.5, 1.0, &env).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(C(0.0, -0.4, &env).unwrap(), 1.0);
        assert_eq!(C(0.9, 0.0, &env).unwrap(), 1.0);
    }

    #[test]
    fn j_is_one_at_zero_and_flip_exceeds_one() {
        let fig = Model::figure1();
        let env = fig1_env();
        assert_eq!(J(0.3, 0.0, &fig, &env).unwrap(), 1.0);
        let tel = Model::telegraph();
        for alpha in [0.1, 0.5, 1.5] {
            let j = J(-1.0, alpha, &tel, &env).unwrap();
            assert_eq!(j, g(alpha, 1.0, &env).unwrap());
            assert!(j > 1.0);
        }
    }

    #[test]
    fn closed_form_j_matches_quadrature() {
        let fig = Model::figure1();
        let env = fig1_env();
        for alpha in [0.05, 0.4, 1.2, 1.9] {
            let closed = J(0.0, alpha, &fig, &env).unwrap();
            let quad = j_quadrature(0.0, alpha, &fig, &env, 64).unwrap();
            assert_abs_diff_eq!(closed, quad, epsilon = 1e-10);
        }
    }

    #[test]
    fn signed_velocity_example_matches_paper_closed_form() {
        let m = Model::signed_velocity_example();
        let env = RateEnvelope::new(&m.rate).unwrap();
        assert_eq!(env.alpha_max, 2.0);
        for k in 1..20 {
            let alpha = 0.1 * k as f64;
            let cf = closed_form_example(alpha).unwrap();
            assert_abs_diff_eq!(J(0.0, alpha, &m, &env).unwrap(), cf, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(closed_form_example(0.5).unwrap(), 0.955, epsilon = 5e-4);
        assert_abs_diff_eq!(closed_form_example(1.0).unwrap(), 1.018, epsilon = 5e-4);
        assert_abs_diff_eq!(closed_form_example(1e-7).unwrap(), 1.0, epsilon = 1e-6);
        assert!(closed_form_example(2.0).is_err());
    }

    #[test]
    fn jprime0_cases() {
        let fig = Model::figure1();
        let env = fig1_env();
        assert_abs_diff_eq!(Jprime0(0.0, &fig, &env).unwrap(), -0.125, epsilon = 1e-15);
        let flat = Model::new(
            1,
            RateSpec::Sign {
                lambda_minus: 1.5,
                lambda_plus: 1.5,
            },
            KernelSpec::Uniform,
        )
        .unwrap();
        let env_flat = RateEnvelope::new(&flat.rate).unwrap();
        assert_abs_diff_eq!(Jprime0(0.0, &flat, &env_flat).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn scan_classifies_examples() {
        let fig = find_Istar_Jstar(&Model::figure1(), 400, 0.0).unwrap();
        let k = fig.constants.unwrap();
        assert!(k.j_star < 1.0 && k.alpha_opt > 0.0 && k.alpha_opt < 2.0);
        let sv = find_Istar_Jstar(&Model::signed_velocity_example(), 400, 0.0).unwrap();
        let k = sv.constants.unwrap();
        assert!((k.alpha_opt - 0.41).abs() < 0.02, "{}", k.alpha_opt);
        assert!(!find_Istar_Jstar(&Model::telegraph(), 400, 0.0).unwrap().feasible());
    }

    #[test]
    fn headroom_widens_istar() {
        let tight = find_Istar_Jstar(&Model::figure1(), 200, 0.0).unwrap().constants.unwrap();
        let wide = find_Istar_Jstar(&Model::figure1(), 200, 0.005).unwrap().constants.unwrap();
        assert!(wide.i_star.0 < tight.i_star.0 && wide.i_star.1 > tight.i_star.1);
    }

    #[test]
    fn bounds_shape() {
        let env = fig1_env();
        let k = find_Istar_Jstar(&Model::figure1(), 200, 0.0).unwrap().constants.unwrap();
        let a = k.alpha_opt;
        let b1 = tail_bound_S(0.0, 0.0, a, &k, 1, &env).unwrap();
        assert_abs_diff_eq!(b1, 1.0, epsilon = 1e-15);
        let b5 = tail_bound_S(5.0, -1.0, a, &k, 5, &env).unwrap();
        let b6 = tail_bound_S(5.0, -1.0, a, &k, 6, &env).unwrap();
        assert_abs_diff_eq!(b6 / b5, k.j_star, epsilon = 1e-14);
        assert!(tail_bound_S(5.0, -1.0, a + 0.1, &k, 2, &env).is_err());

        let lmin = 1.0;
        let cap = lmin * (1.0 - k.j_star);
        let tiny = hitting_moment_bound_1d(5.0, -1.0, 1e-12, a, &k, lmin, &env).unwrap();
        let limit = (a * 5.0).exp() * C(a, -1.0, &env).unwrap() / (k.j_star * k.j_star);
        assert_abs_diff_eq!(tiny / limit, 1.0, epsilon = 1e-9);
        let mut prev = tiny;
        for i in 1..10 {
            let val = hitting_moment_bound_1d(5.0, -1.0, cap * i as f64 / 10.0, a, &k, lmin, &env).unwrap();
            assert!(val > prev);
            prev = val;
        }
        assert!(hitting_moment_bound_1d(5.0, -1.0, cap, a, &k, lmin, &env).is_err());
    }

    proptest! {
        #[test]
        fn j_is_convex_in_alpha(vp in -1.0f64..1.0, a in 0.06f64..1.8) {
            let m = Model::signed_velocity_example();
            let env = RateEnvelope::new(&m.rate).unwrap();
            let h = 0.05;
            let j = |x: f64| J(vp, x, &m, &env).unwrap();
            prop_assert!(j(a + h) - 2.0 * j(a) + j(a - h) >= -1e-12);
        }

        #[test]
        fn j_below_jstar_on_istar(vp in -1.0f64..1.0) {
            let m = Model::figure1();
            let env = RateEnvelope::new(&m.rate).unwrap();
            let k = find_Istar_Jstar(&m, 100, 0.004).unwrap().constants.unwrap();
            for t in 0..=10 {
                let a = k.i_star.0 + (k.i_star.1 - k.i_star.0) * t as f64 / 10.0;
                prop_assert!(J(vp, a, &m, &env).unwrap() <= k.j_star + 1e-12);
            }
        }
    }
}
