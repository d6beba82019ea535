//! Post-jump velocity kernels `Q(x, v, dv')`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::state::{dot, norm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// Uniform on the unit ball (on `[-1, 1]` in one dimension).
    Uniform,
    /// Deterministic reversal `v ↦ -v`.
    Flip,
    /// One-dimensional atoms plus a flat part, independent of `(x, v)`.
    Mixture(MixtureKernel),
    /// With probability `p`, uniform on the ball restricted to
    /// `{x·v'/|x| ≤ -theta0}`; otherwise uniform on the ball.
    Restricted { p: f64, theta0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureKernel {
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousPart>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub velocity: f64,
    pub weight: f64,
}

/// Mass `weight` spread uniformly over `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPart {
    pub low: f64,
    pub high: f64,
    pub weight: f64,
}

/// Law of a scalar in `[-1, 1]`: point masses plus pieces whose density is
/// proportional to `(1 - u²)^{(d-1)/2}` (flat when `d = 1`).
#[derive(Debug, Clone, Default)]
pub struct ScalarLaw {
    pub atoms: Vec<(f64, f64)>,
    pub parts: Vec<LawPart>,
}

#[derive(Debug, Clone, Copy)]
pub struct LawPart {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
    pub dim: usize,
}

impl KernelSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(m.to_string()));
        match self {
            KernelSpec::Uniform | KernelSpec::Flip => Ok(()),
            KernelSpec::Mixture(m) => {
                if dim != 1 {
                    return bad("mixture kernels are one-dimensional");
                }
                m.validate()
            }
            KernelSpec::Restricted { p, theta0 } => {
                if !(*p >= 0.0 && *p <= 1.0) {
                    return bad("restricted kernel: p must lie in [0, 1]");
                }
                if !(*theta0 > 0.0 && *theta0 <= 1.0) {
                    return bad("restricted kernel: theta0 must lie in (0, 1]");
                }
                Ok(())
            }
        }
    }

    /// Draws `v'` from `Q(x, v, ·)`.
    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], v: &[f64], rng: &mut R) -> Vec<f64> {
        let d = x.len();
        match self {
            KernelSpec::Uniform => uniform_ball(d, rng),
            KernelSpec::Flip => v.iter().map(|c| -c).collect(),
            KernelSpec::Mixture(m) => vec![m.sample(rng)],
            KernelSpec::Restricted { p, theta0 } => {
                let r = norm(x);
                if r == 0.0 || rng.random::<f64>() >= *p {
                    return uniform_ball(d, rng);
                }
                let axis: Vec<f64> = x.iter().map(|c| c / r).collect();
                let u = sample_ball_projection_below(d, -*theta0, rng);
                let mut out: Vec<f64> = axis.iter().map(|a| a * u).collect();
                if d > 1 {
                    // orthogonal part: uniform on the (d-1)-ball of radius sqrt(1 - u²)
                    let mut g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    let proj = dot(&g, &axis);
                    for (gk, ak) in g.iter_mut().zip(&axis) {
                        *gk -= proj * ak;
                    }
                    let gn = norm(&g);
                    let rad = (1.0 - u * u).max(0.0).sqrt()
                        * rng.random::<f64>().powf(1.0 / (d - 1) as f64);
                    if gn > 0.0 {
                        for (o, gk) in out.iter_mut().zip(&g) {
                            *o += rad * gk / gn;
                        }
                    }
                }
                out
            }
        }
    }

    /// Law of the post-jump radial velocity `x·v'/|x|` (a point mass at 0
    /// when `x = 0`).
    pub fn ratio_law(&self, x: &[f64], v: &[f64]) -> ScalarLaw {
        let d = x.len();
        let r = norm(x);
        if r == 0.0 {
            return ScalarLaw::point(0.0);
        }
        match self {
            KernelSpec::Uniform => ScalarLaw::ball(d, -1.0, 1.0, 1.0),
            KernelSpec::Flip => ScalarLaw::point(-dot(x, v) / r),
            KernelSpec::Mixture(m) => m.law().reflect_if(x[0] < 0.0),
            KernelSpec::Restricted { p, theta0 } => {
                let cap = ball_cdf(d, -*theta0);
                let below = p + (1.0 - p) * cap;
                let mut law = ScalarLaw::default();
                law.push_part(-1.0, -*theta0, below, d);
                law.push_part(-*theta0, 1.0, 1.0 - below, d);
                law
            }
        }
    }

    /// Law of `v'` given the pre-jump velocity, for position-free
    /// one-dimensional kernels.
    pub fn velocity_law_1d(&self, v_prev: f64) -> Result<ScalarLaw> {
        match self {
            KernelSpec::Uniform => Ok(ScalarLaw::ball(1, -1.0, 1.0, 1.0)),
            KernelSpec::Flip => Ok(ScalarLaw::point(-v_prev)),
            KernelSpec::Mixture(m) => Ok(m.law()),
            KernelSpec::Restricted { .. } => Err(Error::InvalidModel(
                "restricted kernels depend on position; the one-dimensional velocity-chain \
                 analysis needs a position-free kernel"
                    .into(),
            )),
        }
    }

    /// Infimum over `v, v'` in the support of the one-dimensional density
    /// `q(v, v')` against counting-plus-Lebesgue measure. `None` for
    /// position-dependent kernels.
    pub fn q_min_1d(&self) -> Option<f64> {
        match self {
            KernelSpec::Uniform => Some(0.5),
            // Q(v, ·) = δ_{-v}, so q(v, v) = 0 on the support {v, -v}
            KernelSpec::Flip => Some(0.0),
            KernelSpec::Mixture(m) => Some(m.q_min()),
            KernelSpec::Restricted { .. } => None,
        }
    }

    /// Whether the one-dimensional velocity support is symmetric about 0.
    pub fn symmetric_support_1d(&self) -> bool {
        match self {
            KernelSpec::Uniform | KernelSpec::Flip | KernelSpec::Restricted { .. } => true,
            KernelSpec::Mixture(m) => m.symmetric_support(),
        }
    }
}

impl MixtureKernel {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(format!("mixture kernel: {m}")));
        let mut total = 0.0;
        for a in &self.atoms {
            if !(a.velocity.abs() <= 1.0) || !(a.weight > 0.0) {
                return bad("atoms need |velocity| <= 1 and positive weight");
            }
            total += a.weight;
        }
        if let Some(c) = &self.continuous {
            if !(c.low >= -1.0 && c.high <= 1.0 && c.low < c.high) || !(c.weight > 0.0) {
                return bad("continuous part needs -1 <= low < high <= 1 and positive weight");
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return bad("weights must sum to 1");
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u = rng.random::<f64>();
        for a in &self.atoms {
            if u < a.weight {
                return a.velocity;
            }
            u -= a.weight;
        }
        match &self.continuous {
            Some(c) => c.low + (c.high - c.low) * rng.random::<f64>(),
            None => self.atoms.last().map(|a| a.velocity).unwrap_or(0.0),
        }
    }

    fn law(&self) -> ScalarLaw {
        let mut law = ScalarLaw {
            atoms: self.atoms.iter().map(|a| (a.velocity, a.weight)).collect(),
            parts: Vec::new(),
        };
        if let Some(c) = &self.continuous {
            law.push_part(c.low, c.high, c.weight, 1);
        }
        law
    }

    fn q_min(&self) -> f64 {
        let atoms = self.atoms.iter().map(|a| a.weight);
        let flat = self.continuous.iter().map(|c| c.weight / (c.high - c.low));
        atoms.chain(flat).fold(f64::INFINITY, f64::min)
    }

    fn symmetric_support(&self) -> bool {
        let mut pos: Vec<f64> = self.atoms.iter().map(|a| a.velocity).collect();
        let mut neg: Vec<f64> = self.atoms.iter().map(|a| -a.velocity).collect();
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        let atoms_ok = pos
            .iter()
            .zip(&neg)
            .all(|(a, b)| (a - b).abs() <= 1e-12);
        let cont_ok = self
            .continuous
            .map(|c| (c.low + c.high).abs() <= 1e-12)
            .unwrap_or(true);
        atoms_ok && cont_ok
    }
}

impl ScalarLaw {
    pub fn point(u: f64) -> Self {
        Self {
            atoms: vec![(u, 1.0)],
            parts: Vec::new(),
        }
    }

    pub fn ball(dim: usize, lo: f64, hi: f64, mass: f64) -> Self {
        let mut law = Self::default();
        law.push_part(lo, hi, mass, dim);
        law
    }

    fn push_part(&mut self, lo: f64, hi: f64, mass: f64, dim: usize) {
        if mass > 0.0 && hi > lo {
            self.parts.push(LawPart { lo, hi, mass, dim });
        }
    }

    fn reflect_if(mut self, flip: bool) -> Self {
        if flip {
            for a in &mut self.atoms {
                a.0 = -a.0;
            }
            for p in &mut self.parts {
                let (lo, hi) = (-p.hi, -p.lo);
                p.lo = lo;
                p.hi = hi;
            }
        }
        self
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.parts.iter().map(|p| p.mass).sum::<f64>()
    }

    /// `P(U ≤ t)`, exact.
    pub fn mass_le(&self, t: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.0 <= t).map(|a| a.1).sum();
        let parts: f64 = self
            .parts
            .iter()
            .map(|p| {
                if t >= p.hi {
                    p.mass
                } else if t <= p.lo {
                    0.0
                } else {
                    let (f_lo, f_hi) = (ball_cdf(p.dim, p.lo), ball_cdf(p.dim, p.hi));
                    p.mass * (ball_cdf(p.dim, t) - f_lo) / (f_hi - f_lo)
                }
            })
            .sum();
        atoms + parts
    }

    /// `E[f(U)]` by Gauss–Legendre on each part, split at `breaks` where
    /// `f` may have kinks. Ball-shaped parts are integrated in the angle
    /// `u = -cos ψ`, which removes the endpoint singularity of the weight.
    pub fn expect(&self, gl: &GaussLegendre, breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut total: f64 = self.atoms.iter().map(|&(u, w)| w * f(u)).sum();
        for p in &self.parts {
            if p.dim == 1 {
                let len = p.hi - p.lo;
                total += p.mass / len * gl.integrate_split(p.lo, p.hi, breaks, &mut f);
            } else {
                let k = p.dim as i32;
                let angle = |u: f64| (-u).clamp(-1.0, 1.0).acos();
                let cuts: Vec<f64> = breaks.iter().map(|&b| angle(b)).collect();
                let (a, b) = (angle(p.lo), angle(p.hi));
                let num = gl.integrate_split(a, b, &cuts, |psi| f(-psi.cos()) * psi.sin().powi(k));
                let den = gl.integrate_split(a, b, &cuts, |psi| psi.sin().powi(k));
                total += p.mass * num / den;
            }
        }
        total
    }
}

/// `P(U ≤ u)` for `U` the first coordinate of a uniform point in the
/// `d`-dimensional unit ball.
pub fn ball_cdf(dim: usize, u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    if dim == 1 {
        return 0.5 * (u + 1.0);
    }
    let a = 0.5 * (dim as f64 + 1.0);
    let tail = 0.5 * beta_reg(a, 0.5, 1.0 - u * u);
    if u <= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// `∫_{-1}^{1} (1 - u²)^{(d-1)/2} du`.
pub fn ball_projection_normaliser(dim: usize) -> f64 {
    let d = dim as f64;
    (0.5 * std::f64::consts::PI.ln() + ln_gamma(0.5 * (d + 1.0)) - ln_gamma(0.5 * d + 1.0)).exp()
}

pub(crate) fn uniform_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    if dim == 1 {
        return vec![2.0 * rng.random::<f64>() - 1.0];
    }
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&g);
        if n > 0.0 {
            let rad = rng.random::<f64>().powf(1.0 / dim as f64);
            return g.into_iter().map(|c| c * rad / n).collect();
        }
    }
}

/// Samples the first coordinate of a uniform ball point conditioned on
/// being at most `t ≤ 0`, by rejection against the flat law on `[-1, t]`.
fn sample_ball_projection_below<R: Rng + ?Sized>(dim: usize, t: f64, rng: &mut R) -> f64 {
    let span = 1.0 + t;
    if span <= 0.0 {
        return -1.0;
    }
    if dim == 1 {
        return -1.0 + span * rng.random::<f64>();
    }
    let exponent = 0.5 * (dim as f64 - 1.0);
    let top = (1.0 - t * t).powf(exponent);
    loop {
        let u = -1.0 + span * rng.random::<f64>();
        let accept = (1.0 - u * u).powf(exponent) / top;
        if rng.random::<f64>() < accept {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_cdf_matches_closed_forms() {
        // one dimension: interval length ratio
        assert_abs_diff_eq!(ball_cdf(1, -0.5), 0.25, epsilon = 1e-15);
        // two dimensions: circular segment area over π
        for t in [0.1f64, 0.5, 0.8] {
            let seg = (t.acos() - t * (1.0 - t * t).sqrt()) / std::f64::consts::PI;
            assert_abs_diff_eq!(ball_cdf(2, -t), seg, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(ball_cdf(3, 0.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn normaliser_matches_known_values() {
        assert_abs_diff_eq!(ball_projection_normaliser(1), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ball_projection_normaliser(2), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(ball_projection_normaliser(3), 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn flip_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(KernelSpec::Flip.sample(&[1.0], &[0.3], &mut rng), vec![-0.3]);
    }

    #[test]
    fn uniform_draws_stay_in_ball_with_centered_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = KernelSpec::Uniform.sample(&[1.0], &[0.0], &mut rng);
            assert!(v[0].abs() <= 1.0);
            sum += v[0];
        }
        assert!((sum / n as f64).abs() < 0.02);
        for _ in 0..10_000 {
            let v = KernelSpec::Uniform.sample(&[1.0, 0.0, 0.0], &[0.0; 3], &mut rng);
            assert!(norm(&v) <= 1.0);
        }
    }

    #[test]
    fn restricted_kernel_puts_enough_mass_inward() {
        let k = KernelSpec::Restricted { p: 0.5, theta0: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = [1.5, -2.0];
        let xhat = [0.6, -0.8];
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let v = k.sample(&x, &[0.0, 0.0], &mut rng);
                assert!(norm(&v) <= 1.0 + 1e-12);
                dot(&v, &xhat) <= -0.5
            })
            .count();
        let frac = hits as f64 / n as f64;
        assert!(frac >= 0.5 - 0.02, "{frac}");
        let exact = k.ratio_law(&x, &[0.0, 0.0]).mass_le(-0.5);
        assert!((frac - exact).abs() < 5.0 * (exact * (1.0 - exact) / n as f64).sqrt());
    }

    #[test]
    fn ball_expectation_matches_closed_form_moment() {
        // E[U²] for the first coordinate of the uniform d-ball is 1/(d+2)
        let gl = GaussLegendre::cached(32);
        for d in 1..=5 {
            let law = ScalarLaw::ball(d, -1.0, 1.0, 1.0);
            assert_abs_diff_eq!(law.expect(gl, &[], |u| u * u), 1.0 / (d as f64 + 2.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let m = KernelSpec::Mixture(MixtureKernel {
            atoms: vec![Atom {
                velocity: 0.5,
                weight: 0.3,
            }],
            continuous: None,
        });
        assert!(m.validate(1).is_err());
        let m = KernelSpec::Mixture(MixtureKernel {
            atoms: vec![
                Atom {
                    velocity: 1.0,
                    weight: 0.25,
                },
                Atom {
                    velocity: -1.0,
                    weight: 0.25,
                },
            ],
            continuous: Some(ContinuousPart {
                low: -0.5,
                high: 0.5,
                weight: 0.5,
            }),
        });
        m.validate(1).unwrap();
        assert_eq!(m.q_min_1d(), Some(0.25));
        assert!(m.symmetric_support_1d());
        assert!(m.validate(2).is_err());
    }
}
