//! Jump-rate families that are piecewise constant along every ray `s ↦ x + v s`.
//!
//! All polar families depend on the state only through the radius `|x|` and
//! the radial velocity `x·v/|x|` (taken as 0 at the origin). The axis table
//! is a one-dimensional family indexed by the signed pair `(x, v)`.
//!
//! Because every rate is piecewise constant along rays, the integrated rate
//! `Λ(t) = ∫₀ᵗ λ(x + v s, v) ds` is a finite sum and jump times can be drawn
//! by exact inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{dot, norm, ratio};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RateSpec {
    /// `λ₋` when `x·v ≤ 0`, `λ₊` otherwise.
    Sign { lambda_minus: f64, lambda_plus: f64 },
    /// `base + boost·1{x·v/|x| ≥ theta, |x| ≥ delta}`.
    AngularThreshold {
        base: f64,
        boost: f64,
        theta: f64,
        delta: f64,
    },
    /// `c1` when `x·v/|x| ≥ threshold`, `c2` otherwise. In one dimension the
    /// radial velocity is `sgn(x)·v`.
    SignedVelocity { c1: f64, c2: f64, threshold: f64 },
    Tabulated(TabulatedRate),
    AxisTable(AxisTable),
}

/// Rate tabulated on cells of `(|x|, x·v/|x|)`.
///
/// `radius_edges` starts at 0. With one row per edge the last row extends to
/// infinity; with one row fewer the table has bounded support and the rate
/// is undefined beyond the last edge. Cells are closed on the left, except
/// the last ratio column which also contains 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedRate {
    pub radius_edges: Vec<f64>,
    pub ratio_edges: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Constant dominating bound enabling thinning-based jump sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinning_bound: Option<f64>,
}

/// One-dimensional rate tabulated on cells of the signed `(x, v)` plane.
///
/// `x_edges` and `v_edges` list interior breakpoints; cells are closed on the
/// right, `(-∞, e₁], (e₁, e₂], …, (e_k, ∞)`, so `values` has
/// `x_edges.len() + 1` rows of `v_edges.len() + 1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisTable {
    pub x_edges: Vec<f64>,
    pub v_edges: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Integrated rate along one ray, as a list of constant pieces.
#[derive(Debug, Clone)]
pub struct Ray {
    /// Piece `i` covers `[starts[i], starts[i+1])`; the last piece is unbounded.
    pub starts: Vec<f64>,
    pub rates: Vec<f64>,
    /// The rate is defined only on `[0, valid_until)`.
    pub valid_until: f64,
    exit_radius: f64,
}

impl Ray {
    /// `Λ(t)`, summing rate × overlap over the pieces.
    pub fn cumulative(&self, t: f64) -> Result<f64> {
        if t > self.valid_until {
            return Err(Error::OutsideTable {
                radius: self.exit_radius,
            });
        }
        let mut total = 0.0;
        for (i, (&start, &rate)) in self.starts.iter().zip(&self.rates).enumerate() {
            if start >= t {
                break;
            }
            let end = self.starts.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t);
            total += rate * (end - start);
        }
        Ok(total)
    }

    /// Smallest `t` with `Λ(t) = target`.
    pub fn invert(&self, target: f64) -> Result<f64> {
        let mut remaining = target;
        for (i, (&start, &rate)) in self.starts.iter().zip(&self.rates).enumerate() {
            if start >= self.valid_until {
                break;
            }
            let end = self.starts.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let mass = rate * (end - start);
            if mass >= remaining && rate > 0.0 {
                let t = start + remaining / rate;
                if t > self.valid_until {
                    break;
                }
                return Ok(t);
            }
            if end.is_infinite() {
                return Err(Error::ZeroTerminalRate);
            }
            remaining -= mass;
        }
        Err(Error::OutsideTable {
            radius: self.exit_radius,
        })
    }

    /// Rate in force at time `s` along the ray.
    pub fn rate_at(&self, s: f64) -> f64 {
        let idx = self.starts.partition_point(|&b| b <= s).saturating_sub(1);
        self.rates[idx]
    }
}

/// A candidate state used for exact enumeration over rate cells.
#[derive(Debug, Clone)]
pub(crate) struct Probe {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl RateSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let check_values = |vals: &[f64]| -> Result<()> {
            if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidModel(
                    "rate values must be finite and nonnegative".into(),
                ));
            }
            Ok(())
        };
        match self {
            RateSpec::Sign {
                lambda_minus,
                lambda_plus,
            } => check_values(&[*lambda_minus, *lambda_plus]),
            RateSpec::AngularThreshold {
                base,
                boost,
                theta,
                delta,
            } => {
                check_values(&[*base, base + boost])?;
                if !theta.is_finite() || !(delta.is_finite() && *delta > 0.0) {
                    return bad("angular threshold needs finite theta and delta > 0".into());
                }
                Ok(())
            }
            RateSpec::SignedVelocity { c1, c2, threshold } => {
                check_values(&[*c1, *c2])?;
                if !threshold.is_finite() {
                    return bad("signed-velocity threshold must be finite".into());
                }
                Ok(())
            }
            RateSpec::Tabulated(t) => t.validate(),
            RateSpec::AxisTable(t) => {
                if dim != 1 {
                    return bad("axis_table rates are one-dimensional".into());
                }
                t.validate()
            }
        }
    }

    /// `λ(x, v)` at a point.
    pub fn value(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            RateSpec::Sign {
                lambda_minus,
                lambda_plus,
            } => Ok(if dot(x, v) <= 0.0 {
                *lambda_minus
            } else {
                *lambda_plus
            }),
            RateSpec::AngularThreshold {
                base,
                boost,
                theta,
                delta,
            } => {
                let on = ratio(x, v) >= *theta && norm(x) >= *delta;
                Ok(if on { base + boost } else { *base })
            }
            RateSpec::SignedVelocity { c1, c2, threshold } => Ok(if ratio(x, v) >= *threshold {
                *c1
            } else {
                *c2
            }),
            RateSpec::Tabulated(t) => t.value(norm(x), ratio(x, v)),
            RateSpec::AxisTable(t) => Ok(t.value(x[0], v[0])),
        }
    }

    /// Whether the rate depends on `(x, v)` only through `(|x|, x·v/|x|)`.
    pub fn is_polar(&self) -> bool {
        !matches!(self, RateSpec::AxisTable(_))
    }

    pub fn thinning_bound(&self) -> Option<f64> {
        match self {
            RateSpec::Tabulated(t) => t.thinning_bound,
            _ => None,
        }
    }

    fn radius_edges(&self) -> Vec<f64> {
        match self {
            RateSpec::AngularThreshold { delta, .. } => vec![*delta],
            RateSpec::Tabulated(t) => t.radius_edges[1..].to_vec(),
            _ => Vec::new(),
        }
    }

    fn ratio_edges(&self) -> Vec<f64> {
        match self {
            RateSpec::Sign { .. } => vec![0.0],
            RateSpec::AngularThreshold { theta, .. } => vec![*theta],
            RateSpec::SignedVelocity { threshold, .. } => vec![*threshold],
            RateSpec::Tabulated(t) => t.ratio_edges[1..t.ratio_edges.len() - 1].to_vec(),
            RateSpec::AxisTable(_) => Vec::new(),
        }
    }

    /// Sorted times `s > 0` where the rate may change along `s ↦ x + v s`.
    pub fn ray_breakpoints(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        let a = dot(x, v);
        let b = dot(v, v);
        let c = dot(x, x);
        if b == 0.0 {
            return out;
        }
        match self {
            RateSpec::AxisTable(t) => {
                for e in &t.x_edges {
                    out.push((e - x[0]) / v[0]);
                }
            }
            _ => {
                for e in self.radius_edges() {
                    // |x + v s|² = e²
                    push_quadratic_roots(b, 2.0 * a, c - e * e, &mut out);
                }
                let ratio_edges = self.ratio_edges();
                if !ratio_edges.is_empty() {
                    // the radial velocity changes sign where y·v = 0 and jumps
                    // where the ray passes closest to (possibly through) the origin
                    out.push(-a / b);
                    for th in ratio_edges {
                        // (y·v)² = θ²|y|² with y·v = a + b s
                        let t2 = th * th;
                        push_quadratic_roots(
                            b * b - t2 * b,
                            2.0 * a * b - 2.0 * t2 * a,
                            a * a - t2 * c,
                            &mut out,
                        );
                    }
                }
            }
        }
        out.retain(|s| s.is_finite() && *s > 0.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Piecewise-constant description of the rate along `s ↦ x + v s`.
    pub fn ray(&self, x: &[f64], v: &[f64]) -> Result<Ray> {
        let breaks = self.ray_breakpoints(x, v);
        let mut starts = Vec::with_capacity(breaks.len() + 1);
        starts.push(0.0);
        starts.extend_from_slice(&breaks);
        let mut rates = Vec::with_capacity(starts.len());
        let mut y = x.to_vec();
        let mut valid_until = f64::INFINITY;
        let mut exit_radius = f64::NAN;
        for i in 0..starts.len() {
            let mid = match starts.get(i + 1) {
                Some(end) => 0.5 * (starts[i] + end),
                None => starts[i] + 1.0,
            };
            for (yk, (xk, vk)) in y.iter_mut().zip(x.iter().zip(v)) {
                *yk = xk + vk * mid;
            }
            match self.value(&y, v) {
                Ok(r) => rates.push(r),
                Err(Error::OutsideTable { radius }) => {
                    valid_until = starts[i];
                    exit_radius = radius;
                    rates.push(0.0);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        starts.truncate(rates.len());
        Ok(Ray {
            starts,
            rates,
            valid_until,
            exit_radius,
        })
    }

    /// Candidate states hitting every cell of the rate partition refined by
    /// the extra radius and radial-velocity edges.
    pub(crate) fn probes(&self, dim: usize, extra_radii: &[f64], extra_ratios: &[f64]) -> Vec<Probe> {
        let mut probes = Vec::new();
        if dim >= 2 {
            let mut rho_edges = self.radius_edges();
            rho_edges.extend_from_slice(extra_radii);
            rho_edges.push(0.0);
            let mut r_edges = self.ratio_edges();
            r_edges.extend_from_slice(extra_ratios);
            r_edges.push(0.0);
            for &rho in &grid(rho_edges, 0.0, f64::INFINITY) {
                for &r in &grid(r_edges.clone(), -1.0, 1.0) {
                    let mut x = vec![0.0; dim];
                    let mut v = vec![0.0; dim];
                    x[0] = rho;
                    v[0] = r;
                    probes.push(Probe { x, v });
                }
            }
            return probes;
        }
        let (mut x_edges, mut v_edges) = match self {
            RateSpec::AxisTable(t) => (t.x_edges.clone(), t.v_edges.clone()),
            _ => (symmetric(&self.radius_edges()), symmetric(&self.ratio_edges())),
        };
        x_edges.extend(symmetric(extra_radii));
        x_edges.push(0.0);
        v_edges.extend(symmetric(extra_ratios));
        v_edges.push(0.0);
        for &x in &grid(x_edges, f64::NEG_INFINITY, f64::INFINITY) {
            for &v in &grid(v_edges.clone(), -1.0, 1.0) {
                probes.push(Probe {
                    x: vec![x],
                    v: vec![v],
                });
            }
        }
        probes
    }

    /// Breakpoints in `v` of the one-dimensional map `v ↦ λ(x, v)` for any `x`.
    pub(crate) fn velocity_edges_1d(&self) -> Vec<f64> {
        let mut e = match self {
            RateSpec::AxisTable(t) => t.v_edges.clone(),
            _ => symmetric(&self.ratio_edges()),
        };
        e.push(0.0);
        e.retain(|v| *v > -1.0 && *v < 1.0);
        e.sort_by(f64::total_cmp);
        e.dedup();
        e
    }

    /// Candidate positions on `x > 0` hitting every piece of `x ↦ λ(x, v)`.
    pub(crate) fn positive_axis_probes(&self) -> Vec<f64> {
        let edges = match self {
            RateSpec::AxisTable(t) => t.x_edges.clone(),
            _ => self.radius_edges(),
        };
        let mut pts = grid(edges, 0.0, f64::INFINITY);
        pts.retain(|x| *x > 0.0);
        pts
    }
}

impl TabulatedRate {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidModel(format!("tabulated rate: {msg}")));
        let r = &self.radius_edges;
        if r.first() != Some(&0.0) || !strictly_increasing(r) {
            return bad("radius_edges must start at 0 and increase strictly");
        }
        let c = &self.ratio_edges;
        if c.len() < 2 || c[0] != -1.0 || c[c.len() - 1] != 1.0 || !strictly_increasing(c) {
            return bad("ratio_edges must increase strictly from -1 to 1");
        }
        if self.values.len() != r.len() && self.values.len() + 1 != r.len() {
            return bad("need one row per radius edge, or one fewer for bounded support");
        }
        if self.values.is_empty() {
            return bad("no rows");
        }
        for row in &self.values {
            if row.len() != c.len() - 1 {
                return bad("each row needs one value per ratio cell");
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return bad("values must be finite and nonnegative");
            }
        }
        if let Some(b) = self.thinning_bound {
            let max = self.values.iter().flatten().cloned().fold(0.0, f64::max);
            if !(b.is_finite() && b >= max && b > 0.0) {
                return bad("thinning_bound must dominate every tabulated value");
            }
        }
        Ok(())
    }

    pub fn has_bounded_support(&self) -> bool {
        self.values.len() < self.radius_edges.len()
    }

    fn value(&self, radius: f64, r: f64) -> Result<f64> {
        let row = self.radius_edges.partition_point(|&e| e <= radius) - 1;
        if row >= self.values.len() {
            return Err(Error::OutsideTable { radius });
        }
        let ncol = self.ratio_edges.len() - 1;
        let col = (self.ratio_edges.partition_point(|&e| e <= r).saturating_sub(1)).min(ncol - 1);
        Ok(self.values[row][col])
    }
}

impl AxisTable {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidModel(format!("axis table: {msg}")));
        if !strictly_increasing(&self.x_edges) || !strictly_increasing(&self.v_edges) {
            return bad("edges must increase strictly");
        }
        if self.x_edges.iter().any(|e| !e.is_finite()) {
            return bad("x edges must be finite");
        }
        if self.v_edges.iter().any(|e| !(*e > -1.0 && *e < 1.0)) {
            return bad("v edges must lie in (-1, 1)");
        }
        if self.values.len() != self.x_edges.len() + 1 {
            return bad("need x_edges.len() + 1 rows");
        }
        for row in &self.values {
            if row.len() != self.v_edges.len() + 1 {
                return bad("each row needs v_edges.len() + 1 values");
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return bad("values must be finite and nonnegative");
            }
        }
        Ok(())
    }

    fn value(&self, x: f64, v: f64) -> f64 {
        let row = self.x_edges.partition_point(|&e| e < x);
        let col = self.v_edges.partition_point(|&e| e < v);
        self.values[row][col]
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

fn symmetric(edges: &[f64]) -> Vec<f64> {
    edges.iter().flat_map(|&e| [e, -e]).collect()
}

/// Edge points plus one interior point per gap (and beyond infinite bounds).
fn grid(mut edges: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    edges.retain(|e| *e >= lo && *e <= hi);
    if lo.is_finite() {
        edges.push(lo);
    }
    if hi.is_finite() {
        edges.push(hi);
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut pts = Vec::with_capacity(2 * edges.len() + 2);
    if lo.is_infinite() {
        pts.push(edges[0] - 1.0);
    }
    for (i, &e) in edges.iter().enumerate() {
        pts.push(e);
        if let Some(&next) = edges.get(i + 1) {
            pts.push(0.5 * (e + next));
        }
    }
    if hi.is_infinite() {
        pts.push(edges[edges.len() - 1] + 1.0);
    }
    pts
}

/// Real roots of `a s² + b s + c = 0`, pushed in any order.
fn push_quadratic_roots(a: f64, b: f64, c: f64, out: &mut Vec<f64>) {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return;
    }
    if a.abs() <= 1e-14 * scale {
        if b != 0.0 {
            out.push(-c / b);
        }
        return;
    }
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc > -1e-12 * b * b.max(1.0) {
            disc = 0.0;
        } else {
            return;
        }
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    if q != 0.0 {
        out.push(q / a);
        out.push(c / q);
    } else {
        out.push(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sign_rate() -> RateSpec {
        RateSpec::Sign {
            lambda_minus: 1.0,
            lambda_plus: 2.0,
        }
    }

    #[test]
    fn boundary_goes_to_nonpositive_branch() {
        let r = sign_rate();
        assert_eq!(r.value(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(r.value(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(r.value(&[1.0], &[0.5]).unwrap(), 2.0);
    }

    #[test]
    fn sign_ray_breaks_at_origin_crossing() {
        let ray = sign_rate().ray(&[5.0], &[-1.0]).unwrap();
        assert_eq!(ray.starts, vec![0.0, 5.0]);
        assert_eq!(ray.rates, vec![1.0, 2.0]);
        assert_abs_diff_eq!(ray.cumulative(7.0).unwrap(), 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ray.invert(9.0).unwrap(), 7.0, epsilon = 1e-14);
    }

    #[test]
    fn angular_ray_breakpoints_are_sorted_and_match_pointwise_rate() {
        let rate = RateSpec::AngularThreshold {
            base: 1.0,
            boost: 9.0,
            theta: 0.3,
            delta: 2.0,
        };
        let x = [-3.0, 1.0];
        let v = [0.6, 0.2];
        let ray = rate.ray(&x, &v).unwrap();
        assert!(ray.starts.windows(2).all(|w| w[0] < w[1]));
        for i in 0..4000 {
            let s = i as f64 * 0.005 + 0.0013;
            let y = [x[0] + v[0] * s, x[1] + v[1] * s];
            assert_eq!(ray.rate_at(s), rate.value(&y, &v).unwrap(), "s = {s}");
        }
    }

    #[test]
    fn ray_through_origin_in_two_dimensions() {
        let rate = RateSpec::SignedVelocity {
            c1: 3.0,
            c2: 0.5,
            threshold: 0.1,
        };
        let ray = rate.ray(&[-2.0, -2.0], &[0.5, 0.5]).unwrap();
        // radial velocity is -|v| until the origin at s = 4, then +|v|
        assert_abs_diff_eq!(ray.cumulative(4.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ray.cumulative(5.0).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn bounded_table_fails_outside_support() {
        let table = RateSpec::Tabulated(TabulatedRate {
            radius_edges: vec![0.0, 1.0, 3.0],
            ratio_edges: vec![-1.0, 0.0, 1.0],
            values: vec![vec![1.0, 2.0], vec![1.5, 4.0]],
            thinning_bound: None,
        });
        table.validate(2).unwrap();
        let ray = table.ray(&[0.5, 0.0], &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(ray.cumulative(2.0).unwrap(), 2.0 * 0.5 + 4.0 * 1.5, epsilon = 1e-12);
        assert!(matches!(ray.cumulative(3.0), Err(Error::OutsideTable { .. })));
        assert!(table.value(&[4.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn axis_table_cells_are_right_closed() {
        let t = RateSpec::AxisTable(AxisTable {
            x_edges: vec![0.0],
            v_edges: vec![],
            values: vec![vec![2.0], vec![1.0]],
        });
        t.validate(1).unwrap();
        assert_eq!(t.value(&[0.0], &[0.3]).unwrap(), 2.0);
        assert_eq!(t.value(&[1e-9], &[0.3]).unwrap(), 1.0);
        assert!(t.validate(2).is_err());
    }

    #[test]
    fn quadratic_roots_are_stable() {
        let mut out = Vec::new();
        push_quadratic_roots(1.0, -1e8, 1.0, &mut out);
        out.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(out[0], 1e-8, epsilon = 1e-20);
        assert_abs_diff_eq!(out[1], 1e8, epsilon = 1e-6);
    }

    #[test]
    fn probes_cover_every_sign_cell() {
        let probes = sign_rate().probes(1, &[], &[]);
        let values: Vec<f64> = probes
            .iter()
            .map(|p| sign_rate().value(&p.x, &p.v).unwrap())
            .collect();
        assert!(values.contains(&1.0) && values.contains(&2.0));
    }
}
