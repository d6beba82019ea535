//! Gauss–Legendre quadrature.

use std::sync::OnceLock;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const MAX_CACHED: usize = 128;

impl GaussLegendre {
    /// Rule with `n` points, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared rule for orders up to 128.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static CACHE: [OnceLock<GaussLegendre>; MAX_CACHED + 1] =
            [const { OnceLock::new() }; MAX_CACHED + 1];
        assert!(n <= MAX_CACHED, "order {n} above the cached maximum");
        CACHE[n].get_or_init(|| GaussLegendre::new(n))
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        if hi == lo {
            return 0.0;
        }
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * z);
        }
        acc * half
    }

    /// Integrates piecewise over `[lo, hi]` split at every break inside it.
    pub fn integrate_split(
        &self,
        lo: f64,
        hi: f64,
        breaks: &[f64],
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut a = lo;
        for b in cuts.into_iter().chain(std::iter::once(hi)) {
            total += self.integrate(a, b, &mut f);
            a = b;
        }
        total
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
