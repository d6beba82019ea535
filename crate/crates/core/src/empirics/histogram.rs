use std::fmt::Write as _;

use serde::Serialize;

use crate::dynamics::{flow, JumpChain, SimulationOptions};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::rng::{StreamRng, Streams};
use crate::state::State;

/// Uniform binning of `[lo, hi)` into `bins` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            lo: -10.0,
            hi: 10.0,
            bins: 80,
        }
    }
}

/// Counts per bin, plus the mass falling below `lo` and at or above `hi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub total: u64,
}

impl Histogram {
    pub fn new(spec: HistogramSpec) -> Result<Self> {
        if spec.bins == 0 || !(spec.lo < spec.hi) || !spec.lo.is_finite() || !spec.hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "histogram needs bins > 0 and finite lo < hi, got {spec:?}"
            )));
        }
        Ok(Self {
            spec,
            counts: vec![0; spec.bins],
            underflow: 0,
            overflow: 0,
            total: 0,
        })
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = (self.spec.hi - self.spec.lo) / self.spec.bins as f64;
        (0..=self.spec.bins)
            .map(|i| self.spec.lo + w * i as f64)
            .collect()
    }

    pub fn add(&mut self, x: f64) {
        self.total += 1;
        if x < self.spec.lo {
            self.underflow += 1;
        } else if x >= self.spec.hi {
            self.overflow += 1;
        } else {
            let w = (self.spec.hi - self.spec.lo) / self.spec.bins as f64;
            let i = (((x - self.spec.lo) / w) as usize).min(self.spec.bins - 1);
            self.counts[i] += 1;
        }
    }

    /// Relative frequencies of every cell, outer cells last.
    fn cell_frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.total.max(1) as f64;
        self.counts
            .iter()
            .chain([&self.underflow, &self.overflow])
            .map(move |&c| c as f64 / n)
    }

    /// CSV with header `bin_left,bin_right,count,freq`.
    pub fn to_csv(&self) -> String {
        let edges = self.edges();
        let n = self.total.max(1) as f64;
        let mut out = String::from("bin_left,bin_right,count,freq\n");
        for (i, &c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{},{},{}", edges[i], edges[i + 1], c, c as f64 / n).unwrap();
        }
        out
    }
}

/// Half the L1 distance between the binned laws, outer cells included.
/// A lower bound on the total-variation distance of the underlying laws.
pub fn tv_distance(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    if h1.spec != h2.spec {
        return Err(Error::MismatchedEdges);
    }
    let l1: f64 = h1
        .cell_frequencies()
        .zip(h2.cell_frequencies())
        .map(|(p, q)| (p - q).abs())
        .sum();
    Ok((0.5 * l1).min(1.0))
}

/// Runs one trajectory and records the state at each of the sorted `times`.
pub(crate) fn states_at_times(m: &Model, s0: &State, times: &[f64], rng: &mut StreamRng) -> Result<Vec<State>> {
    let mut chain = JumpChain::new(m, s0.clone(), rng, SimulationOptions::default());
    let mut out = Vec::with_capacity(times.len());
    let last = times.last().copied().unwrap_or(0.0);
    let mut next = chain.holding_time_until(last)?;
    for &t in times {
        while chain.time() + next <= t {
            chain.jump_after(next)?;
            next = chain.holding_time_until(last)?;
        }
        out.push(flow(chain.state(), t - chain.time()));
    }
    Ok(out)
}

/// Histograms of coordinate `coord` of `X_t` at each time, from `n`
/// independent trajectories started at `s0`.
pub fn empirical_distributions(
    m: &Model,
    s0: &State,
    times: &[f64],
    n: usize,
    spec: HistogramSpec,
    coord: usize,
    streams: Streams,
) -> Result<Vec<Histogram>> {
    m.check_state(s0)?;
    if coord >= m.dimension {
        return Err(Error::InvalidArgument(format!("coordinate {coord} out of range")));
    }
    if times.windows(2).any(|w| w[0] > w[1]) || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument("times must be finite, nonnegative and sorted".into()));
    }
    let positions = streams.map(n, |_, rng| -> Result<Vec<f64>> {
        Ok(states_at_times(m, s0, times, rng)?
            .into_iter()
            .map(|s| s.x()[coord])
            .collect())
    });
    let mut hists = vec![Histogram::new(spec)?; times.len()];
    for row in positions {
        for (h, x) in hists.iter_mut().zip(row?) {
            h.add(x);
        }
    }
    Ok(hists)
}

pub fn empirical_distribution(
    m: &Model,
    s0: &State,
    t: f64,
    n: usize,
    spec: HistogramSpec,
    streams: Streams,
) -> Result<Histogram> {
    Ok(empirical_distributions(m, s0, &[t], n, spec, 0, streams)?.remove(0))
}
