use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BoundHolds,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::BoundHolds => "bound_holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// An analytic upper bound next to a Monte Carlo estimate of the bounded
/// quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub analytic: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// Share of replicates dropped as censored.
    pub censored_fraction: f64,
    pub verdict: Verdict,
}

impl BoundReport {
    /// Violated when `estimate - 3·stderr > analytic`, holds when
    /// `estimate ≤ analytic`, inconclusive in between.
    pub fn new(name: impl Into<String>, analytic: f64, estimate: f64, stderr: f64, n_samples: usize) -> Self {
        let verdict = if estimate - 3.0 * stderr > analytic {
            Verdict::Violated
        } else if estimate <= analytic {
            Verdict::BoundHolds
        } else {
            Verdict::Inconclusive
        };
        Self {
            name: name.into(),
            analytic,
            estimate,
            stderr,
            n_samples,
            censored_fraction: 0.0,
            verdict,
        }
    }

    pub fn with_censored_fraction(mut self, fraction: f64) -> Self {
        self.censored_fraction = fraction;
        self
    }

    /// Not shown to fail at three standard errors.
    pub fn consistent(&self) -> bool {
        self.verdict != Verdict::Violated
    }

    pub const CSV_HEADER: &'static str = "name,analytic,estimate,stderr,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.name,
            self.analytic,
            self.estimate,
            self.stderr,
            self.verdict.as_str()
        )
    }
}
