use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::rate::RateSpec;
use crate::state::State;

/// A generalised Zig-Zag process: dimension, jump rate and velocity kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub dimension: usize,
    pub rate: RateSpec,
    pub kernel: KernelSpec,
}

impl Model {
    pub fn new(dimension: usize, rate: RateSpec, kernel: KernelSpec) -> Result<Self> {
        let m = Self {
            dimension,
            rate,
            kernel,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        self.rate.validate(self.dimension)?;
        self.kernel.validate(self.dimension)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn check_state(&self, s: &State) -> Result<()> {
        if s.dim() != self.dimension {
            return Err(Error::InvalidState(format!(
                "state has dimension {} but the model has dimension {}",
                s.dim(),
                self.dimension
            )));
        }
        Ok(())
    }

    /// Rate 1 towards the origin, 2 away from it, uniform kernel on `[-1, 1]`.
    pub fn figure1() -> Self {
        Self {
            dimension: 1,
            rate: RateSpec::Sign {
                lambda_minus: 1.0,
                lambda_plus: 2.0,
            },
            kernel: KernelSpec::Uniform,
        }
    }

    /// Rate 2 unless the radial velocity is below `-1/2` (then 1/2),
    /// uniform kernel on `[-1, 1]`.
    pub fn signed_velocity_example() -> Self {
        Self {
            dimension: 1,
            rate: RateSpec::SignedVelocity {
                c1: 2.0,
                c2: 0.5,
                threshold: -0.5,
            },
            kernel: KernelSpec::Uniform,
        }
    }

    /// Velocity reversal at rate 1 towards the origin and 2 away from it.
    pub fn telegraph() -> Self {
        Self {
            dimension: 1,
            rate: RateSpec::Sign {
                lambda_minus: 1.0,
                lambda_plus: 2.0,
            },
            kernel: KernelSpec::Flip,
        }
    }

    /// Planar model with base rate 1, boosted to 20 when moving outward
    /// (radial velocity at least 0.1) outside the unit ball, and a kernel
    /// sending 90% of the mass into the inward cap `x·v'/|x| ≤ -0.8`.
    pub fn angular_example() -> Self {
        Self {
            dimension: 2,
            rate: RateSpec::AngularThreshold {
                base: 1.0,
                boost: 19.0,
                theta: 0.1,
                delta: 1.0,
            },
            kernel: KernelSpec::Restricted { p: 0.9, theta0: 0.8 },
        }
    }

    /// Looks up a built-in model by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "figure1" => Some(Self::figure1()),
            "signed-velocity" => Some(Self::signed_velocity_example()),
            "telegraph" => Some(Self::telegraph()),
            "angular" => Some(Self::angular_example()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 4] = ["figure1", "signed-velocity", "telegraph", "angular"];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        for m in [Model::figure1(), Model::signed_velocity_example(), Model::telegraph()] {
            assert_eq!(Model::from_json(&m.to_json()).unwrap(), m);
        }
        let text = r#"{"dimension": 2,
            "rate": {"family": "angular_threshold", "base": 1, "boost": 9, "theta": 0.1, "delta": 1},
            "kernel": {"family": "restricted", "p": 0.5, "theta0": 0.5}}"#;
        let m = Model::from_json(text).unwrap();
        assert_eq!(m.dimension, 2);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = Model::from_json("{\"dimension\": 1,\n \"rate\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn mixture_kernel_needs_one_dimension() {
        let text = r#"{"dimension": 2, "rate": {"family": "sign", "lambda_minus": 1, "lambda_plus": 2},
            "kernel": {"family": "mixture", "atoms": [{"velocity": 1, "weight": 1}]}}"#;
        assert!(Model::from_json(text).is_err());
    }
}
