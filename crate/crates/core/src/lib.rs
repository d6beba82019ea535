//! Simulation and quantitative analysis of the generalised Zig-Zag process:
//! a piecewise-deterministic Markov process on `R^d × B(1)` that moves in
//! straight lines and redraws its velocity at rate `λ(x, v)` from a kernel
//! `Q(x, v, dv')`.
//!
//! The crate provides exact trajectory simulation ([`dynamics`]), checks of
//! the ergodicity assumptions ([`assumptions`]), a numerically certified
//! Lyapunov drift ([`lyapunov`]), explicit one-dimensional moment bounds
//! ([`onedim`]) and Monte Carlo estimators to compare them against
//! ([`empirics`]).

pub mod assumptions;
pub mod cli;
pub mod dynamics;
pub mod empirics;
pub mod error;
pub mod kernel;
pub mod lyapunov;
pub mod model;
pub mod onedim;
pub mod quadrature;
pub mod rate;
pub mod rng;
pub mod state;

pub use dynamics::{
    cumulative_rate, flow, sample_jump_time, sample_velocity, simulate, survival, TrajectorySkeleton,
};
pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use model::Model;
pub use rate::RateSpec;
pub use rng::Streams;
pub use state::State;
