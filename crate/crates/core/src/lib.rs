//! Cutoff equilibria of a career-concerns model of expert advice with a
//! Gaussian signal.
//!
//! An expert of unknown ability observes a signal about whether a risky
//! action will succeed and recommends it iff the signal clears a cutoff.
//! Recommendations are implemented with a reputation-dependent probability
//! and the market updates its belief about the expert's ability from the
//! public outcome. The crate solves for the self-consistent cutoff, its
//! comparative statics, bonus calibrations, gatekeeping sweeps, and checks
//! all of it by simulation.
//!
//! Every computation is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases fix the usual double-precision instantiation.

// `!(a < b)` is how bounds checks here reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoff;
pub mod equilibrium;
pub mod gaussian;
pub mod model;
pub mod policy;
pub mod roots;
pub mod scalar;
pub mod simulate;
pub mod statics;

pub use cutoff::Cutoff;
pub use equilibrium::{
    best_response_cutoff, delta, delta_dx, experimentation_rate, solve_equilibrium,
    solve_equilibrium_with, Equilibrium, PayoffMode, SolveError, SolveOptions,
};
pub use gaussian::{
    event_likelihood, norm_cdf, posterior_after, posteriors_of_cutoff, success_prob, Ability,
    Posteriors, PublicEvent,
};
pub use model::{lambda_of, w_of, ModelError, Primitives, Reputation};
pub use scalar::Scalar;

pub type Primitives64 = Primitives<f64>;
pub type Primitives32 = Primitives<f32>;
pub type Reputation64 = Reputation<f64>;
pub type Cutoff64 = Cutoff<f64>;
pub type Posteriors64 = Posteriors<f64>;
pub type Equilibrium64 = Equilibrium<f64>;
pub type Equilibrium32 = Equilibrium<f32>;
