//! Two-sided convergence-rate bounds for finite inhomogeneous continuous-time Markov chains in
//! weighted l1 norms, with the numerical machinery to check them: a rate-expression language,
//! chain models, the reduced system, weighting, envelopes, an adaptive ODE solver, empirical
//! verification and a weight optimizer.

pub mod bounds;
pub mod config;
pub mod error;
pub mod model;
pub mod ode;
pub mod optimize;
pub mod quadrature;
pub mod rate;
pub mod reduction;
pub mod system;
pub mod verify;
pub mod weighting;

pub use error::{Error, ParseError, Result};
pub use model::{ChainModel, ModelKind, Transition};
pub use rate::{parse_rate, RateExpr};
pub use weighting::{WeightMatrix, WeightShape};
