//! Phase-covariant single-qubit open dynamics driven by time-dependent decay
//! rates, together with the non-Markovianity indicators evaluated along the
//! resulting trajectories and the analytic conditions under which each
//! indicator detects memory effects.

pub mod conditions;
pub mod crosscheck;
pub mod evolution;
pub mod expr;
pub mod indicators;
pub mod par;
pub mod quadrature;
pub mod rates;
pub mod state;

pub use conditions::{Condition, DynamicsClass, Orientation, Verdict};
pub use evolution::{Kernels, TimeGrid, Trajectory};
pub use expr::{parse, Expr};
pub use indicators::{IndicatorId, IndicatorSeries, Probes};
pub use par::Execution;
pub use rates::{PhenomParams, RateModel, RateSample};
pub use state::{BlochVector, QubitState};
