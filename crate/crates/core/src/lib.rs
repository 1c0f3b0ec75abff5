//! Extremal problems for set families that avoid a sign pattern of
//! element differences.

pub mod altstruct;
pub mod bounds;
pub mod constructions;
pub mod error;
pub mod exec;
pub mod extremal;
pub mod harness;
pub mod patterns;
pub mod stochastic;
pub mod walks;

pub use error::{Error, Result};
pub use exec::Exec;
pub use patterns::{Pattern, Sign, SubsetWord};
