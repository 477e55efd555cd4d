//! GROW e-variables, bounds on the probability of a sample mean landing in a
//! set of alternatives, and normalized-maximum-likelihood regret for
//! natural exponential families.

pub mod csc;
pub mod error;
pub mod expfam;
pub mod nml;
pub mod numeric;
pub mod projection;
pub mod report;
pub mod surround;

pub use error::{Error, Result};
pub use expfam::{FamilySpec, MeanSpace, SampleConfig};
pub use projection::{EVariable, MeanSet, Provenance};
pub use report::{BoundReport, Oracle, OracleKind};
