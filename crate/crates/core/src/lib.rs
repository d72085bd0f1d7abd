//! Multipartite input/output boxes: class membership by linear programming,
//! wirings and classical communication prior to the inputs, and Bell
//! functionals.

pub mod bell;
pub mod catalog;
pub mod error;
pub mod index;
pub mod lp;
pub mod membership;
pub mod model;
pub mod quantum;
pub mod random;
pub mod reproduce;
pub mod scalar;
pub mod wiring;

pub use error::{Error, Result};
pub use model::{CorrelationBox, Partition, Relabeling, Scenario};
pub use scalar::{Mode, Number, Scalar, Table};
