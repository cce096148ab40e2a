//! Identification of interventional and path-specific causal queries on
//! graphs with hidden variables, with an exhaustive structural-equation
//! oracle for checking every estimand.
//!
//! The core is generic over [`Scalar`]; [`Exact`] (arbitrary-precision
//! rationals) is the default everywhere a test compares values.

pub mod error;
pub mod estimand;
pub mod fixtures;
pub mod graph;
pub mod harness;
pub mod identify;
pub mod io;
pub mod mediation;
pub mod oracle;
pub mod paths;
pub mod scalar;
pub mod swig;
pub mod table;

pub use error::{Error, Result};
pub use estimand::{evaluate, evaluate_table, simplify, Atom, Estimand, Format, Value};
pub use graph::{Admg, HiddenDag, VSet};
pub use identify::{id, id_path_specific, NonIdentified};
pub use oracle::{DiscreteNpsem, Noise};
pub use paths::{PseQuery, ExpandedGraph};
pub use scalar::Scalar;
pub use table::JointTable;

/// Exact rational probabilities.
pub type Exact = num_rational::BigRational;
/// Joint table over exact rationals.
pub type Table = JointTable<Exact>;
/// Joint table over `f64`.
pub type FloatTable = JointTable<f64>;
/// Structural model over exact rationals.
pub type Model = DiscreteNpsem<Exact>;
