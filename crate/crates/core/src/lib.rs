//! Exact maximal operators on finite non-doubling metric measure spaces.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod function;
pub mod generators;
pub mod maximal;
pub mod norms;
pub mod scalar;
pub mod space;

pub use error::{Error, Result};
pub use function::WeightedFunction;
pub use maximal::Operator;
pub use scalar::ExtScalar;
pub use space::{Mode, PointId, PointLabel, PointSet, Space};
