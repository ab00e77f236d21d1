//! Margins of linear feasibility instances: exact oracles, perceptron-type
//! algorithms, and constructive checks of the margin forms of Gordan's alternative
//! and Hoffman's error bounds.

// negated float comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod checks;
pub mod error;
pub mod generate;
pub mod instance;
pub mod linalg;
pub mod lp;
pub mod margin;
pub mod theorems;

pub use error::{Error, Result};
pub use instance::{
    ColumnSpaceBasis, GramMatrix, InstanceFile, PrimalDirection, ProblemInstance, SimplexPoint,
};
pub use margin::{BallReport, MarginReport};
