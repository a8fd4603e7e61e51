//! Self-interacting diffusions under annealing schedules.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod gibbs;
pub mod landscape;
pub mod oracle;
pub mod point;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod schedule;
pub mod sde;
pub mod table;
pub mod tridiag;

pub use error::{Error, Result};
pub use point::{Point, Sym2};
pub use potential::Potential;
pub use rng::RngStream;
