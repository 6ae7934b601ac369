//! Symbolic-numeric engine for linear q-difference equations with `|q| > 1`.

pub mod error;
pub mod numeric;
pub mod operator;
pub mod scalars;
pub mod theta;
pub mod series;

pub use error::{Error, Result};
pub use scalars::{QExpScalar, QRat, QValue};
pub use series::FormalSeries;
