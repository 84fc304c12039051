//! Valuation-theoretic computations over Hahn series in positive characteristic.

pub mod coefficients;
pub mod error;
pub mod exponents;
pub mod construction;
pub mod defectlab;
pub mod series;
pub mod taylor;

pub use coefficients::{Coeff, FieldCtx, FieldSpec};
pub use error::{Error, Result};
pub use exponents::{Exp, GroupSpec, Val};
pub use series::Series;
