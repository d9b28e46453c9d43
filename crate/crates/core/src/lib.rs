pub mod contour;
pub mod error;
pub mod generate;
pub mod io;
pub mod matcore;
pub mod multiindex;
pub mod realify;
pub mod series;
mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, GateStatus};
pub use num_complex::Complex64;
