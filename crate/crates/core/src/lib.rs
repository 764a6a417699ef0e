pub mod conformal;
pub mod error;
pub mod expr;
pub mod field;
pub mod fourdim;
pub mod hypersurface;
pub mod manifolds;
pub mod report;
pub mod scenario;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
