pub mod compositor;
pub mod error;
pub mod fairness;
pub mod foir;
pub mod io;
pub mod report;
pub mod stats;
pub mod synthetic;
pub mod verification;

pub use error::{Error, Result};
