pub mod bohm;
pub mod error;
pub mod entangle;
pub mod hilbert;
pub mod lattice;
pub mod measure;
pub mod nogo;
pub mod stats;

pub use error::{Error, Result};
