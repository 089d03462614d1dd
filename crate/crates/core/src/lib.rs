pub mod analysis;
pub mod commands;
pub mod density;
pub mod dsl;
pub mod elements;
pub mod error;
pub mod fock;
pub mod gate;
pub mod noise;
pub mod tomography;

pub use error::{Error, Result};
