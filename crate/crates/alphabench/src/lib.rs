//! IO, file formats, plugin orchestration and the command-line front end
//! for evaluating RGBA autoencoders over the canonical background set.

pub mod afs;
pub mod atc;
pub mod config;
pub mod dataset_io;
pub mod emit;
mod error;
pub mod eval;
pub mod io;
pub mod plugin;

pub use error::{Error, Result};
