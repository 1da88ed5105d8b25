//! File formats, experiment harness and CLI plumbing around [`rafic_core`].

pub mod checkpoint;
pub mod error;
pub mod harness;
pub mod index_file;
pub mod io;
pub mod results;

pub use error::{Error, Result};
pub use rafic_core as core;
