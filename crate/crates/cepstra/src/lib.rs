//! Files, experiment configuration, the evaluation grid and the command line
//! around [`cepstra_core`].

mod binio;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod feature_io;
pub mod grid;
pub mod model_io;
pub mod wav;

pub use error::{Error, Result};
