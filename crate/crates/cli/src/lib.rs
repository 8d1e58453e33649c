//! Library side of the `lexext` command: configuration, output handling and
//! the pipeline stages, so they can be driven from tests as well.

pub mod config;
pub mod output;
pub mod steps;
