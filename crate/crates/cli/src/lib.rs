//! Experiment harness and command-line front end for `setsketch`.

pub mod cli;
pub mod experiment;
pub mod output;

pub use cli::cli_main;
