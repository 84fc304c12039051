//! Command-line front end for `vallab`: configuration, a small expression
//! language, the subcommands and the experiment runner.

pub mod app;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod parser;

pub use app::run;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
