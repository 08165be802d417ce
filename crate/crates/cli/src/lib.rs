//! Command-line front end: edge-list parsing, subcommands and JSON reports.

pub mod args;
pub mod commands;
pub mod edgelist;
pub mod error;
pub mod report;

pub use edgelist::{parse_edge_list, to_edge_list, ParseError};
pub use error::CliError;
