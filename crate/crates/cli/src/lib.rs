//! Library side of the `nlcap` command-line tool: settings handling and the
//! sweeps behind each subcommand.

pub mod commands;
pub mod config;
