//! HTTP service and command-line front end.

pub mod cli;
pub mod config;
pub mod server;
