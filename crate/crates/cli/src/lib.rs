//! Command implementations and the HTTP service behind the `proxydyn` binary.

pub mod artifacts;
pub mod commands;
pub mod error;
pub mod service;
