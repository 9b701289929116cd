//! Std companion of `terrace-core`: configuration files, output formats,
//! the scenario battery and the `terrace` command line.

pub mod config;
pub mod output;
pub mod scenario;
pub mod verify;
pub mod commands;
