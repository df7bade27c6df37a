//! Command-line front end: configuration files, JSON solution documents,
//! SVG figures and the `balconf` subcommands.

pub mod commands;
pub mod config;
pub mod document;
pub mod error;
pub mod svg;
