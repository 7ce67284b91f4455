//! File formats, command-line front end and acceptance suite for
//! [`akscal_core`].
//!
//! The binary `akscal` is a thin wrapper around [`cli::main_entry`].

pub mod cli;
pub mod expr;
pub mod formats;
pub mod output;
pub mod suite;
