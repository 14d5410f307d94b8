//! Command line tool, patient-session store and HTTP service for girthkit.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod server;
pub mod store;
pub mod wire;

pub use error::{AppError, AppResult};
