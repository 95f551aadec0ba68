//! Command-line runner and HTTP what-if service for netctl scenarios.

pub mod commands;
pub mod service;
