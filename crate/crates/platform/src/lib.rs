//! Incident store, ingestion, query, reporting, HTTP service and operator
//! CLI built on `incidentdb-core`.

pub mod cli;
pub mod config;
pub mod csv_io;
pub mod query;
pub mod report;
pub mod service;
pub mod store;

/// Version of the public record and response formats.
pub const SCHEMA_VERSION: &str = "1";
