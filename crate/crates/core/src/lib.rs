pub mod assembler;
pub mod cli;
pub mod describer;
pub mod gateway;
pub mod geometry;
pub mod grammar;
pub mod ingest;
pub mod layout;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod service;
