//! File formats, backends, the run orchestrator, evaluation and the review
//! server, built on [`vqanle_core`].

pub use vqanle_core as core;

pub mod config;
pub mod corpus;
pub mod dataset;
pub mod evaluate;
pub mod gateway;
pub mod imaging;
pub mod review;
pub mod runner;
