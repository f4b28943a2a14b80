//! Core of the VQA-NLE triplet synthesizer.
//!
//! Everything in this crate is pure and allocation-only: scene-graph object
//! filtering and run sampling, prompt templates with the stratified question
//! prefix schedule, bounding-box rasterization on decoded pixel buffers, the
//! triplet grammar, generalized self-consistency re-ranking, and the dataset
//! quality metrics. File formats, HTTP, and the CLI live in the `vqanle` crate.
//!
//! The three generation pipelines are written against the [`gateway::Generator`]
//! and [`gateway::Embedder`] traits so they can be driven by any backend.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod gateway;
pub mod gsc;
pub mod metrics;
pub mod parse;
pub mod pipeline;
pub mod prompt;
pub mod raster;
pub mod scene;
pub mod schedule;
pub mod seed;
pub mod similarity;
pub mod triplet;

pub use gsc::{gsc_select, CandidateSet, GscError, GscOutcome};
pub use parse::{parse_triplet, Dialect, ParseError, ParsedTriplet};
pub use prompt::{PromptTemplate, Stage, TemplateError};
pub use scene::{ImageRecord, SamplingPlan, SceneGraphObject};
pub use schedule::PrefixSchedule;
pub use triplet::{InvalidReason, PipelineKind, SlotOutcome, SlotRecord, Triplet, TripletMeta};
