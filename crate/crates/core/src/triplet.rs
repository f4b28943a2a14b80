//! Triplet records and per-slot outcomes.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::prompt::Stage;
use crate::scene::SceneGraphObject;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    SingleStep,
    SingleStepVip,
    MultiStep,
}

impl PipelineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineKind::SingleStep => "single-step",
            PipelineKind::SingleStepVip => "single-step-vip",
            PipelineKind::MultiStep => "multi-step",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single-step" => Some(PipelineKind::SingleStep),
            "single-step-vip" => Some(PipelineKind::SingleStepVip),
            "multi-step" => Some(PipelineKind::MultiStep),
            _ => None,
        }
    }

    /// Pipeline implied by a prompt-set id from the run configuration.
    pub fn for_prompt_set(prompt: &str) -> Option<Self> {
        match prompt {
            "singlestep-optim" => Some(PipelineKind::SingleStep),
            "nonvis-optim" => Some(PipelineKind::SingleStepVip),
            "self_consistency" => Some(PipelineKind::MultiStep),
            _ => None,
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One model completion kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawOutput {
    /// Template id the completion answered.
    pub template: String,
    pub text: String,
}

/// Re-ranking result stored with multi-step triplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankSummary {
    pub sources: Vec<String>,
    pub candidates: Vec<String>,
    pub scores: Vec<f64>,
    pub winner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletMeta {
    pub image_id: String,
    pub pipeline: PipelineKind,
    pub prefix: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<SceneGraphObject>,
    pub model: String,
    pub seed: u64,
    pub raw: Vec<RawOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerank: Option<RerankSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub question: String,
    pub answer: String,
    pub explanation: String,
    pub meta: TripletMeta,
}

impl Triplet {
    pub fn fields(&self) -> [&str; 3] {
        [&self.question, &self.answer, &self.explanation]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvalidReason {
    TokenFormatError,
    UnfinishedGeneration,
    HiddenContext,
    /// Gateway unreachable after bounded retries.
    Transport,
    /// Backend answered with an error payload.
    Backend,
    /// Image could not be read, decoded or annotated.
    Image,
    /// Visual-prompt slot without a drawable object.
    NoEligibleObject,
}

impl InvalidReason {
    pub fn as_str(self) -> &'static str {
        match self {
            InvalidReason::TokenFormatError => "TokenFormatError",
            InvalidReason::UnfinishedGeneration => "UnfinishedGeneration",
            InvalidReason::HiddenContext => "HiddenContext",
            InvalidReason::Transport => "Transport",
            InvalidReason::Backend => "Backend",
            InvalidReason::Image => "Image",
            InvalidReason::NoEligibleObject => "NoEligibleObject",
        }
    }
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)] // mostly Valid; boxing buys nothing
pub enum SlotOutcome {
    Valid(Triplet),
    Invalid {
        reason: InvalidReason,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stage: Option<Stage>,
        detail: String,
        raw: Vec<RawOutput>,
    },
    Skipped {
        reason: InvalidReason,
        detail: String,
    },
}

impl SlotOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, SlotOutcome::Valid(_))
    }

    pub fn status(&self) -> &'static str {
        match self {
            SlotOutcome::Valid(_) => "valid",
            SlotOutcome::Invalid { .. } => "invalid",
            SlotOutcome::Skipped { .. } => "skipped",
        }
    }

    pub fn reason(&self) -> Option<InvalidReason> {
        match self {
            SlotOutcome::Valid(_) => None,
            SlotOutcome::Invalid { reason, .. } | SlotOutcome::Skipped { reason, .. } => Some(*reason),
        }
    }

    pub fn triplet(&self) -> Option<&Triplet> {
        match self {
            SlotOutcome::Valid(t) => Some(t),
            _ => None,
        }
    }
}

/// One line of a dataset or invalid-ledger file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub id: String,
    pub index: usize,
    pub image_id: String,
    pub slot: usize,
    pub pipeline: PipelineKind,
    pub outcome: SlotOutcome,
}

impl SlotRecord {
    pub fn new(index: usize, image_id: &str, slot: usize, pipeline: PipelineKind, outcome: SlotOutcome) -> Self {
        SlotRecord { id: record_id(image_id, slot), index, image_id: image_id.into(), slot, pipeline, outcome }
    }
}

pub fn record_id(image_id: &str, slot: usize) -> String {
    format!("{image_id}_{slot}")
}
