use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};
use vqanle_core::gateway::{parse_tag, truncate_tokens, Embedder, GatewayError, GenerationRequest, Generator};
use vqanle_core::prompt::{stage_of_builtin, Stage};
use vqanle_core::seed::{rng, StableHash};
use vqanle_core::similarity::{hash_projection, MOCK_EMBEDDING_DIM};

/// A scripted reply: completion text, or a simulated failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    Text(String),
    Error { error: FailureKind, #[serde(default)] message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Transport,
    Backend,
}

/// Script file: replies keyed by `<template id>#<plan index>`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub replies: BTreeMap<String, ScriptedReply>,
}

impl MockScript {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Config(format!("mock script {}: {e}", path.display())))?;
        let parsed = if matches!(path.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")) {
            serde_yaml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        let script: MockScript = parsed.map_err(|e| GatewayError::Config(format!("mock script {}: {e}", path.display())))?;
        for key in script.replies.keys() {
            if parse_tag(key).is_none() {
                return Err(GatewayError::Config(format!("mock script key {key:?} is not <template>#<index>")));
            }
        }
        Ok(script)
    }
}

/// Deterministic backend: scripted replies first, then seeded fallback text
/// shaped for the template's stage. Output is a pure function of the seed and
/// the request; completions are cut to `max_new_tokens` whitespace tokens.
#[derive(Debug, Clone)]
pub struct MockGateway {
    model: String,
    seed: u64,
    script: BTreeMap<String, ScriptedReply>,
    stages: BTreeMap<String, Stage>,
}

const NOUNS: [&str; 10] = ["cow", "bicycle", "umbrella", "bench", "dog", "kite", "table", "bus", "tree", "woman"];
const PLACES: [&str; 6] = ["fence", "road", "window", "field", "building", "river"];
const COLORS: [&str; 6] = ["red", "brown", "white", "green", "blue", "black"];

impl MockGateway {
    pub fn new(model: impl Into<String>, seed: u64) -> Self {
        MockGateway { model: model.into(), seed, script: BTreeMap::new(), stages: BTreeMap::new() }
    }

    pub fn with_script(mut self, script: MockScript) -> Self {
        if let Some(m) = script.model {
            self.model = m;
        }
        self.script = script.replies;
        self
    }

    /// Stage used for fallback text of a non-builtin template id.
    pub fn with_stage(mut self, template: impl Into<String>, stage: Stage) -> Self {
        self.stages.insert(template.into(), stage);
        self
    }

    fn stage(&self, template: &str) -> Stage {
        self.stages.get(template).copied().or_else(|| stage_of_builtin(template)).unwrap_or(Stage::Triplet)
    }

    fn fallback(&self, req: &GenerationRequest, template: &str) -> String {
        let mut r = rng(StableHash::new().u64(self.seed).str(&req.tag).str(&req.prompt).finish());
        let noun = *NOUNS.choose(&mut r).expect("non-empty");
        let place = *PLACES.choose(&mut r).expect("non-empty");
        let color = *COLORS.choose(&mut r).expect("non-empty");
        let question = format!("What is the {color} {noun} next to the {place}?");
        let answer = format!("A {color} {noun}");
        let reason = format!("The {color} {noun} is visible right beside the {place} in the image.");
        match self.stage(template) {
            Stage::Triplet => format!("Question: {question}\nShort Answer: {answer}\nReason: {reason}"),
            Stage::Question => question,
            Stage::Answer => answer,
            Stage::ExplanationBase => reason,
            Stage::ExplanationCot => format!("I look for the {noun} first. {reason}"),
            Stage::ExplanationReact => format!(
                "Observation: a {color} {noun} near a {place}.\nThoughts: the {noun} matches the answer.\nAction: locate the {noun}.\nReason: {reason}"
            ),
        }
    }
}

impl Generator for MockGateway {
    fn model(&self) -> &str {
        &self.model
    }

    fn generate(&self, req: &GenerationRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let template = parse_tag(&req.tag).map(|(t, _)| t).unwrap_or(req.tag.as_str());
        let text = match self.script.get(&req.tag) {
            Some(ScriptedReply::Text(t)) => t.clone(),
            Some(ScriptedReply::Error { error, message }) => {
                let (tag, message) = (req.tag.clone(), message.clone());
                return Err(match error {
                    FailureKind::Transport => GatewayError::Transport { tag, message },
                    FailureKind::Backend => GatewayError::Backend { tag, message },
                });
            }
            None => self.fallback(req, template),
        };
        Ok(truncate_tokens(&text, req.params.max_new_tokens as usize).to_string())
    }
}

/// Token-bucket hash projection, 256 dimensions, L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockEmbedder;

impl Embedder for MockEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("cannot embed empty text".into()));
        }
        Ok(hash_projection(text, MOCK_EMBEDDING_DIM))
    }
}
