//! Backend-neutral model interface used by the pipelines.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub do_sample: bool,
    pub max_new_tokens: u32,
}

impl Default for DecodingParams {
    /// temperature 1.0, top_p 1.0, top_k 50, greedy, 1500 new tokens.
    fn default() -> Self {
        DecodingParams { temperature: 1.0, top_p: 1.0, top_k: 50, do_sample: false, max_new_tokens: 1500 }
    }
}

impl DecodingParams {
    pub fn with_budget(&self, max_new_tokens: u32) -> Self {
        DecodingParams { max_new_tokens, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_new_tokens < 1 {
            return Err(GatewayError::InvalidRequest("max_new_tokens must be >= 1".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest("temperature must be >= 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GatewayError::InvalidRequest("top_p must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Token budgets for the multi-step stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageBudgets {
    pub question: u32,
    pub answer: u32,
    pub base: u32,
    pub cot: u32,
    pub react: u32,
}

impl Default for StageBudgets {
    fn default() -> Self {
        StageBudgets { question: 20, answer: 25, base: 70, cot: 70, react: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    /// Base64 PNG, sent inline with the prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub params: DecodingParams,
    /// Provenance; pipelines use `<template id>#<plan index>`.
    pub tag: String,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.prompt.is_empty() {
            return Err(GatewayError::InvalidRequest(format!("{}: empty prompt", self.tag)));
        }
        self.params.validate()
    }
}

pub fn request_tag(template: &str, plan_index: usize) -> String {
    format!("{template}#{plan_index}")
}

/// Split a pipeline tag back into (template id, plan index).
pub fn parse_tag(tag: &str) -> Option<(&str, usize)> {
    let (template, index) = tag.rsplit_once('#')?;
    Some((template, index.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("{tag}: transport failure: {message}")]
    Transport { tag: String, message: String },
    #[error("{tag}: backend error: {message}")]
    Backend { tag: String, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport { .. })
    }
}

pub trait Generator {
    /// Model handle recorded in triplet metadata.
    fn model(&self) -> &str;
    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError>;
}

pub trait Embedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError>;
}

impl<T: Generator + ?Sized> Generator for &T {
    fn model(&self) -> &str {
        (**self).model()
    }
    fn generate(&self, request: &GenerationRequest) -> Result<String, GatewayError> {
        (**self).generate(request)
    }
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn embed(&self, text: &str) -> Result<Vec<f64>, GatewayError> {
        (**self).embed(text)
    }
}

/// Prefix of `text` holding at most `max_tokens` whitespace-separated tokens,
/// original spacing preserved.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    let mut seen = 0;
    let mut in_token = false;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if in_token {
                in_token = false;
                if seen == max_tokens {
                    return &text[..i];
                }
            }
        } else if !in_token {
            if seen == max_tokens {
                return text[..i].trim_end();
            }
            in_token = true;
            seen += 1;
        }
    }
    text
}
