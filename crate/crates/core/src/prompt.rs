//! Prompt templates and the formatting function that binds their placeholders.
//!
//! Placeholders are written `{name}`; the set of names a template may use is
//! fixed by its [`Stage`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PREFIX: &str = "prefix";
pub const OBJECT_NAME: &str = "obj name";
pub const QUESTION: &str = "question";
pub const SHORT_ANSWER: &str = "short_answer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Triplet,
    Question,
    Answer,
    ExplanationBase,
    ExplanationCot,
    ExplanationReact,
}

impl Stage {
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            Stage::Triplet => &[PREFIX, OBJECT_NAME],
            Stage::Question => &[PREFIX],
            Stage::Answer => &[QUESTION],
            Stage::ExplanationBase | Stage::ExplanationCot | Stage::ExplanationReact => &[QUESTION, SHORT_ANSWER],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Triplet => "triplet",
            Stage::Question => "question",
            Stage::Answer => "answer",
            Stage::ExplanationBase => "explanation-base",
            Stage::ExplanationCot => "explanation-cot",
            Stage::ExplanationReact => "explanation-react",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        [
            Stage::Triplet,
            Stage::Question,
            Stage::Answer,
            Stage::ExplanationBase,
            Stage::ExplanationCot,
            Stage::ExplanationReact,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template {template}: placeholder {{{name}}} is not allowed for stage {stage}")]
    UnknownPlaceholder { template: String, name: String, stage: &'static str },
    #[error("template {template}: missing binding for placeholder {{{name}}}")]
    MissingBinding { template: String, name: String },
    #[error("unknown template id {0}")]
    UnknownTemplate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub body: String,
    pub stage: Stage,
}

/// A `{name}` marker found in a body: byte range of the whole marker plus the name.
struct Marker<'a> {
    start: usize,
    end: usize,
    name: &'a str,
}

fn markers(body: &str) -> Vec<Marker<'_>> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(len) = bytes[i + 1..].iter().position(|&b| b == b'}' || b == b'{' || b == b'\n') {
                let close = i + 1 + len;
                if bytes[close] == b'}' && len > 0 {
                    out.push(Marker { start: i, end: close + 1, name: &body[i + 1..close] });
                    i = close + 1;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, body: impl Into<String>, stage: Stage) -> Result<Self, TemplateError> {
        let t = PromptTemplate { id: id.into(), body: body.into(), stage };
        for m in markers(&t.body) {
            if !stage.placeholders().contains(&m.name) {
                return Err(TemplateError::UnknownPlaceholder {
                    template: t.id.clone(),
                    name: m.name.to_string(),
                    stage: stage.as_str(),
                });
            }
        }
        Ok(t)
    }

    /// Distinct placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for m in markers(&self.body) {
            if !names.contains(&m.name) {
                names.push(m.name);
            }
        }
        names
    }

    /// Substitute every placeholder; extra bindings are ignored.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
        self.render_with(|name| bindings.get(name).map(String::as_str))
    }

    pub fn render_pairs(&self, pairs: &[(&str, &str)]) -> Result<String, TemplateError> {
        self.render_with(|name| pairs.iter().find(|(k, _)| *k == name).map(|(_, v)| *v))
    }

    fn render_with<'v>(&self, lookup: impl Fn(&str) -> Option<&'v str>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.body.len());
        let mut cursor = 0;
        for m in markers(&self.body) {
            let value = lookup(m.name).ok_or_else(|| TemplateError::MissingBinding {
                template: self.id.clone(),
                name: m.name.to_string(),
            })?;
            out.push_str(&self.body[cursor..m.start]);
            out.push_str(value);
            cursor = m.end;
        }
        out.push_str(&self.body[cursor..]);
        Ok(out)
    }
}

/// Template ids shipped with the crate, with their stages.
pub const BUILTIN_IDS: &[(&str, Stage)] = &[
    ("singlestep-optim", Stage::Triplet),
    ("nonvis-optim", Stage::Triplet),
    ("self_consistency-question", Stage::Question),
    ("self_consistency-answer", Stage::Answer),
    ("self_consistency-explanation-base", Stage::ExplanationBase),
    ("self_consistency-explanation-cot", Stage::ExplanationCot),
    ("self_consistency-explanation-react", Stage::ExplanationReact),
];

fn builtin_body(id: &str) -> Option<&'static str> {
    Some(match id {
        "singlestep-optim" => include_str!("../templates/singlestep-optim.txt"),
        "nonvis-optim" => include_str!("../templates/nonvis-optim.txt"),
        "self_consistency-question" => include_str!("../templates/self_consistency-question.txt"),
        "self_consistency-answer" => include_str!("../templates/self_consistency-answer.txt"),
        "self_consistency-explanation-base" => include_str!("../templates/self_consistency-explanation-base.txt"),
        "self_consistency-explanation-cot" => include_str!("../templates/self_consistency-explanation-cot.txt"),
        "self_consistency-explanation-react" => include_str!("../templates/self_consistency-explanation-react.txt"),
        _ => return None,
    })
}

pub fn stage_of_builtin(id: &str) -> Option<Stage> {
    BUILTIN_IDS.iter().find(|(i, _)| *i == id).map(|(_, s)| *s)
}

pub fn builtin(id: &str) -> Result<PromptTemplate, TemplateError> {
    let stage = stage_of_builtin(id).ok_or_else(|| TemplateError::UnknownTemplate(id.to_string()))?;
    let body = builtin_body(id).ok_or_else(|| TemplateError::UnknownTemplate(id.to_string()))?;
    PromptTemplate::new(id, body, stage)
}
