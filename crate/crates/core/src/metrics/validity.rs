//! Triplet validity screening.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::parse::{has_template_residue, has_terminal_punctuation, Dialect};
use crate::triplet::{InvalidReason, PipelineKind, Triplet};

pub const DEFAULT_BANNED_PHRASES: [&str; 6] = ["bounding box", "rectangle", "red box", "highlighted", "marked region", "annotation"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidityRules {
    pub require_question_mark: bool,
    /// Case-insensitive substrings that leak the visual prompt; applied to
    /// visual-prompt triplets only.
    pub banned_phrases: Vec<String>,
    pub dialect: Dialect,
}

impl Default for ValidityRules {
    fn default() -> Self {
        ValidityRules {
            require_question_mark: true,
            banned_phrases: DEFAULT_BANNED_PHRASES.iter().map(|s| s.to_string()).collect(),
            dialect: Dialect::Either,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid { reason: InvalidReason, detail: String },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    fn invalid(reason: InvalidReason, detail: impl Into<String>) -> Self {
        Verdict::Invalid { reason, detail: detail.into() }
    }
}

/// Case-insensitive search for any banned phrase; returns the first hit.
pub fn find_banned<'r>(text: &str, banned: &'r [String]) -> Option<&'r str> {
    let hay = text.to_lowercase();
    banned.iter().map(String::as_str).find(|p| !p.is_empty() && hay.contains(&p.to_lowercase()))
}

/// Rules are checked in order: empty fields, template residue, unfinished
/// sentences, question mark, hidden context.
pub fn validate_triplet(t: &Triplet, rules: &ValidityRules) -> Verdict {
    const NAMES: [&str; 3] = ["question", "answer", "explanation"];
    let fields = t.fields();
    for (name, f) in NAMES.iter().zip(fields) {
        if f.trim().is_empty() {
            return Verdict::invalid(InvalidReason::TokenFormatError, alloc::format!("empty {name}"));
        }
    }
    for (name, f) in NAMES.iter().zip(fields) {
        if has_template_residue(f) {
            return Verdict::invalid(InvalidReason::TokenFormatError, alloc::format!("template marker in {name}"));
        }
    }
    for name_field in [(NAMES[0], fields[0]), (NAMES[2], fields[2])] {
        if !has_terminal_punctuation(name_field.1) {
            return Verdict::invalid(InvalidReason::UnfinishedGeneration, alloc::format!("{} ends mid-sentence", name_field.0));
        }
    }
    if rules.require_question_mark && !fields[0].trim_end().ends_with('?') {
        return Verdict::invalid(InvalidReason::TokenFormatError, "question does not end with '?'");
    }
    if t.meta.pipeline == PipelineKind::SingleStepVip {
        for (name, f) in NAMES.iter().zip(fields) {
            if let Some(p) = find_banned(f, &rules.banned_phrases) {
                return Verdict::invalid(InvalidReason::HiddenContext, alloc::format!("{name} mentions \"{p}\""));
            }
        }
    }
    Verdict::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triplet::TripletMeta;
    use alloc::vec;

    fn triplet(q: &str, a: &str, e: &str, pipeline: PipelineKind) -> Triplet {
        Triplet {
            question: q.into(),
            answer: a.into(),
            explanation: e.into(),
            meta: TripletMeta {
                image_id: "img".into(),
                pipeline,
                prefix: "what".into(),
                object: None,
                model: "mock".into(),
                seed: 0,
                raw: vec![],
                rerank: None,
            },
        }
    }

    #[test]
    fn table_valid_sample() {
        let t = triplet(
            "What is the make and model of the car in the foreground?",
            "The car in the foreground is a Mercedes-Benz C-Class.",
            "The car has a distinctive front grille and logo ...",
            PipelineKind::SingleStep,
        );
        assert_eq!(validate_triplet(&t, &ValidityRules::default()), Verdict::Valid);
    }

    #[test]
    fn hidden_context_only_for_vip() {
        let e = "There are 7 people visible in the image, including the woman within the red rectangle.";
        let vip = triplet("How many people are in the image?", "7", e, PipelineKind::SingleStepVip);
        let v = validate_triplet(&vip, &ValidityRules::default());
        assert!(matches!(v, Verdict::Invalid { reason: InvalidReason::HiddenContext, .. }));
        let plain = triplet("How many people are in the image?", "7", e, PipelineKind::SingleStep);
        assert!(validate_triplet(&plain, &ValidityRules::default()).is_valid());
    }

    #[test]
    fn banned_match_is_case_insensitive() {
        let t = triplet("What is inside the Bounding Box?", "A dog", "A dog sits there.", PipelineKind::SingleStepVip);
        assert!(matches!(validate_triplet(&t, &ValidityRules::default()), Verdict::Invalid { reason: InvalidReason::HiddenContext, .. }));
    }

    #[test]
    fn empty_answer_is_token_format() {
        let t = triplet("What is it?", " ", "It is a cow.", PipelineKind::SingleStep);
        assert!(matches!(validate_triplet(&t, &ValidityRules::default()), Verdict::Invalid { reason: InvalidReason::TokenFormatError, .. }));
    }

    #[test]
    fn unfinished_and_question_mark() {
        let t = triplet("What is parked next to the", "A cart", "It is a cart.", PipelineKind::SingleStep);
        assert!(matches!(validate_triplet(&t, &ValidityRules::default()), Verdict::Invalid { reason: InvalidReason::UnfinishedGeneration, .. }));
        let t = triplet("Name the animal.", "A cow", "It is a cow.", PipelineKind::SingleStep);
        assert!(matches!(validate_triplet(&t, &ValidityRules::default()), Verdict::Invalid { reason: InvalidReason::TokenFormatError, .. }));
        let lax = ValidityRules { require_question_mark: false, ..Default::default() };
        assert!(validate_triplet(&t, &lax).is_valid());
    }
}
