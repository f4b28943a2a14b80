//! Grammar for labeled model completions.
//!
//! A completion is a sequence of sections, each introduced by a label at the
//! start of a line (`Question:`, `<Short Answer>:`, `- Reason:` ...). A
//! section runs until the next label line. Anything before the last
//! `Feedback:::` marker is treated as echoed instructions and ignored.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which label introduces the explanation field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dialect {
    /// `Reason:`
    Reason,
    /// `Reasoned Answer:`
    ReasonedAnswer,
    /// Either label; `Reasoned Answer` wins when both appear.
    #[default]
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Question,
    ShortAnswer,
    Reason,
    ReasonedAnswer,
    Answer,
    Reasoning,
    Observation,
    Thoughts,
    Thought,
    Action,
    QuestionPrefix,
    ObjectName,
}

impl Label {
    pub fn text(self) -> &'static str {
        match self {
            Label::Question => "Question",
            Label::ShortAnswer => "Short Answer",
            Label::Reason => "Reason",
            Label::ReasonedAnswer => "Reasoned Answer",
            Label::Answer => "Answer",
            Label::Reasoning => "Reasoning",
            Label::Observation => "Observation",
            Label::Thoughts => "Thoughts",
            Label::Thought => "Thought",
            Label::Action => "Action",
            Label::QuestionPrefix => "Question Prefix",
            Label::ObjectName => "Object name",
        }
    }
}

// Longest first so "Reasoned Answer" is not read as "Reason".
const LABELS: [Label; 12] = [
    Label::ReasonedAnswer,
    Label::QuestionPrefix,
    Label::ShortAnswer,
    Label::Observation,
    Label::ObjectName,
    Label::Reasoning,
    Label::Question,
    Label::Thoughts,
    Label::Action,
    Label::Answer,
    Label::Reason,
    Label::Thought,
];

const FEEDBACK_MARKER: &str = "Feedback:::";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("token format error: {0}")]
    TokenFormat(String),
    #[error("unfinished generation in {0} field")]
    Unfinished(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTriplet {
    pub question: String,
    pub answer: String,
    pub explanation: String,
}

fn strip_ci_prefix<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

/// Recognize a label at the start of `line`; returns the label and the text after its colon.
fn match_label(line: &str) -> Option<(Label, &str)> {
    let mut s = line.trim_start();
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = s.strip_prefix(bullet) {
            s = rest.trim_start();
            break;
        }
    }
    for label in LABELS {
        let (bracketed, rest) = match s.strip_prefix('<') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let Some(mut rest) = strip_ci_prefix(rest, label.text()) else { continue };
        if bracketed {
            let Some(r) = rest.strip_prefix('>') else { continue };
            rest = r;
        }
        let rest = rest.trim_start_matches([' ', '\t']);
        if let Some(value) = rest.strip_prefix(':') {
            // "Rules:::" style runs of colons belong to the label.
            return Some((label, value.trim_start_matches(':')));
        }
    }
    None
}

/// Split a completion into labeled sections, in order of appearance.
pub fn sections(raw: &str) -> Vec<(Label, String)> {
    let body = match raw.rfind(FEEDBACK_MARKER) {
        Some(at) => &raw[at + FEEDBACK_MARKER.len()..],
        None => raw,
    };
    let mut out: Vec<(Label, String)> = Vec::new();
    for line in body.lines() {
        if let Some((label, value)) = match_label(line) {
            out.push((label, value.trim().to_string()));
        } else if let Some((_, value)) = out.last_mut() {
            let line = line.trim();
            if !line.is_empty() {
                if !value.is_empty() {
                    value.push('\n');
                }
                value.push_str(line);
            }
        }
    }
    out
}

/// First section carrying `label`.
pub fn section(raw: &str, label: Label) -> Option<String> {
    sections(raw).into_iter().find(|(l, _)| *l == label).map(|(_, v)| v)
}

/// Text a single-field stage produced: the value under `label` if the model
/// repeated it, otherwise everything before the first label line.
pub fn single_field(raw: &str, label: Label) -> String {
    if let Some(v) = section(raw, label) {
        return v;
    }
    let mut kept = Vec::new();
    for line in raw.lines() {
        if match_label(line).is_some() {
            break;
        }
        let line = line.trim();
        if !line.is_empty() {
            kept.push(line);
        }
    }
    kept.join(" ")
}

/// Template markers a well-formed field never contains.
pub fn has_template_residue(s: &str) -> bool {
    const RESIDUE: [&str; 4] = ["(your question with", "(your brief answer", "(your rationale", "Feedback:::"];
    if RESIDUE.iter().any(|r| s.contains(r)) {
        return true;
    }
    // <Label> tokens or {placeholder} markers
    for (open, close) in [('<', '>'), ('{', '}')] {
        let mut rest = s;
        while let Some(i) = rest.find(open) {
            let after = &rest[i + 1..];
            match after.find(close) {
                Some(j) => {
                    let inner = &after[..j];
                    let is_label = LABELS.iter().any(|l| inner.eq_ignore_ascii_case(l.text()));
                    let is_placeholder = open == '{' && !inner.is_empty() && inner.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ' ');
                    if is_label || is_placeholder {
                        return true;
                    }
                    rest = &after[j + 1..];
                }
                None => break,
            }
        }
    }
    false
}

/// True when `s` ends like a finished sentence (., ?, ! possibly inside quotes or brackets).
pub fn has_terminal_punctuation(s: &str) -> bool {
    let t = s.trim_end().trim_end_matches(['"', '\'', ')', ']', '\u{201d}', '\u{2019}']);
    t.ends_with(['.', '?', '!'])
}

pub fn parse_triplet(raw: &str, dialect: Dialect) -> Result<ParsedTriplet, ParseError> {
    let secs = sections(raw);
    let first = |label: Label| secs.iter().find(|(l, _)| *l == label).map(|(_, v)| v.as_str());

    let question = first(Label::Question);
    let answer = first(Label::ShortAnswer);
    let explanation = match dialect {
        Dialect::Reason => first(Label::Reason),
        Dialect::ReasonedAnswer => first(Label::ReasonedAnswer),
        Dialect::Either => first(Label::ReasonedAnswer).or_else(|| first(Label::Reason)),
    };
    let explanation_name = match dialect {
        Dialect::Reason => "Reason",
        Dialect::ReasonedAnswer => "Reasoned Answer",
        Dialect::Either => "Reason/Reasoned Answer",
    };

    let fields = [("Question", question), ("Short Answer", answer), (explanation_name, explanation)];
    let mut values: [&str; 3] = [""; 3];
    for (slot, (name, value)) in values.iter_mut().zip(fields) {
        let v = value.ok_or_else(|| ParseError::TokenFormat(alloc::format!("missing {name} field")))?;
        if v.is_empty() {
            return Err(ParseError::TokenFormat(alloc::format!("empty {name} field")));
        }
        if has_template_residue(v) {
            return Err(ParseError::TokenFormat(alloc::format!("{name} field holds a template marker")));
        }
        *slot = v;
    }
    if !has_terminal_punctuation(values[0]) {
        return Err(ParseError::Unfinished("question"));
    }
    if !has_terminal_punctuation(values[2]) {
        return Err(ParseError::Unfinished("explanation"));
    }
    Ok(ParsedTriplet {
        question: values[0].to_string(),
        answer: values[1].to_string(),
        explanation: values[2].to_string(),
    })
}
