use serde::Deserialize;
use vqanle_core::metrics::validity::{validate_triplet, ValidityRules, Verdict};
use vqanle_core::parse::{parse_triplet, Dialect, ParseError};
use vqanle_core::triplet::{PipelineKind, Triplet, TripletMeta};

#[derive(Deserialize)]
struct Case {
    name: String,
    pipeline: PipelineKind,
    raw: String,
    expect: String,
}

fn classify(raw: &str, pipeline: PipelineKind) -> String {
    let p = match parse_triplet(raw, Dialect::Either) {
        Ok(p) => p,
        Err(ParseError::TokenFormat(_)) => return "TokenFormatError".into(),
        Err(ParseError::Unfinished(_)) => return "UnfinishedGeneration".into(),
    };
    let t = Triplet {
        question: p.question,
        answer: p.answer,
        explanation: p.explanation,
        meta: TripletMeta {
            image_id: "x".into(),
            pipeline,
            prefix: "what".into(),
            object: None,
            model: "m".into(),
            seed: 0,
            raw: vec![],
            rerank: None,
        },
    };
    match validate_triplet(&t, &ValidityRules::default()) {
        Verdict::Valid => "valid".into(),
        Verdict::Invalid { reason, .. } => reason.as_str().into(),
    }
}

#[test]
fn labeled_examples() {
    let cases: Vec<Case> = serde_json::from_str(include_str!("fixtures/parser_corpus.json")).unwrap();
    assert!(cases.len() >= 5);
    for c in &cases {
        assert_eq!(classify(&c.raw, c.pipeline), c.expect, "{}", c.name);
    }
}

#[test]
fn both_dialects_give_the_same_fields() {
    let a = parse_triplet("Question: Is it red?\nShort Answer: Yes\nReason: The paint is red.", Dialect::Either).unwrap();
    let b = parse_triplet("Question: Is it red?\nShort Answer: Yes\nReasoned Answer: The paint is red.", Dialect::Either).unwrap();
    assert_eq!(a, b);
    assert!(parse_triplet("Question: Is it red?\nShort Answer: Yes\nReason: The paint is red.", Dialect::Reason).is_ok());
    assert!(parse_triplet("Question: Is it red?\nShort Answer: Yes\nReasoned Answer: The paint is red.", Dialect::ReasonedAnswer).is_ok());
}
