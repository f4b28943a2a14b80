mod common;

use common::fixture;
use proptest::prelude::*;
use vqanle::dataset::{read_dataset, to_line, write_dataset, DatasetError};
use vqanle_core::triplet::{InvalidReason, PipelineKind, RawOutput, SlotOutcome, SlotRecord, Triplet, TripletMeta};
use vqanle_core::Stage;

const RAW: &str = "<Question>: What is the make and model of the car in the foreground?\n\
<Short Answer>: The car in the foreground is a Mercedes-Benz C-Class.\n\
<Reasoned Answer>: The car has a distinctive front grille and logo ...";

fn valid_record() -> SlotRecord {
    let meta = TripletMeta {
        image_id: "2370799".into(),
        pipeline: PipelineKind::SingleStep,
        prefix: "what".into(),
        object: None,
        model: "llava-hf/llava-1.5-7b-hf".into(),
        seed: 42,
        raw: vec![RawOutput { template: "singlestep-optim".into(), text: RAW.into() }],
        rerank: None,
    };
    let t = Triplet {
        question: "What is the make and model of the car in the foreground?".into(),
        answer: "The car in the foreground is a Mercedes-Benz C-Class.".into(),
        explanation: "The car has a distinctive front grille and logo ...".into(),
        meta,
    };
    SlotRecord::new(0, "2370799", 0, PipelineKind::SingleStep, SlotOutcome::Valid(t))
}

#[test]
fn golden_record_serialization() {
    let pinned = std::fs::read_to_string(fixture("golden_record.jsonl")).unwrap();
    assert_eq!(to_line(&valid_record()).unwrap(), pinned.trim_end());
    let back: SlotRecord = serde_json::from_str(pinned.trim_end()).unwrap();
    assert_eq!(back, valid_record());
}

fn mixed(i: usize) -> SlotRecord {
    let mut r = valid_record();
    r.index = i;
    r.slot = i % 3;
    r.id = format!("img{}_{}", i / 3, i % 3);
    r.outcome = match i % 3 {
        0 => r.outcome,
        1 => SlotOutcome::Invalid {
            reason: InvalidReason::UnfinishedGeneration,
            stage: Some(Stage::Triplet),
            detail: format!("cut off {i}"),
            raw: vec![RawOutput { template: "singlestep-optim".into(), text: "Question: What is".into() }],
        },
        _ => SlotOutcome::Skipped { reason: InvalidReason::NoEligibleObject, detail: "no objects".into() },
    };
    r
}

#[test]
fn hundred_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let records: Vec<SlotRecord> = (0..100).map(mixed).collect();
    write_dataset(&path, &records).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), records);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 100);
}

#[test]
fn truncated_line_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    write_dataset(&path, &(0..5).map(mixed).collect::<Vec<_>>()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let cut = &lines[2][..lines[2].len() / 2];
    lines[2] = cut;
    std::fs::write(&path, lines.join("\n")).unwrap();
    match read_dataset(&path) {
        Err(DatasetError::Malformed { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a malformed-line error, got {other:?}"),
    }
}

proptest! {
    #[test]
    fn text_fields_survive(q in "\\PC{1,40}", a in "\\PC{1,20}", e in "[ -~\\n\\t\"\\\\]{1,60}") {
        let mut r = valid_record();
        if let SlotOutcome::Valid(t) = &mut r.outcome {
            t.question = q;
            t.answer = a;
            t.explanation = e;
        }
        let line = to_line(&r).unwrap();
        prop_assert!(!line.contains('\n'));
        let back: SlotRecord = serde_json::from_str(&line).unwrap();
        prop_assert_eq!(back, r);
    }
}
