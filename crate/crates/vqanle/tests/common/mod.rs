//! Fixture locations and the ledgers the scripted mock runs must produce.

#![allow(dead_code)]

use std::path::PathBuf;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub const PIPELINES: [&str; 3] = ["single", "vip", "multi"];

/// Non-valid slots per pipeline as (index, status, reason); every other of
/// the 30 slots is valid.
pub fn expected_ledger(pipeline: &str) -> Vec<(usize, &'static str, &'static str)> {
    match pipeline {
        "single" => vec![
            (4, "invalid", "TokenFormatError"),
            (7, "invalid", "UnfinishedGeneration"),
            (13, "invalid", "Backend"),
        ],
        "vip" => vec![
            (2, "invalid", "HiddenContext"),
            (5, "invalid", "TokenFormatError"),
            (8, "invalid", "UnfinishedGeneration"),
            (27, "skipped", "NoEligibleObject"),
            (28, "skipped", "NoEligibleObject"),
            (29, "skipped", "NoEligibleObject"),
        ],
        "multi" => vec![(3, "invalid", "UnfinishedGeneration"), (6, "invalid", "TokenFormatError")],
        other => panic!("no fixture pipeline {other}"),
    }
}
