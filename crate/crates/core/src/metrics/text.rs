//! Corpus tokenization: ASCII punctuation removed, lowercased, split on whitespace.

use alloc::string::String;
use alloc::vec::Vec;

pub fn clean(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_ascii() {
            if !c.is_ascii_punctuation() {
                out.push(c.to_ascii_lowercase());
            }
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

pub fn clean_tokens(text: &str) -> Vec<String> {
    clean(text).split_whitespace().map(String::from).collect()
}

pub fn token_count(text: &str) -> usize {
    clean(text).split_whitespace().count()
}
