//! Exact three-field deduplication.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::triplet::Triplet;

/// Trimmed, with internal whitespace runs collapsed to one space.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for w in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

/// Keep the first occurrence of every normalized (q, a, e); returns survivors
/// in input order and the number of duplicates dropped.
pub fn dedup_by_fields<T>(items: Vec<T>, fields: impl Fn(&T) -> [&str; 3]) -> (Vec<T>, usize) {
    let mut seen: BTreeSet<[String; 3]> = BTreeSet::new();
    let before = items.len();
    let kept: Vec<T> = items
        .into_iter()
        .filter(|t| {
            let [q, a, e] = fields(t);
            seen.insert([normalize(q), normalize(a), normalize(e)])
        })
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

pub fn dedup_triplets(valid: Vec<Triplet>) -> (Vec<Triplet>, usize) {
    dedup_by_fields(valid, |t| t.fields())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(t: &(String, String, String)) -> [&str; 3] {
        [&t.0, &t.1, &t.2]
    }

    fn tri(q: &str, a: &str, e: &str) -> (String, String, String) {
        (q.into(), a.into(), e.into())
    }

    #[test]
    fn identical_collapse_and_explanation_difference_survives() {
        let (kept, dropped) = dedup_by_fields(alloc::vec![tri("q?", "a", "e."), tri("q?", "a", "e."), tri("q?", "a", "other.")], f);
        assert_eq!(kept.len(), 2);
        assert_eq!(dropped, 1);
    }

    #[test]
    fn whitespace_is_normalized() {
        let (kept, _) = dedup_by_fields(alloc::vec![tri(" q?", "a  b", "e."), tri("q?", "a b", "e.\n")], f);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].0, " q?");
    }

    #[test]
    fn field_boundaries_matter() {
        let (kept, _) = dedup_by_fields(alloc::vec![tri("a b", "c", "d"), tri("a", "b c", "d")], f);
        assert_eq!(kept.len(), 2);
    }

    proptest! {
        #[test]
        fn idempotent_subset(items in prop::collection::vec(("[ab]{1,2}", "[ab]{1,2}", "[ab]{1,2}"), 0..30)) {
            let (once, _) = dedup_by_fields(items.clone(), f);
            let (twice, dropped) = dedup_by_fields(once.clone(), f);
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(dropped, 0);
            prop_assert!(once.iter().all(|t| items.contains(t)));
        }
    }
}
