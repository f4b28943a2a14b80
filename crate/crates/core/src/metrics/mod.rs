//! Dataset quality metrics.

pub mod agreement;
pub mod dedup;
pub mod distribution;
pub mod efficiency;
pub mod histogram;
pub mod rouge;
pub mod stats;
pub mod text;
pub mod validity;

pub use agreement::{gwet_ac2, Criterion, RatingTable};
pub use dedup::dedup_triplets;
pub use distribution::{jsd, pearson};
pub use efficiency::{efficiency_report, EfficiencyReport};
pub use histogram::{length_histogram, Histogram};
pub use rouge::{rouge_1, rouge_l, RougeScore};
pub use stats::{corpus_stats, CorpusStats};
pub use validity::{validate_triplet, ValidityRules, Verdict};
