//! Review corpus handling: records, tokenization, vocabulary and
//! instance assembly.

mod assemble;
mod ingest;
mod tokenize;
mod vocab;

pub use assemble::{
    assemble_instances, split_instances, tag_splits, truncate_to_recent, SplitFractions,
};
pub use ingest::{
    ingest_businesses, ingest_reviews, ingest_users, load_instances, save_instances,
    save_reviews, Business, Diagnostic, IngestOutcome, User,
};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, BOS, EOS, PAD, UNK};

use serde::{Deserialize, Serialize};

/// Reviews are truncated to this many tokens before any modeling.
pub const MAX_REVIEW_TOKENS: usize = 200;

/// Instance sequences keep only this many most-recent reviews.
pub const MAX_SEQUENCE_REVIEWS: usize = 30;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {skipped} of {total} lines invalid (more than 10%), wrong schema?")]
    TooManyInvalid {
        path: String,
        skipped: usize,
        total: usize,
    },
}

/// One review text with its rating, author, product and timestamp.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Review {
    pub review_id: String,
    pub user_id: String,
    pub product_id: String,
    pub text: String,
    pub score: f64,
    pub timestamp: i64,
}

impl Review {
    /// Checks the record invariants; the message names the violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.review_id.is_empty() {
            return Err("empty review_id".into());
        }
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if self.product_id.is_empty() {
            return Err("empty product_id".into());
        }
        if !(0.0..=5.0).contains(&self.score) {
            return Err(format!("score out of range: {}", self.score));
        }
        if self.timestamp < 0 {
            return Err(format!("negative timestamp: {}", self.timestamp));
        }
        if self.text.trim().is_empty() {
            return Err("empty text".into());
        }
        Ok(())
    }

    /// Tokenized text, capped at [`MAX_REVIEW_TOKENS`].
    pub fn tokens(&self) -> Vec<String> {
        let mut toks = tokenize(&self.text);
        toks.truncate(MAX_REVIEW_TOKENS);
        toks
    }
}

/// Sorts reviews ascending by timestamp, ties broken by review id.
pub fn sort_temporally(reviews: &mut [Review]) {
    reviews.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.review_id.cmp(&b.review_id))
    });
}

/// One model input/output pair: the target product's reviews, the
/// user's history, the (later-filled) neighborhood history, and the
/// held-out gold score and review.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecommendationInstance {
    pub user_id: String,
    pub product_id: String,
    pub target_reviews: Vec<Review>,
    pub user_reviews: Vec<Review>,
    #[serde(default)]
    pub neighbor_reviews: Vec<Review>,
    pub gold_score: f64,
    pub gold_review: Vec<String>,
    pub gold_review_id: String,
}

impl RecommendationInstance {
    /// Leak-freedom and ordering invariants, by id and timestamp.
    pub fn check_invariants(&self) -> Result<(), String> {
        for r in self.target_reviews.iter().chain(&self.user_reviews) {
            if r.review_id == self.gold_review_id {
                return Err(format!(
                    "gold review {} leaked into instance ({}, {})",
                    r.review_id, self.user_id, self.product_id
                ));
            }
        }
        for seq in [
            &self.target_reviews,
            &self.user_reviews,
            &self.neighbor_reviews,
        ] {
            for w in seq.windows(2) {
                if (w[0].timestamp, &w[0].review_id) > (w[1].timestamp, &w[1].review_id) {
                    return Err("sequence not in temporal order".into());
                }
            }
        }
        if self.target_reviews.is_empty() {
            return Err("instance without target reviews".into());
        }
        Ok(())
    }
}

/// Which part of the corpus an instance belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// Train/dev/test instances plus every raw review (the raw reviews
/// still feed embeddings and the rating matrix).
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: Vec<RecommendationInstance>,
    pub dev: Vec<RecommendationInstance>,
    pub test: Vec<RecommendationInstance>,
    pub reviews: Vec<Review>,
}

impl DatasetSplit {
    /// Reviews usable for fitting anything: every raw review except the
    /// gold reviews of dev and test pairs, which must stay unseen.
    pub fn training_reviews(&self) -> Vec<Review> {
        let held: std::collections::HashSet<&str> = self
            .dev
            .iter()
            .chain(&self.test)
            .map(|i| i.gold_review_id.as_str())
            .collect();
        self.reviews
            .iter()
            .filter(|r| !held.contains(r.review_id.as_str()))
            .cloned()
            .collect()
    }

    pub fn instances(&self, split: Split) -> &[RecommendationInstance] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }
}
