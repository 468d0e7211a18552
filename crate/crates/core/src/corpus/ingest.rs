//! JSON Lines ingestion with per-line diagnostics.
//!
//! One record per line. Invalid lines are skipped and reported with
//! their line numbers; when more than 10% of lines fail, the file is
//! rejected outright (almost always a wrong-schema mistake).

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CorpusError, RecommendationInstance, Review, Split};

/// A skipped line and why.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Records accepted from one file, with the lines that were not.
#[derive(Debug)]
pub struct IngestOutcome<T> {
    pub records: Vec<T>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Basic information about a local business.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Business {
    pub business_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// Aggregate information about a single reviewer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct User {
    pub user_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn ingest<T: DeserializeOwned>(
    path: &Path,
    validate: impl Fn(&T) -> Result<(), String>,
) -> Result<IngestOutcome<T>, CorpusError> {
    let file = std::fs::File::open(path).map_err(CorpusError::Io)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut total = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match serde_json::from_str::<T>(&line) {
            Ok(record) => match validate(&record) {
                Ok(()) => records.push(record),
                Err(message) => diagnostics.push(Diagnostic {
                    line: idx + 1,
                    message,
                }),
            },
            Err(e) => diagnostics.push(Diagnostic {
                line: idx + 1,
                message: format!("malformed record: {}", e),
            }),
        }
    }
    // A systematic failure (wrong schema) is fatal; a couple of bad
    // lines in a small file is not, so the 10% rule carries a grace
    // floor of two lines.
    if diagnostics.len() * 10 > total && diagnostics.len() > 2 {
        return Err(CorpusError::TooManyInvalid {
            path: path.display().to_string(),
            skipped: diagnostics.len(),
            total,
        });
    }
    Ok(IngestOutcome {
        records,
        diagnostics,
    })
}

/// Reads review records, enforcing the [`Review`] invariants.
pub fn ingest_reviews(path: &Path) -> Result<IngestOutcome<Review>, CorpusError> {
    ingest(path, Review::validate)
}

pub fn ingest_businesses(path: &Path) -> Result<IngestOutcome<Business>, CorpusError> {
    ingest(path, |b: &Business| {
        if b.business_id.is_empty() {
            Err("empty business_id".into())
        } else {
            Ok(())
        }
    })
}

pub fn ingest_users(path: &Path) -> Result<IngestOutcome<User>, CorpusError> {
    ingest(path, |u: &User| {
        if u.user_id.is_empty() {
            Err("empty user_id".into())
        } else {
            Ok(())
        }
    })
}

#[derive(Serialize, Deserialize)]
struct InstanceLine {
    split: Split,
    #[serde(flatten)]
    instance: RecommendationInstance,
}

/// Writes instances as JSONL, one object per line with a `split` tag.
pub fn save_instances(
    path: &Path,
    instances: &[(Split, RecommendationInstance)],
) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for (split, instance) in instances {
        let line = serde_json::to_string(&InstanceLine {
            split: *split,
            instance: instance.clone(),
        })
        .expect("instance serialization cannot fail");
        writeln!(w, "{}", line)?;
    }
    Ok(())
}

/// Reads an instance file written by [`save_instances`].
pub fn load_instances(
    path: &Path,
) -> Result<Vec<(Split, RecommendationInstance)>, CorpusError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: InstanceLine =
            serde_json::from_str(&line).map_err(|e| CorpusError::Format {
                path: path.display().to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        out.push((parsed.split, parsed.instance));
    }
    Ok(out)
}

/// Writes raw reviews as JSONL.
pub fn save_reviews(path: &Path, reviews: &[Review]) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for review in reviews {
        writeln!(
            w,
            "{}",
            serde_json::to_string(review).expect("review serialization cannot fail")
        )?;
    }
    Ok(())
}
