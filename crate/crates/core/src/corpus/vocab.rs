//! Token vocabulary with fixed special indices and count-based pruning.

use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use super::CorpusError;

pub const UNK: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const PAD: usize = 3;

const SPECIALS: [&str; 4] = ["<unk>", "<bos>", "<eos>", "<pad>"];

/// Bijection between retained tokens and indices. Tokens occurring
/// fewer than `min_count` times map to [`UNK`] at lookup time; the four
/// specials hold indices 0-3 and are never pruned.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
    counts: Vec<u64>,
    min_count: u32,
}

impl Vocabulary {
    /// Builds a vocabulary from tokenized review texts.
    ///
    /// Retained tokens are ordered by frequency (descending), ties
    /// broken lexicographically, starting at index 4.
    pub fn build<S: AsRef<str>>(texts: &[Vec<S>], min_count: u32) -> Self {
        assert!(min_count >= 1, "min_count must be at least 1");
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for text in texts {
            for token in text {
                *freq.entry(token.as_ref()).or_insert(0) += 1;
            }
        }
        let mut retained: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|(tok, n)| *n >= min_count as u64 && !SPECIALS.contains(tok))
            .collect();
        retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut index_to_token: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        let mut counts = vec![0u64; SPECIALS.len()];
        for (tok, n) in retained {
            index_to_token.push(tok.to_string());
            counts.push(n);
        }
        let token_to_index = index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            token_to_index,
            index_to_token,
            counts,
            min_count,
        }
    }

    /// Vocabulary size including the four specials.
    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // specials are always present
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    /// Index of a token, or [`UNK`] when pruned/unknown.
    pub fn lookup(&self, token: &str) -> usize {
        self.token_to_index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, index: usize) -> &str {
        &self.index_to_token[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    /// Whether a token survived pruning.
    pub fn contains(&self, token: &str) -> bool {
        self.token_to_index.contains_key(token)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    /// Writes the `token<TAB>index<TAB>count` table.
    pub fn save_tsv(&self, path: &Path) -> Result<(), CorpusError> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        for (i, tok) in self.index_to_token.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", tok, i, self.counts[i])?;
        }
        Ok(())
    }

    pub fn load_tsv(path: &Path) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut index_to_token = Vec::new();
        let mut counts = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let mut parts = line.split('\t');
            let token = parts.next().unwrap_or_default().to_string();
            let index: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CorpusError::Format {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: "missing index column".into(),
                })?;
            let count: u64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CorpusError::Format {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: "missing count column".into(),
                })?;
            if index != index_to_token.len() {
                return Err(CorpusError::Format {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("non-contiguous index {}", index),
                });
            }
            index_to_token.push(token);
            counts.push(count);
        }
        if index_to_token.len() < SPECIALS.len() {
            return Err(CorpusError::Format {
                path: path.display().to_string(),
                line: 0,
                message: "vocabulary file lacks the special tokens".into(),
            });
        }
        let token_to_index = index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            token_to_index,
            index_to_token,
            counts,
            min_count: 1,
        })
    }
}
