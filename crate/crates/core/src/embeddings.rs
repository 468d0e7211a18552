//! Skip-gram word embeddings with negative sampling, and review
//! vectors as plain embedding averages.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::corpus::{CorpusError, Vocabulary};
use crate::nn::Tensor;

/// Default embedding width.
pub const DEFAULT_DIM: usize = 128;

/// Word vectors for a vocabulary: the input matrix is the embedding
/// proper, the output matrix holds the context vectors used only while
/// training.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    input: Tensor,
    output: Tensor,
    dim: usize,
    vocab: Vocabulary,
}

/// Skip-gram training settings.
#[derive(Clone, Debug)]
pub struct SkipGramConfig {
    pub window: usize,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            window: 5,
            dim: DEFAULT_DIM,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.05,
            seed: 1,
        }
    }
}

impl EmbeddingTable {
    /// Random table in `uniform(-0.5/dim, 0.5/dim)`, the customary
    /// word2vec initialization, with a zeroed output matrix.
    pub fn init<R: Rng>(vocab: &Vocabulary, dim: usize, rng: &mut R) -> Self {
        let bound = 0.5 / dim as f64;
        EmbeddingTable {
            input: Tensor::uniform(&[vocab.len(), dim], -bound, bound, rng),
            output: Tensor::zeros(&[vocab.len(), dim]),
            dim,
            vocab: vocab.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// The `|V| x dim` input matrix; rows align with vocabulary indices.
    pub fn matrix(&self) -> &Tensor {
        &self.input
    }

    /// Replaces the input matrix (used when joint training fine-tunes
    /// the embeddings and the table is persisted afterwards).
    pub fn set_matrix(&mut self, matrix: Tensor) {
        assert_eq!(
            matrix.shape(),
            self.input.shape(),
            "embedding matrix shape mismatch: {:?} vs {:?}",
            matrix.shape(),
            self.input.shape()
        );
        self.input = matrix;
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        self.input.row_slice(index)
    }

    /// Mean of the token embeddings; the review representation.
    ///
    /// Unknown tokens map to `UNK`. An empty review yields the zero
    /// vector with a logged diagnostic.
    pub fn embed_review<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        if tokens.is_empty() {
            log::warn!("embedding an empty review; returning the zero vector");
            return vec![0.0; self.dim];
        }
        let mut acc = vec![0.0; self.dim];
        for t in tokens {
            let row = self.vector(self.vocab.lookup(t.as_ref()));
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let m = tokens.len() as f64;
        for a in acc.iter_mut() {
            *a /= m;
        }
        acc
    }

    /// TSV with header `token<TAB>v1..v<dim>`.
    pub fn save_tsv(&self, path: &Path) -> Result<(), CorpusError> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        let header: Vec<String> = (1..=self.dim).map(|i| format!("v{}", i)).collect();
        writeln!(w, "token\t{}", header.join("\t"))?;
        for i in 0..self.vocab.len() {
            let values: Vec<String> = self.vector(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}\t{}", self.vocab.token(i), values.join("\t"))?;
        }
        Ok(())
    }

    /// Loads pretrained vectors; tokens missing from the file keep
    /// their initialization, rows in the file but not in the
    /// vocabulary are ignored.
    pub fn load_tsv(vocab: &Vocabulary, path: &Path) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines();
        let header = lines.next().transpose()?.ok_or_else(|| CorpusError::Format {
            path: path.display().to_string(),
            line: 1,
            message: "empty embedding file".into(),
        })?;
        let dim = header.split('\t').count() - 1;
        if dim == 0 {
            return Err(CorpusError::Format {
                path: path.display().to_string(),
                line: 1,
                message: "header has no vector columns".into(),
            });
        }
        let mut rng = crate::seeded_rng(0);
        let mut table = EmbeddingTable::init(vocab, dim, &mut rng);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let mut parts = line.split('\t');
            let token = parts.next().unwrap_or_default();
            let values: Result<Vec<f64>, _> = parts.map(|s| s.parse::<f64>()).collect();
            let values = values.map_err(|e| CorpusError::Format {
                path: path.display().to_string(),
                line: lineno + 2,
                message: e.to_string(),
            })?;
            if values.len() != dim {
                return Err(CorpusError::Format {
                    path: path.display().to_string(),
                    line: lineno + 2,
                    message: format!("expected {} values, found {}", dim, values.len()),
                });
            }
            if vocab.contains(token) {
                let idx = vocab.lookup(token);
                let row_start = idx * dim;
                table.input.data_mut()[row_start..row_start + dim].copy_from_slice(&values);
            }
        }
        Ok(table)
    }
}

/// Trains skip-gram with negative sampling over tokenized reviews.
///
/// Negatives are drawn from the unigram distribution raised to 0.75;
/// no subsampling. Deterministic under a fixed seed. Returns the table
/// and the mean per-pair loss of each epoch.
pub fn train_skipgram(
    corpus: &[Vec<String>],
    vocab: &Vocabulary,
    config: &SkipGramConfig,
) -> (EmbeddingTable, Vec<f64>) {
    assert!(!corpus.is_empty(), "skip-gram training on an empty corpus");
    let mut rng = crate::seeded_rng(config.seed);
    let mut table = EmbeddingTable::init(vocab, config.dim, &mut rng);

    let encoded: Vec<Vec<usize>> = corpus.iter().map(|text| vocab.encode(text)).collect();
    if encoded.iter().all(|t| t.len() <= config.window) {
        log::warn!(
            "corpus sentences are no longer than the window ({}); training on what exists",
            config.window
        );
    }

    // unigram^0.75 negative-sampling distribution over vocabulary ids
    let mut weights = vec![0.0f64; vocab.len()];
    for text in &encoded {
        for &id in text {
            weights[id] += 1.0;
        }
    }
    for w in weights.iter_mut() {
        *w = w.powf(0.75);
    }
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap();
    assert!(total > 0.0, "no tokens to sample negatives from");
    let sample_negative = |rng: &mut crate::Rng| -> usize {
        let x = rng.gen::<f64>() * total;
        cumulative.partition_point(|&c| c <= x).min(vocab.len() - 1)
    };

    let dim = config.dim;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _epoch in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for text in &encoded {
            for (i, &center) in text.iter().enumerate() {
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window + 1).min(text.len());
                for j in lo..hi {
                    if j == i {
                        continue;
                    }
                    let context = text[j];
                    let mut grad_center = vec![0.0; dim];
                    let center_row = center * dim;

                    // positive pair, label 1
                    let train_pair = |target: usize,
                                          label: f64,
                                          table: &mut EmbeddingTable,
                                          grad_center: &mut [f64]|
                     -> f64 {
                        let target_row = target * dim;
                        let dot: f64 = table.input.data()[center_row..center_row + dim]
                            .iter()
                            .zip(&table.output.data()[target_row..target_row + dim])
                            .map(|(a, b)| a * b)
                            .sum();
                        let pred = 1.0 / (1.0 + (-dot).exp());
                        let g = (label - pred) * config.learning_rate;
                        for k in 0..dim {
                            let out_v = table.output.data()[target_row + k];
                            grad_center[k] += g * out_v;
                            table.output.data_mut()[target_row + k] +=
                                g * table.input.data()[center_row + k];
                        }
                        if label > 0.5 {
                            -pred.max(1e-12).ln()
                        } else {
                            -(1.0 - pred).max(1e-12).ln()
                        }
                    };

                    loss_sum += train_pair(context, 1.0, &mut table, &mut grad_center);
                    for _ in 0..config.negatives {
                        let neg = sample_negative(&mut rng);
                        if neg == context {
                            continue;
                        }
                        loss_sum += train_pair(neg, 0.0, &mut table, &mut grad_center);
                    }
                    for k in 0..dim {
                        table.input.data_mut()[center_row + k] += grad_center[k];
                    }
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs == 0 {
            0.0
        } else {
            loss_sum / pairs as f64
        });
    }
    (table, epoch_losses)
}

/// Cosine similarity between two dense vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
