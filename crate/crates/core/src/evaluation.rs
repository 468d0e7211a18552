//! Metrics, rating baselines and the experiment grid.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{DatasetSplit, RecommendationInstance, Review, Vocabulary};
use crate::embeddings::{cosine, EmbeddingTable};
use crate::model::{Inference, OpinionModel, PreparedInstance};
use crate::neighbors::TriFactorization;
use crate::nn::tensor::Tensor;
use crate::training::{train, TrainConfig, TrainError};

/// Mean squared error. Panics on mismatched or empty inputs.
pub fn mse(predictions: &[f64], golds: &[f64]) -> f64 {
    assert_eq!(
        predictions.len(),
        golds.len(),
        "mse length mismatch: {} vs {}",
        predictions.len(),
        golds.len()
    );
    assert!(!predictions.is_empty(), "mse of zero pairs");
    predictions
        .iter()
        .zip(golds)
        .map(|(p, g)| (p - g) * (p - g))
        .sum::<f64>()
        / predictions.len() as f64
}

/// Clipped unigram overlap: returns `(precision, recall, f1)`.
///
/// The reference must be nonempty; an empty candidate scores zero.
pub fn rouge1<S: AsRef<str>, T: AsRef<str>>(candidate: &[S], reference: &[T]) -> (f64, f64, f64) {
    assert!(!reference.is_empty(), "rouge1 against an empty reference");
    if candidate.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for t in reference {
        *ref_counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut cand_counts: HashMap<&str, usize> = HashMap::new();
    for t in candidate {
        *cand_counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let overlap: usize = cand_counts
        .iter()
        .map(|(tok, n)| ref_counts.get(tok).copied().unwrap_or(0).min(*n))
        .sum();
    let precision = overlap as f64 / candidate.len() as f64;
    let recall = overlap as f64 / reference.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// ROUGE-1 components; the headline number is recall.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Mean of the existing target-review scores (the rating a site like a
/// review aggregator would display).
pub fn rs_average(instance: &RecommendationInstance) -> f64 {
    assert!(
        !instance.target_reviews.is_empty(),
        "rs_average over an instance without target reviews"
    );
    instance.target_reviews.iter().map(|r| r.score).sum::<f64>()
        / instance.target_reviews.len() as f64
}

/// Training statistics and representations shared by the baselines.
pub struct BaselineContext {
    global_mean: f64,
    user_deviation: HashMap<String, f64>,
    product_deviation: HashMap<String, f64>,
    /// Per user, their training ratings as `(product, score)`.
    user_ratings: HashMap<String, Vec<(String, f64)>>,
    /// Uncustomized product representation: the mean of the product's
    /// training review embeddings.
    product_vectors: HashMap<String, Vec<f64>>,
}

impl BaselineContext {
    pub fn build(training_reviews: &[Review], table: &EmbeddingTable) -> Self {
        assert!(!training_reviews.is_empty(), "baseline context over an empty corpus");
        let global_mean =
            training_reviews.iter().map(|r| r.score).sum::<f64>() / training_reviews.len() as f64;

        let mut per_user: HashMap<String, Vec<f64>> = HashMap::new();
        let mut per_product: HashMap<String, Vec<f64>> = HashMap::new();
        let mut user_ratings: HashMap<String, Vec<(String, f64)>> = HashMap::new();
        let mut product_token_vecs: HashMap<String, Vec<Vec<f64>>> = HashMap::new();
        for r in training_reviews {
            per_user.entry(r.user_id.clone()).or_default().push(r.score);
            per_product
                .entry(r.product_id.clone())
                .or_default()
                .push(r.score);
            user_ratings
                .entry(r.user_id.clone())
                .or_default()
                .push((r.product_id.clone(), r.score));
            product_token_vecs
                .entry(r.product_id.clone())
                .or_default()
                .push(table.embed_review(&r.tokens()));
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let user_deviation = per_user
            .into_iter()
            .map(|(u, scores)| (u, mean(&scores) - global_mean))
            .collect();
        let product_deviation = per_product
            .into_iter()
            .map(|(p, scores)| (p, mean(&scores) - global_mean))
            .collect();
        let product_vectors = product_token_vecs
            .into_iter()
            .map(|(p, vecs)| {
                let dim = vecs[0].len();
                let mut acc = vec![0.0; dim];
                for v in &vecs {
                    for (a, x) in acc.iter_mut().zip(v) {
                        *a += x;
                    }
                }
                for a in acc.iter_mut() {
                    *a /= vecs.len() as f64;
                }
                (p, acc)
            })
            .collect();
        BaselineContext {
            global_mean,
            user_deviation,
            product_deviation,
            user_ratings,
            product_vectors,
        }
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    /// `s_all + s_u + s_i`; unseen users/products contribute zero
    /// deviation.
    pub fn rs_linear(&self, user: &str, product: &str) -> f64 {
        self.global_mean
            + self.user_deviation.get(user).copied().unwrap_or(0.0)
            + self.product_deviation.get(product).copied().unwrap_or(0.0)
    }

    /// Item-based kNN: among the products the user rated in training,
    /// the `k` nearest to the target by cosine over product vectors,
    /// similarity-weighted. Falls back to [`rs_average`] when the user
    /// has no usable training ratings.
    pub fn rs_item(&self, instance: &RecommendationInstance, k: usize) -> f64 {
        let Some(target_vec) = self.product_vectors.get(&instance.product_id) else {
            return rs_average(instance);
        };
        let Some(rated) = self.user_ratings.get(&instance.user_id) else {
            return rs_average(instance);
        };
        let mut scored: Vec<(f64, f64)> = rated
            .iter()
            .filter(|(p, _)| p != &instance.product_id)
            .filter_map(|(p, s)| {
                self.product_vectors
                    .get(p)
                    .map(|v| (cosine(target_vec, v), *s))
            })
            .collect();
        if scored.is_empty() {
            return rs_average(instance);
        }
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        scored.truncate(k.max(1));
        // negative similarities carry no weight; an all-nonpositive
        // neighborhood degrades to the plain mean of the k scores
        let weight_sum: f64 = scored.iter().map(|(sim, _)| sim.max(0.0)).sum();
        if weight_sum == 0.0 {
            return scored.iter().map(|(_, s)| s).sum::<f64>() / scored.len() as f64;
        }
        scored
            .iter()
            .map(|(sim, s)| sim.max(0.0) * s)
            .sum::<f64>()
            / weight_sum
    }

    /// Matrix-factorization reconstruction `(F S T^T)_{product, user}`,
    /// clamped to the rating scale. Unseen users or products fall back
    /// to [`rs_average`]; the flag reports the fallback.
    pub fn rs_mf(
        &self,
        factorization: &TriFactorization,
        instance: &RecommendationInstance,
    ) -> (f64, bool) {
        let product = factorization
            .product_ids()
            .iter()
            .position(|p| p == &instance.product_id);
        let user = factorization.user_idx(&instance.user_id);
        match (product, user) {
            (Some(p), Some(u)) => (factorization.reconstruct(p, u).clamp(0.0, 5.0), false),
            _ => (rs_average(instance), true),
        }
    }
}

/// One system's numbers on one split.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SystemMetrics {
    pub mse: Option<f64>,
    pub rouge: Option<RougeScore>,
}

/// One grid row: a system evaluated on dev and test.
#[derive(Clone, Debug, Serialize)]
pub struct GridRow {
    pub system: String,
    pub dev: Option<SystemMetrics>,
    pub test: Option<SystemMetrics>,
}

/// The grid output: rows plus per-instance inference records of the
/// neural systems on the test split.
#[derive(Serialize)]
pub struct EvalReport {
    pub rows: Vec<GridRow>,
    pub per_instance: Vec<(String, Vec<Inference>)>,
    pub config_echo: String,
}

/// Evaluates a trained model over instances: clamped-score MSE plus
/// mean ROUGE-1 of greedy generations against the gold reviews.
pub fn evaluate_model(
    model: &OpinionModel,
    instances: &[RecommendationInstance],
) -> (SystemMetrics, Vec<Inference>) {
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    let mut rouge_sum = (0.0, 0.0, 0.0);
    let mut rouge_n = 0usize;
    let mut records = Vec::new();
    for instance in instances {
        let prepared = PreparedInstance::from_instance(instance, &model.vocab);
        let inference = model.infer(&prepared);
        if let Some(score) = inference.predicted_score {
            preds.push(score);
            golds.push(instance.gold_score);
        }
        if !model.ablation.generation && !prepared.gold_tokens.is_empty() {
            let (p, r, f) = rouge1(&inference.generated_tokens, &prepared.gold_tokens);
            rouge_sum = (rouge_sum.0 + p, rouge_sum.1 + r, rouge_sum.2 + f);
            rouge_n += 1;
        }
        records.push(inference);
    }
    let metrics = SystemMetrics {
        mse: (!preds.is_empty()).then(|| mse(&preds, &golds)),
        rouge: (rouge_n > 0).then(|| RougeScore {
            precision: rouge_sum.0 / rouge_n as f64,
            recall: rouge_sum.1 / rouge_n as f64,
            f1: rouge_sum.2 / rouge_n as f64,
        }),
    };
    (metrics, records)
}

/// Evaluates one baseline over instances (rating only).
fn evaluate_baseline(
    instances: &[RecommendationInstance],
    mut predict: impl FnMut(&RecommendationInstance) -> f64,
) -> SystemMetrics {
    if instances.is_empty() {
        return SystemMetrics::default();
    }
    let preds: Vec<f64> = instances
        .iter()
        .map(|i| predict(i).clamp(0.0, 5.0))
        .collect();
    let golds: Vec<f64> = instances.iter().map(|i| i.gold_score).collect();
    SystemMetrics {
        mse: Some(mse(&preds, &golds)),
        rouge: None,
    }
}

/// Neighbor count used by the item-based baseline.
pub const RS_ITEM_K: usize = 5;

/// Runs the full grid: the provided neural systems (absent checkpoints
/// stay absent) plus the four rating baselines, on dev and test.
pub fn run_grid(
    data: &DatasetSplit,
    systems: &[(String, Option<&OpinionModel>)],
    context: &BaselineContext,
    factorization: &TriFactorization,
    config_echo: &str,
) -> EvalReport {
    let mut rows = Vec::new();
    let mut per_instance = Vec::new();
    for (name, model) in systems {
        match model {
            Some(model) => {
                let (dev, _) = evaluate_model(model, &data.dev);
                let (test, records) = evaluate_model(model, &data.test);
                per_instance.push((name.clone(), records));
                rows.push(GridRow {
                    system: name.clone(),
                    dev: Some(dev),
                    test: Some(test),
                });
            }
            None => {
                log::warn!("checkpoint for {:?} missing; row marked absent", name);
                rows.push(GridRow {
                    system: name.clone(),
                    dev: None,
                    test: None,
                });
            }
        }
    }

    let baselines: Vec<(&str, Box<dyn FnMut(&RecommendationInstance) -> f64>)> = vec![
        ("rs-average", Box::new(rs_average)),
        (
            "rs-linear",
            Box::new(|i: &RecommendationInstance| context.rs_linear(&i.user_id, &i.product_id)),
        ),
        (
            "rs-item",
            Box::new(|i: &RecommendationInstance| context.rs_item(i, RS_ITEM_K)),
        ),
        (
            "rs-mf",
            Box::new(|i: &RecommendationInstance| context.rs_mf(factorization, i).0),
        ),
    ];
    for (name, mut predict) in baselines {
        rows.push(GridRow {
            system: name.to_string(),
            dev: Some(evaluate_baseline(&data.dev, &mut predict)),
            test: Some(evaluate_baseline(&data.test, &mut predict)),
        });
    }

    EvalReport {
        rows,
        per_instance,
        config_echo: config_echo.to_string(),
    }
}

impl EvalReport {
    /// CSV schema:
    /// `system,split,mse,rouge1_recall,rouge1_precision,rouge1_f1`.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "system,split,mse,rouge1_recall,rouge1_precision,rouge1_f1")?;
        for row in &self.rows {
            for (split, metrics) in [("dev", &row.dev), ("test", &row.test)] {
                match metrics {
                    Some(m) => writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        row.system,
                        split,
                        m.mse.map(|v| v.to_string()).unwrap_or_default(),
                        m.rouge.map(|r| r.recall.to_string()).unwrap_or_default(),
                        m.rouge.map(|r| r.precision.to_string()).unwrap_or_default(),
                        m.rouge.map(|r| r.f1.to_string()).unwrap_or_default(),
                    )?,
                    None => writeln!(w, "{},{},,,,", row.system, split)?,
                }
            }
        }
        Ok(())
    }

    /// Human-readable table, one line per system and evaluated split.
    /// Systems that never ran (missing checkpoints) keep one line
    /// marked absent.
    pub fn formatted_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:<5} {:>10} {:>10}\n",
            "system", "split", "mse", "rouge1-r"
        ));
        for row in &self.rows {
            if row.dev.is_none() && row.test.is_none() {
                out.push_str(&format!(
                    "{:<24} {:<5} {:>10} {:>10}\n",
                    row.system, "-", "absent", "absent"
                ));
                continue;
            }
            for (split, metrics) in [("dev", &row.dev), ("test", &row.test)] {
                let Some(m) = metrics else { continue };
                let mse_s = m.mse.map(|v| format!("{:.4}", v)).unwrap_or_else(|| "-".into());
                let rouge_s = m
                    .rouge
                    .map(|r| format!("{:.4}", r.recall))
                    .unwrap_or_else(|| "-".into());
                out.push_str(&format!(
                    "{:<24} {:<5} {:>10} {:>10}\n",
                    row.system, split, mse_s, rouge_s
                ));
            }
        }
        out
    }
}

/// Trains and evaluates the model across hop counts; returns
/// `(hops, dev_mse, test_mse)` per setting.
pub fn hop_sweep(
    data: &DatasetSplit,
    vocab: &Vocabulary,
    embedding: Option<Tensor>,
    base: &TrainConfig,
    hop_values: &[usize],
) -> Result<Vec<(usize, Option<f64>, Option<f64>)>, TrainError> {
    let mut out = Vec::new();
    for &hops in hop_values {
        let config = TrainConfig {
            hops,
            ..base.clone()
        };
        let outcome = train(&data.train, &data.dev, vocab, embedding.clone(), &config)?;
        let (dev, _) = evaluate_model(&outcome.model, &data.dev);
        let (test, _) = evaluate_model(&outcome.model, &data.test);
        out.push((hops, dev.mse, test.mse));
    }
    Ok(out)
}

/// Trains and evaluates with the shift weight frozen at each value;
/// returns `(mu, dev_mse, test_mse)` per setting.
pub fn mu_sweep(
    data: &DatasetSplit,
    vocab: &Vocabulary,
    embedding: Option<Tensor>,
    base: &TrainConfig,
    mu_values: &[f64],
) -> Result<Vec<(f64, Option<f64>, Option<f64>)>, TrainError> {
    let mut out = Vec::new();
    for &mu in mu_values {
        let config = TrainConfig {
            mu_frozen: Some(mu),
            ..base.clone()
        };
        let outcome = train(&data.train, &data.dev, vocab, embedding.clone(), &config)?;
        let (dev, _) = evaluate_model(&outcome.model, &data.dev);
        let (test, _) = evaluate_model(&outcome.model, &data.test);
        out.push((mu, dev.mse, test.mse));
    }
    Ok(out)
}

/// The grid's six ablation configurations, by conventional name.
pub fn ablation_grid() -> Vec<(&'static str, crate::model::AblationFlags)> {
    use crate::model::AblationFlags;
    vec![
        ("joint", AblationFlags::none()),
        (
            "no-user",
            AblationFlags {
                user: true,
                ..AblationFlags::none()
            },
        ),
        (
            "no-neighbor",
            AblationFlags {
                neighbor: true,
                ..AblationFlags::none()
            },
        ),
        (
            "no-user-no-neighbor",
            AblationFlags {
                user: true,
                neighbor: true,
                ..AblationFlags::none()
            },
        ),
        (
            "no-rating",
            AblationFlags {
                rating: true,
                ..AblationFlags::none()
            },
        ),
        (
            "no-generation",
            AblationFlags {
                generation: true,
                ..AblationFlags::none()
            },
        ),
    ]
}

/// The fixed list swept by the shift-weight experiment.
pub const MU_SWEEP_VALUES: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
