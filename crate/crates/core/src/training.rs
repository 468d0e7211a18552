//! Joint online training: per instance, one forward pass through both
//! heads, one backward pass, one Adagrad step.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::store_to_bytes;
use crate::corpus::{RecommendationInstance, Vocabulary};
use crate::evaluation::{mse, rouge1};
use crate::generator::clamp_score;
use crate::model::{AblationFlags, ModelConfig, OpinionModel, PreparedInstance};
use crate::nn::params::{AdagradState, ParamId};
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor;

/// Everything one training run needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 coefficient; the regularizer is applied once per online step.
    pub lambda: f64,
    pub adagrad_epsilon: f64,
    pub seed: u64,
    pub hops: usize,
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    /// Early-stopping patience in epochs on the dev selection metric.
    pub patience: usize,
    pub ablation: AblationFlags,
    /// `Some(v)` freezes the rating shift weight at `v`.
    pub mu_frozen: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.1,
            lambda: 1e-4,
            adagrad_epsilon: 1e-6,
            seed: 1,
            hops: crate::memory::DEFAULT_HOPS,
            emb_dim: 128,
            hidden_dim: 128,
            dropout: 0.2,
            patience: 5,
            ablation: AblationFlags::none(),
            mu_frozen: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.ablation
            .validate()
            .map_err(TrainError::InvalidConfig)?;
        if self.learning_rate <= 0.0 {
            return Err(TrainError::InvalidConfig("learning rate must be positive".into()));
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            emb_dim: self.emb_dim,
            hidden_dim: self.hidden_dim,
            hops: self.hops,
            dropout: self.dropout,
            mu_frozen: self.mu_frozen,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("non-finite loss at instance ({user_id}, {product_id}); parameter norms: {norms:?}")]
    NonFiniteLoss {
        user_id: String,
        product_id: String,
        norms: Vec<(String, f64)>,
    },
}

/// Per-epoch observability row; absent metrics belong to ablated heads.
#[derive(Clone, Debug, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_mse: Option<f64>,
    pub train_nll: Option<f64>,
    pub dev_mse: Option<f64>,
    pub dev_rouge1: Option<f64>,
}

/// A finished run: the model restored to its best-dev epoch.
pub struct TrainOutcome {
    pub model: OpinionModel,
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub checkpoint: Vec<u8>,
    /// Probability-floor events observed inside generation losses.
    pub nll_floor_events: usize,
}

/// Squared rating error plus the L2 term over every trainable
/// parameter of the pass: `(pred - gold)^2 + (lambda/2) * sum theta^2`.
pub fn loss_rating(
    tape: &mut Tape,
    pred: Var,
    gold: f64,
    param_leafs: &[(ParamId, Var)],
    lambda: f64,
) -> Var {
    let gold_var = tape.constant(Tensor::scalar(gold));
    let sq = tape.squared_error(pred, gold_var);
    if lambda == 0.0 || param_leafs.is_empty() {
        return sq;
    }
    let mut reg: Option<Var> = None;
    for &(_, var) in param_leafs {
        let ss = tape.sum_squares(var);
        reg = Some(match reg {
            Some(acc) => tape.add(acc, ss),
            None => ss,
        });
    }
    let scaled = tape.mul_const(reg.expect("nonempty leafs"), lambda / 2.0);
    tape.add(sq, scaled)
}

/// Mean negative log-likelihood of the gold tokens under the per-step
/// distributions.
pub fn loss_generation(tape: &mut Tape, distributions: &[Var], gold_targets: &[usize]) -> Var {
    assert_eq!(
        distributions.len(),
        gold_targets.len(),
        "distribution/target length mismatch: {} vs {}",
        distributions.len(),
        gold_targets.len()
    );
    assert!(!distributions.is_empty(), "generation loss over zero steps");
    let nlls: Vec<Var> = distributions
        .iter()
        .zip(gold_targets)
        .map(|(&dist, &target)| tape.nll(dist, target))
        .collect();
    let stacked = tape.concat(&nlls);
    tape.mean_elems(stacked)
}

/// Runs joint online training.
///
/// Per instance: forward (encoders, memory, decoder, rating), total
/// loss with ablated terms dropped, one backward pass, one Adagrad
/// step. Deterministic under the config seed. The best-dev checkpoint
/// is retained (dev MSE when the rating head is live, dev NLL
/// otherwise) and early stopping uses the configured patience.
pub fn train(
    train_instances: &[RecommendationInstance],
    dev_instances: &[RecommendationInstance],
    vocab: &Vocabulary,
    embedding_init: Option<Tensor>,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if train_instances.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let mut model = OpinionModel::new(
        vocab.clone(),
        embedding_init,
        config.model_config(),
        config.ablation,
        config.seed,
    );
    let mut optimizer = AdagradState::new(
        &model.store,
        config.learning_rate,
        config.adagrad_epsilon,
    );

    let prepared: Vec<PreparedInstance> = train_instances
        .iter()
        .map(|i| PreparedInstance::from_instance(i, vocab))
        .collect();
    let prepared_dev: Vec<PreparedInstance> = dev_instances
        .iter()
        .map(|i| PreparedInstance::from_instance(i, vocab))
        .collect();

    let mut rng = crate::seeded_rng(config.seed.wrapping_add(0x5eed));
    let mut metrics = Vec::with_capacity(config.epochs);
    let mut nll_floor_events = 0usize;
    let mut best: Option<(f64, usize, Vec<u8>)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);

        let mut sq_sum = 0.0;
        let mut nll_sum = 0.0;
        let mut nll_count = 0usize;
        for &idx in &order {
            let instance = &prepared[idx];
            let mut pass = model.forward(instance, true, &mut rng);

            let rating_loss = pass.y_s.map(|y_s| {
                // metric uses the clamped (inference-style) prediction
                let pred = tape_scalar(&pass.tape, y_s);
                let clamped = clamp_score(pred);
                sq_sum += (clamped - instance.gold_score) * (clamped - instance.gold_score);
                loss_rating(
                    &mut pass.tape,
                    y_s,
                    instance.gold_score,
                    &pass.param_leafs,
                    config.lambda,
                )
            });
            let generation_loss = if pass.distributions.is_empty() {
                None
            } else {
                let loss = loss_generation(
                    &mut pass.tape,
                    &pass.distributions,
                    &instance.gold_wrapped[1..],
                );
                nll_sum += tape_scalar(&pass.tape, loss);
                nll_count += 1;
                Some(loss)
            };

            let total = match (rating_loss, generation_loss) {
                (Some(r), Some(g)) => pass.tape.add(r, g),
                (Some(r), None) => r,
                (None, Some(g)) => g,
                (None, None) => unreachable!("config validation keeps one head live"),
            };
            let total_value = tape_scalar(&pass.tape, total);
            if !total_value.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    user_id: instance.user_id.clone(),
                    product_id: instance.product_id.clone(),
                    norms: model.store.norms(),
                });
            }

            nll_floor_events += pass.tape.nll_floor_events();
            let grads = pass.tape.backward(total);
            for &(id, var) in &pass.param_leafs {
                if let Some(grad) = grads.get(var) {
                    optimizer.update(&mut model.store, id, grad);
                }
            }
            // the shift weight is nonnegative by contract
            let mu = model.rating_head.mu;
            if model.store.trainable(mu) && model.store.value(mu).scalar_value() < 0.0 {
                model.store.set_value(mu, Tensor::scalar(0.0));
            }
        }

        let (dev_mse, dev_nll, dev_rouge) = evaluate_dev(&model, &prepared_dev);
        let row = EpochMetrics {
            epoch,
            train_mse: (!config.ablation.rating).then(|| sq_sum / prepared.len() as f64),
            train_nll: (nll_count > 0).then(|| nll_sum / nll_count as f64),
            dev_mse,
            dev_rouge1: dev_rouge,
        };
        log::info!(
            "epoch {}: train_mse {:?} train_nll {:?} dev_mse {:?} dev_rouge1 {:?}",
            epoch,
            row.train_mse,
            row.train_nll,
            dev_mse,
            dev_rouge
        );
        metrics.push(row);

        // selection: dev MSE when the rating head is live, dev NLL
        // otherwise; no dev set keeps the final epoch
        let selection = if prepared_dev.is_empty() {
            None
        } else if config.ablation.rating {
            dev_nll
        } else {
            dev_mse
        };
        match selection {
            Some(value) => {
                let improved = best.as_ref().map_or(true, |(b, _, _)| value < *b);
                if improved {
                    best = Some((value, epoch, store_to_bytes(&model.store)));
                    epochs_since_best = 0;
                } else {
                    epochs_since_best += 1;
                    if epochs_since_best >= config.patience {
                        log::info!("early stop after epoch {} (patience {})", epoch, config.patience);
                        break;
                    }
                }
            }
            None => {
                best = Some((f64::NAN, epoch, store_to_bytes(&model.store)));
            }
        }
    }

    let (_, best_epoch, checkpoint) = best.expect("at least one epoch ran");
    crate::checkpoint::load_store_from_bytes(&mut model.store, &checkpoint)
        .expect("own checkpoint reloads");
    Ok(TrainOutcome {
        model,
        metrics,
        best_epoch,
        checkpoint,
        nll_floor_events,
    })
}

fn tape_scalar(tape: &Tape, var: Var) -> f64 {
    tape.value(var).scalar_value()
}

/// Dev-set pass in inference mode: MSE on clamped scores, mean gold
/// NLL, and the headline ROUGE-1 recall of greedy generations.
fn evaluate_dev(
    model: &OpinionModel,
    dev: &[PreparedInstance],
) -> (Option<f64>, Option<f64>, Option<f64>) {
    if dev.is_empty() {
        return (None, None, None);
    }
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    let mut nlls = Vec::new();
    let mut rouges = Vec::new();
    for instance in dev {
        let inference = model.infer(instance);
        if let Some(score) = inference.predicted_score {
            preds.push(score);
            golds.push(instance.gold_score);
        }
        if let Some(nll) = inference.gold_nll {
            nlls.push(nll);
        }
        if !instance.gold_tokens.is_empty() {
            let (_, recall, _) = rouge1(&inference.generated_tokens, &instance.gold_tokens);
            rouges.push(recall);
        }
    }
    let dev_mse = (!preds.is_empty()).then(|| mse(&preds, &golds));
    let dev_nll = (!nlls.is_empty()).then(|| nlls.iter().sum::<f64>() / nlls.len() as f64);
    let dev_rouge = (!rouges.is_empty() && !model.ablation.generation)
        .then(|| rouges.iter().sum::<f64>() / rouges.len() as f64);
    (dev_mse, dev_nll, dev_rouge)
}

/// Writes the per-epoch metrics as CSV
/// (`epoch,train_mse,train_nll,dev_mse,dev_rouge1`).
pub fn write_metrics_csv(path: &Path, metrics: &[EpochMetrics]) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "epoch,train_mse,train_nll,dev_mse,dev_rouge1")?;
    for row in metrics {
        writeln!(
            file,
            "{},{},{},{},{}",
            row.epoch,
            fmt_opt(row.train_mse),
            fmt_opt(row.train_nll),
            fmt_opt(row.dev_mse),
            fmt_opt(row.dev_rouge1),
        )?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Review;

    fn review(id: &str, user: &str, product: &str, score: f64, ts: i64, text: &str) -> Review {
        Review {
            review_id: id.into(),
            user_id: user.into(),
            product_id: product.into(),
            text: text.into(),
            score,
            timestamp: ts,
        }
    }

    /// Tiny corpus: three users, three products, topical texts.
    fn fixture_instances() -> (Vec<RecommendationInstance>, Vocabulary) {
        let reviews = vec![
            review("r1", "u1", "p1", 4.5, 1, "great pasta and friendly staff"),
            review("r2", "u2", "p1", 4.0, 2, "lovely pasta , would return"),
            review("r3", "u3", "p1", 1.0, 3, "cold pasta and rude staff"),
            review("r4", "u1", "p2", 4.0, 4, "excellent burgers , great fries"),
            review("r5", "u2", "p2", 3.5, 5, "the burgers were fine"),
            review("r6", "u3", "p2", 1.5, 6, "soggy fries , bad burgers"),
            review("r7", "u1", "p3", 5.0, 7, "wonderful tacos , great salsa"),
            review("r8", "u2", "p3", 4.0, 8, "good tacos and salsa"),
            review("r9", "u3", "p3", 2.0, 9, "stale tacos , bland salsa"),
        ];
        let pairs = vec![
            ("u1".to_string(), "p1".to_string()),
            ("u2".to_string(), "p2".to_string()),
            ("u3".to_string(), "p3".to_string()),
        ];
        let (instances, diags) = crate::corpus::assemble_instances(&reviews, &pairs);
        assert!(diags.is_empty());
        let texts: Vec<Vec<String>> = reviews.iter().map(|r| r.tokens()).collect();
        let vocab = Vocabulary::build(&texts, 1);
        (instances, vocab)
    }

    fn small_config(seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: 3,
            emb_dim: 8,
            hidden_dim: 8,
            dropout: 0.2,
            seed,
            patience: 50,
            ..Default::default()
        }
    }

    #[test]
    fn rating_loss_examples() {
        let mut tape = Tape::new();
        let pred = tape.leaf(Tensor::scalar(5.0));
        let loss = loss_rating(&mut tape, pred, 5.0, &[], 0.0);
        assert_eq!(tape.value(loss).scalar_value(), 0.0);

        let mut tape = Tape::new();
        let pred = tape.leaf(Tensor::scalar(3.0));
        let loss = loss_rating(&mut tape, pred, 5.0, &[], 0.0);
        assert_eq!(tape.value(loss).scalar_value(), 4.0);
    }

    #[test]
    fn rating_loss_regularizer_hand_algebra() {
        // lambda = 0.2 with parameters {1, -2}: adds 0.1 * 5 = 0.5
        let mut tape = Tape::new();
        let pred = tape.leaf(Tensor::scalar(2.0));
        let theta = tape.leaf(Tensor::vector(vec![1.0, -2.0]));
        let pairs = vec![(crate::nn::ParamStore::new().register("x", Tensor::scalar(0.0)), theta)];
        let loss = loss_rating(&mut tape, pred, 2.0, &pairs, 0.2);
        assert!((tape.value(loss).scalar_value() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn regularizer_gradient_is_lambda_theta_exactly() {
        // pred == gold so the squared term contributes no gradient;
        // lambda = 0.5 keeps the arithmetic exact in binary
        let mut tape = Tape::new();
        let pred = tape.leaf(Tensor::scalar(3.25));
        let theta = tape.leaf(Tensor::vector(vec![0.75, -1.5, 2.0]));
        let mut dummy = crate::nn::ParamStore::new();
        let id = dummy.register("theta", Tensor::zeros(&[3]));
        let loss = loss_rating(&mut tape, pred, 3.25, &[(id, theta)], 0.5);
        let grads = tape.backward(loss);
        assert_eq!(grads.get(theta).unwrap().data(), &[0.375, -0.75, 1.0]);
    }

    #[test]
    fn generation_loss_examples() {
        // perfect one-hot predictions -> 0
        let mut tape = Tape::new();
        let d1 = tape.leaf(Tensor::vector(vec![0.0, 1.0, 0.0]));
        let d2 = tape.leaf(Tensor::vector(vec![1.0, 0.0, 0.0]));
        let loss = loss_generation(&mut tape, &[d1, d2], &[1, 0]);
        assert_eq!(tape.value(loss).scalar_value(), 0.0);

        // uniform over |V| = 8 -> ln 8 per token
        let mut tape = Tape::new();
        let u = tape.leaf(Tensor::vector(vec![1.0 / 8.0; 8]));
        let loss = loss_generation(&mut tape, &[u, u, u], &[0, 3, 7]);
        assert!((tape.value(loss).scalar_value() - (8f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn generation_loss_matches_summation_oracle() {
        let mut rng = crate::test_rng(3);
        let mut tape = Tape::new();
        let mut dists = Vec::new();
        let mut raw = Vec::new();
        for _ in 0..5 {
            let logits = tape.leaf(Tensor::uniform(&[6], -2.0, 2.0, &mut rng));
            let probs = tape.softmax(logits);
            raw.push(tape.value(probs).data().to_vec());
            dists.push(probs);
        }
        let targets = [2usize, 0, 5, 1, 3];
        let loss = loss_generation(&mut tape, &dists, &targets);
        let oracle: f64 =
            -targets.iter().zip(&raw).map(|(&t, p)| p[t].ln()).sum::<f64>() / targets.len() as f64;
        assert!((tape.value(loss).scalar_value() - oracle).abs() < 1e-12);
    }

    #[test]
    fn joint_gradients_are_sum_of_head_gradients() {
        // linearity of backward over the two losses, dropout disabled
        let (instances, vocab) = fixture_instances();
        let config = TrainConfig {
            dropout: 0.0,
            ..small_config(5)
        };
        let model = OpinionModel::new(
            vocab.clone(),
            None,
            config.model_config(),
            AblationFlags::none(),
            config.seed,
        );
        let prepared = PreparedInstance::from_instance(&instances[0], &vocab);
        let mut rng = crate::seeded_rng(9);

        let run = |which: u8, rng: &mut crate::Rng| -> Vec<Tensor> {
            let mut pass = model.forward(&prepared, false, rng);
            let y_s = pass.y_s.unwrap();
            let rating = loss_rating(&mut pass.tape, y_s, prepared.gold_score, &[], 0.0);
            let generation =
                loss_generation(&mut pass.tape, &pass.distributions, &prepared.gold_wrapped[1..]);
            let total = match which {
                0 => rating,
                1 => generation,
                _ => pass.tape.add(rating, generation),
            };
            let leafs = pass.param_leafs.clone();
            let grads = pass.tape.backward(total);
            leafs
                .iter()
                .map(|&(id, var)| {
                    grads
                        .get(var)
                        .cloned()
                        .unwrap_or_else(|| Tensor::zeros(model.store.value(id).shape()))
                })
                .collect()
        };
        let rating_only = run(0, &mut rng);
        let generation_only = run(1, &mut rng);
        let joint = run(2, &mut rng);
        for ((r, g), j) in rating_only.iter().zip(&generation_only).zip(&joint) {
            let summed = r.zip(g, |a, b| a + b);
            for (s, jv) in summed.data().iter().zip(j.data()) {
                assert!((s - jv).abs() < 1e-12, "linearity violated: {} vs {}", s, jv);
            }
        }
    }

    #[test]
    fn rating_ablation_freezes_the_rating_head() {
        let (instances, vocab) = fixture_instances();
        let mut config = small_config(7);
        config.ablation.rating = true;
        let before = OpinionModel::new(
            vocab.clone(),
            None,
            config.model_config(),
            config.ablation,
            config.seed,
        );
        let frozen: Vec<Tensor> = before
            .rating_head
            .param_ids()
            .iter()
            .map(|&id| before.store.value(id).clone())
            .collect();
        let outcome = train(&instances, &[], &vocab, None, &config).unwrap();
        for (id, original) in outcome.model.rating_head.param_ids().into_iter().zip(frozen) {
            assert_eq!(outcome.model.store.value(id), &original);
        }
    }

    #[test]
    fn generation_ablation_freezes_the_decoder() {
        let (instances, vocab) = fixture_instances();
        let mut config = small_config(11);
        config.ablation.generation = true;
        let before = OpinionModel::new(
            vocab.clone(),
            None,
            config.model_config(),
            config.ablation,
            config.seed,
        );
        let frozen: Vec<Tensor> = before
            .decoder
            .param_ids()
            .iter()
            .map(|&id| before.store.value(id).clone())
            .collect();
        let outcome = train(&instances, &[], &vocab, None, &config).unwrap();
        for (id, original) in outcome.model.decoder.param_ids().into_iter().zip(frozen) {
            assert_eq!(outcome.model.store.value(id), &original);
        }
        // the live heads did move
        let moved = outcome
            .model
            .user_encoder
            .param_ids()
            .iter()
            .any(|&id| outcome.model.store.value(id) != before.store.value(id));
        assert!(moved, "user encoder never moved during training");
    }

    #[test]
    fn same_seed_runs_are_bit_identical() {
        let (instances, vocab) = fixture_instances();
        let config = small_config(13);
        let a = train(&instances, &[], &vocab, None, &config).unwrap();
        let b = train(&instances, &[], &vocab, None, &config).unwrap();
        assert_eq!(a.checkpoint, b.checkpoint);
        let different = train(
            &instances,
            &[],
            &vocab,
            None,
            &TrainConfig {
                seed: 14,
                ..config
            },
        )
        .unwrap();
        assert_ne!(a.checkpoint, different.checkpoint);
    }

    #[test]
    fn single_instance_memorization() {
        let (instances, vocab) = fixture_instances();
        let config = TrainConfig {
            epochs: 200,
            emb_dim: 12,
            hidden_dim: 12,
            dropout: 0.0,
            patience: 1000,
            seed: 17,
            ..Default::default()
        };
        let one = &instances[..1];
        let outcome = train(one, &[], &vocab, None, &config).unwrap();
        let last = outcome.metrics.last().unwrap();
        assert!(
            last.train_mse.unwrap() < 0.05,
            "memorization failed: train mse {:?}",
            last.train_mse
        );
        assert!(
            last.train_nll.unwrap() < 0.5,
            "memorization failed: train nll {:?}",
            last.train_nll
        );
    }

    #[test]
    fn overfit_loss_trend_is_decreasing() {
        let (instances, vocab) = fixture_instances();
        let config = TrainConfig {
            epochs: 20,
            emb_dim: 12,
            hidden_dim: 12,
            dropout: 0.0,
            patience: 1000,
            seed: 19,
            ..Default::default()
        };
        let outcome = train(&instances, &[], &vocab, None, &config).unwrap();
        let losses: Vec<f64> = outcome
            .metrics
            .iter()
            .map(|m| m.train_mse.unwrap() + m.train_nll.unwrap())
            .collect();
        for w in losses.windows(2) {
            assert!(
                w[1] < w[0],
                "epoch-averaged training loss did not strictly decrease: {:?}",
                losses
            );
        }
    }

    #[test]
    fn empty_train_set_is_an_error() {
        let (_, vocab) = fixture_instances();
        match train(&[], &[], &vocab, None, &small_config(1)) {
            Err(TrainError::EmptyTrainSet) => {}
            Err(other) => panic!("unexpected error {other}"),
            Ok(_) => panic!("expected an error on an empty train set"),
        }
    }

    #[test]
    fn rating_loss_gradient_reaches_the_decoder_through_stacking() {
        // a rating-only loss must still move decoder parameters,
        // because the final decoder state feeds the rating head
        let (instances, vocab) = fixture_instances();
        let config = TrainConfig {
            dropout: 0.0,
            ..small_config(23)
        };
        let model = OpinionModel::new(
            vocab.clone(),
            None,
            config.model_config(),
            AblationFlags::none(),
            config.seed,
        );
        let prepared = PreparedInstance::from_instance(&instances[0], &vocab);
        let mut rng = crate::seeded_rng(1);
        let mut pass = model.forward(&prepared, false, &mut rng);
        let y_s = pass.y_s.unwrap();
        let rating_only = loss_rating(&mut pass.tape, y_s, prepared.gold_score, &[], 0.0);
        let leafs = pass.param_leafs.clone();
        let grads = pass.tape.backward(rating_only);

        let decoder_ids: std::collections::BTreeSet<_> =
            model.decoder.param_ids().into_iter().collect();
        let mut decoder_grad_norm = 0.0;
        for (id, var) in leafs {
            if decoder_ids.contains(&id) {
                if let Some(g) = grads.get(var) {
                    decoder_grad_norm += g.data().iter().map(|v| v * v).sum::<f64>();
                }
            }
        }
        assert!(
            decoder_grad_norm > 0.0,
            "stacking pathway delivered no gradient to the decoder"
        );
    }

    #[test]
    fn both_heads_ablated_is_invalid() {
        let mut config = small_config(1);
        config.ablation.rating = true;
        config.ablation.generation = true;
        assert!(matches!(
            config.validate(),
            Err(TrainError::InvalidConfig(_))
        ));
    }

    #[test]
    fn metrics_csv_has_the_documented_schema() {
        let rows = vec![
            EpochMetrics {
                epoch: 0,
                train_mse: Some(1.5),
                train_nll: Some(2.25),
                dev_mse: Some(1.75),
                dev_rouge1: Some(0.25),
            },
            EpochMetrics {
                epoch: 1,
                train_mse: None,
                train_nll: Some(2.0),
                dev_mse: None,
                dev_rouge1: None,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics_csv(&path, &rows).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = content.lines().collect();
        assert_eq!(lines[0], "epoch,train_mse,train_nll,dev_mse,dev_rouge1");
        assert_eq!(lines[1], "0,1.5,2.25,1.75,0.25");
        assert_eq!(lines[2], "1,,2,,");
    }
}
