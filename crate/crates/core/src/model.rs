//! The full model: embeddings feeding three encoders, the memory
//! module, the decoder and the rating head, with one parameter store
//! behind them all.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{RecommendationInstance, Vocabulary, BOS, EOS};
use crate::encoders::{
    encode_neighborhood, encode_product, encode_user, AttentionEncoderParams,
    AttentionEncoderVars,
};
use crate::generator::{
    clamp_score, decode_greedy, decode_teacher_forced, predict_rating, DecoderParams,
    DecoderVars, RatingHeadParams, RatingHeadVars, MAX_GENERATION_LEN,
};
use crate::memory::{customize, MemoryParams, MemoryVars};
use crate::nn::lstm::{LstmParams, LstmVars};
use crate::nn::params::{ParamId, ParamStore};
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor;

/// Architecture settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    pub emb_dim: usize,
    pub hidden_dim: usize,
    pub hops: usize,
    pub dropout: f64,
    /// `Some(value)` freezes the shift weight at `value`; `None` trains
    /// it from 1.0.
    pub mu_frozen: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            emb_dim: 128,
            hidden_dim: 128,
            hops: crate::memory::DEFAULT_HOPS,
            dropout: 0.2,
            mu_frozen: None,
        }
    }
}

/// Which components are disabled. `true` means ablated: the component's
/// vector is zeroed and its parameters frozen.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct AblationFlags {
    pub user: bool,
    pub neighbor: bool,
    pub rating: bool,
    pub generation: bool,
}

impl AblationFlags {
    pub fn none() -> Self {
        AblationFlags::default()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rating && self.generation {
            return Err("at least one of rating/generation must stay enabled".into());
        }
        Ok(())
    }
}

/// An instance lowered to vocabulary ids, ready for the tape.
#[derive(Clone, Debug)]
pub struct PreparedInstance {
    pub user_id: String,
    pub product_id: String,
    pub target: Vec<Vec<usize>>,
    pub target_scores: Vec<f64>,
    pub user_history: Vec<Vec<usize>>,
    pub neighborhood: Vec<Vec<usize>>,
    /// `BOS .. EOS` wrapped gold ids, truncated to the decoder cap.
    pub gold_wrapped: Vec<usize>,
    /// Raw gold tokens (uncapped by the decoder limit), for ROUGE.
    pub gold_tokens: Vec<String>,
    pub gold_score: f64,
}

impl PreparedInstance {
    pub fn from_instance(instance: &RecommendationInstance, vocab: &Vocabulary) -> Self {
        let encode_reviews = |reviews: &[crate::corpus::Review]| -> Vec<Vec<usize>> {
            reviews.iter().map(|r| vocab.encode(&r.tokens())).collect()
        };
        let mut gold_ids: Vec<usize> = instance
            .gold_review
            .iter()
            .take(MAX_GENERATION_LEN)
            .map(|t| vocab.lookup(t))
            .collect();
        let mut gold_wrapped = Vec::with_capacity(gold_ids.len() + 2);
        gold_wrapped.push(BOS);
        gold_wrapped.append(&mut gold_ids);
        gold_wrapped.push(EOS);
        PreparedInstance {
            user_id: instance.user_id.clone(),
            product_id: instance.product_id.clone(),
            target: encode_reviews(&instance.target_reviews),
            target_scores: instance.target_reviews.iter().map(|r| r.score).collect(),
            user_history: encode_reviews(&instance.user_reviews),
            neighborhood: encode_reviews(&instance.neighbor_reviews),
            gold_wrapped,
            gold_tokens: instance.gold_review.clone(),
            gold_score: instance.gold_score,
        }
    }
}

/// All model parameters plus the vocabulary they are tied to.
pub struct OpinionModel {
    pub store: ParamStore,
    pub embedding: ParamId,
    pub user_encoder: AttentionEncoderParams,
    pub neighbor_encoder: AttentionEncoderParams,
    pub product_encoder: LstmParams,
    pub memory: MemoryParams,
    pub decoder: DecoderParams,
    pub rating_head: RatingHeadParams,
    pub vocab: Vocabulary,
    pub config: ModelConfig,
    pub ablation: AblationFlags,
}

/// Everything a training step needs from one forward pass.
pub struct ForwardPass {
    pub tape: Tape,
    /// Injected `(parameter, leaf)` pairs for every trainable
    /// parameter touched by this pass.
    pub param_leafs: Vec<(ParamId, Var)>,
    /// Unclamped rating prediction; absent under the rating ablation.
    pub y_s: Option<Var>,
    /// Teacher-forced per-step distributions; empty under the
    /// generation ablation.
    pub distributions: Vec<Var>,
    /// Final-hop memory weights.
    pub beta: Var,
    pub v_c: Var,
}

/// Inference outputs for one instance.
#[derive(Clone, Debug, Serialize)]
pub struct Inference {
    pub user_id: String,
    pub product_id: String,
    /// Clamped to the rating scale; absent under the rating ablation.
    pub predicted_score: Option<f64>,
    pub generated_tokens: Vec<String>,
    /// Final-hop memory attention over the target reviews.
    pub beta: Vec<f64>,
    /// Per generation step, the five most probable tokens.
    pub top_candidates: Vec<Vec<(String, f64)>>,
    /// Teacher-forced mean per-token negative log-likelihood of the
    /// gold review; absent under the generation ablation.
    pub gold_nll: Option<f64>,
}

struct InjectedModel {
    embedding: Var,
    user: AttentionEncoderVars,
    neighbor: AttentionEncoderVars,
    product: LstmVars,
    memory: MemoryVars,
    decoder: DecoderVars,
    rating: RatingHeadVars,
}

impl OpinionModel {
    /// Fresh model; weights from `uniform(-0.08, 0.08)` under the seed,
    /// embeddings from `embedding_init` (pretrained) when given.
    pub fn new(
        vocab: Vocabulary,
        embedding_init: Option<Tensor>,
        config: ModelConfig,
        ablation: AblationFlags,
        seed: u64,
    ) -> Self {
        ablation.validate().expect("invalid ablation flags");
        let mut rng = crate::seeded_rng(seed);
        let mut store = ParamStore::new();
        let emb_tensor = match embedding_init {
            Some(t) => {
                assert_eq!(
                    t.shape(),
                    &[vocab.len(), config.emb_dim],
                    "embedding init shape mismatch: {:?} vs {:?}",
                    t.shape(),
                    [vocab.len(), config.emb_dim]
                );
                t
            }
            None => Tensor::uniform(
                &[vocab.len(), config.emb_dim],
                -crate::nn::lstm::INIT_RANGE,
                crate::nn::lstm::INIT_RANGE,
                &mut rng,
            ),
        };
        let embedding = store.register("embedding", emb_tensor);
        let user_encoder =
            AttentionEncoderParams::init(&mut store, "user", config.emb_dim, config.hidden_dim, &mut rng);
        let neighbor_encoder = AttentionEncoderParams::init(
            &mut store,
            "neighbor",
            config.emb_dim,
            config.hidden_dim,
            &mut rng,
        );
        let product_encoder =
            LstmParams::init(&mut store, "product", config.emb_dim, config.hidden_dim, &mut rng);
        let memory = MemoryParams::init(&mut store, "memory", config.hidden_dim, &mut rng);
        let decoder = DecoderParams::init(
            &mut store,
            "decoder",
            config.emb_dim,
            config.hidden_dim,
            vocab.len(),
            &mut rng,
        );
        let rating_head = RatingHeadParams::init(&mut store, "rating", config.hidden_dim, &mut rng);

        if let Some(mu) = config.mu_frozen {
            assert!(mu >= 0.0, "frozen mu must be nonnegative, got {}", mu);
            store.set_value(rating_head.mu, Tensor::scalar(mu));
            store.set_trainable(rating_head.mu, false);
        }
        let mut model = OpinionModel {
            store,
            embedding,
            user_encoder,
            neighbor_encoder,
            product_encoder,
            memory,
            decoder,
            rating_head,
            vocab,
            config,
            ablation,
        };
        model.apply_ablation_freezing();
        model
    }

    /// Freezes the parameter sets of ablated components so no gradient
    /// or regularizer can move them.
    fn apply_ablation_freezing(&mut self) {
        let mut freeze = |ids: Vec<ParamId>| {
            for id in ids {
                self.store.set_trainable(id, false);
            }
        };
        if self.ablation.user {
            freeze(self.user_encoder.param_ids());
        }
        if self.ablation.neighbor {
            freeze(self.neighbor_encoder.param_ids());
        }
        if self.ablation.rating {
            freeze(self.rating_head.param_ids());
        }
        if self.ablation.generation {
            freeze(self.decoder.param_ids());
        }
    }

    fn inject(&self, tape: &mut Tape) -> (InjectedModel, Vec<(ParamId, Var)>) {
        let injected = InjectedModel {
            embedding: self.store.inject(tape, self.embedding),
            user: AttentionEncoderVars::inject(&self.store, &self.user_encoder, tape),
            neighbor: AttentionEncoderVars::inject(&self.store, &self.neighbor_encoder, tape),
            product: LstmVars::inject(&self.store, &self.product_encoder, tape),
            memory: MemoryVars::inject(&self.store, &self.memory, tape),
            decoder: DecoderVars::inject(&self.store, &self.decoder, tape),
            rating: RatingHeadVars::inject(&self.store, &self.rating_head, tape),
        };
        let mut ids = vec![self.embedding];
        ids.extend(self.user_encoder.param_ids());
        ids.extend(self.neighbor_encoder.param_ids());
        ids.extend(self.product_encoder.param_ids());
        ids.extend(self.memory.param_ids());
        ids.extend(self.decoder.param_ids());
        ids.extend(self.rating_head.param_ids());
        let mut vars = vec![injected.embedding];
        vars.extend(injected.user.vars());
        vars.extend(injected.neighbor.vars());
        vars.extend(injected.product.vars());
        vars.extend(injected.memory.vars());
        vars.extend(injected.decoder.vars());
        vars.extend(injected.rating.vars());
        debug_assert_eq!(ids.len(), vars.len());
        let pairs = ids
            .into_iter()
            .zip(vars)
            .filter(|(id, _)| self.store.trainable(*id))
            .collect();
        (injected, pairs)
    }

    /// Mean embedding of one review's tokens, with dropout in train
    /// mode. An empty token list yields an inactive zero vector.
    fn review_vector<R: Rng>(
        &self,
        tape: &mut Tape,
        embedding: Var,
        ids: &[usize],
        train: bool,
        rng: &mut R,
    ) -> Var {
        if ids.is_empty() {
            log::warn!("review with no tokens; using the zero vector");
            return tape.constant(Tensor::zeros(&[self.config.emb_dim]));
        }
        let rows = tape.embedding_lookup(embedding, ids);
        let dropped = tape.dropout(rows, self.config.dropout, train, rng);
        tape.mean_rows(dropped)
    }

    /// One forward pass over an instance, on a fresh tape. With `train`
    /// set, dropout is live and the generation pathway is
    /// teacher-forced on the gold.
    pub fn forward<R: Rng>(
        &self,
        instance: &PreparedInstance,
        train: bool,
        rng: &mut R,
    ) -> ForwardPass {
        assert!(
            !instance.target.is_empty(),
            "instance ({}, {}) has no target reviews",
            instance.user_id,
            instance.product_id
        );
        let mut tape = Tape::new();
        let (injected, param_leafs) = self.inject(&mut tape);
        let (v_c, beta, _) =
            self.customized_product(&mut tape, &injected, instance, train, rng);

        let (distributions, h_rn) = if self.ablation.generation {
            let zero = tape.constant(Tensor::zeros(&[self.config.hidden_dim]));
            (Vec::new(), zero)
        } else {
            decode_teacher_forced(
                &mut tape,
                &injected.decoder,
                injected.embedding,
                v_c,
                &instance.gold_wrapped,
                self.config.dropout,
                train,
                rng,
            )
        };

        let y_s = if self.ablation.rating {
            None
        } else {
            let scores = tape.constant(Tensor::vector(instance.target_scores.clone()));
            Some(predict_rating(
                &mut tape,
                &injected.rating,
                beta,
                scores,
                v_c,
                h_rn,
            ))
        };

        ForwardPass {
            tape,
            param_leafs,
            y_s,
            distributions,
            beta,
            v_c,
        }
    }

    /// Shared front half: review vectors, encoders and the memory
    /// module. Returns `(v_C, beta, h_T)`.
    fn customized_product<R: Rng>(
        &self,
        tape: &mut Tape,
        injected: &InjectedModel,
        instance: &PreparedInstance,
        train: bool,
        rng: &mut R,
    ) -> (Var, Var, Vec<Var>) {
        let target_vecs: Vec<Var> = instance
            .target
            .iter()
            .map(|ids| self.review_vector(tape, injected.embedding, ids, train, rng))
            .collect();
        let h_t = encode_product(tape, &injected.product, &target_vecs);

        let v_u = if self.ablation.user || instance.user_history.is_empty() {
            if instance.user_history.is_empty() && !self.ablation.user {
                log::warn!(
                    "instance ({}, {}) has an empty user history; user vector inactive",
                    instance.user_id,
                    instance.product_id
                );
            }
            tape.constant(Tensor::zeros(&[self.config.hidden_dim]))
        } else {
            let vecs: Vec<Var> = instance
                .user_history
                .iter()
                .map(|ids| self.review_vector(tape, injected.embedding, ids, train, rng))
                .collect();
            encode_user(tape, &injected.user, &vecs).0
        };

        let v_n = if self.ablation.neighbor {
            tape.constant(Tensor::zeros(&[self.config.hidden_dim]))
        } else {
            let vecs: Vec<Var> = instance
                .neighborhood
                .iter()
                .map(|ids| self.review_vector(tape, injected.embedding, ids, train, rng))
                .collect();
            encode_neighborhood(tape, &injected.neighbor, &vecs, self.config.hidden_dim).0
        };

        let (v_c, beta) = customize(tape, &injected.memory, &h_t, v_u, v_n, self.config.hops);
        (v_c, beta, h_t)
    }

    /// Full inference: greedy generation, rating from the generated
    /// review's final state, plus the gold's teacher-forced NLL.
    pub fn infer(&self, instance: &PreparedInstance) -> Inference {
        let mut tape = Tape::new();
        let mut rng = crate::seeded_rng(0); // eval mode: rng never used
        let (injected, _) = self.inject(&mut tape);
        let (v_c, beta, _) =
            self.customized_product(&mut tape, &injected, instance, false, &mut rng);

        let (tokens, steps, h_rn) = if self.ablation.generation {
            let zero = tape.constant(Tensor::zeros(&[self.config.hidden_dim]));
            (Vec::new(), Vec::new(), zero)
        } else {
            decode_greedy(
                &mut tape,
                &injected.decoder,
                injected.embedding,
                v_c,
                MAX_GENERATION_LEN,
            )
        };

        let predicted_score = if self.ablation.rating {
            None
        } else {
            let scores = tape.constant(Tensor::vector(instance.target_scores.clone()));
            let y_s = predict_rating(&mut tape, &injected.rating, beta, scores, v_c, h_rn);
            Some(clamp_score(tape.value(y_s).scalar_value()))
        };

        let gold_nll = if self.ablation.generation {
            None
        } else {
            let (dists, _) = decode_teacher_forced(
                &mut tape,
                &injected.decoder,
                injected.embedding,
                v_c,
                &instance.gold_wrapped,
                0.0,
                false,
                &mut rng,
            );
            let mut total = 0.0;
            for (dist, &target) in dists.iter().zip(&instance.gold_wrapped[1..]) {
                let nll = tape.nll(*dist, target);
                total += tape.value(nll).scalar_value();
            }
            Some(total / dists.len() as f64)
        };

        Inference {
            user_id: instance.user_id.clone(),
            product_id: instance.product_id.clone(),
            predicted_score,
            generated_tokens: self.vocab.decode(&tokens),
            beta: tape.value(beta).data().to_vec(),
            top_candidates: steps
                .iter()
                .map(|s| {
                    s.top5
                        .iter()
                        .map(|&(id, p)| (self.vocab.token(id).to_string(), p))
                        .collect()
                })
                .collect(),
            gold_nll,
        }
    }
}
