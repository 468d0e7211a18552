//! Customized review generation (an LSTM decoder over the vocabulary,
//! conditioned on the customized product vector) and the customized
//! rating head with neural stacking.

use rand::Rng;

use crate::corpus::{BOS, EOS};
use crate::nn::lstm::{lstm_step, LstmParams, LstmVars, INIT_RANGE};
use crate::nn::params::{ParamId, ParamStore};
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor;

/// Decoding length cap.
pub const MAX_GENERATION_LEN: usize = 60;

/// Decoder cell over `[word embedding ; v_C]` inputs plus a vocabulary
/// projection.
#[derive(Clone)]
pub struct DecoderParams {
    pub lstm: LstmParams,
    pub w_proj: ParamId,
    pub b_proj: ParamId,
}

impl DecoderParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        emb_dim: usize,
        hidden_dim: usize,
        vocab_size: usize,
        rng: &mut R,
    ) -> Self {
        let lstm = LstmParams::init(store, prefix, emb_dim + hidden_dim, hidden_dim, rng);
        let w_proj = store.register(
            &format!("{prefix}.w_proj"),
            Tensor::uniform(&[vocab_size, hidden_dim], -INIT_RANGE, INIT_RANGE, rng),
        );
        let b_proj = store.register(
            &format!("{prefix}.b_proj"),
            Tensor::uniform(&[vocab_size], -INIT_RANGE, INIT_RANGE, rng),
        );
        DecoderParams {
            lstm,
            w_proj,
            b_proj,
        }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.lstm.param_ids();
        ids.push(self.w_proj);
        ids.push(self.b_proj);
        ids
    }
}

pub struct DecoderVars {
    pub lstm: LstmVars,
    pub w_proj: Var,
    pub b_proj: Var,
}

impl DecoderVars {
    pub fn inject(store: &ParamStore, params: &DecoderParams, tape: &mut Tape) -> Self {
        DecoderVars {
            lstm: LstmVars::inject(store, &params.lstm, tape),
            w_proj: store.inject(tape, params.w_proj),
            b_proj: store.inject(tape, params.b_proj),
        }
    }

    /// Injected handles in [`DecoderParams::param_ids`] order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = self.lstm.vars();
        out.push(self.w_proj);
        out.push(self.b_proj);
        out
    }
}

/// Weighted score mean plus the bounded review-based shift:
/// `Y_S = sum_i beta_i s_i + mu * tanh(w_s . (v_C ++ h_Rn) + b_s)`.
#[derive(Clone)]
pub struct RatingHeadParams {
    pub mu: ParamId,
    pub w_s: ParamId,
    pub b_s: ParamId,
}

impl RatingHeadParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mu = store.register(&format!("{prefix}.mu"), Tensor::scalar(1.0));
        let w_s = store.register(
            &format!("{prefix}.w_s"),
            Tensor::uniform(&[2 * hidden_dim], -INIT_RANGE, INIT_RANGE, rng),
        );
        let b_s = store.register(
            &format!("{prefix}.b_s"),
            Tensor::uniform(&[], -INIT_RANGE, INIT_RANGE, rng),
        );
        RatingHeadParams { mu, w_s, b_s }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        vec![self.mu, self.w_s, self.b_s]
    }
}

pub struct RatingHeadVars {
    pub mu: Var,
    pub w_s: Var,
    pub b_s: Var,
}

impl RatingHeadVars {
    pub fn inject(store: &ParamStore, params: &RatingHeadParams, tape: &mut Tape) -> Self {
        RatingHeadVars {
            mu: store.inject(tape, params.mu),
            w_s: store.inject(tape, params.w_s),
            b_s: store.inject(tape, params.b_s),
        }
    }

    /// Injected handles in [`RatingHeadParams::param_ids`] order.
    pub fn vars(&self) -> Vec<Var> {
        vec![self.mu, self.w_s, self.b_s]
    }
}

fn embed_token<R: Rng>(
    tape: &mut Tape,
    table: Var,
    token: usize,
    dropout: f64,
    train: bool,
    rng: &mut R,
) -> Var {
    let looked = tape.embedding_lookup(table, &[token]);
    let row = tape.row(looked, 0);
    tape.dropout(row, dropout, train, rng)
}

fn decoder_step(
    tape: &mut Tape,
    dec: &DecoderVars,
    input_emb: Var,
    v_c: Var,
    state: (Var, Var),
) -> ((Var, Var), Var) {
    let u = tape.concat(&[input_emb, v_c]);
    let next = lstm_step(tape, &dec.lstm, u, state);
    let logits_raw = tape.matvec(dec.w_proj, next.0);
    let logits = tape.add(logits_raw, dec.b_proj);
    let probs = tape.softmax(logits);
    (next, probs)
}

/// Teacher-forced pass over a `[BOS, w_1..w_m, EOS]` token sequence.
///
/// Step `j` consumes the embedding of `gold[j-1]` concatenated with
/// `v_C` and emits a distribution over the vocabulary (so `len - 1`
/// distributions come back), plus the final hidden state for stacking.
/// Out-of-vocabulary ids must have been mapped to `UNK` by the caller's
/// vocabulary lookup; the ids here are trusted indices.
pub fn decode_teacher_forced<R: Rng>(
    tape: &mut Tape,
    dec: &DecoderVars,
    table: Var,
    v_c: Var,
    wrapped_gold: &[usize],
    dropout: f64,
    train: bool,
    rng: &mut R,
) -> (Vec<Var>, Var) {
    assert!(
        wrapped_gold.len() >= 2 && wrapped_gold[0] == BOS && *wrapped_gold.last().unwrap() == EOS,
        "teacher forcing expects a BOS..EOS wrapped sequence"
    );
    assert!(
        wrapped_gold.len() <= MAX_GENERATION_LEN + 2,
        "gold sequence of {} tokens exceeds the decoder cap {}",
        wrapped_gold.len() - 2,
        MAX_GENERATION_LEN
    );
    let mut state = dec.lstm.initial_state();
    let mut distributions = Vec::with_capacity(wrapped_gold.len() - 1);
    let mut last_h = state.0;
    for &prev in &wrapped_gold[..wrapped_gold.len() - 1] {
        let emb = embed_token(tape, table, prev, dropout, train, rng);
        let (next, probs) = decoder_step(tape, dec, emb, v_c, state);
        state = next;
        last_h = state.0;
        distributions.push(probs);
    }
    (distributions, last_h)
}

/// One decoded step of [`decode_greedy`].
#[derive(Clone, Debug)]
pub struct GreedyStep {
    /// Chosen token id (argmax).
    pub token: usize,
    /// The five most probable tokens with their probabilities.
    pub top5: Vec<(usize, f64)>,
}

/// Greedy decoding: argmax per step, stop at `EOS` or after
/// `max_len` tokens. Deterministic. Returns the emitted token ids
/// (without `EOS`), per-step candidates and the final hidden state.
pub fn decode_greedy(
    tape: &mut Tape,
    dec: &DecoderVars,
    table: Var,
    v_c: Var,
    max_len: usize,
) -> (Vec<usize>, Vec<GreedyStep>, Var) {
    assert!(max_len >= 1, "max_len must be at least 1");
    let mut rng = crate::seeded_rng(0); // dropout is off; rng is unused
    let mut state = dec.lstm.initial_state();
    let mut last_h = state.0;
    let mut prev = BOS;
    let mut tokens = Vec::new();
    let mut steps = Vec::new();
    for _ in 0..max_len + 1 {
        let emb = embed_token(tape, table, prev, 0.0, false, &mut rng);
        let (next, probs) = decoder_step(tape, dec, emb, v_c, state);
        state = next;
        last_h = state.0;
        let dist = tape.value(probs).data();
        let mut ranked: Vec<(usize, f64)> = dist.iter().copied().enumerate().collect();
        // ties broken by lower index for determinism
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let choice = ranked[0].0;
        steps.push(GreedyStep {
            token: choice,
            top5: ranked.into_iter().take(5).collect(),
        });
        if choice == EOS {
            break;
        }
        tokens.push(choice);
        if tokens.len() == max_len {
            break;
        }
        prev = choice;
    }
    (tokens, steps, last_h)
}

/// `Y_S = sum_i beta_i s_i + mu * tanh(w_s . (v_C ++ h_Rn) + b_s)`,
/// unclamped (training uses the raw value; inference clamps).
pub fn predict_rating(
    tape: &mut Tape,
    head: &RatingHeadVars,
    beta: Var,
    scores: Var,
    v_c: Var,
    h_rn: Var,
) -> Var {
    let base = tape.dot(beta, scores);
    let stacked = tape.concat(&[v_c, h_rn]);
    let pre_raw = tape.dot(head.w_s, stacked);
    let pre = tape.add(pre_raw, head.b_s);
    let act = tape.tanh(pre);
    let shift = tape.mul(head.mu, act);
    tape.add(base, shift)
}

/// Inference-time score clamp to the rating scale.
pub fn clamp_score(score: f64) -> f64 {
    score.clamp(0.0, 5.0)
}
