//! Sequence encoders over review vectors: the user and neighborhood
//! encoders pool their LSTM states with attention; the product encoder
//! exposes the full hidden-state sequence for the memory module.

use rand::Rng;

use crate::nn::lstm::{lstm_step, LstmParams, LstmVars, INIT_RANGE};
use crate::nn::params::{ParamId, ParamStore};
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor;

/// LSTM plus a scalar-score attention head
/// (`u_i = tanh(w_att . h_i + b_att)`).
#[derive(Clone)]
pub struct AttentionEncoderParams {
    pub lstm: LstmParams,
    pub w_att: ParamId,
    pub b_att: ParamId,
}

impl AttentionEncoderParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let lstm = LstmParams::init(store, prefix, input_dim, hidden_dim, rng);
        let w_att = store.register(
            &format!("{prefix}.w_att"),
            Tensor::uniform(&[hidden_dim], -INIT_RANGE, INIT_RANGE, rng),
        );
        let b_att = store.register(
            &format!("{prefix}.b_att"),
            Tensor::uniform(&[], -INIT_RANGE, INIT_RANGE, rng),
        );
        AttentionEncoderParams { lstm, w_att, b_att }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.lstm.param_ids();
        ids.push(self.w_att);
        ids.push(self.b_att);
        ids
    }
}

pub struct AttentionEncoderVars {
    pub lstm: LstmVars,
    pub w_att: Var,
    pub b_att: Var,
}

impl AttentionEncoderVars {
    pub fn inject(store: &ParamStore, params: &AttentionEncoderParams, tape: &mut Tape) -> Self {
        AttentionEncoderVars {
            lstm: LstmVars::inject(store, &params.lstm, tape),
            w_att: store.inject(tape, params.w_att),
            b_att: store.inject(tape, params.b_att),
        }
    }

    /// Injected handles in [`AttentionEncoderParams::param_ids`] order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = self.lstm.vars();
        out.push(self.w_att);
        out.push(self.b_att);
        out
    }
}

/// Runs the cell over a review-vector sequence from its learned initial
/// state, returning every hidden state. Panics on an empty sequence;
/// callers guard.
pub fn encode_sequence(tape: &mut Tape, cell: &LstmVars, inputs: &[Var]) -> Vec<Var> {
    assert!(!inputs.is_empty(), "encode_sequence over an empty sequence");
    let mut state = cell.initial_state();
    let mut states = Vec::with_capacity(inputs.len());
    for &x in inputs {
        state = lstm_step(tape, cell, x, state);
        states.push(state.0);
    }
    states
}

/// Attention pooling: `u_i = tanh(w . h_i + b)`, weights by softmax,
/// output the weighted sum of hidden states. Returns the pooled vector
/// and the weight vector.
pub fn attend(tape: &mut Tape, w_att: Var, b_att: Var, states: &[Var]) -> (Var, Var) {
    assert!(!states.is_empty(), "attend over zero hidden states");
    let scores: Vec<Var> = states
        .iter()
        .map(|&h| {
            let wh = tape.dot(w_att, h);
            let pre = tape.add(wh, b_att);
            tape.tanh(pre)
        })
        .collect();
    let score_vec = tape.concat(&scores);
    let alpha = tape.softmax(score_vec);
    let stacked = tape.stack_rows(states);
    let pooled = tape.weighted_rows(alpha, stacked);
    (pooled, alpha)
}

/// User model: encode the history then pool with attention.
/// Returns `(v_U, alpha)`.
pub fn encode_user(
    tape: &mut Tape,
    encoder: &AttentionEncoderVars,
    review_vectors: &[Var],
) -> (Var, Var) {
    let states = encode_sequence(tape, &encoder.lstm, review_vectors);
    attend(tape, encoder.w_att, encoder.b_att, &states)
}

/// Neighborhood model: same shape as the user model with its own
/// parameters. An empty neighborhood yields an inactive zero vector
/// (the instance degrades to the no-neighbor configuration).
pub fn encode_neighborhood(
    tape: &mut Tape,
    encoder: &AttentionEncoderVars,
    review_vectors: &[Var],
    hidden_dim: usize,
) -> (Var, Option<Var>) {
    if review_vectors.is_empty() {
        let zero = tape.constant(Tensor::zeros(&[hidden_dim]));
        return (zero, None);
    }
    let (pooled, alpha) = encode_user(tape, encoder, review_vectors);
    (pooled, Some(alpha))
}

/// Product model: the full hidden-state sequence, unpooled.
pub fn encode_product(tape: &mut Tape, cell: &LstmVars, review_vectors: &[Var]) -> Vec<Var> {
    encode_sequence(tape, cell, review_vectors)
}
