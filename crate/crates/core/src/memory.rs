//! Customized product model: multi-hop memory attention over the
//! product hidden states, conditioned on the user and neighborhood
//! vectors.
//!
//! Hop 0 is the plain mean of the product states. Each hop scores every
//! state with
//! `u_i = tanh(w_t . h_i + w_c . v_prev + w_u . v_U + w_n . v_N + b)`,
//! softmaxes the scores and re-interpolates. One parameter set is
//! shared across hops.

use rand::Rng;

use crate::nn::lstm::INIT_RANGE;
use crate::nn::params::{ParamId, ParamStore};
use crate::nn::tape::{Tape, Var};
use crate::nn::tensor::Tensor;

/// Default hop count.
pub const DEFAULT_HOPS: usize = 3;

#[derive(Clone)]
pub struct MemoryParams {
    pub w_t: ParamId,
    pub w_c: ParamId,
    pub w_u: ParamId,
    pub w_n: ParamId,
    pub b: ParamId,
}

impl MemoryParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let vec_param = |store: &mut ParamStore, rng: &mut R, name: &str| {
            store.register(
                &format!("{prefix}.{name}"),
                Tensor::uniform(&[hidden_dim], -INIT_RANGE, INIT_RANGE, rng),
            )
        };
        let w_t = vec_param(store, rng, "w_t");
        let w_c = vec_param(store, rng, "w_c");
        let w_u = vec_param(store, rng, "w_u");
        let w_n = vec_param(store, rng, "w_n");
        let b = store.register(
            &format!("{prefix}.b"),
            Tensor::uniform(&[], -INIT_RANGE, INIT_RANGE, rng),
        );
        MemoryParams { w_t, w_c, w_u, w_n, b }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        vec![self.w_t, self.w_c, self.w_u, self.w_n, self.b]
    }
}

pub struct MemoryVars {
    pub w_t: Var,
    pub w_c: Var,
    pub w_u: Var,
    pub w_n: Var,
    pub b: Var,
}

impl MemoryVars {
    pub fn inject(store: &ParamStore, params: &MemoryParams, tape: &mut Tape) -> Self {
        MemoryVars {
            w_t: store.inject(tape, params.w_t),
            w_c: store.inject(tape, params.w_c),
            w_u: store.inject(tape, params.w_u),
            w_n: store.inject(tape, params.w_n),
            b: store.inject(tape, params.b),
        }
    }

    /// Injected handles in [`MemoryParams::param_ids`] order.
    pub fn vars(&self) -> Vec<Var> {
        vec![self.w_t, self.w_c, self.w_u, self.w_n, self.b]
    }
}

/// Refines the product states into the customized vector `v_C`.
///
/// Returns `(v_C, beta)` where `beta` are the final-hop weights. With
/// `hops == 0` the result is the mean of the states under uniform
/// weights, which is exactly the no-user, no-neighbor pathway.
pub fn customize(
    tape: &mut Tape,
    vars: &MemoryVars,
    product_states: &[Var],
    v_user: Var,
    v_neighbor: Var,
    hops: usize,
) -> (Var, Var) {
    assert!(!product_states.is_empty(), "customize over zero product states");
    let n = product_states.len();
    let stacked = tape.stack_rows(product_states);
    let mut v_c = tape.mean_rows(stacked);
    let mut beta = tape.constant(Tensor::vector(vec![1.0 / n as f64; n]));

    for _ in 0..hops {
        let wc_v = tape.dot(vars.w_c, v_c);
        let wu_v = tape.dot(vars.w_u, v_user);
        let wn_v = tape.dot(vars.w_n, v_neighbor);
        let partial = tape.add(wc_v, wu_v);
        let partial = tape.add(partial, wn_v);
        let shared = tape.add(partial, vars.b);
        let scores: Vec<Var> = product_states
            .iter()
            .map(|&h| {
                let wt_h = tape.dot(vars.w_t, h);
                let pre = tape.add(wt_h, shared);
                tape.tanh(pre)
            })
            .collect();
        let score_vec = tape.concat(&scores);
        beta = tape.softmax(score_vec);
        v_c = tape.weighted_rows(beta, stacked);
    }
    (v_c, beta)
}
