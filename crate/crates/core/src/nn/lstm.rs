//! Standard LSTM cell: uncoupled input/forget gates, no peepholes.

use rand::Rng;

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use super::tensor::Tensor;

/// Parameter initialization range shared by all model weights.
pub const INIT_RANGE: f64 = 0.08;

/// Handles to one LSTM cell's parameters: four gate weight matrices of
/// shape `[hidden, input + hidden]`, four bias vectors, and a learned
/// initial state.
#[derive(Clone)]
pub struct LstmParams {
    pub w_input: ParamId,
    pub w_forget: ParamId,
    pub w_output: ParamId,
    pub w_candidate: ParamId,
    pub b_input: ParamId,
    pub b_forget: ParamId,
    pub b_output: ParamId,
    pub b_candidate: ParamId,
    pub h0: ParamId,
    pub c0: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl LstmParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        let gate = [hidden_dim, input_dim + hidden_dim];
        let weight =
            |store: &mut ParamStore, rng: &mut R, name: &str| -> ParamId {
                store.register(
                    &format!("{prefix}.{name}"),
                    Tensor::uniform(&gate, -INIT_RANGE, INIT_RANGE, rng),
                )
            };
        let w_input = weight(store, rng, "w_input");
        let w_forget = weight(store, rng, "w_forget");
        let w_output = weight(store, rng, "w_output");
        let w_candidate = weight(store, rng, "w_candidate");
        let bias = |store: &mut ParamStore, rng: &mut R, name: &str| -> ParamId {
            store.register(
                &format!("{prefix}.{name}"),
                Tensor::uniform(&[hidden_dim], -INIT_RANGE, INIT_RANGE, rng),
            )
        };
        let b_input = bias(store, rng, "b_input");
        let b_forget = bias(store, rng, "b_forget");
        let b_output = bias(store, rng, "b_output");
        let b_candidate = bias(store, rng, "b_candidate");
        let h0 = bias(store, rng, "h0");
        let c0 = bias(store, rng, "c0");
        LstmParams {
            w_input,
            w_forget,
            w_output,
            w_candidate,
            b_input,
            b_forget,
            b_output,
            b_candidate,
            h0,
            c0,
            input_dim,
            hidden_dim,
        }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        vec![
            self.w_input,
            self.w_forget,
            self.w_output,
            self.w_candidate,
            self.b_input,
            self.b_forget,
            self.b_output,
            self.b_candidate,
            self.h0,
            self.c0,
        ]
    }
}

/// Injected per-pass view of an LSTM cell.
pub struct LstmVars {
    w_input: Var,
    w_forget: Var,
    w_output: Var,
    w_candidate: Var,
    b_input: Var,
    b_forget: Var,
    b_output: Var,
    b_candidate: Var,
    h0: Var,
    c0: Var,
    input_dim: usize,
}

impl LstmVars {
    pub fn inject(store: &ParamStore, params: &LstmParams, tape: &mut Tape) -> Self {
        LstmVars {
            w_input: store.inject(tape, params.w_input),
            w_forget: store.inject(tape, params.w_forget),
            w_output: store.inject(tape, params.w_output),
            w_candidate: store.inject(tape, params.w_candidate),
            b_input: store.inject(tape, params.b_input),
            b_forget: store.inject(tape, params.b_forget),
            b_output: store.inject(tape, params.b_output),
            b_candidate: store.inject(tape, params.b_candidate),
            h0: store.inject(tape, params.h0),
            c0: store.inject(tape, params.c0),
            input_dim: params.input_dim,
        }
    }

    /// The learned `(h0, c0)` starting state.
    pub fn initial_state(&self) -> (Var, Var) {
        (self.h0, self.c0)
    }

    /// Injected handles in [`LstmParams::param_ids`] order.
    pub fn vars(&self) -> Vec<Var> {
        vec![
            self.w_input,
            self.w_forget,
            self.w_output,
            self.w_candidate,
            self.b_input,
            self.b_forget,
            self.b_output,
            self.b_candidate,
            self.h0,
            self.c0,
        ]
    }
}

/// One step of the cell:
///
/// ```text
/// z  = [x_t ; h_{t-1}]
/// i  = sigmoid(W_i z + b_i)      f = sigmoid(W_f z + b_f)
/// o  = sigmoid(W_o z + b_o)      g = tanh(W_g z + b_g)
/// c' = f * c + i * g             h' = o * tanh(c')
/// ```
pub fn lstm_step(tape: &mut Tape, cell: &LstmVars, x: Var, state: (Var, Var)) -> (Var, Var) {
    let x_len = tape.value(x).len();
    assert_eq!(
        x_len,
        cell.input_dim,
        "lstm input dimension mismatch: [{}] vs [{}]",
        x_len,
        cell.input_dim
    );
    let (h_prev, c_prev) = state;
    let z = tape.concat(&[x, h_prev]);

    let gate = |tape: &mut Tape, w: Var, b: Var| -> Var {
        let wz = tape.matvec(w, z);
        tape.add(wz, b)
    };
    let pre_i = gate(tape, cell.w_input, cell.b_input);
    let pre_f = gate(tape, cell.w_forget, cell.b_forget);
    let pre_o = gate(tape, cell.w_output, cell.b_output);
    let pre_g = gate(tape, cell.w_candidate, cell.b_candidate);

    let i = tape.sigmoid(pre_i);
    let f = tape.sigmoid(pre_f);
    let o = tape.sigmoid(pre_o);
    let g = tape.tanh(pre_g);

    let fc = tape.mul(f, c_prev);
    let ig = tape.mul(i, g);
    let c = tape.add(fc, ig);
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc);
    (h, c)
}
