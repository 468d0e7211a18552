//! Numeric substrate: tensors, the reverse-mode tape, an LSTM cell and
//! the Adagrad optimizer.

pub mod gradcheck;
pub mod lstm;
pub mod params;
pub mod tape;
pub mod tensor;

pub use lstm::{lstm_step, LstmParams, LstmVars};
pub use params::{AdagradState, ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
