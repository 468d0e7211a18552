//! Central finite differences for verifying analytic gradients.
//!
//! The oracle only evaluates the supplied forward function at perturbed
//! inputs; it never touches the tape's backward pass, so it stays an
//! independent check of it.

use super::tensor::Tensor;

/// Default perturbation step used by the gradient checks.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Central-difference gradients of `f` with respect to every element of
/// every input tensor.
///
/// `f` must be a pure function of the inputs (same inputs, same loss).
pub fn finite_difference_gradients(
    mut f: impl FnMut(&[Tensor]) -> f64,
    inputs: &[Tensor],
    step: f64,
) -> Vec<Tensor> {
    let mut grads = Vec::with_capacity(inputs.len());
    let mut work: Vec<Tensor> = inputs.to_vec();
    for t in 0..inputs.len() {
        let mut grad = Tensor::zeros(inputs[t].shape());
        for i in 0..inputs[t].len() {
            let original = work[t].data()[i];
            work[t].data_mut()[i] = original + step;
            let plus = f(&work);
            work[t].data_mut()[i] = original - step;
            let minus = f(&work);
            work[t].data_mut()[i] = original;
            grad.data_mut()[i] = (plus - minus) / (2.0 * step);
        }
        grads.push(grad);
    }
    grads
}

/// Relative error between an analytic and a numeric gradient element,
/// guarded against division by zero.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs());
    if denom < 1e-8 {
        0.0
    } else {
        (analytic - numeric).abs() / denom
    }
}
