//! Named trainable parameters and their injection into tapes.
//!
//! A forward pass copies each live parameter onto the tape as a `leaf`
//! (or as a `constant` when the parameter is frozen by an ablation), so
//! gradients come back through [`crate::nn::tape::Gradients`] keyed by
//! the injected handles.

use std::collections::HashMap;

use super::tape::{Tape, Var};
use super::tensor::Tensor;

/// Stable handle to a parameter in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

struct Entry {
    name: String,
    value: Tensor,
    trainable: bool,
}

/// Registry of all model parameters, in registration order.
#[derive(Default)]
pub struct ParamStore {
    entries: Vec<Entry>,
    by_name: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    /// Registers a tensor under a unique name.
    pub fn register(&mut self, name: &str, value: Tensor) -> ParamId {
        assert!(
            !self.by_name.contains_key(name),
            "duplicate parameter name {:?}",
            name
        );
        let id = ParamId(self.entries.len());
        self.by_name.insert(name.to_string(), id.0);
        self.entries.push(Entry {
            name: name.to_string(),
            value,
            trainable: true,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].value
    }

    pub fn set_value(&mut self, id: ParamId, value: Tensor) {
        assert_eq!(
            self.entries[id.0].value.shape(),
            value.shape(),
            "set_value shape mismatch for {:?}: {:?} vs {:?}",
            self.entries[id.0].name,
            self.entries[id.0].value.shape(),
            value.shape()
        );
        self.entries[id.0].value = value;
    }

    pub fn trainable(&self, id: ParamId) -> bool {
        self.entries[id.0].trainable
    }

    /// Frozen parameters are injected as constants: they receive no
    /// gradient, take no optimizer step and are excluded from the L2
    /// regularizer.
    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.entries[id.0].trainable = trainable;
    }

    /// Places the parameter on a tape, honoring the frozen flag.
    pub fn inject(&self, tape: &mut Tape, id: ParamId) -> Var {
        let value = self.entries[id.0].value.clone();
        if self.entries[id.0].trainable {
            tape.leaf(value)
        } else {
            tape.constant(value)
        }
    }

    /// Euclidean norm per parameter, for divergence diagnostics.
    pub fn norms(&self) -> Vec<(String, f64)> {
        self.entries
            .iter()
            .map(|e| (e.name.clone(), e.value.frobenius_norm()))
            .collect()
    }

    /// All `(name, tensor)` pairs in registration order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|e| (e.name.as_str(), &e.value))
    }
}

/// Adagrad optimizer state: one accumulated squared-gradient buffer per
/// parameter, plus the learning rate and epsilon.
pub struct AdagradState {
    learning_rate: f64,
    epsilon: f64,
    accumulators: Vec<Tensor>,
}

impl AdagradState {
    pub fn new(store: &ParamStore, learning_rate: f64, epsilon: f64) -> Self {
        let accumulators = store
            .ids()
            .map(|id| Tensor::zeros(store.value(id).shape()))
            .collect();
        AdagradState {
            learning_rate,
            epsilon,
            accumulators,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn accumulator(&self, id: ParamId) -> &Tensor {
        &self.accumulators[id.index()]
    }

    /// One Adagrad step on a single parameter:
    /// `accum += g^2; param -= lr * g / (sqrt(accum) + eps)`.
    pub fn update(&mut self, store: &mut ParamStore, id: ParamId, grad: &Tensor) {
        if !store.trainable(id) {
            return;
        }
        let accum = &mut self.accumulators[id.index()];
        assert_eq!(
            accum.shape(),
            grad.shape(),
            "adagrad grad shape mismatch for {:?}: {:?} vs {:?}",
            store.name(id),
            accum.shape(),
            grad.shape()
        );
        let lr = self.learning_rate;
        let eps = self.epsilon;
        let value = store.value_mut(id);
        for ((p, a), &g) in value
            .data_mut()
            .iter_mut()
            .zip(accum.data_mut())
            .zip(grad.data())
        {
            *a += g * g;
            *p -= lr * g / (a.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with_scalar(v: f64) -> (ParamStore, ParamId) {
        let mut store = ParamStore::new();
        let id = store.register("w", Tensor::scalar(v));
        (store, id)
    }

    #[test]
    fn first_step_matches_hand_algebra() {
        // g=3, lr=0.1, eps=0 -> delta = -0.1*3/3 = -0.1
        let (mut store, id) = store_with_scalar(1.0);
        let mut opt = AdagradState::new(&store, 0.1, 0.0);
        opt.update(&mut store, id, &Tensor::scalar(3.0));
        assert!((store.value(id).scalar_value() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        let (mut store, id) = store_with_scalar(1.5);
        let mut opt = AdagradState::new(&store, 0.1, 1e-6);
        opt.update(&mut store, id, &Tensor::scalar(0.0));
        assert_eq!(store.value(id).scalar_value(), 1.5);
        assert_eq!(opt.accumulator(id).scalar_value(), 0.0);
    }

    #[test]
    fn second_step_uses_accumulated_square() {
        // g=1 twice at lr=0.1, eps=0 -> second delta = -0.1/sqrt(2)
        let (mut store, id) = store_with_scalar(0.0);
        let mut opt = AdagradState::new(&store, 0.1, 0.0);
        opt.update(&mut store, id, &Tensor::scalar(1.0));
        let after_first = store.value(id).scalar_value();
        assert!((after_first + 0.1).abs() < 1e-12);
        opt.update(&mut store, id, &Tensor::scalar(1.0));
        let second_delta = store.value(id).scalar_value() - after_first;
        assert!((second_delta + 0.1 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn accumulators_are_monotone_nondecreasing() {
        let mut rng = crate::test_rng(9);
        let mut store = ParamStore::new();
        let id = store.register("w", Tensor::uniform(&[6], -1.0, 1.0, &mut rng));
        let mut opt = AdagradState::new(&store, 0.1, 1e-6);
        let mut prev = opt.accumulator(id).clone();
        for _ in 0..50 {
            let g = Tensor::uniform(&[6], -2.0, 2.0, &mut rng);
            opt.update(&mut store, id, &g);
            let next = opt.accumulator(id);
            for (p, n) in prev.data().iter().zip(next.data()) {
                assert!(n >= p, "accumulator decreased: {} -> {}", p, n);
                assert!(*n >= 0.0);
            }
            prev = next.clone();
        }
    }

    #[test]
    fn frozen_parameters_are_skipped() {
        let (mut store, id) = store_with_scalar(2.0);
        store.set_trainable(id, false);
        let mut opt = AdagradState::new(&store, 0.1, 0.0);
        opt.update(&mut store, id, &Tensor::scalar(5.0));
        assert_eq!(store.value(id).scalar_value(), 2.0);
    }
}
