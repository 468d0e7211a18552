//! Neighbor discovery through nonnegative tri-factorization of the
//! product-users rating matrix.
//!
//! The rating matrix `M` (products x users) is approximated as
//! `F S T^T` with all factors nonnegative; rows of `T` describe each
//! user's topic membership. Users whose normalized topic rows have
//! inner product above a threshold are neighbors.

use std::collections::HashMap;

use crate::corpus::{sort_temporally, truncate_to_recent, RecommendationInstance, Review};
use crate::nn::Tensor;

/// Denominator floor for the multiplicative updates.
const EPS_FLOOR: f64 = 1e-12;

/// Products-by-users score matrix with an observation mask.
#[derive(Clone, Debug)]
pub struct RatingMatrix {
    values: Tensor,
    observed: Vec<bool>,
    product_ids: Vec<String>,
    user_ids: Vec<String>,
    product_index: HashMap<String, usize>,
    user_index: HashMap<String, usize>,
}

impl RatingMatrix {
    /// Entry `(i, j)` is user `j`'s score for product `i`; when a user
    /// reviewed a product more than once the most recent review wins
    /// (ties broken by review id). Unobserved cells hold zero with the
    /// mask bit off.
    pub fn build(reviews: &[Review]) -> Self {
        let mut product_ids: Vec<String> = reviews.iter().map(|r| r.product_id.clone()).collect();
        let mut user_ids: Vec<String> = reviews.iter().map(|r| r.user_id.clone()).collect();
        product_ids.sort();
        product_ids.dedup();
        user_ids.sort();
        user_ids.dedup();
        let product_index: HashMap<String, usize> = product_ids
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let user_index: HashMap<String, usize> = user_ids
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();

        let (np, nu) = (product_ids.len(), user_ids.len());
        let mut values = Tensor::zeros(&[np, nu]);
        let mut observed = vec![false; np * nu];
        // recency per cell
        let mut winner: HashMap<(usize, usize), (&Review, (i64, &str))> = HashMap::new();
        for r in reviews {
            let key = (product_index[&r.product_id], user_index[&r.user_id]);
            let stamp = (r.timestamp, r.review_id.as_str());
            match winner.get(&key) {
                Some((_, best)) if *best >= stamp => {}
                _ => {
                    winner.insert(key, (r, stamp));
                }
            }
        }
        for ((i, j), (r, _)) in winner {
            values.set(i, j, r.score);
            observed[i * nu + j] = true;
        }
        RatingMatrix {
            values,
            observed,
            product_ids,
            user_ids,
            product_index,
            user_index,
        }
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn n_products(&self) -> usize {
        self.product_ids.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn product_ids(&self) -> &[String] {
        &self.product_ids
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn product_idx(&self, id: &str) -> Option<usize> {
        self.product_index.get(id).copied()
    }

    pub fn user_idx(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn is_observed(&self, product: usize, user: usize) -> bool {
        self.observed[product * self.n_users() + user]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }
}

/// Factorization settings.
#[derive(Clone, Debug)]
pub struct FactorizeConfig {
    pub k_topics: usize,
    pub sweeps: usize,
    pub seed: u64,
    /// Stop early when the relative objective improvement falls below
    /// this; `None` always runs every sweep.
    pub early_stop_tol: Option<f64>,
}

impl Default for FactorizeConfig {
    fn default() -> Self {
        FactorizeConfig {
            k_topics: 16,
            sweeps: 200,
            seed: 1,
            early_stop_tol: Some(1e-6),
        }
    }
}

/// Nonnegative factors of `M ~ F S T^T`. `T` is stored as
/// `users x topics` (the transpose of the `topics x users` layout some
/// writeups use).
#[derive(Clone, Debug)]
pub struct TriFactorization {
    pub f: Tensor,
    pub s: Tensor,
    pub t: Tensor,
    /// `||M - F S T^T||_F` before any sweep and after each sweep.
    pub objective: Vec<f64>,
    /// Times a multiplicative-update denominator hit the floor.
    pub floor_events: usize,
    product_ids: Vec<String>,
    user_ids: Vec<String>,
}

fn frobenius_residual(m: &Tensor, f: &Tensor, s: &Tensor, t: &Tensor) -> f64 {
    let recon = f.matmul(s).matmul(&t.transpose());
    m.zip(&recon, |a, b| a - b).frobenius_norm()
}

/// Elementwise `x * num / max(den, floor)`, counting floored cells.
fn multiplicative_update(x: &Tensor, num: &Tensor, den: &Tensor, floor_events: &mut usize) -> Tensor {
    let mut out = x.clone();
    for ((o, n), d) in out
        .data_mut()
        .iter_mut()
        .zip(num.data())
        .zip(den.data())
    {
        let denom = if *d < EPS_FLOOR {
            *floor_events += 1;
            EPS_FLOOR
        } else {
            *d
        };
        *o *= n / denom;
    }
    out
}

/// Runs the multiplicative updates:
///
/// ```text
/// T <- T . (M^T F S)   / (T S^T F^T F S)
/// F <- F . (M T S^T)   / (F S T^T T S^T)
/// S <- S . (F^T M T)   / (F^T F S T^T T)
/// ```
///
/// Each is the least-squares multiplicative step for its factor with
/// the others held fixed, so the objective cannot increase on any
/// sweep. Factors stay nonnegative by construction; the Frobenius
/// residual is recorded per sweep.
pub fn factorize(matrix: &RatingMatrix, config: &FactorizeConfig) -> TriFactorization {
    let k = config.k_topics;
    assert!(k >= 1, "k_topics must be at least 1");
    let m = matrix.values();
    let (np, nu) = (matrix.n_products(), matrix.n_users());
    let mut rng = crate::seeded_rng(config.seed);
    let mean = m.data().iter().sum::<f64>() / m.len() as f64;
    let scale = (mean.max(EPS_FLOOR) / k as f64).sqrt();
    let f = Tensor::uniform(&[np, k], 0.0, 1.0, &mut rng).map(|v| v * scale);
    let s = Tensor::uniform(&[k, k], 0.0, 1.0, &mut rng).map(|v| v * scale);
    let t = Tensor::uniform(&[nu, k], 0.0, 1.0, &mut rng).map(|v| v * scale);
    factorize_from(matrix, config, f, s, t)
}

/// [`factorize`] with caller-supplied initial factors.
pub fn factorize_from(
    matrix: &RatingMatrix,
    config: &FactorizeConfig,
    mut f: Tensor,
    mut s: Tensor,
    mut t: Tensor,
) -> TriFactorization {
    let m = matrix.values();
    let (np, nu) = (matrix.n_products(), matrix.n_users());
    for i in 0..np {
        assert!(
            (0..nu).any(|j| matrix.is_observed(i, j)),
            "product {} has no observed rating",
            matrix.product_ids[i]
        );
    }
    for j in 0..nu {
        assert!(
            (0..np).any(|i| matrix.is_observed(i, j)),
            "user {} has no observed rating",
            matrix.user_ids[j]
        );
    }
    assert!(
        f.data().iter().all(|&v| v >= 0.0)
            && s.data().iter().all(|&v| v >= 0.0)
            && t.data().iter().all(|&v| v >= 0.0),
        "initial factors must be nonnegative"
    );

    let mut floor_events = 0usize;
    let mut objective = vec![frobenius_residual(m, &f, &s, &t)];
    let m_t = m.transpose();
    for _ in 0..config.sweeps {
        // T update (users x topics), basis F S
        let fs = f.matmul(&s);
        let num_t = m_t.matmul(&fs);
        let den_t = t.matmul(&fs.transpose().matmul(&fs));
        t = multiplicative_update(&t, &num_t, &den_t, &mut floor_events);

        // F update (products x topics), basis S T^T
        let st = s.matmul(&t.transpose());
        let num_f = m.matmul(&st.transpose());
        let den_f = f.matmul(&st.matmul(&st.transpose()));
        f = multiplicative_update(&f, &num_f, &den_f, &mut floor_events);

        // S update (topics x topics)
        let num_s = f.transpose().matmul(&m.matmul(&t));
        let den_s = f
            .transpose()
            .matmul(&f)
            .matmul(&s)
            .matmul(&t.transpose().matmul(&t));
        s = multiplicative_update(&s, &num_s, &den_s, &mut floor_events);

        let obj = frobenius_residual(m, &f, &s, &t);
        let prev = *objective.last().unwrap();
        objective.push(obj);
        if let Some(tol) = config.early_stop_tol {
            if prev > 0.0 && (prev - obj) / prev < tol {
                break;
            }
        }
    }
    if floor_events > 0 {
        log::warn!("factorization floored {} zero denominators", floor_events);
    }
    TriFactorization {
        f,
        s,
        t,
        objective,
        floor_events,
        product_ids: matrix.product_ids.clone(),
        user_ids: matrix.user_ids.clone(),
    }
}

impl TriFactorization {
    pub fn k_topics(&self) -> usize {
        self.t.cols()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn product_ids(&self) -> &[String] {
        &self.product_ids
    }

    pub fn user_idx(&self, user: &str) -> Option<usize> {
        self.user_ids.iter().position(|u| u == user)
    }

    /// Rows of `T` rescaled to sum to one, so each row reads as a topic
    /// membership distribution and the neighbor threshold is
    /// scale-free.
    pub fn normalized_user_topics(&self) -> Tensor {
        let (n, k) = (self.t.rows(), self.t.cols());
        let mut out = self.t.clone();
        for i in 0..n {
            let sum: f64 = self.t.row_slice(i).iter().sum();
            if sum > 0.0 {
                for v in &mut out.data_mut()[i * k..(i + 1) * k] {
                    *v /= sum;
                }
            } else {
                // degenerate all-zero row: uniform membership
                for v in &mut out.data_mut()[i * k..(i + 1) * k] {
                    *v = 1.0 / k as f64;
                }
            }
        }
        out
    }

    /// Reconstructed score for one cell: `(F S T^T)_{product, user}`.
    pub fn reconstruct(&self, product: usize, user: usize) -> f64 {
        let fs = Tensor::matrix(1, self.f.cols(), self.f.row_slice(product).to_vec())
            .matmul(&self.s);
        fs.data()
            .iter()
            .zip(self.t.row_slice(user))
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Inner product of two users' normalized topic rows.
///
/// Panics on unknown user ids.
pub fn user_similarity(normalized_t: &Tensor, user_ids: &[String], i: &str, j: &str) -> f64 {
    let find = |id: &str| -> usize {
        user_ids
            .iter()
            .position(|u| u == id)
            .unwrap_or_else(|| panic!("unknown user id {:?}", id))
    };
    let (a, b) = (find(i), find(j));
    normalized_t
        .row_slice(a)
        .iter()
        .zip(normalized_t.row_slice(b))
        .map(|(x, y)| x * y)
        .sum()
}

/// All users with similarity strictly above `eta`, sorted by id so the
/// result is independent of enumeration order.
pub fn find_neighbors(
    normalized_t: &Tensor,
    user_ids: &[String],
    user: &str,
    eta: f64,
) -> Vec<String> {
    assert!((0.0..=1.0).contains(&eta), "eta {} outside [0, 1]", eta);
    let mut out: Vec<String> = user_ids
        .iter()
        .filter(|candidate| candidate.as_str() != user)
        .filter(|candidate| user_similarity(normalized_t, user_ids, user, candidate) > eta)
        .cloned()
        .collect();
    out.sort();
    out
}

/// Fills each instance's neighborhood sequence: the temporal merge of
/// all training reviews authored by the user's neighbors, capped at the
/// most recent entries.
pub fn fill_neighbor_reviews(
    instances: &mut [RecommendationInstance],
    training_reviews: &[Review],
    factorization: &TriFactorization,
    eta: f64,
) {
    let normalized = factorization.normalized_user_topics();
    let mut by_user: HashMap<&str, Vec<&Review>> = HashMap::new();
    for r in training_reviews {
        by_user.entry(&r.user_id).or_default().push(r);
    }
    for instance in instances.iter_mut() {
        if factorization.user_idx(&instance.user_id).is_none() {
            instance.neighbor_reviews = Vec::new();
            continue;
        }
        let neighbors = find_neighbors(
            &normalized,
            &factorization.user_ids,
            &instance.user_id,
            eta,
        );
        let mut merged: Vec<Review> = neighbors
            .iter()
            .filter_map(|n| by_user.get(n.as_str()))
            .flatten()
            .filter(|r| r.review_id != instance.gold_review_id)
            .map(|r| (*r).clone())
            .collect();
        sort_temporally(&mut merged);
        truncate_to_recent(&mut merged);
        instance.neighbor_reviews = merged;
    }
}
