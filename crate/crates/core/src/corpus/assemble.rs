//! Turning raw reviews plus held-out (user, product) pairs into
//! recommendation instances, and carving instances into splits.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;

use super::{
    sort_temporally, DatasetSplit, Diagnostic, RecommendationInstance, Review, Split,
    MAX_SEQUENCE_REVIEWS,
};

/// Builds one instance per held-out pair.
///
/// For a pair `(user, product)` the user's most recent review of the
/// product becomes the gold; the product's other reviews form the
/// target sequence and the user's other reviews the history. Both are
/// sorted temporally and capped at the most recent
/// [`MAX_SEQUENCE_REVIEWS`]. Neighborhood reviews are filled later by
/// the neighbors stage. Pairs that cannot satisfy the preconditions are
/// skipped with a diagnostic.
pub fn assemble_instances(
    reviews: &[Review],
    held_out_pairs: &[(String, String)],
) -> (Vec<RecommendationInstance>, Vec<Diagnostic>) {
    let mut by_product: HashMap<&str, Vec<&Review>> = HashMap::new();
    let mut by_user: HashMap<&str, Vec<&Review>> = HashMap::new();
    for r in reviews {
        by_product.entry(&r.product_id).or_default().push(r);
        by_user.entry(&r.user_id).or_default().push(r);
    }

    let mut instances = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    for (idx, (user, product)) in held_out_pairs.iter().enumerate() {
        let skip = |message: String| {
            Diagnostic {
                line: idx + 1,
                message: format!("pair ({}, {}): {}", user, product, message),
            }
        };
        if !seen.insert((user, product)) {
            diagnostics.push(skip("duplicate pair".into()));
            continue;
        }
        let Some(user_reviews) = by_user.get(user.as_str()) else {
            diagnostics.push(skip("user has no reviews".into()));
            continue;
        };
        // gold = the user's review of the product; most recent wins,
        // ties broken by review id for determinism
        let gold = user_reviews
            .iter()
            .filter(|r| r.product_id == *product)
            .max_by(|a, b| {
                a.timestamp
                    .cmp(&b.timestamp)
                    .then_with(|| a.review_id.cmp(&b.review_id))
            });
        let Some(gold) = gold else {
            diagnostics.push(skip("user never reviewed the product".into()));
            continue;
        };

        let mut target: Vec<Review> = by_product
            .get(product.as_str())
            .map(|rs| {
                rs.iter()
                    .filter(|r| r.review_id != gold.review_id)
                    .map(|r| (*r).clone())
                    .collect()
            })
            .unwrap_or_default();
        if target.is_empty() {
            diagnostics.push(skip("product has no other reviews".into()));
            continue;
        }
        let mut history: Vec<Review> = user_reviews
            .iter()
            .filter(|r| r.review_id != gold.review_id)
            .map(|r| (*r).clone())
            .collect();
        if history.is_empty() {
            diagnostics.push(skip("user has no other reviews".into()));
            continue;
        }

        sort_temporally(&mut target);
        sort_temporally(&mut history);
        truncate_to_recent(&mut target);
        truncate_to_recent(&mut history);

        let instance = RecommendationInstance {
            user_id: user.clone(),
            product_id: product.clone(),
            target_reviews: target,
            user_reviews: history,
            neighbor_reviews: Vec::new(),
            gold_score: gold.score,
            gold_review: gold.tokens(),
            gold_review_id: gold.review_id.clone(),
        };
        debug_assert!(instance.check_invariants().is_ok());
        instances.push(instance);
    }
    (instances, diagnostics)
}

/// Keeps the `MAX_SEQUENCE_REVIEWS` most recent entries of an already
/// temporally sorted sequence.
pub fn truncate_to_recent(reviews: &mut Vec<Review>) {
    if reviews.len() > MAX_SEQUENCE_REVIEWS {
        reviews.drain(..reviews.len() - MAX_SEQUENCE_REVIEWS);
    }
}

/// Train/dev/test proportions; they must sum to 1.
#[derive(Clone, Copy, Debug)]
pub struct SplitFractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        // mirrors a 3000/755/1000 style partition
        SplitFractions {
            train: 0.63,
            dev: 0.16,
            test: 0.21,
        }
    }
}

/// Shuffles instances with the given seed and carves them into splits.
/// (user, product) pairs stay disjoint across splits because each pair
/// produced at most one instance.
pub fn split_instances(
    mut instances: Vec<RecommendationInstance>,
    fractions: SplitFractions,
    seed: u64,
    reviews: Vec<Review>,
) -> DatasetSplit {
    let sum = fractions.train + fractions.dev + fractions.test;
    assert!(
        (sum - 1.0).abs() < 1e-9,
        "split fractions sum to {}, expected 1",
        sum
    );
    let mut rng = crate::seeded_rng(seed);
    instances.shuffle(&mut rng);
    let n = instances.len();
    let n_train = (n as f64 * fractions.train).round() as usize;
    let n_dev = (n as f64 * fractions.dev).round() as usize;
    let n_train = n_train.min(n);
    let n_dev = n_dev.min(n - n_train);

    let test = instances.split_off(n_train + n_dev);
    let dev = instances.split_off(n_train);
    DatasetSplit {
        train: instances,
        dev,
        test,
        reviews,
    }
}

/// Tags instances with their split for serialization.
pub fn tag_splits(split: &DatasetSplit) -> Vec<(Split, RecommendationInstance)> {
    let mut out = Vec::new();
    for i in &split.train {
        out.push((Split::Train, i.clone()));
    }
    for i in &split.dev {
        out.push((Split::Dev, i.clone()));
    }
    for i in &split.test {
        out.push((Split::Test, i.clone()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(id: &str, user: &str, product: &str, score: f64, ts: i64) -> Review {
        Review {
            review_id: id.to_string(),
            user_id: user.to_string(),
            product_id: product.to_string(),
            text: format!("review text for {id}"),
            score,
            timestamp: ts,
        }
    }

    #[test]
    fn gold_and_history_follow_the_definition() {
        // u1 reviews p1 and p2; pair (u1, p1): gold is u1's p1 review,
        // history is u1's p2 review.
        let reviews = vec![
            review("r1", "u1", "p1", 4.0, 5),
            review("r2", "u1", "p2", 3.0, 6),
            review("r3", "u2", "p1", 2.0, 7),
        ];
        let (instances, diags) =
            assemble_instances(&reviews, &[("u1".into(), "p1".into())]);
        assert!(diags.is_empty());
        assert_eq!(instances.len(), 1);
        let inst = &instances[0];
        assert_eq!(inst.gold_review_id, "r1");
        assert_eq!(inst.gold_score, 4.0);
        assert_eq!(inst.user_reviews.len(), 1);
        assert_eq!(inst.user_reviews[0].review_id, "r2");
        assert_eq!(inst.target_reviews.len(), 1);
        assert_eq!(inst.target_reviews[0].review_id, "r3");
    }

    #[test]
    fn product_with_only_the_gold_review_is_skipped() {
        let reviews = vec![
            review("r1", "u1", "p1", 4.0, 5),
            review("r2", "u1", "p2", 3.0, 6),
        ];
        let (instances, diags) =
            assemble_instances(&reviews, &[("u1".into(), "p1".into())]);
        assert!(instances.is_empty());
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("no other reviews"));
    }

    #[test]
    fn instance_counts_match_enumeration_oracle() {
        // 5-user synthetic fixture; brute-force enumeration of viable
        // pairs below is the oracle.
        let mut reviews = Vec::new();
        let mut id = 0;
        let layout: &[(&str, &[&str])] = &[
            ("u1", &["p1", "p2", "p3"]),
            ("u2", &["p1", "p2"]),
            ("u3", &["p2", "p3"]),
            ("u4", &["p4"]),          // single review: never viable as pair user
            ("u5", &["p1", "p4"]),
        ];
        for (user, products) in layout {
            for product in *products {
                reviews.push(review(&format!("r{id}"), user, product, 3.0, id));
                id += 1;
            }
        }
        let mut pairs = Vec::new();
        for (user, products) in layout {
            for product in *products {
                pairs.push((user.to_string(), product.to_string()));
            }
        }
        let (instances, diags) = assemble_instances(&reviews, &pairs);

        // oracle: count pairs where the product has >=2 reviews and the
        // user has >=2 reviews
        let mut expected = 0;
        for (user, products) in layout {
            for product in *products {
                let product_count: usize = layout
                    .iter()
                    .map(|(_, ps)| ps.iter().filter(|p| p == &product).count())
                    .sum();
                let user_count = layout
                    .iter()
                    .find(|(u, _)| u == user)
                    .map(|(_, ps)| ps.len())
                    .unwrap();
                if product_count >= 2 && user_count >= 2 {
                    expected += 1;
                }
            }
        }
        assert_eq!(instances.len(), expected);
        assert_eq!(instances.len() + diags.len(), pairs.len());
        for inst in &instances {
            inst.check_invariants().unwrap();
        }
    }

    #[test]
    fn duplicate_user_product_review_gold_is_most_recent() {
        let reviews = vec![
            review("old", "u1", "p1", 2.0, 1),
            review("new", "u1", "p1", 4.0, 9),
            review("other", "u2", "p1", 3.0, 5),
            review("hist", "u1", "p2", 3.5, 2),
        ];
        let (instances, _) = assemble_instances(&reviews, &[("u1".into(), "p1".into())]);
        assert_eq!(instances[0].gold_review_id, "new");
        // the older duplicate stays in the target sequence per the
        // gold-only exclusion rule
        let target_ids: Vec<&str> = instances[0]
            .target_reviews
            .iter()
            .map(|r| r.review_id.as_str())
            .collect();
        assert_eq!(target_ids, vec!["old", "other"]);
    }

    #[test]
    fn splits_are_disjoint_and_cover_everything() {
        let mut reviews = Vec::new();
        let mut pairs = Vec::new();
        for u in 0..10 {
            for p in 0..4 {
                reviews.push(review(
                    &format!("r{u}_{p}"),
                    &format!("u{u}"),
                    &format!("p{p}"),
                    3.0,
                    (u * 10 + p) as i64,
                ));
            }
            pairs.push((format!("u{u}"), format!("p{}", u % 4)));
        }
        let (instances, _) = assemble_instances(&reviews, &pairs);
        let n = instances.len();
        let split = split_instances(
            instances,
            SplitFractions::default(),
            7,
            reviews,
        );
        assert_eq!(split.train.len() + split.dev.len() + split.test.len(), n);
        let mut seen = std::collections::HashSet::new();
        for inst in split
            .train
            .iter()
            .chain(&split.dev)
            .chain(&split.test)
        {
            assert!(seen.insert((inst.user_id.clone(), inst.product_id.clone())));
        }
        // dev/test golds never appear among training reviews
        let training = split.training_reviews();
        for inst in split.dev.iter().chain(&split.test) {
            assert!(training.iter().all(|r| r.review_id != inst.gold_review_id));
        }
    }

    #[test]
    fn sequences_are_capped_to_most_recent() {
        let mut reviews = Vec::new();
        for i in 0..40 {
            reviews.push(review(&format!("t{i}"), &format!("u{i}"), "p1", 3.0, i));
        }
        reviews.push(review("gold", "u_main", "p1", 4.0, 100));
        reviews.push(review("hist", "u_main", "p2", 3.0, 50));
        let (instances, _) =
            assemble_instances(&reviews, &[("u_main".into(), "p1".into())]);
        let inst = &instances[0];
        assert_eq!(inst.target_reviews.len(), MAX_SEQUENCE_REVIEWS);
        // the most recent targets survive
        assert_eq!(
            inst.target_reviews.last().unwrap().review_id,
            "t39"
        );
        assert_eq!(inst.target_reviews[0].review_id, "t10");
    }
}
