//! Planted-bias synthetic corpus.
//!
//! Every user carries a latent score offset and a topic preference;
//! every product a base score and a topic. A review's score is the
//! product base plus the author offset plus Gaussian noise, and its
//! text mixes the product's topic tokens with sentiment tokens keyed to
//! the author's offset bin. Personalization therefore beats averaging
//! by construction: the text reveals exactly the signal a user-aware
//! model needs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::Review;

/// Offset tiers users are assigned to, with their sentiment wordings.
const OFFSET_BINS: [(f64, &[&str]); 4] = [
    (
        -1.2,
        &[
            "awful", "terrible", "dreadful", "disgusting", "regret", "never", "worst", "avoid",
        ],
    ),
    (
        -0.4,
        &[
            "meh", "mediocre", "bland", "overpriced", "slow", "forgettable", "underwhelming",
            "tired",
        ],
    ),
    (
        0.4,
        &[
            "solid", "pleasant", "tasty", "friendly", "decent", "enjoyable", "good", "reliable",
        ],
    ),
    (
        1.2,
        &[
            "amazing", "fantastic", "superb", "perfect", "incredible", "stellar", "wonderful",
            "love",
        ],
    ),
];

const TOPIC_POOLS: [&[&str]; 4] = [
    &[
        "pizza", "crust", "mozzarella", "oven", "pepperoni", "slice", "basil", "marinara",
        "dough", "garlic", "calzone", "parmesan",
    ],
    &[
        "sushi", "sashimi", "wasabi", "rice", "tuna", "salmon", "roll", "nori", "tempura",
        "miso", "ginger", "unagi",
    ],
    &[
        "pancakes", "brunch", "espresso", "omelette", "bacon", "syrup", "toast", "latte",
        "waffle", "hashbrowns", "juice", "muffin",
    ],
    &[
        "brisket", "ribs", "smoker", "barbecue", "sauce", "pulledpork", "cornbread", "slaw",
        "sausage", "beans", "rub", "grill",
    ],
];

const FILLER: &[&str] = &[
    "the", "was", "and", "very", "really", "place", "service", "staff", "visit", "again",
];

/// Generator settings; the defaults suit the benchmark experiments.
#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub users: usize,
    pub products: usize,
    /// Products each user reviews (controls matrix density).
    pub reviews_per_user: usize,
    /// Score noise standard deviation.
    pub noise_sigma: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            users: 200,
            products: 50,
            reviews_per_user: 12,
            noise_sigma: 0.3,
            min_tokens: 8,
            max_tokens: 14,
            seed: 1,
        }
    }
}

/// Box-Muller standard normal.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Generates the corpus and one held-out `(user, product)` pair per
/// user. Deterministic under the seed.
pub fn generate(config: &SyntheticConfig) -> (Vec<Review>, Vec<(String, String)>) {
    assert!(
        config.reviews_per_user >= 2 && config.reviews_per_user <= config.products,
        "reviews_per_user {} must lie in [2, products]",
        config.reviews_per_user
    );
    let mut rng = crate::seeded_rng(config.seed);

    let product_base: Vec<f64> = (0..config.products)
        .map(|_| rng.gen_range(1.7..3.3))
        .collect();
    let product_topic: Vec<usize> = (0..config.products)
        .map(|i| i % TOPIC_POOLS.len())
        .collect();
    let user_bin: Vec<usize> = (0..config.users)
        .map(|_| rng.gen_range(0..OFFSET_BINS.len()))
        .collect();

    let mut reviews = Vec::new();
    let mut pairs = Vec::new();
    let mut timestamp = 0i64;
    for user in 0..config.users {
        let user_id = format!("u{:04}", user);
        let (offset, sentiment_pool) = OFFSET_BINS[user_bin[user]];

        let mut products: Vec<usize> = (0..config.products).collect();
        products.shuffle(&mut rng);
        products.truncate(config.reviews_per_user);
        let held_out = products[rng.gen_range(0..products.len())];
        pairs.push((user_id.clone(), format!("p{:03}", held_out)));

        for product in products {
            let product_id = format!("p{:03}", product);
            let score = (product_base[product] + offset + config.noise_sigma * gaussian(&mut rng))
                .clamp(0.0, 5.0);
            let n_tokens = rng.gen_range(config.min_tokens..=config.max_tokens);
            let topic_pool = TOPIC_POOLS[product_topic[product]];
            let mut tokens = Vec::with_capacity(n_tokens);
            for _ in 0..n_tokens {
                let roll: f64 = rng.gen();
                let pool: &[&str] = if roll < 0.45 {
                    topic_pool
                } else if roll < 0.85 {
                    sentiment_pool
                } else {
                    FILLER
                };
                tokens.push(pool[rng.gen_range(0..pool.len())]);
            }
            reviews.push(Review {
                review_id: format!("r{:07}", reviews.len()),
                user_id: user_id.clone(),
                product_id,
                text: tokens.join(" "),
                score,
                timestamp,
            });
            timestamp += 1;
        }
    }
    (reviews, pairs)
}
