//! Acceptance suite: one test per criterion, each printing a PASS line
//! when its assertions hold.
//!
//! Criteria 6 and 7 share trained models across three seeds; the suite
//! trains them once behind a `OnceLock`.

use std::sync::OnceLock;

use opinrec_core::corpus::{
    assemble_instances, split_instances, DatasetSplit, SplitFractions, Vocabulary,
};
use opinrec_core::evaluation::{
    evaluate_model, hop_sweep, mse, rouge1, rs_average, BaselineContext,
};
use opinrec_core::memory::{customize, MemoryParams, MemoryVars};
use opinrec_core::model::{AblationFlags, OpinionModel, PreparedInstance};
use opinrec_core::neighbors::{
    factorize, fill_neighbor_reviews, FactorizeConfig, RatingMatrix, TriFactorization,
};
use opinrec_core::nn::gradcheck::relative_error;
use opinrec_core::nn::params::ParamStore;
use opinrec_core::nn::tape::Tape;
use opinrec_core::nn::tensor::Tensor;
use opinrec_core::synthetic::{generate, SyntheticConfig};
use opinrec_core::training::{loss_generation, loss_rating, train, TrainConfig};
use opinrec_core::{seeded_rng, Rng};

fn criterion(number: usize, name: &str, pass: bool) {
    println!(
        "ACCEPTANCE {:>2} {}: {}",
        number,
        name,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {} ({}) failed", number, name);
}

/// Criterion 1: the published corpus numbers are out of reach by
/// construction; the property-based substitutes in this suite stand in
/// for them.
#[test]
fn criterion_01_reproducibility_statement() {
    println!(
        "note: published-corpus rating/generation table values are not reproducible at desk \
         scale (the source corpus and its exact evaluation pairs are unavailable); criteria \
         2-10 are the property-based substitutes"
    );
    criterion(1, "reproducibility statement", true);
}

/// Builds the tiny gradient-check corpus: |V| = 20 (16 words + 4
/// specials), one instance with target, user and neighbor histories.
fn gradcheck_fixture() -> (Vec<opinrec_core::corpus::Review>, Vocabulary) {
    let words = [
        "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india",
        "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
    ];
    let mut reviews = Vec::new();
    let mut cursor = 0usize;
    // five words per review, cycling so every word occurs
    let mut make = |user: &str, product: &str, score: f64| {
        let text: Vec<&str> = (0..5).map(|k| words[(cursor + k) % words.len()]).collect();
        cursor += 5;
        reviews.push(opinrec_core::corpus::Review {
            review_id: format!("r{}", reviews.len()),
            user_id: user.into(),
            product_id: product.into(),
            text: text.join(" "),
            score,
            timestamp: reviews.len() as i64,
        });
    };
    make("u1", "p1", 4.0);
    make("u2", "p1", 3.0);
    make("u3", "p1", 2.5);
    make("u1", "p2", 4.5);
    make("u1", "p3", 3.5);
    make("u2", "p2", 2.0);
    make("u3", "p2", 3.0);
    let texts: Vec<Vec<String>> = reviews.iter().map(|r| r.tokens()).collect();
    let vocab = Vocabulary::build(&texts, 1);
    assert_eq!(vocab.len(), 20, "gradient-check vocabulary must be 20");
    (reviews, vocab)
}

/// Criterion 2: analytic gradients of the joint loss match central
/// finite differences for every parameter tensor of a 2-hop, d = 8,
/// |V| = 20 model.
#[test]
fn criterion_02_gradient_integrity() {
    let started = std::time::Instant::now();
    let (reviews, vocab) = gradcheck_fixture();
    let pairs = vec![("u1".to_string(), "p1".to_string())];
    let (instances, diags) = assemble_instances(&reviews, &pairs);
    assert!(diags.is_empty());
    let mut instance = instances.into_iter().next().unwrap();
    // a small neighborhood exercises the neighbor encoder too
    instance.neighbor_reviews = reviews
        .iter()
        .filter(|r| r.user_id == "u2")
        .cloned()
        .collect();
    opinrec_core::corpus::sort_temporally(&mut instance.neighbor_reviews);

    let config = opinrec_core::model::ModelConfig {
        emb_dim: 8,
        hidden_dim: 8,
        hops: 2,
        dropout: 0.0,
        mu_frozen: None,
    };
    let model = OpinionModel::new(vocab.clone(), None, config, AblationFlags::none(), 17);
    let prepared = PreparedInstance::from_instance(&instance, &vocab);

    // joint loss as a pure function of the parameter store
    let loss_of = |model: &OpinionModel| -> (f64, bool) {
        let mut rng = seeded_rng(0);
        let mut pass = model.forward(&prepared, false, &mut rng);
        let y_s = pass.y_s.expect("rating head live");
        let rating = loss_rating(&mut pass.tape, y_s, prepared.gold_score, &[], 0.0);
        let generation = loss_generation(
            &mut pass.tape,
            &pass.distributions,
            &prepared.gold_wrapped[1..],
        );
        let total = pass.tape.add(rating, generation);
        (
            pass.tape.value(total).scalar_value(),
            pass.tape.saturated(),
        )
    };

    // analytic gradients once
    let (analytic, saturated) = {
        let mut rng = seeded_rng(0);
        let mut pass = model.forward(&prepared, false, &mut rng);
        let y_s = pass.y_s.expect("rating head live");
        let rating = loss_rating(&mut pass.tape, y_s, prepared.gold_score, &[], 0.0);
        let generation = loss_generation(
            &mut pass.tape,
            &pass.distributions,
            &prepared.gold_wrapped[1..],
        );
        let total = pass.tape.add(rating, generation);
        let saturated = pass.tape.saturated();
        let leafs = pass.param_leafs.clone();
        let grads = pass.tape.backward(total);
        let by_id: Vec<(opinrec_core::nn::ParamId, Tensor)> = leafs
            .iter()
            .map(|&(id, var)| {
                (
                    id,
                    grads
                        .get(var)
                        .cloned()
                        .unwrap_or_else(|| Tensor::zeros(model.store.value(id).shape())),
                )
            })
            .collect();
        (by_id, saturated)
    };

    // the tolerance tier loosens only where saturation was observed
    let tolerance = if saturated { 1e-2 } else { 1e-4 };
    let step = 1e-4;
    let mut perturbed = OpinionModel::new(
        vocab.clone(),
        None,
        model.config.clone(),
        AblationFlags::none(),
        17,
    );
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for (id, grad) in &analytic {
        let len = model.store.value(*id).len();
        for i in 0..len {
            let original = model.store.value(*id).data()[i];
            let bump = |v: f64, perturbed: &mut OpinionModel| -> f64 {
                let mut tensor = model.store.value(*id).clone();
                tensor.data_mut()[i] = v;
                perturbed.store.set_value(*id, tensor);
                let (loss, _) = loss_of(perturbed);
                loss
            };
            let plus = bump(original + step, &mut perturbed);
            let minus = bump(original - step, &mut perturbed);
            let restore = model.store.value(*id).clone();
            perturbed.store.set_value(*id, restore);
            let numeric = (plus - minus) / (2.0 * step);
            // central differences bottom out near eps * |loss| / step
            // (~5e-12 here); differences below that are roundoff, not
            // gradient errors
            let rel = if (grad.data()[i] - numeric).abs() < 1e-9 {
                0.0
            } else {
                relative_error(grad.data()[i], numeric)
            };
            worst = worst.max(rel);
            assert!(
                rel < tolerance,
                "parameter {} element {}: analytic {} vs numeric {} (rel {})",
                model.store.name(*id),
                i,
                grad.data()[i],
                numeric,
                rel
            );
            checked += 1;
        }
    }
    let elapsed = started.elapsed();
    println!(
        "checked {} parameter elements (worst relative error {:.3e}) in {:.1?}",
        checked, worst, elapsed
    );
    criterion(
        2,
        "gradient integrity",
        checked > 2000 && elapsed.as_secs() < 60,
    );
}

/// Criterion 3: factorization objective monotone on a random matrix and
/// exact recovery on a planted low-rank matrix.
#[test]
fn criterion_03_factorization_correctness() {
    let started = std::time::Instant::now();

    // (a) random 20x30, k = 4: nonincreasing within 1e-9 for 200 sweeps
    let mut rng = seeded_rng(42);
    let mut reviews = Vec::new();
    for i in 0..20 {
        for j in 0..30 {
            reviews.push(opinrec_core::corpus::Review {
                review_id: format!("r{i}_{j}"),
                user_id: format!("u{j:02}"),
                product_id: format!("p{i:02}"),
                text: "x".into(),
                score: rand::Rng::gen_range(&mut rng, 0.0..5.0),
                timestamp: (i * 30 + j) as i64,
            });
        }
    }
    let matrix = RatingMatrix::build(&reviews);
    let fact = factorize(
        &matrix,
        &FactorizeConfig {
            k_topics: 4,
            sweeps: 200,
            seed: 7,
            early_stop_tol: None,
        },
    );
    assert_eq!(fact.objective.len(), 201);
    let monotone = fact
        .objective
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-9);

    // (b) exact low-rank recovery from a near-truth initialization
    let (np, nu, k) = (12, 15, 3);
    let f_true = Tensor::uniform(&[np, k], 0.1, 1.0, &mut rng);
    let s_true = Tensor::uniform(&[k, k], 0.1, 1.0, &mut rng);
    let t_true = Tensor::uniform(&[nu, k], 0.1, 1.0, &mut rng);
    let m = f_true.matmul(&s_true).matmul(&t_true.transpose());
    let peak = m.data().iter().cloned().fold(0.0, f64::max);
    let m_scaled = m.map(|v| v * 4.9 / peak);
    let mut reviews = Vec::new();
    for i in 0..np {
        for j in 0..nu {
            reviews.push(opinrec_core::corpus::Review {
                review_id: format!("r{i}_{j}"),
                user_id: format!("u{j:02}"),
                product_id: format!("p{i:02}"),
                text: "x".into(),
                score: m_scaled.at(i, j),
                timestamp: (i * nu + j) as i64,
            });
        }
    }
    let matrix = RatingMatrix::build(&reviews);
    let jitter = |x: &Tensor, rng: &mut Rng| {
        let mut out = x.clone();
        for v in out.data_mut() {
            *v *= 1.0 + rand::Rng::gen_range(rng, -0.02..0.02);
        }
        out
    };
    let fact_lr = opinrec_core::neighbors::factorize_from(
        &matrix,
        &FactorizeConfig {
            k_topics: k,
            sweeps: 800,
            seed: 9,
            early_stop_tol: None,
        },
        jitter(&f_true.map(|v| v * 4.9 / peak), &mut rng),
        jitter(&s_true, &mut rng),
        jitter(&t_true, &mut rng),
    );
    let relative = fact_lr.objective.last().unwrap() / matrix.values().frobenius_norm();
    let decreased = fact_lr.objective.last().unwrap() < &fact_lr.objective[0];

    let elapsed = started.elapsed();
    println!(
        "monotone: {}, low-rank relative residual {:.3e}, in {:.1?}",
        monotone, relative, elapsed
    );
    criterion(
        3,
        "factorization correctness",
        monotone && decreased && relative < 1e-3 && elapsed.as_secs() < 10,
    );
}

/// Criterion 4: probability and convex-hull invariants over 1,000
/// randomized trials.
#[test]
fn criterion_04_attention_probability_invariants() {
    let mut rng = seeded_rng(44);
    let mut trials = 0usize;
    let mut ok = true;

    // 400 softmax trials
    for _ in 0..400 {
        let n = rand::Rng::gen_range(&mut rng, 1..12);
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::uniform(&[n], -12.0, 12.0, &mut rng));
        let y = tape.softmax(x);
        let values = tape.value(y).data();
        let sum: f64 = values.iter().sum();
        ok &= (sum - 1.0).abs() <= 1e-9;
        ok &= values.iter().all(|&v| v > 0.0 && v < 1.0 || (n == 1 && v == 1.0));
        trials += 1;
    }

    // 300 attention-pooling trials: alpha a distribution, pooled vector
    // reconstructs from the weights within the barycentric residual
    let mut store = ParamStore::new();
    let w_att = store.register("w", Tensor::uniform(&[6], -0.5, 0.5, &mut rng));
    let b_att = store.register("b", Tensor::scalar(0.1));
    for _ in 0..300 {
        let n = rand::Rng::gen_range(&mut rng, 1..9);
        let mut tape = Tape::new();
        let w = store.inject(&mut tape, w_att);
        let b = store.inject(&mut tape, b_att);
        let states: Vec<_> = (0..n)
            .map(|_| tape.constant(Tensor::uniform(&[6], -3.0, 3.0, &mut rng)))
            .collect();
        let (pooled, alpha) = opinrec_core::encoders::attend(&mut tape, w, b, &states);
        let weights = tape.value(alpha).data().to_vec();
        ok &= (weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        ok &= weights.iter().all(|&a| a > 0.0 && a < 1.0 || (n == 1 && a == 1.0));
        let mut residual = 0.0f64;
        for k in 0..6 {
            let recon: f64 = states
                .iter()
                .zip(&weights)
                .map(|(s, a)| tape.value(*s).data()[k] * a)
                .sum();
            residual += (tape.value(pooled).data()[k] - recon).powi(2);
        }
        ok &= residual.sqrt() < 1e-8;
        trials += 1;
    }

    // 300 memory trials across hop counts
    let mut mem_store = ParamStore::new();
    let mem = MemoryParams::init(&mut mem_store, "mem", 6, &mut rng);
    for t in 0..300 {
        let hops = t % 6;
        let n = rand::Rng::gen_range(&mut rng, 1..9);
        let mut tape = Tape::new();
        let vars = MemoryVars::inject(&mem_store, &mem, &mut tape);
        let states: Vec<_> = (0..n)
            .map(|_| tape.constant(Tensor::uniform(&[6], -3.0, 3.0, &mut rng)))
            .collect();
        let v_u = tape.constant(Tensor::uniform(&[6], -1.0, 1.0, &mut rng));
        let v_n = tape.constant(Tensor::uniform(&[6], -1.0, 1.0, &mut rng));
        let (v_c, beta) = customize(&mut tape, &vars, &states, v_u, v_n, hops);
        let weights = tape.value(beta).data().to_vec();
        ok &= (weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        ok &= weights.iter().all(|&b| b > 0.0 && b < 1.0 || (n == 1 && b == 1.0));
        let mut residual = 0.0f64;
        for k in 0..6 {
            let recon: f64 = states
                .iter()
                .zip(&weights)
                .map(|(s, b)| tape.value(*s).data()[k] * b)
                .sum();
            residual += (tape.value(v_c).data()[k] - recon).powi(2);
        }
        ok &= residual.sqrt() < 1e-8;
        trials += 1;
    }

    println!("{} randomized trials", trials);
    criterion(4, "attention/probability invariants", ok && trials == 1000);
}

/// Criterion 5: a 20-instance synthetic set is memorized within 500
/// epochs.
#[test]
fn criterion_05_overfit_sanity() {
    let started = std::time::Instant::now();
    let (data, vocab, _) = build_synthetic_data(
        &SyntheticConfig {
            users: 20,
            products: 10,
            reviews_per_user: 6,
            seed: 45,
            ..Default::default()
        },
        // all twenty instances go to training
        SplitFractions {
            train: 1.0,
            dev: 0.0,
            test: 0.0,
        },
        4,
    );
    assert_eq!(data.train.len(), 20);
    let config = TrainConfig {
        epochs: 500,
        emb_dim: 16,
        hidden_dim: 16,
        dropout: 0.0,
        patience: 10_000,
        seed: 45,
        ..Default::default()
    };
    let outcome = train(&data.train, &[], &vocab, None, &config).unwrap();
    let last = outcome.metrics.last().unwrap();
    let train_mse = last.train_mse.unwrap();
    let train_nll = last.train_nll.unwrap();
    let elapsed = started.elapsed();
    println!(
        "after {} epochs: train mse {:.4}, per-token nll {:.4}, in {:.1?}",
        outcome.metrics.len(),
        train_mse,
        train_nll,
        elapsed
    );
    criterion(
        5,
        "overfit sanity",
        train_mse < 0.05 && train_nll < 0.5 && elapsed.as_secs() < 300,
    );
}

/// Assembles, splits and neighbor-fills a synthetic corpus.
fn build_synthetic_data(
    config: &SyntheticConfig,
    fractions: SplitFractions,
    k_topics: usize,
) -> (DatasetSplit, Vocabulary, TriFactorization) {
    let (reviews, pairs) = generate(config);
    let (instances, diags) = assemble_instances(&reviews, &pairs);
    assert!(diags.is_empty(), "synthetic pairs must all be viable: {:?}", diags);
    let mut data = split_instances(instances, fractions, config.seed, reviews);
    let training = data.training_reviews();
    let texts: Vec<Vec<String>> = training.iter().map(|r| r.tokens()).collect();
    let vocab = Vocabulary::build(&texts, 2);
    let matrix = RatingMatrix::build(&training);
    let fact = factorize(
        &matrix,
        &FactorizeConfig {
            k_topics,
            sweeps: 200,
            seed: config.seed,
            early_stop_tol: Some(1e-6),
        },
    );
    for split in [&mut data.train, &mut data.dev, &mut data.test] {
        fill_neighbor_reviews(split, &training, &fact, 0.25);
    }
    (data, vocab, fact)
}

/// One benchmark seed: trained joint and no-user-no-neighbor models
/// plus the baseline numbers on test.
struct SeedOutcome {
    joint_mse: f64,
    ablated_mse: f64,
    rs_mf_mse: f64,
    rs_average_mse: f64,
    data: DatasetSplit,
    vocab: Vocabulary,
    ablated_model: OpinionModel,
}

fn benchmark_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 100,
        emb_dim: 24,
        hidden_dim: 24,
        seed,
        patience: 20,
        ..Default::default()
    }
}

fn run_benchmark_seed(seed: u64) -> SeedOutcome {
    let synth = SyntheticConfig {
        users: 200,
        products: 50,
        reviews_per_user: 40,
        seed,
        ..Default::default()
    };
    // k = 3 keeps the similarity rows broad for the neighborhood fill
    let (data, vocab, _) = build_synthetic_data(&synth, SplitFractions::default(), 3);

    let config = benchmark_config(seed);
    let joint = train(&data.train, &data.dev, &vocab, None, &config).unwrap();
    let ablated_config = TrainConfig {
        ablation: AblationFlags {
            user: true,
            neighbor: true,
            ..AblationFlags::none()
        },
        ..config.clone()
    };
    let ablated = train(&data.train, &data.dev, &vocab, None, &ablated_config).unwrap();

    let (joint_metrics, _) = evaluate_model(&joint.model, &data.test);
    let (ablated_metrics, _) = evaluate_model(&ablated.model, &data.test);

    let training = data.training_reviews();
    let mut rng = seeded_rng(0);
    let table = opinrec_core::embeddings::EmbeddingTable::init(&vocab, 8, &mut rng);
    let context = BaselineContext::build(&training, &table);
    let average_preds: Vec<f64> =
        data.test.iter().map(|i| rs_average(i).clamp(0.0, 5.0)).collect();
    let golds: Vec<f64> = data.test.iter().map(|i| i.gold_score).collect();

    // rating baseline factorization: the corpus structure is rank two,
    // and the usual restart protocol takes the best of three
    let matrix = RatingMatrix::build(&training);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..3u64 {
        let fact = factorize(
            &matrix,
            &FactorizeConfig {
                k_topics: 2,
                sweeps: 200,
                seed: seed * 100 + restart,
                early_stop_tol: Some(1e-6),
            },
        );
        let objective = *fact.objective.last().unwrap();
        let preds: Vec<f64> = data.test.iter().map(|i| context.rs_mf(&fact, i).0).collect();
        if best.as_ref().map_or(true, |(b, _)| objective < *b) {
            best = Some((objective, preds));
        }
    }
    let (_, mf_preds) = best.unwrap();

    SeedOutcome {
        joint_mse: joint_metrics.mse.unwrap(),
        ablated_mse: ablated_metrics.mse.unwrap(),
        rs_mf_mse: mse(&mf_preds, &golds),
        rs_average_mse: mse(&average_preds, &golds),
        data,
        vocab,
        ablated_model: ablated.model,
    }
}

static BENCHMARK: OnceLock<Vec<SeedOutcome>> = OnceLock::new();

fn benchmark() -> &'static [SeedOutcome] {
    BENCHMARK.get_or_init(|| [1u64, 2, 3].into_iter().map(run_benchmark_seed).collect())
}

/// Criterion 6: personalized model beats factorization beats averaging,
/// across three seeds, with at least 20% relative improvement over
/// averaging.
#[test]
fn criterion_06_directional_personalization() {
    let started = std::time::Instant::now();
    let outcomes = benchmark();
    let mut ok = true;
    for (seed, o) in outcomes.iter().enumerate() {
        println!(
            "seed {}: joint {:.4} | rs-mf {:.4} | rs-average {:.4}",
            seed + 1,
            o.joint_mse,
            o.rs_mf_mse,
            o.rs_average_mse
        );
        ok &= o.joint_mse < o.rs_mf_mse && o.rs_mf_mse < o.rs_average_mse;
        ok &= o.joint_mse <= 0.8 * o.rs_average_mse;
    }
    let elapsed = started.elapsed();
    println!("benchmark in {:.1?}", elapsed);
    criterion(
        6,
        "directional personalization",
        ok && elapsed.as_secs() < 900,
    );
}

/// Criterion 7: the no-user-no-neighbor model ignores user histories
/// bit-exactly, and the joint model beats it on every seed.
#[test]
fn criterion_07_ablation_isolation() {
    let outcomes = benchmark();
    let mut ok = true;

    // bit-identical inference under replaced user histories
    let first = &outcomes[0];
    let instance = &first.data.test[0];
    let prepared = PreparedInstance::from_instance(instance, &first.vocab);
    let mut replaced = prepared.clone();
    replaced.user_history.reverse();
    replaced.user_history.push(vec![5.min(first.vocab.len() - 1)]);
    replaced.neighborhood.clear();
    let a = first.ablated_model.infer(&prepared);
    let b = first.ablated_model.infer(&replaced);
    let bits = |x: f64| x.to_bits();
    ok &= bits(a.predicted_score.unwrap()) == bits(b.predicted_score.unwrap());
    ok &= a.generated_tokens == b.generated_tokens;
    ok &= a
        .beta
        .iter()
        .zip(&b.beta)
        .all(|(x, y)| bits(*x) == bits(*y));
    println!(
        "ablated model output is bit-identical under replaced histories: {}",
        ok
    );

    for (seed, o) in outcomes.iter().enumerate() {
        println!(
            "seed {}: joint {:.4} < no-user-no-neighbor {:.4}: {}",
            seed + 1,
            o.joint_mse,
            o.ablated_mse,
            o.joint_mse < o.ablated_mse
        );
        ok &= o.joint_mse < o.ablated_mse;
    }
    criterion(7, "ablation isolation", ok);
}

/// Criterion 8: hop 0 is exactly the mean of the product states, and
/// the sweep harness emits the full curve.
#[test]
fn criterion_08_hop_semantics() {
    // exact hop-0 equality at the memory level
    let mut rng = seeded_rng(48);
    let mut store = ParamStore::new();
    let mem = MemoryParams::init(&mut store, "mem", 5, &mut rng);
    let mut tape = Tape::new();
    let vars = MemoryVars::inject(&store, &mem, &mut tape);
    let states: Vec<_> = (0..4)
        .map(|_| tape.constant(Tensor::uniform(&[5], -2.0, 2.0, &mut rng)))
        .collect();
    let v_u = tape.constant(Tensor::uniform(&[5], -1.0, 1.0, &mut rng));
    let v_n = tape.constant(Tensor::uniform(&[5], -1.0, 1.0, &mut rng));
    let (v_c, beta) = customize(&mut tape, &vars, &states, v_u, v_n, 0);
    let stacked = tape.stack_rows(&states);
    let mean = tape.mean_rows(stacked);
    let exact = tape.value(v_c) == tape.value(mean)
        && tape.value(beta).data().iter().all(|&b| b == 0.25);

    // the sweep harness runs H = 0..5 and produces the curve
    let (data, vocab, _) = build_synthetic_data(
        &SyntheticConfig {
            users: 40,
            products: 12,
            reviews_per_user: 6,
            seed: 48,
            ..Default::default()
        },
        SplitFractions::default(),
        4,
    );
    let base = TrainConfig {
        epochs: 4,
        emb_dim: 12,
        hidden_dim: 12,
        seed: 48,
        patience: 100,
        ..Default::default()
    };
    let rows = hop_sweep(&data, &vocab, None, &base, &[0, 1, 2, 3, 4, 5]).unwrap();
    let mut curve = String::from("hops,dev_mse,test_mse\n");
    for (h, dev, test) in &rows {
        curve.push_str(&format!(
            "{},{},{}\n",
            h,
            dev.map(|v| v.to_string()).unwrap_or_default(),
            test.map(|v| v.to_string()).unwrap_or_default()
        ));
        println!("hops {}: dev mse {:?}, test mse {:?}", h, dev, test);
    }
    let complete = rows.len() == 6
        && rows.iter().enumerate().all(|(i, (h, dev, test))| {
            *h == i && dev.is_some() && test.is_some()
        })
        && curve.lines().count() == 7;
    criterion(8, "hop semantics", exact && complete);
}

/// Criterion 9: metric implementations agree exactly with brute-force
/// computations.
#[test]
fn criterion_09_metric_oracles() {
    let mut rng = seeded_rng(49);
    let mut ok = true;

    // 50 randomized rouge fixtures vs an independent counting oracle
    let alphabet = ["a", "b", "c", "d", "e", "f"];
    for _ in 0..50 {
        let clen = rand::Rng::gen_range(&mut rng, 0..12);
        let rlen = rand::Rng::gen_range(&mut rng, 1..12);
        let cand: Vec<&str> = (0..clen)
            .map(|_| alphabet[rand::Rng::gen_range(&mut rng, 0..alphabet.len())])
            .collect();
        let reference: Vec<&str> = (0..rlen)
            .map(|_| alphabet[rand::Rng::gen_range(&mut rng, 0..alphabet.len())])
            .collect();
        let (p, r, f) = rouge1(&cand, &reference);
        let mut remaining = cand.clone();
        let mut overlap = 0usize;
        for t in &reference {
            if let Some(pos) = remaining.iter().position(|c| c == t) {
                remaining.remove(pos);
                overlap += 1;
            }
        }
        let bp = if cand.is_empty() {
            0.0
        } else {
            overlap as f64 / cand.len() as f64
        };
        let br = overlap as f64 / reference.len() as f64;
        let bf = if bp + br == 0.0 {
            0.0
        } else {
            2.0 * bp * br / (bp + br)
        };
        ok &= (p - bp).abs() < 1e-12 && (r - br).abs() < 1e-12 && (f - bf).abs() < 1e-12;
    }

    // 50 randomized mse fixtures vs a brute-force loop
    for _ in 0..50 {
        let n = rand::Rng::gen_range(&mut rng, 1..20);
        let preds: Vec<f64> = (0..n)
            .map(|_| rand::Rng::gen_range(&mut rng, 0.0..5.0))
            .collect();
        let golds: Vec<f64> = (0..n)
            .map(|_| rand::Rng::gen_range(&mut rng, 0.0..5.0))
            .collect();
        let mut brute = 0.0;
        for i in 0..n {
            brute += (preds[i] - golds[i]).powi(2);
        }
        brute /= n as f64;
        ok &= (mse(&preds, &golds) - brute).abs() < 1e-12;
    }

    // hand-computed baseline fixtures
    let review = |id: &str, user: &str, product: &str, score: f64| opinrec_core::corpus::Review {
        review_id: id.into(),
        user_id: user.into(),
        product_id: product.into(),
        text: "words here".into(),
        score,
        timestamp: 0,
    };
    let instance = opinrec_core::corpus::RecommendationInstance {
        user_id: "u".into(),
        product_id: "p".into(),
        target_reviews: vec![
            review("a", "x", "p", 2.0),
            review("b", "y", "p", 4.0),
            review("c", "z", "p", 4.5),
        ],
        user_reviews: vec![review("d", "u", "q", 3.0)],
        neighbor_reviews: vec![],
        gold_score: 3.0,
        gold_review: vec!["words".into()],
        gold_review_id: "g".into(),
    };
    ok &= (rs_average(&instance) - 3.5).abs() < 1e-15;

    let train_reviews = vec![
        review("a", "u1", "p1", 4.0),
        review("b", "u1", "p2", 5.0),
        review("c", "u2", "p1", 2.0),
        review("d", "u2", "p2", 1.0),
    ];
    let table = opinrec_core::embeddings::EmbeddingTable::init(
        &Vocabulary::build(&[vec!["words".to_string(), "here".to_string()]], 1),
        4,
        &mut rng,
    );
    let context = BaselineContext::build(&train_reviews, &table);
    // s_all = 3; u1 dev = 1.5; p1 dev = 0
    ok &= (context.rs_linear("u1", "p1") - 4.5).abs() < 1e-12;
    ok &= (context.rs_linear("nobody", "nothing") - 3.0).abs() < 1e-12;

    criterion(9, "metric oracles", ok);
}

/// Criterion 10: identical seeds give bit-identical checkpoints and
/// reports, end to end.
#[test]
fn criterion_10_determinism() {
    let run_once = || -> (Vec<u8>, String) {
        let synth = SyntheticConfig {
            users: 30,
            products: 10,
            reviews_per_user: 6,
            seed: 50,
            ..Default::default()
        };
        let (data, vocab, fact) = build_synthetic_data(&synth, SplitFractions::default(), 4);
        let corpus: Vec<Vec<String>> = data
            .training_reviews()
            .iter()
            .map(|r| r.tokens())
            .collect();
        let (table, _) = opinrec_core::embeddings::train_skipgram(
            &corpus,
            &vocab,
            &opinrec_core::embeddings::SkipGramConfig {
                dim: 12,
                epochs: 2,
                seed: 50,
                ..Default::default()
            },
        );
        let config = TrainConfig {
            epochs: 3,
            emb_dim: 12,
            hidden_dim: 12,
            seed: 50,
            ..Default::default()
        };
        let outcome = train(
            &data.train,
            &data.dev,
            &vocab,
            Some(table.matrix().clone()),
            &config,
        )
        .unwrap();

        let training = data.training_reviews();
        let context = BaselineContext::build(&training, &table);
        let systems = vec![("joint".to_string(), Some(&outcome.model))];
        let report = opinrec_core::evaluation::run_grid(
            &data,
            &systems,
            &context,
            &fact,
            "determinism check",
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        report.write_csv(&path).unwrap();
        (outcome.checkpoint, std::fs::read_to_string(&path).unwrap())
    };
    let (ckpt_a, report_a) = run_once();
    let (ckpt_b, report_b) = run_once();
    let pass = ckpt_a == ckpt_b && report_a == report_b;
    println!(
        "checkpoints identical: {}, reports identical: {}",
        ckpt_a == ckpt_b,
        report_a == report_b
    );
    criterion(10, "determinism", pass);
}
