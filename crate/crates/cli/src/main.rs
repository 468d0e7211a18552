//! `opinrec`: prepare data, train embeddings and the joint model, find
//! neighbors, evaluate against the baselines, and run single-instance
//! recommendations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use opinrec_core::checkpoint;
use opinrec_core::corpus::{
    assemble_instances, ingest_reviews, load_instances, save_instances, save_reviews,
    split_instances, tag_splits, DatasetSplit, RecommendationInstance, Split, SplitFractions,
    Vocabulary,
};
use opinrec_core::embeddings::{train_skipgram, EmbeddingTable, SkipGramConfig};
use opinrec_core::evaluation::{
    ablation_grid, evaluate_model, hop_sweep, mu_sweep, run_grid, BaselineContext,
    MU_SWEEP_VALUES,
};
use opinrec_core::model::{OpinionModel, PreparedInstance};
use opinrec_core::neighbors::{factorize, fill_neighbor_reviews, FactorizeConfig, RatingMatrix};
use opinrec_core::synthetic::{generate, SyntheticConfig};
use opinrec_core::training::{train, write_metrics_csv, TrainConfig};

#[derive(Parser)]
#[command(name = "opinrec", about = "Customized review and rating engine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-bias synthetic corpus (reviews + pairs).
    Synth(SynthArgs),
    /// Ingest reviews, assemble instances, build the vocabulary.
    Prepare(PrepareArgs),
    /// Train skip-gram embeddings on the training reviews.
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Factorize the rating matrix and fill neighborhood reviews.
    Neighbors(NeighborsArgs),
    /// Train the joint model from a TOML/JSON config.
    Train(TrainArgs),
    /// Evaluate a checkpoint plus the rating baselines on one split.
    Evaluate(EvaluateArgs),
    /// Emit the inference record for one (user, product) pair.
    Recommend(RecommendArgs),
    /// Evaluate the ablation/baseline grid from a checkpoint directory.
    Grid(GridArgs),
    /// Train and evaluate the hop or shift-weight sweep.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    users: usize,
    #[arg(long, default_value_t = 50)]
    products: usize,
    #[arg(long, default_value_t = 12)]
    reviews_per_user: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct PrepareArgs {
    /// Reviews JSONL (review_id, user_id, product_id, text, score, timestamp).
    #[arg(long)]
    reviews: PathBuf,
    /// Held-out pairs JSONL ({"user_id": ..., "product_id": ...}).
    #[arg(long)]
    pairs: PathBuf,
    /// Optional business objects JSONL, validated and counted.
    #[arg(long)]
    businesses: Option<PathBuf>,
    /// Optional user objects JSONL, validated and counted.
    #[arg(long)]
    users: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    min_count: u32,
    /// Train,dev,test fractions.
    #[arg(long, default_value = "0.63,0.16,0.21")]
    split: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TrainEmbeddingsArgs {
    /// Directory produced by `prepare`.
    #[arg(long)]
    data: PathBuf,
    /// Output TSV (defaults to <data>/embeddings.tsv).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct NeighborsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    eta: f64,
    #[arg(long, default_value_t = 16)]
    topics: usize,
    #[arg(long, default_value_t = 200)]
    sweeps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// TrainConfig as TOML or JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Checkpoint file name inside --out.
    #[arg(long, default_value = "model.ckpt")]
    name: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    user: String,
    #[arg(long)]
    product: String,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    data: PathBuf,
    /// Directory holding <name>.ckpt files from `train`.
    #[arg(long)]
    checkpoints: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// "hop" or "mu".
    #[arg(long)]
    kind: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Synth(args) => cmd_synth(args),
        Command::Prepare(args) => cmd_prepare(args),
        Command::TrainEmbeddings(args) => cmd_train_embeddings(args),
        Command::Neighbors(args) => cmd_neighbors(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Recommend(args) => cmd_recommend(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let config = SyntheticConfig {
        users: args.users,
        products: args.products,
        reviews_per_user: args.reviews_per_user,
        seed: args.seed,
        ..Default::default()
    };
    let (reviews, pairs) = generate(&config);
    save_reviews(&args.out.join("reviews.jsonl"), &reviews)?;
    let pairs_path = args.out.join("pairs.jsonl");
    let mut lines = String::new();
    for (user, product) in &pairs {
        lines.push_str(&serde_json::json!({"user_id": user, "product_id": product}).to_string());
        lines.push('\n');
    }
    std::fs::write(&pairs_path, lines)?;
    println!(
        "wrote {} reviews and {} pairs under {}",
        reviews.len(),
        pairs.len(),
        args.out.display()
    );
    Ok(())
}

fn parse_fractions(raw: &str) -> Result<SplitFractions> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .context("split fractions must be three comma-separated numbers")?;
    if parts.len() != 3 {
        bail!("expected three split fractions, found {}", parts.len());
    }
    Ok(SplitFractions {
        train: parts[0],
        dev: parts[1],
        test: parts[2],
    })
}

#[derive(serde::Deserialize)]
struct PairRecord {
    user_id: String,
    product_id: String,
}

fn cmd_prepare(args: PrepareArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let outcome = ingest_reviews(&args.reviews)?;
    for d in &outcome.diagnostics {
        log::warn!("{}: {}", args.reviews.display(), d);
    }
    let reviews = outcome.records;

    if let Some(path) = &args.businesses {
        let businesses = opinrec_core::corpus::ingest_businesses(path)?;
        for d in &businesses.diagnostics {
            log::warn!("{}: {}", path.display(), d);
        }
        println!("validated {} business records", businesses.records.len());
    }
    if let Some(path) = &args.users {
        let users = opinrec_core::corpus::ingest_users(path)?;
        for d in &users.diagnostics {
            log::warn!("{}: {}", path.display(), d);
        }
        println!("validated {} user records", users.records.len());
    }

    let pair_text = std::fs::read_to_string(&args.pairs)
        .with_context(|| format!("reading pairs {}", args.pairs.display()))?;
    let mut pairs = Vec::new();
    for (idx, line) in pair_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", args.pairs.display(), idx + 1))?;
        pairs.push((record.user_id, record.product_id));
    }

    let (instances, diags) = assemble_instances(&reviews, &pairs);
    for d in &diags {
        log::warn!("skipped pair: {}", d);
    }
    if instances.is_empty() {
        bail!("no viable instances; every pair failed its preconditions");
    }
    let fractions = parse_fractions(&args.split)?;
    let data = split_instances(instances, fractions, args.seed, reviews);

    // vocabulary over training text only (dev/test golds stay unseen)
    let training_reviews = data.training_reviews();
    let texts: Vec<Vec<String>> = training_reviews.iter().map(|r| r.tokens()).collect();
    let vocab = Vocabulary::build(&texts, args.min_count);

    save_instances(&args.out.join("instances.jsonl"), &tag_splits(&data))?;
    save_reviews(&args.out.join("reviews.jsonl"), &data.reviews)?;
    vocab.save_tsv(&args.out.join("vocab.tsv"))?;
    println!(
        "prepared {} train / {} dev / {} test instances, vocabulary of {} tokens, under {}",
        data.train.len(),
        data.dev.len(),
        data.test.len(),
        vocab.len(),
        args.out.display()
    );
    Ok(())
}

/// Reads a prepared data directory back into memory.
fn load_data(dir: &Path) -> Result<(DatasetSplit, Vocabulary)> {
    let tagged = load_instances(&dir.join("instances.jsonl"))?;
    let reviews = ingest_reviews(&dir.join("reviews.jsonl"))?.records;
    let mut data = DatasetSplit {
        train: Vec::new(),
        dev: Vec::new(),
        test: Vec::new(),
        reviews,
    };
    for (split, instance) in tagged {
        match split {
            Split::Train => data.train.push(instance),
            Split::Dev => data.dev.push(instance),
            Split::Test => data.test.push(instance),
        }
    }
    let vocab = Vocabulary::load_tsv(&dir.join("vocab.tsv"))?;
    Ok((data, vocab))
}

fn cmd_train_embeddings(args: TrainEmbeddingsArgs) -> Result<()> {
    let (data, vocab) = load_data(&args.data)?;
    let corpus: Vec<Vec<String>> = data
        .training_reviews()
        .iter()
        .map(|r| r.tokens())
        .collect();
    let config = SkipGramConfig {
        window: args.window,
        dim: args.dim,
        negatives: args.negatives,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        seed: args.seed,
    };
    let (table, losses) = train_skipgram(&corpus, &vocab, &config);
    if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
        println!("skip-gram loss: {:.4} -> {:.4} over {} epochs", first, last, losses.len());
    }
    let out = args
        .out
        .unwrap_or_else(|| args.data.join("embeddings.tsv"));
    table.save_tsv(&out)?;
    println!("wrote embeddings to {}", out.display());
    Ok(())
}

fn cmd_neighbors(args: NeighborsArgs) -> Result<()> {
    let (mut data, _) = load_data(&args.data)?;
    let training = data.training_reviews();
    let matrix = RatingMatrix::build(&training);
    let config = FactorizeConfig {
        k_topics: args.topics,
        sweeps: args.sweeps,
        seed: args.seed,
        early_stop_tol: Some(1e-6),
    };
    let fact = factorize(&matrix, &config);
    println!(
        "factorized {}x{} matrix (k={}): objective {:.4} -> {:.4} over {} sweeps ({} floored denominators)",
        matrix.n_products(),
        matrix.n_users(),
        args.topics,
        fact.objective.first().unwrap(),
        fact.objective.last().unwrap(),
        fact.objective.len() - 1,
        fact.floor_events,
    );

    let mut filled = 0usize;
    for split in [&mut data.train, &mut data.dev, &mut data.test] {
        fill_neighbor_reviews(split, &training, &fact, args.eta);
        filled += split
            .iter()
            .filter(|i| !i.neighbor_reviews.is_empty())
            .count();
    }
    save_instances(&args.data.join("instances.jsonl"), &tag_splits(&data))?;

    // persist the factors in the checkpoint container
    let tensors = [("f", &fact.f), ("s", &fact.s), ("t", &fact.t)];
    let file = std::fs::File::create(args.data.join("factors.ckpt"))?;
    checkpoint::write_tensors(std::io::BufWriter::new(file), &tensors)?;
    println!(
        "filled neighborhoods for {} instances (eta {})",
        filled, args.eta
    );
    Ok(())
}

fn read_train_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let config: TrainConfig = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).context("parsing TOML config")?,
        _ => serde_json::from_str(&text).context("parsing JSON config")?,
    };
    Ok(config)
}

fn load_embedding_init(
    data: &Path,
    vocab: &Vocabulary,
    emb_dim: usize,
) -> Result<Option<opinrec_core::nn::Tensor>> {
    let path = data.join("embeddings.tsv");
    if !path.exists() {
        log::warn!("no embeddings.tsv under {}; using random initialization", data.display());
        return Ok(None);
    }
    let table = EmbeddingTable::load_tsv(vocab, &path)?;
    if table.dim() != emb_dim {
        bail!(
            "embeddings.tsv has dimension {} but the config wants {}",
            table.dim(),
            emb_dim
        );
    }
    Ok(Some(table.matrix().clone()))
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let config = read_train_config(&args.config)?;
    let (data, vocab) = load_data(&args.data)?;
    let embedding = load_embedding_init(&args.data, &vocab, config.emb_dim)?;
    let outcome = train(&data.train, &data.dev, &vocab, embedding, &config)?;

    let ckpt_path = args.out.join(&args.name);
    std::fs::write(&ckpt_path, &outcome.checkpoint)?;
    let sidecar = ckpt_path.with_extension("json");
    std::fs::write(&sidecar, serde_json::to_string_pretty(&config)?)?;
    write_metrics_csv(&args.out.join("metrics.csv"), &outcome.metrics)?;
    if outcome.nll_floor_events > 0 {
        log::warn!(
            "{} probability-floor events inside generation losses",
            outcome.nll_floor_events
        );
    }
    println!(
        "trained {} epochs (best epoch {}); checkpoint {}, config echo {}, metrics {}",
        outcome.metrics.len(),
        outcome.best_epoch,
        ckpt_path.display(),
        sidecar.display(),
        args.out.join("metrics.csv").display(),
    );
    Ok(())
}

/// Rebuilds a model from a checkpoint plus its JSON sidecar.
fn load_model(ckpt: &Path, vocab: &Vocabulary) -> Result<(OpinionModel, TrainConfig)> {
    let sidecar = ckpt.with_extension("json");
    let config: TrainConfig = serde_json::from_str(
        &std::fs::read_to_string(&sidecar)
            .with_context(|| format!("reading config echo {}", sidecar.display()))?,
    )?;
    let mut model = OpinionModel::new(
        vocab.clone(),
        None,
        config.model_config(),
        config.ablation,
        config.seed,
    );
    checkpoint::load_store(&mut model.store, ckpt)?;
    Ok((model, config))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    std::fs::create_dir_all(&args.report)?;
    let (data, vocab) = load_data(&args.data)?;
    let (model, config) = load_model(&args.checkpoint, &vocab)?;
    let instances = match args.split.as_str() {
        "train" => &data.train,
        "dev" => &data.dev,
        "test" => &data.test,
        other => bail!("unknown split {:?} (train|dev|test)", other),
    };
    if instances.is_empty() {
        bail!("split {:?} is empty", args.split);
    }

    let (metrics, records) = evaluate_model(&model, instances);
    let training = data.training_reviews();
    let emb_dim = model.config.emb_dim;
    let table = match load_embedding_init(&args.data, &vocab, emb_dim)? {
        Some(matrix) => {
            let mut t = EmbeddingTable::init(&vocab, emb_dim, &mut opinrec_core::seeded_rng(0));
            t.set_matrix(matrix);
            t
        }
        None => EmbeddingTable::init(&vocab, emb_dim, &mut opinrec_core::seeded_rng(0)),
    };
    let context = BaselineContext::build(&training, &table);
    let matrix = RatingMatrix::build(&training);
    let fact = factorize(
        &matrix,
        &FactorizeConfig {
            k_topics: 8.min(matrix.n_products().min(matrix.n_users())),
            sweeps: 200,
            seed: config.seed,
            early_stop_tol: Some(1e-6),
        },
    );

    use opinrec_core::evaluation::{rs_average, GridRow, SystemMetrics};
    // results land in the column of the requested split
    let on_dev = args.split == "dev";
    let place = |m: SystemMetrics| -> (Option<SystemMetrics>, Option<SystemMetrics>) {
        if on_dev {
            (Some(m), None)
        } else {
            (None, Some(m))
        }
    };
    let (dev, test) = place(metrics);
    let mut rows = vec![GridRow {
        system: "model".into(),
        dev,
        test,
    }];
    let eval_baseline = |f: &mut dyn FnMut(&RecommendationInstance) -> f64| -> SystemMetrics {
        let preds: Vec<f64> = instances.iter().map(|i| f(i).clamp(0.0, 5.0)).collect();
        let golds: Vec<f64> = instances.iter().map(|i| i.gold_score).collect();
        SystemMetrics {
            mse: Some(opinrec_core::evaluation::mse(&preds, &golds)),
            rouge: None,
        }
    };
    let baselines: Vec<(&str, Box<dyn FnMut(&RecommendationInstance) -> f64>)> = vec![
        ("rs-average", Box::new(rs_average)),
        ("rs-linear", Box::new(|i: &RecommendationInstance| {
            context.rs_linear(&i.user_id, &i.product_id)
        })),
        ("rs-item", Box::new(|i: &RecommendationInstance| {
            context.rs_item(i, opinrec_core::evaluation::RS_ITEM_K)
        })),
        ("rs-mf", Box::new(|i: &RecommendationInstance| context.rs_mf(&fact, i).0)),
    ];
    for (name, mut f) in baselines {
        let (dev, test) = place(eval_baseline(&mut *f));
        rows.push(GridRow {
            system: name.into(),
            dev,
            test,
        });
    }

    let report = opinrec_core::evaluation::EvalReport {
        rows,
        per_instance: vec![("model".into(), records)],
        config_echo: serde_json::to_string(&config)?,
    };
    report.write_csv(&args.report.join("report.csv"))?;
    std::fs::write(
        args.report.join("per_instance.jsonl"),
        report
            .per_instance
            .iter()
            .flat_map(|(_, records)| records.iter())
            .map(|r| serde_json::to_string(r).unwrap())
            .collect::<Vec<_>>()
            .join("\n"),
    )?;
    print!("{}", report.formatted_table());
    println!("report written under {}", args.report.display());
    Ok(())
}

fn cmd_recommend(args: RecommendArgs) -> Result<()> {
    let (data, vocab) = load_data(&args.data)?;
    let (model, _) = load_model(&args.checkpoint, &vocab)?;
    let instance = data
        .train
        .iter()
        .chain(&data.dev)
        .chain(&data.test)
        .find(|i| i.user_id == args.user && i.product_id == args.product)
        .with_context(|| {
            format!(
                "no instance for user {:?} and product {:?}; run prepare with that pair",
                args.user, args.product
            )
        })?;
    let prepared = PreparedInstance::from_instance(instance, &vocab);
    let inference = model.infer(&prepared);
    println!("{}", serde_json::to_string_pretty(&inference)?);
    Ok(())
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    std::fs::create_dir_all(&args.report)?;
    let (data, vocab) = load_data(&args.data)?;

    let mut systems: Vec<(String, Option<OpinionModel>)> = Vec::new();
    let mut names: Vec<String> = ablation_grid()
        .iter()
        .map(|(name, _)| name.to_string())
        .collect();
    for h in 0..=5 {
        names.push(format!("hop{}", h));
    }
    for mu in MU_SWEEP_VALUES {
        names.push(format!("mu{}", mu));
    }
    for name in names {
        let path = args.checkpoints.join(format!("{}.ckpt", name));
        if path.exists() {
            let (model, _) = load_model(&path, &vocab)?;
            systems.push((name, Some(model)));
        } else {
            systems.push((name, None));
        }
    }
    // drop sweep rows that are absent to keep the table readable;
    // the six ablation rows always appear
    let systems: Vec<(String, Option<OpinionModel>)> = systems
        .into_iter()
        .filter(|(name, model)| {
            model.is_some() || ablation_grid().iter().any(|(n, _)| n == name)
        })
        .collect();

    let training = data.training_reviews();
    let emb_dim = systems
        .iter()
        .find_map(|(_, m)| m.as_ref().map(|m| m.config.emb_dim))
        .unwrap_or(128);
    let table = match load_embedding_init(&args.data, &vocab, emb_dim).unwrap_or(None) {
        Some(matrix) => {
            let mut t = EmbeddingTable::init(&vocab, emb_dim, &mut opinrec_core::seeded_rng(0));
            t.set_matrix(matrix);
            t
        }
        None => EmbeddingTable::init(&vocab, emb_dim, &mut opinrec_core::seeded_rng(0)),
    };
    let context = BaselineContext::build(&training, &table);
    let matrix = RatingMatrix::build(&training);
    let fact = factorize(
        &matrix,
        &FactorizeConfig {
            k_topics: 8.min(matrix.n_products().min(matrix.n_users())),
            sweeps: 200,
            seed: 1,
            early_stop_tol: Some(1e-6),
        },
    );
    let borrowed: Vec<(String, Option<&OpinionModel>)> = systems
        .iter()
        .map(|(n, m)| (n.clone(), m.as_ref()))
        .collect();
    let report = run_grid(&data, &borrowed, &context, &fact, "grid");
    report.write_csv(&args.report.join("grid.csv"))?;
    print!("{}", report.formatted_table());
    println!("grid written under {}", args.report.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let config = read_train_config(&args.config)?;
    let (data, vocab) = load_data(&args.data)?;
    let embedding = load_embedding_init(&args.data, &vocab, config.emb_dim)?;
    match args.kind.as_str() {
        "hop" => {
            let rows = hop_sweep(&data, &vocab, embedding, &config, &[0, 1, 2, 3, 4, 5])?;
            let mut csv = String::from("hops,dev_mse,test_mse\n");
            for (h, dev, test) in &rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    h,
                    dev.map(|v| v.to_string()).unwrap_or_default(),
                    test.map(|v| v.to_string()).unwrap_or_default()
                ));
            }
            std::fs::write(args.out.join("hop_sweep.csv"), csv)?;
            for (h, dev, test) in rows {
                println!("hops {}: dev mse {:?}, test mse {:?}", h, dev, test);
            }
        }
        "mu" => {
            let rows = mu_sweep(&data, &vocab, embedding, &config, &MU_SWEEP_VALUES)?;
            let mut csv = String::from("mu,dev_mse,test_mse\n");
            for (mu, dev, test) in &rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    mu,
                    dev.map(|v| v.to_string()).unwrap_or_default(),
                    test.map(|v| v.to_string()).unwrap_or_default()
                ));
            }
            std::fs::write(args.out.join("mu_sweep.csv"), csv)?;
            for (mu, dev, test) in rows {
                println!("mu {}: dev mse {:?}, test mse {:?}", mu, dev, test);
            }
        }
        other => bail!("unknown sweep kind {:?} (hop|mu)", other),
    }
    Ok(())
}

