//! Command-line front end for the congestion-prediction pipeline.
//!
//! One binary, file-based stage boundaries: every subcommand reads and
//! writes plain JSON/CSV artifacts, so each stage's output can be inspected
//! and re-run in isolation. All randomness flows from `--seed`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 training failure.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use hls_congest::bundle::{load_design_bundle, load_labels, DesignBundle, LabelRecord};
use hls_congest::dataset::{
    filter_marginal, save_dataset, split, FilterMode, Target,
};
use hls_congest::depgraph::build_graph;
use hls_congest::features::{schema, ExtractConfig, Extractor};
use hls_congest::learners::{
    feature_importance, load_model, save_model, LearnError, ModelKind,
};
use hls_congest::pipeline::{
    assemble_designs, evaluate_matrix, render_eval_table, train_target, TrainOptions,
};
use hls_congest::report::{localize, predict_design, render_csv, render_text, ModelSet};
use hls_congest::synthoracle::{generate_design, place_and_route, GenConfig};

struct AppError {
    code: u8,
    message: String,
}

impl AppError {
    fn data(message: impl ToString) -> AppError {
        AppError {
            code: 2,
            message: message.to_string(),
        }
    }

    fn usage(message: impl ToString) -> AppError {
        AppError {
            code: 1,
            message: message.to_string(),
        }
    }

    fn train(message: impl ToString) -> AppError {
        AppError {
            code: 3,
            message: message.to_string(),
        }
    }
}

fn train_error(e: LearnError) -> AppError {
    match e {
        // Mismatched inputs are data problems, not training failures.
        LearnError::FingerprintMismatch { .. }
        | LearnError::Io { .. }
        | LearnError::Parse { .. } => AppError::data(e),
        other => AppError::train(other),
    }
}

/// Defaults shared by subcommands; any flag overrides its config entry.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    test_frac: Option<f64>,
    folds: Option<usize>,
    filter: Option<FilterConfig>,
    exclude_ports: Option<bool>,
    /// Per-kind hyperparameter grids, overriding the built-in defaults.
    grids: Option<HashMap<String, Vec<hls_congest::learners::GridPoint>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterConfig {
    mode: String,
    k: Option<f64>,
    group_min: Option<usize>,
    margin: Option<u32>,
}

#[derive(Parser)]
#[command(name = "hls-congest", about = "Routing congestion prediction for HLS designs", disable_version_flag = true)]
struct Cli {
    /// JSON config file with defaults for seed, folds, filter and grids.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print version and schema fingerprints.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic design/label bundle pairs.
    SynthGen(SynthGenArgs),
    /// Load and validate a design bundle (and optionally its labels).
    Ingest(IngestArgs),
    /// Extract the feature matrix of a design to CSV.
    Features(FeaturesArgs),
    /// Train one model kind for all three congestion targets.
    Train(TrainArgs),
    /// Train and score every model kind with and without filtering.
    Evaluate(EvaluateArgs),
    /// Rank features of a trained boosted model by split count.
    Importance(ImportanceArgs),
    /// Predict per-operation congestion for a design.
    Predict(PredictArgs),
    /// Localize predicted congestion to source regions.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthGenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    designs: u32,
    /// Grid as WxH tiles.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    cap_h: Option<u64>,
    #[arg(long)]
    cap_v: Option<u64>,
    #[arg(long)]
    ops_per_tile: Option<u32>,
    #[arg(long)]
    functions: Option<u32>,
    #[arg(long)]
    ops_min: Option<u32>,
    #[arg(long)]
    ops_max: Option<u32>,
    #[arg(long)]
    unroll_groups: Option<u32>,
    #[arg(long)]
    replicas_min: Option<u32>,
    #[arg(long)]
    replicas_max: Option<u32>,
    #[arg(long)]
    sharing: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Write the dependency graph in DOT form.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, action = clap::ArgAction::SetTrue)]
    exclude_ports: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Directory of design_*.json / labels_*.json pairs.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Explicit bundle files (paired with --labels in order).
    #[arg(long)]
    bundle: Vec<PathBuf>,
    #[arg(long)]
    labels: Vec<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model kind: lasso | gbrt | mlp.
    #[arg(long)]
    model: String,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_frac: Option<f64>,
    /// Cross-validation folds; 0 skips the grid search.
    #[arg(long)]
    folds: Option<usize>,
    /// Filter mode: label_dev | margin_band | none.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    group_min: Option<usize>,
    #[arg(long)]
    margin: Option<u32>,
    #[arg(long, action = clap::ArgAction::SetTrue)]
    exclude_ports: bool,
    /// Write the assembled dataset to this file before training.
    #[arg(long)]
    save_cache: Option<PathBuf>,
    /// Write the cross-validation table as CSV.
    #[arg(long)]
    cv_table: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated kinds to evaluate.
    #[arg(long, default_value = "lasso,mlp,gbrt")]
    models: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    test_frac: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    group_min: Option<usize>,
    #[arg(long, action = clap::ArgAction::SetTrue)]
    exclude_ports: bool,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 20)]
    top: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ModelDirArgs {
    /// Directory holding {kind}_{target}.json model files.
    #[arg(long)]
    models: PathBuf,
    #[arg(long, default_value = "gbrt")]
    kind: String,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[command(flatten)]
    models: ModelDirArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, action = clap::ArgAction::SetTrue)]
    exclude_ports: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[command(flatten)]
    models: ModelDirArgs,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Ranking target: vert | horiz | avg.
    #[arg(long, default_value = "avg")]
    target: String,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, action = clap::ArgAction::SetTrue)]
    exclude_ports: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if cli.version {
        println!(
            "hls-congest {}\nfeature schema: {} ({} features)\nbundle schema: {}",
            env!("CARGO_PKG_VERSION"),
            schema().fingerprint(),
            schema().len(),
            hls_congest::bundle::SCHEMA_VERSION,
        );
        return ExitCode::SUCCESS;
    }

    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (try --help)");
        return ExitCode::from(1);
    };

    let config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return ExitCode::from(e.code);
        }
    };

    let result = match command {
        Command::SynthGen(args) => run_synth_gen(args),
        Command::Ingest(args) => run_ingest(args),
        Command::Features(args) => run_features(args),
        Command::Train(args) => run_train(args, &config),
        Command::Evaluate(args) => run_evaluate(args, &config),
        Command::Importance(args) => run_importance(args),
        Command::Predict(args) => run_predict(args, &config),
        Command::Report(args) => run_report(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, AppError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| AppError::data(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| AppError::data(format!("{}: bad config: {e}", p.display())))
        }
    }
}

fn require_exists(path: &Path) -> Result<(), AppError> {
    if !path.exists() {
        return Err(AppError::data(format!(
            "{}: no such file or directory",
            path.display()
        )));
    }
    Ok(())
}

fn parse_grid(s: &str) -> Result<(u32, u32), AppError> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| AppError::usage(format!("bad --grid {s:?}, expected WxH")))?;
    let parse = |v: &str| {
        v.parse::<u32>()
            .map_err(|_| AppError::usage(format!("bad --grid {s:?}, expected WxH")))
    };
    Ok((parse(w)?, parse(h)?))
}

fn run_synth_gen(args: SynthGenArgs) -> Result<(), AppError> {
    let mut cfg = GenConfig {
        seed: args.seed,
        ..GenConfig::default()
    };
    if let Some(grid) = &args.grid {
        let (w, h) = parse_grid(grid)?;
        cfg.grid.width = w;
        cfg.grid.height = h;
    }
    if let Some(v) = args.cap_h {
        cfg.grid.cap_h = v;
    }
    if let Some(v) = args.cap_v {
        cfg.grid.cap_v = v;
    }
    if let Some(v) = args.ops_per_tile {
        cfg.grid.ops_per_tile = v;
    }
    if let Some(v) = args.functions {
        cfg.functions = v;
    }
    if let Some(v) = args.ops_min {
        cfg.ops_per_function.0 = v;
    }
    if let Some(v) = args.ops_max {
        cfg.ops_per_function.1 = v;
    }
    if let Some(v) = args.unroll_groups {
        cfg.unroll_groups_per_function = v;
    }
    if let Some(v) = args.replicas_min {
        cfg.unroll_replicas.0 = v;
    }
    if let Some(v) = args.replicas_max {
        cfg.unroll_replicas.1 = v;
    }
    if let Some(v) = args.sharing {
        cfg.sharing_prob = v;
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| AppError::data(format!("{}: {e}", args.out.display())))?;
    for d in 0..args.designs {
        let design_cfg = GenConfig {
            seed: cfg.seed.wrapping_add(u64::from(d)),
            ..cfg.clone()
        };
        let bundle = generate_design(&design_cfg).map_err(AppError::data)?;
        let labels = place_and_route(&bundle, &design_cfg.grid).map_err(AppError::data)?;
        let bundle_path = args.out.join(format!("design_{d:03}.json"));
        let labels_path = args.out.join(format!("labels_{d:03}.json"));
        hls_congest::bundle::save_design_bundle(&bundle_path, &bundle)
            .map_err(AppError::data)?;
        hls_congest::bundle::save_labels(&labels_path, &labels).map_err(AppError::data)?;
        println!(
            "wrote {} ({} ops) and {} ({} labels)",
            bundle_path.display(),
            bundle.operations.len(),
            labels_path.display(),
            labels.len()
        );
    }
    Ok(())
}

fn run_ingest(args: IngestArgs) -> Result<(), AppError> {
    require_exists(&args.bundle)?;
    let bundle = load_design_bundle(&args.bundle).map_err(AppError::data)?;
    println!(
        "{}: {} operations, {} edges, {} ports, {} functions (top {})",
        args.bundle.display(),
        bundle.operations.len(),
        bundle.edges.len(),
        bundle.ports.len(),
        bundle.functions.len(),
        bundle.top_function().function_id,
    );
    if let Some(labels_path) = &args.labels {
        require_exists(labels_path)?;
        let labels = load_labels(labels_path, &bundle).map_err(AppError::data)?;
        println!("{}: {} label records", labels_path.display(), labels.len());
    }
    if let Some(dot_path) = &args.dump_graph {
        let graph = build_graph(&bundle);
        fs::write(dot_path, graph.to_dot())
            .map_err(|e| AppError::data(format!("{}: {e}", dot_path.display())))?;
        println!(
            "wrote {} ({} nodes)",
            dot_path.display(),
            graph.node_count()
        );
    }
    Ok(())
}

fn run_features(args: FeaturesArgs) -> Result<(), AppError> {
    require_exists(&args.bundle)?;
    let bundle = load_design_bundle(&args.bundle).map_err(AppError::data)?;
    let graph = build_graph(&bundle);
    let extractor = Extractor::new(
        &graph,
        &bundle,
        ExtractConfig {
            exclude_ports: args.exclude_ports,
        },
    );
    let file = fs::File::create(&args.out)
        .map_err(|e| AppError::data(format!("{}: {e}", args.out.display())))?;
    extractor
        .write_matrix_csv(std::io::BufWriter::new(file))
        .map_err(|e| AppError::data(format!("{}: {e}", args.out.display())))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Resolves (bundle, labels) pairs from a data directory or explicit flags.
fn collect_pairs(data: &DataArgs) -> Result<Vec<(PathBuf, PathBuf)>, AppError> {
    let mut pairs = Vec::new();
    if let Some(dir) = &data.data {
        require_exists(dir)?;
        let mut names: Vec<String> = fs::read_dir(dir)
            .map_err(|e| AppError::data(format!("{}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok())
            .filter_map(|entry| entry.file_name().into_string().ok())
            .filter(|name| name.starts_with("design_") && name.ends_with(".json"))
            .collect();
        names.sort();
        for name in names {
            let suffix = name.trim_start_matches("design_");
            let labels = dir.join(format!("labels_{suffix}"));
            pairs.push((dir.join(&name), labels));
        }
    }
    for (b, l) in data.bundle.iter().zip(&data.labels) {
        pairs.push((b.clone(), l.clone()));
    }
    if data.bundle.len() != data.labels.len() {
        return Err(AppError::usage(
            "--bundle and --labels must be given the same number of times",
        ));
    }
    if pairs.is_empty() {
        return Err(AppError::usage(
            "no input data: pass --data DIR or --bundle/--labels pairs",
        ));
    }
    for (b, l) in &pairs {
        require_exists(b)?;
        require_exists(l)?;
    }
    Ok(pairs)
}

fn load_designs(
    pairs: &[(PathBuf, PathBuf)],
) -> Result<Vec<(DesignBundle, Vec<LabelRecord>, String)>, AppError> {
    let mut designs = Vec::with_capacity(pairs.len());
    for (bundle_path, labels_path) in pairs {
        let bundle = load_design_bundle(bundle_path).map_err(AppError::data)?;
        let labels = load_labels(labels_path, &bundle).map_err(AppError::data)?;
        let name = bundle_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| bundle_path.display().to_string());
        designs.push((bundle, labels, name));
    }
    Ok(designs)
}

fn resolve_filter(
    flag: Option<&str>,
    k: Option<f64>,
    group_min: Option<usize>,
    margin: Option<u32>,
    config: &RunConfig,
) -> Result<Option<FilterMode>, AppError> {
    let from_parts = |mode: &str, k: Option<f64>, group_min: Option<usize>, margin: Option<u32>| {
        match mode {
            "label_dev" => Ok(Some(FilterMode::LabelDev {
                k: k.unwrap_or(1.5),
                group_min: group_min.unwrap_or(8),
            })),
            "margin_band" => Ok(Some(FilterMode::MarginBand {
                margin: margin.unwrap_or(1),
            })),
            "none" => Ok(None),
            other => Err(AppError::usage(format!("unknown filter mode {other:?}"))),
        }
    };
    if let Some(mode) = flag {
        return from_parts(mode, k, group_min, margin);
    }
    if let Some(fc) = &config.filter {
        return from_parts(&fc.mode, fc.k.or(k), fc.group_min.or(group_min), fc.margin.or(margin));
    }
    // Default: label-deviation filtering with the standard constants.
    from_parts("label_dev", k, group_min, margin)
}

fn parse_kind(s: &str) -> Result<ModelKind, AppError> {
    ModelKind::parse(s).ok_or_else(|| AppError::usage(format!("unknown model kind {s:?}")))
}

fn run_train(args: TrainArgs, config: &RunConfig) -> Result<(), AppError> {
    let kind = parse_kind(&args.model)?;
    let pairs = collect_pairs(&args.data)?;
    let designs = load_designs(&pairs)?;
    let extract_cfg = ExtractConfig {
        exclude_ports: args.exclude_ports || config.exclude_ports.unwrap_or(false),
    };
    let (data, stats) = assemble_designs(&designs, extract_cfg).map_err(AppError::data)?;
    println!(
        "assembled {} samples from {} designs ({} ops without labels dropped)",
        data.samples.len(),
        designs.len(),
        stats.dropped_ops
    );
    if data.samples.is_empty() {
        return Err(AppError::data("no samples: label files were empty"));
    }
    if let Some(cache) = &args.save_cache {
        save_dataset(cache, &data).map_err(AppError::data)?;
        println!("wrote dataset cache {}", cache.display());
    }

    let seed = args.seed.or(config.seed).unwrap_or(1);
    let test_frac = args.test_frac.or(config.test_frac).unwrap_or(0.2);
    let folds = args.folds.or(config.folds).unwrap_or(10);
    let filter = resolve_filter(
        args.filter.as_deref(),
        args.k,
        args.group_min,
        args.margin,
        config,
    )?;
    let grid = config
        .grids
        .as_ref()
        .and_then(|g| g.get(kind.name()).cloned());

    let (train, test) = split(&data, test_frac, seed);
    let train = match filter {
        Some(mode) => {
            let (kept, removed) = filter_marginal(&train, mode).map_err(AppError::data)?;
            println!(
                "filtered {} marginal samples ({:.2}% of training set)",
                removed.len(),
                100.0 * removed.len() as f64 / train.samples.len() as f64
            );
            kept
        }
        None => train,
    };

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| AppError::data(format!("{}: {e}", args.out_dir.display())))?;
    let opts = TrainOptions {
        seed,
        test_frac,
        filter: None,
        folds,
        grid,
        fixed_point: None,
    };
    let mut cv_csv = String::from("target,point,mean_mae,fold_maes\n");
    for target in Target::ALL {
        let outcome = train_target(&train, target, kind, &opts).map_err(train_error)?;
        if let Some(cv) = &outcome.cv {
            for row in &cv.rows {
                cv_csv.push_str(&format!(
                    "{},{},{},{}\n",
                    target.name(),
                    row.point.describe().replace(',', ";"),
                    row.mean_mae,
                    row.fold_maes
                        .iter()
                        .map(f64::to_string)
                        .collect::<Vec<_>>()
                        .join(";")
                ));
            }
            let best = cv.best();
            println!(
                "{} {}: best {} (cv mae {:.3})",
                kind.name(),
                target.name(),
                best.point.describe(),
                best.mean_mae
            );
        }
        let path = args.out_dir.join(format!("{}_{}.json", kind.name(), target.name()));
        save_model(&path, &outcome.model).map_err(train_error)?;
        let (test_x, test_y) = hls_congest::dataset::matrix_and_target(&test, target);
        let preds = outcome
            .model
            .predict(&test_x, &data.schema_fingerprint)
            .map_err(train_error)?;
        let mae = hls_congest::learners::mae(&test_y, &preds)
            .map_err(|e| AppError::train(e))?;
        let medae = hls_congest::learners::medae(&test_y, &preds)
            .map_err(|e| AppError::train(e))?;
        println!(
            "wrote {} (test MAE {:.3}, MedAE {:.3})",
            path.display(),
            mae,
            medae
        );
    }
    if let Some(path) = &args.cv_table {
        fs::write(path, cv_csv).map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs, config: &RunConfig) -> Result<(), AppError> {
    let kinds: Vec<ModelKind> = args
        .models
        .split(',')
        .map(|s| parse_kind(s.trim()))
        .collect::<Result<_, _>>()?;
    if kinds.is_empty() {
        return Err(AppError::usage("--models must name at least one kind"));
    }
    let pairs = collect_pairs(&args.data)?;
    let designs = load_designs(&pairs)?;
    let extract_cfg = ExtractConfig {
        exclude_ports: args.exclude_ports || config.exclude_ports.unwrap_or(false),
    };
    let (data, _) = assemble_designs(&designs, extract_cfg).map_err(AppError::data)?;
    if data.samples.is_empty() {
        return Err(AppError::data("no samples: label files were empty"));
    }
    let seed = args.seed.or(config.seed).unwrap_or(1);
    let folds = args.folds.or(config.folds).unwrap_or(0);
    let filter = FilterMode::LabelDev {
        k: args.k.unwrap_or(1.5),
        group_min: args.group_min.unwrap_or(8),
    };
    let opts = TrainOptions {
        seed,
        test_frac: args.test_frac.or(config.test_frac).unwrap_or(0.2),
        filter: None,
        folds,
        grid: None,
        fixed_point: None,
    };
    println!(
        "evaluating {} kinds on {} samples (seed {seed}, folds {folds})",
        kinds.len(),
        data.samples.len()
    );
    let rows = evaluate_matrix(&data, &kinds, filter, &opts)
        .map_err(|e| AppError::train(e))?;
    print!("{}", render_eval_table(&rows));
    Ok(())
}

fn run_importance(args: ImportanceArgs) -> Result<(), AppError> {
    require_exists(&args.model)?;
    let model = load_model(&args.model).map_err(AppError::data)?;
    let (features, categories) =
        feature_importance(&model, schema()).map_err(AppError::data)?;
    println!("category ranking:");
    for (cat, score) in &categories {
        println!("  {:<16} {:.3}", cat.name(), score);
    }
    println!("top {} features:", args.top);
    for (name, score) in features.iter().take(args.top) {
        println!("  {:<36} {:.3}", name, score);
    }
    if let Some(path) = &args.csv {
        let mut out = String::from("feature,score\n");
        for (name, score) in &features {
            out.push_str(&format!("{name},{score}\n"));
        }
        fs::write(path, out).map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn load_model_set(dir: &Path, kind: &str) -> Result<ModelSet, AppError> {
    let load = |target: &str| {
        let path = dir.join(format!("{kind}_{target}.json"));
        require_exists(&path)?;
        load_model(&path).map_err(AppError::data)
    };
    let set = ModelSet {
        vert: load("vert")?,
        horiz: load("horiz")?,
        avg: load("avg")?,
    };
    for model in [&set.vert, &set.horiz, &set.avg] {
        if model.schema_fingerprint != schema().fingerprint() {
            return Err(AppError::data(format!(
                "schema fingerprint mismatch: model {} vs current {}",
                model.schema_fingerprint,
                schema().fingerprint()
            )));
        }
    }
    Ok(set)
}

fn run_predict(args: PredictArgs, config: &RunConfig) -> Result<(), AppError> {
    require_exists(&args.bundle)?;
    let bundle = load_design_bundle(&args.bundle).map_err(AppError::data)?;
    let models = load_model_set(&args.models.models, &args.models.kind)?;
    let cfg = ExtractConfig {
        exclude_ports: args.exclude_ports || config.exclude_ports.unwrap_or(false),
    };
    let preds = predict_design(&bundle, &models, cfg).map_err(AppError::data)?;
    let text = serde_json::to_string_pretty(&preds).expect("predictions serialize");
    match &args.out {
        Some(path) => {
            fs::write(path, text)
                .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
            println!("wrote {} ({} predictions)", path.display(), preds.len());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn run_report(args: ReportArgs, config: &RunConfig) -> Result<(), AppError> {
    require_exists(&args.bundle)?;
    let target = Target::parse(&args.target)
        .ok_or_else(|| AppError::usage(format!("unknown target {:?}", args.target)))?;
    let bundle = load_design_bundle(&args.bundle).map_err(AppError::data)?;
    let models = load_model_set(&args.models.models, &args.models.kind)?;
    let cfg = ExtractConfig {
        exclude_ports: args.exclude_ports || config.exclude_ports.unwrap_or(false),
    };
    let preds = predict_design(&bundle, &models, cfg).map_err(AppError::data)?;
    let mut regions = localize(&preds, &bundle, args.top_k);
    // Rank on the requested target when it is not the default.
    if target != Target::Avg {
        regions.sort_by(|a, b| {
            b.max
                .get(target)
                .total_cmp(&a.max.get(target))
                .then_with(|| a.file.cmp(&b.file))
                .then_with(|| a.line_start.cmp(&b.line_start))
        });
    }
    print!("{}", render_text(&regions));
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&regions).expect("regions serialize");
        fs::write(path, text).map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.csv {
        fs::write(path, render_csv(&regions))
            .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
