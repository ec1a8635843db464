//! `cskl`: generate → sketch → decode → solve → analyze.
//!
//! Exit codes: 0 success, 2 usage error, 3 decode/solve did not reach its
//! tolerance (best-effort output is still written), 4 I/O or file-format
//! error. Every run prints one `summary ...` line to standard output.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cskl_core::analysis::{
    estimate_constant, gpca_phase_diagram, ica_compression_curve, EstimateProblem, Provenance,
};
use cskl_core::decode::{
    decode_ica, decode_low_rank, diagonalize_cumulant, DecodeOptions, IterationRecord,
};
use cskl_core::io::{
    ica_hypothesis_document, matrix_rows, pca_hypothesis_document, read_csv_batch,
    read_matrix_file, subspace_hypothesis_document, write_csv_batch, write_matrix_file,
    GroundTruthFile, MatrixPayload, SketchFile, WhitenerFile,
};
use cskl_core::models::{gpca_cluster, gpca_polynomials, ica_extract, pca_extract};
use cskl_core::sketch::{
    merge_sketches, sketch_stream, OperatorKind, SketchOperator, StreamModel,
};
use cskl_core::statistics::{fit_whitener, veronese_dim, DataBatch, StatisticMatrix, Whitener};
use cskl_core::synth::{gen_gaussian, gen_ica, gen_subspaces, SourceKind};

use config::Config;

#[derive(Parser)]
#[command(
    name = "cskl",
    version,
    about = "Compressive sketched learning: sketch identifiable statistics, decode them, extract models"
)]
struct Cli {
    /// Flat key=value file supplying defaults (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker thread cap; falls back to the CSKL_THREADS environment variable.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic data plus a ground-truth sidecar.
    Gen(GenArgs),
    /// Sketch a dataset into an m-dimensional vector.
    Sketch(SketchArgs),
    /// Decode a statistic from a sketch file.
    Decode(DecodeArgs),
    /// Extract a hypothesis from a statistic file.
    Solve(SolveArgs),
    /// Reproduce the compression analyses as CSV.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Args)]
struct GenArgs {
    /// ica | subspaces | gaussian
    #[arg(long)]
    model: String,
    /// Ambient dimension.
    #[arg(long = "d")]
    dim: usize,
    /// Sample count.
    #[arg(long = "N")]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; `.csv` writes text, anything else the binary format.
    #[arg(long)]
    out: PathBuf,
    /// Subspace count (subspaces model).
    #[arg(long = "n")]
    subspaces: Option<usize>,
    /// Comma-separated subspace dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Comma-separated mixture weights (must sum to 1).
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Ambient noise standard deviation (subspaces model).
    #[arg(long)]
    noise: Option<f64>,
    /// Source kinds per channel: uniform | laplace | rademacher.
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<String>>,
}

#[derive(Args)]
struct SketchArgs {
    /// ica | gpca | pca
    #[arg(long)]
    model: String,
    #[arg(long = "in")]
    input: PathBuf,
    /// Sketch length.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    m: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Embedding degree (gpca).
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Process the stream in chunks of this many samples and merge.
    #[arg(long)]
    chunk: Option<usize>,
    /// Skip one CSV header line.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    sketch: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    /// Write the convergence log (iteration, objective, residual) as CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    stat: PathBuf,
    /// ica | gpca | pca
    #[arg(long)]
    model: String,
    #[arg(long)]
    out: PathBuf,
    /// Principal subspace dimension (pca).
    #[arg(long = "k")]
    k: Option<usize>,
    /// Subspace count (gpca).
    #[arg(long = "n")]
    subspaces: Option<usize>,
    /// Comma-separated subspace dimensions (gpca).
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Training data, needed to cluster points (gpca).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Whitener sidecar produced by `sketch --model ica`.
    #[arg(long)]
    whitener: Option<PathBuf>,
    /// Relative eigenvalue threshold for the polynomial null space.
    #[arg(long = "rank-tol")]
    rank_tol: Option<f64>,
    /// Identifiability floor for the ICA cumulants (0 disables the check).
    #[arg(long = "noise-floor")]
    noise_floor: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip one CSV header line when reading --data.
    #[arg(long)]
    header: bool,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Sketch-to-statistic compression of the tensor route.
    Fig4 {
        /// Constant in m = ⌈C·d²⌉, or `estimate` to measure it.
        #[arg(long = "C")]
        c: Option<String>,
        /// Inclusive dimension range, e.g. 2..20.
        #[arg(long = "d")]
        d_range: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sketch-to-data phase diagram of the rank-one route.
    Fig5 {
        /// Fixed data length.
        #[arg(long = "N")]
        n_data: Option<u64>,
        /// Rank as a fraction of the embedding dimension.
        #[arg(long = "rank-frac")]
        rank_frac: Option<f64>,
        /// Constant in m = ⌈C·D·R⌉, or `estimate`.
        #[arg(long = "C")]
        c: Option<String>,
        /// Inclusive subspace-count range, e.g. 1..10.
        #[arg(long = "n")]
        n_range: Option<String>,
        /// Inclusive dimension range, e.g. 2..12.
        #[arg(long = "d")]
        d_range: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }
}

fn core_err(e: cskl_core::Error) -> Failure {
    use cskl_core::Error as E;
    let code = match &e {
        E::Io(_) | E::Format(_) => 4,
        E::InvalidArgument(_) | E::InvalidSize(_) | E::InvalidDims(_) => 2,
        _ => 1,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

struct Summary {
    model: String,
    m: Option<usize>,
    residual: Option<f64>,
    /// Exit 3 when a decode/solve missed its tolerance.
    nonconverged: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli
        .threads
        .or_else(|| std::env::var("CSKL_THREADS").ok().and_then(|v| v.parse().ok()))
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let cfg = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(4);
            }
        },
        None => Config::default(),
    };
    let started = Instant::now();
    match run(cli.command, &cfg) {
        Ok(summary) => {
            let m = summary
                .m
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into());
            let residual = summary
                .residual
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_else(|| "-".into());
            println!(
                "summary model={} m={} residual={} wall_s={:.3}",
                summary.model,
                m,
                residual,
                started.elapsed().as_secs_f64()
            );
            if summary.nonconverged {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(fail) => {
            eprintln!("error: {}", fail.message);
            ExitCode::from(fail.code)
        }
    }
}

fn run(command: Command, cfg: &Config) -> Result<Summary, Failure> {
    match command {
        Command::Gen(args) => cmd_gen(args, cfg),
        Command::Sketch(args) => cmd_sketch(args, cfg),
        Command::Decode(args) => cmd_decode(args, cfg),
        Command::Solve(args) => cmd_solve(args, cfg),
        Command::Analyze(args) => cmd_analyze(args, cfg),
    }
}

fn resolve_seed(cfg: &Config, flag: Option<u64>) -> Result<u64, Failure> {
    cfg.resolve(flag, "seed", 0).map_err(Failure::usage)
}

fn decode_options(
    cfg: &Config,
    tol: Option<f64>,
    max_iters: Option<usize>,
    restarts: Option<usize>,
    seed: Option<u64>,
    step: Option<f64>,
) -> Result<DecodeOptions, Failure> {
    let defaults = DecodeOptions::default();
    Ok(DecodeOptions {
        tol: cfg.resolve(tol, "tol", defaults.tol).map_err(Failure::usage)?,
        max_iters: cfg
            .resolve(max_iters, "max_iters", defaults.max_iters)
            .map_err(Failure::usage)?,
        restarts: cfg
            .resolve(restarts, "restarts", defaults.restarts)
            .map_err(Failure::usage)?,
        seed: resolve_seed(cfg, seed)?,
        step: cfg
            .resolve(step, "step", defaults.step)
            .map_err(Failure::usage)?,
    })
}

fn write_meta(path: &Path, value: serde_json::Value) -> Result<(), Failure> {
    let meta_path = sidecar_path(path, "meta.json");
    let text = serde_json::to_string_pretty(&value)
        .map_err(|e| Failure::io(format!("meta serialization failed: {e}")))?;
    std::fs::write(&meta_path, text)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", meta_path.display())))
}

fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

fn read_data(path: &Path, header: bool) -> Result<DataBatch, Failure> {
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        read_csv_batch(path, header).map_err(core_err)
    } else {
        match read_matrix_file(path).map_err(core_err)? {
            MatrixPayload::Matrix(m) => DataBatch::new(m).map_err(core_err),
            other => Err(Failure::io(format!(
                "{} does not hold a rank-2 data matrix (got rank {})",
                path.display(),
                match other {
                    MatrixPayload::Vector(_) => 1,
                    MatrixPayload::Tensor(_) => 4,
                    MatrixPayload::Matrix(_) => unreachable!(),
                }
            ))),
        }
    }
}

fn write_data(path: &Path, data: &DataBatch) -> Result<(), Failure> {
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        write_csv_batch(path, data).map_err(core_err)
    } else {
        write_matrix_file(path, &MatrixPayload::Matrix(data.samples().clone()))
            .map_err(core_err)
    }
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn cmd_gen(args: GenArgs, cfg: &Config) -> Result<Summary, Failure> {
    let seed = resolve_seed(cfg, args.seed)?;
    if args.dim == 0 || args.samples == 0 {
        return Err(Failure::usage("--d and --N must be at least 1"));
    }
    let truth: GroundTruthFile;
    let data: DataBatch;
    match args.model.as_str() {
        "ica" => {
            let sources: Vec<SourceKind> = match &args.sources {
                None => Vec::new(),
                Some(names) => names
                    .iter()
                    .map(|s| SourceKind::parse(s))
                    .collect::<Result<_, _>>()
                    .map_err(|e| Failure::usage(e.to_string()))?,
            };
            let ground = gen_ica(seed, args.dim, args.samples, &sources, None).map_err(core_err)?;
            truth = GroundTruthFile::Ica {
                seed,
                d: args.dim,
                n: args.samples,
                sources: ground.sources.iter().map(|s| s.as_str().to_string()).collect(),
                mixing: matrix_rows(&ground.mixing),
                kappa: ground.true_kappa.iter().copied().collect(),
            };
            data = ground.data;
        }
        "subspaces" => {
            let dims = args
                .dims
                .clone()
                .ok_or_else(|| Failure::usage("--dims is required for --model subspaces"))?;
            if let Some(n) = args.subspaces {
                if n != dims.len() {
                    return Err(Failure::usage(format!(
                        "--n {} disagrees with {} entries in --dims",
                        n,
                        dims.len()
                    )));
                }
            }
            let noise = args.noise.unwrap_or(0.0);
            let ground = gen_subspaces(
                seed,
                args.dim,
                args.samples,
                &dims,
                args.alphas.as_deref(),
                noise,
            )
            .map_err(core_err)?;
            truth = GroundTruthFile::Subspaces {
                seed,
                d: args.dim,
                n: args.samples,
                dims,
                weights: ground.weights.clone(),
                noise,
                bases: ground.bases.iter().map(matrix_rows).collect(),
                labels: ground.labels.clone(),
            };
            data = ground.data;
        }
        "gaussian" => {
            data = gen_gaussian(seed, args.dim, args.samples).map_err(core_err)?;
            truth = GroundTruthFile::Gaussian {
                seed,
                d: args.dim,
                n: args.samples,
            };
        }
        other => return Err(Failure::usage(format!("unknown model `{other}`"))),
    }
    write_data(&args.out, &data)?;
    truth
        .save(&sidecar_path(&args.out, "truth.json"))
        .map_err(core_err)?;
    write_meta(
        &args.out,
        serde_json::json!({
            "command": "gen",
            "model": args.model,
            "d": args.dim,
            "N": args.samples,
            "seed": seed,
        }),
    )?;
    Ok(Summary {
        model: args.model,
        m: None,
        residual: None,
        nonconverged: false,
    })
}

// ---------------------------------------------------------------------------
// sketch
// ---------------------------------------------------------------------------

fn cmd_sketch(args: SketchArgs, cfg: &Config) -> Result<Summary, Failure> {
    let seed = resolve_seed(cfg, args.seed)?;
    let m = args.m as usize;
    let data = read_data(&args.input, args.header)?;
    let d = data.dim();

    let (op, model, degree, whitener): (SketchOperator, StreamModel<'_>, Option<usize>, Option<Whitener>);
    let fitted;
    match args.model.as_str() {
        "ica" => {
            fitted = fit_whitener(&data).map_err(core_err)?;
            op = SketchOperator::new(OperatorKind::DenseGaussianTensor, seed, m, d)
                .map_err(core_err)?;
            whitener = Some(fitted.clone());
            model = StreamModel::Ica(&fitted);
            degree = None;
        }
        "gpca" => {
            let n = args
                .degree
                .ok_or_else(|| Failure::usage("--degree is required for --model gpca"))?;
            let embedded = veronese_dim(n, d).map_err(core_err)?;
            op = SketchOperator::new(OperatorKind::RankOneMatrix, seed, m, embedded)
                .map_err(core_err)?;
            model = StreamModel::Gpca { degree: n };
            degree = Some(n);
            whitener = None;
        }
        "pca" => {
            op = SketchOperator::new(OperatorKind::RankOneMatrix, seed, m, d).map_err(core_err)?;
            model = StreamModel::Pca;
            degree = None;
            whitener = None;
        }
        other => return Err(Failure::usage(format!("unknown model `{other}`"))),
    }

    let sketch = match args.chunk {
        None => sketch_stream(&op, [&data], &model).map_err(core_err)?,
        Some(size) => {
            if size == 0 {
                return Err(Failure::usage("--chunk must be at least 1"));
            }
            let chunks = data.chunks(size);
            let mut merged: Option<cskl_core::sketch::SketchVector> = None;
            for chunk in &chunks {
                let part = sketch_stream(&op, [chunk], &model).map_err(core_err)?;
                merged = Some(match merged {
                    None => part,
                    Some(acc) => merge_sketches(&acc, &part).map_err(core_err)?,
                });
            }
            merged.expect("at least one chunk")
        }
    };

    SketchFile::from_sketch(&sketch, &args.model, degree)
        .save(&args.out)
        .map_err(core_err)?;
    if let Some(w) = &whitener {
        WhitenerFile::from_whitener(w)
            .save(&sidecar_path(&args.out, "whitener.json"))
            .map_err(core_err)?;
    }
    Ok(Summary {
        model: args.model,
        m: Some(m),
        residual: None,
        nonconverged: false,
    })
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<(), Failure> {
    let mut out = String::from("iteration,objective,residual\n");
    for rec in trace {
        out.push_str(&format!(
            "{},{:e},{:e}\n",
            rec.iteration, rec.objective, rec.residual
        ));
    }
    std::fs::write(path, out).map_err(|e| Failure::io(format!("cannot write trace: {e}")))
}

fn cmd_decode(args: DecodeArgs, cfg: &Config) -> Result<Summary, Failure> {
    let file = SketchFile::load(&args.sketch).map_err(core_err)?;
    let sketch = file.to_sketch().map_err(core_err)?;
    let op = SketchOperator::from_fingerprint(sketch.fingerprint).map_err(core_err)?;
    let opts = decode_options(cfg, args.tol, args.max_iters, args.restarts, args.seed, args.step)?;

    let (residual, converged, payload, extra) = match op.kind() {
        OperatorKind::RankOneMatrix => {
            let out = decode_low_rank(&op, &sketch, &opts).map_err(core_err)?;
            if let Some(log) = &args.log {
                write_trace(log, &out.trace)?;
            }
            (
                out.relative_residual,
                out.converged,
                MatrixPayload::Matrix(out.matrix.matrix().clone()),
                serde_json::json!({}),
            )
        }
        OperatorKind::DenseGaussianTensor => {
            let out = decode_ica(&op, &sketch, &opts).map_err(core_err)?;
            if let Some(log) = &args.log {
                write_trace(log, &out.trace)?;
            }
            let tensor = out.tensor.to_tensor().map_err(core_err)?;
            (
                out.relative_residual,
                out.converged,
                MatrixPayload::Tensor(tensor),
                serde_json::json!({
                    "q": matrix_rows(out.tensor.q()),
                    "kappa": out.tensor.kappa().iter().copied().collect::<Vec<f64>>(),
                }),
            )
        }
    };

    write_matrix_file(&args.out, &payload).map_err(core_err)?;
    write_meta(
        &args.out,
        serde_json::json!({
            "command": "decode",
            "model": file.model,
            "kind": file.kind,
            "seed": file.seed,
            "m": file.m,
            "ambient": file.ambient,
            "n_samples": file.n_samples,
            "tol": opts.tol,
            "max_iters": opts.max_iters,
            "restarts": opts.restarts,
            "decode_seed": opts.seed,
            "residual": residual,
            "converged": converged,
            "extra": extra,
        }),
    )?;
    Ok(Summary {
        model: file.model,
        m: Some(file.m),
        residual: Some(residual),
        nonconverged: !converged,
    })
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn cmd_solve(args: SolveArgs, cfg: &Config) -> Result<Summary, Failure> {
    let payload = read_matrix_file(&args.stat).map_err(core_err)?;
    let mut config_echo: Vec<(String, String)> = vec![
        ("stat".into(), args.stat.display().to_string()),
        ("model".into(), args.model.clone()),
    ];
    match args.model.as_str() {
        "ica" => {
            let tensor = match payload {
                MatrixPayload::Tensor(t) => t,
                _ => {
                    return Err(Failure::io(
                        "solving ica needs a rank-4 tensor statistic file",
                    ))
                }
            };
            let opts = decode_options(cfg, args.tol, args.max_iters, args.restarts, args.seed, None)?;
            let solved = diagonalize_cumulant(&tensor, &opts).map_err(core_err)?;
            let whitener = match &args.whitener {
                Some(path) => WhitenerFile::load(path)
                    .map_err(core_err)?
                    .to_whitener()
                    .map_err(core_err)?,
                None => Whitener::identity(tensor.dim()),
            };
            let floor = args.noise_floor.unwrap_or(0.0);
            let hyp = ica_extract(&solved.tensor, &whitener, floor).map_err(core_err)?;
            config_echo.push(("noise_floor".into(), floor.to_string()));
            config_echo.push(("residual".into(), format!("{:e}", solved.relative_residual)));
            std::fs::write(&args.out, ica_hypothesis_document(&hyp, &config_echo))
                .map_err(|e| Failure::io(format!("cannot write hypothesis: {e}")))?;
            Ok(Summary {
                model: "ica".into(),
                m: None,
                residual: Some(solved.relative_residual),
                nonconverged: !solved.converged,
            })
        }
        "gpca" => {
            let corr = match payload {
                MatrixPayload::Matrix(m) => StatisticMatrix::new(m).map_err(core_err)?,
                _ => {
                    return Err(Failure::io(
                        "solving gpca needs a rank-2 statistic file",
                    ))
                }
            };
            let n = args
                .subspaces
                .ok_or_else(|| Failure::usage("--n is required for --model gpca"))?;
            let dims = args
                .dims
                .clone()
                .ok_or_else(|| Failure::usage("--dims is required for --model gpca"))?;
            let data_path = args
                .data
                .as_ref()
                .ok_or_else(|| Failure::usage("--data is required for --model gpca"))?;
            let data = read_data(data_path, args.header)?;
            let rank_tol = cfg
                .resolve(args.rank_tol, "rank_tol", 1e-6)
                .map_err(Failure::usage)?;
            let basis = gpca_polynomials(&corr, n, rank_tol).map_err(core_err)?;
            let hyp = gpca_cluster(&data, &basis.polynomials, n, &dims).map_err(core_err)?;
            config_echo.push(("n".into(), n.to_string()));
            config_echo.push(("rank_tol".into(), rank_tol.to_string()));
            config_echo.push((
                "degenerate_spectrum".into(),
                basis.degenerate_spectrum.to_string(),
            ));
            std::fs::write(&args.out, subspace_hypothesis_document(&hyp, &config_echo))
                .map_err(|e| Failure::io(format!("cannot write hypothesis: {e}")))?;
            Ok(Summary {
                model: "gpca".into(),
                m: None,
                residual: None,
                nonconverged: false,
            })
        }
        "pca" => {
            let cov = match payload {
                MatrixPayload::Matrix(m) => StatisticMatrix::new(m).map_err(core_err)?,
                _ => {
                    return Err(Failure::io(
                        "solving pca needs a rank-2 statistic file",
                    ))
                }
            };
            let k = args
                .k
                .ok_or_else(|| Failure::usage("--k is required for --model pca"))?;
            let hyp = pca_extract(&cov, k).map_err(core_err)?;
            config_echo.push(("k".into(), k.to_string()));
            std::fs::write(&args.out, pca_hypothesis_document(&hyp, &config_echo))
                .map_err(|e| Failure::io(format!("cannot write hypothesis: {e}")))?;
            Ok(Summary {
                model: "pca".into(),
                m: None,
                residual: None,
                nonconverged: false,
            })
        }
        other => Err(Failure::usage(format!("unknown model `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

/// Inclusive range syntax: `a..b` or a single value.
fn parse_range(raw: &str) -> Result<Vec<usize>, Failure> {
    let parse_one = |s: &str| -> Result<usize, Failure> {
        s.trim()
            .parse::<usize>()
            .map_err(|e| Failure::usage(format!("bad range bound `{s}`: {e}")))
    };
    if let Some((lo, hi)) = raw.split_once("..") {
        let lo = parse_one(lo)?;
        let hi = parse_one(hi)?;
        if lo == 0 || hi < lo {
            return Err(Failure::usage(format!("bad range `{raw}`")));
        }
        Ok((lo..=hi).collect())
    } else {
        let v = parse_one(raw)?;
        if v == 0 {
            return Err(Failure::usage(format!("bad range `{raw}`")));
        }
        Ok(vec![v])
    }
}

enum ConstantSpec {
    Fixed(f64),
    Estimate,
}

fn parse_constant(raw: &Option<String>, default: f64) -> Result<ConstantSpec, Failure> {
    match raw.as_deref() {
        None => Ok(ConstantSpec::Fixed(default)),
        Some("estimate") => Ok(ConstantSpec::Estimate),
        Some(v) => v
            .parse::<f64>()
            .map(ConstantSpec::Fixed)
            .map_err(|e| Failure::usage(format!("--C expects a number or `estimate`: {e}"))),
    }
}

fn cmd_analyze(args: AnalyzeCommand, cfg: &Config) -> Result<Summary, Failure> {
    match args {
        AnalyzeCommand::Fig4 {
            c,
            d_range,
            out,
            seed,
        } => {
            let seed = resolve_seed(cfg, seed)?;
            let dims = parse_range(d_range.as_deref().unwrap_or("2..20"))?;
            let (constant, provenance) = match parse_constant(&c, 4.0)? {
                ConstantSpec::Fixed(v) => (v, Provenance::Assumed),
                ConstantSpec::Estimate => {
                    let est = estimate_constant(
                        &EstimateProblem::Ica { dims: vec![2, 3] },
                        1e-3,
                        8,
                        seed,
                    )
                    .map_err(core_err)?;
                    (est.c, Provenance::Estimated)
                }
            };
            let report =
                ica_compression_curve(dims.iter().copied(), constant, provenance).map_err(core_err)?;
            std::fs::write(&out, report.to_csv())
                .map_err(|e| Failure::io(format!("cannot write csv: {e}")))?;
            Ok(Summary {
                model: "ica".into(),
                m: None,
                residual: None,
                nonconverged: false,
            })
        }
        AnalyzeCommand::Fig5 {
            n_data,
            rank_frac,
            c,
            n_range,
            d_range,
            out,
            seed,
        } => {
            let seed = resolve_seed(cfg, seed)?;
            let n_data = n_data.unwrap_or(10_000_000);
            let rank_frac = rank_frac.unwrap_or(0.05);
            let n_values = parse_range(n_range.as_deref().unwrap_or("1..10"))?;
            let d_values = parse_range(d_range.as_deref().unwrap_or("2..12"))?;
            let (constant, provenance) = match parse_constant(&c, 6.0)? {
                ConstantSpec::Fixed(v) => (v, Provenance::Assumed),
                ConstantSpec::Estimate => {
                    let est = estimate_constant(
                        &EstimateProblem::Gpca {
                            sizes: vec![(10, 1), (15, 1), (20, 1)],
                        },
                        1e-3,
                        8,
                        seed,
                    )
                    .map_err(core_err)?;
                    (est.c, Provenance::Estimated)
                }
            };
            let report = gpca_phase_diagram(
                n_values.iter().copied(),
                d_values.iter().copied(),
                n_data,
                constant,
                rank_frac,
                provenance,
            )
            .map_err(core_err)?;
            std::fs::write(&out, report.to_csv())
                .map_err(|e| Failure::io(format!("cannot write csv: {e}")))?;
            Ok(Summary {
                model: "gpca".into(),
                m: None,
                residual: None,
                nonconverged: false,
            })
        }
    }
}
