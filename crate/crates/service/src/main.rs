use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use divex_core::ingest::ShotParams;
use divex_core::pipeline::{ingest_catalog, IngestOptions};
use divex_service::{load_state, serve, ServiceConfig, DEFAULT_K, DEFAULT_THUMB_MAX_EDGE};
use tracing_subscriber::EnvFilter;

/// Interactive video exploration: offline ingestion and the query service.
#[derive(Parser)]
#[command(name = "divex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest frame directories and concept scores into a catalog directory.
    Ingest(IngestArgs),
    /// Serve a catalog over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Manifest with one video record per line.
    #[arg(long, env = "DIVEX_MANIFEST")]
    manifest: PathBuf,
    /// Concept score CSV files (videoId,tSec,source,conceptId,score).
    #[arg(long, env = "DIVEX_CONCEPTS", num_args = 1.., value_delimiter = ',')]
    concepts: Vec<PathBuf>,
    /// Output catalog directory.
    #[arg(long, env = "DIVEX_OUT")]
    out: PathBuf,
    #[arg(long, env = "DIVEX_SEED", default_value_t = 0)]
    seed: u64,
    /// Build default featuremaps for every (source, concept) pair at ingest.
    #[arg(long, env = "DIVEX_PRECOMPUTE_MAPS")]
    precompute_maps: bool,
    #[arg(long, env = "DIVEX_CUT_THRESHOLD", default_value_t = ShotParams::default().cut_threshold)]
    cut_threshold: f64,
    #[arg(long, env = "DIVEX_MIN_SHOT_FRAMES", default_value_t = ShotParams::default().min_shot_frames)]
    min_shot_frames: u32,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "DIVEX_CATALOG")]
    catalog: PathBuf,
    #[arg(long, env = "DIVEX_BIND", default_value = "127.0.0.1:8080")]
    bind: String,
    #[arg(long, env = "DIVEX_THUMB_MAX_EDGE", default_value_t = DEFAULT_THUMB_MAX_EDGE)]
    thumb_max_edge: u32,
    /// Seed for featuremaps built on request; defaults to the ingest seed.
    #[arg(long, env = "DIVEX_SOM_SEED")]
    som_seed: Option<u64>,
    #[arg(long, env = "DIVEX_DEFAULT_K", default_value_t = DEFAULT_K)]
    default_k: usize,
    #[arg(long, env = "DIVEX_DEFAULT_TOP_N", default_value_t = divex_core::explore::DEFAULT_TOP_N)]
    default_top_n: usize,
    #[arg(long, env = "DIVEX_DEFAULT_TAU", default_value_t = divex_core::explore::DEFAULT_TAU)]
    default_tau: f64,
}

fn run_ingest(args: IngestArgs) -> anyhow::Result<()> {
    let options = IngestOptions {
        seed: args.seed,
        precompute_maps: args.precompute_maps,
        shot_params: ShotParams {
            cut_threshold: args.cut_threshold,
            min_shot_frames: args.min_shot_frames,
        },
    };
    let (_, summary) = ingest_catalog(&args.manifest, &args.concepts, &args.out, &options)?;
    println!("{summary}");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}

fn run_serve(args: ServeArgs) -> anyhow::Result<()> {
    let config = ServiceConfig {
        thumb_max_edge: args.thumb_max_edge,
        default_k: args.default_k,
        default_top_n: args.default_top_n,
        default_tau: args.default_tau,
        ..ServiceConfig::new(args.catalog, args.bind)
    };
    let state = load_state(config, args.som_seed)?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(serve(state, shutdown_signal(), |addr| {
        println!("listening on http://{addr}")
    }))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("DIVEX_LOG").unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => run_ingest(args),
        Command::Serve(args) => run_serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
