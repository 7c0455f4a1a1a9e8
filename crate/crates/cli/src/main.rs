use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use puzzleforge_cli::commands;
use puzzleforge_cli::config::{EngineSpec, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "puzzleforge",
    version,
    about = "Mine, score, generate and curate chess puzzles with engine search statistics"
)]
struct Cli {
    /// Flat key = value config file; every key also honors a
    /// PUZZLEFORGE_<KEY> environment override.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Engine binary path, or scripted:<file> for the deterministic
    /// scripted engine.
    #[arg(long, global = true)]
    engine: Option<String>,
    /// Master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a Lichess-style puzzle CSV into puzzle records (the first
    /// solution move is applied to obtain the puzzle position).
    Ingest {
        /// CSV with PuzzleId, FEN, Moves columns (extras ignored).
        #[arg(long)]
        csv: PathBuf,
    },
    /// Run the full mining pipeline over a candidate source.
    Mine {
        /// corpus | random | evolve
        #[arg(long, default_value = "corpus")]
        source: String,
        /// FEN-per-line file, or .jsonl of ingested puzzle records.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Cap on the number of candidates.
        #[arg(long)]
        limit: Option<usize>,
        /// Extra pieces per board for the random source.
        #[arg(long, default_value_t = 6)]
        random_pieces: usize,
        /// FEN file the entropy model trains on (defaults to the
        /// candidates themselves).
        #[arg(long)]
        entropy_corpus: Option<PathBuf>,
        /// Entropy model file: loaded when present, trained and saved
        /// otherwise.
        #[arg(long)]
        entropy_model: Option<PathBuf>,
        /// Replay buffer JSONL to restore before mining.
        #[arg(long)]
        buffer_in: Option<PathBuf>,
        /// Replay buffer JSONL to persist after mining.
        #[arg(long)]
        buffer_out: Option<PathBuf>,
        /// Seed positions for --source evolve.
        #[arg(long)]
        seeds: Option<PathBuf>,
    },
    /// Evolutionary search: independent workers mutate seed positions and
    /// keep fitness-sorted elites.
    Evolve {
        /// FEN-per-line seed corpus.
        #[arg(long)]
        seeds: PathBuf,
        /// Previous elite JSONL whose positions rejoin the seed corpus.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Where to write the run manifest (config + seed).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Tune feature weights on a golden set by Average Precision.
    Tune {
        /// CSV with fen,label,split columns.
        #[arg(long)]
        golden: PathBuf,
        /// Feature cache JSONL; missing entries are computed with the
        /// engine and written back.
        #[arg(long)]
        features: PathBuf,
        /// Random-search candidates on the 0.1 weight grid.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Score a single position and print its full record.
    Score {
        fen: String,
        /// Entropy model for the record's entropy field.
        #[arg(long)]
        entropy_model: Option<PathBuf>,
    },
    /// Theme histogram over mined records (CSV: theme,count,share).
    Themes {
        #[arg(long, value_name = "JSONL")]
        input: PathBuf,
    },
    /// Yield rates and novelty-distance summary of a mined file.
    Stats {
        #[arg(long, value_name = "JSONL")]
        input: PathBuf,
    },
    /// Booklet-style markdown plus CSV sidecars for qualified puzzles.
    Report {
        #[arg(long, value_name = "JSONL")]
        input: PathBuf,
        /// Corpus for nearest-neighbor evidence (omitting it skips the
        /// neighbors section with a warning).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Ingested puzzle records for rating/popularity correlations.
        #[arg(long)]
        ingested: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Top-k nearest corpus positions by board edit distance.
    Neighbors {
        fen: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(short, default_value_t = 3)]
        k: usize,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(engine) = &cli.engine {
        cfg.engine = Some(EngineSpec::parse(engine));
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.as_deref();

    match &cli.command {
        Command::Ingest { csv } => commands::ingest(csv, out),
        Command::Mine {
            source,
            corpus,
            limit,
            random_pieces,
            entropy_corpus,
            entropy_model,
            buffer_in,
            buffer_out,
            seeds,
        } => commands::mine_cmd(
            &cfg,
            &commands::MineArgs {
                source,
                corpus: corpus.as_deref(),
                limit: *limit,
                random_pieces: *random_pieces,
                entropy_corpus: entropy_corpus.as_deref(),
                entropy_model: entropy_model.as_deref(),
                buffer_in: buffer_in.as_deref(),
                buffer_out: buffer_out.as_deref(),
                seeds: seeds.as_deref(),
            },
            out,
        ),
        Command::Evolve {
            seeds,
            resume,
            manifest,
        } => commands::evolve_cmd(&cfg, seeds, resume.as_deref(), manifest.as_deref(), out),
        Command::Tune {
            golden,
            features,
            trials,
        } => commands::tune_cmd(&cfg, golden, features, *trials, out),
        Command::Score { fen, entropy_model } => {
            commands::score_cmd(&cfg, fen, entropy_model.as_deref(), out)
        }
        Command::Themes { input } => commands::themes_cmd(input, out),
        Command::Stats { input } => commands::stats_cmd(input, out),
        Command::Report {
            input,
            corpus,
            ingested,
            dir,
        } => commands::report_cmd(input, corpus.as_deref(), ingested.as_deref(), dir),
        Command::Neighbors { fen, corpus, k } => commands::neighbors_cmd(fen, corpus, *k, out),
    }
}
