//! Subcommand implementations. Each takes the resolved configuration and
//! plain arguments, writes machine output to `--out` (or stdout) and
//! human-readable summaries to stderr.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use puzzleforge_core::chess::{Move, Position};
use puzzleforge_core::counterintuit::{
    correlate, tie_averaged_ap, tune_weights, FeatureVector, GoldenSplit, TuneOptions,
    WeightVector,
};
use puzzleforge_core::evolve::{run_worker, EvoRun};
use puzzleforge_core::novelty::{EntropyModel, NeighborIndex, ReplayBuffer, ScoredPosition};
use puzzleforge_core::scoring::CandidateScorer;
use puzzleforge_core::themes::Theme;

use crate::config::{EngineSpec, PipelineConfig};
use crate::formats::{
    load_entropy_model, load_fen_corpus, load_golden, load_weights, save_entropy_model,
    save_weights,
};
use crate::pipeline::{
    candidates_from_corpus, candidates_random, make_engine, mine, Candidate, MineStats,
};
use crate::records::{
    feature_map, feature_vector, read_jsonl, write_jsonl, FeatureRecord, MinedRecord,
    PuzzleRecord, SCHEMA_VERSION,
};

fn out_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn require_engine(spec: &Option<EngineSpec>) -> Result<&EngineSpec> {
    spec.as_ref()
        .context("this command needs --engine <path>|scripted:<file> (or engine= in the config)")
}

// ---------------------------------------------------------------- ingest

pub fn ingest(csv_path: &Path, out: Option<&Path>) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(csv_path)
        .with_context(|| format!("opening {}", csv_path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, fen_col, moves_col) = match (col("PuzzleId"), col("FEN"), col("Moves")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => bail!("CSV must have PuzzleId, FEN and Moves columns"),
    };
    let rating_col = col("Rating");
    let popularity_col = col("Popularity");
    let themes_col = col("Themes");
    let url_col = col("GameUrl");

    let mut records: Vec<PuzzleRecord> = Vec::new();
    let mut rows_in = 0usize;
    let mut skipped = 0usize;
    for row in reader.records() {
        let row = row?;
        rows_in += 1;
        let id = row.get(id_col).unwrap_or("").to_string();
        let raw_fen = row.get(fen_col).unwrap_or("").to_string();
        let moves: Vec<&str> = row
            .get(moves_col)
            .unwrap_or("")
            .split_whitespace()
            .collect();

        // The dataset stores the position before the opponent's move;
        // applying the first listed move yields the puzzle the solver sees.
        let outcome = (|| -> Result<PuzzleRecord> {
            let position = Position::from_fen(&raw_fen).map_err(|e| anyhow::anyhow!("{e}"))?;
            let first = moves.first().context("empty move list")?;
            let first = Move::from_uci(first).context("unparseable first move")?;
            let puzzle = position
                .apply_move(first)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let solution: Vec<String> = moves[1..].iter().map(|m| m.to_string()).collect();
            if solution.is_empty() {
                bail!("no solution moves remain after the setup move");
            }
            Ok(PuzzleRecord {
                schema: SCHEMA_VERSION,
                id: id.clone(),
                raw_fen: raw_fen.clone(),
                puzzle_fen: puzzle.to_fen(),
                solution,
                rating: rating_col.and_then(|c| row.get(c)).and_then(|v| v.parse().ok()),
                popularity: popularity_col
                    .and_then(|c| row.get(c))
                    .and_then(|v| v.parse().ok()),
                themes: themes_col
                    .and_then(|c| row.get(c))
                    .map(|v| v.split_whitespace().map(String::from).collect())
                    .unwrap_or_default(),
                source_url: url_col.and_then(|c| row.get(c)).map(String::from),
            })
        })();
        match outcome {
            Ok(record) => records.push(record),
            Err(e) => {
                skipped += 1;
                eprintln!("skipping row {id}: {e:#}");
            }
        }
    }

    let mut out = out_writer(out)?;
    write_jsonl(&mut *out, &records)?;
    out.flush()?;
    eprintln!(
        "ingested {} rows: {} records, {} skipped",
        rows_in,
        records.len(),
        skipped
    );
    assert_eq!(rows_in, records.len() + skipped);
    Ok(())
}

// ------------------------------------------------------------------ mine

pub struct MineArgs<'a> {
    pub source: &'a str,
    pub corpus: Option<&'a Path>,
    pub limit: Option<usize>,
    pub random_pieces: usize,
    pub entropy_corpus: Option<&'a Path>,
    pub entropy_model: Option<&'a Path>,
    pub buffer_in: Option<&'a Path>,
    pub buffer_out: Option<&'a Path>,
    pub seeds: Option<&'a Path>,
}

fn load_weights_or_default(cfg: &PipelineConfig) -> Result<WeightVector> {
    match &cfg.weights_file {
        Some(path) => load_weights(path),
        None => Ok(WeightVector::paper_config()),
    }
}

/// JSONL puzzle-record corpora contribute their puzzle FENs; anything
/// else is treated as FEN-per-line.
fn corpus_candidates(path: &Path, limit: Option<usize>) -> Result<Vec<Candidate>> {
    if path.extension().map(|e| e == "jsonl").unwrap_or(false) {
        let records: Vec<PuzzleRecord> = read_jsonl(path)?;
        let mut out: Vec<Candidate> = records
            .into_iter()
            .map(|r| Candidate {
                id: r.id,
                fen: r.puzzle_fen,
            })
            .collect();
        if let Some(limit) = limit {
            out.truncate(limit);
        }
        Ok(out)
    } else {
        candidates_from_corpus(path, limit)
    }
}

fn entropy_training_corpus(
    args: &MineArgs,
    candidates: &[Candidate],
) -> Result<Vec<puzzleforge_core::chess::TokenSeq77>> {
    let positions: Vec<Position> = match args.entropy_corpus {
        Some(path) => {
            let (positions, failed) = load_fen_corpus(path)?;
            if !failed.is_empty() {
                eprintln!("entropy corpus: {} unparseable lines skipped", failed.len());
            }
            positions
        }
        None => candidates
            .iter()
            .filter_map(|c| Position::from_fen(&c.fen).ok())
            .collect(),
    };
    if positions.is_empty() {
        bail!("entropy model needs at least one legal training position");
    }
    Ok(positions.iter().map(|p| p.encode77()).collect())
}

fn resolve_entropy_model(
    cfg: &PipelineConfig,
    args: &MineArgs,
    candidates: &[Candidate],
) -> Result<EntropyModel> {
    if let Some(path) = args.entropy_model {
        if path.exists() {
            return load_entropy_model(path);
        }
        let corpus = entropy_training_corpus(args, candidates)?;
        let model = EntropyModel::train(&corpus, cfg.entropy_order);
        save_entropy_model(path, &model)?;
        eprintln!(
            "trained entropy model on {} sequences (threshold {:.4}), saved to {}",
            corpus.len(),
            model.threshold(),
            path.display()
        );
        return Ok(model);
    }
    let corpus = entropy_training_corpus(args, candidates)?;
    Ok(EntropyModel::train(&corpus, cfg.entropy_order))
}

fn report_mine_stats(stats: &MineStats) {
    let pct = |n: usize| 100.0 * n as f64 / stats.total.max(1) as f64;
    eprintln!(
        "mined {} candidates: legal {} ({:.2}%), unique {} ({:.2}%), qualified {} ({:.2}%), novel {} ({:.2}%), engine errors {}",
        stats.total,
        stats.legal,
        pct(stats.legal),
        stats.unique,
        pct(stats.unique),
        stats.qualified,
        pct(stats.qualified),
        stats.novel,
        pct(stats.novel),
        stats.errors,
    );
}

pub fn mine_cmd(cfg: &PipelineConfig, args: &MineArgs, out: Option<&Path>) -> Result<()> {
    let spec = require_engine(&cfg.engine)?;
    let weights = load_weights_or_default(cfg)?;

    let candidates = match args.source {
        "corpus" => {
            let path = args.corpus.context("--source corpus needs --corpus <file>")?;
            corpus_candidates(path, args.limit)?
        }
        "random" => candidates_random(cfg.seed, args.limit.unwrap_or(100), args.random_pieces),
        "evolve" => evolve_candidates(cfg, args, weights)?,
        other => bail!("unknown source {other}; expected corpus, random or evolve"),
    };
    if candidates.is_empty() {
        let mut out = out_writer(out)?;
        out.flush()?;
        eprintln!("no candidates; wrote empty output");
        return Ok(());
    }

    let entropy_model = resolve_entropy_model(cfg, args, &candidates)?;
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity, cfg.seed);
    if let Some(path) = args.buffer_in {
        let records: Vec<MinedRecord> = read_jsonl(path)?;
        let mut restored = 0usize;
        for record in &records {
            if record.outcome_reward == Some(1) {
                buffer
                    .restore([record.to_scored()?])
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                restored += 1;
            }
        }
        eprintln!("restored {restored} buffer entries from {}", path.display());
    }

    let (records, stats) = mine(
        cfg,
        spec,
        weights,
        args.source,
        &candidates,
        &entropy_model,
        &mut buffer,
    )?;
    for record in &records {
        record.validate()?;
    }

    let mut writer = out_writer(out)?;
    write_jsonl(&mut *writer, &records)?;
    writer.flush()?;
    report_mine_stats(&stats);

    if let Some(path) = args.buffer_out {
        let entries: Vec<MinedRecord> = buffer
            .entries()
            .iter()
            .enumerate()
            .map(|(i, e)| MinedRecord::from_scored(format!("buffer-{}", i + 1), e))
            .collect();
        let mut writer = out_writer(Some(path))?;
        write_jsonl(&mut *writer, &entries)?;
        writer.flush()?;
        eprintln!("saved {} buffer entries to {}", entries.len(), path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------- evolve

fn evolution_runs(
    cfg: &PipelineConfig,
    seeds_path: &Path,
    resume: Option<&Path>,
    weights: WeightVector,
) -> Result<Vec<EvoRun>> {
    let spec = require_engine(&cfg.engine)?;
    let (mut seed_corpus, failed) = load_fen_corpus(seeds_path)?;
    if !failed.is_empty() {
        eprintln!("seed corpus: {} unparseable lines skipped", failed.len());
    }
    if let Some(path) = resume {
        let records: Vec<MinedRecord> = read_jsonl(path)?;
        for record in records {
            if let Ok(p) = Position::from_fen(&record.fen) {
                seed_corpus.push(p);
            }
        }
        eprintln!("resume: previous elites joined the seed corpus");
    }
    if seed_corpus.is_empty() {
        bail!("seed corpus is empty");
    }

    // Evolution searches at a cheap budget; elites get re-scored at full
    // budget by `mine --source evolve` or a later scoring pass.
    let mut evo_pipeline = cfg.clone();
    evo_pipeline.depth = cfg.depth.min(12);
    evo_pipeline.trace_depths = cfg
        .trace_depths
        .iter()
        .copied()
        .filter(|&d| d <= evo_pipeline.depth as u64)
        .collect();
    if evo_pipeline.trace_depths.is_empty() {
        evo_pipeline.trace_depths = vec![1, evo_pipeline.depth as u64];
    }
    let scoring = evo_pipeline.scoring_config(weights);

    let workers = cfg.workers.max(1);
    let runs: Vec<Result<EvoRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let scoring = scoring.clone();
                let evo_cfg = cfg.evo_config(cfg.seed.wrapping_add(w as u64));
                let seed_corpus = &seed_corpus;
                let evo_pipeline = &evo_pipeline;
                scope.spawn(move || -> Result<EvoRun> {
                    let engine = make_engine(spec, evo_pipeline)?;
                    let mut scorer = CandidateScorer::new(engine, scoring);
                    run_worker(&evo_cfg, seed_corpus, &mut scorer)
                        .map_err(|e| anyhow::anyhow!("{e}"))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evolution worker panicked"))
            .collect()
    });
    runs.into_iter().collect()
}

pub fn evolve_cmd(
    cfg: &PipelineConfig,
    seeds: &Path,
    resume: Option<&Path>,
    manifest: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let weights = load_weights_or_default(cfg)?;
    let runs = evolution_runs(cfg, seeds, resume, weights)?;

    let mut entries: Vec<(f64, ScoredPosition)> = Vec::new();
    let mut incomplete = 0usize;
    for run in &runs {
        if !run.completed {
            incomplete += 1;
        }
        for entry in &run.entries {
            entries.push((entry.fitness, entry.scored.clone()));
        }
    }
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let records: Vec<MinedRecord> = entries
        .iter()
        .enumerate()
        .map(|(i, (_, scored))| MinedRecord::from_scored(format!("evolve-{}", i + 1), scored))
        .collect();
    let mut writer = out_writer(out)?;
    write_jsonl(&mut *writer, &records)?;
    writer.flush()?;

    if let Some(path) = manifest {
        let manifest_json = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "seed": cfg.seed,
            "workers": cfg.workers,
            "iterations": cfg.evo_iterations,
            "buffer_size": cfg.evo_buffer,
            "parents_per_iter": cfg.evo_parents,
            "mutations_per_parent": cfg.evo_mutations,
            "edit_budget": cfg.evo_edits,
            "random_move_budget": cfg.evo_moves,
            "t_start": cfg.evo_t_start,
            "t_end": cfg.evo_t_end,
            "seeds_file": seeds.display().to_string(),
            "incomplete_runs": incomplete,
        });
        std::fs::write(path, serde_json::to_string_pretty(&manifest_json)?)?;
    }
    eprintln!(
        "evolution produced {} elite entries from {} workers{}",
        records.len(),
        runs.len(),
        if incomplete > 0 {
            format!(" ({incomplete} aborted early; partial results flagged)")
        } else {
            String::new()
        }
    );
    Ok(())
}

fn evolve_candidates(
    cfg: &PipelineConfig,
    args: &MineArgs,
    weights: WeightVector,
) -> Result<Vec<Candidate>> {
    let seeds = args.seeds.context("--source evolve needs --seeds <fens>")?;
    let runs = evolution_runs(cfg, seeds, None, weights)?;
    let mut out = Vec::new();
    for (w, run) in runs.iter().enumerate() {
        for (i, entry) in run.entries.iter().enumerate() {
            out.push(Candidate {
                id: format!("evolve-w{}-{}", w + 1, i + 1),
                fen: entry.scored.position.to_fen(),
            });
        }
    }
    if let Some(limit) = args.limit {
        out.truncate(limit);
    }
    Ok(out)
}

// ------------------------------------------------------------------ tune

pub fn tune_cmd(
    cfg: &PipelineConfig,
    golden_path: &Path,
    features_path: &Path,
    trials: usize,
    out: Option<&Path>,
) -> Result<()> {
    if trials == 0 {
        bail!("tune needs at least one trial");
    }
    let golden = load_golden(golden_path)?;
    for (row, fen, problem) in &golden.flagged {
        eprintln!("golden row {row} flagged ({problem}): {fen}");
    }

    let mut cache: BTreeMap<String, FeatureVector> = BTreeMap::new();
    if features_path.exists() {
        for record in read_jsonl::<FeatureRecord>(features_path)? {
            cache.insert(record.fen.clone(), feature_vector(&record.features)?);
        }
    }

    let missing: Vec<String> = golden
        .items
        .iter()
        .filter(|item| !cache.contains_key(&item.fen))
        .map(|item| item.fen.clone())
        .collect();
    if !missing.is_empty() {
        let spec = require_engine(&cfg.engine)?;
        eprintln!(
            "computing features for {} golden positions missing from the cache",
            missing.len()
        );
        let scoring = cfg.scoring_config(WeightVector::paper_config());
        let mut scorer = CandidateScorer::new(make_engine(spec, cfg)?, scoring);
        for fen in &missing {
            let position = Position::from_fen(fen).map_err(|e| anyhow::anyhow!("{e}"))?;
            let verdict = scorer
                .score_position(&position)
                .map_err(|e| anyhow::anyhow!("scoring {fen}: {e}"))?;
            cache.insert(fen.clone(), verdict.features);
        }
        let records: Vec<FeatureRecord> = cache
            .iter()
            .map(|(fen, features)| FeatureRecord {
                fen: fen.clone(),
                features: feature_map(features),
            })
            .collect();
        let mut writer = out_writer(Some(features_path))?;
        write_jsonl(&mut *writer, &records)?;
        writer.flush()?;
    }

    let matrix_of = |split: Option<GoldenSplit>| -> (Vec<FeatureVector>, Vec<bool>) {
        golden
            .items
            .iter()
            .filter(|item| split.map(|s| item.split == s).unwrap_or(true))
            .map(|item| (cache[&item.fen], item.positive))
            .unzip()
    };
    let (train_matrix, train_labels) = matrix_of(Some(GoldenSplit::Train));
    if train_labels.iter().all(|&l| l) || train_labels.iter().all(|&l| !l) {
        bail!("TRAIN split needs both positive and negative examples");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let opts = TuneOptions {
        trials,
        shuffles: 100,
        active: None,
    };
    let result =
        tune_weights(&train_matrix, &train_labels, &opts, &mut rng).map_err(|e| anyhow::anyhow!("{e}"))?;

    // AP report over the three golden-set views.
    let mut report = String::from("split       AP\n");
    for (name, split) in [
        ("TRAIN", Some(GoldenSplit::Train)),
        ("TRAIN+TEST", None),
        ("TEST", Some(GoldenSplit::Test)),
    ] {
        let (matrix, labels) = matrix_of(split);
        let scores: Vec<f64> = matrix
            .iter()
            .map(|f| puzzleforge_core::counterintuit::score(f, &result.weights))
            .collect();
        let mut ap_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        let ap = tie_averaged_ap(&scores, &labels, 100, &mut ap_rng)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        report.push_str(&format!("{name:<11} {ap:.4}\n"));
    }
    print!("{report}");

    if let Some(path) = out {
        save_weights(path, &result.weights)?;
        eprintln!("saved tuned weights to {}", path.display());
    }
    Ok(())
}

// ----------------------------------------------------------------- score

pub fn score_cmd(
    cfg: &PipelineConfig,
    fen: &str,
    entropy_model: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let spec = require_engine(&cfg.engine)?;
    let weights = load_weights_or_default(cfg)?;
    let position = Position::from_fen(fen).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut scorer = CandidateScorer::new(make_engine(spec, cfg)?, cfg.scoring_config(weights));
    let fingerprint = scorer.fingerprint();
    let verdict = scorer
        .score_position(&position)
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    let entropy = match entropy_model {
        Some(path) => {
            let model = load_entropy_model(path)?;
            Some(puzzleforge_core::novelty::sequence_entropy(
                &model,
                &position.encode77(),
            ))
        }
        None => None,
    };
    let mut record = MinedRecord::from_verdict(
        "score".to_string(),
        "score",
        &verdict,
        entropy.unwrap_or(0.0),
        None,
        puzzleforge_core::novelty::diversity_reward(verdict.outcome, false),
        &fingerprint,
    );
    record.entropy = entropy;

    let mut writer = out_writer(out)?;
    serde_json::to_writer_pretty(&mut *writer, &record)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- themes

pub fn themes_cmd(input: &Path, out: Option<&Path>) -> Result<()> {
    let records: Vec<MinedRecord> = read_jsonl(input)?;
    let total = records.len().max(1);
    let mut counts: BTreeMap<&'static str, usize> =
        Theme::ALL.iter().map(|t| (t.name(), 0)).collect();
    for record in &records {
        let mut seen: Vec<&str> = Vec::new();
        for theme in &record.themes {
            if !seen.contains(&theme.theme.as_str()) {
                seen.push(&theme.theme);
                if let Some(slot) = counts.get_mut(theme.theme.as_str()) {
                    *slot += 1;
                }
            }
        }
    }

    let mut writer = out_writer(out)?;
    writeln!(writer, "theme,count,share")?;
    for theme in Theme::ALL {
        let count = counts[theme.name()];
        writeln!(
            writer,
            "{},{},{:.4}",
            theme.name(),
            count,
            count as f64 / total as f64
        )?;
    }
    writer.flush()?;
    Ok(())
}

// ----------------------------------------------------------------- stats

pub fn stats_cmd(input: &Path, out: Option<&Path>) -> Result<()> {
    let records: Vec<MinedRecord> = read_jsonl(input)?;
    if records.is_empty() {
        bail!("stats needs a nonempty input file");
    }
    let total = records.len();
    let legal = records.iter().filter(|r| r.legal).count();
    let unique = records
        .iter()
        .filter(|r| r.is_unique == Some(true))
        .count();
    let counter = records.iter().filter(|r| r.i_cnt == Some(true)).count();
    let puzzle = records
        .iter()
        .filter(|r| r.is_unique == Some(true) && r.i_cnt == Some(true))
        .count();

    let board_dists: Vec<f64> = records
        .iter()
        .filter_map(|r| r.min_board_dist.map(|d| d as f64))
        .collect();
    let pv_dists: Vec<f64> = records.iter().filter_map(|r| r.min_pv_dist).collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;

    let pct = |n: usize| 100.0 * n as f64 / total as f64;
    let mut writer = out_writer(out)?;
    writeln!(writer, "records            {total}")?;
    writeln!(writer, "legal              {legal} ({:.2}%)", pct(legal))?;
    writeln!(writer, "unique             {unique} ({:.2}%)", pct(unique))?;
    writeln!(writer, "counter-intuitive  {counter} ({:.2}%)", pct(counter))?;
    writeln!(writer, "puzzle             {puzzle} ({:.2}%)", pct(puzzle))?;
    if board_dists.is_empty() {
        writeln!(writer, "mean min board distance  n/a")?;
        writeln!(writer, "mean min pv distance     n/a")?;
    } else {
        writeln!(
            writer,
            "mean min board distance  {:.3}",
            mean(&board_dists)
        )?;
        writeln!(writer, "mean min pv distance     {:.3}", mean(&pv_dists))?;
    }
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- report

pub fn report_cmd(
    input: &Path,
    corpus: Option<&Path>,
    ingested: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let records: Vec<MinedRecord> = read_jsonl(input)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let index = match corpus {
        Some(path) => {
            let (positions, failed) = load_fen_corpus(path)?;
            if !failed.is_empty() {
                eprintln!("corpus: {} unparseable lines skipped", failed.len());
            }
            if positions.is_empty() {
                eprintln!("warning: corpus empty; neighbors section omitted");
                None
            } else {
                Some(NeighborIndex::build(positions))
            }
        }
        None => {
            eprintln!("warning: no corpus index; neighbors section omitted");
            None
        }
    };

    let selected: Vec<&MinedRecord> = records
        .iter()
        .filter(|r| r.outcome_reward == Some(1))
        .collect();

    let mut booklet = String::from("# Selected puzzles\n");
    booklet.push_str(&format!(
        "\n{} of {} mined candidates qualified.\n",
        selected.len(),
        records.len()
    ));
    for record in &selected {
        let side = Position::from_fen(&record.fen)
            .map(|p| match p.side_to_move() {
                puzzleforge_core::chess::Color::White => "white",
                puzzleforge_core::chess::Color::Black => "black",
            })
            .unwrap_or("?");
        booklet.push_str(&format!("\n## Puzzle {}\n\n", record.id));
        booklet.push_str(&format!("- FEN: `{}`\n", record.fen));
        booklet.push_str(&format!("- side to move: {side}\n"));
        booklet.push_str(&format!("- solution: `{}`\n", record.solution_pv.join(" ")));
        booklet.push_str(&format!(
            "- r_uni: {:.4}, r_cnt: {:.4}\n",
            record.r_uni.unwrap_or(0.0),
            record.r_cnt.unwrap_or(0.0)
        ));
        if !record.themes.is_empty() {
            let names: Vec<&str> = record.themes.iter().map(|t| t.theme.as_str()).collect();
            booklet.push_str(&format!("- themes: {}\n", names.join(", ")));
        }
        if let (Some(index), Ok(position)) = (&index, Position::from_fen(&record.fen)) {
            let hits = index
                .nearest(&position, 3)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            booklet.push_str("- closest training positions:\n");
            for (rank, (idx, dist)) in hits.iter().enumerate() {
                booklet.push_str(&format!(
                    "  {}. distance {} — `{}`\n",
                    rank + 1,
                    dist,
                    index.position(*idx).to_fen()
                ));
            }
        }
    }
    std::fs::write(out_dir.join("booklet.md"), booklet)?;

    themes_cmd(input, Some(&out_dir.join("themes.csv")))?;

    if let Some(path) = ingested {
        let puzzle_records: Vec<PuzzleRecord> = read_jsonl(path)?;
        let by_fen: BTreeMap<&str, &PuzzleRecord> = puzzle_records
            .iter()
            .map(|r| (r.puzzle_fen.as_str(), r))
            .collect();
        let mut r_cnt = Vec::new();
        let mut ratings = Vec::new();
        let mut popularity = Vec::new();
        for record in &records {
            if let (Some(cnt), Some(puzzle)) = (record.r_cnt, by_fen.get(record.fen.as_str())) {
                if let (Some(rating), Some(pop)) = (puzzle.rating, puzzle.popularity) {
                    r_cnt.push(cnt);
                    ratings.push(rating as f64);
                    popularity.push(pop as f64);
                }
            }
        }
        if r_cnt.len() >= 3 {
            let mut csv = String::from("target,pearson,spearman\n");
            for (name, ys) in [("rating", &ratings), ("popularity", &popularity)] {
                match correlate(&r_cnt, ys) {
                    Ok((pearson, spearman)) => {
                        csv.push_str(&format!("{name},{pearson:.6},{spearman:.6}\n"));
                    }
                    Err(e) => eprintln!("warning: {name} correlation skipped: {e}"),
                }
            }
            std::fs::write(out_dir.join("correlations.csv"), csv)?;
        } else {
            eprintln!(
                "warning: only {} joinable records; correlations.csv omitted",
                r_cnt.len()
            );
        }
    }

    eprintln!(
        "report written to {} ({} selected puzzles)",
        out_dir.display(),
        selected.len()
    );
    Ok(())
}

// ------------------------------------------------------------- neighbors

pub fn neighbors_cmd(fen: &str, corpus: &Path, k: usize, out: Option<&Path>) -> Result<()> {
    let position = Position::from_fen(fen).map_err(|e| anyhow::anyhow!("{e}"))?;
    let (positions, failed) = load_fen_corpus(corpus)?;
    if !failed.is_empty() {
        eprintln!("corpus: {} unparseable lines skipped", failed.len());
    }
    let index = NeighborIndex::build(positions);
    let hits = index.nearest(&position, k).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut writer = out_writer(out)?;
    for (idx, dist) in hits {
        writeln!(writer, "{dist}\t{}", index.position(idx).to_fen())?;
    }
    writer.flush()?;
    Ok(())
}
