//! Batch mining orchestration: candidate sources, parallel scoring over
//! an engine-session pool, and the serial diversity-gating stage that
//! keeps output byte-deterministic for a given (config, seed, engine).

use std::path::Path;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use puzzleforge_core::chess::{random_legal_position, Position};
use puzzleforge_core::counterintuit::WeightVector;
use puzzleforge_core::engine::{Engine, ScriptedEngine};
use puzzleforge_core::novelty::{
    diversity_gate, diversity_reward, sequence_entropy, EntropyModel, ReplayBuffer,
    ScoredPosition,
};
use puzzleforge_core::scoring::{CandidateScorer, ScoringConfig};

use crate::config::{EngineSpec, PipelineConfig};
use crate::records::MinedRecord;
use crate::uci::{UciEngine, DEFAULT_HANDSHAKE_TIMEOUT};

pub struct Candidate {
    pub id: String,
    pub fen: String,
}

pub enum ScoreOutcome {
    ParseError(String),
    /// Legal board with no moves to analyze.
    Terminal,
    EngineError(String),
    Verdict(Box<puzzleforge_core::scoring::CandidateVerdict>),
}

/// Builds one engine session from the configured spec.
pub fn make_engine(spec: &EngineSpec, cfg: &PipelineConfig) -> Result<Box<dyn Engine + Send>> {
    match spec {
        EngineSpec::Scripted(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading engine script {}", path.display()))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "script".to_string());
            Ok(Box::new(
                ScriptedEngine::parse(&name, &text).map_err(|e| anyhow::anyhow!("{e}"))?,
            ))
        }
        EngineSpec::Uci(path) => Ok(Box::new(
            UciEngine::spawn(path, cfg.threads, cfg.hash_mb, DEFAULT_HANDSHAKE_TIMEOUT)
                .map_err(|e| anyhow::anyhow!("{e}"))?,
        )),
    }
}

/// Candidate stream from a FEN-per-line file. Unparseable lines stay in
/// the stream so they surface as -2 records instead of disappearing.
pub fn candidates_from_corpus(path: &Path, limit: Option<usize>) -> Result<Vec<Candidate>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(Candidate {
            id: format!("corpus-{}", lineno + 1),
            fen: line.to_string(),
        });
        if limit.map(|l| out.len() >= l).unwrap_or(false) {
            break;
        }
    }
    Ok(out)
}

/// Seeded uniform random-legal candidates (two kings plus a few pieces).
pub fn candidates_random(seed: u64, count: usize, extra_pieces: usize) -> Vec<Candidate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| Candidate {
            id: format!("random-{}", i + 1),
            fen: random_legal_position(&mut rng, extra_pieces).to_fen(),
        })
        .collect()
}

fn score_candidate(
    scorer: &mut CandidateScorer<Box<dyn Engine + Send>>,
    candidate: &Candidate,
) -> ScoreOutcome {
    match Position::from_fen(&candidate.fen) {
        Err(e) => ScoreOutcome::ParseError(format!("{e}")),
        Ok(p) => {
            if p.legal_moves().is_empty() {
                return ScoreOutcome::Terminal;
            }
            match scorer.score_position(&p) {
                Ok(verdict) => ScoreOutcome::Verdict(Box::new(verdict)),
                Err(e) => ScoreOutcome::EngineError(format!("{e}")),
            }
        }
    }
}

/// Phase one: engine-heavy scoring, fanned out over `cfg.workers`
/// sessions. Results come back in submission order regardless of the
/// pool width.
pub fn score_all(
    cfg: &PipelineConfig,
    scoring: &ScoringConfig,
    spec: &EngineSpec,
    candidates: &[Candidate],
) -> Result<(Vec<ScoreOutcome>, String)> {
    let workers = cfg.workers.max(1).min(candidates.len().max(1));
    if workers <= 1 {
        let mut scorer = CandidateScorer::new(make_engine(spec, cfg)?, scoring.clone());
        let fingerprint = scorer.fingerprint();
        let outcomes = candidates
            .iter()
            .map(|c| score_candidate(&mut scorer, c))
            .collect();
        return Ok((outcomes, fingerprint));
    }

    let mut scorers: Vec<CandidateScorer<Box<dyn Engine + Send>>> = (0..workers)
        .map(|_| Ok(CandidateScorer::new(make_engine(spec, cfg)?, scoring.clone())))
        .collect::<Result<_>>()?;
    let fingerprint = scorers[0].fingerprint();

    // Round-robin assignment; submission order is restored afterwards, so
    // the pool width never changes the output.
    let batches: Vec<Vec<(usize, ScoreOutcome)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scorers
            .iter_mut()
            .enumerate()
            .map(|(w, scorer)| {
                scope.spawn(move || {
                    let mut local = Vec::new();
                    let mut i = w;
                    while i < candidates.len() {
                        local.push((i, score_candidate(scorer, &candidates[i])));
                        i += workers;
                    }
                    local
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scoring worker panicked"))
            .collect()
    });

    let mut slots: Vec<Option<ScoreOutcome>> = Vec::new();
    slots.resize_with(candidates.len(), || None);
    for batch in batches {
        for (i, outcome) in batch {
            slots[i] = Some(outcome);
        }
    }
    let outcomes = slots
        .into_iter()
        .map(|s| s.expect("every slot scored"))
        .collect();
    Ok((outcomes, fingerprint))
}

pub struct MineStats {
    pub total: usize,
    pub legal: usize,
    pub unique: usize,
    pub qualified: usize,
    pub novel: usize,
    pub errors: usize,
}

/// Phase two: entropy, the diversity gate against batch peers plus a
/// buffer subsample, reward finalization and buffer pushes — strictly in
/// submission order.
pub fn gate_and_record(
    cfg: &PipelineConfig,
    source: &str,
    candidates: &[Candidate],
    outcomes: Vec<ScoreOutcome>,
    entropy_model: &EntropyModel,
    buffer: &mut ReplayBuffer,
    fingerprint: &str,
) -> (Vec<MinedRecord>, MineStats) {
    let tau_ent = cfg.tau_ent.unwrap_or_else(|| entropy_model.threshold());
    let dist_cfg = cfg.distance_config();
    let mut qualified_peers: Vec<ScoredPosition> = Vec::new();
    let mut records = Vec::with_capacity(candidates.len());
    let mut stats = MineStats {
        total: candidates.len(),
        legal: 0,
        unique: 0,
        qualified: 0,
        novel: 0,
        errors: 0,
    };

    for (candidate, outcome) in candidates.iter().zip(outcomes) {
        let record = match outcome {
            ScoreOutcome::ParseError(e) => {
                MinedRecord::illegal(candidate.id.clone(), candidate.fen.clone(), source, e)
            }
            ScoreOutcome::Terminal => {
                stats.legal += 1;
                let mut r = MinedRecord::engine_failure(
                    candidate.id.clone(),
                    candidate.fen.clone(),
                    source,
                    "no legal moves to analyze".to_string(),
                );
                r.outcome_reward = Some(0);
                r.diversity_reward = Some(0);
                r
            }
            ScoreOutcome::EngineError(e) => {
                stats.legal += 1;
                stats.errors += 1;
                MinedRecord::engine_failure(candidate.id.clone(), candidate.fen.clone(), source, e)
            }
            ScoreOutcome::Verdict(verdict) => {
                stats.legal += 1;
                if verdict.uniqueness.is_unique {
                    stats.unique += 1;
                }
                let entropy = sequence_entropy(entropy_model, &verdict.position.encode77());
                let mut scored = verdict.to_scored(source, fingerprint);
                scored.entropy = entropy;

                let (gate, div) = if verdict.outcome == 1 {
                    stats.qualified += 1;
                    let peers: Vec<&ScoredPosition> = qualified_peers.iter().collect();
                    let sample = buffer.subsample(cfg.replay_subsample);
                    let gate = diversity_gate(&scored, &peers, &sample, &dist_cfg, tau_ent);
                    let div = diversity_reward(verdict.outcome, gate.pass);
                    (Some(gate), div)
                } else {
                    (None, diversity_reward(verdict.outcome, false))
                };
                if let Some(g) = &gate {
                    scored.min_board_dist = g.min_board_dist;
                    scored.min_pv_dist = g.min_pv_dist;
                }

                let record = MinedRecord::from_verdict(
                    candidate.id.clone(),
                    source,
                    &verdict,
                    entropy,
                    gate.as_ref(),
                    div,
                    fingerprint,
                );
                if verdict.outcome == 1 {
                    qualified_peers.push(scored.clone());
                    if div == 1 {
                        stats.novel += 1;
                        buffer.push(scored).expect("qualified entry");
                    }
                }
                record
            }
        };
        records.push(record);
    }
    (records, stats)
}

/// Full mining pass over a candidate list.
pub fn mine(
    cfg: &PipelineConfig,
    spec: &EngineSpec,
    weights: WeightVector,
    source: &str,
    candidates: &[Candidate],
    entropy_model: &EntropyModel,
    buffer: &mut ReplayBuffer,
) -> Result<(Vec<MinedRecord>, MineStats)> {
    let scoring = cfg.scoring_config(weights);
    let (outcomes, fingerprint) = score_all(cfg, &scoring, spec, candidates)?;
    Ok(gate_and_record(
        cfg,
        source,
        candidates,
        outcomes,
        entropy_model,
        buffer,
        &fingerprint,
    ))
}
