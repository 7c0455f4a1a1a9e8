//! Evolutionary puzzle search: independent workers mutate seeded
//! positions, sample parents softmax-proportionally to fitness under an
//! annealed temperature, and keep a fixed-size elite buffer.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chess::{Color, PieceKind, Position, Square};
use crate::engine::EngineError;
use crate::novelty::ScoredPosition;

/// Blend weights of the fitness components.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FitnessWeights {
    pub uniqueness: f64,
    pub counterintuit: f64,
    pub conformity: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights {
            uniqueness: 0.3,
            counterintuit: 0.6,
            conformity: 0.1,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AnnealKind {
    Geometric,
    Linear,
}

#[derive(Clone, Debug)]
pub struct EvoConfig {
    pub iterations: u32,
    pub buffer_size: usize,
    pub parents_per_iter: usize,
    pub mutations_per_parent: usize,
    /// Piece add/remove operations per mutation.
    pub edit_budget: u32,
    /// Random legal plies played after the edits.
    pub random_move_budget: u32,
    pub t_start: f64,
    pub t_end: f64,
    pub anneal: AnnealKind,
    pub seed: u64,
    pub fitness_weights: FitnessWeights,
}

impl Default for EvoConfig {
    fn default() -> Self {
        EvoConfig {
            iterations: 50,
            buffer_size: 64,
            parents_per_iter: 8,
            mutations_per_parent: 2,
            edit_budget: 2,
            random_move_budget: 2,
            t_start: 1.0,
            t_end: 0.05,
            anneal: AnnealKind::Geometric,
            seed: 0,
            fitness_weights: FitnessWeights::default(),
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        if !(self.t_start >= self.t_end && self.t_end > 0.0) {
            return Err(EvolveError::BadConfig(String::from(
                "temperatures must satisfy t_start >= t_end > 0",
            )));
        }
        if self.buffer_size < self.parents_per_iter.max(1) {
            return Err(EvolveError::BadConfig(String::from(
                "buffer_size must cover parents_per_iter",
            )));
        }
        if self.edit_budget == 0 && self.random_move_budget == 0 {
            return Err(EvolveError::BadConfig(String::from(
                "edit and random-move budgets cannot both be zero",
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvolveError {
    EmptySeedCorpus,
    BadConfig(String),
    /// 100 attempts failed to produce a legal mutation.
    MutationFailed,
}

impl fmt::Display for EvolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvolveError::EmptySeedCorpus => write!(f, "seed corpus is empty"),
            EvolveError::BadConfig(msg) => write!(f, "bad evolution config: {msg}"),
            EvolveError::MutationFailed => {
                write!(f, "mutation retry cap exceeded without a legal position")
            }
        }
    }
}

impl core::error::Error for EvolveError {}

/// One buffered candidate with its composite fitness.
#[derive(Clone, Debug)]
pub struct EvoEntry {
    pub scored: ScoredPosition,
    pub fitness: f64,
    pub generation: u32,
}

/// Scores a candidate position for evolution; engine-backed in production,
/// a pure function in tests.
pub trait FitnessScorer {
    fn score_candidate(&mut self, p: &Position) -> Result<ScoredPosition, EngineError>;
}

/// Composite fitness: clamped uniqueness margin, counter-intuitiveness,
/// and piece-census conformity, linearly blended.
pub fn fitness(scored: &ScoredPosition, weights: &FitnessWeights) -> f64 {
    let census_ok = !scored.position.piece_census().exceeds_initial();
    weights.uniqueness * scored.r_uni.clamp(0.0, 1.0)
        + weights.counterintuit * scored.r_cnt
        + weights.conformity * if census_ok { 1.0 } else { 0.0 }
}

/// Temperature at `iter` of `total`, interpolating from `t_start` down to
/// `t_end`; geometric by default.
pub fn anneal(iter: u32, total: u32, t_start: f64, t_end: f64, kind: AnnealKind) -> f64 {
    if total == 0 {
        return t_end;
    }
    let frac = iter as f64 / total as f64;
    match kind {
        AnnealKind::Geometric => t_start * libm::pow(t_end / t_start, frac),
        AnnealKind::Linear => t_start + (t_end - t_start) * frac,
    }
}

/// Samples `k` parent indices with replacement from softmax(fitness / T).
pub fn select_parents<R: Rng>(
    entries: &[EvoEntry],
    temperature: f64,
    k: usize,
    rng: &mut R,
) -> Vec<usize> {
    debug_assert!(!entries.is_empty() && temperature > 0.0);
    let max_fit = entries
        .iter()
        .map(|e| e.fitness)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = entries
        .iter()
        .map(|e| libm::exp((e.fitness - max_fit) / temperature))
        .collect();
    let dist = WeightedIndex::new(&weights).expect("weights contain a 1.0 entry");
    (0..k).map(|_| dist.sample(rng)).collect()
}

/// Removes one uniformly chosen non-king piece. `None` on a bare-kings
/// board or when the removal leaves an illegal position.
pub fn remove_random_piece<R: Rng>(p: &Position, rng: &mut R) -> Option<Position> {
    let victims: Vec<Square> = p
        .pieces()
        .filter(|(_, piece)| piece.kind != PieceKind::King)
        .map(|(sq, _)| sq)
        .collect();
    if victims.is_empty() {
        return None;
    }
    let sq = victims[rng.gen_range(0..victims.len())];
    edit_board(p, |board| board[sq.index()] = None)
}

/// Adds one random non-king piece on an empty square, keeping pawns off
/// the back ranks and each side at sixteen pieces or fewer.
pub fn add_random_piece<R: Rng>(p: &Position, rng: &mut R) -> Option<Position> {
    let census = p.piece_census();
    let colors: Vec<Color> = [Color::White, Color::Black]
        .into_iter()
        .filter(|&c| census.total(c) < 16)
        .collect();
    if colors.is_empty() {
        return None;
    }
    let kinds = [
        PieceKind::Pawn,
        PieceKind::Knight,
        PieceKind::Bishop,
        PieceKind::Rook,
        PieceKind::Queen,
    ];
    for _ in 0..64 {
        let sq = Square::new(rng.gen_range(0..64));
        if p.piece_at(sq).is_some() {
            continue;
        }
        let color = colors[rng.gen_range(0..colors.len())];
        let kind = kinds[rng.gen_range(0..kinds.len())];
        if kind == PieceKind::Pawn && (sq.rank() == 0 || sq.rank() == 7) {
            continue;
        }
        let edited = edit_board(p, |board| {
            board[sq.index()] = Some(crate::chess::Piece::new(color, kind))
        });
        if edited.is_some() {
            return edited;
        }
    }
    None
}

/// Rebuilds a position after a board edit: en passant cleared, castling
/// rights reconciled with the pieces actually on their home squares.
/// `None` when the edit produced an illegal position.
fn edit_board(
    p: &Position,
    f: impl FnOnce(&mut [Option<crate::chess::Piece>; 64]),
) -> Option<Position> {
    let mut board = [None; 64];
    for (sq, piece) in p.pieces() {
        board[sq.index()] = Some(piece);
    }
    f(&mut board);

    let at = |name: &str| board[Square::from_name(name).unwrap().index()];
    let piece = |color, kind| Some(crate::chess::Piece::new(color, kind));
    let mut rights = crate::chess::CastlingRights::none();
    let c = p.castling();
    let white_home = at("e1") == piece(Color::White, PieceKind::King);
    let black_home = at("e8") == piece(Color::Black, PieceKind::King);
    rights.white_kingside =
        c.white_kingside && white_home && at("h1") == piece(Color::White, PieceKind::Rook);
    rights.white_queenside =
        c.white_queenside && white_home && at("a1") == piece(Color::White, PieceKind::Rook);
    rights.black_kingside =
        c.black_kingside && black_home && at("h8") == piece(Color::Black, PieceKind::Rook);
    rights.black_queenside =
        c.black_queenside && black_home && at("a8") == piece(Color::Black, PieceKind::Rook);

    Position::from_parts(
        board,
        p.side_to_move(),
        rights,
        None,
        p.halfmove_clock(),
        p.fullmove_number(),
    )
    .ok()
}

const MUTATION_RETRIES: usize = 100;

/// Mutates a position: `edit_budget` piece edits then `random_move_budget`
/// random legal plies, retried until the result is a legal position with
/// at least one legal move. Kings are never touched.
pub fn mutate<R: Rng>(p: &Position, rng: &mut R, cfg: &EvoConfig) -> Result<Position, EvolveError> {
    'attempt: for _ in 0..MUTATION_RETRIES {
        let mut cur = p.clone();
        for _ in 0..cfg.edit_budget {
            let edited = if rng.gen_bool(0.5) {
                remove_random_piece(&cur, rng).or_else(|| add_random_piece(&cur, rng))
            } else {
                add_random_piece(&cur, rng).or_else(|| remove_random_piece(&cur, rng))
            };
            match edited {
                Some(next) => cur = next,
                None => continue 'attempt,
            }
        }
        for _ in 0..cfg.random_move_budget {
            let moves = cur.legal_moves();
            if moves.is_empty() {
                break;
            }
            cur = cur.apply_unchecked(moves[rng.gen_range(0..moves.len())]);
        }
        if cur.legal_moves().is_empty() {
            continue 'attempt;
        }
        return Ok(cur);
    }
    Err(EvolveError::MutationFailed)
}

/// Result of one worker run; `completed` is false when the scorer failed
/// mid-run and the entries are partial.
#[derive(Clone, Debug)]
pub struct EvoRun {
    /// Elite buffer sorted by fitness descending.
    pub entries: Vec<EvoEntry>,
    pub iterations_done: u32,
    pub completed: bool,
    /// Best buffer fitness after each iteration.
    pub best_per_iteration: Vec<f64>,
}

/// Runs one independent evolutionary search worker.
pub fn run_worker<S: FitnessScorer + ?Sized>(
    cfg: &EvoConfig,
    seed_corpus: &[Position],
    scorer: &mut S,
) -> Result<EvoRun, EvolveError> {
    cfg.validate()?;
    if seed_corpus.is_empty() {
        return Err(EvolveError::EmptySeedCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seed_pos = seed_corpus[rng.gen_range(0..seed_corpus.len())].clone();

    let mut buffer: Vec<EvoEntry> = Vec::new();
    let push = |buffer: &mut Vec<EvoEntry>, entry: EvoEntry| {
        buffer.push(entry);
        buffer.sort_by(|a, b| {
            b.fitness
                .partial_cmp(&a.fitness)
                .unwrap_or(core::cmp::Ordering::Equal)
        });
    };

    let mut run = EvoRun {
        entries: Vec::new(),
        iterations_done: 0,
        completed: false,
        best_per_iteration: Vec::new(),
    };

    match scorer.score_candidate(&seed_pos) {
        Ok(scored) => {
            let f = fitness(&scored, &cfg.fitness_weights);
            push(
                &mut buffer,
                EvoEntry {
                    scored,
                    fitness: f,
                    generation: 0,
                },
            );
        }
        Err(_) => {
            run.entries = buffer;
            return Ok(run);
        }
    }

    for iter in 0..cfg.iterations {
        let temperature = anneal(iter, cfg.iterations, cfg.t_start, cfg.t_end, cfg.anneal);
        let parents = select_parents(&buffer, temperature, cfg.parents_per_iter, &mut rng);
        let mut children: Vec<Position> = Vec::new();
        for &parent_idx in &parents {
            for _ in 0..cfg.mutations_per_parent {
                let mut parent = &buffer[parent_idx].scored.position;
                // A stuck parent is resampled a few times before the slot
                // is abandoned.
                let mut produced = None;
                for _ in 0..4 {
                    match mutate(parent, &mut rng, cfg) {
                        Ok(child) => {
                            produced = Some(child);
                            break;
                        }
                        Err(EvolveError::MutationFailed) => {
                            let alt = rng.gen_range(0..buffer.len());
                            parent = &buffer[alt].scored.position;
                        }
                        Err(e) => return Err(e),
                    }
                }
                if let Some(child) = produced {
                    children.push(child);
                }
            }
        }
        for child in children {
            match scorer.score_candidate(&child) {
                Ok(scored) => {
                    let f = fitness(&scored, &cfg.fitness_weights);
                    push(
                        &mut buffer,
                        EvoEntry {
                            scored,
                            fitness: f,
                            generation: iter + 1,
                        },
                    );
                }
                Err(_) => {
                    // Engine gone: abort with partial results flagged.
                    buffer.truncate(cfg.buffer_size);
                    run.entries = buffer;
                    run.iterations_done = iter;
                    return Ok(run);
                }
            }
        }
        buffer.truncate(cfg.buffer_size);
        run.best_per_iteration
            .push(buffer.first().map(|e| e.fitness).unwrap_or(0.0));
        run.iterations_done = iter + 1;
    }

    run.completed = true;
    run.entries = buffer;
    Ok(run)
}
