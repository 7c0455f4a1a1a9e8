//! Engine abstraction: analysis results, winrate mapping, evaluation
//! traces across budget schedules, and a deterministic scripted engine.
//!
//! Real UCI subprocess sessions live in the companion crate; everything
//! here is pure so golden tests never depend on an external binary.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::chess::{Move, Position};

/// Logistic slope per centipawn for the winrate mapping.
pub const WINRATE_SLOPE: f64 = 0.00368;

/// Engine score from the mover's perspective.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Score {
    /// Centipawns.
    Cp(i32),
    /// Plies to mate; positive when the mover mates.
    Mate(i32),
}

impl Score {
    /// Converts a UCI `score mate n` (moves) into plies.
    pub fn from_uci_mate(moves: i32) -> Score {
        if moves >= 0 {
            Score::Mate(2 * moves - 1)
        } else {
            Score::Mate(2 * moves)
        }
    }

    pub fn is_mating(self) -> bool {
        matches!(self, Score::Mate(n) if n > 0)
    }

    /// Moves until mate (rounded up from plies), if this is a mate score.
    pub fn mate_moves(self) -> Option<u32> {
        match self {
            Score::Mate(n) if n > 0 => Some((n as u32 + 1) / 2),
            _ => None,
        }
    }
}

/// Maps an engine score to a winning probability for the mover.
///
/// Mate for the mover saturates at 1.0, mate against at 0.0; centipawn
/// scores go through the logistic `1 / (1 + exp(-slope * cp))`.
pub fn cp_to_winrate_with_slope(score: Score, slope: f64) -> f64 {
    match score {
        Score::Mate(n) if n > 0 => 1.0,
        Score::Mate(_) => 0.0,
        Score::Cp(cp) => 1.0 / (1.0 + libm::exp(-slope * cp as f64)),
    }
}

pub fn cp_to_winrate(score: Score) -> f64 {
    cp_to_winrate_with_slope(score, WINRATE_SLOPE)
}

/// Search budget for a single engine query.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Budget {
    Depth(u32),
    Nodes(u64),
    MoveTime(u64),
}

impl Budget {
    pub fn kind(self) -> BudgetKind {
        match self {
            Budget::Depth(_) => BudgetKind::Depth,
            Budget::Nodes(_) => BudgetKind::Nodes,
            Budget::MoveTime(_) => BudgetKind::MoveTime,
        }
    }

    pub fn value(self) -> u64 {
        match self {
            Budget::Depth(d) => d as u64,
            Budget::Nodes(n) => n,
            Budget::MoveTime(ms) => ms,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum BudgetKind {
    Depth,
    Nodes,
    MoveTime,
}

impl BudgetKind {
    pub fn at(self, value: u64) -> Budget {
        match self {
            BudgetKind::Depth => Budget::Depth(value as u32),
            BudgetKind::Nodes => Budget::Nodes(value),
            BudgetKind::MoveTime => Budget::MoveTime(value),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BudgetKind::Depth => "depth",
            BudgetKind::Nodes => "nodes",
            BudgetKind::MoveTime => "movetime",
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind().name(), self.value())
    }
}

/// One ranked line from a multi-variation search.
#[derive(Clone, Debug, PartialEq)]
pub struct MoveEval {
    pub mv: Move,
    pub score: Score,
    pub pv: Vec<Move>,
}

impl MoveEval {
    pub fn winrate(&self) -> f64 {
        cp_to_winrate(self.score)
    }
}

/// Ranked move evaluations for one position at one budget, best first.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisResult {
    pub fen: String,
    pub budget: Budget,
    pub evals: Vec<MoveEval>,
    pub engine: String,
}

impl AnalysisResult {
    pub fn best(&self) -> Option<&MoveEval> {
        self.evals.first()
    }

    pub fn second(&self) -> Option<&MoveEval> {
        self.evals.get(1)
    }
}

/// Per-budget evaluation of a fixed solution move plus the engine's own
/// best move at that budget.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceCheckpoint {
    /// Budget value in schedule units.
    pub t: u64,
    /// Winrate of the solution move at this budget.
    pub value: f64,
    /// The engine's unrestricted best move at this budget.
    pub best_move: Move,
}

/// Evaluations of one solution move across an increasing budget schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalTrace {
    pub solution: Move,
    pub kind: BudgetKind,
    pub checkpoints: Vec<TraceCheckpoint>,
}

impl EvalTrace {
    /// Winrate at the final (largest) budget.
    pub fn final_value(&self) -> f64 {
        self.checkpoints.last().map(|c| c.value).unwrap_or(0.0)
    }

    pub fn first_value(&self) -> f64 {
        self.checkpoints.first().map(|c| c.value).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EngineError {
    /// Scripted engine had no entry for the queried (position, budget).
    ScriptMiss { fen: String, budget: String },
    /// Scripted entry exists but does not list the requested move.
    ScriptMissingMove { fen: String, mv: String },
    /// Position has no legal moves, so there is nothing to analyze.
    NoLegalMoves { fen: String },
    /// Subprocess or protocol failure; the session is unusable.
    SessionLost(String),
    /// Malformed script or configuration input.
    Invalid(String),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::ScriptMiss { fen, budget } => {
                write!(f, "script has no entry for [{fen}] at {budget}")
            }
            EngineError::ScriptMissingMove { fen, mv } => {
                write!(f, "script entry for [{fen}] does not list move {mv}")
            }
            EngineError::NoLegalMoves { fen } => {
                write!(f, "no legal moves in [{fen}]")
            }
            EngineError::SessionLost(msg) => write!(f, "engine session lost: {msg}"),
            EngineError::Invalid(msg) => write!(f, "invalid engine input: {msg}"),
        }
    }
}

impl core::error::Error for EngineError {}

/// A chess engine session: exclusively owned, strictly sequential.
pub trait Engine {
    /// Top-`multipv` move evaluations at the given budget, best first under
    /// the winrate ordering.
    fn analyze(
        &mut self,
        pos: &Position,
        multipv: usize,
        budget: Budget,
    ) -> Result<AnalysisResult, EngineError>;

    /// Evaluation of one specific move at the given budget (a
    /// `searchmoves`-restricted query for subprocess engines).
    fn evaluate_move(
        &mut self,
        pos: &Position,
        mv: Move,
        budget: Budget,
    ) -> Result<MoveEval, EngineError>;

    /// Engine identity for record fingerprints.
    fn identity(&self) -> String;
}

impl<E: Engine + ?Sized> Engine for alloc::boxed::Box<E> {
    fn analyze(
        &mut self,
        pos: &Position,
        multipv: usize,
        budget: Budget,
    ) -> Result<AnalysisResult, EngineError> {
        (**self).analyze(pos, multipv, budget)
    }

    fn evaluate_move(
        &mut self,
        pos: &Position,
        mv: Move,
        budget: Budget,
    ) -> Result<MoveEval, EngineError> {
        (**self).evaluate_move(pos, mv, budget)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

/// Runs the evaluation trace for `solution`: at every schedule checkpoint
/// the solution move is evaluated in isolation while an unrestricted
/// search provides the engine's own best move.
pub fn analyze_trace<E: Engine + ?Sized>(
    engine: &mut E,
    pos: &Position,
    solution: Move,
    kind: BudgetKind,
    schedule: &[u64],
) -> Result<EvalTrace, EngineError> {
    if schedule.windows(2).any(|w| w[0] >= w[1]) || schedule.is_empty() {
        return Err(EngineError::Invalid(String::from(
            "trace schedule must be non-empty and strictly increasing",
        )));
    }
    let mut checkpoints = Vec::with_capacity(schedule.len());
    for &t in schedule {
        let budget = kind.at(t);
        let eval = engine.evaluate_move(pos, solution, budget)?;
        let best = engine
            .analyze(pos, 1, budget)?
            .best()
            .map(|e| e.mv)
            .ok_or_else(|| EngineError::NoLegalMoves { fen: pos.to_fen() })?;
        checkpoints.push(TraceCheckpoint {
            t,
            value: eval.winrate(),
            best_move: best,
        });
    }
    Ok(EvalTrace {
        solution,
        kind,
        checkpoints,
    })
}

/// Sorts evaluations best-first under the winrate ordering, breaking
/// winrate ties by shorter mate first, then higher cp.
fn sort_evals(evals: &mut [(Move, Score)]) {
    evals.sort_by(|a, b| {
        let wa = cp_to_winrate(a.1);
        let wb = cp_to_winrate(b.1);
        wb.partial_cmp(&wa)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| match (a.1, b.1) {
                (Score::Mate(x), Score::Mate(y)) if x > 0 && y > 0 => x.cmp(&y),
                (Score::Mate(x), Score::Mate(y)) => y.cmp(&x),
                (Score::Cp(x), Score::Cp(y)) => y.cmp(&x),
                _ => core::cmp::Ordering::Equal,
            })
    });
}

/// Deterministic engine answering from a pre-written evaluation script.
///
/// The script maps (FEN, budget) to a ranked move list; any query outside
/// the script is an error, so tests fail loudly instead of inventing
/// evaluations.
#[derive(Clone, Debug, Default)]
pub struct ScriptedEngine {
    entries: BTreeMap<(String, String), Vec<(Move, Score)>>,
    name: String,
}

impl ScriptedEngine {
    pub fn new(name: &str) -> ScriptedEngine {
        ScriptedEngine {
            entries: BTreeMap::new(),
            name: String::from(name),
        }
    }

    fn key(fen: &str, budget: Budget) -> (String, String) {
        (String::from(fen), format!("{budget}"))
    }

    /// Registers the ranked evaluations for one (position, budget) query.
    pub fn insert(&mut self, fen: &str, budget: Budget, mut evals: Vec<(Move, Score)>) {
        sort_evals(&mut evals);
        self.entries.insert(Self::key(fen, budget), evals);
    }

    /// Parses the script text format: one entry per line,
    ///
    /// ```text
    /// <FEN> ; depth 12 ; e2e4 cp 30, g1f3 cp 25, b1c3 mate -4
    /// ```
    ///
    /// Budgets are `depth N`, `nodes N` or `movetime N`; scores are `cp N`
    /// or `mate N` with mate distances in moves, as on the UCI wire.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(name: &str, text: &str) -> Result<ScriptedEngine, EngineError> {
        let mut engine = ScriptedEngine::new(name);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| {
                EngineError::Invalid(format!("script line {}: {}", lineno + 1, msg))
            };
            let mut parts = line.splitn(3, ';');
            let fen = parts.next().map(str::trim).unwrap_or("");
            let budget_text = parts.next().map(str::trim).ok_or_else(|| bad("missing budget field"))?;
            let moves_text = parts.next().map(str::trim).ok_or_else(|| bad("missing move list"))?;

            let mut budget_words = budget_text.split_whitespace();
            let kind = match budget_words.next() {
                Some("depth") => BudgetKind::Depth,
                Some("nodes") => BudgetKind::Nodes,
                Some("movetime") => BudgetKind::MoveTime,
                _ => return Err(bad("budget must be depth/nodes/movetime")),
            };
            let value: u64 = budget_words
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("budget value must be an integer"))?;

            let mut evals = Vec::new();
            for item in moves_text.split(',') {
                let mut words = item.split_whitespace();
                let mv = words
                    .next()
                    .and_then(Move::from_uci)
                    .ok_or_else(|| bad("bad move token"))?;
                let score = match (words.next(), words.next()) {
                    (Some("cp"), Some(v)) => {
                        Score::Cp(v.parse().map_err(|_| bad("bad cp value"))?)
                    }
                    (Some("mate"), Some(v)) => {
                        Score::from_uci_mate(v.parse().map_err(|_| bad("bad mate value"))?)
                    }
                    _ => return Err(bad("score must be `cp N` or `mate N`")),
                };
                evals.push((mv, score));
            }
            if evals.is_empty() {
                return Err(bad("entry lists no moves"));
            }
            engine.insert(fen, kind.at(value), evals);
        }
        Ok(engine)
    }

    fn lookup(&self, pos: &Position, budget: Budget) -> Result<&Vec<(Move, Score)>, EngineError> {
        let fen = pos.to_fen();
        self.entries
            .get(&Self::key(&fen, budget))
            .ok_or(EngineError::ScriptMiss {
                fen,
                budget: format!("{budget}"),
            })
    }
}

impl Engine for ScriptedEngine {
    fn analyze(
        &mut self,
        pos: &Position,
        multipv: usize,
        budget: Budget,
    ) -> Result<AnalysisResult, EngineError> {
        if pos.legal_moves().is_empty() {
            return Err(EngineError::NoLegalMoves { fen: pos.to_fen() });
        }
        let ranked = self.lookup(pos, budget)?;
        let evals = ranked
            .iter()
            .take(multipv)
            .map(|&(mv, score)| MoveEval {
                mv,
                score,
                pv: alloc::vec![mv],
            })
            .collect();
        Ok(AnalysisResult {
            fen: pos.to_fen(),
            budget,
            evals,
            engine: self.identity(),
        })
    }

    fn evaluate_move(
        &mut self,
        pos: &Position,
        mv: Move,
        budget: Budget,
    ) -> Result<MoveEval, EngineError> {
        let ranked = self.lookup(pos, budget)?;
        ranked
            .iter()
            .find(|(m, _)| *m == mv)
            .map(|&(mv, score)| MoveEval {
                mv,
                score,
                pv: alloc::vec![mv],
            })
            .ok_or(EngineError::ScriptMissingMove {
                fen: pos.to_fen(),
                mv: mv.uci(),
            })
    }

    fn identity(&self) -> String {
        format!("scripted:{}", self.name)
    }
}
