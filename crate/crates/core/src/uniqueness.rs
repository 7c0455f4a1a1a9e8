//! Single-solution verification by recursive principal-variation analysis.
//!
//! A position qualifies when the winrate margin between the best and the
//! second-best move clears the threshold on the first solver move (mate
//! lines instead require that no alternative mating move ever appears on a
//! solver ply). The solution line is grown by always playing the top move
//! for both sides; the criterion is only ever applied on solver plies.

use alloc::string::String;
use alloc::vec::Vec;

use crate::chess::{Move, Position};
use crate::engine::{AnalysisResult, Budget, Engine, EngineError};

#[derive(Clone, Debug)]
pub struct UniquenessConfig {
    /// Winrate-margin threshold for Eq-style uniqueness.
    pub tau_uni: f64,
    /// Mate-branch horizon in moves.
    pub mate_horizon: u32,
    /// Hard cap on the solution line length in plies.
    pub max_recursion_plies: u32,
    /// Solver-side winrate at which the line counts as decided and stops.
    pub decided_winrate: f64,
    /// Engine budget per analyzed node.
    pub budget: Budget,
    /// Variations requested on solver plies; at least 2.
    pub multipv: usize,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        UniquenessConfig {
            tau_uni: 0.5,
            mate_horizon: 15,
            max_recursion_plies: 30,
            decided_winrate: 0.99,
            budget: Budget::Depth(20),
            multipv: 2,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum UniquenessMode {
    MateBranch,
    WinrateBranch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessVerdict {
    pub is_unique: bool,
    /// First-move margin: best winrate minus second-best winrate.
    pub r_uni: f64,
    /// Moves played while the criterion held, solver plies at even indices;
    /// always ends on a solver move.
    pub solution_pv: Vec<Move>,
    /// Solver ply at which uniqueness broke, when it did.
    pub failure_ply: Option<usize>,
    pub mode: UniquenessMode,
    /// Solver-perspective winrate at each node along the line: entry `i`
    /// is the position before `solution_pv[i]`, the final entry the
    /// terminal position. Length is `solution_pv.len() + 1`.
    pub node_winrates: Vec<f64>,
    /// The ranked root evaluations the margin was computed from.
    pub root_analysis: AnalysisResult,
}

/// Winrate margin of the best move over the second best. A single-entry
/// result counts as margin 1.0: with no alternative, the move is forced.
pub fn margin(result: &AnalysisResult) -> Result<f64, EngineError> {
    let best = result.best().ok_or_else(|| {
        EngineError::Invalid(String::from("margin of an empty analysis result"))
    })?;
    Ok(match result.second() {
        Some(second) => best.winrate() - second.winrate(),
        None => 1.0,
    })
}

/// Runs the recursive uniqueness check from `p` with the solver to move.
pub fn check_uniqueness<E: Engine + ?Sized>(
    p: &Position,
    engine: &mut E,
    cfg: &UniquenessConfig,
) -> Result<UniquenessVerdict, EngineError> {
    if p.legal_moves().is_empty() {
        return Err(EngineError::NoLegalMoves { fen: p.to_fen() });
    }

    let mut cur = p.clone();
    let mut pv: Vec<Move> = Vec::new();
    let mut winrates: Vec<f64> = Vec::new();
    let mut mode = UniquenessMode::WinrateBranch;
    let mut r_uni = 0.0;
    let mut root_analysis: Option<AnalysisResult> = None;
    let mut failure_ply: Option<usize> = None;
    let mut ply: usize = 0;

    loop {
        let solver_turn = ply % 2 == 0;

        if cur.legal_moves().is_empty() {
            // Terminal board: record its value from the solver's side.
            winrates.push(if cur.is_checkmate() {
                if solver_turn {
                    0.0
                } else {
                    1.0
                }
            } else {
                0.5
            });
            break;
        }
        if ply as u32 >= cfg.max_recursion_plies {
            break;
        }

        let multipv = if solver_turn { cfg.multipv.max(2) } else { 1 };
        let analysis = engine.analyze(&cur, multipv, cfg.budget)?;
        let best = analysis
            .best()
            .ok_or_else(|| EngineError::Invalid(String::from("engine returned no lines")))?
            .clone();
        let w_best = best.winrate();
        winrates.push(if solver_turn { w_best } else { 1.0 - w_best });

        if solver_turn {
            if ply == 0 {
                r_uni = margin(&analysis)?;
                mode = match best.score.mate_moves() {
                    Some(moves) if moves <= cfg.mate_horizon => UniquenessMode::MateBranch,
                    _ => UniquenessMode::WinrateBranch,
                };
            }

            match mode {
                UniquenessMode::MateBranch => {
                    let mating = analysis
                        .evals
                        .iter()
                        .filter(|e| e.score.is_mating())
                        .count();
                    if mating >= 2 {
                        // An alternative mating sequence exists.
                        failure_ply = Some(ply);
                        if ply == 0 {
                            root_analysis = Some(analysis);
                        }
                        break;
                    }
                    if !best.score.is_mating() {
                        // The mate claim did not survive this node; end the
                        // line here rather than inventing a criterion.
                        winrates.pop();
                        break;
                    }
                }
                UniquenessMode::WinrateBranch => {
                    let m = margin(&analysis)?;
                    if ply > 0 && w_best >= cfg.decided_winrate {
                        // Decided position: play the winning move and stop.
                        pv.push(best.mv);
                        winrates.push(w_best);
                        if root_analysis.is_none() {
                            root_analysis = Some(analysis);
                        }
                        break;
                    }
                    if m < cfg.tau_uni {
                        if ply == 0 {
                            failure_ply = Some(0);
                            root_analysis = Some(analysis);
                            break;
                        }
                        // Margin gone deeper in: the solution simply ends
                        // before this node.
                        winrates.pop();
                        break;
                    }
                }
            }
            if ply == 0 {
                root_analysis = Some(analysis);
            }
        }

        pv.push(best.mv);
        cur = cur
            .apply_move(best.mv)
            .map_err(|e| EngineError::Invalid(alloc::format!("engine suggested {e}")))?;
        ply += 1;
    }

    // Normalize: a puzzle line ends on a solver move.
    if !pv.is_empty() && pv.len() % 2 == 0 {
        pv.pop();
        winrates.truncate(pv.len() + 1);
    }
    // Cap-induced stops can leave the terminal value unrecorded; carry the
    // last known one forward.
    while winrates.len() < pv.len() + 1 {
        let last = winrates.last().copied().unwrap_or(0.0);
        winrates.push(last);
    }
    winrates.truncate(pv.len() + 1);

    let is_unique = failure_ply.is_none();
    let root_analysis = match root_analysis {
        Some(a) => a,
        // Unreachable in practice: ply 0 always stores the analysis.
        None => AnalysisResult {
            fen: p.to_fen(),
            budget: cfg.budget,
            evals: Vec::new(),
            engine: engine.identity(),
        },
    };

    Ok(UniquenessVerdict {
        is_unique: is_unique && !pv.is_empty(),
        r_uni,
        solution_pv: if is_unique { pv } else { Vec::new() },
        failure_ply,
        mode,
        node_winrates: winrates,
        root_analysis,
    })
}
