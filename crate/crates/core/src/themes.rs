//! Aesthetic theme detectors over (position, solution line) pairs.
//!
//! Every detector is a pure reconstruction from informal theme
//! descriptions; none of them is a formal definition, and borderline
//! positions will misclassify. Engine-dependent conditions ("still
//! winning", "evaluation does not drop") read cached line evaluations
//! instead of running fresh searches.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::chess::{Color, Move, PieceKind, Position, Square};
use crate::uniqueness::UniquenessVerdict;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Theme {
    Underpromotion,
    Sacrifice,
    SmotheredMate,
    BackRankMate,
    DoubleCheck,
    EnPassant,
    Castling,
    QuietMove,
    Switchback,
    KnightOnRim,
    AttackingWithdrawal,
    Fork,
    Pin,
}

impl Theme {
    pub const ALL: [Theme; 13] = [
        Theme::Underpromotion,
        Theme::Sacrifice,
        Theme::SmotheredMate,
        Theme::BackRankMate,
        Theme::DoubleCheck,
        Theme::EnPassant,
        Theme::Castling,
        Theme::QuietMove,
        Theme::Switchback,
        Theme::KnightOnRim,
        Theme::AttackingWithdrawal,
        Theme::Fork,
        Theme::Pin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theme::Underpromotion => "underpromotion",
            Theme::Sacrifice => "sacrifice",
            Theme::SmotheredMate => "smothered_mate",
            Theme::BackRankMate => "back_rank_mate",
            Theme::DoubleCheck => "double_check",
            Theme::EnPassant => "en_passant",
            Theme::Castling => "castling",
            Theme::QuietMove => "quiet_move",
            Theme::Switchback => "switchback",
            Theme::KnightOnRim => "knight_on_rim",
            Theme::AttackingWithdrawal => "attacking_withdrawal",
            Theme::Fork => "fork",
            Theme::Pin => "pin",
        }
    }

    pub fn from_name(name: &str) -> Option<Theme> {
        Theme::ALL.iter().copied().find(|t| t.name() == name)
    }
}

impl fmt::Display for Theme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThemeHit {
    pub theme: Theme,
    /// Index into the PV of the move that triggered the theme.
    pub trigger_ply: usize,
    pub detail: String,
}

/// Tunable detector thresholds. The boundaries are soft by nature, so
/// they stay configurable rather than hard-coded.
#[derive(Clone, Debug)]
pub struct ThemeConfig {
    /// Material-balance deficit (in pawns) that counts as a sacrifice.
    pub sacrifice_deficit: f64,
    /// Solver winrate from which a position counts as winning.
    pub winning_threshold: f64,
    /// Permitted winrate drop for an attacking withdrawal.
    pub withdrawal_eval_slack: f64,
}

impl Default for ThemeConfig {
    fn default() -> Self {
        ThemeConfig {
            sacrifice_deficit: 3.0,
            winning_threshold: 0.6,
            withdrawal_eval_slack: 0.02,
        }
    }
}

/// Cached solver-perspective winrates along the line, one per node
/// (length = pv length + 1), as recorded by the uniqueness transcript.
#[derive(Clone, Debug)]
pub struct ThemeContext {
    winrates: Vec<f64>,
}

impl ThemeContext {
    pub fn new(winrates: Vec<f64>) -> ThemeContext {
        ThemeContext { winrates }
    }

    pub fn from_verdict(verdict: &UniquenessVerdict) -> ThemeContext {
        ThemeContext {
            winrates: verdict.node_winrates.clone(),
        }
    }

    /// All-winning context for lines whose evaluations are not on hand,
    /// like printed solutions.
    pub fn assume_winning(pv_len: usize) -> ThemeContext {
        ThemeContext {
            winrates: alloc::vec![1.0; pv_len + 1],
        }
    }

    fn before(&self, ply: usize) -> f64 {
        self.winrates[ply]
    }

    fn after(&self, ply: usize) -> f64 {
        self.winrates[ply + 1]
    }

    fn final_value(&self) -> f64 {
        *self.winrates.last().expect("nonempty by construction")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ThemeError {
    IllegalPv { ply: usize, detail: String },
    EmptyPv,
    ContextLength { expected: usize, got: usize },
}

impl fmt::Display for ThemeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThemeError::IllegalPv { ply, detail } => {
                write!(f, "PV illegal at ply {ply}: {detail}")
            }
            ThemeError::EmptyPv => write!(f, "PV is empty"),
            ThemeError::ContextLength { expected, got } => {
                write!(f, "context needs {expected} winrates, got {got}")
            }
        }
    }
}

impl core::error::Error for ThemeError {}

struct Line {
    /// Positions along the line; `nodes[i]` precedes `pv[i]`.
    nodes: Vec<Position>,
    pv: Vec<Move>,
}

impl Line {
    fn replay(p: &Position, pv: &[Move]) -> Result<Line, ThemeError> {
        if pv.is_empty() {
            return Err(ThemeError::EmptyPv);
        }
        let mut nodes = Vec::with_capacity(pv.len() + 1);
        nodes.push(p.clone());
        for (ply, &m) in pv.iter().enumerate() {
            let next = nodes
                .last()
                .expect("nonempty")
                .apply_move(m)
                .map_err(|e| ThemeError::IllegalPv {
                    ply,
                    detail: format!("{e}"),
                })?;
            nodes.push(next);
        }
        Ok(Line {
            nodes,
            pv: pv.to_vec(),
        })
    }

    fn solver(&self) -> Color {
        self.nodes[0].side_to_move()
    }

    fn solver_plies(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.pv.len()).step_by(2)
    }

    fn is_capture(&self, ply: usize) -> bool {
        let m = self.pv[ply];
        let before = &self.nodes[ply];
        before.piece_at(m.to).is_some()
            || (before.piece_at(m.from).map(|p| p.kind) == Some(PieceKind::Pawn)
                && Some(m.to) == before.en_passant())
    }

    fn gives_check(&self, ply: usize) -> bool {
        let after = &self.nodes[ply + 1];
        after.in_check(after.side_to_move())
    }

    fn is_castling(&self, ply: usize) -> bool {
        let m = self.pv[ply];
        self.nodes[ply].piece_at(m.from).map(|p| p.kind) == Some(PieceKind::King)
            && (m.from.file() as i8 - m.to.file() as i8).abs() == 2
    }

    fn is_en_passant(&self, ply: usize) -> bool {
        let m = self.pv[ply];
        let before = &self.nodes[ply];
        before.piece_at(m.from).map(|p| p.kind) == Some(PieceKind::Pawn)
            && Some(m.to) == before.en_passant()
    }

    /// Material balance from the solver's side at node `i`.
    fn balance(&self, node: usize) -> i32 {
        let solver = self.solver();
        self.nodes[node].material(solver) - self.nodes[node].material(solver.opponent())
    }
}

/// Squares of pieces giving check to the side to move.
fn checkers(p: &Position) -> Vec<Square> {
    let us = p.side_to_move();
    let king = match p.king_square(us) {
        Some(k) => k,
        None => return Vec::new(),
    };
    p.pieces()
        .filter(|&(sq, piece)| piece.color != us && p.attacks_from(sq).contains(&king))
        .map(|(sq, _)| sq)
        .collect()
}

fn underpromotion(line: &Line) -> Option<ThemeHit> {
    line.solver_plies().find_map(|ply| {
        match line.pv[ply].promotion {
            Some(kind) if kind != PieceKind::Queen => Some(ThemeHit {
                theme: Theme::Underpromotion,
                trigger_ply: ply,
                detail: format!("promotes to {kind:?}"),
            }),
            _ => None,
        }
    })
}

fn sacrifice(line: &Line, ctx: &ThemeContext, cfg: &ThemeConfig) -> Option<ThemeHit> {
    if ctx.final_value() < cfg.winning_threshold {
        return None;
    }
    let base = line.balance(0);
    for ply in (1..line.pv.len()).step_by(2) {
        let deficit = (base - line.balance(ply + 1)) as f64;
        if deficit >= cfg.sacrifice_deficit {
            let trigger = ply - 1;
            return Some(ThemeHit {
                theme: Theme::Sacrifice,
                trigger_ply: trigger,
                detail: format!("down {deficit} points after the reply, still winning"),
            });
        }
    }
    None
}

fn final_mate_ply(line: &Line) -> Option<usize> {
    let last = line.nodes.last().expect("nonempty");
    if last.is_checkmate() {
        Some(line.pv.len() - 1)
    } else {
        None
    }
}

fn smothered_mate(line: &Line) -> Option<ThemeHit> {
    let ply = final_mate_ply(line)?;
    let m = line.pv[ply];
    let final_pos = line.nodes.last().expect("nonempty");
    if final_pos.piece_at(m.to).map(|p| p.kind) != Some(PieceKind::Knight) {
        return None;
    }
    let mated = final_pos.side_to_move();
    let king = final_pos.king_square(mated)?;
    let all_own = (-1..=1).all(|df| {
        (-1..=1).all(|dr| {
            if df == 0 && dr == 0 {
                return true;
            }
            match king.offset(df, dr) {
                None => true,
                Some(sq) => final_pos.piece_at(sq).map(|p| p.color) == Some(mated),
            }
        })
    });
    all_own.then(|| ThemeHit {
        theme: Theme::SmotheredMate,
        trigger_ply: ply,
        detail: String::from("knight mates a fully self-blocked king"),
    })
}

fn back_rank_mate(line: &Line) -> Option<ThemeHit> {
    let ply = final_mate_ply(line)?;
    let final_pos = line.nodes.last().expect("nonempty");
    let mated = final_pos.side_to_move();
    let king = final_pos.king_square(mated)?;
    let (home, forward): (u8, i8) = match mated {
        Color::White => (0, 1),
        Color::Black => (7, -1),
    };
    if king.rank() != home {
        return None;
    }
    let pawns_block = (-1..=1).all(|df| match king.offset(df, forward) {
        None => true,
        Some(sq) => {
            final_pos.piece_at(sq) == Some(crate::chess::Piece::new(mated, PieceKind::Pawn))
        }
    });
    pawns_block.then(|| ThemeHit {
        theme: Theme::BackRankMate,
        trigger_ply: ply,
        detail: String::from("mate on the home rank behind own pawns"),
    })
}

fn double_check(line: &Line) -> Option<ThemeHit> {
    (0..line.pv.len()).find_map(|ply| {
        let after = &line.nodes[ply + 1];
        let n = checkers(after).len();
        (n >= 2).then(|| ThemeHit {
            theme: Theme::DoubleCheck,
            trigger_ply: ply,
            detail: format!("{n} pieces give check"),
        })
    })
}

fn move_kind_membership(line: &Line) -> Vec<ThemeHit> {
    let mut hits = Vec::new();
    if let Some(ply) = (0..line.pv.len()).find(|&p| line.is_en_passant(p)) {
        hits.push(ThemeHit {
            theme: Theme::EnPassant,
            trigger_ply: ply,
            detail: String::from("en passant capture"),
        });
    }
    if let Some(ply) = (0..line.pv.len()).find(|&p| line.is_castling(p)) {
        hits.push(ThemeHit {
            theme: Theme::Castling,
            trigger_ply: ply,
            detail: String::from("castles"),
        });
    }
    hits
}

fn quiet_move(line: &Line, ctx: &ThemeContext, cfg: &ThemeConfig) -> Option<ThemeHit> {
    line.solver_plies().find_map(|ply| {
        let quiet = !line.is_capture(ply)
            && !line.gives_check(ply)
            && line.pv[ply].promotion.is_none();
        (quiet && ctx.before(ply) >= cfg.winning_threshold).then(|| ThemeHit {
            theme: Theme::QuietMove,
            trigger_ply: ply,
            detail: String::from("slow move in a winning position"),
        })
    })
}

fn switchback(line: &Line) -> Option<ThemeHit> {
    // Piece identities tracked across the line; captures erase ids,
    // promotions keep them.
    let mut ids: [Option<u16>; 64] = [None; 64];
    let mut next_id: u16 = 0;
    for (sq, _) in line.nodes[0].pieces() {
        ids[sq.index()] = Some(next_id);
        next_id += 1;
    }
    let mut abandoned: Vec<Vec<Square>> = alloc::vec![Vec::new(); next_id as usize];

    for (ply, &m) in line.pv.iter().enumerate() {
        let before = &line.nodes[ply];
        let id = match ids[m.from.index()] {
            Some(id) => id,
            None => return None,
        };
        if line.is_en_passant(ply) {
            let captured = Square::from_file_rank(m.to.file(), m.from.rank());
            ids[captured.index()] = None;
        }
        let returning = abandoned[id as usize].contains(&m.to);
        if returning && ply % 2 == 0 {
            return Some(ThemeHit {
                theme: Theme::Switchback,
                trigger_ply: ply,
                detail: format!("returns to {}", m.to),
            });
        }
        abandoned[id as usize].push(m.from);
        ids[m.to.index()] = Some(id);
        ids[m.from.index()] = None;
        if line.is_castling(ply) {
            let rank = m.from.rank();
            let (rook_from, rook_to) = if m.to.file() == 6 {
                (Square::from_file_rank(7, rank), Square::from_file_rank(5, rank))
            } else {
                (Square::from_file_rank(0, rank), Square::from_file_rank(3, rank))
            };
            if let Some(rook_id) = ids[rook_from.index()] {
                abandoned[rook_id as usize].push(rook_from);
                ids[rook_to.index()] = Some(rook_id);
                ids[rook_from.index()] = None;
            }
        }
        let _ = before;
    }
    None
}

fn knight_on_rim(line: &Line, ctx: &ThemeContext, cfg: &ThemeConfig) -> Option<ThemeHit> {
    line.solver_plies().find_map(|ply| {
        let m = line.pv[ply];
        let after = &line.nodes[ply + 1];
        let lands_knight = after.piece_at(m.to).map(|p| p.kind) == Some(PieceKind::Knight);
        let rim = m.to.file() == 0 || m.to.file() == 7 || m.to.rank() == 0 || m.to.rank() == 7;
        (lands_knight && rim && ctx.after(ply) >= cfg.winning_threshold).then(|| ThemeHit {
            theme: Theme::KnightOnRim,
            trigger_ply: ply,
            detail: format!("knight to the rim at {}", m.to),
        })
    })
}

fn attacking_withdrawal(line: &Line, ctx: &ThemeContext, cfg: &ThemeConfig) -> Option<ThemeHit> {
    let solver = line.solver();
    line.solver_plies().find_map(|ply| {
        let m = line.pv[ply];
        let before = &line.nodes[ply];
        let enemy_king = before.king_square(solver.opponent())?;
        let withdrawing = m.to.chebyshev(enemy_king) > m.from.chebyshev(enemy_king);
        let holds = ctx.after(ply) >= ctx.before(ply) - cfg.withdrawal_eval_slack;
        (!line.is_capture(ply) && withdrawing && holds).then(|| ThemeHit {
            theme: Theme::AttackingWithdrawal,
            trigger_ply: ply,
            detail: format!("retreats to {} without losing the thread", m.to),
        })
    })
}

fn fork(line: &Line) -> Option<ThemeHit> {
    let solver = line.solver();
    line.solver_plies().find_map(|ply| {
        let m = line.pv[ply];
        let after = &line.nodes[ply + 1];
        let attacker = after.piece_at(m.to)?;
        let attacker_value = attacker.kind.material();
        let targets: Vec<Square> = after
            .attacks_from(m.to)
            .into_iter()
            .filter(|&sq| {
                let victim = match after.piece_at(sq) {
                    Some(p) if p.color == solver.opponent() => p,
                    _ => return false,
                };
                victim.kind == PieceKind::King
                    || victim.kind.material() > attacker_value
                    || !after.attacked_by(sq, solver.opponent())
            })
            .collect();
        (targets.len() >= 2).then(|| ThemeHit {
            theme: Theme::Fork,
            trigger_ply: ply,
            detail: format!("attacks {} loose or bigger targets", targets.len()),
        })
    })
}

fn pin(line: &Line) -> Option<ThemeHit> {
    let solver = line.solver();
    line.solver_plies().find_map(|ply| {
        let m = line.pv[ply];
        let after = &line.nodes[ply + 1];
        let mover = after.piece_at(m.to)?;
        let dirs: &[(i8, i8)] = match mover.kind {
            PieceKind::Rook => &[(0, 1), (1, 0), (0, -1), (-1, 0)],
            PieceKind::Bishop => &[(1, 1), (1, -1), (-1, -1), (-1, 1)],
            PieceKind::Queen => &[
                (0, 1),
                (1, 0),
                (0, -1),
                (-1, 0),
                (1, 1),
                (1, -1),
                (-1, -1),
                (-1, 1),
            ],
            _ => return None,
        };
        for &(df, dr) in dirs {
            let mut cur = m.to;
            let mut pinned: Option<Square> = None;
            while let Some(sq) = cur.offset(df, dr) {
                cur = sq;
                match after.piece_at(sq) {
                    None => continue,
                    Some(p) if p.color == solver => break,
                    Some(p) => match (pinned, p.kind) {
                        (None, PieceKind::King) => break,
                        (None, _) => pinned = Some(sq),
                        (Some(pin_sq), PieceKind::King) => {
                            return Some(ThemeHit {
                                theme: Theme::Pin,
                                trigger_ply: ply,
                                detail: format!("pins the piece on {pin_sq} to the king"),
                            });
                        }
                        (Some(_), _) => break,
                    },
                }
            }
        }
        None
    })
}

/// Runs every detector over the line and returns the union of hits.
pub fn detect(
    p: &Position,
    pv: &[Move],
    ctx: &ThemeContext,
    cfg: &ThemeConfig,
) -> Result<Vec<ThemeHit>, ThemeError> {
    let line = Line::replay(p, pv)?;
    if ctx.winrates.len() != pv.len() + 1 {
        return Err(ThemeError::ContextLength {
            expected: pv.len() + 1,
            got: ctx.winrates.len(),
        });
    }
    let mut hits = Vec::new();
    hits.extend(underpromotion(&line));
    hits.extend(sacrifice(&line, ctx, cfg));
    hits.extend(smothered_mate(&line));
    hits.extend(back_rank_mate(&line));
    hits.extend(double_check(&line));
    hits.extend(move_kind_membership(&line));
    hits.extend(quiet_move(&line, ctx, cfg));
    hits.extend(switchback(&line));
    hits.extend(knight_on_rim(&line, ctx, cfg));
    hits.extend(attacking_withdrawal(&line, ctx, cfg));
    hits.extend(fork(&line));
    hits.extend(pin(&line));
    hits.sort_by_key(|h| (h.trigger_ply, h.theme));
    Ok(hits)
}
