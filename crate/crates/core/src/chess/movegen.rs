//! Legal move generation and state updates (mailbox style).

use alloc::vec::Vec;

use super::{Color, IllegalMove, Move, Piece, PieceKind, Position, Square};

const KNIGHT_OFFSETS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];
const KING_OFFSETS: [(i8, i8); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];
const ROOK_DIRS: [(i8, i8); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, -1), (-1, 1)];

const PROMOTIONS: [PieceKind; 4] = [
    PieceKind::Knight,
    PieceKind::Bishop,
    PieceKind::Rook,
    PieceKind::Queen,
];

impl Position {
    /// Does any piece of `color` attack `target`?
    pub fn attacked_by(&self, target: Square, color: Color) -> bool {
        // Pawns attack toward the enemy; look one rank back from the target.
        let pawn_rank_delta: i8 = match color {
            Color::White => -1,
            Color::Black => 1,
        };
        for df in [-1i8, 1] {
            if let Some(sq) = target.offset(df, pawn_rank_delta) {
                if self.piece_at(sq) == Some(Piece::new(color, PieceKind::Pawn)) {
                    return true;
                }
            }
        }

        for (df, dr) in KNIGHT_OFFSETS {
            if let Some(sq) = target.offset(df, dr) {
                if self.piece_at(sq) == Some(Piece::new(color, PieceKind::Knight)) {
                    return true;
                }
            }
        }

        for (df, dr) in KING_OFFSETS {
            if let Some(sq) = target.offset(df, dr) {
                if self.piece_at(sq) == Some(Piece::new(color, PieceKind::King)) {
                    return true;
                }
            }
        }

        for (dirs, straight) in [(ROOK_DIRS, true), (BISHOP_DIRS, false)] {
            for (df, dr) in dirs {
                let mut cur = target;
                while let Some(sq) = cur.offset(df, dr) {
                    cur = sq;
                    match self.piece_at(sq) {
                        None => continue,
                        Some(p) => {
                            if p.color == color
                                && (p.kind == PieceKind::Queen
                                    || (straight && p.kind == PieceKind::Rook)
                                    || (!straight && p.kind == PieceKind::Bishop))
                            {
                                return true;
                            }
                            break;
                        }
                    }
                }
            }
        }
        false
    }

    /// Squares attacked by the piece standing on `from` (board occupancy as
    /// is). Used by theme detectors; pawns report capture squares only.
    pub fn attacks_from(&self, from: Square) -> Vec<Square> {
        let mut out = Vec::new();
        let piece = match self.piece_at(from) {
            Some(p) => p,
            None => return out,
        };
        match piece.kind {
            PieceKind::Pawn => {
                let dr: i8 = match piece.color {
                    Color::White => 1,
                    Color::Black => -1,
                };
                for df in [-1i8, 1] {
                    if let Some(sq) = from.offset(df, dr) {
                        out.push(sq);
                    }
                }
            }
            PieceKind::Knight => {
                for (df, dr) in KNIGHT_OFFSETS {
                    if let Some(sq) = from.offset(df, dr) {
                        out.push(sq);
                    }
                }
            }
            PieceKind::King => {
                for (df, dr) in KING_OFFSETS {
                    if let Some(sq) = from.offset(df, dr) {
                        out.push(sq);
                    }
                }
            }
            PieceKind::Rook | PieceKind::Bishop | PieceKind::Queen => {
                let dirs: &[(i8, i8)] = match piece.kind {
                    PieceKind::Rook => &ROOK_DIRS,
                    PieceKind::Bishop => &BISHOP_DIRS,
                    _ => &[
                        (0, 1),
                        (1, 1),
                        (1, 0),
                        (1, -1),
                        (0, -1),
                        (-1, -1),
                        (-1, 0),
                        (-1, 1),
                    ],
                };
                for &(df, dr) in dirs {
                    let mut cur = from;
                    while let Some(sq) = cur.offset(df, dr) {
                        out.push(sq);
                        if self.piece_at(sq).is_some() {
                            break;
                        }
                        cur = sq;
                    }
                }
            }
        }
        out
    }

    fn pseudo_moves(&self) -> Vec<Move> {
        let us = self.side_to_move();
        let mut moves = Vec::with_capacity(48);
        for (from, piece) in self.pieces().filter(|(_, p)| p.color == us) {
            match piece.kind {
                PieceKind::Pawn => self.pawn_moves(from, us, &mut moves),
                PieceKind::Knight => self.leaper_moves(from, us, &KNIGHT_OFFSETS, &mut moves),
                PieceKind::King => {
                    self.leaper_moves(from, us, &KING_OFFSETS, &mut moves);
                    self.castling_moves(from, us, &mut moves);
                }
                PieceKind::Rook => self.slider_moves(from, us, &ROOK_DIRS, &mut moves),
                PieceKind::Bishop => self.slider_moves(from, us, &BISHOP_DIRS, &mut moves),
                PieceKind::Queen => {
                    self.slider_moves(from, us, &ROOK_DIRS, &mut moves);
                    self.slider_moves(from, us, &BISHOP_DIRS, &mut moves);
                }
            }
        }
        moves
    }

    fn pawn_moves(&self, from: Square, us: Color, moves: &mut Vec<Move>) {
        let (dr, start_rank, promo_rank): (i8, u8, u8) = match us {
            Color::White => (1, 1, 7),
            Color::Black => (-1, 6, 0),
        };
        let push_pawn = |moves: &mut Vec<Move>, from: Square, to: Square| {
            if to.rank() == promo_rank {
                for kind in PROMOTIONS {
                    moves.push(Move::promoting(from, to, kind));
                }
            } else {
                moves.push(Move::new(from, to));
            }
        };

        if let Some(one) = from.offset(0, dr) {
            if self.piece_at(one).is_none() {
                push_pawn(moves, from, one);
                if from.rank() == start_rank {
                    if let Some(two) = one.offset(0, dr) {
                        if self.piece_at(two).is_none() {
                            moves.push(Move::new(from, two));
                        }
                    }
                }
            }
        }
        for df in [-1i8, 1] {
            if let Some(to) = from.offset(df, dr) {
                let enemy_there = self
                    .piece_at(to)
                    .map(|p| p.color != us)
                    .unwrap_or(false);
                if enemy_there || Some(to) == self.en_passant() {
                    push_pawn(moves, from, to);
                }
            }
        }
    }

    fn leaper_moves(&self, from: Square, us: Color, offsets: &[(i8, i8)], moves: &mut Vec<Move>) {
        for &(df, dr) in offsets {
            if let Some(to) = from.offset(df, dr) {
                if self.piece_at(to).map(|p| p.color != us).unwrap_or(true) {
                    moves.push(Move::new(from, to));
                }
            }
        }
    }

    fn slider_moves(&self, from: Square, us: Color, dirs: &[(i8, i8)], moves: &mut Vec<Move>) {
        for &(df, dr) in dirs {
            let mut cur = from;
            while let Some(to) = cur.offset(df, dr) {
                match self.piece_at(to) {
                    None => moves.push(Move::new(from, to)),
                    Some(p) => {
                        if p.color != us {
                            moves.push(Move::new(from, to));
                        }
                        break;
                    }
                }
                cur = to;
            }
        }
    }

    fn castling_moves(&self, from: Square, us: Color, moves: &mut Vec<Move>) {
        let (home_rank, kingside, queenside) = match us {
            Color::White => (0, self.castling.white_kingside, self.castling.white_queenside),
            Color::Black => (7, self.castling.black_kingside, self.castling.black_queenside),
        };
        if from != Square::from_file_rank(4, home_rank) || self.in_check(us) {
            return;
        }
        let them = us.opponent();
        let sq = |file| Square::from_file_rank(file, home_rank);

        if kingside
            && self.piece_at(sq(7)) == Some(Piece::new(us, PieceKind::Rook))
            && self.piece_at(sq(5)).is_none()
            && self.piece_at(sq(6)).is_none()
            && !self.attacked_by(sq(5), them)
        {
            moves.push(Move::new(from, sq(6)));
        }
        if queenside
            && self.piece_at(sq(0)) == Some(Piece::new(us, PieceKind::Rook))
            && self.piece_at(sq(1)).is_none()
            && self.piece_at(sq(2)).is_none()
            && self.piece_at(sq(3)).is_none()
            && !self.attacked_by(sq(3), them)
        {
            moves.push(Move::new(from, sq(2)));
        }
    }

    /// Every legal move under FIDE rules (castling, en passant, promotions;
    /// draws by repetition or the 50-move rule are not adjudicated here).
    pub fn legal_moves(&self) -> Vec<Move> {
        let us = self.side_to_move();
        self.pseudo_moves()
            .into_iter()
            .filter(|&m| !self.apply_unchecked(m).in_check(us))
            .collect()
    }

    pub fn is_legal_move(&self, m: Move) -> bool {
        self.legal_moves().contains(&m)
    }

    /// Plays a move known to come from [`Position::legal_moves`]; state
    /// bookkeeping only, no legality verification.
    pub(crate) fn apply_unchecked(&self, m: Move) -> Position {
        let mut next = self.clone();
        let us = self.side_to_move();
        let piece = self.piece_at(m.from).expect("move origin holds a piece");

        let ep_capture = piece.kind == PieceKind::Pawn && Some(m.to) == self.en_passant();
        let is_capture = self.piece_at(m.to).is_some() || ep_capture;

        next.board[m.from.index()] = None;
        next.board[m.to.index()] = Some(match m.promotion {
            Some(kind) => Piece::new(us, kind),
            None => piece,
        });
        if ep_capture {
            let captured = Square::from_file_rank(m.to.file(), m.from.rank());
            next.board[captured.index()] = None;
        }

        if piece.kind == PieceKind::King && m.from.file() == 4 {
            let home_rank = m.from.rank();
            if m.to.file() == 6 {
                let rook = Square::from_file_rank(7, home_rank);
                next.board[rook.index()] = None;
                next.board[Square::from_file_rank(5, home_rank).index()] =
                    Some(Piece::new(us, PieceKind::Rook));
            } else if m.to.file() == 2 {
                let rook = Square::from_file_rank(0, home_rank);
                next.board[rook.index()] = None;
                next.board[Square::from_file_rank(3, home_rank).index()] =
                    Some(Piece::new(us, PieceKind::Rook));
            }
        }

        if piece.kind == PieceKind::King {
            match us {
                Color::White => {
                    next.castling.white_kingside = false;
                    next.castling.white_queenside = false;
                }
                Color::Black => {
                    next.castling.black_kingside = false;
                    next.castling.black_queenside = false;
                }
            }
        }
        for sq in [m.from, m.to] {
            match (sq.file(), sq.rank()) {
                (7, 0) => next.castling.white_kingside = false,
                (0, 0) => next.castling.white_queenside = false,
                (7, 7) => next.castling.black_kingside = false,
                (0, 7) => next.castling.black_queenside = false,
                _ => {}
            }
        }

        next.en_passant = None;
        if piece.kind == PieceKind::Pawn {
            let from_rank = m.from.rank() as i8;
            let to_rank = m.to.rank() as i8;
            if (from_rank - to_rank).abs() == 2 {
                next.en_passant = Some(Square::from_file_rank(
                    m.from.file(),
                    ((from_rank + to_rank) / 2) as u8,
                ));
            }
        }

        next.halfmove_clock = if is_capture || piece.kind == PieceKind::Pawn {
            0
        } else {
            self.halfmove_clock + 1
        };
        if us == Color::Black {
            next.fullmove_number += 1;
        }
        next.side_to_move = us.opponent();
        next
    }

    /// Standard state update for a legal move; rejects anything else with
    /// the failed rule.
    pub fn apply_move(&self, m: Move) -> Result<Position, IllegalMove> {
        if self.piece_at(m.from).map(|p| p.color) != Some(self.side_to_move()) {
            return Err(IllegalMove {
                mv: m,
                reason: "no piece of the side to move on the origin square",
            });
        }
        if !self.is_legal_move(m) {
            return Err(IllegalMove {
                mv: m,
                reason: "not a legal move in this position",
            });
        }
        Ok(self.apply_unchecked(m))
    }

    /// Checkmate test: side to move has no legal move while in check.
    pub fn is_checkmate(&self) -> bool {
        self.in_check(self.side_to_move()) && self.legal_moves().is_empty()
    }

    /// Stalemate test: no legal move and not in check.
    pub fn is_stalemate(&self) -> bool {
        !self.in_check(self.side_to_move()) && self.legal_moves().is_empty()
    }
}
