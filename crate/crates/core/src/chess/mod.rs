//! Board representation, FEN parsing, legal move generation and the
//! fixed-length 77-token position encoding.
//!
//! Positions are plain immutable values: every mutation-like operation
//! returns a fresh `Position`, so they can be shared freely across workers.

mod fen;
mod movegen;
mod token;

pub use fen::FenError;
pub use token::{token_alphabet, TokenSeq77, TokenSeqError, TOKEN_ALPHABET_SIZE};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Side to move / piece owner.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn opponent(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PieceKind {
    Pawn,
    Knight,
    Bishop,
    Rook,
    Queen,
    King,
}

impl PieceKind {
    pub const ALL: [PieceKind; 6] = [
        PieceKind::Pawn,
        PieceKind::Knight,
        PieceKind::Bishop,
        PieceKind::Rook,
        PieceKind::Queen,
        PieceKind::King,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Standard material value in pawns (king scores 0 for material sums).
    pub fn material(self) -> i32 {
        match self {
            PieceKind::Pawn => 1,
            PieceKind::Knight => 3,
            PieceKind::Bishop => 3,
            PieceKind::Rook => 5,
            PieceKind::Queen => 9,
            PieceKind::King => 0,
        }
    }

    fn fen_char(self, color: Color) -> char {
        let c = match self {
            PieceKind::Pawn => 'p',
            PieceKind::Knight => 'n',
            PieceKind::Bishop => 'b',
            PieceKind::Rook => 'r',
            PieceKind::Queen => 'q',
            PieceKind::King => 'k',
        };
        match color {
            Color::White => c.to_ascii_uppercase(),
            Color::Black => c,
        }
    }

    fn from_fen_char(c: char) -> Option<(Color, PieceKind)> {
        let kind = match c.to_ascii_lowercase() {
            'p' => PieceKind::Pawn,
            'n' => PieceKind::Knight,
            'b' => PieceKind::Bishop,
            'r' => PieceKind::Rook,
            'q' => PieceKind::Queen,
            'k' => PieceKind::King,
            _ => return None,
        };
        let color = if c.is_ascii_uppercase() {
            Color::White
        } else {
            Color::Black
        };
        Some((color, kind))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Piece {
    pub color: Color,
    pub kind: PieceKind,
}

impl Piece {
    pub const fn new(color: Color, kind: PieceKind) -> Self {
        Piece { color, kind }
    }

    pub fn fen_char(self) -> char {
        self.kind.fen_char(self.color)
    }
}

/// Board square, 0..64 with a1 = 0, b1 = 1, ..., h8 = 63.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square(u8);

impl Square {
    pub fn new(index: u8) -> Square {
        debug_assert!(index < 64);
        Square(index)
    }

    pub fn from_file_rank(file: u8, rank: u8) -> Square {
        debug_assert!(file < 8 && rank < 8);
        Square(rank * 8 + file)
    }

    /// Parses "e4"-style coordinates.
    pub fn from_name(s: &str) -> Option<Square> {
        let b = s.as_bytes();
        if b.len() != 2 {
            return None;
        }
        let file = b[0].checked_sub(b'a')?;
        let rank = b[1].checked_sub(b'1')?;
        if file < 8 && rank < 8 {
            Some(Square::from_file_rank(file, rank))
        } else {
            None
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// 0 = file a .. 7 = file h.
    pub fn file(self) -> u8 {
        self.0 % 8
    }

    /// 0 = rank 1 .. 7 = rank 8.
    pub fn rank(self) -> u8 {
        self.0 / 8
    }

    pub fn offset(self, dfile: i8, drank: i8) -> Option<Square> {
        let f = self.file() as i8 + dfile;
        let r = self.rank() as i8 + drank;
        if (0..8).contains(&f) && (0..8).contains(&r) {
            Some(Square::from_file_rank(f as u8, r as u8))
        } else {
            None
        }
    }

    /// Chebyshev (king-move) distance between two squares.
    pub fn chebyshev(self, other: Square) -> u8 {
        let df = (self.file() as i8 - other.file() as i8).unsigned_abs();
        let dr = (self.rank() as i8 - other.rank() as i8).unsigned_abs();
        df.max(dr)
    }

    pub fn all() -> impl Iterator<Item = Square> {
        (0..64).map(Square)
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            (b'a' + self.file()) as char,
            (b'1' + self.rank()) as char
        )
    }
}

/// A move in coordinate form, promotion piece attached when a pawn reaches
/// the last rank.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub from: Square,
    pub to: Square,
    pub promotion: Option<PieceKind>,
}

impl Move {
    pub fn new(from: Square, to: Square) -> Move {
        Move {
            from,
            to,
            promotion: None,
        }
    }

    pub fn promoting(from: Square, to: Square, kind: PieceKind) -> Move {
        Move {
            from,
            to,
            promotion: Some(kind),
        }
    }

    /// Parses long algebraic / UCI form ("e2e4", "f2f1n").
    pub fn from_uci(s: &str) -> Option<Move> {
        if s.len() != 4 && s.len() != 5 {
            return None;
        }
        let from = Square::from_name(&s[0..2])?;
        let to = Square::from_name(&s[2..4])?;
        let promotion = match s.as_bytes().get(4) {
            None => None,
            Some(b'n') => Some(PieceKind::Knight),
            Some(b'b') => Some(PieceKind::Bishop),
            Some(b'r') => Some(PieceKind::Rook),
            Some(b'q') => Some(PieceKind::Queen),
            Some(_) => return None,
        };
        Some(Move {
            from,
            to,
            promotion,
        })
    }

    pub fn uci(&self) -> String {
        use alloc::string::ToString;
        let mut s = self.from.to_string();
        s.push_str(&self.to.to_string());
        if let Some(k) = self.promotion {
            s.push(match k {
                PieceKind::Knight => 'n',
                PieceKind::Bishop => 'b',
                PieceKind::Rook => 'r',
                PieceKind::Queen => 'q',
                _ => '?',
            });
        }
        s
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.uci())
    }
}

/// Castling availability, one flag per FEN letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct CastlingRights {
    pub white_kingside: bool,
    pub white_queenside: bool,
    pub black_kingside: bool,
    pub black_queenside: bool,
}

impl CastlingRights {
    pub fn none() -> CastlingRights {
        CastlingRights::default()
    }

    pub fn any(&self) -> bool {
        self.white_kingside || self.white_queenside || self.black_kingside || self.black_queenside
    }
}

/// Full chess game state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Position {
    board: [Option<Piece>; 64],
    side_to_move: Color,
    castling: CastlingRights,
    en_passant: Option<Square>,
    halfmove_clock: u32,
    fullmove_number: u32,
}

/// Why a move was rejected by [`Position::apply_move`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IllegalMove {
    pub mv: Move,
    pub reason: &'static str,
}

impl fmt::Display for IllegalMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "illegal move {}: {}", self.mv.uci(), self.reason)
    }
}

impl core::error::Error for IllegalMove {}

impl Position {
    pub const STARTPOS_FEN: &'static str =
        "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

    pub fn startpos() -> Position {
        Position::from_fen(Self::STARTPOS_FEN).expect("startpos FEN is valid")
    }

    /// Validated constructor from raw parts: the same legality rules as
    /// FEN parsing apply. Used by mutation operators.
    pub fn from_parts(
        board: [Option<Piece>; 64],
        side_to_move: Color,
        castling: CastlingRights,
        en_passant: Option<Square>,
        halfmove_clock: u32,
        fullmove_number: u32,
    ) -> Result<Position, FenError> {
        let pos = Position {
            board,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number: fullmove_number.max(1),
        };
        pos.validate()?;
        Ok(pos)
    }

    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.board[sq.index()]
    }

    pub fn side_to_move(&self) -> Color {
        self.side_to_move
    }

    pub fn castling(&self) -> CastlingRights {
        self.castling
    }

    pub fn en_passant(&self) -> Option<Square> {
        self.en_passant
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove_clock
    }

    pub fn fullmove_number(&self) -> u32 {
        self.fullmove_number
    }

    pub fn king_square(&self, color: Color) -> Option<Square> {
        Square::all().find(|&sq| self.board[sq.index()] == Some(Piece::new(color, PieceKind::King)))
    }

    pub fn pieces(&self) -> impl Iterator<Item = (Square, Piece)> + '_ {
        Square::all().filter_map(move |sq| self.board[sq.index()].map(|p| (sq, p)))
    }

    /// Is `color`'s king currently attacked?
    pub fn in_check(&self, color: Color) -> bool {
        match self.king_square(color) {
            Some(k) => self.attacked_by(k, color.opponent()),
            None => false,
        }
    }

    /// Exact per-kind piece counts plus the initial-array overflow flag.
    pub fn piece_census(&self) -> PieceCensus {
        let mut counts = [[0u8; 6]; 2];
        for (_, p) in self.pieces() {
            counts[p.color.index()][p.kind.index()] += 1;
        }
        PieceCensus { counts }
    }

    /// Total standard material for one side (king excluded).
    pub fn material(&self, color: Color) -> i32 {
        self.pieces()
            .filter(|(_, p)| p.color == color)
            .map(|(_, p)| p.kind.material())
            .sum()
    }
}

/// Per-(color, kind) piece counts over a full board scan.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PieceCensus {
    counts: [[u8; 6]; 2],
}

impl PieceCensus {
    const INITIAL: [u8; 6] = [8, 2, 2, 2, 1, 1];

    pub fn count(&self, color: Color, kind: PieceKind) -> u8 {
        self.counts[color.index()][kind.index()]
    }

    /// True when any per-kind count exceeds the standard initial array
    /// (8 pawns, 2 knights, 2 bishops, 2 rooks, 1 queen, 1 king per side).
    pub fn exceeds_initial(&self) -> bool {
        self.counts.iter().any(|side| {
            side.iter()
                .zip(Self::INITIAL.iter())
                .any(|(have, init)| have > init)
        })
    }

    pub fn total(&self, color: Color) -> u32 {
        self.counts[color.index()].iter().map(|&c| c as u32).sum()
    }
}

/// Counts leaf nodes of the legal move tree; the standard move generator
/// validation metric.
pub fn perft(p: &Position, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = p.legal_moves();
    if depth == 1 {
        return moves.len() as u64;
    }
    let mut nodes = 0;
    for m in moves {
        let next = p.apply_unchecked(m);
        nodes += perft(&next, depth - 1);
    }
    nodes
}

/// Uniform random legal position: two non-adjacent kings plus `extra_pieces`
/// random non-king pieces, side to move chosen so the check invariant holds.
///
/// This exists to exercise reward tiers and the diversity-decay property,
/// not to model realistic play.
pub fn random_legal_position<R: rand::Rng>(rng: &mut R, extra_pieces: usize) -> Position {
    use rand::seq::SliceRandom;
    loop {
        let mut board = [None; 64];
        let mut squares: Vec<u8> = (0..64).collect();
        squares.shuffle(rng);
        let wk = Square::new(squares[0]);
        let bk = match squares[1..].iter().find(|&&s| Square::new(s).chebyshev(wk) > 1) {
            Some(&s) => Square::new(s),
            None => continue,
        };
        board[wk.index()] = Some(Piece::new(Color::White, PieceKind::King));
        board[bk.index()] = Some(Piece::new(Color::Black, PieceKind::King));

        let kinds = [
            PieceKind::Pawn,
            PieceKind::Knight,
            PieceKind::Bishop,
            PieceKind::Rook,
            PieceKind::Queen,
        ];
        let mut placed = 0;
        let mut guard = 0;
        while placed < extra_pieces && guard < 1000 {
            guard += 1;
            let sq = Square::new(rng.gen_range(0..64));
            if board[sq.index()].is_some() {
                continue;
            }
            let kind = kinds[rng.gen_range(0..kinds.len())];
            if kind == PieceKind::Pawn && (sq.rank() == 0 || sq.rank() == 7) {
                continue;
            }
            let color = if rng.gen_bool(0.5) {
                Color::White
            } else {
                Color::Black
            };
            board[sq.index()] = Some(Piece::new(color, kind));
            placed += 1;
        }

        let mut pos = Position {
            board,
            side_to_move: if rng.gen_bool(0.5) {
                Color::White
            } else {
                Color::Black
            },
            castling: CastlingRights::none(),
            en_passant: None,
            halfmove_clock: 0,
            fullmove_number: 1,
        };
        // A checked king simply becomes the side to move; two checked kings
        // cannot be fixed that way, so resample.
        let white_checked = pos.in_check(Color::White);
        let black_checked = pos.in_check(Color::Black);
        match (white_checked, black_checked) {
            (true, true) => continue,
            (true, false) => pos.side_to_move = Color::White,
            (false, true) => pos.side_to_move = Color::Black,
            (false, false) => {}
        }
        if pos.legal_moves().is_empty() {
            continue;
        }
        return pos;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_names_round_trip() {
        for sq in Square::all() {
            use alloc::string::ToString;
            assert_eq!(Square::from_name(&sq.to_string()), Some(sq));
        }
        assert_eq!(Square::from_name("e4"), Some(Square::from_file_rank(4, 3)));
        assert_eq!(Square::from_name("i9"), None);
        assert_eq!(Square::from_name("e"), None);
    }

    #[test]
    fn uci_moves_round_trip() {
        let m = Move::from_uci("e2e4").unwrap();
        assert_eq!(m.uci(), "e2e4");
        let p = Move::from_uci("f2f1n").unwrap();
        assert_eq!(p.promotion, Some(PieceKind::Knight));
        assert_eq!(p.uci(), "f2f1n");
        assert!(Move::from_uci("e2e9").is_none());
        assert!(Move::from_uci("e2e4x").is_none());
    }

    #[test]
    fn census_flags_extra_pieces() {
        let start = Position::startpos();
        let census = start.piece_census();
        assert!(!census.exceeds_initial());
        assert_eq!(census.count(Color::White, PieceKind::Pawn), 8);

        let two_queens =
            Position::from_fen("4k3/8/8/8/8/8/PPPPPPPP/QQ2K3 w - - 0 1").unwrap();
        assert!(two_queens.piece_census().exceeds_initial());

        let promoted_down =
            Position::from_fen("4k3/8/8/8/8/8/PPPPPPP1/Q3K3 w - - 0 1").unwrap();
        assert!(!promoted_down.piece_census().exceeds_initial());
    }

    #[test]
    fn material_sums() {
        let start = Position::startpos();
        assert_eq!(start.material(Color::White), 8 + 6 + 6 + 10 + 9);
        assert_eq!(start.material(Color::White), start.material(Color::Black));
    }

    #[test]
    fn random_positions_are_legal() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = random_legal_position(&mut rng, 3);
            assert!(!p.in_check(p.side_to_move().opponent()));
            assert!(p.king_square(Color::White).is_some());
            assert!(p.king_square(Color::Black).is_some());
            assert!(!p.legal_moves().is_empty());
        }
    }
}
