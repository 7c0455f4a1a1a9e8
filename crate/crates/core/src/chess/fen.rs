//! FEN parsing and canonical serialization.

use alloc::format;
use alloc::string::String;
use core::fmt;

use super::{CastlingRights, Color, Piece, PieceKind, Position, Square};

/// Which legality or syntax rule a FEN string failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FenError {
    /// Not six whitespace-separated fields.
    FieldCount(usize),
    /// Board field does not describe 8 ranks of 8 squares.
    BadBoardShape,
    /// Unrecognized character in the board field.
    BadPieceChar(char),
    /// Side field is not "w" or "b".
    BadSide(String),
    /// Castling field malformed, or a right is set without its king and
    /// rook on their home squares.
    BadCastling(String),
    /// En-passant field malformed or inconsistent with the side to move.
    BadEnPassant(String),
    BadClock(String),
    /// A side has zero or multiple kings.
    KingCount { color: Color, count: u8 },
    /// Pawn on rank 1 or rank 8.
    PawnOnBackRank(Square),
    /// The side that just moved is still in check.
    SideNotToMoveInCheck,
}

impl fmt::Display for FenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FenError::FieldCount(n) => write!(f, "expected 6 FEN fields, got {n}"),
            FenError::BadBoardShape => write!(f, "board field does not cover 8x8 squares"),
            FenError::BadPieceChar(c) => write!(f, "invalid piece character '{c}'"),
            FenError::BadSide(s) => write!(f, "invalid side-to-move field '{s}'"),
            FenError::BadCastling(s) => write!(f, "invalid castling field '{s}'"),
            FenError::BadEnPassant(s) => write!(f, "invalid en-passant field '{s}'"),
            FenError::BadClock(s) => write!(f, "invalid clock field '{s}'"),
            FenError::KingCount { color, count } => {
                write!(f, "{color:?} has {count} kings, expected exactly 1")
            }
            FenError::PawnOnBackRank(sq) => write!(f, "pawn on back rank at {sq}"),
            FenError::SideNotToMoveInCheck => write!(f, "side not to move is in check"),
        }
    }
}

impl core::error::Error for FenError {}

impl Position {
    /// Parses a 6-field FEN and validates the position invariants: exactly
    /// one king per side, no pawns on ranks 1/8, a consistent en-passant
    /// square, castling rights backed by home-square pieces, and the side
    /// not to move out of check.
    pub fn from_fen(text: &str) -> Result<Position, FenError> {
        let fields: alloc::vec::Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(FenError::FieldCount(fields.len()));
        }

        let mut board = [None; 64];
        let mut rank: i8 = 7;
        let mut file: i8 = 0;
        for c in fields[0].chars() {
            match c {
                '/' => {
                    if file != 8 || rank == 0 {
                        return Err(FenError::BadBoardShape);
                    }
                    rank -= 1;
                    file = 0;
                }
                '1'..='8' => {
                    file += c as i8 - '0' as i8;
                    if file > 8 {
                        return Err(FenError::BadBoardShape);
                    }
                }
                _ => {
                    let (color, kind) =
                        PieceKind::from_fen_char(c).ok_or(FenError::BadPieceChar(c))?;
                    if file >= 8 {
                        return Err(FenError::BadBoardShape);
                    }
                    let sq = Square::from_file_rank(file as u8, rank as u8);
                    board[sq.index()] = Some(Piece::new(color, kind));
                    file += 1;
                }
            }
        }
        if rank != 0 || file != 8 {
            return Err(FenError::BadBoardShape);
        }

        let side_to_move = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            other => return Err(FenError::BadSide(String::from(other))),
        };

        let mut castling = CastlingRights::none();
        if fields[2] != "-" {
            for c in fields[2].chars() {
                let flag = match c {
                    'K' => &mut castling.white_kingside,
                    'Q' => &mut castling.white_queenside,
                    'k' => &mut castling.black_kingside,
                    'q' => &mut castling.black_queenside,
                    _ => return Err(FenError::BadCastling(String::from(fields[2]))),
                };
                if *flag {
                    return Err(FenError::BadCastling(String::from(fields[2])));
                }
                *flag = true;
            }
            if fields[2].is_empty() {
                return Err(FenError::BadCastling(String::from(fields[2])));
            }
        }

        let en_passant = match fields[3] {
            "-" => None,
            name => Some(
                Square::from_name(name)
                    .ok_or_else(|| FenError::BadEnPassant(String::from(name)))?,
            ),
        };

        let halfmove_clock: u32 = fields[4]
            .parse()
            .map_err(|_| FenError::BadClock(String::from(fields[4])))?;
        let fullmove_number: u32 = fields[5]
            .parse()
            .map_err(|_| FenError::BadClock(String::from(fields[5])))?;
        if fullmove_number == 0 {
            return Err(FenError::BadClock(String::from(fields[5])));
        }

        let pos = Position {
            board,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number,
        };
        pos.validate()?;
        Ok(pos)
    }

    pub(super) fn validate(&self) -> Result<(), FenError> {
        let census = self.piece_census();
        for color in [Color::White, Color::Black] {
            let kings = census.count(color, PieceKind::King);
            if kings != 1 {
                return Err(FenError::KingCount {
                    color,
                    count: kings,
                });
            }
        }
        for (sq, p) in self.pieces() {
            if p.kind == PieceKind::Pawn && (sq.rank() == 0 || sq.rank() == 7) {
                return Err(FenError::PawnOnBackRank(sq));
            }
        }

        if let Some(ep) = self.en_passant {
            let (ep_rank, pawn_rank, pawn_color) = match self.side_to_move {
                // Black just double-pushed: target on rank 6, pawn on rank 5.
                Color::White => (5, 4, Color::Black),
                Color::Black => (2, 3, Color::White),
            };
            let pawn_sq = Square::from_file_rank(ep.file(), pawn_rank);
            let consistent = ep.rank() == ep_rank
                && self.piece_at(ep).is_none()
                && self.piece_at(pawn_sq) == Some(Piece::new(pawn_color, PieceKind::Pawn));
            if !consistent {
                return Err(FenError::BadEnPassant(ep.uci_name()));
            }
        }

        let home: &[(bool, Color, &str, &str)] = &[
            (self.castling.white_kingside, Color::White, "e1", "h1"),
            (self.castling.white_queenside, Color::White, "e1", "a1"),
            (self.castling.black_kingside, Color::Black, "e8", "h8"),
            (self.castling.black_queenside, Color::Black, "e8", "a8"),
        ];
        for &(flag, color, king_sq, rook_sq) in home {
            if !flag {
                continue;
            }
            let king_home = Square::from_name(king_sq).unwrap();
            let rook_home = Square::from_name(rook_sq).unwrap();
            if self.piece_at(king_home) != Some(Piece::new(color, PieceKind::King))
                || self.piece_at(rook_home) != Some(Piece::new(color, PieceKind::Rook))
            {
                return Err(FenError::BadCastling(String::from(match (color, rook_sq) {
                    (Color::White, "h1") => "K",
                    (Color::White, "a1") => "Q",
                    (Color::Black, "h8") => "k",
                    _ => "q",
                })));
            }
        }

        if self.in_check(self.side_to_move.opponent()) {
            return Err(FenError::SideNotToMoveInCheck);
        }
        Ok(())
    }

    /// Canonical FEN: digit-compressed empty runs, '-' for empty castling
    /// and en-passant fields.
    pub fn to_fen(&self) -> String {
        let mut out = String::new();
        for rank in (0..8).rev() {
            let mut empties = 0;
            for file in 0..8 {
                match self.piece_at(Square::from_file_rank(file, rank)) {
                    None => empties += 1,
                    Some(p) => {
                        if empties > 0 {
                            out.push((b'0' + empties) as char);
                            empties = 0;
                        }
                        out.push(p.fen_char());
                    }
                }
            }
            if empties > 0 {
                out.push((b'0' + empties) as char);
            }
            if rank > 0 {
                out.push('/');
            }
        }

        out.push(' ');
        out.push(match self.side_to_move {
            Color::White => 'w',
            Color::Black => 'b',
        });

        out.push(' ');
        if self.castling.any() {
            if self.castling.white_kingside {
                out.push('K');
            }
            if self.castling.white_queenside {
                out.push('Q');
            }
            if self.castling.black_kingside {
                out.push('k');
            }
            if self.castling.black_queenside {
                out.push('q');
            }
        } else {
            out.push('-');
        }

        out.push(' ');
        match self.en_passant {
            Some(sq) => out.push_str(&sq.uci_name()),
            None => out.push('-'),
        }

        out.push_str(&format!(" {} {}", self.halfmove_clock, self.fullmove_number));
        out
    }
}

impl Square {
    fn uci_name(self) -> String {
        use alloc::string::ToString;
        self.to_string()
    }
}
