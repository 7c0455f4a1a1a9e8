//! Fixed-length 77-token position encoding.
//!
//! Layout (byte offsets):
//! - 0..64   board cells row-major from a8 to h1, '.' for empty, piece
//!           letters with uppercase white
//! - 64      side to move, 'w' or 'b'
//! - 65..69  castling flags as "KQkq" with '.' for an absent right
//! - 69..71  en-passant square as file+rank, ".." when unset
//! - 71..74  halfmove clock, zero-padded decimal
//! - 74..77  fullmove number, zero-padded decimal
//!
//! Distances and entropy only need a stable, piece-aligned encoding, so the
//! layout is frozen here; clocks saturate at 999 to keep the width fixed.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{CastlingRights, Color, Piece, PieceKind, Position, Square};

pub const TOKEN_LEN: usize = 77;

/// Number of distinct byte values the encoding can emit.
pub const TOKEN_ALPHABET_SIZE: usize = 31;

/// A position rendered as 77 ASCII tokens.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenSeq77 {
    bytes: [u8; TOKEN_LEN],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenSeqError {
    BadLength(usize),
    BadToken { offset: usize, byte: u8 },
    /// Decoded fields describe an illegal position.
    IllegalPosition(String),
}

impl fmt::Display for TokenSeqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenSeqError::BadLength(n) => write!(f, "expected 77 tokens, got {n}"),
            TokenSeqError::BadToken { offset, byte } => {
                write!(f, "invalid token 0x{byte:02x} at offset {offset}")
            }
            TokenSeqError::IllegalPosition(msg) => write!(f, "illegal position: {msg}"),
        }
    }
}

impl core::error::Error for TokenSeqError {}

impl TokenSeq77 {
    pub fn as_bytes(&self) -> &[u8; TOKEN_LEN] {
        &self.bytes
    }

    /// The 64 board cells plus the side-to-move token; the slice board and
    /// PV distances operate on.
    pub fn board_tokens(&self) -> &[u8] {
        &self.bytes[..65]
    }

    pub fn as_str(&self) -> &str {
        core::str::from_utf8(&self.bytes).expect("tokens are ASCII")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TokenSeq77, TokenSeqError> {
        if bytes.len() != TOKEN_LEN {
            return Err(TokenSeqError::BadLength(bytes.len()));
        }
        let mut buf = [0u8; TOKEN_LEN];
        buf.copy_from_slice(bytes);
        Ok(TokenSeq77 { bytes: buf })
    }
}

impl fmt::Debug for TokenSeq77 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TokenSeq77({})", self.as_str())
    }
}

impl fmt::Display for TokenSeq77 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every byte value the encoding can produce, sorted ascending. Exactly 31
/// symbols: ten digits, '.', twelve piece letters, 'w', and the seven
/// file letters not already used by a piece.
pub fn token_alphabet() -> Vec<u8> {
    let mut set = [false; 256];
    for b in b'0'..=b'9' {
        set[b as usize] = true;
    }
    set[b'.' as usize] = true;
    for b in *b"PNBRQKpnbrqk" {
        set[b as usize] = true;
    }
    set[b'w' as usize] = true;
    for b in b'a'..=b'h' {
        set[b as usize] = true;
    }
    let out: Vec<u8> = (0u16..256)
        .filter(|&b| set[b as usize])
        .map(|b| b as u8)
        .collect();
    debug_assert_eq!(out.len(), TOKEN_ALPHABET_SIZE);
    out
}

fn push_clock(buf: &mut [u8], offset: usize, value: u32) {
    let v = value.min(999);
    buf[offset] = b'0' + (v / 100) as u8;
    buf[offset + 1] = b'0' + (v / 10 % 10) as u8;
    buf[offset + 2] = b'0' + (v % 10) as u8;
}

fn parse_clock(bytes: &[u8], offset: usize) -> Result<u32, TokenSeqError> {
    let mut v = 0u32;
    for i in 0..3 {
        let b = bytes[offset + i];
        if !b.is_ascii_digit() {
            return Err(TokenSeqError::BadToken {
                offset: offset + i,
                byte: b,
            });
        }
        v = v * 10 + (b - b'0') as u32;
    }
    Ok(v)
}

impl Position {
    /// Renders the position as the fixed 77-token sequence.
    pub fn encode77(&self) -> TokenSeq77 {
        let mut bytes = [b'.'; TOKEN_LEN];
        let mut i = 0;
        for rank in (0..8).rev() {
            for file in 0..8 {
                if let Some(p) = self.piece_at(Square::from_file_rank(file, rank)) {
                    bytes[i] = p.fen_char() as u8;
                }
                i += 1;
            }
        }
        bytes[64] = match self.side_to_move() {
            Color::White => b'w',
            Color::Black => b'b',
        };
        let c = self.castling();
        bytes[65] = if c.white_kingside { b'K' } else { b'.' };
        bytes[66] = if c.white_queenside { b'Q' } else { b'.' };
        bytes[67] = if c.black_kingside { b'k' } else { b'.' };
        bytes[68] = if c.black_queenside { b'q' } else { b'.' };
        if let Some(ep) = self.en_passant() {
            bytes[69] = b'a' + ep.file();
            bytes[70] = b'1' + ep.rank();
        }
        push_clock(&mut bytes, 71, self.halfmove_clock());
        push_clock(&mut bytes, 74, self.fullmove_number());
        TokenSeq77 { bytes }
    }

    /// Inverse of [`Position::encode77`]; validates both token syntax and
    /// position legality.
    pub fn decode77(seq: &TokenSeq77) -> Result<Position, TokenSeqError> {
        use alloc::string::ToString;
        let bytes = &seq.bytes;
        let mut board = [None; 64];
        for (i, &b) in bytes[..64].iter().enumerate() {
            if b == b'.' {
                continue;
            }
            let (color, kind) = PieceKind::from_fen_char(b as char).ok_or(
                TokenSeqError::BadToken { offset: i, byte: b },
            )?;
            let rank = 7 - (i / 8) as u8;
            let file = (i % 8) as u8;
            board[Square::from_file_rank(file, rank).index()] = Some(Piece::new(color, kind));
        }

        let side_to_move = match bytes[64] {
            b'w' => Color::White,
            b'b' => Color::Black,
            byte => return Err(TokenSeqError::BadToken { offset: 64, byte }),
        };

        let mut castling = CastlingRights::none();
        for (offset, expect, flag) in [
            (65usize, b'K', &mut castling.white_kingside),
            (66, b'Q', &mut castling.white_queenside),
            (67, b'k', &mut castling.black_kingside),
            (68, b'q', &mut castling.black_queenside),
        ] {
            match bytes[offset] {
                b'.' => {}
                b if b == expect => *flag = true,
                byte => return Err(TokenSeqError::BadToken { offset, byte }),
            }
        }

        let en_passant = match (bytes[69], bytes[70]) {
            (b'.', b'.') => None,
            (f @ b'a'..=b'h', r @ b'1'..=b'8') => {
                Some(Square::from_file_rank(f - b'a', r - b'1'))
            }
            (f, r) => {
                let (offset, byte) = if (b'a'..=b'h').contains(&f) {
                    (70, r)
                } else {
                    (69, f)
                };
                return Err(TokenSeqError::BadToken { offset, byte });
            }
        };

        let halfmove_clock = parse_clock(bytes, 71)?;
        let fullmove_number = parse_clock(bytes, 74)?;

        let pos = Position {
            board,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number: fullmove_number.max(1),
        };
        pos.validate()
            .map_err(|e| TokenSeqError::IllegalPosition(e.to_string()))?;
        Ok(pos)
    }
}
