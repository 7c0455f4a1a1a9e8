//! Hand-built positive and negative fixtures for every theme detector.
//! Each position was constructed and checked against the detector rule by
//! hand; the lines replay through the movegen, so every fixture is legal.

use puzzleforge_core::chess::{Move, Position};
use puzzleforge_core::themes::{detect, Theme, ThemeConfig, ThemeContext, ThemeError, ThemeHit};

fn run_ctx(fen: &str, pv: &[&str], ctx: ThemeContext) -> Vec<ThemeHit> {
    let p = Position::from_fen(fen).expect("fixture FEN is legal");
    let moves: Vec<Move> = pv
        .iter()
        .map(|s| Move::from_uci(s).expect("fixture move parses"))
        .collect();
    detect(&p, &moves, &ctx, &ThemeConfig::default()).expect("fixture PV replays")
}

fn run(fen: &str, pv: &[&str]) -> Vec<ThemeHit> {
    run_ctx(fen, pv, ThemeContext::assume_winning(pv.len()))
}

fn themes(hits: &[ThemeHit]) -> Vec<Theme> {
    hits.iter().map(|h| h.theme).collect()
}

fn trigger(hits: &[ThemeHit], theme: Theme) -> Option<usize> {
    hits.iter().find(|h| h.theme == theme).map(|h| h.trigger_ply)
}

#[test]
fn underpromotion_positives() {
    let hits = run("7k/P7/8/8/8/8/8/K7 w - - 0 1", &["a7a8n"]);
    assert_eq!(trigger(&hits, Theme::Underpromotion), Some(0));

    let hits = run("k7/8/8/8/8/8/p6K/8 b - - 0 1", &["a2a1r"]);
    assert_eq!(trigger(&hits, Theme::Underpromotion), Some(0));

    let hits = run("k7/4P3/8/8/8/8/8/K7 w - - 0 1", &["e7e8b"]);
    assert_eq!(trigger(&hits, Theme::Underpromotion), Some(0));
}

#[test]
fn underpromotion_negatives() {
    // Promotion to queen is the expected move, not an underpromotion.
    let hits = run("7k/P7/8/8/8/8/8/K7 w - - 0 1", &["a7a8q"]);
    assert_eq!(trigger(&hits, Theme::Underpromotion), None);

    let hits = run("7k/8/8/8/8/8/8/R6K w - - 0 1", &["a1a2"]);
    assert_eq!(trigger(&hits, Theme::Underpromotion), None);

    // The opponent underpromotes; solver plies stay clean.
    let hits = run("k7/8/8/8/8/8/p7/7K w - - 0 1", &["h1h2", "a2a1n"]);
    assert_eq!(trigger(&hits, Theme::Underpromotion), None);
}

#[test]
fn sacrifice_positives() {
    // Queen offered and taken at once.
    let hits = run("3q2k1/8/8/8/8/8/8/Q6K w - - 0 1", &["a1a8", "d8a8"]);
    assert_eq!(trigger(&hits, Theme::Sacrifice), Some(0));

    // Rook falls to the king for a pawn.
    let hits = run("k7/p7/8/8/8/8/8/R6K w - - 0 1", &["a1a7", "a8a7"]);
    assert_eq!(trigger(&hits, Theme::Sacrifice), Some(0));

    // The offer comes on the second solver move.
    let hits = run(
        "3r2k1/p7/8/8/8/8/8/Q6K w - - 0 1",
        &["a1b1", "a7a6", "b1b8", "d8b8"],
    );
    assert_eq!(trigger(&hits, Theme::Sacrifice), Some(2));
}

#[test]
fn sacrifice_negatives() {
    // Winning a rook outright: the balance never dips.
    let hits = run("r5k1/8/8/8/8/8/8/R5K1 w - - 0 1", &["a1a8", "g8g7"]);
    assert_eq!(trigger(&hits, Theme::Sacrifice), None);

    // Bishop for a pawn is only a two-point deficit.
    let hits = run("6k1/8/8/8/4p3/3p4/2B5/6K1 w - - 0 1", &["c2d3", "e4d3"]);
    assert_eq!(trigger(&hits, Theme::Sacrifice), None);

    // Material goes, but so does the game: not winning afterwards.
    let hits = run_ctx(
        "3q2k1/8/8/8/8/8/8/Q6K w - - 0 1",
        &["a1a8", "d8a8"],
        ThemeContext::new(vec![0.2, 0.1, 0.2]),
    );
    assert_eq!(trigger(&hits, Theme::Sacrifice), None);
}

#[test]
fn smothered_mate_positives() {
    // The classic corner pattern.
    let hits = run("6rk/6pp/8/4N3/8/8/8/K7 w - - 0 1", &["e5f7"]);
    assert_eq!(trigger(&hits, Theme::SmotheredMate), Some(0));

    // Mirrored, black delivers.
    let hits = run("k7/8/8/8/3n4/8/PP6/KR6 b - - 0 1", &["d4c2"]);
    assert_eq!(trigger(&hits, Theme::SmotheredMate), Some(0));

    // Same mate two plies later.
    let hits = run(
        "6rk/p5pp/8/4N3/8/8/8/K7 w - - 0 1",
        &["a1b1", "a7a6", "e5f7"],
    );
    assert_eq!(trigger(&hits, Theme::SmotheredMate), Some(2));
}

#[test]
fn smothered_mate_negatives() {
    // Rook mate, not a knight.
    let hits = run("6k1/5ppp/8/8/8/8/8/R5K1 w - - 0 1", &["a1a8"]);
    assert_eq!(trigger(&hits, Theme::SmotheredMate), None);

    // Knight mate, but one flight square holds an enemy pawn.
    let hits = run("6rk/6pP/8/4N3/8/8/2B5/K7 w - - 0 1", &["e5f7"]);
    assert_eq!(trigger(&hits, Theme::SmotheredMate), None);

    // Knight check that is not mate.
    let hits = run("6rk/6pp/8/4N3/8/8/8/K7 w - - 0 1", &["e5g6"]);
    assert_eq!(trigger(&hits, Theme::SmotheredMate), None);
}

#[test]
fn back_rank_mate_positives() {
    let hits = run("6k1/5ppp/8/8/8/8/8/R5K1 w - - 0 1", &["a1a8"]);
    assert_eq!(trigger(&hits, Theme::BackRankMate), Some(0));

    // Black mates white behind its own pawn shield.
    let hits = run("r5k1/8/8/8/8/8/5PPP/6K1 b - - 0 1", &["a8a1"]);
    assert_eq!(trigger(&hits, Theme::BackRankMate), Some(0));

    let hits = run("3q2k1/5ppp/8/8/8/8/PPP5/1K6 b - - 0 1", &["d8d1"]);
    assert_eq!(trigger(&hits, Theme::BackRankMate), Some(0));
}

#[test]
fn back_rank_mate_negatives() {
    // A flight square is empty (merely covered by a bishop).
    let hits = run("6k1/5p1p/8/8/8/8/1B6/R5K1 w - - 0 1", &["a1a8"]);
    assert_eq!(trigger(&hits, Theme::BackRankMate), None);

    // Mate in the middle of the board.
    let hits = run("6R1/8/8/7k/8/8/8/K5R1 w - - 0 1", &["g1h1"]);
    assert_eq!(trigger(&hits, Theme::BackRankMate), None);

    // No mate: the eighth rank is guarded.
    let hits = run("4r1k1/5ppp/8/8/8/8/8/R5K1 w - - 0 1", &["a1a8"]);
    assert_eq!(trigger(&hits, Theme::BackRankMate), None);
}

#[test]
fn double_check_positives() {
    // Bishop discovers the rook while checking itself.
    let hits = run("4k3/8/8/8/4B3/8/8/4R1K1 w - - 0 1", &["e4g6"]);
    assert_eq!(trigger(&hits, Theme::DoubleCheck), Some(0));

    // Black bishop steps off the file with tempo.
    let hits = run("4r1k1/8/8/8/8/4b3/8/4K3 b - - 0 1", &["e3f2"]);
    assert_eq!(trigger(&hits, Theme::DoubleCheck), Some(0));

    let hits = run(
        "4k3/7p/8/8/4B3/8/8/4R1K1 w - - 0 1",
        &["g1f2", "h7h6", "e4g6"],
    );
    assert_eq!(trigger(&hits, Theme::DoubleCheck), Some(2));
}

#[test]
fn double_check_negatives() {
    // Single check only.
    let hits = run("4k3/8/8/8/4B3/8/8/6K1 w - - 0 1", &["e4g6"]);
    assert_eq!(trigger(&hits, Theme::DoubleCheck), None);

    // No checks anywhere.
    let hits = run("4k3/8/8/8/4B3/8/8/6K1 w - - 0 1", &["e4d3"]);
    assert_eq!(trigger(&hits, Theme::DoubleCheck), None);

    // Two consecutive single checks are still single checks.
    let hits = run("4k3/8/8/8/8/8/8/R3K3 w - - 0 1", &["a1a8", "e8e7", "a8a7"]);
    assert_eq!(trigger(&hits, Theme::DoubleCheck), None);
}

#[test]
fn en_passant_positives() {
    let hits = run("4k3/8/8/3pP3/8/8/8/4K3 w - d6 0 2", &["e5d6"]);
    assert_eq!(trigger(&hits, Theme::EnPassant), Some(0));

    let hits = run("4k3/8/8/8/3Pp3/8/8/4K3 b - d3 0 1", &["e4d3"]);
    assert_eq!(trigger(&hits, Theme::EnPassant), Some(0));

    // The capture happens inside the line, on the reply.
    let hits = run("4k3/3p4/8/4P3/8/8/8/4K3 b - - 0 1", &["d7d5", "e5d6"]);
    assert_eq!(trigger(&hits, Theme::EnPassant), Some(1));
}

#[test]
fn en_passant_negatives() {
    // Ordinary diagonal capture onto the same square shape.
    let hits = run("4k3/8/3r4/4P3/8/8/8/4K3 w - - 0 1", &["e5d6"]);
    assert_eq!(trigger(&hits, Theme::EnPassant), None);

    let hits = run("4k3/8/8/4P3/8/8/8/4K3 w - - 0 1", &["e5e6"]);
    assert_eq!(trigger(&hits, Theme::EnPassant), None);

    let hits = run("4k3/8/8/8/8/8/8/4K2R w K - 0 1", &["e1g1"]);
    assert_eq!(trigger(&hits, Theme::EnPassant), None);
}

#[test]
fn castling_positives() {
    let hits = run("4k3/8/8/8/8/8/8/4K2R w K - 0 1", &["e1g1"]);
    assert_eq!(trigger(&hits, Theme::Castling), Some(0));

    let hits = run("r3k3/8/8/8/8/8/8/4K3 b q - 0 1", &["e8c8"]);
    assert_eq!(trigger(&hits, Theme::Castling), Some(0));

    let hits = run(
        "r3k3/7p/8/8/8/8/7P/4K3 b q - 0 1",
        &["h7h6", "h2h3", "e8c8"],
    );
    assert_eq!(trigger(&hits, Theme::Castling), Some(2));
}

#[test]
fn castling_negatives() {
    let hits = run("4k3/8/8/8/8/8/8/4K2R w K - 0 1", &["e1f1"]);
    assert_eq!(trigger(&hits, Theme::Castling), None);

    let hits = run("4k3/8/8/8/8/8/8/4K2R w K - 0 1", &["h1g1"]);
    assert_eq!(trigger(&hits, Theme::Castling), None);

    let hits = run("4k3/8/8/8/8/8/8/4K1N1 w - - 0 1", &["g1f3"]);
    assert_eq!(trigger(&hits, Theme::Castling), None);
}

#[test]
fn quiet_move_positives() {
    let hits = run("4k3/8/8/8/8/8/8/Q3K3 w - - 0 1", &["a1b2"]);
    assert_eq!(trigger(&hits, Theme::QuietMove), Some(0));

    // First a capture, then the slow move.
    let hits = run(
        "4k3/p7/8/8/8/8/8/Q3K3 w - - 0 1",
        &["a1a7", "e8f8", "a7b6"],
    );
    assert_eq!(trigger(&hits, Theme::QuietMove), Some(2));

    let hits = run("q3k3/8/8/8/8/8/8/4K3 b - - 0 1", &["a8b8"]);
    assert_eq!(trigger(&hits, Theme::QuietMove), Some(0));
}

#[test]
fn quiet_move_negatives() {
    // Quiet in shape but the position is not winning.
    let hits = run_ctx(
        "4k3/8/8/8/8/8/8/Q3K3 w - - 0 1",
        &["a1b2"],
        ThemeContext::new(vec![0.5, 0.5]),
    );
    assert_eq!(trigger(&hits, Theme::QuietMove), None);

    // Capture.
    let hits = run("r5k1/8/8/8/8/8/8/R5K1 w - - 0 1", &["a1a8", "g8g7"]);
    assert_eq!(trigger(&hits, Theme::QuietMove), None);

    // Check.
    let hits = run("4k3/8/8/8/8/8/8/Q3K3 w - - 0 1", &["a1a4"]);
    assert_eq!(trigger(&hits, Theme::QuietMove), None);
}

#[test]
fn switchback_positives() {
    let hits = run(
        "4k3/8/8/8/8/8/8/Q3K3 w - - 0 1",
        &["a1a3", "e8d8", "a3a1"],
    );
    assert_eq!(trigger(&hits, Theme::Switchback), Some(2));

    let hits = run(
        "4k3/8/8/8/8/8/8/4K1N1 w - - 0 1",
        &["g1f3", "e8d8", "f3g1"],
    );
    assert_eq!(trigger(&hits, Theme::Switchback), Some(2));

    // Return to an intermediate square, not the origin.
    let hits = run(
        "4k3/8/8/8/8/8/8/Q3K3 w - - 0 1",
        &["a1b2", "e8d8", "b2c3", "d8e8", "c3b2"],
    );
    assert_eq!(trigger(&hits, Theme::Switchback), Some(4));
}

#[test]
fn switchback_negatives() {
    // One-way trip.
    let hits = run("4k3/8/8/8/8/8/8/Q3K3 w - - 0 1", &["a1a3", "e8d8"]);
    assert_eq!(trigger(&hits, Theme::Switchback), None);

    // A different piece lands on the vacated square.
    let hits = run(
        "4k3/8/8/8/8/8/4K3/Q6R w - - 0 1",
        &["a1a3", "e8d8", "h1a1"],
    );
    assert_eq!(trigger(&hits, Theme::Switchback), None);

    // The opponent's piece returns; solver plies stay clean.
    let hits = run(
        "rn2k3/8/8/8/8/8/8/R3K3 w - - 0 1",
        &["a1b1", "b8c6", "b1c1", "c6b8"],
    );
    assert_eq!(trigger(&hits, Theme::Switchback), None);
}

#[test]
fn knight_on_rim_positives() {
    let hits = run("4k3/8/8/8/8/8/8/4K1N1 w - - 0 1", &["g1h3"]);
    assert_eq!(trigger(&hits, Theme::KnightOnRim), Some(0));

    let hits = run("4k3/8/6N1/8/8/8/8/4K3 w - - 0 1", &["g6h8"]);
    assert_eq!(trigger(&hits, Theme::KnightOnRim), Some(0));

    // Underpromotion drops a knight onto the rim.
    let hits = run("7k/8/8/8/8/8/5p1K/8 b - - 0 1", &["f2f1n"]);
    assert_eq!(trigger(&hits, Theme::KnightOnRim), Some(0));
    assert_eq!(trigger(&hits, Theme::Underpromotion), Some(0));
}

#[test]
fn knight_on_rim_negatives() {
    let hits = run("4k3/8/8/8/8/8/8/4K1N1 w - - 0 1", &["g1f3"]);
    assert_eq!(trigger(&hits, Theme::KnightOnRim), None);

    // A bishop on the rim is no knight.
    let hits = run("4k3/8/8/8/4B3/8/8/4K3 w - - 0 1", &["e4h1"]);
    assert_eq!(trigger(&hits, Theme::KnightOnRim), None);

    // Knight to the rim in a lost position.
    let hits = run_ctx(
        "4k3/8/8/8/8/8/8/4K1N1 w - - 0 1",
        &["g1h3"],
        ThemeContext::new(vec![0.3, 0.3]),
    );
    assert_eq!(trigger(&hits, Theme::KnightOnRim), None);
}

#[test]
fn attacking_withdrawal_positives() {
    let hits = run("4k3/8/8/3B4/8/8/8/4K3 w - - 0 1", &["d5b3"]);
    assert_eq!(trigger(&hits, Theme::AttackingWithdrawal), Some(0));

    let hits = run("4k3/8/8/8/3Q4/8/8/4K3 w - - 0 1", &["d4a1"]);
    assert_eq!(trigger(&hits, Theme::AttackingWithdrawal), Some(0));

    let hits = run("4k3/8/8/8/8/4b3/8/4K3 b - - 0 1", &["e3h6"]);
    assert_eq!(trigger(&hits, Theme::AttackingWithdrawal), Some(0));
}

#[test]
fn attacking_withdrawal_negatives() {
    // The retreat coincides with the evaluation dropping: defensive.
    let hits = run_ctx(
        "4k3/8/8/3B4/8/8/8/4K3 w - - 0 1",
        &["d5b3"],
        ThemeContext::new(vec![1.0, 0.4]),
    );
    assert_eq!(trigger(&hits, Theme::AttackingWithdrawal), None);

    // Captures are not withdrawals.
    let hits = run("4k3/8/8/3B4/8/1p6/8/4K3 w - - 0 1", &["d5b3"]);
    assert_eq!(trigger(&hits, Theme::AttackingWithdrawal), None);

    // Approaching the enemy king.
    let hits = run("4k3/8/8/3B4/8/8/8/4K3 w - - 0 1", &["d5e6"]);
    assert_eq!(trigger(&hits, Theme::AttackingWithdrawal), None);
}

#[test]
fn fork_positives() {
    // Knight forks king and queen.
    let hits = run("4k3/1q6/8/8/2N5/8/8/4K3 w - - 0 1", &["c4d6"]);
    assert_eq!(trigger(&hits, Theme::Fork), Some(0));

    // Pawn push hits two rooks.
    let hits = run("4k3/2r1r3/8/3P4/8/8/8/6K1 w - - 0 1", &["d5d6"]);
    assert_eq!(trigger(&hits, Theme::Fork), Some(0));

    // Queen centralizes against two loose minors.
    let hits = run("4k3/8/1b3n2/8/8/8/8/Q3K3 w - - 0 1", &["a1d4"]);
    assert_eq!(trigger(&hits, Theme::Fork), Some(0));
}

#[test]
fn fork_negatives() {
    // Both minors defended and worth less than the queen.
    let hits = run("4k3/2p3p1/1b3n2/8/8/8/8/Q3K3 w - - 0 1", &["a1d4"]);
    assert_eq!(trigger(&hits, Theme::Fork), None);

    // Only one target.
    let hits = run("4k3/8/1b6/8/8/8/8/Q3K3 w - - 0 1", &["a1d4"]);
    assert_eq!(trigger(&hits, Theme::Fork), None);

    // Attacks nothing.
    let hits = run("4k3/8/8/8/8/8/8/Q3K3 w - - 0 1", &["a1b1"]);
    assert_eq!(trigger(&hits, Theme::Fork), None);
}

#[test]
fn pin_positives() {
    // Rook pins the queen to the king.
    let hits = run("4k3/8/8/4q3/8/8/8/R6K w - - 0 1", &["a1e1"]);
    assert_eq!(trigger(&hits, Theme::Pin), Some(0));

    // Fianchetto-style bishop pin.
    let hits = run("8/1k6/2n5/8/8/8/8/4KB2 w - - 0 1", &["f1g2"]);
    assert_eq!(trigger(&hits, Theme::Pin), Some(0));

    // Black queen pins a rook down the file.
    let hits = run("4k3/8/8/8/7q/3R4/8/3K4 b - - 0 1", &["h4d4"]);
    assert_eq!(trigger(&hits, Theme::Pin), Some(0));
}

#[test]
fn pin_negatives() {
    // The piece behind is a rook, not the king: no absolute pin.
    let hits = run("6k1/8/4r3/4q3/8/8/8/R6K w - - 0 1", &["a1e1"]);
    assert_eq!(trigger(&hits, Theme::Pin), None);

    // Two pieces shield the king.
    let hits = run("4k3/8/8/4q3/4n3/8/8/R6K w - - 0 1", &["a1e1"]);
    assert_eq!(trigger(&hits, Theme::Pin), None);

    // Knights cannot pin.
    let hits = run("4k3/8/8/8/8/8/8/4K1N1 w - - 0 1", &["g1f3"]);
    assert_eq!(trigger(&hits, Theme::Pin), None);
}

#[test]
fn booklet_line_triggers_underpromotion_and_sacrifice() {
    let fen = "QR3nk1/p4pp1/7p/6q1/8/2PB3P/r4p1K/5R2 b - - 0 1";
    let pv = ["g5g1", "f1g1", "f2f1n", "h2h1", "a2h2"];
    let hits = run(fen, &pv);
    assert_eq!(trigger(&hits, Theme::Underpromotion), Some(2));
    assert_eq!(trigger(&hits, Theme::Sacrifice), Some(0));
    // The final position really is mate.
    let mut pos = Position::from_fen(fen).unwrap();
    for m in pv {
        pos = pos.apply_move(Move::from_uci(m).unwrap()).unwrap();
    }
    assert!(pos.is_checkmate());
}

#[test]
fn bare_kings_shuffle_has_no_themes() {
    let hits = run_ctx(
        "4k3/8/8/8/8/8/8/4K3 w - - 0 1",
        &["e1e2", "e8e7"],
        ThemeContext::new(vec![0.5, 0.5, 0.5]),
    );
    assert!(hits.is_empty(), "unexpected hits: {hits:?}");
}

#[test]
fn detect_errors() {
    let p = Position::startpos();
    let bad = [Move::from_uci("e2e5").unwrap()];
    assert!(matches!(
        detect(&p, &bad, &ThemeContext::assume_winning(1), &ThemeConfig::default()),
        Err(ThemeError::IllegalPv { ply: 0, .. })
    ));
    assert!(matches!(
        detect(&p, &[], &ThemeContext::assume_winning(0), &ThemeConfig::default()),
        Err(ThemeError::EmptyPv)
    ));
    let ok = [Move::from_uci("e2e4").unwrap()];
    assert!(matches!(
        detect(&p, &ok, &ThemeContext::new(vec![0.5]), &ThemeConfig::default()),
        Err(ThemeError::ContextLength { expected: 2, got: 1 })
    ));
}

#[test]
fn hits_are_pure_and_repeatable() {
    let fen = "QR3nk1/p4pp1/7p/6q1/8/2PB3P/r4p1K/5R2 b - - 0 1";
    let pv = ["g5g1", "f1g1", "f2f1n", "h2h1", "a2h2"];
    let a = run(fen, &pv);
    let b = run(fen, &pv);
    assert_eq!(a, b);
    assert!(themes(&a).len() >= 2);
}
