//! Novelty and diversity machinery: edit distances over the token
//! encoding, the outcome and diversity-filtered rewards, the gate a
//! qualified puzzle must pass to count as novel, and nearest-neighbor
//! evidence lookup.

mod buffer;
mod entropy;

pub use buffer::{BufferError, ReplayBuffer};
pub use entropy::{sequence_entropy, EntropyModel, TokenDistribution};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::chess::{Move, Position, TokenSeq77};

/// Generic Levenshtein distance over token slices.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ta) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = prev + usize::from(ta != tb);
            prev = row[j + 1];
            row[j + 1] = sub.min(prev + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// Board distance: Levenshtein over the 65 board+side tokens of the
/// expanded encoding. Run-length digits are deliberately absent so the
/// distance tracks the number of piece changes.
pub fn board_distance(a: &Position, b: &Position) -> u32 {
    board_token_distance(&a.encode77(), &b.encode77())
}

pub fn board_token_distance(a: &TokenSeq77, b: &TokenSeq77) -> u32 {
    levenshtein(a.board_tokens(), b.board_tokens()) as u32
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NoveltyError {
    EmptyPv,
    EmptyCorpus,
}

impl fmt::Display for NoveltyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoveltyError::EmptyPv => write!(f, "principal variation is empty"),
            NoveltyError::EmptyCorpus => write!(f, "corpus is empty"),
        }
    }
}

impl core::error::Error for NoveltyError {}

/// Normalized PV distance: move-token Levenshtein after truncating both
/// lines to `truncation` plies, divided by the longer truncated length.
pub fn pv_distance(
    pv_a: &[Move],
    pv_b: &[Move],
    truncation: usize,
) -> Result<f64, NoveltyError> {
    if pv_a.is_empty() || pv_b.is_empty() {
        return Err(NoveltyError::EmptyPv);
    }
    let ta = &pv_a[..pv_a.len().min(truncation.max(1))];
    let tb = &pv_b[..pv_b.len().min(truncation.max(1))];
    let dist = levenshtein(ta, tb) as f64;
    Ok(dist / ta.len().max(tb.len()) as f64)
}

/// Thresholds and truncations of the diversity filters.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceConfig {
    pub tau_board: u32,
    pub tau_pv: f64,
    /// PV truncation for benchmark / nearest-neighbor reporting.
    pub pv_truncation_eval: usize,
    /// PV truncation for the reward gate (a first-move check by default).
    pub pv_truncation_filter: usize,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            tau_board: 6,
            tau_pv: 1.0,
            pv_truncation_eval: 6,
            pv_truncation_filter: 1,
        }
    }
}

/// Outcome reward tier for a generated position: -2 illegal, 0 legal but
/// unqualified (or piece-count inflated), +1 for a unique counter-intuitive
/// puzzle within the standard piece budget.
pub fn outcome_reward(legal: bool, is_unique: bool, i_cnt: bool, census_ok: bool) -> i8 {
    if !legal {
        -2
    } else if is_unique && i_cnt && census_ok {
        1
    } else {
        0
    }
}

/// Diversity-filtered reward: only qualified positions that also pass the
/// novelty gate keep their +1; every other legal position drops to 0.
pub fn diversity_reward(outcome: i8, gate_pass: bool) -> i8 {
    match outcome {
        1 if gate_pass => 1,
        -2 => -2,
        _ => 0,
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GateFailure {
    Board,
    Pv,
    Entropy,
}

impl GateFailure {
    pub fn name(self) -> &'static str {
        match self {
            GateFailure::Board => "board",
            GateFailure::Pv => "pv",
            GateFailure::Entropy => "entropy",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateResult {
    pub pass: bool,
    pub failed: Option<GateFailure>,
    /// Smallest board distance to any comparison position, when any exist.
    pub min_board_dist: Option<u32>,
    /// Smallest filter-truncated PV distance, when comparable.
    pub min_pv_dist: Option<f64>,
}

/// A fully scored candidate as stored in replay/evolution buffers and the
/// JSONL output.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPosition {
    pub position: Position,
    pub solution_pv: Vec<Move>,
    pub r_uni: f64,
    pub r_cnt: f64,
    /// Outcome reward tier (-2, 0 or +1).
    pub reward: i8,
    pub entropy: f64,
    pub min_board_dist: Option<u32>,
    pub min_pv_dist: Option<f64>,
    pub source: String,
    pub engine_fingerprint: String,
}

/// Runs the novelty gate for a qualified candidate against its batch peers
/// and a replay-buffer subsample.
///
/// Passing requires every comparison board distance at or above
/// `tau_board`, every first-line PV distance at or above `tau_pv`, and the
/// candidate's sequence entropy at or above `tau_ent`; empty comparison
/// sets pass vacuously. Callers must only submit candidates whose outcome
/// reward is +1.
pub fn diversity_gate(
    cand: &ScoredPosition,
    peers: &[&ScoredPosition],
    buffer_sample: &[&ScoredPosition],
    cfg: &DistanceConfig,
    tau_ent: f64,
) -> GateResult {
    debug_assert_eq!(cand.reward, 1, "gate applies to qualified positions");
    let cand_tokens = cand.position.encode77();

    let mut min_board: Option<u32> = None;
    let mut min_pv: Option<f64> = None;
    for other in peers.iter().chain(buffer_sample.iter()) {
        let bd = board_token_distance(&cand_tokens, &other.position.encode77());
        min_board = Some(min_board.map_or(bd, |m| m.min(bd)));
        if !cand.solution_pv.is_empty() && !other.solution_pv.is_empty() {
            let pd = pv_distance(
                &cand.solution_pv,
                &other.solution_pv,
                cfg.pv_truncation_filter,
            )
            .expect("both PVs nonempty");
            min_pv = Some(min_pv.map_or(pd, |m| m.min(pd)));
        }
    }

    let failed = if min_board.map(|d| d < cfg.tau_board).unwrap_or(false) {
        Some(GateFailure::Board)
    } else if min_pv.map(|d| d < cfg.tau_pv).unwrap_or(false) {
        Some(GateFailure::Pv)
    } else if cand.entropy < tau_ent {
        Some(GateFailure::Entropy)
    } else {
        None
    };

    GateResult {
        pass: failed.is_none(),
        failed,
        min_board_dist: min_board,
        min_pv_dist: min_pv,
    }
}

/// Linear-scan nearest-neighbor index over a position corpus, token
/// encodings precomputed. Ties resolve by corpus order.
pub struct NeighborIndex {
    items: Vec<(Position, TokenSeq77)>,
}

impl NeighborIndex {
    pub fn build(corpus: impl IntoIterator<Item = Position>) -> NeighborIndex {
        NeighborIndex {
            items: corpus
                .into_iter()
                .map(|p| {
                    let tokens = p.encode77();
                    (p, tokens)
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn position(&self, index: usize) -> &Position {
        &self.items[index].0
    }

    /// The `k` corpus entries closest to `p` by board distance, as
    /// (corpus index, distance) pairs sorted ascending.
    pub fn nearest(&self, p: &Position, k: usize) -> Result<Vec<(usize, u32)>, NoveltyError> {
        if self.items.is_empty() {
            return Err(NoveltyError::EmptyCorpus);
        }
        let tokens = p.encode77();
        let mut scored: Vec<(usize, u32)> = self
            .items
            .iter()
            .enumerate()
            .map(|(i, (_, other))| (i, board_token_distance(&tokens, other)))
            .collect();
        scored.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::Position;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mv(s: &str) -> Move {
        Move::from_uci(s).unwrap()
    }

    #[test]
    fn levenshtein_kernel() {
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
        assert_eq!(levenshtein(b"", b"abc"), 3);
        assert_eq!(levenshtein(b"abc", b""), 3);
        assert_eq!(levenshtein(b"abc", b"abc"), 0);
    }

    #[test]
    fn levenshtein_metric_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sample = |rng: &mut ChaCha8Rng| -> Vec<u8> {
            let len = rng.gen_range(0..12);
            (0..len).map(|_| rng.gen_range(b'a'..=b'd')).collect()
        };
        for _ in 0..200 {
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let c = sample(&mut rng);
            let ab = levenshtein(&a, &b);
            assert_eq!(ab, levenshtein(&b, &a));
            assert_eq!(ab == 0, a == b);
            assert!(ab <= levenshtein(&a, &c) + levenshtein(&c, &b));
        }
    }

    #[test]
    fn board_distance_counts_piece_changes() {
        let p = Position::startpos();
        assert_eq!(board_distance(&p, &p), 0);
        // Same side to move, one knight displaced: two cell substitutions.
        let shifted =
            Position::from_fen("rnbqkbnr/pppppppp/8/8/8/5N2/PPPPPPPP/RNBQKB1R w KQkq - 0 1")
                .unwrap();
        assert_eq!(board_distance(&p, &shifted), 2);
        // Playing the move also flips the side token, one more edit.
        let played = p.apply_move(mv("g1f3")).unwrap();
        assert_eq!(board_distance(&p, &played), 3);
    }

    #[test]
    fn pv_distances() {
        let a = [mv("e2e4"), mv("g1f3")];
        let b = [mv("e2e4"), mv("b1c3")];
        assert_eq!(pv_distance(&a, &a, 6).unwrap(), 0.0);
        assert_eq!(pv_distance(&a, &b, 6).unwrap(), 0.5);
        // Fully disjoint, equal length: all substitutions.
        let c = [mv("d2d4"), mv("c2c4")];
        assert_eq!(pv_distance(&a, &c, 6).unwrap(), 1.0);
        // Filter truncation 1 compares first moves only.
        assert_eq!(pv_distance(&a, &b, 1).unwrap(), 0.0);
        assert_eq!(pv_distance(&a, &c, 1).unwrap(), 1.0);
        assert!(matches!(
            pv_distance(&[], &a, 6),
            Err(NoveltyError::EmptyPv)
        ));
    }

    #[test]
    fn reward_truth_table_is_total() {
        for legal in [false, true] {
            for unique in [false, true] {
                for i_cnt in [false, true] {
                    for census_ok in [false, true] {
                        let r = outcome_reward(legal, unique, i_cnt, census_ok);
                        let expected = if !legal {
                            -2
                        } else if unique && i_cnt && census_ok {
                            1
                        } else {
                            0
                        };
                        assert_eq!(r, expected);
                        for gate in [false, true] {
                            let d = diversity_reward(r, gate);
                            let expected_div = if r == 1 && gate {
                                1
                            } else if r == -2 {
                                -2
                            } else {
                                0
                            };
                            assert_eq!(d, expected_div);
                        }
                    }
                }
            }
        }
    }

    fn scored(fen: &str, pv: &[&str]) -> ScoredPosition {
        ScoredPosition {
            position: Position::from_fen(fen).unwrap(),
            solution_pv: pv.iter().map(|s| mv(s)).collect(),
            r_uni: 0.8,
            r_cnt: 0.5,
            reward: 1,
            entropy: 2.0,
            min_board_dist: None,
            min_pv_dist: None,
            source: String::from("test"),
            engine_fingerprint: String::new(),
        }
    }

    #[test]
    fn gate_fails_on_identical_buffer_member() {
        let cand = scored("4k3/8/8/8/8/8/8/R3K3 w - - 0 1", &["a1a8"]);
        let dup = cand.clone();
        let cfg = DistanceConfig::default();
        let result = diversity_gate(&cand, &[], &[&dup], &cfg, 0.0);
        assert!(!result.pass);
        assert_eq!(result.failed, Some(GateFailure::Board));
        assert_eq!(result.min_board_dist, Some(0));
    }

    #[test]
    fn gate_fails_on_shared_first_move() {
        let cand = scored("4k3/8/8/8/8/8/8/R3K3 w - - 0 1", &["a1a8", "e8d7"]);
        // Board-distant peer with the same first solution move.
        let peer = scored(
            "rnbqkbnr/pppppppp/8/8/8/8/8/R3K3 w - - 0 1",
            &["a1a8", "e8d7"],
        );
        let cfg = DistanceConfig::default();
        let result = diversity_gate(&cand, &[&peer], &[], &cfg, 0.0);
        assert!(result.min_board_dist.unwrap() >= cfg.tau_board);
        assert!(!result.pass);
        assert_eq!(result.failed, Some(GateFailure::Pv));
        assert_eq!(result.min_pv_dist, Some(0.0));
    }

    #[test]
    fn empty_comparisons_leave_only_the_entropy_bar() {
        let cand = scored("4k3/8/8/8/8/8/8/R3K3 w - - 0 1", &["a1a8"]);
        let cfg = DistanceConfig::default();
        let pass = diversity_gate(&cand, &[], &[], &cfg, 1.5);
        assert!(pass.pass);
        assert_eq!(pass.min_board_dist, None);
        let fail = diversity_gate(&cand, &[], &[], &cfg, 2.5);
        assert!(!fail.pass);
        assert_eq!(fail.failed, Some(GateFailure::Entropy));
    }

    #[test]
    fn gate_monotone_in_thresholds() {
        let cand = scored("4k3/8/8/8/8/8/8/R3K3 w - - 0 1", &["a1a8", "e8d7"]);
        let peer = scored("4k3/8/8/8/8/2B5/8/R3K3 w - - 0 1", &["c3d4", "e8d7"]);
        for tau_board in [0, 2, 4, 6, 9] {
            for tau_pv in [0.0, 0.5, 1.0] {
                for tau_ent in [0.0, 2.0, 3.0] {
                    let loose = DistanceConfig {
                        tau_board,
                        tau_pv,
                        ..DistanceConfig::default()
                    };
                    let tight = DistanceConfig {
                        tau_board: tau_board + 1,
                        tau_pv: tau_pv + 0.1,
                        ..DistanceConfig::default()
                    };
                    let loose_pass =
                        diversity_gate(&cand, &[&peer], &[], &loose, tau_ent).pass;
                    let tight_pass =
                        diversity_gate(&cand, &[&peer], &[], &tight, tau_ent + 0.5).pass;
                    assert!(!tight_pass || loose_pass, "raising thresholds never rescues");
                }
            }
        }
    }

    #[test]
    fn neighbors_rank_by_distance_with_corpus_order_ties() {
        let corpus: Vec<Position> = [
            "4k3/8/8/8/8/8/8/R3K3 w - - 0 1",
            "4k3/8/8/8/8/8/8/1R2K3 w - - 0 1",
            "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",
        ]
        .iter()
        .map(|f| Position::from_fen(f).unwrap())
        .collect();
        let index = NeighborIndex::build(corpus.clone());

        let hits = index.nearest(&corpus[0], 2).unwrap();
        assert_eq!(hits[0], (0, 0));
        assert_eq!(hits[1].0, 1);

        // k larger than the corpus returns the whole corpus sorted.
        let all = index.nearest(&corpus[0], 10).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all.windows(2).all(|w| w[0].1 <= w[1].1));

        // Indexed result equals a brute-force scan.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..20 {
            let q = crate::chess::random_legal_position(&mut rng, 4);
            let got = index.nearest(&q, 3).unwrap();
            let mut brute: Vec<(usize, u32)> = corpus
                .iter()
                .enumerate()
                .map(|(i, c)| (i, board_distance(&q, c)))
                .collect();
            brute.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
            brute.truncate(3);
            assert_eq!(got, brute);
        }

        let empty = NeighborIndex::build(Vec::new());
        assert!(matches!(
            empty.nearest(&corpus[0], 1),
            Err(NoveltyError::EmptyCorpus)
        ));
    }
}
