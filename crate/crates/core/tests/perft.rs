//! Move-generation oracle: perft node counts from the standard start
//! position against the published reference values.

use puzzleforge_core::chess::{perft, Position};

#[test]
fn perft_startpos_depths_1_to_4() {
    let start = Position::startpos();
    let expected: [(u32, u64); 4] = [(1, 20), (2, 400), (3, 8902), (4, 197_281)];
    for (depth, nodes) in expected {
        assert_eq!(perft(&start, depth), nodes, "perft depth {depth}");
    }
}
