//! On-disk formats besides JSONL: weight maps, the golden-set CSV,
//! FEN-per-line corpora, and the entropy-model table.

use std::path::Path;

use anyhow::{bail, Context, Result};

use puzzleforge_core::chess::Position;
use puzzleforge_core::counterintuit::{Feature, GoldenItem, GoldenSplit, WeightVector, FEATURE_COUNT};
use puzzleforge_core::novelty::EntropyModel;

/// Loads a flat `name = value` weights file, grid-validated.
pub fn load_weights(path: &Path) -> Result<WeightVector> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading weights {}", path.display()))?;
    let mut values = [0.0f64; FEATURE_COUNT];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("weights line {} is not key = value", lineno + 1))?;
        let feature = Feature::from_name(key.trim())
            .with_context(|| format!("unknown weight name {}", key.trim()))?;
        values[feature.index()] = value
            .trim()
            .parse()
            .with_context(|| format!("weights line {}", lineno + 1))?;
    }
    WeightVector::from_values(values).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Writes every weight, zeros included, so the file doubles as the full
/// feature inventory.
pub fn save_weights(path: &Path, weights: &WeightVector) -> Result<()> {
    let mut out = String::new();
    for feature in Feature::ALL {
        out.push_str(&format!("{} = {}\n", feature.name(), weights.get(feature)));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Golden-set CSV columns: fen, label (positive|negative), split
/// (TRAIN|TEST). Rows whose FEN does not parse are reported, not dropped
/// silently.
pub struct GoldenSet {
    pub items: Vec<GoldenItem>,
    /// (row number, fen, problem) for rows that failed to parse.
    pub flagged: Vec<(usize, String, String)>,
}

pub fn load_golden(path: &Path) -> Result<GoldenSet> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening golden set {}", path.display()))?;
    let headers = reader.headers()?.clone();
    for required in ["fen", "label", "split"] {
        if !headers.iter().any(|h| h == required) {
            bail!("golden set is missing the {required} column");
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked");
    let (fen_col, label_col, split_col) = (col("fen"), col("label"), col("split"));

    let mut items = Vec::new();
    let mut flagged = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let fen = record.get(fen_col).unwrap_or("").to_string();
        let positive = match record.get(label_col) {
            Some("positive") => true,
            Some("negative") => false,
            other => {
                flagged.push((row + 2, fen, format!("bad label {other:?}")));
                continue;
            }
        };
        let split = match record.get(split_col) {
            Some("TRAIN") => GoldenSplit::Train,
            Some("TEST") => GoldenSplit::Test,
            other => {
                flagged.push((row + 2, fen, format!("bad split {other:?}")));
                continue;
            }
        };
        if let Err(e) = Position::from_fen(&fen) {
            flagged.push((row + 2, fen, format!("unparseable fen: {e}")));
            continue;
        }
        items.push(GoldenItem {
            fen,
            positive,
            split,
        });
    }
    if items.is_empty() {
        bail!("golden set {} contains no usable rows", path.display());
    }
    Ok(GoldenSet { items, flagged })
}

/// FEN-per-line corpus; '#' comments and blank lines skipped. Returns the
/// parsed positions and the (line, error) pairs that failed.
pub fn load_fen_corpus(path: &Path) -> Result<(Vec<Position>, Vec<(usize, String)>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    let mut positions = Vec::new();
    let mut failed = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match Position::from_fen(line) {
            Ok(p) => positions.push(p),
            Err(e) => failed.push((lineno + 1, format!("{e}"))),
        }
    }
    Ok((positions, failed))
}

pub fn load_entropy_model(path: &Path) -> Result<EntropyModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading entropy model {}", path.display()))?;
    EntropyModel::from_text(&text).map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn save_entropy_model(path: &Path, model: &EntropyModel) -> Result<()> {
    std::fs::write(path, model.to_text())
        .with_context(|| format!("writing entropy model {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn weights_round_trip_and_grid_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.txt");
        let weights = WeightVector::paper_config();
        save_weights(&path, &weights).unwrap();
        let loaded = load_weights(&path).unwrap();
        assert_eq!(loaded, weights);

        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "v_cp_move_depth = 0.85").unwrap();
        drop(f);
        assert!(load_weights(&path).is_err());

        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "made_up_feature = 0.1").unwrap();
        drop(f);
        assert!(load_weights(&path).is_err());
    }

    #[test]
    fn golden_csv_loads_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("golden.csv");
        std::fs::write(
            &path,
            "fen,label,split\n\
             \"rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1\",positive,TRAIN\n\
             \"4k3/8/8/8/8/8/8/4K3 w - - 0 1\",negative,TEST\n\
             \"r1/bogus w - - 0 1\",positive,TEST\n",
        )
        .unwrap();
        let golden = load_golden(&path).unwrap();
        assert_eq!(golden.items.len(), 2);
        assert_eq!(golden.flagged.len(), 1);
        assert!(golden.flagged[0].2.contains("unparseable"));
        assert_eq!(golden.items[0].split, GoldenSplit::Train);
        assert!(golden.items[0].positive);
    }

    #[test]
    fn fen_corpus_counts_failures() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.fens");
        std::fs::write(
            &path,
            "# comment\n\
             rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1\n\
             \n\
             broken\n",
        )
        .unwrap();
        let (positions, failed) = load_fen_corpus(&path).unwrap();
        assert_eq!(positions.len(), 1);
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].0, 4);
    }
}
