//! Versioned JSONL record schemas: one mined record per candidate, one
//! puzzle record per ingested dataset row, plus the feature-cache rows
//! used by weight tuning.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use puzzleforge_core::chess::{Move, Position};
use puzzleforge_core::counterintuit::{Feature, FeatureVector};
use puzzleforge_core::novelty::{GateResult, ScoredPosition};
use puzzleforge_core::scoring::CandidateVerdict;
use puzzleforge_core::themes::ThemeHit;
use puzzleforge_core::uniqueness::UniquenessMode;

/// Bumped on any field change of the record schemas.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ThemeRecord {
    pub theme: String,
    pub ply: usize,
    pub detail: String,
}

impl From<&ThemeHit> for ThemeRecord {
    fn from(hit: &ThemeHit) -> ThemeRecord {
        ThemeRecord {
            theme: hit.theme.name().to_string(),
            ply: hit.trigger_ply,
            detail: hit.detail.clone(),
        }
    }
}

/// One fully processed candidate, whatever its verdict.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MinedRecord {
    pub schema: u32,
    pub id: String,
    pub fen: String,
    pub source: String,
    pub legal: bool,
    /// Parse or engine failure, when one occurred.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub is_unique: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_uni: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub solution_pv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r_cnt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub i_cnt: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub census_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outcome_reward: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub entropy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gate_pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gate_failed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_board_dist: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_pv_dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diversity_reward: Option<i8>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub themes: Vec<ThemeRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub features: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub engine: Option<String>,
}

impl MinedRecord {
    pub fn illegal(id: String, fen: String, source: &str, error: String) -> MinedRecord {
        MinedRecord {
            schema: SCHEMA_VERSION,
            id,
            fen,
            source: source.to_string(),
            legal: false,
            error: Some(error),
            is_unique: None,
            r_uni: None,
            mode: None,
            solution_pv: Vec::new(),
            r_cnt: None,
            i_cnt: None,
            census_ok: None,
            outcome_reward: Some(-2),
            entropy: None,
            gate_pass: None,
            gate_failed: None,
            min_board_dist: None,
            min_pv_dist: None,
            diversity_reward: Some(-2),
            themes: Vec::new(),
            features: None,
            engine: None,
        }
    }

    pub fn engine_failure(id: String, fen: String, source: &str, error: String) -> MinedRecord {
        MinedRecord {
            error: Some(error),
            legal: true,
            outcome_reward: None,
            diversity_reward: None,
            ..MinedRecord::illegal(id, fen, source, String::new())
        }
    }

    pub fn from_verdict(
        id: String,
        source: &str,
        verdict: &CandidateVerdict,
        entropy: f64,
        gate: Option<&GateResult>,
        diversity_reward: i8,
        engine_fingerprint: &str,
    ) -> MinedRecord {
        MinedRecord {
            schema: SCHEMA_VERSION,
            id,
            fen: verdict.position.to_fen(),
            source: source.to_string(),
            legal: true,
            error: None,
            is_unique: Some(verdict.uniqueness.is_unique),
            r_uni: Some(verdict.uniqueness.r_uni),
            mode: Some(
                match verdict.uniqueness.mode {
                    UniquenessMode::MateBranch => "mate",
                    UniquenessMode::WinrateBranch => "winrate",
                }
                .to_string(),
            ),
            solution_pv: verdict.uniqueness.solution_pv.iter().map(|m| m.uci()).collect(),
            r_cnt: Some(verdict.r_cnt),
            i_cnt: Some(verdict.i_cnt),
            census_ok: Some(verdict.census_ok),
            outcome_reward: Some(verdict.outcome),
            entropy: Some(entropy),
            gate_pass: gate.map(|g| g.pass),
            gate_failed: gate.and_then(|g| g.failed).map(|f| f.name().to_string()),
            min_board_dist: gate.and_then(|g| g.min_board_dist),
            min_pv_dist: gate.and_then(|g| g.min_pv_dist),
            diversity_reward: Some(diversity_reward),
            themes: verdict.themes.iter().map(ThemeRecord::from).collect(),
            features: Some(feature_map(&verdict.features)),
            engine: Some(engine_fingerprint.to_string()),
        }
    }

    /// Schema and cross-field consistency check.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            bail!("record schema {} != supported {}", self.schema, SCHEMA_VERSION);
        }
        if !self.legal && self.outcome_reward != Some(-2) {
            bail!("illegal record must carry outcome reward -2");
        }
        if let (Some(outcome), Some(div)) = (self.outcome_reward, self.diversity_reward) {
            let gate = self.gate_pass.unwrap_or(false);
            let expected = puzzleforge_core::novelty::diversity_reward(outcome, gate);
            if div != expected {
                bail!("diversity reward {div} inconsistent with outcome {outcome}");
            }
        }
        Ok(())
    }

    /// Buffer entry view of a qualified record.
    pub fn to_scored(&self) -> Result<ScoredPosition> {
        let position = Position::from_fen(&self.fen)
            .map_err(|e| anyhow::anyhow!("record {}: {e}", self.id))?;
        let solution_pv = self
            .solution_pv
            .iter()
            .map(|s| Move::from_uci(s).context("bad move in record"))
            .collect::<Result<Vec<Move>>>()?;
        Ok(ScoredPosition {
            position,
            solution_pv,
            r_uni: self.r_uni.unwrap_or(0.0),
            r_cnt: self.r_cnt.unwrap_or(0.0),
            reward: self.outcome_reward.unwrap_or(0),
            entropy: self.entropy.unwrap_or(0.0),
            min_board_dist: self.min_board_dist,
            min_pv_dist: self.min_pv_dist,
            source: self.source.clone(),
            engine_fingerprint: self.engine.clone().unwrap_or_default(),
        })
    }

    pub fn from_scored(id: String, scored: &ScoredPosition) -> MinedRecord {
        MinedRecord {
            schema: SCHEMA_VERSION,
            id,
            fen: scored.position.to_fen(),
            source: scored.source.clone(),
            legal: true,
            error: None,
            is_unique: Some(scored.reward == 1),
            r_uni: Some(scored.r_uni),
            mode: None,
            solution_pv: scored.solution_pv.iter().map(|m| m.uci()).collect(),
            r_cnt: Some(scored.r_cnt),
            i_cnt: None,
            census_ok: None,
            outcome_reward: Some(scored.reward),
            entropy: Some(scored.entropy),
            gate_pass: None,
            gate_failed: None,
            min_board_dist: scored.min_board_dist,
            min_pv_dist: scored.min_pv_dist,
            diversity_reward: None,
            themes: Vec::new(),
            features: None,
            engine: Some(scored.engine_fingerprint.clone()),
        }
    }
}

pub fn feature_map(features: &FeatureVector) -> BTreeMap<String, f64> {
    Feature::ALL
        .iter()
        .map(|&f| (f.name().to_string(), features.get(f)))
        .collect()
}

pub fn feature_vector(map: &BTreeMap<String, f64>) -> Result<FeatureVector> {
    let mut features = FeatureVector::default();
    for (key, &value) in map {
        let feature = Feature::from_name(key)
            .with_context(|| format!("unknown feature name {key}"))?;
        features.set(feature, value);
    }
    Ok(features)
}

/// One row of the ingested puzzle dataset, first solution move applied.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PuzzleRecord {
    pub schema: u32,
    pub id: String,
    /// Position as stored in the dataset, before the opponent's move.
    pub raw_fen: String,
    /// The actual puzzle position the solver faces.
    pub puzzle_fen: String,
    /// Remaining solution moves, solver first.
    pub solution: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rating: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub popularity: Option<i32>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub themes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_url: Option<String>,
}

/// Feature-matrix cache row: (fen, features).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FeatureRecord {
    pub fen: String,
    pub features: BTreeMap<String, f64>,
}

pub fn write_jsonl<T: Serialize>(out: &mut dyn Write, records: &[T]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut *out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        records.push(record);
    }
    Ok(records)
}
