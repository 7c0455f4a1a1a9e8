//! End-to-end candidate scoring: uniqueness, evaluation traces, feature
//! extraction and the outcome reward for a single position, over one
//! exclusively owned engine session.

use alloc::string::String;
use alloc::vec::Vec;

use crate::chess::{Move, Position};
use crate::counterintuit::{
    qualify, score, static_features, trace_features, Feature, FeatureVector, WeightVector,
};
use crate::engine::{analyze_trace, Budget, BudgetKind, Engine, EngineError};
use crate::evolve::FitnessScorer;
use crate::novelty::{outcome_reward, ScoredPosition};
use crate::themes::{detect, ThemeConfig, ThemeContext, ThemeHit};
use crate::uniqueness::{check_uniqueness, UniquenessConfig, UniquenessVerdict};

#[derive(Clone, Debug)]
pub struct ScoringConfig {
    pub uniqueness: UniquenessConfig,
    pub weights: WeightVector,
    pub tau_cnt: f64,
    /// Stability tolerance for the value critical point.
    pub stability_tau: f64,
    /// Depth checkpoints of the primary trace; strictly increasing.
    pub depth_schedule: Vec<u64>,
    /// Optional parallel traces over other budget dimensions.
    pub nodes_schedule: Option<Vec<u64>>,
    pub time_schedule: Option<Vec<u64>>,
    pub themes: ThemeConfig,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            uniqueness: UniquenessConfig::default(),
            weights: WeightVector::paper_config(),
            tau_cnt: 0.1,
            stability_tau: 0.05,
            depth_schedule: (1..=20).collect(),
            nodes_schedule: None,
            time_schedule: None,
            themes: ThemeConfig::default(),
        }
    }
}

/// Everything the pipeline learns about one legal candidate.
#[derive(Clone, Debug)]
pub struct CandidateVerdict {
    pub position: Position,
    pub uniqueness: UniquenessVerdict,
    /// The move all counter-intuitiveness features describe: the solution
    /// line's first move, or the engine's root choice when not unique.
    pub solution: Move,
    pub features: FeatureVector,
    pub r_cnt: f64,
    pub i_cnt: bool,
    pub census_ok: bool,
    /// Outcome reward before diversity filtering.
    pub outcome: i8,
    pub themes: Vec<ThemeHit>,
}

impl CandidateVerdict {
    /// Buffer/JSONL form; entropy and gate distances are filled in by the
    /// diversity stage.
    pub fn to_scored(&self, source: &str, fingerprint: &str) -> ScoredPosition {
        ScoredPosition {
            position: self.position.clone(),
            solution_pv: self.uniqueness.solution_pv.clone(),
            r_uni: self.uniqueness.r_uni,
            r_cnt: self.r_cnt,
            reward: self.outcome,
            entropy: 0.0,
            min_board_dist: None,
            min_pv_dist: None,
            source: String::from(source),
            engine_fingerprint: String::from(fingerprint),
        }
    }
}

/// One engine session plus the scoring configuration.
pub struct CandidateScorer<E> {
    engine: E,
    cfg: ScoringConfig,
}

impl<E: Engine> CandidateScorer<E> {
    pub fn new(engine: E, cfg: ScoringConfig) -> CandidateScorer<E> {
        CandidateScorer { engine, cfg }
    }

    pub fn config(&self) -> &ScoringConfig {
        &self.cfg
    }

    pub fn engine_mut(&mut self) -> &mut E {
        &mut self.engine
    }

    /// Engine identity plus budget, stamped into every record so
    /// mixed-engine corpora stay detectable.
    pub fn fingerprint(&self) -> String {
        alloc::format!(
            "{} @ {} multipv {}",
            self.engine.identity(),
            self.cfg.uniqueness.budget,
            self.cfg.uniqueness.multipv
        )
    }

    /// Full verdict for a legal position with at least one legal move.
    pub fn score_position(&mut self, p: &Position) -> Result<CandidateVerdict, EngineError> {
        let uniqueness = check_uniqueness(p, &mut self.engine, &self.cfg.uniqueness)?;
        let solution = uniqueness
            .solution_pv
            .first()
            .copied()
            .or_else(|| uniqueness.root_analysis.best().map(|e| e.mv))
            .ok_or_else(|| {
                EngineError::Invalid(String::from("no solution move available"))
            })?;

        let mut features = FeatureVector::default();
        let mut shallow_solution_winrate = None;
        let dims: [(BudgetKind, Option<&Vec<u64>>, [Feature; 3]); 3] = [
            (
                BudgetKind::Depth,
                Some(&self.cfg.depth_schedule),
                [Feature::AucDepth, Feature::CpValueDepth, Feature::CpMoveDepth],
            ),
            (
                BudgetKind::Nodes,
                self.cfg.nodes_schedule.as_ref(),
                [Feature::AucNodes, Feature::CpValueNodes, Feature::CpMoveNodes],
            ),
            (
                BudgetKind::MoveTime,
                self.cfg.time_schedule.as_ref(),
                [Feature::AucTime, Feature::CpValueTime, Feature::CpMoveTime],
            ),
        ];
        for (kind, schedule, [auc, cp_value, cp_move]) in dims {
            let schedule = match schedule {
                Some(s) if !s.is_empty() => s,
                _ => continue,
            };
            let trace = analyze_trace(&mut self.engine, p, solution, kind, schedule)?;
            let tf = trace_features(&trace, self.cfg.stability_tau)
                .map_err(|e| EngineError::Invalid(alloc::format!("{e}")))?;
            if kind == BudgetKind::Depth {
                features.set(Feature::Gap, tf.gap);
                shallow_solution_winrate = Some(trace.first_value());
            }
            features.set(auc, tf.auc);
            features.set(cp_value, tf.cp_value);
            features.set(cp_move, tf.cp_move);
        }

        let shallow = match shallow_solution_winrate {
            Some(w) => w,
            None => {
                // No depth trace configured: query the solution move at the
                // smallest depth budget directly.
                self.engine
                    .evaluate_move(p, solution, Budget::Depth(1))?
                    .winrate()
            }
        };
        let statics = static_features(p, solution, &uniqueness.root_analysis, shallow);
        for f in [
            Feature::TopMoveGap,
            Feature::TopMoveMisevalGap,
            Feature::NegCaptureMaterial,
            Feature::NegPromoteMaterial,
            Feature::GivingCheck,
            Feature::MateInOne,
            Feature::InCheck,
        ] {
            features.set(f, statics.get(f));
        }

        let r_cnt = score(&features, &self.cfg.weights);
        let i_cnt = qualify(r_cnt, self.cfg.tau_cnt);
        let census_ok = !p.piece_census().exceeds_initial();
        let outcome = outcome_reward(true, uniqueness.is_unique, i_cnt, census_ok);

        let themes = if uniqueness.is_unique && !uniqueness.solution_pv.is_empty() {
            detect(
                p,
                &uniqueness.solution_pv,
                &ThemeContext::from_verdict(&uniqueness),
                &self.cfg.themes,
            )
            .unwrap_or_default()
        } else {
            Vec::new()
        };

        Ok(CandidateVerdict {
            position: p.clone(),
            uniqueness,
            solution,
            features,
            r_cnt,
            i_cnt,
            census_ok,
            outcome,
            themes,
        })
    }
}

impl<E: Engine> FitnessScorer for CandidateScorer<E> {
    fn score_candidate(&mut self, p: &Position) -> Result<ScoredPosition, EngineError> {
        let fingerprint = self.fingerprint();
        let verdict = self.score_position(p)?;
        Ok(verdict.to_scored("evolve", &fingerprint))
    }
}
