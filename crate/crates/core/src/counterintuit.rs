//! Counter-intuitiveness features, their linear combination, and the
//! golden-set machinery that tunes the feature weights by Average
//! Precision over a discretized weight grid.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::chess::{Move, Position};
use crate::engine::{AnalysisResult, EvalTrace};

/// One slot of the feature/weight vectors.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Feature {
    /// Winrate change of the solution move between the first and last
    /// budget checkpoint.
    Gap,
    AucDepth,
    AucNodes,
    AucTime,
    /// Earliest budget from which the solution's evaluation stays within
    /// tolerance of its final value.
    CpValueDepth,
    CpValueNodes,
    CpValueTime,
    /// Earliest budget from which the engine's best move stays equal to
    /// the solution move.
    CpMoveDepth,
    CpMoveNodes,
    CpMoveTime,
    /// Winrate gap between the top and second move at full budget.
    TopMoveGap,
    /// Winrate gap of the solution move between deep and shallow search.
    TopMoveMisevalGap,
    /// Material captured by the solution move, divided by 9, negated.
    NegCaptureMaterial,
    /// Material promoted by the solution move, divided by 9, negated.
    NegPromoteMaterial,
    /// 1 when the solution move gives check.
    GivingCheck,
    /// 1 when the solution move mates immediately.
    MateInOne,
    /// 1 when the side to move starts in check.
    InCheck,
}

pub const FEATURE_COUNT: usize = 17;

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::Gap,
        Feature::AucDepth,
        Feature::AucNodes,
        Feature::AucTime,
        Feature::CpValueDepth,
        Feature::CpValueNodes,
        Feature::CpValueTime,
        Feature::CpMoveDepth,
        Feature::CpMoveNodes,
        Feature::CpMoveTime,
        Feature::TopMoveGap,
        Feature::TopMoveMisevalGap,
        Feature::NegCaptureMaterial,
        Feature::NegPromoteMaterial,
        Feature::GivingCheck,
        Feature::MateInOne,
        Feature::InCheck,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&f| f == self).expect("listed")
    }

    /// Stable key used by the weights file format.
    pub fn name(self) -> &'static str {
        match self {
            Feature::Gap => "v_gap",
            Feature::AucDepth => "v_auc_depth",
            Feature::AucNodes => "v_auc_nodes",
            Feature::AucTime => "v_auc_time",
            Feature::CpValueDepth => "v_cp_value_depth",
            Feature::CpValueNodes => "v_cp_value_nodes",
            Feature::CpValueTime => "v_cp_value_time",
            Feature::CpMoveDepth => "v_cp_move_depth",
            Feature::CpMoveNodes => "v_cp_move_nodes",
            Feature::CpMoveTime => "v_cp_move_time",
            Feature::TopMoveGap => "top_move_gap",
            Feature::TopMoveMisevalGap => "top_move_miseval_gap",
            Feature::NegCaptureMaterial => "neg_capture_material",
            Feature::NegPromoteMaterial => "neg_promote_material",
            Feature::GivingCheck => "giving_check",
            Feature::MateInOne => "mate_in_one",
            Feature::InCheck => "in_check",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Search statistics for one position, one value per [`Feature`].
#[derive(Copy, Clone, Debug, PartialEq, Default)]
pub struct FeatureVector {
    values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        self.values[f.index()]
    }

    pub fn set(&mut self, f: Feature, value: f64) {
        self.values[f.index()] = value;
    }

    pub fn as_slice(&self) -> &[f64; FEATURE_COUNT] {
        &self.values
    }

    pub fn from_values(values: [f64; FEATURE_COUNT]) -> FeatureVector {
        FeatureVector { values }
    }
}

/// Per-feature weights constrained to the 0.1-step grid in [0, 1].
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WeightVector {
    values: [f64; FEATURE_COUNT],
}

pub const WEIGHT_GRID_STEP: f64 = 0.1;

impl WeightVector {
    pub fn zero() -> WeightVector {
        WeightVector {
            values: [0.0; FEATURE_COUNT],
        }
    }

    /// The selected configuration: depth critical-point of the solution
    /// move at 0.8 plus negated capture material at 0.1.
    pub fn paper_config() -> WeightVector {
        let mut w = WeightVector::zero();
        w.values[Feature::CpMoveDepth.index()] = 0.8;
        w.values[Feature::NegCaptureMaterial.index()] = 0.1;
        w
    }

    /// Validates grid alignment: every weight in {0.0, 0.1, ..., 1.0}.
    pub fn from_values(values: [f64; FEATURE_COUNT]) -> Result<WeightVector, CounterintuitError> {
        for (i, &v) in values.iter().enumerate() {
            let steps = v / WEIGHT_GRID_STEP;
            let rounded = libm::round(steps);
            if !(0.0..=10.000001).contains(&steps) || libm::fabs(steps - rounded) > 1e-9 {
                return Err(CounterintuitError::OffGridWeight {
                    name: Feature::ALL[i].name(),
                    value: v,
                });
            }
        }
        Ok(WeightVector { values })
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.values[f.index()]
    }

    pub fn set_grid_steps(&mut self, f: Feature, tenths: u8) {
        debug_assert!(tenths <= 10);
        self.values[f.index()] = tenths as f64 * WEIGHT_GRID_STEP;
    }

    pub fn as_slice(&self) -> &[f64; FEATURE_COUNT] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CounterintuitError {
    /// Trace features need at least two checkpoints.
    ShortTrace(usize),
    /// Average precision of a ranking with no positive items.
    NoPositives,
    /// Weight tuning with zero trials.
    NoTrials,
    OffGridWeight { name: &'static str, value: f64 },
    /// Correlation over mismatched, short, or constant inputs.
    Degenerate(String),
}

impl fmt::Display for CounterintuitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterintuitError::ShortTrace(n) => {
                write!(f, "trace has {n} checkpoints, need at least 2")
            }
            CounterintuitError::NoPositives => write!(f, "ranking contains no positive items"),
            CounterintuitError::NoTrials => write!(f, "weight search needs at least one trial"),
            CounterintuitError::OffGridWeight { name, value } => {
                write!(f, "weight {name}={value} is not on the 0.1 grid")
            }
            CounterintuitError::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
        }
    }
}

impl core::error::Error for CounterintuitError {}

/// Through-time statistics of one evaluation trace.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TraceFeatures {
    pub gap: f64,
    pub auc: f64,
    pub cp_value: f64,
    pub cp_move: f64,
}

/// Extracts the evaluation-difference statistics from a trace.
///
/// `gap` is |V_T - V_0|; `auc` the trapezoidal integral of |V_T - V_t|
/// normalized by the schedule span; the critical points are the earliest
/// budgets from which the value (resp. the best move) stays stable
/// through every later checkpoint, normalized by the largest budget. A
/// best move that never settles on the solution clamps `cp_move` to 1.
pub fn trace_features(trace: &EvalTrace, tau: f64) -> Result<TraceFeatures, CounterintuitError> {
    let points = &trace.checkpoints;
    if points.len() < 2 {
        return Err(CounterintuitError::ShortTrace(points.len()));
    }
    let v_final = trace.final_value();
    let t_first = points.first().expect("len >= 2").t as f64;
    let t_max = points.last().expect("len >= 2").t as f64;

    let gap = libm::fabs(v_final - trace.first_value());

    let mut area = 0.0;
    for w in points.windows(2) {
        let f0 = libm::fabs(v_final - w[0].value);
        let f1 = libm::fabs(v_final - w[1].value);
        area += (f0 + f1) / 2.0 * (w[1].t - w[0].t) as f64;
    }
    let auc = area / (t_max - t_first);

    // Earliest index from which the predicate holds at every later point.
    let stable_from = |ok: &dyn Fn(&crate::engine::TraceCheckpoint) -> bool| -> Option<f64> {
        let mut idx = None;
        for (i, p) in points.iter().enumerate() {
            if ok(p) {
                idx.get_or_insert(i);
            } else {
                idx = None;
            }
        }
        idx.map(|i| points[i].t as f64)
    };

    let cp_value = stable_from(&|p| libm::fabs(v_final - p.value) <= tau)
        .map(|t| t / t_max)
        .unwrap_or(1.0);
    let cp_move = stable_from(&|p| p.best_move == trace.solution)
        .map(|t| t / t_max)
        .unwrap_or(1.0);

    Ok(TraceFeatures {
        gap,
        auc,
        cp_value,
        cp_move,
    })
}

/// Computes the trace-independent features of a solution move.
///
/// `deep` is the full-budget multi-variation analysis of the position;
/// `shallow_solution_winrate` the solution move's winrate at the shallow
/// budget.
pub fn static_features(
    p: &Position,
    solution: Move,
    deep: &AnalysisResult,
    shallow_solution_winrate: f64,
) -> FeatureVector {
    let mut f = FeatureVector::default();

    let top_gap = match (deep.best(), deep.second()) {
        (Some(best), Some(second)) => best.winrate() - second.winrate(),
        (Some(_), None) => 1.0,
        (None, _) => 0.0,
    };
    f.set(Feature::TopMoveGap, top_gap);

    let deep_solution_w = deep
        .evals
        .iter()
        .find(|e| e.mv == solution)
        .or(deep.best())
        .map(|e| e.winrate())
        .unwrap_or(0.5);
    f.set(
        Feature::TopMoveMisevalGap,
        libm::fabs(deep_solution_w - shallow_solution_winrate),
    );

    let captured = match p.piece_at(solution.to) {
        Some(piece) => piece.kind.material(),
        // En passant: the target square is empty but a pawn falls.
        None
            if p.piece_at(solution.from)
                .map(|pc| pc.kind == crate::chess::PieceKind::Pawn)
                .unwrap_or(false)
                && Some(solution.to) == p.en_passant() =>
        {
            1
        }
        None => 0,
    };
    f.set(Feature::NegCaptureMaterial, -(captured as f64) / 9.0);
    f.set(
        Feature::NegPromoteMaterial,
        -(solution.promotion.map(|k| k.material()).unwrap_or(0) as f64) / 9.0,
    );

    if let Ok(after) = p.apply_move(solution) {
        f.set(
            Feature::GivingCheck,
            if after.in_check(after.side_to_move()) {
                1.0
            } else {
                0.0
            },
        );
        f.set(
            Feature::MateInOne,
            if after.is_checkmate() { 1.0 } else { 0.0 },
        );
    }
    f.set(
        Feature::InCheck,
        if p.in_check(p.side_to_move()) { 1.0 } else { 0.0 },
    );
    f
}

/// The linear combination `r_cnt = sum_i w_i * v_i`.
pub fn score(f: &FeatureVector, w: &WeightVector) -> f64 {
    f.as_slice()
        .iter()
        .zip(w.as_slice().iter())
        .map(|(v, w)| v * w)
        .sum()
}

/// Counter-intuitiveness indicator: strictly above the threshold.
pub fn qualify(r_cnt: f64, tau_cnt: f64) -> bool {
    r_cnt > tau_cnt
}

/// Average Precision of a ranked boolean label list (best rank first).
pub fn average_precision(ranked_labels: &[bool]) -> Result<f64, CounterintuitError> {
    let npos = ranked_labels.iter().filter(|&&l| l).count();
    if npos == 0 {
        return Err(CounterintuitError::NoPositives);
    }
    let mut seen_pos = 0usize;
    let mut sum = 0.0;
    for (k, &label) in ranked_labels.iter().enumerate() {
        if label {
            seen_pos += 1;
            sum += seen_pos as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / npos as f64)
}

/// AP of scores sorted descending, with score ties resolved by averaging
/// over `shuffles` random permutations of the items before the stable
/// sort, matching the shuffle-based tie treatment of the ranking study.
pub fn tie_averaged_ap<R: Rng>(
    scores: &[f64],
    labels: &[bool],
    shuffles: usize,
    rng: &mut R,
) -> Result<f64, CounterintuitError> {
    if scores.len() != labels.len() {
        return Err(CounterintuitError::Degenerate(String::from(
            "scores and labels differ in length",
        )));
    }
    let shuffles = shuffles.max(1);
    let mut total = 0.0;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    for _ in 0..shuffles {
        use rand::seq::SliceRandom;
        order.shuffle(rng);
        let mut ranked = order.clone();
        // Stable sort keeps the shuffled order within equal scores.
        ranked.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let labels_ranked: Vec<bool> = ranked.iter().map(|&i| labels[i]).collect();
        total += average_precision(&labels_ranked)?;
    }
    Ok(total / shuffles as f64)
}

#[derive(Clone, Debug)]
pub struct TuneOptions {
    /// Number of candidate weight vectors to evaluate, the all-zero
    /// vector included.
    pub trials: usize,
    /// Tie-breaking shuffles per AP evaluation.
    pub shuffles: usize,
    /// Features eligible for nonzero weights; `None` means all.
    pub active: Option<Vec<Feature>>,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            trials: 1000,
            shuffles: 100,
            active: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TuneResult {
    pub weights: WeightVector,
    pub train_ap: f64,
}

/// Random search over the weight grid, maximizing tie-averaged AP on the
/// training matrix. The all-zero vector is always the first candidate, so
/// the result never ranks below the null baseline. Deterministic for a
/// given rng seed.
pub fn tune_weights<R: Rng>(
    matrix: &[FeatureVector],
    labels: &[bool],
    opts: &TuneOptions,
    rng: &mut R,
) -> Result<TuneResult, CounterintuitError> {
    if opts.trials == 0 {
        return Err(CounterintuitError::NoTrials);
    }
    if matrix.len() != labels.len() {
        return Err(CounterintuitError::Degenerate(String::from(
            "feature matrix and labels differ in length",
        )));
    }
    let active: Vec<Feature> = opts
        .active
        .clone()
        .unwrap_or_else(|| Feature::ALL.to_vec());

    // Every candidate is judged on identical shuffle patterns.
    let shuffle_seed: u64 = rng.gen();

    let evaluate = |w: &WeightVector| -> Result<f64, CounterintuitError> {
        use rand::SeedableRng;
        let scores: Vec<f64> = matrix.iter().map(|f| score(f, w)).collect();
        let mut shuffle_rng = rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed);
        tie_averaged_ap(&scores, labels, opts.shuffles, &mut shuffle_rng)
    };

    let mut best = WeightVector::zero();
    let mut best_ap = evaluate(&best)?;
    for _ in 1..opts.trials {
        let mut w = WeightVector::zero();
        for &feature in &active {
            w.set_grid_steps(feature, rng.gen_range(0..=10));
        }
        let ap = evaluate(&w)?;
        if ap > best_ap {
            best_ap = ap;
            best = w;
        }
    }
    Ok(TuneResult {
        weights: best,
        train_ap: best_ap,
    })
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(core::cmp::Ordering::Equal));
    let mut ranks = alloc::vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, CounterintuitError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(CounterintuitError::Degenerate(String::from(
            "zero variance input",
        )));
    }
    Ok(cov / libm::sqrt(vx * vy))
}

/// Pearson r and Spearman rho (average-rank tie handling).
pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), CounterintuitError> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(CounterintuitError::Degenerate(String::from(
            "need equal-length inputs of at least 3 points",
        )));
    }
    let r = pearson(xs, ys)?;
    let rho = pearson(&average_ranks(xs), &average_ranks(ys))?;
    Ok((r, rho))
}

/// Golden-set membership for weight tuning.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GoldenSplit {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenItem {
    pub fen: String,
    pub positive: bool,
    pub split: GoldenSplit,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{BudgetKind, EvalTrace, TraceCheckpoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mv(s: &str) -> Move {
        Move::from_uci(s).unwrap()
    }

    fn trace_of(values: &[(u64, f64, &str)], solution: &str) -> EvalTrace {
        EvalTrace {
            solution: mv(solution),
            kind: BudgetKind::Depth,
            checkpoints: values
                .iter()
                .map(|&(t, value, best)| TraceCheckpoint {
                    t,
                    value,
                    best_move: mv(best),
                })
                .collect(),
        }
    }

    #[test]
    fn constant_trace_degenerates() {
        let points: Vec<(u64, f64, &str)> =
            (1..=20).map(|t| (t, 0.8, "e2e4")).collect();
        let f = trace_features(&trace_of(&points, "e2e4"), 0.05).unwrap();
        assert_eq!(f.gap, 0.0);
        assert_eq!(f.auc, 0.0);
        assert!((f.cp_value - 1.0 / 20.0).abs() < 1e-12);
        assert!((f.cp_move - 1.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn step_trace_matches_hand_integration() {
        // V = 0.3 for t in 1..=10, 0.9 for t in 11..=20.
        let points: Vec<(u64, f64, &str)> = (1..=20)
            .map(|t| (t, if t <= 10 { 0.3 } else { 0.9 }, "e2e4"))
            .collect();
        let f = trace_features(&trace_of(&points, "e2e4"), 0.05).unwrap();
        assert!((f.gap - 0.6).abs() < 1e-12);
        // Trapezoid: nine full segments at 0.6 plus half on the step.
        let expected_area = 9.0 * 0.6 + 0.3;
        assert!((f.auc - expected_area / 19.0).abs() < 1e-12);
        assert!((f.cp_value - 11.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn auc_matches_riemann_refinement_of_the_interpolant() {
        let points: Vec<(u64, f64, &str)> = (1..=20)
            .map(|t| (t, if t <= 7 { 0.25 } else { 0.85 }, "e2e4"))
            .collect();
        let trace = trace_of(&points, "e2e4");
        let f = trace_features(&trace, 0.05).unwrap();

        // Midpoint Riemann sum over the piecewise-linear interpolant.
        let v_final = trace.final_value();
        let mut area = 0.0;
        for w in trace.checkpoints.windows(2) {
            let steps = 1000;
            let dt = (w[1].t - w[0].t) as f64 / steps as f64;
            for s in 0..steps {
                let frac = (s as f64 + 0.5) / steps as f64;
                let v = w[0].value + (w[1].value - w[0].value) * frac;
                area += (v_final - v).abs() * dt;
            }
        }
        let oracle = area / (trace.checkpoints.last().unwrap().t - trace.checkpoints[0].t) as f64;
        assert!((f.auc - oracle).abs() < 1e-9);
    }

    #[test]
    fn cp_move_from_best_move_stability() {
        let points: Vec<(u64, f64, &str)> = (1..=20)
            .map(|t| (t, 0.7, if t < 15 { "d2d4" } else { "e2e4" }))
            .collect();
        let f = trace_features(&trace_of(&points, "e2e4"), 0.05).unwrap();
        assert!((f.cp_move - 15.0 / 20.0).abs() < 1e-12);

        // Never found: clamps to 1.
        let points: Vec<(u64, f64, &str)> = (1..=20).map(|t| (t, 0.7, "d2d4")).collect();
        let f = trace_features(&trace_of(&points, "e2e4"), 0.05).unwrap();
        assert_eq!(f.cp_move, 1.0);
    }

    #[test]
    fn cp_value_requires_stability_not_first_crossing() {
        // Dips back out of tolerance at t=12.
        let mut points: Vec<(u64, f64, f64)> = Vec::new();
        for t in 1..=20u64 {
            let v = match t {
                1..=5 => 0.2,
                12 => 0.3,
                _ => 0.8,
            };
            points.push((t, v, 0.0));
        }
        let trace = trace_of(
            &points
                .iter()
                .map(|&(t, v, _)| (t, v, "e2e4"))
                .collect::<Vec<_>>(),
            "e2e4",
        );
        let f = trace_features(&trace, 0.05).unwrap();
        assert!((f.cp_value - 13.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn cp_is_monotone_in_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let points: Vec<(u64, f64, &str)> = (1..=12)
                .map(|t| (t, rng.gen_range(0.0..1.0), "e2e4"))
                .collect();
            let trace = trace_of(&points, "e2e4");
            let mut prev = f64::INFINITY;
            for tau in [0.01, 0.05, 0.1, 0.3, 0.8] {
                let f = trace_features(&trace, tau).unwrap();
                assert!(f.cp_value <= prev + 1e-12, "looser tau must not be later");
                prev = f.cp_value;
            }
        }
    }

    #[test]
    fn short_trace_is_an_error() {
        let t = trace_of(&[(1, 0.5, "e2e4")], "e2e4");
        assert!(matches!(
            trace_features(&t, 0.05),
            Err(CounterintuitError::ShortTrace(1))
        ));
    }

    #[test]
    fn score_is_linear_and_matches_paper_config() {
        let mut f = FeatureVector::default();
        f.set(Feature::CpMoveDepth, 1.0);
        let w = WeightVector::paper_config();
        assert!((score(&f, &w) - 0.8).abs() < 1e-12);
        assert!(qualify(score(&f, &w), 0.1));

        f.set(Feature::NegCaptureMaterial, -1.0);
        assert!((score(&f, &w) - 0.7).abs() < 1e-12);

        assert_eq!(score(&f, &WeightVector::zero()), 0.0);
        assert!(!qualify(0.0, 0.1));

        // Queen capture under a capture-only config scores below threshold.
        let mut only_capture = WeightVector::zero();
        only_capture.set_grid_steps(Feature::NegCaptureMaterial, 1);
        let mut g = FeatureVector::default();
        g.set(Feature::NegCaptureMaterial, -1.0);
        assert!(!qualify(score(&g, &only_capture), 0.1));
        assert!((score(&g, &only_capture) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn weight_grid_is_validated() {
        let mut values = [0.0; FEATURE_COUNT];
        values[0] = 0.30000000004;
        assert!(WeightVector::from_values(values).is_ok());
        values[0] = 0.35;
        assert!(matches!(
            WeightVector::from_values(values),
            Err(CounterintuitError::OffGridWeight { .. })
        ));
        values[0] = -0.1;
        assert!(WeightVector::from_values(values).is_err());
        values[0] = 1.1;
        assert!(WeightVector::from_values(values).is_err());
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[true, false]).unwrap(), 1.0);
        assert_eq!(average_precision(&[false, true]).unwrap(), 0.5);
        let ap = average_precision(&[true, false, true]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        assert!(matches!(
            average_precision(&[false, false]),
            Err(CounterintuitError::NoPositives)
        ));
    }

    /// Literal double-loop transcription of the AP definition.
    fn ap_brute(labels: &[bool]) -> f64 {
        let npos = labels.iter().filter(|&&l| l).count();
        let mut sum = 0.0;
        for k in 1..=labels.len() {
            if labels[k - 1] {
                let prec: f64 =
                    labels[..k].iter().map(|&l| if l { 1.0 } else { 0.0 }).sum::<f64>() / k as f64;
                sum += prec;
            }
        }
        sum / npos as f64
    }

    #[test]
    fn ap_matches_brute_force_on_all_short_sequences() {
        for len in 1..=6usize {
            for mask in 0..(1u32 << len) {
                let labels: Vec<bool> = (0..len).map(|i| mask & (1 << i) != 0).collect();
                if labels.iter().all(|&l| !l) {
                    continue;
                }
                let fast = average_precision(&labels).unwrap();
                assert!((fast - ap_brute(&labels)).abs() < 1e-12, "{labels:?}");
            }
        }
    }

    #[test]
    fn tie_shuffling_approaches_closed_form_expectation() {
        // All-tied scores: every arrangement is equally likely, so the
        // expected AP is the mean over all label placements.
        for (n, p) in [(4usize, 2usize), (6, 3), (8, 4), (5, 1)] {
            let mut total = 0.0;
            let mut count = 0usize;
            for mask in 0..(1u32 << n) {
                if (mask.count_ones() as usize) != p {
                    continue;
                }
                let labels: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
                total += average_precision(&labels).unwrap();
                count += 1;
            }
            let exact = total / count as f64;

            let scores = alloc::vec![1.0; n];
            let labels: Vec<bool> = (0..n).map(|i| i < p).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(10);
            let estimated = tie_averaged_ap(&scores, &labels, 100, &mut rng).unwrap();
            assert!(
                (estimated - exact).abs() <= 0.02,
                "n={n} p={p}: {estimated} vs {exact}"
            );
        }
    }

    #[test]
    fn separable_scores_beat_indicator_ties() {
        // Two positives above two negatives under a separating feature.
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [true, true, false, false];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let separating = tie_averaged_ap(&scores, &labels, 100, &mut rng).unwrap();
        assert_eq!(separating, 1.0);

        // Indicator scoring ties everything, like a bare uniqueness flag.
        let tied = [1.0, 1.0, 1.0, 1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let baseline = tie_averaged_ap(&tied, &labels, 100, &mut rng).unwrap();
        assert!(baseline < separating);
    }

    #[test]
    fn tuning_finds_the_exhaustive_grid_optimum() {
        // Two active features; feature 0 separates, feature 1 anti-separates.
        let items: Vec<(f64, f64, bool)> = alloc::vec![
            (0.9, 0.9, true),
            (0.8, 0.7, true),
            (0.3, 0.9, false),
            (0.2, 0.8, false),
            (0.1, 0.6, false),
        ];
        let matrix: Vec<FeatureVector> = items
            .iter()
            .map(|&(a, b, _)| {
                let mut f = FeatureVector::default();
                f.set(Feature::Gap, a);
                f.set(Feature::InCheck, b);
                f
            })
            .collect();
        let labels: Vec<bool> = items.iter().map(|&(_, _, l)| l).collect();

        // Exhaustive enumeration of the 11x11 grid.
        let mut best_exhaustive = 0.0f64;
        for a in 0..=10u8 {
            for b in 0..=10u8 {
                let mut w = WeightVector::zero();
                w.set_grid_steps(Feature::Gap, a);
                w.set_grid_steps(Feature::InCheck, b);
                let scores: Vec<f64> = matrix.iter().map(|f| score(f, &w)).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(3);
                let ap = tie_averaged_ap(&scores, &labels, 50, &mut rng).unwrap();
                best_exhaustive = best_exhaustive.max(ap);
            }
        }

        let opts = TuneOptions {
            trials: 3000,
            shuffles: 50,
            active: Some(alloc::vec![Feature::Gap, Feature::InCheck]),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let result = tune_weights(&matrix, &labels, &opts, &mut rng).unwrap();
        assert!(
            (result.train_ap - best_exhaustive).abs() < 1e-9,
            "random search {} vs exhaustive {}",
            result.train_ap,
            best_exhaustive
        );
        assert_eq!(result.train_ap, 1.0);
    }

    #[test]
    fn single_trial_returns_the_zero_vector() {
        let mut f = FeatureVector::default();
        f.set(Feature::Gap, 1.0);
        let matrix = alloc::vec![f, FeatureVector::default()];
        let labels = alloc::vec![true, false];
        let opts = TuneOptions {
            trials: 1,
            shuffles: 10,
            active: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let result = tune_weights(&matrix, &labels, &opts, &mut rng).unwrap();
        assert_eq!(result.weights, WeightVector::zero());

        assert!(matches!(
            tune_weights(&matrix, &labels, &TuneOptions { trials: 0, ..opts }, &mut rng),
            Err(CounterintuitError::NoTrials)
        ));
    }

    #[test]
    fn tuned_ap_never_below_null_baseline() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let matrix: Vec<FeatureVector> = (0..12)
            .map(|_| {
                let mut f = FeatureVector::default();
                for feature in [Feature::Gap, Feature::TopMoveGap, Feature::InCheck] {
                    f.set(feature, rng.gen_range(0.0..1.0));
                }
                f
            })
            .collect();
        let labels: Vec<bool> = (0..12).map(|i| i % 3 == 0).collect();

        let zero_scores = alloc::vec![0.0; 12];
        let mut ap_rng = ChaCha8Rng::seed_from_u64(100);
        let null_ap = tie_averaged_ap(&zero_scores, &labels, 100, &mut ap_rng).unwrap();

        let opts = TuneOptions {
            trials: 50,
            shuffles: 100,
            active: None,
        };
        let result = tune_weights(&matrix, &labels, &opts, &mut rng).unwrap();
        assert!(result.train_ap >= null_ap - 0.03);
    }

    #[test]
    fn correlation_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let (r, rho) = correlate(&xs, &ys).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!((rho - 1.0).abs() < 1e-12);

        let rev: Vec<f64> = xs.iter().rev().copied().collect();
        let (_, rho) = correlate(&xs, &rev).unwrap();
        assert!((rho + 1.0).abs() < 1e-12);

        let xs = [1.0, 2.0, 2.0, 3.0];
        let ys = [1.0, 2.0, 3.0, 4.0];
        let (_, rho) = correlate(&xs, &ys).unwrap();
        assert!((rho - 0.9487).abs() < 1e-4);

        assert!(correlate(&[1.0, 1.0, 1.0], &ys[..3]).is_err());
        assert!(correlate(&xs[..2], &ys[..2]).is_err());
    }

    #[test]
    fn static_features_of_capture_check_and_promotion() {
        use crate::engine::{AnalysisResult, Budget, MoveEval, Score};
        // White queen takes the black queen with check.
        let p = Position::from_fen("3qk3/8/8/8/8/8/8/3QK3 w - - 0 1").unwrap();
        let solution = mv("d1d8");
        let deep = AnalysisResult {
            fen: p.to_fen(),
            budget: Budget::Depth(12),
            evals: alloc::vec![
                MoveEval {
                    mv: solution,
                    score: Score::Cp(900),
                    pv: alloc::vec![solution],
                },
                MoveEval {
                    mv: mv("d1d2"),
                    score: Score::Cp(0),
                    pv: alloc::vec![mv("d1d2")],
                },
            ],
            engine: String::new(),
        };
        let f = static_features(&p, solution, &deep, 0.5);
        assert!((f.get(Feature::NegCaptureMaterial) + 1.0).abs() < 1e-12);
        assert_eq!(f.get(Feature::GivingCheck), 1.0);
        assert_eq!(f.get(Feature::InCheck), 0.0);
        assert_eq!(f.get(Feature::NegPromoteMaterial), 0.0);
        let expected_gap =
            crate::engine::cp_to_winrate(Score::Cp(900)) - crate::engine::cp_to_winrate(Score::Cp(0));
        assert!((f.get(Feature::TopMoveGap) - expected_gap).abs() < 1e-12);
        assert!(
            (f.get(Feature::TopMoveMisevalGap)
                - (crate::engine::cp_to_winrate(Score::Cp(900)) - 0.5))
                .abs()
                < 1e-12
        );

        // Quiet move: no capture, no check.
        let quiet = static_features(&p, mv("d1d2"), &deep, 0.5);
        assert_eq!(quiet.get(Feature::NegCaptureMaterial), 0.0);
        assert_eq!(quiet.get(Feature::GivingCheck), 0.0);

        // Knight underpromotion carries -3/9.
        let p = Position::from_fen("7k/8/8/8/8/8/5p1K/8 b - - 0 1").unwrap();
        let deep = AnalysisResult {
            fen: p.to_fen(),
            budget: Budget::Depth(12),
            evals: alloc::vec![MoveEval {
                mv: mv("f2f1n"),
                score: Score::Cp(100),
                pv: alloc::vec![mv("f2f1n")],
            }],
            engine: String::new(),
        };
        let f = static_features(&p, mv("f2f1n"), &deep, 0.5);
        assert!((f.get(Feature::NegPromoteMaterial) + 3.0 / 9.0).abs() < 1e-12);
        assert_eq!(f.get(Feature::TopMoveGap), 1.0);
    }

    #[test]
    fn in_check_feature() {
        let p = Position::from_fen("4k3/4Q3/8/8/8/8/8/4K3 b - - 0 1").unwrap();
        let legal = p.legal_moves();
        let deep = AnalysisResult {
            fen: p.to_fen(),
            budget: crate::engine::Budget::Depth(12),
            evals: alloc::vec![crate::engine::MoveEval {
                mv: legal[0],
                score: crate::engine::Score::Cp(-500),
                pv: alloc::vec![legal[0]],
            }],
            engine: String::new(),
        };
        let f = static_features(&p, legal[0], &deep, 0.3);
        assert_eq!(f.get(Feature::InCheck), 1.0);
    }
}
