//! Flat key-value pipeline configuration with environment overrides.
//!
//! Every key can also be set through `PUZZLEFORGE_<KEY>` (upper-cased);
//! unknown keys are rejected rather than ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use puzzleforge_core::counterintuit::WeightVector;
use puzzleforge_core::engine::Budget;
use puzzleforge_core::evolve::{AnnealKind, EvoConfig, FitnessWeights};
use puzzleforge_core::novelty::DistanceConfig;
use puzzleforge_core::scoring::ScoringConfig;
use puzzleforge_core::themes::ThemeConfig;
use puzzleforge_core::uniqueness::UniquenessConfig;

pub const ENV_PREFIX: &str = "PUZZLEFORGE_";

/// Which engine backs the pipeline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EngineSpec {
    /// Deterministic script file.
    Scripted(PathBuf),
    /// UCI subprocess binary.
    Uci(PathBuf),
}

impl EngineSpec {
    pub fn parse(text: &str) -> EngineSpec {
        match text.strip_prefix("scripted:") {
            Some(path) => EngineSpec::Scripted(PathBuf::from(path)),
            None => EngineSpec::Uci(PathBuf::from(text)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub tau_uni: f64,
    pub tau_cnt: f64,
    pub tau_board: u32,
    pub tau_pv: f64,
    /// Entropy gate threshold; `None` defers to the model's stored
    /// corpus percentile.
    pub tau_ent: Option<f64>,
    pub pv_truncation_eval: usize,
    pub pv_truncation_filter: usize,
    pub replay_sample: usize,
    pub replay_subsample: usize,
    pub replay_capacity: usize,
    pub mate_horizon: u32,
    pub max_recursion_plies: u32,
    pub decided_winrate: f64,
    pub multipv: usize,
    /// Full-budget search depth for uniqueness and deep features.
    pub depth: u32,
    pub trace_depths: Vec<u64>,
    pub stability_tau: f64,
    pub entropy_order: usize,
    pub engine: Option<EngineSpec>,
    pub threads: u32,
    pub hash_mb: u32,
    pub seed: u64,
    pub workers: usize,
    pub weights_file: Option<PathBuf>,
    pub evo_iterations: u32,
    pub evo_buffer: usize,
    pub evo_parents: usize,
    pub evo_mutations: usize,
    pub evo_edits: u32,
    pub evo_moves: u32,
    pub evo_t_start: f64,
    pub evo_t_end: f64,
    pub evo_anneal: AnnealKind,
    pub sacrifice_deficit: f64,
    pub winning_threshold: f64,
    pub withdrawal_slack: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tau_uni: 0.5,
            tau_cnt: 0.1,
            tau_board: 6,
            tau_pv: 1.0,
            tau_ent: None,
            pv_truncation_eval: 6,
            pv_truncation_filter: 1,
            replay_sample: 16,
            replay_subsample: 2000,
            replay_capacity: 100_000,
            mate_horizon: 15,
            max_recursion_plies: 30,
            decided_winrate: 0.99,
            multipv: 2,
            depth: 20,
            trace_depths: (1..=20).collect(),
            stability_tau: 0.05,
            entropy_order: 4,
            engine: None,
            threads: 1,
            hash_mb: 16,
            seed: 0,
            workers: 1,
            weights_file: None,
            evo_iterations: 50,
            evo_buffer: 64,
            evo_parents: 8,
            evo_mutations: 2,
            evo_edits: 2,
            evo_moves: 2,
            evo_t_start: 1.0,
            evo_t_end: 0.05,
            evo_anneal: AnnealKind::Geometric,
            sacrifice_deficit: 3.0,
            winning_threshold: 0.6,
            withdrawal_slack: 0.02,
        }
    }
}

fn parse_schedule(text: &str) -> Result<Vec<u64>> {
    let text = text.trim();
    let values: Vec<u64> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().context("schedule range start")?;
        let hi: u64 = hi.trim().parse().context("schedule range end")?;
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|v| v.trim().parse().context("schedule entry"))
            .collect::<Result<_>>()?
    };
    if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
        bail!("trace schedule must be non-empty and strictly increasing");
    }
    Ok(values)
}

impl PipelineConfig {
    /// Reads `key = value` lines (with `#` comments), then applies
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .with_context(|| format!("config line {} is not key = value", lineno + 1))?;
                cfg.set(key.trim(), value.trim())
                    .with_context(|| format!("config line {}", lineno + 1))?;
            }
        }
        cfg.apply_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        let vars: BTreeMap<String, String> = std::env::vars()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        for (key, value) in vars {
            let key = key[ENV_PREFIX.len()..].to_lowercase();
            self.set(&key, &value)
                .with_context(|| format!("environment override {ENV_PREFIX}{}", key.to_uppercase()))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        macro_rules! num {
            () => {
                value.parse().with_context(|| format!("parsing {key}={value}"))?
            };
        }
        match key {
            "tau_uni" => self.tau_uni = num!(),
            "tau_cnt" => self.tau_cnt = num!(),
            "tau_board" => self.tau_board = num!(),
            "tau_pv" => self.tau_pv = num!(),
            "tau_ent" => self.tau_ent = Some(num!()),
            "pv_truncation_eval" => self.pv_truncation_eval = num!(),
            "pv_truncation_filter" => self.pv_truncation_filter = num!(),
            "replay_sample" => self.replay_sample = num!(),
            "replay_subsample" => self.replay_subsample = num!(),
            "replay_capacity" => self.replay_capacity = num!(),
            "mate_horizon" => self.mate_horizon = num!(),
            "max_recursion_plies" => self.max_recursion_plies = num!(),
            "decided_winrate" => self.decided_winrate = num!(),
            "multipv" => self.multipv = num!(),
            "depth" => self.depth = num!(),
            "trace_depths" => self.trace_depths = parse_schedule(value)?,
            "stability_tau" => self.stability_tau = num!(),
            "entropy_order" => self.entropy_order = num!(),
            "engine" => self.engine = Some(EngineSpec::parse(value)),
            "threads" => self.threads = num!(),
            "hash_mb" => self.hash_mb = num!(),
            "seed" => self.seed = num!(),
            "workers" => self.workers = num!(),
            "weights_file" => self.weights_file = Some(PathBuf::from(value)),
            "evo_iterations" => self.evo_iterations = num!(),
            "evo_buffer" => self.evo_buffer = num!(),
            "evo_parents" => self.evo_parents = num!(),
            "evo_mutations" => self.evo_mutations = num!(),
            "evo_edits" => self.evo_edits = num!(),
            "evo_moves" => self.evo_moves = num!(),
            "evo_t_start" => self.evo_t_start = num!(),
            "evo_t_end" => self.evo_t_end = num!(),
            "evo_anneal" => {
                self.evo_anneal = match value {
                    "geometric" => AnnealKind::Geometric,
                    "linear" => AnnealKind::Linear,
                    other => bail!("evo_anneal must be geometric or linear, got {other}"),
                }
            }
            "sacrifice_deficit" => self.sacrifice_deficit = num!(),
            "winning_threshold" => self.winning_threshold = num!(),
            "withdrawal_slack" => self.withdrawal_slack = num!(),
            other => bail!("unknown config key: {other}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_uni > 0.0 && self.tau_uni <= 1.0) {
            bail!("tau_uni must be in (0, 1]");
        }
        if self.mate_horizon == 0 {
            bail!("mate_horizon must be at least 1 move");
        }
        if self.multipv < 2 {
            bail!("multipv must be at least 2 for uniqueness checks");
        }
        if self.pv_truncation_eval == 0 || self.pv_truncation_filter == 0 {
            bail!("PV truncations must be at least 1");
        }
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if self.trace_depths.last().copied().unwrap_or(0) > self.depth as u64 {
            bail!("trace_depths may not exceed the full search depth");
        }
        Ok(())
    }

    pub fn uniqueness_config(&self) -> UniquenessConfig {
        UniquenessConfig {
            tau_uni: self.tau_uni,
            mate_horizon: self.mate_horizon,
            max_recursion_plies: self.max_recursion_plies,
            decided_winrate: self.decided_winrate,
            budget: Budget::Depth(self.depth),
            multipv: self.multipv,
        }
    }

    pub fn scoring_config(&self, weights: WeightVector) -> ScoringConfig {
        ScoringConfig {
            uniqueness: self.uniqueness_config(),
            weights,
            tau_cnt: self.tau_cnt,
            stability_tau: self.stability_tau,
            depth_schedule: self.trace_depths.clone(),
            nodes_schedule: None,
            time_schedule: None,
            themes: self.theme_config(),
        }
    }

    pub fn distance_config(&self) -> DistanceConfig {
        DistanceConfig {
            tau_board: self.tau_board,
            tau_pv: self.tau_pv,
            pv_truncation_eval: self.pv_truncation_eval,
            pv_truncation_filter: self.pv_truncation_filter,
        }
    }

    pub fn theme_config(&self) -> ThemeConfig {
        ThemeConfig {
            sacrifice_deficit: self.sacrifice_deficit,
            winning_threshold: self.winning_threshold,
            withdrawal_eval_slack: self.withdrawal_slack,
        }
    }

    pub fn evo_config(&self, seed: u64) -> EvoConfig {
        EvoConfig {
            iterations: self.evo_iterations,
            buffer_size: self.evo_buffer,
            parents_per_iter: self.evo_parents,
            mutations_per_parent: self.evo_mutations,
            edit_budget: self.evo_edits,
            random_move_budget: self.evo_moves,
            t_start: self.evo_t_start,
            t_end: self.evo_t_end,
            anneal: self.evo_anneal,
            seed,
            fitness_weights: FitnessWeights::default(),
        }
    }
}
