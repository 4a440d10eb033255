//! Two-stage hyperparameter search: randomized exploration over the default
//! ranges, then grid refinement around the best find. Trials are scored by
//! validation MAE on the chronological validation split.
//!
//! Trial tables are deterministic for a given seed. Wall-clock timing is off
//! by default so a rerun writes a byte-identical table; opt in via
//! [`TuneOptions::record_timing`].

use crate::align::AlignedDataset;
use crate::eval::{evaluate_range, EvalError};
use crate::features::chronological_split;
use crate::pipeline::{train_on_range, ModelSpec, PipelineConfig, PipelineError, DEFAULT_SPLIT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TuneError {
    #[error("search space is empty or has an empty domain")]
    EmptySpace,
    #[error("refinement grid is empty")]
    EmptyGrid,
    #[error("unknown model kind {0}")]
    UnknownModelKind(String),
    #[error("trial scored a non-finite validation MAE")]
    NonFiniteScore,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One hyperparameter axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// Inclusive integer range, sampled uniformly.
    Int { lo: i64, hi: i64 },
    /// Positive real range, sampled log-uniformly.
    LogReal { lo: f64, hi: f64 },
    /// Explicit value set, sampled uniformly.
    Choice(Vec<f64>),
}

impl Domain {
    fn is_empty(&self) -> bool {
        match self {
            Domain::Int { lo, hi } => lo > hi,
            Domain::LogReal { lo, hi } => !(0.0 < *lo && lo <= hi),
            Domain::Choice(vs) => vs.is_empty(),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Domain::Int { lo, hi } => rng.gen_range(*lo..=*hi) as f64,
            Domain::LogReal { lo, hi } => {
                (rng.gen_range(lo.ln()..=hi.ln())).exp()
            }
            Domain::Choice(vs) => vs[rng.gen_range(0..vs.len())],
        }
    }

    /// Values within `radius` grid steps of `center`, clipped to the domain.
    /// Integer axes step by 1, choices step along the list, and log axes
    /// step by a factor of sqrt(10).
    fn neighborhood(&self, center: f64, radius: usize) -> Vec<f64> {
        let r = radius as i64;
        match self {
            Domain::Int { lo, hi } => {
                let c = center.round() as i64;
                ((c - r).max(*lo)..=(c + r).min(*hi)).map(|v| v as f64).collect()
            }
            Domain::Choice(vs) => {
                let c = vs
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        (a.1 - center).abs().partial_cmp(&(b.1 - center).abs()).unwrap()
                    })
                    .map(|(i, _)| i as i64)
                    .unwrap_or(0);
                let lo = (c - r).max(0) as usize;
                let hi = ((c + r) as usize).min(vs.len() - 1);
                vs[lo..=hi].to_vec()
            }
            Domain::LogReal { lo, hi } => {
                let step = 10f64.sqrt();
                (-r..=r)
                    .map(|k| (center * step.powi(k as i32)).clamp(*lo, *hi))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .fold(Vec::new(), |mut acc, v| {
                        if acc.last().map_or(true, |&last: &f64| (last - v).abs() > 1e-12) {
                            acc.push(v);
                        }
                        acc
                    })
            }
        }
    }
}

/// A hyperparameter configuration: axis name to value.
pub type Config = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub model_kind: String,
    pub params: BTreeMap<String, Domain>,
}

impl SearchSpace {
    /// The published search ranges per model family.
    pub fn default_for(kind: &str) -> Option<SearchSpace> {
        let mut params = BTreeMap::new();
        match kind {
            "ridge" => {
                params.insert("alpha".into(), Domain::LogReal { lo: 0.001, hi: 1000.0 });
            }
            "tree" => {
                params.insert("max_depth".into(), Domain::Int { lo: 1, hi: 20 });
                params.insert("min_samples_split".into(), Domain::Int { lo: 2, hi: 30 });
            }
            "forest" => {
                params.insert("n_estimators".into(), Domain::Int { lo: 10, hi: 1000 });
                params.insert("max_depth".into(), Domain::Int { lo: 1, hi: 20 });
                params.insert("min_samples_split".into(), Domain::Int { lo: 2, hi: 30 });
            }
            "lstm" => {
                params.insert("hidden".into(), Domain::Int { lo: 20, hi: 100 });
                params.insert("dense".into(), Domain::Int { lo: 2, hi: 10 });
                params.insert(
                    "batch_size".into(),
                    Domain::Choice(vec![8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0]),
                );
                params.insert("epochs".into(), Domain::Int { lo: 1, hi: 20 });
            }
            _ => return None,
        }
        Some(SearchSpace {
            model_kind: kind.to_string(),
            params,
        })
    }

    fn validate(&self) -> Result<(), TuneError> {
        if self.params.is_empty() || self.params.values().any(Domain::is_empty) {
            return Err(TuneError::EmptySpace);
        }
        Ok(())
    }
}

/// Translate a sampled config into a concrete model spec.
pub fn spec_from_config(kind: &str, config: &Config) -> Result<ModelSpec, TuneError> {
    let get = |name: &str, default: f64| config.get(name).copied().unwrap_or(default);
    match kind {
        "ridge" => Ok(ModelSpec::Ridge { alpha: get("alpha", 1.0) }),
        "tree" => Ok(ModelSpec::Tree {
            max_depth: get("max_depth", 14.0) as usize,
            min_samples_split: get("min_samples_split", 20.0) as usize,
        }),
        "forest" => Ok(ModelSpec::Forest {
            n_estimators: get("n_estimators", 500.0) as usize,
            max_depth: get("max_depth", 14.0) as usize,
            min_samples_split: get("min_samples_split", 20.0) as usize,
        }),
        "lstm" => Ok(ModelSpec::Lstm {
            hidden: get("hidden", 32.0) as usize,
            dense: get("dense", 5.0) as usize,
            batch_size: get("batch_size", 64.0) as usize,
            epochs: get("epochs", 20.0) as usize,
            learning_rate: 0.001,
        }),
        other => Err(TuneError::UnknownModelKind(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub model: String,
    pub config: Config,
    pub val_mae: f64,
    pub train_seconds: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    pub seed: u64,
    /// When false (the default), `train_seconds` is written as 0 so a rerun
    /// produces a byte-identical trial table.
    pub record_timing: bool,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            seed: 42,
            record_timing: false,
        }
    }
}

fn score_config(
    data: &AlignedDataset,
    kind: &str,
    config: &Config,
    opts: &TuneOptions,
) -> Result<TrialResult, TuneError> {
    let split = chronological_split(data.rows.len(), DEFAULT_SPLIT)
        .map_err(PipelineError::Feature)?;
    let spec = spec_from_config(kind, config)?;
    let cfg = PipelineConfig::new(spec, opts.seed);
    let started = Instant::now();
    let artifact = train_on_range(data, &cfg, split.train.clone())?;
    let train_seconds = if opts.record_timing {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let entry = evaluate_range(&artifact, data, split.val, "val")?;
    if !entry.mae_norm.is_finite() {
        return Err(TuneError::NonFiniteScore);
    }
    Ok(TrialResult {
        model: kind.to_string(),
        config: config.clone(),
        val_mae: entry.mae_norm,
        train_seconds,
        seed: opts.seed,
    })
}

fn config_json(config: &Config) -> String {
    serde_json::to_string(config).expect("config serializes")
}

/// Canonical order: ascending MAE, then fewer parameters, then the
/// lexicographic JSON form of the config.
fn sort_trials(trials: &mut [TrialResult]) {
    trials.sort_by(|a, b| {
        a.val_mae
            .partial_cmp(&b.val_mae)
            .unwrap()
            .then(a.config.len().cmp(&b.config.len()))
            .then_with(|| config_json(&a.config).cmp(&config_json(&b.config)))
    });
}

/// Sample `budget` configs uniformly (log-uniformly on log axes), train and
/// score each, and return trials sorted by ascending validation MAE.
pub fn random_search(
    space: &SearchSpace,
    budget: usize,
    data: &AlignedDataset,
    opts: &TuneOptions,
) -> Result<Vec<TrialResult>, TuneError> {
    assert!(budget >= 1, "budget must be >= 1");
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // Draw all configs first so the sample sequence is independent of
    // training internals.
    let configs: Vec<Config> = (0..budget)
        .map(|_| {
            space
                .params
                .iter()
                .map(|(name, dom)| (name.clone(), dom.sample(&mut rng)))
                .collect()
        })
        .collect();
    let mut trials = configs
        .iter()
        .map(|c| score_config(data, &space.model_kind, c, opts))
        .collect::<Result<Vec<_>, _>>()?;
    sort_trials(&mut trials);
    Ok(trials)
}

/// Finite grid of configs within `radius` steps of `center` on every axis,
/// clipped to the space.
pub fn refine_grid(space: &SearchSpace, center: &Config, radius: usize) -> Vec<Config> {
    let mut grid: Vec<Config> = vec![BTreeMap::new()];
    for (name, dom) in &space.params {
        let center_v = center.get(name).copied().unwrap_or_else(|| match dom {
            Domain::Int { lo, .. } => *lo as f64,
            Domain::LogReal { lo, .. } => *lo,
            Domain::Choice(vs) => vs[0],
        });
        let values = dom.neighborhood(center_v, radius);
        grid = grid
            .into_iter()
            .flat_map(|partial| {
                values.iter().map(move |&v| {
                    let mut c = partial.clone();
                    c.insert(name.clone(), v);
                    c
                })
            })
            .collect();
    }
    grid
}

/// Train and score every grid point; the winner is the first row of the
/// canonically sorted table.
pub fn grid_search(
    grid: &[Config],
    model_kind: &str,
    data: &AlignedDataset,
    opts: &TuneOptions,
) -> Result<(TrialResult, Vec<TrialResult>), TuneError> {
    if grid.is_empty() {
        return Err(TuneError::EmptyGrid);
    }
    let mut trials = grid
        .iter()
        .map(|c| score_config(data, model_kind, c, opts))
        .collect::<Result<Vec<_>, _>>()?;
    sort_trials(&mut trials);
    Ok((trials[0].clone(), trials))
}

fn csv_quote(field: &str) -> String {
    format!("\"{}\"", field.replace('"', "\"\""))
}

/// Trial table CSV: `rank,model,config_json,val_mae,train_seconds,seed`.
/// The JSON field is quoted because it contains commas.
pub fn trials_csv(trials: &[TrialResult]) -> String {
    let mut out = String::from("rank,model,config_json,val_mae,train_seconds,seed\n");
    for (i, t) in trials.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            t.model,
            csv_quote(&config_json(&t.config)),
            t.val_mae,
            t.train_seconds,
            t.seed
        ));
    }
    out
}
