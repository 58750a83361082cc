//! Seeded synthetic populations and the named scenario presets.
//!
//! The generator is ChaCha8 from `rand_chacha` 0.9, recorded in every
//! config's `rng` field. Draw order is fixed: groups in config order, and
//! for each individual its score first, then its uniform(0, 1) features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::interval_concentration;
use crate::population::{Individual, Population, ScoredPopulation, Threshold};

pub const RNG_NAME: &str = "chacha8/rand_chacha-0.9";

/// Retries allowed when a concentration target is missed.
pub const MAX_REGENERATIONS: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("concentration ratio >= {min_ratio} not reached after {attempts} attempts")]
    ConcentrationNotReached { min_ratio: f64, attempts: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub dist: ScoreDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreDistribution {
    /// Half-open `[lo, hi)`.
    Uniform {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    PointMass {
        v: f64,
    },
    /// Weights must be positive; they are normalized before sampling.
    Mixture {
        components: Vec<MixtureComponent>,
    },
    /// Reuses the scores of an earlier group, in order. Counts must match.
    Mirror {
        group: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub count: usize,
    pub scores: ScoreDistribution,
}

/// Post-generation check: `group` must be overrepresented in `[lo, hi]` by
/// at least `min_ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationTarget {
    pub lo: f64,
    pub hi: f64,
    pub group: String,
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub rng: String,
    pub seed: u64,
    pub feature_dim: usize,
    /// Put the score in feature 1, so that `M(x) = x_1` is 1-Lipschitz for
    /// Euclidean `d` on features.
    #[serde(default)]
    pub score_features: bool,
    #[serde(default)]
    pub assign_uids: bool,
    pub groups: Vec<GroupSpec>,
    /// The threshold a scenario is meant to be read against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Threshold>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationTarget>,
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidConfig(msg.into())
}

impl ScoreDistribution {
    fn validate(&self, nested: bool) -> Result<(), SynthError> {
        match self {
            ScoreDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid(format!(
                        "uniform needs finite lo < hi, got [{lo}, {hi})"
                    )));
                }
            }
            ScoreDistribution::Normal { mean, sd } => {
                if !(mean.is_finite() && sd.is_finite() && *sd >= 0.0) {
                    return Err(invalid("normal needs finite mean and sd >= 0"));
                }
            }
            ScoreDistribution::PointMass { v } => {
                if !v.is_finite() {
                    return Err(invalid("point_mass value must be finite"));
                }
            }
            ScoreDistribution::Mixture { components } => {
                if nested {
                    return Err(invalid("mixtures cannot be nested"));
                }
                if components.is_empty() {
                    return Err(invalid("mixture needs at least one component"));
                }
                for c in components {
                    if !(c.weight.is_finite() && c.weight > 0.0) {
                        return Err(invalid("mixture weights must be positive"));
                    }
                    c.dist.validate(true)?;
                }
            }
            ScoreDistribution::Mirror { .. } if nested => {
                return Err(invalid("mirror cannot appear inside a mixture"))
            }
            ScoreDistribution::Mirror { .. } => {}
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ScoreDistribution::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            ScoreDistribution::Normal { mean, sd } => {
                Normal::new(*mean, *sd).expect("validated sd").sample(rng)
            }
            ScoreDistribution::PointMass { v } => *v,
            ScoreDistribution::Mixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                let mut u = rng.random::<f64>() * total;
                for c in components {
                    if u < c.weight {
                        return c.dist.sample(rng);
                    }
                    u -= c.weight;
                }
                components.last().expect("non-empty").dist.sample(rng)
            }
            ScoreDistribution::Mirror { .. } => unreachable!("resolved by generate"),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.rng != RNG_NAME {
            return Err(invalid(format!(
                "unsupported rng `{}`, this build provides `{RNG_NAME}`",
                self.rng
            )));
        }
        if self.score_features && self.feature_dim == 0 {
            return Err(invalid("score_features needs feature_dim >= 1"));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.label.is_empty() {
                return Err(invalid("group labels must be non-empty"));
            }
            if self.groups[..i].iter().any(|h| h.label == g.label) {
                return Err(invalid(format!("duplicate group `{}`", g.label)));
            }
            g.scores.validate(false)?;
            if let ScoreDistribution::Mirror { group } = &g.scores {
                let source = self.groups[..i]
                    .iter()
                    .find(|h| &h.label == group)
                    .ok_or_else(|| {
                        invalid(format!(
                            "mirror source `{group}` must precede `{}`",
                            g.label
                        ))
                    })?;
                if source.count != g.count {
                    return Err(invalid(format!(
                        "mirror `{}` has count {}, source `{group}` has {}",
                        g.label, g.count, source.count
                    )));
                }
                if matches!(source.scores, ScoreDistribution::Mirror { .. }) {
                    return Err(invalid("mirror of a mirror is not supported"));
                }
            }
        }
        if let Some(c) = &self.concentration {
            if !(c.lo < c.hi) {
                return Err(invalid("concentration interval needs lo < hi"));
            }
        }
        Ok(())
    }
}

fn generate_once(cfg: &ScenarioConfig, seed: u64) -> Result<ScoredPopulation, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut individuals = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut group_scores: Vec<(String, Vec<f64>)> = Vec::new();
    for g in &cfg.groups {
        let mirrored = match &g.scores {
            ScoreDistribution::Mirror { group } => group_scores
                .iter()
                .find(|(label, _)| label == group)
                .map(|(_, s)| s.clone()),
            _ => None,
        };
        let mut own = Vec::with_capacity(g.count);
        for k in 0..g.count {
            let score = match &mirrored {
                Some(src) => src[k],
                None => g.scores.sample(&mut rng),
            };
            let random_dims = cfg.feature_dim - usize::from(cfg.score_features);
            let mut features = Vec::with_capacity(cfg.feature_dim);
            if cfg.score_features {
                features.push(score);
            }
            features.extend((0..random_dims).map(|_| rng.random::<f64>()));
            let mut ind = Individual::new(format!("{}-{k:04}", g.label), g.label.clone(), features);
            if cfg.assign_uids {
                ind = ind.with_uid(format!("uid-{:06}", individuals.len()));
            }
            individuals.push(ind);
            own.push(score);
        }
        scores.extend_from_slice(&own);
        group_scores.push((g.label.clone(), own));
    }
    let population = Population::with_feature_dim(cfg.feature_dim, individuals)
        .map_err(|e| invalid(e.to_string()))?;
    ScoredPopulation::from_aligned(population, scores).map_err(|e| invalid(e.to_string()))
}

fn meets_target(sp: &ScoredPopulation, target: &ConcentrationTarget) -> bool {
    interval_concentration(sp, target.lo, target.hi, &target.group)
        .ok()
        .and_then(|c| c.overrepresentation_ratio)
        .is_some_and(|r| r >= target.min_ratio)
}

/// Generates the scenario. With a concentration target, a miss regenerates
/// with `seed + 1`, `seed + 2`, ... up to [`MAX_REGENERATIONS`] times.
pub fn generate(cfg: &ScenarioConfig) -> Result<ScoredPopulation, SynthError> {
    cfg.validate()?;
    let Some(target) = &cfg.concentration else {
        return generate_once(cfg, cfg.seed);
    };
    for attempt in 0..=MAX_REGENERATIONS {
        let sp = generate_once(cfg, cfg.seed.wrapping_add(attempt))?;
        if meets_target(&sp, target) {
            return Ok(sp);
        }
    }
    Err(SynthError::ConcentrationNotReached {
        min_ratio: target.min_ratio,
        attempts: MAX_REGENERATIONS + 1,
    })
}

pub const PRESETS: [&str; 4] = [
    "threshold_push",
    "fold_target",
    "mirror_symmetric",
    "unique_id_vacuity",
];

fn uniform(lo: f64, hi: f64) -> ScoreDistribution {
    ScoreDistribution::Uniform { lo, hi }
}

fn mixture(parts: &[(f64, ScoreDistribution)]) -> ScoreDistribution {
    ScoreDistribution::Mixture {
        components: parts
            .iter()
            .map(|(weight, dist)| MixtureComponent {
                weight: *weight,
                dist: dist.clone(),
            })
            .collect(),
    }
}

fn group(label: &str, count: usize, scores: ScoreDistribution) -> GroupSpec {
    GroupSpec {
        label: label.into(),
        count,
        scores,
    }
}

/// Named, versioned scenario configs.
///
/// * `threshold_push@1`: t = 3. Group A (40) puts 60% of its mass in
///   [3, 3.5] just above t; group B (60) is uniform on [0, 6).
/// * `fold_target@1`: t = 2. Group A (50) puts 70% of its mass in [2, 3];
///   group B (50) is uniform on [0, 5).
/// * `mirror_symmetric@1`: B (50) copies A's (50) scores exactly.
/// * `unique_id_vacuity@1`: 50 individuals with distinct uids and
///   uniform(-10, 10) scores.
pub fn scenario_interval_concentration(name: &str) -> Result<ScenarioConfig, SynthError> {
    let base = |name: &str, seed: u64| ScenarioConfig {
        name: Some(format!("{name}@1")),
        rng: RNG_NAME.into(),
        seed,
        feature_dim: 2,
        score_features: true,
        assign_uids: true,
        groups: Vec::new(),
        threshold: None,
        concentration: None,
    };
    let cfg = match name {
        "threshold_push" => ScenarioConfig {
            groups: vec![
                group(
                    "A",
                    40,
                    mixture(&[(0.6, uniform(3.0, 3.5)), (0.4, uniform(0.0, 3.0))]),
                ),
                group("B", 60, uniform(0.0, 6.0)),
            ],
            threshold: Some(Threshold::at_or_above(3.0)),
            concentration: Some(ConcentrationTarget {
                lo: 3.0,
                hi: 3.5,
                group: "A".into(),
                min_ratio: 1.5,
            }),
            ..base(name, 7)
        },
        "fold_target" => ScenarioConfig {
            groups: vec![
                group(
                    "A",
                    50,
                    mixture(&[(0.7, uniform(2.0, 3.0)), (0.3, uniform(0.0, 2.0))]),
                ),
                group("B", 50, uniform(0.0, 5.0)),
            ],
            threshold: Some(Threshold::at_or_above(2.0)),
            concentration: Some(ConcentrationTarget {
                lo: 2.0,
                hi: 3.0,
                group: "A".into(),
                min_ratio: 1.5,
            }),
            ..base(name, 11)
        },
        "mirror_symmetric" => ScenarioConfig {
            groups: vec![
                group("A", 50, uniform(0.0, 5.0)),
                group("B", 50, ScoreDistribution::Mirror { group: "A".into() }),
            ],
            threshold: Some(Threshold::at_or_above(2.5)),
            ..base(name, 3)
        },
        "unique_id_vacuity" => ScenarioConfig {
            score_features: false,
            groups: vec![group("G", 50, uniform(-10.0, 10.0))],
            ..base(name, 5)
        },
        other => return Err(SynthError::UnknownPreset(other.to_string())),
    };
    Ok(cfg)
}
