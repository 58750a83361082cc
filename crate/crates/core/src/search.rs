//! Brute-force search for IF-preserving score transforms that maximize a
//! gerrymanderer's utility.
//!
//! Utility is linear: every positive-class member of group `g` contributes
//! `weights[g]` (0 for unlisted groups). Candidate parameters come from the
//! observed scores, so the exhaustive grid is its own oracle.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{audit_if, selection_rates, AuditConfig, AuditError, GroupStats};
use crate::population::{ScoredPopulation, Threshold};
use crate::transforms::{
    apply_to_scored, check_nonexpansive, NonExpansiveCheck, ScoreTransform, TransformError,
};

/// Margin used to land a score strictly on the far side of the threshold.
pub const THRESHOLD_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("unknown transform family `{0}`")]
    UnknownFamily(String),
    #[error("resolution must be >= 1")]
    InvalidResolution,
    #[error("empty population")]
    EmptyPopulation,
    #[error("no admissible candidate")]
    NoAdmissibleCandidate,
    #[error("non-finite utility weight for group `{0}`")]
    BadWeight(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Audit(#[from] AuditError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub threshold: Threshold,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

impl UtilitySpec {
    pub fn weight(&self, group: &str) -> f64 {
        self.weights.get(group).copied().unwrap_or(0.0)
    }

    fn validate(&self) -> Result<(), SearchError> {
        if let Some((g, _)) = self.weights.iter().find(|(_, w)| !w.is_finite()) {
            return Err(SearchError::BadWeight(g.clone()));
        }
        Ok(())
    }
}

/// Sum of group weights over the positive class.
pub fn utility(sp: &ScoredPopulation, u: &UtilitySpec) -> f64 {
    sp.iter()
        .filter(|(_, s)| u.threshold.is_positive(*s))
        .map(|(ind, _)| u.weight(&ind.group))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformFamily {
    Translate,
    Reflect,
    Contract,
    Collapse,
    LocalContract,
    Fold,
}

impl TransformFamily {
    pub const ALL: [TransformFamily; 6] = [
        TransformFamily::Translate,
        TransformFamily::Reflect,
        TransformFamily::Contract,
        TransformFamily::Collapse,
        TransformFamily::LocalContract,
        TransformFamily::Fold,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TransformFamily::Translate => "translate",
            TransformFamily::Reflect => "reflect",
            TransformFamily::Contract => "contract",
            TransformFamily::Collapse => "collapse",
            TransformFamily::LocalContract => "local_contract",
            TransformFamily::Fold => "fold",
        }
    }
}

impl fmt::Display for TransformFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TransformFamily {
    type Err = SearchError;
    fn from_str(s: &str) -> Result<Self, SearchError> {
        Self::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| SearchError::UnknownFamily(s.to_string()))
    }
}

fn sorted_dedup(mut xs: Vec<f64>) -> Vec<f64> {
    xs.retain(|x| x.is_finite());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Up to `resolution + 1` rank-quantile picks from the distinct scores.
fn anchors(sp: &ScoredPopulation, resolution: usize) -> Vec<f64> {
    let distinct = sorted_dedup(sp.scores().to_vec());
    let m = distinct.len();
    if m <= 1 {
        return distinct;
    }
    let picks = (0..=resolution)
        .map(|i| {
            let idx = (i as f64 * (m - 1) as f64 / resolution as f64).round() as usize;
            distinct[idx.min(m - 1)]
        })
        .collect();
    sorted_dedup(picks)
}

/// Anchors, midpoints between consecutive anchors, and the threshold.
fn endpoints(anchors: &[f64], t: f64) -> Vec<f64> {
    let mut pts = anchors.to_vec();
    pts.extend(anchors.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    pts.push(t);
    sorted_dedup(pts)
}

fn params(phi: &ScoreTransform) -> Vec<f64> {
    use ScoreTransform::*;
    match *phi {
        Translation { c } => vec![c],
        Reflection { center } => vec![center],
        Contraction { k, center } => vec![k, center],
        ConstantCollapse { y_star } => vec![y_star],
        LocalContraction { t, t_prime, t_star } => vec![t, t_prime, t_star],
        Folding { a, b } => vec![a, b],
        Composition { .. } => vec![],
    }
}

fn cmp_params(a: &ScoreTransform, b: &ScoreTransform) -> std::cmp::Ordering {
    let (pa, pb) = (params(a), params(b));
    for (x, y) in pa.iter().zip(&pb) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    pa.len().cmp(&pb.len())
}

/// Deterministic candidate list for one family: the identity first, then
/// the family's members sorted by parameters with duplicates removed.
pub fn candidate_grid(
    sp: &ScoredPopulation,
    family: TransformFamily,
    resolution: usize,
    threshold: &Threshold,
) -> Result<Vec<ScoreTransform>, SearchError> {
    use ScoreTransform::*;
    if resolution == 0 {
        return Err(SearchError::InvalidResolution);
    }
    if sp.is_empty() {
        return Err(SearchError::EmptyPopulation);
    }
    let t = threshold.t;
    let anchors = anchors(sp, resolution);
    let ends = endpoints(&anchors, t);
    let mut grid: Vec<ScoreTransform> =
        match family {
            TransformFamily::Translate => sorted_dedup(
                anchors
                    .iter()
                    .flat_map(|&s| [t - s, t - s - THRESHOLD_EPS, s - t])
                    .collect(),
            )
            .into_iter()
            .map(|c| Translation { c })
            .collect(),
            TransformFamily::Reflect => ends.iter().map(|&center| Reflection { center }).collect(),
            TransformFamily::Collapse => {
                let mut ys = ends.clone();
                ys.push(t - THRESHOLD_EPS);
                sorted_dedup(ys)
                    .into_iter()
                    .map(|y_star| ConstantCollapse { y_star })
                    .collect()
            }
            TransformFamily::Contract => {
                let steps = resolution.min(4);
                (0..steps)
                    .map(|i| i as f64 / steps as f64)
                    .flat_map(|k| ends.iter().map(move |&center| Contraction { k, center }))
                    .collect()
            }
            TransformFamily::LocalContract => {
                let mut out = Vec::new();
                for (i, &lo) in ends.iter().enumerate() {
                    for &hi in &ends[i + 1..] {
                        let stars =
                            sorted_dedup(vec![lo, (lo + hi) / 2.0, hi, t, t - THRESHOLD_EPS]);
                        out.extend(stars.into_iter().filter(|s| (lo..=hi).contains(s)).map(
                            |t_star| LocalContraction {
                                t: lo,
                                t_prime: hi,
                                t_star,
                            },
                        ));
                    }
                }
                out
            }
            TransformFamily::Fold => {
                let mut out = Vec::new();
                for (i, &a) in ends.iter().enumerate() {
                    out.extend(ends[i + 1..].iter().map(|&b| Folding { a, b }));
                }
                out
            }
        };
    grid.retain(|phi| phi.validate().is_ok() && !phi.is_identity());
    grid.sort_by(cmp_params);
    grid.dedup();
    grid.insert(0, ScoreTransform::identity());
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub families: Vec<TransformFamily>,
    pub resolution: usize,
    /// Seed for the non-expansiveness oracle run on every candidate.
    pub seed: u64,
    /// Random pairs per candidate in that oracle.
    pub oracle_pairs: usize,
}

impl SearchOptions {
    pub fn new(families: Vec<TransformFamily>, resolution: usize) -> Self {
        Self {
            families,
            resolution,
            seed: 0,
            oracle_pairs: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub best_transform: ScoreTransform,
    pub best_utility: f64,
    pub baseline_utility: f64,
    pub candidates_evaluated: usize,
    pub candidates_admissible: usize,
    /// IF audit of the input scores.
    pub baseline_audit_passed: bool,
    /// IF audit of the winning transformed scores.
    pub audit_passed: bool,
    pub group_stats_before: GroupStats,
    pub group_stats_after: GroupStats,
}

/// Evaluates every admissible candidate from the requested families and
/// returns the utility maximizer. Ties go to the earliest candidate, and the
/// identity is always first.
pub fn search_attack(
    sp: &ScoredPopulation,
    u: &UtilitySpec,
    opts: &SearchOptions,
    cfg: &AuditConfig,
) -> Result<AttackResult, SearchError> {
    u.validate()?;
    if opts.resolution == 0 {
        return Err(SearchError::InvalidResolution);
    }
    if sp.is_empty() {
        return Err(SearchError::EmptyPopulation);
    }
    let mut families = opts.families.clone();
    families.sort();
    families.dedup();

    let mut candidates = vec![ScoreTransform::identity()];
    for family in families {
        let grid = candidate_grid(sp, family, opts.resolution, &u.threshold)?;
        candidates.extend(grid.into_iter().skip(1));
    }

    let (lo, hi) = sp.score_range().expect("non-empty");
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let oracle = NonExpansiveCheck::new(lo, hi, opts.oracle_pairs.max(1), opts.seed);
    let weights: Vec<f64> = sp
        .individuals()
        .iter()
        .map(|i| u.weight(&i.group))
        .collect();
    let scores = sp.scores();

    let evaluated: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|phi| {
            let report = check_nonexpansive(phi, &oracle)?;
            if !report.passed {
                return Ok(None);
            }
            let mut total = 0.0;
            for (&s, &w) in scores.iter().zip(&weights) {
                if u.threshold
                    .is_positive(crate::transforms::apply_transform(phi, s)?)
                {
                    total += w;
                }
            }
            Ok(Some(total))
        })
        .collect::<Result<_, TransformError>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (idx, value) in evaluated.iter().enumerate() {
        if let Some(v) = *value {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((idx, v));
            }
        }
    }
    let (best_idx, best_utility) = best.ok_or(SearchError::NoAdmissibleCandidate)?;
    let best_transform = candidates[best_idx].clone();
    let attacked = apply_to_scored(&best_transform, sp)?;

    Ok(AttackResult {
        baseline_utility: utility(sp, u),
        best_utility,
        candidates_evaluated: candidates.len(),
        candidates_admissible: evaluated.iter().filter(|v| v.is_some()).count(),
        baseline_audit_passed: audit_if(sp, cfg)?.passed,
        audit_passed: audit_if(&attacked, cfg)?.passed,
        group_stats_before: selection_rates(sp, &u.threshold),
        group_stats_after: selection_rates(&attacked, &u.threshold),
        best_transform,
    })
}
