//! Individual-fairness (Lipschitz) audits, group selection statistics and
//! the Leibniz table auditor.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::DistributionTable;
use crate::metrics::{Distance, Domain, MetricError, Point, PseudoMetricSpec, AXIOM_SLACK};
use crate::population::{ScoredPopulation, Threshold};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid audit config: {0}")]
    Config(String),
    #[error("predictor has no distribution for `{0}`")]
    MissingIndividual(String),
    #[error("outcome sets differ")]
    OutcomeSetMismatch,
}

/// `d` on individuals, `D` on scores and the comparison slack.
///
/// JSON: `{"d": <metric>, "D": <metric>, "slack": 1e-12}`. A `d` without a
/// domain is read as feature-space, a `D` without one as score-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AuditConfigRepr", into = "AuditConfigRepr")]
pub struct AuditConfig {
    individual_metric: PseudoMetricSpec,
    prediction_metric: PseudoMetricSpec,
    slack: f64,
}

#[derive(Serialize, Deserialize)]
struct AuditConfigRepr {
    d: PseudoMetricSpec,
    #[serde(rename = "D")]
    big_d: PseudoMetricSpec,
    #[serde(default = "default_slack")]
    slack: f64,
}

fn default_slack() -> f64 {
    AXIOM_SLACK
}

impl TryFrom<AuditConfigRepr> for AuditConfig {
    type Error = AuditError;
    fn try_from(r: AuditConfigRepr) -> Result<Self, AuditError> {
        AuditConfig::with_slack(r.d, r.big_d, r.slack)
    }
}

impl From<AuditConfig> for AuditConfigRepr {
    fn from(c: AuditConfig) -> Self {
        AuditConfigRepr {
            d: c.individual_metric,
            big_d: c.prediction_metric,
            slack: c.slack,
        }
    }
}

impl AuditConfig {
    pub fn new(d: PseudoMetricSpec, big_d: PseudoMetricSpec) -> Result<Self, AuditError> {
        Self::with_slack(d, big_d, AXIOM_SLACK)
    }

    pub fn with_slack(
        d: PseudoMetricSpec,
        big_d: PseudoMetricSpec,
        slack: f64,
    ) -> Result<Self, AuditError> {
        let d = d.resolved(Domain::FeatureSpace);
        let big_d = big_d.resolved(Domain::ScoreSpace);
        if d.domain() == Domain::ScoreSpace {
            return Err(AuditError::Config(
                "d must be on feature-space or uid-space".into(),
            ));
        }
        if big_d.domain() != Domain::ScoreSpace {
            return Err(AuditError::Config("D must be on score-space".into()));
        }
        if !(slack.is_finite() && slack >= 0.0) {
            return Err(AuditError::Config(format!(
                "slack must be >= 0, got {slack}"
            )));
        }
        d.validate()?;
        big_d.validate()?;
        Ok(Self {
            individual_metric: d,
            prediction_metric: big_d,
            slack,
        })
    }

    pub fn individual_metric(&self) -> &PseudoMetricSpec {
        &self.individual_metric
    }

    pub fn prediction_metric(&self) -> &PseudoMetricSpec {
        &self.prediction_metric
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn set_slack(&mut self, slack: f64) -> Result<(), AuditError> {
        *self = Self::with_slack(
            self.individual_metric.clone(),
            self.prediction_metric.clone(),
            slack,
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub p: String,
    pub q: String,
    pub d: f64,
    #[serde(rename = "D")]
    pub big_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub passed: bool,
    pub n_pairs: u64,
    /// Sorted by `(p, q)` with `p < q`.
    pub violations: Vec<Violation>,
    /// Largest `D - d` among pairs that passed only because of the slack.
    pub max_slack_used: f64,
}

/// Checks `D(M p, M q) <= d(p, q) + slack` on every unordered pair.
pub fn audit_if(sp: &ScoredPopulation, cfg: &AuditConfig) -> Result<AuditReport, AuditError> {
    let d_domain = cfg.individual_metric.domain();
    let points: Vec<Point<'_>> = sp
        .individuals()
        .iter()
        .map(|i| Point::of_individual(d_domain, i))
        .collect::<Result<_, _>>()?;
    let scores = sp.scores();
    let ids: Vec<&str> = sp.individuals().iter().map(|i| i.id.as_str()).collect();
    let n = points.len();

    let per_row: Vec<(Vec<Violation>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut found = Vec::new();
            let mut used = 0.0f64;
            for j in i + 1..n {
                let d = cfg.individual_metric.distance(&points[i], &points[j])?;
                let big_d = cfg
                    .prediction_metric
                    .distance(&Point::Score(scores[i]), &Point::Score(scores[j]))?;
                if big_d > d + cfg.slack {
                    let (p, q) = if ids[i] <= ids[j] { (i, j) } else { (j, i) };
                    found.push(Violation {
                        p: ids[p].to_string(),
                        q: ids[q].to_string(),
                        d,
                        big_d,
                    });
                } else if big_d > d {
                    used = used.max(big_d - d);
                }
            }
            Ok((found, used))
        })
        .collect::<Result<_, MetricError>>()?;

    let mut violations = Vec::new();
    let mut max_slack_used = 0.0f64;
    for (v, used) in per_row {
        violations.extend(v);
        max_slack_used = max_slack_used.max(used);
    }
    violations.sort_by(|a, b| (&a.p, &a.q).cmp(&(&b.p, &b.q)));
    Ok(AuditReport {
        passed: violations.is_empty(),
        n_pairs: (n as u64) * (n.saturating_sub(1) as u64) / 2,
        violations,
        max_slack_used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRate {
    pub count: usize,
    pub positives: usize,
    pub selection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalConcentration {
    pub lo: f64,
    pub hi: f64,
    pub group: String,
    pub occupants: usize,
    pub group_occupants: usize,
    /// Share of interval occupants in `group`; `None` for an empty interval.
    pub fraction_of_interval: Option<f64>,
    /// Share of the whole population in `group`.
    pub base_rate: f64,
    /// `fraction_of_interval / base_rate`; `None` when either is undefined.
    pub overrepresentation_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub threshold: Threshold,
    pub per_group: BTreeMap<String, GroupRate>,
    /// Largest pairwise selection-rate gap.
    pub spd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_concentration: Option<IntervalConcentration>,
}

impl GroupStats {
    pub fn rate(&self, group: &str) -> Option<f64> {
        self.per_group.get(group).map(|g| g.selection_rate)
    }
}

pub fn selection_rates(sp: &ScoredPopulation, th: &Threshold) -> GroupStats {
    let mut per_group: BTreeMap<String, GroupRate> = BTreeMap::new();
    for (ind, score) in sp.iter() {
        let g = per_group.entry(ind.group.clone()).or_insert(GroupRate {
            count: 0,
            positives: 0,
            selection_rate: 0.0,
        });
        g.count += 1;
        if th.is_positive(score) {
            g.positives += 1;
        }
    }
    for g in per_group.values_mut() {
        g.selection_rate = g.positives as f64 / g.count as f64;
    }
    let rates: Vec<f64> = per_group.values().map(|g| g.selection_rate).collect();
    let spd = match (
        rates.iter().copied().reduce(f64::min),
        rates.iter().copied().reduce(f64::max),
    ) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    GroupStats {
        threshold: *th,
        per_group,
        spd,
        interval_concentration: None,
    }
}

/// Composition of the closed score interval `[lo, hi]` with respect to `group`.
pub fn interval_concentration(
    sp: &ScoredPopulation,
    lo: f64,
    hi: f64,
    group: &str,
) -> Result<IntervalConcentration, AuditError> {
    if !(lo < hi) {
        return Err(AuditError::Config(format!(
            "interval needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mut occupants = 0;
    let mut group_occupants = 0;
    let mut group_total = 0;
    for (ind, s) in sp.iter() {
        let in_group = ind.group == group;
        group_total += usize::from(in_group);
        if (lo..=hi).contains(&s) {
            occupants += 1;
            group_occupants += usize::from(in_group);
        }
    }
    let base_rate = if sp.is_empty() {
        0.0
    } else {
        group_total as f64 / sp.len() as f64
    };
    let fraction = (occupants > 0).then(|| group_occupants as f64 / occupants as f64);
    let ratio = fraction.filter(|_| base_rate > 0.0).map(|f| f / base_rate);
    Ok(IntervalConcentration {
        lo,
        hi,
        group: group.to_string(),
        occupants,
        group_occupants,
        fraction_of_interval: fraction,
        base_rate,
        overrepresentation_ratio: ratio,
    })
}

/// A fully specified prediction distribution for every individual in a
/// finite set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LeibnizTable(pub DistributionTable);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeibnizReport {
    pub passed: bool,
    pub n_checked: usize,
    /// Ids whose predictor distribution differs from the table, sorted.
    pub mismatches: Vec<String>,
}

/// Exact rational comparison of the predictor's distribution against the
/// table for every id the table specifies. Extra predictor rows are ignored.
pub fn leibniz_audit(
    predictor: &DistributionTable,
    table: &LeibnizTable,
) -> Result<LeibnizReport, AuditError> {
    let table = &table.0;
    if predictor.outcomes() != table.outcomes() {
        return Err(AuditError::OutcomeSetMismatch);
    }
    let mut mismatches = Vec::new();
    for (id, row) in table.rows() {
        let got = predictor
            .row(id)
            .ok_or_else(|| AuditError::MissingIndividual(id.clone()))?;
        if got != row.as_slice() {
            mismatches.push(id.clone());
        }
    }
    Ok(LeibnizReport {
        passed: mismatches.is_empty(),
        n_checked: table.len(),
        mismatches,
    })
}
