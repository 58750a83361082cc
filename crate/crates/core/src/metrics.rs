//! Declarative pseudo-metrics for the individual space and the prediction
//! space, plus an exhaustive axiom validator over finite samples.
//!
//! Identity of indiscernibles is never required: `d(p, q) = 0` for `p != q`
//! is allowed everywhere.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::population::Individual;

/// Additive slack used for every floating-point axiom comparison.
pub const AXIOM_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("uid-space metric applied to individual `{0}` without uid")]
    MissingUid(String),
    #[error("metric `{kind}` cannot be evaluated on {domain} points")]
    Inapplicable {
        kind: &'static str,
        domain: &'static str,
    },
    #[error("invalid metric spec: {0}")]
    InvalidSpec(String),
    #[error("sample must be non-empty")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    FeatureSpace,
    ScoreSpace,
    UidSpace,
}

impl Domain {
    fn name(self) -> &'static str {
        match self {
            Domain::FeatureSpace => "feature-space",
            Domain::ScoreSpace => "score-space",
            Domain::UidSpace => "uid-space",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    Trivial,
    Discrete,
    Euclidean,
    WeightedLp { p: f64, weights: Vec<f64> },
    CappedEuclidean { cap: f64 },
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Trivial => "trivial",
            MetricKind::Discrete => "discrete",
            MetricKind::Euclidean => "euclidean",
            MetricKind::WeightedLp { .. } => "weighted_lp",
            MetricKind::CappedEuclidean { .. } => "capped_euclidean",
        }
    }
}

/// A metric kind plus the domain it measures.
///
/// The JSON form is the kind object with an optional `"domain"` key, e.g.
/// `{"kind":"discrete","domain":"uid-space"}`. When the key is absent the
/// domain is decided by the context that loads the spec (see
/// [`PseudoMetricSpec::resolved`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoMetricSpec {
    #[serde(flatten)]
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
}

/// A point handed to a metric. Borrowed so pairwise audits do not allocate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point<'a> {
    Score(f64),
    Features(&'a [f64]),
    Uid(&'a str),
}

impl<'a> Point<'a> {
    /// Projects an individual into `domain`.
    pub fn of_individual(domain: Domain, ind: &'a Individual) -> Result<Self, MetricError> {
        match domain {
            Domain::FeatureSpace => Ok(Point::Features(&ind.features)),
            Domain::UidSpace => ind
                .uid
                .as_deref()
                .map(Point::Uid)
                .ok_or_else(|| MetricError::MissingUid(ind.id.clone())),
            Domain::ScoreSpace => Err(MetricError::Inapplicable {
                kind: "individual projection",
                domain: "score-space",
            }),
        }
    }

    fn domain(&self) -> Domain {
        match self {
            Point::Score(_) => Domain::ScoreSpace,
            Point::Features(_) => Domain::FeatureSpace,
            Point::Uid(_) => Domain::UidSpace,
        }
    }
}

/// Anything that can measure a distance between two points. Implemented by
/// [`PseudoMetricSpec`]; tests plug in deliberately broken metrics.
pub trait Distance {
    fn distance(&self, p: &Point<'_>, q: &Point<'_>) -> Result<f64, MetricError>;
}

impl PseudoMetricSpec {
    pub fn new(kind: MetricKind, domain: Domain) -> Self {
        Self {
            kind,
            domain: Some(domain),
        }
    }

    pub fn trivial(domain: Domain) -> Self {
        Self::new(MetricKind::Trivial, domain)
    }

    pub fn discrete(domain: Domain) -> Self {
        Self::new(MetricKind::Discrete, domain)
    }

    pub fn euclidean(domain: Domain) -> Self {
        Self::new(MetricKind::Euclidean, domain)
    }

    pub fn weighted_lp(p: f64, weights: Vec<f64>, domain: Domain) -> Self {
        Self::new(MetricKind::WeightedLp { p, weights }, domain)
    }

    pub fn capped_euclidean(cap: f64, domain: Domain) -> Self {
        Self::new(MetricKind::CappedEuclidean { cap }, domain)
    }

    /// The declared domain, falling back to score-space.
    pub fn domain(&self) -> Domain {
        self.domain.unwrap_or(Domain::ScoreSpace)
    }

    /// Copy with a missing domain filled in from `default`.
    pub fn resolved(&self, default: Domain) -> Self {
        Self {
            kind: self.kind.clone(),
            domain: Some(self.domain.unwrap_or(default)),
        }
    }

    /// Checks parameter invariants and kind/domain compatibility.
    pub fn validate(&self) -> Result<(), MetricError> {
        let domain = self.domain();
        match &self.kind {
            MetricKind::Trivial | MetricKind::Discrete => {}
            MetricKind::Euclidean
            | MetricKind::CappedEuclidean { .. }
            | MetricKind::WeightedLp { .. }
                if domain == Domain::UidSpace =>
            {
                return Err(MetricError::Inapplicable {
                    kind: self.kind.name(),
                    domain: domain.name(),
                })
            }
            MetricKind::Euclidean => {}
            MetricKind::WeightedLp { p, weights } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(MetricError::InvalidSpec(format!(
                        "weighted_lp exponent must be a finite p >= 1, got {p}"
                    )));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(MetricError::InvalidSpec(
                        "weighted_lp weights must be finite and non-negative".into(),
                    ));
                }
                if domain == Domain::ScoreSpace && weights.len() != 1 {
                    return Err(MetricError::InvalidSpec(
                        "weighted_lp on score-space takes exactly one weight".into(),
                    ));
                }
            }
            MetricKind::CappedEuclidean { cap } => {
                if !(cap.is_finite() && *cap > 0.0) {
                    return Err(MetricError::InvalidSpec(format!(
                        "capped_euclidean cap must be finite and > 0, got {cap}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn euclidean(p: &Point<'_>, q: &Point<'_>, kind: &'static str) -> Result<f64, MetricError> {
    match (p, q) {
        (Point::Score(a), Point::Score(b)) => Ok((a - b).abs()),
        (Point::Features(a), Point::Features(b)) => {
            check_dims(a, b)?;
            Ok(a.iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt())
        }
        _ => Err(inapplicable(kind, p, q)),
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<(), MetricError> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(MetricError::DimensionMismatch(a.len(), b.len()))
    }
}

fn inapplicable(kind: &'static str, p: &Point<'_>, q: &Point<'_>) -> MetricError {
    let domain = if p.domain() == q.domain() {
        p.domain().name()
    } else {
        "mixed-domain"
    };
    MetricError::Inapplicable { kind, domain }
}

impl Distance for PseudoMetricSpec {
    fn distance(&self, p: &Point<'_>, q: &Point<'_>) -> Result<f64, MetricError> {
        let kind = self.kind.name();
        match &self.kind {
            MetricKind::Trivial => match (p, q) {
                (Point::Features(a), Point::Features(b)) => check_dims(a, b).map(|_| 0.0),
                _ if p.domain() == q.domain() => Ok(0.0),
                _ => Err(inapplicable(kind, p, q)),
            },
            MetricKind::Discrete => {
                let same = match (p, q) {
                    (Point::Score(a), Point::Score(b)) => a.to_bits() == b.to_bits(),
                    (Point::Features(a), Point::Features(b)) => {
                        check_dims(a, b)?;
                        a.iter()
                            .zip(b.iter())
                            .all(|(x, y)| x.to_bits() == y.to_bits())
                    }
                    (Point::Uid(a), Point::Uid(b)) => a == b,
                    _ => return Err(inapplicable(kind, p, q)),
                };
                Ok(if same { 0.0 } else { 1.0 })
            }
            MetricKind::Euclidean => euclidean(p, q, kind),
            MetricKind::CappedEuclidean { cap } => Ok(euclidean(p, q, kind)?.min(*cap)),
            MetricKind::WeightedLp { p: exp, weights } => {
                let (a, b): (&[f64], &[f64]) = match (p, q) {
                    (Point::Score(a), Point::Score(b)) => {
                        (std::slice::from_ref(a), std::slice::from_ref(b))
                    }
                    (Point::Features(a), Point::Features(b)) => (a, b),
                    _ => return Err(inapplicable(kind, p, q)),
                };
                check_dims(a, b)?;
                if weights.len() != a.len() {
                    return Err(MetricError::DimensionMismatch(weights.len(), a.len()));
                }
                let sum: f64 = a
                    .iter()
                    .zip(b)
                    .zip(weights)
                    .map(|((x, y), w)| w * (x - y).abs().powf(*exp))
                    .sum();
                Ok(sum.powf(1.0 / exp))
            }
        }
    }
}

/// Distance between two points under `spec`.
pub fn eval_metric(
    spec: &PseudoMetricSpec,
    p: &Point<'_>,
    q: &Point<'_>,
) -> Result<f64, MetricError> {
    spec.distance(p, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    NonNegativity,
    ZeroSelfDistance,
    Symmetry,
    TriangleInequality,
}

/// One failed axiom instance. `points` are indices into the validated sample;
/// `values` are the distances involved, in the order the axiom reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub points: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValidationReport {
    pub passed: bool,
    pub n_points: usize,
    pub violations: Vec<AxiomViolation>,
}

/// Checks the pseudo-metric axioms over every pair and every ordered triple
/// of `sample`.
pub fn validate_pseudometric<M: Distance + ?Sized>(
    metric: &M,
    sample: &[Point<'_>],
) -> Result<MetricValidationReport, MetricError> {
    if sample.is_empty() {
        return Err(MetricError::EmptySample);
    }
    let n = sample.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = metric.distance(&sample[i], &sample[j])?;
        }
    }
    let d = |i: usize, j: usize| dist[i * n + j];

    let mut violations = Vec::new();
    for i in 0..n {
        if d(i, i).abs() > AXIOM_SLACK || d(i, i).is_nan() {
            violations.push(AxiomViolation {
                axiom: Axiom::ZeroSelfDistance,
                points: vec![i],
                values: vec![d(i, i)],
            });
        }
        for j in 0..n {
            // NaN fails this check too.
            if !(d(i, j) >= 0.0) {
                violations.push(AxiomViolation {
                    axiom: Axiom::NonNegativity,
                    points: vec![i, j],
                    values: vec![d(i, j)],
                });
            }
            if j > i && !((d(i, j) - d(j, i)).abs() <= AXIOM_SLACK) {
                violations.push(AxiomViolation {
                    axiom: Axiom::Symmetry,
                    points: vec![i, j],
                    values: vec![d(i, j), d(j, i)],
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if !(d(i, k) <= d(i, j) + d(j, k) + AXIOM_SLACK) {
                    violations.push(AxiomViolation {
                        axiom: Axiom::TriangleInequality,
                        points: vec![i, j, k],
                        values: vec![d(i, k), d(i, j), d(j, k)],
                    });
                }
            }
        }
    }
    Ok(MetricValidationReport {
        passed: violations.is_empty(),
        n_points: n,
        violations,
    })
}
