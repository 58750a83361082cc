//! Score maps `phi: R -> R` used to build manipulated predictors `phi . M`,
//! and a randomized + boundary-point oracle for non-expansiveness.
//!
//! Every shipped variant is non-expansive for the Euclidean metric, so
//! composing any of them after an individually fair score keeps the
//! Lipschitz condition intact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::AXIOM_SLACK;
use crate::population::{PopulationError, ScoredPopulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("non-finite input score {0}")]
    NonFiniteInput(f64),
    #[error("invalid transform: {0}")]
    Invalid(String),
    #[error("invalid domain [{lo}, {hi}] or pair count")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error(transparent)]
    Population(#[from] PopulationError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreTransform {
    /// `y + c`
    #[serde(rename = "translate")]
    Translation { c: f64 },
    /// `-y + 2 center`
    #[serde(rename = "reflect")]
    Reflection { center: f64 },
    /// `center + k (y - center)`, `0 <= k < 1`
    #[serde(rename = "contract")]
    Contraction { k: f64, center: f64 },
    /// Sends every score to `y_star`.
    #[serde(rename = "collapse")]
    ConstantCollapse { y_star: f64 },
    /// Collapses `[t, t_prime]` onto `t_star` and shifts the outside inward so
    /// the map stays continuous.
    #[serde(rename = "local_contract")]
    LocalContraction { t: f64, t_prime: f64, t_star: f64 },
    /// Reverses `[a, b]` around `a` and drops everything above `b` by `2(b-a)`.
    #[serde(rename = "fold")]
    Folding { a: f64, b: f64 },
    /// Applies `steps` left to right.
    #[serde(rename = "compose")]
    Composition { steps: Vec<ScoreTransform> },
}

impl ScoreTransform {
    pub fn identity() -> Self {
        ScoreTransform::Translation { c: 0.0 }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, ScoreTransform::Translation { c } if *c == 0.0)
    }

    pub fn validate(&self) -> Result<(), TransformError> {
        use ScoreTransform::*;
        let finite = |name: &str, xs: &[f64]| {
            if xs.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(TransformError::Invalid(format!(
                    "{name}: parameters must be finite"
                )))
            }
        };
        match self {
            Translation { c } => finite("translate", &[*c]),
            Reflection { center } => finite("reflect", &[*center]),
            ConstantCollapse { y_star } => finite("collapse", &[*y_star]),
            Contraction { k, center } => {
                finite("contract", &[*k, *center])?;
                if !(0.0..1.0).contains(k) {
                    return Err(TransformError::Invalid(format!(
                        "contract: k must lie in [0, 1), got {k}"
                    )));
                }
                Ok(())
            }
            LocalContraction { t, t_prime, t_star } => {
                finite("local_contract", &[*t, *t_prime, *t_star])?;
                if !(t < t_prime && t <= t_star && t_star <= t_prime) {
                    return Err(TransformError::Invalid(format!(
                        "local_contract: need t < t_prime and t <= t_star <= t_prime, got ({t}, {t_prime}, {t_star})"
                    )));
                }
                Ok(())
            }
            Folding { a, b } => {
                finite("fold", &[*a, *b])?;
                if !(a < b) {
                    return Err(TransformError::Invalid(format!(
                        "fold: need a < b, got a={a}, b={b}"
                    )));
                }
                Ok(())
            }
            Composition { steps } => {
                if steps.is_empty() {
                    return Err(TransformError::Invalid(
                        "compose: steps must be non-empty".into(),
                    ));
                }
                steps.iter().try_for_each(ScoreTransform::validate)
            }
        }
    }

    // Caller has validated.
    fn eval(&self, y: f64) -> f64 {
        use ScoreTransform::*;
        match *self {
            Translation { c } => y + c,
            Reflection { center } => -y + 2.0 * center,
            Contraction { k, center } => center + k * (y - center),
            ConstantCollapse { y_star } => y_star,
            LocalContraction { t, t_prime, t_star } => {
                if y < t {
                    y + (t_star - t)
                } else if y > t_prime {
                    y - (t_prime - t_star)
                } else {
                    t_star
                }
            }
            Folding { a, b } => {
                if y > b {
                    y - 2.0 * (b - a)
                } else if y >= a {
                    -y + 2.0 * a
                } else {
                    y
                }
            }
            Composition { ref steps } => steps.iter().fold(y, |acc, s| s.eval(acc)),
        }
    }

    /// Points where the map changes piece, plus nearby probes on each side.
    /// For a fold these cover all six (below / inside / above) pair cases.
    pub fn boundary_points(&self) -> Vec<f64> {
        use ScoreTransform::*;
        let mut pts = match self {
            Translation { c } => vec![-1.0, 0.0, 1.0, *c],
            Reflection { center } => vec![center - 1.0, *center, center + 1.0],
            Contraction { center, .. } => vec![center - 1.0, *center, center + 1.0],
            ConstantCollapse { y_star } => vec![y_star - 1.0, *y_star, y_star + 1.0],
            LocalContraction { t, t_prime, t_star } => {
                let w = t_prime - t;
                vec![
                    t - w,
                    t - w / 4.0,
                    *t,
                    *t_star,
                    (t + t_prime) / 2.0,
                    *t_prime,
                    t_prime + w / 4.0,
                    t_prime + w,
                ]
            }
            Folding { a, b } => {
                let w = b - a;
                vec![
                    a - w,
                    a - w / 2.0,
                    *a,
                    a + w / 4.0,
                    (a + b) / 2.0,
                    b - w / 4.0,
                    *b,
                    b + w / 2.0,
                    b + w,
                ]
            }
            Composition { steps } => steps.iter().flat_map(|s| s.boundary_points()).collect(),
        };
        pts.retain(|x| x.is_finite());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// A real-valued score map that the non-expansiveness oracle can probe.
pub trait ScoreMap {
    fn map(&self, y: f64) -> Result<f64, TransformError>;

    /// Extra probe points always included by [`check_nonexpansive`].
    fn default_boundary(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl ScoreMap for ScoreTransform {
    fn map(&self, y: f64) -> Result<f64, TransformError> {
        apply_transform(self, y)
    }

    fn default_boundary(&self) -> Vec<f64> {
        self.boundary_points()
    }
}

/// `phi(y)` for a validated transform.
pub fn apply_transform(phi: &ScoreTransform, y: f64) -> Result<f64, TransformError> {
    if !y.is_finite() {
        return Err(TransformError::NonFiniteInput(y));
    }
    phi.validate()?;
    Ok(phi.eval(y))
}

/// `phi . M`: same individuals, each score replaced by `phi(score)`.
pub fn apply_to_scored(
    phi: &ScoreTransform,
    sp: &ScoredPopulation,
) -> Result<ScoredPopulation, TransformError> {
    phi.validate()?;
    let scores = sp.scores().iter().map(|&y| phi.eval(y)).collect();
    Ok(sp.with_scores(scores)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub p: f64,
    pub q: f64,
    pub image_distance: f64,
    pub distance: f64,
}

impl PairWitness {
    pub fn ratio(&self) -> f64 {
        self.image_distance / self.distance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonExpansivenessReport {
    pub passed: bool,
    pub pairs_checked: u64,
    /// Pair with the largest `|phi p - phi q| / |p - q|` among distinct points.
    pub max_ratio_pair: Option<PairWitness>,
    pub n_violations: u64,
    /// First [`MAX_WITNESSES`] violating pairs in check order.
    pub violations: Vec<PairWitness>,
}

pub const MAX_WITNESSES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct NonExpansiveCheck {
    pub domain_lo: f64,
    pub domain_hi: f64,
    pub n_random_pairs: usize,
    pub seed: u64,
    pub boundary_points: Vec<f64>,
}

impl NonExpansiveCheck {
    pub fn new(domain_lo: f64, domain_hi: f64, n_random_pairs: usize, seed: u64) -> Self {
        Self {
            domain_lo,
            domain_hi,
            n_random_pairs,
            seed,
            boundary_points: Vec::new(),
        }
    }

    pub fn with_boundary(mut self, points: Vec<f64>) -> Self {
        self.boundary_points = points;
        self
    }
}

struct Tally {
    pairs: u64,
    max: Option<PairWitness>,
    n_violations: u64,
    violations: Vec<PairWitness>,
}

impl Tally {
    fn visit(&mut self, p: f64, fp: f64, q: f64, fq: f64) {
        self.pairs += 1;
        let w = PairWitness {
            p,
            q,
            image_distance: (fp - fq).abs(),
            distance: (p - q).abs(),
        };
        if !(w.image_distance <= w.distance + AXIOM_SLACK) {
            self.n_violations += 1;
            if self.violations.len() < MAX_WITNESSES {
                self.violations.push(w.clone());
            }
        }
        if w.distance > 0.0 && self.max.as_ref().is_none_or(|m| w.ratio() > m.ratio()) {
            self.max = Some(w);
        }
    }
}

/// Tests `|phi p - phi q| <= |p - q| + 1e-12` on `n_random_pairs` seeded
/// uniform pairs from the domain, on all pairs of boundary points (the
/// caller's plus the map's own breakpoints), and on every boundary/random
/// mixed pair.
pub fn check_nonexpansive<M: ScoreMap + ?Sized>(
    phi: &M,
    check: &NonExpansiveCheck,
) -> Result<NonExpansivenessReport, TransformError> {
    let (lo, hi) = (check.domain_lo, check.domain_hi);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || check.n_random_pairs == 0 {
        return Err(TransformError::InvalidDomain { lo, hi });
    }
    let mut boundary: Vec<f64> = check
        .boundary_points
        .iter()
        .copied()
        .chain(phi.default_boundary())
        .filter(|x| x.is_finite())
        .collect();
    boundary.sort_by(f64::total_cmp);
    boundary.dedup();
    let boundary: Vec<(f64, f64)> = boundary
        .into_iter()
        .map(|x| phi.map(x).map(|fx| (x, fx)))
        .collect::<Result<_, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
    let mut tally = Tally {
        pairs: 0,
        max: None,
        n_violations: 0,
        violations: Vec::new(),
    };
    for _ in 0..check.n_random_pairs {
        let p = rng.random_range(lo..=hi);
        let q = rng.random_range(lo..=hi);
        let (fp, fq) = (phi.map(p)?, phi.map(q)?);
        tally.visit(p, fp, q, fq);
        for &(x, fx) in &boundary {
            tally.visit(x, fx, p, fp);
            tally.visit(x, fx, q, fq);
        }
    }
    for (i, &(p, fp)) in boundary.iter().enumerate() {
        for &(q, fq) in &boundary[i + 1..] {
            tally.visit(p, fp, q, fq);
        }
    }
    Ok(NonExpansivenessReport {
        passed: tally.n_violations == 0,
        pairs_checked: tally.pairs,
        max_ratio_pair: tally.max,
        n_violations: tally.n_violations,
        violations: tally.violations,
    })
}

/// True iff `|phi p - phi q| = |p - q|` within 1e-12 on every pair.
pub fn isometry_check<M: ScoreMap + ?Sized>(
    phi: &M,
    pairs: &[(f64, f64)],
) -> Result<bool, TransformError> {
    for &(p, q) in pairs {
        let image = (phi.map(p)? - phi.map(q)?).abs();
        if (image - (p - q).abs()).abs() > AXIOM_SLACK {
            return Ok(false);
        }
    }
    Ok(true)
}
