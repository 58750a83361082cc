//! Individuals, finite populations and scored populations.
//!
//! Everything here is immutable once constructed. Constructors validate the
//! population invariants (unique ids, unique uids, a single feature
//! dimension), so downstream modules can index freely.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopulationError {
    #[error("duplicate individual id `{0}`")]
    DuplicateId(String),
    #[error("duplicate uid `{uid}` (individual `{id}`)")]
    DuplicateUid { id: String, uid: String },
    #[error("individual `{id}` has {found} features, expected {expected}")]
    FeatureDimension {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("individual `{0}` has a non-finite feature value")]
    NonFiniteFeature(String),
    #[error("individual id must not be empty")]
    EmptyId,
    #[error("no score for individual `{0}`")]
    MissingScore(String),
    #[error("score given for unknown individual `{0}`")]
    UnknownId(String),
    #[error("score for individual `{0}` is not finite")]
    NonFiniteScore(String),
    #[error("expected {expected} aligned scores, got {found}")]
    ScoreCount { expected: usize, found: usize },
}

/// A single member of the individual space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: String,
    pub group: String,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uid: Option<String>,
}

impl Individual {
    pub fn new(id: impl Into<String>, group: impl Into<String>, features: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            group: group.into(),
            features,
            uid: None,
        }
    }

    pub fn with_uid(mut self, uid: impl Into<String>) -> Self {
        self.uid = Some(uid.into());
        self
    }
}

/// A finite, ordered sample of individuals sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    individuals: Vec<Individual>,
    feature_dim: usize,
}

#[derive(Deserialize)]
struct PopulationRepr {
    individuals: Vec<Individual>,
    feature_dim: usize,
}

impl<'de> Deserialize<'de> for Population {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PopulationRepr::deserialize(deserializer)?;
        Population::with_feature_dim(repr.feature_dim, repr.individuals)
            .map_err(serde::de::Error::custom)
    }
}

impl Population {
    /// Builds a population, taking the feature dimension from the first
    /// individual (0 for an empty population).
    pub fn new(individuals: Vec<Individual>) -> Result<Self, PopulationError> {
        let dim = individuals.first().map_or(0, |i| i.features.len());
        Self::with_feature_dim(dim, individuals)
    }

    pub fn with_feature_dim(
        feature_dim: usize,
        individuals: Vec<Individual>,
    ) -> Result<Self, PopulationError> {
        let mut ids = HashSet::with_capacity(individuals.len());
        let mut uids = HashSet::new();
        for ind in &individuals {
            if ind.id.is_empty() {
                return Err(PopulationError::EmptyId);
            }
            if !ids.insert(ind.id.as_str()) {
                return Err(PopulationError::DuplicateId(ind.id.clone()));
            }
            if ind.features.len() != feature_dim {
                return Err(PopulationError::FeatureDimension {
                    id: ind.id.clone(),
                    expected: feature_dim,
                    found: ind.features.len(),
                });
            }
            if ind.features.iter().any(|f| !f.is_finite()) {
                return Err(PopulationError::NonFiniteFeature(ind.id.clone()));
            }
            if let Some(uid) = &ind.uid {
                if !uids.insert(uid.as_str()) {
                    return Err(PopulationError::DuplicateUid {
                        id: ind.id.clone(),
                        uid: uid.clone(),
                    });
                }
            }
        }
        Ok(Self {
            individuals,
            feature_dim,
        })
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Individual> {
        self.individuals.iter().find(|i| i.id == id)
    }

    /// Distinct group labels, sorted.
    pub fn groups(&self) -> Vec<String> {
        let mut groups: Vec<String> = self.individuals.iter().map(|i| i.group.clone()).collect();
        groups.sort();
        groups.dedup();
        groups
    }
}

/// A population together with one finite real score per individual.
///
/// Scores are stored aligned with `population().individuals()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPopulation {
    population: Population,
    scores: Vec<f64>,
}

impl ScoredPopulation {
    /// Builds a scored population from scores aligned with the individuals.
    pub fn from_aligned(population: Population, scores: Vec<f64>) -> Result<Self, PopulationError> {
        let individuals = population.individuals();
        if scores.len() < individuals.len() {
            return Err(PopulationError::MissingScore(
                individuals[scores.len()].id.clone(),
            ));
        }
        if scores.len() > individuals.len() {
            return Err(PopulationError::ScoreCount {
                expected: individuals.len(),
                found: scores.len(),
            });
        }
        for (ind, s) in individuals.iter().zip(&scores) {
            if !s.is_finite() {
                return Err(PopulationError::NonFiniteScore(ind.id.clone()));
            }
        }
        Ok(Self { population, scores })
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn individuals(&self) -> &[Individual] {
        self.population.individuals()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.individuals()
            .iter()
            .position(|i| i.id == id)
            .map(|idx| self.scores[idx])
    }

    /// (individual, score) pairs in population order.
    pub fn iter(&self) -> impl Iterator<Item = (&Individual, f64)> {
        self.individuals().iter().zip(self.scores.iter().copied())
    }

    pub fn scores_by_id(&self) -> BTreeMap<String, f64> {
        self.iter().map(|(i, s)| (i.id.clone(), s)).collect()
    }

    /// Same population with every score replaced; the new scores must be
    /// aligned and finite.
    pub fn with_scores(&self, scores: Vec<f64>) -> Result<Self, PopulationError> {
        Self::from_aligned(self.population.clone(), scores)
    }

    /// Smallest and largest score, or `None` when empty.
    pub fn score_range(&self) -> Option<(f64, f64)> {
        let mut it = self.scores.iter().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), s| (lo.min(s), hi.max(s))))
    }
}

/// Which side of the threshold is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtOrAbove,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub t: f64,
    pub direction: Direction,
}

impl Threshold {
    pub fn at_or_above(t: f64) -> Self {
        Self {
            t,
            direction: Direction::AtOrAbove,
        }
    }

    pub fn below(t: f64) -> Self {
        Self {
            t,
            direction: Direction::Below,
        }
    }

    pub fn is_positive(&self, score: f64) -> bool {
        match self.direction {
            Direction::AtOrAbove => score >= self.t,
            Direction::Below => score < self.t,
        }
    }
}

/// Attaches externally computed scores to a population.
///
/// Extraneous ids are reported before missing ones; ids are checked in
/// sorted order so the error is deterministic.
pub fn apply_predictor<S: std::hash::BuildHasher>(
    population: Population,
    scores_by_id: &HashMap<String, f64, S>,
) -> Result<ScoredPopulation, PopulationError> {
    let known: HashSet<&str> = population
        .individuals()
        .iter()
        .map(|i| i.id.as_str())
        .collect();
    let mut unknown: Vec<&String> = scores_by_id
        .keys()
        .filter(|k| !known.contains(k.as_str()))
        .collect();
    unknown.sort();
    if let Some(id) = unknown.first() {
        return Err(PopulationError::UnknownId((*id).clone()));
    }
    let mut scores = Vec::with_capacity(population.len());
    for ind in population.individuals() {
        match scores_by_id.get(&ind.id) {
            None => return Err(PopulationError::MissingScore(ind.id.clone())),
            Some(s) if !s.is_finite() => {
                return Err(PopulationError::NonFiniteScore(ind.id.clone()))
            }
            Some(&s) => scores.push(s),
        }
    }
    Ok(ScoredPopulation { population, scores })
}
