//! Per-individual probability distributions over a finite outcome set, with
//! exact rational entries.
//!
//! JSON form:
//! `{"outcomes":["y0","y1"],"rows":{"x1":[["1","2"],["1","2"]]}}`, each
//! probability a `[numerator, denominator]` pair of decimal strings.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Probability = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("outcome labels must be non-empty and distinct")]
    BadOutcomes,
    #[error("row `{id}` has {found} entries, expected {expected}")]
    RowLength {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("row `{0}` has a negative entry")]
    Negative(String),
    #[error("row `{id}` sums to {sum}, not 1")]
    NotNormalized { id: String, sum: String },
    #[error("bad rational `{0}`")]
    BadRational(String),
}

/// Builds `num/den` with `den != 0`.
pub fn ratio(num: i64, den: i64) -> Probability {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionTable {
    outcomes: Vec<String>,
    rows: BTreeMap<String, Vec<Probability>>,
}

impl DistributionTable {
    pub fn new(
        outcomes: Vec<String>,
        rows: BTreeMap<String, Vec<Probability>>,
    ) -> Result<Self, DistributionError> {
        let distinct: BTreeSet<&String> = outcomes.iter().collect();
        if outcomes.is_empty() || distinct.len() != outcomes.len() {
            return Err(DistributionError::BadOutcomes);
        }
        for (id, row) in &rows {
            if row.len() != outcomes.len() {
                return Err(DistributionError::RowLength {
                    id: id.clone(),
                    expected: outcomes.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(Signed::is_negative) {
                return Err(DistributionError::Negative(id.clone()));
            }
            let sum: Probability = row.iter().sum();
            if !sum.is_one() {
                return Err(DistributionError::NotNormalized {
                    id: id.clone(),
                    sum: sum.to_string(),
                });
            }
        }
        Ok(Self { outcomes, rows })
    }

    /// Convenience constructor from `(id, [(num, den), ...])` rows.
    pub fn from_fractions<'a, I>(outcomes: &[&str], rows: I) -> Result<Self, DistributionError>
    where
        I: IntoIterator<Item = (&'a str, Vec<(i64, i64)>)>,
    {
        let mut map = BTreeMap::new();
        for (id, fr) in rows {
            if fr.iter().any(|&(_, d)| d == 0) {
                return Err(DistributionError::BadRational(format!(
                    "{id}: zero denominator"
                )));
            }
            map.insert(
                id.to_string(),
                fr.into_iter().map(|(n, d)| ratio(n, d)).collect(),
            );
        }
        Self::new(outcomes.iter().map(|s| s.to_string()).collect(), map)
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn rows(&self) -> &BTreeMap<String, Vec<Probability>> {
        &self.rows
    }

    pub fn row(&self, id: &str) -> Option<&[Probability]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn same_universe(&self, other: &DistributionTable) -> bool {
        self.rows.len() == other.rows.len() && self.rows.keys().eq(other.rows.keys())
    }
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    outcomes: Vec<String>,
    rows: BTreeMap<String, Vec<[String; 2]>>,
}

fn parse_rational([num, den]: &[String; 2]) -> Result<Probability, DistributionError> {
    let bad = || DistributionError::BadRational(format!("[{num}, {den}]"));
    let n: BigInt = num.trim().parse().map_err(|_| bad())?;
    let d: BigInt = den.trim().parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

impl Serialize for DistributionTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows = self
            .rows
            .iter()
            .map(|(id, row)| {
                let row = row
                    .iter()
                    .map(|p| [p.numer().to_string(), p.denom().to_string()])
                    .collect();
                (id.clone(), row)
            })
            .collect();
        TableRepr {
            outcomes: self.outcomes.clone(),
            rows,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DistributionTable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = TableRepr::deserialize(deserializer)?;
        let mut rows = BTreeMap::new();
        for (id, row) in repr.rows {
            let row = row
                .iter()
                .map(parse_rational)
                .collect::<Result<Vec<_>, _>>()
                .map_err(serde::de::Error::custom)?;
            rows.insert(id, row);
        }
        DistributionTable::new(repr.outcomes, rows).map_err(serde::de::Error::custom)
    }
}
