//! Absolute individual fairness on finite discrete instances.
//!
//! A predictor satisfies AIF when individuals with equal ground-truth
//! distributions also receive equal prediction distributions. Two routes are
//! provided and must always agree:
//!
//! * [`check_aif_direct`] tests the implication on every pair of individuals.
//! * [`check_aif_via_mss`] builds the equal-distribution partitions of both
//!   tables (the minimal sufficient statistics, represented extensionally)
//!   and asks whether the prediction partition coarsens the ground-truth one.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::{DistributionTable, Probability};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AifError {
    #[error("id universes differ")]
    UniverseMismatch,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// Disjoint non-empty blocks covering an id universe.
///
/// Stored canonically: ids sorted inside each block, blocks sorted by their
/// smallest id. Two partitions are equal iff they have the same blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<BTreeSet<String>>", into = "Vec<BTreeSet<String>>")]
pub struct Partition {
    blocks: Vec<BTreeSet<String>>,
}

impl TryFrom<Vec<BTreeSet<String>>> for Partition {
    type Error = AifError;

    fn try_from(blocks: Vec<BTreeSet<String>>) -> Result<Self, AifError> {
        Partition::new(blocks)
    }
}

impl From<Partition> for Vec<BTreeSet<String>> {
    fn from(p: Partition) -> Self {
        p.blocks
    }
}

impl Partition {
    pub fn new(mut blocks: Vec<BTreeSet<String>>) -> Result<Self, AifError> {
        let mut seen = BTreeSet::new();
        for block in &blocks {
            if block.is_empty() {
                return Err(AifError::InvalidPartition("empty block".into()));
            }
            for id in block {
                if !seen.insert(id.as_str()) {
                    return Err(AifError::InvalidPartition(format!("`{id}` in two blocks")));
                }
            }
        }
        blocks.sort_by(|a, b| a.first().cmp(&b.first()));
        Ok(Self { blocks })
    }

    /// Builds a partition from string-slice blocks; panics on invalid input.
    pub fn from_blocks(blocks: &[&[&str]]) -> Self {
        Self::new(
            blocks
                .iter()
                .map(|b| b.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
        .expect("valid partition")
    }

    pub fn blocks(&self) -> &[BTreeSet<String>] {
        &self.blocks
    }

    pub fn universe(&self) -> BTreeSet<&str> {
        self.blocks
            .iter()
            .flat_map(|b| b.iter().map(String::as_str))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn block_index(&self) -> HashMap<&str, usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.iter().map(move |id| (id.as_str(), i)))
            .collect()
    }
}

/// Equivalence classes of exact row equality.
pub fn partition_by_distribution(table: &DistributionTable) -> Partition {
    let mut classes: BTreeMap<&[Probability], BTreeSet<String>> = BTreeMap::new();
    for (id, row) in table.rows() {
        classes
            .entry(row.as_slice())
            .or_default()
            .insert(id.clone());
    }
    Partition::new(classes.into_values().collect()).expect("classes are disjoint")
}

/// True iff every block of `fine` lies inside a single block of `coarse`.
pub fn is_coarsening(coarse: &Partition, fine: &Partition) -> Result<bool, AifError> {
    if coarse.universe() != fine.universe() {
        return Err(AifError::UniverseMismatch);
    }
    let index = coarse.block_index();
    Ok(fine.blocks().iter().all(|block| {
        let mut ids = block.iter();
        let first = ids.next().map(|id| index[id.as_str()]);
        ids.all(|id| Some(index[id.as_str()]) == first)
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AifVerdict {
    pub holds: bool,
    /// A pair with equal ground-truth rows but different prediction rows.
    pub witness: Option<(String, String)>,
}

/// Pairwise check: `fY(p) = fY(q)` must imply `fYhat(p) = fYhat(q)`.
/// The first failing pair in sorted id order is returned as witness.
pub fn check_aif_direct(
    f_y: &DistributionTable,
    f_yhat: &DistributionTable,
) -> Result<AifVerdict, AifError> {
    if !f_y.same_universe(f_yhat) {
        return Err(AifError::UniverseMismatch);
    }
    let truth: Vec<(&String, &Vec<Probability>)> = f_y.rows().iter().collect();
    let pred: Vec<&Vec<Probability>> = f_yhat.rows().values().collect();
    for i in 0..truth.len() {
        for j in i + 1..truth.len() {
            if truth[i].1 == truth[j].1 && pred[i] != pred[j] {
                return Ok(AifVerdict {
                    holds: false,
                    witness: Some((truth[i].0.clone(), truth[j].0.clone())),
                });
            }
        }
    }
    Ok(AifVerdict {
        holds: true,
        witness: None,
    })
}

/// Partition route: AIF holds iff the prediction partition coarsens the
/// ground-truth partition.
pub fn check_aif_via_mss(
    f_y: &DistributionTable,
    f_yhat: &DistributionTable,
) -> Result<bool, AifError> {
    if !f_y.same_universe(f_yhat) {
        return Err(AifError::UniverseMismatch);
    }
    let truth = partition_by_distribution(f_y);
    let pred = partition_by_distribution(f_yhat);
    is_coarsening(&pred, &truth)
}
