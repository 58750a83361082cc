//! Individual-fairness auditing and IF-preserving "gerrymandering" attacks
//! on finite populations.
//!
//! * [`population`] / [`io`]: individuals, scored populations, CSV formats.
//! * [`metrics`]: pseudo-metrics for individuals and predictions.
//! * [`transforms`]: non-expansive score maps and their oracle.
//! * [`audit`]: Lipschitz audits, selection rates, Leibniz tables.
//! * [`aif`]: absolute individual fairness via partitions.
//! * [`search`]: utility-maximizing attack search.
//! * [`synth`]: seeded scenario generation.

// `!(a < b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aif;
pub mod audit;
pub mod distribution;
pub mod io;
pub mod metrics;
pub mod population;
pub mod search;
pub mod synth;
pub mod transforms;

pub use aif::{
    check_aif_direct, check_aif_via_mss, is_coarsening, partition_by_distribution, Partition,
};
pub use audit::{
    audit_if, interval_concentration, leibniz_audit, selection_rates, AuditConfig, AuditReport,
    GroupStats, LeibnizTable,
};
pub use distribution::DistributionTable;
pub use metrics::{
    eval_metric, validate_pseudometric, Domain, MetricKind, Point, PseudoMetricSpec,
};
pub use population::{
    apply_predictor, Direction, Individual, Population, ScoredPopulation, Threshold,
};
pub use search::{
    candidate_grid, search_attack, utility, AttackResult, SearchOptions, TransformFamily,
    UtilitySpec,
};
pub use synth::{generate, scenario_interval_concentration, ScenarioConfig};
pub use transforms::{
    apply_to_scored, apply_transform, check_nonexpansive, isometry_check, NonExpansiveCheck,
    ScoreTransform,
};
