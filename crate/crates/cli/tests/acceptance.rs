//! Acceptance criteria. Each test prints one PASS/FAIL line; run with
//! `cargo test -p ifaudit-cli --test acceptance -- --nocapture`.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{code, fixture, golden, ifaudit, read, verdict};
use ifaudit_core::aif::{check_aif_direct, check_aif_via_mss};
use ifaudit_core::audit::{audit_if, leibniz_audit, selection_rates, AuditConfig, LeibnizTable};
use ifaudit_core::distribution::DistributionTable;
use ifaudit_core::metrics::{eval_metric, validate_pseudometric, Domain, Point, PseudoMetricSpec};
use ifaudit_core::population::{Individual, Population, ScoredPopulation, Threshold};
use ifaudit_core::search::{search_attack, SearchOptions, TransformFamily, UtilitySpec};
use ifaudit_core::synth::{generate, scenario_interval_concentration, PRESETS};
use ifaudit_core::transforms::{
    apply_to_scored, apply_transform, check_nonexpansive, isometry_check, NonExpansiveCheck,
    ScoreTransform,
};

const TOL: f64 = 1e-12;

fn fold(a: f64, b: f64) -> ScoreTransform {
    ScoreTransform::Folding { a, b }
}

fn ap(phi: &ScoreTransform, x: f64) -> f64 {
    apply_transform(phi, x).unwrap()
}

fn cfg(d: PseudoMetricSpec, big_d: PseudoMetricSpec) -> AuditConfig {
    AuditConfig::new(d, big_d).unwrap()
}

/// The three individual-metric configurations used by the preservation and
/// collapse criteria. Features are `[score, noise]`.
fn metric_configs() -> Vec<(&'static str, AuditConfig)> {
    vec![
        (
            "euclidean",
            cfg(
                PseudoMetricSpec::euclidean(Domain::FeatureSpace),
                PseudoMetricSpec::euclidean(Domain::ScoreSpace),
            ),
        ),
        (
            "weighted_l2",
            cfg(
                PseudoMetricSpec::weighted_lp(2.0, vec![1.0, 2.0], Domain::FeatureSpace),
                PseudoMetricSpec::euclidean(Domain::ScoreSpace),
            ),
        ),
        (
            "uid_discrete",
            cfg(
                PseudoMetricSpec::discrete(Domain::UidSpace),
                PseudoMetricSpec::capped_euclidean(1.0, Domain::ScoreSpace),
            ),
        ),
    ]
}

/// n individuals in groups A/B with features `[s, u]` and score `s`.
fn lipschitz_population(rng: &mut ChaCha8Rng, n: usize) -> ScoredPopulation {
    let mut individuals = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let s: f64 = rng.random_range(0.0..10.0);
        let u: f64 = rng.random_range(0.0..1.0);
        let group = if rng.random_bool(0.4) { "A" } else { "B" };
        individuals
            .push(Individual::new(format!("x{i:03}"), group, vec![s, u]).with_uid(format!("u{i}")));
        scores.push(s);
    }
    ScoredPopulation::from_aligned(Population::new(individuals).unwrap(), scores).unwrap()
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    family: TransformFamily,
    lo: f64,
    hi: f64,
) -> ScoreTransform {
    let mut pt = || rng.random_range(lo..hi);
    let (x, y) = (pt(), pt());
    let (a, b) = (x.min(y), x.max(y).max(x.min(y) + 1e-3));
    let z = pt();
    match family {
        TransformFamily::Translate => ScoreTransform::Translation { c: z - x },
        TransformFamily::Reflect => ScoreTransform::Reflection { center: z },
        TransformFamily::Contract => ScoreTransform::Contraction {
            k: rng.random_range(0.0..1.0),
            center: z,
        },
        TransformFamily::Collapse => ScoreTransform::ConstantCollapse { y_star: z },
        TransformFamily::LocalContract => ScoreTransform::LocalContraction {
            t: a,
            t_prime: b,
            t_star: a + rng.random_range(0.0..=1.0) * (b - a),
        },
        TransformFamily::Fold => fold(a, b),
    }
}

#[test]
fn c01_fold_nonexpansive() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut violations = 0u64;
    for _ in 0..1_000_000 {
        let (x, y): (f64, f64) = (
            rng.random_range(-100.0..=100.0),
            rng.random_range(-100.0..=100.0),
        );
        if x == y {
            continue;
        }
        let phi = fold(x.min(y), x.max(y));
        let (p, q): (f64, f64) = (
            rng.random_range(-100.0..=100.0),
            rng.random_range(-100.0..=100.0),
        );
        if (ap(&phi, p) - ap(&phi, q)).abs() > (p - q).abs() + TOL {
            violations += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();

    // Every pairing of the three pieces, plus the two break points.
    let (a, b) = (1.0, 3.0);
    let phi = fold(a, b);
    let points = [-1.0, 0.0, 0.5, a, 1.5, 2.0, 2.5, b, 3.5, 4.0, 7.0];
    let piece = |x: f64| (x >= a) as u8 + (x > b) as u8;
    let mut cases = std::collections::BTreeSet::new();
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i..] {
            let (lo, hi) = (piece(p).min(piece(q)), piece(p).max(piece(q)));
            cases.insert((lo, hi));
            if (ap(&phi, p) - ap(&phi, q)).abs() > (p - q).abs() + TOL {
                violations += 1;
            }
        }
    }
    let boundary = NonExpansiveCheck::new(-10.0, 10.0, 1000, 0).with_boundary(points.to_vec());
    let report = check_nonexpansive(&phi, &boundary).unwrap();

    verdict(
        1,
        "fold non-expansive (1e6 triples + 6 cases)",
        violations == 0 && cases.len() == 6 && report.passed && elapsed < 10.0,
        format!(
            "violations={violations} cases={} runtime={elapsed:.2}s (<10s)",
            cases.len()
        ),
    );
}

#[test]
fn c02_fold_exact_vectors() {
    let phi = fold(1.0, 3.0);
    // Hand evaluation: x>3 -> x-4, 1<=x<=3 -> 2-x, x<1 -> x.
    let expected = [(4.0, 0.0), (2.0, 0.0), (0.5, 0.5), (3.0, -1.0), (1.0, 1.0)];
    let bad: Vec<_> = expected
        .iter()
        .filter(|(x, y)| ap(&phi, *x) != *y)
        .collect();
    verdict(
        2,
        "fold(1,3) exact vectors",
        bad.is_empty(),
        format!("mismatches={bad:?}"),
    );
}

#[test]
fn c03_isometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<(f64, f64)> = (0..100_000)
        .map(|_| {
            (
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            )
        })
        .collect();
    let mut ok = true;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let c = rng.random_range(-50.0..50.0);
        for phi in [
            ScoreTransform::Translation { c },
            ScoreTransform::Reflection { center: c },
        ] {
            ok &= isometry_check(&phi, &pairs).unwrap();
            for &(p, q) in &pairs {
                worst = worst.max(((ap(&phi, p) - ap(&phi, q)).abs() - (p - q).abs()).abs());
            }
        }
    }
    verdict(
        3,
        "translation/reflection isometry (1e5 pairs)",
        ok && worst <= TOL,
        format!("max |err|={worst:e} (tol 1e-12)"),
    );
}

#[test]
fn c04_fold_order_reversal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut checked = 0;
    while checked < 10_000 {
        let (x, y): (f64, f64) = (
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..100.0),
        );
        let (a, b) = (x.min(y), x.max(y));
        let (u, v): (f64, f64) = (rng.random_range(a..=b), rng.random_range(a..=b));
        let (p, q) = (u.min(v), u.max(v));
        if !(a < b && p < q) {
            continue;
        }
        checked += 1;
        let phi = fold(a, b);
        if ap(&phi, p) <= ap(&phi, q) {
            failures += 1;
        }
    }
    verdict(
        4,
        "fold reverses order inside [a,b]",
        failures == 0,
        format!("{checked} pairs, failures={failures}"),
    );
}

#[test]
fn c05_if_preservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let configs = metric_configs();
    let (mut implications, mut broken, mut baseline_fail) = (0, 0, 0);
    for _ in 0..50 {
        let sp = lipschitz_population(&mut rng, 200);
        let (lo, hi) = sp.score_range().unwrap();
        let transforms: Vec<ScoreTransform> = TransformFamily::ALL
            .iter()
            .map(|f| random_instance(&mut rng, *f, lo, hi))
            .collect();
        for (_, c) in &configs {
            if !audit_if(&sp, c).unwrap().passed {
                baseline_fail += 1;
                continue;
            }
            for phi in &transforms {
                implications += 1;
                if !audit_if(&apply_to_scored(phi, &sp).unwrap(), c)
                    .unwrap()
                    .passed
                {
                    broken += 1;
                }
            }
        }
    }
    verdict(
        5,
        "IF preserved by every family (50 pops x 3 d)",
        broken == 0 && baseline_fail == 0 && implications == 50 * 3 * 6,
        format!("implications={implications} broken={broken} baseline_fail={baseline_fail}"),
    );
}

#[test]
fn c06_trivial_metric_rigidity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = cfg(
        PseudoMetricSpec::trivial(Domain::FeatureSpace),
        PseudoMetricSpec::euclidean(Domain::ScoreSpace),
    );
    let mut wrong = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let sp = lipschitz_population(&mut rng, n);
        let mut scores: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        scores[1] = scores[0] + rng.random_range(1e-6..1.0);
        if audit_if(&sp.with_scores(scores).unwrap(), &c)
            .unwrap()
            .passed
        {
            wrong += 1;
        }
        let constant = vec![rng.random_range(-10.0..10.0); n];
        if !audit_if(&sp.with_scores(constant).unwrap(), &c)
            .unwrap()
            .passed
        {
            wrong += 1;
        }
    }
    verdict(
        6,
        "trivial d: distinct fail, constant pass",
        wrong == 0,
        format!("100 pops x 2, wrong={wrong}"),
    );
}

#[test]
fn c07_unique_id_vacuity() {
    let sp = generate(&scenario_interval_concentration("unique_id_vacuity").unwrap()).unwrap();
    let uids: std::collections::BTreeSet<_> = sp
        .individuals()
        .iter()
        .map(|i| i.uid.clone().unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut passed = 0;
    for _ in 0..100 {
        let scores = (0..sp.len()).map(|_| rng.random_range(-1e6..1e6)).collect();
        let scored = sp.with_scores(scores).unwrap();
        for big_d in [
            PseudoMetricSpec::discrete(Domain::ScoreSpace),
            PseudoMetricSpec::capped_euclidean(1.0, Domain::ScoreSpace),
        ] {
            let c = cfg(PseudoMetricSpec::discrete(Domain::UidSpace), big_d);
            passed += audit_if(&scored, &c).unwrap().passed as usize;
        }
    }
    verdict(
        7,
        "unique-id vacuity (100 scorings x 2 D)",
        passed == 200 && uids.len() == 50,
        format!("passed={passed}/200, distinct uids={}", uids.len()),
    );
}

/// Every probability row over `outcomes` with entries `k/den`.
fn grid_rows(outcomes: usize, den: i64) -> Vec<Vec<(i64, i64)>> {
    fn go(
        left: i64,
        slots: usize,
        den: i64,
        cur: &mut Vec<(i64, i64)>,
        out: &mut Vec<Vec<(i64, i64)>>,
    ) {
        if slots == 1 {
            cur.push((left, den));
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push((k, den));
            go(left - k, slots - 1, den, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(den, outcomes, den, &mut Vec::new(), &mut out);
    out
}

/// All tables on {x1,x2,x3}, each paired with its row-equality pattern
/// computed by reduced-fraction comparison.
fn grid_tables(outcomes: &[&str], den: i64) -> Vec<(DistributionTable, [bool; 3])> {
    let rows = grid_rows(outcomes.len(), den);
    let mut out = Vec::new();
    for r1 in &rows {
        for r2 in &rows {
            for r3 in &rows {
                let t = DistributionTable::from_fractions(
                    outcomes,
                    [("x1", r1.clone()), ("x2", r2.clone()), ("x3", r3.clone())],
                )
                .unwrap();
                out.push((t, [r1 == r2, r1 == r3, r2 == r3]));
            }
        }
    }
    out
}

fn sweep(
    fy: &[(DistributionTable, [bool; 3])],
    fyhat: &[(DistributionTable, [bool; 3])],
) -> (usize, usize) {
    fy.par_iter()
        .map(|(ty, ey)| {
            let mut bad = 0;
            for (th, eh) in fyhat {
                let oracle = (0..3).all(|i| !ey[i] || eh[i]);
                let direct = check_aif_direct(ty, th).unwrap().holds;
                let mss = check_aif_via_mss(ty, th).unwrap();
                bad += (direct != mss || direct != oracle) as usize;
            }
            (fyhat.len(), bad)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

#[test]
fn c08_aif_exhaustive_equivalence() {
    // Two outcomes with halves give three rows, so 27 tables per side.
    let halves = grid_tables(&["y0", "y1"], 2);
    let (n_half, bad_half) = sweep(&halves, &halves);
    // The ten-row grid (three outcomes, thirds) gives the full 10^3 x 10^3.
    let start = Instant::now();
    let thirds = grid_tables(&["y0", "y1", "y2"], 3);
    let (n_full, bad_full) = sweep(&thirds, &thirds);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        8,
        "direct = partition AIF check, exhaustive",
        bad_half == 0 && bad_full == 0 && n_half == 729 && n_full == 1_000_000,
        format!(
            "halves: {n_half} pairs, thirds: {n_full} pairs ({elapsed:.1}s), disagreements={}",
            bad_half + bad_full
        ),
    );
}

fn threshold_push() -> (ScoredPopulation, UtilitySpec, AuditConfig) {
    let sc = scenario_interval_concentration("threshold_push").unwrap();
    let sp = generate(&sc).unwrap();
    let u: UtilitySpec =
        serde_json::from_slice(&read(&fixture("threshold_push.utility.json"))).unwrap();
    let c: AuditConfig = serde_json::from_slice(&read(&fixture("lipschitz.metric.json"))).unwrap();
    assert_eq!(u.threshold, sc.threshold.unwrap());
    (sp, u, c)
}

#[test]
fn c09_gerrymander_scenario() {
    let (sp, u, c) = threshold_push();
    let opts = SearchOptions::new(TransformFamily::ALL.to_vec(), 32);
    let r = search_attack(&sp, &u, &opts, &c).unwrap();
    let (before, after) = (&r.group_stats_before, &r.group_stats_after);
    let a_drop = before.rate("A").unwrap() - after.rate("A").unwrap();
    let spd_gain = after.spd - before.spd;
    let json = serde_json::to_vec_pretty(&r).unwrap();
    let gold = golden("threshold_push.search.json", &json);
    verdict(
        9,
        "threshold_push gerrymander",
        r.audit_passed && a_drop >= 0.3 && spd_gain >= 0.2 && gold.is_ok(),
        format!(
            "audit_after={} A drop={a_drop:.4} (>=0.3) spd gain={spd_gain:.4} (>=0.2) golden={}",
            r.audit_passed,
            gold.as_ref()
                .map(|_| "match".to_string())
                .unwrap_or_else(|e| e.clone())
        ),
    );
}

#[test]
fn c10_constant_collapse() {
    let mut configs = metric_configs();
    configs.push((
        "trivial",
        cfg(
            PseudoMetricSpec::trivial(Domain::FeatureSpace),
            PseudoMetricSpec::euclidean(Domain::ScoreSpace),
        ),
    ));
    let mut failures = Vec::new();
    for name in PRESETS {
        let sc = scenario_interval_concentration(name).unwrap();
        let sp = generate(&sc).unwrap();
        let t = sc.threshold.map(|t| t.t).unwrap_or(0.0);
        for y_star in [t - 1.0, t, t + 1.0] {
            let out = apply_to_scored(&ScoreTransform::ConstantCollapse { y_star }, &sp).unwrap();
            for (cname, c) in &configs {
                if !audit_if(&out, c).unwrap().passed {
                    failures.push(format!("{name}/{cname}/y*={y_star}: audit"));
                }
            }
            for th in [Threshold::at_or_above(t), Threshold::below(t)] {
                let stats = selection_rates(&out, &th);
                let rates: Vec<f64> = stats.per_group.values().map(|g| g.selection_rate).collect();
                let uniform = rates
                    .iter()
                    .all(|r| *r == rates[0] && (*r == 0.0 || *r == 1.0));
                if !uniform || stats.spd != 0.0 {
                    failures.push(format!(
                        "{name}/y*={y_star}: rates {rates:?} spd {}",
                        stats.spd
                    ));
                }
            }
        }
    }
    verdict(
        10,
        "constant collapse passes, spd = 0",
        failures.is_empty(),
        format!("failures={failures:?}"),
    );
}

/// Independent triangle/symmetry/identity check over all triples.
fn oracle_axioms(spec: &PseudoMetricSpec, pts: &[Point<'_>]) -> usize {
    let n = pts.len();
    let d: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| eval_metric(spec, &pts[i], &pts[j]).unwrap())
                .collect()
        })
        .collect();
    let mut bad = 0;
    for i in 0..n {
        bad += (d[i][i] != 0.0) as usize;
        for j in 0..n {
            bad += (d[i][j] < 0.0 || d[i][j] != d[j][i]) as usize;
            for k in 0..n {
                bad += (d[i][k] > d[i][j] + d[j][k] + TOL) as usize;
            }
        }
    }
    bad
}

#[test]
fn c11_metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut kinds_seen = std::collections::BTreeSet::new();
    let (mut samples, mut violations) = (0, 0);
    for _ in 0..25 {
        let feats: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                // A few exact duplicates so zero distances between distinct points occur.
                if i % 7 == 6 {
                    vec![1.0, 2.0, 3.0]
                } else {
                    (0..3).map(|_| rng.random_range(-50.0..50.0)).collect()
                }
            })
            .collect();
        let scores: Vec<f64> = feats.iter().map(|f| f[0]).collect();
        let uids: Vec<String> = (0..20).map(|i| format!("u{}", i % 15)).collect();
        let weights: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..3.0)).collect();
        let p = rng.random_range(1.0..5.0);
        let cap = rng.random_range(0.1..20.0);
        let f_pts: Vec<Point<'_>> = feats.iter().map(|f| Point::Features(f)).collect();
        let s_pts: Vec<Point<'_>> = scores.iter().map(|s| Point::Score(*s)).collect();
        let u_pts: Vec<Point<'_>> = uids.iter().map(|u| Point::Uid(u)).collect();
        let mut cases = vec![
            (
                PseudoMetricSpec::weighted_lp(p, weights, Domain::FeatureSpace),
                &f_pts,
            ),
            (
                PseudoMetricSpec::weighted_lp(p, vec![2.5], Domain::ScoreSpace),
                &s_pts,
            ),
        ];
        for domain in [Domain::FeatureSpace, Domain::ScoreSpace] {
            let pts = if domain == Domain::FeatureSpace {
                &f_pts
            } else {
                &s_pts
            };
            cases.push((PseudoMetricSpec::trivial(domain), pts));
            cases.push((PseudoMetricSpec::discrete(domain), pts));
            cases.push((PseudoMetricSpec::euclidean(domain), pts));
            cases.push((PseudoMetricSpec::capped_euclidean(cap, domain), pts));
        }
        cases.push((PseudoMetricSpec::discrete(Domain::UidSpace), &u_pts));
        cases.push((PseudoMetricSpec::trivial(Domain::UidSpace), &u_pts));
        for (spec, pts) in cases {
            samples += 1;
            kinds_seen.insert(spec.kind.name());
            let report = validate_pseudometric(&spec, pts).unwrap();
            violations +=
                report.violations.len() + oracle_axioms(&spec, pts) + (!report.passed) as usize;
        }
    }
    let all_kinds = [
        "trivial",
        "discrete",
        "euclidean",
        "weighted_lp",
        "capped_euclidean",
    ];
    let covered = all_kinds.iter().all(|k| kinds_seen.contains(k));
    verdict(
        11,
        "pseudo-metric axioms on 20-point samples",
        violations == 0 && covered,
        format!("{samples} samples, kinds={kinds_seen:?}, violations={violations}"),
    );
}

fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn c12_leibniz_rigidity() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let outcomes: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let (mut wrong, mut witness_wrong) = (0, 0);
    for _ in 0..1000 {
        let mut rows = BTreeMap::new();
        for i in 0..6 {
            let den = rng.random_range(1..13i64);
            let k0 = rng.random_range(0..=den);
            let k1 = rng.random_range(0..=den - k0);
            rows.insert(
                format!("x{i}"),
                vec![big(k0, den), big(k1, den), big(den - k0 - k1, den)],
            );
        }
        let table = DistributionTable::new(outcomes.clone(), rows.clone()).unwrap();
        let leibniz = LeibnizTable(table.clone());
        wrong += (!leibniz_audit(&table, &leibniz).unwrap().passed) as usize;

        // Move a positive amount of mass between two entries of one row.
        let id = format!("x{}", rng.random_range(0..6));
        let row = rows.get_mut(&id).unwrap();
        let from = (0..3).find(|&j| row[j] > big(0, 1)).unwrap();
        let to = (from + rng.random_range(1..3)) % 3;
        let delta = &row[from] * big(1, rng.random_range(1..6));
        row[from] = &row[from] - &delta;
        row[to] = &row[to] + &delta;
        let perturbed = DistributionTable::new(outcomes.clone(), rows).unwrap();
        let report = leibniz_audit(&perturbed, &leibniz).unwrap();
        wrong += report.passed as usize;
        witness_wrong += (report.mismatches != vec![id]) as usize;
    }
    verdict(
        12,
        "Leibniz exact equality (1e3 perturbations)",
        wrong == 0 && witness_wrong == 0,
        format!("wrong verdicts={wrong}, wrong witnesses={witness_wrong}"),
    );
}

struct Case {
    name: &'static str,
    args: Vec<String>,
    exit: i32,
    /// Golden for stdout, or for the `--out` file when one is passed.
    golden: Option<&'static str>,
}

fn case(name: &'static str, args: &[&str], exit: i32, golden: Option<&'static str>) -> Case {
    Case {
        name,
        args: args.iter().map(|s| s.to_string()).collect(),
        exit,
        golden,
    }
}

fn fx(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn c13_cli_goldens_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let tmp_path = |n: &str| tmp.path().join(n).to_string_lossy().into_owned();
    let (tp_pop, tp_scores) = (
        fx("threshold_push.population.csv"),
        fx("threshold_push.scores.csv"),
    );
    let attacked = tmp_path("attacked.csv");
    let stats = tmp_path("stats.json");
    let gen_pop = tmp_path("gen_pop.csv");
    let gen_scores = tmp_path("gen_scores.csv");

    let mut cases = vec![
        case(
            "audit_pass",
            &["audit", &tp_pop, &tp_scores, &fx("lipschitz.metric.json")],
            0,
            Some("audit_pass.json"),
        ),
        case(
            "audit_fail",
            &[
                "audit",
                &fx("tiny.population.csv"),
                &fx("tiny.scores.csv"),
                &fx("lipschitz.metric.json"),
            ],
            1,
            Some("audit_fail.json"),
        ),
        case(
            "audit_trivial",
            &["audit", &tp_pop, &tp_scores, &fx("trivial.metric.json")],
            1,
            None,
        ),
        case(
            "audit_uid",
            &[
                "audit",
                &fx("unique_id_vacuity.population.csv"),
                &fx("unique_id_vacuity.scores.csv"),
                &fx("uid.metric.json"),
            ],
            0,
            Some("audit_uid.json"),
        ),
        case(
            "attack",
            &[
                "attack",
                &tp_pop,
                &tp_scores,
                &fx("push_down.transform.json"),
                "--threshold",
                "3",
                "--stats-out",
                &stats,
                "--out",
                &attacked,
            ],
            0,
            Some("attack_push_down.scores.csv"),
        ),
        case(
            "attack_fold",
            &[
                "attack",
                &tp_pop,
                &tp_scores,
                &fx("composed.transform.json"),
            ],
            0,
            Some("attack_composed.scores.csv"),
        ),
        case(
            "search",
            &[
                "search",
                &tp_pop,
                &tp_scores,
                &fx("threshold_push.utility.json"),
                "--metric",
                &fx("lipschitz.metric.json"),
                "--families",
                "translate,reflect,contract,collapse,local_contract,fold",
            ],
            0,
            Some("search.json"),
        ),
        case(
            "aif_holds",
            &["aif", &fx("fy.table.json"), &fx("fyhat_fair.table.json")],
            0,
            Some("aif_holds.json"),
        ),
        case(
            "aif_violated",
            &["aif", &fx("fy.table.json"), &fx("fyhat_unfair.table.json")],
            1,
            Some("aif_violated.json"),
        ),
        case(
            "validate_metric_features",
            &["validate-metric", &fx("features.euclidean.json"), &tp_pop],
            0,
            Some("validate_metric_features.json"),
        ),
        case(
            "validate_metric_scores",
            &[
                "validate-metric",
                &fx("scores.capped.json"),
                &tp_pop,
                "--scores",
                &tp_scores,
            ],
            0,
            Some("validate_metric_scores.json"),
        ),
        case(
            "check_transform",
            &[
                "check-transform",
                &fx("fold.transform.json"),
                "--lo",
                "-100",
                "--hi",
                "100",
                "--pairs",
                "2000",
                "--seed",
                "5",
                "--boundary",
                "2.5,3,3.25,3.5,4",
            ],
            0,
            Some("check_transform_fold.json"),
        ),
        case(
            "leibniz_pass",
            &[
                "leibniz",
                &fx("leibniz.predictor.json"),
                &fx("leibniz.table.json"),
            ],
            0,
            Some("leibniz_pass.json"),
        ),
        case(
            "leibniz_fail",
            &[
                "leibniz",
                &fx("leibniz.predictor.json"),
                &fx("leibniz.perturbed.json"),
            ],
            1,
            Some("leibniz_fail.json"),
        ),
        case(
            "bad_fold",
            &[
                "check-transform",
                &fx("bad_fold.transform.json"),
                "--lo",
                "0",
                "--hi",
                "1",
            ],
            2,
            None,
        ),
        case(
            "missing_file",
            &[
                "audit",
                &tp_pop,
                &tmp_path("nope.csv"),
                &fx("lipschitz.metric.json"),
            ],
            2,
            None,
        ),
        case(
            "unknown_family",
            &[
                "search",
                &tp_pop,
                &tp_scores,
                &fx("threshold_push.utility.json"),
                "--metric",
                &fx("lipschitz.metric.json"),
                "--families",
                "warp",
            ],
            2,
            None,
        ),
        case("usage", &["audit"], 2, None),
    ];
    for preset in PRESETS {
        let name: &'static str = Box::leak(format!("generate_{preset}").into_boxed_str());
        cases.push(case(
            name,
            &[
                "generate",
                "--preset",
                preset,
                "--population-out",
                &gen_pop,
                "--scores-out",
                &gen_scores,
            ],
            0,
            None,
        ));
    }

    let mut problems = Vec::new();
    let mut goldens = 0;
    for c in &cases {
        let args: Vec<&str> = c.args.iter().map(String::as_str).collect();
        let out = ifaudit(&args);
        if code(&out) != c.exit {
            problems.push(format!(
                "{}: exit {} (want {}): {}",
                c.name,
                code(&out),
                c.exit,
                String::from_utf8_lossy(&out.stderr)
            ));
            continue;
        }
        if let Some(g) = c.golden {
            let body = match args.iter().position(|a| *a == "--out") {
                Some(i) => read(args[i + 1].as_ref()),
                None => out.stdout.clone(),
            };
            goldens += 1;
            if let Err(e) = golden(g, &body) {
                problems.push(e);
            }
        }
        match c.name {
            "attack" => {
                goldens += 1;
                if let Err(e) = golden("attack_push_down.stats.json", &read(stats.as_ref())) {
                    problems.push(e);
                }
                let plot = ifaudit(&["plotdata", &tp_pop, &tp_scores, &attacked, "--bins", "12"]);
                goldens += 1;
                if code(&plot) != 0 {
                    problems.push("plotdata failed".into());
                } else if let Err(e) = golden("plotdata.csv", &plot.stdout) {
                    problems.push(e);
                }
            }
            n if n.starts_with("generate_") => {
                let preset = &n["generate_".len()..];
                goldens += 3;
                let same = |a: &str, b: String| read(a.as_ref()) == read(fx(&b).as_ref());
                if !same(&gen_pop, format!("{preset}.population.csv"))
                    || !same(&gen_scores, format!("{preset}.scores.csv"))
                {
                    problems.push(format!("{n}: generated files differ from fixtures"));
                }
                let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
                let shipped: serde_json::Value = serde_json::from_slice(&read(
                    fixture(&format!("{preset}.config.json")).as_ref(),
                ))
                .unwrap();
                if printed != shipped {
                    problems.push(format!("{n}: printed config differs"));
                }
            }
            _ => {}
        }
    }
    let exits: std::collections::BTreeSet<i32> = cases.iter().map(|c| c.exit).collect();
    verdict(
        13,
        "CLI goldens and exit codes 0/1/2",
        problems.is_empty() && exits.len() == 3,
        format!(
            "{} invocations, {goldens} golden comparisons, problems={problems:?}",
            cases.len()
        ),
    );
}
