//! `ifaudit` command-line front end.
//!
//! Exit codes: 0 success (and, for checking commands, the property holds),
//! 1 the property is violated, 2 usage or input error.

mod plot;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use ifaudit_core::aif::{check_aif_direct, check_aif_via_mss, partition_by_distribution};
use ifaudit_core::audit::{audit_if, leibniz_audit, selection_rates, AuditConfig, LeibnizTable};
use ifaudit_core::distribution::DistributionTable;
use ifaudit_core::io::{read_population, read_scored, write_population, write_scores};
use ifaudit_core::metrics::{validate_pseudometric, Domain, Point, PseudoMetricSpec};
use ifaudit_core::population::{Direction, ScoredPopulation, Threshold};
use ifaudit_core::search::{search_attack, SearchOptions, TransformFamily, UtilitySpec};
use ifaudit_core::synth::{generate, scenario_interval_concentration, ScenarioConfig};
use ifaudit_core::transforms::{
    apply_to_scored, check_nonexpansive, NonExpansiveCheck, ScoreTransform,
};

#[derive(Parser)]
#[command(
    name = "ifaudit",
    version,
    about = "Individual-fairness audits and IF-preserving attacks"
)]
struct Cli {
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized oracles; overrides a scenario config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Indented JSON plus a one-line summary on stderr.
    #[arg(long, global = true)]
    pretty: bool,
    /// Add a `timestamp_unix` field to JSON reports.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lipschitz audit of a scored population.
    Audit {
        population: PathBuf,
        scores: PathBuf,
        /// `{"d": <metric>, "D": <metric>, "slack": x}`
        metric: PathBuf,
        #[arg(long)]
        slack: Option<f64>,
    },
    /// Apply a transform to the scores.
    Attack {
        population: PathBuf,
        scores: PathBuf,
        transform: PathBuf,
        #[command(flatten)]
        threshold: ThresholdArgs,
        /// Where to write before/after group statistics (needs --threshold).
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Search for the utility-maximizing IF-preserving transform.
    Search {
        population: PathBuf,
        scores: PathBuf,
        utility: PathBuf,
        /// Audit config used to check the winner.
        #[arg(long)]
        metric: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "translate,local_contract,fold"
        )]
        families: Vec<String>,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
    },
    /// Absolute individual fairness check of two distribution tables.
    Aif {
        f_y: PathBuf,
        f_yhat: PathBuf,
        #[arg(long, value_enum, default_value_t = AifMethod::Both)]
        method: AifMethod,
    },
    /// Generate a synthetic scenario.
    Generate {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        population_out: PathBuf,
        #[arg(long)]
        scores_out: PathBuf,
    },
    /// Per-group histogram of scores before and after a transform.
    Plotdata {
        population: PathBuf,
        before: PathBuf,
        after: PathBuf,
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
    /// Check the pseudo-metric axioms on a sample.
    ValidateMetric {
        metric: PathBuf,
        population: PathBuf,
        /// Needed for score-space metrics.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Non-expansiveness oracle for a transform.
    CheckTransform {
        transform: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        boundary: Vec<f64>,
    },
    /// Exact comparison of a predictor's distributions against a Leibniz table.
    Leibniz { predictor: PathBuf, table: PathBuf },
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = DirectionArg::AtOrAbove)]
    direction: DirectionArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    AtOrAbove,
    Below,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AifMethod {
    Direct,
    Mss,
    Both,
}

/// Result of a subcommand: its exit status and the one-line summary.
struct Outcome {
    code: u8,
    summary: String,
}

impl Outcome {
    fn ok(summary: impl Into<String>) -> Self {
        Self {
            code: 0,
            summary: summary.into(),
        }
    }

    fn check(holds: bool, summary: impl Into<String>) -> Self {
        Self {
            code: if holds { 0 } else { 1 },
            summary: summary.into(),
        }
    }
}

struct Output<'a> {
    cli: &'a Cli,
}

impl Output<'_> {
    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.cli.out {
            Some(p) => {
                Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)
            }
            None => Box::new(io::stdout().lock()),
        })
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        write_json(self.sink()?, value, self.cli.pretty, self.cli.timestamp)
    }
}

fn write_json<W: Write, T: Serialize>(
    mut w: W,
    value: &T,
    pretty: bool,
    timestamp: bool,
) -> Result<()> {
    let mut value = serde_json::to_value(value)?;
    if timestamp {
        if let Value::Object(map) = &mut value {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs();
            map.insert("timestamp_unix".into(), json!(secs));
        }
    }
    if pretty {
        serde_json::to_writer_pretty(&mut w, &value)?;
    } else {
        serde_json::to_writer(&mut w, &value)?;
    }
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_scored(population: &Path, scores: &Path) -> Result<ScoredPopulation> {
    read_scored(open(population)?, open(scores)?)
        .with_context(|| format!("loading {} + {}", population.display(), scores.display()))
}

fn load_transform(path: &Path) -> Result<ScoreTransform> {
    let phi: ScoreTransform = read_json(path)?;
    phi.validate()
        .with_context(|| format!("in {}", path.display()))?;
    Ok(phi)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if cli.pretty {
                eprintln!("{}", outcome.summary);
            }
            ExitCode::from(outcome.code)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let out = Output { cli };
    match &cli.command {
        Command::Audit {
            population,
            scores,
            metric,
            slack,
        } => {
            let sp = load_scored(population, scores)?;
            let mut cfg: AuditConfig = read_json(metric)?;
            if let Some(s) = slack {
                cfg.set_slack(*s)?;
            }
            let report = audit_if(&sp, &cfg)?;
            out.json(&report)?;
            Ok(Outcome::check(
                report.passed,
                format!(
                    "audit: {} ({} pairs, {} violations)",
                    if report.passed { "PASS" } else { "FAIL" },
                    report.n_pairs,
                    report.violations.len()
                ),
            ))
        }
        Command::Attack {
            population,
            scores,
            transform,
            threshold,
            stats_out,
        } => {
            let sp = load_scored(population, scores)?;
            let phi = load_transform(transform)?;
            let th = threshold.threshold.map(|t| Threshold {
                t,
                direction: match threshold.direction {
                    DirectionArg::AtOrAbove => Direction::AtOrAbove,
                    DirectionArg::Below => Direction::Below,
                },
            });
            if th.is_some() != stats_out.is_some() {
                bail!("--threshold and --stats-out must be given together");
            }
            let attacked = apply_to_scored(&phi, &sp)?;
            write_scores(&attacked, out.sink()?)?;
            if let (Some(th), Some(path)) = (th, stats_out) {
                let stats = json!({
                    "transform": phi,
                    "before": selection_rates(&sp, &th),
                    "after": selection_rates(&attacked, &th),
                });
                write_json(File::create(path)?, &stats, cli.pretty, cli.timestamp)?;
            }
            Ok(Outcome::ok(format!(
                "attack: transformed {} scores",
                attacked.len()
            )))
        }
        Command::Search {
            population,
            scores,
            utility,
            metric,
            families,
            resolution,
        } => {
            let sp = load_scored(population, scores)?;
            let u: UtilitySpec = read_json(utility)?;
            let cfg: AuditConfig = read_json(metric)?;
            let families = families
                .iter()
                .map(|f| f.trim().parse::<TransformFamily>())
                .collect::<Result<Vec<_>, _>>()?;
            let mut opts = SearchOptions::new(families, *resolution);
            opts.seed = cli.seed.unwrap_or(0);
            let result = search_attack(&sp, &u, &opts, &cfg)?;
            out.json(&result)?;
            Ok(Outcome::ok(format!(
                "search: best utility {} (baseline {}) over {} candidates",
                result.best_utility, result.baseline_utility, result.candidates_evaluated
            )))
        }
        Command::Aif {
            f_y,
            f_yhat,
            method,
        } => {
            let fy: DistributionTable = read_json(f_y)?;
            let fyhat: DistributionTable = read_json(f_yhat)?;
            let mut report = serde_json::Map::new();
            let mut verdicts = Vec::new();
            if matches!(method, AifMethod::Direct | AifMethod::Both) {
                let v = check_aif_direct(&fy, &fyhat)?;
                verdicts.push(v.holds);
                report.insert("direct".into(), json!(v));
            }
            if matches!(method, AifMethod::Mss | AifMethod::Both) {
                let holds = check_aif_via_mss(&fy, &fyhat)?;
                verdicts.push(holds);
                report.insert(
                    "mss".into(),
                    json!({
                        "holds": holds,
                        "truth_partition": partition_by_distribution(&fy),
                        "prediction_partition": partition_by_distribution(&fyhat),
                    }),
                );
            }
            if verdicts.windows(2).any(|w| w[0] != w[1]) {
                bail!("direct and partition checks disagree");
            }
            let holds = verdicts[0];
            report.insert("holds".into(), json!(holds));
            out.json(&report)?;
            Ok(Outcome::check(
                holds,
                format!("aif: {}", if holds { "holds" } else { "violated" }),
            ))
        }
        Command::Generate {
            preset,
            config,
            population_out,
            scores_out,
        } => {
            let mut cfg: ScenarioConfig = match (preset, config) {
                (Some(name), _) => scenario_interval_concentration(name)?,
                (None, Some(path)) => read_json(path)?,
                (None, None) => return Err(anyhow!("one of --preset or --config is required")),
            };
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let sp = generate(&cfg)?;
            write_population(sp.population(), File::create(population_out)?)?;
            write_scores(&sp, File::create(scores_out)?)?;
            out.json(&cfg)?;
            Ok(Outcome::ok(format!("generate: {} individuals", sp.len())))
        }
        Command::Plotdata {
            population,
            before,
            after,
            bins,
        } => {
            let pop = read_population(open(population)?)?;
            let before = read_scored(open(population)?, open(before)?)?;
            let after = read_scored(open(population)?, open(after)?)?;
            let rows = plot::histogram(&pop.groups(), &before, &after, *bins)?;
            plot::write_csv(&rows, out.sink()?)?;
            Ok(Outcome::ok(format!("plotdata: {} rows", rows.len())))
        }
        Command::ValidateMetric {
            metric,
            population,
            scores,
        } => {
            let spec: PseudoMetricSpec = read_json(metric)?;
            spec.validate()?;
            let report = match spec.domain() {
                Domain::ScoreSpace => {
                    let scores = scores
                        .as_ref()
                        .ok_or_else(|| anyhow!("score-space metric needs --scores"))?;
                    let sp = load_scored(population, scores)?;
                    let pts: Vec<Point<'_>> =
                        sp.scores().iter().map(|&s| Point::Score(s)).collect();
                    validate_pseudometric(&spec, &pts)?
                }
                domain => {
                    let pop = read_population(open(population)?)?;
                    let pts = pop
                        .individuals()
                        .iter()
                        .map(|i| Point::of_individual(domain, i))
                        .collect::<Result<Vec<_>, _>>()?;
                    validate_pseudometric(&spec, &pts)?
                }
            };
            out.json(&report)?;
            Ok(Outcome::check(
                report.passed,
                format!("validate-metric: {} violations", report.violations.len()),
            ))
        }
        Command::CheckTransform {
            transform,
            lo,
            hi,
            pairs,
            boundary,
        } => {
            let phi = load_transform(transform)?;
            let check = NonExpansiveCheck::new(*lo, *hi, *pairs, cli.seed.unwrap_or(0))
                .with_boundary(boundary.clone());
            let report = check_nonexpansive(&phi, &check)?;
            out.json(&report)?;
            Ok(Outcome::check(
                report.passed,
                format!(
                    "check-transform: {} pairs, {} violations",
                    report.pairs_checked, report.n_violations
                ),
            ))
        }
        Command::Leibniz { predictor, table } => {
            let predictor: DistributionTable = read_json(predictor)?;
            let table: LeibnizTable = read_json(table)?;
            let report = leibniz_audit(&predictor, &table)?;
            out.json(&report)?;
            Ok(Outcome::check(
                report.passed,
                format!("leibniz: {} mismatches", report.mismatches.len()),
            ))
        }
    }
}
