//! `gdc-screen`: rank features or feature groups of a CSV dataset by their
//! dependence with a categorical label, or run the built-in simulation
//! designs. Emits machine-readable reports (JSON, optionally CSV for
//! simulation summaries).
//!
//! Exit codes: 0 success, 1 data error, 2 usage/configuration error.

mod report;

use std::collections::HashMap;
use std::error::Error as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use gdc_screen_core::{
    default_model_size, load_csv, load_groups, run_experiment, screen, Covariance, Design,
    ErrorDist, GroupPartition, GroupedCase, Measure, Result, ScreenError, ScreeningConfig,
    SelectionRule, SimulationSpec,
};

use report::{
    f17, rule_echo, summary_csv, ConfigEcho, DataInfo, GroupEcho, InputInfo, MeasureSummary,
    ReportDocument, ResultsInfo, SpecEcho, SummaryDocument, ToolInfo,
};

#[derive(Parser)]
#[command(
    name = "gdc-screen",
    version,
    about = "Feature screening for classification data via Gini distance correlation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Screen a CSV dataset and report ranked features or feature groups.
    Screen(ScreenArgs),
    /// Run a built-in simulation design and summarize screening quality.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ScreenArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    label: String,
    /// Optional group file (`name: col,col,...` per line); default is one
    /// group per column.
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Screening statistic: gdc, dt, mv or r2.
    #[arg(long, default_value = "gdc")]
    measure: String,
    /// Keep the d best groups (default: floor(n / ln n)).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..),
          conflicts_with_all = ["threshold_c", "kappa"])]
    top_d: Option<u64>,
    /// Keep groups with statistic >= c * n^(-kappa).
    #[arg(long, requires = "kappa")]
    threshold_c: Option<f64>,
    #[arg(long, requires = "threshold_c")]
    kappa: Option<f64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: GDC_SCREEN_THREADS or all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// lda, logistic, gwas or grouped.
    #[arg(long)]
    design: Option<String>,
    /// Key=value file providing any of these flags; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of classes (lda).
    #[arg(long = "K")]
    k: Option<usize>,
    /// Sample size per replicate.
    #[arg(long)]
    n: Option<usize>,
    /// Number of features (lda, logistic, gwas).
    #[arg(long)]
    p: Option<usize>,
    /// Number of 3-wide groups (grouped).
    #[arg(long)]
    r: Option<usize>,
    /// Class probabilities: balanced, slight, heavy, or a comma list.
    #[arg(long)]
    probs: Option<String>,
    /// Error distribution: normal, t2 or t1.
    #[arg(long)]
    error: Option<String>,
    /// Predictor covariance: identity or ar1 (logistic).
    #[arg(long)]
    cov: Option<String>,
    /// Signal layout for the grouped design: a or b.
    #[arg(long)]
    case: Option<String>,
    /// Number of replicates.
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed; replicate m uses stream m of this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list of measures (gdc, r2, mv, dt).
    #[arg(long)]
    measures: Option<String>,
    /// Model size d for the inclusion proportions (default floor(n / ln n)).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    top_d: Option<u64>,
    /// Output format: json or csv.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Screen(args) => cmd_screen(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

/// Resolve the worker count (flag, then GDC_SCREEN_THREADS, then all cores)
/// and size the global pool with it.
fn setup_threads(flag: Option<usize>) -> Result<usize> {
    let threads = match flag {
        Some(0) => {
            return Err(ScreenError::InvalidConfig(
                "--threads must be at least 1".into(),
            ))
        }
        Some(t) => t,
        None => match std::env::var("GDC_SCREEN_THREADS") {
            Ok(raw) => raw.trim().parse::<usize>().ok().filter(|&t| t >= 1).ok_or_else(|| {
                ScreenError::InvalidConfig(format!(
                    "GDC_SCREEN_THREADS must be a positive integer, got \"{raw}\""
                ))
            })?,
            Err(_) => std::thread::available_parallelism().map_or(1, |t| t.get()),
        },
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| ScreenError::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(threads)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| ScreenError::Io {
        path: path.into(),
        source,
    })?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_output(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|source| ScreenError::Io {
            path: path.into(),
            source,
        }),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|source| ScreenError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn parse_screen_measure(raw: &str) -> Result<Measure> {
    match raw.to_ascii_lowercase().as_str() {
        "gdc" => Ok(Measure::Gdc),
        "dt" => Ok(Measure::Dt),
        "mv" => Ok(Measure::Mv),
        "r2" => Ok(Measure::R2),
        other => Err(ScreenError::InvalidConfig(format!(
            "unknown measure \"{other}\" (expected gdc, dt, mv or r2)"
        ))),
    }
}

fn cmd_screen(args: ScreenArgs) -> Result<()> {
    let threads = setup_threads(args.threads)?;
    let started = Instant::now();

    let dataset = load_csv(&args.data, &args.label)?;
    let data_sha256 = sha256_file(&args.data)?;

    let mut warnings: Vec<String> = Vec::new();
    let (partition, groups_sha256) = match &args.groups {
        Some(path) => {
            let loaded = load_groups(path, &dataset)?;
            if !loaded.uncovered.is_empty() {
                let names: Vec<&str> = loaded
                    .uncovered
                    .iter()
                    .map(|&c| dataset.feature_names()[c].as_str())
                    .collect();
                warnings.push(format!(
                    "columns not covered by any group are excluded from screening: {}",
                    names.join(", ")
                ));
            }
            (loaded.partition, Some(sha256_file(path)?))
        }
        None => {
            let groups = (0..dataset.p()).map(|j| vec![j]).collect();
            let names = Some(dataset.feature_names().to_vec());
            (GroupPartition::new(groups, names, dataset.p())?, None)
        }
    };

    let measure = parse_screen_measure(&args.measure)?;
    let rule = match (args.top_d, args.threshold_c, args.kappa) {
        (Some(d), None, None) => SelectionRule::TopD(d as usize),
        (None, Some(c), Some(kappa)) => SelectionRule::Threshold { c, kappa },
        (None, None, None) => SelectionRule::TopD(default_model_size(dataset.n())),
        // clap's conflicts/requires rules make anything else unreachable.
        _ => unreachable!(),
    };
    let config = ScreeningConfig { measure, rule };

    let report = screen(&dataset, &partition, &config)?;
    for flag in &report.warnings {
        warnings.push(format!(
            "group \"{}\": {}",
            partition.names()[flag.group],
            flag.note
        ));
    }

    let doc = ReportDocument {
        tool: ToolInfo::current(),
        command: "screen",
        input: InputInfo {
            data_path: args.data.display().to_string(),
            data_sha256,
            label_column: args.label.clone(),
            groups_path: args.groups.as_ref().map(|p| p.display().to_string()),
            groups_sha256,
        },
        data: DataInfo {
            rows: dataset.n(),
            features: dataset.p(),
            classes: dataset.k(),
            class_labels: dataset.class_names().to_vec(),
        },
        config: ConfigEcho {
            measure: measure.as_str(),
            rule: rule_echo(&rule, &report),
            threads,
        },
        groups: partition
            .groups()
            .iter()
            .zip(partition.names())
            .map(|(cols, name)| GroupEcho {
                name: name.clone(),
                columns: cols
                    .iter()
                    .map(|&c| dataset.feature_names()[c].clone())
                    .collect(),
            })
            .collect(),
        results: ResultsInfo {
            stats: report.stats.iter().map(|&v| f17(v)).collect(),
            ranking: report.ranking.clone(),
            selected: report.selected.clone(),
            selected_names: report
                .selected
                .iter()
                .map(|&l| partition.names()[l].clone())
                .collect(),
        },
        warnings,
        timing_ms: started.elapsed().as_millis() as u64,
    };

    let mut json = serde_json::to_string_pretty(&doc).expect("report serializes");
    json.push('\n');
    write_output(args.out.as_deref(), &json)
}

/// `key = value` lines; `#` starts a comment. Keys mirror the simulate
/// flags: design, k, n, p, r, probs, error, cov, case, reps, seed,
/// measures, top_d, format.
fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| ScreenError::Io {
        path: path.into(),
        source,
    })?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ScreenError::InvalidConfig(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
    }
    Ok(map)
}

struct SimulateInputs {
    args: SimulateArgs,
    file: HashMap<String, String>,
}

impl SimulateInputs {
    fn text(&self, flag: &Option<String>, key: &str) -> Option<String> {
        flag.clone().or_else(|| self.file.get(key).cloned())
    }

    fn parse<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => raw.trim().parse::<T>().map(Some).map_err(|_| {
                ScreenError::InvalidConfig(format!("config key {key}: cannot parse \"{raw}\""))
            }),
            None => Ok(None),
        }
    }

    fn require<T>(value: Option<T>, what: &str) -> Result<T> {
        value.ok_or_else(|| ScreenError::InvalidConfig(format!("missing {what}")))
    }
}

fn parse_probs(raw: &str, k: usize) -> Result<Vec<f64>> {
    match raw.to_ascii_lowercase().as_str() {
        "balanced" => Ok(vec![1.0 / k as f64; k]),
        "slight" => match k {
            3 => Ok(vec![3.0 / 12.0, 4.0 / 12.0, 5.0 / 12.0]),
            10 => Ok([6.0, 7.0, 8.0, 9.0, 10.0, 10.0, 11.0, 12.0, 13.0, 14.0]
                .iter()
                .map(|v| v / 100.0)
                .collect()),
            _ => Err(ScreenError::InvalidConfig(format!(
                "probs \"slight\" is defined for K = 3 or 10, not K = {k}"
            ))),
        },
        "heavy" => match k {
            3 => Ok(vec![0.1, 0.3, 0.6]),
            10 => Ok([2.0, 4.0, 6.0, 8.0, 10.0, 10.0, 12.0, 14.0, 16.0, 18.0]
                .iter()
                .map(|v| v / 100.0)
                .collect()),
            _ => Err(ScreenError::InvalidConfig(format!(
                "probs \"heavy\" is defined for K = 3 or 10, not K = {k}"
            ))),
        },
        list => list
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    ScreenError::InvalidConfig(format!("cannot parse probability \"{tok}\""))
                })
            })
            .collect(),
    }
}

fn parse_error_dist(raw: &str) -> Result<ErrorDist> {
    match raw.to_ascii_lowercase().as_str() {
        "normal" | "n" => Ok(ErrorDist::Normal),
        "t2" => Ok(ErrorDist::T2),
        "t1" | "cauchy" => Ok(ErrorDist::T1),
        other => Err(ScreenError::InvalidConfig(format!(
            "unknown error distribution \"{other}\" (expected normal, t2 or t1)"
        ))),
    }
}

fn parse_measures(raw: &str) -> Result<Vec<Measure>> {
    let measures: Vec<Measure> = raw
        .split(',')
        .map(|tok| tok.trim().parse::<Measure>())
        .collect::<Result<_>>()?;
    if measures.is_empty() {
        return Err(ScreenError::InvalidConfig("empty measure list".into()));
    }
    Ok(measures)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    setup_threads(args.threads)?;

    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };
    let inputs = SimulateInputs { args, file };

    let design_name = SimulateInputs::require(
        inputs.text(&inputs.args.design, "design"),
        "--design (lda, logistic, gwas or grouped)",
    )?
    .to_ascii_lowercase();

    let n = SimulateInputs::require(inputs.parse(inputs.args.n, "n")?, "--n")?;
    let reps = SimulateInputs::require(inputs.parse(inputs.args.reps, "reps")?, "--reps")?;
    let seed = inputs.parse(inputs.args.seed, "seed")?.unwrap_or(0);
    let measures = parse_measures(
        &inputs
            .text(&inputs.args.measures, "measures")
            .unwrap_or_else(|| "gdc".to_string()),
    )?;
    let model_size = inputs.parse(inputs.args.top_d, "top_d")?.map(|d| d as usize);
    let error_text = inputs.text(&inputs.args.error, "error");
    let probs_text = inputs.text(&inputs.args.probs, "probs");

    let mut echo = SpecEcho {
        n,
        replicates: reps,
        seed,
        measures: measures.iter().map(|m| m.as_str()).collect(),
        rng: gdc_screen_core::simgen::RNG_LABEL,
        ..SpecEcho::default()
    };

    let design = match design_name.as_str() {
        "lda" => {
            let k = inputs.parse(inputs.args.k, "k")?.unwrap_or(3);
            let p = SimulateInputs::require(inputs.parse(inputs.args.p, "p")?, "--p")?;
            let probs = parse_probs(probs_text.as_deref().unwrap_or("balanced"), k)?;
            let error = parse_error_dist(error_text.as_deref().unwrap_or("normal"))?;
            echo.design = "lda";
            echo.k = Some(k);
            echo.p = Some(p);
            echo.error = Some(error_name(error));
            echo = echo.class_probs(&probs);
            Design::Lda {
                k,
                class_probs: probs,
                error,
                p,
            }
        }
        "logistic" => {
            let p = SimulateInputs::require(inputs.parse(inputs.args.p, "p")?, "--p")?;
            let cov = match inputs
                .text(&inputs.args.cov, "cov")
                .unwrap_or_else(|| "identity".to_string())
                .to_ascii_lowercase()
                .as_str()
            {
                "identity" | "id" => Covariance::Identity,
                "ar1" => Covariance::Ar1,
                other => {
                    return Err(ScreenError::InvalidConfig(format!(
                        "unknown covariance \"{other}\" (expected identity or ar1)"
                    )))
                }
            };
            echo.design = "logistic";
            echo.p = Some(p);
            echo.cov = Some(match cov {
                Covariance::Identity => "identity",
                Covariance::Ar1 => "ar1",
            });
            Design::Logistic { p, cov }
        }
        "gwas" => {
            let p = SimulateInputs::require(inputs.parse(inputs.args.p, "p")?, "--p")?;
            let error = parse_error_dist(error_text.as_deref().unwrap_or("normal"))?;
            echo.design = "gwas";
            echo.p = Some(p);
            echo.error = Some(error_name(error));
            Design::Gwas { p, error }
        }
        "grouped" => {
            let r = SimulateInputs::require(inputs.parse(inputs.args.r, "r")?, "--r")?;
            let probs = parse_probs(probs_text.as_deref().unwrap_or("balanced"), 3)?;
            let error = parse_error_dist(error_text.as_deref().unwrap_or("normal"))?;
            let case = match inputs
                .text(&inputs.args.case, "case")
                .unwrap_or_else(|| "a".to_string())
                .to_ascii_lowercase()
                .as_str()
            {
                "a" => GroupedCase::A,
                "b" => GroupedCase::B,
                other => {
                    return Err(ScreenError::InvalidConfig(format!(
                        "unknown case \"{other}\" (expected a or b)"
                    )))
                }
            };
            echo.design = "grouped";
            echo.r = Some(r);
            echo.case = Some(match case {
                GroupedCase::A => "a",
                GroupedCase::B => "b",
            });
            echo.error = Some(error_name(error));
            echo = echo.class_probs(&probs);
            Design::Grouped {
                case,
                class_probs: probs,
                error,
                r,
            }
        }
        other => {
            return Err(ScreenError::InvalidConfig(format!(
                "unknown design \"{other}\" (expected lda, logistic, gwas or grouped)"
            )))
        }
    };

    let spec = SimulationSpec {
        design,
        n,
        replicates: reps,
        base_seed: seed,
        measures,
        model_size,
    };
    let outcome = run_experiment(&spec)?;
    echo.model_size_d = outcome.model_size_d;

    let format = inputs
        .text(&inputs.args.format, "format")
        .unwrap_or_else(|| "json".to_string())
        .to_ascii_lowercase();
    let content = match format.as_str() {
        "json" => {
            let doc = SummaryDocument {
                tool: ToolInfo::current(),
                command: "simulate",
                spec: echo,
                measures: outcome
                    .summaries
                    .iter()
                    .map(|(m, s)| MeasureSummary::new(*m, s))
                    .collect(),
            };
            let mut json = serde_json::to_string_pretty(&doc).expect("summary serializes");
            json.push('\n');
            json
        }
        "csv" => summary_csv(&outcome.summaries),
        other => {
            return Err(ScreenError::InvalidConfig(format!(
                "unknown format \"{other}\" (expected json or csv)"
            )))
        }
    };

    write_output(inputs.args.out.as_deref(), &content)
}

fn error_name(error: ErrorDist) -> &'static str {
    match error {
        ErrorDist::Normal => "normal",
        ErrorDist::T2 => "t2",
        ErrorDist::T1 => "t1",
    }
}
