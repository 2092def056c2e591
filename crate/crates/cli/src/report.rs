//! Machine-readable report documents.
//!
//! JSON is the canonical format. Field order is fixed by the struct
//! definitions, and every floating-point statistic is emitted with 17
//! significant digits (enough to reproduce the f64 bit pattern exactly) by
//! writing it as a raw JSON number.

use serde::Serialize;
use serde_json::value::RawValue;

use gdc_screen_core::{Measure, MetricsSummary, ScreeningReport, SelectionRule};

/// An f64 as a raw JSON number with 17 significant digits.
pub fn f17(v: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{v:.16e}")).expect("finite float as JSON number")
}

fn f17_vec(vs: &[f64]) -> Vec<Box<RawValue>> {
    vs.iter().map(|&v| f17(v)).collect()
}

#[derive(Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: "gdc-screen",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Serialize)]
pub struct InputInfo {
    pub data_path: String,
    pub data_sha256: String,
    pub label_column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups_sha256: Option<String>,
}

#[derive(Serialize)]
pub struct DataInfo {
    pub rows: usize,
    pub features: usize,
    pub classes: usize,
    pub class_labels: Vec<String>,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RuleEcho {
    TopD {
        d: usize,
    },
    Threshold {
        c: Box<RawValue>,
        kappa: Box<RawValue>,
        cut: Box<RawValue>,
    },
}

#[derive(Serialize)]
pub struct ConfigEcho {
    pub measure: &'static str,
    pub rule: RuleEcho,
    pub threads: usize,
}

#[derive(Serialize)]
pub struct GroupEcho {
    pub name: String,
    pub columns: Vec<String>,
}

#[derive(Serialize)]
pub struct ResultsInfo {
    pub stats: Vec<Box<RawValue>>,
    pub ranking: Vec<usize>,
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
}

/// The `screen` command's report.
#[derive(Serialize)]
pub struct ReportDocument {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub input: InputInfo,
    pub data: DataInfo,
    pub config: ConfigEcho,
    pub groups: Vec<GroupEcho>,
    pub results: ResultsInfo,
    pub warnings: Vec<String>,
    pub timing_ms: u64,
}

pub fn rule_echo(rule: &SelectionRule, report: &ScreeningReport) -> RuleEcho {
    match *rule {
        SelectionRule::TopD(d) => RuleEcho::TopD { d },
        SelectionRule::Threshold { c, kappa } => RuleEcho::Threshold {
            c: f17(c),
            kappa: f17(kappa),
            cut: f17(report.threshold_value.unwrap_or(f64::NAN)),
        },
    }
}

/// One summary row of a simulation experiment.
#[derive(Serialize)]
pub struct MeasureSummary {
    pub measure: &'static str,
    pub mms_median: Box<RawValue>,
    pub rsd: Box<RawValue>,
    pub p_l: Vec<Box<RawValue>>,
    pub p_min: Box<RawValue>,
    pub p_max: Box<RawValue>,
    pub p_all: Box<RawValue>,
}

impl MeasureSummary {
    pub fn new(measure: Measure, s: &MetricsSummary) -> Self {
        MeasureSummary {
            measure: measure.as_str(),
            mms_median: f17(s.mms_median),
            rsd: f17(s.rsd),
            p_l: f17_vec(&s.p_l),
            p_min: f17(s.p_min),
            p_max: f17(s.p_max),
            p_all: f17(s.p_all),
        }
    }
}

#[derive(Serialize, Default)]
pub struct SpecEcho {
    pub design: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_probs: Option<Vec<Box<RawValue>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<&'static str>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub measures: Vec<&'static str>,
    pub model_size_d: usize,
    pub rng: &'static str,
}

impl SpecEcho {
    pub fn class_probs(mut self, probs: &[f64]) -> Self {
        self.class_probs = Some(f17_vec(probs));
        self
    }
}

/// The `simulate` command's JSON summary. Deliberately carries no timing so
/// identical invocations produce byte-identical files.
#[derive(Serialize)]
pub struct SummaryDocument {
    pub tool: ToolInfo,
    pub command: &'static str,
    pub spec: SpecEcho,
    pub measures: Vec<MeasureSummary>,
}

/// The lossy CSV view of a simulation summary.
pub fn summary_csv(rows: &[(Measure, MetricsSummary)]) -> String {
    let mut out = String::from("measure,mms_median,rsd,p_min,p_max,p_all\n");
    for (measure, s) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            measure.as_str(),
            s.mms_median,
            s.rsd,
            s.p_min,
            s.p_max,
            s.p_all
        ));
    }
    out
}
