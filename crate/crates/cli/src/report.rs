use serde::Serialize;

use rinorm::conditions::{CheckReport, IndexEstimate, Verdict};
use rinorm::fourier::BatteryReport;
use rinorm::weights::ConvergenceVerdict;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_digest: String,
    pub items: Vec<Item>,
}

#[derive(Debug, Serialize)]
pub struct Item {
    pub name: String,
    /// What the item tested, in words.
    pub criterion: String,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    Norm {
        #[serde(with = "rinorm::serde_ext")]
        value: f64,
        #[serde(with = "rinorm::serde_ext")]
        error: f64,
    },
    Table {
        columns: Vec<String>,
        /// Largest relative disagreement between redundant columns.
        #[serde(with = "rinorm::serde_ext")]
        max_rel_diff: f64,
        #[serde(skip)]
        rows: Vec<Vec<f64>>,
    },
    Check(CheckReport),
    Admissibility {
        verdict: Verdict,
        detail: ConvergenceVerdict,
    },
    Monotonicity {
        verdict: Verdict,
    },
    Indices {
        estimate: IndexEstimate,
    },
    Battery(BatteryReport),
}

impl Outcome {
    pub fn fails(&self) -> bool {
        match self {
            Outcome::Check(c) => c.verdict == Verdict::Fails,
            Outcome::Admissibility { verdict, .. } | Outcome::Monotonicity { verdict } => *verdict == Verdict::Fails,
            _ => false,
        }
    }

    /// CSV header and rows for items that carry grids.
    pub fn csv(&self) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
        match self {
            Outcome::Table { columns, rows, .. } => Some((columns.clone(), rows.clone())),
            Outcome::Check(c) if !c.samples.is_empty() => Some((
                vec!["x".into(), "ratio".into()],
                c.samples.iter().map(|&(x, r)| vec![x, r]).collect(),
            )),
            Outcome::Battery(b) => Some((
                ["index", "c", "c_lower", "c_upper", "witness"].map(String::from).to_vec(),
                b.samples
                    .iter()
                    .map(|s| vec![s.index as f64, s.c, s.c_lower, s.c_upper, s.witness])
                    .collect(),
            )),
            _ => None,
        }
    }
}

/// Wall-clock seconds per item, kept out of the report so reports stay
/// byte-identical across runs.
#[derive(Debug, Serialize)]
pub struct Timings {
    pub config_digest: String,
    pub items: Vec<(String, f64)>,
}
