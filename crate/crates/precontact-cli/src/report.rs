use precontact::report::CheckRecord;
use serde::Serialize;

use crate::compile::Compiled;
use crate::scenario::Config;

pub const SCHEMA: &str = "precontact-report/1";

#[derive(Debug, Serialize)]
pub struct Record {
    pub check: String,
    /// The identity being checked.
    pub anchor: String,
    /// `null` when the residual is not finite.
    pub max_residual: f64,
    pub threshold: f64,
    pub expect_failure: bool,
    pub pass: bool,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Seconds spent in the checker that produced this record. Only present
    /// with `--timing`, since it breaks byte-identical reports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Record {
    pub fn from_check(prefix: &str, r: CheckRecord, wall: Option<f64>) -> Self {
        Record {
            check: format!("{prefix}/{}", r.id),
            anchor: r.anchor,
            max_residual: r.max_residual,
            threshold: r.threshold,
            expect_failure: r.expect_failure,
            pass: r.pass,
            samples: r.samples,
            note: r.note,
            wall_time_s: wall,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub command: String,
    pub config: Config,
    /// Tolerance forced on every check from the command line, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_override: Option<f64>,
    pub pass: bool,
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(sc: &Compiled, description: Option<String>, command: &str, tol_override: Option<f64>, records: Vec<Record>) -> Self {
        let pass = records.iter().all(|r| r.pass);
        Report {
            schema: SCHEMA,
            scenario: sc.name.clone(),
            description,
            command: command.into(),
            config: sc.config.clone(),
            tol_override,
            pass,
            records,
        }
    }
}
