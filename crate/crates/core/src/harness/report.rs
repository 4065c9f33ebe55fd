//! Suite reports (JSON) and curves (CSV). Reports carry no timestamps or
//! host details, so identical configs give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{OutputPaths, SuiteConfig};
use crate::error::Result;
use crate::io::write_json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
    /// Recorded measurement without a pass/fail threshold.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// The statement being checked, in words.
    pub anchor: String,
    pub instance: String,
    pub params: BTreeMap<String, Value>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub residual: Option<f64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl CheckRecord {
    pub fn new(id: &str, anchor: &str, instance: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            anchor: anchor.into(),
            instance: instance.into(),
            params: BTreeMap::new(),
            lhs: None,
            rhs: None,
            residual: None,
            status: Status::Info,
            reason: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    pub fn sides(mut self, lhs: f64, rhs: f64) -> Self {
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        self
    }

    pub fn residual(mut self, r: f64) -> Self {
        self.residual = Some(r);
        self
    }

    pub fn verdict(mut self, pass: bool) -> Self {
        self.status = if pass { Status::Pass } else { Status::Fail };
        self
    }

    pub fn info(mut self) -> Self {
        self.status = Status::Info;
        self
    }

    pub fn skip(mut self, reason: impl Into<String>) -> Self {
        self.status = Status::Skip;
        self.reason = Some(reason.into());
        self
    }

    /// A failed record carrying an error raised while computing the check.
    pub fn error(mut self, err: impl std::fmt::Display) -> Self {
        self.status = Status::Fail;
        self.reason = Some(err.to_string());
        self
    }

    pub fn because(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
    pub info: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub version: String,
    pub seed: u64,
    /// The suite config with output paths cleared.
    pub config: SuiteConfig,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    pub pass: bool,
    #[serde(skip)]
    output: OutputPaths,
}

impl Report {
    pub fn new(config: &SuiteConfig, checks: Vec<CheckRecord>) -> Self {
        let mut summary = Summary {
            total: checks.len(),
            ..Default::default()
        };
        for c in &checks {
            match c.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Skip => summary.skip += 1,
                Status::Info => summary.info += 1,
            }
        }
        let mut config = config.clone();
        let output = std::mem::take(&mut config.output);
        Self {
            suite: config.suite.name().into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config,
            output,
            pass: summary.fail == 0,
            checks,
            summary,
        }
    }

    pub fn checks_with_id<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.checks.iter().filter(move |c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A numeric table destined for one CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutput {
    pub report: Report,
    pub curves: Vec<Curve>,
}

impl SuiteOutput {
    /// Writes the report and curves to the paths in the config, if set.
    pub fn persist(&self) -> Result<()> {
        let out = &self.report.output;
        if let Some(path) = &out.report {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            write_json(path, &self.report)?;
        }
        if let Some(dir) = &out.curves {
            fs::create_dir_all(dir)?;
            for curve in &self.curves {
                curve.write_csv(&dir.join(format!("{}_{}.csv", self.report.suite, curve.name)))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_pass_rule() {
        let cfg = SuiteConfig::default();
        let checks = vec![
            CheckRecord::new("a", "x", "i").verdict(true),
            CheckRecord::new("a", "x", "j").skip("no"),
            CheckRecord::new("b", "y", "i").info(),
        ];
        let r = Report::new(&cfg, checks.clone());
        assert!(r.pass);
        assert_eq!(
            r.summary,
            Summary {
                total: 3,
                pass: 1,
                fail: 0,
                skip: 1,
                info: 1
            }
        );
        let mut failing = checks;
        failing.push(CheckRecord::new("c", "z", "k").error("boom"));
        assert!(!Report::new(&cfg, failing).pass);
    }

    #[test]
    fn curves_write_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Curve::new("tail", &["t", "value"]);
        c.push(vec![1.0, 0.5]);
        let path = dir.path().join("c.csv");
        c.write_csv(&path).unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "t,value\n1,0.5\n");
    }
}
