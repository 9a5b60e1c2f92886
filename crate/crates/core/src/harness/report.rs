use std::fmt::Write as _;

use serde::Serialize;

use super::{RunConfig, TOLERANCE};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub trial: usize,
    pub values: Vec<f64>,
    pub pass: bool,
    /// Measured over certified bound (or signed excess, for `sparse-seq`).
    pub margin: f64,
    pub inputs_hash: String,
}

/// A run-level check outside the per-trial table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub failures: usize,
    pub max_margin: f64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub tolerance: f64,
    pub columns: Vec<String>,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub(crate) fn new(
        config: &RunConfig,
        columns: Vec<&str>,
        records: Vec<Record>,
        checks: Vec<Check>,
        notes: Vec<String>,
    ) -> Self {
        let failures =
            records.iter().filter(|r| !r.pass).count() + checks.iter().filter(|c| !c.pass).count();
        let max_margin = records
            .iter()
            .map(|r| r.margin)
            .fold(
                f64::NEG_INFINITY,
                |a, b| if b.is_nan() { a } else { a.max(b) },
            );
        Report {
            experiment: config.experiment.name().to_string(),
            seed: config.seed,
            tolerance: TOLERANCE,
            columns: columns.into_iter().map(String::from).collect(),
            summary: Summary {
                trials: records.len(),
                failures,
                max_margin: if records.is_empty() { 0.0 } else { max_margin },
                checks,
                notes,
            },
            records,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.failures == 0
    }

    /// Canonical CSV: `trial,<columns>,pass,inputs_hash,tolerance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push_str(",pass,inputs_hash,tolerance\n");
        for r in &self.records {
            let _ = write!(out, "{}", r.trial);
            for v in &r.values {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{},{},{}", r.pass, r.inputs_hash, self.tolerance);
        }
        out
    }

    pub fn to_json(&self) -> String {
        // serde_json maps non-finite floats to null
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::super::Experiment;
    use super::*;

    #[test]
    fn csv_layout() {
        let cfg = RunConfig::new(Experiment::JkGap);
        let rec = Record {
            trial: 0,
            values: vec![1.5, 2.0],
            pass: true,
            margin: 0.75,
            inputs_hash: "ab".into(),
        };
        let r = Report::new(&cfg, vec!["a", "b"], vec![rec], vec![], vec![]);
        assert_eq!(
            r.to_csv(),
            "trial,a,b,pass,inputs_hash,tolerance\n0,1.5,2,true,ab,0.000000001\n"
        );
        assert_eq!(r.summary.max_margin, 0.75);
        assert!(r.to_json().contains("\"failures\": 0"));
    }
}
