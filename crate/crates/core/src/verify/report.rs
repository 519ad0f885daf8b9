use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;

/// One numeric check. `pass` is decided by the command that built it; the
/// threshold is recorded so the decision can be audited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub threshold: f64,
    pub pass: bool,
}

fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Check {
    /// Passes iff `estimate <= threshold`.
    pub fn at_most(name: impl Into<String>, estimate: f64, stderr: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            stderr,
            threshold,
            pass: estimate <= threshold,
        }
    }

    /// Passes iff `estimate >= threshold`.
    pub fn at_least(name: impl Into<String>, estimate: f64, stderr: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            stderr,
            threshold,
            pass: estimate >= threshold,
        }
    }

    /// Passes iff `|estimate - target| <= tol`; the target is recorded as the threshold.
    pub fn equals(name: impl Into<String>, estimate: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            stderr: 0.0,
            threshold: target,
            pass: (estimate - target).abs() <= tol,
        }
    }

    /// A recorded number that does not take part in the verdict.
    pub fn info(name: impl Into<String>, estimate: f64, stderr: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            stderr,
            threshold: f64::NAN,
            pass: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    pub walltime_s: f64,
}

impl Report {
    pub fn new(config: &ExperimentConfig, checks: Vec<Check>, walltime_s: f64) -> Self {
        let verdict = if checks.iter().all(|c| c.pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            experiment: config.experiment.name().to_string(),
            config: config.clone(),
            seed: config.seed,
            checks,
            verdict,
            walltime_s,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// JSON with the wall-time zeroed, for comparing runs.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.walltime_s = 0.0;
        copy.to_json()
    }

    /// Non-finite numbers (informational thresholds) serialize as `null`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Informational rows leave the threshold empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["experiment", "name", "estimate", "stderr", "threshold", "pass"])?;
        for c in &self.checks {
            w.write_record([
                self.experiment.as_str(),
                c.name.as_str(),
                &c.estimate.to_string(),
                &c.stderr.to_string(),
                &if c.threshold.is_finite() {
                    c.threshold.to_string()
                } else {
                    String::new()
                },
                if c.pass { "true" } else { "false" },
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| crate::error::Error::Io(e.into_error().to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `path` (JSON) and `path` with a `.csv` extension.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        std::fs::write(path, self.to_json()?)?;
        let csv_path = path.with_extension("csv");
        std::fs::write(&csv_path, self.to_csv()?)?;
        Ok(csv_path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::config::Experiment;

    fn report(checks: Vec<Check>) -> Report {
        Report::new(
            &ExperimentConfig::new(Experiment::Validate, "heisenberg:1"),
            checks,
            1.5,
        )
    }

    #[test]
    fn verdict_requires_every_check() {
        let ok = report(vec![Check::at_most("a", 1.0, 0.1, 2.0), Check::info("b", 3.0, 0.0)]);
        assert!(ok.passed());
        let bad = report(vec![
            Check::at_most("a", 1.0, 0.1, 2.0),
            Check::at_least("c", 1.0, 0.0, 2.0),
        ]);
        assert!(!bad.passed());
        assert!(report(vec![]).passed());
    }

    #[test]
    fn json_field_names_are_stable() {
        let r = report(vec![Check::info("x", 1.0, 0.5)]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in ["experiment", "config", "seed", "checks", "verdict", "walltime_s"] {
            assert!(keys.contains(&k), "{k}");
        }
        let check = &v["checks"][0];
        for k in ["name", "estimate", "stderr", "threshold", "pass"] {
            assert!(check.get(k).is_some(), "{k}");
        }
        assert_eq!(v["verdict"], "pass");
        assert!(check["threshold"].is_null());
        assert!(v["config"].get("workers").is_none());
    }

    #[test]
    fn canonical_json_ignores_walltime() {
        let a = report(vec![Check::info("x", 1.0, 0.5)]);
        let mut b = a.clone();
        b.walltime_s = 99.0;
        assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
    }

    #[test]
    fn csv_mirror_has_one_row_per_check() {
        let r = report(vec![Check::info("x", 1.0, 0.5), Check::at_most("y, z", 2.0, 0.1, 1.0)]);
        let text = r.to_csv().unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("\"y, z\""));
        let dir = tempfile::tempdir().unwrap();
        let csv = r.write(&dir.path().join("r.json")).unwrap();
        assert!(csv.ends_with("r.csv"));
        assert!(std::fs::read_to_string(csv).unwrap().starts_with("experiment,name"));
    }
}
