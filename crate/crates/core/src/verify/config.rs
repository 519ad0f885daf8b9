use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{GroupSpec, StratifiedAlgebra};
use crate::mc::{SamplerConfig, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Validate,
    Sample,
    Identities,
    Contractivity,
    Shc,
    LsiProbe,
    KernelCheck,
    Nonholo,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::Sample => "sample",
            Experiment::Identities => "identities",
            Experiment::Contractivity => "contractivity",
            Experiment::Shc => "shc",
            Experiment::LsiProbe => "lsi-probe",
            Experiment::KernelCheck => "kernel-check",
            Experiment::Nonholo => "nonholo",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("unknown experiment `{s}`")))
    }
}

/// Everything that determines a report. Worker count and output path are
/// deliberately not serialized: they must not change the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Builtin tag (`heisenberg:1`, `abelian:2`, `filiform:4`) or a JSON path.
    pub group: String,
    pub a: f64,
    pub n: usize,
    pub steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Multiplier of the standard error in statistical checks.
    pub sigmas: f64,
    /// Slack, in standard errors, for inequality checks.
    pub slack: f64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub c: Option<f64>,
    pub beta: f64,
    pub c_from_probe: bool,
    pub t_grid: Vec<f64>,
    pub f: Option<String>,
    /// Number of random polynomial pairs in the identity suite.
    pub pairs: usize,
    /// Number of random pairs with distinct degrees in the orthogonality check.
    pub orthogonality_pairs: usize,
    /// Largest weighted degree of random test polynomials.
    pub degree: u32,
    /// Random members of the LSI probe family, added to all monomials.
    pub family_size: usize,
    /// Held-out polynomials for the SHC check.
    pub held_out: usize,
    /// `euclidean` or a JSON path to a Gram matrix on the realification.
    pub inner_product: Option<String>,
    pub require_h_type: bool,
    pub bandwidth: f64,
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, group: &str) -> Self {
        Self {
            experiment,
            group: group.to_string(),
            a: 1.0,
            n: 1_000_000,
            steps: SamplerConfig::DEFAULT_STEPS,
            seed: 20_240_601,
            scheme: Scheme::Auto,
            sigmas: 3.0,
            slack: 2.0,
            p: None,
            q: None,
            c: None,
            beta: 0.0,
            c_from_probe: false,
            t_grid: parse_t_grid("0:2:0.25").expect("default grid is valid"),
            f: None,
            pairs: 20,
            orthogonality_pairs: 10,
            degree: 3,
            family_size: 16,
            held_out: 5,
            inner_product: None,
            require_h_type: false,
            bandwidth: 0.05,
            workers: None,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let domain = |msg: String| Err(Error::Domain(msg));
        if !(self.a > 0.0) || !self.a.is_finite() {
            return domain(format!("a must be > 0, got {}", self.a));
        }
        if self.n == 0 || self.steps == 0 {
            return domain("n and steps must be >= 1".into());
        }
        if !(self.sigmas > 0.0) || !(self.slack >= 0.0) {
            return domain("sigma multipliers must be positive".into());
        }
        if let (Some(q), Some(p)) = (self.q, self.p) {
            if !(q > 0.0 && q <= p) {
                return domain(format!("need 0 < q <= p, got q = {q}, p = {p}"));
            }
        }
        if self.p.is_some_and(|p| !(p > 0.0)) || self.q.is_some_and(|q| !(q > 0.0)) {
            return domain("p and q must be > 0".into());
        }
        if self.c.is_some_and(|c| !(c > 0.0)) {
            return domain("c must be > 0".into());
        }
        if !(self.beta >= 0.0) {
            return domain(format!("beta must be >= 0, got {}", self.beta));
        }
        if self.t_grid.windows(2).any(|w| w[1] < w[0]) || self.t_grid.iter().any(|t| !(*t >= 0.0)) {
            return domain("t-grid must be sorted ascending and nonnegative".into());
        }
        if !(self.bandwidth > 0.0) {
            return domain("bandwidth must be > 0".into());
        }
        if self.workers == Some(0) {
            return domain("workers must be >= 1".into());
        }
        Ok(())
    }

    pub fn sampler(&self, s: f64) -> SamplerConfig {
        SamplerConfig {
            s,
            n: self.n,
            steps: self.steps,
            seed: self.seed,
            scheme: self.scheme,
        }
    }

    pub fn algebra(&self) -> Result<Arc<StratifiedAlgebra>> {
        resolve_group(&self.group).map(Arc::new)
    }
}

/// A builtin tag, or a path to a JSON group specification.
pub fn resolve_group(spec: &str) -> Result<StratifiedAlgebra> {
    let path = std::path::Path::new(spec);
    if spec.ends_with(".json") || path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let parsed: GroupSpec = serde_json::from_str(&text)?;
        return StratifiedAlgebra::from_spec(&parsed);
    }
    StratifiedAlgebra::from_tag(spec)
}

/// `start:end:step`, inclusive of `end` up to rounding.
pub fn parse_t_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Parse(format!("t-grid must look like start:end:step, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + step * i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_grid_parsing() {
        let g = parse_t_grid("0:2:0.25").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[8], 2.0);
        assert_eq!(parse_t_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        for bad in ["0:1", "a:1:0.1", "1:0:0.1", "0:1:0", "0:1:-1"] {
            assert!(parse_t_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in [
            Experiment::Validate,
            Experiment::Sample,
            Experiment::Identities,
            Experiment::Contractivity,
            Experiment::Shc,
            Experiment::LsiProbe,
            Experiment::KernelCheck,
            Experiment::Nonholo,
        ] {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("bogus".parse::<Experiment>().is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::new(Experiment::Shc, "abelian:1");
        assert!(cfg.validate().is_ok());
        cfg.q = Some(4.0);
        cfg.p = Some(2.0);
        assert!(cfg.validate().is_err());
        cfg.q = Some(2.0);
        cfg.p = Some(4.0);
        cfg.t_grid = vec![0.5, 0.25];
        assert!(cfg.validate().is_err());
        cfg.t_grid = vec![0.0];
        cfg.a = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn groups_from_tags_and_files() {
        assert_eq!(resolve_group("heisenberg:2").unwrap().dim(), 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let spec = StratifiedAlgebra::filiform(4).unwrap().to_spec();
        std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(resolve_group(path.to_str().unwrap()).unwrap().dim(), 5);
        std::fs::write(&path, "{ not json").unwrap();
        assert!(resolve_group(path.to_str().unwrap()).is_err());
        assert!(resolve_group("nonsense:1").is_err());
    }
}
