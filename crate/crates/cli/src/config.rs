//! Experiment configuration files.

use std::path::{Path, PathBuf};

use banach_core::normspace::{BodySpec, PSpec};
use banach_core::spherestats::SmallBallConstants;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Stats,
    Lemma1,
    Smallball,
    Du,
    Schsch,
    Orderstats,
    Basis,
    Kashin,
    Blocks,
    Lochilbert,
    Refute,
    Rip,
    Generalrip,
    Jl,
    Cotype,
}

impl Experiment {
    pub const ALL: [Experiment; 15] = [
        Experiment::Stats,
        Experiment::Lemma1,
        Experiment::Smallball,
        Experiment::Du,
        Experiment::Schsch,
        Experiment::Orderstats,
        Experiment::Basis,
        Experiment::Kashin,
        Experiment::Blocks,
        Experiment::Lochilbert,
        Experiment::Refute,
        Experiment::Rip,
        Experiment::Generalrip,
        Experiment::Jl,
        Experiment::Cotype,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Stats => "stats",
            Experiment::Lemma1 => "lemma1",
            Experiment::Smallball => "smallball",
            Experiment::Du => "du",
            Experiment::Schsch => "schsch",
            Experiment::Orderstats => "orderstats",
            Experiment::Basis => "basis",
            Experiment::Kashin => "kashin",
            Experiment::Blocks => "blocks",
            Experiment::Lochilbert => "lochilbert",
            Experiment::Refute => "refute",
            Experiment::Rip => "rip",
            Experiment::Generalrip => "generalrip",
            Experiment::Jl => "jl",
            Experiment::Cotype => "cotype",
        }
    }

    pub fn from_id(id: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.id() == id)
    }

    /// Grid axes the experiment reads; other axes are ignored with a warning.
    pub fn axes(self) -> &'static [Axis] {
        use Axis::*;
        match self {
            Experiment::Stats | Experiment::Schsch | Experiment::Kashin | Experiment::Basis => &[N],
            Experiment::Lemma1 => &[N, T],
            Experiment::Smallball => &[N, T],
            Experiment::Du => &[N, U],
            Experiment::Orderstats => &[M, S],
            Experiment::Blocks => &[N, K, Eps],
            Experiment::Lochilbert => &[N, K, Eps],
            Experiment::Refute => &[N, Eps],
            Experiment::Rip | Experiment::Generalrip => &[N, K, Eps, M],
            Experiment::Jl => &[N, K, Eps],
            Experiment::Cotype => &[N, Q],
        }
    }

    /// Axes that must be present and non-empty.
    pub fn required_axes(self) -> &'static [Axis] {
        use Axis::*;
        match self {
            Experiment::Lemma1 | Experiment::Smallball => &[T],
            Experiment::Schsch => &[T],
            Experiment::Du => &[U],
            Experiment::Orderstats => &[M, S],
            Experiment::Lochilbert | Experiment::Rip | Experiment::Generalrip | Experiment::Jl => &[K, Eps],
            Experiment::Basis => &[K],
            Experiment::Blocks | Experiment::Refute => &[Eps],
            Experiment::Cotype => &[Q],
            _ => &[],
        }
    }

    pub fn needs_body(self) -> bool {
        !matches!(self, Experiment::Orderstats | Experiment::Kashin | Experiment::Rip | Experiment::Refute)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    T,
    K,
    Eps,
    M,
    U,
    S,
    Q,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::T => "t",
            Axis::K => "k",
            Axis::Eps => "eps",
            Axis::M => "m",
            Axis::U => "u",
            Axis::S => "s",
            Axis::Q => "q",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<PSpec>>,
}

impl Grid {
    fn len_of(&self, axis: Axis) -> Option<usize> {
        match axis {
            Axis::N => self.n.as_ref().map(Vec::len),
            Axis::T => self.t.as_ref().map(Vec::len),
            Axis::K => self.k.as_ref().map(Vec::len),
            Axis::Eps => self.eps.as_ref().map(Vec::len),
            Axis::M => self.m.as_ref().map(Vec::len),
            Axis::U => self.u.as_ref().map(Vec::len),
            Axis::S => self.s.as_ref().map(Vec::len),
            Axis::Q => self.q.as_ref().map(Vec::len),
        }
    }
}

/// Bases used by the refuter and the sketch experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Identity,
    Haar,
    /// Permutation matrix with signs, plus a small Gaussian perturbation.
    PerturbedPermutation,
}

/// Tunable constants; every field has an experiment-specific default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_prime: Option<f64>,
    #[serde(default, rename = "C_jl", skip_serializing_if = "Option::is_none")]
    pub c_jl: Option<f64>,
    /// Multiplier of `eps⁻²·k·ln(en/k)` for the default sketch dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_rip: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub small_ball: Option<SmallBallConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_cap: Option<usize>,
    /// Random samples per distortion or ratio search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_limit: Option<f64>,
    /// Pass threshold for fitted constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisKind>,
    /// Number of points for the embedding experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Trials per cell where an experiment repeats an inner draw.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
    /// Target space of `generalrip`; Euclidean when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BodySpec>,
    #[serde(default)]
    pub grid: Grid,
    pub seeds: Vec<u64>,
    pub samples: usize,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub output: Output,
}

/// Line of the first occurrence of `"key"` in the source, for messages.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let pat = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&pat)).map(|i| i + 1)
}

fn at(path: &Path, text: &str, key: &str, msg: String) -> CliError {
    match line_of(text, key) {
        Some(l) => CliError::Config(format!("{}:{l}: {msg}", path.display())),
        None => CliError::Config(format!("{}: {msg}", path.display())),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(ExperimentConfig, Vec<String>), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: cannot read: {e}", path.display())))?;
        Self::parse(path, &text)
    }

    /// Parses and validates; returns the config and any warnings.
    pub fn parse(path: &Path, text: &str) -> Result<(ExperimentConfig, Vec<String>), CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{}:{}:{}: {}", path.display(), e.line(), e.column(), strip_position(&e.to_string())))
        })?;
        let warnings = cfg.validate().map_err(|(key, msg)| at(path, text, key, msg))?;
        Ok((cfg, warnings))
    }

    /// Semantic checks. Errors carry the offending key.
    fn validate(&self) -> Result<Vec<String>, (&'static str, String)> {
        let e = self.experiment;
        let mut warnings = Vec::new();
        if self.seeds.is_empty() {
            return Err(("seeds", "seeds must be non-empty".into()));
        }
        if self.samples < 100 {
            return Err(("samples", format!("samples must be at least 100, got {}", self.samples)));
        }
        if e.needs_body() && self.body.is_none() {
            return Err(("experiment", format!("experiment {} needs a body", e.id())));
        }
        if self.target.is_some() && e != Experiment::Generalrip {
            warnings.push(format!("target is ignored by {}", e.id()));
        }
        for axis in [Axis::N, Axis::T, Axis::K, Axis::Eps, Axis::M, Axis::U, Axis::S, Axis::Q] {
            match self.grid.len_of(axis) {
                Some(0) => return Err(("grid", format!("grid.{} must be non-empty", axis.name()))),
                Some(_) if !e.axes().contains(&axis) => {
                    warnings.push(format!("grid.{} is ignored by {}", axis.name(), e.id()))
                }
                None if e.required_axes().contains(&axis) => {
                    return Err(("grid", format!("{} needs grid.{}", e.id(), axis.name())))
                }
                _ => {}
            }
        }
        if self.grid.n.is_none() && e.axes().contains(&Axis::N) {
            let fixed = self.body.as_ref().and_then(BodySpec::dim);
            if fixed.is_none() {
                return Err(("grid", format!("{} needs grid.n or a body with a fixed dimension", e.id())));
            }
        }
        if let Some(eps) = &self.grid.eps {
            if let Some(v) = eps.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(("eps", format!("eps values must lie in (0, 1), got {v}")));
            }
        }
        if let Some(t) = &self.grid.t {
            if let Some(v) = t.iter().find(|v| !v.is_finite() || **v <= 0.0) {
                return Err(("t", format!("t values must be positive, got {v}")));
            }
            if matches!(e, Experiment::Lemma1 | Experiment::Smallball) {
                for n in self.dims() {
                    let bad: Vec<String> =
                        t.iter().filter(|t| !(**t >= 1.0 && **t <= (n as f64).sqrt())).map(|t| format!("{t}")).collect();
                    if !bad.is_empty() {
                        warnings.push(format!("n={n}: skipping t outside [1, sqrt(n)]: {}", bad.join(", ")));
                    }
                }
            }
        }
        if let Some(k) = &self.grid.k {
            if k.contains(&0) {
                return Err(("k", "k values must be positive".into()));
            }
        }
        if e == Experiment::Kashin {
            if let Some(n) = self.dims().into_iter().find(|n| n % 2 == 1) {
                return Err(("n", format!("kashin needs even dimensions, got {n}")));
            }
        }
        if let Some(b) = &self.body {
            let n = self.dims().first().copied().or(b.dim()).unwrap_or(2);
            b.with_dim(n).map_err(|err| ("body", err.to_string()))?;
        }
        Ok(warnings)
    }

    /// Dimension grid, falling back to the body's own dimension.
    pub fn dims(&self) -> Vec<usize> {
        match (&self.grid.n, self.body.as_ref().and_then(BodySpec::dim)) {
            (Some(n), _) => n.clone(),
            (None, Some(d)) => vec![d],
            (None, None) => Vec::new(),
        }
    }

    /// Canonical JSON of every semantic field. Seeds and output location are
    /// excluded: rows are keyed by (hash, seed).
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("seeds");
            obj.remove("output");
        }
        // serde_json maps are ordered by key, so this is canonical.
        serde_json::to_string(&v).expect("value serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_json`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
  "experiment": "stats",
  "body": {"kind": "pnorm", "p": 2, "dim": 8},
  "seeds": [1],
  "samples": 1000
}"#;

    fn parse(text: &str) -> Result<(ExperimentConfig, Vec<String>), CliError> {
        ExperimentConfig::parse(Path::new("c.json"), text)
    }

    #[test]
    fn parses_minimal() {
        let (cfg, warn) = parse(BASE).unwrap();
        assert_eq!(cfg.dims(), vec![8]);
        assert!(warn.is_empty());
    }

    #[test]
    fn unknown_experiment_names_the_field() {
        let err = parse(&BASE.replace("\"stats\"", "\"statz\"")).unwrap_err().to_string();
        assert!(err.contains("c.json:2:") && err.contains("statz"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse(&BASE.replace("\"samples\"", "\"sample\"")).unwrap_err().to_string();
        assert!(err.contains("unknown field `sample`"), "{err}");
    }

    #[test]
    fn semantic_errors_are_line_numbered() {
        let err = parse(&BASE.replace("1000", "10")).unwrap_err().to_string();
        assert!(err.starts_with("c.json:5:"), "{err}");
    }

    #[test]
    fn skipped_t_warning() {
        let text = r#"{"experiment": "lemma1", "body": {"kind": "pnorm", "p": "inf", "dim": 16},
            "grid": {"t": [0.5, 2, 8]}, "seeds": [1], "samples": 100}"#;
        let (_, warn) = parse(text).unwrap();
        assert_eq!(warn, vec!["n=16: skipping t outside [1, sqrt(n)]: 0.5, 8".to_string()]);
    }

    #[test]
    fn hash_ignores_whitespace_and_seeds() {
        let (a, _) = parse(BASE).unwrap();
        let (b, _) = parse(&BASE.replace('\n', " ").replace("[1]", "[5, 6]")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let (c, _) = parse(&BASE.replace("1000", "2000")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
