use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Personalized,
    SourceSeeking,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Personalized => "personalized",
            ScenarioKind::SourceSeeking => "source_seeking",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "personalized" => Ok(ScenarioKind::Personalized),
            "source_seeking" | "source-seeking" => Ok(ScenarioKind::SourceSeeking),
            other => Err(Error::Parse(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Everything needed to reproduce a run, Monte Carlo campaign or sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub n_agents: usize,
    pub dim: usize,
    pub edge_prob: f64,
    pub gamma: f64,
    pub delta: f64,
    pub tau0: u64,
    pub tau0i: u64,
    pub phi0: f64,
    pub rounds: usize,
    /// Defaults to the common dither period when unset.
    pub probe_every: Option<usize>,
    pub n_instances: usize,
    pub base_seed: u64,
    /// Radius of the ball around the origin holding the initial `w_i⁰`.
    pub init_radius: f64,
    /// Source position (source seeking only).
    pub target: Vec<f64>,
    /// Covariance scale of the per-agent biased sources.
    pub sigma: f64,
    pub output: PathBuf,
    pub parallel: bool,
    pub per_instance: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Personalized,
            n_agents: 5,
            dim: 2,
            edge_prob: 0.2,
            gamma: 0.01,
            delta: 0.2,
            tau0: 3,
            tau0i: 2,
            phi0: 0.0,
            rounds: 20_000,
            probe_every: None,
            n_instances: 5,
            base_seed: 0,
            init_radius: 5.0,
            target: vec![0.0, 0.0],
            sigma: 0.5,
            output: PathBuf::from("esgt_run.csv"),
            parallel: false,
            per_instance: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "scenario",
    "n-agents",
    "dim",
    "edge-prob",
    "gamma",
    "delta",
    "tau0",
    "tau0i",
    "phi0",
    "rounds",
    "probe-every",
    "n-instances",
    "base-seed",
    "init-radius",
    "target",
    "sigma",
    "output",
    "parallel",
    "per-instance",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value {value:?} for {key}")))
}

pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ScenarioConfig {
    /// Sets one field from its kebab-case key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "scenario" => self.scenario = v.parse()?,
            "n-agents" => self.n_agents = parse(&key, v)?,
            "dim" => self.dim = parse(&key, v)?,
            "edge-prob" => self.edge_prob = parse(&key, v)?,
            "gamma" => self.gamma = parse(&key, v)?,
            "delta" => self.delta = parse(&key, v)?,
            "tau0" => self.tau0 = parse(&key, v)?,
            "tau0i" => self.tau0i = parse(&key, v)?,
            "phi0" => self.phi0 = parse(&key, v)?,
            "rounds" => self.rounds = parse(&key, v)?,
            "probe-every" => {
                self.probe_every = if v == "auto" {
                    None
                } else {
                    Some(parse(&key, v)?)
                }
            }
            "n-instances" => self.n_instances = parse(&key, v)?,
            "base-seed" => self.base_seed = parse(&key, v)?,
            "init-radius" => self.init_radius = parse(&key, v)?,
            "target" => self.target = parse_list(&key, v)?,
            "sigma" => self.sigma = parse(&key, v)?,
            "output" => self.output = PathBuf::from(v),
            "parallel" => self.parallel = parse(&key, v)?,
            "per-instance" => self.per_instance = parse(&key, v)?,
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Fully resolved configuration in the key=value file format.
    pub fn to_text(&self) -> String {
        let target: Vec<String> = self.target.iter().map(|v| v.to_string()).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("scenario", self.scenario.name().into());
        kv("n-agents", self.n_agents.to_string());
        kv("dim", self.dim.to_string());
        kv("edge-prob", self.edge_prob.to_string());
        kv("gamma", self.gamma.to_string());
        kv("delta", self.delta.to_string());
        kv("tau0", self.tau0.to_string());
        kv("tau0i", self.tau0i.to_string());
        kv("phi0", self.phi0.to_string());
        kv("rounds", self.rounds.to_string());
        kv(
            "probe-every",
            self.probe_every.map_or("auto".into(), |p| p.to_string()),
        );
        kv("n-instances", self.n_instances.to_string());
        kv("base-seed", self.base_seed.to_string());
        kv("init-radius", self.init_radius.to_string());
        kv("target", target.join(","));
        kv("sigma", self.sigma.to_string());
        kv("output", self.output.display().to_string());
        kv("parallel", self.parallel.to_string());
        kv("per-instance", self.per_instance.to_string());
        out
    }

    /// Dimension of the decision variable for the chosen scenario.
    pub fn effective_dim(&self) -> usize {
        match self.scenario {
            ScenarioKind::Personalized => self.dim,
            ScenarioKind::SourceSeeking => self.target.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_agents == 0 {
            return bad("n-agents must be positive".into());
        }
        if self.effective_dim() == 0 {
            return bad("dimension must be positive".into());
        }
        if self.scenario == ScenarioKind::SourceSeeking && self.dim != self.target.len() {
            return bad(format!(
                "dim = {} but target has {} coordinates",
                self.dim,
                self.target.len()
            ));
        }
        if !(self.edge_prob > 0.0 && self.edge_prob <= 1.0) {
            return Err(Error::InvalidProbability(self.edge_prob));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if self.tau0 < 3 || self.tau0i < 2 {
            return bad("tau0 must be >= 3 and tau0i >= 2".into());
        }
        if !self.phi0.is_finite() {
            return bad("phi0 must be finite".into());
        }
        if self.probe_every == Some(0) {
            return bad("probe-every must be positive".into());
        }
        if self.n_instances == 0 {
            return bad("n-instances must be positive".into());
        }
        if !(self.init_radius.is_finite() && self.init_radius >= 0.0) {
            return bad("init-radius must be nonnegative".into());
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad("sigma must be positive".into());
        }
        Ok(())
    }
}
