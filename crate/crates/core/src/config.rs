//! Experiment configuration.
//!
//! The primary format is flat `key = value` text with `#` comments:
//!
//! ```text
//! graph.kind   = lps
//! graph.params = 5 29
//! lambda       = 0.95
//! policy       = nbrw-pod
//! d            = 2
//! T            = 20
//! dt           = 0.1
//! B            = 16
//! init         = empty
//! seed         = 1
//! ```
//!
//! A flat JSON object with the same keys is accepted too.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::engine::InitialCondition;
use crate::error::{Error, Result};
use crate::graph::{self, Graph};
use crate::policy::PolicyKind;

pub const KEYS: &[&str] =
    &["graph.kind", "graph.params", "lambda", "policy", "d", "reset_period", "T", "dt", "B", "init", "seed"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Cycle { n: usize },
    Torus { dims: Vec<usize> },
    Lps { p: u64, q: u64 },
    RandomRegular { n: usize, k: usize, seed: u64 },
    File { path: PathBuf },
}

impl GraphSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GraphSpec::Cycle { .. } => "cycle",
            GraphSpec::Torus { .. } => "torus",
            GraphSpec::Lps { .. } => "lps",
            GraphSpec::RandomRegular { .. } => "random-regular",
            GraphSpec::File { .. } => "file",
        }
    }

    pub fn params(&self) -> String {
        match self {
            GraphSpec::Cycle { n } => n.to_string(),
            GraphSpec::Torus { dims } => dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "),
            GraphSpec::Lps { p, q } => format!("{p} {q}"),
            GraphSpec::RandomRegular { n, k, seed } => format!("{n} {k} {seed}"),
            GraphSpec::File { path } => path.display().to_string(),
        }
    }

    pub fn parse(kind: &str, params: &str) -> Result<Self> {
        let bad = |message: String| Error::InvalidConfig { key: "graph.params".into(), message };
        let ints = || -> Result<Vec<u64>> {
            params
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<u64>().map_err(|_| bad(format!("`{s}` is not a non-negative integer"))))
                .collect()
        };
        let spec = match kind {
            "cycle" => match ints()?[..] {
                [n] => GraphSpec::Cycle { n: n as usize },
                _ => return Err(bad("cycle expects `n`".into())),
            },
            "torus" => {
                let dims: Vec<usize> = ints()?.into_iter().map(|d| d as usize).collect();
                if dims.is_empty() {
                    return Err(bad("torus expects one or more side lengths".into()));
                }
                GraphSpec::Torus { dims }
            }
            "lps" => match ints()?[..] {
                [p, q] => GraphSpec::Lps { p, q },
                _ => return Err(bad("lps expects `p q`".into())),
            },
            "random-regular" => match ints()?[..] {
                [n, k] => GraphSpec::RandomRegular { n: n as usize, k: k as usize, seed: 1 },
                [n, k, seed] => GraphSpec::RandomRegular { n: n as usize, k: k as usize, seed },
                _ => return Err(bad("random-regular expects `n k [seed]`".into())),
            },
            "file" if !params.trim().is_empty() => GraphSpec::File { path: PathBuf::from(params.trim()) },
            "file" => return Err(bad("file expects a path".into())),
            other => {
                return Err(Error::InvalidConfig {
                    key: "graph.kind".into(),
                    message: format!("unknown graph kind `{other}`"),
                })
            }
        };
        Ok(spec)
    }

    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Cycle { n } => graph::build_cycle(*n),
            GraphSpec::Torus { dims } => graph::build_torus(dims),
            GraphSpec::Lps { p, q } => graph::build_lps(*p, *q),
            GraphSpec::RandomRegular { n, k, seed } => graph::build_random_regular(*n, *k, *seed),
            GraphSpec::File { path } => graph::read_edge_list(path),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind(), self.params())
    }
}

impl InitialCondition {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |message: String| Error::InvalidConfig { key: "init".into(), message };
        let s = s.trim();
        if s == "empty" {
            return Ok(InitialCondition::Empty);
        }
        if let Some(c) = s.strip_prefix("constant:") {
            let c = c.trim().parse().map_err(|_| bad(format!("bad constant `{c}`")))?;
            return Ok(InitialCondition::Constant(c));
        }
        if let Some(list) = s.strip_prefix("explicit:") {
            let v = list
                .split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|_| bad(format!("bad queue length `{x}`"))))
                .collect::<Result<Vec<_>>>()?;
            return Ok(InitialCondition::Explicit(v));
        }
        Err(bad(format!("expected `empty`, `constant:<c>` or `explicit:<q1,q2,...>`, got `{s}`")))
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Empty => f.write_str("empty"),
            InitialCondition::Constant(c) => write!(f, "constant:{c}"),
            InitialCondition::Explicit(v) => {
                let parts: Vec<String> = v.iter().map(|q| q.to_string()).collect();
                write!(f, "explicit:{}", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    /// Arrival rate per server.
    pub lambda: f64,
    pub policy: PolicyKind,
    /// Simulated time horizon T.
    pub horizon: f64,
    /// Sampling interval Δt.
    pub dt: f64,
    /// Truncation level B for recorded tail vectors.
    pub truncation: usize,
    pub init: InitialCondition,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: &str| Err(Error::InvalidConfig { key: key.into(), message: message.into() });
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad("lambda", "must lie in (0, 1)");
        }
        if !(self.horizon > 0.0) {
            return bad("T", "must be positive");
        }
        if !(self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if self.truncation < 1 {
            return bad("B", "must be at least 1");
        }
        self.policy.validate()
    }

    /// Parses `key = value` text, or a JSON object when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Self::from_json(text);
        }
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidConfig { key: key.into(), message: "duplicate key".into() });
            }
        }
        Self::from_map(map)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let obj: BTreeMap<String, serde_json::Value> = serde_json::from_str(text)?;
        let map = obj
            .into_iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Number(n) => n.to_string(),
                    other => {
                        return Err(Error::InvalidConfig { key: k, message: format!("unsupported value {other}") })
                    }
                };
                Ok((k, s))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::from_map(map)
    }

    fn from_map(mut map: BTreeMap<String, String>) -> Result<Self> {
        if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidConfig { key: key.clone(), message: "unknown key".into() });
        }
        let mut take = |key: &str| map.remove(key);
        fn num<T: std::str::FromStr>(key: &str, v: String) -> Result<T> {
            v.parse().map_err(|_| Error::InvalidConfig { key: key.into(), message: format!("cannot parse `{v}`") })
        }
        let missing = |key: &str| Error::InvalidConfig { key: key.into(), message: "missing required key".into() };

        let kind = take("graph.kind").ok_or_else(|| missing("graph.kind"))?;
        let params = take("graph.params").ok_or_else(|| missing("graph.params"))?;
        let graph = GraphSpec::parse(&kind, &params)?;
        let lambda: f64 = num("lambda", take("lambda").ok_or_else(|| missing("lambda"))?)?;
        let policy_name = take("policy").ok_or_else(|| missing("policy"))?;
        let d: usize = take("d").map(|v| num("d", v)).transpose()?.unwrap_or(2);
        let reset = take("reset_period").map(|v| num::<u64>("reset_period", v)).transpose()?;
        if policy_name == "nbrwr-pod" && reset.is_none() {
            return Err(missing("reset_period"));
        }
        let policy = PolicyKind::from_parts(&policy_name, d, reset.unwrap_or(u64::MAX))
            .map_err(|e| Error::InvalidConfig { key: "policy".into(), message: e.to_string() })?;
        let cfg = ExperimentConfig {
            graph,
            lambda,
            policy,
            horizon: take("T").map(|v| num("T", v)).transpose()?.unwrap_or(20.0),
            dt: take("dt").map(|v| num("dt", v)).transpose()?.unwrap_or(0.1),
            truncation: take("B").map(|v| num("B", v)).transpose()?.unwrap_or(16),
            init: take("init").map(|v| InitialCondition::parse(&v)).transpose()?.unwrap_or(InitialCondition::Empty),
            seed: take("seed").map(|v| num("seed", v)).transpose()?.unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical `key = value` text; parses back to an identical config.
    pub fn to_kv(&self) -> String {
        let mut lines = vec![
            format!("graph.kind = {}", self.graph.kind()),
            format!("graph.params = {}", self.graph.params()),
            format!("lambda = {}", self.lambda),
            format!("policy = {}", self.policy.name()),
        ];
        match self.policy {
            PolicyKind::NbrwPod { d } | PolicyKind::IidPod { d } => lines.push(format!("d = {d}")),
            PolicyKind::NbrwrPod { d, reset_period } => {
                lines.push(format!("d = {d}"));
                lines.push(format!("reset_period = {reset_period}"));
            }
            PolicyKind::RandomAssign | PolicyKind::Jsq => {}
        }
        lines.extend([
            format!("T = {}", self.horizon),
            format!("dt = {}", self.dt),
            format!("B = {}", self.truncation),
            format!("init = {}", self.init),
            format!("seed = {}", self.seed),
        ]);
        lines.join("\n") + "\n"
    }

    /// The same keys as a flat JSON object.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for line in self.to_kv().lines() {
            let (k, v) = line.split_once(" = ").expect("canonical line");
            obj.insert(k.to_string(), serde_json::Value::String(v.to_string()));
        }
        serde_json::Value::Object(obj)
    }
}
