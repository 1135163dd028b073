//! Dispatch policies: which server an arriving job joins.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::walker::WalkerEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Shortest of the d walker positions; walkers step after every dispatch.
    NbrwPod { d: usize },
    /// As `NbrwPod`, with the walkers redrawn uniformly every `reset_period` dispatches.
    NbrwrPod { d: usize, reset_period: u64 },
    /// Shortest of d servers drawn uniformly with replacement.
    IidPod { d: usize },
    RandomAssign,
    Jsq,
}

impl PolicyKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PolicyKind::NbrwPod { d } | PolicyKind::IidPod { d } if d == 0 => {
                Err(invalid("policy needs d >= 1"))
            }
            PolicyKind::NbrwrPod { d, reset_period } if d == 0 || reset_period == 0 => {
                Err(invalid("nbrwr-pod needs d >= 1 and reset_period >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Number of sampled candidates, where that is meaningful.
    pub fn d(&self) -> Option<usize> {
        match *self {
            PolicyKind::NbrwPod { d } | PolicyKind::NbrwrPod { d, .. } | PolicyKind::IidPod { d } => {
                Some(d)
            }
            PolicyKind::RandomAssign => Some(1),
            PolicyKind::Jsq => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::NbrwPod { .. } => "nbrw-pod",
            PolicyKind::NbrwrPod { .. } => "nbrwr-pod",
            PolicyKind::IidPod { .. } => "iid-pod",
            PolicyKind::RandomAssign => "random",
            PolicyKind::Jsq => "jsq",
        }
    }

    /// Builds a kind from its CLI name plus the `d` / `reset_period` flags.
    pub fn from_parts(name: &str, d: usize, reset_period: u64) -> Result<Self> {
        let kind = match name {
            "nbrw-pod" => PolicyKind::NbrwPod { d },
            "nbrwr-pod" => PolicyKind::NbrwrPod { d, reset_period },
            "iid-pod" => PolicyKind::IidPod { d },
            "random" => PolicyKind::RandomAssign,
            "jsq" => PolicyKind::Jsq,
            other => return Err(invalid(format!("unknown policy `{other}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    /// Accepts the bare CLI names with d = 2 and no resets.
    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::from_parts(s, 2, u64::MAX)
    }
}

/// Mutable dispatcher state owned by one simulation.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    ensemble: Option<WalkerEnsemble>,
    arrivals_since_reset: u64,
    candidates: Vec<usize>,
}

impl Policy {
    /// Walker variants draw their initial ensemble from `rng`.
    pub fn new<R: Rng + ?Sized>(kind: PolicyKind, g: &Graph, rng: &mut R) -> Result<Self> {
        kind.validate()?;
        let ensemble = match kind {
            PolicyKind::NbrwPod { d } | PolicyKind::NbrwrPod { d, .. } => {
                Some(WalkerEnsemble::init_uniform(g, d, rng)?)
            }
            _ => None,
        };
        Ok(Self { kind, ensemble, arrivals_since_reset: 0, candidates: Vec::new() })
    }

    /// Starts from a given walker ensemble instead of a random one.
    pub fn with_ensemble(kind: PolicyKind, ensemble: WalkerEnsemble) -> Result<Self> {
        kind.validate()?;
        match kind {
            PolicyKind::NbrwPod { d } | PolicyKind::NbrwrPod { d, .. } if d == ensemble.d() => {}
            _ => return Err(invalid("ensemble does not match policy kind")),
        }
        Ok(Self { kind, ensemble: Some(ensemble), arrivals_since_reset: 0, candidates: Vec::new() })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn ensemble(&self) -> Option<&WalkerEnsemble> {
        self.ensemble.as_ref()
    }

    /// Candidate multiset consulted by the most recent dispatch.
    pub fn last_candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn arrivals_since_reset(&self) -> u64 {
        self.arrivals_since_reset
    }

    /// Picks the server for one arriving job and advances policy state.
    ///
    /// Ties on the minimum queue length are broken uniformly over the
    /// tied candidate positions.
    pub fn dispatch<R: Rng + ?Sized>(&mut self, queues: &[u32], g: &Graph, rng: &mut R) -> Result<usize> {
        let n = queues.len();
        if n == 0 {
            return Err(Error::InvalidState("no servers".into()));
        }
        match self.kind {
            PolicyKind::NbrwPod { .. } | PolicyKind::NbrwrPod { .. } => {
                if n != g.n() {
                    return Err(Error::InvalidState(format!(
                        "{n} queues but the graph has {} vertices",
                        g.n()
                    )));
                }
                let ens = self.ensemble.as_mut().expect("walker policy owns an ensemble");
                self.candidates.clear();
                self.candidates.extend(ens.positions());
                let server = argmin_uniform(&self.candidates, queues, rng);
                ens.step(g, rng);
                if let PolicyKind::NbrwrPod { d, reset_period } = self.kind {
                    self.arrivals_since_reset += 1;
                    if self.arrivals_since_reset >= reset_period {
                        *ens = WalkerEnsemble::init_uniform(g, d, rng)?;
                        self.arrivals_since_reset = 0;
                    }
                }
                Ok(server)
            }
            PolicyKind::IidPod { d } => {
                self.candidates.clear();
                self.candidates.extend((0..d).map(|_| rng.gen_range(0..n)));
                Ok(argmin_uniform(&self.candidates, queues, rng))
            }
            PolicyKind::RandomAssign => {
                let s = rng.gen_range(0..n);
                self.candidates.clear();
                self.candidates.push(s);
                Ok(s)
            }
            PolicyKind::Jsq => {
                let min = *queues.iter().min().expect("non-empty");
                let ties = queues.iter().filter(|&&q| q == min).count();
                let pick = if ties == 1 { 0 } else { rng.gen_range(0..ties) };
                let server = queues
                    .iter()
                    .enumerate()
                    .filter(|(_, &q)| q == min)
                    .nth(pick)
                    .map(|(i, _)| i)
                    .expect("pick < ties");
                self.candidates.clear();
                Ok(server)
            }
        }
    }
}

/// Candidate with the smallest queue; uniform over tied positions.
/// Draws from `rng` only when there is a tie.
fn argmin_uniform<R: Rng + ?Sized>(candidates: &[usize], queues: &[u32], rng: &mut R) -> usize {
    let min = candidates.iter().map(|&c| queues[c]).min().expect("at least one candidate");
    let ties = candidates.iter().filter(|&&c| queues[c] == min).count();
    let pick = if ties == 1 { 0 } else { rng.gen_range(0..ties) };
    *candidates.iter().filter(|&&c| queues[c] == min).nth(pick).expect("pick < ties")
}

/// Law of the selected server's load under i.i.d. power-of-d.
///
/// Entry `i` (for `i < B`) is `x_i^d − x_{i+1}^d`, the probability of
/// joining a queue of length exactly `i`; the last entry is `x_B^d`, the
/// mass at lengths ≥ B.
pub fn selection_tail_law(d: usize, tails: &[f64]) -> Vec<f64> {
    let pow = |x: f64| x.powi(d as i32);
    let mut law: Vec<f64> = tails.windows(2).map(|w| pow(w[0]) - pow(w[1])).collect();
    law.push(tails.last().map_or(0.0, |&x| pow(x)));
    law
}
