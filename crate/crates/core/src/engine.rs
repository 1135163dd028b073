//! Uniformized continuous-time queueing dynamics.
//!
//! The n-server system is driven by one global Poisson clock of rate
//! (1+λ)n. At each tick a fair-weighted coin decides between an arrival
//! (probability λ/(1+λ)), routed by the dispatch policy, and a potential
//! service at a uniformly chosen server, which is wasted if that server is
//! idle.
//!
//! Random draws per event come from a single `ChaCha8Rng` stream in this
//! order: holding time, event coin, then either the policy's draws or the
//! service location. Walker initialization draws precede the first event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::policy::{Policy, PolicyKind};

pub const RNG_NAME: &str = "ChaCha8Rng";

/// Fraction of servers with queue length ≥ i, for i = 0..=B.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailVector {
    pub x: Vec<f64>,
    /// Some queue was longer than B when this was taken.
    pub overflow: bool,
}

impl TailVector {
    pub fn truncation(&self) -> usize {
        self.x.len() - 1
    }

    /// Checks x_0 = 1 and 1 ≥ x_i ≥ x_{i+1} ≥ 0.
    pub fn is_valid(&self) -> bool {
        self.x.first() == Some(&1.0)
            && self.x.windows(2).all(|w| w[0] >= w[1])
            && self.x.iter().all(|&v| (0.0..=1.0).contains(&v))
    }
}

pub fn tails(queues: &[u32], b: usize) -> TailVector {
    let n = queues.len() as f64;
    let mut counts = vec![0u64; b + 2];
    for &q in queues {
        counts[(q as usize).min(b + 1)] += 1;
    }
    // suffix sums turn level counts into ≥-counts
    for i in (0..=b).rev() {
        counts[i] += counts[i + 1];
    }
    TailVector {
        x: counts[..=b].iter().map(|&c| c as f64 / n).collect(),
        overflow: counts[b + 1] > 0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialCondition {
    Empty,
    Constant(u32),
    Explicit(Vec<u32>),
}

impl InitialCondition {
    pub fn queues(&self, n: usize) -> Result<Vec<u32>> {
        match self {
            InitialCondition::Empty => Ok(vec![0; n]),
            InitialCondition::Constant(c) => Ok(vec![*c; n]),
            InitialCondition::Explicit(v) if v.len() == n => Ok(v.clone()),
            InitialCondition::Explicit(v) => Err(Error::InvalidConfig {
                key: "init".into(),
                message: format!("explicit vector has {} entries for {n} servers", v.len()),
            }),
        }
    }

    /// Tail vector this condition induces; for explicit vectors it is exact.
    pub fn tails(&self, n: usize, b: usize) -> Result<TailVector> {
        Ok(tails(&self.queues(n)?, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Arrival { server: usize },
    Service { server: usize, busy: bool },
}

/// Hooks called while the system evolves.
pub trait Observer {
    /// The state was constant on `[from, to)`.
    fn dwell(&mut self, _sys: &QueueSystem, _from: f64, _to: f64) {}
    /// `ev` has just been applied at `sys.clock()`.
    fn event(&mut self, _sys: &QueueSystem, _ev: Event) {}
}

impl Observer for () {}

#[derive(Debug, Clone)]
pub struct QueueSystem {
    queues: Vec<u32>,
    /// `at_least[i]` = number of servers with queue ≥ i; grows on demand.
    at_least: Vec<u64>,
    total_jobs: u64,
    policy: Policy,
    clock: f64,
    pending: Option<f64>,
    rng: ChaCha8Rng,
    lambda: f64,
    event_count: u64,
    arrival_count: u64,
}

impl QueueSystem {
    pub fn new(g: &Graph, queues: Vec<u32>, kind: PolicyKind, lambda: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(invalid(format!("arrival rate per server must lie in [0, 1), got {lambda}")));
        }
        if queues.len() != g.n() {
            return Err(Error::InvalidConfig {
                key: "init".into(),
                message: format!("{} queues for a graph of {} vertices", queues.len(), g.n()),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = Policy::new(kind, g, &mut rng)?;
        let top = queues.iter().copied().max().unwrap_or(0) as usize;
        let mut at_least = vec![0u64; top + 2];
        for &q in &queues {
            at_least[q as usize] += 1;
        }
        for i in (0..=top).rev() {
            at_least[i] += at_least[i + 1];
        }
        let total_jobs = queues.iter().map(|&q| q as u64).sum();
        Ok(Self {
            queues,
            at_least,
            total_jobs,
            policy,
            clock: 0.0,
            pending: None,
            rng,
            lambda,
            event_count: 0,
            arrival_count: 0,
        })
    }

    pub fn from_config(cfg: &ExperimentConfig, g: &Graph) -> Result<Self> {
        Self::new(g, cfg.init.queues(g.n())?, cfg.policy, cfg.lambda, cfg.seed)
    }

    pub fn n(&self) -> usize {
        self.queues.len()
    }

    pub fn queues(&self) -> &[u32] {
        &self.queues
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn event_count(&self) -> u64 {
        self.event_count
    }

    pub fn arrival_count(&self) -> u64 {
        self.arrival_count
    }

    pub fn total_jobs(&self) -> u64 {
        self.total_jobs
    }

    /// Servers with queue length ≥ i.
    #[inline]
    pub fn count_at_least(&self, i: usize) -> u64 {
        self.at_least.get(i).copied().unwrap_or(0)
    }

    pub fn tails(&self, b: usize) -> TailVector {
        let n = self.n() as f64;
        TailVector {
            x: (0..=b).map(|i| self.count_at_least(i) as f64 / n).collect(),
            overflow: self.count_at_least(b + 1) > 0,
        }
    }

    /// Evolves the system up to time `until`, reporting to `obs`.
    ///
    /// The next event time is kept across calls, so splitting a horizon
    /// into several calls gives the same path as one call.
    pub fn advance<O: Observer + ?Sized>(&mut self, g: &Graph, until: f64, obs: &mut O) -> Result<()> {
        let rate = (1.0 + self.lambda) * self.n() as f64;
        let p_arrival = self.lambda / (1.0 + self.lambda);
        while self.clock < until {
            let next = match self.pending {
                Some(t) => t,
                None => {
                    let hold: f64 = self.rng.sample(Exp1);
                    self.clock + hold / rate
                }
            };
            if next > until {
                self.pending = Some(next);
                obs.dwell(self, self.clock, until);
                self.clock = until;
                break;
            }
            self.pending = None;
            obs.dwell(self, self.clock, next);
            self.clock = next;
            let ev = if self.rng.gen::<f64>() < p_arrival {
                self.arrive(g)?
            } else {
                self.serve()
            };
            self.event_count += 1;
            obs.event(self, ev);
        }
        Ok(())
    }

    fn arrive(&mut self, g: &Graph) -> Result<Event> {
        let server = self.policy.dispatch(&self.queues, g, &mut self.rng)?;
        let q = self.queues[server].checked_add(1).ok_or_else(|| {
            Error::SimulationAbort(format!("queue at server {server} overflowed u32"))
        })?;
        self.queues[server] = q;
        let q = q as usize;
        if q + 1 >= self.at_least.len() {
            self.at_least.resize(q + 2, 0);
        }
        self.at_least[q] += 1;
        self.total_jobs += 1;
        self.arrival_count += 1;
        Ok(Event::Arrival { server })
    }

    fn serve(&mut self) -> Event {
        let server = self.rng.gen_range(0..self.n());
        let q = self.queues[server];
        if q > 0 {
            self.at_least[q as usize] -= 1;
            self.queues[server] = q - 1;
            self.total_jobs -= 1;
        }
        Event::Service { server, busy: q > 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub n: usize,
    pub lambda: f64,
    pub policy: PolicyKind,
    pub seed: Option<u64>,
    pub rng: String,
    pub horizon: f64,
    pub dt: f64,
    pub truncation: usize,
    pub events: u64,
}

/// Tail vectors sampled at 0, Δt, 2Δt, …
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTrajectory {
    pub times: Vec<f64>,
    pub tails: Vec<TailVector>,
    pub meta: TrajectoryMeta,
}

impl TailTrajectory {
    pub fn overflowed(&self) -> bool {
        self.tails.iter().any(|t| t.overflow)
    }

    /// `t,x1,...,xB` header and one row per sample.
    pub fn to_csv(&self) -> String {
        let rows: Vec<(f64, &[f64])> =
            self.times.iter().zip(&self.tails).map(|(&t, x)| (t, &x.x[..])).collect();
        crate::csv::format_tail_csv(self.meta.truncation, &rows)
    }
}

struct Sampler {
    start: f64,
    dt: f64,
    next: usize,
    last: usize,
    b: usize,
    times: Vec<f64>,
    tails: Vec<TailVector>,
}

impl Sampler {
    fn instant(&self, m: usize) -> f64 {
        self.start + m as f64 * self.dt
    }

    fn record_before(&mut self, sys: &QueueSystem, to: f64, inclusive: bool) {
        while self.next <= self.last {
            let s = self.instant(self.next);
            if s < to || (inclusive && s <= to) {
                self.times.push(self.next as f64 * self.dt);
                self.tails.push(sys.tails(self.b));
                self.next += 1;
            } else {
                break;
            }
        }
    }
}

impl Observer for Sampler {
    fn dwell(&mut self, sys: &QueueSystem, _from: f64, to: f64) {
        self.record_before(sys, to, false);
    }
}

/// Simulates `[0, horizon]` from the system's current clock, recording the
/// tail vector (truncated at `b`) at every multiple of `dt`. Each sample is
/// the state after the last event at or before the sample instant.
pub fn run(sys: &mut QueueSystem, g: &Graph, horizon: f64, dt: f64, b: usize) -> Result<TailTrajectory> {
    if !(horizon > 0.0 && dt > 0.0) {
        return Err(invalid("horizon and sample interval must be positive"));
    }
    if b == 0 {
        return Err(invalid("truncation B must be at least 1"));
    }
    let last = (horizon / dt + 1e-9).floor() as usize;
    let start = sys.clock();
    let mut sampler =
        Sampler { start, dt, next: 0, last, b, times: Vec::with_capacity(last + 1), tails: Vec::with_capacity(last + 1) };
    sys.advance(g, start + horizon, &mut sampler)?;
    sampler.record_before(sys, start + horizon, true);
    Ok(TailTrajectory {
        times: sampler.times,
        tails: sampler.tails,
        meta: TrajectoryMeta {
            n: sys.n(),
            lambda: sys.lambda(),
            policy: sys.policy().kind(),
            seed: None,
            rng: RNG_NAME.into(),
            horizon,
            dt,
            truncation: b,
            events: sys.event_count(),
        },
    })
}

/// Runs one configured experiment to its horizon.
pub fn simulate(cfg: &ExperimentConfig, g: &Graph) -> Result<TailTrajectory> {
    let mut sys = QueueSystem::from_config(cfg, g)?;
    let mut traj = run(&mut sys, g, cfg.horizon, cfg.dt, cfg.truncation)?;
    traj.meta.seed = Some(cfg.seed);
    Ok(traj)
}

/// Long-run averages of one run over `(burn_in, horizon]`.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryEstimate {
    /// Time-weighted average tail vector.
    pub tails: TailVector,
    /// Tail vector averaged over the states seen by arriving jobs.
    pub arrival_tails: Vec<f64>,
    /// Time-average jobs per server (untruncated).
    pub mean_queue: f64,
    pub arrivals: u64,
}

struct Averager {
    burn_in: f64,
    horizon: f64,
    b: usize,
    area: Vec<f64>,
    jobs_area: f64,
    arrival_sum: Vec<f64>,
    arrivals: u64,
    overflow: bool,
}

impl Observer for Averager {
    fn dwell(&mut self, sys: &QueueSystem, from: f64, to: f64) {
        let w = to.min(self.horizon) - from.max(self.burn_in);
        if w <= 0.0 {
            return;
        }
        for (i, a) in self.area.iter_mut().enumerate() {
            *a += sys.count_at_least(i) as f64 * w;
        }
        self.jobs_area += sys.total_jobs() as f64 * w;
        self.overflow |= sys.count_at_least(self.b + 1) > 0;
    }

    fn event(&mut self, sys: &QueueSystem, ev: Event) {
        if let Event::Arrival { server } = ev {
            if sys.clock() > self.burn_in {
                // undo the arrival to see what the job saw
                let joined = sys.queues()[server] as usize;
                for (i, s) in self.arrival_sum.iter_mut().enumerate() {
                    *s += (sys.count_at_least(i) - u64::from(i == joined)) as f64;
                }
                self.arrivals += 1;
            }
        }
    }
}

/// Time-weighted averages over `(burn_in, horizon]` for the configured run.
pub fn stationary_estimate(cfg: &ExperimentConfig, g: &Graph, burn_in: f64, horizon: f64) -> Result<StationaryEstimate> {
    if !(horizon > burn_in && burn_in >= 0.0) {
        return Err(invalid(format!("need 0 <= burn_in < horizon, got {burn_in} and {horizon}")));
    }
    let b = cfg.truncation;
    let mut sys = QueueSystem::from_config(cfg, g)?;
    let mut avg = Averager {
        burn_in,
        horizon,
        b,
        area: vec![0.0; b + 1],
        jobs_area: 0.0,
        arrival_sum: vec![0.0; b + 1],
        arrivals: 0,
        overflow: false,
    };
    sys.advance(g, horizon, &mut avg)?;
    let n = sys.n() as f64;
    let span = (horizon - burn_in) * n;
    let mut x: Vec<f64> = avg.area.iter().map(|a| a / span).collect();
    x[0] = 1.0;
    let arrival_tails = if avg.arrivals > 0 {
        let mut v: Vec<f64> = avg.arrival_sum.iter().map(|s| s / (avg.arrivals as f64 * n)).collect();
        v[0] = 1.0;
        v
    } else {
        vec![f64::NAN; b + 1]
    };
    Ok(StationaryEstimate {
        tails: TailVector { x, overflow: avg.overflow },
        arrival_tails,
        mean_queue: avg.jobs_area / span,
        arrivals: avg.arrivals,
    })
}

/// Seed-averaged stationary statistics with standard errors of the mean.
#[derive(Debug, Clone, Serialize)]
pub struct StationarySummary {
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mean_queue: f64,
    pub mean_queue_stderr: f64,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<StationaryEstimate>,
}

pub fn stationary_over_seeds(
    cfg: &ExperimentConfig,
    g: &Graph,
    seeds: &[u64],
    burn_in: f64,
    horizon: f64,
) -> Result<StationarySummary> {
    if seeds.is_empty() {
        return Err(invalid("at least one seed is required"));
    }
    let per_seed = seeds
        .par_iter()
        .map(|&seed| stationary_estimate(&ExperimentConfig { seed, ..cfg.clone() }, g, burn_in, horizon))
        .collect::<Result<Vec<_>>>()?;
    let b = cfg.truncation;
    let columns: Vec<Vec<f64>> =
        (0..=b).map(|i| per_seed.iter().map(|e| e.tails.x[i]).collect()).collect();
    let (estimate, stderr) = columns.iter().map(|c| mean_and_stderr(c)).unzip();
    let (mean_queue, mean_queue_stderr) =
        mean_and_stderr(&per_seed.iter().map(|e| e.mean_queue).collect::<Vec<_>>());
    Ok(StationarySummary { estimate, stderr, mean_queue, mean_queue_stderr, seeds: seeds.to_vec(), per_seed })
}

/// Sample mean and standard error (0 for a single sample).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
