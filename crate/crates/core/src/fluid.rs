//! Mean-field fluid limit of power-of-d dispatch.
//!
//! The tail vector x evolves as
//!
//! ```text
//! dx_i/dt = λ (x_{i-1}^d − x_i^d) − (x_i − x_{i+1}),   i ≥ 1,   x_0 ≡ 1,
//! ```
//!
//! truncated at level B with x_{B+1} := 0.

use serde::Serialize;

use crate::csv::{format_tail_csv, TailSeries};
use crate::engine::{InitialCondition, TailTrajectory};
use crate::error::{invalid, Error, Result};

/// Slack allowed on x_0 = 1 ≥ x_1 ≥ … ≥ 0 after each integration step.
pub const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidState {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub d: usize,
}

impl FluidState {
    pub fn new(x: Vec<f64>, lambda: f64, d: usize) -> Result<Self> {
        if x.len() < 2 {
            return Err(invalid("fluid state needs B >= 1"));
        }
        if d == 0 {
            return Err(invalid("d must be at least 1"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("arrival rate must be non-negative, got {lambda}")));
        }
        if x[0] != 1.0 {
            return Err(invalid("x_0 must equal 1"));
        }
        if let Some(i) = monotone_violation(&x) {
            return Err(invalid(format!("tail vector not monotone in [0,1] at index {i}")));
        }
        Ok(Self { x, lambda, d })
    }

    /// Tails of an initial condition, truncated at `b`.
    pub fn from_initial(init: &InitialCondition, lambda: f64, d: usize, b: usize) -> Result<Self> {
        let n = match init {
            InitialCondition::Explicit(v) => v.len(),
            _ => 1,
        };
        Self::new(init.tails(n, b)?.x, lambda, d)
    }

    pub fn truncation(&self) -> usize {
        self.x.len() - 1
    }

    /// Derivative with the truncation closure x_{B+1} = 0.
    pub fn rhs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        rhs_into(&self.x, self.lambda, self.d, 0.0, &mut out);
        out
    }
}

/// λ (x_{i-1}^d − x_i^d): rate at which queues grow from length i−1 to i.
pub fn arrival_term(x: &[f64], lambda: f64, d: usize, i: usize) -> f64 {
    let p = d as i32;
    lambda * (x[i - 1].powi(p) - x[i].powi(p))
}

/// x_i − x_{i+1}: rate at which queues of length exactly i complete a job.
/// `beyond` stands in for x_{B+1}.
pub fn service_term(x: &[f64], i: usize, beyond: f64) -> f64 {
    x[i] - x.get(i + 1).copied().unwrap_or(beyond)
}

/// Writes dx/dt into `out`, using `beyond` as the value of x_{B+1}.
pub fn rhs_into(x: &[f64], lambda: f64, d: usize, beyond: f64, out: &mut [f64]) {
    out[0] = 0.0;
    for i in 1..x.len() {
        out[i] = arrival_term(x, lambda, d, i) - service_term(x, i, beyond);
    }
}

fn monotone_violation(x: &[f64]) -> Option<usize> {
    x.iter()
        .enumerate()
        .find(|(i, &v)| {
            !(-MONOTONE_TOL..=1.0 + MONOTONE_TOL).contains(&v)
                || x.get(i + 1).is_some_and(|&next| next > v + MONOTONE_TOL)
        })
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub h: f64,
    pub lambda: f64,
    pub d: usize,
}

impl FluidTrajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has the initial time")
    }

    pub fn truncation(&self) -> usize {
        self.states[0].len() - 1
    }

    /// Linear interpolation between integration nodes.
    pub fn at(&self, t: f64) -> Option<Vec<f64>> {
        interpolate(&self.times, &self.states, t)
    }

    /// Samples at 0, dt, 2dt, … ≤ T in the simulator's CSV layout.
    pub fn to_csv(&self, dt: f64) -> String {
        let last = (self.final_time() / dt + 1e-9).floor() as usize;
        let samples: Vec<(f64, Vec<f64>)> = (0..=last)
            .map(|m| {
                let t = m as f64 * dt;
                (t, self.at(t).expect("sample inside the integrated range"))
            })
            .collect();
        let rows: Vec<(f64, &[f64])> = samples.iter().map(|(t, x)| (*t, x.as_slice())).collect();
        format_tail_csv(self.truncation(), &rows)
    }
}

/// Piecewise-linear interpolation of `rows` over increasing `times`;
/// `None` outside `[times[0], times[last]]` (with 1e-9 slack).
pub fn interpolate(times: &[f64], rows: &[Vec<f64>], t: f64) -> Option<Vec<f64>> {
    let (&first, &last) = (times.first()?, times.last()?);
    if t < first - 1e-9 || t > last + 1e-9 {
        return None;
    }
    let t = t.clamp(first, last);
    let j = times.partition_point(|&s| s <= t);
    if j == 0 {
        return Some(rows[0].clone());
    }
    if j == times.len() || times[j - 1] == t {
        return Some(rows[j - 1].clone());
    }
    let (t0, t1) = (times[j - 1], times[j]);
    let w = (t - t0) / (t1 - t0);
    Some(rows[j - 1].iter().zip(&rows[j]).map(|(a, b)| a + w * (b - a)).collect())
}

/// Classical RK4 with fixed step `h`; a final partial step lands on `horizon`.
pub fn integrate(x0: &FluidState, horizon: f64, h: f64) -> Result<FluidTrajectory> {
    if !(h > 0.0 && horizon >= 0.0) {
        return Err(invalid("step size must be positive and horizon non-negative"));
    }
    let (lambda, d) = (x0.lambda, x0.d);
    let len = x0.x.len();
    let full_steps = (horizon / h + 1e-9).floor() as usize;
    let mut times = Vec::with_capacity(full_steps + 2);
    let mut states = Vec::with_capacity(full_steps + 2);
    times.push(0.0);
    states.push(x0.x.clone());

    let mut k1 = vec![0.0; len];
    let mut k2 = vec![0.0; len];
    let mut k3 = vec![0.0; len];
    let mut k4 = vec![0.0; len];
    let mut tmp = vec![0.0; len];
    let mut x = x0.x.clone();
    let mut step = 0usize;
    loop {
        let t = times[step];
        let target = if step < full_steps { (step + 1) as f64 * h } else { horizon };
        let dt = target - t;
        if dt <= 1e-12 * h.max(1.0) {
            break;
        }
        rhs_into(&x, lambda, d, 0.0, &mut k1);
        axpy(&x, 0.5 * dt, &k1, &mut tmp);
        rhs_into(&tmp, lambda, d, 0.0, &mut k2);
        axpy(&x, 0.5 * dt, &k2, &mut tmp);
        rhs_into(&tmp, lambda, d, 0.0, &mut k3);
        axpy(&x, dt, &k3, &mut tmp);
        rhs_into(&tmp, lambda, d, 0.0, &mut k4);
        for i in 0..len {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        step += 1;
        if let Some(i) = monotone_violation(&x) {
            return Err(Error::NumericalFailure {
                message: format!("fluid state left the monotone region at index {i} on step {step}"),
                best_estimate: x[i],
            });
        }
        times.push(target);
        states.push(x.clone());
        if step > full_steps {
            break;
        }
    }
    Ok(FluidTrajectory { times, states, h, lambda, d })
}

fn axpy(x: &[f64], a: f64, y: &[f64], out: &mut [f64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

/// Equilibrium x̂_0 = 1, x̂_i = λ x̂_{i−1}^d, truncated at `b`.
pub fn fixed_point(lambda: f64, d: usize, b: usize) -> Result<FluidState> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("fixed point needs 0 < lambda < 1, got {lambda}")));
    }
    if d == 0 || b == 0 {
        return Err(invalid("fixed point needs d >= 1 and B >= 1"));
    }
    let mut x: Vec<f64> = Vec::with_capacity(b + 1);
    x.push(1.0);
    for i in 1..=b {
        x.push(lambda * x[i - 1].powi(d as i32));
    }
    FluidState::new(x, lambda, d)
}

/// max_i |dx_i/dt| at the equilibrium, with x_{B+1} set to its exact
/// value λ x̂_B^d rather than the truncation closure.
pub fn fixed_point_residual(lambda: f64, d: usize, b: usize) -> Result<f64> {
    let fp = fixed_point(lambda, d, b)?;
    let beyond = lambda * fp.x[b].powi(d as i32);
    let mut out = vec![0.0; b + 1];
    rhs_into(&fp.x, lambda, d, beyond, &mut out);
    Ok(out.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Σ_{i=1..B} |a_i − b_i|.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "truncation mismatch: B = {} vs B = {}",
            a.len().saturating_sub(1),
            b.len().saturating_sub(1)
        )));
    }
    Ok(a.iter().zip(b).skip(1).map(|(x, y)| (x - y).abs()).sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationPoint {
    pub t: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub sup_l1: f64,
    pub final_l1: f64,
    pub per_time: Vec<DeviationPoint>,
}

/// ℓ1 distance at each sample instant of `(times, rows)` to the linearly
/// interpolated reference path.
pub fn deviation_report(
    times: &[f64],
    rows: &[Vec<f64>],
    ref_times: &[f64],
    ref_rows: &[Vec<f64>],
) -> Result<DeviationReport> {
    if times.is_empty() || ref_times.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    if rows[0].len() != ref_rows[0].len() {
        return Err(Error::InvalidInput(format!(
            "truncation mismatch: B = {} vs B = {}",
            rows[0].len() - 1,
            ref_rows[0].len() - 1
        )));
    }
    let per_time = times
        .iter()
        .zip(rows)
        .map(|(&t, x)| {
            let y = interpolate(ref_times, ref_rows, t).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "reference path covers [{}, {}] but a sample is at t = {t}",
                    ref_times[0],
                    ref_times[ref_times.len() - 1]
                ))
            })?;
            Ok(DeviationPoint { t, l1: l1_distance(x, &y)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_l1 = per_time.iter().map(|p| p.l1).fold(0.0, f64::max);
    let final_l1 = per_time.last().map_or(0.0, |p| p.l1);
    Ok(DeviationReport { sup_l1, final_l1, per_time })
}

/// sup over the trajectory's sample instants of ‖X(t) − x(t)‖₁.
pub fn sup_deviation(traj: &TailTrajectory, fluid: &FluidTrajectory) -> Result<f64> {
    let rows: Vec<Vec<f64>> = traj.tails.iter().map(|t| t.x.clone()).collect();
    Ok(deviation_report(&traj.times, &rows, &fluid.times, &fluid.states)?.sup_l1)
}

/// Deviation between two CSV tail paths, interpolating `reference` at the
/// sample times of `sample`.
pub fn compare_series(sample: &TailSeries, reference: &TailSeries) -> Result<DeviationReport> {
    deviation_report(&sample.times, &sample.rows, &reference.times, &reference.rows)
}
