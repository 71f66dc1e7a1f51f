//! Problem instance and cost model.
//!
//! A [`Scenario`] holds `N` tasks and `M + 1` processors, where processor `0`
//! is the device's own CPU and processors `1..=M` are computational access
//! points (CAPs). An [`Assignment`] places every task on exactly one
//! processor. Latency is the largest per-processor busy time (tasks on one
//! processor are served back to back), energy is what the device spends on
//! local computation plus radio transmit/receive, and the weighted objective
//! mixes the two.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A unit of work: input size, output size and required CPU cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub alpha_bits: f64,
    pub beta_bits: f64,
    pub gamma_cycles: f64,
}

impl Task {
    pub fn new(alpha_bits: f64, beta_bits: f64, gamma_cycles: f64) -> Result<Self> {
        let task = Task {
            alpha_bits,
            beta_bits,
            gamma_cycles,
        };
        task.check()?;
        Ok(task)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_bits", self.alpha_bits),
            ("beta_bits", self.beta_bits),
            ("gamma_cycles", self.gamma_cycles),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "task {name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Link throughput in bits per second.
///
/// The local CPU has no radio hop; its links are [`LinkRate::Infinite`] and
/// transfer times over them are exactly zero. Serialized as `null`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum LinkRate {
    Infinite,
    Finite(f64),
}

impl LinkRate {
    #[inline]
    pub fn transfer_time(self, bits: f64) -> f64 {
        match self {
            LinkRate::Infinite => 0.0,
            LinkRate::Finite(rate) => bits / rate,
        }
    }
}

impl From<Option<f64>> for LinkRate {
    fn from(v: Option<f64>) -> Self {
        v.map_or(LinkRate::Infinite, LinkRate::Finite)
    }
}

impl From<LinkRate> for Option<f64> {
    fn from(v: LinkRate) -> Self {
        match v {
            LinkRate::Infinite => None,
            LinkRate::Finite(r) => Some(r),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Processor {
    pub index: usize,
    /// CPU speed in cycles per second.
    pub rate_cps: f64,
    pub uplink_bps: LinkRate,
    pub downlink_bps: LinkRate,
}

impl Processor {
    pub fn local(rate_cps: f64) -> Self {
        Processor {
            index: 0,
            rate_cps,
            uplink_bps: LinkRate::Infinite,
            downlink_bps: LinkRate::Infinite,
        }
    }

    pub fn cap(index: usize, rate_cps: f64, uplink_bps: f64, downlink_bps: f64) -> Self {
        Processor {
            index,
            rate_cps,
            uplink_bps: LinkRate::Finite(uplink_bps),
            downlink_bps: LinkRate::Finite(downlink_bps),
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.rate_cps.is_finite() && self.rate_cps > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "processor {} rate_cps must be finite and > 0, got {}",
                self.index, self.rate_cps
            )));
        }
        for (name, link) in [("uplink_bps", self.uplink_bps), ("downlink_bps", self.downlink_bps)] {
            match (self.index, link) {
                (0, LinkRate::Infinite) => {}
                (0, LinkRate::Finite(_)) => {
                    return Err(Error::InvalidScenario(format!(
                        "processor 0 is the local CPU; its {name} must be null"
                    )))
                }
                (m, LinkRate::Infinite) => {
                    return Err(Error::InvalidScenario(format!(
                        "processor {m} {name} must be a finite rate, got null"
                    )))
                }
                (m, LinkRate::Finite(r)) => {
                    if !(r.is_finite() && r > 0.0) {
                        return Err(Error::InvalidScenario(format!(
                            "processor {m} {name} must be finite and > 0, got {r}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkDirection {
    Uplink,
    Downlink,
}

/// Radio channel between the device and one CAP.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkChannel {
    pub channel_gain: f64,
    /// Noise power in watts.
    pub noise_power: f64,
    pub direction: LinkDirection,
}

/// Spectral efficiency `log2(1 + P h / N0)` in bits/s/Hz; multiply by the
/// bandwidth to get a rate.
pub fn link_rate(channel: &LinkChannel, device_power: f64) -> Result<f64> {
    let LinkChannel {
        channel_gain,
        noise_power,
        ..
    } = *channel;
    if !(channel_gain > 0.0 && channel_gain.is_finite()) {
        return Err(Error::Domain(format!("channel gain must be > 0, got {channel_gain}")));
    }
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(Error::Domain(format!("noise power must be > 0, got {noise_power}")));
    }
    if !(device_power > 0.0 && device_power.is_finite()) {
        return Err(Error::Domain(format!("device power must be > 0, got {device_power}")));
    }
    let snr = channel_gain / noise_power;
    Ok((1.0 + device_power * snr).log2())
}

/// Device power draw in watts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerProfile {
    /// Local computation.
    pub p0_w: f64,
    /// Transmit.
    pub pt_w: f64,
    /// Receive.
    pub pr_w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub lambda_t: f64,
    pub lambda_e: f64,
}

impl Weights {
    pub fn new(lambda_t: f64, lambda_e: f64) -> Result<Self> {
        let w = Weights { lambda_t, lambda_e };
        w.check()?;
        Ok(w)
    }

    /// Weights with `lambda_e / lambda_t = 10^q`, normalized to sum to one.
    pub fn from_log_ratio(q: f64) -> Self {
        let ratio = 10f64.powf(q);
        Weights {
            lambda_t: 1.0 / (1.0 + ratio),
            lambda_e: ratio / (1.0 + ratio),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = self.lambda_t.is_finite()
            && self.lambda_e.is_finite()
            && self.lambda_t >= 0.0
            && self.lambda_e >= 0.0
            && self.lambda_t + self.lambda_e > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!(
                "weights must be >= 0 with positive sum, got lambda_t={} lambda_e={}",
                self.lambda_t, self.lambda_e
            )))
        }
    }
}

/// A complete problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub tasks: Vec<Task>,
    /// `processors[m].index == m`; entry 0 is the local CPU.
    pub processors: Vec<Processor>,
    pub power: PowerProfile,
    pub weights: Weights,
}

impl Scenario {
    pub fn new(
        tasks: Vec<Task>,
        processors: Vec<Processor>,
        power: PowerProfile,
        weights: Weights,
    ) -> Result<Self> {
        let s = Scenario {
            tasks,
            processors,
            power,
            weights,
        };
        s.check()?;
        Ok(s)
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    /// Number of tasks `N`.
    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// Number of CAPs `M` (processors excluding the local CPU).
    pub fn num_caps(&self) -> usize {
        self.processors.len().saturating_sub(1)
    }

    pub fn num_processors(&self) -> usize {
        self.processors.len()
    }

    /// Checks every type invariant; needed after deserialization.
    pub fn check(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::InvalidScenario("at least one task is required".into()));
        }
        if self.processors.is_empty() {
            return Err(Error::InvalidScenario(
                "at least the local processor (index 0) is required".into(),
            ));
        }
        for (pos, p) in self.processors.iter().enumerate() {
            if p.index != pos {
                return Err(Error::InvalidScenario(format!(
                    "processor indices must be contiguous from 0; position {pos} has index {}",
                    p.index
                )));
            }
            p.check()?;
        }
        for (n, t) in self.tasks.iter().enumerate() {
            t.check()
                .map_err(|e| Error::InvalidScenario(format!("task {n}: {e}")))?;
        }
        let PowerProfile { p0_w, pt_w, pr_w } = self.power;
        for (name, v) in [("p0_w", p0_w), ("pt_w", pt_w), ("pr_w", pr_w)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "power {name} must be finite and > 0, got {v}"
                )));
            }
        }
        self.weights.check()
    }

    pub fn with_weights(&self, weights: Weights) -> Scenario {
        Scenario {
            weights,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaskTimes {
    pub uplink: f64,
    pub downlink: f64,
    pub compute: f64,
}

impl TaskTimes {
    #[inline]
    pub fn total(&self) -> f64 {
        self.uplink + self.downlink + self.compute
    }
}

pub fn task_times(task: &Task, proc: &Processor) -> TaskTimes {
    TaskTimes {
        uplink: proc.uplink_bps.transfer_time(task.alpha_bits),
        downlink: proc.downlink_bps.transfer_time(task.beta_bits),
        compute: task.gamma_cycles / proc.rate_cps,
    }
}

/// One problem in an [`Assignment`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Dimensions {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// Row `task` does not contain exactly one 1.
    RowSum { task: usize, sum: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimensions { expected, found } => write!(
                f,
                "dimensions {}x{} do not match scenario {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::RowSum { task, sum } => {
                write!(f, "task {task} is placed on {sum} processors, expected exactly 1")
            }
        }
    }
}

/// Binary placement matrix, `N` rows by `M + 1` columns.
///
/// The matrix can hold any 0/1 pattern; [`validate`] decides whether it is a
/// feasible placement for a given scenario.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    tasks: usize,
    processors: usize,
    cells: Vec<bool>,
}

impl Assignment {
    pub fn zeros(tasks: usize, processors: usize) -> Self {
        Assignment {
            tasks,
            processors,
            cells: vec![false; tasks * processors],
        }
    }

    /// One-hot matrix with task `n` on processor `choices[n]`.
    ///
    /// Panics if a choice is not below `processors`.
    pub fn from_choices(choices: &[usize], processors: usize) -> Self {
        let mut a = Self::zeros(choices.len(), processors);
        for (n, &m) in choices.iter().enumerate() {
            assert!(m < processors, "choice {m} out of range for {processors} processors");
            a.set(n, m, true);
        }
        a
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let processors = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != processors) {
            return Err(Error::Argument("matrix rows have different lengths".into()));
        }
        let mut a = Self::zeros(rows.len(), processors);
        for (n, row) in rows.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => a.set(n, m, true),
                    _ => {
                        return Err(Error::Argument(format!(
                            "entry ({n}, {m}) is {v}; entries must be 0 or 1"
                        )))
                    }
                }
            }
        }
        Ok(a)
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks
    }

    pub fn num_processors(&self) -> usize {
        self.processors
    }

    #[inline]
    pub fn get(&self, task: usize, proc: usize) -> bool {
        self.cells[task * self.processors + proc]
    }

    #[inline]
    pub fn set(&mut self, task: usize, proc: usize, value: bool) {
        self.cells[task * self.processors + proc] = value;
    }

    fn row_sum(&self, task: usize) -> usize {
        let start = task * self.processors;
        self.cells[start..start + self.processors]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    /// Processor of each task, or `None` if some row is not one-hot.
    pub fn choices(&self) -> Option<Vec<usize>> {
        (0..self.tasks)
            .map(|n| {
                let row = &self.cells[n * self.processors..(n + 1) * self.processors];
                let mut hits = row.iter().enumerate().filter(|(_, &b)| b);
                match (hits.next(), hits.next()) {
                    (Some((m, _)), None) => Some(m),
                    _ => None,
                }
            })
            .collect()
    }

    /// Flattened 0/1 vector in processor-block order: all tasks for processor
    /// 0, then all tasks for processor 1, and so on.
    pub fn to_block_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.cells.len());
        for m in 0..self.processors {
            for n in 0..self.tasks {
                v.push(if self.get(n, m) { 1.0 } else { 0.0 });
            }
        }
        v
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.choices() {
            Some(choices) => {
                let parts: Vec<String> = choices
                    .iter()
                    .enumerate()
                    .map(|(n, m)| format!("{n}->{m}"))
                    .collect();
                write!(f, "{}", parts.join(" "))
            }
            None => write!(f, "<infeasible {}x{}>", self.tasks, self.processors),
        }
    }
}

/// Lists every row that is not one-hot, plus any dimension mismatch.
pub fn validate(assignment: &Assignment, scenario: &Scenario) -> std::result::Result<(), Vec<Violation>> {
    let expected = (scenario.num_tasks(), scenario.num_processors());
    let found = (assignment.num_tasks(), assignment.num_processors());
    if expected != found {
        return Err(vec![Violation::Dimensions { expected, found }]);
    }
    let violations: Vec<Violation> = (0..assignment.num_tasks())
        .filter_map(|n| {
            let sum = assignment.row_sum(n);
            (sum != 1).then_some(Violation::RowSum { task: n, sum })
        })
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

fn feasible_choices(assignment: &Assignment, scenario: &Scenario) -> Result<Vec<usize>> {
    validate(assignment, scenario).map_err(Error::Infeasible)?;
    Ok(assignment.choices().expect("validated rows are one-hot"))
}

pub fn cap_latency(assignment: &Assignment, scenario: &Scenario, m: usize) -> Result<f64> {
    let choices = feasible_choices(assignment, scenario)?;
    if m >= scenario.num_processors() {
        return Err(Error::Argument(format!(
            "processor {m} out of range 0..={}",
            scenario.num_caps()
        )));
    }
    Ok(Evaluator::new(scenario).processor_latencies(&choices)[m])
}

pub fn overall_latency(assignment: &Assignment, scenario: &Scenario) -> Result<f64> {
    let choices = feasible_choices(assignment, scenario)?;
    Ok(Evaluator::new(scenario).evaluate(&choices).latency)
}

pub fn local_energy(assignment: &Assignment, scenario: &Scenario) -> Result<f64> {
    let choices = feasible_choices(assignment, scenario)?;
    Ok(Evaluator::new(scenario).evaluate(&choices).local_energy)
}

pub fn offload_energy(assignment: &Assignment, scenario: &Scenario) -> Result<f64> {
    let choices = feasible_choices(assignment, scenario)?;
    Ok(Evaluator::new(scenario).evaluate(&choices).offload_energy)
}

pub fn total_energy(assignment: &Assignment, scenario: &Scenario) -> Result<f64> {
    let choices = feasible_choices(assignment, scenario)?;
    Ok(Evaluator::new(scenario).evaluate(&choices).energy())
}

pub fn weighted_objective(assignment: &Assignment, scenario: &Scenario) -> Result<f64> {
    let choices = feasible_choices(assignment, scenario)?;
    Ok(Evaluator::new(scenario).evaluate(&choices).objective)
}

/// Full breakdown of one assignment's cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub latency: f64,
    pub local_energy: f64,
    pub offload_energy: f64,
    pub objective: f64,
}

impl Evaluation {
    pub fn energy(&self) -> f64 {
        self.local_energy + self.offload_energy
    }
}

/// Running sums for a partial assignment, accumulated in task order.
///
/// Both full evaluation and branch-and-bound go through this type so that a
/// completed partial sum is bit-identical to [`Evaluator::evaluate`].
#[derive(Clone, Debug)]
pub struct PartialCost {
    pub latencies: Vec<f64>,
    pub local_compute: f64,
    pub uplink: f64,
    pub downlink: f64,
}

impl PartialCost {
    pub fn empty(processors: usize) -> Self {
        PartialCost {
            latencies: vec![0.0; processors],
            local_compute: 0.0,
            uplink: 0.0,
            downlink: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, times: &TaskTimes, proc: usize) {
        self.latencies[proc] += times.total();
        if proc == 0 {
            self.local_compute += times.compute;
        } else {
            self.uplink += times.uplink;
            self.downlink += times.downlink;
        }
    }

    pub fn max_latency(&self) -> f64 {
        self.latencies.iter().copied().fold(0.0, f64::max)
    }

    pub fn finish(&self, power: &PowerProfile, weights: &Weights) -> Evaluation {
        let latency = self.max_latency();
        let local_energy = power.p0_w * self.local_compute;
        let offload_energy = power.pt_w * self.uplink + power.pr_w * self.downlink;
        let energy = local_energy + offload_energy;
        Evaluation {
            latency,
            local_energy,
            offload_energy,
            objective: weights.lambda_t * latency + weights.lambda_e * energy,
        }
    }
}

/// Precomputed per-(task, processor) times for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    times: Vec<TaskTimes>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let times = scenario
            .tasks
            .iter()
            .flat_map(|t| scenario.processors.iter().map(move |p| task_times(t, p)))
            .collect();
        Evaluator { scenario, times }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    #[inline]
    pub fn times(&self, task: usize, proc: usize) -> &TaskTimes {
        &self.times[task * self.scenario.num_processors() + proc]
    }

    fn accumulate(&self, choices: &[usize]) -> PartialCost {
        debug_assert_eq!(choices.len(), self.scenario.num_tasks());
        let mut acc = PartialCost::empty(self.scenario.num_processors());
        for (n, &m) in choices.iter().enumerate() {
            acc.push(self.times(n, m), m);
        }
        acc
    }

    pub fn processor_latencies(&self, choices: &[usize]) -> Vec<f64> {
        self.accumulate(choices).latencies
    }

    /// Evaluates a placement given as one processor index per task.
    pub fn evaluate(&self, choices: &[usize]) -> Evaluation {
        self.accumulate(choices)
            .finish(&self.scenario.power, &self.scenario.weights)
    }

    pub fn objective(&self, choices: &[usize]) -> f64 {
        self.evaluate(choices).objective
    }
}
