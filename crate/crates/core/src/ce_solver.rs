//! Adaptive-sampling cross-entropy (ASCE) search over placements.
//!
//! The search keeps one Bernoulli probability per (task, processor) cell.
//! Each iteration draws `S` placements block by block so that every sample
//! puts each task on exactly one processor, keeps the `S_elite` cheapest,
//! refits the probabilities to the elite mean and blends the fit into the
//! previous probabilities with a learning rate.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Evaluator, Scenario};
use crate::parallel::{map_indices, Execution};
use crate::rng::sample_stream;

/// Bernoulli parameters, one per (task, processor) cell, stored block by
/// block: entries `m * N .. (m + 1) * N` belong to processor `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityIndicator {
    tasks: usize,
    processors: usize,
    probs: Vec<f64>,
}

impl ProbabilityIndicator {
    pub fn from_block_vector(tasks: usize, processors: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != tasks * processors {
            return Err(Error::Argument(format!(
                "indicator length {} does not match {tasks} tasks x {processors} processors",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Argument(format!("probability {p} outside [0, 1]")));
        }
        Ok(ProbabilityIndicator {
            tasks,
            processors,
            probs,
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks
    }

    pub fn num_processors(&self) -> usize {
        self.processors
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability that task `task` is placed on processor `proc`.
    #[inline]
    pub fn get(&self, task: usize, proc: usize) -> f64 {
        self.probs[proc * self.tasks + task]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_abs_diff(&self, other: &ProbabilityIndicator) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Starting indicator for `tasks` tasks and `caps` CAPs: every entry 0.5.
pub fn init_indicator(tasks: usize, caps: usize) -> ProbabilityIndicator {
    let processors = caps + 1;
    ProbabilityIndicator {
        tasks,
        processors,
        probs: vec![0.5; tasks * processors],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Samples drawn per iteration (`S`).
    pub samples: usize,
    /// Elite samples kept per iteration (`S_elite`).
    pub elites: usize,
    /// Smoothing weight on the elite fit, in `[0, 1]`.
    pub learning_rate: f64,
    /// Iteration budget.
    pub iterations: usize,
    pub seed: u64,
    /// Stop once the indicator moves less than this for three iterations in a
    /// row. `None` always runs the full budget.
    #[serde(default = "default_early_stop")]
    pub early_stop_tolerance: Option<f64>,
}

fn default_early_stop() -> Option<f64> {
    Some(1e-6)
}

/// Consecutive quiet iterations required before stopping early.
const EARLY_STOP_PATIENCE: usize = 3;

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            samples: 200,
            elites: 20,
            learning_rate: 0.8,
            iterations: 30,
            seed: 0,
            early_stop_tolerance: default_early_stop(),
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if self.elites == 0 || self.elites > self.samples {
            return Err(Error::Config(format!(
                "elites must be in 1..={}, got {}",
                self.samples, self.elites
            )));
        }
        check_learning_rate(self.learning_rate)?;
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if let Some(tol) = self.early_stop_tolerance {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::Config(format!(
                    "early_stop_tolerance must be >= 0, got {tol}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn check_learning_rate(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Config(format!("learning_rate must be in [0, 1], got {alpha}")))
    }
}

/// Draws one placement, returned as the processor index of each task.
///
/// Processor blocks are visited in uniformly random order. Within a block,
/// each task that is still unplaced lands on that processor with its
/// Bernoulli probability; once placed, a task is never drawn again, which is
/// the same as zeroing its probability in every later block. Whatever is
/// left when a single block remains goes to that block, so the result is
/// always a valid placement.
pub fn draw_choices<R: Rng + ?Sized>(indicator: &ProbabilityIndicator, rng: &mut R) -> Vec<usize> {
    let tasks = indicator.num_tasks();
    let mut placed: Vec<Option<usize>> = vec![None; tasks];
    let mut unvisited: Vec<usize> = (0..indicator.num_processors()).collect();
    while unvisited.len() > 1 {
        let block = unvisited.remove(rng.gen_range(0..unvisited.len()));
        for (n, slot) in placed.iter_mut().enumerate() {
            if slot.is_none() && rng.gen::<f64>() < indicator.get(n, block) {
                *slot = Some(block);
            }
        }
    }
    let last = unvisited[0];
    placed.into_iter().map(|p| p.unwrap_or(last)).collect()
}

pub fn draw_sample<R: Rng + ?Sized>(
    indicator: &ProbabilityIndicator,
    scenario: &Scenario,
    rng: &mut R,
) -> Result<Assignment> {
    check_dims(indicator, scenario)?;
    Ok(Assignment::from_choices(
        &draw_choices(indicator, rng),
        indicator.num_processors(),
    ))
}

fn check_dims(indicator: &ProbabilityIndicator, scenario: &Scenario) -> Result<()> {
    if indicator.num_tasks() != scenario.num_tasks()
        || indicator.num_processors() != scenario.num_processors()
    {
        return Err(Error::Argument(format!(
            "indicator is {}x{} but scenario is {}x{}",
            indicator.num_tasks(),
            indicator.num_processors(),
            scenario.num_tasks(),
            scenario.num_processors()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub choices: Vec<usize>,
    pub objective: f64,
}

impl Sample {
    pub fn assignment(&self, processors: usize) -> Assignment {
        Assignment::from_choices(&self.choices, processors)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub processors: usize,
    pub samples: Vec<Sample>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn min_objective(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.objective)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_objective(&self) -> f64 {
        self.samples.iter().map(|s| s.objective).sum::<f64>() / self.samples.len() as f64
    }
}

/// Draws `count` samples for iteration `iteration`. Sample `s` uses its own
/// random stream derived from `(seed, iteration, s)`.
pub fn draw_batch(
    indicator: &ProbabilityIndicator,
    evaluator: &Evaluator<'_>,
    count: usize,
    seed: u64,
    iteration: u64,
    exec: Execution,
) -> Result<SampleBatch> {
    check_dims(indicator, evaluator.scenario())?;
    let samples = map_indices(count, exec, |s| {
        let mut rng = sample_stream(seed, iteration, s as u64);
        let choices = draw_choices(indicator, &mut rng);
        let objective = evaluator.objective(&choices);
        Sample { choices, objective }
    });
    Ok(SampleBatch {
        processors: indicator.num_processors(),
        samples,
    })
}

/// The cheapest samples of a batch in ascending objective order.
#[derive(Clone, Debug, PartialEq)]
pub struct EliteSet {
    pub tasks: usize,
    pub processors: usize,
    pub members: Vec<Sample>,
}

/// Ties keep batch order, so the earlier sample wins.
pub fn select_elites(batch: &SampleBatch, count: usize) -> Result<EliteSet> {
    if count == 0 || count > batch.len() {
        return Err(Error::Config(format!(
            "cannot select {count} elites from a batch of {}",
            batch.len()
        )));
    }
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by(|&a, &b| {
        batch.samples[a]
            .objective
            .total_cmp(&batch.samples[b].objective)
    });
    let members = order[..count]
        .iter()
        .map(|&i| batch.samples[i].clone())
        .collect();
    Ok(EliteSet {
        tasks: batch.samples[0].choices.len(),
        processors: batch.processors,
        members,
    })
}

/// Maximum-likelihood Bernoulli fit: the entrywise mean of the elites.
pub fn elite_indicator(elites: &EliteSet) -> Result<ProbabilityIndicator> {
    if elites.members.is_empty() {
        return Err(Error::Config("elite set is empty".into()));
    }
    let tasks = elites.tasks;
    let mut counts = vec![0u32; tasks * elites.processors];
    for sample in &elites.members {
        for (n, &m) in sample.choices.iter().enumerate() {
            counts[m * tasks + n] += 1;
        }
    }
    let k = elites.members.len() as f64;
    Ok(ProbabilityIndicator {
        tasks,
        processors: elites.processors,
        probs: counts.into_iter().map(|c| f64::from(c) / k).collect(),
    })
}

/// `alpha * fitted + (1 - alpha) * previous`, entrywise.
pub fn smooth(
    fitted: &ProbabilityIndicator,
    previous: &ProbabilityIndicator,
    alpha: f64,
) -> Result<ProbabilityIndicator> {
    check_learning_rate(alpha)?;
    if fitted.probs.len() != previous.probs.len() {
        return Err(Error::Argument("indicator lengths differ".into()));
    }
    let probs = fitted
        .probs
        .iter()
        .zip(&previous.probs)
        // rounding can push a blend of ones just past 1
        .map(|(f, p)| (alpha * f + (1.0 - alpha) * p).clamp(0.0, 1.0))
        .collect();
    Ok(ProbabilityIndicator {
        tasks: fitted.tasks,
        processors: fitted.processors,
        probs,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub batch_min: f64,
    pub batch_mean: f64,
    /// Best objective seen so far, this iteration included.
    pub incumbent_best: f64,
    /// Indicator after this iteration's update.
    pub indicator: ProbabilityIndicator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub best_assignment: Assignment,
    pub best_objective: f64,
    pub trace: Vec<IterationRecord>,
    pub iterations_run: usize,
    /// The run stopped early because the indicator stopped moving.
    pub converged: bool,
    /// Samples evaluated over the whole run.
    pub samples_drawn: u64,
}

impl SolveResult {
    pub const TRACE_HEADER: [&'static str; 4] = ["iter", "batch_min", "batch_mean", "incumbent_best"];

    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::TRACE_HEADER)?;
        for r in &self.trace {
            w.write_record([
                r.iteration.to_string(),
                r.batch_min.to_string(),
                r.batch_mean.to_string(),
                r.incumbent_best.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn write_trace_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_trace_csv(std::io::BufWriter::new(file))
    }
}

/// Runs the solver with the default execution mode.
pub fn solve(scenario: &Scenario, config: &SolverConfig) -> Result<SolveResult> {
    solve_with(scenario, config, Execution::default())
}

pub fn solve_with(scenario: &Scenario, config: &SolverConfig, exec: Execution) -> Result<SolveResult> {
    scenario.check()?;
    config.check()?;
    let evaluator = Evaluator::new(scenario);
    let mut indicator = init_indicator(scenario.num_tasks(), scenario.num_caps());
    let mut best: Option<Sample> = None;
    let mut trace = Vec::with_capacity(config.iterations);
    let mut quiet = 0;
    let mut converged = false;
    let mut samples_drawn = 0u64;

    for t in 0..config.iterations {
        let batch = draw_batch(&indicator, &evaluator, config.samples, config.seed, t as u64, exec)?;
        samples_drawn += batch.len() as u64;
        for s in &batch.samples {
            if best.as_ref().is_none_or(|b| s.objective < b.objective) {
                best = Some(s.clone());
            }
        }
        let elites = select_elites(&batch, config.elites)?;
        let fitted = elite_indicator(&elites)?;
        let next = smooth(&fitted, &indicator, config.learning_rate)?;
        let change = next.max_abs_diff(&indicator);
        indicator = next;

        trace.push(IterationRecord {
            iteration: t,
            batch_min: batch.min_objective(),
            batch_mean: batch.mean_objective(),
            incumbent_best: best.as_ref().map_or(f64::INFINITY, |b| b.objective),
            indicator: indicator.clone(),
        });

        if let Some(tol) = config.early_stop_tolerance {
            quiet = if change < tol { quiet + 1 } else { 0 };
            if quiet >= EARLY_STOP_PATIENCE {
                converged = true;
                break;
            }
        }
    }

    let best = best.expect("at least one sample is drawn");
    Ok(SolveResult {
        best_assignment: best.assignment(scenario.num_processors()),
        best_objective: best.objective,
        iterations_run: trace.len(),
        trace,
        converged,
        samples_drawn,
    })
}
