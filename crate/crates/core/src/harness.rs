//! Random scenario generation, the experiment sweeps and CSV output.
//!
//! Every trial draws its scenario from its own seed-derived stream, and all
//! methods in a sweep see the same scenario for a given trial. Averages are
//! taken in trial order, so results do not depend on thread scheduling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ce_solver::{self, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{self, Assignment, PowerProfile, Processor, Scenario, Task, Weights};
use crate::oracles;
use crate::parallel::{map_indices, Execution};
use crate::rng::{substream, trial_seed, DOMAIN_SCENARIO};

/// Closed interval sampled uniformly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRange {
    pub min: f64,
    pub max: f64,
}

impl UniformRange {
    pub const fn new(min: f64, max: f64) -> Self {
        UniformRange { min, max }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        UniformRange {
            min: self.min * factor,
            max: self.max * factor,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min > 0.0 && self.min <= self.max {
            Ok(())
        } else {
            Err(Error::Spec(format!(
                "{name} range must satisfy 0 < min <= max, got [{}, {}]",
                self.min, self.max
            )))
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.gen_range(self.min..=self.max)
        }
    }
}

pub const DEFAULT_LOCAL_RATE: f64 = 2e8;
pub const DEFAULT_CAP_RATES: [f64; 3] = [2e9, 2.2e9, 2.4e9];
pub const DEFAULT_LINK_BPS: f64 = 1e7;
pub const DEFAULT_POWER: PowerProfile = PowerProfile {
    p0_w: 0.8,
    pt_w: 1.258,
    pr_w: 1.181,
};

/// Recipe for random scenarios.
///
/// The processor and power defaults are the standard three-CAP setup. The
/// task ranges (1-8 Mbit in, 0.5-4 Mbit out, 0.1-1.5 Gcycles) are this
/// crate's own choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    pub tasks: usize,
    pub caps: usize,
    pub alpha_bits: UniformRange,
    pub beta_bits: UniformRange,
    pub gamma_cycles: UniformRange,
    pub local_rate_cps: f64,
    /// Rates for CAPs `1..`; the first `caps` entries are used.
    pub cap_rates_cps: Vec<f64>,
    /// Uplink and downlink rate of every CAP.
    pub link_bps: f64,
    pub power: PowerProfile,
    pub weights: Weights,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            tasks: 6,
            caps: 3,
            alpha_bits: UniformRange::new(1e6, 8e6),
            beta_bits: UniformRange::new(5e5, 4e6),
            gamma_cycles: UniformRange::new(1e8, 1.5e9),
            local_rate_cps: DEFAULT_LOCAL_RATE,
            cap_rates_cps: DEFAULT_CAP_RATES.to_vec(),
            link_bps: DEFAULT_LINK_BPS,
            power: DEFAULT_POWER,
            weights: Weights {
                lambda_t: 0.5,
                lambda_e: 0.5,
            },
            trials: 100,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn check(&self) -> Result<()> {
        if self.tasks == 0 {
            return Err(Error::Spec("tasks must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Spec("trials must be at least 1".into()));
        }
        if self.caps > self.cap_rates_cps.len() {
            return Err(Error::Spec(format!(
                "caps = {} but only {} cap_rates_cps given",
                self.caps,
                self.cap_rates_cps.len()
            )));
        }
        self.alpha_bits.check("alpha_bits")?;
        self.beta_bits.check("beta_bits")?;
        self.gamma_cycles.check("gamma_cycles")?;
        for (name, v) in [("local_rate_cps", self.local_rate_cps), ("link_bps", self.link_bps)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Spec(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        // power, weights and CAP rates are checked by building a scenario
        Scenario::new(
            vec![Task::new(1.0, 1.0, 1.0)?],
            self.processors(),
            self.power,
            self.weights,
        )
        .map_err(|e| Error::Spec(e.to_string()))?;
        Ok(())
    }

    pub fn processors(&self) -> Vec<Processor> {
        let mut procs = vec![Processor::local(self.local_rate_cps)];
        for (i, &rate) in self.cap_rates_cps.iter().take(self.caps).enumerate() {
            procs.push(Processor::cap(i + 1, rate, self.link_bps, self.link_bps));
        }
        procs
    }

    pub fn with_caps(&self, caps: usize) -> Self {
        ScenarioSpec {
            caps,
            ..self.clone()
        }
    }

    /// Multiplies all three task-size ranges by `factor`.
    pub fn with_size_scale(&self, factor: f64) -> Self {
        ScenarioSpec {
            alpha_bits: self.alpha_bits.scaled(factor),
            beta_bits: self.beta_bits.scaled(factor),
            gamma_cycles: self.gamma_cycles.scaled(factor),
            ..self.clone()
        }
    }
}

/// Scenario for trial `trial`. Task draws depend only on `(seed, trial)`,
/// so specs that differ only in `caps` or weights share their tasks.
pub fn generate_scenario(spec: &ScenarioSpec, trial: u64) -> Result<Scenario> {
    spec.check()?;
    let mut rng = substream(spec.seed, DOMAIN_SCENARIO, trial);
    let tasks = (0..spec.tasks)
        .map(|_| {
            let alpha = spec.alpha_bits.sample(&mut rng);
            let beta = spec.beta_bits.sample(&mut rng);
            let gamma = spec.gamma_cycles.sample(&mut rng);
            Task::new(alpha, beta, gamma)
        })
        .collect::<Result<Vec<_>>>()?;
    Scenario::new(tasks, spec.processors(), spec.power, spec.weights)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Asce,
    Bnb,
    Exhaustive,
    Lpr,
    NoMec,
    FullMec,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Asce,
        Method::Bnb,
        Method::Exhaustive,
        Method::Lpr,
        Method::NoMec,
        Method::FullMec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Asce => "asce",
            Method::Bnb => "bnb",
            Method::Exhaustive => "exhaustive",
            Method::Lpr => "lpr",
            Method::NoMec => "nomec",
            Method::FullMec => "fullmec",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown method {s:?}")))
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Asce, Method::Bnb, Method::Lpr, Method::NoMec, Method::FullMec]
}

/// A solved placement with its re-evaluated cost.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutcome {
    pub assignment: Assignment,
    pub objective: f64,
    /// Samples for ASCE, nodes for BnB, placements for exhaustive, pivots
    /// for LPr, 1 for the fixed baselines.
    pub work: u64,
}

/// Runs one method and re-checks its answer through the cost model.
pub fn run_method(
    method: Method,
    scenario: &Scenario,
    config: &SolverConfig,
    exec: Execution,
) -> Result<MethodOutcome> {
    let (assignment, work) = match method {
        Method::Asce => {
            let r = ce_solver::solve_with(scenario, config, exec)?;
            (r.best_assignment, r.samples_drawn)
        }
        Method::Bnb => {
            let r = oracles::bnb_solve(scenario)?;
            (r.assignment, r.work)
        }
        Method::Exhaustive => {
            let r = oracles::exhaustive_solve(scenario)?;
            (r.assignment, r.work)
        }
        Method::Lpr => {
            let r = oracles::lpr_solve(scenario)?;
            (r.assignment, r.work)
        }
        Method::NoMec => {
            let r = oracles::no_mec(scenario)?;
            (r.assignment, r.work)
        }
        Method::FullMec => {
            let r = oracles::full_mec(scenario, 1)?;
            (r.assignment, r.work)
        }
    };
    model::validate(&assignment, scenario).map_err(Error::Infeasible)?;
    let objective = model::weighted_objective(&assignment, scenario)?;
    Ok(MethodOutcome {
        assignment,
        objective,
        work,
    })
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

/// Solver config for trial `trial`: same hyperparameters, trial-specific seed.
pub fn trial_config(config: &SolverConfig, trial: u64) -> SolverConfig {
    SolverConfig {
        seed: trial_seed(config.seed, trial),
        ..config.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Convergence,
    Size,
    Lambda,
    Compare,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Convergence => "convergence",
            SweepKind::Size => "size",
            SweepKind::Lambda => "lambda",
            SweepKind::Compare => "compare",
        }
    }
}

/// Parameters for a sweep, read from JSON. Every field is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub kind: Option<SweepKind>,
    pub scenario: ScenarioSpec,
    /// Solver used by the size, lambda and compare sweeps.
    pub solver: SolverConfig,
    /// Solver variants compared by the convergence sweep.
    pub configs: Vec<SolverConfig>,
    /// Task-size scale factors for the size sweep.
    pub grid: Vec<f64>,
    /// CAP counts for the lambda sweep.
    pub caps_values: Vec<usize>,
    pub methods: Vec<Method>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let solver = SolverConfig::default();
        let configs = [(100, 10), (200, 20), (400, 40)]
            .into_iter()
            .map(|(samples, elites)| SolverConfig {
                samples,
                elites,
                early_stop_tolerance: None,
                ..solver.clone()
            })
            .collect();
        SweepSpec {
            kind: None,
            scenario: ScenarioSpec::default(),
            solver,
            configs,
            grid: vec![0.5, 1.0, 1.5, 2.0],
            caps_values: vec![1, 2, 3],
            methods: default_methods(),
        }
    }
}

impl SweepSpec {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn check(&self, kind: SweepKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(Error::Spec(format!(
                    "spec is for a {} sweep, not {}",
                    k.name(),
                    kind.name()
                )));
            }
        }
        self.scenario.check()?;
        match kind {
            SweepKind::Convergence => {
                if self.configs.is_empty() {
                    return Err(Error::Spec("configs must not be empty".into()));
                }
                for c in &self.configs {
                    c.check()?;
                }
            }
            SweepKind::Size => {
                if self.grid.is_empty() {
                    return Err(Error::Spec("grid must not be empty".into()));
                }
                if let Some(f) = self.grid.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
                    return Err(Error::Spec(format!("scale factors must be > 0, got {f}")));
                }
                self.check_methods()?;
                self.solver.check()?;
            }
            SweepKind::Lambda => {
                if self.caps_values.is_empty() {
                    return Err(Error::Spec("caps_values must not be empty".into()));
                }
                for &m in &self.caps_values {
                    self.scenario.with_caps(m).check()?;
                }
                self.solver.check()?;
            }
            SweepKind::Compare => {
                self.check_methods()?;
                self.solver.check()?;
            }
        }
        Ok(())
    }

    fn check_methods(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Spec("methods must not be empty".into()));
        }
        if self.methods.contains(&Method::FullMec) && self.scenario.caps == 0 {
            return Err(Error::Spec("fullmec needs at least one CAP".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub samples: usize,
    pub elites: usize,
    pub learning_rate: f64,
    pub iteration: usize,
    pub mean_incumbent_best: f64,
    pub mean_batch_min: f64,
    pub mean_batch_mean: f64,
}

/// Averages per-iteration traces over `spec.trials` scenarios for each
/// config. Early stopping is disabled so every trace has the full length.
pub fn run_convergence(
    spec: &ScenarioSpec,
    configs: &[SolverConfig],
    exec: Execution,
) -> Result<Vec<ConvergenceRow>> {
    spec.check()?;
    let scenarios = trial_scenarios(spec, exec)?;
    let mut rows = Vec::new();
    for config in configs {
        let config = SolverConfig {
            early_stop_tolerance: None,
            ..config.clone()
        };
        config.check()?;
        let traces = collect(map_indices(spec.trials, exec, |trial| {
            let r = ce_solver::solve_with(&scenarios[trial], &trial_config(&config, trial as u64), exec)?;
            model::validate(&r.best_assignment, &scenarios[trial]).map_err(Error::Infeasible)?;
            Ok(r.trace)
        }))?;
        for it in 0..config.iterations {
            rows.push(ConvergenceRow {
                samples: config.samples,
                elites: config.elites,
                learning_rate: config.learning_rate,
                iteration: it,
                mean_incumbent_best: mean(traces.iter().map(|t| t[it].incumbent_best)),
                mean_batch_min: mean(traces.iter().map(|t| t[it].batch_min)),
                mean_batch_mean: mean(traces.iter().map(|t| t[it].batch_mean)),
            });
        }
    }
    Ok(rows)
}

fn trial_scenarios(spec: &ScenarioSpec, exec: Execution) -> Result<Vec<Scenario>> {
    collect(map_indices(spec.trials, exec, |t| generate_scenario(spec, t as u64)))
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeRow {
    pub scale: f64,
    pub method: Method,
    pub mean_objective: f64,
    pub trials: usize,
}

/// Scales the task-size ranges by each grid factor and averages every
/// method's objective over paired trials.
pub fn run_size_sweep(
    spec: &ScenarioSpec,
    grid: &[f64],
    methods: &[Method],
    config: &SolverConfig,
    exec: Execution,
) -> Result<Vec<SizeRow>> {
    let mut rows = Vec::new();
    for &scale in grid {
        let scaled = spec.with_size_scale(scale);
        scaled.check()?;
        let scenarios = trial_scenarios(&scaled, exec)?;
        for &method in methods {
            let objectives = collect(map_indices(spec.trials, exec, |trial| {
                run_method(method, &scenarios[trial], &trial_config(config, trial as u64), exec)
                    .map(|o| o.objective)
            }))?;
            rows.push(SizeRow {
                scale,
                method,
                mean_objective: mean(objectives),
                trials: spec.trials,
            });
        }
    }
    Ok(rows)
}

/// The exponent grid `q = -1.8, -1.6, ..., 2.0` for `lambda_e / lambda_t = 10^q`.
pub fn lambda_grid() -> Vec<f64> {
    (0..20).map(|k| f64::from(2 * k - 18) / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaRow {
    pub q: f64,
    pub caps: usize,
    pub lambda_t: f64,
    pub lambda_e: f64,
    pub mean_objective: f64,
    /// Mean of `lambda_e * E(all tasks local)` over the same trials.
    pub mean_weighted_local_energy: f64,
}

/// For each CAP count and each `q` on [`lambda_grid`], solves with ASCE under
/// weights normalized to sum to one.
pub fn run_lambda_sweep(
    spec: &ScenarioSpec,
    caps_values: &[usize],
    config: &SolverConfig,
    exec: Execution,
) -> Result<Vec<LambdaRow>> {
    let mut rows = Vec::new();
    for &caps in caps_values {
        let base = spec.with_caps(caps);
        base.check()?;
        let scenarios = trial_scenarios(&base, exec)?;
        for q in lambda_grid() {
            let weights = Weights::from_log_ratio(q);
            let per_trial = collect(map_indices(spec.trials, exec, |trial| {
                let s = scenarios[trial].with_weights(weights);
                let o = run_method(Method::Asce, &s, &trial_config(config, trial as u64), exec)?;
                let local = oracles::no_mec(&s)?;
                let e_local = model::total_energy(&local.assignment, &s)?;
                Ok((o.objective, weights.lambda_e * e_local))
            }))?;
            rows.push(LambdaRow {
                q,
                caps,
                lambda_t: weights.lambda_t,
                lambda_e: weights.lambda_e,
                mean_objective: mean(per_trial.iter().map(|p| p.0)),
                mean_weighted_local_energy: mean(per_trial.iter().map(|p| p.1)),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub method: Method,
    pub mean_objective: f64,
    pub mean_work: f64,
    pub mean_wall_seconds: f64,
}

/// Objective, effort and wall time per method on paired trials.
pub fn compare_methods(
    spec: &ScenarioSpec,
    methods: &[Method],
    config: &SolverConfig,
    exec: Execution,
) -> Result<Vec<CompareRow>> {
    spec.check()?;
    let scenarios = trial_scenarios(spec, exec)?;
    methods
        .iter()
        .map(|&method| {
            let per_trial = collect(map_indices(spec.trials, exec, |trial| {
                let start = Instant::now();
                let o = run_method(method, &scenarios[trial], &trial_config(config, trial as u64), exec)?;
                Ok((o.objective, o.work as f64, start.elapsed().as_secs_f64()))
            }))?;
            Ok(CompareRow {
                method,
                mean_objective: mean(per_trial.iter().map(|p| p.0)),
                mean_work: mean(per_trial.iter().map(|p| p.1)),
                mean_wall_seconds: mean(per_trial.iter().map(|p| p.2)),
            })
        })
        .collect()
}

/// A header plus string rows, as written to and read from CSV.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Fixed-width text rendering for terminals.
    pub fn to_aligned(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

pub const CONVERGENCE_HEADER: [&str; 7] = [
    "samples",
    "elites",
    "learning_rate",
    "iter",
    "mean_incumbent_best",
    "mean_batch_min",
    "mean_batch_mean",
];
pub const SIZE_HEADER: [&str; 4] = ["scale", "method", "mean_objective", "trials"];
pub const LAMBDA_HEADER: [&str; 6] = [
    "q",
    "caps",
    "lambda_t",
    "lambda_e",
    "mean_objective",
    "mean_weighted_local_energy",
];
pub const COMPARE_HEADER: [&str; 3] = ["method", "mean_objective", "mean_work"];

pub fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    let mut t = Table::new(&CONVERGENCE_HEADER);
    for r in rows {
        t.push(vec![
            r.samples.to_string(),
            r.elites.to_string(),
            r.learning_rate.to_string(),
            r.iteration.to_string(),
            r.mean_incumbent_best.to_string(),
            r.mean_batch_min.to_string(),
            r.mean_batch_mean.to_string(),
        ]);
    }
    t
}

pub fn size_table(rows: &[SizeRow]) -> Table {
    let mut t = Table::new(&SIZE_HEADER);
    for r in rows {
        t.push(vec![
            r.scale.to_string(),
            r.method.to_string(),
            r.mean_objective.to_string(),
            r.trials.to_string(),
        ]);
    }
    t
}

pub fn lambda_table(rows: &[LambdaRow]) -> Table {
    let mut t = Table::new(&LAMBDA_HEADER);
    for r in rows {
        t.push(vec![
            r.q.to_string(),
            r.caps.to_string(),
            r.lambda_t.to_string(),
            r.lambda_e.to_string(),
            r.mean_objective.to_string(),
            r.mean_weighted_local_energy.to_string(),
        ]);
    }
    t
}

/// Wall time is left out so the table is reproducible; see
/// [`compare_timing_table`].
pub fn compare_table(rows: &[CompareRow]) -> Table {
    let mut t = Table::new(&COMPARE_HEADER);
    for r in rows {
        t.push(vec![
            r.method.to_string(),
            r.mean_objective.to_string(),
            r.mean_work.to_string(),
        ]);
    }
    t
}

pub fn compare_timing_table(rows: &[CompareRow]) -> Table {
    let mut t = Table::new(&["method", "mean_wall_seconds"]);
    for r in rows {
        t.push(vec![r.method.to_string(), format!("{:.6}", r.mean_wall_seconds)]);
    }
    t
}

pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    let write_err = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(write_err)?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(write_err)?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Table { header, rows })
}

/// `<dir>/<kind>_<tag>.csv`.
pub fn output_path(dir: &Path, kind: SweepKind, tag: &str) -> PathBuf {
    dir.join(format!("{}_{tag}.csv", kind.name()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(trials: usize) -> ScenarioSpec {
        ScenarioSpec {
            tasks: 4,
            caps: 2,
            trials,
            seed: 5,
            ..ScenarioSpec::default()
        }
    }

    fn quick_solver() -> SolverConfig {
        SolverConfig {
            samples: 40,
            elites: 4,
            iterations: 6,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn default_processors_match_standard_setup() {
        let s = generate_scenario(&ScenarioSpec::default(), 0).unwrap();
        assert_eq!(s.num_caps(), 3);
        assert_eq!(s.processors[0], Processor::local(2e8));
        assert_eq!(s.processors[1], Processor::cap(1, 2e9, 1e7, 1e7));
        assert_eq!(s.processors[2], Processor::cap(2, 2.2e9, 1e7, 1e7));
        assert_eq!(s.processors[3], Processor::cap(3, 2.4e9, 1e7, 1e7));
        assert_eq!(s.power, DEFAULT_POWER);
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let spec = ScenarioSpec::default();
        assert_eq!(generate_scenario(&spec, 3).unwrap(), generate_scenario(&spec, 3).unwrap());
        assert_ne!(generate_scenario(&spec, 3).unwrap(), generate_scenario(&spec, 4).unwrap());
        for trial in 0..10_000 {
            let s = generate_scenario(&spec, trial).unwrap();
            for t in &s.tasks {
                assert!(spec.alpha_bits.contains(t.alpha_bits));
                assert!(spec.beta_bits.contains(t.beta_bits));
                assert!(spec.gamma_cycles.contains(t.gamma_cycles));
            }
        }
    }

    #[test]
    fn tasks_are_shared_across_cap_counts() {
        let spec = ScenarioSpec::default();
        let a = generate_scenario(&spec.with_caps(1), 7).unwrap();
        let b = generate_scenario(&spec.with_caps(3), 7).unwrap();
        assert_eq!(a.tasks, b.tasks);
    }

    #[test]
    fn spec_validation() {
        let bad = |f: fn(&mut ScenarioSpec)| {
            let mut s = ScenarioSpec::default();
            f(&mut s);
            s.check().is_err()
        };
        assert!(!bad(|_| {}));
        assert!(bad(|s| s.tasks = 0));
        assert!(bad(|s| s.trials = 0));
        assert!(bad(|s| s.caps = 4));
        assert!(bad(|s| s.alpha_bits = UniformRange::new(5.0, 1.0)));
        assert!(bad(|s| s.gamma_cycles = UniformRange::new(0.0, 1.0)));
        assert!(bad(|s| s.link_bps = -1.0));
        assert!(bad(|s| s.power.pt_w = 0.0));
        assert!(bad(|s| s.cap_rates_cps[0] = 0.0));
    }

    #[test]
    fn lambda_grid_has_twenty_points() {
        let g = lambda_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], -1.8);
        assert_eq!(g[9], 0.0);
        assert_eq!(g[19], 2.0);
        for w in g.windows(2) {
            assert!((w[1] - w[0] - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn convergence_traces_are_nonincreasing() {
        let configs = [quick_solver(), SolverConfig { samples: 80, elites: 8, ..quick_solver() }];
        let rows = run_convergence(&small_spec(5), &configs, Execution::default()).unwrap();
        assert_eq!(rows.len(), 12);
        for pair in rows.windows(2) {
            if pair[0].samples == pair[1].samples {
                assert!(pair[1].mean_incumbent_best <= pair[0].mean_incumbent_best);
            }
        }
    }

    #[test]
    fn size_sweep_rows_and_ordering() {
        let rows = run_size_sweep(
            &small_spec(4),
            &[0.5, 1.0],
            &[Method::Asce, Method::Bnb, Method::Lpr],
            &quick_solver(),
            Execution::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 6);
        for chunk in rows.chunks(3) {
            let bnb = chunk[1].mean_objective;
            assert!(bnb <= chunk[0].mean_objective + 1e-12);
            assert!(bnb <= chunk[2].mean_objective + 1e-12);
        }
    }

    #[test]
    fn sweeps_match_across_execution_modes() {
        let seq = run_size_sweep(&small_spec(3), &[1.0], &[Method::Asce], &quick_solver(), Execution::Sequential).unwrap();
        let par = run_size_sweep(&small_spec(3), &[1.0], &[Method::Asce], &quick_solver(), Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn lambda_sweep_shape() {
        let rows = run_lambda_sweep(&small_spec(2), &[1, 2], &quick_solver(), Execution::default()).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|r| (r.lambda_t + r.lambda_e - 1.0).abs() < 1e-12));
    }

    #[test]
    fn compare_single_method() {
        let rows = compare_methods(&small_spec(2), &[Method::NoMec], &quick_solver(), Execution::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_work, 1.0);
        assert_eq!(compare_table(&rows).rows.len(), 1);
    }

    #[test]
    fn csv_round_trip_and_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![SizeRow {
            scale: 0.1,
            method: Method::Lpr,
            mean_objective: 1.0 / 3.0,
            trials: 7,
        }];
        let table = size_table(&rows);
        let path = dir.path().join("size_x.csv");
        write_csv(&table, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), table);
        assert_eq!(table.rows[0][2].parse::<f64>().unwrap(), 1.0 / 3.0);

        let empty = Table::new(&LAMBDA_HEADER);
        let path = dir.path().join("empty.csv");
        write_csv(&empty, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), LAMBDA_HEADER.join(",") + "\n");

        let missing = dir.path().join("no/such/dir/out.csv");
        assert!(matches!(write_csv(&empty, &missing), Err(Error::Write { .. })));
    }

    #[test]
    fn sweep_spec_parses_partial_json() {
        let s = SweepSpec::from_json(r#"{"kind":"size","grid":[1.0],"methods":["asce","nomec"]}"#).unwrap();
        assert_eq!(s.methods, vec![Method::Asce, Method::NoMec]);
        assert!(s.check(SweepKind::Size).is_ok());
        assert!(s.check(SweepKind::Lambda).is_err());
        assert!(SweepSpec::from_json(r#"{"bogus":1}"#).is_err());
        let empty_grid = SweepSpec {
            grid: vec![],
            ..SweepSpec::default()
        };
        assert!(empty_grid.check(SweepKind::Size).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("sdr".parse::<Method>().is_err());
    }
}
