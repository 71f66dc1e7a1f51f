//! Reference solvers: exhaustive enumeration, branch-and-bound, LP
//! relaxation with rounding, and the two fixed baselines.

use crate::error::{Error, Result};
use crate::model::{self, Assignment, Evaluator, PartialCost, Scenario};
use crate::simplex::{self, Constraint, LinearProgram, Relation};

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Rows whose relaxed entries are this close to the row maximum count as tied.
const ROUNDING_TIE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub assignment: Assignment,
    pub objective: f64,
    /// Search effort: placements enumerated, branch-and-bound nodes, or
    /// simplex pivots, depending on the oracle.
    pub work: u64,
    /// Optimal value of the continuous relaxation, for [`lpr_solve`] only.
    pub relaxed_value: Option<f64>,
}

fn finish(scenario: &Scenario, choices: &[usize], work: u64) -> Result<OracleResult> {
    let assignment = Assignment::from_choices(choices, scenario.num_processors());
    let objective = model::weighted_objective(&assignment, scenario)?;
    Ok(OracleResult {
        assignment,
        objective,
        work,
        relaxed_value: None,
    })
}

pub fn enumeration_size(scenario: &Scenario) -> f64 {
    (scenario.num_processors() as f64).powi(scenario.num_tasks() as i32)
}

pub fn exhaustive_solve(scenario: &Scenario) -> Result<OracleResult> {
    exhaustive_solve_capped(scenario, DEFAULT_ENUMERATION_CAP)
}

/// Tries every placement. Among equal objectives the lexicographically
/// smallest choice vector wins.
pub fn exhaustive_solve_capped(scenario: &Scenario, cap: u64) -> Result<OracleResult> {
    scenario.check()?;
    let size = enumeration_size(scenario);
    if size > cap as f64 {
        return Err(Error::SizeCap { size, cap });
    }
    let evaluator = Evaluator::new(scenario);
    let procs = scenario.num_processors();
    let mut choices = vec![0usize; scenario.num_tasks()];
    let mut best = choices.clone();
    let mut best_obj = f64::INFINITY;
    let mut count = 0u64;
    loop {
        count += 1;
        let obj = evaluator.objective(&choices);
        if obj < best_obj {
            best_obj = obj;
            best.copy_from_slice(&choices);
        }
        // odometer, last task fastest
        let mut pos = choices.len();
        loop {
            if pos == 0 {
                return finish(scenario, &best, count);
            }
            pos -= 1;
            choices[pos] += 1;
            if choices[pos] < procs {
                break;
            }
            choices[pos] = 0;
        }
    }
}

struct BranchAndBound<'a> {
    evaluator: Evaluator<'a>,
    levels: Vec<PartialCost>,
    current: Vec<usize>,
    best: Vec<usize>,
    best_obj: f64,
    nodes: u64,
}

impl BranchAndBound<'_> {
    fn visit(&mut self, depth: usize) {
        self.nodes += 1;
        let scenario = self.evaluator.scenario();
        let bound = self.levels[depth]
            .finish(&scenario.power, &scenario.weights)
            .objective;
        if bound >= self.best_obj {
            return;
        }
        if depth == scenario.num_tasks() {
            self.best_obj = bound;
            self.best.copy_from_slice(&self.current);
            return;
        }
        for m in 0..scenario.num_processors() {
            let (head, tail) = self.levels.split_at_mut(depth + 1);
            tail[0].clone_from(&head[depth]);
            tail[0].push(self.evaluator.times(depth, m), m);
            self.current[depth] = m;
            self.visit(depth + 1);
        }
    }
}

/// Depth-first branch-and-bound over tasks in index order.
///
/// The bound at a partial placement is its own weighted cost; every task
/// only adds nonnegative latency and energy, so no completion can be
/// cheaper. A branch is cut when its bound reaches the incumbent.
pub fn bnb_solve(scenario: &Scenario) -> Result<OracleResult> {
    scenario.check()?;
    let n = scenario.num_tasks();
    let mut search = BranchAndBound {
        evaluator: Evaluator::new(scenario),
        levels: vec![PartialCost::empty(scenario.num_processors()); n + 1],
        current: vec![0; n],
        best: vec![0; n],
        best_obj: f64::INFINITY,
        nodes: 0,
    };
    search.visit(0);
    finish(scenario, &search.best, search.nodes)
}

/// Builds the continuous relaxation. Variables are `x[n * (M+1) + m]`
/// followed by the latency epigraph variable `t`.
pub fn relaxation(scenario: &Scenario) -> LinearProgram {
    let evaluator = Evaluator::new(scenario);
    let (tasks, procs) = (scenario.num_tasks(), scenario.num_processors());
    let width = tasks * procs + 1;
    let t = width - 1;
    let p = &scenario.power;
    let w = &scenario.weights;

    let mut objective = vec![0.0; width];
    for n in 0..tasks {
        for m in 0..procs {
            let times = evaluator.times(n, m);
            let energy = if m == 0 {
                p.p0_w * times.compute
            } else {
                p.pt_w * times.uplink + p.pr_w * times.downlink
            };
            objective[n * procs + m] = w.lambda_e * energy;
        }
    }
    objective[t] = w.lambda_t;

    let mut constraints = Vec::with_capacity(procs + tasks);
    for m in 0..procs {
        let mut coeffs = vec![0.0; width];
        for n in 0..tasks {
            coeffs[n * procs + m] = evaluator.times(n, m).total();
        }
        coeffs[t] = -1.0;
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: 0.0,
        });
    }
    for n in 0..tasks {
        let mut coeffs = vec![0.0; width];
        coeffs[n * procs..(n + 1) * procs].fill(1.0);
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs: 1.0,
        });
    }
    LinearProgram {
        objective,
        constraints,
    }
}

/// Solves the relaxation, then rounds each task to its largest relaxed
/// entry (lowest processor index on ties). The reported objective is the
/// rounded placement's true cost.
pub fn lpr_solve(scenario: &Scenario) -> Result<OracleResult> {
    scenario.check()?;
    let lp = relaxation(scenario);
    let solution = simplex::solve(&lp)
        .map_err(|e| Error::Argument(format!("relaxation could not be solved: {e}")))?;
    let procs = scenario.num_processors();
    let choices: Vec<usize> = solution.x[..scenario.num_tasks() * procs]
        .chunks(procs)
        .map(|row| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.iter()
                .position(|&v| v >= max - ROUNDING_TIE)
                .expect("row has a maximum")
        })
        .collect();
    let mut result = finish(scenario, &choices, solution.pivots)?;
    result.relaxed_value = Some(solution.value);
    Ok(result)
}

/// Every task on the local CPU.
pub fn no_mec(scenario: &Scenario) -> Result<OracleResult> {
    scenario.check()?;
    finish(scenario, &vec![0; scenario.num_tasks()], 1)
}

/// Every task on CAP `cap` (`1..=M`).
pub fn full_mec(scenario: &Scenario, cap: usize) -> Result<OracleResult> {
    scenario.check()?;
    if cap == 0 || cap > scenario.num_caps() {
        return Err(Error::Argument(format!(
            "full offloading needs a CAP index in 1..={}, got {cap}",
            scenario.num_caps()
        )));
    }
    finish(scenario, &vec![cap; scenario.num_tasks()], 1)
}
