//! Acceptance suite. Each test prints one `PASS`/`FAIL` line, then asserts.
//!
//! Lines are written straight to the stderr handle so they show up even
//! when the test harness captures `print!` output.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ce_offload::ce_solver::{draw_choices, ProbabilityIndicator};
use ce_offload::harness::{self, ScenarioSpec, UniformRange};
use ce_offload::model::{self, Assignment, PowerProfile, Processor, Scenario, Task, Weights};
use ce_offload::oracles;
use ce_offload::{solve_with, Execution, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, pass: bool, detail: &str) {
    let line = format!("acceptance {id}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn reference_config() -> SolverConfig {
    SolverConfig {
        samples: 200,
        elites: 20,
        learning_rate: 0.8,
        iterations: 30,
        seed: 0,
        early_stop_tolerance: None,
    }
}

const ORACLE_INSTANCES: u64 = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(10);

#[test]
fn criterion_1_bnb_matches_exhaustive() {
    let start = Instant::now();
    let mut mismatches = 0;
    for i in 0..ORACLE_INSTANCES {
        let spec = ScenarioSpec {
            tasks: 1 + (i % 6) as usize,
            caps: 1 + ((i / 6) % 2) as usize,
            seed: 1,
            ..Default::default()
        };
        let s = harness::generate_scenario(&spec, i).unwrap();
        let b = oracles::bnb_solve(&s).unwrap();
        let e = oracles::exhaustive_solve(&s).unwrap();
        let psi_b = model::weighted_objective(&b.assignment, &s).unwrap();
        let psi_e = model::weighted_objective(&e.assignment, &s).unwrap();
        if psi_b != psi_e {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && elapsed < ORACLE_BUDGET;
    report(
        1,
        pass,
        &format!("{mismatches} mismatches over {ORACLE_INSTANCES} instances in {:.2}s", elapsed.as_secs_f64()),
    );
    assert!(pass);
}

const NEAR_OPT_TRIALS: u64 = 100;
const NEAR_OPT_MIN_HITS: usize = 90;
const NEAR_OPT_MAX_GAP: f64 = 0.02;
const NEAR_OPT_BUDGET: Duration = Duration::from_secs(60);

struct PairedRun {
    hits: usize,
    mean_gap: f64,
    mean_asce: f64,
    mean_lpr: f64,
    elapsed: Duration,
}

fn paired_run() -> PairedRun {
    let spec = ScenarioSpec {
        tasks: 6,
        caps: 2,
        ..Default::default()
    };
    let config = reference_config();
    let start = Instant::now();
    let (mut hits, mut gap, mut asce, mut lpr) = (0, 0.0, 0.0, 0.0);
    for trial in 0..NEAR_OPT_TRIALS {
        let s = harness::generate_scenario(&spec, trial).unwrap();
        let r = solve_with(&s, &harness::trial_config(&config, trial), Execution::default()).unwrap();
        let psi = model::weighted_objective(&r.best_assignment, &s).unwrap();
        let opt = oracles::exhaustive_solve(&s).unwrap().objective;
        if psi == opt {
            hits += 1;
        }
        gap += (psi - opt) / opt;
        asce += psi;
        lpr += oracles::lpr_solve(&s).unwrap().objective;
    }
    let n = NEAR_OPT_TRIALS as f64;
    PairedRun {
        hits,
        mean_gap: gap / n,
        mean_asce: asce / n,
        mean_lpr: lpr / n,
        elapsed: start.elapsed(),
    }
}

#[test]
fn criterion_2_asce_near_optimal() {
    let r = paired_run();
    let pass = r.hits >= NEAR_OPT_MIN_HITS && r.mean_gap <= NEAR_OPT_MAX_GAP && r.elapsed < NEAR_OPT_BUDGET;
    report(
        2,
        pass,
        &format!(
            "{} of {NEAR_OPT_TRIALS} optimal, mean gap {:.4}%, {:.2}s",
            r.hits,
            100.0 * r.mean_gap,
            r.elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_asce_beats_lpr() {
    let r = paired_run();
    let pass = r.mean_asce <= r.mean_lpr;
    report(3, pass, &format!("mean asce {:.6} vs lpr {:.6}", r.mean_asce, r.mean_lpr));
    assert!(pass);
}

const FEASIBILITY_SAMPLES: usize = 10_000;
const INDICATOR_ITERATIONS: usize = 1_000;

#[test]
fn criterion_4_feasibility_and_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut infeasible = 0;
    for i in 0..FEASIBILITY_SAMPLES {
        let (tasks, caps) = (1 + i % 7, 1 + (i / 7) % 3);
        let procs = caps + 1;
        let mut probs: Vec<f64> = (0..tasks * procs).map(|_| rng.gen::<f64>()).collect();
        // mix in exact zeros and ones, which stress the last-block rule
        for p in probs.iter_mut() {
            match rng.gen_range(0..6) {
                0 => *p = 0.0,
                1 => *p = 1.0,
                _ => {}
            }
        }
        let u = ProbabilityIndicator::from_block_vector(tasks, procs, probs).unwrap();
        let choices = draw_choices(&u, &mut rng);
        let spec = ScenarioSpec {
            tasks,
            caps,
            ..Default::default()
        };
        let s = harness::generate_scenario(&spec, i as u64).unwrap();
        if model::validate(&Assignment::from_choices(&choices, procs), &s).is_err() {
            infeasible += 1;
        }
    }

    let mut out_of_bounds = 0;
    let mut increases = 0;
    let mut iterations = 0;
    let runs = [(0.8, 0), (1.0, 1), (0.3, 2), (0.99, 3)];
    for (learning_rate, seed) in runs {
        let spec = ScenarioSpec {
            tasks: 8,
            caps: 3,
            seed,
            ..Default::default()
        };
        let s = harness::generate_scenario(&spec, 0).unwrap();
        let config = SolverConfig {
            samples: 40,
            elites: 4,
            learning_rate,
            iterations: INDICATOR_ITERATIONS / runs.len(),
            seed,
            early_stop_tolerance: None,
        };
        let r = solve_with(&s, &config, Execution::default()).unwrap();
        iterations += r.trace.len();
        for rec in &r.trace {
            out_of_bounds += rec.indicator.as_slice().iter().filter(|p| !(0.0..=1.0).contains(*p)).count();
        }
        increases += r.trace.windows(2).filter(|w| w[1].incumbent_best > w[0].incumbent_best).count();
    }
    let pass = infeasible == 0 && out_of_bounds == 0 && increases == 0 && iterations >= INDICATOR_ITERATIONS;
    report(
        4,
        pass,
        &format!(
            "{infeasible} infeasible of {FEASIBILITY_SAMPLES}, {out_of_bounds} out-of-range entries and \
             {increases} incumbent increases over {iterations} iterations"
        ),
    );
    assert!(pass);
}

const ROBUSTNESS_TRIALS: usize = 50;
const ROBUSTNESS_SPREAD: f64 = 0.05;

#[test]
fn criterion_5_hyperparameter_robustness() {
    let spec = ScenarioSpec {
        trials: ROBUSTNESS_TRIALS,
        ..Default::default()
    };
    let configs: Vec<SolverConfig> = [(100, 10), (200, 20), (400, 40)]
        .into_iter()
        .map(|(samples, elites)| SolverConfig {
            samples,
            elites,
            ..reference_config()
        })
        .collect();
    let rows = harness::run_convergence(&spec, &configs, Execution::default()).unwrap();
    let last = reference_config().iterations - 1;
    let finals: Vec<f64> = rows
        .iter()
        .filter(|r| r.iteration == last)
        .map(|r| r.mean_incumbent_best)
        .collect();
    let min = finals.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = finals.iter().map(|f| (f - min) / min).fold(0.0, f64::max);
    let pass = finals.len() == 3 && worst <= ROBUSTNESS_SPREAD;
    report(
        5,
        pass,
        &format!("finals {finals:.4?}, largest excess over minimum {:.3}%", 100.0 * worst),
    );
    assert!(pass);
}

/// Spearman rank correlation with average ranks for ties.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn spearman_reference_values() {
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
    // ties: ranks y = [0.5, 0.5, 2], textbook value sqrt(3)/2
    assert!((spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 7.0]) - 0.75f64.sqrt()).abs() < 1e-12);
}

const LAMBDA_TRIALS: usize = 50;
const LAMBDA_ENERGY_TOLERANCE: f64 = 0.10;

#[test]
fn criterion_6_lambda_sweep_trends() {
    // Data-heavy tasks whose local and offload energies are comparable, so
    // that running everything locally is the energy-minimal placement.
    let spec = ScenarioSpec {
        trials: LAMBDA_TRIALS,
        alpha_bits: UniformRange::new(8e6, 16e6),
        beta_bits: UniformRange::new(4e6, 8e6),
        gamma_cycles: UniformRange::new(3e8, 6e8),
        ..Default::default()
    };
    let rows = harness::run_lambda_sweep(&spec, &[1, 2, 3], &reference_config(), Execution::default()).unwrap();
    let grid = harness::lambda_grid();
    let mut rhos = Vec::new();
    for caps in [2, 3] {
        let sel: Vec<_> = rows.iter().filter(|r| r.caps == caps && r.q >= 0.0).collect();
        let q: Vec<f64> = sel.iter().map(|r| r.q).collect();
        let psi: Vec<f64> = sel.iter().map(|r| r.mean_objective).collect();
        rhos.push(spearman(&q, &psi));
    }
    let end = rows
        .iter()
        .find(|r| r.caps == 1 && r.q == *grid.last().unwrap())
        .unwrap();
    let ratio = end.mean_objective / end.mean_weighted_local_energy;
    let pass = grid.len() == 20 && rhos.iter().all(|&r| r > 0.0) && (ratio - 1.0).abs() <= LAMBDA_ENERGY_TOLERANCE;
    report(
        6,
        pass,
        &format!(
            "spearman M=2 {:.3}, M=3 {:.3}; M=1 q=2 objective / weighted local energy {ratio:.4}",
            rhos[0], rhos[1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_bnb_outgrows_asce() {
    let config = reference_config();
    let budget = (config.samples * config.iterations) as u64;
    let nodes: Vec<u64> = [6, 8, 10]
        .into_iter()
        .map(|tasks| {
            let spec = ScenarioSpec {
                tasks,
                caps: 3,
                seed: 7,
                ..Default::default()
            };
            oracles::bnb_solve(&harness::generate_scenario(&spec, 0).unwrap()).unwrap().work
        })
        .collect();
    let pass = nodes.windows(2).all(|w| w[1] > w[0]) && nodes[2] >= 2 * budget;
    report(
        7,
        pass,
        &format!("bnb nodes at N=6,8,10: {nodes:?}; asce samples S*T = {budget}"),
    );
    assert!(pass);
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ce-offload"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_8_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let scenario_spec = root.join("scenario_spec.json");
    std::fs::write(&scenario_spec, r#"{"tasks": 5, "caps": 2, "trials": 4, "seed": 3}"#).unwrap();
    let sweep_spec = root.join("sweep.json");
    std::fs::write(
        &sweep_spec,
        r#"{
            "scenario": {"tasks": 4, "caps": 2, "trials": 3, "seed": 5},
            "solver": {"samples": 40, "elites": 4, "learning_rate": 0.8, "iterations": 5, "seed": 9},
            "configs": [
                {"samples": 20, "elites": 2, "learning_rate": 0.8, "iterations": 4, "seed": 1},
                {"samples": 40, "elites": 4, "learning_rate": 0.8, "iterations": 4, "seed": 1}
            ],
            "grid": [0.5, 1.0],
            "caps_values": [1, 2],
            "methods": ["asce", "bnb", "exhaustive", "lpr", "nomec", "fullmec"]
        }"#,
    )
    .unwrap();

    let mut failures = Vec::new();
    let mut commands = 0;
    let mut check = |name: &str, writes_files: bool, make: &dyn Fn(&Path) -> Vec<String>| {
        commands += 1;
        let mut runs = Vec::new();
        for k in 0..2 {
            let dir = root.join(format!("{name}_{k}"));
            std::fs::create_dir_all(&dir).unwrap();
            let args = make(&dir);
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            let (code, stdout) = run_cli(&args);
            // output paths differ only in the run directory
            let stdout = String::from_utf8_lossy(&stdout).replace(dir.to_str().unwrap(), "<dir>");
            runs.push((code, stdout, read_dir_sorted(&dir)));
        }
        if runs[0].0 != 0 || runs[0] != runs[1] || runs[0].2.is_empty() == writes_files {
            failures.push(name.to_string());
        }
    };

    let p = |x: &Path| x.to_str().unwrap().to_string();
    check("gen_scenario", true, &|d| {
        vec!["gen-scenario".into(), "--spec".into(), p(&scenario_spec), "--seed".into(), "11".into(), "--out".into(), p(&d.join("s.json"))]
    });
    let scenario = root.join("scenario.json");
    let (code, _) = run_cli(&["gen-scenario", "--spec", &p(&scenario_spec), "--out", &p(&scenario)]);
    assert_eq!(code, 0);
    for method in ["asce", "bnb", "exhaustive", "lpr", "nomec", "fullmec"] {
        let asce = method == "asce";
        check(&format!("solve_{method}"), asce, &|d| {
            let mut args: Vec<String> = vec![
                "solve".into(), "--scenario".into(), p(&scenario), "--method".into(), method.into(),
                "--seed".into(), "42".into(),
            ];
            if asce {
                args.extend(["--trace".into(), p(&d.join("trace.csv"))]);
            }
            args
        });
    }
    for kind in ["convergence", "size", "lambda"] {
        check(&format!("sweep_{kind}"), true, &|d| {
            vec!["sweep".into(), "--spec".into(), p(&sweep_spec), "--kind".into(), kind.into(), "--out".into(), p(d), "--tag".into(), "t".into()]
        });
    }
    check("compare", true, &|d| {
        vec!["compare".into(), "--spec".into(), p(&sweep_spec), "--out".into(), p(d), "--tag".into(), "t".into(), "--seed".into(), "8".into()]
    });

    let pass = failures.is_empty();
    report(
        8,
        pass,
        &format!("{commands} commands run twice, non-identical or failed: {failures:?}"),
    );
    assert!(pass);
}

const SPOT_TOLERANCE: f64 = 1e-9;

#[test]
fn criterion_9_unit_values() {
    let power = PowerProfile {
        p0_w: 0.8,
        pt_w: 1.258,
        pr_w: 1.181,
    };
    let procs = vec![Processor::local(2e8), Processor::cap(1, 2e9, 1e7, 1e7)];
    let tasks = vec![Task::new(4e6, 2e6, 4e8).unwrap()];
    let s = Scenario::new(tasks, procs, power, Weights::new(0.5, 0.5).unwrap()).unwrap();
    let x = Assignment::from_choices(&[1], 2);
    let t = model::overall_latency(&x, &s).unwrap();
    let e = model::total_energy(&x, &s).unwrap();
    let psi = model::weighted_objective(&x, &s).unwrap();
    let pass = (t - 0.8).abs() <= SPOT_TOLERANCE
        && (e - 0.7394).abs() <= SPOT_TOLERANCE
        && (psi - 0.7697).abs() <= SPOT_TOLERANCE;
    report(9, pass, &format!("T = {t}, E = {e}, objective = {psi}"));
    assert!(pass);
}
