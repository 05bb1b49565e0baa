//! Acceptance battery: nine end-to-end criteria covering the analytic
//! solvers, the balance verifier, the simulator, and the statistical
//! harness. Each test prints one `criterion N: PASS/FAIL` line and carries a
//! deterministic report with the underlying numbers.
//!
//! All criteria are computed once (fixed seeds, fixed budgets) and shared;
//! the final criterion recomputes everything from scratch and demands
//! byte-identical reports.

use once_cell::sync::Lazy;

use psnet_core::balance::{ctmc_oracle, solve_for_spec, verify_partial_balance};
use psnet_core::dist::{Family, Workload};
use psnet_core::harness::{
    insensitivity_experiment, ks_statistic, sensitivity_control, CellKind, ExperimentArm,
    ExperimentOutcome, ExperimentPlan,
};
use psnet_core::model::{
    AdmissibleSet, BalanceFunction, CapacityConstraint, Discipline, LossRates, NetworkSpec,
    RateModel, RoutingMatrix, SingleClassRates, State, WhittleRates,
};
use psnet_core::sim::{run_modified, Initialization, SimConfig};

use std::fmt::Write as _;

struct Criterion {
    name: &'static str,
    pass: bool,
    report: String,
}

fn unit(family: Family) -> Workload {
    Workload::unit(family).expect("acceptance workloads are valid")
}

fn exponential() -> Workload {
    unit(Family::Exponential { rate: 1.0 })
}

fn deterministic() -> Workload {
    unit(Family::Deterministic { value: 1.0 })
}

/// Three parallel unit-rate servers with blocking, offered load 2.
fn blocking_spec() -> NetworkSpec {
    NetworkSpec::new(
        1,
        RateModel::SingleClass(SingleClassRates {
            arrivals: vec![2.0; 3],
            services: vec![1.0, 2.0, 3.0],
        }),
        Discipline::ProcessorSharing,
        vec![exponential()],
    )
    .expect("blocking spec is sound")
}

/// Two stations in series at utilization one half each.
fn tandem_spec() -> NetworkSpec {
    NetworkSpec::new(
        2,
        RateModel::Whittle(WhittleRates {
            balance: BalanceFunction::Geometric { factors: vec![0.5, 0.5] },
            routing: RoutingMatrix::new(vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
            ]),
            exterior_rate: 1.0,
        }),
        Discipline::ProcessorSharing,
        vec![exponential(), exponential()],
    )
    .expect("tandem spec is sound")
}

/// Two classes sharing four resource units (class 2 takes two per head).
fn shared_loss_spec() -> NetworkSpec {
    NetworkSpec::new(
        2,
        RateModel::Loss(LossRates {
            admissible: AdmissibleSet::Linear(vec![CapacityConstraint {
                coefficients: vec![1.0, 2.0],
                limit: 4.0,
            }]),
            arrival_rates: vec![1.0, 1.0],
            service_rates: vec![1.0, 1.0],
        }),
        Discipline::ProcessorSharing,
        vec![exponential(), exponential()],
    )
    .expect("shared loss spec is sound")
}

/// Single server at load one half, newest-first preemptive service.
fn stack_spec() -> NetworkSpec {
    NetworkSpec::new(
        1,
        RateModel::SingleClass(SingleClassRates {
            arrivals: vec![0.5; 200],
            services: vec![1.0; 200],
        }),
        Discipline::LifoPreemptiveResume,
        vec![exponential()],
    )
    .expect("stack spec is sound")
}

fn arm(name: &str, workloads: Vec<Workload>) -> ExperimentArm {
    ExperimentArm { name: name.into(), workloads }
}

fn describe_arms(out: &mut String, outcome: &ExperimentOutcome) {
    for arm in &outcome.arms {
        let _ = writeln!(
            out,
            "  arm {}: tv {:.6} (limit {}), events {}, residual cells {} ({} failed, {} skipped)",
            arm.name,
            arm.tv_distance,
            outcome.tv_max,
            arm.events,
            arm.residuals.cells.len(),
            arm.residuals.failures().count(),
            arm.residuals.skipped.len(),
        );
        for cell in arm.residuals.failures() {
            let _ = writeln!(out, "    failed: {cell}");
        }
    }
}

/// Criteria 1 and 2 share one experiment over the blocking network: four
/// workload families at offered load 2 against the truncated-Poisson law
/// (3, 6, 6, 4)/19.
fn blocking_experiment() -> ExperimentOutcome {
    let plan = ExperimentPlan {
        tv_max: 0.01,
        ..ExperimentPlan::new(
            "blocking-three-servers",
            blocking_spec(),
            vec![3],
            vec![
                arm("exponential", vec![exponential()]),
                arm("deterministic", vec![deterministic()]),
                arm(
                    "hyper-exponential",
                    vec![unit(Family::HyperExponential {
                        weights: vec![1.0 / 3.0, 2.0 / 3.0],
                        rates: vec![0.5, 2.0],
                    })],
                ),
                arm("erlang-2", vec![unit(Family::Erlang { shape: 2, rate: 2.0 })]),
            ],
        )
    };
    insensitivity_experiment(&plan).expect("blocking experiment runs")
}

fn criterion_1(outcome: &ExperimentOutcome) -> Criterion {
    let mut report = String::new();
    // Pin the analytic law to the hand-computed truncated Poisson values.
    let hand = [3.0 / 19.0, 6.0 / 19.0, 6.0 / 19.0, 4.0 / 19.0];
    let mut law_error = 0.0_f64;
    for (k, h) in hand.iter().enumerate() {
        let p = outcome.exact.probability(&State::new(vec![k as u32]));
        law_error = law_error.max((p - h).abs());
    }
    let _ = writeln!(
        report,
        "analytic law vs hand values (3,6,6,4)/19: max deviation {law_error:.3e}"
    );
    describe_arms(&mut report, outcome);
    let occupancy_ok = outcome
        .arms
        .iter()
        .all(|a| a.tv_distance <= outcome.tv_max && !a.absorbed && a.events >= 500_000);
    let pass = occupancy_ok && law_error < 1e-12;
    Criterion { name: "blocking-network occupancy is workload-insensitive", pass, report }
}

fn criterion_2(outcome: &ExperimentOutcome) -> Criterion {
    let mut report = String::new();
    let mut pass = true;
    for arm in &outcome.arms {
        let pooled: Vec<_> = arm
            .residuals
            .cells
            .iter()
            .filter(|c| c.kind == CellKind::PooledSnapshot)
            .collect();
        for cell in &pooled {
            let _ = writeln!(
                report,
                "  arm {}: pooled D {:.5} vs {:.5} on {} samples",
                arm.name, cell.statistic, cell.threshold, cell.samples
            );
            if !(cell.pass && cell.samples >= 10_000) {
                pass = false;
            }
        }
        if pooled.is_empty() || !arm.residuals.pass {
            pass = false;
        }
        let _ = writeln!(
            report,
            "  arm {}: all {} residual cells pass: {}",
            arm.name,
            arm.residuals.cells.len(),
            arm.residuals.pass
        );
    }
    Criterion { name: "snapshot residuals follow the residual-life law", pass, report }
}

fn criterion_3() -> Criterion {
    let spec = tandem_spec();
    let mut report = String::new();

    // Analytic side: the solved law is the product of geometrics and
    // satisfies partial balance on the interior of a generous box.
    let pi = solve_for_spec(&spec, &[30, 30]).expect("tandem solves");
    let mut product_error = 0.0_f64;
    let norm = (1.0 - 0.5_f64.powi(31)).powi(2);
    for (state, p) in pi.iter() {
        let expected = 0.25 * 0.5_f64.powi(state.total() as i32) / norm;
        product_error = product_error.max((p - expected).abs());
    }
    let balance = verify_partial_balance(&spec, &pi).expect("balance check runs");
    let _ = writeln!(report, "product-form deviation: {product_error:.3e}");
    let _ = writeln!(
        report,
        "interior max relative residual: {:.3e} over {} equations ({} truncated)",
        balance.interior_max_relative,
        balance.entries.len(),
        balance.truncated_entries
    );
    let _ = writeln!(
        report,
        "arrival-rate mass {:.6e}, finite: {}",
        balance.finiteness.arrival_mass, balance.finiteness.pass
    );
    let analytic_ok = product_error < 1e-8
        && balance.interior_max_relative < 1e-12
        && balance.finiteness.pass;

    // Simulation side: three workload assignments reproduce the law.
    let plan = ExperimentPlan {
        events: 2_000_000,
        min_events: 1_000_000,
        ..ExperimentPlan::new(
            "tandem",
            spec,
            vec![30, 30],
            vec![
                arm("exponential", vec![exponential(), exponential()]),
                arm("deterministic", vec![deterministic(), deterministic()]),
                arm(
                    "pareto-uniform",
                    vec![
                        unit(Family::Pareto { shape: 2.5, scale: 1.0 }),
                        unit(Family::Uniform { lo: 0.0, hi: 2.0 }),
                    ],
                ),
            ],
        )
    };
    let outcome = insensitivity_experiment(&plan).expect("tandem experiment runs");
    describe_arms(&mut report, &outcome);
    let pass = analytic_ok && outcome.pass;
    Criterion { name: "tandem network satisfies partial balance and is insensitive", pass, report }
}

fn criterion_4() -> Criterion {
    let spec = shared_loss_spec();
    let mut report = String::new();

    let pi = solve_for_spec(&spec, &[4, 2]).expect("loss network solves");
    let balance = verify_partial_balance(&spec, &pi).expect("balance check runs");
    let _ = writeln!(
        report,
        "states {}, max relative residual {:.3e}, truncated {}",
        pi.len(),
        balance.max_relative,
        balance.truncated_entries
    );
    let analytic_ok = balance.max_relative < 1e-12 && balance.truncated_entries == 0;

    let plan = ExperimentPlan {
        tv_max: 0.01,
        ..ExperimentPlan::new(
            "shared-constraint-loss",
            spec,
            vec![4, 2],
            vec![
                arm("exponential", vec![exponential(), exponential()]),
                arm(
                    "deterministic-uniform",
                    vec![deterministic(), unit(Family::Uniform { lo: 0.0, hi: 2.0 })],
                ),
            ],
        )
    };
    let outcome = insensitivity_experiment(&plan).expect("loss experiment runs");
    describe_arms(&mut report, &outcome);
    let pass = analytic_ok && outcome.pass;
    Criterion {
        name: "constrained loss network balances in detail and is insensitive",
        pass,
        report,
    }
}

fn criterion_5() -> Criterion {
    let mut report = String::new();
    let mut pass = true;
    let cases: [(&str, NetworkSpec, Vec<u32>); 3] = [
        ("blocking", blocking_spec(), vec![3]),
        ("tandem", tandem_spec(), vec![12, 12]),
        ("shared-loss", shared_loss_spec(), vec![4, 2]),
    ];
    for (name, spec, bounds) in cases {
        let closed = solve_for_spec(&spec, &bounds).expect("closed form solves");
        let oracle = ctmc_oracle(&spec, &bounds).expect("oracle solves");
        let mut sup = 0.0_f64;
        for (state, p) in closed.iter() {
            sup = sup.max((p - oracle.probability(state)).abs());
        }
        for (state, q) in oracle.iter() {
            sup = sup.max((q - closed.probability(state)).abs());
        }
        let tolerance = 1e-10 + 10.0 * closed.boundary_mass();
        let _ = writeln!(
            report,
            "  {name}: sup deviation {sup:.3e} vs tolerance {tolerance:.3e} ({} states)",
            closed.len()
        );
        if sup > tolerance {
            pass = false;
        }
    }
    Criterion { name: "dense generator oracle agrees with the closed forms", pass, report }
}

fn criterion_6() -> Criterion {
    let control = sensitivity_control(0.8, 1_000_000, 42).expect("control battery runs");
    let mut report = String::new();
    let mut pass = control.detected;
    for run in &control.runs {
        let error = (run.observed_mean - run.predicted_mean).abs();
        let _ = writeln!(
            report,
            "  {} / {}: observed {:.4}, predicted {:.4} (|error| {:.4})",
            run.discipline, run.workload, run.observed_mean, run.predicted_mean, error
        );
        if error > 0.2 {
            pass = false;
        }
    }
    let _ = writeln!(
        report,
        "fifo gap {:.4} (predicted {:.4}), sharing gap {:.4}, detected: {}",
        control.fifo_gap, control.predicted_gap, control.sharing_gap, control.detected
    );
    Criterion {
        name: "the harness detects genuine sensitivity under FIFO",
        pass,
        report,
    }
}

fn criterion_7() -> Criterion {
    let plan = ExperimentPlan {
        tv_max: 0.01,
        ..ExperimentPlan::new(
            "stack-preemptive",
            stack_spec(),
            vec![200],
            vec![
                arm("exponential", vec![exponential()]),
                arm("deterministic", vec![deterministic()]),
            ],
        )
    };
    let outcome = insensitivity_experiment(&plan).expect("stack experiment runs");
    let mut report = String::new();
    // Sanity-pin the analytic law: geometric with ratio one half.
    let p0 = outcome.exact.probability(&State::new(vec![0]));
    let _ = writeln!(report, "analytic P(empty) = {:.12} (expect 0.5)", p0);
    describe_arms(&mut report, &outcome);
    let pass = outcome.pass && (p0 - 0.5).abs() < 1e-9;
    Criterion {
        name: "newest-first preemptive service is insensitive",
        pass,
        report,
    }
}

fn criterion_8() -> Criterion {
    // Pin the occupancy at two individuals with unit total service rate and
    // deterministic unit workloads; every replacement slot then behaves as a
    // stationary sawtooth whose Poisson-sampled residual is uniform.
    let spec = NetworkSpec::new(
        1,
        RateModel::SingleClass(SingleClassRates {
            arrivals: vec![0.0, 0.0],
            services: vec![1.0, 1.0],
        }),
        Discipline::ProcessorSharing,
        vec![deterministic()],
    )
    .expect("pinned spec is sound");
    let mut config = SimConfig::new(1234, 600_000, Initialization::Empty);
    config.snapshot_interval = 50;
    let stats = run_modified(&spec, &State::new(vec![2]), &config).expect("modified run");

    let mut report = String::new();
    let _ = writeln!(report, "snapshots: {}", stats.snapshots.len());
    let mut pass = stats.snapshots.len() >= 10_000;
    for slot in 0..2 {
        let samples: Vec<f64> =
            stats.snapshots.iter().map(|p| p.residuals[0][slot]).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        let _ = writeln!(
            report,
            "  slot {slot}: uniform KS {d:.5} on {} samples (limit 0.02)",
            samples.len()
        );
        if d >= 0.02 {
            pass = false;
        }
    }
    Criterion {
        name: "pinned-occupancy replacement slots hold uniform residuals",
        pass,
        report,
    }
}

fn compute_all() -> Vec<Criterion> {
    let blocking = blocking_experiment();
    vec![
        criterion_1(&blocking),
        criterion_2(&blocking),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ]
}

static ALL: Lazy<Vec<Criterion>> = Lazy::new(compute_all);

fn check(index: usize) {
    let criterion = &ALL[index - 1];
    println!(
        "criterion {}: {} - {}",
        index,
        if criterion.pass { "PASS" } else { "FAIL" },
        criterion.name
    );
    for line in criterion.report.lines() {
        println!("    {line}");
    }
    assert!(criterion.pass, "criterion {index} failed:\n{}", criterion.report);
}

#[test]
fn criterion_1_blocking_occupancy_is_insensitive() {
    check(1);
}

#[test]
fn criterion_2_snapshot_residuals_follow_the_residual_life_law() {
    check(2);
}

#[test]
fn criterion_3_tandem_partial_balance_and_insensitivity() {
    check(3);
}

#[test]
fn criterion_4_constrained_loss_detailed_balance_and_insensitivity() {
    check(4);
}

#[test]
fn criterion_5_oracle_agrees_with_closed_forms() {
    check(5);
}

#[test]
fn criterion_6_fifo_sensitivity_is_detected() {
    check(6);
}

#[test]
fn criterion_7_newest_first_preemption_is_insensitive() {
    check(7);
}

#[test]
fn criterion_8_pinned_replacement_slots_are_uniform() {
    check(8);
}

#[test]
fn criterion_9_everything_is_reproducible() {
    let again = compute_all();
    let mut pass = ALL.len() == again.len();
    let mut report = String::new();
    for (index, (a, b)) in ALL.iter().zip(&again).enumerate() {
        let same = a.report == b.report && a.pass == b.pass;
        if !same {
            let _ = writeln!(
                report,
                "criterion {} diverged between computations:\nfirst:\n{}\nsecond:\n{}",
                index + 1,
                a.report,
                b.report
            );
            pass = false;
        }
    }
    println!(
        "criterion 9: {} - identical seeds reproduce every report byte-for-byte",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion 9 failed:\n{report}");
}
