//! Statistical verification: turning raw simulation output into pass/fail
//! evidence.
//!
//! Three kinds of evidence are produced here. Occupancy agreement compares
//! the time-weighted empirical state distribution against the analytic one
//! in total variation. Residual-profile checks compare observed residual
//! workloads — Poisson-clock snapshots, pooled and conditioned on the
//! occupancy state, plus the profiles seen at arrival and departure epochs —
//! against each class's residual-life distribution with Kolmogorov–Smirnov
//! statistics. Finally, a sensitivity control demonstrates that the test
//! battery has power: under a FIFO discipline the same occupancy law is
//! *not* recovered when the workload law changes at fixed mean, and the
//! Pollaczek–Khinchine formula predicts by how much it must move.
//!
//! Snapshot residuals are identically distributed but not independent
//! (consecutive snapshots share individuals), so Kolmogorov–Smirnov
//! thresholds are applied at the 99% point for the few pooled statistics and
//! at the 99.9% point for the many per-cell statistics, where multiple
//! testing would otherwise produce spurious failures.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::balance::{solve_for_spec, BalanceError, OccupancyDistribution};
use crate::dist::{DistError, Equilibrium, Workload};
use crate::model::{
    ClassIndex, Discipline, ModelError, NetworkSpec, RateModel, SingleClassRates, State,
};
use crate::sim::{run, Initialization, SimConfig, SimError, SimStats};

/// Boundary mass above which an analytic solution is too coarsely truncated
/// to serve as a simulation reference.
pub const MAX_REFERENCE_BOUNDARY: f64 = 1e-4;

/// Minimum sample counts below which a statistic is skipped, not failed.
const MIN_POOLED_SAMPLES: usize = 100;
const MIN_CONDITIONAL_SAMPLES: usize = 500;
const MIN_FLUX_SAMPLES: usize = 200;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("measurement window is empty; nothing to estimate from")]
    EmptyMeasurement,
    #[error("reference solution leaves {boundary:.3e} mass outside the truncation; tighten it below {max:.0e}", max = MAX_REFERENCE_BOUNDARY)]
    TruncationTooCoarse { boundary: f64 },
    #[error("load must lie strictly between 0 and 1, got {0}")]
    InvalidLoad(f64),
}

/// Time-weighted empirical occupancy distribution of a run.
pub fn estimate_occupancy(stats: &SimStats) -> Result<OccupancyDistribution, HarnessError> {
    if stats.horizon <= 0.0 || stats.occupancy_time.is_empty() {
        return Err(HarnessError::EmptyMeasurement);
    }
    Ok(OccupancyDistribution::from_weights(stats.classes, stats.occupancy_time.clone())?)
}

/// Two-sided Kolmogorov–Smirnov statistic of a sample against a continuous
/// reference distribution: `sup_x |F_n(x) - F(x)|`.
///
/// Panics on an empty sample; callers gate on sample counts first.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "Kolmogorov-Smirnov statistic of an empty sample");
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("samples are comparable"));
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(((i + 1) as f64 / n - f).max(f - i as f64 / n));
    }
    d
}

/// 99% critical value of the two-sided Kolmogorov–Smirnov statistic for an
/// iid sample of size `n` (asymptotic).
pub fn ks_critical_99(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// 99.9% critical value, used for per-cell checks where hundreds of
/// statistics are examined at once.
pub fn ks_critical_999(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

/// Where a residual statistic was collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// All snapshot residuals of a class, regardless of the occupancy state.
    PooledSnapshot,
    /// Snapshot residuals of a class within one occupancy state.
    ConditionalSnapshot,
    /// Residuals observed at external arrival epochs (fresh individual
    /// excluded).
    ArrivalFlux,
    /// Residuals observed just after departures from the network.
    DepartureFlux,
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CellKind::PooledSnapshot => "pooled-snapshot",
            CellKind::ConditionalSnapshot => "conditional-snapshot",
            CellKind::ArrivalFlux => "arrival-flux",
            CellKind::DepartureFlux => "departure-flux",
        };
        f.write_str(s)
    }
}

/// One Kolmogorov–Smirnov comparison of observed residuals against the
/// class's residual-life distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCheck {
    pub kind: CellKind,
    /// Conditioning occupancy state, for conditional cells.
    pub state: Option<State>,
    pub class: ClassIndex,
    pub samples: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl fmt::Display for CellCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} class {}", self.kind, self.class)?;
        if let Some(state) = &self.state {
            write!(f, " at {state}")?;
        }
        write!(
            f,
            ": D = {:.5} vs {:.5} on {} samples -> {}",
            self.statistic,
            self.threshold,
            self.samples,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// A cell with too few samples to test; recorded but not failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCell {
    pub kind: CellKind,
    pub state: Option<State>,
    pub class: ClassIndex,
    pub samples: usize,
    pub required: usize,
}

/// Residual-profile verdict over all cells of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCheck {
    pub cells: Vec<CellCheck>,
    pub skipped: Vec<SkippedCell>,
    /// Every tested cell passed and at least one was testable.
    pub pass: bool,
}

impl ResidualCheck {
    pub fn failures(&self) -> impl Iterator<Item = &CellCheck> {
        self.cells.iter().filter(|c| !c.pass)
    }
}

/// Compare every observable residual profile of a run against the
/// residual-life distribution of each class.
///
/// Under the insensitivity hypothesis, conditional on the occupancy state
/// the residuals are independent draws from the residual-life law — so the
/// same is true pooled over states, and (by the balance structure) also at
/// arrival and departure epochs. Each family of observations becomes one or
/// more [`CellCheck`]s; undersampled cells are skipped rather than failed.
pub fn residual_profile_check(
    stats: &SimStats,
    spec: &NetworkSpec,
) -> Result<ResidualCheck, HarnessError> {
    let classes = spec.classes();
    let equilibria: Vec<Equilibrium> = spec
        .workloads()
        .iter()
        .map(|w| w.equilibrium())
        .collect::<Result<_, DistError>>()?;
    let mut cells = Vec::new();
    let mut skipped = Vec::new();

    let examine = |kind: CellKind,
                       state: Option<&State>,
                       class: ClassIndex,
                       samples: Vec<f64>,
                       minimum: usize,
                       cells: &mut Vec<CellCheck>,
                       skipped: &mut Vec<SkippedCell>| {
        if samples.len() < minimum {
            skipped.push(SkippedCell {
                kind,
                state: state.cloned(),
                class,
                samples: samples.len(),
                required: minimum,
            });
            return;
        }
        let eq = &equilibria[class - 1];
        let statistic = ks_statistic(&samples, |x| eq.cdf(x));
        let threshold = match kind {
            CellKind::PooledSnapshot => ks_critical_99(samples.len()),
            _ => ks_critical_999(samples.len()),
        };
        cells.push(CellCheck {
            kind,
            state: state.cloned(),
            class,
            samples: samples.len(),
            statistic,
            threshold,
            pass: statistic <= threshold,
        });
    };

    for class in 1..=classes {
        let pooled: Vec<f64> = stats
            .snapshots
            .iter()
            .flat_map(|p| p.residuals[class - 1].iter().copied())
            .collect();
        examine(
            CellKind::PooledSnapshot,
            None,
            class,
            pooled,
            MIN_POOLED_SAMPLES,
            &mut cells,
            &mut skipped,
        );
    }

    let mut by_state: BTreeMap<&State, Vec<usize>> = BTreeMap::new();
    for (idx, profile) in stats.snapshots.iter().enumerate() {
        by_state.entry(&profile.state).or_default().push(idx);
    }
    for (state, indices) in &by_state {
        for class in 1..=classes {
            if state.count(class) == 0 {
                continue;
            }
            let samples: Vec<f64> = indices
                .iter()
                .flat_map(|&i| stats.snapshots[i].residuals[class - 1].iter().copied())
                .collect();
            examine(
                CellKind::ConditionalSnapshot,
                Some(state),
                class,
                samples,
                MIN_CONDITIONAL_SAMPLES,
                &mut cells,
                &mut skipped,
            );
        }
    }

    for (kind, profiles) in [
        (CellKind::ArrivalFlux, &stats.arrival_profiles),
        (CellKind::DepartureFlux, &stats.departure_profiles),
    ] {
        for class in 1..=classes {
            let samples: Vec<f64> =
                profiles.iter().flat_map(|p| p.residuals[class - 1].iter().copied()).collect();
            examine(kind, None, class, samples, MIN_FLUX_SAMPLES, &mut cells, &mut skipped);
        }
    }

    let pass = !cells.is_empty() && cells.iter().all(|c| c.pass);
    Ok(ResidualCheck { cells, skipped, pass })
}

/// One workload assignment to push through the same network.
#[derive(Debug, Clone)]
pub struct ExperimentArm {
    pub name: String,
    pub workloads: Vec<Workload>,
}

/// A full insensitivity experiment: one network, one analytic reference,
/// several workload arms that should all reproduce it.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub name: String,
    /// The network under test; its workloads are replaced per arm.
    pub baseline: NetworkSpec,
    /// Truncation for the analytic reference (per class).
    pub truncation: Vec<u32>,
    /// Arm `i` runs with seed `base_seed + i`.
    pub base_seed: u64,
    pub events: u64,
    /// Runs ending (absorbed) below this many events fail their arm.
    pub min_events: u64,
    pub tv_max: f64,
    pub snapshot_interval: u64,
    pub profile_interval: u64,
    pub arms: Vec<ExperimentArm>,
}

impl ExperimentPlan {
    pub fn new(
        name: impl Into<String>,
        baseline: NetworkSpec,
        truncation: Vec<u32>,
        arms: Vec<ExperimentArm>,
    ) -> ExperimentPlan {
        let events = 1_000_000;
        ExperimentPlan {
            name: name.into(),
            baseline,
            truncation,
            base_seed: 42,
            events,
            min_events: events / 2,
            tv_max: 0.02,
            snapshot_interval: 50,
            profile_interval: 10,
            arms,
        }
    }
}

/// What one arm produced.
#[derive(Debug, Clone)]
pub struct ArmOutcome {
    pub name: String,
    pub seed: u64,
    pub events: u64,
    pub absorbed: bool,
    /// Total variation between the empirical occupancy law and the analytic
    /// reference.
    pub tv_distance: f64,
    pub mean_counts: Vec<f64>,
    pub residuals: ResidualCheck,
    pub pass: bool,
}

/// Outcome of [`insensitivity_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub name: String,
    pub exact: OccupancyDistribution,
    pub exact_mean_counts: Vec<f64>,
    pub tv_max: f64,
    pub arms: Vec<ArmOutcome>,
    pub pass: bool,
}

/// Solve the network once, then push every workload arm through it and
/// check that occupancy and residual profiles agree with the analytic law.
///
/// Runs start from the analytic occupancy law with residual-life residuals
/// (the stationary state under the hypothesis being tested), so no warmup is
/// discarded: if the hypothesis were false, starting there would not make
/// the time averages match — the process would drift away and the
/// comparison would fail, which is exactly the point of the test.
pub fn insensitivity_experiment(plan: &ExperimentPlan) -> Result<ExperimentOutcome, HarnessError> {
    let exact = solve_for_spec(&plan.baseline, &plan.truncation)?;
    if exact.boundary_mass() > MAX_REFERENCE_BOUNDARY {
        return Err(HarnessError::TruncationTooCoarse { boundary: exact.boundary_mass() });
    }
    let mut arms = Vec::with_capacity(plan.arms.len());
    for (idx, arm) in plan.arms.iter().enumerate() {
        let spec = plan.baseline.with_workloads(arm.workloads.clone())?;
        let mut config = SimConfig::new(
            plan.base_seed + idx as u64,
            plan.events,
            Initialization::Stationary(exact.clone()),
        );
        config.snapshot_interval = plan.snapshot_interval;
        config.profile_interval = plan.profile_interval;
        let stats = run(&spec, &config)?;
        let empirical = estimate_occupancy(&stats)?;
        let tv_distance = empirical.tv_distance(&exact);
        let residuals = residual_profile_check(&stats, &spec)?;
        let pass = tv_distance <= plan.tv_max
            && residuals.pass
            && stats.total_events >= plan.min_events
            && !stats.absorbed;
        arms.push(ArmOutcome {
            name: arm.name.clone(),
            seed: config.seed,
            events: stats.total_events,
            absorbed: stats.absorbed,
            tv_distance,
            mean_counts: empirical.mean_counts(),
            residuals,
            pass,
        });
    }
    let pass = arms.iter().all(|a| a.pass);
    Ok(ExperimentOutcome {
        name: plan.name.clone(),
        exact_mean_counts: exact.mean_counts(),
        exact,
        tv_max: plan.tv_max,
        arms,
        pass,
    })
}

/// Mean number in system of a single-server FIFO queue with Poisson
/// arrivals at the given load and unit-mean workloads with squared
/// coefficient of variation `scv` (Pollaczek–Khinchine).
pub fn pk_mean_in_system(load: f64, scv: f64) -> f64 {
    load + load * load * (1.0 + scv) / (2.0 * (1.0 - load))
}

/// One run of the sensitivity control battery.
#[derive(Debug, Clone)]
pub struct ControlRun {
    pub discipline: Discipline,
    pub workload: String,
    pub scv: f64,
    pub observed_mean: f64,
    pub predicted_mean: f64,
    pub events: u64,
}

/// Outcome of [`sensitivity_control`]: evidence that the harness can tell
/// a sensitive discipline from an insensitive one.
#[derive(Debug, Clone)]
pub struct SensitivityControl {
    pub load: f64,
    /// FIFO/exponential, FIFO/deterministic, sharing/exponential,
    /// sharing/deterministic — in that order.
    pub runs: Vec<ControlRun>,
    /// Observed |mean gap| between the two FIFO runs.
    pub fifo_gap: f64,
    /// Observed |mean gap| between the two processor-sharing runs.
    pub sharing_gap: f64,
    /// The gap Pollaczek–Khinchine predicts for FIFO.
    pub predicted_gap: f64,
    /// FIFO moved by at least half the predicted gap while sharing stayed
    /// within a quarter of it.
    pub detected: bool,
}

/// Run the same single-server queue under FIFO and processor sharing, with
/// exponential and deterministic unit-mean workloads, and check that the
/// occupancy mean moves under FIFO (by the Pollaczek–Khinchine amount) but
/// not under sharing. A harness that cannot detect this sensitivity would
/// pass insensitivity experiments vacuously.
pub fn sensitivity_control(
    load: f64,
    events: u64,
    seed: u64,
) -> Result<SensitivityControl, HarnessError> {
    use crate::dist::Family;
    if !(load > 0.0 && load < 1.0) {
        return Err(HarnessError::InvalidLoad(load));
    }
    let capacity = 400;
    let rates = RateModel::SingleClass(SingleClassRates {
        arrivals: vec![load; capacity],
        services: vec![1.0; capacity],
    });
    let exponential = Workload::unit(Family::Exponential { rate: 1.0 })?;
    let deterministic = Workload::unit(Family::Deterministic { value: 1.0 })?;
    let battery = [
        (Discipline::Fifo, "exponential", exponential.clone()),
        (Discipline::Fifo, "deterministic", deterministic.clone()),
        (Discipline::ProcessorSharing, "exponential", exponential),
        (Discipline::ProcessorSharing, "deterministic", deterministic),
    ];

    let mut runs = Vec::with_capacity(battery.len());
    for (idx, (discipline, name, workload)) in battery.into_iter().enumerate() {
        let spec = NetworkSpec::new(1, rates.clone(), discipline, vec![workload.clone()])?;
        // Empty start plus the default 10% warmup: FIFO has no product-form
        // stationary law to start from, so both disciplines burn in the same
        // way for comparability.
        let mut config =
            SimConfig::new(seed + idx as u64, events, Initialization::Empty);
        config.snapshot_interval = 0;
        config.profile_interval = 0;
        let stats = run(&spec, &config)?;
        let observed_mean = estimate_occupancy(&stats)?.mean_total();
        let predicted_mean = match discipline {
            Discipline::Fifo => pk_mean_in_system(load, workload.scv()),
            _ => load / (1.0 - load),
        };
        runs.push(ControlRun {
            discipline,
            workload: name.to_string(),
            scv: workload.scv(),
            observed_mean,
            predicted_mean,
            events: stats.total_events,
        });
    }

    let fifo_gap = (runs[0].observed_mean - runs[1].observed_mean).abs();
    let sharing_gap = (runs[2].observed_mean - runs[3].observed_mean).abs();
    let predicted_gap = (runs[0].predicted_mean - runs[1].predicted_mean).abs();
    let detected = fifo_gap > predicted_gap / 2.0 && sharing_gap < predicted_gap / 4.0;
    Ok(SensitivityControl { load, runs, fifo_gap, sharing_gap, predicted_gap, detected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Family;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ks_statistic_matches_a_hand_computation() {
        // Ordered sample 0.1, 0.5, 0.9 against U(0,1): the largest gap is
        // max(1/3 - 0.1, 0.9 - 2/3) = 7/30 at the ends.
        let d = ks_statistic(&[0.5, 0.1, 0.9], |x| x.clamp(0.0, 1.0));
        assert_abs_diff_eq!(d, 7.0 / 30.0, epsilon = 1e-15);
    }

    #[test]
    fn ks_accepts_true_law_and_rejects_shifted_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples: Vec<f64> = (0..5_000).map(|_| rng.random::<f64>()).collect();
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        let d = ks_statistic(&samples, uniform);
        assert!(d < ks_critical_99(samples.len()), "uniform sample rejected: D = {d}");

        let shifted: Vec<f64> = samples.iter().map(|x| x.powf(1.2)).collect();
        let d = ks_statistic(&shifted, uniform);
        assert!(d > ks_critical_99(samples.len()), "biased sample accepted: D = {d}");
    }

    #[test]
    fn critical_values_scale_with_the_sample() {
        assert_abs_diff_eq!(ks_critical_99(10_000), 0.0163, epsilon = 1e-12);
        assert!(ks_critical_999(10_000) > ks_critical_99(10_000));
    }

    #[test]
    fn pollaczek_khinchine_frozen_values() {
        assert_abs_diff_eq!(pk_mean_in_system(0.8, 1.0), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pk_mean_in_system(0.8, 0.0), 2.4, epsilon = 1e-12);
        assert_abs_diff_eq!(pk_mean_in_system(0.5, 1.0), 1.0, epsilon = 1e-12);
    }

    fn single_server(load: f64, discipline: Discipline, family: Family) -> NetworkSpec {
        NetworkSpec::new(
            1,
            RateModel::SingleClass(SingleClassRates {
                arrivals: vec![load; 300],
                services: vec![1.0; 300],
            }),
            discipline,
            vec![Workload::unit(family).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn residual_profiles_pass_for_sharing_and_fail_for_fifo() {
        use crate::sim::run;
        // Processor sharing with deterministic workloads is insensitive: all
        // residual families should look like the residual-life law.
        let spec = single_server(0.7, Discipline::ProcessorSharing, Family::Deterministic {
            value: 1.0,
        });
        let pi = solve_for_spec(&spec, &[300]).unwrap();
        let mut config = SimConfig::new(17, 150_000, Initialization::Stationary(pi.clone()));
        config.snapshot_interval = 20;
        let stats = run(&spec, &config).unwrap();
        let check = residual_profile_check(&stats, &spec).unwrap();
        assert!(
            check.pass,
            "sharing run failed: {:?}",
            check.failures().collect::<Vec<_>>()
        );
        assert!(check.cells.iter().any(|c| c.kind == CellKind::ConditionalSnapshot));

        // FIFO with the same workloads is sensitive: individuals waiting in
        // line still carry their full deterministic workload, which no
        // residual-life law explains.
        let spec = single_server(0.7, Discipline::Fifo, Family::Deterministic { value: 1.0 });
        let mut config = SimConfig::new(18, 150_000, Initialization::Empty);
        config.snapshot_interval = 20;
        let stats = run(&spec, &config).unwrap();
        let check = residual_profile_check(&stats, &spec).unwrap();
        assert!(!check.pass, "FIFO residual profiles passed but should not have");
    }

    #[test]
    fn empirical_occupancy_requires_a_window() {
        let stats = SimStats {
            seed: 0,
            classes: 1,
            occupancy_time: BTreeMap::new(),
            horizon: 0.0,
            snapshots: vec![],
            arrival_profiles: vec![],
            departure_profiles: vec![],
            arrivals: vec![0],
            completions: vec![0],
            departures: vec![0],
            total_events: 0,
            warmup_events: 0,
            absorbed: false,
            final_clock: 0.0,
        };
        assert!(matches!(
            estimate_occupancy(&stats),
            Err(HarnessError::EmptyMeasurement)
        ));
    }

    #[test]
    fn small_insensitivity_experiment_passes() {
        let baseline = single_server(0.5, Discipline::ProcessorSharing, Family::Exponential {
            rate: 1.0,
        });
        let plan = ExperimentPlan {
            events: 120_000,
            min_events: 100_000,
            snapshot_interval: 25,
            ..ExperimentPlan::new(
                "single-server-sharing",
                baseline,
                vec![300],
                vec![
                    ExperimentArm {
                        name: "exponential".into(),
                        workloads: vec![Workload::unit(Family::Exponential { rate: 1.0 }).unwrap()],
                    },
                    ExperimentArm {
                        name: "two-point-erlang".into(),
                        workloads: vec![Workload::unit(Family::Erlang { shape: 2, rate: 2.0 })
                            .unwrap()],
                    },
                ],
            )
        };
        let outcome = insensitivity_experiment(&plan).unwrap();
        for arm in &outcome.arms {
            assert!(
                arm.pass,
                "arm {} failed: tv = {}, residual failures: {:?}",
                arm.name,
                arm.tv_distance,
                arm.residuals.failures().collect::<Vec<_>>()
            );
            assert_abs_diff_eq!(arm.mean_counts[0], 1.0, epsilon = 0.15);
        }
        assert!(outcome.pass);
        assert_abs_diff_eq!(outcome.exact_mean_counts[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sensitivity_control_detects_fifo_dependence() {
        let control = sensitivity_control(0.8, 250_000, 5).unwrap();
        assert!(control.detected, "gaps: fifo {}, sharing {}", control.fifo_gap, control.sharing_gap);
        assert_abs_diff_eq!(control.predicted_gap, 1.6, epsilon = 1e-12);
        for run in &control.runs {
            assert_abs_diff_eq!(run.observed_mean, run.predicted_mean, epsilon = 0.6);
        }
    }

    #[test]
    fn rejects_degenerate_loads() {
        assert!(matches!(sensitivity_control(1.2, 100, 0), Err(HarnessError::InvalidLoad(_))));
    }
}
