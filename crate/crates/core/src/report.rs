//! Deterministic rendering of results, plus a parseable occupancy-table
//! format.
//!
//! Everything rendered here is a pure function of its inputs — no
//! timestamps, no environment — so two runs with identical configurations
//! and seeds produce byte-identical reports. Probabilities in the occupancy
//! table are printed with Rust's shortest round-trip float formatting and
//! can be read back without loss.

use std::fmt::Write as _;

use serde_json::{json, Value};
use thiserror::Error;

use crate::balance::{BalanceReport, OccupancyDistribution};
use crate::harness::{ArmOutcome, ExperimentOutcome, ResidualCheck, SensitivityControl};
use crate::model::State;
use crate::sim::SimStats;

/// Format marker expected at the head of an occupancy table.
const TABLE_HEADER: &str = "# occupancy-table v1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("not an occupancy table (expected leading `{TABLE_HEADER}`)")]
    NotATable,
    #[error(transparent)]
    Balance(#[from] crate::balance::BalanceError),
}

/// Render an occupancy distribution as a plain-text table that
/// [`parse_occupancy_table`] reads back exactly.
pub fn render_occupancy_table(pi: &OccupancyDistribution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TABLE_HEADER}");
    let _ = writeln!(out, "# classes: {}", pi.classes());
    let _ = writeln!(out, "# states: {}", pi.len());
    let _ = writeln!(out, "# boundary-mass: {:e}", pi.boundary_mass());
    let _ = writeln!(
        out,
        "# columns: {} probability",
        (1..=pi.classes()).map(|i| format!("n{i}")).collect::<Vec<_>>().join(" ")
    );
    for (state, p) in pi.iter() {
        for c in state.counts() {
            let _ = write!(out, "{c} ");
        }
        let _ = writeln!(out, "{p:e}");
    }
    out
}

/// Parse a table produced by [`render_occupancy_table`].
pub fn parse_occupancy_table(text: &str) -> Result<OccupancyDistribution, ReportError> {
    let mut lines = text.lines().enumerate();
    let Some((_, first)) = lines.next() else {
        return Err(ReportError::NotATable);
    };
    if first.trim() != TABLE_HEADER {
        return Err(ReportError::NotATable);
    }
    let mut classes: Option<usize> = None;
    let mut boundary_mass = 0.0_f64;
    let mut weights = std::collections::BTreeMap::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fail = |message: String| ReportError::Malformed { line: idx + 1, message };
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("classes:") {
                classes =
                    Some(v.trim().parse().map_err(|e| fail(format!("bad class count: {e}")))?);
            } else if let Some(v) = rest.strip_prefix("boundary-mass:") {
                boundary_mass =
                    v.trim().parse().map_err(|e| fail(format!("bad boundary mass: {e}")))?;
            }
            continue;
        }
        let Some(classes) = classes else {
            return Err(fail("data row before `# classes:` header".into()));
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != classes + 1 {
            return Err(fail(format!(
                "expected {} columns, found {}",
                classes + 1,
                tokens.len()
            )));
        }
        let counts = tokens[..classes]
            .iter()
            .map(|t| t.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| fail(format!("bad count: {e}")))?;
        let p: f64 = tokens[classes].parse().map_err(|e| fail(format!("bad probability: {e}")))?;
        if !(p.is_finite() && p >= 0.0) {
            return Err(fail(format!("probability out of range: {p}")));
        }
        weights.insert(State::new(counts), p);
    }
    let classes = classes.ok_or(ReportError::NotATable)?;
    Ok(OccupancyDistribution::from_weights(classes, weights)?.with_boundary_mass(boundary_mass))
}

/// Render a partial-balance verification with its verdict at the given
/// interior tolerance.
pub fn render_balance_report(report: &BalanceReport, tolerance: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "partial-balance check");
    let _ = writeln!(out, "equations: {}", report.entries.len());
    let _ = writeln!(
        out,
        "interior max relative residual: {:.3e}",
        report.interior_max_relative
    );
    let _ = writeln!(
        out,
        "overall max relative residual: {:.3e} ({} truncated equations)",
        report.max_relative, report.truncated_entries
    );
    let f = &report.finiteness;
    let _ = writeln!(
        out,
        "arrival-rate mass: {:.6e} (max rate {:.3e}, unseen tail at most {:.3e}) -> {}",
        f.arrival_mass,
        f.max_arrival_rate,
        f.tail_bound,
        if f.pass { "finite" } else { "NOT finite" }
    );

    let mut worst: Vec<_> = report.entries.iter().filter(|e| !e.truncated).collect();
    worst.sort_by(|a, b| b.relative.partial_cmp(&a.relative).expect("finite residuals"));
    if !worst.is_empty() {
        let _ = writeln!(out, "worst interior equations:");
        for entry in worst.iter().take(5) {
            let _ = writeln!(
                out,
                "  {} source {}: outflow {:.6e} inflow {:.6e} relative {:.3e}",
                entry.state, entry.class, entry.outflow, entry.inflow, entry.relative
            );
        }
    }
    let _ = writeln!(
        out,
        "verdict at tolerance {:.1e}: {}",
        tolerance,
        if report.passes(tolerance) { "PASS" } else { "FAIL" }
    );
    out
}

fn residual_summary(check: &ResidualCheck) -> String {
    let failures = check.cells.iter().filter(|c| !c.pass).count();
    format!(
        "{}/{} cells pass, {} skipped",
        check.cells.len() - failures,
        check.cells.len(),
        check.skipped.len()
    )
}

fn render_arm(out: &mut String, arm: &ArmOutcome) {
    let _ = writeln!(
        out,
        "  arm {:<20} seed {:<6} events {:<9} tv {:.6} residuals: {} -> {}",
        arm.name,
        arm.seed,
        arm.events,
        arm.tv_distance,
        residual_summary(&arm.residuals),
        if arm.pass { "pass" } else { "FAIL" }
    );
    for cell in arm.residuals.failures() {
        let _ = writeln!(out, "    failed cell: {cell}");
    }
    if arm.absorbed {
        let _ = writeln!(out, "    run absorbed after {} events", arm.events);
    }
}

/// Render an insensitivity experiment as text.
pub fn render_experiment(outcome: &ExperimentOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "experiment: {}", outcome.name);
    let _ = writeln!(
        out,
        "reference: {} states, boundary mass {:e}, mean counts {}",
        outcome.exact.len(),
        outcome.exact.boundary_mass(),
        render_means(&outcome.exact_mean_counts)
    );
    let _ = writeln!(out, "tv threshold: {}", outcome.tv_max);
    for arm in &outcome.arms {
        render_arm(&mut out, arm);
    }
    let _ = writeln!(out, "overall: {}", if outcome.pass { "PASS" } else { "FAIL" });
    out
}

fn render_means(means: &[f64]) -> String {
    let inner =
        means.iter().map(|m| format!("{m:.6}")).collect::<Vec<_>>().join(", ");
    format!("[{inner}]")
}

/// Render an insensitivity experiment as JSON (stable key order).
pub fn experiment_json(outcome: &ExperimentOutcome) -> Value {
    json!({
        "experiment": outcome.name,
        "pass": outcome.pass,
        "tv-max": outcome.tv_max,
        "reference": {
            "states": outcome.exact.len(),
            "boundary-mass": outcome.exact.boundary_mass(),
            "mean-counts": outcome.exact_mean_counts,
        },
        "arms": outcome.arms.iter().map(|arm| json!({
            "name": arm.name,
            "seed": arm.seed,
            "events": arm.events,
            "absorbed": arm.absorbed,
            "tv-distance": arm.tv_distance,
            "mean-counts": arm.mean_counts,
            "residual-cells": arm.residuals.cells.len(),
            "residual-failures": arm.residuals.failures().map(|c| c.to_string()).collect::<Vec<_>>(),
            "residual-skipped": arm.residuals.skipped.len(),
            "pass": arm.pass,
        })).collect::<Vec<_>>(),
    })
}

/// Render the sensitivity control battery as text.
pub fn render_control(control: &SensitivityControl) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sensitivity control at load {}", control.load);
    let _ = writeln!(
        out,
        "{:<20} {:<15} {:>6} {:>12} {:>12}",
        "discipline", "workload", "scv", "observed", "predicted"
    );
    for run in &control.runs {
        let _ = writeln!(
            out,
            "{:<20} {:<15} {:>6.2} {:>12.4} {:>12.4}",
            run.discipline.to_string(),
            run.workload,
            run.scv,
            run.observed_mean,
            run.predicted_mean
        );
    }
    let _ = writeln!(
        out,
        "fifo gap {:.4} vs predicted {:.4}; sharing gap {:.4}",
        control.fifo_gap, control.predicted_gap, control.sharing_gap
    );
    let _ = writeln!(
        out,
        "sensitivity {}",
        if control.detected { "detected: the harness has power" } else { "NOT detected" }
    );
    out
}

/// Render a single run's summary as text.
pub fn render_sim_summary(stats: &SimStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "simulation summary");
    let _ = writeln!(out, "seed: {}", stats.seed);
    let _ = writeln!(
        out,
        "events: {} (warmup {}){}",
        stats.total_events,
        stats.warmup_events,
        if stats.absorbed { ", absorbed early" } else { "" }
    );
    let _ = writeln!(out, "measured horizon: {:.6}", stats.horizon);
    let _ = writeln!(out, "arrivals: {:?}", stats.arrivals);
    let _ = writeln!(out, "completions: {:?}", stats.completions);
    let _ = writeln!(out, "departures: {:?}", stats.departures);
    let _ = writeln!(
        out,
        "snapshots: {} (arrival profiles {}, departure profiles {})",
        stats.snapshots.len(),
        stats.arrival_profiles.len(),
        stats.departure_profiles.len()
    );
    let _ = writeln!(out, "distinct states: {}", stats.occupancy_time.len());
    if stats.horizon > 0.0 {
        let mut top: Vec<_> = stats.occupancy_time.iter().collect();
        top.sort_by(|a, b| {
            b.1.partial_cmp(a.1).expect("finite weights").then_with(|| a.0.cmp(b.0))
        });
        let _ = writeln!(out, "top states by occupancy:");
        for (state, weight) in top.into_iter().take(10) {
            let _ = writeln!(out, "  {}: {:.6}", state, weight / stats.horizon);
        }
    }
    out
}
