//! Stationary occupancy distributions: closed-form solvers for the model
//! families that admit one, a dense CTMC oracle for cross-checking, and a
//! verifier for the partial balance equations that characterize insensitive
//! networks.
//!
//! Partial balance requires, for every state `n` and every source index
//! `i` (exterior or class), that the probability flux out of `n` attributable
//! to `i`-movements equals the flux into `n` from states reachable by undoing
//! such a movement:
//!
//! ```text
//! pi(n) Σ_j rate(n, i, j)  =  Σ_j pi(n - e_i + e_j) rate(n - e_i + e_j, j, i)
//! ```
//!
//! with the right side read as zero when class `i` is empty in `n`. This is a
//! strictly stronger property than global balance; the stationary law of a
//! network is insensitive to workload distributions beyond their means
//! exactly when it satisfies it, which is what makes the verifier the
//! analytic half of every experiment in [`crate::harness`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::dist::positive_uniform;
use crate::model::{
    enumerate_box, ClassIndex, LossRates, ModelError, NetworkSpec, RateModel, RoutingMatrix,
    SingleClassRates, State, WhittleRates, EXTERIOR,
};

/// Largest box the dense CTMC oracle will factorize (LU is `O(S^3)`).
pub const MAX_DENSE_STATES: usize = 5000;

#[derive(Debug, Error, PartialEq)]
pub enum BalanceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unnormalized mass overflows; the stationary measure diverges on this range")]
    DivergentMass,
    #[error("total mass is zero; nothing to normalize")]
    ZeroMass,
    #[error("linear system is singular")]
    SingularSystem,
    #[error("traffic equations give a non-positive rate {value} for class {class}")]
    NonpositiveTraffic { class: ClassIndex, value: f64 },
    #[error("traffic solution is inconsistent: exterior rate {exterior} vs returned flow {returned}")]
    InconsistentTraffic { exterior: f64, returned: f64 },
    #[error("exterior arrival rate is zero; the network is closed and has no unique open-network solution")]
    ClosedNetwork,
    #[error("truncation vector has {got} entries, the network has {expected} classes")]
    TruncationMismatch { got: usize, expected: usize },
    #[error("box of {states} states exceeds the dense-solver cap of {max}")]
    BoxTooLarge { states: usize, max: usize },
    #[error("chain is reducible ({closed_classes} closed communicating classes); stationary law is not unique")]
    NotUniquelyErgodic { closed_classes: usize },
    #[error("solver produced a significantly negative probability {value}")]
    NegativeProbability { value: f64 },
    #[error("admissible set is empty")]
    EmptyAdmissibleSet,
}

/// A probability distribution over occupancy states, together with the mass
/// sitting on states from which the model can leave the solved support
/// (`boundary_mass`). For models whose reachable space is genuinely finite
/// the boundary mass is exactly zero; for truncated infinite models it bounds
/// the distortion introduced by the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyDistribution {
    classes: usize,
    probs: BTreeMap<State, f64>,
    boundary_mass: f64,
}

impl OccupancyDistribution {
    pub(crate) fn from_weights(
        classes: usize,
        weights: BTreeMap<State, f64>,
    ) -> Result<OccupancyDistribution, BalanceError> {
        let total: f64 = weights.values().sum();
        if !total.is_finite() {
            return Err(BalanceError::DivergentMass);
        }
        if total <= 0.0 {
            return Err(BalanceError::ZeroMass);
        }
        let probs = weights.into_iter().map(|(n, w)| (n, w / total)).collect();
        Ok(OccupancyDistribution { classes, probs, boundary_mass: 0.0 })
    }

    pub(crate) fn with_boundary_mass(mut self, boundary_mass: f64) -> OccupancyDistribution {
        self.boundary_mass = boundary_mass;
        self
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn probability(&self, n: &State) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// States of the solved support in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&State, f64)> {
        self.probs.iter().map(|(n, &p)| (n, p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn boundary_mass(&self) -> f64 {
        self.boundary_mass
    }

    /// Mean number of individuals per class.
    pub fn mean_counts(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.classes];
        for (n, p) in self.iter() {
            for (m, &c) in means.iter_mut().zip(n.counts()) {
                *m += p * f64::from(c);
            }
        }
        means
    }

    /// Mean total population.
    pub fn mean_total(&self) -> f64 {
        self.mean_counts().iter().sum()
    }

    /// Total variation distance, `½ Σ |p - q|` over the union of supports.
    pub fn tv_distance(&self, other: &OccupancyDistribution) -> f64 {
        let mut sum = 0.0;
        for (n, p) in self.iter() {
            sum += (p - other.probability(n)).abs();
        }
        for (n, q) in other.iter() {
            if !self.probs.contains_key(n) {
                sum += q;
            }
        }
        0.5 * sum
    }

    /// Draw one state, consuming a single uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        let u = positive_uniform(rng);
        let mut acc = 0.0;
        let mut last = None;
        for (n, p) in self.iter() {
            acc += p;
            last = Some(n);
            if u <= acc {
                return n.clone();
            }
        }
        // Roundoff can leave acc marginally below 1; the final state wins.
        last.expect("distribution is non-empty").clone()
    }
}

/// Mass on states from which some positive rate leads outside the support.
fn escaping_mass<F>(probs: &BTreeMap<State, f64>, classes: usize, rate: F) -> f64
where
    F: Fn(&State, ClassIndex, ClassIndex) -> f64,
{
    let mut mass = 0.0;
    'states: for (n, &p) in probs {
        for from in 0..=classes {
            for to in 0..=classes {
                if from == EXTERIOR && to == EXTERIOR {
                    continue;
                }
                if rate(n, from, to) <= 0.0 {
                    continue;
                }
                let Ok(target) = n.transition(from, to) else {
                    continue;
                };
                if !probs.contains_key(&target) {
                    mass += p;
                    continue 'states;
                }
            }
        }
    }
    mass
}

/// Stationary distribution of a single-class birth–death model on
/// `{0, ..., truncation}`, via the detailed-balance recursion
/// `pi(n+1) service(n+1) = pi(n) arrival(n)`.
///
/// Arrival rates beyond the table are zero, so a table shorter than the
/// truncation yields an exact finite support with zero boundary mass. If the
/// unnormalized recursion overflows, the measure is reported as divergent
/// rather than silently renormalized.
pub fn solve_single_class(
    rates: &SingleClassRates,
    truncation: u32,
) -> Result<OccupancyDistribution, BalanceError> {
    let cap = truncation as usize;
    let arrival = |k: usize| rates.arrivals.get(k).copied().unwrap_or(0.0);
    let mut weights = BTreeMap::new();
    let mut w = 1.0_f64;
    weights.insert(State::new(vec![0]), w);
    for k in 0..cap {
        let a = arrival(k);
        if w > 0.0 && a > 0.0 {
            let b = rates.services.get(k).copied().ok_or(ModelError::ServiceTableExhausted {
                covered: rates.services.len(),
                needed: k + 1,
            })?;
            w = w * a / b;
            if !w.is_finite() {
                return Err(BalanceError::DivergentMass);
            }
        } else {
            w = 0.0;
        }
        weights.insert(State::new(vec![(k + 1) as u32]), w);
    }
    let mut dist = OccupancyDistribution::from_weights(1, weights)?;
    dist.boundary_mass = escaping_mass(&dist.probs, 1, |n, from, to| {
        let k = n.count(1) as usize;
        match (from, to) {
            (EXTERIOR, 1) => arrival(k),
            (1, EXTERIOR) if k >= 1 => rates.services.get(k - 1).copied().unwrap_or(f64::NAN),
            _ => 0.0,
        }
    });
    Ok(dist)
}

/// Solve the traffic equations `load_i = Σ_j load_j p(j, i) + nu p(0, i)`
/// for the per-class throughputs of a Whittle network, and check the
/// solution's consistency: the flow returned to the exterior must equal the
/// exterior arrival rate.
pub fn solve_traffic_equations(
    routing: &RoutingMatrix,
    exterior_rate: f64,
) -> Result<Vec<f64>, BalanceError> {
    if exterior_rate <= 0.0 {
        return Err(BalanceError::ClosedNetwork);
    }
    let classes = routing.classes();
    let a = DMatrix::from_fn(classes, classes, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        delta - routing.p(c + 1, r + 1)
    });
    let b = DVector::from_fn(classes, |r, _| exterior_rate * routing.p(EXTERIOR, r + 1));
    let loads = a.lu().solve(&b).ok_or(BalanceError::SingularSystem)?;
    for (idx, &value) in loads.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(BalanceError::NonpositiveTraffic { class: idx + 1, value });
        }
    }
    let returned: f64 =
        loads.iter().enumerate().map(|(idx, &l)| l * routing.p(idx + 1, EXTERIOR)).sum();
    if (returned - exterior_rate).abs() > 1e-10 * exterior_rate.max(1.0) {
        return Err(BalanceError::InconsistentTraffic { exterior: exterior_rate, returned });
    }
    Ok(loads.iter().copied().collect())
}

/// Product-form stationary distribution of a Whittle network on the box
/// `{0..caps[0]} x ... x {0..caps[N-1]}`:
/// `pi(n) ∝ Phi(n) Π load_i^{n_i}` with the loads from the traffic
/// equations. The boundary mass records how much probability sits on states
/// that can leave the box.
pub fn solve_whittle(
    rates: &WhittleRates,
    caps: &[u32],
) -> Result<OccupancyDistribution, BalanceError> {
    let classes = rates.routing.classes();
    if caps.len() != classes {
        return Err(BalanceError::TruncationMismatch { got: caps.len(), expected: classes });
    }
    let loads = solve_traffic_equations(&rates.routing, rates.exterior_rate)?;
    let mut weights = BTreeMap::new();
    for n in enumerate_box(caps) {
        let mut w = rates.balance.value(&n);
        for (load, &c) in loads.iter().zip(n.counts()) {
            w *= load.powi(c as i32);
        }
        if !w.is_finite() {
            return Err(BalanceError::DivergentMass);
        }
        weights.insert(n, w);
    }
    let mut dist = OccupancyDistribution::from_weights(classes, weights)?;
    dist.boundary_mass =
        escaping_mass(&dist.probs, classes, |n, from, to| rates.rate(n, from, to));
    Ok(dist)
}

/// Stationary distribution of a loss network over its admissible set:
/// `pi(n) ∝ Π offered_i^{n_i} / n_i!` with `offered_i` the ratio of arrival
/// to per-individual service rate. The admissible set must be finite; it is
/// exactly the reachable space, so the boundary mass is zero.
pub fn solve_loss(rates: &LossRates) -> Result<OccupancyDistribution, BalanceError> {
    let classes = rates.arrival_rates.len();
    let states = rates.admissible.enumerate(classes)?;
    if states.is_empty() {
        return Err(BalanceError::EmptyAdmissibleSet);
    }
    let offered: Vec<f64> = rates
        .arrival_rates
        .iter()
        .zip(&rates.service_rates)
        .map(|(nu, sigma)| nu / sigma)
        .collect();
    let mut weights = BTreeMap::new();
    for n in states {
        let mut w = 1.0;
        for (k, kappa) in n.counts().iter().zip(&offered) {
            // kappa^k / k!, accumulated stably.
            for step in 1..=*k {
                w *= kappa / f64::from(step);
            }
        }
        weights.insert(n, w);
    }
    let mut dist = OccupancyDistribution::from_weights(classes, weights)?;
    dist.boundary_mass =
        escaping_mass(&dist.probs, classes, |n, from, to| rates.rate(n, from, to));
    Ok(dist)
}

/// Iterative Kosaraju strongly-connected components; returns the component
/// id of every node and the number of *closed* components (no edges leaving).
fn closed_communicating_classes(adjacency: &[Vec<usize>]) -> usize {
    let n = adjacency.len();
    let mut reverse = vec![Vec::new(); n];
    for (u, outs) in adjacency.iter().enumerate() {
        for &v in outs {
            reverse[v].push(u);
        }
    }
    // First pass: record DFS finish order on the forward graph.
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut stack = vec![(start, 0_usize)];
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < adjacency[node].len() {
                let child = adjacency[node][*next];
                *next += 1;
                if !visited[child] {
                    visited[child] = true;
                    stack.push((child, 0));
                }
            } else {
                order.push(node);
                stack.pop();
            }
        }
    }
    // Second pass: components are reverse-graph reachability sets, peeled in
    // reverse finish order.
    let mut component = vec![usize::MAX; n];
    let mut count = 0;
    for &start in order.iter().rev() {
        if component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        component[start] = count;
        while let Some(node) = stack.pop() {
            for &prev in &reverse[node] {
                if component[prev] == usize::MAX {
                    component[prev] = count;
                    stack.push(prev);
                }
            }
        }
        count += 1;
    }
    // A component is closed when no forward edge leaves it.
    let mut closed = vec![true; count];
    for (u, outs) in adjacency.iter().enumerate() {
        for &v in outs {
            if component[u] != component[v] {
                closed[component[u]] = false;
            }
        }
    }
    closed.iter().filter(|&&c| c).count()
}

/// Exact stationary distribution of the occupancy chain when every workload
/// is exponential with unit mean: the counts then form a Markov chain whose
/// generator is given directly by the transition rates. Solved densely on
/// the box `{0..caps[i]}`, with transitions leaving the box disabled.
///
/// This is the oracle the closed-form solvers are checked against. Errors if
/// the box exceeds [`MAX_DENSE_STATES`] or the restricted chain has more
/// than one closed communicating class (the stationary law would not be
/// unique).
pub fn ctmc_oracle(spec: &NetworkSpec, caps: &[u32]) -> Result<OccupancyDistribution, BalanceError> {
    let classes = spec.classes();
    if caps.len() != classes {
        return Err(BalanceError::TruncationMismatch { got: caps.len(), expected: classes });
    }
    let states = enumerate_box(caps);
    let count = states.len();
    if count > MAX_DENSE_STATES {
        return Err(BalanceError::BoxTooLarge { states: count, max: MAX_DENSE_STATES });
    }
    let index: BTreeMap<&State, usize> = states.iter().zip(0..).collect();

    let mut generator = DMatrix::zeros(count, count);
    let mut adjacency = vec![Vec::new(); count];
    for (row, n) in states.iter().enumerate() {
        for from in 0..=classes {
            for to in 0..=classes {
                if from == EXTERIOR && to == EXTERIOR {
                    continue;
                }
                let rate = spec.rate(n, from, to)?;
                if rate <= 0.0 {
                    continue;
                }
                let target = n.transition(from, to).map_err(BalanceError::Model)?;
                let Some(&col) = index.get(&target) else {
                    continue; // leaves the box: disabled
                };
                if col == row {
                    continue; // self-transition: no effect on occupancy law
                }
                generator[(row, col)] += rate;
                generator[(row, row)] -= rate;
                adjacency[row].push(col);
            }
        }
    }

    let closed = closed_communicating_classes(&adjacency);
    if closed != 1 {
        return Err(BalanceError::NotUniquelyErgodic { closed_classes: closed });
    }

    // Solve pi Q = 0 with Σ pi = 1: transpose, overwrite one redundant
    // equation with the normalization row.
    let mut system = generator.transpose();
    for col in 0..count {
        system[(count - 1, col)] = 1.0;
    }
    let mut rhs = DVector::zeros(count);
    rhs[count - 1] = 1.0;
    let solution = system.lu().solve(&rhs).ok_or(BalanceError::SingularSystem)?;

    let floor = -1e-9 * solution.amax();
    let mut weights = BTreeMap::new();
    for (n, &p) in states.iter().zip(solution.iter()) {
        if p < floor {
            return Err(BalanceError::NegativeProbability { value: p });
        }
        weights.insert(n.clone(), p.max(0.0));
    }
    let mut dist = OccupancyDistribution::from_weights(classes, weights)?;
    dist.boundary_mass = escaping_mass(&dist.probs, classes, |n, from, to| {
        spec.rate(n, from, to).unwrap_or(0.0)
    });
    Ok(dist)
}

/// Stationary solve dispatched on the rate model: the birth–death recursion,
/// the Whittle product form, or the loss-network product form. Tabulated
/// models have no closed form and fall back to the CTMC solve over the
/// tabulated domain's bounding box.
pub fn solve_for_spec(
    spec: &NetworkSpec,
    truncation: &[u32],
) -> Result<OccupancyDistribution, BalanceError> {
    match spec.rates() {
        RateModel::SingleClass(rates) => {
            let cap = truncation.first().copied().ok_or(BalanceError::TruncationMismatch {
                got: 0,
                expected: 1,
            })?;
            solve_single_class(rates, cap)
        }
        RateModel::Whittle(rates) => solve_whittle(rates, truncation),
        RateModel::Loss(rates) => solve_loss(rates),
        RateModel::Tabulated(_) => ctmc_oracle(spec, truncation),
    }
}

/// One partial-balance equation: state `n`, source index `class`
/// (0 = exterior).
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceEntry {
    pub state: State,
    pub class: ClassIndex,
    /// `pi(n) Σ_j rate(n, class, j)`.
    pub outflow: f64,
    /// `Σ_j pi(T n) rate(T n, j, class)` over the undo-states `T n`.
    pub inflow: f64,
    pub residual: f64,
    /// `|residual|` relative to the larger flow side.
    pub relative: f64,
    /// Some undo-state lies outside the verified support but would
    /// contribute (its rate back is positive or unknown); the equation
    /// cannot be checked exactly from this support alone.
    pub truncated: bool,
}

/// Verdict of [`check_finiteness`]: the stationary arrival-rate sum that must
/// be finite for the insensitivity theory to apply, with a bound on the part
/// of the sum the truncated support cannot see.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitenessCheck {
    /// `Σ_n pi(n) Σ_i rate(n, 0, i)` over the support.
    pub arrival_mass: f64,
    /// Largest total arrival rate seen on the support.
    pub max_arrival_rate: f64,
    /// `boundary_mass * max_arrival_rate`: what the unseen tail could add.
    pub tail_bound: f64,
    pub pass: bool,
}

/// Result of checking every partial-balance equation on a support.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub entries: Vec<BalanceEntry>,
    /// Largest relative residual over all equations, truncated ones included.
    pub max_relative: f64,
    /// Largest relative residual over equations whose undo-states all lie
    /// inside the support; this is the meaningful figure on truncated boxes.
    pub interior_max_relative: f64,
    pub truncated_entries: usize,
    pub finiteness: FinitenessCheck,
}

impl BalanceReport {
    /// Partial balance holds on the interior to the given tolerance and the
    /// arrival-rate sum is finite.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.interior_max_relative <= tolerance && self.finiteness.pass
    }
}

/// Check every partial-balance equation `(n, i)` for `n` in the support of
/// `pi` and `i` in `{0, 1, ..., N}`.
///
/// Equations whose source class is empty hold trivially and are reported
/// with both sides exactly zero. When the support leaks (some transition
/// leaves it), undo-states outside it mark the equation as truncated when
/// their rate back into `n` is positive (or unknowable, for tabulated
/// models); when the support is closed, such states are unreachable and
/// contribute genuine zeros. Rates must be defined on the support itself;
/// anything else is a hard error.
pub fn verify_partial_balance(
    spec: &NetworkSpec,
    pi: &OccupancyDistribution,
) -> Result<BalanceReport, BalanceError> {
    let classes = spec.classes();
    let mut entries = Vec::with_capacity(pi.len() * (classes + 1));
    let mut max_relative = 0.0_f64;
    let mut interior_max_relative = 0.0_f64;
    let mut truncated_entries = 0;

    // When no transition leaves the support, everything outside it is
    // unreachable and carries true probability zero, so out-of-support
    // undo-states are genuine zeros rather than truncation artifacts.
    let mut support_leaks = false;
    'leak: for (n, _) in pi.iter() {
        for from in 0..=classes {
            for to in 0..=classes {
                if spec.rate(n, from, to)? <= 0.0 {
                    continue;
                }
                let Ok(target) = n.transition(from, to) else { continue };
                if !pi.probs.contains_key(&target) {
                    support_leaks = true;
                    break 'leak;
                }
            }
        }
    }

    for (n, p) in pi.iter() {
        for class in 0..=classes {
            if class != EXTERIOR && n.count(class) == 0 {
                // No class-`class` individual: both sides are empty sums.
                entries.push(BalanceEntry {
                    state: n.clone(),
                    class,
                    outflow: 0.0,
                    inflow: 0.0,
                    residual: 0.0,
                    relative: 0.0,
                    truncated: false,
                });
                continue;
            }
            let mut outflow = 0.0;
            let mut inflow = 0.0;
            let mut truncated = false;
            for other in 0..=classes {
                outflow += p * spec.rate(n, class, other)?;
                let undo = match n.transition(class, other) {
                    Ok(t) => t,
                    Err(_) => continue,
                };
                let mass = pi.probability(&undo);
                if mass > 0.0 || pi.probs.contains_key(&undo) {
                    inflow += mass * spec.rate(&undo, other, class)?;
                } else if support_leaks {
                    match spec.rate(&undo, other, class) {
                        Ok(back) if back > 0.0 => truncated = true,
                        Ok(_) => {}
                        Err(ModelError::OutsideTabulatedDomain(_)) => truncated = true,
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            let residual = outflow - inflow;
            let scale = outflow.abs().max(inflow.abs());
            let relative = if scale > 0.0 { residual.abs() / scale } else { 0.0 };
            max_relative = max_relative.max(relative);
            if truncated {
                truncated_entries += 1;
            } else {
                interior_max_relative = interior_max_relative.max(relative);
            }
            entries.push(BalanceEntry {
                state: n.clone(),
                class,
                outflow,
                inflow,
                residual,
                relative,
                truncated,
            });
        }
    }

    let finiteness = check_finiteness(spec, pi)?;
    Ok(BalanceReport {
        entries,
        max_relative,
        interior_max_relative,
        truncated_entries,
        finiteness,
    })
}

/// The insensitivity theory needs `Σ_n pi(n) Σ_i rate(n, 0, i) < ∞`. On a
/// finite support the sum is always finite; what can go wrong is that the
/// support is a truncation of an infinite space carrying real mass. The
/// check therefore passes only when the mass able to escape the support
/// cannot contribute more than a millionth of the sum seen.
pub fn check_finiteness(
    spec: &NetworkSpec,
    pi: &OccupancyDistribution,
) -> Result<FinitenessCheck, BalanceError> {
    let mut arrival_mass = 0.0;
    let mut max_arrival_rate = 0.0_f64;
    for (n, p) in pi.iter() {
        let rate = spec.total_arrival_rate(n)?;
        arrival_mass += p * rate;
        max_arrival_rate = max_arrival_rate.max(rate);
    }
    let tail_bound = pi.boundary_mass() * max_arrival_rate;
    let pass =
        arrival_mass.is_finite() && (tail_bound == 0.0 || tail_bound <= 1e-6 * arrival_mass);
    Ok(FinitenessCheck { arrival_mass, max_arrival_rate, tail_bound, pass })
}
