//! Network descriptions: occupancy states, transition rate models, service
//! disciplines, and structural validation.
//!
//! A network has classes `1..=N`; index `0` denotes the exterior. The
//! occupancy state is the vector of per-class counts, and all stochastic
//! behaviour at the occupancy level is captured by the transition rates
//! `rate(n, i, j)`: the rate at which, in state `n`, an individual of class
//! `i` completes and is routed to class `j` (with `i = 0` meaning an external
//! arrival and `j = 0` a departure). Two conventions are structural:
//! `rate(n, 0, 0) = 0`, and `rate(n, i, j) = 0` whenever class `i` is empty.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::Workload;

/// Index into the extended class set: `0` is the exterior, `1..=N` the
/// network classes.
pub type ClassIndex = usize;

/// The exterior pseudo-class (source of arrivals, sink of departures).
pub const EXTERIOR: ClassIndex = 0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: ClassIndex, classes: usize },
    #[error("state {state} has no class-{class} individual to move")]
    EmptyClass { state: State, class: ClassIndex },
    #[error("state dimension {got} does not match the {expected}-class network")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("state {0} is outside the tabulated rate domain")]
    OutsideTabulatedDomain(State),
    #[error("service rate table covers occupancies up to {covered}, needed {needed}")]
    ServiceTableExhausted { covered: usize, needed: usize },
    #[error("network needs at least one class")]
    NoClasses,
    #[error("expected {expected} workload distributions, got {got}")]
    WorkloadCountMismatch { got: usize, expected: usize },
    #[error("class {class} workload has mean {mean}, expected exactly 1 (express scale through the rate model)")]
    NonUnitWorkloadMean { class: ClassIndex, mean: f64 },
    #[error("{discipline} discipline is only defined for single-class networks, got {classes} classes")]
    DisciplineNeedsSingleClass { discipline: Discipline, classes: usize },
    #[error("rate model is for {got} classes, network declares {expected}")]
    RateModelDimensionMismatch { got: usize, expected: usize },
    #[error("admissible set puts no cap on class {class}; the state space is infinite")]
    UnboundedAdmissibleSet { class: ClassIndex },
}

/// Occupancy state: the number of individuals of each class, indexed by
/// class `1..=N`. Ordered lexicographically so it can key ordered maps with a
/// deterministic iteration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State(Vec<u32>);

impl State {
    pub fn new(counts: Vec<u32>) -> State {
        State(counts)
    }

    pub fn zeros(classes: usize) -> State {
        State(vec![0; classes])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    /// Number of classes (the vector dimension).
    pub fn classes(&self) -> usize {
        self.0.len()
    }

    /// Count for a network class in `1..=N`.
    pub fn count(&self, class: ClassIndex) -> u32 {
        assert!(
            class >= 1 && class <= self.0.len(),
            "class {class} out of range 1..={}",
            self.0.len()
        );
        self.0[class - 1]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Move one individual from class `from` to class `to`, where index 0 is
    /// the exterior: `(0, j)` adds an arrival to `j`, `(i, 0)` removes a
    /// departure from `i`, and `(i, j)` transfers between classes.
    pub fn transition(&self, from: ClassIndex, to: ClassIndex) -> Result<State, ModelError> {
        let classes = self.0.len();
        for index in [from, to] {
            if index > classes {
                return Err(ModelError::ClassOutOfRange { index, classes });
            }
        }
        let mut counts = self.0.clone();
        if from >= 1 {
            if counts[from - 1] == 0 {
                return Err(ModelError::EmptyClass { state: self.clone(), class: from });
            }
            counts[from - 1] -= 1;
        }
        if to >= 1 {
            counts[to - 1] += 1;
        }
        Ok(State(counts))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Every state `n` with `n_i <= caps[i-1]` for all classes, in lexicographic
/// order.
pub fn enumerate_box(caps: &[u32]) -> Vec<State> {
    let mut states = Vec::new();
    let mut current = vec![0_u32; caps.len()];
    loop {
        states.push(State::new(current.clone()));
        // Odometer increment, last coordinate fastest.
        let mut pos = caps.len();
        loop {
            if pos == 0 {
                return states;
            }
            pos -= 1;
            if current[pos] < caps[pos] {
                current[pos] += 1;
                break;
            }
            current[pos] = 0;
        }
    }
}

/// How service effort is divided among the individuals of a class. The
/// occupancy-level rates are the same for all three; only the within-class
/// allocation (and hence sensitivity to the workload family) differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discipline {
    /// Egalitarian sharing: each of the `n_i` individuals drains at
    /// `rate/n_i`.
    ProcessorSharing,
    /// All effort to the most recent arrival; preempted work resumes later.
    LifoPreemptiveResume,
    /// All effort to the oldest arrival. Occupancy is sensitive to the
    /// workload family under this discipline; it serves as the negative
    /// control.
    Fifo,
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Discipline::ProcessorSharing => "processor-sharing",
            Discipline::LifoPreemptiveResume => "lifo-preemptive-resume",
            Discipline::Fifo => "fifo",
        };
        f.write_str(name)
    }
}

/// Routing probabilities over the extended class set, `(N+1) x (N+1)`
/// row-major with index 0 the exterior. Rows must be stochastic and
/// `p(0, 0)` must be zero; both are checked by spec validation rather than at
/// construction so ill-formed inputs can be reported in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingMatrix(Vec<Vec<f64>>);

impl RoutingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> RoutingMatrix {
        RoutingMatrix(rows)
    }

    /// Number of network classes (matrix dimension minus the exterior).
    pub fn classes(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn p(&self, from: ClassIndex, to: ClassIndex) -> f64 {
        self.0[from][to]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    fn is_square(&self) -> bool {
        let d = self.0.len();
        d >= 2 && self.0.iter().all(|row| row.len() == d)
    }
}

/// The balance function `Phi` of a Whittle network: class-`i` completions in
/// state `n` proceed at total rate `Phi(n - e_i) / Phi(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BalanceFunction {
    /// `Phi ≡ 1`: every occupied class serves at unit total rate.
    One,
    /// `Phi(n) = Π factors[i]^{n_i}`; completions of class `i` then proceed
    /// at rate `1 / factors[i]`, which makes the network a Jackson network of
    /// rate-`1/factor` servers.
    Geometric { factors: Vec<f64> },
}

impl BalanceFunction {
    pub fn value(&self, n: &State) -> f64 {
        match self {
            BalanceFunction::One => 1.0,
            BalanceFunction::Geometric { factors } => factors
                .iter()
                .zip(n.counts())
                .map(|(f, &c)| f.powi(c as i32))
                .product(),
        }
    }

    /// `Phi(n - e_class) / Phi(n)` for `n_class >= 1`, computed in closed
    /// form so partial-balance residuals are exact to machine precision.
    fn departure_ratio(&self, class: ClassIndex) -> f64 {
        match self {
            BalanceFunction::One => 1.0,
            BalanceFunction::Geometric { factors } => 1.0 / factors[class - 1],
        }
    }
}

/// Birth–death rates for a single class: `arrivals[n]` is the arrival rate in
/// state `n` (zero beyond the table, so the table length caps the
/// population), and `services[n-1]` is the total service rate with `n`
/// present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleClassRates {
    pub arrivals: Vec<f64>,
    pub services: Vec<f64>,
}

/// Whittle network: exterior arrivals at rate `exterior_rate * p(0, j)`, and
/// class-`i` completions at total rate `Phi(n - e_i)/Phi(n)` routed by row
/// `i` of the routing matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhittleRates {
    pub balance: BalanceFunction,
    pub routing: RoutingMatrix,
    pub exterior_rate: f64,
}

impl WhittleRates {
    /// Transition rate `rate(n, from, to)` under the Whittle conventions.
    pub fn rate(&self, n: &State, from: ClassIndex, to: ClassIndex) -> f64 {
        if from == EXTERIOR {
            if to == EXTERIOR {
                0.0
            } else {
                self.exterior_rate * self.routing.p(EXTERIOR, to)
            }
        } else if n.count(from) == 0 {
            0.0
        } else {
            self.balance.departure_ratio(from) * self.routing.p(from, to)
        }
    }
}

/// Linear capacity constraint `Σ coefficients[i] * n_i <= limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityConstraint {
    pub coefficients: Vec<f64>,
    pub limit: f64,
}

/// The set of admissible states of a loss network. Must be closed under
/// removing individuals (checked by spec validation for explicit sets;
/// automatic for linear constraints with non-negative coefficients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AdmissibleSet {
    Explicit(BTreeSet<State>),
    Linear(Vec<CapacityConstraint>),
}

impl AdmissibleSet {
    pub fn contains(&self, n: &State) -> bool {
        match self {
            AdmissibleSet::Explicit(set) => set.contains(n),
            AdmissibleSet::Linear(constraints) => constraints.iter().all(|c| {
                let load: f64 = c
                    .coefficients
                    .iter()
                    .zip(n.counts())
                    .map(|(a, &k)| a * f64::from(k))
                    .sum();
                load <= c.limit + 1e-9
            }),
        }
    }

    /// All admissible states in lexicographic order. Errors if some class is
    /// not capped by any constraint (the set would be infinite).
    pub fn enumerate(&self, classes: usize) -> Result<Vec<State>, ModelError> {
        match self {
            AdmissibleSet::Explicit(set) => Ok(set.iter().cloned().collect()),
            AdmissibleSet::Linear(constraints) => {
                let mut caps = Vec::with_capacity(classes);
                for class in 1..=classes {
                    let cap = constraints
                        .iter()
                        .filter(|c| c.coefficients.get(class - 1).copied().unwrap_or(0.0) > 0.0)
                        .map(|c| (c.limit.max(0.0) / c.coefficients[class - 1]).floor() as u32)
                        .min();
                    match cap {
                        Some(cap) => caps.push(cap),
                        None => return Err(ModelError::UnboundedAdmissibleSet { class }),
                    }
                }
                Ok(enumerate_box(&caps).into_iter().filter(|n| self.contains(n)).collect())
            }
        }
    }
}

/// Loss network: class-`i` arrivals at rate `arrival_rates[i-1]` accepted
/// only if the resulting state stays admissible, departures at rate
/// `service_rates[i-1] * n_i`, no internal transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRates {
    pub admissible: AdmissibleSet,
    pub arrival_rates: Vec<f64>,
    pub service_rates: Vec<f64>,
}

impl LossRates {
    /// Transition rate `rate(n, from, to)` under the loss-network
    /// conventions: blocked arrivals have rate zero, departures proceed at
    /// `service_rate * count`, and there are no internal transitions.
    pub fn rate(&self, n: &State, from: ClassIndex, to: ClassIndex) -> f64 {
        match (from, to) {
            (EXTERIOR, EXTERIOR) => 0.0,
            (EXTERIOR, j) => {
                let next = n.transition(EXTERIOR, j).expect("arrival is always valid");
                if self.admissible.contains(&next) {
                    self.arrival_rates[j - 1]
                } else {
                    0.0
                }
            }
            (i, EXTERIOR) => self.service_rates[i - 1] * f64::from(n.count(i)),
            _ => 0.0,
        }
    }
}

/// Arbitrary rates given state by state: each entry is the full
/// `(N+1) x (N+1)` row-major rate matrix at that state. States outside the
/// table are outside the model's domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedRates {
    pub classes: usize,
    pub table: BTreeMap<State, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateModel {
    Tabulated(TabulatedRates),
    SingleClass(SingleClassRates),
    Whittle(WhittleRates),
    Loss(LossRates),
}

impl RateModel {
    /// Number of classes the model's own dimensions imply.
    fn classes(&self) -> usize {
        match self {
            RateModel::Tabulated(t) => t.classes,
            RateModel::SingleClass(_) => 1,
            RateModel::Whittle(w) => w.routing.classes(),
            RateModel::Loss(l) => l.arrival_rates.len(),
        }
    }
}

/// Rules a rate model can break, reported by [`NetworkSpec::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// `rate(n, 0, 0)` must be zero.
    ExteriorSelfTransition { rate: f64 },
    /// `rate(n, i, j)` must vanish when class `i` is empty in `n`.
    RateFromEmptyClass { rate: f64 },
    /// Total completion rate of class `i` must be positive when `n_i > 0`.
    ClassStarvedWhileOccupied,
    /// Rates must be finite and non-negative.
    NegativeRate { rate: f64 },
    RoutingRowNotStochastic { sum: f64 },
    /// `p(0, 0)` must be zero: exterior arrivals enter the network.
    ExteriorRoutingSelfLoop { p: f64 },
    NonpositiveBalanceFactor { value: f64 },
    NegativeExteriorRate { rate: f64 },
    NonpositiveArrivalRate { value: f64 },
    NonpositiveServiceRate { value: f64 },
    /// Removing an individual from an admissible state must stay admissible.
    AdmissibleSetNotClosed { missing: State },
    AdmissibleSetEmpty,
    NegativeConstraintCoefficient { value: f64 },
    NegativeTableEntry { value: f64 },
    TableRowWrongLength { got: usize, expected: usize },
    TableStateWrongDimension { got: usize, expected: usize },
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::ExteriorSelfTransition { rate } => {
                write!(f, "exterior-to-exterior rate must be 0, got {rate}")
            }
            Rule::RateFromEmptyClass { rate } => {
                write!(f, "rate out of an empty class must be 0, got {rate}")
            }
            Rule::ClassStarvedWhileOccupied => {
                write!(f, "occupied class has zero total completion rate")
            }
            Rule::NegativeRate { rate } => write!(f, "rate must be finite and >= 0, got {rate}"),
            Rule::RoutingRowNotStochastic { sum } => {
                write!(f, "routing row must sum to 1, got {sum}")
            }
            Rule::ExteriorRoutingSelfLoop { p } => {
                write!(f, "routing p(0, 0) must be 0, got {p}")
            }
            Rule::NonpositiveBalanceFactor { value } => {
                write!(f, "balance function factor must be > 0, got {value}")
            }
            Rule::NegativeExteriorRate { rate } => {
                write!(f, "exterior arrival rate must be >= 0, got {rate}")
            }
            Rule::NonpositiveArrivalRate { value } => {
                write!(f, "per-class arrival rate must be > 0, got {value}")
            }
            Rule::NonpositiveServiceRate { value } => {
                write!(f, "per-class service rate must be > 0, got {value}")
            }
            Rule::AdmissibleSetNotClosed { missing } => {
                write!(f, "admissible set is not closed under removal: missing {missing}")
            }
            Rule::AdmissibleSetEmpty => write!(f, "admissible set is empty"),
            Rule::NegativeConstraintCoefficient { value } => {
                write!(f, "capacity coefficients must be >= 0, got {value}")
            }
            Rule::NegativeTableEntry { value } => {
                write!(f, "tabulated rate must be finite and >= 0, got {value}")
            }
            Rule::TableRowWrongLength { got, expected } => {
                write!(f, "tabulated matrix has {got} entries, expected {expected}")
            }
            Rule::TableStateWrongDimension { got, expected } => {
                write!(f, "tabulated state has {got} coordinates, expected {expected}")
            }
        }
    }
}

/// One broken rule, located at a state and/or a pair of class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub state: Option<State>,
    pub classes: Option<(ClassIndex, ClassIndex)>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(state) = &self.state {
            write!(f, "at {state}")?;
            if self.classes.is_some() {
                write!(f, ", ")?;
            } else {
                write!(f, ": ")?;
            }
        }
        if let Some((i, j)) = self.classes {
            write!(f, "classes ({i}, {j}): ")?;
        }
        write!(f, "{}", self.rule)
    }
}

impl Violation {
    fn global(rule: Rule) -> Violation {
        Violation { state: None, classes: None, rule }
    }

    fn at(state: &State, classes: Option<(ClassIndex, ClassIndex)>, rule: Rule) -> Violation {
        Violation { state: Some(state.clone()), classes, rule }
    }
}

/// A complete network description: class count, occupancy-level transition
/// rates, within-class service discipline, and one unit-mean workload
/// distribution per class.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    classes: usize,
    rates: RateModel,
    discipline: Discipline,
    workloads: Vec<Workload>,
}

impl NetworkSpec {
    pub fn new(
        classes: usize,
        rates: RateModel,
        discipline: Discipline,
        workloads: Vec<Workload>,
    ) -> Result<NetworkSpec, ModelError> {
        if classes == 0 {
            return Err(ModelError::NoClasses);
        }
        if workloads.len() != classes {
            return Err(ModelError::WorkloadCountMismatch { got: workloads.len(), expected: classes });
        }
        for (idx, w) in workloads.iter().enumerate() {
            if w.mean() != 1.0 {
                return Err(ModelError::NonUnitWorkloadMean { class: idx + 1, mean: w.mean() });
            }
        }
        if discipline != Discipline::ProcessorSharing && classes != 1 {
            return Err(ModelError::DisciplineNeedsSingleClass { discipline, classes });
        }
        let model_classes = rates.classes();
        if model_classes != classes {
            return Err(ModelError::RateModelDimensionMismatch { got: model_classes, expected: classes });
        }
        if let RateModel::Whittle(w) = &rates {
            if !w.routing.is_square() {
                return Err(ModelError::RateModelDimensionMismatch {
                    got: w.routing.classes(),
                    expected: classes,
                });
            }
        }
        if let RateModel::Loss(l) = &rates {
            if l.service_rates.len() != classes {
                return Err(ModelError::RateModelDimensionMismatch {
                    got: l.service_rates.len(),
                    expected: classes,
                });
            }
        }
        Ok(NetworkSpec { classes, rates, discipline, workloads })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    pub fn rates(&self) -> &RateModel {
        &self.rates
    }

    /// Workload distribution of a class in `1..=N`.
    pub fn workload(&self, class: ClassIndex) -> &Workload {
        assert!(class >= 1 && class <= self.classes);
        &self.workloads[class - 1]
    }

    pub fn workloads(&self) -> &[Workload] {
        &self.workloads
    }

    /// Same network with the workload distributions replaced (the occupancy
    /// rate structure is untouched; this is how experiment arms vary the
    /// workload family).
    pub fn with_workloads(&self, workloads: Vec<Workload>) -> Result<NetworkSpec, ModelError> {
        NetworkSpec::new(self.classes, self.rates.clone(), self.discipline, workloads)
    }

    pub fn with_discipline(&self, discipline: Discipline) -> Result<NetworkSpec, ModelError> {
        NetworkSpec::new(self.classes, self.rates.clone(), discipline, self.workloads.clone())
    }

    /// Transition rate `rate(n, from, to)`; see the module docs for the
    /// conventions. Errors only on dimension mismatches or states outside a
    /// tabulated domain.
    pub fn rate(&self, n: &State, from: ClassIndex, to: ClassIndex) -> Result<f64, ModelError> {
        if n.classes() != self.classes {
            return Err(ModelError::DimensionMismatch { got: n.classes(), expected: self.classes });
        }
        for index in [from, to] {
            if index > self.classes {
                return Err(ModelError::ClassOutOfRange { index, classes: self.classes });
            }
        }
        if from == EXTERIOR && to == EXTERIOR {
            return Ok(0.0);
        }
        match &self.rates {
            RateModel::Tabulated(t) => {
                let row = t
                    .table
                    .get(n)
                    .ok_or_else(|| ModelError::OutsideTabulatedDomain(n.clone()))?;
                Ok(row[from * (self.classes + 1) + to])
            }
            RateModel::SingleClass(s) => {
                let count = n.count(1) as usize;
                match (from, to) {
                    (EXTERIOR, 1) => Ok(s.arrivals.get(count).copied().unwrap_or(0.0)),
                    (1, EXTERIOR) => {
                        if count == 0 {
                            Ok(0.0)
                        } else {
                            s.services.get(count - 1).copied().ok_or(
                                ModelError::ServiceTableExhausted {
                                    covered: s.services.len(),
                                    needed: count,
                                },
                            )
                        }
                    }
                    _ => Ok(0.0),
                }
            }
            RateModel::Whittle(w) => Ok(w.rate(n, from, to)),
            RateModel::Loss(l) => Ok(l.rate(n, from, to)),
        }
    }

    /// Total completion rate of class `i` in state `n`:
    /// `Σ_j rate(n, i, j)`.
    pub fn class_rate(&self, n: &State, class: ClassIndex) -> Result<f64, ModelError> {
        let mut total = 0.0;
        for to in 0..=self.classes {
            total += self.rate(n, class, to)?;
        }
        Ok(total)
    }

    /// Total exterior arrival rate in state `n`: `Σ_j rate(n, 0, j)`.
    pub fn total_arrival_rate(&self, n: &State) -> Result<f64, ModelError> {
        self.class_rate(n, EXTERIOR)
    }

    /// Check the structural rules, both the model-level ones (stochastic
    /// routing, positive parameters, closure of the admissible set) and the
    /// per-state rate conventions on the given probe states. Tabulated models
    /// are additionally checked on every tabulated state. Returns all broken
    /// rules; an empty result means the network is sound.
    pub fn validate(&self, probes: &[State]) -> Vec<Violation> {
        let mut out = Vec::new();
        match &self.rates {
            RateModel::Tabulated(t) => self.validate_table(t, &mut out),
            RateModel::SingleClass(s) => {
                for &a in &s.arrivals {
                    if !a.is_finite() || a < 0.0 {
                        out.push(Violation::global(Rule::NegativeRate { rate: a }));
                    }
                }
                for &b in &s.services {
                    if !b.is_finite() || b <= 0.0 {
                        out.push(Violation::global(Rule::NonpositiveServiceRate { value: b }));
                    }
                }
            }
            RateModel::Whittle(w) => {
                if !w.exterior_rate.is_finite() || w.exterior_rate < 0.0 {
                    out.push(Violation::global(Rule::NegativeExteriorRate {
                        rate: w.exterior_rate,
                    }));
                }
                let p00 = w.routing.p(EXTERIOR, EXTERIOR);
                if p00 != 0.0 {
                    out.push(Violation::global(Rule::ExteriorRoutingSelfLoop { p: p00 }));
                }
                for (i, row) in w.routing.rows().iter().enumerate() {
                    for &p in row {
                        if !p.is_finite() || p < 0.0 {
                            out.push(Violation {
                                state: None,
                                classes: Some((i, EXTERIOR)),
                                rule: Rule::NegativeRate { rate: p },
                            });
                        }
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-12 {
                        out.push(Violation {
                            state: None,
                            classes: Some((i, EXTERIOR)),
                            rule: Rule::RoutingRowNotStochastic { sum },
                        });
                    }
                }
                if let BalanceFunction::Geometric { factors } = &w.balance {
                    for &f in factors {
                        if !f.is_finite() || f <= 0.0 {
                            out.push(Violation::global(Rule::NonpositiveBalanceFactor {
                                value: f,
                            }));
                        }
                    }
                }
            }
            RateModel::Loss(l) => {
                for &v in &l.arrival_rates {
                    if !v.is_finite() || v <= 0.0 {
                        out.push(Violation::global(Rule::NonpositiveArrivalRate { value: v }));
                    }
                }
                for &s in &l.service_rates {
                    if !s.is_finite() || s <= 0.0 {
                        out.push(Violation::global(Rule::NonpositiveServiceRate { value: s }));
                    }
                }
                match &l.admissible {
                    AdmissibleSet::Explicit(set) => {
                        if set.is_empty() {
                            out.push(Violation::global(Rule::AdmissibleSetEmpty));
                        }
                        for n in set {
                            for class in 1..=self.classes {
                                if n.count(class) > 0 {
                                    let down = n.transition(class, EXTERIOR).expect("occupied");
                                    if !set.contains(&down) {
                                        out.push(Violation::at(
                                            n,
                                            Some((class, EXTERIOR)),
                                            Rule::AdmissibleSetNotClosed { missing: down },
                                        ));
                                    }
                                }
                            }
                        }
                    }
                    AdmissibleSet::Linear(constraints) => {
                        for c in constraints {
                            for &a in &c.coefficients {
                                if !a.is_finite() || a < 0.0 {
                                    out.push(Violation::global(
                                        Rule::NegativeConstraintCoefficient { value: a },
                                    ));
                                }
                            }
                        }
                        if !self.classes_all_capped(constraints) {
                            // Report which class escapes every constraint.
                            for class in 1..=self.classes {
                                let capped = constraints.iter().any(|c| {
                                    c.coefficients.get(class - 1).copied().unwrap_or(0.0) > 0.0
                                });
                                if !capped {
                                    out.push(Violation {
                                        state: None,
                                        classes: Some((class, class)),
                                        rule: Rule::AdmissibleSetEmpty,
                                    });
                                }
                            }
                        }
                        if !self.admissible_origin(constraints) {
                            out.push(Violation::global(Rule::AdmissibleSetEmpty));
                        }
                    }
                }
            }
        }
        for n in probes {
            self.validate_state(n, &mut out);
        }
        out
    }

    fn classes_all_capped(&self, constraints: &[CapacityConstraint]) -> bool {
        (1..=self.classes).all(|class| {
            constraints
                .iter()
                .any(|c| c.coefficients.get(class - 1).copied().unwrap_or(0.0) > 0.0)
        })
    }

    fn admissible_origin(&self, constraints: &[CapacityConstraint]) -> bool {
        constraints.iter().all(|c| c.limit >= 0.0)
    }

    fn validate_table(&self, t: &TabulatedRates, out: &mut Vec<Violation>) {
        let dim = self.classes + 1;
        for (n, row) in &t.table {
            if n.classes() != self.classes {
                out.push(Violation::at(
                    n,
                    None,
                    Rule::TableStateWrongDimension { got: n.classes(), expected: self.classes },
                ));
                continue;
            }
            if row.len() != dim * dim {
                out.push(Violation::at(
                    n,
                    None,
                    Rule::TableRowWrongLength { got: row.len(), expected: dim * dim },
                ));
                continue;
            }
            for from in 0..dim {
                for to in 0..dim {
                    let rate = row[from * dim + to];
                    if !rate.is_finite() || rate < 0.0 {
                        out.push(Violation::at(
                            n,
                            Some((from, to)),
                            Rule::NegativeTableEntry { value: rate },
                        ));
                    } else if from == EXTERIOR && to == EXTERIOR && rate != 0.0 {
                        out.push(Violation::at(
                            n,
                            Some((from, to)),
                            Rule::ExteriorSelfTransition { rate },
                        ));
                    } else if from >= 1 && n.count(from) == 0 && rate != 0.0 {
                        out.push(Violation::at(
                            n,
                            Some((from, to)),
                            Rule::RateFromEmptyClass { rate },
                        ));
                    }
                }
            }
        }
    }

    fn validate_state(&self, n: &State, out: &mut Vec<Violation>) {
        if n.classes() != self.classes {
            return;
        }
        for from in 1..=self.classes {
            let Ok(total) = self.class_rate(n, from) else {
                continue; // outside a tabulated domain: nothing to check here
            };
            if n.count(from) > 0 && total <= 0.0 {
                out.push(Violation::at(n, Some((from, from)), Rule::ClassStarvedWhileOccupied));
            }
            if n.count(from) == 0 && total != 0.0 {
                out.push(Violation::at(
                    n,
                    Some((from, from)),
                    Rule::RateFromEmptyClass { rate: total },
                ));
            }
        }
    }

    /// A small default probe set for validation: the box `{0,..,cap}^N`,
    /// every tabulated state, and every explicitly admissible state.
    pub fn default_probes(&self, cap: u32) -> Vec<State> {
        let mut probes = enumerate_box(&vec![cap; self.classes]);
        match &self.rates {
            RateModel::Tabulated(t) => probes.extend(t.table.keys().cloned()),
            RateModel::Loss(l) => {
                if let AdmissibleSet::Explicit(set) = &l.admissible {
                    probes.extend(set.iter().cloned());
                }
            }
            RateModel::SingleClass(s) => {
                probes = (0..=s.arrivals.len() as u32).map(|k| State::new(vec![k])).collect();
            }
            RateModel::Whittle(_) => {}
        }
        probes.sort();
        probes.dedup();
        probes
    }
}
