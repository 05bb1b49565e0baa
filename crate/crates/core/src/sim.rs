//! Exact event-driven simulation of the full network state: occupancy counts
//! plus the residual workload of every individual present.
//!
//! Between events the state evolves deterministically — each class's total
//! completion rate is divided among its individuals according to the service
//! discipline and residuals drain linearly — so the next completion time of
//! every class is known exactly and only arrival times need fresh
//! randomness. There is no time discretization anywhere.
//!
//! Residual-profile statistics are collected at the points of an independent
//! Poisson clock rather than at event times: event-synchronized observations
//! are biased for non-exponential workloads (immediately after an arrival the
//! youngest individual always carries a fresh, undrained draw), while Poisson
//! sampling reproduces time-stationary expectations. The clock's rate is
//! calibrated once, from the event tempo seen during warmup (or a short
//! prefix when there is none), so a seeded run remains fully deterministic.
//!
//! All randomness comes from a counter-based generator seeded from
//! [`SimConfig::seed`], with a fixed draw order per event: arrival clocks in
//! class order, then the routing draw if a completion wins, then Poisson
//! snapshot gaps, then the fresh workload draw if the event inserts an
//! individual. Two runs with the same seed and configuration are replicas.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::balance::OccupancyDistribution;
use crate::dist::{positive_uniform, DistError, Equilibrium};
use crate::model::{ClassIndex, Discipline, ModelError, NetworkSpec, State, EXTERIOR};

/// Residuals this far below zero after a drain indicate an engine bug rather
/// than roundoff.
const DRAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("no transition is possible from {0}; the process is absorbed")]
    Absorbed(State),
    #[error("absorbed at {state} after {events} events, before the warmup of {warmup} completed")]
    AbsorbedBeforeWarmup { state: State, events: u64, warmup: u64 },
    #[error("residual workload of class {class} went to {value} (beyond roundoff)")]
    NegativeResidual { class: ClassIndex, value: f64 },
    #[error("initial distribution is over {got} classes, the network has {expected}")]
    InitDistributionMismatch { got: usize, expected: usize },
    #[error("warmup of {warmup} events leaves no measurement window in a budget of {budget}")]
    WarmupConsumesBudget { warmup: u64, budget: u64 },
    #[error("modified process needs at least one individual, got {0}")]
    ModifiedStateEmpty(State),
    #[error("modified process at {state}: occupied class {class} has zero completion rate")]
    ModifiedStateStarved { state: State, class: ClassIndex },
}

/// Full simulation state: counts, per-individual residual workloads (outer
/// index class, inner index arrival order, oldest first), and the clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    counts: State,
    residuals: Vec<Vec<f64>>,
    clock: f64,
}

impl SystemState {
    pub fn empty(classes: usize) -> SystemState {
        SystemState { counts: State::zeros(classes), residuals: vec![Vec::new(); classes], clock: 0.0 }
    }

    /// Assemble a state directly from residual lists (oldest first per
    /// class), e.g. to start a run from a hand-picked configuration.
    pub fn from_residuals(residuals: Vec<Vec<f64>>) -> SystemState {
        let counts = State::new(residuals.iter().map(|r| r.len() as u32).collect());
        SystemState { counts, residuals, clock: 0.0 }
    }

    pub fn counts(&self) -> &State {
        &self.counts
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Residual workloads of a class in `1..=N`, oldest arrival first.
    pub fn residuals(&self, class: ClassIndex) -> &[f64] {
        &self.residuals[class - 1]
    }

    fn push(&mut self, class: ClassIndex, workload: f64) {
        self.residuals[class - 1].push(workload);
        self.counts = self.counts.transition(EXTERIOR, class).expect("arrival is always valid");
    }

    fn remove(&mut self, class: ClassIndex, position: usize) -> f64 {
        let residual = self.residuals[class - 1].remove(position);
        self.counts = self.counts.transition(class, EXTERIOR).expect("class was occupied");
        residual
    }

    /// Advance the deterministic flow: every class drains its total
    /// completion rate, divided among individuals by the discipline.
    fn drain(&mut self, spec: &NetworkSpec, dt: f64) -> Result<(), SimError> {
        if dt == 0.0 {
            return Ok(());
        }
        for class in 1..=spec.classes() {
            let queue = &mut self.residuals[class - 1];
            if queue.is_empty() {
                continue;
            }
            let total = spec.class_rate(&self.counts, class)?;
            if total <= 0.0 {
                continue;
            }
            match spec.discipline() {
                Discipline::ProcessorSharing => {
                    let pace = total / queue.len() as f64;
                    for r in queue.iter_mut() {
                        *r -= pace * dt;
                    }
                }
                Discipline::LifoPreemptiveResume => {
                    *queue.last_mut().expect("non-empty") -= total * dt;
                }
                Discipline::Fifo => {
                    queue[0] -= total * dt;
                }
            }
            for r in queue.iter_mut() {
                if *r < 0.0 {
                    if *r < -DRAIN_TOLERANCE {
                        return Err(SimError::NegativeResidual { class, value: *r });
                    }
                    *r = 0.0;
                }
            }
        }
        Ok(())
    }

    /// Drain used by the modified (closed, replace-in-place) process: always
    /// egalitarian within each class, as in the stationarity construction.
    fn drain_shared(&mut self, spec: &NetworkSpec, dt: f64) -> Result<(), SimError> {
        if dt == 0.0 {
            return Ok(());
        }
        for class in 1..=spec.classes() {
            let queue = &mut self.residuals[class - 1];
            if queue.is_empty() {
                continue;
            }
            let pace = spec.class_rate(&self.counts, class)? / queue.len() as f64;
            for r in queue.iter_mut() {
                *r -= pace * dt;
                if *r < 0.0 {
                    if *r < -DRAIN_TOLERANCE {
                        return Err(SimError::NegativeResidual { class, value: *r });
                    }
                    *r = 0.0;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// External arrival of a fresh individual.
    Arrival { to: ClassIndex },
    /// The individual at `position` in class `from` finishes its workload
    /// and is routed to `to` (`to == 0` leaves the network).
    Completion { from: ClassIndex, position: usize, to: ClassIndex },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Absolute occurrence time.
    pub time: f64,
    pub kind: EventKind,
}

/// How a run starts.
#[derive(Debug, Clone)]
pub enum Initialization {
    /// Nobody present. Needs warmup before measurements mean anything.
    Empty,
    /// Counts drawn from the given occupancy law, residuals drawn
    /// independently from each class's residual-life distribution. For an
    /// insensitive network this is the stationary law of the full state, so
    /// no warmup is needed.
    Stationary(OccupancyDistribution),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    pub max_events: u64,
    /// Events discarded before measurement starts. `None` applies the
    /// default policy: zero for stationary starts, 10% of the budget for
    /// empty starts.
    pub warmup_events: Option<u64>,
    /// Mean number of events between residual snapshots; 0 disables them.
    pub snapshot_interval: u64,
    /// Record every k-th arrival and departure epoch profile; 0 disables.
    pub profile_interval: u64,
    pub initialization: Initialization,
}

impl SimConfig {
    pub fn new(seed: u64, max_events: u64, initialization: Initialization) -> SimConfig {
        SimConfig {
            seed,
            max_events,
            warmup_events: None,
            snapshot_interval: 50,
            profile_interval: 10,
            initialization,
        }
    }

    pub fn resolved_warmup(&self) -> u64 {
        match self.warmup_events {
            Some(w) => w,
            None => match self.initialization {
                Initialization::Empty => self.max_events / 10,
                Initialization::Stationary(_) => 0,
            },
        }
    }
}

/// An observation of the state: counts plus all residuals, indexed like
/// [`SystemState`]. Used for Poisson-clock snapshots and for arrival and
/// departure epoch profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub state: State,
    pub residuals: Vec<Vec<f64>>,
}

/// Everything measured during the post-warmup window of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub seed: u64,
    pub classes: usize,
    /// Time spent in each occupancy state.
    pub occupancy_time: BTreeMap<State, f64>,
    /// Total measured time; equals the sum of `occupancy_time` up to
    /// roundoff.
    pub horizon: f64,
    /// Poisson-clock observations of the full state.
    pub snapshots: Vec<Profile>,
    /// State just before an arrival is added (residuals drained to the
    /// arrival instant, the fresh individual excluded), every k-th arrival.
    pub arrival_profiles: Vec<Profile>,
    /// State just after an individual leaves the network, every k-th
    /// departure.
    pub departure_profiles: Vec<Profile>,
    /// Per-class external arrivals.
    pub arrivals: Vec<u64>,
    /// Per-class workload completions (any routing).
    pub completions: Vec<u64>,
    /// Per-class completions that left the network.
    pub departures: Vec<u64>,
    pub total_events: u64,
    pub warmup_events: u64,
    /// The run ended early in a state with no possible transition.
    pub absorbed: bool,
    pub final_clock: f64,
}

/// Draw the initial state. Consumes one uniform for the occupancy draw and
/// one per individual for stationary starts; nothing for empty starts.
pub fn init_state<R: Rng + ?Sized>(
    spec: &NetworkSpec,
    initialization: &Initialization,
    rng: &mut R,
) -> Result<SystemState, SimError> {
    match initialization {
        Initialization::Empty => Ok(SystemState::empty(spec.classes())),
        Initialization::Stationary(pi) => {
            if pi.classes() != spec.classes() {
                return Err(SimError::InitDistributionMismatch {
                    got: pi.classes(),
                    expected: spec.classes(),
                });
            }
            let equilibria: Vec<Equilibrium> = spec
                .workloads()
                .iter()
                .map(|w| w.equilibrium())
                .collect::<Result<_, DistError>>()?;
            let counts = pi.sample(rng);
            let mut residuals = Vec::with_capacity(spec.classes());
            for class in 1..=spec.classes() {
                let eq = &equilibria[class - 1];
                residuals.push((0..counts.count(class)).map(|_| eq.sample(rng)).collect());
            }
            Ok(SystemState { counts, residuals, clock: 0.0 })
        }
    }
}

/// Determine the next event from the current state.
///
/// Completion times are deterministic given the residuals; arrival times are
/// exponential clocks, one uniform per class with positive arrival rate (in
/// class order). If a completion wins, one further uniform picks its routing
/// target from the rate proportions. Exact ties resolve completions before
/// arrivals, then lower class, matching the candidate iteration order.
pub fn next_event<R: Rng + ?Sized>(
    state: &SystemState,
    spec: &NetworkSpec,
    rng: &mut R,
) -> Result<Event, SimError> {
    struct Candidate {
        dt: f64,
        arrival: bool,
        class: ClassIndex,
        position: usize,
    }
    let n = &state.counts;
    let mut best: Option<Candidate> = None;
    let consider = |c: Candidate, best: &mut Option<Candidate>| {
        if best.as_ref().is_none_or(|b| c.dt < b.dt) {
            *best = Some(c);
        }
    };

    for class in 1..=spec.classes() {
        let queue = &state.residuals[class - 1];
        if queue.is_empty() {
            continue;
        }
        let total = spec.class_rate(n, class)?;
        if total <= 0.0 {
            continue;
        }
        let (position, dt) = match spec.discipline() {
            Discipline::ProcessorSharing => {
                let (position, smallest) = queue
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("residuals are ordered"))
                    .expect("non-empty");
                (position, smallest * queue.len() as f64 / total)
            }
            Discipline::LifoPreemptiveResume => (queue.len() - 1, queue[queue.len() - 1] / total),
            Discipline::Fifo => (0, queue[0] / total),
        };
        consider(Candidate { dt, arrival: false, class, position }, &mut best);
    }

    for class in 1..=spec.classes() {
        let rate = spec.rate(n, EXTERIOR, class)?;
        if rate <= 0.0 {
            continue;
        }
        let dt = -(-positive_uniform(rng)).ln_1p() / rate;
        consider(Candidate { dt, arrival: true, class, position: 0 }, &mut best);
    }

    let Some(Candidate { dt, arrival, class, position }) = best else {
        return Err(SimError::Absorbed(n.clone()));
    };
    let time = state.clock + dt;
    if arrival {
        return Ok(Event { time, kind: EventKind::Arrival { to: class } });
    }

    // Route the completion proportionally to the per-target rates.
    let total = spec.class_rate(n, class)?;
    let target = positive_uniform(rng) * total;
    let mut acc = 0.0;
    let mut to = EXTERIOR;
    let mut chosen = false;
    for j in 0..=spec.classes() {
        let r = spec.rate(n, class, j)?;
        if r <= 0.0 {
            continue;
        }
        acc += r;
        to = j;
        if target <= acc {
            chosen = true;
            break;
        }
    }
    debug_assert!(chosen || (acc - total).abs() <= 1e-9 * total, "routing mass unaccounted");
    Ok(Event { time, kind: EventKind::Completion { from: class, position, to } })
}

/// Advance the state to the event and apply it: drain residuals over the
/// elapsed interval, then add, remove, or transfer the individual. Fresh
/// workloads (for arrivals and for transfers, which restart with a new draw)
/// consume one uniform each.
pub fn apply_event<R: Rng + ?Sized>(
    state: &mut SystemState,
    event: &Event,
    spec: &NetworkSpec,
    rng: &mut R,
) -> Result<(), SimError> {
    let dt = event.time - state.clock;
    debug_assert!(dt >= 0.0, "event precedes the clock");
    state.drain(spec, dt)?;
    state.clock = event.time;
    match event.kind {
        EventKind::Arrival { to } => {
            let workload = spec.workload(to).sample(rng);
            state.push(to, workload);
        }
        EventKind::Completion { from, position, to } => {
            let leftover = state.remove(from, position);
            debug_assert!(leftover.abs() < 1e-6, "completing individual still had {leftover} left");
            if to != EXTERIOR {
                let workload = spec.workload(to).sample(rng);
                state.push(to, workload);
            }
        }
    }
    Ok(())
}

fn exponential_gap<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -(-positive_uniform(rng)).ln_1p() / rate
}

enum SnapshotPhase {
    Disabled,
    /// Waiting for enough events to estimate the event tempo.
    Calibrating { at_event: u64 },
    Active { rate: f64, next_time: f64 },
}

struct Collector {
    phase: SnapshotPhase,
    warmup: u64,
    profile_interval: u64,
    snapshot_interval: u64,
    arrivals_seen: u64,
    departures_seen: u64,
    stats: SimStats,
}

impl Collector {
    fn new(spec: &NetworkSpec, config: &SimConfig, warmup: u64) -> Collector {
        let calibration_event = if config.snapshot_interval == 0 {
            None
        } else if warmup > 0 {
            Some(warmup)
        } else {
            Some((config.max_events / 10).clamp(1, 1000))
        };
        let classes = spec.classes();
        Collector {
            phase: match calibration_event {
                Some(at_event) => SnapshotPhase::Calibrating { at_event },
                None => SnapshotPhase::Disabled,
            },
            warmup,
            profile_interval: config.profile_interval,
            snapshot_interval: config.snapshot_interval,
            arrivals_seen: 0,
            departures_seen: 0,
            stats: SimStats {
                seed: config.seed,
                classes,
                occupancy_time: BTreeMap::new(),
                horizon: 0.0,
                snapshots: Vec::new(),
                arrival_profiles: Vec::new(),
                departure_profiles: Vec::new(),
                arrivals: vec![0; classes],
                completions: vec![0; classes],
                departures: vec![0; classes],
                total_events: 0,
                warmup_events: warmup,
                absorbed: false,
                final_clock: 0.0,
            },
        }
    }

    fn credit_occupancy(&mut self, counts: &State, dt: f64) {
        if let Some(t) = self.stats.occupancy_time.get_mut(counts) {
            *t += dt;
        } else {
            self.stats.occupancy_time.insert(counts.clone(), dt);
        }
    }

    /// Take any snapshots that fall strictly before `until`, draining the
    /// state to each snapshot instant.
    fn take_snapshots<R: Rng + ?Sized>(
        &mut self,
        state: &mut SystemState,
        spec: &NetworkSpec,
        until: f64,
        shared_drain: bool,
        rng: &mut R,
    ) -> Result<(), SimError> {
        let SnapshotPhase::Active { rate, next_time } = &mut self.phase else {
            return Ok(());
        };
        while *next_time < until {
            let dt = *next_time - state.clock;
            if shared_drain {
                state.drain_shared(spec, dt)?;
            } else {
                state.drain(spec, dt)?;
            }
            state.clock = *next_time;
            self.stats
                .snapshots
                .push(Profile { state: state.counts.clone(), residuals: state.residuals.clone() });
            *next_time += exponential_gap(rng, *rate);
        }
        Ok(())
    }

    /// After the event at `event_index` has been applied: count it, record
    /// epoch profiles, and switch snapshotting on once calibration is done.
    fn after_event<R: Rng + ?Sized>(
        &mut self,
        state: &SystemState,
        event: &Event,
        event_index: u64,
        rng: &mut R,
    ) {
        if event_index > self.warmup {
            match event.kind {
                EventKind::Arrival { to } => {
                    self.stats.arrivals[to - 1] += 1;
                    self.arrivals_seen += 1;
                    if self.profile_interval > 0 && self.arrivals_seen % self.profile_interval == 0
                    {
                        // The freshly added individual is the newest of its
                        // class; exclude it to get the pre-arrival profile.
                        let mut residuals = state.residuals.clone();
                        residuals[to - 1].pop();
                        let counts =
                            state.counts.transition(to, EXTERIOR).expect("just arrived");
                        self.stats.arrival_profiles.push(Profile { state: counts, residuals });
                    }
                }
                EventKind::Completion { from, to, .. } => {
                    self.stats.completions[from - 1] += 1;
                    if to == EXTERIOR {
                        self.stats.departures[from - 1] += 1;
                        self.departures_seen += 1;
                        if self.profile_interval > 0
                            && self.departures_seen % self.profile_interval == 0
                        {
                            self.stats.departure_profiles.push(Profile {
                                state: state.counts.clone(),
                                residuals: state.residuals.clone(),
                            });
                        }
                    }
                }
            }
        }
        self.stats.total_events = event_index;

        if let SnapshotPhase::Calibrating { at_event } = self.phase {
            if event_index == at_event {
                if state.clock > 0.0 {
                    let events_per_time = at_event as f64 / state.clock;
                    let rate = events_per_time / self.snapshot_interval as f64;
                    self.phase = SnapshotPhase::Active {
                        rate,
                        next_time: state.clock + exponential_gap(rng, rate),
                    };
                } else {
                    self.phase = SnapshotPhase::Disabled;
                }
            }
        }
    }
}

/// Run the network simulation. Measurements cover events after the warmup;
/// see [`SimStats`] for what is collected. Reaching a state with no possible
/// transition ends the run early (an error if it happens during warmup,
/// reported as `absorbed` otherwise).
pub fn run(spec: &NetworkSpec, config: &SimConfig) -> Result<SimStats, SimError> {
    let warmup = config.resolved_warmup();
    if warmup >= config.max_events {
        return Err(SimError::WarmupConsumesBudget { warmup, budget: config.max_events });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = init_state(spec, &config.initialization, &mut rng)?;
    let mut collector = Collector::new(spec, config, warmup);
    let mut warmup_clock = 0.0;

    for event_index in 1..=config.max_events {
        let event = match next_event(&state, spec, &mut rng) {
            Ok(event) => event,
            Err(SimError::Absorbed(at)) => {
                if event_index <= warmup {
                    return Err(SimError::AbsorbedBeforeWarmup {
                        state: at,
                        events: event_index - 1,
                        warmup,
                    });
                }
                collector.stats.absorbed = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if event_index > warmup {
            collector.credit_occupancy(&state.counts, event.time - state.clock);
        }
        collector.take_snapshots(&mut state, spec, event.time, false, &mut rng)?;
        apply_event(&mut state, &event, spec, &mut rng)?;
        collector.after_event(&state, &event, event_index, &mut rng);
        if event_index == warmup {
            warmup_clock = state.clock;
        }
    }

    let mut stats = collector.stats;
    stats.final_clock = state.clock;
    stats.horizon = state.clock - warmup_clock;
    Ok(stats)
}

/// Run the modified process used in the stationarity construction: arrivals
/// are switched off and each completing individual is immediately replaced,
/// in place, by a fresh one of the same class, so the occupancy stays pinned
/// at `fixed`. Effort within a class is always shared equally. Residuals
/// start from the residual-life law of each class, which is exactly the
/// stationary profile, so the default warmup is zero.
///
/// Because replacement is positional, each slot of the residual vector is a
/// stationary renewal process in its own right; snapshot statistics can be
/// taken per slot.
pub fn run_modified(
    spec: &NetworkSpec,
    fixed: &State,
    config: &SimConfig,
) -> Result<SimStats, SimError> {
    if fixed.classes() != spec.classes() {
        return Err(SimError::Model(ModelError::DimensionMismatch {
            got: fixed.classes(),
            expected: spec.classes(),
        }));
    }
    if fixed.total() == 0 {
        return Err(SimError::ModifiedStateEmpty(fixed.clone()));
    }
    for class in 1..=spec.classes() {
        if fixed.count(class) > 0 && spec.class_rate(fixed, class)? <= 0.0 {
            return Err(SimError::ModifiedStateStarved { state: fixed.clone(), class });
        }
    }
    let warmup = config.warmup_events.unwrap_or(0);
    if warmup >= config.max_events {
        return Err(SimError::WarmupConsumesBudget { warmup, budget: config.max_events });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let equilibria: Vec<Equilibrium> = spec
        .workloads()
        .iter()
        .map(|w| w.equilibrium())
        .collect::<Result<_, DistError>>()?;
    let mut residuals = Vec::with_capacity(spec.classes());
    for class in 1..=spec.classes() {
        let eq = &equilibria[class - 1];
        residuals.push((0..fixed.count(class)).map(|_| eq.sample(&mut rng)).collect::<Vec<_>>());
    }
    let mut state = SystemState { counts: fixed.clone(), residuals, clock: 0.0 };
    let mut collector = Collector::new(spec, config, warmup);
    collector.stats.warmup_events = warmup;
    let mut warmup_clock = 0.0;

    for event_index in 1..=config.max_events {
        // The next completion: smallest drain time over all individuals.
        let mut best: Option<(f64, ClassIndex, usize)> = None;
        for class in 1..=spec.classes() {
            let queue = &state.residuals[class - 1];
            if queue.is_empty() {
                continue;
            }
            let pace = spec.class_rate(&state.counts, class)? / queue.len() as f64;
            for (position, r) in queue.iter().enumerate() {
                let dt = r / pace;
                if best.is_none_or(|(b, _, _)| dt < b) {
                    best = Some((dt, class, position));
                }
            }
        }
        let (dt, class, position) = best.expect("validated above: some class has work");
        let event_time = state.clock + dt;

        if event_index > warmup {
            collector.credit_occupancy(&state.counts, dt);
        }
        collector.take_snapshots(&mut state, spec, event_time, true, &mut rng)?;
        state.drain_shared(spec, event_time - state.clock)?;
        state.clock = event_time;
        // Replace in place with a fresh draw from the class's base law.
        let fresh = spec.workload(class).sample(&mut rng);
        state.residuals[class - 1][position] = fresh;
        debug_assert_eq!(state.counts, *fixed);

        let event = Event {
            time: event_time,
            kind: EventKind::Completion { from: class, position, to: class },
        };
        collector.after_event(&state, &event, event_index, &mut rng);
        if event_index == warmup {
            warmup_clock = state.clock;
        }
    }

    let mut stats = collector.stats;
    stats.final_clock = state.clock;
    stats.horizon = state.clock - warmup_clock;
    Ok(stats)
}

/// Seed-for-seed reproducibility helper: a scripted source of uniforms for
/// hand-checked trajectories in tests.
#[cfg(test)]
pub(crate) struct ScriptedRng {
    values: Vec<f64>,
    next: usize,
}

#[cfg(test)]
impl ScriptedRng {
    pub(crate) fn new(values: &[f64]) -> ScriptedRng {
        ScriptedRng { values: values.to_vec(), next: 0 }
    }
}

#[cfg(test)]
impl rand::RngCore for ScriptedRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let u = self.values[self.next];
        self.next += 1;
        // rand maps next_u64 >> 11 through 2^-53; invert that mapping.
        ((u * (1u64 << 53) as f64) as u64) << 11
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
