//! Deterministic round-based crash-fault simulation.
//!
//! A protocol is a pair of pure transition functions (initialize, step)
//! plus a declared round bound. The engine runs lock-step rounds: every
//! live slot's outbox is delivered, crashing slots deliver their final
//! round only to an adversary-chosen subset and are then gone, and every
//! surviving slot steps on what it received. Executions are pure
//! functions of `(protocol, inputs, schedule)`, which is what makes
//! execution maps and indistinguishability arguments checkable.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;

use crate::aggregation::{AggregationMap, PropertyCheck};
use crate::cyclic::{SystemParams, Synchrony};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind};
use crate::prefs::{format_default, Domain, Preference, Profile};
use crate::safety;

/// Execution context handed to every protocol transition.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolContext {
    pub params: SystemParams,
    pub synchrony: Synchrony,
}

/// Messages queued for delivery next round, keyed by destination slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outbox<M> {
    to: BTreeMap<usize, M>,
}

impl<M: Clone> Outbox<M> {
    pub fn silent() -> Self {
        Outbox { to: BTreeMap::new() }
    }

    /// The same message to every slot of an `n`-process system.
    pub fn broadcast(n: usize, msg: M) -> Self {
        Outbox { to: (0..n).map(|slot| (slot, msg.clone())).collect() }
    }

    pub fn send(mut self, dest: usize, msg: M) -> Self {
        self.to.insert(dest, msg);
        self
    }

    pub fn destinations(&self) -> impl Iterator<Item = usize> + '_ {
        self.to.keys().copied()
    }
}

/// Result of one protocol step.
pub enum Step<S, M> {
    Continue { state: S, outbox: Outbox<M> },
    Decide(Preference),
}

/// A deterministic round-based protocol.
pub trait Protocol {
    type State;
    type Message: Clone + Eq + std::fmt::Debug;

    fn name(&self) -> &'static str;

    /// Rounds after which a live slot must have decided.
    fn max_rounds(&self, ctx: &ProtocolContext) -> usize;

    /// Local state and round-1 outbox for a slot with the given input.
    fn init(&self, ctx: &ProtocolContext, slot: usize, input: &Preference)
        -> (Self::State, Outbox<Self::Message>);

    /// Consumes the messages delivered this round; either continues with
    /// a new state and next-round outbox or decides.
    fn step(
        &self,
        ctx: &ProtocolContext,
        slot: usize,
        state: Self::State,
        round: usize,
        received: &BTreeMap<usize, Self::Message>,
    ) -> Result<Step<Self::State, Self::Message>>;
}

/// When a faulty slot stops and which destinations its final-round
/// outbox still reaches. Round 0 means silent: the slot never sends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrashEvent {
    pub round: usize,
    pub deliver_to: BTreeSet<usize>,
}

/// Per-slot crash events; slots not listed are correct.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrashSchedule {
    crashes: BTreeMap<usize, CrashEvent>,
}

impl CrashSchedule {
    pub fn none() -> Self {
        CrashSchedule::default()
    }

    /// All listed slots crash before sending anything.
    pub fn silent(slots: impl IntoIterator<Item = usize>) -> Self {
        CrashSchedule {
            crashes: slots
                .into_iter()
                .map(|s| (s, CrashEvent { round: 0, deliver_to: BTreeSet::new() }))
                .collect(),
        }
    }

    pub fn with_crash(
        mut self,
        slot: usize,
        round: usize,
        deliver_to: impl IntoIterator<Item = usize>,
    ) -> Self {
        self.crashes.insert(slot, CrashEvent { round, deliver_to: deliver_to.into_iter().collect() });
        self
    }

    pub fn crashes(&self) -> &BTreeMap<usize, CrashEvent> {
        &self.crashes
    }

    pub fn faulty_slots(&self) -> BTreeSet<usize> {
        self.crashes.keys().copied().collect()
    }

    pub fn crash_round(&self, slot: usize) -> Option<usize> {
        self.crashes.get(&slot).map(|e| e.round)
    }

    pub fn is_empty(&self) -> bool {
        self.crashes.is_empty()
    }

    fn validate(&self, params: SystemParams) -> Result<()> {
        if self.crashes.len() > params.t() {
            return Err(Error::Argument(format!(
                "schedule crashes {} slots but at most t={} may fail",
                self.crashes.len(),
                params.t()
            )));
        }
        for (&slot, event) in &self.crashes {
            if slot >= params.n() {
                return Err(Error::Argument(format!("crash slot {slot} out of range")));
            }
            if let Some(&bad) = event.deliver_to.iter().find(|&&d| d >= params.n()) {
                return Err(Error::Argument(format!("crash delivery target {bad} out of range")));
            }
            if event.round == 0 && !event.deliver_to.is_empty() {
                return Err(Error::Argument("a silent crash delivers nothing".into()));
            }
        }
        Ok(())
    }

    /// Parses the textual form `slot@round:dest1|dest2`, comma-separated
    /// per faulty slot, with 1-based slot identities and `slot@0:` for a
    /// silent crash.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut schedule = CrashSchedule::none();
        let text = text.trim();
        if text.is_empty() {
            return Ok(schedule);
        }
        for entry in text.split(',') {
            let (slot_txt, rest) = entry
                .split_once('@')
                .ok_or_else(|| Error::Argument(format!("schedule entry {entry:?} is missing '@'")))?;
            let (round_txt, dests_txt) = rest
                .split_once(':')
                .ok_or_else(|| Error::Argument(format!("schedule entry {entry:?} is missing ':'")))?;
            let slot: usize = slot_txt
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("invalid slot in {entry:?}")))?;
            if slot < 1 || slot > n {
                return Err(Error::Argument(format!("slot {slot} out of range 1..={n}")));
            }
            let round: usize = round_txt
                .trim()
                .parse()
                .map_err(|_| Error::Argument(format!("invalid round in {entry:?}")))?;
            let mut deliver_to = BTreeSet::new();
            for dest in dests_txt.split('|').map(str::trim).filter(|d| !d.is_empty()) {
                let dest: usize = dest
                    .parse()
                    .map_err(|_| Error::Argument(format!("invalid destination in {entry:?}")))?;
                if dest < 1 || dest > n {
                    return Err(Error::Argument(format!("destination {dest} out of range 1..={n}")));
                }
                deliver_to.insert(dest - 1);
            }
            if schedule.crashes.contains_key(&(slot - 1)) {
                return Err(Error::Argument(format!("slot {slot} listed twice in the schedule")));
            }
            if round == 0 && !deliver_to.is_empty() {
                return Err(Error::Argument(format!("silent crash {entry:?} delivers nothing")));
            }
            schedule.crashes.insert(slot - 1, CrashEvent { round, deliver_to });
        }
        Ok(schedule)
    }

    /// Renders the schedule back into the textual form with 1-based
    /// slot identities.
    pub fn to_spec_string(&self) -> String {
        self.crashes
            .iter()
            .map(|(&slot, event)| {
                let dests: Vec<String> =
                    event.deliver_to.iter().map(|d| (d + 1).to_string()).collect();
                format!("{}@{}:{}", slot + 1, event.round, dests.join("|"))
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Every schedule with at most `t` faulty slots, crash rounds up to
    /// `max_round` (0 means silent), and all delivery subsets.
    pub fn enumerate_all(params: SystemParams, max_round: usize) -> Vec<CrashSchedule> {
        let n = params.n();
        let mut per_slot_events: Vec<CrashEvent> = vec![CrashEvent { round: 0, deliver_to: BTreeSet::new() }];
        for round in 1..=max_round {
            for mask in 0..(1u32 << n) {
                per_slot_events.push(CrashEvent {
                    round,
                    deliver_to: (0..n).filter(|&d| mask & (1 << d) != 0).collect(),
                });
            }
        }
        let mut schedules = vec![CrashSchedule::none()];
        let mut frontier: Vec<CrashSchedule> = vec![CrashSchedule::none()];
        for _ in 0..params.t() {
            let mut next = Vec::new();
            for base in &frontier {
                let first_free = base.crashes.keys().last().map_or(0, |&s| s + 1);
                for slot in first_free..n {
                    for event in &per_slot_events {
                        let mut schedule = base.clone();
                        schedule.crashes.insert(slot, event.clone());
                        next.push(schedule);
                    }
                }
            }
            schedules.extend(next.iter().cloned());
            frontier = next;
        }
        schedules
    }
}

/// One round's delivered messages, keyed by `(from, to)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundLog<M> {
    pub delivered: BTreeMap<(usize, usize), M>,
}

/// Everything observable about one execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace<M> {
    /// Inputs of the slots that started (faulty-but-started included).
    pub inputs: BTreeMap<usize, Preference>,
    pub schedule: CrashSchedule,
    pub rounds: Vec<RoundLog<M>>,
    /// Decisions of correct slots only.
    pub decisions: BTreeMap<usize, Preference>,
    pub correct: BTreeSet<usize>,
}

enum Phase<S> {
    Running(S),
    Decided,
    Dead,
}

fn run_lockstep<P: Protocol>(
    proto: &P,
    ctx: &ProtocolContext,
    inputs: &BTreeMap<usize, Preference>,
    schedule: &CrashSchedule,
) -> Result<ExecutionTrace<P::Message>> {
    schedule.validate(ctx.params)?;
    let n = ctx.params.n();
    let bound = proto.max_rounds(ctx);
    let mut phases: BTreeMap<usize, Phase<P::State>> = BTreeMap::new();
    let mut outboxes: BTreeMap<usize, Outbox<P::Message>> = BTreeMap::new();
    let mut all_decisions: BTreeMap<usize, Preference> = BTreeMap::new();

    for (&slot, input) in inputs {
        if slot >= n {
            return Err(Error::Argument(format!("input slot {slot} out of range")));
        }
        if schedule.crash_round(slot) == Some(0) {
            phases.insert(slot, Phase::Dead);
            continue;
        }
        let (state, outbox) = proto.init(ctx, slot, input);
        phases.insert(slot, Phase::Running(state));
        outboxes.insert(slot, outbox);
    }

    let mut rounds = Vec::new();
    for round in 1..=bound {
        // Delivery. A slot crashing this round reaches only its scheduled
        // subset; a destination receives only if it outlives the round.
        let mut received: BTreeMap<usize, BTreeMap<usize, P::Message>> = BTreeMap::new();
        let mut log = RoundLog { delivered: BTreeMap::new() };
        for (&from, outbox) in &outboxes {
            let partial = match schedule.crash_round(from) {
                Some(r) if r == round => Some(&schedule.crashes()[&from].deliver_to),
                _ => None,
            };
            for (&to, msg) in &outbox.to {
                if to >= n {
                    return Err(Error::Argument(format!(
                        "protocol {} addressed slot {to}, out of range",
                        proto.name()
                    )));
                }
                if let Some(allowed) = partial {
                    if !allowed.contains(&to) {
                        continue;
                    }
                }
                let receiver_lives = inputs.contains_key(&to)
                    && schedule.crash_round(to).is_none_or(|r| r >= round);
                if !receiver_lives {
                    continue;
                }
                received.entry(to).or_default().insert(from, msg.clone());
                log.delivered.insert((from, to), msg.clone());
            }
        }
        rounds.push(log);
        outboxes.clear();

        // Crash transitions: slots whose crash round has arrived are gone
        // before they can step.
        for (&slot, phase) in phases.iter_mut() {
            if matches!(phase, Phase::Running(_)) && schedule.crash_round(slot) == Some(round) {
                *phase = Phase::Dead;
            }
        }

        // Steps.
        let running: Vec<usize> = phases
            .iter()
            .filter(|(_, p)| matches!(p, Phase::Running(_)))
            .map(|(&s, _)| s)
            .collect();
        let empty = BTreeMap::new();
        for slot in running {
            let state = match phases.remove(&slot) {
                Some(Phase::Running(state)) => state,
                _ => unreachable!("slot was collected as running"),
            };
            let inbox = received.get(&slot).unwrap_or(&empty);
            match proto.step(ctx, slot, state, round, inbox)? {
                Step::Continue { state, outbox } => {
                    phases.insert(slot, Phase::Running(state));
                    outboxes.insert(slot, outbox);
                }
                Step::Decide(p) => {
                    all_decisions.insert(slot, p);
                    phases.insert(slot, Phase::Decided);
                }
            }
        }
        if !phases.values().any(|p| matches!(p, Phase::Running(_))) {
            break;
        }
    }

    if let Some((&slot, _)) = phases.iter().find(|(_, p)| matches!(p, Phase::Running(_))) {
        return Err(Error::Liveness(format!(
            "slot {slot} did not decide within {bound} rounds of {}",
            proto.name()
        )));
    }

    let faulty = schedule.faulty_slots();
    let correct: BTreeSet<usize> =
        inputs.keys().copied().filter(|s| !faulty.contains(s)).collect();
    let decisions: BTreeMap<usize, Preference> = all_decisions
        .into_iter()
        .filter(|(slot, _)| correct.contains(slot))
        .collect();
    debug_assert!(correct.iter().all(|s| decisions.contains_key(s)));

    Ok(ExecutionTrace {
        inputs: inputs.clone(),
        schedule: schedule.clone(),
        rounds,
        decisions,
        correct,
    })
}

/// Synchronous lock-step execution of a full `n`-slot profile under a
/// crash schedule.
pub fn run_sync<P: Protocol>(
    proto: &P,
    params: SystemParams,
    profile: &Profile,
    schedule: &CrashSchedule,
) -> Result<ExecutionTrace<P::Message>> {
    if profile.len() != params.n() {
        return Err(Error::Argument(format!(
            "profile has {} entries but n={}",
            profile.len(),
            params.n()
        )));
    }
    let ctx = ProtocolContext { params, synchrony: Synchrony::Sync };
    let inputs: BTreeMap<usize, Preference> =
        profile.entries().iter().cloned().enumerate().collect();
    run_lockstep(proto, &ctx, &inputs, schedule)
}

/// Canonical asynchronous execution: `t` chosen slots crash before
/// sending anything and the remaining `n - t` participants (who carry
/// the profile entries, in slot order) run perfectly lock-step.
pub fn run_async_canonical<P: Protocol>(
    proto: &P,
    params: SystemParams,
    profile: &Profile,
    silent: &BTreeSet<usize>,
) -> Result<ExecutionTrace<P::Message>> {
    if silent.len() != params.t() {
        return Err(Error::Argument(format!(
            "canonical asynchronous executions silence exactly t={} slots, got {}",
            params.t(),
            silent.len()
        )));
    }
    if let Some(&bad) = silent.iter().find(|&&s| s >= params.n()) {
        return Err(Error::Argument(format!("silent slot {bad} out of range")));
    }
    let participants: Vec<usize> = (0..params.n()).filter(|s| !silent.contains(s)).collect();
    if profile.len() != participants.len() {
        return Err(Error::Argument(format!(
            "profile has {} entries but there are {} participants",
            profile.len(),
            participants.len()
        )));
    }
    let ctx = ProtocolContext { params, synchrony: Synchrony::Async };
    let inputs: BTreeMap<usize, Preference> = participants
        .iter()
        .copied()
        .zip(profile.entries().iter().cloned())
        .collect();
    let schedule = CrashSchedule::silent(silent.iter().copied());
    run_lockstep(proto, &ctx, &inputs, &schedule)
}

/// Sweeps every profile in `W_I^participants` through the canonical
/// execution (failure-free synchronous, or last-`t`-silent asynchronous)
/// and materializes the induced aggregation map.
pub fn extract_execution_map<P: Protocol>(
    proto: &P,
    w_i: Domain,
    w_o: Domain,
    params: SystemParams,
    synchrony: Synchrony,
) -> Result<AggregationMap> {
    let slots = params.participants(synchrony);
    let silent: BTreeSet<usize> = (params.n() - params.t()..params.n()).collect();
    AggregationMap::from_fn(w_i, w_o, slots, |profile| {
        let trace = match synchrony {
            Synchrony::Sync => run_sync(proto, params, profile, &CrashSchedule::none())?,
            Synchrony::Async => run_async_canonical(proto, params, profile, &silent)?,
        };
        Profile::new(trace.decisions.into_values().collect())
    })
}

/// Which agreement clause an execution is checked against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskSpec {
    KSet { k: usize },
    Approx { eps: Rational64, metric: MetricKind },
}

impl TaskSpec {
    /// Parses `kset:K` or `approx:EPS:kt|sf`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(':');
        match parts.next() {
            Some("kset") => {
                let k = parts
                    .next()
                    .ok_or_else(|| Error::Argument("kset task needs a bound, e.g. kset:2".into()))?
                    .parse()
                    .map_err(|_| Error::Argument(format!("invalid k in task {text:?}")))?;
                if parts.next().is_some() {
                    return Err(Error::Argument(format!("trailing input in task {text:?}")));
                }
                Ok(TaskSpec::KSet { k })
            }
            Some("approx") => {
                let eps = crate::parse_ratio(
                    parts.next().ok_or_else(|| {
                        Error::Argument("approx task needs a bound, e.g. approx:3:kt".into())
                    })?,
                )?;
                let metric: MetricKind = parts
                    .next()
                    .ok_or_else(|| Error::Argument("approx task needs a metric, kt or sf".into()))?
                    .parse()?;
                if parts.next().is_some() {
                    return Err(Error::Argument(format!("trailing input in task {text:?}")));
                }
                Ok(TaskSpec::Approx { eps, metric })
            }
            _ => Err(Error::Argument(format!(
                "unknown task {text:?} (expected kset:K or approx:EPS:kt|sf)"
            ))),
        }
    }
}

/// A pair unanimously ranked by the correct inputs but flipped in some
/// correct decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceUnanimityViolation {
    pub a: usize,
    pub b: usize,
    pub slot: usize,
}

/// How the agreement clause failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceAgreementViolation {
    TooManyDecisions { distinct: usize },
    TooFarApart { slots: (usize, usize), distance: u64 },
}

/// Per-execution verdict for one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskVerdict {
    pub unanimity: PropertyCheck<TraceUnanimityViolation>,
    pub agreement: PropertyCheck<TraceAgreementViolation>,
}

impl TaskVerdict {
    pub fn passed(&self) -> bool {
        self.unanimity.is_satisfied() && self.agreement.is_satisfied()
    }
}

/// Unanimity on the correct processes of a single execution.
pub fn check_trace_unanimity<M>(
    trace: &ExecutionTrace<M>,
) -> PropertyCheck<TraceUnanimityViolation> {
    let Some(first) = trace.correct.iter().next() else {
        return PropertyCheck::Satisfied;
    };
    let m = trace.inputs[first].m();
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let all_agree = trace
                .correct
                .iter()
                .all(|slot| trace.inputs[slot].strictly_prefers(a, b));
            if !all_agree {
                continue;
            }
            for (&slot, decision) in &trace.decisions {
                if !decision.strictly_prefers(a, b) {
                    return PropertyCheck::Violated(TraceUnanimityViolation { a, b, slot });
                }
            }
        }
    }
    PropertyCheck::Satisfied
}

/// Evaluates unanimity-on-correct and the task's agreement clause for
/// one execution.
pub fn check_task<M>(trace: &ExecutionTrace<M>, task: &TaskSpec) -> Result<TaskVerdict> {
    let unanimity = check_trace_unanimity(trace);
    let agreement = match task {
        TaskSpec::KSet { k } => {
            if *k < 1 {
                return Err(Error::Argument("k-set agreement needs k >= 1".into()));
            }
            let mut distinct: Vec<&Preference> = trace.decisions.values().collect();
            distinct.sort();
            distinct.dedup();
            if distinct.len() > *k {
                PropertyCheck::Violated(TraceAgreementViolation::TooManyDecisions {
                    distinct: distinct.len(),
                })
            } else {
                PropertyCheck::Satisfied
            }
        }
        TaskSpec::Approx { eps, metric } => {
            let slots: Vec<usize> = trace.decisions.keys().copied().collect();
            let mut worst: Option<(usize, usize, u64)> = None;
            for (i, &x) in slots.iter().enumerate() {
                for &y in &slots[i + 1..] {
                    let d = metrics::distance(*metric, &trace.decisions[&x], &trace.decisions[&y])?;
                    if worst.is_none_or(|(_, _, w)| d > w) {
                        worst = Some((x, y, d));
                    }
                }
            }
            match worst {
                Some((x, y, d)) if Rational64::from_integer(d as i64) > *eps => {
                    PropertyCheck::Violated(TraceAgreementViolation::TooFarApart {
                        slots: (x, y),
                        distance: d,
                    })
                }
                _ => PropertyCheck::Satisfied,
            }
        }
    };
    Ok(TaskVerdict { unanimity, agreement })
}

/// Result of the two-execution indistinguishability probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeOutcome {
    /// A pair `(a, b)` with `a ≻ b` in the coalition's input and
    /// `b ≻ a` in everyone else's.
    pub pair: (usize, usize),
    /// Decisions of the slots outside the coalition, failure-free run.
    pub failure_free: BTreeMap<usize, Preference>,
    /// Decisions of the same slots when the coalition is faulty.
    pub with_faults: BTreeMap<usize, Preference>,
    /// Satisfied when those decisions obey unanimity against the
    /// coalition's preference, demonstrating the coalition dictates
    /// nothing.
    pub check: PropertyCheck<TraceUnanimityViolation>,
}

/// Runs the failure-free execution where coalition `t_set` inputs
/// `coalition_pref` and everyone else inputs `others_pref`, then the
/// message-identical execution in which the coalition is faulty, and
/// checks that the outsiders decide identically and respect unanimity
/// on the faulty run.
pub fn indistinguishability_probe<P: Protocol>(
    proto: &P,
    params: SystemParams,
    coalition_pref: &Preference,
    others_pref: &Preference,
    t_set: &BTreeSet<usize>,
) -> Result<ProbeOutcome> {
    if t_set.is_empty() || t_set.len() > params.t() {
        return Err(Error::Argument(format!(
            "coalition size must be within 1..=t={}, got {}",
            params.t(),
            t_set.len()
        )));
    }
    if let Some(&bad) = t_set.iter().find(|&&s| s >= params.n()) {
        return Err(Error::Argument(format!("coalition slot {bad} out of range")));
    }
    let m = coalition_pref.m();
    let pair = (0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .find(|&(a, b)| {
            a != b && coalition_pref.strictly_prefers(a, b) && others_pref.strictly_prefers(b, a)
        })
        .ok_or_else(|| {
            Error::Argument("the two preferences agree on every strict pair".into())
        })?;

    let profile = Profile::new(
        (0..params.n())
            .map(|slot| {
                if t_set.contains(&slot) { coalition_pref.clone() } else { others_pref.clone() }
            })
            .collect(),
    )?;
    let failure_free = run_sync(proto, params, &profile, &CrashSchedule::none())?;

    // Identical messages, but the coalition is recorded as faulty: each
    // member crashes after its last send with full delivery.
    let ctx = ProtocolContext { params, synchrony: Synchrony::Sync };
    let after_last_round = proto.max_rounds(&ctx) + 1;
    let mut schedule = CrashSchedule::none();
    for &slot in t_set {
        schedule = schedule.with_crash(slot, after_last_round, 0..params.n());
    }
    let with_faults = run_sync(proto, params, &profile, &schedule)?;

    if failure_free.rounds != with_faults.rounds {
        return Err(Error::Determinism(
            "the two probe executions delivered different messages".into(),
        ));
    }
    let outside: BTreeSet<usize> = (0..params.n()).filter(|s| !t_set.contains(s)).collect();
    let free_decisions: BTreeMap<usize, Preference> = failure_free
        .decisions
        .iter()
        .filter(|(s, _)| outside.contains(s))
        .map(|(&s, p)| (s, p.clone()))
        .collect();
    let faulty_decisions = with_faults.decisions.clone();
    if free_decisions != faulty_decisions {
        return Err(Error::Determinism(
            "outsiders decided differently in the two probe executions".into(),
        ));
    }
    let check = check_trace_unanimity(&with_faults);
    Ok(ProbeOutcome { pair, failure_free: free_decisions, with_faults: faulty_decisions, check })
}

/// Floods every known input for `t + 1` synchronous rounds (one exchange
/// in the canonical asynchronous case), then decides the first member of
/// the safe area of its view under the canonical serialization order.
#[derive(Debug, Clone)]
pub struct FloodDecide {
    w_o: Domain,
}

impl FloodDecide {
    pub fn new(w_o: Domain) -> Self {
        FloodDecide { w_o }
    }

    fn select(&self, ctx: &ProtocolContext, slot: usize, view: &BTreeMap<usize, Preference>) -> Result<Preference> {
        if view.values().any(|p| p.m() != self.w_o.m()) {
            return Err(Error::Argument("inputs and output domain disagree on m".into()));
        }
        let members: Vec<Preference> = view.values().cloned().collect();
        let self_pos = view.keys().position(|&s| s == slot).expect("own input is in the view");
        let mut area = safety::safe_area_clamped(&members, self_pos, ctx.params.t(), &self.w_o)?;
        area.sort_by_key(format_default);
        area.into_iter().next().ok_or_else(|| {
            Error::Liveness(format!("slot {slot} has an empty safe area; no admissible decision"))
        })
    }
}

impl Protocol for FloodDecide {
    type State = BTreeMap<usize, Preference>;
    type Message = BTreeMap<usize, Preference>;

    fn name(&self) -> &'static str {
        "flood"
    }

    fn max_rounds(&self, ctx: &ProtocolContext) -> usize {
        match ctx.synchrony {
            Synchrony::Sync => ctx.params.t() + 1,
            Synchrony::Async => 1,
        }
    }

    fn init(
        &self,
        ctx: &ProtocolContext,
        slot: usize,
        input: &Preference,
    ) -> (Self::State, Outbox<Self::Message>) {
        let view: BTreeMap<usize, Preference> = [(slot, input.clone())].into();
        let outbox = Outbox::broadcast(ctx.params.n(), view.clone());
        (view, outbox)
    }

    fn step(
        &self,
        ctx: &ProtocolContext,
        slot: usize,
        mut state: Self::State,
        round: usize,
        received: &BTreeMap<usize, Self::Message>,
    ) -> Result<Step<Self::State, Self::Message>> {
        for view in received.values() {
            for (&origin, pref) in view {
                state.entry(origin).or_insert_with(|| pref.clone());
            }
        }
        if round >= self.max_rounds(ctx) {
            Ok(Step::Decide(self.select(ctx, slot, &state)?))
        } else {
            let outbox = Outbox::broadcast(ctx.params.n(), state.clone());
            Ok(Step::Continue { state, outbox })
        }
    }
}

/// Negative control: everyone copies slot 1's input after one round,
/// falling back to its own input if the leader stays silent. Violates
/// unanimity as soon as the leader is faulty with a divergent input.
#[derive(Debug, Clone, Default)]
pub struct NaiveLeader;

impl Protocol for NaiveLeader {
    type State = Preference;
    type Message = Preference;

    fn name(&self) -> &'static str {
        "naive-leader"
    }

    fn max_rounds(&self, _ctx: &ProtocolContext) -> usize {
        1
    }

    fn init(
        &self,
        ctx: &ProtocolContext,
        slot: usize,
        input: &Preference,
    ) -> (Self::State, Outbox<Self::Message>) {
        let outbox = if slot == 0 {
            Outbox::broadcast(ctx.params.n(), input.clone())
        } else {
            Outbox::silent()
        };
        (input.clone(), outbox)
    }

    fn step(
        &self,
        _ctx: &ProtocolContext,
        _slot: usize,
        state: Self::State,
        _round: usize,
        received: &BTreeMap<usize, Self::Message>,
    ) -> Result<Step<Self::State, Self::Message>> {
        Ok(Step::Decide(received.get(&0).cloned().unwrap_or(state)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::{enumerate_strict, parse_default, parse_profile_default};
    use crate::safety::check_u_unanimity;

    fn pref(text: &str) -> Preference {
        parse_default(text).unwrap()
    }

    fn flood(m: usize) -> FloodDecide {
        FloodDecide::new(enumerate_strict(m).unwrap())
    }

    #[test]
    fn flood_failure_free_constant_profile() {
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("1>0>2,1>0>2,1>0>2").unwrap();
        let trace = run_sync(&flood(3), params, &profile, &CrashSchedule::none()).unwrap();
        assert_eq!(trace.correct.len(), 3);
        for slot in 0..3 {
            assert_eq!(trace.decisions[&slot], pref("1>0>2"));
        }
    }

    #[test]
    fn flood_silent_fault_respects_unanimity() {
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("0>1>2,0>1>2,2>1>0").unwrap();
        let schedule = CrashSchedule::silent([2]);
        let trace = run_sync(&flood(3), params, &profile, &schedule).unwrap();
        assert_eq!(trace.correct, BTreeSet::from([0, 1]));
        // correct inputs are both 0>1>2, so every unanimous pair must hold
        assert!(check_trace_unanimity(&trace).is_satisfied());
        for slot in [0, 1] {
            assert_eq!(trace.decisions[&slot], pref("0>1>2"));
        }
    }

    #[test]
    fn flood_cyclic_profile_decides_own_inputs() {
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("0>1>2,1>2>0,2>0>1").unwrap();
        let trace = run_sync(&flood(3), params, &profile, &CrashSchedule::none()).unwrap();
        for slot in 0..3 {
            assert_eq!(&trace.decisions[&slot], profile.get(slot), "slot {slot}");
        }
    }

    #[test]
    fn async_canonical_examples() {
        // constant inputs: both participants decide the common input
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("2>0>1,2>0>1").unwrap();
        let trace =
            run_async_canonical(&flood(3), params, &profile, &BTreeSet::from([2])).unwrap();
        assert_eq!(trace.decisions[&0], pref("2>0>1"));
        assert_eq!(trace.decisions[&1], pref("2>0>1"));

        // cyclic inputs on the participants: everyone decides its own
        let params = SystemParams::new(4, 1).unwrap();
        let profile = parse_profile_default("0>1>2,1>2>0,2>0>1").unwrap();
        let trace =
            run_async_canonical(&flood(3), params, &profile, &BTreeSet::from([3])).unwrap();
        for slot in 0..3 {
            assert_eq!(&trace.decisions[&slot], profile.get(slot));
        }

        // a lone participant decides within the unanimity set of its input
        let params = SystemParams::new(2, 1).unwrap();
        let profile = parse_profile_default("1>0").unwrap();
        let trace =
            run_async_canonical(&flood(2), params, &profile, &BTreeSet::from([1])).unwrap();
        assert_eq!(trace.decisions[&0], pref("1>0"));

        // the silent set must have exactly t slots
        assert!(run_async_canonical(&flood(2), params, &profile, &BTreeSet::new()).is_err());
    }

    #[test]
    fn executions_are_deterministic() {
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("0>1>2,2>1>0,1>0>2").unwrap();
        let schedule = CrashSchedule::none().with_crash(1, 1, [0]);
        let a = run_sync(&flood(3), params, &profile, &schedule).unwrap();
        let b = run_sync(&flood(3), params, &profile, &schedule).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mid_round_crash_partial_delivery() {
        // slot 1 crashes in round 1 and reaches only slot 0; flooding
        // still spreads its input to everyone by round t+1 = 2, so both
        // survivors decide out of the safe area of the full view
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("0>1>2,2>1>0,0>2>1").unwrap();
        let schedule = CrashSchedule::none().with_crash(1, 1, [0]);
        let trace = run_sync(&flood(3), params, &profile, &schedule).unwrap();
        assert_eq!(trace.correct, BTreeSet::from([0, 2]));
        assert!(check_trace_unanimity(&trace).is_satisfied());
        let l3 = enumerate_strict(3).unwrap();
        for &slot in &[0usize, 2] {
            let area = crate::safety::safe_area(profile.entries(), slot, 1, &l3).unwrap();
            assert!(area.contains(&trace.decisions[&slot]), "slot {slot}");
        }
    }

    #[test]
    fn liveness_violation_is_reported() {
        struct Mute;
        impl Protocol for Mute {
            type State = ();
            type Message = ();
            fn name(&self) -> &'static str {
                "mute"
            }
            fn max_rounds(&self, _: &ProtocolContext) -> usize {
                2
            }
            fn init(&self, _: &ProtocolContext, _: usize, _: &Preference) -> ((), Outbox<()>) {
                ((), Outbox::silent())
            }
            fn step(
                &self,
                _: &ProtocolContext,
                _: usize,
                _: (),
                _: usize,
                _: &BTreeMap<usize, ()>,
            ) -> Result<Step<(), ()>> {
                Ok(Step::Continue { state: (), outbox: Outbox::silent() })
            }
        }
        let params = SystemParams::new(2, 1).unwrap();
        let profile = parse_profile_default("0>1,0>1").unwrap();
        match run_sync(&Mute, params, &profile, &CrashSchedule::none()) {
            Err(Error::Liveness(_)) => {}
            other => panic!("expected a liveness error, got {other:?}"),
        }
    }

    #[test]
    fn extracted_map_has_full_table_and_u_unanimity() {
        let l2 = enumerate_strict(2).unwrap();
        let params = SystemParams::new(2, 1).unwrap();
        let map = extract_execution_map(
            &flood(2),
            l2.clone(),
            l2.clone(),
            params,
            Synchrony::Sync,
        )
        .unwrap();
        assert_eq!(map.input_space().len(), 4);
        assert!(check_u_unanimity(&map, 1).is_satisfied());
        // two slots never produce more than two distinct outputs, and the
        // reversal profile pins both, so consensus fails
        assert!(map.check_k_set(2).unwrap().is_satisfied());
        assert!(!map.check_k_set(1).unwrap().is_satisfied());
    }

    #[test]
    fn zero_unanimity_regime_pins_strict_inputs() {
        // with t >= n/2 the asynchronous map satisfies 0-unanimity, which
        // forces every strict input through unchanged
        let l3 = enumerate_strict(3).unwrap();
        let params = SystemParams::new(4, 2).unwrap();
        let map = extract_execution_map(
            &flood(3),
            l3.clone(),
            l3.clone(),
            params,
            Synchrony::Async,
        )
        .unwrap();
        assert!(check_u_unanimity(&map, 0).is_satisfied());
        for (input, output) in map.rows() {
            assert_eq!(&input, output);
        }
    }

    #[test]
    fn extracted_map_outputs_stay_in_safe_areas() {
        // passing (participants - t)-unanimity forces every output into
        // the corresponding safe area
        let l3 = enumerate_strict(3).unwrap();
        let params = SystemParams::new(3, 1).unwrap();
        let map = extract_execution_map(
            &flood(3),
            l3.clone(),
            l3.clone(),
            params,
            Synchrony::Sync,
        )
        .unwrap();
        let u = (params.participants(Synchrony::Sync) - params.t()) as i64;
        assert!(check_u_unanimity(&map, u).is_satisfied());
        for (input, output) in map.rows() {
            for slot in 0..map.n_slots() {
                let area =
                    crate::safety::safe_area(input.entries(), slot, params.t(), &l3).unwrap();
                assert!(area.contains(output.get(slot)));
            }
        }
    }

    #[test]
    fn task_checks() {
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("0>1>2,0>1>2,0>1>2").unwrap();
        let trace = run_sync(&flood(3), params, &profile, &CrashSchedule::none()).unwrap();
        let verdict = check_task(&trace, &TaskSpec::KSet { k: 1 }).unwrap();
        assert!(verdict.passed());
        let verdict = check_task(
            &trace,
            &TaskSpec::Approx { eps: Rational64::from_integer(0), metric: MetricKind::Kt },
        )
        .unwrap();
        assert!(verdict.passed());

        // cyclic profile: pairwise KT is 2, so 1-agreement fails
        let profile = parse_profile_default("0>1>2,1>2>0,2>0>1").unwrap();
        let trace = run_sync(&flood(3), params, &profile, &CrashSchedule::none()).unwrap();
        let verdict = check_task(
            &trace,
            &TaskSpec::Approx { eps: Rational64::from_integer(1), metric: MetricKind::Kt },
        )
        .unwrap();
        assert!(verdict.unanimity.is_satisfied());
        match verdict.agreement {
            PropertyCheck::Violated(TraceAgreementViolation::TooFarApart { distance, .. }) => {
                assert_eq!(distance, 2)
            }
            other => panic!("expected an agreement violation, got {other:?}"),
        }
    }

    #[test]
    fn unanimity_violation_witness_names_the_pair() {
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("0>1>2,2>1>0,2>1>0").unwrap();
        // leader is silent-faulty, followers fall back to their own inputs,
        // which here agree, so unanimity holds; flip the leader input case:
        let schedule = CrashSchedule::none().with_crash(0, 1, [1]);
        let trace = run_sync(&NaiveLeader, params, &profile, &schedule).unwrap();
        // slot 1 copied the dead leader (0>1>2), slot 2 kept 2>1>0; the
        // correct inputs unanimously rank both 1 and 2 over 0, and the
        // scan reports the first flipped pair
        match check_trace_unanimity(&trace) {
            PropertyCheck::Violated(v) => {
                assert_eq!((v.a, v.b), (1, 0));
                assert_eq!(v.slot, 1);
            }
            PropertyCheck::Satisfied => panic!("leader copying must break unanimity here"),
        }
    }

    #[test]
    fn probe_passes_flood_and_fails_naive_leader() {
        let params = SystemParams::new(3, 1).unwrap();
        let r = pref("0>1>2");
        let r_prime = pref("2>1>0");
        let outcome = indistinguishability_probe(
            &flood(3),
            params,
            &r,
            &r_prime,
            &BTreeSet::from([0]),
        )
        .unwrap();
        assert_eq!(outcome.pair, (0, 1));
        assert!(outcome.check.is_satisfied());
        // the outsiders rank 2 over 0 in both executions
        for decisions in [&outcome.failure_free, &outcome.with_faults] {
            for slot in [1, 2] {
                assert!(decisions[&slot].strictly_prefers(2, 0));
            }
        }

        let outcome = indistinguishability_probe(
            &NaiveLeader,
            params,
            &r,
            &r_prime,
            &BTreeSet::from([0]),
        )
        .unwrap();
        assert!(!outcome.check.is_satisfied());
    }

    #[test]
    fn probe_argument_errors() {
        let params = SystemParams::new(3, 1).unwrap();
        let r = pref("0>1>2");
        assert!(indistinguishability_probe(&flood(3), params, &r, &r, &BTreeSet::from([0]))
            .is_err());
        assert!(indistinguishability_probe(
            &flood(3),
            params,
            &r,
            &pref("2>1>0"),
            &BTreeSet::new()
        )
        .is_err());
        assert!(indistinguishability_probe(
            &flood(3),
            params,
            &r,
            &pref("2>1>0"),
            &BTreeSet::from([0, 1])
        )
        .is_err());
    }

    #[test]
    fn schedule_parsing_round_trips() {
        let schedule = CrashSchedule::parse("2@0:,3@2:1|2", 3).unwrap();
        assert_eq!(schedule.crash_round(1), Some(0));
        assert_eq!(schedule.crash_round(2), Some(2));
        assert_eq!(
            schedule.crashes()[&2].deliver_to,
            BTreeSet::from([0, 1])
        );
        assert_eq!(schedule.to_spec_string(), "2@0:,3@2:1|2");
        assert_eq!(CrashSchedule::parse("", 3).unwrap(), CrashSchedule::none());
        assert!(CrashSchedule::parse("4@0:", 3).is_err());
        assert!(CrashSchedule::parse("1@0:2", 3).is_err());
        assert!(CrashSchedule::parse("1@1:2,1@1:2", 3).is_err());
    }

    #[test]
    fn schedule_enumeration_counts() {
        let params = SystemParams::new(3, 1).unwrap();
        let schedules = CrashSchedule::enumerate_all(params, 2);
        // none + 3 slots x (silent + 2 rounds x 8 subsets)
        assert_eq!(schedules.len(), 1 + 3 * (1 + 2 * 8));
        assert!(schedules.iter().all(|s| s.crashes().len() <= 1));
    }

    #[test]
    fn task_spec_parsing() {
        assert_eq!(TaskSpec::parse("kset:2").unwrap(), TaskSpec::KSet { k: 2 });
        assert_eq!(
            TaskSpec::parse("approx:7/2:sf").unwrap(),
            TaskSpec::Approx { eps: Rational64::new(7, 2), metric: MetricKind::Sf }
        );
        assert!(TaskSpec::parse("kset").is_err());
        assert!(TaskSpec::parse("approx:1").is_err());
        assert!(TaskSpec::parse("other:1").is_err());
    }
}
