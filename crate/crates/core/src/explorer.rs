//! Guided GUI exploration driver.
//!
//! Maintains two priority queues: `Q` holds event-sequence candidates
//! (partial one-event extensions of known states, and complete sequences
//! produced by the solver), `L` holds symbolic event summaries awaiting
//! solving. The driver drains `Q`, creating one concrete summary per
//! applied sequence (for the final event only) and updating the model;
//! when `Q` empties it dequeues the best eligible summary from `L`, asks
//! the solver for candidate sequences, and resumes. Unsolvable summaries
//! are penalized for a window of iterations and retired after repeated
//! failures, which guarantees termination.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::appir::{entry_events, Api, App, Instr, MethodSig};
use crate::gui_model::{EventSummary, GuiModel, StateId, SummaryId, SummaryStatus};
use crate::ipcfg::{build_ipcfg, enumerate_paths, executed_path, get_symbolic_paths, PathBounds};
use crate::runtime::{
    boot, coverage_of_log, extract_events, CoverageSet, Event, ExecLog, RuntimeState,
};
use crate::solver::{solve_summary, SolveBounds};

/// A user-specified code target: one bytecode statement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Target {
    pub method: MethodSig,
    pub index: usize,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.method, self.index)
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (sig, idx) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("target `{s}` is not of the form method:index"))?;
        let index =
            idx.trim().parse::<usize>().map_err(|_| format!("bad target index `{idx}`"))?;
        Ok(Target { method: MethodSig(sig.trim().to_string()), index })
    }
}

/// Exploration budget and bounds; every field is a CLI flag.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Budget {
    pub max_events: u64,
    pub max_seconds: Option<u64>,
    pub path_bounds: PathBounds,
    pub solve_bounds: SolveBounds,
    pub penalty_window: u64,
    pub max_attempts: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_events: 2000,
            max_seconds: None,
            path_bounds: PathBounds::default(),
            solve_bounds: SolveBounds::default(),
            penalty_window: 3,
            max_attempts: 5,
        }
    }
}

/// How often a failed partial candidate is re-queued before being dropped.
const MAX_CANDIDATE_RETRIES: u32 = 3;

// ---------------------------------------------------------------------------
// Priorities and queues
// ---------------------------------------------------------------------------

/// Event-sequence priority: partial before complete, then statically
/// reachable target count, then presence of GUI-transition code, then FIFO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct QPriority(pub (u8, u32, u8, Reverse<u64>));

impl QPriority {
    pub fn new(is_partial: bool, target_count: u32, has_transition: bool, insertion: u64) -> Self {
        QPriority((is_partial as u8, target_count, has_transition as u8, Reverse(insertion)))
    }
}

/// Symbolic-summary priority: targets on the path, GUI-transition API on
/// the path, number of field writes on the path, then FIFO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LPriority(pub (u32, u8, u32, Reverse<u64>));

impl LPriority {
    pub fn new(targets_on_path: u32, has_transition: bool, write_count: u32, insertion: u64) -> Self {
        LPriority((targets_on_path, has_transition as u8, write_count, Reverse(insertion)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateKind {
    /// One event extending an already-reachable state.
    Partial { source: StateId },
    /// Entry-to-target sequence; `origin` is the symbolic summary the
    /// solver built it for.
    Complete { origin: Option<SummaryId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub events: Vec<Event>,
    pub kind: CandidateKind,
    pub retries: u32,
}

#[derive(Debug, PartialEq, Eq)]
struct QEntry {
    priority: QPriority,
    candidate: Candidate,
}

impl Ord for QEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.priority.cmp(&other.priority)
    }
}

impl PartialOrd for QEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The event sequence priority queue `Q`.
#[derive(Debug, Default)]
pub struct SeqQueue {
    heap: BinaryHeap<QEntry>,
    seen_complete: BTreeSet<Vec<Event>>,
    pub insertions: u64,
}

impl SeqQueue {
    pub fn push(&mut self, candidate: Candidate, priority: QPriority) {
        if let CandidateKind::Complete { .. } = candidate.kind {
            if !self.seen_complete.insert(candidate.events.clone()) {
                return;
            }
        }
        self.insertions += 1;
        self.heap.push(QEntry { priority, candidate });
    }

    pub fn pop(&mut self) -> Option<Candidate> {
        self.heap.pop().map(|e| e.candidate)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LEntry {
    pub summary: SummaryId,
    pub priority: LPriority,
    /// Entries with `penalty_until` beyond the current iteration are
    /// ineligible for selection.
    pub penalty_until: u64,
}

/// The symbolic event summary priority queue `L`.
#[derive(Debug, Default)]
pub struct SummaryQueue {
    entries: Vec<LEntry>,
}

impl SummaryQueue {
    pub fn push(&mut self, entry: LEntry) {
        self.entries.push(entry);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &SummaryId) -> bool {
        self.entries.iter().any(|e| &e.summary == id)
    }

    pub fn remove(&mut self, id: &SummaryId) {
        self.entries.retain(|e| &e.summary != id);
    }

    /// Removes and returns the highest-priority entry eligible at
    /// `iteration` (penalized entries are skipped).
    pub fn pop_eligible(&mut self, iteration: u64) -> Option<LEntry> {
        let best = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.penalty_until <= iteration)
            .max_by_key(|(_, e)| e.priority)?;
        let idx = best.0;
        Some(self.entries.remove(idx))
    }

    /// Earliest iteration at which some entry becomes eligible.
    pub fn next_eligible_at(&self) -> Option<u64> {
        self.entries.iter().map(|e| e.penalty_until).min()
    }
}

// ---------------------------------------------------------------------------
// History and coverage
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub sequence: Vec<Event>,
    pub layout: Option<String>,
    pub handlers: Vec<MethodSig>,
    pub log_digest: Option<String>,
    pub coverage_delta: usize,
    pub summary: Option<SummaryId>,
    pub outcome: String,
    /// Instructions this record's run covered; kept for prefix-monotone
    /// coverage checks, not serialized into reports.
    #[serde(skip)]
    pub covered_set: CoverageSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetHit {
    pub target: Target,
    pub sequence: Vec<Event>,
    pub iteration: u64,
}

/// Append-only record of the exploration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExplorationHistory {
    pub records: Vec<HistoryRecord>,
    pub target_hits: Vec<TargetHit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub covered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetDetail {
    pub target: Target,
    pub hit: bool,
    pub witness_len: Option<usize>,
}

/// Instruction coverage per method and aggregate, plus target coverage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered: usize,
    pub total: usize,
    pub per_method: BTreeMap<MethodSig, MethodCoverage>,
    pub targets_hit: usize,
    pub targets_total: usize,
    pub target_details: Vec<TargetDetail>,
}

impl CoverageReport {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

/// Builds the coverage report for a covered-instruction set.
pub fn coverage_report(
    covered: &CoverageSet,
    app: &App,
    targets: &[Target],
    hits: &BTreeMap<Target, (Vec<Event>, u64)>,
) -> CoverageReport {
    let mut per_method = BTreeMap::new();
    for (sig, method) in &app.methods {
        let c = covered.iter().filter(|(m, _)| m == sig).count();
        per_method.insert(sig.clone(), MethodCoverage { covered: c, total: method.body.len() });
    }
    let target_details: Vec<TargetDetail> = targets
        .iter()
        .map(|t| TargetDetail {
            target: t.clone(),
            hit: hits.contains_key(t),
            witness_len: hits.get(t).map(|(seq, _)| seq.len()),
        })
        .collect();
    CoverageReport {
        covered: covered.len(),
        total: app.instruction_count(),
        per_method,
        targets_hit: target_details.iter().filter(|d| d.hit).count(),
        targets_total: targets.len(),
        target_details,
    }
}

/// Aggregate coverage over the history (the union of per-record deltas is
/// maintained separately; this recomputes the report from records for
/// monotonicity checks).
pub fn coverage(history: &ExplorationHistory, app: &App, targets: &[Target]) -> CoverageReport {
    let mut covered = CoverageSet::new();
    for r in &history.records {
        covered.extend(r.covered_set.iter().cloned());
    }
    let hits: BTreeMap<Target, (Vec<Event>, u64)> = history
        .target_hits
        .iter()
        .map(|h| (h.target.clone(), (h.sequence.clone(), h.iteration)))
        .collect();
    coverage_report(&covered, app, targets, &hits)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QueueStats {
    pub sequences_applied: u64,
    pub partial_applied: u64,
    pub complete_applied: u64,
    pub failures: u64,
    pub solver_calls: u64,
    pub solver_candidates: u64,
    pub solver_misses: u64,
    pub retired: Vec<(SummaryId, String)>,
}

/// Everything an exploration run produces.
#[derive(Debug)]
pub struct ExploreOutcome {
    pub model: GuiModel,
    pub history: ExplorationHistory,
    pub coverage: CoverageReport,
    pub stats: QueueStats,
    /// Full applied sequence witnessing each concrete summary.
    pub witnesses: BTreeMap<SummaryId, Vec<Event>>,
    pub applied_events: u64,
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct HandlerStatics {
    reachable: BTreeSet<(MethodSig, usize)>,
    has_transition_api: bool,
}

struct Explorer<'a> {
    app: &'a App,
    targets: &'a [Target],
    budget: Budget,
    seed: u64,
    model: GuiModel,
    q: SeqQueue,
    l: SummaryQueue,
    live: Option<(RuntimeState, StateId, Vec<Event>)>,
    covered: CoverageSet,
    applied_events: u64,
    iteration: u64,
    history: ExplorationHistory,
    stats: QueueStats,
    penalties: BTreeMap<SummaryId, u32>,
    handler_statics: BTreeMap<MethodSig, HandlerStatics>,
    witnesses: BTreeMap<SummaryId, Vec<Event>>,
    hits: BTreeMap<Target, (Vec<Event>, u64)>,
    started: Instant,
}

/// Runs the guided exploration until both queues drain or the budget is
/// exhausted.
pub fn explore(app: &App, targets: &[Target], budget: Budget, seed: u64) -> ExploreOutcome {
    let mut explorer = Explorer {
        app,
        targets,
        budget,
        seed,
        model: GuiModel::new(),
        q: SeqQueue::default(),
        l: SummaryQueue::default(),
        live: None,
        covered: CoverageSet::new(),
        applied_events: 0,
        iteration: 0,
        history: ExplorationHistory::default(),
        stats: QueueStats::default(),
        penalties: BTreeMap::new(),
        handler_statics: BTreeMap::new(),
        witnesses: BTreeMap::new(),
        hits: BTreeMap::new(),
        started: Instant::now(),
    };
    explorer.run();
    let coverage = coverage_report(&explorer.covered, app, targets, &explorer.hits);
    ExploreOutcome {
        model: explorer.model,
        history: explorer.history,
        coverage,
        stats: explorer.stats,
        witnesses: explorer.witnesses,
        applied_events: explorer.applied_events,
    }
}

impl<'a> Explorer<'a> {
    fn run(&mut self) {
        for event in entry_events(self.app) {
            let candidate = Candidate {
                events: vec![event],
                kind: CandidateKind::Complete { origin: None },
                retries: 0,
            };
            let priority = self.q_priority(&candidate);
            self.q.push(candidate, priority);
        }
        while !self.exhausted() {
            while let Some(candidate) = self.q.pop() {
                self.iteration += 1;
                self.apply_candidate(candidate);
                if self.exhausted() {
                    return;
                }
            }
            if !self.solve_phase() {
                break;
            }
        }
    }

    fn exhausted(&self) -> bool {
        if self.applied_events >= self.budget.max_events {
            return true;
        }
        if let Some(secs) = self.budget.max_seconds {
            if self.started.elapsed().as_secs() >= secs {
                return true;
            }
        }
        false
    }

    // -- static handler info -------------------------------------------------

    fn handler_statics(&mut self, handler: &MethodSig) -> &HandlerStatics {
        if !self.handler_statics.contains_key(handler) {
            let g = build_ipcfg(handler, self.app, self.budget.path_bounds.call_depth);
            let reachable = g.reachable_statements();
            let has_transition_api = reachable.iter().any(|(m, pc)| {
                self.app.method(m).is_some_and(|method| {
                    matches!(
                        method.body.get(*pc),
                        Some(Instr::Api { api: Api::UiStartActivity | Api::UiFinish, .. })
                    )
                })
            });
            self.handler_statics
                .insert(handler.clone(), HandlerStatics { reachable, has_transition_api });
        }
        &self.handler_statics[handler]
    }

    /// Handler of a candidate's final event, resolved through the model
    /// (partials) or the origin summary / manifest (completes).
    fn candidate_handler(&self, candidate: &Candidate) -> Option<MethodSig> {
        match &candidate.kind {
            CandidateKind::Partial { source } => {
                let desc = candidate.events.last()?.descriptor().to_string();
                self.model.theta.get(source)?.get(&desc)?.first().cloned()
            }
            CandidateKind::Complete { origin } => {
                if let Some(origin) = origin {
                    return self
                        .model
                        .summaries
                        .get(origin)
                        .and_then(|s| s.path.as_ref())
                        .map(|p| p.root.clone());
                }
                match candidate.events.last()? {
                    Event::Launch { activity } | Event::Intent { activity, .. } => {
                        self.app.activity(activity)?.lifecycle.on_create.clone()
                    }
                    _ => None,
                }
            }
        }
    }

    fn q_priority(&mut self, candidate: &Candidate) -> QPriority {
        let is_partial = matches!(candidate.kind, CandidateKind::Partial { .. });
        let (target_count, has_transition) = match self.candidate_handler(candidate) {
            Some(handler) => {
                let targets = self.targets.to_vec();
                let statics = self.handler_statics(&handler);
                let count = targets
                    .iter()
                    .filter(|t| statics.reachable.contains(&(t.method.clone(), t.index)))
                    .count() as u32;
                (count, statics.has_transition_api)
            }
            None => (0, false),
        };
        QPriority::new(is_partial, target_count, has_transition, self.q.insertions)
    }

    fn l_priority(&self, summary: &EventSummary, insertion: u64) -> LPriority {
        let Some(path) = &summary.path else {
            return LPriority::new(0, false, 0, insertion);
        };
        let mut targets_on_path = 0u32;
        let mut has_transition = false;
        let mut writes = 0u32;
        for (m, pc) in &path.statements {
            if self.targets.iter().any(|t| &t.method == m && t.index == *pc) {
                targets_on_path += 1;
            }
            match self.app.method(m).and_then(|method| method.body.get(*pc)) {
                Some(Instr::Api { api: Api::UiStartActivity | Api::UiFinish, .. }) => {
                    has_transition = true;
                }
                Some(Instr::SPut { .. }) | Some(Instr::IPut { .. }) => writes += 1,
                _ => {}
            }
        }
        LPriority::new(targets_on_path, has_transition, writes, insertion)
    }

    // -- sequence application ------------------------------------------------

    fn record_failure(&mut self, sequence: Vec<Event>, index: usize, error: String) {
        self.stats.failures += 1;
        self.history.records.push(HistoryRecord {
            sequence,
            layout: None,
            handlers: vec![],
            log_digest: None,
            coverage_delta: 0,
            summary: None,
            outcome: format!("failed at {index}: {error}"),
            covered_set: CoverageSet::new(),
        });
        self.live = None;
    }

    /// Re-queues a failed partial candidate a bounded number of times;
    /// penalties accumulated meanwhile may route it differently.
    fn maybe_retry(&mut self, mut candidate: Candidate) {
        if matches!(candidate.kind, CandidateKind::Partial { .. })
            && candidate.retries < MAX_CANDIDATE_RETRIES
        {
            candidate.retries += 1;
            let priority = self.q_priority(&candidate);
            self.q.push(candidate, priority);
        }
    }

    fn apply_candidate(&mut self, candidate: Candidate) {
        let origin = match &candidate.kind {
            CandidateKind::Complete { origin } => origin.clone(),
            CandidateKind::Partial { .. } => None,
        };
        let is_partial = matches!(candidate.kind, CandidateKind::Partial { .. });

        // Resolve the full sequence and how to run it. A partial candidate
        // extends the live state when its source layout matches; otherwise
        // the explorer replays a model route to the source state first,
        // validating every hop's destination.
        enum Run {
            Extend(Event),
            Fresh { seq: Vec<Event>, route: Vec<crate::gui_model::Transition> },
        }
        let (full_seq, run) = match &candidate.kind {
            CandidateKind::Partial { source } => {
                let event = candidate.events[0].clone();
                match &self.live {
                    Some((_, live_state, live_seq)) if live_state == source => {
                        let mut seq = live_seq.clone();
                        seq.push(event.clone());
                        (seq, Run::Extend(event))
                    }
                    _ => {
                        let route = match self
                            .model
                            .find_route_transitions(None, source, &self.penalties)
                        {
                            Ok(r) => r,
                            Err(e) => {
                                self.record_failure(candidate.events.clone(), 0, e.to_string());
                                self.maybe_retry(candidate);
                                return;
                            }
                        };
                        let mut seq: Vec<Event> = route
                            .iter()
                            .map(|t| self.model.summaries[&t.summary].event.clone())
                            .collect();
                        seq.push(event);
                        (seq.clone(), Run::Fresh { seq, route })
                    }
                }
            }
            CandidateKind::Complete { .. } => (
                candidate.events.clone(),
                Run::Fresh { seq: candidate.events.clone(), route: vec![] },
            ),
        };

        // Execute; track the model state the final event fires from.
        let (state, src_state, outcome) = match run {
            Run::Extend(event) => {
                let (mut state, src, _) = self.live.take().expect("extend requires live state");
                self.applied_events += 1;
                match state.apply_event(self.app, &event) {
                    Ok(outcome) => (state, Some(src), outcome),
                    Err(e) => {
                        if let crate::runtime::ApplyError::Trap { log, .. } = &e {
                            self.absorb_coverage(log);
                        }
                        self.record_failure(full_seq, 0, e.to_string());
                        self.maybe_retry(candidate);
                        return;
                    }
                }
            }
            Run::Fresh { seq, route } => {
                let mut state = RuntimeState::prelaunch(self.seed);
                let mut src: Option<StateId> = None;
                let mut last = None;
                let total = seq.len();
                let mut failed = None;
                for (i, event) in seq.iter().enumerate() {
                    // where does the final event fire from?
                    if i + 1 == total && i > 0 {
                        let layout = state.layout_snapshot();
                        match self.model.state_of_layout(&layout) {
                            Some(s) => src = Some(s.id.clone()),
                            None => {
                                failed = Some((
                                    i,
                                    "route diverged: pre-final layout unknown to model"
                                        .to_string(),
                                ));
                                break;
                            }
                        }
                    }
                    self.applied_events += 1;
                    match state.apply_event(self.app, event) {
                        Ok(outcome) => {
                            // hop destinations of a replayed route must match
                            if let Some(t) = route.get(i) {
                                let here = self.model.state_of_layout(&outcome.layout);
                                if here.map(|s| s.id.clone()) != Some(t.dst.clone()) {
                                    *self.penalties.entry(t.summary.clone()).or_insert(0) += 1;
                                    self.absorb_coverage(&outcome.log);
                                    failed = Some((
                                        i,
                                        format!("route hop diverged from {}", t.dst),
                                    ));
                                    break;
                                }
                            }
                            if i + 1 < total {
                                self.absorb_coverage(&outcome.log);
                            }
                            last = Some(outcome);
                        }
                        Err(e) => {
                            if let crate::runtime::ApplyError::Trap { log, .. } = &e {
                                self.absorb_coverage(log);
                            }
                            if let Some(t) = route.get(i) {
                                *self.penalties.entry(t.summary.clone()).or_insert(0) += 1;
                            }
                            failed = Some((i, e.to_string()));
                            break;
                        }
                    }
                }
                if let Some((index, error)) = failed {
                    self.record_failure(full_seq, index, error);
                    if let Some(o) = &origin {
                        self.note_miss(o.clone());
                    }
                    self.maybe_retry(candidate);
                    return;
                }
                (state, src, last.expect("non-empty sequence"))
            }
        };

        // Concrete summary for the final event only.
        let final_event = full_seq.last().expect("non-empty").clone();
        let delta = coverage_of_log(self.app, &outcome.log);
        let new_covered: Vec<(MethodSig, usize)> =
            delta.iter().filter(|p| !self.covered.contains(*p)).cloned().collect();
        self.covered.extend(delta.iter().cloned());

        let primary = outcome.handlers.first().cloned();
        let path = match &primary {
            Some(handler) => {
                let g = build_ipcfg(handler, self.app, self.budget.path_bounds.call_depth);
                let segment = outcome.log.first_root_segment();
                match executed_path(&segment, &g, self.app, self.budget.path_bounds) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        self.record_failure(full_seq, 0, format!("log/path mismatch: {e}"));
                        return;
                    }
                }
            }
            None => None,
        };
        let summary =
            EventSummary::concrete(final_event.clone(), path.clone(), outcome.log.digest());
        let summary_id = summary.id.clone();
        let (dst, is_new) = self.model.update(summary, src_state.as_ref(), &outcome.layout);

        self.stats.sequences_applied += 1;
        if is_partial {
            self.stats.partial_applied += 1;
        } else {
            self.stats.complete_applied += 1;
        }
        self.witnesses.entry(summary_id.clone()).or_insert_with(|| full_seq.clone());
        self.history.records.push(HistoryRecord {
            sequence: full_seq.clone(),
            layout: Some(outcome.layout.layout_id()),
            handlers: outcome.handlers.clone(),
            log_digest: Some(outcome.log.digest()),
            coverage_delta: new_covered.len(),
            summary: Some(summary_id.clone()),
            outcome: "ok".into(),
            covered_set: delta.clone(),
        });

        // target hits witnessed by this run
        let targets = self.targets.to_vec();
        for target in targets {
            if !self.hits.contains_key(&target)
                && delta.contains(&(target.method.clone(), target.index))
            {
                self.hits.insert(target.clone(), (full_seq.clone(), self.iteration));
                self.history.target_hits.push(TargetHit {
                    target,
                    sequence: full_seq.clone(),
                    iteration: self.iteration,
                });
            }
        }

        // solver accounting: a candidate converts its origin summary when
        // it executed the origin's exact path for the same event identity
        // (payload-free; solved payloads legitimately differ)
        if let Some(origin_id) = origin {
            let converted = self
                .model
                .summaries
                .get(&origin_id)
                .map(|o| {
                    o.path == path
                        && o.event.descriptor() == final_event.descriptor()
                })
                .unwrap_or(false);
            if converted {
                self.l.remove(&origin_id);
            } else {
                self.note_miss(origin_id);
            }
        }
        // incidental conversion: the executed path may match a queued summary
        if self.l.contains(&summary_id) {
            self.l.remove(&summary_id);
        }

        // new state: extract its events as partial candidates
        if is_new {
            for event in extract_events(&outcome.layout, &state) {
                let candidate = Candidate {
                    events: vec![event],
                    kind: CandidateKind::Partial { source: dst.clone() },
                    retries: 0,
                };
                let priority = self.q_priority(&candidate);
                self.q.push(candidate, priority);
            }
        }

        // symbolic siblings of the executed path
        if let (Some(_), Some(handler)) = (&path, &primary) {
            let g = build_ipcfg(handler, self.app, self.budget.path_bounds.call_depth);
            let set = enumerate_paths(&g, self.app, self.budget.path_bounds);
            self.model.lambda.insert(handler.clone(), set.paths.clone());
            let concrete = &self.model.summaries[&summary_id];
            for sym in get_symbolic_paths(concrete, &g, self.app, self.budget.path_bounds) {
                let id = sym.id.clone();
                if self.model.summaries.get(&id).map(|s| s.status) == Some(SummaryStatus::Concrete)
                {
                    continue;
                }
                if self.l.contains(&id) {
                    continue;
                }
                if let Some(inserted) = self.model.add_symbolic(sym) {
                    let insertion = self.model.summaries[&inserted].insertion;
                    let priority =
                        self.l_priority(&self.model.summaries[&inserted], insertion);
                    self.l.push(LEntry { summary: inserted, priority, penalty_until: 0 });
                }
            }
        }

        self.live = Some((state, dst, full_seq));
    }

    fn absorb_coverage(&mut self, log: &ExecLog) {
        self.covered.extend(coverage_of_log(self.app, log));
    }

    fn note_miss(&mut self, origin: SummaryId) {
        self.stats.solver_misses += 1;
        log::debug!("solver miss: candidate did not execute the path of {origin}");
    }

    // -- L phase --------------------------------------------------------------

    fn solve_phase(&mut self) -> bool {
        if self.l.is_empty() {
            return false;
        }
        self.iteration += 1;
        let entry = match self.l.pop_eligible(self.iteration) {
            Some(e) => e,
            None => {
                // all entries penalized: fast-forward to the first eligible
                match self.l.next_eligible_at() {
                    Some(at) => {
                        self.iteration = at;
                        match self.l.pop_eligible(self.iteration) {
                            Some(e) => e,
                            None => return false,
                        }
                    }
                    None => return false,
                }
            }
        };
        let id = entry.summary.clone();
        self.stats.solver_calls += 1;
        let sequences = solve_summary(
            &mut self.model,
            &id,
            self.app,
            self.budget.solve_bounds,
            &self.penalties,
        );
        let attempts = {
            let s = self.model.summaries.get_mut(&id).expect("summary exists");
            s.solve_attempts += 1;
            s.solve_attempts
        };
        if sequences.is_empty() {
            if attempts >= self.budget.max_attempts {
                self.stats.retired.push((id, "no solvable candidates".into()));
            } else {
                self.l.push(LEntry {
                    summary: id,
                    priority: entry.priority,
                    penalty_until: self.iteration + self.budget.penalty_window,
                });
            }
        } else {
            self.stats.solver_candidates += sequences.len() as u64;
            for seq in sequences {
                let candidate = Candidate {
                    events: seq,
                    kind: CandidateKind::Complete { origin: Some(id.clone()) },
                    retries: 0,
                };
                let priority = self.q_priority(&candidate);
                self.q.push(candidate, priority);
            }
            if attempts >= self.budget.max_attempts {
                self.stats.retired.push((id, "candidates kept missing".into()));
            } else {
                self.l.push(LEntry {
                    summary: id,
                    priority: entry.priority,
                    penalty_until: self.iteration + self.budget.penalty_window,
                });
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Random baseline
// ---------------------------------------------------------------------------

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// The versioned run report written as `report.json`. Contains no wall
/// clock data: identical flags and seed produce byte-identical reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub mode: String,
    pub app: String,
    pub seed: u64,
    pub budget: Budget,
    pub coverage: CoverageReport,
    pub queue_stats: QueueStats,
    pub applied_events: u64,
    pub target_hits: Vec<TargetHit>,
    pub history: Vec<HistoryRecord>,
}

pub const REPORT_SCHEMA: &str = "report.v1";

impl RunReport {
    pub fn from_outcome(
        outcome: &ExploreOutcome,
        app_name: &str,
        seed: u64,
        budget: Budget,
        mode: &str,
    ) -> RunReport {
        RunReport {
            schema: REPORT_SCHEMA.to_string(),
            mode: mode.to_string(),
            app: app_name.to_string(),
            seed,
            budget,
            coverage: outcome.coverage.clone(),
            queue_stats: outcome.stats.clone(),
            applied_events: outcome.applied_events,
            target_hits: outcome.history.target_hits.clone(),
            history: outcome.history.records.clone(),
        }
    }

    pub fn from_baseline(
        coverage: CoverageReport,
        applied_events: u64,
        app_name: &str,
        seed: u64,
        budget: Budget,
    ) -> RunReport {
        RunReport {
            schema: REPORT_SCHEMA.to_string(),
            mode: "baseline-random".to_string(),
            app: app_name.to_string(),
            seed,
            budget,
            coverage,
            queue_stats: QueueStats::default(),
            applied_events,
            target_hits: vec![],
            history: vec![],
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

// ---------------------------------------------------------------------------
// Random baseline
// ---------------------------------------------------------------------------

/// Fires uniformly random enabled events from a fresh boot, restarting on
/// crashes, up to `event_budget` applied events. Same report format as
/// guided exploration.
pub fn baseline_random(
    app: &App,
    event_budget: u64,
    seed: u64,
    targets: &[Target],
) -> (CoverageReport, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut covered = CoverageSet::new();
    let mut hits: BTreeMap<Target, (Vec<Event>, u64)> = BTreeMap::new();
    let mut applied: u64 = 0;
    let mut session: Option<(RuntimeState, Vec<Event>)> = None;
    while applied < event_budget {
        let (mut state, mut seq) = match session.take() {
            Some(s) => s,
            None => {
                applied += 1;
                let (state, _, log) = boot(app, seed);
                covered.extend(coverage_of_log(app, &log));
                if state.crashed {
                    continue;
                }
                let launch = Event::Launch { activity: app.manifest.main_activity.clone() };
                (state, vec![launch])
            }
        };
        let events = extract_events(&state.layout_snapshot(), &state);
        if events.is_empty() {
            continue; // restart
        }
        let event = events[rng.random_range(0..events.len())].clone();
        applied += 1;
        match state.apply_event(app, &event) {
            Ok(outcome) => {
                seq.push(event);
                let delta = coverage_of_log(app, &outcome.log);
                for target in targets {
                    if !hits.contains_key(target)
                        && delta.contains(&(target.method.clone(), target.index))
                    {
                        hits.insert(target.clone(), (seq.clone(), applied));
                    }
                }
                covered.extend(delta);
                session = Some((state, seq));
            }
            Err(e) => {
                if let crate::runtime::ApplyError::Trap { log, .. } = &e {
                    covered.extend(coverage_of_log(app, log));
                }
                session = None; // restart on crash
            }
        }
    }
    (coverage_report(&covered, app, targets, &hits), applied)
}
