//! The constraint-aware GUI model.
//!
//! GUI states are equivalence classes of layouts under the
//! (event-descriptor, handler)-set relation; transitions are labeled by
//! event summaries — (event, exact execution path) pairs — rather than
//! bare events. Two transitions out of one state may carry the same event
//! with different paths; that distinction is the whole point of the model.
//!
//! Entry events have no source state: their transitions carry `src: None`
//! and their destinations are the initial states.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::appir::MethodSig;
use crate::ipcfg::Path;
use crate::runtime::{hex_prefix, ConcreteLayout, Event, EventDescriptor};
use crate::symexec::{PathConstraint, SymState};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SummaryId(pub String);

impl std::fmt::Display for StateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}
impl std::fmt::Display for SummaryId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryStatus {
    Concrete,
    Symbolic,
}

/// Transition label: an event paired with the execution path of its
/// handler. `path` is absent when the event ran no handler at all
/// (e.g. text input into an unbound field).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventSummary {
    pub id: SummaryId,
    pub event: Event,
    pub path: Option<Path>,
    pub status: SummaryStatus,
    /// State the summarized event fires from; `None` for entry events.
    pub source_state: Option<StateId>,
    /// Digest of a witnessing execution log; concrete summaries only.
    pub witness_log_digest: Option<String>,
    pub solve_attempts: u32,
    /// Insertion index; orders solver iteration and FIFO tie-breaks.
    pub insertion: u64,
    #[serde(skip)]
    pub sym_cache: Option<(SymState, PathConstraint)>,
    #[serde(skip)]
    pub sym_error: Option<String>,
}

fn summary_id(event: &Event, path: Option<&Path>) -> SummaryId {
    let mut hasher = Sha256::new();
    hasher.update(event.to_line().as_bytes());
    hasher.update(b"|");
    match path {
        Some(p) => {
            hasher.update(p.root.0.as_bytes());
            for (m, pc) in &p.statements {
                hasher.update(m.0.as_bytes());
                hasher.update(pc.to_le_bytes());
            }
        }
        None => hasher.update(b"-"),
    }
    SummaryId(format!("e{}", hex_prefix(&hasher.finalize(), 6)))
}

impl EventSummary {
    pub fn concrete(event: Event, path: Option<Path>, witness_log_digest: String) -> Self {
        let id = summary_id(&event, path.as_ref());
        EventSummary {
            id,
            event,
            path,
            status: SummaryStatus::Concrete,
            source_state: None,
            witness_log_digest: Some(witness_log_digest),
            solve_attempts: 0,
            insertion: 0,
            sym_cache: None,
            sym_error: None,
        }
    }

    pub fn symbolic(event: Event, path: Path, source_state: Option<StateId>) -> Self {
        let id = summary_id(&event, Some(&path));
        EventSummary {
            id,
            event,
            path: Some(path),
            status: SummaryStatus::Symbolic,
            source_state,
            witness_log_digest: None,
            solve_attempts: 0,
            insertion: 0,
            sym_cache: None,
            sym_error: None,
        }
    }

    /// Compact `event/path` label for DOT edges.
    pub fn label(&self) -> String {
        let path = match &self.path {
            Some(p) => {
                let mut hasher = Sha256::new();
                for (m, pc) in &p.statements {
                    hasher.update(m.0.as_bytes());
                    hasher.update(pc.to_le_bytes());
                }
                hex_prefix(&hasher.finalize(), 4)
            }
            None => "-".to_string(),
        };
        format!("{}/{}", self.event.descriptor(), path)
    }
}

/// One GUI state: the canonical (event-descriptor, handler) set plus a
/// representative concrete layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuiState {
    pub id: StateId,
    pub canonical: BTreeSet<(EventDescriptor, MethodSig)>,
    pub representative: ConcreteLayout,
    pub is_initial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub src: Option<StateId>,
    pub summary: SummaryId,
    pub dst: StateId,
}

/// True iff for each bound event in `a` there is an event in `b` with the
/// same handler, and vice versa. Text contents are not part of identity.
pub fn layout_equivalent(a: &ConcreteLayout, b: &ConcreteLayout) -> bool {
    a.canonical_pairs() == b.canonical_pairs()
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("no model path to state `{0}`")]
    NoModelPath(StateId),
    #[error("unknown state `{0}`")]
    UnknownState(StateId),
    #[error("model parse error: {0}")]
    Parse(String),
}

/// The model store. Transitions only ever carry concrete summaries;
/// symbolic summaries live in the store awaiting solving.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GuiModel {
    pub states: BTreeMap<StateId, GuiState>,
    pub transitions: BTreeSet<Transition>,
    pub summaries: BTreeMap<SummaryId, EventSummary>,
    /// Handler map: state, then event-descriptor rendering, to handlers.
    pub theta: BTreeMap<StateId, BTreeMap<String, Vec<MethodSig>>>,
    /// Path map: enumerated path set per handler, filled lazily.
    pub lambda: BTreeMap<MethodSig, Vec<Path>>,
    next_insertion: u64,
}

/// Versioned JSON document wrapper.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelDoc {
    schema: String,
    #[serde(flatten)]
    model: GuiModel,
}

pub const MODEL_SCHEMA: &str = "model.v1";

impl GuiModel {
    pub fn new() -> Self {
        GuiModel::default()
    }

    pub fn state_of_layout(&self, layout: &ConcreteLayout) -> Option<&GuiState> {
        let canonical = layout.canonical_pairs();
        self.states.values().find(|s| s.canonical == canonical)
    }

    pub fn initial_states(&self) -> impl Iterator<Item = &GuiState> {
        self.states.values().filter(|s| s.is_initial)
    }

    /// Transitions out of `src` (`None` = the pre-launch root).
    pub fn transitions_from<'a>(
        &'a self,
        src: Option<&'a StateId>,
    ) -> impl Iterator<Item = &'a Transition> {
        self.transitions.iter().filter(move |t| t.src.as_ref() == src)
    }

    /// First transition (in sorted order) labeled by `summary`.
    pub fn transition_of(&self, summary: &SummaryId) -> Option<&Transition> {
        self.transitions.iter().find(|t| &t.summary == summary)
    }

    fn assign_insertion(&mut self, summary: &mut EventSummary) {
        summary.insertion = self.next_insertion;
        self.next_insertion += 1;
    }

    /// Inserts a concrete summary observed at `src` leading to
    /// `observed_layout`. Returns the destination state and whether it was
    /// newly created. Idempotent for repeated identical observations; a
    /// previously symbolic summary with the same identity converts to
    /// concrete.
    pub fn update(
        &mut self,
        mut summary: EventSummary,
        src: Option<&StateId>,
        observed_layout: &ConcreteLayout,
    ) -> (StateId, bool) {
        debug_assert_eq!(summary.status, SummaryStatus::Concrete);
        let canonical = observed_layout.canonical_pairs();
        let existing = self.states.values().find(|s| s.canonical == canonical).map(|s| s.id.clone());
        let (dst, is_new) = match existing {
            Some(id) => {
                if src.is_none() {
                    self.states.get_mut(&id).unwrap().is_initial = true;
                }
                (id, false)
            }
            None => {
                let id = StateId(observed_layout.layout_id());
                self.states.insert(
                    id.clone(),
                    GuiState {
                        id: id.clone(),
                        canonical: canonical.clone(),
                        representative: observed_layout.clone(),
                        is_initial: src.is_none(),
                    },
                );
                // θ: one entry per descriptor available in this state
                let theta = self.theta.entry(id.clone()).or_default();
                for (desc, handler) in &canonical {
                    let handlers = theta.entry(desc.to_string()).or_default();
                    if !handlers.contains(handler) {
                        handlers.push(handler.clone());
                    }
                }
                (id, true)
            }
        };
        summary.source_state = src.cloned();
        match self.summaries.get_mut(&summary.id) {
            Some(stored) => {
                if stored.status == SummaryStatus::Symbolic {
                    stored.status = SummaryStatus::Concrete;
                    stored.witness_log_digest = summary.witness_log_digest.take();
                    stored.source_state = summary.source_state.clone();
                }
            }
            None => {
                self.assign_insertion(&mut summary);
                self.summaries.insert(summary.id.clone(), summary.clone());
            }
        }
        self.transitions.insert(Transition {
            src: src.cloned(),
            summary: summary.id.clone(),
            dst: dst.clone(),
        });
        (dst, is_new)
    }

    /// Registers a symbolic summary. Ignored when the identity is already
    /// known (concrete or queued). Returns the id when inserted.
    pub fn add_symbolic(&mut self, mut summary: EventSummary) -> Option<SummaryId> {
        debug_assert_eq!(summary.status, SummaryStatus::Symbolic);
        if self.summaries.contains_key(&summary.id) {
            return None;
        }
        self.assign_insertion(&mut summary);
        let id = summary.id.clone();
        self.summaries.insert(id.clone(), summary);
        Some(id)
    }

    /// Shortest event sequence from an entry event to `goal`, assembled
    /// from transition labels. `penalties` down-weights edges that failed
    /// to replay. Deterministic tie-break by state id then summary id.
    pub fn find_path(
        &self,
        goal: &StateId,
        penalties: &BTreeMap<SummaryId, u32>,
    ) -> Result<Vec<Event>, ModelError> {
        self.find_route(None, goal, penalties)
    }

    /// Like [`GuiModel::find_path`] but starting from an arbitrary state.
    pub fn find_route(
        &self,
        from: Option<&StateId>,
        goal: &StateId,
        penalties: &BTreeMap<SummaryId, u32>,
    ) -> Result<Vec<Event>, ModelError> {
        Ok(self
            .find_route_transitions(from, goal, penalties)?
            .into_iter()
            .map(|t| self.summaries[&t.summary].event.clone())
            .collect())
    }

    /// The transition chain of the shortest route, for callers that need
    /// to validate each hop's destination during replay.
    pub fn find_route_transitions(
        &self,
        from: Option<&StateId>,
        goal: &StateId,
        penalties: &BTreeMap<SummaryId, u32>,
    ) -> Result<Vec<Transition>, ModelError> {
        if !self.states.contains_key(goal) {
            return Err(ModelError::UnknownState(goal.clone()));
        }
        // Dijkstra over states; nodes are Option<StateId> with None the
        // pre-launch root. Edges relaxed in sorted transition order keeps
        // the result deterministic.
        type Node = Option<StateId>;
        let start: Node = from.cloned();
        if start.as_ref() == Some(goal) {
            return Ok(vec![]);
        }
        let mut dist: BTreeMap<Node, u64> = BTreeMap::new();
        let mut prev: BTreeMap<Node, (Node, SummaryId)> = BTreeMap::new();
        let mut heap: BinaryHeap<std::cmp::Reverse<(u64, Node)>> = BinaryHeap::new();
        dist.insert(start.clone(), 0);
        heap.push(std::cmp::Reverse((0, start.clone())));
        while let Some(std::cmp::Reverse((d, node))) = heap.pop() {
            if dist.get(&node) != Some(&d) {
                continue;
            }
            if node.as_ref() == Some(goal) {
                break;
            }
            for t in self.transitions_from(node.as_ref()) {
                let weight = 1 + *penalties.get(&t.summary).unwrap_or(&0) as u64;
                let nd = d + weight;
                let next: Node = Some(t.dst.clone());
                if dist.get(&next).is_none_or(|&old| nd < old) {
                    dist.insert(next.clone(), nd);
                    prev.insert(next.clone(), (node.clone(), t.summary.clone()));
                    heap.push(std::cmp::Reverse((nd, next)));
                }
            }
        }
        let goal_node: Node = Some(goal.clone());
        if !dist.contains_key(&goal_node) {
            return Err(ModelError::NoModelPath(goal.clone()));
        }
        let mut chain = Vec::new();
        let mut cursor = goal_node;
        while cursor != start {
            let (parent, summary) = prev
                .get(&cursor)
                .cloned()
                .ok_or_else(|| ModelError::NoModelPath(goal.clone()))?;
            chain.push(Transition {
                src: parent.clone(),
                summary,
                dst: cursor.clone().expect("non-start nodes are states"),
            });
            cursor = parent;
        }
        chain.reverse();
        Ok(chain)
    }

    /// Lossless JSON export under the `model.v1` schema.
    pub fn to_json(&self) -> String {
        let doc = ModelDoc { schema: MODEL_SCHEMA.to_string(), model: self.clone() };
        let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<GuiModel, ModelError> {
        let doc: ModelDoc =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        if doc.schema != MODEL_SCHEMA {
            return Err(ModelError::Parse(format!("unsupported schema `{}`", doc.schema)));
        }
        Ok(doc.model)
    }

    /// DOT rendering: states as nodes, summaries as `event/path-hash`
    /// edge labels.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph gui_model {\n  rankdir=LR;\n  start [shape=point];\n");
        for s in self.states.values() {
            let shape = if s.is_initial { "doublecircle" } else { "ellipse" };
            let activity = s
                .representative
                .activity
                .as_ref()
                .map(|a| a.0.as_str())
                .unwrap_or("-");
            out.push_str(&format!(
                "  \"{}\" [shape={shape},label=\"{}\\n{activity}\"];\n",
                s.id, s.id
            ));
        }
        for t in &self.transitions {
            let label = self
                .summaries
                .get(&t.summary)
                .map(|s| s.label())
                .unwrap_or_else(|| t.summary.0.clone());
            let src = match &t.src {
                Some(s) => format!("\"{s}\""),
                None => "start".to_string(),
            };
            out.push_str(&format!("  {src} -> \"{}\" [label=\"{label}\"];\n", t.dst));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appir::{ActivityId, WidgetId};
    use crate::runtime::RtWidget;
    use std::collections::BTreeMap as Map;

    fn layout(activity: &str, buttons: &[(&str, &str)]) -> ConcreteLayout {
        ConcreteLayout {
            activity: Some(ActivityId(activity.into())),
            widgets: buttons
                .iter()
                .map(|(id, handler)| RtWidget {
                    id: WidgetId((*id).into()),
                    kind: crate::appir::WidgetKind::Button,
                    bindings: Map::from([(
                        crate::appir::BindKind::Click,
                        MethodSig((*handler).into()),
                    )]),
                    text: String::new(),
                })
                .collect(),
            receivers: vec![],
        }
    }

    fn tap(widget: &str) -> Event {
        Event::Tap { widget: WidgetId(widget.into()) }
    }

    fn path(root: &str, indices: &[usize]) -> Path {
        let sig = MethodSig(root.into());
        Path {
            root: sig.clone(),
            statements: indices.iter().map(|i| (sig.clone(), *i)).collect(),
        }
    }

    #[test]
    fn equivalence_ignores_text_contents() {
        let mut a = layout("A1", &[("b1", "A1.f")]);
        let mut b = a.clone();
        a.widgets[0].text = "x".into();
        b.widgets[0].text = "y".into();
        assert!(layout_equivalent(&a, &b));
    }

    #[test]
    fn equivalence_detects_rebinding() {
        let a = layout("A1", &[("b1", "A1.f")]);
        let b = layout("A1", &[("b1", "A1.g")]);
        assert!(!layout_equivalent(&a, &b));
        assert!(layout_equivalent(&a, &a));
    }

    #[test]
    fn same_event_distinct_paths_are_distinct_transitions() {
        let mut m = GuiModel::new();
        let s0_layout = layout("A1", &[("b1", "A1.onClick"), ("b2", "A1.onToggle")]);
        let launch = Event::Launch { activity: ActivityId("A1".into()) };
        let boot = EventSummary::concrete(launch, None, "d0".into());
        let (s0, new) = m.update(boot, None, &s0_layout);
        assert!(new);
        assert!(m.states[&s0].is_initial);

        let a2 = layout("A2", &[("bA2", "A2.noop")]);
        let a3 = layout("A3", &[("bA3", "A3.noop")]);
        let sigma1 =
            EventSummary::concrete(tap("b1"), Some(path("A1.onClick", &[0, 1, 2, 3, 4, 5, 6, 11])), "d1".into());
        let sigma2 =
            EventSummary::concrete(tap("b1"), Some(path("A1.onClick", &[0, 1, 7, 8, 9, 10, 11])), "d2".into());
        assert_ne!(sigma1.id, sigma2.id);
        let (s2, _) = m.update(sigma1, Some(&s0), &a2);
        let (s3, _) = m.update(sigma2, Some(&s0), &a3);
        assert_ne!(s2, s3);
        let out: Vec<&Transition> = m.transitions_from(Some(&s0)).collect();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn update_is_idempotent() {
        let mut m = GuiModel::new();
        let l = layout("A1", &[("b1", "A1.f")]);
        let s = EventSummary::concrete(tap("b1"), Some(path("A1.f", &[0, 1])), "d".into());
        let (s0, _) = m.update(s.clone(), None, &l);
        let before = m.to_json();
        let (s0b, is_new) = m.update(s, None, &l);
        assert_eq!(s0, s0b);
        assert!(!is_new);
        assert_eq!(before, m.to_json());
    }

    #[test]
    fn self_loop_when_layout_unchanged() {
        let mut m = GuiModel::new();
        let l = layout("A1", &[("b1", "A1.f")]);
        let boot = EventSummary::concrete(
            Event::Launch { activity: ActivityId("A1".into()) },
            None,
            "d0".into(),
        );
        let (s0, _) = m.update(boot, None, &l);
        let s = EventSummary::concrete(tap("b1"), Some(path("A1.f", &[0, 1])), "d".into());
        let (dst, is_new) = m.update(s, Some(&s0), &l);
        assert_eq!(dst, s0);
        assert!(!is_new);
    }

    #[test]
    fn find_path_two_hops() {
        let mut m = GuiModel::new();
        let l1 = layout("A1", &[("b1", "A1.f")]);
        let l2 = layout("A2", &[("b2", "A2.f")]);
        let l3 = layout("A3", &[("b3", "A3.f")]);
        let launch = Event::Launch { activity: ActivityId("A1".into()) };
        let (s1, _) =
            m.update(EventSummary::concrete(launch.clone(), None, "d".into()), None, &l1);
        let (s2, _) = m.update(
            EventSummary::concrete(tap("b1"), Some(path("A1.f", &[0])), "d".into()),
            Some(&s1),
            &l2,
        );
        let (s3, _) = m.update(
            EventSummary::concrete(tap("b2"), Some(path("A2.f", &[0])), "d".into()),
            Some(&s2),
            &l3,
        );
        let events = m.find_path(&s3, &BTreeMap::new()).unwrap();
        assert_eq!(events, vec![launch.clone(), tap("b1"), tap("b2")]);
        // goal = initial state -> entry event only
        let events = m.find_path(&s1, &BTreeMap::new()).unwrap();
        assert_eq!(events, vec![launch]);
    }

    #[test]
    fn penalties_reroute_find_path() {
        // two routes to the goal; penalizing the short edge makes the
        // longer one cheaper
        let mut m = GuiModel::new();
        let l1 = layout("A1", &[("direct", "A1.d"), ("via", "A1.v")]);
        let l_mid = layout("M", &[("m", "M.f")]);
        let l_goal = layout("G", &[("g", "G.f")]);
        let (s1, _) = m.update(
            EventSummary::concrete(
                Event::Launch { activity: ActivityId("A1".into()) },
                None,
                "d".into(),
            ),
            None,
            &l1,
        );
        let direct = EventSummary::concrete(tap("direct"), Some(path("A1.d", &[0])), "d".into());
        let direct_id = direct.id.clone();
        m.update(direct, Some(&s1), &l_goal);
        let (mid, _) = m.update(
            EventSummary::concrete(tap("via"), Some(path("A1.v", &[0])), "d".into()),
            Some(&s1),
            &l_mid,
        );
        let (goal, _) = m.update(
            EventSummary::concrete(tap("m"), Some(path("M.f", &[0])), "d".into()),
            Some(&mid),
            &l_goal,
        );
        let events = m.find_path(&goal, &BTreeMap::new()).unwrap();
        assert_eq!(events.len(), 2, "direct route wins unpenalized");
        let penalties = BTreeMap::from([(direct_id, 3u32)]);
        let events = m.find_path(&goal, &penalties).unwrap();
        assert_eq!(events.len(), 3, "penalty diverts through the middle state");
        assert_eq!(events[1], tap("via"));
    }

    #[test]
    fn unreachable_goal_is_error() {
        let mut m = GuiModel::new();
        let l1 = layout("A1", &[("b1", "A1.f")]);
        let (_s1, _) = m.update(
            EventSummary::concrete(
                Event::Launch { activity: ActivityId("A1".into()) },
                None,
                "d".into(),
            ),
            None,
            &l1,
        );
        // a state inserted without any transition into it
        let orphan_layout = layout("A9", &[("bx", "A9.f")]);
        let orphan = StateId(orphan_layout.layout_id());
        m.states.insert(
            orphan.clone(),
            GuiState {
                id: orphan.clone(),
                canonical: orphan_layout.canonical_pairs(),
                representative: orphan_layout,
                is_initial: false,
            },
        );
        assert!(matches!(
            m.find_path(&orphan, &BTreeMap::new()),
            Err(ModelError::NoModelPath(_))
        ));
    }

    #[test]
    fn json_roundtrip_is_byte_identical() {
        let mut m = GuiModel::new();
        let l1 = layout("A1", &[("b1", "A1.f")]);
        let (s0, _) = m.update(
            EventSummary::concrete(
                Event::Launch { activity: ActivityId("A1".into()) },
                None,
                "d".into(),
            ),
            None,
            &l1,
        );
        m.update(
            EventSummary::concrete(tap("b1"), Some(path("A1.f", &[0, 1])), "d1".into()),
            Some(&s0),
            &l1,
        );
        let json = m.to_json();
        let parsed = GuiModel::from_json(&json).unwrap();
        assert_eq!(json, parsed.to_json());
        // empty model exports a valid document too
        let empty = GuiModel::new().to_json();
        GuiModel::from_json(&empty).unwrap();
    }

    #[test]
    fn dot_export_mentions_states_and_labels() {
        let mut m = GuiModel::new();
        let l1 = layout("A1", &[("b1", "A1.f")]);
        let (s0, _) = m.update(
            EventSummary::concrete(
                Event::Launch { activity: ActivityId("A1".into()) },
                None,
                "d".into(),
            ),
            None,
            &l1,
        );
        let dot = m.to_dot();
        assert!(dot.contains(&s0.0));
        assert!(dot.contains("start ->"));
    }
}
