//! Concrete interpreter for validated apps.
//!
//! Boots an app, applies events, executes handler bytecode together with
//! implicit lifecycle callbacks, maintains the GUI state and global heap,
//! and emits instrumentation-style execution logs (method start/return,
//! block entry, receiver registration).
//!
//! Execution is deterministic: identical (app, seed, sequence) triples
//! produce identical layouts, logs and heaps. Runtime traps (division by
//! zero, bad array index, type errors) abort the current event's handler,
//! append a crash marker to the log and leave the state unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::appir::{
    Api, App, ArithOp, BindKind, CmpOp, FieldSig, Instr, Literal, MethodSig, WidgetId, WidgetKind,
};

/// Max activity transitions a single event may chain through.
const NAV_CHAIN_BOUND: usize = 8;
/// Max concrete call depth.
const CALL_DEPTH_BOUND: usize = 64;
/// Default instruction budget per applied event.
pub const DEFAULT_STEP_BUDGET: u64 = 200_000;

/// Runtime value. Integers are 64-bit signed; objects by reference id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Str(String),
    Bool(bool),
    Obj(u64),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Str(_) => "string",
            Value::Bool(_) => "bool",
            Value::Obj(_) => "object",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => write!(f, "{}", crate::appir::quote_str(s)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Obj(id) => write!(f, "obj#{id}"),
        }
    }
}

use crate::appir::ActivityId;

/// An input to the app: a user action or a system broadcast.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Event {
    Launch { activity: ActivityId },
    Intent { activity: ActivityId, action: String, extras: BTreeMap<String, String> },
    Tap { widget: WidgetId },
    LongTap { widget: WidgetId },
    TextInput { widget: WidgetId, text: String },
    Back,
    Broadcast { action: String, extras: BTreeMap<String, String> },
}

/// Payload-free identity of an event, the domain of the handler map.
/// User events are identified by (widget, kind), broadcasts by action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventDescriptor {
    Widget { widget: WidgetId, kind: BindKind },
    Action { action: String },
    Entry { activity: ActivityId, action: Option<String> },
    Back,
}

impl Event {
    pub fn descriptor(&self) -> EventDescriptor {
        match self {
            Event::Launch { activity } => {
                EventDescriptor::Entry { activity: activity.clone(), action: None }
            }
            Event::Intent { activity, action, .. } => EventDescriptor::Entry {
                activity: activity.clone(),
                action: Some(action.clone()),
            },
            Event::Tap { widget } => {
                EventDescriptor::Widget { widget: widget.clone(), kind: BindKind::Click }
            }
            Event::LongTap { widget } => {
                EventDescriptor::Widget { widget: widget.clone(), kind: BindKind::LongClick }
            }
            Event::TextInput { widget, .. } => {
                EventDescriptor::Widget { widget: widget.clone(), kind: BindKind::Text }
            }
            Event::Back => EventDescriptor::Back,
            Event::Broadcast { action, .. } => EventDescriptor::Action { action: action.clone() },
        }
    }

    pub fn is_entry(&self) -> bool {
        matches!(self, Event::Launch { .. } | Event::Intent { .. })
    }

    /// One-line text form, `kind target [payload-json]`.
    pub fn to_line(&self) -> String {
        match self {
            Event::Launch { activity } => format!("launch {activity}"),
            Event::Intent { activity, action, extras } => {
                let payload = serde_json::json!({ "action": action, "extras": extras });
                format!("intent {activity} {payload}")
            }
            Event::Tap { widget } => format!("tap {widget}"),
            Event::LongTap { widget } => format!("long-tap {widget}"),
            Event::TextInput { widget, text } => {
                format!("text {widget} {}", serde_json::Value::String(text.clone()))
            }
            Event::Back => "back".to_string(),
            Event::Broadcast { action, extras } => {
                format!("broadcast {action} {}", serde_json::json!(extras))
            }
        }
    }

    /// Parses the line form produced by [`Event::to_line`].
    pub fn parse_line(line: &str) -> Result<Event, String> {
        let line = line.trim();
        let (kind, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        let target_and_payload = || -> (String, Option<&str>) {
            match rest.split_once(char::is_whitespace) {
                Some((t, p)) => (t.to_string(), Some(p.trim())),
                None => (rest.to_string(), None),
            }
        };
        match kind {
            "launch" => {
                if rest.is_empty() {
                    return Err("launch expects an activity".into());
                }
                Ok(Event::Launch { activity: ActivityId(rest.to_string()) })
            }
            "intent" => {
                let (target, payload) = target_and_payload();
                let payload = payload.ok_or("intent expects a payload json")?;
                let v: serde_json::Value =
                    serde_json::from_str(payload).map_err(|e| format!("bad payload: {e}"))?;
                let action = v
                    .get("action")
                    .and_then(|a| a.as_str())
                    .ok_or("intent payload needs \"action\"")?
                    .to_string();
                let extras = match v.get("extras") {
                    Some(e) => serde_json::from_value(e.clone())
                        .map_err(|e| format!("bad extras: {e}"))?,
                    None => BTreeMap::new(),
                };
                Ok(Event::Intent { activity: ActivityId(target), action, extras })
            }
            "tap" => {
                let (target, _) = target_and_payload();
                Ok(Event::Tap { widget: WidgetId(target) })
            }
            "long-tap" => {
                let (target, _) = target_and_payload();
                Ok(Event::LongTap { widget: WidgetId(target) })
            }
            "text" => {
                let (target, payload) = target_and_payload();
                let payload = payload.ok_or("text expects a payload string")?;
                let text: String =
                    serde_json::from_str(payload).map_err(|e| format!("bad payload: {e}"))?;
                Ok(Event::TextInput { widget: WidgetId(target), text })
            }
            "back" => Ok(Event::Back),
            "broadcast" => {
                let (target, payload) = target_and_payload();
                let extras = match payload {
                    Some(p) => serde_json::from_str(p).map_err(|e| format!("bad extras: {e}"))?,
                    None => BTreeMap::new(),
                };
                Ok(Event::Broadcast { action: target, extras })
            }
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

impl fmt::Display for EventDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventDescriptor::Widget { widget, kind } => write!(f, "{}:{widget}", kind.name()),
            EventDescriptor::Action { action } => write!(f, "broadcast:{action}"),
            EventDescriptor::Entry { activity, action: None } => write!(f, "entry:{activity}"),
            EventDescriptor::Entry { activity, action: Some(a) } => {
                write!(f, "entry:{activity}:{a}")
            }
            EventDescriptor::Back => write!(f, "back"),
        }
    }
}

/// One instrumentation record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogEntry {
    MethodStart(MethodSig),
    MethodReturn(MethodSig),
    BlockEnter(MethodSig, usize),
    ReceiverRegistered(String, MethodSig),
    Crash(String),
}

/// Ordered instrumentation events from one concrete run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecLog {
    pub entries: Vec<LogEntry>,
}

impl ExecLog {
    /// Line-oriented text form: `S sig` / `R sig` / `B sig idx` /
    /// `REG action sig` / `C message`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            match e {
                LogEntry::MethodStart(s) => out.push_str(&format!("S {s}\n")),
                LogEntry::MethodReturn(s) => out.push_str(&format!("R {s}\n")),
                LogEntry::BlockEnter(s, b) => out.push_str(&format!("B {s} {b}\n")),
                LogEntry::ReceiverRegistered(a, s) => out.push_str(&format!("REG {a} {s}\n")),
                LogEntry::Crash(m) => out.push_str(&format!("C {m}\n")),
            }
        }
        out
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_text().as_bytes());
        hex_prefix(&hash, 16)
    }

    /// Projection to the block-entry subsequence.
    pub fn block_entries(&self) -> Vec<(MethodSig, usize)> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                LogEntry::BlockEnter(s, b) => Some((s.clone(), *b)),
                _ => None,
            })
            .collect()
    }

    pub fn has_crash(&self) -> bool {
        self.entries.iter().any(|e| matches!(e, LogEntry::Crash(_)))
    }

    /// The subtree of the first root method (its start through the
    /// matching return), block entries included. Identifies the direct
    /// event handler's own execution, before implicit callbacks.
    pub fn first_root_segment(&self) -> ExecLog {
        let mut out = ExecLog::default();
        let mut depth = 0i64;
        let mut started = false;
        for e in &self.entries {
            match e {
                LogEntry::MethodStart(_) => {
                    depth += 1;
                    started = true;
                    out.entries.push(e.clone());
                }
                LogEntry::MethodReturn(_) => {
                    depth -= 1;
                    out.entries.push(e.clone());
                    if started && depth == 0 {
                        break;
                    }
                }
                _ => {
                    if started {
                        out.entries.push(e.clone());
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes.iter().take(n).map(|b| format!("{b:02x}")).collect()
}

/// Unbalanced or otherwise corrupt execution log.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("log integrity error: {0}")]
pub struct LogIntegrityError(pub String);

/// Root (outermost) methods of the log forest, in order. This identifies
/// the event handlers plus any implicit lifecycle callbacks of a run.
pub fn event_handler_of(log: &ExecLog) -> Result<Vec<MethodSig>, LogIntegrityError> {
    let mut roots = Vec::new();
    let mut depth: i64 = 0;
    for e in &log.entries {
        match e {
            LogEntry::MethodStart(sig) => {
                if depth == 0 {
                    roots.push(sig.clone());
                }
                depth += 1;
            }
            LogEntry::MethodReturn(_) => {
                depth -= 1;
                if depth < 0 {
                    return Err(LogIntegrityError("method_return without method_start".into()));
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(LogIntegrityError(format!("{depth} unbalanced method_start entries")));
    }
    Ok(roots)
}

/// Runtime view of one widget: declared identity plus runtime-modified
/// handler bindings and text-field contents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RtWidget {
    pub id: WidgetId,
    pub kind: WidgetKind,
    pub bindings: BTreeMap<BindKind, MethodSig>,
    pub text: String,
}

/// Snapshot of the observable GUI state after an event: current activity,
/// widgets with resolved bindings, and registered broadcast receivers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteLayout {
    pub activity: Option<ActivityId>,
    pub widgets: Vec<RtWidget>,
    pub receivers: Vec<(String, MethodSig)>,
}

impl ConcreteLayout {
    /// The (event-descriptor, handler) pair set that defines GUI state
    /// equivalence. Text-field contents are not part of it.
    pub fn canonical_pairs(&self) -> BTreeSet<(EventDescriptor, MethodSig)> {
        let mut set = BTreeSet::new();
        for w in &self.widgets {
            for (kind, handler) in &w.bindings {
                set.insert((
                    EventDescriptor::Widget { widget: w.id.clone(), kind: *kind },
                    handler.clone(),
                ));
            }
        }
        for (action, handler) in &self.receivers {
            set.insert((EventDescriptor::Action { action: action.clone() }, handler.clone()));
        }
        set
    }

    /// Stable identifier of the equivalence class of this layout.
    pub fn layout_id(&self) -> String {
        let mut hasher = Sha256::new();
        for (desc, handler) in self.canonical_pairs() {
            hasher.update(desc.to_string().as_bytes());
            hasher.update(b"->");
            hasher.update(handler.0.as_bytes());
            hasher.update(b";");
        }
        format!("s{}", hex_prefix(&hasher.finalize(), 6))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjData {
    pub class: String,
    pub fields: BTreeMap<String, Value>,
}

/// Mutable interpreter state: current activity and layout, back stack,
/// global heap, registered receivers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeState {
    pub current_activity: Option<ActivityId>,
    pub stack: Vec<ActivityId>,
    pub widgets: Vec<RtWidget>,
    pub receivers: Vec<(String, MethodSig)>,
    pub statics: BTreeMap<FieldSig, Value>,
    pub objects: BTreeMap<u64, ObjData>,
    pub next_obj: u64,
    pub seed: u64,
    pub crashed: bool,
    pub time_counter: u64,
    pub step_budget: u64,
}

/// Abnormal termination of bytecode execution.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum Trap {
    #[error("division by zero")]
    DivByZero,
    #[error("bad array index {0}")]
    BadArrayIndex(i64),
    #[error("type error: {0}")]
    Type(String),
    #[error("startActivity target `{0}` is not an activity")]
    UnknownActivity(String),
    #[error("widget `{0}` not in current layout")]
    UnknownWidget(String),
    #[error("`{0}` does not name a method")]
    UnknownMethod(String),
    #[error("move-result with no pending result")]
    NoResult,
    #[error("instruction budget exhausted")]
    StepBudget,
    #[error("call depth exceeded")]
    CallDepth,
    #[error("setText on non-textfield `{0}`")]
    NotTextField(String),
    #[error("finish on root activity")]
    FinishOnRoot,
    #[error("activity transition chain exceeded {0} hops")]
    NavChain(usize),
}

/// Why an event could not be applied.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ApplyError {
    #[error("event not enabled: {0}")]
    NotEnabled(String),
    #[error("runtime trap: {trap}")]
    Trap { trap: Trap, log: ExecLog },
}

/// Artifacts of one applied event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventOutcome {
    pub layout: ConcreteLayout,
    pub handlers: Vec<MethodSig>,
    pub log: ExecLog,
}

/// Set of concretely executed instructions, `(method, index)` pairs.
pub type CoverageSet = BTreeSet<(MethodSig, usize)>;

/// Expands the block-entry records of a log into covered instructions.
pub fn coverage_of_log(app: &App, log: &ExecLog) -> CoverageSet {
    let mut set = CoverageSet::new();
    for (sig, block) in log.block_entries() {
        if let Some(m) = app.method(&sig) {
            if let Some(b) = m.blocks.get(block) {
                for pc in b.start..b.end {
                    set.insert((sig.clone(), pc));
                }
            }
        }
    }
    set
}

/// Artifacts of a fully applied sequence: final-event outcome plus the
/// coverage contributed by the whole run.
#[derive(Debug, Clone)]
pub struct SequenceOutcome {
    pub state: RuntimeState,
    pub layout: ConcreteLayout,
    pub handlers: Vec<MethodSig>,
    pub log: ExecLog,
    pub coverage: CoverageSet,
}

/// A sequence failed at `index`; earlier events were applied.
#[derive(Debug, Clone, thiserror::Error)]
#[error("event {index} failed: {error}")]
pub struct SequenceError {
    pub index: usize,
    pub error: ApplyError,
    pub coverage: CoverageSet,
}

enum NavAction {
    Start(ActivityId),
    Finish,
}

struct Interp<'a> {
    app: &'a App,
    state: &'a mut RuntimeState,
    log: &'a mut ExecLog,
    pending: Vec<NavAction>,
    extras: BTreeMap<String, String>,
    steps: u64,
}

impl<'a> Interp<'a> {
    fn run_root(&mut self, sig: &MethodSig, args: Vec<Value>) -> Result<(), Trap> {
        self.exec_method(sig, args, 0)?;
        Ok(())
    }

    fn exec_method(
        &mut self,
        sig: &MethodSig,
        args: Vec<Value>,
        depth: usize,
    ) -> Result<Option<Value>, Trap> {
        if depth >= CALL_DEPTH_BOUND {
            return Err(Trap::CallDepth);
        }
        let method =
            self.app.method(sig).ok_or_else(|| Trap::UnknownMethod(sig.0.clone()))?;
        let mut regs = vec![Value::Int(0); method.reg_count as usize];
        for (i, v) in args.into_iter().take(method.param_count as usize).enumerate() {
            regs[i] = v;
        }
        self.log.entries.push(LogEntry::MethodStart(sig.clone()));
        let mut pc = 0usize;
        let mut last_result: Option<Value> = None;
        loop {
            if method.is_block_start(pc) {
                let block = method.block_of(pc).expect("pc inside body");
                self.log.entries.push(LogEntry::BlockEnter(sig.clone(), block));
            }
            if self.steps == 0 {
                return Err(Trap::StepBudget);
            }
            self.steps -= 1;
            let instr = &method.body[pc];
            match instr {
                Instr::Const { dst, value } => {
                    regs[*dst as usize] = match value {
                        Literal::Int(v) => Value::Int(*v),
                        Literal::Str(s) => Value::Str(s.clone()),
                        Literal::Bool(b) => Value::Bool(*b),
                    };
                    pc += 1;
                }
                Instr::Move { dst, src } => {
                    regs[*dst as usize] = regs[*src as usize].clone();
                    pc += 1;
                }
                Instr::BinOp { op, dst, lhs, rhs } => {
                    let l = int_of(&regs[*lhs as usize])?;
                    let r = int_of(&regs[*rhs as usize])?;
                    let v = match op {
                        ArithOp::Add => l.wrapping_add(r),
                        ArithOp::Sub => l.wrapping_sub(r),
                        ArithOp::Mul => l.wrapping_mul(r),
                        ArithOp::Div => {
                            if r == 0 {
                                return Err(Trap::DivByZero);
                            }
                            l.wrapping_div(r)
                        }
                    };
                    regs[*dst as usize] = Value::Int(v);
                    pc += 1;
                }
                Instr::If { cmp, lhs, rhs, target } => {
                    let taken = compare(*cmp, &regs[*lhs as usize], &regs[*rhs as usize])?;
                    pc = if taken { *target } else { pc + 1 };
                }
                Instr::Goto { target } => pc = *target,
                Instr::SGet { dst, field } => {
                    regs[*dst as usize] =
                        self.state.statics.get(field).cloned().unwrap_or(Value::Int(0));
                    pc += 1;
                }
                Instr::SPut { src, field } => {
                    self.state.statics.insert(field.clone(), regs[*src as usize].clone());
                    pc += 1;
                }
                Instr::IGet { dst, obj, field } => {
                    let id = obj_of(&regs[*obj as usize])?;
                    let data = self
                        .state
                        .objects
                        .get(&id)
                        .ok_or_else(|| Trap::Type(format!("dangling object #{id}")))?;
                    regs[*dst as usize] =
                        data.fields.get(field).cloned().unwrap_or(Value::Int(0));
                    pc += 1;
                }
                Instr::IPut { src, obj, field } => {
                    let id = obj_of(&regs[*obj as usize])?;
                    let v = regs[*src as usize].clone();
                    let data = self
                        .state
                        .objects
                        .get_mut(&id)
                        .ok_or_else(|| Trap::Type(format!("dangling object #{id}")))?;
                    data.fields.insert(field.clone(), v);
                    pc += 1;
                }
                Instr::New { dst, class } => {
                    let id = self.state.next_obj;
                    self.state.next_obj += 1;
                    self.state
                        .objects
                        .insert(id, ObjData { class: class.clone(), fields: BTreeMap::new() });
                    regs[*dst as usize] = Value::Obj(id);
                    pc += 1;
                }
                Instr::AGet { dst, arr, idx } => {
                    let id = obj_of(&regs[*arr as usize])?;
                    let i = int_of(&regs[*idx as usize])?;
                    let data = self
                        .state
                        .objects
                        .get(&id)
                        .ok_or_else(|| Trap::Type(format!("dangling object #{id}")))?;
                    let v = data
                        .fields
                        .get(&i.to_string())
                        .cloned()
                        .ok_or(Trap::BadArrayIndex(i))?;
                    regs[*dst as usize] = v;
                    pc += 1;
                }
                Instr::APut { src, arr, idx } => {
                    let id = obj_of(&regs[*arr as usize])?;
                    let i = int_of(&regs[*idx as usize])?;
                    let v = regs[*src as usize].clone();
                    let data = self
                        .state
                        .objects
                        .get_mut(&id)
                        .ok_or_else(|| Trap::Type(format!("dangling object #{id}")))?;
                    data.fields.insert(i.to_string(), v);
                    pc += 1;
                }
                Instr::Invoke { method: callee, args } => {
                    let argv: Vec<Value> =
                        args.iter().map(|r| regs[*r as usize].clone()).collect();
                    last_result = self.exec_method(callee, argv, depth + 1)?;
                    pc += 1;
                }
                Instr::MoveResult { dst } => {
                    regs[*dst as usize] = last_result.clone().ok_or(Trap::NoResult)?;
                    pc += 1;
                }
                Instr::Api { api, args } => {
                    let argv: Vec<Value> =
                        args.iter().map(|r| regs[*r as usize].clone()).collect();
                    last_result = self.exec_api(*api, argv)?;
                    pc += 1;
                }
                Instr::Return { src } => {
                    self.log.entries.push(LogEntry::MethodReturn(sig.clone()));
                    return Ok(src.map(|r| regs[r as usize].clone()));
                }
            }
        }
    }

    fn exec_api(&mut self, api: Api, args: Vec<Value>) -> Result<Option<Value>, Trap> {
        match api {
            Api::UiStartActivity => {
                let target = str_of(&args[0])?;
                if self.app.activity(&ActivityId(target.clone())).is_none() {
                    return Err(Trap::UnknownActivity(target));
                }
                self.pending.push(NavAction::Start(ActivityId(target)));
                Ok(None)
            }
            Api::UiFinish => {
                self.pending.push(NavAction::Finish);
                Ok(None)
            }
            Api::UiSetHandler => {
                let wid = WidgetId(str_of(&args[0])?);
                let sig = MethodSig(str_of(&args[1])?);
                if self.app.method(&sig).is_none() {
                    return Err(Trap::UnknownMethod(sig.0));
                }
                let w = self
                    .state
                    .widgets
                    .iter_mut()
                    .find(|w| w.id == wid)
                    .ok_or_else(|| Trap::UnknownWidget(wid.0.clone()))?;
                w.bindings.insert(BindKind::Click, sig);
                Ok(None)
            }
            Api::UiSetText => {
                let wid = WidgetId(str_of(&args[0])?);
                let text = str_of(&args[1])?;
                let w = self
                    .state
                    .widgets
                    .iter_mut()
                    .find(|w| w.id == wid)
                    .ok_or_else(|| Trap::UnknownWidget(wid.0.clone()))?;
                if w.kind != WidgetKind::TextField {
                    return Err(Trap::NotTextField(wid.0));
                }
                w.text = text;
                Ok(None)
            }
            Api::UiGetText => {
                let wid = WidgetId(str_of(&args[0])?);
                let w = self
                    .state
                    .widgets
                    .iter()
                    .find(|w| w.id == wid)
                    .ok_or_else(|| Trap::UnknownWidget(wid.0.clone()))?;
                Ok(Some(Value::Str(w.text.clone())))
            }
            Api::SysRegisterReceiver => {
                let action = str_of(&args[0])?;
                let sig = MethodSig(str_of(&args[1])?);
                if self.app.method(&sig).is_none() {
                    return Err(Trap::UnknownMethod(sig.0));
                }
                let pair = (action.clone(), sig.clone());
                if !self.state.receivers.contains(&pair) {
                    self.state.receivers.push(pair);
                    self.log.entries.push(LogEntry::ReceiverRegistered(action, sig));
                }
                Ok(None)
            }
            Api::SysTime => {
                let t = self.state.time_counter;
                self.state.time_counter += 1;
                Ok(Some(Value::Int(t as i64)))
            }
            Api::IntentGetExtra => {
                let key = str_of(&args[0])?;
                Ok(Some(Value::Str(self.extras.get(&key).cloned().unwrap_or_default())))
            }
            Api::StrEquals => {
                let a = str_of(&args[0])?;
                let b = str_of(&args[1])?;
                Ok(Some(Value::Bool(a == b)))
            }
            Api::StrLength => Ok(Some(Value::Int(str_of(&args[0])?.len() as i64))),
            Api::StrConcat => {
                let mut a = str_of(&args[0])?;
                a.push_str(&str_of(&args[1])?);
                Ok(Some(Value::Str(a)))
            }
            Api::NetFetch => {
                // deterministic stand-in for an unmodeled external call
                let url = str_of(&args[0])?;
                Ok(Some(Value::Int((fnv64(url.as_bytes()) % 100) as i64)))
            }
        }
    }

    /// Instantiates `activity`'s declared layout and runs onCreate.
    fn enter_activity(&mut self, activity: &ActivityId) -> Result<(), Trap> {
        let act = self
            .app
            .activity(activity)
            .ok_or_else(|| Trap::UnknownActivity(activity.0.clone()))?;
        self.state.current_activity = Some(activity.clone());
        self.state.widgets = act
            .layout
            .widgets
            .iter()
            .map(|w| RtWidget {
                id: w.id.clone(),
                kind: w.kind,
                bindings: w.bindings.clone(),
                text: String::new(),
            })
            .collect();
        if let Some(on_create) = act.lifecycle.on_create.clone() {
            self.run_root(&on_create, vec![])?;
        }
        Ok(())
    }

    /// Runs the leaving activity's onPause then onStop.
    fn leave_current(&mut self) -> Result<(), Trap> {
        let Some(current) = self.state.current_activity.clone() else { return Ok(()) };
        let act = self
            .app
            .activity(&current)
            .ok_or_else(|| Trap::UnknownActivity(current.0.clone()))?;
        let pause = act.lifecycle.on_pause.clone();
        let stop = act.lifecycle.on_stop.clone();
        if let Some(m) = pause {
            self.run_root(&m, vec![])?;
        }
        if let Some(m) = stop {
            self.run_root(&m, vec![])?;
        }
        Ok(())
    }

    /// Drains pending activity transitions, running lifecycle callbacks in
    /// order old.onPause, old.onStop, new.onCreate for every hop.
    fn drain_nav(&mut self) -> Result<(), Trap> {
        let mut hops = 0;
        while !self.pending.is_empty() {
            hops += 1;
            if hops > NAV_CHAIN_BOUND {
                return Err(Trap::NavChain(NAV_CHAIN_BOUND));
            }
            let action = self.pending.remove(0);
            match action {
                NavAction::Start(target) => {
                    self.leave_current()?;
                    if let Some(old) = self.state.current_activity.clone() {
                        self.state.stack.push(old);
                    }
                    self.enter_activity(&target)?;
                }
                NavAction::Finish => {
                    let revealed =
                        self.state.stack.pop().ok_or(Trap::FinishOnRoot)?;
                    self.leave_current()?;
                    self.enter_activity(&revealed)?;
                }
            }
        }
        Ok(())
    }
}

fn int_of(v: &Value) -> Result<i64, Trap> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(Trap::Type(format!("expected int, got {}", other.kind_name()))),
    }
}

fn str_of(v: &Value) -> Result<String, Trap> {
    match v {
        Value::Str(s) => Ok(s.clone()),
        other => Err(Trap::Type(format!("expected string, got {}", other.kind_name()))),
    }
}

fn obj_of(v: &Value) -> Result<u64, Trap> {
    match v {
        Value::Obj(id) => Ok(*id),
        other => Err(Trap::Type(format!("expected object, got {}", other.kind_name()))),
    }
}

fn compare(cmp: CmpOp, l: &Value, r: &Value) -> Result<bool, Trap> {
    match cmp {
        CmpOp::Eq | CmpOp::Ne => {
            let eq = match (l, r) {
                (Value::Int(a), Value::Int(b)) => a == b,
                (Value::Str(a), Value::Str(b)) => a == b,
                (Value::Bool(a), Value::Bool(b)) => a == b,
                (Value::Obj(a), Value::Obj(b)) => a == b,
                _ => false,
            };
            Ok(if cmp == CmpOp::Eq { eq } else { !eq })
        }
        _ => {
            let a = int_of(l)?;
            let b = int_of(r)?;
            Ok(match cmp {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                _ => unreachable!(),
            })
        }
    }
}

pub(crate) fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The text a first-encountered text field is filled with: eight lowercase
/// letters drawn from a PRNG keyed by (seed, widget id). A pure function,
/// so extraction order cannot perturb payloads.
pub fn seeded_text(seed: u64, widget: &WidgetId) -> String {
    let key = seed ^ fnv64(widget.0.as_bytes());
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    (0..8).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect()
}

impl RuntimeState {
    /// State before any entry event was applied.
    pub fn prelaunch(seed: u64) -> RuntimeState {
        RuntimeState {
            current_activity: None,
            stack: Vec::new(),
            widgets: Vec::new(),
            receivers: Vec::new(),
            statics: BTreeMap::new(),
            objects: BTreeMap::new(),
            next_obj: 1,
            seed,
            crashed: false,
            time_counter: 0,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn layout_snapshot(&self) -> ConcreteLayout {
        ConcreteLayout {
            activity: self.current_activity.clone(),
            widgets: self.widgets.clone(),
            receivers: self.receivers.clone(),
        }
    }

    /// Widgets of the current layout, for lookups.
    fn widget(&self, id: &WidgetId) -> Option<&RtWidget> {
        self.widgets.iter().find(|w| &w.id == id)
    }

    /// Applies one event to the live state. On success returns the
    /// post-event layout, the identified handler roots and the log. On a
    /// trap the state is left unchanged and the partial log is returned.
    pub fn apply_event(&mut self, app: &App, event: &Event) -> Result<EventOutcome, ApplyError> {
        // enabledness
        enum Dispatch {
            Enter(ActivityId),
            Handlers(Vec<(MethodSig, Vec<Value>)>),
            BackNav,
        }
        let mut extras = BTreeMap::new();
        let mut text_to_set: Option<(WidgetId, String)> = None;
        let dispatch = match event {
            Event::Launch { activity } => {
                if app.activity(activity).is_none() {
                    return Err(ApplyError::NotEnabled(format!("unknown activity `{activity}`")));
                }
                Dispatch::Enter(activity.clone())
            }
            Event::Intent { activity, extras: e, .. } => {
                if app.activity(activity).is_none() {
                    return Err(ApplyError::NotEnabled(format!("unknown activity `{activity}`")));
                }
                extras = e.clone();
                Dispatch::Enter(activity.clone())
            }
            Event::Tap { widget } | Event::LongTap { widget } => {
                let kind = if matches!(event, Event::Tap { .. }) {
                    BindKind::Click
                } else {
                    BindKind::LongClick
                };
                let w = self.widget(widget).ok_or_else(|| {
                    ApplyError::NotEnabled(format!("widget `{widget}` not present"))
                })?;
                let handler = w.bindings.get(&kind).cloned().ok_or_else(|| {
                    ApplyError::NotEnabled(format!(
                        "widget `{widget}` has no {} handler",
                        kind.name()
                    ))
                })?;
                Dispatch::Handlers(vec![(handler, vec![Value::Str(widget.0.clone())])])
            }
            Event::TextInput { widget, text } => {
                let w = self.widget(widget).ok_or_else(|| {
                    ApplyError::NotEnabled(format!("widget `{widget}` not present"))
                })?;
                if w.kind != WidgetKind::TextField {
                    return Err(ApplyError::NotEnabled(format!(
                        "widget `{widget}` is not a textfield"
                    )));
                }
                text_to_set = Some((widget.clone(), text.clone()));
                let handlers = match w.bindings.get(&BindKind::Text) {
                    Some(h) => vec![(h.clone(), vec![Value::Str(text.clone())])],
                    None => vec![],
                };
                Dispatch::Handlers(handlers)
            }
            Event::Back => {
                if self.stack.is_empty() {
                    return Err(ApplyError::NotEnabled("back stack is empty".into()));
                }
                Dispatch::BackNav
            }
            Event::Broadcast { action, extras: e } => {
                let matching: Vec<MethodSig> = self
                    .receivers
                    .iter()
                    .filter(|(a, _)| a == action)
                    .map(|(_, m)| m.clone())
                    .collect();
                if matching.is_empty() {
                    return Err(ApplyError::NotEnabled(format!(
                        "no receiver registered for `{action}`"
                    )));
                }
                extras = e.clone();
                Dispatch::Handlers(
                    matching
                        .into_iter()
                        .map(|m| (m, vec![Value::Str(action.clone())]))
                        .collect(),
                )
            }
        };

        let snapshot = self.clone();
        let mut log = ExecLog::default();
        let budget = self.step_budget;
        let result = (|| -> Result<(), Trap> {
            let mut interp = Interp {
                app,
                state: self,
                log: &mut log,
                pending: Vec::new(),
                extras,
                steps: budget,
            };
            match dispatch {
                Dispatch::Enter(target) => {
                    interp.leave_current()?;
                    if let Some(old) = interp.state.current_activity.clone() {
                        interp.state.stack.push(old);
                    }
                    interp.enter_activity(&target)?;
                    interp.drain_nav()?;
                }
                Dispatch::Handlers(handlers) => {
                    if let Some((wid, text)) = text_to_set {
                        if let Some(w) =
                            interp.state.widgets.iter_mut().find(|w| w.id == wid)
                        {
                            w.text = text;
                        }
                    }
                    for (sig, args) in handlers {
                        interp.run_root(&sig, args)?;
                    }
                    interp.drain_nav()?;
                }
                Dispatch::BackNav => {
                    interp.pending.push(NavAction::Finish);
                    interp.drain_nav()?;
                }
            }
            Ok(())
        })();

        match result {
            Ok(()) => {
                let handlers = event_handler_of(&log)
                    .expect("trap-free logs are balanced");
                Ok(EventOutcome { layout: self.layout_snapshot(), handlers, log })
            }
            Err(trap) => {
                *self = snapshot;
                log.entries.push(LogEntry::Crash(trap.to_string()));
                Err(ApplyError::Trap { trap, log })
            }
        }
    }
}

/// Boots the app: fresh state, main activity entered, onCreate executed.
/// A trap during boot marks the state crashed and is recorded in the log.
pub fn boot(app: &App, seed: u64) -> (RuntimeState, ConcreteLayout, ExecLog) {
    let mut state = RuntimeState::prelaunch(seed);
    let launch = Event::Launch { activity: app.manifest.main_activity.clone() };
    match state.apply_event(app, &launch) {
        Ok(outcome) => (state, outcome.layout, outcome.log),
        Err(ApplyError::Trap { log, .. }) => {
            state.crashed = true;
            let layout = state.layout_snapshot();
            (state, layout, log)
        }
        Err(ApplyError::NotEnabled(_)) => unreachable!("entry events are always enabled"),
    }
}

/// Applies a full event sequence from a fresh boot. The first event must be
/// an entry event. Returns the artifacts of the final event plus the
/// coverage of the whole run; on failure identifies the failing index.
pub fn apply_sequence(
    app: &App,
    seq: &[Event],
    seed: u64,
) -> Result<SequenceOutcome, SequenceError> {
    assert!(!seq.is_empty(), "apply_sequence needs a non-empty sequence");
    let mut state = RuntimeState::prelaunch(seed);
    if !seq[0].is_entry() {
        return Err(SequenceError {
            index: 0,
            error: ApplyError::NotEnabled("first event of a full sequence must be an entry".into()),
            coverage: CoverageSet::new(),
        });
    }
    let mut coverage = CoverageSet::new();
    let mut final_outcome: Option<EventOutcome> = None;
    for (index, event) in seq.iter().enumerate() {
        match state.apply_event(app, event) {
            Ok(outcome) => {
                coverage.extend(coverage_of_log(app, &outcome.log));
                final_outcome = Some(outcome);
            }
            Err(error) => {
                if let ApplyError::Trap { log, .. } = &error {
                    coverage.extend(coverage_of_log(app, log));
                }
                return Err(SequenceError { index, error, coverage });
            }
        }
    }
    let outcome = final_outcome.expect("non-empty sequence");
    Ok(SequenceOutcome {
        state,
        layout: outcome.layout,
        handlers: outcome.handlers,
        log: outcome.log,
        coverage,
    })
}

/// Enumerates the events available in a layout: one per (widget, bound
/// event kind), one text-input per text field with a seeded payload, and
/// one broadcast per registered receiver action. Deterministic order.
pub fn extract_events(layout: &ConcreteLayout, state: &RuntimeState) -> Vec<Event> {
    let mut events = Vec::new();
    for w in &layout.widgets {
        if w.bindings.contains_key(&BindKind::Click) {
            events.push(Event::Tap { widget: w.id.clone() });
        }
        if w.bindings.contains_key(&BindKind::LongClick) {
            events.push(Event::LongTap { widget: w.id.clone() });
        }
        if w.kind == WidgetKind::TextField {
            events.push(Event::TextInput {
                widget: w.id.clone(),
                text: seeded_text(state.seed, &w.id),
            });
        }
    }
    let mut seen_actions = BTreeSet::new();
    for (action, _) in &layout.receivers {
        if seen_actions.insert(action.clone()) {
            events.push(Event::Broadcast { action: action.clone(), extras: BTreeMap::new() });
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appir::parse_app;

    fn counter_app() -> App {
        parse_app(
            r#"
MANIFEST
  main A1
END

ACTIVITY A1
  oncreate A1.onCreate
  widget b1 button
  bind b1 click A1.onClick
END

METHOD A1.onCreate regs=1 params=0
  const v0 0
  sput v0 G.counter
  return
END

METHOD A1.onClick regs=3 params=1
  sget v1 G.counter
  const v2 1
  binop + v1 v1 v2
  sput v1 G.counter
  return
END
"#,
        )
        .unwrap()
    }

    /// Two-branch handler in the shape used throughout: a guard on a
    /// static field choosing between two activity transitions.
    fn branch_app() -> App {
        parse_app(
            r#"
MANIFEST
  main A1
END

ACTIVITY A1
  widget b1 button
  bind b1 click A1.onClick
  widget b2 button
  bind b2 click A1.onToggle
END

ACTIVITY A2
  widget bA2 button
  bind bA2 click A2.noop
END

ACTIVITY A3
  widget bA3 button
  bind bA3 click A3.noop
END

METHOD A1.onClick regs=3 params=1
  sget v0 G.cond
  if == v0 v2 7
  const v1 "A2"
  const v2 1
  binop + v2 v2 v2
  api ui.startActivity v1
  goto 11
  const v1 "A3"
  const v2 2
  binop + v2 v2 v2
  api ui.startActivity v1
  return
END

METHOD A1.onToggle regs=1 params=1
  const v0 1
  sput v0 G.cond
  return
END

METHOD A2.noop regs=1 params=1
  return
END

METHOD A3.noop regs=1 params=1
  return
END
"#,
        )
        .unwrap()
    }

    #[test]
    fn boot_runs_oncreate() {
        let app = counter_app();
        let (state, layout, log) = boot(&app, 42);
        assert!(!state.crashed);
        assert_eq!(state.statics.get(&FieldSig("G.counter".into())), Some(&Value::Int(0)));
        assert_eq!(layout.widgets.len(), 1);
        let roots = event_handler_of(&log).unwrap();
        assert_eq!(roots, vec![MethodSig("A1.onCreate".into())]);
    }

    #[test]
    fn boot_without_lifecycle_has_empty_log() {
        let app = parse_app(
            "MANIFEST\n  main A1\nEND\nACTIVITY A1\n  widget b1 button\n  bind b1 click A1.f\nEND\nMETHOD A1.f regs=1 params=1\n  return\nEND\n",
        )
        .unwrap();
        let (_, layout, log) = boot(&app, 1);
        assert!(log.entries.is_empty());
        assert_eq!(layout.widgets[0].id, WidgetId("b1".into()));
    }

    #[test]
    fn tap_twice_counts_to_two() {
        let app = counter_app();
        let seq = vec![
            Event::Launch { activity: ActivityId("A1".into()) },
            Event::Tap { widget: WidgetId("b1".into()) },
            Event::Tap { widget: WidgetId("b1".into()) },
        ];
        let out = apply_sequence(&app, &seq, 42).unwrap();
        assert_eq!(out.handlers, vec![MethodSig("A1.onClick".into())]);
        assert_eq!(out.state.statics.get(&FieldSig("G.counter".into())), Some(&Value::Int(2)));
    }

    #[test]
    fn transition_runs_lifecycle_in_order() {
        let src = r#"
MANIFEST
  main A1
END
ACTIVITY A1
  onpause A1.onPause
  onstop A1.onStop
  widget b1 button
  bind b1 click A1.onClick
END
ACTIVITY A2
  oncreate A2.onCreate
END
METHOD A1.onClick regs=1 params=1
  const v0 "A2"
  api ui.startActivity v0
  return
END
METHOD A1.onPause regs=1 params=0
  return
END
METHOD A1.onStop regs=1 params=0
  return
END
METHOD A2.onCreate regs=1 params=0
  return
END
"#;
        let app = parse_app(src).unwrap();
        let mut state = RuntimeState::prelaunch(42);
        state
            .apply_event(&app, &Event::Launch { activity: ActivityId("A1".into()) })
            .unwrap();
        let out = state.apply_event(&app, &Event::Tap { widget: WidgetId("b1".into()) }).unwrap();
        let roots: Vec<String> = out.handlers.iter().map(|m| m.0.clone()).collect();
        assert_eq!(roots, vec!["A1.onClick", "A1.onPause", "A1.onStop", "A2.onCreate"]);
        assert_eq!(out.layout.activity, Some(ActivityId("A2".into())));
    }

    #[test]
    fn broadcast_before_registration_is_disabled() {
        let app = counter_app();
        let mut state = RuntimeState::prelaunch(42);
        state
            .apply_event(&app, &Event::Launch { activity: ActivityId("A1".into()) })
            .unwrap();
        let err = state
            .apply_event(
                &app,
                &Event::Broadcast { action: "HEADSET".into(), extras: BTreeMap::new() },
            )
            .unwrap_err();
        assert!(matches!(err, ApplyError::NotEnabled(_)));
    }

    #[test]
    fn set_handler_overrides_declaration() {
        let src = r#"
MANIFEST
  main A1
END
ACTIVITY A1
  oncreate A1.onCreate
  widget b1 button
  bind b1 click A1.onClick
END
METHOD A1.onCreate regs=2 params=0
  const v0 "b1"
  const v1 "A1.onClick2"
  api ui.setHandler v0 v1
  return
END
METHOD A1.onClick regs=1 params=1
  return
END
METHOD A1.onClick2 regs=1 params=1
  return
END
"#;
        let app = parse_app(src).unwrap();
        let (_, layout, _) = boot(&app, 42);
        assert_eq!(
            layout.widgets[0].bindings.get(&BindKind::Click),
            Some(&MethodSig("A1.onClick2".into()))
        );
    }

    #[test]
    fn trap_rolls_back_state() {
        let src = r#"
MANIFEST
  main A1
END
ACTIVITY A1
  widget b1 button
  bind b1 click A1.onClick
END
METHOD A1.onClick regs=3 params=1
  const v1 7
  sput v1 G.touched
  const v2 0
  binop / v1 v1 v2
  return
END
"#;
        let app = parse_app(src).unwrap();
        let mut state = RuntimeState::prelaunch(42);
        state
            .apply_event(&app, &Event::Launch { activity: ActivityId("A1".into()) })
            .unwrap();
        let before = state.clone();
        let err =
            state.apply_event(&app, &Event::Tap { widget: WidgetId("b1".into()) }).unwrap_err();
        match err {
            ApplyError::Trap { trap, log } => {
                assert_eq!(trap, Trap::DivByZero);
                assert!(log.has_crash());
            }
            other => panic!("expected trap, got {other:?}"),
        }
        assert_eq!(state, before, "GUI state must be unchanged after a trap");
    }

    #[test]
    fn sequence_failure_reports_index() {
        let app = counter_app();
        let seq = vec![
            Event::Launch { activity: ActivityId("A1".into()) },
            Event::Tap { widget: WidgetId("ghost".into()) },
            Event::Tap { widget: WidgetId("b1".into()) },
        ];
        let err = apply_sequence(&app, &seq, 42).unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn extract_events_is_deterministic() {
        let src = r#"
MANIFEST
  main A1
END
ACTIVITY A1
  widget b1 button
  bind b1 click A1.f
  widget tf1 textfield
END
METHOD A1.f regs=1 params=1
  return
END
"#;
        let app = parse_app(src).unwrap();
        let (state, layout, _) = boot(&app, 42);
        let ev1 = extract_events(&layout, &state);
        let ev2 = extract_events(&layout, &state);
        assert_eq!(ev1, ev2);
        assert_eq!(ev1.len(), 2);
        assert!(matches!(ev1[0], Event::Tap { .. }));
        match &ev1[1] {
            Event::TextInput { text, .. } => {
                assert_eq!(text.len(), 8);
                assert!(text.chars().all(|c| c.is_ascii_lowercase()));
            }
            other => panic!("expected text event, got {other:?}"),
        }
    }

    #[test]
    fn extract_events_includes_registered_receiver() {
        let src = r#"
MANIFEST
  main A1
END
ACTIVITY A1
  oncreate A1.onCreate
END
METHOD A1.onCreate regs=2 params=0
  const v0 "HEADSET"
  const v1 "A1.onHp"
  api sys.registerReceiver v0 v1
  return
END
METHOD A1.onHp regs=1 params=1
  return
END
"#;
        let app = parse_app(src).unwrap();
        let (state, layout, log) = boot(&app, 42);
        assert!(log
            .entries
            .iter()
            .any(|e| matches!(e, LogEntry::ReceiverRegistered(a, _) if a == "HEADSET")));
        let events = extract_events(&layout, &state);
        assert!(events
            .iter()
            .any(|e| matches!(e, Event::Broadcast { action, .. } if action == "HEADSET")));
    }

    #[test]
    fn handler_roots_from_nested_log() {
        let mut log = ExecLog::default();
        let on_click = MethodSig("A1.onClick".into());
        let increase = MethodSig("A1.increase".into());
        log.entries.push(LogEntry::MethodStart(on_click.clone()));
        log.entries.push(LogEntry::MethodStart(increase.clone()));
        log.entries.push(LogEntry::MethodReturn(increase));
        log.entries.push(LogEntry::MethodReturn(on_click.clone()));
        assert_eq!(event_handler_of(&log).unwrap(), vec![on_click]);
    }

    #[test]
    fn handler_roots_empty_log() {
        assert_eq!(event_handler_of(&ExecLog::default()).unwrap(), Vec::<MethodSig>::new());
    }

    #[test]
    fn unbalanced_log_is_integrity_error() {
        let mut log = ExecLog::default();
        log.entries.push(LogEntry::MethodStart(MethodSig("A1.f".into())));
        assert!(event_handler_of(&log).is_err());
    }

    #[test]
    fn branch_app_paths_depend_on_field() {
        let app = branch_app();
        // cond defaults to 0 -> comparison `cond == 0` holds -> A3 branch
        let seq = vec![
            Event::Launch { activity: ActivityId("A1".into()) },
            Event::Tap { widget: WidgetId("b1".into()) },
        ];
        let out = apply_sequence(&app, &seq, 42).unwrap();
        assert_eq!(out.layout.activity, Some(ActivityId("A3".into())));
        // after toggling, the same tap goes to A2
        let seq = vec![
            Event::Launch { activity: ActivityId("A1".into()) },
            Event::Tap { widget: WidgetId("b2".into()) },
            Event::Tap { widget: WidgetId("b1".into()) },
        ];
        let out = apply_sequence(&app, &seq, 42).unwrap();
        assert_eq!(out.layout.activity, Some(ActivityId("A2".into())));
    }

    #[test]
    fn back_pops_to_previous_activity() {
        let app = branch_app();
        let seq = vec![
            Event::Launch { activity: ActivityId("A1".into()) },
            Event::Tap { widget: WidgetId("b1".into()) },
            Event::Back,
        ];
        let out = apply_sequence(&app, &seq, 42).unwrap();
        assert_eq!(out.layout.activity, Some(ActivityId("A1".into())));
        // back on the root activity is not enabled
        let err = apply_sequence(
            &app,
            &[Event::Launch { activity: ActivityId("A1".into()) }, Event::Back],
            42,
        )
        .unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn determinism_same_seed_same_run() {
        let app = branch_app();
        let seq = vec![
            Event::Launch { activity: ActivityId("A1".into()) },
            Event::Tap { widget: WidgetId("b2".into()) },
            Event::Tap { widget: WidgetId("b1".into()) },
        ];
        let a = apply_sequence(&app, &seq, 7).unwrap();
        let b = apply_sequence(&app, &seq, 7).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(a.log, b.log);
        assert_eq!(a.layout, b.layout);
    }

    #[test]
    fn intent_extras_reach_oncreate() {
        let src = r#"
MANIFEST
  main A1
  filter A2 action.VIEW
END
ACTIVITY A1
END
ACTIVITY A2
  oncreate A2.onCreate
END
METHOD A2.onCreate regs=2 params=0
  const v0 "who"
  api intent.getExtra v0
  move-result v1
  sput v1 G.who
  return
END
"#;
        let app = parse_app(src).unwrap();
        let mut state = RuntimeState::prelaunch(42);
        let event = Event::Intent {
            activity: ActivityId("A2".into()),
            action: "action.VIEW".into(),
            extras: BTreeMap::from([("who".to_string(), "me".to_string())]),
        };
        state.apply_event(&app, &event).unwrap();
        assert_eq!(state.statics.get(&FieldSig("G.who".into())), Some(&Value::Str("me".into())));
        // missing keys read as the empty string
        let mut state = RuntimeState::prelaunch(42);
        let event = Event::Intent {
            activity: ActivityId("A2".into()),
            action: "action.VIEW".into(),
            extras: BTreeMap::new(),
        };
        state.apply_event(&app, &event).unwrap();
        assert_eq!(state.statics.get(&FieldSig("G.who".into())), Some(&Value::Str("".into())));
    }

    #[test]
    fn objects_and_arrays() {
        let src = r#"
MANIFEST
  main A1
END
ACTIVITY A1
  widget b1 button
  bind b1 click A1.onTap
  widget b2 button
  bind b2 click A1.onBad
END
METHOD A1.onTap regs=4 params=1
  new v0 Box
  const v1 7
  iput v1 v0 size
  iget v2 v0 size
  sput v2 G.size
  iget v2 v0 missing
  sput v2 G.missing
  new v0 Arr
  const v3 0
  aput v1 v0 v3
  aget v2 v0 v3
  sput v2 G.elem
  invoke A1.twice v1
  move-result v2
  sput v2 G.doubled
  return
END
METHOD A1.twice regs=2 params=1
  binop + v0 v0 v0
  return v0
END
METHOD A1.onBad regs=3 params=1
  new v0 Arr
  const v1 5
  aget v2 v0 v1
  return
END
"#;
        let app = parse_app(src).unwrap();
        let mut state = RuntimeState::prelaunch(42);
        state.apply_event(&app, &Event::Launch { activity: ActivityId("A1".into()) }).unwrap();
        state.apply_event(&app, &Event::Tap { widget: WidgetId("b1".into()) }).unwrap();
        let get = |f: &str| state.statics.get(&FieldSig(f.into())).cloned();
        assert_eq!(get("G.size"), Some(Value::Int(7)));
        assert_eq!(get("G.missing"), Some(Value::Int(0)), "unset fields default to 0");
        assert_eq!(get("G.elem"), Some(Value::Int(7)));
        assert_eq!(get("G.doubled"), Some(Value::Int(14)));
        // reading an unwritten array index traps
        let err =
            state.apply_event(&app, &Event::Tap { widget: WidgetId("b2".into()) }).unwrap_err();
        match err {
            ApplyError::Trap { trap, .. } => assert_eq!(trap, Trap::BadArrayIndex(5)),
            other => panic!("expected trap, got {other:?}"),
        }
    }

    #[test]
    fn long_tap_and_list_item_extraction() {
        let src = r#"
MANIFEST
  main A1
END
ACTIVITY A1
  widget li1 list-item
  bind li1 click A1.onPick
  bind li1 long-click A1.onHold
END
METHOD A1.onPick regs=1 params=1
  return
END
METHOD A1.onHold regs=1 params=1
  const v0 1
  sput v0 G.held
  return
END
"#;
        let app = parse_app(src).unwrap();
        let (state, layout, _) = boot(&app, 42);
        let events = extract_events(&layout, &state);
        assert_eq!(
            events,
            vec![
                Event::Tap { widget: WidgetId("li1".into()) },
                Event::LongTap { widget: WidgetId("li1".into()) },
            ]
        );
        let mut state = state;
        let out =
            state.apply_event(&app, &Event::LongTap { widget: WidgetId("li1".into()) }).unwrap();
        assert_eq!(out.handlers, vec![MethodSig("A1.onHold".into())]);
        assert_eq!(state.statics.get(&FieldSig("G.held".into())), Some(&Value::Int(1)));
    }

    #[test]
    fn opaque_apis_are_deterministic() {
        let src = r#"
MANIFEST
  main A1
END
ACTIVITY A1
  widget b1 button
  bind b1 click A1.onTap
END
METHOD A1.onTap regs=2 params=1
  api sys.time
  move-result v0
  sput v0 G.t
  const v1 "http://x"
  api net.fetch v1
  move-result v0
  sput v0 G.f
  return
END
"#;
        let app = parse_app(src).unwrap();
        let run = || {
            let mut state = RuntimeState::prelaunch(42);
            state
                .apply_event(&app, &Event::Launch { activity: ActivityId("A1".into()) })
                .unwrap();
            state.apply_event(&app, &Event::Tap { widget: WidgetId("b1".into()) }).unwrap();
            state.apply_event(&app, &Event::Tap { widget: WidgetId("b1".into()) }).unwrap();
            state.statics.clone()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        // the logical clock advanced across the two taps
        assert_eq!(a.get(&FieldSig("G.t".into())), Some(&Value::Int(1)));
    }

    #[test]
    fn event_line_roundtrip() {
        let events = vec![
            Event::Launch { activity: ActivityId("A1".into()) },
            Event::Intent {
                activity: ActivityId("A2".into()),
                action: "action.VIEW".into(),
                extras: BTreeMap::from([("k".to_string(), "v".to_string())]),
            },
            Event::Tap { widget: WidgetId("b1".into()) },
            Event::LongTap { widget: WidgetId("b1".into()) },
            Event::TextInput { widget: WidgetId("tf".into()), text: "hi there".into() },
            Event::Back,
            Event::Broadcast { action: "HEADSET".into(), extras: BTreeMap::new() },
        ];
        for e in events {
            let line = e.to_line();
            let back = Event::parse_line(&line).unwrap();
            assert_eq!(e, back, "line was: {line}");
        }
    }
}
