//! The miniature event-driven app IR.
//!
//! An app is a manifest (entry points), a set of activities with declared
//! layouts, and a set of methods whose bodies are a small register-based
//! bytecode. One untyped instruction stands for each instruction family;
//! width/type variants of real bytecode sets are deliberately not modeled.
//!
//! The concrete syntax is a line-oriented text format (`.mapp`) with
//! explicit `MANIFEST` / `ACTIVITY` / `METHOD` sections, documented in
//! `docs/mapp-format.md`.

mod parse;

pub use parse::{parse_app, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Name of an activity, e.g. `A1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityId(pub String);

/// Fully qualified method signature, `Class.method`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MethodSig(pub String);

/// Fully qualified static field signature, `Class.field`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldSig(pub String);

/// Widget identifier, unique within an activity's layout.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WidgetId(pub String);

impl fmt::Display for ActivityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
impl fmt::Display for MethodSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
impl fmt::Display for FieldSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
impl fmt::Display for WidgetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Literal operand of a `const` instruction. Integers are 64-bit signed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Str(String),
    Bool(bool),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Str(s) => write!(f, "{}", quote_str(s)),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

pub(crate) fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Arithmetic operators of `binop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

/// Comparison operators of `if`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }
}

/// The closed API catalog. Every `api` instruction names one of these.
///
/// The catalog is versioned with the IR: adding an entry is a format change.
/// `NetFetch` and `SysTime` execute concretely but have no symbolic model;
/// constraints over their return values are undecidable for the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Api {
    UiStartActivity,
    UiFinish,
    UiSetHandler,
    UiSetText,
    UiGetText,
    SysRegisterReceiver,
    SysTime,
    IntentGetExtra,
    StrEquals,
    StrLength,
    StrConcat,
    NetFetch,
}

impl Api {
    pub const ALL: [Api; 12] = [
        Api::UiStartActivity,
        Api::UiFinish,
        Api::UiSetHandler,
        Api::UiSetText,
        Api::UiGetText,
        Api::SysRegisterReceiver,
        Api::SysTime,
        Api::IntentGetExtra,
        Api::StrEquals,
        Api::StrLength,
        Api::StrConcat,
        Api::NetFetch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Api::UiStartActivity => "ui.startActivity",
            Api::UiFinish => "ui.finish",
            Api::UiSetHandler => "ui.setHandler",
            Api::UiSetText => "ui.setText",
            Api::UiGetText => "ui.getText",
            Api::SysRegisterReceiver => "sys.registerReceiver",
            Api::SysTime => "sys.time",
            Api::IntentGetExtra => "intent.getExtra",
            Api::StrEquals => "str.equals",
            Api::StrLength => "str.length",
            Api::StrConcat => "str.concat",
            Api::NetFetch => "net.fetch",
        }
    }

    pub fn from_name(name: &str) -> Option<Api> {
        Api::ALL.iter().copied().find(|a| a.name() == name)
    }

    /// Expected argument count, checked at parse time.
    pub fn arity(self) -> usize {
        match self {
            Api::UiStartActivity => 1,
            Api::UiFinish => 0,
            Api::UiSetHandler => 2,
            Api::UiSetText => 2,
            Api::UiGetText => 1,
            Api::SysRegisterReceiver => 2,
            Api::SysTime => 0,
            Api::IntentGetExtra => 1,
            Api::StrEquals => 2,
            Api::StrLength => 1,
            Api::StrConcat => 2,
            Api::NetFetch => 1,
        }
    }
}

impl fmt::Display for Api {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One untyped instruction per bytecode family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Instr {
    Const { dst: u16, value: Literal },
    Move { dst: u16, src: u16 },
    BinOp { op: ArithOp, dst: u16, lhs: u16, rhs: u16 },
    If { cmp: CmpOp, lhs: u16, rhs: u16, target: usize },
    Goto { target: usize },
    SGet { dst: u16, field: FieldSig },
    SPut { src: u16, field: FieldSig },
    IGet { dst: u16, obj: u16, field: String },
    IPut { src: u16, obj: u16, field: String },
    New { dst: u16, class: String },
    AGet { dst: u16, arr: u16, idx: u16 },
    APut { src: u16, arr: u16, idx: u16 },
    Invoke { method: MethodSig, args: Vec<u16> },
    MoveResult { dst: u16 },
    Api { api: Api, args: Vec<u16> },
    Return { src: Option<u16> },
}

impl Instr {
    /// Registers read by this instruction, in operand order.
    pub fn reads(&self) -> Vec<u16> {
        match self {
            Instr::Const { .. } | Instr::MoveResult { .. } | Instr::New { .. } => vec![],
            Instr::Move { src, .. } => vec![*src],
            Instr::BinOp { lhs, rhs, .. } => vec![*lhs, *rhs],
            Instr::If { lhs, rhs, .. } => vec![*lhs, *rhs],
            Instr::Goto { .. } => vec![],
            Instr::SGet { .. } => vec![],
            Instr::SPut { src, .. } => vec![*src],
            Instr::IGet { obj, .. } => vec![*obj],
            Instr::IPut { src, obj, .. } => vec![*src, *obj],
            Instr::AGet { arr, idx, .. } => vec![*arr, *idx],
            Instr::APut { src, arr, idx } => vec![*src, *arr, *idx],
            Instr::Invoke { args, .. } | Instr::Api { args, .. } => args.clone(),
            Instr::Return { src } => src.iter().copied().collect(),
        }
    }

    /// Register written by this instruction, if any.
    pub fn writes(&self) -> Option<u16> {
        match self {
            Instr::Const { dst, .. }
            | Instr::Move { dst, .. }
            | Instr::BinOp { dst, .. }
            | Instr::SGet { dst, .. }
            | Instr::IGet { dst, .. }
            | Instr::New { dst, .. }
            | Instr::AGet { dst, .. }
            | Instr::MoveResult { dst } => Some(*dst),
            _ => None,
        }
    }

    pub fn is_terminator(&self) -> bool {
        matches!(self, Instr::Return { .. } | Instr::Goto { .. })
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Const { dst, value } => write!(f, "const v{dst} {value}"),
            Instr::Move { dst, src } => write!(f, "move v{dst} v{src}"),
            Instr::BinOp { op, dst, lhs, rhs } => {
                write!(f, "binop {} v{dst} v{lhs} v{rhs}", op.symbol())
            }
            Instr::If { cmp, lhs, rhs, target } => {
                write!(f, "if {} v{lhs} v{rhs} {target}", cmp.symbol())
            }
            Instr::Goto { target } => write!(f, "goto {target}"),
            Instr::SGet { dst, field } => write!(f, "sget v{dst} {field}"),
            Instr::SPut { src, field } => write!(f, "sput v{src} {field}"),
            Instr::IGet { dst, obj, field } => write!(f, "iget v{dst} v{obj} {field}"),
            Instr::IPut { src, obj, field } => write!(f, "iput v{src} v{obj} {field}"),
            Instr::New { dst, class } => write!(f, "new v{dst} {class}"),
            Instr::AGet { dst, arr, idx } => write!(f, "aget v{dst} v{arr} v{idx}"),
            Instr::APut { src, arr, idx } => write!(f, "aput v{src} v{arr} v{idx}"),
            Instr::Invoke { method, args } => {
                write!(f, "invoke {method}")?;
                for a in args {
                    write!(f, " v{a}")?;
                }
                Ok(())
            }
            Instr::MoveResult { dst } => write!(f, "move-result v{dst}"),
            Instr::Api { api, args } => {
                write!(f, "api {api}")?;
                for a in args {
                    write!(f, " v{a}")?;
                }
                Ok(())
            }
            Instr::Return { src: Some(s) } => write!(f, "return v{s}"),
            Instr::Return { src: None } => write!(f, "return"),
        }
    }
}

/// Half-open instruction range of one basic block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
}

/// A method: signature, register file size, parameter count and body.
/// `blocks` is the basic-block decomposition, derived during validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method {
    pub sig: MethodSig,
    pub reg_count: u16,
    pub param_count: u16,
    pub body: Vec<Instr>,
    pub blocks: Vec<Block>,
}

impl Method {
    /// Index of the block whose range contains `pc`.
    pub fn block_of(&self, pc: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.start <= pc && pc < b.end)
    }

    /// True when `pc` is the first instruction of a block.
    pub fn is_block_start(&self, pc: usize) -> bool {
        self.blocks.iter().any(|b| b.start == pc)
    }
}

/// Event kinds a widget can bind a handler for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BindKind {
    Click,
    LongClick,
    Text,
}

impl BindKind {
    pub fn name(self) -> &'static str {
        match self {
            BindKind::Click => "click",
            BindKind::LongClick => "long-click",
            BindKind::Text => "text",
        }
    }

    pub fn from_name(s: &str) -> Option<BindKind> {
        match s {
            "click" => Some(BindKind::Click),
            "long-click" => Some(BindKind::LongClick),
            "text" => Some(BindKind::Text),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WidgetKind {
    Button,
    TextField,
    ListItem,
}

impl WidgetKind {
    pub fn name(self) -> &'static str {
        match self {
            WidgetKind::Button => "button",
            WidgetKind::TextField => "textfield",
            WidgetKind::ListItem => "list-item",
        }
    }

    pub fn from_name(s: &str) -> Option<WidgetKind> {
        match s {
            "button" => Some(WidgetKind::Button),
            "textfield" => Some(WidgetKind::TextField),
            "list-item" => Some(WidgetKind::ListItem),
            _ => None,
        }
    }
}

/// Widget declaration inside a layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widget {
    pub id: WidgetId,
    pub kind: WidgetKind,
    pub bindings: BTreeMap<BindKind, MethodSig>,
}

/// Statically declared layout of an activity.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayoutDecl {
    pub widgets: Vec<Widget>,
}

/// Lifecycle callback slots of an activity.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Lifecycle {
    pub on_create: Option<MethodSig>,
    pub on_pause: Option<MethodSig>,
    pub on_stop: Option<MethodSig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub id: ActivityId,
    pub layout: LayoutDecl,
    pub lifecycle: Lifecycle,
}

/// Manifest: the main activity plus statically declared intent filters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub main_activity: ActivityId,
    pub intent_filters: Vec<(ActivityId, String)>,
}

/// A parsed, validated app. Immutable after parse; safe to share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct App {
    pub manifest: Manifest,
    pub activities: Vec<Activity>,
    pub methods: BTreeMap<MethodSig, Method>,
}

impl App {
    pub fn activity(&self, id: &ActivityId) -> Option<&Activity> {
        self.activities.iter().find(|a| &a.id == id)
    }

    pub fn method(&self, sig: &MethodSig) -> Option<&Method> {
        self.methods.get(sig)
    }

    /// Total instruction count over all methods; the coverage denominator.
    pub fn instruction_count(&self) -> usize {
        self.methods.values().map(|m| m.body.len()).sum()
    }

    /// Normalized text serialization. Reparsing yields a structurally
    /// equal `App`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("MANIFEST\n");
        out.push_str(&format!("  main {}\n", self.manifest.main_activity));
        for (act, action) in &self.manifest.intent_filters {
            out.push_str(&format!("  filter {act} {action}\n"));
        }
        out.push_str("END\n");
        for a in &self.activities {
            out.push_str(&format!("\nACTIVITY {}\n", a.id));
            if let Some(m) = &a.lifecycle.on_create {
                out.push_str(&format!("  oncreate {m}\n"));
            }
            if let Some(m) = &a.lifecycle.on_pause {
                out.push_str(&format!("  onpause {m}\n"));
            }
            if let Some(m) = &a.lifecycle.on_stop {
                out.push_str(&format!("  onstop {m}\n"));
            }
            for w in &a.layout.widgets {
                out.push_str(&format!("  widget {} {}\n", w.id, w.kind.name()));
                for (kind, handler) in &w.bindings {
                    out.push_str(&format!("  bind {} {} {handler}\n", w.id, kind.name()));
                }
            }
            out.push_str("END\n");
        }
        for m in self.methods.values() {
            out.push_str(&format!(
                "\nMETHOD {} regs={} params={}\n",
                m.sig, m.reg_count, m.param_count
            ));
            for instr in &m.body {
                out.push_str(&format!("  {instr}\n"));
            }
            out.push_str("END\n");
        }
        out
    }
}

/// Validation failure for a structurally complete but inconsistent app.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ValidateError {
    #[error("manifest names unknown main activity `{0}`")]
    UnknownMainActivity(ActivityId),
    #[error("intent filter references unknown activity `{0}`")]
    UnknownFilterActivity(ActivityId),
    #[error("duplicate intent filter action `{action}` on activity `{activity}`")]
    DuplicateFilterAction { activity: ActivityId, action: String },
    #[error("duplicate activity id `{0}`")]
    DuplicateActivity(ActivityId),
    #[error("duplicate widget id `{widget}` in activity `{activity}`")]
    DuplicateWidget { activity: ActivityId, widget: WidgetId },
    #[error("unresolved handler reference `{handler}` on widget `{widget}`")]
    UnresolvedHandler { widget: WidgetId, handler: MethodSig },
    #[error("unresolved lifecycle reference `{0}`")]
    UnresolvedLifecycle(MethodSig),
    #[error("unresolved invoke target `{callee}` in method `{method}`")]
    UnresolvedInvoke { method: MethodSig, callee: MethodSig },
    #[error("invalid branch target {target} at {method}:{pc} (method has {len} instructions)")]
    InvalidBranchTarget { method: MethodSig, pc: usize, target: usize, len: usize },
    #[error("register v{reg} out of range at {method}:{pc} (method declares {regs} registers)")]
    RegisterOutOfRange { method: MethodSig, pc: usize, reg: u16, regs: u16 },
    #[error("method `{0}` has an empty body")]
    EmptyBody(MethodSig),
    #[error("method `{method}` can fall off the end at instruction {pc}")]
    FallsOffEnd { method: MethodSig, pc: usize },
    #[error("method `{method}` declares params={params} > regs={regs}")]
    TooManyParams { method: MethodSig, params: u16, regs: u16 },
}

/// Basic-block decomposition: leaders are index 0, branch targets, and the
/// instruction after a branch or terminator.
pub fn compute_blocks(body: &[Instr]) -> Vec<Block> {
    let mut leaders: BTreeSet<usize> = BTreeSet::new();
    leaders.insert(0);
    for (pc, instr) in body.iter().enumerate() {
        match instr {
            Instr::If { target, .. } => {
                leaders.insert(*target);
                if pc + 1 < body.len() {
                    leaders.insert(pc + 1);
                }
            }
            Instr::Goto { target } => {
                leaders.insert(*target);
                if pc + 1 < body.len() {
                    leaders.insert(pc + 1);
                }
            }
            Instr::Return { .. }
                if pc + 1 < body.len() => {
                    leaders.insert(pc + 1);
                }
            _ => {}
        }
    }
    let starts: Vec<usize> = leaders.into_iter().filter(|&l| l < body.len()).collect();
    let mut blocks = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(body.len());
        blocks.push(Block { start, end });
    }
    blocks
}

/// Events firable from outside the app: one launch event for the main
/// activity, then one intent event per static intent filter, in manifest
/// order. A validated app always has at least one entry event.
pub fn entry_events(app: &App) -> Vec<crate::runtime::Event> {
    use crate::runtime::Event;
    let mut events =
        vec![Event::Launch { activity: app.manifest.main_activity.clone() }];
    for (activity, action) in &app.manifest.intent_filters {
        events.push(Event::Intent {
            activity: activity.clone(),
            action: action.clone(),
            extras: BTreeMap::new(),
        });
    }
    events
}

/// Validates an assembled app and fills in derived method blocks.
pub fn validate(mut app: App) -> Result<App, ValidateError> {
    // activity table
    let mut seen = BTreeSet::new();
    for a in &app.activities {
        if !seen.insert(a.id.clone()) {
            return Err(ValidateError::DuplicateActivity(a.id.clone()));
        }
    }
    if app.activity(&app.manifest.main_activity).is_none() {
        return Err(ValidateError::UnknownMainActivity(app.manifest.main_activity.clone()));
    }
    let mut filter_seen = BTreeSet::new();
    for (act, action) in &app.manifest.intent_filters {
        if app.activity(act).is_none() {
            return Err(ValidateError::UnknownFilterActivity(act.clone()));
        }
        if !filter_seen.insert((act.clone(), action.clone())) {
            return Err(ValidateError::DuplicateFilterAction {
                activity: act.clone(),
                action: action.clone(),
            });
        }
    }

    // layouts and handler references
    for a in &app.activities {
        let mut widget_seen = BTreeSet::new();
        for w in &a.layout.widgets {
            if !widget_seen.insert(w.id.clone()) {
                return Err(ValidateError::DuplicateWidget {
                    activity: a.id.clone(),
                    widget: w.id.clone(),
                });
            }
            for handler in w.bindings.values() {
                if !app.methods.contains_key(handler) {
                    return Err(ValidateError::UnresolvedHandler {
                        widget: w.id.clone(),
                        handler: handler.clone(),
                    });
                }
            }
        }
        for m in [&a.lifecycle.on_create, &a.lifecycle.on_pause, &a.lifecycle.on_stop]
            .into_iter()
            .flatten()
        {
            if !app.methods.contains_key(m) {
                return Err(ValidateError::UnresolvedLifecycle(m.clone()));
            }
        }
    }

    // method bodies
    let sigs: BTreeSet<MethodSig> = app.methods.keys().cloned().collect();
    for m in app.methods.values_mut() {
        if m.body.is_empty() {
            return Err(ValidateError::EmptyBody(m.sig.clone()));
        }
        if m.param_count > m.reg_count {
            return Err(ValidateError::TooManyParams {
                method: m.sig.clone(),
                params: m.param_count,
                regs: m.reg_count,
            });
        }
        let len = m.body.len();
        for (pc, instr) in m.body.iter().enumerate() {
            let check_reg = |reg: u16| -> Result<(), ValidateError> {
                if reg >= m.reg_count {
                    Err(ValidateError::RegisterOutOfRange {
                        method: m.sig.clone(),
                        pc,
                        reg,
                        regs: m.reg_count,
                    })
                } else {
                    Ok(())
                }
            };
            for r in instr.reads() {
                check_reg(r)?;
            }
            if let Some(r) = instr.writes() {
                check_reg(r)?;
            }
            match instr {
                Instr::If { target, .. } | Instr::Goto { target } => {
                    if *target >= len {
                        return Err(ValidateError::InvalidBranchTarget {
                            method: m.sig.clone(),
                            pc,
                            target: *target,
                            len,
                        });
                    }
                }
                Instr::Invoke { method, .. }
                    if !sigs.contains(method) => {
                        return Err(ValidateError::UnresolvedInvoke {
                            method: m.sig.clone(),
                            callee: method.clone(),
                        });
                    }
                _ => {}
            }
            // no fallthrough past the last instruction
            let falls_through = !matches!(instr, Instr::Return { .. } | Instr::Goto { .. });
            if falls_through && pc + 1 >= len {
                return Err(ValidateError::FallsOffEnd { method: m.sig.clone(), pc });
            }
        }
        m.blocks = compute_blocks(&m.body);
    }
    Ok(app)
}
