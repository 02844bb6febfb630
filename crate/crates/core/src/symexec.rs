//! Path-wise symbolic execution.
//!
//! Interprets one execution path over a symbolic state, producing the
//! final symbolic state (what the path writes, as AST expressions over
//! pre-state symbols) and the path constraint (the conjunction of branch
//! conditions the path requires).
//!
//! Only global storage is symbolized: static fields, instance fields of
//! pre-existing objects, API returns, and user inputs. The event-handler
//! parameter is concrete event metadata, not a symbol, except for text
//! input whose payload is the canonical `$input` symbol of its widget.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::appir::{Api, App, ArithOp, CmpOp, FieldSig, Instr, Literal, MethodSig, WidgetId};
use crate::ipcfg::Path;
use crate::runtime::Event;

/// Symbol kinds; the keyword each renders with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SymKind {
    StaticField,
    InstanceField,
    ApiReturn,
    Input,
}

impl SymKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SymKind::StaticField => "$static-field",
            SymKind::InstanceField => "$instance-field",
            SymKind::ApiReturn => "$api-return",
            SymKind::Input => "$input",
        }
    }
}

/// A symbolic value rooted at a storage location or external source.
/// `generation` 0 is the state immediately before the summarized event;
/// higher generations denote states further in the past, introduced when
/// summaries are chained.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub kind: SymKind,
    pub signature: String,
    pub generation: u32,
}

impl Symbol {
    pub fn new(kind: SymKind, signature: impl Into<String>) -> Symbol {
        Symbol { kind, signature: signature.into(), generation: 0 }
    }

    /// Canonical key used by assignments and evaluation environments.
    pub fn key(&self) -> String {
        format!("{}:{}@{}", self.kind.keyword(), self.signature, self.generation)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.generation == 0 {
            write!(f, "({} {})", self.kind.keyword(), self.signature)
        } else {
            write!(f, "({} {} @{})", self.kind.keyword(), self.signature, self.generation)
        }
    }
}

/// String operations with symbolic models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrFn {
    Concat,
    Equals,
    Length,
}

impl StrFn {
    pub fn name(self) -> &'static str {
        match self {
            StrFn::Concat => "concat",
            StrFn::Equals => "equals",
            StrFn::Length => "length",
        }
    }
}

/// Expression AST over literals and symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SymExpr {
    Lit(Literal),
    Sym(Symbol),
    Arith { op: ArithOp, lhs: Box<SymExpr>, rhs: Box<SymExpr> },
    Cmp { op: CmpOp, lhs: Box<SymExpr>, rhs: Box<SymExpr> },
    Str { op: StrFn, args: Vec<SymExpr> },
    Not(Box<SymExpr>),
}

impl SymExpr {
    pub fn int(v: i64) -> SymExpr {
        SymExpr::Lit(Literal::Int(v))
    }

    pub fn boolean(b: bool) -> SymExpr {
        SymExpr::Lit(Literal::Bool(b))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, SymExpr::Lit(Literal::Bool(true)))
    }

    pub fn is_false(&self) -> bool {
        matches!(self, SymExpr::Lit(Literal::Bool(false)))
    }

    pub fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            SymExpr::Lit(_) => {}
            SymExpr::Sym(s) => {
                out.insert(s.clone());
            }
            SymExpr::Arith { lhs, rhs, .. } | SymExpr::Cmp { lhs, rhs, .. } => {
                lhs.collect_symbols(out);
                rhs.collect_symbols(out);
            }
            SymExpr::Str { args, .. } => {
                for a in args {
                    a.collect_symbols(out);
                }
            }
            SymExpr::Not(e) => e.collect_symbols(out),
        }
    }

    /// Replaces symbols by expressions, keyed by [`Symbol::key`].
    pub fn substitute(&self, map: &BTreeMap<String, SymExpr>) -> SymExpr {
        match self {
            SymExpr::Lit(_) => self.clone(),
            SymExpr::Sym(s) => map.get(&s.key()).cloned().unwrap_or_else(|| self.clone()),
            SymExpr::Arith { op, lhs, rhs } => SymExpr::Arith {
                op: *op,
                lhs: Box::new(lhs.substitute(map)),
                rhs: Box::new(rhs.substitute(map)),
            },
            SymExpr::Cmp { op, lhs, rhs } => SymExpr::Cmp {
                op: *op,
                lhs: Box::new(lhs.substitute(map)),
                rhs: Box::new(rhs.substitute(map)),
            },
            SymExpr::Str { op, args } => SymExpr::Str {
                op: *op,
                args: args.iter().map(|a| a.substitute(map)).collect(),
            },
            SymExpr::Not(e) => SymExpr::Not(Box::new(e.substitute(map))),
        }
    }

    /// Bumps the generation of every symbol by `delta`.
    pub fn shift_generation(&self, delta: u32) -> SymExpr {
        match self {
            SymExpr::Lit(_) => self.clone(),
            SymExpr::Sym(s) => SymExpr::Sym(Symbol {
                kind: s.kind,
                signature: s.signature.clone(),
                generation: s.generation + delta,
            }),
            SymExpr::Arith { op, lhs, rhs } => SymExpr::Arith {
                op: *op,
                lhs: Box::new(lhs.shift_generation(delta)),
                rhs: Box::new(rhs.shift_generation(delta)),
            },
            SymExpr::Cmp { op, lhs, rhs } => SymExpr::Cmp {
                op: *op,
                lhs: Box::new(lhs.shift_generation(delta)),
                rhs: Box::new(rhs.shift_generation(delta)),
            },
            SymExpr::Str { op, args } => SymExpr::Str {
                op: *op,
                args: args.iter().map(|a| a.shift_generation(delta)).collect(),
            },
            SymExpr::Not(e) => SymExpr::Not(Box::new(e.shift_generation(delta))),
        }
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymExpr::Lit(l) => write!(f, "{l}"),
            SymExpr::Sym(s) => write!(f, "{s}"),
            SymExpr::Arith { op, lhs, rhs } => write!(f, "({} {lhs} {rhs})", op.symbol()),
            SymExpr::Cmp { op, lhs, rhs } => write!(f, "({} {lhs} {rhs})", op.symbol()),
            SymExpr::Str { op, args } => {
                write!(f, "({}", op.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            SymExpr::Not(e) => write!(f, "(not {e})"),
        }
    }
}

/// Ordered conjunction of boolean expressions; empty means `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathConstraint {
    pub conjuncts: Vec<SymExpr>,
}

impl PathConstraint {
    pub fn is_trivially_true(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn push(&mut self, e: SymExpr) {
        self.conjuncts.push(e);
    }

    pub fn simplified(&self) -> PathConstraint {
        let mut out = Vec::new();
        for c in &self.conjuncts {
            let s = simplify(c);
            if s.is_true() {
                continue;
            }
            if s.is_false() {
                return PathConstraint { conjuncts: vec![SymExpr::boolean(false)] };
            }
            out.push(s);
        }
        PathConstraint { conjuncts: out }
    }

    pub fn collect_symbols(&self) -> BTreeSet<Symbol> {
        let mut set = BTreeSet::new();
        for c in &self.conjuncts {
            c.collect_symbols(&mut set);
        }
        set
    }

    pub fn substitute(&self, map: &BTreeMap<String, SymExpr>) -> PathConstraint {
        PathConstraint {
            conjuncts: self.conjuncts.iter().map(|c| c.substitute(map)).collect(),
        }
    }

    pub fn shift_generation(&self, delta: u32) -> PathConstraint {
        PathConstraint {
            conjuncts: self.conjuncts.iter().map(|c| c.shift_generation(delta)).collect(),
        }
    }
}

impl fmt::Display for PathConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return write!(f, "true");
        }
        if self.conjuncts.len() == 1 {
            return write!(f, "{}", self.conjuncts[0]);
        }
        write!(f, "(and")?;
        for c in &self.conjuncts {
            write!(f, " {c}")?;
        }
        write!(f, ")")
    }
}

/// Register/heap slot: an expression or a reference to a symbolic object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymValue {
    Expr(SymExpr),
    Obj(u64),
}

impl SymValue {
    fn as_expr(&self, reason: &str) -> Result<SymExpr, SymExecError> {
        match self {
            SymValue::Expr(e) => Ok(e.clone()),
            SymValue::Obj(id) => {
                Err(SymExecError::Unsupported(format!("{reason}: object #{id} used as value")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjOrigin {
    /// Allocated by a `new` inside the path; unset fields default to 0.
    NewInPath,
    /// Pre-existing object viewed through a storage location; unset field
    /// reads become `$instance-field` symbols rooted at that location.
    FromLocation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymObject {
    pub class: Option<String>,
    pub origin: ObjOrigin,
    pub fields: BTreeMap<String, SymValue>,
}

/// Side effects of modeled UI/system APIs observed along a path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApiEffect {
    StartActivity(SymExpr),
    Finish,
    RegisterReceiver { action: SymExpr, handler: SymExpr },
    SetHandler { widget: SymExpr, handler: SymExpr },
    SetText { widget: SymExpr, value: SymExpr },
}

/// Symbolic machine state threaded through a path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymState {
    pub statics: BTreeMap<FieldSig, SymValue>,
    pub objects: BTreeMap<u64, SymObject>,
    pub widget_text: BTreeMap<WidgetId, SymExpr>,
    pub effects: Vec<ApiEffect>,
    /// Static fields written (as opposed to merely symbolized) here.
    pub written: BTreeSet<FieldSig>,
    /// `$input` symbols read along the path, keyed by signature.
    pub inputs_read: BTreeSet<String>,
    location_views: BTreeMap<String, u64>,
    next_obj: u64,
    api_counter: u64,
    pub generation: u32,
}

impl SymState {
    pub fn new() -> SymState {
        SymState::default()
    }

    /// Post-state assignments: expression written to each static field.
    /// Object-valued fields are omitted (not expressible as constraints).
    pub fn static_assignments(&self) -> BTreeMap<FieldSig, SymExpr> {
        let mut out = BTreeMap::new();
        for field in &self.written {
            if let Some(SymValue::Expr(e)) = self.statics.get(field) {
                out.insert(field.clone(), e.clone());
            }
        }
        out
    }

    /// `(= ($static-field f) expr)` lines for reports and golden tests.
    pub fn render_assignments(&self) -> Vec<String> {
        self.static_assignments()
            .iter()
            .map(|(f, e)| format!("(= ($static-field {f}) {})", simplify(e)))
            .collect()
    }

    fn read_static(&mut self, field: &FieldSig) -> SymValue {
        if let Some(v) = self.statics.get(field) {
            return v.clone();
        }
        let sym = SymExpr::Sym(Symbol {
            kind: SymKind::StaticField,
            signature: field.0.clone(),
            generation: self.generation,
        });
        self.statics.insert(field.clone(), SymValue::Expr(sym.clone()));
        SymValue::Expr(sym)
    }

    fn fresh_api_return(&mut self, label: &str) -> SymExpr {
        let n = self.api_counter;
        self.api_counter += 1;
        SymExpr::Sym(Symbol {
            kind: SymKind::ApiReturn,
            signature: format!("{label}#{n}"),
            generation: self.generation,
        })
    }

    /// Object view of a location-rooted symbolic value (e.g. a static that
    /// holds an object). One view per location path: allocation-site
    /// identity, no aliasing between distinct locations.
    fn location_object(&mut self, location: String) -> u64 {
        if let Some(id) = self.location_views.get(&location) {
            return *id;
        }
        let id = self.alloc(SymObject {
            class: None,
            origin: ObjOrigin::FromLocation(location.clone()),
            fields: BTreeMap::new(),
        });
        self.location_views.insert(location, id);
        id
    }

    fn alloc(&mut self, obj: SymObject) -> u64 {
        let id = self.next_obj;
        self.next_obj += 1;
        self.objects.insert(id, obj);
        id
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SymExecError {
    #[error("path/statement mismatch at statement {index}: {detail}")]
    PathMismatch { index: usize, detail: String },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("move-result with no pending result")]
    NoResult,
    #[error("method `{0}` not found")]
    UnknownMethod(String),
}

struct SymFrame {
    method: MethodSig,
    regs: BTreeMap<u16, SymValue>,
    /// Statement the caller resumes at after this frame returns.
    resume: Option<(MethodSig, usize)>,
}

fn reg(frame: &SymFrame, r: u16) -> SymValue {
    frame.regs.get(&r).cloned().unwrap_or(SymValue::Expr(SymExpr::int(0)))
}

/// Concrete metadata of the summarized event, injected as handler
/// arguments. Text payloads become `$input` symbols so constraints over
/// them are solvable into event payloads.
fn handler_argument(event: Option<&Event>) -> Option<SymValue> {
    match event? {
        Event::Tap { widget } | Event::LongTap { widget } => {
            Some(SymValue::Expr(SymExpr::Lit(Literal::Str(widget.0.clone()))))
        }
        Event::TextInput { widget, .. } => Some(SymValue::Expr(SymExpr::Sym(Symbol::new(
            SymKind::Input,
            format!("text:{widget}"),
        )))),
        Event::Broadcast { action, .. } => {
            Some(SymValue::Expr(SymExpr::Lit(Literal::Str(action.clone()))))
        }
        Event::Intent { action, .. } => {
            Some(SymValue::Expr(SymExpr::Lit(Literal::Str(action.clone()))))
        }
        Event::Launch { .. } | Event::Back => None,
    }
}

/// Symbolically executes `path` from `s0`. Statements are interpreted in
/// order; each branch appends its condition (or negation) to the
/// constraint; `invoke` descends per the path; modeled APIs apply their
/// transfer functions, unmodeled ones bind fresh `$api-return` symbols.
pub fn sym_execute(
    mut state: SymState,
    path: &Path,
    app: &App,
    event: Option<&Event>,
) -> Result<(SymState, PathConstraint), SymExecError> {
    let mut constraint = PathConstraint::default();
    let root_method = app
        .method(&path.root)
        .ok_or_else(|| SymExecError::UnknownMethod(path.root.0.clone()))?;
    let mut root_regs = BTreeMap::new();
    if root_method.param_count > 0 {
        if let Some(arg) = handler_argument(event) {
            if let SymValue::Expr(SymExpr::Sym(s)) = &arg {
                state.inputs_read.insert(s.signature.clone());
            }
            root_regs.insert(0u16, arg);
        }
    }
    let mut frames =
        vec![SymFrame { method: path.root.clone(), regs: root_regs, resume: None }];
    let mut last_result: Option<SymValue> = None;

    let statements = &path.statements;
    for index in 0..statements.len() {
        let (m, pc) = &statements[index];
        let frame = frames.last_mut().ok_or(SymExecError::PathMismatch {
            index,
            detail: "statement after root return".into(),
        })?;
        if &frame.method != m {
            return Err(SymExecError::PathMismatch {
                index,
                detail: format!("expected frame `{}`, statement is in `{m}`", frame.method),
            });
        }
        let method =
            app.method(m).ok_or_else(|| SymExecError::UnknownMethod(m.0.clone()))?;
        let instr = method.body.get(*pc).ok_or(SymExecError::PathMismatch {
            index,
            detail: format!("pc {pc} out of range"),
        })?;
        let next = statements.get(index + 1);
        let expect_next = |expected: (&MethodSig, usize)| -> Result<(), SymExecError> {
            match next {
                Some((nm, npc)) if nm == expected.0 && *npc == expected.1 => Ok(()),
                other => Err(SymExecError::PathMismatch {
                    index,
                    detail: format!(
                        "expected next statement {}:{}, path has {:?}",
                        expected.0, expected.1, other
                    ),
                }),
            }
        };

        match instr {
            Instr::Const { dst, value } => {
                frame.regs.insert(*dst, SymValue::Expr(SymExpr::Lit(value.clone())));
                expect_next((m, pc + 1))?;
            }
            Instr::Move { dst, src } => {
                let v = reg(frame, *src);
                frame.regs.insert(*dst, v);
                expect_next((m, pc + 1))?;
            }
            Instr::BinOp { op, dst, lhs, rhs } => {
                let l = reg(frame, *lhs).as_expr("binop operand")?;
                let r = reg(frame, *rhs).as_expr("binop operand")?;
                let e = simplify(&SymExpr::Arith { op: *op, lhs: Box::new(l), rhs: Box::new(r) });
                frame.regs.insert(*dst, SymValue::Expr(e));
                expect_next((m, pc + 1))?;
            }
            Instr::If { cmp, lhs, rhs, target } => {
                let l = reg(frame, *lhs).as_expr("if operand")?;
                let r = reg(frame, *rhs).as_expr("if operand")?;
                let cond =
                    SymExpr::Cmp { op: *cmp, lhs: Box::new(l), rhs: Box::new(r) };
                match next {
                    Some((nm, npc)) if nm == m && *npc == *target => {
                        if *target != pc + 1 {
                            constraint.push(simplify(&cond));
                        }
                    }
                    Some((nm, npc)) if nm == m && *npc == pc + 1 => {
                        constraint.push(simplify(&SymExpr::Not(Box::new(cond))));
                    }
                    other => {
                        return Err(SymExecError::PathMismatch {
                            index,
                            detail: format!(
                                "branch successors are {m}:{} and {m}:{target}, path has {other:?}",
                                pc + 1
                            ),
                        })
                    }
                }
            }
            Instr::Goto { target } => expect_next((m, *target))?,
            Instr::SGet { dst, field } => {
                let v = state.read_static(field);
                frame.regs.insert(*dst, v);
                expect_next((m, pc + 1))?;
            }
            Instr::SPut { src, field } => {
                let v = reg(frame, *src);
                state.statics.insert(field.clone(), v);
                state.written.insert(field.clone());
                expect_next((m, pc + 1))?;
            }
            Instr::IGet { dst, obj, field } => {
                let v = match reg(frame, *obj) {
                    SymValue::Obj(id) => {
                        let data = state.objects.get(&id).cloned().unwrap_or(SymObject {
                            class: None,
                            origin: ObjOrigin::NewInPath,
                            fields: BTreeMap::new(),
                        });
                        match data.fields.get(field) {
                            Some(v) => v.clone(),
                            None => match &data.origin {
                                ObjOrigin::NewInPath => SymValue::Expr(SymExpr::int(0)),
                                ObjOrigin::FromLocation(loc) => {
                                    let sym = SymExpr::Sym(Symbol {
                                        kind: SymKind::InstanceField,
                                        signature: format!("{loc}.{field}"),
                                        generation: state.generation,
                                    });
                                    state
                                        .objects
                                        .get_mut(&id)
                                        .unwrap()
                                        .fields
                                        .insert(field.clone(), SymValue::Expr(sym.clone()));
                                    SymValue::Expr(sym)
                                }
                            },
                        }
                    }
                    SymValue::Expr(SymExpr::Sym(s)) if s.kind == SymKind::StaticField => {
                        // static holding an object: view it through its location
                        let id = state.location_object(s.signature.clone());
                        frame.regs.insert(*obj, SymValue::Obj(id));
                        let sym = SymExpr::Sym(Symbol {
                            kind: SymKind::InstanceField,
                            signature: format!("{}.{field}", s.signature),
                            generation: state.generation,
                        });
                        state
                            .objects
                            .get_mut(&id)
                            .unwrap()
                            .fields
                            .entry(field.clone())
                            .or_insert(SymValue::Expr(sym.clone()))
                            .clone()
                    }
                    SymValue::Expr(_) => SymValue::Expr(state.fresh_api_return("iget.opaque")),
                };
                frame.regs.insert(*dst, v);
                expect_next((m, pc + 1))?;
            }
            Instr::IPut { src, obj, field } => {
                let v = reg(frame, *src);
                match reg(frame, *obj) {
                    SymValue::Obj(id) => {
                        if let Some(data) = state.objects.get_mut(&id) {
                            data.fields.insert(field.clone(), v);
                        }
                    }
                    SymValue::Expr(SymExpr::Sym(s)) if s.kind == SymKind::StaticField => {
                        let id = state.location_object(s.signature.clone());
                        frame.regs.insert(*obj, SymValue::Obj(id));
                        state.objects.get_mut(&id).unwrap().fields.insert(field.clone(), v);
                    }
                    SymValue::Expr(_) => {} // write through opaque ref: dropped
                }
                expect_next((m, pc + 1))?;
            }
            Instr::New { dst, class } => {
                let id = state.alloc(SymObject {
                    class: Some(class.clone()),
                    origin: ObjOrigin::NewInPath,
                    fields: BTreeMap::new(),
                });
                frame.regs.insert(*dst, SymValue::Obj(id));
                expect_next((m, pc + 1))?;
            }
            Instr::AGet { dst, arr, idx } => {
                let idx_v = reg(frame, *idx);
                let v = match (reg(frame, *arr), idx_v) {
                    (SymValue::Obj(id), SymValue::Expr(SymExpr::Lit(Literal::Int(i)))) => {
                        state
                            .objects
                            .get(&id)
                            .and_then(|o| o.fields.get(&i.to_string()).cloned())
                            .unwrap_or(SymValue::Expr(SymExpr::int(0)))
                    }
                    _ => SymValue::Expr(state.fresh_api_return("aget.symbolic-index")),
                };
                frame.regs.insert(*dst, v);
                expect_next((m, pc + 1))?;
            }
            Instr::APut { src, arr, idx } => {
                let v = reg(frame, *src);
                if let (SymValue::Obj(id), SymValue::Expr(SymExpr::Lit(Literal::Int(i)))) =
                    (reg(frame, *arr), reg(frame, *idx))
                {
                    if let Some(o) = state.objects.get_mut(&id) {
                        o.fields.insert(i.to_string(), v);
                    }
                }
                expect_next((m, pc + 1))?;
            }
            Instr::Invoke { method: callee, args } => {
                let descended =
                    matches!(next, Some((nm, 0)) if nm == callee);
                if descended {
                    let mut callee_regs = BTreeMap::new();
                    for (i, a) in args.iter().enumerate() {
                        callee_regs.insert(i as u16, reg(frame, *a));
                    }
                    frames.push(SymFrame {
                        method: callee.clone(),
                        regs: callee_regs,
                        resume: Some((m.clone(), pc + 1)),
                    });
                } else {
                    // left opaque by the enumerator (depth bound)
                    last_result = Some(SymValue::Expr(
                        state.fresh_api_return(&format!("call:{callee}")),
                    ));
                    expect_next((m, pc + 1))?;
                }
            }
            Instr::MoveResult { dst } => {
                let v = last_result.clone().ok_or(SymExecError::NoResult)?;
                frame.regs.insert(*dst, v);
                expect_next((m, pc + 1))?;
            }
            Instr::Api { api, args } => {
                let argv: Vec<SymValue> = args.iter().map(|r| reg(frame, *r)).collect();
                last_result = apply_api_model(&mut state, *api, argv)?;
                expect_next((m, pc + 1))?;
            }
            Instr::Return { src } => {
                let value = src.map(|r| reg(frame, r));
                let finished = frames.pop().expect("frame stack non-empty");
                last_result = value;
                match frames.last() {
                    Some(_) => {
                        let resume = finished.resume.ok_or(SymExecError::PathMismatch {
                            index,
                            detail: "return from frame without resume point".into(),
                        })?;
                        expect_next((&resume.0, resume.1))?;
                    }
                    None => {
                        if next.is_some() {
                            return Err(SymExecError::PathMismatch {
                                index,
                                detail: "statements continue past root return".into(),
                            });
                        }
                    }
                }
            }
        }
    }
    if !frames.is_empty() {
        return Err(SymExecError::PathMismatch {
            index: statements.len(),
            detail: "path ended before root return".into(),
        });
    }
    Ok((state, constraint.simplified()))
}

/// Symbolic transfer functions for the API catalog. Modeled APIs produce
/// expressions or state effects; unmodeled ones (`net.fetch`, `sys.time`)
/// bind opaque `$api-return` symbols.
fn apply_api_model(
    state: &mut SymState,
    api: Api,
    args: Vec<SymValue>,
) -> Result<Option<SymValue>, SymExecError> {
    let expr = |v: &SymValue| v.as_expr(api.name());
    match api {
        Api::UiStartActivity => {
            let a = expr(&args[0])?;
            state.effects.push(ApiEffect::StartActivity(a));
            Ok(None)
        }
        Api::UiFinish => {
            state.effects.push(ApiEffect::Finish);
            Ok(None)
        }
        Api::UiSetHandler => {
            state.effects.push(ApiEffect::SetHandler {
                widget: expr(&args[0])?,
                handler: expr(&args[1])?,
            });
            Ok(None)
        }
        Api::UiSetText => {
            let widget = expr(&args[0])?;
            let value = expr(&args[1])?;
            if let SymExpr::Lit(Literal::Str(w)) = &widget {
                state.widget_text.insert(WidgetId(w.clone()), value.clone());
            }
            state.effects.push(ApiEffect::SetText { widget, value });
            Ok(None)
        }
        Api::UiGetText => {
            let widget = expr(&args[0])?;
            match &widget {
                SymExpr::Lit(Literal::Str(w)) => {
                    let wid = WidgetId(w.clone());
                    let e = state.widget_text.get(&wid).cloned().unwrap_or_else(|| {
                        SymExpr::Sym(Symbol {
                            kind: SymKind::Input,
                            signature: format!("text:{w}"),
                            generation: state.generation,
                        })
                    });
                    if let SymExpr::Sym(s) = &e {
                        state.inputs_read.insert(s.signature.clone());
                    }
                    state.widget_text.insert(wid, e.clone());
                    Ok(Some(SymValue::Expr(e)))
                }
                _ => Ok(Some(SymValue::Expr(state.fresh_api_return("ui.getText")))),
            }
        }
        Api::SysRegisterReceiver => {
            state.effects.push(ApiEffect::RegisterReceiver {
                action: expr(&args[0])?,
                handler: expr(&args[1])?,
            });
            Ok(None)
        }
        Api::SysTime => Ok(Some(SymValue::Expr(state.fresh_api_return("sys.time")))),
        Api::IntentGetExtra => {
            let key = expr(&args[0])?;
            match &key {
                SymExpr::Lit(Literal::Str(k)) => {
                    let sig = format!("extra:{k}");
                    state.inputs_read.insert(sig.clone());
                    Ok(Some(SymValue::Expr(SymExpr::Sym(Symbol {
                        kind: SymKind::Input,
                        signature: sig,
                        generation: state.generation,
                    }))))
                }
                _ => Ok(Some(SymValue::Expr(state.fresh_api_return("intent.getExtra")))),
            }
        }
        Api::StrEquals => Ok(Some(SymValue::Expr(simplify(&SymExpr::Str {
            op: StrFn::Equals,
            args: vec![expr(&args[0])?, expr(&args[1])?],
        })))),
        Api::StrLength => Ok(Some(SymValue::Expr(simplify(&SymExpr::Str {
            op: StrFn::Length,
            args: vec![expr(&args[0])?],
        })))),
        Api::StrConcat => Ok(Some(SymValue::Expr(simplify(&SymExpr::Str {
            op: StrFn::Concat,
            args: vec![expr(&args[0])?, expr(&args[1])?],
        })))),
        Api::NetFetch => Ok(Some(SymValue::Expr(state.fresh_api_return("net.fetch")))),
    }
}

/// Canonical keyword of an instruction family. `sput` renders as the
/// assignment root `=` (its AST is `(= ($static-field sig) value)`); the
/// full keyword set including `$sput` stays in [`KEYWORDS`].
pub fn canonical_keyword(instr: &Instr) -> &'static str {
    match instr {
        Instr::Const { .. } => "$const",
        Instr::Move { .. } => "$move",
        Instr::BinOp { .. } => "$binop",
        Instr::If { .. } => "$if",
        Instr::Goto { .. } => "$goto",
        Instr::SGet { .. } => "$sget",
        Instr::SPut { .. } => "=",
        Instr::IGet { .. } => "$iget",
        Instr::IPut { .. } => "$iput",
        Instr::New { .. } => "$new",
        Instr::AGet { .. } => "$aget",
        Instr::APut { .. } => "$aput",
        Instr::Invoke { .. } => "$invoke",
        Instr::MoveResult { .. } => "$move-result",
        Instr::Api { .. } => "$api",
        Instr::Return { .. } => "$return",
    }
}

/// The complete keyword vocabulary of the symbolic layer.
pub const KEYWORDS: [&str; 17] = [
    "$const",
    "$move",
    "$binop",
    "$if",
    "$goto",
    "$sget",
    "$sput",
    "$iget",
    "$iput",
    "$new",
    "$aget",
    "$aput",
    "$invoke",
    "$move-result",
    "$api",
    "$return",
    "=",
];

/// Semantics-preserving simplification: constant folding, double-negation
/// elimination, identity laws.
pub fn simplify(e: &SymExpr) -> SymExpr {
    match e {
        SymExpr::Lit(_) | SymExpr::Sym(_) => e.clone(),
        SymExpr::Arith { op, lhs, rhs } => {
            let l = simplify(lhs);
            let r = simplify(rhs);
            if let (SymExpr::Lit(Literal::Int(a)), SymExpr::Lit(Literal::Int(b))) = (&l, &r) {
                let folded = match op {
                    ArithOp::Add => Some(a.wrapping_add(*b)),
                    ArithOp::Sub => Some(a.wrapping_sub(*b)),
                    ArithOp::Mul => Some(a.wrapping_mul(*b)),
                    ArithOp::Div => {
                        if *b == 0 {
                            None // trapped at runtime; keep the node
                        } else {
                            Some(a.wrapping_div(*b))
                        }
                    }
                };
                if let Some(v) = folded {
                    return SymExpr::int(v);
                }
            }
            match (op, &l, &r) {
                (ArithOp::Add, SymExpr::Lit(Literal::Int(0)), x)
                | (ArithOp::Add, x, SymExpr::Lit(Literal::Int(0)))
                | (ArithOp::Sub, x, SymExpr::Lit(Literal::Int(0)))
                | (ArithOp::Mul, SymExpr::Lit(Literal::Int(1)), x)
                | (ArithOp::Mul, x, SymExpr::Lit(Literal::Int(1)))
                | (ArithOp::Div, x, SymExpr::Lit(Literal::Int(1))) => x.clone(),
                (ArithOp::Mul, SymExpr::Lit(Literal::Int(0)), _)
                | (ArithOp::Mul, _, SymExpr::Lit(Literal::Int(0))) => SymExpr::int(0),
                _ => SymExpr::Arith { op: *op, lhs: Box::new(l), rhs: Box::new(r) },
            }
        }
        SymExpr::Cmp { op, lhs, rhs } => {
            let l = simplify(lhs);
            let r = simplify(rhs);
            if let (SymExpr::Lit(a), SymExpr::Lit(b)) = (&l, &r) {
                if let Some(v) = fold_cmp(*op, a, b) {
                    return SymExpr::boolean(v);
                }
            }
            // `x == true` is x, `x == false` is ¬x (and the Ne duals)
            if let SymExpr::Lit(Literal::Bool(b)) = &r {
                if is_boolean_expr(&l) {
                    let keep = match op {
                        CmpOp::Eq => *b,
                        CmpOp::Ne => !*b,
                        _ => return SymExpr::Cmp { op: *op, lhs: Box::new(l), rhs: Box::new(r) },
                    };
                    return if keep { l } else { simplify(&SymExpr::Not(Box::new(l))) };
                }
            }
            if let SymExpr::Lit(Literal::Bool(b)) = &l {
                if is_boolean_expr(&r) {
                    let keep = match op {
                        CmpOp::Eq => *b,
                        CmpOp::Ne => !*b,
                        _ => return SymExpr::Cmp { op: *op, lhs: Box::new(l), rhs: Box::new(r) },
                    };
                    return if keep { r } else { simplify(&SymExpr::Not(Box::new(r))) };
                }
            }
            SymExpr::Cmp { op: *op, lhs: Box::new(l), rhs: Box::new(r) }
        }
        SymExpr::Str { op, args } => {
            let args: Vec<SymExpr> = args.iter().map(simplify).collect();
            match op {
                StrFn::Equals => {
                    if let [SymExpr::Lit(Literal::Str(a)), SymExpr::Lit(Literal::Str(b))] =
                        &args[..]
                    {
                        return SymExpr::boolean(a == b);
                    }
                }
                StrFn::Length => {
                    if let [SymExpr::Lit(Literal::Str(a))] = &args[..] {
                        return SymExpr::int(a.len() as i64);
                    }
                }
                StrFn::Concat => match &args[..] {
                    [SymExpr::Lit(Literal::Str(a)), SymExpr::Lit(Literal::Str(b))] => {
                        return SymExpr::Lit(Literal::Str(format!("{a}{b}")));
                    }
                    [SymExpr::Lit(Literal::Str(a)), x] if a.is_empty() => return x.clone(),
                    [x, SymExpr::Lit(Literal::Str(b))] if b.is_empty() => return x.clone(),
                    _ => {}
                },
            }
            SymExpr::Str { op: *op, args }
        }
        SymExpr::Not(inner) => {
            let i = simplify(inner);
            match i {
                SymExpr::Lit(Literal::Bool(b)) => SymExpr::boolean(!b),
                SymExpr::Not(x) => *x,
                SymExpr::Cmp { op, lhs, rhs } => SymExpr::Cmp { op: op.negate(), lhs, rhs },
                other => SymExpr::Not(Box::new(other)),
            }
        }
    }
}

fn is_boolean_expr(e: &SymExpr) -> bool {
    matches!(
        e,
        SymExpr::Cmp { .. }
            | SymExpr::Not(_)
            | SymExpr::Str { op: StrFn::Equals, .. }
            | SymExpr::Lit(Literal::Bool(_))
            | SymExpr::Sym(_)
    )
}

fn fold_cmp(op: CmpOp, a: &Literal, b: &Literal) -> Option<bool> {
    match op {
        CmpOp::Eq | CmpOp::Ne => {
            let eq = match (a, b) {
                (Literal::Int(x), Literal::Int(y)) => x == y,
                (Literal::Str(x), Literal::Str(y)) => x == y,
                (Literal::Bool(x), Literal::Bool(y)) => x == y,
                _ => false,
            };
            Some(if op == CmpOp::Eq { eq } else { !eq })
        }
        _ => {
            if let (Literal::Int(x), Literal::Int(y)) = (a, b) {
                Some(match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                    _ => unreachable!(),
                })
            } else {
                None
            }
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound symbol {0}")]
    Unbound(String),
    #[error("type mismatch in {0}")]
    Type(String),
    #[error("division by zero")]
    DivByZero,
}

/// Evaluates an expression under a total assignment of its symbols.
/// Mirrors the concrete interpreter's semantics.
pub fn eval(e: &SymExpr, env: &BTreeMap<String, Literal>) -> Result<Literal, EvalError> {
    match e {
        SymExpr::Lit(l) => Ok(l.clone()),
        SymExpr::Sym(s) => {
            env.get(&s.key()).cloned().ok_or_else(|| EvalError::Unbound(s.key()))
        }
        SymExpr::Arith { op, lhs, rhs } => {
            let (Literal::Int(a), Literal::Int(b)) = (eval(lhs, env)?, eval(rhs, env)?) else {
                return Err(EvalError::Type("arith over non-int".into()));
            };
            Ok(Literal::Int(match op {
                ArithOp::Add => a.wrapping_add(b),
                ArithOp::Sub => a.wrapping_sub(b),
                ArithOp::Mul => a.wrapping_mul(b),
                ArithOp::Div => {
                    if b == 0 {
                        return Err(EvalError::DivByZero);
                    }
                    a.wrapping_div(b)
                }
            }))
        }
        SymExpr::Cmp { op, lhs, rhs } => {
            let a = eval(lhs, env)?;
            let b = eval(rhs, env)?;
            fold_cmp(*op, &a, &b)
                .map(Literal::Bool)
                .ok_or_else(|| EvalError::Type("ordered comparison over non-int".into()))
        }
        SymExpr::Str { op, args } => {
            let vals: Result<Vec<Literal>, EvalError> =
                args.iter().map(|a| eval(a, env)).collect();
            let vals = vals?;
            match op {
                StrFn::Equals => match &vals[..] {
                    [Literal::Str(a), Literal::Str(b)] => Ok(Literal::Bool(a == b)),
                    _ => Err(EvalError::Type("equals over non-strings".into())),
                },
                StrFn::Length => match &vals[..] {
                    [Literal::Str(a)] => Ok(Literal::Int(a.len() as i64)),
                    _ => Err(EvalError::Type("length over non-string".into())),
                },
                StrFn::Concat => match &vals[..] {
                    [Literal::Str(a), Literal::Str(b)] => {
                        Ok(Literal::Str(format!("{a}{b}")))
                    }
                    _ => Err(EvalError::Type("concat over non-strings".into())),
                },
            }
        }
        SymExpr::Not(inner) => match eval(inner, env)? {
            Literal::Bool(b) => Ok(Literal::Bool(!b)),
            _ => Err(EvalError::Type("not over non-bool".into())),
        },
    }
}
