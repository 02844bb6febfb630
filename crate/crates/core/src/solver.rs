//! Constraint solving and event-sequence assembly.
//!
//! Turns a symbolic event summary into concrete event sequences: find
//! existing summaries whose symbolic post-states satisfy the target's path
//! constraint, chain them recursively through their own obligations, and
//! route the result through the GUI model from an entry event to the
//! target's source state.
//!
//! The decision procedure is built in and bounded: integers by interval-
//! pruned search over `[-domain_bound, domain_bound]`, booleans by
//! enumeration, strings constructively from the constraint's own literals
//! (equals copies the literal, length-k generates k letters, concat chains
//! resolve left to right). Constraints touching an unmodeled `$api-return`
//! are UNKNOWN, never guessed. The procedure sits behind this module's
//! functions so an external solver could be substituted without touching
//! callers.

use std::collections::{BTreeMap, BTreeSet};

use crate::appir::{Api, App, ArithOp, FieldSig, Literal};
use crate::gui_model::{EventSummary, GuiModel, SummaryId, SummaryStatus};
use crate::runtime::Event;
use crate::symexec::{
    eval, simplify, sym_execute, PathConstraint, SymExecError, SymExpr, SymKind, SymState, Symbol,
};

/// Witness assignment: canonical symbol key to concrete value. Total over
/// the constraint's free symbols when SAT.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub values: BTreeMap<String, Literal>,
}

impl Assignment {
    /// The `$input` entries, keyed by signature (drops generations).
    pub fn inputs(&self) -> BTreeMap<String, Literal> {
        let mut out = BTreeMap::new();
        for (key, v) in &self.values {
            if let Some(rest) = key.strip_prefix("$input:") {
                let sig = rest.rsplit_once('@').map(|(s, _)| s).unwrap_or(rest);
                out.insert(sig.to_string(), v.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat,
    Unknown(String),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

/// Catalog entry: an API and whether the symbolic layer models it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApiModel {
    pub api: Api,
    pub modeled: bool,
}

/// The closed, versioned API model catalog.
pub fn api_catalog() -> Vec<ApiModel> {
    Api::ALL
        .iter()
        .map(|&api| ApiModel {
            api,
            modeled: !matches!(api, Api::NetFetch | Api::SysTime),
        })
        .collect()
}

/// Bounds of the solving pipeline; all surfaced as CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SolveBounds {
    pub domain_bound: i64,
    pub recursion_bound: u32,
    pub k_max: u32,
}

impl Default for SolveBounds {
    fn default() -> Self {
        SolveBounds { domain_bound: 64, recursion_bound: 3, k_max: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Int,
    Bool,
    Str,
}

fn default_literal(kind: VarKind) -> Literal {
    match kind {
        VarKind::Int => Literal::Int(0),
        VarKind::Bool => Literal::Bool(false),
        VarKind::Str => Literal::Str(String::new()),
    }
}

/// Infers each symbol's kind from its use sites. Unconstrained symbols
/// default to int; conflicting uses are reported.
fn infer_kinds(c: &PathConstraint) -> Result<BTreeMap<String, VarKind>, String> {
    let mut kinds: BTreeMap<String, VarKind> = BTreeMap::new();
    fn note(
        kinds: &mut BTreeMap<String, VarKind>,
        sym: &Symbol,
        kind: VarKind,
    ) -> Result<(), String> {
        match kinds.insert(sym.key(), kind) {
            Some(old) if old != kind => {
                Err(format!("symbol {} used as both {:?} and {:?}", sym.key(), old, kind))
            }
            _ => Ok(()),
        }
    }
    fn walk(
        e: &SymExpr,
        expected: Option<VarKind>,
        kinds: &mut BTreeMap<String, VarKind>,
    ) -> Result<(), String> {
        match e {
            SymExpr::Lit(_) => Ok(()),
            SymExpr::Sym(s) => {
                if let Some(k) = expected {
                    note(kinds, s, k)?;
                }
                Ok(())
            }
            SymExpr::Arith { lhs, rhs, .. } => {
                walk(lhs, Some(VarKind::Int), kinds)?;
                walk(rhs, Some(VarKind::Int), kinds)
            }
            SymExpr::Cmp { op, lhs, rhs } => {
                use crate::appir::CmpOp;
                let operand_kind = match op {
                    CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge => Some(VarKind::Int),
                    CmpOp::Eq | CmpOp::Ne => match (&**lhs, &**rhs) {
                        (_, SymExpr::Lit(Literal::Int(_)))
                        | (SymExpr::Lit(Literal::Int(_)), _)
                        | (_, SymExpr::Arith { .. })
                        | (SymExpr::Arith { .. }, _) => Some(VarKind::Int),
                        (_, SymExpr::Lit(Literal::Str(_)))
                        | (SymExpr::Lit(Literal::Str(_)), _)
                        | (_, SymExpr::Str { op: crate::symexec::StrFn::Concat, .. })
                        | (SymExpr::Str { op: crate::symexec::StrFn::Concat, .. }, _) => {
                            Some(VarKind::Str)
                        }
                        (_, SymExpr::Lit(Literal::Bool(_)))
                        | (SymExpr::Lit(Literal::Bool(_)), _) => Some(VarKind::Bool),
                        _ => None,
                    },
                };
                // length yields int, equals yields bool: walk handles args
                walk(lhs, operand_kind, kinds)?;
                walk(rhs, operand_kind, kinds)
            }
            SymExpr::Str { op, args } => {
                use crate::symexec::StrFn;
                let arg_kind = match op {
                    StrFn::Concat | StrFn::Equals | StrFn::Length => VarKind::Str,
                };
                for a in args {
                    walk(a, Some(arg_kind), kinds)?;
                }
                Ok(())
            }
            SymExpr::Not(inner) => walk(inner, Some(VarKind::Bool), kinds),
        }
    }
    for conjunct in &c.conjuncts {
        // a bare symbol at conjunct root is boolean
        walk(conjunct, Some(VarKind::Bool), &mut kinds)?;
    }
    // anything seen but never kind-forced defaults to int
    let mut all = BTreeSet::new();
    for conj in &c.conjuncts {
        conj.collect_symbols(&mut all);
    }
    for s in all {
        kinds.entry(s.key()).or_insert(VarKind::Int);
    }
    Ok(kinds)
}

/// Candidate strings for a constraint, derived from its own literals:
/// every string literal, the empty string, single letters, `a…a` runs for
/// every small int literal (length constraints), literal+letter (strict
/// disequalities), and pairwise concatenations.
fn string_candidates(c: &PathConstraint) -> Vec<String> {
    let mut lits: BTreeSet<String> = BTreeSet::new();
    let mut ints: BTreeSet<i64> = BTreeSet::new();
    fn scan(e: &SymExpr, lits: &mut BTreeSet<String>, ints: &mut BTreeSet<i64>) {
        match e {
            SymExpr::Lit(Literal::Str(s)) => {
                lits.insert(s.clone());
            }
            SymExpr::Lit(Literal::Int(i)) => {
                ints.insert(*i);
            }
            SymExpr::Lit(_) | SymExpr::Sym(_) => {}
            SymExpr::Arith { lhs, rhs, .. } | SymExpr::Cmp { lhs, rhs, .. } => {
                scan(lhs, lits, ints);
                scan(rhs, lits, ints);
            }
            SymExpr::Str { args, .. } => {
                for a in args {
                    scan(a, lits, ints);
                }
            }
            SymExpr::Not(inner) => scan(inner, lits, ints),
        }
    }
    for conj in &c.conjuncts {
        scan(conj, &mut lits, &mut ints);
    }
    let mut set: BTreeSet<String> = BTreeSet::new();
    set.insert(String::new());
    set.insert("a".into());
    set.insert("b".into());
    for k in ints {
        if (0..=16).contains(&k) {
            set.insert("a".repeat(k as usize));
        }
    }
    for l in &lits {
        set.insert(l.clone());
        set.insert(format!("{l}a"));
    }
    for l in &lits {
        for r in &lits {
            if l.len() + r.len() <= 32 {
                set.insert(format!("{l}{r}"));
            }
        }
    }
    set.into_iter().collect()
}

/// Interval [lo, hi] narrowed from unit conjuncts `sym cmp literal`.
fn int_interval(c: &PathConstraint, key: &str, bound: i64) -> (i64, i64) {
    use crate::appir::CmpOp;
    let mut lo = -bound;
    let mut hi = bound;
    for conj in &c.conjuncts {
        if let SymExpr::Cmp { op, lhs, rhs } = conj {
            let (sym_side, lit, flipped) = match (&**lhs, &**rhs) {
                (SymExpr::Sym(s), SymExpr::Lit(Literal::Int(k))) => (s, *k, false),
                (SymExpr::Lit(Literal::Int(k)), SymExpr::Sym(s)) => (s, *k, true),
                _ => continue,
            };
            if sym_side.key() != key {
                continue;
            }
            let op = if flipped {
                match op {
                    CmpOp::Lt => CmpOp::Gt,
                    CmpOp::Le => CmpOp::Ge,
                    CmpOp::Gt => CmpOp::Lt,
                    CmpOp::Ge => CmpOp::Le,
                    other => *other,
                }
            } else {
                *op
            };
            match op {
                CmpOp::Eq => {
                    lo = lo.max(lit);
                    hi = hi.min(lit);
                }
                CmpOp::Lt => hi = hi.min(lit - 1),
                CmpOp::Le => hi = hi.min(lit),
                CmpOp::Gt => lo = lo.max(lit + 1),
                CmpOp::Ge => lo = lo.max(lit),
                CmpOp::Ne => {}
            }
        }
    }
    (lo, hi)
}

fn find_api_return(c: &PathConstraint) -> Option<String> {
    for conj in &c.conjuncts {
        let mut syms = BTreeSet::new();
        conj.collect_symbols(&mut syms);
        if syms.iter().any(|s| s.kind == SymKind::ApiReturn) {
            return Some(conj.to_string());
        }
    }
    None
}

/// Bounded decision procedure. Deterministic: the returned assignment is
/// the first found scanning strings in candidate order, booleans false
/// first, integers ascending from the narrowed lower bound.
pub fn decide(c: &PathConstraint, domain_bound: i64) -> SolveResult {
    let c = c.simplified();
    if c.conjuncts.iter().any(|e| e.is_false()) {
        return SolveResult::Unsat;
    }
    if c.is_trivially_true() {
        return SolveResult::Sat(Assignment::default());
    }
    if let Some(offending) = find_api_return(&c) {
        return SolveResult::Unknown(format!("unmodeled api in {offending}"));
    }
    let kinds = match infer_kinds(&c) {
        Ok(k) => k,
        Err(e) => return SolveResult::Unknown(format!("ill-typed constraint: {e}")),
    };
    let strings: Vec<String> = string_candidates(&c);
    let mut str_vars = Vec::new();
    let mut bool_vars = Vec::new();
    let mut int_vars = Vec::new();
    for (key, kind) in &kinds {
        match kind {
            VarKind::Str => str_vars.push(key.clone()),
            VarKind::Bool => bool_vars.push(key.clone()),
            VarKind::Int => int_vars.push(key.clone()),
        }
    }
    let intervals: Vec<(String, i64, i64)> = int_vars
        .iter()
        .map(|k| {
            let (lo, hi) = int_interval(&c, k, domain_bound);
            (k.clone(), lo, hi)
        })
        .collect();
    if intervals.iter().any(|(_, lo, hi)| lo > hi) {
        return SolveResult::Unsat;
    }

    // conjuncts evaluable as soon as their symbols are assigned
    let conjunct_syms: Vec<BTreeSet<String>> = c
        .conjuncts
        .iter()
        .map(|conj| {
            let mut s = BTreeSet::new();
            conj.collect_symbols(&mut s);
            s.into_iter().map(|sym| sym.key()).collect()
        })
        .collect();

    struct Search<'a> {
        c: &'a PathConstraint,
        conjunct_syms: &'a [BTreeSet<String>],
        str_vars: &'a [String],
        bool_vars: &'a [String],
        intervals: &'a [(String, i64, i64)],
        strings: &'a [String],
    }

    impl Search<'_> {
        fn consistent(&self, env: &BTreeMap<String, Literal>) -> bool {
            for (conj, syms) in self.c.conjuncts.iter().zip(self.conjunct_syms) {
                if syms.iter().all(|s| env.contains_key(s)) {
                    match eval(conj, env) {
                        Ok(Literal::Bool(true)) => {}
                        _ => return false,
                    }
                }
            }
            true
        }

        fn go(&self, pos: usize, env: &mut BTreeMap<String, Literal>) -> bool {
            let ns = self.str_vars.len();
            let nb = self.bool_vars.len();
            if pos < ns {
                for cand in self.strings {
                    env.insert(self.str_vars[pos].clone(), Literal::Str(cand.clone()));
                    if self.consistent(env) && self.go(pos + 1, env) {
                        return true;
                    }
                }
                env.remove(&self.str_vars[pos]);
                false
            } else if pos < ns + nb {
                for cand in [false, true] {
                    env.insert(self.bool_vars[pos - ns].clone(), Literal::Bool(cand));
                    if self.consistent(env) && self.go(pos + 1, env) {
                        return true;
                    }
                }
                env.remove(&self.bool_vars[pos - ns]);
                false
            } else if pos - ns - nb < self.intervals.len() {
                let (key, lo, hi) = &self.intervals[pos - ns - nb];
                for v in *lo..=*hi {
                    env.insert(key.clone(), Literal::Int(v));
                    if self.consistent(env) && self.go(pos + 1, env) {
                        return true;
                    }
                }
                env.remove(key);
                false
            } else {
                self.consistent(env)
            }
        }
    }

    let search = Search {
        c: &c,
        conjunct_syms: &conjunct_syms,
        str_vars: &str_vars,
        bool_vars: &bool_vars,
        intervals: &intervals,
        strings: &strings,
    };
    let mut env = BTreeMap::new();
    if search.go(0, &mut env) {
        // final verification under the full assignment
        for conj in &c.conjuncts {
            match eval(conj, &env) {
                Ok(Literal::Bool(true)) => {}
                _ => return SolveResult::Unsat,
            }
        }
        SolveResult::Sat(Assignment { values: env })
    } else {
        SolveResult::Unsat
    }
}

/// Substitutes boot defaults (0 / "" / false) for every state symbol of
/// any generation and decides the rest; `$input` symbols remain free.
pub fn decide_with_defaults(c: &PathConstraint, domain_bound: i64) -> SolveResult {
    let c = c.simplified();
    let kinds = match infer_kinds(&c) {
        Ok(k) => k,
        Err(e) => return SolveResult::Unknown(format!("ill-typed constraint: {e}")),
    };
    let mut syms = BTreeSet::new();
    for conj in &c.conjuncts {
        conj.collect_symbols(&mut syms);
    }
    let mut map = BTreeMap::new();
    for s in &syms {
        if matches!(s.kind, SymKind::StaticField | SymKind::InstanceField) {
            let kind = kinds.get(&s.key()).copied().unwrap_or(VarKind::Int);
            map.insert(s.key(), SymExpr::Lit(default_literal(kind)));
        }
    }
    decide(&c.substitute(&map).simplified(), domain_bound)
}

/// Memoized symbolic execution of a summary's path from a fresh state.
/// Summaries without a path (no handler ran) have empty effects and a
/// true constraint. Errors mark the summary unsolvable.
pub fn constraint_of_summary(
    summary: &mut EventSummary,
    app: &App,
) -> Result<(SymState, PathConstraint), SymExecError> {
    if let Some(cached) = &summary.sym_cache {
        return Ok(cached.clone());
    }
    if let Some(err) = &summary.sym_error {
        return Err(SymExecError::Unsupported(err.clone()));
    }
    let result = match &summary.path {
        None => Ok((SymState::new(), PathConstraint::default())),
        Some(path) => sym_execute(SymState::new(), path, app, Some(&summary.event)),
    };
    match result {
        Ok(pair) => {
            summary.sym_cache = Some(pair.clone());
            Ok(pair)
        }
        Err(e) => {
            summary.sym_error = Some(e.to_string());
            Err(e)
        }
    }
}

/// Outcome of checking whether executing a summary can establish `c`.
#[derive(Debug, Clone)]
pub struct SatisfyOutcome {
    pub status: SolveResult,
    /// `c` with the summary's post-state substituted in, conjoined with
    /// the summary's own path constraint; all state symbols one
    /// generation older.
    pub residual: PathConstraint,
    /// True when the substitution changed nothing (the summary writes no
    /// symbol `c` mentions).
    pub irrelevant: bool,
}

/// Substitutes `post`'s assignments into `c`'s matching symbols (shifting
/// the summary's pre-state one generation up), conjoins the summary's own
/// path constraint, and decides the residual with all symbols free. SAT
/// means executing the summary from a satisfying pre-state establishes `c`.
pub fn satisfies(
    post: &SymState,
    summary_pc: &PathConstraint,
    c: &PathConstraint,
    domain_bound: i64,
) -> SatisfyOutcome {
    let statics = post.static_assignments();
    let mut syms = BTreeSet::new();
    for conj in &c.conjuncts {
        conj.collect_symbols(&mut syms);
    }
    let mut map: BTreeMap<String, SymExpr> = BTreeMap::new();
    let mut touched = false;
    for s in &syms {
        match s.kind {
            SymKind::StaticField => {
                let field = FieldSig(s.signature.clone());
                match statics.get(&field) {
                    Some(expr) => {
                        let shifted = expr.shift_generation(s.generation + 1);
                        if map.insert(s.key(), shifted).is_none() {
                            touched = true;
                        }
                    }
                    None => {
                        map.insert(
                            s.key(),
                            SymExpr::Sym(Symbol {
                                kind: s.kind,
                                signature: s.signature.clone(),
                                generation: s.generation + 1,
                            }),
                        );
                    }
                }
            }
            SymKind::InstanceField => {
                // instance effects resolve through location views
                let written = post.objects.values().find_map(|o| {
                    if let crate::symexec::ObjOrigin::FromLocation(loc) = &o.origin {
                        let prefix = format!("{loc}.");
                        s.signature.strip_prefix(&prefix).and_then(|field| {
                            o.fields.get(field).and_then(|v| match v {
                                crate::symexec::SymValue::Expr(e) => Some(e.clone()),
                                _ => None,
                            })
                        })
                    } else {
                        None
                    }
                });
                match written {
                    Some(expr) => {
                        let shifted = expr.shift_generation(s.generation + 1);
                        // identity writes are not real effects
                        if shifted
                            != SymExpr::Sym(Symbol {
                                kind: s.kind,
                                signature: s.signature.clone(),
                                generation: s.generation + 1,
                            })
                        {
                            touched = true;
                        }
                        map.insert(s.key(), shifted);
                    }
                    None => {
                        map.insert(
                            s.key(),
                            SymExpr::Sym(Symbol {
                                kind: s.kind,
                                signature: s.signature.clone(),
                                generation: s.generation + 1,
                            }),
                        );
                    }
                }
            }
            SymKind::Input | SymKind::ApiReturn => {}
        }
    }
    // identity substitutions don't count as touching
    if touched {
        touched = syms.iter().any(|s| {
            map.get(&s.key()).is_some_and(|e| {
                e != &SymExpr::Sym(Symbol {
                    kind: s.kind,
                    signature: s.signature.clone(),
                    generation: s.generation + 1,
                })
            })
        });
    }
    let mut residual = c.substitute(&map);
    for conj in &summary_pc.shift_generation(1).conjuncts {
        residual.push(conj.clone());
    }
    let residual = residual.simplified();
    let status = decide(&residual, domain_bound);
    SatisfyOutcome { status, residual, irrelevant: !touched }
}

/// Affine self-effects of a summary: fields written as `field + delta`.
fn affine_effects(post: &SymState) -> BTreeMap<FieldSig, i64> {
    let mut out = BTreeMap::new();
    for (field, expr) in post.static_assignments() {
        let expr = simplify(&expr);
        let delta = match &expr {
            SymExpr::Arith { op, lhs, rhs } => {
                let (sym, lit) = match (&**lhs, &**rhs) {
                    (SymExpr::Sym(s), SymExpr::Lit(Literal::Int(k))) => (Some(s), Some(*k)),
                    (SymExpr::Lit(Literal::Int(k)), SymExpr::Sym(s)) => (Some(s), Some(*k)),
                    _ => (None, None),
                };
                match (op, sym, lit) {
                    (ArithOp::Add, Some(s), Some(k))
                        if s.kind == SymKind::StaticField && s.signature == field.0 =>
                    {
                        Some(k)
                    }
                    (ArithOp::Sub, Some(s), Some(k))
                        if s.kind == SymKind::StaticField
                            && s.signature == field.0
                            && matches!(&**lhs, SymExpr::Sym(_)) =>
                    {
                        Some(-k)
                    }
                    _ => None,
                }
            }
            _ => None,
        };
        if let Some(d) = delta {
            out.insert(field, d);
        }
    }
    out
}

/// Smallest `k <= k_max` such that `k` applications of the summary's
/// affine effect, starting from the boot value (0), satisfy `residual`.
/// All other state symbols are read at boot defaults. `None` when the
/// effect is not affine or no such `k` exists.
pub fn repetition_expand(
    post: &SymState,
    residual: &PathConstraint,
    k_max: u32,
) -> Option<u32> {
    let affine = affine_effects(post);
    if affine.is_empty() {
        return None;
    }
    let residual = residual.simplified();
    let kinds = infer_kinds(&residual).ok()?;
    let mut syms = BTreeSet::new();
    for conj in &residual.conjuncts {
        conj.collect_symbols(&mut syms);
    }
    if syms
        .iter()
        .any(|s| matches!(s.kind, SymKind::Input | SymKind::ApiReturn))
    {
        return None;
    }
    for k in 0..=k_max {
        let mut env = BTreeMap::new();
        for s in &syms {
            let field = FieldSig(s.signature.clone());
            let value = match affine.get(&field) {
                Some(delta) if s.kind == SymKind::StaticField => {
                    Literal::Int(delta.saturating_mul(k as i64))
                }
                _ => default_literal(kinds.get(&s.key()).copied().unwrap_or(VarKind::Int)),
            };
            env.insert(s.key(), value);
        }
        let ok = residual
            .conjuncts
            .iter()
            .all(|conj| matches!(eval(conj, &env), Ok(Literal::Bool(true))));
        if ok {
            return Some(k);
        }
    }
    None
}

/// One contributing application inside a generated sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct PlanStep {
    summary: SummaryId,
    count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Plan {
    steps: Vec<PlanStep>,
    inputs: BTreeMap<String, Literal>,
}

/// Normalizes a residual for recursion: state symbols age one generation
/// toward the present.
fn shift_down(c: &PathConstraint) -> PathConstraint {
    fn down(e: &SymExpr) -> SymExpr {
        match e {
            SymExpr::Lit(_) => e.clone(),
            SymExpr::Sym(s) => SymExpr::Sym(Symbol {
                kind: s.kind,
                signature: s.signature.clone(),
                generation: s.generation.saturating_sub(1),
            }),
            SymExpr::Arith { op, lhs, rhs } => SymExpr::Arith {
                op: *op,
                lhs: Box::new(down(lhs)),
                rhs: Box::new(down(rhs)),
            },
            SymExpr::Cmp { op, lhs, rhs } => SymExpr::Cmp {
                op: *op,
                lhs: Box::new(down(lhs)),
                rhs: Box::new(down(rhs)),
            },
            SymExpr::Str { op, args } => {
                SymExpr::Str { op: *op, args: args.iter().map(down).collect() }
            }
            SymExpr::Not(inner) => SymExpr::Not(Box::new(down(inner))),
        }
    }
    PathConstraint { conjuncts: c.conjuncts.iter().map(down).collect() }
}

const MAX_PLANS_PER_LEVEL: usize = 32;

struct Ctx {
    bounds: SolveBounds,
    /// (summary id, post state, path constraint) of usable concrete
    /// summaries, in insertion order.
    summaries: Vec<(SummaryId, SymState, PathConstraint)>,
}

impl Ctx {
    /// Finds plans establishing `c` starting from boot state.
    fn rec_solve(&self, c: &PathConstraint, depth: u32) -> Vec<Plan> {
        let c = c.simplified();
        let mut plans = Vec::new();
        if let SolveResult::Sat(a) = decide_with_defaults(&c, self.bounds.domain_bound) {
            plans.push(Plan { steps: vec![], inputs: a.inputs() });
        }
        if depth == 0 {
            return plans;
        }
        for (sid, post, s_pc) in &self.summaries {
            if plans.len() >= MAX_PLANS_PER_LEVEL {
                break;
            }
            let out = satisfies(post, s_pc, &c, self.bounds.domain_bound);
            log::debug!(
                "satisfies {sid} against {c}: {}{}",
                match &out.status {
                    SolveResult::Sat(_) => "SAT",
                    SolveResult::Unsat => "UNSAT",
                    SolveResult::Unknown(_) => "UNKNOWN",
                },
                if out.irrelevant { " (irrelevant)" } else { "" }
            );
            if out.irrelevant || !out.status.is_sat() {
                continue;
            }
            let residual_now = shift_down(&out.residual);
            // single application of s, prerequisites solved recursively
            for sub in self.rec_solve(&residual_now, depth - 1) {
                let mut steps = sub.steps;
                steps.push(PlanStep { summary: sid.clone(), count: 1 });
                plans.push(Plan { steps, inputs: sub.inputs });
                if plans.len() >= MAX_PLANS_PER_LEVEL {
                    break;
                }
            }
            // k-fold repetition for monotone counters
            if let Some(k) = repetition_expand(post, &c, self.bounds.k_max) {
                if k >= 2 {
                    let affine = affine_effects(post);
                    // the summary's own guard at every intermediate value
                    let guard_ok = (0..k).all(|i| {
                        let mut env = BTreeMap::new();
                        let mut syms = BTreeSet::new();
                        for conj in &s_pc.conjuncts {
                            conj.collect_symbols(&mut syms);
                        }
                        if syms.iter().any(|s| {
                            matches!(s.kind, SymKind::Input | SymKind::ApiReturn)
                        }) {
                            return false;
                        }
                        for s in &syms {
                            let field = FieldSig(s.signature.clone());
                            let value = match affine.get(&field) {
                                Some(delta) if s.kind == SymKind::StaticField => {
                                    Literal::Int(delta.saturating_mul(i as i64))
                                }
                                _ => default_literal(VarKind::Int),
                            };
                            env.insert(s.key(), value);
                        }
                        s_pc.conjuncts.iter().all(|conj| {
                            matches!(eval(conj, &env), Ok(Literal::Bool(true)))
                        })
                    });
                    if guard_ok {
                        plans.push(Plan {
                            steps: vec![PlanStep { summary: sid.clone(), count: k }],
                            inputs: BTreeMap::new(),
                        });
                    } else {
                        // guards unmet at boot: establish them first, then
                        // repeat, provided the summary leaves them alone
                        let mut guard_fields = BTreeSet::new();
                        for conj in &s_pc.conjuncts {
                            conj.collect_symbols(&mut guard_fields);
                        }
                        let writes_guard = guard_fields.iter().any(|g| {
                            g.kind == SymKind::StaticField
                                && post
                                    .static_assignments()
                                    .contains_key(&FieldSig(g.signature.clone()))
                        });
                        if !writes_guard {
                            for sub in self.rec_solve(s_pc, depth - 1) {
                                let mut steps = sub.steps;
                                steps.push(PlanStep { summary: sid.clone(), count: k });
                                plans.push(Plan { steps, inputs: sub.inputs });
                                if plans.len() >= MAX_PLANS_PER_LEVEL {
                                    break;
                                }
                            }
                        }
                    }
                }
            }
        }
        plans.sort();
        plans.dedup();
        plans
    }
}

/// Injects solved payloads into an event: text payloads by widget, intent
/// extras by key.
fn inject_inputs(event: &Event, inputs: &BTreeMap<String, Literal>) -> Event {
    match event {
        Event::TextInput { widget, text } => {
            let key = format!("text:{widget}");
            match inputs.get(&key) {
                Some(Literal::Str(s)) => {
                    Event::TextInput { widget: widget.clone(), text: s.clone() }
                }
                _ => Event::TextInput { widget: widget.clone(), text: text.clone() },
            }
        }
        Event::Broadcast { action, extras } => {
            let mut extras = extras.clone();
            for (key, v) in inputs {
                if let (Some(k), Literal::Str(s)) = (key.strip_prefix("extra:"), v) {
                    extras.insert(k.to_string(), s.clone());
                }
            }
            Event::Broadcast { action: action.clone(), extras }
        }
        Event::Intent { activity, action, extras } => {
            let mut extras = extras.clone();
            for (key, v) in inputs {
                if let (Some(k), Literal::Str(s)) = (key.strip_prefix("extra:"), v) {
                    extras.insert(k.to_string(), s.clone());
                }
            }
            Event::Intent { activity: activity.clone(), action: action.clone(), extras }
        }
        other => other.clone(),
    }
}

/// Turns a plan into a replayable event sequence by routing through the
/// model: entry to the first contributing summary's source, each
/// contributing event (repeated as planned), then to the target's source
/// and the target event itself. `None` when some hop has no model route.
fn assemble(
    model: &GuiModel,
    plan: &Plan,
    target_event: &Event,
    target_src: Option<&crate::gui_model::StateId>,
    penalties: &BTreeMap<SummaryId, u32>,
) -> Option<Vec<Event>> {
    let mut events: Vec<Event> = Vec::new();
    let mut cursor: Option<crate::gui_model::StateId> = None;
    for step in &plan.steps {
        let t = model.transition_of(&step.summary)?;
        if step.count > 1 && t.src != Some(t.dst.clone()) {
            // repetition requires a self-loop to stay applicable
            return None;
        }
        if let Some(src) = &t.src {
            let route = model.find_route(cursor.as_ref(), src, penalties).ok()?;
            events.extend(route);
        }
        let summary = model.summaries.get(&step.summary)?;
        let event = inject_inputs(&summary.event, &plan.inputs);
        for _ in 0..step.count {
            events.push(event.clone());
        }
        cursor = Some(t.dst.clone());
    }
    let target_src = target_src?;
    let route = model.find_route(cursor.as_ref(), target_src, penalties).ok()?;
    events.extend(route);
    events.push(inject_inputs(target_event, &plan.inputs));
    Some(events)
}

/// Algorithm: symbolic execution of the target summary yields its path
/// constraint; existing concrete summaries whose post-states satisfy it
/// are chained recursively (front-inserted) until the boot state closes
/// every obligation; each chain is routed through the model into one
/// candidate sequence. Candidates are returned shortest first, duplicates
/// removed; an empty result leaves the summary queued (and penalized by
/// the caller).
pub fn solve_summary(
    model: &mut GuiModel,
    sigma: &SummaryId,
    app: &App,
    bounds: SolveBounds,
    penalties: &BTreeMap<SummaryId, u32>,
) -> Vec<Vec<Event>> {
    let (target_event, target_src) = match model.summaries.get(sigma) {
        Some(s) => (s.event.clone(), s.source_state.clone()),
        None => return vec![],
    };
    let constraint = {
        let summary = model.summaries.get_mut(sigma).expect("checked above");
        match constraint_of_summary(summary, app) {
            Ok((_, c)) => c,
            Err(e) => {
                log::debug!("solver: {sigma} unsolvable: {e}");
                return vec![];
            }
        }
    };
    // snapshot usable concrete summaries in insertion order
    let mut ids: Vec<SummaryId> = model
        .summaries
        .values()
        .filter(|s| s.status == SummaryStatus::Concrete && s.path.is_some())
        .map(|s| s.id.clone())
        .collect();
    ids.sort_by_key(|id| model.summaries[id].insertion);
    let mut usable = Vec::new();
    for id in ids {
        let summary = model.summaries.get_mut(&id).unwrap();
        if let Ok((post, pc)) = constraint_of_summary(summary, app) {
            usable.push((id, post, pc));
        }
    }
    let ctx = Ctx { bounds, summaries: usable };
    let plans = ctx.rec_solve(&constraint, bounds.recursion_bound);
    log::debug!(
        "solver: {sigma} constraint {} -> {} plan(s)",
        constraint,
        plans.len()
    );

    let mut seen = BTreeSet::new();
    let mut sequences = Vec::new();
    for plan in &plans {
        if let Some(seq) =
            assemble(model, plan, &target_event, target_src.as_ref(), penalties)
        {
            if seen.insert(seq.clone()) {
                sequences.push(seq);
            }
        }
    }
    sequences.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sequences
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appir::CmpOp;
    use crate::symexec::StrFn;

    fn static_sym(sig: &str) -> SymExpr {
        SymExpr::Sym(Symbol::new(SymKind::StaticField, sig))
    }

    fn cmp(op: CmpOp, lhs: SymExpr, rhs: SymExpr) -> SymExpr {
        SymExpr::Cmp { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    fn pc(conjuncts: Vec<SymExpr>) -> PathConstraint {
        PathConstraint { conjuncts }
    }

    /// Exhaustive scan over the bounded domain; the independent check the
    /// decide examples were frozen against.
    fn exhaustive_int_sat(c: &PathConstraint, key: &str, bound: i64) -> Option<i64> {
        for v in -bound..=bound {
            let mut env = BTreeMap::new();
            env.insert(key.to_string(), Literal::Int(v));
            if c.conjuncts
                .iter()
                .all(|conj| matches!(eval(conj, &env), Ok(Literal::Bool(true))))
            {
                return Some(v);
            }
        }
        None
    }

    #[test]
    fn decide_ge_matches_exhaustive_scan() {
        let c = pc(vec![cmp(CmpOp::Ge, static_sym("G.x"), SymExpr::int(5))]);
        let key = Symbol::new(SymKind::StaticField, "G.x").key();
        assert_eq!(exhaustive_int_sat(&c, &key, 64), Some(5));
        match decide(&c, 64) {
            SolveResult::Sat(a) => assert_eq!(a.values[&key], Literal::Int(5)),
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn decide_contradiction_is_unsat() {
        let c = pc(vec![
            cmp(CmpOp::Ge, static_sym("G.x"), SymExpr::int(5)),
            cmp(CmpOp::Lt, static_sym("G.x"), SymExpr::int(5)),
        ]);
        assert_eq!(decide(&c, 64), SolveResult::Unsat);
    }

    #[test]
    fn decide_string_equality_copies_literal() {
        let s = SymExpr::Sym(Symbol::new(SymKind::Input, "text:tf1"));
        let c = pc(vec![SymExpr::Str {
            op: StrFn::Equals,
            args: vec![s, SymExpr::Lit(Literal::Str("magic".into()))],
        }]);
        match decide(&c, 64) {
            SolveResult::Sat(a) => {
                let key = Symbol::new(SymKind::Input, "text:tf1").key();
                assert_eq!(a.values[&key], Literal::Str("magic".into()));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn decide_string_length_generates_letters() {
        let s = SymExpr::Sym(Symbol::new(SymKind::Input, "text:tf1"));
        let c = pc(vec![cmp(
            CmpOp::Eq,
            SymExpr::Str { op: StrFn::Length, args: vec![s] },
            SymExpr::int(4),
        )]);
        match decide(&c, 64) {
            SolveResult::Sat(a) => {
                let key = Symbol::new(SymKind::Input, "text:tf1").key();
                match &a.values[&key] {
                    Literal::Str(v) => assert_eq!(v.len(), 4),
                    other => panic!("expected string, got {other:?}"),
                }
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn decide_api_return_is_unknown() {
        let api = SymExpr::Sym(Symbol::new(SymKind::ApiReturn, "net.fetch#0"));
        let c = pc(vec![cmp(CmpOp::Gt, api, SymExpr::int(0))]);
        match decide(&c, 64) {
            SolveResult::Unknown(reason) => assert!(reason.contains("unmodeled api"), "{reason}"),
            other => panic!("expected UNKNOWN, got {other:?}"),
        }
    }

    #[test]
    fn decide_enumerates_booleans() {
        let flag = SymExpr::Sym(Symbol::new(SymKind::StaticField, "G.flag"));
        let c = pc(vec![flag.clone()]);
        match decide(&c, 8) {
            SolveResult::Sat(a) => {
                let key = Symbol::new(SymKind::StaticField, "G.flag").key();
                assert_eq!(a.values[&key], Literal::Bool(true));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
        let c = pc(vec![flag.clone(), SymExpr::Not(Box::new(flag))]);
        assert_eq!(decide(&c, 8), SolveResult::Unsat);
    }

    #[test]
    fn catalog_contains_required_models() {
        let catalog = api_catalog();
        for required in [
            Api::IntentGetExtra,
            Api::StrEquals,
            Api::StrLength,
            Api::StrConcat,
            Api::UiStartActivity,
            Api::UiFinish,
            Api::SysRegisterReceiver,
            Api::UiSetHandler,
            Api::UiSetText,
        ] {
            assert!(
                catalog.iter().any(|m| m.api == required && m.modeled),
                "{required} must be modeled"
            );
        }
        assert!(catalog.iter().any(|m| m.api == Api::NetFetch && !m.modeled));
    }

    fn post_writing(field: &str, expr: SymExpr) -> SymState {
        let mut state = SymState::new();
        state.statics.insert(
            FieldSig(field.into()),
            crate::symexec::SymValue::Expr(expr),
        );
        state.written.insert(FieldSig(field.into()));
        state
    }

    #[test]
    fn satisfies_direct_write() {
        // c = [X == 1], s writes X <- 1
        let c = pc(vec![cmp(CmpOp::Eq, static_sym("G.x"), SymExpr::int(1))]);
        let post = post_writing("G.x", SymExpr::int(1));
        let out = satisfies(&post, &PathConstraint::default(), &c, 64);
        assert!(out.status.is_sat());
        assert!(out.residual.is_trivially_true());
        assert!(!out.irrelevant);
    }

    #[test]
    fn satisfies_increment_leaves_residual() {
        // c = [X >= 3], s is X <- X + 1
        let c = pc(vec![cmp(CmpOp::Ge, static_sym("G.x"), SymExpr::int(3))]);
        let post = post_writing(
            "G.x",
            SymExpr::Arith {
                op: ArithOp::Add,
                lhs: Box::new(static_sym("G.x")),
                rhs: Box::new(SymExpr::int(1)),
            },
        );
        let out = satisfies(&post, &PathConstraint::default(), &c, 64);
        assert!(out.status.is_sat());
        // residual mentions the pre-state symbol one generation older
        let syms = out.residual.collect_symbols();
        assert!(syms.iter().any(|s| s.generation == 1 && s.signature == "G.x"));
        // defaults do not satisfy it: 0 + 1 >= 3 is false -> recursion
        assert!(!decide_with_defaults(&out.residual, 64).is_sat());
    }

    #[test]
    fn satisfies_untouched_symbol_decided_at_boot_value() {
        // c mentions Y the summary never writes; boot default decides
        let c = pc(vec![cmp(CmpOp::Eq, static_sym("G.y"), SymExpr::int(0))]);
        let post = post_writing("G.x", SymExpr::int(1));
        let out = satisfies(&post, &PathConstraint::default(), &c, 64);
        assert!(out.irrelevant);
        assert!(decide_with_defaults(&out.residual, 64).is_sat());
    }

    #[test]
    fn repetition_counts_increments() {
        let post = post_writing(
            "G.x",
            SymExpr::Arith {
                op: ArithOp::Add,
                lhs: Box::new(static_sym("G.x")),
                rhs: Box::new(SymExpr::int(1)),
            },
        );
        let residual = pc(vec![cmp(CmpOp::Ge, static_sym("G.x"), SymExpr::int(3))]);
        assert_eq!(repetition_expand(&post, &residual, 16), Some(3));
        // already true at boot
        let trivial = pc(vec![cmp(CmpOp::Ge, static_sym("G.x"), SymExpr::int(0))]);
        assert_eq!(repetition_expand(&post, &trivial, 16), Some(0));
        // non-affine effect
        let nonaffine = post_writing(
            "G.x",
            SymExpr::Arith {
                op: ArithOp::Mul,
                lhs: Box::new(static_sym("G.x")),
                rhs: Box::new(SymExpr::int(2)),
            },
        );
        assert_eq!(repetition_expand(&nonaffine, &residual, 16), None);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Random small constraints over two bounded int symbols; decide
        /// must agree with exhaustive enumeration.
        fn arb_conjunct() -> BoxedStrategy<SymExpr> {
            let var = prop_oneof![Just("G.x"), Just("G.y")];
            let atom = prop_oneof![
                var.clone().prop_map(static_sym),
                (-8i64..9).prop_map(SymExpr::int),
            ];
            (
                prop_oneof![
                    Just(CmpOp::Eq),
                    Just(CmpOp::Ne),
                    Just(CmpOp::Lt),
                    Just(CmpOp::Le),
                    Just(CmpOp::Gt),
                    Just(CmpOp::Ge)
                ],
                atom.clone(),
                atom,
            )
                .prop_map(|(op, l, r)| cmp(op, l, r))
                .boxed()
        }

        proptest! {
            #[test]
            fn decide_agrees_with_enumeration(conjuncts in proptest::collection::vec(arb_conjunct(), 1..4)) {
                let c = pc(conjuncts);
                let bound = 8i64;
                let kx = Symbol::new(SymKind::StaticField, "G.x").key();
                let ky = Symbol::new(SymKind::StaticField, "G.y").key();
                let mut brute_sat = false;
                'outer: for x in -bound..=bound {
                    for y in -bound..=bound {
                        let mut env = BTreeMap::new();
                        env.insert(kx.clone(), Literal::Int(x));
                        env.insert(ky.clone(), Literal::Int(y));
                        if c.conjuncts.iter().all(|conj| matches!(eval(conj, &env), Ok(Literal::Bool(true)))) {
                            brute_sat = true;
                            break 'outer;
                        }
                    }
                }
                match decide(&c, bound) {
                    SolveResult::Sat(a) => {
                        prop_assert!(brute_sat, "decide SAT but enumeration UNSAT");
                        // every SAT assignment evaluates true
                        for conj in &c.conjuncts {
                            prop_assert_eq!(eval(conj, &a.values).unwrap(), Literal::Bool(true));
                        }
                    }
                    SolveResult::Unsat => prop_assert!(!brute_sat, "decide UNSAT but enumeration SAT"),
                    SolveResult::Unknown(r) => prop_assert!(false, "unexpected UNKNOWN: {}", r),
                }
            }
        }
    }
}
