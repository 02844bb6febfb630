//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! The oracles here are deliberately independent of the engine's own
//! machinery: the brute-force explorer drives only the concrete runtime,
//! and the constraint enumerator evaluates expressions with its own
//! recursive evaluator.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use apex_core::appir::{entry_events, parse_app, App, ArithOp, CmpOp, Literal, MethodSig};
use apex_core::explorer::{
    baseline_random, coverage, explore, Budget, Candidate, CandidateKind, LEntry, LPriority,
    QPriority, RunReport, SeqQueue, SummaryQueue, Target,
};
use apex_core::gui_model::SummaryId;
use apex_core::runtime::{extract_events, Event, RuntimeState};
use apex_core::symexec::{
    sym_execute, PathConstraint, StrFn, SymExpr, SymKind, SymState, Symbol,
};
use apex_core::solver::{decide, SolveResult};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CORPUS: [&str; 7] = [
    "two_branch",
    "counter_gate",
    "lifecycle",
    "receiver",
    "straightline",
    "dragon",
    "vault",
];

/// Corpus apps with at most four reachable GUI states (criterion 3's
/// scope). `dragon` and `vault` exceed four states; criterion 3 asserts
/// that too.
const SMALL_STATE_APPS: [&str; 5] =
    ["two_branch", "counter_gate", "lifecycle", "receiver", "straightline"];

/// Apps whose interesting code sits behind solver-only guards.
const GUARDED_APPS: [&str; 2] = ["dragon", "vault"];

const SEED: u64 = 42;

fn corpus_path(name: &str) -> String {
    format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn corpus_app(name: &str) -> App {
    let path = corpus_path(&format!("{name}.mapp"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_app(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn dragon_targets() -> Vec<Target> {
    std::fs::read_to_string(corpus_path("dragon.targets"))
        .unwrap()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse().unwrap())
        .collect()
}

/// Budget used throughout: no wall-clock limit, termination must come
/// from queue exhaustion and the retirement rule.
fn budget() -> Budget {
    Budget { max_events: 1_000_000, max_seconds: None, ..Budget::default() }
}

// ---------------------------------------------------------------------------
// 1. Two-branch model precision
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_two_branch_precision() {
    let started = Instant::now();
    let app = corpus_app("two_branch");
    let out = explore(&app, &[], budget(), SEED);

    let initial = out.model.initial_states().next().expect("initial state").id.clone();
    let on_click = MethodSig("A1.onClick".into());
    let mut labels: BTreeMap<Vec<usize>, Event> = BTreeMap::new();
    for t in out.model.transitions_from(Some(&initial)) {
        let summary = &out.model.summaries[&t.summary];
        if let Some(path) = &summary.path {
            if path.root == on_click {
                labels.insert(path.indices_of(&on_click), summary.event.clone());
            }
        }
    }
    assert_eq!(labels.len(), 2, "two transitions with distinct paths, got {labels:?}");
    let events: BTreeSet<&Event> = labels.values().collect();
    assert_eq!(events.len(), 1, "both transitions carry the same event");
    let paths: BTreeSet<Vec<usize>> = labels.keys().cloned().collect();
    assert_eq!(
        paths,
        BTreeSet::from([vec![0, 1, 2, 3, 4, 5, 6, 11], vec![0, 1, 7, 8, 9, 10, 11]]),
        "exact statement-index sets"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 PASS: same-event transitions carry paths {{0,1,2,3,4,5,6,11}} and \
         {{0,1,7,8,9,10,11}} ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// 2. Targeted-input benchmark
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_dragon_targets() {
    let started = Instant::now();
    let app = corpus_app("dragon");
    let targets = dragon_targets();
    assert_eq!(targets.len(), 5);
    let out = explore(&app, &targets, budget(), SEED);
    assert_eq!(
        out.coverage.targets_hit, 5,
        "all five targets: {:?}",
        out.coverage.target_details
    );
    let max_len = out
        .coverage
        .target_details
        .iter()
        .filter_map(|d| d.witness_len)
        .max()
        .unwrap();
    assert!(max_len <= 6, "max witness sequence length {max_len} > 6");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 2 PASS: dragon targets 5/5 (100%), max witness length {max_len} \
         ({elapsed:?})"
    );
}

// ---------------------------------------------------------------------------
// 3. Brute-force oracle equivalence
// ---------------------------------------------------------------------------

/// A transition observation comparable across the oracle and the model:
/// source canonical-layout id (None before launch), the event line, the
/// handler's block-entry projection, destination canonical-layout id.
type TransKey = (Option<String>, String, Option<(String, Vec<(String, usize)>)>, String);

/// Exhaustive enumeration of all event sequences up to `max_len`, driven
/// only by the concrete runtime. Records one observation per applied
/// event along every sequence.
fn oracle_transitions(app: &App, max_len: usize, seed: u64) -> BTreeSet<TransKey> {
    let mut seen = BTreeSet::new();
    fn recurse(
        app: &App,
        state: &RuntimeState,
        src: Option<String>,
        depth: usize,
        max_len: usize,
        seen: &mut BTreeSet<TransKey>,
    ) {
        if depth >= max_len {
            return;
        }
        let events = if src.is_none() {
            entry_events(app)
        } else {
            extract_events(&state.layout_snapshot(), state)
        };
        for event in events {
            let mut next = state.clone();
            let outcome = match next.apply_event(app, &event) {
                Ok(o) => o,
                Err(_) => continue,
            };
            let path_obs = outcome.handlers.first().map(|root| {
                let blocks = outcome
                    .log
                    .first_root_segment()
                    .block_entries()
                    .into_iter()
                    .map(|(m, b)| (m.0, b))
                    .collect();
                (root.0.clone(), blocks)
            });
            let dst = outcome.layout.layout_id();
            seen.insert((src.clone(), event.to_line(), path_obs, dst.clone()));
            recurse(app, &next, Some(dst), depth + 1, max_len, seen);
        }
    }
    let prelaunch = RuntimeState::prelaunch(seed);
    recurse(app, &prelaunch, None, 0, max_len, &mut seen);
    seen
}

/// The model's transition set in the same observation format.
fn model_transitions(app: &App, model: &apex_core::gui_model::GuiModel) -> BTreeSet<TransKey> {
    let mut set = BTreeSet::new();
    for t in &model.transitions {
        let summary = &model.summaries[&t.summary];
        let path_obs = summary.path.as_ref().map(|p| {
            let blocks = p
                .expected_blocks(app)
                .into_iter()
                .map(|(m, b)| (m.0, b))
                .collect::<Vec<_>>();
            (p.root.0.clone(), blocks)
        });
        let src = t.src.as_ref().map(|s| s.0.clone());
        set.insert((src, summary.event.to_line(), path_obs, t.dst.0.clone()));
    }
    set
}

#[test]
fn criterion_3_oracle_equivalence() {
    for name in SMALL_STATE_APPS {
        let app = corpus_app(name);
        let out = explore(&app, &[], budget(), SEED);
        assert!(
            out.model.states.len() <= 4,
            "{name}: expected <= 4 states, found {}",
            out.model.states.len()
        );
        let oracle = oracle_transitions(&app, 4, SEED);
        let model = model_transitions(&app, &out.model);
        let missing: Vec<_> = oracle.difference(&model).collect();
        let extra: Vec<_> = model.difference(&oracle).collect();
        assert!(
            missing.is_empty() && extra.is_empty(),
            "{name}: oracle/model mismatch\n missing from model: {missing:#?}\n extra in model: {extra:#?}"
        );
    }
    // the exempt apps really do exceed four states
    for name in GUARDED_APPS {
        let app = corpus_app(name);
        let targets =
            if name == "dragon" { dragon_targets() } else { vec![] };
        let out = explore(&app, &targets, budget(), SEED);
        assert!(out.model.states.len() > 4, "{name} has {} states", out.model.states.len());
    }
    println!(
        "ACCEPTANCE 3 PASS: exhaustive length-4 enumeration matches the explorer's model \
         exactly on {SMALL_STATE_APPS:?}"
    );
}

// ---------------------------------------------------------------------------
// 4. Concolic soundness
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_concolic_soundness() {
    let mut checked_summaries = 0usize;
    for name in CORPUS {
        let app = corpus_app(name);
        let targets = if name == "dragon" { dragon_targets() } else { vec![] };
        let out = explore(&app, &targets, budget(), SEED);
        for record in out.history.records.iter().filter(|r| r.outcome == "ok") {
            let summary_id = record.summary.as_ref().expect("ok records carry a summary");
            let summary = &out.model.summaries[summary_id];

            // replay the witness: the executed path must reproduce
            let mut state = RuntimeState::prelaunch(SEED);
            let mut pre = None;
            let mut last = None;
            let total = record.sequence.len();
            for (i, event) in record.sequence.iter().enumerate() {
                if i + 1 == total {
                    pre = Some(state.clone());
                }
                last = Some(
                    state
                        .apply_event(&app, event)
                        .unwrap_or_else(|e| panic!("{name}: replay failed at {i}: {e}")),
                );
            }
            let outcome = last.unwrap();
            let pre = pre.map(|s| s.statics.clone()).unwrap_or_default();
            assert_eq!(
                Some(outcome.layout.layout_id()),
                record.layout,
                "{name}: replay reached a different layout"
            );
            let replayed_blocks = outcome.log.first_root_segment().block_entries();
            let recorded_blocks = summary
                .path
                .as_ref()
                .map(|p| p.expected_blocks(&app))
                .unwrap_or_default();
            assert_eq!(
                replayed_blocks, recorded_blocks,
                "{name}: replay executed a different path for {summary_id}"
            );

            // the symbolic post-state, evaluated under the concrete
            // pre-state, must equal the concrete post-heap
            let final_event = record.sequence.last().unwrap();
            if let Some(path) = &summary.path {
                let (post, constraint) =
                    sym_execute(SymState::new(), path, &app, Some(final_event))
                        .unwrap_or_else(|e| panic!("{name}: symexec failed: {e}"));
                let env = concrete_env(&pre, final_event, &post, &constraint);
                for conjunct in &constraint.conjuncts {
                    let v = apex_core::symexec::eval(conjunct, &env).unwrap_or_else(|e| {
                        panic!("{name}: constraint eval failed: {e} in {conjunct}")
                    });
                    assert_eq!(
                        v,
                        Literal::Bool(true),
                        "{name}: path constraint {conjunct} false under pre-state"
                    );
                }
                for (field, expr) in post.static_assignments() {
                    let predicted =
                        apex_core::symexec::eval(&expr, &env).unwrap_or_else(|e| {
                            panic!("{name}: post-state eval failed: {e} in {expr}")
                        });
                    let actual = outcome_heap_value(&state, &field);
                    assert_eq!(
                        Some(predicted),
                        actual,
                        "{name}: post-state of {field} diverges for {summary_id}"
                    );
                }
                checked_summaries += 1;
            }
        }
    }
    println!(
        "ACCEPTANCE 4 PASS: {checked_summaries} concrete summaries replayed; constraints \
         true and symbolic post-states equal concrete heaps"
    );
}

/// Binds every symbol the expressions mention to its concrete pre-state
/// value (statics at boot defaults when unwritten) or event payload.
fn concrete_env(
    pre_statics: &BTreeMap<apex_core::appir::FieldSig, apex_core::runtime::Value>,
    event: &Event,
    post: &SymState,
    constraint: &PathConstraint,
) -> BTreeMap<String, Literal> {
    use apex_core::runtime::Value;
    let mut symbols = BTreeSet::new();
    for conjunct in &constraint.conjuncts {
        conjunct.collect_symbols(&mut symbols);
    }
    for expr in post.static_assignments().values() {
        expr.collect_symbols(&mut symbols);
    }
    let mut env = BTreeMap::new();
    for sym in symbols {
        let value = match sym.kind {
            SymKind::StaticField => {
                match pre_statics.get(&apex_core::appir::FieldSig(sym.signature.clone())) {
                    Some(Value::Int(v)) => Literal::Int(*v),
                    Some(Value::Str(s)) => Literal::Str(s.clone()),
                    Some(Value::Bool(b)) => Literal::Bool(*b),
                    Some(Value::Obj(_)) => panic!("object-valued static in corpus"),
                    None => Literal::Int(0),
                }
            }
            SymKind::Input => match event {
                Event::TextInput { text, .. } if sym.signature.starts_with("text:") => {
                    Literal::Str(text.clone())
                }
                Event::Broadcast { extras, .. } | Event::Intent { extras, .. } => {
                    let key = sym.signature.strip_prefix("extra:").unwrap_or_default();
                    Literal::Str(extras.get(key).cloned().unwrap_or_default())
                }
                other => panic!("input symbol {sym:?} under event {other:?}"),
            },
            SymKind::InstanceField | SymKind::ApiReturn => {
                panic!("corpus paths must not depend on {sym:?}")
            }
        };
        env.insert(sym.key(), value);
    }
    env
}

fn outcome_heap_value(
    state: &RuntimeState,
    field: &apex_core::appir::FieldSig,
) -> Option<Literal> {
    use apex_core::runtime::Value;
    match state.statics.get(field) {
        Some(Value::Int(v)) => Some(Literal::Int(*v)),
        Some(Value::Str(s)) => Some(Literal::Str(s.clone())),
        Some(Value::Bool(b)) => Some(Literal::Bool(*b)),
        Some(Value::Obj(_)) => None,
        None => Some(Literal::Int(0)),
    }
}

// ---------------------------------------------------------------------------
// 5. Guided >= random
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_guided_beats_random() {
    for name in CORPUS {
        let app = corpus_app(name);
        let targets = if name == "dragon" { dragon_targets() } else { vec![] };
        for seed in 1..=5u64 {
            let guided = explore(&app, &targets, budget(), seed);
            let (random, _) = baseline_random(&app, guided.applied_events, seed, &targets);
            assert!(
                guided.coverage.covered >= random.covered,
                "{name} seed {seed}: guided {} < random {} at {} events",
                guided.coverage.covered,
                random.covered,
                guided.applied_events
            );
            if GUARDED_APPS.contains(&name) {
                let gap = (guided.coverage.covered as f64 - random.covered as f64)
                    / guided.coverage.total as f64;
                assert!(
                    gap >= 0.10,
                    "{name} seed {seed}: gap {:.1}pp < 10pp (guided {}, random {}, total {})",
                    gap * 100.0,
                    guided.coverage.covered,
                    random.covered,
                    guided.coverage.total
                );
            }
        }
    }
    println!(
        "ACCEPTANCE 5 PASS: guided coverage >= random on all corpus apps (seeds 1-5); \
         >= 10pp ahead on {GUARDED_APPS:?}"
    );
}

// ---------------------------------------------------------------------------
// 6. Solver correctness on random constraints
// ---------------------------------------------------------------------------

/// Independent evaluator for the enumeration oracle; deliberately not
/// `symexec::eval`.
fn oracle_eval(e: &SymExpr, env: &BTreeMap<String, Literal>) -> Option<Literal> {
    match e {
        SymExpr::Lit(l) => Some(l.clone()),
        SymExpr::Sym(s) => env.get(&s.key()).cloned(),
        SymExpr::Arith { op, lhs, rhs } => {
            let (Literal::Int(a), Literal::Int(b)) =
                (oracle_eval(lhs, env)?, oracle_eval(rhs, env)?)
            else {
                return None;
            };
            Some(Literal::Int(match op {
                ArithOp::Add => a.wrapping_add(b),
                ArithOp::Sub => a.wrapping_sub(b),
                ArithOp::Mul => a.wrapping_mul(b),
                ArithOp::Div => {
                    if b == 0 {
                        return None;
                    }
                    a.wrapping_div(b)
                }
            }))
        }
        SymExpr::Cmp { op, lhs, rhs } => {
            let a = oracle_eval(lhs, env)?;
            let b = oracle_eval(rhs, env)?;
            let result = match (op, &a, &b) {
                (CmpOp::Eq, _, _) => a == b,
                (CmpOp::Ne, _, _) => a != b,
                (CmpOp::Lt, Literal::Int(x), Literal::Int(y)) => x < y,
                (CmpOp::Le, Literal::Int(x), Literal::Int(y)) => x <= y,
                (CmpOp::Gt, Literal::Int(x), Literal::Int(y)) => x > y,
                (CmpOp::Ge, Literal::Int(x), Literal::Int(y)) => x >= y,
                _ => return None,
            };
            Some(Literal::Bool(result))
        }
        SymExpr::Str { op, args } => {
            let vals: Option<Vec<Literal>> = args.iter().map(|a| oracle_eval(a, env)).collect();
            let vals = vals?;
            match (op, &vals[..]) {
                (StrFn::Equals, [Literal::Str(a), Literal::Str(b)]) => {
                    Some(Literal::Bool(a == b))
                }
                (StrFn::Length, [Literal::Str(a)]) => Some(Literal::Int(a.len() as i64)),
                (StrFn::Concat, [Literal::Str(a), Literal::Str(b)]) => {
                    Some(Literal::Str(format!("{a}{b}")))
                }
                _ => None,
            }
        }
        SymExpr::Not(inner) => match oracle_eval(inner, env)? {
            Literal::Bool(b) => Some(Literal::Bool(!b)),
            _ => None,
        },
    }
}

/// The string domain the oracle enumerates: the same derivation rules the
/// solver documents (constraint literals, empty, single letters, letter
/// runs for small ints, literal+letter, pairwise concatenations).
fn oracle_string_domain(conjuncts: &[SymExpr]) -> Vec<String> {
    let mut lits = BTreeSet::new();
    let mut ints = BTreeSet::new();
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
            SymExpr::Str { args, .. } => args.iter().for_each(|a| scan(a, lits, ints)),
            SymExpr::Not(i) => scan(i, lits, ints),
        }
    }
    conjuncts.iter().for_each(|c| scan(c, &mut lits, &mut ints));
    let mut out: BTreeSet<String> = BTreeSet::new();
    out.insert(String::new());
    out.insert("a".into());
    out.insert("b".into());
    for k in ints {
        if (0..=16).contains(&k) {
            out.insert("a".repeat(k as usize));
        }
    }
    for l in &lits {
        out.insert(l.clone());
        out.insert(format!("{l}a"));
        for r in &lits {
            if l.len() + r.len() <= 32 {
                out.insert(format!("{l}{r}"));
            }
        }
    }
    out.into_iter().collect()
}

#[test]
fn criterion_6_solver_vs_enumeration() {
    let bound = 8i64;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let int_x = Symbol::new(SymKind::StaticField, "G.x");
    let int_y = Symbol::new(SymKind::StaticField, "G.y");
    let bool_b = Symbol::new(SymKind::StaticField, "G.flag");
    let str_s = Symbol::new(SymKind::Input, "text:tf");
    let string_pool = ["magic", "ab", "a", ""];

    let mut checked = 0;
    let mut sat_count = 0;
    while checked < 1000 {
        // random conjunction over int/bool/string atoms
        let n = rng.random_range(1..=3usize);
        let mut conjuncts = Vec::new();
        for _ in 0..n {
            let atom = match rng.random_range(0..6u8) {
                0..=2 => {
                    let ops =
                        [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
                    let op = ops[rng.random_range(0..ops.len())];
                    let side = |rng: &mut ChaCha8Rng| -> SymExpr {
                        match rng.random_range(0..3u8) {
                            0 => SymExpr::Sym(int_x.clone()),
                            1 => SymExpr::Sym(int_y.clone()),
                            _ => SymExpr::int(rng.random_range(-8..9)),
                        }
                    };
                    SymExpr::Cmp {
                        op,
                        lhs: Box::new(side(&mut rng)),
                        rhs: Box::new(side(&mut rng)),
                    }
                }
                3 => {
                    let inner = SymExpr::Sym(bool_b.clone());
                    if rng.random_bool(0.5) {
                        SymExpr::Not(Box::new(inner))
                    } else {
                        inner
                    }
                }
                4 => {
                    let lit = string_pool[rng.random_range(0..string_pool.len())];
                    let eq = SymExpr::Str {
                        op: StrFn::Equals,
                        args: vec![
                            SymExpr::Sym(str_s.clone()),
                            SymExpr::Lit(Literal::Str(lit.into())),
                        ],
                    };
                    if rng.random_bool(0.5) {
                        SymExpr::Not(Box::new(eq))
                    } else {
                        eq
                    }
                }
                _ => SymExpr::Cmp {
                    op: if rng.random_bool(0.5) { CmpOp::Eq } else { CmpOp::Le },
                    lhs: Box::new(SymExpr::Str {
                        op: StrFn::Length,
                        args: vec![SymExpr::Sym(str_s.clone())],
                    }),
                    rhs: Box::new(SymExpr::int(rng.random_range(0..6))),
                },
            };
            conjuncts.push(atom);
        }
        let constraint = PathConstraint { conjuncts: conjuncts.clone() };

        // exhaustive enumeration with the independent evaluator
        let strings = oracle_string_domain(&conjuncts);
        let mut brute_sat = false;
        'search: for x in -bound..=bound {
            for y in -bound..=bound {
                for flag in [false, true] {
                    for s in &strings {
                        let mut env = BTreeMap::new();
                        env.insert(int_x.key(), Literal::Int(x));
                        env.insert(int_y.key(), Literal::Int(y));
                        env.insert(bool_b.key(), Literal::Bool(flag));
                        env.insert(str_s.key(), Literal::Str(s.clone()));
                        if conjuncts
                            .iter()
                            .all(|c| oracle_eval(c, &env) == Some(Literal::Bool(true)))
                        {
                            brute_sat = true;
                            break 'search;
                        }
                    }
                }
            }
        }

        match decide(&constraint, bound) {
            SolveResult::Sat(assignment) => {
                assert!(brute_sat, "decide SAT, enumeration UNSAT for {constraint}");
                // every SAT assignment evaluates true under the
                // independent evaluator; unmentioned symbols default
                let mut env = assignment.values.clone();
                env.entry(int_x.key()).or_insert(Literal::Int(0));
                env.entry(int_y.key()).or_insert(Literal::Int(0));
                env.entry(bool_b.key()).or_insert(Literal::Bool(false));
                env.entry(str_s.key()).or_insert(Literal::Str(String::new()));
                for c in &conjuncts {
                    assert_eq!(
                        oracle_eval(c, &env),
                        Some(Literal::Bool(true)),
                        "assignment does not satisfy {c} in {constraint}"
                    );
                }
                sat_count += 1;
            }
            SolveResult::Unsat => {
                assert!(!brute_sat, "decide UNSAT, enumeration SAT for {constraint}");
            }
            SolveResult::Unknown(reason) => {
                panic!("unexpected UNKNOWN ({reason}) for {constraint}")
            }
        }
        checked += 1;
    }
    println!(
        "ACCEPTANCE 6 PASS: decide agreed with exhaustive enumeration on {checked} random \
         constraints ({sat_count} SAT)"
    );
}

// ---------------------------------------------------------------------------
// 7. Priority-rule conformance
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_priority_rules() {
    // Q rules: table of (candidate a, candidate b, expected-first)
    let partial = |src: &str| CandidateKind::Partial {
        source: apex_core::gui_model::StateId(src.into()),
    };
    let mk = |kind: CandidateKind, tag: &str| Candidate {
        events: vec![Event::Tap { widget: apex_core::appir::WidgetId(tag.into()) }],
        kind,
        retries: 0,
    };
    struct QCase {
        name: &'static str,
        a: (Candidate, QPriority),
        b: (Candidate, QPriority),
        expect_first: &'static str,
    }
    let q_cases = [
        QCase {
            name: "partial precedes complete",
            a: (
                mk(CandidateKind::Complete { origin: None }, "complete"),
                QPriority::new(false, 3, true, 0),
            ),
            b: (mk(partial("s0"), "partial"), QPriority::new(true, 0, false, 1)),
            expect_first: "partial",
        },
        QCase {
            name: "more statically reachable targets win",
            a: (mk(partial("s0"), "two"), QPriority::new(true, 2, false, 0)),
            b: (mk(partial("s0"), "zero"), QPriority::new(true, 0, true, 1)),
            expect_first: "two",
        },
        QCase {
            name: "GUI-transition code wins at equal targets",
            a: (mk(partial("s0"), "plain"), QPriority::new(true, 1, false, 0)),
            b: (mk(partial("s0"), "transition"), QPriority::new(true, 1, true, 1)),
            expect_first: "transition",
        },
        QCase {
            name: "FIFO on full ties",
            a: (mk(partial("s0"), "first"), QPriority::new(true, 1, true, 0)),
            b: (mk(partial("s0"), "second"), QPriority::new(true, 1, true, 1)),
            expect_first: "first",
        },
    ];
    for case in q_cases {
        let mut q = SeqQueue::default();
        q.push(case.a.0.clone(), case.a.1);
        q.push(case.b.0.clone(), case.b.1);
        let first = q.pop().unwrap();
        let tag = match &first.events[0] {
            Event::Tap { widget } => widget.0.clone(),
            _ => unreachable!(),
        };
        assert_eq!(tag, case.expect_first, "Q rule: {}", case.name);
    }

    // L rules
    struct LCase {
        name: &'static str,
        a: (&'static str, LPriority),
        b: (&'static str, LPriority),
        expect_first: &'static str,
    }
    let l_cases = [
        LCase {
            name: "targets on path dominate",
            a: ("with-target", LPriority::new(1, false, 0, 0)),
            b: ("busy-writer", LPriority::new(0, true, 5, 1)),
            expect_first: "with-target",
        },
        LCase {
            name: "transition API precedes write count",
            a: ("start-activity", LPriority::new(0, true, 0, 0)),
            b: ("three-writes", LPriority::new(0, false, 3, 1)),
            expect_first: "start-activity",
        },
        LCase {
            name: "more sput/iput wins",
            a: ("two-writes", LPriority::new(0, false, 2, 0)),
            b: ("one-write", LPriority::new(0, false, 1, 1)),
            expect_first: "two-writes",
        },
        LCase {
            name: "FIFO on full ties",
            a: ("earlier", LPriority::new(0, false, 1, 0)),
            b: ("later", LPriority::new(0, false, 1, 1)),
            expect_first: "earlier",
        },
    ];
    for case in l_cases {
        let mut l = SummaryQueue::default();
        l.push(LEntry {
            summary: SummaryId(case.a.0.into()),
            priority: case.a.1,
            penalty_until: 0,
        });
        l.push(LEntry {
            summary: SummaryId(case.b.0.into()),
            priority: case.b.1,
            penalty_until: 0,
        });
        let first = l.pop_eligible(1).unwrap();
        assert_eq!(first.summary.0, case.expect_first, "L rule: {}", case.name);
    }

    // penalty skip window: the penalized top entry is ineligible until
    // its window elapses, then immediately retakes the top spot
    let mut l = SummaryQueue::default();
    l.push(LEntry {
        summary: SummaryId("hot".into()),
        priority: LPriority::new(3, true, 3, 0),
        penalty_until: 4, // penalized at iteration 1, window 3
    });
    l.push(LEntry {
        summary: SummaryId("cold".into()),
        priority: LPriority::new(0, false, 0, 1),
        penalty_until: 0,
    });
    for iteration in 1..=3u64 {
        let picked = l.pop_eligible(iteration).unwrap();
        assert_eq!(picked.summary.0, "cold", "iteration {iteration} must skip the hot entry");
        l.push(picked);
    }
    assert_eq!(l.pop_eligible(4).unwrap().summary.0, "hot");

    println!("ACCEPTANCE 7 PASS: Q and L dequeue orders match every prioritization rule");
}

// ---------------------------------------------------------------------------
// 8. Determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_determinism() {
    for name in CORPUS {
        let app = corpus_app(name);
        let targets = if name == "dragon" { dragon_targets() } else { vec![] };
        let a = explore(&app, &targets, budget(), SEED);
        let b = explore(&app, &targets, budget(), SEED);
        let model_a = a.model.to_json();
        let model_b = b.model.to_json();
        assert_eq!(model_a, model_b, "{name}: model.json differs between runs");
        let report_a = RunReport::from_outcome(&a, name, SEED, budget(), "explore").to_json();
        let report_b = RunReport::from_outcome(&b, name, SEED, budget(), "explore").to_json();
        assert_eq!(report_a, report_b, "{name}: report.json differs between runs");
    }
    println!(
        "ACCEPTANCE 8 PASS: byte-identical model.json and report.json across repeated runs \
         on the full corpus"
    );
}

// ---------------------------------------------------------------------------
// 9. Termination
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_termination() {
    for name in CORPUS {
        let app = corpus_app(name);
        let targets = if name == "dragon" { dragon_targets() } else { vec![] };
        let started = Instant::now();
        let out = explore(&app, &targets, budget(), SEED);
        let elapsed = started.elapsed();
        assert!(
            elapsed.as_secs() < 120,
            "{name}: exploration took {elapsed:?} (must halt well under the budget)"
        );
        // it halted because the queues drained, not because of a budget
        assert!(out.applied_events < budget().max_events);
        // prefix-monotonicity of coverage over the history while we're here
        let report = coverage(&out.history, &app, &targets);
        assert_eq!(report.covered, out.coverage.covered);
    }
    println!("ACCEPTANCE 9 PASS: every corpus app halts by queue exhaustion in well under 120 s");
}
