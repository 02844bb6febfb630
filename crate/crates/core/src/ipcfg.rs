//! Per-method control flow graphs, inter-procedural CFGs, bounded path
//! enumeration, and identification of the concretely executed path from an
//! execution log.
//!
//! All operations are pure functions over immutable inputs.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::appir::{App, Block, Instr, Method, MethodSig};
use crate::runtime::ExecLog;

/// Per-method control flow graph over basic blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub method: MethodSig,
    pub blocks: Vec<Block>,
    /// Block-index pairs, sorted; successors of a block appear in
    /// ascending target order.
    pub edges: Vec<(usize, usize)>,
}

impl Cfg {
    pub fn successors(&self, block: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |(f, _)| *f == block).map(|(_, t)| *t)
    }
}

/// Standard basic-block decomposition plus edges. Leaders are index 0,
/// branch targets, and post-branch indices; `invoke`/`api` statements do
/// not end blocks.
pub fn build_cfg(method: &Method) -> Cfg {
    let blocks = if method.blocks.is_empty() {
        crate::appir::compute_blocks(&method.body)
    } else {
        method.blocks.clone()
    };
    let block_of = |pc: usize| blocks.iter().position(|b| b.start <= pc && pc < b.end).unwrap();
    let mut edges = BTreeSet::new();
    for (i, b) in blocks.iter().enumerate() {
        let last = b.end - 1;
        match &method.body[last] {
            Instr::Return { .. } => {}
            Instr::Goto { target } => {
                edges.insert((i, block_of(*target)));
            }
            Instr::If { target, .. } => {
                if b.end < method.body.len() {
                    edges.insert((i, block_of(b.end)));
                }
                edges.insert((i, block_of(*target)));
            }
            _ => {
                if b.end < method.body.len() {
                    edges.insert((i, block_of(b.end)));
                }
            }
        }
    }
    Cfg { method: method.sig.clone(), blocks, edges: edges.into_iter().collect() }
}

impl Cfg {
    /// DOT rendering of one method's block graph.
    pub fn to_dot(&self) -> String {
        let mut out = format!("digraph \"{}\" {{\n  node [shape=box];\n", self.method);
        for (i, b) in self.blocks.iter().enumerate() {
            out.push_str(&format!("  b{i} [label=\"b{i} [{}..{})\"];\n", b.start, b.end));
        }
        for (f, t) in &self.edges {
            out.push_str(&format!("  b{f} -> b{t};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Inlining context: a chain of call sites from the root handler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallCtx {
    pub method: MethodSig,
    /// Parent context index and the call-site statement, absent for root.
    pub parent: Option<(usize, (MethodSig, usize))>,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Intra,
    Call,
    Return,
}

/// Block node qualified by call-string context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpcfgNode {
    pub ctx: usize,
    pub method: MethodSig,
    pub block: usize,
}

/// Inter-procedural CFG: callee CFGs inlined at call sites up to a depth
/// bound. API calls are opaque single statements and never expanded.
#[derive(Debug, Clone)]
pub struct Ipcfg {
    pub root: MethodSig,
    pub contexts: Vec<CallCtx>,
    pub nodes: Vec<IpcfgNode>,
    pub edges: Vec<(usize, usize, EdgeKind)>,
    pub cfgs: BTreeMap<MethodSig, Cfg>,
    /// Recursion/depth cuts encountered while inlining.
    pub diagnostics: Vec<String>,
    pub call_depth_bound: usize,
}

impl Ipcfg {
    /// All statements reachable from the root, context-collapsed.
    pub fn reachable_statements(&self) -> BTreeSet<(MethodSig, usize)> {
        let mut set = BTreeSet::new();
        for ctx in &self.contexts {
            if let Some(cfg) = self.cfgs.get(&ctx.method) {
                for b in &cfg.blocks {
                    for pc in b.start..b.end {
                        set.insert((ctx.method.clone(), pc));
                    }
                }
            }
        }
        set
    }

    /// DOT rendering of the block graph for docs and debugging.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ipcfg {\n  node [shape=box];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!(
                "  n{i} [label=\"{}#{} b{}\"];\n",
                n.method, n.ctx, n.block
            ));
        }
        for (from, to, kind) in &self.edges {
            let style = match kind {
                EdgeKind::Intra => "",
                EdgeKind::Call => " [style=dashed,label=call]",
                EdgeKind::Return => " [style=dotted,label=ret]",
            };
            out.push_str(&format!("  n{from} -> n{to}{style};\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// One execution path: the root handler plus the ordered statements of
/// every frame it descends into.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Path {
    pub root: MethodSig,
    pub statements: Vec<(MethodSig, usize)>,
}

impl Path {
    /// Statement indices of the path within one method (the root by
    /// default elsewhere); used for compact labels.
    pub fn indices_of(&self, method: &MethodSig) -> Vec<usize> {
        self.statements.iter().filter(|(m, _)| m == method).map(|(_, pc)| *pc).collect()
    }

    /// Expected block-entry projection of this path, comparable with an
    /// execution log's block entries.
    pub fn expected_blocks(&self, app: &App) -> Vec<(MethodSig, usize)> {
        let mut out = Vec::new();
        for (m, pc) in &self.statements {
            if let Some(method) = app.method(m) {
                if method.is_block_start(*pc) {
                    out.push((m.clone(), method.block_of(*pc).unwrap()));
                }
            }
        }
        out
    }

    pub fn label(&self) -> String {
        let idx: Vec<String> =
            self.indices_of(&self.root).iter().map(|i| i.to_string()).collect();
        format!("{}:{{{}}}", self.root, idx.join(","))
    }
}

/// Bounds governing path enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathBounds {
    /// Max traversals of any single retreating edge per frame.
    pub loop_bound: usize,
    /// Hard cap on enumerated paths per handler.
    pub max_paths: usize,
    /// Max call-inlining depth below the root.
    pub call_depth: usize,
}

impl Default for PathBounds {
    fn default() -> Self {
        PathBounds { loop_bound: 1, max_paths: 256, call_depth: 8 }
    }
}

/// Result of path enumeration; `truncated` signals that `max_paths` was
/// reached and the listing is incomplete.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub truncated: bool,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum PathError {
    #[error("log does not match any enumerated path of `{root}`{}", if *.truncated { " (enumeration truncated)" } else { "" })]
    NoMatchingPath { root: MethodSig, truncated: bool },
    #[error("root `{0}` not found in app")]
    UnknownRoot(MethodSig),
}

/// Builds the IPCFG rooted at an event handler by inlining callee CFGs at
/// call sites up to `call_depth_bound`. Recursion beyond the bound leaves
/// the call opaque and records a diagnostic.
pub fn build_ipcfg(root: &MethodSig, app: &App, call_depth_bound: usize) -> Ipcfg {
    let mut cfgs = BTreeMap::new();
    let mut contexts = vec![CallCtx { method: root.clone(), parent: None, depth: 0 }];
    let mut diagnostics = Vec::new();
    let mut work = vec![0usize];
    while let Some(ctx_idx) = work.pop() {
        let method_sig = contexts[ctx_idx].method.clone();
        let depth = contexts[ctx_idx].depth;
        let Some(method) = app.method(&method_sig) else { continue };
        cfgs.entry(method_sig.clone()).or_insert_with(|| build_cfg(method));
        for (pc, instr) in method.body.iter().enumerate() {
            if let Instr::Invoke { method: callee, .. } = instr {
                if depth + 1 > call_depth_bound {
                    diagnostics.push(format!(
                        "call to `{callee}` at {method_sig}:{pc} left opaque: depth bound {call_depth_bound} reached"
                    ));
                    continue;
                }
                let child = CallCtx {
                    method: callee.clone(),
                    parent: Some((ctx_idx, (method_sig.clone(), pc))),
                    depth: depth + 1,
                };
                contexts.push(child);
                work.push(contexts.len() - 1);
            }
        }
    }

    // block nodes per context, intra edges per cfg, call/return edges at
    // call sites
    let mut nodes = Vec::new();
    let mut node_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (ci, ctx) in contexts.iter().enumerate() {
        if let Some(cfg) = cfgs.get(&ctx.method) {
            for b in 0..cfg.blocks.len() {
                node_index.insert((ci, b), nodes.len());
                nodes.push(IpcfgNode { ctx: ci, method: ctx.method.clone(), block: b });
            }
        }
    }
    let mut edges = Vec::new();
    for (ci, ctx) in contexts.iter().enumerate() {
        let Some(cfg) = cfgs.get(&ctx.method) else { continue };
        for (f, t) in &cfg.edges {
            edges.push((node_index[&(ci, *f)], node_index[&(ci, *t)], EdgeKind::Intra));
        }
        if let Some((parent_ctx, (pm, pc))) = &ctx.parent {
            let parent_cfg = &cfgs[pm];
            let call_block =
                parent_cfg.blocks.iter().position(|b| b.start <= *pc && *pc < b.end).unwrap();
            let from = node_index[&(*parent_ctx, call_block)];
            edges.push((from, node_index[&(ci, 0)], EdgeKind::Call));
            for (bi, b) in cfg.blocks.iter().enumerate() {
                if matches!(
                    app.method(&ctx.method).unwrap().body[b.end - 1],
                    Instr::Return { .. }
                ) {
                    edges.push((node_index[&(ci, bi)], from, EdgeKind::Return));
                }
            }
        }
    }

    Ipcfg {
        root: root.clone(),
        contexts,
        nodes,
        edges,
        cfgs,
        diagnostics,
        call_depth_bound,
    }
}

struct Enumerator<'a> {
    app: &'a App,
    g: &'a Ipcfg,
    bounds: PathBounds,
    paths: Vec<Path>,
    truncated: bool,
}

#[derive(Clone)]
struct Frame {
    method: MethodSig,
    pc: usize,
    /// Retreating-edge traversal counts within this frame.
    back_counts: BTreeMap<(usize, usize), usize>,
}

impl<'a> Enumerator<'a> {
    fn run(&mut self) {
        let root_frame = Frame {
            method: self.g.root.clone(),
            pc: 0,
            back_counts: BTreeMap::new(),
        };
        let mut statements = Vec::new();
        self.walk(vec![root_frame], &mut statements);
    }

    fn walk(&mut self, mut frames: Vec<Frame>, statements: &mut Vec<(MethodSig, usize)>) {
        if self.truncated {
            return;
        }
        let depth_mark = statements.len();
        loop {
            let frame = frames.last_mut().expect("walk with empty frame stack");
            let method = match self.app.method(&frame.method) {
                Some(m) => m,
                None => break,
            };
            let pc = frame.pc;
            statements.push((frame.method.clone(), pc));
            match &method.body[pc] {
                Instr::Return { .. } => {
                    frames.pop();
                    match frames.last_mut() {
                        None => {
                            if self.paths.len() >= self.bounds.max_paths {
                                self.truncated = true;
                            } else {
                                self.paths.push(Path {
                                    root: self.g.root.clone(),
                                    statements: statements.clone(),
                                });
                            }
                            break;
                        }
                        Some(caller) => caller.pc += 1,
                    }
                }
                Instr::Goto { target } => {
                    let target = *target;
                    if !self.take_edge(frames.last_mut().unwrap(), pc, target) {
                        break;
                    }
                }
                Instr::If { target, .. } => {
                    let target = *target;
                    let fallthrough = pc + 1;
                    // visit successors in ascending block order
                    let bt = method.block_of(target).unwrap();
                    let bf = method.block_of(fallthrough).unwrap();
                    let succs =
                        if bf <= bt { [fallthrough, target] } else { [target, fallthrough] };
                    for succ in succs {
                        let mut branch_frames = frames.clone();
                        if self.take_edge(branch_frames.last_mut().unwrap(), pc, succ) {
                            let mut branch_statements = statements.clone();
                            self.walk(branch_frames, &mut branch_statements);
                        }
                        if self.truncated {
                            break;
                        }
                    }
                    break;
                }
                Instr::Invoke { method: callee, .. } => {
                    if frames.len() <= self.bounds.call_depth
                        && self.app.method(callee).is_some()
                    {
                        frames.push(Frame {
                            method: callee.clone(),
                            pc: 0,
                            back_counts: BTreeMap::new(),
                        });
                    } else {
                        frames.last_mut().unwrap().pc += 1;
                    }
                }
                _ => frames.last_mut().unwrap().pc += 1,
            }
        }
        statements.truncate(depth_mark);
    }

    /// Moves `frame` to `target`, honoring the loop bound on retreating
    /// edges. Returns false when the bound forbids the move.
    fn take_edge(&self, frame: &mut Frame, from_pc: usize, target: usize) -> bool {
        let method = self.app.method(&frame.method).unwrap();
        let from_block = method.block_of(from_pc).unwrap();
        let to_block = method.block_of(target).unwrap();
        if method.blocks[to_block].start <= method.blocks[from_block].start {
            let count = frame.back_counts.entry((from_block, to_block)).or_insert(0);
            if *count >= self.bounds.loop_bound {
                return false;
            }
            *count += 1;
        }
        frame.pc = target;
        true
    }
}

/// Enumerates all root-entry to root-return paths with every retreating
/// edge taken at most `loop_bound` times per frame, in DFS order with
/// successors visited in ascending block index. Truncation at `max_paths`
/// is flagged, not an error.
pub fn enumerate_paths(g: &Ipcfg, app: &App, bounds: PathBounds) -> PathSet {
    if app.method(&g.root).is_none() {
        return PathSet { paths: vec![], truncated: false };
    }
    let mut e = Enumerator { app, g, bounds, paths: Vec::new(), truncated: false };
    e.run();
    PathSet { paths: e.paths, truncated: e.truncated }
}

/// Identifies the unique enumerated path whose block-entry projection
/// equals the log's block-entry sequence.
pub fn executed_path(
    log: &ExecLog,
    g: &Ipcfg,
    app: &App,
    bounds: PathBounds,
) -> Result<Path, PathError> {
    if app.method(&g.root).is_none() {
        return Err(PathError::UnknownRoot(g.root.clone()));
    }
    let observed = log.block_entries();
    let set = enumerate_paths(g, app, bounds);
    for path in set.paths {
        if path.expected_blocks(app) == observed {
            return Ok(path);
        }
    }
    Err(PathError::NoMatchingPath { root: g.root.clone(), truncated: set.truncated })
}

/// The sibling paths of a concretely executed one: every enumerated path
/// except the executed path itself.
pub fn sibling_paths(executed: &Path, g: &Ipcfg, app: &App, bounds: PathBounds) -> Vec<Path> {
    enumerate_paths(g, app, bounds)
        .paths
        .into_iter()
        .filter(|p| p != executed)
        .collect()
}

/// One symbolic event summary per enumerated path other than the
/// concretely executed one, each carrying the concrete summary's event
/// and source state. Summaries without a path have no siblings.
pub fn get_symbolic_paths(
    summary: &crate::gui_model::EventSummary,
    g: &Ipcfg,
    app: &App,
    bounds: PathBounds,
) -> Vec<crate::gui_model::EventSummary> {
    let Some(executed) = &summary.path else { return vec![] };
    sibling_paths(executed, g, app, bounds)
        .into_iter()
        .map(|path| {
            crate::gui_model::EventSummary::symbolic(
                summary.event.clone(),
                path,
                summary.source_state.clone(),
            )
        })
        .collect()
}
