//! Concolic event-sequence generation engine for event-driven mini apps.
//!
//! The engine consumes apps written in the `.mapp` text IR, explores their
//! GUI by concretely executing event sequences on a built-in interpreter,
//! builds a constraint-aware GUI model whose transitions are labeled by
//! event summaries (event + exact execution path), and uses path-wise
//! symbolic execution plus a bounded constraint solver to generate event
//! sequences that reach unexecuted paths and user-specified code targets.
//!
//! Crate layout mirrors the pipeline:
//! - [`appir`]: app IR types, text format, parser, validation
//! - [`runtime`]: concrete interpreter and instrumentation logs
//! - [`ipcfg`]: CFG / inter-procedural CFG construction and path enumeration
//! - [`gui_model`]: the constraint-aware GUI model store
//! - [`symexec`]: path-wise symbolic execution over AST expressions
//! - [`solver`]: bounded constraint decision procedure and sequence assembly
//! - [`explorer`]: the guided exploration driver and coverage reporting

pub mod appir;
pub mod explorer;
pub mod gui_model;
pub mod ipcfg;
pub mod runtime;
pub mod solver;
pub mod symexec;

pub use appir::{App, Instr, Literal, MethodSig};
pub use explorer::{explore, Budget, CoverageReport, ExplorationHistory};
pub use gui_model::{GuiModel, StateId, SummaryId};
pub use runtime::{Event, ExecLog, RuntimeState};
