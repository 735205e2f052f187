//! SCDL — a textual language for system composition diagrams.
//!
//! A model describes systems by the CESM decomposition: Composition (the
//! parts), Environment (external parties), Structure (couplings that bond
//! parts to each other and to the environment), and Mechanism (the processes
//! that make the system tick). Systems refine into child models through
//! `explode` references, forming a multi-level hierarchy that is linked,
//! validated and exported as a whole.
//!
//! Pipeline stages, each its own module:
//!
//! * [`lexer`] — source text to tokens.
//! * [`parser`] — tokens to a [`ast::ModelUnit`], with panic-mode recovery.
//! * [`format`] — canonical pretty-printer; `parse(format(u))` preserves
//!   structure and formatting is idempotent.
//! * [`resolve`] — loads `explode` references, builds the level tree and the
//!   fully-qualified symbol table.
//! * [`validate`] — systemist semantic checks over a resolved model.
//! * [`analyze`] — aggregate property evaluation and the coupling graph.
//! * [`export`] — canonical JSON and DOT renderings.
//!
//! All stages report problems as [`diag::Diagnostic`] values; nothing prints
//! or exits. Success with warnings is `Ok` plus a non-empty warning list
//! where the API allows it, and fatal problems are `Err` carrying every
//! diagnostic found, sorted by source position.

pub mod analyze;
pub mod ast;
pub mod corpus;
pub mod diag;
pub mod export;
pub mod format;
pub mod lexer;
pub mod parser;
pub mod resolve;
pub mod span;
pub mod validate;

#[cfg(any(test, feature = "test-support"))]
pub mod testgen;

pub use ast::ModelUnit;
pub use diag::{Diagnostic, Severity};
pub use parser::parse;
pub use span::SourceSpan;
