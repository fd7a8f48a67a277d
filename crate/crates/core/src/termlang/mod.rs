//! Term language for double and single sums: data model, `.dpl` parser,
//! canonical forms, partial-fraction rewriting and derivation checks.

mod ast;
mod derive;
mod expand;
mod expr;
mod lexer;
mod parser;
mod reduce;
mod term;

pub use ast::{
    CharRefTemplate, CongTemplate, CscTemplate, DoubleTemplate, FactorTemplate, Family, GroupTemplate,
    IdentitySpec, Item, ParamDecl, ParamKind, Side, SingleTemplate, TermTemplate, WFactor, WeightTemplate,
    XPowTemplate, XSelTemplate,
};
pub use derive::{canonical_side, check_derivation, CanonicalSide, DerivationReport, KCheck};
pub use expand::{bind_term, bind_weight, check_bindings, expand_side, BoundGroup, BoundWeight, WeightKey};
pub use expr::{Bindings, Expr};
pub(crate) use expr::rational_pow;
pub use lexer::Pos;
pub use parser::{parse_identity, parse_identity_file, parse_term, parse_term_template};
pub use reduce::{reduce_mixed, reduce_term, ReduceStats};
pub use term::{
    canonicalize, render_group, CharRef, Combo, Congruence, Csc, DoubleSumTerm, LinearFactor, MRange, NRange,
    Shift, SingleSumTerm, Term, TermGroup, XPow, XSel,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TermError {
    #[error("syntax error{}: {msg}", pos.map(|p| format!(" at {p}")).unwrap_or_default())]
    Syntax { pos: Option<Pos>, msg: String },
    #[error("convergence gate: {0}")]
    Convergence(String),
    #[error("invalid term structure: {0}")]
    Structure(String),
    #[error("undeclared parameter '{0}'")]
    Undeclared(String),
    #[error("weight outside the allowed set: {0}")]
    Weight(String),
    #[error("unbound parameter '{0}'")]
    Unbound(String),
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
    #[error("parameter outside its domain: {0}")]
    Domain(String),
    #[error("non-matching shifts: {0}")]
    NonMatchingShifts(String),
    #[error("{0}")]
    Derivation(String),
}
