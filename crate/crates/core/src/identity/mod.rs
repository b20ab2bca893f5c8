//! A small language for congruence identities: parsing, canonical printing,
//! evaluation under a binding, and quantified checking with
//! counterexamples.

mod ast;
mod check;
mod eval;
mod parser;

pub use ast::{pretty_print, Count, IdentityAst, ParamDecl, RelExpr, Sort};
pub use check::{
    check_quantified, find_min_parameter, verify_counterexample, BoundVariable, CheckError,
    CheckOptions, Counterexample, MinParam, Status, Verdict,
};
pub use eval::{evaluate, EvalError};
pub use parser::{parse_identity, ParseError, ParseErrorKind};
