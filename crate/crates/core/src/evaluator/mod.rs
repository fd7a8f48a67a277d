//! Numerical evaluation of bound terms and identities with error bounds.
//!
//! Double sums are split into residue classes so every phase is either 1 or
//! geometrically decaying. The reduction strategy then removes mixed m/n
//! factors by partial fractions and sums Lerch values; the direct strategy
//! sums the raw kernel with Euler–Maclaurin tails.

mod classes;
mod deriv;
mod direct;
mod identity;
mod inner;
mod params;
mod quad;
mod reduced;

pub use deriv::{
    eval_g, g_derivatives_at_one, numeric_derivative_b, richardson_derivative, richardson_derivative_step, SideFn,
    DERIVATIVE_STEP,
};
pub use direct::DEFAULT_CUTOFF;
pub use identity::{
    eval_double, eval_side, eval_single, eval_term, eval_term_with_cutoff, eval_weight, gauss_average,
    eval_identity, ComplexRecord, IdentityReport, ReportRecord, SideValue,
};
pub use inner::eval_inner_closed;
pub use params::{CValue, IdentityParams};

use crate::specfun::SpecFunError;
use crate::termlang::TermError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("parameter outside its domain: {0}")]
    Domain(String),
    #[error("missing parameter: {0}")]
    Missing(String),
    #[error("no evaluation path: {0}")]
    Uncatalogued(String),
    #[error("divergent: {0}")]
    Divergent(String),
}

impl EvalError {
    /// Usage or domain problems, as opposed to numerical failures.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            EvalError::Domain(_)
                | EvalError::Missing(_)
                | EvalError::Term(TermError::Domain(_) | TermError::Unbound(_) | TermError::Undeclared(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Auto,
    Reduction,
    Direct,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Auto => "auto",
            Strategy::Reduction => "reduction",
            Strategy::Direct => "direct",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "reduction" => Ok(Strategy::Reduction),
            "direct" => Ok(Strategy::Direct),
            other => Err(format!("unknown strategy '{other}' (expected auto, reduction or direct)")),
        }
    }
}
