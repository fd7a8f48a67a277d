//! Special-function substrate: Bernoulli numbers, Hurwitz zeta, digamma,
//! Lerch transcendent, polylogarithm, Dirichlet characters and L-functions.
//!
//! Every evaluator returns an [`EvalResult`]: a value together with an
//! absolute error bound and a tag naming the method that produced it.

mod bernoulli;
mod character;
mod complex;
mod hurwitz;
mod lerch;

pub use bernoulli::{bernoulli, bernoulli_float};
pub use character::{dirichlet_l, gauss_sum, make_character, CharValue, Character};
pub use complex::HPComplex;
pub use hurwitz::{
    digamma, euler_gamma, hurwitz_zeta, hurwitz_zeta_with_cutoff, zeta_asymptotic_tail,
};
pub use lerch::{detect_root_of_unity, lerch_phi, polylog, RootOfUnity};

pub(crate) use bernoulli::em_coefficients;
pub(crate) use hurwitz::{em_tail, Exponent};
pub(crate) use lerch::gcd;

use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("invalid precision: {0}")]
    Precision(String),
    #[error("s = {0} is too close to 1 (need s >= 1 + 1e-3)")]
    SNearOne(String),
    #[error("Re a must be positive, got {0}")]
    NonPositiveShift(String),
    #[error("divergent parameter combination: {0}")]
    Divergent(String),
    #[error("|x| > 1 is outside the supported domain")]
    OutsideDisk,
    #[error("invalid character: {0}")]
    Character(String),
    #[error("non-finite intermediate value in {0}")]
    NonFinite(&'static str),
}

/// Decimal working precision plus guard digits; output digits only affect rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrecisionContext {
    pub working_digits: u32,
    pub guard_digits: u32,
    pub output_digits: u32,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext { working_digits: 50, guard_digits: 10, output_digits: 30 }
    }
}

impl PrecisionContext {
    pub fn new(working_digits: u32, guard_digits: u32, output_digits: u32) -> Result<Self, SpecFunError> {
        if guard_digits < 10 {
            return Err(SpecFunError::Precision(format!("guard_digits = {guard_digits} < 10")));
        }
        if output_digits == 0 || working_digits < output_digits + guard_digits {
            return Err(SpecFunError::Precision(format!(
                "working_digits {working_digits} < output_digits {output_digits} + guard_digits {guard_digits}"
            )));
        }
        Ok(PrecisionContext { working_digits, guard_digits, output_digits })
    }

    /// Context for a requested number of working digits, output capped at 30.
    pub fn with_digits(working_digits: u32) -> Result<Self, SpecFunError> {
        let output = working_digits.saturating_sub(10).clamp(1, 30);
        Self::new(working_digits, 10, output)
    }

    /// Binary precision covering working plus guard digits.
    pub fn prec(&self) -> u32 {
        let digits = f64::from(self.working_digits + self.guard_digits);
        (digits * std::f64::consts::LOG2_10).ceil() as u32 + 16
    }

    /// Target size of a neglected term: 10^-(working + guard).
    pub fn eps(&self) -> f64 {
        10f64.powi(-((self.working_digits + self.guard_digits) as i32))
    }

    /// One unit in the last place of a unit-magnitude number at this precision.
    pub fn ulp(&self) -> f64 {
        2f64.powi(-(self.prec() as i32))
    }

    pub fn digits(&self) -> u32 {
        self.working_digits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    EulerMaclaurin,
    DirectTail,
    Reduction,
    Hybrid,
}

impl Method {
    pub fn combine(self, other: Method) -> Method {
        if self == other {
            self
        } else {
            Method::Hybrid
        }
    }

    /// Whether the attached bound is empirical rather than a truncation estimate.
    pub fn is_empirical(self) -> bool {
        matches!(self, Method::DirectTail)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::ClosedForm => "closed_form",
            Method::EulerMaclaurin => "euler_maclaurin",
            Method::DirectTail => "direct_tail",
            Method::Reduction => "reduction",
            Method::Hybrid => "hybrid",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: HPComplex,
    pub abs_error_bound: f64,
    pub method: Method,
}

impl EvalResult {
    pub fn new(value: HPComplex, abs_error_bound: f64, method: Method) -> Self {
        EvalResult { value, abs_error_bound: abs_error_bound.max(0.0), method }
    }

    pub fn exact(value: HPComplex) -> Self {
        EvalResult::new(value, 0.0, Method::ClosedForm)
    }

    pub fn zero(prec: u32) -> Self {
        EvalResult::exact(HPComplex::zero(prec))
    }

    /// Sum of two results; bounds add.
    pub fn plus(&self, other: &EvalResult) -> EvalResult {
        EvalResult {
            value: &self.value + &other.value,
            abs_error_bound: self.abs_error_bound + other.abs_error_bound,
            method: self.method.combine(other.method),
        }
    }

    pub fn minus(&self, other: &EvalResult) -> EvalResult {
        EvalResult {
            value: &self.value - &other.value,
            abs_error_bound: self.abs_error_bound + other.abs_error_bound,
            method: self.method.combine(other.method),
        }
    }

    /// Multiplication by an exactly known constant.
    pub fn times(&self, c: &HPComplex) -> EvalResult {
        let m = c.abs_f64();
        EvalResult {
            value: &self.value * c,
            abs_error_bound: self.abs_error_bound * m,
            method: self.method,
        }
    }

    pub fn accumulate(&mut self, other: &EvalResult) {
        self.value += &other.value;
        self.abs_error_bound += other.abs_error_bound;
        self.method = self.method.combine(other.method);
    }

    /// Accumulate `c * other`, where `c` is exact.
    pub fn accumulate_scaled(&mut self, c: &HPComplex, other: &EvalResult) {
        self.value += &(c * &other.value);
        self.abs_error_bound += other.abs_error_bound * c.abs_f64();
        self.method = self.method.combine(other.method);
    }

    /// Adds a rounding allowance of `ops` ulps relative to the value's magnitude.
    pub fn with_rounding(mut self, ctx: &PrecisionContext, ops: usize) -> EvalResult {
        let mag = self.value.abs_f64().max(f64::MIN_POSITIVE);
        self.abs_error_bound += mag * ctx.ulp() * (ops.max(1) as f64);
        self
    }

    pub fn check_finite(self, what: &'static str) -> Result<EvalResult, SpecFunError> {
        if self.value.is_finite() && self.abs_error_bound.is_finite() {
            Ok(self)
        } else {
            Err(SpecFunError::NonFinite(what))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_invariants() {
        assert!(PrecisionContext::new(50, 10, 30).is_ok());
        assert!(PrecisionContext::new(30, 10, 30).is_err());
        assert!(PrecisionContext::new(50, 5, 30).is_err());
        let c = PrecisionContext::with_digits(15).unwrap();
        assert_eq!((c.working_digits, c.guard_digits, c.output_digits), (15, 10, 5));
    }

    #[test]
    fn combining_results_adds_bounds() {
        let p = 64;
        let a = EvalResult::new(HPComplex::from_i64(1, p), 1e-10, Method::Reduction);
        let b = EvalResult::new(HPComplex::from_i64(2, p), 2e-10, Method::DirectTail);
        let c = a.plus(&b);
        assert_eq!(c.value, HPComplex::from_i64(3, p));
        assert!((c.abs_error_bound - 3e-10).abs() < 1e-20);
        assert_eq!(c.method, Method::Hybrid);
    }
}
