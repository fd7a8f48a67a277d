#![allow(dead_code)]

pub mod suites;

use dpl::evaluator::{eval_term, CValue, IdentityParams, Strategy};
use dpl::registry::Registry;
use dpl::specfun::{EvalResult, HPComplex, PrecisionContext};
use dpl::termlang::parse_term;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rug::Rational;

/// Seed shared by every randomized suite so failures replay exactly.
pub const SEED: [u8; 32] = *b"dpl property suites, fixed seed.";

pub fn seed_hex() -> String {
    SEED.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, max_shrink_iters: 64, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &SEED))
}

pub fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

pub fn ctx_digits(d: u32) -> PrecisionContext {
    PrecisionContext::with_digits(d).expect("valid precision")
}

pub fn registry() -> Registry {
    Registry::builtin()
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

/// Parses a parameter literal the way the CLI does ("1/2", "-1", "i", "ru(3,1)", "1/2+1/3i").
pub fn cv(text: &str) -> CValue {
    text.parse().unwrap_or_else(|e| panic!("bad literal {text}: {e}"))
}

pub fn params_x(x: &str) -> IdentityParams {
    IdentityParams::new().with_x(cv(x))
}

pub fn params_xb(x: &str, b: &str) -> IdentityParams {
    IdentityParams::new().with_x(cv(x)).with_b(cv(b))
}

pub fn term(text: &str, p: &IdentityParams, ctx: &PrecisionContext, strategy: Strategy) -> EvalResult {
    let t = parse_term(text).unwrap_or_else(|e| panic!("{text}: {e}"));
    eval_term(&t, p, ctx, strategy).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn dist(a: &HPComplex, b: &HPComplex) -> f64 {
    (a - b).abs_f64()
}

pub fn relative(a: &HPComplex, b: &HPComplex) -> f64 {
    dist(a, b) / b.abs_f64().max(f64::MIN_POSITIVE)
}

/// Slack for rounding in the few operations a check performs on top of evaluated values.
pub fn slack(ctx: &PrecisionContext, scale: f64) -> f64 {
    ctx.ulp() * 1024.0 * scale.max(1.0)
}
