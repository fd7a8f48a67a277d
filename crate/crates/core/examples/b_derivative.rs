//! Closed-form g(1), g'(1), g''(1) against finite differences, and a b-derivative of a whole side.

use dpl::evaluator::{eval_g, g_derivatives_at_one, numeric_derivative_b, CValue, IdentityParams, Strategy};
use dpl::registry::Registry;
use dpl::specfun::{HPComplex, PrecisionContext};
use dpl::termlang::Side;

fn main() {
    let ctx = PrecisionContext::default();
    let prec = ctx.prec();
    let x = HPComplex::from_f64(0.5, 0.0, prec);
    let [g0, g1, g2] = g_derivatives_at_one(2, &x, &ctx).unwrap();
    println!("k=2, x=1/2: g(1) = {:.25}\n            g'(1) = {:.25}\n           g''(1) = {:.25}", g0.value, g1.value, g2.value);
    let near = eval_g(&HPComplex::from_f64(0.999, 0.0, prec), 2, &x, &ctx).unwrap();
    println!("            g(0.999) = {:.25}", near.value);

    let reg = Registry::builtin();
    let spec = &reg.get("thm-1.1").unwrap().spec;
    let b = CValue::real(rug::Rational::from((1, 2)));
    let p = IdentityParams::new().with("k", 1).with_x(CValue::real(1)).with_b(b.clone());
    for side in [Side::Lhs, Side::Rhs] {
        let d = numeric_derivative_b(spec, side, 1, &b, &p, &ctx, Strategy::Auto).unwrap();
        println!("d/db {side:?} at b=1/2, k=1, x=1: {:.25} (+/- {:.1e})", d.value, d.abs_error_bound);
    }
}
