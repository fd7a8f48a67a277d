//! Reduce a mixed double sum to pure m- and (m+n)-chains and check the value is unchanged.

use dpl::evaluator::{eval_term, IdentityParams, Strategy};
use dpl::specfun::PrecisionContext;
use dpl::termlang::{parse_term, reduce_mixed, render_group, Term};

fn main() {
    let ctx = PrecisionContext::default();
    let params = IdentityParams::new();
    let t = parse_term("sum(m>=1, n>=1) 1 / (m^2 * n * (m+n))").unwrap();
    let (reduced, stats) = reduce_mixed(std::slice::from_ref(&t)).unwrap();
    println!("{t}\n  = \n{}", render_group(&reduced));
    println!("({} steps, {} terms)", stats.steps, stats.terms_out);

    let whole = eval_term(&t, &params, &ctx, Strategy::Direct).unwrap();
    let parts = reduced
        .iter()
        .map(|p: &Term| eval_term(p, &params, &ctx, Strategy::Auto).unwrap().value)
        .fold(None, |acc, v| Some(match acc {
            None => v,
            Some(a) => &a + &v,
        }))
        .unwrap();
    println!("\ndirect value of the mixed sum: {:.30}", whole.value);
    println!("sum of reduced pieces:         {parts:.30}");
    println!("difference: {:.2e} (direct bound {:.1e})", (&whole.value - &parts).abs_f64(), whole.abs_error_bound);
}
