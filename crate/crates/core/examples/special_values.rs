//! Hurwitz zeta, Lerch transcendent, polylogarithm and a Dirichlet L-value at 50 digits.

use dpl::specfun::{dirichlet_l, hurwitz_zeta, lerch_phi, polylog, Character, HPComplex, PrecisionContext};
use rug::Float;

fn main() {
    let ctx = PrecisionContext::default();
    let prec = ctx.prec();
    let three = Float::with_val(prec, 3);

    let z = hurwitz_zeta(&three, &HPComplex::one(prec), &ctx).unwrap();
    println!("zeta(3)            = {:.40}  (+/- {:.1e}, {})", z.value, z.abs_error_bound, z.method);

    let half = HPComplex::from_f64(0.5, 0.0, prec);
    let z = hurwitz_zeta(&three, &half, &ctx).unwrap();
    println!("zeta(3, 1/2)       = {:.40}", z.value);

    let li = polylog(2, &half, &ctx).unwrap();
    println!("Li_2(1/2)          = {:.40}", li.value);

    let x = HPComplex::root_of_unity(3, 1, prec);
    let phi = lerch_phi(&x, &Float::with_val(prec, 2), &HPComplex::from_f64(0.25, 0.0, prec), &ctx).unwrap();
    println!("Phi(e^(2pi i/3), 2, 1/4) = {:.30}", phi.value);

    let l = dirichlet_l(&Float::with_val(prec, 1), &Character::chi4(), &ctx).unwrap();
    println!("L(1; chi4)         = {:.40}  (pi/4)", l.value);
}
