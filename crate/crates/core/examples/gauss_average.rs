//! Turn the x-twisted formula into the character-twisted one by averaging over roots of unity.

use dpl::evaluator::{eval_side, gauss_average, IdentityParams, Strategy};
use dpl::registry::Registry;
use dpl::specfun::{Character, PrecisionContext};
use dpl::termlang::Side;

fn main() {
    let reg = Registry::builtin();
    let ctx = PrecisionContext::default();
    let untwisted = &reg.get("cor-1.2").unwrap().spec;
    let twisted = &reg.get("cor-1.3").unwrap().spec;
    for chi in [Character::chi3(), Character::chi4()] {
        let avg = gauss_average(untwisted, Side::Lhs, &chi, &IdentityParams::new().with("k", 2), &ctx, Strategy::Auto).unwrap();
        let p = IdentityParams::new().with("k", 2).with_char("chi", chi.clone()).resolve(twisted, false).unwrap();
        let direct = eval_side(twisted, Side::Lhs, &p, &ctx, Strategy::Auto).unwrap().value;
        println!("{chi}: averaged {:.30}", avg.value);
        println!("      twisted  {:.30}  (difference {:.1e})", direct.value, (&avg.value - &direct.value).abs_f64());
    }
}
