//! Verify one catalogued identity under both strategies and print the report.

use dpl::evaluator::Strategy;
use dpl::registry::{parse_assignments, Registry};
use dpl::specfun::PrecisionContext;

fn main() {
    let reg = Registry::builtin();
    let entry = reg.get("thm-1.1").unwrap();
    println!("{}: {}", entry.id, entry.meta.summary);
    let params = entry.params(&parse_assignments("k=2; b=1/3; x=1/2").unwrap()).unwrap();
    let ctx = PrecisionContext::default();
    for strategy in [Strategy::Reduction, Strategy::Direct] {
        let r = entry.verify(&params, &ctx, strategy).unwrap();
        println!(
            "{:9} lhs {:.30}\n          rhs {:.30}\n          residual {:.2e}, bound {:.2e}, tolerance {:.0e}, {} ({:.0} ms)",
            r.strategy,
            r.lhs.value,
            r.rhs.value,
            r.residual,
            r.bound,
            r.tolerance,
            if r.pass() { "pass" } else { "FAIL" },
            r.elapsed_ms
        );
    }
}
