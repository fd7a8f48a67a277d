//! Run every default battery point in the catalogue and tabulate the residuals.

use dpl::evaluator::Strategy;
use dpl::registry::Registry;
use dpl::specfun::PrecisionContext;

fn main() {
    let reg = Registry::builtin();
    let ctx = PrecisionContext::default();
    let only: Vec<String> = std::env::args().skip(1).collect();
    let (mut passed, mut total) = (0, 0);
    for entry in reg.list(None) {
        if !only.is_empty() && !only.contains(&entry.id) {
            continue;
        }
        // The real-s battery runs the direct strategy only and takes minutes.
        if only.is_empty() && entry.meta.strategy == Strategy::Direct {
            continue;
        }
        for point in &entry.meta.battery {
            let r = entry.verify(&entry.params(point).unwrap(), &ctx, Strategy::Auto).unwrap();
            total += 1;
            passed += r.pass() as usize;
            println!(
                "{:4} {:15} {:30} residual {:.1e} (tol {:.0e})",
                if r.pass() { "ok" } else { "FAIL" },
                r.identity,
                r.params_string(),
                r.residual,
                r.tolerance
            );
        }
    }
    println!("{passed}/{total} pass");
}
