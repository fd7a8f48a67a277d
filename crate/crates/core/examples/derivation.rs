//! Show that one sum formula reduces symbolically to another under partial fractions.

use dpl::registry::{Registry, DERIVATION_PAIRS};

fn main() {
    let reg = Registry::builtin();
    for (from, to) in DERIVATION_PAIRS {
        let r = reg.derive(from, to, &[1, 2, 3, 4]).unwrap();
        println!("{from} -> {to}: {}", if r.pass() { "pass" } else { "FAIL" });
        for c in &r.checks {
            let at: Vec<String> = c.bindings.iter().map(|(name, v)| format!("{name}={v}")).collect();
            println!("  {:12} {} terms vs {} terms{}", at.join(" "), c.from_terms, c.to_terms, match &c.witness {
                Some(w) => format!(", first mismatch {w}"),
                None => String::new(),
            });
        }
    }
    if let Err(e) = reg.derive("thm-1.1", "cor-1.3", &[1]) {
        println!("\n{e}");
    }
}
