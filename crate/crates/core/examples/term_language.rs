//! Parse a double-sum term, render it back, and canonicalize a group with like terms.

use dpl::termlang::{canonicalize, parse_term, render_group};

fn main() {
    let text = "sum(m>=1, n>=1) x^n / ((n+1/2)^2 * m * (m+n)^3)";
    let t = parse_term(text).unwrap();
    println!("parsed:   {text}");
    println!("rendered: {t}");
    println!("factors:  {:?}", t.as_double().map(|d| d.denom.len()));

    let group = [
        parse_term("sum(m>=1, n>=1) 1 / (m^2 * (m+n)^2)").unwrap(),
        parse_term("-1/3 : sum(m>=1, n>=1) 1 / ((m+n)^2 * m^2)").unwrap(),
        parse_term("single(n>=1) x^n / n^3").unwrap(),
        parse_term("- single(n>=1) x^n / n^3").unwrap(),
    ];
    println!("\ncanonical form of a four-term group:\n{}", render_group(&canonicalize(&group)));

    match parse_term("sum(m>=1, n>=1) 1 / (m * n)") {
        Ok(t) => println!("\nunexpectedly accepted {t}"),
        Err(e) => println!("\nrejected: {e}"),
    }
}
