//! Partial-fraction rewriting 1/(XY) = (1/X + 1/Y)/(X+Y) with X = m+α, Y = n+β.

use super::term::{canonicalize, Combo, DoubleSumTerm, LinearFactor, Term, TermGroup};
use super::TermError;
use rug::Rational;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReduceStats {
    pub terms_in: usize,
    pub terms_out: usize,
    pub steps: usize,
}

fn int_exponent(f: &LinearFactor, t: &DoubleSumTerm) -> Result<u32, TermError> {
    f.integer_exponent()
        .and_then(|e| u32::try_from(e).ok())
        .ok_or_else(|| TermError::Structure(format!("{t}: partial fractions need integer exponents on m and n factors")))
}

/// Rewrites one term until no summand carries both an m-factor and an n-factor.
/// Returns the (uncanonicalized) output and the number of rewriting steps.
pub fn reduce_term(t: &DoubleSumTerm) -> Result<(Vec<DoubleSumTerm>, usize), TermError> {
    if !t.is_mixed() {
        return Ok((vec![t.clone()], 0));
    }
    let fm = t.factor(Combo::M).expect("mixed").clone();
    let fn_ = t.factor(Combo::N).expect("mixed").clone();
    let p = int_exponent(&fm, t)?;
    let q = int_exponent(&fn_, t)?;
    let joint_shift = fm.shift.checked_add(&fn_.shift)?;
    let r = match t.factor(Combo::MN) {
        Some(j) if j.shift != joint_shift => {
            return Err(TermError::NonMatchingShifts(format!(
                "{t}: ({})+({}) is not the joint factor {}",
                fm.base_string(),
                fn_.base_string(),
                j.base_string()
            )))
        }
        Some(j) => j.exponent.clone(),
        None => Rational::new(),
    };

    // Multiplicities of 1/(X^a Y^b Z^(r + p + q - a - b)) reached by the recursion.
    let mut pending: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    let mut done: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    pending.insert((p, q), Rational::from(1));
    let mut steps = 0usize;
    while let Some(((a, b), c)) = pending.pop_last() {
        if a == 0 || b == 0 {
            *done.entry((a, b)).or_insert_with(Rational::new) += c;
            continue;
        }
        steps += 1;
        *pending.entry((a, b - 1)).or_insert_with(Rational::new) += &c;
        *pending.entry((a - 1, b)).or_insert_with(Rational::new) += c;
    }
    let bound = ((p + q) as usize).pow(2);
    assert!(steps <= bound, "partial-fraction step count {steps} exceeds {bound}");

    let mut out = Vec::with_capacity(done.len());
    for ((a, b), c) in done {
        let mut nt = t.clone();
        nt.coeff = Rational::from(&t.coeff * &c);
        let z_exp = Rational::from(&r + (p + q - a - b));
        let mut denom = Vec::new();
        if a > 0 {
            denom.push(LinearFactor::new(Combo::M, fm.shift.clone(), a));
        }
        if b > 0 {
            denom.push(LinearFactor::new(Combo::N, fn_.shift.clone(), b));
        }
        denom.push(LinearFactor { combo: Combo::MN, shift: joint_shift.clone(), exponent: z_exp });
        nt.denom = denom;
        out.push(nt);
    }
    Ok((out, steps))
}

/// Applies [`reduce_term`] to every mixed double sum and canonicalizes.
pub fn reduce_mixed(g: &[Term]) -> Result<(TermGroup, ReduceStats), TermError> {
    let mut stats = ReduceStats { terms_in: g.len(), ..Default::default() };
    let mut out = Vec::new();
    for t in g {
        match t {
            Term::Double(d) => {
                let (parts, steps) = reduce_term(d)?;
                stats.steps += steps;
                out.extend(parts.into_iter().map(Term::Double));
            }
            single => out.push(single.clone()),
        }
    }
    let out = canonicalize(&out);
    stats.terms_out = out.len();
    Ok((out, stats))
}
