//! Binding parameters: templates to concrete terms, weights to exact symbolic keys.

use super::ast::*;
use super::expr::{Bindings, Expr};
use super::term::*;
use super::TermError;
use rug::Rational;
use std::collections::BTreeMap;
use std::fmt;

/// Transcendental part of a weight: π^pi · sin(πb)^sin · cos(πb)^cos · Π √n^1.
/// `sqrt` holds squarefree radicands with power 1 only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightKey {
    pub pi: i32,
    pub sin: i32,
    pub cos: i32,
    pub sqrt: BTreeMap<u64, i32>,
}

impl WeightKey {
    pub fn is_one(&self) -> bool {
        *self == WeightKey::default()
    }
}

impl fmt::Display for WeightKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut num = Vec::new();
        let mut den = Vec::new();
        let mut push = |name: String, p: i32| match p {
            0 => {}
            1 => num.push(name),
            -1 => den.push(name),
            p if p > 0 => num.push(format!("{name}^{p}")),
            p => den.push(format!("{name}^{}", -p)),
        };
        push("pi".into(), self.pi);
        push("sin(pi*b)".into(), self.sin);
        push("cos(pi*b)".into(), self.cos);
        for (n, p) in &self.sqrt {
            push(format!("sqrt({n})"), *p);
        }
        let top = if num.is_empty() { "1".to_string() } else { num.join("*") };
        if den.is_empty() {
            f.write_str(&top)
        } else {
            write!(f, "{top}/{}", den.join("/"))
        }
    }
}

/// Exact weight: rational coefficient times a [`WeightKey`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundWeight {
    pub coeff: Rational,
    pub key: WeightKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundGroup {
    pub weight: BoundWeight,
    pub terms: TermGroup,
}

/// Writes n = s²·f with f squarefree.
fn split_square(n: u64) -> (u64, u64) {
    let (mut s, mut f, mut rest) = (1u64, 1u64, n);
    let mut p = 2u64;
    while p * p <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            f *= p;
        }
        p += 1;
    }
    (s, f * rest)
}

fn rational_pow(base: &Rational, p: i32) -> Result<Rational, TermError> {
    if *base == 0 && p < 0 {
        return Err(TermError::Arithmetic("zero weight factor raised to a negative power".into()));
    }
    Ok(super::expr::rational_pow(base, p))
}

pub fn bind_weight(w: &WeightTemplate, env: &Bindings) -> Result<BoundWeight, TermError> {
    let mut coeff = Rational::from(1);
    let mut key = WeightKey::default();
    let mut radicals: BTreeMap<u64, i32> = BTreeMap::new();
    for (factor, p) in &w.factors {
        match factor {
            WFactor::Expr(e) => coeff *= rational_pow(&e.eval(env)?, *p)?,
            WFactor::Pi => key.pi += p,
            WFactor::SinPiB => key.sin += p,
            WFactor::CosPiB => key.cos += p,
            WFactor::Sqrt(n) => {
                let (s, f) = split_square(*n);
                coeff *= rational_pow(&Rational::from(s), *p)?;
                if f > 1 {
                    *radicals.entry(f).or_insert(0) += p;
                }
            }
        }
    }
    for (f, p) in radicals {
        // √f^p = f^⌊p/2⌋ · √f^(p mod 2)
        let half = p.div_euclid(2);
        coeff *= rational_pow(&Rational::from(f), half)?;
        if p.rem_euclid(2) == 1 {
            key.sqrt.insert(f, 1);
        }
    }
    Ok(BoundWeight { coeff, key })
}

fn eval_i64(e: &Expr, env: &Bindings, what: &str) -> Result<i64, TermError> {
    e.eval_int(env).map_err(|err| match err {
        TermError::Arithmetic(_) => TermError::Domain(format!("{what} {e} must be an integer")),
        other => other,
    })
}

fn bind_factor(f: &FactorTemplate, env: &Bindings) -> Result<Option<LinearFactor>, TermError> {
    let exponent = f.exponent.eval(env)?;
    if exponent == 0 {
        return Ok(None);
    }
    if exponent < 0 {
        return Err(TermError::Structure(format!("exponent {} = {exponent} is negative", f.exponent)));
    }
    Ok(Some(LinearFactor { combo: f.combo, shift: f.shift.clone(), exponent }))
}

/// Substitutes parameter values into a term template (coefficient 1) and applies the convergence gate.
pub fn bind_term(t: &TermTemplate, env: &Bindings) -> Result<Term, TermError> {
    match t {
        TermTemplate::Double(d) => {
            let xsel = match &d.xsel {
                XSelTemplate::None => XSel::None,
                XSelTemplate::N(e) => XSel::N(eval_i64(e, env, "x offset")?),
                XSelTemplate::MN(e) => XSel::MN(eval_i64(e, env, "x offset")?),
            };
            let mut denom = Vec::new();
            for f in &d.denom {
                denom.extend(bind_factor(f, env)?);
            }
            let cong = match &d.cong {
                None => Congruence::none(),
                Some(c) => {
                    let md = eval_i64(&c.modulus, env, "congruence modulus")?;
                    if md <= 0 {
                        return Err(TermError::Domain(format!("congruence modulus {md} must be positive")));
                    }
                    Congruence::new(md as u64, c.coeff, c.offset)?
                }
            };
            let mut chars: Vec<CharRef> =
                d.chars.iter().map(|c| CharRef { name: c.name.clone(), arg: c.arg }).collect();
            chars.sort();
            let mut term = DoubleSumTerm {
                coeff: Rational::from(1),
                xsel,
                chars,
                m_range: d.m_range,
                n_range: d.n_range,
                denom,
                cong,
            };
            term.denom.sort();
            term.validate()?;
            Ok(Term::Double(term))
        }
        TermTemplate::Single(s) => {
            let factor = bind_factor(&s.factor, env)?
                .ok_or_else(|| TermError::Convergence(format!("single sum {t} has exponent 0")))?;
            let xpow = match &s.xpow {
                None => None,
                Some(p) => {
                    Some(XPow { mult: eval_i64(&p.mult, env, "x multiplier")?, offset: eval_i64(&p.offset, env, "x offset")? })
                }
            };
            let csc = match &s.csc {
                None => None,
                Some(c) => {
                    let md = eval_i64(&c.modulus, env, "csc modulus")?;
                    if md <= 0 {
                        return Err(TermError::Domain(format!("csc modulus {md} must be positive")));
                    }
                    Some(Csc { a: eval_i64(&c.a, env, "csc slope")?, b: eval_i64(&c.b, env, "csc offset")?, modulus: md as u64 })
                }
            };
            let mut chars = s.chars.clone();
            chars.sort();
            let term = SingleSumTerm { coeff: Rational::from(1), xpow, chars, csc, n_range: s.n_range, factor };
            term.validate()?;
            Ok(Term::Single(term))
        }
    }
}

/// Checks integer/real parameter values against their declared domains.
pub fn check_bindings(spec: &IdentitySpec, env: &Bindings) -> Result<(), TermError> {
    for p in spec.numeric_params() {
        let v = env.get(&p.name).ok_or_else(|| TermError::Unbound(p.name.clone()))?;
        match &p.kind {
            ParamKind::Int { min, odd } => {
                if *v.denom() != 1 {
                    return Err(TermError::Domain(format!("{} = {v} must be an integer", p.name)));
                }
                if *v < *min {
                    return Err(TermError::Domain(format!("{} = {v} must be >= {min}", p.name)));
                }
                if *odd && v.numer().is_even() {
                    return Err(TermError::Domain(format!("{} = {v} must be odd", p.name)));
                }
            }
            ParamKind::Real { min } => {
                if v < min {
                    return Err(TermError::Domain(format!("{} = {v} must be >= {min}", p.name)));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Expands one side into weighted groups of concrete terms.
pub fn expand_side(spec: &IdentitySpec, side: Side, env: &Bindings) -> Result<Vec<BoundGroup>, TermError> {
    check_bindings(spec, env)?;
    let mut out = Vec::new();
    for g in spec.side(side) {
        let mut weight = bind_weight(&g.weight, env)?;
        if g.negated {
            weight.coeff = -weight.coeff;
        }
        let mut terms = Vec::new();
        for item in &g.items {
            match &item.family {
                None => {
                    let c = item.coeff.eval(env)?;
                    if c != 0 {
                        terms.push(bind_term(&item.term, env)?.with_coeff(c));
                    }
                }
                Some(fam) => {
                    let lo = eval_i64(&fam.lo, env, "family bound")?;
                    let hi = eval_i64(&fam.hi, env, "family bound")?;
                    let mut local = env.clone();
                    for nu in lo..=hi {
                        local.insert(fam.var.clone(), Rational::from(nu));
                        let c = item.coeff.eval(&local)?;
                        if c != 0 {
                            terms.push(bind_term(&item.term, &local)?.with_coeff(c));
                        }
                    }
                }
            }
        }
        out.push(BoundGroup { weight, terms: canonicalize(&terms) });
    }
    Ok(out)
}

impl BoundGroup {
    /// Terms with the rational weight folded into their coefficients.
    pub fn scaled_terms(&self) -> TermGroup {
        self.terms.iter().map(|t| t.with_coeff(Rational::from(t.coeff() * &self.weight.coeff))).collect()
    }
}
