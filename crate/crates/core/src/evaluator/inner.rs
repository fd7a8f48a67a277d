use super::classes::{m_start, NumEnv};
use super::params::IdentityParams;
use super::EvalError;
use crate::specfun::{digamma, hurwitz_zeta, lerch_phi, EvalResult, HPComplex, PrecisionContext};
use crate::termlang::{Combo, DoubleSumTerm, XSel};
use rug::{Float, Integer, Rational};

/// Σ_{m>=m0} z^m (m+a)^{-i}.
fn power_sum(z: Option<&HPComplex>, i: &Rational, a: &HPComplex, m0: i64, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    let prec = ctx.prec();
    let s = Float::with_val(prec, i);
    let shift = a.add_i64(m0);
    match z {
        None => {
            if *i <= 1 {
                return Err(EvalError::Divergent(format!("inner sum with total exponent {i}")));
            }
            Ok(hurwitz_zeta(&s, &shift, ctx)?)
        }
        Some(z) => Ok(lerch_phi(z, &s, &shift, ctx)?.times(&z.powi(m0))),
    }
}

/// Σ_{m>=m0} z^m ((m+a)^{-1} − (m+a+d)^{-1}).
fn log_pair(z: Option<&HPComplex>, a: &HPComplex, d: &HPComplex, m0: i64, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    let lo = a.add_i64(m0);
    let hi = &lo + d;
    match z {
        None => Ok(digamma(&hi, ctx)?.minus(&digamma(&lo, ctx)?)),
        Some(z) => {
            let s = Float::with_val(ctx.prec(), 1);
            let zp = z.powi(m0);
            Ok(lerch_phi(z, &s, &lo, ctx)?.minus(&lerch_phi(z, &s, &hi, ctx)?).times(&zp))
        }
    }
}

/// binom(−r, l) = (−1)^l C(r+l−1, l).
fn neg_binom(r: u32, l: u32) -> Integer {
    let c = Integer::from(r + l - 1).binomial(l);
    if l % 2 == 1 {
        -c
    } else {
        c
    }
}

fn small_int(q: &Rational) -> Option<u32> {
    if *q.denom() == 1 && *q >= 1 {
        q.numer().to_u32()
    } else {
        None
    }
}

/// Closed form of the inner sum over m at a fixed n, including the coefficient.
///
/// Catalogued shapes: only an (m+n+γ) factor, only an (m+α) factor, or both
/// with integer exponents, resolved by partial fractions into Hurwitz (or Lerch,
/// when x^m is present) values plus a digamma difference for the 1/X pair.
/// Characters or congruences acting on m are not catalogued.
pub fn eval_inner_closed(t: &DoubleSumTerm, n: i64, params: &IdentityParams, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    let prec = ctx.prec();
    let env = NumEnv::new(params, prec);
    if n < t.n_range.start() {
        return Err(EvalError::Domain(format!("n = {n} lies outside the summation range")));
    }
    if t.cong.modulus > 1 {
        return Err(EvalError::Uncatalogued("inner sums under a congruence condition".into()));
    }
    let mut konst = HPComplex::from_rational(&t.coeff, prec);
    for c in &t.chars {
        if c.arg != Combo::N {
            return Err(EvalError::Uncatalogued("characters acting on m inside the inner sum".into()));
        }
        let chi = env.chars.get(&c.name).ok_or_else(|| EvalError::Missing(format!("character {}", c.name)))?;
        konst = &konst * &chi.value(n).to_complex(prec);
    }
    let x = || env.x.clone().ok_or_else(|| EvalError::Missing("x".into()));
    let z = match t.xsel {
        XSel::None => None,
        XSel::N(d) => {
            konst = &konst * &x()?.powi(n + d);
            None
        }
        XSel::MN(d) => {
            let x = x()?;
            konst = &konst * &x.powi(n + d);
            Some(x)
        }
    };
    if let Some(f) = t.factor(Combo::N) {
        let v = env.shift(&f.shift)?.add_i64(n);
        konst = &konst * &v.pow_rational(&Rational::from(-&f.exponent));
    }
    let m0 = m_start(t.m_range, &env)?;
    let fm = t.factor(Combo::M);
    let fmn = t.factor(Combo::MN);
    let zr = z.as_ref();
    let value = match (fm, fmn) {
        (None, None) => return Err(EvalError::Divergent("inner sum without m-dependence".into())),
        (Some(f), None) => power_sum(zr, &f.exponent, &env.shift(&f.shift)?, m0, ctx)?,
        (None, Some(f)) => power_sum(zr, &f.exponent, &env.shift(&f.shift)?.add_i64(n), m0, ctx)?,
        (Some(fa), Some(fc)) => {
            let (Some(p), Some(r)) = (small_int(&fa.exponent), small_int(&fc.exponent)) else {
                return Err(EvalError::Uncatalogued("partial fractions need integer exponents".into()));
            };
            let alpha = env.shift(&fa.shift)?;
            let gamma = env.shift(&fc.shift)?.add_i64(n);
            let d = &gamma - &alpha;
            if d.abs_f64() < 1e-40 {
                power_sum(zr, &Rational::from(p + r), &alpha, m0, ctx)?
            } else {
                let dinv = d.recip();
                let mut acc = EvalResult::zero(prec);
                for i in 2..=p {
                    let c = dinv.powi(i64::from(r + p - i)).scale_rational(&Rational::from(neg_binom(r, p - i)));
                    acc.accumulate_scaled(&c, &power_sum(zr, &Rational::from(i), &alpha, m0, ctx)?);
                }
                let ndinv = -dinv.clone();
                for j in 2..=r {
                    let c = ndinv.powi(i64::from(p + r - j)).scale_rational(&Rational::from(neg_binom(p, r - j)));
                    acc.accumulate_scaled(&c, &power_sum(zr, &Rational::from(j), &gamma, m0, ctx)?);
                }
                let c1 = dinv.powi(i64::from(r + p - 1)).scale_rational(&Rational::from(neg_binom(r, p - 1)));
                acc.accumulate_scaled(&c1, &log_pair(zr, &alpha, &d, m0, ctx)?);
                acc
            }
        }
    };
    Ok(value.times(&konst).with_rounding(ctx, 8))
}
