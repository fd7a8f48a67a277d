use super::identity::eval_side_resolved;
use super::params::{CValue, IdentityParams};
use super::{EvalError, Strategy};
use crate::specfun::{polylog, EvalResult, HPComplex, Method, PrecisionContext};
use crate::termlang::{IdentitySpec, MRange, Side, TermTemplate};
use rug::float::Constant;
use rug::{Float, Rational};

/// A side of an identity viewed as a function of b.
pub type SideFn<'a> = dyn Fn(&CValue) -> Result<EvalResult, EvalError> + 'a;

const TAYLOR_RADIUS: f64 = 1e-3;

/// cos(bπ)/(x(1−b))·Li(k+1;x) + sin(bπ)/(πx(1−b)²)·Li(k+1;x) + k·sin(bπ)/(πx(1−b))·Li(k+2;x).
/// The singularity at b = 1 is removable; near it a Taylor series in b − 1 is used.
pub fn eval_g(b: &HPComplex, k: i64, x: &HPComplex, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    if x.is_zero() {
        return Err(EvalError::Domain("g is undefined at x = 0".into()));
    }
    let prec = ctx.prec();
    let li1 = polylog(k + 1, x, ctx)?;
    let li2 = polylog(k + 2, x, ctx)?;
    let xinv = x.recip();
    let pi = Float::with_val(prec, Constant::Pi);
    let eps = b.add_i64(-1);
    let e = eps.abs_f64();
    let (c1, c2, extra) = if e < TAYLOR_RADIUS {
        // c1 multiplies Li(k+1), c2 multiplies k·Li(k+2).
        let pe = eps.scale(&pi);
        let pe2 = pe.square();
        let mut s1 = HPComplex::zero(prec);
        let mut s2 = HPComplex::one(prec);
        let mut pow = HPComplex::one(prec);
        let mut fact = Float::with_val(prec, 1);
        let tiny = ctx.eps() * 1e-5;
        for j in 1..200i64 {
            pow = &pow * &pe2;
            pow = -pow;
            fact *= (2 * j) * (2 * j + 1);
            let t2 = pow.scale(&Float::with_val(prec, fact.recip_ref()));
            s2 += &t2;
            let t1 = t2.scale_i64(2 * j);
            s1 += &t1;
            if t1.abs_f64() < tiny && t2.abs_f64() < tiny {
                break;
            }
        }
        // s1 currently holds Σ (−1)^j (πε)^{2j}·2j/(2j+1)!; divide by ε.
        let c1 = if eps.is_zero() { HPComplex::zero(prec) } else { &s1 * &eps.recip() };
        (c1, s2, 0.0)
    } else {
        let pib = b.scale(&pi);
        let (s, c) = (pib.sin(), pib.cos());
        let one_minus = -eps.clone();
        let inv = one_minus.recip();
        let sp = s.scale(&Float::with_val(prec, pi.recip_ref()));
        let c1 = &(&c * &inv) + &(&sp * &inv.square());
        let c2 = &sp * &inv;
        (c1, c2, ctx.ulp() * 16.0 / (e * e))
    };
    let a = &c1 * &xinv;
    let bcoef = c2.scale_i64(k) * xinv;
    let value = &(&a * &li1.value) + &(&bcoef * &li2.value);
    let bound = a.abs_f64() * li1.abs_error_bound
        + bcoef.abs_f64() * li2.abs_error_bound
        + extra * (li1.value.abs_f64() + li2.value.abs_f64()) / x.abs_f64()
        + ctx.ulp() * 64.0 * value.abs_f64().max(1.0);
    Ok(EvalResult::new(value, bound, li1.method.combine(li2.method)))
}

/// g(1), g′(1), g″(1) in closed form: k·Li(k+2)/x, −π²/(3x)·Li(k+1), −kπ²/(3x)·Li(k+2).
pub fn g_derivatives_at_one(k: i64, x: &HPComplex, ctx: &PrecisionContext) -> Result<[EvalResult; 3], EvalError> {
    if x.is_zero() {
        return Err(EvalError::Domain("g is undefined at x = 0".into()));
    }
    let prec = ctx.prec();
    let li1 = polylog(k + 1, x, ctx)?;
    let li2 = polylog(k + 2, x, ctx)?;
    let xinv = x.recip();
    let pi2 = HPComplex::from_real(Float::with_val(prec, Constant::Pi).square());
    let third = Rational::from((-1, 3));
    let g0 = li2.times(&xinv.scale_i64(k));
    let g1 = li1.times(&(&pi2 * &xinv).scale_rational(&third));
    let g2 = li2.times(&(&pi2 * &xinv).scale_rational(&third).scale_i64(k));
    Ok([g0.with_rounding(ctx, 4), g1.with_rounding(ctx, 4), g2.with_rounding(ctx, 4)])
}

/// Central difference of order 1 or 2 at step h.
fn central(f: &SideFn, order: u32, b0: &CValue, h: &Rational, f0: Option<&EvalResult>) -> Result<(HPComplex, f64), EvalError> {
    let plus = f(&b0.add_rational(h)?)?;
    let minus = f(&b0.add_rational(&Rational::from(-h))?)?;
    let hf = h.to_f64();
    match order {
        1 => {
            let d = (&plus.value - &minus.value).scale_rational(&Rational::from(h.clone().recip() / 2));
            Ok((d, (plus.abs_error_bound + minus.abs_error_bound) / (2.0 * hf)))
        }
        2 => {
            let f0 = f0.expect("second differences need f(b0)");
            let num = &(&plus.value + &minus.value) - &f0.value.scale_i64(2);
            let d = num.scale_rational(&Rational::from(h.clone().square().recip()));
            Ok((d, (plus.abs_error_bound + minus.abs_error_bound + 2.0 * f0.abs_error_bound) / (hf * hf)))
        }
        _ => unreachable!(),
    }
}

/// Base step of the b-derivative stencil at the default precision.
pub const DERIVATIVE_STEP: (i32, i32) = (1, 100_000);

/// d^order f / db^order at b0 by Richardson extrapolation of central differences
/// at h, h/2, h/4 with h = 1e-5. Order is 1 or 2.
pub fn richardson_derivative(f: &SideFn, order: u32, b0: &CValue, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    richardson_derivative_step(f, order, b0, &Rational::from(DERIVATIVE_STEP), ctx)
}

/// As [`richardson_derivative`] with base step `h0`.
pub fn richardson_derivative_step(
    f: &SideFn,
    order: u32,
    b0: &CValue,
    h0: &Rational,
    ctx: &PrecisionContext,
) -> Result<EvalResult, EvalError> {
    if !(1..=2).contains(&order) {
        return Err(EvalError::Domain(format!("derivative order {order} is not 1 or 2")));
    }
    if *h0 <= 0 {
        return Err(EvalError::Domain(format!("derivative step {h0} is not positive")));
    }
    let f0 = if order == 2 { Some(f(b0)?) } else { None };
    let mut d = Vec::new();
    let mut prop = 0f64;
    for i in 0..3 {
        let h = Rational::from(h0 / Rational::from(1u32 << i));
        let (v, e) = central(f, order, b0, &h, f0.as_ref())?;
        prop = prop.max(e);
        d.push(v);
    }
    let r1: Vec<HPComplex> = (0..2)
        .map(|i| (&d[i + 1].scale_i64(4) - &d[i]).scale_rational(&Rational::from((1, 3))))
        .collect();
    let r2 = (&r1[1].scale_i64(16) - &r1[0]).scale_rational(&Rational::from((1, 15)));
    let spread = (&r2 - &r1[1]).abs_f64();
    // The Richardson weights sum to 17/9 in absolute value.
    let bound = 4.0 * spread + 3.0 * prop + ctx.ulp() * 64.0 * r2.abs_f64();
    let method = f0.map(|v| v.method).unwrap_or(Method::ClosedForm);
    Ok(EvalResult::new(r2, bound, method))
}

fn side_has_gt_b(spec: &IdentitySpec, side: Side) -> bool {
    spec.side(side).iter().flat_map(|g| &g.items).any(|it| match &it.term {
        TermTemplate::Double(d) => d.m_range == MRange::GtB,
        TermTemplate::Single(_) => false,
    })
}

/// Numerical b-derivative of one side of an identity. The stencil may leave (0, 1]
/// but must keep Re b > 0 and, for sides summing over m > b, must not cross an integer.
pub fn numeric_derivative_b(
    spec: &IdentitySpec,
    side: Side,
    order: u32,
    b0: &CValue,
    params: &IdentityParams,
    ctx: &PrecisionContext,
    strategy: Strategy,
) -> Result<EvalResult, EvalError> {
    let h = Rational::from(DERIVATIVE_STEP);
    let lo = b0.add_rational(&Rational::from(-&h))?;
    let hi = b0.add_rational(&h)?;
    match (&lo, &hi) {
        (CValue::Exact { re: l, .. }, CValue::Exact { re: u, .. }) => {
            if *l <= 0 {
                return Err(EvalError::Domain(format!("derivative stencil around b = {b0} reaches Re b <= 0")));
            }
            if side_has_gt_b(spec, side) && l.clone().floor() != u.clone().floor() {
                return Err(EvalError::Domain(format!(
                    "derivative stencil around b = {b0} crosses an integer where the range m > b changes"
                )));
            }
        }
        _ => return Err(EvalError::Domain(format!("b = {b0} cannot be shifted"))),
    }
    let f = |b: &CValue| -> Result<EvalResult, EvalError> {
        let p = params.clone().with_b(b.clone()).resolve(spec, true)?;
        Ok(eval_side_resolved(spec, side, &p, ctx, strategy)?.value)
    };
    richardson_derivative(&f, order, b0, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_branch_matches_closed_form() {
        let ctx = PrecisionContext::default();
        let x = HPComplex::from_f64(0.5, 0.25, ctx.prec());
        let at_one = g_derivatives_at_one(2, &x, &ctx).unwrap();
        let g1 = eval_g(&HPComplex::one(ctx.prec()), 2, &x, &ctx).unwrap();
        assert!((&g1.value - &at_one[0].value).abs_f64() < 1e-45);
        // Both branches agree just outside the Taylor radius.
        let b = HPComplex::from_f64(1.0 + 1.5e-3, 0.0, ctx.prec());
        let direct = eval_g(&b, 2, &x, &ctx).unwrap();
        let bt = HPComplex::from_f64(1.0 + 0.9e-3, 0.0, ctx.prec());
        let near = eval_g(&bt, 2, &x, &ctx).unwrap();
        let slope = (&direct.value - &near.value).abs_f64() / 0.6e-3;
        assert!((slope - at_one[1].value.abs_f64()).abs() < 1e-2 * slope.max(1.0));
    }

    #[test]
    fn richardson_on_polynomial() {
        let ctx = PrecisionContext::default();
        let prec = ctx.prec();
        let f = |b: &CValue| -> Result<EvalResult, EvalError> {
            let v = b.to_complex(prec);
            Ok(EvalResult::exact(&(&v * &v) * &v))
        };
        let b0 = CValue::real(Rational::from((1, 2)));
        let d1 = richardson_derivative(&f, 1, &b0, &ctx).unwrap();
        assert!((d1.value.to_f64_pair().0 - 0.75).abs() < 1e-25);
        let d2 = richardson_derivative(&f, 2, &b0, &ctx).unwrap();
        assert!((d2.value.to_f64_pair().0 - 3.0).abs() < 1e-25);
    }
}
