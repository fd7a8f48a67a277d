use super::bernoulli::em_coefficients;
use super::{EvalResult, HPComplex, Method, PrecisionContext, SpecFunError};
use rug::Float;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

const MAX_CORRECTIONS: usize = 30;

/// Exponent that keeps integer powers on the fast path.
#[derive(Clone, Debug)]
pub(crate) enum Exponent {
    Int(i64),
    Real(Float),
}

impl Exponent {
    pub(crate) fn from_float(s: &Float) -> Exponent {
        if s.is_integer() {
            if let Some(k) = s.to_integer().and_then(|i| i.to_i64()) {
                return Exponent::Int(k);
            }
        }
        Exponent::Real(s.clone())
    }

    pub(crate) fn to_float(&self, prec: u32) -> Float {
        match self {
            Exponent::Int(k) => Float::with_val(prec, *k),
            Exponent::Real(f) => Float::with_val(prec, f),
        }
    }

    /// z^{-s}.
    pub(crate) fn pow_neg(&self, z: &HPComplex) -> HPComplex {
        match self {
            Exponent::Int(k) => z.powi(-k),
            Exponent::Real(f) => z.pow_real(&Float::with_val(z.prec(), -f)),
        }
    }
}

pub(crate) fn n_direct(ctx: &PrecisionContext) -> usize {
    (2 * ctx.working_digits as usize).max(50)
}

fn check_s(s: &Float) -> Result<(), SpecFunError> {
    let is_int = s.is_integer();
    if (is_int && *s < 2) || (!is_int && *s < 1.001) {
        return Err(SpecFunError::SNearOne(s.to_string_radix(10, Some(12))));
    }
    Ok(())
}

/// Euler–Maclaurin tail sum_{n>=0} (w+n)^{-s} with no direct terms.
///
/// Returns the value and twice the first omitted correction.
pub(crate) fn em_tail(s: &Exponent, w: &HPComplex, ctx: &PrecisionContext) -> (HPComplex, f64) {
    let prec = ctx.prec();
    let sf = s.to_float(prec);
    let w_neg_s = s.pow_neg(w);
    let w_inv = w.recip();
    let w_inv2 = w_inv.square();
    let s_minus_1 = Float::with_val(prec, &sf - 1u32);
    let mut value = (&w_neg_s * w).scale(&Float::with_val(prec, s_minus_1.recip_ref()));
    value += &w_neg_s.scale(&Float::with_val(prec, 0.5));
    let coefs = em_coefficients(MAX_CORRECTIONS + 1, prec);
    let mut poch = sf.clone();
    let mut pw = &w_neg_s * &w_inv;
    let tol = ctx.eps();
    let mut omitted = 0.0;
    for (j, c) in coefs.iter().enumerate() {
        let jj = (j + 1) as u32;
        let term = pw.scale(&Float::with_val(prec, c * &poch));
        let mag = term.abs_f64();
        if j == MAX_CORRECTIONS || mag < tol {
            omitted = mag;
            break;
        }
        value += &term;
        poch *= Float::with_val(prec, &sf + (2 * jj - 1));
        poch *= Float::with_val(prec, &sf + 2 * jj);
        pw = &pw * &w_inv2;
    }
    (value, 2.0 * omitted)
}

fn hurwitz_core(
    s: &Exponent,
    a: &HPComplex,
    cutoff: usize,
    ctx: &PrecisionContext,
) -> EvalResult {
    let prec = ctx.prec();
    let mut direct = HPComplex::zero(prec);
    let mut n_plus_a = a.clone();
    for _ in 0..cutoff {
        direct += &s.pow_neg(&n_plus_a);
        n_plus_a = n_plus_a.add_i64(1);
    }
    let (tail, bound) = em_tail(s, &n_plus_a, ctx);
    let value = &direct + &tail;
    EvalResult::new(value, bound, Method::EulerMaclaurin).with_rounding(ctx, cutoff + 2 * MAX_CORRECTIONS)
}

/// Hurwitz zeta ζ(s, a) for real s > 1 and Re a > 0.
pub fn hurwitz_zeta(s: &Float, a: &HPComplex, ctx: &PrecisionContext) -> Result<EvalResult, SpecFunError> {
    hurwitz_zeta_with_cutoff(s, a, n_direct(ctx), ctx)
}

/// Hurwitz zeta with an explicit number of directly summed terms.
pub fn hurwitz_zeta_with_cutoff(
    s: &Float,
    a: &HPComplex,
    cutoff: usize,
    ctx: &PrecisionContext,
) -> Result<EvalResult, SpecFunError> {
    check_s(s)?;
    if !a.re.is_sign_positive() || a.re.is_zero() {
        return Err(SpecFunError::NonPositiveShift(a.to_string()));
    }
    let a = a.with_prec(ctx.prec());
    hurwitz_core(&Exponent::from_float(s), &a, cutoff, ctx).check_finite("hurwitz_zeta")
}

/// sum_{n>=0} (w+n)^{-s} by the asymptotic expansion alone; intended for large |w|.
pub fn zeta_asymptotic_tail(s: &Float, w: &HPComplex, ctx: &PrecisionContext) -> Result<EvalResult, SpecFunError> {
    check_s(s)?;
    let (v, b) = em_tail(&Exponent::from_float(s), &w.with_prec(ctx.prec()), ctx);
    EvalResult::new(v, b, Method::EulerMaclaurin).with_rounding(ctx, 2 * MAX_CORRECTIONS).check_finite("zeta tail")
}

/// Asymptotic digamma at |w| large: ln w - 1/(2w) - sum B_{2j}/(2j) w^{-2j}.
pub(crate) fn digamma_asymptotic(w: &HPComplex, ctx: &PrecisionContext) -> (HPComplex, f64) {
    let prec = ctx.prec();
    let w_inv = w.recip();
    let w_inv2 = w_inv.square();
    let mut value = w.ln();
    value -= &w_inv.scale(&Float::with_val(prec, 0.5));
    let coefs = em_coefficients(MAX_CORRECTIONS + 1, prec);
    // B_{2j}/(2j) = [B_{2j}/(2j)!] (2j-1)!
    let mut fact = Float::with_val(prec, 1);
    let mut pw = w_inv2.clone();
    let tol = ctx.eps();
    let mut omitted = 0.0;
    for (j, c) in coefs.iter().enumerate() {
        let jj = (j + 1) as u32;
        let term = pw.scale(&Float::with_val(prec, c * &fact));
        let mag = term.abs_f64();
        if j == MAX_CORRECTIONS || mag < tol {
            omitted = mag;
            break;
        }
        value -= &term;
        fact *= 2 * jj;
        fact *= 2 * jj + 1;
        pw = &pw * &w_inv2;
    }
    (value, 2.0 * omitted)
}

/// Digamma ψ(a) for Re a > 0, by upward shift into the asymptotic region.
pub fn digamma(a: &HPComplex, ctx: &PrecisionContext) -> Result<EvalResult, SpecFunError> {
    if !a.re.is_sign_positive() || a.re.is_zero() {
        return Err(SpecFunError::NonPositiveShift(a.to_string()));
    }
    let a = a.with_prec(ctx.prec());
    let threshold = n_direct(ctx) as f64;
    let re = a.re.to_f64();
    let shift = if re < threshold { (threshold - re).ceil() as usize } else { 0 };
    let mut recip_sum = HPComplex::zero(ctx.prec());
    let mut z = a.clone();
    for _ in 0..shift {
        recip_sum += &z.recip();
        z = z.add_i64(1);
    }
    let (asym, bound) = digamma_asymptotic(&z, ctx);
    let value = &asym - &recip_sum;
    EvalResult::new(value, bound, Method::EulerMaclaurin)
        .with_rounding(ctx, shift + 2 * MAX_CORRECTIONS)
        .check_finite("digamma")
}

/// Euler's constant γ = -ψ(1), computed once per binary precision.
pub fn euler_gamma(ctx: &PrecisionContext) -> EvalResult {
    static CACHE: OnceLock<Mutex<HashMap<u32, (Float, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let prec = ctx.prec();
    if let Some((g, b)) = cache.lock().expect("gamma cache poisoned").get(&prec) {
        return EvalResult::new(HPComplex::from_real(g.clone()), *b, Method::EulerMaclaurin);
    }
    let psi1 = digamma(&HPComplex::one(prec), ctx).expect("ψ(1) is finite");
    let g = -psi1.value.re;
    cache
        .lock()
        .expect("gamma cache poisoned")
        .insert(prec, (g.clone(), psi1.abs_error_bound));
    EvalResult::new(HPComplex::from_real(g), psi1.abs_error_bound, Method::EulerMaclaurin)
}
