use super::hurwitz::{digamma, hurwitz_zeta, Exponent};
use super::{EvalResult, HPComplex, Method, PrecisionContext, SpecFunError};
use rug::float::Constant;
use rug::Float;

/// x = e^{2πi a/f} with gcd(a, f) = 1 and 0 <= a < f.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootOfUnity {
    pub f: u64,
    pub a: u64,
}

impl RootOfUnity {
    pub fn value(&self, prec: u32) -> HPComplex {
        HPComplex::root_of_unity(self.f, self.a as i64, prec)
    }

    /// x^k as a root of unity.
    pub fn pow(&self, k: i64) -> RootOfUnity {
        let a = ((self.a as i128 * k as i128).rem_euclid(self.f as i128)) as u64;
        let g = gcd(a, self.f);
        RootOfUnity { f: self.f / g, a: a / g }
    }
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

const MAX_DETECTED_ORDER: u64 = 64;

/// Recognizes x as a primitive f-th root of unity with f <= 64.
pub fn detect_root_of_unity(x: &HPComplex) -> Option<RootOfUnity> {
    let prec = x.prec();
    let tol = 1e-25;
    if (x.abs_f64() - 1.0).abs() > tol {
        return None;
    }
    let mut turns = x.arg();
    turns /= Float::with_val(prec, Constant::Pi);
    turns /= 2u32;
    for f in 1..=MAX_DETECTED_ORDER {
        let t = Float::with_val(prec, &turns * f);
        let r = t.clone().round();
        if Float::with_val(prec, &t - &r).abs().to_f64() < tol * f as f64 {
            let a = r.to_integer()?.to_i64()?.rem_euclid(f as i64) as u64;
            if gcd(a, f) == 1 || f == 1 {
                return Some(RootOfUnity { f, a: if f == 1 { 0 } else { a } });
            }
        }
    }
    None
}

fn check_b(b: &HPComplex) -> Result<(), SpecFunError> {
    if !b.re.is_sign_positive() || b.re.is_zero() {
        return Err(SpecFunError::NonPositiveShift(b.to_string()));
    }
    Ok(())
}

fn is_convergent_zeta_exponent(s: &Float) -> bool {
    if s.is_integer() {
        *s >= 2
    } else {
        *s >= 1.001
    }
}

/// Φ(x, s, b) = sum_{n>=0} x^n (n+b)^{-s} for |x| <= 1, real s >= 1, Re b > 0.
pub fn lerch_phi(x: &HPComplex, s: &Float, b: &HPComplex, ctx: &PrecisionContext) -> Result<EvalResult, SpecFunError> {
    check_b(b)?;
    if *s < 1 {
        return Err(SpecFunError::Divergent(format!("s = {} < 1", s.to_f64())));
    }
    let prec = ctx.prec();
    let x = x.with_prec(prec);
    let b = b.with_prec(prec);
    let s = Float::with_val(prec, s);
    let exp = Exponent::from_float(&s);
    if x.is_zero() {
        return Ok(EvalResult::exact(exp.pow_neg(&b)).with_rounding(ctx, 4));
    }
    let modulus = x.abs_f64();
    if modulus > 1.0 + 1e-30 {
        return Err(SpecFunError::OutsideDisk);
    }
    if let Some(root) = detect_root_of_unity(&x) {
        return lerch_at_root(root, &s, &b, ctx);
    }
    if modulus < 1.0 - 1e-12 {
        return Ok(lerch_geometric(&x, &exp, &b, ctx));
    }
    lerch_abel(&x, &exp, &b, ctx)
}

/// Residue-class reduction at an exact root of unity.
pub(crate) fn lerch_at_root(
    root: RootOfUnity,
    s: &Float,
    b: &HPComplex,
    ctx: &PrecisionContext,
) -> Result<EvalResult, SpecFunError> {
    let prec = ctx.prec();
    let f = root.f;
    if f == 1 {
        if !is_convergent_zeta_exponent(s) {
            return Err(SpecFunError::Divergent(format!("x = 1 with s = {}", s.to_f64())));
        }
        return hurwitz_zeta(s, b, ctx);
    }
    let ff = Float::with_val(prec, f);
    let use_zeta = is_convergent_zeta_exponent(s);
    if !use_zeta && *s != 1 {
        // 1 < s < 1.001: no stable residue path, fall back to the Abel limit.
        return lerch_abel(&root.value(prec), &Exponent::from_float(s), b, ctx);
    }
    let mut acc = EvalResult::zero(prec);
    for r in 0..f {
        let w = b.add_i64(r as i64).scale(&Float::with_val(prec, ff.recip_ref()));
        let xr = root.pow(r as i64).value(prec);
        let term = if use_zeta { hurwitz_zeta(s, &w, ctx)? } else { digamma(&w, ctx)? };
        acc.accumulate_scaled(&xr, &term);
    }
    let scale = if use_zeta {
        Exponent::from_float(s).pow_neg(&HPComplex::from_real(ff))
    } else {
        HPComplex::from_real(-Float::with_val(prec, ff.recip_ref()))
    };
    let mut out = acc.times(&scale);
    out.method = Method::Reduction;
    Ok(out.with_rounding(ctx, 4 * f as usize))
}

/// Direct summation for |x| < 1 with the geometric tail bound.
pub(crate) fn lerch_geometric(x: &HPComplex, s: &Exponent, b: &HPComplex, ctx: &PrecisionContext) -> EvalResult {
    let prec = ctx.prec();
    let r = x.abs_f64();
    let tol = ctx.eps();
    let mut acc = HPComplex::zero(prec);
    let mut xn = HPComplex::one(prec);
    let mut nb = b.clone();
    let mut n = 0usize;
    let mut rn = 1.0f64;
    loop {
        let t = s.pow_neg(&nb);
        let tmag = t.abs_f64();
        if rn * tmag / (1.0 - r) < tol || xn.is_zero() {
            let bound = rn * tmag / (1.0 - r);
            return EvalResult::new(acc, bound, Method::ClosedForm).with_rounding(ctx, 3 * n + 4);
        }
        acc += &(&xn * &t);
        xn = &xn * x;
        rn *= r;
        nb = nb.add_i64(1);
        n += 1;
    }
}

/// Abel limit Φ(x) = lim_{r->1-} Φ(r x) with polynomial extrapolation in 1 - r.
///
/// The bound is four times the spread of the last two extrapolation levels.
pub(crate) fn lerch_abel(
    x: &HPComplex,
    s: &Exponent,
    b: &HPComplex,
    ctx: &PrecisionContext,
) -> Result<EvalResult, SpecFunError> {
    let prec = ctx.prec();
    let levels: Vec<u32> = (3..=9).collect();
    let hs: Vec<f64> = levels.iter().map(|j| 2f64.powi(-(*j as i32))).collect();
    let rs: Vec<HPComplex> = hs
        .iter()
        .map(|h| x.scale(&Float::with_val(prec, 1.0 - h)))
        .collect();
    let tol = 1e-30f64;
    let h_min = *hs.last().expect("levels");
    let n_max = ((tol.ln()) / (1.0 - h_min).ln()).ceil() as usize;
    let mut sums = vec![HPComplex::zero(prec); rs.len()];
    let mut powers = vec![HPComplex::one(prec); rs.len()];
    let mut nb = b.clone();
    for _ in 0..n_max {
        let t = s.pow_neg(&nb);
        for (acc, (p, r)) in sums.iter_mut().zip(powers.iter_mut().zip(rs.iter())) {
            *acc += &(&*p * &t);
            *p = &*p * r;
        }
        nb = nb.add_i64(1);
    }
    // Neville extrapolation to h = 0.
    let h_float: Vec<Float> = hs.iter().map(|h| Float::with_val(prec, *h)).collect();
    let mut table = sums.clone();
    let mut last_two = (HPComplex::zero(prec), HPComplex::zero(prec));
    for level in 1..table.len() {
        for i in (level..table.len()).rev() {
            let hi = &h_float[i];
            let hl = &h_float[i - level];
            let num = &table[i].scale(hl) - &table[i - 1].scale(hi);
            let den = Float::with_val(prec, hl - hi);
            table[i] = num.scale(&Float::with_val(prec, den.recip_ref()));
        }
        last_two = (last_two.1.clone(), table[table.len() - 1].clone());
    }
    let value = table[table.len() - 1].clone();
    let spread = (&last_two.0 - &last_two.1).abs_f64();
    let res = EvalResult::new(value, 4.0 * spread + 1e-28, Method::DirectTail);
    res.check_finite("lerch abel")
}

/// Li(s; x) = x Φ(x, s, 1).
pub fn polylog(s: i64, x: &HPComplex, ctx: &PrecisionContext) -> Result<EvalResult, SpecFunError> {
    if s < 1 {
        return Err(SpecFunError::Divergent(format!("polylog order {s} < 1")));
    }
    let prec = ctx.prec();
    let x = x.with_prec(prec);
    if x.is_zero() {
        return Ok(EvalResult::zero(prec));
    }
    if s == 1 && detect_root_of_unity(&x).map(|r| r.f) == Some(1) {
        return Err(SpecFunError::Divergent("Li(1; 1)".into()));
    }
    let phi = lerch_phi(&x, &Float::with_val(prec, s), &HPComplex::one(prec), ctx)?;
    Ok(phi.times(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn detection() {
        let p = ctx().prec();
        assert_eq!(detect_root_of_unity(&HPComplex::one(p)), Some(RootOfUnity { f: 1, a: 0 }));
        assert_eq!(detect_root_of_unity(&HPComplex::i(p)), Some(RootOfUnity { f: 4, a: 1 }));
        let w = HPComplex::root_of_unity(12, 5, p);
        assert_eq!(detect_root_of_unity(&w), Some(RootOfUnity { f: 12, a: 5 }));
        assert_eq!(detect_root_of_unity(&HPComplex::from_f64(0.5, 0.0, p)), None);
    }

    #[test]
    fn small_cases() {
        let c = ctx();
        let p = c.prec();
        let v = lerch_phi(&HPComplex::zero(p), &Float::with_val(p, 2), &HPComplex::from_i64(3, p), &c).unwrap();
        assert!((&v.value - &HPComplex::from_rational(&rug::Rational::from((1, 9)), p)).abs_f64() < 1e-55);
        // Φ(-1, 2, 1) = π²/12
        let v = lerch_phi(&HPComplex::from_i64(-1, p), &Float::with_val(p, 2), &HPComplex::one(p), &c).unwrap();
        let pi2 = Float::with_val(p, Constant::Pi).square() / 12u32;
        assert!((v.value.re.clone() - pi2).abs() < 1e-50);
        let e = lerch_phi(&HPComplex::one(p), &Float::with_val(p, 1), &HPComplex::one(p), &c);
        assert!(matches!(e, Err(SpecFunError::Divergent(_))));
    }

    #[test]
    fn polylog_values() {
        let c = ctx();
        let p = c.prec();
        let half = HPComplex::from_f64(0.5, 0.0, p);
        let li1 = polylog(1, &half, &c).unwrap();
        let ln2 = Float::with_val(p, Constant::Log2);
        assert!((li1.value.re.clone() - ln2).abs() < 1e-55);
        assert!(polylog(1, &HPComplex::one(p), &c).is_err());
        // Li(1; x) at a root of unity uses the ψ path: -ln(1 - x).
        let w = HPComplex::root_of_unity(3, 1, p);
        let li = polylog(1, &w, &c).unwrap();
        let expect = -(&HPComplex::one(p) - &w).ln();
        assert!((&li.value - &expect).abs_f64() < 1e-50);
    }

    #[test]
    fn abel_fallback_matches_log() {
        let c = PrecisionContext::new(30, 10, 15).unwrap();
        let p = c.prec();
        let theta = Float::with_val(p, 1.0); // one radian: not a root of unity
        let (s, co) = theta.sin_cos(Float::new(p));
        let x = HPComplex::new(co, s);
        assert!(detect_root_of_unity(&x).is_none());
        let v = lerch_phi(&x, &Float::with_val(p, 1), &HPComplex::one(p), &c).unwrap();
        let expect = &(-(&HPComplex::one(p) - &x).ln()) / &x;
        assert_eq!(v.method, Method::DirectTail);
        assert!((&v.value - &expect).abs_f64() < 1e-12);
    }
}
