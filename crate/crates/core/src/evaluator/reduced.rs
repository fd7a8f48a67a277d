//! Kernels without a mixed m/n chain: the inner sum is a Lerch transcendent,
//! recurred downward, and the outer tail comes from its asymptotic expansion.

use super::classes::{Chain, Kernel, Phase, SingleSplit};
use super::EvalError;
use crate::specfun::{
    digamma, em_coefficients, em_tail, lerch_phi, EvalResult, Exponent, HPComplex, Method, PrecisionContext,
};
use rug::{Float, Integer};
use std::f64::consts::LN_10;

const MAX_OUTER: usize = 20_000;

fn exp_float(e: &Exponent, prec: u32) -> Float {
    e.to_float(prec)
}

fn exp_add(e: &Exponent, k: i64, prec: u32) -> Exponent {
    match e {
        Exponent::Int(v) => Exponent::Int(v + k),
        Exponent::Real(f) => Exponent::Real(Float::with_val(prec, f + k)),
    }
}

fn no_chain(prec: u32) -> Chain {
    Chain { shift: HPComplex::one(prec), exp: Exponent::Int(0), exp_q: 0.into() }
}

/// Σ_{n>=0} n^k y^n for k = 0..=kmax, via Stirling numbers of the second kind.
pub(crate) fn geometric_moments(y: &HPComplex, kmax: usize) -> Vec<HPComplex> {
    let prec = y.prec();
    let hi = prec + 4 * kmax as u32 + 64;
    let yh = y.with_prec(hi);
    let one_minus = (-&yh).add_i64(1);
    let w = &yh * &one_minus.recip();
    let mut w_pows = Vec::with_capacity(kmax + 2);
    let mut p = w.clone();
    for _ in 0..=kmax + 1 {
        w_pows.push(p.clone());
        p = &p * &w;
    }
    // S(n, k) rows for n = 1..=kmax+1.
    let mut row: Vec<Integer> = vec![Integer::from(0), Integer::from(1)];
    let mut out = vec![one_minus.recip().with_prec(prec)];
    let mut fact: Vec<Integer> = vec![Integer::from(1)];
    for j in 1..=kmax + 1 {
        let prev = fact[j - 1].clone();
        fact.push(prev * j as u64);
    }
    for k in 1..=kmax {
        // Advance row to n = k + 1.
        let n = k + 1;
        let mut next = vec![Integer::from(0); n + 1];
        for i in 1..=n {
            let a = if i < row.len() { Integer::from(&row[i] * i as u64) } else { Integer::new() };
            let b = if i - 1 < row.len() { row[i - 1].clone() } else { Integer::new() };
            next[i] = a + b;
        }
        row = next;
        let mut acc = HPComplex::zero(hi);
        for j in 0..=k {
            let c = Integer::from(&fact[j] * &row[j + 1]);
            acc += &w_pows[j].scale(&Float::with_val(hi, &c));
        }
        out.push(acc.with_prec(prec));
    }
    out
}

/// Σ_{w>=0} z_o^w (w+A)^{-p} Φ(z_i, r, w+C).
fn chain_sum(zo: &Phase, outer: &Chain, zi: &Phase, mn: &Chain, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    let prec = ctx.prec();
    let digits = (ctx.working_digits + ctx.guard_digits) as f64;
    let t_len = match zo {
        Phase::Geo(z) => {
            let r = z.abs_f64();
            if r == 0.0 {
                1
            } else {
                ((digits * LN_10 + 10.0) / -r.ln()).ceil() as usize + 8
            }
        }
        Phase::One => {
            let mut t = (2.0 * digits).max(50.0);
            if let Phase::Geo(y) = zi {
                let ly = -y.abs_f64().ln();
                t = t.max((1.5 * digits * LN_10 / ly).ceil());
            }
            t as usize
        }
    };
    if t_len > MAX_OUTER {
        return Err(EvalError::Uncatalogued("|x| is too close to 1 for the reduction path".into()));
    }
    let zi_val = zi.value(prec);
    let r_f = exp_float(&mn.exp, prec);
    let start = mn.shift.add_i64(t_len as i64);
    let phi_t = lerch_phi(&zi_val, &r_f, &start, ctx)?;
    // Outer weights z_o^w (w+A)^{-p}, ascending.
    let zo_val = zo.value(prec);
    let mut weights = Vec::with_capacity(t_len + 1);
    let mut zp = HPComplex::one(prec);
    let has_outer = !matches!(outer.exp, Exponent::Int(0));
    for w in 0..=t_len {
        let pw = if has_outer { outer.exp.pow_neg(&outer.shift.add_i64(w as i64)) } else { HPComplex::one(prec) };
        weights.push(&zp * &pw);
        if !zo.is_one() {
            zp = &zp * &zo_val;
        }
    }
    let mut phi = phi_t.value.clone();
    let mut sum = HPComplex::zero(prec);
    let mut weight_mass = 0.0;
    for w in (0..t_len).rev() {
        phi = &mn.exp.pow_neg(&mn.shift.add_i64(w as i64)) + &(&zi_val * &phi);
        sum += &(&weights[w] * &phi);
        weight_mass += weights[w].abs_f64();
    }
    let mut bound = phi_t.abs_error_bound * weight_mass;
    let mut method = Method::Reduction;
    match zo {
        Phase::Geo(z) => {
            let r = z.abs_f64();
            bound += 2.0 * weights[t_len].abs_f64() * phi_t.value.abs_f64() / (1.0 - r);
        }
        Phase::One => {
            let (tail, tb) = asymptotic_tail(outer, has_outer, zi, mn, &start, sum.abs_f64(), ctx)?;
            sum += &tail;
            bound += tb;
            method = Method::Hybrid;
        }
    }
    Ok(EvalResult::new(sum, bound, method).with_rounding(ctx, 8 * t_len + 64))
}

/// Σ_{w>=T} (w+A)^{-p} Φ(z_i, r, w+C), expanding Φ and (w+A)^{-p} in powers of 1/(w+C).
fn asymptotic_tail(
    outer: &Chain,
    has_outer: bool,
    zi: &Phase,
    mn: &Chain,
    start: &HPComplex,
    scale: f64,
    ctx: &PrecisionContext,
) -> Result<(HPComplex, f64), EvalError> {
    let prec = ctx.prec();
    let tol = ctx.eps() * scale.max(1e-300);
    let kmax = 4 * (ctx.working_digits + ctx.guard_digits) as usize;
    let r = exp_float(&mn.exp, prec);
    let (alpha, eps): (Vec<HPComplex>, i64) = match zi {
        Phase::One => {
            if r <= 1 {
                return Err(EvalError::Divergent("inner Hurwitz sum with exponent <= 1".into()));
            }
            let coefs = em_coefficients(kmax / 2 + 1, prec);
            let mut a = vec![HPComplex::zero(prec); kmax + 1];
            a[0] = HPComplex::from_real(Float::with_val(prec, Float::with_val(prec, &r - 1u32).recip_ref()));
            a[1] = HPComplex::from_real(Float::with_val(prec, 0.5));
            // (r)_{2j-1}
            let mut poch = r.clone();
            for j in 1..=kmax / 2 {
                if 2 * j > kmax {
                    break;
                }
                a[2 * j] = HPComplex::from_real(Float::with_val(prec, &coefs[j - 1] * &poch));
                poch *= Float::with_val(prec, &r + (2 * j - 1) as u32);
                poch *= Float::with_val(prec, &r + (2 * j) as u32);
            }
            (a, 1)
        }
        Phase::Geo(y) => {
            let moments = geometric_moments(y, kmax);
            let mut a = Vec::with_capacity(kmax + 1);
            let mut binom = Float::with_val(prec, 1);
            for (k, mk) in moments.iter().enumerate() {
                if k > 0 {
                    binom *= Float::with_val(prec, -&r) - (k as u32 - 1);
                    binom /= k as u32;
                }
                a.push(mk.scale(&binom));
            }
            (a, 0)
        }
    };
    // β_l = binom(-p, l) δ^l with δ = A - C.
    let mut beta = vec![HPComplex::one(prec)];
    if has_outer {
        let p = exp_float(&outer.exp, prec);
        let delta = &outer.shift - &mn.shift;
        let mut c = HPComplex::one(prec);
        for l in 1..=kmax {
            c = (&c * &delta).scale(&((Float::with_val(prec, -&p) - (l as u32 - 1)) / l as u32));
            beta.push(c.clone());
        }
    }
    let base_exp = match (&outer.exp, &mn.exp) {
        (Exponent::Int(p), Exponent::Int(rr)) if has_outer => Exponent::Int(p + rr - eps),
        (Exponent::Int(0), Exponent::Int(rr)) => Exponent::Int(rr - eps),
        _ => {
            let p = if has_outer { exp_float(&outer.exp, prec) } else { Float::new(prec) };
            Exponent::Real(Float::with_val(prec, &p + &r) - eps)
        }
    };
    if exp_float(&base_exp, prec) <= 1 {
        return Err(EvalError::Divergent("outer tail exponent <= 1".into()));
    }
    let mut tail = HPComplex::zero(prec);
    let mut bound = 0.0;
    let mut small = 0;
    let mut growth = 0;
    let mut recent = [f64::INFINITY; 3];
    let mut last = 0.0;
    for k in 0..=kmax {
        let mut ck = HPComplex::zero(prec);
        for l in 0..=k.min(beta.len() - 1) {
            ck += &(&alpha[k - l] * &beta[l]);
        }
        if ck.is_zero() {
            continue;
        }
        let s = exp_add(&base_exp, k as i64, prec);
        let (z, zb) = em_tail(&s, start, ctx);
        let term = &ck * &z;
        let mag = term.abs_f64();
        bound += zb * ck.abs_f64();
        // A single small coefficient is not divergence; three rises in a row are.
        growth = if mag > recent[2] { growth + 1 } else { 0 };
        recent = [recent[1], recent[2], mag];
        if growth >= 3 && mag < 1e-3 * scale.max(1e-300) {
            last = recent.iter().copied().fold(0.0, f64::max);
            break;
        }
        tail += &term;
        last = recent.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
        if mag < tol {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    Ok((tail, bound + 2.0 * last))
}

/// Evaluates one kernel whose pure chains live on at most one variable.
pub(crate) fn eval_kernel_reduced(k: &Kernel, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    let prec = ctx.prec();
    let shifts = |c: &Chain| c.shift.with_prec(prec);
    let fix = |c: &Option<Chain>| -> Option<Chain> {
        c.as_ref().map(|c| Chain { shift: shifts(c), exp: c.exp.clone(), exp_q: c.exp_q.clone() })
    };
    let (m, n, mn) = (fix(&k.m), fix(&k.n), fix(&k.mn));
    let value = match (&m, &n, &mn) {
        (Some(_), Some(_), Some(_)) => {
            return Err(EvalError::Uncatalogued("kernel still carries both an m- and an n-chain".into()))
        }
        (_, _, None) => {
            let one = |z: &Phase, c: &Option<Chain>| -> Result<EvalResult, EvalError> {
                match c {
                    Some(c) => Ok(lerch_phi(&z.value(prec), &exp_float(&c.exp, prec), &c.shift, ctx)?),
                    None => match z {
                        Phase::Geo(z) => Ok(EvalResult::exact((-z).add_i64(1).recip())),
                        Phase::One => Err(EvalError::Divergent("free summation without decay".into())),
                    },
                }
            };
            let a = one(&k.zm, &m)?;
            let b = one(&k.zn, &n)?;
            let v = &a.value * &b.value;
            let bound = a.abs_error_bound * b.value.abs_f64() + b.abs_error_bound * a.value.abs_f64();
            EvalResult::new(v, bound, a.method.combine(b.method))
        }
        (Some(cm), None, Some(cmn)) => chain_sum(&k.zm, cm, &k.zn, cmn, ctx)?,
        (None, Some(cn), Some(cmn)) => chain_sum(&k.zn, cn, &k.zm, cmn, ctx)?,
        (None, None, Some(cmn)) => {
            let empty = no_chain(prec);
            if k.zm.is_one() && !k.zn.is_one() {
                chain_sum(&k.zn, &empty, &k.zm, cmn, ctx)?
            } else {
                chain_sum(&k.zm, &empty, &k.zn, cmn, ctx)?
            }
        }
    };
    Ok(value.times(&k.weight))
}

/// Σ over classes of weight · Q^{-e} Φ(z, e, shift); exponent 1 at z = 1 uses digamma.
pub(crate) fn eval_single_split(s: &SingleSplit, ctx: &PrecisionContext) -> Result<EvalResult, EvalError> {
    let prec = ctx.prec();
    let q = HPComplex::from_real(Float::with_val(prec, s.modulus));
    let e = Float::with_val(prec, &s.exp);
    let z_one = (&s.z - &HPComplex::one(prec)).abs_f64() < 1e-40;
    let mut acc = EvalResult::zero(prec);
    if z_one && s.exp == 1 {
        let mut total = HPComplex::zero(prec);
        for c in &s.classes {
            total += &c.weight;
            let d = digamma(&c.shift, ctx)?;
            acc.accumulate_scaled(&c.weight, &d);
        }
        if total.abs_f64() > 1e-30 {
            return Err(EvalError::Divergent("single sum with exponent 1 and non-cancelling twist".into()));
        }
        let out = acc.times(&(-q.recip()));
        return Ok(out);
    }
    for c in &s.classes {
        let v = lerch_phi(&s.z, &e, &c.shift, ctx)?;
        acc.accumulate_scaled(&c.weight, &v);
    }
    let scale = q.pow_rational(&rug::Rational::from(-&s.exp));
    Ok(acc.times(&scale).with_rounding(ctx, 4 * s.classes.len() + 4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_direct_sums() {
        let p = 128;
        let y = HPComplex::from_f64(-0.5, 0.25, p);
        let m = geometric_moments(&y, 12);
        for (k, mk) in m.iter().enumerate() {
            let mut acc = HPComplex::zero(p);
            let mut yn = HPComplex::one(p);
            for n in 0..400i64 {
                let nk = Float::with_val(p, Integer::from(Integer::u_pow_u(n as u32, k as u32)));
                acc += &yn.scale(&nk);
                yn = &yn * &y;
            }
            let rel = (&acc - mk).abs_f64() / mk.abs_f64();
            assert!(rel < 1e-12, "k={k} rel={rel}");
        }
    }
}
