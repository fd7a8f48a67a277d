//! Direct summation of a split kernel without partial fractions: geometric
//! variables are truncated, unit-phase variables are summed by Euler–Maclaurin
//! with the remainder integral done in closed form or by exp-sinh quadrature.

use super::classes::{Chain, Kernel, Phase};
use super::quad::exp_sinh;
use super::EvalError;
use crate::specfun::{em_coefficients, EvalResult, Exponent, HPComplex, Method, PrecisionContext};
use rug::Float;

const MAX_CORRECTIONS: usize = 24;
const MAX_GEOMETRIC: usize = 5000;

/// Precision and tolerance for the direct path.
pub(crate) struct DirectCtx {
    pub prec: u32,
    pub tol: f64,
    /// Terms summed directly before the inner Euler–Maclaurin tail.
    pub inner_cutoff: i64,
    /// Terms summed directly before the outer Euler–Maclaurin tail.
    pub outer_cutoff: i64,
}

impl DirectCtx {
    pub(crate) fn new(ctx: &PrecisionContext, cutoff: i64) -> DirectCtx {
        let digits = ctx.working_digits.min(30) + 10;
        let prec = ((digits as f64) * std::f64::consts::LOG2_10).ceil() as u32 + 8;
        DirectCtx { prec, tol: 1e-22, inner_cutoff: cutoff, outer_cutoff: cutoff + cutoff / 3 }
    }
}

/// Default direct-path cutoff.
pub const DEFAULT_CUTOFF: i64 = 24;

#[derive(Clone)]
struct Pow {
    shift: HPComplex,
    exp: Exponent,
    s: Float,
}

impl Pow {
    fn new(c: &Chain, prec: u32) -> Pow {
        Pow { shift: c.shift.with_prec(prec), exp: c.exp.clone(), s: c.exp.to_float(prec) }
    }

    fn at(&self, v: &HPComplex) -> HPComplex {
        self.exp.pow_neg(&(v + &self.shift))
    }

    fn raised(&self, k: i64) -> Pow {
        let exp = match &self.exp {
            Exponent::Int(e) => Exponent::Int(e + k),
            Exponent::Real(f) => Exponent::Real(Float::with_val(f.prec(), f + k)),
        };
        let s = Float::with_val(self.s.prec(), &self.s + k);
        Pow { shift: self.shift.clone(), exp, s }
    }

    fn with_shift(&self, shift: HPComplex) -> Pow {
        Pow { shift, ..self.clone() }
    }

    /// d^k/dv^k (v+a)^{-s} at v for k = 0..=n.
    fn derivatives(&self, v: &HPComplex, n: usize) -> Vec<HPComplex> {
        let prec = v.prec();
        let base = v + &self.shift;
        let inv = base.recip();
        let mut out = Vec::with_capacity(n + 1);
        let mut cur = self.exp.pow_neg(&base);
        out.push(cur.clone());
        for k in 0..n {
            // (-1)^{k+1} (s)_{k+1} (v+a)^{-s-k-1}
            let f = -Float::with_val(prec, &self.s + k as u32);
            cur = (&cur * &inv).scale(&f);
            out.push(cur.clone());
        }
        out
    }
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![1.0; i + 1];
        for j in 1..i {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

/// ∫_U^∞ (v+a1)^{-s1} (v+a2)^{-s2} dv.
fn pair_integral(u: &HPComplex, f1: &Pow, f2: &Pow, dc: &DirectCtx) -> (HPComplex, f64) {
    let prec = dc.prec;
    let x0 = u + &f1.shift;
    let y0 = u + &f2.shift;
    let sigma = Float::with_val(prec, &f1.s + &f2.s);
    // Binomial series around whichever base dominates the shift difference.
    for (other, base, d) in [(f2, &x0, &f2.shift - &f1.shift), (f1, &y0, &f1.shift - &f2.shift)] {
        let kappa = &d * &base.recip();
        if kappa.abs_f64() < 0.5 {
            let mut acc = HPComplex::zero(prec);
            let mut c = HPComplex::one(prec);
            let mut l = 0u32;
            loop {
                let den = Float::with_val(prec, &sigma - 1u32) + l;
                let term = c.scale(&Float::with_val(prec, den.recip_ref()));
                acc += &term;
                if term.abs_f64() < dc.tol * 1e-3 * acc.abs_f64() || l > 400 {
                    break;
                }
                let factor = (Float::with_val(prec, -&other.s) - l) / (l + 1);
                c = (&c * &kappa).scale(&factor);
                l += 1;
            }
            let lead = base.pow_real(&Float::with_val(prec, 1u32 - &sigma));
            return (&lead * &acc, 0.0);
        }
    }
    if let (Exponent::Int(s1), Exponent::Int(s2)) = (&f1.exp, &f2.exp) {
        return (partial_fraction_integral(&x0, &y0, *s1, *s2, &(&f2.shift - &f1.shift)), 0.0);
    }
    let scale = x0.abs_f64().max(1.0);
    exp_sinh(u, scale, |v| &f1.at(v) * &f2.at(v), dc.tol)
}

/// Closed form of ∫ X^{-s1} Y^{-s2} from X0, Y0 = X0 + D to ∞, via partial fractions.
fn partial_fraction_integral(x0: &HPComplex, y0: &HPComplex, s1: i64, s2: i64, d: &HPComplex) -> HPComplex {
    let prec = x0.prec();
    let neg_d = -d;
    let binom_neg = |s: i64, l: i64| -> Float {
        // binom(-s, l)
        let mut c = Float::with_val(prec, 1);
        for i in 0..l {
            c *= Float::with_val(prec, -s - i);
            c /= (i + 1) as u32;
        }
        c
    };
    let mut total = HPComplex::zero(prec);
    let mut c1 = HPComplex::zero(prec);
    for i in 1..=s1 {
        let l = s1 - i;
        let c = d.powi(-(s2 + l)).scale(&binom_neg(s2, l));
        if i == 1 {
            c1 = c;
        } else {
            let inv = Float::with_val(prec, Float::with_val(prec, i - 1).recip_ref());
            total += &(&x0.powi(1 - i).scale(&inv) * &c);
        }
    }
    for j in 2..=s2 {
        let l = s2 - j;
        let c = neg_d.powi(-(s1 + l)).scale(&binom_neg(s1, l));
        let inv = Float::with_val(prec, Float::with_val(prec, j - 1).recip_ref());
        total += &(&y0.powi(1 - j).scale(&inv) * &c);
    }
    total += &(&c1 * &(&y0.ln() - &x0.ln()));
    total
}

/// Σ_{v>=0} Π_i (v+a_i)^{-s_i} for one or two power factors.
fn em_sum(factors: &[Pow], dc: &DirectCtx) -> Result<(HPComplex, f64), EvalError> {
    let prec = dc.prec;
    let mut direct = HPComplex::zero(prec);
    for v in 0..dc.inner_cutoff {
        let vv = HPComplex::from_i64(v, prec);
        let mut t = HPComplex::one(prec);
        for f in factors {
            t = &t * &f.at(&vv);
        }
        direct += &t;
    }
    let u = HPComplex::from_i64(dc.inner_cutoff, prec);
    let (integral, ib) = match factors {
        [f] => {
            if f.s <= 1 {
                return Err(EvalError::Divergent("direct inner sum with exponent <= 1".into()));
            }
            let sm1 = Float::with_val(prec, &f.s - 1u32);
            (f.raised(-1).at(&u).scale(&Float::with_val(prec, sm1.recip_ref())), 0.0)
        }
        [f1, f2] => pair_integral(&u, f1, f2, dc),
        _ => unreachable!("one or two factors"),
    };
    let nder = 2 * MAX_CORRECTIONS;
    let ders: Vec<Vec<HPComplex>> = factors.iter().map(|f| f.derivatives(&u, nder)).collect();
    let binom = binomials(nder);
    let deriv = |n: usize| -> HPComplex {
        match ders.as_slice() {
            [d] => d[n].clone(),
            [d1, d2] => {
                let mut acc = HPComplex::zero(prec);
                for i in 0..=n {
                    acc += &(&d1[i] * &d2[n - i]).scale(&Float::with_val(prec, binom[n][i]));
                }
                acc
            }
            _ => unreachable!(),
        }
    };
    let mut tail = &integral + &deriv(0).scale(&Float::with_val(prec, 0.5));
    let coefs = em_coefficients(MAX_CORRECTIONS, prec);
    let mut omitted = f64::INFINITY;
    let scale = (&direct + &tail).abs_f64();
    for (j, c) in coefs.iter().enumerate() {
        let term = deriv(2 * j + 1).scale(c);
        let mag = term.abs_f64();
        if mag < dc.tol * 1e-2 * scale {
            omitted = mag;
            break;
        }
        tail -= &term;
    }
    if !omitted.is_finite() {
        return Err(EvalError::Uncatalogued("Euler–Maclaurin corrections did not converge".into()));
    }
    Ok((&direct + &tail, ib + 2.0 * omitted))
}

/// G_r(w) = Σ_v (v+B)^{-q} (v+w+C)^{-r}: the inner sum over one variable.
fn inner(chain: Option<&Pow>, mn: &Pow, w: &HPComplex, dc: &DirectCtx) -> Result<(HPComplex, f64), EvalError> {
    let moved = mn.with_shift(&mn.shift + w);
    match chain {
        Some(c) => em_sum(&[c.clone(), moved], dc),
        None => em_sum(&[moved], dc),
    }
}

/// Σ_{w>=0} z^w (w+A)^{-p} G(w) with |z| < 1, truncated.
fn geometric_outer(
    z: &HPComplex,
    outer: Option<&Pow>,
    mut g: impl FnMut(&HPComplex) -> Result<(HPComplex, f64), EvalError>,
    dc: &DirectCtx,
) -> Result<(HPComplex, f64), EvalError> {
    let prec = dc.prec;
    let r = z.abs_f64();
    let mut acc = HPComplex::zero(prec);
    let mut bound = 0.0;
    let mut zp = HPComplex::one(prec);
    let mut rw = 1.0;
    for w in 0..MAX_GEOMETRIC {
        let ww = HPComplex::from_i64(w as i64, prec);
        let (gv, gb) = g(&ww)?;
        let pv = outer.map(|p| p.at(&ww)).unwrap_or_else(|| HPComplex::one(prec));
        let term = &(&zp * &pv) * &gv;
        acc += &term;
        bound += rw * pv.abs_f64() * gb;
        let mag = term.abs_f64();
        if r == 0.0 || (mag / (1.0 - r) < dc.tol * 1e-2 * acc.abs_f64() && w > 2) {
            return Ok((acc, bound + 2.0 * mag * r / (1.0 - r)));
        }
        zp = &zp * z;
        rw *= r;
    }
    Err(EvalError::Uncatalogued("|x| is too close to 1 for direct summation".into()))
}

/// Σ_{w>=0} (w+A)^{-p} G_r(w) where G_r is the unit-phase inner sum.
fn unit_outer(outer: Option<&Pow>, chain: Option<&Pow>, mn: &Pow, dc: &DirectCtx) -> Result<(HPComplex, f64), EvalError> {
    let prec = dc.prec;
    let t0 = dc.outer_cutoff;
    let mut acc = HPComplex::zero(prec);
    let mut bound = 0.0;
    for w in 0..t0 {
        let ww = HPComplex::from_i64(w, prec);
        let (gv, gb) = inner(chain, mn, &ww, dc)?;
        let pv = outer.map(|p| p.at(&ww)).unwrap_or_else(|| HPComplex::one(prec));
        acc += &(&pv * &gv);
        bound += pv.abs_f64() * gb;
    }
    let t = HPComplex::from_i64(t0, prec);
    // ∫_T^∞ P(w) G(w) dw
    let failure: std::cell::RefCell<Option<EvalError>> = std::cell::RefCell::new(None);
    let (integral, qerr) = exp_sinh(
        &t,
        t0 as f64,
        |w| match inner(chain, mn, w, dc) {
            Ok((gv, _)) => {
                let pv = outer.map(|p| p.at(w)).unwrap_or_else(|| HPComplex::one(prec));
                &pv * &gv
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                HPComplex::zero(prec)
            }
        },
        dc.tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    // Euler–Maclaurin corrections need H^{(k)}(T) = Σ_i C(k,i) P^{(i)} G^{(k-i)},
    // with G_r^{(j)} = (-1)^j (r)_j G_{r+j}.
    let nder = 2 * 10;
    let pders = match outer {
        Some(p) => p.derivatives(&t, nder),
        None => {
            let mut v = vec![HPComplex::zero(prec); nder + 1];
            v[0] = HPComplex::one(prec);
            v
        }
    };
    let mut gders = Vec::with_capacity(nder + 1);
    let mut poch = Float::with_val(prec, 1);
    let mut gb_total = 0.0;
    for j in 0..=nder {
        let (gv, gb) = inner(chain, &mn.raised(j as i64), &t, dc)?;
        let sign = if j % 2 == 0 { 1 } else { -1 };
        gders.push(gv.scale(&Float::with_val(prec, &poch * sign)));
        gb_total += gb * poch.to_f64();
        poch *= Float::with_val(prec, &mn.s + j as u32);
    }
    let binom = binomials(nder);
    let h = |n: usize| -> HPComplex {
        let mut a = HPComplex::zero(prec);
        for i in 0..=n {
            a += &(&pders[i] * &gders[n - i]).scale(&Float::with_val(prec, binom[n][i]));
        }
        a
    };
    let mut tail = &integral + &h(0).scale(&Float::with_val(prec, 0.5));
    let coefs = em_coefficients(nder / 2, prec);
    let scale = (&acc + &tail).abs_f64();
    let mut omitted = f64::INFINITY;
    for (j, c) in coefs.iter().enumerate() {
        let term = h(2 * j + 1).scale(c);
        let mag = term.abs_f64();
        if mag < dc.tol * 1e-2 * scale {
            omitted = mag;
            break;
        }
        tail -= &term;
    }
    if !omitted.is_finite() {
        return Err(EvalError::Uncatalogued("outer Euler–Maclaurin corrections did not converge".into()));
    }
    acc += &tail;
    // Inner sums are accurate to dc.tol relative; that error carries into the integral.
    let bound = bound + qerr + 2.0 * omitted + 10.0 * dc.tol * integral.abs_f64() + 0.1 * gb_total;
    Ok((acc, bound))
}

/// Evaluates one kernel by direct summation; mixed m/n chains are allowed.
pub(crate) fn eval_kernel_direct(k: &Kernel, ctx: &PrecisionContext, cutoff: i64) -> Result<EvalResult, EvalError> {
    let dc = DirectCtx::new(ctx, cutoff);
    let prec = dc.prec;
    let pm = k.m.as_ref().map(|c| Pow::new(c, prec));
    let pn = k.n.as_ref().map(|c| Pow::new(c, prec));
    let pmn = k.mn.as_ref().map(|c| Pow::new(c, prec));
    let zm = match &k.zm {
        Phase::One => None,
        Phase::Geo(z) => Some(z.with_prec(prec)),
    };
    let zn = match &k.zn {
        Phase::One => None,
        Phase::Geo(z) => Some(z.with_prec(prec)),
    };
    let (value, bound) = match &pmn {
        None => {
            // Product of two independent single sums.
            let one = |z: &Option<HPComplex>, c: &Option<Pow>| -> Result<(HPComplex, f64), EvalError> {
                match (z, c) {
                    (Some(z), c) => geometric_outer(z, c.as_ref(), |_| Ok((HPComplex::one(prec), 0.0)), &dc),
                    (None, Some(c)) => em_sum(std::slice::from_ref(c), &dc),
                    (None, None) => Err(EvalError::Divergent("free summation without decay".into())),
                }
            };
            let (a, ab) = one(&zm, &pm)?;
            let (b, bb) = one(&zn, &pn)?;
            (&a * &b, ab * b.abs_f64() + bb * a.abs_f64())
        }
        Some(mn) => match (&zm, &zn) {
            (Some(z1), Some(z2)) => {
                // Both geometric: outer over m, inner over n also truncated.
                let inner_geo = |w: &HPComplex| -> Result<(HPComplex, f64), EvalError> {
                    let moved = mn.with_shift(&mn.shift + w);
                    geometric_outer(z2, pn.as_ref(), |t| Ok((moved.at(t), 0.0)), &dc)
                };
                geometric_outer(z1, pm.as_ref(), inner_geo, &dc)?
            }
            (Some(z1), None) => geometric_outer(z1, pm.as_ref(), |w| inner(pn.as_ref(), mn, w, &dc), &dc)?,
            (None, Some(z2)) => geometric_outer(z2, pn.as_ref(), |w| inner(pm.as_ref(), mn, w, &dc), &dc)?,
            (None, None) => unit_outer(pm.as_ref(), pn.as_ref(), mn, &dc)?,
        },
    };
    let v = value.with_prec(ctx.prec());
    // Every truncation stops at dc.tol/100 relative; a few such cuts accumulate per sum.
    let floor = 4e-2 * dc.tol * value.abs_f64();
    let res = EvalResult::new(v, bound + floor, Method::DirectTail);
    Ok(res.times(&k.weight))
}
