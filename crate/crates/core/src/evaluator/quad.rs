//! Exp-sinh quadrature on a half line.

use crate::specfun::HPComplex;
use rug::float::Constant;
use rug::Float;

const MAX_LEVEL: u32 = 7;
const TAU_MAX: f64 = 7.0;

/// ∫_0^∞ f(a + v) dv for integrands decaying at least like v^{-1-δ}.
///
/// The step is halved until two consecutive levels agree to `tol` relative to
/// the value; the returned estimate is that difference.
pub(crate) fn exp_sinh<F>(a: &HPComplex, scale: f64, f: F, tol: f64) -> (HPComplex, f64)
where
    F: Fn(&HPComplex) -> HPComplex,
{
    let prec = a.prec();
    let half_pi = Float::with_val(prec, Constant::Pi) / 2u32;
    let scale = Float::with_val(prec, scale.max(1e-6));
    let node = |tau: f64| -> HPComplex {
        let t = Float::with_val(prec, tau);
        let e = Float::with_val(prec, t.sinh_ref()) * &half_pi;
        let e = e.exp() * &scale;
        let w = Float::with_val(prec, t.cosh_ref()) * &half_pi * &e;
        let v = a.add_real(&e);
        f(&v).scale(&w)
    };
    // Sums node(j·h) for j = first, first+step, ... until contributions vanish.
    let sweep = |h: f64, first: i64, step: i64, ref_mag: f64| -> HPComplex {
        let mut sum = HPComplex::zero(prec);
        let mut small = 0;
        let mut j = first;
        loop {
            let tau = j as f64 * h;
            if tau.abs() > TAU_MAX {
                break;
            }
            let t = node(tau);
            let mag = t.abs_f64();
            sum += &t;
            if !mag.is_finite() {
                break;
            }
            let floor = tol * 1e-3 * ref_mag.max(sum.abs_f64()).max(f64::MIN_POSITIVE);
            if mag < floor {
                small += 1;
                if small >= 2 {
                    break;
                }
            } else {
                small = 0;
            }
            j += step;
        }
        sum
    };
    let mut h = 0.5f64;
    let mut raw = node(0.0);
    raw += &sweep(h, 1, 1, 0.0);
    raw += &sweep(h, -1, -1, 0.0);
    let mut estimate = raw.scale(&Float::with_val(prec, h));
    let mut err = f64::INFINITY;
    for _ in 1..=MAX_LEVEL {
        h /= 2.0;
        let mag = raw.abs_f64();
        // The new nodes are the odd multiples of the halved step.
        raw += &sweep(h, 1, 2, mag);
        raw += &sweep(h, -1, -2, mag);
        let next = raw.scale(&Float::with_val(prec, h));
        err = (&next - &estimate).abs_f64();
        estimate = next;
        if err <= tol * estimate.abs_f64().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    (estimate, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebraic_decay() {
        let p = 160;
        // ∫_1^∞ v^{-2} dv = 1, ∫_1^∞ v^{-3/2} dv = 2.
        let a = HPComplex::from_i64(1, p);
        let (v, e) = exp_sinh(&a, 1.0, |v| v.powi(-2), 1e-25);
        assert!((v.re.to_f64() - 1.0).abs() < 1e-24, "{v:?} {e}");
        let (v, _) = exp_sinh(&a, 1.0, |v| v.pow_real(&Float::with_val(p, -1.5)), 1e-25);
        assert!((v.re.to_f64() - 2.0).abs() < 1e-24);
        // ∫_3^∞ dv/(v(v+1)) = ln(4/3)
        let a = HPComplex::from_i64(3, p);
        let (v, _) = exp_sinh(&a, 3.0, |v| (v * &v.add_i64(1)).recip(), 1e-25);
        assert!((v.re.to_f64() - (4.0f64 / 3.0).ln()).abs() < 1e-15);
    }
}
