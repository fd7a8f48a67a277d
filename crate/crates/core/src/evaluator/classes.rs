//! Residue-class splitting: every double or single sum becomes a finite
//! combination of sums with unimodular-free phases and rational shifts.

use super::params::IdentityParams;
use super::EvalError;
use crate::specfun::{gcd, Character, Exponent, HPComplex, RootOfUnity};
use crate::termlang::{Combo, DoubleSumTerm, LinearFactor, MRange, Shift, SingleSumTerm, XSel};
use rug::{Float, Rational};
use std::collections::BTreeMap;

/// Per-step phase of a summation variable after splitting.
#[derive(Debug, Clone)]
pub(crate) enum Phase {
    One,
    /// |z| < 1.
    Geo(HPComplex),
}

impl Phase {
    pub(crate) fn is_one(&self) -> bool {
        matches!(self, Phase::One)
    }

    pub(crate) fn value(&self, prec: u32) -> HPComplex {
        match self {
            Phase::One => HPComplex::one(prec),
            Phase::Geo(z) => z.clone(),
        }
    }
}

/// (v + shift)^{-exp} with the shift already divided by the class modulus.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub shift: HPComplex,
    pub exp: Exponent,
    pub exp_q: Rational,
}

/// weight · Σ_{u,t>=0} zm^u zn^t (u+A)^{-p} (t+B)^{-q} (u+t+C)^{-r}.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    pub weight: HPComplex,
    pub zm: Phase,
    pub zn: Phase,
    pub m: Option<Chain>,
    pub n: Option<Chain>,
    pub mn: Option<Chain>,
}

/// weight · Σ_{t>=0} z^t (t + shift)^{-exp}.
#[derive(Debug, Clone)]
pub(crate) struct SingleClass {
    pub weight: HPComplex,
    pub shift: HPComplex,
}

/// Numeric parameter values at one precision.
pub(crate) struct NumEnv<'a> {
    pub prec: u32,
    pub x: Option<HPComplex>,
    pub x_root: Option<RootOfUnity>,
    pub b: Option<HPComplex>,
    pub chars: &'a BTreeMap<String, Character>,
}

impl<'a> NumEnv<'a> {
    pub(crate) fn new(params: &'a IdentityParams, prec: u32) -> NumEnv<'a> {
        NumEnv {
            prec,
            x: params.x.as_ref().map(|x| x.to_complex(prec)),
            x_root: params.x.as_ref().and_then(|x| x.root_of_unity(prec)),
            b: params.b.as_ref().map(|b| b.to_complex(prec)),
            chars: &params.chars,
        }
    }

    fn x(&self) -> Result<&HPComplex, EvalError> {
        self.x.as_ref().ok_or_else(|| EvalError::Missing("x".into()))
    }

    fn b(&self) -> Result<&HPComplex, EvalError> {
        self.b.as_ref().ok_or_else(|| EvalError::Missing("b".into()))
    }

    fn character(&self, name: &str) -> Result<&Character, EvalError> {
        self.chars.get(name).ok_or_else(|| EvalError::Missing(format!("character {name}")))
    }

    pub(crate) fn shift(&self, s: &Shift) -> Result<HPComplex, EvalError> {
        let mut v = HPComplex::from_rational(&s.c, self.prec);
        if s.b != 0 {
            v += &self.b()?.scale_i64(s.b as i64);
        }
        Ok(v)
    }

    /// x^e, exact on roots of unity.
    fn x_pow(&self, e: i64) -> Result<HPComplex, EvalError> {
        if let Some(r) = self.x_root {
            return Ok(r.pow(e).value(self.prec));
        }
        let x = self.x()?;
        if x.is_zero() {
            return match e {
                0 => Ok(HPComplex::one(self.prec)),
                e if e > 0 => Ok(HPComplex::zero(self.prec)),
                _ => Err(EvalError::Domain("negative power of x = 0".into())),
            };
        }
        Ok(x.powi(e))
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn exponent_of(q: &Rational, prec: u32) -> Exponent {
    if *q.denom() == 1 {
        if let Some(k) = q.numer().to_i64() {
            return Exponent::Int(k);
        }
    }
    Exponent::Real(Float::with_val(prec, q))
}

/// Q^{-e}.
fn modulus_power(q: u64, e: &Rational, prec: u32) -> HPComplex {
    HPComplex::from_real(Float::with_val(prec, q)).pow_rational(&Rational::from(-e))
}

/// Step phase for a sum twisted by x^{mult·n} after splitting by q.
fn step_phase(env: &NumEnv, mult: i64, q: u64, allow_unit: bool) -> Result<Phase, EvalError> {
    if mult == 0 || env.x_root.is_some() {
        return Ok(Phase::One);
    }
    let x = env.x()?;
    let z = x.powi(mult * q as i64);
    let r = z.abs_f64();
    if r < 1.0 - 1e-12 || allow_unit {
        Ok(Phase::Geo(z))
    } else {
        Err(EvalError::Uncatalogued(
            "double sums with |x| = 1 need x to be an exact root of unity".into(),
        ))
    }
}

pub(crate) fn m_start(range: MRange, env: &NumEnv) -> Result<i64, EvalError> {
    Ok(match range {
        MRange::GeOne => 1,
        MRange::GeZero => 0,
        MRange::GtB => {
            let b = env.b()?;
            let fl = b.re.clone().floor();
            fl.to_integer().and_then(|i| i.to_i64()).ok_or_else(|| EvalError::Domain("b is not finite".into()))? + 1
        }
    })
}

fn chain_at(
    f: Option<&LinearFactor>,
    base: i64,
    q: u64,
    env: &NumEnv,
    prec: u32,
) -> Result<Option<Chain>, EvalError> {
    let Some(f) = f else { return Ok(None) };
    let shift = env.shift(&f.shift)?.add_i64(base);
    if !shift.re.is_sign_positive() || shift.re.is_zero() {
        return Err(EvalError::Domain(format!("factor {f} vanishes or changes sign in the summation range")));
    }
    let shift = shift.scale(&Float::with_val(prec, Float::with_val(prec, q).recip_ref()));
    Ok(Some(Chain { shift, exp: exponent_of(&f.exponent, prec), exp_q: f.exponent.clone() }))
}

/// Splits a double sum into kernels indexed by the residues of (m, n) modulo Q.
pub(crate) fn split_double(t: &DoubleSumTerm, env: &NumEnv) -> Result<Vec<Kernel>, EvalError> {
    let prec = env.prec;
    let mut q = t.cong.modulus;
    for c in &t.chars {
        q = lcm(q, env.character(&c.name)?.modulus());
    }
    let (mult_m, mult_n, x_off) = match t.xsel {
        XSel::None => (0, 0, 0),
        XSel::N(d) => (0, 1, d),
        XSel::MN(d) => (1, 1, d),
    };
    if t.xsel != XSel::None {
        env.x()?;
        if let Some(r) = env.x_root {
            q = lcm(q, r.f);
        }
    }
    let zm = step_phase(env, mult_m, q, false)?;
    let zn = step_phase(env, mult_n, q, false)?;
    let m0 = m_start(t.m_range, env)?;
    let n0 = t.n_range.start();
    let total: Rational = t.denom.iter().fold(Rational::new(), |acc, f| acc + &f.exponent);
    let scale = modulus_power(q, &total, prec);
    let qi = q as i64;
    let mut out = Vec::new();
    for i in 0..qi {
        for j in 0..qi {
            let (m, n) = (m0 + i, n0 + j);
            if !t.cong.holds(m, n) {
                continue;
            }
            let mut w = scale.clone();
            let mut zero = false;
            for c in &t.chars {
                let arg = match c.arg {
                    Combo::M => m,
                    Combo::N => n,
                    Combo::MN => m + n,
                };
                let v = env.character(&c.name)?.value(arg);
                if v.is_zero() {
                    zero = true;
                    break;
                }
                w = &w * &v.to_complex(prec);
            }
            if zero {
                continue;
            }
            if t.xsel != XSel::None {
                let xp = env.x_pow(mult_m * m + mult_n * n + x_off)?;
                if xp.is_zero() {
                    continue;
                }
                w = &w * &xp;
            }
            out.push(Kernel {
                weight: w,
                zm: zm.clone(),
                zn: zn.clone(),
                m: chain_at(t.factor(Combo::M), m, q, env, prec)?,
                n: chain_at(t.factor(Combo::N), n, q, env, prec)?,
                mn: chain_at(t.factor(Combo::MN), m + n, q, env, prec)?,
            });
        }
    }
    Ok(out)
}

/// A single sum split by residues: the common phase z, exponent and classes.
pub(crate) struct SingleSplit {
    pub z: HPComplex,
    pub modulus: u64,
    pub exp: Rational,
    pub classes: Vec<SingleClass>,
}

pub(crate) fn split_single(t: &SingleSumTerm, env: &NumEnv) -> Result<SingleSplit, EvalError> {
    let prec = env.prec;
    let mut q = 1u64;
    for c in &t.chars {
        q = lcm(q, env.character(c)?.modulus());
    }
    if let Some(c) = &t.csc {
        let two_m = 2 * c.modulus;
        let period = if c.a == 0 { 1 } else { two_m / gcd(c.a.unsigned_abs() % two_m, two_m) };
        q = lcm(q, period);
    }
    let mult = t.xpow.map(|p| p.mult).unwrap_or(0);
    if t.xpow.is_some() {
        env.x()?;
        if let Some(r) = env.x_root {
            q = lcm(q, r.pow(mult).f);
        }
    }
    let z = step_phase(env, mult, q, true)?.value(prec);
    let n0 = t.n_range.start();
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let mut classes = Vec::new();
    for j in 0..q as i64 {
        let n = n0 + j;
        let mut w = HPComplex::one(prec);
        let mut zero = false;
        for c in &t.chars {
            let v = env.character(c)?.value(n);
            if v.is_zero() {
                zero = true;
                break;
            }
            w = &w * &v.to_complex(prec);
        }
        if zero {
            continue;
        }
        if let Some(c) = &t.csc {
            let k = c.a * n + c.b;
            if k.rem_euclid(c.modulus as i64) == 0 {
                continue;
            }
            let theta = Float::with_val(prec, &pi * k) / c.modulus;
            w = w.scale(&Float::with_val(prec, theta.sin().recip_ref()));
        }
        if let Some(p) = t.xpow {
            let xp = env.x_pow(p.mult * n + p.offset)?;
            if xp.is_zero() {
                continue;
            }
            w = &w * &xp;
        }
        let shift = env.shift(&t.factor.shift)?.add_i64(n);
        if !shift.re.is_sign_positive() || shift.re.is_zero() {
            return Err(EvalError::Domain(format!("factor {} vanishes in the summation range", t.factor)));
        }
        let shift = shift.scale(&Float::with_val(prec, Float::with_val(prec, q).recip_ref()));
        classes.push(SingleClass { weight: w, shift });
    }
    Ok(SingleSplit { z, modulus: q, exp: t.factor.exponent.clone(), classes })
}
