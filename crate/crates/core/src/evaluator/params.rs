use super::EvalError;
use crate::specfun::{detect_root_of_unity, Character, HPComplex, RootOfUnity};
use crate::termlang::{check_bindings, Bindings, IdentitySpec, ParamKind};
use rug::{Integer, Rational};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// A complex parameter value known exactly: rational parts or a root of unity.
#[derive(Debug, Clone, PartialEq)]
pub enum CValue {
    Exact { re: Rational, im: Rational },
    Root(RootOfUnity),
}

impl CValue {
    pub fn real(q: impl Into<Rational>) -> CValue {
        CValue::Exact { re: q.into(), im: Rational::new() }
    }

    pub fn complex(re: impl Into<Rational>, im: impl Into<Rational>) -> CValue {
        CValue::Exact { re: re.into(), im: im.into() }
    }

    /// e^{2πi a/f}.
    pub fn root(f: u64, a: i64) -> CValue {
        let f = f.max(1);
        let a = a.rem_euclid(f as i64) as u64;
        let g = crate::specfun::gcd(a, f);
        CValue::Root(RootOfUnity { f: f / g, a: a / g })
    }

    pub fn to_complex(&self, prec: u32) -> HPComplex {
        match self {
            CValue::Exact { re, im } => {
                HPComplex::new(rug::Float::with_val(prec, re), rug::Float::with_val(prec, im))
            }
            CValue::Root(r) => r.value(prec),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            CValue::Exact { im, .. } => *im == 0,
            CValue::Root(r) => r.f <= 2,
        }
    }

    /// The real part when the value is an exact rational.
    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            CValue::Exact { re, im } if *im == 0 => Some(re.clone()),
            CValue::Root(r) if r.f == 1 => Some(Rational::from(1)),
            CValue::Root(r) if r.f == 2 => Some(Rational::from(-1)),
            _ => None,
        }
    }

    pub fn abs_f64(&self) -> f64 {
        match self {
            CValue::Exact { re, im } => re.to_f64().hypot(im.to_f64()),
            CValue::Root(_) => 1.0,
        }
    }

    /// Exact root-of-unity structure, if any.
    pub fn root_of_unity(&self, prec: u32) -> Option<RootOfUnity> {
        match self {
            CValue::Root(r) => Some(*r),
            CValue::Exact { re, im } => {
                let on_circle = Rational::from(re * re) + Rational::from(im * im) == 1;
                if on_circle {
                    detect_root_of_unity(&self.to_complex(prec))
                } else {
                    None
                }
            }
        }
    }

    pub fn add_rational(&self, h: &Rational) -> Result<CValue, EvalError> {
        match self {
            CValue::Exact { re, im } => Ok(CValue::Exact { re: Rational::from(re + h), im: im.clone() }),
            CValue::Root(r) => match self.as_rational() {
                Some(q) => Ok(CValue::real(q + h)),
                None => Err(EvalError::Domain(format!("cannot shift root of unity ru({},{})", r.f, r.a))),
            },
        }
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((a, b)) = s.split_once('/') {
        let num = parse_rational(a)?;
        let den = parse_rational(b)?;
        if den == 0 {
            return None;
        }
        return Some(num / den);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mant, exp) = match body.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut q = Rational::from(Integer::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?);
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from(10);
    q *= crate::termlang::rational_pow(&ten, scale);
    Some(if neg { -q } else { q })
}

impl FromStr for CValue {
    type Err = String;

    /// Accepts `1/2`, `0.25`, `-1`, `i`, `0.5i`, `1/2-3/4i`, `ru(3,1)`.
    fn from_str(text: &str) -> Result<CValue, String> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || format!("cannot parse complex value '{text}'");
        if let Some(inner) = s.strip_prefix("ru(").and_then(|r| r.strip_suffix(')')) {
            let (f, a) = inner.split_once(',').ok_or_else(bad)?;
            let f: u64 = f.parse().map_err(|_| bad())?;
            let a: i64 = a.parse().map_err(|_| bad())?;
            if f == 0 {
                return Err(format!("root-of-unity order must be positive in '{text}'"));
            }
            return Ok(CValue::root(f, a));
        }
        let Some(body) = s.strip_suffix('i') else {
            return parse_rational(&s).map(CValue::real).ok_or_else(bad);
        };
        // Split "re±im" at the last sign that is not part of an exponent or the leading sign.
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            if (bytes[idx] == b'+' || bytes[idx] == b'-') && !matches!(bytes[idx - 1], b'e' | b'E' | b'/') {
                split = Some(idx);
                break;
            }
        }
        let (re_s, im_s) = match split {
            Some(idx) => (&body[..idx], &body[idx..]),
            None => ("0", body),
        };
        let im = match im_s {
            "" | "+" => Rational::from(1),
            "-" => Rational::from(-1),
            other => parse_rational(other).ok_or_else(bad)?,
        };
        let re = parse_rational(re_s).ok_or_else(bad)?;
        Ok(CValue::Exact { re, im })
    }
}

impl fmt::Display for CValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CValue::Root(r) => write!(f, "ru({},{})", r.f, r.a),
            CValue::Exact { re, im } if *im == 0 => write!(f, "{re}"),
            CValue::Exact { re, im } if *re == 0 => write!(f, "{im}i"),
            CValue::Exact { re, im } if *im < 0 => write!(f, "{re}{im}i"),
            CValue::Exact { re, im } => write!(f, "{re}+{im}i"),
        }
    }
}

/// Values for the parameters of one identity instance.
#[derive(Debug, Clone, Default)]
pub struct IdentityParams {
    pub values: Bindings,
    pub x: Option<CValue>,
    pub b: Option<CValue>,
    pub chars: BTreeMap<String, Character>,
}

impl IdentityParams {
    pub fn new() -> IdentityParams {
        IdentityParams::default()
    }

    pub fn with(mut self, name: &str, v: impl Into<Rational>) -> IdentityParams {
        self.values.insert(name.to_string(), v.into());
        self
    }

    pub fn with_x(mut self, x: CValue) -> IdentityParams {
        self.x = Some(x);
        self
    }

    pub fn with_b(mut self, b: CValue) -> IdentityParams {
        self.b = Some(b);
        self
    }

    pub fn with_char(mut self, name: &str, chi: Character) -> IdentityParams {
        self.chars.insert(name.to_string(), chi);
        self
    }

    /// `name=value` pairs in declaration order of the identity, for reports.
    pub fn describe(&self, spec: &IdentitySpec) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for p in &spec.params {
            let v = match &p.kind {
                ParamKind::Int { .. } | ParamKind::Real { .. } => self.values.get(&p.name).map(|v| v.to_string()),
                ParamKind::Disk | ParamKind::FixedX(_) => self.x.as_ref().map(|x| x.to_string()),
                ParamKind::UnitInterval => self.b.as_ref().map(|b| b.to_string()),
                ParamKind::Char { .. } => self.chars.get(&p.name).map(|c| c.name().to_string()),
            };
            if let Some(v) = v {
                out.push((p.name.clone(), v));
            }
        }
        out
    }

    /// Fills pinned parameters and checks every value against its declared domain.
    /// `relaxed_b` admits complex b with Re b > 0 and b > 1 (derivative stencils).
    pub fn resolve(&self, spec: &IdentitySpec, relaxed_b: bool) -> Result<IdentityParams, EvalError> {
        let mut out = self.clone();
        check_bindings(spec, &out.values)?;
        for p in &spec.params {
            match &p.kind {
                ParamKind::Disk => {
                    let x = out.x.as_ref().ok_or_else(|| EvalError::Missing("x".into()))?;
                    if x.abs_f64() > 1.0 + 1e-15 {
                        return Err(EvalError::Domain(format!("|x| = {} > 1", x.abs_f64())));
                    }
                    if let CValue::Exact { re, im } = x {
                        if Rational::from(re * re) + Rational::from(im * im) > 1 {
                            return Err(EvalError::Domain(format!("|x| > 1 for x = {x}")));
                        }
                    }
                }
                ParamKind::FixedX(v) => match &out.x {
                    None => out.x = Some(CValue::real(v.clone())),
                    Some(x) if x.as_rational().as_ref() == Some(v) => {}
                    Some(x) => return Err(EvalError::Domain(format!("{} requires x = {v}, got {x}", spec.id))),
                },
                ParamKind::UnitInterval => {
                    let b = out.b.as_ref().ok_or_else(|| EvalError::Missing("b".into()))?;
                    check_b(b, relaxed_b)?;
                }
                ParamKind::Char { fixed } => {
                    if !out.chars.contains_key(&p.name) {
                        let chi = fixed
                            .as_deref()
                            .and_then(Character::builtin)
                            .ok_or_else(|| EvalError::Missing(format!("character {}", p.name)))?;
                        out.chars.insert(p.name.clone(), chi);
                    }
                    if let (Some(name), Some(chi)) = (fixed, out.chars.get(&p.name)) {
                        if chi.name() != name {
                            return Err(EvalError::Domain(format!("{} is pinned to {name}", p.name)));
                        }
                    }
                }
                ParamKind::Int { .. } | ParamKind::Real { .. } => {}
            }
        }
        Ok(out)
    }
}

fn check_b(b: &CValue, relaxed: bool) -> Result<(), EvalError> {
    match b.as_rational() {
        Some(q) if q > 0 && q <= 1 => Ok(()),
        Some(q) if relaxed && q > 0 => Ok(()),
        Some(q) => Err(EvalError::Domain(format!("b outside (0,1]: b = {q}"))),
        None if relaxed => match b {
            CValue::Exact { re, .. } if *re > 0 => Ok(()),
            _ => Err(EvalError::Domain(format!("b = {b} needs Re b > 0"))),
        },
        None => Err(EvalError::Domain(format!("b outside (0,1]: b = {b} is not real"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_complex_syntax() {
        let half = Rational::from((1, 2));
        assert_eq!("1/2".parse::<CValue>().unwrap(), CValue::real(half.clone()));
        assert_eq!("0.5".parse::<CValue>().unwrap(), CValue::real(half.clone()));
        assert_eq!("-1".parse::<CValue>().unwrap(), CValue::real(-1));
        assert_eq!("i".parse::<CValue>().unwrap(), CValue::complex(0, 1));
        assert_eq!("-i".parse::<CValue>().unwrap(), CValue::complex(0, -1));
        assert_eq!("0.5+0.5i".parse::<CValue>().unwrap(), CValue::complex(half.clone(), half.clone()));
        assert_eq!("1/2-3/4i".parse::<CValue>().unwrap(), CValue::complex(half.clone(), Rational::from((-3, 4))));
        assert_eq!("1e-2".parse::<CValue>().unwrap(), CValue::real(Rational::from((1, 100))));
        assert_eq!("ru(3,1)".parse::<CValue>().unwrap(), CValue::root(3, 1));
        assert_eq!("ru(4,2)".parse::<CValue>().unwrap(), CValue::root(2, 1));
        assert!("1/0".parse::<CValue>().is_err());
        assert!("abc".parse::<CValue>().is_err());
        assert!("ru(0,1)".parse::<CValue>().is_err());
    }

    #[test]
    fn exact_roots_are_recognized() {
        let i = CValue::complex(0, 1);
        assert_eq!(i.root_of_unity(128), Some(RootOfUnity { f: 4, a: 1 }));
        assert_eq!(CValue::real(Rational::from((1, 2))).root_of_unity(128), None);
        assert_eq!(CValue::root(6, 2).to_string(), "ru(3,1)");
    }
}
