use super::hurwitz::{digamma, hurwitz_zeta};
use super::lerch::gcd;
use super::{EvalResult, HPComplex, Method, PrecisionContext, SpecFunError};
use rug::{Float, Rational};
use std::fmt;

/// A value of a Dirichlet character: zero or e^{2πi q} for a rational q in [0, 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CharValue {
    Zero,
    Root(Rational),
}

impl CharValue {
    fn unit(q: Rational) -> CharValue {
        let (n, d) = q.into_numer_denom();
        let n = n.modulo(&d);
        CharValue::Root(Rational::from((n, d)))
    }

    fn mul(&self, o: &CharValue) -> CharValue {
        match (self, o) {
            (CharValue::Root(a), CharValue::Root(b)) => CharValue::unit(Rational::from(a + b)),
            _ => CharValue::Zero,
        }
    }

    fn conj(&self) -> CharValue {
        match self {
            CharValue::Zero => CharValue::Zero,
            CharValue::Root(q) => CharValue::unit(Rational::from(-q)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, CharValue::Zero)
    }

    pub fn to_complex(&self, prec: u32) -> HPComplex {
        match self {
            CharValue::Zero => HPComplex::zero(prec),
            CharValue::Root(q) => {
                let f = q.denom().to_u64().expect("small character order");
                let a = q.numer().to_i64().expect("small character order");
                HPComplex::root_of_unity(f, a, prec)
            }
        }
    }
}

/// Dirichlet character modulo f stored as exact values on residues 0..f.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Character {
    modulus: u64,
    values: Vec<CharValue>,
    is_trivial: bool,
    name: String,
}

impl Character {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_trivial(&self) -> bool {
        self.is_trivial
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Principal: every unit maps to 1.
    pub fn is_principal(&self) -> bool {
        self.values.iter().all(|v| match v {
            CharValue::Zero => true,
            CharValue::Root(q) => *q == 0,
        })
    }

    pub fn value(&self, n: i64) -> &CharValue {
        &self.values[n.rem_euclid(self.modulus as i64) as usize]
    }

    pub fn value_complex(&self, n: i64, prec: u32) -> HPComplex {
        self.value(n).to_complex(prec)
    }

    pub fn conj(&self) -> Character {
        Character {
            modulus: self.modulus,
            values: self.values.iter().map(CharValue::conj).collect(),
            is_trivial: self.is_trivial,
            name: format!("conj({})", self.name),
        }
    }

    /// Real-valued table such as [0, 1, -1]; each entry must be 0 or ±1.
    pub fn from_real_table(name: &str, table: &[i64]) -> Result<Character, SpecFunError> {
        let vals = table
            .iter()
            .map(|v| match v {
                0 => Ok(CharValue::Zero),
                1 => Ok(CharValue::Root(Rational::new())),
                -1 => Ok(CharValue::Root(Rational::from((1, 2)))),
                other => Err(SpecFunError::Character(format!("{other} is not a root of unity"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        validate(name, vals)
    }

    pub fn chi0() -> Character {
        Character::from_real_table("chi0", &[1]).expect("valid built-in")
    }

    pub fn chi3() -> Character {
        Character::from_real_table("chi3", &[0, 1, -1]).expect("valid built-in")
    }

    pub fn chi4() -> Character {
        Character::from_real_table("chi4", &[0, 1, 0, -1]).expect("valid built-in")
    }

    pub fn named(mut self, name: &str) -> Character {
        self.name = name.to_string();
        self
    }

    pub fn builtin(name: &str) -> Option<Character> {
        match name {
            "chi0" => Some(Self::chi0()),
            "chi3" => Some(Self::chi3()),
            "chi4" => Some(Self::chi4()),
            _ => None,
        }
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

fn root_from_f64(re: f64, im: f64, modulus: u64) -> Result<CharValue, SpecFunError> {
    let mag = re.hypot(im);
    if mag < 1e-9 {
        return Ok(CharValue::Zero);
    }
    if (mag - 1.0).abs() > 1e-9 {
        return Err(SpecFunError::Character(format!("|{re}+{im}i| is neither 0 nor 1")));
    }
    let turns = im.atan2(re) / std::f64::consts::TAU;
    for q in 1..=modulus.max(2) {
        let t = turns * q as f64;
        if (t - t.round()).abs() < 1e-9 {
            let a = (t.round() as i64).rem_euclid(q as i64);
            return Ok(CharValue::unit(Rational::from((a, q as i64))));
        }
    }
    Err(SpecFunError::Character(format!("{re}+{im}i is not a root of unity of order <= {modulus}")))
}

fn validate(name: &str, values: Vec<CharValue>) -> Result<Character, SpecFunError> {
    let f = values.len() as u64;
    if f == 0 {
        return Err(SpecFunError::Character("empty table".into()));
    }
    let one = CharValue::Root(Rational::new());
    if values[1 % f as usize] != one {
        return Err(SpecFunError::Character("χ(1) must equal 1".into()));
    }
    for a in 0..f {
        for b in a..f {
            let ab = ((a * b) % f) as usize;
            if values[ab] != values[a as usize].mul(&values[b as usize]) {
                return Err(SpecFunError::Character(format!(
                    "multiplicativity fails: χ({a})·χ({b}) ≠ χ({ab}) mod {f}"
                )));
            }
        }
    }
    for a in 0..f {
        let unit = gcd(a, f) == 1;
        if unit == values[a as usize].is_zero() {
            return Err(SpecFunError::Character(format!(
                "χ({a}) must be {} since gcd({a}, {f}) = {}",
                if unit { "nonzero" } else { "zero" },
                gcd(a, f)
            )));
        }
    }
    let is_trivial = f == 1;
    Ok(Character { modulus: f, values, is_trivial, name: name.to_string() })
}

/// Validates a table of complex values (re, im) indexed by residues 0..f.
pub fn make_character(f: u64, table: &[(f64, f64)]) -> Result<Character, SpecFunError> {
    if table.len() as u64 != f {
        return Err(SpecFunError::Character(format!("table has {} entries, modulus is {f}", table.len())));
    }
    let vals = table
        .iter()
        .map(|(re, im)| root_from_f64(*re, *im, f))
        .collect::<Result<Vec<_>, _>>()?;
    validate(&format!("chi_mod{f}"), vals)
}

/// τ(χ) = sum_{a=1}^{f} χ(a) e^{2πi a/f}.
pub fn gauss_sum(chi: &Character, ctx: &PrecisionContext) -> EvalResult {
    let prec = ctx.prec();
    let f = chi.modulus();
    let mut acc = HPComplex::zero(prec);
    for a in 1..=f {
        let v = chi.value(a as i64);
        if v.is_zero() {
            continue;
        }
        acc += &(&v.to_complex(prec) * &HPComplex::root_of_unity(f, a as i64, prec));
    }
    EvalResult::new(acc, 0.0, Method::ClosedForm).with_rounding(ctx, 4 * f as usize)
}

/// L(s; χ) by reduction to Hurwitz zeta (s > 1) or digamma (s = 1, nonprincipal).
pub fn dirichlet_l(s: &Float, chi: &Character, ctx: &PrecisionContext) -> Result<EvalResult, SpecFunError> {
    let prec = ctx.prec();
    let f = chi.modulus();
    let ff = Float::with_val(prec, f);
    let at_one = *s == 1;
    if *s < 1 {
        return Err(SpecFunError::Divergent(format!("L(s; χ) at s = {}", s.to_f64())));
    }
    if at_one && chi.is_principal() {
        return Err(SpecFunError::Divergent("L(1; χ) for principal χ".into()));
    }
    let mut acc = EvalResult::zero(prec);
    for a in 1..=f {
        let v = chi.value(a as i64);
        if v.is_zero() {
            continue;
        }
        let w = HPComplex::from_real(Float::with_val(prec, a) / &ff);
        let term = if at_one { digamma(&w, ctx)? } else { hurwitz_zeta(s, &w, ctx)? };
        acc.accumulate_scaled(&v.to_complex(prec), &term);
    }
    let scale = if at_one {
        HPComplex::from_real(-Float::with_val(prec, ff.recip_ref()))
    } else {
        HPComplex::from_real(ff).pow_real(&Float::with_val(prec, -s))
    };
    let mut out = acc.times(&scale);
    out.method = Method::Reduction;
    out.with_rounding(ctx, 4 * f as usize).check_finite("dirichlet_l")
}
