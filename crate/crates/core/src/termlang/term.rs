use super::TermError;
use rug::Rational;
use std::collections::BTreeMap;
use std::fmt;

/// Which summation variables a linear factor depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Combo {
    M,
    N,
    MN,
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Combo::M => "m",
            Combo::N => "n",
            Combo::MN => "m+n",
        })
    }
}

/// The affine shift c + b_coeff·b of a linear factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shift {
    pub c: Rational,
    pub b: i8,
}

pub const MAX_SHIFT_DENOMINATOR: u32 = 64;

impl Shift {
    pub fn zero() -> Shift {
        Shift { c: Rational::new(), b: 0 }
    }

    pub fn constant(c: Rational) -> Shift {
        Shift { c, b: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0 && self.b == 0
    }

    pub fn checked_add(&self, other: &Shift) -> Result<Shift, TermError> {
        let b = self.b + other.b;
        if !(-1..=1).contains(&b) {
            return Err(TermError::NonMatchingShifts(format!("b coefficient {b} outside {{-1,0,1}}")));
        }
        Ok(Shift { c: Rational::from(&self.c + &other.c), b })
    }

    pub fn validate(&self) -> Result<(), TermError> {
        if !(-1..=1).contains(&self.b) {
            return Err(TermError::Syntax { pos: None, msg: format!("coefficient of b must be -1, 0 or 1, got {}", self.b) });
        }
        if *self.c.denom() > MAX_SHIFT_DENOMINATOR {
            return Err(TermError::Syntax {
                pos: None,
                msg: format!("shift denominator {} exceeds {MAX_SHIFT_DENOMINATOR}", self.c.denom()),
            });
        }
        Ok(())
    }
}

/// Writes "+b", "-b", "+3/2" ... as the tail of a linear form.
fn write_shift(f: &mut fmt::Formatter<'_>, s: &Shift) -> fmt::Result {
    match s.b {
        1 => f.write_str("+b")?,
        -1 => f.write_str("-b")?,
        _ => {}
    }
    if s.c > 0 {
        write!(f, "+{}", s.c)?;
    } else if s.c < 0 {
        write!(f, "{}", s.c)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearFactor {
    pub combo: Combo,
    pub shift: Shift,
    pub exponent: Rational,
}

impl LinearFactor {
    pub fn new(combo: Combo, shift: Shift, exponent: impl Into<Rational>) -> LinearFactor {
        LinearFactor { combo, shift, exponent: exponent.into() }
    }

    pub fn integer_exponent(&self) -> Option<i64> {
        if *self.exponent.denom() == 1 {
            self.exponent.numer().to_i64()
        } else {
            None
        }
    }

    /// "m", "(m+n+b)" etc. without exponent.
    pub fn base_string(&self) -> String {
        if self.shift.is_zero() && self.combo != Combo::MN {
            self.combo.to_string()
        } else {
            let mut s = format!("({}", self.combo);
            let tail = ShiftTail(&self.shift).to_string();
            s.push_str(&tail);
            s.push(')');
            s
        }
    }
}

struct ShiftTail<'a>(&'a Shift);

impl fmt::Display for ShiftTail<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_shift(f, self.0)
    }
}

fn exponent_suffix(e: &Rational) -> String {
    if *e == 1 {
        String::new()
    } else if *e.denom() == 1 && *e > 0 {
        format!("^{e}")
    } else {
        format!("^({e})")
    }
}

impl fmt::Display for LinearFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.base_string(), exponent_suffix(&self.exponent))
    }
}

/// m ≡ coeff·n + offset (mod modulus); modulus 1 is no constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Congruence {
    pub modulus: u64,
    pub coeff: i64,
    pub offset: i64,
}

impl Congruence {
    pub fn none() -> Congruence {
        Congruence { modulus: 1, coeff: 0, offset: 0 }
    }

    pub fn is_trivial(&self) -> bool {
        self.modulus == 1
    }

    pub fn new(modulus: u64, coeff: i64, offset: i64) -> Result<Congruence, TermError> {
        if modulus == 0 || modulus % 2 == 0 {
            return Err(TermError::Domain(format!("congruence modulus must be odd and positive, got {modulus}")));
        }
        if modulus == 1 {
            return Ok(Congruence::none());
        }
        let m = modulus as i64;
        Ok(Congruence { modulus, coeff: coeff.rem_euclid(m), offset: offset.rem_euclid(m) })
    }

    pub fn holds(&self, m: i64, n: i64) -> bool {
        let md = self.modulus as i64;
        (m - self.coeff * n - self.offset).rem_euclid(md) == 0
    }
}

/// Written in a centered form: "m=-2n-2 mod 5".
fn congruence_string(c: &Congruence) -> String {
    let md = c.modulus as i64;
    let center = |v: i64| if v > md / 2 { v - md } else { v };
    let coeff = center(c.coeff);
    let offset = center(c.offset);
    let mut s = String::from("m=");
    match coeff {
        0 => {}
        1 => s.push('n'),
        -1 => s.push_str("-n"),
        k => s.push_str(&format!("{k}n")),
    }
    if coeff == 0 {
        s.push_str(&offset.to_string());
    } else if offset > 0 {
        s.push_str(&format!("+{offset}"));
    } else if offset < 0 {
        s.push_str(&offset.to_string());
    }
    s
}

/// Selects the power of x in the numerator of a double sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum XSel {
    None,
    N(i64),
    MN(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharRef {
    pub name: String,
    pub arg: Combo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MRange {
    GeOne,
    GeZero,
    GtB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NRange {
    GeZero,
    GeOne,
}

impl fmt::Display for MRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MRange::GeOne => "m>=1",
            MRange::GeZero => "m>=0",
            MRange::GtB => "m>b",
        })
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NRange::GeZero => "n>=0",
            NRange::GeOne => "n>=1",
        })
    }
}

impl NRange {
    pub fn start(self) -> i64 {
        match self {
            NRange::GeZero => 0,
            NRange::GeOne => 1,
        }
    }
}

/// coeff · Σ_{m,n} x^{sel} χ(..) / Π (linear factors), optionally restricted by a congruence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoubleSumTerm {
    pub coeff: Rational,
    pub xsel: XSel,
    pub chars: Vec<CharRef>,
    pub m_range: MRange,
    pub n_range: NRange,
    pub denom: Vec<LinearFactor>,
    pub cong: Congruence,
}

/// Residue-class weight csc(π(a·n+b)/modulus); terms with modulus | (a·n+b) are omitted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Csc {
    pub a: i64,
    pub b: i64,
    pub modulus: u64,
}

/// x^{mult·n + offset}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XPow {
    pub mult: i64,
    pub offset: i64,
}

/// coeff · Σ_n x^{..} χ(n) csc(..) / (n+shift)^e.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SingleSumTerm {
    pub coeff: Rational,
    pub xpow: Option<XPow>,
    pub chars: Vec<String>,
    pub csc: Option<Csc>,
    pub n_range: NRange,
    pub factor: LinearFactor,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Double(DoubleSumTerm),
    Single(SingleSumTerm),
}

/// A sum of terms; canonical when sorted, merged and free of zero coefficients.
pub type TermGroup = Vec<Term>;

impl Term {
    pub fn coeff(&self) -> &Rational {
        match self {
            Term::Double(t) => &t.coeff,
            Term::Single(t) => &t.coeff,
        }
    }

    pub fn coeff_mut(&mut self) -> &mut Rational {
        match self {
            Term::Double(t) => &mut t.coeff,
            Term::Single(t) => &mut t.coeff,
        }
    }

    pub fn with_coeff(&self, c: Rational) -> Term {
        let mut t = self.clone();
        *t.coeff_mut() = c;
        t
    }

    /// The term with coefficient 1, used as the merge key.
    pub fn shape(&self) -> Term {
        self.with_coeff(Rational::from(1))
    }

    pub fn is_double(&self) -> bool {
        matches!(self, Term::Double(_))
    }

    pub fn as_double(&self) -> Option<&DoubleSumTerm> {
        match self {
            Term::Double(t) => Some(t),
            Term::Single(_) => None,
        }
    }
}

impl DoubleSumTerm {
    pub fn factor(&self, combo: Combo) -> Option<&LinearFactor> {
        self.denom.iter().find(|f| f.combo == combo)
    }

    pub fn degree(&self, combo: Combo) -> Rational {
        self.denom.iter().filter(|f| f.combo == combo).fold(Rational::new(), |acc, f| acc + &f.exponent)
    }

    /// Both a pure-m and a pure-n factor are present.
    pub fn is_mixed(&self) -> bool {
        self.factor(Combo::M).is_some() && self.factor(Combo::N).is_some()
    }

    /// Absolute convergence on the closed unit disk.
    pub fn check_convergence(&self) -> Result<(), TermError> {
        let p = self.degree(Combo::M);
        let q = self.degree(Combo::N);
        let r = self.degree(Combo::MN);
        let total = Rational::from(&p + &q) + &r;
        if Rational::from(&p + &r) <= 1 || Rational::from(&q + &r) <= 1 || total <= 2 {
            return Err(TermError::Convergence(format!(
                "{self}: degrees (m: {p}, n: {q}, m+n: {r}) need m+(m+n) > 1, n+(m+n) > 1 and total > 2"
            )));
        }
        Ok(())
    }

    fn validate_structure(&self) -> Result<(), TermError> {
        for combo in [Combo::M, Combo::N, Combo::MN] {
            if self.denom.iter().filter(|f| f.combo == combo).count() > 1 {
                return Err(TermError::Structure(format!("{self}: more than one {combo} factor chain")));
            }
        }
        for f in &self.denom {
            f.shift.validate()?;
            if f.exponent <= 0 {
                return Err(TermError::Structure(format!("{self}: non-positive exponent {}", f.exponent)));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), TermError> {
        self.validate_structure()?;
        self.check_convergence()
    }

    fn normalize(&mut self) {
        let mut merged: BTreeMap<(Combo, Shift), Rational> = BTreeMap::new();
        for f in self.denom.drain(..) {
            *merged.entry((f.combo, f.shift)).or_insert_with(Rational::new) += f.exponent;
        }
        self.denom = merged
            .into_iter()
            .filter(|(_, e)| *e != 0)
            .map(|((combo, shift), exponent)| LinearFactor { combo, shift, exponent })
            .collect();
        self.chars.sort();
    }
}

impl SingleSumTerm {
    pub fn check_convergence(&self) -> Result<(), TermError> {
        let twisted = self.xpow.is_some() || !self.chars.is_empty() || self.csc.is_some();
        if !twisted && self.factor.exponent <= 1 {
            return Err(TermError::Convergence(format!("{self}: exponent must exceed 1")));
        }
        if self.factor.exponent < 1 {
            return Err(TermError::Convergence(format!("{self}: exponent below 1")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), TermError> {
        if self.factor.combo != Combo::N {
            return Err(TermError::Structure(format!("{self}: single sums run over n")));
        }
        self.factor.shift.validate()?;
        if let Some(c) = &self.csc {
            if c.modulus == 0 {
                return Err(TermError::Structure("csc modulus must be positive".into()));
            }
        }
        self.check_convergence()
    }
}

fn write_coeff_prefix(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    if *c == 1 {
        Ok(())
    } else if *c == -1 {
        f.write_str("-")
    } else if *c.denom() == 1 {
        write!(f, "{c} : ")
    } else {
        write!(f, "({c}) : ")
    }
}

fn write_numer(f: &mut fmt::Formatter<'_>, parts: &[String]) -> fmt::Result {
    if parts.is_empty() {
        f.write_str("1")
    } else {
        f.write_str(&parts.join("*"))
    }
}

fn write_denom(f: &mut fmt::Formatter<'_>, factors: &[LinearFactor]) -> fmt::Result {
    let parts: Vec<String> = factors.iter().map(|x| x.to_string()).collect();
    write!(f, "({})", parts.join("*"))
}

fn x_power(base: &str, offset: i64) -> String {
    match offset {
        0 if base.len() == 1 => format!("x^{base}"),
        0 => format!("x^({base})"),
        d if d > 0 => format!("x^({base}+{d})"),
        d => format!("x^({base}{d})"),
    }
}

impl fmt::Display for DoubleSumTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_coeff_prefix(f, &self.coeff)?;
        write!(f, "sum({}, {}", self.m_range, self.n_range)?;
        if !self.cong.is_trivial() {
            write!(f, "; {} mod {}", congruence_string(&self.cong), self.cong.modulus)?;
        }
        f.write_str(") ")?;
        let mut numer = Vec::new();
        match self.xsel {
            XSel::None => {}
            XSel::N(d) => numer.push(x_power("n", d)),
            XSel::MN(d) => numer.push(x_power("m+n", d)),
        }
        for c in &self.chars {
            numer.push(format!("{}({})", c.name, c.arg));
        }
        write_numer(f, &numer)?;
        f.write_str(" / ")?;
        write_denom(f, &self.denom)
    }
}

impl fmt::Display for SingleSumTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_coeff_prefix(f, &self.coeff)?;
        write!(f, "single({}) ", self.n_range)?;
        let mut numer = Vec::new();
        if let Some(c) = &self.csc {
            let lin = match (c.a, c.b) {
                (1, 0) => "n".to_string(),
                (a, 0) => format!("{a}*n"),
                (1, b) if b > 0 => format!("n+{b}"),
                (1, b) => format!("n{b}"),
                (a, b) if b > 0 => format!("{a}*n+{b}"),
                (a, b) => format!("{a}*n{b}"),
            };
            numer.push(format!("csc(pi*({lin})/{})", c.modulus));
        }
        if let Some(p) = self.xpow {
            let base = if p.mult == 1 { "n".to_string() } else { format!("{}*n", p.mult) };
            numer.push(if p.mult == 1 { x_power(&base, p.offset) } else {
                match p.offset {
                    0 => format!("x^({base})"),
                    d if d > 0 => format!("x^({base}+{d})"),
                    d => format!("x^({base}{d})"),
                }
            });
        }
        for c in &self.chars {
            numer.push(format!("{c}(n)"));
        }
        write_numer(f, &numer)?;
        f.write_str(" / ")?;
        write_denom(f, std::slice::from_ref(&self.factor))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Double(t) => t.fmt(f),
            Term::Single(t) => t.fmt(f),
        }
    }
}

/// Renders a group one term per line.
pub fn render_group(g: &[Term]) -> String {
    g.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("\n")
}

/// Sorts factors, merges equal factor chains and like terms, drops zero coefficients.
pub fn canonicalize(g: &[Term]) -> TermGroup {
    let mut merged: BTreeMap<Term, Rational> = BTreeMap::new();
    for t in g {
        let mut shape = t.shape();
        if let Term::Double(d) = &mut shape {
            d.normalize();
        }
        *merged.entry(shape).or_insert_with(Rational::new) += t.coeff();
    }
    merged.into_iter().filter(|(_, c)| *c != 0).map(|(t, c)| t.with_coeff(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeta2(p: i64, r: i64) -> DoubleSumTerm {
        DoubleSumTerm {
            coeff: Rational::from(1),
            xsel: XSel::None,
            chars: vec![],
            m_range: MRange::GeOne,
            n_range: NRange::GeOne,
            denom: vec![
                LinearFactor::new(Combo::MN, Shift::zero(), r),
                LinearFactor::new(Combo::M, Shift::zero(), p),
            ],
            cong: Congruence::none(),
        }
    }

    #[test]
    fn merge_and_cancel() {
        let t = canonicalize(&[Term::Double(zeta2(1, 2))]).remove(0);
        let half = t.with_coeff(Rational::from((1, 2)));
        assert_eq!(canonicalize(&[half.clone(), half]), vec![t.clone()]);
        assert!(canonicalize(&[t.clone(), t.with_coeff(Rational::from(-1))]).is_empty());
        let c = canonicalize(&[t]);
        assert_eq!(c[0].to_string(), "sum(m>=1, n>=1) 1 / (m*(m+n)^2)");
    }

    #[test]
    fn convergence_gate() {
        assert!(zeta2(1, 2).check_convergence().is_ok());
        assert!(zeta2(1, 1).check_convergence().is_err());
        assert!(zeta2(0, 2).check_convergence().is_err());
    }

    #[test]
    fn congruence_rendering() {
        let c = Congruence::new(5, -2, -2).unwrap();
        assert_eq!((c.coeff, c.offset), (3, 3));
        assert_eq!(congruence_string(&c), "m=-2n-2");
        assert!(c.holds(1, 1));
        assert!(!c.holds(2, 1));
    }
}
