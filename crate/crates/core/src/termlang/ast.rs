//! Parameterized identity templates as written in `.dpl` files.
//!
//! Exponents, offsets, family bounds and coefficients are [`Expr`]s over the
//! declared integer/real parameters and family variables; binding them yields
//! the concrete terms of [`super::term`].

use super::expr::Expr;
use super::term::{Combo, MRange, NRange, Shift};
use rug::Rational;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamKind {
    /// Integer parameter with a lower bound; `odd` restricts to odd values.
    Int { min: i64, odd: bool },
    /// Real (rational-valued) parameter with a lower bound.
    Real { min: Rational },
    /// x with |x| <= 1.
    Disk,
    /// x pinned to a rational value.
    FixedX(Rational),
    /// b in (0, 1].
    UnitInterval,
    /// A Dirichlet character slot, optionally pinned to a built-in.
    Char { fixed: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub kind: ParamKind,
}

impl ParamDecl {
    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, ParamKind::Int { .. } | ParamKind::Real { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WFactor {
    Expr(Expr),
    Pi,
    SinPiB,
    CosPiB,
    Sqrt(u64),
}

/// Product of weight factors raised to integer powers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeightTemplate {
    pub factors: Vec<(WFactor, i32)>,
}

impl WeightTemplate {
    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorTemplate {
    pub combo: Combo,
    pub shift: Shift,
    pub exponent: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XSelTemplate {
    None,
    N(Expr),
    MN(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongTemplate {
    pub modulus: Expr,
    pub coeff: i64,
    pub offset: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharRefTemplate {
    pub name: String,
    pub arg: Combo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleTemplate {
    pub xsel: XSelTemplate,
    pub chars: Vec<CharRefTemplate>,
    pub m_range: MRange,
    pub n_range: NRange,
    pub denom: Vec<FactorTemplate>,
    pub cong: Option<CongTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CscTemplate {
    pub a: Expr,
    pub b: Expr,
    pub modulus: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XPowTemplate {
    pub mult: Expr,
    pub offset: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleTemplate {
    pub xpow: Option<XPowTemplate>,
    pub chars: Vec<String>,
    pub csc: Option<CscTemplate>,
    pub n_range: NRange,
    pub factor: FactorTemplate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermTemplate {
    Double(DoubleTemplate),
    Single(SingleTemplate),
}

/// `family nu = lo..hi`; an empty range contributes nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub var: String,
    pub lo: Expr,
    pub hi: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub family: Option<Family>,
    pub coeff: Expr,
    pub term: TermTemplate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTemplate {
    pub negated: bool,
    pub weight: WeightTemplate,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentitySpec {
    pub id: String,
    pub params: Vec<ParamDecl>,
    pub lhs: Vec<GroupTemplate>,
    pub rhs: Vec<GroupTemplate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lhs,
    Rhs,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lhs => "lhs",
            Side::Rhs => "rhs",
        })
    }
}

impl IdentitySpec {
    pub fn side(&self, side: Side) -> &[GroupTemplate] {
        match side {
            Side::Lhs => &self.lhs,
            Side::Rhs => &self.rhs,
        }
    }

    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn has_x(&self) -> bool {
        self.param("x").is_some()
    }

    pub fn has_b(&self) -> bool {
        self.param("b").is_some()
    }

    pub fn numeric_params(&self) -> impl Iterator<Item = &ParamDecl> {
        self.params.iter().filter(|p| p.is_numeric())
    }

    pub fn char_params(&self) -> impl Iterator<Item = &ParamDecl> {
        self.params.iter().filter(|p| matches!(p.kind, ParamKind::Char { .. }))
    }

    /// Whether any term on either side sums over m > b.
    pub fn uses_gt_b(&self) -> bool {
        self.lhs.iter().chain(&self.rhs).flat_map(|g| &g.items).any(|it| match &it.term {
            TermTemplate::Double(d) => d.m_range == MRange::GtB,
            TermTemplate::Single(_) => false,
        })
    }

    /// Compact parameter signature such as "k: int >= 1, x: disk".
    pub fn param_summary(&self) -> String {
        self.params.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for ParamDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.name)?;
        match &self.kind {
            ParamKind::Int { min, odd: false } => write!(f, "int >= {min}"),
            ParamKind::Int { min, odd: true } => write!(f, "odd >= {min}"),
            ParamKind::Real { min } => write!(f, "real >= {min}"),
            ParamKind::Disk => f.write_str("disk"),
            ParamKind::FixedX(v) => write!(f, "fixed {v}"),
            ParamKind::UnitInterval => f.write_str("real(0,1]"),
            ParamKind::Char { fixed: None } => f.write_str("char"),
            ParamKind::Char { fixed: Some(c) } => write!(f, "char = {c}"),
        }
    }
}

fn power_suffix(p: i32) -> String {
    if p == 1 {
        String::new()
    } else if p > 0 {
        format!("^{p}")
    } else {
        format!("^({p})")
    }
}

impl fmt::Display for WeightTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (factor, power) in &self.factors {
            let (sep, p) = if *power < 0 { ("/", -power) } else { ("*", *power) };
            if first {
                if *power < 0 {
                    f.write_str("1/")?;
                }
            } else {
                f.write_str(sep)?;
            }
            first = false;
            let base = match factor {
                WFactor::Expr(e) => {
                    if let (Expr::Num(_), 1) = (e, p) {
                        e.to_string()
                    } else {
                        e.atom_string()
                    }
                }
                WFactor::Pi => "pi".into(),
                WFactor::SinPiB => "sin(pi*b)".into(),
                WFactor::CosPiB => "cos(pi*b)".into(),
                WFactor::Sqrt(n) => format!("sqrt({n})"),
            };
            write!(f, "{base}{}", power_suffix(p))?;
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

fn shift_tail(s: &Shift) -> String {
    let mut out = String::new();
    match s.b {
        1 => out.push_str("+b"),
        -1 => out.push_str("-b"),
        _ => {}
    }
    if s.c > 0 {
        out.push_str(&format!("+{}", s.c));
    } else if s.c < 0 {
        out.push_str(&s.c.to_string());
    }
    out
}

impl fmt::Display for FactorTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.shift.is_zero() && self.combo != Combo::MN {
            write!(f, "{}", self.combo)?;
        } else {
            write!(f, "({}{})", self.combo, shift_tail(&self.shift))?;
        }
        if !self.exponent.is_one() {
            write!(f, "^{}", self.exponent.atom_string())?;
        }
        Ok(())
    }
}

fn offset_tail(e: &Expr) -> String {
    match e {
        Expr::Num(0) => String::new(),
        Expr::Neg(inner) => format!("-{}", inner.atom_string()),
        other if other.is_atom() => format!("+{other}"),
        other => format!("+({other})"),
    }
}

fn congruence_rhs(coeff: i64, offset: i64) -> String {
    let mut s = match coeff {
        0 => String::new(),
        1 => "n".into(),
        -1 => "-n".into(),
        k => format!("{k}n"),
    };
    if coeff == 0 {
        s.push_str(&offset.to_string());
    } else if offset > 0 {
        s.push_str(&format!("+{offset}"));
    } else if offset < 0 {
        s.push_str(&offset.to_string());
    }
    s
}

fn write_denominator(f: &mut fmt::Formatter<'_>, factors: &[FactorTemplate]) -> fmt::Result {
    let parts: Vec<String> = factors.iter().map(|x| x.to_string()).collect();
    write!(f, "({})", parts.join("*"))
}

impl fmt::Display for TermTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut numer: Vec<String> = Vec::new();
        match self {
            TermTemplate::Double(d) => {
                write!(f, "sum({}, {}", d.m_range, d.n_range)?;
                if let Some(c) = &d.cong {
                    write!(f, "; m={} mod {}", congruence_rhs(c.coeff, c.offset), c.modulus.atom_string())?;
                }
                f.write_str(") ")?;
                match &d.xsel {
                    XSelTemplate::None => {}
                    XSelTemplate::N(Expr::Num(0)) => numer.push("x^n".into()),
                    XSelTemplate::N(e) => numer.push(format!("x^(n{})", offset_tail(e))),
                    XSelTemplate::MN(e) => numer.push(format!("x^(m+n{})", offset_tail(e))),
                }
                for c in &d.chars {
                    numer.push(format!("{}({})", c.name, c.arg));
                }
                f.write_str(&if numer.is_empty() { "1".to_string() } else { numer.join("*") })?;
                f.write_str(" / ")?;
                write_denominator(f, &d.denom)
            }
            TermTemplate::Single(s) => {
                write!(f, "single({}) ", s.n_range)?;
                if let Some(c) = &s.csc {
                    let lead = if c.a.is_one() { "n".to_string() } else { format!("{}*n", c.a.atom_string()) };
                    numer.push(format!("csc(pi*({lead}{})/{})", offset_tail(&c.b), c.modulus.atom_string()));
                }
                if let Some(p) = &s.xpow {
                    let lead = if p.mult.is_one() { "n".to_string() } else { format!("{}*n", p.mult.atom_string()) };
                    let tail = offset_tail(&p.offset);
                    if tail.is_empty() && p.mult.is_one() {
                        numer.push("x^n".into());
                    } else {
                        numer.push(format!("x^({lead}{tail})"));
                    }
                }
                for c in &s.chars {
                    numer.push(format!("{c}(n)"));
                }
                f.write_str(&if numer.is_empty() { "1".to_string() } else { numer.join("*") })?;
                f.write_str(" / ")?;
                write_denominator(f, std::slice::from_ref(&s.factor))
            }
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(fam) = &self.family {
            write!(f, "family {} = {}..{}", fam.var, fam.lo, fam.hi)?;
            if !self.coeff.is_one() {
                write!(f, ", {}", self.coeff)?;
            }
            write!(f, " : {}", self.term)
        } else if self.coeff.is_one() {
            write!(f, "{}", self.term)
        } else if self.coeff == Expr::Neg(Box::new(Expr::Num(1))) {
            write!(f, "-{}", self.term)
        } else {
            write!(f, "{} : {}", self.coeff, self.term)
        }
    }
}

fn write_side(f: &mut fmt::Formatter<'_>, label: &str, groups: &[GroupTemplate]) -> fmt::Result {
    write!(f, "  {label}:")?;
    for (i, g) in groups.iter().enumerate() {
        let sign = match (i, g.negated) {
            (0, false) => " ",
            (0, true) => " -",
            (_, false) => "\n    + ",
            (_, true) => "\n    - ",
        };
        f.write_str(sign)?;
        if !g.weight.is_one() {
            write!(f, "{} * ", g.weight)?;
        }
        f.write_str("[\n")?;
        for (j, item) in g.items.iter().enumerate() {
            let comma = if j + 1 < g.items.len() { "," } else { "" };
            writeln!(f, "      {item}{comma}")?;
        }
        f.write_str("    ]")?;
    }
    f.write_str(";\n")
}

impl fmt::Display for IdentitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "identity \"{}\" params ({}) {{", self.id, self.param_summary())?;
        write_side(f, "lhs", &self.lhs)?;
        write_side(f, "rhs", &self.rhs)?;
        f.write_str("}\n")
    }
}
