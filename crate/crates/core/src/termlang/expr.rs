use super::TermError;
use rug::{Integer, Rational};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Values bound to integer/rational parameters (k, N, s, ν, ...).
pub type Bindings = BTreeMap<String, Rational>;

/// Arithmetic over parameters; evaluates to an exact rational.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Num(i64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(v: i64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn one() -> Expr {
        Expr::Num(1)
    }

    pub fn is_one(&self) -> bool {
        *self == Expr::Num(1)
    }

    pub fn eval(&self, env: &Bindings) -> Result<Rational, TermError> {
        Ok(match self {
            Expr::Num(v) => Rational::from(*v),
            Expr::Var(name) => env
                .get(name)
                .cloned()
                .ok_or_else(|| TermError::Unbound(name.clone()))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let d = b.eval(env)?;
                if d == 0 {
                    return Err(TermError::Arithmetic(format!("division by zero in {self}")));
                }
                a.eval(env)? / d
            }
            Expr::Pow(a, b) => {
                let base = a.eval(env)?;
                let e = b.eval(env)?;
                if *e.denom() != 1 {
                    return Err(TermError::Arithmetic(format!("non-integer power in {self}")));
                }
                let e = e
                    .numer()
                    .to_i32()
                    .filter(|v| v.abs() <= 4096)
                    .ok_or_else(|| TermError::Arithmetic(format!("power too large in {self}")))?;
                if base == 0 && e < 0 {
                    return Err(TermError::Arithmetic(format!("division by zero in {self}")));
                }
                rational_pow(&base, e)
            }
        })
    }

    /// Evaluates and requires an integer result.
    pub fn eval_int(&self, env: &Bindings) -> Result<i64, TermError> {
        let r = self.eval(env)?;
        if *r.denom() != 1 {
            return Err(TermError::Arithmetic(format!("{self} = {r} is not an integer")));
        }
        r.numer()
            .to_i64()
            .ok_or_else(|| TermError::Arithmetic(format!("{self} does not fit in 64 bits")))
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Neg(a) => a.free_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    /// Replaces every occurrence of a variable by an expression.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(name, with));
        match self {
            Expr::Var(n) if n == name => with.clone(),
            Expr::Num(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, b) => Expr::Pow(sub(a), sub(b)),
        }
    }

    /// An expression that renders as the given rational.
    pub fn from_rational(q: &Rational) -> Expr {
        let to_expr = |i: &Integer| Expr::Num(i.to_i64().expect("rational fits in i64"));
        let mag = Rational::from(q.abs_ref());
        let base = if *mag.denom() == 1 {
            to_expr(mag.numer())
        } else {
            Expr::Div(Box::new(to_expr(mag.numer())), Box::new(to_expr(mag.denom())))
        };
        if *q < 0 {
            Expr::Neg(Box::new(base))
        } else {
            base
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0 => 3,
            Expr::Num(_) | Expr::Var(_) => 5,
        }
    }

    pub fn is_atom(&self) -> bool {
        self.precedence() == 5
    }

    /// Rendering suitable after '^' or as a standalone factor.
    pub fn atom_string(&self) -> String {
        if self.is_atom() {
            self.to_string()
        } else {
            format!("({self})")
        }
    }
}

pub(crate) fn rational_pow(base: &Rational, e: i32) -> Rational {
    let mut acc = Rational::from(1);
    let b = if e < 0 { Rational::from(1) / base.clone() } else { base.clone() };
    for _ in 0..e.unsigned_abs() {
        acc *= &b;
    }
    acc
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, 4)
            }
            Expr::Add(a, b) => {
                write_child(f, a, 1)?;
                f.write_str("+")?;
                write_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                f.write_str("-")?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                f.write_str("*")?;
                write_child(f, b, 4)
            }
            Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                f.write_str("/")?;
                write_child(f, b, 4)
            }
            Expr::Pow(a, b) => {
                write_child(f, a, 5)?;
                f.write_str("^")?;
                write_child(f, b, 5)
            }
        }
    }
}
