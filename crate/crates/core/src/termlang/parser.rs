use super::ast::*;
use super::expand::bind_term;
use super::expr::{Bindings, Expr};
use super::lexer::{tokenize, Pos, Tok, Token};
use super::term::{Combo, MRange, NRange, Shift, Term};
use super::TermError;
use rug::Rational;
use std::collections::BTreeSet;

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

fn is_ident(t: &Tok, name: &str) -> bool {
    matches!(t, Tok::Ident(s) if s == name)
}

impl Parser {
    fn new(src: &str) -> Result<Parser, TermError> {
        Ok(Parser { toks: tokenize(src)?, i: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, TermError> {
        Err(TermError::Syntax { pos: Some(self.pos()), msg: msg.into() })
    }

    fn expect(&mut self, want: Tok) -> Result<(), TermError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {want}, found {}", self.peek()))
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), TermError> {
        if is_ident(self.peek(), word) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected '{word}', found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, TermError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {other}")),
        }
    }

    fn int(&mut self) -> Result<i64, TermError> {
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            ref other => self.error(format!("expected integer, found {other}")),
        }
    }

    fn eat(&mut self, t: Tok) -> bool {
        if *self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn at_end(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    // ---- arithmetic expressions ----

    fn expr(&mut self) -> Result<Expr, TermError> {
        let first = self.product()?;
        self.expr_rest(first)
    }

    fn expr_rest(&mut self, mut lhs: Expr) -> Result<Expr, TermError> {
        loop {
            if self.eat(Tok::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat(Tok::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, TermError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(Tok::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(Tok::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, TermError> {
        if self.eat(Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(Tok::Caret) {
            let e = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    /// INT | IDENT | "(" expr ")"
    fn atom(&mut self) -> Result<Expr, TermError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                if matches!(name.as_str(), "m" | "n" | "x" | "b" | "pi") {
                    return self.error(format!("'{name}' cannot appear in a parameter expression"));
                }
                self.bump();
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.error(format!("expected number, parameter or '(', found {other}")),
        }
    }

    /// Constant integer exponent of a weight factor.
    fn const_power(&mut self) -> Result<i32, TermError> {
        let e = self.unary()?;
        let v = e
            .eval_int(&Bindings::new())
            .map_err(|_| TermError::Weight(format!("power {e} must be a constant integer")))?;
        i32::try_from(v).map_err(|_| TermError::Weight(format!("power {v} too large")))
    }

    // ---- identity blocks ----

    fn identity(&mut self) -> Result<IdentitySpec, TermError> {
        self.expect_word("identity")?;
        let id = match self.bump() {
            Tok::Str(s) => s,
            other => return self.error(format!("expected identity name string, found {other}")),
        };
        self.expect_word("params")?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.param_decl()?);
                if !self.eat(Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        self.expect_word("lhs")?;
        self.expect(Tok::Colon)?;
        let lhs = self.side("lhs")?;
        self.expect(Tok::Semi)?;
        self.expect_word("rhs")?;
        self.expect(Tok::Colon)?;
        let rhs = self.side("rhs")?;
        self.expect(Tok::Semi)?;
        self.expect(Tok::RBrace)?;
        let spec = IdentitySpec { id, params, lhs, rhs };
        validate_spec(&spec)?;
        Ok(spec)
    }

    fn rational_literal(&mut self) -> Result<Rational, TermError> {
        let neg = self.eat(Tok::Minus);
        let n = self.int()?;
        let d = if self.eat(Tok::Slash) { self.int()? } else { 1 };
        if d == 0 {
            return self.error("zero denominator");
        }
        let q = Rational::from((n, d));
        Ok(if neg { -q } else { q })
    }

    fn param_decl(&mut self) -> Result<ParamDecl, TermError> {
        let pos = self.pos();
        let name = self.ident()?;
        if matches!(name.as_str(), "m" | "n" | "pi" | "nu_" | "sum" | "single" | "family") {
            return self.error(format!("'{name}' is reserved"));
        }
        self.expect(Tok::Colon)?;
        let word = self.ident()?;
        let kind = match word.as_str() {
            "int" | "odd" => {
                self.expect(Tok::Ge)?;
                let neg = self.eat(Tok::Minus);
                let v = self.int()?;
                ParamKind::Int { min: if neg { -v } else { v }, odd: word == "odd" }
            }
            "real" if self.eat(Tok::Ge) => ParamKind::Real { min: self.rational_literal()? },
            "real" => {
                self.expect(Tok::LParen)?;
                let lo = self.int()?;
                self.expect(Tok::Comma)?;
                let hi = self.int()?;
                self.expect(Tok::RBrack)?;
                if (lo, hi) != (0, 1) {
                    return self.error("only the interval real(0,1] is supported");
                }
                ParamKind::UnitInterval
            }
            "disk" => ParamKind::Disk,
            "fixed" => ParamKind::FixedX(self.rational_literal()?),
            "char" => {
                let fixed = if self.eat(Tok::Eq) { Some(self.ident()?) } else { None };
                ParamKind::Char { fixed }
            }
            other => return self.error(format!("unknown parameter kind '{other}'")),
        };
        let role_ok = match &kind {
            ParamKind::Disk | ParamKind::FixedX(_) => name == "x",
            ParamKind::UnitInterval => name == "b",
            _ => name != "x" && name != "b",
        };
        if !role_ok {
            return Err(TermError::Syntax {
                pos: Some(pos),
                msg: format!("parameter '{name}' cannot have kind '{word}'"),
            });
        }
        Ok(ParamDecl { name, kind })
    }

    fn side(&mut self, label: &str) -> Result<Vec<GroupTemplate>, TermError> {
        if *self.peek() == Tok::Semi {
            return self.error(format!("empty {label}"));
        }
        let mut groups = Vec::new();
        let mut negated = self.eat(Tok::Minus);
        loop {
            groups.push(self.group(negated)?);
            if self.eat(Tok::Plus) {
                negated = false;
            } else if self.eat(Tok::Minus) {
                negated = true;
            } else {
                return Ok(groups);
            }
        }
    }

    fn group(&mut self, negated: bool) -> Result<GroupTemplate, TermError> {
        let weight = if *self.peek() == Tok::LBrack {
            WeightTemplate::default()
        } else {
            let w = self.weight()?;
            self.expect(Tok::Star)?;
            w
        };
        self.expect(Tok::LBrack)?;
        let mut items = Vec::new();
        loop {
            items.push(self.item()?);
            if !self.eat(Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrack)?;
        Ok(GroupTemplate { negated, weight, items })
    }

    fn weight(&mut self) -> Result<WeightTemplate, TermError> {
        let mut factors = Vec::new();
        let (f, p) = self.weight_factor()?;
        factors.push((f, p));
        loop {
            if *self.peek() == Tok::Star && *self.peek_at(1) == Tok::LBrack {
                break;
            }
            if self.eat(Tok::Star) {
                factors.push(self.weight_factor()?);
            } else if self.eat(Tok::Slash) {
                let (f, p) = self.weight_factor()?;
                factors.push((f, -p));
            } else {
                break;
            }
        }
        if factors.len() > 1 {
            factors.retain(|f| *f != (WFactor::Expr(Expr::Num(1)), 1));
        }
        Ok(WeightTemplate { factors })
    }

    fn weight_factor(&mut self) -> Result<(WFactor, i32), TermError> {
        let factor = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                WFactor::Expr(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                WFactor::Expr(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "pi" => WFactor::Pi,
                    "sin" | "cos" => {
                        let ok = *self.peek() == Tok::LParen
                            && is_ident(self.peek_at(1), "pi")
                            && *self.peek_at(2) == Tok::Star
                            && is_ident(self.peek_at(3), "b")
                            && *self.peek_at(4) == Tok::RParen;
                        if !ok {
                            return Err(TermError::Weight(format!("{name}(...) must be {name}(pi*b)")));
                        }
                        for _ in 0..5 {
                            self.bump();
                        }
                        if name == "sin" {
                            WFactor::SinPiB
                        } else {
                            WFactor::CosPiB
                        }
                    }
                    "sqrt" => {
                        self.expect(Tok::LParen)?;
                        let v = self.int()?;
                        self.expect(Tok::RParen)?;
                        if v <= 0 {
                            return Err(TermError::Weight(format!("sqrt({v})")));
                        }
                        WFactor::Sqrt(v as u64)
                    }
                    "x" | "b" | "m" | "n" => {
                        return Err(TermError::Weight(format!("'{name}' cannot appear in a weight")));
                    }
                    _ if *self.peek() == Tok::LParen => {
                        return Err(TermError::Weight(format!("function '{name}'")));
                    }
                    _ => WFactor::Expr(Expr::Var(name)),
                }
            }
            other => return self.error(format!("expected a weight factor, found {other}")),
        };
        if !self.eat(Tok::Caret) {
            return Ok((factor, 1));
        }
        match factor {
            WFactor::Expr(base) => {
                let e = match self.peek() {
                    Tok::Ident(s) if matches!(s.as_str(), "b" | "x" | "pi") => {
                        let s = s.clone();
                        return Err(TermError::Weight(format!("{base}^{s}")));
                    }
                    _ => self.unary()?,
                };
                Ok((WFactor::Expr(Expr::Pow(Box::new(base), Box::new(e))), 1))
            }
            other => Ok((other, self.const_power()?)),
        }
    }

    fn item(&mut self) -> Result<Item, TermError> {
        if is_ident(self.peek(), "family") {
            self.bump();
            let var = self.ident()?;
            self.expect(Tok::Eq)?;
            let lo = self.expr()?;
            self.expect(Tok::DotDot)?;
            let hi = self.expr()?;
            let coeff = if self.eat(Tok::Comma) { self.expr()? } else { Expr::one() };
            self.expect(Tok::Colon)?;
            let term = self.term()?;
            return Ok(Item { family: Some(Family { var, lo, hi }), coeff, term });
        }
        let starts_term = |t: &Tok| is_ident(t, "sum") || is_ident(t, "single");
        if *self.peek() == Tok::Minus && starts_term(self.peek_at(1)) {
            self.bump();
            return Ok(Item { family: None, coeff: Expr::Neg(Box::new(Expr::Num(1))), term: self.term()? });
        }
        if starts_term(self.peek()) {
            return Ok(Item { family: None, coeff: Expr::one(), term: self.term()? });
        }
        let coeff = self.expr()?;
        self.expect(Tok::Colon)?;
        Ok(Item { family: None, coeff, term: self.term()? })
    }

    // ---- terms ----

    fn term(&mut self) -> Result<TermTemplate, TermError> {
        let kw = self.ident()?;
        match kw.as_str() {
            "sum" => self.double_term(),
            "single" => self.single_term(),
            other => self.error(format!("expected 'sum' or 'single', found '{other}'")),
        }
    }

    fn n_range(&mut self) -> Result<NRange, TermError> {
        self.expect_word("n")?;
        self.expect(Tok::Ge)?;
        match self.int()? {
            0 => Ok(NRange::GeZero),
            1 => Ok(NRange::GeOne),
            v => self.error(format!("n range must start at 0 or 1, got {v}")),
        }
    }

    fn double_term(&mut self) -> Result<TermTemplate, TermError> {
        self.expect(Tok::LParen)?;
        self.expect_word("m")?;
        let m_range = if self.eat(Tok::Gt) {
            self.expect_word("b")?;
            MRange::GtB
        } else {
            self.expect(Tok::Ge)?;
            match self.int()? {
                0 => MRange::GeZero,
                1 => MRange::GeOne,
                v => return self.error(format!("m range must start at 0 or 1, got {v}")),
            }
        };
        self.expect(Tok::Comma)?;
        let n_range = self.n_range()?;
        let cong = if self.eat(Tok::Semi) { Some(self.congruence()?) } else { None };
        self.expect(Tok::RParen)?;
        let mut xsel = XSelTemplate::None;
        let mut chars = Vec::new();
        self.numerator(|p, atom| match atom {
            NumerAtom::X => {
                if xsel != XSelTemplate::None {
                    return p.error("x appears twice in the numerator");
                }
                xsel = p.double_x_exponent()?;
                Ok(())
            }
            NumerAtom::Char(name) => {
                let arg = p.char_argument()?;
                chars.push(CharRefTemplate { name, arg });
                Ok(())
            }
            NumerAtom::Csc => p.error("csc weights are only available in single sums"),
        })?;
        self.expect(Tok::Slash)?;
        let denom = self.denominator(false)?;
        Ok(TermTemplate::Double(DoubleTemplate { xsel, chars, m_range, n_range, denom, cong }))
    }

    fn single_term(&mut self) -> Result<TermTemplate, TermError> {
        self.expect(Tok::LParen)?;
        let n_range = self.n_range()?;
        self.expect(Tok::RParen)?;
        let mut xpow = None;
        let mut chars = Vec::new();
        let mut csc = None;
        self.numerator(|p, atom| match atom {
            NumerAtom::X => {
                if xpow.is_some() {
                    return p.error("x appears twice in the numerator");
                }
                xpow = Some(p.single_x_exponent()?);
                Ok(())
            }
            NumerAtom::Char(name) => {
                p.expect(Tok::LParen)?;
                p.expect_word("n")?;
                p.expect(Tok::RParen)?;
                chars.push(name);
                Ok(())
            }
            NumerAtom::Csc => {
                if csc.is_some() {
                    return p.error("csc appears twice");
                }
                csc = Some(p.csc_body()?);
                Ok(())
            }
        })?;
        self.expect(Tok::Slash)?;
        let mut denom = self.denominator(true)?;
        if denom.len() != 1 {
            return self.error("a single sum has exactly one denominator factor");
        }
        Ok(TermTemplate::Single(SingleTemplate { xpow, chars, csc, n_range, factor: denom.remove(0) }))
    }

    fn numerator(
        &mut self,
        mut on_atom: impl FnMut(&mut Parser, NumerAtom) -> Result<(), TermError>,
    ) -> Result<(), TermError> {
        loop {
            match self.peek().clone() {
                Tok::Int(1) => {
                    self.bump();
                }
                Tok::Ident(name) if name == "x" => {
                    self.bump();
                    self.expect(Tok::Caret)?;
                    on_atom(self, NumerAtom::X)?;
                }
                Tok::Ident(name) if name == "csc" => {
                    self.bump();
                    on_atom(self, NumerAtom::Csc)?;
                }
                Tok::Ident(name) if *self.peek_at(1) == Tok::LParen => {
                    self.bump();
                    on_atom(self, NumerAtom::Char(name))?;
                }
                other => return self.error(format!("unexpected {other} in numerator")),
            }
            if !self.eat(Tok::Star) {
                return Ok(());
            }
        }
    }

    fn signed_offset(&mut self) -> Result<Expr, TermError> {
        if self.eat(Tok::Plus) {
            self.expr()
        } else if self.eat(Tok::Minus) {
            let first = Expr::Neg(Box::new(self.product()?));
            self.expr_rest(first)
        } else {
            Ok(Expr::Num(0))
        }
    }

    fn double_x_exponent(&mut self) -> Result<XSelTemplate, TermError> {
        if is_ident(self.peek(), "n") {
            self.bump();
            return Ok(XSelTemplate::N(Expr::Num(0)));
        }
        self.expect(Tok::LParen)?;
        let sel = if is_ident(self.peek(), "m") {
            self.bump();
            self.expect(Tok::Plus)?;
            self.expect_word("n")?;
            XSelTemplate::MN(self.signed_offset()?)
        } else {
            self.expect_word("n")?;
            XSelTemplate::N(self.signed_offset()?)
        };
        self.expect(Tok::RParen)?;
        Ok(sel)
    }

    fn single_x_exponent(&mut self) -> Result<XPowTemplate, TermError> {
        if is_ident(self.peek(), "n") {
            self.bump();
            return Ok(XPowTemplate { mult: Expr::one(), offset: Expr::Num(0) });
        }
        self.expect(Tok::LParen)?;
        let (mult, offset) = self.scaled_n()?;
        self.expect(Tok::RParen)?;
        Ok(XPowTemplate { mult, offset })
    }

    /// [atom "*"] "n" [("+"|"-") expr]
    fn scaled_n(&mut self) -> Result<(Expr, Expr), TermError> {
        let mult = if is_ident(self.peek(), "n") {
            Expr::one()
        } else {
            let a = self.atom()?;
            self.expect(Tok::Star)?;
            a
        };
        self.expect_word("n")?;
        Ok((mult, self.signed_offset()?))
    }

    fn csc_body(&mut self) -> Result<CscTemplate, TermError> {
        self.expect(Tok::LParen)?;
        self.expect_word("pi")?;
        self.expect(Tok::Star)?;
        self.expect(Tok::LParen)?;
        let (a, b) = self.scaled_n()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Slash)?;
        let modulus = self.atom()?;
        self.expect(Tok::RParen)?;
        Ok(CscTemplate { a, b, modulus })
    }

    fn char_argument(&mut self) -> Result<Combo, TermError> {
        self.expect(Tok::LParen)?;
        let combo = if self.eat_word("m") {
            if self.eat(Tok::Plus) {
                self.expect_word("n")?;
                Combo::MN
            } else {
                Combo::M
            }
        } else {
            self.expect_word("n")?;
            Combo::N
        };
        self.expect(Tok::RParen)?;
        Ok(combo)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if is_ident(self.peek(), w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn congruence(&mut self) -> Result<CongTemplate, TermError> {
        self.expect_word("m")?;
        self.expect(Tok::Eq)?;
        let neg = self.eat(Tok::Minus);
        let k = if let Tok::Int(v) = *self.peek() {
            self.bump();
            self.eat(Tok::Star);
            v
        } else {
            1
        };
        self.expect_word("n")?;
        let coeff = if neg { -k } else { k };
        let offset = if self.eat(Tok::Plus) {
            self.int()?
        } else if self.eat(Tok::Minus) {
            -self.int()?
        } else {
            0
        };
        self.expect_word("mod")?;
        let modulus = self.atom()?;
        Ok(CongTemplate { modulus, coeff, offset })
    }

    /// "m", "n", "b", INT or INT/INT joined by + and -.
    fn linear_form(&mut self) -> Result<(Combo, Shift), TermError> {
        let start = self.pos();
        let (mut m, mut n, mut b) = (0i64, 0i64, 0i64);
        let mut c = Rational::new();
        let mut sign = if self.eat(Tok::Minus) { -1 } else { 1 };
        loop {
            match self.peek().clone() {
                Tok::Ident(s) if s == "m" => m += sign,
                Tok::Ident(s) if s == "n" => n += sign,
                Tok::Ident(s) if s == "b" => b += sign,
                Tok::Int(v) => {
                    self.bump();
                    let d = if self.eat(Tok::Slash) { self.int()? } else { 1 };
                    if d == 0 {
                        return self.error("zero denominator in shift");
                    }
                    c += Rational::from((v, d)) * sign;
                    if !self.next_linear_sign(&mut sign) {
                        break;
                    }
                    continue;
                }
                other => return self.error(format!("unexpected {other} in linear factor")),
            }
            self.bump();
            if !self.next_linear_sign(&mut sign) {
                break;
            }
        }
        let combo = match (m, n) {
            (1, 0) => Combo::M,
            (0, 1) => Combo::N,
            (1, 1) => Combo::MN,
            _ => {
                return Err(TermError::Syntax {
                    pos: Some(start),
                    msg: "a factor must be m, n or m+n plus a shift".into(),
                })
            }
        };
        if !(-1..=1).contains(&b) {
            return Err(TermError::Syntax { pos: Some(start), msg: "coefficient of b must be -1, 0 or 1".into() });
        }
        let shift = Shift { c, b: b as i8 };
        shift.validate().map_err(|e| match e {
            TermError::Syntax { msg, .. } => TermError::Syntax { pos: Some(start), msg },
            other => other,
        })?;
        Ok((combo, shift))
    }

    fn next_linear_sign(&mut self, sign: &mut i64) -> bool {
        if self.eat(Tok::Plus) {
            *sign = 1;
            true
        } else if self.eat(Tok::Minus) {
            *sign = -1;
            true
        } else {
            false
        }
    }

    fn exponent_atom(&mut self) -> Result<Expr, TermError> {
        self.atom()
    }

    fn denominator_item(&mut self) -> Result<(FactorTemplate, bool), TermError> {
        if self.eat(Tok::LParen) {
            let (combo, shift) = self.linear_form()?;
            self.expect(Tok::RParen)?;
            let exponent = if self.eat(Tok::Caret) { self.exponent_atom()? } else { Expr::one() };
            return Ok((FactorTemplate { combo, shift, exponent }, true));
        }
        let pos = self.pos();
        let (combo, shift) = self.linear_form()?;
        let simple = combo != Combo::MN && shift.is_zero();
        let exponent = if *self.peek() == Tok::Caret {
            if !simple {
                return Err(TermError::Syntax {
                    pos: Some(pos),
                    msg: "parenthesize a composite factor before '^'".into(),
                });
            }
            self.bump();
            self.exponent_atom()?
        } else {
            Expr::one()
        };
        Ok((FactorTemplate { combo, shift, exponent }, simple))
    }

    fn denominator(&mut self, single: bool) -> Result<Vec<FactorTemplate>, TermError> {
        let pos = self.pos();
        let factors = if self.eat(Tok::LParen) {
            let mut items = vec![self.denominator_item()?];
            while self.eat(Tok::Star) {
                items.push(self.denominator_item()?);
            }
            self.expect(Tok::RParen)?;
            if self.eat(Tok::Caret) {
                if items.len() != 1 || !items[0].0.exponent.is_one() {
                    return Err(TermError::Syntax { pos: Some(pos), msg: "'^' after a product of factors".into() });
                }
                items[0].0.exponent = self.exponent_atom()?;
            }
            items.into_iter().map(|(f, _)| f).collect::<Vec<_>>()
        } else {
            vec![self.denominator_item()?.0]
        };
        if single && factors.iter().any(|f| f.combo != Combo::N) {
            return Err(TermError::Syntax { pos: Some(pos), msg: "single sums only have factors in n".into() });
        }
        Ok(factors)
    }
}

enum NumerAtom {
    X,
    Char(String),
    Csc,
}

fn check_vars(e: &Expr, scope: &BTreeSet<String>) -> Result<(), TermError> {
    let mut vars = BTreeSet::new();
    e.free_vars(&mut vars);
    match vars.into_iter().find(|v| !scope.contains(v)) {
        Some(v) => Err(TermError::Undeclared(v)),
        None => Ok(()),
    }
}

fn validate_spec(spec: &IdentitySpec) -> Result<(), TermError> {
    let mut names = BTreeSet::new();
    for p in &spec.params {
        if !names.insert(p.name.clone()) {
            return Err(TermError::Syntax { pos: None, msg: format!("parameter '{}' declared twice", p.name) });
        }
        if let ParamKind::Char { fixed: Some(c) } = &p.kind {
            if !matches!(c.as_str(), "chi0" | "chi3" | "chi4") {
                return Err(TermError::Syntax { pos: None, msg: format!("unknown built-in character '{c}'") });
            }
        }
    }
    let numeric: BTreeSet<String> = spec.numeric_params().map(|p| p.name.clone()).collect();
    let chars: BTreeSet<String> = spec.char_params().map(|p| p.name.clone()).collect();
    let has_x = spec.has_x();
    let has_b = spec.has_b();
    let need_b = |uses: bool| if uses && !has_b { Err(TermError::Undeclared("b".into())) } else { Ok(()) };
    let need_x = |uses: bool| if uses && !has_x { Err(TermError::Undeclared("x".into())) } else { Ok(()) };
    for group in spec.lhs.iter().chain(&spec.rhs) {
        for (factor, _) in &group.weight.factors {
            match factor {
                WFactor::Expr(e) => {
                    let mut vars = BTreeSet::new();
                    e.free_vars(&mut vars);
                    if let Some(v) = vars.into_iter().find(|v| !numeric.contains(v)) {
                        return Err(TermError::Weight(format!("'{v}' in weight factor {}", e.atom_string())));
                    }
                }
                WFactor::SinPiB | WFactor::CosPiB => need_b(true)?,
                WFactor::Pi | WFactor::Sqrt(_) => {}
            }
        }
        for item in &group.items {
            let mut scope = numeric.clone();
            if let Some(fam) = &item.family {
                check_vars(&fam.lo, &numeric)?;
                check_vars(&fam.hi, &numeric)?;
                scope.insert(fam.var.clone());
            }
            check_vars(&item.coeff, &scope)?;
            match &item.term {
                TermTemplate::Double(d) => {
                    need_b(d.m_range == MRange::GtB)?;
                    for f in &d.denom {
                        check_vars(&f.exponent, &scope)?;
                        need_b(f.shift.b != 0)?;
                    }
                    match &d.xsel {
                        XSelTemplate::None => {}
                        XSelTemplate::N(e) | XSelTemplate::MN(e) => {
                            need_x(true)?;
                            check_vars(e, &scope)?;
                        }
                    }
                    for c in &d.chars {
                        if !chars.contains(&c.name) {
                            return Err(TermError::Undeclared(c.name.clone()));
                        }
                    }
                    if let Some(c) = &d.cong {
                        check_vars(&c.modulus, &scope)?;
                    }
                }
                TermTemplate::Single(s) => {
                    check_vars(&s.factor.exponent, &scope)?;
                    need_b(s.factor.shift.b != 0)?;
                    if let Some(p) = &s.xpow {
                        need_x(true)?;
                        check_vars(&p.mult, &scope)?;
                        check_vars(&p.offset, &scope)?;
                    }
                    if let Some(c) = &s.csc {
                        check_vars(&c.a, &scope)?;
                        check_vars(&c.b, &scope)?;
                        check_vars(&c.modulus, &scope)?;
                    }
                    for c in &s.chars {
                        if !chars.contains(c) {
                            return Err(TermError::Undeclared(c.clone()));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Parses one identity block.
pub fn parse_identity(text: &str) -> Result<IdentitySpec, TermError> {
    let mut p = Parser::new(text)?;
    let spec = p.identity()?;
    if !p.at_end() {
        return p.error(format!("unexpected {} after identity block", p.peek()));
    }
    Ok(spec)
}

/// Parses a file holding any number of identity blocks.
pub fn parse_identity_file(text: &str) -> Result<Vec<IdentitySpec>, TermError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_end() {
        out.push(p.identity()?);
    }
    Ok(out)
}

/// Parses a term that may mention parameters in exponents and offsets.
pub fn parse_term_template(text: &str) -> Result<TermTemplate, TermError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    if !p.at_end() {
        return p.error(format!("unexpected {} after term", p.peek()));
    }
    Ok(t)
}

/// Parses a fully concrete term and applies the convergence gate.
pub fn parse_term(text: &str) -> Result<Term, TermError> {
    let mut p = Parser::new(text)?;
    let sign = if *p.peek() == Tok::Minus {
        p.bump();
        Rational::from(-1)
    } else {
        Rational::from(1)
    };
    let coeff = if is_ident(p.peek(), "sum") || is_ident(p.peek(), "single") {
        sign
    } else {
        let e = p.expr()?;
        p.expect(Tok::Colon)?;
        sign * e.eval(&Bindings::new())?
    };
    let t = p.term()?;
    if !p.at_end() {
        return p.error(format!("unexpected {} after term", p.peek()));
    }
    let mut term = bind_term(&t, &Bindings::new())?;
    *term.coeff_mut() = coeff;
    Ok(term)
}
