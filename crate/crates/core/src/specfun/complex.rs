use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Complex number with MPFR real and imaginary parts at a shared precision.
#[derive(Clone, Debug, PartialEq)]
pub struct HPComplex {
    pub re: Float,
    pub im: Float,
}

impl HPComplex {
    pub fn zero(prec: u32) -> Self {
        HPComplex { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn i(prec: u32) -> Self {
        HPComplex { re: Float::new(prec), im: Float::with_val(prec, 1) }
    }

    pub fn new(re: Float, im: Float) -> Self {
        HPComplex { re, im }
    }

    pub fn from_real(re: Float) -> Self {
        let prec = re.prec();
        HPComplex { re, im: Float::new(prec) }
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        HPComplex { re: Float::with_val(prec, v), im: Float::new(prec) }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        HPComplex { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        HPComplex { re: Float::with_val(prec, q), im: Float::new(prec) }
    }

    pub fn pi(prec: u32) -> Self {
        HPComplex::from_real(Float::with_val(prec, Constant::Pi))
    }

    /// e^{2πi a/f}, with the exact values ±1, ±i returned without rounding.
    pub fn root_of_unity(f: u64, a: i64, prec: u32) -> Self {
        let f = f.max(1) as i64;
        let a = a.rem_euclid(f);
        if a == 0 {
            return Self::one(prec);
        }
        if 2 * a == f {
            return Self::from_i64(-1, prec);
        }
        if 4 * a == f {
            return Self::i(prec);
        }
        if 4 * a == 3 * f {
            return -Self::i(prec);
        }
        let mut theta = Float::with_val(prec, Constant::Pi);
        theta *= 2 * a;
        theta /= f;
        let (s, c) = theta.sin_cos(Float::new(prec));
        HPComplex { re: c, im: s }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn conj(&self) -> Self {
        HPComplex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> Float {
        let prec = self.prec();
        let mut r = Float::with_val(prec, self.re.square_ref());
        r += Float::with_val(prec, self.im.square_ref());
        r
    }

    pub fn abs(&self) -> Float {
        if self.im.is_zero() {
            return self.re.clone().abs();
        }
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn arg(&self) -> Float {
        Float::with_val(self.prec(), self.im.atan2_ref(&self.re))
    }

    pub fn scale(&self, f: &Float) -> Self {
        let prec = self.prec();
        HPComplex {
            re: Float::with_val(prec, &self.re * f),
            im: Float::with_val(prec, &self.im * f),
        }
    }

    pub fn scale_i64(&self, k: i64) -> Self {
        let prec = self.prec();
        HPComplex {
            re: Float::with_val(prec, &self.re * k),
            im: Float::with_val(prec, &self.im * k),
        }
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        let prec = self.prec();
        HPComplex {
            re: Float::with_val(prec, &self.re * q),
            im: Float::with_val(prec, &self.im * q),
        }
    }

    pub fn add_real(&self, f: &Float) -> Self {
        HPComplex { re: Float::with_val(self.prec(), &self.re + f), im: self.im.clone() }
    }

    pub fn add_i64(&self, k: i64) -> Self {
        HPComplex { re: Float::with_val(self.prec(), &self.re + k), im: self.im.clone() }
    }

    pub fn recip(&self) -> Self {
        let prec = self.prec();
        if self.im.is_zero() {
            return HPComplex { re: Float::with_val(prec, self.re.recip_ref()), im: Float::new(prec) };
        }
        let d = self.norm_sqr();
        HPComplex {
            re: Float::with_val(prec, &self.re / &d),
            im: -Float::with_val(prec, &self.im / &d),
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Integer power by repeated squaring; negative exponents invert.
    pub fn powi(&self, e: i64) -> Self {
        let prec = self.prec();
        if self.im.is_zero() {
            let e32 = i32::try_from(e).expect("exponent fits in i32");
            return HPComplex::from_real(Float::with_val(prec, (&self.re).pow(e32)));
        }
        let mut base = if e < 0 { self.recip() } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = HPComplex::one(prec);
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = base.square();
            }
        }
        acc
    }

    /// Principal-branch logarithm.
    pub fn ln(&self) -> Self {
        let prec = self.prec();
        if self.im.is_zero() && self.re.is_sign_positive() {
            return HPComplex::from_real(Float::with_val(prec, self.re.ln_ref()));
        }
        let r = self.abs();
        HPComplex { re: r.ln(), im: self.arg() }
    }

    pub fn exp(&self) -> Self {
        let prec = self.prec();
        let m = Float::with_val(prec, self.re.exp_ref());
        if self.im.is_zero() {
            return HPComplex::from_real(m);
        }
        let (s, c) = self.im.clone().sin_cos(Float::new(prec));
        HPComplex { re: c * &m, im: s * m }
    }

    /// Principal-branch power z^e for real e.
    pub fn pow_real(&self, e: &Float) -> Self {
        let prec = self.prec();
        if e.is_integer() {
            if let Some(k) = e.to_integer().and_then(|i| i.to_i64()) {
                return self.powi(k);
            }
        }
        if self.im.is_zero() && self.re.is_sign_positive() {
            return HPComplex::from_real(Float::with_val(prec, (&self.re).pow(e)));
        }
        let l = self.ln();
        l.scale(e).exp()
    }

    /// Principal-branch power z^q for rational q; integers avoid the logarithm.
    pub fn pow_rational(&self, q: &Rational) -> Self {
        if *q.denom() == 1 {
            if let Some(k) = q.numer().to_i64() {
                return self.powi(k);
            }
        }
        self.pow_real(&Float::with_val(self.prec(), q))
    }

    pub fn sqrt(&self) -> Self {
        let prec = self.prec();
        if self.im.is_zero() && self.re.is_sign_positive() {
            return HPComplex::from_real(Float::with_val(prec, self.re.sqrt_ref()));
        }
        self.pow_real(&Float::with_val(prec, 0.5))
    }

    pub fn sin(&self) -> Self {
        let prec = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(prec));
        if self.im.is_zero() {
            return HPComplex::from_real(s);
        }
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(prec));
        HPComplex { re: s * ch, im: c * sh }
    }

    pub fn cos(&self) -> Self {
        let prec = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(prec));
        if self.im.is_zero() {
            return HPComplex::from_real(c);
        }
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(prec));
        HPComplex { re: c * ch, im: -(s * sh) }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// Decimal rendering of one component with `digits` significant digits.
    pub fn component_string(f: &Float, digits: usize) -> String {
        if f.is_zero() {
            return "0".to_string();
        }
        let s = f.to_string_radix(10, Some(digits.max(1)));
        normalize_exponent(&s)
    }

    pub fn re_string(&self, digits: usize) -> String {
        Self::component_string(&self.re, digits)
    }

    pub fn im_string(&self, digits: usize) -> String {
        Self::component_string(&self.im, digits)
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        HPComplex { re: Float::with_val(prec, &self.re), im: Float::with_val(prec, &self.im) }
    }

    /// Nearest integer to the real part, when it fits.
    pub fn round_re(&self) -> Option<Integer> {
        let r = self.re.clone().round();
        r.to_integer()
    }
}

fn normalize_exponent(s: &str) -> String {
    // MPFR writes exponents as "e-5" / "e5"; keep that, drop trailing zeros in the mantissa.
    let (mant, exp) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    let mant = if mant.contains('.') {
        let t = mant.trim_end_matches('0');
        t.trim_end_matches('.')
    } else {
        mant
    };
    format!("{mant}{exp}")
}

impl fmt::Display for HPComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        if self.im.is_zero() {
            write!(f, "{}", self.re_string(digits))
        } else {
            let im = self.im_string(digits);
            if im.starts_with('-') {
                write!(f, "{} - {}i", self.re_string(digits), &im[1..])
            } else {
                write!(f, "{} + {}i", self.re_string(digits), im)
            }
        }
    }
}

impl<'a> Add<&'a HPComplex> for &'a HPComplex {
    type Output = HPComplex;
    fn add(self, o: &HPComplex) -> HPComplex {
        let prec = self.prec();
        HPComplex {
            re: Float::with_val(prec, &self.re + &o.re),
            im: Float::with_val(prec, &self.im + &o.im),
        }
    }
}

impl<'a> Sub<&'a HPComplex> for &'a HPComplex {
    type Output = HPComplex;
    fn sub(self, o: &HPComplex) -> HPComplex {
        let prec = self.prec();
        HPComplex {
            re: Float::with_val(prec, &self.re - &o.re),
            im: Float::with_val(prec, &self.im - &o.im),
        }
    }
}

impl<'a> Mul<&'a HPComplex> for &'a HPComplex {
    type Output = HPComplex;
    fn mul(self, o: &HPComplex) -> HPComplex {
        let prec = self.prec();
        if self.im.is_zero() && o.im.is_zero() {
            return HPComplex::from_real(Float::with_val(prec, &self.re * &o.re));
        }
        if o.im.is_zero() {
            return self.scale(&o.re);
        }
        if self.im.is_zero() {
            return o.scale(&self.re);
        }
        let mut re = Float::with_val(prec, &self.re * &o.re);
        re -= Float::with_val(prec, &self.im * &o.im);
        let mut im = Float::with_val(prec, &self.re * &o.im);
        im += Float::with_val(prec, &self.im * &o.re);
        HPComplex { re, im }
    }
}

impl<'a> Div<&'a HPComplex> for &'a HPComplex {
    type Output = HPComplex;
    fn div(self, o: &HPComplex) -> HPComplex {
        let prec = self.prec();
        if o.im.is_zero() {
            return HPComplex {
                re: Float::with_val(prec, &self.re / &o.re),
                im: Float::with_val(prec, &self.im / &o.re),
            };
        }
        self * &o.recip()
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $m(self, o: HPComplex) -> HPComplex {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $m(self, o: &HPComplex) -> HPComplex {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<HPComplex> for &'a HPComplex {
            type Output = HPComplex;
            fn $m(self, o: HPComplex) -> HPComplex {
                self.$m(&o)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
owned_binop!(Div, div);

impl<'a> AddAssign<&'a HPComplex> for HPComplex {
    fn add_assign(&mut self, o: &HPComplex) {
        self.re += &o.re;
        if !o.im.is_zero() {
            self.im += &o.im;
        }
    }
}

impl AddAssign<HPComplex> for HPComplex {
    fn add_assign(&mut self, o: HPComplex) {
        *self += &o;
    }
}

impl<'a> SubAssign<&'a HPComplex> for HPComplex {
    fn sub_assign(&mut self, o: &HPComplex) {
        self.re -= &o.re;
        if !o.im.is_zero() {
            self.im -= &o.im;
        }
    }
}

impl SubAssign<HPComplex> for HPComplex {
    fn sub_assign(&mut self, o: HPComplex) {
        *self -= &o;
    }
}

impl<'a> MulAssign<&'a HPComplex> for HPComplex {
    fn mul_assign(&mut self, o: &HPComplex) {
        *self = &*self * o;
    }
}

impl Neg for HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        HPComplex { re: -self.re, im: -self.im }
    }
}

impl<'a> Neg for &'a HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        HPComplex { re: -self.re.clone(), im: -self.im.clone() }
    }
}
