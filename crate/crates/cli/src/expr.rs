//! Potential expressions.
//!
//! A recursive-descent parser over `+ - * / ^`, parentheses, implicit
//! multiplication, the variable `x`, the imaginary unit `i` and decimal
//! literals. Everything is reduced exactly, with Gaussian-rational
//! coefficients, to one numerator/denominator pair in lowest terms with a monic
//! denominator. The only transcendental form accepted is `exp(1/x)` standing
//! alone.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use cplxdyn_core::{clit, ModelError, Potential64, C64};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("exp(1/x) cannot be combined with other terms (offset {offset})")]
    NonRational { offset: usize },
    #[error("division by zero at offset {offset}")]
    ZeroDenominator { offset: usize },
}

/// Largest accepted `|k|` in `x^k`.
const MAX_EXPONENT: i64 = 64;

/// Gaussian rational `re + im i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gauss {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gauss {
    fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::new(BigRational::one(), BigRational::zero())
    }

    fn i() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(&self, o: &Self) -> Self {
        Self::new(&self.re + &o.re, &self.im + &o.im)
    }

    fn sub(&self, o: &Self) -> Self {
        Self::new(&self.re - &o.re, &self.im - &o.im)
    }

    fn mul(&self, o: &Self) -> Self {
        Self::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }

    fn neg(&self) -> Self {
        Self::new(-&self.re, -&self.im)
    }

    /// `None` for zero.
    fn inv(&self) -> Option<Self> {
        let d = &self.re * &self.re + &self.im * &self.im;
        if d.is_zero() {
            return None;
        }
        Some(Self::new(&self.re / &d, -&self.im / &d))
    }

    pub fn to_c64(&self) -> C64 {
        clit(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() && !q.is_negative() {
        q.numer().to_string()
    } else {
        format!("({q})")
    }
}

impl fmt::Display for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.re)),
            (true, false) if self.im.is_one() => write!(f, "i"),
            (true, false) => write!(f, "{}*i", fmt_rational(&self.im)),
            (false, false) => write!(f, "({} + {}*i)", fmt_rational(&self.re), fmt_rational(&self.im)),
        }
    }
}

/// Polynomial with ascending coefficients and no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPoly(Vec<Gauss>);

impl QPoly {
    fn new(mut c: Vec<Gauss>) -> Self {
        while c.last().is_some_and(Gauss::is_zero) {
            c.pop();
        }
        Self(c)
    }

    fn constant(c: Gauss) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Gauss] {
        &self.0
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn lead(&self) -> Option<&Gauss> {
        self.0.last()
    }

    fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        let z = Gauss::zero();
        Self::new((0..n).map(|k| self.0.get(k).unwrap_or(&z).add(o.0.get(k).unwrap_or(&z))).collect())
    }

    fn neg(&self) -> Self {
        Self(self.0.iter().map(Gauss::neg).collect())
    }

    fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self(Vec::new());
        }
        let mut c = vec![Gauss::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] = c[i + j].add(&a.mul(b));
            }
        }
        Self::new(c)
    }

    fn scale(&self, s: &Gauss) -> Self {
        Self::new(self.0.iter().map(|c| c.mul(s)).collect())
    }

    /// Remainder of division by a nonzero `d`.
    fn rem(&self, d: &Self) -> Self {
        let inv = d.lead().and_then(Gauss::inv).expect("nonzero divisor");
        let mut r = self.0.clone();
        let dn = d.0.len();
        while r.len() >= dn {
            let q = r[r.len() - 1].mul(&inv);
            let shift = r.len() - dn;
            for (k, c) in d.0.iter().enumerate() {
                r[shift + k] = r[shift + k].sub(&q.mul(c));
            }
            r.pop();
            while r.last().is_some_and(Gauss::is_zero) {
                r.pop();
            }
        }
        Self::new(r)
    }

    fn div_exact(&self, d: &Self) -> Self {
        let inv = d.lead().and_then(Gauss::inv).expect("nonzero divisor");
        let mut r = self.0.clone();
        let dn = d.0.len();
        let mut q = vec![Gauss::zero(); r.len().saturating_sub(dn) + 1];
        while r.len() >= dn && !r.is_empty() {
            let c = r[r.len() - 1].mul(&inv);
            let shift = r.len() - dn;
            for (k, dc) in d.0.iter().enumerate() {
                r[shift + k] = r[shift + k].sub(&c.mul(dc));
            }
            q[shift] = c;
            r.pop();
        }
        Self::new(q)
    }

    fn monic(&self) -> Self {
        match self.lead().and_then(Gauss::inv) {
            Some(inv) => self.scale(&inv),
            None => self.clone(),
        }
    }

    fn gcd(a: &Self, b: &Self) -> Self {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let mono = match k {
                    0 => return c.to_string(),
                    1 => "x".to_string(),
                    _ => format!("x^{k}"),
                };
                if *c == Gauss::one() {
                    mono
                } else {
                    format!("{c}*{mono}")
                }
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

/// `P/Q` in lowest terms with `Q` monic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalFn {
    num: QPoly,
    den: QPoly,
}

impl RationalFn {
    fn new(num: QPoly, den: QPoly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if num.is_zero() {
            return Some(Self { num, den: QPoly::constant(Gauss::one()) });
        }
        let g = QPoly::gcd(&num, &den);
        let (num, den) = (num.div_exact(&g), den.div_exact(&g));
        let inv = den.lead().and_then(Gauss::inv).expect("nonzero denominator");
        Some(Self { num: num.scale(&inv), den: den.scale(&inv) })
    }

    fn constant(c: Gauss) -> Self {
        Self::new(QPoly::constant(c), QPoly::constant(Gauss::one())).expect("unit denominator")
    }

    fn x() -> Self {
        Self::new(QPoly::new(vec![Gauss::zero(), Gauss::one()]), QPoly::constant(Gauss::one())).expect("unit denominator")
    }

    pub fn numerator(&self) -> &[Gauss] {
        self.num.coeffs()
    }

    pub fn denominator(&self) -> &[Gauss] {
        self.den.coeffs()
    }

    fn add(&self, o: &Self) -> Self {
        let num = self.num.mul(&o.den).add(&o.num.mul(&self.den));
        Self::new(num, self.den.mul(&o.den)).expect("product of nonzero denominators")
    }

    fn neg(&self) -> Self {
        Self { num: self.num.neg(), den: self.den.clone() }
    }

    fn mul(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("product of nonzero denominators")
    }

    fn recip(&self) -> Option<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    fn powi(&self, k: i64) -> Option<Self> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut out = Self::constant(Gauss::one());
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        Some(out)
    }
}

impl fmt::Display for RationalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.coeffs().len() == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

/// A parsed potential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PotentialSpec {
    Rational(RationalFn),
    EssentialExp,
}

impl PotentialSpec {
    pub fn to_potential(&self) -> Result<Potential64, ModelError> {
        match self {
            PotentialSpec::EssentialExp => Ok(Potential64::essential_exp()),
            PotentialSpec::Rational(r) => {
                let conv = |c: &[Gauss]| -> Vec<C64> {
                    if c.is_empty() {
                        vec![clit(0.0, 0.0)]
                    } else {
                        c.iter().map(Gauss::to_c64).collect()
                    }
                };
                Potential64::rational(conv(r.numerator()), conv(r.denominator()))
            }
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Rational(r) => write!(f, "{r}"),
            PotentialSpec::EssentialExp => write!(f, "exp(1/x)"),
        }
    }
}

pub fn parse_potential(text: &str) -> Result<PotentialSpec, ExprError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.peek().is_none() {
        return Err(p.error("empty expression"));
    }
    let v = p.expr()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(format!("unexpected '{}'", c as char)));
    }
    Ok(match v {
        Val::Rat(r) => PotentialSpec::Rational(r),
        Val::Exp(_) => PotentialSpec::EssentialExp,
    })
}

enum Val {
    Rat(RationalFn),
    /// `exp(1/x)` found at this offset.
    Exp(usize),
}

impl Val {
    fn rat(self) -> Result<RationalFn, ExprError> {
        match self {
            Val::Rat(r) => Ok(r),
            Val::Exp(offset) => Err(ExprError::NonRational { offset }),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, msg: impl Into<String>) -> ExprError {
        ExprError::Syntax { offset: self.pos, msg: msg.into() }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Val, ExprError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            let sign = match self.peek() {
                Some(b'+') => 1,
                Some(b'-') => -1,
                _ => return Ok(acc),
            };
            self.pos += 1;
            let rhs = self.term()?.rat()?;
            let rhs = if sign < 0 { rhs.neg() } else { rhs };
            acc = Val::Rat(acc.rat()?.add(&rhs));
        }
    }

    fn starts_primary(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.' || c == b'(' || c.is_ascii_alphabetic())
    }

    fn term(&mut self) -> Result<Val, ExprError> {
        let mut acc = self.unary()?;
        loop {
            self.skip_ws();
            let at = self.pos;
            if self.eat(b'*') {
                let rhs = self.unary()?.rat()?;
                acc = Val::Rat(acc.rat()?.mul(&rhs));
            } else if self.eat(b'/') {
                let rhs = self.unary()?.rat()?;
                let inv = rhs.recip().ok_or(ExprError::ZeroDenominator { offset: at })?;
                acc = Val::Rat(acc.rat()?.mul(&inv));
            } else if self.starts_primary() {
                let rhs = self.power()?.rat()?;
                acc = Val::Rat(acc.rat()?.mul(&rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Val, ExprError> {
        if self.eat(b'-') {
            return Ok(Val::Rat(self.unary()?.rat()?.neg()));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Val, ExprError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let paren = self.eat(b'(');
        self.skip_ws();
        let k = self.integer()?;
        if paren && !self.eat(b')') {
            return Err(self.error("expected ')'"));
        }
        if k.abs() > MAX_EXPONENT {
            return Err(ExprError::Syntax { offset: at, msg: format!("exponent {k} exceeds {MAX_EXPONENT}") });
        }
        let r = base.rat()?;
        Ok(Val::Rat(r.powi(k).ok_or(ExprError::ZeroDenominator { offset: at })?))
    }

    fn integer(&mut self) -> Result<i64, ExprError> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'-' | b'+')) {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        s.parse().map_err(|_| ExprError::Syntax { offset: start, msg: "expected an integer exponent".into() })
    }

    fn primary(&mut self) -> Result<Val, ExprError> {
        self.skip_ws();
        let at = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Val::Rat(RationalFn::constant(self.number()?))),
            Some(_) if self.src[at..].starts_with(b"exp") => {
                self.pos += 3;
                if !self.eat(b'(') {
                    return Err(self.error("expected '(' after exp"));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                match arg {
                    Val::Rat(r) if r == RationalFn::x().recip().expect("x is nonzero") => Ok(Val::Exp(at)),
                    _ => Err(ExprError::NonRational { offset: at }),
                }
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Val::Rat(RationalFn::constant(Gauss::i())))
            }
            Some(b'x') => {
                self.pos += 1;
                Ok(Val::Rat(RationalFn::x()))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let end = self.src[at..].iter().position(|c| !c.is_ascii_alphanumeric()).map_or(self.src.len(), |k| at + k);
                let name = String::from_utf8_lossy(&self.src[at..end]).into_owned();
                Err(self.error(format!("unknown identifier '{name}'")))
            }
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
        }
    }

    /// Decimal literal with optional exponent, converted exactly.
    fn number(&mut self) -> Result<Gauss, ExprError> {
        let start = self.pos;
        let mut digits = String::new();
        let mut frac = 0i64;
        let mut seen_dot = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                digits.push(c as char);
                if seen_dot {
                    frac += 1;
                }
            } else if c == b'.' && !seen_dot {
                seen_dot = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits.is_empty() {
            return Err(ExprError::Syntax { offset: start, msg: "malformed number".into() });
        }
        let mut exp = 0i64;
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let rest = &self.src[self.pos + 1..];
            let signed = matches!(rest.first(), Some(b'+' | b'-'));
            let digit_at = usize::from(signed);
            if rest.get(digit_at).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
                exp = self.integer()?;
                if exp.abs() > 400 {
                    return Err(ExprError::Syntax { offset: start, msg: "exponent out of range".into() });
                }
            }
        }
        let mantissa: BigInt = digits.parse().expect("digits");
        let shift = exp - frac;
        let ten = BigInt::from(10u8);
        let scale = BigRational::from_integer(num_traits::pow(ten, shift.unsigned_abs() as usize));
        let m = BigRational::from_integer(mantissa);
        let value = if shift >= 0 { m * scale } else { m / scale };
        Ok(Gauss::new(value, BigRational::zero()))
    }
}
