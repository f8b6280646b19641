//! Exact scalar arithmetic over the rationals and prime fields.
//!
//! Rationals are kept as reduced fractions with a positive denominator, residues
//! as integers in `[0, p)`. Both forms are canonical, so structural equality is
//! field equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Errors raised by scalar arithmetic and literal parsing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoeffError {
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(FieldSpec, FieldSpec),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not a prime in [2, 2^31)")]
    NotPrime(u64),
    #[error("malformed number literal `{0}`")]
    MalformedLiteral(String),
    #[error("fraction literal `{0}` is not allowed over {1}")]
    FractionOverPrimeField(String, FieldSpec),
}

/// A prime modulus `2 <= p < 2^31`, verified at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u32);

impl Prime {
    pub fn new(p: u64) -> Result<Self, CoeffError> {
        if !(2..(1u64 << 31)).contains(&p) || !is_prime(p) {
            return Err(CoeffError::NotPrime(p));
        }
        Ok(Prime(p as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The base field of a ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldSpec {
    Rationals,
    PrimeField(Prime),
}

impl FieldSpec {
    pub fn prime(p: u64) -> Result<Self, CoeffError> {
        Prime::new(p).map(FieldSpec::PrimeField)
    }

    /// Characteristic of the field (0 for the rationals).
    pub fn characteristic(self) -> u32 {
        match self {
            FieldSpec::Rationals => 0,
            FieldSpec::PrimeField(p) => p.get(),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rationals => write!(f, "Q"),
            FieldSpec::PrimeField(p) => write!(f, "F_{}", p.get()),
        }
    }
}

/// An element of a [`FieldSpec`] in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rational(BigRational),
    Residue { value: u32, p: Prime },
}

/// The arithmetic operations exposed by [`field_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked binary arithmetic on two scalars of the same field.
pub fn field_arith(a: &Scalar, b: &Scalar, op: FieldOp) -> Result<Scalar, CoeffError> {
    if a.field() != b.field() {
        return Err(CoeffError::FieldMismatch(a.field(), b.field()));
    }
    Ok(match op {
        FieldOp::Add => a + b,
        FieldOp::Sub => a - b,
        FieldOp::Mul => a * b,
        FieldOp::Div => a * &b.inv().ok_or(CoeffError::DivisionByZero)?,
    })
}

/// Parses `'-'? digits ('/' digits)?`. Fractions are legal only over the rationals.
pub fn parse_scalar(text: &str, field: FieldSpec) -> Result<Scalar, CoeffError> {
    let malformed = || CoeffError::MalformedLiteral(text.to_string());
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let digits = |s: &str| -> Result<BigInt, CoeffError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        s.parse::<BigInt>().map_err(|_| malformed())
    };
    let value = match body.split_once('/') {
        Some((num, den)) => {
            if let FieldSpec::PrimeField(_) = field {
                return Err(CoeffError::FractionOverPrimeField(text.to_string(), field));
            }
            let num = digits(num)?;
            let den = digits(den)?;
            if den.is_zero() {
                return Err(CoeffError::DivisionByZero);
            }
            Scalar::Rational(BigRational::new(num, den))
        }
        None => Scalar::from_bigint(field, &digits(body)?),
    };
    Ok(if negative { -&value } else { value })
}

impl Scalar {
    pub fn zero(field: FieldSpec) -> Self {
        Self::from_i64(field, 0)
    }

    pub fn one(field: FieldSpec) -> Self {
        Self::from_i64(field, 1)
    }

    pub fn from_i64(field: FieldSpec, n: i64) -> Self {
        match field {
            FieldSpec::Rationals => Scalar::Rational(BigRational::from_integer(BigInt::from(n))),
            FieldSpec::PrimeField(p) => Scalar::Residue {
                value: n.rem_euclid(p.get() as i64) as u32,
                p,
            },
        }
    }

    pub fn from_bigint(field: FieldSpec, n: &BigInt) -> Self {
        match field {
            FieldSpec::Rationals => Scalar::Rational(BigRational::from_integer(n.clone())),
            FieldSpec::PrimeField(p) => {
                let r = n.mod_floor(&BigInt::from(p.get()));
                Scalar::Residue {
                    value: r.to_u32().expect("residue below p"),
                    p,
                }
            }
        }
    }

    pub fn from_biguint(field: FieldSpec, n: &BigUint) -> Self {
        Self::from_bigint(field, &BigInt::from(n.clone()))
    }

    /// A rational number `num/den`; only meaningful over the rationals.
    pub fn rational(num: i64, den: i64) -> Self {
        Scalar::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn field(&self) -> FieldSpec {
        match self {
            Scalar::Rational(_) => FieldSpec::Rationals,
            Scalar::Residue { p, .. } => FieldSpec::PrimeField(*p),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Residue { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_one(),
            Scalar::Residue { value, .. } => *value == 1,
        }
    }

    /// True for the rationals with a negative value; residues are never negative.
    pub fn is_negative(&self) -> bool {
        matches!(self, Scalar::Rational(r) if r.is_negative())
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Scalar> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Scalar::Rational(r) => Scalar::Rational(r.recip()),
            Scalar::Residue { value, p } => Scalar::Residue {
                value: pow_mod(*value as u64, p.get() as u64 - 2, p.get() as u64) as u32,
                p: *p,
            },
        })
    }

    pub fn pow(&self, mut e: u64) -> Scalar {
        let mut base = self.clone();
        let mut acc = Scalar::one(self.field());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Integer value of a rational with denominator one.
    pub fn to_integer(&self) -> Option<BigInt> {
        match self {
            Scalar::Rational(r) if r.is_integer() => Some(r.numer().clone()),
            Scalar::Rational(_) => None,
            Scalar::Residue { value, .. } => Some(BigInt::from(*value)),
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            Scalar::Residue { .. } => None,
        }
    }

    /// Residue value for prime-field scalars.
    pub fn residue(&self) -> Option<u32> {
        match self {
            Scalar::Residue { value, .. } => Some(*value),
            Scalar::Rational(_) => None,
        }
    }

    fn residues<'a>(&'a self, other: &'a Scalar) -> (u64, u64, Prime) {
        match (self, other) {
            (Scalar::Residue { value: a, p }, Scalar::Residue { value: b, p: q }) if p == q => {
                (*a as u64, *b as u64, *p)
            }
            _ => panic!("field mismatch: {} vs {}", self.field(), other.field()),
        }
    }
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc
}

// The operator impls panic on mismatched fields. Polynomials never mix fields, so a
// mismatch there is a logic error; `field_arith` is the checked entry point.

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        if let (Scalar::Rational(a), Scalar::Rational(b)) = (self, rhs) {
            return Scalar::Rational(a + b);
        }
        let (a, b, p) = self.residues(rhs);
        Scalar::Residue {
            value: ((a + b) % p.get() as u64) as u32,
            p,
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        if let (Scalar::Rational(a), Scalar::Rational(b)) = (self, rhs) {
            return Scalar::Rational(a - b);
        }
        let (a, b, p) = self.residues(rhs);
        let m = p.get() as u64;
        Scalar::Residue {
            value: ((a + m - b) % m) as u32,
            p,
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        if let (Scalar::Rational(a), Scalar::Rational(b)) = (self, rhs) {
            return Scalar::Rational(a * b);
        }
        let (a, b, p) = self.residues(rhs);
        Scalar::Residue {
            value: (a * b % p.get() as u64) as u32,
            p,
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(a) => Scalar::Rational(-a),
            Scalar::Residue { value, p } => Scalar::Residue {
                value: ((p.get() - value) % p.get()),
                p: *p,
            },
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Numeric order on rationals, residue order on prime fields; rationals sort first.
impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.cmp(b),
            (Scalar::Residue { value: a, p }, Scalar::Residue { value: b, p: q }) => {
                p.cmp(q).then(a.cmp(b))
            }
            (Scalar::Rational(_), Scalar::Residue { .. }) => Ordering::Less,
            (Scalar::Residue { .. }, Scalar::Rational(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Scalar::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Scalar::Residue { value, .. } => write!(f, "{value}"),
        }
    }
}
