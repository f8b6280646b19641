//! Invariant ideals of the univariate subring `F[x1]`.
//!
//! Every ideal of `F[x1]` is principal, and `(f)` is invariant under a
//! derivation `d` exactly when `f` divides `d(f)`. The maximal invariant
//! ideals containing `(f)` are generated by minimal invariant divisors of `f`,
//! found by enumerating divisors over the irreducible factorization of `f`.
//! Over prime fields the factorization is complete (squarefree decomposition
//! followed by Berlekamp). Over the rationals only linear factors, and
//! leftover cofactors of degree 2 or 3, are certified irreducible.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coeff::{FieldSpec, Scalar};
use crate::ring::Ring;

/// Divisor enumeration is exponential; refuse more distinct factors than this.
pub const MAX_FACTORS: usize = 12;

/// Primes up to this size split Berlekamp factors by trying every constant;
/// larger ones use random elements of the Berlekamp algebra.
const ENUMERATION_LIMIT: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error("operation requires a nonzero polynomial")]
    ZeroPolynomial,
    #[error("polynomial must be monic")]
    NotMonic,
    #[error("polynomial must have degree at least 1")]
    Constant,
    #[error("Berlekamp factorization needs a prime field, got {0}")]
    NotPrimeField(FieldSpec),
    #[error("(f) is not invariant under the given derivations")]
    NotInvariant,
    #[error(
        "{0} distinct irreducible factors exceed the divisor-enumeration cap of {MAX_FACTORS}"
    )]
    TooManyFactors(usize),
    #[error("field mismatch between polynomial and derivations")]
    FieldMismatch,
}

/// Dense univariate polynomial; `coeffs[k]` multiplies `x^k`. No trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UniPoly {
    field: FieldSpec,
    coeffs: Vec<Scalar>,
}

impl UniPoly {
    pub fn new(field: FieldSpec, mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        UniPoly { field, coeffs }
    }

    /// From integer coefficients, lowest degree first.
    pub fn from_i64(field: FieldSpec, cs: &[i64]) -> Self {
        Self::new(
            field,
            cs.iter().map(|&c| Scalar::from_i64(field, c)).collect(),
        )
    }

    pub fn zero(field: FieldSpec) -> Self {
        UniPoly {
            field,
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: FieldSpec) -> Self {
        Self::constant(Scalar::one(field))
    }

    pub fn constant(c: Scalar) -> Self {
        Self::new(c.field(), vec![c])
    }

    pub fn x(field: FieldSpec) -> Self {
        Self::new(field, vec![Scalar::zero(field), Scalar::one(field)])
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coeff(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading_coeff().is_some_and(Scalar::is_one)
    }

    pub fn monic(&self) -> UniPoly {
        match self.leading_coeff().and_then(Scalar::inv) {
            Some(inv) => self.scale(&inv),
            None => self.clone(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> UniPoly {
        Self::new(self.field, self.coeffs.iter().map(|a| a * c).collect())
    }

    fn coeff(&self, k: usize) -> Scalar {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.field))
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            self.field,
            (0..n).map(|k| &self.coeff(k) + &other.coeff(k)).collect(),
        )
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            self.field,
            (0..n).map(|k| &self.coeff(k) - &other.coeff(k)).collect(),
        )
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.field);
        }
        let mut out = vec![Scalar::zero(self.field); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Self::new(self.field, out)
    }

    pub fn pow(&self, e: u32) -> UniPoly {
        (0..e).fold(Self::one(self.field), |acc, _| acc.mul(self))
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let inv = d.leading_coeff().unwrap().inv().unwrap();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Scalar::zero(self.field); rem.len().saturating_sub(dd)];
        while rem.len() > dd {
            let top = rem.len() - 1;
            let c = &rem[top] * &inv;
            if !c.is_zero() {
                let shift = top - dd;
                for (k, dk) in d.coeffs.iter().enumerate() {
                    rem[shift + k] = &rem[shift + k] - &(&c * dk);
                }
                quot[shift] = c;
            }
            rem.pop();
            while rem.last().is_some_and(Scalar::is_zero) {
                rem.pop();
            }
        }
        (Self::new(self.field, quot), Self::new(self.field, rem))
    }

    pub fn rem(&self, d: &UniPoly) -> UniPoly {
        self.divrem(d).1
    }

    pub fn divides(&self, other: &UniPoly) -> bool {
        other.rem(self).is_zero()
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> UniPoly {
        let cs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * &Scalar::from_i64(self.field, k as i64))
            .collect();
        Self::new(self.field, cs)
    }

    /// `self^e mod m`.
    pub fn pow_mod(&self, e: &BigUint, m: &UniPoly) -> UniPoly {
        let mut acc = Self::one(self.field).rem(m);
        let base = self.rem(m);
        for bit in (0..e.bits()).rev() {
            acc = acc.mul(&acc).rem(m);
            if e.bit(bit) {
                acc = acc.mul(&base).rem(m);
            }
        }
        acc
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.coeffs
            .iter()
            .rev()
            .fold(Scalar::zero(self.field), |acc, c| &(&acc * x) + c)
    }

    /// Text form in the variable `var`, highest degree first.
    pub fn format_with(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, c) in self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
        {
            let negative = c.is_negative();
            let abs = if negative { -c } else { c.clone() };
            if out.is_empty() {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mono = match k {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{k}"),
            };
            match (abs.is_one(), mono.is_empty()) {
                (_, true) => out.push_str(&abs.to_string()),
                (true, false) => out.push_str(&mono),
                (false, false) => out.push_str(&format!("{abs}*{mono}")),
            }
        }
        out
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_with("x1"))
    }
}

impl PartialOrd for UniPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Degree first, then coefficients from the top down.
impl Ord for UniPoly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

/// A derivation of `F[x1]` determined by the image of `x1`:
/// `d(f) = f'(x1) * image`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnivariateDerivation {
    pub image: UniPoly,
}

impl UnivariateDerivation {
    pub fn apply(&self, f: &UniPoly) -> UniPoly {
        f.derivative().mul(&self.image)
    }
}

/// The derivations `delta_2..delta_n` restricted to `F[x1]`.
pub fn restrict_derivations(ring: &Ring) -> Vec<UnivariateDerivation> {
    let field = ring.field();
    (1..ring.nvars())
        .map(|i| {
            let mut coeffs = Vec::new();
            for (m, c) in ring.delta(i, 0) {
                let k = m.exponents()[0] as usize;
                debug_assert!(m.exponents()[1..].iter().all(|&e| e == 0));
                if coeffs.len() <= k {
                    coeffs.resize(k + 1, Scalar::zero(field));
                }
                coeffs[k] = c.clone();
            }
            UnivariateDerivation {
                image: UniPoly::new(field, coeffs),
            }
        })
        .collect()
}

/// `f` divides `d(f)` for every `d`.
pub fn invariant_check(f: &UniPoly, ds: &[UnivariateDerivation]) -> Result<bool, InvariantError> {
    if f.is_zero() {
        return Err(InvariantError::ZeroPolynomial);
    }
    if ds
        .iter()
        .any(|d| !d.image.is_zero() && d.image.field() != f.field())
    {
        return Err(InvariantError::FieldMismatch);
    }
    Ok(ds.iter().all(|d| f.divides(&d.apply(f))))
}

fn require_monic(f: &UniPoly) -> Result<(), InvariantError> {
    if f.is_zero() {
        Err(InvariantError::ZeroPolynomial)
    } else if !f.is_monic() {
        Err(InvariantError::NotMonic)
    } else {
        Ok(())
    }
}

/// Squarefree decomposition: pairs `(s, m)` with `s` monic squarefree,
/// pairwise coprime, and `f = prod s^m`. Sorted by multiplicity.
pub fn factor_squarefree(f: &UniPoly) -> Result<Vec<(UniPoly, u32)>, InvariantError> {
    require_monic(f)?;
    let mut out = match f.field {
        FieldSpec::Rationals => yun(f),
        FieldSpec::PrimeField(p) => squarefree_mod_p(f, p.get()),
    };
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

fn yun(f: &UniPoly) -> Vec<(UniPoly, u32)> {
    let mut out = Vec::new();
    let fp = f.derivative();
    let a0 = f.gcd(&fp);
    let mut b = f.divrem(&a0).0;
    let mut c = fp.divrem(&a0).0;
    let mut d = c.sub(&b.derivative());
    let mut i = 1;
    while b.degree().unwrap_or(0) > 0 {
        let a = b.gcd(&d);
        if a.degree().unwrap_or(0) > 0 {
            out.push((a.clone(), i));
        }
        b = b.divrem(&a).0;
        c = d.divrem(&a).0;
        d = c.sub(&b.derivative());
        i += 1;
    }
    out
}

fn squarefree_mod_p(f: &UniPoly, p: u32) -> Vec<(UniPoly, u32)> {
    let mut out = Vec::new();
    let one = UniPoly::one(f.field);
    let mut c = f.gcd(&f.derivative());
    let mut w = f.divrem(&c).0;
    let mut i = 1u32;
    while !w.is_one() {
        let y = w.gcd(&c);
        let fac = w.divrem(&y).0;
        if !fac.is_one() {
            out.push((fac, i));
        }
        w = y;
        c = c.divrem(&w).0;
        i += 1;
    }
    if c != one {
        let root = pth_root(&c, p);
        for (g, m) in squarefree_mod_p(&root, p) {
            out.push((g, m * p));
        }
    }
    out
}

/// `c(x) = r(x)^p` with `r` read off the exponents divisible by `p`.
fn pth_root(c: &UniPoly, p: u32) -> UniPoly {
    let p = p as usize;
    let cs = c.coeffs.iter().step_by(p).cloned().collect();
    UniPoly::new(c.field, cs)
}

/// Complete factorization over a prime field into monic irreducibles,
/// repeated according to multiplicity and sorted.
pub fn factor_berlekamp(f: &UniPoly) -> Result<Vec<UniPoly>, InvariantError> {
    let FieldSpec::PrimeField(p) = f.field else {
        return Err(InvariantError::NotPrimeField(f.field));
    };
    let mut out = Vec::new();
    for (s, m) in factor_squarefree(f)? {
        for g in berlekamp_squarefree(&s, p.get()) {
            out.extend(std::iter::repeat_n(g, m as usize));
        }
    }
    out.sort();
    Ok(out)
}

/// Null space of a dense matrix given by rows.
fn null_space(rows: &[Vec<Scalar>], ncols: usize, field: FieldSpec) -> Vec<Vec<Scalar>> {
    let mut m: Vec<Vec<Scalar>> = rows.to_vec();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(pr) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][col].inv().unwrap();
        m[r].iter_mut().for_each(|x| *x = &*x * &inv);
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let c = m[i][col].clone();
                let pivot_row = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                    *x = &*x - &(&c * y);
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![Scalar::zero(field); ncols];
            v[fc] = Scalar::one(field);
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -&m[row][fc];
            }
            v
        })
        .collect()
}

fn berlekamp_squarefree(f: &UniPoly, p: u32) -> Vec<UniPoly> {
    let field = f.field;
    let n = f.degree().unwrap_or(0);
    if n <= 1 {
        return if n == 1 { vec![f.clone()] } else { Vec::new() };
    }
    // Row i of Q holds x^(i p) mod f.
    let xp = UniPoly::x(field).pow_mod(&BigUint::from(p), f);
    let mut q_rows = Vec::with_capacity(n);
    let mut cur = UniPoly::one(field);
    for _ in 0..n {
        q_rows.push((0..n).map(|j| cur.coeff(j)).collect::<Vec<_>>());
        cur = cur.mul(&xp).rem(f);
    }
    // g is in the Berlekamp algebra iff g (Q - I) = 0, i.e. (Q - I)^T g = 0.
    let a: Vec<Vec<Scalar>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let v = q_rows[i][j].clone();
                    if i == j {
                        &v - &Scalar::one(field)
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let basis: Vec<UniPoly> = null_space(&a, n, field)
        .into_iter()
        .map(|v| UniPoly::new(field, v))
        .filter(|g| g.degree().unwrap_or(0) > 0)
        .collect();
    let k = basis.len() + 1;
    let mut factors = vec![f.clone()];
    if k == 1 {
        return factors;
    }
    if p <= ENUMERATION_LIMIT {
        for v in &basis {
            if factors.len() == k {
                break;
            }
            let mut next = Vec::new();
            for h in &factors {
                if h.degree() == Some(1) {
                    next.push(h.clone());
                    continue;
                }
                for s in 0..p {
                    let shifted = v.sub(&UniPoly::constant(Scalar::from_i64(field, s as i64)));
                    let g = h.gcd(&shifted);
                    if g.degree().unwrap_or(0) > 0 {
                        next.push(g);
                    }
                }
            }
            factors = next;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let half = BigUint::from((p - 1) / 2);
        while factors.len() < k {
            let mut v = UniPoly::zero(field);
            for b in &basis {
                let r = Scalar::from_i64(field, rng.gen_range(0..p as i64));
                v = v.add(&b.scale(&r));
            }
            let mut next = Vec::new();
            for h in &factors {
                if h.degree() == Some(1) {
                    next.push(h.clone());
                    continue;
                }
                let w = v.pow_mod(&half, h).sub(&UniPoly::one(field));
                let g = h.gcd(&w);
                let dg = g.degree().unwrap_or(0);
                if dg > 0 && Some(dg) < h.degree() {
                    next.push(h.divrem(&g).0.monic());
                    next.push(g);
                } else {
                    next.push(h.clone());
                }
            }
            factors = next;
        }
    }
    factors.into_iter().map(|g| g.monic()).collect()
}

/// Irreducible factorization with multiplicities. `exact` is false when a
/// rational cofactor of degree at least 4 could not be split further; it is
/// then returned as a single (possibly reducible) factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub factors: Vec<(UniPoly, u32)>,
    pub exact: bool,
}

pub fn factor(f: &UniPoly) -> Result<Factorization, InvariantError> {
    require_monic(f)?;
    let mut factors: Vec<(UniPoly, u32)> = Vec::new();
    let mut exact = true;
    match f.field {
        FieldSpec::PrimeField(p) => {
            for (s, m) in factor_squarefree(f)? {
                for g in berlekamp_squarefree(&s, p.get()) {
                    factors.push((g, m));
                }
            }
        }
        FieldSpec::Rationals => {
            for (s, m) in factor_squarefree(f)? {
                let (roots, rest) = rational_roots(&s);
                for r in roots {
                    let lin = UniPoly::new(f.field, vec![-&r, Scalar::one(f.field)]);
                    factors.push((lin, m));
                }
                match rest.degree() {
                    Some(0) | None => {}
                    Some(2) | Some(3) => factors.push((rest, m)),
                    Some(_) => {
                        exact = false;
                        factors.push((rest, m));
                    }
                }
            }
        }
    }
    factors.sort();
    Ok(Factorization { factors, exact })
}

fn divisors(n: &BigInt) -> Option<Vec<u64>> {
    let n = n.abs().to_u64()?;
    if n > 1_000_000_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    Some(out)
}

/// Rational roots of a monic squarefree polynomial and the cofactor left after
/// dividing them out. Gives up (returns no roots) when the integer
/// coefficients are too large to enumerate divisors.
fn rational_roots(f: &UniPoly) -> (Vec<Scalar>, UniPoly) {
    let field = f.field;
    let mut rest = f.clone();
    let mut roots = Vec::new();
    let zero = Scalar::zero(field);
    if f.coeffs.first().is_some_and(Scalar::is_zero) {
        roots.push(zero.clone());
        rest = rest.divrem(&UniPoly::x(field)).0;
    }
    if rest.degree().unwrap_or(0) == 0 {
        return (roots, rest);
    }
    let denom_lcm = rest
        .coeffs
        .iter()
        .filter_map(|c| c.as_rational().map(|r| r.denom().clone()))
        .fold(BigInt::one(), |acc, d| acc.lcm(&d));
    let ints: Vec<BigInt> = rest
        .coeffs
        .iter()
        .map(|c| (c.as_rational().unwrap() * &denom_lcm).to_integer())
        .collect();
    let (Some(num_divs), Some(den_divs)) = (divisors(&ints[0]), divisors(ints.last().unwrap()))
    else {
        return (roots, rest);
    };
    let mut candidates: Vec<Scalar> = Vec::new();
    for &a in &num_divs {
        for &b in &den_divs {
            for sign in [1i64, -1] {
                let r = Scalar::Rational(num_rational::BigRational::new(
                    BigInt::from(a) * sign,
                    BigInt::from(b),
                ));
                if !candidates.contains(&r) {
                    candidates.push(r);
                }
            }
        }
    }
    candidates.sort();
    for r in candidates {
        if rest.degree().unwrap_or(0) == 0 {
            break;
        }
        if rest.eval(&r).is_zero() {
            let lin = UniPoly::new(field, vec![-&r, Scalar::one(field)]);
            rest = rest.divrem(&lin).0;
            roots.push(r);
        }
    }
    (roots, rest)
}

/// The result of splitting `(f)` into maximal invariant ideals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantFactorReport {
    pub input: UniPoly,
    /// Monic generators of the maximal invariant ideals containing `(f)`, ascending.
    pub maximal: Vec<UniPoly>,
    /// Exponent of each entry of `maximal`.
    pub exponents: Vec<u32>,
    /// The irreducible factorization was exact and the product check passed.
    pub complete: bool,
    pub notes: Vec<String>,
}

struct DivisorLattice {
    factors: Vec<(UniPoly, u32)>,
    exact: bool,
}

impl DivisorLattice {
    fn build(f: &UniPoly) -> Result<Self, InvariantError> {
        let Factorization { factors, exact } = factor(f)?;
        if factors.len() > MAX_FACTORS {
            return Err(InvariantError::TooManyFactors(factors.len()));
        }
        Ok(DivisorLattice { factors, exact })
    }

    fn poly(&self, exps: &[u32]) -> UniPoly {
        let field = self
            .factors
            .first()
            .map(|f| f.0.field)
            .unwrap_or(FieldSpec::Rationals);
        self.factors
            .iter()
            .zip(exps)
            .fold(UniPoly::one(field), |acc, ((g, _), &e)| acc.mul(&g.pow(e)))
    }

    /// Every exponent vector except the zero vector.
    fn nontrivial(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new()];
        for (_, m) in &self.factors {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=*m).map(move |e| {
                        let mut v = prefix.clone();
                        v.push(e);
                        v
                    })
                })
                .collect();
        }
        out.retain(|v| v.iter().any(|&e| e > 0));
        out
    }
}

fn divides_exps(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn check_input(f: &UniPoly, ds: &[UnivariateDerivation]) -> Result<(), InvariantError> {
    require_monic(f)?;
    if f.degree() == Some(0) {
        return Err(InvariantError::Constant);
    }
    if !invariant_check(f, ds)? {
        return Err(InvariantError::NotInvariant);
    }
    Ok(())
}

fn maximal_exps(
    lattice: &DivisorLattice,
    ds: &[UnivariateDerivation],
) -> Result<Vec<Vec<u32>>, InvariantError> {
    let mut invariant = Vec::new();
    for e in lattice.nontrivial() {
        if invariant_check(&lattice.poly(&e), ds)? {
            invariant.push(e);
        }
    }
    // Larger ideals have smaller generators: keep divisors with no proper invariant divisor.
    let minimal: Vec<Vec<u32>> = invariant
        .iter()
        .filter(|e| !invariant.iter().any(|o| o != *e && divides_exps(o, e)))
        .cloned()
        .collect();
    Ok(minimal)
}

/// Generators of the maximal proper invariant ideals containing `(f)`, ascending.
pub fn maximal_invariant(
    f: &UniPoly,
    ds: &[UnivariateDerivation],
) -> Result<Vec<UniPoly>, InvariantError> {
    check_input(f, ds)?;
    let lattice = DivisorLattice::build(f)?;
    let mut out: Vec<UniPoly> = maximal_exps(&lattice, ds)?
        .iter()
        .map(|e| lattice.poly(e))
        .collect();
    out.sort();
    Ok(out)
}

/// Writes `(f)` as a product of powers of maximal invariant ideals by peeling
/// off, in ascending order, a maximal generator whose cofactor stays invariant.
pub fn invariant_factorization(
    f: &UniPoly,
    ds: &[UnivariateDerivation],
) -> Result<InvariantFactorReport, InvariantError> {
    check_input(f, ds)?;
    let lattice = DivisorLattice::build(f)?;
    let mut maximal: Vec<(UniPoly, Vec<u32>)> = maximal_exps(&lattice, ds)?
        .into_iter()
        .map(|e| (lattice.poly(&e), e))
        .collect();
    maximal.sort_by(|a, b| a.0.cmp(&b.0));
    let mut notes = Vec::new();
    if !lattice.exact {
        notes.push(
            "rational factorization incomplete: a cofactor of degree >= 4 was kept whole"
                .to_string(),
        );
    }

    let mut exponents = vec![0u32; maximal.len()];
    let mut running: Vec<u32> = lattice.factors.iter().map(|(_, m)| *m).collect();
    let mut peeled = true;
    while running.iter().any(|&e| e > 0) {
        let step = maximal.iter().enumerate().find_map(|(idx, (_, e))| {
            if !divides_exps(e, &running) {
                return None;
            }
            let rest: Vec<u32> = running.iter().zip(e).map(|(r, x)| r - x).collect();
            let rest_poly = lattice.poly(&rest);
            let ok = rest_poly.is_one() || invariant_check(&rest_poly, ds).unwrap_or(false);
            ok.then_some((idx, rest))
        });
        match step {
            Some((idx, rest)) => {
                exponents[idx] += 1;
                running = rest;
            }
            None => {
                notes.push(format!(
                    "no maximal factor peels the cofactor {}",
                    lattice.poly(&running)
                ));
                peeled = false;
                break;
            }
        }
    }
    let product = maximal
        .iter()
        .zip(&exponents)
        .fold(UniPoly::one(f.field), |acc, ((g, _), &e)| {
            acc.mul(&g.pow(e))
        });
    let product_ok = peeled && &product == f;
    if peeled && !product_ok {
        notes.push("product of maximal factors does not reconstruct the input".to_string());
    }
    Ok(InvariantFactorReport {
        input: f.clone(),
        maximal: maximal.into_iter().map(|(g, _)| g).collect(),
        exponents,
        complete: product_ok && lattice.exact,
        notes,
    })
}
