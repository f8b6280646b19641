//! Iterated differential polynomial rings `F[x1, d1, ..., xn, dn]`.
//!
//! Elements are stored in PBW normal form: finite combinations of ordered words
//! `x1^e1 * ... * xn^en`. The only relations are `xi * xj - xj * xi = delta_i(xj)`
//! for `i > j`, where `delta_i(xj)` is a polynomial in `x1..xj`.
//!
//! Multiplication recurses on the top variable of the left factor. Moving
//! `xk^e` past an element `c` of the subring in `x1..x(k-1)` uses
//! `xk^e * c = sum_t binom(e, t) * Dk^t(c) * xk^(e-t)`, with `Dk` the Leibniz
//! extension of row `k` of the derivation table. Everything the recursion
//! touches lives in a strictly smaller subring, so it terminates for any
//! table that satisfies the support constraint.
//!
//! Variable indices in this API are 0-based. Reports print them 1-based.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use thiserror::Error;

use crate::coeff::{FieldSpec, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("ring must have at least one variable")]
    NoVariables,
    #[error("invalid variable name `{0}`")]
    BadName(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("derivation table entry ({i},{j}) must satisfy n >= i > j >= 1")]
    BadEntryIndex { i: usize, j: usize },
    #[error("monomial has {found} exponents, ring has {expected} variables")]
    BadMonomial { expected: usize, found: usize },
    #[error("coefficient over {found} in a ring over {expected}")]
    FieldMismatch {
        expected: FieldSpec,
        found: FieldSpec,
    },
    #[error("derivation table failed validation: {0}")]
    Invalid(ValidationReport),
    #[error("operands belong to different rings")]
    RingMismatch,
    #[error("delta_{i} is only defined on x1..x{max}, argument uses x{var}", i = .i + 1, max = .i, var = .var + 1)]
    OutsideDomain { i: usize, var: usize },
    #[error("variable index {0} out of range")]
    NoSuchVariable(usize),
    #[error("operation requires a nonzero polynomial")]
    ZeroPolynomial,
    #[error("operation requires a filtered ring (all table entries of degree <= 1)")]
    Unfiltered,
}

/// An ordered word `x1^e1 * ... * xn^en`, ordered by deglex with `x1 < x2 < ... < xn`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn from_exponents(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Largest variable index with a positive exponent.
    pub fn top_var(&self) -> Option<usize> {
        self.0.iter().rposition(|&e| e > 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self` when `self` divides `other`.
    pub fn quotient_of(&self, other: &Monomial) -> Option<Monomial> {
        self.divides(other)
            .then(|| Monomial(other.0.iter().zip(&self.0).map(|(b, a)| b - a).collect()))
    }

    /// Exponent-wise sum. Equals the ring product only when every variable of
    /// `self` is at most every variable of `other`.
    pub fn times(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.max(b))
                .collect(),
        )
    }

    /// Splits into the part in variables `< k` and the part in variables `>= k`.
    fn split_at(&self, k: usize) -> (Monomial, Monomial) {
        let mut low = self.0.clone();
        let mut high = self.0.clone();
        low[k..].iter_mut().for_each(|e| *e = 0);
        high[..k].iter_mut().for_each(|e| *e = 0);
        (Monomial(low), Monomial(high))
    }

    fn with_exponent(&self, i: usize, e: u32) -> Monomial {
        let mut m = self.clone();
        m.0[i] = e;
        m
    }

    fn uses_only_below(&self, k: usize) -> bool {
        self.0[k..].iter().all(|&e| e == 0)
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

/// Sparse coefficient map; zero coefficients are never stored.
pub type Terms = BTreeMap<Monomial, Scalar>;

pub(crate) fn add_term(terms: &mut Terms, m: Monomial, c: Scalar) {
    if c.is_zero() {
        return;
    }
    match terms.entry(m) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let sum = o.get() + &c;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

/// `acc += scale * f`.
pub(crate) fn add_scaled(acc: &mut Terms, f: &Terms, scale: &Scalar) {
    for (m, c) in f {
        add_term(acc, m.clone(), c * scale);
    }
}

fn single(m: Monomial, c: Scalar) -> Terms {
    let mut t = Terms::new();
    add_term(&mut t, m, c);
    t
}

/// The table `delta_i(xj)` for `i > j` (0-based). Omitted entries are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivationTable {
    entries: BTreeMap<(usize, usize), Terms>,
}

impl DerivationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `delta_i(xj)`; zero entries are dropped.
    pub fn set(&mut self, i: usize, j: usize, value: Terms) {
        if value.is_empty() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), value);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&Terms> {
        self.entries.get(&(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Terms)> {
        self.entries.iter()
    }
}

/// A violation of the derivation table contract; indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `delta_i(xj)` uses `x_var` with `var > j`.
    Support { i: usize, j: usize, var: usize },
    /// The Leibniz compatibility identity fails for the triple `j < k < i`.
    Leibniz { i: usize, k: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Support { i, j, var } => {
                write!(f, "delta_{i}(x{j}) uses x{var}, outside x1..x{j}")
            }
            Violation::Leibniz { i, k, j } => {
                write!(f, "Leibniz compatibility fails at (i,k,j) = ({i},{k},{j})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

type MonoCache = Mutex<HashMap<(Monomial, Monomial), Terms>>;
type DerivCache = Mutex<HashMap<(usize, Monomial), Terms>>;

/// Field, variable names and derivation table of an iterated differential
/// polynomial ring. Structural checks happen in [`RingSpec::new`]; the
/// derivation-law checks in [`validate_spec`].
pub struct RingSpec {
    field: FieldSpec,
    names: Vec<String>,
    // delta[i][j] for j < i
    delta: Vec<Vec<Terms>>,
    support_ok: bool,
    filtered: bool,
    t2_shape: bool,
    mono_cache: MonoCache,
    deriv_cache: DerivCache,
}

impl fmt::Debug for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RingSpec")
            .field("field", &self.field)
            .field("names", &self.names)
            .field("delta", &self.delta)
            .finish()
    }
}

impl PartialEq for RingSpec {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.names == other.names && self.delta == other.delta
    }
}

impl Eq for RingSpec {}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl RingSpec {
    pub fn new(
        field: FieldSpec,
        names: Vec<String>,
        table: DerivationTable,
    ) -> Result<Self, RingError> {
        let n = names.len();
        if n == 0 {
            return Err(RingError::NoVariables);
        }
        for (idx, name) in names.iter().enumerate() {
            if !valid_identifier(name) {
                return Err(RingError::BadName(name.clone()));
            }
            if names[..idx].contains(name) {
                return Err(RingError::DuplicateName(name.clone()));
            }
        }
        let mut delta: Vec<Vec<Terms>> = (0..n).map(|i| vec![Terms::new(); i]).collect();
        for ((i, j), terms) in table.entries {
            if i >= n || j >= i {
                return Err(RingError::BadEntryIndex { i: i + 1, j: j + 1 });
            }
            for (m, c) in &terms {
                if m.nvars() != n {
                    return Err(RingError::BadMonomial {
                        expected: n,
                        found: m.nvars(),
                    });
                }
                if c.field() != field {
                    return Err(RingError::FieldMismatch {
                        expected: field,
                        found: c.field(),
                    });
                }
            }
            delta[i][j] = terms.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        }
        let mut support_ok = true;
        let mut filtered = true;
        let mut t2_shape = true;
        for row in &delta {
            for (j, entry) in row.iter().enumerate() {
                for m in entry.keys() {
                    if !m.uses_only_below(j + 1) {
                        support_ok = false;
                    }
                    if m.degree() > 1 {
                        filtered = false;
                    }
                    if m.exponents()[j] > 1 || !m.uses_only_below(j + 1) {
                        t2_shape = false;
                    }
                }
            }
        }
        Ok(RingSpec {
            field,
            names,
            delta,
            support_ok,
            filtered,
            t2_shape,
            mono_cache: Mutex::default(),
            deriv_cache: Mutex::default(),
        })
    }

    /// Ring on `n` variables named `x1..xn` with all derivations zero.
    pub fn commutative(field: FieldSpec, n: usize) -> Result<Self, RingError> {
        Self::new(field, default_names(n), DerivationTable::new())
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// `delta_i(xj)` for `j < i`.
    pub fn delta(&self, i: usize, j: usize) -> &Terms {
        &self.delta[i][j]
    }

    /// Every table entry has total degree at most one.
    pub fn is_filtered(&self) -> bool {
        self.filtered
    }

    /// Every entry has the shape `u * xj + v` with `u, v` in `x1..x(j-1)`.
    pub fn is_t2_shape(&self) -> bool {
        self.t2_shape
    }

    /// Every entry `delta_i(xj)` uses only `x1..xj`.
    pub fn support_ok(&self) -> bool {
        self.support_ok
    }

    pub fn table(&self) -> DerivationTable {
        let mut t = DerivationTable::new();
        for (i, row) in self.delta.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                t.set(i, j, e.clone());
            }
        }
        t
    }

    /// The subring on the first `m` variables.
    pub fn subring(&self, m: usize) -> Result<RingSpec, RingError> {
        let names = self.names[..m].to_vec();
        let mut table = DerivationTable::new();
        for i in 0..m {
            for j in 0..i {
                let e = self.delta[i][j]
                    .iter()
                    .map(|(mono, c)| (Monomial(mono.0[..m].to_vec()), c.clone()))
                    .collect();
                table.set(i, j, e);
            }
        }
        RingSpec::new(self.field, names, table)
    }

    fn scalar(&self, n: i64) -> Scalar {
        Scalar::from_i64(self.field, n)
    }

    fn binomial(&self, n: u32, k: u32) -> Scalar {
        let mut acc = BigUint::from(1u32);
        for t in 0..k {
            acc = acc * BigUint::from(n - t) / BigUint::from(t + 1);
        }
        Scalar::from_biguint(self.field, &acc)
    }

    /// Normal-form product of two coefficient maps. Requires `support_ok`.
    pub(crate) fn mul_terms(&self, f: &Terms, g: &Terms) -> Terms {
        debug_assert!(self.support_ok);
        let mut acc = Terms::new();
        for (a, ca) in f {
            for (b, cb) in g {
                let c = ca * cb;
                if c.is_zero() {
                    continue;
                }
                if let Some(m) = self.trivial_product(a, b) {
                    add_term(&mut acc, m, c);
                } else {
                    add_scaled(&mut acc, &self.mul_mono(a, b), &c);
                }
            }
        }
        acc
    }

    /// Concatenation is already normal when nothing in `b` sits below the top variable of `a`.
    fn trivial_product(&self, a: &Monomial, b: &Monomial) -> Option<Monomial> {
        match a.top_var() {
            None => Some(b.clone()),
            Some(k) if b.0[..k].iter().all(|&e| e == 0) => Some(a.times(b)),
            _ => None,
        }
    }

    fn mul_mono(&self, a: &Monomial, b: &Monomial) -> Terms {
        let key = (a.clone(), b.clone());
        if let Some(hit) = self.mono_cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let k = a.top_var().expect("nontrivial product has a top variable");
        let ak = a.0[k];
        let a_low = single(a.with_exponent(k, 0), self.scalar(1));
        let (c, d) = b.split_at(k);
        let mut result = Terms::new();
        // derivs = Dk^t(c)
        let mut derivs = single(c, self.scalar(1));
        for t in 0..=ak {
            if derivs.is_empty() {
                break;
            }
            let coef = self.binomial(ak, t);
            if !coef.is_zero() {
                let shift = d.with_exponent(k, d.0[k] + ak - t);
                for (m, cm) in self.mul_terms(&a_low, &derivs) {
                    add_term(&mut result, m.times(&shift), &cm * &coef);
                }
            }
            if t < ak {
                derivs = self.derive_terms(k, &derivs);
            }
        }
        self.mono_cache.lock().unwrap().insert(key, result.clone());
        result
    }

    /// Leibniz extension of row `i` applied to `f`, which must only use variables `< i`.
    pub(crate) fn derive_terms(&self, i: usize, f: &Terms) -> Terms {
        let mut acc = Terms::new();
        for (m, c) in f {
            add_scaled(&mut acc, &self.derive_mono(i, m), c);
        }
        acc
    }

    fn derive_mono(&self, i: usize, m: &Monomial) -> Terms {
        let Some(j) = m.top_var() else {
            return Terms::new();
        };
        assert!(
            j < i,
            "derivation delta_{} applied outside its domain",
            i + 1
        );
        let key = (i, m.clone());
        if let Some(hit) = self.deriv_cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let n = self.nvars();
        let one = self.scalar(1);
        let e = m.0[j];
        let low = m.with_exponent(j, 0);
        let xj_pow = |p: u32| single(Monomial::var(n, j).with_exponent(j, p), one.clone());
        // D(low * xj^e) = D(low) * xj^e + low * D(xj^e)
        let mut result = self.mul_terms(&self.derive_mono(i, &low), &xj_pow(e));
        let entry = &self.delta[i][j];
        if !entry.is_empty() {
            let mut pow_deriv = Terms::new();
            for p in 0..e {
                let left = self.mul_terms(&xj_pow(p), entry);
                let term = self.mul_terms(&left, &xj_pow(e - 1 - p));
                add_scaled(&mut pow_deriv, &term, &one);
            }
            let tail = self.mul_terms(&single(low, one.clone()), &pow_deriv);
            add_scaled(&mut result, &tail, &one);
        }
        self.deriv_cache.lock().unwrap().insert(key, result.clone());
        result
    }
}

pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Checks the support constraint and, for every `j < k < i`, the identity
/// `Di(delta_k(xj)) = Di(xk) xj - xj Di(xk) + xk Di(xj) - Di(xj) xk`.
///
/// The Leibniz triples are only evaluated once every entry satisfies the
/// support constraint, since multiplication is undefined otherwise.
pub fn validate_spec(spec: &RingSpec) -> ValidationReport {
    let n = spec.nvars();
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..i {
            if let Some(var) = spec.delta[i][j]
                .keys()
                .filter_map(|m| m.top_var())
                .filter(|&v| v > j)
                .max()
            {
                violations.push(Violation::Support {
                    i: i + 1,
                    j: j + 1,
                    var: var + 1,
                });
            }
        }
    }
    if violations.is_empty() {
        let one = spec.scalar(1);
        let x = |v: usize| single(Monomial::var(n, v), one.clone());
        for i in 0..n {
            for k in 0..i {
                for j in 0..k {
                    let lhs = spec.derive_terms(i, &spec.delta[k][j]);
                    let di_xk = &spec.delta[i][k];
                    let di_xj = &spec.delta[i][j];
                    let mut rhs = spec.mul_terms(di_xk, &x(j));
                    add_scaled(&mut rhs, &spec.mul_terms(&x(j), di_xk), &-&one);
                    add_scaled(&mut rhs, &spec.mul_terms(&x(k), di_xj), &one);
                    add_scaled(&mut rhs, &spec.mul_terms(di_xj, &x(k)), &-&one);
                    if lhs != rhs {
                        violations.push(Violation::Leibniz {
                            i: i + 1,
                            k: k + 1,
                            j: j + 1,
                        });
                    }
                }
            }
        }
    }
    ValidationReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// A validated ring; the handle every element points to.
#[derive(Debug, Clone)]
pub struct Ring(Arc<RingSpec>);

impl Ring {
    pub fn new(spec: RingSpec) -> Result<Self, RingError> {
        let report = validate_spec(&spec);
        if !report.ok {
            return Err(RingError::Invalid(report));
        }
        Ok(Ring(Arc::new(spec)))
    }

    /// Skips the Leibniz check; multiplication only needs the support condition.
    /// Used to parse table entries against a partially built table.
    pub(crate) fn with_support_only(spec: RingSpec) -> Option<Self> {
        spec.support_ok.then(|| Ring(Arc::new(spec)))
    }

    pub fn spec(&self) -> &RingSpec {
        &self.0
    }

    pub fn same(&self, other: &Ring) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }

    pub fn subring(&self, m: usize) -> Result<Ring, RingError> {
        Ring::new(self.0.subring(m)?)
    }

    pub fn var(&self, i: usize) -> Poly {
        Poly::var(self, i)
    }

    pub fn vars(&self) -> Vec<Poly> {
        (0..self.nvars()).map(|i| self.var(i)).collect()
    }

    pub fn require_filtered(&self) -> Result<(), RingError> {
        if self.is_filtered() {
            Ok(())
        } else {
            Err(RingError::Unfiltered)
        }
    }
}

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl Eq for Ring {}

impl Deref for Ring {
    type Target = RingSpec;
    fn deref(&self) -> &RingSpec {
        &self.0
    }
}

/// An element of a validated ring in PBW normal form.
#[derive(Clone)]
pub struct Poly {
    ring: Ring,
    terms: Terms,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && self.ring.same(&other.ring)
    }
}

impl Eq for Poly {}

impl Poly {
    pub fn zero(ring: &Ring) -> Self {
        Poly {
            ring: ring.clone(),
            terms: Terms::new(),
        }
    }

    pub fn constant(ring: &Ring, c: Scalar) -> Self {
        Poly {
            ring: ring.clone(),
            terms: single(Monomial::one(ring.nvars()), c),
        }
    }

    pub fn one(ring: &Ring) -> Self {
        Self::constant(ring, Scalar::one(ring.field()))
    }

    pub fn var(ring: &Ring, i: usize) -> Self {
        Self::monomial(
            ring,
            Monomial::var(ring.nvars(), i),
            Scalar::one(ring.field()),
        )
    }

    pub fn monomial(ring: &Ring, m: Monomial, c: Scalar) -> Self {
        Poly {
            ring: ring.clone(),
            terms: single(m, c),
        }
    }

    /// Wraps a coefficient map, checking sizes and field.
    pub fn from_terms(ring: &Ring, terms: Terms) -> Result<Self, RingError> {
        for (m, c) in &terms {
            if m.nvars() != ring.nvars() {
                return Err(RingError::BadMonomial {
                    expected: ring.nvars(),
                    found: m.nvars(),
                });
            }
            if c.field() != ring.field() {
                return Err(RingError::FieldMismatch {
                    expected: ring.field(),
                    found: c.field(),
                });
            }
        }
        Ok(Poly {
            ring: ring.clone(),
            terms: terms.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    pub(crate) fn from_terms_unchecked(ring: &Ring, terms: Terms) -> Self {
        Poly {
            ring: ring.clone(),
            terms,
        }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn terms(&self) -> &Terms {
        &self.terms
    }

    pub fn into_terms(self) -> Terms {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// Total degree; `None` stands for the degree of zero.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    /// Highest exponent of one variable.
    pub fn degree_in(&self, i: usize) -> Option<u32> {
        self.terms.keys().map(|m| m.0[i]).max()
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Scalar)> {
        self.terms.iter().next_back()
    }

    pub fn leading_monomial(&self) -> Option<&Monomial> {
        self.terms.keys().next_back()
    }

    pub fn leading_coeff(&self) -> Option<&Scalar> {
        self.terms.values().next_back()
    }

    pub fn is_monic(&self) -> bool {
        self.leading_coeff().is_some_and(Scalar::is_one)
    }

    /// Scales to leading coefficient one; zero stays zero.
    pub fn monic(&self) -> Poly {
        match self.leading_coeff().and_then(Scalar::inv) {
            Some(inv) => self.scale(&inv),
            None => self.clone(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        let mut terms = Terms::new();
        add_scaled(&mut terms, &self.terms, c);
        Poly {
            ring: self.ring.clone(),
            terms,
        }
    }

    /// Variables below `k` only.
    pub fn uses_only_below(&self, k: usize) -> bool {
        self.terms.keys().all(|m| m.uses_only_below(k))
    }

    pub fn try_mul(&self, other: &Poly) -> Result<Poly, RingError> {
        if !self.ring.same(&other.ring) {
            return Err(RingError::RingMismatch);
        }
        Ok(Poly {
            ring: self.ring.clone(),
            terms: self.ring.mul_terms(&self.terms, &other.terms),
        })
    }

    pub fn try_add(&self, other: &Poly) -> Result<Poly, RingError> {
        if !self.ring.same(&other.ring) {
            return Err(RingError::RingMismatch);
        }
        let mut terms = self.terms.clone();
        add_scaled(&mut terms, &other.terms, &Scalar::one(self.ring.field()));
        Ok(Poly {
            ring: self.ring.clone(),
            terms,
        })
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(&self.ring);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Moves the element to a ring on a different number of variables with the
    /// same field, padding or dropping trailing exponents. Dropped variables
    /// must not occur.
    pub fn change_ring(&self, target: &Ring) -> Result<Poly, RingError> {
        let n = target.nvars();
        let mut terms = Terms::new();
        for (m, c) in &self.terms {
            if m.nvars() > n && !m.uses_only_below(n) {
                let var = m.top_var().unwrap_or(0);
                return Err(RingError::OutsideDomain { i: n, var });
            }
            let mut e = m.0.clone();
            e.resize(n, 0);
            terms.insert(Monomial(e), c.clone());
        }
        Poly::from_terms(target, terms)
    }
}

/// Normal-form product.
pub fn mul(f: &Poly, g: &Poly) -> Result<Poly, RingError> {
    f.try_mul(g)
}

/// Applies `delta_i` (0-based `i`) to an element in the variables below `i`.
pub fn apply_derivation(ring: &Ring, i: usize, f: &Poly) -> Result<Poly, RingError> {
    if i >= ring.nvars() {
        return Err(RingError::NoSuchVariable(i));
    }
    if !ring.same(&f.ring) {
        return Err(RingError::RingMismatch);
    }
    if let Some(var) = f
        .terms
        .keys()
        .filter_map(Monomial::top_var)
        .filter(|&v| v >= i)
        .max()
    {
        return Err(RingError::OutsideDomain { i, var });
    }
    Ok(Poly {
        ring: ring.clone(),
        terms: ring.derive_terms(i, &f.terms),
    })
}

/// `f * xi = xi * f` for every variable.
pub fn is_central(f: &Poly) -> bool {
    f.ring.vars().iter().all(|x| f * x == x * f)
}

/// Whether `h = f * q` for some `q` (`right == true`) or `h = q * f` otherwise,
/// by cancelling leading terms. Sound because leading monomials multiply in a
/// filtered ring.
fn divides_exactly(f: &Poly, h: &Poly, right: bool) -> bool {
    let (lm_f, lc_f) = f.leading_term().expect("nonzero divisor");
    let lc_inv = lc_f.inv().expect("nonzero leading coefficient");
    let mut rest = h.clone();
    while let Some((m, c)) = rest.leading_term() {
        let Some(q) = lm_f.quotient_of(m) else {
            return false;
        };
        let q = Poly::monomial(&f.ring, q, c * &lc_inv);
        let sub = if right { f * &q } else { &q * f };
        rest = &rest - &sub;
    }
    true
}

/// `fS = Sf`: every `xi f` lies in `fS` and every `f xi` lies in `Sf`.
pub fn is_normal(f: &Poly) -> Result<bool, RingError> {
    if f.is_zero() {
        return Err(RingError::ZeroPolynomial);
    }
    f.ring.require_filtered()?;
    Ok(f.ring
        .vars()
        .iter()
        .all(|x| divides_exactly(f, &(x * f), true) && divides_exactly(f, &(f * x), false)))
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.try_mul(rhs).expect("ring mismatch")
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.try_add(rhs).expect("ring mismatch")
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.try_add(&-rhs).expect("ring mismatch")
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-&Scalar::one(self.ring.field()))
    }
}

/// Writes a coefficient map with the given variable names, highest term first.
pub fn format_terms(terms: &Terms, names: &[String]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (m, c)) in terms.iter().rev().enumerate() {
        let negative = c.is_negative();
        let abs = if negative { -c } else { c.clone() };
        if idx == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mut factors = Vec::new();
        if !abs.is_one() || m.is_one() {
            factors.push(abs.to_string());
        }
        for (v, &e) in m.0.iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(names[v].clone()),
                _ => factors.push(format!("{}^{e}", names[v])),
            }
        }
        out.push_str(&factors.join("*"));
    }
    out
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_terms(&self.terms, self.ring.names()))
    }
}
