//! Left and two-sided Gröbner bases in filtered rings.
//!
//! In a filtered ring every commutator drops total degree, so the leading
//! monomial of `m * g` is the exponent sum of `m` and `LM(g)`. Left
//! reduction, S-pairs and the truncated spans below all rest on that.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::coeff::Scalar;
use crate::ring::{add_scaled, Monomial, Poly, Ring, RingError, Terms};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GbError {
    #[error("Gröbner bases need a filtered ring (all table entries of degree <= 1)")]
    Unfiltered,
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// The monomial order used throughout: degree first, then lex with `x1 < ... < xn`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum MonomialOrder {
    #[default]
    DegLex,
}

impl MonomialOrder {
    pub fn name(self) -> &'static str {
        "deglex"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    Left,
    TwoSided,
}

/// A reduced Gröbner basis: monic elements, pairwise distinct leading
/// monomials, no term of any element divisible by another leading monomial,
/// sorted ascending by leading monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GBasis {
    ring: Ring,
    sidedness: Sidedness,
    elements: Vec<Poly>,
}

impl GBasis {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn elements(&self) -> &[Poly] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// The basis is `{1}`.
    pub fn is_unit(&self) -> bool {
        self.elements.len() == 1 && self.elements[0].is_constant()
    }

    pub fn leading_monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.elements.iter().filter_map(Poly::leading_monomial)
    }
}

impl fmt::Display for GBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

fn check_filtered(ring: &Ring) -> Result<(), GbError> {
    if ring.is_filtered() {
        Ok(())
    } else {
        Err(GbError::Unfiltered)
    }
}

fn mono_terms(ring: &Ring, m: &Monomial) -> Terms {
    let mut t = Terms::new();
    t.insert(m.clone(), Scalar::one(ring.field()));
    t
}

fn leading(t: &Terms) -> Option<(&Monomial, &Scalar)> {
    t.iter().next_back()
}

fn make_monic(t: &mut Terms) {
    if let Some(inv) = leading(t).and_then(|(_, c)| c.inv()) {
        if !inv.is_one() {
            t.values_mut().for_each(|c| *c = &*c * &inv);
        }
    }
}

/// Full left reduction of `f` by monic `basis` elements: every reducible term is
/// cancelled, the first basis element in list order is used.
fn reduce_terms(ring: &Ring, f: &Terms, basis: &[Terms]) -> Terms {
    let mut rest = f.clone();
    let mut out = Terms::new();
    while let Some((m, c)) = rest.pop_last() {
        let divisor = basis.iter().find_map(|g| {
            let lm = leading(g)?.0;
            lm.quotient_of(&m).map(|q| (q, g))
        });
        match divisor {
            Some((q, g)) => {
                // rest already lacks the leading term; subtract the remainder of c * q * g.
                let mut prod = ring.mul_terms(&mono_terms(ring, &q), g);
                let top = prod.pop_last();
                debug_assert_eq!(top.map(|t| t.0), Some(m));
                add_scaled(&mut rest, &prod, &-&c);
            }
            None => {
                out.insert(m, c);
            }
        }
    }
    out
}

/// Normal form of `f` modulo the left ideal generated by `g`.
pub fn reduce(f: &Poly, g: &GBasis) -> Result<Poly, GbError> {
    check_filtered(f.ring())?;
    if !f.ring().same(&g.ring) {
        return Err(RingError::RingMismatch.into());
    }
    let basis: Vec<Terms> = g.elements.iter().map(|p| p.terms().clone()).collect();
    Ok(Poly::from_terms_unchecked(
        f.ring(),
        reduce_terms(f.ring(), f.terms(), &basis),
    ))
}

/// `reduce(f, G) == 0`.
pub fn member(f: &Poly, g: &GBasis) -> Result<bool, GbError> {
    Ok(reduce(f, g)?.is_zero())
}

/// Buchberger completion state for a left ideal. Elements are only appended.
struct LeftCompletion<'a> {
    ring: &'a Ring,
    basis: Vec<Terms>,
    // (lcm, i, j): lcm order is degree first, so this is the normal strategy.
    pairs: BTreeSet<(Monomial, usize, usize)>,
}

impl<'a> LeftCompletion<'a> {
    fn new(ring: &'a Ring) -> Self {
        LeftCompletion {
            ring,
            basis: Vec::new(),
            pairs: BTreeSet::new(),
        }
    }

    /// Reduces `f` against the current basis and appends it when nonzero.
    fn add(&mut self, f: &Terms) -> bool {
        let mut r = reduce_terms(self.ring, f, &self.basis);
        if r.is_empty() {
            return false;
        }
        make_monic(&mut r);
        let lm = leading(&r).unwrap().0.clone();
        let idx = self.basis.len();
        for (j, g) in self.basis.iter().enumerate() {
            let lcm = leading(g).unwrap().0.lcm(&lm);
            self.pairs.insert((lcm, j, idx));
        }
        self.basis.push(r);
        true
    }

    fn s_poly(&self, i: usize, j: usize, lcm: &Monomial) -> Terms {
        let (gi, gj) = (&self.basis[i], &self.basis[j]);
        let qi = leading(gi).unwrap().0.quotient_of(lcm).unwrap();
        let qj = leading(gj).unwrap().0.quotient_of(lcm).unwrap();
        let mut s = self.ring.mul_terms(&mono_terms(self.ring, &qi), gi);
        let sj = self.ring.mul_terms(&mono_terms(self.ring, &qj), gj);
        add_scaled(&mut s, &sj, &-&Scalar::one(self.ring.field()));
        s
    }

    fn complete(&mut self) {
        while let Some((lcm, i, j)) = self.pairs.pop_first() {
            let s = self.s_poly(i, j, &lcm);
            self.add(&s);
        }
    }

    fn has_unit(&self) -> bool {
        self.basis.iter().any(|g| g.keys().all(Monomial::is_one))
    }

    /// Minimal, interreduced, monic, sorted.
    fn reduced(&self) -> Vec<Terms> {
        let mut minimal: Vec<Terms> = Vec::new();
        let mut candidates: Vec<&Terms> = self.basis.iter().collect();
        candidates.sort_by(|a, b| leading(a).unwrap().0.cmp(leading(b).unwrap().0));
        for g in candidates {
            let lm = leading(g).unwrap().0;
            if !minimal.iter().any(|h| leading(h).unwrap().0.divides(lm)) {
                minimal.push(g.clone());
            }
        }
        let mut out = Vec::with_capacity(minimal.len());
        for (idx, g) in minimal.iter().enumerate() {
            let (lm, _) = leading(g).unwrap();
            let others: Vec<Terms> = minimal
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != idx)
                .map(|(_, h)| h.clone())
                .collect();
            let mut tail = g.clone();
            tail.pop_last();
            let mut r = reduce_terms(self.ring, &tail, &others);
            r.insert(lm.clone(), Scalar::one(self.ring.field()));
            out.push(r);
        }
        out
    }
}

fn nonzero_terms(gens: &[Poly], ring: &Ring) -> Result<Vec<Terms>, GbError> {
    gens.iter()
        .map(|g| {
            if g.ring().same(ring) {
                Ok(g.terms().clone())
            } else {
                Err(GbError::Ring(RingError::RingMismatch))
            }
        })
        .collect()
}

fn finish(ring: &Ring, sidedness: Sidedness, elements: Vec<Terms>) -> GBasis {
    GBasis {
        ring: ring.clone(),
        sidedness,
        elements: elements
            .into_iter()
            .map(|t| Poly::from_terms_unchecked(ring, t))
            .collect(),
    }
}

/// Reduced Gröbner basis of the left ideal `sum S * g`.
pub fn left_gb(ring: &Ring, gens: &[Poly]) -> Result<GBasis, GbError> {
    check_filtered(ring)?;
    let gens = nonzero_terms(gens, ring)?;
    let mut state = LeftCompletion::new(ring);
    for g in &gens {
        state.add(g);
    }
    state.complete();
    Ok(finish(ring, Sidedness::Left, state.reduced()))
}

/// Reduced Gröbner basis of the two-sided ideal generated by `gens`, computed
/// as a left basis closed under right multiplication by every variable.
pub fn twosided_gb(ring: &Ring, gens: &[Poly]) -> Result<GBasis, GbError> {
    check_filtered(ring)?;
    let gens = nonzero_terms(gens, ring)?;
    let mut state = LeftCompletion::new(ring);
    for g in &gens {
        state.add(g);
    }
    let vars: Vec<Terms> = (0..ring.nvars())
        .map(|i| mono_terms(ring, &Monomial::var(ring.nvars(), i)))
        .collect();
    let mut checked = 0;
    loop {
        state.complete();
        if state.has_unit() || checked == state.basis.len() {
            break;
        }
        let pending: Vec<Terms> = state.basis[checked..].to_vec();
        checked = state.basis.len();
        for g in &pending {
            for x in &vars {
                let right = ring.mul_terms(g, x);
                state.add(&right);
            }
        }
    }
    let elements = state.reduced();
    let basis = finish(ring, Sidedness::TwoSided, elements);
    for g in &basis.elements {
        for x in ring.vars() {
            let left = reduce(&(&x * g), &basis)?;
            let right = reduce(&(g * &x), &basis)?;
            assert!(
                left.is_zero() && right.is_zero(),
                "two-sided closure violated for {g}"
            );
        }
    }
    Ok(basis)
}

/// A canonical basis of a finite-dimensional subspace of the ring: reduced row
/// echelon form with respect to the monomial order. Rows are sorted ascending
/// by leading monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EchelonBasis {
    ring: Ring,
    rows: Vec<Poly>,
}

impl EchelonBasis {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rows(&self) -> &[Poly] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Membership in the span.
    pub fn contains(&self, f: &Poly) -> bool {
        let pivots: Vec<&Terms> = self.rows.iter().map(Poly::terms).collect();
        reduce_linear(f.terms(), &pivots).is_empty()
    }

    /// Every row of `self` lies in `other`.
    pub fn is_subspace_of(&self, other: &EchelonBasis) -> bool {
        self.rows.iter().all(|r| other.contains(r))
    }

    /// Builds the echelon form of the span of arbitrary elements of `ring`.
    pub fn span(ring: &Ring, elements: impl IntoIterator<Item = Poly>) -> EchelonBasis {
        let mut echelon = Echelon::default();
        for e in elements {
            echelon.insert(e.into_terms());
        }
        EchelonBasis {
            ring: ring.clone(),
            rows: echelon
                .into_rref()
                .into_iter()
                .map(|t| Poly::from_terms_unchecked(ring, t))
                .collect(),
        }
    }
}

fn reduce_linear(f: &Terms, pivots: &[&Terms]) -> Terms {
    let mut rest = f.clone();
    for p in pivots.iter().rev() {
        let lm = leading(p).unwrap().0;
        if let Some(c) = rest.get(lm).cloned() {
            add_scaled(&mut rest, p, &-&c);
        }
    }
    rest
}

/// Incremental Gaussian elimination keyed by leading monomial.
#[derive(Default)]
struct Echelon {
    pivots: std::collections::BTreeMap<Monomial, Terms>,
}

impl Echelon {
    fn insert(&mut self, mut row: Terms) {
        while let Some((m, c)) = leading(&row).map(|(m, c)| (m.clone(), c.clone())) {
            match self.pivots.get(&m) {
                Some(p) => add_scaled(&mut row, p, &-&c),
                None => {
                    make_monic(&mut row);
                    self.pivots.insert(m, row);
                    return;
                }
            }
        }
    }

    fn into_rref(self) -> Vec<Terms> {
        let mut done: Vec<Terms> = Vec::with_capacity(self.pivots.len());
        // Ascending: every lower pivot row is already fully reduced.
        for (lm, row) in self.pivots {
            let mut row = row;
            for lower in done.iter() {
                let lower_lm = leading(lower).unwrap().0;
                if let Some(c) = row.get(lower_lm).cloned() {
                    add_scaled(&mut row, lower, &-&c);
                }
            }
            debug_assert_eq!(leading(&row).unwrap().0, &lm);
            done.push(row);
        }
        done
    }
}

/// All monomials in `n` variables of total degree at most `d`, ascending.
pub fn monomials_up_to(n: usize, d: u32) -> Vec<Monomial> {
    fn rec(prefix: &mut Vec<u32>, n: usize, left: u32, out: &mut Vec<Monomial>) {
        if prefix.len() == n {
            out.push(Monomial::from_exponents(prefix.clone()));
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(prefix, n, left - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, d, &mut out);
    out.sort();
    out
}

/// Echelon basis of the span of `{m * g : g in G, deg m + deg g <= d}`. For a
/// Gröbner basis under a degree-compatible order this is exactly
/// `I ∩ S_{<=d}` for the left ideal `I` of `G`.
pub fn truncated_basis(g: &GBasis, d: u32) -> EchelonBasis {
    let ring = &g.ring;
    let mut echelon = Echelon::default();
    for el in &g.elements {
        let deg = el.degree().expect("basis elements are nonzero");
        if deg > d {
            continue;
        }
        for m in monomials_up_to(ring.nvars(), d - deg) {
            echelon.insert(ring.mul_terms(&mono_terms(ring, &m), el.terms()));
        }
    }
    EchelonBasis {
        ring: ring.clone(),
        rows: echelon
            .into_rref()
            .into_iter()
            .map(|t| Poly::from_terms_unchecked(ring, t))
            .collect(),
    }
}

/// Dimension of `S / I` over the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuotientDim {
    Finite(u64),
    Infinite,
}

impl QuotientDim {
    pub fn is_finite(self) -> bool {
        matches!(self, QuotientDim::Finite(_))
    }
}

impl fmt::Display for QuotientDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuotientDim::Finite(n) => write!(f, "{n}"),
            QuotientDim::Infinite => write!(f, "infinite"),
        }
    }
}

/// Number of standard monomials of the basis.
pub fn quotient_dim(g: &GBasis) -> QuotientDim {
    let n = g.ring.nvars();
    let lms: Vec<&Monomial> = g.leading_monomials().collect();
    if lms.iter().any(|m| m.is_one()) {
        return QuotientDim::Finite(0);
    }
    let mut bounds = Vec::with_capacity(n);
    for v in 0..n {
        let pure = lms
            .iter()
            .filter(|m| m.top_var() == Some(v) && m.exponents()[..v].iter().all(|&e| e == 0))
            .map(|m| m.exponents()[v])
            .min();
        match pure {
            Some(e) => bounds.push(e),
            None => return QuotientDim::Infinite,
        }
    }
    // Standard monomials lie in the box below the pure powers.
    let mut count = 0u64;
    let mut exps = vec![0u32; n];
    'odometer: loop {
        let m = Monomial::from_exponents(exps.clone());
        if !lms.iter().any(|l| l.divides(&m)) {
            count += 1;
        }
        for v in 0..n {
            exps[v] += 1;
            if exps[v] < bounds[v] {
                continue 'odometer;
            }
            exps[v] = 0;
        }
        break;
    }
    QuotientDim::Finite(count)
}
