#![allow(dead_code)]

use diffring::coeff::{FieldSpec, Scalar};
use diffring::lie::LieAlgebraSpec;
use diffring::ring::{default_names, DerivationTable, Monomial, Poly, Ring, RingSpec, Terms};
use proptest::prelude::*;
use rand::Rng;

pub fn q() -> FieldSpec {
    FieldSpec::Rationals
}

pub fn fp(p: u64) -> FieldSpec {
    FieldSpec::prime(p).unwrap()
}

pub fn terms(n: usize, field: FieldSpec, ts: &[(&[u32], i64)]) -> Terms {
    let mut out = Terms::new();
    for (e, c) in ts {
        assert_eq!(e.len(), n);
        let c = Scalar::from_i64(field, *c);
        if !c.is_zero() {
            out.insert(Monomial::from_exponents(e.to_vec()), c);
        }
    }
    out
}

/// Ring from 1-based table entries `(i, j, delta_i(xj))`.
pub fn ring(field: FieldSpec, n: usize, entries: &[(usize, usize, &[(&[u32], i64)])]) -> Ring {
    let mut table = DerivationTable::new();
    for (i, j, ts) in entries {
        table.set(i - 1, j - 1, terms(n, field, ts));
    }
    Ring::new(RingSpec::new(field, default_names(n), table).unwrap()).unwrap()
}

pub fn abelian(field: FieldSpec, n: usize) -> Ring {
    ring(field, n, &[])
}

/// `x2 x1 - x1 x2 = x1`.
pub fn solvable2(field: FieldSpec) -> Ring {
    ring(field, 2, &[(2, 1, &[(&[1, 0], 1)])])
}

/// `x3 x2 - x2 x3 = x1`, everything else commutes.
pub fn heisenberg(field: FieldSpec) -> Ring {
    ring(field, 3, &[(3, 2, &[(&[1, 0, 0], 1)])])
}

/// The four rings used for arithmetic checks.
pub fn arithmetic_fixtures() -> Vec<(&'static str, Ring)> {
    vec![
        ("abelian/Q", abelian(q(), 3)),
        ("solvable2/Q", solvable2(q())),
        ("solvable2/F5", solvable2(fp(5))),
        ("heisenberg/F7", heisenberg(fp(7))),
    ]
}

pub fn poly(r: &Ring, ts: &[(&[u32], i64)]) -> Poly {
    Poly::from_terms(r, terms(r.nvars(), r.field(), ts)).unwrap()
}

pub fn x(r: &Ring, i: usize) -> Poly {
    r.var(i - 1)
}

pub fn lie(field: FieldSpec, n: usize, brackets: &[(usize, usize, &[i64])]) -> LieAlgebraSpec {
    LieAlgebraSpec::new(
        field,
        n,
        brackets.iter().map(|(i, j, v)| {
            (
                (i - 1, j - 1),
                v.iter().map(|&c| Scalar::from_i64(field, c)).collect(),
            )
        }),
    )
    .unwrap()
}

/// Random element with at most `max_terms` terms of degree at most `max_deg`.
pub fn random_poly(r: &Ring, rng: &mut impl Rng, max_terms: usize, max_deg: u32) -> Poly {
    let n = r.nvars();
    let mut out = Terms::new();
    for _ in 0..rng.gen_range(1..=max_terms) {
        let d = rng.gen_range(0..=max_deg);
        let mut e = vec![0u32; n];
        for _ in 0..d {
            e[rng.gen_range(0..n)] += 1;
        }
        let c = Scalar::from_i64(r.field(), rng.gen_range(-3..=3));
        if !c.is_zero() {
            out.insert(Monomial::from_exponents(e), c);
        }
    }
    Poly::from_terms(r, out).unwrap()
}

/// Proptest strategy for term lists on `n` variables.
pub fn term_list(
    n: usize,
    max_terms: usize,
    max_exp: u32,
) -> impl Strategy<Value = Vec<(Vec<u32>, i64)>> {
    prop::collection::vec(
        (prop::collection::vec(0..=max_exp, n), -4i64..=4),
        0..=max_terms,
    )
}

pub fn from_list(r: &Ring, list: &[(Vec<u32>, i64)]) -> Poly {
    let mut acc = Poly::zero(r);
    for (e, c) in list {
        let t = Poly::monomial(
            r,
            Monomial::from_exponents(e.clone()),
            Scalar::from_i64(r.field(), *c),
        );
        acc = &acc + &t;
    }
    acc
}
