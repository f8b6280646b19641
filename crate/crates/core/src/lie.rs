//! Finite-dimensional Lie algebras given by structure constants, and their
//! enveloping algebras as iterated differential polynomial rings.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::coeff::{FieldSpec, Scalar};
use crate::ring::{
    add_term, default_names, DerivationTable, Monomial, Ring, RingError, RingSpec, Terms,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LieError {
    #[error("dimension must be at least one")]
    ZeroDimension,
    #[error("bracket [x{i}, x{j}] must have i > j within 1..={n}")]
    BadBracketIndex { i: usize, j: usize, n: usize },
    #[error("bracket [x{i}, x{j}] has {found} coordinates, expected {expected}")]
    BadBracketLength {
        i: usize,
        j: usize,
        expected: usize,
        found: usize,
    },
    #[error("coefficient over {found} in a Lie algebra over {expected}")]
    FieldMismatch {
        expected: FieldSpec,
        found: FieldSpec,
    },
    #[error("basis is not adapted to a flag of ideals: [x{i}, x{j}] leaves span(x1..x{j})")]
    NotAdapted { i: usize, j: usize },
    #[error(transparent)]
    Ring(#[from] RingError),
}

type Vector = Vec<Scalar>;

/// Structure constants `c[i][j]`, the coordinates of `[xi, xj]` for `i > j`
/// (0-based keys). Brackets with `i < j` follow by antisymmetry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LieAlgebraSpec {
    field: FieldSpec,
    dim: usize,
    brackets: BTreeMap<(usize, usize), Vector>,
}

/// A failing Jacobi triple, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct JacobiViolation {
    pub triple: (usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct LieValidationReport {
    pub ok: bool,
    pub violations: Vec<JacobiViolation>,
}

impl fmt::Display for LieValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| {
                format!(
                    "Jacobi fails at ({},{},{})",
                    v.triple.0, v.triple.1, v.triple.2
                )
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

impl LieAlgebraSpec {
    /// `brackets` maps 0-based `(i, j)` with `i > j` to the coordinates of `[xi, xj]`.
    pub fn new(
        field: FieldSpec,
        dim: usize,
        brackets: impl IntoIterator<Item = ((usize, usize), Vector)>,
    ) -> Result<Self, LieError> {
        if dim == 0 {
            return Err(LieError::ZeroDimension);
        }
        let mut map = BTreeMap::new();
        for ((i, j), v) in brackets {
            if i >= dim || j >= i {
                return Err(LieError::BadBracketIndex {
                    i: i + 1,
                    j: j + 1,
                    n: dim,
                });
            }
            if v.len() != dim {
                return Err(LieError::BadBracketLength {
                    i: i + 1,
                    j: j + 1,
                    expected: dim,
                    found: v.len(),
                });
            }
            if let Some(c) = v.iter().find(|c| c.field() != field) {
                return Err(LieError::FieldMismatch {
                    expected: field,
                    found: c.field(),
                });
            }
            if v.iter().any(|c| !c.is_zero()) {
                map.insert((i, j), v);
            }
        }
        Ok(LieAlgebraSpec {
            field,
            dim,
            brackets: map,
        })
    }

    pub fn abelian(field: FieldSpec, dim: usize) -> Result<Self, LieError> {
        Self::new(field, dim, [])
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn zero_vec(&self) -> Vector {
        vec![Scalar::zero(self.field); self.dim]
    }

    /// `[xi, xj]` on basis vectors.
    pub fn basis_bracket(&self, i: usize, j: usize) -> Vector {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => self.zero_vec(),
            Greater => self
                .brackets
                .get(&(i, j))
                .cloned()
                .unwrap_or_else(|| self.zero_vec()),
            Less => match self.brackets.get(&(j, i)) {
                Some(v) => v.iter().map(|c| -c).collect(),
                None => self.zero_vec(),
            },
        }
    }

    /// Bilinear extension of the bracket.
    pub fn bracket(&self, u: &[Scalar], v: &[Scalar]) -> Vector {
        let mut out = self.zero_vec();
        for (i, a) in u.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            for (j, b) in v.iter().enumerate().filter(|(_, b)| !b.is_zero()) {
                let coef = a * b;
                for (k, c) in self.basis_bracket(i, j).iter().enumerate() {
                    if !c.is_zero() {
                        out[k] = &out[k] + &(&coef * c);
                    }
                }
            }
        }
        out
    }

    fn unit(&self, i: usize) -> Vector {
        let mut v = self.zero_vec();
        v[i] = Scalar::one(self.field);
        v
    }

    fn full_space(&self) -> Vec<Vector> {
        (0..self.dim).map(|i| self.unit(i)).collect()
    }

    /// `span{[u, v] : u in a, v in b}` in echelon form.
    fn bracket_span(&self, a: &[Vector], b: &[Vector]) -> Vec<Vector> {
        let mut images = Vec::new();
        for u in a {
            for v in b {
                images.push(self.bracket(u, v));
            }
        }
        row_echelon(images)
    }
}

/// Row echelon basis of the span of `vectors` (reduced, pivots ascending).
pub fn row_echelon(vectors: Vec<Vector>) -> Vec<Vector> {
    let mut rows: Vec<Vector> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for mut v in vectors {
        for (row, &p) in rows.iter().zip(&pivots) {
            if !v[p].is_zero() {
                let c = v[p].clone();
                for (x, r) in v.iter_mut().zip(row) {
                    *x = &*x - &(&c * r);
                }
            }
        }
        let Some(p) = v.iter().position(|c| !c.is_zero()) else {
            continue;
        };
        let inv = v[p].inv().unwrap();
        v.iter_mut().for_each(|x| *x = &*x * &inv);
        for row in rows.iter_mut() {
            if !row[p].is_zero() {
                let c = row[p].clone();
                for (x, r) in row.iter_mut().zip(&v) {
                    *x = &*x - &(&c * r);
                }
            }
        }
        rows.push(v);
        pivots.push(p);
    }
    let mut paired: Vec<(usize, Vector)> = pivots.into_iter().zip(rows).collect();
    paired.sort_by_key(|(p, _)| *p);
    paired.into_iter().map(|(_, r)| r).collect()
}

/// Jacobi identity `[[xi,xj],xk] + [[xj,xk],xi] + [[xk,xi],xj] = 0` on all `i < j < k`.
pub fn validate_lie(spec: &LieAlgebraSpec) -> LieValidationReport {
    let n = spec.dim;
    let mut violations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (xi, xj, xk) = (spec.unit(i), spec.unit(j), spec.unit(k));
                let t1 = spec.bracket(&spec.bracket(&xi, &xj), &xk);
                let t2 = spec.bracket(&spec.bracket(&xj, &xk), &xi);
                let t3 = spec.bracket(&spec.bracket(&xk, &xi), &xj);
                let sum_zero = (0..n).all(|l| (&(&t1[l] + &t2[l]) + &t3[l]).is_zero());
                if !sum_zero {
                    violations.push(JacobiViolation {
                        triple: (i + 1, j + 1, k + 1),
                    });
                }
            }
        }
    }
    LieValidationReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// For all `i > j`, `[xi, xj]` lies in `span(x1..xj)`; the flag
/// `span(x1..xj)` then consists of ideals.
pub fn is_adapted_flag(spec: &LieAlgebraSpec) -> bool {
    first_non_adapted(spec).is_none()
}

fn first_non_adapted(spec: &LieAlgebraSpec) -> Option<(usize, usize)> {
    spec.brackets
        .iter()
        .find(|((_, j), v)| v[j + 1..].iter().any(|c| !c.is_zero()))
        .map(|((i, j), _)| (*i, *j))
}

/// Dimensions of `L ⊇ [L,L] ⊇ [[L,L],[L,L]] ⊇ ...` until the series stops changing.
pub fn derived_series(spec: &LieAlgebraSpec) -> Vec<usize> {
    let mut current = spec.full_space();
    let mut dims = vec![current.len()];
    while !current.is_empty() {
        let next = spec.bracket_span(&current, &current);
        if next.len() == current.len() {
            break;
        }
        dims.push(next.len());
        current = next;
    }
    dims
}

pub fn is_solvable(spec: &LieAlgebraSpec) -> bool {
    derived_series(spec).last() == Some(&0)
}

fn lower_central_of(spec: &LieAlgebraSpec, base: Vec<Vector>) -> Vec<usize> {
    let mut current = base.clone();
    let mut dims = vec![current.len()];
    while !current.is_empty() {
        let next = spec.bracket_span(&base, &current);
        if next.len() == current.len() {
            break;
        }
        dims.push(next.len());
        current = next;
    }
    dims
}

/// Dimensions of `L ⊇ [L,L] ⊇ [L,[L,L]] ⊇ ...` until stable.
pub fn lower_central_series(spec: &LieAlgebraSpec) -> Vec<usize> {
    lower_central_of(spec, spec.full_space())
}

pub fn is_nilpotent(spec: &LieAlgebraSpec) -> bool {
    lower_central_series(spec).last() == Some(&0)
}

/// Nilpotency of the derived subalgebra `[L,L]` with the induced bracket.
pub fn derived_is_nilpotent(spec: &LieAlgebraSpec) -> bool {
    let all = spec.full_space();
    let derived = spec.bracket_span(&all, &all);
    lower_central_of(spec, derived).last() == Some(&0)
}

/// The enveloping algebra as a ring with `delta_i(xj) = [xi, xj]`.
pub fn to_ring_spec(spec: &LieAlgebraSpec) -> Result<RingSpec, LieError> {
    if let Some((i, j)) = first_non_adapted(spec) {
        return Err(LieError::NotAdapted { i: i + 1, j: j + 1 });
    }
    let n = spec.dim;
    let mut table = DerivationTable::new();
    for ((i, j), v) in &spec.brackets {
        let mut terms = Terms::new();
        for (k, c) in v.iter().enumerate() {
            add_term(&mut terms, Monomial::var(n, k), c.clone());
        }
        table.set(*i, *j, terms);
    }
    Ok(RingSpec::new(spec.field, default_names(n), table)?)
}

/// `to_ring_spec` followed by validation.
pub fn enveloping_ring(spec: &LieAlgebraSpec) -> Result<Ring, LieError> {
    Ok(Ring::new(to_ring_spec(spec)?)?)
}

/// Summary of the structural checks used by the verification harness.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct LieSummary {
    pub dim: usize,
    pub jacobi_ok: bool,
    pub adapted_flag: bool,
    pub derived_series: Vec<usize>,
    pub lower_central_series: Vec<usize>,
    pub solvable: bool,
    pub completely_solvable: bool,
    pub nilpotent: bool,
    pub derived_nilpotent: bool,
}

pub fn summarize(spec: &LieAlgebraSpec) -> LieSummary {
    let adapted = is_adapted_flag(spec);
    LieSummary {
        dim: spec.dim,
        jacobi_ok: validate_lie(spec).ok,
        adapted_flag: adapted,
        derived_series: derived_series(spec),
        lower_central_series: lower_central_series(spec),
        solvable: is_solvable(spec),
        completely_solvable: adapted,
        nilpotent: is_nilpotent(spec),
        derived_nilpotent: derived_is_nilpotent(spec),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ring::validate_spec;

    pub fn vecf(field: FieldSpec, cs: &[i64]) -> Vector {
        cs.iter().map(|&c| Scalar::from_i64(field, c)).collect()
    }

    /// 1-based `(i, j, coords)` triples.
    pub fn lie(field: FieldSpec, n: usize, brackets: &[(usize, usize, &[i64])]) -> LieAlgebraSpec {
        LieAlgebraSpec::new(
            field,
            n,
            brackets
                .iter()
                .map(|(i, j, v)| ((i - 1, j - 1), vecf(field, v))),
        )
        .unwrap()
    }

    pub fn solvable2_lie(field: FieldSpec) -> LieAlgebraSpec {
        lie(field, 2, &[(2, 1, &[1, 0])])
    }

    pub fn heisenberg_lie(field: FieldSpec) -> LieAlgebraSpec {
        lie(field, 3, &[(3, 2, &[1, 0, 0])])
    }

    const Q: FieldSpec = FieldSpec::Rationals;

    #[test]
    fn jacobi() {
        assert!(validate_lie(&LieAlgebraSpec::abelian(Q, 4).unwrap()).ok);
        assert!(validate_lie(&solvable2_lie(Q)).ok);
        assert!(validate_lie(&heisenberg_lie(Q)).ok);
        let bad = lie(
            Q,
            3,
            &[(2, 1, &[1, 0, 0]), (3, 1, &[1, 0, 0]), (3, 2, &[0, 1, 1])],
        );
        let report = validate_lie(&bad);
        assert!(!report.ok);
        assert_eq!(
            report.violations,
            vec![JacobiViolation { triple: (1, 2, 3) }]
        );
    }

    #[test]
    fn adapted_flags() {
        assert!(is_adapted_flag(&solvable2_lie(Q)));
        assert!(is_adapted_flag(&heisenberg_lie(Q)));
        assert!(!is_adapted_flag(&lie(Q, 2, &[(2, 1, &[0, 1])])));
        assert!(matches!(
            to_ring_spec(&lie(Q, 2, &[(2, 1, &[0, 1])])),
            Err(LieError::NotAdapted { i: 2, j: 1 })
        ));
    }

    #[test]
    fn series() {
        let s2 = solvable2_lie(Q);
        assert_eq!(derived_series(&s2), vec![2, 1, 0]);
        assert!(is_solvable(&s2));
        assert_eq!(lower_central_series(&s2), vec![2, 1]);
        assert!(!is_nilpotent(&s2));
        assert!(derived_is_nilpotent(&s2));

        let ab = LieAlgebraSpec::abelian(Q, 3).unwrap();
        assert_eq!(derived_series(&ab), vec![3, 0]);
        assert!(is_nilpotent(&ab));

        let h = heisenberg_lie(Q);
        assert_eq!(derived_series(&h), vec![3, 1, 0]);
        assert_eq!(lower_central_series(&h), vec![3, 1, 0]);
        assert!(is_nilpotent(&h) && derived_is_nilpotent(&h));
    }

    #[test]
    fn sl2_is_not_solvable() {
        // [h,e] = 2e, [h,f] = -2f, [e,f] = h with x1 = e, x2 = f, x3 = h
        let sl2 = lie(
            Q,
            3,
            &[(2, 1, &[0, 0, -1]), (3, 1, &[2, 0, 0]), (3, 2, &[0, -2, 0])],
        );
        assert!(validate_lie(&sl2).ok);
        assert_eq!(derived_series(&sl2), vec![3]);
        assert!(!is_solvable(&sl2));
        assert!(!is_adapted_flag(&sl2));
    }

    #[test]
    fn enveloping_rings() {
        let r = enveloping_ring(&solvable2_lie(Q)).unwrap();
        assert_eq!(&r.var(1) * &r.var(0), &(&r.var(0) * &r.var(1)) + &r.var(0));
        let h = to_ring_spec(&heisenberg_lie(Q)).unwrap();
        assert!(validate_spec(&h).ok && h.is_filtered());
        assert_eq!(h.delta(2, 1).len(), 1);
        assert!(h.delta(2, 0).is_empty() && h.delta(1, 0).is_empty());
        let ab = to_ring_spec(&LieAlgebraSpec::abelian(Q, 3).unwrap()).unwrap();
        assert!(ab.table().iter().next().is_none());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            LieAlgebraSpec::abelian(Q, 0).unwrap_err(),
            LieError::ZeroDimension
        );
        assert!(matches!(
            LieAlgebraSpec::new(Q, 2, [((0, 1), vecf(Q, &[1, 0]))]),
            Err(LieError::BadBracketIndex { .. })
        ));
        assert!(matches!(
            LieAlgebraSpec::new(Q, 2, [((1, 0), vecf(Q, &[1]))]),
            Err(LieError::BadBracketLength { .. })
        ));
    }
}
