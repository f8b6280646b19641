//! Two-sided ideals: products, powers, degree-truncated power intersections,
//! zero certificates for principal ideals, and invariance under derivations.
//!
//! `I(1)` is the intersection of all powers of `I` and `I(m) = I(m-1)(1)`.
//! There is no general algorithm for it, so [`powint`] works with the exact
//! finite-dimensional spaces `I^k ∩ S_{<=d}`, which only ever over-approximate
//! `I(1) ∩ S_{<=d}`. A vanishing result is either *observed* on that
//! truncation or *certified* through a monic normal principal generator.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::gb::{
    member, quotient_dim, truncated_basis, twosided_gb, EchelonBasis, GBasis, GbError, QuotientDim,
};
use crate::ring::{apply_derivation, is_central, is_normal, Poly, Ring, RingError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdealError {
    #[error(transparent)]
    Gb(#[from] GbError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("power exponent must be at least 1, got {0}")]
    BadExponent(u32),
    #[error("degree bound must be at least 1")]
    BadDegree,
    #[error("maximum power must be at least 2, got {0}")]
    BadMaxPower(u32),
    #[error("generator {gen} uses x{var}, but derivation delta_{min} is only defined on x1..x{below}", below = .min - 1)]
    OutsideDerivationDomain { gen: String, var: usize, min: usize },
}

/// A two-sided ideal given by generators, with its reduced two-sided Gröbner
/// basis computed on first use.
#[derive(Debug, Clone)]
pub struct IdealHandle {
    ring: Ring,
    generators: Vec<Poly>,
    gb: OnceLock<GBasis>,
}

impl IdealHandle {
    /// Zero generators are dropped.
    pub fn new(ring: &Ring, generators: Vec<Poly>) -> Result<Self, IdealError> {
        ring.require_filtered().map_err(|_| GbError::Unfiltered)?;
        if generators.iter().any(|g| !g.ring().same(ring)) {
            return Err(RingError::RingMismatch.into());
        }
        Ok(IdealHandle {
            ring: ring.clone(),
            generators: generators.into_iter().filter(|g| !g.is_zero()).collect(),
            gb: OnceLock::new(),
        })
    }

    pub fn unit(ring: &Ring) -> Result<Self, IdealError> {
        Self::new(ring, vec![Poly::one(ring)])
    }

    /// The ideal generated by every variable.
    pub fn augmentation(ring: &Ring) -> Result<Self, IdealError> {
        Self::new(ring, ring.vars())
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn generators(&self) -> &[Poly] {
        &self.generators
    }

    pub fn gb(&self) -> Result<&GBasis, IdealError> {
        if let Some(gb) = self.gb.get() {
            return Ok(gb);
        }
        let gb = twosided_gb(&self.ring, &self.generators)?;
        Ok(self.gb.get_or_init(|| gb))
    }

    pub fn contains(&self, f: &Poly) -> Result<bool, IdealError> {
        Ok(member(f, self.gb()?)?)
    }

    pub fn is_zero(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn quotient_dim(&self) -> Result<QuotientDim, IdealError> {
        Ok(quotient_dim(self.gb()?))
    }

    fn same_ring(&self, other: &IdealHandle) -> Result<(), IdealError> {
        if self.ring.same(&other.ring) {
            Ok(())
        } else {
            Err(RingError::RingMismatch.into())
        }
    }
}

impl fmt::Display for IdealHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `I * J`, generated by `g * h` for `g` in the two-sided basis of `I` and `h` a
/// generator of `J`.
pub fn product(i: &IdealHandle, j: &IdealHandle) -> Result<IdealHandle, IdealError> {
    i.same_ring(j)?;
    let mut gens = Vec::new();
    for g in i.gb()?.elements() {
        for h in &j.generators {
            gens.push(g * h);
        }
    }
    IdealHandle::new(&i.ring, gens)
}

/// `I^k` as the left fold `((I * I) * I) ...`.
pub fn power(i: &IdealHandle, k: u32) -> Result<IdealHandle, IdealError> {
    if k < 1 {
        return Err(IdealError::BadExponent(k));
    }
    let mut acc = i.clone();
    for _ in 1..k {
        acc = product(&acc, i)?;
    }
    Ok(acc)
}

pub fn sum(i: &IdealHandle, j: &IdealHandle) -> Result<IdealHandle, IdealError> {
    i.same_ring(j)?;
    let gens = i.generators.iter().chain(&j.generators).cloned().collect();
    IdealHandle::new(&i.ring, gens)
}

/// Mutual membership of generators.
pub fn equals(i: &IdealHandle, j: &IdealHandle) -> Result<bool, IdealError> {
    i.same_ring(j)?;
    for g in &i.generators {
        if !j.contains(g)? {
            return Ok(false);
        }
    }
    for g in &j.generators {
        if !i.contains(g)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `I != S`.
pub fn is_proper(i: &IdealHandle) -> Result<bool, IdealError> {
    Ok(!i.gb()?.is_unit())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PowIntStatus {
    CertifiedZero,
    ObservedZero,
    CandidateNonzero,
    Inconclusive,
}

impl fmt::Display for PowIntStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowIntStatus::CertifiedZero => "CERTIFIED_ZERO",
            PowIntStatus::ObservedZero => "OBSERVED_ZERO",
            PowIntStatus::CandidateNonzero => "CANDIDATE_NONZERO",
            PowIntStatus::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// `I^k ∩ S_{<=d}` for one `k`.
#[derive(Debug, Clone)]
pub struct PowerTruncation {
    pub k: u32,
    pub basis: EchelonBasis,
}

impl PowerTruncation {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
}

#[derive(Debug, Clone)]
pub struct PowIntReport {
    pub degree: u32,
    pub max_power: u32,
    pub truncations: Vec<PowerTruncation>,
    /// Smallest `k < kmax` from which all truncations agree.
    pub stabilized_at: Option<u32>,
    /// Echelon basis at the stabilization index.
    pub candidates: Vec<Poly>,
    pub status: PowIntStatus,
}

impl PowIntReport {
    pub fn dims(&self) -> Vec<usize> {
        self.truncations.iter().map(PowerTruncation::dim).collect()
    }

    pub fn final_truncation(&self) -> &EchelonBasis {
        &self.truncations.last().expect("kmax >= 2").basis
    }
}

/// Truncated powers `I^k ∩ S_{<=d}` for `k = 1..=kmax`.
///
/// Powers are nested, so once a truncation is zero all later ones are, and once
/// `I^(k+1) = I^k` as ideals every later power equals it too. Both cases are
/// filled in without recomputation.
pub fn powint(i: &IdealHandle, d: u32, kmax: u32) -> Result<PowIntReport, IdealError> {
    if d < 1 {
        return Err(IdealError::BadDegree);
    }
    if kmax < 2 {
        return Err(IdealError::BadMaxPower(kmax));
    }
    let mut truncations: Vec<PowerTruncation> = Vec::with_capacity(kmax as usize);
    let mut current = i.clone();
    let mut settled = false;
    for k in 1..=kmax {
        if k > 1 {
            let last = truncations.last().unwrap().basis.clone();
            if settled || last.is_empty() {
                truncations.push(PowerTruncation { k, basis: last });
                continue;
            }
            let next = product(&current, i)?;
            settled = next.gb()? == current.gb()?;
            current = next;
        }
        let basis = truncated_basis(current.gb()?, d);
        truncations.push(PowerTruncation { k, basis });
    }

    let dims: Vec<usize> = truncations.iter().map(PowerTruncation::dim).collect();
    let last = *dims.last().unwrap();
    let mut start = dims.len() - 1;
    while start > 0 && dims[start - 1] == last {
        start -= 1;
    }
    let stabilized_at = (start + 1 < dims.len()).then_some(start as u32 + 1);
    let status = if last == 0 {
        PowIntStatus::ObservedZero
    } else if stabilized_at.is_some() {
        PowIntStatus::CandidateNonzero
    } else {
        PowIntStatus::Inconclusive
    };
    let candidates = match (status, stabilized_at) {
        (PowIntStatus::CandidateNonzero, Some(k)) => {
            truncations[k as usize - 1].basis.rows().to_vec()
        }
        _ => Vec::new(),
    };
    Ok(PowIntReport {
        degree: d,
        max_power: kmax,
        truncations,
        stabilized_at,
        candidates,
        status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, Error)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertFailure {
    #[error("NOT_PRINCIPAL: the two-sided Gröbner basis has more than one element")]
    NotPrincipal,
    #[error("NOT_NORMAL: the generator is not normal")]
    NotNormal,
    #[error("DEGREE_ZERO: the ideal is the unit ideal")]
    DegreeZero,
}

/// Proof that the powers of a principal ideal intersect to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroCertificate {
    pub generator: Poly,
    pub central: bool,
    pub justification: String,
}

/// Succeeds when the two-sided basis is a single monic normal `f` of degree at
/// least one. Then `I^k = f^k S`, every nonzero element of `I^k` has degree at
/// least `k`, and the powers intersect to zero.
pub fn cert_zero_principal(
    i: &IdealHandle,
) -> Result<Result<ZeroCertificate, CertFailure>, IdealError> {
    let gb = i.gb()?;
    let [f] = gb.elements() else {
        return Ok(Err(CertFailure::NotPrincipal));
    };
    let degree = f.degree().expect("basis elements are nonzero");
    if degree == 0 {
        return Ok(Err(CertFailure::DegreeZero));
    }
    if !is_normal(f)? {
        return Ok(Err(CertFailure::NotNormal));
    }
    let central = is_central(f);
    let kind = if central {
        "central"
    } else {
        "normal (fS = Sf), not central"
    };
    let justification = format!(
        "I = S*f with f = {f} monic of degree {degree} and {kind}; hence I^k = f^k*S, \
         leading terms multiply in a filtered ring so every nonzero element of I^k has degree >= {degree}k, \
         and the intersection of all powers is 0. Normality replaces centrality: only f^k*S = I^k and \
         degree additivity are used."
    );
    Ok(Ok(ZeroCertificate {
        generator: f.clone(),
        central,
        justification,
    }))
}

/// One round of the `I(m)` iteration.
#[derive(Debug, Clone)]
pub struct RoundReport {
    pub round: usize,
    /// Reduced two-sided basis of the ideal examined in this round.
    pub seed: Vec<Poly>,
    /// The seed came from a degree-truncated candidate rather than the input.
    pub heuristic: bool,
    pub certificate: Result<ZeroCertificate, CertFailure>,
    pub powint: PowIntReport,
    pub status: PowIntStatus,
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub degree: u32,
    pub max_power: u32,
    pub max_rounds: u32,
    pub proper: bool,
    pub rounds: Vec<RoundReport>,
    /// Index `m` of the round in which `I(m) = 0` was certified or observed.
    pub vanishing_round: Option<usize>,
    pub status: PowIntStatus,
    pub warnings: Vec<String>,
}

/// Runs [`powint`] on `I`, then on the ideal generated by the stabilized
/// candidates, and so on, for at most `mmax` rounds. Every round first tries
/// [`cert_zero_principal`]. Stops at the first certified or observed zero.
pub fn iterate_powint(
    i: &IdealHandle,
    d: u32,
    kmax: u32,
    mmax: u32,
) -> Result<IterationReport, IdealError> {
    let proper = is_proper(i)?;
    let mut rounds = Vec::new();
    let mut warnings = Vec::new();
    let mut vanishing_round = None;
    let mut seed = i.clone();
    for round in 1..=mmax as usize {
        let certificate = cert_zero_principal(&seed)?;
        let report = powint(&seed, d, kmax)?;
        let status = if certificate.is_ok() {
            PowIntStatus::CertifiedZero
        } else {
            report.status
        };
        let candidates = report.candidates.clone();
        rounds.push(RoundReport {
            round,
            seed: seed.gb()?.elements().to_vec(),
            heuristic: round > 1,
            certificate,
            powint: report,
            status,
        });
        match status {
            PowIntStatus::CertifiedZero | PowIntStatus::ObservedZero => {
                vanishing_round = Some(round);
                break;
            }
            PowIntStatus::Inconclusive => break,
            PowIntStatus::CandidateNonzero => {
                if !is_proper(&seed)? {
                    warnings.push(
                        "ideal is not proper (it contains 1); every power is the whole ring".into(),
                    );
                    break;
                }
                let next = IdealHandle::new(&seed.ring, candidates)?;
                if equals(&next, &seed)? {
                    warnings.push(format!("round {round}: candidate equals its own seed; iteration is at a fixed point"));
                    break;
                }
                seed = next;
            }
        }
    }
    let status = match vanishing_round {
        Some(m) => rounds[m - 1].status,
        None => PowIntStatus::Inconclusive,
    };
    Ok(IterationReport {
        degree: d,
        max_power: kmax,
        max_rounds: mmax,
        proper,
        rounds,
        vanishing_round,
        status,
        warnings,
    })
}

/// Whether `delta_i(g)` lies in the ideal generated by the `g`s for every
/// generator and every `i` in `ds` (0-based). Generators must lie in the
/// subring below `min(ds)`, and membership is decided in that subring.
pub fn is_invariant(i: &IdealHandle, ds: &[usize]) -> Result<bool, IdealError> {
    let Some(&low) = ds.iter().min() else {
        return Ok(true);
    };
    if i.is_zero() {
        return Ok(true);
    }
    for g in &i.generators {
        if let Some(var) = g
            .terms()
            .keys()
            .filter_map(|m| m.top_var())
            .filter(|&v| v >= low)
            .max()
        {
            return Err(IdealError::OutsideDerivationDomain {
                gen: g.to_string(),
                var: var + 1,
                min: low + 1,
            });
        }
    }
    if low == 0 {
        // Constant generators: derivatives vanish.
        return Ok(true);
    }
    let sub = i.ring.subring(low)?;
    let sub_gens = i
        .generators
        .iter()
        .map(|g| g.change_ring(&sub))
        .collect::<Result<Vec<_>, _>>()?;
    let sub_ideal = IdealHandle::new(&sub, sub_gens)?;
    for g in &i.generators {
        for &d in ds {
            let image = apply_derivation(&i.ring, d, g)?.change_ring(&sub)?;
            if !sub_ideal.contains(&image)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
