//! Kronecker decomposability of invertible operators and witness extraction.
//!
//! An invertible `A` on `H_1 ⊗ ... ⊗ H_K` factors as `a_1 ⊗ ... ⊗ a_K` exactly
//! when every single-party realignment `R(A_{i|î})` has rank one. Factors are
//! recovered by peeling off the leading singular triple of the party-0
//! realignment and recursing on the remainder.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, check_square, party_realignment, rank_report, realign, svd, unvec, ComplexMatrix, RankReport,
    RANK_ONE_ACCEPT,
};
use crate::shape::SystemShape;

/// Relative reconstruction error accepted by [`extract_factors`].
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// `scale · (a_1 ⊗ ... ⊗ a_K)` with canonically normalized factors.
///
/// Every factor has unit Frobenius norm and its first significant entry
/// (row-major) is real and positive; all remaining magnitude and phase lives
/// in `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    factors: Vec<ComplexMatrix>,
    scale: Complex64,
}

impl FactorSet {
    pub fn new(factors: Vec<ComplexMatrix>, scale: Complex64) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidShape("a factor set needs at least one factor".into()));
        }
        if !(scale.re.is_finite() && scale.im.is_finite()) || scale.norm() == 0.0 {
            return Err(Error::NotInvertible(scale.norm()));
        }
        let mut scale = scale;
        let mut out = Vec::with_capacity(factors.len());
        for (k, f) in factors.into_iter().enumerate() {
            if f.nrows() != f.ncols() || f.nrows() == 0 {
                return Err(Error::Shape(format!("factor {k} is not square")));
            }
            if !linalg::all_finite(&f) {
                return Err(Error::NonFinite);
            }
            if linalg::numerical_rank(&f) < f.nrows() {
                return Err(Error::SingularFactor(k));
            }
            let norm = f.norm();
            let mut f = f.unscale(norm);
            scale *= norm;
            let peak = linalg::max_abs(&f);
            let lead = (0..f.nrows())
                .flat_map(|i| (0..f.ncols()).map(move |j| (i, j)))
                .map(|ij| f[ij])
                .find(|z| z.norm() > 1e-8 * peak)
                .expect("nonzero factor");
            let phase = lead / lead.norm();
            f *= phase.conj();
            scale *= phase;
            out.push(f);
        }
        Ok(Self {
            factors: out,
            scale,
        })
    }

    pub fn identity(shape: &SystemShape) -> Self {
        let factors = shape.dims().iter().map(|&d| linalg::identity(d)).collect();
        Self::new(factors, Complex64::new(1.0, 0.0)).expect("identity factors are invertible")
    }

    pub fn factors(&self) -> &[ComplexMatrix] {
        &self.factors
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn shape(&self) -> SystemShape {
        SystemShape::new(self.factors.iter().map(|f| f.nrows()).collect())
            .expect("factors are at least 1x1")
    }

    /// `scale · (a_1 ⊗ ... ⊗ a_K)`.
    pub fn kron(&self) -> ComplexMatrix {
        let mut acc = self.factors[0].clone();
        for f in &self.factors[1..] {
            acc = acc.kronecker(f);
        }
        acc * self.scale
    }

    /// Factor-wise inverse; `kron` of the result is the inverse operator.
    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .factors
            .iter()
            .enumerate()
            .map(|(k, f)| f.clone().try_inverse().ok_or(Error::SingularFactor(k)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(inv, Complex64::new(1.0, 0.0) / self.scale)
    }

    /// Factor-wise transpose.
    pub fn transposed(&self) -> Self {
        Self::new(self.factors.iter().map(|f| f.transpose()).collect(), self.scale)
            .expect("transpose preserves invertibility")
    }

    /// `self ∘ other`: the factor set whose Kronecker product is `kron(self)·kron(other)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape("composed factor sets have different shapes".into()));
        }
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a * b)
            .collect();
        Self::new(factors, self.scale * other.scale)
    }

    /// Concatenation `self ⊗ other` (parties of `other` appended).
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::new(factors, self.scale * other.scale)
    }

    /// Largest per-factor condition number.
    pub fn max_condition(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| 1.0 / linalg::inverse_condition(f))
            .fold(1.0, f64::max)
    }
}

/// Per-party realignment ranks of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyRank {
    pub party: usize,
    pub rank1_residual: f64,
    pub numerical_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposabilityReport {
    pub per_party: Vec<PartyRank>,
    /// False when the operator is numerically singular; the criterion only
    /// applies to invertible operators.
    pub invertible: bool,
    pub decomposable: bool,
}

pub fn decomposability(a: &ComplexMatrix, shape: &SystemShape) -> Result<DecomposabilityReport> {
    check_square(a, shape.total())?;
    let invertible = linalg::numerical_rank(a) == shape.total();
    let per_party = (0..shape.parties())
        .map(|party| {
            let rep: RankReport = rank_report(&party_realignment(a, shape, party)?);
            Ok(PartyRank {
                party,
                rank1_residual: rep.rank1_residual,
                numerical_rank: rep.numerical_rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decomposable = invertible && per_party.iter().all(|p| p.numerical_rank == 1);
    Ok(DecomposabilityReport {
        per_party,
        invertible,
        decomposable,
    })
}

/// Recursive nearest-rank-one split; the remainder's scale rides on the last factor.
pub(crate) fn peel(a: &ComplexMatrix, dims: &[usize]) -> Result<Vec<ComplexMatrix>> {
    if dims.len() == 1 {
        return Ok(vec![a.clone()]);
    }
    let head = dims[0];
    let rest = a.nrows() / head;
    let dec = svd(&realign(a, head, rest)?);
    let sigma = dec.singular_values[0];
    let lead = unvec(&dec.u.column(0).into_owned(), head, head)?;
    let remainder = unvec(&dec.v.column(0).map(|z| z.conj()), rest, rest)? * Complex64::new(sigma, 0.0);
    let mut out = vec![lead];
    out.extend(peel(&remainder, &dims[1..])?);
    Ok(out)
}

/// Nearest Kronecker-structured operator in the recursive rank-one sense.
///
/// Never refuses on residual size; callers that need a certificate must check
/// the result independently.
pub fn nearest_kronecker(a: &ComplexMatrix, shape: &SystemShape) -> Result<FactorSet> {
    check_square(a, shape.total())?;
    let factors = peel(a, shape.dims())?;
    FactorSet::new(factors, Complex64::new(1.0, 0.0))
}

/// Recovers `a_1, ..., a_K` from a decomposable invertible operator.
pub fn extract_factors(a: &ComplexMatrix, shape: &SystemShape) -> Result<FactorSet> {
    let report = decomposability(a, shape)?;
    if !report.invertible {
        let s = linalg::svd(a).singular_values;
        return Err(Error::NotInvertible(s.last().copied().unwrap_or(0.0)));
    }
    if let Some(bad) = report
        .per_party
        .iter()
        .find(|p| p.rank1_residual > RANK_ONE_ACCEPT)
    {
        return Err(Error::NotDecomposable {
            party: bad.party,
            residual: bad.rank1_residual,
        });
    }
    let set = nearest_kronecker(a, shape)?;
    let err = linalg::relative_error(&set.kron(), a);
    if err > RECONSTRUCTION_TOL {
        return Err(Error::NotDecomposable {
            party: 0,
            residual: err,
        });
    }
    Ok(set)
}

/// Sum over parties of squared rank-one residuals of `R(A_{i|î})`.
pub fn realignment_objective(a: &ComplexMatrix, shape: &SystemShape) -> f64 {
    realignment_residuals(a, shape).iter().map(|r| r * r).sum()
}

/// Per-party `σ₂/σ₁` of `R(A_{i|î})`; single-party shapes are trivially zero.
pub fn realignment_residuals(a: &ComplexMatrix, shape: &SystemShape) -> Vec<f64> {
    if shape.parties() == 1 {
        return vec![0.0];
    }
    (0..shape.parties())
        .map(|p| {
            party_realignment(a, shape, p)
                .map(|r| linalg::rank_one_residual(&r))
                .unwrap_or(f64::INFINITY)
        })
        .collect()
}
