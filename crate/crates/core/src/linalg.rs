//! Dense complex matrix substrate: vectorization, block realignment,
//! party-first bipartition views, SVD / Hermitian eigendecomposition, and
//! tolerance-aware rank decisions.
//!
//! `vec` and `realign` are column-stacking regardless of nalgebra's storage
//! order; every index map below is written out explicitly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::shape::SystemShape;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// `τ = max(rows, cols) · σ₁ · RANK_TOL_FACTOR`.
pub const RANK_TOL_FACTOR: f64 = 1e-10;
/// A realignment is accepted as rank one when `σ₂/σ₁` does not exceed this.
pub const RANK_ONE_ACCEPT: f64 = 1e-8;
/// Maximum entrywise deviation `|H − H†|` accepted by [`eigh`], relative to `max(1, max|H|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Column-stacking vectorization: `out[j·M + i] = A[i, j]`.
pub fn vec(a: &ComplexMatrix) -> ComplexVector {
    let (m, n) = a.shape();
    ComplexVector::from_fn(m * n, |k, _| a[(k % m, k / m)])
}

/// Inverse of [`vec`].
pub fn unvec(v: &ComplexVector, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.len() != rows * cols {
        return Err(Error::Shape(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| v[j * rows + i]))
}

/// Block realignment of an `MN×MN` matrix viewed as `M×M` blocks of size `N×N`.
///
/// Row `j·M + i` of the `M²×N²` result is `vec(Z_ij)ᵀ`, where `Z_ij` is the
/// block in block-row `i`, block-column `j`.
pub fn realign(z: &ComplexMatrix, m: usize, n: usize) -> Result<ComplexMatrix> {
    let side = m * n;
    if z.shape() != (side, side) {
        return Err(Error::Shape(format!(
            "realign expects a {side}x{side} matrix for M={m}, N={n}, got {}x{}",
            z.nrows(),
            z.ncols()
        )));
    }
    Ok(ComplexMatrix::from_fn(m * m, n * n, |row, col| {
        let (i, j) = (row % m, row / m);
        let (k, l) = (col % n, col / n);
        z[(i * n + k, j * n + l)]
    }))
}

/// Inverse index map of [`realign`].
pub fn unrealign(r: &ComplexMatrix, m: usize, n: usize) -> Result<ComplexMatrix> {
    if r.shape() != (m * m, n * n) {
        return Err(Error::Shape(format!(
            "unrealign expects a {}x{} matrix, got {}x{}",
            m * m,
            n * n,
            r.nrows(),
            r.ncols()
        )));
    }
    let mut z = ComplexMatrix::zeros(m * n, m * n);
    for row in 0..m * m {
        let (i, j) = (row % m, row / m);
        for col in 0..n * n {
            let (k, l) = (col % n, col / n);
            z[(i * n + k, j * n + l)] = r[(row, col)];
        }
    }
    Ok(z)
}

/// Index map sending party `party` to the front, other parties kept in order.
/// Entry `p[new]` is the original composite index.
pub fn party_first_permutation(shape: &SystemShape, party: usize) -> Result<Vec<usize>> {
    shape.check_party(party)?;
    let k = shape.parties();
    let mut order = Vec::with_capacity(k);
    order.push(party);
    order.extend((0..k).filter(|&p| p != party));
    let reordered = shape.subshape(&order)?;
    Ok((0..shape.total())
        .map(|new| {
            let new_digits = reordered.digits(new);
            let mut old = vec![0; k];
            for (slot, &p) in new_digits.iter().zip(&order) {
                old[p] = *slot;
            }
            shape.compose(&old)
        })
        .collect())
}

/// `P A Pᵀ`, with `P` moving party `party` to the outer (block) index.
pub fn bipartition_view(a: &ComplexMatrix, shape: &SystemShape, party: usize) -> Result<ComplexMatrix> {
    check_square(a, shape.total())?;
    let perm = party_first_permutation(shape, party)?;
    Ok(ComplexMatrix::from_fn(a.nrows(), a.ncols(), |r, c| {
        a[(perm[r], perm[c])]
    }))
}

/// Realigned matrix `R(A_{i|î})` for party `party` against the rest.
pub fn party_realignment(a: &ComplexMatrix, shape: &SystemShape, party: usize) -> Result<ComplexMatrix> {
    let view = bipartition_view(a, shape, party)?;
    realign(&view, shape.dim(party), shape.complement_dim(party))
}

pub(crate) fn check_square(a: &ComplexMatrix, side: usize) -> Result<()> {
    if a.shape() != (side, side) {
        return Err(Error::Shape(format!(
            "expected a {side}x{side} matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Thin singular value decomposition `A = U Σ V†`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × min(rows, cols)`, orthonormal columns.
    pub u: ComplexMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `cols × min(rows, cols)`, orthonormal columns.
    pub v: ComplexMatrix,
}

impl Svd {
    /// `U` completed to a square unitary.
    pub fn full_u(&self) -> ComplexMatrix {
        complete_unitary(&self.u)
    }

    /// `V` completed to a square unitary.
    pub fn full_v(&self) -> ComplexMatrix {
        complete_unitary(&self.v)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (k, &s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

fn to_faer(a: &ComplexMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin SVD with singular values nonincreasing.
pub fn svd(a: &ComplexMatrix) -> Svd {
    if a.is_empty() {
        return Svd {
            u: ComplexMatrix::zeros(a.nrows(), 0),
            singular_values: vec![],
            v: ComplexMatrix::zeros(a.ncols(), 0),
        };
    }
    let dec = to_faer(a).thin_svd().expect("SVD of a finite matrix converges");
    let s = dec.S().column_vector();
    Svd {
        u: from_faer(dec.U()),
        singular_values: (0..s.nrows()).map(|k| s[k].re).collect(),
        v: from_faer(dec.V()),
    }
}

/// Singular values only, nonincreasing.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.is_empty() {
        return vec![];
    }
    to_faer(a).singular_values().expect("SVD of a finite matrix converges")
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_deviation(h: &ComplexMatrix) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn all_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Hermitian eigendecomposition `H = Q Λ Q†`, eigenvalues nonincreasing.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub vectors: ComplexMatrix,
    pub values: Vec<f64>,
}

pub fn eigh(h: &ComplexMatrix) -> Result<Eigh> {
    if h.nrows() != h.ncols() {
        return Err(Error::Shape(format!("eigh expects a square matrix, got {}x{}", h.nrows(), h.ncols())));
    }
    if !all_finite(h) {
        return Err(Error::NonFinite);
    }
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL * max_abs(h).max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let dec = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigensolver converges on finite input");
    let s = dec.S().column_vector();
    let n = h.nrows();
    // faer returns ascending order
    let values = (0..n).rev().map(|k| s[k].re).collect();
    let vecs = dec.U();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| vecs[(r, n - 1 - c)]);
    Ok(Eigh { vectors, values })
}

/// Extends orthonormal columns to a square unitary by Gram–Schmidt against
/// the standard basis, always taking the basis vector with the largest
/// remaining component next.
pub fn complete_unitary(cols: &ComplexMatrix) -> ComplexMatrix {
    let n = cols.nrows();
    let mut basis: Vec<ComplexVector> = cols.column_iter().map(|c| c.into_owned()).collect();
    while basis.len() < n {
        let mut best: Option<(f64, ComplexVector)> = None;
        for e in 0..n {
            let mut v = ComplexVector::zeros(n);
            v[e] = ONE;
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v -= b * proj;
                }
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn + 1e-12) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("n > 0");
        basis.push(v.unscale(norm));
    }
    ComplexMatrix::from_columns(&basis)
}

/// Singular values, numerical rank and rank-one residual of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub singular_values: Vec<f64>,
    pub numerical_rank: usize,
    /// `σ₂/σ₁`, or 0 when `σ₁ = 0` or there is a single singular value.
    pub rank1_residual: f64,
}

impl RankReport {
    pub fn is_rank_one(&self) -> bool {
        self.numerical_rank == 1
    }
}

pub fn rank_report(a: &ComplexMatrix) -> RankReport {
    rank_report_from_values(svd(a).singular_values, a.nrows().max(a.ncols()))
}

pub(crate) fn rank_report_from_values(singular_values: Vec<f64>, max_dim: usize) -> RankReport {
    let s1 = singular_values.first().copied().unwrap_or(0.0);
    let tau = max_dim as f64 * s1 * RANK_TOL_FACTOR;
    let numerical_rank = singular_values.iter().filter(|&&s| s > tau).count();
    let rank1_residual = if s1 > 0.0 && singular_values.len() > 1 {
        singular_values[1] / s1
    } else {
        0.0
    };
    RankReport {
        singular_values,
        numerical_rank,
        rank1_residual,
    }
}

pub fn numerical_rank(a: &ComplexMatrix) -> usize {
    rank_report(a).numerical_rank
}

/// `σ₂/σ₁` without keeping the rest of the report.
pub(crate) fn rank_one_residual(a: &ComplexMatrix) -> f64 {
    let vals = singular_values(a);
    match (vals.first(), vals.get(1)) {
        (Some(&s1), Some(&s2)) if s1 > 0.0 => s2 / s1,
        _ => 0.0,
    }
}

/// Smallest over largest singular value; 0 for a zero matrix.
pub fn inverse_condition(a: &ComplexMatrix) -> f64 {
    let s = svd(a).singular_values;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Relative Frobenius distance `‖a − b‖ / ‖b‖` (absolute when `b = 0`).
pub fn relative_error(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_row_slice(rows, cols, &data.iter().map(|&x| c(x)).collect::<Vec<_>>())
    }

    #[test]
    fn vec_is_column_stacking() {
        let a = real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v: Vec<f64> = vec(&a).iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 3.0, 2.0, 4.0]);
        let one = real(1, 1, &[5.0]);
        assert_eq!(vec(&one)[0], c(5.0));
    }

    #[test]
    fn realign_block_layout() {
        let z = real(
            4,
            4,
            &[
                1.0, 2.0, 5.0, 6.0, 3.0, 4.0, 7.0, 8.0, 9.0, 10.0, 13.0, 14.0, 11.0, 12.0, 15.0, 16.0,
            ],
        );
        let r = realign(&z, 2, 2).unwrap();
        let expected = real(
            4,
            4,
            &[
                1.0, 3.0, 2.0, 4.0, 9.0, 11.0, 10.0, 12.0, 5.0, 7.0, 6.0, 8.0, 13.0, 15.0, 14.0, 16.0,
            ],
        );
        assert_eq!(r, expected);
        assert_eq!(unrealign(&r, 2, 2).unwrap(), z);
    }

    #[test]
    fn realign_rejects_bad_shape() {
        let z = ComplexMatrix::zeros(4, 4);
        assert!(matches!(realign(&z, 2, 3), Err(Error::Shape(_))));
    }

    #[test]
    fn identity_realigns_to_rank_one() {
        let r = realign(&identity(4), 2, 2).unwrap();
        assert_eq!(rank_report(&r).numerical_rank, 1);
    }

    #[test]
    fn zero_matrix_rank_report() {
        let rep = rank_report(&ComplexMatrix::zeros(3, 5));
        assert_eq!(rep.numerical_rank, 0);
        assert_eq!(rep.rank1_residual, 0.0);
    }

    #[test]
    fn diagonal_svd_sorted() {
        let a = real(3, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]);
        let dec = svd(&a);
        assert_eq!(dec.singular_values.len(), 3);
        for (got, want) in dec.singular_values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(relative_error(&dec.reconstruct(), &a) < 1e-14);
    }

    #[test]
    fn bipartition_of_first_party_is_identity() {
        let shape = SystemShape::new(vec![2, 3]).unwrap();
        let a = ComplexMatrix::from_fn(6, 6, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!(bipartition_view(&a, &shape, 0).unwrap(), a);
        assert!(matches!(
            bipartition_view(&a, &shape, 2),
            Err(Error::PartyIndex { .. })
        ));
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let a = real(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eigh(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn complete_unitary_extends_basis() {
        let s = 0.5f64.sqrt();
        let cols = ComplexMatrix::from_column_slice(3, 1, &[c(s), c(s), c(0.0)]);
        let u = complete_unitary(&cols);
        assert!(relative_error(&(u.adjoint() * &u), &identity(3)) < 1e-14);
        assert_eq!(u.column(0), cols.column(0));
    }
}
