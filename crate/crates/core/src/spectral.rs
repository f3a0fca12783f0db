//! Spectral preparation of density matrices.
//!
//! Eigenvectors are made deterministic: inside every degenerate cluster the
//! basis is rebuilt by pivoted Cholesky of the cluster projector (the
//! standard-basis direction with the largest remaining weight is taken
//! first, ties to the lowest index), and every vector is phase-fixed so its
//! last significant component is real and positive.

use num_complex::Complex64;

use crate::linalg::{self, ComplexMatrix, ComplexVector, RANK_TOL_FACTOR};
use crate::state::MixedState;

/// Neighbouring eigenvalues closer than this (relative to `λ₁`) share a cluster.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Components below this fraction of the largest are ignored by the phase rule.
const PHASE_SIGNIFICANCE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Unitary; column `k` belongs to `eigvals[k]`.
    pub eigvecs: ComplexMatrix,
    /// Nonincreasing, nonnegative; values at or below the rank tolerance are exactly 0.
    pub eigvals: Vec<f64>,
    pub support_rank: usize,
    /// Index groups of numerically equal eigenvalues, in order.
    pub degeneracy_clusters: Vec<Vec<usize>>,
}

impl SpectralData {
    pub fn is_nondegenerate(&self) -> bool {
        self.degeneracy_clusters.iter().all(|c| c.len() == 1)
    }

    pub fn largest_cluster(&self) -> usize {
        self.degeneracy_clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexVector::from_iterator(
            self.eigvals.len(),
            self.eigvals.iter().map(|&l| Complex64::new(l, 0.0)),
        );
        &self.eigvecs * ComplexMatrix::from_diagonal(&d) * self.eigvecs.adjoint()
    }
}

pub fn spectral_prep(rho: &MixedState) -> SpectralData {
    let eig = linalg::eigh(rho.rho()).expect("validated density matrix is Hermitian");
    let n = eig.values.len();
    let top = eig.values[0].max(0.0);
    let tau = n as f64 * top * RANK_TOL_FACTOR;
    let eigvals: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| if l > tau { l } else { 0.0 })
        .collect();
    let support_rank = eigvals.iter().filter(|&&l| l > 0.0).count();

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &l) in eigvals.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if (eigvals[*last.last().unwrap()] - l).abs() <= CLUSTER_TOL * top => last.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    let mut eigvecs = eig.vectors;
    for cluster in clusters.iter().filter(|c| c.len() > 1) {
        let basis = canonical_cluster_basis(&eigvecs, cluster);
        for (&k, v) in cluster.iter().zip(basis) {
            eigvecs.set_column(k, &v);
        }
    }
    for k in 0..n {
        let fixed = fix_phase(&eigvecs.column(k).into_owned());
        eigvecs.set_column(k, &fixed);
    }

    SpectralData {
        eigvecs,
        eigvals,
        support_rank,
        degeneracy_clusters: clusters,
    }
}

/// Pivoted Cholesky of the projector onto the span of `cols[cluster]`.
fn canonical_cluster_basis(vectors: &ComplexMatrix, cluster: &[usize]) -> Vec<ComplexVector> {
    let n = vectors.nrows();
    let span = ComplexMatrix::from_columns(&cluster.iter().map(|&k| vectors.column(k)).collect::<Vec<_>>());
    let mut residual = &span * span.adjoint();
    let mut out = Vec::with_capacity(cluster.len());
    for _ in 0..cluster.len() {
        let mut pivot = 0;
        let mut weight = f64::NEG_INFINITY;
        for j in 0..n {
            let w = residual[(j, j)].re;
            if w > weight + 1e-9 {
                weight = w;
                pivot = j;
            }
        }
        let col = residual.column(pivot).into_owned();
        let v = col.unscale(weight.max(f64::MIN_POSITIVE).sqrt());
        residual -= &v * v.adjoint();
        out.push(v);
    }
    // re-orthonormalize against accumulated rounding
    let mut ortho: Vec<ComplexVector> = Vec::with_capacity(out.len());
    for mut v in out {
        for _ in 0..2 {
            for b in &ortho {
                let p = b.dotc(&v);
                v -= b * p;
            }
        }
        let norm = v.norm();
        ortho.push(v.unscale(norm));
    }
    ortho
}

/// Rotates `v` so its last significant component is real and positive.
pub(crate) fn fix_phase(v: &ComplexVector) -> ComplexVector {
    let peak = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    match v.iter().rev().find(|z| z.norm() >= PHASE_SIGNIFICANCE * peak) {
        Some(z) if z.norm() > 0.0 => v * (z.conj() / z.norm()),
        _ => v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{bell_basis, fixtures, FixtureParams};
    use crate::shape::SystemShape;

    #[test]
    fn maximally_mixed_is_one_cluster() {
        let rho = MixedState::new(SystemShape::qubits(2).unwrap(), linalg::identity(4) * Complex64::new(0.25, 0.0))
            .unwrap();
        let s = spectral_prep(&rho);
        assert_eq!(s.degeneracy_clusters, vec![vec![0, 1, 2, 3]]);
        for l in &s.eigvals {
            assert!((l - 0.25).abs() < 1e-15);
        }
        assert_eq!(s.support_rank, 4);
        // canonical basis of the full space is the standard basis
        assert!(linalg::relative_error(&s.eigvecs, &linalg::identity(4)) < 1e-12);
    }

    #[test]
    fn bell_diagonal_eigenvectors_are_bell_states() {
        let p = FixtureParams::Example1 {
            lambda: [0.4, 0.3, 0.2, 0.1],
            mu: [0.4, 0.3, 0.2, 0.1],
        };
        let (rho, _) = fixtures(&p).unwrap();
        let s = spectral_prep(&rho.to_mixed());
        assert!(s.is_nondegenerate());
        for (k, bell) in bell_basis().iter().enumerate() {
            assert!((s.eigvals[k] - [0.4, 0.3, 0.2, 0.1][k]).abs() < 1e-14);
            let overlap = s.eigvecs.column(k).dotc(bell).norm();
            assert!((overlap - 1.0).abs() < 1e-12, "column {k} overlap {overlap}");
        }
        assert!(linalg::relative_error(&s.reconstruct(), rho.to_mixed().rho()) < 1e-12);
    }

    #[test]
    fn phase_rule_uses_last_significant_component() {
        let v = ComplexVector::from_vec(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, -0.8),
            Complex64::new(1e-9, 0.0),
        ]);
        let w = fix_phase(&v);
        assert!(w[1].im.abs() < 1e-15 && w[1].re > 0.0);
    }
}
