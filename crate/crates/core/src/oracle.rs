//! Independent witness verification and random fixture generation.
//!
//! Verification substitutes the witness into the defining relation and
//! measures the mismatch directly; it never looks at realignments or search
//! state. Mixed-state comparisons are trace-renormalized because invertible
//! local operators do not preserve the trace.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector};
use crate::shape::SystemShape;
use crate::state::{MixedState, PureState, StateRecord};
use crate::tensor_factor::FactorSet;

/// A witness passes when its relative residual does not exceed this.
pub const WITNESS_TOL: f64 = 1e-7;
/// Random local operators are redrawn until `σ_min/σ_max` reaches this.
pub const MIN_INVERSE_CONDITION: f64 = 1e-3;
/// Certificates reject witnesses with a worse per-factor condition number.
/// States in the closure of an orbit (W from GHZ) are approached only by
/// operators whose conditioning grows like the inverse residual.
pub const MAX_WITNESS_CONDITION: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessCheck {
    pub relative_residual: f64,
    pub passed: bool,
}

impl WitnessCheck {
    pub fn from_residual(relative_residual: f64) -> Self {
        Self {
            relative_residual,
            passed: relative_residual <= WITNESS_TOL,
        }
    }
}

fn check_witness_shape(shape: &SystemShape, w: &FactorSet) -> Result<()> {
    if &w.shape() != shape {
        return Err(Error::Shape(format!(
            "witness acts on {} but the states live on {shape}",
            w.shape()
        )));
    }
    for (k, f) in w.factors().iter().enumerate() {
        if linalg::numerical_rank(f) < f.nrows() {
            return Err(Error::SingularFactor(k));
        }
    }
    Ok(())
}

/// `min_θ ‖φ·e^{iθ} − Wψ/‖Wψ‖‖₂`.
pub fn verify_witness_pure(phi: &PureState, psi: &PureState, w: &FactorSet) -> Result<WitnessCheck> {
    if phi.shape() != psi.shape() {
        return Err(Error::Shape("states have different shapes".into()));
    }
    check_witness_shape(psi.shape(), w)?;
    let image = w.kron() * psi.amplitudes();
    let norm = image.norm();
    if norm == 0.0 {
        return Err(Error::NotInvertible(0.0));
    }
    let image = image.unscale(norm);
    let overlap = phi.amplitudes().dotc(&image);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let residual = (phi.amplitudes() * phase - image).norm();
    Ok(WitnessCheck::from_residual(residual))
}

/// `‖ρ₁ − Aρ₂A†/tr(Aρ₂A†)‖_F / ‖ρ₁‖_F` with `A = kron(w)`.
pub fn verify_witness_mixed(rho1: &MixedState, rho2: &MixedState, w: &FactorSet) -> Result<WitnessCheck> {
    if rho1.shape() != rho2.shape() {
        return Err(Error::Shape("states have different shapes".into()));
    }
    check_witness_shape(rho2.shape(), w)?;
    let a = w.kron();
    let image = &a * rho2.rho() * a.adjoint();
    let trace = image.trace().re;
    if trace <= 0.0 {
        return Err(Error::NotInvertible(trace));
    }
    let residual = linalg::relative_error(&image.unscale(trace), rho1.rho());
    Ok(WitnessCheck::from_residual(residual))
}

/// Two-sided check applied before any `Equivalent` verdict: the witness must
/// pass forward, its inverse must pass in reverse, and it must be reasonably
/// conditioned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub forward: f64,
    pub reverse: f64,
    pub condition: f64,
    pub passed: bool,
}

impl Certificate {
    fn new(forward: f64, reverse: f64, condition: f64) -> Self {
        Self {
            forward,
            reverse,
            condition,
            passed: forward <= WITNESS_TOL && reverse <= WITNESS_TOL && condition <= MAX_WITNESS_CONDITION,
        }
    }
}

pub fn certify_pure(phi: &PureState, psi: &PureState, w: &FactorSet) -> Result<Certificate> {
    let fwd = verify_witness_pure(phi, psi, w)?;
    let rev = verify_witness_pure(psi, phi, &w.inverse()?)?;
    Ok(Certificate::new(fwd.relative_residual, rev.relative_residual, w.max_condition()))
}

pub fn certify_mixed(rho1: &MixedState, rho2: &MixedState, w: &FactorSet) -> Result<Certificate> {
    let fwd = verify_witness_mixed(rho1, rho2, w)?;
    let rev = verify_witness_mixed(rho2, rho1, &w.inverse()?)?;
    Ok(Certificate::new(fwd.relative_residual, rev.relative_residual, w.max_condition()))
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub(crate) fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = gaussian(rng);
        }
    }
    m
}

pub(crate) fn well_conditioned_factor(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    loop {
        let m = gaussian_matrix(rng, n, n);
        if linalg::inverse_condition(&m) >= MIN_INVERSE_CONDITION {
            return m;
        }
    }
}

/// Complex-Gaussian local operators, each redrawn until well conditioned.
pub fn random_ilo(shape: &SystemShape, seed: u64) -> FactorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = shape
        .dims()
        .iter()
        .map(|&d| well_conditioned_factor(&mut rng, d))
        .collect();
    FactorSet::new(factors, Complex64::new(1.0, 0.0)).expect("conditioned factors are invertible")
}

/// Haar-like random pure state (normalized complex Gaussian vector).
pub fn random_pure(shape: &SystemShape, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: ComplexVector = DVector::from_fn(shape.total(), |_, _| gaussian(&mut rng));
    PureState::normalized(shape.clone(), v).expect("gaussian vector is nonzero")
}

/// Random density matrix `G G† / tr` with `G` of width `rank` (full rank by default).
pub fn random_mixed(shape: &SystemShape, seed: u64, rank: Option<usize>) -> MixedState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = rank.unwrap_or(shape.total()).clamp(1, shape.total());
    let g = gaussian_matrix(&mut rng, shape.total(), width);
    MixedState::normalized(shape.clone(), &g * g.adjoint()).expect("gram matrix is a state")
}

/// Applies a random ILO to `state`; returns the image and the generating witness,
/// so that `verify(image, state, witness)` passes.
pub fn make_equivalent_pair(state: &StateRecord, seed: u64) -> Result<(StateRecord, FactorSet)> {
    let w = random_ilo(state.shape(), seed);
    let a = w.kron();
    let image = match state {
        StateRecord::Pure(p) => {
            StateRecord::Pure(PureState::normalized(p.shape().clone(), &a * p.amplitudes())?)
        }
        StateRecord::Mixed(m) => {
            StateRecord::Mixed(MixedState::normalized(m.shape().clone(), &a * m.rho() * a.adjoint())?)
        }
    };
    Ok((image, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_witness_has_zero_residual() {
        let shape = SystemShape::qubits(3).unwrap();
        let psi = random_pure(&shape, 1);
        let id = FactorSet::identity(&shape);
        assert_eq!(verify_witness_pure(&psi, &psi, &id).unwrap().relative_residual, 0.0);
        let rho = random_mixed(&shape, 2, None);
        assert!(verify_witness_mixed(&rho, &rho, &id).unwrap().relative_residual < 1e-15);
    }

    #[test]
    fn random_ilo_is_reproducible_and_conditioned() {
        let shape = SystemShape::new(vec![2, 3, 2]).unwrap();
        let a = random_ilo(&shape, 99);
        let b = random_ilo(&shape, 99);
        assert_eq!(a, b);
        for f in a.factors() {
            assert!(linalg::inverse_condition(f) >= MIN_INVERSE_CONDITION);
        }
    }

    #[test]
    fn wrong_shape_witness_rejected() {
        let psi = random_pure(&SystemShape::qubits(2).unwrap(), 0);
        let w = FactorSet::identity(&SystemShape::new(vec![4]).unwrap());
        assert!(matches!(verify_witness_pure(&psi, &psi, &w), Err(Error::Shape(_))));
    }
}
