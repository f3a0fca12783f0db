use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector};
use crate::shape::SystemShape;

/// Normalization tolerance for pure amplitudes.
pub const NORM_TOL: f64 = 1e-10;
/// Hermiticity, positivity and trace tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-10;

/// Normalized amplitude vector indexed row-major over parties.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    shape: SystemShape,
    amplitudes: ComplexVector,
}

impl PureState {
    pub fn new(shape: SystemShape, amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.len() != shape.total() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a system of dimension {}",
                amplitudes.len(),
                shape.total()
            )));
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amplitudes.norm();
        if (norm * norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidPureState(format!("squared norm {} is not 1", norm * norm)));
        }
        Ok(Self { shape, amplitudes })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(shape: SystemShape, amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidPureState("zero or non-finite amplitude vector".into()));
        }
        Self::new(shape, amplitudes.unscale(norm))
    }

    /// Convenience constructor from `(basis index, amplitude)` pairs, normalized.
    pub fn from_terms(shape: SystemShape, terms: &[(usize, Complex64)]) -> Result<Self> {
        let mut amps = ComplexVector::zeros(shape.total());
        for &(idx, a) in terms {
            if idx >= amps.len() {
                return Err(Error::Shape(format!("basis index {idx} out of range")));
            }
            amps[idx] += a;
        }
        Self::normalized(shape, amps)
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[usize]) -> Complex64 {
        self.amplitudes[self.shape.compose(digits)]
    }

    pub fn density(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    shape: SystemShape,
    rho: ComplexMatrix,
}

impl MixedState {
    pub fn new(shape: SystemShape, rho: ComplexMatrix) -> Result<Self> {
        linalg::check_square(&rho, shape.total())?;
        if !linalg::all_finite(&rho) {
            return Err(Error::NonFinite);
        }
        let dev = linalg::hermitian_deviation(&rho);
        if dev > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {dev:e})")));
        }
        let rho = (&rho + rho.adjoint()).scale(0.5);
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace} is not 1")));
        }
        let eig = linalg::eigh(&rho)?;
        let lowest = eig.values.last().copied().unwrap_or(0.0);
        if lowest < -DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {lowest:e}")));
        }
        Ok(Self { shape, rho })
    }

    /// Hermitizes and divides by the trace before validating.
    pub fn normalized(shape: SystemShape, m: ComplexMatrix) -> Result<Self> {
        linalg::check_square(&m, shape.total())?;
        let h = (&m + m.adjoint()).scale(0.5);
        let trace = h.trace().re;
        if trace <= 0.0 || !trace.is_finite() {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace} cannot be normalized")));
        }
        Self::new(shape, h.unscale(trace))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self::normalized(psi.shape().clone(), psi.density()).expect("projector onto a unit vector is a state")
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn rank(&self) -> usize {
        linalg::numerical_rank(&self.rho)
    }

    /// Reduced state of one party (all others traced out).
    pub fn reduced(&self, party: usize) -> Result<ComplexMatrix> {
        reduced_state(&self.rho, &self.shape, party)
    }
}

/// Partial trace over every party except `party`.
pub fn reduced_state(rho: &ComplexMatrix, shape: &SystemShape, party: usize) -> Result<ComplexMatrix> {
    let view = linalg::bipartition_view(rho, shape, party)?;
    let n = shape.dim(party);
    let rest = shape.complement_dim(party);
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..rest).map(|k| view[(i * rest + k, j * rest + k)]).sum()
    }))
}

/// A pure or mixed state tagged with its shape.
#[derive(Debug, Clone, PartialEq)]
pub enum StateRecord {
    Pure(PureState),
    Mixed(MixedState),
}

impl StateRecord {
    pub fn shape(&self) -> &SystemShape {
        match self {
            StateRecord::Pure(p) => p.shape(),
            StateRecord::Mixed(m) => m.shape(),
        }
    }

    /// Density-matrix view; pure states become rank-one projectors.
    pub fn to_mixed(&self) -> MixedState {
        match self {
            StateRecord::Pure(p) => MixedState::from_pure(p),
            StateRecord::Mixed(m) => m.clone(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StateRecord::Pure(_) => "pure",
            StateRecord::Mixed(_) => "mixed",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_unnormalized_pure() {
        let shape = SystemShape::qubits(1).unwrap();
        let v = ComplexVector::from_vec(vec![c(1.0), c(1.0)]);
        assert!(matches!(
            PureState::new(shape.clone(), v.clone()),
            Err(Error::InvalidPureState(_))
        ));
        assert!(PureState::normalized(shape, v).is_ok());
    }

    #[test]
    fn rejects_bad_trace_and_negative_spectrum() {
        let shape = SystemShape::qubits(1).unwrap();
        let rho = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(0.5), c(0.4)]));
        assert!(matches!(
            MixedState::new(shape.clone(), rho),
            Err(Error::InvalidDensityMatrix(_))
        ));
        let rho = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(1.2), c(-0.2)]));
        assert!(matches!(
            MixedState::new(shape, rho),
            Err(Error::InvalidDensityMatrix(_))
        ));
    }

    #[test]
    fn reduced_state_of_bell_pair_is_maximally_mixed() {
        let shape = SystemShape::qubits(2).unwrap();
        let bell = PureState::from_terms(shape, &[(0, c(1.0)), (3, c(1.0))]).unwrap();
        let rho = MixedState::from_pure(&bell);
        for party in 0..2 {
            let r = rho.reduced(party).unwrap();
            assert!(linalg::relative_error(&r, &(linalg::identity(2) * c(0.5))) < 1e-15);
        }
    }

    #[test]
    fn reduced_state_of_product() {
        // |0> ⊗ |+> ⊗ |1>, check the middle party
        let shape = SystemShape::qubits(3).unwrap();
        let psi = PureState::from_terms(shape, &[(0b001, c(1.0)), (0b011, c(1.0))]).unwrap();
        let r = MixedState::from_pure(&psi).reduced(1).unwrap();
        let expected = ComplexMatrix::from_element(2, 2, c(0.5));
        assert!(linalg::relative_error(&r, &expected) < 1e-15);
    }
}
