use std::fmt;

use crate::error::{Error, Result};

/// Ordered local dimensions `(N_1, ..., N_K)` of a multipartite system.
///
/// Composite indices are row-major over parties: party 0 is the most
/// significant digit, matching the Kronecker convention `a_0 ⊗ a_1 ⊗ ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemShape {
    dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("at least one party is required".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidShape(format!(
                "every party dimension must be at least 2, got {d}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn qubits(parties: usize) -> Result<Self> {
        Self::new(vec![2; parties])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, party: usize) -> usize {
        self.dims[party]
    }

    /// Product of all local dimensions.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Product of the dimensions of every party except `party`.
    pub fn complement_dim(&self, party: usize) -> usize {
        self.total() / self.dims[party]
    }

    /// Product of the dimensions of the listed parties.
    pub fn subset_dim(&self, parties: &[usize]) -> usize {
        parties.iter().map(|&p| self.dims[p]).product()
    }

    pub fn check_party(&self, party: usize) -> Result<()> {
        if party >= self.parties() {
            return Err(Error::PartyIndex {
                index: party,
                parties: self.parties(),
            });
        }
        Ok(())
    }

    /// Shape restricted to the listed parties, in the given order.
    pub fn subshape(&self, parties: &[usize]) -> Result<Self> {
        for &p in parties {
            self.check_party(p)?;
        }
        Self::new(parties.iter().map(|&p| self.dims[p]).collect())
    }

    /// Splits a composite index into per-party digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Inverse of [`SystemShape::digits`].
    pub fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }
}

impl fmt::Display for SystemShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_dims() {
        assert!(SystemShape::new(vec![]).is_err());
        assert!(SystemShape::new(vec![2, 1]).is_err());
        assert!(SystemShape::new(vec![2, 3]).is_ok());
    }

    #[test]
    fn digits_roundtrip() {
        let shape = SystemShape::new(vec![2, 3, 2]).unwrap();
        for idx in 0..shape.total() {
            assert_eq!(shape.compose(&shape.digits(idx)), idx);
        }
        assert_eq!(shape.digits(7), vec![1, 0, 1]);
    }
}
