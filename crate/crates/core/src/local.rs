//! Direct fit of local factors by damped Gauss–Newton.
//!
//! Solves `A·ψ = φ` or `A·ρ₂·A† = ρ₁` for `A = a_1 ⊗ ... ⊗ a_K` with the
//! factor entries (real and imaginary parts) as unknowns. Used once the
//! diagonal gauge search has stalled; every result still goes through the
//! oracle before it is reported.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::oracle::well_conditioned_factor;
use crate::shape::SystemShape;

/// Relative residual at which a fit stops iterating.
pub const FIT_TOL: f64 = 1e-13;
const MAX_ITER: usize = 400;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Target<'a> {
    /// `A·source = target`.
    Pure {
        source: &'a ComplexVector,
        target: &'a ComplexVector,
    },
    /// `A·source·A† = target`.
    Mixed {
        source: &'a ComplexMatrix,
        target: &'a ComplexMatrix,
    },
}

impl Target<'_> {
    fn target_norm(&self) -> f64 {
        match self {
            Target::Pure { target, .. } => target.norm(),
            Target::Mixed { target, .. } => target.norm(),
        }
    }

    fn residual(&self, a: &ComplexMatrix) -> Vec<Complex64> {
        match self {
            Target::Pure { source, target } => (a * *source - *target).iter().copied().collect(),
            Target::Mixed { source, target } => (a * *source * a.adjoint() - *target).iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LocalFit {
    pub factors: Vec<ComplexMatrix>,
    /// `‖residual‖ / ‖target‖`.
    pub residual: f64,
}

fn kron_all(factors: &[ComplexMatrix]) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(1, 1);
    for f in factors {
        acc = acc.kronecker(f);
    }
    acc
}

fn split_real(z: &[Complex64]) -> DVector<f64> {
    DVector::from_iterator(2 * z.len(), z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)))
}

fn jacobian(factors: &[ComplexMatrix], target: &Target) -> DMatrix<f64> {
    let a = kron_all(factors);
    let helper = match target {
        Target::Mixed { source, .. } => Some(*source * a.adjoint()),
        Target::Pure { .. } => None,
    };
    let n_params: usize = factors.iter().map(|f| 2 * f.len()).sum();
    let rows = 2 * match target {
        Target::Pure { target, .. } => target.len(),
        Target::Mixed { target, .. } => target.len(),
    };
    let mut jac = DMatrix::<f64>::zeros(rows, n_params);
    let mut col = 0;
    for k in 0..factors.len() {
        let left = kron_all(&factors[..k]);
        let right = kron_all(&factors[k + 1..]);
        let d = factors[k].nrows();
        // parameters are laid out as all real parts, then all imaginary parts, per factor
        let block = d * d;
        for q in 0..d {
            for p in 0..d {
                let mut e = ComplexMatrix::zeros(d, d);
                e[(p, q)] = Complex64::new(1.0, 0.0);
                let da = left.kronecker(&e).kronecker(&right);
                let (re_col, im_col): (Vec<Complex64>, Vec<Complex64>) = match (target, &helper) {
                    (Target::Pure { source, .. }, _) => {
                        let v = &da * *source;
                        let i_v = v.map(|z| z * Complex64::i());
                        (v.iter().copied().collect(), i_v.iter().copied().collect())
                    }
                    (Target::Mixed { .. }, Some(g)) => {
                        let x = &da * g;
                        let xa = x.adjoint();
                        let re = &x + &xa;
                        let im = (&x - &xa) * Complex64::i();
                        (re.iter().copied().collect(), im.iter().copied().collect())
                    }
                    (Target::Mixed { .. }, None) => unreachable!(),
                };
                let idx = col + q * d + p;
                jac.set_column(idx, &split_real(&re_col));
                jac.set_column(idx + block, &split_real(&im_col));
            }
        }
        col += 2 * block;
    }
    jac
}

fn apply_step(factors: &[ComplexMatrix], step: &DVector<f64>) -> Vec<ComplexMatrix> {
    let mut col = 0;
    factors
        .iter()
        .map(|f| {
            let block = f.len();
            let out = ComplexMatrix::from_fn(f.nrows(), f.ncols(), |p, q| {
                let i = col + q * f.nrows() + p;
                f[(p, q)] + Complex64::new(step[i], step[i + block])
            });
            col += 2 * block;
            out
        })
        .collect()
}

/// Equalizes factor norms without changing their Kronecker product.
fn rebalance(factors: &mut [ComplexMatrix]) {
    let norms: Vec<f64> = factors.iter().map(|f| f.norm()).collect();
    if norms.iter().any(|&n| n == 0.0 || !n.is_finite()) {
        return;
    }
    let mean = (norms.iter().map(|n| n.ln()).sum::<f64>() / norms.len() as f64).exp();
    for (f, n) in factors.iter_mut().zip(norms) {
        *f *= Complex64::new(mean / n, 0.0);
    }
}

fn sum_sq(r: &[Complex64]) -> f64 {
    r.iter().map(|z| z.norm_sqr()).sum()
}

/// Levenberg–Marquardt from one starting point.
pub(crate) fn fit_from(start: Vec<ComplexMatrix>, target: &Target) -> LocalFit {
    let scale = target.target_norm().max(f64::MIN_POSITIVE);
    let mut factors = start;
    rebalance(&mut factors);
    let mut cost = sum_sq(&target.residual(&kron_all(&factors)));
    let mut mu: Option<f64> = None;
    for _ in 0..MAX_ITER {
        if cost.sqrt() / scale < FIT_TOL {
            break;
        }
        let jac = jacobian(&factors, target);
        let r = split_real(&target.residual(&kron_all(&factors)));
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * r;
        let damping = *mu.get_or_insert_with(|| 1e-3 * jtj.diagonal().max().max(1e-12));
        let mut lambda = damping;
        let mut improved = false;
        while lambda < 1e16 * damping.max(1.0) {
            let mut h = jtj.clone();
            for i in 0..h.nrows() {
                h[(i, i)] += lambda;
            }
            if let Some(ch) = h.cholesky() {
                let step = -ch.solve(&grad);
                let mut trial = apply_step(&factors, &step);
                let trial_cost = sum_sq(&target.residual(&kron_all(&trial)));
                if trial_cost.is_finite() && trial_cost < cost {
                    rebalance(&mut trial);
                    factors = trial;
                    cost = trial_cost;
                    mu = Some((lambda / 3.0).max(1e-15));
                    improved = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    LocalFit {
        factors,
        residual: cost.sqrt() / scale,
    }
}

/// Runs [`fit_from`] over the given starts followed by `random_starts` seeded
/// draws, stopping at the first fit below `accept`.
pub(crate) fn fit_multistart(
    shape: &SystemShape,
    target: &Target,
    starts: Vec<Vec<ComplexMatrix>>,
    random_starts: usize,
    seed: u64,
    accept: f64,
) -> Option<LocalFit> {
    let mut best: Option<LocalFit> = None;
    let mut consider = |fit: LocalFit| -> bool {
        let done = fit.residual < accept;
        if best.as_ref().is_none_or(|b| fit.residual < b.residual) {
            best = Some(fit);
        }
        done
    };
    for s in starts {
        if consider(fit_from(s, target)) {
            return best;
        }
    }
    for i in 0..random_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5851_f42d_4c95_7f2d).wrapping_mul(i as u64 + 1));
        let start = shape.dims().iter().map(|&d| well_conditioned_factor(&mut rng, d)).collect();
        if consider(fit_from(start, target)) {
            return best;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{random_ilo, random_pure};

    #[test]
    fn jacobian_matches_finite_differences() {
        let shape = SystemShape::qubits(2).unwrap();
        let w = random_ilo(&shape, 3);
        let rho = {
            let psi = random_pure(&shape, 4);
            psi.density()
        };
        let target = ComplexMatrix::identity(4, 4);
        let t = Target::Mixed {
            source: &rho,
            target: &target,
        };
        let factors = w.factors().to_vec();
        let jac = jacobian(&factors, &t);
        let base = split_real(&t.residual(&kron_all(&factors)));
        let h = 1e-7;
        for j in 0..jac.ncols() {
            let mut step = DVector::zeros(jac.ncols());
            step[j] = h;
            let moved = split_real(&t.residual(&kron_all(&apply_step(&factors, &step))));
            let fd = (moved - &base) / h;
            assert!((fd - jac.column(j)).norm() < 1e-5, "column {j}");
        }
    }

    #[test]
    fn recovers_a_random_local_map_on_a_pure_state() {
        let shape = SystemShape::qubits(3).unwrap();
        let psi = random_pure(&shape, 11);
        let w = random_ilo(&shape, 12);
        let phi = w.kron() * psi.amplitudes();
        let t = Target::Pure {
            source: psi.amplitudes(),
            target: &phi,
        };
        let fit = fit_multistart(&shape, &t, vec![], 8, 1, 1e-12).unwrap();
        assert!(fit.residual < 1e-12, "residual {}", fit.residual);
    }
}
