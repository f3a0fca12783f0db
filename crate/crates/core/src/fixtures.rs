//! Worked example states: Bell-diagonal pairs, the two X-shaped three-qubit
//! families, and the two-term pure pair with mismatched local ranks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::shape::SystemShape;
use crate::state::{MixedState, PureState, StateRecord};

const EXCLUSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum FixtureParams {
    /// Bell-diagonal weights for the two states.
    Example1 { lambda: [f64; 4], mu: [f64; 4] },
    /// Diagonal weights of the X-shaped pair; the second state uses the Greek set.
    Example2 {
        a: f64,
        b: f64,
        c: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    /// Shared weights of the locally rotated pair.
    Example3 { a: f64, b: f64, c: f64 },
    Example4,
}

impl FixtureParams {
    pub fn example_id(&self) -> u8 {
        match self {
            FixtureParams::Example1 { .. } => 1,
            FixtureParams::Example2 { .. } => 2,
            FixtureParams::Example3 { .. } => 3,
            FixtureParams::Example4 => 4,
        }
    }

    /// Defaults for each example, overridden by `key=value` pairs.
    ///
    /// Keys: `l1..l4`, `m1..m4` (example 1); `a, b, c, alpha, beta, gamma`
    /// (example 2); `a, b, c` (example 3).
    pub fn from_pairs(example: u8, pairs: &[(String, f64)]) -> Result<Self> {
        let mut params = match example {
            1 => FixtureParams::Example1 {
                lambda: [0.4, 0.3, 0.2, 0.1],
                mu: [0.4, 0.3, 0.2, 0.1],
            },
            2 => FixtureParams::Example2 {
                a: 0.3,
                b: 0.4,
                c: 0.5,
                alpha: 0.6,
                beta: 1.6,
                gamma: 4.0,
            },
            3 => FixtureParams::Example3 { a: 0.3, b: 5.0, c: 7.0 },
            4 => FixtureParams::Example4,
            other => return Err(Error::FixtureParams(format!("unknown example {other}"))),
        };
        for (key, value) in pairs {
            let value = *value;
            let slot: Option<&mut f64> = match (&mut params, key.as_str()) {
                (FixtureParams::Example1 { lambda, .. }, k) if k.len() == 2 && k.starts_with('l') => {
                    index_of(k).and_then(|i| lambda.get_mut(i))
                }
                (FixtureParams::Example1 { mu, .. }, k) if k.len() == 2 && k.starts_with('m') => {
                    index_of(k).and_then(|i| mu.get_mut(i))
                }
                (FixtureParams::Example2 { a, .. }, "a") | (FixtureParams::Example3 { a, .. }, "a") => Some(a),
                (FixtureParams::Example2 { b, .. }, "b") | (FixtureParams::Example3 { b, .. }, "b") => Some(b),
                (FixtureParams::Example2 { c, .. }, "c") | (FixtureParams::Example3 { c, .. }, "c") => Some(c),
                (FixtureParams::Example2 { alpha, .. }, "alpha") => Some(alpha),
                (FixtureParams::Example2 { beta, .. }, "beta") => Some(beta),
                (FixtureParams::Example2 { gamma, .. }, "gamma") => Some(gamma),
                _ => None,
            };
            match slot {
                Some(s) => *s = value,
                None => {
                    return Err(Error::FixtureParams(format!(
                        "parameter '{key}' does not apply to example {example}"
                    )))
                }
            }
        }
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FixtureParams::Example1 { lambda, mu } => {
                for (name, w) in [("lambda", lambda), ("mu", mu)] {
                    if w.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                        return Err(Error::FixtureParams(format!("{name} weights must be nonnegative")));
                    }
                    let total: f64 = w.iter().sum();
                    if (total - 1.0).abs() > 1e-12 {
                        return Err(Error::FixtureParams(format!("{name} weights sum to {total}, not 1")));
                    }
                }
                Ok(())
            }
            FixtureParams::Example2 {
                a,
                b,
                c,
                alpha,
                beta,
                gamma,
            } => {
                let vals = [*a, *b, *c, *alpha, *beta, *gamma];
                positive(&vals)?;
                excluded(&vals, &[1.0])?;
                distinct(&vals)
            }
            FixtureParams::Example3 { a, b, c } => {
                let vals = [*a, *b, *c];
                positive(&vals)?;
                excluded(&vals, &[1.0, 2.0 / 3.0, 1.5, 2.0, 0.5])?;
                distinct(&vals)
            }
            FixtureParams::Example4 => Ok(()),
        }
    }
}

fn index_of(key: &str) -> Option<usize> {
    key[1..].parse::<usize>().ok().filter(|&i| (1..=4).contains(&i)).map(|i| i - 1)
}

fn positive(vals: &[f64]) -> Result<()> {
    if vals.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::FixtureParams("parameters must be positive and finite".into()));
    }
    Ok(())
}

fn excluded(vals: &[f64], forbidden: &[f64]) -> Result<()> {
    for &v in vals {
        if let Some(f) = forbidden.iter().find(|&&f| (v - f).abs() <= EXCLUSION_TOL) {
            return Err(Error::FixtureParams(format!("parameter value {f} is excluded")));
        }
    }
    Ok(())
}

fn distinct(vals: &[f64]) -> Result<()> {
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            if (vals[i] - vals[j]).abs() <= EXCLUSION_TOL {
                return Err(Error::FixtureParams(format!(
                    "parameters must take different values (got {} twice)",
                    vals[i]
                )));
            }
        }
    }
    Ok(())
}

fn r(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(|00⟩+|11⟩, |00⟩−|11⟩, |01⟩+|10⟩, |01⟩−|10⟩) / √2`.
pub fn bell_basis() -> [ComplexVector; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: [f64; 4]| ComplexVector::from_iterator(4, a.iter().map(|&x| r(x * h)));
    [
        v([1.0, 0.0, 0.0, 1.0]),
        v([1.0, 0.0, 0.0, -1.0]),
        v([0.0, 1.0, 1.0, 0.0]),
        v([0.0, 1.0, -1.0, 0.0]),
    ]
}

fn bell_diagonal(weights: &[f64; 4]) -> ComplexMatrix {
    bell_basis()
        .iter()
        .zip(weights)
        .fold(ComplexMatrix::zeros(4, 4), |acc, (v, &w)| acc + v * v.adjoint() * r(w))
}

/// X-shaped matrix: corner block `[[1, corner], [corner, 1]]` on |000⟩,|111⟩ and
/// the listed diagonal on |001⟩..|110⟩, divided by `norm`.
fn x_shaped(corner: f64, diag: [f64; 6], norm: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(8, 8);
    m[(0, 0)] = r(1.0);
    m[(7, 7)] = r(1.0);
    m[(0, 7)] = r(corner);
    m[(7, 0)] = r(corner);
    for (k, &d) in diag.iter().enumerate() {
        m[(k + 1, k + 1)] = r(d);
    }
    m.unscale(norm)
}

fn example3_rotated(a: f64, b: f64, c: f64, k: f64) -> ComplexMatrix {
    #[rustfmt::skip]
    let rows: [[f64; 8]; 8] = [
        [1.0 + b, 0.0, 1.0 - b, 0.0, 0.0, -0.5, 0.0, 0.5],
        [0.0, a + c, 0.0, a - c, 0.0, 0.0, 0.0, 0.0],
        [1.0 - b, 0.0, 1.0 + b, 0.0, 0.0, -0.5, 0.0, 0.5],
        [0.0, a - c, 0.0, a + c, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0 / c + 1.0 / a, 0.0, -1.0 / a + 1.0 / c, 0.0],
        [-0.5, 0.0, -0.5, 0.0, 0.0, 1.0 / b + 1.0, 0.0, -1.0 + 1.0 / b],
        [0.0, 0.0, 0.0, 0.0, -1.0 / a + 1.0 / c, 0.0, 1.0 / c + 1.0 / a, 0.0],
        [0.5, 0.0, 0.5, 0.0, 0.0, -1.0 + 1.0 / b, 0.0, 1.0 + 1.0 / b],
    ];
    ComplexMatrix::from_fn(8, 8, |i, j| r(rows[i][j] / (2.0 * k)))
}

/// Builds the pair of states for one example.
pub fn fixtures(params: &FixtureParams) -> Result<(StateRecord, StateRecord)> {
    params.validate()?;
    let mixed = |shape: SystemShape, m: ComplexMatrix| MixedState::new(shape, m).map(StateRecord::Mixed);
    match *params {
        FixtureParams::Example1 { lambda, mu } => {
            let shape = SystemShape::qubits(2)?;
            Ok((
                mixed(shape.clone(), bell_diagonal(&lambda))?,
                mixed(shape, bell_diagonal(&mu))?,
            ))
        }
        FixtureParams::Example2 {
            a,
            b,
            c,
            alpha,
            beta,
            gamma,
        } => {
            let shape = SystemShape::qubits(3)?;
            let k = 2.0 + a + b + c + 1.0 / a + 1.0 / b + 1.0 / c;
            let m = 2.0 + alpha + beta + gamma + 1.0 / alpha + 1.0 / beta + 1.0 / gamma;
            let rho1 = x_shaped(1.0, [a, b, c, 1.0 / c, 1.0 / b, 1.0 / a], k);
            let rho2 = x_shaped(1.0, [alpha, beta, gamma, 1.0 / gamma, 1.0 / beta, 1.0 / alpha], m);
            Ok((mixed(shape.clone(), rho1)?, mixed(shape, rho2)?))
        }
        FixtureParams::Example3 { a, b, c } => {
            let shape = SystemShape::qubits(3)?;
            // unit trace requires 2 + Σ; the (0,7) corner contributes only to coherence
            let k = 2.0 + a + b + c + 1.0 / a + 1.0 / b + 1.0 / c;
            let rho1 = x_shaped(0.5, [a, b, c, 1.0 / c, 1.0 / b, 1.0 / a], k);
            Ok((mixed(shape.clone(), rho1)?, mixed(shape, example3_rotated(a, b, c, k))?))
        }
        FixtureParams::Example4 => {
            let shape = SystemShape::qubits(3)?;
            let psi1 = PureState::from_terms(shape.clone(), &[(0b001, r(1.0)), (0b010, r(1.0))])?;
            let psi2 = PureState::from_terms(shape, &[(0b101, r(1.0)), (0b011, r(1.0))])?;
            Ok((StateRecord::Pure(psi1), StateRecord::Pure(psi2)))
        }
    }
}
