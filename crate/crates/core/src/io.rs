//! JSON state files and verdict reports.
//!
//! Complex numbers are `[re, im]` pairs. Floats are written with 17
//! significant digits so a parse of the output reproduces every bit.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::error::Error;
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::oracle::WitnessCheck;
use crate::shape::SystemShape;
use crate::state::{MixedState, PureState, StateRecord};
use crate::tensor_factor::FactorSet;
use crate::verdict::{Outcome, Verdict};

pub const FORMAT_VERSION: u32 = 1;
/// Pure amplitudes within this distance of unit norm are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid state: {0}")]
    InvalidState(#[from] Error),
}

impl FormatError {
    /// Exit codes above the verdict trichotomy; 64 is left for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            FormatError::Schema(_) => 65,
            FormatError::Io { .. } => 66,
            FormatError::Dimension(_) => 67,
            FormatError::InvalidState(_) => 68,
        }
    }
}

pub type FormatResult<T> = std::result::Result<T, FormatError>;

/// A float that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.16e}", self.0)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(self.to_string())
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Num)
    }
}

type Pair = [Num; 2];

fn pair(z: Complex64) -> Pair {
    [Num(z.re), Num(z.im)]
}

fn complex(p: &Pair) -> Complex64 {
    Complex64::new(p[0].0, p[1].0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Pure,
    Mixed,
    /// An explicit operator on the composite space; not a state.
    Matrix,
}

/// On-disk layout of a state (or operator) file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub version: u32,
    #[serde(rename = "type")]
    pub kind: FileKind,
    pub dims: Vec<usize>,
    pub data: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Parsed content of a [`StateFile`].
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    State(StateRecord),
    Matrix { shape: SystemShape, matrix: ComplexMatrix },
}

impl StateFile {
    pub fn from_state(state: &StateRecord, label: Option<String>) -> Self {
        let (kind, data) = match state {
            StateRecord::Pure(p) => (FileKind::Pure, p.amplitudes().iter().map(|&z| pair(z)).collect()),
            StateRecord::Mixed(m) => (FileKind::Mixed, row_major(m.rho())),
        };
        Self {
            version: FORMAT_VERSION,
            kind,
            dims: state.shape().dims().to_vec(),
            data,
            label,
        }
    }

    pub fn from_matrix(shape: &SystemShape, matrix: &ComplexMatrix, label: Option<String>) -> Self {
        Self {
            version: FORMAT_VERSION,
            kind: FileKind::Matrix,
            dims: shape.dims().to_vec(),
            data: row_major(matrix),
            label,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state files serialize") + "\n"
    }

    pub fn load(&self) -> FormatResult<Loaded> {
        if self.version != FORMAT_VERSION {
            return Err(FormatError::Schema(format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        let shape = SystemShape::new(self.dims.clone()).map_err(|e| FormatError::Schema(e.to_string()))?;
        let n = shape.total();
        let expected = match self.kind {
            FileKind::Pure => n,
            FileKind::Mixed | FileKind::Matrix => n * n,
        };
        if self.data.len() != expected {
            return Err(FormatError::Dimension(format!(
                "{} file with dims {:?} needs {expected} entries, found {}",
                kind_name(self.kind),
                self.dims,
                self.data.len()
            )));
        }
        let values: Vec<Complex64> = self.data.iter().map(complex).collect();
        Ok(match self.kind {
            FileKind::Pure => {
                let amps = ComplexVector::from_vec(values);
                let norm = amps.norm();
                if !norm.is_finite() || (norm - 1.0).abs() > RENORMALIZE_TOL {
                    return Err(FormatError::InvalidState(Error::InvalidPureState(format!(
                        "norm {norm} is not within {RENORMALIZE_TOL:e} of 1"
                    ))));
                }
                // already-normalized data is kept bit for bit
                let state = match PureState::new(shape.clone(), amps.clone()) {
                    Ok(p) => p,
                    Err(_) => PureState::normalized(shape, amps)?,
                };
                Loaded::State(StateRecord::Pure(state))
            }
            FileKind::Mixed => {
                let rho = ComplexMatrix::from_row_slice(n, n, &values);
                Loaded::State(StateRecord::Mixed(MixedState::new(shape, rho)?))
            }
            FileKind::Matrix => {
                let matrix = ComplexMatrix::from_row_slice(n, n, &values);
                if !matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    return Err(FormatError::InvalidState(Error::NonFinite));
                }
                Loaded::Matrix { shape, matrix }
            }
        })
    }
}

fn kind_name(kind: FileKind) -> &'static str {
    match kind {
        FileKind::Pure => "pure",
        FileKind::Mixed => "mixed",
        FileKind::Matrix => "matrix",
    }
}

fn row_major(m: &ComplexMatrix) -> Vec<Pair> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| pair(m[(i, j)]))
        .collect()
}

fn schema(e: serde_json::Error) -> FormatError {
    FormatError::Schema(e.to_string())
}

fn read(path: &Path) -> FormatResult<String> {
    std::fs::read_to_string(path).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn parse_file(text: &str) -> FormatResult<Loaded> {
    serde_json::from_str::<StateFile>(text).map_err(schema)?.load()
}

/// Parses a pure or mixed state; operator files are rejected.
pub fn parse_state(text: &str) -> FormatResult<StateRecord> {
    match parse_file(text)? {
        Loaded::State(s) => Ok(s),
        Loaded::Matrix { .. } => Err(FormatError::Schema("expected a pure or mixed state, found a matrix".into())),
    }
}

pub fn read_file(path: &Path) -> FormatResult<Loaded> {
    parse_file(&read(path)?)
}

pub fn read_state(path: &Path) -> FormatResult<StateRecord> {
    parse_state(&read(path)?)
}

pub fn state_to_json(state: &StateRecord, label: Option<String>) -> String {
    StateFile::from_state(state, label).to_json()
}

/// Witness factors as written in reports, each row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub dims: Vec<usize>,
    pub scale: Pair,
    pub factors: Vec<Vec<Pair>>,
}

impl WitnessFile {
    pub fn from_factors(w: &FactorSet) -> Self {
        Self {
            dims: w.factors().iter().map(|f| f.nrows()).collect(),
            scale: pair(w.scale()),
            factors: w.factors().iter().map(row_major).collect(),
        }
    }

    pub fn to_factors(&self) -> FormatResult<FactorSet> {
        if self.dims.len() != self.factors.len() {
            return Err(FormatError::Dimension(format!(
                "{} dims but {} factors",
                self.dims.len(),
                self.factors.len()
            )));
        }
        let factors = self
            .dims
            .iter()
            .zip(&self.factors)
            .enumerate()
            .map(|(k, (&d, data))| {
                if data.len() != d * d {
                    return Err(FormatError::Dimension(format!(
                        "factor {} needs {} entries, found {}",
                        k + 1,
                        d * d,
                        data.len()
                    )));
                }
                let values: Vec<Complex64> = data.iter().map(complex).collect();
                Ok(ComplexMatrix::from_row_slice(d, d, &values))
            })
            .collect::<FormatResult<Vec<_>>>()?;
        Ok(FactorSet::new(factors, complex(&self.scale))?)
    }
}

/// Parses a witness file: either a bare witness object or a verdict report
/// carrying one.
pub fn parse_witness(text: &str) -> FormatResult<FactorSet> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(schema)?;
    let inner = match value.get("witness") {
        Some(serde_json::Value::Null) => return Err(FormatError::Schema("report carries no witness".into())),
        Some(w) => w.clone(),
        None => value,
    };
    serde_json::from_value::<WitnessFile>(inner).map_err(schema)?.to_factors()
}

pub fn read_witness(path: &Path) -> FormatResult<FactorSet> {
    parse_witness(&read(path)?)
}

/// Machine-readable form of a [`Verdict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub outcome: Outcome,
    pub reason: String,
    pub residuals: BTreeMap<String, Num>,
    pub witness: Option<WitnessFile>,
    pub tool_version: String,
    pub seed: u64,
}

impl VerdictReport {
    /// Non-finite residuals (searches that never produced a value) are dropped.
    pub fn new(verdict: &Verdict, seed: u64) -> Self {
        Self {
            outcome: verdict.outcome,
            reason: verdict.reason.clone(),
            residuals: verdict
                .residuals
                .iter()
                .filter(|(_, v)| v.is_finite())
                .map(|(k, &v)| (k.clone(), Num(v)))
                .collect(),
            witness: verdict.witness.as_ref().map(WitnessFile::from_factors),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn parse(text: &str) -> FormatResult<Self> {
        let report: Self = serde_json::from_str(text).map_err(schema)?;
        if report.witness.is_some() != (report.outcome == Outcome::Equivalent) {
            return Err(FormatError::Schema("witness must be present exactly when outcome is equivalent".into()));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheckReport {
    pub passed: bool,
    pub relative_residual: Num,
    pub tolerance: Num,
}

impl WitnessCheckReport {
    pub fn new(check: &WitnessCheck) -> Self {
        Self {
            passed: check.passed,
            relative_residual: Num(check.relative_residual),
            tolerance: Num(crate::oracle::WITNESS_TOL),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}
