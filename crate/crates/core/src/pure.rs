//! SLOCC equivalence of pure states through coefficient matrices.
//!
//! For a bipartition `S | S̄` the amplitudes form a matrix `M(ψ)` with rows
//! indexed by `S`. A local map `C_S ⊗ C_S̄` acts as `M ↦ C_S · M · C_S̄ᵀ`, so
//! ranks over every cut are invariants, and a witness can be searched for as
//! a pair of connectors `L = X₁B₁X₂†`, `R = Y₂†B₂Y₁` built from the two SVDs.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gauge::{self, GaugeOptions, Side, ACCEPT_OBJECTIVE};
use crate::linalg::{self, ComplexMatrix};
use crate::local::{self, Target};
use crate::oracle::certify_pure;
use crate::shape::SystemShape;
use crate::state::PureState;
use crate::tensor_factor::{self, FactorSet};
use crate::verdict::{certificate_residuals, CheckOptions, PureVerdict, Verdict};

/// Largest party count for which every bipartition enters the signature.
pub const FULL_SIGNATURE_PARTIES: usize = 6;
const LOCAL_ACCEPT: f64 = 1e-10;

fn check_subset(shape: &SystemShape, row_parties: &[usize]) -> Result<Vec<usize>> {
    let k = shape.parties();
    let mut s = row_parties.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.is_empty() || s.len() >= k || s.len() != row_parties.len() {
        return Err(Error::InvalidBipartition { parties: k });
    }
    for &p in &s {
        shape.check_party(p)?;
    }
    Ok(s)
}

fn complement(parties: usize, s: &[usize]) -> Vec<usize> {
    (0..parties).filter(|p| !s.contains(p)).collect()
}

/// Amplitudes arranged with rows indexed by `row_parties` (ascending) and
/// columns by the remaining parties (ascending).
pub fn coefficient_matrix(psi: &PureState, row_parties: &[usize]) -> Result<ComplexMatrix> {
    let shape = psi.shape();
    let s = check_subset(shape, row_parties)?;
    let c = complement(shape.parties(), &s);
    let rows = shape.subshape(&s)?;
    let cols = shape.subshape(&c)?;
    let mut m = ComplexMatrix::zeros(rows.total(), cols.total());
    for idx in 0..shape.total() {
        let digits = shape.digits(idx);
        let r: Vec<usize> = s.iter().map(|&p| digits[p]).collect();
        let q: Vec<usize> = c.iter().map(|&p| digits[p]).collect();
        m[(rows.compose(&r), cols.compose(&q))] = psi.amplitudes()[idx];
    }
    Ok(m)
}

/// Numerical ranks of coefficient matrices keyed by row-party subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankSignature {
    pub entries: BTreeMap<Vec<usize>, usize>,
}

impl RankSignature {
    /// Cuts present in both signatures whose ranks differ: `(subset, self, other)`.
    pub fn mismatches(&self, other: &Self) -> Vec<(Vec<usize>, usize, usize)> {
        self.entries
            .iter()
            .filter_map(|(s, &a)| match other.entries.get(s) {
                Some(&b) if a != b => Some((s.clone(), a, b)),
                _ => None,
            })
            .collect()
    }

    /// Ranks of the single-party cuts in party order.
    pub fn single_party(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|(s, _)| s.len() == 1)
            .map(|(_, &r)| r)
            .collect()
    }
}

fn signature_cuts(parties: usize) -> Vec<Vec<usize>> {
    if parties < 2 {
        return vec![];
    }
    if parties <= FULL_SIGNATURE_PARTIES {
        (1..(1usize << parties) - 1)
            .map(|mask| (0..parties).filter(|p| mask >> p & 1 == 1).collect())
            .collect()
    } else {
        (0..parties)
            .flat_map(|p| [vec![p], complement(parties, &[p])])
            .collect()
    }
}

pub fn rank_signature(psi: &PureState) -> RankSignature {
    let entries = signature_cuts(psi.shape().parties())
        .into_iter()
        .map(|s| {
            let m = coefficient_matrix(psi, &s).expect("generated cuts are valid");
            (s, linalg::numerical_rank(&m))
        })
        .collect();
    RankSignature { entries }
}

fn certified_verdict(phi: &PureState, psi: &PureState, w: FactorSet, reason: &str, extra: &[(&str, f64)]) -> Option<Verdict> {
    let cert = certify_pure(phi, psi, &w).ok().filter(|c| c.passed)?;
    let mut res = certificate_residuals(&cert);
    for &(k, v) in extra {
        res.insert(k.to_string(), v);
    }
    Some(Verdict::equivalent(w, reason, res))
}

fn rank_mismatch_verdict(cut: &[usize], a: usize, b: usize) -> Verdict {
    let parties: Vec<String> = cut.iter().map(|p| (p + 1).to_string()).collect();
    let mut res = BTreeMap::new();
    res.insert("rank_phi".to_string(), a as f64);
    res.insert("rank_psi".to_string(), b as f64);
    Verdict::inequivalent(
        format!("rank signature mismatch on cut {{{}}}: {a} vs {b}", parties.join(",")),
        res,
    )
}

/// Single-party case: every pair of unit vectors is related by a unitary.
fn check_single(phi: &PureState, psi: &PureState) -> Result<PureVerdict> {
    let to_col = |p: &PureState| ComplexMatrix::from_column_slice(p.shape().total(), 1, p.amplitudes().as_slice());
    let u_phi = linalg::complete_unitary(&to_col(phi));
    let u_psi = linalg::complete_unitary(&to_col(psi));
    let w = FactorSet::new(vec![u_phi * u_psi.adjoint()], Complex64::new(1.0, 0.0))?;
    Ok(certified_verdict(phi, psi, w, "single party: unitary completion", &[])
        .unwrap_or_else(|| Verdict::inconclusive("single-party witness failed verification", BTreeMap::new())))
}

/// Two-party decision: equivalent exactly when the Schmidt ranks agree.
pub fn check_bipartite(phi: &PureState, psi: &PureState) -> Result<PureVerdict> {
    if phi.shape() != psi.shape() {
        return Err(Error::Shape(format!("{} vs {}", phi.shape(), psi.shape())));
    }
    if phi.shape().parties() != 2 {
        return Err(Error::PartyCount {
            expected: 2,
            actual: phi.shape().parties(),
        });
    }
    let m_phi = coefficient_matrix(phi, &[0])?;
    let m_psi = coefficient_matrix(psi, &[0])?;
    let (a, b) = (linalg::numerical_rank(&m_phi), linalg::numerical_rank(&m_psi));
    if a != b {
        return Ok(rank_mismatch_verdict(&[0], a, b));
    }
    let f = svd_frame(&m_phi, &m_psi, a);
    let d1: Vec<Complex64> = (0..f.x1.ncols())
        .map(|k| Complex64::new(if k < a { f.ratio[k] } else { 1.0 }, 0.0))
        .collect();
    let d2: Vec<Complex64> = (0..f.y1.ncols())
        .map(|k| Complex64::new(if k < a { f.ratio[k] } else { 1.0 }, 0.0))
        .collect();
    let left = f.left_side(phi.shape(), &[0]).connector(&d1);
    let right = f.right_side(phi.shape(), &[1]).connector(&d2);
    let w = FactorSet::new(vec![left, right.transpose()], Complex64::new(1.0, 0.0))?;
    Ok(
        certified_verdict(phi, psi, w, &format!("equal Schmidt rank {a}"), &[("schmidt_rank", a as f64)])
            .unwrap_or_else(|| {
                Verdict::inconclusive("Schmidt ranks agree but the constructed witness failed verification", BTreeMap::new())
            }),
    )
}

/// SVD data for one cut: `M(φ) = X₁Λ₁V₁†`, `M(ψ) = X₂Λ₂V₂†` with full unitaries.
struct SvdFrame {
    x1: ComplexMatrix,
    x2: ComplexMatrix,
    y1: ComplexMatrix,
    y2: ComplexMatrix,
    /// `√(λ_k/μ_k)` on the common support.
    ratio: Vec<f64>,
}

fn svd_frame(m_phi: &ComplexMatrix, m_psi: &ComplexMatrix, rank: usize) -> SvdFrame {
    let s1 = linalg::svd(m_phi);
    let s2 = linalg::svd(m_psi);
    let ratio = (0..rank)
        .map(|k| (s1.singular_values[k] / s2.singular_values[k]).sqrt())
        .collect();
    SvdFrame {
        x1: s1.full_u(),
        x2: s2.full_u(),
        y1: s1.full_v(),
        y2: s2.full_v(),
        ratio,
    }
}

impl SvdFrame {
    /// `L = X₁·D·X₂†` over the row parties.
    fn left_side(&self, shape: &SystemShape, rows: &[usize]) -> Side {
        Side::new(self.x1.clone(), self.x2.clone(), shape.subshape(rows).unwrap())
    }

    /// `R = Y₂†·D·Y₁` over the column parties, where `Y = V†`, i.e. `R = V₂·D·V₁†`.
    fn right_side(&self, shape: &SystemShape, cols: &[usize]) -> Side {
        Side::new(self.y2.clone(), self.y1.clone(), shape.subshape(cols).unwrap())
    }
}

/// The two-sided diagonal gauge for one cut.
struct CutProblem {
    rows: Vec<usize>,
    cols: Vec<usize>,
    left: Side,
    right: Side,
    ratio: Vec<f64>,
}

impl CutProblem {
    fn rank(&self) -> usize {
        self.ratio.len()
    }

    /// Support entries `√(λ/μ)·e^{±(g + iθ)}` from `(θ_k, g_k)`, `k ≥ 1`.
    fn support(&self, theta: &[f64], g: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let r = self.rank();
        let mut d1 = vec![Complex64::new(1.0, 0.0); self.left.p.ncols()];
        let mut d2 = vec![Complex64::new(1.0, 0.0); self.right.p.ncols()];
        for k in 0..r {
            let z = if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(g[k - 1], theta[k - 1])
            };
            d1[k] = self.ratio[k] * z.exp();
            d2[k] = self.ratio[k] * (-z).exp();
        }
        (d1, d2)
    }

    fn objective(&self, d1: &[Complex64], d2: &[Complex64]) -> f64 {
        self.left.defect(d1) + self.right.defect(d2)
    }

    /// Kernel entries from `θ` as `(log-magnitude, phase)` pairs, left then right.
    fn unpack(&self, theta: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let r = self.rank();
        let (support, kernel) = theta.split_at(2 * (r - 1));
        let (phases, logs) = support.split_at(r - 1);
        let (mut d1, mut d2) = self.support(phases, logs);
        let mut it = kernel.chunks(2);
        for d in [&mut d1, &mut d2] {
            for z in d.iter_mut().skip(r) {
                let c = it.next().expect("parameter vector covers the kernel");
                *z = Complex64::from_polar(c[0].exp(), c[1]);
            }
        }
        (d1, d2)
    }

    fn pack(&self, d1: &[Complex64], d2: &[Complex64]) -> Vec<f64> {
        let r = self.rank();
        let mut theta = vec![0.0; 2 * (r - 1)];
        for z in d1[r..].iter().chain(&d2[r..]) {
            theta.push(z.norm().max(1e-300).ln());
            theta.push(z.arg());
        }
        theta
    }

    fn witness(&self, shape: &SystemShape, d1: &[Complex64], d2: &[Complex64]) -> Option<FactorSet> {
        let l = self.left.connector(d1);
        let r = self.right.connector(d2);
        let lf = tensor_factor::peel(&l, self.left.shape.dims()).ok()?;
        let rf = tensor_factor::peel(&r, self.right.shape.dims()).ok()?;
        let mut factors = vec![ComplexMatrix::zeros(0, 0); shape.parties()];
        for (&p, f) in self.rows.iter().zip(lf) {
            factors[p] = f;
        }
        for (&p, f) in self.cols.iter().zip(rf) {
            factors[p] = f.transpose();
        }
        if factors.iter().any(|f| !linalg::all_finite(f)) {
            return None;
        }
        FactorSet::new(factors, Complex64::new(1.0, 0.0)).ok()
    }
}

fn default_cuts(parties: usize, all: bool) -> Vec<Vec<usize>> {
    if all {
        (1..(1usize << (parties - 1)))
            .map(|mask| {
                let mut s = vec![0];
                s.extend((1..parties).filter(|p| mask >> (p - 1) & 1 == 0));
                s
            })
            .filter(|s| s.len() < parties)
            .collect()
    } else {
        vec![(0..parties / 2).collect()]
    }
}

/// Decides `φ ∝ (C_1 ⊗ ... ⊗ C_K) ψ`. The witness maps `ψ` to `φ`.
pub fn check_pure_equivalence(phi: &PureState, psi: &PureState, opts: &CheckOptions) -> Result<PureVerdict> {
    if phi.shape() != psi.shape() {
        return Err(Error::Shape(format!("{} vs {}", phi.shape(), psi.shape())));
    }
    let shape = phi.shape().clone();
    let k = shape.parties();
    if k == 1 {
        return check_single(phi, psi);
    }
    let sig_phi = rank_signature(phi);
    let sig_psi = rank_signature(psi);
    if let Some((cut, a, b)) = sig_phi.mismatches(&sig_psi).into_iter().next() {
        return Ok(rank_mismatch_verdict(&cut, a, b));
    }
    if k == 2 {
        return check_bipartite(phi, psi);
    }

    let gauge_opts = GaugeOptions {
        seed: opts.seed,
        starts: opts.gauge_starts,
        ..GaugeOptions::default()
    };
    let mut best: Option<(f64, Option<FactorSet>)> = None;
    for rows in default_cuts(k, opts.all_cuts) {
        let cols = complement(k, &rows);
        let m_phi = coefficient_matrix(phi, &rows)?;
        let m_psi = coefficient_matrix(psi, &rows)?;
        let rank = linalg::numerical_rank(&m_phi);
        let frame = svd_frame(&m_phi, &m_psi, rank);
        let problem = CutProblem {
            left: frame.left_side(&shape, &rows),
            right: frame.right_side(&shape, &cols),
            ratio: frame.ratio.clone(),
            rows,
            cols,
        };

        // ratio completion of the kernel entries with the support ratios held fixed
        let zeros = vec![0.0; rank - 1];
        let (mut d1, mut d2) = problem.support(&zeros, &zeros);
        let free1: Vec<usize> = (rank..d1.len()).collect();
        let free2: Vec<usize> = (rank..d2.len()).collect();
        let mut objective = problem.left.complete(&mut d1, &free1) + problem.right.complete(&mut d2, &free2);

        if objective >= ACCEPT_OBJECTIVE {
            let x0 = problem.pack(&d1, &d2);
            let n_phase = rank - 1;
            let found = gauge::multistart(
                |theta| {
                    let (a, b) = problem.unpack(theta);
                    problem.objective(&a, &b)
                },
                &x0,
                &gauge_opts,
                |rng: &mut ChaCha8Rng, i| {
                    let support = 2 * n_phase;
                    if i < n_phase || (i >= support && (i - support) % 2 == 1) {
                        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
                    } else {
                        x0[i] + 0.5 * rng.sample::<f64, _>(StandardNormal)
                    }
                },
            );
            if found.f < objective {
                objective = found.f;
                (d1, d2) = problem.unpack(&found.x);
            }
        }

        let witness = problem.witness(&shape, &d1, &d2);
        if objective < ACCEPT_OBJECTIVE {
            if let Some(v) = witness.clone().and_then(|w| {
                certified_verdict(phi, psi, w, "diagonal gauge connectors certified in both directions", &[("objective", objective)])
            }) {
                return Ok(v);
            }
        }
        if best.as_ref().is_none_or(|(f, _)| objective < *f) {
            best = Some((objective, witness));
        }
    }
    let best_objective = best.as_ref().map_or(f64::INFINITY, |b| b.0);

    let mut starts = Vec::new();
    if let Some((_, Some(w))) = &best {
        let mut f = w.factors().to_vec();
        f[0] *= w.scale();
        starts.push(f);
    }
    starts.push(shape.dims().iter().map(|&d| linalg::identity(d)).collect());
    let target = Target::Pure {
        source: psi.amplitudes(),
        target: phi.amplitudes(),
    };
    let fit = local::fit_multistart(&shape, &target, starts, opts.local_starts, opts.seed, LOCAL_ACCEPT);
    let mut fit_residual = f64::INFINITY;
    if let Some(fit) = fit {
        fit_residual = fit.residual;
        if let Ok(w) = FactorSet::new(fit.factors, Complex64::new(1.0, 0.0)) {
            if let Some(v) = certified_verdict(
                phi,
                psi,
                w,
                "local factor fit certified in both directions",
                &[("objective", best_objective)],
            ) {
                return Ok(v);
            }
        }
    }
    let mut res = BTreeMap::new();
    res.insert("objective".to_string(), best_objective);
    res.insert("local_fit".to_string(), fit_residual);
    Ok(Verdict::inconclusive("no certified local witness found", res))
}
