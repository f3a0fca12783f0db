//! Diagonal gauge search for Kronecker-structured connectors.
//!
//! A connector has the form `P · diag(d) · Q†` for fixed unitary bases `P`
//! and `Q`. Entries of `d` tied to the support have fixed magnitudes and
//! free phases; kernel entries are free complex numbers. The search first
//! fills the kernel entries by alternating rank-one fits of the party
//! realignments, then runs a multi-start Nelder–Mead over phases and free
//! log-magnitudes.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, party_realignment, ComplexMatrix, ZERO};
use crate::shape::SystemShape;
use crate::spectral::SpectralData;

/// Search objective below which a connector counts as Kronecker structured.
pub const ACCEPT_OBJECTIVE: f64 = 1e-14;
/// Largest degeneracy cluster whose pairings are enumerated exhaustively.
pub const CLUSTER_PERMUTATION_LIMIT: usize = 4;
/// Cap on the number of eigenvector pairings tried.
pub const MAX_PAIRINGS: usize = 256;

const ALS_MAX_ITER: usize = 3000;
/// A Nelder–Mead start still above this after its checkpoint is abandoned.
const ABANDON_ABOVE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeOptions {
    pub seed: u64,
    pub starts: usize,
    /// Function evaluations per start.
    pub evals_per_start: usize,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            starts: 32,
            evals_per_start: 1500,
        }
    }
}

/// Diagonal gauge `d_k = magnitudes[k] · e^{i·phases[k]}` under a pairing of eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeCandidate {
    pub magnitudes: Vec<f64>,
    pub phases: Vec<f64>,
    /// `pairing[k]` is the eigenvector of the second state matched with eigenvector `k`
    /// of the first; `None` means the identity pairing.
    pub permutation: Option<Vec<usize>>,
    /// Number of leading entries whose magnitude is fixed by the spectra.
    pub support: usize,
}

impl GaugeCandidate {
    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.magnitudes
            .iter()
            .zip(&self.phases)
            .map(|(&m, &p)| Complex64::from_polar(m, p))
            .collect()
    }

    pub fn pairing(&self) -> Vec<usize> {
        self.permutation.clone().unwrap_or_else(|| (0..self.len()).collect())
    }

    fn set_entry(&mut self, k: usize, z: Complex64) {
        self.magnitudes[k] = z.norm();
        self.phases[k] = z.arg();
    }
}

/// Sorted-order scaling `√(λ_k/μ_k)` with kernel entries initialized to 1.
pub fn build_scaling(s1: &SpectralData, s2: &SpectralData) -> Result<GaugeCandidate> {
    scaling_for_pairing(s1, s2, &(0..s1.eigvals.len()).collect::<Vec<_>>())
}

pub fn scaling_for_pairing(s1: &SpectralData, s2: &SpectralData, pairing: &[usize]) -> Result<GaugeCandidate> {
    let n = s1.eigvals.len();
    if s2.eigvals.len() != n || pairing.len() != n {
        return Err(Error::Shape("spectra of different sizes".into()));
    }
    if s1.support_rank != s2.support_rank {
        return Err(Error::RankMismatch {
            left: s1.support_rank,
            right: s2.support_rank,
        });
    }
    let r = s1.support_rank;
    let mut magnitudes = vec![1.0; n];
    for k in 0..n {
        let j = pairing[k];
        if (k < r) != (j < r) {
            return Err(Error::Shape(format!("pairing sends {k} across the support boundary")));
        }
        if k < r {
            magnitudes[k] = (s1.eigvals[k] / s2.eigvals[j]).sqrt();
        }
    }
    let identity = pairing.iter().enumerate().all(|(k, &j)| k == j);
    Ok(GaugeCandidate {
        magnitudes,
        phases: vec![0.0; n],
        permutation: (!identity).then(|| pairing.to_vec()),
        support: r,
    })
}

/// `Σ_k d_k · x_k · y_{π(k)}†`.
pub fn connector(x: &ComplexMatrix, y: &ComplexMatrix, cand: &GaugeCandidate) -> ComplexMatrix {
    let mut xd = x.clone();
    for (k, z) in cand.diagonal().into_iter().enumerate() {
        let mut col = xd.column_mut(k);
        col *= z;
    }
    xd * permute_columns(y, &cand.pairing()).adjoint()
}

pub(crate) fn permute_columns(y: &ComplexMatrix, pairing: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_columns(&pairing.iter().map(|&j| y.column(j)).collect::<Vec<_>>())
}

/// Smooth Kronecker defect: per party, squared tail energy of the realignment
/// relative to `σ₁²`, summed. Bounds `Σ (σ₂/σ₁)²` from above.
pub fn kronecker_defect(a: &ComplexMatrix, shape: &SystemShape) -> f64 {
    if shape.parties() == 1 {
        return 0.0;
    }
    (0..shape.parties())
        .map(|p| {
            let r = party_realignment(a, shape, p).expect("shape checked by caller");
            let s = linalg::singular_values(&r);
            if s[0] == 0.0 {
                return f64::INFINITY;
            }
            s[1..].iter().map(|v| v * v).sum::<f64>() / (s[0] * s[0])
        })
        .sum()
}

/// One family of connectors `p · diag(d) · q†` over a fixed shape.
#[derive(Debug, Clone)]
pub(crate) struct Side {
    pub p: ComplexMatrix,
    pub q: ComplexMatrix,
    pub shape: SystemShape,
}

impl Side {
    pub fn new(p: ComplexMatrix, q: ComplexMatrix, shape: SystemShape) -> Self {
        Self { p, q, shape }
    }

    pub fn connector(&self, d: &[Complex64]) -> ComplexMatrix {
        let mut pd = self.p.clone();
        for (k, &z) in d.iter().enumerate() {
            let mut col = pd.column_mut(k);
            col *= z;
        }
        pd * self.q.adjoint()
    }

    pub fn defect(&self, d: &[Complex64]) -> f64 {
        kronecker_defect(&self.connector(d), &self.shape)
    }

    fn element(&self, k: usize) -> ComplexMatrix {
        self.p.column(k) * self.q.column(k).adjoint()
    }

    /// Fills `d[free]` by alternating between rank-one fits of every party
    /// realignment and a least-squares solve for the free entries.
    /// Returns the defect of the completed connector.
    pub fn complete(&self, d: &mut [Complex64], free: &[usize]) -> f64 {
        let parties = self.shape.parties();
        if free.is_empty() || parties == 1 {
            return self.defect(d);
        }
        let mut fixed = d.to_vec();
        for &j in free {
            fixed[j] = ZERO;
        }
        let base = self.connector(&fixed);
        let base_r: Vec<ComplexMatrix> = (0..parties)
            .map(|c| party_realignment(&base, &self.shape, c).unwrap())
            .collect();
        let elems: Vec<Vec<ComplexMatrix>> = free
            .iter()
            .map(|&j| {
                let e = self.element(j);
                (0..parties)
                    .map(|c| party_realignment(&e, &self.shape, c).unwrap())
                    .collect()
            })
            .collect();

        let mut prev = f64::INFINITY;
        for _ in 0..ALS_MAX_ITER {
            let a = self.connector(d);
            let targets: Vec<ComplexMatrix> = (0..parties)
                .map(|c| {
                    let dec = linalg::svd(&party_realignment(&a, &self.shape, c).unwrap());
                    dec.u.column(0) * dec.v.column(0).adjoint() * Complex64::new(dec.singular_values[0], 0.0)
                })
                .collect();
            // realignments permute entries, so the elements stay orthonormal
            for (slot, &j) in free.iter().enumerate() {
                let mut acc = ZERO;
                for c in 0..parties {
                    acc += elems[slot][c].dotc(&(&targets[c] - &base_r[c]));
                }
                d[j] = acc / parties as f64;
            }
            let now = self.defect(d);
            if now < 1e-28 || (prev.is_finite() && (prev - now).abs() <= 1e-12 * prev) {
                return now;
            }
            prev = now;
        }
        self.defect(d)
    }
}

/// Kernel completion for a mixed-state candidate. Returns the completed
/// candidate and its defect.
pub fn ratio_completion(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    cand: &GaugeCandidate,
    shape: &SystemShape,
) -> (GaugeCandidate, f64) {
    let side = Side::new(x.clone(), permute_columns(y, &cand.pairing()), shape.clone());
    let mut d = cand.diagonal();
    let free: Vec<usize> = (cand.support..cand.len()).collect();
    let defect = side.complete(&mut d, &free);
    let mut out = cand.clone();
    for &j in &free {
        out.set_entry(j, d[j]);
    }
    (out, defect)
}

/// Successful gauge search.
#[derive(Debug, Clone)]
pub struct GaugeSuccess {
    pub connector: ComplexMatrix,
    pub candidate: GaugeCandidate,
    pub objective: f64,
}

/// Best point reached by a gauge search that did not meet [`ACCEPT_OBJECTIVE`].
#[derive(Debug, Clone)]
pub struct NoConnectorFound {
    pub best_connector: ComplexMatrix,
    pub best_candidate: GaugeCandidate,
    pub best_objective: f64,
}

/// Ratio completion followed by multi-start Nelder–Mead over the phases
/// (the first is pinned) and the kernel log-magnitudes.
#[allow(clippy::result_large_err)]
pub fn gauge_search(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    seed_candidate: &GaugeCandidate,
    shape: &SystemShape,
    opts: &GaugeOptions,
) -> std::result::Result<GaugeSuccess, NoConnectorFound> {
    let side = Side::new(x.clone(), permute_columns(y, &seed_candidate.pairing()), shape.clone());
    let (completed, defect) = ratio_completion(x, y, seed_candidate, shape);
    let mut best = (completed.clone(), defect);

    let n = completed.len();
    let r = completed.support;
    if defect >= ACCEPT_OBJECTIVE && n > 1 {
        let unpack = |theta: &[f64]| -> GaugeCandidate {
            let mut c = completed.clone();
            c.phases[0] = 0.0;
            c.phases[1..].copy_from_slice(&theta[..n - 1]);
            for (slot, k) in (r..n).enumerate() {
                c.magnitudes[k] = theta[n - 1 + slot].exp();
            }
            c
        };
        let mut x0: Vec<f64> = completed.phases[1..].iter().map(|p| p - completed.phases[0]).collect();
        x0.extend(completed.magnitudes[r..].iter().map(|m| m.max(1e-300).ln()));
        let objective = |theta: &[f64]| side.defect(&unpack(theta).diagonal());
        let found = multistart(objective, &x0, opts, |rng, i| {
            if i < n - 1 {
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
            } else {
                x0[i] + 0.5 * rng.sample::<f64, _>(StandardNormal)
            }
        });
        if found.f < best.1 {
            best = (unpack(&found.x), found.f);
        }
    }

    let connector = side.connector(&best.0.diagonal());
    if best.1 < ACCEPT_OBJECTIVE {
        Ok(GaugeSuccess {
            connector,
            candidate: best.0,
            objective: best.1,
        })
    } else {
        Err(NoConnectorFound {
            best_connector: connector,
            best_candidate: best.0,
            best_objective: best.1,
        })
    }
}

/// Eigenvector pairings worth trying: sorted order, the greedy maximum-overlap
/// assignment, and every permutation inside small degeneracy clusters of each.
pub fn candidate_pairings(s1: &SpectralData, s2: &SpectralData) -> Vec<Vec<usize>> {
    let n = s1.eigvals.len();
    let r = s1.support_rank;
    let sorted: Vec<usize> = (0..n).collect();
    let overlap = overlap_pairing(s1, s2);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for base in [sorted, overlap] {
        for p in cluster_variants(&base, s1, s2) {
            if out.len() >= MAX_PAIRINGS {
                return out;
            }
            let respects_support = p.iter().enumerate().all(|(k, &j)| (k < r) == (j < r));
            if respects_support && seen.insert(p.clone()) {
                out.push(p);
            }
        }
    }
    out
}

fn overlap_pairing(s1: &SpectralData, s2: &SpectralData) -> Vec<usize> {
    let n = s1.eigvals.len();
    let r = s1.support_rank;
    let mut scored = Vec::with_capacity(n * n);
    for k in 0..n {
        for j in 0..n {
            if (k < r) == (j < r) {
                let o = s1.eigvecs.column(k).dotc(&s2.eigvecs.column(j)).norm_sqr();
                scored.push((o, k, j));
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pairing = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, k, j) in scored {
        if pairing[k] == usize::MAX && !used[j] {
            pairing[k] = j;
            used[j] = true;
        }
    }
    pairing
}

fn cluster_variants(base: &[usize], s1: &SpectralData, s2: &SpectralData) -> Vec<Vec<usize>> {
    let n = base.len();
    let mut inverse = vec![0; n];
    for (k, &j) in base.iter().enumerate() {
        inverse[j] = k;
    }
    let mut groups: Vec<Vec<usize>> = s1
        .degeneracy_clusters
        .iter()
        .filter(|c| c.len() > 1 && c.len() <= CLUSTER_PERMUTATION_LIMIT)
        .cloned()
        .collect();
    for c in s2
        .degeneracy_clusters
        .iter()
        .filter(|c| c.len() > 1 && c.len() <= CLUSTER_PERMUTATION_LIMIT)
    {
        let mut g: Vec<usize> = c.iter().map(|&j| inverse[j]).collect();
        g.sort_unstable();
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let mut out = vec![base.to_vec()];
    for g in groups {
        let mut next = Vec::new();
        for p in &out {
            for perm in permutations(g.len()) {
                let mut q = p.clone();
                for (slot, &src) in perm.iter().enumerate() {
                    q[g[slot]] = p[g[src]];
                }
                next.push(q);
                if next.len() >= MAX_PAIRINGS {
                    break;
                }
            }
        }
        out = next;
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
}

/// Deterministic multi-start driver; start 0 is `x0`, later starts draw each
/// coordinate from `draw(rng, index)`.
pub(crate) fn multistart<F, G>(mut f: F, x0: &[f64], opts: &GaugeOptions, mut draw: G) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&mut ChaCha8Rng, usize) -> f64,
{
    let mut best = Minimum {
        x: x0.to_vec(),
        f: f(x0),
    };
    for start in 0..opts.starts.max(1) {
        let x = if start == 0 {
            x0.to_vec()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (start as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            (0..x0.len()).map(|i| draw(&mut rng, i)).collect()
        };
        let m = nelder_mead(&mut f, &x, 0.5, opts.evals_per_start, ACCEPT_OBJECTIVE * 1e-2);
        if m.f < best.f {
            best = m;
        }
        if best.f < ACCEPT_OBJECTIVE * 1e-2 {
            break;
        }
    }
    best
}

/// Plain Nelder–Mead with standard coefficients.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    target: f64,
) -> Minimum {
    let n = x0.len();
    if n == 0 {
        return Minimum { x: vec![], f: f(x0) };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut evals = n + 1;
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect() };

    let checkpoint = (15 * n).max(100);
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (lo, hi) = (simplex[0].1, simplex[n].1);
        if lo < target || (evals >= checkpoint && lo > ABANDON_ABOVE) {
            break;
        }
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if size < 1e-12 || (hi - lo) <= 1e-15 * lo.abs() {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < lo {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < hi {
                let c = lerp(&centroid, &reflected, 0.5);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = lerp(&centroid, &worst, 0.5);
                let fc = f(&c);
                (c, fc)
            };
            evals += 1;
            if fc < hi.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &item.0, 0.5);
                    let fx = f(&x);
                    *item = (x, fx);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Minimum { x, f }
}
