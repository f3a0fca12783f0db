//! SLOCC equivalence of mixed states.
//!
//! `ρ₁ ~ ρ₂` when `ρ₁ = A ρ₂ A†` (up to trace) for an invertible local `A`.
//! Candidates come from connectors `X·D·Y†` built on the two eigenbases; if
//! none is Kronecker structured the local factors are fitted directly. An
//! `Equivalent` verdict is issued only for a witness that the oracle accepts
//! in both directions, and `Inequivalent` only when an invariant differs.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauge::{self, GaugeOptions, ACCEPT_OBJECTIVE};
use crate::linalg::{self, ComplexMatrix};
use crate::local::{self, Target};
use crate::oracle::certify_mixed;
use crate::spectral::{spectral_prep, SpectralData};
use crate::state::MixedState;
use crate::tensor_factor::{self, FactorSet};
use crate::verdict::{certificate_residuals, CheckOptions, MixedVerdict, Verdict};

/// Pairings that get a full Nelder–Mead search after completion.
const SEARCHED_PAIRINGS: usize = 2;
/// Local fits below this relative residual are passed to the oracle.
const LOCAL_ACCEPT: f64 = 1e-10;

/// Global rank and single-party reduced ranks; `Some(reason)` when they differ.
pub fn invariant_screen(rho1: &MixedState, rho2: &MixedState) -> Result<Option<String>> {
    if rho1.shape() != rho2.shape() {
        return Err(Error::Shape(format!("{} vs {}", rho1.shape(), rho2.shape())));
    }
    let (r1, r2) = (rho1.rank(), rho2.rank());
    if r1 != r2 {
        return Ok(Some(format!("rank mismatch: {r1} vs {r2}")));
    }
    for party in 0..rho1.shape().parties() {
        let a = linalg::numerical_rank(&rho1.reduced(party)?);
        let b = linalg::numerical_rank(&rho2.reduced(party)?);
        if a != b {
            return Ok(Some(format!(
                "local rank mismatch at party {}: {a} vs {b}",
                party + 1
            )));
        }
    }
    Ok(None)
}

fn certified_verdict(rho1: &MixedState, rho2: &MixedState, w: FactorSet, reason: &str, objective: f64) -> Option<Verdict> {
    let cert = certify_mixed(rho1, rho2, &w).ok().filter(|c| c.passed)?;
    let mut res = certificate_residuals(&cert);
    res.insert("objective".into(), objective);
    Some(Verdict::equivalent(w, reason, res))
}

struct Scored {
    candidate: gauge::GaugeCandidate,
    objective: f64,
}

pub fn check_mixed_equivalence(rho1: &MixedState, rho2: &MixedState, opts: &CheckOptions) -> Result<MixedVerdict> {
    if let Some(reason) = invariant_screen(rho1, rho2)? {
        return Ok(Verdict::inequivalent(reason, BTreeMap::new()));
    }
    let shape = rho1.shape().clone();
    let s1 = spectral_prep(rho1);
    let s2 = spectral_prep(rho2);
    if s1.support_rank != s2.support_rank {
        return Ok(Verdict::inequivalent(
            format!("rank mismatch: {} vs {}", s1.support_rank, s2.support_rank),
            BTreeMap::new(),
        ));
    }

    // stage A: diagonal gauge on eigenbasis connectors
    let mut scored = Vec::new();
    for pairing in gauge::candidate_pairings(&s1, &s2) {
        let cand = gauge::scaling_for_pairing(&s1, &s2, &pairing)?;
        let (candidate, objective) = gauge::ratio_completion(&s1.eigvecs, &s2.eigvecs, &cand, &shape);
        if objective < ACCEPT_OBJECTIVE {
            let a = gauge::connector(&s1.eigvecs, &s2.eigvecs, &candidate);
            if let Some(v) = try_connector(rho1, rho2, &a, objective, "diagonal gauge") {
                return Ok(v);
            }
        }
        scored.push(Scored { candidate, objective });
    }
    scored.sort_by(|a, b| a.objective.total_cmp(&b.objective));

    let gauge_opts = GaugeOptions {
        seed: opts.seed,
        starts: opts.gauge_starts,
        ..GaugeOptions::default()
    };
    let mut best_connector: Option<(ComplexMatrix, f64)> = None;
    for s in scored.iter().take(SEARCHED_PAIRINGS) {
        let (a, objective) = match gauge::gauge_search(&s1.eigvecs, &s2.eigvecs, &s.candidate, &shape, &gauge_opts) {
            Ok(found) => (found.connector, found.objective),
            Err(miss) => (miss.best_connector, miss.best_objective),
        };
        if objective < ACCEPT_OBJECTIVE {
            if let Some(v) = try_connector(rho1, rho2, &a, objective, "diagonal gauge") {
                return Ok(v);
            }
        }
        if best_connector.as_ref().is_none_or(|(_, f)| objective < *f) {
            best_connector = Some((a, objective));
        }
    }
    let best_objective = best_connector.as_ref().map_or(f64::INFINITY, |(_, f)| *f);

    // stage B: direct local fit
    let mut starts = Vec::new();
    if let Some((a, _)) = &best_connector {
        if let Ok(factors) = tensor_factor::peel(a, shape.dims()) {
            if factors.iter().all(linalg::all_finite) {
                starts.push(factors);
            }
        }
    }
    starts.push(shape.dims().iter().map(|&d| linalg::identity(d)).collect());
    let target = Target::Mixed {
        source: rho2.rho(),
        target: rho1.rho(),
    };
    let fit = local::fit_multistart(&shape, &target, starts, opts.local_starts, opts.seed, LOCAL_ACCEPT);
    let mut fit_residual = f64::INFINITY;
    if let Some(fit) = fit {
        fit_residual = fit.residual;
        if let Some(v) = FactorSet::new(fit.factors, Complex64::new(1.0, 0.0)).ok().and_then(|w| {
            certified_verdict(rho1, rho2, w, "local factor fit certified in both directions", best_objective)
        }) {
            return Ok(v);
        }
    }

    let mut res = BTreeMap::new();
    res.insert("objective".into(), best_objective);
    res.insert("local_fit".into(), fit_residual);
    let mut reason = "no certified local connector found".to_string();
    if let Some(note) = degeneracy_note(&s1, &s2) {
        reason.push_str("; ");
        reason.push_str(&note);
    }
    Ok(Verdict::inconclusive(reason, res))
}

fn try_connector(rho1: &MixedState, rho2: &MixedState, a: &ComplexMatrix, objective: f64, stage: &str) -> Option<Verdict> {
    let w = tensor_factor::nearest_kronecker(a, rho1.shape()).ok()?;
    certified_verdict(rho1, rho2, w, &format!("{stage} connector certified in both directions"), objective)
}

fn degeneracy_note(s1: &SpectralData, s2: &SpectralData) -> Option<String> {
    let support = |s: &SpectralData| {
        s.degeneracy_clusters
            .iter()
            .filter(|c| c[0] < s.support_rank)
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    };
    let size = support(s1).max(support(s2));
    (size > 1).then(|| format!("degenerate spectrum (cluster of size {size})"))
}
