//! The worst-case pretty good measurement `E_i = S^{-1/2} |v_i⟩⟨v_i| S^{-1/2}`
//! with `S = Σ_i |v_i⟩⟨v_i|`.
//!
//! When the states do not span the whole space, `S^{-1/2}` is the pseudo
//! power and the elements sum to the projector onto the span instead of the
//! identity.

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::numerics::{eigh, EigenDecomposition, HermitianMatrix, SpectralCutoff};
use crate::sma::{build_sequential, SequentialOperators};

/// Probabilities this far outside `[0, 1]` are treated as bugs, not rounding.
pub const PROBABILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Povm {
    pub elements: Vec<HermitianMatrix>,
    /// Projector onto the subspace where the elements sum to the identity.
    pub support: HermitianMatrix,
}

impl Povm {
    /// `max |Σ_i E_i - support|`.
    pub fn completeness_residual(&self) -> f64 {
        let sum: HermitianMatrix = self.elements.iter().cloned().sum();
        sum.max_abs_diff(&self.support)
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_element_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| eigh(e).min_eigenvalue())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn build_pgm(e: &StateEnsemble, cutoff: SpectralCutoff) -> Result<Povm> {
    let spec = eigh(&e.frame_operator());
    let inv_sqrt = spec.power(-0.5, cutoff)?;
    let elements = e
        .states()
        .iter()
        .map(|s| HermitianMatrix::outer(&(inv_sqrt.as_matrix() * s.amplitudes())))
        .collect();
    Ok(Povm {
        elements,
        support: spec.support_projector(cutoff),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationReport {
    /// `p_i = ⟨v_i|E_i|v_i⟩`, clamped to `[0, 1]`.
    pub per_state: Vec<f64>,
    pub worst_case: f64,
    pub argmin_index: usize,
}

impl DiscriminationReport {
    /// Validates and clamps raw probabilities.
    pub fn from_raw(raw: Vec<f64>) -> Result<Self> {
        let mut per_state = Vec::with_capacity(raw.len());
        for (index, &p) in raw.iter().enumerate() {
            if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
                return Err(Error::ProbabilityOutOfRange { index, value: p });
            }
            per_state.push(p.clamp(0.0, 1.0));
        }
        let (argmin_index, worst_case) =
            per_state
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |best, (i, p)| if p < best.1 { (i, p) } else { best },
                );
        Ok(Self {
            per_state,
            worst_case,
            argmin_index,
        })
    }
}

fn success_from_spectrum(
    e: &StateEnsemble,
    spec: &EigenDecomposition,
    cutoff: SpectralCutoff,
) -> Result<DiscriminationReport> {
    let inv_sqrt = spec.power(-0.5, cutoff)?;
    let raw = e
        .states()
        .iter()
        .map(|s| inv_sqrt.expectation(s.amplitudes()).powi(2))
        .collect();
    DiscriminationReport::from_raw(raw)
}

/// Exact PGM success probabilities `p_i = ⟨v_i|S^{-1/2}|v_i⟩²`.
pub fn pgm_success(e: &StateEnsemble) -> Result<DiscriminationReport> {
    pgm_success_with(e, SpectralCutoff::default())
}

pub fn pgm_success_with(e: &StateEnsemble, cutoff: SpectralCutoff) -> Result<DiscriminationReport> {
    success_from_spectrum(e, &eigh(&e.frame_operator()), cutoff)
}

/// Per-state traces of the operators `A_i = S^{1/4} M_i S^{1/4}` and
/// `B_i = S^{-1/4} |v_i⟩⟨v_i| S^{-1/4}`, where `M_i` is the sequential
/// measurement effect for outcome `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofDiagnostics {
    pub tr_a2: Vec<f64>,
    pub tr_b2: Vec<f64>,
    pub tr_ab: Vec<f64>,
}

impl ProofDiagnostics {
    /// `max_i [Tr(A_i B_i) - √Tr(A_i²) √Tr(B_i²)]`; nonpositive by
    /// Cauchy–Schwarz.
    pub fn cauchy_schwarz_excess(&self) -> f64 {
        (0..self.tr_ab.len())
            .map(|i| self.tr_ab[i] - self.tr_a2[i].max(0.0).sqrt() * self.tr_b2[i].max(0.0).sqrt())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn proof_diagnostics(e: &StateEnsemble) -> Result<ProofDiagnostics> {
    proof_diagnostics_with(e, &build_sequential(e), SpectralCutoff::default())
}

pub fn proof_diagnostics_with(
    e: &StateEnsemble,
    ops: &SequentialOperators,
    cutoff: SpectralCutoff,
) -> Result<ProofDiagnostics> {
    let spec = eigh(&e.frame_operator());
    let quarter = spec.power(0.25, cutoff)?;
    let inv_quarter = spec.power(-0.25, cutoff)?;
    let m = e.count();
    let mut out = ProofDiagnostics {
        tr_a2: Vec::with_capacity(m),
        tr_b2: Vec::with_capacity(m),
        tr_ab: Vec::with_capacity(m),
    };
    for (i, s) in e.states().iter().enumerate() {
        let a = ops.effect(i).sandwich(&quarter);
        let b = s.projector().sandwich(&inv_quarter);
        out.tr_a2.push(a.trace_product(&a));
        out.tr_b2.push(b.trace_product(&b));
        out.tr_ab.push(a.trace_product(&b));
    }
    Ok(out)
}
