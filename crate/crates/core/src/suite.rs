//! Randomized property suite over Haar-random ensembles.
//!
//! Each trial stores the raw quantities behind every inequality, so one run
//! can be judged at several tolerances. A check's *excess* is how far the
//! trial overshoots the inequality; the check is violated when the excess is
//! above the tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{eq3_lower_bound, linear_bound, refined_bound};
use crate::ensemble::{gram, haar_random, max_pairwise_fidelity, StateEnsemble};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{eigh, SpectralCutoff};
use crate::pgm::{build_pgm, pgm_success, proof_diagnostics_with};
use crate::sma::{build_sequential, sm_success};

/// Trials with `F` above this are excluded from the sequential-bound check.
pub const LOW_FIDELITY_MAX: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub trials: usize,
    /// Inclusive.
    pub d_range: (usize, usize),
    /// Inclusive.
    pub m_range: (usize, usize),
    pub seed: u64,
    pub tolerance: f64,
    /// Cap `m` at `d` so every ensemble is linearly independent.
    pub independent_only: bool,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            trials: 1000,
            d_range: (2, 16),
            m_range: (2, 8),
            seed: 0,
            tolerance: 1e-9,
            independent_only: false,
        }
    }
}

impl VerifySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        let (dl, dh) = self.d_range;
        let (ml, mh) = self.m_range;
        if dl < 1 || dl > dh {
            return bad(format!("invalid dimension range {dl}..{dh}"));
        }
        if ml < 2 || ml > mh {
            return bad(format!("invalid state-count range {ml}..{mh}"));
        }
        if self.independent_only && dl < ml {
            return bad(format!(
                "independent ensembles need d >= {ml}, range starts at {dl}"
            ));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return bad(format!(
                "tolerance must be nonnegative, got {}",
                self.tolerance
            ));
        }
        Ok(())
    }

    /// Dimension, count and ensemble seed of trial `index`.
    pub fn trial_parameters(&self, index: usize) -> (usize, usize, u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let d = rng.random_range(self.d_range.0..=self.d_range.1);
        let m_hi = if self.independent_only {
            self.m_range.1.min(d)
        } else {
            self.m_range.1
        };
        let m = rng.random_range(self.m_range.0..=m_hi);
        (d, m, rng.random())
    }

    pub fn trial_ensemble(&self, index: usize) -> Result<StateEnsemble> {
        let (d, m, seed) = self.trial_parameters(index);
        haar_random(d, m, seed)
    }
}

/// Raw measurements of one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub d: usize,
    pub m: usize,
    pub f: f64,
    pub independent: bool,
    pub pgm_worst: f64,
    pub sm_exact: f64,
    pub linear: f64,
    pub refined: f64,
    pub eq3: f64,
    /// `max |Σ E_i - support|`.
    pub povm_residual: f64,
    /// `max |Σ M_t - I|`.
    pub sma_residual: f64,
    /// `max_i |Tr(B_i²) - p_i|`.
    pub tr_b2_gap: f64,
    /// `max_i |Tr(A_i B_i) - ⟨v_i|M_i|v_i⟩|`.
    pub tr_ab_gap: f64,
    /// `max_i Tr(A_i²) - (1 + mF²)`.
    pub tr_a2_excess: f64,
    /// `max_i Tr(A_i B_i) - √Tr(A_i²) √Tr(B_i²)`.
    pub cauchy_schwarz_excess: f64,
}

pub fn measure(e: &StateEnsemble, index: usize) -> Result<TrialRecord> {
    let cutoff = SpectralCutoff::default();
    let m = e.count();
    let f = max_pairwise_fidelity(e);
    let g = eigh(gram(e).as_hermitian());
    let independent = g.rank(cutoff) == m;

    let pgm = pgm_success(e)?;
    let povm = build_pgm(e, cutoff)?;
    let ops = build_sequential(e);
    let diag = proof_diagnostics_with(e, &ops, cutoff)?;

    let mut tr_b2_gap = 0.0f64;
    let mut tr_ab_gap = 0.0f64;
    let mut tr_a2_excess = f64::NEG_INFINITY;
    let a2_cap = 1.0 + m as f64 * f * f;
    for (i, s) in e.states().iter().enumerate() {
        tr_b2_gap = tr_b2_gap.max((diag.tr_b2[i] - pgm.per_state[i]).abs());
        let direct = ops.effect(i).expectation(s.amplitudes());
        tr_ab_gap = tr_ab_gap.max((diag.tr_ab[i] - direct).abs());
        tr_a2_excess = tr_a2_excess.max(diag.tr_a2[i] - a2_cap);
    }

    Ok(TrialRecord {
        index,
        d: e.dim(),
        m,
        f,
        independent,
        pgm_worst: pgm.worst_case,
        sm_exact: sm_success(e),
        linear: linear_bound(m, f),
        refined: refined_bound(m, f),
        eq3: eq3_lower_bound(e),
        povm_residual: povm.completeness_residual(),
        sma_residual: ops.completeness_residual(),
        tr_b2_gap,
        tr_ab_gap,
        tr_a2_excess,
        cauchy_schwarz_excess: diag.cauchy_schwarz_excess(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteCheck {
    PovmCompleteness,
    SequentialCompleteness,
    PgmAboveRefined,
    PgmAboveLinear,
    SmAboveEq3LowFidelity,
    TraceA2Bound,
    TraceB2Identity,
    TraceAbIdentity,
    CauchySchwarz,
}

impl SuiteCheck {
    pub const ALL: [SuiteCheck; 9] = [
        SuiteCheck::PovmCompleteness,
        SuiteCheck::SequentialCompleteness,
        SuiteCheck::PgmAboveRefined,
        SuiteCheck::PgmAboveLinear,
        SuiteCheck::SmAboveEq3LowFidelity,
        SuiteCheck::TraceA2Bound,
        SuiteCheck::TraceB2Identity,
        SuiteCheck::TraceAbIdentity,
        SuiteCheck::CauchySchwarz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteCheck::PovmCompleteness => "pgm_povm_completeness",
            SuiteCheck::SequentialCompleteness => "sma_completeness",
            SuiteCheck::PgmAboveRefined => "pgm_ge_refined",
            SuiteCheck::PgmAboveLinear => "pgm_ge_linear",
            SuiteCheck::SmAboveEq3LowFidelity => "sm_ge_eq3_low_f",
            SuiteCheck::TraceA2Bound => "tr_a2_le_1_plus_mf2",
            SuiteCheck::TraceB2Identity => "tr_b2_eq_p",
            SuiteCheck::TraceAbIdentity => "tr_ab_eq_direct",
            SuiteCheck::CauchySchwarz => "cauchy_schwarz",
        }
    }

    /// Excess of `r` over this inequality, or `None` where the check does
    /// not apply.
    pub fn excess(self, r: &TrialRecord) -> Option<f64> {
        Some(match self {
            SuiteCheck::PovmCompleteness => r.povm_residual,
            SuiteCheck::SequentialCompleteness => r.sma_residual,
            SuiteCheck::PgmAboveRefined => r.refined - r.pgm_worst,
            SuiteCheck::PgmAboveLinear => r.linear - r.pgm_worst,
            SuiteCheck::SmAboveEq3LowFidelity => {
                if r.f > LOW_FIDELITY_MAX {
                    return None;
                }
                r.eq3 - r.sm_exact
            }
            SuiteCheck::TraceA2Bound => r.tr_a2_excess,
            SuiteCheck::TraceB2Identity => r.tr_b2_gap,
            SuiteCheck::TraceAbIdentity => r.tr_ab_gap,
            SuiteCheck::CauchySchwarz => r.cauchy_schwarz_excess,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOutcome {
    pub check: SuiteCheck,
    pub tolerance: f64,
    pub evaluated: usize,
    pub violations: usize,
    /// Largest excess seen; the minimum margin is its negation.
    pub max_excess: f64,
    pub first_violation: Option<usize>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn min_margin(&self) -> f64 {
        -self.max_excess
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub spec: VerifySpec,
    pub trials: Vec<TrialRecord>,
}

impl SuiteReport {
    pub fn check<'a>(
        &'a self,
        check: SuiteCheck,
        tolerance: f64,
        filter: impl Fn(&TrialRecord) -> bool + 'a,
    ) -> CheckOutcome {
        let mut out = CheckOutcome {
            check,
            tolerance,
            evaluated: 0,
            violations: 0,
            max_excess: f64::NEG_INFINITY,
            first_violation: None,
        };
        for r in self.trials.iter().filter(|r| filter(r)) {
            let Some(x) = check.excess(r) else { continue };
            out.evaluated += 1;
            out.max_excess = out.max_excess.max(x);
            if x.is_nan() || x > tolerance {
                out.violations += 1;
                out.first_violation.get_or_insert(r.index);
            }
        }
        out
    }

    /// Every check at the configured tolerance, over every trial.
    pub fn evaluate(&self) -> Vec<CheckOutcome> {
        SuiteCheck::ALL
            .iter()
            .map(|&c| self.check(c, self.spec.tolerance, |_| true))
            .collect()
    }

    pub fn first_violation(&self) -> Option<usize> {
        self.evaluate()
            .iter()
            .filter_map(|o| o.first_violation)
            .min()
    }
}

pub fn run_suite(spec: &VerifySpec, exec: Exec) -> Result<SuiteReport> {
    spec.validate()?;
    let trials = exec
        .map_indices(spec.trials, |i| {
            spec.trial_ensemble(i).and_then(|e| measure(&e, i))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        spec: spec.clone(),
        trials,
    })
}
