//! Sequential measurement: test `{Π_1, I-Π_1}`, then `{Π_2, I-Π_2}`, … on the
//! unknown state and report the first projector that fires; if none fires,
//! guess uniformly among the `m` labels.
//!
//! Outcome `t < m` (0-based) is "projector `t` fired"; outcome `m` is "every
//! round failed". The effect for outcome `t` is `M_t = L_t† L_t` with Kraus
//! operator `L_t = Π_t (I-Π_{t-1}) ⋯ (I-Π_0)`, and the survivor effect uses
//! `L_m = (I-Π_{m-1}) ⋯ (I-Π_0)`. The family telescopes to the identity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{max_abs_diff, CMatrix, HermitianMatrix};

/// Branch probability below which a "projector did not fire" result is
/// considered numerically impossible and the trajectory is resampled.
pub const COLLAPSE_FLOOR: f64 = 1e-14;
const MAX_ATTEMPTS: u32 = 64;

#[derive(Debug, Clone)]
pub struct SequentialOperators {
    kraus: Vec<CMatrix>,
    effects: Vec<HermitianMatrix>,
}

impl SequentialOperators {
    /// `m + 1` Kraus operators; the last one is the all-rounds-failed branch.
    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    /// Effect of "projector `t` fired".
    pub fn effect(&self, t: usize) -> &HermitianMatrix {
        &self.effects[t]
    }

    pub fn survivor_effect(&self) -> &HermitianMatrix {
        self.effects.last().expect("at least one effect")
    }

    /// `max |Σ_t M_t - I|`.
    pub fn completeness_residual(&self) -> f64 {
        let sum: HermitianMatrix = self.effects.iter().cloned().sum();
        sum.max_abs_diff(&HermitianMatrix::identity(sum.dim()))
    }
}

pub fn build_sequential(e: &StateEnsemble) -> SequentialOperators {
    let d = e.dim();
    let identity = CMatrix::identity(d, d);
    let mut survivor = identity.clone();
    let mut kraus = Vec::with_capacity(e.count() + 1);
    for s in e.states() {
        let v = s.amplitudes();
        // Π L = |v⟩(⟨v| L)
        let fired = v * (v.adjoint() * &survivor);
        survivor -= &fired;
        kraus.push(fired);
    }
    kraus.push(survivor);
    let effects = kraus
        .iter()
        .map(|l| HermitianMatrix::hermitize(l.adjoint() * l))
        .collect();
    SequentialOperators { kraus, effects }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    Exact,
    Empirical,
}

/// Probabilities over the `m + 1` outcomes for input state `input_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
    pub kind: DistributionKind,
    /// Zero for exact distributions.
    pub shots: u64,
    pub input_index: usize,
    /// Trajectories restarted because a numerically impossible branch was
    /// drawn. Always zero for exact distributions.
    pub rejected: u64,
}

impl OutcomeDistribution {
    pub fn outcomes(&self) -> usize {
        self.probs.len()
    }

    /// Probability that the procedure names the input state, counting the
    /// uniform guess after all rounds fail.
    pub fn success_probability(&self) -> f64 {
        let m = self.probs.len() - 1;
        self.probs[self.input_index] + self.probs[m] / m as f64
    }
}

fn check_index(e: &StateEnsemble, k: usize) -> Result<()> {
    if k < e.count() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: k,
            count: e.count(),
        })
    }
}

/// `probs[t] = ⟨v_k|M_t|v_k⟩`, computed by propagating the unnormalized
/// surviving vector through the rounds.
pub fn exact_distribution(e: &StateEnsemble, k: usize) -> Result<OutcomeDistribution> {
    check_index(e, k)?;
    let mut psi = e.states()[k].amplitudes().clone();
    let mut probs = Vec::with_capacity(e.count() + 1);
    for s in e.states() {
        let v = s.amplitudes();
        let a = v.dotc(&psi);
        probs.push(a.norm_sqr());
        psi.axpy(-a, v, num_complex::Complex64::new(1.0, 0.0));
    }
    probs.push(psi.norm_squared());
    Ok(OutcomeDistribution {
        probs,
        kind: DistributionKind::Exact,
        shots: 0,
        input_index: k,
        rejected: 0,
    })
}

/// Per-input success probabilities `⟨v_k|M_k|v_k⟩ + ⟨v_k|M_m|v_k⟩ / m`.
pub fn sm_per_state(e: &StateEnsemble) -> Vec<f64> {
    (0..e.count())
        .map(|k| {
            exact_distribution(e, k)
                .expect("index in range")
                .success_probability()
        })
        .collect()
}

/// Worst-case success probability of the sequential procedure.
pub fn sm_success(e: &StateEnsemble) -> f64 {
    sm_per_state(e).into_iter().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodDecomposition {
    /// Caught by its own projector after all earlier ones missed.
    pub good1: f64,
    /// Survived every round and then guessed correctly.
    pub good2: f64,
}

impl GoodDecomposition {
    pub fn total(&self) -> f64 {
        self.good1 + self.good2
    }
}

pub fn good_decomposition(e: &StateEnsemble, k: usize) -> Result<GoodDecomposition> {
    let dist = exact_distribution(e, k)?;
    let m = e.count();
    Ok(GoodDecomposition {
        good1: dist.probs[k],
        good2: dist.probs[m] / m as f64,
    })
}

struct Trajectory {
    outcome: usize,
    restarts: u32,
}

fn simulate_trajectory(
    e: &StateEnsemble,
    k: usize,
    rng: &mut ChaCha8Rng,
    id: u64,
) -> Result<Trajectory> {
    let m = e.count();
    'attempt: for restarts in 0..MAX_ATTEMPTS {
        let mut psi = e.states()[k].amplitudes().clone();
        for (t, s) in e.states().iter().enumerate() {
            let v = s.amplitudes();
            let a = v.dotc(&psi);
            let fire = a.norm_sqr().min(1.0);
            let u: f64 = rng.random();
            if u < fire {
                return Ok(Trajectory {
                    outcome: t,
                    restarts,
                });
            }
            psi.axpy(-a, v, num_complex::Complex64::new(1.0, 0.0));
            let remaining = psi.norm_squared();
            if remaining < COLLAPSE_FLOOR {
                continue 'attempt;
            }
            psi.unscale_mut(remaining.sqrt());
        }
        return Ok(Trajectory {
            outcome: m,
            restarts,
        });
    }
    Err(Error::TrajectoryRejected {
        trajectory: id,
        attempts: MAX_ATTEMPTS,
    })
}

/// Samples `shots` independent runs of the sequential procedure on input
/// `k`, collapsing the state after every round.
///
/// Trajectory `i` draws from ChaCha8 stream `i` under the key derived from
/// `seed`, so the counts do not depend on `exec`.
pub fn monte_carlo(
    e: &StateEnsemble,
    k: usize,
    shots: u64,
    seed: u64,
    exec: Exec,
) -> Result<OutcomeDistribution> {
    check_index(e, k)?;
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let n = usize::try_from(shots).map_err(|_| Error::InvalidParameter("too many shots".into()))?;
    let results = exec.map_indices(n, |i| {
        let mut rng = base.clone();
        rng.set_stream(i as u64);
        rng.set_word_pos(0);
        simulate_trajectory(e, k, &mut rng, i as u64)
    });
    let mut counts = vec![0u64; e.count() + 1];
    let mut rejected = 0u64;
    for r in results {
        let t = r?;
        counts[t.outcome] += 1;
        rejected += u64::from(t.restarts);
    }
    Ok(OutcomeDistribution {
        probs: counts.iter().map(|&c| c as f64 / shots as f64).collect(),
        kind: DistributionKind::Empirical,
        shots,
        input_index: k,
        rejected,
    })
}

/// The effects written out as the literal products
/// `(I-Π_0)⋯(I-Π_{t-1}) Π_t (I-Π_{t-1})⋯(I-Π_0)`, for cross-checking
/// [`build_sequential`].
pub fn effects_by_direct_product(e: &StateEnsemble) -> Vec<HermitianMatrix> {
    let d = e.dim();
    let id = CMatrix::identity(d, d);
    let proj: Vec<CMatrix> = e
        .states()
        .iter()
        .map(|s| s.projector().into_inner())
        .collect();
    let complement = |i: usize| &id - &proj[i];
    let mut out = Vec::with_capacity(e.count() + 1);
    for (t, pt) in proj.iter().enumerate() {
        let mut left = id.clone();
        for i in 0..t {
            left *= complement(i);
        }
        let mut right = id.clone();
        for i in (0..t).rev() {
            right *= complement(i);
        }
        out.push(HermitianMatrix::hermitize(&left * pt * right));
    }
    let mut left = id.clone();
    for i in 0..e.count() {
        left *= complement(i);
    }
    let mut right = id.clone();
    for i in (0..e.count()).rev() {
        right *= complement(i);
    }
    out.push(HermitianMatrix::hermitize(left * right));
    out
}

/// `max_t |M_t - M'_t|` between two effect families.
pub fn effects_distance(a: &[HermitianMatrix], b: &[HermitianMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| max_abs_diff(x.as_matrix(), y.as_matrix()))
        .fold(0.0, f64::max)
}
