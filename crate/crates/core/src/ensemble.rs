//! Pure-state ensembles, their Gram matrices, and the generators used to
//! build discrimination instances.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigh, CMatrix, CVector, HermitianMatrix, SpectralCutoff};

/// Norm tolerance for [`PureState::new`].
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on the unit diagonal of a [`GramMatrix`].
pub const GRAM_DIAGONAL_TOL: f64 = 1e-12;

/// A unit vector in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Accepts `amplitudes` if its Euclidean norm is 1 within [`NORM_TOL`].
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL || amplitudes.is_empty() {
            return Err(Error::NotNormalized { index: 0, norm });
        }
        Ok(Self { amplitudes })
    }

    /// Scales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { index: 0, norm });
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Computational basis state `|index⟩` in `C^dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> HermitianMatrix {
        HermitianMatrix::outer(&self.amplitudes)
    }
}

/// `m ≥ 2` pure states sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    dim: usize,
    states: Vec<PureState>,
}

impl StateEnsemble {
    pub fn new(states: Vec<PureState>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::TooFewStates(states.len()));
        }
        let dim = states[0].dim();
        for (index, s) in states.iter().enumerate() {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: dim,
                    found: s.dim(),
                });
            }
        }
        Ok(Self { dim, states })
    }

    /// Builds an ensemble from raw amplitude vectors, checking every norm.
    pub fn from_vectors(vectors: Vec<CVector>) -> Result<Self> {
        let states = vectors
            .into_iter()
            .enumerate()
            .map(|(index, v)| {
                PureState::new(v).map_err(|e| match e {
                    Error::NotNormalized { norm, .. } => Error::NotNormalized { index, norm },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(states)
    }

    /// Orthonormal ensemble `|0⟩, …, |m-1⟩` in `C^dim`.
    pub fn orthonormal(dim: usize, m: usize) -> Result<Self> {
        if m > dim {
            return Err(Error::InvalidParameter(format!(
                "cannot fit {m} orthonormal states in dimension {dim}"
            )));
        }
        Self::new((0..m).map(|i| PureState::basis(dim, i)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> Result<&PureState> {
        self.states.get(index).ok_or(Error::IndexOutOfRange {
            index,
            count: self.states.len(),
        })
    }

    /// `S = Σ_i |v_i⟩⟨v_i|`.
    pub fn frame_operator(&self) -> HermitianMatrix {
        let mut cols = CMatrix::zeros(self.dim, self.count());
        for (j, s) in self.states.iter().enumerate() {
            cols.set_column(j, s.amplitudes());
        }
        HermitianMatrix::hermitize(&cols * cols.adjoint())
    }

    /// Applies `u` to every state. `u` should be unitary; the result is
    /// renormalized only through the norm check.
    pub fn transformed(&self, u: &CMatrix) -> Result<Self> {
        Self::from_vectors(self.states.iter().map(|s| u * s.amplitudes()).collect())
    }

    /// Multiplies state `i` by `exp(i·phases[i])`.
    pub fn with_phases(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.count() {
            return Err(Error::InvalidParameter(
                "one phase per state required".into(),
            ));
        }
        Self::from_vectors(
            self.states
                .iter()
                .zip(phases)
                .map(|(s, &t)| s.amplitudes() * Complex64::from_polar(1.0, t))
                .collect(),
        )
    }

    /// Reorders states: result state `i` is `self.states[order[i]]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.count()];
        for &i in order {
            if i >= self.count() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!(
                    "{order:?} is not a permutation"
                )));
            }
        }
        if order.len() != self.count() {
            return Err(Error::InvalidParameter(format!(
                "{order:?} is not a permutation"
            )));
        }
        Self::new(order.iter().map(|&i| self.states[i].clone()).collect())
    }
}

/// `G[i][j] = ⟨v_i|v_j⟩`: Hermitian, PSD, unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(HermitianMatrix);

impl GramMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        for index in 0..h.dim() {
            let value = h.get(index, index).re;
            if (value - 1.0).abs() > GRAM_DIAGONAL_TOL {
                return Err(Error::GramDiagonal { index, value });
            }
        }
        let spec = eigh(&h);
        let floor = -SpectralCutoff::default().absolute(spec.spectral_radius().max(1.0));
        if spec.min_eigenvalue() < floor {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: spec.min_eigenvalue(),
            });
        }
        Ok(Self(h))
    }

    /// `(1 - c) I + c J` for real `c`; `c = -1/(m-1)` gives the symmetric
    /// simplex (the trine for `m = 3`).
    pub fn equal_overlap(m: usize, c: f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { c }).collect())
            .collect();
        Self::new(HermitianMatrix::from_real_rows(&rows)?)
    }

    pub fn size(&self) -> usize {
        self.0.dim()
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0.get(i, j)
    }
}

pub fn gram(e: &StateEnsemble) -> GramMatrix {
    let m = e.count();
    let raw = CMatrix::from_fn(m, m, |i, j| e.states[i].inner(&e.states[j]));
    GramMatrix(HermitianMatrix::hermitize(raw))
}

/// `F = max_{i≠j} |⟨v_i|v_j⟩|²`.
pub fn max_pairwise_fidelity(e: &StateEnsemble) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in e.states.iter().enumerate() {
        for b in &e.states[i + 1..] {
            worst = worst.max(a.inner(b).norm_sqr());
        }
    }
    worst.min(1.0)
}

/// `m` independent Haar-random states in `C^d` (normalized i.i.d. complex
/// Gaussians), fully determined by `seed`.
pub fn haar_random(d: usize, m: usize, seed: u64) -> Result<StateEnsemble> {
    if d < 1 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if m < 2 {
        return Err(Error::TooFewStates(m));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..m)
        .map(|_| {
            let v = CVector::from_fn(d, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            });
            PureState::normalized(v)
        })
        .collect::<Result<Vec<_>>>()?;
    StateEnsemble::new(states)
}

/// Realizes a Gram matrix as explicit states by factorizing
/// `G = V Λ V†` and taking the columns of `Λ^{1/2} V†` restricted to the
/// modes above the default spectral cutoff.
///
/// The dimension is `rank(G)` unless `target_dim` asks for more room; the
/// extra coordinates are zero.
pub fn from_gram(g: &GramMatrix, target_dim: Option<usize>) -> Result<StateEnsemble> {
    let m = g.size();
    if m < 2 {
        return Err(Error::TooFewStates(m));
    }
    let spec = eigh(g.as_hermitian());
    let tol = SpectralCutoff::default().absolute(spec.spectral_radius());
    let kept: Vec<usize> = (0..m).filter(|&a| spec.eigenvalues()[a] > tol).collect();
    let rank = kept.len();
    let dim = match target_dim {
        Some(t) if t < rank => {
            return Err(Error::InvalidParameter(format!(
                "target dimension {t} is below the Gram rank {rank}"
            )))
        }
        Some(t) => t,
        None => rank,
    };
    let v = spec.eigenvectors();
    let vectors = (0..m)
        .map(|i| {
            let mut col = CVector::zeros(dim);
            for (row, &a) in kept.iter().enumerate() {
                col[row] = v[(i, a)].conj() * spec.eigenvalues()[a].sqrt();
            }
            col
        })
        .collect::<Vec<_>>();
    let states = vectors
        .into_iter()
        .map(PureState::normalized)
        .collect::<Result<Vec<_>>>()?;
    StateEnsemble::new(states)
}

/// Ensemble whose pairwise inner products all equal the real number `c`, so
/// that `F = c²`.
pub fn equal_overlap_ensemble(m: usize, c: f64) -> Result<StateEnsemble> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "overlap must lie in [0, 1), got {c}"
        )));
    }
    if m < 2 {
        return Err(Error::TooFewStates(m));
    }
    from_gram(&GramMatrix::equal_overlap(m, c)?, None)
}

/// Two real states with inner product `c`, the standard test pair.
pub fn overlap_pair(c: f64) -> Result<StateEnsemble> {
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!(
            "overlap must lie in [-1, 1], got {c}"
        )));
    }
    let s = (1.0 - c * c).sqrt();
    StateEnsemble::from_vectors(vec![
        CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]),
        CVector::from_vec(vec![Complex64::new(c, 0.0), Complex64::new(s, 0.0)]),
    ])
}

/// The trine: three real states in `C^2` at 120° with `⟨v_i|v_j⟩ = -1/2`.
pub fn trine() -> StateEnsemble {
    let states = (0..3)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            PureState::normalized(CVector::from_vec(vec![
                Complex64::new(t.cos(), 0.0),
                Complex64::new(t.sin(), 0.0),
            ]))
            .expect("unit vector")
        })
        .collect();
    StateEnsemble::new(states).expect("three states of equal dimension")
}

/// On-disk ensemble: `{"d": …, "m": …, "states": [[[re, im], …], …]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleFile {
    pub d: usize,
    pub m: usize,
    pub states: Vec<Vec<[f64; 2]>>,
}

impl From<&StateEnsemble> for EnsembleFile {
    fn from(e: &StateEnsemble) -> Self {
        Self {
            d: e.dim(),
            m: e.count(),
            states: e
                .states()
                .iter()
                .map(|s| s.amplitudes().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl TryFrom<EnsembleFile> for StateEnsemble {
    type Error = Error;

    fn try_from(f: EnsembleFile) -> Result<Self> {
        if f.states.len() != f.m {
            return Err(Error::Format(format!(
                "header says m = {} but {} states are listed",
                f.m,
                f.states.len()
            )));
        }
        let vectors = f
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.len() != f.d {
                    return Err(Error::Format(format!(
                        "state {i} has {} amplitudes, header says d = {}",
                        s.len(),
                        f.d
                    )));
                }
                Ok(CVector::from_iterator(
                    f.d,
                    s.iter().map(|&[re, im]| Complex64::new(re, im)),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        StateEnsemble::from_vectors(vectors)
    }
}

pub fn to_json(e: &StateEnsemble) -> String {
    serde_json::to_string_pretty(&EnsembleFile::from(e)).expect("ensemble serializes")
}

pub fn from_json(text: &str) -> Result<StateEnsemble> {
    let file: EnsembleFile =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    StateEnsemble::try_from(file)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GramEntry {
    Real(f64),
    Complex([f64; 2]),
}

/// Parses a Gram matrix written as a list of rows whose entries are either
/// real numbers or `[re, im]` pairs.
pub fn gram_from_json(text: &str) -> Result<GramMatrix> {
    let rows: Vec<Vec<GramEntry>> =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            cols: bad.len(),
        });
    }
    let m = CMatrix::from_fn(n, n, |i, j| match rows[i][j] {
        GramEntry::Real(x) => Complex64::new(x, 0.0),
        GramEntry::Complex([re, im]) => Complex64::new(re, im),
    });
    GramMatrix::new(HermitianMatrix::new(m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::is_psd;

    #[test]
    fn orthonormal_gram_is_identity() {
        let e = StateEnsemble::orthonormal(3, 3).unwrap();
        assert!(
            gram(&e)
                .as_hermitian()
                .max_abs_diff(&HermitianMatrix::identity(3))
                == 0.0
        );
        assert_eq!(max_pairwise_fidelity(&e), 0.0);
    }

    #[test]
    fn pair_gram_and_fidelity() {
        let e = overlap_pair(0.6).unwrap();
        let g = gram(&e);
        let want = HermitianMatrix::from_real_rows(&[vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap();
        assert!(g.as_hermitian().max_abs_diff(&want) < 1e-15);
        assert!((max_pairwise_fidelity(&e) - 0.36).abs() < 1e-15);
    }

    #[test]
    fn trine_from_gram_fidelity() {
        let g = GramMatrix::equal_overlap(3, -0.5).unwrap();
        let e = from_gram(&g, None).unwrap();
        assert_eq!(e.dim(), 2);
        assert!((max_pairwise_fidelity(&e) - 0.25).abs() < 1e-12);
        assert!((max_pairwise_fidelity(&trine()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn haar_is_deterministic_and_normalized() {
        let a = haar_random(5, 4, 11).unwrap();
        let b = haar_random(5, 4, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, haar_random(5, 4, 12).unwrap());
        for s in a.states() {
            assert!((s.amplitudes().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn haar_gram_is_psd_unit_diagonal() {
        for seed in 0..10 {
            let e = haar_random(3, 6, seed).unwrap();
            let g = gram(&e);
            assert!(is_psd(g.as_hermitian(), 1e-12));
            for i in 0..6 {
                assert!((g.get(i, i).re - 1.0).abs() < 1e-12);
            }
            assert!(GramMatrix::new(g.as_hermitian().clone()).is_ok());
        }
    }

    #[test]
    fn haar_rejects_bad_params() {
        assert!(haar_random(0, 3, 0).is_err());
        assert!(matches!(haar_random(3, 1, 0), Err(Error::TooFewStates(1))));
    }

    #[test]
    fn from_gram_identity_gives_orthonormal() {
        let e = from_gram(&GramMatrix::equal_overlap(3, 0.0).unwrap(), None).unwrap();
        assert_eq!(e.dim(), 3);
        assert!(
            gram(&e)
                .as_hermitian()
                .max_abs_diff(&HermitianMatrix::identity(3))
                < 1e-12
        );
    }

    #[test]
    fn from_gram_pair() {
        let g = GramMatrix::equal_overlap(2, 0.6).unwrap();
        let e = from_gram(&g, None).unwrap();
        assert_eq!(e.dim(), 2);
        assert!(gram(&e).as_hermitian().max_abs_diff(g.as_hermitian()) < 1e-9);
    }

    #[test]
    fn from_gram_positive_equal_overlap_is_full_rank() {
        // (1-c)I + cJ has eigenvalues 1-c (m-1 times) and 1+(m-1)c: rank m for c in [0,1)
        let g = GramMatrix::equal_overlap(3, 0.5).unwrap();
        let e = from_gram(&g, None).unwrap();
        assert_eq!(e.dim(), 3);
        assert!(gram(&e).as_hermitian().max_abs_diff(g.as_hermitian()) < 1e-9);
    }

    #[test]
    fn from_gram_target_dim() {
        let g = GramMatrix::equal_overlap(3, -0.5).unwrap();
        let e = from_gram(&g, Some(5)).unwrap();
        assert_eq!(e.dim(), 5);
        assert!(gram(&e).as_hermitian().max_abs_diff(g.as_hermitian()) < 1e-9);
        assert!(from_gram(&g, Some(1)).is_err());
    }

    #[test]
    fn gram_rejects_bad_input() {
        let not_unit = HermitianMatrix::from_real_rows(&[vec![1.0, 0.2], vec![0.2, 0.9]]).unwrap();
        assert!(matches!(
            GramMatrix::new(not_unit),
            Err(Error::GramDiagonal { index: 1, .. })
        ));
        let not_psd = HermitianMatrix::from_real_rows(&[vec![1.0, 1.5], vec![1.5, 1.0]]).unwrap();
        match GramMatrix::new(not_psd) {
            Err(Error::NotPositiveSemidefinite { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.5).abs() < 1e-12)
            }
            other => panic!("expected PSD failure, got {other:?}"),
        }
    }

    #[test]
    fn equal_overlap_values() {
        let e = equal_overlap_ensemble(4, 0.3).unwrap();
        assert!((max_pairwise_fidelity(&e) - 0.09).abs() < 1e-12);
        let e = equal_overlap_ensemble(5, 0.3).unwrap();
        let g = gram(&e);
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.3 };
                assert!((g.get(i, j) - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        let e = equal_overlap_ensemble(3, 0.0).unwrap();
        assert_eq!(max_pairwise_fidelity(&e), 0.0);
        assert!(equal_overlap_ensemble(3, 1.0).is_err());
        assert!(equal_overlap_ensemble(3, -0.1).is_err());
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let e = haar_random(4, 4, 7).unwrap();
        let text = to_json(&e);
        let back = from_json(&text).unwrap();
        assert_eq!(back, e);
        assert_eq!(to_json(&back), text);
    }

    #[test]
    fn file_errors() {
        assert!(matches!(from_json("{"), Err(Error::Format(_))));
        let wrong_m = r#"{"d":1,"m":3,"states":[[[1,0]],[[1,0]]]}"#;
        assert!(matches!(from_json(wrong_m), Err(Error::Format(_))));
        let wrong_d = r#"{"d":2,"m":2,"states":[[[1,0]],[[1,0]]]}"#;
        assert!(matches!(from_json(wrong_d), Err(Error::Format(_))));
        let unnormalized = r#"{"d":1,"m":2,"states":[[[1,0]],[[2,0]]]}"#;
        assert!(matches!(
            from_json(unnormalized),
            Err(Error::NotNormalized { index: 1, .. })
        ));
    }

    #[test]
    fn gram_json_accepts_real_and_complex() {
        let g = gram_from_json("[[1, 0.6], [0.6, 1]]").unwrap();
        assert!((g.get(0, 1).re - 0.6).abs() < 1e-15);
        let g = gram_from_json("[[1, [0, 0.5]], [[0, -0.5], 1]]").unwrap();
        assert!((g.get(0, 1).im - 0.5).abs() < 1e-15);
        assert!(gram_from_json("[[1, 2], [2, 1]]").is_err());
    }

    #[test]
    fn permutation_validation() {
        let e = haar_random(3, 3, 1).unwrap();
        assert!(e.permuted(&[2, 0, 1]).is_ok());
        assert!(e.permuted(&[0, 0, 1]).is_err());
        assert!(e.permuted(&[0, 1]).is_err());
    }
}
