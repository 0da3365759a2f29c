//! Dense complex Hermitian linear algebra.
//!
//! Everything the discrimination code needs reduces to functions of a
//! Hermitian operator: `S^{-1/2}`, `S^{±1/4}`, `S^{1/2}` and the projector onto
//! the support of `S`. These are all evaluated through one
//! [`EigenDecomposition`], so a caller that needs several powers of the same
//! operator pays for a single diagonalization.
//!
//! Dimensions stay small (at most a few dozen), so plain dense storage is used
//! throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Max-abs tolerance on `H - H†` accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Complex dense matrix, column-major.
pub type CMatrix = DMatrix<Complex64>;
/// Complex dense column vector.
pub type CVector = DVector<Complex64>;

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    /// Validates `matrix` against [`HERMITIAN_TOL`] and stores its exactly
    /// Hermitian part.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let asym = max_asymmetry(&matrix);
        if asym.is_nan() || asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
            });
        }
        Ok(Self::hermitize(matrix))
    }

    /// Replaces `matrix` by `(matrix + matrix†) / 2` without validation.
    ///
    /// For products that are Hermitian in exact arithmetic (`A X A` with
    /// Hermitian `A`, `X`, or `L† L`) where only rounding breaks the symmetry.
    pub fn hermitize(matrix: CMatrix) -> Self {
        assert!(matrix.is_square(), "hermitize needs a square matrix");
        let adj = matrix.adjoint();
        Self {
            inner: (matrix + adj).scale(0.5),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: CMatrix::zeros(dim, dim),
        }
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let v = CVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self {
            inner: CMatrix::from_diagonal(&v),
        }
    }

    /// Rank-one projector-like operator `|v⟩⟨v|`.
    pub fn outer(v: &CVector) -> Self {
        Self {
            inner: v * v.adjoint(),
        }
    }

    /// Real symmetric matrix given row by row.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows.iter().map(Vec::len).max().unwrap_or(0),
            });
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i][j], 0.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_inner(self) -> CMatrix {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    /// Trace; real for a Hermitian operator.
    pub fn trace(&self) -> f64 {
        self.inner.trace().re
    }

    /// `⟨v|H|v⟩`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.inner * v)).re
    }

    /// `Tr(H K)` for Hermitian `H`, `K`, without forming the product.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        // Tr(HK) = Σ_ij H_ij K_ji = Σ_ij H_ij conj(K_ij)
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(h, k)| (h * k.conj()).re)
            .sum()
    }

    /// `A H A` for Hermitian `A`; Hermitian by construction.
    pub fn sandwich(&self, outer: &HermitianMatrix) -> HermitianMatrix {
        Self::hermitize(&outer.inner * &self.inner * &outer.inner)
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        max_abs_diff(&self.inner, &other.inner)
    }
}

impl std::ops::Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl std::ops::Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl std::iter::Sum for HermitianMatrix {
    fn sum<I: Iterator<Item = HermitianMatrix>>(mut iter: I) -> Self {
        let first = iter.next().expect("sum of an empty operator family");
        iter.fold(first, |acc, x| &acc + &x)
    }
}

/// Largest `|H_ij - conj(H_ji)|`.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Relative threshold below which eigenvalues are treated as exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCutoff {
    relative_threshold: f64,
}

impl SpectralCutoff {
    pub const DEFAULT_THRESHOLD: f64 = 1e-10;

    pub fn new(relative_threshold: f64) -> Result<Self> {
        if relative_threshold > 0.0 && relative_threshold < 1.0 {
            Ok(Self { relative_threshold })
        } else {
            Err(Error::InvalidParameter(format!(
                "spectral cutoff must lie in (0, 1), got {relative_threshold}"
            )))
        }
    }

    pub fn relative_threshold(&self) -> f64 {
        self.relative_threshold
    }

    /// Absolute threshold for a spectrum whose largest magnitude is `scale`.
    pub fn absolute(&self, scale: f64) -> f64 {
        self.relative_threshold * scale
    }
}

impl Default for SpectralCutoff {
    fn default() -> Self {
        Self {
            relative_threshold: Self::DEFAULT_THRESHOLD,
        }
    }
}

/// Spectral data `H = V diag(λ) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the eigenvectors, in the order of [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude; the scale the cutoff is relative to.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }

    /// Number of eigenvalues above the cutoff in magnitude.
    pub fn rank(&self, cutoff: SpectralCutoff) -> usize {
        let tol = cutoff.absolute(self.spectral_radius());
        self.eigenvalues.iter().filter(|x| x.abs() > tol).count()
    }

    /// `V diag(f(λ)) V†`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fl = f(lam);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fl);
        }
        HermitianMatrix::hermitize(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|x| x)
    }

    /// `H^p` with eigenvalues of magnitude at or below the cutoff mapped to
    /// exactly zero. Negative eigenvalues beyond the cutoff are only accepted
    /// for integer `p`.
    pub fn power(&self, p: f64, cutoff: SpectralCutoff) -> Result<HermitianMatrix> {
        let tol = cutoff.absolute(self.spectral_radius());
        let integral = p.fract() == 0.0;
        let lowest = self.min_eigenvalue();
        if lowest < -tol && !integral {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: lowest,
            });
        }
        Ok(self.map(|lam| {
            if lam.abs() <= tol {
                0.0
            } else if integral {
                lam.powi(p as i32)
            } else {
                lam.powf(p)
            }
        }))
    }

    /// Orthogonal projector onto the eigenvectors with eigenvalue above the
    /// cutoff in magnitude.
    pub fn support_projector(&self, cutoff: SpectralCutoff) -> HermitianMatrix {
        let tol = cutoff.absolute(self.spectral_radius());
        self.map(|lam| if lam.abs() > tol { 1.0 } else { 0.0 })
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(h: &HermitianMatrix) -> EigenDecomposition {
    let n = h.dim();
    if n == 0 {
        return EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(h.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// `H^p` as a pseudo-power; see [`EigenDecomposition::power`].
pub fn spectral_power(
    h: &HermitianMatrix,
    p: f64,
    cutoff: SpectralCutoff,
) -> Result<HermitianMatrix> {
    eigh(h).power(p, cutoff)
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(h: &HermitianMatrix, tol: f64) -> bool {
    eigh(h).min_eigenvalue() >= -tol
}
