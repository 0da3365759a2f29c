//! Closed-form lower bounds on the worst-case PGM success probability and
//! the polynomial certificates comparing them.
//!
//! With `F = max_{i≠j} |⟨v_i|v_j⟩|²`:
//!
//! * linear bound: `1 - mF`
//! * refined bound: `(1 - 4(m-1)F²)² / (1 + mF²)`
//! * sequential bound: `1 - 4(m-1)F² + ⟨v_k|M_surv|v_k⟩ / m`, worst over `k`
//!
//! Dominance of the refined bound over the linear one for `m ≥ 4` reduces to
//! positivity of `h(F, m) = 16(m-1)²F³ + m²F² - 8(m-1)F - mF + m`, because
//! `g(F, m) = (1 - 4(m-1)F²)² - (1 + mF²)(1 - mF) = F·h(F, m)`.
//!
//! Polynomials take `m` as `f64` so that monotonicity in `m` can be probed
//! between integers.

use crate::ensemble::{max_pairwise_fidelity, StateEnsemble};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pgm::pgm_success;
use crate::sma::{exact_distribution, sm_success};

/// `1 - 4(m-1)F²`.
pub fn union_term(m: usize, f: f64) -> f64 {
    1.0 - 4.0 * (m as f64 - 1.0) * f * f
}

/// `1 - mF`, unclamped.
pub fn linear_bound(m: usize, f: f64) -> f64 {
    1.0 - m as f64 * f
}

/// `(1 - 4(m-1)F²)² / (1 + mF²)`, unclamped.
pub fn refined_bound(m: usize, f: f64) -> f64 {
    union_term(m, f).powi(2) / (1.0 + m as f64 * f * f)
}

/// Right-hand side of the sequential bound for each input state.
pub fn eq3_per_state(e: &StateEnsemble) -> Vec<f64> {
    let m = e.count();
    let u = union_term(m, max_pairwise_fidelity(e));
    (0..m)
        .map(|k| {
            let dist = exact_distribution(e, k).expect("index in range");
            u + dist.probs[m] / m as f64
        })
        .collect()
}

/// Worst case over inputs of [`eq3_per_state`].
pub fn eq3_lower_bound(e: &StateEnsemble) -> f64 {
    eq3_per_state(e).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn g_poly(f: f64, m: f64) -> f64 {
    (1.0 - 4.0 * (m - 1.0) * f * f).powi(2) - (1.0 + m * f * f) * (1.0 - m * f)
}

/// Magnitude of the largest term in [`g_poly`]; the scale of its rounding
/// error.
pub fn g_scale(f: f64, m: f64) -> f64 {
    let a = (1.0 - 4.0 * (m - 1.0) * f * f).powi(2);
    let b = ((1.0 + m * f * f) * (1.0 - m * f)).abs();
    a.max(b).max(1.0)
}

pub fn h_poly(f: f64, m: f64) -> f64 {
    16.0 * (m - 1.0).powi(2) * f.powi(3) + m * m * f * f - 8.0 * (m - 1.0) * f - m * f + m
}

/// `∂h/∂F`.
pub fn dh_df(f: f64, m: f64) -> f64 {
    48.0 * (m - 1.0).powi(2) * f * f + 2.0 * m * m * f - (9.0 * m - 8.0)
}

/// `∂²h/∂F²`.
pub fn d2h_df2(f: f64, m: f64) -> f64 {
    96.0 * (m - 1.0).powi(2) * f + 2.0 * m * m
}

/// `∂h/∂m = 32F³(m-1) + 2mF² - 9F + 1`.
pub fn dh_dm(f: f64, m: f64) -> f64 {
    32.0 * f.powi(3) * (m - 1.0) + 2.0 * m * f * f - 9.0 * f + 1.0
}

/// `p(F) = 96F³ + 8F² - 9F + 1`, the value of `∂h/∂m` at `m = 4`.
pub fn p_poly(f: f64) -> f64 {
    96.0 * f.powi(3) + 8.0 * f * f - 9.0 * f + 1.0
}

pub fn dp_df(f: f64) -> f64 {
    288.0 * f * f + 16.0 * f - 9.0
}

pub fn d2p_df2(f: f64) -> f64 {
    576.0 * f + 16.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Positive,
    Negative,
}

/// A stationary point of a cubic on `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub location: f64,
    pub value: f64,
    /// First derivative at `location`; zero up to rounding.
    pub slope: f64,
    pub second_derivative: f64,
    pub curvature: Curvature,
}

impl CriticalPoint {
    fn new(location: f64, value: f64, slope: f64, second_derivative: f64) -> Self {
        Self {
            location,
            value,
            slope,
            second_derivative,
            curvature: if second_derivative > 0.0 {
                Curvature::Positive
            } else {
                Curvature::Negative
            },
        }
    }

    pub fn is_minimum(&self) -> bool {
        self.curvature == Curvature::Positive
    }
}

/// Positive root of `a x² + b x + c` with `a > 0`, `c < 0`.
fn positive_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b - 4.0 * a * c).sqrt();
    // the cancellation-free form of (-b + disc) / 2a
    if b >= 0.0 {
        -2.0 * c / (b + disc)
    } else {
        (-b + disc) / (2.0 * a)
    }
}

/// Minimum of `h(·, m)` on `(0, 1]`, at the positive root of `∂h/∂F`.
pub fn h_critical_point(m: usize) -> Result<CriticalPoint> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "m must be at least 2, got {m}"
        )));
    }
    let mf = m as f64;
    let a = 48.0 * (mf - 1.0).powi(2);
    let b = 2.0 * mf * mf;
    let c = -(9.0 * mf - 8.0);
    let x = positive_root(a, b, c);
    Ok(CriticalPoint::new(
        x,
        h_poly(x, mf),
        dh_df(x, mf),
        d2h_df2(x, mf),
    ))
}

/// Minimum of `p` on `(0, 1]`, at the positive root of `p'`.
pub fn p_critical_point() -> CriticalPoint {
    let x = positive_root(288.0, 16.0, -9.0);
    CriticalPoint::new(x, p_poly(x), dp_df(x), d2p_df2(x))
}

/// `{step, 2·step, …}` up to 1, inclusive when `1/step` is an integer.
pub fn fidelity_grid(step: f64) -> Vec<f64> {
    let ratio = 1.0 / step;
    let n = ratio.round();
    if (ratio - n).abs() < 1e-9 * n.max(1.0) {
        let n = n as usize;
        (1..=n).map(|k| k as f64 / n as f64).collect()
    } else {
        let n = ratio.floor() as usize;
        (1..=n).map(|k| k as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AppendixCheck {
    /// `h(F, m) > 0`.
    HPositive,
    /// `|g - F·h| ≤ 1e-12 · g_scale`.
    Factorization,
    /// `refined > linear`.
    Dominance,
    /// `∂h/∂m > 0`, for `m > 4`.
    DhDmPositive,
    /// `∂h/∂m ≥ p(F)`, for `m ≥ 4`.
    DhDmAboveP,
    /// `h(F, m+1) > h(F, m)`.
    IncreasingInM,
    /// `h(F, m+½) > h(F, m)`.
    IncreasingBetweenIntegers,
}

impl AppendixCheck {
    pub const ALL: [AppendixCheck; 7] = [
        AppendixCheck::HPositive,
        AppendixCheck::Factorization,
        AppendixCheck::Dominance,
        AppendixCheck::DhDmPositive,
        AppendixCheck::DhDmAboveP,
        AppendixCheck::IncreasingInM,
        AppendixCheck::IncreasingBetweenIntegers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AppendixCheck::HPositive => "h_positive",
            AppendixCheck::Factorization => "g_equals_f_times_h",
            AppendixCheck::Dominance => "refined_gt_linear",
            AppendixCheck::DhDmPositive => "dh_dm_positive",
            AppendixCheck::DhDmAboveP => "dh_dm_ge_p",
            AppendixCheck::IncreasingInM => "h_increasing_in_m",
            AppendixCheck::IncreasingBetweenIntegers => "h_increasing_half_step",
        }
    }
}

/// Relative tolerance of the `g = F·h` identity.
pub const FACTORIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridViolation {
    pub check: AppendixCheck,
    pub f: f64,
    pub m: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckTally {
    pub check: AppendixCheck,
    pub evaluated: usize,
    pub violations: usize,
}

/// Location of an extreme value on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridExtremum {
    pub value: f64,
    pub f: f64,
    pub m: usize,
}

impl GridExtremum {
    fn none() -> Self {
        Self {
            value: f64::INFINITY,
            f: f64::NAN,
            m: 0,
        }
    }

    fn take_min(&mut self, value: f64, f: f64, m: usize) {
        if value < self.value {
            *self = Self { value, f, m };
        }
    }
}

/// Dominance outcome for an `m` below the range where dominance is claimed; recorded, never
/// asserted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeControl {
    pub m: usize,
    pub points: usize,
    pub points_without_dominance: usize,
    pub first_without_dominance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationSummary {
    pub grid_step: f64,
    pub grid_points: usize,
    pub m_max: usize,
    pub cells: usize,
    pub tallies: Vec<CheckTally>,
    pub violations: Vec<GridViolation>,
    pub min_h: GridExtremum,
    pub min_h_at_m4: GridExtremum,
    pub min_dominance_margin: GridExtremum,
    pub min_dh_dm: GridExtremum,
    pub max_factorization_residual: f64,
    pub h_critical: CriticalPoint,
    pub p_critical: CriticalPoint,
    pub negative_controls: Vec<NegativeControl>,
}

impl VerificationSummary {
    /// True when the grid is clean and both closed-form minima are positive
    /// minima.
    pub fn is_certified(&self) -> bool {
        self.violations.is_empty()
            && self.h_critical.is_minimum()
            && self.h_critical.value > 0.0
            && self.p_critical.is_minimum()
            && self.p_critical.value > 0.0
    }

    pub fn tally(&self, check: AppendixCheck) -> CheckTally {
        *self
            .tallies
            .iter()
            .find(|t| t.check == check)
            .expect("every check is tallied")
    }
}

struct RowResult {
    m: usize,
    evaluated: Vec<(AppendixCheck, usize)>,
    violations: Vec<GridViolation>,
    min_h: GridExtremum,
    min_margin: GridExtremum,
    min_dh_dm: GridExtremum,
    max_residual: f64,
}

fn check_row(m: usize, grid: &[f64]) -> RowResult {
    let mf = m as f64;
    let mut row = RowResult {
        m,
        evaluated: Vec::new(),
        violations: Vec::new(),
        min_h: GridExtremum::none(),
        min_margin: GridExtremum::none(),
        min_dh_dm: GridExtremum::none(),
        max_residual: 0.0,
    };
    let mut counts = [0usize; 7];
    let mut record = |check: AppendixCheck, ok: bool, f: f64, value: f64, row: &mut RowResult| {
        counts[check as usize] += 1;
        if !ok {
            row.violations.push(GridViolation { check, f, m, value });
        }
    };
    for &f in grid {
        let h = h_poly(f, mf);
        row.min_h.take_min(h, f, m);
        record(AppendixCheck::HPositive, h > 0.0, f, h, &mut row);

        let residual = (g_poly(f, mf) - f * h).abs() / g_scale(f, mf);
        row.max_residual = row.max_residual.max(residual);
        record(
            AppendixCheck::Factorization,
            residual <= FACTORIZATION_TOL,
            f,
            residual,
            &mut row,
        );

        let margin = refined_bound(m, f) - linear_bound(m, f);
        row.min_margin.take_min(margin, f, m);
        record(AppendixCheck::Dominance, margin > 0.0, f, margin, &mut row);

        let slope = dh_dm(f, mf);
        row.min_dh_dm.take_min(slope, f, m);
        if m > 4 {
            record(AppendixCheck::DhDmPositive, slope > 0.0, f, slope, &mut row);
        }
        let gap = slope - p_poly(f);
        record(
            AppendixCheck::DhDmAboveP,
            gap >= -1e-12 * slope.abs().max(1.0),
            f,
            gap,
            &mut row,
        );

        let step = h_poly(f, mf + 1.0) - h;
        record(AppendixCheck::IncreasingInM, step > 0.0, f, step, &mut row);
        let half = h_poly(f, mf + 0.5) - h;
        record(
            AppendixCheck::IncreasingBetweenIntegers,
            half > 0.0,
            f,
            half,
            &mut row,
        );
    }
    row.evaluated = AppendixCheck::ALL
        .iter()
        .map(|&c| (c, counts[c as usize]))
        .collect();
    row
}

fn negative_control(m: usize, grid: &[f64]) -> NegativeControl {
    let failing: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|&f| refined_bound(m, f) <= linear_bound(m, f))
        .collect();
    NegativeControl {
        m,
        points: grid.len(),
        points_without_dominance: failing.len(),
        first_without_dominance: failing.first().copied(),
    }
}

/// Checks every claim of the `h > 0` positivity argument on the grid
/// `F ∈ {step, 2·step, …, 1}`, `m ∈ {4, …, m_max}`, and evaluates the
/// closed-form minima of `h(·, 4)` and `p`. `m = 2, 3` are reported as
/// negative controls.
pub fn verify_appendix(grid_step: f64, m_max: usize, exec: Exec) -> Result<VerificationSummary> {
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(Error::InvalidParameter(format!(
            "grid step must lie in (0, 0.01], got {grid_step}"
        )));
    }
    if m_max < 4 {
        return Err(Error::InvalidParameter(format!(
            "m_max must be at least 4, got {m_max}"
        )));
    }
    let grid = fidelity_grid(grid_step);
    let rows = exec.map_indices(m_max - 3, |i| check_row(i + 4, &grid));

    let mut tallies: Vec<CheckTally> = AppendixCheck::ALL
        .iter()
        .map(|&check| CheckTally {
            check,
            evaluated: 0,
            violations: 0,
        })
        .collect();
    let mut violations = Vec::new();
    let mut min_h = GridExtremum::none();
    let mut min_h_at_m4 = GridExtremum::none();
    let mut min_margin = GridExtremum::none();
    let mut min_dh_dm = GridExtremum::none();
    let mut max_residual = 0.0f64;
    for row in rows {
        for (check, n) in &row.evaluated {
            tallies[*check as usize].evaluated += n;
        }
        for v in &row.violations {
            tallies[v.check as usize].violations += 1;
        }
        violations.extend(row.violations);
        min_h.take_min(row.min_h.value, row.min_h.f, row.min_h.m);
        if row.m == 4 {
            min_h_at_m4 = row.min_h;
        }
        min_margin.take_min(row.min_margin.value, row.min_margin.f, row.min_margin.m);
        if row.m > 4 {
            min_dh_dm.take_min(row.min_dh_dm.value, row.min_dh_dm.f, row.min_dh_dm.m);
        }
        max_residual = max_residual.max(row.max_residual);
    }

    Ok(VerificationSummary {
        grid_step,
        grid_points: grid.len(),
        m_max,
        cells: grid.len() * (m_max - 3),
        tallies,
        violations,
        min_h,
        min_h_at_m4,
        min_dominance_margin: min_margin,
        min_dh_dm,
        max_factorization_residual: max_residual,
        h_critical: h_critical_point(4)?,
        p_critical: p_critical_point(),
        negative_controls: vec![negative_control(2, &grid), negative_control(3, &grid)],
    })
}

/// Which bounds an evaluated instance satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dominance {
    pub refined_ge_linear: bool,
    pub pgm_ge_refined: Option<bool>,
    pub pgm_ge_linear: Option<bool>,
    pub sm_ge_eq3: Option<bool>,
}

/// Closed-form bounds for `(m, F)`, optionally with the exact success
/// probabilities of a concrete ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub m: usize,
    pub d: Option<usize>,
    pub f: f64,
    pub linear: f64,
    pub refined: f64,
    pub union_term: f64,
    pub eq3: Option<f64>,
    pub pgm_exact: Option<f64>,
    pub sm_exact: Option<f64>,
}

impl BoundReport {
    pub fn closed_form(m: usize, f: f64) -> Self {
        Self {
            m,
            d: None,
            f,
            linear: linear_bound(m, f),
            refined: refined_bound(m, f),
            union_term: union_term(m, f),
            eq3: None,
            pgm_exact: None,
            sm_exact: None,
        }
    }

    pub fn for_ensemble(e: &StateEnsemble) -> Result<Self> {
        let f = max_pairwise_fidelity(e);
        Ok(Self {
            d: Some(e.dim()),
            eq3: Some(eq3_lower_bound(e)),
            pgm_exact: Some(pgm_success(e)?.worst_case),
            sm_exact: Some(sm_success(e)),
            ..Self::closed_form(e.count(), f)
        })
    }

    /// Flags recomputed from the stored values; `tol` is the slack allowed
    /// on each inequality.
    pub fn dominance(&self, tol: f64) -> Dominance {
        Dominance {
            refined_ge_linear: self.refined >= self.linear - tol,
            pgm_ge_refined: self.pgm_exact.map(|p| p >= self.refined - tol),
            pgm_ge_linear: self.pgm_exact.map(|p| p >= self.linear - tol),
            sm_ge_eq3: self.sm_exact.zip(self.eq3).map(|(s, b)| s >= b - tol),
        }
    }
}
