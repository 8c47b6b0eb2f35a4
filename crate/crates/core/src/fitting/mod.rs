//! Least-squares MTE approximations of univariate functions, the fixed
//! templates, and composition of polynomial utilities from linear fits.
//!
//! Each piece is fitted as `a0 + sum_i a_i e^{b_i x}` by variable
//! projection: a simplex search runs over the exponents only, and for each
//! exponent vector the coefficients are the exact linear least-squares
//! solution. Several seeded starts are tried per piece and the best kept.

mod compose;
pub mod simplex;
pub mod templates;

pub use compose::{compose_polynomial_utility, Monomial};
pub use templates::{
    beta_pdf, lognormal_oil_price, normal_pdf, normal_template, normal_template_on, uniform_on,
    unnormalized_normal_template,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MteError, Result};
use crate::potential::{ExpTerm, MtePotential, Piece, PotentialKind};
use crate::region::Interval;
use crate::variable::Variable;

pub const DEFAULT_GRID: usize = 101;
pub const DEFAULT_STARTS: usize = 8;
/// Starting exponents are drawn uniformly from `[-EXP_START, EXP_START]`,
/// in units of the piece's half-width.
pub const EXP_START: f64 = 5.0;
/// Singular values below this fraction of the largest are discarded.
const RCOND: f64 = 1e-12;
const SIMPLEX_EVALS: usize = 4000;
/// Coefficient bound of [`fit_linear_mte`] relative to the interval scale.
pub const LINEAR_COEF_FACTOR: f64 = 100.0;

/// What to fit and how.
pub struct FitSpec<'a> {
    pub target: &'a dyn Fn(f64) -> f64,
    pub interval: (f64, f64),
    pub split_points: Vec<f64>,
    pub terms_per_piece: usize,
    pub grid_n: usize,
    pub normalize_after: bool,
    pub seed: u64,
    /// Largest coefficient magnitude accepted (in the scaled coordinate).
    /// Exponent vectors needing larger coefficients score as +inf.
    pub coef_bound: f64,
}

impl<'a> FitSpec<'a> {
    pub fn new(target: &'a dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Self {
        FitSpec {
            target,
            interval: (lo, hi),
            split_points: Vec::new(),
            terms_per_piece: 3,
            grid_n: DEFAULT_GRID,
            normalize_after: false,
            seed: 0,
            coef_bound: f64::INFINITY,
        }
    }

    pub fn splits(mut self, points: &[f64]) -> Self {
        self.split_points = points.to_vec();
        self
    }

    pub fn terms(mut self, m: usize) -> Self {
        self.terms_per_piece = m;
        self
    }

    pub fn grid(mut self, n: usize) -> Self {
        self.grid_n = n;
        self
    }

    pub fn normalized(mut self, yes: bool) -> Self {
        self.normalize_after = yes;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn coef_bound(mut self, bound: f64) -> Self {
        self.coef_bound = bound;
        self
    }

    /// Piece boundaries, `lo` and `hi` included.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![self.interval.0];
        b.extend(&self.split_points);
        b.push(self.interval.1);
        b
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.interval;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(MteError::BadInterval { lo, hi });
        }
        if !self.breakpoints().windows(2).all(|w| w[0] < w[1]) {
            return Err(MteError::BadFitSpec(
                "split points must increase strictly inside the interval".into(),
            ));
        }
        if self.terms_per_piece < 1 {
            return Err(MteError::BadFitSpec("at least one term per piece".into()));
        }
        if self.grid_n < 2 * self.terms_per_piece + 1 {
            return Err(MteError::BadFitSpec(format!(
                "grid_n must be at least {} for {} terms",
                2 * self.terms_per_piece + 1,
                self.terms_per_piece
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub potential: MtePotential,
    /// Sum of squared errors over the sample points of every piece.
    pub sse: f64,
    /// Largest absolute error over the same points.
    pub max_abs_error: f64,
}

/// Evenly spaced sample points, both ends included.
pub fn sample_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|j| if j + 1 == n { hi } else { lo + h * j as f64 })
        .collect()
}

/// Best coefficients `[a0, a1..am]` for exponents `b` (in the scaled
/// coordinate `s`) and their sum of squared errors.
fn solve_coefficients(s: &[f64], y: &DVector<f64>, b: &[f64], bound: f64) -> (Vec<f64>, f64) {
    let m = b.len();
    let design = DMatrix::from_fn(s.len(), m + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            libm::exp(b[j - 1] * s[i])
        }
    });
    if design.iter().any(|v| !v.is_finite()) {
        return (vec![0.0; m + 1], f64::INFINITY);
    }
    let svd = design.clone().svd(true, true);
    let cutoff = svd.singular_values.max() * RCOND;
    let Ok(coef) = svd.solve(y, cutoff) else {
        return (vec![0.0; m + 1], f64::INFINITY);
    };
    if coef.iter().any(|c| c.abs() > bound) {
        return (coef.iter().copied().collect(), f64::INFINITY);
    }
    let resid = &design * &coef - y;
    let sse = resid.norm_squared();
    (
        coef.iter().copied().collect(),
        if sse.is_finite() { sse } else { f64::INFINITY },
    )
}

/// Fits one piece on `[lo, hi]`; returns constant and terms in plain-`x` form.
fn fit_piece(
    spec: &FitSpec<'_>,
    lo: f64,
    hi: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<ExpTerm>)> {
    let (target, m, grid_n, bound) = (
        spec.target,
        spec.terms_per_piece,
        spec.grid_n,
        spec.coef_bound,
    );
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let xs = sample_points(lo, hi, grid_n);
    let s: Vec<f64> = xs.iter().map(|x| (x - mid) / half).collect();
    let y = DVector::from_iterator(xs.len(), xs.iter().map(|&x| target(x)));
    if y.iter().any(|v| !v.is_finite()) {
        return Err(MteError::BadFitSpec(
            "target is not finite on the interval".into(),
        ));
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..DEFAULT_STARTS {
        let start: Vec<f64> = (0..m)
            .map(|_| rng.random_range(-EXP_START..=EXP_START))
            .collect();
        let objective = |b: &[f64]| solve_coefficients(&s, &y, b, bound).1;
        let mut run = simplex::minimize(objective, &start, 0.5, SIMPLEX_EVALS, 1e-18);
        // One restart from the result shakes off a collapsed simplex.
        let again = simplex::minimize(objective, &run.x, 0.1, SIMPLEX_EVALS, 1e-18);
        if again.value <= run.value {
            run = again;
        }
        if run.value.is_finite() && best.as_ref().is_none_or(|(_, v)| run.value < *v) {
            best = Some((run.x, run.value));
        }
    }
    let (b, _) = best.ok_or(MteError::FitDiverged)?;
    let (coef, _) = solve_coefficients(&s, &y, &b, bound);
    let terms = b
        .iter()
        .zip(&coef[1..])
        .map(|(&bs, &c)| {
            let bx = bs / half;
            ExpTerm {
                coef: c * libm::exp(-bx * mid),
                exps: vec![bx],
            }
        })
        .collect();
    Ok((coef[0], terms))
}

/// Error metrics of `potential` against `target` at the fit sample points.
pub fn residuals(
    potential: &MtePotential,
    target: &dyn Fn(f64) -> f64,
    breakpoints: &[f64],
    grid_n: usize,
) -> (f64, f64) {
    let mut sse = 0.0;
    let mut max_abs: f64 = 0.0;
    for w in breakpoints.windows(2) {
        for x in sample_points(w[0], w[1], grid_n) {
            let e = target(x) - potential.eval_at(&[], &[x]);
            sse += e * e;
            max_abs = max_abs.max(e.abs());
        }
    }
    (sse, max_abs)
}

/// Least-squares MTE approximation of `spec.target` over a continuous
/// variable named `var` supported on `spec.interval`.
pub fn fit_pdf(var: &str, spec: &FitSpec<'_>) -> Result<FitResult> {
    spec.validate()?;
    let variable = Variable::continuous(var, spec.interval.0, spec.interval.1);
    let breaks = spec.breakpoints();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pieces = Vec::with_capacity(breaks.len() - 1);
    for (i, w) in breaks.windows(2).enumerate() {
        let (constant, terms) = fit_piece(spec, w[0], w[1], &mut rng)?;
        let closed = i + 2 == breaks.len();
        pieces.push(Piece {
            states: vec![],
            bounds: vec![Interval {
                lo: w[0],
                hi: w[1],
                closed,
            }],
            constant,
            terms,
        });
    }
    let mut potential =
        MtePotential::from_pieces(vec![variable], pieces, PotentialKind::Probability)?;
    if spec.normalize_after {
        potential = potential.normalize_density(var)?;
    }
    let (sse, max_abs_error) = residuals(&potential, spec.target, &breaks, spec.grid_n);
    if !sse.is_finite() {
        return Err(MteError::FitDiverged);
    }
    Ok(FitResult {
        potential,
        sse,
        max_abs_error,
    })
}

/// Fits `a0 + a1 e^{a2 x}` to the identity on `[lo, hi]`, as a single-piece
/// utility potential over `var`.
///
/// The exact optimum is the degenerate limit `a2 -> 0` with unbounded
/// coefficients, whose products cancel catastrophically. Coefficients are
/// therefore held to [`LINEAR_COEF_FACTOR`] times the interval's scale.
pub fn fit_linear_mte(var: &str, lo: f64, hi: f64, grid_n: usize) -> Result<FitResult> {
    if grid_n < 3 {
        return Err(MteError::BadFitSpec("grid_n must be at least 3".into()));
    }
    let identity = |x: f64| x;
    let scale = (hi - lo).max(lo.abs()).max(hi.abs());
    let spec = FitSpec::new(&identity, lo, hi)
        .terms(1)
        .grid(grid_n)
        .coef_bound(LINEAR_COEF_FACTOR * scale);
    let mut r = fit_pdf(var, &spec)?;
    r.potential = r.potential.with_kind(PotentialKind::Utility);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_exact() {
        let target = |x: f64| beta_pdf(1.0, 1.0, x);
        let r = fit_pdf("r", &FitSpec::new(&target, 0.0, 1.0).terms(1)).unwrap();
        assert!(r.max_abs_error < 1e-6, "{}", r.max_abs_error);
    }

    #[test]
    fn linear_fit_is_close() {
        let r = fit_linear_mte("x", 0.0, 1.0, 101).unwrap();
        assert!(r.max_abs_error < 0.01, "{}", r.max_abs_error);
    }

    #[test]
    fn bad_specs() {
        let t = |x: f64| x;
        assert_eq!(
            fit_pdf("x", &FitSpec::new(&t, 1.0, 0.0))
                .unwrap_err()
                .code(),
            "E_BAD_INTERVAL"
        );
        assert_eq!(
            fit_pdf("x", &FitSpec::new(&t, 0.0, 1.0).splits(&[1.5]))
                .unwrap_err()
                .code(),
            "E_BAD_FIT_SPEC"
        );
        assert_eq!(
            fit_pdf("x", &FitSpec::new(&t, 0.0, 1.0).grid(5))
                .unwrap_err()
                .code(),
            "E_BAD_FIT_SPEC"
        );
        assert_eq!(
            fit_pdf("x", &FitSpec::new(&t, 0.0, 1.0).terms(0))
                .unwrap_err()
                .code(),
            "E_BAD_FIT_SPEC"
        );
    }

    #[test]
    fn same_seed_same_fit() {
        let t = |x: f64| beta_pdf(2.0, 2.0, x);
        let a = fit_pdf("x", &FitSpec::new(&t, 0.0, 1.0).terms(2).seed(7)).unwrap();
        let b = fit_pdf("x", &FitSpec::new(&t, 0.0, 1.0).terms(2).seed(7)).unwrap();
        assert_eq!(a.potential, b.potential);
    }
}
