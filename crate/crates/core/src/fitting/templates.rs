//! Fixed MTE approximations: the two-piece normal, the four-piece lognormal
//! oil price density, and the uniform density.

use alloc::vec;

use crate::error::{MteError, Result};
use crate::potential::{ExpTerm, MtePotential, Piece, PotentialKind};
use crate::region::Interval;
use crate::variable::Variable;

/// Constant of the standard two-piece normal approximation.
pub const NORMAL_CONSTANT: f64 = -0.0105643;
/// `(coefficient, exponent)` pairs of the standard normal approximation on
/// the left half, in the standardized coordinate; the right half mirrors
/// the exponents.
pub const NORMAL_TERMS: [(f64, f64); 3] = [
    (197.0557202, 2.2568434),
    (-461.4392506, 2.3434117),
    (264.7930371, 2.4043270),
];
/// Mass of the unnormalized approximation over `[mu - 3 sigma, mu + 3 sigma]`.
pub const NORMAL_MASS: f64 = 0.9973;

/// Breakpoints of the oil price density.
pub const OIL_PRICE_BREAKS: [f64; 5] = [1.86706, 3.47531, 9.44687, 15.57526, 129.93107];
/// Shift used in the printed exponents `b * (p - shift)`.
pub const OIL_PRICE_SHIFT: f64 = 9.44687;
/// Per piece: constant, then `(coefficient, exponent)` pairs in the shifted
/// coordinate.
pub const OIL_PRICE_PIECES: [(f64, [(f64, f64); 2]); 4] = [
    (-0.024921, [(0.186834, 0.249714), (0.101347, 1.419659)]),
    (0.174804, [(-0.062119, -0.116729), (-0.066038, 0.116608)]),
    (
        0.049064,
        [(0.000000154912, 1.480552), (-0.002427, 0.287079)],
    ),
    (-0.583002, [(0.057534, -0.079477), (0.584025, -0.000015)]),
];

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(MteError::BadSigma(sigma))
    }
}

/// Two-piece, three-term approximation of the `N(mu, sigma^2)` density
/// before division by [`NORMAL_MASS`], over a variable of the given name
/// supported on `[mu - 3 sigma, mu + 3 sigma]`.
pub fn unnormalized_normal_template(var: &str, mu: f64, sigma: f64) -> Result<MtePotential> {
    check_sigma(sigma)?;
    let v = Variable::continuous(var, mu - 3.0 * sigma, mu + 3.0 * sigma);
    normal_pieces(v, mu, sigma, 1.0)
}

/// The normal approximation divided by [`NORMAL_MASS`].
pub fn normal_template(var: &str, mu: f64, sigma: f64) -> Result<MtePotential> {
    check_sigma(sigma)?;
    let v = Variable::continuous(var, mu - 3.0 * sigma, mu + 3.0 * sigma);
    normal_pieces(v, mu, sigma, NORMAL_MASS)
}

/// The normal approximation over an existing variable whose support covers
/// `[mu - 3 sigma, mu + 3 sigma]`; zero elsewhere on that support.
pub fn normal_template_on(var: &Variable, mu: f64, sigma: f64) -> Result<MtePotential> {
    check_sigma(sigma)?;
    let (lo, hi) = var
        .support()
        .ok_or_else(|| MteError::NotContinuous(var.name.clone()))?;
    if lo > mu - 3.0 * sigma || hi < mu + 3.0 * sigma {
        return Err(MteError::Domain(alloc::format!(
            "support of `{}` does not cover [{}, {}]",
            var.name,
            mu - 3.0 * sigma,
            mu + 3.0 * sigma
        )));
    }
    normal_pieces(var.clone(), mu, sigma, NORMAL_MASS)
}

fn normal_pieces(var: Variable, mu: f64, sigma: f64, mass: f64) -> Result<MtePotential> {
    let scale = 1.0 / (sigma * mass);
    let half = |sign: f64| -> (f64, vec::Vec<ExpTerm>) {
        let terms = NORMAL_TERMS
            .iter()
            .map(|&(a, b)| {
                let bx = sign * b / sigma;
                ExpTerm {
                    coef: a * scale * libm::exp(-bx * mu),
                    exps: vec![bx],
                }
            })
            .collect();
        (NORMAL_CONSTANT * scale, terms)
    };
    let (c_left, t_left) = half(1.0);
    let (c_right, t_right) = half(-1.0);
    MtePotential::from_pieces(
        vec![var],
        vec![
            Piece {
                states: vec![],
                bounds: vec![Interval::half_open(mu - 3.0 * sigma, mu)],
                constant: c_left,
                terms: t_left,
            },
            Piece {
                states: vec![],
                bounds: vec![Interval::closed(mu, mu + 3.0 * sigma)],
                constant: c_right,
                terms: t_right,
            },
        ],
        PotentialKind::Probability,
    )
}

/// The four-piece lognormal oil price density, with the printed
/// coefficients and the shift folded into plain-`p` form.
pub fn lognormal_oil_price(var: &str) -> MtePotential {
    let v = Variable::continuous(var, OIL_PRICE_BREAKS[0], OIL_PRICE_BREAKS[4]);
    let pieces = OIL_PRICE_PIECES
        .iter()
        .enumerate()
        .map(|(i, (c, terms))| Piece {
            states: vec![],
            bounds: vec![Interval {
                lo: OIL_PRICE_BREAKS[i],
                hi: OIL_PRICE_BREAKS[i + 1],
                closed: i == 3,
            }],
            constant: *c,
            terms: terms
                .iter()
                .map(|&(a, b)| ExpTerm {
                    coef: a * libm::exp(-b * OIL_PRICE_SHIFT),
                    exps: vec![b],
                })
                .collect(),
        })
        .collect();
    MtePotential::from_pieces(vec![v], pieces, PotentialKind::Probability)
        .expect("valid literal pieces")
}

/// Uniform density on `[lo, hi]` over an existing variable.
pub fn uniform_on(var: &Variable, lo: f64, hi: f64) -> Result<MtePotential> {
    if !(lo < hi) {
        return Err(MteError::BadInterval { lo, hi });
    }
    MtePotential::from_pieces(
        vec![var.clone()],
        vec![Piece {
            states: vec![],
            bounds: vec![Interval::closed(lo, hi)],
            constant: 1.0 / (hi - lo),
            terms: vec![],
        }],
        PotentialKind::Probability,
    )
}

/// Density of `Beta(a, b)` at `x`; zero outside `[0, 1]`.
pub fn beta_pdf(a: f64, b: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    if (x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0) {
        return f64::INFINITY;
    }
    let ln_norm = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b);
    let lx = if a == 1.0 {
        0.0
    } else {
        (a - 1.0) * libm::log(x)
    };
    let l1x = if b == 1.0 {
        0.0
    } else {
        (b - 1.0) * libm::log1p(-x)
    };
    libm::exp(ln_norm + lx + l1x)
}

/// Density of `N(mu, sigma^2)` at `x`.
pub fn normal_pdf(mu: f64, sigma: f64, x: f64) -> f64 {
    let z = (x - mu) / sigma;
    libm::exp(-0.5 * z * z) / (sigma * libm::sqrt(2.0 * core::f64::consts::PI))
}
