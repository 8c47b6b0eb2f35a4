//! Where two univariate potentials cross: grid bracketing plus bisection.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{MteError, Result};
use crate::potential::MtePotential;

pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Grid values with smaller magnitude count as touching zero.
pub const TOUCH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingSet {
    pub variable: String,
    pub roots: Vec<f64>,
    pub tolerance: f64,
}

fn sign(v: f64) -> i8 {
    if v.abs() < TOUCH_EPS {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Sign changes of `d` on `[l, u]`, each refined by bisection to width `tol`.
///
/// A run of grid points where `|d|` is below [`TOUCH_EPS`] counts as one
/// crossing (at the run's middle) only if the values on either side of the
/// run have opposite signs.
pub fn find_roots<F: Fn(f64) -> f64>(
    d: F,
    l: f64,
    u: f64,
    grid_n: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(l < u) {
        return Err(MteError::BadInterval { lo: l, hi: u });
    }
    let n = grid_n.max(2);
    let tol = if tol > 0.0 { tol } else { DEFAULT_TOL };
    let h = (u - l) / n as f64;
    let xs: Vec<f64> = (0..=n)
        .map(|i| if i == n { u } else { l + h * i as f64 })
        .collect();
    let signs: Vec<i8> = xs.iter().map(|&x| sign(d(x))).collect();

    let mut roots = Vec::new();
    let mut last: Option<usize> = None;
    for i in 0..=n {
        if signs[i] == 0 {
            continue;
        }
        if let Some(j) = last {
            if signs[j] != signs[i] {
                if j + 1 == i {
                    roots.push(bisect(&d, xs[j], xs[i], signs[j], tol));
                } else {
                    roots.push(0.5 * (xs[j + 1] + xs[i - 1]));
                }
            }
        }
        last = Some(i);
    }
    Ok(roots)
}

fn bisect<F: Fn(f64) -> f64>(d: &F, mut a: f64, mut b: f64, sign_a: i8, tol: f64) -> f64 {
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let v = d(m);
        if v == 0.0 {
            return m;
        }
        if (v > 0.0) == (sign_a > 0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Crossings of two potentials over the same single continuous variable.
pub fn find_crossings(
    f: &MtePotential,
    g: &MtePotential,
    interval: (f64, f64),
    grid_n: usize,
    tol: f64,
) -> Result<CrossingSet> {
    let (l, u) = interval;
    if !(l < u) {
        return Err(MteError::BadInterval { lo: l, hi: u });
    }
    let univariate = |p: &MtePotential| p.finite.is_empty() && p.continuous.len() == 1;
    if !univariate(f) || !univariate(g) || f.continuous[0].name != g.continuous[0].name {
        return Err(MteError::DomainMismatch(
            "crossings need two potentials over the same single continuous variable".into(),
        ));
    }
    let roots = find_roots(
        |x| f.eval_at(&[], &[x]) - g.eval_at(&[], &[x]),
        l,
        u,
        grid_n,
        tol,
    )?;
    Ok(CrossingSet {
        variable: f.continuous[0].name.clone(),
        roots,
        tolerance: tol,
    })
}
