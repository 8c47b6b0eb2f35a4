//! Removing chance variables: closed-form integration, summation and
//! density normalization.

use alloc::format;
use alloc::vec::Vec;

use crate::algebra::sum_pieces;
use crate::error::{MteError, Result};
use crate::potential::{all_configs, ExpTerm, MtePotential, Piece};
use crate::region::Interval;

/// Below this `|b * w|` the integral of `e^{b z}` over a width-`w` interval
/// uses the two-term series instead of `expm1`.
pub const SERIES_THRESHOLD: f64 = 1e-10;

/// Relative spread tolerated in a normalization constant within one cell.
pub const MASS_SPREAD_TOL: f64 = 1e-6;

/// `int_l^{l+w} e^{b z} dz`.
pub fn exp_integral(b: f64, l: f64, w: f64) -> f64 {
    if b == 0.0 {
        return w;
    }
    let bw = b * w;
    if bw.abs() < SERIES_THRESHOLD {
        w * (1.0 + 0.5 * bw) * libm::exp(b * l)
    } else {
        libm::exp(b * l) * libm::expm1(bw) / b
    }
}

impl MtePotential {
    /// Integrates `z` out in closed form.
    pub fn marginalize_continuous(&self, z: &str) -> Result<MtePotential> {
        let k = match (self.continuous_pos(z), self.var(z)) {
            (Some(k), Some(v)) if v.is_continuous_chance() => k,
            _ => return Err(MteError::NotContinuous(z.into())),
        };
        let mut continuous = self.continuous.clone();
        continuous.remove(k);
        let pieces: Vec<Piece> = self
            .pieces
            .iter()
            .map(|p| {
                let iv = p.bounds[k];
                let w = iv.width();
                let mut bounds = p.bounds.clone();
                bounds.remove(k);
                let terms = p
                    .terms
                    .iter()
                    .map(|t| {
                        let mut exps = t.exps.clone();
                        let b = exps.remove(k);
                        ExpTerm {
                            coef: t.coef * exp_integral(b, iv.lo, w),
                            exps,
                        }
                    })
                    .collect();
                let mut piece = Piece {
                    states: p.states.clone(),
                    bounds,
                    constant: p.constant * w,
                    terms,
                };
                piece.tidy();
                piece
            })
            .collect();
        let n = continuous.len();
        Ok(MtePotential {
            finite: self.finite.clone(),
            continuous,
            pieces: sum_pieces(pieces, n),
            kind: self.kind,
        })
    }

    /// Sums `y` out over all its states.
    pub fn marginalize_discrete(&self, y: &str) -> Result<MtePotential> {
        let k = match (self.finite_pos(y), self.var(y)) {
            (Some(k), Some(v)) if v.is_discrete_chance() => k,
            _ => return Err(MteError::NotDiscrete(y.into())),
        };
        let mut finite = self.finite.clone();
        finite.remove(k);
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.states.remove(k);
                q
            })
            .collect();
        let n = self.continuous.len();
        Ok(MtePotential {
            finite,
            continuous: self.continuous.clone(),
            pieces: sum_pieces(pieces, n),
            kind: self.kind,
        })
    }

    /// Removes a chance variable by integration or summation, whichever
    /// fits its kind.
    pub fn marginalize_chance(&self, var: &str) -> Result<MtePotential> {
        match self.var(var) {
            Some(v) if v.is_continuous_chance() => self.marginalize_continuous(var),
            Some(v) if v.is_discrete_chance() => self.marginalize_discrete(var),
            Some(_) => Err(MteError::NotContinuous(var.into())),
            None => Err(MteError::Domain(format!(
                "`{var}` is not in the potential's domain"
            ))),
        }
    }

    /// Divides by the mass over the child `z` so that every parent
    /// configuration integrates (or sums) to one.
    ///
    /// The mass must be constant on each parent cell; division by a
    /// function of a continuous parent would leave the MTE class.
    pub fn normalize_density(&self, z: &str) -> Result<MtePotential> {
        let mass = self.marginalize_chance(z)?;
        for cfg in all_configs(&mass.finite) {
            if !mass.pieces.iter().any(|p| p.states == cfg) {
                return Err(MteError::NonpositiveMass(0.0));
            }
        }
        let mut cells: Vec<(&Piece, f64)> = Vec::with_capacity(mass.pieces.len());
        for p in &mass.pieces {
            let k = cell_constant(p)?;
            if !(k > 0.0) {
                return Err(MteError::NonpositiveMass(k));
            }
            cells.push((p, k));
        }

        let zc = self.continuous_pos(z);
        let zf = self.finite_pos(z);
        let mut out = MtePotential {
            pieces: Vec::new(),
            ..self.clone()
        };
        for p in &self.pieces {
            let mut parent_states = p.states.clone();
            if let Some(i) = zf {
                parent_states.remove(i);
            }
            let mut parent_bounds = p.bounds.clone();
            if let Some(i) = zc {
                parent_bounds.remove(i);
            }
            for (cell, k) in &cells {
                if cell.states != parent_states {
                    continue;
                }
                let Some(inter) = intersect_boxes(&parent_bounds, &cell.bounds) else {
                    continue;
                };
                let mut bounds = inter;
                if let Some(i) = zc {
                    bounds.insert(i, p.bounds[i]);
                }
                let mut q = Piece {
                    states: p.states.clone(),
                    bounds,
                    constant: p.constant / k,
                    terms: p
                        .terms
                        .iter()
                        .map(|t| ExpTerm {
                            coef: t.coef / k,
                            exps: t.exps.clone(),
                        })
                        .collect(),
                };
                q.tidy();
                out.pieces.push(q);
            }
        }
        Ok(out)
    }
}

fn intersect_boxes(a: &[Interval], b: &[Interval]) -> Option<Vec<Interval>> {
    a.iter().zip(b).map(|(x, y)| x.intersect(y)).collect()
}

/// Value of a mass piece that must be constant over its box.
fn cell_constant(p: &Piece) -> Result<f64> {
    if p.terms.is_empty() {
        return Ok(p.constant);
    }
    let n = p.bounds.len();
    let mut values = Vec::new();
    let total = 3usize.pow(n as u32);
    for mut code in 0..total {
        let xs: Vec<f64> = p
            .bounds
            .iter()
            .map(|iv| {
                let x = match code % 3 {
                    0 => iv.lo,
                    1 => iv.midpoint(),
                    _ => iv.hi,
                };
                code /= 3;
                x
            })
            .collect();
        values.push(p.value(&xs));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mid = p.value(&p.bounds.iter().map(Interval::midpoint).collect::<Vec<_>>());
    let spread = (hi - lo) / mid.abs().max(f64::MIN_POSITIVE);
    if spread > MASS_SPREAD_TOL {
        return Err(MteError::NonconstantMass {
            relative_spread: spread,
        });
    }
    Ok(mid)
}
