use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{MteError, Result};
use crate::potential::{MtePotential, PotentialKind};
use crate::variable::Variable;

/// `coef * prod_v v^power`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: BTreeMap<String, u32>,
}

impl Monomial {
    pub fn new(coef: f64, powers: &[(&str, u32)]) -> Self {
        Monomial {
            coef,
            powers: powers.iter().map(|(v, p)| (String::from(*v), *p)).collect(),
        }
    }
}

/// Builds a utility potential for a polynomial by substituting an MTE
/// approximation of `v` for every variable `v`, then expanding with
/// products and sums.
pub fn compose_polynomial_utility(
    poly: &[Monomial],
    fits: &BTreeMap<String, MtePotential>,
) -> Result<MtePotential> {
    let mut used: Vec<Variable> = Vec::new();
    let mut terms = Vec::with_capacity(poly.len());
    for mono in poly {
        let mut acc = MtePotential::scalar(mono.coef, PotentialKind::Utility);
        for (var, &power) in &mono.powers {
            if power == 0 {
                continue;
            }
            let fit = fits
                .get(var)
                .ok_or_else(|| MteError::MissingFit(var.clone()))?;
            for v in fit.variables() {
                if !used.iter().any(|u| u.name == v.name) {
                    used.push(v.clone());
                }
            }
            for _ in 0..power {
                acc = acc.combine(fit)?;
            }
        }
        terms.push(acc);
    }
    let one = MtePotential::constant(used, 1.0, PotentialKind::Utility)?;
    let mut total: Option<MtePotential> = None;
    for t in terms {
        let widened = t.combine(&one)?;
        total = Some(match total {
            Some(sum) => sum.add(&widened)?,
            None => widened,
        });
    }
    Ok(total
        .unwrap_or(one.scale(0.0))
        .with_kind(PotentialKind::Utility))
}
