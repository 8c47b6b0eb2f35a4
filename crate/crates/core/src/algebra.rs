//! Combination, addition, scaling, restriction and the common-refinement
//! summation shared by the marginalization routines.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{MteError, Result};
use crate::potential::{Assignment, ExpTerm, MtePotential, Piece, Value};
use crate::region::Interval;
use crate::variable::{StateSpace, Variable};

/// Merges two name-sorted variable lists. Same-named finite variables must
/// agree; same-named continuous variables take the hull of their supports.
fn union_vars(a: &[Variable], b: &[Variable]) -> Result<Vec<Variable>> {
    let mut out: Vec<Variable> = a.to_vec();
    for v in b {
        match out.iter_mut().find(|u| u.name == v.name) {
            Some(u) => {
                if u.kind != v.kind {
                    return Err(MteError::DomainMismatch(format!(
                        "`{}` has conflicting kinds",
                        v.name
                    )));
                }
                match (&mut u.space, &v.space) {
                    (StateSpace::Finite(s1), StateSpace::Finite(s2)) if s1 == s2 => {}
                    (StateSpace::Interval { lo, hi }, StateSpace::Interval { lo: l2, hi: h2 }) => {
                        *lo = lo.min(*l2);
                        *hi = hi.max(*h2);
                    }
                    _ => {
                        return Err(MteError::DomainMismatch(format!(
                            "`{}` has conflicting state spaces",
                            v.name
                        )))
                    }
                }
            }
            None => out.push(v.clone()),
        }
    }
    out.sort_by(|x, y| x.name.cmp(&y.name));
    Ok(out)
}

/// For each variable of `from`, its position in `to`.
fn position_map(from: &[Variable], to: &[Variable]) -> Vec<usize> {
    from.iter()
        .map(|v| {
            to.iter()
                .position(|u| u.name == v.name)
                .expect("variable in union")
        })
        .collect()
}

fn lift_exps(exps: &[f64], map: &[usize], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (b, &k) in exps.iter().zip(map) {
        out[k] = *b;
    }
    out
}

/// Sums pieces that may overlap into pieces with disjoint interiors.
///
/// Pieces are grouped by configuration. Groups whose boxes coincide are
/// summed directly; groups with disjoint boxes are kept; anything else is
/// refined on the grid of all breakpoints along each axis.
pub(crate) fn sum_pieces(pieces: Vec<Piece>, n_cont: usize) -> Vec<Piece> {
    let mut groups: BTreeMap<Vec<usize>, Vec<Piece>> = BTreeMap::new();
    for p in pieces {
        groups.entry(p.states.clone()).or_default().push(p);
    }
    let mut out = Vec::new();
    for (_, group) in groups {
        if group.len() == 1 {
            out.extend(group);
        } else if n_cont == 0 || group.iter().all(|p| p.same_box(&group[0])) {
            let mut iter = group.into_iter();
            let mut acc = iter.next().expect("non-empty group");
            for p in iter {
                acc.constant += p.constant;
                acc.terms.extend(p.terms);
                for (a, b) in acc.bounds.iter_mut().zip(&p.bounds) {
                    a.closed = a.closed || b.closed;
                }
            }
            acc.tidy();
            out.push(acc);
        } else if pairwise_disjoint(&group) {
            out.extend(group);
        } else {
            out.extend(grid_refine(group, n_cont));
        }
    }
    out
}

fn pairwise_disjoint(group: &[Piece]) -> bool {
    group
        .iter()
        .enumerate()
        .all(|(i, a)| group[i + 1..].iter().all(|b| !a.interiors_overlap(b)))
}

fn grid_refine(group: Vec<Piece>, n_cont: usize) -> Vec<Piece> {
    let states = group[0].states.clone();
    let cuts: Vec<Vec<f64>> = (0..n_cont)
        .map(|k| {
            let mut c: Vec<f64> = group
                .iter()
                .flat_map(|p| [p.bounds[k].lo, p.bounds[k].hi])
                .collect();
            c.sort_by(|a, b| a.partial_cmp(b).expect("finite bounds"));
            c.dedup();
            c
        })
        .collect();
    let dims: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();
    let total: usize = dims.iter().product();
    let cell_bounds = |idx: &[usize]| -> Vec<Interval> {
        idx.iter()
            .enumerate()
            .map(|(k, &i)| Interval::half_open(cuts[k][i], cuts[k][i + 1]))
            .collect()
    };
    let decode = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; n_cont];
        for k in (0..n_cont).rev() {
            idx[k] = flat % dims[k];
            flat /= dims[k];
        }
        idx
    };
    let encode =
        |idx: &[usize]| -> usize { idx.iter().zip(&dims).fold(0, |acc, (&i, &d)| acc * d + i) };
    let covering = |cell: &[Interval]| -> Vec<usize> {
        group
            .iter()
            .enumerate()
            .filter(|(_, p)| p.bounds.iter().zip(cell).all(|(b, c)| b.covers(c)))
            .map(|(i, _)| i)
            .collect()
    };

    let covers: Vec<Vec<usize>> = (0..total)
        .map(|f| covering(&cell_bounds(&decode(f))))
        .collect();
    let mut out = Vec::new();
    for flat in 0..total {
        let who = &covers[flat];
        if who.is_empty() {
            continue;
        }
        let idx = decode(flat);
        let mut bounds = cell_bounds(&idx);
        for k in 0..n_cont {
            let neighbour_covered = idx[k] + 1 < dims[k] && {
                let mut n = idx.clone();
                n[k] += 1;
                !covers[encode(&n)].is_empty()
            };
            bounds[k].closed = !neighbour_covered
                && who.iter().any(|&i| {
                    let b = &group[i].bounds[k];
                    b.hi == bounds[k].hi && b.closed
                });
        }
        let mut piece = Piece {
            states: states.clone(),
            bounds,
            constant: 0.0,
            terms: Vec::new(),
        };
        for &i in who {
            piece.constant += group[i].constant;
            piece.terms.extend(group[i].terms.iter().cloned());
        }
        piece.tidy();
        out.push(piece);
    }
    out
}

impl MtePotential {
    /// Pointwise product. The domain is the union of both domains; the result
    /// is a utility as soon as either factor is.
    pub fn combine(&self, other: &MtePotential) -> Result<MtePotential> {
        let finite = union_vars(&self.finite, &other.finite)?;
        let continuous = union_vars(&self.continuous, &other.continuous)?;
        let (fa, fb) = (
            position_map(&self.finite, &finite),
            position_map(&other.finite, &finite),
        );
        let (ca, cb) = (
            position_map(&self.continuous, &continuous),
            position_map(&other.continuous, &continuous),
        );
        let nc = continuous.len();

        let mut pieces = Vec::new();
        for pa in &self.pieces {
            'next: for pb in &other.pieces {
                let mut states: Vec<Option<usize>> = vec![None; finite.len()];
                for (&s, &k) in pa.states.iter().zip(&fa) {
                    states[k] = Some(s);
                }
                for (&s, &k) in pb.states.iter().zip(&fb) {
                    match states[k] {
                        Some(t) if t != s => continue 'next,
                        _ => states[k] = Some(s),
                    }
                }
                let mut bounds: Vec<Option<Interval>> = vec![None; nc];
                for (iv, &k) in pa.bounds.iter().zip(&ca) {
                    bounds[k] = Some(*iv);
                }
                for (iv, &k) in pb.bounds.iter().zip(&cb) {
                    bounds[k] = match bounds[k] {
                        Some(prev) => match prev.intersect(iv) {
                            Some(x) => Some(x),
                            None => continue 'next,
                        },
                        None => Some(*iv),
                    };
                }

                let ta: Vec<ExpTerm> = pa
                    .terms
                    .iter()
                    .map(|t| ExpTerm {
                        coef: t.coef,
                        exps: lift_exps(&t.exps, &ca, nc),
                    })
                    .collect();
                let tb: Vec<ExpTerm> = pb
                    .terms
                    .iter()
                    .map(|t| ExpTerm {
                        coef: t.coef,
                        exps: lift_exps(&t.exps, &cb, nc),
                    })
                    .collect();
                let mut terms = Vec::with_capacity(ta.len() + tb.len() + ta.len() * tb.len());
                for t in &tb {
                    terms.push(ExpTerm {
                        coef: pa.constant * t.coef,
                        exps: t.exps.clone(),
                    });
                }
                for t in &ta {
                    terms.push(ExpTerm {
                        coef: pb.constant * t.coef,
                        exps: t.exps.clone(),
                    });
                }
                for x in &ta {
                    for y in &tb {
                        terms.push(ExpTerm {
                            coef: x.coef * y.coef,
                            exps: x.exps.iter().zip(&y.exps).map(|(a, b)| a + b).collect(),
                        });
                    }
                }
                let mut piece = Piece {
                    states: states.into_iter().map(|s| s.expect("state set")).collect(),
                    bounds: bounds.into_iter().map(|b| b.expect("bound set")).collect(),
                    constant: pa.constant * pb.constant,
                    terms,
                };
                piece.tidy();
                pieces.push(piece);
            }
        }
        Ok(MtePotential {
            finite,
            continuous,
            pieces,
            kind: self.kind.combined(other.kind),
        })
    }

    /// Pointwise sum of two potentials over the same domain.
    pub fn add(&self, other: &MtePotential) -> Result<MtePotential> {
        let same = |a: &[Variable], b: &[Variable]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| {
                    x.name == y.name
                        && x.kind == y.kind
                        && (x.is_continuous() && y.is_continuous() || x.space == y.space)
                })
        };
        if !same(&self.finite, &other.finite) || !same(&self.continuous, &other.continuous) {
            return Err(MteError::DomainMismatch(format!(
                "cannot add potentials over {:?} and {:?}",
                self.domain_names(),
                other.domain_names()
            )));
        }
        let continuous = union_vars(&self.continuous, &other.continuous)?;
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        Ok(MtePotential {
            finite: self.finite.clone(),
            pieces: sum_pieces(pieces, continuous.len()),
            continuous,
            kind: self.kind.combined(other.kind),
        })
    }

    /// Pointwise multiple `c * self`.
    pub fn scale(&self, c: f64) -> MtePotential {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.constant *= c;
            for t in &mut p.terms {
                t.coef *= c;
            }
            p.tidy();
        }
        out
    }

    /// Fixes some variables. Finite variables keep only matching pieces;
    /// continuous values are substituted into the exponents. Assigned
    /// variables leave the domain.
    pub fn restrict(&self, assignment: &Assignment) -> Result<MtePotential> {
        let mut fixed_states: Vec<Option<usize>> = vec![None; self.finite.len()];
        let mut fixed_reals: Vec<Option<f64>> = vec![None; self.continuous.len()];
        for (name, value) in &assignment.0 {
            match (self.finite_pos(name), self.continuous_pos(name), value) {
                (Some(i), _, Value::State(label)) => {
                    let s = self.finite[i].state_index(label).ok_or_else(|| {
                        MteError::Domain(format!("`{name}` has no state `{label}`"))
                    })?;
                    fixed_states[i] = Some(s);
                }
                (_, Some(k), Value::Real(x)) => fixed_reals[k] = Some(*x),
                (None, None, _) => {
                    return Err(MteError::Domain(format!(
                        "`{name}` is not in the potential's domain"
                    )))
                }
                _ => {
                    return Err(MteError::Domain(format!(
                        "value of the wrong type for `{name}`"
                    )))
                }
            }
        }

        let finite: Vec<Variable> = self
            .finite
            .iter()
            .zip(&fixed_states)
            .filter(|(_, f)| f.is_none())
            .map(|(v, _)| v.clone())
            .collect();
        let continuous: Vec<Variable> = self
            .continuous
            .iter()
            .zip(&fixed_reals)
            .filter(|(_, f)| f.is_none())
            .map(|(v, _)| v.clone())
            .collect();

        let mut pieces = Vec::new();
        for p in &self.pieces {
            let state_ok = p
                .states
                .iter()
                .zip(&fixed_states)
                .all(|(s, f)| f.is_none_or(|f| f == *s));
            let real_ok = p
                .bounds
                .iter()
                .zip(&fixed_reals)
                .all(|(iv, f)| f.is_none_or(|x| iv.contains(x)));
            if !state_ok || !real_ok {
                continue;
            }
            let states = p
                .states
                .iter()
                .zip(&fixed_states)
                .filter(|(_, f)| f.is_none())
                .map(|(s, _)| *s)
                .collect();
            let bounds = p
                .bounds
                .iter()
                .zip(&fixed_reals)
                .filter(|(_, f)| f.is_none())
                .map(|(b, _)| *b)
                .collect();
            let terms = p
                .terms
                .iter()
                .map(|t| {
                    let mut arg = 0.0;
                    let mut exps = Vec::with_capacity(continuous.len());
                    for (b, f) in t.exps.iter().zip(&fixed_reals) {
                        match f {
                            Some(x) => arg += b * x,
                            None => exps.push(*b),
                        }
                    }
                    ExpTerm {
                        coef: t.coef * libm::exp(arg),
                        exps,
                    }
                })
                .collect();
            let mut piece = Piece {
                states,
                bounds,
                constant: p.constant,
                terms,
            };
            piece.tidy();
            pieces.push(piece);
        }
        let n_cont = continuous.len();
        Ok(MtePotential {
            finite,
            continuous,
            pieces: sum_pieces(pieces, n_cont),
            kind: self.kind,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{NamedPiece, PotentialKind};

    fn x01() -> Variable {
        Variable::continuous("x", 0.0, 1.0)
    }

    fn two_plus_three_ex() -> MtePotential {
        let mut p = MtePotential::empty(vec![x01()], PotentialKind::Utility).unwrap();
        p.push_named(&NamedPiece::constant(2.0).term(3.0, &[("x", 1.0)]))
            .unwrap();
        p
    }

    #[test]
    fn combine_scalar_distributes() {
        let four = MtePotential::constant(vec![x01()], 4.0, PotentialKind::Utility).unwrap();
        let r = two_plus_three_ex().combine(&four).unwrap();
        assert_eq!(r.piece_count(), 1);
        assert_eq!(r.pieces()[0].constant, 8.0);
        assert_eq!(
            r.pieces()[0].terms,
            vec![ExpTerm {
                coef: 12.0,
                exps: vec![1.0]
            }]
        );
    }

    #[test]
    fn combine_kinds() {
        let p = MtePotential::constant(vec![x01()], 1.0, PotentialKind::Probability).unwrap();
        let u = MtePotential::constant(vec![x01()], 1.0, PotentialKind::Utility).unwrap();
        assert_eq!(p.combine(&p).unwrap().kind(), PotentialKind::Probability);
        assert_eq!(p.combine(&u).unwrap().kind(), PotentialKind::Utility);
        assert_eq!(u.combine(&u).unwrap().kind(), PotentialKind::Utility);
    }

    #[test]
    fn combine_disjoint_gives_nothing() {
        let mut a = MtePotential::empty(vec![x01()], PotentialKind::Utility).unwrap();
        a.push_named(&NamedPiece::constant(1.0).on("x", Interval::half_open(0.0, 0.5)))
            .unwrap();
        let mut b = MtePotential::empty(vec![x01()], PotentialKind::Utility).unwrap();
        b.push_named(&NamedPiece::constant(1.0).on("x", Interval::closed(0.5, 1.0)))
            .unwrap();
        assert_eq!(a.combine(&b).unwrap().piece_count(), 0);
    }

    #[test]
    fn add_constants_and_mismatch() {
        let two = MtePotential::constant(vec![x01()], 2.0, PotentialKind::Utility).unwrap();
        let three = MtePotential::constant(vec![x01()], 3.0, PotentialKind::Utility).unwrap();
        let five = two.add(&three).unwrap();
        assert_eq!(five.piece_count(), 1);
        assert_eq!(five.pieces()[0].constant, 5.0);
        let y = MtePotential::constant(
            vec![Variable::continuous("y", 0.0, 1.0)],
            1.0,
            PotentialKind::Utility,
        )
        .unwrap();
        assert_eq!(two.add(&y).unwrap_err().code(), "E_DOMAIN_MISMATCH");
    }

    #[test]
    fn scale_by_zero_annihilates() {
        let z = two_plus_three_ex().scale(0.0);
        assert_eq!(z.pieces()[0].constant, 0.0);
        assert!(z.pieces()[0].terms.is_empty());
    }

    #[test]
    fn add_refines_partial_overlap() {
        let mut a = MtePotential::empty(vec![x01()], PotentialKind::Utility).unwrap();
        a.push_named(&NamedPiece::constant(1.0).on("x", Interval::half_open(0.0, 0.5)))
            .unwrap();
        a.push_named(&NamedPiece::constant(2.0).on("x", Interval::closed(0.5, 1.0)))
            .unwrap();
        let mut b = MtePotential::empty(vec![x01()], PotentialKind::Utility).unwrap();
        b.push_named(&NamedPiece::constant(10.0).on("x", Interval::half_open(0.25, 0.75)))
            .unwrap();
        let s = a.add(&b).unwrap();
        s.check_well_formed().unwrap();
        let at = |x| s.evaluate(&Assignment::new().real("x", x)).unwrap();
        assert_eq!(at(0.1), 1.0);
        assert_eq!(at(0.3), 11.0);
        assert_eq!(at(0.6), 12.0);
        assert_eq!(at(0.8), 2.0);
        assert_eq!(at(1.0), 2.0);
        assert_eq!(at(0.75), 2.0);
    }

    #[test]
    fn restrict_substitutes_continuous_value() {
        let vars = vec![x01(), Variable::continuous("y", 0.0, 1.0)];
        let mut p = MtePotential::empty(vars, PotentialKind::Utility).unwrap();
        p.push_named(&NamedPiece::constant(0.0).term(2.0, &[("x", 1.0), ("y", 1.0)]))
            .unwrap();
        let r = p.restrict(&Assignment::new().real("x", 0.0)).unwrap();
        assert_eq!(r.domain_names(), vec!["y"]);
        assert_eq!(
            r.pieces()[0].terms,
            vec![ExpTerm {
                coef: 2.0,
                exps: vec![1.0]
            }]
        );
    }

    #[test]
    fn restrict_unknown_variable_errors() {
        let p = two_plus_three_ex();
        assert_eq!(
            p.restrict(&Assignment::new().real("q", 0.0))
                .unwrap_err()
                .code(),
            "E_DOMAIN"
        );
    }

    #[test]
    fn restrict_constant_one_stays_one() {
        let o = Variable::discrete("O", &["a", "b"]);
        let p = MtePotential::constant(vec![o, x01()], 1.0, PotentialKind::Probability).unwrap();
        let r = p
            .restrict(&Assignment::new().state("O", "b").real("x", 0.3))
            .unwrap();
        assert_eq!(r.scalar_value(), Some(1.0));
    }
}
