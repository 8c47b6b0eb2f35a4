use mteid_core::{
    solve, Assignment, EliminationOrder, ExpTerm, InfluenceDiagram, Interval, MtePotential, Piece,
    PotentialKind, Variable,
};
use proptest::prelude::*;

const Y_STATES: [&str; 2] = ["y0", "y1"];
const D_STATES: [&str; 3] = ["a", "b", "c"];

fn y() -> Variable {
    Variable::discrete("Y", &Y_STATES)
}
fn x() -> Variable {
    Variable::continuous("X", 0.0, 2.0)
}
fn z() -> Variable {
    Variable::continuous("Z", -1.0, 1.0)
}

/// Raw material for one piece: constant and `(coef, exps)` terms.
type Shape = (f64, Vec<(f64, Vec<f64>)>);

fn shape(n_cont: usize) -> impl Strategy<Value = Shape> {
    (
        -3.0..3.0f64,
        prop::collection::vec(
            (-3.0..3.0f64, prop::collection::vec(-2.0..2.0f64, n_cont)),
            1..=3,
        ),
    )
}

/// A potential over `Y` and `X` (and `Z` when asked), with `X` cut at `cut`.
fn build(with_z: bool, cut: f64, shapes: &[Shape], kind: PotentialKind) -> MtePotential {
    let mut vars = vec![y(), x()];
    if with_z {
        vars.push(z());
    }
    let mut pieces = Vec::new();
    let mut k = 0;
    for s in 0..2 {
        for (lo, hi, closed) in [(0.0, cut, false), (cut, 2.0, true)] {
            let (c, terms) = &shapes[k % shapes.len()];
            k += 1;
            let mut bounds = vec![Interval { lo, hi, closed }];
            if with_z {
                bounds.push(Interval::closed(-1.0, 1.0));
            }
            pieces.push(Piece {
                states: vec![s],
                bounds,
                constant: *c,
                terms: terms
                    .iter()
                    .map(|(a, b)| ExpTerm {
                        coef: *a,
                        exps: b.clone(),
                    })
                    .collect(),
            });
        }
    }
    MtePotential::from_pieces(vars, pieces, kind).unwrap()
}

fn potential(with_z: bool) -> impl Strategy<Value = MtePotential> {
    let n = if with_z { 2 } else { 1 };
    (0.2..1.8f64, prop::collection::vec(shape(n), 4))
        .prop_map(move |(cut, s)| build(with_z, cut, &s, PotentialKind::Probability))
}

fn points(n: usize) -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((0..2usize, 0.0..=2.0f64, -1.0..=1.0f64), n)
}

fn at(y: usize, xv: f64) -> Assignment {
    Assignment::new().state("Y", Y_STATES[y]).real("X", xv)
}

fn close(got: f64, want: f64, scale: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * scale.max(want.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn combine_piece_bound(a in potential(false), b in potential(false)) {
        let c = a.combine(&b).unwrap();
        prop_assert!(c.piece_count() <= a.piece_count() * b.piece_count());
        c.check_well_formed().unwrap();
    }

    #[test]
    fn pointwise_soundness(a in potential(false), b in potential(true), k in -5.0..5.0f64, pts in points(200)) {
        let prod = a.combine(&b).unwrap();
        let sum = b.add(&b.scale(0.5)).unwrap();
        let scaled = a.scale(k);
        for (yv, xv, zv) in pts {
            let pa = at(yv, xv);
            let pb = at(yv, xv).real("Z", zv);
            let (va, vb) = (a.evaluate(&pa).unwrap(), b.evaluate(&pb).unwrap());
            prop_assert!(close(prod.evaluate(&pb).unwrap(), va * vb, (va * vb).abs(), 1e-10));
            prop_assert!(close(sum.evaluate(&pb).unwrap(), 1.5 * vb, vb.abs(), 1e-10));
            prop_assert!(close(scaled.evaluate(&pa).unwrap(), k * va, (k * va).abs(), 1e-10));
            let r = b.restrict(&Assignment::new().real("X", xv)).unwrap();
            let vr = r.evaluate(&Assignment::new().state("Y", Y_STATES[yv]).real("Z", zv)).unwrap();
            prop_assert!(close(vr, vb, vb.abs(), 1e-10));
        }
    }

    #[test]
    fn marginalization_order_commutes(p in potential(true), zs in prop::collection::vec(-1.0..=1.0f64, 50)) {
        let yx = p.marginalize_discrete("Y").unwrap().marginalize_continuous("X").unwrap();
        let xy = p.marginalize_continuous("X").unwrap().marginalize_discrete("Y").unwrap();
        yx.check_well_formed().unwrap();
        xy.check_well_formed().unwrap();
        for zv in zs {
            let pt = Assignment::new().real("Z", zv);
            let (u, v) = (yx.evaluate(&pt).unwrap(), xy.evaluate(&pt).unwrap());
            prop_assert!(close(u, v, 1.0, 1e-9), "{u} vs {v}");
        }
    }

    #[test]
    fn add_negation_is_zero(p in potential(true), pts in points(50)) {
        let zero = p.add(&p.scale(-1.0)).unwrap();
        for (yv, xv, zv) in pts {
            prop_assert_eq!(zero.evaluate(&at(yv, xv).real("Z", zv)).unwrap(), 0.0);
        }
    }

    #[test]
    fn identity_combine(p in potential(false), pts in points(50)) {
        let one = MtePotential::scalar(1.0, PotentialKind::Probability);
        let q = p.combine(&one).unwrap();
        for (yv, xv, _) in pts {
            prop_assert_eq!(q.evaluate(&at(yv, xv)).unwrap(), p.evaluate(&at(yv, xv)).unwrap());
        }
    }

    #[test]
    fn max_dominance_and_policy(
        cuts in prop::collection::vec(0.2..1.8f64, 3),
        shapes in prop::collection::vec(shape(1), 3),
        pts in points(200),
    ) {
        let d = Variable::decision("D", &D_STATES);
        let mut pieces = Vec::new();
        for (i, ((c, terms), cut)) in shapes.iter().zip(&cuts).enumerate() {
            for (lo, hi, closed) in [(0.0, *cut, false), (*cut, 2.0, true)] {
                pieces.push(Piece {
                    states: vec![i],
                    bounds: vec![Interval { lo, hi, closed }],
                    constant: *c * if lo == 0.0 { 1.0 } else { -1.0 },
                    terms: terms.iter().map(|(a, b)| ExpTerm { coef: *a, exps: b.clone() }).collect(),
                });
            }
        }
        let u = MtePotential::from_pieces(vec![d, x()], pieces, PotentialKind::Utility).unwrap();
        let (m, policy) = u.max_marginalize_decision("D").unwrap();
        m.check_well_formed().unwrap();
        for (_, xv, _) in pts {
            let best = m.evaluate(&Assignment::new().real("X", xv)).unwrap();
            let values: Vec<f64> = D_STATES
                .iter()
                .map(|s| u.evaluate(&Assignment::new().state("D", s).real("X", xv)).unwrap())
                .collect();
            for v in &values {
                prop_assert!(best >= v - 1e-9);
            }
            let chosen = policy.choose(&Assignment::new().real("X", xv)).unwrap();
            let i = D_STATES.iter().position(|s| *s == chosen).unwrap();
            prop_assert!((values[i] - best).abs() <= 1e-9, "{chosen} at {xv}: {} vs {best}", values[i]);
        }
    }

    #[test]
    fn adjacent_chance_swap_keeps_meu(
        prior in 0.05..0.95f64,
        dens in prop::collection::vec((0.5..2.0f64, -0.4..0.4f64, -1.5..1.5f64), 4),
        util in prop::collection::vec(shape(2), 6),
    ) {
        let d = random_diagram(prior, &dens, &util);
        let base = solve(&d, &EliminationOrder::parse("X,Z,Y,D")).unwrap().meu;
        for order in ["Z,X,Y,D", "X,Y,Z,D"] {
            let m = solve(&d, &EliminationOrder::parse(order)).unwrap().meu;
            prop_assert!((m - base).abs() < 1e-6, "{order}: {m} vs {base}");
        }
    }
}

/// Chance `Y`, densities of `X` and `Z` given `Y`, and a utility over all
/// of them plus a decision `D` that observes nothing.
fn random_diagram(prior: f64, dens: &[(f64, f64, f64)], util: &[Shape]) -> InfluenceDiagram {
    let d = Variable::decision("D", &["p", "q"]);
    let mut theta = MtePotential::empty(vec![y()], PotentialKind::Probability).unwrap();
    for (s, q) in [(0, prior), (1, 1.0 - prior)] {
        theta
            .push_piece(Piece {
                states: vec![s],
                bounds: vec![],
                constant: q,
                terms: vec![],
            })
            .unwrap();
    }
    let density = |v: Variable, k: usize| {
        let (lo, hi) = v.support().unwrap();
        let name = v.name.clone();
        let pieces = (0..2)
            .map(|s| {
                let (c, a, b) = dens[2 * k + s];
                Piece {
                    states: vec![s],
                    bounds: vec![Interval::closed(lo, hi)],
                    constant: c,
                    terms: vec![ExpTerm {
                        coef: a / (b.abs().exp() * 4.0),
                        exps: vec![b],
                    }],
                }
            })
            .collect();
        MtePotential::from_pieces(vec![y(), v], pieces, PotentialKind::Probability)
            .unwrap()
            .normalize_density(&name)
            .unwrap()
    };
    let mut pieces = Vec::new();
    for s in 0..2 {
        for dv in 0..2 {
            let (c, terms) = &util[(2 * s + dv) % util.len()];
            pieces.push(Piece {
                states: vec![dv, s],
                bounds: vec![Interval::closed(0.0, 2.0), Interval::closed(-1.0, 1.0)],
                constant: *c,
                terms: terms
                    .iter()
                    .map(|(a, b)| ExpTerm {
                        coef: *a,
                        exps: b.clone(),
                    })
                    .collect(),
            });
        }
    }
    let u = MtePotential::from_pieces(
        vec![d.clone(), y(), x(), z()],
        pieces,
        PotentialKind::Utility,
    )
    .unwrap();
    InfluenceDiagram::new(vec![y(), x(), z(), d])
        .probability("theta", "Y", theta)
        .probability("nu_x", "X", density(x(), 0))
        .probability("nu_z", "Z", density(z(), 1))
        .utility("u", u)
}

#[test]
fn marginalizing_a_two_state_table() {
    // Expected utilities after deleting R given a test, by result.
    let r = Variable::discrete("R", &["no_structure", "open", "closed"]);
    let mut u6 = MtePotential::empty(vec![r], PotentialKind::Utility).unwrap();
    for (s, v) in [(0, -4.10), (1, 7.88), (2, 18.77)] {
        u6.push_piece(Piece {
            states: vec![s],
            bounds: vec![],
            constant: v,
            terms: vec![],
        })
        .unwrap();
    }
    let total = u6
        .marginalize_discrete("R")
        .unwrap()
        .scalar_value()
        .unwrap();
    assert!((total - 22.55).abs() < 0.01, "{total}");
}

#[test]
fn maximizing_a_two_state_table() {
    let d = Variable::decision("D", &["not_drill", "drill"]);
    let mut u = MtePotential::empty(vec![d], PotentialKind::Utility).unwrap();
    for (s, v) in [(0, -4.10), (1, -17.30)] {
        u.push_piece(Piece {
            states: vec![s],
            bounds: vec![],
            constant: v,
            terms: vec![],
        })
        .unwrap();
    }
    let (m, policy) = u.max_marginalize_decision("D").unwrap();
    assert_eq!(m.scalar_value(), Some(-4.10));
    assert_eq!(policy.choose(&Assignment::new()), Some("not_drill"));
}
