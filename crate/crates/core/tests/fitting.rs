use std::collections::BTreeMap;

use mteid_core::fitting::templates::OIL_PRICE_BREAKS;
use mteid_core::fitting::{
    beta_pdf, compose_polynomial_utility, fit_linear_mte, fit_pdf, lognormal_oil_price, normal_pdf,
    normal_template, residuals, sample_points, unnormalized_normal_template, FitSpec, Monomial,
};
use mteid_core::wildcatter::READING_SPLITS;
use mteid_core::Assignment;

fn max_error_on_grid(
    p: &mteid_core::MtePotential,
    target: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> f64 {
    sample_points(lo, hi, n)
        .into_iter()
        .map(|x| (target(x) - p.eval_at(&[], &[x])).abs())
        .fold(0.0, f64::max)
}

#[test]
fn standard_normal_template_mass_and_mean() {
    let p = normal_template("x", 0.0, 1.0).unwrap();
    let mass = p
        .marginalize_continuous("x")
        .unwrap()
        .scalar_value()
        .unwrap();
    assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    let n = 20_000;
    let h = 6.0 / n as f64;
    let mean: f64 = (0..n)
        .map(|i| {
            let x = -3.0 + (i as f64 + 0.5) * h;
            x * p.eval_at(&[], &[x]) * h
        })
        .sum();
    assert!(mean.abs() < 1e-3, "{mean}");
}

#[test]
fn cost_template_support_and_mass() {
    let p = normal_template("C", 70.0, 10.0).unwrap();
    assert_eq!(p.continuous_vars()[0].support(), Some((40.0, 100.0)));
    let mass = p
        .marginalize_continuous("C")
        .unwrap()
        .scalar_value()
        .unwrap();
    assert!((mass - 1.0).abs() < 1e-4, "{mass}");
}

#[test]
fn normal_template_is_location_scale() {
    let base = normal_template("x", 0.0, 1.0).unwrap();
    for (mu, sigma) in [(70.0, 10.0), (6.0, 1.0), (13.5, 2.0), (-2.0, 0.3)] {
        let p = normal_template("x", mu, sigma).unwrap();
        for i in 0..=60 {
            let z = -3.0 + 0.1 * i as f64;
            let x = mu + sigma * z;
            let want = base.eval_at(&[], &[(x - mu) / sigma]) / sigma;
            let got = p.eval_at(&[], &[x]);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "{mu} {sigma} {z}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn unnormalized_mass() {
    let p = unnormalized_normal_template("x", 0.0, 1.0).unwrap();
    let mass = p
        .marginalize_continuous("x")
        .unwrap()
        .scalar_value()
        .unwrap();
    assert!((mass - 0.9973).abs() < 5e-4, "{mass}");
}

#[test]
fn oil_price_mass_and_tiling() {
    let rho = lognormal_oil_price("P");
    let mass = rho
        .marginalize_continuous("P")
        .unwrap()
        .scalar_value()
        .unwrap();
    assert!((mass - 1.0).abs() < 0.01, "{mass}");
    let pieces = rho.pieces();
    assert_eq!(pieces.len(), 4);
    for (i, p) in pieces.iter().enumerate() {
        assert_eq!(p.bounds[0].lo, OIL_PRICE_BREAKS[i]);
        assert_eq!(p.bounds[0].hi, OIL_PRICE_BREAKS[i + 1]);
        assert_eq!(p.bounds[0].closed, i == 3);
    }
    rho.check_well_formed().unwrap();
}

#[test]
fn beta_3_2_two_pieces() {
    let target = |x: f64| beta_pdf(3.2, 3.2, x);
    let r = fit_pdf(
        "R",
        &FitSpec::new(&target, 0.0, 1.0).splits(&[0.5]).terms(3),
    )
    .unwrap();
    let err = max_error_on_grid(&r.potential, target, 0.0, 1.0, 1000);
    assert!(err < 0.01, "{err}");
}

#[test]
fn beta_four_pieces_normalized() {
    for a in [3.2, 4.2] {
        let target = move |x: f64| beta_pdf(a, a, x);
        let spec = FitSpec::new(&target, 0.0, 1.0)
            .splits(&READING_SPLITS)
            .terms(3)
            .normalized(true);
        let r = fit_pdf("R", &spec).unwrap();
        let err = max_error_on_grid(&r.potential, target, 0.0, 1.0, 1000);
        assert!(err < 0.01, "Beta({a}) {err}");
        let mass = r
            .potential
            .marginalize_continuous("R")
            .unwrap()
            .scalar_value()
            .unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }
}

#[test]
fn normal_fit_no_worse_than_template() {
    let target = |x: f64| normal_pdf(0.0, 1.0, x);
    let r = fit_pdf(
        "x",
        &FitSpec::new(&target, -3.0, 3.0).splits(&[0.0]).terms(3),
    )
    .unwrap();
    let template = unnormalized_normal_template("x", 0.0, 1.0).unwrap();
    let (baseline, _) = residuals(&template, &target, &[-3.0, 0.0, 3.0], 101);
    assert!(r.sse <= 2.0 * baseline, "{} vs {baseline}", r.sse);
}

#[test]
fn reported_residuals_recompute() {
    let target = |x: f64| beta_pdf(2.5, 4.0, x);
    let spec = FitSpec::new(&target, 0.0, 1.0)
        .splits(&[0.3])
        .terms(2)
        .grid(51)
        .seed(3);
    let r = fit_pdf("x", &spec).unwrap();
    let mut sse = 0.0;
    let mut max_abs: f64 = 0.0;
    for (lo, hi) in [(0.0, 0.3), (0.3, 1.0)] {
        for x in sample_points(lo, hi, 51) {
            let e = target(x)
                - r.potential
                    .evaluate(&Assignment::new().real("x", x))
                    .unwrap();
            sse += e * e;
            max_abs = max_abs.max(e.abs());
        }
    }
    assert_eq!(sse, r.sse);
    assert_eq!(max_abs, r.max_abs_error);
}

#[test]
fn linear_fits() {
    let r = fit_linear_mte("x", 0.0, 1.0, 101).unwrap();
    assert!(r.max_abs_error < 0.01);
    assert!(max_error_on_grid(&r.potential, |x| x, 0.0, 1.0, 5000) < 0.01);
    assert!((r.potential.eval_at(&[], &[0.0]) - 0.0).abs() <= r.max_abs_error);

    let r = fit_linear_mte("v", 0.0, 19.5, 201).unwrap();
    let piece = &r.potential.pieces()[0];
    assert_eq!(piece.terms.len(), 1);
    assert!(piece.terms[0].coef * piece.terms[0].exps[0] > 0.0);
}

#[test]
fn example_polynomial() {
    let mut fits = BTreeMap::new();
    let mut errs = BTreeMap::new();
    for v in ["x", "y", "z"] {
        let r = fit_linear_mte(v, 0.0, 2.0, 101).unwrap();
        errs.insert(v, r.max_abs_error);
        fits.insert(v.to_string(), r.potential);
    }
    let poly = [
        Monomial::new(3.0, &[("x", 2), ("y", 1)]),
        Monomial::new(4.0, &[("z", 2)]),
        Monomial::new(3.0, &[("x", 1), ("z", 2)]),
        Monomial::new(3.0, &[("y", 2)]),
    ];
    let u = compose_polynomial_utility(&poly, &fits).unwrap();
    // Each factor is off by at most e; a product of k factors bounded by B
    // is off by at most (B + e)^k - B^k.
    let e = errs.values().cloned().fold(0.0, f64::max);
    let prod_err = |k: i32| (2.0 + e).powi(k) - 2.0f64.powi(k);
    let bound = 3.0 * prod_err(3) + 4.0 * prod_err(2) + 3.0 * prod_err(3) + 3.0 * prod_err(2);
    for i in 0..=4 {
        for j in 0..=4 {
            for k in 0..=4 {
                let (x, y, z) = (0.5 * i as f64, 0.5 * j as f64, 0.5 * k as f64);
                let exact = 3.0 * x * x * y + 4.0 * z * z + 3.0 * x * z * z + 3.0 * y * y;
                let got = u
                    .evaluate(&Assignment::new().real("x", x).real("y", y).real("z", z))
                    .unwrap();
                assert!(
                    (got - exact).abs() <= bound,
                    "({x},{y},{z}): {got} vs {exact}, bound {bound}"
                );
            }
        }
    }
}
