//! The oil wildcatter problem: drill or not, optionally after a seismic
//! test, with uncertain oil amount, volume, price and drilling cost.
//!
//! Amounts are in thousands (barrels, dollars). Two variants ship: the test
//! result `R` is either one of four labels or a reading on `[0, 1]`.

use alloc::vec;

use crate::diagram::{EliminationOrder, InfluenceDiagram};
use crate::error::Result;
use crate::fitting::templates::OIL_PRICE_BREAKS;
use crate::fitting::{
    beta_pdf, fit_pdf, lognormal_oil_price, normal_template, normal_template_on, FitSpec,
};
use crate::potential::{MtePotential, NamedPiece, PotentialKind};
use crate::region::Interval;
use crate::variable::Variable;

pub const OIL_STATES: [&str; 3] = ["dry", "wet", "soaking"];
pub const RESULT_STATES: [&str; 4] = ["no_structure", "open", "closed", "no_result"];
pub const DRILL_STATES: [&str; 2] = ["not_drill", "drill"];
pub const TEST_STATES: [&str; 2] = ["no_test", "test"];
pub const ELIMINATION_ORDER: [&str; 7] = ["C", "P", "V", "O", "D", "R", "T"];

pub const COST_RANGE: (f64, f64) = (40.0, 100.0);
pub const VOLUME_RANGE: (f64, f64) = (0.0, 19.5);
pub const PRICE_RANGE: (f64, f64) = (OIL_PRICE_BREAKS[0], OIL_PRICE_BREAKS[4]);
/// A dry hole yields (almost) nothing: volume uniform on `[0, DRY_VOLUME]`.
pub const DRY_VOLUME: f64 = 0.001;
pub const TEST_COST: f64 = 10.0;

pub const OIL_PRIOR: [f64; 3] = [0.5, 0.3, 0.2];
/// `(mean, sd)` of the volume given wet and soaking holes.
pub const VOLUME_NORMALS: [(f64, f64); 2] = [(6.0, 1.0), (13.5, 2.0)];
pub const COST_NORMAL: (f64, f64) = (70.0, 10.0);
/// Location and scale of the log oil price.
#[allow(clippy::approx_constant)]
pub const PRICE_LOGNORMAL: (f64, f64) = (2.75, 0.7071);
/// Test result probabilities given a test, per oil state, over
/// no_structure, open, closed, no_result.
pub const RESULT_GIVEN_OIL: [[f64; 4]; 3] = [
    [0.6, 0.3, 0.1, 0.0],
    [0.3, 0.4, 0.3, 0.0],
    [0.1, 0.4, 0.5, 0.0],
];
/// Symmetric Beta parameters of the continuous reading, per oil state.
pub const READING_BETAS: [f64; 3] = [1.0, 3.2, 4.2];
pub const READING_SPLITS: [f64; 3] = [0.2, 0.5, 0.8];
pub const READING_TERMS: usize = 3;

/// Constant and `(coefficient, [(variable, exponent)])` terms of the drill
/// and test fragment of the MTE profit approximation.
pub const U1_CONSTANT: f64 = 600462529.9767685;
pub const U1_TERMS: [(f64, &[(&str, f64)]); 4] = [
    (24504.975886, &[("C", -0.00004109695)]),
    (-600488161.2450081, &[("P", 0.00004069868)]),
    (
        600488190.477144,
        &[("P", 0.00004069868), ("V", 0.00004078953)],
    ),
    (-600487073.8393291, &[("V", 0.00004078953)]),
];

pub fn cost() -> Variable {
    Variable::continuous("C", COST_RANGE.0, COST_RANGE.1)
}
pub fn price() -> Variable {
    Variable::continuous("P", PRICE_RANGE.0, PRICE_RANGE.1)
}
pub fn volume() -> Variable {
    Variable::continuous("V", VOLUME_RANGE.0, VOLUME_RANGE.1)
}
pub fn oil() -> Variable {
    Variable::discrete("O", &OIL_STATES)
}
pub fn drill() -> Variable {
    Variable::decision("D", &DRILL_STATES)
}
pub fn test() -> Variable {
    Variable::decision("T", &TEST_STATES)
}
pub fn discrete_result() -> Variable {
    Variable::discrete("R", &RESULT_STATES)
}
pub fn continuous_result() -> Variable {
    Variable::continuous("R", 0.0, 1.0)
}

pub fn elimination_order() -> EliminationOrder {
    EliminationOrder::new(&ELIMINATION_ORDER)
}

/// Exact profit: `v p - c` when drilling, minus the test cost when testing.
pub fn profit(v: f64, p: f64, c: f64, drilled: bool, tested: bool) -> f64 {
    let mut u = if drilled { v * p - c } else { 0.0 };
    if tested {
        u -= TEST_COST;
    }
    u
}

/// The shipped MTE approximation of [`profit`] over `{C, P, V, D, T}`.
///
/// Not drilling costs the test fee or nothing. Drilling without a test is
/// the drill-and-test fragment plus the fee.
pub fn profit_utility() -> MtePotential {
    let vars = vec![cost(), price(), volume(), drill(), test()];
    let mut u = MtePotential::empty(vars, PotentialKind::Utility).expect("distinct variables");
    let fragment = |constant: f64| {
        U1_TERMS
            .iter()
            .fold(NamedPiece::constant(constant), |np, (coef, exps)| {
                np.term(*coef, exps)
            })
    };
    let pieces = [
        fragment(U1_CONSTANT).when("D", "drill").when("T", "test"),
        fragment(U1_CONSTANT + TEST_COST)
            .when("D", "drill")
            .when("T", "no_test"),
        NamedPiece::constant(-TEST_COST)
            .when("D", "not_drill")
            .when("T", "test"),
        NamedPiece::constant(0.0)
            .when("D", "not_drill")
            .when("T", "no_test"),
    ];
    for np in &pieces {
        u.push_named(np).expect("literal pieces fit the domain");
    }
    u
}

/// Prior over the oil amount.
pub fn oil_prior() -> MtePotential {
    let mut p = MtePotential::empty(vec![oil()], PotentialKind::Probability).expect("one variable");
    for (s, q) in OIL_STATES.iter().zip(OIL_PRIOR) {
        p.push_named(&NamedPiece::constant(q).when("O", s))
            .expect("known state");
    }
    p
}

/// Drilling cost density, normalized exactly.
pub fn cost_density() -> Result<MtePotential> {
    normal_template("C", COST_NORMAL.0, COST_NORMAL.1)?.normalize_density("C")
}

/// Oil price density, normalized exactly.
pub fn price_density() -> Result<MtePotential> {
    lognormal_oil_price("P").normalize_density("P")
}

/// Volume given oil amount: a sliver near zero when dry, normal templates
/// otherwise, each normalized exactly.
pub fn volume_density() -> Result<MtePotential> {
    let mut nu = MtePotential::empty(vec![oil(), volume()], PotentialKind::Probability)?;
    nu.push_named(
        &NamedPiece::constant(1.0 / DRY_VOLUME)
            .when("O", "dry")
            .on("V", Interval::closed(0.0, DRY_VOLUME)),
    )?;
    for (state, (mu, sigma)) in ["wet", "soaking"].iter().zip(VOLUME_NORMALS) {
        let fragment = normal_template_on(&volume(), mu, sigma)?.normalize_density("V")?;
        for np in fragment.named_pieces() {
            nu.push_named(&np.when("O", state))?;
        }
    }
    Ok(nu)
}

/// Test result given oil amount and test decision, labelled results.
pub fn discrete_result_table() -> MtePotential {
    let vars = vec![discrete_result(), oil(), test()];
    let mut delta =
        MtePotential::empty(vars, PotentialKind::Probability).expect("distinct variables");
    for (o, row) in OIL_STATES.iter().zip(RESULT_GIVEN_OIL) {
        for (r, q) in RESULT_STATES.iter().zip(row) {
            let np = NamedPiece::constant(q)
                .when("R", r)
                .when("O", o)
                .when("T", "test");
            delta.push_named(&np).expect("known states");
            let untested = if *r == "no_result" { 1.0 } else { 0.0 };
            delta
                .push_named(
                    &NamedPiece::constant(untested)
                        .when("R", r)
                        .when("O", o)
                        .when("T", "no_test"),
                )
                .expect("known states");
        }
    }
    delta
}

/// Fitted MTE density of a symmetric `Beta(a, a)` reading on `[0, 1]`.
pub fn reading_fit(a: f64, seed: u64) -> Result<MtePotential> {
    let target = move |x: f64| beta_pdf(a, a, x);
    let spec = FitSpec::new(&target, 0.0, 1.0)
        .splits(&READING_SPLITS)
        .terms(READING_TERMS)
        .normalized(true)
        .seed(seed);
    Ok(fit_pdf("R", &spec)?.potential)
}

/// Test reading given oil amount and test decision: fitted Betas when
/// tested, uniform (uninformative) otherwise.
pub fn continuous_result_density(seed: u64) -> Result<MtePotential> {
    let vars = vec![continuous_result(), oil(), test()];
    let mut delta = MtePotential::empty(vars, PotentialKind::Probability)?;
    for (o, a) in OIL_STATES.iter().zip(READING_BETAS) {
        for np in reading_fit(a, seed)?.named_pieces() {
            delta.push_named(&np.when("O", o).when("T", "test"))?;
        }
    }
    delta.push_named(&NamedPiece::constant(1.0).when("T", "no_test"))?;
    Ok(delta)
}

fn assemble(result: Variable, delta: MtePotential) -> Result<InfluenceDiagram> {
    Ok(InfluenceDiagram::new(vec![
        cost(),
        price(),
        volume(),
        oil(),
        result,
        drill(),
        test(),
    ])
    .info_arc("R", "D")
    .info_arc("T", "D")
    .probability("theta", "O", oil_prior())
    .probability("delta", "R", delta)
    .probability("nu", "V", volume_density()?)
    .probability("vartheta", "C", cost_density()?)
    .probability("rho", "P", price_density()?)
    .utility("u1", profit_utility()))
}

pub fn discrete_model() -> Result<InfluenceDiagram> {
    assemble(discrete_result(), discrete_result_table())
}

pub fn continuous_model(seed: u64) -> Result<InfluenceDiagram> {
    assemble(continuous_result(), continuous_result_density(seed)?)
}
