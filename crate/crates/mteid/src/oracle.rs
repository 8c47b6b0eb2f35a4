//! Independent numerical checks: adaptive Simpson quadrature and Monte
//! Carlo simulation of a strategy.

use std::collections::HashMap;

use mteid_core::maxmarg::Rule;
use mteid_core::wildcatter::{self, OIL_STATES, READING_BETAS};
use mteid_core::{
    exp_integral, Assignment, InfluenceDiagram, MtePotential, Piece, PolicyRule, Value, Variable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal};

use crate::error::{Error, Result};

/// Deepest bisection level of [`quad_integrate`].
pub const MAX_DEPTH: usize = 50;
/// Width below which inverse-CDF bisection stops.
pub const INVERSION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct Simpson<'f, F> {
    f: &'f F,
    evaluations: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evaluations += 1;
        (self.f)(x)
    }

    /// Returns the refined value and its error estimate.
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        fa: f64,
        m: f64,
        fm: f64,
        b: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<(f64, f64)> {
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (self.eval(lm), self.eval(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol && depth >= 2 {
            return Ok((left + right + delta / 15.0, delta.abs() / 15.0));
        }
        if depth >= MAX_DEPTH {
            return Err(Error::MaxDepth(MAX_DEPTH));
        }
        let (l, el) = self.refine(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1)?;
        let (r, er) = self.refine(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1)?;
        Ok((l + r, el + er))
    }
}

/// Integrates `f` over `[l, u]` by adaptive Simpson, treating each stretch
/// between consecutive `breakpoints` separately. The tolerance is shared
/// out by width. At an inner breakpoint each stretch sees the one-sided
/// limit from its own side, so no piece is straddled whichever end of it is
/// closed.
pub fn quad_integrate<F: Fn(f64) -> f64>(
    f: F,
    (l, u): (f64, f64),
    tol: f64,
    breakpoints: &[f64],
) -> Result<QuadResult> {
    if !(l < u) || !l.is_finite() || !u.is_finite() {
        return Err(mteid_core::MteError::BadInterval { lo: l, hi: u }.into());
    }
    if !(tol > 0.0) {
        return Err(Error::Usage(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| l < b && b < u)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![l];
    edges.extend(cuts);
    edges.push(u);

    let mut s = Simpson {
        f: &f,
        evaluations: 0,
    };
    let (mut value, mut error_estimate) = (0.0, 0.0);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let fa = if a > l {
            s.eval(a.next_up())
        } else {
            s.eval(a)
        };
        let fb = if b < u {
            s.eval(b.next_down())
        } else {
            s.eval(b)
        };
        let m = 0.5 * (a + b);
        let fm = s.eval(m);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let (v, e) = s.refine(a, fa, m, fm, b, fb, whole, tol * (b - a) / (u - l), 0)?;
        value += v;
        error_estimate += e;
    }
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations: s.evaluations,
    })
}

/// Integral of a univariate potential over its support by quadrature,
/// breaking at every piece boundary.
pub fn quad_potential(p: &MtePotential, tol: f64) -> Result<QuadResult> {
    let v = match (p.finite_vars(), p.continuous_vars()) {
        ([], [v]) => v,
        _ => {
            return Err(mteid_core::MteError::Domain(
                "quadrature needs a potential over one continuous variable".into(),
            )
            .into())
        }
    };
    let (lo, hi) = v.support().expect("continuous");
    let breaks: Vec<f64> = p
        .pieces()
        .iter()
        .flat_map(|q| [q.bounds[0].lo, q.bounds[0].hi])
        .collect();
    quad_integrate(|x| p.eval_at(&[], &[x]), (lo, hi), tol, &breaks)
}

/// Mass of one conditional density for one parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MassCheck {
    pub potential: String,
    pub parents: Assignment,
    pub mass: f64,
}

/// Masses of every probability potential of `d` over its child, for every
/// finite parent configuration and `grid` points per continuous parent.
pub fn density_masses(d: &InfluenceDiagram, grid: usize, tol: f64) -> Result<Vec<MassCheck>> {
    let mut out = Vec::new();
    for e in &d.probabilities {
        let p = &e.potential;
        let finite: Vec<Variable> = p
            .finite_vars()
            .iter()
            .filter(|v| v.name != e.child)
            .cloned()
            .collect();
        let continuous: Vec<&Variable> = p
            .continuous_vars()
            .iter()
            .filter(|v| v.name != e.child)
            .collect();
        let axes: Vec<Vec<f64>> = continuous
            .iter()
            .map(|v| {
                let (lo, hi) = v.support().expect("continuous");
                (0..grid)
                    .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / grid as f64)
                    .collect()
            })
            .collect();
        for cfg in configs(&finite) {
            for reals in grid_points(&axes) {
                let mut parents = Assignment::new();
                for (v, &s) in finite.iter().zip(&cfg) {
                    parents.set(&v.name, Value::State(v.states()[s].clone()));
                }
                for (v, &x) in continuous.iter().zip(&reals) {
                    parents.set(&v.name, Value::Real(x));
                }
                let r = p.restrict(&parents)?;
                let child = r.var(&e.child).expect("child stays").clone();
                let mass = if child.is_continuous() {
                    quad_potential(&r, tol)?.value
                } else {
                    child
                        .states()
                        .iter()
                        .map(|s| r.evaluate(&Assignment::new().state(&child.name, s)))
                        .sum::<mteid_core::Result<f64>>()?
                };
                out.push(MassCheck {
                    potential: e.name.clone(),
                    parents,
                    mass,
                });
            }
        }
    }
    Ok(out)
}

fn configs(vars: &[Variable]) -> Vec<Vec<usize>> {
    vars.iter().fold(vec![Vec::new()], |acc, v| {
        acc.iter()
            .flat_map(|prefix| {
                (0..v.state_count()).map(move |s| {
                    let mut c: Vec<usize> = prefix.clone();
                    c.push(s);
                    c
                })
            })
            .collect()
    })
}

fn grid_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect()
    })
}

/// Which distributions the simulation draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// The distributions the oil wildcatter model approximates (normal,
    /// lognormal, Beta) and the exact profit.
    True,
    /// The model's own MTE potentials, by inverse CDF, and its utility
    /// potentials.
    Mte,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
}

/// A policy that always picks `state`.
pub fn fixed_choice(decision: &Variable, state: &str) -> Result<PolicyRule> {
    let choice = decision.state_index(state).ok_or_else(|| {
        mteid_core::MteError::Domain(format!("`{}` has no state `{state}`", decision.name))
    })?;
    Ok(PolicyRule {
        decision: decision.clone(),
        finite: Vec::new(),
        continuous: Vec::new(),
        rules: vec![Rule {
            states: Vec::new(),
            bounds: Vec::new(),
            choice,
        }],
    })
}

/// Draws from a univariate MTE potential.
#[derive(Debug, Clone)]
enum MteSampler {
    Discrete {
        labels: Vec<String>,
        cumulative: Vec<f64>,
    },
    Continuous {
        pieces: Vec<Piece>,
        cumulative: Vec<f64>,
    },
}

fn piece_mass_to(p: &Piece, x: f64) -> f64 {
    let iv = p.bounds[0];
    let w = x - iv.lo;
    p.constant * w
        + p.terms
            .iter()
            .map(|t| t.coef * exp_integral(t.exps[0], iv.lo, w))
            .sum::<f64>()
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut total = 0.0;
    weights
        .map(|w| {
            total += w.max(0.0);
            total
        })
        .collect()
}

impl MteSampler {
    fn new(r: &MtePotential) -> Result<Self> {
        match (r.finite_vars(), r.continuous_vars()) {
            ([v], []) => {
                let labels = v.states().to_vec();
                let weights: Vec<f64> = (0..labels.len()).map(|s| r.eval_at(&[s], &[])).collect();
                Ok(MteSampler::Discrete {
                    labels,
                    cumulative: cumulative(weights.into_iter()),
                })
            }
            ([], [_]) => {
                let pieces = r.pieces().to_vec();
                let c = cumulative(pieces.iter().map(|p| piece_mass_to(p, p.bounds[0].hi)));
                Ok(MteSampler::Continuous {
                    pieces,
                    cumulative: c,
                })
            }
            _ => Err(
                mteid_core::MteError::Domain("sampling needs a univariate density".into()).into(),
            ),
        }
    }

    fn pick(cumulative: &[f64], rng: &mut ChaCha8Rng) -> Result<(usize, f64)> {
        let total = *cumulative.last().unwrap_or(&0.0);
        if !(total > 0.0) {
            return Err(mteid_core::MteError::NonpositiveMass(total).into());
        }
        let u = rng.random::<f64>() * total;
        let i = cumulative
            .partition_point(|&c| c <= u)
            .min(cumulative.len() - 1);
        let below = if i == 0 { 0.0 } else { cumulative[i - 1] };
        Ok((i, u - below))
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Value> {
        match self {
            MteSampler::Discrete { labels, cumulative } => {
                let (i, _) = Self::pick(cumulative, rng)?;
                Ok(Value::State(labels[i].clone()))
            }
            MteSampler::Continuous { pieces, cumulative } => {
                let (i, target) = Self::pick(cumulative, rng)?;
                let p = &pieces[i];
                let (mut lo, mut hi) = (p.bounds[0].lo, p.bounds[0].hi);
                while hi - lo > INVERSION_TOL {
                    let mid = 0.5 * (lo + hi);
                    if piece_mass_to(p, mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(Value::Real(0.5 * (lo + hi)))
            }
        }
    }
}

enum Step<'a> {
    Decide(&'a PolicyRule),
    Draw {
        child: &'a Variable,
        density: &'a MtePotential,
        parents: Vec<&'a Variable>,
    },
}

/// Simulation order: a decision as soon as everything it observes is
/// known, otherwise a chance variable whose parents are all known.
fn schedule<'a>(d: &'a InfluenceDiagram, strategy: &'a [PolicyRule]) -> Result<Vec<Step<'a>>> {
    let mut known: Vec<&str> = Vec::new();
    let mut steps = Vec::new();
    while known.len() < d.variables.len() {
        let decision = d.decisions().find(|v| {
            !known.contains(&v.name.as_str())
                && d.info_arcs
                    .iter()
                    .filter(|(_, to)| *to == v.name)
                    .all(|(from, _)| known.contains(&from.as_str()))
        });
        if let Some(v) = decision {
            let policy = strategy
                .iter()
                .find(|p| p.decision.name == v.name)
                .ok_or_else(|| Error::UncoveredObservation(v.name.clone()))?;
            known.push(&v.name);
            steps.push(Step::Decide(policy));
            continue;
        }
        let next = d.probabilities.iter().find(|e| {
            !known.contains(&e.child.as_str())
                && e.potential
                    .variables()
                    .all(|v| v.name == e.child || known.contains(&v.name.as_str()))
        });
        let Some(e) = next else {
            return Err(mteid_core::MteError::Domain(
                "no simulation order fits the diagram".into(),
            )
            .into());
        };
        let child = d
            .variable(&e.child)
            .ok_or_else(|| mteid_core::MteError::Domain(format!("unknown child `{}`", e.child)))?;
        let parents = e
            .potential
            .variables()
            .filter(|v| v.name != e.child)
            .collect();
        known.push(&child.name);
        steps.push(Step::Draw {
            child,
            density: &e.potential,
            parents,
        });
    }
    Ok(steps)
}

fn is_wildcatter(d: &InfluenceDiagram) -> bool {
    let mut names: Vec<&str> = d.variables.iter().map(|v| v.name.as_str()).collect();
    names.sort_unstable();
    names == ["C", "D", "O", "P", "R", "T", "V"]
}

fn state_of<'a>(a: &'a Assignment, var: &str) -> Option<&'a str> {
    match a.get(var) {
        Some(Value::State(s)) => Some(s),
        _ => None,
    }
}

fn real_of(a: &Assignment, var: &str) -> f64 {
    match a.get(var) {
        Some(Value::Real(x)) => *x,
        _ => f64::NAN,
    }
}

struct TrueDraws {
    cost: Normal<f64>,
    price: LogNormal<f64>,
    volumes: [Normal<f64>; 2],
    readings: Vec<Beta<f64>>,
}

impl TrueDraws {
    fn new() -> Self {
        let (cm, cs) = wildcatter::COST_NORMAL;
        let (pm, ps) = wildcatter::PRICE_LOGNORMAL;
        let [(w_mu, w_sd), (s_mu, s_sd)] = wildcatter::VOLUME_NORMALS;
        TrueDraws {
            cost: Normal::new(cm, cs).expect("positive sd"),
            price: LogNormal::new(pm, ps).expect("positive sd"),
            volumes: [
                Normal::new(w_mu, w_sd).expect("positive sd"),
                Normal::new(s_mu, s_sd).expect("positive sd"),
            ],
            readings: READING_BETAS
                .iter()
                .map(|&a| Beta::new(a, a).expect("positive shape"))
                .collect(),
        }
    }

    /// `None` defers to the model's own potential.
    fn draw(&self, child: &Variable, known: &Assignment, rng: &mut ChaCha8Rng) -> Option<f64> {
        match child.name.as_str() {
            "C" => Some(self.cost.sample(rng)),
            "P" => Some(self.price.sample(rng)),
            "V" => match state_of(known, "O")? {
                "dry" => Some(rng.random::<f64>() * wildcatter::DRY_VOLUME),
                "wet" => Some(self.volumes[0].sample(rng)),
                _ => Some(self.volumes[1].sample(rng)),
            },
            "R" if child.is_continuous() => {
                if state_of(known, "T")? == "test" {
                    let o = OIL_STATES
                        .iter()
                        .position(|s| Some(*s) == state_of(known, "O"))?;
                    Some(self.readings[o].sample(rng))
                } else {
                    Some(rng.random::<f64>())
                }
            }
            _ => None,
        }
    }
}

/// Simulates `n` scenarios in temporal order, applying `strategy` at each
/// decision, and averages the realized utility.
///
/// [`Sampling::True`] is only defined for the oil wildcatter model.
pub fn monte_carlo_eu(
    d: &InfluenceDiagram,
    strategy: &[PolicyRule],
    n: usize,
    seed: u64,
    mode: Sampling,
) -> Result<Estimate> {
    if mode == Sampling::True && !is_wildcatter(d) {
        return Err(mteid_core::MteError::Domain(
            "true distributions are only known for the oil wildcatter model".into(),
        )
        .into());
    }
    let steps = schedule(d, strategy)?;
    let truth = TrueDraws::new();
    let mut cache: HashMap<(usize, Vec<String>), MteSampler> = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let mut known = Assignment::new();
        for (k, step) in steps.iter().enumerate() {
            match step {
                Step::Decide(policy) => {
                    let choice = policy
                        .choose(&known)
                        .ok_or_else(|| Error::UncoveredObservation(policy.decision.name.clone()))?;
                    known.set(&policy.decision.name, Value::State(choice.to_string()));
                }
                Step::Draw {
                    child,
                    density,
                    parents,
                } => {
                    if mode == Sampling::True {
                        if let Some(x) = truth.draw(child, &known, &mut rng) {
                            known.set(&child.name, Value::Real(x));
                            continue;
                        }
                    }
                    let mut given = Assignment::new();
                    for v in parents {
                        given.set(
                            &v.name,
                            known
                                .get(&v.name)
                                .expect("scheduled after its parents")
                                .clone(),
                        );
                    }
                    let value = if parents.iter().all(|v| v.is_finite()) {
                        let key = (
                            k,
                            parents
                                .iter()
                                .map(|v| state_of(&given, &v.name).unwrap_or("").to_string())
                                .collect(),
                        );
                        let sampler = match cache.get(&key) {
                            Some(s) => s,
                            None => {
                                let s = MteSampler::new(&density.restrict(&given)?)?;
                                cache.entry(key).or_insert(s)
                            }
                        };
                        sampler.draw(&mut rng)?
                    } else {
                        MteSampler::new(&density.restrict(&given)?)?.draw(&mut rng)?
                    };
                    known.set(&child.name, value);
                }
            }
        }
        let u = match mode {
            Sampling::True => wildcatter::profit(
                real_of(&known, "V"),
                real_of(&known, "P"),
                real_of(&known, "C"),
                state_of(&known, "D") == Some("drill"),
                state_of(&known, "T") == Some("test"),
            ),
            Sampling::Mte => d
                .utilities
                .iter()
                .map(|e| e.potential.evaluate(&known))
                .sum::<mteid_core::Result<f64>>()?,
        };
        let delta = u - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (u - mean);
    }
    let standard_error = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        standard_error,
        samples: n,
    })
}
