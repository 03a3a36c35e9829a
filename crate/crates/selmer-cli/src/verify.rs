//! Self-checks against independent oracles: theta products by direct
//! representation counts, catalogued baselines against the BSD oracle, the
//! Waldspurger identity between twists, and Cassels' square condition over a
//! whole survey.

use rayon::prelude::*;
use serde::Serialize;

use selmer::arith::is_square;
use selmer::bsd_oracle::{baseline_selmer, expand_b, real_period, required_terms, twisted_l1};
use selmer::catalog::{CurveSpec, TamagawaRule};
use selmer::qseries::{build_F, coefficient_at, expand_residues};
use selmer::sieve::build_sieve;
use selmer::survey::{survey_curve, SurveyOptions};
use selmer::waldspurger::propagate_l;

const L_TOL: f64 = 1e-12;
const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Depth {
    Quick,
    Extended,
}

struct Plan {
    theta_bound: usize,
    pairs: usize,
    pair_limit: u64,
    cassels_bound: u64,
}

impl Depth {
    fn plan(self) -> Plan {
        match self {
            Depth::Quick => Plan {
                theta_bound: 2_000,
                pairs: 5,
                pair_limit: 6_000,
                cassels_bound: 100_000,
            },
            Depth::Extended => Plan {
                theta_bound: 10_000,
                pairs: 20,
                pair_limit: 20_000,
                cassels_bound: 1_000_000,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub curve: String,
    pub passed: bool,
    pub checked: u64,
    pub failed: usize,
    pub detail: String,
    /// First few offending items; empty when the suite passed.
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &'static str, spec: &CurveSpec, checked: u64, detail: String, failures: Vec<String>) -> Self {
        Self {
            suite,
            curve: spec.label.to_string(),
            passed: failures.is_empty() && checked > 0,
            checked,
            failed: failures.len(),
            detail,
            failures: failures.into_iter().take(MAX_LISTED).collect(),
        }
    }

    fn aborted(suite: &'static str, spec: &CurveSpec, err: impl std::fmt::Display) -> Self {
        Self {
            suite,
            curve: spec.label.to_string(),
            passed: false,
            checked: 0,
            failed: 1,
            detail: "aborted".into(),
            failures: vec![err.to_string()],
        }
    }
}

fn theta(spec: &CurveSpec, bound: usize) -> SuiteReport {
    let fast = match build_F(&spec.recipe, bound) {
        Ok(f) => f,
        Err(e) => return SuiteReport::aborted("theta", spec, e),
    };
    let failures: Vec<String> = (1..=bound as u64)
        .into_par_iter()
        .filter_map(|n| {
            let direct = coefficient_at(&spec.recipe, n);
            let got = fast.coeff(n as usize);
            (got != direct).then(|| format!("n={n}: product {got}, representation count {direct}"))
        })
        .collect();
    SuiteReport::new("theta", spec, bound as u64, format!("coefficients n ≤ {bound}"), failures)
}

fn baselines(spec: &CurveSpec) -> SuiteReport {
    let terms = spec
        .classes
        .iter()
        .map(|c| required_terms(spec, c.n0_effective, L_TOL))
        .collect::<selmer::Result<Vec<_>>>();
    let terms = match terms {
        Ok(t) => t.into_iter().max().unwrap_or(0),
        Err(e) => return SuiteReport::aborted("baseline", spec, e),
    };
    let b = expand_b(spec, terms + 1);
    let failures: Vec<String> = spec
        .classes
        .par_iter()
        .flat_map_iter(|base| {
            let n = base.n0_effective;
            let mut bad = Vec::new();
            let a = coefficient_at(&spec.recipe, n);
            if a != base.a_n0 {
                bad.push(format!("class {}: a_{n} is {a}, catalog says {}", base.n0, base.a_n0));
            }
            match real_period(spec, n) {
                Ok(w) if (w / base.period - 1.0).abs() < 1e-9 => {}
                Ok(w) => bad.push(format!("class {}: period {w}, catalog says {}", base.n0, base.period)),
                Err(e) => bad.push(format!("class {}: {e}", base.n0)),
            }
            match baseline_selmer(spec, n, &b, TamagawaRule::TwoDivision) {
                Ok(r) => {
                    if r.selmer != base.selmer_n0 {
                        bad.push(format!("class {}: BSD gives #S = {}, catalog says {}", base.n0, r.selmer, base.selmer_n0));
                    }
                    if (r.l.l1 / base.l_n0 - 1.0).abs() >= 1e-9 {
                        bad.push(format!("class {}: L(1) = {}, catalog says {}", base.n0, r.l.l1, base.l_n0));
                    }
                }
                Err(e) => bad.push(format!("class {}: {e}", base.n0)),
            }
            bad
        })
        .collect();
    SuiteReport::new(
        "baseline",
        spec,
        spec.classes.len() as u64,
        "a_n0, period, L(1) and #S of every class baseline".into(),
        failures,
    )
}

/// a_{n0}² √n L(E_{−n}, 1) = a_n² √n0 L(E_{−n0}, 1), both L-values from the
/// series oracle.
fn waldspurger(spec: &CurveSpec, pairs: usize, limit: u64) -> SuiteReport {
    let sieve = build_sieve(limit);
    let mut work = Vec::new();
    let mut failures = Vec::new();
    for base in &spec.classes {
        let members = match sieve.class_members(base.n0, spec.table_modulus, limit) {
            Ok(m) => m,
            Err(e) => return SuiteReport::aborted("waldspurger", spec, e),
        };
        let chosen: Vec<(u64, u64, i64)> = members
            .into_iter()
            .filter(|&n| n != base.n0_effective)
            .map(|n| (base.n0, n, coefficient_at(&spec.recipe, n)))
            .filter(|&(_, _, a)| a != 0)
            .take(pairs)
            .collect();
        if chosen.len() < pairs {
            failures.push(format!("class {}: only {} pairs with n ≤ {limit}", base.n0, chosen.len()));
        }
        work.extend(chosen);
    }
    let terms = work
        .iter()
        .flat_map(|&(n0, n, _)| [n, spec.baseline(n0).map(|b| b.n0_effective).unwrap_or(n)])
        .map(|n| required_terms(spec, n, L_TOL))
        .collect::<selmer::Result<Vec<_>>>();
    let terms = match terms {
        Ok(t) => t.into_iter().max().unwrap_or(0),
        Err(e) => return SuiteReport::aborted("waldspurger", spec, e),
    };
    let b = expand_b(spec, terms + 1);
    let outcomes: Vec<Result<f64, String>> = work
        .par_iter()
        .map(|&(n0, n, a)| {
            let base = spec.baseline(n0).map_err(|e| e.to_string())?;
            let l = twisted_l1(spec, n, &b, L_TOL).map_err(|e| e.to_string())?.l1;
            let l0 = twisted_l1(spec, base.n0_effective, &b, L_TOL).map_err(|e| e.to_string())?.l1;
            let a0 = base.a_n0 as f64;
            let lhs = a0 * a0 * (n as f64).sqrt() * l;
            let rhs = (a * a) as f64 * (base.n0_effective as f64).sqrt() * l0;
            let defect = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
            if defect < 1e-5 {
                Ok(defect)
            } else {
                Err(format!("class {n0}, n={n}: relative defect {defect:.3e}"))
            }
        })
        .collect();
    let mut worst = 0.0f64;
    for o in outcomes {
        match o {
            Ok(d) => worst = worst.max(d),
            Err(e) => failures.push(e),
        }
    }
    SuiteReport::new(
        "waldspurger",
        spec,
        work.len() as u64,
        format!("{} pairs, n ≤ {limit}, max relative defect {worst:.2e}", work.len()),
        failures,
    )
}

fn cassels(spec: &CurveSpec, bound: u64) -> SuiteReport {
    let opts = SurveyOptions {
        bound,
        checkpoint_step: bound,
        ..Default::default()
    };
    let survey = match survey_curve(spec, &opts) {
        Ok(s) => s,
        Err(e) => return SuiteReport::aborted("cassels", spec, e),
    };
    let mut checked = 0;
    let mut failures = Vec::new();
    for class in &survey.classes {
        for r in class.results.iter().filter(|r| r.is_rank_zero()) {
            checked += 1;
            if !is_square(r.k as u128) {
                failures.push(format!("class {}, n={}: k = {} is not a square", class.n0, r.n, r.k));
            }
        }
    }
    SuiteReport::new(
        "cassels",
        spec,
        checked,
        format!("{checked} rank-zero twists with n ≤ {bound}"),
        failures,
    )
}

/// The twist n = 8090677 of 11a1, whose L-value is known to ten digits.
fn worked_example(spec: &CurveSpec) -> SuiteReport {
    const N: u64 = 8_090_677;
    const EXPECTED: f64 = 2.100_720_230_610_904_2;
    let run = || -> selmer::Result<(i64, f64)> {
        let rep = spec
            .class_of(N)
            .ok_or_else(|| selmer::Error::Precondition(format!("{N} is not in a retained class")))?;
        let series = expand_residues(&spec.recipe, N as usize, spec.table_modulus, &[rep])?;
        let a = series[0].get(N).expect("n lies in its own progression");
        Ok((a, propagate_l(N, a, spec.baseline(rep)?)?))
    };
    match run() {
        Ok((a, l)) => {
            let rel = (l / EXPECTED - 1.0).abs();
            let failures = if rel < 1e-4 {
                vec![]
            } else {
                vec![format!("L = {l}, expected {EXPECTED}")]
            };
            SuiteReport::new("worked_example", spec, 1, format!("n={N}: a_n = {a}, L = {l:.12}, relative error {rel:.2e}"), failures)
        }
        Err(e) => SuiteReport::aborted("worked_example", spec, e),
    }
}

pub fn run(specs: &[CurveSpec], depth: Depth) -> Vec<SuiteReport> {
    let plan = depth.plan();
    let mut out = Vec::new();
    for spec in specs {
        out.push(theta(spec, plan.theta_bound));
        out.push(baselines(spec));
        out.push(waldspurger(spec, plan.pairs, plan.pair_limit));
        out.push(cassels(spec, plan.cassels_bound));
        if depth == Depth::Extended && spec.label == "11a1" {
            out.push(worked_example(spec));
        }
    }
    out
}
