use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use selmer::catalog::{ClassBaseline, CurveSpec};
use selmer::qseries::build_F;
use selmer::sieve::build_sieve;
use selmer::stats::{fit_alpha, fit_epsilon_with, quotient_fit, sigma, FitOptions, RatioSeries, SIGMA_MIN_X};
use selmer::survey::{survey_curve, ClassSurvey, CurveSurvey};
use selmer::Error;

use crate::config::{ConfigError, SurveyConfig};
use crate::output::{real, round12, sink, SCHEMA_VERSION};

/// `n,a_n` for every squarefree n ≤ bound.
pub fn expand(cfg: &SurveyConfig, out: Option<&Path>) -> anyhow::Result<()> {
    let spec = cfg.curve_spec()?;
    let bound = cfg.bound as usize;
    let f = build_F(&spec.recipe, bound)?;
    let sieve = build_sieve(cfg.bound);
    let mut w = sink(out)?;
    writeln!(w, "# schema_version={SCHEMA_VERSION} curve={} bound={bound}", spec.label)?;
    writeln!(w, "n,a_n")?;
    for n in 1..=bound {
        if sieve.is_squarefree(n as u64) {
            writeln!(w, "{n},{}", f.coeff(n))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run_survey(cfg: &SurveyConfig) -> anyhow::Result<(CurveSpec, CurveSurvey)> {
    let spec = cfg.curve_spec()?;
    let survey = survey_curve(&spec, &cfg.survey_options())?;
    Ok((spec, survey))
}

#[derive(Serialize)]
struct Fit {
    alpha: f64,
    epsilon: f64,
    residual: f64,
    degenerate: bool,
}

fn fit_series(series: &RatioSeries, eps_step: f64) -> anyhow::Result<Option<Fit>> {
    let a = match fit_alpha(series, FitOptions::default()) {
        Ok(a) => a,
        Err(Error::InsufficientData(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let e = fit_epsilon_with(series, a.alpha, eps_step)?;
    Ok(Some(Fit {
        alpha: round12(a.alpha),
        epsilon: round12(e.epsilon),
        residual: round12(e.residual),
        degenerate: a.degenerate,
    }))
}

#[derive(Serialize)]
struct Row {
    m: u64,
    x: u64,
    s: u64,
    ratio: f64,
    sigma: Option<f64>,
}

#[derive(Serialize)]
struct KSummary {
    k: u64,
    fit: Option<Fit>,
    rows: Vec<Row>,
}

#[derive(Serialize)]
struct ClassSummary<'a> {
    n0: u64,
    baseline: &'a ClassBaseline,
    members: usize,
    rank_zero: usize,
    cassels_violations: &'a [u64],
    by_k: Vec<KSummary>,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    curve: &'a str,
    bound: u64,
    checkpoint_step: u64,
    epsilon_grid_step: f64,
    squarefree_count: u64,
    classes: Vec<ClassSummary<'a>>,
}

fn class_summary<'a>(c: &'a ClassSurvey, eps_step: f64) -> anyhow::Result<ClassSummary<'a>> {
    let mut by_k = Vec::new();
    for k in c.tally.ks() {
        let series = c.tally.series(k);
        let fit = fit_series(&series, eps_step)?;
        let rows = (0..series.len())
            .map(|i| Row {
                m: series.checkpoints[i],
                x: series.x[i],
                s: series.s[i],
                ratio: round12(series.ratio(i)),
                sigma: fit
                    .as_ref()
                    .filter(|_| series.x[i] >= SIGMA_MIN_X)
                    .map(|f| round12(sigma(series.x[i], f.alpha, f.epsilon).expect("x checked"))),
            })
            .collect();
        by_k.push(KSummary { k, fit, rows });
    }
    Ok(ClassSummary {
        n0: c.n0,
        baseline: &c.baseline,
        members: c.results.len(),
        rank_zero: c.results.iter().filter(|r| r.is_rank_zero()).count(),
        cassels_violations: &c.cassels_violations,
        by_k,
    })
}

/// Per-class CSV files and a JSON summary in the output directory.
pub fn survey(cfg: &SurveyConfig) -> anyhow::Result<()> {
    let dir = cfg
        .output_dir
        .as_deref()
        .ok_or_else(|| ConfigError("survey needs an output directory (--out or 'output_dir =')".into()))?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (spec, survey) = run_survey(cfg)?;
    for c in &survey.classes {
        let path = dir.join(format!("{}_{}.csv", spec.label, c.n0));
        let mut w = sink(Some(&path))?;
        writeln!(w, "# schema_version={SCHEMA_VERSION} curve={} n0={} bound={}", spec.label, c.n0, cfg.bound)?;
        writeln!(w, "n,a_n,k,selmer,L")?;
        for r in &c.results {
            let selmer = r.selmer.map(|s| s.to_string()).unwrap_or_default();
            let l = r.l_value.map(real).unwrap_or_default();
            writeln!(w, "{},{},{},{selmer},{l}", r.n, r.a_n, r.k)?;
        }
        w.flush()?;
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        curve: spec.label,
        bound: cfg.bound,
        checkpoint_step: cfg.checkpoint_step,
        epsilon_grid_step: cfg.epsilon_grid_step,
        squarefree_count: survey.squarefree_count,
        classes: survey
            .classes
            .iter()
            .map(|c| class_summary(c, cfg.epsilon_grid_step))
            .collect::<anyhow::Result<_>>()?,
    };
    let path = dir.join(format!("{}_summary.json", spec.label));
    let mut w = sink(Some(&path))?;
    serde_json::to_writer(&mut w, &summary)?;
    writeln!(w)?;
    w.flush()?;
    let violations: usize = survey.classes.iter().map(|c| c.cassels_violations.len()).sum();
    eprintln!(
        "{}: {} classes, {} squarefree n ≤ {}, {violations} Cassels violations, written to {}",
        spec.label,
        survey.classes.len(),
        survey.squarefree_count,
        cfg.bound,
        dir.display()
    );
    if violations > 0 {
        return Err(Error::Cassels(format!("{violations} rank-zero twists with non-square k; see the summary")).into());
    }
    Ok(())
}

/// A (class, k) pair written `n0:k`.
pub fn parse_pair(s: &str) -> anyhow::Result<(u64, u64)> {
    let err = || ConfigError(format!("expected n0:k, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(err)?;
    Ok((a.trim().parse().map_err(|_| err())?, b.trim().parse().map_err(|_| err())?))
}

fn class<'a>(survey: &'a CurveSurvey, n0: u64) -> anyhow::Result<&'a ClassSurvey> {
    survey.class(n0).ok_or_else(|| {
        Error::UnknownClass {
            curve: survey.curve.clone(),
            n0,
        }
        .into()
    })
}

/// CSV of fitted (α, ε) per class and k, optionally followed by quotient fits.
pub fn fit(cfg: &SurveyConfig, kmax: Option<u64>, quotients: &[String], out: Option<&Path>) -> anyhow::Result<()> {
    let pairs: Vec<((u64, u64), (u64, u64))> = quotients
        .iter()
        .map(|q| {
            let (a, b) = q
                .split_once('/')
                .ok_or_else(|| ConfigError(format!("quotient must be n0:k/n0:k, got '{q}'")))?;
            Ok((parse_pair(a)?, parse_pair(b)?))
        })
        .collect::<anyhow::Result<_>>()?;
    let spec = cfg.curve_spec()?;
    for &((a, _), (b, _)) in &pairs {
        spec.baseline(a)?;
        spec.baseline(b)?;
    }
    let (spec, survey) = run_survey(cfg)?;
    let mut w = sink(out)?;
    writeln!(w, "# schema_version={SCHEMA_VERSION} curve={} bound={}", spec.label, cfg.bound)?;
    writeln!(w, "curve,n0,k,alpha,epsilon,residual,degenerate")?;
    for c in &survey.classes {
        for k in c.tally.ks().filter(|&k| kmax.is_none_or(|m| k <= m)) {
            let row = match fit_series(&c.tally.series(k), cfg.epsilon_grid_step)? {
                Some(f) => format!("{},{},{},{}", real(f.alpha), real(f.epsilon), real(f.residual), f.degenerate),
                None => ",,,".into(),
            };
            writeln!(w, "{},{},{k},{row}", spec.label, c.n0)?;
        }
    }
    if !pairs.is_empty() {
        writeln!(w, "# quotient fits q_a/q_b = c (log log log x)^delta")?;
        writeln!(w, "curve,a,b,c,delta,points")?;
        for ((n0a, ka), (n0b, kb)) in pairs {
            let qa = class(&survey, n0a)?.tally.series(ka);
            let qb = class(&survey, n0b)?.tally.series(kb);
            let q = quotient_fit(&qa, &qb)?;
            writeln!(w, "{},{n0a}:{ka},{n0b}:{kb},{},{},{}", spec.label, real(q.c), real(q.delta), q.points)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Three whitespace-separated columns: x_{n0}(M_i), s/x, σ(x).
pub fn plot_data(
    cfg: &SurveyConfig,
    n0: u64,
    k: u64,
    alpha: Option<f64>,
    epsilon: Option<f64>,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let (spec, survey) = run_survey(cfg)?;
    let series = class(&survey, n0)?.tally.series(k);
    let empty = series.s.iter().all(|&s| s == 0);
    let fitted = if empty || (alpha.is_some() && epsilon.is_some()) {
        None
    } else {
        fit_series(&series, cfg.epsilon_grid_step)?
    };
    let alpha = alpha.or(fitted.as_ref().map(|f| f.alpha));
    let epsilon = epsilon.or(fitted.as_ref().map(|f| f.epsilon));
    let mut w = sink(out)?;
    writeln!(
        w,
        "# schema_version={SCHEMA_VERSION} curve={} n0={n0} k={k} alpha={} epsilon={}",
        spec.label,
        alpha.map(real).unwrap_or_default(),
        epsilon.map(real).unwrap_or_default()
    )?;
    writeln!(w, "# x ratio sigma")?;
    if let (false, Some(a), Some(e)) = (empty, alpha, epsilon) {
        for i in (0..series.len()).filter(|&i| series.x[i] >= SIGMA_MIN_X) {
            let x = series.x[i];
            writeln!(w, "{x} {} {}", real(series.ratio(i)), real(sigma(x, a, e)?))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableKind {
    /// s/x and σ at chosen M for one class and k.
    Ratio,
    /// Fitted α for every class and square k.
    Alpha,
}

pub struct TableArgs {
    pub kind: TableKind,
    pub n0: Option<u64>,
    pub k: Option<u64>,
    pub epsilon: f64,
    pub rows: Option<Vec<u64>>,
    pub kmax: u64,
}

pub fn tables(cfg: &SurveyConfig, args: &TableArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let (spec, survey) = run_survey(cfg)?;
    let mut w = sink(out)?;
    match args.kind {
        TableKind::Ratio => {
            let (Some(n0), Some(k)) = (args.n0, args.k) else {
                return Err(ConfigError("a ratio table needs --n0 and --k".into()).into());
            };
            let series = class(&survey, n0)?.tally.series(k);
            let alpha = fit_alpha(&series, FitOptions::default())?.alpha;
            writeln!(w, "{} n0={n0} k={k} alpha={} epsilon={}", spec.label, real(alpha), real(args.epsilon))?;
            writeln!(w, "{:>10}  {:>14}  {:>14}", "M", "s/x", "sigma")?;
            let wanted: Vec<u64> = args.rows.clone().unwrap_or_else(|| series.checkpoints.clone());
            for m in wanted {
                let i = series.checkpoints.binary_search(&m).map_err(|_| Error::Range {
                    requested: m,
                    available: cfg.bound,
                })?;
                let sig = if series.x[i] >= SIGMA_MIN_X {
                    real(sigma(series.x[i], alpha, args.epsilon)?)
                } else {
                    "-".into()
                };
                writeln!(w, "{m:>10}  {:>14}  {sig:>14}", format!("{:.6}", series.ratio(i)))?;
            }
        }
        TableKind::Alpha => {
            let mut grid: BTreeMap<u64, BTreeMap<u64, f64>> = BTreeMap::new();
            let square_ks: Vec<u64> = (0..).map(|r: u64| r * r).take_while(|&k| k <= args.kmax).collect();
            for c in &survey.classes {
                for &k in &square_ks {
                    let series = c.tally.series(k);
                    if series.s.iter().any(|&s| s > 0) {
                        if let Some(f) = fit_series(&series, cfg.epsilon_grid_step)? {
                            grid.entry(c.n0).or_default().insert(k, f.alpha);
                        }
                    }
                }
            }
            let cols: Vec<u64> = square_ks.into_iter().filter(|k| grid.values().any(|r| r.contains_key(k))).collect();
            write!(w, "{:<6} {:>5}", "E", "n0")?;
            for k in &cols {
                write!(w, " {k:>9}")?;
            }
            writeln!(w)?;
            for c in &survey.classes {
                write!(w, "{:<6} {:>5}", spec.label, c.n0)?;
                for k in &cols {
                    match grid.get(&c.n0).and_then(|r| r.get(k)) {
                        Some(a) => write!(w, " {a:>9.6}")?,
                        None => write!(w, " {:>9}", "-")?,
                    }
                }
                writeln!(w)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
