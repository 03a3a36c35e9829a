//! One curve, all retained classes, every squarefree n up to a bound:
//! coefficients, Selmer orders by transfer, and the checkpoint tallies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{cubic_root_count, is_square};
use crate::catalog::{ClassBaseline, CurveSpec, TamagawaRule};
use crate::error::{Error, Result};
use crate::qseries::expand_residues;
use crate::sieve::{build_sieve, SieveTables};
use crate::stats::{ClassTally, CHECKPOINT_STEP};
use crate::waldspurger::{evaluate_twist, tamagawa_ratio, ClassContext, TwistResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyOptions {
    pub bound: u64,
    /// Class representatives to survey; `None` means all.
    pub classes: Option<Vec<u64>>,
    pub checkpoint_step: u64,
    pub tamagawa: TamagawaRule,
    /// Multiplies every coefficient of F (and each a_n0); the outputs must
    /// not depend on it.
    pub coefficient_scale: i64,
}

impl Default for SurveyOptions {
    fn default() -> Self {
        Self {
            bound: 10_000_000,
            classes: None,
            checkpoint_step: CHECKPOINT_STEP,
            tamagawa: TamagawaRule::default(),
            coefficient_scale: 1,
        }
    }
}

impl SurveyOptions {
    pub fn checkpoints(&self) -> Vec<u64> {
        (1..=self.bound / self.checkpoint_step).map(|i| i * self.checkpoint_step).collect()
    }

    pub fn validate(&self, spec: &CurveSpec) -> Result<()> {
        if self.checkpoint_step == 0 || self.bound < self.checkpoint_step {
            return Err(Error::Domain(format!(
                "bound {} must be at least the checkpoint step {}",
                self.bound, self.checkpoint_step
            )));
        }
        if self.coefficient_scale == 0 {
            return Err(Error::Domain("coefficient scale must be nonzero".into()));
        }
        if let Some(cls) = &self.classes {
            for &n0 in cls {
                spec.baseline(n0)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSurvey {
    pub n0: u64,
    pub baseline: ClassBaseline,
    /// Every squarefree class member up to the bound, ascending.
    pub results: Vec<TwistResult>,
    pub tally: ClassTally,
    /// Rank-zero twists whose k = #S/t is not a perfect square.
    pub cassels_violations: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSurvey {
    pub curve: String,
    pub options: SurveyOptions,
    pub squarefree_count: u64,
    pub classes: Vec<ClassSurvey>,
}

impl CurveSurvey {
    pub fn class(&self, n0: u64) -> Option<&ClassSurvey> {
        self.classes.iter().find(|c| c.n0 == n0)
    }
}

/// log₂ c_p for every odd prime p ≤ bound not dividing the conductor (class
/// members are coprime to 2N, so the other entries are never read).
pub fn tamagawa_table(spec: &CurveSpec, sieve: &SieveTables, rule: TamagawaRule) -> Vec<u8> {
    let mut table = vec![0u8; sieve.bound() as usize + 1];
    let cubic = spec.two_division_cubic();
    let values: Vec<(u32, u8)> = sieve
        .primes()
        .par_iter()
        .filter(|&&p| p != 2 && spec.conductor % p as u64 != 0)
        .map(|&p| {
            let v = match rule {
                TamagawaRule::Uniform => 2,
                TamagawaRule::TwoDivision => match cubic_root_count(cubic, p as u64) {
                    0 => 0,
                    1 => 1,
                    _ => 2,
                },
            };
            (p, v)
        })
        .collect();
    for (p, v) in values {
        table[p as usize] = v;
    }
    table
}

fn log2_c(sieve: &SieveTables, table: &[u8], n: u64) -> u32 {
    sieve.prime_divisors(n).map(|p| table[p as usize] as u32).sum()
}

pub fn survey_curve(spec: &CurveSpec, opts: &SurveyOptions) -> Result<CurveSurvey> {
    opts.validate(spec)?;
    let bound = opts.bound;
    let sieve = build_sieve(bound);
    survey_with_sieve(spec, opts, &sieve)
}

/// As [`survey_curve`], reusing a sieve that reaches at least the bound.
pub fn survey_with_sieve(spec: &CurveSpec, opts: &SurveyOptions, sieve: &SieveTables) -> Result<CurveSurvey> {
    opts.validate(spec)?;
    let bound = opts.bound;
    if sieve.bound() < bound {
        return Err(Error::Range {
            requested: bound,
            available: sieve.bound(),
        });
    }
    let reps: Vec<u64> = match &opts.classes {
        Some(c) => c.clone(),
        None => spec.class_reps(),
    };
    let usize_bound = usize::try_from(bound).map_err(|_| Error::Overflow("survey bound"))?;
    let coefficients = expand_residues(&spec.recipe, usize_bound, spec.table_modulus, &reps)?;
    let table = tamagawa_table(spec, sieve, opts.tamagawa);
    let checkpoints = opts.checkpoints();
    let scale = opts.coefficient_scale;

    let classes = reps
        .par_iter()
        .zip(coefficients.par_iter())
        .map(|(&n0, series)| {
            let mut baseline = spec.baseline(n0)?.clone();
            baseline.a_n0 = baseline.a_n0.checked_mul(scale).ok_or(Error::Overflow("coefficient scale"))?;
            let ctx = ClassContext {
                curve: spec.label,
                baseline: &baseline,
                torsion: spec.family_torsion,
            };
            let e0 = log2_c(sieve, &table, baseline.n0_effective);
            let members = sieve.class_members(n0, spec.table_modulus, bound)?;
            let results = members
                .iter()
                .map(|&n| {
                    let a = series.get(n).expect("class member lies in the expanded progression");
                    let a = a.checked_mul(scale).ok_or(Error::Overflow("coefficient scale"))?;
                    let d = tamagawa_ratio(log2_c(sieve, &table, n), e0);
                    evaluate_twist(&ctx, n, a, d)
                })
                .collect::<Result<Vec<_>>>()?;
            let cassels_violations = results
                .iter()
                .filter(|r| r.is_rank_zero() && !is_square(r.k as u128))
                .map(|r| r.n)
                .collect();
            let tally = ClassTally::build(spec.label, n0, &results, &checkpoints, bound)?;
            Ok(ClassSurvey {
                n0,
                baseline: spec.baseline(n0)?.clone(),
                results,
                tally,
                cassels_violations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveSurvey {
        curve: spec.label.to_string(),
        options: opts.clone(),
        squarefree_count: sieve.squarefree_count(bound),
        classes,
    })
}
