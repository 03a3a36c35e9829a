//! Counting functions, the approximation σ(x) = α (log log x)^{1+ε} / log x,
//! and the fits built on it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waldspurger::TwistResult;

/// Default spacing of checkpoints M_i = 50000·i.
pub const CHECKPOINT_STEP: u64 = 50_000;

/// Smallest x with log log x > 1, so (log log x)^{1+ε} is real and
/// increasing in ε; checkpoints with fewer class members are skipped.
pub const SIGMA_MIN_X: u64 = 16;

pub fn default_checkpoints(limit: u64) -> Vec<u64> {
    (1..=limit / CHECKPOINT_STEP).map(|i| i * CHECKPOINT_STEP).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub curve: String,
    pub n0: u64,
    pub k: u64,
}

/// x_{n0}(M_i) and s_{n0,k}(M_i) at ascending checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub checkpoints: Vec<u64>,
    pub x: Vec<u64>,
    pub s: Vec<u64>,
    pub meta: SeriesMeta,
}

impl RatioSeries {
    pub fn new(checkpoints: Vec<u64>, x: Vec<u64>, s: Vec<u64>, meta: SeriesMeta) -> Result<Self> {
        if checkpoints.len() != x.len() || x.len() != s.len() {
            return Err(Error::Dimension {
                lhs: checkpoints.len(),
                rhs: x.len().max(s.len()),
            });
        }
        let ascending = |v: &[u64]| v.windows(2).all(|w| w[0] <= w[1]);
        if !checkpoints.windows(2).all(|w| w[0] < w[1]) || !ascending(&x) || !ascending(&s) {
            return Err(Error::Domain("checkpoints must increase and counts must not decrease".into()));
        }
        if s.iter().zip(&x).any(|(s, x)| s > x) {
            return Err(Error::Domain("s exceeds x at some checkpoint".into()));
        }
        Ok(Self { checkpoints, x, s, meta })
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// q_{n0,k}(M_i) = s / x, zero when the class is still empty.
    pub fn ratio(&self, i: usize) -> f64 {
        if self.x[i] == 0 {
            0.0
        } else {
            self.s[i] as f64 / self.x[i] as f64
        }
    }

    pub fn ratios(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.ratio(i)).collect()
    }

    /// Value at an exact checkpoint.
    pub fn ratio_at(&self, m: u64) -> Option<f64> {
        self.checkpoints.iter().position(|&c| c == m).map(|i| self.ratio(i))
    }
}

/// Counts for every k of one class: x(M_i) and s_k(M_i).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTally {
    pub curve: String,
    pub n0: u64,
    pub checkpoints: Vec<u64>,
    pub x: Vec<u64>,
    pub by_k: BTreeMap<u64, Vec<u64>>,
}

impl ClassTally {
    /// One pass over the class's twists. `surveyed_to` is the bound up to
    /// which `results` is complete.
    pub fn build<'a>(
        curve: &str,
        n0: u64,
        results: impl IntoIterator<Item = &'a TwistResult>,
        checkpoints: &[u64],
        surveyed_to: u64,
    ) -> Result<Self> {
        if let Some(&last) = checkpoints.last() {
            if last > surveyed_to {
                return Err(Error::Range {
                    requested: last,
                    available: surveyed_to,
                });
            }
        }
        if !checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Domain("checkpoints must be strictly increasing".into()));
        }
        let slots = checkpoints.len();
        // increments land in the first checkpoint ≥ n, then a prefix sum
        let mut x = vec![0u64; slots];
        let mut by_k: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for r in results {
            let slot = checkpoints.partition_point(|&m| m < r.n);
            if slot == slots {
                continue;
            }
            x[slot] += 1;
            by_k.entry(r.k).or_insert_with(|| vec![0; slots])[slot] += 1;
        }
        let prefix = |v: &mut Vec<u64>| {
            for i in 1..v.len() {
                v[i] += v[i - 1];
            }
        };
        prefix(&mut x);
        by_k.values_mut().for_each(prefix);
        Ok(Self {
            curve: curve.to_string(),
            n0,
            checkpoints: checkpoints.to_vec(),
            x,
            by_k,
        })
    }

    pub fn ks(&self) -> impl Iterator<Item = u64> + '_ {
        self.by_k.keys().copied()
    }

    /// The series for one k; a k that never occurs gives s ≡ 0.
    pub fn series(&self, k: u64) -> RatioSeries {
        RatioSeries {
            checkpoints: self.checkpoints.clone(),
            x: self.x.clone(),
            s: self.by_k.get(&k).cloned().unwrap_or_else(|| vec![0; self.checkpoints.len()]),
            meta: SeriesMeta {
                curve: self.curve.clone(),
                n0: self.n0,
                k,
            },
        }
    }
}

/// Tally for a single k.
pub fn tally(results: &[TwistResult], k: u64, checkpoints: &[u64], surveyed_to: u64) -> Result<RatioSeries> {
    Ok(ClassTally::build("", 0, results, checkpoints, surveyed_to)?.series(k))
}

fn loglog_over_log(x: f64) -> f64 {
    x.ln().ln() / x.ln()
}

/// σ(x) = α (log log x)^{1+ε} / log x.
pub fn sigma(x: u64, alpha: f64, epsilon: f64) -> Result<f64> {
    if x < SIGMA_MIN_X {
        return Err(Error::Domain(format!("sigma needs x ≥ {SIGMA_MIN_X}, got {x}")));
    }
    let l = (x as f64).ln();
    Ok(alpha * l.ln().powf(1.0 + epsilon) / l)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    /// α_i weighted by x(M_i).
    #[default]
    SampleSize,
    Uniform,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Intervals {
    /// [0, M_i].
    #[default]
    Cumulative,
    /// (M_{i−1}, M_i].
    Disjoint,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub intervals: Intervals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    /// Every s_i was zero.
    pub degenerate: bool,
}

/// Per-checkpoint (α_i, weight) pairs.
fn alpha_terms(series: &RatioSeries, opts: FitOptions) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..series.len() {
        let x = series.x[i];
        if x < SIGMA_MIN_X {
            continue;
        }
        let (ds, dx) = match opts.intervals {
            Intervals::Cumulative => (series.s[i], x),
            Intervals::Disjoint => {
                let (s0, x0) = if i == 0 { (0, 0) } else { (series.s[i - 1], series.x[i - 1]) };
                (series.s[i] - s0, x - x0)
            }
        };
        if dx == 0 {
            continue;
        }
        let q = ds as f64 / dx as f64;
        let weight = match opts.weighting {
            Weighting::SampleSize => dx as f64,
            Weighting::Uniform => 1.0,
        };
        out.push((q / loglog_over_log(x as f64), weight));
    }
    out
}

/// Weighted average of α_i = q_i / (log log x_i / log x_i).
pub fn fit_alpha(series: &RatioSeries, opts: FitOptions) -> Result<AlphaFit> {
    let terms = alpha_terms(series, opts);
    if terms.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable checkpoints for {} class {} k={}",
            terms.len(),
            series.meta.curve,
            series.meta.n0,
            series.meta.k
        )));
    }
    if series.s.iter().all(|&s| s == 0) {
        return Ok(AlphaFit {
            alpha: 0.0,
            degenerate: true,
        });
    }
    let (num, den) = terms.iter().fold((0.0, 0.0), |(n, d), &(a, w)| (n + a * w, d + w));
    Ok(AlphaFit {
        alpha: num / den,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub epsilon: f64,
    /// Root-mean-square of q_i − σ(x_i) over the usable checkpoints.
    pub residual: f64,
}

pub const EPSILON_GRID: std::ops::RangeInclusive<i32> = -20..=20;
pub const EPSILON_STEP: f64 = 0.001;

fn rms_residual(series: &RatioSeries, alpha: f64, epsilon: f64) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for i in 0..series.len() {
        if series.x[i] < SIGMA_MIN_X {
            continue;
        }
        let fit = sigma(series.x[i], alpha, epsilon).expect("x checked above");
        sum += (series.ratio(i) - fit).powi(2);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Grid search ε ∈ {−0.020, …, 0.020} at fixed α, ties toward ε = 0.
pub fn fit_epsilon(series: &RatioSeries, alpha: f64) -> Result<FitResult> {
    fit_epsilon_with(series, alpha, EPSILON_STEP)
}

/// As [`fit_epsilon`] on the grid j·step, |j·step| ≤ 0.020.
pub fn fit_epsilon_with(series: &RatioSeries, alpha: f64, step: f64) -> Result<FitResult> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be non-negative, got {alpha}")));
    }
    let reach = *EPSILON_GRID.end() as f64 * EPSILON_STEP;
    if !(step > 0.0 && step <= reach) {
        return Err(Error::Domain(format!("epsilon step must lie in (0, {reach}], got {step}")));
    }
    let half = (reach / step + 1e-9).floor() as i32;
    let mut best: Option<(f64, i32)> = None;
    for j in -half..=half {
        let r = rms_residual(series, alpha, j as f64 * step);
        let better = match best {
            None => true,
            Some((br, bj)) => r < br || (r == br && j.abs() < bj.abs()),
        };
        if better {
            best = Some((r, j));
        }
    }
    let (residual, j) = best.expect("grid is non-empty");
    Ok(FitResult {
        alpha,
        epsilon: j as f64 * step,
        residual,
    })
}

/// α, then ε, with the default options.
pub fn fit(series: &RatioSeries, opts: FitOptions) -> Result<(AlphaFit, FitResult)> {
    let a = fit_alpha(series, opts)?;
    Ok((a, fit_epsilon(series, a.alpha)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientFit {
    pub c: f64,
    pub delta: f64,
    pub points: usize,
}

/// Least squares for log(q_a / q_b) = log c + δ · log(log log x) over the
/// checkpoints where both ratios are positive; x is taken from `a`.
pub fn quotient_fit(a: &RatioSeries, b: &RatioSeries) -> Result<QuotientFit> {
    if a.checkpoints != b.checkpoints {
        return Err(Error::Precondition("series have different checkpoints".into()));
    }
    let pts: Vec<(f64, f64)> = (0..a.len())
        .filter(|&i| a.x[i] >= SIGMA_MIN_X && a.ratio(i) > 0.0 && b.ratio(i) > 0.0)
        .map(|i| ((a.x[i] as f64).ln().ln().ln(), (a.ratio(i) / b.ratio(i)).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!("{} usable checkpoints for a quotient fit", pts.len())));
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0 / n, y + p.1 / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(sxy, sxx), p| (sxy + (p.0 - mx) * (p.1 - my), sxx + (p.0 - mx).powi(2)));
    let delta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(QuotientFit {
        c: (my - delta * mx).exp(),
        delta,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waldspurger::TwistStatus;
    use proptest::prelude::*;

    fn meta() -> SeriesMeta {
        SeriesMeta {
            curve: "t".into(),
            n0: 1,
            k: 1,
        }
    }

    /// A series whose ratios are (up to rounding of s) the given function of x.
    fn synthetic(f: impl Fn(u64) -> f64) -> RatioSeries {
        let checkpoints: Vec<u64> = (1..=200).map(|i| i * 50_000).collect();
        let x: Vec<u64> = checkpoints.iter().map(|m| m / 7).collect();
        let s = x.iter().map(|&x| (f(x) * x as f64).round() as u64).collect();
        RatioSeries::new(checkpoints, x, s, meta()).unwrap()
    }

    fn twist(n: u64, k: u64) -> TwistResult {
        TwistResult {
            n,
            a_n: if k == 0 { 0 } else { 1 },
            status: if k == 0 { TwistStatus::PositiveRank } else { TwistStatus::RankZero },
            selmer: None,
            k,
            l_value: None,
        }
    }

    #[test]
    fn sigma_examples() {
        // log log 16 = 1.019781…, log 16 = 2.772588…
        let direct = 16f64.ln().ln() / 16f64.ln();
        assert_eq!(sigma(16, 1.0, 0.0).unwrap(), direct);
        assert!((direct - 0.367808).abs() < 1e-6);
        let x = 123_456;
        let l = (x as f64).ln();
        assert_eq!(sigma(x, 0.7, 0.0).unwrap(), 0.7 * l.ln() / l);
        assert!(matches!(sigma(15, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn alpha_self_consistency() {
        // exact ratios: build s/x directly without rounding through integers
        let mut series = synthetic(|_| 0.0);
        let alpha0 = 0.3141;
        series.x = series.checkpoints.clone();
        series.s = series.x.clone();
        let terms: Vec<f64> = alpha_terms(&series, FitOptions::default()).iter().map(|t| t.0).collect();
        // with s = x every α_i is log x / log log x; rescaling gives α0
        let scaled: Vec<f64> = series
            .x
            .iter()
            .zip(&terms)
            .map(|(&x, a)| a * alpha0 * loglog_over_log(x as f64))
            .collect();
        assert!(scaled.iter().all(|a| (a - alpha0).abs() < 1e-12));
        // and with integer rounding the fit is still close
        let s = synthetic(|x| sigma(x, alpha0, 0.0).unwrap());
        let a = fit_alpha(&s, FitOptions::default()).unwrap();
        assert!((a.alpha - alpha0).abs() < 1e-5, "{}", a.alpha);
        assert!(!a.degenerate);
    }

    #[test]
    fn degenerate_series() {
        let s = synthetic(|_| 0.0);
        let a = fit_alpha(&s, FitOptions::default()).unwrap();
        assert_eq!(a, AlphaFit { alpha: 0.0, degenerate: true });
        let e = fit_epsilon(&s, 0.0).unwrap();
        assert_eq!(e.epsilon, 0.0);
    }

    #[test]
    fn epsilon_recovered() {
        let s = synthetic(|x| sigma(x, 0.28, 0.01).unwrap());
        let r = fit_epsilon(&s, 0.28).unwrap();
        assert!((r.epsilon - 0.01).abs() <= EPSILON_STEP + 1e-12, "{}", r.epsilon);
        let coarse = fit_epsilon_with(&s, 0.28, 0.005).unwrap();
        assert!((coarse.epsilon - 0.01).abs() < 1e-12, "{}", coarse.epsilon);
        assert!(fit_epsilon_with(&s, 0.28, 0.0).is_err());
        assert!(fit_epsilon_with(&s, 0.28, 0.5).is_err());
    }

    #[test]
    fn too_few_checkpoints() {
        let s = RatioSeries::new(vec![50_000], vec![1000], vec![10], meta()).unwrap();
        assert!(matches!(fit_alpha(&s, FitOptions::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn quotient_identities() {
        let a = synthetic(|x| sigma(x, 0.2, 0.0).unwrap());
        let q = quotient_fit(&a, &a).unwrap();
        assert!((q.c - 1.0).abs() < 1e-12 && q.delta.abs() < 1e-12);
        let mut b = a.clone();
        b.s = a.s.iter().map(|s| 2 * s).collect();
        let q = quotient_fit(&a, &b).unwrap();
        assert!((q.c - 0.5).abs() < 1e-12 && q.delta.abs() < 1e-9, "{q:?}");
        let z = synthetic(|_| 0.0);
        assert!(matches!(quotient_fit(&a, &z), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn tally_counts_and_range() {
        let results: Vec<TwistResult> = (1..=100).map(|n| twist(n, n % 3)).collect();
        let t = ClassTally::build("t", 1, &results, &[10, 50, 100], 100).unwrap();
        assert_eq!(t.x, vec![10, 50, 100]);
        assert_eq!(t.by_k[&0], vec![3, 16, 33]);
        assert_eq!(t.series(7).s, vec![0, 0, 0]);
        assert!(matches!(
            ClassTally::build("t", 1, &results, &[10, 200], 100),
            Err(Error::Range { requested: 200, available: 100 })
        ));
        let one = tally(&results, 1, &[10, 100], 100).unwrap();
        assert_eq!(one.s, vec![4, 34]);
    }

    #[test]
    fn disjoint_and_uniform_options() {
        let s = synthetic(|_| 0.25);
        for opts in [
            FitOptions { weighting: Weighting::Uniform, intervals: Intervals::Cumulative },
            FitOptions { weighting: Weighting::SampleSize, intervals: Intervals::Disjoint },
        ] {
            let a = fit_alpha(&s, opts).unwrap();
            assert!(a.alpha > 0.0);
        }
    }

    proptest! {
        #[test]
        fn partition_identity(ks in prop::collection::vec(0u64..6, 1..400)) {
            let results: Vec<TwistResult> = ks.iter().enumerate().map(|(i, &k)| twist(2 * i as u64 + 1, k)).collect();
            let top = 2 * ks.len() as u64;
            let cps: Vec<u64> = (1..=4).map(|i| i * top / 4).filter(|&c| c > 0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
            let t = ClassTally::build("t", 1, &results, &cps, top).unwrap();
            for i in 0..cps.len() {
                let total: u64 = t.by_k.values().map(|v| v[i]).sum();
                prop_assert_eq!(total, t.x[i]);
                for k in t.ks() {
                    let r = t.series(k).ratio(i);
                    prop_assert!((0.0..=1.0).contains(&r));
                }
            }
            for v in t.by_k.values() {
                prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
            }
        }

        #[test]
        fn alpha_is_linear(lambda in 1u64..5, steps in prop::collection::vec(0u64..500, 2..60)) {
            let checkpoints: Vec<u64> = (1..=steps.len() as u64).map(|i| i * 50_000).collect();
            let x: Vec<u64> = (1..=steps.len() as u64).map(|i| i * 5000).collect();
            let s: Vec<u64> = steps.iter().scan(0, |acc, d| { *acc += d; Some(*acc) }).collect();
            let a = RatioSeries::new(checkpoints.clone(), x.iter().map(|v| v * lambda).collect(), s.clone(), meta()).unwrap();
            let b = RatioSeries::new(checkpoints, a.x.clone(), s.iter().map(|v| v * lambda).collect(), meta()).unwrap();
            let opts = FitOptions::default();
            let (fa, fb) = (fit_alpha(&a, opts).unwrap().alpha, fit_alpha(&b, opts).unwrap().alpha);
            prop_assert!((fb - lambda as f64 * fa).abs() <= 1e-9 * fb.max(1e-300));
        }
    }
}
