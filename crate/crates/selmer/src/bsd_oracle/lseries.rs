//! Weight-2 coefficients b_m and the rapidly convergent series for
//! L(E_D, 1).

use std::f64::consts::PI;

use serde::Serialize;

use super::points::count_ap;
use crate::arith::{fundamental_discriminant, kronecker};
use crate::catalog::CurveSpec;
use crate::error::{Error, Result};
use crate::sieve::build_sieve;

#[derive(Debug, Clone)]
pub struct WeightTwoCoefficients {
    b: Vec<i64>,
}

impl WeightTwoCoefficients {
    pub fn bound(&self) -> usize {
        self.b.len() - 1
    }

    pub fn get(&self, m: usize) -> i64 {
        self.b[m]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.b
    }
}

/// b_m for m ≤ bound from the traces a_p, through the Hecke recursion at
/// prime powers and multiplicativity across coprime parts.
pub fn expand_b(spec: &CurveSpec, bound: usize) -> WeightTwoCoefficients {
    let bound = bound.max(1);
    let sieve = build_sieve(bound as u64);
    let mut b = vec![0i64; bound + 1];
    b[1] = 1;
    for m in 2..=bound {
        let p = sieve.smallest_prime_factor(m as u64) as usize;
        let mut pk = p;
        while (m / pk) % p == 0 {
            pk *= p;
        }
        if pk != m {
            b[m] = b[pk] * b[m / pk];
        } else if pk == p {
            b[m] = count_ap(spec, p as u64);
        } else if spec.conductor % p as u64 == 0 {
            b[m] = b[p] * b[m / p];
        } else {
            b[m] = b[p] * b[m / p] - p as i64 * b[m / (p * p)];
        }
    }
    WeightTwoCoefficients { b }
}

#[derive(Debug, Clone, Serialize)]
pub struct TwistLData {
    pub n: u64,
    pub disc: i64,
    pub conductor_twist: u64,
    pub l1: f64,
    pub terms: usize,
    /// Rigorous bound on the truncated tail.
    pub tail_bound: f64,
    /// |L| below this is reported as consistent with zero.
    pub zero_threshold: f64,
}

impl TwistLData {
    pub fn consistent_with_zero(&self) -> bool {
        self.l1.abs() < self.zero_threshold
    }
}

/// Conductor of E_{−n} for n in a retained class: the odd part of N_E, times
/// n², times the class's power of 2.
pub fn twist_conductor(spec: &CurveSpec, n: u64) -> Result<u64> {
    let rep = spec.class_of(n).ok_or_else(|| {
        Error::Precondition(format!(
            "{} mod {} is not a retained (rank-parity even) class of {}",
            n % spec.table_modulus,
            spec.table_modulus,
            spec.label
        ))
    })?;
    let base = spec.baseline(rep)?;
    let mut odd = spec.conductor;
    while odd % 2 == 0 {
        odd /= 2;
    }
    (odd as u128 * n as u128 * n as u128 * (1u128 << base.conductor_2_exponent))
        .try_into()
        .map_err(|_| Error::Overflow("twist conductor"))
}

/// Number of terms after which 4 e^{−a(T+1)} / (1 − e^{−a}) < tol.
/// Uses |b_m| ≤ d(m) √m ≤ 2m, so each |c_m/m| ≤ 2.
fn terms_for(a: f64, tol: f64) -> usize {
    let t = ((4.0 / (tol * (-(-a).exp_m1()))).ln() / a).ceil();
    t.max(1.0) as usize
}

fn tail(a: f64, terms: usize) -> f64 {
    4.0 * (-a * (terms as f64 + 1.0)).exp() / (-(-a).exp_m1())
}

/// Neumaier-compensated sum in a fixed order.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Number of series terms needed for L(E_{−n}, 1) at the given precision.
pub fn required_terms(spec: &CurveSpec, n: u64, tol: f64) -> Result<usize> {
    let cond = twist_conductor(spec, n)?;
    let a = 2.0 * PI / (cond as f64).sqrt();
    Ok(terms_for(a, tol / 2.0))
}

/// L(E_{−n}, 1) = Σ χ_D(m) b_m / m · (e^{−2πmA/√N} + e^{−2πm/(A√N)}), valid for
/// root number +1; A = 1 is the symmetric choice, other values of A give an
/// independent check on the conductor and root number.
pub fn twisted_l1_with(spec: &CurveSpec, n: u64, b: &WeightTwoCoefficients, tol: f64, scale: f64) -> Result<TwistLData> {
    if n == 0 || !(scale > 0.0) {
        return Err(Error::Domain("need n ≥ 1 and a positive scale".into()));
    }
    let cond = twist_conductor(spec, n)?;
    let disc = fundamental_discriminant(n);
    let root = (cond as f64).sqrt();
    let (a1, a2) = (2.0 * PI * scale / root, 2.0 * PI / (scale * root));
    let slow = a1.min(a2);
    let terms = terms_for(slow, tol / 2.0);
    if terms > b.bound() {
        return Err(Error::Convergence(format!(
            "L(E_-{n}, 1) needs {terms} coefficients, only {} available",
            b.bound()
        )));
    }
    let l1 = compensated_sum((1..=terms).map(|m| {
        let bm = b.get(m);
        if bm == 0 {
            return 0.0;
        }
        let chi = kronecker(disc, m as u64);
        if chi == 0 {
            return 0.0;
        }
        let mf = m as f64;
        (chi as i64 * bm) as f64 / mf * ((-a1 * mf).exp() + (-a2 * mf).exp())
    }));
    let tail_bound = tail(a1, terms) / 2.0 + tail(a2, terms) / 2.0;
    let rounding = terms as f64 * 4.0 * f64::EPSILON;
    Ok(TwistLData {
        n,
        disc,
        conductor_twist: cond,
        l1,
        terms,
        tail_bound,
        zero_threshold: 10.0 * (tail_bound + rounding),
    })
}

pub fn twisted_l1(spec: &CurveSpec, n: u64, b: &WeightTwoCoefficients, tol: f64) -> Result<TwistLData> {
    twisted_l1_with(spec, n, b, tol, 1.0)
}
