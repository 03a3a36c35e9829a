//! Real periods of the twists E_{−n} by the arithmetic–geometric mean.

use std::f64::consts::PI;

use crate::arith::{fundamental_discriminant, gcd_i128, prime_factors};
use crate::catalog::CurveSpec;
use crate::error::{Error, Result};

fn agm(mut a: f64, mut b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Convergence(format!("AGM of non-positive arguments ({a}, {b})")));
    }
    for _ in 0..100 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            return Ok(a);
        }
        (a, b) = ((a + b) / 2.0, (a * b).sqrt());
    }
    Err(Error::Convergence("AGM did not converge".into()))
}

/// Newton polish of a root of 4x³ − g2 x − g3.
fn polish(mut x: f64, g2: f64, g3: f64) -> f64 {
    for _ in 0..8 {
        let f = 4.0 * x * x * x - g2 * x - g3;
        let df = 12.0 * x * x - g2;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        x -= step;
        if step.abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

/// Real roots of 4x³ − g2 x − g3 in decreasing order.
fn real_roots(g2: f64, g3: f64, positive_disc: bool) -> Vec<f64> {
    // x³ + p x + q with p = −g2/4, q = −g3/4
    let (p, q) = (-g2 / 4.0, -g3 / 4.0);
    if positive_disc {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut r: Vec<f64> = (0..3)
            .map(|k| polish(m * (theta - 2.0 * PI * k as f64 / 3.0).cos(), g2, g3))
            .collect();
        r.sort_by(|a, b| b.total_cmp(a));
        r
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let x = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        vec![polish(x, g2, g3)]
    }
}

/// ∫_{E(ℝ)} |dx / (2y + a1 x + a3)| for any integral model with invariants
/// (c4, c6); the identity component and, when Δ > 0, the egg.
pub fn real_period_from_c(c4: f64, c6: f64) -> Result<f64> {
    let disc = c4 * c4 * c4 - c6 * c6;
    if disc == 0.0 || !disc.is_finite() {
        return Err(Error::Domain(format!("singular or non-finite invariants ({c4}, {c6})")));
    }
    let (g2, g3) = (c4 / 12.0, c6 / 216.0);
    if disc > 0.0 {
        let e = real_roots(g2, g3, true);
        let w1 = PI / agm((e[0] - e[2]).sqrt(), (e[0] - e[1]).sqrt())?;
        Ok(2.0 * w1)
    } else {
        let e1 = real_roots(g2, g3, false)[0];
        let beta = (3.0 * e1 * e1 - g2 / 4.0).sqrt();
        Ok(2.0 * PI / agm(2.0 * beta.sqrt(), (2.0 * beta + 3.0 * e1).sqrt())?)
    }
}

/// Kraus' criterion: (c4, c6), taken from a nonsingular curve, are the
/// invariants of an integral model.
fn kraus(c4: i128, c6: i128) -> bool {
    let (r4, r6) = (c4.rem_euclid(1728), c6.rem_euclid(1728));
    if (r4 * r4 % 1728 * r4 - r6 * r6).rem_euclid(1728) != 0 {
        return false;
    }
    let v3 = {
        let (mut v, mut c) = (0, c6);
        while c != 0 && c % 3 == 0 && v < 3 {
            c /= 3;
            v += 1;
        }
        if c6 == 0 {
            3
        } else {
            v
        }
    };
    if v3 == 2 {
        return false;
    }
    c6.rem_euclid(4) == 3 || (c4.rem_euclid(16) == 0 && matches!(c6.rem_euclid(32), 0 | 8))
}

/// Invariants of a minimal model of E_D, D the discriminant of ℚ(√−n), and
/// the scale u by which it was reduced from (c4 D², c6 D³).
pub fn minimal_twist_invariants(spec: &CurveSpec, n: u64) -> Result<(i128, i128, u64)> {
    let (c4, c6) = spec.c_invariants();
    let d = fundamental_discriminant(n) as i128;
    let overflow = || Error::Overflow("twist invariants");
    let mut c4t = (c4 as i128).checked_mul(d * d).ok_or_else(overflow)?;
    let mut c6t = (c6 as i128)
        .checked_mul(d.checked_mul(d * d).ok_or_else(overflow)?)
        .ok_or_else(overflow)?;
    let mut primes = vec![2u64, 3];
    primes.extend(prime_factors(n));
    primes.extend(prime_factors(gcd_i128(c4 as i128, c6 as i128) as u64));
    primes.sort_unstable();
    primes.dedup();
    let mut u = 1u64;
    for p in primes {
        let (p4, p6) = ((p as i128).pow(4), (p as i128).pow(6));
        while c4t % p4 == 0 && c6t % p6 == 0 && kraus(c4t / p4, c6t / p6) {
            c4t /= p4;
            c6t /= p6;
            u *= p;
        }
    }
    Ok((c4t, c6t, u))
}

/// Real period of a minimal model of E_{−n}. Computed as Ω(c4, −c6)·u/√|D|
/// through the scaling Ω(λ⁴c4, λ⁶c6) = Ω(c4, c6)/λ, which avoids rounding
/// the large twisted invariants to floating point.
pub fn real_period(spec: &CurveSpec, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let (c4, c6) = spec.c_invariants();
    let (_, _, u) = minimal_twist_invariants(spec, n)?;
    let d = fundamental_discriminant(n).unsigned_abs() as f64;
    Ok(real_period_from_c(c4 as f64, -c6 as f64)? * u as f64 / d.sqrt())
}
