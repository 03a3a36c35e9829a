//! Transfer of Selmer orders and L-values along a congruence class:
//!
//!   #S(E_{−n}) = d(n, n0) · #S(E_{−n0}) · a_n² / a_{n0}²,
//!   L(E_{−n}, 1) = L(E_{−n0}, 1) · (a_n² / a_{n0}²) · √(n0 / n),
//!
//! where d(n, n0) is the ratio of Tamagawa products at the primes dividing
//! n0 and n. All Selmer arithmetic is exact.

use num_rational::Ratio;
use serde::Serialize;

use crate::catalog::ClassBaseline;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwistStatus {
    /// a_n = 0: L(E_{−n}, 1) vanishes, the k = 0 bucket.
    PositiveRank,
    RankZero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistResult {
    pub n: u64,
    pub a_n: i64,
    pub status: TwistStatus,
    pub selmer: Option<u64>,
    /// #S / t, zero exactly for positive rank.
    pub k: u64,
    pub l_value: Option<f64>,
}

impl TwistResult {
    pub fn is_rank_zero(&self) -> bool {
        self.status == TwistStatus::RankZero
    }
}

/// 4^{ω(n0)} / 4^{ω(n)}: the Tamagawa ratio when every c_p at p | n is 4.
pub fn d_ratio(omega_n: u8, omega_n0: u8) -> Ratio<u64> {
    tamagawa_ratio(2 * omega_n as u32, 2 * omega_n0 as u32)
}

/// 2^{e(n0)} / 2^{e(n)} for Tamagawa products C(n) = 2^{e(n)}.
pub fn tamagawa_ratio(log2_c_n: u32, log2_c_n0: u32) -> Ratio<u64> {
    if log2_c_n0 >= log2_c_n {
        Ratio::from_integer(1u64 << (log2_c_n0 - log2_c_n))
    } else {
        Ratio::new(1, 1u64 << (log2_c_n - log2_c_n0))
    }
}

/// Everything about one congruence class that the transfer needs.
#[derive(Debug, Clone, Copy)]
pub struct ClassContext<'a> {
    pub curve: &'a str,
    pub baseline: &'a ClassBaseline,
    pub torsion: u64,
}

/// Applies the transfer formula to a single twist. `d` is d(n, n0).
pub fn evaluate_twist(ctx: &ClassContext<'_>, n: u64, a_n: i64, d: Ratio<u64>) -> Result<TwistResult> {
    let base = ctx.baseline;
    if base.a_n0 == 0 {
        return Err(Error::Precondition("baseline coefficient a_n0 is zero".into()));
    }
    if a_n == 0 {
        return Ok(TwistResult {
            n,
            a_n,
            status: TwistStatus::PositiveRank,
            selmer: None,
            k: 0,
            l_value: None,
        });
    }
    let integrality = |what| Error::Integrality {
        curve: ctx.curve.to_string(),
        n0: base.n0,
        n,
        what,
    };
    let an2 = (a_n as i128 * a_n as i128) as u128;
    let a02 = (base.a_n0 as i128 * base.a_n0 as i128) as u128;
    let num = (base.selmer_n0 as u128)
        .checked_mul(an2)
        .and_then(|v| v.checked_mul(*d.numer() as u128))
        .ok_or(Error::Overflow("selmer transfer"))?;
    let den = a02 * *d.denom() as u128;
    if num % den != 0 {
        return Err(integrality("Selmer order"));
    }
    let selmer = u64::try_from(num / den).map_err(|_| Error::Overflow("selmer transfer"))?;
    if selmer == 0 || selmer % ctx.torsion != 0 {
        return Err(integrality("k = #S/t"));
    }
    Ok(TwistResult {
        n,
        a_n,
        status: TwistStatus::RankZero,
        selmer: Some(selmer),
        k: selmer / ctx.torsion,
        l_value: Some(propagate_l(n, a_n, base)?),
    })
}

/// L(E_{−n}, 1) from the class baseline by the Waldspurger identity.
pub fn propagate_l(n: u64, a_n: i64, base: &ClassBaseline) -> Result<f64> {
    if a_n == 0 {
        return Err(Error::Precondition(format!("a_{n} = 0, the L-value vanishes")));
    }
    let ratio = (a_n as f64 / base.a_n0 as f64).powi(2);
    Ok(base.l_n0 * ratio * (base.n0_effective as f64 / n as f64).sqrt())
}

/// A baseline for the same class anchored at a different member n1.
pub fn reroot(base: &ClassBaseline, twist: &TwistResult) -> Result<ClassBaseline> {
    let (Some(selmer), Some(l)) = (twist.selmer, twist.l_value) else {
        return Err(Error::Precondition("cannot re-root at a positive-rank twist".into()));
    };
    Ok(ClassBaseline {
        n0_effective: twist.n,
        a_n0: twist.a_n,
        selmer_n0: selmer,
        l_n0: l,
        period: base.period * (base.n0_effective as f64 / twist.n as f64).sqrt(),
        ..base.clone()
    })
}
