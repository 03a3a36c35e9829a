//! Squarefree flags, distinct-prime counts and smallest prime factors for
//! every n up to a bound, from a single linear sieve pass.

use bitvec::prelude::*;

use crate::arith::gcd;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SieveTables {
    bound: u64,
    squarefree: BitVec<u64, Lsb0>,
    omega: Vec<u8>,
    spf: Vec<u32>,
    primes: Vec<u32>,
}

/// Linear sieve: every composite is struck exactly once, by its smallest
/// prime factor, which lets ω and squarefreeness be carried along from n/p.
pub fn build_sieve(bound: u64) -> SieveTables {
    assert!(bound >= 1, "sieve bound must be positive");
    assert!(bound < u32::MAX as u64, "sieve bound exceeds the u32 factor table");
    let m = bound as usize;
    let mut spf = vec![0u32; m + 1];
    let mut omega = vec![0u8; m + 1];
    let mut squarefree = bitvec![u64, Lsb0; 0; m + 1];
    let mut primes: Vec<u32> = Vec::with_capacity(approx_prime_count(bound));
    squarefree.set(1, true);
    for i in 2..=m {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
            omega[i] = 1;
            squarefree.set(i, true);
        }
        let si = spf[i];
        for &p in &primes {
            if p > si {
                break;
            }
            let j = i * p as usize;
            if j > m {
                break;
            }
            spf[j] = p;
            if p == si {
                omega[j] = omega[i];
            } else {
                omega[j] = omega[i] + 1;
                if squarefree[i] {
                    squarefree.set(j, true);
                }
            }
        }
    }
    SieveTables {
        bound,
        squarefree,
        omega,
        spf,
        primes,
    }
}

fn approx_prime_count(bound: u64) -> usize {
    let x = bound.max(16) as f64;
    (1.26 * x / x.ln()) as usize
}

impl SieveTables {
    pub fn bound(&self) -> u64 {
        self.bound
    }

    #[inline]
    pub fn is_squarefree(&self, n: u64) -> bool {
        self.squarefree[n as usize]
    }

    /// Number of distinct prime divisors.
    #[inline]
    pub fn omega(&self, n: u64) -> u8 {
        self.omega[n as usize]
    }

    #[inline]
    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Distinct prime divisors of `n`, ascending.
    pub fn prime_divisors(&self, mut n: u64) -> impl Iterator<Item = u64> + '_ {
        std::iter::from_fn(move || {
            if n <= 1 {
                return None;
            }
            let p = self.spf[n as usize] as u64;
            while n % p == 0 {
                n /= p;
            }
            Some(p)
        })
    }

    pub fn squarefree_count(&self, limit: u64) -> u64 {
        let limit = limit.min(self.bound) as usize;
        self.squarefree[1..=limit].count_ones() as u64
    }

    /// Squarefree n ≤ limit with n ≡ n0 (mod modulus), ascending.
    pub fn class_members(&self, n0: u64, modulus: u64, limit: u64) -> Result<Vec<u64>> {
        check_class(n0, modulus)?;
        if limit > self.bound {
            return Err(Error::Range {
                requested: limit,
                available: self.bound,
            });
        }
        Ok((n0..=limit)
            .step_by(modulus as usize)
            .filter(|&n| self.is_squarefree(n))
            .collect())
    }
}

pub(crate) fn check_class(n0: u64, modulus: u64) -> Result<()> {
    if modulus == 0 || n0 == 0 || n0 >= modulus || gcd(n0, modulus) != 1 {
        return Err(Error::InvalidClass { n0, modulus });
    }
    Ok(())
}

/// Free-standing form of [`SieveTables::class_members`].
pub fn class_members(tables: &SieveTables, n0: u64, modulus: u64, limit: u64) -> Result<Vec<u64>> {
    tables.class_members(n0, modulus, limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut d = 2;
        while d * d <= n {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            if e > 0 {
                out.push((d, e));
            }
            d += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    #[test]
    fn small_values() {
        let s = build_sieve(100);
        assert!(s.is_squarefree(1));
        assert_eq!(s.omega(1), 0);
        assert!(!s.is_squarefree(12));
        assert!(s.is_squarefree(15));
        assert_eq!(s.omega(15), 2);
        assert_eq!(s.omega(64), 1);
        assert_eq!(s.omega(30), 3);
        assert_eq!(s.smallest_prime_factor(91), 7);
        assert_eq!(s.prime_divisors(90).collect::<Vec<_>>(), vec![2, 3, 5]);
    }

    #[test]
    fn squarefree_count_matches_trial_division() {
        let s = build_sieve(10_000);
        let brute = (1..=10_000u64)
            .filter(|&n| trial_factor(n).iter().all(|&(_, e)| e == 1))
            .count() as u64;
        assert_eq!(brute, 6083);
        assert_eq!(s.squarefree_count(10_000), brute);
    }

    #[test]
    fn class_members_examples() {
        let s = build_sieve(1000);
        assert_eq!(s.class_members(1, 44, 100).unwrap(), vec![1, 89]);
        assert_eq!(s.class_members(3, 44, 50).unwrap(), vec![3, 47]);
        assert!(matches!(s.class_members(11, 44, 100), Err(Error::InvalidClass { .. })));
        assert!(matches!(s.class_members(2, 44, 100), Err(Error::InvalidClass { .. })));
        assert!(matches!(s.class_members(1, 44, 5000), Err(Error::Range { .. })));
    }

    #[test]
    fn class_count_at_one_million_matches_trial_division() {
        let s = build_sieve(1_000_000);
        for n0 in [1u64, 3, 5, 15, 23, 31, 37] {
            let brute = (n0..=1_000_000)
                .step_by(44)
                .filter(|&n| trial_factor(n).iter().all(|&(_, e)| e == 1))
                .count();
            assert_eq!(s.class_members(n0, 44, 1_000_000).unwrap().len(), brute);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn omega_and_flags_match_trial_division(n in 1u64..100_000) {
            let s = build_sieve(100_000);
            let f = trial_factor(n);
            prop_assert_eq!(s.omega(n) as usize, f.len());
            prop_assert_eq!(s.is_squarefree(n), f.iter().all(|&(_, e)| e == 1));
        }

        #[test]
        fn members_satisfy_every_predicate(n0 in 1u64..136, limit in 1u64..20_000) {
            prop_assume!(gcd(n0, 136) == 1);
            let s = build_sieve(20_000);
            let members = s.class_members(n0, 136, limit).unwrap();
            prop_assert!(members.windows(2).all(|w| w[0] < w[1]));
            for &n in &members {
                prop_assert!(n <= limit && n % 136 == n0);
                prop_assert!(trial_factor(n).iter().all(|&(_, e)| e == 1));
                prop_assert!(n % 2 == 1 && n % 17 != 0);
            }
        }
    }
}
