//! Small exact-arithmetic helpers shared by the sieve, the Waldspurger
//! transfer and the L-series oracle.

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Floor of the square root, exact for every `u64`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).map_or(true, |sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).map_or(false, |sq| sq <= n) {
        r += 1;
    }
    r
}

pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u128;
    while r.checked_mul(r).map_or(true, |sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).map_or(false, |sq| sq <= n) {
        r += 1;
    }
    r
}

pub fn is_square(n: u128) -> bool {
    let r = isqrt_u128(n);
    r * r == n
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Modular inverse for prime `p`, via Fermat.
pub fn inv_mod_prime(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors by trial division. Only used on small inputs.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: i64, n: u64) -> i8 {
    assert!(n % 2 == 1, "jacobi symbol needs an odd modulus");
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut sign = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Kronecker symbol (d/m) for m ≥ 1.
///
/// The factor (d/2) is 0 for even d, +1 for d ≡ ±1 (mod 8) and −1 for
/// d ≡ ±3 (mod 8); the odd part of m is handled by the Jacobi symbol.
pub fn kronecker(d: i64, m: u64) -> i8 {
    assert!(m > 0);
    let tz = m.trailing_zeros();
    let odd = m >> tz;
    let mut sign = 1i8;
    if tz > 0 {
        if d % 2 == 0 {
            return 0;
        }
        if matches!(d.rem_euclid(8), 3 | 5) && tz % 2 == 1 {
            sign = -1;
        }
    }
    sign * jacobi(d, odd)
}

/// Discriminant of ℚ(√−n) for squarefree n ≥ 1.
pub fn fundamental_discriminant(n: u64) -> i64 {
    if n % 4 == 3 {
        -(n as i64)
    } else {
        -4 * n as i64
    }
}

/// Number of roots in 𝔽_p of `c3 x³ + c2 x² + c1 x + c0` for an odd prime p
/// not dividing `c3` and a squarefree reduction, computed as
/// deg gcd(x^p − x, f).
pub fn cubic_root_count(coeffs: [i64; 4], p: u64) -> u32 {
    let red = |c: i64| c.rem_euclid(p as i64) as u64;
    let lead = red(coeffs[3]);
    assert!(lead != 0, "leading coefficient vanishes mod {p}");
    let li = inv_mod_prime(lead, p);
    // monic f = x³ + m2 x² + m1 x + m0
    let m = [
        mul_mod(red(coeffs[0]), li, p),
        mul_mod(red(coeffs[1]), li, p),
        mul_mod(red(coeffs[2]), li, p),
    ];
    let mulmod_f = |u: [u64; 3], v: [u64; 3]| -> [u64; 3] {
        let mut prod = [0u64; 5];
        for i in 0..3 {
            for j in 0..3 {
                prod[i + j] = (prod[i + j] + mul_mod(u[i], v[j], p)) % p;
            }
        }
        for deg in (3..5).rev() {
            let c = prod[deg];
            if c != 0 {
                prod[deg] = 0;
                for k in 0..3 {
                    let sub = mul_mod(c, m[k], p);
                    prod[deg - 3 + k] = (prod[deg - 3 + k] + p - sub) % p;
                }
            }
        }
        [prod[0], prod[1], prod[2]]
    };
    let mut acc = [1u64, 0, 0];
    let mut base = [0u64, 1, 0];
    let mut e = p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_f(acc, base);
        }
        base = mulmod_f(base, base);
        e >>= 1;
    }
    // h = x^p − x mod f
    acc[1] = (acc[1] + p - 1) % p;
    let f = vec![m[0], m[1], m[2], 1];
    let h: Vec<u64> = acc.to_vec();
    poly_gcd_degree(f, h, p)
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> u32 {
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        // a ← a mod b
        let lb_inv = inv_mod_prime(*b.last().unwrap(), p);
        while a.len() >= b.len() {
            let shift = a.len() - b.len();
            let c = mul_mod(*a.last().unwrap(), lb_inv, p);
            for (i, &bi) in b.iter().enumerate() {
                let sub = mul_mod(c, bi, p);
                a[shift + i] = (a[shift + i] + p - sub) % p;
            }
            trim(&mut a);
            if a.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    (a.len() as u32).saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn legendre_by_counting(d: i64, p: u64) -> i8 {
        let r = d.rem_euclid(p as i64) as u64;
        let sols = (0..p).filter(|x| x * x % p == r).count();
        sols as i8 - 1
    }

    fn trial_is_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn kronecker_matches_counting_table() {
        // fundamental discriminants with |d| ≤ 50; the character value at an
        // odd prime is the number of square roots of d mod p minus one, at 2
        // it is decided by d mod 8, and it is extended multiplicatively.
        let discs: Vec<i64> = (-50..=50)
            .filter(|&d: &i64| d != 0 && d != 1)
            .filter(|&d| {
                let m4 = d.rem_euclid(4);
                if m4 == 1 {
                    prime_factors(d.unsigned_abs()).iter().all(|&p| d % (p * p) as i64 != 0)
                } else if m4 == 0 {
                    let q = d / 4;
                    matches!(q.rem_euclid(4), 2 | 3)
                        && prime_factors(q.unsigned_abs()).iter().all(|&p| q % (p * p) as i64 != 0)
                } else {
                    false
                }
            })
            .collect();
        assert!(discs.contains(&-3) && discs.contains(&-4) && discs.contains(&-8) && discs.contains(&5));
        for &d in &discs {
            for m in 1..400u64 {
                let mut expect = 1i8;
                let mut rest = m;
                for p in prime_factors(m) {
                    while rest % p == 0 {
                        rest /= p;
                        let chi = if p == 2 {
                            match d.rem_euclid(8) {
                                1 | 7 => 1,
                                3 | 5 => -1,
                                _ => 0,
                            }
                        } else {
                            legendre_by_counting(d, p)
                        };
                        expect *= chi;
                    }
                }
                assert_eq!(kronecker(d, m), expect, "({d}/{m})");
            }
        }
    }

    #[test]
    fn discriminant_convention() {
        assert_eq!(fundamental_discriminant(3), -3);
        assert_eq!(fundamental_discriminant(1), -4);
        assert_eq!(fundamental_discriminant(5), -20);
        assert_eq!(fundamental_discriminant(47), -47);
        assert_eq!(fundamental_discriminant(8090677), -4 * 8090677);
    }

    #[test]
    fn cubic_roots_match_brute_force() {
        let cubics: [[i64; 4]; 4] = [
            [-79, -40, -4, 4], // 2-division cubic of y² + y = x³ − x² − 10x − 20
            [-23, 8, 1, 4],
            [-55, -6, -3, 4],
            [20, 8, 4, 4],
        ];
        for f in cubics {
            for p in (3..1500u64).filter(|&p| trial_is_prime(p)) {
                let disc_zero = {
                    // skip primes where the reduction has a repeated root
                    let roots: Vec<u64> = (0..p)
                        .filter(|&x| {
                            let v = f[3] as i128 * (x * x * x) as i128
                                + f[2] as i128 * (x * x) as i128
                                + f[1] as i128 * x as i128
                                + f[0] as i128;
                            v.rem_euclid(p as i128) == 0
                        })
                        .collect();
                    let deriv_zero = roots.iter().any(|&x| {
                        let v = 3 * f[3] as i128 * (x * x) as i128 + 2 * f[2] as i128 * x as i128 + f[1] as i128;
                        v.rem_euclid(p as i128) == 0
                    });
                    (deriv_zero, roots.len() as u32)
                };
                if f[3].rem_euclid(p as i64) == 0 || disc_zero.0 {
                    continue;
                }
                assert_eq!(cubic_root_count(f, p), disc_zero.1, "f={f:?} p={p}");
            }
        }
    }

    #[test]
    fn primality_agrees_with_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial_is_prime(n), "{n}");
        }
        assert!(is_prime(8090677) == trial_is_prime(8090677));
    }

    proptest! {
        #[test]
        fn isqrt_is_floor(n in any::<u64>()) {
            let r = isqrt(n) as u128;
            prop_assert!(r * r <= n as u128 && (r + 1) * (r + 1) > n as u128);
        }

        #[test]
        fn kronecker_is_multiplicative_in_m(d in -500i64..500, a in 1u64..300, b in 1u64..300) {
            prop_assume!(d % 4 == 0 || d.rem_euclid(4) == 1);
            prop_assert_eq!(kronecker(d, a * b), kronecker(d, a) * kronecker(d, b));
        }

        #[test]
        fn jacobi_reciprocity(m in 1u64..2000, n in 1u64..2000) {
            let (m, n) = (2 * m + 1, 2 * n + 1);
            prop_assume!(gcd(m, n) == 1);
            let sign = if m % 4 == 3 && n % 4 == 3 { -1 } else { 1 };
            prop_assert_eq!(jacobi(m as i64, n) * jacobi(n as i64, m), sign);
        }
    }
}
