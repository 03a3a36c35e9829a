//! Frobenius traces a_p = p + 1 − #E(𝔽_p).

use crate::arith::{is_prime, isqrt, jacobi, mul_mod, pow_mod};
use crate::catalog::CurveSpec;

/// Below this bound traces are counted point by point.
pub const NAIVE_LIMIT: u64 = 1000;

/// Counts projective points on the (possibly singular) reduction of the
/// catalogued minimal model, so bad primes give +1 (split), −1 (non-split)
/// or 0 (additive) automatically.
pub fn count_ap_naive(spec: &CurveSpec, p: u64) -> i64 {
    let [a1, a2, a3, a4, a6] = spec.weierstrass.map(|a| a.rem_euclid(p as i64) as u64);
    let affine: u64 = if p == 2 {
        let mut n = 0;
        for x in 0..2u64 {
            for y in 0..2u64 {
                let lhs = (y * y + a1 * x * y + a3 * y) % 2;
                let rhs = (x * x * x + a2 * x * x + a4 * x + a6) % 2;
                n += u64::from(lhs == rhs);
            }
        }
        n
    } else {
        // (2y + a1 x + a3)² = 4x³ + b2 x² + 2 b4 x + b6 is a bijective change of y
        let (b2, b4, b6) = spec.b_invariants();
        let r = |v: i64| v.rem_euclid(p as i64) as u64;
        let (b2, b4, b6) = (r(b2), r(2 * b4), r(b6));
        (0..p)
            .map(|x| {
                let f = (mul_mod(mul_mod(4, x, p), mul_mod(x, x, p), p) + mul_mod(b2, mul_mod(x, x, p), p) + mul_mod(b4, x, p) + b6) % p;
                (1 + jacobi(f as i64, p) as i64) as u64
            })
            .sum()
    };
    p as i64 + 1 - (affine as i64 + 1)
}

/// Trace of Frobenius at any prime, switching to baby-step giant-step
/// order finding above [`NAIVE_LIMIT`].
pub fn count_ap(spec: &CurveSpec, p: u64) -> i64 {
    debug_assert!(is_prime(p));
    if p < NAIVE_LIMIT || spec.conductor % p == 0 {
        return count_ap_naive(spec, p);
    }
    let (c4, c6) = spec.c_invariants();
    ShortCurve::from_c_invariants(c4, c6, p).trace()
}

/// y² = x³ + A x + B over 𝔽_p, p ≥ 5.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ShortCurve {
    a: u64,
    b: u64,
    p: u64,
}

type Pt = Option<(u64, u64)>;

impl ShortCurve {
    /// Short model y² = x³ − 27 c4 x − 54 c6, isomorphic to E over 𝔽_p.
    pub(crate) fn from_c_invariants(c4: i64, c6: i64, p: u64) -> Self {
        let r = |v: i128| v.rem_euclid(p as i128) as u64;
        Self {
            a: r(-27 * c4 as i128),
            b: r(-54 * c6 as i128),
            p,
        }
    }

    fn rhs(&self, x: u64) -> u64 {
        let p = self.p;
        (mul_mod(mul_mod(x, x, p), x, p) + mul_mod(self.a, x, p) + self.b) % p
    }

    fn inv(&self, v: u64) -> u64 {
        pow_mod(v, self.p - 2, self.p)
    }

    fn add(&self, u: Pt, v: Pt) -> Pt {
        let p = self.p;
        let (Some((x1, y1)), Some((x2, y2))) = (u, v) else {
            return u.or(v);
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % p == 0 {
                return None;
            }
            let num = (3 * mul_mod(x1, x1, p) + self.a) % p;
            mul_mod(num, self.inv(2 * y1 % p), p)
        } else {
            mul_mod((y2 + p - y1) % p, self.inv((x2 + p - x1) % p), p)
        };
        let x3 = (mul_mod(lambda, lambda, p) + 2 * p - x1 - x2) % p;
        let y3 = (mul_mod(lambda, (x1 + p - x3) % p, p) + p - y1) % p;
        Some((x3, y3))
    }

    fn neg(&self, u: Pt) -> Pt {
        u.map(|(x, y)| (x, (self.p - y) % self.p))
    }

    fn mul(&self, mut k: u64, u: Pt) -> Pt {
        let mut acc = None;
        let mut base = u;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    fn twist_by(&self, g: u64) -> Self {
        let p = self.p;
        let g2 = mul_mod(g, g, p);
        Self {
            a: mul_mod(self.a, g2, p),
            b: mul_mod(self.b, mul_mod(g2, g, p), p),
            p,
        }
    }

    /// Deterministic sequence of points: x = 1, 2, 3, … with f(x) a nonzero square.
    fn points(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        (1..self.p).filter_map(move |x| {
            let f = self.rhs(x);
            if f != 0 && jacobi(f as i64, self.p) == 1 {
                Some((x, sqrt_mod(f, self.p)))
            } else {
                None
            }
        })
    }

    /// All N in [lo, hi] with N·P = O.
    fn annihilators(&self, pt: Pt, lo: u64, hi: u64) -> Vec<u64> {
        let width = hi - lo;
        let s = isqrt(width) + 1;
        let mut baby: Vec<(Pt, u64)> = Vec::with_capacity(s as usize);
        let mut cur = None;
        for j in 0..s {
            baby.push((cur, j));
            cur = self.add(cur, pt);
        }
        baby.sort_unstable();
        let step = self.mul(s, pt);
        let mut r = self.mul(lo, pt);
        let mut out = Vec::new();
        let mut base = lo;
        while base <= hi {
            // base·P + j·P = O  ⇔  j·P = −(base·P)
            let target = self.neg(r);
            let start = baby.partition_point(|(q, _)| *q < target);
            for &(q, j) in &baby[start..] {
                if q != target {
                    break;
                }
                if base + j <= hi {
                    out.push(base + j);
                }
            }
            r = self.add(r, step);
            base += s;
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub(crate) fn trace(&self) -> i64 {
        let p = self.p;
        let w = 2 * isqrt(p) + 2;
        let (lo, hi) = (p + 1 - w.min(p + 1), p + 1 + w);
        let mut cands: Vec<u64> = Vec::new();
        for (i, pt) in self.points().take(24).enumerate() {
            if i == 0 {
                cands = self.annihilators(Some(pt), lo, hi);
            } else {
                cands.retain(|&n| self.mul(n, Some(pt)).is_none());
            }
            if cands.len() == 1 {
                return p as i64 + 1 - cands[0] as i64;
            }
        }
        // the quadratic twist has 2p + 2 − #E points
        let g = (2..p).find(|&g| jacobi(g as i64, p) == -1).expect("a non-residue exists");
        let tw = self.twist_by(g);
        for pt in tw.points().take(24) {
            cands.retain(|&n| n <= 2 * p + 2 && tw.mul(2 * p + 2 - n, Some(pt)).is_none());
            if cands.len() == 1 {
                return p as i64 + 1 - cands[0] as i64;
            }
        }
        panic!("order finding did not isolate #E(F_{p}) (candidates {cands:?})");
    }
}

/// Square root modulo an odd prime (Tonelli–Shanks); `a` must be a residue.
pub(crate) fn sqrt_mod(a: u64, p: u64) -> u64 {
    if a == 0 {
        return 0;
    }
    if p % 4 == 3 {
        return pow_mod(a, (p + 1) / 4, p);
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| jacobi(z as i64, p) == -1).unwrap();
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{all_curves, curve};

    /// Brute-force count over every (x, y) of the long model.
    fn brute_points(spec: &CurveSpec, p: u64) -> i64 {
        let [a1, a2, a3, a4, a6] = spec.weierstrass.map(|a| a.rem_euclid(p as i64) as u64);
        let mut n = 1;
        for x in 0..p {
            for y in 0..p {
                let lhs = (y * y + a1 * x * y + a3 * y) % p;
                let rhs = (x * x % p * x + a2 * x % p * x + a4 * x + a6) % p;
                n += i64::from(lhs == rhs);
            }
        }
        n
    }

    #[test]
    fn eleven_a1_small_primes() {
        let c = curve("11a1").unwrap();
        assert_eq!(count_ap(&c, 2), -2);
        assert_eq!(count_ap(&c, 3), -1);
        assert_eq!(count_ap(&c, 11), 1);
        assert_eq!(count_ap(&c, 13), 4);
    }

    #[test]
    fn naive_matches_brute_force() {
        for c in all_curves() {
            for p in (2..200).filter(|&p| is_prime(p)) {
                assert_eq!(count_ap_naive(&c, p), p as i64 + 1 - brute_points(&c, p), "{} p={p}", c.label);
            }
        }
    }

    #[test]
    fn order_finding_matches_counting() {
        for c in all_curves() {
            let (c4, c6) = c.c_invariants();
            for p in (50..6000).filter(|&p| is_prime(p) && c.conductor % p != 0) {
                let fast = ShortCurve::from_c_invariants(c4, c6, p).trace();
                assert_eq!(fast, count_ap_naive(&c, p), "{} p={p}", c.label);
            }
        }
    }

    #[test]
    fn hasse_bound_up_to_1e5() {
        for c in all_curves() {
            for p in (2..100_000u64).filter(|&p| is_prime(p)) {
                let ap = count_ap(&c, p);
                if c.conductor % p != 0 {
                    assert!((ap * ap) as u64 <= 4 * p, "{} p={p} a_p={ap}", c.label);
                } else {
                    assert!(ap.abs() <= 1);
                }
            }
        }
    }

    #[test]
    fn tonelli_shanks() {
        for p in [5u64, 13, 17, 41, 97, 257, 65537, 1_000_033] {
            for a in 1..200 {
                if jacobi(a as i64, p) == 1 {
                    let r = sqrt_mod(a % p, p);
                    assert_eq!(mul_mod(r, r, p), a % p);
                }
            }
        }
    }
}
