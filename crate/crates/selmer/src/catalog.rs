//! The five curves, their weight-3/2 recipes, the retained congruence classes
//! and the per-class baseline constants.
//!
//! Baseline constants (first class member with a_n ≠ 0, its Selmer order,
//! L-value, Néron period and the Tamagawa data at 2 and the conductor primes)
//! were derived once with an external computer algebra system and are frozen
//! here; [`crate::bsd_oracle`] recomputes all of them from first principles
//! and the test suite asserts agreement.

use serde::Serialize;

use crate::arith::{cubic_root_count, gcd, prime_factors};
use crate::error::{Error, Result};
use crate::qseries::{BinaryQuadraticForm, ThetaRecipe};

pub const LABELS: [&str; 5] = ["11a1", "14a1", "17a1", "20a1", "34a1"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassBaseline {
    /// Table representative.
    pub n0: u64,
    /// Least squarefree class member with a_n ≠ 0.
    pub n0_effective: u64,
    pub a_n0: i64,
    /// #S(E_{−n0_effective}).
    pub selmer_n0: u64,
    /// L(E_{−n0_effective}, 1).
    pub l_n0: f64,
    /// Real period ∫_{E(ℝ)} |ω| of a minimal model of E_{−n0_effective}.
    pub period: f64,
    /// Exponent of 2 in the conductor of every twist in the class.
    pub conductor_2_exponent: u32,
    /// Product of Tamagawa numbers at the primes of N′ (2 and the conductor
    /// primes), shared by every twist in the class.
    pub tamagawa_bad: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSpec {
    pub label: &'static str,
    pub conductor: u64,
    /// [a1, a2, a3, a4, a6] of the minimal model.
    pub weierstrass: [i64; 5],
    pub table_modulus: u64,
    pub recipe: ThetaRecipe,
    /// Rational torsion order shared by every twist in the family.
    pub family_torsion: u64,
    pub classes: Vec<ClassBaseline>,
}

/// Tamagawa numbers at odd primes p | n of E_{−n} (type I0*).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
pub enum TamagawaRule {
    /// c_p = 1 + #{roots of the 2-division cubic in 𝔽_p}, the value given by
    /// Tate's algorithm for I0*.
    #[default]
    TwoDivision,
    /// c_p = 4 at every such prime.
    Uniform,
}

fn bqf(a: i64, b: i64, c: i64) -> BinaryQuadraticForm {
    BinaryQuadraticForm::new(a, b, c).expect("catalogued forms are positive definite")
}

fn recipe(q1: (i64, i64, i64), q2: (i64, i64, i64), t: u64) -> ThetaRecipe {
    ThetaRecipe::new(vec![(1, bqf(q1.0, q1.1, q1.2)), (-1, bqf(q2.0, q2.1, q2.2))], t)
        .expect("catalogued recipes are well formed")
}

#[allow(clippy::too_many_arguments)]
const fn cb(
    n0: u64,
    n0_effective: u64,
    a_n0: i64,
    selmer_n0: u64,
    l_n0: f64,
    period: f64,
    conductor_2_exponent: u32,
    tamagawa_bad: u64,
) -> ClassBaseline {
    ClassBaseline {
        n0,
        n0_effective,
        a_n0,
        selmer_n0,
        l_n0,
        period,
        conductor_2_exponent,
        tamagawa_bad,
    }
}

pub fn curve(label: &str) -> Result<CurveSpec> {
    let spec = match label {
        "11a1" => CurveSpec {
            label: "11a1",
            conductor: 11,
            weierstrass: [0, -1, 1, -10, -20],
            table_modulus: 44,
            recipe: recipe((1, 0, 11), (3, 2, 4), 11),
            family_torsion: 1,
            classes: vec![
                cb(1, 1, 2, 1, 1.45881661693850, 1.45881661693850, 4, 1),
                cb(3, 3, -2, 1, 1.68449633297548, 1.68449633297548, 0, 1),
                cb(5, 5, -2, 1, 0.652402624436149, 0.652402624436149, 4, 1),
                cb(15, 15, 2, 1, 0.753329661676458, 0.753329661676458, 0, 1),
                cb(23, 23, -2, 1, 0.608368584195309, 0.608368584195309, 0, 1),
                cb(31, 31, -2, 1, 0.524022398173833, 0.524022398173833, 0, 1),
                cb(37, 37, -2, 1, 0.239827974488916, 0.239827974488916, 4, 1),
            ],
        },
        "14a1" => CurveSpec {
            label: "14a1",
            conductor: 14,
            weierstrass: [1, 0, 1, 4, -6],
            table_modulus: 56,
            recipe: recipe((1, 0, 14), (2, 0, 7), 14),
            family_torsion: 2,
            classes: vec![
                cb(1, 1, 2, 2, 1.32549123968249, 1.32549123968249, 4, 4),
                cb(15, 15, 4, 2, 1.36896146582243, 0.684480732911213, 1, 2),
                cb(23, 79, 4, 2, 0.596517662620081, 0.298258831310040, 1, 2),
                cb(29, 85, -8, 8, 2.30031537167152, 0.143769710729470, 4, 4),
                cb(37, 37, 8, 8, 3.48655067977477, 0.217909417485923, 4, 4),
                cb(39, 39, -4, 2, 0.848993860380691, 0.424496930190346, 1, 2),
                cb(53, 165, 8, 2, 1.65102964894106, 0.103189353058816, 4, 4),
            ],
        },
        "17a1" => CurveSpec {
            label: "17a1",
            conductor: 17,
            weierstrass: [1, -1, 1, -1, -14],
            table_modulus: 68,
            recipe: recipe((3, -2, 23), (7, 6, 11), 17),
            family_torsion: 2,
            classes: vec![
                cb(3, 3, 2, 2, 1.58525321895360, 1.58525321895360, 0, 2),
                cb(7, 7, -2, 2, 1.03779183878961, 1.03779183878961, 0, 2),
                cb(11, 11, -2, 2, 0.827871493355005, 0.827871493355005, 0, 2),
                cb(23, 23, 2, 2, 0.572526183362074, 0.572526183362074, 0, 2),
                cb(31, 31, 2, 2, 0.493149303591241, 0.493149303591241, 0, 2),
                cb(39, 107, 2, 2, 0.265440619485743, 0.265440619485743, 0, 2),
            ],
        },
        "20a1" => CurveSpec {
            label: "20a1",
            conductor: 20,
            weierstrass: [0, 1, 0, 4, 4],
            table_modulus: 40,
            recipe: recipe((1, 0, 20), (4, 0, 5), 20),
            family_torsion: 2,
            classes: vec![
                cb(1, 1, 2, 2, 1.13708259952054, 2.27416519904108, 4, 2),
                cb(21, 21, 4, 2, 0.992527063565721, 0.496263531782860, 4, 2),
                cb(29, 69, -4, 2, 0.547554635089057, 0.273777317544529, 4, 2),
            ],
        },
        "34a1" => CurveSpec {
            label: "34a1",
            conductor: 34,
            weierstrass: [1, 0, 0, -3, 1],
            table_modulus: 136,
            recipe: recipe((1, 0, 17), (2, 2, 9), 17),
            family_torsion: 2,
            classes: vec![
                cb(1, 1, 2, 2, 1.86417505747244, 1.86417505747244, 4, 4),
                cb(13, 13, -4, 2, 2.06811654035628, 0.517029135089069, 4, 4),
                cb(19, 19, -4, 2, 1.71068435549294, 0.855342177746471, 1, 2),
                cb(21, 21, 4, 2, 1.62718539228878, 0.406796348072195, 4, 4),
                cb(33, 33, 4, 2, 1.29804489718352, 0.324511224295880, 4, 4),
                cb(35, 35, 4, 2, 1.26041238510529, 0.630206192552643, 1, 2),
                cb(43, 43, 8, 8, 4.54854449782796, 0.568568062228495, 1, 2),
                cb(53, 597, -12, 18, 2.74664181854606, 0.0762956060707240, 4, 4),
                cb(59, 195, 8, 2, 2.13594157835092, 0.266992697293865, 1, 2),
                cb(67, 67, -4, 2, 0.910980923817163, 0.455490461908582, 1, 2),
                cb(69, 69, -4, 2, 0.897681218380128, 0.224420304595032, 4, 4),
                cb(77, 77, -4, 2, 0.849769856684950, 0.212442464171238, 4, 4),
                cb(83, 219, 8, 8, 2.01550842594262, 0.251938553242827, 1, 2),
                cb(89, 633, -4, 2, 0.296377226214669, 0.0740943065536672, 4, 4),
                cb(93, 93, 4, 2, 0.773223794048092, 0.193305948512023, 4, 4),
                cb(101, 101, -4, 2, 0.741969404498767, 0.185492351124692, 4, 4),
                cb(115, 115, 4, 2, 0.695340881797884, 0.347670440898942, 1, 2),
                cb(117, 253, 4, 2, 0.468798726873203, 0.117199681718301, 4, 4),
                cb(123, 123, -8, 8, 2.68939206884370, 0.336174008605462, 1, 2),
            ],
        },
        other => return Err(Error::NotInCatalog(other.to_string())),
    };
    Ok(spec)
}

pub fn all_curves() -> Vec<CurveSpec> {
    LABELS.iter().map(|l| curve(l).expect("catalog labels resolve")).collect()
}

impl CurveSpec {
    pub fn class_reps(&self) -> Vec<u64> {
        self.classes.iter().map(|c| c.n0).collect()
    }

    pub fn baseline(&self, n0: u64) -> Result<&ClassBaseline> {
        self.classes.iter().find(|c| c.n0 == n0).ok_or_else(|| Error::UnknownClass {
            curve: self.label.to_string(),
            n0,
        })
    }

    pub fn baseline_mut(&mut self, n0: u64) -> Result<&mut ClassBaseline> {
        let label = self.label;
        self.classes
            .iter_mut()
            .find(|c| c.n0 == n0)
            .ok_or_else(|| Error::UnknownClass { curve: label.to_string(), n0 })
    }

    /// Class representative for n, if n lies in a retained class.
    pub fn class_of(&self, n: u64) -> Option<u64> {
        let r = n % self.table_modulus;
        self.classes.iter().find(|c| c.n0 % self.table_modulus == r).map(|c| c.n0)
    }

    /// (b2, b4, b6).
    pub fn b_invariants(&self) -> (i64, i64, i64) {
        let [a1, a2, a3, a4, a6] = self.weierstrass;
        (a1 * a1 + 4 * a2, 2 * a4 + a1 * a3, a3 * a3 + 4 * a6)
    }

    /// (c4, c6).
    pub fn c_invariants(&self) -> (i64, i64) {
        let (b2, b4, b6) = self.b_invariants();
        (b2 * b2 - 24 * b4, -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6)
    }

    pub fn discriminant(&self) -> i64 {
        let (c4, c6) = self.c_invariants();
        (c4 * c4 * c4 - c6 * c6) / 1728
    }

    /// Coefficients [c0, c1, c2, c3] of 4x³ + b2 x² + 2 b4 x + b6, whose roots
    /// are the x-coordinates of the nontrivial 2-torsion points.
    pub fn two_division_cubic(&self) -> [i64; 4] {
        let (b2, b4, b6) = self.b_invariants();
        [b6, 2 * b4, b2, 4]
    }

    /// log₂ c_p for E_{−n} at an odd prime p | n with p ∤ N_E.
    pub fn tamagawa_log2(&self, p: u64, rule: TamagawaRule) -> u8 {
        match rule {
            TamagawaRule::Uniform => 2,
            TamagawaRule::TwoDivision => match cubic_root_count(self.two_division_cubic(), p) {
                0 => 0,
                1 => 1,
                _ => 2,
            },
        }
    }

    /// Number of rational roots of the 2-division cubic, by the rational
    /// root theorem (candidates ±d/e with d | b6 and e | 4).
    pub fn rational_two_torsion_roots(&self) -> usize {
        let f = self.two_division_cubic();
        let b6 = f[0].unsigned_abs();
        if b6 == 0 {
            return 1 + {
                // x = 0 is a root; count roots of the remaining quadratic
                let (a, b, c) = (f[3], f[2], f[1]);
                let disc = b * b - 4 * a * c;
                if disc < 0 {
                    0
                } else {
                    let s = crate::arith::isqrt(disc as u64) as i64;
                    if s * s != disc {
                        0
                    } else if disc == 0 {
                        1
                    } else {
                        2
                    }
                }
            };
        }
        let mut divisors = vec![1u64];
        let mut rest = b6;
        for p in prime_factors(b6) {
            let mut pk = 1;
            let base = divisors.clone();
            while rest % p == 0 {
                rest /= p;
                pk *= p;
                divisors.extend(base.iter().map(|d| d * pk));
            }
        }
        let mut roots: Vec<(i64, i64)> = Vec::new();
        for &d in &divisors {
            for e in [1i64, 2, 4] {
                for sign in [1i64, -1] {
                    let num = sign * d as i64;
                    // 4 (n/e)³ + b2 (n/e)² + 2b4 (n/e) + b6 = 0, scaled by e³
                    let v = f[3] as i128 * (num as i128).pow(3)
                        + f[2] as i128 * (num as i128).pow(2) * e as i128
                        + f[1] as i128 * num as i128 * (e as i128).pow(2)
                        + f[0] as i128 * (e as i128).pow(3);
                    if v == 0 {
                        let g = gcd(num.unsigned_abs(), e as u64) as i64;
                        let r = (num / g, e / g);
                        if !roots.contains(&r) {
                            roots.push(r);
                        }
                    }
                }
            }
        }
        roots.len()
    }

    /// Startup consistency checks on the catalogued data.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Normalization(format!("{}: {msg}", self.label)));
        let mut disc_primes = prime_factors(self.discriminant().unsigned_abs());
        disc_primes.sort_unstable();
        if disc_primes != prime_factors(self.conductor) {
            return bad("discriminant and conductor have different prime support".into());
        }
        if self.table_modulus % 4 != 0 {
            return bad("table modulus is not divisible by 4".into());
        }
        for p in prime_factors(self.conductor) {
            if p != 2 && self.table_modulus % p != 0 {
                return bad(format!("table modulus misses conductor prime {p}"));
            }
        }
        for c in &self.classes {
            if gcd(c.n0, self.table_modulus) != 1 {
                return Err(Error::InvalidClass {
                    n0: c.n0,
                    modulus: self.table_modulus,
                });
            }
            if c.n0_effective % self.table_modulus != c.n0 % self.table_modulus {
                return bad(format!("n0_effective {} left class {}", c.n0_effective, c.n0));
            }
            if c.a_n0 == 0 || c.l_n0 <= 0.0 || c.period <= 0.0 {
                return bad(format!("degenerate baseline for class {}", c.n0));
            }
            if c.selmer_n0 % self.family_torsion != 0
                || !crate::arith::is_square((c.selmer_n0 / self.family_torsion) as u128)
            {
                return Err(Error::Cassels(format!(
                    "{} class {}: baseline Selmer order {} over torsion {} is not a square",
                    self.label, c.n0, c.selmer_n0, self.family_torsion
                )));
            }
        }
        let expected_t = 1 + self.rational_two_torsion_roots() as u64;
        if !matches!(self.family_torsion, 1 | 2 | 4) || self.family_torsion != expected_t {
            return bad(format!(
                "family torsion {} disagrees with the 2-division polynomial ({expected_t})",
                self.family_torsion
            ));
        }
        Ok(())
    }
}

/// Applies `curve.class.field = value` lines to the catalog. Fields:
/// `selmer`, `l`, `a`, `n0_effective`, `period`, `tamagawa_bad`.
pub fn apply_overrides(curves: &mut [CurveSpec], text: &str) -> Result<usize> {
    let mut applied = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = || Error::Domain(format!("override line {}: '{raw}'", lineno + 1));
        let (key, value) = line.split_once('=').ok_or_else(err)?;
        let parts: Vec<&str> = key.trim().split('.').collect();
        let [label, class, field] = parts[..] else {
            return Err(err());
        };
        let value = value.trim();
        let spec = curves
            .iter_mut()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::NotInCatalog(label.to_string()))?;
        let n0: u64 = class.parse().map_err(|_| err())?;
        let base = spec.baseline_mut(n0)?;
        match field {
            "selmer" => base.selmer_n0 = value.parse().map_err(|_| err())?,
            "l" => base.l_n0 = value.parse().map_err(|_| err())?,
            "a" => base.a_n0 = value.parse().map_err(|_| err())?,
            "n0_effective" => base.n0_effective = value.parse().map_err(|_| err())?,
            "period" => base.period = value.parse().map_err(|_| err())?,
            "tamagawa_bad" => base.tamagawa_bad = value.parse().map_err(|_| err())?,
            _ => return Err(err()),
        }
        applied += 1;
    }
    Ok(applied)
}
