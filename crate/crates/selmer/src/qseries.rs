//! Truncated integer q-expansions: theta series of positive definite binary
//! forms, unary theta series, and the products that give the weight-3/2
//! coefficients a_n.
//!
//! Only two shapes of product ever occur, dense × sparse (a binary theta
//! difference times a unary theta), so multiplication iterates the sparse
//! factor's support against contiguous runs of the dense one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::isqrt;
use crate::error::{Error, Result};

/// Output block length for the parallel kernels. Blocks own disjoint slices
/// of the result, so the output never depends on how they are scheduled.
const BLOCK: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryQuadraticForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl BinaryQuadraticForm {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        let f = Self { a, b, c };
        if a <= 0 || f.discriminant() >= 0 {
            return Err(Error::InvalidForm { a, b, c });
        }
        Ok(f)
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    #[inline]
    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    /// Inclusive range of integers x with Q(x, y) < limit, if any.
    fn x_range_below(&self, y: i64, limit: i64) -> Option<(i64, i64)> {
        // a x² + b y x + c y² − limit < 0 between the roots
        // (−b y ± √(4 a limit − |D| y²)) / 2a.
        let rad = 4 * self.a as i128 * limit as i128 + self.discriminant() as i128 * (y as i128 * y as i128);
        if rad <= 0 {
            return None;
        }
        let s = (rad as f64).sqrt();
        let centre = -(self.b * y) as f64;
        let two_a = 2.0 * self.a as f64;
        let mut lo = ((centre - s) / two_a).floor() as i64;
        let mut hi = ((centre + s) / two_a).ceil() as i64;
        // tighten against the exact predicate; float error is at most a unit
        while self.eval(lo, y) >= limit && lo <= hi {
            lo += 1;
        }
        while lo > i64::MIN && self.eval(lo - 1, y) < limit {
            lo -= 1;
        }
        while self.eval(hi, y) >= limit && hi >= lo {
            hi -= 1;
        }
        while self.eval(hi + 1, y) < limit {
            hi += 1;
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Largest |y| for which some x gives Q(x, y) < limit.
    fn y_extent(&self, limit: i64) -> i64 {
        // Q(x, y) ≥ |D| y² / 4a
        isqrt((4 * self.a as u64 * limit as u64) / self.discriminant().unsigned_abs()) as i64 + 1
    }

    /// Number of representations of m, by solving for x row by row.
    pub fn representations(&self, m: u64) -> u64 {
        let m = m as i64;
        if m == 0 {
            return 1;
        }
        let d = self.discriminant().unsigned_abs() as i128;
        let ymax = self.y_extent(m + 1);
        let mut count = 0;
        for y in -ymax..=ymax {
            let rad = 4 * self.a as i128 * m as i128 - d * (y as i128 * y as i128);
            if rad < 0 {
                continue;
            }
            let s = crate::arith::isqrt_u128(rad as u128) as i128;
            if s * s != rad {
                continue;
            }
            let two_a = 2 * self.a as i128;
            for num in [-(self.b as i128) * y as i128 + s, -(self.b as i128) * y as i128 - s] {
                if num.rem_euclid(two_a) == 0 {
                    count += 1;
                }
                if s == 0 {
                    break;
                }
            }
        }
        count
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSeries {
    coeffs: Vec<i64>,
}

impl PowerSeries {
    pub fn zero(bound: usize) -> Self {
        Self {
            coeffs: vec![0; bound + 1],
        }
    }

    pub fn from_coeffs(coeffs: Vec<i64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        Self { coeffs }
    }

    pub fn bound(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<i64> {
        self.coeffs
    }

    pub fn coeff(&self, m: usize) -> i64 {
        self.coeffs[m]
    }

    pub fn scale(&self, c: i64) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|&v| v.checked_mul(c).ok_or(Error::Overflow("series scaling")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coeffs })
    }

    fn nonzero_terms(&self) -> Vec<(usize, i64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i, v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaRecipe {
    pub terms: Vec<(i8, BinaryQuadraticForm)>,
    pub unary_t: u64,
}

impl ThetaRecipe {
    pub fn new(terms: Vec<(i8, BinaryQuadraticForm)>, unary_t: u64) -> Result<Self> {
        if terms.is_empty() || unary_t == 0 || terms.iter().any(|(s, _)| s.abs() != 1) {
            return Err(Error::Domain("recipe needs ±1 terms and t ≥ 1".into()));
        }
        Ok(Self { terms, unary_t })
    }
}

/// Adds `sign` · #{(x, y) : Q(x, y) = m} to `out[m]` for every m ≤ out.len() − 1.
fn accumulate_theta(form: &BinaryQuadraticForm, sign: i64, out: &mut [i64]) {
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(blk, chunk)| {
        let lo = (blk * BLOCK) as i64;
        let hi = lo + chunk.len() as i64;
        let ymax = form.y_extent(hi);
        for y in -ymax..=ymax {
            let Some((x1, x2)) = form.x_range_below(y, hi) else {
                continue;
            };
            // skip the inner run of x with Q < lo, which belongs to earlier blocks
            let (i1, i2) = form.x_range_below(y, lo).unwrap_or((x2 + 1, x2));
            for x in (x1..i1.min(x2 + 1)).chain((i2 + 1).max(x1)..=x2) {
                chunk[(form.eval(x, y) - lo) as usize] += sign;
            }
        }
    });
}

/// Representation-count series of a positive definite binary form.
pub fn theta_binary(form: &BinaryQuadraticForm, bound: usize) -> Result<PowerSeries> {
    let form = BinaryQuadraticForm::new(form.a, form.b, form.c)?;
    if bound < 1 {
        return Err(Error::Domain("series bound must be positive".into()));
    }
    if bound as u128 * 4 * form.a.max(form.c) as u128 > i64::MAX as u128 / 4 {
        return Err(Error::Overflow("theta_binary bound"));
    }
    let mut out = vec![0i64; bound + 1];
    accumulate_theta(&form, 1, &mut out);
    Ok(PowerSeries { coeffs: out })
}

/// Σ_{z ∈ ℤ} q^{t z²} with the trivial character.
pub fn theta_unary(t: u64, bound: usize) -> PowerSeries {
    assert!(t >= 1, "unary theta needs t ≥ 1");
    let mut coeffs = vec![0i64; bound + 1];
    coeffs[0] = 1;
    let mut z = 1u64;
    while let Some(e) = (t * z).checked_mul(z).filter(|&e| e <= bound as u64) {
        coeffs[e as usize] = 2;
        z += 1;
    }
    PowerSeries { coeffs }
}

fn same_bound(lhs: &PowerSeries, rhs: &PowerSeries) -> Result<()> {
    if lhs.bound() != rhs.bound() {
        return Err(Error::Dimension {
            lhs: lhs.bound(),
            rhs: rhs.bound(),
        });
    }
    Ok(())
}

pub fn series_add(lhs: &PowerSeries, rhs: &PowerSeries) -> Result<PowerSeries> {
    same_bound(lhs, rhs)?;
    let coeffs = lhs
        .coeffs
        .iter()
        .zip(&rhs.coeffs)
        .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("series_add")))
        .collect::<Result<_>>()?;
    Ok(PowerSeries { coeffs })
}

pub fn series_sub(lhs: &PowerSeries, rhs: &PowerSeries) -> Result<PowerSeries> {
    same_bound(lhs, rhs)?;
    let coeffs = lhs
        .coeffs
        .iter()
        .zip(&rhs.coeffs)
        .map(|(a, b)| a.checked_sub(*b).ok_or(Error::Overflow("series_sub")))
        .collect::<Result<_>>()?;
    Ok(PowerSeries { coeffs })
}

/// Truncated Cauchy product. The factor with fewer nonzero terms drives the
/// loop; when Σ|sparse| · max|dense| fits in an i64 no partial sum can
/// overflow and the inner loop runs unchecked.
pub fn series_mul(lhs: &PowerSeries, rhs: &PowerSeries) -> Result<PowerSeries> {
    same_bound(lhs, rhs)?;
    let (lt, rt) = (lhs.nonzero_terms(), rhs.nonzero_terms());
    let (sparse, dense) = if lt.len() <= rt.len() { (lt, &rhs.coeffs) } else { (rt, &lhs.coeffs) };
    let l1: u128 = sparse.iter().map(|&(_, v)| v.unsigned_abs() as u128).sum();
    let dmax = dense.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as u128;
    let safe = l1 * dmax <= i64::MAX as u128;
    let bound = lhs.bound();
    let mut out = vec![0i64; bound + 1];
    let overflow = std::sync::atomic::AtomicBool::new(false);
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(blk, chunk)| {
        let lo = blk * BLOCK;
        let hi = lo + chunk.len();
        for &(i, s) in &sparse {
            if i >= hi {
                break;
            }
            let start = lo.saturating_sub(i);
            let src = &dense[start..hi - i];
            let dst = &mut chunk[(i + start - lo)..];
            if safe {
                for (d, &v) in dst.iter_mut().zip(src) {
                    *d += s * v;
                }
            } else {
                for (d, &v) in dst.iter_mut().zip(src) {
                    match s.checked_mul(v).and_then(|p| d.checked_add(p)) {
                        Some(x) => *d = x,
                        None => overflow.store(true, std::sync::atomic::Ordering::Relaxed),
                    }
                }
            }
        }
    });
    if overflow.into_inner() {
        return Err(Error::Overflow("series_mul"));
    }
    Ok(PowerSeries { coeffs: out })
}

/// (Σ ± Θ(Q_i)) · Θ_t truncated at `bound`.
#[allow(non_snake_case)]
pub fn build_F(recipe: &ThetaRecipe, bound: usize) -> Result<PowerSeries> {
    let binary = binary_part(recipe, bound)?;
    series_mul(&binary, &theta_unary(recipe.unary_t, bound))
}

fn binary_part(recipe: &ThetaRecipe, bound: usize) -> Result<PowerSeries> {
    if bound < 1 {
        return Err(Error::Domain("series bound must be positive".into()));
    }
    let mut acc = vec![0i64; bound + 1];
    for (sign, form) in &recipe.terms {
        let form = BinaryQuadraticForm::new(form.a, form.b, form.c)?;
        accumulate_theta(&form, *sign as i64, &mut acc);
    }
    Ok(PowerSeries { coeffs: acc })
}

/// Coefficients of F along one arithmetic progression n = residue + modulus·j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueSeries {
    pub residue: u64,
    pub modulus: u64,
    pub values: Vec<i64>,
}

impl ResidueSeries {
    pub fn get(&self, n: u64) -> Option<i64> {
        if n % self.modulus != self.residue {
            return None;
        }
        self.values.get(((n - self.residue) / self.modulus) as usize).copied()
    }
}

/// Evaluates F only at n ≡ r (mod modulus) for the requested residues.
///
/// The binary part is split into its residue sub-sequences once; each unary
/// term q^{t z²} then shifts one sub-sequence onto the output as a contiguous
/// run, so the cost is (#residues / modulus) of the full product.
pub fn expand_residues(
    recipe: &ThetaRecipe,
    bound: usize,
    modulus: u64,
    residues: &[u64],
) -> Result<Vec<ResidueSeries>> {
    if modulus == 0 || residues.iter().any(|&r| r >= modulus) {
        return Err(Error::Domain("residues must lie in [0, modulus)".into()));
    }
    let binary = binary_part(recipe, bound)?.into_coeffs();
    let bmax = binary.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as u128;
    let t = recipe.unary_t;
    let zmax = isqrt(bound as u64 / t);
    if bmax * (2 * zmax as u128 + 1) > i64::MAX as u128 {
        return Err(Error::Overflow("expand_residues"));
    }
    let m = modulus as usize;
    let shifts: Vec<(u64, u64, i64)> = (0..=zmax)
        .map(|z| {
            let e = t * z * z;
            (e / modulus, e % modulus, if z == 0 { 1 } else { 2 })
        })
        .collect();
    let mut needed: Vec<usize> = residues
        .iter()
        .flat_map(|&r| shifts.iter().map(move |&(_, u, _)| ((r + modulus - u) % modulus) as usize))
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let mut split: Vec<Vec<i64>> = vec![Vec::new(); m];
    for &s in &needed {
        split[s] = binary.iter().skip(s).step_by(m).copied().collect();
    }
    drop(binary);
    Ok(residues
        .par_iter()
        .map(|&r| {
            let len = if r as usize > bound { 0 } else { (bound - r as usize) / m + 1 };
            let mut out = vec![0i64; len];
            for &(q, u, w) in &shifts {
                let s = ((r + modulus - u) % modulus) as usize;
                let offset = (q + u64::from(r < u)) as usize;
                if offset >= len {
                    continue;
                }
                for (d, &b) in out[offset..].iter_mut().zip(&split[s]) {
                    *d += w * b;
                }
            }
            ResidueSeries {
                residue: r,
                modulus,
                values: out,
            }
        })
        .collect())
}

/// A single coefficient a_n, from representation counts alone.
pub fn coefficient_at(recipe: &ThetaRecipe, n: u64) -> i64 {
    let mut total = 0i64;
    let mut z = 0u64;
    while recipe.unary_t * z * z <= n {
        let m = n - recipe.unary_t * z * z;
        let b: i64 = recipe
            .terms
            .iter()
            .map(|(s, f)| *s as i64 * f.representations(m) as i64)
            .sum();
        total += if z == 0 { b } else { 2 * b };
        z += 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn form(a: i64, b: i64, c: i64) -> BinaryQuadraticForm {
        BinaryQuadraticForm::new(a, b, c).unwrap()
    }

    fn recipe_11a1() -> ThetaRecipe {
        ThetaRecipe::new(vec![(1, form(1, 0, 11)), (-1, form(3, 2, 4))], 11).unwrap()
    }

    /// Double loop over a box that contains the whole ellipse Q ≤ bound:
    /// Q ≥ |D| x² / 4c and Q ≥ |D| y² / 4a.
    fn naive_theta(f: &BinaryQuadraticForm, bound: usize) -> Vec<i64> {
        let d = f.discriminant().unsigned_abs() as f64;
        let xr = (4.0 * f.c as f64 * bound as f64 / d).sqrt() as i64 + 1;
        let yr = (4.0 * f.a as f64 * bound as f64 / d).sqrt() as i64 + 1;
        let mut out = vec![0i64; bound + 1];
        for x in -xr..=xr {
            for y in -yr..=yr {
                let v = f.eval(x, y);
                if v <= bound as i64 {
                    out[v as usize] += 1;
                }
            }
        }
        out
    }

    #[test]
    fn theta_binary_examples() {
        // x² + 11y² = 4 and = 9 only at (±2, 0) and (±3, 0)
        let t = theta_binary(&form(1, 0, 11), 12).unwrap();
        assert_eq!(t.coeffs(), &[1, 2, 0, 0, 2, 0, 0, 0, 0, 2, 0, 2, 4]);
        assert_eq!(t.coeffs(), naive_theta(&form(1, 0, 11), 12).as_slice());
        assert_eq!(theta_binary(&form(3, 2, 4), 10).unwrap().coeff(1), 0);
        assert_eq!(theta_binary(&form(1, 0, 1), 10).unwrap().coeff(2), 4);
    }

    #[test]
    fn invalid_forms_rejected() {
        assert!(matches!(BinaryQuadraticForm::new(1, 2, 1), Err(Error::InvalidForm { .. })));
        assert!(matches!(BinaryQuadraticForm::new(-1, 0, -3), Err(Error::InvalidForm { .. })));
        assert!(theta_binary(&BinaryQuadraticForm { a: 1, b: 3, c: 1 }, 10).is_err());
    }

    #[test]
    fn theta_unary_examples() {
        let t = theta_unary(11, 50);
        let nz: Vec<(usize, i64)> = t.nonzero_terms();
        assert_eq!(nz, vec![(0, 1), (11, 2), (44, 2)]);
        assert_eq!(theta_unary(1, 5).coeffs(), &[1, 2, 0, 0, 2, 0]);
        let t = theta_unary(20, 19);
        assert_eq!(t.nonzero_terms(), vec![(0, 1)]);
    }

    #[test]
    fn series_arithmetic_examples() {
        let s = PowerSeries::from_coeffs(vec![1, 2, 0]);
        assert_eq!(series_mul(&s, &s).unwrap().coeffs(), &[1, 4, 4]);
        assert!(series_sub(&s, &s).unwrap().coeffs().iter().all(|&c| c == 0));
        let u = theta_unary(1, 10);
        assert_eq!(series_mul(&u, &u).unwrap().coeff(2), 4);
        let short = PowerSeries::from_coeffs(vec![1, 2]);
        assert!(matches!(series_mul(&s, &short), Err(Error::Dimension { .. })));
        assert!(matches!(series_sub(&s, &short), Err(Error::Dimension { .. })));
    }

    #[test]
    fn overflow_is_reported() {
        let big = PowerSeries::from_coeffs(vec![i64::MAX / 2, i64::MAX / 2, i64::MAX / 2]);
        assert_eq!(series_mul(&big, &big), Err(Error::Overflow("series_mul")));
        let neg = PowerSeries::from_coeffs(vec![i64::MIN, 0, 0]);
        let one = PowerSeries::from_coeffs(vec![1, 0, 0]);
        assert!(series_sub(&neg, &one).is_err());
        assert!(big.scale(4).is_err());
    }

    #[test]
    fn recipe_11a1_small_coefficients() {
        let f = build_F(&recipe_11a1(), 40).unwrap();
        assert_eq!(f.coeff(0), 0);
        assert_eq!(f.coeff(1), 2);
        assert_eq!(f.coeff(3), -2);
        assert_eq!(
            f.coeffs(),
            &[0, 2, 0, -2, 0, -2, 0, 0, 0, 0, 0, 2, 4, 0, -4, 2, -4, 0, 0, 0, 0, 0, 4, -2, 0, 0, 4, 2, 0, 0, 0, -2, 0, -2, -4, 0, 0, -2, 4, 0, 0]
        );
    }

    #[test]
    fn theta_binary_matches_naive_for_awkward_forms() {
        for f in [form(3, -2, 23), form(7, 6, 11), form(2, 2, 9), form(3, 2, 4), form(1, 1, 1), form(5, -5, 2)] {
            let fast = theta_binary(&f, 70_000).unwrap();
            assert_eq!(fast.coeffs(), naive_theta(&f, 70_000).as_slice(), "{f:?}");
        }
    }

    #[test]
    fn residue_expansion_matches_full_product() {
        let r = recipe_11a1();
        let full = build_F(&r, 30_000).unwrap();
        let classes = [1u64, 3, 5, 15, 23, 31, 37, 0, 43];
        for rs in expand_residues(&r, 30_000, 44, &classes).unwrap() {
            for (j, &v) in rs.values.iter().enumerate() {
                assert_eq!(v, full.coeff(rs.residue as usize + 44 * j));
            }
            assert_eq!(rs.values.len(), (30_000 - rs.residue as usize) / 44 + 1);
        }
    }

    #[test]
    fn single_coefficient_matches_expansion() {
        let r = recipe_11a1();
        let full = build_F(&r, 5000).unwrap();
        for n in (0..=5000u64).step_by(7) {
            assert_eq!(coefficient_at(&r, n), full.coeff(n as usize), "n={n}");
        }
    }

    #[test]
    fn representations_match_theta() {
        let f = form(7, 6, 11);
        let t = theta_binary(&f, 3000).unwrap();
        for m in 0..=3000u64 {
            assert_eq!(f.representations(m) as i64, t.coeff(m as usize));
        }
    }

    fn small_series(len: usize) -> impl Strategy<Value = PowerSeries> {
        proptest::collection::vec(-50i64..50, len).prop_map(PowerSeries::from_coeffs)
    }

    proptest! {
        #[test]
        fn theta_is_naive_count(a in 1i64..12, b in -12i64..12, c in 1i64..12, bound in 1usize..3000) {
            prop_assume!(b * b - 4 * a * c < 0);
            let f = form(a, b, c);
            let fast = theta_binary(&f, bound).unwrap();
            let naive = naive_theta(&f, bound);
            prop_assert_eq!(fast.coeffs(), naive.as_slice());
            prop_assert!(fast.coeffs()[1..].iter().all(|&v| v >= 0 && v % 2 == 0));
            prop_assert_eq!(fast.coeff(0), 1);
        }

        #[test]
        fn mul_commutes(a in small_series(40), b in small_series(40)) {
            prop_assert_eq!(series_mul(&a, &b).unwrap(), series_mul(&b, &a).unwrap());
        }

        #[test]
        fn mul_associates(a in small_series(25), b in small_series(25), c in small_series(25)) {
            let left = series_mul(&series_mul(&a, &b).unwrap(), &c).unwrap();
            let right = series_mul(&a, &series_mul(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn sub_then_add_roundtrips(a in small_series(30), b in small_series(30)) {
            prop_assert_eq!(series_add(&series_sub(&a, &b).unwrap(), &b).unwrap(), a);
        }
    }
}
