//! Exact cycle-index quantities of the symmetric group and their asymptotic
//! majorants.
//!
//! Counts are `BigUint`, ratios `BigRational`; floating point appears only in
//! the asymptotic evaluators, which work in log space so that values such as
//! `1/200!` stay representable.

use std::f64::consts::{E, LN_2, PI};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type BigCount = BigUint;

/// Numbers of cycles of each length: `counts[k - 1] = C_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType {
    counts: Vec<usize>,
}

impl CycleType {
    pub fn new(counts: Vec<usize>) -> Self {
        CycleType { counts }
    }

    pub fn of_permutation(p: &[usize]) -> Self {
        let mut counts = vec![0; p.len()];
        for len in crate::perm::cycle_lengths(p) {
            counts[len - 1] += 1;
        }
        CycleType { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `sum_k k C_k`.
    pub fn degree(&self) -> usize {
        self.counts.iter().enumerate().map(|(i, c)| (i + 1) * c).sum()
    }

    pub fn fixed_points(&self) -> usize {
        self.counts.first().copied().unwrap_or(0)
    }

    pub fn max_cycle_len(&self) -> usize {
        self.counts.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1)
    }

    /// Number of permutations of this type, `N! / prod_k (k^C_k C_k!)`.
    pub fn class_size(&self) -> BigCount {
        let mut denom = BigUint::one();
        for (i, &c) in self.counts.iter().enumerate() {
            denom *= BigUint::from(i + 1).pow(c as u32) * factorial(c);
        }
        factorial(self.degree()) / denom
    }

    /// Every cycle type of degree `n` (integer partitions of `n`).
    pub fn all(n: usize) -> Vec<CycleType> {
        fn go(rest: usize, max_part: usize, counts: &mut Vec<usize>, out: &mut Vec<CycleType>) {
            if rest == 0 {
                out.push(CycleType { counts: counts.clone() });
                return;
            }
            for part in (1..=max_part.min(rest)).rev() {
                counts[part - 1] += 1;
                go(rest - part, part, counts, out);
                counts[part - 1] -= 1;
            }
        }
        let mut out = Vec::new();
        go(n, n, &mut vec![0; n], &mut out);
        out
    }
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn ratio(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int_ratio(n: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Cycle sums `Z_0, ..., Z_n` for weights `t` (`t[k - 1] = t_k`; missing
/// weights are zero), from `Z_N = sum_k (N-1)!/(N-k)! t_k Z_{N-k}`.
pub fn cycle_sums_upto(n: usize, t: &[BigRational]) -> Vec<BigRational> {
    let mut z: Vec<BigRational> = Vec::with_capacity(n + 1);
    z.push(BigRational::one());
    for big_n in 1..=n {
        let mut acc = BigRational::zero();
        // falling = (N-1)!/(N-k)!
        let mut falling = BigUint::one();
        for k in 1..=big_n {
            if k > 1 {
                falling *= big_n - k + 1;
            }
            if let Some(tk) = t.get(k - 1).filter(|tk| !tk.is_zero()) {
                acc += tk * int_ratio(falling.clone()) * &z[big_n - k];
            }
        }
        z.push(acc);
    }
    z
}

/// `Z_n(t_1, ..., t_n) = sum_sigma prod_k t_k^{C_k(sigma)}`.
pub fn cycle_sum(n: usize, t: &[BigRational]) -> BigRational {
    cycle_sums_upto(n, t).pop().expect("non-empty")
}

/// Integer specialization with `t_1 = ... = t_k = 1`, rest zero, for all sizes
/// up to `n`.
fn restricted_counts_upto(n: usize, k: usize) -> Vec<BigUint> {
    let mut z: Vec<BigUint> = vec![BigUint::one()];
    for big_n in 1..=n {
        let mut acc = BigUint::zero();
        let mut falling = BigUint::one();
        for j in 1..=big_n.min(k) {
            if j > 1 {
                falling *= big_n - j + 1;
            }
            acc += &falling * &z[big_n - j];
        }
        z.push(acc);
    }
    z
}

/// Number of permutations of `S_n` with every cycle of length at most `k`.
pub fn count_restricted(n: usize, k: usize) -> Result<BigCount> {
    if k < 1 {
        return Err(Error::InvalidArgument("cycle-length bound k must be at least 1".into()));
    }
    Ok(restricted_counts_upto(n, k).pop().expect("non-empty"))
}

/// Exact rational together with a double rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactFraction {
    pub value: BigRational,
    pub approx: f64,
    pub ln: f64,
}

impl ExactFraction {
    fn new(value: BigRational) -> Self {
        let approx = ratio_to_f64(&value);
        let ln = ratio_ln(&value);
        ExactFraction { value, approx, ln }
    }
}

/// `count_restricted(n, k) / n!`.
pub fn fraction_exact(n: usize, k: usize) -> Result<ExactFraction> {
    Ok(ExactFraction::new(ratio(count_restricted(n, k)?, factorial(n))))
}

/// Value of an asymptotic majorant, with the `1 + o(1)` prefactor dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticBound {
    /// Natural log of the bound.
    pub ln_value: f64,
    /// The bound itself (may under/overflow; use `ln_value` for comparisons).
    pub value: f64,
    /// The bracketed exponent; the bound decays exponentially when positive.
    pub bracket: f64,
    /// True when the bracket is not positive or the bound is at least 1.
    pub vacuous: bool,
}

impl AsymptoticBound {
    fn from_parts(n: usize, bracket: f64) -> Self {
        let nf = n as f64;
        let ln_value = -0.5 * (2.0 * PI * nf).ln() - nf * bracket;
        AsymptoticBound { ln_value, value: ln_value.exp(), bracket, vacuous: bracket <= 0.0 || ln_value >= 0.0 }
    }
}

fn fraction_bracket(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    (nf.ln() - 1.0) / k as f64 - (E - 1.0) / nf.powf(1.0 / k as f64)
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok(())
}

/// `(2 pi N)^{-1/2} exp{-N [(ln N - 1)/K - (e - 1)/N^{1/K}]}`, the majorant of
/// the fraction of permutations with cycles no longer than `K`.
pub fn fraction_asymptotic_bound(n: usize, k: usize) -> Result<AsymptoticBound> {
    check_nk(n, k)?;
    Ok(AsymptoticBound::from_parts(n, fraction_bracket(n, k)))
}

/// The saddle-point correction term `R_{N,K}` (defined for `K >= 2`).
pub fn saddle_point_remainder(n: usize, k: usize) -> Result<f64> {
    check_nk(n, k)?;
    if k < 2 {
        return Err(Error::InvalidArgument("R_{N,K} is defined for k >= 2".into()));
    }
    let nf = n as f64;
    let kf = k as f64;
    let mut leading = 0.0;
    for s in 1..k {
        let sf = s as f64;
        let rising: f64 = (1..s).map(|j| sf / kf + j as f64).product();
        let denom = ln_factorial_f64(s) + ln_factorial_f64(k - s);
        leading += rising * (-denom).exp() * nf.powf((kf - sf) / kf);
    }
    let harmonic_tail: f64 = (2..=k).map(|s| 1.0 / s as f64).sum();
    Ok(leading - harmonic_tail / kf)
}

/// Upper estimate `(e - 1) N^{(K-1)/K}` of `R_{N,K}`.
pub fn saddle_point_remainder_upper(n: usize, k: usize) -> f64 {
    (E - 1.0) * (n as f64).powf((k as f64 - 1.0) / k as f64)
}

/// Natural log of the saddle-point asymptotic for the fraction,
/// `exp(R_{N,K}) / ((N!)^{1/K} (2 pi N)^{(K-1)/(2K)} sqrt K)`, prefactor dropped.
pub fn fraction_saddle_point_ln(n: usize, k: usize) -> Result<f64> {
    let r = saddle_point_remainder(n, k)?;
    let kf = k as f64;
    let nf = n as f64;
    Ok(r - ln_factorial(n) / kf - (kf - 1.0) / (2.0 * kf) * (2.0 * PI * nf).ln() - 0.5 * kf.ln())
}

/// Lower bound `1/(12N + 1)` on the Stirling remainder `r_N`.
pub fn stirling_remainder_lower(n: usize) -> f64 {
    1.0 / (12.0 * n as f64 + 1.0)
}

/// `r_N = ln N! - ln(sqrt(2 pi N) (N/e)^N)`, from the exact factorial.
pub fn stirling_remainder(n: usize) -> f64 {
    let nf = n as f64;
    ln_factorial(n) - 0.5 * (2.0 * PI * nf).ln() - nf * (nf.ln() - 1.0)
}

/// Derangement number `d_s`.
pub fn derangements(s: usize) -> BigCount {
    let (mut prev, mut cur) = (BigUint::one(), BigUint::zero()); // d_0, d_1
    if s == 0 {
        return prev;
    }
    for m in 2..=s {
        let next = (m - 1) * (&prev + &cur);
        prev = cur;
        cur = next;
    }
    cur
}

/// `D_K(N) = sum_{s <= K} binom(N, s) d_s`: permutations with at least
/// `N - K` fixed points.
pub fn count_near_identity(n: usize, k: usize) -> BigCount {
    (0..=k.min(n)).map(|s| binomial(n, s) * derangements(s)).sum()
}

fn check_xi(xi: &BigRational) -> Result<()> {
    if !xi.is_positive() || *xi > BigRational::one() {
        return Err(Error::InvalidNoise(format!("xi = {xi} must lie in (0, 1]")));
    }
    Ok(())
}

/// `sum_pi xi^{N - C_1(pi)} = xi^N N! sum_{j <= N} (1/xi - 1)^j / j!`.
pub fn weighted_cycle_sum(n: usize, xi: &BigRational) -> Result<BigRational> {
    check_xi(xi)?;
    let q = xi.recip() - BigRational::one();
    let mut term = BigRational::one(); // q^j / j!
    let mut acc = BigRational::one();
    for j in 1..=n {
        term = term * &q / BigRational::from_integer(BigInt::from(j));
        acc += &term;
    }
    Ok(acc * int_ratio(factorial(n)) * pow_ratio(xi, n))
}

/// Weighted sum over permutations with cycles of length at most `k`,
/// `xi^N Z_N(1/xi, 1, ..., 1, 0, ...)`.
pub fn weighted_restricted_sum(n: usize, k: usize, xi: &BigRational) -> Result<BigRational> {
    check_xi(xi)?;
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut t = vec![BigRational::one(); k.min(n.max(1))];
    t[0] = xi.recip();
    Ok(cycle_sum(n, &t) * pow_ratio(xi, n))
}

fn pow_ratio(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

/// Exact cutoff above which `weighted_fraction_bound` skips the exact ratio.
pub const WEIGHTED_EXACT_CAP: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedFractionBound {
    /// `ln(F_N^{(K)} / xi^N)` from the exact unweighted fraction.
    pub ln_fraction_over_xi_n: f64,
    /// Asymptotic majorant including the `ln(1/xi)` shift.
    pub majorant: AsymptoticBound,
    /// Exact weighted ratio, when `n <= WEIGHTED_EXACT_CAP`.
    pub exact_ratio: Option<f64>,
    pub exact_ratio_ln: Option<f64>,
}

/// Bounds on the weighted fraction of low-order permutations.
pub fn weighted_fraction_bound(n: usize, k: usize, xi: &BigRational) -> Result<WeightedFractionBound> {
    check_nk(n, k)?;
    check_xi(xi)?;
    let xi_f = ratio_to_f64(xi);
    let ln_inv_xi = -xi_f.ln();
    let bracket = fraction_bracket(n, k) - ln_inv_xi;
    let majorant = AsymptoticBound::from_parts(n, bracket);
    let fraction = fraction_exact(n, k)?;
    let ln_fraction_over_xi_n = fraction.ln + n as f64 * ln_inv_xi;
    let (exact_ratio, exact_ratio_ln) = if n <= WEIGHTED_EXACT_CAP {
        let r = weighted_restricted_sum(n, k, xi)? / weighted_cycle_sum(n, xi)?;
        (Some(ratio_to_f64(&r)), Some(ratio_ln(&r)))
    } else {
        (None, None)
    };
    Ok(WeightedFractionBound { ln_fraction_over_xi_n, majorant, exact_ratio, exact_ratio_ln })
}

/// One row of the fraction census.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRow {
    pub n: usize,
    pub exact_fraction_ln: f64,
    pub asymptotic_bound_ln: f64,
    pub weighted_ratio_ln: Option<f64>,
    pub weighted_bound_ln: f64,
    pub bound_vacuous: bool,
}

pub fn census_row(n: usize, k: usize, xi: &BigRational) -> Result<CensusRow> {
    let exact = fraction_exact(n, k)?;
    let bound = fraction_asymptotic_bound(n, k)?;
    let weighted = weighted_fraction_bound(n, k, xi)?;
    Ok(CensusRow {
        n,
        exact_fraction_ln: exact.ln,
        asymptotic_bound_ln: bound.ln_value,
        weighted_ratio_ln: weighted.exact_ratio_ln,
        weighted_bound_ln: weighted.majorant.ln_value,
        bound_vacuous: weighted.majorant.vacuous,
    })
}

/// Renders `exp(ln)` in scientific notation without passing through an f64
/// that could underflow.
pub fn format_from_ln(ln: f64) -> String {
    if ln == f64::NEG_INFINITY {
        return "0".into();
    }
    let log10 = ln / std::f64::consts::LN_10;
    let exp = log10.floor();
    let mantissa = 10f64.powf(log10 - exp);
    format!("{mantissa:.12}e{exp}")
}

/// Parses a decimal such as `0.75` or a fraction such as `3/4` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidArgument(format!("cannot parse `{s}` as a rational number"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
    if frac_part.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(num, den))
}

/// Natural log of a non-negative big integer.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return x.to_f64().expect("fits").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("fits");
    top.ln() + shift as f64 * LN_2
}

/// Natural log of a positive rational (`-inf` for zero).
pub fn ratio_ln(r: &BigRational) -> f64 {
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

/// Correctly scaled double approximation of a rational, also for values far
/// outside the range where numerator and denominator fit in `f64`.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 { (num << shift as u64) / den } else { num / (den << (-shift) as u64) };
    let mag = q.to_f64().expect("fits") * 2f64.powi(-shift as i32);
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

fn ln_factorial(n: usize) -> f64 {
    ln_biguint(&factorial(n))
}

fn ln_factorial_f64(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::for_each_permutation;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn cycle_sum_examples() {
        let ones = vec![r(1, 1); 5];
        assert_eq!(cycle_sum(5, &ones), r(120, 1));
        assert_eq!(cycle_sum(6, &[r(1, 1)]), r(1, 1));
        assert_eq!(cycle_sum(4, &[r(1, 1), r(1, 1)]), r(10, 1));
        assert_eq!(cycle_sum(0, &[]), r(1, 1));
    }

    #[test]
    fn cycle_sum_counts_cycles_with_weights() {
        // Z_3(t1, t2, t3) = t1^3 + 3 t1 t2 + 2 t3
        let t = [r(2, 1), r(3, 1), r(5, 1)];
        assert_eq!(cycle_sum(3, &t), r(8 + 3 * 2 * 3 + 2 * 5, 1));
    }

    #[test]
    fn count_restricted_examples() {
        assert_eq!(count_restricted(6, 6).unwrap(), factorial(6));
        assert_eq!(count_restricted(6, 1).unwrap(), BigUint::one());
        assert_eq!(count_restricted(4, 2).unwrap(), BigUint::from(10u32));
        assert!(count_restricted(4, 0).is_err());
    }

    #[test]
    fn fraction_examples() {
        assert_eq!(fraction_exact(4, 2).unwrap().value, r(10, 24));
        assert_eq!(fraction_exact(7, 7).unwrap().value, r(1, 1));
        assert_eq!(fraction_exact(5, 1).unwrap().value, r(1, 120));
        let tiny = fraction_exact(200, 1).unwrap();
        assert!(tiny.approx == 0.0 && (tiny.ln + ln_factorial(200)).abs() < 1e-9);
    }

    #[test]
    fn k1_bound_dominates_inverse_factorial() {
        for n in 3..=60 {
            let b = fraction_asymptotic_bound(n, 1).unwrap();
            assert!(b.ln_value >= -ln_factorial(n), "n={n}");
        }
    }

    #[test]
    fn n40_k3_bound_below_one_and_decreasing() {
        let b40 = fraction_asymptotic_bound(40, 3).unwrap();
        assert!(b40.value < 1.0 && !b40.vacuous);
        let mut prev = b40.ln_value;
        for n in 41..=120 {
            let b = fraction_asymptotic_bound(n, 3).unwrap().ln_value;
            assert!(b < prev, "n={n}");
            prev = b;
        }
    }

    #[test]
    fn vacuous_region_is_flagged() {
        let b = fraction_asymptotic_bound(4, 3).unwrap();
        assert!(b.bracket < 0.0 && b.vacuous && b.value > 1.0);
    }

    #[test]
    fn stirling_remainder_bound_holds() {
        for n in 1..=300 {
            assert!(stirling_remainder(n) > stirling_remainder_lower(n), "n={n}");
        }
    }

    #[test]
    fn saddle_point_approaches_exact() {
        // the relative error of the saddle-point formula shrinks with N
        let err = |n: usize| (fraction_saddle_point_ln(n, 2).unwrap() - fraction_exact(n, 2).unwrap().ln).abs();
        assert!(err(200) < err(20));
        assert!(err(200) < 0.05);
    }

    #[test]
    fn derangement_examples_and_closed_form() {
        assert_eq!(derangements(0), BigUint::one());
        assert_eq!(derangements(1), BigUint::zero());
        assert_eq!(derangements(3), BigUint::from(2u32));
        for s in 0..20 {
            // s! sum (-1)^j / j!
            let mut acc = BigRational::zero();
            for j in 0..=s {
                let term = r(if j % 2 == 0 { 1 } else { -1 }, 1) / int_ratio(factorial(j));
                acc += term;
            }
            assert_eq!(int_ratio(derangements(s)), acc * int_ratio(factorial(s)));
        }
    }

    #[test]
    fn near_identity_examples() {
        assert_eq!(count_near_identity(7, 0), BigUint::one());
        assert_eq!(count_near_identity(7, 1), BigUint::one());
        assert_eq!(count_near_identity(5, 3), BigUint::from(31u32));
        let mut brute = 0u32;
        for_each_permutation(5, |p| {
            if crate::perm::fixed_points(p) >= 2 {
                brute += 1;
            }
        });
        assert_eq!(brute, 31);
    }

    #[test]
    fn weighted_examples() {
        assert_eq!(weighted_cycle_sum(5, &r(1, 1)).unwrap(), r(120, 1));
        assert_eq!(weighted_cycle_sum(2, &r(1, 2)).unwrap(), r(5, 4));
        assert_eq!(weighted_restricted_sum(3, 2, &r(1, 2)).unwrap(), r(7, 4));
        assert_eq!(weighted_restricted_sum(6, 1, &r(1, 3)).unwrap(), r(1, 1));
        assert_eq!(weighted_restricted_sum(6, 6, &r(2, 3)).unwrap(), weighted_cycle_sum(6, &r(2, 3)).unwrap());
        assert!(weighted_cycle_sum(3, &r(0, 1)).is_err());
        assert!(weighted_cycle_sum(3, &r(3, 2)).is_err());
    }

    #[test]
    fn weighted_fraction_bound_examples() {
        let unit = weighted_fraction_bound(30, 2, &r(1, 1)).unwrap();
        let plain = fraction_asymptotic_bound(30, 2).unwrap();
        assert!((unit.majorant.ln_value - plain.ln_value).abs() < 1e-12);

        let b = weighted_fraction_bound(8, 2, &r(1, 2)).unwrap();
        let exact = weighted_restricted_sum(8, 2, &r(1, 2)).unwrap() / weighted_cycle_sum(8, &r(1, 2)).unwrap();
        assert!((b.exact_ratio.unwrap() - ratio_to_f64(&exact)).abs() < 1e-15);
        assert!(b.ln_fraction_over_xi_n >= b.exact_ratio_ln.unwrap());

        let xi = r(9, 10);
        let at20 = weighted_fraction_bound(20, 2, &xi).unwrap().exact_ratio.unwrap();
        let at40 = weighted_fraction_bound(40, 2, &xi).unwrap().exact_ratio.unwrap();
        assert!(at20 > at40);

        assert!(weighted_fraction_bound(401, 2, &xi).unwrap().exact_ratio.is_none());
    }

    #[test]
    fn cycle_types_partition_the_group() {
        for n in 1..=10 {
            let total: BigUint = CycleType::all(n).iter().map(|c| c.class_size()).sum();
            assert_eq!(total, factorial(n), "n={n}");
        }
        let t = CycleType::of_permutation(&[1, 0, 2, 4, 5, 3]);
        assert_eq!(t.counts(), &[1, 1, 1, 0, 0, 0]);
        assert_eq!(t.degree(), 6);
        assert_eq!(t.max_cycle_len(), 3);
    }

    #[test]
    fn rational_parsing_and_rendering() {
        assert_eq!(parse_rational("0.75").unwrap(), r(3, 4));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert_eq!(parse_rational("2/6").unwrap(), r(1, 3));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(format_from_ln((1.5e-300f64).ln()), "1.500000000000e-300");
        assert!((ratio_to_f64(&r(1, 3)) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(ratio_to_f64(&r(-5, 2)), -2.5);
    }
}
