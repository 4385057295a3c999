//! Matrix permanents and cycle-weighted permutation sums.
//!
//! All sums here are over permutations `pi` of `0..n` of terms
//! `w(pi) * prod_i a[i][pi(i)]`, with `w(pi) = xi^(n - fixed_points(pi))`,
//! optionally restricted to permutations whose disjoint cycles are no longer
//! than a cutoff `K`.

use num_complex::Complex64;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareComplexMatrix;
use crate::perm::for_each_permutation;
use crate::rng;

/// Default size cap for exact permanents.
pub const EXACT_CAP: usize = 30;
/// Size cap for the enumeration oracle.
pub const BRUTEFORCE_CAP: usize = 10;
/// Size cap for the subset dynamic program.
pub const SUBSET_DP_CAP: usize = 24;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Maximum interference order retained, with the pairwise overlap that weights
/// each retained cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffPolicy {
    pub k_max: usize,
    pub xi: f64,
}

impl CutoffPolicy {
    pub fn new(k_max: usize, xi: f64) -> Result<Self> {
        let p = CutoffPolicy { k_max, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::InvalidPolicy("cycle-length cutoff K must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::InvalidPolicy(format!("overlap xi = {} outside [0, 1]", self.xi)));
        }
        Ok(())
    }

    /// True when the cutoff removes nothing for `n` bosons.
    pub fn is_exact_for(&self, n: usize) -> bool {
        self.k_max >= n
    }
}

/// Compensated complex accumulator (Kahan, component-wise).
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: Complex64,
    carry: Complex64,
}

impl KahanSum {
    #[inline]
    fn add(&mut self, x: Complex64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Exact permanent with the default size cap.
pub fn permanent_exact(a: &SquareComplexMatrix) -> Result<Complex64> {
    permanent_exact_capped(a, EXACT_CAP)
}

/// Exact permanent by Glynn's formula with Gray-code ordering, `O(n 2^n)`.
///
/// The `2^(n-1)` sign vectors are split into fixed blocks; each block is
/// summed with compensation and the block totals are reduced in order, so the
/// result does not depend on the number of worker threads.
pub fn permanent_exact_capped(a: &SquareComplexMatrix, cap: usize) -> Result<Complex64> {
    let n = a.n();
    if n > cap {
        return Err(Error::SizeLimit {
            what: "exact permanent",
            size: n,
            cap,
            hint: Some("use glynn_estimate for larger matrices".into()),
        });
    }
    match n {
        0 => return Ok(ONE),
        1 => return Ok(a[(0, 0)]),
        2 => return Ok(a[(0, 0)] * a[(1, 1)] + a[(0, 1)] * a[(1, 0)]),
        _ => {}
    }
    let total: u64 = 1 << (n - 1);
    let blocks: u64 = if n >= 16 { 64 } else { 1 };
    let block_len = total / blocks;
    let partials: Vec<Complex64> = (0..blocks)
        .into_par_iter()
        .map(|b| glynn_block(a, b * block_len, (b + 1) * block_len))
        .collect();
    let mut acc = KahanSum::default();
    for p in partials {
        acc.add(p);
    }
    Ok(acc.sum / total as f64)
}

/// Sum of Glynn terms for Gray-code steps `start..end`. Row 0 keeps sign +1;
/// bit `b` of the Gray code controls the sign of row `b + 1`.
fn glynn_block(a: &SquareComplexMatrix, start: u64, end: u64) -> Complex64 {
    let n = a.n();
    let gray = start ^ (start >> 1);
    let mut signs = vec![1.0f64; n];
    for (b, s) in signs.iter_mut().skip(1).enumerate() {
        if gray >> b & 1 == 1 {
            *s = -1.0;
        }
    }
    let mut col_sums = vec![ZERO; n];
    for (i, &s) in signs.iter().enumerate() {
        for (j, cs) in col_sums.iter_mut().enumerate() {
            *cs += a[(i, j)] * s;
        }
    }
    let mut parity = if gray.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut acc = KahanSum::default();
    let mut g = start;
    loop {
        let prod: Complex64 = col_sums.iter().product();
        acc.add(prod * parity);
        g += 1;
        if g >= end {
            break;
        }
        let row = g.trailing_zeros() as usize + 1;
        let delta = -2.0 * signs[row];
        signs[row] = -signs[row];
        parity = -parity;
        for (j, cs) in col_sums.iter_mut().enumerate() {
            *cs += a[(row, j)] * delta;
        }
    }
    acc.sum
}

/// Permanent by direct enumeration of all `n!` permutations (test oracle).
pub fn permanent_bruteforce(a: &SquareComplexMatrix) -> Result<Complex64> {
    weighted_perm_sum_bruteforce(a, 1.0)
}

/// `sum_pi xi^(n - C1(pi)) prod_i a[i][pi(i)]` by enumeration, `n <= 10`.
pub fn weighted_perm_sum_bruteforce(a: &SquareComplexMatrix, xi: f64) -> Result<Complex64> {
    cycle_filtered_bruteforce(a, xi, a.n())
}

/// Enumeration oracle for the cycle-restricted sum, `n <= 10`.
pub fn cycle_filtered_bruteforce(a: &SquareComplexMatrix, xi: f64, k_max: usize) -> Result<Complex64> {
    let n = a.n();
    if n > BRUTEFORCE_CAP {
        return Err(Error::size("permanent enumeration", n, BRUTEFORCE_CAP));
    }
    let mut acc = KahanSum::default();
    for_each_permutation(n, |p| {
        if crate::perm::max_cycle_len(p) > k_max {
            return;
        }
        let moved = p.iter().enumerate().filter(|(i, &j)| *i != j).count();
        let term: Complex64 = p.iter().enumerate().map(|(i, &j)| a[(i, j)]).product();
        acc.add(term * xi.powi(moved as i32));
    });
    Ok(acc.sum)
}

/// Keeps the diagonal, multiplies off-diagonal entries by `xi`.
pub fn xi_rescale(a: &SquareComplexMatrix, xi: f64) -> SquareComplexMatrix {
    SquareComplexMatrix::from_fn(a.n(), |i, j| if i == j { a[(i, j)] } else { a[(i, j)] * xi })
}

/// `sum_pi xi^(n - C1(pi)) prod_i a[i][pi(i)]`, evaluated as the permanent of
/// the rescaled matrix: every non-fixed point picks one off-diagonal entry.
pub fn weighted_perm_sum(a: &SquareComplexMatrix, xi: f64) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::InvalidNoise(format!("xi = {xi} outside [0, 1]")));
    }
    permanent_exact(&xi_rescale(a, xi))
}

/// Weighted sum restricted to permutations whose cycles are all at most
/// `policy.k_max` long.
///
/// Dynamic program over subsets: `f(S)` sums over permutations of `S`;
/// the cycle through `min(S)` is peeled off, so every permutation is produced
/// once. Cycle weights `h(C)` come from a path DP anchored at `min(C)`, which
/// enumerates each directed cycle (both orientations) exactly once.
pub fn cycle_restricted_sum(a: &SquareComplexMatrix, policy: &CutoffPolicy) -> Result<Complex64> {
    policy.validate()?;
    let n = a.n();
    if n > SUBSET_DP_CAP {
        return Err(Error::size("cycle-restricted subset DP", n, SUBSET_DP_CAP));
    }
    if n == 0 {
        return Ok(ONE);
    }
    let k = policy.k_max.min(n);
    let h = cycle_weights(a, k, policy.xi);

    let full: usize = (1 << n) - 1;
    let mut f = vec![ZERO; full + 1];
    f[0] = ONE;
    for s in 1..=full {
        let anchor = 1usize << s.trailing_zeros();
        let rest = s ^ anchor;
        let mut acc = ZERO;
        for_each_small_submask(rest, k - 1, &mut |sub| {
            let cyc = sub | anchor;
            let w = h[cyc];
            if w != ZERO {
                acc += w * f[s ^ cyc];
            }
        });
        f[s] = acc;
    }
    Ok(f[full])
}

/// `h[C]` = total weight of directed cycles covering exactly `C`, `|C| <= k`.
fn cycle_weights(a: &SquareComplexMatrix, k: usize, xi: f64) -> Vec<Complex64> {
    use std::collections::HashMap;
    let n = a.n();
    let mut h = vec![ZERO; 1 << n];
    for s in 0..n {
        h[1 << s] = a[(s, s)];
        // paths from s through vertices > s: mask -> weight per end vertex
        let mut layer: HashMap<usize, Vec<Complex64>> = HashMap::new();
        let mut init = vec![ZERO; n];
        init[s] = ONE;
        layer.insert(1 << s, init);
        for len in 2..=k {
            let mut next: HashMap<usize, Vec<Complex64>> = HashMap::new();
            for (&mask, ends) in &layer {
                for (end, &w) in ends.iter().enumerate() {
                    if w == ZERO {
                        continue;
                    }
                    for v in (s + 1)..n {
                        if mask >> v & 1 == 1 {
                            continue;
                        }
                        let step = a[(end, v)];
                        if step == ZERO {
                            continue;
                        }
                        let entry = next.entry(mask | 1 << v).or_insert_with(|| vec![ZERO; n]);
                        entry[v] += w * step;
                    }
                }
            }
            let weight = xi.powi(len as i32);
            for (&mask, ends) in &next {
                let closed: Complex64 = ends.iter().enumerate().map(|(end, &w)| w * a[(end, s)]).sum();
                h[mask] += closed * weight;
            }
            layer = next;
        }
    }
    h
}

/// Calls `f` with every submask of `mask` having at most `max_pop` bits,
/// including the empty one.
fn for_each_small_submask(mask: usize, max_pop: usize, f: &mut impl FnMut(usize)) {
    fn go(bits: &[usize], from: usize, cur: usize, left: usize, f: &mut impl FnMut(usize)) {
        f(cur);
        if left == 0 {
            return;
        }
        for i in from..bits.len() {
            go(bits, i + 1, cur | bits[i], left - 1, f);
        }
    }
    if max_pop as u32 >= mask.count_ones() {
        let mut sub = mask;
        loop {
            f(sub);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
        return;
    }
    let bits: Vec<usize> = (0..usize::BITS as usize).filter(|b| mask >> b & 1 == 1).map(|b| 1 << b).collect();
    go(&bits, 0, 0, max_pop, f);
}

/// Monte Carlo permanent estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlynnEstimate {
    pub estimate: Complex64,
    pub std_error: f64,
}

/// Randomized Glynn estimator: `per(a) = E[prod_j x_j * prod_i (sum_j x_j a_ij)]`
/// for i.i.d. uniform signs `x_j`. Standard error by leave-one-out jackknife.
pub fn glynn_estimate(a: &SquareComplexMatrix, trials: usize, seed: u64) -> Result<GlynnEstimate> {
    if trials < 2 {
        return Err(Error::InvalidArgument(format!("glynn_estimate needs at least 2 trials, got {trials}")));
    }
    const BLOCK: usize = 4096;
    let n = a.n();
    let blocks = trials.div_ceil(BLOCK);
    let samples: Vec<Complex64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = rng::substream(seed, b as u64);
            let count = BLOCK.min(trials - b * BLOCK);
            let mut signs = vec![0.0f64; n];
            (0..count)
                .map(|_| {
                    let mut parity = 1.0;
                    let mut bits = 0u64;
                    for (j, s) in signs.iter_mut().enumerate() {
                        if j % 64 == 0 {
                            bits = rng.next_u64();
                        }
                        *s = if bits >> (j % 64) & 1 == 1 { -1.0 } else { 1.0 };
                        parity *= *s;
                    }
                    let mut prod = Complex64::new(parity, 0.0);
                    for i in 0..n {
                        let row: Complex64 = a.row(i).iter().zip(&signs).map(|(z, s)| z * s).sum();
                        prod *= row;
                    }
                    prod
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let t = samples.len() as f64;
    let mut total = KahanSum::default();
    for &x in &samples {
        total.add(x);
    }
    let mean = total.sum / t;
    // jackknife: leave-one-out means theta_i = (S - x_i) / (t - 1)
    let mut ss = 0.0;
    for &x in &samples {
        let theta = (total.sum - x) / (t - 1.0);
        ss += (theta - mean).norm_sqr();
    }
    let std_error = ((t - 1.0) / t * ss).sqrt();
    Ok(GlynnEstimate { estimate: mean, std_error })
}
