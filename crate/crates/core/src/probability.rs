//! Output probabilities of boson sampling with partially distinguishable
//! bosons, their cycle-truncated counterparts, no-click (subset)
//! probabilities, and exact total-variation distances.
//!
//! With a uniform pairwise overlap `xi`, the probability of configuration `m`
//! is a double sum over permutations `sigma, pi` of
//! `xi^{N - C_1(pi)} prod_i U[sigma(i), l_i] conj(U[pi sigma(i), l_i]) / m!`.
//!
//! The exact (untruncated) law is evaluated through an equivalent mixture:
//! the weight `xi^{N - C_1(pi)}` factorizes as
//! `sum_T (1 - xi)^{|T|} xi^{N - |T|} [pi fixes T]`, i.e. every boson is
//! independently fully indistinguishable (probability `xi`) or fully
//! distinguishable (probability `1 - xi`). The output law is then the
//! indistinguishable law of the first group convolved with independent
//! single-particle routing of the second. The literal double sum is kept as
//! an oracle.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::NoiseParams;
use crate::config_space::{ConfigSpace, OutputConfiguration};
use crate::error::{Error, Result};
use crate::interferometer::{InputSpec, Interferometer};
use crate::matrix::SquareComplexMatrix;
use crate::perm::{fixed_points, for_each_permutation, max_cycle_len, restricted_permutations};
use crate::permanent::{cycle_restricted_sum, permanent_exact, xi_rescale, CutoffPolicy};

/// Boson-number cap for the single-configuration mixture evaluation.
pub const SINGLE_CONFIG_CAP: usize = 12;
/// Boson-number cap for the literal double-permutation sum.
pub const DOUBLE_SUM_CAP: usize = 8;
/// Boson-number cap for the lossy/dark-count channel.
pub const CHANNEL_CAP: usize = 10;
/// Boson-number cap for the full mixture law at `0 < xi < 1`.
pub const MIXTURE_CAP: usize = 16;

/// Set `Omega` of output ports (0-based, sorted, distinct, non-empty).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortSubset {
    dim: usize,
    ports: Vec<usize>,
}

impl PortSubset {
    pub fn new(mut ports: Vec<usize>, dim: usize) -> Result<Self> {
        if ports.is_empty() {
            return Err(Error::InvalidSubset("port subset must be non-empty".into()));
        }
        ports.sort_unstable();
        if ports.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubset("ports must be distinct".into()));
        }
        if let Some(&p) = ports.last().filter(|&&p| p >= dim) {
            return Err(Error::InvalidSubset(format!("port {} out of range 1..={dim}", p + 1)));
        }
        Ok(PortSubset { dim, ports })
    }

    pub fn all(dim: usize) -> Result<Self> {
        Self::new((0..dim).collect(), dim)
    }

    /// Ports `2..=M`: no boson in port 1.
    pub fn without_first(dim: usize) -> Result<Self> {
        Self::new((1..dim).collect(), dim)
    }

    /// Parses 1-based `a..b` (inclusive; `M` stands for the last port), a
    /// comma-separated list, or a mix such as `1,3..5`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let bad = |s: &str| Error::InvalidSubset(format!("cannot parse port subset `{s}`"));
        let port = |s: &str| -> Result<usize> {
            let s = s.trim();
            let v = if s.eq_ignore_ascii_case("m") { dim } else { s.parse().map_err(|_| bad(s))? };
            if v == 0 || v > dim {
                return Err(Error::InvalidSubset(format!("port {v} out of range 1..={dim}")));
            }
            Ok(v - 1)
        };
        let mut ports = Vec::new();
        for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
            match part.split_once("..") {
                Some((a, b)) => {
                    let (a, b) = (port(a)?, port(b)?);
                    if a > b {
                        return Err(bad(part));
                    }
                    ports.extend(a..=b);
                }
                None => ports.push(port(part)?),
            }
        }
        Self::new(ports, dim)
    }

    pub fn ports(&self) -> &[usize] {
        &self.ports
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }

    /// Membership mask over all ports.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.dim];
        for &p in &self.ports {
            m[p] = true;
        }
        m
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::InvalidSubset(format!("subset is over {} ports, interferometer has {dim}", self.dim)));
        }
        Ok(())
    }
}

impl fmt::Display for PortSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.ports.iter().map(|p| (p + 1).to_string()).collect();
        write!(f, "{{{}}}", s.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProbabilityKind {
    Exact,
    /// Cycle-truncated series; `renormalized` marks clamped-and-rescaled values.
    Truncated { k: usize, renormalized: bool },
    MonteCarlo { std_error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityValue {
    pub value: f64,
    pub kind: ProbabilityKind,
}

impl ProbabilityValue {
    fn exact(value: f64) -> Self {
        ProbabilityValue { value, kind: ProbabilityKind::Exact }
    }

    fn truncated(value: f64, k: usize, renormalized: bool) -> Self {
        ProbabilityValue { value, kind: ProbabilityKind::Truncated { k, renormalized } }
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::InvalidNoise(format!("xi = {xi} outside [0, 1]")));
    }
    Ok(())
}

fn check_config(u: &Interferometer, input: &InputSpec, m: &OutputConfiguration) -> Result<()> {
    input.check_against(u)?;
    if m.dim() != u.dim() {
        return Err(Error::InvalidArgument(format!(
            "configuration has {} ports, interferometer has {}",
            m.dim(),
            u.dim()
        )));
    }
    if m.total() != input.n_bosons() {
        return Err(Error::ConfigurationMismatch { expected: input.n_bosons(), got: m.total() });
    }
    Ok(())
}

/// `W[b][i] = U[input_b, l_i]` for bosons `bosons` and output slots `outputs`.
fn transfer(u: &Interferometer, input: &InputSpec, bosons: &[usize], outputs: &[usize]) -> SquareComplexMatrix {
    let ports = input.ports();
    SquareComplexMatrix::from_fn(bosons.len(), |b, i| u.entry(ports[bosons[b]], outputs[i]))
}

fn abs2(w: &SquareComplexMatrix) -> SquareComplexMatrix {
    w.map(|z| Complex64::new(z.norm_sqr(), 0.0))
}

fn indistinguishable_term(u: &Interferometer, input: &InputSpec, bosons: &[usize], outputs: &[usize]) -> Result<f64> {
    if bosons.is_empty() {
        return Ok(1.0);
    }
    Ok(permanent_exact(&transfer(u, input, bosons, outputs))?.norm_sqr())
}

fn distinguishable_term(u: &Interferometer, input: &InputSpec, bosons: &[usize], outputs: &[usize]) -> Result<f64> {
    if bosons.is_empty() {
        return Ok(1.0);
    }
    Ok(permanent_exact(&abs2(&transfer(u, input, bosons, outputs)))?.re)
}

fn mixture_weight(xi: f64, indist: usize, n: usize) -> f64 {
    xi.powi(indist as i32) * (1.0 - xi).powi((n - indist) as i32)
}

/// Exact `p_m(xi)` for one configuration.
///
/// `xi = 1` and `xi = 0` use the single-permanent closed forms; otherwise the
/// mixture is expanded over boson subsets and sub-configurations.
pub fn output_probability(
    u: &Interferometer,
    input: &InputSpec,
    m: &OutputConfiguration,
    xi: f64,
) -> Result<ProbabilityValue> {
    check_xi(xi)?;
    check_config(u, input, m)?;
    let n = input.n_bosons();
    let outputs = m.ports();
    let all: Vec<usize> = (0..n).collect();
    let mfact = m.factorial_product();
    if xi == 1.0 {
        return Ok(ProbabilityValue::exact(indistinguishable_term(u, input, &all, &outputs)? / mfact));
    }
    if xi == 0.0 {
        return Ok(ProbabilityValue::exact(distinguishable_term(u, input, &all, &outputs)? / mfact));
    }
    if n > SINGLE_CONFIG_CAP {
        return Err(Error::size("single-configuration probability (bosons)", n, SINGLE_CONFIG_CAP));
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let indist: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let dist: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 0).collect();
        let weight = mixture_weight(xi, indist.len(), n);
        let mut acc = 0.0;
        let mut err = None;
        for_each_sub_configuration(m.occupations(), indist.len(), |sub, rest| {
            if err.is_some() {
                return;
            }
            let (sub_ports, rest_ports) = (sub.ports(), rest.ports());
            let r = indistinguishable_term(u, input, &indist, &sub_ports)
                .and_then(|a| Ok(a * distinguishable_term(u, input, &dist, &rest_ports)?));
            match r {
                Ok(v) => acc += v / (sub.factorial_product() * rest.factorial_product()),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        total += weight * acc;
    }
    Ok(ProbabilityValue::exact(total))
}

/// Calls `f(sub, rest)` for every split `m = sub + rest` with `|sub| = size`.
fn for_each_sub_configuration(m: &[usize], size: usize, mut f: impl FnMut(&OutputConfiguration, &OutputConfiguration)) {
    fn go(
        m: &[usize],
        pos: usize,
        left: usize,
        sub: &mut Vec<usize>,
        f: &mut impl FnMut(&OutputConfiguration, &OutputConfiguration),
    ) {
        if pos == m.len() {
            if left == 0 {
                let rest: Vec<usize> = m.iter().zip(sub.iter()).map(|(a, b)| a - b).collect();
                f(&OutputConfiguration::new(sub.clone()), &OutputConfiguration::new(rest));
            }
            return;
        }
        let remaining_capacity: usize = m[pos..].iter().sum();
        if remaining_capacity < left {
            return;
        }
        for take in 0..=m[pos].min(left) {
            sub[pos] = take;
            go(m, pos + 1, left - take, sub, f);
        }
        sub[pos] = 0;
    }
    let mut sub = vec![0; m.len()];
    go(m, 0, size, &mut sub, &mut f);
}

/// The literal double sum over `sigma, pi`, optionally keeping only `pi` with
/// cycles no longer than `k_max`. Oracle for `N <= 8`.
pub fn output_probability_bruteforce(
    u: &Interferometer,
    input: &InputSpec,
    m: &OutputConfiguration,
    xi: f64,
    k_max: Option<usize>,
) -> Result<f64> {
    check_xi(xi)?;
    check_config(u, input, m)?;
    let n = input.n_bosons();
    if n > DOUBLE_SUM_CAP {
        return Err(Error::size("double-permutation sum (bosons)", n, DOUBLE_SUM_CAP));
    }
    let outputs = m.ports();
    let w = transfer(u, input, &(0..n).collect::<Vec<_>>(), &outputs);
    let mut pis: Vec<(Vec<usize>, f64)> = Vec::new();
    for_each_permutation(n, |pi| {
        if k_max.is_none_or(|k| max_cycle_len(pi) <= k) {
            pis.push((pi.to_vec(), xi.powi((n - fixed_points(pi)) as i32)));
        }
    });
    let mut total = Complex64::new(0.0, 0.0);
    for_each_permutation(n, |sigma| {
        for (pi, weight) in &pis {
            let mut term = Complex64::new(*weight, 0.0);
            for i in 0..n {
                term *= w[(sigma[i], i)] * w[(pi[sigma[i]], i)].conj();
            }
            total += term;
        }
    });
    Ok(total.re / m.factorial_product())
}

/// Cycle-truncated `p_m^{(K)}`: the double sum restricted to relative
/// permutations whose cycles are at most `K` long. Raw series value; may be
/// negative.
pub fn truncated_output_probability(
    u: &Interferometer,
    input: &InputSpec,
    m: &OutputConfiguration,
    policy: &CutoffPolicy,
) -> Result<ProbabilityValue> {
    policy.validate()?;
    check_config(u, input, m)?;
    let n = input.n_bosons();
    let pis = weighted_restricted_permutations(n, policy);
    let value = truncated_term(u, input, &m.ports(), &pis)? / m.factorial_product();
    Ok(ProbabilityValue::truncated(value, policy.k_max, false))
}

fn weighted_restricted_permutations(n: usize, policy: &CutoffPolicy) -> Vec<(Vec<usize>, f64)> {
    restricted_permutations(n, policy.k_max.min(n))
        .into_iter()
        .map(|p| {
            let w = policy.xi.powi((n - fixed_points(&p)) as i32);
            (p, w)
        })
        .filter(|(_, w)| *w != 0.0)
        .collect()
}

/// `sum_pi w(pi) per(H^pi)` with `H^pi[j][i] = W[j][i] conj(W[pi(j)][i])`.
fn truncated_term(u: &Interferometer, input: &InputSpec, outputs: &[usize], pis: &[(Vec<usize>, f64)]) -> Result<f64> {
    let n = outputs.len();
    let w = transfer(u, input, &(0..n).collect::<Vec<_>>(), outputs);
    let mut total = 0.0;
    for (pi, weight) in pis {
        let h = SquareComplexMatrix::from_fn(n, |j, i| w[(j, i)] * w[(pi[j], i)].conj());
        total += weight * permanent_exact(&h)?.re;
    }
    Ok(total)
}

/// Probabilities over every configuration of a [`ConfigSpace`], in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    space: ConfigSpace,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(space: ConfigSpace, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::InvalidArgument("probability vector does not match outcome space".into()));
        }
        Ok(Distribution { space, probs })
    }

    /// Point mass on the empty configuration.
    pub fn vacuum(dim: usize) -> Result<Self> {
        Ok(Distribution { space: ConfigSpace::new(dim, 0)?, probs: vec![1.0] })
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn prob(&self, m: &OutputConfiguration) -> f64 {
        if m.total() != self.space.bosons() || m.dim() != self.space.ports() {
            return 0.0;
        }
        self.probs[self.space.rank(m.occupations())]
    }

    /// Mass of configurations with no boson outside `omega`.
    pub fn subset_mass(&self, omega: &PortSubset) -> f64 {
        let inside = omega.mask();
        self.space
            .iter()
            .zip(&self.probs)
            .filter(|(occ, _)| occ.iter().zip(&inside).all(|(&c, &ok)| ok || c == 0))
            .map(|(_, p)| p)
            .sum()
    }

    /// Adds one independently routed boson with port law `law`.
    pub fn convolve_single(&self, law: &[f64]) -> Result<Distribution> {
        let larger = ConfigSpace::new(self.space.ports(), self.space.bosons() + 1)?;
        let table = self.space.successor_table(&larger);
        let mut probs = vec![0.0; larger.len()];
        let m = self.space.ports();
        for (r, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (l, &q) in law.iter().enumerate() {
                probs[table[r * m + l]] += p * q;
            }
        }
        Ok(Distribution { space: larger, probs })
    }

    /// Clamps negative entries to zero and rescales to unit mass. Returns the
    /// new distribution, the clamped (negative) mass as a positive number, and
    /// the number of clamped entries.
    pub fn clamp_renormalize(&self) -> Result<(Distribution, f64, usize)> {
        let mut clamped = 0.0;
        let mut events = 0;
        let mut probs: Vec<f64> = self
            .probs
            .iter()
            .map(|&p| {
                if p < 0.0 {
                    clamped -= p;
                    events += 1;
                    0.0
                } else {
                    p
                }
            })
            .collect();
        let mass: f64 = probs.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::DegenerateDistribution("all truncated masses are non-positive".into()));
        }
        for p in probs.iter_mut() {
            *p /= mass;
        }
        Ok((Distribution { space: self.space.clone(), probs }, clamped, events))
    }

    pub(crate) fn add_scaled(&mut self, other: &Distribution, scale: f64) {
        debug_assert_eq!(self.space, other.space);
        for (a, b) in self.probs.iter_mut().zip(&other.probs) {
            *a += scale * b;
        }
    }
}

/// Single-particle port law `|U[input_port, l]|^2`.
pub fn single_particle_law(u: &Interferometer, input_port: usize) -> Vec<f64> {
    (0..u.dim()).map(|l| u.entry(input_port, l).norm_sqr()).collect()
}

/// Law of fully indistinguishable bosons `bosons`.
fn indistinguishable_distribution(u: &Interferometer, input: &InputSpec, bosons: &[usize]) -> Result<Distribution> {
    let space = ConfigSpace::new(u.dim(), bosons.len())?;
    let configs: Vec<Vec<usize>> = space.iter().collect();
    let probs = configs
        .par_iter()
        .map(|occ| {
            let c = OutputConfiguration::new(occ.clone());
            Ok(indistinguishable_term(u, input, bosons, &c.ports())? / c.factorial_product())
        })
        .collect::<Result<Vec<f64>>>()?;
    Distribution::new(space, probs)
}

/// Exact law `p_m(xi)` over all configurations of the lossless device.
pub fn exact_distribution(u: &Interferometer, input: &InputSpec, xi: f64) -> Result<Distribution> {
    check_xi(xi)?;
    input.check_against(u)?;
    let n = input.n_bosons();
    let full_space = ConfigSpace::new(u.dim(), n)?;
    let all: Vec<usize> = (0..n).collect();
    if xi == 1.0 {
        return indistinguishable_distribution(u, input, &all);
    }
    let laws: Vec<Vec<f64>> = input.ports().iter().map(|&p| single_particle_law(u, p)).collect();
    if xi == 0.0 {
        let mut d = Distribution::vacuum(u.dim())?;
        for law in &laws {
            d = d.convolve_single(law)?;
        }
        return Ok(d);
    }
    if n > MIXTURE_CAP {
        return Err(Error::size("partially distinguishable distribution (bosons)", n, MIXTURE_CAP));
    }
    let mut out = Distribution { space: full_space.clone(), probs: vec![0.0; full_space.len()] };
    for mask in 0u64..(1 << n) {
        let indist: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let weight = mixture_weight(xi, indist.len(), n);
        if weight == 0.0 {
            continue;
        }
        let mut d = if indist.is_empty() {
            Distribution::vacuum(u.dim())?
        } else {
            indistinguishable_distribution(u, input, &indist)?
        };
        for b in (0..n).filter(|b| mask >> b & 1 == 0) {
            d = d.convolve_single(&laws[b])?;
        }
        out.add_scaled(&d, weight);
    }
    Ok(out)
}

/// Raw cycle-truncated values `p_m^{(K)}` over all configurations.
pub fn truncated_distribution(u: &Interferometer, input: &InputSpec, policy: &CutoffPolicy) -> Result<Distribution> {
    policy.validate()?;
    input.check_against(u)?;
    let n = input.n_bosons();
    if policy.is_exact_for(n) {
        return exact_distribution(u, input, policy.xi);
    }
    let space = ConfigSpace::new(u.dim(), n)?;
    let pis = weighted_restricted_permutations(n, policy);
    let configs: Vec<Vec<usize>> = space.iter().collect();
    let probs = configs
        .par_iter()
        .map(|occ| {
            let c = OutputConfiguration::new(occ.clone());
            Ok(truncated_term(u, input, &c.ports(), &pis)? / c.factorial_product())
        })
        .collect::<Result<Vec<f64>>>()?;
    Distribution::new(space, probs)
}

/// `A[k][j] = sum_{l in Omega} U[k, l] conj(U[j, l])` over the occupied inputs.
pub fn gram_submatrix(u: &Interferometer, input: &InputSpec, omega: &PortSubset) -> Result<SquareComplexMatrix> {
    input.check_against(u)?;
    omega.check_dim(u.dim())?;
    let ports = input.ports();
    Ok(SquareComplexMatrix::from_fn(ports.len(), |k, j| {
        omega.ports().iter().map(|&l| u.entry(ports[k], l) * u.entry(ports[j], l).conj()).sum()
    }))
}

/// Probability that every boson lands in `omega`: `per` of the
/// `xi`-rescaled Gram matrix.
pub fn subset_probability(
    u: &Interferometer,
    input: &InputSpec,
    omega: &PortSubset,
    xi: f64,
) -> Result<ProbabilityValue> {
    check_xi(xi)?;
    let a = gram_submatrix(u, input, omega)?;
    Ok(ProbabilityValue::exact(permanent_exact(&xi_rescale(&a, xi))?.re))
}

/// Raw cycle-truncated subset probability `P_Omega^{(K)}`.
pub fn truncated_subset_probability(
    u: &Interferometer,
    input: &InputSpec,
    omega: &PortSubset,
    policy: &CutoffPolicy,
) -> Result<ProbabilityValue> {
    let a = gram_submatrix(u, input, omega)?;
    Ok(ProbabilityValue::truncated(cycle_restricted_sum(&a, policy)?.re, policy.k_max, false))
}

/// Subset probability under the clamped and renormalized truncated law, by
/// enumeration.
pub fn renormalized_truncated_subset_probability(
    u: &Interferometer,
    input: &InputSpec,
    omega: &PortSubset,
    policy: &CutoffPolicy,
) -> Result<ProbabilityValue> {
    omega.check_dim(u.dim())?;
    let (d, _, _) = truncated_distribution(u, input, policy)?.clamp_renormalize()?;
    Ok(ProbabilityValue::truncated(d.subset_mass(omega), policy.k_max, true))
}

/// `P_1 - P_1^{(K)}` for "no boson in port 1" (raw truncation).
pub fn delta_p1(u: &Interferometer, input: &InputSpec, xi: f64, policy: &CutoffPolicy) -> Result<f64> {
    if u.dim() < 2 {
        return Err(Error::InvalidSubset("no-click in port 1 needs at least two ports".into()));
    }
    let omega = PortSubset::without_first(u.dim())?;
    let cut = CutoffPolicy { xi, ..*policy };
    Ok(subset_probability(u, input, &omega, xi)?.value - truncated_subset_probability(u, input, &omega, &cut)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvReport {
    /// `(1/2) sum_m |p_m - p_m^{(K)}|`.
    pub distance: f64,
    /// `P_{Omega*} - P^{(K)}_{Omega*}` for `Omega* = {m : p_m > p_m^{(K)}}`.
    pub max_subset_gap: f64,
    /// Ranks (in [`ConfigSpace`] order) of the configurations in `Omega*`.
    pub omega_star: Vec<usize>,
    /// Raw `P_1 - P_1^{(K)}` read off the same enumeration.
    pub delta_p1: f64,
    pub outcomes: usize,
}

/// Exact total-variation distance between the exact law and the raw
/// cycle-truncated series, over the full outcome space.
pub fn tv_distance_exact(u: &Interferometer, input: &InputSpec, xi: f64, policy: &CutoffPolicy) -> Result<TvReport> {
    let cut = CutoffPolicy { xi, ..*policy };
    cut.validate()?;
    let exact = exact_distribution(u, input, xi)?;
    let truncated = truncated_distribution(u, input, &cut)?;
    Ok(tv_between(&exact, &truncated, u.dim()))
}

pub(crate) fn tv_between(p: &Distribution, q: &Distribution, dim: usize) -> TvReport {
    let mut distance = 0.0;
    let mut gap = 0.0;
    let mut omega_star = Vec::new();
    for (r, (a, b)) in p.probs().iter().zip(q.probs()).enumerate() {
        distance += (a - b).abs();
        if a > b {
            gap += a - b;
            omega_star.push(r);
        }
    }
    let delta_p1 = if dim >= 2 {
        let omega = PortSubset::without_first(dim).expect("dim >= 2");
        p.subset_mass(&omega) - q.subset_mass(&omega)
    } else {
        0.0
    };
    TvReport { distance: distance / 2.0, max_subset_gap: gap, omega_star, delta_p1, outcomes: p.space().len() }
}

fn poisson_pmf(k: usize, nu: f64) -> f64 {
    if nu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln = k as f64 * nu.ln() - nu - (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    ln.exp()
}

/// Probability of detector counts `m` when each boson survives with
/// probability `eta^2` and every port adds Poisson(`nu`) dark counts.
pub fn lossy_dark_probability(
    u: &Interferometer,
    input: &InputSpec,
    m: &OutputConfiguration,
    noise: &NoiseParams,
) -> Result<ProbabilityValue> {
    noise.validate_channel()?;
    input.check_against(u)?;
    let n = input.n_bosons();
    if n > CHANNEL_CAP {
        return Err(Error::size("lossy channel (bosons)", n, CHANNEL_CAP));
    }
    if m.dim() != u.dim() {
        return Err(Error::InvalidArgument("configuration has the wrong number of ports".into()));
    }
    let survive = noise.survival();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let kept: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let s = kept.len();
        if s > m.total() {
            continue;
        }
        let w = survive.powi(s as i32) * (1.0 - survive).powi((n - s) as i32);
        if w == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        let mut err = None;
        for_each_sub_configuration(m.occupations(), s, |photons, dark| {
            if err.is_some() {
                return;
            }
            let dark_p: f64 = dark.occupations().iter().map(|&d| poisson_pmf(d, noise.nu)).product();
            if dark_p == 0.0 {
                return;
            }
            let photon_p = if s == 0 {
                Ok(1.0)
            } else {
                input
                    .restrict(&kept)
                    .and_then(|sub| output_probability(u, &sub, photons, noise.xi))
                    .map(|p| p.value)
            };
            match photon_p {
                Ok(p) => acc += p * dark_p,
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        total += w * acc;
    }
    Ok(ProbabilityValue::exact(total))
}

/// No-click probability on `omega` through the lossy, noisy channel:
/// `sum_S eta^{2|S|} (1 - eta^2)^{N-|S|} P_Omega(S) * exp(-nu (M - |Omega|))`.
pub fn noisy_subset_probability(
    u: &Interferometer,
    input: &InputSpec,
    omega: &PortSubset,
    noise: &NoiseParams,
) -> Result<ProbabilityValue> {
    noise.validate_channel()?;
    omega.check_dim(u.dim())?;
    let n = input.n_bosons();
    if n > 20 {
        return Err(Error::size("lossy subset probability (bosons)", n, 20));
    }
    let survive = noise.survival();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let kept: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let w = survive.powi(kept.len() as i32) * (1.0 - survive).powi((n - kept.len()) as i32);
        if w == 0.0 {
            continue;
        }
        let p = if kept.is_empty() { 1.0 } else { subset_probability(u, &input.restrict(&kept)?, omega, noise.xi)?.value };
        total += w * p;
    }
    let outside = (u.dim() - omega.len()) as f64;
    Ok(ProbabilityValue::exact(total * (-noise.nu * outside).exp()))
}

/// Raw cycle-truncated counterpart of [`noisy_subset_probability`]: each
/// survivor set contributes its own truncated `P_Omega^{(K)}`.
pub fn noisy_truncated_subset_probability(
    u: &Interferometer,
    input: &InputSpec,
    omega: &PortSubset,
    noise: &NoiseParams,
    k_max: usize,
) -> Result<ProbabilityValue> {
    noise.validate_channel()?;
    omega.check_dim(u.dim())?;
    let policy = CutoffPolicy::new(k_max, noise.xi)?;
    let n = input.n_bosons();
    if n > 20 {
        return Err(Error::size("lossy subset probability (bosons)", n, 20));
    }
    let survive = noise.survival();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let kept: Vec<usize> = (0..n).filter(|b| mask >> b & 1 == 1).collect();
        let w = survive.powi(kept.len() as i32) * (1.0 - survive).powi((n - kept.len()) as i32);
        if w == 0.0 {
            continue;
        }
        let p = if kept.is_empty() {
            1.0
        } else {
            truncated_subset_probability(u, &input.restrict(&kept)?, omega, &policy)?.value
        };
        total += w * p;
    }
    let outside = (u.dim() - omega.len()) as f64;
    Ok(ProbabilityValue::truncated(total * (-noise.nu * outside).exp(), k_max, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fourier(m: usize) -> Interferometer {
        Interferometer::fourier(m).unwrap()
    }

    #[test]
    fn limits_match_closed_forms() {
        let u = Interferometer::haar_random(4, 2).unwrap();
        let input = InputSpec::first(3, 4).unwrap();
        let m = OutputConfiguration::new(vec![1, 0, 2, 0]);
        let outputs = m.ports();
        let w = transfer(&u, &input, &[0, 1, 2], &outputs);
        // indistinguishable: |per W|^2 / m!
        let p1 = output_probability(&u, &input, &m, 1.0).unwrap().value;
        assert!((p1 - permanent_exact(&w).unwrap().norm_sqr() / 2.0).abs() < 1e-14);
        // distinguishable: per |W|^2 / m!
        let p0 = output_probability(&u, &input, &m, 0.0).unwrap().value;
        assert!((p0 - permanent_exact(&abs2(&w)).unwrap().re / 2.0).abs() < 1e-14);
        // both limits agree with the double sum
        assert!((output_probability_bruteforce(&u, &input, &m, 1.0, None).unwrap() - p1).abs() < 1e-13);
        assert!((output_probability_bruteforce(&u, &input, &m, 0.0, None).unwrap() - p0).abs() < 1e-13);
    }

    #[test]
    fn fourier3_half_overlap_matches_double_sum() {
        let u = fourier(3);
        let input = InputSpec::first(3, 3).unwrap();
        let m = OutputConfiguration::new(vec![1, 1, 1]);
        let p = output_probability(&u, &input, &m, 0.5).unwrap().value;
        let q = output_probability_bruteforce(&u, &input, &m, 0.5, None).unwrap();
        assert!((p - q).abs() < 1e-12);
    }

    #[test]
    fn errors_for_bad_arguments() {
        let u = fourier(3);
        let input = InputSpec::first(2, 3).unwrap();
        let m = OutputConfiguration::new(vec![1, 1, 1]);
        assert!(matches!(
            output_probability(&u, &input, &m, 0.5),
            Err(Error::ConfigurationMismatch { expected: 2, got: 3 })
        ));
        let m2 = OutputConfiguration::new(vec![1, 1, 0]);
        assert!(matches!(output_probability(&u, &input, &m2, 1.5), Err(Error::InvalidNoise(_))));
        assert!(PortSubset::new(vec![], 3).is_err());
        assert!(PortSubset::new(vec![3], 3).is_err());
    }

    #[test]
    fn exact_distribution_matches_pointwise() {
        let u = Interferometer::haar_random(4, 9).unwrap();
        let input = InputSpec::from_one_based(&[1, 3, 4], 4).unwrap();
        for xi in [0.0, 0.3, 1.0] {
            let d = exact_distribution(&u, &input, xi).unwrap();
            assert!((d.total_mass() - 1.0).abs() < 1e-12);
            for occ in d.space().iter() {
                let c = OutputConfiguration::new(occ);
                let p = output_probability(&u, &input, &c, xi).unwrap().value;
                assert!((d.prob(&c) - p).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn truncated_matches_filtered_double_sum() {
        let u = Interferometer::haar_random(4, 11).unwrap();
        let input = InputSpec::first(4, 4).unwrap();
        let policy = CutoffPolicy::new(2, 0.7).unwrap();
        for m in [vec![1, 1, 1, 1], vec![2, 0, 1, 1], vec![0, 0, 4, 0]] {
            let c = OutputConfiguration::new(m);
            let a = truncated_output_probability(&u, &input, &c, &policy).unwrap().value;
            let b = output_probability_bruteforce(&u, &input, &c, 0.7, Some(2)).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn gram_examples() {
        let u = Interferometer::haar_random(5, 3).unwrap();
        let input = InputSpec::first(3, 5).unwrap();
        let a = gram_submatrix(&u, &input, &PortSubset::all(5).unwrap()).unwrap();
        assert!(a.max_abs_diff(&SquareComplexMatrix::identity(3)) < 1e-12);
        let b = gram_submatrix(&u, &input, &PortSubset::parse("2,4", 5).unwrap()).unwrap();
        assert!(b.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn subset_probability_examples() {
        let u = Interferometer::haar_random(5, 4).unwrap();
        let input = InputSpec::first(3, 5).unwrap();
        let all = PortSubset::all(5).unwrap();
        assert!((subset_probability(&u, &input, &all, 0.6).unwrap().value - 1.0).abs() < 1e-12);

        let omega = PortSubset::parse("2..M", 5).unwrap();
        let a = gram_submatrix(&u, &input, &omega).unwrap();
        let classical = subset_probability(&u, &input, &omega, 0.0).unwrap().value;
        assert!((classical - a.diag_product().re).abs() < 1e-14);

        // no click in port 1 equals the summed configurations with m_1 = 0
        let f = fourier(4);
        let input3 = InputSpec::first(3, 4).unwrap();
        let omega = PortSubset::without_first(4).unwrap();
        let direct = subset_probability(&f, &input3, &omega, 0.7).unwrap().value;
        let space = ConfigSpace::new(4, 3).unwrap();
        let mut summed = 0.0;
        for occ in space.iter().filter(|o| o[0] == 0) {
            summed += output_probability(&f, &input3, &OutputConfiguration::new(occ), 0.7).unwrap().value;
        }
        assert!((direct - summed).abs() < 1e-12);
    }

    #[test]
    fn truncated_subset_examples() {
        let u = Interferometer::haar_random(4, 11).unwrap();
        let input = InputSpec::first(4, 4).unwrap();
        let omega = PortSubset::parse("2..4", 4).unwrap();
        let full = truncated_subset_probability(&u, &input, &omega, &CutoffPolicy::new(4, 0.8).unwrap()).unwrap();
        let exact = subset_probability(&u, &input, &omega, 0.8).unwrap();
        assert!((full.value - exact.value).abs() < 1e-12);

        let a = gram_submatrix(&u, &input, &omega).unwrap();
        let k1 = truncated_subset_probability(&u, &input, &omega, &CutoffPolicy::new(1, 0.8).unwrap()).unwrap();
        assert!((k1.value - a.diag_product().re).abs() < 1e-14);

        // xi = 1, K = 2 against an S_4 walk keeping only cycles of length <= 2
        let k2 = truncated_subset_probability(&u, &input, &omega, &CutoffPolicy::new(2, 1.0).unwrap()).unwrap();
        let mut brute = Complex64::new(0.0, 0.0);
        for_each_permutation(4, |p| {
            if max_cycle_len(p) <= 2 {
                brute += (0..4).map(|i| a[(i, p[i])]).product::<Complex64>();
            }
        });
        assert!((k2.value - brute.re).abs() < 1e-12);
    }

    #[test]
    fn delta_p1_examples() {
        let u = fourier(4);
        let input = InputSpec::first(4, 4).unwrap();
        assert!(delta_p1(&u, &input, 0.9, &CutoffPolicy::new(4, 0.9).unwrap()).unwrap().abs() < 1e-12);
        assert!(delta_p1(&u, &input, 0.0, &CutoffPolicy::new(2, 0.0).unwrap()).unwrap().abs() < 1e-15);

        // xi = 1, K = 1 against the enumerated configuration sum
        let d = delta_p1(&u, &input, 1.0, &CutoffPolicy::new(1, 1.0).unwrap()).unwrap();
        let exact = exact_distribution(&u, &input, 1.0).unwrap();
        let classical = exact_distribution(&u, &input, 0.0).unwrap();
        let omega = PortSubset::without_first(4).unwrap();
        assert!((d - (exact.subset_mass(&omega) - classical.subset_mass(&omega))).abs() < 1e-12);
    }

    #[test]
    fn tv_examples() {
        let u = fourier(3);
        let input = InputSpec::first(3, 3).unwrap();
        let none = tv_distance_exact(&u, &input, 0.8, &CutoffPolicy::new(3, 0.8).unwrap()).unwrap();
        assert!(none.distance.abs() < 1e-14);

        let r = tv_distance_exact(&u, &input, 0.8, &CutoffPolicy::new(1, 0.8).unwrap()).unwrap();
        // independent enumeration through the single-configuration paths
        let mut brute = 0.0;
        for occ in ConfigSpace::new(3, 3).unwrap().iter() {
            let c = OutputConfiguration::new(occ);
            let p = output_probability_bruteforce(&u, &input, &c, 0.8, None).unwrap();
            let q = output_probability_bruteforce(&u, &input, &c, 0.8, Some(1)).unwrap();
            brute += (p - q).abs();
        }
        assert!((r.distance - brute / 2.0).abs() < 1e-13);
        assert!(r.distance + 1e-12 >= r.delta_p1.abs());
        assert!((r.max_subset_gap - r.distance).abs() < 1e-13);
    }

    #[test]
    fn lossy_dark_limits() {
        let u = Interferometer::haar_random(3, 5).unwrap();
        let input = InputSpec::first(2, 3).unwrap();
        let m = OutputConfiguration::new(vec![1, 0, 1]);
        let ideal = lossy_dark_probability(&u, &input, &m, &NoiseParams::lossless(0.6)).unwrap().value;
        assert!((ideal - output_probability(&u, &input, &m, 0.6).unwrap().value).abs() < 1e-14);

        let lost = NoiseParams { xi: 0.6, eta: 0.0, nu: 0.0 };
        assert_eq!(lossy_dark_probability(&u, &input, &OutputConfiguration::zeros(3), &lost).unwrap().value, 1.0);
        assert_eq!(lossy_dark_probability(&u, &input, &m, &lost).unwrap().value, 0.0);
    }

    #[test]
    fn noisy_subset_matches_channel_enumeration() {
        let u = Interferometer::haar_random(3, 8).unwrap();
        let input = InputSpec::first(2, 3).unwrap();
        let noise = NoiseParams { xi: 0.7, eta: 0.9, nu: 0.05 };
        let omega = PortSubset::without_first(3).unwrap();
        let analytic = noisy_subset_probability(&u, &input, &omega, &noise).unwrap().value;
        // sum over all configurations with m_1 = 0 up to a generous total count
        let mut summed = 0.0;
        for total in 0..=9 {
            for occ in ConfigSpace::new(3, total).unwrap().iter().filter(|o| o[0] == 0) {
                summed += lossy_dark_probability(&u, &input, &OutputConfiguration::new(occ), &noise).unwrap().value;
            }
        }
        assert!((analytic - summed).abs() < 1e-9);
    }

    #[test]
    fn noisy_truncated_subset_limits() {
        let u = Interferometer::haar_random(4, 8).unwrap();
        let input = InputSpec::first(3, 4).unwrap();
        let omega = PortSubset::without_first(4).unwrap();
        let noise = NoiseParams { xi: 0.7, eta: 0.9, nu: 0.05 };
        let full = noisy_truncated_subset_probability(&u, &input, &omega, &noise, 3).unwrap().value;
        let exact = noisy_subset_probability(&u, &input, &omega, &noise).unwrap().value;
        assert!((full - exact).abs() < 1e-13);
        let lossless = noisy_truncated_subset_probability(&u, &input, &omega, &NoiseParams::lossless(0.7), 1).unwrap();
        let direct = truncated_subset_probability(&u, &input, &omega, &CutoffPolicy::new(1, 0.7).unwrap()).unwrap();
        assert!((lossless.value - direct.value).abs() < 1e-14);
    }

    #[test]
    fn port_subset_parsing() {
        assert_eq!(PortSubset::parse("2..M", 4).unwrap().ports(), &[1, 2, 3]);
        assert_eq!(PortSubset::parse("1,3..4", 5).unwrap().ports(), &[0, 2, 3]);
        assert!(PortSubset::parse("0..2", 4).is_err());
        assert!(PortSubset::parse("3..2", 4).is_err());
        assert!(PortSubset::parse("", 4).is_err());
        assert_eq!(PortSubset::parse("2..M", 4).unwrap().to_string(), "{2,3,4}");
    }
}
