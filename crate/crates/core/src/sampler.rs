//! Synthetic datasets and the no-click distinguishing test.
//!
//! Every sampler enumerates the relevant law once and draws records by
//! inverse CDF over configurations in rank order. Record `i` uses ChaCha
//! sub-stream `i` of the dataset seed, so a dataset does not depend on how
//! records are scheduled across threads.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution as _, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::NoiseParams;
use crate::config_space::{ConfigSpace, OutputConfiguration};
use crate::error::{Error, Result};
use crate::interferometer::{instance_hash, InputSpec, Interferometer};
use crate::io::write_atomic;
use crate::permanent::CutoffPolicy;
use crate::probability::{
    exact_distribution, single_particle_law, truncated_distribution, Distribution, PortSubset, CHANNEL_CAP,
};
use crate::rng::substream;

/// Cap on the number of boson subsets the K-interfering sampler enumerates.
pub const SUBSET_LAW_CAP: usize = 4096;

pub const DATASET_FORMAT: &str = "bosim-samples";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SampleModel {
    Exact { xi: f64, eta: f64, nu: f64 },
    /// Clamped and renormalized cycle-truncated law, optionally behind the
    /// same loss and dark-count channel as `Exact`.
    TruncatedCycles {
        k: usize,
        xi: f64,
        #[serde(default = "unit")]
        eta: f64,
        #[serde(default)]
        nu: f64,
        renormalized: bool,
    },
    /// `k` randomly chosen bosons interfere, the rest are routed one by one.
    KInterfering { k: usize, xi: f64 },
}

fn unit() -> f64 {
    1.0
}

impl SampleModel {
    /// True when every record must contain exactly `N` bosons.
    pub fn conserves_bosons(&self) -> bool {
        match *self {
            SampleModel::Exact { eta, nu, .. } | SampleModel::TruncatedCycles { eta, nu, .. } => {
                eta == 1.0 && nu == 0.0
            }
            SampleModel::KInterfering { .. } => true,
        }
    }
}

impl fmt::Display for SampleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleModel::Exact { xi, eta, nu } => write!(f, "exact(xi={xi}, eta={eta}, nu={nu})"),
            SampleModel::TruncatedCycles { k, xi, .. } => write!(f, "truncated(K={k}, xi={xi})"),
            SampleModel::KInterfering { k, xi } => write!(f, "k-interfering(K={k}, xi={xi})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub model: SampleModel,
    pub instance_hash: String,
    pub dim: usize,
    /// 0-based occupied input ports.
    pub input_ports: Vec<usize>,
    pub seed: u64,
    pub records: Vec<OutputConfiguration>,
    /// Negative truncated mass removed before renormalizing (0 for other models).
    pub clamped_mass: f64,
    pub clamp_events: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetHeader {
    format: String,
    version: u32,
    model: SampleModel,
    instance_hash: String,
    dim: usize,
    n_bosons: usize,
    /// 1-based.
    input_ports: Vec<usize>,
    seed: u64,
    count: usize,
    clamped_mass: f64,
    clamp_events: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    m: Vec<usize>,
}

impl SampleSet {
    pub fn new(
        model: SampleModel,
        instance_hash: String,
        dim: usize,
        input_ports: Vec<usize>,
        seed: u64,
        records: Vec<OutputConfiguration>,
    ) -> Result<Self> {
        let set = SampleSet { model, instance_hash, dim, input_ports, seed, records, clamped_mass: 0.0, clamp_events: 0 };
        set.validate()?;
        Ok(set)
    }

    pub fn n_bosons(&self) -> usize {
        self.input_ports.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_bosons();
        for (i, r) in self.records.iter().enumerate() {
            if r.dim() != self.dim {
                return Err(Error::schema(
                    format!("records[{i}].m"),
                    format!("expected {} ports, found {}", self.dim, r.dim()),
                ));
            }
            if self.model.conserves_bosons() && r.total() != n {
                return Err(Error::schema(
                    format!("records[{i}].m"),
                    format!("lossless model requires {n} bosons, found {}", r.total()),
                ));
            }
        }
        Ok(())
    }

    /// JSON-lines text: one header line, then `{"m": [...]}` per record.
    pub fn to_jsonl(&self) -> Result<String> {
        let header = DatasetHeader {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            model: self.model,
            instance_hash: self.instance_hash.clone(),
            dim: self.dim,
            n_bosons: self.n_bosons(),
            input_ports: self.input_ports.iter().map(|p| p + 1).collect(),
            seed: self.seed,
            count: self.records.len(),
            clamped_mass: self.clamped_mass,
            clamp_events: self.clamp_events,
        };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(&Record { m: r.occupations().to_vec() })?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let first = lines.next().ok_or_else(|| Error::schema("line 1", "missing dataset header"))??;
        let header: DatasetHeader =
            serde_json::from_str(&first).map_err(|e| Error::schema("line 1", e.to_string()))?;
        if header.format != DATASET_FORMAT {
            return Err(Error::schema("line 1.format", format!("expected `{DATASET_FORMAT}`")));
        }
        if header.version != DATASET_VERSION {
            return Err(Error::schema("line 1.version", format!("unsupported version {}", header.version)));
        }
        if header.input_ports.iter().any(|&p| p == 0 || p > header.dim) || header.input_ports.len() != header.n_bosons
        {
            return Err(Error::schema("line 1.input_ports", "inconsistent with dim / n_bosons"));
        }
        let mut records = Vec::with_capacity(header.count);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: Record =
                serde_json::from_str(&line).map_err(|e| Error::schema(format!("line {}", i + 2), e.to_string()))?;
            records.push(OutputConfiguration::new(r.m));
        }
        if records.len() != header.count {
            return Err(Error::schema(
                "line 1.count",
                format!("header announces {} records, file has {}", header.count, records.len()),
            ));
        }
        let set = SampleSet {
            model: header.model,
            instance_hash: header.instance_hash,
            dim: header.dim,
            input_ports: header.input_ports.iter().map(|p| p - 1).collect(),
            seed: header.seed,
            records,
            clamped_mass: header.clamped_mass,
            clamp_events: header.clamp_events,
        };
        set.validate()?;
        Ok(set)
    }
}

/// Inverse-CDF sampler over a finite index set.
#[derive(Debug, Clone)]
struct InverseCdf {
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn new(probs: &[f64]) -> Result<Self> {
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(probs.len());
        for &p in probs {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::DegenerateDistribution(format!("invalid probability {p}")));
            }
            acc += p;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::DegenerateDistribution("zero total mass".into()));
        }
        Ok(InverseCdf { cdf })
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> usize {
        let total = *self.cdf.last().expect("non-empty");
        let x = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= x).min(self.cdf.len() - 1)
    }
}

struct ConfigSampler {
    space: ConfigSpace,
    cdf: InverseCdf,
}

impl ConfigSampler {
    fn new(d: &Distribution) -> Result<Self> {
        Ok(ConfigSampler { space: d.space().clone(), cdf: InverseCdf::new(d.probs())? })
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> OutputConfiguration {
        self.space.unrank(self.cdf.draw(rng))
    }
}

fn draw_survivors(rng: &mut ChaCha20Rng, n: usize, survival: f64) -> u32 {
    if survival == 1.0 {
        return (1u32 << n) - 1;
    }
    (0..n).filter(|_| rng.random::<f64>() < survival).fold(0, |m, b| m | 1 << b)
}

fn mask_members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|b| mask >> b & 1 == 1).collect()
}

struct ChannelDraw {
    records: Vec<OutputConfiguration>,
    clamped_mass: f64,
    clamp_events: usize,
}

/// Shared loss and dark-count channel. `law(kept)` returns the law of the
/// surviving bosons (positions in the input spec) together with any clamped
/// mass and clamp events incurred when building it.
fn sample_channel<F>(
    u: &Interferometer,
    input: &InputSpec,
    eta: f64,
    nu: f64,
    count: usize,
    seed: u64,
    law: F,
) -> Result<ChannelDraw>
where
    F: Fn(&[usize]) -> Result<(Distribution, f64, usize)> + Sync,
{
    input.check_against(u)?;
    let n = input.n_bosons();
    ConfigSpace::new(u.dim(), n)?;
    let survival = eta * eta;
    if survival < 1.0 && n > CHANNEL_CAP {
        return Err(Error::size("lossy sampler (bosons)", n, CHANNEL_CAP));
    }

    // survivor sets first, so that only the laws actually needed are built
    let masks: Vec<u32> =
        (0..count).into_par_iter().map(|i| draw_survivors(&mut substream(seed, i as u64), n, survival)).collect();
    let mut frequency: HashMap<u32, usize> = HashMap::new();
    for &m in &masks {
        *frequency.entry(m).or_default() += 1;
    }
    let distinct: BTreeSet<u32> = frequency.keys().copied().collect();
    let laws: HashMap<u32, (ConfigSampler, f64, usize)> = distinct
        .into_par_iter()
        .map(|mask| {
            let kept = mask_members(mask, n);
            let (d, clamped, events) =
                if kept.is_empty() { (Distribution::vacuum(u.dim())?, 0.0, 0) } else { law(&kept)? };
            Ok((mask, (ConfigSampler::new(&d)?, clamped, events)))
        })
        .collect::<Result<_>>()?;
    let dark = if nu > 0.0 { Some(Poisson::new(nu).map_err(|e| Error::InvalidNoise(e.to_string()))?) } else { None };

    let records = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let mask = draw_survivors(&mut rng, n, survival);
            let mut m = laws[&mask].0.draw(&mut rng);
            if let Some(poisson) = &dark {
                for l in 0..u.dim() {
                    for _ in 0..poisson.sample(&mut rng) as usize {
                        m.add(l);
                    }
                }
            }
            m
        })
        .collect();
    let mut clamped_mass = 0.0;
    let mut clamp_events = 0;
    for (mask, (_, clamped, events)) in &laws {
        clamped_mass += clamped * frequency[mask] as f64 / count as f64;
        clamp_events += events;
    }
    Ok(ChannelDraw { records, clamped_mass, clamp_events })
}

/// Samples of the exact law with boson loss (survival `eta^2`) and Poisson
/// dark counts `nu` per port.
pub fn sample_exact(
    u: &Interferometer,
    input: &InputSpec,
    noise: &NoiseParams,
    count: usize,
    seed: u64,
) -> Result<SampleSet> {
    noise.validate_channel()?;
    let draw = sample_channel(u, input, noise.eta, noise.nu, count, seed, |kept| {
        Ok((exact_distribution(u, &input.restrict(kept)?, noise.xi)?, 0.0, 0))
    })?;
    Ok(SampleSet {
        model: SampleModel::Exact { xi: noise.xi, eta: noise.eta, nu: noise.nu },
        instance_hash: instance_hash(u, input),
        dim: u.dim(),
        input_ports: input.ports().to_vec(),
        seed,
        records: draw.records,
        clamped_mass: 0.0,
        clamp_events: 0,
    })
}

/// Samples of the cycle-truncated law after clamping negative entries and
/// renormalizing. The clamped mass is recorded on the dataset.
pub fn sample_truncated(
    u: &Interferometer,
    input: &InputSpec,
    policy: &CutoffPolicy,
    count: usize,
    seed: u64,
) -> Result<SampleSet> {
    sample_truncated_noisy(u, input, policy, &NoiseParams::lossless(policy.xi), count, seed)
}

/// [`sample_truncated`] passed through the same loss and dark-count channel
/// as [`sample_exact`]: the survivors follow the truncated law of their own
/// subset. `noise.xi` must equal `policy.xi`. The reported clamped mass is
/// averaged over the survivor sets actually drawn.
pub fn sample_truncated_noisy(
    u: &Interferometer,
    input: &InputSpec,
    policy: &CutoffPolicy,
    noise: &NoiseParams,
    count: usize,
    seed: u64,
) -> Result<SampleSet> {
    policy.validate()?;
    noise.validate_channel()?;
    if noise.xi != policy.xi {
        return Err(Error::InvalidArgument(format!(
            "cutoff overlap {} differs from channel overlap {}",
            policy.xi, noise.xi
        )));
    }
    let draw = sample_channel(u, input, noise.eta, noise.nu, count, seed, |kept| {
        truncated_distribution(u, &input.restrict(kept)?, policy)?.clamp_renormalize()
    })?;
    Ok(SampleSet {
        model: SampleModel::TruncatedCycles {
            k: policy.k_max,
            xi: policy.xi,
            eta: noise.eta,
            nu: noise.nu,
            renormalized: true,
        },
        instance_hash: instance_hash(u, input),
        dim: u.dim(),
        input_ports: input.ports().to_vec(),
        seed,
        records: draw.records,
        clamped_mass: draw.clamped_mass,
        clamp_events: draw.clamp_events,
    })
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for b in start..n {
            if n - b < k - cur.len() {
                break;
            }
            cur.push(b);
            go(b + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn interfering_subsets(input: &InputSpec, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = input.n_bosons();
    if k > n {
        return Err(Error::InvalidArgument(format!("K = {k} exceeds the number of bosons {n}")));
    }
    let count = crate::combinatorics::binomial(n, k);
    if count > num_bigint::BigUint::from(SUBSET_LAW_CAP) {
        return Err(Error::size("interfering subsets", usize::try_from(&count).unwrap_or(usize::MAX), SUBSET_LAW_CAP));
    }
    Ok(combinations(n, k))
}

fn subset_law(u: &Interferometer, input: &InputSpec, subset: &[usize], xi: f64) -> Result<Distribution> {
    if subset.is_empty() {
        Distribution::vacuum(u.dim())
    } else {
        exact_distribution(u, &input.restrict(subset)?, xi)
    }
}

/// Samples where a uniformly random `k`-subset of bosons interferes with
/// overlap `xi` and the remaining bosons pass the device one at a time.
pub fn sample_k_interfering(
    u: &Interferometer,
    input: &InputSpec,
    k: usize,
    xi: f64,
    count: usize,
    seed: u64,
) -> Result<SampleSet> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::InvalidNoise(format!("xi = {xi} outside [0, 1]")));
    }
    input.check_against(u)?;
    let n = input.n_bosons();
    let subsets = interfering_subsets(input, k)?;
    let samplers: Vec<ConfigSampler> = subsets
        .par_iter()
        .map(|s| ConfigSampler::new(&subset_law(u, input, s, xi)?))
        .collect::<Result<_>>()?;
    let lone: Vec<InverseCdf> =
        input.ports().iter().map(|&p| InverseCdf::new(&single_particle_law(u, p))).collect::<Result<_>>()?;

    let records = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let which = rng.random_range(0..subsets.len());
            let mut m = samplers[which].draw(&mut rng);
            let chosen = &subsets[which];
            for b in (0..n).filter(|b| !chosen.contains(b)) {
                m.add(lone[b].draw(&mut rng));
            }
            m
        })
        .collect();
    Ok(SampleSet {
        model: SampleModel::KInterfering { k, xi },
        instance_hash: instance_hash(u, input),
        dim: u.dim(),
        input_ports: input.ports().to_vec(),
        seed,
        records,
        clamped_mass: 0.0,
        clamp_events: 0,
    })
}

/// The law sampled by [`sample_k_interfering`], by enumeration.
pub fn k_interfering_distribution(u: &Interferometer, input: &InputSpec, k: usize, xi: f64) -> Result<Distribution> {
    input.check_against(u)?;
    let n = input.n_bosons();
    let subsets = interfering_subsets(input, k)?;
    let space = ConfigSpace::new(u.dim(), n)?;
    let mut probs = vec![0.0; space.len()];
    let weight = 1.0 / subsets.len() as f64;
    for s in &subsets {
        let mut d = subset_law(u, input, s, xi)?;
        for b in (0..n).filter(|b| !s.contains(b)) {
            d = d.convolve_single(&single_particle_law(u, input.ports()[b]))?;
        }
        for (p, q) in probs.iter_mut().zip(d.probs()) {
            *p += weight * q;
        }
    }
    Distribution::new(space, probs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetEstimate {
    pub p_hat: f64,
    pub std_error: f64,
    pub hits: usize,
    pub trials: usize,
}

fn count_hits(data: &SampleSet, omega: &PortSubset) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if omega.dim() != data.dim {
        return Err(Error::InvalidSubset(format!("subset is over {} ports, data has {}", omega.dim(), data.dim)));
    }
    let inside = omega.mask();
    Ok(data.records.iter().filter(|r| r.supported_on(&inside)).count())
}

/// Fraction of records with no counts outside `omega`, with binomial
/// standard error.
pub fn estimate_subset_probability(data: &SampleSet, omega: &PortSubset) -> Result<SubsetEstimate> {
    let hits = count_hits(data, omega)?;
    let trials = data.len();
    let p_hat = hits as f64 / trials as f64;
    Ok(SubsetEstimate { p_hat, std_error: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(), hits, trials })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Separated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinguisherResult {
    /// No-click estimates for datasets a and b.
    pub statistic: [f64; 2],
    pub std_errors: [f64; 2],
    pub z_score: f64,
    pub verdict: Verdict,
    pub threshold_sigmas: f64,
}

/// Pooled two-proportion z-test on the no-click frequency over `omega`.
pub fn distinguish(
    a: &SampleSet,
    b: &SampleSet,
    omega: &PortSubset,
    threshold_sigmas: f64,
) -> Result<DistinguisherResult> {
    if !(threshold_sigmas > 0.0 && threshold_sigmas.is_finite()) {
        return Err(Error::InvalidArgument(format!("threshold {threshold_sigmas} must be positive")));
    }
    if a.dim != b.dim {
        return Err(Error::InvalidArgument(format!("datasets have {} and {} ports", a.dim, b.dim)));
    }
    if a.instance_hash != b.instance_hash {
        return Err(Error::InvalidArgument("datasets come from different instances".into()));
    }
    let ea = estimate_subset_probability(a, omega)?;
    let eb = estimate_subset_probability(b, omega)?;
    let (na, nb) = (ea.trials as f64, eb.trials as f64);
    let pooled = (ea.hits + eb.hits) as f64 / (na + nb);
    let se = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    // se = 0 only when both datasets are all hits or all misses
    let z_score = if se > 0.0 { (ea.p_hat - eb.p_hat) / se } else { 0.0 };
    let verdict = if z_score.abs() >= threshold_sigmas { Verdict::Separated } else { Verdict::Inconclusive };
    Ok(DistinguisherResult {
        statistic: [ea.p_hat, eb.p_hat],
        std_errors: [ea.std_error, eb.std_error],
        z_score,
        verdict,
        threshold_sigmas,
    })
}
