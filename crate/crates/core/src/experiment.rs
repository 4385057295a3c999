//! End-to-end distinguishing experiments and census tables.
//!
//! An [`ExperimentConfig`] fixes the instance, noise, cutoff, witness subset
//! and run parameters. [`run_experiment`] builds the interferometer, computes
//! the analytic no-click probabilities and the `W_1` prediction, samples the
//! exact and truncated models, runs the two-proportion test and writes a JSON
//! summary plus a CSV table.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{sample_budget, w1_bound, BoundReport, NoiseParams};
use crate::combinatorics::{census_row, format_from_ln, CensusRow};
use crate::error::{Error, Result};
use crate::interferometer::{instance_hash, InputSpec, Interferometer, InterferometerKind};
use crate::io::write_atomic;
use crate::permanent::CutoffPolicy;
use crate::probability::{noisy_subset_probability, noisy_truncated_subset_probability, PortSubset};
use crate::sampler::{
    distinguish, estimate_subset_probability, sample_exact, sample_truncated_noisy, DistinguisherResult,
    SampleSet, SubsetEstimate,
};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
/// Largest per-model dataset an experiment will generate.
pub const SAMPLE_CAP: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub dim: usize,
    pub kind: InterferometerKind,
    /// Required for `haar` and `balanced`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n_bosons: usize,
    /// 1-based; defaults to the first `n_bosons` ports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_ports: Option<Vec<usize>>,
    /// Interferometer JSON file, required for `explicit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    pub k_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Records per model; defaults to the planned budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
    pub seed: u64,
    pub summary: PathBuf,
    pub table: PathBuf,
    /// Directory for the two JSON-lines datasets; omitted means not written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datasets: Option<PathBuf>,
}

fn default_sigmas() -> f64 {
    crate::bounds::DEFAULT_TARGET_SIGMAS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub instance: InstanceConfig,
    pub noise: NoiseParams,
    pub cutoff: CutoffConfig,
    /// 1-based witness subset, e.g. `2..M`.
    pub subset: String,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::schema(json_path(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Cross-field validation; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("expected {CONFIG_SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        let inst = &self.instance;
        if inst.dim == 0 {
            return Err(Error::schema("instance.dim", "must be at least 1"));
        }
        if inst.n_bosons == 0 || inst.n_bosons > inst.dim {
            return Err(Error::schema("instance.n_bosons", format!("must lie in 1..={}", inst.dim)));
        }
        match inst.kind {
            InterferometerKind::HaarRandom | InterferometerKind::BalancedPort if inst.seed.is_none() => {
                return Err(Error::schema("instance.seed", format!("required for kind `{}`", inst.kind)));
            }
            InterferometerKind::Explicit if inst.matrix_file.is_none() => {
                return Err(Error::schema("instance.matrix_file", "required for kind `explicit`"));
            }
            _ => {}
        }
        if let Some(ports) = &inst.input_ports {
            if ports.len() != inst.n_bosons {
                return Err(Error::schema("instance.input_ports", "length must equal n_bosons"));
            }
        }
        self.input_spec().map_err(|e| Error::schema("instance.input_ports", e.to_string()))?;
        self.noise.validate().map_err(|e| Error::schema("noise", e.to_string()))?;
        if self.cutoff.k_max == 0 || self.cutoff.k_max > inst.n_bosons {
            return Err(Error::schema("cutoff.k_max", format!("must lie in 1..={}", inst.n_bosons)));
        }
        PortSubset::parse(&self.subset, inst.dim).map_err(|e| Error::schema("subset", e.to_string()))?;
        if !(self.run.sigmas > 0.0 && self.run.sigmas.is_finite()) {
            return Err(Error::schema("run.sigmas", "must be positive"));
        }
        if self.run.samples == Some(0) {
            return Err(Error::schema("run.samples", "must be at least 1"));
        }
        Ok(())
    }

    pub fn input_spec(&self) -> Result<InputSpec> {
        match &self.instance.input_ports {
            Some(p) => InputSpec::from_one_based(p, self.instance.dim),
            None => InputSpec::first(self.instance.n_bosons, self.instance.dim),
        }
    }

    pub fn interferometer(&self) -> Result<Interferometer> {
        let inst = &self.instance;
        let u = match inst.kind {
            InterferometerKind::HaarRandom => Interferometer::haar_random(inst.dim, inst.seed.unwrap_or_default())?,
            InterferometerKind::Fourier => Interferometer::fourier(inst.dim)?,
            InterferometerKind::BalancedPort => {
                Interferometer::balanced_port(&Interferometer::haar_random(inst.dim, inst.seed.unwrap_or_default())?)?
            }
            InterferometerKind::Explicit => {
                let path = inst.matrix_file.as_deref().ok_or_else(|| Error::schema("instance.matrix_file", "missing"))?;
                Interferometer::load(path)?
            }
        };
        if u.dim() != inst.dim {
            return Err(Error::schema("instance.dim", format!("matrix file has dimension {}", u.dim())));
        }
        Ok(u)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn cutoff_policy(&self) -> Result<CutoffPolicy> {
        CutoffPolicy::new(self.cutoff.k_max, self.noise.xi)
    }
}

fn json_path(e: &serde_json::Error) -> String {
    // serde_json reports positions rather than paths; the message carries the field name
    format!("line {} column {}", e.line(), e.column())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub exact: u64,
    pub truncated: u64,
}

impl Seeds {
    pub fn derive(seed: u64) -> Self {
        Seeds { exact: seed, truncated: seed.wrapping_add(1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analytic {
    pub p_omega: f64,
    /// Raw (unrenormalized) truncated value.
    pub p_omega_truncated: f64,
    pub delta_p: f64,
    pub w1: f64,
    pub bound: BoundReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Empirical {
    pub samples: u64,
    pub exact: SubsetEstimate,
    pub truncated: SubsetEstimate,
    pub clamped_mass: f64,
    pub clamp_events: usize,
    pub test: DistinguisherResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub bosim_core: String,
    pub dataset_format: u32,
    pub config_schema: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config_hash: String,
    pub instance_hash: String,
    pub versions: Versions,
    pub seeds: Seeds,
    pub config: ExperimentConfig,
    pub subset: String,
    pub analytic: Analytic,
    pub empirical: Empirical,
    /// Hash of this summary without the timestamp.
    pub content_hash: String,
    pub generated_unix: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub summary: ExperimentSummary,
    pub summary_path: PathBuf,
    pub table_path: PathBuf,
    pub dataset_paths: Vec<PathBuf>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    config.validate()?;
    let u = config.interferometer()?;
    let input = config.input_spec()?;
    let omega = PortSubset::parse(&config.subset, u.dim())?;
    let policy = config.cutoff_policy()?;
    let noise = config.noise;
    let n = input.n_bosons();
    let rho = input.density();

    let p_omega = noisy_subset_probability(&u, &input, &omega, &noise)?.value;
    let p_omega_truncated = noisy_truncated_subset_probability(&u, &input, &omega, &noise, policy.k_max)?.value;
    let w1 = w1_bound(&noise, rho, policy.k_max)?;
    let bound = sample_budget(&noise, rho, policy.k_max, n, config.run.sigmas)?;
    let samples = config.run.samples.unwrap_or(bound.sample_budget);
    if samples > SAMPLE_CAP {
        return Err(Error::SizeLimit {
            what: "samples per model",
            size: usize::try_from(samples).unwrap_or(usize::MAX),
            cap: SAMPLE_CAP as usize,
            hint: Some("set run.samples explicitly".into()),
        });
    }
    let count = samples as usize;

    let seeds = Seeds::derive(config.run.seed);
    let (exact, truncated) = rayon::join(
        || sample_exact(&u, &input, &noise, count, seeds.exact),
        || sample_truncated_noisy(&u, &input, &policy, &noise, count, seeds.truncated),
    );
    let (exact, truncated) = (exact?, truncated?);
    let test = distinguish(&exact, &truncated, &omega, config.run.sigmas)?;

    let mut summary = ExperimentSummary {
        config_hash: config.hash(),
        instance_hash: instance_hash(&u, &input),
        versions: Versions {
            bosim_core: env!("CARGO_PKG_VERSION").into(),
            dataset_format: crate::sampler::DATASET_VERSION,
            config_schema: CONFIG_SCHEMA_VERSION,
        },
        seeds,
        config: config.clone(),
        subset: omega.to_string(),
        analytic: Analytic { p_omega, p_omega_truncated, delta_p: p_omega - p_omega_truncated, w1, bound },
        empirical: Empirical {
            samples,
            exact: estimate_subset_probability(&exact, &omega)?,
            truncated: estimate_subset_probability(&truncated, &omega)?,
            clamped_mass: truncated.clamped_mass,
            clamp_events: truncated.clamp_events,
            test,
        },
        content_hash: String::new(),
        generated_unix: 0,
    };
    summary.content_hash = hex::encode(Sha256::digest(serde_json::to_string(&summary)?.as_bytes()));
    summary.generated_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);

    let mut dataset_paths = Vec::new();
    if let Some(dir) = &config.run.datasets {
        std::fs::create_dir_all(dir)?;
        for (name, data) in [("exact.jsonl", &exact), ("truncated.jsonl", &truncated)] {
            let path = dir.join(name);
            data.write(&path)?;
            dataset_paths.push(path);
        }
    }
    write_atomic(&config.run.table, experiment_table(&summary, &exact, &truncated)?.as_bytes())?;
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    write_atomic(&config.run.summary, text.as_bytes())?;
    Ok(ExperimentRecord {
        summary,
        summary_path: config.run.summary.clone(),
        table_path: config.run.table.clone(),
        dataset_paths,
    })
}

fn experiment_table(s: &ExperimentSummary, exact: &SampleSet, truncated: &SampleSet) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "seed", "samples", "p_analytic", "p_hat", "std_error", "config_hash"])?;
    for (data, p, est) in [
        (exact, s.analytic.p_omega, &s.empirical.exact),
        (truncated, s.analytic.p_omega_truncated, &s.empirical.truncated),
    ] {
        w.write_record([
            data.model.to_string(),
            data.seed.to_string(),
            data.len().to_string(),
            p.to_string(),
            est.p_hat.to_string(),
            est.std_error.to_string(),
            s.config_hash.clone(),
        ])?;
    }
    csv_finish(w)
}

fn csv_finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Census of the low-order permutation fraction for `n` in `n_range`,
/// written as CSV. Values are rendered from logarithms so that they never
/// underflow.
pub fn census_tables(n_range: RangeInclusive<usize>, k: usize, xi: &BigRational, out: &Path) -> Result<Vec<CensusRow>> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(Error::InvalidArgument(format!(
            "N range {}..{} must be non-empty and start at 1 or above",
            n_range.start(),
            n_range.end()
        )));
    }
    let rows = n_range.map(|n| census_row(n, k, xi)).collect::<Result<Vec<_>>>()?;
    write_atomic(out, census_csv(&rows)?.as_bytes())?;
    Ok(rows)
}

pub fn census_csv(rows: &[CensusRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["N", "exact_fraction", "asymptotic_bound", "weighted_ratio", "weighted_bound", "bound_vacuous"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format_from_ln(r.exact_fraction_ln),
            format_from_ln(r.asymptotic_bound_ln),
            r.weighted_ratio_ln.map(format_from_ln).unwrap_or_default(),
            format_from_ln(r.weighted_bound_ln),
            r.bound_vacuous.to_string(),
        ])?;
    }
    csv_finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{fraction_exact, parse_rational};

    fn config(dir: &Path, k: usize, n: usize) -> ExperimentConfig {
        ExperimentConfig {
            schema_version: 1,
            instance: InstanceConfig {
                dim: n,
                kind: InterferometerKind::HaarRandom,
                seed: Some(3),
                n_bosons: n,
                input_ports: None,
                matrix_file: None,
            },
            noise: NoiseParams::new(1.0, 1.0, 0.0).unwrap(),
            cutoff: CutoffConfig { k_max: k },
            subset: "2..M".into(),
            run: RunConfig {
                samples: Some(5_000),
                sigmas: 5.0,
                seed: 11,
                summary: dir.join("summary.json"),
                table: dir.join("table.csv"),
                datasets: None,
            },
        }
    }

    #[test]
    fn full_cutoff_is_inconclusive_and_gap_free() {
        let dir = tempfile::tempdir().unwrap();
        let rec = run_experiment(&config(dir.path(), 4, 4)).unwrap();
        assert!(rec.summary.analytic.delta_p.abs() < 1e-12);
        assert_eq!(rec.summary.empirical.test.verdict, crate::sampler::Verdict::Inconclusive);
        let table = std::fs::read_to_string(&rec.table_path).unwrap();
        assert_eq!(table.lines().count(), 3);
    }

    #[test]
    fn rerun_is_identical_apart_from_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), 1, 4);
        let a = run_experiment(&cfg).unwrap().summary;
        let b = run_experiment(&cfg).unwrap().summary;
        assert_eq!(a.content_hash, b.content_hash);
        assert_eq!(ExperimentSummary { generated_unix: 0, ..a }, ExperimentSummary { generated_unix: 0, ..b });
    }

    #[test]
    fn validation_names_fields() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), 5, 4);
        match cfg.validate() {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "cutoff.k_max"),
            other => panic!("{other:?}"),
        }
        cfg.cutoff.k_max = 1;
        cfg.subset = "0..2".into();
        assert!(matches!(cfg.validate(), Err(Error::Schema { path, .. }) if path == "subset"));
        cfg.subset = "2..M".into();
        cfg.instance.seed = None;
        assert!(matches!(cfg.validate(), Err(Error::Schema { path, .. }) if path == "instance.seed"));

        let text = serde_json::to_string(&config(dir.path(), 1, 4)).unwrap().replace("\"subset\"", "\"subsett\"");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Schema { .. })));
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), 1, 4);
        cfg.noise.eta = 1.5;
        assert!(run_experiment(&cfg).is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn census_spot_checks() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("census.csv");
        let rows = census_tables(5..=12, 2, &parse_rational("0.75").unwrap(), &out).unwrap();
        assert_eq!(rows.len(), 8);
        for r in [&rows[0], &rows[3], &rows[7]] {
            let exact = fraction_exact(r.n, 2).unwrap();
            assert!((r.exact_fraction_ln - exact.ln).abs() < 1e-12);
        }
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("N,exact_fraction,asymptotic_bound,weighted_ratio,weighted_bound,bound_vacuous\n"));
        assert_eq!(text.lines().count(), 9);
        assert!(census_tables(0..=3, 1, &parse_rational("1").unwrap(), &out).is_err());
    }
}
