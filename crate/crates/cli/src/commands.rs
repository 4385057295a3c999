use std::path::Path;

use bosim_core::bounds::{sample_budget, NoiseParams};
use bosim_core::combinatorics::parse_rational;
use bosim_core::config_space::OutputConfiguration;
use bosim_core::experiment::{census_tables, run_experiment, ExperimentConfig};
use bosim_core::interferometer::{instance_hash, InputSpec, Interferometer};
use bosim_core::io::write_atomic;
use bosim_core::permanent::{glynn_estimate, xi_rescale, CutoffPolicy};
use bosim_core::probability::{
    gram_submatrix, noisy_subset_probability, noisy_truncated_subset_probability, output_probability,
    tv_distance_exact, truncated_output_probability, PortSubset, ProbabilityKind, ProbabilityValue,
};
use bosim_core::sampler::{distinguish, sample_exact, sample_k_interfering, sample_truncated_noisy, SampleSet};
use bosim_core::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::args::*;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::GenUnitary(a) => gen_unitary(a),
        Command::Prob(a) => prob(a),
        Command::Noclick(a) => noclick(a),
        Command::Tvd(a) => tvd(a),
        Command::Bound(a) => bound(a),
        Command::Census(a) => census(a),
        Command::Sample(a) => sample(a),
        Command::Distinguish(a) => distinguish_cmd(a),
        Command::Run(a) => run_config(a),
    }
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build_unitary(kind: KindArg, dim: usize, seed: Option<u64>) -> Result<Interferometer> {
    let need_seed = || {
        seed.ok_or_else(|| Error::InvalidArgument("a seed is required for random interferometers".into()))
    };
    match kind {
        KindArg::Haar => Interferometer::haar_random(dim, need_seed()?),
        KindArg::Fourier => Interferometer::fourier(dim),
        KindArg::Balanced => Interferometer::balanced_port(&Interferometer::haar_random(dim, need_seed()?)?),
    }
}

fn instance(a: &InstanceArgs) -> Result<(Interferometer, InputSpec)> {
    let u = match (&a.unitary, a.kind, a.dim) {
        (Some(path), _, _) => Interferometer::load(path)?,
        (None, Some(kind), Some(dim)) => build_unitary(kind, dim, a.unitary_seed)?,
        _ => return Err(Error::InvalidArgument("give --unitary FILE or --kind with --dim".into())),
    };
    let input = match (&a.inputs, a.n) {
        (Some(ports), _) => InputSpec::from_one_based(ports, u.dim())?,
        (None, Some(n)) => InputSpec::first(n, u.dim())?,
        (None, None) => return Err(Error::InvalidArgument("give --inputs or --n".into())),
    };
    Ok((u, input))
}

fn gen_unitary(a: GenUnitaryArgs) -> Result<()> {
    let u = build_unitary(a.kind, a.dim, a.seed)?;
    write_atomic(&a.out, u.to_json()?.as_bytes())
}

#[derive(Serialize)]
struct ValueRecord<P: Serialize> {
    instance_hash: String,
    parameters: P,
    value: f64,
    kind: ProbabilityKind,
}

fn record<P: Serialize>(u: &Interferometer, input: &InputSpec, parameters: P, v: ProbabilityValue) -> ValueRecord<P> {
    ValueRecord { instance_hash: instance_hash(u, input), parameters, value: v.value, kind: v.kind }
}

fn prob(a: ProbArgs) -> Result<()> {
    let (u, input) = instance(&a.instance)?;
    let m = OutputConfiguration::new(a.config.clone());
    let v = match a.k {
        Some(k) => truncated_output_probability(&u, &input, &m, &CutoffPolicy::new(k, a.xi)?)?,
        None => output_probability(&u, &input, &m, a.xi)?,
    };
    let params = json!({ "config": a.config, "inputs": one_based(&input), "xi": a.xi, "k": a.k });
    emit(&record(&u, &input, params, v), a.out.as_deref())
}

fn one_based(input: &InputSpec) -> Vec<usize> {
    input.ports().iter().map(|p| p + 1).collect()
}

fn noclick(a: NoclickArgs) -> Result<()> {
    let (u, input) = instance(&a.instance)?;
    let omega = PortSubset::parse(&a.omega, u.dim())?;
    let noise = NoiseParams { xi: a.xi, eta: a.eta, nu: a.nu };
    noise.validate_channel()?;
    let params = json!({
        "omega": omega.to_string(), "inputs": one_based(&input),
        "xi": a.xi, "eta": a.eta, "nu": a.nu, "method": format!("{:?}", a.method).to_lowercase(),
        "k": a.k, "trials": (a.method == NoclickMethod::Estimate).then_some(a.trials), "seed": a.seed,
    });
    let v = match a.method {
        NoclickMethod::Exact => noisy_subset_probability(&u, &input, &omega, &noise)?,
        NoclickMethod::Truncated => {
            let k = a.k.ok_or_else(|| Error::InvalidArgument("--k is required for the truncated method".into()))?;
            noisy_truncated_subset_probability(&u, &input, &omega, &noise, k)?
        }
        NoclickMethod::Estimate => {
            let seed = a.seed.ok_or_else(|| Error::InvalidArgument("--seed is required for estimates".into()))?;
            if a.eta != 1.0 || a.nu != 0.0 {
                return Err(Error::InvalidArgument("the estimate method supports eta = 1, nu = 0 only".into()));
            }
            let gram = xi_rescale(&gram_submatrix(&u, &input, &omega)?, a.xi);
            let est = glynn_estimate(&gram, a.trials, seed)?;
            ProbabilityValue { value: est.estimate.re, kind: ProbabilityKind::MonteCarlo { std_error: est.std_error } }
        }
    };
    emit(&record(&u, &input, params, v), a.out.as_deref())
}

fn tvd(a: TvdArgs) -> Result<()> {
    let (u, input) = instance(&a.instance)?;
    let report = tv_distance_exact(&u, &input, a.xi, &CutoffPolicy::new(a.k, a.xi)?)?;
    let out = json!({
        "instance_hash": instance_hash(&u, &input),
        "parameters": { "inputs": one_based(&input), "xi": a.xi, "k": a.k },
        "distance": report.distance,
        "max_subset_gap": report.max_subset_gap,
        "omega_star_size": report.omega_star.len(),
        "delta_p1": report.delta_p1,
        "outcomes": report.outcomes,
    });
    emit(&out, a.out.as_deref())
}

fn bound(a: BoundArgs) -> Result<()> {
    let noise = NoiseParams::new(a.xi, a.eta, a.nu)?;
    let report = sample_budget(&noise, a.rho, a.k, a.n, a.sigmas)?;
    let out = json!({
        "parameters": { "xi": a.xi, "eta": a.eta, "nu": a.nu, "rho": a.rho, "k": a.k, "n": a.n, "sigmas": a.sigmas },
        "report": report,
    });
    emit(&out, a.out.as_deref())
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let bad = || Error::InvalidArgument(format!("cannot parse range `{s}` (expected a..b)"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    Ok(a..=b)
}

fn census(a: CensusArgs) -> Result<()> {
    let range = parse_range(&a.n_range)?;
    let xi = parse_rational(&a.xi)?;
    census_tables(range, a.k, &xi, &a.out)?;
    Ok(())
}

fn sample(a: SampleArgs) -> Result<()> {
    let (u, input) = instance(&a.instance)?;
    let noise = NoiseParams { xi: a.xi, eta: a.eta, nu: a.nu };
    let need_k = || a.k.ok_or_else(|| Error::InvalidArgument("--k is required for this model".into()));
    let data = match a.model {
        ModelArg::Exact => sample_exact(&u, &input, &noise, a.count, a.seed)?,
        ModelArg::Trunc => {
            sample_truncated_noisy(&u, &input, &CutoffPolicy::new(need_k()?, a.xi)?, &noise, a.count, a.seed)?
        }
        ModelArg::Kinterf => {
            if a.eta != 1.0 || a.nu != 0.0 {
                return Err(Error::InvalidArgument("the kinterf model is lossless; drop --eta/--nu".into()));
            }
            sample_k_interfering(&u, &input, need_k()?, a.xi, a.count, a.seed)?
        }
    };
    data.write(&a.out)?;
    if data.clamp_events > 0 {
        eprintln!("note: clamped negative truncated mass {:.3e} ({} entries)", data.clamped_mass, data.clamp_events);
    }
    Ok(())
}

fn distinguish_cmd(a: DistinguishArgs) -> Result<()> {
    let da = SampleSet::read(&a.a)?;
    let db = SampleSet::read(&a.b)?;
    let omega = PortSubset::parse(&a.omega, da.dim)?;
    let result = distinguish(&da, &db, &omega, a.sigmas)?;
    let out = json!({
        "instance_hash": da.instance_hash,
        "omega": omega.to_string(),
        "models": [da.model, db.model],
        "seeds": [da.seed, db.seed],
        "samples": [da.len(), db.len()],
        "result": result,
    });
    emit(&out, a.out.as_deref())
}

fn run_config(a: RunArgs) -> Result<()> {
    let config = ExperimentConfig::load(&a.config)?;
    let record = run_experiment(&config)?;
    let s = &record.summary;
    println!(
        "verdict {:?} (z = {:.2}); summary {}, table {}",
        s.empirical.test.verdict,
        s.empirical.test.z_score,
        record.summary_path.display(),
        record.table_path.display()
    );
    Ok(())
}
