//! Subcommand implementations.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use pom_core::analysis::CorrelationAccumulator;
use pom_core::constrained::{
    batch_sizes, combine_batches, full_batch, ConstrainedEnsemble, DEFAULT_BATCHES, LOG_CIRCLE_MASS,
};
use pom_core::sampler::{run_chain, AcceptanceStats};
use pom_core::spinwave::{free_energy_f, free_energy_fn, QuadratureOptions};
use pom_core::symmetry::{ground_state, FlipSet};
use pom_core::{Angle, Couplings, SamplerSpec, SpinConfig, TorusLattice};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::args::{default_delta, Cli, Command, Fixture, OracleArgs, SimulateArgs, SpinwaveArgs, VerifyArgs};
use crate::io::{create_new, csv_writer, ensure_absent, write_config, write_records, RecordRow};
use crate::{analyze, checks, CliError, ExitCode};

pub fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Spinwave(a) => spinwave(&a),
        Command::Verify(a) => verify(&a),
        Command::Oracle(a) => oracle(&a),
        Command::Analyze(a) => analyze::analyze(&a),
    }
}

pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?)
}

/// Initial configuration of chain `chain`.
fn initial_config(
    a: &SimulateArgs,
    lattice: &TorusLattice,
    couplings: &Couplings,
    chain: u64,
) -> Result<SpinConfig, CliError> {
    let sites = lattice.site_count();
    Ok(match a.init.as_str() {
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            // disjoint from the sampler streams, which start at 0
            rng.set_stream((1 << 63) | chain);
            SpinConfig::from_angles((0..sites).map(|_| Angle::from_raw(rng.random())).collect())
        }
        "aligned-x" => SpinConfig::uniform(sites, Angle::ZERO),
        "aligned-z" => SpinConfig::uniform(sites, Angle::QUARTER),
        "ground" => {
            let flips = match &a.flips {
                Some(p) => crate::io::read_flips(p, lattice)?,
                None => FlipSet::new(),
            };
            ground_state(lattice, couplings, [a.base_angle.cos(), a.base_angle.sin()], &flips)?
        }
        path => crate::io::read_config(Path::new(path), lattice)?,
    })
}

struct ChainOutput {
    rows: Vec<RecordRow>,
    stats: AcceptanceStats,
    width: f64,
    correlations: Option<CorrelationAccumulator>,
    last: SpinConfig,
}

fn run_one(
    a: &SimulateArgs,
    lattice: &TorusLattice,
    couplings: &Couplings,
    spec: &SamplerSpec,
    chain: u64,
) -> Result<ChainOutput, CliError> {
    let init = initial_config(a, lattice, couplings, chain)?;
    let mut run = run_chain(lattice, couplings, spec, init, chain)?;
    let mut rows = Vec::with_capacity(run.record_count() as usize);
    let mut corr = a.correlations.then(|| CorrelationAccumulator::new(lattice));
    while let Some((rec, cfg)) = run.next_measurement() {
        if let Some(c) = corr.as_mut() {
            c.add(cfg);
        }
        rows.push(RecordRow::new(chain, &rec));
    }
    let state = run.state();
    Ok(ChainOutput {
        rows,
        stats: state.stats,
        width: state.proposal_width(),
        correlations: corr,
        last: state.config.clone(),
    })
}

pub fn simulate(a: &SimulateArgs) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let lattice = TorusLattice::new(a.n)?;
    let couplings = Couplings::new(a.j1, a.j2, a.beta)?;
    let spec = SamplerSpec {
        kind: a.kind.into(),
        proposal_width: a.proposal_width,
        flip_fraction: a.flip_fraction,
        sweeps: a.sweeps,
        thermalization: a.thermalization,
        measure_every: a.measure_every,
        seed: a.seed,
        tune_width: a.tune_width,
    };
    spec.validate()?;
    if a.chains == 0 {
        return Err(CliError::new("at least one chain is required"));
    }
    let records = a.out.join("records.csv");
    let manifest = a.out.join("manifest.json");
    let correlation = a.out.join("correlation.csv");
    let finals = a.out.join("final");
    ensure_absent(&[&records, &manifest, &correlation, &finals])?;
    // fail on a bad initial state before spending time on chains
    initial_config(a, &lattice, &couplings, 0)?;

    let outputs: Vec<ChainOutput> = pool(a.common.threads)?.install(|| {
        (0..a.chains)
            .into_par_iter()
            .map(|chain| run_one(a, &lattice, &couplings, &spec, chain))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let rows: Vec<RecordRow> = outputs.iter().flat_map(|o| o.rows.iter().copied()).collect();
    write_records(&records, &rows)?;
    if a.correlations {
        let mut total = CorrelationAccumulator::new(&lattice);
        for o in &outputs {
            total.merge(o.correlations.as_ref().expect("accumulated when enabled"));
        }
        let mut w = csv_writer(create_new(&correlation)?);
        w.write_record(["distance", "correlation"])?;
        for (d, c) in total.truncated() {
            w.write_record([d.to_string(), c.to_string()])?;
        }
        w.flush()?;
    }
    if a.save_final {
        for (chain, o) in outputs.iter().enumerate() {
            let p = finals.join(format!("chain-{chain:03}.csv"));
            write_config(create_new(&p)?, &lattice, &o.last)?;
        }
    }
    let chains: Vec<_> = outputs
        .iter()
        .enumerate()
        .map(|(chain, o)| {
            json!({
                "chain": chain,
                "records": o.rows.len(),
                "proposal_width": o.width,
                "single_acceptance": o.stats.single_rate(),
                "flips": o.stats.flips_accepted,
            })
        })
        .collect();
    let m = json!({
        "command": "simulate",
        "version": env!("CARGO_PKG_VERSION"),
        "config": a.to_config(),
        "lattice": { "n": a.n, "sites": lattice.site_count() },
        "couplings": { "j1": a.j1, "j2": a.j2, "beta": a.beta },
        "sampler": {
            "kind": a.kind.name(),
            "proposal_width": a.proposal_width,
            "flip_fraction": a.flip_fraction,
            "flips_per_sweep": spec.flips_per_sweep(&lattice),
            "sweeps": a.sweeps,
            "thermalization": a.thermalization,
            "measure_every": a.measure_every,
            "tune_width": a.tune_width,
        },
        "seed": a.seed,
        "rng": "ChaCha8, stream = chain index",
        "chains": chains,
        "records": rows.len(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let mut f = create_new(&manifest)?;
    serde_json::to_writer_pretty(&mut f, &m)?;
    f.write_all(b"\n")?;
    f.flush()?;
    println!(
        "wrote {} records from {} chain(s) to {}",
        rows.len(),
        a.chains,
        a.out.display()
    );
    Ok(0)
}

pub fn spinwave(a: &SpinwaveArgs) -> Result<ExitCode, CliError> {
    if a.points < 2 || !(a.theta_max > a.theta_min) {
        return Err(CliError::new("need at least 2 points and theta-max > theta-min"));
    }
    if !(a.beta > 0.0 && a.j > 0.0) {
        return Err(CliError::new("beta and j must be positive"));
    }
    if a.n.is_some() && !(a.lambda > 0.0) {
        return Err(CliError::new("the finite-lattice sum needs lambda > 0"));
    }
    if let Some(n) = a.n {
        TorusLattice::new(n)?;
    }
    let out = a.out.join("ftheta.csv");
    ensure_absent(&[&out])?;
    let opts = QuadratureOptions {
        grid: a.grid,
        tol: a.tol,
        ..QuadratureOptions::default()
    };
    let beta_j = a.beta * a.j;
    let thetas: Vec<f64> = (0..a.points)
        .map(|i| a.theta_min + (a.theta_max - a.theta_min) * i as f64 / (a.points - 1) as f64)
        .collect();
    let rows: Vec<(f64, f64, Option<f64>)> = pool(a.common.threads)?.install(|| {
        thetas
            .par_iter()
            .map(|&t| {
                let f = free_energy_f(t, beta_j, &opts)?;
                let fn_ = a.n.map(|n| free_energy_fn(t, a.lambda, beta_j, n)).transpose()?;
                Ok((t, f, fn_))
            })
            .collect::<Result<Vec<_>, pom_core::Error>>()
    })?;
    let mut w = csv_writer(create_new(&out)?);
    if a.n.is_some() {
        w.write_record(["theta", "f", "f_n"])?;
    } else {
        w.write_record(["theta", "f"])?;
    }
    for (t, f, fn_) in &rows {
        let mut rec = vec![t.to_string(), f.to_string()];
        if let Some(v) = fn_ {
            rec.push(v.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    let (tmax, fmax) = rows.iter().fold(
        (0.0, f64::NEG_INFINITY),
        |acc, r| if r.1 > acc.1 { (r.0, r.1) } else { acc },
    );
    println!(
        "wrote {} rows to {}; maximum F = {fmax:.6} at θ = {tmax:.4}",
        rows.len(),
        out.display()
    );
    Ok(0)
}

/// The `pom verify` suite.
pub fn verify_checks(a: &VerifyArgs) -> Vec<checks::Check> {
    let broken = a.fixture == Some(Fixture::SignError);
    let beta_j = a.beta * a.j;
    let delta = a.delta.unwrap_or_else(|| default_delta(beta_j));
    vec![
        checks::ground_states(&[2, 4, 8], 200, a.seed),
        checks::flip_invariance(1000, 8, a.seed),
        checks::rewrite_identity(1000, 32, a.seed),
        checks::det_oracle(10_000, a.seed, broken),
        checks::det_bounds(200, 50),
        checks::gaussian_form(100, &[2, 4, 8], a.seed),
        checks::gaussian_approximation(a.n, beta_j, delta, a.theta, a.samples, a.seed, a.tau).0,
    ]
}

pub fn verify(a: &VerifyArgs) -> Result<ExitCode, CliError> {
    if !(a.tau > 0.0) {
        return Err(CliError::new("tau must be positive"));
    }
    let results = pool(a.common.threads)?.install(|| verify_checks(a));
    print!("{}", checks::table(&results));
    let failed = results.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        println!("all {} checks passed", results.len());
        Ok(0)
    } else {
        println!("{failed} of {} checks failed", results.len());
        Ok(1)
    }
}

pub fn oracle_json(a: &OracleArgs) -> Result<serde_json::Value, CliError> {
    let beta_j = a.beta * a.j;
    if a.full {
        let couplings = Couplings::symmetric(a.j, a.beta)?;
        if a.n != 2 {
            return Err(CliError::new("the full partition function supports N = 2 only"));
        }
        let batches = batch_sizes(a.samples, DEFAULT_BATCHES)
            .par_iter()
            .enumerate()
            .map(|(b, &count)| full_batch(a.n, &couplings, b, count, a.seed))
            .collect::<Result<Vec<_>, _>>()?;
        let est = combine_batches(&batches, a.n * a.n, LOG_CIRCLE_MASS, a.seed);
        return Ok(json!({
            "kind": "full",
            "beta_j": beta_j,
            "n": a.n,
            "estimate": est.estimate,
            "std_error": est.std_error,
            "samples": est.samples,
            "seed": a.seed,
            "error_unreliable": est.error_unreliable,
        }));
    }
    let delta = a.delta.unwrap_or_else(|| default_delta(beta_j));
    let ens = ConstrainedEnsemble::new(a.theta, delta, a.n, beta_j)?;
    let est = checks::constrained_estimate(&ens, a.samples, a.seed);
    Ok(json!({
        "kind": "constrained",
        "theta": a.theta,
        "delta": delta,
        "delta_prime": ens.delta_prime,
        "beta_j": beta_j,
        "n": a.n,
        "estimate": est.estimate,
        "std_error": est.std_error,
        "samples": est.samples,
        "seed": a.seed,
        "error_unreliable": est.error_unreliable,
    }))
}

pub fn oracle(a: &OracleArgs) -> Result<ExitCode, CliError> {
    if let Some(p) = &a.out {
        ensure_absent(&[p])?;
    }
    let value = pool(a.common.threads)?.install(|| oracle_json(a))?;
    let text = serde_json::to_string_pretty(&value)? + "\n";
    match &a.out {
        Some(p) => create_new(p)?.write_all(text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(0)
}
