//! `pom analyze`: statistics of a simulate run directory.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use pom_core::analysis::{
    autocorrelation_time, binomial_chi_square, binomial_half_pmf, blocking_error, correlation_decay, mean,
    mixing_report, neel_report, thin, AutocorrEstimate, ClassStat, NeelReport,
};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::args::AnalyzeArgs;
use crate::io::{create_new, csv_writer, ensure_absent, read_records, RecordRow};
use crate::{CliError, ExitCode};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std_error: f64,
}

impl From<ClassStat> for Stat {
    fn from(c: ClassStat) -> Self {
        Self {
            mean: c.mean,
            std_error: c.std_error,
        }
    }
}

/// Mean of independent chain means.
fn combine(stats: &[Stat]) -> Stat {
    let k = stats.len() as f64;
    Stat {
        mean: stats.iter().map(|s| s.mean).sum::<f64>() / k,
        std_error: stats.iter().map(|s| s.std_error * s.std_error).sum::<f64>().sqrt() / k,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tau {
    /// In records; infinite (null in JSON) for a constant series.
    pub records: f64,
    pub sweeps: f64,
    pub window: usize,
    pub converged: bool,
    pub degenerate: bool,
}

impl Tau {
    fn new(t: AutocorrEstimate, measure_every: u64) -> Self {
        Self {
            records: t.tau_int,
            sweeps: t.tau_int * measure_every as f64,
            window: t.window,
            converged: t.converged,
            degenerate: t.degenerate,
        }
    }

    /// Record spacing that leaves roughly independent samples.
    pub fn thinning(&self, len: usize) -> usize {
        if self.records.is_finite() {
            ((2.0 * self.records).ceil() as usize).clamp(1, len.max(1))
        } else {
            len.max(1)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainSummary {
    pub chain: u64,
    pub records: usize,
    pub q_x: Stat,
    /// `x` or `z` when most thinned measurements are ordered, else `none`.
    pub ordered_axis: String,
    /// Fraction of thinned measurements with max(q_x, q_z) at or above the threshold.
    pub ordered_fraction: f64,
    pub thinned_samples: usize,
    pub tau_q_x: Tau,
    pub tau_max_q: Tau,
    pub tau_n_up: Tau,
    pub m_x: Stat,
    pub m_z: Stat,
    pub energy: Stat,
    /// Distance of this chain's `E_r` class means from `{0, -2, -4}`.
    pub neel_distance: f64,
    /// Largest normalised class mean.
    pub normalized_max: f64,
    /// Normalised classes differ beyond three combined standard errors.
    pub normalized_separate: bool,
}

/// Chain means combined over all chains; only meaningful when the chains
/// share one ordering axis.
#[derive(Debug, Clone, Serialize)]
pub struct NeelSummary {
    /// Class order: pure-x, pure-z, mixed.
    pub energy: [Stat; 3],
    pub normalized: [Stat; 3],
    pub staggered: Stat,
    pub energy_separation: f64,
    pub distance_to_ordered_limit: f64,
    pub normalized_separation: f64,
    pub normalized_separation_error: f64,
    pub normalized_classes_separate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Binomial {
    pub trials: u32,
    pub samples: u64,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub inconclusive: bool,
    /// The same test on every record, without thinning.
    pub p_value_unthinned: f64,
    pub reference_k: u32,
    pub reference_probability: f64,
    /// `(k, observed, expected)` over the thinned samples.
    pub histogram: Vec<(u32, u64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub n: usize,
    pub measure_every: u64,
    pub records: usize,
    pub order_threshold: f64,
    pub chains: Vec<ChainSummary>,
    pub magnetization: [Stat; 2],
    /// Each component within three standard errors of zero.
    pub magnetization_consistent_with_zero: bool,
    pub ordered_fraction: f64,
    pub x_ordered_chains: usize,
    pub z_ordered_chains: usize,
    pub mean_q_x: f64,
    pub neel: NeelSummary,
    pub binomial: Binomial,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixing: Option<BTreeMap<String, Mixing>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Correlation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Mixing {
    pub tau_sweeps: f64,
    pub tau_compare_sweeps: f64,
    pub compare_lower_bound: bool,
    pub effective_samples: f64,
    pub effective_samples_compare: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Correlation {
    pub points: Vec<(usize, f64)>,
    pub xi: f64,
    pub fit_quality: f64,
    pub fitted_points: usize,
    pub skipped: bool,
}

fn chi_p(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return f64::NAN;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
}

/// Groups rows by chain, keeping file order.
pub fn by_chain(rows: &[RecordRow]) -> Vec<(u64, Vec<RecordRow>)> {
    let mut out: Vec<(u64, Vec<RecordRow>)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some((c, v)) if *c == r.chain => v.push(*r),
            _ => out.push((r.chain, vec![*r])),
        }
    }
    out
}

pub fn summarize(rows: &[RecordRow], n: usize, measure_every: u64, threshold: f64) -> Result<Report, CliError> {
    let chains = by_chain(rows);
    if chains.is_empty() {
        return Err(CliError::new("no records"));
    }
    let trials = (n * n / 4) as u32;
    let mut summaries = Vec::new();
    let mut neels: Vec<NeelReport> = Vec::new();
    let mut thinned_up: Vec<u32> = Vec::new();
    let mut all_up: Vec<u32> = Vec::new();
    let mut ordered_total = 0usize;
    let mut thinned_total = 0usize;
    for (chain, recs) in &chains {
        let col = |f: fn(&RecordRow) -> f64| -> Vec<f64> { recs.iter().map(f).collect() };
        let q_x = col(|r| r.q_x);
        let max_q = col(|r| r.q_x.max(r.q_z));
        let n_up = col(|r| r.n_up_plaquettes as f64);
        let tau_q_x = Tau::new(autocorrelation_time(&q_x)?, measure_every);
        let tau_max_q = Tau::new(autocorrelation_time(&max_q)?, measure_every);
        let tau_n_up = Tau::new(autocorrelation_time(&n_up)?, measure_every);
        let kept = thin(&max_q, tau_max_q.thinning(max_q.len()));
        let ordered = kept.iter().filter(|&&q| q >= threshold).count();
        ordered_total += ordered;
        thinned_total += kept.len();
        let ups: Vec<u32> = recs.iter().map(|r| r.n_up_plaquettes).collect();
        thinned_up.extend(thin(&ups, tau_n_up.thinning(ups.len())));
        all_up.extend(&ups);
        let mq_x = mean(&q_x);
        let ordered_fraction = ordered as f64 / kept.len() as f64;
        let ordered_axis = if ordered_fraction < 0.5 {
            "none"
        } else if mq_x >= 0.5 {
            "x"
        } else {
            "z"
        };
        let stat = |v: &[f64]| -> Result<Stat, CliError> {
            let b = blocking_error(v)?;
            Ok(Stat {
                mean: b.mean,
                std_error: b.std_error,
            })
        };
        let records: Vec<_> = recs.iter().map(|r| r.record()).collect();
        let neel = neel_report(&records)?;
        neels.push(neel);
        summaries.push(ChainSummary {
            chain: *chain,
            records: recs.len(),
            q_x: stat(&q_x)?,
            ordered_axis: ordered_axis.to_string(),
            ordered_fraction,
            thinned_samples: kept.len(),
            tau_q_x,
            tau_max_q,
            tau_n_up,
            m_x: stat(&col(|r| r.m_x))?,
            m_z: stat(&col(|r| r.m_z))?,
            energy: stat(&col(|r| r.energy))?,
            neel_distance: neel.distance_to_ordered_limit(),
            normalized_max: neel.normalized.iter().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max),
            normalized_separate: neel.normalized_classes_separate(3.0),
        });
    }
    let mx = combine(&summaries.iter().map(|s| s.m_x).collect::<Vec<_>>());
    let mz = combine(&summaries.iter().map(|s| s.m_z).collect::<Vec<_>>());
    let zero_ok = [mx, mz].iter().all(|s| s.mean.abs() <= 3.0 * s.std_error);

    let class = |f: fn(&NeelReport) -> ClassStat| -> ClassStat {
        let s = combine(&neels.iter().map(|r| Stat::from(f(r))).collect::<Vec<_>>());
        ClassStat {
            mean: s.mean,
            std_error: s.std_error,
        }
    };
    let energy = [class(|r| r.energy[0]), class(|r| r.energy[1]), class(|r| r.energy[2])];
    let normalized = [
        class(|r| r.normalized[0]),
        class(|r| r.normalized[1]),
        class(|r| r.normalized[2]),
    ];
    let spread = |c: &[ClassStat; 3]| {
        let (lo, hi) = (0..3).fold((0, 0), |(lo, hi), i| {
            (
                if c[i].mean < c[lo].mean { i } else { lo },
                if c[i].mean > c[hi].mean { i } else { hi },
            )
        });
        (c[hi].mean - c[lo].mean, c[hi].std_error.hypot(c[lo].std_error))
    };
    let (energy_separation, _) = spread(&energy);
    let (normalized_separation, normalized_separation_error) = spread(&normalized);
    let pooled = NeelReport {
        energy,
        normalized,
        staggered: class(|r| r.staggered),
        energy_separation,
        normalized_separation,
        normalized_separation_error,
    };
    let neel = NeelSummary {
        energy: energy.map(Stat::from),
        normalized: normalized.map(Stat::from),
        staggered: pooled.staggered.into(),
        energy_separation,
        distance_to_ordered_limit: pooled.distance_to_ordered_limit(),
        normalized_separation,
        normalized_separation_error,
        normalized_classes_separate: pooled.normalized_classes_separate(3.0),
    };

    let chi = binomial_chi_square(&thinned_up, trials);
    let raw = binomial_chi_square(&all_up, trials);
    let mut histogram: Vec<(u32, u64, f64)> = (0..=trials)
        .map(|k| (k, 0, chi.samples as f64 * binomial_half_pmf(trials, k)))
        .collect();
    for &v in &thinned_up {
        histogram[v.min(trials) as usize].1 += 1;
    }
    let binomial = Binomial {
        trials,
        samples: chi.samples,
        statistic: chi.statistic,
        dof: chi.dof,
        p_value: chi_p(chi.statistic, chi.dof),
        inconclusive: chi.inconclusive,
        p_value_unthinned: chi_p(raw.statistic, raw.dof),
        reference_k: 7.min(trials),
        reference_probability: binomial_half_pmf(trials, 7.min(trials)),
        histogram,
    };

    Ok(Report {
        n,
        measure_every,
        records: rows.len(),
        order_threshold: threshold,
        x_ordered_chains: summaries.iter().filter(|s| s.ordered_axis == "x").count(),
        z_ordered_chains: summaries.iter().filter(|s| s.ordered_axis == "z").count(),
        mean_q_x: mean(&rows.iter().map(|r| r.q_x).collect::<Vec<_>>()),
        chains: summaries,
        magnetization: [mx, mz],
        magnetization_consistent_with_zero: zero_ok,
        ordered_fraction: ordered_total as f64 / thinned_total as f64,
        neel,
        binomial,
        mixing: None,
        correlation: None,
    })
}

type Column = fn(&RecordRow) -> f64;

/// Integrated autocorrelation times of the first chain of each run.
pub fn compare_mixing(
    rows: &[RecordRow],
    other: &[RecordRow],
    measure_every: u64,
) -> Result<BTreeMap<String, Mixing>, CliError> {
    let first =
        |rs: &[RecordRow]| -> Vec<RecordRow> { by_chain(rs).into_iter().next().map(|c| c.1).unwrap_or_default() };
    let (a, b) = (first(rows), first(other));
    let observables: [(&str, Column); 4] = [
        ("q_x", |r| r.q_x),
        ("n_up_plaquettes", |r| r.n_up_plaquettes as f64),
        ("m_z", |r| r.m_z),
        ("energy", |r| r.energy),
    ];
    let mut out = BTreeMap::new();
    for (name, f) in observables {
        let sa: Vec<f64> = a.iter().map(f).collect();
        let sb: Vec<f64> = b.iter().map(f).collect();
        let m = mixing_report(&sa, &sb, measure_every)?;
        out.insert(
            name.to_string(),
            Mixing {
                tau_sweeps: m.tau_enhanced,
                tau_compare_sweeps: m.tau_metropolis,
                compare_lower_bound: m.metropolis_lower_bound,
                effective_samples: m.effective_enhanced,
                effective_samples_compare: m.effective_metropolis,
                ratio: m.ratio,
            },
        );
    }
    Ok(out)
}

fn read_manifest(dir: &Path) -> Result<(usize, u64), CliError> {
    let path = dir.join("manifest.json");
    let text =
        std::fs::read_to_string(&path).map_err(|e| CliError::new(format!("cannot read {}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let n = v["lattice"]["n"]
        .as_u64()
        .ok_or_else(|| CliError::new("manifest lacks lattice.n"))?;
    let every = v["sampler"]["measure_every"]
        .as_u64()
        .ok_or_else(|| CliError::new("manifest lacks sampler.measure_every"))?;
    Ok((n as usize, every))
}

fn read_correlation(path: &Path) -> Result<Vec<(usize, f64)>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize::<(usize, f64)>() {
        out.push(row?);
    }
    Ok(out)
}

pub fn analyze(a: &AnalyzeArgs) -> Result<ExitCode, CliError> {
    let out_dir = a.out.clone().unwrap_or_else(|| a.input.clone());
    let report_path = out_dir.join("report.json");
    let hist_path = out_dir.join("nup_histogram.csv");
    ensure_absent(&[&report_path, &hist_path])?;
    let (n, every) = read_manifest(&a.input)?;
    let rows = read_records(&a.input.join("records.csv"))?;
    let mut report = summarize(&rows, n, every, a.order_threshold)?;
    if let Some(other) = &a.compare {
        let (n2, every2) = read_manifest(other)?;
        if n2 != n || every2 != every {
            return Err(CliError::new(
                "compared runs need the same lattice size and measure-every",
            ));
        }
        report.mixing = Some(compare_mixing(
            &rows,
            &read_records(&other.join("records.csv"))?,
            every,
        )?);
    }
    let corr_path = a.input.join("correlation.csv");
    if corr_path.exists() {
        let points = read_correlation(&corr_path)?;
        let fit = correlation_decay(&points, 0.0);
        report.correlation = Some(Correlation {
            points,
            xi: fit.xi,
            fit_quality: fit.fit_quality,
            fitted_points: fit.points,
            skipped: fit.skipped,
        });
    }
    let mut w = csv_writer(create_new(&hist_path)?);
    w.write_record(["n_up", "observed", "expected"])?;
    for (k, o, e) in &report.binomial.histogram {
        w.write_record([k.to_string(), o.to_string(), e.to_string()])?;
    }
    w.flush()?;
    let mut f = create_new(&report_path)?;
    serde_json::to_writer_pretty(&mut f, &report)?;
    f.write_all(b"\n")?;
    f.flush()?;
    println!(
        "{} records in {} chain(s): ordered fraction {:.3}, mean q_x {:.3}, binomial p = {:.3} ({} samples); reference P(X=7) = {:.4}",
        report.records,
        report.chains.len(),
        report.ordered_fraction,
        report.mean_q_x,
        report.binomial.p_value,
        report.binomial.samples,
        report.binomial.reference_probability
    );
    Ok(0)
}
