//! The subcommands, split into a pure computation and a writer.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand_distr::{Binomial, Distribution};
use serde_json::{json, Value};
use tablerecon::diagnostics::summarize;
use tablerecon::oracle::{exact_n1_joint, exact_n_single_row, pmf_statistics};
use tablerecon::samplers::NegBinHyper;
use tablerecon::{chain_stream, derive_quantities, fit_joint, fit_single_row, DrawMatrix, ExactPmf, FitSpec, PosteriorSummary};

use crate::config::{ModelKind, ResolvedModel, RunConfig, SimulationConfig, Stratum};
use crate::draws_io::{read_draws, write_draws};
use crate::report::{
    reconstruct, reconstruction_json, render_parameters, render_reconstruction, summary_json, with_config_echo,
    Reconstruction,
};

#[derive(Debug)]
pub struct FitResult {
    pub draws: DrawMatrix,
    pub summary: PosteriorSummary,
    pub reconstruction: Reconstruction,
}

/// Run the sampler for every configured stratum or the joint model.
/// Single-row columns carry a `_diseased` / `_nondiseased` suffix; the
/// non-diseased stratum uses `seed + 1`.
pub fn run_fit(cfg: &RunConfig, reduced: bool) -> Result<FitResult> {
    let settings = cfg.mcmc.settings();
    let draws = match cfg.resolve(reduced)? {
        ResolvedModel::Joint(spec) => {
            let draws = fit_joint(&spec, &settings).context("sampler failed")?;
            derive_quantities(draws, FitSpec::Joint(&spec))?
        }
        ResolvedModel::SingleRow(specs) => {
            let mut merged: Option<DrawMatrix> = None;
            for (stratum, spec) in specs {
                let mut s = settings;
                if stratum == Stratum::Nondiseased {
                    s.seed = s.seed.wrapping_add(1);
                }
                let draws = fit_single_row(&spec, &s).with_context(|| format!("sampler failed ({} stratum)", stratum.suffix()))?;
                let mut draws = derive_quantities(draws, FitSpec::SingleRow(&spec))?;
                let renamed: Vec<(String, String)> =
                    draws.names().iter().map(|n| (n.clone(), format!("{n}_{}", stratum.suffix()))).collect();
                let map: Vec<(&str, &str)> = renamed.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                draws.rename(&map);
                merged = Some(match merged {
                    None => draws,
                    Some(m) => m.merge(draws)?,
                });
            }
            merged.expect("at least one stratum")
        }
    };
    let summary = summarize(&draws)?;
    let reconstruction = reconstruct(&draws, cfg)?;
    Ok(FitResult { draws, summary, reconstruction })
}

fn config_value(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn heading(cfg: &RunConfig, command: &str) -> String {
    let mut out = format!("tablerecon {command}: model {}", cfg.model.as_str());
    if let Some(j) = cfg.joint.filter(|_| cfg.model == ModelKind::JointFixedN) {
        let _ = write!(out, ", n1 prior {:?}", j.n1_prior_variant);
    }
    let _ = writeln!(out, ", truncation {:?}, count update {:?}", cfg.truncation, cfg.count_update);
    out
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// Fit and write draws, summary and report into `out`. Returns the report.
pub fn cmd_fit(cfg: &RunConfig, reduced: bool, out: &Path) -> Result<String> {
    let start = Instant::now();
    let fit = run_fit(cfg, reduced)?;
    let elapsed = start.elapsed();

    let mut csv = Vec::new();
    write_draws(&fit.draws, &mut csv)?;
    let summary = summary_json("fit", Some(&config_value(cfg)), &fit.summary, &fit.draws, Some(&fit.reconstruction));
    let mut report = heading(cfg, "fit");
    let _ = writeln!(
        report,
        "{} chains, {} retained draws, seed {}, {:.1} s{}\n",
        fit.draws.n_chains(),
        fit.draws.total_draws(),
        cfg.mcmc.seed,
        elapsed.as_secs_f64(),
        if reduced { ", fixed hyperparameters" } else { "" }
    );
    report.push_str(&render_parameters(&fit.summary));
    report.push('\n');
    report.push_str(&render_reconstruction(&fit.reconstruction));
    let report = with_config_echo(report, &cfg.to_toml());

    write_file(out, &cfg.outputs.draws_path, &csv)?;
    write_file(out, &cfg.outputs.summary_path, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    write_file(out, &cfg.outputs.report_path, report.as_bytes())?;
    Ok(report)
}

/// Exact posterior pmfs: one for `n1`, or one per single-row stratum.
pub fn run_oracle(cfg: &RunConfig) -> Result<Vec<(String, ExactPmf)>> {
    match cfg.resolve(false)? {
        ResolvedModel::Joint(spec) => {
            let prior = cfg.oracle_prior()?;
            let pmf = exact_n1_joint(spec.tp, spec.fp, spec.total, &spec.p1_prior, &spec.p2_prior, &prior)?;
            Ok(vec![("n1".to_string(), pmf)])
        }
        ResolvedModel::SingleRow(_) => {
            let reduced = match cfg.resolve(true) {
                Ok(ResolvedModel::SingleRow(s)) => s,
                _ => bail!("no exact oracle for hierarchical negbin; add a `reduction` block with `pstar` and `r` to each stratum"),
            };
            reduced
                .into_iter()
                .map(|(stratum, spec)| {
                    let NegBinHyper::Fixed(nb) = spec.hyper else { unreachable!() };
                    let pmf = exact_n_single_row(spec.y, &spec.p_prior, &nb, spec.upper_bound)?;
                    Ok((format!("n_{}", stratum.suffix()), pmf))
                })
                .collect()
        }
    }
}

pub fn pmf_csv(pmfs: &[(String, ExactPmf)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter", "n", "probability"])?;
    for (name, pmf) in pmfs {
        for (k, p) in pmf.iter() {
            w.write_record([name.clone(), k.to_string(), format!("{p:.16e}")])?;
        }
    }
    Ok(w.into_inner()?)
}

pub fn cmd_oracle(cfg: &RunConfig, out: &Path) -> Result<String> {
    let pmfs = run_oracle(cfg)?;
    let mut report = heading(cfg, "oracle");
    let mut stats = Vec::new();
    for (name, pmf) in &pmfs {
        let s = pmf_statistics(pmf);
        let total: f64 = pmf.probs().iter().sum();
        let _ = writeln!(
            report,
            "{name}: support {}..={}, mean {:.4}, sd {:.4}, 2.5% {}, median {}, 97.5% {}",
            pmf.start(),
            pmf.end(),
            s.mean,
            s.sd,
            s.q025,
            s.median,
            s.q975
        );
        stats.push(json!({
            "parameter": name,
            "start": pmf.start(),
            "end": pmf.end(),
            "mean": s.mean,
            "sd": s.sd,
            "q025": s.q025,
            "median": s.median,
            "q975": s.q975,
            "log_norm": pmf.log_norm(),
            "probability_sum": total,
        }));
    }
    let doc = json!({ "command": "oracle", "config": config_value(cfg), "pmfs": stats });
    let report = with_config_echo(report, &cfg.to_toml());
    write_file(out, &cfg.outputs.pmf_path, &pmf_csv(&pmfs)?)?;
    write_file(out, &cfg.outputs.oracle_path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    Ok(report)
}

pub fn load_draws(path: &Path) -> Result<DrawMatrix> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_draws(file).with_context(|| format!("in {}", path.display()))
}

pub fn cmd_reconstruct(cfg: &RunConfig, draws_path: &Path, out: &Path) -> Result<String> {
    let draws = load_draws(draws_path)?;
    let rec = reconstruct(&draws, cfg)?;
    let mut report = heading(cfg, "reconstruct");
    let _ = writeln!(report, "draws {}\n", draws_path.display());
    report.push_str(&render_reconstruction(&rec));
    let report = with_config_echo(report, &cfg.to_toml());
    let doc = json!({
        "command": "reconstruct",
        "config": config_value(cfg),
        "draws_path": draws_path.display().to_string(),
        "reconstruction": reconstruction_json(&rec),
    });
    write_file(out, "reconstruction.json", serde_json::to_string_pretty(&doc)?.as_bytes())?;
    write_file(out, "reconstruction.txt", report.as_bytes())?;
    Ok(report)
}

pub fn cmd_summarize(cfg: Option<&RunConfig>, draws_path: &Path, out: &Path) -> Result<String> {
    let draws = load_draws(draws_path)?;
    let summary = summarize(&draws)?;
    let mut report = format!("tablerecon summarize: {}\n", draws_path.display());
    let _ = writeln!(report, "{} chains, {} retained draws\n", draws.n_chains(), draws.total_draws());
    report.push_str(&render_parameters(&summary));
    let config = cfg.map(config_value);
    let doc = summary_json("summarize", config.as_ref(), &summary, &draws, None);
    let report = match cfg {
        Some(c) => with_config_echo(report, &c.to_toml()),
        None => report,
    };
    let name = cfg.map_or("summary.json", |c| c.outputs.summary_path.as_str());
    write_file(out, name, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    Ok(report)
}

/// Outcome of one synthetic table.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub n1: u64,
    pub tp: u64,
    pub fp: u64,
    /// 95% interval for `n1`, or the error that stopped the fit.
    pub interval: Result<(f64, f64), String>,
}

impl Replicate {
    pub fn covered(&self) -> Option<bool> {
        self.interval.as_ref().ok().map(|&(lo, hi)| lo <= self.n1 as f64 && self.n1 as f64 <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub replicates: Vec<Replicate>,
}

impl Coverage {
    pub fn fitted(&self) -> usize {
        self.replicates.iter().filter(|r| r.interval.is_ok()).count()
    }

    /// Share of fitted replicates whose interval contains the true `n1`.
    pub fn coverage(&self) -> f64 {
        let hits = self.replicates.iter().filter(|r| r.covered() == Some(true)).count();
        hits as f64 / self.fitted().max(1) as f64
    }

    pub fn mean_width(&self) -> f64 {
        let w: f64 = self.replicates.iter().filter_map(|r| r.interval.as_ref().ok()).map(|(lo, hi)| hi - lo).sum();
        w / self.fitted().max(1) as f64
    }

    pub fn line(&self) -> String {
        format!(
            "replicates {} fitted {} failed {} coverage {:.4} mean_width {:.2}",
            self.replicates.len(),
            self.fitted(),
            self.replicates.len() - self.fitted(),
            self.coverage(),
            self.mean_width()
        )
    }
}

/// Tables are drawn from one stream; replicate `i` is fitted with seed
/// `seed + 1 + i`.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<Coverage> {
    let mut rng = chain_stream(cfg.seed, u64::MAX);
    let mut tables = Vec::with_capacity(cfg.replicates as usize);
    for _ in 0..cfg.replicates {
        let n1 = Binomial::new(cfg.total, cfg.prevalence)?.sample(&mut rng);
        let tp = Binomial::new(n1, cfg.se)?.sample(&mut rng);
        let fp = Binomial::new(cfg.total - n1, 1.0 - cfg.sp)?.sample(&mut rng);
        tables.push((n1, tp, fp));
    }
    let replicates = tables
        .into_iter()
        .enumerate()
        .map(|(i, (n1, tp, fp))| {
            let mut run = cfg.run_config(tp, fp);
            run.mcmc.seed = cfg.seed.wrapping_add(1 + i as u64);
            let param = if cfg.model == ModelKind::JointFixedN { "n1" } else { "n_diseased" };
            let interval = run_fit(&run, false)
                .map_err(|e| format!("{e:#}"))
                .and_then(|fit| {
                    let s = fit.summary.get(param).ok_or_else(|| format!("no `{param}` in the fit"))?;
                    Ok((s.q025, s.q975))
                });
            Replicate { n1, tp, fp, interval }
        })
        .collect();
    Ok(Coverage { replicates })
}

pub fn cmd_simulate(cfg: &SimulationConfig, out: &Path) -> Result<String> {
    let cov = run_simulation(cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["replicate", "n1", "tp", "fp", "q025", "q975", "covered", "width", "error"])?;
    for (i, r) in cov.replicates.iter().enumerate() {
        let (lo, hi, covered, width, err) = match &r.interval {
            Ok((lo, hi)) => (lo.to_string(), hi.to_string(), r.covered().unwrap().to_string(), (hi - lo).to_string(), String::new()),
            Err(e) => ("NA".into(), "NA".into(), "NA".into(), "NA".into(), e.clone()),
        };
        w.write_record([(i + 1).to_string(), r.n1.to_string(), r.tp.to_string(), r.fp.to_string(), lo, hi, covered, width, err])?;
    }
    let line = cov.line();
    let doc = with_config_echo(format!("{line}\n"), &cfg.to_toml());
    write_file(out, &cfg.replicates_path, &w.into_inner()?)?;
    write_file(out, &cfg.coverage_path, doc.as_bytes())?;
    Ok(line)
}
