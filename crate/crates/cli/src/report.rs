//! Reconstructed tables, summary documents and plain-text reports.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use tablerecon::diagnostics::{summarize, Diagnostic};
use tablerecon::samplers::{ChainDraws, Column};
use tablerecon::tables::defined_ratio;
use tablerecon::{measures_from_counts, CellCounts, DrawMatrix, Measures, ParamSummary, PosteriorSummary};

use crate::config::{ModelKind, RunConfig, Stratum};

/// Posterior of one reconstructed count or measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
    /// Draws at which the quantity is defined.
    pub defined: usize,
}

impl Estimate {
    fn from_summary(s: &ParamSummary) -> Self {
        Self { mean: s.mean, median: s.q50, q025: s.q025, q975: s.q975, defined: s.defined }
    }

    pub fn rounded(&self) -> u64 {
        self.mean.round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: Option<Estimate>,
    pub tn: Option<Estimate>,
    pub n1: Option<Estimate>,
    pub n2: Option<Estimate>,
    pub n_minus: Option<Estimate>,
    pub total: Option<Estimate>,
    /// Posterior of each measure computable from the available strata.
    pub measures: Vec<(String, Estimate)>,
    /// TP / (TP + FP), known without any model.
    pub observed_ppv: Option<f64>,
}

impl Reconstruction {
    pub fn measure(&self, name: &str) -> Option<&Estimate> {
        self.measures.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }
}

fn counts<'a>(draws: &'a DrawMatrix, name: &str) -> Result<Vec<&'a [u64]>> {
    let cols = draws.column(name).with_context(|| format!("draws lack column `{name}`"))?;
    cols.into_iter()
        .map(|c| c.as_counts().with_context(|| format!("column `{name}` does not hold counts")))
        .collect()
}

fn minus(col: &[u64], y: u64, name: &str) -> Result<Vec<u64>> {
    col.iter()
        .map(|&n| n.checked_sub(y).with_context(|| format!("`{name}` draw {n} is below the observed {y}")))
        .collect()
}

/// Posterior of the unobserved cells and of the measures, from the count
/// draws alone.
pub fn reconstruct(draws: &DrawMatrix, cfg: &RunConfig) -> Result<Reconstruction> {
    let tp = cfg.data.tp.context("missing field `tp`")?;
    let fp = cfg.data.fp.context("missing field `fp`")?;
    let n_chains = draws.n_chains();
    let (n1, n2): (Option<Vec<Vec<u64>>>, Option<Vec<Vec<u64>>>) = match cfg.model {
        ModelKind::JointFixedN => {
            let total = cfg.data.total.context("missing field `N`")?;
            let n1 = counts(draws, "n1")?;
            let n2 = n1
                .iter()
                .map(|c| c.iter().map(|&v| total.checked_sub(v).context("`n1` draw exceeds N")).collect())
                .collect::<Result<Vec<Vec<u64>>>>()?;
            (Some(n1.into_iter().map(<[u64]>::to_vec).collect()), Some(n2))
        }
        ModelKind::SingleRow | ModelKind::SingleRowKnownN => {
            let blocks = cfg.single_row.unwrap_or_default();
            let get = |present: bool, s: Stratum| -> Result<Option<Vec<Vec<u64>>>> {
                if !present {
                    return Ok(None);
                }
                let name = format!("n_{}", s.suffix());
                Ok(Some(counts(draws, &name)?.into_iter().map(<[u64]>::to_vec).collect()))
            };
            (get(blocks.diseased.is_some(), Stratum::Diseased)?, get(blocks.nondiseased.is_some(), Stratum::Nondiseased)?)
        }
    };
    if n1.is_none() && n2.is_none() {
        bail!("draws lack column `n_diseased` and `n_nondiseased`");
    }

    let mut names: Vec<&str> = Vec::new();
    let mut per_chain: Vec<Vec<Column>> = vec![Vec::new(); n_chains];
    let mut push = |name: &'static str, cols: Vec<Column>, names: &mut Vec<&str>| {
        names.push(name);
        for (c, col) in cols.into_iter().enumerate() {
            per_chain[c].push(col);
        }
    };
    let fn_cols = n1.as_ref().map(|n1| n1.iter().map(|c| minus(c, tp, "n1")).collect::<Result<Vec<_>>>()).transpose()?;
    let tn_cols = n2.as_ref().map(|n2| n2.iter().map(|c| minus(c, fp, "n2")).collect::<Result<Vec<_>>>()).transpose()?;
    let count_col = |v: &Vec<u64>| Column::Count(v.clone());
    if let (Some(a), Some(b)) = (&n1, &fn_cols) {
        push("n1", a.iter().map(count_col).collect(), &mut names);
        push("fn", b.iter().map(count_col).collect(), &mut names);
    }
    if let (Some(a), Some(b)) = (&n2, &tn_cols) {
        push("n2", a.iter().map(count_col).collect(), &mut names);
        push("tn", b.iter().map(count_col).collect(), &mut names);
    }
    let measure_names = ["se", "sp", "npv", "accuracy", "prevalence"];
    match (&fn_cols, &tn_cols) {
        (Some(f), Some(t)) => {
            let add = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<u64>>();
            push("n_minus", f.iter().zip(t).map(|(a, b)| Column::Count(add(a, b))).collect(), &mut names);
            let (n1, n2) = (n1.as_ref().unwrap(), n2.as_ref().unwrap());
            push("total", n1.iter().zip(n2).map(|(a, b)| Column::Count(add(a, b))).collect(), &mut names);
            let per_draw: Vec<Vec<Measures>> = f
                .iter()
                .zip(t)
                .map(|(fc, tc)| fc.iter().zip(tc).map(|(&f, &t)| measures_from_counts(&CellCounts::new(tp, fp, f, t))).collect())
                .collect();
            let pick: [fn(&Measures) -> Option<f64>; 5] =
                [|m| m.se, |m| m.sp, |m| m.npv, |m| m.accuracy, |m| m.prevalence];
            for (name, get) in measure_names.into_iter().zip(pick) {
                push(name, per_draw.iter().map(|c| Column::Measure(c.iter().map(get).collect())).collect(), &mut names);
            }
        }
        (Some(_), None) => {
            let n1 = n1.as_ref().unwrap();
            push(
                "se",
                n1.iter().map(|c| Column::Measure(c.iter().map(|&n| defined_ratio(tp, n)).collect())).collect(),
                &mut names,
            );
        }
        (None, Some(t)) => {
            let n2 = n2.as_ref().unwrap();
            push(
                "sp",
                n2.iter()
                    .zip(t)
                    .map(|(a, b)| Column::Measure(a.iter().zip(b).map(|(&n, &tn)| defined_ratio(tn, n)).collect()))
                    .collect(),
                &mut names,
            );
        }
        (None, None) => unreachable!(),
    }

    let chains = draws
        .chains()
        .iter()
        .zip(per_chain)
        .map(|(ch, columns)| ChainDraws { iterations: ch.iterations.clone(), columns })
        .collect();
    let matrix = DrawMatrix::new(names.iter().map(|s| s.to_string()).collect(), chains)?;
    let summary = summarize(&matrix)?;
    let est = |name: &str| summary.get(name).map(Estimate::from_summary);
    Ok(Reconstruction {
        tp,
        fp,
        fn_: est("fn"),
        tn: est("tn"),
        n1: est("n1"),
        n2: est("n2"),
        n_minus: est("n_minus"),
        total: est("total"),
        measures: measure_names
            .iter()
            .filter_map(|&n| summary.get(n).map(|s| (n.to_string(), Estimate::from_summary(s))))
            .collect(),
        observed_ppv: defined_ratio(tp, tp + fp),
    })
}

fn diagnostic_json(d: &Diagnostic<f64>) -> Value {
    match d {
        Diagnostic::Value(v) => json!(v),
        other => json!(other.to_string()),
    }
}

fn param_json(p: &ParamSummary) -> Value {
    json!({
        "name": p.name,
        "is_count": p.is_count,
        "defined": p.defined,
        "mean": p.mean,
        "sd": p.sd,
        "q025": p.q025,
        "median": p.q50,
        "q975": p.q975,
        "ess": diagnostic_json(&p.ess),
        "split_rhat": diagnostic_json(&p.split_rhat),
        "mcse": diagnostic_json(&p.mcse),
    })
}

fn estimate_json(e: &Option<Estimate>) -> Value {
    match e {
        Some(e) => json!({
            "rounded_mean": e.rounded(),
            "mean": e.mean,
            "median": e.median,
            "q025": e.q025,
            "q975": e.q975,
        }),
        None => Value::Null,
    }
}

pub fn reconstruction_json(r: &Reconstruction) -> Value {
    let measures: serde_json::Map<String, Value> = r
        .measures
        .iter()
        .map(|(n, e)| (n.clone(), json!({ "mean": e.mean, "median": e.median, "q025": e.q025, "q975": e.q975, "defined": e.defined })))
        .collect();
    json!({
        "tp": r.tp,
        "fp": r.fp,
        "fn": estimate_json(&r.fn_),
        "tn": estimate_json(&r.tn),
        "n1": estimate_json(&r.n1),
        "n2": estimate_json(&r.n2),
        "n_minus": estimate_json(&r.n_minus),
        "N": estimate_json(&r.total),
        "measures": measures,
        "observed_ppv": r.observed_ppv,
    })
}

/// The summary document written next to the draws.
pub fn summary_json(command: &str, config: Option<&Value>, summary: &PosteriorSummary, draws: &DrawMatrix, rec: Option<&Reconstruction>) -> Value {
    json!({
        "command": command,
        "config": config,
        "chains": draws.n_chains(),
        "total_draws": summary.total_draws,
        "parameters": summary.params.iter().map(param_json).collect::<Vec<_>>(),
        "reconstruction": rec.map(reconstruction_json),
    })
}

fn diag(d: &Diagnostic<f64>, decimals: usize) -> String {
    match d {
        Diagnostic::Value(v) => format!("{v:.decimals$}"),
        Diagnostic::Degenerate => "degen".into(),
        Diagnostic::InsufficientDraws => "n/a".into(),
    }
}

pub fn render_parameters(summary: &PosteriorSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:>12} {:>12} {:>12} {:>12} {:>12} {:>10} {:>7}",
        "parameter", "mean", "sd", "2.5%", "50%", "97.5%", "ess", "rhat"
    );
    for p in &summary.params {
        let q = |v: f64| if p.is_count { format!("{v:.0}") } else { format!("{v:.4}") };
        let _ = writeln!(
            out,
            "{:<18} {:>12.4} {:>12.4} {:>12} {:>12} {:>12} {:>10} {:>7}",
            p.name,
            p.mean,
            p.sd,
            q(p.q025),
            q(p.q50),
            q(p.q975),
            diag(&p.ess, 0),
            diag(&p.split_rhat, 3)
        );
    }
    out
}

fn cell(e: &Option<Estimate>) -> String {
    match e {
        Some(e) if e.q025 == e.q975 => format!("{}", e.rounded()),
        Some(e) => format!("{} [{:.0}, {:.0}]", e.rounded(), e.q025, e.q975),
        None => "?".into(),
    }
}

pub fn render_reconstruction(r: &Reconstruction) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "reconstructed table: posterior mean rounded [95% interval]");
    let _ = writeln!(out, "{:<15} {:>20} {:>20} {:>20}", "", "diseased", "non-diseased", "total");
    let _ = writeln!(out, "{:<15} {:>20} {:>20} {:>20}", "test positive", r.tp, r.fp, r.tp + r.fp);
    let _ = writeln!(out, "{:<15} {:>20} {:>20} {:>20}", "test negative", cell(&r.fn_), cell(&r.tn), cell(&r.n_minus));
    let _ = writeln!(out, "{:<15} {:>20} {:>20} {:>20}", "total", cell(&r.n1), cell(&r.n2), cell(&r.total));
    let _ = writeln!(out);
    if let Some(ppv) = r.observed_ppv {
        let _ = writeln!(out, "observed ppv {ppv:.4} ({}/{})", r.tp, r.tp + r.fp);
    }
    for (name, e) in &r.measures {
        let _ = writeln!(out, "{name:<12} mean {:.4}  median {:.4}  95% [{:.4}, {:.4}]", e.mean, e.median, e.q025, e.q975);
    }
    out
}

/// Append the resolved config so the report is enough to re-run.
pub fn with_config_echo(mut report: String, config_toml: &str) -> String {
    report.push_str("\nresolved config:\n");
    for line in config_toml.lines() {
        report.push_str("  ");
        report.push_str(line);
        report.push('\n');
    }
    report
}
