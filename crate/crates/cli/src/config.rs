//! Run and simulation configuration files.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tablerecon::distributions::{BetaParams, GammaParams, NegBinParams};
use tablerecon::oracle::N1PriorOracle;
use tablerecon::samplers::{CountUpdate, JointInit, N1Prior, NegBinHyper, SingleRowInit, Truncation};
use tablerecon::tables::Scenario;
use tablerecon::{JointSpec, McmcSettings, PartialTable, SingleRowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleRow,
    SingleRowKnownN,
    JointFixedN,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::SingleRow => "single_row",
            ModelKind::SingleRowKnownN => "single_row_known_n",
            ModelKind::JointFixedN => "joint_fixed_n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationKind {
    #[default]
    Indicator,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountUpdateKind {
    #[default]
    Collapsed,
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum N1PriorVariant {
    Uniform,
    TruncPoisson,
    TruncNegbin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

/// Observed cells and margins. Unknown entries are left out.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tp: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fp: Option<u64>,
    #[serde(rename = "fn", skip_serializing_if = "Option::is_none")]
    pub fn_: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tn: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2: Option<u64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub total: Option<u64>,
}

impl DataConfig {
    pub fn partial_table(&self) -> PartialTable {
        PartialTable {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            tn: self.tn,
            n1: self.n1,
            n2: self.n2,
            total: self.total,
            scenario: Scenario::Custom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleRowInitConfig {
    pub n: u64,
    pub r: u64,
    pub lambda: f64,
    pub p: f64,
    pub pstar: f64,
}

impl Default for SingleRowInitConfig {
    fn default() -> Self {
        let d = SingleRowInit::default();
        Self { n: d.n, r: d.r, lambda: d.lambda, p: d.p, pstar: d.pstar }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegBinReduction {
    pub pstar: f64,
    pub r: f64,
}

/// Prior block for one stratum of the single-row model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumConfig {
    pub p_prior: BetaPrior,
    pub pstar_prior: BetaPrior,
    pub lambda_prior: GammaPrior,
    #[serde(default)]
    pub init: SingleRowInitConfig,
    /// Fixed `(p*, r)` used by `oracle` and by `fit --reduced`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<NegBinReduction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleRowConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diseased: Option<StratumConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondiseased: Option<StratumConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointInitConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

/// Fixed hyperparameters of the `n1` prior: `lambda` for the Poisson
/// variant, `p3` and `r` for the negative binomial.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointReduction {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    pub n1_prior_variant: N1PriorVariant,
    pub p1_prior: BetaPrior,
    pub p2_prior: BetaPrior,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_prior: Option<GammaPrior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p3_prior: Option<BetaPrior>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_prior: Option<GammaPrior>,
    #[serde(default)]
    pub init: JointInitConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<JointReduction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub chains: usize,
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        let d = McmcSettings::default();
        Self { chains: d.chains, iterations: d.iterations, burn_in: d.burn_in, thin: d.thin, seed: d.seed }
    }
}

impl McmcConfig {
    pub fn settings(&self) -> McmcSettings {
        McmcSettings {
            chains: self.chains,
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed,
        }
    }
}

/// Output file names, resolved against the `--out` directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub draws_path: String,
    pub summary_path: String,
    pub report_path: String,
    pub pmf_path: String,
    pub oracle_path: String,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            draws_path: "draws.csv".into(),
            summary_path: "summary.json".into(),
            report_path: "report.txt".into(),
            pmf_path: "pmf.csv".into(),
            oracle_path: "oracle.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub truncation: TruncationKind,
    #[serde(default)]
    pub count_update: CountUpdateKind,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_row: Option<SingleRowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointConfig>,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratum {
    Diseased,
    Nondiseased,
}

impl Stratum {
    pub fn suffix(&self) -> &'static str {
        match self {
            Stratum::Diseased => "diseased",
            Stratum::Nondiseased => "nondiseased",
        }
    }
}

/// Sampler inputs resolved from a [`RunConfig`].
#[derive(Debug, Clone)]
pub enum ResolvedModel {
    /// One spec per configured stratum.
    SingleRow(Vec<(Stratum, SingleRowSpec)>),
    Joint(JointSpec),
}

fn beta(p: &BetaPrior, field: &str) -> Result<BetaParams> {
    BetaParams::new(p.alpha, p.beta).with_context(|| format!("invalid `{field}`"))
}

fn gamma(p: &GammaPrior, field: &str) -> Result<GammaParams> {
    GammaParams::new(p.shape, p.rate).with_context(|| format!("invalid `{field}`"))
}

fn required<T: Copy>(v: Option<T>, field: &str, why: &str) -> Result<T> {
    v.with_context(|| format!("missing field `{field}` ({why})"))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("malformed config")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?).with_context(|| format!("in {}", path.display()))
    }

    /// The fully resolved config, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn truncation(&self) -> Truncation {
        match self.truncation {
            TruncationKind::Indicator => Truncation::Indicator,
            TruncationKind::Normalized => Truncation::Normalized,
        }
    }

    fn count_update(&self) -> CountUpdate {
        match self.count_update {
            CountUpdateKind::Collapsed => CountUpdate::Collapsed,
            CountUpdateKind::Conditional => CountUpdate::Conditional,
        }
    }

    /// Validate everything that does not need the sampler.
    pub fn check(&self) -> Result<()> {
        let violations = tablerecon::validate_partial(&self.data.partial_table());
        if let Some(v) = violations.first() {
            bail!("inconsistent data: {v}");
        }
        self.mcmc.settings().validate().context("invalid `mcmc`")?;
        self.resolve(false)?;
        Ok(())
    }

    /// Build the sampler specs. With `reduced`, fixed hyperparameters from
    /// the `reduction` blocks replace the hyperpriors.
    pub fn resolve(&self, reduced: bool) -> Result<ResolvedModel> {
        match self.model {
            ModelKind::SingleRow | ModelKind::SingleRowKnownN => self.resolve_single_row(reduced),
            ModelKind::JointFixedN => self.resolve_joint(reduced),
        }
    }

    fn resolve_single_row(&self, reduced: bool) -> Result<ResolvedModel> {
        let model = self.model.as_str();
        let blocks = required(self.single_row, "single_row", model)?;
        let upper = match self.model {
            ModelKind::SingleRowKnownN => Some(required(self.data.total, "N", model)?),
            _ => None,
        };
        let mut specs = Vec::new();
        for (stratum, block, y) in [
            (Stratum::Diseased, blocks.diseased, self.data.tp),
            (Stratum::Nondiseased, blocks.nondiseased, self.data.fp),
        ] {
            let Some(block) = block else { continue };
            let name = stratum.suffix();
            let y = required(y, if stratum == Stratum::Diseased { "tp" } else { "fp" }, name)?;
            let p_prior = beta(&block.p_prior, &format!("single_row.{name}.p_prior"))?;
            let pstar_prior = beta(&block.pstar_prior, &format!("single_row.{name}.pstar_prior"))?;
            let lambda_prior = gamma(&block.lambda_prior, &format!("single_row.{name}.lambda_prior"))?;
            let hyper = if reduced {
                let red = required(block.reduction, &format!("single_row.{name}.reduction"), "reduced fit")?;
                NegBinHyper::Fixed(
                    NegBinParams::new(red.pstar, red.r).with_context(|| format!("invalid `single_row.{name}.reduction`"))?,
                )
            } else {
                NegBinHyper::Hierarchical { pstar_prior, lambda_prior }
            };
            let i = block.init;
            let spec = SingleRowSpec {
                y,
                p_prior,
                hyper,
                upper_bound: upper,
                init: SingleRowInit { n: i.n, r: i.r, lambda: i.lambda, p: i.p, pstar: i.pstar },
                truncation: self.truncation(),
                count_update: self.count_update(),
            };
            spec.validate().with_context(|| format!("invalid `single_row.{name}`"))?;
            specs.push((stratum, spec));
        }
        if specs.is_empty() {
            bail!("missing field `single_row.diseased` or `single_row.nondiseased` ({model})");
        }
        Ok(ResolvedModel::SingleRow(specs))
    }

    fn resolve_joint(&self, reduced: bool) -> Result<ResolvedModel> {
        let model = self.model.as_str();
        let j = required(self.joint, "joint", model)?;
        let tp = required(self.data.tp, "tp", model)?;
        let fp = required(self.data.fp, "fp", model)?;
        let total = required(self.data.total, "N", model)?;
        let p1_prior = beta(&j.p1_prior, "joint.p1_prior")?;
        let p2_prior = beta(&j.p2_prior, "joint.p2_prior")?;
        let red = j.reduction.unwrap_or_default();
        let n1_prior = match (j.n1_prior_variant, reduced) {
            (N1PriorVariant::Uniform, _) => N1Prior::Uniform,
            (N1PriorVariant::TruncPoisson, false) => N1Prior::TruncPoisson {
                lambda_prior: gamma(&required(j.lambda_prior, "joint.lambda_prior", "trunc_poisson")?, "joint.lambda_prior")?,
            },
            (N1PriorVariant::TruncPoisson, true) => {
                N1Prior::PoissonFixed { lambda: required(red.lambda, "joint.reduction.lambda", "reduced fit")? }
            }
            (N1PriorVariant::TruncNegbin, false) => N1Prior::TruncNegBin {
                p3_prior: beta(&required(j.p3_prior, "joint.p3_prior", "trunc_negbin")?, "joint.p3_prior")?,
                r_prior: gamma(&required(j.r_prior, "joint.r_prior", "trunc_negbin")?, "joint.r_prior")?,
            },
            (N1PriorVariant::TruncNegbin, true) => N1Prior::NegBinFixed(
                NegBinParams::new(
                    required(red.p3, "joint.reduction.p3", "reduced fit")?,
                    required(red.r, "joint.reduction.r", "reduced fit")?,
                )
                .context("invalid `joint.reduction`")?,
            ),
        };
        let d = JointInit::default();
        let init = JointInit {
            n1: j.init.n1,
            r: j.init.r.unwrap_or(d.r),
            p1: j.init.p1.unwrap_or(d.p1),
            p2: j.init.p2.unwrap_or(d.p2),
            p3: j.init.p3.unwrap_or(d.p3),
            lambda: j.init.lambda.unwrap_or(d.lambda),
        };
        let spec = JointSpec {
            tp,
            fp,
            total,
            p1_prior,
            p2_prior,
            n1_prior,
            init,
            truncation: self.truncation(),
            count_update: self.count_update(),
        };
        spec.validate().context("invalid `joint`")?;
        Ok(ResolvedModel::Joint(spec))
    }

    /// Exact-posterior inputs: the joint prior on `n1`, or the fixed
    /// negative binomial per single-row stratum.
    pub fn oracle_prior(&self) -> Result<N1PriorOracle> {
        let j = required(self.joint, "joint", self.model.as_str())?;
        let red = j.reduction.unwrap_or_default();
        Ok(match j.n1_prior_variant {
            N1PriorVariant::Uniform => N1PriorOracle::Uniform,
            N1PriorVariant::TruncPoisson => match red.lambda {
                Some(l) => N1PriorOracle::PoissonFixed(l),
                None => N1PriorOracle::PoissonGammaMixture(gamma(
                    &required(j.lambda_prior, "joint.lambda_prior", "trunc_poisson")?,
                    "joint.lambda_prior",
                )?),
            },
            N1PriorVariant::TruncNegbin => match (red.p3, red.r) {
                (Some(p3), Some(r)) => {
                    N1PriorOracle::NegBinFixed(NegBinParams::new(p3, r).context("invalid `joint.reduction`")?)
                }
                _ => bail!("no exact oracle for hierarchical negbin; add `joint.reduction` with `p3` and `r`"),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimScenario {
    SingleRowOnly,
    RowPlusTotalN,
}

/// Repeated synthetic tables fitted with one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub replicates: u64,
    #[serde(rename = "N")]
    pub total: u64,
    pub prevalence: f64,
    pub se: f64,
    pub sp: f64,
    pub scenario: SimScenario,
    pub seed: u64,
    pub model: ModelKind,
    #[serde(default)]
    pub truncation: TruncationKind,
    #[serde(default)]
    pub count_update: CountUpdateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_row: Option<SingleRowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointConfig>,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default = "default_coverage_path")]
    pub coverage_path: String,
    #[serde(default = "default_replicates_path")]
    pub replicates_path: String,
}

fn default_coverage_path() -> String {
    "coverage.txt".into()
}

fn default_replicates_path() -> String {
    "replicates.csv".into()
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimulationConfig = toml::from_str(text).context("malformed simulation config")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            bail!("`replicates` must be at least 1");
        }
        if self.total < 2 {
            bail!("`N` must be at least 2");
        }
        for (name, v) in [("prevalence", self.prevalence), ("se", self.se), ("sp", self.sp)] {
            if !(0.0..=1.0).contains(&v) {
                bail!("`{name}` must lie in [0, 1], got {v}");
            }
        }
        match (self.scenario, self.model) {
            (SimScenario::SingleRowOnly, ModelKind::SingleRow) => {}
            (SimScenario::RowPlusTotalN, ModelKind::SingleRowKnownN | ModelKind::JointFixedN) => {}
            (s, m) => bail!("scenario {s:?} cannot be fitted with model `{}`", m.as_str()),
        }
        self.mcmc.settings().validate().context("invalid `mcmc`")?;
        // a representative table catches missing prior blocks up front
        let tp = (self.total / 2).max(1);
        self.run_config(tp, 0).resolve(false)?;
        Ok(())
    }

    /// The fit for one replicate: the diseased stratum only for single-row
    /// models, with `y = TP`.
    pub fn run_config(&self, tp: u64, fp: u64) -> RunConfig {
        let upper = (self.scenario == SimScenario::RowPlusTotalN).then_some(self.total);
        let single_row = self.single_row.map(|s| {
            let diseased = s.diseased.map(|mut d| {
                d.init.n = d.init.n.max(tp).min(upper.unwrap_or(u64::MAX));
                d
            });
            SingleRowConfig { diseased, nondiseased: None }
        });
        RunConfig {
            model: self.model,
            truncation: self.truncation,
            count_update: self.count_update,
            data: DataConfig {
                tp: Some(tp),
                fp: Some(fp),
                total: upper,
                ..Default::default()
            },
            single_row,
            joint: self.joint,
            mcmc: self.mcmc,
            outputs: OutputsConfig::default(),
        }
    }
}
