//! JSON scenario configuration (`"schema": 1`).

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{AttributeSpec, FedorovOptions, PriorSpec};
use crate::error::{Error, Result};
use crate::estimate::halton::DEFAULT_BURN;
use crate::estimate::ModelKind;
use crate::population::{CovariateSpec, ParameterModel};
use crate::simulate::{Factor, UtilitySpec};

pub const SCHEMA_VERSION: u32 = 1;

/// The rose case study shipped with the crate.
pub const ROSE_CONFIG: &str = include_str!("../../scenarios/rose.json");
/// Rose attributes with a normally distributed label coefficient.
pub const ROSE_MIXED_CONFIG: &str = include_str!("../../scenarios/rose_mixed.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub seed: u64,
    pub attributes: Vec<AttributeSpec>,
    pub design: DesignBlock,
    pub population: PopulationBlock,
    pub utility: UtilitySpec,
    #[serde(default)]
    pub estimation: EstimationBlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    FullFactorial,
    Fedorov,
    Imported,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBlock {
    pub mode: DesignMode,
    pub n_sets: usize,
    /// Alternatives per set, opt-out included.
    pub n_alternatives: usize,
    pub include_optout: bool,
    /// Source file for `imported` mode.
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub fedorov: FedorovBlock,
    /// Defaults to the population's central taste vector.
    #[serde(default)]
    pub prior: Option<PriorBlock>,
    /// Covariate sample size used to average the information matrix.
    #[serde(default = "default_design_agents")]
    pub n_design_agents: usize,
}

fn default_design_agents() -> usize {
    100
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FedorovBlock {
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_sweeps() -> usize {
    20
}

fn default_restarts() -> usize {
    4
}

impl Default for FedorovBlock {
    fn default() -> Self {
        Self { max_sweeps: default_sweeps(), restarts: default_restarts() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorBlock {
    Fixed {
        beta: BTreeMap<String, f64>,
    },
    Bayesian {
        mean: BTreeMap<String, f64>,
        #[serde(default)]
        sd: BTreeMap<String, f64>,
        n_draws: usize,
        #[serde(default = "default_true")]
        quasi_random: bool,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationBlock {
    pub n_agents: usize,
    #[serde(default)]
    pub covariates: Vec<CovariateSpec>,
    pub parameters: ParametersBlock,
    /// Reserved; correlated covariates are not supported.
    #[serde(default)]
    pub covariate_correlation: Option<serde_json::Value>,
    #[serde(default)]
    pub randomize_set_order: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correlation {
    pub a: String,
    pub b: String,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ParametersBlock {
    Fixed {
        beta: BTreeMap<String, f64>,
    },
    Random {
        mu: BTreeMap<String, f64>,
        sd: BTreeMap<String, f64>,
        #[serde(default)]
        correlations: Vec<Correlation>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaltonBlock {
    #[serde(default = "default_halton_draws")]
    pub n_draws: usize,
    #[serde(default = "default_burn")]
    pub burn: usize,
}

fn default_halton_draws() -> usize {
    500
}

fn default_burn() -> usize {
    DEFAULT_BURN
}

impl Default for HaltonBlock {
    fn default() -> Self {
        Self { n_draws: default_halton_draws(), burn: default_burn() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WtpBlock {
    pub attribute: String,
    pub price: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationBlock {
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub random_coefficients: Vec<String>,
    #[serde(default)]
    pub halton: HaltonBlock,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub wtp: Vec<WtpBlock>,
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Mnl]
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    100
}

impl Default for EstimationBlock {
    fn default() -> Self {
        Self {
            models: default_models(),
            random_coefficients: Vec::new(),
            halton: HaltonBlock::default(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            wtp: Vec::new(),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_json(&text)
    }

    pub fn rose() -> Self {
        Self::from_json(ROSE_CONFIG).expect("shipped rose config is valid")
    }

    pub fn rose_mixed() -> Self {
        Self::from_json(ROSE_MIXED_CONFIG).expect("shipped mixed rose config is valid")
    }

    pub fn coef_names(&self) -> Vec<String> {
        self.utility.coef_names()
    }

    pub fn j_non_optout(&self) -> usize {
        self.design.n_alternatives - usize::from(self.design.include_optout)
    }

    /// Referential integrity across blocks; runs before any work.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(cfg_err(format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema)));
        }
        if self.attributes.is_empty() {
            return Err(cfg_err("at least one attribute is required"));
        }
        for (i, a) in self.attributes.iter().enumerate() {
            a.validate().map_err(|e| cfg_err(e.to_string()))?;
            if self.attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(cfg_err(format!("duplicate attribute `{}`", a.name)));
            }
        }
        let d = &self.design;
        if d.n_alternatives < 2 {
            return Err(cfg_err(format!("n_alternatives must be at least 2, got {}", d.n_alternatives)));
        }
        if d.n_sets < 1 {
            return Err(cfg_err("n_sets must be at least 1"));
        }
        if d.mode == DesignMode::Imported && d.path.is_none() {
            return Err(cfg_err("imported design mode requires `path`"));
        }
        if d.n_design_agents < 1 {
            return Err(cfg_err("n_design_agents must be at least 1"));
        }
        if d.fedorov.restarts < 1 {
            return Err(cfg_err("fedorov.restarts must be at least 1"));
        }
        let p = &self.population;
        if p.n_agents < 1 {
            return Err(cfg_err("n_agents must be at least 1"));
        }
        if p.covariate_correlation.as_ref().is_some_and(|v| !v.is_null()) {
            return Err(cfg_err(
                "covariate_correlation is reserved: correlated covariates are not supported, covariates are generated independently",
            ));
        }
        for (i, c) in p.covariates.iter().enumerate() {
            c.validate()?;
            if p.covariates[..i].iter().any(|o| o.name == c.name) {
                return Err(cfg_err(format!("duplicate covariate `{}`", c.name)));
            }
        }
        let covariate_names: Vec<String> = p.covariates.iter().map(|c| c.name.clone()).collect();
        let attribute_names: Vec<String> = self.attributes.iter().map(|a| a.name.clone()).collect();
        self.utility
            .compile(&attribute_names, &covariate_names)
            .map_err(|e| cfg_err(e.to_string()))?;
        for t in &self.utility.terms {
            if let crate::simulate::AppliesTo::Slots(s) = &t.applies_to {
                if let Some(bad) = s.iter().find(|&&x| x >= d.n_alternatives) {
                    return Err(cfg_err(format!("term `{}` applies to slot {bad}, sets have {}", t.coef, d.n_alternatives)));
                }
            }
            if t.factors.iter().any(|f| matches!(f, Factor::Covariate(_))) && t.factors.iter().all(|f| !matches!(f, Factor::Attribute(_))) && !d.include_optout && matches!(t.applies_to, crate::simulate::AppliesTo::AllNonOptout) {
                return Err(cfg_err(format!(
                    "term `{}` is constant across alternatives without an opt-out and cannot be identified",
                    t.coef
                )));
            }
        }
        self.parameter_model()?;
        self.prior()?;
        let e = &self.estimation;
        if e.models.is_empty() {
            return Err(cfg_err("estimation.models must list at least one model"));
        }
        if e.models.contains(&ModelKind::Mmnl) && e.random_coefficients.is_empty() {
            return Err(cfg_err("mmnl requires a non-empty estimation.random_coefficients"));
        }
        self.random_indices()?;
        if e.halton.n_draws < 1 {
            return Err(cfg_err("halton.n_draws must be at least 1"));
        }
        if !(e.tol > 0.0) || e.max_iter < 1 {
            return Err(cfg_err("estimation tol must be positive and max_iter at least 1"));
        }
        for w in &e.wtp {
            for name in [&w.attribute, &w.price] {
                if self.utility.index_of(name).is_none() {
                    return Err(cfg_err(format!("wtp references unknown coefficient `{name}`")));
                }
            }
        }
        Ok(())
    }

    fn resolve(&self, map: &BTreeMap<String, f64>, what: &str, complete: bool) -> Result<Vec<f64>> {
        for key in map.keys() {
            if self.utility.index_of(key).is_none() {
                return Err(cfg_err(format!("{what} names unknown coefficient `{key}`")));
            }
        }
        self.coef_names()
            .iter()
            .map(|c| match map.get(c) {
                Some(&v) if v.is_finite() => Ok(v),
                Some(_) => Err(cfg_err(format!("{what} value for `{c}` is not finite"))),
                None if complete => Err(cfg_err(format!("{what} has no value for coefficient `{c}`"))),
                None => Ok(0.0),
            })
            .collect()
    }

    /// Data-generating taste model in utility column order.
    pub fn parameter_model(&self) -> Result<ParameterModel> {
        match &self.population.parameters {
            ParametersBlock::Fixed { beta } => Ok(ParameterModel::Fixed {
                beta: self.resolve(beta, "population.parameters.fixed.beta", true)?,
            }),
            ParametersBlock::Random { mu, sd, correlations } => {
                let mu = self.resolve(mu, "population.parameters.random.mu", true)?;
                let sdv = self.resolve(sd, "population.parameters.random.sd", false)?;
                if sdv.iter().any(|&s| s < 0.0) {
                    return Err(cfg_err("random sd values must be nonnegative"));
                }
                let k = mu.len();
                let mut sigma = DMatrix::<f64>::zeros(k, k);
                for i in 0..k {
                    sigma[(i, i)] = sdv[i] * sdv[i];
                }
                for c in correlations {
                    let (Some(a), Some(b)) = (self.utility.index_of(&c.a), self.utility.index_of(&c.b)) else {
                        return Err(cfg_err(format!("correlation names unknown coefficient `{}`/`{}`", c.a, c.b)));
                    };
                    if !(-1.0..=1.0).contains(&c.rho) || a == b {
                        return Err(cfg_err("correlations need distinct coefficients and rho in [-1, 1]"));
                    }
                    sigma[(a, b)] = c.rho * sdv[a] * sdv[b];
                    sigma[(b, a)] = sigma[(a, b)];
                }
                let random_mask: Vec<usize> = (0..k).filter(|&i| sdv[i] > 0.0).collect();
                let model = ParameterModel::Random { mu, sigma, random_mask };
                model.validate()?;
                if let ParameterModel::Random { sigma, .. } = &model {
                    crate::population::cholesky(sigma).map_err(|e| cfg_err(format!("population covariance: {e}")))?;
                }
                Ok(model)
            }
        }
    }

    /// Design prior; defaults to the population's central taste vector.
    pub fn prior(&self) -> Result<PriorSpec> {
        match &self.design.prior {
            None => Ok(PriorSpec::Fixed { beta: self.parameter_model()?.center().to_vec() }),
            Some(PriorBlock::Fixed { beta }) => Ok(PriorSpec::Fixed {
                beta: self.resolve(beta, "design.prior.fixed.beta", true)?,
            }),
            Some(PriorBlock::Bayesian { mean, sd, n_draws, quasi_random }) => {
                if *n_draws < 1 {
                    return Err(cfg_err("design.prior.bayesian.n_draws must be at least 1"));
                }
                let mean = self.resolve(mean, "design.prior.bayesian.mean", true)?;
                let sdv = self.resolve(sd, "design.prior.bayesian.sd", false)?;
                if sdv.iter().any(|&s| s < 0.0) {
                    return Err(cfg_err("prior sd values must be nonnegative"));
                }
                let covariance = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(sdv.len(), sdv.iter().map(|s| s * s)));
                Ok(PriorSpec::Bayesian { mean, covariance, n_draws: *n_draws, quasi_random: *quasi_random })
            }
        }
    }

    /// Utility-column indices of the random coefficients.
    pub fn random_indices(&self) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for name in &self.estimation.random_coefficients {
            let i = self
                .utility
                .index_of(name)
                .ok_or_else(|| cfg_err(format!("random coefficient `{name}` is not in the utility spec")))?;
            if out.contains(&i) {
                return Err(cfg_err(format!("random coefficient `{name}` listed twice")));
            }
            out.push(i);
        }
        Ok(out)
    }

    pub fn fedorov_options(&self) -> FedorovOptions {
        FedorovOptions {
            max_sweeps: self.design.fedorov.max_sweeps,
            restarts: self.design.fedorov.restarts,
            ..FedorovOptions::default()
        }
    }
}
