//! Synthetic respondents: socioeconomic covariates and per-agent taste
//! vectors.

pub mod cholesky;
pub mod covariates;
pub mod io;
pub mod normal;
pub mod params;

pub use cholesky::cholesky;
pub use covariates::{generate_covariates, CovariateGenerator, CovariateSpec};
pub use normal::{normal_cdf, normal_quantile};
pub use params::{draw_parameters, NormalSource, ParameterModel};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::table::RowMatrix;

/// Covariates and taste vectors for `n` agents.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentPopulation {
    pub covariate_names: Vec<String>,
    pub covariates: RowMatrix,
    pub coef_names: Vec<String>,
    pub params: RowMatrix,
}

impl AgentPopulation {
    pub fn n(&self) -> usize {
        self.covariates.rows()
    }

    pub fn k(&self) -> usize {
        self.params.cols()
    }

    /// Generate covariates then taste vectors, both from `seeds`.
    pub fn generate(
        covariate_specs: &[CovariateSpec],
        coef_names: Vec<String>,
        model: &ParameterModel,
        n: usize,
        seeds: SeedStream,
    ) -> Result<Self> {
        if coef_names.len() != model.k() {
            return Err(Error::Argument(format!(
                "{} coefficient names for a {}-parameter model",
                coef_names.len(),
                model.k()
            )));
        }
        let covariates = generate_covariates(covariate_specs, n, seeds)?;
        let params = draw_parameters(model, n, NormalSource::PseudoRandom(seeds))?;
        Ok(Self {
            covariate_names: covariate_specs.iter().map(|c| c.name.clone()).collect(),
            covariates,
            coef_names,
            params,
        })
    }

    /// Covariate rows only, for averaging design information over agents.
    pub fn covariates_only(covariate_specs: &[CovariateSpec], n: usize, seeds: SeedStream) -> Result<Self> {
        Ok(Self {
            covariate_names: covariate_specs.iter().map(|c| c.name.clone()).collect(),
            covariates: generate_covariates(covariate_specs, n, seeds)?,
            coef_names: Vec::new(),
            params: RowMatrix::zeros(n, 0),
        })
    }
}
