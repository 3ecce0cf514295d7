use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::population::normal::{normal_cdf, normal_quantile};
use crate::rng::{open_uniform, unit_uniform, SeedStream, Stage};
use crate::table::RowMatrix;

/// Distribution of one socioeconomic covariate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CovariateGenerator {
    /// Draw `u ~ U(0,1)` and emit 1 when `u < p`.
    ThresholdBinary { p: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Normal, optionally truncated from below.
    Normal {
        mean: f64,
        sd: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<f64>,
    },
    Categorical { levels: Vec<f64>, probs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateSpec {
    pub name: String,
    pub generator: CovariateGenerator,
}

impl CovariateSpec {
    pub fn new(name: impl Into<String>, generator: CovariateGenerator) -> Self {
        Self {
            name: name.into(),
            generator,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("covariate `{}`: {msg}", self.name)));
        match &self.generator {
            CovariateGenerator::ThresholdBinary { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("p = {p} outside [0, 1]"));
                }
            }
            CovariateGenerator::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return bad(format!("uniform requires lo < hi, got [{lo}, {hi}]"));
                }
            }
            CovariateGenerator::Normal { mean, sd, lower } => {
                if !(*sd >= 0.0) || !mean.is_finite() {
                    return bad(format!("normal requires finite mean and sd >= 0, got sd = {sd}"));
                }
                if let Some(lo) = lower {
                    if *sd == 0.0 && mean < lo {
                        return bad("degenerate normal lies below its truncation point".into());
                    }
                }
            }
            CovariateGenerator::Categorical { levels, probs } => {
                if levels.is_empty() || levels.len() != probs.len() {
                    return bad("categorical needs matching non-empty levels and probs".into());
                }
                if probs.iter().any(|&p| !(p >= 0.0)) {
                    return bad("categorical probabilities must be nonnegative".into());
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("categorical probabilities sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.generator {
            CovariateGenerator::ThresholdBinary { p } => {
                if unit_uniform(rng) < *p {
                    1.0
                } else {
                    0.0
                }
            }
            CovariateGenerator::Uniform { lo, hi } => lo + (hi - lo) * unit_uniform(rng),
            CovariateGenerator::Normal { mean, sd, lower } => {
                let u = open_uniform(rng);
                if *sd == 0.0 {
                    return *mean;
                }
                match lower {
                    None => mean + sd * normal_quantile(u),
                    Some(lo) => {
                        let f_lo = normal_cdf((lo - mean) / sd);
                        let x = mean + sd * normal_quantile(f_lo + u * (1.0 - f_lo));
                        x.max(*lo)
                    }
                }
            }
            CovariateGenerator::Categorical { levels, probs } => {
                let u = unit_uniform(rng);
                let mut acc = 0.0;
                for (level, p) in levels.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *level;
                    }
                }
                *levels.last().expect("validated non-empty")
            }
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.generator, CovariateGenerator::ThresholdBinary { .. })
    }
}

/// Generate an `n x C` covariate table. Agent `r` draws every column, in
/// spec order, from its own substream.
pub fn generate_covariates(specs: &[CovariateSpec], n: usize, seeds: SeedStream) -> Result<RowMatrix> {
    if n == 0 {
        return Err(Error::Argument("population size must be at least 1".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let rows = par::map_indexed(n, |r| {
        let mut rng = seeds.substream(Stage::Covariates, r as u64);
        specs.iter().map(|s| s.draw(&mut rng)).collect::<Vec<f64>>()
    });
    Ok(RowMatrix::from_rows(rows, specs.len()))
}
