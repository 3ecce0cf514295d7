//! MNL information matrix, D-error and Bayesian D-error.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::design::types::{Alternative, ChoiceSet, Design};
use crate::error::{Error, Result};
use crate::par;
use crate::population::cholesky::cholesky;
use crate::population::params::{affine_draws, NormalSource};
use crate::population::AgentPopulation;
use crate::rng::{SeedStream, Stage};
use crate::simulate::logit::logit_probabilities;
use crate::simulate::utility::{AltView, CompiledUtility, UtilitySpec};

/// Relative eigenvalue floor below which the information matrix is singular.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum PriorSpec {
    Fixed {
        beta: Vec<f64>,
    },
    Bayesian {
        mean: Vec<f64>,
        covariance: DMatrix<f64>,
        n_draws: usize,
        /// Halton-mapped normals when true, pseudo-random otherwise.
        quasi_random: bool,
    },
}

impl PriorSpec {
    pub fn k(&self) -> usize {
        match self {
            PriorSpec::Fixed { beta } => beta.len(),
            PriorSpec::Bayesian { mean, .. } => mean.len(),
        }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            PriorSpec::Fixed { beta } => beta,
            PriorSpec::Bayesian { mean, .. } => mean,
        }
    }

    pub fn criterion(&self) -> Criterion {
        match self {
            PriorSpec::Fixed { .. } => Criterion::D,
            PriorSpec::Bayesian { .. } => Criterion::Db,
        }
    }

    /// Parameter vectors the criterion averages over.
    pub fn draws(&self, seeds: SeedStream) -> Result<Vec<Vec<f64>>> {
        match self {
            PriorSpec::Fixed { beta } => Ok(vec![beta.clone()]),
            PriorSpec::Bayesian { mean, covariance, n_draws, quasi_random } => {
                if *n_draws == 0 {
                    return Err(Error::Argument("bayesian prior needs n_draws >= 1".into()));
                }
                if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
                    return Err(Error::Argument("prior covariance does not match mean length".into()));
                }
                let l = cholesky(covariance)?;
                let source = if *quasi_random {
                    NormalSource::Halton { burn: crate::estimate::halton::DEFAULT_BURN }
                } else {
                    NormalSource::PseudoRandom(seeds)
                };
                let z = source.standard_normals(*n_draws, mean.len(), Stage::PriorDraws);
                let m = affine_draws(mean, &l, &z);
                Ok(m.iter_rows().map(<[f64]>::to_vec).collect())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    D,
    Db,
}

/// Design, compiled utility and the covariate rows the information is
/// averaged over.
pub struct InformationModel<'a> {
    utility: CompiledUtility,
    covariates: Vec<&'a [f64]>,
    optout_values: Vec<f64>,
}

impl<'a> InformationModel<'a> {
    pub fn new(design: &Design, spec: &UtilitySpec, agents: Option<&'a AgentPopulation>) -> Result<Self> {
        let covariate_names = agents.map(|a| a.covariate_names.clone()).unwrap_or_default();
        if spec.uses_covariates() && agents.is_none_or(|a| a.n() == 0) {
            return Err(Error::Schema(
                "utility spec uses covariates; an agent sample is required for the information matrix".into(),
            ));
        }
        let utility = spec.compile(&design.attribute_names(), &covariate_names)?;
        let covariates = match agents {
            Some(a) if spec.uses_covariates() => a.covariates.iter_rows().collect(),
            _ => vec![&[][..]],
        };
        Ok(Self {
            utility,
            covariates,
            optout_values: design.optout_values(),
        })
    }

    pub fn k(&self) -> usize {
        self.utility.k()
    }

    pub fn names(&self) -> &[String] {
        self.utility.names()
    }

    /// Agent-averaged information contribution of one choice set.
    pub fn set_information(&self, set: &ChoiceSet, beta: &[f64]) -> DMatrix<f64> {
        let k = self.k();
        let j = set.alternatives.len();
        let mut info = DMatrix::<f64>::zeros(k, k);
        let mut x = vec![0.0; j * k];
        let mut v = vec![0.0; j];
        let mut centered = vec![0.0; k];
        for cov in &self.covariates {
            for (slot, alt) in set.alternatives.iter().enumerate() {
                let attrs = match alt {
                    Alternative::Profile(p) => p.values(),
                    Alternative::OptOut => &self.optout_values,
                };
                let view = AltView { slot, is_optout: alt.is_optout(), attributes: attrs };
                let row = &mut x[slot * k..(slot + 1) * k];
                self.utility.expand(cov, view, row);
                v[slot] = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            }
            let p = logit_probabilities(&v);
            let mut mean = vec![0.0; k];
            for slot in 0..j {
                for c in 0..k {
                    mean[c] += p[slot] * x[slot * k + c];
                }
            }
            for slot in 0..j {
                for c in 0..k {
                    centered[c] = x[slot * k + c] - mean[c];
                }
                for r in 0..k {
                    let w = p[slot] * centered[r];
                    if w == 0.0 {
                        continue;
                    }
                    for c in 0..k {
                        info[(r, c)] += w * centered[c];
                    }
                }
            }
        }
        info / self.covariates.len() as f64
    }

    pub fn information(&self, design: &Design, beta: &[f64]) -> DMatrix<f64> {
        let parts: Vec<DMatrix<f64>> = design.choice_sets().iter().map(|s| self.set_information(s, beta)).collect();
        sum_matrices(parts, self.k())
    }
}

pub(crate) fn sum_matrices(parts: Vec<DMatrix<f64>>, k: usize) -> DMatrix<f64> {
    par::tree_reduce(parts, |a, b| a + b).unwrap_or_else(|| DMatrix::zeros(k, k))
}

/// Expected Fisher information of the MNL likelihood for one respondent.
pub fn information_matrix(
    design: &Design,
    spec: &UtilitySpec,
    beta: &[f64],
    agents: Option<&AgentPopulation>,
) -> Result<DMatrix<f64>> {
    if beta.len() != spec.k() {
        return Err(Error::Argument(format!("beta has length {}, spec has {} terms", beta.len(), spec.k())));
    }
    let model = InformationModel::new(design, spec, agents)?;
    Ok(model.information(design, beta))
}

/// `det(info)^(-1/K)` via Cholesky; `+∞` when the matrix is singular.
pub fn criterion_value(info: &DMatrix<f64>) -> f64 {
    let k = info.nrows();
    let max_diag = (0..k).map(|i| info[(i, i)]).fold(0.0, f64::max);
    if !(max_diag > 0.0) {
        return f64::INFINITY;
    }
    let Some(chol) = info.clone().cholesky() else {
        return f64::INFINITY;
    };
    let l = chol.l_dirty();
    let mut log_det = 0.0;
    for i in 0..k {
        let d = l[(i, i)];
        if !(d * d > SINGULAR_TOL * max_diag) {
            return f64::INFINITY;
        }
        log_det += 2.0 * d.ln();
    }
    (-log_det / k as f64).exp()
}

/// Names of the coefficients spanning the null space of `info`.
pub fn deficient_parameters(info: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let eig = SymmetricEigen::new(info.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut flagged = vec![false; names.len()];
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= SINGULAR_TOL * scale || scale <= f64::MIN_POSITIVE {
            let v = eig.eigenvectors.column(i);
            for (c, f) in flagged.iter_mut().enumerate() {
                if v[c].abs() > 0.1 {
                    *f = true;
                }
            }
        }
    }
    let out: Vec<String> = names.iter().zip(&flagged).filter(|(_, &f)| f).map(|(n, _)| n.clone()).collect();
    if out.is_empty() {
        names.to_vec()
    } else {
        out
    }
}

/// Inverse of the information matrix, or a singularity error.
pub fn avc_matrix(info: &DMatrix<f64>, names: &[String]) -> Result<DMatrix<f64>> {
    if !criterion_value(info).is_finite() {
        return Err(Error::Singular { params: deficient_parameters(info, names) });
    }
    let inv = info.clone().cholesky().expect("checked positive definite").inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `det(AVC)^(1/K)` at a fixed prior.
pub fn d_error(design: &Design, spec: &UtilitySpec, beta: &[f64], agents: Option<&AgentPopulation>) -> Result<f64> {
    let info = information_matrix(design, spec, beta, agents)?;
    let value = criterion_value(&info);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Singular { params: deficient_parameters(&info, &spec.coef_names()) })
    }
}

/// Mean that is exact when every input is identical.
pub(crate) fn stable_mean(values: &[f64]) -> f64 {
    let x0 = values[0];
    if values.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let dev = par::tree_sum(values.iter().map(|v| v - x0).collect());
    x0 + dev / values.len() as f64
}

/// Mean D-error over prior draws. A singular draw makes the result a
/// singularity error.
pub fn db_error(
    design: &Design,
    spec: &UtilitySpec,
    prior: &PriorSpec,
    agents: Option<&AgentPopulation>,
    seeds: SeedStream,
) -> Result<f64> {
    if prior.k() != spec.k() {
        return Err(Error::Argument(format!("prior has {} parameters, spec has {}", prior.k(), spec.k())));
    }
    let model = InformationModel::new(design, spec, agents)?;
    let draws = prior.draws(seeds)?;
    let values = par::map_indexed(draws.len(), |r| criterion_value(&model.information(design, &draws[r])));
    if let Some(r) = values.iter().position(|v| !v.is_finite()) {
        let info = model.information(design, &draws[r]);
        return Err(Error::Singular { params: deficient_parameters(&info, model.names()) });
    }
    Ok(stable_mean(&values))
}

/// JSON-exportable efficiency summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub criterion: Criterion,
    pub d_error: f64,
    pub k: usize,
    pub coefficients: Vec<String>,
    /// Row-major `k x k` AVC at the prior center.
    pub avc: Vec<f64>,
    pub dominated_sets: Vec<usize>,
    /// Largest absolute pairwise correlation of attribute codes.
    pub orthogonality: Option<f64>,
}

impl EfficiencyReport {
    pub fn avc_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.k, self.k, &self.avc)
    }
}

/// Evaluate a design under a prior and package the result.
pub fn evaluate_design(
    design: &Design,
    spec: &UtilitySpec,
    prior: &PriorSpec,
    agents: Option<&AgentPopulation>,
    seeds: SeedStream,
) -> Result<EfficiencyReport> {
    let model = InformationModel::new(design, spec, agents)?;
    let info = model.information(design, prior.center());
    let avc = avc_matrix(&info, model.names())?;
    let value = match prior {
        PriorSpec::Fixed { .. } => criterion_value(&info),
        PriorSpec::Bayesian { .. } => db_error(design, spec, prior, agents, seeds)?,
    };
    let dominated = crate::design::dominance::check_dominance(design, spec, prior.center())?;
    let mut dominated_sets: Vec<usize> = dominated.iter().map(|d| d.0).collect();
    dominated_sets.dedup();
    let k = model.k();
    Ok(EfficiencyReport {
        criterion: prior.criterion(),
        d_error: value,
        k,
        coefficients: model.names().to_vec(),
        avc: (0..k).flat_map(|r| (0..k).map(move |c| (r, c))).map(|(r, c)| avc[(r, c)]).collect(),
        dominated_sets,
        orthogonality: orthogonality_diagnostic(design),
    })
}

/// Max absolute Pearson correlation between attribute columns over all
/// non-opt-out alternatives. `None` when fewer than two columns vary.
pub fn orthogonality_diagnostic(design: &Design) -> Option<f64> {
    let rows: Vec<&[f64]> = design
        .choice_sets()
        .iter()
        .flat_map(|s| s.alternatives.iter().filter_map(Alternative::profile))
        .map(|p| p.values())
        .collect();
    let m = design.attributes().len();
    let n = rows.len() as f64;
    let stats: Vec<(f64, f64)> = (0..m)
        .map(|c| {
            let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>();
            (mean, var)
        })
        .collect();
    let mut best: Option<f64> = None;
    for a in 0..m {
        for b in a + 1..m {
            let (ma, va) = stats[a];
            let (mb, vb) = stats[b];
            if va <= 0.0 || vb <= 0.0 {
                continue;
            }
            let cov: f64 = rows.iter().map(|r| (r[a] - ma) * (r[b] - mb)).sum();
            let rho = (cov / (va * vb).sqrt()).abs();
            best = Some(best.map_or(rho, |x| x.max(rho)));
        }
    }
    best
}
