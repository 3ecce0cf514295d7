//! Multinomial logit by maximum likelihood.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::design::efficiency::deficient_parameters;
use crate::error::{Error, Result};
use crate::estimate::decisions::DecisionData;
use crate::estimate::result::{EstimationResult, ModelKind};
use crate::par;
use crate::simulate::logit::log_sum_exp;

/// Any coefficient beyond this magnitude signals separation.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct MnlEval {
    pub loglik: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MnlOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MnlOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 100 }
    }
}

/// Per-agent log-likelihood terms, used by both MNL and the mixed-logit
/// nesting check.
pub(crate) fn agent_loglik(data: &DecisionData, agent: usize, beta: &[f64], v: &mut Vec<f64>) -> f64 {
    let mut ll = 0.0;
    for d in data.agent_decisions(agent) {
        v.clear();
        v.extend((0..d.n_alts).map(|j| dot(data.row(d, j), beta)));
        ll += v[d.chosen] - log_sum_exp(v);
    }
    ll
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log-likelihood only.
pub fn mnl_loglik_value(data: &DecisionData, beta: &[f64]) -> f64 {
    let parts = par::map_indexed(data.n_agents(), |a| agent_loglik(data, a, beta, &mut Vec::new()));
    par::tree_sum(parts)
}

/// Log-likelihood with analytic gradient and Hessian.
pub fn mnl_loglik(data: &DecisionData, beta: &[f64]) -> MnlEval {
    let k = data.k();
    assert_eq!(beta.len(), k, "beta length");
    let parts = par::map_indexed(data.n_agents(), |a| {
        let mut ll = 0.0;
        let mut grad = vec![0.0; k];
        let mut hess = vec![0.0; k * k];
        let mut v = Vec::new();
        let mut p = Vec::new();
        let mut mean = vec![0.0; k];
        for d in data.agent_decisions(a) {
            v.clear();
            v.extend((0..d.n_alts).map(|j| dot(data.row(d, j), beta)));
            let lse = log_sum_exp(&v);
            ll += v[d.chosen] - lse;
            p.clear();
            p.extend(v.iter().map(|x| (x - lse).exp()));
            mean.iter_mut().for_each(|m| *m = 0.0);
            for j in 0..d.n_alts {
                for (m, x) in mean.iter_mut().zip(data.row(d, j)) {
                    *m += p[j] * x;
                }
            }
            for (g, (x, m)) in grad.iter_mut().zip(data.row(d, d.chosen).iter().zip(&mean)) {
                *g += x - m;
            }
            for j in 0..d.n_alts {
                let x = data.row(d, j);
                for r in 0..k {
                    let w = p[j] * (x[r] - mean[r]);
                    if w == 0.0 {
                        continue;
                    }
                    for c in 0..k {
                        hess[r * k + c] -= w * (x[c] - mean[c]);
                    }
                }
            }
        }
        let mut packed = Vec::with_capacity(1 + k + k * k);
        packed.push(ll);
        packed.extend(grad);
        packed.extend(hess);
        packed
    });
    let total = par::tree_sum_vecs(parts, 1 + k + k * k);
    let hessian = DMatrix::from_row_slice(k, k, &total[1 + k..]);
    MnlEval {
        loglik: total[0],
        gradient: DVector::from_row_slice(&total[1..1 + k]),
        hessian: (&hessian + hessian.transpose()) * 0.5,
    }
}

/// Coefficient directions along which the likelihood increases without
/// bound: the chosen alternative always sits at the extreme of `x_k`.
fn separated_coefficients(data: &DecisionData) -> Vec<usize> {
    (0..data.k())
        .filter(|&c| {
            let mut low = true;
            let mut high = true;
            let mut strict_low = false;
            let mut strict_high = false;
            for d in data.decisions() {
                let xc = data.row(d, d.chosen)[c];
                for j in 0..d.n_alts {
                    let xj = data.row(d, j)[c];
                    if xc > xj {
                        low = false;
                        strict_high = true;
                    }
                    if xc < xj {
                        high = false;
                        strict_low = true;
                    }
                }
                if !low && !high {
                    return false;
                }
            }
            (low && strict_low) || (high && strict_high)
        })
        .collect()
}

/// Max eigenvalue of a negative semidefinite matrix relative to its scale.
pub fn is_negative_semidefinite(h: &DMatrix<f64>) -> bool {
    let eig = SymmetricEigen::new(h.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    max <= 1e-8 * min.abs()
}

pub(crate) fn check_identified(data: &DecisionData) -> Result<()> {
    let info = -mnl_loglik(data, &vec![0.0; data.k()]).hessian;
    if !crate::design::efficiency::criterion_value(&info).is_finite() {
        return Err(Error::Identification {
            coefs: deficient_parameters(&info, data.names()),
        });
    }
    Ok(())
}

/// Newton-Raphson with step halving from `beta = 0`.
pub fn fit_mnl(data: &DecisionData, options: MnlOptions) -> Result<EstimationResult> {
    if data.n_decisions() == 0 {
        return Err(Error::Integrity("no decisions to estimate from".into()));
    }
    check_identified(data)?;
    let separated = separated_coefficients(data);
    if !separated.is_empty() {
        return Err(Error::Separation {
            coefs: separated.iter().map(|&c| data.names()[c].clone()).collect(),
        });
    }
    let k = data.k();
    let mut beta = vec![0.0; k];
    let mut eval = mnl_loglik(data, &beta);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iter {
        if eval.gradient.amax() < options.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let neg_h = -&eval.hessian;
        let step = match neg_h.clone().cholesky() {
            Some(ch) => ch.solve(&eval.gradient),
            None => eval.gradient.clone(),
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + t * s).collect();
            let ll = mnl_loglik_value(data, &trial);
            if ll >= eval.loglik {
                accepted = Some(trial);
                break;
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            break;
        };
        let diverged: Vec<String> = next
            .iter()
            .zip(data.names())
            .filter(|(b, _)| b.abs() > DIVERGENCE_LIMIT)
            .map(|(_, n)| n.clone())
            .collect();
        if !diverged.is_empty() {
            return Err(Error::Separation { coefs: diverged });
        }
        beta = next;
        eval = mnl_loglik(data, &beta);
    }
    if !converged && eval.gradient.amax() < options.tol {
        converged = true;
    }
    let avc = crate::estimate::result::invert_negative_hessian(&eval.hessian);
    Ok(EstimationResult::new(
        ModelKind::Mnl,
        data.names().to_vec(),
        beta,
        avc,
        eval.loglik,
        data.n_decisions(),
        converged,
        iterations,
    ))
}
