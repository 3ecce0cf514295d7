//! Mixed logit by maximum simulated likelihood.
//!
//! `P̂_n = (1/R) Σ_r Π_s L_{n,s}(β_r)` with `β_r = mu + diag(sd)·z_r`; one
//! taste vector per agent and draw, shared across the agent's choice sets.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimate::decisions::DecisionData;
use crate::estimate::halton::{halton_block, HaltonSpec};
use crate::estimate::mnl::{dot, fit_mnl, MnlOptions};
use crate::estimate::optim::{minimize_bfgs, BfgsOptions};
use crate::estimate::result::{invert_negative_hessian, EstimationResult, MixingResult, ModelKind};
use crate::par;
use crate::population::normal::normal_quantile;
use crate::rng::{open_uniform, SeedStream, Stage};
use crate::simulate::logit::log_sum_exp;

/// Standard deviations under this count as a boundary solution.
pub const SD_BOUNDARY: f64 = 1e-6;
const START_SD: f64 = 0.1;

/// Standard normal draws, `per_agent` rows of `dims` for each agent.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationDraws {
    n_agents: usize,
    per_agent: usize,
    dims: usize,
    z: Vec<f64>,
}

impl SimulationDraws {
    /// Agent `n` takes Halton rows `n·R .. (n+1)·R` after the burn-in.
    pub fn halton(spec: &HaltonSpec, n_agents: usize) -> Result<Self> {
        spec.validate()?;
        let pts = halton_block(spec.dims, spec.burn, 0, n_agents * spec.n_draws);
        let z = pts.iter_rows().flatten().map(|&u| normal_quantile(u)).collect();
        Ok(Self { n_agents, per_agent: spec.n_draws, dims: spec.dims, z })
    }

    /// Agent `n` draws from substream `(seed, MixingDraws, n)`.
    pub fn pseudo_random(seeds: SeedStream, n_agents: usize, per_agent: usize, dims: usize) -> Self {
        let blocks = par::map_indexed(n_agents, |a| {
            let mut rng = seeds.substream(Stage::MixingDraws, a as u64);
            (0..per_agent * dims).map(|_| normal_quantile(open_uniform(&mut rng))).collect::<Vec<_>>()
        });
        Self { n_agents, per_agent, dims, z: blocks.into_iter().flatten().collect() }
    }

    pub fn per_agent(&self) -> usize {
        self.per_agent
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    fn agent(&self, a: usize) -> &[f64] {
        let len = self.per_agent * self.dims;
        &self.z[a * len..(a + 1) * len]
    }
}

#[derive(Clone, Debug)]
pub struct MmnlEval {
    pub loglik: f64,
    /// `∂/∂mu`, length K.
    pub grad_mu: Vec<f64>,
    /// `∂/∂sd`, one per random coefficient.
    pub grad_sd: Vec<f64>,
}

fn check_inputs(data: &DecisionData, random: &[usize], mu: &[f64], sd: &[f64], draws: &SimulationDraws) -> Result<()> {
    if mu.len() != data.k() {
        return Err(Error::Argument(format!("mu has length {}, model has {}", mu.len(), data.k())));
    }
    if random.is_empty() {
        return Err(Error::Argument("mixed logit needs at least one random coefficient".into()));
    }
    if sd.len() != random.len() || draws.dims() != random.len() {
        return Err(Error::Argument("sd, random mask and draw dimensions disagree".into()));
    }
    if let Some(&bad) = random.iter().find(|&&i| i >= data.k()) {
        return Err(Error::Argument(format!("random coefficient index {bad} out of range")));
    }
    if draws.n_agents != data.n_agents() {
        return Err(Error::Argument(format!(
            "draws cover {} agents, data has {}",
            draws.n_agents,
            data.n_agents()
        )));
    }
    if draws.per_agent == 0 {
        return Err(Error::Argument("need at least one draw per agent".into()));
    }
    Ok(())
}

/// Simulated log-likelihood and its analytic gradient.
pub fn mmnl_simulated_loglik(
    data: &DecisionData,
    random: &[usize],
    mu: &[f64],
    sd: &[f64],
    draws: &SimulationDraws,
) -> Result<MmnlEval> {
    check_inputs(data, random, mu, sd, draws)?;
    let k = data.k();
    let m = random.len();
    let r_count = draws.per_agent;
    let parts = par::map_indexed(data.n_agents(), |a| {
        let decs = data.agent_decisions(a);
        let n_rows: usize = decs.iter().map(|d| d.n_alts).sum();
        let mut base = Vec::with_capacity(n_rows);
        let mut xr = Vec::with_capacity(n_rows * m);
        for d in decs {
            for j in 0..d.n_alts {
                let x = data.row(d, j);
                base.push(dot(x, mu));
                xr.extend(random.iter().map(|&i| x[i]));
            }
        }
        let z = draws.agent(a);
        let mut ell = vec![0.0; r_count];
        let mut g = vec![0.0; r_count * k];
        let mut v = Vec::new();
        let mut shift = vec![0.0; m];
        for r in 0..r_count {
            let zr = &z[r * m..(r + 1) * m];
            for (s, (sd, z)) in shift.iter_mut().zip(sd.iter().zip(zr)) {
                *s = sd * z;
            }
            let gr = &mut g[r * k..(r + 1) * k];
            let mut row = 0;
            let mut total = 0.0;
            for d in decs {
                v.clear();
                for j in 0..d.n_alts {
                    let xm = &xr[(row + j) * m..(row + j + 1) * m];
                    v.push(base[row + j] + dot(xm, &shift));
                }
                let lse = log_sum_exp(&v);
                total += v[d.chosen] - lse;
                for j in 0..d.n_alts {
                    let w = if j == d.chosen { 1.0 } else { 0.0 } - (v[j] - lse).exp();
                    if w != 0.0 {
                        for (gc, x) in gr.iter_mut().zip(data.row(d, j)) {
                            *gc += w * x;
                        }
                    }
                }
                row += d.n_alts;
            }
            ell[r] = total;
        }
        let lmax = ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = ell.iter().map(|l| (l - lmax).exp()).collect();
        let wsum: f64 = weights.iter().sum();
        let ll = lmax + (wsum / r_count as f64).ln();
        let mut out = vec![0.0; 1 + k + m];
        out[0] = ll;
        for r in 0..r_count {
            let w = weights[r] / wsum;
            if w == 0.0 {
                continue;
            }
            let gr = &g[r * k..(r + 1) * k];
            for c in 0..k {
                out[1 + c] += w * gr[c];
            }
            for (q, &i) in random.iter().enumerate() {
                out[1 + k + q] += w * gr[i] * z[r * m + q];
            }
        }
        out
    });
    let total = par::tree_sum_vecs(
        parts,
        1 + k + m,
    );
    Ok(MmnlEval {
        loglik: total[0],
        grad_mu: total[1..1 + k].to_vec(),
        grad_sd: total[1 + k..].to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmnlOptions {
    pub bfgs: BfgsOptions,
    pub mnl: MnlOptions,
    /// Relative step for the finite-difference Hessian.
    pub hessian_step: f64,
}

impl Default for MmnlOptions {
    fn default() -> Self {
        Self {
            bfgs: BfgsOptions::default(),
            mnl: MnlOptions::default(),
            hessian_step: 1e-5,
        }
    }
}

/// Maximum simulated likelihood over `(mu, ln sd)`, started from the MNL
/// fit with `sd = 0.1`.
pub fn fit_mmnl(
    data: &DecisionData,
    random: &[usize],
    draws: &SimulationDraws,
    options: MmnlOptions,
) -> Result<EstimationResult> {
    if random.is_empty() {
        return Err(Error::Argument("mixed logit needs a non-empty random mask".into()));
    }
    let k = data.k();
    let m = random.len();
    let mnl = fit_mnl(data, options.mnl)?;
    check_inputs(data, random, &mnl.beta_hat, &vec![START_SD; m], draws)?;
    let n_obs = data.n_decisions() as f64;

    let objective = |theta: &[f64]| -> (f64, Vec<f64>) {
        let mu = &theta[..k];
        let sd: Vec<f64> = theta[k..].iter().map(|l| l.exp()).collect();
        let e = mmnl_simulated_loglik(data, random, mu, &sd, draws).expect("inputs checked");
        let mut grad: Vec<f64> = e.grad_mu.iter().map(|g| -g / n_obs).collect();
        grad.extend(e.grad_sd.iter().zip(&sd).map(|(g, s)| -g * s / n_obs));
        (-e.loglik / n_obs, grad)
    };

    let mut theta0 = mnl.beta_hat.clone();
    theta0.extend(std::iter::repeat_n(START_SD.ln(), m));
    let mut best = minimize_bfgs(objective, theta0, options.bfgs);

    // The MNL optimum embedded at a vanishing sd is always available.
    let mut nested = mnl.beta_hat.clone();
    nested.extend(std::iter::repeat_n(SD_BOUNDARY.ln(), m));
    let (nested_value, _) = objective(&nested);
    if nested_value < best.value {
        let retry = minimize_bfgs(objective, nested, options.bfgs);
        let iterations = best.iterations + retry.iterations;
        best = retry;
        best.iterations = iterations;
    }

    let mu = best.x[..k].to_vec();
    let sd: Vec<f64> = best.x[k..].iter().map(|l| l.exp()).collect();
    let eval = mmnl_simulated_loglik(data, random, &mu, &sd, draws)?;

    // Finite-difference Hessian of the analytic gradient in (mu, sd).
    let natural: Vec<f64> = mu.iter().chain(&sd).copied().collect();
    let dim = k + m;
    let grad_at = |p: &[f64]| -> Result<Vec<f64>> {
        let e = mmnl_simulated_loglik(data, random, &p[..k], &p[k..], draws)?;
        Ok(e.grad_mu.into_iter().chain(e.grad_sd).collect())
    };
    let mut hess = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        let h = options.hessian_step * natural[c].abs().max(1.0);
        let mut up = natural.clone();
        let mut down = natural.clone();
        up[c] += h;
        down[c] -= h;
        let gu = grad_at(&up)?;
        let gd = grad_at(&down)?;
        for r in 0..dim {
            hess[(r, c)] = (gu[r] - gd[r]) / (2.0 * h);
        }
    }
    let hess = (&hess + hess.transpose()) * 0.5;
    let avc = invert_negative_hessian(&hess);

    let mut result = EstimationResult::new(
        ModelKind::Mmnl,
        data.names().to_vec(),
        mu,
        avc.clone(),
        eval.loglik,
        data.n_decisions(),
        best.converged,
        best.iterations,
    );
    result.mixing = Some(MixingResult {
        random: random.to_vec(),
        sd_se: (0..m).map(|q| avc[(k + q, k + q)].max(0.0).sqrt()).collect(),
        boundary: sd.iter().any(|&s| s < SD_BOUNDARY),
        sd_hat: sd,
        n_draws: draws.per_agent,
    });
    Ok(result)
}
