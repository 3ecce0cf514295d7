use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mnl,
    Mmnl,
}

/// Random-coefficient part of a mixed logit fit.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingResult {
    /// Indices into `names` of the random coefficients.
    pub random: Vec<usize>,
    pub sd_hat: Vec<f64>,
    pub sd_se: Vec<f64>,
    pub n_draws: usize,
    /// Some sd collapsed below 1e-6.
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub model: ModelKind,
    pub names: Vec<String>,
    pub beta_hat: Vec<f64>,
    pub std_err: Vec<f64>,
    /// AVC of `(beta, sd...)`; the leading `K x K` block belongs to `beta`.
    pub avc: DMatrix<f64>,
    pub loglik: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub mixing: Option<MixingResult>,
}

impl EstimationResult {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: ModelKind,
        names: Vec<String>,
        beta_hat: Vec<f64>,
        avc: DMatrix<f64>,
        loglik: f64,
        n_obs: usize,
        converged: bool,
        iterations: usize,
    ) -> Self {
        let std_err = (0..beta_hat.len()).map(|i| avc[(i, i)].max(0.0).sqrt()).collect();
        Self {
            model,
            names,
            beta_hat,
            std_err,
            avc,
            loglik,
            n_obs,
            converged,
            iterations,
            mixing: None,
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn estimate(&self, name: &str) -> Option<(f64, f64)> {
        self.index_of(name).map(|i| (self.beta_hat[i], self.std_err[i]))
    }

    /// JSON export; `extra` entries are appended at the top level.
    pub fn to_json(&self, extra: Map<String, Value>) -> Value {
        let mut beta = Map::new();
        for (i, n) in self.names.iter().enumerate() {
            beta.insert(n.clone(), coef_entry(self.beta_hat[i], self.std_err[i]));
        }
        let mut sd = Map::new();
        if let Some(m) = &self.mixing {
            for (j, &i) in m.random.iter().enumerate() {
                sd.insert(self.names[i].clone(), coef_entry(m.sd_hat[j], m.sd_se[j]));
            }
        }
        let mut out = Map::new();
        out.insert("model".into(), serde_json::to_value(self.model).expect("enum serializes"));
        out.insert("beta".into(), Value::Object(beta));
        out.insert("sd".into(), Value::Object(sd));
        out.insert("loglik".into(), json!(self.loglik));
        out.insert("n_obs".into(), json!(self.n_obs));
        out.insert("converged".into(), json!(self.converged));
        out.insert("iterations".into(), json!(self.iterations));
        if let Some(m) = &self.mixing {
            out.insert("n_draws".into(), json!(m.n_draws));
            out.insert("boundary".into(), json!(m.boundary));
        } else {
            out.insert("n_draws".into(), Value::Null);
        }
        out.extend(extra);
        Value::Object(out)
    }
}

fn coef_entry(est: f64, se: f64) -> Value {
    let z = if se > 0.0 { est / se } else { f64::NAN };
    json!({ "est": est, "se": finite_or_null(se), "z": finite_or_null(z) })
}

pub(crate) fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// `(-H)^{-1}`; directions with non-positive curvature are dropped
/// (Moore-Penrose pseudo-inverse) so the result stays symmetric PSD.
pub fn invert_negative_hessian(hessian: &DMatrix<f64>) -> DMatrix<f64> {
    let neg = -hessian;
    let neg = (&neg + neg.transpose()) * 0.5;
    if let Some(ch) = neg.clone().cholesky() {
        let inv = ch.inverse();
        return (&inv + inv.transpose()) * 0.5;
    }
    let eig = SymmetricEigen::new(neg);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let n = eig.eigenvalues.len();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let lambda = eig.eigenvalues[i];
        if lambda > 1e-12 * scale {
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / lambda;
        }
    }
    out
}
