use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimate::halton::halton_block;
use crate::par;
use crate::population::cholesky::cholesky;
use crate::population::normal::normal_quantile;
use crate::rng::{open_uniform, SeedStream, Stage};
use crate::table::RowMatrix;

/// How per-agent taste vectors are generated.
#[derive(Clone, Debug, PartialEq)]
pub enum ParameterModel {
    Fixed {
        beta: Vec<f64>,
    },
    /// `beta_n = mu + L z_n`, `L Lᵀ = sigma`; only coordinates in
    /// `random_mask` may vary.
    Random {
        mu: Vec<f64>,
        sigma: DMatrix<f64>,
        random_mask: Vec<usize>,
    },
}

impl ParameterModel {
    pub fn k(&self) -> usize {
        match self {
            ParameterModel::Fixed { beta } => beta.len(),
            ParameterModel::Random { mu, .. } => mu.len(),
        }
    }

    /// The central taste vector (`beta` or `mu`).
    pub fn center(&self) -> &[f64] {
        match self {
            ParameterModel::Fixed { beta } => beta,
            ParameterModel::Random { mu, .. } => mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ParameterModel::Random { mu, sigma, random_mask } = self {
            let k = mu.len();
            if sigma.nrows() != k || sigma.ncols() != k {
                return Err(Error::Argument(format!(
                    "sigma is {}x{}, expected {k}x{k}",
                    sigma.nrows(),
                    sigma.ncols()
                )));
            }
            if let Some(&bad) = random_mask.iter().find(|&&i| i >= k) {
                return Err(Error::Argument(format!("random_mask index {bad} out of range")));
            }
            for i in 0..k {
                for j in 0..k {
                    let inside = random_mask.contains(&i) && random_mask.contains(&j);
                    if !inside && sigma[(i, j)] != 0.0 {
                        return Err(Error::Argument(format!(
                            "sigma[{i},{j}] is nonzero but coordinate is not in random_mask"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Source of the standard normal vectors `z` in `mu + L z`.
#[derive(Clone, Copy, Debug)]
pub enum NormalSource {
    /// Row `r` uses substream `(seed, Stage::Parameters, r)`.
    PseudoRandom(SeedStream),
    /// Row `r` uses Halton point `burn + r + 1`, mapped through the normal
    /// quantile.
    Halton { burn: usize },
}

impl NormalSource {
    /// `n x k` matrix of standard normal variates.
    pub fn standard_normals(&self, n: usize, k: usize, stage: Stage) -> RowMatrix {
        match *self {
            NormalSource::PseudoRandom(seeds) => {
                let rows = par::map_indexed(n, |r| {
                    let mut rng = seeds.substream(stage, r as u64);
                    (0..k).map(|_| normal_quantile(open_uniform(&mut rng))).collect::<Vec<_>>()
                });
                RowMatrix::from_rows(rows, k)
            }
            NormalSource::Halton { burn } => {
                let mut m = halton_block(k, burn, 0, n);
                for r in 0..n {
                    for x in m.row_mut(r) {
                        *x = normal_quantile(*x);
                    }
                }
                m
            }
        }
    }
}

/// Apply `mu + L z` to every row of `z`.
pub fn affine_draws(mu: &[f64], l: &DMatrix<f64>, z: &RowMatrix) -> RowMatrix {
    let k = mu.len();
    let mut out = RowMatrix::zeros(z.rows(), k);
    for r in 0..z.rows() {
        let zr = z.row(r);
        let row = out.row_mut(r);
        for i in 0..k {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += l[(i, j)] * zr[j];
            }
            row[i] = mu[i] + acc;
        }
    }
    out
}

/// `n x K` matrix of per-agent taste vectors.
pub fn draw_parameters(model: &ParameterModel, n: usize, source: NormalSource) -> Result<RowMatrix> {
    model.validate()?;
    match model {
        ParameterModel::Fixed { beta } => Ok(RowMatrix::from_rows(vec![beta.clone(); n], beta.len())),
        ParameterModel::Random { mu, sigma, .. } => {
            let l = cholesky(sigma)?;
            let z = source.standard_normals(n, mu.len(), Stage::Parameters);
            Ok(affine_draws(mu, &l, &z))
        }
    }
}
