//! Halton low-discrepancy sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::RowMatrix;

pub const DEFAULT_BURN: usize = 10;

/// First `n` primes in increasing order.
pub fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while primes.len() < n {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p)) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Radical inverse of `index` in `base`: digits mirrored about the radix point.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let b = base as f64;
    let inv = 1.0 / b;
    let mut value = 0.0;
    let mut scale = inv;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaltonSpec {
    pub dims: usize,
    pub n_draws: usize,
    #[serde(default = "default_burn")]
    pub burn: usize,
}

fn default_burn() -> usize {
    DEFAULT_BURN
}

impl HaltonSpec {
    pub fn new(dims: usize, n_draws: usize) -> Self {
        Self {
            dims,
            n_draws,
            burn: DEFAULT_BURN,
        }
    }

    pub fn with_burn(mut self, burn: usize) -> Self {
        self.burn = burn;
        self
    }

    pub fn bases(&self) -> Vec<u64> {
        first_primes(self.dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 || self.n_draws == 0 {
            return Err(Error::Argument(
                "halton spec needs dims >= 1 and n_draws >= 1".into(),
            ));
        }
        Ok(())
    }

    /// The `n_draws x dims` point matrix; entry `(r, d)` is the radical
    /// inverse of `burn + r + 1` in the `d`-th prime base.
    pub fn points(&self) -> Result<RowMatrix> {
        self.validate()?;
        Ok(halton_block(self.dims, self.burn, 0, self.n_draws))
    }
}

/// Rows `start..start+count` of the Halton sequence (after `burn`).
pub fn halton_block(dims: usize, burn: usize, start: usize, count: usize) -> RowMatrix {
    let bases = first_primes(dims);
    let mut out = RowMatrix::zeros(count, dims);
    for r in 0..count {
        let index = (burn + start + r + 1) as u64;
        for (d, &b) in bases.iter().enumerate() {
            out.row_mut(r)[d] = radical_inverse(index, b);
        }
    }
    out
}

/// One-dimensional star discrepancy of a point set in [0, 1).
pub fn star_discrepancy_1d(points: &[f64]) -> f64 {
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let max_dev = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - (2 * i + 1) as f64 / (2.0 * n)).abs())
        .fold(0.0, f64::max);
    1.0 / (2.0 * n) + max_dev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        assert_eq!(first_primes(6), vec![2, 3, 5, 7, 11, 13]);
    }

    #[test]
    fn golden_prefixes() {
        let p = HaltonSpec::new(2, 5).with_burn(0).points().unwrap();
        let base2 = [0.5, 0.25, 0.75, 0.125, 0.625];
        let base3 = [1.0 / 3.0, 2.0 / 3.0, 1.0 / 9.0, 4.0 / 9.0, 7.0 / 9.0];
        for r in 0..5 {
            assert!((p.get(r, 0) - base2[r]).abs() <= 1e-15);
            assert!((p.get(r, 1) - base3[r]).abs() <= 1e-15);
        }
    }

    #[test]
    fn burn_skips_leading_points() {
        let skipped = HaltonSpec::new(3, 4).points().unwrap();
        let full = HaltonSpec::new(3, 14).with_burn(0).points().unwrap();
        for r in 0..4 {
            assert_eq!(skipped.row(r), full.row(r + 10));
        }
    }

    #[test]
    fn points_strictly_inside_unit_cube() {
        let p = HaltonSpec::new(5, 3000).points().unwrap();
        assert!(p.iter_rows().flatten().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn discrepancy_of_regular_grid() {
        let grid: Vec<f64> = (0..10).map(|i| (2 * i + 1) as f64 / 20.0).collect();
        assert!((star_discrepancy_1d(&grid) - 0.05).abs() < 1e-15);
    }
}
