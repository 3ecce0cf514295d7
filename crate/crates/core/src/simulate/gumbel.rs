use rand::Rng;

use crate::rng::open_uniform;

/// Standard Gumbel quantile, `-ln(-ln u)`.
pub fn gumbel_quantile(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// One standard Gumbel(0, 1) variate by inverse CDF on an open-interval
/// uniform.
pub fn gumbel_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    gumbel_quantile(open_uniform(rng))
}
