use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::result::EstimationResult;

/// Price coefficients smaller than this make WTP undefined.
pub const PRICE_EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Wtp {
    pub value: f64,
    pub std_err: f64,
}

/// `-beta_attr / beta_price` with a delta-method standard error.
pub fn wtp(result: &EstimationResult, attr_coef: &str, price_coef: &str) -> Result<Wtp> {
    let a = result
        .index_of(attr_coef)
        .ok_or_else(|| Error::Argument(format!("unknown coefficient `{attr_coef}`")))?;
    let p = result
        .index_of(price_coef)
        .ok_or_else(|| Error::Argument(format!("unknown coefficient `{price_coef}`")))?;
    let ba = result.beta_hat[a];
    let bp = result.beta_hat[p];
    if bp.abs() <= PRICE_EPS {
        return Err(Error::UndefinedWtp(price_coef.to_string()));
    }
    let value = if ba == 0.0 { 0.0 } else { -ba / bp };
    let ga = -1.0 / bp;
    let gp = ba / (bp * bp);
    let v = &result.avc;
    let var = ga * ga * v[(a, a)] + 2.0 * ga * gp * v[(a, p)] + gp * gp * v[(p, p)];
    Ok(Wtp {
        value,
        std_err: var.max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::result::ModelKind;
    use nalgebra::DMatrix;

    fn result(label: f64, price: f64) -> EstimationResult {
        let avc = DMatrix::from_row_slice(2, 2, &[0.0025, 0.0002, 0.0002, 0.0004]);
        EstimationResult::new(ModelKind::Mnl, vec!["label".into(), "price".into()], vec![label, price], avc, -1.0, 10, true, 3)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(wtp(&result(0.5, -0.25), "label", "price").unwrap().value, 2.0);
        assert_eq!(wtp(&result(0.0, -0.25), "label", "price").unwrap().value, 0.0);
        assert_eq!(wtp(&result(0.0, 3.0), "label", "price").unwrap().value, 0.0);
    }

    #[test]
    fn zero_price_is_undefined() {
        assert!(matches!(wtp(&result(0.5, 0.0), "label", "price"), Err(Error::UndefinedWtp(_))));
        assert!(matches!(wtp(&result(0.5, -0.2), "carbon", "price"), Err(Error::Argument(_))));
    }
}
