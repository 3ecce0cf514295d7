use crate::design::types::{Alternative, Design, PreferredDirection};
use crate::error::{Error, Result};
use crate::simulate::utility::{AltView, Factor, UtilitySpec};

/// Flag `(set, alternative)` pairs where another non-opt-out alternative is
/// at least as good on every attribute term and strictly better on one.
///
/// Term contributions are `beta_k · x_k`. For a zero prior coefficient on a
/// single-attribute term the attribute's preferred direction is used; terms
/// without either are ignored.
pub fn check_dominance(design: &Design, spec: &UtilitySpec, prior: &[f64]) -> Result<Vec<(usize, usize)>> {
    if prior.len() != spec.k() {
        return Err(Error::Argument(format!("prior has {} entries, spec has {}", prior.len(), spec.k())));
    }
    let mut referenced: Vec<String> = Vec::new();
    for t in &spec.terms {
        for f in &t.factors {
            if let Factor::Covariate(c) = f {
                if !referenced.contains(c) {
                    referenced.push(c.clone());
                }
            }
        }
    }
    let utility = spec.compile(&design.attribute_names(), &referenced)?;
    let covariates = vec![0.0; referenced.len()];

    // Per attribute term: the weight applied to x_k.
    let weights: Vec<Option<f64>> = spec
        .terms
        .iter()
        .zip(prior)
        .map(|(t, &b)| {
            if !t.is_attribute_only() {
                return None;
            }
            if b != 0.0 {
                return Some(b);
            }
            match t.factors.as_slice() {
                [Factor::Attribute(name)] => design
                    .attributes()
                    .iter()
                    .find(|a| &a.name == name)
                    .and_then(|a| match a.preferred_direction {
                        PreferredDirection::HigherBetter => Some(1.0),
                        PreferredDirection::LowerBetter => Some(-1.0),
                        PreferredDirection::None => None,
                    }),
                _ => None,
            }
        })
        .collect();

    let k = spec.k();
    let mut out = Vec::new();
    for (s, set) in design.choice_sets().iter().enumerate() {
        let contributions: Vec<(usize, Vec<f64>)> = set
            .alternatives
            .iter()
            .enumerate()
            .filter_map(|(slot, a)| match a {
                Alternative::Profile(p) => {
                    let mut x = vec![0.0; k];
                    utility.expand(&covariates, AltView { slot, is_optout: false, attributes: p.values() }, &mut x);
                    let c = weights
                        .iter()
                        .zip(&x)
                        .filter_map(|(w, x)| w.map(|w| w * x))
                        .collect();
                    Some((slot, c))
                }
                Alternative::OptOut => None,
            })
            .collect();
        for (slot_a, ca) in &contributions {
            let dominated = contributions.iter().any(|(slot_b, cb)| {
                slot_b != slot_a
                    && cb.iter().zip(ca).all(|(b, a)| b >= a)
                    && cb.iter().zip(ca).any(|(b, a)| b > a)
            });
            if dominated {
                out.push((s, *slot_a));
            }
        }
    }
    Ok(out)
}
