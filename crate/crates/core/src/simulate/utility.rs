//! Symbolic systematic-utility specification.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One multiplicative factor of a utility term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Constant,
    Attribute(String),
    Covariate(String),
}

/// Alternative slots a term applies to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum AppliesTo {
    #[default]
    AllNonOptout,
    /// Explicit 0-based slots; listing the opt-out slot makes the term
    /// active on the opt-out too.
    Slots(Vec<usize>),
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityTerm {
    pub coef: String,
    #[serde(default)]
    pub applies_to: AppliesTo,
    pub factors: Vec<Factor>,
}

impl UtilityTerm {
    pub fn new(coef: impl Into<String>, factors: Vec<Factor>) -> Self {
        Self {
            coef: coef.into(),
            applies_to: AppliesTo::AllNonOptout,
            factors,
        }
    }

    pub fn on_slots(mut self, slots: Vec<usize>) -> Self {
        self.applies_to = AppliesTo::Slots(slots);
        self
    }

    /// True when every factor is a constant or a design attribute.
    pub fn is_attribute_only(&self) -> bool {
        self.factors.iter().all(|f| !matches!(f, Factor::Covariate(_)))
            && self.factors.iter().any(|f| matches!(f, Factor::Attribute(_)))
    }
}

/// `V = Σ_k beta_k · x_k`, with `x_k` the product of term `k`'s factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    pub terms: Vec<UtilityTerm>,
}

impl UtilitySpec {
    pub fn new(terms: Vec<UtilityTerm>) -> Self {
        Self { terms }
    }

    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn coef_names(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.coef.clone()).collect()
    }

    pub fn index_of(&self, coef: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.coef == coef)
    }

    pub fn uses_covariates(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.factors.iter().any(|f| matches!(f, Factor::Covariate(_))))
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("utility spec serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Resolve names against a schema. All reference errors surface here.
    pub fn compile(&self, attributes: &[String], covariates: &[String]) -> Result<CompiledUtility> {
        if self.terms.is_empty() {
            return Err(Error::Schema("utility spec has no terms".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.iter().enumerate() {
            if self.terms[..i].iter().any(|o| o.coef == t.coef) {
                return Err(Error::Schema(format!("duplicate coefficient `{}`", t.coef)));
            }
            if t.factors.is_empty() {
                return Err(Error::Schema(format!("term `{}` has no factors", t.coef)));
            }
            let mut factors = Vec::with_capacity(t.factors.len());
            for f in &t.factors {
                factors.push(match f {
                    Factor::Constant => FactorRef::One,
                    Factor::Attribute(name) => FactorRef::Attribute(
                        attributes.iter().position(|a| a == name).ok_or_else(|| {
                            Error::Schema(format!("term `{}` references unknown attribute `{name}`", t.coef))
                        })?,
                    ),
                    Factor::Covariate(name) => FactorRef::Covariate(
                        covariates.iter().position(|c| c == name).ok_or_else(|| {
                            Error::Schema(format!("term `{}` references unknown covariate `{name}`", t.coef))
                        })?,
                    ),
                });
            }
            let slots = match &t.applies_to {
                AppliesTo::AllNonOptout => None,
                AppliesTo::Slots(s) => Some(s.clone()),
            };
            terms.push(CompiledTerm { slots, factors });
        }
        Ok(CompiledUtility {
            names: self.coef_names(),
            terms,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FactorRef {
    One,
    Attribute(usize),
    Covariate(usize),
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    slots: Option<Vec<usize>>,
    factors: Vec<FactorRef>,
}

/// A utility spec with every reference resolved to a column index.
#[derive(Clone, Debug)]
pub struct CompiledUtility {
    names: Vec<String>,
    terms: Vec<CompiledTerm>,
}

/// Where an alternative sits and what it shows.
#[derive(Clone, Copy, Debug)]
pub struct AltView<'a> {
    pub slot: usize,
    pub is_optout: bool,
    pub attributes: &'a [f64],
}

impl CompiledUtility {
    pub fn k(&self) -> usize {
        self.terms.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Term expansion `x` of one alternative for one agent.
    pub fn expand(&self, covariates: &[f64], alt: AltView<'_>, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.terms.len());
        for (x, term) in out.iter_mut().zip(&self.terms) {
            let active = match &term.slots {
                None => !alt.is_optout,
                Some(s) => s.contains(&alt.slot),
            };
            *x = if active {
                term.factors
                    .iter()
                    .map(|f| match *f {
                        FactorRef::One => 1.0,
                        FactorRef::Attribute(i) => alt.attributes[i],
                        FactorRef::Covariate(i) => covariates[i],
                    })
                    .product()
            } else {
                0.0
            };
        }
    }

    /// Systematic utility `x · beta`.
    pub fn systematic_utility(&self, covariates: &[f64], alt: AltView<'_>, beta: &[f64]) -> f64 {
        let mut x = vec![0.0; self.k()];
        self.expand(covariates, alt, &mut x);
        x.iter().zip(beta).map(|(a, b)| a * b).sum()
    }
}
