use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level-code tolerance when matching values to an attribute's grid.
pub const LEVEL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AttributeKind {
    Discrete { levels: Vec<f64> },
    /// Equally spaced grid of `level_count` points from `min` to `max`.
    Continuous { min: f64, max: f64, level_count: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferredDirection {
    HigherBetter,
    LowerBetter,
    #[default]
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default)]
    pub preferred_direction: PreferredDirection,
}

impl AttributeSpec {
    pub fn discrete(name: impl Into<String>, levels: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Discrete { levels },
            preferred_direction: PreferredDirection::None,
        }
    }

    pub fn continuous(name: impl Into<String>, min: f64, max: f64, level_count: usize) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Continuous { min, max, level_count },
            preferred_direction: PreferredDirection::None,
        }
    }

    pub fn with_direction(mut self, d: PreferredDirection) -> Self {
        self.preferred_direction = d;
        self
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, AttributeKind::Continuous { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Schema(format!("attribute `{}`: {m}", self.name)));
        match &self.kind {
            AttributeKind::Discrete { levels } => {
                if levels.len() < 2 {
                    return fail("discrete attributes need at least 2 levels".into());
                }
                if levels.iter().any(|l| !l.is_finite()) {
                    return fail("levels must be finite".into());
                }
                for (i, a) in levels.iter().enumerate() {
                    if levels[..i].contains(a) {
                        return fail(format!("duplicate level {a}"));
                    }
                }
            }
            AttributeKind::Continuous { min, max, level_count } => {
                if !(min < max) || !min.is_finite() || !max.is_finite() {
                    return fail(format!("continuous range needs min < max, got [{min}, {max}]"));
                }
                if *level_count < 2 {
                    return fail("continuous attributes need level_count >= 2".into());
                }
            }
        }
        Ok(())
    }

    /// Realized levels in order.
    pub fn levels(&self) -> Vec<f64> {
        match &self.kind {
            AttributeKind::Discrete { levels } => levels.clone(),
            AttributeKind::Continuous { min, max, level_count } => {
                let step = (max - min) / (*level_count - 1) as f64;
                (0..*level_count)
                    .map(|i| if i + 1 == *level_count { *max } else { min + step * i as f64 })
                    .collect()
            }
        }
    }

    pub fn level_count(&self) -> usize {
        match &self.kind {
            AttributeKind::Discrete { levels } => levels.len(),
            AttributeKind::Continuous { level_count, .. } => *level_count,
        }
    }

    pub fn is_level(&self, x: f64) -> bool {
        self.levels().iter().any(|l| (l - x).abs() <= LEVEL_TOL)
    }
}

/// Attribute values of one alternative, in attribute-spec order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile(pub Vec<f64>);

impl Profile {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Alternative {
    Profile(Profile),
    OptOut,
}

impl Alternative {
    pub fn is_optout(&self) -> bool {
        matches!(self, Alternative::OptOut)
    }

    pub fn profile(&self) -> Option<&Profile> {
        match self {
            Alternative::Profile(p) => Some(p),
            Alternative::OptOut => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceSet {
    pub alternatives: Vec<Alternative>,
}

impl ChoiceSet {
    pub fn new(alternatives: Vec<Alternative>) -> Self {
        Self { alternatives }
    }

    pub fn from_profiles(profiles: Vec<Profile>, include_optout: bool) -> Self {
        let mut alternatives: Vec<_> = profiles.into_iter().map(Alternative::Profile).collect();
        if include_optout {
            alternatives.push(Alternative::OptOut);
        }
        Self { alternatives }
    }

    pub fn has_optout(&self) -> bool {
        self.alternatives.iter().any(Alternative::is_optout)
    }

    /// Indices of non-opt-out alternatives.
    pub fn profile_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.alternatives
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_optout())
            .map(|(i, _)| i)
    }
}

/// Choice sets x alternatives x attribute levels.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    attributes: Vec<AttributeSpec>,
    choice_sets: Vec<ChoiceSet>,
    n_alternatives: usize,
}

impl Design {
    pub fn new(attributes: Vec<AttributeSpec>, choice_sets: Vec<ChoiceSet>) -> Result<Self> {
        for a in &attributes {
            a.validate()?;
        }
        let Some(first) = choice_sets.first() else {
            return Err(Error::Schema("design has no choice sets".into()));
        };
        let j = first.alternatives.len();
        if j < 2 {
            return Err(Error::Schema(format!("choice sets need at least 2 alternatives, got {j}")));
        }
        let with_optout = first.has_optout();
        for (s, set) in choice_sets.iter().enumerate() {
            if set.alternatives.len() != j {
                return Err(Error::Schema(format!(
                    "choice set {s} has {} alternatives, expected {j}",
                    set.alternatives.len()
                )));
            }
            let optouts: Vec<usize> = (0..j).filter(|&i| set.alternatives[i].is_optout()).collect();
            match (with_optout, optouts.as_slice()) {
                (false, []) => {}
                (true, [last]) if *last == j - 1 => {}
                _ => {
                    return Err(Error::Schema(format!(
                        "choice set {s}: opt-out must appear once, in the last slot, in every set or in none"
                    )))
                }
            }
            let profiles: Vec<&Profile> = set.alternatives.iter().filter_map(Alternative::profile).collect();
            for (i, p) in profiles.iter().enumerate() {
                if p.0.len() != attributes.len() {
                    return Err(Error::Schema(format!(
                        "choice set {s}: profile has {} values for {} attributes",
                        p.0.len(),
                        attributes.len()
                    )));
                }
                if profiles[..i].contains(p) {
                    return Err(Error::Schema(format!("choice set {s} contains identical profiles")));
                }
            }
        }
        Ok(Self {
            attributes,
            choice_sets,
            n_alternatives: j,
        })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.attributes.iter().map(|a| a.name.clone()).collect()
    }

    pub fn choice_sets(&self) -> &[ChoiceSet] {
        &self.choice_sets
    }

    pub fn n_sets(&self) -> usize {
        self.choice_sets.len()
    }

    pub fn n_alternatives(&self) -> usize {
        self.n_alternatives
    }

    pub fn has_optout(&self) -> bool {
        self.choice_sets[0].has_optout()
    }

    /// Check every profile value is a realized level of its attribute.
    pub fn validate_levels(&self) -> Result<()> {
        for (s, set) in self.choice_sets.iter().enumerate() {
            for p in set.alternatives.iter().filter_map(Alternative::profile) {
                for (a, &x) in self.attributes.iter().zip(p.values()) {
                    if !a.is_level(x) {
                        return Err(Error::Schema(format!(
                            "choice set {s}: value {x} is not a level of `{}`",
                            a.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Zero-filled attribute vector for the opt-out.
    pub fn optout_values(&self) -> Vec<f64> {
        vec![0.0; self.attributes.len()]
    }
}
