//! Long-format simulated choice data.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::design::{Alternative, Design};
use crate::error::{Error, Result};
use crate::par;
use crate::population::AgentPopulation;
use crate::rng::{SeedStream, Stage};
use crate::simulate::gumbel::gumbel_draw;
use crate::simulate::utility::{AltView, UtilitySpec};

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceRow {
    pub agent_id: usize,
    pub choice_set_id: usize,
    pub alt_id: usize,
    pub is_optout: bool,
    pub attributes: Vec<f64>,
    pub covariates: Vec<f64>,
    pub chosen: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub spec_digest: String,
    pub n_agents: usize,
    pub n_sets: usize,
    pub n_alternatives: usize,
    pub k: usize,
    /// SHA-256 of the design CSV the data was simulated on, when known.
    #[serde(default)]
    pub design_digest: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceDataset {
    pub attribute_names: Vec<String>,
    pub covariate_names: Vec<String>,
    pub rows: Vec<ChoiceRow>,
    pub meta: DatasetMeta,
}

impl ChoiceDataset {
    /// Check one chosen row per (agent, set) and a complete N x S x J grid.
    pub fn validate(&self) -> Result<()> {
        let mut groups: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for r in &self.rows {
            if r.attributes.len() != self.attribute_names.len() || r.covariates.len() != self.covariate_names.len() {
                return Err(Error::Integrity("row width does not match the dataset schema".into()));
            }
            let e = groups.entry((r.agent_id, r.choice_set_id)).or_default();
            e.0 += 1;
            e.1 += usize::from(r.chosen);
        }
        if groups.is_empty() {
            return Err(Error::Integrity("dataset has no rows".into()));
        }
        let mut agents = std::collections::BTreeSet::new();
        let mut sets = std::collections::BTreeSet::new();
        let width = groups.values().next().map(|g| g.0).unwrap_or(0);
        for (&(a, s), &(count, chosen)) in &groups {
            if chosen != 1 {
                return Err(Error::Integrity(format!(
                    "agent {a}, choice set {s}: {chosen} chosen rows, expected exactly 1"
                )));
            }
            if count != width {
                return Err(Error::Integrity(format!(
                    "agent {a}, choice set {s}: {count} alternatives, expected {width}"
                )));
            }
            agents.insert(a);
            sets.insert(s);
        }
        if agents.len() * sets.len() != groups.len() {
            return Err(Error::Integrity("not every agent answered every choice set".into()));
        }
        if self.rows.len() != agents.len() * sets.len() * width {
            return Err(Error::Integrity("row count differs from N x S x J".into()));
        }
        Ok(())
    }

    pub fn n_decisions(&self) -> usize {
        self.rows.iter().filter(|r| r.chosen).count()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimulationOptions {
    /// Present the design's sets to each agent in an agent-specific random
    /// order.
    pub randomize_set_order: bool,
}

/// Utility-maximizing choices with i.i.d. standard Gumbel errors.
///
/// Agent `n` draws its errors from substream `(seed, Simulation, n)` in
/// (set, alternative) order; ties go to the lowest alternative index.
pub fn simulate_choices(
    design: &Design,
    population: &AgentPopulation,
    spec: &UtilitySpec,
    seeds: SeedStream,
    options: SimulationOptions,
) -> Result<ChoiceDataset> {
    if population.k() != spec.k() {
        return Err(Error::Schema(format!(
            "population carries {} parameters, utility spec has {}",
            population.k(),
            spec.k()
        )));
    }
    let utility = spec.compile(&design.attribute_names(), &population.covariate_names)?;
    let optout_values = design.optout_values();
    let n_sets = design.n_sets();
    let per_agent = par::map_indexed(population.n(), |n| {
        let covs = population.covariates.row(n);
        let beta = population.params.row(n);
        let mut order: Vec<usize> = (0..n_sets).collect();
        if options.randomize_set_order {
            order.shuffle(&mut seeds.substream(Stage::SetOrder, n as u64));
        }
        let mut rng = seeds.substream(Stage::Simulation, n as u64);
        let mut rows = Vec::with_capacity(n_sets * design.n_alternatives());
        for &s in &order {
            let set = &design.choice_sets()[s];
            let mut best = (0usize, f64::NEG_INFINITY);
            let first = rows.len();
            for (j, alt) in set.alternatives.iter().enumerate() {
                let attrs = match alt {
                    Alternative::Profile(p) => p.values(),
                    Alternative::OptOut => &optout_values,
                };
                let view = AltView { slot: j, is_optout: alt.is_optout(), attributes: attrs };
                let u = utility.systematic_utility(covs, view, beta) + gumbel_draw(&mut rng);
                if u > best.1 {
                    best = (j, u);
                }
                rows.push(ChoiceRow {
                    agent_id: n,
                    choice_set_id: s,
                    alt_id: j,
                    is_optout: alt.is_optout(),
                    attributes: attrs.to_vec(),
                    covariates: covs.to_vec(),
                    chosen: false,
                });
            }
            rows[first + best.0].chosen = true;
        }
        rows
    });
    Ok(ChoiceDataset {
        attribute_names: design.attribute_names(),
        covariate_names: population.covariate_names.clone(),
        rows: per_agent.into_iter().flatten().collect(),
        meta: DatasetMeta {
            seed: seeds.seed(),
            spec_digest: spec.digest(),
            n_agents: population.n(),
            n_sets,
            n_alternatives: design.n_alternatives(),
            k: spec.k(),
            design_digest: String::new(),
        },
    })
}
