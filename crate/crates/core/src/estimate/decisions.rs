use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::Result;
use crate::simulate::dataset::ChoiceDataset;
use crate::simulate::utility::{AltView, UtilitySpec};

#[derive(Clone, Copy, Debug)]
pub struct Decision {
    /// First row of this decision in the design matrix.
    pub start: usize,
    pub n_alts: usize,
    pub chosen: usize,
}

/// Term-expanded design matrix grouped by agent and decision.
///
/// Groups are keyed by `(agent_id, choice_set_id)` and alternatives sorted
/// by `alt_id`, so row order in the source dataset does not matter.
#[derive(Clone, Debug)]
pub struct DecisionData {
    k: usize,
    names: Vec<String>,
    x: Vec<f64>,
    decisions: Vec<Decision>,
    agents: Vec<Range<usize>>,
}

impl DecisionData {
    pub fn build(data: &ChoiceDataset, spec: &UtilitySpec) -> Result<Self> {
        data.validate()?;
        let utility = spec.compile(&data.attribute_names, &data.covariate_names)?;
        let k = utility.k();
        let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, r) in data.rows.iter().enumerate() {
            groups.entry((r.agent_id, r.choice_set_id)).or_default().push(i);
        }
        let mut x = Vec::with_capacity(data.rows.len() * k);
        let mut decisions = Vec::with_capacity(groups.len());
        let mut agents: Vec<Range<usize>> = Vec::new();
        let mut last_agent = None;
        let mut row_buf = vec![0.0; k];
        for ((agent, _), mut idx) in groups {
            idx.sort_by_key(|&i| data.rows[i].alt_id);
            if last_agent != Some(agent) {
                agents.push(decisions.len()..decisions.len());
                last_agent = Some(agent);
            }
            let start = x.len() / k.max(1);
            let mut chosen = 0;
            for (j, &i) in idx.iter().enumerate() {
                let r = &data.rows[i];
                let view = AltView { slot: r.alt_id, is_optout: r.is_optout, attributes: &r.attributes };
                utility.expand(&r.covariates, view, &mut row_buf);
                x.extend_from_slice(&row_buf);
                if r.chosen {
                    chosen = j;
                }
            }
            decisions.push(Decision { start, n_alts: idx.len(), chosen });
            agents.last_mut().expect("pushed above").end = decisions.len();
        }
        Ok(Self {
            k,
            names: utility.names().to_vec(),
            x,
            decisions,
            agents,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_decisions(&self) -> usize {
        self.decisions.len()
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_decisions(&self, agent: usize) -> &[Decision] {
        &self.decisions[self.agents[agent].clone()]
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// Term expansion of alternative `j` within decision `d`.
    pub fn row(&self, d: &Decision, j: usize) -> &[f64] {
        let r = d.start + j;
        &self.x[r * self.k..(r + 1) * self.k]
    }
}
