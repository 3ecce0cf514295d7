//! Modified Fedorov point-exchange search over alternative slots.

use nalgebra::DMatrix;
use rand::seq::index::sample;

use crate::design::efficiency::{criterion_value, evaluate_design, stable_mean, sum_matrices, EfficiencyReport, InformationModel, PriorSpec};
use crate::design::types::{AttributeSpec, ChoiceSet, Design, Profile};
use crate::error::{Error, Result};
use crate::par;
use crate::population::AgentPopulation;
use crate::rng::{SeedStream, Stage};
use crate::simulate::utility::UtilitySpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FedorovOptions {
    pub max_sweeps: usize,
    pub restarts: usize,
    /// Attempts at drawing a non-singular random start per restart.
    pub start_retries: usize,
}

impl Default for FedorovOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 20,
            restarts: 4,
            start_retries: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FedorovOutcome {
    pub design: Design,
    pub report: EfficiencyReport,
    /// Criterion of the winning restart's random start.
    pub start_criterion: f64,
    /// Criterion after each accepted exchange of the winning restart,
    /// starting with the random start.
    pub history: Vec<f64>,
    pub sweeps: usize,
}

/// Criterion bookkeeping with per-set information cached for each prior draw.
struct Evaluator<'a> {
    model: InformationModel<'a>,
    draws: Vec<Vec<f64>>,
    /// `per_set[draw][set]`
    per_set: Vec<Vec<DMatrix<f64>>>,
    totals: Vec<DMatrix<f64>>,
}

impl<'a> Evaluator<'a> {
    fn new(model: InformationModel<'a>, draws: Vec<Vec<f64>>, sets: &[ChoiceSet]) -> Self {
        let per_set: Vec<Vec<DMatrix<f64>>> = draws
            .iter()
            .map(|b| sets.iter().map(|s| model.set_information(s, b)).collect())
            .collect();
        let k = model.k();
        let totals = per_set.iter().map(|v| sum_matrices(v.clone(), k)).collect();
        Self { model, draws, per_set, totals }
    }

    fn current(&self) -> f64 {
        let v: Vec<f64> = self.totals.iter().map(criterion_value).collect();
        stable_mean(&v)
    }

    /// Criterion if set `s` were replaced by `candidate`.
    fn trial(&self, s: usize, candidate: &ChoiceSet) -> f64 {
        let mut values = Vec::with_capacity(self.draws.len());
        for (d, beta) in self.draws.iter().enumerate() {
            let new = self.model.set_information(candidate, beta);
            let total = &self.totals[d] - &self.per_set[d][s] + new;
            let v = criterion_value(&total);
            if !v.is_finite() {
                return f64::INFINITY;
            }
            values.push(v);
        }
        stable_mean(&values)
    }

    fn accept(&mut self, s: usize, set: &ChoiceSet) {
        let k = self.model.k();
        for (d, beta) in self.draws.iter().enumerate() {
            self.per_set[d][s] = self.model.set_information(set, beta);
            self.totals[d] = sum_matrices(self.per_set[d].clone(), k);
        }
    }
}

fn build_set(candidates: &[Profile], picks: &[usize], include_optout: bool) -> ChoiceSet {
    ChoiceSet::from_profiles(picks.iter().map(|&i| candidates[i].clone()).collect(), include_optout)
}

/// A random design: each set holds `j` distinct candidates.
pub fn random_design<R: rand::Rng + ?Sized>(
    attributes: &[AttributeSpec],
    candidates: &[Profile],
    n_sets: usize,
    j_non_optout: usize,
    include_optout: bool,
    rng: &mut R,
) -> Result<(Design, Vec<Vec<usize>>)> {
    if j_non_optout == 0 || j_non_optout > candidates.len() {
        return Err(Error::Argument(format!(
            "need 1..={} non-opt-out alternatives, got {j_non_optout}",
            candidates.len()
        )));
    }
    let picks: Vec<Vec<usize>> = (0..n_sets)
        .map(|_| sample(rng, candidates.len(), j_non_optout).into_vec())
        .collect();
    let sets = picks.iter().map(|p| build_set(candidates, p, include_optout)).collect();
    Ok((Design::new(attributes.to_vec(), sets)?, picks))
}

struct RestartResult {
    picks: Vec<Vec<usize>>,
    criterion: f64,
    start: f64,
    history: Vec<f64>,
    sweeps: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_restart(
    attributes: &[AttributeSpec],
    candidates: &[Profile],
    n_sets: usize,
    j: usize,
    include_optout: bool,
    spec: &UtilitySpec,
    draws: &[Vec<f64>],
    agents: Option<&AgentPopulation>,
    seeds: SeedStream,
    restart: usize,
    options: FedorovOptions,
) -> Result<Option<RestartResult>> {
    let mut rng = seeds.substream(Stage::Fedorov, restart as u64);
    let mut start = None;
    for _ in 0..options.start_retries.max(1) {
        let (design, picks) = random_design(attributes, candidates, n_sets, j, include_optout, &mut rng)?;
        let model = InformationModel::new(&design, spec, agents)?;
        let eval = Evaluator::new(model, draws.to_vec(), design.choice_sets());
        if eval.current().is_finite() {
            start = Some((design, picks, eval));
            break;
        }
    }
    let Some((design, mut picks, mut eval)) = start else {
        return Ok(None);
    };
    let mut current = eval.current();
    let start_value = current;
    let mut history = vec![current];
    let mut sweeps = 0;
    let mut sets: Vec<ChoiceSet> = design.choice_sets().to_vec();
    while sweeps < options.max_sweeps {
        sweeps += 1;
        let mut improved = false;
        for s in 0..n_sets {
            for slot in 0..j {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..candidates.len() {
                    if picks[s].contains(&c) {
                        continue;
                    }
                    let mut trial_picks = picks[s].clone();
                    trial_picks[slot] = c;
                    let value = eval.trial(s, &build_set(candidates, &trial_picks, include_optout));
                    if best.is_none_or(|(_, b)| value < b) {
                        best = Some((c, value));
                    }
                }
                if let Some((c, value)) = best {
                    if value < current && value < current * (1.0 - 1e-12) {
                        picks[s][slot] = c;
                        sets[s] = build_set(candidates, &picks[s], include_optout);
                        eval.accept(s, &sets[s]);
                        current = eval.current();
                        history.push(current);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(Some(RestartResult {
        picks,
        criterion: current,
        start: start_value,
        history,
        sweeps,
    }))
}

/// Point-exchange search starting from random feasible designs.
///
/// Restarts run in parallel on independent substreams; the lowest
/// criterion wins, ties going to the lower restart index.
#[allow(clippy::too_many_arguments)]
pub fn fedorov_search(
    attributes: &[AttributeSpec],
    candidates: &[Profile],
    n_sets: usize,
    j_non_optout: usize,
    include_optout: bool,
    spec: &UtilitySpec,
    prior: &PriorSpec,
    agents: Option<&AgentPopulation>,
    seeds: SeedStream,
    options: FedorovOptions,
) -> Result<FedorovOutcome> {
    if candidates.is_empty() {
        return Err(Error::Argument("fedorov search needs candidate profiles".into()));
    }
    if n_sets == 0 {
        return Err(Error::Argument("fedorov search needs at least one choice set".into()));
    }
    if prior.k() != spec.k() {
        return Err(Error::Argument(format!("prior has {} parameters, spec has {}", prior.k(), spec.k())));
    }
    let draws = prior.draws(seeds)?;
    let results = par::map_indexed(options.restarts.max(1), |r| {
        run_restart(
            attributes, candidates, n_sets, j_non_optout, include_optout, spec, &draws, agents, seeds, r, options,
        )
    });
    let mut best: Option<RestartResult> = None;
    for r in results {
        if let Some(r) = r? {
            if best.as_ref().is_none_or(|b| r.criterion < b.criterion) {
                best = Some(r);
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::SearchFailure(format!(
            "no non-singular starting design found after {} attempts per restart",
            options.start_retries
        ))
    })?;
    let sets = best.picks.iter().map(|p| build_set(candidates, p, include_optout)).collect();
    let design = Design::new(attributes.to_vec(), sets)?;
    let report = evaluate_design(&design, spec, prior, agents, seeds)?;
    Ok(FedorovOutcome {
        design,
        report,
        start_criterion: best.start,
        history: best.history,
        sweeps: best.sweeps,
    })
}
