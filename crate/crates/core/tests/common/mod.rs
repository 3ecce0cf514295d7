#![allow(dead_code)]

use dcesim::design::{AttributeSpec, ChoiceSet, Design, Profile};
use dcesim::estimate::DecisionData;
use dcesim::population::{AgentPopulation, ParameterModel};
use dcesim::rng::SeedStream;
use dcesim::scenario::ScenarioConfig;
use dcesim::simulate::{simulate_choices, ChoiceDataset, Factor, SimulationOptions, UtilitySpec, UtilityTerm};
use rand::Rng;

pub fn attr(name: &str) -> Factor {
    Factor::Attribute(name.into())
}

pub fn rose() -> ScenarioConfig {
    ScenarioConfig::rose()
}

/// Rose attributes with the covariate-free five-term utility.
pub fn rose_mixed() -> ScenarioConfig {
    ScenarioConfig::rose_mixed()
}

pub fn simulate_fixed(design: &Design, spec: &UtilitySpec, beta: &[f64], n_agents: usize, seed: u64) -> ChoiceDataset {
    let model = ParameterModel::Fixed { beta: beta.to_vec() };
    simulate_model(design, spec, &model, n_agents, seed)
}

pub fn simulate_model(design: &Design, spec: &UtilitySpec, model: &ParameterModel, n_agents: usize, seed: u64) -> ChoiceDataset {
    let seeds = SeedStream::new(seed);
    let pop = AgentPopulation::generate(&[], spec.coef_names(), model, n_agents, seeds).unwrap();
    simulate_choices(design, &pop, spec, seeds, SimulationOptions::default()).unwrap()
}

/// A random design over `k` three-level attributes with a linear term per
/// attribute.
pub fn random_instance<R: Rng>(rng: &mut R, k: usize, n_sets: usize, j: usize) -> (Design, UtilitySpec) {
    let attrs: Vec<AttributeSpec> =
        (0..k).map(|i| AttributeSpec::discrete(format!("x{i}"), vec![0.0, 1.0, 2.0])).collect();
    let mut sets = Vec::with_capacity(n_sets);
    while sets.len() < n_sets {
        let profiles: Vec<Profile> =
            (0..j).map(|_| Profile((0..k).map(|_| rng.random_range(0..3) as f64).collect())).collect();
        let distinct = (0..j).all(|a| (a + 1..j).all(|b| profiles[a] != profiles[b]));
        if distinct {
            sets.push(ChoiceSet::from_profiles(profiles, false));
        }
    }
    let design = Design::new(attrs, sets).unwrap();
    let spec = UtilitySpec::new((0..k).map(|i| UtilityTerm::new(format!("b{i}"), vec![attr(&format!("x{i}"))])).collect());
    (design, spec)
}

pub fn decisions(data: &ChoiceDataset, spec: &UtilitySpec) -> DecisionData {
    DecisionData::build(data, spec).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-8)
}

/// Max relative error between two vectors, scaled by the larger norm.
pub fn vec_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().chain(a).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-8);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Three-level attribute `x` with profiles 0..j, one set of `j` alternatives
/// and per-slot constants `asc_i` for slots 1..j (slot 0 is the base).
pub fn slot_design(j: usize) -> (Design, UtilitySpec) {
    let attrs = vec![AttributeSpec::discrete("x", (0..j).map(|i| i as f64).collect())];
    let set = ChoiceSet::from_profiles((0..j).map(|i| Profile(vec![i as f64])).collect(), false);
    let design = Design::new(attrs, vec![set]).unwrap();
    let spec = UtilitySpec::new((0..j).map(|i| UtilityTerm::new(format!("asc_{i}"), vec![Factor::Constant]).on_slots(vec![i])).collect());
    (design, spec)
}
