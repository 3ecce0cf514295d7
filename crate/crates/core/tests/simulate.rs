mod common;

use common::*;
use dcesim::design::{AttributeSpec, ChoiceSet, Design, Profile};
use dcesim::population::{AgentPopulation, CovariateGenerator, CovariateSpec, ParameterModel};
use dcesim::rng::SeedStream;
use dcesim::scenario::run_design;
use dcesim::simulate::io::write_dataset_csv;
use dcesim::simulate::{logit_probabilities, simulate_choices, ChoiceDataset, Factor, SimulationOptions, UtilitySpec, UtilityTerm};

fn shares(data: &ChoiceDataset, j: usize) -> Vec<f64> {
    let mut counts = vec![0usize; j];
    for r in data.rows.iter().filter(|r| r.chosen) {
        counts[r.alt_id] += 1;
    }
    let n = data.n_decisions() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

fn assert_shares_match(v: &[f64], n: usize, seed: u64) {
    let j = v.len();
    let (design, spec) = slot_design(j);
    let data = simulate_fixed(&design, &spec, v, n, seed);
    let p = logit_probabilities(v);
    for (k, (s, p)) in shares(&data, j).iter().zip(&p).enumerate() {
        let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((s - p).abs() <= bound, "J={j} alt {k}: share {s} vs {p} (bound {bound})");
    }
}

#[test]
fn gumbel_argmax_shares_follow_logit() {
    assert_shares_match(&[0.7, 0.0], 100_000, 1);
    assert_shares_match(&[2f64.ln(), 0.0, 0.0], 100_000, 2);
    assert_shares_match(&[0.3, -0.5, 1.1, 0.0, 0.4], 100_000, 3);
}

#[test]
fn equal_utilities_give_equal_shares() {
    assert_shares_match(&[0.0, 0.0, 0.0], 90_000, 4);
}

#[test]
fn dominant_constant_always_wins() {
    let (design, spec) = slot_design(3);
    let data = simulate_fixed(&design, &spec, &[0.0, 1e6, 0.0], 100_000, 5);
    assert!(data.rows.iter().filter(|r| r.chosen).all(|r| r.alt_id == 1));
}

fn rose_population(n: usize, seed: u64) -> (Design, AgentPopulation, UtilitySpec) {
    let cfg = rose();
    let design = run_design(&cfg).unwrap().design;
    let mut cfg = cfg;
    cfg.population.n_agents = n;
    cfg.seed = seed;
    let pop = dcesim::scenario::generate_population(&cfg).unwrap();
    (design, pop, cfg.utility)
}

#[test]
fn dataset_integrity_and_row_count() {
    for (n, seed) in [(1usize, 0u64), (1, 99), (100, 7)] {
        let (design, pop, spec) = rose_population(n, seed);
        let data = simulate_choices(&design, &pop, &spec, SeedStream::new(seed), SimulationOptions::default()).unwrap();
        assert_eq!(data.rows.len(), n * 12 * 3);
        assert_eq!(data.n_decisions(), n * 12);
        data.validate().unwrap();
    }
}

#[test]
fn randomized_set_order_keeps_integrity() {
    let (design, pop, spec) = rose_population(50, 3);
    let options = SimulationOptions { randomize_set_order: true };
    let data = simulate_choices(&design, &pop, &spec, SeedStream::new(3), options).unwrap();
    data.validate().unwrap();
    let first_sets: Vec<usize> = (0..50).map(|a| data.rows[a * 36].choice_set_id).collect();
    assert!(first_sets.iter().any(|&s| s != first_sets[0]));
}

#[test]
fn adding_a_constant_to_every_alternative_changes_no_choice() {
    let attrs = vec![
        AttributeSpec::discrete("x", vec![0.0, 1.0, 2.0]),
        AttributeSpec::discrete("z", vec![0.0, 1.0]),
    ];
    let sets: Vec<ChoiceSet> = (0..6)
        .map(|s| {
            let a = (s % 3) as f64;
            ChoiceSet::from_profiles(vec![Profile(vec![a, 0.0]), Profile(vec![2.0 - a, 1.0])], true)
        })
        .collect();
    let design = Design::new(attrs, sets).unwrap();
    let spec = UtilitySpec::new(vec![
        UtilityTerm::new("bx", vec![attr("x")]),
        UtilityTerm::new("bz", vec![attr("z")]),
        UtilityTerm::new("shift", vec![Factor::Constant]).on_slots(vec![0, 1, 2]),
    ]);
    let base = simulate_fixed(&design, &spec, &[0.4, -0.3, 0.0], 2000, 17);
    let shifted = simulate_fixed(&design, &spec, &[0.4, -0.3, 3.7], 2000, 17);
    let chosen = |d: &ChoiceDataset| d.rows.iter().map(|r| r.chosen).collect::<Vec<_>>();
    assert_eq!(chosen(&base), chosen(&shifted));
}

fn csv_bytes(data: &ChoiceDataset) -> Vec<u8> {
    let mut out = Vec::new();
    write_dataset_csv(data, &mut out).unwrap();
    out
}

#[test]
fn simulation_is_byte_identical_across_runs_and_thread_counts() {
    let (design, _, spec) = rose_population(1, 0);
    let covs = vec![CovariateSpec::new("sex", CovariateGenerator::ThresholdBinary { p: 0.49 }),
        CovariateSpec::new("age", CovariateGenerator::Uniform { lo: 18.0, hi: 80.0 }),
        CovariateSpec::new("income", CovariateGenerator::Normal { mean: 50.0, sd: 20.0, lower: Some(0.0) }),
        CovariateSpec::new("habit", CovariateGenerator::ThresholdBinary { p: 0.3 })];
    let model = rose().parameter_model().unwrap();
    let run = || {
        let seeds = SeedStream::new(424242);
        let pop = AgentPopulation::generate(&covs, spec.coef_names(), &model, 300, seeds).unwrap();
        csv_bytes(&simulate_choices(&design, &pop, &spec, seeds, SimulationOptions::default()).unwrap())
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
    assert_eq!(a, one);
    assert_eq!(a, four);
}

#[test]
fn random_parameters_vary_across_agents() {
    let (design, spec) = slot_design(2);
    let sigma = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.25]));
    let model = ParameterModel::Random { mu: vec![0.0, 0.5], sigma, random_mask: vec![1] };
    let data = simulate_model(&design, &spec, &model, 1000, 8);
    data.validate().unwrap();
}
