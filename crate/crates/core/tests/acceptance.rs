//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as a plain binary so the report is always printed.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use dcesim::design::{
    d_error, db_error, enumerate_choice_sets, fedorov_search, full_factorial, random_design, FedorovOptions, PriorSpec,
};
use dcesim::estimate::halton::radical_inverse;
use dcesim::estimate::mnl::mnl_loglik_value;
use dcesim::estimate::{fit_mmnl, fit_mnl, mmnl_simulated_loglik, mnl_loglik, HaltonSpec, MmnlOptions, MnlOptions, SimulationDraws};
use dcesim::population::{cholesky, draw_parameters, generate_covariates, CovariateGenerator, CovariateSpec, NormalSource, ParameterModel};
use dcesim::rng::{SeedStream, Stage};
use dcesim::scenario::{design_agents, run_design, run_pipeline, run_simulate, sha256_hex, ScenarioConfig};
use dcesim::simulate::logit_probabilities;
use nalgebra::DMatrix;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

fn c1_rose_structure() -> Outcome {
    let cfg = ScenarioConfig::rose();
    let two = full_factorial(&cfg.attributes[..2]).map_err(|e| e.to_string())?;
    let pairs = enumerate_choice_sets(two.len(), 2).map_err(|e| e.to_string())?;
    let design = run_design(&cfg).map_err(|e| e.to_string())?.design;
    let price = design.attribute_names().iter().position(|n| n == "price").unwrap();
    let prices_ok = design
        .choice_sets()
        .iter()
        .flat_map(|s| s.alternatives.iter().filter_map(|a| a.profile()))
        .all(|p| (1.5..=4.5).contains(&p.0[price]));
    let ok = two.len() == 4
        && pairs.len() == 6
        && design.n_sets() == 12
        && design.n_alternatives() == 3
        && design.has_optout()
        && prices_ok;
    check(
        ok,
        format!(
            "{} profiles, {} pairs, {} sets x {} alternatives, opt-out {}, prices in range {prices_ok}",
            two.len(),
            pairs.len(),
            design.n_sets(),
            design.n_alternatives(),
            design.has_optout()
        ),
    )
}

fn c2_gumbel_logit() -> Outcome {
    let v = [2f64.ln(), 0.0, 0.0];
    let n = 100_000;
    let (design, spec) = slot_design(3);
    let data = simulate_fixed(&design, &spec, &v, n, 2);
    let mut counts = [0usize; 3];
    for r in data.rows.iter().filter(|r| r.chosen) {
        counts[r.alt_id] += 1;
    }
    let p = logit_probabilities(&v);
    let mut worst = 0.0f64;
    for k in 0..3 {
        let share = counts[k] as f64 / n as f64;
        worst = worst.max((share - p[k]).abs() / (p[k] * (1.0 - p[k]) / n as f64).sqrt());
    }
    check(worst <= 3.0, format!("max |share - p| = {worst:.2} sigma"))
}

fn c3_mnl_recovery() -> Outcome {
    let base = ScenarioConfig::rose();
    let truth = base.parameter_model().map_err(|e| e.to_string())?.center().to_vec();
    let names = base.coef_names();
    let mut hits = vec![0usize; truth.len()];
    for seed in 1..=10u64 {
        let mut cfg = base.clone();
        cfg.seed = seed;
        let design = run_design(&cfg).map_err(|e| e.to_string())?.design;
        let sim = run_simulate(&cfg, &design).map_err(|e| e.to_string())?;
        let fit = fit_mnl(&decisions(&sim.dataset, &cfg.utility), MnlOptions::default()).map_err(|e| e.to_string())?;
        for i in 0..truth.len() {
            if (fit.beta_hat[i] - truth[i]).abs() <= 3.0 * fit.std_err[i] {
                hits[i] += 1;
            }
        }
    }
    let worst = hits.iter().enumerate().min_by_key(|(_, h)| **h).unwrap();
    check(
        hits.iter().all(|&h| h >= 9),
        format!("lowest per-coefficient coverage {}/10 ({})", worst.1, names[worst.0]),
    )
}

fn c4_mmnl_recovery() -> Outcome {
    let base = ScenarioConfig::rose_mixed();
    let label = base.utility.index_of("beta_label").unwrap();
    let mut passes = 0;
    let mut sds = Vec::new();
    for seed in 1..=10u64 {
        let mut cfg = base.clone();
        cfg.seed = seed;
        let design = run_design(&cfg).map_err(|e| e.to_string())?.design;
        let sim = run_simulate(&cfg, &design).map_err(|e| e.to_string())?;
        let data = decisions(&sim.dataset, &cfg.utility);
        let draws = SimulationDraws::halton(&HaltonSpec::new(1, 500), data.n_agents()).map_err(|e| e.to_string())?;
        let fit = fit_mmnl(&data, &[label], &draws, MmnlOptions::default()).map_err(|e| e.to_string())?;
        let sd_hat = fit.mixing.as_ref().unwrap().sd_hat[0];
        let mu_ok = (fit.beta_hat[label] - 0.8).abs() <= 3.0 * fit.std_err[label];
        if (0.3..=0.7).contains(&sd_hat) && mu_ok {
            passes += 1;
        }
        sds.push(format!("{sd_hat:.3}"));
    }
    check(passes >= 8, format!("{passes}/10 seeds; sd_hat = [{}]", sds.join(", ")))
}

fn c5_derivatives() -> Outcome {
    let mut rng = SeedStream::new(5).substream(Stage::Custom(50), 0);
    let h = 1e-5;
    let (mut g_worst, mut h_worst, mut m_worst) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let k = rng.random_range(2..=8);
        let n = rng.random_range(5..=50);
        let (design, spec) = random_instance(&mut rng, k, 4, 3);
        let beta: Vec<f64> = (0..k).map(|_| rng.random_range(-0.8..0.8)).collect();
        let data = decisions(&simulate_fixed(&design, &spec, &beta, n, rng.random()), &spec);
        let eval = mnl_loglik(&data, &beta);
        let mut fd_g = vec![0.0; k];
        let mut fd_h = DMatrix::<f64>::zeros(k, k);
        for c in 0..k {
            let (mut up, mut dn) = (beta.clone(), beta.clone());
            up[c] += h;
            dn[c] -= h;
            fd_g[c] = (mnl_loglik_value(&data, &up) - mnl_loglik_value(&data, &dn)) / (2.0 * h);
            let (gu, gd) = (mnl_loglik(&data, &up).gradient, mnl_loglik(&data, &dn).gradient);
            for r in 0..k {
                fd_h[(r, c)] = (gu[r] - gd[r]) / (2.0 * h);
            }
        }
        let g: Vec<f64> = eval.gradient.iter().copied().collect();
        g_worst = g_worst.max(vec_rel_err(&g, &fd_g));
        let (ha, hf): (Vec<f64>, Vec<f64>) = (eval.hessian.iter().copied().collect(), fd_h.iter().copied().collect());
        h_worst = h_worst.max(vec_rel_err(&ha, &hf));

        let random: Vec<usize> = (0..k).filter(|_| rng.random_bool(0.4)).take(3).collect();
        let random = if random.is_empty() { vec![0] } else { random };
        let sd: Vec<f64> = random.iter().map(|_| rng.random_range(0.2..1.0)).collect();
        let draws = SimulationDraws::halton(&HaltonSpec::new(random.len(), 50), data.n_agents()).map_err(|e| e.to_string())?;
        let ll = |mu: &[f64], sd: &[f64]| mmnl_simulated_loglik(&data, &random, mu, sd, &draws).unwrap().loglik;
        let e = mmnl_simulated_loglik(&data, &random, &beta, &sd, &draws).map_err(|e| e.to_string())?;
        let mut fd = Vec::new();
        for c in 0..k {
            let (mut up, mut dn) = (beta.clone(), beta.clone());
            up[c] += h;
            dn[c] -= h;
            fd.push((ll(&up, &sd) - ll(&dn, &sd)) / (2.0 * h));
        }
        for q in 0..sd.len() {
            let (mut up, mut dn) = (sd.clone(), sd.clone());
            up[q] += h;
            dn[q] -= h;
            fd.push((ll(&beta, &up) - ll(&beta, &dn)) / (2.0 * h));
        }
        let analytic: Vec<f64> = e.grad_mu.iter().chain(&e.grad_sd).copied().collect();
        m_worst = m_worst.max(vec_rel_err(&analytic, &fd));
    }
    check(
        g_worst < 1e-5 && h_worst < 1e-4 && m_worst < 1e-5,
        format!("MNL gradient {g_worst:.1e}, MNL Hessian {h_worst:.1e}, MMNL gradient {m_worst:.1e}"),
    )
}

fn c6_design_efficiency() -> Outcome {
    let cfg = ScenarioConfig::rose();
    let candidates = full_factorial(&cfg.attributes).map_err(|e| e.to_string())?;
    let agents = design_agents(&cfg).map_err(|e| e.to_string())?;
    let prior = cfg.prior().map_err(|e| e.to_string())?;
    let mean = prior.center().to_vec();
    let j = cfg.j_non_optout();
    let (mut searched, mut baseline) = (Vec::new(), Vec::new());
    for seed in 0..20u64 {
        let out = fedorov_search(
            &cfg.attributes, &candidates, 12, j, true, &cfg.utility, &prior, agents.as_ref(), SeedStream::new(seed),
            FedorovOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        searched.push(out.report.d_error);
        let mut rng = SeedStream::new(seed).substream(Stage::Custom(60), 0);
        let (random, _) = random_design(&cfg.attributes, &candidates, 12, j, true, &mut rng).map_err(|e| e.to_string())?;
        baseline.push(d_error(&random, &cfg.utility, &mean, agents.as_ref()).unwrap_or(f64::INFINITY));
    }
    let (ms, mb) = (median(searched), median(baseline));

    let design = run_design(&cfg).map_err(|e| e.to_string())?.design;
    let d = d_error(&design, &cfg.utility, &mean, agents.as_ref()).map_err(|e| e.to_string())?;
    let var: Vec<f64> = mean.iter().map(|m| (0.1 * m.abs()).powi(2) * 1e-8).collect();
    let tiny = PriorSpec::Bayesian {
        mean: mean.clone(),
        covariance: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(var)),
        n_draws: 500,
        quasi_random: true,
    };
    let db = db_error(&design, &cfg.utility, &tiny, agents.as_ref(), SeedStream::new(cfg.seed)).map_err(|e| e.to_string())?;
    let gap = rel_err(db, d);
    check(
        ms <= mb && gap <= 1e-6,
        format!("median fedorov {ms:.5} vs random {mb:.5}; DB vs D relative gap {gap:.1e}"),
    )
}

fn c7_cholesky_and_moments() -> Outcome {
    let mut rng = SeedStream::new(7).substream(Stage::Custom(70), 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.random_range(1..=10);
        let b = DMatrix::from_fn(k, k, |_, _| rng.random_range(-2.0..2.0));
        let sigma = &b * b.transpose();
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let l = cholesky(&sigma).map_err(|e| e.to_string())?;
        worst = worst.max((&l * l.transpose() - &sigma).abs().max());
    }
    let sd = [0.5, 1.0, 0.2];
    let rho = [[1.0, 0.3, -0.4], [0.3, 1.0, 0.1], [-0.4, 0.1, 1.0]];
    let sigma = DMatrix::from_fn(3, 3, |i, j| rho[i][j] * sd[i] * sd[j]);
    let model = ParameterModel::Random { mu: vec![0.8, -0.4, 1.5], sigma: sigma.clone(), random_mask: vec![0, 1, 2] };
    let n = 200_000;
    let draws = draw_parameters(&model, n, NormalSource::PseudoRandom(SeedStream::new(71))).map_err(|e| e.to_string())?;
    let mut means = [0.0; 3];
    for r in draws.iter_rows() {
        for i in 0..3 {
            means[i] += r[i] / n as f64;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(3, 3);
    for r in draws.iter_rows() {
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] += (r[i] - means[i]) * (r[j] - means[j]) / n as f64;
            }
        }
    }
    let cov_gap = (&cov - &sigma).abs().max();
    let bound = 0.02 * sigma.diagonal().max();
    check(
        worst <= 1e-10 && cov_gap <= bound,
        format!("max reconstruction error {worst:.1e}; max covariance gap {cov_gap:.4} (bound {bound})"),
    )
}

fn c8_threshold_binary() -> Outcome {
    let n = 100_000;
    let specs = [CovariateSpec::new("sex", CovariateGenerator::ThresholdBinary { p: 0.49 })];
    let m = generate_covariates(&specs, n, SeedStream::new(2013)).map_err(|e| e.to_string())?;
    let share = m.iter_rows().map(|r| r[0]).sum::<f64>() / n as f64;
    check((share - 0.49).abs() <= 0.0047, format!("proportion {share:.5}"))
}

fn digests(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), sha256_hex(&std::fs::read(&path).unwrap()))
        })
        .collect();
    out.sort();
    out
}

fn c9_determinism() -> Outcome {
    let cfg = ScenarioConfig::rose();
    let run = |threads: Option<usize>| -> Result<Vec<(String, String)>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let go = || run_pipeline(&cfg, dir.path()).map(|_| ()).map_err(|e| e.to_string());
        match threads {
            None => go()?,
            Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?.install(go)?,
        }
        Ok(digests(dir.path()))
    };
    let a = run(None)?;
    let b = run(None)?;
    let one = run(Some(1))?;
    let four = run(Some(4))?;
    check(
        a == b && a == one && a == four && !a.is_empty(),
        format!("{} artifacts compared across 2 default runs, 1 and 4 threads", a.len()),
    )
}

fn c10_halton_golden() -> Outcome {
    let b2 = [0.5, 0.25, 0.75, 0.125, 0.625];
    let b3 = [1.0 / 3.0, 2.0 / 3.0, 1.0 / 9.0, 4.0 / 9.0, 7.0 / 9.0];
    let mut worst = 0.0f64;
    for i in 0..5 {
        worst = worst.max((radical_inverse(i as u64 + 1, 2) - b2[i]).abs());
        worst = worst.max((radical_inverse(i as u64 + 1, 3) - b3[i]).abs());
    }
    check(worst <= 1e-15, format!("max deviation {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("1 rose structure", c1_rose_structure, Duration::from_secs(1)),
        ("2 gumbel-logit shares", c2_gumbel_logit, Duration::from_secs(10)),
        ("3 MNL recovery", c3_mnl_recovery, Duration::from_secs(600)),
        ("4 MMNL recovery", c4_mmnl_recovery, Duration::from_secs(6000)),
        ("5 derivative checks", c5_derivatives, Duration::from_secs(30)),
        ("6 design efficiency", c6_design_efficiency, Duration::from_secs(120)),
        ("7 cholesky and moments", c7_cholesky_and_moments, Duration::from_secs(30)),
        ("8 threshold binary", c8_threshold_binary, Duration::from_secs(1)),
        ("9 determinism", c9_determinism, Duration::from_secs(120)),
        ("10 halton golden values", c10_halton_golden, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if took <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over budget")),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} criterion {name}: {detail} [{:.2}s, budget {}s]", took.as_secs_f64(), budget.as_secs());
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
