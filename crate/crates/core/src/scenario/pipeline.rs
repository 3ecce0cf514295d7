//! Config-driven stages: design, simulate, estimate, and the full pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::design::io::{read_design_csv, write_design_csv, write_report_json};
use crate::design::{evaluate_design, factorial_design, fedorov_search, full_factorial, Design, EfficiencyReport};
use crate::error::{Error, Result};
use crate::estimate::result::finite_or_null;
use crate::estimate::{fit_mmnl, fit_mnl, wtp, DecisionData, EstimationResult, HaltonSpec, MmnlOptions, MnlOptions, ModelKind, SimulationDraws};
use crate::population::io::write_population_csv;
use crate::population::{AgentPopulation, ParameterModel};
use crate::rng::{SeedStream, Stage};
use crate::scenario::config::{DesignMode, ScenarioConfig};
use crate::simulate::io::{read_dataset_csv, write_dataset_csv, write_meta_json};
use crate::simulate::{simulate_choices, ChoiceDataset, DatasetMeta, SimulationOptions};

pub const DESIGN_CSV: &str = "design.csv";
pub const EFFICIENCY_JSON: &str = "efficiency.json";
pub const POPULATION_CSV: &str = "population.csv";
pub const DATASET_CSV: &str = "dataset.csv";
pub const DATASET_META_JSON: &str = "dataset.meta.json";
pub const SUMMARY_JSON: &str = "summary.json";

pub fn estimate_file_name(model: ModelKind) -> String {
    match model {
        ModelKind::Mnl => "estimate_mnl.json".into(),
        ModelKind::Mmnl => "estimate_mmnl.json".into(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn master(cfg: &ScenarioConfig) -> SeedStream {
    SeedStream::new(cfg.seed)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn json_bytes(value: &Value) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Covariate sample the information matrix is averaged over, when the
/// utility uses covariates.
pub fn design_agents(cfg: &ScenarioConfig) -> Result<Option<AgentPopulation>> {
    if !cfg.utility.uses_covariates() {
        return Ok(None);
    }
    let seeds = master(cfg).child(Stage::DesignAgents);
    AgentPopulation::covariates_only(&cfg.population.covariates, cfg.design.n_design_agents, seeds).map(Some)
}

#[derive(Clone, Debug)]
pub struct DesignStage {
    pub design: Design,
    pub report: EfficiencyReport,
}

impl DesignStage {
    pub fn design_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_design_csv(&self.design, &mut out)?;
        Ok(out)
    }

    pub fn report_json(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_report_json(&self.report, &mut out)?;
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join(DESIGN_CSV), &self.design_csv()?)?;
        write_file(&dir.join(EFFICIENCY_JSON), &self.report_json()?)
    }
}

/// Build or import the design and evaluate it under the configured prior.
pub fn run_design(cfg: &ScenarioConfig) -> Result<DesignStage> {
    let seeds = master(cfg);
    let prior = cfg.prior()?;
    let agents = design_agents(cfg)?;
    let j = cfg.j_non_optout();
    let d = &cfg.design;
    let design = match d.mode {
        DesignMode::FullFactorial => {
            let mut rng = seeds.substream(Stage::ContinuousLevels, 0);
            factorial_design(&cfg.attributes, d.n_sets, j, d.include_optout, &mut rng)?
        }
        DesignMode::Fedorov => {
            let candidates = full_factorial(&cfg.attributes)?;
            let outcome = fedorov_search(
                &cfg.attributes,
                &candidates,
                d.n_sets,
                j,
                d.include_optout,
                &cfg.utility,
                &prior,
                agents.as_ref(),
                seeds,
                cfg.fedorov_options(),
            )?;
            outcome.design
        }
        DesignMode::Imported => {
            let path = d.path.as_deref().expect("validated");
            load_design(cfg, Path::new(path))?
        }
    };
    let report = evaluate_design(&design, &cfg.utility, &prior, agents.as_ref(), seeds)?;
    Ok(DesignStage { design, report })
}

/// Read a design CSV and check it against the config's attributes and
/// set dimensions.
pub fn load_design(cfg: &ScenarioConfig, path: &Path) -> Result<Design> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let design = read_design_csv(&cfg.attributes, std::io::BufReader::new(file))?;
    if design.n_alternatives() != cfg.design.n_alternatives || design.has_optout() != cfg.design.include_optout {
        return Err(Error::Schema(format!(
            "design has {} alternatives per set (opt-out: {}), config expects {} (opt-out: {})",
            design.n_alternatives(),
            design.has_optout(),
            cfg.design.n_alternatives,
            cfg.design.include_optout
        )));
    }
    Ok(design)
}

#[derive(Clone, Debug)]
pub struct SimulateStage {
    pub population: AgentPopulation,
    pub dataset: ChoiceDataset,
}

impl SimulateStage {
    pub fn dataset_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_dataset_csv(&self.dataset, &mut out)?;
        Ok(out)
    }

    pub fn meta_json(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_meta_json(&self.dataset.meta, &mut out)?;
        Ok(out)
    }

    pub fn population_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_population_csv(&self.population, true, &mut out)?;
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join(DATASET_CSV), &self.dataset_csv()?)?;
        write_file(&dir.join(DATASET_META_JSON), &self.meta_json()?)
    }
}

pub fn generate_population(cfg: &ScenarioConfig) -> Result<AgentPopulation> {
    AgentPopulation::generate(
        &cfg.population.covariates,
        cfg.coef_names(),
        &cfg.parameter_model()?,
        cfg.population.n_agents,
        master(cfg),
    )
}

/// Generate the population and simulate its answers to `design`.
pub fn run_simulate(cfg: &ScenarioConfig, design: &Design) -> Result<SimulateStage> {
    let population = generate_population(cfg)?;
    let options = SimulationOptions { randomize_set_order: cfg.population.randomize_set_order };
    let mut dataset = simulate_choices(design, &population, &cfg.utility, master(cfg), options)?;
    let mut design_csv = Vec::new();
    write_design_csv(design, &mut design_csv)?;
    dataset.meta.design_digest = sha256_hex(&design_csv);
    Ok(SimulateStage { population, dataset })
}

/// Read a dataset CSV, with its metadata sidecar when one sits next to it.
pub fn load_dataset(cfg: &ScenarioConfig, path: &Path) -> Result<ChoiceDataset> {
    let meta_path = sidecar_path(path);
    let meta: Option<DatasetMeta> = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        Some(serde_json::from_str(&text)?)
    } else {
        None
    };
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let names: Vec<String> = cfg.attributes.iter().map(|a| a.name.clone()).collect();
    read_dataset_csv(std::io::BufReader::new(file), &names, meta)
}

/// `dataset.csv` -> `dataset.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

#[derive(Clone, Debug)]
pub struct WtpEntry {
    pub attribute: String,
    pub price: String,
    /// `None` when the price coefficient is numerically zero.
    pub estimate: Option<crate::estimate::Wtp>,
}

#[derive(Clone, Debug)]
pub struct ModelReport {
    pub result: EstimationResult,
    pub wtp: Vec<WtpEntry>,
}

impl ModelReport {
    pub fn to_json(&self, seed: u64) -> Value {
        let mut extra = Map::new();
        extra.insert("seed".into(), json!(seed));
        extra.insert("wtp".into(), wtp_json(&self.wtp));
        self.result.to_json(extra)
    }
}

fn wtp_json(entries: &[WtpEntry]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|w| match &w.estimate {
                Some(e) => json!({
                    "attribute": w.attribute,
                    "price": w.price,
                    "wtp": finite_or_null(e.value),
                    "se": finite_or_null(e.std_err),
                }),
                None => json!({
                    "attribute": w.attribute,
                    "price": w.price,
                    "wtp": Value::Null,
                    "se": Value::Null,
                    "note": "undefined: price coefficient is zero",
                }),
            })
            .collect(),
    )
}

/// Fit every configured model to `dataset`.
pub fn run_estimate(cfg: &ScenarioConfig, dataset: &ChoiceDataset) -> Result<Vec<ModelReport>> {
    let data = DecisionData::build(dataset, &cfg.utility)?;
    let e = &cfg.estimation;
    let mnl = MnlOptions { tol: e.tol, max_iter: e.max_iter };
    let mut out = Vec::with_capacity(e.models.len());
    for &model in &e.models {
        let result = match model {
            ModelKind::Mnl => fit_mnl(&data, mnl)?,
            ModelKind::Mmnl => {
                let random = cfg.random_indices()?;
                let spec = HaltonSpec::new(random.len(), e.halton.n_draws).with_burn(e.halton.burn);
                let draws = SimulationDraws::halton(&spec, data.n_agents())?;
                let options = MmnlOptions { mnl, ..MmnlOptions::default() };
                fit_mmnl(&data, &random, &draws, options)?
            }
        };
        let mut entries = Vec::with_capacity(e.wtp.len());
        for w in &e.wtp {
            let estimate = match wtp(&result, &w.attribute, &w.price) {
                Ok(v) => Some(v),
                Err(Error::UndefinedWtp(_)) => None,
                Err(other) => return Err(other),
            };
            entries.push(WtpEntry { attribute: w.attribute.clone(), price: w.price.clone(), estimate });
        }
        out.push(ModelReport { result, wtp: entries });
    }
    Ok(out)
}

pub fn write_estimates(cfg: &ScenarioConfig, reports: &[ModelReport], dir: &Path) -> Result<()> {
    for r in reports {
        let bytes = json_bytes(&r.to_json(cfg.seed))?;
        write_file(&dir.join(estimate_file_name(r.result.model)), &bytes)?;
    }
    Ok(())
}

fn truth_row(name: &str, truth: f64, est: f64, se: f64) -> Value {
    let z = (est - truth) / se;
    json!({
        "coefficient": name,
        "truth": truth,
        "estimate": est,
        "se": finite_or_null(se),
        "z": finite_or_null(z),
    })
}

/// Truth-vs-estimate table for one model. Returns the rows and whether
/// every z-score is finite and within 3.
fn recovery_table(model: &ParameterModel, r: &EstimationResult) -> (Value, bool) {
    let truth = model.center();
    let mut rows = Vec::new();
    let mut ok = true;
    let mut push = |row: Value, z: f64| {
        ok &= z.is_finite() && z.abs() <= 3.0;
        rows.push(row);
    };
    for (i, name) in r.names.iter().enumerate() {
        let z = (r.beta_hat[i] - truth[i]) / r.std_err[i];
        push(truth_row(name, truth[i], r.beta_hat[i], r.std_err[i]), z);
    }
    if let Some(m) = &r.mixing {
        for (j, &i) in m.random.iter().enumerate() {
            let sd_true = match model {
                ParameterModel::Random { sigma, .. } => sigma[(i, i)].sqrt(),
                ParameterModel::Fixed { .. } => 0.0,
            };
            let name = format!("sd({})", r.names[i]);
            let z = (m.sd_hat[j] - sd_true) / m.sd_se[j];
            push(truth_row(&name, sd_true, m.sd_hat[j], m.sd_se[j]), z);
        }
    }
    (Value::Array(rows), ok)
}

/// Summary of a pipeline run: D-error, recovery and WTP per model.
pub fn summary_json(cfg: &ScenarioConfig, design: &DesignStage, sim: &SimulateStage, reports: &[ModelReport]) -> Result<Value> {
    let model = cfg.parameter_model()?;
    let mut models = Map::new();
    for r in reports {
        let (table, within) = recovery_table(&model, &r.result);
        let key = serde_json::to_value(r.result.model)?.as_str().unwrap_or_default().to_string();
        models.insert(
            key,
            json!({
                "converged": r.result.converged,
                "loglik": finite_or_null(r.result.loglik),
                "recovery": table,
                "all_within_3se": within,
                "wtp": wtp_json(&r.wtp),
            }),
        );
    }
    Ok(json!({
        "seed": cfg.seed,
        "criterion": design.report.criterion,
        "d_error": finite_or_null(design.report.d_error),
        "n_sets": design.design.n_sets(),
        "n_alternatives": design.design.n_alternatives(),
        "n_agents": sim.population.n(),
        "n_rows": sim.dataset.rows.len(),
        "design_digest": sim.dataset.meta.design_digest,
        "models": Value::Object(models),
    }))
}

/// Design, simulate and estimate in one run, writing every artifact into
/// `dir`. Returns the summary.
pub fn run_pipeline(cfg: &ScenarioConfig, dir: &Path) -> Result<Value> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let design = run_design(cfg)?;
    design.write(dir)?;
    let sim = run_simulate(cfg, &design.design)?;
    sim.write(dir)?;
    write_file(&dir.join(POPULATION_CSV), &sim.population_csv()?)?;
    let reports = run_estimate(cfg, &sim.dataset)?;
    write_estimates(cfg, &reports, dir)?;
    let summary = summary_json(cfg, &design, &sim, &reports)?;
    write_file(&dir.join(SUMMARY_JSON), &json_bytes(&summary)?)?;
    Ok(summary)
}
