//! Declarative experiments: a JSON scenario names a model, a time grid,
//! witnesses and divisibility orders; running it writes CSV trajectories and
//! JSON reports. Identical scenario files give byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    self, DivisibilityReport, DynamicalMap, Model, ModelParams, TotalSystemModel,
};
use crate::error::Error;
use crate::maps::{MatrixJson, DEFAULT_RESTARTS};
use crate::quantum::{join_rows, DensityOperator, StateJson};
use crate::random::sub_seed;
use crate::witness::{
    self, Consistency, Probe, ProbeJson, WitnessKind, WitnessSpec, WitnessTrajectory,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub witnesses: Vec<WitnessEntry>,
    /// Orders `k` for the divisibility report; empty means `1..=d`.
    #[serde(default)]
    pub ks: Vec<usize>,
    /// Master seed; every consumed seed derives from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_out() -> PathBuf {
    PathBuf::from("qdiv-out")
}

/// Either a bundled model by name or an explicit system-environment model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<TotalSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TotalSpec {
    pub dim_s: usize,
    pub dim_e: usize,
    /// Hamiltonian on `S ⊗ E`.
    pub hamiltonian: MatrixJson,
    pub env: StateJson,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_max: f64,
    /// Number of intervals; the grid has `steps + 1` points.
    pub steps: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|i| self.t_max * i as f64 / self.steps as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessEntry {
    pub witness: WitnessKind,
    #[serde(default)]
    pub ancilla_k: usize,
    /// Explicit probes, evaluated before the random ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeJson>,
    /// Random probes; defaults to 20 without explicit probes, 0 with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Local error tolerance of the time-dependent integrator.
    pub integrator: f64,
    /// Relative monotonicity tolerance of the witnesses.
    pub eps_mono: f64,
    /// Restarts of the k-positivity search per step.
    pub k_positivity_restarts: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            integrator: 1e-10,
            eps_mono: witness::EPS_MONO,
            k_positivity_restarts: DEFAULT_RESTARTS,
        }
    }
}

/// Command-line overrides of scenario fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub integrator_tol: Option<f64>,
}

#[derive(Debug)]
pub struct ScenarioError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ScenarioError {}

fn schema(message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError {
        code: EXIT_SCHEMA,
        message: format!("schema error: {message}"),
    }
}

fn numerical(message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError {
        code: EXIT_NUMERICAL,
        message: format!("numerical failure: {message}"),
    }
}

fn io(path: &Path, e: std::io::Error) -> ScenarioError {
    numerical(format!("{}: {e}", path.display()))
}

/// Everything a run needs, fully validated before any output is written.
pub struct Prepared {
    pub scenario: Scenario,
    pub model: Model,
    pub grid: Vec<f64>,
    pub ks: Vec<usize>,
    pub specs: Vec<WitnessSpec>,
    pub seeds: SeedManifest,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedManifest {
    pub master: u64,
    pub divisibility: u64,
    /// Per witness: the seed of its random probes and optimizers.
    pub witnesses: Vec<u64>,
}

/// Parses and validates a scenario, applying overrides.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Prepared, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    let mut scenario: Scenario = serde_json::from_str(&text).map_err(schema)?;
    if let Some(out) = &overrides.out {
        scenario.out = out.clone();
    }
    if let Some(seed) = overrides.seed {
        scenario.seed = seed;
    }
    if let Some(tol) = overrides.integrator_tol {
        scenario.tolerances.integrator = tol;
    }
    prepare(scenario)
}

pub fn prepare(scenario: Scenario) -> Result<Prepared, ScenarioError> {
    let g = scenario.grid;
    if !(g.t_max > 0.0 && g.t_max.is_finite()) {
        return Err(schema(format!("grid.t_max = {} must be positive", g.t_max)));
    }
    if g.steps < 2 {
        return Err(schema(format!(
            "grid.steps = {} must be at least 2",
            g.steps
        )));
    }
    let tol = scenario.tolerances;
    if !(tol.integrator > 0.0 && tol.integrator.is_finite()) {
        return Err(schema(format!(
            "tolerances.integrator = {}",
            tol.integrator
        )));
    }
    if tol.k_positivity_restarts == 0 {
        return Err(schema("tolerances.k_positivity_restarts must be positive"));
    }
    let model = build_model(&scenario.model).map_err(schema)?;
    let d = model.dim();
    let ks = if scenario.ks.is_empty() {
        (1..=d).collect()
    } else {
        scenario.ks.clone()
    };
    if let Some(k) = ks.iter().find(|&&k| k == 0 || k > d) {
        return Err(schema(format!("k = {k} outside 1..={d}")));
    }
    let master = scenario.seed;
    let witness_seeds: Vec<u64> = (0..scenario.witnesses.len())
        .map(|i| sub_seed(master, 1 + i as u64))
        .collect();
    let specs = scenario
        .witnesses
        .iter()
        .zip(&witness_seeds)
        .enumerate()
        .map(|(i, (w, &seed))| {
            build_witness(w, d, seed, tol.eps_mono).map_err(|e| schema(format!("witness {i}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Prepared {
        grid: g.points(),
        model,
        ks,
        specs,
        seeds: SeedManifest {
            master,
            divisibility: sub_seed(master, 0),
            witnesses: witness_seeds,
        },
        scenario,
    })
}

fn build_model(m: &ModelSpec) -> crate::Result<Model> {
    match (&m.name, &m.total) {
        (Some(name), None) => dynamics::model(name, &m.params.clone().unwrap_or_default()),
        (None, Some(t)) => {
            if m.params.is_some() {
                return Err(Error::Serde("`params` only applies to named models".into()));
            }
            let h = join_rows(&t.hamiltonian.re, &t.hamiltonian.im)?;
            let env = DensityOperator::from_json(&t.env)?;
            Ok(Model::Total(TotalSystemModel::new(
                t.dim_s, t.dim_e, h, env,
            )?))
        }
        _ => Err(Error::Serde(
            "model needs exactly one of `name` or `total`".into(),
        )),
    }
}

fn build_witness(
    w: &WitnessEntry,
    d: usize,
    seed: u64,
    eps_mono: f64,
) -> crate::Result<WitnessSpec> {
    let explicit: Vec<Probe> = w
        .probes
        .iter()
        .map(Probe::from_json)
        .collect::<crate::Result<_>>()?;
    let count = w.random_probes.unwrap_or(if explicit.is_empty() {
        witness::DEFAULT_PROBES
    } else {
        0
    });
    let mut spec = WitnessSpec::random(w.witness, d, w.ancilla_k, count, seed)?;
    spec.probes.splice(0..0, explicit);
    if let Some(r) = w.restarts {
        spec.restarts = r;
    }
    spec.eps_mono = eps_mono;
    spec.validate(d)?;
    Ok(spec)
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessSummary {
    pub label: String,
    pub kind: WitnessKind,
    pub ancilla_k: usize,
    pub probes: usize,
    pub probes_with_violations: usize,
    pub violations: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub verdicts: Vec<(usize, String)>,
    pub witnesses: Vec<WitnessSummary>,
    pub status: Consistency,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a Scenario,
    seeds: &'a SeedManifest,
    files: &'a [String],
}

/// Writes `contents` under `root`, recording the relative path.
fn write(
    root: &Path,
    rel: &str,
    contents: &str,
    files: &mut Vec<String>,
) -> Result<(), ScenarioError> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
    }
    fs::write(&path, contents).map_err(|e| io(&path, e))?;
    files.push(rel.to_string());
    Ok(())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Runs a prepared scenario. Outputs written before a numerical failure stay
/// on disk, and the manifest is written in every case.
pub fn execute(p: &Prepared) -> Result<Outcome, ScenarioError> {
    let root = p.scenario.out.as_path();
    fs::create_dir_all(root).map_err(|e| io(root, e))?;
    let mut files = Vec::new();
    let result = execute_into(p, root, &mut files);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: &p.scenario,
        seeds: &p.seeds,
        files: &files,
    };
    let path = root.join("manifest.json");
    fs::write(&path, json(&manifest)).map_err(|e| io(&path, e))?;
    result
}

fn execute_into(
    p: &Prepared,
    root: &Path,
    files: &mut Vec<String>,
) -> Result<Outcome, ScenarioError> {
    let tol = p.scenario.tolerances;
    let dm: DynamicalMap = p.model.evolve(&p.grid, tol.integrator).map_err(numerical)?;
    let report: DivisibilityReport =
        dynamics::divisibility_report(&dm, &p.ks, tol.k_positivity_restarts, p.seeds.divisibility)
            .map_err(numerical)?;
    write(root, "divisibility.json", &json(&report), files)?;

    let mut all: Vec<WitnessTrajectory> = Vec::new();
    let mut summaries = Vec::new();
    for (i, spec) in p.specs.iter().enumerate() {
        let trajectories =
            witness::run(&dm, spec).map_err(|e| numerical(format!("witness {i}: {e}")))?;
        let label = trajectories
            .first()
            .map(WitnessTrajectory::label)
            .unwrap_or_else(|| spec.kind.label());
        let dir = format!("witnesses/{i:02}_{label}");
        let mut written = Vec::new();
        for t in &trajectories {
            let rel = format!("{dir}/probe_{:02}.csv", t.probe);
            write(root, &rel, &t.to_csv(), files)?;
            written.push(rel);
        }
        summaries.push(WitnessSummary {
            label,
            kind: spec.kind,
            ancilla_k: spec.ancilla_k,
            probes: trajectories.len(),
            probes_with_violations: trajectories
                .iter()
                .filter(|t| !t.violations.is_empty())
                .count(),
            violations: trajectories.iter().map(|t| t.violations.len()).sum(),
            files: written,
        });
        all.extend(trajectories);
    }
    let reconciliation = witness::verdict(&dm, &all, &report).map_err(numerical)?;
    write(root, "reconciliation.json", &json(&reconciliation), files)?;
    let outcome = Outcome {
        verdicts: report.per_k.iter().map(|k| (k.k, k.verdict())).collect(),
        witnesses: summaries,
        status: reconciliation.status,
    };
    write(root, "summary.json", &json(&outcome), files)?;
    Ok(outcome)
}

/// Loads, runs and reports a scenario; returns the process exit code.
pub fn run_scenario(path: &Path, overrides: &Overrides) -> i32 {
    let result = load(path, overrides).and_then(|p| execute(&p).map(|o| (p, o)));
    match result {
        Ok((p, outcome)) => {
            print!("{}", render(&p, &outcome));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            e.code
        }
    }
}

/// Human-readable run summary.
pub fn render(p: &Prepared, o: &Outcome) -> String {
    let mut s = format!(
        "{} on {} grid points up to t = {}\n",
        p.scenario
            .model
            .name
            .as_deref()
            .unwrap_or("explicit total model"),
        p.grid.len(),
        p.scenario.grid.t_max
    );
    for (k, v) in &o.verdicts {
        s.push_str(&format!("k = {k}: {v}\n"));
    }
    for w in &o.witnesses {
        s.push_str(&format!(
            "{}: {} violations on {}/{} probes\n",
            w.label, w.violations, w.probes_with_violations, w.probes
        ));
    }
    let status = serde_json::to_value(o.status).expect("status serializes");
    s.push_str(&format!(
        "reconciliation: {}\n",
        status.as_str().unwrap_or_default()
    ));
    s.push_str(&format!("outputs in {}\n", p.scenario.out.display()));
    s
}

/// Bundled models and witness kinds.
pub fn list_models() -> String {
    let mut s = String::from("models:\n");
    for (name, about) in dynamics::MODELS {
        s.push_str(&format!("  {name:<22} {about}\n"));
    }
    s.push_str("  (or \"total\": {dim_s, dim_e, hamiltonian, env} for an explicit system-environment model)\n");
    s.push_str("\nmodel params: gamma (number), rate (rate function), rates (three rate functions), coupling (number)\n");
    s.push_str("rate functions: {\"form\":\"constant\",\"c\"}, {\"form\":\"sinusoid\",\"a\",\"omega\",\"phi\"}, {\"form\":\"neg_tanh\"}, {\"form\":\"piecewise_linear\",\"knots\":[[t,v],...]}\n");
    s.push_str("\nwitness kinds:\n");
    for (name, about) in witness::WITNESS_KINDS {
        s.push_str(&format!("  {name:<22} {about}\n"));
    }
    s
}
