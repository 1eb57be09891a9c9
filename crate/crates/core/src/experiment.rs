//! Experiment pipelines behind the command-line tool.
//!
//! Every function here is deterministic in its configuration: all randomness
//! is drawn from generators derived from one master seed, and every report
//! carries its configuration so an output file documents how to reproduce
//! it. Depths are counted under an explicit [`CostModel`], which is named in
//! each report; they are not comparable with depths from a hardware
//! transpiler.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::anf::{assignment_bits, brute_force_solve, generate_system, substream, BqeSystem};
use crate::circuit::{Circuit, CostModel};
use crate::compress::{compress_with, segment};
use crate::error::{Error, Result};
use crate::grover::{
    best_iterations, diffusion_circuit, equations_per_iteration, estimate_mtilde, min_iterations_for_shots,
    optimize_jk, run_randomized_with, DiffusionMode, JkChoice, RunOptions, SplitPlan, SplitStrategy, TwoLevelModel,
};
use crate::oracle::{capacity_f, compile, min_ancillas, OracleSpec, OracleStyle};

/// A reproducible seed for substream `stream` of `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    substream(master, stream).next_u64()
}

/// Named cost models selectable from the command line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostChoice {
    /// Unit gates, MCZ charged one plus its qubit count.
    #[default]
    Default,
    Unit,
    /// MCX charged as its two-qubit decomposition.
    Decomposed,
}

impl CostChoice {
    pub fn model(self) -> CostModel {
        match self {
            CostChoice::Default => CostModel::default(),
            CostChoice::Unit => CostModel::unit(),
            CostChoice::Decomposed => CostModel::decomposed(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// A table plus the configuration that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Map<String, Value>,
    pub warnings: Vec<String>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn new(config: Value, columns: &[&str]) -> Self {
        Report {
            config,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Map::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// The cell at `row` in column `name`.
    pub fn get(&self, row: usize, name: &str) -> Option<&Value> {
        let col = self.columns.iter().position(|c| c == name)?;
        self.rows.get(row)?.get(col)
    }

    fn summary_value(&self) -> Value {
        let mut s = self.summary.clone();
        if !self.warnings.is_empty() {
            s.insert("warnings".into(), json!(self.warnings));
        }
        Value::Object(s)
    }

    /// CSV with the configuration (and summary, if any) as leading `#`
    /// comment lines, then a header row. LF line endings.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = format!("# config: {}\n", serde_json::to_string(&self.config)?);
        let summary = self.summary_value();
        if summary.as_object().is_some_and(|s| !s.is_empty()) {
            out.push_str(&format!("# summary: {}\n", serde_json::to_string(&summary)?));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        out.push_str(&String::from_utf8(bytes).expect("CSV output is UTF-8"));
        Ok(out)
    }

    /// Pretty JSON with sorted keys.
    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        let doc = json!({ "config": self.config, "rows": rows, "summary": self.summary_value() });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn with_command(command: &str, config: &impl Serialize) -> Result<Value> {
    let mut v = serde_json::to_value(config)?;
    if let Value::Object(m) = &mut v {
        m.insert("command".into(), json!(command));
    }
    Ok(v)
}

/// Mean and sample standard deviation (`None` below two samples).
pub fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

// ---------------------------------------------------------------------------
// capacity

/// `F(ℓ, m)` for `1 ≤ ℓ ≤ lmax`, `1 ≤ m ≤ mmax`, one row per level.
pub fn capacity_report(lmax: usize, mmax: usize) -> Result<Report> {
    if lmax == 0 || mmax == 0 || mmax > 60 {
        return Err(Error::Input(format!("need 1 <= lmax and 1 <= mmax <= 60, got ({lmax}, {mmax})")));
    }
    let config = json!({ "command": "capacity", "lmax": lmax, "mmax": mmax });
    let headers: Vec<String> = std::iter::once("level".to_string()).chain((1..=mmax).map(|m| format!("m={m}"))).collect();
    let refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut report = Report::new(config, &refs);
    for l in 1..=lmax {
        report.push(std::iter::once(json!(l)).chain((1..=mmax).map(|m| json!(capacity_f(l, m)))).collect());
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// gen

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub min_solutions: u64,
    pub max_solutions: u64,
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSystem {
    pub index: usize,
    pub seed: u64,
    pub system: BqeSystem,
    pub solutions: Vec<u64>,
}

/// `count` systems, system `i` generated from `derive_seed(seed, i)` and
/// checked by brute force.
pub fn generate_corpus(cfg: &GenConfig) -> Result<Vec<GeneratedSystem>> {
    (0..cfg.count)
        .map(|index| {
            let seed = derive_seed(cfg.seed, index as u64);
            let system = generate_system(cfg.n, cfg.min_solutions, cfg.max_solutions, seed).map_err(|e| match e {
                Error::Generation { attempts, reason } => {
                    Error::Generation { attempts, reason: format!("system {index}: {reason}") }
                }
                other => other,
            })?;
            let solutions = brute_force_solve(&system)?;
            if !(cfg.min_solutions..=cfg.max_solutions).contains(&(solutions.len() as u64)) {
                return Err(Error::Contract(format!("system {index} has {} solutions", solutions.len())));
            }
            Ok(GeneratedSystem { index, seed, system, solutions })
        })
        .collect()
}

pub fn system_file_name(index: usize) -> String {
    format!("system_{index:03}.json")
}

/// The system as JSON with its generation metadata alongside.
pub fn system_file_json(cfg: &GenConfig, g: &GeneratedSystem) -> Result<String> {
    let mut v = serde_json::to_value(&g.system)?;
    let m = v.as_object_mut().expect("systems serialize as objects");
    m.insert("config".into(), with_command("gen", cfg)?);
    m.insert("index".into(), json!(g.index));
    m.insert("seed".into(), json!(g.seed));
    m.insert("solutions".into(), json!(g.solutions));
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Writes the corpus into `dir`, one file per system; returns the paths.
pub fn write_corpus(cfg: &GenConfig, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let corpus = generate_corpus(cfg)?;
    std::fs::create_dir_all(dir)?;
    corpus
        .iter()
        .map(|g| {
            let path = dir.join(system_file_name(g.index));
            std::fs::write(&path, system_file_json(cfg, g)?)?;
            Ok(path)
        })
        .collect()
}

pub fn load_system(path: &Path) -> Result<BqeSystem> {
    BqeSystem::from_json(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// compile / compress

/// The oracle layout for `equations` equations; missing ancilla counts are
/// filled with the smallest that fits.
pub fn resolve_spec(style: OracleStyle, level: usize, ancillas: Option<usize>, equations: usize) -> OracleSpec {
    let equations = equations.max(1);
    match style {
        OracleStyle::Recursive => {
            OracleSpec::recursive(level, ancillas.unwrap_or_else(|| min_ancillas(level, equations)))
        }
        OracleStyle::Stack => OracleSpec::stack(ancillas.unwrap_or(equations)),
        OracleStyle::Product => OracleSpec::product(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileConfig {
    pub level: usize,
    pub ancillas: Option<usize>,
    pub style: OracleStyle,
    pub compress: bool,
    pub cost: CostChoice,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig { level: 2, ancillas: None, style: OracleStyle::Recursive, compress: true, cost: CostChoice::Default }
    }
}

#[derive(Clone, Debug)]
pub struct CompileOutcome {
    pub spec: OracleSpec,
    pub circuit: Circuit,
    pub compressed: Option<Circuit>,
    pub depth_before: u64,
    pub depth_after: u64,
}

impl CompileOutcome {
    /// The circuit to emit: compressed if compression was requested.
    pub fn output(&self) -> &Circuit {
        self.compressed.as_ref().unwrap_or(&self.circuit)
    }

    pub fn ratio(&self) -> f64 {
        if self.depth_before == 0 {
            1.0
        } else {
            self.depth_after as f64 / self.depth_before as f64
        }
    }
}

pub fn compile_system(system: &BqeSystem, cfg: &CompileConfig) -> Result<CompileOutcome> {
    let spec = resolve_spec(cfg.style, cfg.level, cfg.ancillas, system.len());
    let circuit = compile(system, &spec)?;
    let model = cfg.cost.model();
    let depth_before = circuit.depth(&model);
    let compressed = cfg.compress.then(|| compress_with(&circuit, &model));
    let depth_after = compressed.as_ref().map_or(depth_before, |c| c.depth(&model));
    Ok(CompileOutcome { spec, circuit, compressed, depth_before, depth_after })
}

/// Per-system depths before and after compression, with the mean and sample
/// standard deviation of the relative reduction.
pub fn compile_report(systems: &[(String, BqeSystem)], cfg: &CompileConfig) -> Result<Report> {
    let mut config = with_command("compile", cfg)?;
    config["cost_model"] = json!(cfg.cost.model().describe());
    let mut report = Report::new(
        config,
        &[
            "system",
            "n",
            "equations",
            "style",
            "level",
            "ancillas",
            "gates",
            "depth",
            "compressed_gates",
            "compressed_depth",
            "ratio",
            "reduction",
        ],
    );
    let mut reductions = Vec::new();
    let mut ratios = Vec::new();
    for (name, system) in systems {
        let o = compile_system(system, cfg)?;
        let style = serde_json::to_value(o.spec.style)?;
        ratios.push(o.ratio());
        reductions.push(1.0 - o.ratio());
        report.push(vec![
            json!(name),
            json!(system.n()),
            json!(system.len()),
            style,
            json!(o.spec.level),
            json!(o.circuit.n_anc()),
            json!(o.circuit.len()),
            json!(o.depth_before),
            json!(o.output().len()),
            json!(o.depth_after),
            json!(o.ratio()),
            json!(1.0 - o.ratio()),
        ]);
    }
    if !systems.is_empty() {
        let (mean, sd) = mean_std(&reductions);
        report.summary.insert("systems".into(), json!(systems.len()));
        report.summary.insert("mean_ratio".into(), json!(mean_std(&ratios).0));
        report.summary.insert("mean_reduction".into(), json!(mean));
        report.summary.insert("std_reduction".into(), json!(sd));
    }
    Ok(report)
}

/// Compresses a circuit file's circuit and describes the effect.
pub fn compress_report(name: &str, circuit: &Circuit, cost: CostChoice) -> Result<(Circuit, Report)> {
    let model = cost.model();
    let compressed = compress_with(circuit, &model);
    let config = json!({ "command": "compress", "cost": cost, "cost_model": model.describe(), "circuit": name });
    let mut report = Report::new(
        config,
        &["circuit", "qubits", "segments", "gates", "depth", "compressed_gates", "compressed_depth", "ratio"],
    );
    let (before, after) = (circuit.depth(&model), compressed.depth(&model));
    let ratio = if before == 0 { 1.0 } else { after as f64 / before as f64 };
    report.push(vec![
        json!(name),
        json!(circuit.n_qubits()),
        json!(segment(circuit).len()),
        json!(circuit.len()),
        json!(before),
        json!(compressed.len()),
        json!(after),
        json!(ratio),
    ]);
    Ok((compressed, report))
}

// ---------------------------------------------------------------------------
// solve

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanChoice {
    /// All equations every iteration.
    Single,
    Cyclic,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub level: usize,
    pub ancillas: Option<usize>,
    pub style: OracleStyle,
    pub strategy: PlanChoice,
    pub split_factor: f64,
    /// Cyclic group count; overrides `split_factor` for the cyclic strategy.
    pub groups: Option<usize>,
    /// Target overall success probability `1 − ε`.
    pub nominal: f64,
    /// Fixed shot count `J`; otherwise `J` is optimized jointly with `K`.
    pub shots: Option<u64>,
    /// Fixed iteration count `K`.
    pub iterations: Option<u64>,
    pub j_max: u64,
    pub k_max: u64,
    /// Solution count to plan with instead of the brute-force count.
    pub assume_m: Option<u64>,
    pub diffusion: DiffusionMode,
    pub cost: CostChoice,
    pub seed: u64,
    pub timing: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            level: 2,
            ancillas: None,
            style: OracleStyle::Recursive,
            strategy: PlanChoice::Single,
            split_factor: 1.0,
            groups: None,
            nominal: 0.999,
            shots: None,
            iterations: None,
            j_max: 1024,
            k_max: 1000,
            assume_m: None,
            diffusion: DiffusionMode::Exact,
            cost: CostChoice::Default,
            seed: 0,
            timing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramEntry {
    pub x: u64,
    pub bits: String,
    pub count: u64,
    pub solution: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthStats {
    pub distinct_oracles: usize,
    pub before_mean: f64,
    pub before_max: u64,
    pub after_mean: f64,
    pub after_max: u64,
    pub diffusion: u64,
    /// Sum over iterations of compressed oracle depth plus diffusion depth.
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub config: Value,
    pub cost_model: String,
    pub n: usize,
    pub equations: usize,
    /// `M` used for planning.
    pub solutions: u64,
    pub mtilde: f64,
    pub per_iteration: usize,
    pub level: usize,
    pub ancillas: usize,
    pub plan: SplitPlan,
    pub plan_seed: u64,
    pub measurement_seed: u64,
    pub iterations: u64,
    pub shots: u64,
    /// How `(J, K)` was chosen: `given`, `optimized`, `fixed_shots` or
    /// `best_effort` when the target is out of reach.
    pub selection: String,
    pub model_per_shot: f64,
    pub model_success: f64,
    pub trace: Vec<f64>,
    pub schedule: Vec<Vec<usize>>,
    pub histogram: Vec<HistogramEntry>,
    /// Measured assignments confirmed to satisfy every equation.
    pub verified: Vec<u64>,
    pub success: bool,
    pub depth: DepthStats,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

impl RunRecord {
    pub fn to_json(&self) -> Result<String> {
        // Going through `Value` sorts every object's keys.
        Ok(serde_json::to_string_pretty(&serde_json::to_value(self)?)? + "\n")
    }

    /// The trace as a table, with the rest of the record as summary.
    pub fn to_report(&self) -> Result<Report> {
        let mut report = Report::new(self.config.clone(), &["iteration", "solution_probability"]);
        for (k, p) in self.trace.iter().enumerate() {
            report.push(vec![json!(k), json!(p)]);
        }
        if let Value::Object(mut m) = serde_json::to_value(self)? {
            m.remove("config");
            m.remove("trace");
            m.remove("warnings");
            report.summary = m;
        }
        report.warnings = self.warnings.clone();
        Ok(report)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_report()?.to_csv(),
        }
    }
}

fn build_plan(equations: usize, cfg: &SolveConfig, seed: u64) -> Result<SplitPlan> {
    match cfg.strategy {
        PlanChoice::Single => SplitPlan::single(equations),
        PlanChoice::Cyclic => match cfg.groups {
            Some(s) => SplitPlan::round_robin(equations, s),
            None => SplitPlan::from_factor(SplitStrategy::Cyclic, equations, cfg.split_factor, seed),
        },
        PlanChoice::Random => SplitPlan::from_factor(SplitStrategy::Random, equations, cfg.split_factor, seed),
    }
}

fn choose_jk(model: &TwoLevelModel, cfg: &SolveConfig, warnings: &mut Vec<String>) -> Result<(JkChoice, String)> {
    let epsilon = 1.0 - cfg.nominal;
    if let Some(k) = cfg.iterations {
        let shots = cfg.shots.unwrap_or(1);
        let p = model.success(model.evolve(k));
        let choice = JkChoice { shots, iterations: k, per_shot: p, overall: crate::grover::success_probability(p, shots) };
        return Ok((choice, "given".into()));
    }
    let attempt = match cfg.shots {
        Some(j) => min_iterations_for_shots(model, epsilon, j, cfg.k_max).map(|c| (c, "fixed_shots")),
        None => optimize_jk(model, epsilon, cfg.j_max, cfg.k_max).map(|c| (c, "optimized")),
    };
    match attempt {
        Ok((c, how)) => Ok((c, how.into())),
        Err(Error::Infeasible { best, .. }) => {
            let shots = cfg.shots.unwrap_or(cfg.j_max);
            warnings.push(format!(
                "nominal success rate {} is out of reach (model best {best:.4}); using the iteration count with the highest per-shot success",
                cfg.nominal
            ));
            Ok((best_iterations(model, shots, cfg.k_max), "best_effort".into()))
        }
        Err(e) => Err(e),
    }
}

/// Chooses `(J, K)`, runs the randomized search, and checks every measured
/// assignment against the equations.
pub fn solve(system: &BqeSystem, cfg: &SolveConfig) -> Result<RunRecord> {
    let start = Instant::now();
    if !(cfg.nominal > 0.0 && cfg.nominal < 1.0) {
        return Err(Error::Input(format!("nominal success rate must lie in (0, 1), got {}", cfg.nominal)));
    }
    let n = system.n();
    let n_states = 1u64 << n;
    let solutions = match cfg.assume_m {
        Some(m) => m,
        None => brute_force_solve(system)?.len() as u64,
    };
    if solutions == 0 || solutions >= n_states {
        return Err(Error::Input(format!(
            "randomized search needs 1 <= M < 2^n, but the system has M = {solutions}"
        )));
    }
    let plan_seed = derive_seed(cfg.seed, 1);
    let measurement_seed = derive_seed(cfg.seed, 2);
    let plan = build_plan(system.len(), cfg, plan_seed)?;
    let r = plan.max_group_size();
    let mut warnings = Vec::new();
    if r < 2 && system.len() >= 2 {
        warnings.push(format!("only {r} equation per iteration; tiny groups rarely amplify the solutions"));
    }
    let spec = resolve_spec(cfg.style, cfg.level, cfg.ancillas, r);
    let mtilde = estimate_mtilde(solutions, n, r);
    let model = TwoLevelModel::new(n_states as f64, solutions as f64, mtilde)?;
    let (choice, selection) = choose_jk(&model, cfg, &mut warnings)?;

    let options = RunOptions { diffusion: cfg.diffusion, record_amplitudes: false };
    let run = run_randomized_with(system, &spec, &plan, choice.iterations, choice.shots, measurement_seed, &options)?;

    let cost = cfg.cost.model();
    let mut depths: BTreeMap<&Vec<usize>, (u64, u64)> = BTreeMap::new();
    for group in &run.schedule {
        if !depths.contains_key(group) {
            let c = compile(&system.select(group)?, &spec)?;
            depths.insert(group, (c.depth(&cost), compress_with(&c, &cost).depth(&cost)));
        }
    }
    let diffusion = diffusion_circuit(n, run.final_state.n_anc())?.depth(&cost);
    let befores: Vec<f64> = depths.values().map(|d| d.0 as f64).collect();
    let afters: Vec<f64> = depths.values().map(|d| d.1 as f64).collect();
    let depth = DepthStats {
        distinct_oracles: depths.len(),
        before_mean: if befores.is_empty() { 0.0 } else { mean_std(&befores).0 },
        before_max: depths.values().map(|d| d.0).max().unwrap_or(0),
        after_mean: if afters.is_empty() { 0.0 } else { mean_std(&afters).0 },
        after_max: depths.values().map(|d| d.1).max().unwrap_or(0),
        diffusion,
        total: run.schedule.iter().map(|g| depths[g].1 + diffusion).sum(),
    };

    let histogram: Vec<HistogramEntry> = run
        .histogram
        .iter()
        .map(|(&x, &count)| HistogramEntry {
            x,
            bits: assignment_bits(x, n).iter().map(|&b| if b { '1' } else { '0' }).collect(),
            count,
            solution: system.is_solution(x),
        })
        .collect();
    let verified: Vec<u64> = histogram.iter().filter(|h| h.solution).map(|h| h.x).collect();

    let mut config = with_command("solve", cfg)?;
    config["cost_model"] = json!(cost.describe());
    Ok(RunRecord {
        config,
        cost_model: cost.describe(),
        n,
        equations: system.len(),
        solutions,
        mtilde,
        per_iteration: r,
        level: spec.level,
        ancillas: run.final_state.n_anc(),
        plan,
        plan_seed,
        measurement_seed,
        iterations: choice.iterations,
        shots: choice.shots,
        selection,
        model_per_shot: choice.per_shot,
        model_success: choice.overall,
        trace: run.trace,
        schedule: run.schedule,
        histogram,
        success: !verified.is_empty(),
        verified,
        depth,
        warnings,
        wall_seconds: cfg.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

// ---------------------------------------------------------------------------
// sweep-split

/// Least-squares line with a two-sided 95% confidence interval on the slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub slope_ci_low: f64,
    pub slope_ci_high: f64,
    pub points: usize,
}

/// `None` with fewer than three points or no spread in `x`.
pub fn least_squares(points: &[(f64, f64)]) -> Option<Regression> {
    let n = points.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0).ok()?.inverse_cdf(0.975);
    Some(Regression {
        slope,
        intercept,
        slope_stderr: stderr,
        slope_ci_low: slope - t * stderr,
        slope_ci_high: slope + t * stderr,
        points: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub factors: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub level: usize,
    pub nominal: f64,
    pub j_max: u64,
    pub k_max: u64,
    /// Random groups compiled per (system, factor) to average oracle depth.
    pub draws: usize,
    pub cost: CostChoice,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 12,
            factors: vec![1.0, 1.25, 1.5, 1.75, 2.0],
            samples: 15,
            seed: 0,
            level: 2,
            nominal: 0.999,
            j_max: 1024,
            k_max: 1000,
            draws: 3,
            cost: CostChoice::Default,
        }
    }
}

/// Relative total depth against split factor over a corpus of
/// single-solution systems. For each system and factor `f`, `r = round(R/f)`
/// equations per iteration; the per-iteration depth is the mean compressed
/// depth of oracles for random `r`-subsets plus the diffusion depth, and the
/// total multiplies it by `K` from [`optimize_jk`]. Totals are normalized by
/// each system's largest.
pub fn sweep_split(cfg: &SweepConfig) -> Result<Report> {
    if cfg.factors.is_empty() || cfg.samples == 0 || cfg.draws == 0 {
        return Err(Error::Input("sweep needs at least one factor, sample and draw".into()));
    }
    if !(cfg.nominal > 0.0 && cfg.nominal < 1.0) {
        return Err(Error::Input(format!("nominal success rate must lie in (0, 1), got {}", cfg.nominal)));
    }
    let cost = cfg.cost.model();
    let mut config = with_command("sweep-split", cfg)?;
    config["cost_model"] = json!(cost.describe());
    let mut report = Report::new(
        config,
        &[
            "sample",
            "equations",
            "factor",
            "per_iteration",
            "ancillas",
            "oracle_depth",
            "iteration_depth",
            "shots",
            "iterations",
            "total_depth",
            "relative_depth",
        ],
    );
    let corpus = generate_corpus(&GenConfig { n: cfg.n, min_solutions: 1, max_solutions: 1, count: cfg.samples, seed: cfg.seed })?;
    let n_states = 1u64 << cfg.n;
    let mut points = Vec::new();
    for g in &corpus {
        let big_r = g.system.len();
        let mut rows = Vec::new();
        for (fi, &f) in cfg.factors.iter().enumerate() {
            let r = equations_per_iteration(big_r, f)?;
            if r < 2 {
                report.warnings.push(format!(
                    "sample {}: factor {f} leaves {r} equation per iteration; skipped",
                    g.index
                ));
                continue;
            }
            let plan = SplitPlan::random(big_r, r, derive_seed(g.seed, fi as u64))?;
            let spec = resolve_spec(OracleStyle::Recursive, cfg.level, None, r);
            let mut total_oracle = 0u64;
            for group in plan.schedule(cfg.draws as u64) {
                let c = compile(&g.system.select(&group)?, &spec)?;
                total_oracle += compress_with(&c, &cost).depth(&cost);
            }
            let oracle_depth = total_oracle as f64 / cfg.draws as f64;
            let iteration_depth = oracle_depth + diffusion_circuit(cfg.n, spec.ancillas)?.depth(&cost) as f64;
            let model = TwoLevelModel::new(
                n_states as f64,
                g.solutions.len() as f64,
                estimate_mtilde(g.solutions.len() as u64, cfg.n, r),
            )?;
            let choice = match optimize_jk(&model, 1.0 - cfg.nominal, cfg.j_max, cfg.k_max) {
                Ok(c) => c,
                Err(Error::Infeasible { best, .. }) => {
                    report.warnings.push(format!(
                        "sample {} factor {f}: nominal rate unreachable (best {best:.4}); using best K",
                        g.index
                    ));
                    best_iterations(&model, cfg.j_max, cfg.k_max)
                }
                Err(e) => return Err(e),
            };
            let total = iteration_depth * choice.iterations as f64;
            rows.push((f, r, spec.ancillas, oracle_depth, iteration_depth, choice, total));
        }
        let max_total = rows.iter().map(|row| row.6).fold(0.0, f64::max);
        for (f, r, anc, od, id, choice, total) in rows {
            let rel = if max_total > 0.0 { total / max_total } else { 0.0 };
            points.push((f, rel));
            report.push(vec![
                json!(g.index),
                json!(big_r),
                json!(f),
                json!(r),
                json!(anc),
                json!(od),
                json!(id),
                json!(choice.shots),
                json!(choice.iterations),
                json!(total),
                json!(rel),
            ]);
        }
    }
    if let Some(reg) = least_squares(&points) {
        if let Value::Object(m) = serde_json::to_value(reg)? {
            report.summary.extend(m);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// success-heatmap

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapConfig {
    pub n_values: Vec<usize>,
    pub shots: Vec<u64>,
    pub nominal: f64,
    pub samples: usize,
    pub seed: u64,
    pub level: usize,
    pub strategy: PlanChoice,
    pub split_factor: f64,
    pub min_solutions: u64,
    pub max_solutions: u64,
    pub k_max: u64,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        HeatmapConfig {
            n_values: vec![6, 7, 8, 9, 10],
            shots: vec![1, 4, 16, 64, 256],
            nominal: 0.8,
            samples: 15,
            seed: 0,
            level: 2,
            strategy: PlanChoice::Random,
            split_factor: 1.5,
            min_solutions: 1,
            max_solutions: 1,
            k_max: 1000,
        }
    }
}

/// Observed success rate per `(n, M, shots)` cell: each sample system is
/// solved with the fixed shot count and the fewest iterations the model says
/// reach the nominal rate.
pub fn success_heatmap(cfg: &HeatmapConfig) -> Result<Report> {
    if cfg.n_values.is_empty() || cfg.shots.is_empty() || cfg.samples == 0 {
        return Err(Error::Input("heatmap needs at least one n, one shot count and one sample".into()));
    }
    let config = with_command("success-heatmap", cfg)?;
    let mut report = Report::new(
        config,
        &["n", "solutions", "shots", "samples", "successes", "success_rate", "mean_iterations", "mean_model_success"],
    );
    // (n, M, J) -> (runs, successes, Σ K, Σ model success)
    type Cell = (u64, u64, u64, f64);
    let mut cells: BTreeMap<(usize, u64, u64), Cell> = BTreeMap::new();
    let mut warned = 0usize;
    for &n in &cfg.n_values {
        let corpus = generate_corpus(&GenConfig {
            n,
            min_solutions: cfg.min_solutions,
            max_solutions: cfg.max_solutions,
            count: cfg.samples,
            seed: derive_seed(cfg.seed, n as u64),
        })?;
        for &shots in &cfg.shots {
            for g in &corpus {
                let solve_cfg = SolveConfig {
                    level: cfg.level,
                    strategy: cfg.strategy,
                    split_factor: cfg.split_factor,
                    nominal: cfg.nominal,
                    shots: Some(shots),
                    k_max: cfg.k_max,
                    seed: derive_seed(g.seed, shots),
                    ..SolveConfig::default()
                };
                let rec = solve(&g.system, &solve_cfg)?;
                if rec.selection == "best_effort" {
                    warned += 1;
                }
                let cell = cells.entry((n, g.solutions.len() as u64, shots)).or_default();
                cell.0 += 1;
                cell.1 += u64::from(rec.success);
                cell.2 += rec.iterations;
                cell.3 += rec.model_success;
            }
        }
    }
    let (mut runs, mut wins) = (0u64, 0u64);
    for ((n, m, shots), (count, successes, ks, ps)) in cells {
        runs += count;
        wins += successes;
        report.push(vec![
            json!(n),
            json!(m),
            json!(shots),
            json!(count),
            json!(successes),
            json!(successes as f64 / count as f64),
            json!(ks as f64 / count as f64),
            json!(ps / count as f64),
        ]);
    }
    if warned > 0 {
        report.warnings.push(format!("{warned} runs could not reach the nominal rate under the model"));
    }
    report.summary.insert("runs".into(), json!(runs));
    report.summary.insert("mean_success_rate".into(), json!(wins as f64 / runs as f64));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anf::AnfPoly;

    #[test]
    fn capacity_grid_first_row_and_corners() {
        let r = capacity_report(10, 10).unwrap();
        assert_eq!(r.rows.len(), 10);
        for m in 1..=10 {
            assert_eq!(r.get(0, &format!("m={m}")), Some(&json!(m)));
        }
        assert_eq!(r.get(1, "m=5"), Some(&json!(11)));
        assert_eq!(r.get(9, "m=10"), Some(&json!(512)));
    }

    #[test]
    fn csv_has_config_comment_and_lf_endings() {
        let csv = capacity_report(2, 3).unwrap().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# config: {"));
        assert_eq!(lines[1], "level,m=1,m=2,m=3");
        assert_eq!(lines[2], "1,1,2,3");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn json_keys_are_sorted() {
        let json = capacity_report(1, 2).unwrap().to_json().unwrap();
        let config = json.find("\"config\"").unwrap();
        let rows = json.find("\"rows\"").unwrap();
        let summary = json.find("\"summary\"").unwrap();
        assert!(config < rows && rows < summary);
        assert!(json.find("\"lmax\"").unwrap() < json.find("\"mmax\"").unwrap());
    }

    #[test]
    fn corpus_is_reproducible_and_valid() {
        let cfg = GenConfig { n: 6, min_solutions: 1, max_solutions: 2, count: 3, seed: 9 };
        let a = generate_corpus(&cfg).unwrap();
        assert_eq!(a, generate_corpus(&cfg).unwrap());
        for g in &a {
            let text = system_file_json(&cfg, g).unwrap();
            let back = BqeSystem::from_json(&text).unwrap();
            assert_eq!(back, g.system);
            assert!((1..=2).contains(&g.solutions.len()));
        }
    }

    #[test]
    fn oversized_generation_is_a_resource_error() {
        let cfg = GenConfig { n: 31, min_solutions: 1, max_solutions: 1, count: 1, seed: 0 };
        let err = generate_corpus(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn level_two_needs_fewer_ancillae_than_stack() {
        let g = &generate_corpus(&GenConfig { n: 8, min_solutions: 1, max_solutions: 1, count: 1, seed: 4 }).unwrap()[0];
        let stack = compile_system(&g.system, &CompileConfig { style: OracleStyle::Stack, ..CompileConfig::default() }).unwrap();
        let rec = compile_system(&g.system, &CompileConfig::default()).unwrap();
        assert!(rec.circuit.n_anc() < stack.circuit.n_anc());
        assert!(rec.depth_after <= rec.depth_before);
    }

    #[test]
    fn capacity_error_names_required_ancillas() {
        let g = &generate_corpus(&GenConfig { n: 6, min_solutions: 1, max_solutions: 1, count: 1, seed: 2 }).unwrap()[0];
        let cfg = CompileConfig { ancillas: Some(2), ..CompileConfig::default() };
        match compile_system(&g.system, &cfg) {
            Err(Error::Capacity { required, .. }) => assert_eq!(required, min_ancillas(2, g.system.len())),
            other => panic!("expected a capacity error, got {other:?}"),
        }
    }

    #[test]
    fn compile_report_summarizes() {
        let corpus = generate_corpus(&GenConfig { n: 6, min_solutions: 1, max_solutions: 3, count: 4, seed: 1 }).unwrap();
        let systems: Vec<(String, BqeSystem)> = corpus.iter().map(|g| (format!("s{}", g.index), g.system.clone())).collect();
        let r = compile_report(&systems, &CompileConfig::default()).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.summary["std_reduction"].is_number());
        for i in 0..4 {
            assert!(r.get(i, "reduction").unwrap().as_f64().unwrap() >= 0.0);
        }
    }

    #[test]
    fn counterexample_solve_stays_flat() {
        let f1 = AnfPoly::from_index_lists([vec![0], vec![]]);
        let f2 = AnfPoly::from_index_lists([vec![1], vec![]]);
        let system = BqeSystem::new(2, vec![f1, f2]).unwrap();
        let cfg = SolveConfig { strategy: PlanChoice::Cyclic, groups: Some(2), iterations: Some(6), shots: Some(8), ..SolveConfig::default() };
        let rec = solve(&system, &cfg).unwrap();
        assert!(rec.trace.iter().all(|p| (p - 0.25).abs() < 1e-12));
        assert_eq!(rec.plan.groups, vec![vec![0], vec![1]]);
    }

    #[test]
    fn single_group_solve_succeeds_and_replays() {
        let g = &generate_corpus(&GenConfig { n: 8, min_solutions: 1, max_solutions: 1, count: 1, seed: 6 }).unwrap()[0];
        let k = crate::grover::vanilla_iteration_count(256, 1).unwrap();
        let cfg = SolveConfig { iterations: Some(k), shots: Some(16), seed: 3, ..SolveConfig::default() };
        let rec = solve(&g.system, &cfg).unwrap();
        assert!(rec.success);
        assert_eq!(rec.verified, g.solutions);
        assert!(rec.trace[k as usize] > 0.99);
        assert_eq!(rec.to_json().unwrap(), solve(&g.system, &cfg).unwrap().to_json().unwrap());
        assert!(!rec.to_json().unwrap().contains("wall_seconds"));
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        let r = least_squares(&pts).unwrap();
        assert!((r.slope + 0.5).abs() < 1e-12 && (r.intercept - 3.0).abs() < 1e-12);
        assert!(r.slope_stderr < 1e-12);
        assert!(least_squares(&pts[..2]).is_none());
    }

    #[test]
    fn sweep_rejects_degenerate_factor() {
        let cfg = SweepConfig { n: 6, factors: vec![1.0, 10.0], samples: 1, draws: 1, ..SweepConfig::default() };
        let r = sweep_split(&cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.warnings.len(), 1);
    }
}
