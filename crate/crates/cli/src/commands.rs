//! The single-shot subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde_json::{json, Map, Value};

use tsvft::gen::{synth_instance, SynthError, SynthSpec};
use tsvft::ilpgen::{build_adaptive_model, solve, SolveStatus, DEFAULT_TIMEOUT_S};
use tsvft::mcmfgen::{generate, HeuristicConfig, McmfError};
use tsvft::planner::{plan as run_plan, plan_fixed_k, Method, PlanError, PlanInstance, PlanParams};
use tsvft::relgraph::{GraphFile, RelGraph};
use tsvft::structure::{
    exhaustive_injection, sampled_injection, verify as check, StructureFile, ToleranceStructure,
    DEFAULT_INJECTION_BUDGET,
};
use tsvft::tolerance::max_tolerant_faults_capped;
use tsvft::yieldmodel::YieldMode;

use crate::io::{emit, read_json, write_json, write_text, CliError, Input};

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Ilp,
    Mcmf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ilp => Method::Ilp,
            MethodArg::Mcmf => Method::Mcmf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum YieldModeArg {
    ExactEnum,
    Binomial,
    MonteCarlo,
}

impl From<YieldModeArg> for YieldMode {
    fn from(m: YieldModeArg) -> Self {
        match m {
            YieldModeArg::ExactEnum => YieldMode::ExactEnum,
            YieldModeArg::Binomial => YieldMode::Binomial,
            YieldModeArg::MonteCarlo => YieldMode::MonteCarlo,
        }
    }
}

fn load_graph(path: &Path) -> Result<(RelGraph, String), CliError> {
    let Input { value, digest } = read_json::<GraphFile>(path)?;
    let g = RelGraph::from_file(&value)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Ok((g, digest))
}

fn load_structure(path: &Path, g: &RelGraph) -> Result<(ToleranceStructure, String), CliError> {
    let Input { value, digest } = read_json::<StructureFile>(path)?;
    let st = ToleranceStructure::from_file(&value, g)
        .map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))?;
    Ok((st, digest))
}

fn names(g: &RelGraph, vs: &[usize]) -> Vec<String> {
    vs.iter().map(|&v| g.name(v).to_owned()).collect()
}

#[derive(Args)]
pub struct KtolArgs {
    /// Relation graph (JSON).
    graph: PathBuf,
    /// Stop counting paths at this many.
    #[arg(long)]
    cap: Option<usize>,
    /// Also write the relation graph in Graphviz format.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn ktol(a: KtolArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (g, digest) = load_graph(&a.graph)?;
    let r = max_tolerant_faults_capped(&g, a.cap);
    if let Some(path) = &a.dot {
        write_text(path, &g.to_dot())?;
    }
    let nd: Map<String, Value> = g.functional().map(|f| (g.name(f).to_owned(), json!(r.nd[f]))).collect();
    emit(
        "ktol",
        &[(&a.graph, &digest)],
        json!({"cap": a.cap}),
        json!({"k": r.k, "nd": nd}),
        start.elapsed().as_secs_f64(),
        a.report.as_ref(),
    )
}

#[derive(Args)]
pub struct GenArgs {
    /// Relation graph (JSON).
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "mcmf")]
    method: MethodArg,
    /// Faults to tolerate; defaults to min(K, kcap).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    kcap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Base of the heuristic's congestion cost.
    #[arg(long, default_value_t = 3)]
    c: i64,
    /// Perturbation rounds without improvement before stopping.
    #[arg(long, default_value_t = 50)]
    threshold: usize,
    #[arg(long, default_value_t = 18)]
    exponent_cap: u32,
    /// Exact solver limit in seconds.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_S)]
    timeout: f64,
    /// Structure output file.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the split graph in Graphviz format.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the exact model in LP format.
    #[arg(long)]
    lp_out: Option<PathBuf>,
}

pub fn gen(a: GenArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (g, digest) = load_graph(&a.graph)?;
    let big_k = max_tolerant_faults_capped(&g, None).k;
    let k = a.k.unwrap_or(a.kcap.map_or(big_k, |c| big_k.min(c)));
    if k > big_k {
        return Err(CliError::Precondition(format!("k = {k} exceeds the graph's tolerance K = {big_k}")));
    }
    if let Some(path) = &a.dot {
        write_text(path, &g.split().to_dot())?;
    }
    let cfg = HeuristicConfig { c: a.c, perturb_threshold: a.threshold, seed: a.seed, exponent_cap: a.exponent_cap };
    let config = json!({
        "method": match a.method { MethodArg::Ilp => "ilp", MethodArg::Mcmf => "mcmf" },
        "k": k,
        "kcap": a.kcap,
        "seed": a.seed,
        "c": a.c,
        "threshold": a.threshold,
        "exponent_cap": a.exponent_cap,
        "timeout_s": a.timeout,
    });
    let (status, st) = match a.method {
        MethodArg::Mcmf => {
            let st = generate(&g, k, &cfg).map_err(|e| match e {
                McmfError::InvalidConfig(m) => CliError::Precondition(m),
                other => CliError::Other(other.into()),
            })?;
            ("ok", Some(st))
        }
        MethodArg::Ilp if k == 0 => ("optimal", Some(ToleranceStructure::empty(&g))),
        MethodArg::Ilp => {
            let model = build_adaptive_model(&g.split(), k).map_err(|e| CliError::Precondition(e.to_string()))?;
            if let Some(path) = &a.lp_out {
                write_text(path, &model.to_lp())?;
            }
            let out = solve(&model, a.timeout);
            match out.status {
                SolveStatus::Optimal => ("optimal", out.structure),
                SolveStatus::Timeout => ("NA", None),
                SolveStatus::Infeasible => {
                    return Err(CliError::Infeasible(format!("no {k}-fault structure exists")))
                }
            }
        }
    };
    let mut outputs = json!({"status": status, "K": big_k, "k": k});
    if let Some(st) = &st {
        let m = st.metrics();
        outputs["metrics"] = json!({
            "max_mux_ports": m.max_mux_ports,
            "used_stsvs": m.used_stsvs,
            "max_indegree": m.max_indegree,
            "objective": m.max_indegree + m.used_stsvs,
        });
        if let Some(path) = &a.out {
            write_json(path, &st.to_file(&g))?;
            outputs["structure"] = json!(path.display().to_string());
        }
    }
    emit("gen", &[(&a.graph, &digest)], config, outputs, start.elapsed().as_secs_f64(), a.report.as_ref())?;
    if st.is_none() {
        return Err(CliError::Timeout(format!("exact solver hit the {} s limit", a.timeout)));
    }
    Ok(())
}

#[derive(Args)]
pub struct VerifyArgs {
    graph: PathBuf,
    structure: PathBuf,
    /// Expected tolerance; defaults to the structure's own k.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (g, gd) = load_graph(&a.graph)?;
    let (st, sd) = load_structure(&a.structure, &g)?;
    let k = a.k.unwrap_or(st.k());
    let verdict = check(&st, &g, k);
    let violations: Vec<Value> = verdict
        .violations
        .iter()
        .map(|v| json!({"ftsv": v.ftsv, "rule": v.rule, "message": v.rule.to_string(), "detail": v.detail}))
        .collect();
    emit(
        "verify",
        &[(&a.graph, &gd), (&a.structure, &sd)],
        json!({"k": k}),
        json!({"accepted": verdict.accepted, "violations": violations}),
        start.elapsed().as_secs_f64(),
        a.report.as_ref(),
    )?;
    if verdict.accepted {
        Ok(())
    } else {
        Err(CliError::Rejected(format!("{} violation(s)", verdict.violations.len())))
    }
}

#[derive(Args)]
pub struct InjectArgs {
    graph: PathBuf,
    structure: PathBuf,
    /// Largest fault set; defaults to the structure's k.
    #[arg(long)]
    up_to: Option<usize>,
    /// Draw this many random sets of exactly `up-to` faults instead of
    /// enumerating.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Refuse exhaustive runs needing more fault sets than this.
    #[arg(long, default_value_t = DEFAULT_INJECTION_BUDGET)]
    budget: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn inject(a: InjectArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (g, gd) = load_graph(&a.graph)?;
    let (st, sd) = load_structure(&a.structure, &g)?;
    let up_to = a.up_to.unwrap_or(st.k());
    let rep = match a.samples {
        Some(n) => sampled_injection(&st, up_to, n, a.seed),
        None => exhaustive_injection(&st, up_to, a.budget).map_err(|e| CliError::Precondition(e.to_string()))?,
    };
    emit(
        "inject",
        &[(&a.graph, &gd), (&a.structure, &sd)],
        json!({"up_to": up_to, "samples": a.samples, "seed": a.seed}),
        json!({
            "total": rep.total,
            "repairable": rep.repairable,
            "fraction": rep.fraction,
            "first_counterexample": rep.first_counterexample.as_ref().map(|c| names(&g, c)),
        }),
        start.elapsed().as_secs_f64(),
        a.report.as_ref(),
    )
}

/// Planning parameters shared by `synth` and `plan`.
#[derive(Args)]
pub struct ParamArgs {
    /// Per-TSV defect probability.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    kcap: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    yield_mode: Option<YieldModeArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c: Option<i64>,
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    ilp_timeout: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, p: &mut PlanParams) {
        if let Some(v) = self.p {
            p.p = v;
        }
        if let Some(v) = self.target {
            p.target_yield = v;
        }
        if self.kcap.is_some() {
            p.kcap = self.kcap;
        }
        if let Some(v) = self.margin {
            p.margin_um = v;
        }
        if let Some(v) = self.method {
            p.method = v.into();
        }
        if let Some(v) = self.yield_mode {
            p.yield_mode = v.into();
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = self.c {
            p.c = v;
        }
        if let Some(v) = self.threshold {
            p.perturb_threshold = v;
        }
        if let Some(v) = self.ilp_timeout {
            p.ilp_timeout_s = v;
        }
    }
}

fn parse_area(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Parse(format!("area `{s}` is not WIDTHxHEIGHT"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    n_ftsv: usize,
    /// Die size in micrometers, e.g. `400x300`.
    #[arg(long)]
    area: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    bbox_scale: f64,
    #[arg(long, default_value_t = 5.0)]
    site_pitch: f64,
    /// Placement seed.
    #[arg(long = "layout-seed", default_value_t = 0)]
    layout_seed: u64,
    /// Instance output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut params = PlanParams::default();
    a.params.apply(&mut params);
    let spec = SynthSpec {
        n_ftsv: a.n_ftsv,
        area: a.area.as_deref().map(parse_area).transpose()?,
        bbox_scale: a.bbox_scale,
        pitch_um: a.site_pitch,
        seed: a.layout_seed,
        params,
    };
    let inst = synth_instance(&spec).map_err(|e| match e {
        SynthError::AreaTooSmall { .. } => CliError::Precondition(e.to_string()),
        SynthError::Invalid(m) => CliError::Parse(m),
    })?;
    match &a.out {
        Some(path) => write_json(path, &inst),
        None => {
            print!("{}", crate::io::to_pretty(&inst));
            Ok(())
        }
    }
}

#[derive(Args)]
pub struct PlanArgs {
    /// Planning instance (JSON).
    instance: PathBuf,
    /// Run the fixed-k baseline with this many spares per group.
    #[arg(long)]
    baseline_k: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

pub fn plan_error(e: PlanError) -> CliError {
    match e {
        PlanError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
        PlanError::Layout(_) => CliError::Parse(e.to_string()),
        PlanError::Invalid(_) | PlanError::TooSmall => CliError::Precondition(e.to_string()),
    }
}

pub fn plan(a: PlanArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let Input { value: mut inst, digest } = read_json::<PlanInstance>(&a.instance)?;
    a.params.apply(&mut inst.params);
    let res = match a.baseline_k {
        Some(k) => plan_fixed_k(&inst, k),
        None => run_plan(&inst),
    }
    .map_err(plan_error)?;
    let mut config = serde_json::to_value(&inst.params).expect("serializable");
    config["mode"] = json!(a.baseline_k.map_or("adaptive".to_owned(), |k| format!("fixed_k={k}")));
    emit(
        "plan",
        &[(&a.instance, &digest)],
        config,
        serde_json::to_value(&res).expect("serializable"),
        start.elapsed().as_secs_f64(),
        a.out.as_ref(),
    )
}

#[cfg(test)]
mod tests {
    use super::parse_area;

    #[test]
    fn area_parsing() {
        assert_eq!(parse_area("400x300").unwrap(), (400.0, 300.0));
        assert_eq!(parse_area("12.5X8").unwrap(), (12.5, 8.0));
        assert!(parse_area("400").is_err());
        assert!(parse_area("ax3").is_err());
    }
}
