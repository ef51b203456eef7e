//! Seeded synthetic suite comparing adaptive planning with the fixed-k
//! baseline.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use tsvft::gen::{synth_instance, SynthSpec};
use tsvft::planner::{plan, plan_fixed_k, PlanParams, PlanResult};

use crate::commands::plan_error;
use crate::io::{emit, CliError};

#[derive(Args)]
pub struct BenchArgs {
    /// Number of instances; sizes are spread evenly over the range.
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 50)]
    min_n: usize,
    #[arg(long, default_value_t = 600)]
    max_n: usize,
    /// Seed of the first instance; instance i uses base + i.
    #[arg(long, default_value_t = 1000)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    kcap: usize,
    #[arg(long, default_value_t = 3)]
    baseline_k: usize,
    #[arg(long, default_value_t = 0.997)]
    target: f64,
    #[arg(long, default_value_t = 0.001)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    ilp_timeout: f64,
    /// Also sweep the target over 0.991..=0.999 on the smallest instance size.
    #[arg(long)]
    sweep: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Run {
    groups: usize,
    stsvs: usize,
    max_mux_ports: usize,
    tsv_yield: f64,
}

impl From<&PlanResult> for Run {
    fn from(r: &PlanResult) -> Self {
        Run {
            groups: r.totals.num_groups,
            stsvs: r.totals.total_stsvs,
            max_mux_ports: r.totals.max_mux_ports,
            tsv_yield: r.totals.tsv_yield,
        }
    }
}

#[derive(Serialize)]
struct Row {
    n: usize,
    seed: u64,
    adaptive: Option<Run>,
    fixed: Option<Run>,
    fixed_error: Option<String>,
}

pub fn suite_size(i: usize, count: usize, min_n: usize, max_n: usize) -> usize {
    if count <= 1 {
        return min_n;
    }
    min_n + i * (max_n - min_n) / (count - 1)
}

pub fn run(a: BenchArgs) -> Result<(), CliError> {
    let start = Instant::now();
    if a.min_n == 0 || a.max_n < a.min_n {
        return Err(CliError::Precondition(format!("bad size range {}..={}", a.min_n, a.max_n)));
    }
    let params = PlanParams {
        p: a.p,
        target_yield: a.target,
        kcap: Some(a.kcap),
        ilp_timeout_s: a.ilp_timeout,
        ..PlanParams::default()
    };
    let rows: Vec<Row> = (0..a.count)
        .into_par_iter()
        .map(|i| -> Result<Row, CliError> {
            let n = suite_size(i, a.count, a.min_n, a.max_n);
            let seed = a.seed + i as u64;
            let inst = synth_instance(&SynthSpec { n_ftsv: n, seed, params: params.clone(), ..SynthSpec::default() })
                .map_err(|e| CliError::Precondition(e.to_string()))?;
            let adaptive = plan(&inst).map_err(plan_error)?;
            let (fixed, fixed_error) = match plan_fixed_k(&inst, a.baseline_k) {
                Ok(r) => (Some(Run::from(&r)), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(Row { n, seed, adaptive: Some(Run::from(&adaptive)), fixed, fixed_error })
        })
        .collect::<Result<_, _>>()?;

    eprintln!("{:>5} {:>6} | {:>7} {:>6} {:>5} | {:>7} {:>6} {:>5}", "n", "seed", "a.stsv", "a.grp", "a.mux", "f.stsv", "f.grp", "f.mux");
    let mut wins = 0;
    for r in &rows {
        let a_run = r.adaptive.as_ref().expect("adaptive run");
        let cell = |x: Option<usize>| x.map_or("-".to_owned(), |v| v.to_string());
        eprintln!(
            "{:>5} {:>6} | {:>7} {:>6} {:>5} | {:>7} {:>6} {:>5}",
            r.n,
            r.seed,
            a_run.stsvs,
            a_run.groups,
            a_run.max_mux_ports,
            cell(r.fixed.as_ref().map(|f| f.stsvs)),
            cell(r.fixed.as_ref().map(|f| f.groups)),
            cell(r.fixed.as_ref().map(|f| f.max_mux_ports)),
        );
        // an infeasible baseline counts as a win for the adaptive planner
        if r.fixed.as_ref().is_none_or(|f| a_run.stsvs <= f.stsvs) {
            wins += 1;
        }
    }
    let fraction = if rows.is_empty() { 1.0 } else { wins as f64 / rows.len() as f64 };
    eprintln!("adaptive <= fixed on {wins}/{} instances", rows.len());

    let sweep = if a.sweep {
        let n = a.min_n;
        let points: Vec<f64> = (1..=9).map(|i| 0.99 + f64::from(i) / 1000.0).collect();
        points
            .par_iter()
            .map(|&t| -> Result<serde_json::Value, CliError> {
                let p = PlanParams { target_yield: t, ..params.clone() };
                let inst = synth_instance(&SynthSpec { n_ftsv: n, seed: a.seed, params: p, ..SynthSpec::default() })
                    .map_err(|e| CliError::Precondition(e.to_string()))?;
                let r = plan(&inst).map_err(plan_error)?;
                Ok(json!({"target": t, "stsvs": r.totals.total_stsvs, "groups": r.totals.num_groups}))
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };

    emit(
        "bench",
        &[],
        json!({
            "count": a.count, "min_n": a.min_n, "max_n": a.max_n, "seed": a.seed,
            "kcap": a.kcap, "baseline_k": a.baseline_k, "target": a.target, "p": a.p,
            "ilp_timeout_s": a.ilp_timeout,
        }),
        json!({"rows": rows, "adaptive_le_fixed": wins, "fraction": fraction, "sweep": sweep}),
        start.elapsed().as_secs_f64(),
        a.out.as_ref(),
    )
}
