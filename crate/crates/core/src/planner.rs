//! Top-down grouping of f-TSVs with spare allocation.
//!
//! [`plan`] starts from one group holding every f-TSV and keeps bisecting the
//! group with the lowest yield until the product of group yields meets the
//! target. Candidate spares may overlap between groups while the loop runs;
//! they are claimed once the grouping is final, deepest yield deficit first.
//! [`plan_fixed_k`] is the baseline where every group gets exactly `k` spares
//! that each of its f-TSVs can reach directly.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{PointIndex, Rect};
use crate::ilpgen::{build_adaptive_model, build_fixed_model, solve, SolveStatus};
use crate::mcmfgen::{generate, HeuristicConfig};
use crate::relgraph::{FTsvPlacement, GraphError, LayoutGroup, RelGraph, SpareSite};
use crate::structure::{StructureFile, ToleranceStructure};
use crate::tolerance::max_tolerant_faults_capped;
use crate::yieldmodel::{binomial_bound, group_yield, tsv_yield, YieldMode, YieldParams, EXACT_ENUM_LIMIT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Layout(#[from] GraphError),
    #[error("target yield unreachable (best {best_yield:.6}); limiting groups: {}", limiting.join("; "))]
    Infeasible { best_yield: f64, limiting: Vec<String> },
    #[error("a group needs at least two f-TSVs to be split")]
    TooSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ilp,
    #[default]
    Mcmf,
}

fn default_pitch() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanParams {
    pub p: f64,
    pub target_yield: f64,
    pub margin_um: f64,
    pub kcap: Option<usize>,
    pub method: Method,
    /// Estimator for the reported (final) group yields.
    pub yield_mode: YieldMode,
    pub samples: u64,
    pub seed: u64,
    pub c: i64,
    pub perturb_threshold: usize,
    pub ilp_timeout_s: f64,
}

impl Default for PlanParams {
    fn default() -> Self {
        Self {
            p: 0.001,
            target_yield: 0.997,
            margin_um: 0.0,
            kcap: None,
            method: Method::Mcmf,
            yield_mode: YieldMode::Binomial,
            samples: 1_000_000,
            seed: 0,
            c: 3,
            perturb_threshold: 50,
            ilp_timeout_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanInstance {
    #[serde(default = "default_pitch")]
    pub pitch_um: f64,
    pub f_tsvs: Vec<FTsvPlacement>,
    pub s_sites: Vec<SpareSite>,
    #[serde(default)]
    pub params: PlanParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub max_indegree: usize,
    pub used_stsvs: usize,
    pub max_mux_ports: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupResult {
    pub id: usize,
    pub f_tsvs: Vec<String>,
    pub stsvs: Vec<String>,
    pub k_max: usize,
    pub k_used: usize,
    pub structure: StructureFile,
    pub metrics: GroupMetrics,
    pub group_yield: f64,
    pub yield_mode: YieldMode,
    /// `mcmf`, `ilp`, `ilp_timeout_mcmf`, or `none` for `k_used = 0`.
    pub engine: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanTotals {
    pub num_groups: usize,
    pub total_stsvs: usize,
    pub max_mux_ports: usize,
    pub tsv_yield: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub groups: Vec<GroupResult>,
    pub totals: PlanTotals,
    /// Bisections performed.
    pub iterations: usize,
    /// Groups whose exact generation timed out and fell back to the heuristic.
    pub fallbacks: usize,
}

/// Site and relation lookups shared by every group of one instance.
struct Context<'a> {
    inst: &'a PlanInstance,
    boxes: Vec<Rect>,
    /// Sites inside each f-TSV's expanded box, ascending.
    cover_sites: Vec<Vec<usize>>,
    /// Other f-TSVs inside each f-TSV's expanded box, ascending.
    cover_f: Vec<Vec<usize>>,
    site_index: PointIndex,
    cfg: HeuristicConfig,
}

impl<'a> Context<'a> {
    fn new(inst: &'a PlanInstance) -> Result<Self, PlanError> {
        validate(inst)?;
        let margin = inst.params.margin_um;
        let boxes: Vec<Rect> = inst.f_tsvs.iter().map(|f| f.bbox.expanded(margin)).collect();
        let site_pts: Vec<(f64, f64)> = inst.s_sites.iter().map(|s| (s.x, s.y)).collect();
        let f_pts: Vec<(f64, f64)> = inst.f_tsvs.iter().map(|f| (f.x, f.y)).collect();
        let site_index = PointIndex::new(&site_pts);
        let f_index = PointIndex::new(&f_pts);
        let (cover_sites, cover_f) = boxes
            .par_iter()
            .enumerate()
            .map(|(i, b)| {
                let mut sites = Vec::new();
                site_index.query(b, &mut sites);
                let mut fs = Vec::new();
                f_index.query(b, &mut fs);
                fs.retain(|&j| j != i);
                (sites, fs)
            })
            .unzip();
        let cfg = HeuristicConfig {
            c: inst.params.c,
            perturb_threshold: inst.params.perturb_threshold,
            seed: inst.params.seed,
            ..HeuristicConfig::default()
        };
        cfg.validate().map_err(|e| PlanError::Invalid(e.to_string()))?;
        Ok(Self {
            inst,
            boxes,
            cover_sites,
            cover_f,
            site_index,
            cfg,
        })
    }

    fn num_f(&self) -> usize {
        self.inst.f_tsvs.len()
    }

    /// Relation graph of `fs` (ascending) over every unclaimed site covered
    /// by at least one of them; also returns the global site of each spare.
    fn group_graph(&self, fs: &[usize], claimed: &[bool]) -> (RelGraph, Vec<usize>) {
        let mut sites: Vec<usize> = fs
            .iter()
            .flat_map(|&f| self.cover_sites[f].iter().copied())
            .filter(|&s| !claimed[s])
            .collect();
        sites.sort_unstable();
        sites.dedup();
        self.graph_over(fs, sites)
    }

    fn graph_over(&self, fs: &[usize], sites: Vec<usize>) -> (RelGraph, Vec<usize>) {
        let m = fs.len();
        let local_f = |f: usize| fs.binary_search(&f).ok();
        let mut edges = Vec::new();
        for (i, &f) in fs.iter().enumerate() {
            edges.extend(self.cover_f[f].iter().filter_map(|&h| local_f(h)).map(|j| (i, j)));
            for &s in &self.cover_sites[f] {
                if let Ok(j) = sites.binary_search(&s) {
                    edges.push((i, m + j));
                }
            }
        }
        let g = RelGraph::from_indexed(
            fs.iter().map(|&f| self.inst.f_tsvs[f].id.clone()).collect(),
            sites.iter().map(|&s| self.inst.s_sites[s].id.clone()).collect(),
            edges,
        )
        .expect("instance ids were validated");
        (g, sites)
    }

    /// Unclaimed sites inside every expanded box of `fs`.
    fn shared_sites(&self, fs: &[usize], claimed: &[bool]) -> Vec<usize> {
        let mut common = self.boxes[fs[0]];
        for &f in &fs[1..] {
            match common.intersection(&self.boxes[f]) {
                Some(r) => common = r,
                None => return Vec::new(),
            }
        }
        let mut out = Vec::new();
        self.site_index.query(&common, &mut out);
        out.retain(|&s| !claimed[s]);
        out
    }

    /// Splits `fs` in two by weighted min-cut; weights count unclaimed
    /// candidate sites two f-TSVs share, plus one when either can replace
    /// the other.
    fn split(&self, fs: &[usize], claimed: &[bool]) -> (Vec<usize>, Vec<usize>) {
        let m = fs.len();
        let local_f = |f: usize| fs.binary_search(&f).ok();
        let mut by_site: std::collections::HashMap<usize, Vec<usize>> = Default::default();
        for (i, &f) in fs.iter().enumerate() {
            for &s in &self.cover_sites[f] {
                if !claimed[s] {
                    by_site.entry(s).or_default().push(i);
                }
            }
        }
        let mut related: Vec<(usize, usize)> = fs
            .iter()
            .enumerate()
            .flat_map(|(i, &f)| {
                self.cover_f[f]
                    .iter()
                    .filter_map(move |&h| local_f(h))
                    .map(move |j| (i.min(j), i.max(j)))
            })
            .collect();
        related.sort_unstable();
        related.dedup();
        let mut related = related.into_iter().peekable();
        let mut counts = vec![0u64; m];
        let mut touched = Vec::new();
        let mut edges = Vec::new();
        for (i, &f) in fs.iter().enumerate() {
            let mut bump = |j: usize| {
                if counts[j] == 0 {
                    touched.push(j);
                }
                counts[j] += 1;
            };
            for s in &self.cover_sites[f] {
                if let Some(members) = by_site.get(s) {
                    members.iter().filter(|&&j| j > i).for_each(|&j| bump(j));
                }
            }
            while let Some((_, j)) = related.next_if(|&(a, _)| a == i) {
                bump(j);
            }
            touched.sort_unstable();
            for &j in &touched {
                edges.push((i, j, counts[j]));
                counts[j] = 0;
            }
            touched.clear();
        }
        let coords: Vec<(f64, f64)> = fs
            .iter()
            .map(|&f| (self.inst.f_tsvs[f].x, self.inst.f_tsvs[f].y))
            .collect();
        let (l, r) = bipartition(m, &edges, &coords).expect("caller checks the group size");
        (l.into_iter().map(|i| fs[i]).collect(), r.into_iter().map(|i| fs[i]).collect())
    }
}

fn validate(inst: &PlanInstance) -> Result<(), PlanError> {
    let p = &inst.params;
    if !(p.target_yield > 0.0 && p.target_yield <= 1.0) {
        return Err(PlanError::Invalid(format!("target_yield {} outside (0, 1]", p.target_yield)));
    }
    if !(0.0..1.0).contains(&p.p) {
        return Err(PlanError::Invalid(format!("p {} outside [0, 1)", p.p)));
    }
    if p.kcap == Some(0) {
        return Err(PlanError::Invalid("kcap must be at least 1".into()));
    }
    if inst.f_tsvs.is_empty() {
        return Err(PlanError::Invalid("no f-TSVs".into()));
    }
    if !(inst.pitch_um > 0.0) {
        return Err(PlanError::Invalid(format!("pitch {} is not positive", inst.pitch_um)));
    }
    LayoutGroup {
        f_tsvs: inst.f_tsvs.clone(),
        s_sites: inst.s_sites.clone(),
        margin: p.margin_um,
    }
    .validate()?;
    Ok(())
}

/// Weighted two-way min-cut of `n` vertices with Fiduccia-Mattheyses passes.
///
/// Both sides end up with 45-55% of the vertices, or `floor(n/2)` and
/// `ceil(n/2)` when no such split exists. The starting cut is a median split
/// along the wider coordinate spread. `edges` holds `(u, v, weight)`.
pub fn bipartition(
    n: usize,
    edges: &[(usize, usize, u64)],
    coords: &[(f64, f64)],
) -> Result<(Vec<usize>, Vec<usize>), PlanError> {
    if n < 2 {
        return Err(PlanError::TooSmall);
    }
    let (mut lo, mut hi) = ((45 * n).div_ceil(100), 55 * n / 100);
    if lo > hi || lo == 0 {
        (lo, hi) = (n / 2, n.div_ceil(2));
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        if u != v && w > 0 {
            adj[u].push((v, w as i64));
            adj[v].push((u, w as i64));
        }
    }
    let spread = |axis: fn(&(f64, f64)) -> f64| {
        let vals = coords.iter().map(axis);
        vals.clone().fold(f64::NEG_INFINITY, f64::max) - vals.fold(f64::INFINITY, f64::min)
    };
    let by_x = coords.is_empty() || spread(|c| c.0) >= spread(|c| c.1);
    let mut order: Vec<usize> = (0..n).collect();
    if !coords.is_empty() {
        order.sort_by(|&a, &b| {
            let (pa, pb) = (coords[a], coords[b]);
            let (ka, kb) = if by_x { ((pa.0, pa.1), (pb.0, pb.1)) } else { ((pa.1, pa.0), (pb.1, pb.0)) };
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
    }
    let mut side = vec![false; n];
    for &v in &order[n / 2..] {
        side[v] = true;
    }
    for _ in 0..32 {
        if !fm_pass(&adj, &mut side, lo, hi) {
            break;
        }
    }
    let left = (0..n).filter(|&v| !side[v]).collect();
    let right = (0..n).filter(|&v| side[v]).collect();
    Ok((left, right))
}

/// One FM pass with rollback to the best balanced prefix; true if the cut
/// improved.
fn fm_pass(adj: &[Vec<(usize, i64)>], side: &mut [bool], lo: usize, hi: usize) -> bool {
    let n = side.len();
    let gain_of = |v: usize, side: &[bool]| -> i64 {
        adj[v]
            .iter()
            .map(|&(u, w)| if side[u] != side[v] { w } else { -w })
            .sum()
    };
    let mut gain: Vec<i64> = (0..n).map(|v| gain_of(v, side)).collect();
    let mut stamp = vec![0u32; n];
    let mut locked = vec![false; n];
    let mut heaps: [BinaryHeap<(i64, Reverse<usize>, u32)>; 2] = [BinaryHeap::new(), BinaryHeap::new()];
    for v in 0..n {
        heaps[side[v] as usize].push((gain[v], Reverse(v), 0));
    }
    let mut size = [side.iter().filter(|&&s| !s).count(), 0];
    size[1] = n - size[0];
    let mut moves = Vec::new();
    let (mut cum, mut best, mut best_len) = (0i64, 0i64, 0usize);
    loop {
        let mut pick = None;
        for from in 0..2 {
            // one vertex of slack lets a pass swap across a tight window
            if size[from] < lo || size[1 - from] > hi {
                continue;
            }
            let heap = &mut heaps[from];
            while let Some(&(g, Reverse(v), s)) = heap.peek() {
                if locked[v] || s != stamp[v] {
                    heap.pop();
                    continue;
                }
                if pick.is_none_or(|(pg, pv, _)| (g, Reverse(v)) > (pg, Reverse(pv))) {
                    pick = Some((g, v, from));
                }
                break;
            }
        }
        let Some((g, v, from)) = pick else { break };
        heaps[from].pop();
        locked[v] = true;
        side[v] = !side[v];
        size[from] -= 1;
        size[1 - from] += 1;
        cum += g;
        moves.push(v);
        if cum > best && (lo..=hi).contains(&size[0]) {
            best = cum;
            best_len = moves.len();
        }
        for &(u, w) in &adj[v] {
            if locked[u] {
                continue;
            }
            // v now sits on u's side iff it did not before
            gain[u] += if side[u] == side[v] { -2 * w } else { 2 * w };
            stamp[u] += 1;
            heaps[side[u] as usize].push((gain[u], Reverse(u), stamp[u]));
        }
    }
    for &v in &moves[best_len..] {
        side[v] = !side[v];
    }
    best > 0
}

struct Eval {
    has_sites: bool,
    yield_value: f64,
}

struct Built {
    k_max: usize,
    k_used: usize,
    graph: RelGraph,
    sites: Vec<usize>,
    st: ToleranceStructure,
    engine: &'static str,
}

/// Highest `k` at or below `k` for which the heuristic succeeds.
fn heuristic(g: &RelGraph, mut k: usize, cfg: &HeuristicConfig) -> (usize, ToleranceStructure) {
    loop {
        match generate(g, k, cfg) {
            Ok(st) => return (k, st),
            Err(_) => k -= 1,
        }
    }
}

fn binomial_yield(st: &ToleranceStructure, p: f64) -> f64 {
    binomial_bound(st.num_f() + st.used_spares().len(), st.k(), p)
}

fn evaluate(ctx: &Context, fs: &[usize]) -> Eval {
    let claimed = vec![false; ctx.inst.s_sites.len()];
    let (g, _) = ctx.group_graph(fs, &claimed);
    let p = &ctx.inst.params;
    let k_max = if g.num_s() == 0 { 0 } else { max_tolerant_faults_capped(&g, p.kcap).k };
    let (_, st) = heuristic(&g, k_max, &ctx.cfg);
    Eval {
        has_sites: g.num_s() > 0,
        yield_value: binomial_yield(&st, p.p),
    }
}

fn build_final(ctx: &Context, fs: &[usize], claimed: &[bool]) -> Built {
    let p = &ctx.inst.params;
    let (g, sites) = ctx.group_graph(fs, claimed);
    let k_max = if g.num_s() == 0 { 0 } else { max_tolerant_faults_capped(&g, None).k };
    let k = p.kcap.map_or(k_max, |c| k_max.min(c));
    if k == 0 {
        let st = ToleranceStructure::empty(&g);
        return Built { k_max, k_used: 0, graph: g, sites, st, engine: "none" };
    }
    if p.method == Method::Ilp {
        let model = build_adaptive_model(&g.split(), k).expect("k within the spare count");
        let out = solve(&model, p.ilp_timeout_s);
        if let (SolveStatus::Optimal, Some(st)) = (out.status, out.structure) {
            return Built { k_max, k_used: k, graph: g, sites, st, engine: "ilp" };
        }
        let (k_used, st) = heuristic(&g, k, &ctx.cfg);
        return Built { k_max, k_used, graph: g, sites, st, engine: "ilp_timeout_mcmf" };
    }
    let (k_used, st) = heuristic(&g, k, &ctx.cfg);
    Built { k_max, k_used, graph: g, sites, st, engine: "mcmf" }
}

/// Reported yield of a finished group; exact enumeration silently falls back
/// to the binomial bound above its size limit.
fn final_yield(st: &ToleranceStructure, p: &PlanParams) -> (f64, YieldMode) {
    let size = st.num_f() + st.used_spares().len();
    let mode = match p.yield_mode {
        YieldMode::ExactEnum if size > EXACT_ENUM_LIMIT => YieldMode::Binomial,
        m => m,
    };
    let params = YieldParams { p: p.p, mode, samples: p.samples, seed: p.seed };
    let y = group_yield(st, &params).expect("parameters were validated");
    (y.value, mode)
}

fn group_result(id: usize, b: &Built, ctx: &Context) -> GroupResult {
    let metrics = b.st.metrics();
    let (group_yield, yield_mode) = final_yield(&b.st, &ctx.inst.params);
    let m = b.graph.num_f();
    GroupResult {
        id,
        f_tsvs: b.graph.names()[..m].to_vec(),
        stsvs: b.st.used_spares().iter().map(|&s| b.graph.name(s).to_owned()).collect(),
        k_max: b.k_max,
        k_used: b.k_used,
        structure: b.st.to_file(&b.graph),
        metrics: GroupMetrics {
            max_indegree: metrics.max_indegree,
            used_stsvs: metrics.used_stsvs,
            max_mux_ports: metrics.max_mux_ports,
        },
        group_yield,
        yield_mode,
        engine: b.engine.to_owned(),
    }
}

fn totals(groups: &[GroupResult]) -> PlanTotals {
    PlanTotals {
        num_groups: groups.len(),
        total_stsvs: groups.iter().map(|g| g.metrics.used_stsvs).sum(),
        max_mux_ports: groups.iter().map(|g| g.metrics.max_mux_ports).max().unwrap_or(0),
        tsv_yield: tsv_yield(&groups.iter().map(|g| g.group_yield).collect::<Vec<_>>()),
    }
}

fn infeasible(yields: &[(usize, f64, usize)]) -> PlanError {
    let best_yield = yields.iter().map(|y| y.1).product();
    let mut worst: Vec<_> = yields.iter().filter(|y| y.1 < 1.0).collect();
    worst.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    PlanError::Infeasible {
        best_yield,
        limiting: worst
            .iter()
            .take(5)
            .map(|&&(id, y, m)| format!("group {id}: {m} f-TSVs, yield {y:.6}"))
            .collect(),
    }
}

/// Lowest-yield group that can still be split (ties by smallest id).
fn worst_splittable(yields: impl Iterator<Item = (usize, f64, bool)>) -> Option<usize> {
    yields
        .filter(|y| y.2)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|y| y.0)
}

/// Adaptive planning.
pub fn plan(inst: &PlanInstance) -> Result<PlanResult, PlanError> {
    let ctx = Context::new(inst)?;
    let p = &inst.params;
    if p.target_yield >= 1.0 && p.p > 0.0 {
        return Err(PlanError::Infeasible {
            best_yield: 1.0 - p.p,
            limiting: vec!["a yield of 1 needs p = 0".into()],
        });
    }
    let mut groups: Vec<Vec<usize>> = vec![(0..ctx.num_f()).collect()];
    let mut evals: Vec<Option<Eval>> = vec![None];
    let mut iterations = 0;
    loop {
        // Grouping loop on temporary structures and the binomial bound.
        loop {
            let pending: Vec<usize> = (0..groups.len()).filter(|&i| evals[i].is_none()).collect();
            let fresh: Vec<Eval> = pending.par_iter().map(|&i| evaluate(&ctx, &groups[i])).collect();
            for (i, e) in pending.into_iter().zip(fresh) {
                evals[i] = Some(e);
            }
            let ys: Vec<f64> = evals.iter().map(|e| e.as_ref().unwrap().yield_value).collect();
            if tsv_yield(&ys) >= p.target_yield {
                break;
            }
            let pick = worst_splittable(evals.iter().enumerate().map(|(i, e)| {
                let e = e.as_ref().unwrap();
                (i, e.yield_value, groups[i].len() >= 2 && e.has_sites)
            }));
            let Some(i) = pick else {
                let info: Vec<_> = (0..groups.len()).map(|i| (i, ys[i], groups[i].len())).collect();
                return Err(infeasible(&info));
            };
            let claimed = vec![false; inst.s_sites.len()];
            let (l, r) = ctx.split(&groups[i], &claimed);
            groups[i] = l;
            evals[i] = None;
            groups.push(r);
            evals.push(None);
            iterations += 1;
        }

        // Finalization: claim spares, deepest deficit first.
        let mut order: Vec<usize> = (0..groups.len()).collect();
        order.sort_by(|&a, &b| {
            let (ya, yb) = (evals[a].as_ref().unwrap().yield_value, evals[b].as_ref().unwrap().yield_value);
            ya.total_cmp(&yb).then(a.cmp(&b))
        });
        let mut claimed = vec![false; inst.s_sites.len()];
        let mut built: Vec<Option<Built>> = (0..groups.len()).map(|_| None).collect();
        for &i in &order {
            let b = build_final(&ctx, &groups[i], &claimed);
            for s in b.st.used_spares() {
                claimed[b.sites[s - b.graph.num_f()]] = true;
            }
            built[i] = Some(b);
        }
        let built: Vec<Built> = built.into_iter().map(Option::unwrap).collect();
        let results: Vec<GroupResult> = built.iter().enumerate().map(|(i, b)| group_result(i, b, &ctx)).collect();
        let tot = totals(&results);
        if tot.tsv_yield >= p.target_yield {
            let fallbacks = results.iter().filter(|g| g.engine == "ilp_timeout_mcmf").count();
            return Ok(PlanResult { groups: results, totals: tot, iterations, fallbacks });
        }
        let pick = worst_splittable(
            results
                .iter()
                .zip(&evals)
                .map(|(g, e)| (g.id, g.group_yield, g.f_tsvs.len() >= 2 && e.as_ref().unwrap().has_sites)),
        );
        let Some(i) = pick else {
            let info: Vec<_> = results.iter().map(|g| (g.id, g.group_yield, g.f_tsvs.len())).collect();
            return Err(infeasible(&info));
        };
        let none = vec![false; inst.s_sites.len()];
        let (l, r) = ctx.split(&groups[i], &none);
        groups[i] = l;
        evals[i] = None;
        groups.push(r);
        evals.push(None);
        iterations += 1;
    }
}

/// Baseline with exactly `k` spares per group, each reachable directly from
/// every f-TSV of the group.
pub fn plan_fixed_k(inst: &PlanInstance, k: usize) -> Result<PlanResult, PlanError> {
    if k == 0 {
        return Err(PlanError::Invalid("k must be at least 1".into()));
    }
    let ctx = Context::new(inst)?;
    let p = &inst.params;
    let mut claimed = vec![false; inst.s_sites.len()];
    // (f-TSVs, claimed sites) of finished groups
    let mut done: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    let mut iterations = 0;
    let mut todo: VecDeque<Vec<usize>> = VecDeque::from([(0..ctx.num_f()).collect()]);
    loop {
        while let Some(fs) = todo.pop_front() {
            let shared = ctx.shared_sites(&fs, &claimed);
            if shared.len() >= k {
                let chosen = shared[..k].to_vec();
                for &s in &chosen {
                    claimed[s] = true;
                }
                done.push((fs, chosen));
            } else if fs.len() == 1 {
                return Err(PlanError::Infeasible {
                    best_yield: 0.0,
                    limiting: vec![format!(
                        "`{}` reaches only {} unclaimed sites directly, needs {k}",
                        inst.f_tsvs[fs[0]].id,
                        shared.len()
                    )],
                });
            } else {
                let (l, r) = ctx.split(&fs, &claimed);
                iterations += 1;
                todo.push_front(r);
                todo.push_front(l);
            }
        }
        let ys: Vec<f64> = done.iter().map(|(fs, _)| binomial_bound(fs.len() + k, k, p.p)).collect();
        if tsv_yield(&ys) >= p.target_yield {
            break;
        }
        let pick = worst_splittable(done.iter().enumerate().map(|(i, (fs, _))| (i, ys[i], fs.len() >= 2)));
        let Some(i) = pick else {
            let info: Vec<_> = done.iter().enumerate().map(|(i, (fs, _))| (i, ys[i], fs.len())).collect();
            return Err(infeasible(&info));
        };
        let (fs, sites) = done.remove(i);
        for s in sites {
            claimed[s] = false;
        }
        let (l, r) = ctx.split(&fs, &claimed);
        iterations += 1;
        todo.push_back(l);
        todo.push_back(r);
    }
    let built: Vec<Built> = done
        .par_iter()
        .map(|(fs, sites)| {
            let (g, sites) = ctx.graph_over(fs, sites.clone());
            let spares: Vec<usize> = g.spares().collect();
            let model = build_fixed_model(&g.split(), &spares).expect("spares of the graph");
            let out = solve(&model, p.ilp_timeout_s);
            let (st, engine) = match (out.status, out.structure) {
                (SolveStatus::Optimal, Some(st)) => (st, "ilp"),
                _ => (heuristic(&g, k, &ctx.cfg).1, "ilp_timeout_mcmf"),
            };
            Built { k_max: k, k_used: st.k(), graph: g, sites, st, engine }
        })
        .collect();
    let results: Vec<GroupResult> = built.iter().enumerate().map(|(i, b)| group_result(i, b, &ctx)).collect();
    let fallbacks = results.iter().filter(|g| g.engine == "ilp_timeout_mcmf").count();
    Ok(PlanResult { totals: totals(&results), groups: results, iterations, fallbacks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut(edges: &[(usize, usize, u64)], left: &[usize]) -> u64 {
        edges
            .iter()
            .filter(|e| left.contains(&e.0) != left.contains(&e.1))
            .map(|e| e.2)
            .sum()
    }

    #[test]
    fn two_vertices_one_per_side() {
        let (l, r) = bipartition(2, &[(0, 1, 7)], &[(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!((l.len(), r.len()), (1, 1));
        assert_eq!(bipartition(1, &[], &[(0.0, 0.0)]), Err(PlanError::TooSmall));
    }

    #[test]
    fn cliques_stay_whole() {
        // interleaved coordinates so the initial split cuts both cliques
        let mut edges = Vec::new();
        for c in [[0, 2, 4], [1, 3, 5]] {
            for a in 0..3 {
                for b in a + 1..3 {
                    edges.push((c[a], c[b], 5));
                }
            }
        }
        edges.push((4, 5, 1));
        let coords: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 0.0)).collect();
        let (l, _) = bipartition(6, &edges, &coords).unwrap();
        assert_eq!(cut(&edges, &l), 1);
    }

    #[test]
    fn balance_window() {
        let coords: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, (i * 7 % 3) as f64)).collect();
        let edges: Vec<_> = (0..9).map(|i| (i, i + 1, 1 + (i as u64 % 3))).collect();
        let (l, r) = bipartition(10, &edges, &coords).unwrap();
        assert_eq!((l.len(), r.len()), (5, 5));
        let coords: Vec<(f64, f64)> = (0..7).map(|i| (0.0, i as f64)).collect();
        let (l, r) = bipartition(7, &[], &coords).unwrap();
        assert!(l.len().abs_diff(r.len()) == 1);
    }
}
