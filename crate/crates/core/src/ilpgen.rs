//! Exact structure generation.
//!
//! [`IlpModel`] spells out the 0/1 program (flow conservation per source/sink
//! pair, per-source split-edge disjointness, `K` paths per source, `d`/`x`
//! linking, the indegree bound `λ1` and the spare count `λ2`) so it can be
//! dumped in LP format or used to check a structure. The solver itself is a
//! combinatorial search that certifies the same optimum: it enumerates
//! `λ1 + λ2` upward, and for each candidate value every spare subset `S`
//! (lexicographically) with `λ1 = value - |S|`, deciding feasibility by
//! branch-and-bound over which incoming connections each over-full TSV keeps,
//! pruned by per-f-TSV max-flow.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::flow::{decompose_paths, min_cost_max_flow, FlowNetwork};
use crate::relgraph::{RelGraph, SplitGraph};
use crate::structure::ToleranceStructure;
use crate::tolerance::{disjoint_paths_over, max_tolerant_faults_capped};

/// Default solver time limit in seconds.
pub const DEFAULT_TIMEOUT_S: f64 = 3600.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IlpError {
    #[error("k = {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("TSV #{0} is not a spare of the graph")]
    NotASpare(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formulation {
    /// Minimize `λ1 + λ2` with `K` paths per f-TSV to any spares.
    Adaptive,
    /// Every f-TSV reaches each listed spare; minimize `λ1`.
    FixedK { spares: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Edge `e` of `E'` carries the unit flow from f-TSV `s` to spare `t`.
    X { e: usize, s: usize, t: usize },
    V { s: usize, t: usize },
    D { e: usize },
    Lambda1,
    Lambda2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(Var, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

/// A 0/1 program over a split graph. `E'` is numbered split edges first
/// (TSV order), then replace edges (relation-edge order).
#[derive(Debug, Clone, PartialEq)]
pub struct IlpModel {
    graph: RelGraph,
    split: SplitGraph,
    k: usize,
    formulation: Formulation,
}

pub fn build_adaptive_model(g: &SplitGraph, k: usize) -> Result<IlpModel, IlpError> {
    if k == 0 || k > g.num_s() {
        return Err(IlpError::KOutOfRange { k, n: g.num_s() });
    }
    Ok(IlpModel {
        graph: g.to_relgraph(),
        split: g.clone(),
        k,
        formulation: Formulation::Adaptive,
    })
}

/// Prior-work program restricted to the given spares: `K = |spares|` and each
/// f-TSV must reach every one of them.
pub fn build_fixed_model(g: &SplitGraph, spares: &[usize]) -> Result<IlpModel, IlpError> {
    for &s in spares {
        if s < g.num_f() || s >= g.num_tsvs() {
            return Err(IlpError::NotASpare(s));
        }
    }
    if spares.is_empty() {
        return Err(IlpError::KOutOfRange { k: 0, n: g.num_s() });
    }
    let mut spares = spares.to_vec();
    spares.sort_unstable();
    spares.dedup();
    Ok(IlpModel {
        graph: g.to_relgraph(),
        split: g.clone(),
        k: spares.len(),
        formulation: Formulation::FixedK { spares },
    })
}

impl IlpModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn formulation(&self) -> &Formulation {
        &self.formulation
    }

    pub fn graph(&self) -> &RelGraph {
        &self.graph
    }

    fn sinks(&self) -> Vec<usize> {
        match &self.formulation {
            Formulation::Adaptive => self.graph.spares().collect(),
            Formulation::FixedK { spares } => spares.clone(),
        }
    }

    fn edge_list(&self) -> Vec<(usize, usize)> {
        self.split.edges().collect()
    }

    pub fn num_x_vars(&self) -> usize {
        self.graph.num_f() * self.sinks().len() * self.split.num_edges()
    }

    pub fn num_v_vars(&self) -> usize {
        self.graph.num_f() * self.sinks().len()
    }

    pub fn num_d_vars(&self) -> usize {
        self.split.num_edges()
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        let edges = self.edge_list();
        let sinks = self.sinks();
        let nodes = self.split.num_nodes();
        let mut out_arcs = vec![Vec::new(); nodes];
        let mut in_arcs = vec![Vec::new(); nodes];
        for (e, &(a, b)) in edges.iter().enumerate() {
            out_arcs[a].push(e);
            in_arcs[b].push(e);
        }
        let mut cs = Vec::new();
        for s in self.graph.functional() {
            for &t in &sinks {
                for u in 0..nodes {
                    let mut terms: Vec<(Var, i64)> = out_arcs[u]
                        .iter()
                        .map(|&e| (Var::X { e, s, t }, 1))
                        .chain(in_arcs[u].iter().map(|&e| (Var::X { e, s, t }, -1)))
                        .collect();
                    if u == SplitGraph::out_node(s) {
                        terms.push((Var::V { s, t }, -1));
                    }
                    if u == SplitGraph::out_node(t) {
                        terms.push((Var::V { s, t }, 1));
                    }
                    if !terms.is_empty() {
                        cs.push(Constraint {
                            name: format!("flow_f{s}_s{t}_n{u}"),
                            terms,
                            sense: Sense::Eq,
                            rhs: 0,
                        });
                    }
                }
            }
            for u in 0..self.graph.num_vertices() {
                cs.push(Constraint {
                    name: format!("disjoint_f{s}_v{u}"),
                    terms: sinks.iter().map(|&t| (Var::X { e: u, s, t }, 1)).collect(),
                    sense: Sense::Le,
                    rhs: 1,
                });
            }
            cs.push(Constraint {
                name: format!("kpaths_f{s}"),
                terms: sinks.iter().map(|&t| (Var::V { s, t }, 1)).collect(),
                sense: Sense::Eq,
                rhs: self.k as i64,
            });
        }
        for e in 0..edges.len() {
            for s in self.graph.functional() {
                for &t in &sinks {
                    cs.push(Constraint {
                        name: format!("link_lo_e{e}_f{s}_s{t}"),
                        terms: vec![(Var::D { e }, 1), (Var::X { e, s, t }, -1)],
                        sense: Sense::Ge,
                        rhs: 0,
                    });
                }
            }
            let mut terms = vec![(Var::D { e }, 1)];
            for s in self.graph.functional() {
                for &t in &sinks {
                    terms.push((Var::X { e, s, t }, -1));
                }
            }
            cs.push(Constraint {
                name: format!("link_hi_e{e}"),
                terms,
                sense: Sense::Le,
                rhs: 0,
            });
        }
        for u in 0..self.graph.num_vertices() {
            let mut terms: Vec<(Var, i64)> = in_arcs[SplitGraph::in_node(u)]
                .iter()
                .map(|&e| (Var::D { e }, 1))
                .collect();
            terms.push((Var::Lambda1, -1));
            cs.push(Constraint {
                name: format!("indegree_v{u}"),
                terms,
                sense: Sense::Le,
                rhs: 0,
            });
        }
        let mut terms: Vec<(Var, i64)> = sinks.iter().map(|&t| (Var::D { e: t }, 1)).collect();
        terms.push((Var::Lambda2, -1));
        cs.push(Constraint {
            name: "used_spares".into(),
            terms,
            sense: Sense::Eq,
            rhs: 0,
        });
        cs
    }

    fn var_name(v: &Var) -> String {
        match *v {
            Var::X { e, s, t } => format!("x_e{e}_f{s}_s{t}"),
            Var::V { s, t } => format!("v_f{s}_s{t}"),
            Var::D { e } => format!("d_e{e}"),
            Var::Lambda1 => "lambda1".into(),
            Var::Lambda2 => "lambda2".into(),
        }
    }

    /// CPLEX LP text of the model.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        let label = match &self.formulation {
            Formulation::Adaptive => format!("adaptive model, K = {}", self.k),
            Formulation::FixedK { spares } => {
                let names: Vec<&str> = spares.iter().map(|&s| self.graph.name(s)).collect();
                format!("fixed model over spares {}", names.join(" "))
            }
        };
        let _ = writeln!(out, "\\ {label}");
        for (e, (a, b)) in self.split.edges().enumerate() {
            let _ = writeln!(
                out,
                "\\ e{e}: {} -> {}",
                self.split.node_label(a),
                self.split.node_label(b)
            );
        }
        for v in self.graph.functional() {
            let _ = writeln!(out, "\\ f{v}: {}", self.graph.name(v));
        }
        for v in self.graph.spares() {
            let _ = writeln!(out, "\\ s{v}: {}", self.graph.name(v));
        }
        out.push_str("Minimize\n");
        match self.formulation {
            Formulation::Adaptive => out.push_str(" obj: lambda1 + lambda2\n"),
            Formulation::FixedK { .. } => out.push_str(" obj: lambda1\n"),
        }
        out.push_str("Subject To\n");
        for c in self.constraints() {
            let _ = write!(out, " {}:", c.name);
            for (v, a) in &c.terms {
                let sign = if *a < 0 { '-' } else { '+' };
                let _ = write!(out, " {sign} {} {}", a.abs(), Self::var_name(v));
            }
            let sense = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {sense} {}", c.rhs);
        }
        out.push_str("Bounds\n lambda1 >= 0\n lambda2 >= 0\nGeneral\n lambda1 lambda2\nBinary\n");
        let sinks = self.sinks();
        for e in 0..self.num_d_vars() {
            for s in self.graph.functional() {
                for &t in &sinks {
                    let _ = writeln!(out, " {}", Self::var_name(&Var::X { e, s, t }));
                }
            }
        }
        for s in self.graph.functional() {
            for &t in &sinks {
                let _ = writeln!(out, " {}", Self::var_name(&Var::V { s, t }));
            }
        }
        for e in 0..self.num_d_vars() {
            let _ = writeln!(out, " {}", Self::var_name(&Var::D { e }));
        }
        out.push_str("End\n");
        out
    }

    /// The variable assignment a structure induces (absent variables are 0).
    pub fn encode(&self, st: &ToleranceStructure) -> BTreeMap<Var, i64> {
        let n = self.graph.num_vertices();
        let edges = self.graph.edges();
        let replace_id = |u: usize, v: usize| n + edges.binary_search(&(u, v)).expect("edge of g");
        let mut a = BTreeMap::new();
        for (s, ps) in st.paths().iter().enumerate() {
            for p in ps {
                let t = *p.last().unwrap();
                a.insert(Var::V { s, t }, 1);
                for (i, w) in p.windows(2).enumerate() {
                    if i > 0 {
                        a.insert(Var::X { e: w[0], s, t }, 1);
                    }
                    let e = replace_id(w[0], w[1]);
                    a.insert(Var::X { e, s, t }, 1);
                }
                a.insert(Var::X { e: t, s, t }, 1);
            }
        }
        let used: Vec<usize> = a
            .keys()
            .filter_map(|v| match v {
                Var::X { e, .. } => Some(*e),
                _ => None,
            })
            .collect();
        for e in used {
            a.insert(Var::D { e }, 1);
        }
        let m = st.metrics();
        a.insert(Var::Lambda1, m.max_indegree as i64);
        a.insert(Var::Lambda2, m.used_stsvs as i64);
        a
    }

    /// Names of the constraints `assignment` violates.
    pub fn violated(&self, assignment: &BTreeMap<Var, i64>) -> Vec<String> {
        self.constraints()
            .into_iter()
            .filter(|c| {
                let lhs: i64 = c
                    .terms
                    .iter()
                    .map(|(v, a)| a * assignment.get(v).copied().unwrap_or(0))
                    .sum();
                match c.sense {
                    Sense::Le => lhs > c.rhs,
                    Sense::Ge => lhs < c.rhs,
                    Sense::Eq => lhs != c.rhs,
                }
            })
            .map(|c| c.name)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Timeout,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub structure: Option<ToleranceStructure>,
    /// `(λ1, λ2)`.
    pub objective: Option<(usize, usize)>,
    pub elapsed: f64,
}

struct Expired;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    In,
    Out,
}

struct Search<'a> {
    g: &'a RelGraph,
    k: usize,
    deadline: Instant,
    in_edges: Vec<Vec<usize>>,
}

impl<'a> Search<'a> {
    fn new(g: &'a RelGraph, k: usize, deadline: Instant) -> Self {
        let mut in_edges = vec![Vec::new(); g.num_vertices()];
        for (e, &(_, v)) in g.edges().iter().enumerate() {
            in_edges[v].push(e);
        }
        Self {
            g,
            k,
            deadline,
            in_edges,
        }
    }

    fn tick(&self) -> Result<(), Expired> {
        if Instant::now() >= self.deadline {
            Err(Expired)
        } else {
            Ok(())
        }
    }

    fn max_in_degree(&self) -> usize {
        self.in_edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Every f-TSV has `k` replacing paths to `allowed` spares over `keep`.
    fn reaches(&self, keep: &[bool], allowed: &[bool]) -> bool {
        let g = self.g;
        g.functional().all(|f| {
            let edges = g
                .edges()
                .iter()
                .enumerate()
                .filter(|&(e, _)| keep[e])
                .map(|(_, &uv)| uv);
            disjoint_paths_over(
                g.num_vertices(),
                g.num_f(),
                edges,
                f,
                |s| allowed[s],
                Some(self.k),
            ) >= self.k
        })
    }

    /// Network from a super-source (capacity `k` into `f'`) to a super-sink
    /// behind the allowed spares. Returns the network and, per arc, the
    /// relation edge it represents.
    fn network(
        &self,
        f: usize,
        allowed: &[bool],
        cost: impl Fn(usize) -> Option<i64>,
    ) -> (FlowNetwork, Vec<Option<usize>>) {
        let g = self.g;
        let n = g.num_vertices();
        let (src, sink) = (2 * n, 2 * n + 1);
        let mut net = FlowNetwork::new(2 * n + 2, src, sink).unwrap();
        let mut arc_edge = Vec::new();
        net.add_arc(src, SplitGraph::out_node(f), self.k as i64, 0).unwrap();
        arc_edge.push(None);
        let usable = |v: usize| v != f && (g.is_functional(v) || allowed[v]);
        for u in 0..n {
            if usable(u) {
                net.add_arc(SplitGraph::in_node(u), SplitGraph::out_node(u), 1, 0)
                    .unwrap();
                arc_edge.push(None);
            }
        }
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if !usable(v) {
                continue;
            }
            if let Some(c) = cost(e) {
                net.add_arc(SplitGraph::out_node(u), SplitGraph::in_node(v), 1, c)
                    .unwrap();
                arc_edge.push(Some(e));
            }
        }
        for s in g.spares() {
            if allowed[s] {
                net.add_arc(SplitGraph::out_node(s), sink, 1, 0).unwrap();
                arc_edge.push(None);
            }
        }
        (net, arc_edge)
    }

    /// Routes every f-TSV in turn, preferring connections already chosen and
    /// avoiding TSVs whose indegree budget is spent. `None` when some f-TSV
    /// cannot get `k` paths even with every non-excluded edge.
    fn guided_union(&self, fix: &[Fix], allowed: &[bool], l: usize) -> Option<Vec<bool>> {
        let g = self.g;
        let big = g.num_edges() as i64 + 1;
        let mut union = vec![false; g.num_edges()];
        let mut indeg = vec![0usize; g.num_vertices()];
        for f in g.functional() {
            let (net, arc_edge) = self.network(f, allowed, |e| {
                let v = g.edges()[e].1;
                match fix[e] {
                    Fix::Out => None,
                    Fix::In => Some(0),
                    Fix::Free if union[e] => Some(0),
                    Fix::Free if indeg[v] >= l => Some(big),
                    Fix::Free => Some(1),
                }
            });
            let flow = min_cost_max_flow(&net).expect("costs are small");
            if (flow.value as usize) < self.k {
                return None;
            }
            for (a, &fl) in flow.arc_flows.iter().enumerate() {
                if let (true, Some(e)) = (fl > 0, arc_edge[a]) {
                    if !union[e] {
                        union[e] = true;
                        indeg[g.edges()[e].1] += 1;
                    }
                }
            }
        }
        Some(union)
    }

    /// Some connection set with indegree at most `l` everywhere under which
    /// every f-TSV keeps `k` paths into `allowed`.
    fn feasible(&self, allowed: &[bool], l: usize) -> Result<Option<Vec<bool>>, Expired> {
        let mut fix: Vec<Fix> = self
            .g
            .edges()
            .iter()
            .map(|&(_, v)| {
                if self.g.is_spare(v) && !allowed[v] {
                    Fix::Out
                } else {
                    Fix::Free
                }
            })
            .collect();
        self.branch(&mut fix, allowed, l)
    }

    fn branch(
        &self,
        fix: &mut Vec<Fix>,
        allowed: &[bool],
        l: usize,
    ) -> Result<Option<Vec<bool>>, Expired> {
        self.tick()?;
        let saved = fix.clone();
        let result = self.branch_inner(fix, allowed, l);
        *fix = saved;
        result
    }

    fn branch_inner(
        &self,
        fix: &mut Vec<Fix>,
        allowed: &[bool],
        l: usize,
    ) -> Result<Option<Vec<bool>>, Expired> {
        for ins in &self.in_edges {
            let taken = ins.iter().filter(|&&e| fix[e] == Fix::In).count();
            if taken > l {
                return Ok(None);
            }
            if taken == l {
                for &e in ins {
                    if fix[e] == Fix::Free {
                        fix[e] = Fix::Out;
                    }
                }
            }
        }
        let Some(union) = self.guided_union(fix, allowed, l) else {
            return Ok(None);
        };
        let over = self
            .in_edges
            .iter()
            .position(|ins| ins.iter().filter(|&&e| union[e]).count() > l);
        let Some(v) = over else {
            return Ok(Some(union));
        };
        let e = *self.in_edges[v]
            .iter()
            .find(|&&e| union[e] && fix[e] == Fix::Free)
            .expect("an over-full TSV has a free incoming connection");
        fix[e] = Fix::In;
        if let Some(found) = self.branch(fix, allowed, l)? {
            return Ok(Some(found));
        }
        fix[e] = Fix::Out;
        self.branch(fix, allowed, l)
    }

    /// Drops connections from the highest edge index down while the set stays
    /// feasible, giving an inclusion-minimal set.
    fn minimize(&self, mut keep: Vec<bool>, allowed: &[bool]) -> Vec<bool> {
        for e in (0..keep.len()).rev() {
            if keep[e] {
                keep[e] = false;
                if !self.reaches(&keep, allowed) {
                    keep[e] = true;
                }
            }
        }
        keep
    }

    /// Shortest `k` paths of every f-TSV inside `keep`.
    fn extract(&self, keep: &[bool], allowed: &[bool]) -> ToleranceStructure {
        let g = self.g;
        let paths = g
            .functional()
            .map(|f| {
                let (net, _) = self.network(f, allowed, |e| keep[e].then_some(1));
                let flow = min_cost_max_flow(&net).expect("costs are small");
                debug_assert_eq!(flow.value as usize, self.k);
                decompose_paths(&net, &flow)
                    .expect("min-cost flow output is acyclic")
                    .into_iter()
                    .map(|p| {
                        // [src, f', v, v', ..., s, s', sink]
                        let mut tsvs = vec![f];
                        tsvs.extend(
                            p.nodes[2..p.nodes.len() - 1]
                                .iter()
                                .filter(|&&x| !SplitGraph::is_out_node(x))
                                .map(|&x| SplitGraph::tsv_of(x)),
                        );
                        tsvs
                    })
                    .collect()
            })
            .collect();
        ToleranceStructure::new(self.k, g.num_f(), g.num_vertices(), paths)
    }

    fn allowed_mask(&self, spares: &[usize]) -> Vec<bool> {
        let mut allowed = vec![false; self.g.num_vertices()];
        for &s in spares {
            allowed[s] = true;
        }
        allowed
    }

    /// Smallest indegree bound in `1..limit` admitting a structure over
    /// exactly these spares.
    fn min_bound(&self, spares: &[usize], limit: usize) -> Result<Option<(usize, Vec<bool>)>, Expired> {
        let allowed = self.allowed_mask(spares);
        let all = vec![true; self.g.num_edges()];
        if !self.reaches(&all, &allowed) {
            return Ok(None);
        }
        for l in 1..limit {
            self.tick()?;
            if let Some(c) = self.feasible(&allowed, l)? {
                return Ok(Some((l, c)));
            }
        }
        Ok(None)
    }

    fn adaptive(&self) -> Result<Option<(Vec<usize>, Vec<bool>)>, Expired> {
        let g = self.g;
        let spares: Vec<usize> = g.spares().collect();
        let lmax = self.max_in_degree();
        let all = vec![true; g.num_edges()];
        for value in self.k + 1..=lmax + spares.len() {
            let mut found = None;
            let mut visit = |subset: &[usize]| -> Result<bool, Expired> {
                self.tick()?;
                let l = value - subset.len();
                if l > lmax {
                    // already covered by a smaller value
                    return Ok(false);
                }
                let chosen: Vec<usize> = subset.iter().map(|&j| spares[j]).collect();
                let allowed = self.allowed_mask(&chosen);
                if !self.reaches(&all, &allowed) {
                    return Ok(false);
                }
                if let Some(c) = self.feasible(&allowed, l)? {
                    found = Some((chosen, c));
                    return Ok(true);
                }
                Ok(false)
            };
            let hi = spares.len().min(value - 1);
            lex_subsets(spares.len(), self.k, hi, &mut visit)?;
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// Visits subsets of `0..n` with size in `lo..=hi` in lexicographic order of
/// their sorted element lists; stops when `visit` returns true.
fn lex_subsets<E>(
    n: usize,
    lo: usize,
    hi: usize,
    visit: &mut dyn FnMut(&[usize]) -> Result<bool, E>,
) -> Result<bool, E> {
    fn rec<E>(
        prefix: &mut Vec<usize>,
        next: usize,
        n: usize,
        lo: usize,
        hi: usize,
        visit: &mut dyn FnMut(&[usize]) -> Result<bool, E>,
    ) -> Result<bool, E> {
        if prefix.len() >= lo && visit(prefix)? {
            return Ok(true);
        }
        if prefix.len() == hi {
            return Ok(false);
        }
        for j in next..n {
            if prefix.len() + 1 + (n - j - 1) < lo {
                break;
            }
            prefix.push(j);
            let stop = rec(prefix, j + 1, n, lo, hi, visit)?;
            prefix.pop();
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }
    if lo > hi || lo > n {
        return Ok(false);
    }
    rec(&mut Vec::new(), 0, n, lo, hi, visit)
}

fn outcome(status: SolveStatus, st: Option<ToleranceStructure>, start: Instant) -> SolveOutcome {
    let objective = st.as_ref().map(|s| {
        let m = s.metrics();
        (m.max_indegree, m.used_stsvs)
    });
    SolveOutcome {
        status,
        structure: st,
        objective,
        elapsed: start.elapsed().as_secs_f64(),
    }
}

fn deadline(start: Instant, timeout: f64) -> Option<Instant> {
    if timeout.is_nan() || timeout <= 0.0 {
        return None;
    }
    let secs = timeout.min(1.0e9);
    Some(start + std::time::Duration::from_secs_f64(secs))
}

/// Certified-optimal structure for `model`, `Timeout` when the limit runs
/// out first, `Infeasible` when no structure exists (for the adaptive model
/// this means `k` exceeds the graph's tolerance).
pub fn solve(model: &IlpModel, timeout: f64) -> SolveOutcome {
    let start = Instant::now();
    let Some(end) = deadline(start, timeout) else {
        return outcome(SolveStatus::Timeout, None, start);
    };
    let g = &model.graph;
    let search = Search::new(g, model.k, end);
    let found = match &model.formulation {
        Formulation::Adaptive => {
            if max_tolerant_faults_capped(g, Some(model.k)).k < model.k {
                return outcome(SolveStatus::Infeasible, None, start);
            }
            search.adaptive()
        }
        Formulation::FixedK { spares } => search
            .min_bound(spares, search.max_in_degree() + 1)
            .map(|r| r.map(|(_, c)| (spares.clone(), c))),
    };
    match found {
        Err(Expired) => outcome(SolveStatus::Timeout, None, start),
        Ok(None) => outcome(SolveStatus::Infeasible, None, start),
        Ok(Some((spares, c))) => {
            let allowed = search.allowed_mask(&spares);
            let c = search.minimize(c, &allowed);
            let st = search.extract(&c, &allowed);
            outcome(SolveStatus::Optimal, Some(st), start)
        }
    }
}

/// Prior-work baseline: tries every `k`-subset of spares (lexicographically)
/// and keeps the one with the smallest indegree bound.
pub fn solve_fixed_k_baseline(g: &SplitGraph, k: usize, timeout: f64) -> SolveOutcome {
    let start = Instant::now();
    if k == 0 || k > g.num_s() {
        return outcome(SolveStatus::Infeasible, None, start);
    }
    let Some(end) = deadline(start, timeout) else {
        return outcome(SolveStatus::Timeout, None, start);
    };
    let rel = g.to_relgraph();
    let search = Search::new(&rel, k, end);
    let spares: Vec<usize> = rel.spares().collect();
    let mut best: Option<(usize, Vec<usize>, Vec<bool>)> = None;
    let mut visit = |subset: &[usize]| -> Result<bool, Expired> {
        let chosen: Vec<usize> = subset.iter().map(|&j| spares[j]).collect();
        let limit = best
            .as_ref()
            .map_or(search.max_in_degree() + 1, |(l, _, _)| *l);
        if let Some((l, c)) = search.min_bound(&chosen, limit)? {
            best = Some((l, chosen, c));
            if l == 1 {
                return Ok(true);
            }
        }
        Ok(false)
    };
    match lex_subsets(spares.len(), k, k, &mut visit) {
        Err(Expired) => outcome(SolveStatus::Timeout, None, start),
        Ok(_) => match best {
            None => outcome(SolveStatus::Infeasible, None, start),
            Some((_, chosen, c)) => {
                let allowed = search.allowed_mask(&chosen);
                let c = search.minimize(c, &allowed);
                let st = search.extract(&c, &allowed);
                outcome(SolveStatus::Optimal, Some(st), start)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::verify;

    fn bipartite(m: usize, n: usize) -> RelGraph {
        let f: Vec<String> = (1..=m).map(|i| format!("f{i}")).collect();
        let s: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
        let edges: Vec<(String, String)> = f
            .iter()
            .flat_map(|a| s.iter().map(move |b| (a.clone(), b.clone())))
            .collect();
        RelGraph::from_edges(&f, &s, &edges).unwrap()
    }

    #[test]
    fn lex_order() {
        let mut seen = Vec::new();
        lex_subsets::<()>(3, 1, 2, &mut |s| {
            seen.push(s.to_vec());
            Ok(false)
        })
        .unwrap();
        assert_eq!(
            seen,
            vec![vec![0], vec![0, 1], vec![0, 2], vec![1], vec![1, 2], vec![2]]
        );
    }

    #[test]
    fn k_range_checked() {
        let g = bipartite(2, 2).split();
        assert_eq!(
            build_adaptive_model(&g, 0).unwrap_err(),
            IlpError::KOutOfRange { k: 0, n: 2 }
        );
        assert!(build_adaptive_model(&g, 3).is_err());
    }

    #[test]
    fn complete_bipartite_all_to_all() {
        let g = bipartite(3, 2);
        let model = build_adaptive_model(&g.split(), 2).unwrap();
        let out = solve(&model, 10.0);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.objective, Some((3, 2)));
        let st = out.structure.unwrap();
        assert!(verify(&st, &g, 2).accepted);
        assert!(model.violated(&model.encode(&st)).is_empty());
        let base = solve_fixed_k_baseline(&g.split(), 2, 10.0);
        assert_eq!(base.objective, Some((3, 2)));
    }

    #[test]
    fn zero_timeout() {
        let g = bipartite(1, 1);
        let model = build_adaptive_model(&g.split(), 1).unwrap();
        assert_eq!(solve(&model, 0.0).status, SolveStatus::Timeout);
    }

    #[test]
    fn infeasible_when_k_too_large() {
        let g = RelGraph::from_edges(&["f1"], &["s1", "s2"], &[("f1", "s1")]).unwrap();
        let model = build_adaptive_model(&g.split(), 2).unwrap();
        assert_eq!(solve(&model, 10.0).status, SolveStatus::Infeasible);
    }

    #[test]
    fn variable_counts() {
        let g = bipartite(2, 3);
        let model = build_adaptive_model(&g.split(), 1).unwrap();
        let e = 5 + 6;
        assert_eq!(model.num_x_vars(), 2 * 3 * e);
        assert_eq!(model.num_v_vars(), 6);
        assert_eq!(model.num_d_vars(), e);
        assert!(model.to_lp().contains("obj: lambda1 + lambda2"));
    }
}
