//! Fault-tolerance structures: per-f-TSV replacing paths, the derived TSV
//! connections, multiplexer metrics, verification and fault injection.

use std::fmt;

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{decompose_paths, max_flow, FlowNetwork};
use crate::relgraph::{RelGraph, SplitGraph};

/// Default cap on the number of fault sets enumerated by
/// [`exhaustive_injection`].
pub const DEFAULT_INJECTION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("unknown TSV id `{0}`")]
    UnknownId(String),
    #[error("`{0}` is not a functional TSV but has paths")]
    PathsForSpare(String),
    #[error("{needed} fault sets exceed the enumeration budget of {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("structure has {got} functional TSVs, graph has {want}")]
    SizeMismatch { got: usize, want: usize },
}

/// `k` replacing paths per functional TSV over vertex indices of a
/// [`RelGraph`]; path `i` of `f` starts at `f` and ends at a spare.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToleranceStructure {
    k: usize,
    num_f: usize,
    num_vertices: usize,
    paths: Vec<Vec<Vec<usize>>>,
}

/// On-disk structure format: paths keyed by f-TSV id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFile {
    pub k: usize,
    pub paths: IndexMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureMetrics {
    pub indegree: Vec<usize>,
    pub max_indegree: usize,
    pub used_stsvs: usize,
    pub mux_ports: Vec<usize>,
    pub max_mux_ports: usize,
}

impl ToleranceStructure {
    pub fn new(k: usize, num_f: usize, num_vertices: usize, paths: Vec<Vec<Vec<usize>>>) -> Self {
        assert_eq!(paths.len(), num_f, "one path list per functional TSV");
        Self {
            k,
            num_f,
            num_vertices,
            paths,
        }
    }

    /// The `k = 0` structure: no paths, no connections.
    pub fn empty(g: &RelGraph) -> Self {
        Self::new(0, g.num_f(), g.num_vertices(), vec![Vec::new(); g.num_f()])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_f(&self) -> usize {
        self.num_f
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn paths(&self) -> &[Vec<Vec<usize>>] {
        &self.paths
    }

    pub fn paths_of(&self, f: usize) -> &[Vec<usize>] {
        &self.paths[f]
    }

    /// Distinct TSV connections traversed by any path, sorted.
    pub fn connections(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .paths
            .iter()
            .flatten()
            .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Spares that terminate some path, ascending.
    pub fn used_spares(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .paths
            .iter()
            .flatten()
            .filter_map(|p| p.last().copied())
            .filter(|&v| v >= self.num_f)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn metrics(&self) -> StructureMetrics {
        let mut indegree = vec![0usize; self.num_vertices];
        for (_, v) in self.connections() {
            indegree[v] += 1;
        }
        let mux_ports: Vec<usize> = indegree
            .iter()
            .enumerate()
            .map(|(v, &d)| if v < self.num_f { d + 1 } else { d })
            .collect();
        StructureMetrics {
            max_indegree: indegree.iter().copied().max().unwrap_or(0),
            used_stsvs: self.used_spares().len(),
            max_mux_ports: mux_ports.iter().copied().max().unwrap_or(0),
            indegree,
            mux_ports,
        }
    }

    pub fn to_file(&self, g: &RelGraph) -> StructureFile {
        let paths = self
            .paths
            .iter()
            .enumerate()
            .map(|(f, ps)| {
                let named = ps
                    .iter()
                    .map(|p| p.iter().map(|&v| g.name(v).to_owned()).collect())
                    .collect();
                (g.name(f).to_owned(), named)
            })
            .collect();
        StructureFile { k: self.k, paths }
    }

    /// Resolves ids against `g`. f-TSVs absent from the file get no paths,
    /// which [`verify`] then reports.
    pub fn from_file(file: &StructureFile, g: &RelGraph) -> Result<Self, StructureError> {
        let mut paths = vec![Vec::new(); g.num_f()];
        for (f, ps) in &file.paths {
            let fi = g
                .index_of(f)
                .ok_or_else(|| StructureError::UnknownId(f.clone()))?;
            if !g.is_functional(fi) {
                return Err(StructureError::PathsForSpare(f.clone()));
            }
            let mut resolved = Vec::with_capacity(ps.len());
            for p in ps {
                let mut q = Vec::with_capacity(p.len());
                for id in p {
                    q.push(
                        g.index_of(id)
                            .ok_or_else(|| StructureError::UnknownId(id.clone()))?,
                    );
                }
                resolved.push(q);
            }
            paths[fi] = resolved;
        }
        Ok(Self::new(file.k, g.num_f(), g.num_vertices(), paths))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    SizeMismatch,
    WrongK,
    WrongPathCount,
    PathTooShort,
    WrongStart,
    NotEndingAtSpare,
    EdgeNotInGraph,
    RevisitsVertex,
    NotVertexDisjoint,
    DuplicateSpareEndpoint,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::SizeMismatch => "structure and graph sizes differ",
            Rule::WrongK => "structure k differs from the expected k",
            Rule::WrongPathCount => "wrong number of paths",
            Rule::PathTooShort => "path has no edge",
            Rule::WrongStart => "path does not start at its f-TSV",
            Rule::NotEndingAtSpare => "path does not end at an s-TSV",
            Rule::EdgeNotInGraph => "edge not in relation graph",
            Rule::RevisitsVertex => "path revisits a TSV",
            Rule::NotVertexDisjoint => "paths not vertex-disjoint",
            Rule::DuplicateSpareEndpoint => "duplicate s-TSV endpoint",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub ftsv: Option<String>,
    pub rule: Rule,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub accepted: bool,
    pub violations: Vec<Violation>,
}

/// Checks every path-system rule of `st` against `g`. Never fails; problems
/// come back as violations.
pub fn verify(st: &ToleranceStructure, g: &RelGraph, expected_k: usize) -> Verdict {
    let mut violations = Vec::new();
    let mut report = |ftsv: Option<usize>, rule: Rule, detail: String| {
        violations.push(Violation {
            ftsv: ftsv.map(|f| g.name(f).to_owned()),
            rule,
            detail,
        });
    };
    if st.num_f != g.num_f() || st.num_vertices != g.num_vertices() {
        report(
            None,
            Rule::SizeMismatch,
            format!(
                "structure has {} f-TSVs / {} TSVs, graph has {} / {}",
                st.num_f,
                st.num_vertices,
                g.num_f(),
                g.num_vertices()
            ),
        );
        return Verdict {
            accepted: false,
            violations,
        };
    }
    if st.k != expected_k {
        report(None, Rule::WrongK, format!("k = {}, expected {expected_k}", st.k));
    }
    let mut owner = vec![usize::MAX; g.num_vertices()];
    for f in g.functional() {
        let ps = &st.paths[f];
        if ps.len() != expected_k {
            report(
                Some(f),
                Rule::WrongPathCount,
                format!("{} paths, expected {expected_k}", ps.len()),
            );
        }
        for (i, p) in ps.iter().enumerate() {
            if p.len() < 2 {
                report(Some(f), Rule::PathTooShort, format!("path {i}"));
                continue;
            }
            if p[0] != f {
                report(
                    Some(f),
                    Rule::WrongStart,
                    format!("path {i} starts at {}", g.name(p[0])),
                );
            }
            let end = *p.last().unwrap();
            if !g.is_spare(end) {
                report(
                    Some(f),
                    Rule::NotEndingAtSpare,
                    format!("path {i} ends at {}", g.name(end)),
                );
            }
            for w in p.windows(2) {
                if !g.has_edge(w[0], w[1]) {
                    report(
                        Some(f),
                        Rule::EdgeNotInGraph,
                        format!("{} -> {}", g.name(w[0]), g.name(w[1])),
                    );
                }
            }
            for (j, &v) in p.iter().enumerate().skip(1) {
                if p[..j].contains(&v) {
                    report(
                        Some(f),
                        Rule::RevisitsVertex,
                        format!("path {i} revisits {}", g.name(v)),
                    );
                    continue;
                }
                if owner[v] == f {
                    let rule = if j == p.len() - 1 && g.is_spare(v) {
                        Rule::DuplicateSpareEndpoint
                    } else {
                        Rule::NotVertexDisjoint
                    };
                    report(Some(f), rule, format!("{} at {}", rule, g.name(v)));
                }
                owner[v] = f;
            }
        }
    }
    Verdict {
        accepted: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairOutcome {
    pub repairable: bool,
    /// One path per faulty f-TSV, in ascending f-TSV order.
    pub assignment: Vec<Vec<usize>>,
}

/// Decides whether the realized fault set can be repaired inside the
/// structure's connections: every faulty f-TSV needs its own path to a
/// distinct healthy spare, paths pairwise vertex-disjoint, and faulty TSVs
/// usable only as the start of their own path.
pub fn repairable(st: &ToleranceStructure, faults: &[usize]) -> RepairOutcome {
    let n = st.num_vertices;
    let mut faulty = vec![false; n];
    for &v in faults {
        faulty[v] = true;
    }
    let faulty_f: Vec<usize> = (0..st.num_f).filter(|&f| faulty[f]).collect();
    if faulty_f.is_empty() {
        return RepairOutcome {
            repairable: true,
            assignment: Vec::new(),
        };
    }
    let spares = st.used_spares();
    let healthy_spares = spares.iter().filter(|&&s| !faulty[s]).count();
    if healthy_spares < faulty_f.len() {
        return RepairOutcome {
            repairable: false,
            assignment: Vec::new(),
        };
    }
    let (src, sink) = (2 * n, 2 * n + 1);
    let mut net = FlowNetwork::new(2 * n + 2, src, sink).unwrap();
    for &f in &faulty_f {
        net.add_arc(src, SplitGraph::out_node(f), 1, 0).unwrap();
    }
    for u in 0..n {
        if !faulty[u] {
            net.add_arc(SplitGraph::in_node(u), SplitGraph::out_node(u), 1, 0)
                .unwrap();
        }
    }
    for (u, v) in st.connections() {
        if !faulty[v] {
            net.add_arc(SplitGraph::out_node(u), SplitGraph::in_node(v), 1, 0)
                .unwrap();
        }
    }
    for &s in &spares {
        if !faulty[s] {
            net.add_arc(SplitGraph::out_node(s), sink, 1, 0).unwrap();
        }
    }
    let flow = max_flow(&net);
    if (flow.value as usize) < faulty_f.len() {
        return RepairOutcome {
            repairable: false,
            assignment: Vec::new(),
        };
    }
    let mut assignment: Vec<Vec<usize>> = decompose_paths(&net, &flow)
        .expect("max flow output is decomposable")
        .into_iter()
        .map(|p| {
            // [src, f', v, v', ..., s', sink]
            let mut tsvs = vec![SplitGraph::tsv_of(p.nodes[1])];
            tsvs.extend(
                p.nodes[2..p.nodes.len() - 1]
                    .iter()
                    .filter(|&&x| !SplitGraph::is_out_node(x))
                    .map(|&x| SplitGraph::tsv_of(x)),
            );
            tsvs
        })
        .collect();
    assignment.sort_by_key(|p| p[0]);
    RepairOutcome {
        repairable: true,
        assignment,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectionReport {
    pub up_to: usize,
    pub total: u64,
    pub repairable: u64,
    pub fraction: f64,
    pub first_counterexample: Option<Vec<usize>>,
}

pub(crate) fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All `r`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut c: Vec<usize> = (0..r).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..r).rev().find(|&i| c[i] != i + n - r) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..r {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Injects every set of 1..=`up_to` faulty f-TSVs (by size, then
/// lexicographically) and counts the repairable ones.
pub fn exhaustive_injection(
    st: &ToleranceStructure,
    up_to: usize,
    budget: u64,
) -> Result<InjectionReport, StructureError> {
    let up_to = up_to.min(st.num_f);
    let needed = (1..=up_to).fold(0u64, |acc, r| acc.saturating_add(binomial(st.num_f, r)));
    if needed > budget {
        return Err(StructureError::BudgetExceeded { needed, budget });
    }
    let sets: Vec<Vec<usize>> = (1..=up_to)
        .flat_map(|r| combinations(st.num_f, r))
        .collect();
    let ok: Vec<bool> = sets
        .par_iter()
        .map(|set| repairable(st, set).repairable)
        .collect();
    Ok(summarize(up_to, &sets, &ok))
}

/// Random fault sets of exactly `size` f-TSVs; the counterexample is the
/// first failing draw.
pub fn sampled_injection(
    st: &ToleranceStructure,
    size: usize,
    samples: u64,
    seed: u64,
) -> InjectionReport {
    let size = size.min(st.num_f);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<Vec<usize>> = (0..samples)
        .map(|_| {
            let mut v = sample(&mut rng, st.num_f, size).into_vec();
            v.sort_unstable();
            v
        })
        .collect();
    let ok: Vec<bool> = sets
        .par_iter()
        .map(|set| repairable(st, set).repairable)
        .collect();
    summarize(size, &sets, &ok)
}

fn summarize(up_to: usize, sets: &[Vec<usize>], ok: &[bool]) -> InjectionReport {
    let total = sets.len() as u64;
    let repaired = ok.iter().filter(|&&b| b).count() as u64;
    InjectionReport {
        up_to,
        total,
        repairable: repaired,
        fraction: if total == 0 {
            1.0
        } else {
            repaired as f64 / total as f64
        },
        first_counterexample: ok.iter().position(|&b| !b).map(|i| sets[i].clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> (RelGraph, ToleranceStructure) {
        // two f-TSVs sharing two spares, f1 reaching s2 through f2
        let g = RelGraph::from_edges(
            &["f1", "f2"],
            &["s1", "s2"],
            &[("f1", "s1"), ("f1", "f2"), ("f2", "s2"), ("f2", "s1")],
        )
        .unwrap();
        let st = ToleranceStructure::new(
            2,
            2,
            4,
            vec![vec![vec![0, 2], vec![0, 1, 3]], vec![vec![1, 2], vec![1, 3]]],
        );
        (g, st)
    }

    #[test]
    fn metrics_count_shared_edges_once() {
        let (_, st) = chain();
        let m = st.metrics();
        assert_eq!(m.indegree, vec![0, 1, 2, 1]);
        assert_eq!(m.mux_ports, vec![1, 2, 2, 1]);
        assert_eq!(m.max_indegree, 2);
        assert_eq!(m.max_mux_ports, 2);
        assert_eq!(m.used_stsvs, 2);
    }

    #[test]
    fn verify_accepts_and_rejects() {
        let (g, st) = chain();
        assert!(verify(&st, &g, 2).accepted);
        let v = verify(&st, &g, 1);
        assert!(!v.accepted);
        let bad = ToleranceStructure::new(
            2,
            2,
            4,
            vec![vec![vec![0, 2], vec![0, 1, 2]], vec![vec![1, 2], vec![1, 3]]],
        );
        let v = verify(&bad, &g, 2);
        assert_eq!(v.violations[0].rule, Rule::DuplicateSpareEndpoint);
        let missing = ToleranceStructure::new(
            2,
            2,
            4,
            vec![vec![vec![0, 2], vec![0, 3]], vec![vec![1, 2], vec![1, 3]]],
        );
        let v = verify(&missing, &g, 2);
        assert_eq!(v.violations[0].rule, Rule::EdgeNotInGraph);
    }

    #[test]
    fn repair_and_injection() {
        let (_, st) = chain();
        let r = repairable(&st, &[0, 1]);
        assert!(r.repairable);
        assert_eq!(r.assignment.len(), 2);
        assert!(repairable(&st, &[]).repairable);
        assert!(!repairable(&st, &[0, 2, 3]).repairable);
        let rep = exhaustive_injection(&st, 2, DEFAULT_INJECTION_BUDGET).unwrap();
        assert_eq!(rep.total, 3);
        assert_eq!(rep.fraction, 1.0);
        assert!(matches!(
            exhaustive_injection(&st, 2, 2),
            Err(StructureError::BudgetExceeded { needed: 3, budget: 2 })
        ));
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(
            combinations(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(binomial(20, 10), 184_756);
    }

    #[test]
    fn file_round_trip() {
        let (g, st) = chain();
        let file = st.to_file(&g);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.starts_with("{\"k\":2,\"paths\":{\"f1\""));
        let back: StructureFile = serde_json::from_str(&text).unwrap();
        assert_eq!(ToleranceStructure::from_file(&back, &g).unwrap(), st);
    }
}
