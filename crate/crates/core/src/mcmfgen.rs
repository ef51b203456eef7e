//! Min-cost-max-flow structure heuristic: route each f-TSV's `k` paths over a
//! network whose costs grow exponentially with congestion, then perturb.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{decompose_paths, min_cost_max_flow, FlowError, FlowNetwork};
use crate::relgraph::{RelGraph, SplitGraph};
use crate::structure::ToleranceStructure;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum McmfError {
    #[error("invalid heuristic configuration: {0}")]
    InvalidConfig(String),
    #[error("cost overflow: {0}")]
    CostOverflow(String),
    #[error("only {found} of {k} paths found for `{ftsv}`")]
    InsufficientPaths { ftsv: String, found: usize, k: usize },
}

impl From<FlowError> for McmfError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::CostOverflow => {
                McmfError::CostOverflow("path cost exceeds the 64-bit budget".into())
            }
            other => McmfError::InvalidConfig(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub c: i64,
    pub perturb_threshold: usize,
    pub seed: u64,
    pub exponent_cap: u32,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            c: 3,
            perturb_threshold: 50,
            seed: 0,
            exponent_cap: 18,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<(), McmfError> {
        if self.c < 2 {
            return Err(McmfError::InvalidConfig(format!("c = {} < 2", self.c)));
        }
        if self.c.checked_pow(self.exponent_cap).is_none() {
            return Err(McmfError::InvalidConfig(format!(
                "{}^{} does not fit in 64 bits",
                self.c, self.exponent_cap
            )));
        }
        Ok(())
    }

    fn power(&self, exponent: usize, what: impl FnOnce() -> String) -> Result<i64, McmfError> {
        if exponent > self.exponent_cap as usize {
            return Err(McmfError::CostOverflow(format!(
                "{} needs exponent {exponent} > cap {}",
                what(),
                self.exponent_cap
            )));
        }
        Ok(self.c.pow(exponent as u32))
    }
}

/// Routing state built from the paths of already-routed f-TSVs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialState {
    conn: HashMap<(usize, usize), usize>,
    tc: Vec<usize>,
    spare_use: Vec<usize>,
    routed: Vec<Option<Vec<Vec<usize>>>>,
    num_f: usize,
}

impl PartialState {
    pub fn new(num_f: usize, num_vertices: usize) -> Self {
        Self {
            conn: HashMap::new(),
            tc: vec![0; num_vertices],
            spare_use: vec![0; num_vertices],
            routed: vec![None; num_f],
            num_f,
        }
    }

    pub fn from_structure(st: &ToleranceStructure) -> Self {
        let mut s = Self::new(st.num_f(), st.num_vertices());
        for f in 0..st.num_f() {
            s.add(f, st.paths_of(f).to_vec());
        }
        s
    }

    /// Number of distinct connections ending at `v`.
    pub fn tc(&self, v: usize) -> usize {
        self.tc[v]
    }

    pub fn is_connection(&self, u: usize, v: usize) -> bool {
        self.conn.contains_key(&(u, v))
    }

    pub fn spare_used(&self, s: usize) -> bool {
        self.spare_use[s] > 0
    }

    pub fn routed(&self, f: usize) -> Option<&[Vec<usize>]> {
        self.routed[f].as_deref()
    }

    pub fn add(&mut self, f: usize, paths: Vec<Vec<usize>>) {
        assert!(self.routed[f].is_none(), "f-TSV routed twice");
        for p in &paths {
            for w in p.windows(2) {
                let m = self.conn.entry((w[0], w[1])).or_insert(0);
                if *m == 0 {
                    self.tc[w[1]] += 1;
                }
                *m += 1;
            }
            if let Some(&end) = p.last() {
                if end >= self.num_f {
                    self.spare_use[end] += 1;
                }
            }
        }
        self.routed[f] = Some(paths);
    }

    pub fn remove(&mut self, f: usize) -> Vec<Vec<usize>> {
        let paths = self.routed[f].take().expect("f-TSV not routed");
        for p in &paths {
            for w in p.windows(2) {
                let key = (w[0], w[1]);
                let m = self.conn.get_mut(&key).expect("tracked connection");
                *m -= 1;
                if *m == 0 {
                    self.conn.remove(&key);
                    self.tc[w[1]] -= 1;
                }
            }
            if let Some(&end) = p.last() {
                if end >= self.num_f {
                    self.spare_use[end] -= 1;
                }
            }
        }
        paths
    }

    /// `tc` recomputed from the routed paths alone.
    pub fn tc_from_scratch(&self) -> Vec<usize> {
        let mut edges: Vec<(usize, usize)> = self
            .routed
            .iter()
            .flatten()
            .flatten()
            .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut tc = vec![0; self.tc.len()];
        for (_, v) in edges {
            tc[v] += 1;
        }
        tc
    }

    /// `(max_mux_ports, used_stsvs)` of the routed paths.
    pub fn key(&self) -> (usize, usize) {
        let ports = self
            .tc
            .iter()
            .enumerate()
            .map(|(v, &t)| if v < self.num_f { t + 1 } else { t })
            .max()
            .unwrap_or(0);
        let used = self.spare_use.iter().filter(|&&u| u > 0).count();
        (ports, used)
    }

    fn to_structure(&self, k: usize) -> ToleranceStructure {
        let paths = self
            .routed
            .iter()
            .map(|p| p.clone().unwrap_or_default())
            .collect();
        ToleranceStructure::new(k, self.num_f, self.tc.len(), paths)
    }
}

/// Costed network for routing `f` given the other f-TSVs' paths. Nodes follow
/// [`SplitGraph`] numbering plus the sink `r = 2N`; the source is `f`'s
/// in-node, whose split edge carries capacity `k`.
pub fn build_network_for(
    f: usize,
    g: &RelGraph,
    k: usize,
    state: &PartialState,
    cfg: &HeuristicConfig,
) -> Result<FlowNetwork, McmfError> {
    let n = g.num_vertices();
    let sink = 2 * n;
    let mut net = FlowNetwork::new(sink + 1, SplitGraph::in_node(f), sink)?;
    for u in 0..n {
        let (a, b) = (SplitGraph::in_node(u), SplitGraph::out_node(u));
        if u == f {
            net.add_arc(a, b, k as i64, 0)?;
        } else if g.is_functional(u) || state.spare_used(u) {
            net.add_arc(a, b, 1, 0)?;
        } else {
            let cost = cfg.power(k, || format!("split edge of `{}`", g.name(u)))?;
            net.add_arc(a, b, 1, cost)?;
        }
    }
    for &(u, v) in g.edges() {
        if v == f {
            continue;
        }
        let cost = if state.is_connection(u, v) {
            0
        } else {
            cfg.power(state.tc(v), || {
                format!("edge `{}` -> `{}`", g.name(u), g.name(v))
            })?
        };
        net.add_arc(SplitGraph::out_node(u), SplitGraph::in_node(v), 1, cost)?;
    }
    for s in g.spares() {
        net.add_arc(SplitGraph::out_node(s), sink, 1, 0)?;
    }
    Ok(net)
}

fn route(
    f: usize,
    g: &RelGraph,
    k: usize,
    state: &PartialState,
    cfg: &HeuristicConfig,
) -> Result<Vec<Vec<usize>>, McmfError> {
    let net = build_network_for(f, g, k, state, cfg)?;
    let flow = min_cost_max_flow(&net)?;
    if (flow.value as usize) < k {
        return Err(McmfError::InsufficientPaths {
            ftsv: g.name(f).to_owned(),
            found: flow.value as usize,
            k,
        });
    }
    let paths = decompose_paths(&net, &flow).expect("min-cost flow output is acyclic");
    Ok(paths
        .into_iter()
        .map(|p| {
            // drop the sink and every out-node: [f, v, ..., s]
            p.nodes[..p.nodes.len() - 1]
                .iter()
                .filter(|&&x| !SplitGraph::is_out_node(x))
                .map(|&x| SplitGraph::tsv_of(x))
                .collect()
        })
        .collect())
}

/// Routes every f-TSV in input order, then perturbs.
pub fn generate(
    g: &RelGraph,
    k: usize,
    cfg: &HeuristicConfig,
) -> Result<ToleranceStructure, McmfError> {
    cfg.validate()?;
    if k == 0 {
        return Ok(ToleranceStructure::empty(g));
    }
    let mut state = PartialState::new(g.num_f(), g.num_vertices());
    for f in g.functional() {
        let paths = route(f, g, k, &state, cfg)?;
        state.add(f, paths);
    }
    Ok(perturb(&state.to_structure(k), g, cfg))
}

/// Repeatedly re-routes a random f-TSV against the others' paths and keeps
/// the best structure seen by `(max_mux_ports, used_stsvs)`. Stops once the
/// port count has not dropped for `perturb_threshold` iterations in a row.
/// A re-route that fails (cost cap) is discarded.
pub fn perturb(
    st: &ToleranceStructure,
    g: &RelGraph,
    cfg: &HeuristicConfig,
) -> ToleranceStructure {
    let k = st.k();
    if cfg.perturb_threshold == 0 || k == 0 || st.num_f() == 0 {
        return st.clone();
    }
    let mut state = PartialState::from_structure(st);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = st.clone();
    let mut best_key = state.key();
    let mut best_ports = best_key.0;
    let mut stale = 0;
    while stale < cfg.perturb_threshold {
        let f = rng.random_range(0..st.num_f() as u64) as usize;
        let old = state.remove(f);
        match route(f, g, k, &state, cfg) {
            Ok(paths) => state.add(f, paths),
            Err(_) => {
                state.add(f, old);
                stale += 1;
                continue;
            }
        }
        let key = state.key();
        if key.0 < best_ports {
            best_ports = key.0;
            stale = 0;
        } else {
            stale += 1;
        }
        if key < best_key {
            best_key = key;
            best = state.to_structure(k);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::verify;

    #[test]
    fn single_edge() {
        let g = RelGraph::from_edges(&["f"], &["s"], &[("f", "s")]).unwrap();
        let st = generate(&g, 1, &HeuristicConfig::default()).unwrap();
        assert_eq!(st.paths_of(0), &[vec![0, 1]]);
    }

    #[test]
    fn first_network_costs() {
        let g = RelGraph::from_edges(
            &["f1", "f2"],
            &["s1", "s2"],
            &[("f1", "s1"), ("f1", "f2"), ("f2", "s2"), ("f2", "f1")],
        )
        .unwrap();
        let state = PartialState::new(2, 4);
        let net = build_network_for(0, &g, 2, &state, &HeuristicConfig::default()).unwrap();
        let arcs = net.arcs();
        // f1 split, f2 split, s1 split, s2 split
        assert_eq!((arcs[0].capacity, arcs[0].cost), (2, 0));
        assert_eq!((arcs[1].capacity, arcs[1].cost), (1, 0));
        assert_eq!(arcs[2].cost, 9);
        assert_eq!(arcs[3].cost, 9);
        // replace edges into f1 are dropped
        assert_eq!(arcs.len(), 4 + 3 + 2);
        assert!(arcs[4..7].iter().all(|a| a.cost == 1));
    }

    #[test]
    fn state_add_remove() {
        let mut s = PartialState::new(2, 4);
        s.add(0, vec![vec![0, 2], vec![0, 1, 3]]);
        s.add(1, vec![vec![1, 3], vec![1, 2]]);
        assert_eq!(s.tc_from_scratch(), vec![0, 1, 2, 1]);
        assert_eq!(s.key(), (2, 2));
        s.remove(0);
        assert_eq!(s.tc(2), 1);
        assert_eq!(s.tc_from_scratch(), vec![0, 0, 1, 1]);
        assert!(!s.is_connection(0, 2));
    }

    #[test]
    fn exponent_cap_is_enforced() {
        let cfg = HeuristicConfig {
            exponent_cap: 1,
            ..HeuristicConfig::default()
        };
        let g = RelGraph::from_edges(&["f"], &["s1", "s2"], &[("f", "s1"), ("f", "s2")]).unwrap();
        assert!(matches!(generate(&g, 2, &cfg), Err(McmfError::CostOverflow(_))));
        assert!(HeuristicConfig { c: 1, ..cfg }.validate().is_err());
        assert!(HeuristicConfig { c: 10, exponent_cap: 40, ..cfg }.validate().is_err());
    }

    #[test]
    fn generate_is_verified() {
        let g = RelGraph::from_edges(
            &["f1", "f2", "f3"],
            &["s1", "s2"],
            &[
                ("f1", "s1"),
                ("f1", "f2"),
                ("f2", "s2"),
                ("f2", "s1"),
                ("f3", "f1"),
                ("f3", "s2"),
            ],
        )
        .unwrap();
        let st = generate(&g, 2, &HeuristicConfig::default()).unwrap();
        assert!(verify(&st, &g, 2).accepted);
    }
}
