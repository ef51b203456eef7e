//! Disjoint replacing-path counts `Nd(f)` and the group tolerance `K`.

use rayon::prelude::*;
use thiserror::Error;

use crate::flow::{max_flow_with_limit, FlowNetwork};
use crate::relgraph::{RelGraph, SplitGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToleranceError {
    #[error("`{0}` is not a functional TSV")]
    NotFunctional(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToleranceReport {
    /// `Nd(f)` for every functional TSV, in input order.
    pub nd: Vec<usize>,
    pub k: usize,
}

/// Unit-vertex-capacity network from `f'` to a super-sink placed behind the
/// out-node of every allowed spare. Arcs into `f` are dropped since paths may
/// only share their common source.
pub(crate) fn path_network<I>(
    num_vertices: usize,
    num_f: usize,
    edges: I,
    f: usize,
    spare_allowed: impl Fn(usize) -> bool,
) -> FlowNetwork
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let sink = 2 * num_vertices;
    let mut net = FlowNetwork::new(sink + 1, SplitGraph::out_node(f), sink)
        .expect("source and sink are distinct");
    let usable = |v: usize| v != f && (v < num_f || spare_allowed(v));
    for u in 0..num_vertices {
        if usable(u) {
            net.add_arc(SplitGraph::in_node(u), SplitGraph::out_node(u), 1, 0)
                .unwrap();
        }
    }
    for (u, v) in edges {
        if usable(v) {
            net.add_arc(SplitGraph::out_node(u), SplitGraph::in_node(v), 1, 0)
                .unwrap();
        }
    }
    for s in num_f..num_vertices {
        if spare_allowed(s) {
            net.add_arc(SplitGraph::out_node(s), sink, 1, 0).unwrap();
        }
    }
    net
}

/// Number of replacing paths from `f` over an arbitrary edge subset, capped
/// at `limit` when given.
pub(crate) fn disjoint_paths_over<I>(
    num_vertices: usize,
    num_f: usize,
    edges: I,
    f: usize,
    spare_allowed: impl Fn(usize) -> bool,
    limit: Option<usize>,
) -> usize
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let net = path_network(num_vertices, num_f, edges, f, spare_allowed);
    max_flow_with_limit(&net, limit.map(|l| l as i64)).value as usize
}

/// `Nd(f)`: the maximum number of paths from `f` to spare TSVs that share no
/// vertex other than `f`.
pub fn disjoint_path_count(g: &RelGraph, f: usize) -> Result<usize, ToleranceError> {
    disjoint_path_count_capped(g, f, None)
}

pub fn disjoint_path_count_capped(
    g: &RelGraph,
    f: usize,
    cap: Option<usize>,
) -> Result<usize, ToleranceError> {
    if !g.is_functional(f) {
        let name = if f < g.num_vertices() {
            g.name(f).to_owned()
        } else {
            format!("#{f}")
        };
        return Err(ToleranceError::NotFunctional(name));
    }
    Ok(disjoint_paths_over(
        g.num_vertices(),
        g.num_f(),
        g.edges().iter().copied(),
        f,
        |_| true,
        cap,
    ))
}

/// `K = min_f Nd(f)`.
pub fn max_tolerant_faults(g: &RelGraph) -> ToleranceReport {
    max_tolerant_faults_capped(g, None)
}

/// Like [`max_tolerant_faults`] but every count is clamped to `cap`, which
/// lets each flow stop early. The resulting `k` equals `min(K, cap)`.
pub fn max_tolerant_faults_capped(g: &RelGraph, cap: Option<usize>) -> ToleranceReport {
    let nd: Vec<usize> = g
        .functional()
        .into_par_iter()
        .map(|f| disjoint_path_count_capped(g, f, cap).expect("functional index"))
        .collect();
    let k = nd.iter().copied().min().unwrap_or(0);
    ToleranceReport { nd, k }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spare() {
        let g = RelGraph::from_edges(&["f"], &["s"], &[("f", "s")]).unwrap();
        assert_eq!(disjoint_path_count(&g, 0), Ok(1));
        assert_eq!(max_tolerant_faults(&g).k, 1);
    }

    #[test]
    fn isolated_functional_gives_zero() {
        let g = RelGraph::from_edges(&["f1", "f2"], &["s"], &[("f1", "s")]).unwrap();
        let r = max_tolerant_faults(&g);
        assert_eq!(r.nd, vec![1, 0]);
        assert_eq!(r.k, 0);
    }

    #[test]
    fn spare_is_not_functional() {
        let g = RelGraph::from_edges(&["f"], &["s"], &[("f", "s")]).unwrap();
        assert!(matches!(
            disjoint_path_count(&g, 1),
            Err(ToleranceError::NotFunctional(_))
        ));
    }

    #[test]
    fn shared_intermediate_counts_once() {
        // both routes of f1 must pass through f2
        let g = RelGraph::from_edges(
            &["f1", "f2"],
            &["s1", "s2"],
            &[("f1", "f2"), ("f2", "s1"), ("f2", "s2")],
        )
        .unwrap();
        assert_eq!(disjoint_path_count(&g, 0), Ok(1));
        assert_eq!(disjoint_path_count(&g, 1), Ok(2));
    }

    #[test]
    fn complete_bipartite() {
        let f = ["f1", "f2", "f3"];
        let s = ["s1", "s2"];
        let edges: Vec<_> = f
            .iter()
            .flat_map(|a| s.iter().map(move |b| (*a, *b)))
            .collect();
        let g = RelGraph::from_edges(&f, &s, &edges).unwrap();
        assert_eq!(max_tolerant_faults(&g).k, 2);
        assert_eq!(max_tolerant_faults_capped(&g, Some(1)).k, 1);
    }
}
