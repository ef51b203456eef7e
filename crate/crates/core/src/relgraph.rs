//! Replaceable-relation graphs over functional and spare TSVs.
//!
//! A [`RelGraph`] stores functional TSVs first (indices `0..m`) and spare TSVs
//! after them (indices `m..m+n`). Every edge `(u, v)` reads "`u` can be
//! replaced by `v`" and is always sourced at a functional TSV.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{PointIndex, Rect};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate TSV id `{0}`")]
    DuplicateId(String),
    #[error("edge sourced at spare TSV `{0}`")]
    EdgeFromSpare(String),
    #[error("edge endpoint `{0}` is not a declared TSV")]
    DanglingEndpoint(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("a relation graph needs at least one functional TSV")]
    NoFunctional,
    #[error("negative margin {0}")]
    NegativeMargin(f64),
    #[error("bounding box of `{0}` is inverted")]
    InvertedBox(String),
    #[error("functional TSV `{0}` lies outside its own bounding box")]
    OutsideOwnBox(String),
}

/// Directed replaceable-relation graph `G(V, E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelGraph {
    names: Vec<String>,
    num_f: usize,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl RelGraph {
    /// Builds a graph from string ids. Duplicate edges are dropped; id order
    /// is preserved.
    pub fn from_edges<S: AsRef<str>>(
        f_ids: &[S],
        s_ids: &[S],
        edges: &[(S, S)],
    ) -> Result<Self, GraphError> {
        let names: Vec<String> = f_ids
            .iter()
            .chain(s_ids.iter())
            .map(|s| s.as_ref().to_owned())
            .collect();
        let index = build_index(&names)?;
        let mut indexed = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            let ui = *index
                .get(u)
                .ok_or_else(|| GraphError::DanglingEndpoint(u.to_owned()))?;
            let vi = *index
                .get(v)
                .ok_or_else(|| GraphError::DanglingEndpoint(v.to_owned()))?;
            indexed.push((ui, vi));
        }
        Self::assemble(names, f_ids.len(), index, indexed)
    }

    /// Builds a graph from already-indexed edges (`0..f_names.len()` are
    /// functional, the rest spare).
    pub fn from_indexed(
        f_names: Vec<String>,
        s_names: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let num_f = f_names.len();
        let mut names = f_names;
        names.extend(s_names);
        let index = build_index(&names)?;
        let total = names.len();
        let edges: Vec<_> = edges.into_iter().collect();
        for &(u, v) in &edges {
            for w in [u, v] {
                if w >= total {
                    return Err(GraphError::DanglingEndpoint(format!("#{w}")));
                }
            }
        }
        Self::assemble(names, num_f, index, edges)
    }

    fn assemble(
        names: Vec<String>,
        num_f: usize,
        index: HashMap<String, usize>,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        if num_f == 0 {
            return Err(GraphError::NoFunctional);
        }
        for &(u, v) in &edges {
            if u >= num_f {
                return Err(GraphError::EdgeFromSpare(names[u].clone()));
            }
            if u == v {
                return Err(GraphError::SelfLoop(names[u].clone()));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let n = names.len();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for &(u, v) in &edges {
            succ[u].push(v);
            pred[v].push(u);
        }
        for p in &mut pred {
            p.sort_unstable();
        }
        Ok(Self {
            names,
            num_f,
            index,
            edges,
            succ,
            pred,
        })
    }

    /// Derives the graph from a physical layout: `f -> v` iff `v` lies in the
    /// closed bounding box of `f` expanded by `margin` on every side.
    pub fn from_layout(group: &LayoutGroup) -> Result<Self, GraphError> {
        group.validate()?;
        let mut points = Vec::with_capacity(group.f_tsvs.len() + group.s_sites.len());
        points.extend(group.f_tsvs.iter().map(|f| (f.x, f.y)));
        points.extend(group.s_sites.iter().map(|s| (s.x, s.y)));
        let index = PointIndex::new(&points);
        let mut edges = Vec::new();
        let mut hits = Vec::new();
        for (i, f) in group.f_tsvs.iter().enumerate() {
            hits.clear();
            index.query(&f.bbox.expanded(group.margin), &mut hits);
            edges.extend(hits.iter().filter(|&&v| v != i).map(|&v| (i, v)));
        }
        Self::from_indexed(
            group.f_tsvs.iter().map(|f| f.id.clone()).collect(),
            group.s_sites.iter().map(|s| s.id.clone()).collect(),
            edges,
        )
    }

    pub fn num_f(&self) -> usize {
        self.num_f
    }

    pub fn num_s(&self) -> usize {
        self.names.len() - self.num_f
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_functional(&self, v: usize) -> bool {
        v < self.num_f
    }

    pub fn is_spare(&self, v: usize) -> bool {
        v >= self.num_f && v < self.names.len()
    }

    pub fn functional(&self) -> std::ops::Range<usize> {
        0..self.num_f
    }

    pub fn spares(&self) -> std::ops::Range<usize> {
        self.num_f..self.names.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Edges sorted by `(source, target)` index.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn successors(&self, u: usize) -> &[usize] {
        &self.succ[u]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.succ[u].len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.pred[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.succ.len() && self.succ[u].binary_search(&v).is_ok()
    }

    /// Same vertex set, different edge set.
    pub fn with_edges(
        &self,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        Self::assemble(
            self.names.clone(),
            self.num_f,
            self.index.clone(),
            edges.into_iter().collect(),
        )
    }

    /// Keeps every functional TSV and only the listed spares (in the given
    /// order); edges into dropped spares disappear.
    pub fn restrict_spares(&self, keep: &[usize]) -> Self {
        let mut remap = vec![usize::MAX; self.names.len()];
        for f in self.functional() {
            remap[f] = f;
        }
        for (j, &s) in keep.iter().enumerate() {
            remap[s] = self.num_f + j;
        }
        let f_names = self.names[..self.num_f].to_vec();
        let s_names = keep.iter().map(|&s| self.names[s].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|&&(_, v)| remap[v] != usize::MAX)
            .map(|&(u, v)| (u, remap[v]));
        Self::from_indexed(f_names, s_names, edges).expect("restriction of a valid graph")
    }

    /// Vertex-split transform `G'`.
    pub fn split(&self) -> SplitGraph {
        SplitGraph {
            names: self.names.clone(),
            num_f: self.num_f,
            replace_edges: self
                .edges
                .iter()
                .map(|&(u, v)| (SplitGraph::out_node(u), SplitGraph::in_node(v)))
                .collect(),
        }
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            f_tsvs: self.names[..self.num_f].to_vec(),
            s_tsvs: self.names[self.num_f..].to_vec(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| [self.names[u].clone(), self.names[v].clone()])
                .collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self, GraphError> {
        let edges: Vec<(&str, &str)> = file
            .edges
            .iter()
            .map(|[u, v]| (u.as_str(), v.as_str()))
            .collect();
        let f: Vec<&str> = file.f_tsvs.iter().map(String::as_str).collect();
        let s: Vec<&str> = file.s_tsvs.iter().map(String::as_str).collect();
        Self::from_edges(&f, &s, &edges)
    }

    /// Graphviz rendering: functional TSVs as boxes, spares as circles.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph relgraph {\n  rankdir=LR;\n");
        for (v, name) in self.names.iter().enumerate() {
            let shape = if self.is_functional(v) { "box" } else { "circle" };
            let _ = writeln!(out, "  \"{}\" [shape={shape}];", escape(name));
        }
        for &(u, v) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                escape(&self.names[u]),
                escape(&self.names[v])
            );
        }
        out.push_str("}\n");
        out
    }
}

fn build_index(names: &[String]) -> Result<HashMap<String, usize>, GraphError> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(GraphError::DuplicateId(name.clone()));
        }
    }
    Ok(index)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// On-disk graph format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub f_tsvs: Vec<String>,
    pub s_tsvs: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

/// Vertex-split graph `G'`. TSV `u` owns the in-node `2u` and the out-node
/// `2u + 1`; the split edge is `(2u, 2u + 1)` and every relation edge `(u, v)`
/// becomes `(2u + 1, 2v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitGraph {
    names: Vec<String>,
    num_f: usize,
    replace_edges: Vec<(usize, usize)>,
}

impl SplitGraph {
    pub const fn in_node(tsv: usize) -> usize {
        2 * tsv
    }

    pub const fn out_node(tsv: usize) -> usize {
        2 * tsv + 1
    }

    pub const fn tsv_of(node: usize) -> usize {
        node / 2
    }

    pub const fn is_out_node(node: usize) -> bool {
        node % 2 == 1
    }

    pub fn num_tsvs(&self) -> usize {
        self.names.len()
    }

    pub fn num_f(&self) -> usize {
        self.num_f
    }

    pub fn num_s(&self) -> usize {
        self.names.len() - self.num_f
    }

    pub fn num_nodes(&self) -> usize {
        2 * self.names.len()
    }

    pub fn is_functional(&self, tsv: usize) -> bool {
        tsv < self.num_f
    }

    pub fn name(&self, tsv: usize) -> &str {
        &self.names[tsv]
    }

    /// `E1'`, one per TSV in input order.
    pub fn split_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.names.len()).map(|u| (Self::in_node(u), Self::out_node(u)))
    }

    /// `E2'`, in the relation graph's edge order.
    pub fn replace_edges(&self) -> &[(usize, usize)] {
        &self.replace_edges
    }

    pub fn num_edges(&self) -> usize {
        self.names.len() + self.replace_edges.len()
    }

    /// All of `E'`: split edges first, then replace edges.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.split_edges().chain(self.replace_edges.iter().copied())
    }

    /// Collapses every split pair back into its TSV, recovering the relation
    /// edges.
    pub fn collapse(&self) -> Vec<(usize, usize)> {
        self.replace_edges
            .iter()
            .map(|&(a, b)| (Self::tsv_of(a), Self::tsv_of(b)))
            .collect()
    }

    /// Rebuilds the relation graph this split graph came from.
    pub fn to_relgraph(&self) -> RelGraph {
        RelGraph::from_indexed(
            self.names[..self.num_f].to_vec(),
            self.names[self.num_f..].to_vec(),
            self.collapse(),
        )
        .expect("split graph of a valid relation graph")
    }

    pub fn node_label(&self, node: usize) -> String {
        let name = &self.names[Self::tsv_of(node)];
        if Self::is_out_node(node) {
            format!("{name}'")
        } else {
            name.clone()
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph splitgraph {\n  rankdir=LR;\n");
        for node in 0..self.num_nodes() {
            let shape = if self.is_functional(Self::tsv_of(node)) {
                "box"
            } else {
                "circle"
            };
            let _ = writeln!(
                out,
                "  \"{}\" [shape={shape}];",
                escape(&self.node_label(node))
            );
        }
        for (a, b) in self.split_edges() {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [style=dashed];",
                escape(&self.node_label(a)),
                escape(&self.node_label(b))
            );
        }
        for &(a, b) in &self.replace_edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                escape(&self.node_label(a)),
                escape(&self.node_label(b))
            );
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTsvPlacement {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub bbox: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpareSite {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// Physical description of one TSV group, coordinates in micrometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutGroup {
    pub f_tsvs: Vec<FTsvPlacement>,
    pub s_sites: Vec<SpareSite>,
    #[serde(default)]
    pub margin: f64,
}

impl LayoutGroup {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.margin < 0.0 || self.margin.is_nan() {
            return Err(GraphError::NegativeMargin(self.margin));
        }
        let mut seen = HashSet::new();
        for f in &self.f_tsvs {
            if !f.bbox.is_valid() {
                return Err(GraphError::InvertedBox(f.id.clone()));
            }
            if !f.bbox.contains(f.x, f.y) {
                return Err(GraphError::OutsideOwnBox(f.id.clone()));
            }
            if !seen.insert(f.id.as_str()) {
                return Err(GraphError::DuplicateId(f.id.clone()));
            }
        }
        for s in &self.s_sites {
            if !seen.insert(s.id.as_str()) {
                return Err(GraphError::DuplicateId(s.id.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Rect {
        Rect {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }

    #[test]
    fn single_vertex_graph() {
        let g = RelGraph::from_edges::<&str>(&["f1"], &[], &[]).unwrap();
        assert_eq!(g.num_f(), 1);
        assert_eq!(g.num_s(), 0);
        assert_eq!(g.num_edges(), 0);
        let sg = g.split();
        assert_eq!(sg.split_edges().count(), 1);
        assert!(sg.replace_edges().is_empty());
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            RelGraph::from_edges(&["f1"], &["s1"], &[("s1", "f1")]),
            Err(GraphError::EdgeFromSpare("s1".into()))
        );
        assert_eq!(
            RelGraph::from_edges(&["f1"], &["s1"], &[("f1", "s9")]),
            Err(GraphError::DanglingEndpoint("s9".into()))
        );
        assert_eq!(
            RelGraph::from_edges(&["f1", "f1"], &[], &[]),
            Err(GraphError::DuplicateId("f1".into()))
        );
        assert_eq!(
            RelGraph::from_edges(&["f1"], &["f1"], &[]),
            Err(GraphError::DuplicateId("f1".into()))
        );
        assert_eq!(
            RelGraph::from_edges::<&str>(&[], &["s1"], &[]),
            Err(GraphError::NoFunctional)
        );
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = RelGraph::from_edges(&["f1"], &["s1"], &[("f1", "s1"), ("f1", "s1")]).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn boundary_and_margin() {
        let group = |margin: f64, sx: f64| LayoutGroup {
            f_tsvs: vec![FTsvPlacement {
                id: "f".into(),
                x: 5.0,
                y: 5.0,
                bbox: rect(0.0, 0.0, 10.0, 10.0),
            }],
            s_sites: vec![SpareSite {
                id: "s".into(),
                x: sx,
                y: 5.0,
            }],
            margin,
        };
        // exactly on the boundary
        assert_eq!(RelGraph::from_layout(&group(0.0, 10.0)).unwrap().num_edges(), 1);
        // 3 um outside
        assert_eq!(RelGraph::from_layout(&group(5.0, 13.0)).unwrap().num_edges(), 1);
        assert_eq!(RelGraph::from_layout(&group(2.0, 13.0)).unwrap().num_edges(), 0);
        assert_eq!(
            RelGraph::from_layout(&group(-1.0, 13.0)),
            Err(GraphError::NegativeMargin(-1.0))
        );
    }

    #[test]
    fn layout_validation() {
        let bad = LayoutGroup {
            f_tsvs: vec![FTsvPlacement {
                id: "f".into(),
                x: 50.0,
                y: 5.0,
                bbox: rect(0.0, 0.0, 10.0, 10.0),
            }],
            s_sites: vec![],
            margin: 0.0,
        };
        assert_eq!(
            RelGraph::from_layout(&bad),
            Err(GraphError::OutsideOwnBox("f".into()))
        );
    }

    #[test]
    fn split_numbering() {
        let g = RelGraph::from_edges(&["f1", "f2"], &["s1"], &[("f1", "f2"), ("f2", "s1")]).unwrap();
        let sg = g.split();
        assert_eq!(sg.num_nodes(), 6);
        assert_eq!(sg.replace_edges(), &[(1, 2), (3, 4)]);
        assert_eq!(sg.collapse(), g.edges());
        assert_eq!(sg.node_label(3), "f2'");
        assert!(sg.to_dot().contains("\"f2'\" -> \"s1\""));
        assert!(g.to_dot().contains("\"s1\" [shape=circle]"));
    }

    #[test]
    fn restrict_spares_drops_edges() {
        let g = RelGraph::from_edges(
            &["f1"],
            &["s1", "s2", "s3"],
            &[("f1", "s1"), ("f1", "s2"), ("f1", "s3")],
        )
        .unwrap();
        let r = g.restrict_spares(&[3]);
        assert_eq!(r.names(), &["f1".to_string(), "s3".to_string()]);
        assert_eq!(r.edges(), &[(0, 1)]);
    }
}
