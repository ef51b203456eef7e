//! Small hand-checked instances bundled with the library.

use crate::relgraph::{GraphFile, LayoutGroup, RelGraph};
use crate::structure::{StructureFile, ToleranceStructure};

const LADDER_GRAPH: &str = include_str!("../fixtures/ladder_graph.json");
const LADDER_LAYOUT: &str = include_str!("../fixtures/ladder_layout.json");
const LADDER_DIRECT: &str = include_str!("../fixtures/ladder_direct.json");
const LADDER_CHAIN: &str = include_str!("../fixtures/ladder_chain.json");
const MIXED_GRAPH: &str = include_str!("../fixtures/mixed_graph.json");
const MIXED_LISTED: &str = include_str!("../fixtures/mixed_listed.json");

fn graph(text: &str) -> RelGraph {
    let file: GraphFile = serde_json::from_str(text).expect("bundled graph parses");
    RelGraph::from_file(&file).expect("bundled graph is valid")
}

fn structure(text: &str, g: &RelGraph) -> ToleranceStructure {
    let file: StructureFile = serde_json::from_str(text).expect("bundled structure parses");
    ToleranceStructure::from_file(&file, g).expect("bundled structure matches its graph")
}

/// Four f-TSVs in a chain, two spares reachable by all of them.
pub fn ladder_graph() -> RelGraph {
    graph(LADDER_GRAPH)
}

/// A placement whose derived relation graph is [`ladder_graph`].
pub fn ladder_layout() -> LayoutGroup {
    serde_json::from_str(LADDER_LAYOUT).expect("bundled layout parses")
}

/// Every f-TSV wired straight to both spares.
pub fn ladder_direct() -> ToleranceStructure {
    structure(LADDER_DIRECT, &ladder_graph())
}

/// Chained replacement that keeps every multiplexer at three ports or fewer.
pub fn ladder_chain() -> ToleranceStructure {
    structure(LADDER_CHAIN, &ladder_graph())
}

/// Five f-TSVs, four spares (one isolated), mixed f-to-f relations.
pub fn mixed_graph() -> RelGraph {
    graph(MIXED_GRAPH)
}

/// A 2-fault structure on [`mixed_graph`] using three spares.
pub fn mixed_listed() -> ToleranceStructure {
    structure(MIXED_LISTED, &mixed_graph())
}

pub fn raw_ladder_graph() -> &'static str {
    LADDER_GRAPH
}

pub fn raw_mixed_graph() -> &'static str {
    MIXED_GRAPH
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::verify;

    #[test]
    fn bundled_fixtures_load_and_verify() {
        let g = ladder_graph();
        assert_eq!((g.num_f(), g.num_s(), g.num_edges()), (4, 2, 13));
        assert_eq!(RelGraph::from_layout(&ladder_layout()).unwrap(), g);
        for st in [ladder_direct(), ladder_chain()] {
            assert!(verify(&st, &g, 2).accepted);
        }
        assert_eq!(ladder_chain().metrics().max_mux_ports, 3);
        assert_eq!(ladder_direct().metrics().indegree[4], 4);
        let h = mixed_graph();
        assert_eq!((h.num_f(), h.num_s(), h.num_edges()), (5, 4, 11));
        let st = mixed_listed();
        assert!(verify(&st, &h, 2).accepted);
        assert_eq!(st.metrics().used_stsvs, 3);
    }
}
