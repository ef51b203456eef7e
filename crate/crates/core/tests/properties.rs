use proptest::prelude::*;

use tsvft::flow::{decompose_paths, max_flow, min_cost_max_flow, FlowNetwork};
use tsvft::gen::{random_graph, GraphSpec};
use tsvft::geom::Rect;
use tsvft::mcmfgen::{generate, perturb, HeuristicConfig, PartialState};
use tsvft::relgraph::{FTsvPlacement, LayoutGroup, RelGraph, SpareSite};
use tsvft::structure::{exhaustive_injection, verify, ToleranceStructure, DEFAULT_INJECTION_BUDGET};
use tsvft::tolerance::max_tolerant_faults;

fn network() -> impl Strategy<Value = FlowNetwork> {
    (2usize..9).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 0i64..5, 0i64..7), 0..24).prop_map(move |arcs| {
            let mut net = FlowNetwork::new(n, 0, n - 1).unwrap();
            for (u, v, c, w) in arcs {
                if u != v {
                    net.add_arc(u, v, c, w).unwrap();
                }
            }
            net
        })
    })
}

fn check_flow(net: &FlowNetwork, flows: &[i64], value: i64) {
    let mut bal = vec![0i64; net.num_nodes()];
    for (a, &x) in net.arcs().iter().zip(flows) {
        assert!((0..=a.capacity).contains(&x));
        bal[a.from] -= x;
        bal[a.to] += x;
    }
    for (v, b) in bal.iter().enumerate() {
        if v == net.source() {
            assert_eq!(*b, -value);
        } else if v == net.sink() {
            assert_eq!(*b, value);
        } else {
            assert_eq!(*b, 0);
        }
    }
}

fn graph_spec() -> impl Strategy<Value = (u64, GraphSpec)> {
    (any::<u64>(), 1usize..7, 1usize..5, 0.15f64..0.7)
        .prop_map(|(seed, max_f, max_s, density)| (seed, GraphSpec { max_f, max_s, density, max_edges: None }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn flows_are_feasible_and_decompose(net in network()) {
        let mf = max_flow(&net);
        check_flow(&net, &mf.arc_flows, mf.value);
        let mc = min_cost_max_flow(&net).unwrap();
        check_flow(&net, &mc.arc_flows, mc.value);
        prop_assert_eq!(mf.value, mc.value);
        let paths = decompose_paths(&net, &mc).unwrap();
        prop_assert_eq!(paths.len() as i64, mc.value);
        let cost: i64 = paths.iter().flat_map(|p| &p.arcs).map(|&a| net.arcs()[a].cost).sum();
        prop_assert_eq!(cost, mc.total_cost);
    }

    #[test]
    fn split_graph_round_trips((seed, spec) in graph_spec()) {
        let g = random_graph(seed, &spec);
        let sg = g.split();
        prop_assert_eq!(sg.split_edges().count(), g.num_vertices());
        prop_assert_eq!(sg.collapse(), g.edges().to_vec());
        prop_assert_eq!(sg.to_relgraph(), g.clone());
        let file = g.to_file();
        prop_assert_eq!(RelGraph::from_file(&file).unwrap(), g);
    }

    #[test]
    fn heuristic_output_is_sound((seed, spec) in graph_spec(), cfg_seed in any::<u64>()) {
        let g = random_graph(seed, &spec);
        let k = max_tolerant_faults(&g).k;
        let cfg = HeuristicConfig { seed: cfg_seed, perturb_threshold: 10, ..HeuristicConfig::default() };
        let st = generate(&g, k, &cfg).unwrap();
        prop_assert!(verify(&st, &g, k).accepted);
        let rep = exhaustive_injection(&st, k, DEFAULT_INJECTION_BUDGET).unwrap();
        prop_assert_eq!(rep.fraction, 1.0);
        let file = st.to_file(&g);
        prop_assert_eq!(ToleranceStructure::from_file(&file, &g).unwrap(), st.clone());
        // best-seen perturbation never worsens the structure it starts from
        let again = perturb(&st, &g, &cfg);
        let (a, b) = (again.metrics(), st.metrics());
        prop_assert!((a.max_mux_ports, a.used_stsvs) <= (b.max_mux_ports, b.used_stsvs));
    }

    #[test]
    fn tc_stays_consistent(
        (seed, spec) in graph_spec(),
        ops in prop::collection::vec(any::<prop::sample::Index>(), 1..30),
    ) {
        let g = random_graph(seed, &spec);
        let k = max_tolerant_faults(&g).k;
        prop_assume!(k > 0);
        let st = generate(&g, k, &HeuristicConfig { perturb_threshold: 0, ..HeuristicConfig::default() }).unwrap();
        let mut state = PartialState::from_structure(&st);
        let mut removed: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
        for op in ops {
            if removed.is_empty() || op.index(2) == 0 {
                let f = op.index(g.num_f());
                if state.routed(f).is_some() {
                    removed.push((f, state.remove(f)));
                }
            } else {
                let (f, paths) = removed.swap_remove(op.index(removed.len()));
                state.add(f, paths);
            }
            let fresh = state.tc_from_scratch();
            for v in 0..g.num_vertices() {
                prop_assert_eq!(state.tc(v), fresh[v]);
            }
        }
    }

    #[test]
    fn larger_margins_only_add_edges(
        pts in prop::collection::vec((0u8..20, 0u8..20, 0u8..6, 0u8..6), 2..10),
        sites in prop::collection::vec((0u8..20, 0u8..20), 0..8),
        m1 in 0.0f64..3.0,
        extra in 0.0f64..3.0,
    ) {
        let f_tsvs: Vec<FTsvPlacement> = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y, w, h))| {
                let (x, y) = (f64::from(x), f64::from(y));
                FTsvPlacement {
                    id: format!("f{i}"),
                    x,
                    y,
                    bbox: Rect { xmin: x, ymin: y, xmax: x + f64::from(w), ymax: y + f64::from(h) },
                }
            })
            .collect();
        let s_sites: Vec<SpareSite> = sites
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| SpareSite { id: format!("s{i}"), x: f64::from(x), y: f64::from(y) })
            .collect();
        let at = |margin| RelGraph::from_layout(&LayoutGroup { f_tsvs: f_tsvs.clone(), s_sites: s_sites.clone(), margin }).unwrap();
        let (small, large) = (at(m1), at(m1 + extra));
        for e in small.edges() {
            prop_assert!(large.edges().contains(e));
        }
    }
}
