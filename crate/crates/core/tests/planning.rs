use std::collections::HashSet;

use tsvft::gen::{synth_instance, SynthSpec};
use tsvft::planner::{plan, plan_fixed_k, Method, PlanError, PlanInstance, PlanParams, PlanResult};
use tsvft::relgraph::RelGraph;
use tsvft::structure::{verify, ToleranceStructure};
use tsvft::yieldmodel::{binomial_bound, tsv_yield};

fn instance(n: usize, seed: u64, params: PlanParams) -> PlanInstance {
    synth_instance(&SynthSpec { n_ftsv: n, seed, params, ..Default::default() }).unwrap()
}

fn check(inst: &PlanInstance, res: &PlanResult) {
    let mut seen = HashSet::new();
    let mut all_f = Vec::new();
    for g in &res.groups {
        for s in &g.stsvs {
            assert!(seen.insert(s.clone()), "site {s} allocated twice");
        }
        all_f.extend(g.f_tsvs.iter().cloned());
        // rebuild the group graph from the layout over the allocated sites
        let f_idx: Vec<usize> = g.f_tsvs.iter().map(|id| inst.f_tsvs.iter().position(|f| &f.id == id).unwrap()).collect();
        let s_idx: Vec<usize> = g.stsvs.iter().map(|id| inst.s_sites.iter().position(|s| &s.id == id).unwrap()).collect();
        let layout = tsvft::relgraph::LayoutGroup {
            f_tsvs: f_idx.iter().map(|&i| inst.f_tsvs[i].clone()).collect(),
            s_sites: s_idx.iter().map(|&i| inst.s_sites[i].clone()).collect(),
            margin: inst.params.margin_um,
        };
        let rg = RelGraph::from_layout(&layout).unwrap();
        let st = ToleranceStructure::from_file(&g.structure, &rg).unwrap();
        assert!(verify(&st, &rg, g.k_used).accepted, "group {}", g.id);
        assert_eq!(st.metrics().used_stsvs, g.metrics.used_stsvs);
        if let Some(cap) = inst.params.kcap {
            assert!(g.k_used <= cap);
        }
        let want = binomial_bound(g.f_tsvs.len() + g.stsvs.len(), g.k_used, inst.params.p);
        assert!((want - g.group_yield).abs() < 1e-12);
    }
    all_f.sort();
    let mut ids: Vec<String> = inst.f_tsvs.iter().map(|f| f.id.clone()).collect();
    ids.sort();
    assert_eq!(all_f, ids);
    let t = &res.totals;
    assert_eq!(t.num_groups, res.groups.len());
    assert_eq!(t.total_stsvs, res.groups.iter().map(|g| g.stsvs.len()).sum::<usize>());
    assert_eq!(t.max_mux_ports, res.groups.iter().map(|g| g.metrics.max_mux_ports).max().unwrap());
    let ys: Vec<f64> = res.groups.iter().map(|g| g.group_yield).collect();
    assert_eq!(t.tsv_yield, tsv_yield(&ys));
    assert!(t.tsv_yield >= inst.params.target_yield);
}

#[test]
fn adaptive_plan_meets_target() {
    let params = PlanParams { kcap: Some(3), ..Default::default() };
    let inst = instance(120, 4, params);
    let res = plan(&inst).unwrap();
    check(&inst, &res);
    assert!(res.groups.iter().all(|g| g.k_used >= 1));
    assert_eq!(plan(&inst).unwrap(), res);
}

#[test]
fn tight_target_forces_splits() {
    let params = PlanParams { kcap: Some(1), target_yield: 0.999, p: 0.001, ..Default::default() };
    let inst = instance(60, 9, params);
    let res = plan(&inst).unwrap();
    check(&inst, &res);
    assert!(res.totals.num_groups > 1);
    assert_eq!(res.iterations + 1, res.totals.num_groups);
}

#[test]
fn exact_engine_plans_small_instances() {
    let params = PlanParams { kcap: Some(2), method: Method::Ilp, ilp_timeout_s: 5.0, ..Default::default() };
    let inst = instance(8, 2, params);
    let res = plan(&inst).unwrap();
    check(&inst, &res);
    assert!(res.groups.iter().all(|g| g.engine == "ilp" || g.engine == "ilp_timeout_mcmf"));
}

#[test]
fn fixed_k_baseline_allocates_exactly_k() {
    let inst = instance(40, 3, PlanParams::default());
    let res = plan_fixed_k(&inst, 2).unwrap();
    check(&inst, &res);
    assert!(res.groups.iter().all(|g| g.stsvs.len() == 2 && g.k_used == 2));
}

#[test]
fn unreachable_targets_are_infeasible() {
    let inst = instance(20, 1, PlanParams { target_yield: 1.0, ..Default::default() });
    assert!(matches!(plan(&inst), Err(PlanError::Infeasible { .. })));

    let mut bare = instance(20, 1, PlanParams::default());
    bare.s_sites.clear();
    assert!(matches!(plan(&bare), Err(PlanError::Infeasible { .. })));
    assert!(matches!(plan_fixed_k(&bare, 1), Err(PlanError::Infeasible { .. })));

    let flat = synth_instance(&SynthSpec { n_ftsv: 20, seed: 1, bbox_scale: 0.0, ..Default::default() }).unwrap();
    assert!(matches!(plan(&flat), Err(PlanError::Infeasible { .. })));
}

#[test]
fn loose_target_keeps_one_group() {
    let inst = instance(30, 5, PlanParams { target_yield: 0.9, ..Default::default() });
    let res = plan(&inst).unwrap();
    assert_eq!(res.totals.num_groups, 1);
    assert_eq!(res.iterations, 0);
}

#[test]
fn invalid_parameters_are_rejected() {
    let inst = instance(10, 1, PlanParams { kcap: Some(0), ..Default::default() });
    assert!(matches!(plan(&inst), Err(PlanError::Invalid(_))));
    let inst = instance(10, 1, PlanParams { target_yield: 0.0, ..Default::default() });
    assert!(matches!(plan(&inst), Err(PlanError::Invalid(_))));
}
