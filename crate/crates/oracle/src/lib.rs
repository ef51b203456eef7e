//! Exhaustive reference implementations for tiny inputs. Nothing here shares
//! code with the library's flow engines; every answer comes from plain
//! enumeration.

use tsvft::flow::FlowNetwork;
use tsvft::relgraph::RelGraph;
use tsvft::structure::ToleranceStructure;

/// Every simple path from `f` over `edges` that ends at a spare, as vertex
/// lists `[f, ..., s]`. Spares are terminal and `f` is never re-entered.
pub fn simple_paths(num_vertices: usize, num_f: usize, edges: &[(usize, usize)], f: usize) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); num_vertices];
    for &(u, v) in edges {
        succ[u].push(v);
    }
    let mut out = Vec::new();
    let mut path = vec![f];
    let mut on = vec![false; num_vertices];
    on[f] = true;
    fn walk(
        u: usize,
        num_f: usize,
        succ: &[Vec<usize>],
        path: &mut Vec<usize>,
        on: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        for &v in &succ[u] {
            if on[v] {
                continue;
            }
            path.push(v);
            if v >= num_f {
                out.push(path.clone());
            } else {
                on[v] = true;
                walk(v, num_f, succ, path, on, out);
                on[v] = false;
            }
            path.pop();
        }
    }
    walk(f, num_f, &succ, &mut path, &mut on, &mut out);
    out
}

/// Largest family of paths from `paths` that share no vertex besides their
/// common first one.
fn max_disjoint(paths: &[Vec<usize>], num_vertices: usize, cap: usize) -> usize {
    fn go(i: usize, paths: &[Vec<usize>], used: &mut [bool], have: usize, best: &mut usize, cap: usize) {
        if have > *best {
            *best = have;
        }
        if *best >= cap || i == paths.len() || have + (paths.len() - i) <= *best {
            return;
        }
        let p = &paths[i];
        if p[1..].iter().all(|&v| !used[v]) {
            for &v in &p[1..] {
                used[v] = true;
            }
            go(i + 1, paths, used, have + 1, best, cap);
            for &v in &p[1..] {
                used[v] = false;
            }
        }
        go(i + 1, paths, used, have, best, cap);
    }
    let mut used = vec![false; num_vertices];
    let mut best = 0;
    go(0, paths, &mut used, 0, &mut best, cap);
    best
}

/// `Nd(f)` by enumerating path systems.
pub fn nd_by_paths(g: &RelGraph, f: usize) -> usize {
    let paths = simple_paths(g.num_vertices(), g.num_f(), g.edges(), f);
    max_disjoint(&paths, g.num_vertices(), usize::MAX)
}

/// `K` by enumerating path systems.
pub fn k_by_paths(g: &RelGraph) -> usize {
    g.functional().map(|f| nd_by_paths(g, f)).min().unwrap_or(0)
}

/// `Nd(f)` as the smallest vertex set (not containing `f`, spares allowed)
/// whose removal leaves no spare reachable from `f`.
pub fn nd_by_cut(g: &RelGraph, f: usize) -> usize {
    let n = g.num_vertices();
    let others: Vec<usize> = (0..n).filter(|&v| v != f).collect();
    let mut best = others.len();
    for mask in 0u64..1 << others.len() {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let mut removed = vec![false; n];
        for (i, &v) in others.iter().enumerate() {
            removed[v] = mask >> i & 1 == 1;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![f];
        seen[f] = true;
        let mut hit = false;
        while let Some(u) = stack.pop() {
            if g.is_spare(u) {
                hit = true;
                break;
            }
            for &v in g.successors(u) {
                if !seen[v] && !removed[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if !hit {
            best = size;
        }
    }
    best
}

/// Minimum `s`-`t` cut capacity by enumerating every source side.
pub fn min_cut(net: &FlowNetwork) -> i64 {
    let n = net.num_nodes();
    let (s, t) = (net.source(), net.sink());
    let free: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    let mut best = i64::MAX;
    for mask in 0u64..1 << free.len() {
        let mut side = vec![false; n];
        side[s] = true;
        for (i, &v) in free.iter().enumerate() {
            side[v] = mask >> i & 1 == 1;
        }
        let cut: i64 = net
            .arcs()
            .iter()
            .filter(|a| side[a.from] && !side[a.to])
            .map(|a| a.capacity)
            .sum();
        best = best.min(cut);
    }
    best
}

/// `(value, cost)` of the cheapest maximum flow, by enumerating every
/// integral arc assignment.
pub fn min_cost_max_flow(net: &FlowNetwork) -> (i64, i64) {
    let n = net.num_nodes();
    let arcs = net.arcs();
    let (s, t) = (net.source(), net.sink());
    let mut flow = vec![0i64; arcs.len()];
    let mut best: Option<(i64, i64)> = None;
    fn go(
        i: usize,
        arcs: &[tsvft::flow::Arc],
        flow: &mut [i64],
        n: usize,
        s: usize,
        t: usize,
        best: &mut Option<(i64, i64)>,
    ) {
        if i == arcs.len() {
            let mut bal = vec![0i64; n];
            for (a, &x) in arcs.iter().zip(flow.iter()) {
                bal[a.from] -= x;
                bal[a.to] += x;
            }
            if (0..n).any(|v| v != s && v != t && bal[v] != 0) {
                return;
            }
            let value = bal[t];
            let cost: i64 = arcs.iter().zip(flow.iter()).map(|(a, &x)| a.cost * x).sum();
            let better = match *best {
                None => true,
                Some((bv, bc)) => value > bv || (value == bv && cost < bc),
            };
            if better {
                *best = Some((value, cost));
            }
            return;
        }
        for x in 0..=arcs[i].capacity {
            flow[i] = x;
            go(i + 1, arcs, flow, n, s, t, best);
        }
        flow[i] = 0;
    }
    go(0, arcs, &mut flow, n, s, t, &mut best);
    best.unwrap_or((0, 0))
}

/// Whether every f-TSV has `k` disjoint paths to distinct spares over
/// `edges` alone.
pub fn feasible_with(g: &RelGraph, edges: &[(usize, usize)], k: usize) -> bool {
    g.functional().all(|f| {
        let paths = simple_paths(g.num_vertices(), g.num_f(), edges, f);
        max_disjoint(&paths, g.num_vertices(), k) >= k
    })
}

/// Smallest `max indegree + used spares` over every edge subset that admits
/// `k` disjoint paths per f-TSV; `None` if no subset does.
pub fn optimum_objective(g: &RelGraph, k: usize) -> Option<usize> {
    let all = g.edges();
    assert!(all.len() <= 20, "exhaustive search is limited to 20 edges");
    let n = g.num_vertices();
    let mut best: Option<usize> = None;
    let mut chosen = Vec::with_capacity(all.len());
    for mask in 0u32..1 << all.len() {
        chosen.clear();
        let mut indeg = vec![0usize; n];
        for (i, &e) in all.iter().enumerate() {
            if mask >> i & 1 == 1 {
                chosen.push(e);
                indeg[e.1] += 1;
            }
        }
        let value = indeg.iter().copied().max().unwrap_or(0)
            + g.spares().filter(|&s| indeg[s] > 0).count();
        if best.is_some_and(|b| value >= b) {
            continue;
        }
        if feasible_with(g, &chosen, k) {
            best = Some(value);
        }
    }
    best
}

/// Repairability by backtracking over each faulty f-TSV's simple paths in the
/// structure's connection graph.
pub fn repairable(st: &ToleranceStructure, faults: &[usize]) -> bool {
    let n = st.num_vertices();
    let mut faulty = vec![false; n];
    for &v in faults {
        faulty[v] = true;
    }
    // faulty TSVs lose their incoming connections, so they can only start
    // their own path
    let conns: Vec<(usize, usize)> = st.connections().into_iter().filter(|&(_, v)| !faulty[v]).collect();
    let faulty_f: Vec<usize> = (0..st.num_f()).filter(|&f| faulty[f]).collect();
    let options: Vec<Vec<Vec<usize>>> = faulty_f
        .iter()
        .map(|&f| simple_paths(n, st.num_f(), &conns, f))
        .collect();
    fn assign(i: usize, options: &[Vec<Vec<usize>>], taken: &mut [bool]) -> bool {
        if i == options.len() {
            return true;
        }
        for p in &options[i] {
            if p.iter().all(|&v| !taken[v]) {
                for &v in p {
                    taken[v] = true;
                }
                if assign(i + 1, options, taken) {
                    return true;
                }
                for &v in p {
                    taken[v] = false;
                }
            }
        }
        false
    }
    let mut taken = vec![false; n];
    assign(0, &options, &mut taken)
}

/// Minimum cut weight over every split with both sides in `lo..=hi`.
pub fn min_bisection(n: usize, edges: &[(usize, usize, u64)], lo: usize, hi: usize) -> u64 {
    let mut best = u64::MAX;
    for mask in 0u64..1 << n {
        let left = mask.count_ones() as usize;
        if !(lo..=hi).contains(&left) || !(lo..=hi).contains(&(n - left)) {
            continue;
        }
        let cut = edges
            .iter()
            .filter(|&&(u, v, _)| (mask >> u & 1) != (mask >> v & 1))
            .map(|e| e.2)
            .sum();
        best = best.min(cut);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cut_and_paths_agree_on_a_diamond() {
        let g = RelGraph::from_edges(
            &["f1", "f2", "f3"],
            &["s1", "s2"],
            &[("f1", "f2"), ("f1", "f3"), ("f2", "s1"), ("f3", "s1"), ("f3", "s2")],
        )
        .unwrap();
        assert_eq!(nd_by_paths(&g, 0), 2);
        assert_eq!(nd_by_cut(&g, 0), 2);
        assert_eq!(nd_by_paths(&g, 1), 1);
        assert_eq!(k_by_paths(&g), 1);
    }

    #[test]
    fn single_edge_objective() {
        let g = RelGraph::from_edges(&["f"], &["s"], &[("f", "s")]).unwrap();
        assert_eq!(optimum_objective(&g, 1), Some(2));
        assert_eq!(optimum_objective(&g, 2), None);
    }
}
