//! Integral max-flow and min-cost-max-flow over small capacitated networks.
//!
//! Both engines are deterministic: residual adjacency is ordered by target
//! node index (then arc index), and every returned flow is acyclic so it can
//! be split into source-sink paths by [`decompose_paths`].

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("source and sink are the same node ({0})")]
    SourceIsSink(usize),
    #[error("node {node} out of range for a network with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("arc {from}->{to} has negative capacity or cost")]
    NegativeArc { from: usize, to: usize },
    #[error("path cost exceeds the 64-bit cost budget")]
    CostOverflow,
    #[error("flow is not decomposable: {0}")]
    NotDecomposable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork {
    num_nodes: usize,
    arcs: Vec<Arc>,
    source: usize,
    sink: usize,
}

impl FlowNetwork {
    pub fn new(num_nodes: usize, source: usize, sink: usize) -> Result<Self, FlowError> {
        for node in [source, sink] {
            if node >= num_nodes {
                return Err(FlowError::NodeOutOfRange { node, num_nodes });
            }
        }
        if source == sink {
            return Err(FlowError::SourceIsSink(source));
        }
        Ok(Self {
            num_nodes,
            arcs: Vec::new(),
            source,
            sink,
        })
    }

    /// Adds an arc and returns its index.
    pub fn add_arc(
        &mut self,
        from: usize,
        to: usize,
        capacity: i64,
        cost: i64,
    ) -> Result<usize, FlowError> {
        for node in [from, to] {
            if node >= self.num_nodes {
                return Err(FlowError::NodeOutOfRange {
                    node,
                    num_nodes: self.num_nodes,
                });
            }
        }
        if capacity < 0 || cost < 0 {
            return Err(FlowError::NegativeArc { from, to });
        }
        self.arcs.push(Arc {
            from,
            to,
            capacity,
            cost,
        });
        Ok(self.arcs.len() - 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    pub value: i64,
    pub arc_flows: Vec<i64>,
    pub total_cost: i64,
}

/// One source-sink path of a decomposed flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowPath {
    pub nodes: Vec<usize>,
    pub arcs: Vec<usize>,
}

/// Residual graph: residual edge `2i` is arc `i` forward, `2i + 1` backward.
struct Residual {
    start: Vec<usize>,
    adj: Vec<usize>,
    head: Vec<usize>,
    tail: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
}

impl Residual {
    fn new(net: &FlowNetwork) -> Self {
        let m = net.arcs.len();
        let mut head = Vec::with_capacity(2 * m);
        let mut tail = Vec::with_capacity(2 * m);
        let mut cap = Vec::with_capacity(2 * m);
        let mut cost = Vec::with_capacity(2 * m);
        for a in &net.arcs {
            head.extend([a.to, a.from]);
            tail.extend([a.from, a.to]);
            cap.extend([a.capacity, 0]);
            cost.extend([a.cost, -a.cost]);
        }
        let mut deg = vec![0usize; net.num_nodes + 1];
        for &t in &tail {
            deg[t + 1] += 1;
        }
        for i in 0..net.num_nodes {
            deg[i + 1] += deg[i];
        }
        let start = deg.clone();
        let mut fill = deg;
        let mut adj = vec![0usize; 2 * m];
        for e in 0..2 * m {
            let t = tail[e];
            adj[fill[t]] = e;
            fill[t] += 1;
        }
        for u in 0..net.num_nodes {
            adj[start[u]..start[u + 1]].sort_unstable_by_key(|&e| (head[e], e));
        }
        Self {
            start,
            adj,
            head,
            tail,
            cap,
            cost,
        }
    }

    fn out(&self, u: usize) -> &[usize] {
        &self.adj[self.start[u]..self.start[u + 1]]
    }

    fn push(&mut self, e: usize, amount: i64) {
        self.cap[e] -= amount;
        self.cap[e ^ 1] += amount;
    }

    fn arc_flows(&self, net: &FlowNetwork) -> Vec<i64> {
        (0..net.arcs.len()).map(|i| self.cap[2 * i + 1]).collect()
    }
}

/// Maximum integral flow (Dinic).
pub fn max_flow(net: &FlowNetwork) -> FlowResult {
    max_flow_with_limit(net, None)
}

/// Like [`max_flow`] but stops as soon as the value reaches `limit`; the
/// returned value is `min(limit, max flow)`.
pub fn max_flow_with_limit(net: &FlowNetwork, limit: Option<i64>) -> FlowResult {
    let limit = limit.unwrap_or(i64::MAX);
    let mut res = Residual::new(net);
    let n = net.num_nodes;
    let (s, t) = (net.source, net.sink);
    let mut value = 0i64;
    let mut level = vec![usize::MAX; n];
    let mut it = vec![0usize; n];
    let mut queue = VecDeque::new();
    let mut stack: Vec<usize> = Vec::new();
    'phases: while value < limit {
        level.fill(usize::MAX);
        level[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in res.out(u) {
                let v = res.head[e];
                if res.cap[e] > 0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[t] == usize::MAX {
            break;
        }
        for u in 0..n {
            it[u] = res.start[u];
        }
        loop {
            // one augmenting path in the level graph
            stack.clear();
            let mut u = s;
            let pushed = loop {
                if u == t {
                    let mut b = limit - value;
                    for &e in &stack {
                        b = b.min(res.cap[e]);
                    }
                    for &e in &stack {
                        res.push(e, b);
                    }
                    break b;
                }
                let mut advanced = false;
                while it[u] < res.start[u + 1] {
                    let e = res.adj[it[u]];
                    let v = res.head[e];
                    if res.cap[e] > 0 && level[v] == level[u] + 1 {
                        stack.push(e);
                        u = v;
                        advanced = true;
                        break;
                    }
                    it[u] += 1;
                }
                if !advanced {
                    if u == s {
                        break 0;
                    }
                    level[u] = usize::MAX;
                    let e = stack.pop().expect("non-source node has an entry edge");
                    u = res.tail[e];
                    it[u] += 1;
                }
            };
            if pushed == 0 {
                break;
            }
            value += pushed;
            if value >= limit {
                break 'phases;
            }
        }
    }
    let mut arc_flows = res.arc_flows(net);
    cancel_cycles(net, &mut arc_flows);
    let total_cost = flow_cost(net, &arc_flows).unwrap_or(i64::MAX);
    FlowResult {
        value,
        arc_flows,
        total_cost,
    }
}

/// Minimum-cost maximum flow by successive shortest paths with node
/// potentials. Among equally short augmenting paths the predecessor with the
/// lowest node index wins.
pub fn min_cost_max_flow(net: &FlowNetwork) -> Result<FlowResult, FlowError> {
    let mut res = Residual::new(net);
    let n = net.num_nodes;
    let (s, t) = (net.source, net.sink);
    const INF: i64 = i64::MAX;
    let mut phi = vec![0i64; n];
    let mut dist = vec![INF; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut value = 0i64;
    let mut total_cost = 0i64;
    loop {
        dist.fill(INF);
        parent.fill(usize::MAX);
        done.fill(false);
        heap.clear();
        dist[s] = 0;
        heap.push(Reverse((0i64, s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            done[u] = true;
            if u == t {
                break;
            }
            for &e in res.out(u) {
                if res.cap[e] <= 0 {
                    continue;
                }
                let v = res.head[e];
                if done[v] {
                    continue;
                }
                let rc = res.cost[e]
                    .checked_add(phi[u])
                    .and_then(|x| x.checked_sub(phi[v]))
                    .ok_or(FlowError::CostOverflow)?;
                debug_assert!(rc >= 0, "negative reduced cost");
                let nd = d.checked_add(rc).ok_or(FlowError::CostOverflow)?;
                let better = nd < dist[v]
                    || (nd == dist[v] && parent[v] != usize::MAX && u < res.tail[parent[v]]);
                if better {
                    if nd < dist[v] {
                        heap.push(Reverse((nd, v)));
                    }
                    dist[v] = nd;
                    parent[v] = e;
                }
            }
        }
        if dist[t] == INF {
            break;
        }
        let reach = dist[t];
        for v in 0..n {
            let step = dist[v].min(reach);
            phi[v] = phi[v].checked_add(step).ok_or(FlowError::CostOverflow)?;
        }
        let mut bottleneck = i64::MAX;
        let mut v = t;
        while v != s {
            let e = parent[v];
            bottleneck = bottleneck.min(res.cap[e]);
            v = res.tail[e];
        }
        let mut path_cost = 0i64;
        let mut v = t;
        while v != s {
            let e = parent[v];
            path_cost = path_cost
                .checked_add(res.cost[e])
                .ok_or(FlowError::CostOverflow)?;
            res.push(e, bottleneck);
            v = res.tail[e];
        }
        total_cost = path_cost
            .checked_mul(bottleneck)
            .and_then(|c| total_cost.checked_add(c))
            .ok_or(FlowError::CostOverflow)?;
        value += bottleneck;
    }
    let mut arc_flows = res.arc_flows(net);
    cancel_cycles(net, &mut arc_flows);
    let total_cost = flow_cost(net, &arc_flows)?.min(total_cost);
    Ok(FlowResult {
        value,
        arc_flows,
        total_cost,
    })
}

fn flow_cost(net: &FlowNetwork, flows: &[i64]) -> Result<i64, FlowError> {
    net.arcs
        .iter()
        .zip(flows)
        .try_fold(0i64, |acc, (a, &f)| {
            a.cost.checked_mul(f).and_then(|c| acc.checked_add(c))
        })
        .ok_or(FlowError::CostOverflow)
}

fn flow_adjacency(net: &FlowNetwork, flows: &[i64]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); net.num_nodes];
    for (i, a) in net.arcs.iter().enumerate() {
        if flows[i] > 0 {
            adj[a.from].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable_by_key(|&i| (net.arcs[i].to, i));
    }
    adj
}

/// Removes circulations from a flow without changing its value. Any cycle in
/// a min-cost flow has zero cost, so the cost is unchanged as well.
fn cancel_cycles(net: &FlowNetwork, flows: &mut [i64]) {
    'restart: loop {
        let adj = flow_adjacency(net, flows);
        // 0 = unvisited, 1 = on stack, 2 = finished
        let mut color = vec![0u8; net.num_nodes];
        for root in 0..net.num_nodes {
            if color[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            let mut via: Vec<usize> = Vec::new();
            color[root] = 1;
            while let Some(&mut (u, ref mut pos)) = stack.last_mut() {
                if *pos < adj[u].len() {
                    let a = adj[u][*pos];
                    *pos += 1;
                    let v = net.arcs[a].to;
                    match color[v] {
                        0 => {
                            color[v] = 1;
                            via.push(a);
                            stack.push((v, 0));
                        }
                        1 => {
                            let depth = stack.iter().position(|&(x, _)| x == v).unwrap();
                            let mut cycle: Vec<usize> = via[depth..].to_vec();
                            cycle.push(a);
                            let amount = cycle.iter().map(|&c| flows[c]).min().unwrap();
                            for c in cycle {
                                flows[c] -= amount;
                            }
                            continue 'restart;
                        }
                        _ => {}
                    }
                } else {
                    color[u] = 2;
                    stack.pop();
                    via.pop();
                }
            }
        }
        return;
    }
}

/// Splits an acyclic flow into `value` source-sink paths. At every node the
/// walk takes the flow-carrying arc with the lowest target index.
pub fn decompose_paths(net: &FlowNetwork, result: &FlowResult) -> Result<Vec<FlowPath>, FlowError> {
    if result.arc_flows.len() != net.arcs.len() {
        return Err(FlowError::NotDecomposable("arc count mismatch".into()));
    }
    let mut remaining = result.arc_flows.clone();
    let adj = flow_adjacency(net, &remaining);
    let mut cursor = vec![0usize; net.num_nodes];
    let mut on_path = vec![false; net.num_nodes];
    let mut paths = Vec::with_capacity(result.value.max(0) as usize);
    for _ in 0..result.value {
        let mut nodes = vec![net.source];
        let mut arcs = Vec::new();
        on_path[net.source] = true;
        let mut u = net.source;
        while u != net.sink {
            while cursor[u] < adj[u].len() && remaining[adj[u][cursor[u]]] == 0 {
                cursor[u] += 1;
            }
            let Some(&a) = adj[u].get(cursor[u]) else {
                return Err(FlowError::NotDecomposable(format!(
                    "flow stops at node {u} before reaching the sink"
                )));
            };
            remaining[a] -= 1;
            let v = net.arcs[a].to;
            if on_path[v] {
                return Err(FlowError::NotDecomposable(format!(
                    "cycle through node {v}"
                )));
            }
            on_path[v] = true;
            nodes.push(v);
            arcs.push(a);
            u = v;
        }
        for &v in &nodes {
            on_path[v] = false;
        }
        paths.push(FlowPath { nodes, arcs });
    }
    if let Some(a) = remaining.iter().position(|&f| f != 0) {
        return Err(FlowError::NotDecomposable(format!(
            "arc {a} still carries flow after extracting {} paths",
            result.value
        )));
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(n: usize, s: usize, t: usize, arcs: &[(usize, usize, i64, i64)]) -> FlowNetwork {
        let mut g = FlowNetwork::new(n, s, t).unwrap();
        for &(a, b, c, w) in arcs {
            g.add_arc(a, b, c, w).unwrap();
        }
        g
    }

    #[test]
    fn unit_path() {
        let g = net(3, 0, 2, &[(0, 1, 1, 0), (1, 2, 1, 0)]);
        let r = max_flow(&g);
        assert_eq!(r.value, 1);
        let paths = decompose_paths(&g, &r).unwrap();
        assert_eq!(paths[0].nodes, vec![0, 1, 2]);
    }

    #[test]
    fn disconnected() {
        let g = net(4, 0, 3, &[(0, 1, 1, 0), (2, 3, 1, 0)]);
        let r = max_flow(&g);
        assert_eq!(r.value, 0);
        assert!(decompose_paths(&g, &r).unwrap().is_empty());
        assert_eq!(min_cost_max_flow(&g).unwrap().value, 0);
    }

    #[test]
    fn cheaper_parallel_arc() {
        // demand 1 enforced by the unit arc into the sink
        let g = net(3, 0, 2, &[(0, 1, 1, 5), (0, 1, 1, 1), (1, 2, 1, 0)]);
        let r = min_cost_max_flow(&g).unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(r.total_cost, 1);
        assert_eq!(r.arc_flows, vec![0, 1, 1]);
    }

    #[test]
    fn zero_costs_match_max_flow() {
        let g = net(
            5,
            0,
            4,
            &[(0, 1, 2, 0), (0, 2, 1, 0), (1, 2, 1, 0), (1, 3, 1, 0), (2, 4, 2, 0), (3, 4, 1, 0)],
        );
        let a = max_flow(&g);
        let b = min_cost_max_flow(&g).unwrap();
        assert_eq!(a.value, 3);
        assert_eq!(b.value, 3);
        assert_eq!(b.total_cost, 0);
    }

    #[test]
    fn limit_stops_early() {
        let g = net(2, 0, 1, &[(0, 1, 1, 0), (0, 1, 1, 0), (0, 1, 1, 0)]);
        assert_eq!(max_flow_with_limit(&g, Some(2)).value, 2);
        assert_eq!(max_flow(&g).value, 3);
    }

    #[test]
    fn rejects_invalid() {
        assert_eq!(FlowNetwork::new(2, 1, 1), Err(FlowError::SourceIsSink(1)));
        let mut g = FlowNetwork::new(2, 0, 1).unwrap();
        assert!(g.add_arc(0, 1, -1, 0).is_err());
        assert!(g.add_arc(0, 1, 1, -1).is_err());
        assert!(g.add_arc(0, 5, 1, 0).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let g = net(3, 0, 2, &[(0, 1, 1, i64::MAX - 1), (1, 2, 1, 10)]);
        assert_eq!(min_cost_max_flow(&g), Err(FlowError::CostOverflow));
    }

    #[test]
    fn circulations_are_cancelled() {
        // 1 <-> 2 zero-cost loop next to the real path
        let g = net(4, 0, 3, &[(0, 1, 1, 0), (1, 2, 1, 0), (2, 1, 1, 0), (1, 3, 1, 0)]);
        let mut flows = vec![1, 1, 1, 1];
        cancel_cycles(&g, &mut flows);
        assert_eq!(flows, vec![1, 0, 0, 1]);
    }

    #[test]
    fn tie_prefers_lowest_predecessor() {
        // two equal-cost routes 0->1->3 and 0->2->3; the lower node wins
        let g = net(4, 0, 3, &[(0, 2, 1, 1), (0, 1, 1, 1), (2, 3, 1, 1), (1, 3, 1, 1)]);
        let r = min_cost_max_flow(&g).unwrap();
        assert_eq!(r.value, 2);
        let paths = decompose_paths(&g, &r).unwrap();
        assert_eq!(paths[0].nodes, vec![0, 1, 3]);
        assert_eq!(paths[1].nodes, vec![0, 2, 3]);
    }
}
