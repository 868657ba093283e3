//! Min-cost flow with lower bounds: successive shortest paths, Dijkstra on
//! reduced costs with node potentials.
//!
//! Lower bounds are removed by the usual excess/deficit transformation onto
//! an auxiliary source and sink; the network is feasible iff every auxiliary
//! arc saturates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowArc<T> {
    pub from: usize,
    pub to: usize,
    pub lower: i64,
    pub capacity: i64,
    pub cost: T,
}

/// Directed network asking for `flow_value` units from `source` to `sink`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowNetwork<T> {
    nodes: usize,
    arcs: Vec<FlowArc<T>>,
    source: usize,
    sink: usize,
    flow_value: i64,
}

impl<T: Real> FlowNetwork<T> {
    pub fn new(nodes: usize, source: usize, sink: usize, flow_value: i64) -> Result<Self> {
        if source >= nodes || sink >= nodes || source == sink {
            return Err(Error::InvalidParameter(format!(
                "source {source} / sink {sink} invalid for {nodes} nodes"
            )));
        }
        if flow_value < 0 {
            return Err(Error::InvalidParameter("flow value must be nonnegative".into()));
        }
        Ok(Self {
            nodes,
            arcs: Vec::new(),
            source,
            sink,
            flow_value,
        })
    }

    /// Adds an arc and returns its index.
    pub fn add_arc(
        &mut self,
        from: usize,
        to: usize,
        lower: i64,
        capacity: i64,
        cost: T,
    ) -> Result<usize> {
        if from >= self.nodes || to >= self.nodes {
            return Err(Error::InvalidParameter(format!(
                "arc {from} -> {to} outside {} nodes",
                self.nodes
            )));
        }
        if lower < 0 || capacity < lower {
            return Err(Error::InvalidParameter(format!(
                "arc {from} -> {to} needs 0 <= lower ({lower}) <= capacity ({capacity})"
            )));
        }
        if !cost.is_finite() {
            return Err(Error::InvalidParameter(format!("arc {from} -> {to} has non-finite cost")));
        }
        self.arcs.push(FlowArc {
            from,
            to,
            lower,
            capacity,
            cost,
        });
        Ok(self.arcs.len() - 1)
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn arcs(&self) -> &[FlowArc<T>] {
        &self.arcs
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn flow_value(&self) -> i64 {
        self.flow_value
    }

    /// Net outflow minus inflow at each node for the given arc flows.
    pub fn imbalance(&self, flows: &[i64]) -> Vec<i64> {
        let mut net = vec![0i64; self.nodes];
        for (a, &f) in self.arcs.iter().zip(flows) {
            net[a.from] += f;
            net[a.to] -= f;
        }
        net
    }

    /// Bounds respected, conservation everywhere except source/sink, and the
    /// requested value shipped.
    pub fn is_feasible_flow(&self, flows: &[i64]) -> bool {
        if flows.len() != self.arcs.len() {
            return false;
        }
        if self
            .arcs
            .iter()
            .zip(flows)
            .any(|(a, &f)| f < a.lower || f > a.capacity)
        {
            return false;
        }
        self.imbalance(flows).iter().enumerate().all(|(v, &b)| {
            if v == self.source {
                b == self.flow_value
            } else if v == self.sink {
                b == -self.flow_value
            } else {
                b == 0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution<T> {
    /// Flow on each arc, in insertion order.
    pub flows: Vec<i64>,
    pub cost: T,
}

struct Residual<T> {
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<T>,
    adj: Vec<Vec<usize>>,
}

impl<T: Real> Residual<T> {
    fn new(nodes: usize) -> Self {
        Self {
            head: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    /// Forward edge id; its twin is `id ^ 1`.
    fn link(&mut self, u: usize, v: usize, cap: i64, cost: T) -> usize {
        let id = self.head.len();
        self.head.extend([v, u]);
        self.cap.extend([cap, 0]);
        self.cost.extend([cost, -cost]);
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }
}

#[derive(PartialEq)]
struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: PartialOrd> Eq for Entry<T> {}

impl<T: PartialOrd> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Entry<T> {
    // Reversed for a min-heap; ties resolve to the lower node index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Bellman-Ford distances from `src`, used as initial potentials when some
/// arc cost is negative. Unreachable nodes get zero.
fn initial_potentials<T: Real>(g: &Residual<T>, src: usize) -> Result<Vec<T>> {
    let n = g.adj.len();
    let mut dist: Vec<Option<T>> = vec![None; n];
    dist[src] = Some(T::zero());
    for round in 0..=n {
        let mut changed = false;
        for u in 0..n {
            let Some(du) = dist[u] else { continue };
            for &e in &g.adj[u] {
                if g.cap[e] > 0 {
                    let cand = du + g.cost[e];
                    let v = g.head[e];
                    if dist[v].is_none_or(|dv| cand < dv) {
                        dist[v] = Some(cand);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
        if round == n {
            return Err(Error::InvalidParameter("network has a negative-cost cycle".into()));
        }
    }
    Ok(dist.into_iter().map(|d| d.unwrap_or_else(T::zero)).collect())
}

/// Minimum-cost integral flow of value `net.flow_value()`.
pub fn solve_min_cost_flow<T: Real>(net: &FlowNetwork<T>) -> Result<FlowSolution<T>> {
    let n = net.nodes;
    let (super_src, super_sink) = (n, n + 1);
    let mut g = Residual::new(n + 2);

    let mut balance = vec![0i64; n];
    balance[net.source] += net.flow_value;
    balance[net.sink] -= net.flow_value;
    let mut edge_of_arc = Vec::with_capacity(net.arcs.len());
    for a in &net.arcs {
        edge_of_arc.push(g.link(a.from, a.to, a.capacity - a.lower, a.cost));
        if a.lower > 0 {
            balance[a.from] -= a.lower;
            balance[a.to] += a.lower;
        }
    }
    let mut required = 0i64;
    for (v, &b) in balance.iter().enumerate() {
        match b.cmp(&0) {
            Ordering::Greater => {
                g.link(super_src, v, b, T::zero());
                required += b;
            }
            Ordering::Less => {
                g.link(v, super_sink, -b, T::zero());
            }
            Ordering::Equal => {}
        }
    }

    let mut potential = if net.arcs.iter().any(|a| a.cost < T::zero()) {
        initial_potentials(&g, super_src)?
    } else {
        vec![T::zero(); n + 2]
    };

    let mut shipped = 0i64;
    let mut dist: Vec<Option<T>> = vec![None; n + 2];
    let mut parent = vec![usize::MAX; n + 2];
    while shipped < required {
        dist.fill(None);
        parent.fill(usize::MAX);
        dist[super_src] = Some(T::zero());
        let mut heap = BinaryHeap::new();
        heap.push(Entry {
            dist: T::zero(),
            node: super_src,
        });
        while let Some(Entry { dist: du, node: u }) = heap.pop() {
            if dist[u].is_some_and(|d| du > d) {
                continue;
            }
            for &e in &g.adj[u] {
                if g.cap[e] <= 0 {
                    continue;
                }
                let v = g.head[e];
                let mut reduced = g.cost[e] + potential[u] - potential[v];
                // Potentials keep reduced costs nonnegative up to rounding.
                if reduced < T::zero() {
                    reduced = T::zero();
                }
                let cand = du + reduced;
                if dist[v].is_none_or(|dv| cand < dv) {
                    dist[v] = Some(cand);
                    parent[v] = e;
                    heap.push(Entry { dist: cand, node: v });
                }
            }
        }
        if dist[super_sink].is_none() {
            break;
        }
        for (p, d) in potential.iter_mut().zip(&dist) {
            if let Some(d) = d {
                *p += *d;
            }
        }
        let mut push = required - shipped;
        let mut v = super_sink;
        while v != super_src {
            let e = parent[v];
            push = push.min(g.cap[e]);
            v = g.head[e ^ 1];
        }
        let mut v = super_sink;
        while v != super_src {
            let e = parent[v];
            g.cap[e] -= push;
            g.cap[e ^ 1] += push;
            v = g.head[e ^ 1];
        }
        shipped += push;
    }
    if shipped < required {
        return Err(Error::Infeasible(format!(
            "only {shipped} of {required} units of required flow can be routed"
        )));
    }

    let flows: Vec<i64> = net
        .arcs
        .iter()
        .zip(&edge_of_arc)
        .map(|(a, &e)| a.lower + g.cap[e ^ 1])
        .collect();
    let cost = net
        .arcs
        .iter()
        .zip(&flows)
        .filter(|(_, &f)| f > 0)
        .fold(T::zero(), |acc, (a, &f)| acc + a.cost * T::from_f64_lossy(f as f64));
    debug_assert!(net.is_feasible_flow(&flows));
    Ok(FlowSolution { flows, cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_path() {
        let mut net = FlowNetwork::new(4, 0, 3, 1).unwrap();
        net.add_arc(0, 1, 0, 1, 0.0).unwrap();
        net.add_arc(1, 2, 0, 1, 2.5).unwrap();
        net.add_arc(2, 3, 0, 1, 0.0).unwrap();
        let sol = solve_min_cost_flow(&net).unwrap();
        assert_eq!(sol.flows, vec![1, 1, 1]);
        assert_eq!(sol.cost, 2.5);
    }

    #[test]
    fn picks_cheaper_route() {
        let mut net = FlowNetwork::new(4, 0, 3, 2).unwrap();
        net.add_arc(0, 1, 0, 2, 1.0).unwrap();
        net.add_arc(0, 2, 0, 2, 3.0).unwrap();
        net.add_arc(1, 3, 0, 1, 1.0).unwrap();
        net.add_arc(2, 3, 0, 2, 1.0).unwrap();
        net.add_arc(1, 2, 0, 1, 0.5).unwrap();
        let sol = solve_min_cost_flow(&net).unwrap();
        assert!(net.is_feasible_flow(&sol.flows));
        // 0->1->3 (2) and 0->1->2->3 (2.5)
        assert_eq!(sol.cost, 4.5);
    }

    #[test]
    fn lower_bound_forces_expensive_arc() {
        let mut net = FlowNetwork::new(3, 0, 2, 2).unwrap();
        net.add_arc(0, 1, 0, 2, 0.0).unwrap();
        let cheap = net.add_arc(1, 2, 0, 2, 1.0).unwrap();
        let pricey = net.add_arc(1, 2, 1, 2, 10.0).unwrap();
        let sol = solve_min_cost_flow(&net).unwrap();
        assert_eq!(sol.flows[cheap], 1);
        assert_eq!(sol.flows[pricey], 1);
        assert_eq!(sol.cost, 11.0);
    }

    #[test]
    fn infeasible_lower_bounds() {
        let mut net = FlowNetwork::new(3, 0, 2, 1).unwrap();
        net.add_arc(0, 1, 0, 1, 0.0).unwrap();
        net.add_arc(1, 2, 2, 3, 0.0).unwrap();
        assert!(matches!(solve_min_cost_flow(&net), Err(Error::Infeasible(_))));
    }

    #[test]
    fn negative_costs_use_bellman_ford_potentials() {
        let mut net = FlowNetwork::new(4, 0, 3, 1).unwrap();
        net.add_arc(0, 1, 0, 1, 1.0).unwrap();
        net.add_arc(0, 2, 0, 1, 2.0).unwrap();
        net.add_arc(1, 3, 0, 1, 1.0).unwrap();
        net.add_arc(2, 3, 0, 1, -5.0).unwrap();
        let sol = solve_min_cost_flow(&net).unwrap();
        assert_eq!(sol.cost, -3.0);
    }

    #[test]
    fn rejects_bad_arcs() {
        let mut net = FlowNetwork::<f64>::new(2, 0, 1, 1).unwrap();
        assert!(net.add_arc(0, 2, 0, 1, 0.0).is_err());
        assert!(net.add_arc(0, 1, 2, 1, 0.0).is_err());
        assert!(net.add_arc(0, 1, 0, 1, f64::NAN).is_err());
        assert!(FlowNetwork::<f64>::new(2, 0, 0, 1).is_err());
    }
}
