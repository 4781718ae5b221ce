//! Max-flow with a min-cut certificate, and maximum matching in general
//! graphs (Edmonds' blossom algorithm) with an exhaustive reference matcher.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("negative capacity on arc {0}->{1}")]
    NegativeCapacity(usize, usize),
    #[error("arc {0}->{1} enters the source or leaves the sink")]
    TerminalArc(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("parallel edge {0}-{1}")]
    ParallelEdge(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cap: i64,
}

/// Directed network with integer capacities.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    pub n: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(n: usize, source: usize, sink: usize) -> Self {
        FlowNetwork {
            n,
            source,
            sink,
            arcs: Vec::new(),
        }
    }

    /// Adds an arc and returns its index.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64) -> Result<usize, GraphError> {
        for v in [from, to] {
            if v >= self.n {
                return Err(GraphError::VertexOutOfRange(v));
            }
        }
        if cap < 0 {
            return Err(GraphError::NegativeCapacity(from, to));
        }
        if to == self.source || from == self.sink {
            return Err(GraphError::TerminalArc(from, to));
        }
        self.arcs.push(Arc { from, to, cap });
        Ok(self.arcs.len() - 1)
    }
}

/// Source side of a minimum cut together with its capacity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinCut {
    pub source_side: Vec<bool>,
    pub capacity: i64,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub value: i64,
    /// Flow on each arc, indexed like `FlowNetwork::arcs`.
    pub flow: Vec<i64>,
    pub cut: MinCut,
}

static FLOW_CALLS: AtomicU64 = AtomicU64::new(0);
static CERTIFICATES_CHECKED: AtomicU64 = AtomicU64::new(0);

/// `(max_flow calls, certificates validated)` since process start.
pub fn certificate_stats() -> (u64, u64) {
    (
        FLOW_CALLS.load(Ordering::SeqCst),
        CERTIFICATES_CHECKED.load(Ordering::SeqCst),
    )
}

/// Shortest-augmenting-path (Edmonds–Karp) maximum flow.
///
/// Every call checks capacity bounds, conservation, and that the residual
/// reachability cut has capacity equal to the flow value; a violation is an
/// internal bug and panics.
pub fn max_flow(net: &FlowNetwork) -> FlowResult {
    FLOW_CALLS.fetch_add(1, Ordering::SeqCst);
    let n = net.n;
    // Residual graph: arc 2e is forward, 2e+1 its reverse.
    let mut head = vec![Vec::new(); n];
    let mut to = Vec::with_capacity(net.arcs.len() * 2);
    let mut res = Vec::with_capacity(net.arcs.len() * 2);
    for a in &net.arcs {
        head[a.from].push(to.len());
        to.push(a.to);
        res.push(a.cap);
        head[a.to].push(to.len());
        to.push(a.from);
        res.push(0);
    }
    let mut value = 0i64;
    if net.source != net.sink {
        loop {
            let mut pred = vec![usize::MAX; n];
            let mut seen = vec![false; n];
            seen[net.source] = true;
            let mut q = VecDeque::from([net.source]);
            while let Some(u) = q.pop_front() {
                if u == net.sink {
                    break;
                }
                for &e in &head[u] {
                    let v = to[e];
                    if res[e] > 0 && !seen[v] {
                        seen[v] = true;
                        pred[v] = e;
                        q.push_back(v);
                    }
                }
            }
            if !seen[net.sink] {
                break;
            }
            let mut push = i64::MAX;
            let mut v = net.sink;
            while v != net.source {
                let e = pred[v];
                push = push.min(res[e]);
                v = to[e ^ 1];
            }
            let mut v = net.sink;
            while v != net.source {
                let e = pred[v];
                res[e] -= push;
                res[e ^ 1] += push;
                v = to[e ^ 1];
            }
            value += push;
        }
    }
    let flow: Vec<i64> = (0..net.arcs.len()).map(|e| res[2 * e + 1]).collect();
    let mut source_side = vec![false; n];
    source_side[net.source] = true;
    let mut q = VecDeque::from([net.source]);
    while let Some(u) = q.pop_front() {
        for &e in &head[u] {
            if res[e] > 0 && !source_side[to[e]] {
                source_side[to[e]] = true;
                q.push_back(to[e]);
            }
        }
    }
    let capacity = net
        .arcs
        .iter()
        .filter(|a| source_side[a.from] && !source_side[a.to])
        .map(|a| a.cap)
        .sum();
    let result = FlowResult {
        value,
        flow,
        cut: MinCut {
            source_side,
            capacity,
        },
    };
    check_certificate(net, &result);
    CERTIFICATES_CHECKED.fetch_add(1, Ordering::SeqCst);
    result
}

/// Validates feasibility of the flow and the max-flow/min-cut equality.
pub fn check_certificate(net: &FlowNetwork, r: &FlowResult) {
    let mut balance = vec![0i64; net.n];
    for (a, &f) in net.arcs.iter().zip(&r.flow) {
        assert!(
            (0..=a.cap).contains(&f),
            "flow {f} outside [0, {}] on arc {}->{}",
            a.cap,
            a.from,
            a.to
        );
        balance[a.from] -= f;
        balance[a.to] += f;
    }
    for (v, &b) in balance.iter().enumerate() {
        if v != net.source && v != net.sink {
            assert_eq!(b, 0, "flow not conserved at vertex {v}");
        }
    }
    if net.source != net.sink {
        assert_eq!(balance[net.sink], r.value, "sink inflow differs from value");
        assert!(r.cut.source_side[net.source] && !r.cut.source_side[net.sink]);
    }
    assert_eq!(
        r.cut.capacity, r.value,
        "min-cut certificate does not match flow value"
    );
}

/// Undirected simple graph.
#[derive(Clone, Debug, Default)]
pub struct SimpleGraph {
    pub n: usize,
    pub adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        SimpleGraph {
            n,
            adj: vec![Vec::new(); n],
        }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        for x in [u, v] {
            if x >= self.n {
                return Err(GraphError::VertexOutOfRange(x));
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if self.adj[u].contains(&v) {
            return Err(GraphError::ParallelEdge(u, v));
        }
        self.adj[u].push(v);
        self.adj[v].push(u);
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Maximum-cardinality matching as a mate vector (Edmonds' blossom
/// algorithm, O(V³)).
pub fn max_matching(g: &SimpleGraph) -> Vec<Option<usize>> {
    Blossom::new(g).run()
}

pub fn matching_size(mate: &[Option<usize>]) -> usize {
    mate.iter().filter(|m| m.is_some()).count() / 2
}

pub fn has_perfect_matching(g: &SimpleGraph) -> bool {
    g.n.is_multiple_of(2) && matching_size(&max_matching(g)) * 2 == g.n
}

struct Blossom<'a> {
    g: &'a SimpleGraph,
    mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
}

const NONE: usize = usize::MAX;

impl<'a> Blossom<'a> {
    fn new(g: &'a SimpleGraph) -> Self {
        let n = g.n;
        Blossom {
            g,
            mate: vec![NONE; n],
            parent: vec![NONE; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
        }
    }

    fn run(mut self) -> Vec<Option<usize>> {
        // Greedy start keeps the number of augmentations small.
        for u in 0..self.g.n {
            if self.mate[u] == NONE {
                if let Some(&v) = self.g.adj[u].iter().find(|&&v| self.mate[v] == NONE) {
                    self.mate[u] = v;
                    self.mate[v] = u;
                }
            }
        }
        for root in 0..self.g.n {
            if self.mate[root] == NONE {
                let v = self.find_path(root);
                if v != NONE {
                    self.augment(v);
                }
            }
        }
        self.mate
            .iter()
            .map(|&m| if m == NONE { None } else { Some(m) })
            .collect()
    }

    fn augment(&mut self, mut v: usize) {
        while v != NONE {
            let pv = self.parent[v];
            let ppv = self.mate[pv];
            self.mate[v] = pv;
            self.mate[pv] = v;
            v = ppv;
        }
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.g.n];
        loop {
            a = self.base[a];
            seen[a] = true;
            if self.mate[a] == NONE {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    /// BFS for an augmenting path from `root`; returns its free endpoint.
    fn find_path(&mut self, root: usize) -> usize {
        let n = self.g.n;
        self.used.iter_mut().for_each(|x| *x = false);
        self.parent.iter_mut().for_each(|x| *x = NONE);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for idx in 0..self.g.adj[v].len() {
                let to = self.g.adj[v][idx];
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NONE && self.parent[self.mate[to]] != NONE) {
                    let cur = self.lca(v, to);
                    self.in_blossom.iter_mut().for_each(|x| *x = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                q.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if self.mate[to] == NONE {
                        return to;
                    }
                    let m = self.mate[to];
                    self.used[m] = true;
                    q.push_back(m);
                }
            }
        }
        NONE
    }
}

/// Reference maximum matching size by exhaustive search (small graphs only).
pub fn max_matching_exhaustive(g: &SimpleGraph) -> usize {
    fn go(g: &SimpleGraph, v: usize, used: &mut Vec<bool>) -> usize {
        let Some(u) = (v..g.n).find(|&u| !used[u]) else {
            return 0;
        };
        used[u] = true;
        // Either u stays unmatched...
        let mut best = go(g, u + 1, used);
        // ...or it is matched to some later free neighbour.
        for &w in &g.adj[u] {
            if !used[w] {
                used[w] = true;
                best = best.max(1 + go(g, u + 1, used));
                used[w] = false;
            }
        }
        used[u] = false;
        best
    }
    go(g, 0, &mut vec![false; g.n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_flow() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.add_arc(0, 1, 2).unwrap();
        net.add_arc(1, 2, 1).unwrap();
        assert_eq!(max_flow(&net).value, 1);
    }

    #[test]
    fn disconnected_flow() {
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 5).unwrap();
        net.add_arc(2, 3, 5).unwrap();
        let r = max_flow(&net);
        assert_eq!(r.value, 0);
        assert_eq!(r.cut.capacity, 0);
    }

    #[test]
    fn terminal_arcs_rejected() {
        let mut net = FlowNetwork::new(3, 0, 2);
        assert_eq!(net.add_arc(1, 0, 1), Err(GraphError::TerminalArc(1, 0)));
        assert_eq!(net.add_arc(2, 1, 1), Err(GraphError::TerminalArc(2, 1)));
    }

    fn complete(n: usize) -> SimpleGraph {
        let mut g = SimpleGraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v).unwrap();
            }
        }
        g
    }

    #[test]
    fn triangle_and_k4() {
        let k3 = complete(3);
        assert_eq!(matching_size(&max_matching(&k3)), 1);
        assert!(!has_perfect_matching(&k3));
        assert!(has_perfect_matching(&complete(4)));
    }

    #[test]
    fn petersen_is_perfectly_matchable() {
        let mut g = SimpleGraph::new(10);
        for i in 0..5 {
            g.add_edge(i, (i + 1) % 5).unwrap();
            g.add_edge(i, i + 5).unwrap();
            g.add_edge(5 + i, 5 + (i + 2) % 5).unwrap();
        }
        assert_eq!(max_matching_exhaustive(&g), 5);
        assert!(has_perfect_matching(&g));
    }

    #[test]
    fn graph_rejects_loops_and_parallels() {
        let mut g = SimpleGraph::new(2);
        assert_eq!(g.add_edge(0, 0), Err(GraphError::SelfLoop(0)));
        g.add_edge(0, 1).unwrap();
        assert_eq!(g.add_edge(1, 0), Err(GraphError::ParallelEdge(1, 0)));
    }
}
