//! Exact integer max-flow (Dinic) on small graphs.
//!
//! Backs both the comparison search (degree-constrained assignment) and the
//! type-semigroup transportation solves. Everything is integer; graph sizes
//! here stay in the low thousands. Augmentation order follows edge insertion
//! order, so flows are deterministic.

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    /// remaining capacity; pushing moves capacity to the twin edge
    cap: u64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    edges: Vec<Edge>,
    initial_cap: Vec<u64>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { edges: Vec::new(), initial_cap: Vec::new(), adj: vec![Vec::new(); nodes] }
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Add a directed edge and its residual twin; returns the edge index.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: u64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap });
        self.initial_cap.push(cap);
        self.adj[from].push(id);
        self.edges.push(Edge { to: from, cap: 0 });
        self.initial_cap.push(0);
        self.adj[to].push(id + 1);
        id
    }

    /// Flow routed through a forward edge after max_flow.
    pub fn flow_on(&self, edge_id: usize) -> u64 {
        self.initial_cap[edge_id] - self.edges[edge_id].cap
    }

    fn bfs_levels(&self, source: usize, sink: usize) -> Option<Vec<i32>> {
        let mut level = vec![-1i32; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        level[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &eid in &self.adj[u] {
                let e = &self.edges[eid];
                if level[e.to] < 0 && e.cap > 0 {
                    level[e.to] = level[u] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        (level[sink] >= 0).then_some(level)
    }

    fn dfs_push(
        &mut self,
        u: usize,
        sink: usize,
        pushed: u64,
        level: &[i32],
        it: &mut [usize],
    ) -> u64 {
        if u == sink {
            return pushed;
        }
        while it[u] < self.adj[u].len() {
            let eid = self.adj[u][it[u]];
            let (to, cap) = {
                let e = &self.edges[eid];
                (e.to, e.cap)
            };
            if cap > 0 && level[to] == level[u] + 1 {
                let d = self.dfs_push(to, sink, pushed.min(cap), level, it);
                if d > 0 {
                    self.edges[eid].cap -= d;
                    self.edges[eid ^ 1].cap += d;
                    return d;
                }
            }
            it[u] += 1;
        }
        0
    }

    /// Max flow from source to sink.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> u64 {
        let mut total = 0u64;
        while let Some(level) = self.bfs_levels(source, sink) {
            let mut it = vec![0usize; self.adj.len()];
            loop {
                let pushed = self.dfs_push(source, sink, u64::MAX, &level, &mut it);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }
}
