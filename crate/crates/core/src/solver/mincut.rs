//! Dinic maximum flow / minimum cut on integer capacities.

use std::collections::VecDeque;

pub(crate) struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<i128>,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl FlowNetwork {
    pub(crate) fn new(nodes: usize) -> Self {
        Self {
            head: vec![Vec::new(); nodes],
            to: Vec::new(),
            residual: Vec::new(),
            level: vec![0; nodes],
            cursor: vec![0; nodes],
        }
    }

    pub(crate) fn add_edge(&mut self, from: usize, to: usize, capacity: i128) {
        debug_assert!(capacity >= 0);
        if capacity == 0 || from == to {
            return;
        }
        self.head[from].push(self.to.len());
        self.to.push(to);
        self.residual.push(capacity);
        self.head[to].push(self.to.len());
        self.to.push(from);
        self.residual.push(0);
    }

    fn bfs(&mut self, source: usize, sink: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.residual[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[sink] >= 0
    }

    fn dfs(&mut self, u: usize, sink: usize, pushed: i128) -> i128 {
        if u == sink {
            return pushed;
        }
        while self.cursor[u] < self.head[u].len() {
            let e = self.head[u][self.cursor[u]];
            let v = self.to[e];
            if self.residual[e] > 0 && self.level[v] == self.level[u] + 1 {
                let flow = self.dfs(v, sink, pushed.min(self.residual[e]));
                if flow > 0 {
                    self.residual[e] -= flow;
                    self.residual[e ^ 1] += flow;
                    return flow;
                }
            }
            self.cursor[u] += 1;
        }
        0
    }

    pub(crate) fn max_flow(&mut self, source: usize, sink: usize) -> i128 {
        let mut total = 0;
        while self.bfs(source, sink) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let flow = self.dfs(source, sink, i128::MAX);
                if flow == 0 {
                    break;
                }
                total += flow;
            }
        }
        total
    }

    /// Nodes reachable from `source` in the residual graph; call after
    /// [`FlowNetwork::max_flow`].
    pub(crate) fn source_side(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.residual[e] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}
