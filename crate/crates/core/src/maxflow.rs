//! Exact minimum s-t cuts.
//!
//! [`MaxFlow`] is a Dinic solver with reusable buffers; alpha-expansion drives
//! it directly, rebuilding the network for every label without reallocating.
//! [`FlowNetwork`] and [`min_cut`] are the validated, arc-list front end.
//!
//! The returned source side is always the set of nodes reachable from the
//! source in the final residual graph, so ties between minimum cuts resolve
//! toward the smallest source side.

use crate::error::{ItaleError, Result};

const NONE: u32 = u32::MAX;

/// Dinic max-flow over `f64` capacities.
#[derive(Debug, Default, Clone)]
pub struct MaxFlow {
    n: usize,
    source: usize,
    sink: usize,
    head: Vec<u32>,
    next: Vec<u32>,
    to: Vec<u32>,
    cap: Vec<f64>,
    base_flow: f64,
    level: Vec<i32>,
    cursor: Vec<u32>,
    queue: Vec<u32>,
    stack: Vec<u32>,
}

impl MaxFlow {
    pub fn new(n: usize, source: usize, sink: usize) -> Self {
        let mut mf = MaxFlow::default();
        mf.reset(n, source, sink);
        mf
    }

    /// Clears all arcs, keeping allocations.
    pub fn reset(&mut self, n: usize, source: usize, sink: usize) {
        assert!(source < n && sink < n && source != sink);
        self.n = n;
        self.source = source;
        self.sink = sink;
        self.head.clear();
        self.head.resize(n, NONE);
        self.next.clear();
        self.to.clear();
        self.cap.clear();
        self.base_flow = 0.0;
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// Adds a node and returns its id.
    pub fn add_node(&mut self) -> usize {
        self.head.push(NONE);
        self.n += 1;
        self.n - 1
    }

    fn push_arc(&mut self, u: usize, v: usize, cap: f64) {
        let a = self.to.len() as u32;
        self.to.push(v as u32);
        self.cap.push(cap);
        self.next.push(self.head[u]);
        self.head[u] = a;
    }

    /// Directed arc `u → v`.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: f64) {
        self.add_edge(u, v, cap, 0.0);
    }

    /// Arc pair with capacity `cap_uv` on `u → v` and `cap_vu` on `v → u`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap_uv: f64, cap_vu: f64) {
        debug_assert!(cap_uv >= 0.0 && cap_vu >= 0.0);
        self.push_arc(u, v, cap_uv);
        self.push_arc(v, u, cap_vu);
    }

    /// Source arc into `v` and sink arc out of `v`. The common part of the two
    /// capacities is routed along `s → v → t` immediately.
    pub fn add_terminal(&mut self, v: usize, from_source: f64, to_sink: f64) {
        let f = from_source.min(to_sink);
        self.base_flow += f;
        let (cs, ct) = (from_source - f, to_sink - f);
        if cs > 0.0 {
            self.add_arc(self.source, v, cs);
        }
        if ct > 0.0 {
            self.add_arc(v, self.sink, ct);
        }
    }

    fn bfs(&mut self) -> bool {
        self.level.clear();
        self.level.resize(self.n, -1);
        self.queue.clear();
        self.level[self.source] = 0;
        self.queue.push(self.source as u32);
        let mut qi = 0;
        while qi < self.queue.len() {
            let v = self.queue[qi] as usize;
            qi += 1;
            let mut a = self.head[v];
            while a != NONE {
                let w = self.to[a as usize] as usize;
                if self.cap[a as usize] > 0.0 && self.level[w] < 0 {
                    self.level[w] = self.level[v] + 1;
                    if w == self.sink {
                        return true;
                    }
                    self.queue.push(w as u32);
                }
                a = self.next[a as usize];
            }
        }
        false
    }

    fn blocking_flow(&mut self) -> f64 {
        self.cursor.clear();
        self.cursor.extend_from_slice(&self.head);
        self.stack.clear();
        let mut pushed = 0.0;
        let mut v = self.source;
        loop {
            if v == self.sink {
                let mut bottleneck = f64::INFINITY;
                for &a in &self.stack {
                    bottleneck = bottleneck.min(self.cap[a as usize]);
                }
                for &a in &self.stack {
                    self.cap[a as usize] -= bottleneck;
                    self.cap[(a ^ 1) as usize] += bottleneck;
                }
                pushed += bottleneck;
                let k = self.stack.iter().position(|&a| self.cap[a as usize] <= 0.0).unwrap_or(0);
                self.stack.truncate(k);
                v = match self.stack.last() {
                    Some(&a) => self.to[a as usize] as usize,
                    None => self.source,
                };
                continue;
            }
            let mut a = self.cursor[v];
            while a != NONE {
                let w = self.to[a as usize] as usize;
                if self.cap[a as usize] > 0.0 && self.level[w] == self.level[v] + 1 {
                    break;
                }
                a = self.next[a as usize];
            }
            self.cursor[v] = a;
            if a != NONE {
                self.stack.push(a);
                v = self.to[a as usize] as usize;
            } else {
                // dead end: prune v and back up one arc
                self.level[v] = -1;
                match self.stack.pop() {
                    None => break,
                    Some(last) => {
                        v = self.to[(last ^ 1) as usize] as usize;
                        self.cursor[v] = self.next[self.cursor[v] as usize];
                    }
                }
            }
        }
        pushed
    }

    /// Runs to completion and returns the maximum flow value.
    pub fn solve(&mut self) -> f64 {
        let mut flow = self.base_flow;
        while self.bfs() {
            flow += self.blocking_flow();
        }
        self.base_flow = flow;
        flow
    }

    /// Membership of each node in the residual-reachable source side.
    /// Meaningful after [`MaxFlow::solve`].
    pub fn source_side(&mut self) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        self.queue.clear();
        seen[self.source] = true;
        self.queue.push(self.source as u32);
        let mut qi = 0;
        while qi < self.queue.len() {
            let v = self.queue[qi] as usize;
            qi += 1;
            let mut a = self.head[v];
            while a != NONE {
                let w = self.to[a as usize] as usize;
                if self.cap[a as usize] > 0.0 && !seen[w] {
                    seen[w] = true;
                    self.queue.push(w as u32);
                }
                a = self.next[a as usize];
            }
        }
        seen
    }
}

/// An s-t network given as an arc list.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    pub nodes: usize,
    /// `(from, to, capacity)`; `f64::INFINITY` marks an uncuttable arc.
    pub arcs: Vec<(usize, usize, f64)>,
    pub source: usize,
    pub sink: usize,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        FlowNetwork { nodes, arcs: Vec::new(), source, sink }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) {
        self.arcs.push((from, to, capacity));
    }

    pub fn validate(&self) -> Result<()> {
        if self.source == self.sink {
            return Err(ItaleError::InvalidNetwork("source equals sink".into()));
        }
        if self.source >= self.nodes || self.sink >= self.nodes {
            return Err(ItaleError::InvalidNetwork("terminal out of range".into()));
        }
        for &(u, v, c) in &self.arcs {
            if u >= self.nodes || v >= self.nodes {
                return Err(ItaleError::InvalidNetwork(format!("arc ({u}, {v}) out of range")));
            }
            if c.is_nan() || c < 0.0 {
                return Err(ItaleError::InvalidNetwork(format!("arc ({u}, {v}) has capacity {c}")));
            }
        }
        Ok(())
    }

    /// Stand-in for infinite capacity: one more than the sum of finite capacities.
    pub fn infinite_capacity(&self) -> f64 {
        1.0 + self.arcs.iter().map(|a| a.2).filter(|c| c.is_finite()).sum::<f64>()
    }

    /// Sum of capacities of arcs leaving `source_side`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        let inf = self.infinite_capacity();
        self.arcs
            .iter()
            .filter(|&&(u, v, _)| source_side[u] && !source_side[v])
            .map(|&(_, _, c)| if c.is_finite() { c } else { inf })
            .sum()
    }
}

/// Minimum cut with its certifying partition.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub cut_value: f64,
    pub flow_value: f64,
    pub source_side: Vec<usize>,
    pub sink_side: Vec<usize>,
}

impl CutResult {
    pub fn membership(&self, nodes: usize) -> Vec<bool> {
        let mut m = vec![false; nodes];
        for &v in &self.source_side {
            m[v] = true;
        }
        m
    }
}

pub fn min_cut(network: &FlowNetwork) -> Result<CutResult> {
    network.validate()?;
    let inf = network.infinite_capacity();
    let mut mf = MaxFlow::new(network.nodes, network.source, network.sink);
    for &(u, v, c) in &network.arcs {
        if u == v || c == 0.0 {
            continue;
        }
        mf.add_arc(u, v, if c.is_finite() { c } else { inf });
    }
    let flow_value = mf.solve();
    let side = mf.source_side();
    let cut_value = network.cut_capacity(&side);
    let (source_side, sink_side) = (0..network.nodes).partition(|&v| side[v]);
    Ok(CutResult { cut_value, flow_value, source_side, sink_side })
}
