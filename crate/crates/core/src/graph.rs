//! Graph topologies, the discrete gradient they induce, and piecewise-constant
//! partitions.
//!
//! Vertices are indexed `0..p`. Every undirected edge is stored once as an
//! oriented pair `(i, j)`; the gradient entry for that edge is `x[i] - x[j]`.

use crate::error::{check_len, ItaleError, Result};
use crate::union_find::UnionFind;
use std::collections::HashSet;

/// A connected undirected graph with a fixed orientation on each edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTopology {
    p: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    // (neighbor, edge index), grouped per vertex by `offsets`
    incidence: Vec<(usize, usize)>,
    lattice: Option<(usize, usize)>,
}

impl GraphTopology {
    /// Builds a topology, storing each edge as `(min, max)`.
    pub fn new(p: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let edges = edges.into_iter().map(|(i, j)| if i < j { (i, j) } else { (j, i) }).collect();
        Self::from_oriented_edges(p, edges)
    }

    /// Builds a topology keeping the orientation of each pair as given.
    pub fn from_oriented_edges(p: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if p < 3 {
            return Err(ItaleError::InvalidSize(format!("graph needs at least 3 vertices, got {p}")));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for &(i, j) in &edges {
            if i >= p || j >= p {
                return Err(ItaleError::InvalidGraph(format!("edge ({i}, {j}) out of range for p={p}")));
            }
            if i == j {
                return Err(ItaleError::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(ItaleError::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
        }
        if edges.len() + 1 < p {
            return Err(ItaleError::InvalidGraph(format!(
                "{} edges cannot connect {p} vertices",
                edges.len()
            )));
        }
        let mut uf = UnionFind::new(p);
        let mut components = p;
        for &(i, j) in &edges {
            if uf.union(i, j) {
                components -= 1;
            }
        }
        if components != 1 {
            return Err(ItaleError::InvalidGraph(format!("graph has {components} connected components")));
        }

        let mut degree = vec![0usize; p];
        for &(i, j) in &edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = vec![0usize; p + 1];
        for v in 0..p {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut incidence = vec![(0, 0); offsets[p]];
        for (e, &(i, j)) in edges.iter().enumerate() {
            incidence[fill[i]] = (j, e);
            fill[i] += 1;
            incidence[fill[j]] = (i, e);
            fill[j] += 1;
        }
        Ok(GraphTopology { p, edges, offsets, incidence, lattice: None })
    }

    pub fn num_vertices(&self) -> usize {
        self.p
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `(rows, cols)` when the graph was built by [`lattice_graph`].
    pub fn lattice_dims(&self) -> Option<(usize, usize)> {
        self.lattice
    }

    /// Neighbors of `v` together with the index of the connecting edge.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.incidence[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.p).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Discrete gradient `(x_i − x_j)` over the stored edges.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.p, x.len())?;
        Ok(self.edges.iter().map(|&(i, j)| x[i] - x[j]).collect())
    }

    /// Adjoint of the gradient: `∇ᵀu`, a vertex-indexed vector.
    pub fn gradient_adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.edges.len(), u.len())?;
        let mut out = vec![0.0; self.p];
        for (&(i, j), &ue) in self.edges.iter().zip(u) {
            out[i] += ue;
            out[j] -= ue;
        }
        Ok(out)
    }

    /// Number of edges whose endpoint values differ, compared exactly.
    pub fn gradient_support_size(&self, x: &[f64]) -> Result<usize> {
        check_len(self.p, x.len())?;
        Ok(self.edges.iter().filter(|&&(i, j)| x[i] != x[j]).count())
    }

    /// `‖∇x‖₁`.
    pub fn total_variation(&self, x: &[f64]) -> Result<f64> {
        check_len(self.p, x.len())?;
        Ok(self.edges.iter().map(|&(i, j)| (x[i] - x[j]).abs()).sum())
    }

    /// Connected pieces on which `x` is constant.
    pub fn induced_partition(&self, x: &[f64]) -> Result<Partition> {
        check_len(self.p, x.len())?;
        let mut uf = UnionFind::new(self.p);
        for &(i, j) in &self.edges {
            if x[i] == x[j] {
                uf.union(i, j);
            }
        }
        Ok(Partition::from_union_find(&mut uf, self.p))
    }
}

/// Chain `0 - 1 - … - (p-1)`.
pub fn line_graph(p: usize) -> Result<GraphTopology> {
    if p < 3 {
        return Err(ItaleError::InvalidSize(format!("line graph needs p >= 3, got {p}")));
    }
    GraphTopology::from_oriented_edges(p, (0..p - 1).map(|i| (i, i + 1)).collect())
}

/// `rows × cols` 4-neighbor lattice; vertex `(r, c)` has index `r * cols + c`.
pub fn lattice_graph(rows: usize, cols: usize) -> Result<GraphTopology> {
    if rows < 2 || cols < 2 {
        return Err(ItaleError::InvalidSize(format!("lattice needs both dimensions >= 2, got {rows}x{cols}")));
    }
    let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    let mut g = GraphTopology::from_oriented_edges(rows * cols, edges)?;
    g.lattice = Some((rows, cols));
    Ok(g)
}

/// Assignment of every vertex to a connected block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Block id per vertex, contiguous `0..blocks`, numbered by first appearance.
    pub labels: Vec<usize>,
    pub blocks: usize,
}

impl Partition {
    fn from_union_find(uf: &mut UnionFind, p: usize) -> Self {
        let mut root_to_block = vec![usize::MAX; p];
        let mut labels = Vec::with_capacity(p);
        let mut blocks = 0;
        for v in 0..p {
            let r = uf.find(v);
            if root_to_block[r] == usize::MAX {
                root_to_block[r] = blocks;
                blocks += 1;
            }
            labels.push(root_to_block[r]);
        }
        Partition { labels, blocks }
    }

    /// Number of edges joining different blocks.
    pub fn boundary_size(&self, topology: &GraphTopology) -> usize {
        topology.edges().iter().filter(|&&(i, j)| self.labels[i] != self.labels[j]).count()
    }

    /// Sizes of each block.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.blocks];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}
