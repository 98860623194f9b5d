//! Mixed graphs with directed arcs and undirected edges.
//!
//! A single [`MixedGraph`] type covers DAGs, PDAGs, CPDAGs, MPDAGs and
//! undirected chordal components. Vertices are dense indices `0..n`, and
//! every iteration runs in ascending vertex order so all algorithms built on
//! top are deterministic for a fixed input.

mod chordal;
mod dsep;
mod io;
mod meek;

use std::collections::VecDeque;
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::{Error, Result};

pub use chordal::{clique_number, is_chordal, is_perfect_elimination_order, max_cardinality_search};
pub use dsep::d_separated;
pub use io::GraphJson;
pub use meek::{consistent_extension, cpdag_of, meek_closure, v_structures, VStructure};

/// A permutation of `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexOrder(Vec<usize>);

impl VertexOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if seen[v] {
                return Err(Error::InvalidArgument(format!("vertex {v} appears twice in ordering")));
            }
            seen[v] = true;
        }
        Ok(Self(order))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    /// `positions()[v]` is the index of `v` in the ordering.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

/// One chain component of a mixed graph: the undirected subgraph it induces
/// (relabelled to `0..k`) together with the map back to parent vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainComponent {
    pub graph: MixedGraph,
    /// `vertices[i]` is the parent-graph vertex of local vertex `i`; ascending.
    pub vertices: Vec<usize>,
}

impl ChainComponent {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.vertices.len() == 1
    }
}

/// Partially directed graph over vertices `0..n`.
///
/// Each vertex keeps three neighbour sets (children, parents, undirected),
/// so adjacency queries are constant time. No pair of vertices is ever
/// joined by more than one mark.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MixedGraph {
    n: usize,
    children: Vec<FixedBitSet>,
    parents: Vec<FixedBitSet>,
    undirected: Vec<FixedBitSet>,
}

impl fmt::Debug for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixedGraph")
            .field("n", &self.n)
            .field("arcs", &self.arcs())
            .field("edges", &self.edges())
            .finish()
    }
}

impl MixedGraph {
    /// Graph on `n` vertices with no adjacencies.
    pub fn new(n: usize) -> Self {
        let empty = FixedBitSet::with_capacity(n);
        Self {
            n,
            children: vec![empty.clone(); n],
            parents: vec![empty.clone(); n],
            undirected: vec![empty; n],
        }
    }

    pub fn from_parts(n: usize, arcs: &[(usize, usize)], edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(u, v) in arcs {
            g.add_arc(u, v)?;
        }
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        Self::from_parts(n, arcs, &[])
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::from_parts(n, &[], edges)
    }

    /// Complete undirected graph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.insert_edge(u, v);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        for w in [u, v] {
            if w >= self.n {
                return Err(Error::VertexOutOfRange { vertex: w, n: self.n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        Ok(())
    }

    pub fn add_arc(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_pair(u, v)?;
        if self.adjacent(u, v) {
            return Err(Error::DuplicateAdjacency(u, v));
        }
        self.insert_arc(u, v);
        Ok(())
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_pair(u, v)?;
        if self.adjacent(u, v) {
            return Err(Error::DuplicateAdjacency(u, v));
        }
        self.insert_edge(u, v);
        Ok(())
    }

    /// Turns the undirected edge `u - v` into the arc `u -> v`.
    pub fn orient(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_pair(u, v)?;
        if !self.has_edge(u, v) {
            return Err(Error::MissingEdge(u, v));
        }
        self.orient_unchecked(u, v);
        Ok(())
    }

    /// Removes whatever mark joins `u` and `v`, if any.
    pub fn remove_adjacency(&mut self, u: usize, v: usize) {
        if u >= self.n || v >= self.n {
            return;
        }
        self.children[u].set(v, false);
        self.parents[v].set(u, false);
        self.children[v].set(u, false);
        self.parents[u].set(v, false);
        self.undirected[u].set(v, false);
        self.undirected[v].set(u, false);
    }

    pub(crate) fn insert_arc(&mut self, u: usize, v: usize) {
        self.children[u].insert(v);
        self.parents[v].insert(u);
    }

    pub(crate) fn insert_edge(&mut self, u: usize, v: usize) {
        self.undirected[u].insert(v);
        self.undirected[v].insert(u);
    }

    pub(crate) fn orient_unchecked(&mut self, u: usize, v: usize) {
        self.undirected[u].set(v, false);
        self.undirected[v].set(u, false);
        self.insert_arc(u, v);
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.children[u].contains(v)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.undirected[u].contains(v)
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        u < self.n
            && v < self.n
            && (self.children[u].contains(v) || self.parents[u].contains(v) || self.undirected[u].contains(v))
    }

    pub fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.children[v].ones()
    }

    pub fn parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parents[v].ones()
    }

    pub fn undirected_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.undirected[v].ones()
    }

    pub(crate) fn children_set(&self, v: usize) -> &FixedBitSet {
        &self.children[v]
    }

    pub(crate) fn parents_set(&self, v: usize) -> &FixedBitSet {
        &self.parents[v]
    }

    pub(crate) fn undirected_set(&self, v: usize) -> &FixedBitSet {
        &self.undirected[v]
    }

    /// All vertices joined to `v` by any mark.
    pub fn adjacency_set(&self, v: usize) -> FixedBitSet {
        let mut s = self.children[v].clone();
        s.union_with(&self.parents[v]);
        s.union_with(&self.undirected[v]);
        s
    }

    pub fn adjacents(&self, v: usize) -> Vec<usize> {
        self.adjacency_set(v).ones().collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.children[v].count_ones(..) + self.parents[v].count_ones(..) + self.undirected[v].count_ones(..)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Arcs `(tail, head)` in lexicographic order.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|u| self.children[u].ones().map(move |v| (u, v)))
            .collect()
    }

    /// Undirected edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|u| self.undirected[u].ones().filter(move |&v| v > u).map(move |v| (u, v)))
            .collect()
    }

    pub fn num_arcs(&self) -> usize {
        self.children.iter().map(|s| s.count_ones(..)).sum()
    }

    pub fn num_edges(&self) -> usize {
        self.undirected.iter().map(|s| s.count_ones(..)).sum::<usize>() / 2
    }

    pub fn is_undirected(&self) -> bool {
        self.num_arcs() == 0
    }

    pub fn is_fully_directed(&self) -> bool {
        self.num_edges() == 0
    }

    /// Kahn's algorithm over the arcs only, smallest ready vertex first.
    /// Returns `None` if the arcs contain a directed cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = (0..self.n).map(|v| self.parents[v].count_ones(..)).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in self.children[v].ones() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    pub fn has_directed_cycle(&self) -> bool {
        self.topological_order().is_none()
    }

    pub fn is_dag(&self) -> bool {
        self.is_fully_directed() && !self.has_directed_cycle()
    }

    /// Connectivity of the skeleton.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = FixedBitSet::with_capacity(self.n);
        let mut queue = VecDeque::from([0]);
        seen.insert(0);
        while let Some(v) = queue.pop_front() {
            for w in self.adjacency_set(v).ones() {
                if !seen.contains(w) {
                    seen.insert(w);
                    queue.push_back(w);
                }
            }
        }
        seen.count_ones(..) == self.n
    }

    /// Undirected, connected and chordal.
    pub fn is_uccg(&self) -> bool {
        self.is_undirected() && self.is_connected() && is_chordal(self).unwrap_or(false)
    }

    /// Same adjacencies, every mark undirected.
    pub fn skeleton(&self) -> MixedGraph {
        let mut g = MixedGraph::new(self.n);
        for u in 0..self.n {
            for v in self.adjacency_set(u).ones().filter(|&v| v > u) {
                g.insert_edge(u, v);
            }
        }
        g
    }

    /// Subgraph induced by `vertices` (ascending), relabelled to `0..k`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> MixedGraph {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut g = MixedGraph::new(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            for c in self.children[v].ones() {
                if local[c] != usize::MAX {
                    g.insert_arc(i, local[c]);
                }
            }
            for w in self.undirected[v].ones() {
                if local[w] != usize::MAX && local[w] > i {
                    g.insert_edge(i, local[w]);
                }
            }
        }
        g
    }

    /// Connected components of the undirected part, including singletons,
    /// ordered by their smallest vertex.
    pub fn chain_components(&self) -> Vec<ChainComponent> {
        let mut comp = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut i = 0;
            while i < members.len() {
                let v = members[i];
                i += 1;
                for w in self.undirected[v].ones() {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        members.push(w);
                    }
                }
            }
            members.sort_unstable();
            let mut g = MixedGraph::new(members.len());
            let mut local = std::collections::HashMap::with_capacity(members.len());
            for (i, &v) in members.iter().enumerate() {
                local.insert(v, i);
            }
            for (i, &v) in members.iter().enumerate() {
                for w in self.undirected[v].ones() {
                    let j = local[&w];
                    if j > i {
                        g.insert_edge(i, j);
                    }
                }
            }
            out.push(ChainComponent {
                graph: g,
                vertices: members,
            });
        }
        out
    }

    /// Applies `arcs` to `self`, orienting undirected edges where needed.
    /// Fails if an arc contradicts an existing mark or joins non-adjacent
    /// vertices.
    pub fn merge_arcs(&mut self, arcs: &[(usize, usize)]) -> Result<()> {
        for &(u, v) in arcs {
            if self.has_arc(u, v) {
                continue;
            }
            if self.has_edge(u, v) {
                self.orient_unchecked(u, v);
            } else if self.has_arc(v, u) {
                return Err(Error::InvalidArgument(format!("arc {u} -> {v} contradicts {v} -> {u}")));
            } else {
                return Err(Error::InvalidArgument(format!("{u} and {v} are not adjacent")));
            }
        }
        Ok(())
    }
}

/// Structural Hamming distance: the number of vertex pairs whose mark
/// differs (missing, `u -> v`, `v -> u` or `u - v`). A reversed arc counts once.
pub fn shd(a: &MixedGraph, b: &MixedGraph) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::VertexCountMismatch(a.n(), b.n()));
    }
    let mark = |g: &MixedGraph, u: usize, v: usize| -> u8 {
        if g.has_arc(u, v) {
            1
        } else if g.has_arc(v, u) {
            2
        } else if g.has_edge(u, v) {
            3
        } else {
            0
        }
    };
    let mut d = 0;
    for u in 0..a.n() {
        for v in u + 1..a.n() {
            if mark(a, u, v) != mark(b, u, v) {
                d += 1;
            }
        }
    }
    Ok(d)
}
