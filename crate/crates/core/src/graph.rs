//! Immutable CSR storage for simple undirected graphs.

use std::collections::VecDeque;
use std::io::BufRead;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::rng::WalkRng;

/// Constant-time access in the adjacency model: degree, i-th neighbor and
/// uniform vertex sampling. Algorithms are generic over this trait so that a
/// [`CountingGraph`](crate::CountingGraph) can meter them.
pub trait Adjacency {
    fn num_vertices(&self) -> usize;
    fn num_edges(&self) -> usize;
    fn degree(&self, u: usize) -> usize;
    fn neighbor(&self, u: usize, i: usize) -> usize;
    /// Full neighbor slice. Counts as `degree(u)` neighbor queries.
    fn neighbors(&self, u: usize) -> &[u32];
    fn jump(&self, rng: &mut WalkRng) -> usize {
        rng.below(self.num_vertices())
    }
    /// One lazy step from `w` driven by a single random word: the top bit
    /// decides whether to move, the low 63 bits pick the neighbor. A move
    /// costs one degree and one neighbor query; staying costs nothing.
    #[inline]
    fn lazy_step_word(&self, w: usize, word: u64) -> usize {
        if word >> 63 == 0 {
            return w;
        }
        let d = self.degree(w);
        self.neighbor(w, pick(word, d))
    }
}

#[inline]
fn pick(word: u64, d: usize) -> usize {
    (((word << 1) as u128 * d as u128) >> 64) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    adjacency: Vec<u32>,
    /// External id of each dense vertex.
    ids: Vec<u64>,
    duplicates_dropped: usize,
    self_loops_dropped: usize,
}

impl Graph {
    /// Builds a graph on vertices `0..n` from an undirected edge list.
    /// Self-loops and repeated edges (in either orientation) are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let ids = (0..n as u64).collect();
        Self::assemble(n, edges, ids)
    }

    fn assemble(n: usize, edges: &[(usize, usize)], ids: Vec<u64>) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("{n} vertices exceed u32 ids")));
        }
        let mut self_loops = 0;
        let mut pairs = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                self_loops += 1;
                continue;
            }
            pairs.push((u as u32, v as u32));
            pairs.push((v as u32, u as u32));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        let duplicates = (before - pairs.len()) / 2;

        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &pairs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let adjacency = pairs.into_iter().map(|(_, v)| v).collect();
        Ok(Self {
            offsets,
            adjacency,
            ids,
            duplicates_dropped: duplicates,
            self_loops_dropped: self_loops,
        })
    }

    /// Parses a whitespace-separated edge list. Lines starting with `#` and
    /// blank lines are skipped; vertices are relabeled densely in order of
    /// first appearance. Ids that only occur in self-loops are not created.
    pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut dense: FxHashMap<u64, usize> = FxHashMap::default();
        let mut ids = Vec::new();
        let mut edges = Vec::new();
        let mut self_loops = 0;
        for (index, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let number = index + 1;
            let mut fields = trimmed.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u64> {
                let tok = tok.ok_or_else(|| Error::Parse {
                    line: number,
                    message: "expected two vertex ids".into(),
                })?;
                tok.parse::<u64>().map_err(|e| Error::Parse {
                    line: number,
                    message: format!("bad vertex id {tok:?}: {e}"),
                })
            };
            let a = parse(fields.next())?;
            let b = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: number,
                    message: "trailing tokens after edge".into(),
                });
            }
            if a == b {
                self_loops += 1;
                continue;
            }
            let mut intern = |id: u64| {
                *dense.entry(id).or_insert_with(|| {
                    ids.push(id);
                    ids.len() - 1
                })
            };
            let (u, v) = (intern(a), intern(b));
            edges.push((u, v));
        }
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut graph = Self::assemble(ids.len(), &edges, ids)?;
        graph.self_loops_dropped += self_loops;
        Ok(graph)
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        Self::load_edge_list(text.as_bytes())
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.adjacency.len() / 2
    }

    pub fn checked_degree(&self, u: usize) -> Result<usize> {
        if u >= self.n() {
            return Err(Error::VertexOutOfRange { vertex: u, n: self.n() });
        }
        Ok(self.offsets[u + 1] - self.offsets[u])
    }

    pub fn checked_neighbor(&self, u: usize, i: usize) -> Result<usize> {
        let degree = self.checked_degree(u)?;
        if i >= degree {
            return Err(Error::NeighborOutOfRange { vertex: u, index: i, degree });
        }
        Ok(self.adjacency[self.offsets[u] + i] as usize)
    }

    pub fn check_vertex(&self, u: usize) -> Result<()> {
        self.checked_degree(u).map(|_| ())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|u| self.degree(u)).collect()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n()).map(|u| self.degree(u)).min().unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn external_id(&self, u: usize) -> u64 {
        self.ids[u]
    }

    pub fn dense_id(&self, external: u64) -> Option<usize> {
        // Ids are usually the identity map; avoid a hash map for that case.
        if let Some(&id) = self.ids.get(external as usize) {
            if id == external {
                return Some(external as usize);
            }
        }
        self.ids.iter().position(|&id| id == external)
    }

    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates_dropped
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    /// Component label per vertex, labels in order of lowest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for root in 0..n {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = next;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    let v = v as usize;
                    if label[v] == usize::MAX {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    pub fn connected(&self, s: usize, t: usize) -> bool {
        let label = self.components();
        label[s] == label[t]
    }

    /// Subgraph induced by `vertices`; vertex `vertices[i]` becomes `i`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Graph> {
        let mut position = vec![usize::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            self.check_vertex(v)?;
            if position[v] != usize::MAX {
                return Err(Error::InvalidParameter(format!("vertex {v} listed twice")));
            }
            position[v] = i;
        }
        let mut edges = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for &w in self.neighbors(v) {
                let j = position[w as usize];
                if j != usize::MAX && i < j {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(vertices.len(), &edges)
    }

    /// Edge list text in the same format [`Graph::load_edge_list`] reads.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.m() * 12);
        out.push_str(&format!("# n={} m={}\n", self.n(), self.m()));
        for (u, v) in self.edges() {
            out.push_str(&format!("{} {}\n", self.ids[u], self.ids[v]));
        }
        out
    }
}

impl Adjacency for Graph {
    #[inline]
    fn num_vertices(&self) -> usize {
        self.n()
    }

    #[inline]
    fn num_edges(&self) -> usize {
        self.m()
    }

    #[inline]
    fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    #[inline]
    fn neighbor(&self, u: usize, i: usize) -> usize {
        self.adjacency[self.offsets[u] + i] as usize
    }

    #[inline]
    fn neighbors(&self, u: usize) -> &[u32] {
        &self.adjacency[self.offsets[u]..self.offsets[u + 1]]
    }

    // Same draw as the default, computed without a data-dependent branch.
    #[inline]
    fn lazy_step_word(&self, w: usize, word: u64) -> usize {
        let start = self.offsets[w];
        let d = self.offsets[w + 1] - start;
        if d == 0 {
            return w;
        }
        let target = self.adjacency[start + pick(word, d)] as usize;
        let moves = (word >> 63) as usize;
        w ^ ((w ^ target) & moves.wrapping_neg())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_edge() {
        let g = Graph::parse_edge_list("0 1").unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(1), 1);
    }

    #[test]
    fn duplicate_and_self_loop_dropped() {
        let g = Graph::parse_edge_list("0 1\n1 0\n0 0").unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
        assert_eq!(g.duplicates_dropped(), 1);
        assert_eq!(g.self_loops_dropped(), 1);
    }

    #[test]
    fn path_of_three() {
        let g = Graph::parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!((g.n(), g.m()), (3, 2));
        assert_eq!(g.checked_degree(1).unwrap(), 2);
        assert_eq!(g.checked_neighbor(1, 0).unwrap(), 0);
        assert_eq!(g.checked_neighbor(1, 1).unwrap(), 2);
    }

    #[test]
    fn complete_and_triangle_queries() {
        let k2 = Graph::parse_edge_list("0 1").unwrap();
        assert_eq!(k2.checked_neighbor(0, 0).unwrap(), 1);
        let k4 = Graph::parse_edge_list("0 1\n0 2\n0 3\n1 2\n1 3\n2 3").unwrap();
        assert!((0..4).all(|u| k4.degree(u) == 3));
        let tri = Graph::parse_edge_list("0 1\n1 2\n2 0").unwrap();
        assert_eq!(tri.checked_neighbor(2, 1).unwrap(), 1);
    }

    #[test]
    fn index_errors() {
        let g = Graph::parse_edge_list("0 1\n1 2").unwrap();
        assert!(matches!(g.checked_degree(3), Err(Error::VertexOutOfRange { vertex: 3, n: 3 })));
        assert!(matches!(g.checked_neighbor(0, 1), Err(Error::NeighborOutOfRange { .. })));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Graph::parse_edge_list("# header\n0 1\n1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = Graph::parse_edge_list("0 1\n2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(Graph::parse_edge_list("# only\n\n"), Err(Error::EmptyGraph)));
        assert!(matches!(Graph::parse_edge_list("3 3\n"), Err(Error::EmptyGraph)));
    }

    #[test]
    fn relabels_in_order_of_first_appearance() {
        let g = Graph::parse_edge_list("10 7\n7 3\n").unwrap();
        assert_eq!(g.external_id(0), 10);
        assert_eq!(g.external_id(1), 7);
        assert_eq!(g.external_id(2), 3);
        assert_eq!(g.dense_id(3), Some(2));
        assert_eq!(g.dense_id(4), None);
        let round = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(round.degrees(), g.degrees());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = Graph::parse_edge_list("0 1\n1 2\n2 3\n3 0").unwrap();
        let h = g.induced_subgraph(&[3, 0, 1]).unwrap();
        assert_eq!(h.m(), 2);
        assert!(h.has_edge(0, 1));
        assert!(h.has_edge(1, 2));
        assert!(!h.has_edge(0, 2));
    }

    #[test]
    fn connectivity() {
        let g = Graph::parse_edge_list("0 1\n2 3").unwrap();
        assert!(!g.is_connected());
        assert!(g.connected(0, 1));
        assert!(!g.connected(1, 2));
    }

    proptest! {
        #[test]
        fn csr_invariants(edges in proptest::collection::vec((0usize..30, 0usize..30), 1..120)) {
            let g = Graph::from_edges(30, &edges).unwrap();
            let total: usize = (0..g.n()).map(|u| g.degree(u)).sum();
            prop_assert_eq!(total, 2 * g.m());
            for u in 0..g.n() {
                let nb = g.neighbors(u);
                prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
                for &v in nb {
                    prop_assert!(v as usize != u);
                    prop_assert!(g.has_edge(v as usize, u));
                }
            }
        }
    }
}
