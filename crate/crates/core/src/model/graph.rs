use std::collections::{HashMap, VecDeque};

use rand::Rng;

use crate::{Error, Result};

/// Undirected simple graph with a fixed indexing of its directed edges.
///
/// Undirected edge `e = (a, b)` owns directed indices `2e` (`a -> b`) and
/// `2e + 1` (`b -> a`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    index: HashMap<(usize, usize), usize>,
    inputs: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        let mut index = HashMap::with_capacity(2 * edges.len());
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::Structure(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::Structure(format!("self-edge at node {a}")));
            }
            if index.insert((a, b), 2 * e).is_some() || index.insert((b, a), 2 * e + 1).is_some()
            {
                return Err(Error::Structure(format!("duplicate edge ({a}, {b})")));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        let mut incoming = vec![Vec::new(); n];
        for (&(from, to), &i) in &index {
            let _ = from;
            incoming[to].push(i);
        }
        incoming.iter_mut().for_each(|v| v.sort_unstable());
        let num_directed = 2 * edges.len();
        let mut inputs = Vec::with_capacity(num_directed);
        for i in 0..num_directed {
            let (v, u) = directed_pair(&edges, i);
            inputs.push(
                incoming[v]
                    .iter()
                    .copied()
                    .filter(|&k| directed_pair(&edges, k).0 != u)
                    .collect(),
            );
        }
        Ok(Self {
            n,
            edges,
            neighbors,
            index,
            inputs,
            incoming,
        })
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("a chain needs n >= 2 nodes, got {n}")));
        }
        Self::new(n, (0..n - 1).map(|i| (i, i + 1)).collect())
    }

    /// 4-connected `width x height` lattice; node `(i, j)` (column `i`,
    /// row `j`) has id `j * width + i`.
    pub fn grid2d(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::Config(format!(
                "a 2-D grid needs width, height >= 2, got {width}x{height}"
            )));
        }
        let mut edges = Vec::with_capacity(width * (height - 1) + height * (width - 1));
        for j in 0..height {
            for i in 0..width {
                let id = j * width + i;
                if i + 1 < width {
                    edges.push((id, id + 1));
                }
                if j + 1 < height {
                    edges.push((id, id + width));
                }
            }
        }
        Self::new(width * height, edges)
    }

    /// Uniform random recursive tree: node `i > 0` attaches to a uniformly
    /// chosen earlier node.
    pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("a tree needs at least one node".into()));
        }
        let edges = (1..n).map(|i| (rng.random_range(0..i), i)).collect();
        Self::new(n, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_directed(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// `(from, to)` of directed edge `i`.
    #[inline]
    pub fn directed_edge(&self, i: usize) -> (usize, usize) {
        directed_pair(&self.edges, i)
    }

    /// Index of directed edge `from -> to`.
    pub fn directed_index(&self, from: usize, to: usize) -> Option<usize> {
        self.index.get(&(from, to)).copied()
    }

    /// Undirected edge owning directed edge `i`, and whether `i` runs
    /// against the stored orientation.
    #[inline]
    pub fn undirected_of(&self, i: usize) -> (usize, bool) {
        (i / 2, i % 2 == 1)
    }

    /// Directed edges `w -> v`, `w in N(v) \ {u}`, feeding `v -> u`.
    #[inline]
    pub fn inputs(&self, i: usize) -> &[usize] {
        &self.inputs[i]
    }

    /// Directed edges `v -> u` for every neighbor `v` of `u`.
    #[inline]
    pub fn incoming(&self, u: usize) -> &[usize] {
        &self.incoming[u]
    }

    /// Hop distances from `src`; `usize::MAX` marks unreachable nodes.
    pub fn bfs(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.bfs(0).iter().all(|&d| d != usize::MAX)
    }

    pub fn is_tree(&self) -> bool {
        self.n > 0 && self.edges.len() == self.n - 1 && self.is_connected()
    }

    /// Longest shortest-path length over connected pairs.
    pub fn diameter(&self) -> usize {
        (0..self.n)
            .map(|s| {
                self.bfs(s)
                    .into_iter()
                    .filter(|&d| d != usize::MAX)
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }
}

#[inline]
fn directed_pair(edges: &[(usize, usize)], i: usize) -> (usize, usize) {
    let (a, b) = edges[i / 2];
    if i % 2 == 0 {
        (a, b)
    } else {
        (b, a)
    }
}
