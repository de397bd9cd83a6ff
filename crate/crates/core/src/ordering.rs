//! Base mesh renumbering: reverse Cuthill-McKee (well ordered) and seeded
//! random permutations (badly ordered).
//!
//! Vertices are permuted; cells follow by sorting on their new vertex
//! indices and edges are re-derived.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::BaseMesh;

/// A bijection on `0..len`, stored as `forward[old] = new`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self {
            forward: (0..len).collect(),
        }
    }

    /// Validates that `forward` is a bijection.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; forward.len()];
        for &f in &forward {
            if f >= forward.len() || std::mem::replace(&mut seen[f], true) {
                return Err(Error::InvalidArgument(format!(
                    "not a permutation: {f} repeated or out of range"
                )));
            }
        }
        Ok(Self { forward })
    }

    /// Builds the permutation that places `order[new]` at position `new`.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let mut forward = vec![usize::MAX; order.len()];
        for (new, &old) in order.iter().enumerate() {
            if old >= order.len() || forward[old] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "not a permutation: {old} repeated or out of range"
                )));
            }
            forward[old] = new;
        }
        Ok(Self { forward })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// New index of `old`.
    pub fn apply(&self, old: usize) -> usize {
        self.forward[old]
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    /// `inverse[new] = old`.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.forward.len()];
        for (old, &new) in self.forward.iter().enumerate() {
            inv[new] = old;
        }
        inv
    }
}

/// Reverse Cuthill-McKee ordering of the vertex graph.
///
/// Each component is started from its unvisited vertex of minimum degree
/// (lowest index on ties); neighbours are queued by increasing degree, then
/// index. The concatenated Cuthill-McKee sequence is reversed at the end.
pub fn rcm_vertex_order(mesh: &BaseMesh) -> Permutation {
    let (offsets, nbrs) = mesh.vertex_graph();
    rcm_graph_order(&offsets, &nbrs)
}

/// Reverse Cuthill-McKee on a symmetric CSR graph.
pub fn rcm_graph_order(offsets: &[usize], nbrs: &[usize]) -> Permutation {
    let n = offsets.len().saturating_sub(1);
    let degree = |v: usize| offsets[v + 1] - offsets[v];

    // candidate starts sorted by (degree, index)
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&v| (degree(v), v));

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut scratch = Vec::new();
    for &s in &starts {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            scratch.clear();
            scratch.extend(
                nbrs[offsets[v]..offsets[v + 1]]
                    .iter()
                    .copied()
                    .filter(|&w| !visited[w]),
            );
            scratch.sort_by_key(|&w| (degree(w), w));
            for &w in &scratch {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    Permutation::from_order(&order).expect("BFS visits every vertex once")
}

/// Uniform random permutation of `0..count`, reproducible from `seed`.
///
/// The generator is ChaCha8 (`rand_chacha`) seeded with
/// `ChaCha8Rng::seed_from_u64(seed)`. The shuffle is Fisher-Yates from the
/// back: for `i` in `(1..count).rev()`, draw `x = next_u64()` and swap
/// position `i` with `j = (x * (i + 1)) >> 64` (128-bit product). The
/// returned permutation maps `old → new` where the shuffled array holds
/// the old indices in new order.
pub fn random_order(count: usize, seed: u64) -> Permutation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..count).collect();
    for i in (1..count).rev() {
        let x = rng.next_u64();
        let j = ((x as u128 * (i as u128 + 1)) >> 64) as usize;
        order.swap(i, j);
    }
    Permutation::from_order(&order).expect("shuffle preserves the permutation property")
}

/// Renumbers the vertices of `mesh` with `vertex_perm`.
///
/// Cells are sorted by their new vertex indices in ascending order
/// (smallest, then second smallest, then largest) and keep their local
/// vertex order; edges are re-derived.
pub fn apply_ordering(mesh: &BaseMesh, vertex_perm: &Permutation) -> Result<BaseMesh> {
    if vertex_perm.len() != mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "permutation has length {} but the mesh has {} vertices",
            vertex_perm.len(),
            mesh.num_vertices()
        )));
    }
    let mut coords = vec![[0.0; 2]; mesh.num_vertices()];
    for (old, &xy) in mesh.coords().iter().enumerate() {
        coords[vertex_perm.apply(old)] = xy;
    }
    let mut cells: Vec<([usize; 3], [usize; 3])> = mesh
        .cell_vertices()
        .iter()
        .map(|tri| {
            let renumbered = tri.map(|v| vertex_perm.apply(v));
            let mut key = renumbered;
            key.sort_unstable();
            (key, renumbered)
        })
        .collect();
    cells.sort_unstable_by_key(|&(key, _)| key);
    BaseMesh::new(coords, cells.into_iter().map(|(_, tri)| tri).collect())
}

/// Base mesh ordering used by experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderingKind {
    Rcm,
    Random,
}

impl OrderingKind {
    /// Vertex permutation of this kind for `mesh`.
    pub fn permutation(self, mesh: &BaseMesh, seed: u64) -> Permutation {
        match self {
            OrderingKind::Rcm => rcm_vertex_order(mesh),
            OrderingKind::Random => random_order(mesh.num_vertices(), seed),
        }
    }

    pub fn reorder(self, mesh: &BaseMesh, seed: u64) -> Result<BaseMesh> {
        apply_ordering(mesh, &self.permutation(mesh, seed))
    }

    pub fn name(self) -> &'static str {
        match self {
            OrderingKind::Rcm => "rcm",
            OrderingKind::Random => "random",
        }
    }
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rcm" => Ok(OrderingKind::Rcm),
            "random" => Ok(OrderingKind::Random),
            other => Err(Error::InvalidArgument(format!("unknown ordering `{other}`"))),
        }
    }
}

/// Maximum `|new(a) - new(b)|` over the vertex graph edges.
pub fn vertex_bandwidth(mesh: &BaseMesh) -> usize {
    mesh.edge_vertices()
        .iter()
        .map(|&[a, b]| a.abs_diff(b))
        .max()
        .unwrap_or(0)
}
