//! Unstructured triangular base meshes.
//!
//! A [`BaseMesh`] stores the cell→vertex connectivity together with the
//! derived edges. Entities are addressed as `(dim, index)` pairs, see
//! [`EntityId`]. Local conventions:
//!
//! * `cell_edges[c][k]` is the edge opposite local vertex `k` of cell `c`,
//!   i.e. the edge joining local vertices `(k + 1) % 3` and `(k + 2) % 3`.
//! * Edges are numbered lexicographically by their sorted vertex pair.

use crate::error::{Error, Result};

pub mod io;

pub use io::{load_mesh, MeshFormat};

/// Topological dimension of the base mesh.
pub const BASE_DIM: usize = 2;

/// A base mesh entity `(dim, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId {
    pub dim: usize,
    pub index: usize,
}

impl EntityId {
    pub const fn new(dim: usize, index: usize) -> Self {
        Self { dim, index }
    }

    pub const fn vertex(index: usize) -> Self {
        Self::new(0, index)
    }

    pub const fn edge(index: usize) -> Self {
        Self::new(1, index)
    }

    pub const fn cell(index: usize) -> Self {
        Self::new(2, index)
    }
}

/// Immutable 2D triangular mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMesh {
    coords: Vec<[f64; 2]>,
    cell_vertices: Vec<[usize; 3]>,
    edge_vertices: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
}

impl BaseMesh {
    /// Builds a mesh from vertex coordinates and cell→vertex triples,
    /// deriving the edges.
    pub fn new(coords: Vec<[f64; 2]>, cell_vertices: Vec<[usize; 3]>) -> Result<Self> {
        let (edge_vertices, cell_edges) = derive_edges(&cell_vertices, coords.len())?;
        Ok(Self {
            coords,
            cell_vertices,
            edge_vertices,
            cell_edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_vertices.len()
    }

    /// `N_d` for `d` in `0..=2`.
    pub fn num_entities(&self, dim: usize) -> usize {
        match dim {
            0 => self.num_vertices(),
            1 => self.num_edges(),
            2 => self.num_cells(),
            _ => 0,
        }
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn cell_vertices(&self) -> &[[usize; 3]] {
        &self.cell_vertices
    }

    pub fn edge_vertices(&self) -> &[[usize; 2]] {
        &self.edge_vertices
    }

    pub fn cell_edges(&self) -> &[[usize; 3]] {
        &self.cell_edges
    }

    /// Area of a base cell.
    pub fn cell_area(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cell_vertices[cell].map(|v| self.coords[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
    }

    pub fn contains(&self, v: EntityId) -> bool {
        v.dim <= BASE_DIM && v.index < self.num_entities(v.dim)
    }

    /// `Adj_{d1,d2}(v)`: the entities of dimension `d2` adjacent to `v`.
    ///
    /// `(2,0)`, `(2,1)` and `(1,0)` are read from storage in local order.
    /// The inverse relations `(0,1)`, `(0,2)`, `(1,2)` are computed on demand
    /// and returned in ascending index order; `(2,2)` yields the cells across
    /// each local edge in edge order and `(0,0)` the vertices sharing an edge
    /// in ascending order. `(1,1)` is not derived.
    pub fn adjacency(&self, d1: usize, d2: usize, v: EntityId) -> Result<Vec<EntityId>> {
        if v.dim != d1 {
            return Err(Error::InvalidArgument(format!(
                "entity {v:?} does not have dimension {d1}"
            )));
        }
        if !self.contains(v) {
            return Err(Error::InvalidArgument(format!("entity {v:?} out of range")));
        }
        let i = v.index;
        let out = match (d1, d2) {
            (2, 0) => self.cell_vertices[i].iter().map(|&x| EntityId::vertex(x)).collect(),
            (2, 1) => self.cell_edges[i].iter().map(|&x| EntityId::edge(x)).collect(),
            (1, 0) => self.edge_vertices[i].iter().map(|&x| EntityId::vertex(x)).collect(),
            (1, 2) => (0..self.num_cells())
                .filter(|&c| self.cell_edges[c].contains(&i))
                .map(EntityId::cell)
                .collect(),
            (0, 1) => (0..self.num_edges())
                .filter(|&e| self.edge_vertices[e].contains(&i))
                .map(EntityId::edge)
                .collect(),
            (0, 2) => (0..self.num_cells())
                .filter(|&c| self.cell_vertices[c].contains(&i))
                .map(EntityId::cell)
                .collect(),
            (0, 0) => {
                let mut nbrs: Vec<usize> = self
                    .edge_vertices
                    .iter()
                    .filter(|e| e.contains(&i))
                    .map(|e| if e[0] == i { e[1] } else { e[0] })
                    .collect();
                nbrs.sort_unstable();
                nbrs.into_iter().map(EntityId::vertex).collect()
            }
            (2, 2) => {
                let mut out = Vec::with_capacity(3);
                for &e in &self.cell_edges[i] {
                    for c in self.adjacency(1, 2, EntityId::edge(e))? {
                        if c.index != i {
                            out.push(c);
                        }
                    }
                }
                out
            }
            _ => return Err(Error::NotDerived(d1, d2)),
        };
        Ok(out)
    }

    /// CSR vertex→cell incidence: `(offsets, cells)`.
    pub fn vertex_cells(&self) -> (Vec<usize>, Vec<usize>) {
        let mut offsets = vec![0usize; self.num_vertices() + 1];
        for cell in &self.cell_vertices {
            for &v in cell {
                offsets[v + 1] += 1;
            }
        }
        for i in 0..self.num_vertices() {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut cells = vec![0usize; offsets[self.num_vertices()]];
        for (c, cell) in self.cell_vertices.iter().enumerate() {
            for &v in cell {
                cells[fill[v]] = c;
                fill[v] += 1;
            }
        }
        (offsets, cells)
    }

    /// CSR vertex→vertex graph through edges: `(offsets, neighbours)`,
    /// neighbours sorted ascending.
    pub fn vertex_graph(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.num_vertices();
        let mut offsets = vec![0usize; n + 1];
        for &[a, b] in &self.edge_vertices {
            offsets[a + 1] += 1;
            offsets[b + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut nbrs = vec![0usize; offsets[n]];
        for &[a, b] in &self.edge_vertices {
            nbrs[fill[a]] = b;
            fill[a] += 1;
            nbrs[fill[b]] = a;
            fill[b] += 1;
        }
        for v in 0..n {
            nbrs[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        (offsets, nbrs)
    }
}

/// Derives the unique edges of a triangle mesh.
///
/// Returns `(edge_vertices, cell_edges)`; edges are sorted lexicographically
/// by `(min vertex, max vertex)` and `cell_edges[c][k]` is opposite local
/// vertex `k`.
pub fn derive_edges(
    cell_vertices: &[[usize; 3]],
    num_vertices: usize,
) -> Result<(Vec<[usize; 2]>, Vec<[usize; 3]>)> {
    let mut keys: Vec<([usize; 3], usize)> = Vec::with_capacity(cell_vertices.len());
    for (c, tri) in cell_vertices.iter().enumerate() {
        if let Some(&v) = tri.iter().find(|&&v| v >= num_vertices) {
            return Err(Error::InvalidMesh(format!(
                "cell {c} references vertex {v} but the mesh has {num_vertices} vertices"
            )));
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(Error::InvalidMesh(format!(
                "cell {c} has repeated vertices {tri:?}"
            )));
        }
        let mut key = *tri;
        key.sort_unstable();
        keys.push((key, c));
    }
    keys.sort_unstable();
    if let Some(w) = keys.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidMesh(format!(
            "cell {} duplicates the vertex set {:?}",
            w[1].1, w[1].0
        )));
    }
    drop(keys);

    // (min, max, 3 * cell + local side)
    let mut sides: Vec<(usize, usize, usize)> = Vec::with_capacity(3 * cell_vertices.len());
    for (c, tri) in cell_vertices.iter().enumerate() {
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            sides.push((a.min(b), a.max(b), 3 * c + k));
        }
    }
    sides.sort_unstable();

    let mut edge_vertices: Vec<[usize; 2]> = Vec::new();
    let mut cell_edges = vec![[usize::MAX; 3]; cell_vertices.len()];
    let mut multiplicity = 0;
    for (s, &(a, b, side)) in sides.iter().enumerate() {
        let new_edge = s == 0 || (sides[s - 1].0, sides[s - 1].1) != (a, b);
        if new_edge {
            edge_vertices.push([a, b]);
            multiplicity = 0;
        }
        multiplicity += 1;
        if multiplicity > 2 {
            return Err(Error::InvalidMesh(format!(
                "edge ({a},{b}) is shared by more than two cells"
            )));
        }
        cell_edges[side / 3][side % 3] = edge_vertices.len() - 1;
    }
    Ok((edge_vertices, cell_edges))
}

/// Structured triangulation of the unit square with `n × n` squares split
/// along their `(0,0)-(1,1)` diagonal, stored as an unstructured mesh.
///
/// Vertices are numbered row by row; each square contributes the triangles
/// `[v00, v10, v11]` then `[v00, v11, v01]`.
pub fn generate_unit_square_mesh(n: usize) -> Result<BaseMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "unit square mesh needs at least one subdivision".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let mut coords = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = j * (n + 1) + i;
            let v10 = v00 + 1;
            let v01 = v00 + n + 1;
            let v11 = v01 + 1;
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    BaseMesh::new(coords, cells)
}

/// One reference triangle with vertices `(0,0), (1,0), (0,1)`.
pub fn single_triangle() -> BaseMesh {
    BaseMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])
        .expect("fixture is valid")
}

/// The unit square split into the cells `[0,1,2]` and `[1,2,3]`, sharing
/// the edge `(1,2)`.
pub fn two_triangles() -> BaseMesh {
    BaseMesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
        vec![[0, 1, 2], [1, 2, 3]],
    )
    .expect("fixture is valid")
}
