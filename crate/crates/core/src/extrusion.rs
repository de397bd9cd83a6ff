//! Extruded meshes: a base mesh replicated over `λ` vertical intervals.
//!
//! Extruded entities are never stored. They are classified by an
//! [`ExtrudedEntityType`] `(d₁, d₂)` and counted in closed form; their data
//! is reached through the numbering in [`crate::fspace`].

use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::BaseMesh;

/// Tensor-product entity type: horizontal dimension `d₁ ∈ {0,1,2}` times
/// vertical dimension `d₂ ∈ {0,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtrudedEntityType {
    horiz_dim: usize,
    vert_dim: usize,
}

impl ExtrudedEntityType {
    /// All six types in `(d₁, d₂)` lexicographic order.
    pub const ALL: [Self; 6] = [
        Self::raw(0, 0),
        Self::raw(0, 1),
        Self::raw(1, 0),
        Self::raw(1, 1),
        Self::raw(2, 0),
        Self::raw(2, 1),
    ];

    const fn raw(horiz_dim: usize, vert_dim: usize) -> Self {
        Self {
            horiz_dim,
            vert_dim,
        }
    }

    pub fn new(horiz_dim: usize, vert_dim: usize) -> Result<Self> {
        if horiz_dim > 2 || vert_dim > 1 {
            return Err(Error::InvalidArgument(format!(
                "no extruded entity type ({horiz_dim},{vert_dim})"
            )));
        }
        Ok(Self::raw(horiz_dim, vert_dim))
    }

    pub fn horiz_dim(self) -> usize {
        self.horiz_dim
    }

    pub fn vert_dim(self) -> usize {
        self.vert_dim
    }

    /// Topological dimension of the extruded entity.
    pub fn dim(self) -> usize {
        self.horiz_dim + self.vert_dim
    }

    /// Position in [`Self::ALL`].
    pub fn index(self) -> usize {
        2 * self.horiz_dim + self.vert_dim
    }
}

impl fmt::Display for ExtrudedEntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.horiz_dim, self.vert_dim)
    }
}

/// A base mesh extruded over `layers` uniform intervals of `layer_height`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrudedMesh {
    base: BaseMesh,
    layers: usize,
    layer_height: f64,
}

impl ExtrudedMesh {
    pub fn new(base: BaseMesh, layers: usize, layer_height: f64) -> Result<Self> {
        if layers == 0 {
            return Err(Error::InvalidArgument("layer count must be at least 1".into()));
        }
        if !(layer_height > 0.0 && layer_height.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "layer height must be positive, got {layer_height}"
            )));
        }
        Ok(Self {
            base,
            layers,
            layer_height,
        })
    }

    /// Extrusion to unit height: `layer_height = 1/λ`.
    pub fn unit_height(base: BaseMesh, layers: usize) -> Result<Self> {
        Self::new(base, layers, 1.0 / layers.max(1) as f64)
    }

    pub fn base(&self) -> &BaseMesh {
        &self.base
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn layer_height(&self) -> f64 {
        self.layer_height
    }

    /// Number of vertex levels, `λ + 1`.
    pub fn levels(&self) -> usize {
        self.layers + 1
    }

    /// `N_{d₁} · (λ + 1 − d₂)`.
    pub fn entity_count(&self, t: ExtrudedEntityType) -> usize {
        self.base.num_entities(t.horiz_dim) * (self.layers + 1 - t.vert_dim)
    }

    /// Number of extruded cells, `N₂ · λ`.
    pub fn num_cells(&self) -> usize {
        self.entity_count(ExtrudedEntityType::raw(2, 1))
    }
}

/// Vertex coordinates of an extrusion, column-innermost.
///
/// For base vertex `i` and level `l ∈ 0..=λ` the 3-vector
/// `(x_i, y_i, l·h)` occupies `out[3·(i·(λ+1) + l)..][..3]`. This is the
/// numbering the coordinate space `δ((0,0)) = 3` receives.
pub fn extrude_coordinates(base_coords: &[[f64; 2]], layers: usize, layer_height: f64) -> Vec<f64> {
    let levels = layers + 1;
    let mut out = Vec::with_capacity(3 * base_coords.len() * levels);
    for &[x, y] in base_coords {
        for l in 0..levels {
            out.extend_from_slice(&[x, y, l as f64 * layer_height]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_unit_square_mesh, single_triangle};

    #[test]
    fn single_prism_entities() {
        let m = ExtrudedMesh::new(single_triangle(), 1, 1.0).unwrap();
        let counts: Vec<usize> = ExtrudedEntityType::ALL
            .iter()
            .map(|&t| m.entity_count(t))
            .collect();
        assert_eq!(counts, vec![6, 3, 6, 3, 2, 1]);
        // 6 vertices, 9 edges, 5 faces, 1 cell
        let by_dim = |d: usize| -> usize {
            ExtrudedEntityType::ALL
                .iter()
                .filter(|t| t.dim() == d)
                .map(|&t| m.entity_count(t))
                .sum()
        };
        assert_eq!([by_dim(0), by_dim(1), by_dim(2), by_dim(3)], [6, 9, 5, 1]);
    }

    #[test]
    fn counts_with_four_layers() {
        let m = ExtrudedMesh::new(single_triangle(), 4, 0.25).unwrap();
        assert_eq!(m.entity_count(ExtrudedEntityType::new(0, 0).unwrap()), 15);
        assert_eq!(m.entity_count(ExtrudedEntityType::new(2, 1).unwrap()), 4);
    }

    #[test]
    fn fencepost_identity() {
        let m = ExtrudedMesh::new(generate_unit_square_mesh(3).unwrap(), 7, 1.0).unwrap();
        for d in 0..3 {
            let horiz = m.entity_count(ExtrudedEntityType::new(d, 0).unwrap());
            let vert = m.entity_count(ExtrudedEntityType::new(d, 1).unwrap());
            assert_eq!(horiz - vert, m.base().num_entities(d));
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(ExtrudedEntityType::new(3, 0).is_err());
        assert!(ExtrudedEntityType::new(0, 2).is_err());
        assert!(ExtrudedMesh::new(single_triangle(), 0, 1.0).is_err());
        assert!(ExtrudedMesh::new(single_triangle(), 1, 0.0).is_err());
    }

    #[test]
    fn coordinate_column() {
        let c = extrude_coordinates(&[[0.5, 0.5]], 2, 0.5);
        assert_eq!(c, vec![0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn unit_cube_vertices() {
        let base = generate_unit_square_mesh(1).unwrap();
        let c = extrude_coordinates(base.coords(), 1, 1.0);
        assert_eq!(c.len(), 3 * base.num_vertices() * 2);
        let mut pts: Vec<[i64; 3]> = c
            .chunks(3)
            .map(|p| [p[0] as i64, p[1] as i64, p[2] as i64])
            .collect();
        pts.sort_unstable();
        let mut cube = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    cube.push([x, y, z]);
                }
            }
        }
        assert_eq!(pts, cube);
    }
}
