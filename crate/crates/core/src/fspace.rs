//! Degree-of-freedom layouts and the vertical-innermost numbering.
//!
//! A [`DofLayout`] gives `δ((d₁,d₂))`, the number of DoFs on each extruded
//! entity type. [`number_dofs`] walks the base entities in mesh order and
//! numbers each entity column bottom to top, so vertically adjacent
//! entities receive adjacent numbers. A [`FunctionSpace`] keeps only the
//! first DoF of every column, the explicit stencil list of the bottom
//! layer of each cell column, and a constant per-slot vertical offset.
//!
//! Stencil slot order for a cell: local base entities (vertices 0,1,2,
//! edges 0,1,2, then the cell), and for each of them the DoFs of the
//! horizontal entity at level `l`, the vertical entity between `l` and
//! `l+1`, then the horizontal entity at level `l+1`. Within an entity,
//! DoFs appear in numbering order.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extrusion::{ExtrudedEntityType, ExtrudedMesh};
use crate::mesh::EntityId;

/// One-dimensional or triangular element family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    CG1,
    DG0,
    DG1,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::CG1, Family::DG0, Family::DG1];

    /// DoFs this family places on a triangle entity of dimension `d`.
    pub fn horizontal_dofs(self, d: usize) -> usize {
        match (self, d) {
            (Family::CG1, 0) => 1,
            (Family::DG0, 2) => 1,
            (Family::DG1, 2) => 3,
            _ => 0,
        }
    }

    /// DoFs this family places on an interval entity of dimension `d`.
    pub fn vertical_dofs(self, d: usize) -> usize {
        match (self, d) {
            (Family::CG1, 0) => 1,
            (Family::DG0, 1) => 1,
            (Family::DG1, 1) => 2,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::CG1 => "CG1",
            Family::DG0 => "DG0",
            Family::DG1 => "DG1",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CG1" => Ok(Family::CG1),
            "DG0" => Ok(Family::DG0),
            "DG1" => Ok(Family::DG1),
            other => Err(Error::InvalidArgument(format!("unknown element `{other}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `δ((d₁,d₂))` for one discretisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofLayout {
    delta: [usize; 6],
    name: String,
    elements: Option<(Family, Family)>,
}

impl DofLayout {
    /// A layout from an explicit `δ` table indexed by
    /// [`ExtrudedEntityType::index`].
    pub fn custom(name: impl Into<String>, delta: [usize; 6]) -> Result<Self> {
        if delta.iter().all(|&d| d == 0) {
            return Err(Error::InvalidArgument(
                "a layout needs at least one DoF-carrying entity type".into(),
            ));
        }
        Ok(Self {
            delta,
            name: name.into(),
            elements: None,
        })
    }

    /// The tensor-product layout `horiz × vert`.
    pub fn builtin(horiz: Family, vert: Family) -> Self {
        let mut delta = [0; 6];
        for t in ExtrudedEntityType::ALL {
            delta[t.index()] =
                horiz.horizontal_dofs(t.horiz_dim()) * vert.vertical_dofs(t.vert_dim());
        }
        Self {
            delta,
            name: format!("{horiz}x{vert}"),
            elements: Some((horiz, vert)),
        }
    }

    /// Parses `"CG1xDG0"` style labels (`×` is accepted too).
    pub fn parse(label: &str) -> Result<Self> {
        let (h, v) = label
            .split_once(['x', 'X', '×'])
            .ok_or_else(|| Error::InvalidArgument(format!("unknown layout `{label}`")))?;
        Ok(Self::builtin(h.parse()?, v.parse()?))
    }

    /// All nine builtin layouts, horizontal family outermost.
    pub fn all_builtin() -> Vec<Self> {
        let mut out = Vec::with_capacity(9);
        for h in Family::ALL {
            for v in Family::ALL {
                out.push(Self::builtin(h, v));
            }
        }
        out
    }

    /// Vertex coordinates: three values per vertex.
    pub fn coordinates() -> Self {
        Self::custom("coords", [3, 0, 0, 0, 0, 0]).expect("nonzero")
    }

    pub fn delta(&self, t: ExtrudedEntityType) -> usize {
        self.delta[t.index()]
    }

    /// `δ((d,d₂))` without constructing the type.
    pub fn delta_at(&self, d: usize, d2: usize) -> usize {
        self.delta[2 * d + d2]
    }

    /// Vertical offset for entities over base dimension `d`:
    /// `δ((d,0)) + δ((d,1))`.
    pub fn column_stride(&self, d: usize) -> usize {
        self.delta_at(d, 0) + self.delta_at(d, 1)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> Option<(Family, Family)> {
        self.elements
    }

    /// DoFs in the closure of one prism cell.
    pub fn dofs_per_cell(&self) -> usize {
        local_slots(self).len()
    }
}

impl fmt::Display for DofLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Result of numbering: the first DoF of every entity column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Numbering {
    /// `dof_origin[d][i]` is the first DoF of the column over `(d, i)`.
    pub dof_origin: [Vec<usize>; 3],
    pub total_dofs: usize,
}

/// Numbers the DoFs of `layout` on `mesh`.
///
/// For every base entity in mesh order (vertices, edges, cells) and every
/// layer `l` in `0..λ`, the next `δ((d,0))` numbers go to the horizontal
/// entity at level `l` and the next `δ((d,1))` to the vertical entity above
/// it; the top level's `δ((d,0))` numbers close the column.
pub fn number_dofs(mesh: &ExtrudedMesh, layout: &DofLayout) -> Numbering {
    let base = mesh.base();
    let mut c = 0usize;
    let mut dof_origin: [Vec<usize>; 3] = Default::default();
    for (d, origin) in dof_origin.iter_mut().enumerate() {
        let n = base.num_entities(d);
        origin.reserve_exact(n);
        let horizontal = layout.delta_at(d, 0);
        let vertical = layout.delta_at(d, 1);
        for _ in 0..n {
            origin.push(c);
            for _ in 0..mesh.layers() {
                c += horizontal;
                c += vertical;
            }
            c += horizontal;
        }
    }
    Numbering {
        dof_origin,
        total_dofs: c,
    }
}

/// Closed form of the DoF count:
/// `Σ_(d,i) [λ·(δ((d,0)) + δ((d,1))) + δ((d,0))]`.
pub fn total_dofs_closed_form(mesh: &ExtrudedMesh, layout: &DofLayout) -> usize {
    (0..3)
        .map(|d| {
            mesh.base().num_entities(d)
                * (mesh.layers() * layout.column_stride(d) + layout.delta_at(d, 0))
        })
        .sum()
}

/// One stencil slot of a cell column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    /// Extruded entity type the DoF lives on.
    pub entity: ExtrudedEntityType,
    /// Index of the base entity among the cell's local entities of its
    /// dimension (vertex/edge `0..3`, cell `0`).
    pub local: usize,
    /// 0 for level `l` (or the interval above it), 1 for level `l + 1`.
    pub level: usize,
    /// DoF index within the entity.
    pub component: usize,
}

/// Slot sequence of one cell stencil for `layout`.
pub fn local_slots(layout: &DofLayout) -> Vec<Slot> {
    const LOCAL_COUNT: [usize; 3] = [3, 3, 1];
    let mut slots = Vec::new();
    for (d, &count) in LOCAL_COUNT.iter().enumerate() {
        for local in 0..count {
            for (d2, level) in [(0, 0), (1, 0), (0, 1)] {
                let entity = ExtrudedEntityType::new(d, d2).expect("valid pair");
                for component in 0..layout.delta(entity) {
                    slots.push(Slot {
                        entity,
                        local,
                        level,
                        component,
                    });
                }
            }
        }
    }
    slots
}

/// Bottom-layer explicit maps for every base cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMap {
    pub slots: Vec<Slot>,
    /// `values[c * arity .. (c + 1) * arity]` is the map of cell `c`.
    pub values: Vec<usize>,
}

impl CellMap {
    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.arity();
        &self.values[c * k..(c + 1) * k]
    }
}

/// DoFs of the `l = 0` stencil application of every base cell.
pub fn build_cell_map(mesh: &ExtrudedMesh, layout: &DofLayout, numbering: &Numbering) -> CellMap {
    let base = mesh.base();
    let slots = local_slots(layout);
    let k = slots.len();
    let mut values = Vec::with_capacity(k * base.num_cells());
    for c in 0..base.num_cells() {
        let vertices = &base.cell_vertices()[c];
        let edges = &base.cell_edges()[c];
        for s in &slots {
            let d = s.entity.horiz_dim();
            let entity = match d {
                0 => vertices[s.local],
                1 => edges[s.local],
                _ => c,
            };
            let below = if s.entity.vert_dim() == 1 {
                layout.delta_at(d, 0)
            } else {
                0
            };
            values.push(
                numbering.dof_origin[d][entity]
                    + s.level * layout.column_stride(d)
                    + below
                    + s.component,
            );
        }
    }
    CellMap { slots, values }
}

/// Per-slot vertical offsets: `δ((d,0)) + δ((d,1))` for the base
/// dimension `d` of each slot's entity.
pub fn compute_offsets(layout: &DofLayout, slots: &[Slot]) -> Vec<usize> {
    slots
        .iter()
        .map(|s| layout.column_stride(s.entity.horiz_dim()))
        .collect()
}

/// A numbered layout on an extruded mesh.
#[derive(Debug)]
pub struct FunctionSpace {
    mesh: Arc<ExtrudedMesh>,
    layout: DofLayout,
    numbering: Numbering,
    cell_map: CellMap,
    offsets: Vec<usize>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<ExtrudedMesh>, layout: DofLayout) -> Self {
        let numbering = number_dofs(&mesh, &layout);
        let cell_map = build_cell_map(&mesh, &layout, &numbering);
        let offsets = compute_offsets(&layout, &cell_map.slots);
        Self {
            mesh,
            layout,
            numbering,
            cell_map,
            offsets,
        }
    }

    pub fn mesh(&self) -> &Arc<ExtrudedMesh> {
        &self.mesh
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn total_dofs(&self) -> usize {
        self.numbering.total_dofs
    }

    pub fn numbering(&self) -> &Numbering {
        &self.numbering
    }

    /// First DoF of the column over base entity `v`.
    pub fn dof_origin(&self, v: EntityId) -> usize {
        self.numbering.dof_origin[v.dim][v.index]
    }

    pub fn cell_map(&self) -> &CellMap {
        &self.cell_map
    }

    pub fn slots(&self) -> &[Slot] {
        &self.cell_map.slots
    }

    /// Stencil size `k`.
    pub fn arity(&self) -> usize {
        self.cell_map.arity()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// DoFs of the extruded entity of type `t` over base entity `i` at
    /// level (or interval) `l`.
    pub fn entity_dofs(&self, t: ExtrudedEntityType, i: usize, l: usize) -> Result<std::ops::Range<usize>> {
        let d = t.horiz_dim();
        if i >= self.mesh.base().num_entities(d) || l > self.mesh.layers() - t.vert_dim() {
            return Err(Error::InvalidArgument(format!(
                "no entity {t} at ({i},{l})"
            )));
        }
        let below = if t.vert_dim() == 1 {
            self.layout.delta_at(d, 0)
        } else {
            0
        };
        let start = self.numbering.dof_origin[d][i] + l * self.layout.column_stride(d) + below;
        Ok(start..start + self.layout.delta(t))
    }

    /// DoFs of the `n`-th stencil application up the column of `cell`:
    /// `dof_j + n·offset_j`.
    pub fn dofs_at_layer(&self, cell: usize, n: usize) -> Result<Vec<usize>> {
        if cell >= self.mesh.base().num_cells() {
            return Err(Error::InvalidArgument(format!("cell {cell} out of range")));
        }
        if n >= self.mesh.layers() {
            return Err(Error::InvalidArgument(format!(
                "layer {n} out of range for {} layers",
                self.mesh.layers()
            )));
        }
        Ok(self
            .cell_map
            .cell(cell)
            .iter()
            .zip(&self.offsets)
            .map(|(&dof, &off)| dof + n * off)
            .collect())
    }

    /// Bytes held by the explicit bottom-layer maps.
    pub fn map_bytes(&self) -> usize {
        self.cell_map.values.len() * std::mem::size_of::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_unit_square_mesh, single_triangle};

    fn space(layers: usize, layout: &str) -> FunctionSpace {
        let mesh = Arc::new(ExtrudedMesh::unit_height(single_triangle(), layers).unwrap());
        FunctionSpace::new(mesh, DofLayout::parse(layout).unwrap())
    }

    #[test]
    fn builtin_deltas() {
        let nonzero = |l: &DofLayout| -> Vec<(usize, usize, usize)> {
            ExtrudedEntityType::ALL
                .iter()
                .filter(|&&t| l.delta(t) > 0)
                .map(|&t| (t.horiz_dim(), t.vert_dim(), l.delta(t)))
                .collect()
        };
        let expect = [
            ("CG1xCG1", (0, 0, 1)),
            ("CG1xDG0", (0, 1, 1)),
            ("CG1xDG1", (0, 1, 2)),
            ("DG0xCG1", (2, 0, 1)),
            ("DG0xDG0", (2, 1, 1)),
            ("DG0xDG1", (2, 1, 2)),
            ("DG1xCG1", (2, 0, 3)),
            ("DG1xDG0", (2, 1, 3)),
            ("DG1xDG1", (2, 1, 6)),
        ];
        for (name, entry) in expect {
            assert_eq!(nonzero(&DofLayout::parse(name).unwrap()), vec![entry], "{name}");
        }
    }

    #[test]
    fn dofs_per_cell_across_layouts() {
        let per_cell: Vec<usize> = DofLayout::all_builtin()
            .iter()
            .map(DofLayout::dofs_per_cell)
            .collect();
        assert_eq!(per_cell, vec![6, 3, 6, 2, 1, 2, 6, 3, 6]);
    }

    #[test]
    fn unknown_labels_rejected() {
        assert!(DofLayout::parse("CG2xDG0").is_err());
        assert!(DofLayout::parse("CG1").is_err());
        assert!(DofLayout::custom("empty", [0; 6]).is_err());
    }

    #[test]
    fn cg1_vertex_columns() {
        let fs = space(2, "CG1xCG1");
        assert_eq!(fs.total_dofs(), 9);
        let v = ExtrudedEntityType::new(0, 0).unwrap();
        for i in 0..3 {
            let dofs: Vec<usize> = (0..=2)
                .flat_map(|l| fs.entity_dofs(v, i, l).unwrap())
                .collect();
            assert_eq!(dofs, vec![3 * i, 3 * i + 1, 3 * i + 2]);
        }
    }

    #[test]
    fn dg0_cell_column() {
        let fs = space(4, "DG0xDG0");
        assert_eq!(fs.total_dofs(), 4);
        assert_eq!(fs.cell_map().cell(0), &[0]);
        for n in 0..4 {
            assert_eq!(fs.dofs_at_layer(0, n).unwrap(), vec![n]);
        }
    }

    #[test]
    fn cg1xdg0_single_layer_total() {
        let mesh = Arc::new(ExtrudedMesh::unit_height(generate_unit_square_mesh(3).unwrap(), 1).unwrap());
        let fs = FunctionSpace::new(mesh.clone(), DofLayout::parse("CG1xDG0").unwrap());
        assert_eq!(fs.total_dofs(), mesh.base().num_vertices());
    }

    #[test]
    fn bottom_map_and_layer_shift() {
        let fs = space(2, "CG1xCG1");
        assert_eq!(fs.cell_map().cell(0), &[0, 1, 3, 4, 6, 7]);
        assert_eq!(fs.dofs_at_layer(0, 0).unwrap(), vec![0, 1, 3, 4, 6, 7]);
        assert_eq!(fs.dofs_at_layer(0, 1).unwrap(), vec![1, 2, 4, 5, 7, 8]);
        assert!(fs.dofs_at_layer(0, 2).is_err());
        assert!(fs.dofs_at_layer(1, 0).is_err());
    }

    #[test]
    fn dg1_single_prism() {
        let fs = space(1, "DG1xDG1");
        assert_eq!(fs.cell_map().cell(0), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn offsets_per_layout() {
        for (name, off) in [("CG1xCG1", 1), ("CG1xDG1", 2), ("DG1xDG1", 6), ("DG1xCG1", 3)] {
            let fs = space(3, name);
            assert!(fs.offsets().iter().all(|&o| o == off), "{name}");
        }
    }

    #[test]
    fn closed_form_total() {
        let mesh = Arc::new(ExtrudedMesh::unit_height(generate_unit_square_mesh(4).unwrap(), 5).unwrap());
        for layout in DofLayout::all_builtin() {
            let fs = FunctionSpace::new(mesh.clone(), layout.clone());
            assert_eq!(fs.total_dofs(), total_dofs_closed_form(&mesh, &layout));
        }
    }

    #[test]
    fn horizontal_edge_layout() {
        // no builtin layout uses edges; exercise the path with δ((1,0)) = 1
        let layout = DofLayout::custom("edges", [0, 0, 1, 0, 0, 0]).unwrap();
        let mesh = Arc::new(ExtrudedMesh::unit_height(single_triangle(), 2).unwrap());
        let fs = FunctionSpace::new(mesh, layout);
        assert_eq!(fs.total_dofs(), 9);
        // edges of the triangle are (0,1),(0,2),(1,2); opposite vertex 0 is edge 2
        assert_eq!(fs.cell_map().cell(0), &[6, 7, 3, 4, 0, 1]);
        assert!(fs.offsets().iter().all(|&o| o == 1));
    }

    #[test]
    fn mixed_column_slots() {
        // an entity type with both horizontal and vertical DoFs
        let layout = DofLayout::custom("mixed", [1, 2, 0, 0, 0, 0]).unwrap();
        let mesh = Arc::new(ExtrudedMesh::unit_height(single_triangle(), 2).unwrap());
        let fs = FunctionSpace::new(mesh, layout);
        // column of vertex 0: level0 {0}, interval0 {1,2}, level1 {3}, ...
        assert_eq!(&fs.cell_map().cell(0)[..4], &[0, 1, 2, 3]);
        assert_eq!(fs.offsets()[0], 3);
        assert_eq!(fs.total_dofs(), 3 * (2 * 3 + 1));
    }
}
