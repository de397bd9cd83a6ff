//! Column iteration with direct vertical addressing.
//!
//! For each base cell the bottom-layer map of every argument space is
//! loaded once; after each kernel application every slot is advanced by its
//! space's vertical offset. Only the base mesh is addressed indirectly.
//!
//! The colored schedule runs colors one after another and the cells of a
//! color concurrently. Cells of one color share no base vertex, hence no
//! entity column and no DoF, so concurrent scatters never alias and every
//! DoF receives its contributions in the same order on every run.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fspace::FunctionSpace;
use crate::mesh::BaseMesh;

/// Vertical dimension of the iteration entities: cells, `(2,1)`.
pub const ITERATION_VERT_DIM: usize = 1;

/// Kernel applications per column for iteration entities of vertical
/// dimension `vert_dim`: `λ − d₂ + 1`.
pub fn applications_per_column(layers: usize, vert_dim: usize) -> usize {
    layers + 1 - vert_dim
}

/// Gathered slot values of all input arguments for one application.
pub struct Gathered<'s> {
    values: &'s [f64],
    bounds: &'s [usize],
}

impl Gathered<'_> {
    /// Slot values of input argument `a`.
    #[inline]
    pub fn arg(&self, a: usize) -> &[f64] {
        &self.values[self.bounds[a]..self.bounds[a + 1]]
    }

    pub fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A local computation applied once per cell and layer.
pub trait StencilKernel: Sync {
    /// Expected slot count of each input argument.
    fn input_arities(&self) -> Vec<usize>;

    /// Slot count of the output argument.
    fn output_arity(&self) -> usize;

    /// Computes contributions into `out`, which arrives zeroed.
    fn apply(&self, inputs: &Gathered<'_>, out: &mut [f64]);
}

/// A read-only field argument.
#[derive(Clone, Copy)]
pub struct Arg<'a> {
    pub space: &'a FunctionSpace,
    pub values: &'a [f64],
}

impl<'a> Arg<'a> {
    pub fn new(space: &'a FunctionSpace, values: &'a [f64]) -> Self {
        Self { space, values }
    }
}

/// Greedy coloring of base cells; cells sharing a vertex differ in color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    color_of: Vec<usize>,
    num_colors: usize,
}

impl Coloring {
    pub fn color_of(&self, cell: usize) -> usize {
        self.color_of[cell]
    }

    pub fn colors(&self) -> &[usize] {
        &self.color_of
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    /// Cells of each color in ascending index order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_colors];
        for (c, &k) in self.color_of.iter().enumerate() {
            groups[k].push(c);
        }
        groups
    }
}

/// Colors cells in index order with the smallest color not used by any
/// earlier cell sharing a vertex.
pub fn color_base_cells(mesh: &BaseMesh) -> Coloring {
    let (offsets, vcells) = mesh.vertex_cells();
    let n = mesh.num_cells();
    let mut color_of = vec![usize::MAX; n];
    // stamp[k] == c marks color k as taken for cell c
    let mut stamp: Vec<usize> = Vec::new();
    let mut num_colors = 0;
    for c in 0..n {
        for &v in &mesh.cell_vertices()[c] {
            for &nb in &vcells[offsets[v]..offsets[v + 1]] {
                let k = color_of[nb];
                if k != usize::MAX {
                    stamp[k] = c;
                }
            }
        }
        let k = (0..num_colors).find(|&k| stamp[k] != c).unwrap_or(num_colors);
        if k == num_colors {
            num_colors += 1;
            stamp.push(usize::MAX);
        }
        color_of[c] = k;
    }
    Coloring {
        color_of,
        num_colors,
    }
}

/// Traversal of the base cells.
#[derive(Debug)]
pub enum Schedule {
    /// Base cells in mesh order on the calling thread.
    Sequential,
    /// Colors in order; cells of one color on `threads` workers.
    Colored(ColoredSchedule),
}

#[derive(Debug)]
pub struct ColoredSchedule {
    coloring: Coloring,
    groups: Vec<Vec<usize>>,
    threads: usize,
    pool: Option<rayon::ThreadPool>,
}

impl ColoredSchedule {
    pub fn coloring(&self) -> &Coloring {
        &self.coloring
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl Schedule {
    /// Colors `mesh` and prepares a pool of `threads` workers. With one
    /// thread the colors are traversed on the calling thread.
    pub fn colored(mesh: &BaseMesh, threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::InvalidArgument("thread count must be at least 1".into()));
        }
        let coloring = color_base_cells(mesh);
        let groups = coloring.groups();
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Schedule::Colored(ColoredSchedule {
            coloring,
            groups,
            threads,
            pool,
        }))
    }

    pub fn threads(&self) -> usize {
        match self {
            Schedule::Sequential => 1,
            Schedule::Colored(c) => c.threads,
        }
    }
}

struct Scratch {
    bounds: Vec<usize>,
    in_dofs: Vec<usize>,
    in_offsets: Vec<usize>,
    in_values: Vec<f64>,
    out_dofs: Vec<usize>,
    local: Vec<f64>,
}

struct Plan<'a, K: ?Sized> {
    kernel: &'a K,
    inputs: &'a [Arg<'a>],
    out_space: &'a FunctionSpace,
    in_offsets: Vec<usize>,
    bounds: Vec<usize>,
    applications: usize,
}

impl<K: StencilKernel + ?Sized> Plan<'_, K> {
    fn scratch(&self) -> Scratch {
        let total = *self.bounds.last().unwrap_or(&0);
        Scratch {
            bounds: self.bounds.clone(),
            in_dofs: vec![0; total],
            in_offsets: self.in_offsets.clone(),
            in_values: vec![0.0; total],
            out_dofs: vec![0; self.out_space.arity()],
            local: vec![0.0; self.out_space.arity()],
        }
    }

    #[inline]
    fn column(&self, cell: usize, s: &mut Scratch, mut scatter: impl FnMut(usize, f64)) {
        for (a, arg) in self.inputs.iter().enumerate() {
            s.in_dofs[s.bounds[a]..s.bounds[a + 1]].copy_from_slice(arg.space.cell_map().cell(cell));
        }
        s.out_dofs.copy_from_slice(self.out_space.cell_map().cell(cell));
        let out_offsets = self.out_space.offsets();
        for _ in 0..self.applications {
            for (a, arg) in self.inputs.iter().enumerate() {
                let range = s.bounds[a]..s.bounds[a + 1];
                for (v, &d) in s.in_values[range.clone()].iter_mut().zip(&s.in_dofs[range]) {
                    *v = arg.values[d];
                }
            }
            s.local.fill(0.0);
            self.kernel.apply(
                &Gathered {
                    values: &s.in_values,
                    bounds: &s.bounds,
                },
                &mut s.local,
            );
            for (&d, &v) in s.out_dofs.iter().zip(&s.local) {
                scatter(d, v);
            }
            for (d, &o) in s.in_dofs.iter_mut().zip(&s.in_offsets) {
                *d += o;
            }
            for (d, &o) in s.out_dofs.iter_mut().zip(out_offsets) {
                *d += o;
            }
        }
    }
}

#[derive(Clone, Copy)]
struct SharedOut {
    ptr: *mut f64,
    len: usize,
}

// Writes through `SharedOut` only happen for DoFs owned by one cell of the
// running color.
unsafe impl Send for SharedOut {}
unsafe impl Sync for SharedOut {}

/// Applies `kernel` to every cell of every column, accumulating into `out`.
///
/// All spaces must be built on the same [`ExtrudedMesh`](crate::extrusion::ExtrudedMesh)
/// instance and the kernel arities must match the spaces' stencil sizes.
pub fn iterate_columns<K: StencilKernel + ?Sized>(
    kernel: &K,
    inputs: &[Arg<'_>],
    out_space: &FunctionSpace,
    out: &mut [f64],
    schedule: &Schedule,
) -> Result<()> {
    let mesh = out_space.mesh();
    if out.len() != out_space.total_dofs() {
        return Err(Error::SpaceMismatch(format!(
            "output has {} values but its space has {} DoFs",
            out.len(),
            out_space.total_dofs()
        )));
    }
    if kernel.output_arity() != out_space.arity() {
        return Err(Error::SpaceMismatch(format!(
            "kernel writes {} slots but the output space has {}",
            kernel.output_arity(),
            out_space.arity()
        )));
    }
    let arities = kernel.input_arities();
    if arities.len() != inputs.len() {
        return Err(Error::SpaceMismatch(format!(
            "kernel takes {} inputs, {} given",
            arities.len(),
            inputs.len()
        )));
    }
    let mut bounds = vec![0];
    let mut in_offsets = Vec::new();
    for (a, (arg, &k)) in inputs.iter().zip(&arities).enumerate() {
        if !std::sync::Arc::ptr_eq(arg.space.mesh(), mesh) {
            return Err(Error::SpaceMismatch(format!(
                "input {a} lives on a different mesh"
            )));
        }
        if arg.space.arity() != k {
            return Err(Error::SpaceMismatch(format!(
                "input {a}: kernel expects {k} slots, space {} has {}",
                arg.space.layout(),
                arg.space.arity()
            )));
        }
        if arg.values.len() != arg.space.total_dofs() {
            return Err(Error::SpaceMismatch(format!(
                "input {a} has {} values but its space has {} DoFs",
                arg.values.len(),
                arg.space.total_dofs()
            )));
        }
        bounds.push(bounds[a] + k);
        in_offsets.extend_from_slice(arg.space.offsets());
    }
    let plan = Plan {
        kernel,
        inputs,
        out_space,
        in_offsets,
        bounds,
        applications: applications_per_column(mesh.layers(), ITERATION_VERT_DIM),
    };
    let ncells = mesh.base().num_cells();

    match schedule {
        Schedule::Sequential => {
            let mut s = plan.scratch();
            for cell in 0..ncells {
                plan.column(cell, &mut s, |d, v| out[d] += v);
            }
        }
        Schedule::Colored(colored) => {
            if colored.coloring.colors().len() != ncells {
                return Err(Error::SpaceMismatch(
                    "schedule was colored for a different base mesh".into(),
                ));
            }
            match &colored.pool {
                None => {
                    let mut s = plan.scratch();
                    for group in &colored.groups {
                        for &cell in group {
                            plan.column(cell, &mut s, |d, v| out[d] += v);
                        }
                    }
                }
                Some(pool) => {
                    let shared = SharedOut {
                        ptr: out.as_mut_ptr(),
                        len: out.len(),
                    };
                    pool.install(|| {
                        for group in &colored.groups {
                            group.par_iter().with_min_len(32).for_each_init(
                                || plan.scratch(),
                                |s, &cell| {
                                    plan.column(cell, s, |d, v| {
                                        // capture the Sync wrapper, not its raw pointer field
                                        #[allow(clippy::redundant_locals)]
                                        let shared = shared;
                                        assert!(d < shared.len);
                                        // SAFETY: in bounds, and no other cell of this
                                        // color touches DoF `d` (coloring invariant).
                                        unsafe { *shared.ptr.add(d) += v };
                                    })
                                },
                            );
                        }
                    });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrusion::ExtrudedMesh;
    use crate::fspace::DofLayout;
    use crate::mesh::{generate_unit_square_mesh, single_triangle, two_triangles};
    use std::sync::Arc;

    struct Count;

    impl StencilKernel for Count {
        fn input_arities(&self) -> Vec<usize> {
            vec![]
        }
        fn output_arity(&self) -> usize {
            1
        }
        fn apply(&self, _: &Gathered<'_>, out: &mut [f64]) {
            out[0] = 1.0;
        }
    }

    #[test]
    fn coloring_small_meshes() {
        assert_eq!(color_base_cells(&single_triangle()).num_colors(), 1);
        let two = color_base_cells(&two_triangles());
        assert_eq!(two.num_colors(), 2);
        assert_ne!(two.color_of(0), two.color_of(1));
    }

    #[test]
    fn coloring_separates_vertex_neighbours() {
        let m = generate_unit_square_mesh(4).unwrap();
        let col = color_base_cells(&m);
        let (off, cells) = m.vertex_cells();
        let max_around = (0..m.num_vertices()).map(|v| off[v + 1] - off[v]).max().unwrap();
        assert!(col.num_colors() <= 3 * max_around);
        for v in 0..m.num_vertices() {
            let around = &cells[off[v]..off[v + 1]];
            for (i, &a) in around.iter().enumerate() {
                for &b in &around[i + 1..] {
                    assert_ne!(col.color_of(a), col.color_of(b));
                }
            }
        }
    }

    #[test]
    fn every_cell_layer_visited_once() {
        let mesh = Arc::new(ExtrudedMesh::unit_height(generate_unit_square_mesh(3).unwrap(), 5).unwrap());
        let fs = FunctionSpace::new(mesh.clone(), DofLayout::parse("DG0xDG0").unwrap());
        for schedule in [Schedule::Sequential, Schedule::colored(mesh.base(), 3).unwrap()] {
            let mut out = vec![0.0; fs.total_dofs()];
            iterate_columns(&Count, &[], &fs, &mut out, &schedule).unwrap();
            assert!(out.iter().all(|&v| v == 1.0));
            assert_eq!(out.iter().sum::<f64>(), (mesh.base().num_cells() * 5) as f64);
        }
    }

    #[test]
    fn mismatches_rejected() {
        let mesh = Arc::new(ExtrudedMesh::unit_height(single_triangle(), 2).unwrap());
        let other = Arc::new(ExtrudedMesh::unit_height(single_triangle(), 2).unwrap());
        let dg0 = FunctionSpace::new(mesh.clone(), DofLayout::parse("DG0xDG0").unwrap());
        let cg1 = FunctionSpace::new(mesh, DofLayout::parse("CG1xCG1").unwrap());
        let foreign = FunctionSpace::new(other, DofLayout::parse("DG0xDG0").unwrap());

        // output arity
        let mut out = vec![0.0; cg1.total_dofs()];
        assert!(iterate_columns(&Count, &[], &cg1, &mut out, &Schedule::Sequential).is_err());
        // output length
        let mut short = vec![0.0; 1];
        assert!(iterate_columns(&Count, &[], &dg0, &mut short, &Schedule::Sequential).is_err());

        struct OneInput;
        impl StencilKernel for OneInput {
            fn input_arities(&self) -> Vec<usize> {
                vec![1]
            }
            fn output_arity(&self) -> usize {
                1
            }
            fn apply(&self, g: &Gathered<'_>, out: &mut [f64]) {
                out[0] = g.arg(0)[0];
            }
        }
        let mut out = vec![0.0; dg0.total_dofs()];
        let vals = vec![0.0; foreign.total_dofs()];
        let err = iterate_columns(&OneInput, &[Arg::new(&foreign, &vals)], &dg0, &mut out, &Schedule::Sequential)
            .unwrap_err();
        assert!(err.to_string().contains("different mesh"));
        let vals = vec![0.0; cg1.total_dofs()];
        assert!(iterate_columns(&OneInput, &[Arg::new(&cg1, &vals)], &dg0, &mut out, &Schedule::Sequential).is_err());
        assert!(Schedule::colored(&single_triangle(), 0).is_err());
    }
}
