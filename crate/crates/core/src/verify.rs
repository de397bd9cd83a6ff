//! Brute-force oracles.
//!
//! These rebuild everything the production path computes from scratch,
//! with no offsets and no reference-element tabulation: an explicit DoF
//! table per extruded entity, explicit maps per `(cell, layer)`, and a
//! dense mass-matrix assembly with an independent quadrature.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::extrusion::ExtrudedMesh;
use crate::fspace::{DofLayout, Family, FunctionSpace};
use crate::iterate::Schedule;
use crate::kernels::{assemble_residual, coordinate_field, prism_quadrature, Field};
use crate::mesh::{generate_unit_square_mesh, single_triangle, two_triangles, BaseMesh};

/// Per-entity DoF lists, assigned by walking the numbering loop literally.
///
/// `table[d1][d2][i][l]` lists the DoFs of the extruded entity of type
/// `(d1,d2)` over base entity `i` at level `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitNumbering {
    pub table: [[Vec<Vec<Vec<usize>>>; 2]; 3],
    pub total: usize,
}

/// Numbers every extruded entity one DoF at a time.
pub fn explicit_numbering(base: &BaseMesh, layers: usize, layout: &DofLayout) -> ExplicitNumbering {
    let mut table: [[Vec<Vec<Vec<usize>>>; 2]; 3] = Default::default();
    let mut next = 0usize;
    let mut take = |n: usize| -> Vec<usize> {
        let v: Vec<usize> = (next..next + n).collect();
        next += n;
        v
    };
    for (d, [horiz, vert]) in table.iter_mut().enumerate() {
        let count = base.num_entities(d);
        horiz.resize(count, Vec::new());
        vert.resize(count, Vec::new());
        for i in 0..count {
            for _ in 0..layers {
                horiz[i].push(take(layout.delta_at(d, 0)));
                vert[i].push(take(layout.delta_at(d, 1)));
            }
            horiz[i].push(take(layout.delta_at(d, 0)));
        }
    }
    ExplicitNumbering { table, total: next }
}

/// Fully materialized stencil of every `(cell, layer)`: `maps[c][l]`.
///
/// Within a cell the local vertices come first, then the edges opposite
/// them, then the cell itself; per entity the horizontal entity at level
/// `l`, the vertical entity above it, then the horizontal entity at
/// `l + 1`.
pub fn explicit_maps(base: &BaseMesh, layers: usize, layout: &DofLayout) -> Vec<Vec<Vec<usize>>> {
    let num = explicit_numbering(base, layers, layout);
    (0..base.num_cells())
        .map(|c| {
            let mut entities: Vec<(usize, usize)> = Vec::with_capacity(7);
            entities.extend(base.cell_vertices()[c].iter().map(|&v| (0, v)));
            entities.extend(base.cell_edges()[c].iter().map(|&e| (1, e)));
            entities.push((2, c));
            (0..layers)
                .map(|l| {
                    let mut map = Vec::new();
                    for &(d, i) in &entities {
                        map.extend(&num.table[d][0][i][l]);
                        map.extend(&num.table[d][1][i][l]);
                        map.extend(&num.table[d][0][i][l + 1]);
                    }
                    map
                })
                .collect()
        })
        .collect()
}

/// Checks that `dofs_at_layer` reproduces the explicit maps exactly and
/// that the numbering is a bijection onto `0..total`.
pub fn check_maps(space: &FunctionSpace) -> Result<()> {
    let mesh = space.mesh();
    let maps = explicit_maps(mesh.base(), mesh.layers(), space.layout());
    let num = explicit_numbering(mesh.base(), mesh.layers(), space.layout());
    if num.total != space.total_dofs() {
        return Err(invalid(format!(
            "total DoFs {} differ from explicit count {}",
            space.total_dofs(),
            num.total
        )));
    }
    let mut seen = vec![false; num.total];
    for (c, column) in maps.iter().enumerate() {
        for (l, expect) in column.iter().enumerate() {
            let got = space.dofs_at_layer(c, l)?;
            if &got != expect {
                return Err(invalid(format!(
                    "cell {c} layer {l}: got {got:?}, expected {expect:?}"
                )));
            }
            for &d in &got {
                seen[d] = true;
            }
        }
    }
    if let Some(d) = seen.iter().position(|&s| !s) {
        return Err(invalid(format!("DoF {d} is never reached by a stencil")));
    }
    Ok(())
}

/// Gauss-Legendre, three points on `[0,1]`.
fn gauss3() -> [(f64, f64); 3] {
    let r = 15f64.sqrt() / 10.0;
    [(0.5 - r, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + r, 5.0 / 18.0)]
}

/// Value of the basis function behind component `comp` of an entity of
/// type `(d, d2)` local to a cell, at barycentric `bary` and relative
/// height `zeta`.
#[allow(clippy::too_many_arguments)]
fn basis_value(
    elements: (Family, Family),
    d: usize,
    d2: usize,
    local: usize,
    upper: bool,
    comp: usize,
    bary: [f64; 3],
    zeta: f64,
) -> f64 {
    let (h, v) = elements;
    let nv = match (v, d2) {
        (Family::DG1, 1) => 2,
        _ => 1,
    };
    let (hc, vc) = (comp / nv, comp % nv);
    let hv = match (h, d) {
        (Family::CG1, 0) => bary[local],
        (Family::DG0, 2) => 1.0,
        (Family::DG1, 2) => bary[hc],
        _ => unreachable!("family {h} has no DoFs on dimension {d}"),
    };
    let vv = match v {
        Family::CG1 if upper => zeta,
        Family::CG1 => 1.0 - zeta,
        Family::DG0 => 1.0,
        Family::DG1 if vc == 1 => zeta,
        Family::DG1 => 1.0 - zeta,
    };
    hv * vv
}

/// Dense assembly of `M f` where `M` is the global mass matrix, built
/// through the explicit maps with a collapsed Gauss rule on each prism.
pub fn dense_residual(mesh: &ExtrudedMesh, layout: &DofLayout, f: &[f64]) -> Result<Vec<f64>> {
    let elements = layout
        .elements()
        .ok_or_else(|| invalid(format!("layout {layout} has no element basis")))?;
    let base = mesh.base();
    let maps = explicit_maps(base, mesh.layers(), layout);
    let n = explicit_numbering(base, mesh.layers(), layout).total;
    if f.len() != n {
        return Err(invalid(format!("{} values for {n} DoFs", f.len())));
    }

    // local (d, d2, local entity, upper level, component) per stencil slot
    let mut slots = Vec::new();
    for (d, count) in [(0, 3), (1, 3), (2, 1)] {
        for local in 0..count {
            for (d2, upper) in [(0, false), (1, false), (0, true)] {
                for comp in 0..layout.delta_at(d, d2) {
                    slots.push((d, d2, local, upper, comp));
                }
            }
        }
    }

    let mut mass = vec![0.0; n * n];
    let h = mesh.layer_height();
    let g = gauss3();
    for (c, column) in maps.iter().enumerate() {
        let [a, b, e] = base.cell_vertices()[c].map(|v| base.coords()[v]);
        let twice_area = ((b[0] - a[0]) * (e[1] - a[1]) - (e[0] - a[0]) * (b[1] - a[1])).abs();
        for (l, map) in column.iter().enumerate() {
            let z0 = l as f64 * h;
            for &(u, wu) in &g {
                for &(s, ws) in &g {
                    // (u, s) on the square collapses onto the triangle
                    let (xi, eta) = (u, s * (1.0 - u));
                    let x = [
                        a[0] + xi * (b[0] - a[0]) + eta * (e[0] - a[0]),
                        a[1] + xi * (b[1] - a[1]) + eta * (e[1] - a[1]),
                    ];
                    let bary = barycentric(a, b, e, x);
                    for &(t, wt) in &g {
                        let z = z0 + t * h;
                        let zeta = (z - z0) / h;
                        let w = wu * ws * wt * (1.0 - u) * twice_area * h;
                        let phi: Vec<f64> = slots
                            .iter()
                            .map(|&(d, d2, local, upper, comp)| {
                                basis_value(elements, d, d2, local, upper, comp, bary, zeta)
                            })
                            .collect();
                        for (i, &gi) in map.iter().enumerate() {
                            for (j, &gj) in map.iter().enumerate() {
                                mass[gi * n + gj] += w * phi[i] * phi[j];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((0..n)
        .map(|i| (0..n).map(|j| mass[i * n + j] * f[j]).sum())
        .collect())
}

fn barycentric(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2]) -> [f64; 3] {
    let det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
    let l0 = ((b[1] - c[1]) * (p[0] - c[0]) + (c[0] - b[0]) * (p[1] - c[1])) / det;
    let l1 = ((c[1] - a[1]) * (p[0] - c[0]) + (a[0] - c[0]) * (p[1] - c[1])) / det;
    [l0, l1, 1.0 - l0 - l1]
}

/// Largest absolute per-entry difference between the production residual
/// of a random field and the dense oracle.
pub fn assembly_error(mesh: &Arc<ExtrudedMesh>, layout: &DofLayout, seed: u64) -> Result<f64> {
    let space = Arc::new(FunctionSpace::new(mesh.clone(), layout.clone()));
    let f = Field::random(space, seed);
    let coords = coordinate_field(mesh);
    let rule = prism_quadrature(2, 2)?;
    let got = assemble_residual(&f, &coords, &rule, &Schedule::Sequential)?;
    let expect = dense_residual(mesh, layout, f.values())?;
    Ok(got
        .values()
        .iter()
        .zip(&expect)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Absolute per-entry tolerance of the assembly oracle.
pub const ASSEMBLY_TOLERANCE: f64 = 1e-13;

/// The built-in fixtures: `(name, base mesh, layers)`.
pub fn fixtures() -> Vec<(&'static str, BaseMesh, usize)> {
    vec![
        ("single-triangle", single_triangle(), 2),
        ("two-triangles", two_triangles(), 3),
        ("unit-square-3", generate_unit_square_mesh(3).expect("n >= 1"), 4),
    ]
}

/// Outcome of one layout-mesh-λ check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub layout: String,
    pub mesh: String,
    pub layers: usize,
    pub outcome: std::result::Result<f64, String>,
}

/// Runs the map and assembly oracles for every builtin layout on every
/// fixture.
pub fn run_suite(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (name, base, layers) in fixtures() {
        let mesh = Arc::new(ExtrudedMesh::unit_height(base, layers).expect("valid fixture"));
        for layout in DofLayout::all_builtin() {
            let space = FunctionSpace::new(mesh.clone(), layout.clone());
            let outcome = check_maps(&space)
                .and_then(|()| assembly_error(&mesh, &layout, seed))
                .map_err(|e| e.to_string())
                .and_then(|err| {
                    if err <= ASSEMBLY_TOLERANCE {
                        Ok(err)
                    } else {
                        Err(format!("assembly differs by {err:e}"))
                    }
                });
            out.push(CheckResult {
                layout: layout.name().to_string(),
                mesh: name.to_string(),
                layers,
                outcome,
            });
        }
    }
    out
}

/// `"<passed>/<total> layout-mesh-λ oracle checks passed"`.
pub fn summary(results: &[CheckResult]) -> String {
    let passed = results.iter().filter(|r| r.outcome.is_ok()).count();
    format!("{passed}/{} layout-mesh-λ oracle checks passed", results.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_numbering_of_single_column() {
        let num = explicit_numbering(&single_triangle(), 2, &DofLayout::parse("CG1xCG1").unwrap());
        assert_eq!(num.total, 9);
        assert_eq!(num.table[0][0][1], vec![vec![3], vec![4], vec![5]]);
        assert!(num.table[0][1][1].iter().all(Vec::is_empty));
    }

    #[test]
    fn explicit_maps_bottom_layer() {
        let maps = explicit_maps(&single_triangle(), 2, &DofLayout::parse("CG1xCG1").unwrap());
        assert_eq!(maps[0][0], vec![0, 1, 3, 4, 6, 7]);
        assert_eq!(maps[0][1], vec![1, 2, 4, 5, 7, 8]);
    }

    #[test]
    fn barycentric_vertices() {
        let (a, b, c) = ([0.0, 0.0], [2.0, 0.0], [0.0, 1.0]);
        assert_eq!(barycentric(a, b, c, b), [0.0, 1.0, 0.0]);
        let m = barycentric(a, b, c, [2.0 / 3.0, 1.0 / 3.0]);
        assert!(m.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn dense_dg0_is_volume() {
        let mesh = ExtrudedMesh::new(two_triangles(), 3, 0.5).unwrap();
        let layout = DofLayout::parse("DG0xDG0").unwrap();
        let n = explicit_numbering(mesh.base(), 3, &layout).total;
        let r = dense_residual(&mesh, &layout, &vec![1.0; n]).unwrap();
        let cells: f64 = (0..2).map(|c| mesh.base().cell_area(c)).sum::<f64>() * 0.5 * 3.0;
        assert!((r.iter().sum::<f64>() - cells).abs() < 1e-14);
    }

    #[test]
    fn suite_passes() {
        let results = run_suite(7);
        assert_eq!(results.len(), 27);
        for r in &results {
            assert!(r.outcome.is_ok(), "{} on {} λ={}: {:?}", r.layout, r.mesh, r.layers, r.outcome);
        }
        assert_eq!(summary(&results), "27/27 layout-mesh-λ oracle checks passed");
    }
}
