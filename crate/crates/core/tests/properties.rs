use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;

use extruded::extrusion::{ExtrudedEntityType, ExtrudedMesh};
use extruded::fspace::{total_dofs_closed_form, DofLayout, FunctionSpace};
use extruded::iterate::Schedule;
use extruded::kernels::{assemble_residual, coordinate_field, prism_quadrature, Field};
use extruded::mesh::{generate_unit_square_mesh, BaseMesh};
use extruded::ordering::{
    apply_ordering, random_order, rcm_vertex_order, vertex_bandwidth, OrderingKind,
    Permutation,
};
use extruded::verify::{assembly_error, check_maps};

/// Unit-square meshes of up to 50 cells, optionally shuffled.
fn base_mesh(max_n: usize) -> impl Strategy<Value = BaseMesh> {
    (1..=max_n, any::<u64>(), 0..3u8).prop_map(|(n, seed, ord)| {
        let m = generate_unit_square_mesh(n).unwrap();
        match ord {
            0 => m,
            1 => OrderingKind::Random.reorder(&m, seed).unwrap(),
            _ => OrderingKind::Rcm.reorder(&m, seed).unwrap(),
        }
    })
}

fn builtin_layout() -> impl Strategy<Value = DofLayout> {
    (0..9usize).prop_map(|i| DofLayout::all_builtin().swap_remove(i))
}

fn any_layout() -> impl Strategy<Value = DofLayout> {
    prop::array::uniform6(0..4usize)
        .prop_filter("some DoFs", |d| d.iter().any(|&x| x > 0))
        .prop_map(|d| DofLayout::custom("custom", d).unwrap())
}

fn space(base: BaseMesh, layers: usize, layout: DofLayout) -> FunctionSpace {
    FunctionSpace::new(Arc::new(ExtrudedMesh::unit_height(base, layers).unwrap()), layout)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn numbering_is_a_bijection(base in base_mesh(5), layers in 1..8usize, layout in any_layout()) {
        let fs = space(base, layers, layout.clone());
        prop_assert_eq!(fs.total_dofs(), total_dofs_closed_form(fs.mesh(), &layout));
        let mut seen = vec![false; fs.total_dofs()];
        let base = fs.mesh().base();
        for t in ExtrudedEntityType::ALL {
            for i in 0..base.num_entities(t.horiz_dim()) {
                for l in 0..=layers - t.vert_dim() {
                    for d in fs.entity_dofs(t, i, l).unwrap() {
                        prop_assert!(!seen[d]);
                        seen[d] = true;
                    }
                }
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn columns_are_vertically_contiguous(base in base_mesh(4), layers in 1..8usize, layout in any_layout()) {
        let fs = space(base, layers, layout.clone());
        let base = fs.mesh().base();
        for t in ExtrudedEntityType::ALL {
            let stride = layout.column_stride(t.horiz_dim());
            for i in 0..base.num_entities(t.horiz_dim()) {
                for l in 0..layers - t.vert_dim() {
                    let lo = fs.entity_dofs(t, i, l).unwrap();
                    let hi = fs.entity_dofs(t, i, l + 1).unwrap();
                    prop_assert_eq!(hi.start, lo.start + stride);
                    prop_assert_eq!(hi.len(), lo.len());
                }
            }
        }
    }

    #[test]
    fn offsets_match_explicit_maps(base in base_mesh(5), layers in 1..=5usize, layout in builtin_layout()) {
        let fs = space(base, layers, layout);
        prop_assert!(check_maps(&fs).is_ok(), "{:?}", check_maps(&fs));
    }

    #[test]
    fn assembly_matches_dense_oracle(
        base in base_mesh(3),
        layers in 1..=4usize,
        layout in builtin_layout(),
        height in 0.1..2.0f64,
        seed in any::<u64>(),
    ) {
        let mesh = Arc::new(ExtrudedMesh::new(base, layers, height).unwrap());
        let err = assembly_error(&mesh, &layout, seed).unwrap();
        prop_assert!(err <= 1e-13, "difference {err:e}");
    }

    #[test]
    fn constant_field_integrates_to_volume(
        base in base_mesh(4),
        layers in 1..=6usize,
        layout in builtin_layout(),
        height in 0.1..2.0f64,
    ) {
        let mesh = Arc::new(ExtrudedMesh::new(base, layers, height).unwrap());
        let fs = Arc::new(FunctionSpace::new(mesh.clone(), layout));
        let f = Field::constant(fs, 1.0);
        let r = assemble_residual(&f, &coordinate_field(&mesh), &prism_quadrature(2, 2).unwrap(), &Schedule::Sequential).unwrap();
        let volume = height * layers as f64;
        let sum: f64 = r.values().iter().sum();
        prop_assert!((sum - volume).abs() <= 1e-12 * volume);
    }

    #[test]
    fn colored_threads_are_bitwise_deterministic(base in base_mesh(5), layers in 1..=4usize, layout in builtin_layout(), seed in any::<u64>()) {
        let mesh = Arc::new(ExtrudedMesh::unit_height(base, layers).unwrap());
        let fs = Arc::new(FunctionSpace::new(mesh.clone(), layout));
        let f = Field::random(fs, seed);
        let coords = coordinate_field(&mesh);
        let rule = prism_quadrature(2, 2).unwrap();
        let one = assemble_residual(&f, &coords, &rule, &Schedule::colored(mesh.base(), 1).unwrap()).unwrap();
        let four = assemble_residual(&f, &coords, &rule, &Schedule::colored(mesh.base(), 4).unwrap()).unwrap();
        prop_assert!(one.values().iter().zip(four.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn random_order_is_a_reproducible_permutation(count in 0..200usize, seed in any::<u64>()) {
        let p = random_order(count, seed);
        let mut sorted = p.forward().to_vec();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..count).collect::<Vec<_>>());
        prop_assert_eq!(p, random_order(count, seed));
    }

    #[test]
    fn reordering_preserves_geometry(base in base_mesh(6), seed in any::<u64>()) {
        for perm in [rcm_vertex_order(&base), random_order(base.num_vertices(), seed)] {
            let m = apply_ordering(&base, &perm).unwrap();
            prop_assert_eq!(m.num_cells(), base.num_cells());
            prop_assert_eq!(m.num_edges(), base.num_edges());
            let area = |b: &BaseMesh| (0..b.num_cells()).map(|c| b.cell_area(c)).sum::<f64>();
            prop_assert!((area(&m) - area(&base)).abs() < 1e-12);
            let tris = |b: &BaseMesh, map: &dyn Fn(usize) -> usize| -> HashSet<[usize; 3]> {
                b.cell_vertices().iter().map(|t| { let mut s = t.map(map); s.sort_unstable(); s }).collect()
            };
            prop_assert_eq!(tris(&base, &|v| perm.apply(v)), tris(&m, &|v| v));
            for (old, xy) in base.coords().iter().enumerate() {
                prop_assert_eq!(m.coords()[perm.apply(old)], *xy);
            }
        }
    }

    #[test]
    fn rcm_does_not_widen_bandwidth(n in 1..=9usize, seed in any::<u64>(), shuffle in any::<bool>()) {
        let mut base = generate_unit_square_mesh(n).unwrap();
        if shuffle {
            base = OrderingKind::Random.reorder(&base, seed).unwrap();
        }
        // brute force over all vertex pairs sharing a cell
        let bandwidth = |m: &BaseMesh| {
            m.cell_vertices()
                .iter()
                .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])])
                .map(|(a, b)| a.abs_diff(b))
                .max()
                .unwrap_or(0)
        };
        let after = OrderingKind::Rcm.reorder(&base, 0).unwrap();
        prop_assert!(bandwidth(&after) <= bandwidth(&base), "{} > {}", bandwidth(&after), bandwidth(&base));
        prop_assert_eq!(bandwidth(&after), vertex_bandwidth(&after));
    }

    #[test]
    fn distinct_seeds_give_distinct_orders(count in 100..500usize, a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(a != b);
        prop_assert_ne!(random_order(count, a), random_order(count, b));
    }

    #[test]
    fn rcm_is_a_permutation(base in base_mesh(6)) {
        let p = rcm_vertex_order(&base);
        let inv = p.inverse();
        for v in 0..base.num_vertices() {
            prop_assert_eq!(inv[p.apply(v)], v);
        }
        prop_assert!(Permutation::from_forward(p.forward().to_vec()).is_ok());
    }
}
