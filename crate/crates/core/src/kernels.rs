//! The `∫ f v dx` residual on triangular prisms.
//!
//! Reference prism: triangle `(0,0),(1,0),(0,1)` in `(ξ,η)` times the
//! interval `[0,1]` in `ζ`, measure 1/2. Horizontal basis functions are
//! `P1_0 = 1−ξ−η`, `P1_1 = ξ`, `P1_2 = η` (local vertex order) or `P0 = 1`;
//! vertical ones are `1−ζ` (bottom), `ζ` (top) or `1`. Cells are right
//! prisms with flat layers, so the Jacobian determinant is constant per
//! cell: `|detJ| = vol(prism) / vol(reference) = 2·area·h`.

use std::sync::Arc;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extrusion::ExtrudedMesh;
use crate::fspace::{DofLayout, Family, FunctionSpace, Slot};
use crate::iterate::{iterate_columns, Arg, Gathered, Schedule, StencilKernel};
use crate::mesh::EntityId;

/// Highest supported polynomial degrees of the triangle and line rules.
pub const MAX_TRI_DEGREE: usize = 4;
pub const MAX_LINE_DEGREE: usize = 5;

/// Tensor-product quadrature on the reference prism.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// `(ξ, η, ζ)` per point; triangle points outermost.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub tri_degree: usize,
    pub line_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn triangle_rule(degree: usize) -> Option<Vec<([f64; 2], f64)>> {
    Some(match degree {
        0 | 1 => vec![([1.0 / 3.0, 1.0 / 3.0], 0.5)],
        2 => vec![
            ([1.0 / 6.0, 1.0 / 6.0], 1.0 / 6.0),
            ([2.0 / 3.0, 1.0 / 6.0], 1.0 / 6.0),
            ([1.0 / 6.0, 2.0 / 3.0], 1.0 / 6.0),
        ],
        3 | 4 => {
            // Dunavant degree-4 rule
            let (a, wa) = (0.445_948_490_915_965, 0.223_381_589_678_011 / 2.0);
            let (b, wb) = (0.091_576_213_509_771, 0.109_951_743_655_322 / 2.0);
            vec![
                ([a, a], wa),
                ([1.0 - 2.0 * a, a], wa),
                ([a, 1.0 - 2.0 * a], wa),
                ([b, b], wb),
                ([1.0 - 2.0 * b, b], wb),
                ([b, 1.0 - 2.0 * b], wb),
            ]
        }
        _ => return None,
    })
}

fn line_rule(degree: usize) -> Option<Vec<(f64, f64)>> {
    Some(match degree {
        0 | 1 => vec![(0.5, 1.0)],
        2 | 3 => {
            let d = 0.5 / 3f64.sqrt();
            vec![(0.5 - d, 0.5), (0.5 + d, 0.5)]
        }
        4 | 5 => {
            let d = 0.5 * 0.6f64.sqrt();
            vec![(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
        }
        _ => return None,
    })
}

/// Triangle rule of degree `tri_degree` times Gauss-Legendre on `[0,1]`
/// exact to `line_degree`.
pub fn prism_quadrature(tri_degree: usize, line_degree: usize) -> Result<QuadratureRule> {
    let tri = triangle_rule(tri_degree).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "triangle quadrature degree {tri_degree} unsupported (max {MAX_TRI_DEGREE})"
        ))
    })?;
    let line = line_rule(line_degree).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "line quadrature degree {line_degree} unsupported (max {MAX_LINE_DEGREE})"
        ))
    })?;
    let mut points = Vec::with_capacity(tri.len() * line.len());
    let mut weights = Vec::with_capacity(tri.len() * line.len());
    for &([x, y], wt) in &tri {
        for &(z, wl) in &line {
            points.push([x, y, z]);
            weights.push(wt * wl);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        tri_degree,
        line_degree,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Horizontal {
    P0,
    P1(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Vertical {
    Const,
    Bottom,
    Top,
}

fn slot_basis(slot: &Slot, horiz: Family, vert: Family) -> (Horizontal, Vertical) {
    let nv = vert.vertical_dofs(slot.entity.vert_dim()).max(1);
    let (h_idx, v_idx) = (slot.component / nv, slot.component % nv);
    let h = match horiz {
        Family::CG1 => Horizontal::P1(slot.local),
        Family::DG0 => Horizontal::P0,
        Family::DG1 => Horizontal::P1(h_idx),
    };
    let v = match vert {
        Family::CG1 if slot.level == 0 => Vertical::Bottom,
        Family::CG1 => Vertical::Top,
        Family::DG0 => Vertical::Const,
        Family::DG1 if v_idx == 0 => Vertical::Bottom,
        Family::DG1 => Vertical::Top,
    };
    (h, v)
}

fn eval(basis: (Horizontal, Vertical), [x, y, z]: [f64; 3]) -> f64 {
    let h = match basis.0 {
        Horizontal::P0 => 1.0,
        Horizontal::P1(0) => 1.0 - x - y,
        Horizontal::P1(1) => x,
        Horizontal::P1(_) => y,
    };
    let v = match basis.1 {
        Vertical::Const => 1.0,
        Vertical::Bottom => 1.0 - z,
        Vertical::Top => z,
    };
    h * v
}

/// Basis values per `(slot, point)` for one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedBasis {
    /// `values[slot * npoints + q]`.
    pub values: Vec<f64>,
    pub slots: usize,
    pub npoints: usize,
    pub layout: String,
}

impl TabulatedBasis {
    pub fn new(layout: &DofLayout, rule: &QuadratureRule) -> Result<Self> {
        let (horiz, vert) = layout.elements().ok_or_else(|| {
            Error::InvalidArgument(format!("layout {layout} has no element basis"))
        })?;
        let slots = crate::fspace::local_slots(layout);
        let mut values = Vec::with_capacity(slots.len() * rule.len());
        for s in &slots {
            let basis = slot_basis(s, horiz, vert);
            values.extend(rule.points.iter().map(|&p| eval(basis, p)));
        }
        Ok(Self {
            values,
            slots: slots.len(),
            npoints: rule.len(),
            layout: layout.name().to_string(),
        })
    }

    pub fn at(&self, slot: usize, q: usize) -> f64 {
        self.values[slot * self.npoints + q]
    }
}

/// FLOP counts of one kernel application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelProfile {
    pub adds: u64,
    pub muls: u64,
    pub fmas: u64,
    pub vector_flops: u64,
    pub total_flops: u64,
}

impl KernelProfile {
    pub fn new(adds: u64, muls: u64, fmas: u64, vector_flops: u64) -> Result<Self> {
        let total_flops = adds + muls + 2 * fmas;
        if vector_flops > total_flops {
            return Err(Error::InvalidArgument(format!(
                "{vector_flops} vector FLOPs exceed {total_flops} total"
            )));
        }
        Ok(Self {
            adds,
            muls,
            fmas,
            vector_flops,
            total_flops,
        })
    }

    /// Marks `fraction` of the FLOPs as vectorized (what-if studies).
    pub fn with_vector_fraction(self, fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!(
                "vector FLOP fraction {fraction} outside [0,1]"
            )));
        }
        let vector_flops = (fraction * self.total_flops as f64).round() as u64;
        Self::new(self.adds, self.muls, self.fmas, vector_flops)
    }
}

/// Analytic FLOP profile of [`ResidualKernel`] for stencil size `k` and
/// `q` quadrature points.
///
/// Per point: `k` muls and `k−1` adds for `Σ_i f_i φ_i`, one mul for the
/// `|detJ|` scaling, `k` muls and `k` adds accumulating `s·wφ_j` into the
/// local tensor. The per-cell geometry (area and height from the
/// coordinates) and the iterator's scatter into the global field are not
/// counted. FMAs are reported as zero.
pub fn count_flops(layout: &DofLayout, rule: &QuadratureRule) -> KernelProfile {
    let k = layout.dofs_per_cell() as u64;
    let q = rule.len() as u64;
    KernelProfile::new(q * (2 * k - 1), q * (2 * k + 1), 0, 0).expect("no vector flops")
}

/// Number of coordinate slots: 3 vertices × 2 levels × 3 components.
const COORD_SLOTS: usize = 18;

/// Assembles `∫ f φ_j dx` for every basis function `φ_j` of a cell.
///
/// Inputs: `f` on the output space, then the coordinate field.
#[derive(Debug, Clone)]
pub struct ResidualKernel {
    k: usize,
    nq: usize,
    /// `phi[q * k + i]`
    phi: Vec<f64>,
    /// `wphi[q * k + j] = w_q φ_j(q)`
    wphi: Vec<f64>,
}

impl ResidualKernel {
    pub fn new(layout: &DofLayout, rule: &QuadratureRule) -> Result<Self> {
        let tab = TabulatedBasis::new(layout, rule)?;
        let (k, nq) = (tab.slots, tab.npoints);
        let mut phi = vec![0.0; k * nq];
        let mut wphi = vec![0.0; k * nq];
        for q in 0..nq {
            for j in 0..k {
                phi[q * k + j] = tab.at(j, q);
                wphi[q * k + j] = rule.weights[q] * tab.at(j, q);
            }
        }
        Ok(Self { k, nq, phi, wphi })
    }
}

/// `|detJ|` of the prism whose coordinate slots are `c`.
#[inline]
fn prism_det(c: &[f64]) -> f64 {
    let (x0, y0, z0) = (c[0], c[1], c[2]);
    let z0_top = c[5];
    let (x1, y1) = (c[6], c[7]);
    let (x2, y2) = (c[12], c[13]);
    ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)).abs() * (z0_top - z0)
}

impl StencilKernel for ResidualKernel {
    fn input_arities(&self) -> Vec<usize> {
        vec![self.k, COORD_SLOTS]
    }

    fn output_arity(&self) -> usize {
        self.k
    }

    #[inline]
    fn apply(&self, inputs: &Gathered<'_>, out: &mut [f64]) {
        let f = inputs.arg(0);
        let det = prism_det(inputs.arg(1));
        let k = self.k;
        for q in 0..self.nq {
            let phi = &self.phi[q * k..(q + 1) * k];
            let mut fq = f[0] * phi[0];
            for i in 1..k {
                fq += f[i] * phi[i];
            }
            let s = fq * det;
            let wphi = &self.wphi[q * k..(q + 1) * k];
            for j in 0..k {
                out[j] += s * wphi[j];
            }
        }
    }
}

/// Values of all DoFs of one space.
#[derive(Debug, Clone)]
pub struct Field {
    space: Arc<FunctionSpace>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(space: Arc<FunctionSpace>) -> Self {
        let values = vec![0.0; space.total_dofs()];
        Self { space, values }
    }

    pub fn constant(space: Arc<FunctionSpace>, value: f64) -> Self {
        let values = vec![value; space.total_dofs()];
        Self { space, values }
    }

    pub fn from_values(space: Arc<FunctionSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.total_dofs() {
            return Err(Error::SpaceMismatch(format!(
                "{} values for a space with {} DoFs",
                values.len(),
                space.total_dofs()
            )));
        }
        Ok(Self { space, values })
    }

    /// Pseudo-random values in `[0,1)` from ChaCha8 seeded with `seed`
    /// (53 high bits of each `next_u64`).
    pub fn random(space: Arc<FunctionSpace>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..space.total_dofs())
            .map(|_| (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
            .collect();
        Self { space, values }
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// The extruded vertex coordinates as a field on the `δ((0,0)) = 3`
/// layout.
pub fn coordinate_field(mesh: &Arc<ExtrudedMesh>) -> Field {
    let space = Arc::new(FunctionSpace::new(mesh.clone(), DofLayout::coordinates()));
    let mut values = vec![0.0; space.total_dofs()];
    let h = mesh.layer_height();
    for (i, &[x, y]) in mesh.base().coords().iter().enumerate() {
        let origin = space.dof_origin(EntityId::vertex(i));
        for l in 0..=mesh.layers() {
            values[origin + 3 * l..origin + 3 * l + 3].copy_from_slice(&[x, y, l as f64 * h]);
        }
    }
    Field { space, values }
}

fn check_coordinates(coords: &Field) -> Result<()> {
    if coords.space.layout() != &DofLayout::coordinates() {
        return Err(Error::SpaceMismatch(format!(
            "coordinates must use the `coords` layout, got {}",
            coords.space.layout()
        )));
    }
    Ok(())
}

/// Accumulates the residual of `f` into `out` (not zeroed here).
pub fn assemble_residual_into(
    kernel: &ResidualKernel,
    f: &Field,
    coords: &Field,
    out: &mut Field,
    schedule: &Schedule,
) -> Result<()> {
    check_coordinates(coords)?;
    if !Arc::ptr_eq(&f.space, &out.space) {
        return Err(Error::SpaceMismatch(
            "input and output must share one function space".into(),
        ));
    }
    iterate_columns(
        kernel,
        &[
            Arg::new(&f.space, &f.values),
            Arg::new(&coords.space, &coords.values),
        ],
        &out.space,
        &mut out.values,
        schedule,
    )
}

/// `out_j = ∫_Ω f φ_j dx` on the space of `f`.
pub fn assemble_residual(
    f: &Field,
    coords: &Field,
    rule: &QuadratureRule,
    schedule: &Schedule,
) -> Result<Field> {
    let kernel = ResidualKernel::new(f.space.layout(), rule)?;
    let mut out = Field::zeros(f.space.clone());
    assemble_residual_into(&kernel, f, coords, &mut out, schedule)?;
    Ok(out)
}
