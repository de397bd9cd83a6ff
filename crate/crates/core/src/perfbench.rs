//! Measurement methodology and the performance model.
//!
//! * Runtime is the minimum over repeated timed runs after one untimed
//!   warm-up, on a monotonic nanosecond clock.
//! * Valuable data volume assumes a perfect cache: input, output and
//!   coordinate fields are each moved once, 8 bytes per value. Explicit
//!   maps are excluded.
//! * The FLOP bound is `P_d = B_c · f_b · f_v` with `B_c` one FLOP per
//!   cycle per active core.
//!
//! Frequency scaling and turbo must be fixed by the operator before
//! measuring; nothing here controls them.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::extrusion::ExtrudedMesh;
use crate::fspace::{total_dofs_closed_form, DofLayout, FunctionSpace};
use crate::iterate::Schedule;
use crate::kernels::{
    assemble_residual_into, coordinate_field, count_flops, prism_quadrature, Field, KernelProfile,
    ResidualKernel,
};
use crate::mesh::{generate_unit_square_mesh, BaseMesh};
use crate::ordering::OrderingKind;

const F64_BYTES: usize = std::mem::size_of::<f64>();

/// Machine parameters, read from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareConfig {
    /// Physical cores.
    pub cores: usize,
    pub frequency_ghz: f64,
    /// Last-level cache size in bytes.
    pub llc_bytes: usize,
    pub sockets: usize,
    /// Whether the core issues fused multiply-adds (selects the `f_b` form).
    pub fma: bool,
    pub stream_gbs_override: Option<f64>,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            cores: 1,
            frequency_ghz: 2.0,
            llc_bytes: 32 << 20,
            sockets: 1,
            fma: false,
            stream_gbs_override: None,
        }
    }
}

impl HardwareConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut hw = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                path: "<hardware config>".into(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(v: &str, key: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("bad value `{v}` for {key}"))
            }
            match key {
                "cores" => hw.cores = num(value, key).map_err(perr)?,
                "frequency_ghz" => hw.frequency_ghz = num(value, key).map_err(perr)?,
                "llc_bytes" => hw.llc_bytes = num(value, key).map_err(perr)?,
                "sockets" => hw.sockets = num(value, key).map_err(perr)?,
                "fma" => hw.fma = num(value, key).map_err(perr)?,
                "stream_gbs_override" => {
                    hw.stream_gbs_override = Some(num(value, key).map_err(perr)?)
                }
                other => return Err(perr(format!("unknown key `{other}`"))),
            }
        }
        if hw.cores == 0 || hw.frequency_ghz <= 0.0 || hw.llc_bytes == 0 {
            return Err(invalid("cores, frequency_ghz and llc_bytes must be positive"));
        }
        Ok(hw)
    }

    pub fn arch(&self) -> Arch {
        if self.fma {
            Arch::Fma
        } else {
            Arch::NoFma
        }
    }

    /// `B_c` in FLOP/s for `threads` active threads (capped at the core
    /// count).
    pub fn base_rate(&self, threads: usize) -> f64 {
        threads.clamp(1, self.cores) as f64 * self.frequency_ghz * 1e9
    }
}

/// Instruction issue model for the balance factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    /// One add and one multiply per cycle.
    NoFma,
    /// As `NoFma`, and an FMA may replace either.
    Fma,
}

/// `f_b`: achievable speed-up over one FLOP per cycle given the
/// add/multiply mix.
///
/// Without FMA: `1 + min(a,m)/max(a,m)`; with FMA, `k = fmas/2` is added to
/// numerator and denominator.
pub fn balance_factor(adds: u64, muls: u64, fmas: u64, arch: Arch) -> Result<f64> {
    if adds == 0 && muls == 0 && fmas == 0 {
        return Err(invalid("balance factor of an empty FLOP mix"));
    }
    let (lo, hi) = (adds.min(muls) as f64, adds.max(muls) as f64);
    Ok(match arch {
        Arch::NoFma => {
            if hi == 0.0 {
                1.0
            } else {
                1.0 + lo / hi
            }
        }
        Arch::Fma => {
            let k = fmas as f64 / 2.0;
            1.0 + (lo + k) / (hi + k)
        }
    })
}

/// `f_v = 1 + 3 · vector/total`, for 4-wide double precision vectors.
pub fn vector_factor(vector_flops: f64, total_flops: f64) -> Result<f64> {
    if total_flops.is_nan() || total_flops <= 0.0 || !(0.0..=total_flops).contains(&vector_flops) {
        return Err(invalid(format!(
            "vector FLOPs {vector_flops} must lie in [0, total = {total_flops}] with total > 0"
        )));
    }
    Ok(1.0 + 3.0 * vector_flops / total_flops)
}

/// `P_d = B_c · f_b · f_v`.
pub fn peak_throughput(base_rate: f64, f_b: f64, f_v: f64) -> f64 {
    base_rate * f_b * f_v
}

/// `8 · (2·dofs(fs) + dofs(coords))` bytes.
pub fn valuable_volume(fs: &FunctionSpace, coords: &FunctionSpace) -> usize {
    F64_BYTES * (2 * fs.total_dofs() + coords.total_dofs())
}

/// Minimum wall time in seconds of `repeats` runs of `f`, after one
/// untimed warm-up run.
pub fn time_min(repeats: usize, mut f: impl FnMut()) -> f64 {
    f();
    (0..repeats.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Best triad bandwidth per thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamReport {
    /// `(threads, GB/s)` for `threads = 1..=max`.
    pub sweep: Vec<(usize, f64)>,
    pub best_gbs: f64,
}

/// Triad array length whose three arrays span `4 × llc_bytes`.
pub fn stream_array_len(llc_bytes: usize) -> usize {
    (4 * llc_bytes).div_ceil(3 * F64_BYTES)
}

fn alloc(len: usize, value: f64) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| Error::InsufficientMemory {
        required: 3 * len * F64_BYTES,
    })?;
    v.resize(len, value);
    Ok(v)
}

/// STREAM triad `a_i = b_i + α c_i`, swept over `1..=max_threads`.
///
/// Each pass counts `3 × 8 × array_len` bytes. Reports the best pass per
/// thread count and overall.
pub fn stream_triad(
    array_len: usize,
    max_threads: usize,
    repeats: usize,
    llc_bytes: usize,
) -> Result<StreamReport> {
    if max_threads == 0 {
        return Err(invalid("thread count must be at least 1"));
    }
    if 3 * F64_BYTES * array_len < 4 * llc_bytes {
        return Err(invalid(format!(
            "triad arrays of {array_len} doubles do not exceed 4x the {llc_bytes}-byte LLC; need {}",
            stream_array_len(llc_bytes)
        )));
    }
    let mut a = alloc(array_len, 0.0)?;
    let b = alloc(array_len, 1.0)?;
    let c = alloc(array_len, 2.0)?;
    let alpha = 3.0;
    let bytes = (3 * F64_BYTES * array_len) as f64;

    let mut sweep = Vec::with_capacity(max_threads);
    for threads in 1..=max_threads {
        let chunk = array_len.div_ceil(threads);
        let secs = time_min(repeats, || {
            std::thread::scope(|s| {
                for ((a, b), c) in a.chunks_mut(chunk).zip(b.chunks(chunk)).zip(c.chunks(chunk)) {
                    s.spawn(move || {
                        for ((a, &b), &c) in a.iter_mut().zip(b).zip(c) {
                            *a = b + alpha * c;
                        }
                    });
                }
            });
            std::hint::black_box(&mut a);
        });
        sweep.push((threads, bytes / secs / 1e9));
    }
    let best_gbs = sweep.iter().map(|&(_, g)| g).fold(0.0, f64::max);
    Ok(StreamReport { sweep, best_gbs })
}

/// Unit-square subdivision giving about `target_cells / layers` base cells:
/// `round(sqrt(target / (2λ)))`.
pub fn generator_n(target_cells: usize, layers: usize) -> Result<usize> {
    let n = (target_cells as f64 / (2.0 * layers as f64)).sqrt().round() as usize;
    if n < 1 || layers == 0 {
        return Err(invalid(format!(
            "target of {target_cells} cells is too small for {layers} layers"
        )));
    }
    Ok(n)
}

/// Valuable bytes of `layout` on the unit-square mesh of subdivision `n`
/// extruded over `layers`, from closed-form entity counts.
pub fn unit_square_volume(layout: &DofLayout, n: usize, layers: usize) -> usize {
    let counts = [(n + 1) * (n + 1), 3 * n * n + 2 * n, 2 * n * n];
    let dofs = |l: &DofLayout| -> usize {
        (0..3)
            .map(|d| counts[d] * (layers * l.column_stride(d) + l.delta_at(d, 0)))
            .sum()
    };
    F64_BYTES * (2 * dofs(layout) + dofs(&DofLayout::coordinates()))
}

/// Smallest total cell count whose generated meshes give every layout at
/// every layer count at least `factor × llc_bytes` of valuable data.
pub fn target_cells_for_volume(
    layouts: &[DofLayout],
    layers: &[usize],
    llc_bytes: usize,
    factor: usize,
) -> usize {
    let need = factor * llc_bytes;
    let mut target = 0usize;
    for &l in layers {
        for layout in layouts {
            let mut n = 1;
            while unit_square_volume(layout, n, l) < need {
                n += 1;
            }
            // round(sqrt(t / 2l)) >= n  <=>  t >= 2l (n - 1/2)^2
            let t = (2.0 * l as f64 * (n as f64 - 0.5).powi(2)).ceil() as usize;
            target = target.max(t);
        }
    }
    // guard the rounding boundary
    loop {
        let ok = layers.iter().all(|&l| {
            let n = generator_n(target, l).unwrap_or(0);
            layouts.iter().all(|lay| unit_square_volume(lay, n, l) >= need)
        });
        if ok {
            return target;
        }
        target += 1;
    }
}

/// Traversal used while timing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulePolicy {
    Sequential,
    Colored,
}

impl FromStr for SchedulePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seq" | "sequential" => Ok(Self::Sequential),
            "colored" => Ok(Self::Colored),
            other => Err(invalid(format!("unknown schedule `{other}`"))),
        }
    }
}

/// Knobs shared by all measurements of a sweep.
#[derive(Debug, Clone)]
pub struct MeasureParams {
    pub threads: usize,
    pub repeats: usize,
    pub quad_degree: usize,
    pub vector_fraction: f64,
    pub seed: u64,
    pub schedule: SchedulePolicy,
}

impl Default for MeasureParams {
    fn default() -> Self {
        Self {
            threads: 1,
            repeats: 10,
            quad_degree: 2,
            vector_fraction: 0.0,
            seed: 0,
            schedule: SchedulePolicy::Sequential,
        }
    }
}

/// An ordered, extruded base mesh ready for timing.
pub struct Prepared {
    pub ordering: OrderingKind,
    pub mesh: Arc<ExtrudedMesh>,
    pub coords: Field,
    pub schedule: Schedule,
}

impl Prepared {
    /// Reorders `base`, extrudes it over `layers` of unit height and builds
    /// the coordinate field and schedule.
    pub fn new(
        base: &BaseMesh,
        ordering: OrderingKind,
        layers: usize,
        params: &MeasureParams,
    ) -> Result<Self> {
        Self::with_height(base, ordering, layers, 1.0, params)
    }

    /// As [`Prepared::new`] with layer height `height`.
    pub fn with_height(
        base: &BaseMesh,
        ordering: OrderingKind,
        layers: usize,
        height: f64,
        params: &MeasureParams,
    ) -> Result<Self> {
        let ordered = ordering.reorder(base, params.seed)?;
        let mesh = Arc::new(ExtrudedMesh::new(ordered, layers, height)?);
        let coords = coordinate_field(&mesh);
        let schedule = match (params.schedule, params.threads) {
            (SchedulePolicy::Sequential, 1) => Schedule::Sequential,
            (SchedulePolicy::Sequential, t) => {
                return Err(invalid(format!(
                    "sequential schedule cannot use {t} threads; use the colored schedule"
                )))
            }
            (SchedulePolicy::Colored, t) => Schedule::colored(mesh.base(), t)?,
        };
        Ok(Self {
            ordering,
            mesh,
            coords,
            schedule,
        })
    }
}

/// One measured configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfRecord {
    pub layout: String,
    pub ordering: String,
    pub layers: usize,
    pub base_cells: usize,
    pub threads: usize,
    pub runtime_s: f64,
    pub valuable_bytes: usize,
    pub valuable_gbs: f64,
    pub flops: u64,
    pub gflops: f64,
    pub f_b: f64,
    pub f_v: f64,
    pub peak_gflops: f64,
    pub peak_fraction: f64,
    pub stream_gbs: f64,
    #[serde(skip)]
    pub map_bytes: usize,
}

pub const CSV_HEADER: &str = "layout,ordering,layers,base_cells,threads,runtime_s,valuable_bytes,valuable_gbs,flops,gflops,f_b,f_v,peak_gflops,peak_fraction,stream_gbs";

impl PerfRecord {
    /// Extruded cells processed per second.
    pub fn cells_per_second(&self) -> f64 {
        (self.base_cells * self.layers) as f64 / self.runtime_s
    }

    /// Valuable bandwidth as a fraction of STREAM.
    pub fn bandwidth_fraction(&self) -> f64 {
        self.valuable_gbs / self.stream_gbs
    }
}

/// Derived metrics from primitive measurements.
#[allow(clippy::too_many_arguments)]
pub fn make_record(
    layout: &DofLayout,
    ordering: OrderingKind,
    mesh: &ExtrudedMesh,
    threads: usize,
    runtime_s: f64,
    valuable_bytes: usize,
    map_bytes: usize,
    profile: &KernelProfile,
    hw: &HardwareConfig,
    stream_gbs: f64,
) -> Result<PerfRecord> {
    if runtime_s.is_nan() || runtime_s <= 0.0 {
        return Err(invalid(format!("runtime must be positive, got {runtime_s}")));
    }
    let flops = profile.total_flops * mesh.num_cells() as u64;
    let f_b = balance_factor(profile.adds, profile.muls, profile.fmas, hw.arch())?;
    let f_v = vector_factor(profile.vector_flops as f64, profile.total_flops as f64)?;
    let gflops = flops as f64 / runtime_s / 1e9;
    let peak_gflops = peak_throughput(hw.base_rate(threads), f_b, f_v) / 1e9;
    Ok(PerfRecord {
        layout: layout.name().to_string(),
        ordering: ordering.name().to_string(),
        layers: mesh.layers(),
        base_cells: mesh.base().num_cells(),
        threads,
        runtime_s,
        valuable_bytes,
        valuable_gbs: valuable_bytes as f64 / runtime_s / 1e9,
        flops,
        gflops,
        f_b,
        f_v,
        peak_gflops,
        peak_fraction: gflops / peak_gflops,
        stream_gbs,
        map_bytes,
    })
}

/// Times the residual assembly of `layout` on a prepared mesh.
pub fn measure(
    prep: &Prepared,
    layout: &DofLayout,
    params: &MeasureParams,
    hw: &HardwareConfig,
    stream_gbs: f64,
) -> Result<PerfRecord> {
    let rule = prism_quadrature(params.quad_degree, params.quad_degree)?;
    let profile = count_flops(layout, &rule).with_vector_fraction(params.vector_fraction)?;
    let space = Arc::new(FunctionSpace::new(prep.mesh.clone(), layout.clone()));
    let kernel = ResidualKernel::new(layout, &rule)?;
    let f = Field::random(space.clone(), params.seed);
    let mut out = Field::zeros(space.clone());

    let mut status = Ok(());
    let mut run = || {
        out.values_mut().fill(0.0);
        let t = Instant::now();
        let r = assemble_residual_into(&kernel, &f, &prep.coords, &mut out, &prep.schedule);
        let dt = t.elapsed().as_secs_f64();
        if let Err(e) = r {
            status = Err(e);
        }
        dt
    };
    run();
    let runtime = (0..params.repeats.max(1)).map(|_| run()).fold(f64::INFINITY, f64::min);
    status?;

    make_record(
        layout,
        prep.ordering,
        &prep.mesh,
        prep.schedule.threads(),
        runtime,
        valuable_volume(&space, prep.coords.space()),
        space.map_bytes() + prep.coords.space().map_bytes(),
        &profile,
        hw,
        stream_gbs,
    )
}

/// Full description of a single experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub layout: DofLayout,
    pub ordering: OrderingKind,
    pub layers: usize,
    pub target_cells: usize,
    pub params: MeasureParams,
    pub hw: HardwareConfig,
    pub stream_gbs: f64,
}

/// Sizes a unit-square base so that `N₂·λ ≈ target_cells`, orders it,
/// and measures one layout.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PerfRecord> {
    let n = generator_n(cfg.target_cells, cfg.layers)?;
    let base = generate_unit_square_mesh(n)?;
    let prep = Prepared::new(&base, cfg.ordering, cfg.layers, &cfg.params)?;
    drop(base);
    measure(&prep, &cfg.layout, &cfg.params, &cfg.hw, cfg.stream_gbs)
}

/// Closed-form check that a space's DoF count matches its numbering.
pub fn expected_total_dofs(space: &FunctionSpace) -> usize {
    total_dofs_closed_form(space.mesh(), space.layout())
}

/// Appends records to a CSV file, writing the header only when the file is
/// new or empty.
pub fn append_csv(path: &Path, records: &[PerfRecord]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let fresh = file.metadata().map_err(io)?.len() == 0;
    if fresh {
        writeln!(file, "{CSV_HEADER}").map_err(io)?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    for r in records {
        w.serialize(r)
            .map_err(|e| io(std::io::Error::other(e.to_string())))?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Reads records back from a CSV produced by [`append_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<PerfRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let headers = r
        .headers()
        .map_err(|e| invalid(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if headers != CSV_HEADER {
        return Err(invalid(format!("unexpected CSV header `{headers}`")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| invalid(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::single_triangle;

    #[test]
    fn balance_factor_cases() {
        assert_eq!(balance_factor(5, 5, 0, Arch::NoFma).unwrap(), 2.0);
        assert_eq!(balance_factor(5, 0, 0, Arch::NoFma).unwrap(), 1.0);
        assert!((balance_factor(7, 10, 0, Arch::NoFma).unwrap() - 1.7).abs() < 1e-15);
        // k = 2: (4 + 2) / (8 + 2)
        assert!((balance_factor(4, 8, 4, Arch::Fma).unwrap() - 1.6).abs() < 1e-15);
        assert_eq!(balance_factor(0, 0, 6, Arch::Fma).unwrap(), 2.0);
        assert!(balance_factor(0, 0, 0, Arch::NoFma).is_err());
    }

    #[test]
    fn vector_factor_cases() {
        assert_eq!(vector_factor(0.0, 10.0).unwrap(), 1.0);
        assert_eq!(vector_factor(10.0, 10.0).unwrap(), 4.0);
        assert!((vector_factor(0.1933, 1.0).unwrap() - 1.58).abs() < 1e-2);
        assert!(vector_factor(11.0, 10.0).is_err());
        assert!(vector_factor(0.0, 0.0).is_err());
        assert!(vector_factor(-1.0, 10.0).is_err());
    }

    #[test]
    fn peak_cases() {
        let b = 2.0e9;
        assert_eq!(peak_throughput(b, 1.0, 1.0), b);
        assert_eq!(peak_throughput(b, 2.0, 4.0), 16.0e9);
        let sandy = HardwareConfig {
            cores: 12,
            frequency_ghz: 2.0,
            ..Default::default()
        };
        assert!((peak_throughput(sandy.base_rate(12), 1.5, 1.0) - 36.0e9).abs() < 1.0);
        assert_eq!(sandy.base_rate(48), sandy.base_rate(12));
    }

    #[test]
    fn volume_cases() {
        let mesh = Arc::new(ExtrudedMesh::unit_height(single_triangle(), 1).unwrap());
        let fs = FunctionSpace::new(mesh.clone(), DofLayout::parse("CG1xCG1").unwrap());
        let coords = FunctionSpace::new(mesh, DofLayout::coordinates());
        assert_eq!(valuable_volume(&fs, &coords), 240);
        assert_eq!(unit_square_volume(&DofLayout::parse("CG1xCG1").unwrap(), 1, 3),
            8 * (2 * 4 * 4 + 3 * 4 * 4));
    }

    #[test]
    fn sizing_rule() {
        assert_eq!(generator_n(15_000_000, 100).unwrap(), 274);
        let n = 274;
        let cells = 2 * n * n * 100;
        assert!((cells as f64 - 15.0e6).abs() / 15.0e6 < 0.01);
        assert!(generator_n(10, 100).is_err());
    }

    #[test]
    fn target_meets_volume() {
        let layouts = [DofLayout::parse("CG1xCG1").unwrap(), DofLayout::parse("DG1xDG1").unwrap()];
        let layers = [1, 20, 100];
        let llc = 1 << 20;
        let t = target_cells_for_volume(&layouts, &layers, llc, 4);
        for &l in &layers {
            let n = generator_n(t, l).unwrap();
            for lay in &layouts {
                assert!(unit_square_volume(lay, n, l) >= 4 * llc);
            }
        }
        assert!(target_cells_for_volume(&layouts, &layers, llc, 4) == t);
    }

    #[test]
    fn hardware_config_parsing() {
        let hw = HardwareConfig::parse("# desk\ncores = 4\nfrequency_ghz=3.1\nllc_bytes=8388608\nfma=true\n").unwrap();
        assert_eq!(hw.cores, 4);
        assert_eq!(hw.arch(), Arch::Fma);
        assert_eq!(hw.stream_gbs_override, None);
        assert!(HardwareConfig::parse("cores=4\nbogus=1\n").is_err());
        assert!(matches!(HardwareConfig::parse("cores\n"), Err(Error::Parse { line: 1, .. })));
        assert!(HardwareConfig::parse("cores=0\n").is_err());
    }

    #[test]
    fn stream_rejects_small_arrays() {
        assert!(stream_triad(10, 1, 1, 1 << 20).is_err());
        assert!(stream_triad(stream_array_len(1 << 10), 0, 1, 1 << 10).is_err());
    }

    #[test]
    fn stream_small_run() {
        let llc = 1 << 16;
        let r = stream_triad(stream_array_len(llc), 2, 2, llc).unwrap();
        assert_eq!(r.sweep.len(), 2);
        assert!(r.best_gbs.is_finite() && r.best_gbs > 0.0);
        assert!(r.best_gbs >= r.sweep[0].1);
    }

    #[test]
    fn experiment_analytic_quantities_are_deterministic() {
        let hw = HardwareConfig::default();
        let cfg = ExperimentConfig {
            layout: DofLayout::parse("CG1xCG1").unwrap(),
            ordering: OrderingKind::Random,
            layers: 4,
            target_cells: 800,
            params: MeasureParams {
                repeats: 1,
                seed: 5,
                ..Default::default()
            },
            hw,
            stream_gbs: 10.0,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!((a.flops, a.valuable_bytes), (b.flops, b.valuable_bytes));
        assert_eq!(a.base_cells, 200);
        assert!(a.runtime_s > 0.0 && a.peak_fraction > 0.0);
        assert!((a.gflops * a.runtime_s * 1e9 - a.flops as f64).abs() <= 1e-12 * a.flops as f64);
    }

    #[test]
    fn csv_roundtrip_and_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mesh = ExtrudedMesh::unit_height(single_triangle(), 2).unwrap();
        let layout = DofLayout::parse("DG0xDG0").unwrap();
        let rule = prism_quadrature(2, 2).unwrap();
        let rec = make_record(&layout, OrderingKind::Rcm, &mesh, 1, 0.5, 80, 8,
            &count_flops(&layout, &rule), &HardwareConfig::default(), 12.0).unwrap();
        append_csv(&path, &[rec.clone()]).unwrap();
        append_csv(&path, &[rec.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 3);
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        let mut expect = rec;
        expect.map_bytes = 0;
        assert_eq!(back[0], expect);
    }

    #[test]
    fn nonpositive_runtime_rejected() {
        let mesh = ExtrudedMesh::unit_height(single_triangle(), 2).unwrap();
        let layout = DofLayout::parse("DG0xDG0").unwrap();
        let rule = prism_quadrature(2, 2).unwrap();
        assert!(make_record(&layout, OrderingKind::Rcm, &mesh, 1, 0.0, 80, 8,
            &count_flops(&layout, &rule), &HardwareConfig::default(), 12.0).is_err());
    }
}
