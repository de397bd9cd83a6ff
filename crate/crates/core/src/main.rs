use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use extruded::fspace::{DofLayout, Family};
use extruded::mesh::io::{load_mesh, MeshFormat};
use extruded::mesh::{generate_unit_square_mesh, BaseMesh};
use extruded::ordering::OrderingKind;
use extruded::perfbench::{
    append_csv, generator_n, measure, stream_array_len, stream_triad, target_cells_for_volume,
    HardwareConfig, MeasureParams, PerfRecord, Prepared, SchedulePolicy,
};
use extruded::verify;

/// Column-wise DoF numbering benchmarks for extruded meshes.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time residual assembly over layouts × orderings × layer counts.
    Bench(BenchArgs),
    /// Measure STREAM triad bandwidth.
    Stream(StreamArgs),
    /// Run the brute-force oracle suite on the built-in fixtures.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct StreamArgs {
    /// Hardware description (key=value).
    #[arg(long)]
    hw: Option<PathBuf>,
    /// Highest thread count tried; defaults to twice the core count.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Base mesh file (Triangle .node/.ele stem or Gmsh 2 .msh).
    #[arg(long, conflicts_with = "generate")]
    mesh: Option<PathBuf>,
    /// Unit-square base mesh with n×n squares.
    #[arg(long)]
    generate: Option<usize>,
    /// Mesh file format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<MeshFormat>,
    /// Layer counts.
    #[arg(long, value_delimiter = ',', default_values_t = default_layers())]
    layers: Vec<usize>,
    /// Horizontal element families.
    #[arg(long, value_delimiter = ',', default_values_t = [Family::CG1])]
    horiz: Vec<Family>,
    /// Vertical element families.
    #[arg(long, value_delimiter = ',', default_values_t = [Family::CG1])]
    vert: Vec<Family>,
    #[arg(long, value_delimiter = ',', default_values_t = [OrderingKind::Rcm, OrderingKind::Random])]
    ordering: Vec<OrderingKind>,
    /// Seed for the random ordering and the input field.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// `seq` or `colored`; colored whenever more than one thread is used.
    #[arg(long)]
    schedule: Option<SchedulePolicy>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long, default_value_t = 2)]
    quad_degree: usize,
    /// Extruded cells per generated mesh; defaults to 4× the LLC in data.
    #[arg(long)]
    target_cells: Option<usize>,
    /// Layer height of the extrusion.
    #[arg(long, default_value_t = 1.0)]
    height: f64,
    /// Fraction of kernel FLOPs counted as 4-wide vector FLOPs.
    #[arg(long, default_value_t = 0.0)]
    vector_flops_fraction: f64,
    #[arg(long)]
    hw: Option<PathBuf>,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

fn default_layers() -> Vec<usize> {
    (1..=10).chain((20..=100).step_by(10)).collect()
}

fn stage<T, E: std::fmt::Display>(name: &str, r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{name}: {e}"))
}

fn load_hw(path: &Option<PathBuf>) -> Result<HardwareConfig, String> {
    match path {
        Some(p) => stage("hardware config", HardwareConfig::load(p)),
        None => Ok(HardwareConfig::default()),
    }
}

fn stream_gbs(hw: &HardwareConfig, threads: usize, repeats: usize) -> Result<f64, String> {
    if let Some(v) = hw.stream_gbs_override {
        return Ok(v);
    }
    let len = stream_array_len(hw.llc_bytes);
    Ok(stage("stream", stream_triad(len, threads, repeats, hw.llc_bytes))?.best_gbs)
}

enum Source {
    Fixed(BaseMesh),
    Sized(usize),
}

fn bench(args: BenchArgs) -> Result<(), String> {
    if args.layers.is_empty() || args.horiz.is_empty() || args.vert.is_empty() || args.ordering.is_empty() {
        return Err("arguments: layer, family and ordering lists must be non-empty".into());
    }
    if args.layers.contains(&0) {
        return Err("arguments: layer counts must be at least 1".into());
    }
    if args.height.is_nan() || args.height <= 0.0 {
        return Err("arguments: --height must be positive".into());
    }
    let hw = load_hw(&args.hw)?;
    let layouts: Vec<DofLayout> = args
        .horiz
        .iter()
        .flat_map(|&h| args.vert.iter().map(move |&v| DofLayout::builtin(h, v)))
        .collect();
    let schedule = args.schedule.unwrap_or(if args.threads > 1 {
        SchedulePolicy::Colored
    } else {
        SchedulePolicy::Sequential
    });
    let params = MeasureParams {
        threads: args.threads,
        repeats: args.repeats as usize,
        quad_degree: args.quad_degree,
        vector_fraction: args.vector_flops_fraction,
        seed: args.seed,
        schedule,
    };

    let source = if let Some(path) = &args.mesh {
        let format = match args.format {
            Some(f) => f,
            None => MeshFormat::from_path(path)
                .or_else(|| path.with_extension("node").exists().then_some(MeshFormat::NodeEle))
                .ok_or_else(|| format!("mesh: cannot infer the format of {}; pass --format", path.display()))?,
        };
        Source::Fixed(stage("mesh", load_mesh(path, format))?)
    } else if let Some(n) = args.generate {
        Source::Fixed(stage("mesh", generate_unit_square_mesh(n))?)
    } else {
        let target = args
            .target_cells
            .unwrap_or_else(|| target_cells_for_volume(&layouts, &args.layers, hw.llc_bytes, 4));
        Source::Sized(target)
    };

    let stream = stream_gbs(&hw, 2 * hw.cores, params.repeats)?;
    println!("stream_gbs={stream:.3}");

    let mut rows: Vec<PerfRecord> = Vec::new();
    for &layers in &args.layers {
        let generated;
        let base = match &source {
            Source::Fixed(m) => m,
            Source::Sized(target) => {
                let n = stage("sizing", generator_n(*target, layers))?;
                generated = stage("mesh", generate_unit_square_mesh(n))?;
                &generated
            }
        };
        for &ordering in &args.ordering {
            let prep = stage("extrusion", Prepared::with_height(base, ordering, layers, args.height, &params))?;
            for layout in &layouts {
                let rec = stage("benchmark", measure(&prep, layout, &params, &hw, stream))?;
                println!(
                    "{:<9} {:<7} λ={:<4} cells={:<9} {:.3e}s {:.3} GB/s {:.3} GFLOP/s ({:.1}% of peak)",
                    rec.layout,
                    rec.ordering,
                    rec.layers,
                    rec.base_cells,
                    rec.runtime_s,
                    rec.valuable_gbs,
                    rec.gflops,
                    100.0 * rec.peak_fraction
                );
                rows.push(rec);
            }
        }
    }
    stage("output", append_csv(&args.out, &rows))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Bench(args) => bench(args),
        Command::Stream(args) => {
            let hw = load_hw(&args.hw)?;
            let threads = args.threads.unwrap_or(2 * hw.cores);
            let len = stream_array_len(hw.llc_bytes);
            let report = stage("stream", stream_triad(len, threads, args.repeats as usize, hw.llc_bytes))?;
            println!("stream_gbs={:.3}", report.best_gbs);
            Ok(())
        }
        Command::Verify { seed } => {
            let results = verify::run_suite(seed);
            for r in results.iter().filter(|r| r.outcome.is_err()) {
                eprintln!(
                    "FAIL {} on {} λ={}: {}",
                    r.layout,
                    r.mesh,
                    r.layers,
                    r.outcome.as_ref().unwrap_err()
                );
            }
            println!("{}", verify::summary(&results));
            if results.iter().all(|r| r.outcome.is_ok()) {
                Ok(())
            } else {
                Err("verify: oracle checks failed".into())
            }
        }
    }
}

/// Parses arguments; on failure prints the error followed by the usage of
/// the subcommand involved.
fn parse() -> Result<Cli, ExitCode> {
    Cli::try_parse().map_err(|e| {
        let _ = e.print();
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            return ExitCode::SUCCESS;
        }
        let mut cmd = Cli::command();
        cmd.build();
        let sub = std::env::args().nth(1).unwrap_or_default();
        let usage = match cmd.find_subcommand_mut(&sub) {
            Some(sub) => sub.render_usage(),
            None => cmd.render_usage(),
        };
        eprintln!("\n{usage}");
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
