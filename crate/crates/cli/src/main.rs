//! `skycover`: generate catalogs, solve and baseline covers, render SVGs.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O or malformed input, 4 infeasible,
//! 1 anything else.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skycover::cover::{read_cover_json, write_cover_json, Cover};
use skycover::driver::{baseline, solve, RunReport, SolverConfig};
use skycover::instance::{generate, read_catalog, read_points, subsample, write_catalog, GeneratorConfig, Instance};
use skycover::par::{self, Exec};
use skycover::relaxation::RelaxedProblem;
use skycover::render::{read_trajectory_csv, render_svg, write_trajectory_csv, Layers, RenderSpec, Scene};
use skycover::{Error, RegionRect, SpherePoint};

#[derive(Parser)]
#[command(name = "skycover", version, about = "Capacitated disc covers on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic clustered catalog.
    Generate(GenerateArgs),
    /// Search for a small improved cover.
    Solve(SolveArgs),
    /// Same search over unimproved uniform covers.
    Baseline(SolveArgs),
    /// Draw a catalog and cover as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// ra_min,ra_max,dec_min,dec_max in degrees.
    #[arg(long)]
    region: String,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Share of points in Gaussian clusters.
    #[arg(long)]
    cluster_fraction: Option<f64>,
    /// Number of clusters; defaults to about one per 500 points.
    #[arg(long)]
    cluster_count: Option<usize>,
    /// Cluster width in degrees; defaults to the disc radius.
    #[arg(long)]
    cluster_sigma_deg: Option<f64>,
    #[arg(long, default_value_t = 1.5)]
    radius_deg: f64,
    /// Keep round(F * count) of the generated points, drawn with seed + 1;
    /// scale the capacity you solve with by the same F.
    #[arg(long)]
    subsample: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    region: String,
    #[arg(long, default_value_t = 1.5)]
    radius_deg: f64,
    #[arg(long, default_value_t = 600)]
    capacity: usize,
    #[arg(long, default_value_t = 0.02)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on improve iterations per probe.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Largest disc count tried, as a multiple of n / capacity.
    #[arg(long)]
    u_ceiling: Option<f64>,
    /// Run every loop on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Outputs go to PREFIX.cover.json, PREFIX.report.json, PREFIX.trace.csv,
    /// PREFIX.trajectory.csv and PREFIX.timings.json.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    catalog: PathBuf,
    /// Keep only catalog rows inside this region; also sets the projection
    /// center.
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    cover: Option<PathBuf>,
    /// Per-iteration disc centers written by `solve`.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Comma list of points, discs, segments, trajectories.
    #[arg(long, default_value = "points,discs")]
    layers: String,
    /// Disc capacity for the relaxed assignment behind `segments`.
    #[arg(long, default_value_t = 600)]
    capacity: usize,
    #[arg(long, default_value_t = 800)]
    width: u32,
    #[arg(long, default_value_t = 800)]
    height: u32,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: 3,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) => 2,
            Error::Io(_) | Error::Json(_) | Error::CatalogParse { .. } | Error::EmptyCatalog(_) => 3,
            Error::Infeasible { .. } => 4,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    par::init_thread_pool(None);
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a, false),
        Command::Baseline(a) => cmd_solve(a, true),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn parse_region(text: &str) -> Outcome<RegionRect> {
    RegionRect::parse(text).map_err(|e| Failure::usage(format!("--region: {e}")))
}

fn radians(deg: f64) -> Outcome<f64> {
    if !(deg > 0.0 && deg < 90.0) {
        return Err(Failure::usage("--radius-deg must lie in (0, 90)"));
    }
    Ok(deg.to_radians())
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::io(path, e))
}

/// Buffers every output and commits them together: each file goes to a
/// temporary sibling first and is renamed into place only after all of
/// them were written.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    fn commit(self) -> Outcome {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in self.files {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Failure::io(&path, e))?;
            tmp.write_all(&bytes)
                .and_then(|_| tmp.flush())
                .map_err(|e| Failure::io(&path, e))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| Failure::io(&path, e.error))?;
        }
        Ok(())
    }
}

fn cmd_generate(a: GenerateArgs) -> Outcome {
    if a.count == 0 {
        return Err(Failure::usage("--count must be at least 1"));
    }
    let region = parse_region(&a.region)?;
    let radius = radians(a.radius_deg)?;
    let mut config = GeneratorConfig::with_defaults(region, a.count, radius, a.seed);
    if let Some(f) = a.cluster_fraction {
        config.cluster_fraction = f;
    }
    if let Some(k) = a.cluster_count {
        config.cluster_count = k;
    }
    if let Some(s) = a.cluster_sigma_deg {
        config.cluster_sigma = s.to_radians();
    }
    // capacity does not affect the points
    let mut inst = generate(&config, radius, 1)?;
    if let Some(f) = a.subsample {
        inst = subsample(&inst, f, a.seed + 1)?;
    }
    let mut csv = Vec::new();
    write_catalog(&inst.galaxies, &mut csv).map_err(Failure::from)?;
    let mut out = Outputs::default();
    out.add(&a.out, csv);
    out.commit()?;
    println!("wrote {} points to {}", inst.len(), a.out.display());
    println!(
        "region ra [{}, {}] dec [{}, {}] deg, area {:.4} sr",
        region.ra_min,
        region.ra_max,
        region.dec_min,
        region.dec_max,
        region.area()
    );
    println!(
        "clustering: {:.0}% in {} clusters of width {:.3} deg, seed {}",
        100.0 * config.cluster_fraction,
        config.cluster_count,
        config.cluster_sigma.to_degrees(),
        config.seed
    );
    Ok(())
}

fn load_instance(catalog: &Path, region: &str, radius_deg: f64, capacity: usize) -> Outcome<(Instance, usize)> {
    let region = parse_region(region)?;
    let radius = radians(radius_deg)?;
    if capacity == 0 {
        return Err(Failure::usage("--capacity must be at least 1"));
    }
    let load = read_catalog(open(catalog)?, region, radius, capacity).map_err(|e| match e {
        Error::CatalogParse { .. } | Error::EmptyCatalog(_) => Failure::io(catalog, e),
        other => other.into(),
    })?;
    Ok((load.instance, load.out_of_region))
}

fn cmd_solve(a: SolveArgs, uniform: bool) -> Outcome {
    let (inst, skipped) = load_instance(&a.catalog, &a.region, a.radius_deg, a.capacity)?;
    let mut cfg = SolverConfig {
        epsilon: a.epsilon,
        seed: a.seed,
        ..SolverConfig::default()
    };
    if let Some(m) = a.max_iterations {
        cfg.max_inner_iterations = m;
    }
    if let Some(u) = a.u_ceiling {
        cfg.u_ceiling = u;
    }
    if a.sequential {
        cfg.exec = Exec::Sequential;
    }
    let report = if uniform {
        baseline(&inst, &cfg)?
    } else {
        solve(&inst, &cfg)?
    };

    let mut out = Outputs::default();
    let cover = report.final_cover.as_ref().expect("search returns its cover");
    let mut buf = Vec::new();
    write_cover_json(cover, &mut buf)?;
    out.add(format!("{}.cover.json", a.out), buf);
    let mut buf = Vec::new();
    report.write_json(&mut buf)?;
    out.add(format!("{}.report.json", a.out), buf);
    if !uniform {
        let mut buf = Vec::new();
        report.write_trace_csv(&mut buf)?;
        out.add(format!("{}.trace.csv", a.out), buf);
        let mut buf = Vec::new();
        write_trajectory_csv(&report.trajectory, &mut buf)?;
        out.add(format!("{}.trajectory.csv", a.out), buf);
    }
    let timings = serde_json::to_vec_pretty(&report.timings).expect("timings serialize");
    out.add(format!("{}.timings.json", a.out), timings);
    out.commit()?;
    print_summary(&report, skipped);
    Ok(())
}

fn print_summary(report: &RunReport, skipped: usize) {
    if skipped > 0 {
        println!("skipped {skipped} catalog rows outside the region");
    }
    println!("strategy            {:?}", report.strategy);
    println!("galaxies            {}", report.galaxies);
    println!("discs               {}", report.disc_count);
    println!("capacity bound      {}", report.lower_bound);
    println!("normalized size     {:.4}", report.normalized_size);
    println!(
        "coverage            {:.4} ({} of {}, target {})",
        report.coverage_fraction, report.covered, report.galaxies, report.target_covered
    );
    println!(
        "iterations          {} (all probes {})",
        report.iterations,
        report.total_iterations()
    );
    let t = &report.timings;
    println!(
        "timings (s)         seed {:.3} build {:.3} flow {:.3} move {:.3} legal {:.3} total {:.3}",
        t.seed, t.build, t.flow, t.move_, t.legal, t.total
    );
}

fn cmd_render(a: RenderArgs) -> Outcome {
    let layers = Layers::parse(&a.layers).map_err(|e| Failure::usage(format!("--layers: {e}")))?;
    let spec = RenderSpec::new(a.width, a.height, layers).map_err(|e| Failure::usage(e.to_string()))?;
    if layers.trajectories && a.trajectory.is_none() {
        return Err(Failure::usage("the trajectories layer needs --trajectory"));
    }
    if (layers.discs || layers.segments) && a.cover.is_none() {
        return Err(Failure::usage("the discs and segments layers need --cover"));
    }
    let region = a.region.as_deref().map(parse_region).transpose()?;
    let (points, _) = read_points(open(&a.catalog)?, region.as_ref()).map_err(|e| Failure::io(&a.catalog, e))?;
    let cover: Option<Cover> = match &a.cover {
        Some(p) => Some(read_cover_json(open(p)?).map_err(|e| Failure::io(p, e))?),
        None => None,
    };
    let trajectory = match &a.trajectory {
        Some(p) => Some(read_trajectory_csv(open(p)?).map_err(|e| Failure::io(p, e))?),
        None => None,
    };
    let relaxed = match (&cover, layers.segments) {
        (Some(cover), true) if !points.is_empty() => {
            // the region only gates membership; the assignment ignores it
            let region = region.unwrap_or(RegionRect::new(0.0, 360.0, -90.0, 90.0)?);
            let inst = Instance::new(points.clone(), region, cover.radius(), a.capacity)?;
            let model = SolverConfig::default().model(cover.radius());
            let problem = RelaxedProblem::build(&inst, cover, &model, 0.0, Exec::default())?;
            Some(problem.solve(&inst, cover)?.assigned)
        }
        _ => None,
    };
    let center = match (&region, &cover) {
        (Some(r), _) => r.centroid(),
        (None, Some(c)) => mean_direction(&c.centers()),
        (None, None) => mean_direction(&points),
    };
    let scene = Scene {
        center,
        points: &points,
        cover: cover.as_ref(),
        relaxed: relaxed.as_deref(),
        trajectory: trajectory.as_deref(),
    };
    let mut svg = Vec::new();
    render_svg(&spec, &scene, &mut svg)?;
    let mut out = Outputs::default();
    out.add(&a.out, svg);
    out.commit()?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn mean_direction(points: &[SpherePoint]) -> SpherePoint {
    let mut s = [0.0; 3];
    for p in points {
        let v = p.as_array();
        (0..3).for_each(|k| s[k] += v[k]);
    }
    SpherePoint::from_vector(s).unwrap_or_else(|_| SpherePoint::north_pole())
}
