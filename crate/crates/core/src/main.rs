use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use elastica::io::{
    format_sig, parse_curve_file, write_curve, write_geodesic, write_match, write_matrix_csv, CurveDocument,
    GeodesicDocument, MatchDocument, SpaceName,
};
use elastica::lie::{dist_lie, dist_lie_shape, geodesic_lie, RotationCurve};
use elastica::sphere::{
    dist_sphere_homogeneous, dist_sphere_shape, dist_tsrv, dist_tsrv_shape, geodesic_sphere_homogeneous, SphereCurve,
};
use elastica::stats::{mean_direction, rotation_curve};
use elastica::{
    aligned_curve, dist_param, dist_shape, distance, distance_matrix, geodesic_closed, geodesic_open, project_closed,
    resample_arclength, srv_mean, DistanceKind, DpConfig, Error, Reparametrization, SampledCurve, ShapeMatchOptions,
    Space,
};

#[derive(Parser)]
#[command(name = "elastica", version, about = "Elastic shape distances, geodesics and means of sampled curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the distance between two curves.
    Dist {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        opts: MetricArgs,
    },
    /// Write the geodesic between two curves.
    Geodesic {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[command(flatten)]
        opts: MetricArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the optimal warp, rotation and start shift between two curves.
    Match {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        opts: MetricArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the pairwise distance matrix of every curve file in a directory.
    Matrix {
        dir: PathBuf,
        #[command(flatten)]
        opts: MetricArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the aligned SRV mean of R^d curves.
    Mean {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[command(flatten)]
        opts: MetricArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Project an R^d curve onto the closed curves.
    ProjectClosed {
        a: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Param,
    Shape,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    Rd,
    #[value(name = "so_n")]
    SoN,
    S2,
    #[value(name = "s2-tsrv")]
    S2Tsrv,
}

#[derive(Args)]
struct MetricArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Shape)]
    mode: ModeArg,
    /// Defaults to the space recorded in the input documents.
    #[arg(long, value_enum)]
    space: Option<SpaceArg>,
    #[arg(long)]
    no_rotation: bool,
    #[arg(long)]
    no_reparam: bool,
    #[arg(long, default_value_t = 3)]
    dp_width: usize,
    #[arg(long)]
    strip: Option<usize>,
    /// Polish the DP warp by gradient refinement.
    #[arg(long)]
    refine: bool,
    #[arg(long, default_value_t = 1)]
    seed_stride: usize,
    #[arg(long, default_value_t = 5)]
    outer_iters: usize,
    /// Resample R^d inputs to this many intervals, uniformly in arclength.
    #[arg(long)]
    resample: Option<usize>,
    /// Reference point for s2-tsrv, as `x,y,z`.
    #[arg(long, value_parser = parse_point)]
    ref_point: Option<Point>,
}

#[derive(Clone, Copy)]
struct Point([f64; 3]);

fn parse_point(s: &str) -> Result<Point, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != 3 {
        return Err(format!("expected 3 comma separated values, got {}", v.len()));
    }
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(len > 0.0) || !len.is_finite() {
        return Err("reference point must be a nonzero finite vector".into());
    }
    Ok(Point([v[0] / len, v[1] / len, v[2] / len]))
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

struct Input {
    name: String,
    space: SpaceName,
    curve: SampledCurve,
}

fn load(path: &Path) -> CliResult<Input> {
    let bytes = fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let doc = parse_curve_file(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let curve = doc.to_curve().map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    Ok(Input {
        name,
        space: doc.space,
        curve,
    })
}

impl MetricArgs {
    fn options(&self) -> ShapeMatchOptions {
        ShapeMatchOptions {
            quotient_rotation: !self.no_rotation,
            quotient_reparam: !self.no_reparam,
            outer_iters: self.outer_iters,
            dp: DpConfig {
                neighborhood_width: self.dp_width,
                strip_halfwidth: self.strip,
            },
            refine: self.refine,
            seed_stride: self.seed_stride,
            ..ShapeMatchOptions::default()
        }
    }

    fn space_for(&self, docs: &[&Input]) -> CliResult<Space> {
        let first = docs.first().map(|d| d.space).unwrap_or(SpaceName::Rd);
        if let Some(d) = docs.iter().find(|d| d.space != first) {
            return usage(format!("{} is a {} curve but {} is {}", d.name, d.space.as_str(), docs[0].name, first.as_str()));
        }
        let space = match self.space {
            None => first.space(),
            Some(SpaceArg::Rd) => Space::Rd,
            Some(SpaceArg::SoN) => Space::SoN,
            Some(SpaceArg::S2) => Space::S2,
            Some(SpaceArg::S2Tsrv) => Space::S2Tsrv,
        };
        let expected = match space {
            Space::Rd => SpaceName::Rd,
            Space::SoN => SpaceName::SoN,
            Space::S2 | Space::S2Tsrv => SpaceName::S2,
        };
        if expected != first {
            return usage(format!("--space does not apply to {} documents", first.as_str()));
        }
        if self.ref_point.is_some() && space != Space::S2Tsrv {
            return usage("--ref-point only applies to --space s2-tsrv");
        }
        if self.dp_width == 0 {
            return usage("--dp-width must be at least 1");
        }
        if self.seed_stride == 0 {
            return usage("--seed-stride must be at least 1");
        }
        if self.resample.is_some() && space != Space::Rd {
            return usage("--resample only applies to rd curves");
        }
        Ok(space)
    }

    fn kind(&self, space: Space) -> DistanceKind {
        DistanceKind {
            space,
            shape: self.mode == ModeArg::Shape,
            opts: self.options(),
            reference: self.ref_point.map(|p| p.0),
        }
    }

    fn prepare(&self, c: SampledCurve) -> CliResult<SampledCurve> {
        match self.resample {
            Some(0) => usage("--resample must be positive"),
            Some(m) => {
                let closed = c.is_closed();
                Ok(resample_arclength(&c, m)?.with_closed(closed))
            }
            None => Ok(c),
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pair(a: &Path, b: &Path, opts: &MetricArgs) -> CliResult<(Space, SampledCurve, SampledCurve)> {
    let (ia, ib) = (load(a)?, load(b)?);
    let space = opts.space_for(&[&ia, &ib])?;
    Ok((space, opts.prepare(ia.curve)?, opts.prepare(ib.curve)?))
}

fn flatten(r: &RotationCurve) -> CliResult<SampledCurve> {
    let pts: Vec<Vec<f64>> = r.samples().iter().map(|m| m.transpose().iter().copied().collect()).collect();
    Ok(SampledCurve::from_points(&pts, false)?)
}

fn reference(opts: &MetricArgs, c0: &SampledCurve, c1: &SampledCurve) -> CliResult<[f64; 3]> {
    Ok(match opts.ref_point {
        Some(p) => p.0,
        None => mean_direction([c0, c1])?,
    })
}

fn run_match(space: Space, c0: &SampledCurve, c1: &SampledCurve, opts: &MetricArgs) -> CliResult<MatchDocument> {
    let shape = opts.mode == ModeArg::Shape;
    let o = opts.options();
    let identity = Reparametrization::identity();
    Ok(match space {
        Space::Rd if shape => {
            let r = dist_shape(c0, c1, &o)?;
            MatchDocument::new(r.distance, &r.gamma, Some(&r.rotation), r.seed_shift)
        }
        Space::Rd => {
            let eye = DMatrix::identity(c0.dim(), c0.dim());
            MatchDocument::new(dist_param(c0, c1)?, &identity, Some(&eye), 0)
        }
        Space::SoN => {
            let (r0, r1) = (rotation_curve(c0)?, rotation_curve(c1)?);
            if shape {
                let r = dist_lie_shape(&r0, &r1, &o)?;
                MatchDocument::new(r.distance, &r.gamma, None, 0)
            } else {
                MatchDocument::new(dist_lie(&r0, &r1)?, &identity, None, 0)
            }
        }
        Space::S2 => {
            let (s0, s1) = (SphereCurve::projected(c0.clone())?, SphereCurve::projected(c1.clone())?);
            let (d, gamma, theta) = if shape {
                let r = dist_sphere_shape(&s0, &s1, &o)?;
                (r.distance, r.gamma, r.fiber_angle)
            } else {
                let (d, theta) = dist_sphere_homogeneous(&s0, &s1)?;
                (d, identity, theta)
            };
            MatchDocument {
                fiber_angle: Some(theta),
                ..MatchDocument::new(d, &gamma, None, 0)
            }
        }
        Space::S2Tsrv => {
            let (s0, s1) = (SphereCurve::projected(c0.clone())?, SphereCurve::projected(c1.clone())?);
            let p = reference(opts, c0, c1)?;
            if shape {
                let r = dist_tsrv_shape(&s0, &s1, &p, &o)?;
                MatchDocument::new(r.distance, &r.gamma, None, 0)
            } else {
                MatchDocument::new(dist_tsrv(&s0, &s1, &p)?, &identity, None, 0)
            }
        }
    })
}

fn run_geodesic(space: Space, c0: &SampledCurve, c1: &SampledCurve, steps: usize, opts: &MetricArgs) -> CliResult<GeodesicDocument> {
    if steps == 0 {
        return usage("--steps must be at least 1");
    }
    let shape = opts.mode == ModeArg::Shape;
    let o = opts.options();
    let (times, curves, name) = match space {
        Space::Rd => {
            let target = if shape { aligned_curve(c1, &dist_shape(c0, c1, &o)?)? } else { c1.clone() };
            let path = if c0.is_closed() && c1.is_closed() {
                geodesic_closed(c0, &target.with_closed(true), steps)?
            } else {
                geodesic_open(c0, &target, steps)?
            };
            (path.times, path.curves, SpaceName::Rd)
        }
        Space::SoN => {
            let (r0, mut r1) = (rotation_curve(c0)?, rotation_curve(c1)?);
            if shape {
                r1 = r1.reparametrized(&dist_lie_shape(&r0, &r1, &o)?.gamma)?;
            }
            let path = geodesic_lie(&r0, &r1, steps)?;
            let curves = path.curves.iter().map(flatten).collect::<CliResult<Vec<_>>>()?;
            (path.times, curves, SpaceName::SoN)
        }
        Space::S2 => {
            let (s0, mut s1) = (SphereCurve::projected(c0.clone())?, SphereCurve::projected(c1.clone())?);
            if shape {
                s1 = s1.reparametrized(&dist_sphere_shape(&s0, &s1, &o)?.gamma)?;
            }
            let path = geodesic_sphere_homogeneous(&s0, &s1, steps)?;
            (path.times, path.curves.into_iter().map(SphereCurve::into_curve).collect(), SpaceName::S2)
        }
        Space::S2Tsrv => return usage("geodesics are not available for s2-tsrv; use --space s2"),
    };
    Ok(GeodesicDocument {
        times,
        curves: curves.iter().map(|c| CurveDocument::from_curve(name, c)).collect(),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Dist { a, b, opts } => {
            let (space, c0, c1) = pair(&a, &b, &opts)?;
            let d = distance(&c0, &c1, &opts.kind(space))?;
            println!("{}", format_sig(d, 12));
        }
        Command::Geodesic { a, b, steps, opts, output } => {
            let (space, c0, c1) = pair(&a, &b, &opts)?;
            let doc = run_geodesic(space, &c0, &c1, steps, &opts)?;
            emit(output.as_deref(), &write_geodesic(&doc))?;
        }
        Command::Match { a, b, opts, output } => {
            let (space, c0, c1) = pair(&a, &b, &opts)?;
            let doc = run_match(space, &c0, &c1, &opts)?;
            eprintln!("distance {}", format_sig(doc.distance, 12));
            emit(output.as_deref(), &write_match(&doc))?;
        }
        Command::Matrix { dir, opts, output } => {
            let entries = fs::read_dir(&dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
            let mut paths: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && matches!(p.extension().and_then(|x| x.to_str()), Some("json" | "csv")))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return usage(format!("no .json or .csv curve files in {}", dir.display()));
            }
            let inputs = paths.iter().map(|p| load(p)).collect::<CliResult<Vec<_>>>()?;
            let space = opts.space_for(&inputs.iter().collect::<Vec<_>>())?;
            let names: Vec<String> = inputs.iter().map(|i| i.name.clone()).collect();
            let curves = inputs.into_iter().map(|i| opts.prepare(i.curve)).collect::<CliResult<Vec<_>>>()?;
            let m = distance_matrix(&curves, &opts.kind(space))?;
            emit(output.as_deref(), &write_matrix_csv(&names, &m.values))?;
        }
        Command::Mean { files, iters, opts, output } => {
            let inputs = files.iter().map(|p| load(p)).collect::<CliResult<Vec<_>>>()?;
            if opts.space_for(&inputs.iter().collect::<Vec<_>>())? != Space::Rd {
                return usage("the mean is only available for rd curves");
            }
            let curves = inputs.into_iter().map(|i| opts.prepare(i.curve)).collect::<CliResult<Vec<_>>>()?;
            let mut o = opts.options();
            if opts.mode == ModeArg::Param {
                o.quotient_rotation = false;
                o.quotient_reparam = false;
            }
            let mean = srv_mean(&curves, iters, &o)?;
            if let Some(last) = mean.objective.last() {
                eprintln!("objective {}", format_sig(*last, 12));
            }
            emit(output.as_deref(), &write_curve(&CurveDocument::from_curve(SpaceName::Rd, &mean.curve)))?;
        }
        Command::ProjectClosed { a, output, tol, max_iter } => {
            let input = load(&a)?;
            if input.space != SpaceName::Rd {
                return usage("closed-curve projection is only available for rd curves");
            }
            if !(tol > 0.0) {
                return usage("--tol must be positive");
            }
            let closed = project_closed(&input.curve, tol, max_iter)?;
            emit(output.as_deref(), &write_curve(&CurveDocument::from_curve(SpaceName::Rd, &closed)))?;
        }
    }
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("ELASTICA_THREADS") else {
        return Ok(());
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            // a pool that already exists keeps its size
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        _ => usage(format!("ELASTICA_THREADS must be a positive integer, got {value:?}")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
