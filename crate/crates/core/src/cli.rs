//! Command-line frontend. Every subcommand writes its artifacts and a
//! `meta.json` into `--out`; failures also write `error.json` there.
//!
//! Exit codes: 0 ok, 2 input error, 3 non-convergence (best iterate still
//! written), 4 solver failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::beltrami::teich_distance;
use crate::cloud::{
    build_knn, detect_boundary, load_cloud, load_index_list, load_landmarks, save_cloud, CloudFormat, LandmarkTarget,
    PointCloud,
};
use crate::error::{Error, Result};
use crate::param::{
    conformal_parameterize, teichmuller_parameterize, ConformalOptions, RectDomain, Status, TeichOptions, TeichResult,
};
use crate::qc::Gamma;
use crate::report::{write_histogram, write_json, write_meta, write_text, HISTOGRAM_BINS};
use crate::shape::{
    classical_mds, distance_matrix, loocv_nn, register_parameterized, write_embedding_csv, DistanceMatrix,
    RegisterOptions,
};
use crate::synth::{
    add_noise, bench_operators, bump_surface, sample_disk, sample_quasi_uniform, square_landmark_fixture,
    write_bench_csv, BenchMap, BenchScheme, BumpFamily,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "teichmap", version, about = "Conformal and Teichmüller maps of point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Flatten a 4-cornered cloud onto its conformal rectangle.
    Conformal(ConformalArgs),
    /// Landmark-matching Teichmüller map of a cloud onto a rectangle.
    Teichmuller(TeichArgs),
    /// Register one cloud onto another through their landmarks.
    Register(RegisterArgs),
    /// Pairwise Teichmüller distances, with an MDS embedding.
    Distmat(DistmatArgs),
    /// Leave-one-out nearest-neighbor classification from a distance matrix.
    Classify(ClassifyArgs),
    /// Write a synthetic cloud with its annotations.
    Synth(SynthArgs),
    /// Operator accuracy benchmark on analytic maps.
    Bench(BenchArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; all cores when unset.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Solver options.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Solver {
    /// Neighbors per point.
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    /// Weight of the second-order block (`inf` for the block alone).
    #[arg(long, default_value = "0.5")]
    #[serde(serialize_with = "display")]
    pub gamma: Gamma,
    /// Stop when the step norm drops below this.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

fn display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl Solver {
    fn conformal(&self) -> ConformalOptions {
        ConformalOptions {
            k: self.k,
            ..Default::default()
        }
    }

    fn teich(&self) -> TeichOptions {
        TeichOptions {
            gamma: self.gamma,
            eps: self.eps,
            max_iter: self.max_iter,
            ..Default::default()
        }
    }
}

/// Input cloud with optional annotation overrides.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Input {
    /// Point file (.xyz, .txt, .ply or .csv). Sidecar annotation files next to
    /// it are picked up automatically.
    #[arg(long)]
    pub input: PathBuf,
    /// Boundary cycle, one index per line.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    /// Corner indices `i,j,k,l`, counter-clockwise along the boundary.
    #[arg(long, value_delimiter = ',')]
    pub corners: Option<Vec<usize>>,
}

#[derive(Debug, Args, Serialize)]
pub struct ConformalArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct TeichArgs {
    #[command(flatten)]
    pub input: Input,
    /// Landmarks `index,u,v` in target rectangle coordinates.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    /// Height of the target rectangle; the source rectangle's when unset.
    #[arg(long)]
    pub target_height: Option<f64>,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct RegisterArgs {
    #[command(flatten)]
    pub input: Input,
    /// Target cloud.
    #[arg(long)]
    pub target: PathBuf,
    /// Correspondences `index_src,index_dst`; the two clouds' landmark lists
    /// are paired in order when unset.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct DistmatArgs {
    /// Clouds, each annotated with corners and landmarks in a shared order.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Class label per cloud; file stems when unset.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Embedding dimension of the MDS output.
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    #[command(flatten)]
    pub solver: Solver,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    /// Distance matrix csv as written by `distmat`; its label column holds
    /// the classes.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Quasi-uniform rectangle `[0, width] x [0, height]`.
    Rect,
    /// Quasi-uniform disk of radius `width / 2`.
    Disk,
    /// Unit square with four shifted landmarks.
    SquareFixture,
    /// Bump surface of the chosen family with six landmarks.
    Bump,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Approximate point count.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, default_value_t = 1.0)]
    pub height: f64,
    #[arg(long, value_enum, default_value = "single")]
    pub family: BumpFamily,
    /// Landmark shift of the square fixture.
    #[arg(long, default_value_t = 0.05)]
    pub shift: f64,
    /// Noise amplitude as a fraction of the median spacing.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "xyz")]
    #[serde(skip)]
    pub format: CloudFormat,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, value_enum, num_args = 1.., default_values = ["stereographic", "log-arcsin"])]
    pub map: Vec<BenchMap>,
    #[arg(long, default_value_t = 4000)]
    pub n: usize,
    /// Seeds `seed .. seed + seeds`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[command(flatten)]
    pub common: Common,
}

/// Outcome of a subcommand that ran to completion.
enum Outcome {
    Ok,
    NotConverged,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'static str,
    message: String,
    exit_code: i32,
    command: &'a str,
}

/// Machine-readable kind and exit code of an error.
pub fn classify_error(e: &Error) -> (&'static str, i32) {
    match e {
        Error::Parse { .. } => ("parse", EXIT_INPUT),
        Error::Io { .. } => ("io", EXIT_INPUT),
        Error::DuplicatePoint { .. } => ("duplicate-point", EXIT_INPUT),
        Error::InvalidCloud(_) => ("invalid-cloud", EXIT_INPUT),
        Error::KOutOfRange { .. } => ("k-out-of-range", EXIT_INPUT),
        Error::BoundaryNotClosed(_) => ("boundary-not-closed", EXIT_INPUT),
        Error::MissingCorners => ("corners required", EXIT_INPUT),
        Error::MissingBoundary => ("boundary required", EXIT_INPUT),
        Error::InfeasibleLandmark { .. } => ("infeasible-landmark", EXIT_INPUT),
        Error::DimensionMismatch { .. } => ("dimension-mismatch", EXIT_INPUT),
        Error::InvalidArgument(_) => ("invalid-argument", EXIT_INPUT),
        Error::Domain(_) => ("domain", EXIT_INPUT),
        Error::NormOutOfRange(_) => ("norm-out-of-range", EXIT_SOLVER),
        Error::DegenerateNeighborhood(_) => ("degenerate-neighborhood", EXIT_SOLVER),
        Error::SingularStencil { .. } => ("singular-stencil", EXIT_SOLVER),
        Error::ZeroSupport => ("zero-support", EXIT_SOLVER),
        Error::InfeasibleMu(_) => ("infeasible-mu", EXIT_SOLVER),
        Error::DegenerateJacobian(_) => ("degenerate-jacobian", EXIT_SOLVER),
        Error::DegenerateRing(_) => ("degenerate-ring", EXIT_SOLVER),
        Error::SingularSystem { .. } => ("singular-system", EXIT_SOLVER),
        Error::NegativeSpectrum => ("negative-spectrum", EXIT_SOLVER),
        Error::MissingEntries(_) => ("missing-entries", EXIT_SOLVER),
    }
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (name, common) = match &cli.command {
        Command::Conformal(a) => ("conformal", &a.common),
        Command::Teichmuller(a) => ("teichmuller", &a.common),
        Command::Register(a) => ("register", &a.common),
        Command::Distmat(a) => ("distmat", &a.common),
        Command::Classify(a) => ("classify", &a.common),
        Command::Synth(a) => ("synth", &a.common),
        Command::Bench(a) => ("bench", &a.common),
    };
    let out = common.out.clone();
    let result = std::fs::create_dir_all(&out)
        .map_err(|e| Error::io(&out, e))
        .and_then(|_| with_threads(common.threads, || dispatch(&cli.command)));
    match result {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::NotConverged) => {
            eprintln!("{name}: did not converge; best iterate written to {}", out.display());
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            let (kind, code) = classify_error(&e);
            let report = ErrorReport {
                error: kind,
                message: e.to_string(),
                exit_code: code,
                command: name,
            };
            let text = serde_json::to_string(&report).unwrap_or_default();
            eprintln!("{text}");
            if out.is_dir() {
                let _ = write_text(&out.join("error.json"), &(text + "\n"));
            }
            code
        }
    }
}

fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    match threads {
        None => f(),
        Some(0) => Err(Error::InvalidArgument("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(f),
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Conformal(a) => cmd_conformal(a),
        Command::Teichmuller(a) => cmd_teichmuller(a),
        Command::Register(a) => cmd_register(a),
        Command::Distmat(a) => cmd_distmat(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn read_cloud(path: &Path) -> Result<PointCloud> {
    let format = CloudFormat::from_path(path)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown point file extension: {}", path.display())))?;
    load_cloud(path, format)
}

fn load_input(input: &Input) -> Result<PointCloud> {
    let mut cloud = read_cloud(&input.input)?;
    if let Some(b) = &input.boundary {
        cloud = cloud.with_boundary(load_index_list(b)?)?;
    }
    if let Some(c) = &input.corners {
        let c: [usize; 4] = c
            .as_slice()
            .try_into()
            .map_err(|_| Error::InvalidArgument(format!("--corners needs 4 indices, got {}", c.len())))?;
        cloud = cloud.with_corners(c)?;
    }
    Ok(cloud)
}

fn cmd_conformal(a: &ConformalArgs) -> Result<Outcome> {
    let cloud = load_input(&a.input)?;
    let r = conformal_parameterize(&cloud, &a.solver.conformal())?;
    let out = &a.common.out;
    r.mapping.write_csv(&out.join("param.csv"))?;
    write_json(
        &out.join("rect.json"),
        &serde_json::json!({
            "h": r.rect.height,
            "energy": r.energy,
            "corners": r.corners,
            "clamped": r.clamped,
        }),
    )?;
    r.pcbc.write_csv(&out.join("pcbc.csv"))?;
    write_histogram(&out.join("histogram.csv"), &r.pcbc.histogram(HISTOGRAM_BINS))?;
    write_meta(out, "conformal", a, &["param.csv", "rect.json", "pcbc.csv", "histogram.csv"])?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    status: Status,
    iterations: usize,
    k: f64,
    var_abs: f64,
    eps: f64,
    failure: Option<&'a str>,
    certificate: &'a crate::param::PctCertificate,
    history: &'a [crate::param::IterationRecord],
}

fn write_teich(out: &Path, r: &TeichResult, eps: f64) -> Result<()> {
    r.mapping.write_csv(&out.join("param.csv"))?;
    r.mu.write_csv(&out.join("pcbc.csv"))?;
    write_histogram(&out.join("histogram.csv"), &r.mu.histogram(HISTOGRAM_BINS))?;
    let var_abs = r.mapping.diagnostics.last().map_or(f64::NAN, |d| d.var_abs);
    write_json(
        &out.join("diagnostics.json"),
        &Diagnostics {
            status: r.status,
            iterations: r.iterations,
            k: r.k,
            var_abs,
            eps,
            failure: r.failure.as_deref(),
            certificate: &r.certificate,
            history: &r.mapping.diagnostics,
        },
    )
}

fn outcome(status: Status) -> Outcome {
    match status {
        Status::Converged => Outcome::Ok,
        Status::MaxIterations | Status::Diverged => Outcome::NotConverged,
    }
}

fn position_landmarks(cloud: &PointCloud, file: Option<&Path>) -> Result<Vec<(usize, [f64; 2])>> {
    let list = match file {
        Some(p) => load_landmarks(p)?,
        None => cloud.landmarks().to_vec(),
    };
    list.iter()
        .map(|l| match l.target {
            LandmarkTarget::Position(t) => Ok((l.index, t)),
            LandmarkTarget::Partner(_) => Err(Error::InvalidArgument(format!(
                "landmark {} needs a target position `index,u,v`",
                l.index
            ))),
        })
        .collect()
}

/// Planar clouds are taken as already lying in `[0, 1] x [0, h]`; surfaces are
/// flattened onto their conformal rectangle first.
fn source_rectangle(cloud: &PointCloud, solver: &Solver) -> Result<(Vec<[f64; 2]>, Vec<usize>, RectDomain)> {
    if cloud.is_planar() {
        let xy = cloud.xy();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &xy {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let tol = 1e-9;
        if lo[0].abs() > tol || lo[1].abs() > tol || (hi[0] - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(
                "planar input must span [0, 1] x [0, h]".into(),
            ));
        }
        let boundary = detect_boundary(cloud, &build_knn(cloud, solver.k.min(cloud.len() - 1))?)?;
        return Ok((xy, boundary, RectDomain::new(hi[1])?));
    }
    let g = conformal_parameterize(cloud, &solver.conformal())?;
    Ok((g.mapping.uv, g.boundary, g.rect))
}

fn cmd_teichmuller(a: &TeichArgs) -> Result<Outcome> {
    let cloud = load_input(&a.input)?;
    let landmarks = position_landmarks(&cloud, a.landmarks.as_deref())?;
    let (uv, boundary, src) = source_rectangle(&cloud, &a.solver)?;
    let dst = match a.target_height {
        Some(h) => RectDomain::new(h)?,
        None => src,
    };
    let r = teichmuller_parameterize(&uv, &boundary, src, dst, &landmarks, &a.solver.teich())?;
    let out = &a.common.out;
    write_teich(out, &r, a.solver.eps)?;
    write_meta(out, "teichmuller", a, &["param.csv", "pcbc.csv", "histogram.csv", "diagnostics.json"])?;
    Ok(outcome(r.status))
}

fn cmd_register(a: &RegisterArgs) -> Result<Outcome> {
    let src = load_input(&a.input)?;
    let dst = read_cloud(&a.target)?;
    let corr: Vec<(usize, usize)> = match &a.landmarks {
        Some(p) => load_landmarks(p)?
            .iter()
            .map(|l| match l.target {
                LandmarkTarget::Partner(j) => Ok((l.index, j)),
                LandmarkTarget::Position(_) => Err(Error::InvalidArgument(format!(
                    "correspondence for {} must be `index_src,index_dst`",
                    l.index
                ))),
            })
            .collect::<Result<_>>()?,
        None => crate::synth::correspondences(&src, &dst)?,
    };
    let opts = a.solver.conformal();
    let g1 = conformal_parameterize(&src, &opts)?;
    let g2 = conformal_parameterize(&dst, &opts)?;
    let r = register_parameterized(&g1, &g2, &dst, &corr, &a.solver.teich())?;
    let out = &a.common.out;
    let mut s = String::from("index,x,y,z\n");
    for (i, p) in r.mapped.iter().enumerate() {
        s.push_str(&format!("{i},{:.17e},{:.17e},{:.17e}\n", p[0], p[1], p[2]));
    }
    write_text(&out.join("registration.csv"), &s)?;
    write_teich(out, &r.planar, a.solver.eps)?;
    write_json(
        &out.join("summary.json"),
        &serde_json::json!({
            "k": r.k,
            "distance": teich_distance(r.k).ok(),
            "hull_misses": r.hull_misses,
            "source_height": g1.rect.height,
            "target_height": g2.rect.height,
        }),
    )?;
    write_meta(
        out,
        "register",
        a,
        &["registration.csv", "param.csv", "pcbc.csv", "histogram.csv", "diagnostics.json", "summary.json"],
    )?;
    Ok(outcome(r.planar.status))
}

fn cmd_distmat(a: &DistmatArgs) -> Result<Outcome> {
    let clouds = a.input.iter().map(|p| read_cloud(p)).collect::<Result<Vec<_>>>()?;
    let labels = match &a.labels {
        Some(l) => l.clone(),
        None => a
            .input
            .iter()
            .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
            .collect(),
    };
    if let Some(l) = labels.iter().find(|l| l.contains(',') || l.is_empty()) {
        return Err(Error::InvalidArgument(format!("label {l:?} must be non-empty without commas")));
    }
    let opts = RegisterOptions {
        conformal: a.solver.conformal(),
        teich: a.solver.teich(),
    };
    let dm = distance_matrix(
        &clouds,
        labels,
        |i, j| crate::synth::correspondences(&clouds[i], &clouds[j]),
        &opts,
    )?;
    let out = &a.common.out;
    dm.write_csv(&out.join("distances.csv"))?;
    let coords = classical_mds(&dm.d, a.dims)?;
    write_embedding_csv(&out.join("mds.csv"), &dm.labels, &coords)?;
    write_json(&out.join("asymmetry.json"), &serde_json::json!({ "max_asymmetry": dm.max_asymmetry }))?;
    write_meta(out, "distmat", a, &["distances.csv", "mds.csv", "asymmetry.json"])?;
    Ok(Outcome::Ok)
}

/// Reads the csv written by [`DistanceMatrix::write_csv`].
pub fn read_distance_csv(path: &Path) -> Result<DistanceMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let parse = |line: usize, m: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: m.into(),
    };
    let header = lines.next().ok_or_else(|| parse(1, "empty file"))?;
    let m = header.split(',').count() - 1;
    let mut labels = Vec::with_capacity(m);
    let mut d = Vec::with_capacity(m);
    for (n, line) in lines.enumerate() {
        let mut f = line.split(',');
        labels.push(f.next().unwrap_or_default().to_string());
        let row = f
            .map(|v| v.trim().parse::<f64>().map_err(|_| parse(n + 2, "not a number")))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != m {
            return Err(parse(n + 2, "row length differs from header"));
        }
        d.push(row);
    }
    if d.len() != m {
        return Err(parse(1, "matrix is not square"));
    }
    DistanceMatrix::from_raw(d, labels)
}

fn cmd_classify(a: &ClassifyArgs) -> Result<Outcome> {
    let dm = read_distance_csv(&a.input)?;
    let report = loocv_nn(&dm.d, &dm.labels)?;
    let out = &a.common.out;
    write_json(&out.join("classification.json"), &report)?;
    let coords = classical_mds(&dm.d, 2)?;
    write_embedding_csv(&out.join("mds.csv"), &dm.labels, &coords)?;
    write_meta(out, "classify", a, &["classification.json", "mds.csv"])?;
    Ok(Outcome::Ok)
}

fn cmd_synth(a: &SynthArgs) -> Result<Outcome> {
    let seed = a.common.seed;
    let mut cloud = match a.kind {
        SynthKind::Rect => sample_quasi_uniform(a.width, a.height, a.n, seed)?,
        SynthKind::Disk => sample_disk(0.5 * a.width, a.n, seed)?,
        SynthKind::SquareFixture => square_landmark_fixture(a.n, a.shift, seed)?,
        SynthKind::Bump => bump_surface(a.family, a.n, seed)?,
    };
    if a.noise > 0.0 {
        cloud = add_noise(&cloud, a.noise, seed.wrapping_add(1))?;
    }
    let name = match a.format {
        CloudFormat::Xyz => "cloud.xyz",
        CloudFormat::PlyAscii => "cloud.ply",
        CloudFormat::Csv => "cloud.csv",
    };
    let out = &a.common.out;
    save_cloud(&cloud, &out.join(name), a.format)?;
    let mut written = vec![name.to_string()];
    for suffix in ["boundary.txt", "corners.txt", "landmarks.csv"] {
        let side = format!("cloud.{suffix}");
        if out.join(&side).exists() {
            written.push(side);
        }
    }
    let written: Vec<&str> = written.iter().map(String::as_str).collect();
    write_meta(out, "synth", a, &written)?;
    Ok(Outcome::Ok)
}

fn cmd_bench(a: &BenchArgs) -> Result<Outcome> {
    let mut records = Vec::new();
    for &map in &a.map {
        for s in 0..a.seeds {
            records.extend(bench_operators(map, a.n, a.common.seed + s, &BenchScheme::ALL)?);
        }
    }
    let out = &a.common.out;
    write_bench_csv(&out.join("bench.csv"), &records)?;
    write_meta(out, "bench", a, &["bench.csv"])?;
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let cli = Cli::try_parse_from(["teichmap", "conformal", "--input", "a.xyz"]).unwrap();
        let Command::Conformal(a) = cli.command else { panic!() };
        assert_eq!(a.solver.k, 16);
        assert_eq!(a.solver.gamma, Gamma::Finite(0.5));
        assert_eq!(a.solver.eps, 1e-6);
        assert_eq!(a.solver.max_iter, 200);
        assert_eq!(a.common.out, PathBuf::from("out"));
    }

    #[test]
    fn corners_flag_takes_four_indices() {
        let cli = Cli::try_parse_from(["teichmap", "conformal", "--input", "a.xyz", "--corners", "0,5,9,14"]).unwrap();
        let Command::Conformal(a) = cli.command else { panic!() };
        assert_eq!(a.input.corners, Some(vec![0, 5, 9, 14]));
    }

    #[test]
    fn usage_errors_exit_with_input_code() {
        assert_eq!(run(["teichmap", "bogus"]), EXIT_INPUT);
    }

    #[test]
    fn error_codes() {
        assert_eq!(classify_error(&Error::MissingCorners), ("corners required", EXIT_INPUT));
        assert_eq!(classify_error(&Error::SingularSystem { condition: 1e20 }).1, EXIT_SOLVER);
        assert_eq!(classify_error(&Error::MissingEntries(vec![(0, 1)])).1, EXIT_SOLVER);
    }

    #[test]
    fn distance_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let dm = DistanceMatrix::from_raw(
            vec![vec![0.0, 0.25, 1.0], vec![0.25, 0.0, 0.5], vec![1.0, 0.5, 0.0]],
            vec!["a".into(), "a".into(), "b".into()],
        )
        .unwrap();
        dm.write_csv(&p).unwrap();
        let back = read_distance_csv(&p).unwrap();
        assert_eq!(back.d, dm.d);
        assert_eq!(back.labels, dm.labels);
    }
}
