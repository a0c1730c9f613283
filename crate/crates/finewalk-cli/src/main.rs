//! Scene files in, classification and measure reports out.
//!
//! Every command loads a scene JSON produced by the geometry module (see
//! `scenes/` at the workspace root for the canonical fixtures), runs one
//! library operation, and emits a deterministic report: identical
//! invocations produce identical bytes. Monte Carlo commands require an
//! explicit `--seed`; there is no silent entropy. Reports carry a header
//! with the scene hash, seed, schedule, and version so a file can always
//! be traced back to the run that produced it.
//!
//! Exit codes: 0 for a definite result, 2 when a classification comes back
//! `Indeterminate`, 1 for any error. Output files are only written after
//! the computation finishes; a failed write removes the partial file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use finewalk::acceptance;
use finewalk::dirichlet::{
    harmonic_measure, named_data, solve as solve_bvp, BoundaryData, ScheduleSpec, SolveReport,
};
use finewalk::domain::Domain;
use finewalk::edwards::{build_instance, envelope, EnvelopeReport};
use finewalk::fineboundary::{classify_fine, FineClass, FinePolicy};
use finewalk::jensen::default_family;
use finewalk::scene::{BallScene, PointClass};
use finewalk::wos::{estimate_measure, WalkConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "finewalk",
    version,
    about = "Harmonic measure, fine boundaries, and Dirichlet problems on ball-complement scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify points against the fine topology of the scene's boundary.
    Classify(ClassifyArgs),
    /// Estimate harmonic measure at a point; writes the exit measure as CSV.
    Hmeasure(HmeasureArgs),
    /// Solve the boundary value problem for named data at given points.
    Solve(SolveArgs),
    /// Bracket a sub-envelope value with a primal/dual program pair.
    Envelope(EnvelopeArgs),
    /// Run a named check suite and report per-criterion results.
    Report(ReportArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Scene description file (JSON).
    #[arg(long, value_name = "FILE")]
    scene: PathBuf,
    /// Point as comma-separated coordinates, e.g. 0,0,0.
    #[arg(long, value_name = "X,Y,..")]
    point: Option<String>,
    /// File with one point per line; blank lines and # comments skipped.
    #[arg(long, value_name = "FILE")]
    points_file: Option<PathBuf>,
    /// Series depth for the thinness bracket.
    #[arg(long, value_name = "N")]
    depth: Option<u32>,
    /// Override for the convergence tail bound.
    #[arg(long, value_name = "T")]
    tolerance: Option<f64>,
    /// Write a JSON report here in addition to the stdout lines.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HmeasureArgs {
    /// Scene description file (JSON).
    #[arg(long, value_name = "FILE")]
    scene: PathBuf,
    /// Start point as comma-separated coordinates.
    #[arg(long, value_name = "X,Y,..")]
    point: String,
    /// Shrinking neighborhood schedule.
    #[arg(long, value_name = "E0:RATIO:COUNT", default_value = "0.1:0.5:4")]
    schedule: ScheduleSpec<f64>,
    /// Walks per schedule level.
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    /// Absorbing shell width.
    #[arg(long, value_name = "D", default_value_t = 1e-3)]
    absorb_delta: f64,
    /// RNG seed (required: runs are reproducible, never random).
    #[arg(long)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Scene description file (JSON).
    #[arg(long, value_name = "FILE")]
    scene: PathBuf,
    /// Point as comma-separated coordinates.
    #[arg(long, value_name = "X,Y,..")]
    point: Option<String>,
    /// File with one point per line; blank lines and # comments skipped.
    #[arg(long, value_name = "FILE")]
    points_file: Option<PathBuf>,
    /// Named boundary data: coord1..coordN, radial, outer1, away0, dome0.
    #[arg(long, value_name = "NAME")]
    data: String,
    /// Shrinking neighborhood schedule.
    #[arg(long, value_name = "E0:RATIO:COUNT", default_value = "0.1:0.5:4")]
    schedule: ScheduleSpec<f64>,
    /// Walks per schedule level and point.
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    /// Absorbing shell width.
    #[arg(long, value_name = "D", default_value_t = 1e-3)]
    absorb_delta: f64,
    /// RNG seed (required: runs are reproducible, never random).
    #[arg(long)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EnvelopeArgs {
    /// Scene description file (JSON).
    #[arg(long, value_name = "FILE")]
    scene: PathBuf,
    /// Evaluation point as comma-separated coordinates.
    #[arg(long, value_name = "X,Y,..")]
    point: String,
    /// Named data to envelope: coord1..coordN, radial, outer1, away0, dome0.
    #[arg(long, value_name = "NAME")]
    data: String,
    /// Polynomial degree of the witness family.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Grid point budget over the scene.
    #[arg(long, default_value_t = 600)]
    grid: usize,
    /// RNG seed for grid sampling (required).
    #[arg(long)]
    seed: u64,
    /// Override for the primal/dual gap tolerance.
    #[arg(long, value_name = "T")]
    tolerance: Option<f64>,
    /// Also integrate the data against an exit-measure estimate with this
    /// many walks, as an independent upper reference for the value.
    #[arg(long)]
    samples: Option<usize>,
    /// Schedule for the reference estimate; its finest level is used.
    #[arg(long, value_name = "E0:RATIO:COUNT", default_value = "0.1:0.5:4")]
    schedule: ScheduleSpec<f64>,
    /// Absorbing shell width for the reference estimate.
    #[arg(long, value_name = "D", default_value_t = 1e-3)]
    absorb_delta: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Suite to run; `acceptance` is the only one.
    #[arg(long, value_name = "NAME")]
    suite: String,
    /// Write the JSON outcome list here in addition to the stdout lines.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

struct CliError {
    msg: String,
}

impl CliError {
    fn new(msg: impl Into<String>) -> Self {
        CliError { msg: msg.into() }
    }
}

fn ctx<E: std::fmt::Display>(what: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::new(format!("{what}: {e}"))
}

#[derive(Serialize)]
struct Header {
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    scene_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<String>,
}

fn schedule_string(spec: &ScheduleSpec<f64>) -> String {
    format!("{}:{}:{}", spec.eps0, spec.ratio, spec.count)
}

fn load_scene(path: &Path) -> Result<BallScene<f64>, CliError> {
    BallScene::load(path).map_err(ctx(&format!("scene {}", path.display())))
}

fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    let coords: Result<Vec<f64>, _> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect();
    let coords = coords.map_err(|_| CliError::new(format!("invalid point: {text}")))?;
    if coords.is_empty() || coords.iter().any(|v| !v.is_finite()) {
        return Err(CliError::new(format!("invalid point: {text}")));
    }
    Ok(coords)
}

fn load_points(
    point: Option<&str>,
    file: Option<&Path>,
) -> Result<Vec<Vec<f64>>, CliError> {
    match (point, file) {
        (Some(p), None) => Ok(vec![parse_point(p)?]),
        (None, Some(f)) => {
            let text = fs::read_to_string(f).map_err(ctx(&format!(
                "points file {}",
                f.display()
            )))?;
            let mut points = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                points.push(parse_point(line)?);
            }
            if points.is_empty() {
                return Err(CliError::new(format!(
                    "points file {} holds no points",
                    f.display()
                )));
            }
            Ok(points)
        }
        (None, None) => Err(CliError::new("one of --point or --points-file is required")),
        (Some(_), Some(_)) => Err(CliError::new(
            "--point and --points-file are mutually exclusive",
        )),
    }
}

/// Writes `content` to `path`, or stdout when no path is given. Output is
/// fully computed before this runs, so a failed write leaves no partial
/// file behind.
fn deliver(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => fs::write(p, content).map_err(|e| {
            let _ = fs::remove_file(p);
            CliError::new(format!("write {}: {e}", p.display()))
        }),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(ctx("serialize"))?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------- classify

#[derive(Serialize)]
struct ClassifyRow {
    point: Vec<f64>,
    label: &'static str,
    reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_sum: Option<f64>,
}

#[derive(Serialize)]
struct ClassifyOut {
    header: Header,
    results: Vec<ClassifyRow>,
}

fn cmd_classify(args: ClassifyArgs) -> Result<ExitCode, CliError> {
    let scene = load_scene(&args.scene)?;
    let points = load_points(args.point.as_deref(), args.points_file.as_deref())?;
    let mut policy = FinePolicy::default();
    if let Some(d) = args.depth {
        policy.depth = d;
    }
    if let Some(t) = args.tolerance {
        policy.tail_bound = t;
    }

    let single = points.len() == 1;
    let mut rows = Vec::new();
    let mut indeterminate = false;
    for p in points {
        let row = match scene.classify(&p) {
            PointClass::Interior => ClassifyRow {
                point: p,
                label: "FineInterior",
                reason: "interior point of the set".into(),
                lower_sum: None,
                upper_sum: None,
            },
            PointClass::Exterior => ClassifyRow {
                point: p,
                label: "Exterior",
                reason: "outside the set".into(),
                lower_sum: None,
                upper_sum: None,
            },
            PointClass::Boundary => {
                let report = classify_fine(&scene, &p, &policy).map_err(ctx("classify"))?;
                let label = match report.verdict {
                    FineClass::FineBoundary => "FineBoundary",
                    FineClass::FinelyInterior => "NotFineBoundary",
                    FineClass::Indeterminate => {
                        indeterminate = true;
                        "Indeterminate"
                    }
                };
                ClassifyRow {
                    point: p,
                    label,
                    reason: report.reason,
                    lower_sum: Some(report.series.lower_sum),
                    upper_sum: Some(report.series.upper_sum),
                }
            }
        };
        if single {
            println!("{}", row.label);
        } else {
            let coords: Vec<String> = row.point.iter().map(|v| v.to_string()).collect();
            println!("{} {}", coords.join(","), row.label);
        }
        rows.push(row);
    }

    if let Some(path) = &args.output {
        let out = ClassifyOut {
            header: Header {
                version: VERSION,
                command: "classify",
                scene_hash: Some(scene.content_hash()),
                seed: None,
                schedule: None,
            },
            results: rows,
        };
        deliver(Some(path), &to_json(&out)?)?;
    }
    Ok(if indeterminate {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

// ---------------------------------------------------------------- hmeasure

fn cmd_hmeasure(args: HmeasureArgs) -> Result<ExitCode, CliError> {
    let scene = load_scene(&args.scene)?;
    let z = parse_point(&args.point)?;
    let cfg = WalkConfig::new(args.seed)
        .with_samples(args.samples)
        .with_absorb_delta(args.absorb_delta);
    let probes = default_family(&scene, 1);
    let (report, measure) =
        harmonic_measure(&scene, &z, &args.schedule, &probes, &cfg).map_err(ctx("hmeasure"))?;

    let mut content = format!(
        "# version={} command=hmeasure scene_hash={} seed={} schedule={} converged={}\n",
        VERSION,
        scene.content_hash(),
        args.seed,
        schedule_string(&args.schedule),
        report.converged,
    );
    content.push_str(&measure.to_csv());
    deliver(args.output.as_deref(), &content)?;
    Ok(ExitCode::SUCCESS)
}

// ------------------------------------------------------------------- solve

#[derive(Serialize)]
struct SolveOut {
    header: Header,
    report: SolveReport<f64>,
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, CliError> {
    let scene = load_scene(&args.scene)?;
    let points = load_points(args.point.as_deref(), args.points_file.as_deref())?;
    let data = named_data(&scene, &args.data).map_err(ctx("data"))?;
    let cfg = WalkConfig::new(args.seed)
        .with_samples(args.samples)
        .with_absorb_delta(args.absorb_delta);
    let report =
        solve_bvp(&scene, &data, &points, &args.schedule, &cfg).map_err(ctx("solve"))?;
    let out = SolveOut {
        header: Header {
            version: VERSION,
            command: "solve",
            scene_hash: Some(scene.content_hash()),
            seed: Some(args.seed),
            schedule: Some(schedule_string(&args.schedule)),
        },
        report,
    };
    deliver(args.output.as_deref(), &to_json(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------- envelope

#[derive(Serialize)]
struct RefIntegral {
    epsilon: f64,
    samples: usize,
    value: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct EnvelopeOut {
    header: Header,
    point: Vec<f64>,
    data: String,
    degree: u32,
    report: EnvelopeReport<f64>,
    /// Data integrated against an exit-measure estimate at the schedule's
    /// finest level; an independent reference from the measure side.
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<RefIntegral>,
}

fn reference_integral(
    scene: &BallScene<f64>,
    z: &[f64],
    data: &BoundaryData<f64>,
    args: &EnvelopeArgs,
    samples: usize,
) -> Result<RefIntegral, CliError> {
    let spec = &args.schedule;
    let eps = spec.eps0 * spec.ratio.powi(spec.count as i32 - 1);
    let domain = Domain::neighborhood(scene, eps).map_err(ctx("reference"))?;
    let cfg = WalkConfig::new(args.seed)
        .with_samples(samples)
        .with_absorb_delta(args.absorb_delta);
    let measure = estimate_measure(&domain, z, &cfg).map_err(ctx("reference"))?;
    let (value, stderr) = measure
        .integrate_with_stderr(&args.data, |x| data.eval(x))
        .map_err(ctx("reference"))?;
    Ok(RefIntegral {
        epsilon: eps,
        samples,
        value,
        stderr,
    })
}

fn cmd_envelope(args: EnvelopeArgs) -> Result<ExitCode, CliError> {
    let scene = load_scene(&args.scene)?;
    let z = parse_point(&args.point)?;
    let data = named_data(&scene, &args.data).map_err(ctx("data"))?;
    let instance = build_instance(&scene, &z, &data, args.degree, args.grid, args.seed)
        .map_err(ctx("envelope"))?;
    let mut report = envelope(&instance).map_err(ctx("envelope"))?;
    if let Some(t) = args.tolerance {
        report.gap_tol = t;
        report.pass = report.gap <= t;
    }
    let reference = match args.samples {
        Some(n) => Some(reference_integral(&scene, &z, &data, &args, n)?),
        None => None,
    };
    let out = EnvelopeOut {
        header: Header {
            version: VERSION,
            command: "envelope",
            scene_hash: Some(scene.content_hash()),
            seed: Some(args.seed),
            schedule: args.samples.map(|_| schedule_string(&args.schedule)),
        },
        point: z,
        data: args.data.clone(),
        degree: args.degree,
        report,
        reference,
    };
    deliver(args.output.as_deref(), &to_json(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

// ------------------------------------------------------------------ report

#[derive(Serialize)]
struct ReportOut {
    header: Header,
    outcomes: Vec<acceptance::CriterionOutcome>,
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode, CliError> {
    if args.suite != "acceptance" {
        return Err(CliError::new(format!(
            "unknown suite {:?}; available: acceptance",
            args.suite
        )));
    }
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        println!(
            "criterion {:>2} {:<24} {}  {}",
            o.id,
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.details
        );
    }
    let all_passed = outcomes.iter().all(|o| o.passed);
    if let Some(path) = &args.output {
        let out = ReportOut {
            header: Header {
                version: VERSION,
                command: "report",
                scene_hash: None,
                seed: None,
                schedule: None,
            },
            outcomes,
        };
        deliver(Some(path), &to_json(&out)?)?;
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Hmeasure(args) => cmd_hmeasure(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Envelope(args) => cmd_envelope(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn main() -> ExitCode {
    // Usage problems exit 1 like every other error; 2 is reserved for
    // Indeterminate classifications.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(1)
        }
    }
}
