//! Command-line surface for the elliptic-range library.
//!
//! Subcommands map one-to-one onto library operations; no numerical
//! logic lives here. Matrices travel as JSON (`{"n": ..., "data":
//! [[re, im], ...]}`), certificates and factors as JSON, plots as SVG.
//! Exit codes: 0 success-class verdicts, 1 negative verdicts (outside /
//! infeasible), 2 parse errors, 3 numerical errors, 4 precondition
//! violations.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use elliptic_range::calcnorm::{
    delyon_bound, pi_sharp, sample_bfd, sample_dp, sup_on_g_delta, DomainTag, PolyFn,
};
use elliptic_range::dilation::{find_scaling, verify_series, ScalingOutcome, SolverOptions};
use elliptic_range::dpops::{dp_extend, dp_push, fact103_demo};
use elliptic_range::error::{Error, GenericityFailure};
use elliptic_range::mats::operator_norm;
use elliptic_range::numrange::{
    contains_support, hausdorff_to_ellipse, herglotz_margin, range_boundary, InclusionVerdict,
    DEFAULT_CIRCLE_POINTS, DEFAULT_NUM_ANGLES,
};
use elliptic_range::{ando, CMatrix};
use serde::Serialize;

mod io;
mod svg;

use io::{
    read_json, write_atomic, write_json_atomic, CertMeta, CertificateFile, MatrixBlock,
    MatrixFile, PolyFile,
};

/// Structured outcome of a run, printed as JSON on stdout.
#[derive(Debug, Serialize)]
struct RunReport {
    command: String,
    delta: f64,
    verdict: String,
    residuals: BTreeMap<String, f64>,
    artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    fn new(message: impl Into<String>, code: i32) -> Self {
        CliError {
            message: message.into(),
            code,
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        CliError::new(message, 2)
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError::new(message, 3)
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        CliError::new(message, 4)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_)
            | Error::Shape(_)
            | Error::NonGeneric(_)
            | Error::SpectrumOutside { .. }
            | Error::EigenvalueCluster { .. }
            | Error::NotHermitian { .. }
            | Error::NotContraction { .. } => 4,
            Error::Infeasible(_) => 1,
            _ => 3,
        };
        CliError::new(e.to_string(), code)
    }
}

#[derive(Parser)]
#[command(
    name = "elliptic-range",
    about = "Numerical ranges in an ellipse: inclusion tests, dilation certificates, Ando factors, Douglas-Paulsen extensions, calcular-norm estimates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether W(T) lies in K_delta by two independent tests.
    RangeCheck(RangeCheckArgs),
    /// Search for a scaling certificate and write it as JSON.
    Dilate(DilateArgs),
    /// Factor T into Ando form, or compose factors back into T.
    Ando(AndoArgs),
    /// Douglas-Paulsen push-forward, extension, or the pi-not-onto demo.
    Dp(DpArgs),
    /// Sampled lower bound of a calcular norm.
    Norm(NormArgs),
    /// SVG plot of the numerical-range boundary against the ellipse.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RangeCheckArgs {
    /// Matrix JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Ellipse parameter in [0, 1).
    #[arg(long)]
    delta: f64,
    /// Margin for boundary classification.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Support-sweep angles.
    #[arg(long, default_value_t = DEFAULT_NUM_ANGLES)]
    angles: usize,
    /// Circle points for the Herglotz test.
    #[arg(long, default_value_t = DEFAULT_CIRCLE_POINTS)]
    circle_points: usize,
}

#[derive(Args)]
struct DilateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    delta: f64,
    /// Highest compressed power checked by the series verifier.
    #[arg(long, default_value_t = 12)]
    max_power: usize,
    /// Number of resolvent sample points in the open disc.
    #[arg(long, default_value_t = 32)]
    z_samples: usize,
    /// Certificate output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AndoArgs {
    #[arg(long)]
    delta: f64,
    /// Factor this matrix into (A, B).
    #[arg(long, conflicts_with = "compose", required_unless_present = "compose")]
    factor: Option<PathBuf>,
    /// Compose two factor files A and B into T.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    compose: Option<Vec<PathBuf>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DpArgs {
    #[arg(long)]
    delta: f64,
    /// Extend T to a Douglas-Paulsen matrix on the doubled space.
    #[arg(long, conflicts_with_all = ["push", "fact103"])]
    extend: Option<PathBuf>,
    /// Push a Douglas-Paulsen matrix forward under pi.
    #[arg(long, conflicts_with = "fact103")]
    push: Option<PathBuf>,
    /// Run the pi-is-not-onto demonstration.
    #[arg(long)]
    fact103: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormArgs {
    /// Polynomial coefficients JSON ({"coeffs": [[re, im], ...]}).
    #[arg(long)]
    phi: PathBuf,
    #[arg(long)]
    delta: f64,
    /// bfd estimates sup |phi(T)| over numerical-range matrices; dp
    /// estimates sup |(phi o pi)(X)| over Douglas-Paulsen matrices.
    #[arg(long, value_parser = ["bfd", "dp"])]
    mode: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Sampling seed; fixed default keeps reports reproducible.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NUM_ANGLES)]
    angles: usize,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::RangeCheck(args) => cmd_range_check(args),
        Command::Dilate(args) => cmd_dilate(args),
        Command::Ando(args) => cmd_ando(args),
        Command::Dp(args) => cmd_dp(args),
        Command::Norm(args) => cmd_norm(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match outcome {
        Ok((report, code)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}

fn load_matrix(path: &std::path::Path) -> Result<CMatrix, CliError> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

fn cmd_range_check(args: RangeCheckArgs) -> Result<(RunReport, i32), CliError> {
    let t = load_matrix(&args.input)?;
    let support = contains_support(&t, args.delta, args.angles, args.tol)?;
    let mut residuals = BTreeMap::new();
    let (herglotz_ok, herglotz_m) =
        match herglotz_margin(&t, args.delta, args.circle_points) {
            Ok(m) => {
                residuals.insert("herglotz_margin".into(), m);
                (m >= -args.tol, m)
            }
            // Spectrum escaping the ellipse decides the test negatively;
            // infinity has no JSON encoding, so flag it instead.
            Err(Error::SpectrumOutside { .. }) => {
                residuals.insert("herglotz_spectrum_outside".into(), 1.0);
                (false, f64::NEG_INFINITY)
            }
            Err(e) => return Err(e.into()),
        };
    residuals.insert("support_margin".into(), support.margin);
    residuals.insert("witness_angle".into(), support.witness_angle);

    let (verdict, code) = match support.verdict {
        InclusionVerdict::Boundary => ("boundary".to_string(), 0),
        InclusionVerdict::Inside if herglotz_ok => ("inside".to_string(), 0),
        InclusionVerdict::Outside if !herglotz_ok => ("outside".to_string(), 1),
        _ => (
            format!(
                "disagreement: support says {:?} (margin {:.3e}), herglotz margin {:.3e}",
                support.verdict, support.margin, herglotz_m
            ),
            3,
        ),
    };
    Ok((
        RunReport {
            command: "range-check".into(),
            delta: args.delta,
            verdict,
            residuals,
            artifacts: vec![],
            seed: None,
        },
        code,
    ))
}

fn cmd_dilate(args: DilateArgs) -> Result<(RunReport, i32), CliError> {
    let t = load_matrix(&args.input)?;
    let mut residuals = BTreeMap::new();
    let outcome = match find_scaling(&t, args.delta, &SolverOptions::default()) {
        Ok(o) => o,
        Err(Error::SolverStalled {
            iterations,
            residual,
            context,
        }) => {
            residuals.insert("best_residual".into(), residual);
            return Ok((
                RunReport {
                    command: "dilate".into(),
                    delta: args.delta,
                    verdict: format!("stalled after {iterations} iterations ({context})"),
                    residuals,
                    artifacts: vec![],
                    seed: None,
                },
                3,
            ));
        }
        Err(e) => return Err(e.into()),
    };
    match outcome {
        ScalingOutcome::Feasible(cert) => {
            let series = verify_series(
                &t,
                args.delta,
                &cert.isometry,
                &cert.contraction,
                &elliptic_range::dilation::default_z_samples(args.z_samples),
                args.max_power,
            )?;
            residuals.insert("scaled_norm".into(), cert.residuals.scaled_norm);
            residuals.insert("lmi_residual".into(), cert.residuals.lmi);
            residuals.insert("isometry_residual".into(), cert.residuals.isometry);
            residuals.insert("series_residual".into(), series.worst());
            let mut artifacts = vec![];
            if let Some(out) = &args.out {
                let file = CertificateFile {
                    gamma: MatrixBlock::from_matrix(&cert.gamma),
                    delta_matrix: MatrixBlock::from_matrix(&cert.delta_matrix),
                    e: MatrixBlock::from_matrix(&cert.isometry),
                    y: MatrixBlock::from_matrix(&cert.contraction),
                    residuals: residuals.clone(),
                    meta: CertMeta {
                        delta: args.delta,
                        seed: None,
                        version: env!("CARGO_PKG_VERSION").into(),
                    },
                };
                write_json_atomic(out, &file)?;
                artifacts.push(out.display().to_string());
            }
            Ok((
                RunReport {
                    command: "dilate".into(),
                    delta: args.delta,
                    verdict: "feasible".into(),
                    residuals,
                    artifacts,
                    seed: None,
                },
                0,
            ))
        }
        ScalingOutcome::Infeasible(report) => {
            residuals.insert("best_residual".into(), report.best_residual);
            residuals.insert("best_norm".into(), report.best_norm);
            Ok((
                RunReport {
                    command: "dilate".into(),
                    delta: args.delta,
                    verdict: "infeasible".into(),
                    residuals,
                    artifacts: vec![],
                    seed: None,
                },
                1,
            ))
        }
    }
}

#[derive(Debug, Serialize, serde::Deserialize)]
struct FactorsFile {
    a: MatrixFile,
    b: MatrixFile,
    delta: f64,
}

fn cmd_ando(args: AndoArgs) -> Result<(RunReport, i32), CliError> {
    let mut residuals = BTreeMap::new();
    let mut artifacts = vec![];
    if let Some(input) = &args.factor {
        let t = load_matrix(input)?;
        let factors = ando::ando_factor(&t, args.delta)?;
        let rebuilt = ando::ando_compose(&factors.a, &factors.b, args.delta)?;
        let scale = operator_norm(&t)?.max(1e-300);
        residuals.insert(
            "reconstruction_residual".into(),
            operator_norm(&rebuilt.sub(&t))? / scale,
        );
        residuals.insert("norm_a".into(), operator_norm(&factors.a)?);
        residuals.insert("norm_b".into(), operator_norm(&factors.b)?);
        if let Some(out) = &args.out {
            let file = FactorsFile {
                a: MatrixFile::from_matrix(&factors.a, Some("A".into())),
                b: MatrixFile::from_matrix(&factors.b, Some("B".into())),
                delta: args.delta,
            };
            write_json_atomic(out, &file)?;
            artifacts.push(out.display().to_string());
        }
        Ok((
            RunReport {
                command: "ando".into(),
                delta: args.delta,
                verdict: "factored".into(),
                residuals,
                artifacts,
                seed: None,
            },
            0,
        ))
    } else {
        let paths = args
            .compose
            .as_ref()
            .ok_or_else(|| CliError::parse("either --factor or --compose is required"))?;
        let a = load_matrix(&paths[0])?;
        let b = load_matrix(&paths[1])?;
        let t = ando::ando_compose(&a, &b, args.delta)?;
        let support = contains_support(&t, args.delta, DEFAULT_NUM_ANGLES, 1e-8)?;
        residuals.insert("support_margin".into(), support.margin);
        residuals.insert("norm_t".into(), operator_norm(&t)?);
        if let Some(out) = &args.out {
            write_json_atomic(out, &MatrixFile::from_matrix(&t, Some("T".into())))?;
            artifacts.push(out.display().to_string());
        }
        Ok((
            RunReport {
                command: "ando".into(),
                delta: args.delta,
                verdict: format!("composed ({:?})", support.verdict).to_lowercase(),
                residuals,
                artifacts,
                seed: None,
            },
            0,
        ))
    }
}

fn cmd_dp(args: DpArgs) -> Result<(RunReport, i32), CliError> {
    let mut residuals = BTreeMap::new();
    let mut artifacts = vec![];
    if let Some(input) = &args.extend {
        let t = load_matrix(input)?;
        // Boundary inputs stall the exact solver by policy, and focal
        // eigenvalues (squaring to 4 delta, as on the boundary example)
        // break genericity; both are cured by shrinking. Shrink by
        // (1 - 1e-6) per round and report the applied scaling.
        let mut scaling = 1.0f64;
        let mut witness = None;
        for round in 0..=16 {
            match dp_extend(&t.scale_re(scaling), args.delta) {
                Ok(w) => {
                    witness = Some(w);
                    break;
                }
                Err(Error::SolverStalled { .. }) if round < 16 => {
                    scaling *= 1.0 - 1e-6;
                }
                Err(Error::NonGeneric(GenericityFailure::FocalEigenvalue { .. }))
                    if round < 16 =>
                {
                    scaling *= 1.0 - 1e-6;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let w = witness.ok_or_else(|| {
            CliError::numeric("extension solver stalled even after auto-shrink")
        })?;
        residuals.insert("norm_x".into(), w.norm_x);
        residuals.insert("norm_x_inv".into(), w.norm_x_inv);
        residuals.insert("restriction_residual".into(), w.restriction_residual);
        residuals.insert("off_diagonal_residual".into(), w.off_diagonal_residual);
        residuals.insert("applied_scaling".into(), scaling);
        if let Some(out) = &args.out {
            write_json_atomic(out, &MatrixFile::from_matrix(&w.x, Some("X".into())))?;
            artifacts.push(out.display().to_string());
        }
        let verdict = if scaling < 1.0 {
            format!("extended (input auto-shrunk by factor {scaling:.12})")
        } else {
            "extended".into()
        };
        Ok((
            RunReport {
                command: "dp".into(),
                delta: args.delta,
                verdict,
                residuals,
                artifacts,
                seed: None,
            },
            0,
        ))
    } else if let Some(input) = &args.push {
        let x = load_matrix(input)?;
        let t = dp_push(&x, args.delta)?;
        let support = contains_support(&t, args.delta, DEFAULT_NUM_ANGLES, 1e-8)?;
        residuals.insert("support_margin".into(), support.margin);
        if let Some(out) = &args.out {
            write_json_atomic(out, &MatrixFile::from_matrix(&t, Some("pi(X)".into())))?;
            artifacts.push(out.display().to_string());
        }
        let verdict = format!("pushed ({:?})", support.verdict).to_lowercase();
        let code = if support.verdict == InclusionVerdict::Outside {
            1
        } else {
            0
        };
        Ok((
            RunReport {
                command: "dp".into(),
                delta: args.delta,
                verdict,
                residuals,
                artifacts,
                seed: None,
            },
            code,
        ))
    } else if args.fact103 {
        let rep = fact103_demo(args.delta)?;
        residuals.insert("dp_criterion".into(), rep.dp_criterion);
        residuals.insert("norm_x".into(), rep.norm_x);
        residuals.insert("closed_form_residual".into(), rep.closed_form_residual);
        residuals.insert("preimage_residual".into(), rep.preimage_residual);
        residuals.insert("boundary_hausdorff".into(), rep.boundary_hausdorff);
        let verdict = if rep.is_dp {
            format!(
                "X is Douglas-Paulsen; 1-6*delta+delta^2 = {}",
                rep.dp_criterion
            )
        } else {
            format!(
                "X not Douglas-Paulsen; 1-6*delta+delta^2 = {}",
                rep.dp_criterion
            )
        };
        if let Some(out) = &args.out {
            write_json_atomic(out, &MatrixFile::from_matrix(&rep.x, Some("X".into())))?;
            artifacts.push(out.display().to_string());
        }
        Ok((
            RunReport {
                command: "dp".into(),
                delta: args.delta,
                verdict,
                residuals,
                artifacts,
                seed: None,
            },
            0,
        ))
    } else {
        Err(CliError::parse(
            "one of --extend, --push, --fact103 is required",
        ))
    }
}

fn cmd_norm(args: NormArgs) -> Result<(RunReport, i32), CliError> {
    let coeffs = read_json::<PolyFile>(&args.phi)?.to_coeffs()?;
    let phi = PolyFn::new(coeffs, DomainTag::GDelta);
    let mut residuals = BTreeMap::new();
    let estimate = match args.mode.as_str() {
        "bfd" => {
            let est = sample_bfd(&phi, args.delta, args.dim, args.samples, args.seed)?;
            let sup = sup_on_g_delta(&phi, args.delta, 4096)?;
            residuals.insert("sup_boundary".into(), sup);
            residuals.insert("delyon_upper_bound".into(), delyon_bound(args.delta)? * sup);
            est
        }
        "dp" => {
            let psi = pi_sharp(&phi, args.delta);
            sample_dp(&psi, args.delta, args.dim, args.samples, args.seed)?
        }
        other => return Err(CliError::parse(format!("unknown mode {other}"))),
    };
    residuals.insert("lower_bound".into(), estimate.lower_bound);
    residuals.insert("samples_used".into(), estimate.samples_used as f64);
    Ok((
        RunReport {
            command: "norm".into(),
            delta: args.delta,
            verdict: format!("estimated ({} mode)", args.mode),
            residuals,
            artifacts: vec![],
            seed: Some(estimate.seed),
        },
        0,
    ))
}

fn cmd_plot(args: PlotArgs) -> Result<(RunReport, i32), CliError> {
    let t = load_matrix(&args.input)?;
    let boundary = range_boundary(&t, args.angles)?;
    // Metadata is measured on a dense sweep so it reflects the curve,
    // not the plotting resolution.
    let dense = range_boundary(&t, 16_384)?;
    let hausdorff = hausdorff_to_ellipse(&dense, args.delta, 32_768);
    let drawing = svg::boundary_plot(&boundary, args.delta, hausdorff);
    write_atomic(&args.out, &drawing)?;
    let mut residuals = BTreeMap::new();
    residuals.insert("hausdorff_to_ellipse".into(), hausdorff);
    Ok((
        RunReport {
            command: "plot".into(),
            delta: args.delta,
            verdict: "plotted".into(),
            residuals,
            artifacts: vec![args.out.display().to_string()],
            seed: None,
        },
        0,
    ))
}
