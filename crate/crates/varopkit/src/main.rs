//! Batch command-line front end: group and dual summaries, certified norm
//! computation from function files, and the named check suites. All
//! randomness flows through the `--seed` flag, so a fixed seed and
//! configuration reproduce every report byte for byte; `VAROPKIT_THREADS`
//! caps worker parallelism without affecting results.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use varopkit::fourier::{a_norm_variational, AFn};
use varopkit::group::{build_group, FiniteGroup, GroupDescriptor};
use varopkit::la::CMat;
use varopkit::multifn::{MultiFn, MultiFnJson};
use varopkit::norm::{haagerup_norm, schur_norm, SolveOpts};
use varopkit::repr::compute_dual;
use varopkit::report::{
    render_norm_csv, render_norm_json, render_norm_text, render_suites_csv, render_suites_json,
    render_suites_text, run_suite, NormReport,
};
use varopkit::{Error, Result};

const EXIT_FLAGGED: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "varopkit",
    version,
    about = "Multidimensional Fourier and Varopoulos algebras on finite groups",
    long_about = "Batch tool for certified multiplier norms and transfer checks on finite \
                  groups. Output is deterministic for a fixed --seed and configuration. \
                  The VAROPKIT_THREADS environment variable caps worker threads."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random choice made during the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Target width of certified intervals.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,

    /// Multi-start count for the variational solvers.
    #[arg(long, global = true, default_value_t = 16)]
    restarts: usize,

    /// Largest bond dimension tried by the multi-factor norm search.
    #[arg(long, global = true, default_value_t = 8)]
    bond_cap: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Fourier,
    Haagerup,
    Schur,
}

#[derive(Subcommand)]
enum Command {
    /// Build a group and summarize its unitary dual.
    Group {
        /// Family name (cyclic, dihedral, symmetric, quaternion8), a short
        /// alias like c3/s4/q8, or a JSON descriptor.
        #[arg(long = "type")]
        kind: String,

        /// Family parameter, required for cyclic/dihedral/symmetric.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Certify a norm of a function read from a JSON file.
    Norm {
        #[arg(long, value_enum)]
        target: Target,

        /// Function file: {"group":descriptor,"arity":k,"values":[[re,im],..]}.
        #[arg(long)]
        input: PathBuf,
    },
    /// Run a named check suite and report pass/fail with deviations.
    Check {
        /// isometry, lemma51, transfer, ditkin, or all.
        #[arg(long)]
        suite: String,

        /// Group alias or JSON descriptor.
        #[arg(long)]
        group: String,

        /// Arity of the source algebra.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
}

#[derive(Serialize)]
struct GroupSummary {
    descriptor: String,
    order: usize,
    irrep_dims: Vec<usize>,
    sum_of_squares: usize,
    complete: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if !cli.tol.is_finite() || cli.tol <= 0.0 {
        return Err(Error::BadInput(format!(
            "--tol must be positive, got {}",
            cli.tol
        )));
    }
    if cli.restarts == 0 || cli.bond_cap == 0 {
        return Err(Error::BadInput(
            "--restarts and --bond-cap must be positive".into(),
        ));
    }
    let opts = SolveOpts {
        seed: cli.seed,
        tol: cli.tol,
        restarts: cli.restarts,
        bond_cap: cli.bond_cap,
        ..SolveOpts::default()
    };

    match cli.command {
        Command::Group { kind, n } => {
            let descriptor = descriptor_from(&kind, n)?;
            let group = Arc::new(build_group(&descriptor)?);
            cmd_group(&group, &opts, cli.format, cli.out.as_deref())
        }
        Command::Norm { target, input } => {
            cmd_norm(target, &input, &opts, cli.format, cli.out.as_deref())
        }
        Command::Check { suite, group, n } => {
            if n == 0 {
                return Err(Error::BadInput("--n must be at least 1".into()));
            }
            let group = Arc::new(build_group(&GroupDescriptor::parse(&group)?)?);
            cmd_check(&suite, &group, n, &opts, cli.format, cli.out.as_deref())
        }
    }
}

fn descriptor_from(kind: &str, n: Option<usize>) -> Result<GroupDescriptor> {
    let need_n = || {
        n.ok_or_else(|| Error::BadInput(format!("--type {kind} requires --n")))
    };
    match kind {
        "cyclic" => Ok(GroupDescriptor::Cyclic { n: need_n()? }),
        "dihedral" => Ok(GroupDescriptor::Dihedral { n: need_n()? }),
        "symmetric" => Ok(GroupDescriptor::Symmetric { n: need_n()? }),
        "quaternion8" => Ok(GroupDescriptor::Quaternion8),
        other => GroupDescriptor::parse(other),
    }
}

fn cmd_group(
    group: &Arc<FiniteGroup>,
    opts: &SolveOpts,
    format: Format,
    out: Option<&Path>,
) -> Result<u8> {
    let dual = compute_dual(group, opts.seed)?;
    let mut dims: Vec<usize> = dual.irreps().iter().map(|p| p.dim).collect();
    dims.sort_unstable();
    let sum_of_squares: usize = dims.iter().map(|d| d * d).sum();
    let summary = GroupSummary {
        descriptor: group.descriptor().to_string(),
        order: group.order(),
        irrep_dims: dims,
        sum_of_squares,
        complete: sum_of_squares == group.order(),
    };

    let rendered = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let dims = summary
                .irrep_dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            format!(
                "descriptor,order,irrep_dims,sum_of_squares,complete\n{},{},{},{},{}\n",
                summary.descriptor, summary.order, dims, summary.sum_of_squares, summary.complete
            )
        }
        Format::Text => {
            format!(
                "group {}: order {}\nirrep dimensions: {:?}\nsum of squares: {} ({})\n",
                summary.descriptor,
                summary.order,
                summary.irrep_dims,
                summary.sum_of_squares,
                if summary.complete {
                    "matches the order"
                } else {
                    "DOES NOT match the order"
                }
            )
        }
    };
    emit(&rendered, out)?;
    Ok(if summary.complete { 0 } else { EXIT_CHECK_FAILED })
}

fn cmd_norm(
    target: Target,
    input: &Path,
    opts: &SolveOpts,
    format: Format,
    out: Option<&Path>,
) -> Result<u8> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| Error::BadInput(format!("cannot read {}: {e}", input.display())))?;
    let json: MultiFnJson = serde_json::from_str(&text)
        .map_err(|e| Error::BadInput(format!("{} does not match the function schema: {e}", input.display())))?;
    let fun = MultiFn::from_json(&json)?;

    let (report, flagged) = match target {
        Target::Fourier => {
            let u = AFn::new(fun)?;
            let dual = compute_dual(u.group(), opts.seed)?;
            let cert = a_norm_variational(&u, &dual, opts)?;
            (NormReport::from_fourier(&cert), false)
        }
        Target::Haagerup => {
            let cert = haagerup_norm(&fun, opts)?;
            let flagged = cert.flag.is_some();
            (NormReport::from_haagerup(&cert, opts), flagged)
        }
        Target::Schur => {
            if fun.arity() != 2 {
                return Err(Error::BadInput(format!(
                    "schur target needs an arity-2 function, got arity {}",
                    fun.arity()
                )));
            }
            let q = fun.group().order();
            let w = CMat::from_fn(q, q, |x, y| fun.at(&[x, y]).unwrap());
            let cert = schur_norm(&w, opts)?;
            let flagged = cert.flag.is_some();
            (NormReport::from_schur(&cert, opts), flagged)
        }
    };

    let rendered = match format {
        Format::Json => render_norm_json(&report),
        Format::Csv => render_norm_csv(&report),
        Format::Text => render_norm_text(&report),
    };
    emit(&rendered, out)?;
    Ok(if flagged || report.width() > opts.tol {
        EXIT_FLAGGED
    } else {
        0
    })
}

fn cmd_check(
    suite: &str,
    group: &Arc<FiniteGroup>,
    n: usize,
    opts: &SolveOpts,
    format: Format,
    out: Option<&Path>,
) -> Result<u8> {
    let reports = run_suite(suite, group, n, opts)?;
    let rendered = match format {
        Format::Json => render_suites_json(&reports),
        Format::Csv => render_suites_csv(&reports),
        Format::Text => render_suites_text(&reports),
    };
    emit(&rendered, out)?;
    Ok(if reports.iter().all(|r| r.passed) {
        0
    } else {
        EXIT_CHECK_FAILED
    })
}

fn emit(rendered: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| Error::BadInput(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}
