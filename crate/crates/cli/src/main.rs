mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use stargraph::analysis::{critical_tau2, derivative_scan, entropy_surface, SweepGrid};
use stargraph::forced::{forced_config, podality_trend, ForcedMode};
use stargraph::optimize::{maximize_entropy, ConstraintSet};
use stargraph::phase::{boundary_samples, crossing_point_with, verify_step4_with, KPolicy, Step4Report};
use stargraph::report::{format_float, write_csv};
use stargraph::sampling::sample_graph;
use stargraph::taco::{boundary_bruteforce, fuzz_inequalities};
use stargraph::{DensityFunctional, Graphon};

use config::FileConfig;
use error::CliError;
use output::Session;

#[derive(Debug, Parser)]
#[command(name = "stargraph", version, about = "Entropy-maximizing step graphons under edge and k-star constraints")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// `key = value` file with defaults for the options below.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "STARGRAPH_JOBS")]
    jobs: Option<usize>,
    /// Largest block count tried by the optimizer.
    #[arg(long, global = true)]
    kmax: Option<usize>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    constraint_tol: Option<f64>,
    #[arg(long, global = true)]
    grad_tol: Option<f64>,
    #[arg(long, global = true)]
    penalty_growth: Option<f64>,
    #[arg(long, global = true)]
    max_outer: Option<usize>,
}

impl GlobalArgs {
    fn overrides(&self) -> FileConfig {
        FileConfig {
            kmax: self.kmax,
            restarts: self.restarts,
            seed: self.seed,
            constraint_tol: self.constraint_tol,
            grad_tol: self.grad_tol,
            penalty_growth: self.penalty_growth,
            max_outer: self.max_outer,
            jobs: self.jobs,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Subgraph densities of a graphon given as JSON `{"c": [...], "g": [[...]]}`.
    Densities {
        graphon: PathBuf,
        /// Star orders, e.g. `2,3` or `2..5`.
        #[arg(long, default_value = "2")]
        k: String,
        /// Also report chain3, cycle4 and tq.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy maximizer under density constraints.
    Optimize {
        /// e.g. `t1=0.5,t2=0.28`.
        #[arg(long)]
        constraints: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy surface over an `(eps, sigma2)` grid.
    Sweep {
        #[arg(long, default_value = "2star")]
        model: String,
        /// `eps0:eps1:neps,sig0:sig1:nsig`; defaults to the standard cross-sections.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower and upper boundary of the edge/k-star phase space.
    Boundary {
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Accept k beyond the verified range.
        #[arg(long)]
        allow_unverified: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crossing point of the clique and anticlique branches for each k.
    Crossing {
        #[arg(long, default_value = "2..30")]
        k: String,
        #[arg(long)]
        allow_unverified: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sign check of the auxiliary function for each k; exits 1 on any failure.
    VerifyStep4 {
        #[arg(long, default_value = "2..30")]
        k: String,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical point of the symmetric bipodal phase at eps = 1/2.
    CriticalPoint {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy profile across eps = 1/2 at fixed tau2 and the derivative-jump verdict.
    ScanDerivative {
        #[arg(long)]
        tau2: f64,
        #[arg(long, default_value = "0.495:0.505")]
        window: String,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Profile CSV; the verdict then goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verdict JSON file.
        #[arg(long)]
        verdict: Option<PathBuf>,
    },
    /// Densities (t1, t2, t3) of 0-1 tripodal graphons and their upper envelope.
    Taco {
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        /// Point cloud CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Envelope CSV.
        #[arg(long)]
        envelope: Option<PathBuf>,
    },
    /// Random check of the (t1, t2, t3) inequalities; exits 1 on a violation.
    TacoCheck {
        #[arg(long, default_value_t = 10_000)]
        fuzz: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Podality of the maximizer along the forced model family.
    Forced {
        #[arg(long)]
        mode: String,
        /// Strictly decreasing, e.g. `0.02,0.005,0.0015`.
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random graph on n vertices drawn from a graphon, as `u v` lines.
    Sample {
        #[arg(long)]
        graphon: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Infeasible(diag) => {
                    println!("{}", serde_json::to_string_pretty(diag).unwrap_or_default());
                    eprintln!("stargraph: {e}");
                }
                _ => eprintln!("stargraph: {e}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let config = cli.global.overrides().or(file).resolve()?;
    if let Some(jobs) = config.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let mut session = Session::new(std::env::args().collect(), config);
    dispatch(cli.command, &mut session)?;
    session.finish()
}

fn dispatch(command: Command, session: &mut Session) -> Result<(), CliError> {
    let cfg = session.config().optimizer.clone();
    match command {
        Command::Densities { graphon, k, all, out } => {
            let g = read_graphon(&graphon)?;
            let ks = parse_orders(&k)?;
            let mut functionals = vec![DensityFunctional::Edge];
            functionals.extend(ks.iter().map(|&k| DensityFunctional::KStar(k)));
            if all {
                functionals.extend([DensityFunctional::Chain3, DensityFunctional::Cycle4, DensityFunctional::SignedQuad]);
            }
            session.emit(out.as_deref(), &json_bytes(&g.densities(&functionals))?)
        }
        Command::Optimize { constraints, out } => {
            let cs: ConstraintSet = constraints.parse()?;
            let result = maximize_entropy(&cs, &cfg)?;
            let mut text = result.to_json_string();
            text.push('\n');
            session.emit(out.as_deref(), text.as_bytes())
        }
        Command::Sweep { model, grid, out } => {
            if model != "2star" {
                return Err(CliError::Usage(format!("unknown model `{model}` (expected 2star)")));
            }
            let grid = match grid {
                Some(spec) => spec.parse::<SweepGrid>()?,
                None => SweepGrid::cross_sections(0.0, 0.16, 17),
            };
            let table = entropy_surface(&grid, &cfg);
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            session.emit(out.as_deref(), &buf)?;
            if table.failures.is_empty() {
                Ok(())
            } else {
                for f in &table.failures {
                    eprintln!("{}", serde_json::to_string(f).unwrap_or_default());
                }
                Err(CliError::Numerical(format!("{} grid points failed", table.failures.len())))
            }
        }
        Command::Boundary { k, samples, allow_unverified, out } => {
            let rows: Vec<Vec<String>> = boundary_samples(k, samples, policy(allow_unverified))?
                .iter()
                .map(|s| {
                    vec![
                        format_float(s.eps),
                        format_float(s.tau_lower),
                        format_float(s.tau_upper),
                        branch_name(&s.branch),
                    ]
                })
                .collect();
            emit_csv(session, out.as_deref(), &["eps", "tau_lower", "tau_upper", "branch"], &rows)
        }
        Command::Crossing { k, allow_unverified, out } => {
            let rows = parse_orders(&k)?
                .into_iter()
                .map(|k| Ok(vec![k.to_string(), format_float(crossing_point_with(k, policy(allow_unverified))?)]))
                .collect::<Result<Vec<_>, CliError>>()?;
            emit_csv(session, out.as_deref(), &["k", "eps0"], &rows)
        }
        Command::VerifyStep4 { k, grid, out } => {
            let ks = parse_orders(&k)?;
            let reports = ks
                .par_iter()
                .map(|&k| verify_step4_with(k, grid, KPolicy::Verified))
                .collect::<Result<Vec<Step4Report>, _>>()?;
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.k.to_string(),
                        r.grid.to_string(),
                        format_float(r.max_f),
                        format_float(r.argmax_x),
                        format_float(r.min_z),
                        r.inconsistent_points.to_string(),
                        format_float(r.value_near_one),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            let header = ["k", "grid", "max_f", "argmax_x", "min_z", "inconsistent_points", "value_near_one", "pass"];
            emit_csv(session, out.as_deref(), &header, &rows)?;
            let failed: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| r.k.to_string()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!("verification failed for k = {}", failed.join(","))))
            }
        }
        Command::CriticalPoint { out } => session.emit(out.as_deref(), &json_bytes(&critical_tau2()?)?),
        Command::ScanDerivative { tau2, window, h, out, verdict } => {
            let window = parse_window(&window)?;
            let scan = derivative_scan(tau2, window, h, &cfg)?;
            let rows: Vec<Vec<String>> = scan
                .profile
                .iter()
                .map(|p| vec![format_float(p.eps), format_float(p.entropy), format_float(p.derivative)])
                .collect();
            let mut summary = serde_json::to_value(&scan).map_err(|e| CliError::Io(e.to_string()))?;
            if let Some(map) = summary.as_object_mut() {
                map.remove("profile");
            }
            let summary = json_bytes(&summary)?;
            let profile_to_stdout = out.is_none();
            emit_csv(session, out.as_deref(), &["eps", "entropy", "derivative"], &rows)?;
            match verdict {
                Some(path) => session.emit(Some(&path), &summary),
                None if profile_to_stdout => {
                    eprint!("{}", String::from_utf8_lossy(&summary));
                    Ok(())
                }
                None => session.emit(None, &summary),
            }
        }
        Command::Taco { resolution, out, envelope } => {
            let boundary = boundary_bruteforce(resolution).map_err(CliError::Usage)?;
            let mut cloud = Vec::new();
            boundary.write_cloud_csv(&mut cloud).map_err(|e| CliError::Io(e.to_string()))?;
            session.emit(out.as_deref(), &cloud)?;
            if let Some(path) = envelope {
                let mut env = Vec::new();
                boundary.write_envelope_csv(&mut env).map_err(|e| CliError::Io(e.to_string()))?;
                session.emit(Some(&path), &env)?;
            }
            Ok(())
        }
        Command::TacoCheck { fuzz, out } => {
            let report = fuzz_inequalities(fuzz, cfg.seed);
            session.emit(out.as_deref(), &json_bytes(&report)?)?;
            if report.min_cs < -1e-12 || report.min_dual < -1e-12 {
                Err(CliError::CheckFailed("an inequality is violated".into()))
            } else {
                Ok(())
            }
        }
        Command::Forced { mode, alphas, out } => {
            let mode: ForcedMode = mode.parse()?;
            let alphas = parse_floats(&alphas)?;
            let trend = podality_trend(&alphas, mode, &forced_config(&cfg))?;
            let mut buf = Vec::new();
            trend.write_csv(&mut buf)?;
            session.emit(out.as_deref(), &buf)
        }
        Command::Sample { graphon, n, out } => {
            let g = read_graphon(&graphon)?;
            let graph = sample_graph(&g, n, cfg.seed);
            let mut text = String::new();
            for (u, v) in graph.edges() {
                text.push_str(&format!("{u} {v}\n"));
            }
            session.emit(out.as_deref(), text.as_bytes())
        }
    }
}

fn policy(allow_unverified: bool) -> KPolicy {
    if allow_unverified {
        KPolicy::AllowUnverified
    } else {
        KPolicy::Verified
    }
}

fn branch_name<T: Serialize>(branch: &T) -> String {
    serde_json::to_value(branch).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn read_graphon(path: &Path) -> Result<Graphon, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(Graphon::from_json_str(&text)?)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn emit_csv(session: &mut Session, out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows).map_err(|e| CliError::Io(e.to_string()))?;
    session.emit(out, &buf)
}

/// `2`, `2,3,5` or the inclusive range `2..30`.
fn parse_orders(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Usage(format!("expected k, k1,k2,... or k1..k2, got `{s}`"));
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| bad());
    let ks = match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        }
        None => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
    };
    Ok(ks)
}

fn parse_floats(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: `{t}`"))))
        .collect()
}

fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("expected lo:hi, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}
