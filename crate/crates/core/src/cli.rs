//! Command-line front end. Every subcommand writes one report (JSON unless
//! noted) and maps its verdict to an exit status: 0 completed or passed,
//! 1 verified violation or degenerate constant, 2 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::cd_verifier::cdpsi_check;
use crate::constants::{constants_report, constants_table, harnack_constant, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::gamma::graph_cd_dimension;
use crate::graph::{cayley_abelian, Graph};
use crate::harnack::{gradient_estimate_check, harnack_check, Coefficients};
use crate::heat::{default_time_grid, liyau_check, semigroup_inequality_check, solve_heat};
use crate::psi::{log_grid, PsiSpec};
use crate::psi_ops::{gamma2_psi, gamma_psi, omega_psi, psi_laplacian};
use crate::ricci_flat::{eta_permutation_check, is_ricci_flat, DEFAULT_NODE_LIMIT};
use crate::suite::{paper_suite, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default seed for every randomized subcommand.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "psilab", version, about = "psi-calculus laboratory for finite graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Machine-readable output where a text form also exists.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// H_psi and C_psi for one psi, or the reference table as CSV.
    Constants {
        #[arg(long, default_value = "log")]
        psi: String,
        #[arg(long)]
        table: bool,
    },
    /// Exact per-vertex CD(d,0) dimension.
    Curvature {
        #[arg(long)]
        graph: String,
    },
    /// Δ^ψ, Γ^ψ, Ω^ψ and Γ₂^ψ of a positive function.
    PsiOps {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        psi: String,
        #[arg(long)]
        f: String,
    },
    /// Heat semigroup P_t f0 on a time grid.
    Heat {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        f0: String,
        #[arg(long, default_value = "log:0.01:10:40")]
        times: String,
    },
    /// −Δ^ψ u ≤ d/(2t) along heat solutions.
    LiyauCheck(EvolutionArgs),
    /// Semigroup form of CDψ(n,0).
    SemigroupCheck(EvolutionArgs),
    /// Randomized search for CDψ(d,0) counterexamples.
    CdpsiCheck {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        psi: String,
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
    },
    /// Search for a Ricci-flat structure at every vertex.
    RicciFlat {
        #[arg(long)]
        graph: String,
        /// Backtracking node limit per vertex.
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        budget: u64,
    },
    /// Cayley graph of an abelian group, written as an edge list (JSON with --json).
    Cayley {
        /// Cyclic orders, e.g. `3,3`.
        #[arg(long)]
        orders: String,
        /// Generators, e.g. `(1,0);(0,1)`.
        #[arg(long)]
        generators: String,
    },
    /// Gradient estimate and Harnack inequality along one heat solution.
    HarnackCheck {
        #[arg(long)]
        graph: String,
        #[arg(long, default_value = "log")]
        psi: String,
        #[arg(long)]
        d: f64,
        #[arg(long)]
        f0: Option<String>,
        #[arg(long, default_value = "log:0.01:10:40")]
        times: String,
        /// Per-pair slack CSV destination.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Every acceptance criterion on the built-in graphs.
    PaperSuite {
        /// Replace the computed C_log downstream (mutation check).
        #[arg(long)]
        c_log: Option<f64>,
        /// Do not fail criteria on their runtime targets.
        #[arg(long)]
        ignore_runtime: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct EvolutionArgs {
    #[arg(long)]
    pub graph: String,
    #[arg(long)]
    pub psi: String,
    /// Dimension parameter (`d` for Li-Yau, `n` for the semigroup form).
    #[arg(long)]
    pub d: f64,
    /// Initial data; random positive data from `--seed` if omitted.
    #[arg(long)]
    pub f0: Option<String>,
    /// Random initial data sets used when `--f0` is omitted.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value = "log:0.01:10:40")]
    pub times: String,
}

/// Loads a graph file (edge list or JSON) or, failing that, a built-in name.
pub fn load_graph(spec: &str) -> Result<Graph> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{spec}: {e}")))?;
        Graph::parse_any(&text).map_err(|e| Error::Parse(format!("graph file `{spec}`: {e}")))
    } else {
        Graph::named(spec).map_err(|_| {
            Error::Parse(format!("`{spec}` is neither a readable graph file nor a built-in graph"))
        })
    }
}

/// A JSON array or whitespace/comma separated numbers.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| Error::Parse(format!("vertex values: {e}")));
    }
    t.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}` in vertex values"))))
        .collect()
}

/// Reads vertex values from a file, or parses the argument itself.
pub fn load_values(spec: &str) -> Result<Vec<f64>> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{spec}: {e}")))?;
        parse_values(&text).map_err(|e| Error::Parse(format!("`{spec}`: {e}")))
    } else {
        parse_values(spec)
    }
}

/// `log:a:b:n` for `n` log-spaced points in `[a, b]`, or a comma list.
pub fn parse_times(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Parse(format!("time grid `{spec}`: {why}"));
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected log:a:b:n"));
        }
        let a: f64 = parts[0].parse().map_err(|_| bad("bad lower end"))?;
        let b: f64 = parts[1].parse().map_err(|_| bad("bad upper end"))?;
        let n: usize = parts[2].parse().map_err(|_| bad("bad point count"))?;
        if !(a > 0.0 && b > a && n >= 2) {
            return Err(bad("need 0 < a < b and n >= 2"));
        }
        if (a, b, n) == (1e-2, 10.0, 40) {
            return Ok(default_time_grid());
        }
        return Ok(log_grid(a, b, n));
    }
    spec.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad("bad number")))
        .collect()
}

/// `"(1,0);(0,1)"` into generator vectors.
pub fn parse_generators(spec: &str) -> Result<Vec<Vec<i64>>> {
    spec.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|g| {
            let inner = g.trim_start_matches('(').trim_end_matches(')');
            inner
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::Parse(format!("bad generator `{g}`")))
                })
                .collect()
        })
        .collect()
}

fn parse_orders(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad group order `{s}`"))))
        .collect()
}

fn parse_psi(s: &str) -> Result<PsiSpec> {
    PsiSpec::parse(s)
}

fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0f64).exp()).collect()
}

fn initial_data(args: &EvolutionArgs, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    match &args.f0 {
        Some(spec) => Ok(vec![load_values(spec)?]),
        None => {
            if args.samples == 0 {
                return Err(Error::InvalidParameter("--samples must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..args.samples).map(|_| random_positive(&mut rng, n)).collect())
        }
    }
}

/// Rendered output plus exit status.
struct Outcome {
    text: String,
    status: i32,
}

fn document<T: Serialize>(value: &T, status: i32) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    Outcome { text, status }
}

fn status(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

fn execute(cmd: &Command, global: &GlobalArgs) -> Result<Outcome> {
    if !(global.tol > 0.0 && global.tol < 1.0) {
        return Err(Error::InvalidParameter(format!("--tol must be in (0,1), got {}", global.tol)));
    }
    match cmd {
        Command::Constants { psi, table } => {
            if *table {
                return Ok(Outcome { text: constants_table(global.tol)?, status: EXIT_OK });
            }
            let report = constants_report(&parse_psi(psi)?, global.tol)?;
            let degenerate = report.c_psi.is_degenerate();
            Ok(document(&report, status(!degenerate)))
        }
        Command::Curvature { graph } => {
            let g = load_graph(graph)?;
            let (per_vertex, graph_value) = graph_cd_dimension(&g);
            Ok(document(&json!({"per_vertex": per_vertex, "graph_value": graph_value}), EXIT_OK))
        }
        Command::PsiOps { graph, psi, f } => {
            let g = load_graph(graph)?;
            let psi = parse_psi(psi)?;
            let f = load_values(f)?;
            let laplacian = psi_laplacian(&g, &psi, &f)?;
            let gamma = gamma_psi(&g, &psi, &f)?;
            let omega = omega_psi(&g, &psi, &f)?;
            let gamma2 = gamma2_psi(&g, &psi, &f)?;
            Ok(document(
                &json!({
                    "psi": psi.name(),
                    "psi_laplacian": laplacian, "gamma_psi": gamma,
                    "omega_psi": omega, "gamma2_psi": gamma2,
                }),
                EXIT_OK,
            ))
        }
        Command::Heat { graph, f0, times } => {
            let g = load_graph(graph)?;
            let u = solve_heat(&g, &load_values(f0)?, &parse_times(times)?)?;
            Ok(document(&u, EXIT_OK))
        }
        Command::LiyauCheck(args) => {
            let g = load_graph(&args.graph)?;
            let psi = parse_psi(&args.psi)?;
            let times = parse_times(&args.times)?;
            let reports = initial_data(args, g.vertex_count(), global.seed)?
                .iter()
                .map(|f0| liyau_check(&g, &psi, f0, args.d, &times))
                .collect::<Result<Vec<_>>>()?;
            let holds = reports.iter().all(|r| r.holds);
            let worst = reports.iter().map(|r| r.worst).reduce(|a, b| if a.margin >= b.margin { a } else { b });
            Ok(document(&json!({"holds": holds, "worst": worst, "runs": reports}), status(holds)))
        }
        Command::SemigroupCheck(args) => {
            let g = load_graph(&args.graph)?;
            let psi = parse_psi(&args.psi)?;
            let times = parse_times(&args.times)?;
            let reports = initial_data(args, g.vertex_count(), global.seed)?
                .iter()
                .map(|f| semigroup_inequality_check(&g, &psi, f, &times, args.d))
                .collect::<Result<Vec<_>>>()?;
            let holds = reports.iter().all(|r| r.holds);
            let worst = reports.iter().map(|r| r.worst).reduce(|a, b| if a.margin <= b.margin { a } else { b });
            Ok(document(&json!({"holds": holds, "worst": worst, "runs": reports}), status(holds)))
        }
        Command::CdpsiCheck { graph, psi, d, budget } => {
            let g = load_graph(graph)?;
            let report = cdpsi_check(&g, &parse_psi(psi)?, *d, *budget, global.seed)?;
            Ok(document(&report, status(!report.violated())))
        }
        Command::RicciFlat { graph, budget } => {
            let g = load_graph(graph)?;
            let cert = is_ricci_flat(&g, *budget);
            let checks: Vec<_> = cert
                .per_vertex
                .iter()
                .filter_map(|o| o.maps())
                .map(|m| eta_permutation_check(&g, m, 10, global.seed))
                .collect();
            let ok = cert.ricci_flat && checks.iter().all(|c| c.holds);
            Ok(document(&json!({"certificate": cert, "permutation_checks": checks}), status(ok)))
        }
        Command::Cayley { orders, generators } => {
            let g = cayley_abelian(&parse_orders(orders)?, &parse_generators(generators)?)?;
            let text = if global.json { g.to_json() + "\n" } else { g.to_edge_list() };
            Ok(Outcome { text, status: EXIT_OK })
        }
        Command::HarnackCheck { graph, psi, d, f0, times, csv } => {
            let g = load_graph(graph)?;
            let psi = parse_psi(psi)?;
            let f0 = match f0 {
                Some(spec) => load_values(spec)?,
                None => random_positive(&mut ChaCha8Rng::seed_from_u64(global.seed), g.vertex_count()),
            };
            let u = solve_heat(&g, &f0, &parse_times(times)?)?;
            let coefficients = Coefficients::from_liyau(&psi, *d)?;
            let h = harnack_constant(&psi, global.tol)?
                .value()
                .ok_or_else(|| Error::InvalidPsi(format!("H_psi is infinite for {psi}")))?;
            let gradient = gradient_estimate_check(&g, &psi, &u, coefficients)?;
            let harnack = harnack_check(&g, &u, coefficients, h)?;
            if let Some(path) = csv {
                std::fs::write(path, harnack.slack_csv())
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            let ok = harnack.holds;
            Ok(document(
                &json!({
                    "gradient_estimate": gradient,
                    "harnack": {
                        "coefficients": harnack.coefficients, "h_psi": harnack.h_psi,
                        "pairs_checked": harnack.pairs_checked, "violations": harnack.violations,
                        "tightest": harnack.tightest, "holds": harnack.holds,
                    },
                }),
                status(ok),
            ))
        }
        Command::PaperSuite { c_log, ignore_runtime } => {
            let opts = SuiteOptions {
                seed: global.seed,
                c_log_override: *c_log,
                ignore_runtime: *ignore_runtime,
            };
            let report = paper_suite(&opts)?;
            let code = status(report.all_passed);
            if global.json {
                return Ok(document(&report, code));
            }
            let mut text: String = report.criteria.iter().map(|c| c.line() + "\n").collect();
            text += if report.all_passed { "all criteria passed\n" } else { "some criteria FAILED\n" };
            Ok(Outcome { text, status: code })
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Reports go to `stdout` or `--out`; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match execute(&cli.command, &cli.global) {
        Ok(outcome) => {
            let written = match &cli.global.out {
                Some(path) => std::fs::write(path, &outcome.text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(outcome.text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => outcome.status,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    EXIT_USAGE
                }
            }
        }
        Err(Error::DegenerateConstant(c)) => {
            let _ = writeln!(stderr, "error: {}", Error::DegenerateConstant(c));
            EXIT_VIOLATION
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}
