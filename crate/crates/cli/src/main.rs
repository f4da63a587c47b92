//! Command-line driver for the verification suites.
//!
//! `verify list` prints the registered scenario catalog; `verify run`
//! executes a selection of scenarios against seeded sample draws and writes
//! a report in which every numerical check carries its residual statistics
//! and a verdict.  A run *succeeds* (exit 0) when every check lands on the
//! verdict its scenario expects — scenarios with deliberate negative
//! controls expect `Fail` on those checks, so an all-`Pass` report would
//! itself be a mismatch.
//!
//! Reports are reproducible: the same configuration yields byte-identical
//! JSON, so diffs against a checked-in report are meaningful.  Nothing
//! time- or host-dependent is recorded.
//!
//! Exit codes: `0` — every check matched its expectation; `1` — at least
//! one mismatch; `2` — usage or configuration error (unknown scenario,
//! malformed parameter, out-of-range sampling bounds).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use redmap_core::suites::{self, ScenarioParams, ScenarioReport, SuiteConfig};

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "verify",
    version,
    about = "Run numerical verification suites for moment-map reduction identities",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the registered scenarios with their one-line descriptions.
    List,
    /// Run scenarios and report per-check residuals and verdicts.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario id to run (repeatable); `all` or no flag runs every scenario.
    #[arg(long = "scenario", value_name = "ID")]
    scenarios: Vec<String>,

    /// Scenario parameter: `l=<positive integer>` picks the orbit degree,
    /// `alpha=<expr>` the winding slope.  Slopes must be irrational, given
    /// as `sqrt(<non-square k>)`, `golden`, `pi`, or `pi/<n>`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,

    /// Base seed for all sample draws (falls back to $VERIFY_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,

    /// Points drawn per check (minimum 10).
    #[arg(long)]
    samples: Option<usize>,

    /// Tangent tuples drawn per sampled point.
    #[arg(long)]
    tuples: Option<usize>,

    /// Plots (and gauge pairs) drawn per catalog.
    #[arg(long)]
    plots: Option<usize>,

    /// Finite-difference step for numerical derivatives.
    #[arg(long, value_name = "H")]
    fd_step: Option<f64>,

    /// Scaled residuals below this threshold pass.
    #[arg(long, value_name = "TOL")]
    pass_tol: Option<f64>,

    /// Scaled residuals above this threshold fail (between: approx).
    #[arg(long, value_name = "TOL")]
    fail_tol: Option<f64>,

    /// Write the report to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,

    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

impl Format {
    fn label(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Text => "text",
        }
    }
}

// ---------------------------------------------------------------------------
// Report document
// ---------------------------------------------------------------------------

/// Schema identifier for the JSON report; bump on breaking layout changes.
/// The full schema lives at `docs/report-schema.json`.
const SCHEMA: &str = "redmap-report/1";

#[derive(Serialize)]
struct ReportDocument {
    schema: &'static str,
    tool: ToolInfo,
    config: ConfigEcho,
    scenarios: Vec<ScenarioReport>,
    overall: &'static str,
}

#[derive(Serialize)]
struct ToolInfo {
    name: &'static str,
    version: &'static str,
}

/// The fully resolved configuration the run actually used, echoed so a
/// report is self-describing and reruns are exact.
#[derive(Serialize)]
struct ConfigEcho {
    scenarios: Vec<String>,
    seed: u64,
    samples: usize,
    tuples: usize,
    plots: usize,
    fd_step: f64,
    pass_tolerance: f64,
    fail_tolerance: f64,
    ell: Option<usize>,
    alpha: Option<String>,
    format: &'static str,
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap exits 0 for --help/--version and 2 for usage errors.
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let outcome = match cli.command {
        Command::List => list(),
        Command::Run(args) => run(&args),
    };

    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn list() -> Result<ExitCode, String> {
    for scenario in suites::scenarios() {
        println!("{:26} {}", scenario.id, scenario.doc);
    }
    Ok(ExitCode::SUCCESS)
}

fn run(args: &RunArgs) -> Result<ExitCode, String> {
    let ids = resolve_scenarios(&args.scenarios)?;
    let (params, alpha_echo) = parse_params(&args.params)?;
    let config = build_config(args)?;

    let mut scenarios = Vec::with_capacity(ids.len());
    for id in &ids {
        let report = suites::run_scenario(id, &params, &config)
            .map_err(|err| format!("scenario `{id}`: {err}"))?;
        scenarios.push(report);
    }

    let matched = scenarios.iter().all(|s| s.matched);
    let document = ReportDocument {
        schema: SCHEMA,
        tool: ToolInfo {
            name: "verify",
            version: env!("CARGO_PKG_VERSION"),
        },
        config: ConfigEcho {
            scenarios: ids,
            seed: config.seed,
            samples: config.samples,
            tuples: config.tuples,
            plots: config.plots,
            fd_step: config.fd_step,
            pass_tolerance: config.thresholds.pass,
            fail_tolerance: config.thresholds.fail,
            ell: params.ell,
            alpha: alpha_echo,
            format: args.format.label(),
        },
        scenarios,
        overall: if matched { "PASS" } else { "FAIL" },
    };

    let rendered = match args.format {
        Format::Json => {
            let mut body = serde_json::to_string_pretty(&document)
                .map_err(|err| format!("report serialization: {err}"))?;
            body.push('\n');
            body
        }
        Format::Text => render_text(&document),
    };

    match &args.report {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|err| format!("writing {}: {err}", path.display()))?,
        None => print!("{rendered}"),
    }

    Ok(if matched {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

// ---------------------------------------------------------------------------
// Configuration resolution
// ---------------------------------------------------------------------------

fn resolve_scenarios(requested: &[String]) -> Result<Vec<String>, String> {
    let all = || {
        suites::scenarios()
            .iter()
            .map(|s| s.id.to_string())
            .collect::<Vec<_>>()
    };
    if requested.is_empty() || requested.iter().any(|id| id == "all") {
        return Ok(all());
    }
    let mut ids = Vec::with_capacity(requested.len());
    for id in requested {
        if suites::scenario_doc(id).is_none() {
            return Err(format!(
                "unknown scenario `{id}`; `verify list` prints the catalog"
            ));
        }
        if !ids.contains(id) {
            ids.push(id.clone());
        }
    }
    Ok(ids)
}

fn build_config(args: &RunArgs) -> Result<SuiteConfig, String> {
    let mut config = SuiteConfig::new(resolve_seed(args.seed)?);
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(tuples) = args.tuples {
        config.tuples = tuples;
    }
    if let Some(plots) = args.plots {
        config.plots = plots;
    }
    if let Some(fd_step) = args.fd_step {
        config.fd_step = fd_step;
    }
    if let Some(pass) = args.pass_tol {
        config.thresholds.pass = pass;
    }
    if let Some(fail) = args.fail_tol {
        config.thresholds.fail = fail;
    }
    config.validate().map_err(|err| err.to_string())?;
    Ok(config)
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, String> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("VERIFY_SEED") {
        Ok(value) => value
            .trim()
            .parse()
            .map_err(|_| format!("VERIFY_SEED must be an unsigned integer, got `{value}`")),
        Err(std::env::VarError::NotPresent) => Ok(suites::DEFAULT_SEED),
        Err(err) => Err(format!("VERIFY_SEED is unreadable: {err}")),
    }
}

fn parse_params(raw: &[String]) -> Result<(ScenarioParams, Option<String>), String> {
    let mut params = ScenarioParams::default();
    let mut alpha_echo = None;
    for entry in raw {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| format!("parameter `{entry}` is not of the form KEY=VALUE"))?;
        match key.trim() {
            "l" | "ell" => {
                let degree: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| format!("`{}` is not a positive integer degree", value.trim()))?;
                if degree == 0 {
                    return Err("the degree parameter starts at 1".into());
                }
                params.ell = Some(degree);
            }
            "alpha" => {
                params.alpha = Some(parse_alpha(value)?);
                alpha_echo = Some(value.trim().to_string());
            }
            other => {
                return Err(format!(
                    "unknown parameter `{other}`; supported keys are `l` and `alpha`"
                ));
            }
        }
    }
    Ok((params, alpha_echo))
}

/// Winding slopes must be irrational or the subgroup closes up and the
/// dense-orbit scenario silently changes meaning, so the slope is accepted
/// only as a symbolic expression with a guaranteed-irrational value —
/// never as a bare numeric literal.
fn parse_alpha(expr: &str) -> Result<f64, String> {
    let reject = || {
        format!(
            "slope `{}` rejected: a rational slope closes the winding; \
             use sqrt(<non-square k>), golden, pi, or pi/<n>",
            expr.trim()
        )
    };
    let s = expr.trim();
    if s.eq_ignore_ascii_case("golden") {
        return Ok((1.0 + 5.0_f64.sqrt()) / 2.0);
    }
    if s == "pi" {
        return Ok(std::f64::consts::PI);
    }
    if let Some(denominator) = s.strip_prefix("pi/") {
        let d: u64 = denominator.trim().parse().map_err(|_| reject())?;
        if d == 0 {
            return Err(reject());
        }
        return Ok(std::f64::consts::PI / d as f64);
    }
    if let Some(radicand) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let k: u64 = radicand.trim().parse().map_err(|_| reject())?;
        let root = k.isqrt();
        if root * root == k {
            return Err(format!(
                "sqrt({k}) is the integer {root}; the slope must be irrational"
            ));
        }
        return Ok((k as f64).sqrt());
    }
    Err(reject())
}

// ---------------------------------------------------------------------------
// Text rendering
// ---------------------------------------------------------------------------

/// The text format is a projection of the same document the JSON format
/// serializes — there is no second data path.
fn render_text(document: &ReportDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} ({})",
        document.tool.name, document.tool.version, document.schema
    );
    let config = &document.config;
    let _ = writeln!(
        out,
        "seed {}  samples {}  tuples {}  plots {}  fd step {:e}  pass<{:e}  fail>{:e}",
        config.seed,
        config.samples,
        config.tuples,
        config.plots,
        config.fd_step,
        config.pass_tolerance,
        config.fail_tolerance,
    );
    for scenario in &document.scenarios {
        let _ = writeln!(out);
        let _ = writeln!(out, "scenario {}: {}", scenario.scenario, scenario.doc);
        for check in &scenario.checks {
            let mark = if check.matched { "ok" } else { "!!" };
            let _ = writeln!(
                out,
                "  {mark} {}  [expected {}]",
                check.report.summary_line(),
                check.expected
            );
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "overall: {}", document.overall);
    out
}

// ---------------------------------------------------------------------------
