use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curvlab::manifolds::ManifoldSpec;
use curvlab::report::{write_table, write_text, Format, Report};
use curvlab::scenario::{
    curvature_table, eigen_table, hypersurface_table, run_scenario, CheckEntry, CheckSpec,
    RunOptions, Scenario,
};
use curvlab::spectral::TheoremMode;
use curvlab::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "curvlab", version, about = "Curvature inequality verification toolkit")]
struct Cli {
    /// Scenario JSON document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the scenario sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Overrides every check tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the manifold catalog.
    Catalog,
    /// Per-sample curvature table of the scenario manifold.
    Curvature,
    /// Run every check of the scenario.
    Verify,
    /// Jacobi stability of the scenario hypersurface and the principal
    /// eigenpair of the conformal operator.
    Stability,
    /// Dichotomy for `s ≥ |T|` and a stable minimal hypersurface.
    Theorem1,
    /// Dichotomy for `s ≥ c|W|` and a stable totally geodesic hypersurface.
    Theorem2,
    /// Branch classifier for a four-manifold with `s ≥ 2√6|W|`.
    Corollary1,
    /// Run every check and write all outputs named in the scenario.
    Report,
}

fn load(cli: &Cli) -> Result<Scenario> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Configuration("--config PATH is required".into()))?;
    let mut s = Scenario::load(path)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(n) = cli.samples {
        s.samples = n;
    }
    Ok(s)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table_text(header: &[String], rows: &[Vec<f64>], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(r.iter().map(|v| v.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Configuration(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        Format::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| header.iter().cloned().zip(r.iter().map(|v| serde_json::json!(v))).collect())
                .collect();
            Ok(serde_json::to_string_pretty(&objs)? + "\n")
        }
    }
}

/// Ensures the scenario has at least one check of `kind`.
fn ensure_check(s: &mut Scenario, kind: &str, make: impl FnOnce() -> CheckSpec) {
    if !s.checks.iter().any(|c| c.spec.kind() == kind) {
        s.checks.push(CheckEntry::new(make()));
    }
}

fn summarize(report: &Report) {
    for c in &report.checks {
        let v = c.max_violation.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        eprintln!("{:<28} {:<8} max_violation={v} tol={:.1e}", c.name, c.status.as_str(), c.tolerance);
    }
}

fn run_subset(cli: &Cli, s: &Scenario, kinds: &[&str]) -> Result<i32> {
    let opts = RunOptions {
        tolerance: cli.tol,
        only: Some(kinds.iter().map(|k| k.to_string()).collect()),
    };
    let report = run_scenario(s, &opts)?;
    summarize(&report);
    emit(cli.out.as_deref(), &report.render(cli.format)?)?;
    Ok(report.exit_code())
}

fn default_tol(cli: &Cli, fallback: f64) -> f64 {
    cli.tol.unwrap_or(fallback)
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Catalog => {
            let cat = ManifoldSpec::catalog();
            let text = match cli.format {
                Format::Json => serde_json::to_string_pretty(&cat)? + "\n",
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["kind", "description", "example"])?;
                    for e in &cat {
                        w.write_record([e.kind.clone(), e.description.clone(), serde_json::to_string(&e.example)?])?;
                    }
                    let bytes = w.into_inner().map_err(|e| Error::Configuration(e.to_string()))?;
                    String::from_utf8(bytes).expect("csv output is UTF-8")
                }
            };
            emit(cli.out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Curvature => {
            let s = load(cli)?;
            let (header, rows) = curvature_table(&s)?;
            emit(cli.out.as_deref(), &table_text(&header, &rows, cli.format)?)?;
            Ok(0)
        }
        Command::Verify => {
            let s = load(cli)?;
            let report = run_scenario(&s, &RunOptions { tolerance: cli.tol, only: None })?;
            summarize(&report);
            emit(cli.out.as_deref(), &report.render(cli.format)?)?;
            Ok(report.exit_code())
        }
        Command::Stability => {
            let mut s = load(cli)?;
            let tol = default_tol(cli, 1e-8);
            ensure_check(&mut s, "jacobi_stability", || CheckSpec::JacobiStability { tolerance: tol });
            if let Some(p) = &s.outputs.eigen_csv {
                let mode = if s.weighted_function.needs_curvature() {
                    TheoremMode::Theorem2
                } else {
                    TheoremMode::Theorem1
                };
                let (header, rows, mu) = eigen_table(&s, mode)?;
                write_table(p, &header, &rows)?;
                eprintln!("principal eigenvalue mu = {mu:.6e} written with eigenfunction to {}", p.display());
            }
            run_subset(cli, &s, &["jacobi_stability"])
        }
        Command::Theorem1 => {
            let mut s = load(cli)?;
            let tol = default_tol(cli, 1e-8);
            ensure_check(&mut s, "theorem1", || CheckSpec::Theorem1 { tolerance: tol, sigma_injection: None });
            run_subset(cli, &s, &["theorem1"])
        }
        Command::Theorem2 => {
            let mut s = load(cli)?;
            let tol = default_tol(cli, 1e-8);
            ensure_check(&mut s, "theorem2", || CheckSpec::Theorem2 { tolerance: tol, sigma_injection: None });
            run_subset(cli, &s, &["theorem2"])
        }
        Command::Corollary1 => {
            let mut s = load(cli)?;
            let tol = default_tol(cli, 1e-5);
            ensure_check(&mut s, "corollary1", || CheckSpec::Corollary1 {
                tolerance: tol,
                orientation: Default::default(),
                b2: None,
            });
            run_subset(cli, &s, &["corollary1"])
        }
        Command::Report => {
            let s = load(cli)?;
            let report = run_scenario(&s, &RunOptions { tolerance: cli.tol, only: None })?;
            summarize(&report);
            let o = &s.outputs;
            if let Some(p) = &o.report {
                report.emit(p, Format::Json)?;
            }
            if let Some(p) = &o.csv {
                report.emit(p, Format::Csv)?;
            }
            if let Some(p) = &o.samples_csv {
                let (h, r) = curvature_table(&s)?;
                write_table(p, &h, &r)?;
            }
            if let Some(p) = &o.hypersurface_csv {
                let (h, r) = hypersurface_table(&s)?;
                write_table(p, &h, &r)?;
            }
            if let Some(p) = &o.eigen_csv {
                let mode = if s.weighted_function.needs_curvature() {
                    TheoremMode::Theorem2
                } else {
                    TheoremMode::Theorem1
                };
                let (h, r, _) = eigen_table(&s, mode)?;
                write_table(p, &h, &r)?;
            }
            if cli.out.is_some() || (o.report.is_none() && o.csv.is_none()) {
                emit(cli.out.as_deref(), &report.render(cli.format)?)?;
            }
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
