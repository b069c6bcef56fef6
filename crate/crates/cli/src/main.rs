//! `hermflow` command line: identity sweeps, flow runs from key-value
//! configs, and balanced data construction.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error,
//! 3 numerical halt.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hermflow::balanced::{build_psi, eta_root, round_trip_residual, seeded_potential, tau_residual};
use hermflow::flows::{evaluate_checks, run_with, HaltReason, RunSpec, CSV_HEADER};
use hermflow::geometry::HolVolForm;
use hermflow::identities::{catalogue, run_suite, SuiteOptions};
use hermflow::lattice::{Snapshot, TorusLattice};
use hermflow::Error;

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_HALT: u8 = 3;

#[derive(Parser)]
#[command(name = "hermflow", version, about = "Hermitian curvature identities and flows on flat tori")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity catalogue on seeded random jets; one JSON object per line.
    Identities {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// Override every entry's relative tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Run a single catalogue key.
        #[arg(long)]
        only: Option<String>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a flow described by a config file.
    Flow {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build conformally balanced data and write a snapshot.
    MakeBalanced {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 0.005)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Active axes, e.g. `x1,x2`.
        #[arg(long, default_value = "x1,x2")]
        reduction: String,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Halted { .. } | Error::NotPositive => EXIT_HALT,
            _ => EXIT_CONFIG,
        };
        Failure(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(EXIT_CONFIG, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Identities { dims, seeds, tol, only, out } => identities(dims, seeds, tol, only, out),
        Cmd::Flow { config, out } => flow(&config, &out),
        Cmd::MakeBalanced { m, n, eps, seed, reduction, out } => make_balanced(m, n, eps, seed, &reduction, &out),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("hermflow: {msg}");
            ExitCode::from(code)
        }
    }
}

fn identities(dims: Vec<usize>, seeds: u64, tol: Option<f64>, only: Option<String>, out: Option<PathBuf>) -> Result<u8, Failure> {
    if let Some(k) = &only {
        if !catalogue().iter().any(|e| e.key == k) {
            return Err(Failure(EXIT_CONFIG, format!("unknown catalogue key '{k}'")));
        }
    }
    if let Some(&m) = dims.iter().find(|&&m| !(1..=6).contains(&m)) {
        return Err(Error::Dimension(m).into());
    }
    let reports = run_suite(&SuiteOptions { dims, seeds, tol, only })?;
    let mut text = String::new();
    for r in &reports {
        text.push_str(&serde_json::to_string(r).expect("report serializes"));
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    eprintln!("{} checks, {failed} failed", reports.len());
    Ok(if failed == 0 { 0 } else { EXIT_CHECK })
}

/// Writes into `<out>.partial` and renames on success, so a directory at
/// `out` is always complete. An existing `out` is replaced only if it holds
/// a previous run's manifest.
fn flow(config: &Path, out: &Path) -> Result<u8, Failure> {
    let spec = RunSpec::load(config)?;
    let initial = spec.initial_metric()?;
    if out.exists() && !out.join("manifest.txt").exists() {
        return Err(Failure(EXIT_CONFIG, format!("{} exists and is not a previous run directory", out.display())));
    }
    let tmp = out.with_extension("partial");
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;

    Snapshot::new(initial.clone(), 0.0, "initial").save(&tmp.join("snap_000000.txt"))?;
    let every = spec.snapshot_every;
    let mut snap_err = None;
    let result = run_with(&spec.flow, &initial, |n, g| {
        if every > 0 && n % every == 0 && snap_err.is_none() {
            let s = Snapshot::new(g.clone(), n as f64 * spec.flow.dt, format!("step {n}"));
            snap_err = s.save(&tmp.join(format!("snap_{n:06}.txt"))).err();
        }
    });
    if let Some(e) = snap_err {
        return Err(e.into());
    }
    Snapshot::new(result.final_metric.clone(), result.steps_done as f64 * spec.flow.dt, "final").save(&tmp.join("final.txt"))?;

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &result.rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    fs::write(tmp.join("diagnostics.csv"), csv)?;

    let mut code = match result.halt {
        HaltReason::Completed => 0,
        HaltReason::CflViolated => EXIT_CONFIG,
        HaltReason::NaN | HaltReason::PositivityLost => EXIT_HALT,
    };
    let mut checks = String::new();
    if code == 0 {
        for c in evaluate_checks(&spec, &initial, &result)? {
            if !c.passed {
                code = EXIT_CHECK;
            }
            eprintln!("{} {} value {:e} tolerance {:e} ({})", c.check, if c.passed { "PASS" } else { "FAIL" }, c.value, c.tolerance, c.detail);
            checks.push_str(&serde_json::to_string(&c).expect("check serializes"));
            checks.push('\n');
        }
    }
    fs::write(tmp.join("checks.jsonl"), checks)?;
    let manifest = format!(
        "subcommand flow\nconfig {}\nout {}\nseed {}\nversion {}\nhalt {:?}\nsteps {}\n",
        config.display(),
        out.display(),
        spec.seed,
        env!("CARGO_PKG_VERSION"),
        result.halt,
        result.steps_done
    );
    fs::write(tmp.join("manifest.txt"), manifest)?;

    if out.exists() {
        fs::remove_dir_all(out)?;
    }
    fs::rename(&tmp, out)?;
    if result.halt != HaltReason::Completed {
        eprintln!("halted after {} steps: {:?}", result.steps_done, result.halt);
    }
    Ok(code)
}

fn make_balanced(m: usize, n: usize, eps: f64, seed: u64, reduction: &str, out: &Path) -> Result<u8, Failure> {
    if m == 2 {
        return Err(Failure(
            EXIT_CONFIG,
            "m = 2 is not supported: conformally balanced means conformally Kähler there, and recovering ω from η needs ‖Ω‖^{2/(m−2)}".into(),
        ));
    }
    if m < 2 {
        return Err(Error::Dimension(m).into());
    }
    let axes = TorusLattice::parse_reduction(m, reduction)?;
    let lat = TorusLattice::reduced(m, n, &axes)?;
    let omega = HolVolForm::unit();
    let psi = build_psi(&lat, eps, &seeded_potential(&lat, seed))?;
    let g = eta_root(&psi, &omega)?;
    eprintln!("closedness {:e}", psi.closedness_residual());
    eprintln!("round trip {:e}", round_trip_residual(&psi, &g, &omega));
    if let Ok(t) = tau_residual(&g, &omega) {
        eprintln!("tau {t:e}");
    }
    Snapshot::new(g, 0.0, format!("balanced m={m} n={n} eps={eps} seed={seed}")).save(out)?;
    Ok(0)
}
