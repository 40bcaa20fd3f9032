//! Experiment runner: invariant suites and the numerical experiments,
//! with machine-readable CSV output.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use osclab::oscillator::{self, KernelSpec, SweepGrid};
use osclab::poly::PolySpec;
use osclab::pv::{self, PVConfig};
use osclab::suite;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "osclab",
    about = "Numerical laboratory for singular oscillatory integral operators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonOpts {
    /// Dimension parameter of the group family.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// RNG seed; identical seeds give byte-identical outputs.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Tolerance override for the pass/fail verdict.
    #[arg(long)]
    tol: Option<f64>,
    /// Write results as CSV to this path (atomically).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every invariant suite and summarize pass counts.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Iterated principal values: the point-mass identity on random
    /// Gaussian mixtures.
    Fubini {
        #[command(flatten)]
        common: CommonOpts,
        /// Test-function family (only `gaussians` is built in).
        #[arg(long, default_value = "gaussians")]
        family: String,
        /// Number of random test functions.
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Compactly truncated distribution on a bi-invariant input versus
    /// its one-dimensional reduction.
    DrEval {
        #[command(flatten)]
        common: CommonOpts,
        /// Truncation radii (comma separated).
        #[arg(long = "R", value_delimiter = ',', default_value = "1")]
        r: Vec<f64>,
        /// Angular points of the bi-invariant averaging.
        #[arg(long, default_value_t = 12)]
        angles: usize,
    },
    /// Induced-representation suite: homomorphism, unimodularity,
    /// phase-polynomial identities and the explicit-kernel match.
    RepCheck {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Operator-norm trend over truncation radii; writes one CSV row per
    /// radius with schema `R,box,step,norm,iterations,residual`.
    NormSweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Oscillation coupling.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Phase polynomial, comma-separated coefficients, constant first.
        #[arg(long, value_delimiter = ',', default_value = "0,0,1")]
        poly: Vec<f64>,
        /// Truncation radii (comma separated).
        #[arg(long = "R", value_delimiter = ',', default_value = "10,100,1000")]
        r: Vec<f64>,
        /// Grid step for the second coordinate.
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Half-width of the second-coordinate truncation box.
        #[arg(long = "box", default_value_t = 8.0)]
        box_half: f64,
        /// Power-iteration starts (2 cross-validates the estimate).
        #[arg(long, default_value_t = 2)]
        starts: u32,
    },
    /// Dyadic decomposition: reconstruction identity, derivative
    /// formulas, cutoff ranges.
    DecompCheck {
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => std::process::exit(0),
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

/// Nine significant digits, locale-free.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn checks_csv(checks: &[(String, suite::Check)]) -> String {
    let mut out = String::from("suite,check,measured,threshold,pass\n");
    for (suite_name, c) in checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            suite_name,
            c.name,
            sig9(c.measured),
            sig9(c.threshold),
            c.passed
        );
    }
    out
}

fn report_checks(
    label: &str,
    checks: Vec<(String, suite::Check)>,
    out: Option<&Path>,
) -> Result<bool> {
    let mut pass = 0;
    let mut fail = 0;
    for (_, c) in &checks {
        if c.passed {
            pass += 1;
        } else {
            fail += 1;
            println!(
                "FAIL {}: measured {} exceeds {}",
                c.name,
                sig9(c.measured),
                sig9(c.threshold)
            );
        }
    }
    println!("{label}: {pass} passed, {fail} failed");
    if let Some(path) = out {
        write_atomic(path, &checks_csv(&checks))?;
        println!("wrote {}", path.display());
    }
    Ok(fail == 0)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify { common } => {
            let mut all = Vec::new();
            let mut summary = Vec::new();
            for (module, checks) in suite::all_suites(common.n.max(1), common.seed) {
                let pass = checks.iter().filter(|c| c.passed).count();
                summary.push(format!("{module}: {pass}/{} checks", checks.len()));
                for c in checks {
                    all.push((module.to_string(), c));
                }
            }
            for line in summary {
                println!("{line}");
            }
            report_checks("verify", all, common.out.as_deref())
        }
        Command::Fubini { common, family, count } => {
            if family != "gaussians" {
                bail!("unknown test-function family `{family}`");
            }
            let tol = common.tol.unwrap_or(1e-3 * std::f64::consts::PI.powi(2));
            let cfg = PVConfig::default();
            let mut body = String::from("index,defect,error_estimate\n");
            let mut worst: f64 = 0.0;
            for (i, psi) in pv::random_gaussian_mixtures(count, common.seed)
                .into_iter()
                .enumerate()
            {
                let d = pv::d_dist(&psi, &cfg)?;
                let dt = pv::d_tilde(&psi, &cfg)?;
                let target = (psi.eval)(0.0, 0.0) * std::f64::consts::PI.powi(2);
                let defect = (d.value + dt.value - target).norm();
                worst = worst.max(defect);
                let _ = writeln!(
                    body,
                    "{i},{},{}",
                    sig9(defect),
                    sig9(d.error_estimate + dt.error_estimate)
                );
            }
            println!("max point-mass defect over {count} inputs: {}", sig9(worst));
            if let Some(path) = common.out.as_deref() {
                write_atomic(path, &body)?;
                println!("wrote {}", path.display());
            }
            if worst > tol {
                println!(
                    "FAIL pv/point-mass-identity: {} exceeds {}",
                    sig9(worst),
                    sig9(tol)
                );
                return Ok(false);
            }
            Ok(true)
        }
        Command::DrEval { common, r, angles } => {
            let tol = common.tol.unwrap_or(5e-2);
            let mut ok = true;
            let mut body = String::from("n,R,rel_diff\n");
            for &radius in &r {
                let check = suite::dr_reduction_check(common.n, radius, angles);
                let pass = check.measured <= tol;
                ok &= pass;
                println!(
                    "n={} R={}: relative gap {} (tolerance {})",
                    common.n,
                    radius,
                    sig9(check.measured),
                    sig9(tol)
                );
                let _ = writeln!(body, "{},{},{}", common.n, sig9(radius), sig9(check.measured));
                if !pass {
                    println!("FAIL {}", check.name);
                }
            }
            if let Some(path) = common.out.as_deref() {
                write_atomic(path, &body)?;
                println!("wrote {}", path.display());
            }
            Ok(ok)
        }
        Command::RepCheck { common } => {
            let checks: Vec<(String, suite::Check)> = suite::rep_suite(common.seed)
                .into_iter()
                .map(|c| ("rep".to_string(), c))
                .collect();
            report_checks("rep-check", checks, common.out.as_deref())
        }
        Command::NormSweep { common, gamma, poly, r, step, box_half, starts } => {
            let p = PolySpec::new(&poly);
            let template = KernelSpec::new(
                common.n,
                gamma,
                p,
                *r.first().context("at least one radius required")?,
                gamma.abs().max(1.0),
            )?;
            let grid = SweepGrid { x2_half: box_half, h2: step, ..Default::default() };
            let tol = common.tol.unwrap_or(1e-3);
            let rows = oscillator::norm_sweep(&template, &r, &grid, tol, starts)?;
            let mut body = String::from("R,box,step,norm,iterations,residual\n");
            for row in &rows {
                let line = format!(
                    "{},{},{},{},{},{}",
                    sig9(row.r),
                    sig9(row.box_half),
                    sig9(row.step),
                    sig9(row.norm),
                    row.iterations,
                    sig9(row.residual)
                );
                println!("{line}");
                let _ = writeln!(body, "{line}");
            }
            if let Some(path) = common.out.as_deref() {
                write_atomic(path, &body)?;
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::DecompCheck { common } => {
            let checks: Vec<(String, suite::Check)> = suite::decomp_suite(common.seed)
                .into_iter()
                .map(|c| ("decomp".to_string(), c))
                .collect();
            report_checks("decomp-check", checks, common.out.as_deref())
        }
    }
}
