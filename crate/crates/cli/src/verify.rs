use std::io::Write;
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use noncolliding::rng::StreamKey;
use noncolliding::verify::{
    agreement_suite, convolution_suite, default_functionals, densities_suite, hc_suite, imhof_check, kernels_suite,
    with_retry, AgreementConfig, AgreementReport, CheckReport, HcSuiteReport, ImhofReport, Outcome, Thresholds,
};
use serde_json::{json, Value};

use crate::settings::Settings;
use crate::{config_enum, CliError, OutPath};

pub const SCHEMA: &str = "ncbm-verify-report";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Harish-Chandra integral: Haar Monte Carlo against the closed form.
    Hc,
    /// Reweighted Dyson paths against the finite-horizon SDE.
    Imhof,
    /// Eigenvalues of the matrix process against the finite-horizon SDE.
    Theorem22,
    /// Survival probabilities and density identities.
    Densities,
    /// Gaussian convolution: Monte Carlo, quadrature and closed form.
    Convolution,
    /// Pfaffian, eigen-solver and Haar moment checks.
    Kernels,
}
config_enum!(Suite);

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Number of particles (hc, imhof, theorem22).
    #[arg(long)]
    n: Option<usize>,
    /// Time horizon T (imhof, theorem22).
    #[arg(long)]
    horizon: Option<f64>,
    /// Replicates or Monte Carlo samples.
    #[arg(long)]
    reps: Option<u64>,
    /// SDE steps on [0, T] (imhof, theorem22).
    #[arg(long)]
    steps: Option<usize>,
    /// Random chamber points for the density identities (densities).
    #[arg(long)]
    points: Option<usize>,
    /// KS significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Monte Carlo agreement window in standard errors.
    #[arg(long)]
    se_window: Option<f64>,
    /// JSON destination (default: standard output).
    #[arg(long, value_name = "PATH")]
    out: Option<OutPath>,
}

struct Uses {
    n: bool,
    horizon: bool,
    steps: bool,
    points: bool,
    reps: u64,
}

fn uses(suite: Suite) -> Uses {
    let (n, horizon, steps, points) = match suite {
        Suite::Hc => (true, false, false, false),
        Suite::Imhof | Suite::Theorem22 => (true, true, true, false),
        Suite::Densities => (false, false, false, true),
        Suite::Convolution | Suite::Kernels => (false, false, false, false),
    };
    let reps = match suite {
        Suite::Hc | Suite::Densities | Suite::Convolution => 100_000,
        Suite::Imhof | Suite::Theorem22 => 10_000,
        Suite::Kernels => 20_000,
    };
    Uses { n, horizon, steps, points, reps }
}

fn reject(flag: &str, suite: Suite, given: bool) -> Result<(), CliError> {
    if given {
        Err(CliError::Usage(format!("verify {suite} does not take --{flag}")))
    } else {
        Ok(())
    }
}

/// Names of the statistics that failed, with their values.
trait Failing {
    fn failing(&self) -> Vec<String>;
}

impl Failing for HcSuiteReport {
    fn failing(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !e.passed)
            .map(|e| format!("hc x={:?} y={:?} sigma={}: lhs {:.6e} ± {:.2e} vs rhs {:.6e} (z {:.2})", e.x, e.y, e.sigma, e.lhs.mean, e.lhs.se, e.rhs, e.z))
            .collect()
    }
}

impl Failing for ImhofReport {
    fn failing(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .functionals
            .iter()
            .filter(|f| !f.passed)
            .map(|f| format!("functional {}: joint z {:.2}", f.name, f.joint_z))
            .collect();
        if !self.green && out.is_empty() {
            out.push(format!("normalization E[C/h]: {:.6} ± {:.2e} (z {:.2})", self.normalization.mean, self.normalization.se, self.normalization_z));
        }
        out
    }
}

impl Failing for CheckReport {
    fn failing(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {:.6e} vs {:.6e}", c.name, c.value, c.reference)).collect()
    }
}

impl Failing for Outcome<AgreementReport> {
    fn failing(&self) -> Vec<String> {
        if self.green {
            return Vec::new();
        }
        let last = self.attempts.last().expect("at least one attempt");
        let mut out: Vec<String> =
            last.tests.iter().filter(|t| !t.passed).map(|t| format!("KS {} at t={}: p {:.4}", t.label, t.time, t.result.p_value)).collect();
        out.push(format!("{} KS failures, {} allowed", last.failures, last.allowed_failures));
        out
    }
}

fn package<R: serde::Serialize + Failing>(report: R, green: bool) -> Result<(Value, bool, Vec<String>), CliError> {
    let failing = report.failing();
    Ok((serde_json::to_value(&report)?, green, failing))
}

pub fn run(args: VerifyArgs, seed_flag: Option<u64>, mut st: Settings) -> Result<ExitCode, CliError> {
    let suite = args.suite;
    let u = uses(suite);
    reject("n", suite, !u.n && args.n.is_some())?;
    reject("horizon", suite, !u.horizon && args.horizon.is_some())?;
    reject("steps", suite, !u.steps && args.steps.is_some())?;
    reject("points", suite, !u.points && args.points.is_some())?;

    let n: usize = if u.n { st.value("n", args.n, 2)? } else { 0 };
    let horizon: f64 = if u.horizon { st.value("horizon", args.horizon, 1.0)? } else { 0.0 };
    let steps: usize = if u.steps { st.value("steps", args.steps, 1024)? } else { 0 };
    let points: usize = if u.points { st.value("points", args.points, 25)? } else { 0 };
    let reps: u64 = st.value("reps", args.reps, u.reps)?;
    let defaults = Thresholds::default();
    let th = Thresholds {
        alpha: st.value("alpha", args.alpha, defaults.alpha)?,
        se_window: st.value("se-window", args.se_window, defaults.se_window)?,
        failure_rate: defaults.failure_rate,
    };
    let out: Option<OutPath> = st.optional("out", args.out)?;
    let seed = st.seed(seed_flag)?;
    st.finish()?;
    if (u.n && n == 0) || (u.steps && steps == 0) || (u.points && points == 0) || reps == 0 {
        return Err(CliError::Usage("--n, --steps, --points and --reps must be positive".into()));
    }
    if u.horizon && !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::Usage("--horizon must be a positive number".into()));
    }
    st.echo(&format!("verify {suite}"));
    eprintln!("seed: {seed}");

    let key = StreamKey::new(seed);
    let (report, green, failing) = match suite {
        Suite::Hc => {
            let r = hc_suite(n, reps, &th, key)?;
            let g = r.green;
            package(r, g)?
        }
        Suite::Imhof => {
            let r = imhof_check(n, horizon, &[0.5 * horizon, horizon], &default_functionals(), reps, steps, &th, key)?;
            let g = r.green;
            package(r, g)?
        }
        Suite::Theorem22 => {
            let mut cfg = AgreementConfig::new(n, horizon, reps);
            cfg.steps = steps;
            cfg.thresholds = th;
            let r = with_retry(key, |k| agreement_suite(&cfg, k))?;
            let g = r.green;
            package(r, g)?
        }
        Suite::Densities => {
            let r = densities_suite(reps, points, &th, key)?;
            let g = r.green;
            package(r, g)?
        }
        Suite::Convolution => {
            let r = convolution_suite(reps, &th, key)?;
            let g = r.green;
            package(r, g)?
        }
        Suite::Kernels => {
            let r = kernels_suite(reps, &th, key)?;
            let g = r.green;
            package(r, g)?
        }
    };

    let doc = json!({
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "suite": suite.to_string(),
        "seed": seed,
        "config": st.to_json(),
        "config_digest": st.digest(),
        "green": green,
        "failing": failing,
        "report": report,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    match &out {
        Some(p) => std::fs::write(&p.0, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if green {
        eprintln!("verify {suite}: GREEN");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verify {suite}: RED");
        for f in &failing {
            eprintln!("  failing statistic: {f}");
        }
        Ok(ExitCode::FAILURE)
    }
}
