use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use noncolliding::io::{parse_weyl, write_matrix_path_csv, write_trajectory_csv};
use noncolliding::paths::{build_matrix_process, MatrixKind, TimeGrid};
use noncolliding::rng::StreamKey;
use noncolliding::sde::{integrate, SdeConfig, SdeModel, StartMode, Trajectory};
use noncolliding::linalg::WeylVector;
use noncolliding::Error;
use rayon::prelude::*;

use crate::settings::Settings;
use crate::{config_enum, CliError, OutPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Dyson's Brownian motion started at the origin.
    Dyson,
    /// Noncolliding Brownian motion on [0, T].
    Noncolliding,
    /// Hermitian matrix Brownian motion.
    Gue,
    /// Real symmetric matrix Brownian motion.
    Goe,
    /// Hermitian process that becomes real symmetric at time T.
    Xit,
}
config_enum!(Model);

impl Model {
    fn sde(self) -> Option<SdeModel> {
        match self {
            Model::Dyson => Some(SdeModel::Dyson),
            Model::Noncolliding => Some(SdeModel::Noncolliding),
            _ => None,
        }
    }

    fn matrix(self) -> Option<MatrixKind> {
        match self {
            Model::Gue => Some(MatrixKind::Gue),
            Model::Goe => Some(MatrixKind::Goe),
            Model::Xit => Some(MatrixKind::XiT),
            _ => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Number of particles (matrix dimension for matrix models).
    #[arg(long)]
    n: Option<usize>,
    /// Time horizon T; every run covers [0, T].
    #[arg(long)]
    horizon: Option<f64>,
    /// Uniform time steps on [0, T].
    #[arg(long)]
    steps: Option<usize>,
    /// Independent replicates. With more than one the output path is a
    /// directory receiving rep_00000.csv, rep_00001.csv, ...
    #[arg(long)]
    reps: Option<usize>,
    /// Ordered start point for the SDE models, e.g. `-1,0,1` (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long, value_name = "PATH")]
    out: Option<OutPath>,
}

struct RunOutcome {
    csv: Vec<u8>,
    halvings: u64,
    increment_sq: f64,
}

fn trajectory_outcome(traj: &Trajectory) -> std::io::Result<RunOutcome> {
    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, traj)?;
    let increment_sq = traj
        .states
        .windows(2)
        .map(|w| w[1].as_slice().iter().zip(w[0].as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum();
    Ok(RunOutcome { csv, halvings: traj.halvings, increment_sq })
}

fn rep_path(dir: &Path, r: usize) -> std::path::PathBuf {
    dir.join(format!("rep_{r:05}.csv"))
}

pub fn run(args: SimulateArgs, seed_flag: Option<u64>, mut s: Settings) -> Result<ExitCode, CliError> {
    let model: Model = s.required("model", args.model)?;
    let n: usize = s.value("n", args.n, 2)?;
    let horizon: f64 = s.value("horizon", args.horizon, 1.0)?;
    let steps: usize = s.value("steps", args.steps, 1024)?;
    let reps: usize = s.value("reps", args.reps, 1)?;
    let start: Option<String> = s.optional("start", args.start)?;
    let out: OutPath = s.required("out", args.out)?;
    let seed = s.seed(seed_flag)?;
    s.finish()?;

    if n == 0 || steps == 0 || reps == 0 {
        return Err(CliError::Usage("--n, --steps and --reps must be positive".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::Usage("--horizon must be a positive number".into()));
    }
    let start = match (&start, model.sde()) {
        (Some(_), None) => return Err(CliError::Usage(format!("--start applies only to the SDE models, not {model}"))),
        (Some(x), Some(_)) => {
            let x = parse_weyl(x)?;
            if x.len() != n {
                return Err(CliError::Usage(format!("--start has {} coordinates but --n is {n}", x.len())));
            }
            StartMode::Interior(WeylVector::strict(x.into_vec())?)
        }
        (None, _) => StartMode::Origin,
    };
    s.echo("simulate");
    eprintln!("seed: {seed}");

    let key = StreamKey::new(seed);
    let results: Vec<Result<RunOutcome, CliError>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<RunOutcome, CliError> {
            let rep_key = key.replicate(r as u64);
            if let Some(sde) = model.sde() {
                let mut cfg = SdeConfig::new(n, horizon).with_steps(steps);
                cfg.start = start.clone();
                let (mut times, mut states) = (Vec::new(), Vec::new());
                let halvings = integrate(sde, &cfg, horizon, rep_key, |_, t, x| {
                    times.push(t);
                    states.push(WeylVector::new(x.to_vec()).expect("integrator states are ordered"));
                })?;
                Ok(trajectory_outcome(&Trajectory { times, states, halvings })?)
            } else {
                let kind = model.matrix().expect("matrix model");
                let grid = Arc::new(TimeGrid::uniform(horizon, steps)?);
                let path = build_matrix_process(kind, n, &grid, rep_key)?;
                let mut csv = Vec::new();
                write_matrix_path_csv(&mut csv, &path)?;
                Ok(RunOutcome { csv, halvings: 0, increment_sq: 0.0 })
            }
        })
        .collect();

    let many = reps > 1;
    if many {
        std::fs::create_dir_all(&out.0)?;
    }
    let (mut written, mut halvings, mut increment_sq) = (0usize, 0u64, 0.0);
    let mut failed = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(o) => {
                let path = if many { rep_path(&out.0, r) } else { out.0.clone() };
                std::fs::write(&path, &o.csv)?;
                written += 1;
                halvings += o.halvings;
                increment_sq += o.increment_sq;
            }
            Err(CliError::Core(Error::ReplicateFailed { time, halvings })) => {
                eprintln!("replicate {r} failed at t={time} after {halvings} step halvings");
                failed.push(r);
            }
            Err(e) => return Err(e),
        }
    }
    println!(
        "summary: model {model}, n {n}, {written} replicate(s) written to {out}, {} failed, {halvings} step halvings, seed {seed}, config digest {}",
        failed.len(),
        s.digest()
    );
    if model.sde().is_some() && n == 1 && written > 0 {
        let ratio = increment_sq / (written as f64 * horizon);
        let tol = 3.0 * (2.0 / (written * steps) as f64).sqrt();
        let verdict = if (ratio - 1.0).abs() <= tol { "ok" } else { "SUSPECT" };
        println!("increment variance: sum of squared increments / elapsed time = {ratio:.5} (expected 1 within {tol:.5}): {verdict}");
    }
    Ok(if written == 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}
