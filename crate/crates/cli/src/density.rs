use std::io::Write;
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use noncolliding::densities::{eigen_density, f_n, g_n_t, p_n, survival_pfaffian, Ensemble};
use noncolliding::io::{format_number, parse_weyl};
use noncolliding::linalg::WeylVector;

use crate::settings::Settings;
use crate::{config_enum, CliError, OutPath, PointList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Name {
    /// Absorbed transition density f_N(t, x, y).
    F,
    /// Probability N_N(t, x) of no collision up to t.
    Survival,
    /// Dyson transition density p_N(s, x, t, y).
    P,
    /// Finite-horizon transition density g_N^T(s, x, t, y).
    G,
    /// GUE(t) eigenvalue density at x.
    Gue,
    /// GOE(t) eigenvalue density at x.
    Goe,
}
config_enum!(Name);

impl Name {
    fn takes_y(self) -> bool {
        matches!(self, Name::F | Name::P | Name::G)
    }

    fn takes_s(self) -> bool {
        matches!(self, Name::P | Name::G)
    }
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, value_enum)]
    name: Option<Name>,
    /// Number of particles; inferred from the points when omitted.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    /// Start time for p and g (default 0).
    #[arg(long)]
    s: Option<f64>,
    /// Horizon T for g.
    #[arg(long)]
    horizon: Option<f64>,
    /// Point `x1,..,xN`; repeat the flag for several points.
    #[arg(long, allow_hyphen_values = true)]
    x: Vec<String>,
    /// End point for f, p and g; every x is paired with every y.
    #[arg(long, allow_hyphen_values = true)]
    y: Vec<String>,
    /// CSV destination (default: standard output).
    #[arg(long, value_name = "PATH")]
    out: Option<OutPath>,
}

fn points(list: &PointList, n: Option<usize>) -> Result<Vec<WeylVector>, CliError> {
    let pts: Vec<WeylVector> = list.0.iter().map(|p| parse_weyl(p)).collect::<Result<_, _>>()?;
    let dim = n.unwrap_or(pts[0].len());
    if let Some(bad) = pts.iter().find(|p| p.len() != dim) {
        return Err(CliError::Usage(format!("point has {} coordinates, expected {dim}", bad.len())));
    }
    Ok(pts)
}

fn evaluate(name: Name, t: f64, s: f64, horizon: Option<f64>, x: &WeylVector, y: Option<&WeylVector>) -> Result<f64, CliError> {
    let v = match (name, y) {
        (Name::F, Some(y)) => f_n(t, x, y)?.value,
        (Name::P, Some(y)) => p_n(s, x, t, y)?.value,
        (Name::G, Some(y)) => g_n_t(horizon.expect("checked"), s, x, t, y)?.value,
        (Name::Survival, None) => survival_pfaffian(t, x)?,
        (Name::Gue, None) => eigen_density(Ensemble::Gue, x, t)?.value,
        (Name::Goe, None) => eigen_density(Ensemble::Goe, x, t)?.value,
        _ => unreachable!("argument combinations are validated"),
    };
    Ok(v)
}

pub fn run(args: DensityArgs, mut st: Settings) -> Result<ExitCode, CliError> {
    let name: Name = st.required("name", args.name)?;
    let n: Option<usize> = st.optional("n", args.n)?;
    let t: f64 = st.required("t", args.t)?;
    let x: PointList = st.required("x", PointList::from_flags(args.x))?;
    let y: Option<PointList> = st.optional("y", PointList::from_flags(args.y))?;
    let s: Option<f64> = st.optional("s", args.s)?;
    let horizon: Option<f64> = st.optional("horizon", args.horizon)?;
    let out: Option<OutPath> = st.optional("out", args.out)?;
    st.finish()?;

    if name.takes_y() != y.is_some() {
        let need = if name.takes_y() { "requires" } else { "does not take" };
        return Err(CliError::Usage(format!("density {name} {need} --y")));
    }
    if s.is_some() && !name.takes_s() {
        return Err(CliError::Usage(format!("density {name} does not take --s")));
    }
    match (name, horizon) {
        (Name::G, None) => return Err(CliError::Usage("density g requires --horizon".into())),
        (Name::G, Some(_)) | (_, None) => {}
        (_, Some(_)) => return Err(CliError::Usage(format!("density {name} does not take --horizon"))),
    }
    let xs = points(&x, n)?;
    let n = xs[0].len();
    let ys = y.as_ref().map(|y| points(y, Some(n))).transpose()?;
    st.echo("density");

    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    if ys.is_some() {
        header.extend((1..=n).map(|i| format!("y{i}")));
    }
    header.push("value".into());
    let mut csv = header.join(",") + "\n";
    let s = s.unwrap_or(0.0);
    for xp in &xs {
        let pairs: Vec<Option<&WeylVector>> = match &ys {
            Some(ys) => ys.iter().map(Some).collect(),
            None => vec![None],
        };
        for yp in pairs {
            let value = evaluate(name, t, s, horizon, xp, yp)?;
            let mut row: Vec<String> = xp.as_slice().iter().map(|v| format_number(*v)).collect();
            if let Some(yp) = yp {
                row.extend(yp.as_slice().iter().map(|v| format_number(*v)));
            }
            row.push(format_number(value));
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
    }
    match out {
        Some(p) => std::fs::write(&p.0, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}
