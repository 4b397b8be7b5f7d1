//! Text formats: flat key=value configs, vectors, Hermitian matrices and
//! trajectory CSV.
//!
//! CSV numbers are written with 17 significant digits and LF line endings.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, WeylVector, C64};
use crate::paths::MatrixPath;
use crate::sde::Trajectory;

/// Parsed `key = value` lines; `#` starts a comment.
pub type ConfigMap = BTreeMap<String, String>;

pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') {
            return Err(Error::Parse(format!("line {}: invalid key {key:?}", lineno + 1)));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key {key:?}", lineno + 1)));
        }
    }
    Ok(map)
}

fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    let v: f64 = t.parse().map_err(|_| Error::Parse(format!("not a number: {t:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("not a finite number: {t:?}")));
    }
    Ok(v)
}

/// Comma-separated finite reals, e.g. `0,1.5,-2e-3`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Err(Error::Parse("empty vector".into()));
    }
    s.split(',').map(parse_real).collect()
}

/// A vector that must already be in non-decreasing order.
pub fn parse_weyl(s: &str) -> Result<WeylVector> {
    WeylVector::new(parse_vector(s)?)
}

/// `a`, `bi`, `a+bi`, `a-bi` (a trailing `j` is accepted for `i`).
pub fn parse_complex(s: &str) -> Result<C64> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty complex entry".into()));
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return Ok(C64::new(parse_real(t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |v: &str| -> Result<f64> {
        match v {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => parse_real(v),
        }
    };
    match split {
        Some(k) => Ok(C64::new(parse_real(&body[..k])?, imag(&body[k..])?)),
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

/// Rows separated by `;`, entries by `,`: `1,0.5+0.2i;0.5-0.2i,2`.
pub fn parse_hermitian(s: &str) -> Result<HermitianMatrix> {
    let rows: Vec<Vec<C64>> = s
        .split(';')
        .map(|row| row.split(',').map(parse_complex).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::NotSquare { rows: n, cols: bad.len() });
    }
    HermitianMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv(out: &mut impl Write, traj: &Trajectory) -> std::io::Result<()> {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut header = String::from("time");
    for i in 1..=n {
        header.push_str(&format!(",x{i}"));
    }
    writeln!(out, "{header}")?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let mut line = format_number(*t);
        for v in x.as_slice() {
            line.push(',');
            line.push_str(&format_number(*v));
        }
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Columns `time`, then entries (i, j) row-major as `re_ij,im_ij`.
pub fn write_matrix_path_csv(out: &mut impl Write, path: &MatrixPath) -> std::io::Result<()> {
    let n = path.dim();
    let mut header = String::from("time");
    for i in 1..=n {
        for j in 1..=n {
            header.push_str(&format!(",re_{i}_{j},im_{i}_{j}"));
        }
    }
    writeln!(out, "{header}")?;
    for (t, h) in path.grid.times().iter().zip(&path.values) {
        let mut line = format_number(*t);
        let e = h.entries();
        for i in 0..n {
            for j in 0..n {
                line.push(',');
                line.push_str(&format_number(e[(i, j)].re));
                line.push(',');
                line.push_str(&format_number(e[(i, j)].im));
            }
        }
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// A numeric CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_csv_table(text: &str) -> Result<CsvTable> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse("missing header".into()))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect();
    if header.iter().any(|h| h.is_empty()) {
        return Err(Error::Parse("empty column name".into()));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_vector(line).map_err(|e| Error::Parse(format!("row {}: {e}", k + 1)))?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} fields, header has {}", k + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// Reads a trajectory CSV back; times must be increasing and states ordered.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory> {
    let table = parse_csv_table(text)?;
    if table.header.first().map(String::as_str) != Some("time") {
        return Err(Error::Parse("first column must be time".into()));
    }
    let mut times = Vec::with_capacity(table.rows.len());
    let mut states = Vec::with_capacity(table.rows.len());
    for row in table.rows {
        if let Some(&prev) = times.last() {
            if !(row[0] > prev) {
                return Err(Error::Parse("times are not increasing".into()));
            }
        }
        times.push(row[0]);
        states.push(WeylVector::new(row[1..].to_vec())?);
    }
    Ok(Trajectory { times, states, halvings: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{build_matrix_process, MatrixKind, TimeGrid};
    use crate::rng::StreamKey;
    use crate::sde::{simulate_dyson, SdeConfig};
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn config_lines() {
        let c = parse_config("# run\nn = 2\nhorizon=1.5 # comment\n\nseed = 7\n").unwrap();
        assert_eq!(c["n"], "2");
        assert_eq!(c["horizon"], "1.5");
        assert_eq!(c.len(), 3);
        assert!(parse_config("n 2").is_err());
        assert!(parse_config("n = 1\nn = 2").is_err());
        assert!(parse_config("bad key = 1").is_err());
    }

    #[test]
    fn vectors_and_complex() {
        assert_eq!(parse_vector(" 0, 2 ,-1e-3").unwrap(), vec![0.0, 2.0, -1e-3]);
        assert!(parse_vector("").is_err());
        assert!(parse_vector("1,,2").is_err());
        assert!(parse_vector("nan").is_err());
        assert!(parse_weyl("2,1").is_err());
        assert_eq!(parse_complex("1.5-2i").unwrap(), C64::new(1.5, -2.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("3j").unwrap(), C64::new(0.0, 3.0));
        assert_eq!(parse_complex("1e-3+2e+1i").unwrap(), C64::new(1e-3, 20.0));
        assert_eq!(parse_complex("-4").unwrap(), C64::new(-4.0, 0.0));
        assert!(parse_complex("1+2").is_err());
    }

    #[test]
    fn hermitian_text() {
        let h = parse_hermitian("1, 0.5+0.2i; 0.5-0.2i, 2").unwrap();
        assert_eq!(h.entries()[(0, 1)], C64::new(0.5, 0.2));
        assert!(parse_hermitian("1,2;3,4").is_err());
        assert!(parse_hermitian("1,2;3").is_err());
        assert!(parse_hermitian("1i").is_err());
    }

    #[test]
    fn trajectory_round_trip() {
        let cfg = SdeConfig::new(3, 1.0).with_steps(16);
        let traj = simulate_dyson(&cfg, 1.0, StreamKey::new(3)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time,x1,x2,x3\n"));
        assert!(!text.contains('\r'));
        let back = parse_trajectory_csv(&text).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.states, traj.states);
    }

    #[test]
    fn matrix_csv_columns() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 4).unwrap());
        let mp = build_matrix_process(MatrixKind::XiT, 2, &grid, StreamKey::new(5)).unwrap();
        let mut buf = Vec::new();
        write_matrix_path_csv(&mut buf, &mp).unwrap();
        let table = parse_csv_table(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(table.header.len(), 9);
        assert_eq!(table.header[3], "re_1_2");
        let last = table.rows.last().unwrap();
        assert_eq!(last[0], 1.0);
        for k in (2..9).step_by(2) {
            assert_eq!(last[k], 0.0);
        }
    }

    proptest! {
        #[test]
        fn numbers_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = format_number(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }

        #[test]
        fn parsers_never_panic(s in ".{0,64}") {
            let _ = parse_config(&s);
            let _ = parse_vector(&s);
            let _ = parse_hermitian(&s);
            let _ = parse_trajectory_csv(&s);
        }
    }
}
