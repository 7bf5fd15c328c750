//! CSV output of a [`RunMetrics`].

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::runner::RunMetrics;

pub const RMSE_POSITION: &str = "rmse_position.csv";
pub const RMSE_VELOCITY: &str = "rmse_velocity.csv";
pub const CONSENSUS_ERROR: &str = "consensus_error.csv";
pub const COVARIANCE_ERROR: &str = "covariance_error.csv";
pub const COMMUNICATION: &str = "communication.csv";

const SIGNIFICANT: i32 = 12;

/// Positional decimal with 12 significant digits.
pub fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding may carry into a new leading digit, e.g. 9.99…9 → 10.0…0
    let digits = s.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count();
    if digits > SIGNIFICANT as usize && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn node_table(rows: &[Vec<f64>], n_nodes: usize) -> String {
    let mut out = String::from("t");
    for i in 0..n_nodes {
        write!(out, ",node_{i}").unwrap();
    }
    out.push('\n');
    for (k, row) in rows.iter().enumerate() {
        write!(out, "{}", k + 1).unwrap();
        for v in row {
            write!(out, ",{}", format_value(*v)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn consensus_table(rows: &[Vec<f64>]) -> String {
    let mut out = String::from("t,l,error\n");
    for (k, row) in rows.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            writeln!(out, "{},{l},{}", k + 1, format_value(*v)).unwrap();
        }
    }
    out
}

fn communication_table(m: &RunMetrics) -> String {
    let mut out = String::from("t,node,messages,scalars,phase\n");
    for (t, node, phase, r) in m.comm.records() {
        writeln!(out, "{t},{node},{},{},{}", r.messages, r.scalars, phase.as_str()).unwrap();
    }
    out
}

fn write(dir: &Path, name: &str, body: String) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|source| HarnessError::Io { path, source })
}

/// Writes the five metric files into `dir`, creating it if needed.
pub fn export_csv(m: &RunMetrics, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    write(dir, RMSE_POSITION, node_table(&m.rmse_pos, m.n_nodes))?;
    write(dir, RMSE_VELOCITY, node_table(&m.rmse_vel, m.n_nodes))?;
    write(dir, CONSENSUS_ERROR, consensus_table(&m.consensus_error))?;
    write(dir, COVARIANCE_ERROR, node_table(&m.cov_error, m.n_nodes))?;
    write(dir, COMMUNICATION, communication_table(m))?;
    Ok(())
}
