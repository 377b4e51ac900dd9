//! CSV writers and readers for trajectories, measures, sweeps, spectra and
//! Wigner grids.
//!
//! Floats are written with Rust's shortest round-trip formatting, so output is
//! byte-for-byte deterministic and re-parses to identical values.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::gaussian::CovarianceMatrix;
use crate::measures::{EntanglementSeries, SyncSeries};
use crate::propagator::{Trajectory, TrajectoryPoint};
use crate::sweep::SweepRow;
use crate::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 21] = [
    "L", "mean_qa", "mean_pa", "mean_qb", "mean_pb", "s11", "s12", "s13", "s14", "s21", "s22", "s23", "s24", "s31",
    "s32", "s33", "s34", "s41", "s42", "s43", "s44",
];
pub const MEASURES_HEADER: [&str; 6] = ["L", "S_c", "S_re", "R_a", "R_b", "E_N"];
pub const SWEEP_HEADER: [&str; 4] = ["d21", "d31", "S_re_final", "E_N_final"];
pub const SPECTRUM_HEADER: [&str; 2] = ["re", "im"];
pub const WIGNER_HEADER: [&str; 3] = ["q", "p", "w"];

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = writer(out, &TRAJECTORY_HEADER)?;
    for p in &traj.points {
        let mut rec = vec![p.collisions.to_string()];
        rec.extend(p.quadrature_means().iter().map(|&x| fmt(x)));
        let c = p.cov.matrix();
        for i in 0..4 {
            for j in 0..4 {
                rec.push(fmt(c[(i, j)]));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Measures CSV; both series must cover the same collision counts.
pub fn write_measures<W: Write>(out: W, sync: &SyncSeries, ent: &EntanglementSeries) -> Result<()> {
    if sync.points.len() != ent.points.len() {
        return Err(Error::invalid("synchronization and entanglement series differ in length"));
    }
    let mut w = writer(out, &MEASURES_HEADER)?;
    for (s, e) in sync.points.iter().zip(&ent.points) {
        if s.collisions != e.collisions {
            return Err(Error::invalid("synchronization and entanglement series are misaligned"));
        }
        w.write_record([s.collisions.to_string(), fmt(s.s_c), fmt(s.s_re), fmt(s.r_a), fmt(s.r_b), fmt(e.e_n)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(out, &SWEEP_HEADER)?;
    for r in rows {
        w.write_record([fmt(r.d21), fmt(r.d31), fmt(r.s_re_final), fmt(r.e_n_final)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum<W: Write>(out: W, eigenvalues: &[Complex64]) -> Result<()> {
    let mut w = writer(out, &SPECTRUM_HEADER)?;
    for z in eigenvalues {
        w.write_record([fmt(z.re), fmt(z.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_wigner<W: Write>(out: W, grid: &[(f64, f64)], values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::invalid("Wigner grid and values differ in length"));
    }
    let mut w = writer(out, &WIGNER_HEADER)?;
    for (&(q, p), &v) in grid.iter().zip(values) {
        w.write_record([fmt(q), fmt(p), fmt(v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a numeric CSV whose header must equal `header` exactly.
pub fn read_table<R: Read>(input: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::invalid(format!("CSV header {:?}, expected {:?}", found, header)));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::invalid(format!("data row {}: {f:?}: {e}", line + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a trajectory CSV back; each covariance passes the usual validation.
pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory> {
    let rows = read_table(input, &TRAJECTORY_HEADER)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let points = rows
        .into_iter()
        .map(|row| {
            let cov = CovarianceMatrix::new(DMatrix::from_row_slice(4, 4, &row[5..21]))?;
            Ok(TrajectoryPoint {
                collisions: row[0] as usize,
                mean_a: Complex64::new(r * row[1], r * row[2]),
                mean_b: Complex64::new(r * row[3], r * row[4]),
                cov,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory { points })
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    Ok(read_table(input, &SWEEP_HEADER)?
        .into_iter()
        .map(|r| SweepRow { d21: r[0], d31: r[1], s_re_final: r[2], e_n_final: r[3] })
        .collect())
}
