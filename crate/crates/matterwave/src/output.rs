//! Plot-ready persistence: the observables CSV, the packed density history
//! with its JSON sidecar, the protocol report, and the sweep tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::prop::Trajectory;
use crate::protocol::{
    OutputFiles, ProtocolReport, RecombineSweepRow, SplitPhaseCurve, SplitScan,
};

pub const OBSERVABLES_CSV: &str = "observables.csv";
pub const DENSITY_BIN: &str = "density.bin";
pub const DENSITY_META: &str = "density.meta.json";
pub const REPORT_JSON: &str = "report.json";

/// Sidecar describing `density.bin`: `n_rows` snapshots of `n_cols` grid
/// points, row-major little-endian f64, sampled every `dt_snapshot` from
/// `t0` on a box of length `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMeta {
    pub n_rows: usize,
    pub n_cols: usize,
    pub t0: f64,
    pub dt_snapshot: f64,
    #[serde(rename = "L")]
    pub length: f64,
}

pub fn write_observables_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,norm,energy,n1_frac,n2_frac,centroid,central_density")?;
    for s in &traj.snapshots {
        writeln!(
            out,
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            s.time, s.norm, s.energy, s.occupations[0], s.occupations[1], s.centroid,
            s.central_density
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the density history as packed f64 rows plus its sidecar. Rows must
/// be uniformly spaced in time; a single trailing off-stride snapshot (an
/// exact endpoint that is not a stride multiple) is dropped from the binary
/// rather than falsifying the sidecar.
pub fn write_density(
    bin_path: &Path,
    meta_path: &Path,
    traj: &Trajectory,
    grid: &Grid1D,
) -> Result<DensityMeta> {
    let snaps = &traj.snapshots;
    if snaps.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot persist an empty trajectory".into(),
        ));
    }
    for s in snaps {
        if s.density.len() != grid.n() {
            return Err(Error::LengthMismatch {
                len: s.density.len(),
                n: grid.n(),
            });
        }
    }
    let t0 = snaps[0].time;
    let dt = if snaps.len() > 1 {
        snaps[1].time - snaps[0].time
    } else {
        0.0
    };
    let mut n_rows = snaps.len();
    for (i, s) in snaps.iter().enumerate().skip(1) {
        if (s.time - (t0 + i as f64 * dt)).abs() > 1e-6 {
            if i == snaps.len() - 1 {
                n_rows = i;
                log::debug!(
                    "dropping off-stride final snapshot at t = {} from the density history",
                    s.time
                );
            } else {
                return Err(Error::InvalidParameter(format!(
                    "snapshot times are not uniformly spaced at index {i} (t = {})",
                    s.time
                )));
            }
        }
    }

    let mut out = BufWriter::new(File::create(bin_path)?);
    for s in &snaps[..n_rows] {
        for &v in &s.density {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;

    let meta = DensityMeta {
        n_rows,
        n_cols: grid.n(),
        t0,
        dt_snapshot: dt,
        length: grid.length(),
    };
    write_json(meta_path, &meta)?;
    Ok(meta)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ProtocolReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes all artifacts of a protocol run into `dir` and returns the report
/// with its file references filled in.
pub fn persist_run(
    dir: &Path,
    report: ProtocolReport,
    traj: &Trajectory,
    grid: &Grid1D,
) -> Result<ProtocolReport> {
    std::fs::create_dir_all(dir)?;
    write_observables_csv(&dir.join(OBSERVABLES_CSV), traj)?;
    write_density(&dir.join(DENSITY_BIN), &dir.join(DENSITY_META), traj, grid)?;
    let report = ProtocolReport {
        files: Some(OutputFiles {
            observables_csv: OBSERVABLES_CSV.into(),
            density_bin: DENSITY_BIN.into(),
            density_meta: DENSITY_META.into(),
            report_json: REPORT_JSON.into(),
        }),
        ..report
    };
    write_json(&dir.join(REPORT_JSON), &report)?;
    Ok(report)
}

pub fn write_split_scan(dir: &Path, scan: &SplitScan) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join("scan_k.csv");
    let mut out = BufWriter::new(File::create(&csv)?);
    writeln!(out, "k,completeness")?;
    for r in &scan.rows {
        writeln!(out, "{:.10e},{:.10e}", r.k, r.completeness)?;
    }
    out.flush()?;
    let json = dir.join("scan_k.json");
    write_json(&json, scan)?;
    Ok((csv, json))
}

pub fn write_recombine_sweep(dir: &Path, rows: &[RecombineSweepRow]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join("sweep_chi2.csv");
    let mut out = BufWriter::new(File::create(&csv)?);
    writeln!(out, "chi2,j,t_rc,nu")?;
    for r in rows {
        writeln!(out, "{:.10e},{},{:.10e},{:.10e}", r.chi2, r.j, r.t_rc, r.nu)?;
    }
    out.flush()?;
    Ok(csv)
}

pub fn write_split_phase_sweep(dir: &Path, curves: &[SplitPhaseCurve]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join("sweep_chi1.csv");
    let mut out = BufWriter::new(File::create(&csv)?);
    writeln!(out, "chi1,t,n2_frac")?;
    for c in curves {
        for (t, n2) in c.times.iter().zip(&c.n2_frac) {
            writeln!(out, "{:.10e},{:.10e},{:.10e}", c.chi1, t, n2)?;
        }
    }
    out.flush()?;
    Ok(csv)
}

/// Ground-state density table for the relax subcommand.
pub fn write_density_profile(path: &Path, grid: &Grid1D, density: &[f64]) -> Result<()> {
    if density.len() != grid.n() {
        return Err(Error::LengthMismatch {
            len: density.len(),
            n: grid.n(),
        });
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "x,density")?;
    for (&x, &d) in grid.x().iter().zip(density) {
        writeln!(out, "{:.10e},{:.10e}", x, d)?;
    }
    out.flush()?;
    Ok(())
}
