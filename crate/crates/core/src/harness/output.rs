//! CSV artifacts. Floats are written with `{:.12e}` so that identical runs
//! give byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::sweep::{LimitSeries, SweepReport, MAX_FIT_RESIDUAL, MIN_SLOPE};
use crate::diagnostics::{DiagnosticsRecord, CSV_HEADER};
use crate::kinetic::{EnsembleState, PhaseGridState};
use crate::mobility::PairSpectrum;
use crate::potentials::PotentialModel;
use crate::smoluchowski::DensityState;
use crate::Result;

fn e(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_lines(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    Ok(())
}

/// `<run dir>/eps=<ε>`.
pub fn epsilon_dir(run_dir: &Path, epsilon: f64) -> PathBuf {
    run_dir.join(format!("eps={epsilon}"))
}

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_lines(path, CSV_HEADER, records.iter().map(DiagnosticsRecord::csv_row))
}

pub const SUMMARY_HEADER: &str = "epsilon,nx,nv,dt,sup_H_f_rhoM,sup_L1_f_rhoM,flux_residual,pressure_dev,r1,r2,\
remainder,r2_bound,max_mass_error,structure_ok";

pub const SLOPES_HEADER: &str = "quantity,slope,fit_residual,min_slope,max_fit_residual,gated,pass";

/// Per-ε diagnostics, `summary.csv` and `slopes.csv` under `run_dir`.
pub fn write_sweep(run_dir: &Path, report: &SweepReport) -> Result<()> {
    for run in &report.runs {
        write_diagnostics_csv(&epsilon_dir(run_dir, run.epsilon).join("diagnostics.csv"), &run.records)?;
    }
    write_lines(
        &run_dir.join("summary.csv"),
        SUMMARY_HEADER,
        report.runs.iter().map(|r| {
            let s = &r.summary;
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                e(s.epsilon),
                s.nx,
                s.nv,
                e(s.dt),
                e(s.sup_h_f_rho_m),
                e(s.sup_l1_f_rho_m),
                e(s.flux_residual),
                e(s.pressure_dev),
                e(s.r1),
                e(s.r2),
                e(s.remainder()),
                e(s.r2_bound),
                e(s.max_mass_error),
                s.structure_ok()
            )
        }),
    )?;
    write_lines(
        &run_dir.join("slopes.csv"),
        SLOPES_HEADER,
        report.slopes.iter().map(|t| {
            let (slope, res) = t.fit.map(|f| (f.slope, f.residual)).unwrap_or((f64::NAN, f64::NAN));
            format!(
                "{},{},{},{},{},{},{}",
                t.quantity,
                e(slope),
                e(res),
                e(MIN_SLOPE),
                e(MAX_FIT_RESIDUAL),
                t.gated,
                t.pass()
            )
        }),
    )
}

pub fn write_phase_dump(path: &Path, state: &PhaseGridState) -> Result<()> {
    let nv = state.nv();
    write_lines(
        path,
        "x,v,f",
        state
            .f
            .iter()
            .enumerate()
            .map(|(k, f)| format!("{},{},{}", e(state.x_grid.center(k / nv)), e(state.v_grid.center(k % nv)), e(*f))),
    )
}

pub fn write_ensemble_dump(path: &Path, state: &EnsembleState) -> Result<()> {
    let n = state.dim;
    let header: Vec<String> = (0..n).map(|d| format!("x{d}")).chain((0..n).map(|d| format!("v{d}"))).collect();
    write_lines(
        path,
        &header.join(","),
        (0..state.len())
            .map(|p| state.position(p).iter().chain(state.velocity(p)).map(|x| e(*x)).collect::<Vec<_>>().join(",")),
    )
}

pub fn write_density_dump(path: &Path, state: &DensityState, potential: &PotentialModel) -> Result<()> {
    let h0 = state.h0(potential);
    write_lines(
        path,
        "x,rho,h0",
        state
            .rho
            .iter()
            .zip(&h0)
            .enumerate()
            .map(|(i, (r, h))| format!("{},{},{}", e(state.grid.center(i)), e(*r), e(*h))),
    )
}

pub fn write_mobility_csv(path: &Path, config_id: &str, spectra: &[PairSpectrum]) -> Result<()> {
    write_lines(
        path,
        "config_id,d,lambda_min,lambda_max",
        spectra.iter().map(|s| format!("{config_id},{},{},{}", e(s.distance), e(s.lambda_min), e(s.lambda_max))),
    )
}

pub fn write_limit_series(path: &Path, series: &LimitSeries) -> Result<()> {
    write_lines(
        path,
        "time,mass,variance,h0_min,h0_max",
        (0..series.times.len()).map(|k| {
            let (lo, hi) = series.h0_bounds[k];
            format!("{},{},{},{},{}", e(series.times[k]), e(series.masses[k]), e(series.variances[k]), e(lo), e(hi))
        }),
    )
}
