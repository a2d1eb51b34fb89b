//! Experiment driver: time-steps a configured run and writes its artifacts.
//!
//! Files written to `output_dir`:
//!
//! - `scalars.csv`: `step,time,E,E_M,dissipation,balance_residual`, one row
//!   per step including step 0;
//! - `spectrum_<step>.csv`: shell spectra at the sampled steps;
//! - `spectrum_mean.csv`: the average of the samples in the averaging window;
//! - `checkpoint_<step>.radm`: checkpoints;
//! - `summary.txt`: the summary line.
//!
//! The balance residual in the scalar log is the running value of
//! `|E_M(t) − E_M(0) + ∫ε_M − ∫(f,Dv) − injected| / (E_M(0) + 1)`, where
//! `injected` is the model energy added by shell rescaling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::diagnostics::{average_spectra, compute_spectrum, fit_slope, tail_mean, EnergyReport, Spectrum};
use crate::error::{RadmError, Result};
use crate::solver::{turbulence_initial_condition, Solver, SolverState};

/// Final state of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub time: f64,
    pub final_energies: EnergyReport,
    /// Mean kinetic energy over the averaging window.
    pub mean_kinetic: f64,
    pub balance_residual: f64,
    /// `(lo, hi, slope)` of the averaged spectrum; `None` when a shell in
    /// the band is empty.
    pub slopes: Vec<(usize, usize, Option<f64>)>,
    pub spectrum: Spectrum,
}

impl RunSummary {
    pub fn line(&self) -> String {
        let mut s = format!(
            "steps={} t={:.6} E={:.9e} E_M={:.9e} <E>={:.9e} balance={:.3e}",
            self.steps, self.time, self.final_energies.kinetic, self.final_energies.model, self.mean_kinetic,
            self.balance_residual
        );
        for (lo, hi, slope) in &self.slopes {
            match slope {
                Some(v) => s.push_str(&format!(" slope[{lo},{hi}]={v:.4}")),
                None => s.push_str(&format!(" slope[{lo},{hi}]=n/a")),
            }
        }
        s
    }
}

pub fn spectrum_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("spectrum_{step:08}.csv"))
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("checkpoint_{step:08}.radm"))
}

/// Writes to a temporary sibling and renames, so an existing file is never
/// left half-written.
fn write_atomic(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Balance {
    e0: f64,
    last: Option<(f64, f64, f64)>,
    dissipated: f64,
    worked: f64,
    injected: f64,
}

impl Balance {
    fn new(e0: f64) -> Self {
        Self {
            e0,
            last: None,
            dissipated: 0.0,
            worked: 0.0,
            injected: 0.0,
        }
    }

    fn push(&mut self, time: f64, r: &EnergyReport, work: f64, injected: f64) -> f64 {
        if let Some((t0, d0, w0)) = self.last {
            self.dissipated += 0.5 * (time - t0) * (d0 + r.dissipation);
            self.worked += 0.5 * (time - t0) * (w0 + work);
        }
        self.injected += injected;
        self.last = Some((time, r.dissipation, work));
        (r.model - self.e0 + self.dissipated - self.worked - self.injected).abs() / (self.e0 + 1.0)
    }
}

pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let solver = Solver::new(config.model_params()?)?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("config.txt"), |w| Ok(w.write_all(config.to_text().as_bytes())?))?;

    let v0 = turbulence_initial_condition(solver.grid(), config.seed, config.init_k0, config.init_energy)?;
    let mut state = solver.initial_state(v0)?;

    let mut log = BufWriter::new(File::create(dir.join("scalars.csv"))?);
    writeln!(log, "step,time,E,E_M,dissipation,balance_residual")?;

    let first = solver.energies(&state.v)?;
    let mut balance = Balance::new(first.model);
    let mut residual = balance.push(0.0, &first, solver.body_force_work(&state.v)?, 0.0);
    write_row(&mut log, &state, &first, residual)?;

    let window_start = (config.steps as f64 * config.average_start).floor() as u64;
    let mut kinetic = vec![first.kinetic];
    let mut sampled: Vec<Spectrum> = Vec::new();
    let mut report = first;

    let record_spectrum = |state: &SolverState, sampled: &mut Vec<Spectrum>| -> Result<Spectrum> {
        let s = compute_spectrum(&state.v, solver.symbols())?;
        write_atomic(&spectrum_path(dir, state.step), |w| Ok(s.write_csv(w)?))?;
        if state.step >= window_start {
            sampled.push(s.clone());
        }
        Ok(s)
    };
    let save = |state: &SolverState| -> Result<()> {
        let ck = Checkpoint {
            time: state.time,
            alpha: config.alpha,
            nu: config.nu,
            n_deconv: config.deconv_order,
            field: state.v.clone(),
        };
        write_atomic(&checkpoint_path(dir, state.step), |w| ck.write_to(w))
    };

    let mut last_spectrum = record_spectrum(&state, &mut sampled)?;
    if config.steps == 0 || config.checkpoint_interval > 0 {
        save(&state)?;
    }
    for _ in 0..config.steps {
        let info = match solver.step(&mut state) {
            Ok(i) => i,
            Err(e) => {
                log.flush()?;
                return Err(e);
            }
        };
        report = solver.energies(&state.v)?;
        if !(report.model.is_finite()) {
            log.flush()?;
            return Err(RadmError::BlowUp { step: state.step });
        }
        residual = balance.push(state.time, &report, solver.body_force_work(&state.v)?, info.injected);
        write_row(&mut log, &state, &report, residual)?;
        if state.step >= window_start {
            kinetic.push(report.kinetic);
        }
        let last = state.step == config.steps;
        if last || (config.spectrum_interval > 0 && state.step % config.spectrum_interval == 0) {
            last_spectrum = record_spectrum(&state, &mut sampled)?;
        }
        if last || (config.checkpoint_interval > 0 && state.step % config.checkpoint_interval == 0) {
            save(&state)?;
        }
        if config.steps >= 10 && state.step % (config.steps / 10) == 0 {
            info!("step {} t={:.4} E={:.6e} E_M={:.6e}", state.step, state.time, report.kinetic, report.model);
        }
    }
    log.flush()?;

    let spectrum = average_spectra(&sampled).unwrap_or(last_spectrum);
    write_atomic(&dir.join("spectrum_mean.csv"), |w| Ok(spectrum.write_csv(w)?))?;
    let slopes = config
        .slope_bands
        .iter()
        .map(|&(lo, hi)| (lo, hi, fit_slope(&spectrum, lo, hi).ok()))
        .collect();
    let summary = RunSummary {
        steps: state.step,
        time: state.time,
        final_energies: report,
        mean_kinetic: tail_mean(&kinetic, 0.0),
        balance_residual: residual,
        slopes,
        spectrum,
    };
    write_atomic(&dir.join("summary.txt"), |w| Ok(writeln!(w, "{}", summary.line())?))?;
    Ok(summary)
}

fn write_row(w: &mut impl Write, s: &SolverState, r: &EnergyReport, residual: f64) -> Result<()> {
    writeln!(
        w,
        "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
        s.step, s.time, r.kinetic, r.model, r.dissipation, residual
    )?;
    Ok(())
}

/// Spectrum and band slopes of a checkpointed field.
pub fn checkpoint_spectrum(ck: &Checkpoint, bands: &[(usize, usize)]) -> Result<(Spectrum, Vec<(usize, usize, Option<f64>)>)> {
    let params = crate::filter::FilterParams::new(ck.alpha, ck.n_deconv)?;
    let table = crate::filter::SymbolTable::new(ck.field.grid(), params);
    let s = compute_spectrum(&ck.field, &table)?;
    let slopes = bands.iter().map(|&(lo, hi)| (lo, hi, fit_slope(&s, lo, hi).ok())).collect();
    Ok((s, slopes))
}
