//! Energy functionals, shell spectra and inertial-range slopes.
//!
//! All quantities are per unit volume with unit Parseval weights:
//! `E = ½ Σ_k |v̂_k|²`, `E_M = ½ Σ_k D̂(k)(1+α²|k|²)|v̂_k|²`,
//! `ε_M = ν Σ_k |k|² D̂(k)² |v̂_k|²`. Sums run in storage order on one thread
//! so results are reproducible bit for bit.

use std::io::Write;

use crate::error::{RadmError, Result};
use crate::filter::{van_cittert_symbol, SymbolTable};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyReport {
    /// `½ Σ |v̂|²`
    pub kinetic: f64,
    /// `½ (α² ‖∇D^{1/2}v‖² + ‖D^{1/2}v‖²)`
    pub model: f64,
    /// `ν ‖∇Dv‖²`
    pub dissipation: f64,
}

fn mode_energy(f: &SpectralField, idx: usize) -> f64 {
    f.coeff(idx).iter().map(|z| z.norm_sqr()).sum::<f64>()
}

pub fn compute_energies(v: &SpectralField, symbols: &SymbolTable, nu: f64) -> Result<EnergyReport> {
    if v.grid() != symbols.grid() {
        return Err(RadmError::GridMismatch {
            expected: symbols.grid().n(),
            found: v.grid().n(),
        });
    }
    let (ksq, dhat, ih) = (symbols.ksq(), symbols.dhat(), symbols.inverse_helmholtz());
    let mut kinetic = 0.0;
    let mut model = 0.0;
    let mut grad = 0.0;
    for idx in 0..v.grid().len() {
        let e = mode_energy(v, idx);
        if e == 0.0 {
            continue;
        }
        kinetic += e;
        model += dhat[idx] * ih[idx] * e;
        grad += ksq[idx] * dhat[idx] * dhat[idx] * e;
    }
    Ok(EnergyReport {
        kinetic: 0.5 * kinetic,
        model: 0.5 * model,
        dissipation: nu * grad,
    })
}

/// Shell-averaged kinetic and model-energy spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// `E(k)` for shells `k = 1, 2, …`; entry `i` is shell `i + 1`.
    pub kinetic: Vec<f64>,
    /// `E_M(k) = D̂_N(k)(1+α²k²) E(k)` with the symbol taken at the shell centre.
    pub model: Vec<f64>,
}

impl Spectrum {
    pub fn shells(&self) -> usize {
        self.kinetic.len()
    }

    /// `E(k)` for integer shell `k >= 1`.
    pub fn energy(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.kinetic.get(i).copied())
    }

    pub fn total(&self) -> f64 {
        self.kinetic.iter().sum()
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "k,E,EM")?;
        for (i, (e, em)) in self.kinetic.iter().zip(&self.model).enumerate() {
            writeln!(w, "{},{:.17e},{:.17e}", i + 1, e, em)?;
        }
        Ok(())
    }
}

/// Integer shell index of a mode: `|k|` rounded to nearest.
pub fn shell_of(ksq: f64) -> usize {
    ksq.sqrt().round() as usize
}

/// Bins `½|v̂_j|²` into shells `k − ½ <= |j| < k + ½`. Shells extend far
/// enough to cover every nonzero mode, so the shells sum to `E`.
pub fn compute_spectrum(v: &SpectralField, symbols: &SymbolTable) -> Result<Spectrum> {
    if v.grid() != symbols.grid() {
        return Err(RadmError::GridMismatch {
            expected: symbols.grid().n(),
            found: v.grid().n(),
        });
    }
    let ksq = symbols.ksq();
    let max_shell = ksq.iter().map(|&q| shell_of(q)).max().unwrap_or(0);
    let mut kinetic = vec![0.0; max_shell];
    for (idx, &q) in ksq.iter().enumerate() {
        let s = shell_of(q);
        if s == 0 {
            continue;
        }
        kinetic[s - 1] += 0.5 * mode_energy(v, idx);
    }
    let (alpha, n_deconv) = (symbols.params().alpha, symbols.params().n_deconv);
    let model = kinetic
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let k = (i + 1) as f64;
            let q = k * k;
            van_cittert_symbol(q, alpha, n_deconv) * (1.0 + alpha * alpha * q) * e
        })
        .collect();
    Ok(Spectrum { kinetic, model })
}

/// Least-squares slope of `log E(k)` against `log k` over integer shells
/// `k_lo..=k_hi`.
pub fn fit_slope(spectrum: &Spectrum, k_lo: usize, k_hi: usize) -> Result<f64> {
    if k_lo < 1 || k_hi <= k_lo {
        return Err(RadmError::InvalidParameter(format!(
            "slope range requires 1 <= k_lo < k_hi, got [{k_lo}, {k_hi}]"
        )));
    }
    let mut pts = Vec::with_capacity(k_hi - k_lo + 1);
    for k in k_lo..=k_hi {
        match spectrum.energy(k) {
            Some(e) if e > 0.0 => pts.push(((k as f64).ln(), e.ln())),
            _ => return Err(RadmError::EmptyFitShell(k)),
        }
    }
    Ok(least_squares_slope(&pts))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// One entry of the energy history used for the balance check.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BalanceSample {
    pub time: f64,
    pub report: EnergyReport,
    /// Power injected by the forcing, `(f, Dv)`.
    pub work: f64,
}

/// Trapezoid rule over uneven samples.
fn trapezoid(t: &[f64], y: impl Fn(usize) -> f64) -> f64 {
    (1..t.len())
        .map(|i| 0.5 * (t[i] - t[i - 1]) * (y(i) + y(i - 1)))
        .sum()
}

/// `|E_M(T) − E_M(0) + ∫ε_M − ∫(f,Dv)| / (E_M(0) + 1)`, integrals by the
/// trapezoid rule. Returns 0 for fewer than two samples.
pub fn balance_residual(history: &[BalanceSample]) -> f64 {
    if history.len() < 2 {
        return 0.0;
    }
    let t: Vec<f64> = history.iter().map(|s| s.time).collect();
    let diss = trapezoid(&t, |i| history[i].report.dissipation);
    let work = trapezoid(&t, |i| history[i].work);
    let e0 = history[0].report.model;
    let e1 = history[history.len() - 1].report.model;
    (e1 - e0 + diss - work).abs() / (e0 + 1.0)
}

/// Arithmetic mean over the trailing part of a series starting at
/// `start_fraction` of its length.
pub fn tail_mean(values: &[f64], start_fraction: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let start = ((values.len() as f64) * start_fraction.clamp(0.0, 1.0)).floor() as usize;
    let tail = &values[start.min(values.len() - 1)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Time-averages a sequence of spectra (per-shell arithmetic mean).
pub fn average_spectra(spectra: &[Spectrum]) -> Option<Spectrum> {
    if spectra.is_empty() {
        return None;
    }
    let shells = spectra.iter().map(|s| s.shells()).max().unwrap_or(0);
    let mut kinetic = vec![0.0; shells];
    let mut model = vec![0.0; shells];
    for s in spectra {
        for i in 0..s.shells() {
            kinetic[i] += s.kinetic[i];
            model[i] += s.model[i];
        }
    }
    let m = spectra.len() as f64;
    kinetic.iter_mut().for_each(|x| *x /= m);
    model.iter_mut().for_each(|x| *x /= m);
    Some(Spectrum { kinetic, model })
}
