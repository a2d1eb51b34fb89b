//! Exact pulsatile-flow solutions for Navier-Stokes and NS-Voigt.
//!
//! Covers the Womersley and α-Womersley numbers, the time-periodic channel
//! solution of
//!
//! ```text
//! w_t − α² w_txx − ν w_xx = cos(ωt),   w(±R) = 0,
//! ```
//!
//! the single-mode circular-pipe amplitude `W(r)` solving
//! `iωW − (α²iω + ν)(W'' + W'/r) = 1`, `W(R) = 0`, and the closed-form
//! Dirichlet eigenmode coefficients of the Voigt heat-type problem.

mod bessel;

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{RadmError, Result};

pub use bessel::{bessel_j0, MAX_ARGUMENT};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Geometry and parameters of a pulsatile problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsatileCase {
    /// Channel half-width or pipe radius.
    pub radius: f64,
    pub omega: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl PulsatileCase {
    pub fn new(radius: f64, omega: f64, nu: f64, alpha: f64) -> Result<Self> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(positive(radius) && positive(omega) && positive(nu)) || !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(RadmError::InvalidParameter(format!(
                "pulsatile case needs R, omega, nu > 0 and alpha >= 0; got R = {radius}, \
                 omega = {omega}, nu = {nu}, alpha = {alpha}"
            )));
        }
        Ok(Self {
            radius,
            omega,
            nu,
            alpha,
        })
    }

    /// `Wo = R √(ω/ν)`.
    pub fn womersley(&self) -> f64 {
        self.radius * (self.omega / self.nu).sqrt()
    }

    /// `α-Wo = R √ω / (α⁴ω² + ν²)^{1/4}`.
    pub fn alpha_womersley(&self) -> f64 {
        let a2 = self.alpha * self.alpha;
        let d = (a2 * a2 * self.omega * self.omega + self.nu * self.nu).sqrt().sqrt();
        self.radius * self.omega.sqrt() / d
    }

    /// `Wo / α-Wo = (1 + α⁴ω²/ν²)^{1/4}`, never below 1.
    pub fn womersley_ratio(&self) -> f64 {
        let s = self.alpha * self.alpha * self.omega / self.nu;
        (1.0 + s * s).sqrt().sqrt()
    }
}

/// Largest `α` that still allows flow reversal:
/// `√ν (Wo⁴ − 10⁴)^{1/4} / (10 √ω)`. Requires `Wo > 10`.
pub fn alpha_reversal_bound(wo: f64, nu: f64, omega: f64) -> Result<f64> {
    let w4 = wo.powi(4);
    if !(w4 > 10_000.0) {
        return Err(RadmError::NoReversalRegime(wo));
    }
    Ok(nu.sqrt() * (w4 - 10_000.0).sqrt().sqrt() / (10.0 * omega.sqrt()))
}

/// `cosh(x/s) / cosh(R/s)` for `Re(1/s) > 0`, without overflow.
fn cosh_ratio(x: f64, radius: f64, s: Complex64) -> Complex64 {
    let inv = s.inv();
    let x = x.abs();
    ((x - radius) * inv).exp() * (1.0 + (-2.0 * x * inv).exp()) / (1.0 + (-2.0 * radius * inv).exp())
}

/// Complex assembly of the closed-form channel solution. The exact value is
/// real; the imaginary part measures rounding.
pub fn channel_profile_complex(case: &PulsatileCase, t: f64, x: f64) -> Complex64 {
    let w = case.omega;
    let (st, ct) = (w * t).sin_cos();
    let a2 = Complex64::new(case.alpha * case.alpha, 0.0);
    // principal branch: positive real part
    let sp = (a2 + I * (case.nu / w)).sqrt();
    let sm = (a2 - I * (case.nu / w)).sqrt();
    let plus = Complex64::new(-st, -ct) * cosh_ratio(x, case.radius, sp);
    let minus = Complex64::new(-st, ct) * cosh_ratio(x, case.radius, sm);
    Complex64::new(st / w, 0.0) + (plus + minus) / (2.0 * w)
}

/// Channel velocity `w(t, x)` for `|x| <= R`.
pub fn channel_profile(case: &PulsatileCase, t: f64, x: f64) -> Result<f64> {
    if !(x.abs() <= case.radius) {
        return Err(RadmError::InvalidParameter(format!(
            "channel position |x| = {} exceeds half-width {}",
            x.abs(),
            case.radius
        )));
    }
    let z = channel_profile_complex(case, t, x);
    // the terms are O(1/ω)
    if z.im.abs() > 1e-10 * (z.re.abs() + 1.0 / case.omega) {
        return Err(RadmError::ImaginaryResidue(z.im.abs()));
    }
    Ok(z.re)
}

/// Wavenumber `ζ = i √ω / √(α²ω − iν)` of the pipe solution `J₀(ζ r)`.
fn pipe_wavenumber(case: &PulsatileCase) -> Complex64 {
    let d = Complex64::new(case.alpha * case.alpha * case.omega, -case.nu).sqrt();
    I * case.omega.sqrt() / d
}

/// Complex amplitude `W(r) = (1/iω) [1 − J₀(ζr) / J₀(ζR)]` of the single-mode
/// pipe solution `w = e^{iωt} W(r)`.
pub fn pipe_profile(case: &PulsatileCase, r: f64) -> Result<Complex64> {
    if !(0.0..=case.radius).contains(&r) {
        return Err(RadmError::InvalidParameter(format!(
            "pipe radius r = {r} outside [0, {}]",
            case.radius
        )));
    }
    let zeta = pipe_wavenumber(case);
    let den = bessel_j0(zeta * case.radius)?;
    if den.norm() < 1e-14 {
        return Err(RadmError::NearZeroDenominator(den.norm()));
    }
    let num = bessel_j0(zeta * r)?;
    Ok((1.0 - num / den) / (I * case.omega))
}

/// Physical pipe velocity `Re(e^{iωt} W(r))`.
pub fn pipe_velocity(case: &PulsatileCase, t: f64, r: f64) -> Result<f64> {
    let w = pipe_profile(case, r)?;
    Ok((Complex64::from_polar(1.0, case.omega * t) * w).re)
}

/// Where the profile peaks and whether it reverses direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnularReport {
    /// Position `|x|` of the largest `|w|`.
    pub argmax: f64,
    pub max_abs: f64,
    /// Some interior pair of samples has opposite signs.
    pub reverses: bool,
}

impl AnnularReport {
    /// Annular effect: the peak sits in `(R/2, R)`.
    pub fn annular(&self, radius: f64) -> bool {
        self.argmax > 0.5 * radius && self.argmax < radius
    }
}

/// Samples the channel profile on `samples` equispaced points of `[0, R]`.
/// Values within `1e-9·max|w|` of zero are ignored for the sign test so
/// rounding at the wall does not count as reversal.
pub fn annular_analysis(case: &PulsatileCase, t: f64, samples: usize) -> Result<AnnularReport> {
    let samples = samples.max(3);
    let xs: Vec<f64> = (0..samples)
        .map(|i| case.radius * i as f64 / (samples - 1) as f64)
        .collect();
    let ws = xs
        .iter()
        .map(|&x| channel_profile(case, t, x))
        .collect::<Result<Vec<_>>>()?;
    let (imax, max_abs) = ws
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, w)| if w.abs() > bv { (i, w.abs()) } else { (bi, bv) });
    let floor = 1e-9 * max_abs;
    let signs: Vec<f64> = ws[..samples - 1]
        .iter()
        .filter(|w| w.abs() > floor)
        .map(|w| w.signum())
        .collect();
    let reverses = signs.windows(2).any(|p| p[0] != p[1]);
    Ok(AnnularReport {
        argmax: xs[imax],
        max_abs,
        reverses,
    })
}

/// Decay rate `λν / (1 + α²λ)` of a Dirichlet eigenmode; bounded by `ν/α²`.
pub fn mode_decay_rate(lambda: f64, nu: f64, alpha: f64) -> f64 {
    lambda * nu / (1.0 + alpha * alpha * lambda)
}

/// Solution of `(1+α²λ) c' + νλ c = β`, `c(0) = c₀`:
/// `c(t) = c₀ e^{−rt} + β/(λν) (1 − e^{−rt})` with `r = λν/(1+α²λ)`.
pub fn mode_coefficient(t: f64, lambda: f64, nu: f64, alpha: f64, beta: f64, c0: f64) -> f64 {
    let decay = (-mode_decay_rate(lambda, nu, alpha) * t).exp();
    c0 * decay + beta / (lambda * nu) * (1.0 - decay)
}

/// Sine-eigenmode expansion of the channel problem
/// `(1 − α²∂ₓ²) w_t − ν w_xx = 1` on `(−R, R)` with `w(±R) = 0`.
///
/// Eigenfunctions `φ_m(x) = sin(mπ(x+R)/(2R)) / √R`, eigenvalues
/// `λ_m = (mπ/(2R))²`, forcing projections `β_m = ∫φ_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModes {
    pub radius: f64,
    pub nu: f64,
    pub alpha: f64,
    /// Initial coefficients `c_m(0)`, `m = 1, 2, …`.
    pub initial: Vec<f64>,
}

impl ChannelModes {
    /// Projects `w0` on the first `modes` eigenfunctions with composite
    /// Simpson quadrature on `quad_intervals` (rounded up to even) intervals.
    pub fn project(
        radius: f64,
        nu: f64,
        alpha: f64,
        modes: usize,
        quad_intervals: usize,
        w0: impl Fn(f64) -> f64,
    ) -> Self {
        let m_int = quad_intervals + quad_intervals % 2;
        let h = 2.0 * radius / m_int as f64;
        let xs: Vec<f64> = (0..=m_int).map(|i| -radius + i as f64 * h).collect();
        let weights: Vec<f64> = (0..=m_int)
            .map(|i| {
                let w = if i == 0 || i == m_int {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * h / 3.0
            })
            .collect();
        let wv: Vec<f64> = xs.iter().map(|&x| w0(x)).collect();
        let mut s = Self {
            radius,
            nu,
            alpha,
            initial: Vec::with_capacity(modes),
        };
        for m in 1..=modes {
            let c = xs
                .iter()
                .zip(&weights)
                .zip(&wv)
                .map(|((&x, &q), &f)| q * f * s.eigenfunction(m, x))
                .sum();
            s.initial.push(c);
        }
        s
    }

    pub fn eigenvalue(&self, m: usize) -> f64 {
        (m as f64 * PI / (2.0 * self.radius)).powi(2)
    }

    pub fn eigenfunction(&self, m: usize, x: f64) -> f64 {
        (m as f64 * PI * (x + self.radius) / (2.0 * self.radius)).sin() / self.radius.sqrt()
    }

    /// `∫_{−R}^{R} φ_m = 2√R (1 − (−1)^m) / (mπ)`.
    pub fn forcing_projection(&self, m: usize) -> f64 {
        if m % 2 == 0 {
            0.0
        } else {
            4.0 * self.radius.sqrt() / (m as f64 * PI)
        }
    }

    /// Truncated expansion `Σ_m c_m(t) φ_m(x)`.
    pub fn evaluate(&self, t: f64, x: f64) -> f64 {
        self.initial
            .iter()
            .enumerate()
            .map(|(i, &c0)| {
                let m = i + 1;
                let c = mode_coefficient(t, self.eigenvalue(m), self.nu, self.alpha, self.forcing_projection(m), c0);
                c * self.eigenfunction(m, x)
            })
            .sum()
    }
}

/// Writes a channel profile CSV (`x,w`) with the parameters echoed as
/// `#`-comment lines.
pub fn write_channel_csv(case: &PulsatileCase, t: f64, points: usize, mut out: impl Write) -> Result<()> {
    write_case_header(case, &mut out)?;
    writeln!(out, "# geometry = channel")?;
    writeln!(out, "# t = {t}")?;
    writeln!(out, "x,w")?;
    let points = points.max(2);
    for i in 0..points {
        let x = -case.radius + 2.0 * case.radius * i as f64 / (points - 1) as f64;
        writeln!(out, "{:.17e},{:.17e}", x, channel_profile(case, t, x)?)?;
    }
    Ok(())
}

/// Writes a pipe profile CSV (`r,ReW,ImW`) with `#`-comment parameter lines.
pub fn write_pipe_csv(case: &PulsatileCase, points: usize, mut out: impl Write) -> Result<()> {
    write_case_header(case, &mut out)?;
    writeln!(out, "# geometry = pipe")?;
    writeln!(out, "r,ReW,ImW")?;
    let points = points.max(2);
    for i in 0..points {
        let r = case.radius * i as f64 / (points - 1) as f64;
        let w = pipe_profile(case, r)?;
        writeln!(out, "{:.17e},{:.17e},{:.17e}", r, w.re, w.im)?;
    }
    Ok(())
}

fn write_case_header(case: &PulsatileCase, out: &mut impl Write) -> Result<()> {
    writeln!(out, "# R = {}", case.radius)?;
    writeln!(out, "# omega = {}", case.omega)?;
    writeln!(out, "# nu = {}", case.nu)?;
    writeln!(out, "# alpha = {}", case.alpha)?;
    writeln!(out, "# Wo = {}", case.womersley())?;
    writeln!(out, "# alpha_Wo = {}", case.alpha_womersley())?;
    Ok(())
}

/// Eighth-order central-difference weights for first and second derivatives
/// (offsets 1..=4; the second-derivative centre weight is `-205/72`).
pub(crate) const D1: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
pub(crate) const D2: [f64; 4] = [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
pub(crate) const D2_CENTRE: f64 = -205.0 / 72.0;

fn central_d1<T>(f: &impl Fn(f64) -> T, x: f64, h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let mut acc = T::default();
    for (j, &w) in D1.iter().enumerate() {
        let s = (j + 1) as f64 * h;
        acc = acc + (f(x + s) - f(x - s)) * w;
    }
    acc * (1.0 / h)
}

fn central_d2<T>(f: &impl Fn(f64) -> T, x: f64, h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let mut acc = f(x) * D2_CENTRE;
    for (j, &w) in D2.iter().enumerate() {
        let s = (j + 1) as f64 * h;
        acc = acc + (f(x + s) + f(x - s)) * w;
    }
    acc * (1.0 / (h * h))
}

/// Largest finite-difference residual of `w_t − α²w_txx − νw_xx − cos(ωt)`
/// for the channel solution at time `t`, on the interior nodes of a
/// `points`-node grid over `[−R, R]` (eighth-order central differences in
/// space and time; time step `τ = 0.01/ω`).
pub fn channel_pde_residual(case: &PulsatileCase, t: f64, points: usize) -> f64 {
    let h = 2.0 * case.radius / (points - 1) as f64;
    let tau = 0.01 / case.omega;
    let a2 = case.alpha * case.alpha;
    // the formula is analytic in x, so the stencil may use the raw assembly
    let w = |t: f64, x: f64| channel_profile_complex(case, t, x).re;
    let mut worst: f64 = 0.0;
    for i in 4..points - 4 {
        let x = -case.radius + i as f64 * h;
        let wxx = |s: f64| central_d2(&|y| w(s, y), x, h);
        let wt = central_d1(&|s| w(s, x), t, tau);
        let wtxx = central_d1(&wxx, t, tau);
        let res = wt - a2 * wtxx - case.nu * wxx(t) - (case.omega * t).cos();
        worst = worst.max(res.abs());
    }
    worst
}

#[derive(Clone, Copy, Default)]
struct C(Complex64);

impl std::ops::Add for C {
    type Output = C;
    fn add(self, o: C) -> C {
        C(self.0 + o.0)
    }
}

impl std::ops::Sub for C {
    type Output = C;
    fn sub(self, o: C) -> C {
        C(self.0 - o.0)
    }
}

impl std::ops::Mul<f64> for C {
    type Output = C;
    fn mul(self, a: f64) -> C {
        C(self.0 * a)
    }
}

/// Largest finite-difference residual of `iωW − (α²iω + ν)(W'' + W'/r) − 1`
/// on the interior nodes of a `points`-node grid over `[0, R]`.
pub fn pipe_ode_residual(case: &PulsatileCase, points: usize) -> Result<f64> {
    let h = case.radius / (points - 1) as f64;
    let zeta = pipe_wavenumber(case);
    let den = bessel_j0(zeta * case.radius)?;
    if den.norm() < 1e-14 {
        return Err(RadmError::NearZeroDenominator(den.norm()));
    }
    let w = |r: f64| C((1.0 - bessel_j0(zeta * r).unwrap_or(Complex64::new(f64::NAN, 0.0)) / den) / (I * case.omega));
    let coef = I * (case.alpha * case.alpha * case.omega) + case.nu;
    let mut worst: f64 = 0.0;
    for i in 4..points - 4 {
        let r = i as f64 * h;
        let d1 = central_d1(&w, r, h).0;
        let d2 = central_d2(&w, r, h).0;
        let res = I * case.omega * w(r).0 - coef * (d2 + d1 / r) - 1.0;
        worst = worst.max(res.norm());
    }
    Ok(worst)
}
