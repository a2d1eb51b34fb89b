//! Time integration of the reduced-order ADM momentum equation
//!
//! ```text
//! v_t − α²Δv_t + Dv·∇Dv + ∇q − νΔDv = f,   ∇·Dv = 0
//! ```
//!
//! on the periodic box. Pressure is eliminated by the Leray projection, so on
//! the lattice
//!
//! ```text
//! v̂_t = (1+α²|k|²)⁻¹ [ f̂ − P(Dv·∇Dv)^ − ν|k|² D̂ v̂ ].
//! ```
//!
//! `α = 0, N = 0` is Navier-Stokes, `N = 0` is NS-Voigt. Time stepping is
//! explicit second-order Adams-Bashforth; low-wavenumber shells can be held at
//! fixed energies by rescaling after each step.

use log::warn;

use crate::diagnostics::{compute_energies, shell_of, EnergyReport};
use crate::error::{RadmError, Result};
use crate::filter::{FilterParams, SymbolKind, SymbolTable};
use crate::rng::CounterRng;
use crate::spectral::{leray_project_mut, DealiasMask, Grid, SpectralField, Transforms};

/// Number of forward-Euler substeps used to start Adams-Bashforth.
pub const BOOTSTRAP_SUBSTEPS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CflPolicy {
    #[default]
    Warn,
    Abort,
}

/// Holds the kinetic energy of selected shells at fixed targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellForcing {
    /// `(shell, target kinetic energy)` pairs; a shell collects modes with
    /// `round(|k|) = shell`.
    pub targets: Vec<(usize, f64)>,
}

impl Default for ShellForcing {
    fn default() -> Self {
        Self {
            targets: vec![(1, 0.05), (2, 0.05)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub filter: FilterParams,
    pub nu: f64,
    pub dt: f64,
    pub forcing: Option<ShellForcing>,
    pub cfl: f64,
    pub cfl_policy: CflPolicy,
    /// Drop the convective term (linear test mode).
    pub nonlinear: bool,
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64, n_deconv: u32, nu: f64, dt: f64) -> Result<Self> {
        let p = Self {
            n,
            filter: FilterParams::new(alpha, n_deconv)?,
            nu,
            dt,
            forcing: None,
            cfl: 0.5,
            cfl_policy: CflPolicy::Warn,
            nonlinear: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_forcing(mut self, forcing: ShellForcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.n)?;
        FilterParams::new(self.filter.alpha, self.filter.n_deconv)?;
        let bad = |msg: String| Err(RadmError::InvalidParameter(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be >= 0, got {}", self.nu));
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return bad(format!("cfl must be positive, got {}", self.cfl));
        }
        if let Some(f) = &self.forcing {
            for &(shell, target) in &f.targets {
                if shell == 0 || !(target >= 0.0 && target.is_finite()) {
                    return bad(format!("invalid forcing target ({shell}, {target})"));
                }
            }
        }
        Ok(())
    }
}

/// The model variable `v` together with the Adams-Bashforth history.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub v: SpectralField,
    /// Right-hand side at the previous time level, once available.
    pub rhs_prev: Option<SpectralField>,
    pub time: f64,
    pub step: u64,
}

/// Per-step bookkeeping returned by [`Solver::step`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepInfo {
    /// Model energy added by shell rescaling.
    pub injected: f64,
    /// Largest `|Dv|` seen by the last right-hand-side evaluation.
    pub max_speed: f64,
}

#[derive(Debug, Clone)]
pub struct Solver {
    params: ModelParams,
    grid: Grid,
    mask: DealiasMask,
    transforms: Transforms,
    symbols: SymbolTable,
    body_force: Option<SpectralField>,
    /// `ν|k|² D̂`
    viscous: Vec<f64>,
    /// `F̂ = (1+α²|k|²)⁻¹`
    mass_inv: Vec<f64>,
}

impl Solver {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let grid = Grid::new(params.n)?;
        let symbols = SymbolTable::new(grid, params.filter);
        Ok(Self::assemble(params, grid, DealiasMask::new(grid), symbols))
    }

    fn assemble(params: ModelParams, grid: Grid, mask: DealiasMask, symbols: SymbolTable) -> Self {
        let viscous = symbols
            .ksq()
            .iter()
            .zip(symbols.dhat())
            .map(|(q, d)| params.nu * q * d)
            .collect();
        let mass_inv = symbols.fhat().to_vec();
        Self {
            transforms: Transforms::new(grid),
            params,
            grid,
            mask,
            symbols,
            body_force: None,
            viscous,
            mass_inv,
        }
    }

    /// Replaces the dealiasing mask (used to inject faults in verification).
    pub fn with_mask(self, mask: DealiasMask) -> Result<Self> {
        if mask.grid() != self.grid {
            return Err(RadmError::GridMismatch {
                expected: self.grid.n(),
                found: mask.grid().n(),
            });
        }
        let body_force = self.body_force;
        let mut s = Self::assemble(self.params, self.grid, mask, self.symbols);
        s.body_force = body_force;
        Ok(s)
    }

    /// Replaces the symbol table (used to inject faults in verification).
    pub fn with_symbols(self, symbols: SymbolTable) -> Result<Self> {
        if symbols.grid() != self.grid {
            return Err(RadmError::GridMismatch {
                expected: self.grid.n(),
                found: symbols.grid().n(),
            });
        }
        let body_force = self.body_force;
        let mut s = Self::assemble(self.params, self.grid, self.mask, symbols);
        s.body_force = body_force;
        Ok(s)
    }

    /// Adds a steady body force; it is projected and dealiased.
    pub fn with_body_force(mut self, mut f: SpectralField) -> Result<Self> {
        if f.grid() != self.grid {
            return Err(RadmError::GridMismatch {
                expected: self.grid.n(),
                found: f.grid().n(),
            });
        }
        leray_project_mut(&mut f);
        self.mask.apply(&mut f);
        self.body_force = Some(f);
        Ok(self)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn mask(&self) -> &DealiasMask {
        &self.mask
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn transforms(&self) -> &Transforms {
        &self.transforms
    }

    /// Wraps an initial field: projects, dealiases, zeroes mean and Nyquist modes.
    pub fn initial_state(&self, mut v: SpectralField) -> Result<SolverState> {
        if v.grid() != self.grid {
            return Err(RadmError::GridMismatch {
                expected: self.grid.n(),
                found: v.grid().n(),
            });
        }
        self.constrain(&mut v);
        Ok(SolverState {
            v,
            rhs_prev: None,
            time: 0.0,
            step: 0,
        })
    }

    fn constrain(&self, v: &mut SpectralField) {
        leray_project_mut(v);
        self.mask.apply(v);
        v.enforce_lattice_constraints();
    }

    /// `Dv`.
    pub fn deconvolved(&self, v: &SpectralField) -> Result<SpectralField> {
        self.symbols.apply(v, SymbolKind::Deconv)
    }

    /// Explicit time derivative `v̂_t` at the current state.
    pub fn rhs(&self, state: &SolverState) -> Result<SpectralField> {
        self.rhs_of(&state.v, state.step).map(|(r, _)| r)
    }

    fn rhs_of(&self, v: &SpectralField, step: u64) -> Result<(SpectralField, f64)> {
        let u = self.deconvolved(v)?;
        let (mut out, max_speed) = self.bracket(&u, step)?;
        out.scale_modes(&self.mass_inv);
        if !out.is_finite() {
            return Err(RadmError::BlowUp { step });
        }
        Ok((out, max_speed))
    }

    /// `f̂ − P(u·∇u)^ − ν|k|² û` for `u = Dv`, with the viscous term written
    /// through `ν|k|²D̂ v̂ = ν|k|² û`.
    fn bracket(&self, u: &SpectralField, step: u64) -> Result<(SpectralField, f64)> {
        let (mut out, max_speed) = if self.params.nonlinear {
            let (mut nl, umax) = self.transforms.convect_solenoidal(u, &self.mask)?;
            nl.scale(-1.0);
            (nl, umax)
        } else {
            (SpectralField::zeros(self.grid), 0.0)
        };
        if let Some(f) = &self.body_force {
            out.axpy(1.0, f)?;
        }
        leray_project_mut(&mut out);
        let ksq = self.symbols.ksq();
        let nu = self.params.nu;
        for (dst, src) in out.components_mut().iter_mut().zip(u.components()) {
            for ((d, s), q) in dst.iter_mut().zip(src).zip(ksq) {
                *d -= s * (nu * q);
            }
        }
        self.mask.apply(&mut out);
        if self.params.nonlinear {
            self.check_cfl(max_speed, step)?;
        }
        Ok((out, max_speed))
    }

    fn check_cfl(&self, max_speed: f64, step: u64) -> Result<()> {
        if !max_speed.is_finite() {
            return Err(RadmError::BlowUp { step });
        }
        if max_speed == 0.0 {
            return Ok(());
        }
        let limit = self.params.cfl * self.grid.dx() / max_speed;
        if self.params.dt > limit {
            match self.params.cfl_policy {
                CflPolicy::Warn => warn!(
                    "CFL limit exceeded at step {step}: dt = {:.3e} > {limit:.3e}",
                    self.params.dt
                ),
                CflPolicy::Abort => {
                    return Err(RadmError::Cfl {
                        step,
                        dt: self.params.dt,
                        limit,
                    })
                }
            }
        }
        Ok(())
    }

    /// Linear part only: `−ν|k|²D̂/(1+α²|k|²) v̂` per mode.
    pub fn linear_rate(&self, idx: usize) -> f64 {
        -self.viscous[idx] * self.mass_inv[idx]
    }

    /// One Adams-Bashforth update without forcing. The first call starts the
    /// scheme with [`BOOTSTRAP_SUBSTEPS`] forward-Euler substeps of `dt/10`.
    pub fn step_ab2(&self, state: &mut SolverState) -> Result<f64> {
        let dt = self.params.dt;
        let step = state.step;
        let max_speed;
        match state.rhs_prev.take() {
            None => {
                let h = dt / BOOTSTRAP_SUBSTEPS as f64;
                let (r0, s0) = self.rhs_of(&state.v, step)?;
                let mut v = state.v.clone();
                v.axpy(h, &r0)?;
                let mut smax = s0;
                for _ in 1..BOOTSTRAP_SUBSTEPS {
                    let (r, s) = self.rhs_of(&v, step)?;
                    smax = smax.max(s);
                    v.axpy(h, &r)?;
                }
                state.v = v;
                state.rhs_prev = Some(r0);
                max_speed = smax;
            }
            Some(prev) => {
                let (r, s) = self.rhs_of(&state.v, step)?;
                state.v.axpy(1.5 * dt, &r)?;
                state.v.axpy(-0.5 * dt, &prev)?;
                state.rhs_prev = Some(r);
                max_speed = s;
            }
        }
        self.mask.apply(&mut state.v);
        state.v.enforce_lattice_constraints();
        if !state.v.is_finite() {
            return Err(RadmError::BlowUp { step });
        }
        state.step += 1;
        state.time = state.step as f64 * dt;
        Ok(max_speed)
    }

    /// Kinetic energy of each configured forcing shell.
    pub fn shell_energies(&self, v: &SpectralField, shells: &[usize]) -> Vec<f64> {
        let ksq = self.symbols.ksq();
        let mut e = vec![0.0; shells.len()];
        for (idx, &q) in ksq.iter().enumerate() {
            let s = shell_of(q);
            if let Some(pos) = shells.iter().position(|&x| x == s) {
                e[pos] += 0.5 * v.coeff(idx).iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        e
    }

    /// Rescales the forced shells to their target kinetic energies, keeping
    /// phases. Returns the model energy added.
    pub fn apply_forcing(&self, state: &mut SolverState) -> Result<f64> {
        let Some(forcing) = &self.params.forcing else {
            return Ok(0.0);
        };
        let shells: Vec<usize> = forcing.targets.iter().map(|t| t.0).collect();
        let current = self.shell_energies(&state.v, &shells);
        let mut factor = vec![1.0; self.grid.len()];
        let mut shell_factor = Vec::with_capacity(shells.len());
        for (&(shell, target), &e) in forcing.targets.iter().zip(&current) {
            if e == 0.0 {
                if target == 0.0 {
                    shell_factor.push((shell, 1.0));
                    continue;
                }
                return Err(RadmError::EmptyShell(shell));
            }
            shell_factor.push((shell, (target / e).sqrt()));
        }
        let ksq = self.symbols.ksq();
        let weight: Vec<f64> = self
            .symbols
            .dhat()
            .iter()
            .zip(self.symbols.inverse_helmholtz())
            .map(|(d, h)| d * h)
            .collect();
        let mut injected = 0.0;
        for (idx, &q) in ksq.iter().enumerate() {
            let s = shell_of(q);
            if let Some(&(_, a)) = shell_factor.iter().find(|(sh, _)| *sh == s) {
                factor[idx] = a;
                let e = state.v.coeff(idx).iter().map(|z| z.norm_sqr()).sum::<f64>();
                injected += 0.5 * weight[idx] * e * (a * a - 1.0);
            }
        }
        state.v.scale_modes(&factor);
        Ok(injected)
    }

    /// A full step: Adams-Bashforth update followed by shell forcing.
    pub fn step(&self, state: &mut SolverState) -> Result<StepInfo> {
        let max_speed = self.step_ab2(state)?;
        let injected = self.apply_forcing(state)?;
        Ok(StepInfo { injected, max_speed })
    }

    pub fn energies(&self, v: &SpectralField) -> Result<EnergyReport> {
        compute_energies(v, &self.symbols, self.params.nu)
    }

    /// Power of the body force, `(f, Dv) = Σ_k Re⟨f̂, D̂v̂⟩`.
    pub fn body_force_work(&self, v: &SpectralField) -> Result<f64> {
        match &self.body_force {
            None => Ok(0.0),
            Some(f) => f.inner(&self.deconvolved(v)?),
        }
    }

    /// Advances `w = Dv` one explicit step with the `w`-form of the model,
    ///
    /// ```text
    /// D⁻¹F⁻¹ w_t + P(w·∇w) − νΔw = f,
    /// ```
    ///
    /// and compares with `D` applied to one step of the `v`-form from the same
    /// state. Uses the Adams-Bashforth combination when the state carries a
    /// previous right-hand side and forward Euler otherwise. Returns the
    /// max-norm discrepancy relative to `max |Dv|`.
    pub fn voigt_equivalence_check(&self, state: &SolverState) -> Result<f64> {
        let dt = self.params.dt;

        // v-form
        let (rv, _) = self.rhs_of(&state.v, state.step)?;
        let mut v1 = state.v.clone();
        // w-form, with w-form history D̂ · rhs_prev
        let w = self.deconvolved(&state.v)?;
        let (mut rw, _) = self.bracket(&w, state.step)?;
        let dhat = self.symbols.dhat();
        let dw: Vec<f64> = dhat.iter().zip(&self.mass_inv).map(|(d, m)| d * m).collect();
        rw.scale_modes(&dw);
        let mut w1 = w.clone();
        match &state.rhs_prev {
            None => {
                v1.axpy(dt, &rv)?;
                w1.axpy(dt, &rw)?;
            }
            Some(prev) => {
                v1.axpy(1.5 * dt, &rv)?;
                v1.axpy(-0.5 * dt, prev)?;
                let wprev = self.deconvolved(prev)?;
                w1.axpy(1.5 * dt, &rw)?;
                w1.axpy(-0.5 * dt, &wprev)?;
            }
        }
        let dv1 = self.deconvolved(&v1)?;
        let scale = dv1.max_abs().max(w1.max_abs());
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(w1.max_abs_diff(&dv1)? / scale)
    }
}

/// Random divergence-free field with shell spectrum `∝ k⁴ exp(−2(k/k₀)²)`,
/// normalized to kinetic energy `energy`.
pub fn turbulence_initial_condition(
    grid: Grid,
    seed: u64,
    k0: f64,
    energy: f64,
) -> Result<SpectralField> {
    if !(k0 > 0.0 && energy >= 0.0) {
        return Err(RadmError::InvalidParameter(format!(
            "initial spectrum needs k0 > 0 and energy >= 0, got k0 = {k0}, energy = {energy}"
        )));
    }
    let mask = DealiasMask::new(grid);
    let mut rng = CounterRng::new(seed);
    // per-mode amplitude² ∝ E(k)/k², spread over the shell surface
    let mut v = SpectralField::random_solenoidal(&mask, &mut rng, |k| k * (-(k / k0).powi(2)).exp());
    let e: f64 = 0.5
        * v.components()
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>();
    if e > 0.0 {
        v.scale((energy / e).sqrt());
    }
    Ok(v)
}
