//! Self-check suites run by `radm verify`.
//!
//! Each suite returns a pass/fail verdict with the worst measured value. A
//! [`Fault`] can be injected to confirm that the suites notice a broken
//! symbol table or a missing dealiasing mask.

use std::fmt;

use crate::filter::{deconvolution_residual, helmholtz_symbol, van_cittert_symbol, FilterParams, SymbolTable};
use crate::pulsatile::{channel_pde_residual, pipe_ode_residual, PulsatileCase};
use crate::rng::CounterRng;
use crate::solver::{ModelParams, Solver};
use crate::spectral::{brute_force_convect, DealiasMask, Grid, SpectralField, Transforms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// One deconvolution symbol entry is pushed above `N + 1`.
    SymbolPerturbation,
    /// Products are no longer truncated by the 2/3 rule.
    MaskRemoval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst measured value and what it is compared against.
    pub detail: String,
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict}  {:<22} {}", self.name, self.detail)
    }
}

pub fn run_all(fault: Fault) -> Vec<SuiteResult> {
    vec![
        symbol_bounds(fault),
        convolution_oracle(fault),
        conservation(fault),
        pulsatile_residuals(),
    ]
}

fn table(n: usize, alpha: f64, order: u32, fault: Fault) -> SymbolTable {
    let g = Grid::new(n).expect("valid grid");
    let mut t = SymbolTable::new(g, FilterParams::new(alpha, order).expect("valid filter"));
    if fault == Fault::SymbolPerturbation {
        let idx = g.index([2, 1, 0]).expect("on lattice");
        t.perturb_deconv(idx, (order + 1) as f64 + 0.5);
    }
    t
}

fn mask(g: Grid, fault: Fault) -> DealiasMask {
    match fault {
        Fault::MaskRemoval => DealiasMask::without_truncation(g),
        _ => DealiasMask::new(g),
    }
}

/// `1 <= D̂ <= min(N+1, 1+α²|k|²)` and `1 − D̂F̂ = (α²|k|²/(1+α²|k|²))^{N+1}`
/// on random samples and on every entry of precomputed tables.
pub fn symbol_bounds(fault: Fault) -> SuiteResult {
    let mut rng = CounterRng::new(0x5EED);
    let mut violations = 0usize;
    let mut worst_identity: f64 = 0.0;
    let mut check = |q: f64, a: f64, n: u32, d: f64, f: f64| {
        if !(d >= 1.0 && d <= (n + 1) as f64 && d <= 1.0 + a * a * q) {
            violations += 1;
        }
        let r = deconvolution_residual(q, a, n);
        // the operands 1 and D̂F̂ are O(1), so this is relative to their scale
        worst_identity = worst_identity.max((1.0 - d * f - r).abs());
    };
    for _ in 0..10_000 {
        let q = (rng.uniform(0.0, 1.0) * 3.0 * 1024.0f64.powi(2)).floor();
        let a = 2f64.powf(rng.uniform(-6.0, 2.0));
        let n = (rng.next_u64() % 21) as u32;
        check(q, a, n, van_cittert_symbol(q, a, n), helmholtz_symbol(q, a));
    }
    for &(n, a, order) in &[(16, 1.0 / 16.0, 2u32), (16, 1.0, 5), (32, 0.3, 0), (32, 1.0 / 64.0, 20)] {
        let t = table(n, a, order, fault);
        for idx in 0..t.grid().len() {
            check(t.ksq()[idx], a, order, t.dhat()[idx], t.fhat()[idx]);
        }
    }
    SuiteResult {
        name: "symbol-bounds",
        passed: violations == 0 && worst_identity <= 1e-13,
        detail: format!("bound violations {violations}, residual identity {worst_identity:.2e} (tol 1e-13)"),
    }
}

/// Pseudo-spectral `(a·∇)b` against direct Galerkin summation at n = 4, 8.
pub fn convolution_oracle(fault: Fault) -> SuiteResult {
    let mut worst: f64 = 0.0;
    let mut rng = CounterRng::new(0xC0111);
    for n in [4, 8] {
        let g = Grid::new(n).expect("valid grid");
        let tr = Transforms::new(g);
        let keep = DealiasMask::new(g);
        for _ in 0..5 {
            let a = SpectralField::random_solenoidal(&keep, &mut rng, |_| 1.0);
            let b = SpectralField::random_solenoidal(&keep, &mut rng, |_| 1.0);
            let fast = tr.convect(&a, &b, &mask(g, fault)).expect("same grid");
            let slow = brute_force_convect(&a, &b).expect("small grid");
            let scale = slow.max_abs().max(f64::MIN_POSITIVE);
            worst = worst.max(fast.max_abs_diff(&slow).expect("same grid") / scale);
        }
    }
    SuiteResult {
        name: "convolution-oracle",
        passed: worst <= 1e-12,
        detail: format!("max relative difference {worst:.2e} (tol 1e-12)"),
    }
}

/// With ν = 0 and no forcing the model energy is an invariant of the
/// semi-discrete system: `dE_M/dt = Σ D̂(1+α²|k|²) Re⟨v̂, v̂_t⟩` vanishes.
pub fn conservation(fault: Fault) -> SuiteResult {
    let mut worst: f64 = 0.0;
    let mut rng = CounterRng::new(0xC0225);
    for &(n, alpha, order) in &[(8, 0.0, 0u32), (16, 0.25, 0), (16, 1.0 / 16.0, 2), (16, 0.5, 3)] {
        let params = ModelParams::new(n, alpha, order, 0.0, 1e-3).expect("valid params");
        let mut solver = Solver::new(params).expect("valid solver");
        let m = mask(solver.grid(), fault);
        solver = solver.with_mask(m.clone()).expect("same grid");
        for _ in 0..3 {
            let v = SpectralField::random_solenoidal(&m, &mut rng, |k| 1.0 / (1.0 + k));
            let state = solver.initial_state(v).expect("valid state");
            let rate = solver.rhs(&state).expect("finite");
            let (dhat, ih) = (solver.symbols().dhat(), solver.symbols().inverse_helmholtz());
            let mut dot = 0.0;
            let mut scale = 0.0;
            for idx in 0..solver.grid().len() {
                let w = dhat[idx] * ih[idx];
                for (a, b) in state.v.coeff(idx).iter().zip(rate.coeff(idx)) {
                    dot += w * (a.conj() * b).re;
                    scale += w * a.norm() * b.norm();
                }
            }
            if scale > 0.0 {
                worst = worst.max(dot.abs() / scale);
            }
        }
    }
    SuiteResult {
        name: "conservation",
        passed: worst <= 1e-12,
        detail: format!("max relative dE_M/dt {worst:.2e} (tol 1e-12)"),
    }
}

/// Finite-difference residuals of the channel and pipe solutions.
pub fn pulsatile_residuals() -> SuiteResult {
    let mut worst: f64 = 0.0;
    let mut failed = false;
    for alpha in [0.0, 0.1, 1.0] {
        let case = PulsatileCase::new(1.0, 144.0, 1.0, alpha).expect("valid case");
        for t in [0.0, 0.02] {
            worst = worst.max(channel_pde_residual(&case, t, 401));
        }
        match pipe_ode_residual(&case, 401) {
            Ok(r) => worst = worst.max(r),
            Err(_) => failed = true,
        }
    }
    SuiteResult {
        name: "pulsatile-residuals",
        passed: !failed && worst <= 1e-6,
        detail: format!("max residual {worst:.2e} (tol 1e-6)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        for r in run_all(Fault::None) {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn symbol_fault_is_caught() {
        assert!(!symbol_bounds(Fault::SymbolPerturbation).passed);
    }

    #[test]
    fn mask_fault_is_caught() {
        let r = conservation(Fault::MaskRemoval);
        assert!(!r.passed, "{r}");
    }
}
