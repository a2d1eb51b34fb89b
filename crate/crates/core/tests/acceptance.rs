//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any of them fails.
//!
//! `RADM_ACCEPTANCE=3,7` restricts the run to the listed criteria.

use std::time::Instant;

use radm::config::{Model, RunConfig};
use radm::diagnostics::{balance_residual, BalanceSample, Spectrum};
use radm::filter::{deconvolution_residual, helmholtz_symbol, van_cittert_symbol};
use radm::pulsatile::{
    annular_analysis, channel_pde_residual, pipe_ode_residual, ChannelModes, PulsatileCase,
};
use radm::rng::CounterRng;
use radm::run::run;
use radm::solver::{turbulence_initial_condition, ModelParams, Solver, SolverState};
use radm::spectral::{brute_force_convect, DealiasMask, Grid, SpectralField, Transforms};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Random `(|k|², α, N)` triples: lattice vectors with components in
/// `[−128, 128]`, `α` uniform in `[1/64, 4]`, `N` in `0..=20`.
fn symbol_samples() -> Vec<(f64, f64, u32)> {
    let mut rng = CounterRng::new(20_240_101);
    (0..10_000)
        .map(|_| {
            let mut q = 0.0;
            for _ in 0..3 {
                let c = (rng.next_u64() % 257) as f64 - 128.0;
                q += c * c;
            }
            let a = rng.uniform(1.0 / 64.0, 4.0);
            let n = (rng.next_u64() % 21) as u32;
            (q, a, n)
        })
        .collect()
}

fn c1_symbol_bounds() -> Outcome {
    let mut bad = 0;
    for (q, a, n) in symbol_samples() {
        let d = van_cittert_symbol(q, a, n);
        if !(1.0 <= d && d <= ((n + 1) as f64).min(1.0 + a * a * q)) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} of 10000 samples outside [1, min(N+1, 1+a^2k^2)]"))
}

fn c2_residual_identity() -> Outcome {
    // 1 − D̂F̂ is a difference of O(1) quantities; the error is measured
    // against that scale.
    let mut worst: f64 = 0.0;
    for (q, a, n) in symbol_samples() {
        let lhs = 1.0 - van_cittert_symbol(q, a, n) * helmholtz_symbol(q, a);
        worst = worst.max((lhs - deconvolution_residual(q, a, n)).abs());
    }
    outcome(worst <= 1e-13, format!("max |1 - DF - r^(N+1)| = {worst:.2e} (tol 1e-13)"))
}

fn c3_convolution_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = CounterRng::new(3);
    for n in [4, 8] {
        let g = Grid::new(n).unwrap();
        let mask = DealiasMask::new(g);
        let tr = Transforms::new(g);
        for _ in 0..20 {
            let a = SpectralField::random_solenoidal(&mask, &mut rng, |_| 1.0);
            let b = SpectralField::random_solenoidal(&mask, &mut rng, |_| 1.0);
            let fast = tr.convect(&a, &b, &mask).unwrap();
            let slow = brute_force_convect(&a, &b).unwrap();
            worst = worst.max(fast.max_abs_diff(&slow).unwrap() / slow.max_abs());
        }
    }
    outcome(worst <= 1e-12, format!("20 trials each at n=4,8: max relative difference {worst:.2e} (tol 1e-12)"))
}

/// `|E_M(T) − E_M(0)| / E_M(0)` for an inviscid unforced run to `T = 0.2`.
fn inviscid_drift(dt: f64) -> f64 {
    let steps = (0.2 / dt).round() as usize;
    let solver = Solver::new(ModelParams::new(32, 1.0 / 16.0, 2, 0.0, dt).unwrap()).unwrap();
    let v = turbulence_initial_condition(solver.grid(), 1, 3.0, 0.5).unwrap();
    let mut st = solver.initial_state(v).unwrap();
    let e0 = solver.energies(&st.v).unwrap().model;
    for _ in 0..steps {
        solver.step(&mut st).unwrap();
    }
    (solver.energies(&st.v).unwrap().model - e0).abs() / e0
}

fn c4_inviscid_conservation() -> Outcome {
    let coarse = inviscid_drift(1e-3);
    let fine = inviscid_drift(5e-4);
    let ratio = coarse / fine;
    outcome(
        (3.2..=4.8).contains(&ratio),
        format!("drift {coarse:.3e} (dt=1e-3, 200 steps) vs {fine:.3e} (dt=5e-4, 400 steps): ratio {ratio:.3} (want [3.2, 4.8])"),
    )
}

fn viscous_balance(dt: f64) -> f64 {
    let steps = (0.2 / dt).round() as usize;
    let solver = Solver::new(ModelParams::new(32, 1.0 / 16.0, 2, 0.01, dt).unwrap()).unwrap();
    let v = turbulence_initial_condition(solver.grid(), 5, 3.0, 0.5).unwrap();
    let mut st = solver.initial_state(v).unwrap();
    let sample = |solver: &Solver, st: &SolverState| BalanceSample {
        time: st.time,
        report: solver.energies(&st.v).unwrap(),
        work: solver.body_force_work(&st.v).unwrap(),
    };
    let mut history = vec![sample(&solver, &st)];
    for _ in 0..steps {
        solver.step(&mut st).unwrap();
        history.push(sample(&solver, &st));
    }
    balance_residual(&history)
}

fn c5_viscous_balance() -> Outcome {
    let coarse = viscous_balance(1e-3);
    let fine = viscous_balance(5e-4);
    let ratio = coarse / fine;
    outcome(
        coarse <= 1e-4 && (3.2..=4.8).contains(&ratio),
        format!("residual {coarse:.3e} at dt=1e-3 (tol 1e-4), {fine:.3e} at dt=5e-4: ratio {ratio:.3} (want [3.2, 4.8])"),
    )
}

fn c6_golden_values() -> Outcome {
    let case = |a: f64| PulsatileCase::new(1.0, 144.0, 1.0, a).unwrap();
    let wo = case(0.0).womersley();
    let a1 = case(1.0).alpha_womersley();
    let a01 = case(0.1).alpha_womersley();
    let ok = wo == 12.0 && (a1 - 0.999988).abs() <= 1e-5 && (a01 - 9.06295).abs() <= 1e-4;
    outcome(ok, format!("Wo = {wo}, alpha-Wo(1) = {a1:.7}, alpha-Wo(0.1) = {a01:.7}"))
}

fn c7_annular_effect() -> Outcome {
    let ns = annular_analysis(&PulsatileCase::new(1.0, 144.0, 1.0, 0.0).unwrap(), 0.0, 2001).unwrap();
    let voigt = annular_analysis(&PulsatileCase::new(1.0, 144.0, 1.0, 1.0).unwrap(), 0.0, 2001).unwrap();
    let ok = ns.annular(1.0) && ns.reverses && !voigt.annular(1.0) && !voigt.reverses;
    outcome(
        ok,
        format!(
            "alpha=0: argmax {:.3}, reversal {}; alpha=1: argmax {:.3}, reversal {}",
            ns.argmax, ns.reverses, voigt.argmax, voigt.reverses
        ),
    )
}

fn c8_pulsatile_residuals() -> Outcome {
    let mut channel: f64 = 0.0;
    let mut pipe: f64 = 0.0;
    for a in [0.0, 0.1, 1.0] {
        let case = PulsatileCase::new(1.0, 144.0, 1.0, a).unwrap();
        for t in [0.0, 0.01, 0.02, 0.03] {
            channel = channel.max(channel_pde_residual(&case, t, 401));
        }
        pipe = pipe.max(pipe_ode_residual(&case, 401).unwrap());
    }
    outcome(
        channel <= 1e-6 && pipe <= 1e-6,
        format!("channel PDE residual {channel:.2e}, pipe ODE residual {pipe:.2e} (tol 1e-6)"),
    )
}

/// Integral length `L = (π / 2u'²) Σ E(k)/k` with `u'² = 2E/3`.
fn integral_scale(s: &Spectrum) -> (f64, f64) {
    let e = s.total();
    let u2 = 2.0 * e / 3.0;
    let l = std::f64::consts::PI / (2.0 * u2) * s.kinetic.iter().enumerate().map(|(i, e)| e / (i + 1) as f64).sum::<f64>();
    (l, u2.sqrt())
}

fn c9_spectra_shape() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        model: Model::Radm,
        n: 64,
        alpha: 1.0 / 16.0,
        nu: 0.005,
        deconv_order: 2,
        dt: 0.0025,
        steps: 4000,
        forcing: vec![(1, 1.5), (2, 1.5)],
        seed: 9,
        output_dir: dir.path().to_path_buf(),
        spectrum_interval: 50,
        init_energy: 3.0,
        slope_bands: vec![(4, 8), (16, 21)],
        ..RunConfig::default()
    };
    let s = run(&config).unwrap();
    let low = s.slopes[0].2.unwrap_or(f64::NAN);
    let high = s.slopes[1].2.unwrap_or(f64::NAN);
    let (l, u) = integral_scale(&s.spectrum);
    let turnovers = s.time / (l / u);
    let ok = (-2.1..=-1.2).contains(&low) && high <= low - 0.6 && turnovers >= 20.0;
    outcome(
        ok,
        format!("slope[4,8] = {low:.3} (want [-2.1, -1.2]), slope[16,21] = {high:.3} (want <= low - 0.6), {turnovers:.1} turnover times"),
    )
}

fn c10_order_monotonicity() -> Outcome {
    let mut means = Vec::new();
    for order in 0..=2u32 {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            model: Model::Radm,
            n: 32,
            alpha: 1.0 / 8.0,
            nu: 0.005,
            deconv_order: order,
            dt: 0.0025,
            steps: 4000,
            forcing: vec![(1, 1.5), (2, 1.5)],
            seed: 10,
            output_dir: dir.path().to_path_buf(),
            init_energy: 3.0,
            ..RunConfig::default()
        };
        means.push(run(&config).unwrap().mean_kinetic);
    }
    let ok = means.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    outcome(
        ok,
        format!("time-averaged E for N=0,1,2: {:.5}, {:.5}, {:.5} (nonincreasing within 5%)", means[0], means[1], means[2]),
    )
}

fn c11_voigt_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for order in 0..=2u32 {
        let solver = Solver::new(ModelParams::new(16, 1.0 / 16.0, order, 0.01, 1e-3).unwrap()).unwrap();
        for seed in 0..10u64 {
            let v = turbulence_initial_condition(solver.grid(), 100 + seed, 3.0, 0.5).unwrap();
            let mut st = solver.initial_state(v).unwrap();
            // half the states carry Adams-Bashforth history
            for _ in 0..(seed % 2) * 3 {
                solver.step(&mut st).unwrap();
            }
            worst = worst.max(solver.voigt_equivalence_check(&st).unwrap());
        }
    }
    outcome(worst <= 1e-12, format!("30 states, N=0,1,2: max residual {worst:.2e} (tol 1e-12)"))
}

/// Crank-Nicolson solve of `(1 − α²∂ₓ²) w_t − ν w_xx = 1` on `(−R, R)` with
/// homogeneous Dirichlet data, returning interior values at each requested
/// time.
fn crank_nicolson(r: f64, nu: f64, alpha: f64, w0: impl Fn(f64) -> f64, cells: usize, dt: f64, times: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = cells - 1;
    let h = 2.0 * r / cells as f64;
    let xs: Vec<f64> = (1..=m).map(|i| -r + i as f64 * h).collect();
    let mut w: Vec<f64> = xs.iter().map(|&x| w0(x)).collect();
    // M = I − α²D₂ and K = νD₂ with D₂ = tridiag(1, −2, 1)/h²
    let (m_diag, m_off) = (1.0 + 2.0 * alpha * alpha / (h * h), -alpha * alpha / (h * h));
    let (k_diag, k_off) = (-2.0 * nu / (h * h), nu / (h * h));
    let (l_diag, l_off) = (m_diag - 0.5 * dt * k_diag, m_off - 0.5 * dt * k_off);
    let (r_diag, r_off) = (m_diag + 0.5 * dt * k_diag, m_off + 0.5 * dt * k_off);
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut rhs = vec![0.0; m];
    let mut c = vec![0.0; m];
    for &target in times {
        let steps = ((target - t) / dt).round() as usize;
        for _ in 0..steps {
            for i in 0..m {
                let left = if i > 0 { w[i - 1] } else { 0.0 };
                let right = if i + 1 < m { w[i + 1] } else { 0.0 };
                rhs[i] = r_diag * w[i] + r_off * (left + right) + dt;
            }
            // Thomas algorithm for the constant tridiagonal system
            c[0] = l_off / l_diag;
            rhs[0] /= l_diag;
            for i in 1..m {
                let denom = l_diag - l_off * c[i - 1];
                c[i] = l_off / denom;
                rhs[i] = (rhs[i] - l_off * rhs[i - 1]) / denom;
            }
            w[m - 1] = rhs[m - 1];
            for i in (0..m - 1).rev() {
                w[i] = rhs[i] - c[i] * w[i + 1];
            }
        }
        t += steps as f64 * dt;
        out.push(w.clone());
    }
    (xs, out)
}

fn c12_eigenmode_oracle() -> Outcome {
    let (r, nu) = (1.0, 0.5);
    let w0 = |x: f64| 0.5 * (1.0 - x * x).powi(2) * (1.0 + 0.3 * x);
    let times = [0.1, 1.0, 10.0];
    let mut worst: f64 = 0.0;
    for alpha in [0.1, 0.25, 1.0] {
        let modes = ChannelModes::project(r, nu, alpha, 1500, 24_000, w0);
        let (xs, profiles) = crank_nicolson(r, nu, alpha, w0, 2000, 5e-4, &times);
        for (&t, w) in times.iter().zip(&profiles) {
            for (i, (&x, &wc)) in xs.iter().zip(w).enumerate() {
                if i % 10 != 9 {
                    continue;
                }
                worst = worst.max((modes.evaluate(t, x) - wc).abs());
            }
        }
    }
    outcome(worst <= 1e-4, format!("alpha=0.1,0.25,1 at t=0.1,1,10: max difference {worst:.2e} (tol 1e-4)"))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("RADM_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 12] = [
        (1, "symbol bounds", c1_symbol_bounds),
        (2, "deconvolution residual identity", c2_residual_identity),
        (3, "convolution oracle", c3_convolution_oracle),
        (4, "inviscid conservation", c4_inviscid_conservation),
        (5, "viscous balance", c5_viscous_balance),
        (6, "pulsatile golden values", c6_golden_values),
        (7, "annular effect and reversal", c7_annular_effect),
        (8, "channel and pipe residuals", c8_pulsatile_residuals),
        (9, "spectra shape", c9_spectra_shape),
        (10, "monotonicity in N", c10_order_monotonicity),
        (11, "Voigt-form equivalence", c11_voigt_equivalence),
        (12, "eigenmode dual oracle", c12_eigenmode_oracle),
    ];
    let mut failures = 0;
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict}  {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
