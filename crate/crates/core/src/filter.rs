//! Fourier symbols of the Helmholtz filter and van Cittert deconvolution.
//!
//! The Helmholtz filter `F = (I − α²Δ)⁻¹` has symbol `1/(1+α²|k|²)`; van
//! Cittert deconvolution of order `N` is the truncated Neumann series
//! `D_N = Σ_{j=0}^{N} (I − F)^j`. Both are diagonal on the Fourier lattice,
//! so they commute with differentiation and with the Leray projection.

use crate::error::{RadmError, Result};
use crate::spectral::{Grid, SpectralField};

/// Filter radius and van Cittert order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub alpha: f64,
    pub n_deconv: u32,
}

impl FilterParams {
    pub fn new(alpha: f64, n_deconv: u32) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(RadmError::InvalidParameter(format!(
                "filter radius alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Self { alpha, n_deconv })
    }
}

/// `1/(1+α²|k|²)`.
pub fn helmholtz_symbol(ksq: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + alpha * alpha * ksq)
}

/// `1 − F̂ = α²|k|²/(1+α²|k|²)`, formed without cancellation.
fn filter_defect(ksq: f64, alpha: f64) -> f64 {
    let a = alpha * alpha * ksq;
    a / (1.0 + a)
}

/// `D̂_N(k) = Σ_{j=0}^{N} (1 − F̂)^j`, via the closed geometric form
/// `(1 − (1−F̂)^{N+1}) / F̂`, evaluated as a product with `1+α²|k|²`.
/// At `k = 0` (and for `α = 0`) the sum is 1.
pub fn van_cittert_symbol(ksq: f64, alpha: f64, n_deconv: u32) -> f64 {
    let r = filter_defect(ksq, alpha);
    if r == 0.0 {
        return 1.0;
    }
    let d = (1.0 - r.powi(n_deconv as i32 + 1)) * (1.0 + alpha * alpha * ksq);
    // the geometric form can round a hair outside [1, N+1]
    d.clamp(1.0, (n_deconv + 1) as f64)
}

/// `1 − D̂_N F̂ = (α²|k|²/(1+α²|k|²))^{N+1}`.
pub fn deconvolution_residual(ksq: f64, alpha: f64, n_deconv: u32) -> f64 {
    filter_defect(ksq, alpha).powi(n_deconv as i32 + 1)
}

/// A mode-diagonal deconvolution operator, described by its Fourier symbol.
///
/// Van Cittert is the only operator shipped. Implementors are expected to
/// satisfy `d0 <= symbol <= d1` for their own bounds; the solver does not
/// check them.
pub trait DeconvolutionSymbol {
    fn symbol(&self, ksq: f64, alpha: f64) -> f64;
}

/// Van Cittert deconvolution of a fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VanCittert(pub u32);

impl DeconvolutionSymbol for VanCittert {
    fn symbol(&self, ksq: f64, alpha: f64) -> f64 {
        van_cittert_symbol(ksq, alpha, self.0)
    }
}

/// Which diagonal operator [`SymbolTable::apply`] multiplies by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    /// `F̂ = 1/(1+α²|k|²)`
    Filter,
    /// `D̂_N`
    Deconv,
    /// `D̂_N^{1/2}`
    DeconvSqrt,
    /// `1+α²|k|²`
    InverseHelmholtz,
}

/// Per-mode symbols precomputed for one `(grid, α, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    grid: Grid,
    params: FilterParams,
    ksq: Vec<f64>,
    fhat: Vec<f64>,
    dhat: Vec<f64>,
    dsqrt: Vec<f64>,
    inv_helmholtz: Vec<f64>,
}

impl SymbolTable {
    pub fn new(grid: Grid, params: FilterParams) -> Self {
        Self::with_deconvolution(grid, params, &VanCittert(params.n_deconv))
    }

    /// Builds the table for an arbitrary diagonal deconvolution operator.
    pub fn with_deconvolution(grid: Grid, params: FilterParams, deconv: &dyn DeconvolutionSymbol) -> Self {
        let ksq = grid.ksq_table();
        let a = params.alpha;
        let fhat: Vec<f64> = ksq.iter().map(|&q| helmholtz_symbol(q, a)).collect();
        let dhat: Vec<f64> = ksq.iter().map(|&q| deconv.symbol(q, a)).collect();
        let dsqrt = dhat.iter().map(|d| d.sqrt()).collect();
        let inv_helmholtz = ksq.iter().map(|&q| 1.0 + a * a * q).collect();
        Self {
            grid,
            params,
            ksq,
            fhat,
            dhat,
            dsqrt,
            inv_helmholtz,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn params(&self) -> FilterParams {
        self.params
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    pub fn fhat(&self) -> &[f64] {
        &self.fhat
    }

    pub fn dhat(&self) -> &[f64] {
        &self.dhat
    }

    pub fn dsqrt(&self) -> &[f64] {
        &self.dsqrt
    }

    pub fn inverse_helmholtz(&self) -> &[f64] {
        &self.inv_helmholtz
    }

    pub fn values(&self, which: SymbolKind) -> &[f64] {
        match which {
            SymbolKind::Filter => &self.fhat,
            SymbolKind::Deconv => &self.dhat,
            SymbolKind::DeconvSqrt => &self.dsqrt,
            SymbolKind::InverseHelmholtz => &self.inv_helmholtz,
        }
    }

    /// Overwrites one deconvolution symbol entry. Used to inject faults when
    /// exercising the verification suites.
    pub fn perturb_deconv(&mut self, idx: usize, value: f64) {
        self.dhat[idx] = value;
        self.dsqrt[idx] = value.max(0.0).sqrt();
    }

    /// Mode-wise multiplication by the chosen symbol.
    pub fn apply(&self, f: &SpectralField, which: SymbolKind) -> Result<SpectralField> {
        let mut out = f.clone();
        self.apply_mut(&mut out, which)?;
        Ok(out)
    }

    pub fn apply_mut(&self, f: &mut SpectralField, which: SymbolKind) -> Result<()> {
        if f.grid() != self.grid {
            return Err(RadmError::GridMismatch {
                expected: self.grid.n(),
                found: f.grid().n(),
            });
        }
        f.scale_modes(self.values(which));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::spectral::{leray_project, DealiasMask};
    use proptest::prelude::*;

    #[test]
    fn helmholtz_examples() {
        assert_eq!(helmholtz_symbol(0.0, 3.7), 1.0);
        assert_eq!(helmholtz_symbol(1.0, 1.0), 0.5);
        assert_eq!(helmholtz_symbol(123.0, 0.0), 1.0);
    }

    #[test]
    fn van_cittert_examples() {
        for q in [0.0, 1.0, 17.0, 1e6] {
            assert_eq!(van_cittert_symbol(q, 0.7, 0), 1.0);
        }
        assert!((van_cittert_symbol(1.0, 1.0, 1) - 1.5).abs() < 1e-15);
        assert!((van_cittert_symbol(1.0, 1.0, 10) - 1.999_023_437_5).abs() < 1e-15);
        assert_eq!(van_cittert_symbol(0.0, 1.0, 5), 1.0);
    }

    #[test]
    fn van_cittert_matches_term_sum() {
        for &(q, a, n) in &[(1.0, 1.0, 3u32), (9.0, 0.25, 7), (400.0, 1.0 / 16.0, 2), (2.0, 4.0, 20)] {
            let r = filter_defect(q, a);
            let direct: f64 = (0..=n).map(|j| r.powi(j as i32)).sum();
            assert!((van_cittert_symbol(q, a, n) - direct).abs() <= 1e-13 * direct);
        }
    }

    #[test]
    fn residual_examples() {
        assert!((deconvolution_residual(1.0, 1.0, 1) - 0.25).abs() < 1e-16);
        for n in 0..5 {
            assert_eq!(deconvolution_residual(50.0, 0.0, n), 0.0);
        }
    }

    #[test]
    fn large_wavenumber_limit() {
        let mut prev = 0.0;
        for q in [1.0, 10.0, 100.0, 1e3, 1e4, 1e5] {
            let d = van_cittert_symbol(q, 1.0, 3);
            assert!(d >= prev);
            prev = d;
        }
        assert!((van_cittert_symbol(1e4, 1.0, 3) - 4.0).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn lemma_bounds(q in 0u32..2000, a in (1.0f64/64.0)..4.0, n in 0u32..=20) {
            let q = q as f64;
            let d = van_cittert_symbol(q, a, n);
            prop_assert!(d >= 1.0);
            prop_assert!(d <= (n + 1) as f64);
            prop_assert!(d <= 1.0 + a * a * q);
            prop_assert!(van_cittert_symbol(q, a, n + 1) >= d);
        }

        #[test]
        fn residual_identity(q in 0u32..2000, a in (1.0f64/64.0)..4.0, n in 0u32..=20) {
            let q = q as f64;
            let lhs = 1.0 - van_cittert_symbol(q, a, n) * helmholtz_symbol(q, a);
            prop_assert!((lhs - deconvolution_residual(q, a, n)).abs() < 1e-14);
        }
    }

    fn sample_field() -> (SymbolTable, SpectralField) {
        let g = Grid::new(16).unwrap();
        let mask = DealiasMask::new(g);
        let mut rng = CounterRng::new(5);
        let f = SpectralField::random_solenoidal(&mask, &mut rng, |k| (-k / 3.0).exp());
        let t = SymbolTable::new(g, FilterParams::new(0.3, 2).unwrap());
        (t, f)
    }

    #[test]
    fn filter_then_inverse_is_identity() {
        let (t, f) = sample_field();
        let g = t.apply(&t.apply(&f, SymbolKind::Filter).unwrap(), SymbolKind::InverseHelmholtz).unwrap();
        assert!(g.max_abs_diff(&f).unwrap() <= 1e-14 * f.max_abs());
    }

    #[test]
    fn deconv_order_zero_is_identity() {
        let (_, f) = sample_field();
        let t0 = SymbolTable::new(f.grid(), FilterParams::new(0.3, 0).unwrap());
        assert_eq!(t0.apply(&f, SymbolKind::Deconv).unwrap(), f);
    }

    #[test]
    fn sqrt_squared_is_deconv() {
        let (t, f) = sample_field();
        let twice = t.apply(&t.apply(&f, SymbolKind::DeconvSqrt).unwrap(), SymbolKind::DeconvSqrt).unwrap();
        let once = t.apply(&f, SymbolKind::Deconv).unwrap();
        assert!(twice.max_abs_diff(&once).unwrap() <= 1e-14 * once.max_abs());
    }

    #[test]
    fn commutes_with_leray() {
        let (t, f) = sample_field();
        // make the field non-solenoidal so the projection does something
        let mut h = f.clone();
        h.axpy(1.0, &t.apply(&f, SymbolKind::Filter).unwrap()).unwrap();
        let idx = f.grid().index([1, 2, 0]).unwrap();
        let mut c = h.coeff(idx);
        c[0] += num_complex::Complex64::new(0.3, 0.1);
        h.set_pair([1, 2, 0], c).unwrap();
        for which in [SymbolKind::Filter, SymbolKind::Deconv, SymbolKind::DeconvSqrt, SymbolKind::InverseHelmholtz] {
            let a = leray_project(&t.apply(&h, which).unwrap());
            let b = t.apply(&leray_project(&h), which).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() <= 1e-15 * a.max_abs());
        }
    }

    #[test]
    fn table_grid_mismatch() {
        let (t, _) = sample_field();
        let other = SpectralField::zeros(Grid::new(8).unwrap());
        assert!(t.apply(&other, SymbolKind::Filter).is_err());
    }

    #[test]
    fn rejects_negative_alpha() {
        assert!(FilterParams::new(-0.1, 1).is_err());
        assert!(FilterParams::new(f64::NAN, 1).is_err());
    }
}
