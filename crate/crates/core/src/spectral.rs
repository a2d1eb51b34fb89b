//! Fourier-lattice representation of periodic vector fields on the 2π-torus.
//!
//! A field is stored as three component arrays of `n³` complex Fourier
//! coefficients in row-major order (`k₁` slowest) with FFT-standard index
//! ordering: index `i` carries wavenumber `i` for `i <= n/2` and `i - n`
//! otherwise. Coefficients are normalized so that
//! `v(x) = Σ_k v̂_k exp(i k·x)`, hence `E = ½ Σ_k |v̂_k|²` per unit volume.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{RadmError, Result};
use crate::rng::CounterRng;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Cubic periodic grid with `n` modes (and `n` collocation points) per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(RadmError::InvalidGrid(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of lattice points, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Collocation spacing `2π / n`.
    pub fn dx(&self) -> f64 {
        std::f64::consts::TAU / self.n as f64
    }

    /// Wavenumber carried by FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT index of wavenumber `k`, or `None` outside `{-n/2+1, …, n/2}`.
    #[inline]
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let h = (self.n / 2) as i64;
        if k > h || k <= -h {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    #[inline]
    pub fn flat(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n + i2) * self.n + i3
    }

    /// Flat index of a lattice wavenumber.
    pub fn index(&self, k: [i64; 3]) -> Option<usize> {
        Some(self.flat(self.index_of(k[0])?, self.index_of(k[1])?, self.index_of(k[2])?))
    }

    /// Wavenumber of a flat index.
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [
            self.wavenumber(idx / (n * n)),
            self.wavenumber((idx / n) % n),
            self.wavenumber(idx % n),
        ]
    }

    /// Flat index of `-k` for the mode stored at `idx` (indices taken mod n).
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let neg = |i: usize| (n - i) % n;
        self.flat(neg(idx / (n * n)), neg((idx / n) % n), neg(idx % n))
    }

    /// True if any component sits on the Nyquist wavenumber `n/2`.
    #[inline]
    pub fn is_nyquist(&self, k: [i64; 3]) -> bool {
        let h = (self.n / 2) as i64;
        k.iter().any(|&c| c == h)
    }

    /// Largest retained wavenumber component under the 2/3 rule.
    ///
    /// This is the largest `K` with `3K < n`, so every quadratic interaction
    /// of retained modes that aliases back lands outside the retained cube.
    /// It equals `floor(n/3)` whenever `n` is not a multiple of 3.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.n - 1) / 3) as i64
    }

    /// Visits every lattice mode as `(flat index, wavenumber)` in storage order.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [i64; 3])) {
        let n = self.n;
        let mut idx = 0;
        for i1 in 0..n {
            let k1 = self.wavenumber(i1);
            for i2 in 0..n {
                let k2 = self.wavenumber(i2);
                for i3 in 0..n {
                    f(idx, [k1, k2, self.wavenumber(i3)]);
                    idx += 1;
                }
            }
        }
    }

    /// `|k|²` for every flat index.
    pub fn ksq_table(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.for_each_mode(|idx, k| out[idx] = ksq(k));
        out
    }
}

#[inline]
pub fn ksq(k: [i64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
}

/// Modes kept by the 2/3-rule truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct DealiasMask {
    grid: Grid,
    keep: Vec<bool>,
}

impl DealiasMask {
    /// Keeps modes whose every component satisfies `|k_i| <= grid.dealias_cutoff()`.
    pub fn new(grid: Grid) -> Self {
        let cut = grid.dealias_cutoff();
        let mut keep = vec![false; grid.len()];
        grid.for_each_mode(|idx, k| keep[idx] = k.iter().all(|c| c.abs() <= cut));
        Self { grid, keep }
    }

    /// Keeps every mode except the Nyquist planes; no dealiasing.
    pub fn without_truncation(grid: Grid) -> Self {
        let mut keep = vec![false; grid.len()];
        grid.for_each_mode(|idx, k| keep[idx] = !grid.is_nyquist(k));
        Self { grid, keep }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn keeps(&self, idx: usize) -> bool {
        self.keep[idx]
    }

    pub fn retained(&self) -> usize {
        self.keep.iter().filter(|&&b| b).count()
    }

    pub fn apply(&self, f: &mut SpectralField) {
        for c in f.comps.iter_mut() {
            for (z, &keep) in c.iter_mut().zip(&self.keep) {
                if !keep {
                    *z = ZERO;
                }
            }
        }
    }
}

/// Complex Fourier coefficients of a real periodic 3-vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    comps: [Vec<Complex64>; 3],
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![ZERO; grid.len()];
        Self {
            grid,
            comps: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_components(grid: Grid, comps: [Vec<Complex64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(RadmError::InvalidParameter(format!(
                    "component length {} does not match n³ = {}",
                    c.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, comps })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.comps[i]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        &mut self.comps
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.comps
    }

    #[inline]
    pub fn coeff(&self, idx: usize) -> [Complex64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    #[inline]
    pub fn set_coeff(&mut self, idx: usize, c: [Complex64; 3]) {
        for (comp, z) in self.comps.iter_mut().zip(c) {
            comp[idx] = z;
        }
    }

    /// Coefficient at wavenumber `k`, if it lies on the lattice.
    pub fn coeff_at(&self, k: [i64; 3]) -> Option<[Complex64; 3]> {
        self.grid.index(k).map(|idx| self.coeff(idx))
    }

    /// Sets `c` at `k` and `conj(c)` at `-k`, keeping the field real.
    pub fn set_pair(&mut self, k: [i64; 3], c: [Complex64; 3]) -> Result<()> {
        let neg = [-k[0], -k[1], -k[2]];
        let (Some(ip), Some(im)) = (self.grid.index(k), self.grid.index(neg)) else {
            return Err(RadmError::InvalidParameter(format!(
                "wavenumber {k:?} has no conjugate partner on the n = {} lattice",
                self.grid.n
            )));
        };
        self.set_coeff(ip, c);
        self.set_coeff(im, c.map(|z| z.conj()));
        Ok(())
    }

    fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(RadmError::GridMismatch {
                expected: self.grid.n,
                found: other.grid.n,
            });
        }
        Ok(())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.check_grid(other)?;
        for (dst, src) in self.comps.iter_mut().zip(&other.comps) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * a;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for c in self.comps.iter_mut() {
            for z in c.iter_mut() {
                *z *= a;
            }
        }
    }

    /// Multiplies every mode by a real per-mode factor.
    pub fn scale_modes(&mut self, factor: &[f64]) {
        for c in self.comps.iter_mut() {
            for (z, &s) in c.iter_mut().zip(factor) {
                *z *= s;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Max-norm of the difference, component-wise.
    pub fn max_abs_diff(&self, other: &SpectralField) -> Result<f64> {
        self.check_grid(other)?;
        let mut m: f64 = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for (x, y) in a.iter().zip(b) {
                m = m.max((x - y).norm());
            }
        }
        Ok(m)
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// `Σ_k Re⟨a(k), b(k)⟩` over all modes, summed in storage order.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.check_grid(other)?;
        let mut s = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for (x, y) in a.iter().zip(b) {
                s += x.re * y.re + x.im * y.im;
            }
        }
        Ok(s)
    }

    /// Largest `|c(-k) - conj c(k)|` over the lattice, excluding Nyquist planes.
    pub fn reality_defect(&self) -> f64 {
        let g = self.grid;
        let mut m: f64 = 0.0;
        g.for_each_mode(|idx, k| {
            if g.is_nyquist(k) {
                return;
            }
            let j = g.conjugate_index(idx);
            for c in &self.comps {
                m = m.max((c[j] - c[idx].conj()).norm());
            }
        });
        m
    }

    /// Largest `|k·c(k)| / |k|` relative to the largest coefficient (0 for a zero field).
    pub fn divergence_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut m: f64 = 0.0;
        self.grid.for_each_mode(|idx, k| {
            let q = ksq(k);
            if q == 0.0 {
                return;
            }
            let c = self.coeff(idx);
            let dot = c[0] * k[0] as f64 + c[1] * k[1] as f64 + c[2] * k[2] as f64;
            m = m.max(dot.norm() / q.sqrt());
        });
        m / scale
    }

    /// Zeroes the mean mode and every Nyquist-plane mode.
    pub fn enforce_lattice_constraints(&mut self) {
        let g = self.grid;
        let comps = &mut self.comps;
        g.for_each_mode(|idx, k| {
            if g.is_nyquist(k) || k == [0, 0, 0] {
                for c in comps.iter_mut() {
                    c[idx] = ZERO;
                }
            }
        });
    }

    /// Random real divergence-free field supported on the retained modes of
    /// `mask`, with per-mode amplitude `amplitude(|k|)` times a Gaussian
    /// vector projected perpendicular to `k`.
    pub fn random_solenoidal(
        mask: &DealiasMask,
        rng: &mut CounterRng,
        amplitude: impl Fn(f64) -> f64,
    ) -> Self {
        let g = mask.grid();
        let mut f = Self::zeros(g);
        let mut modes = Vec::new();
        g.for_each_mode(|idx, k| {
            // one representative per ±k pair
            if mask.keeps(idx) && k > [0, 0, 0] {
                modes.push(k);
            }
        });
        for k in modes {
            let mut c = [ZERO; 3];
            for z in c.iter_mut() {
                *z = Complex64::new(rng.next_normal(), rng.next_normal());
            }
            let kk = [k[0] as f64, k[1] as f64, k[2] as f64];
            let q = ksq(k);
            let dot = c[0] * kk[0] + c[1] * kk[1] + c[2] * kk[2];
            let a = amplitude(q.sqrt());
            for (z, kc) in c.iter_mut().zip(kk) {
                *z = (*z - dot * kc / q) * a;
            }
            f.set_pair(k, c).expect("retained modes have partners");
        }
        f
    }
}

/// Real samples of a vector field on the `n³` collocation grid `x_j = 2πj/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    comps: [Vec<f64>; 3],
}

impl PhysicalField {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            grid,
            comps: [z.clone(), z.clone(), z],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        let n = grid.n();
        let h = grid.dx();
        let mut idx = 0;
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let v = f([i1 as f64 * h, i2 as f64 * h, i3 as f64 * h]);
                    for (c, x) in out.comps.iter_mut().zip(v) {
                        c[idx] = x;
                    }
                    idx += 1;
                }
            }
        }
        out
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    pub fn max_abs_diff(&self, other: &PhysicalField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for rb in (0..rows).step_by(B) {
        for cb in (0..cols).step_by(B) {
            for r in rb..(rb + B).min(rows) {
                for c in cb..(cb + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Planned 3D FFTs and the transform-based operators built on them.
#[derive(Clone)]
pub struct Transforms {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transforms {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transforms").field("grid", &self.grid).finish()
    }
}

impl Transforms {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn check(&self, g: Grid) -> Result<()> {
        if g != self.grid {
            return Err(RadmError::GridMismatch {
                expected: self.grid.n(),
                found: g.n(),
            });
        }
        Ok(())
    }

    /// Unnormalized 3D transform along all axes, in place.
    fn fft3(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let n2 = n * n;
        let scratch_len = fft.get_inplace_scratch_len();

        // fastest axis: contiguous rows
        data.par_chunks_mut(n2).for_each_init(
            || vec![ZERO; scratch_len],
            |scratch, plane| fft.process_with_scratch(plane, scratch),
        );
        // middle axis: transpose each k₁-plane
        data.par_chunks_mut(n2).for_each_init(
            || (vec![ZERO; n2], vec![ZERO; scratch_len]),
            |(tmp, scratch), plane| {
                transpose(plane, tmp, n, n);
                fft.process_with_scratch(tmp, scratch);
                transpose(tmp, plane, n, n);
            },
        );
        // slowest axis: transpose the n × n² view
        let mut tmp = vec![ZERO; data.len()];
        transpose(data, &mut tmp, n, n2);
        tmp.par_chunks_mut(n2).for_each_init(
            || vec![ZERO; scratch_len],
            |scratch, rows| fft.process_with_scratch(rows, scratch),
        );
        transpose(&tmp, data, n2, n);
    }

    /// Physical samples of two real fields from their coefficients, using one
    /// complex transform of `a + i b`.
    fn inverse_pair(&self, a: &[Complex64], b: Option<&[Complex64]>) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<Complex64> = match b {
            Some(b) => a.iter().zip(b).map(|(x, y)| x + I * y).collect(),
            None => a.to_vec(),
        };
        self.fft3(&mut z, &self.inverse);
        let re = z.iter().map(|w| w.re).collect();
        let im = if b.is_some() {
            z.iter().map(|w| w.im).collect()
        } else {
            Vec::new()
        };
        (re, im)
    }

    /// Coefficients of two real sample arrays from one complex transform.
    fn forward_pair(&self, a: &[f64], b: Option<&[f64]>) -> (Vec<Complex64>, Vec<Complex64>) {
        let len = self.grid.len();
        let norm = 1.0 / len as f64;
        let mut z: Vec<Complex64> = match b {
            Some(b) => a
                .iter()
                .zip(b)
                .map(|(&x, &y)| Complex64::new(x, y))
                .collect(),
            None => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        };
        self.fft3(&mut z, &self.forward);
        if b.is_none() {
            for w in z.iter_mut() {
                *w *= norm;
            }
            return (z, Vec::new());
        }
        let g = self.grid;
        let mut fa = vec![ZERO; len];
        let mut fb = vec![ZERO; len];
        for idx in 0..len {
            let zc = z[g.conjugate_index(idx)].conj();
            fa[idx] = (z[idx] + zc) * (0.5 * norm);
            fb[idx] = (z[idx] - zc) * Complex64::new(0.0, -0.5 * norm);
        }
        (fa, fb)
    }

    fn to_physical_unchecked(&self, f: &SpectralField) -> PhysicalField {
        let c = f.components();
        let (u0, u1) = self.inverse_pair(&c[0], Some(&c[1]));
        let (u2, _) = self.inverse_pair(&c[2], None);
        PhysicalField {
            grid: self.grid,
            comps: [u0, u1, u2],
        }
    }

    /// Samples the field on the collocation grid.
    ///
    /// Fails if the coefficients violate the reality condition by more than
    /// `1e-10` relative to the largest coefficient.
    pub fn to_physical(&self, f: &SpectralField) -> Result<PhysicalField> {
        self.check(f.grid())?;
        let defect = f.reality_defect();
        if defect > 1e-10 * f.max_abs().max(f64::MIN_POSITIVE) {
            return Err(RadmError::RealityViolation(defect));
        }
        Ok(self.to_physical_unchecked(f))
    }

    /// Fourier coefficients of sampled data. The Nyquist planes are always
    /// zeroed; the mean mode is zeroed when `mean_free` is set.
    pub fn to_spectral(&self, p: &PhysicalField, mean_free: bool) -> Result<SpectralField> {
        self.check(p.grid())?;
        let (c0, c1) = self.forward_pair(&p.comps[0], Some(&p.comps[1]));
        let (c2, _) = self.forward_pair(&p.comps[2], None);
        let mut f = SpectralField {
            grid: self.grid,
            comps: [c0, c1, c2],
        };
        let g = self.grid;
        let comps = &mut f.comps;
        g.for_each_mode(|idx, k| {
            if g.is_nyquist(k) || (mean_free && k == [0, 0, 0]) {
                for c in comps.iter_mut() {
                    c[idx] = ZERO;
                }
            }
        });
        Ok(f)
    }

    /// Pseudo-spectral `(a·∇)b` with the products formed on the collocation
    /// grid and the result truncated by `mask`.
    pub fn convect(
        &self,
        a: &SpectralField,
        b: &SpectralField,
        mask: &DealiasMask,
    ) -> Result<SpectralField> {
        self.check(a.grid())?;
        self.check(b.grid())?;
        self.check(mask.grid())?;
        let g = self.grid;
        let ap = self.to_physical_unchecked(a);

        let mut out: [Vec<f64>; 3] = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
        let kt = wavenumber_axes(g);
        for (i, acc) in out.iter_mut().enumerate() {
            // ∂_j b_i for j = 0..3
            let bi = b.component(i);
            let deriv = |j: usize| -> Vec<Complex64> {
                bi.iter()
                    .enumerate()
                    .map(|(idx, &z)| z * I * kt[j][idx])
                    .collect()
            };
            let (d0, d1) = self.inverse_pair(&deriv(0), Some(&deriv(1)));
            let (d2, _) = self.inverse_pair(&deriv(2), None);
            for p in 0..g.len() {
                acc[p] = ap.comps[0][p] * d0[p] + ap.comps[1][p] * d1[p] + ap.comps[2][p] * d2[p];
            }
        }
        let (c0, c1) = self.forward_pair(&out[0], Some(&out[1]));
        let (c2, _) = self.forward_pair(&out[2], None);
        let mut f = SpectralField {
            grid: g,
            comps: [c0, c1, c2],
        };
        mask.apply(&mut f);
        Ok(f)
    }

    /// `(u·∇)u` for divergence-free `u`, evaluated in divergence form
    /// `∇·(u⊗u)` from the six distinct products. Agrees with
    /// [`Transforms::convect`]`(u, u)` on retained modes.
    ///
    /// Also returns `max |u|` over the collocation points.
    pub fn convect_solenoidal(
        &self,
        u: &SpectralField,
        mask: &DealiasMask,
    ) -> Result<(SpectralField, f64)> {
        self.check(u.grid())?;
        self.check(mask.grid())?;
        let g = self.grid;
        let up = self.to_physical_unchecked(u);
        let [u0, u1, u2] = &up.comps;
        let umax = (0..g.len())
            .map(|p| (u0[p] * u0[p] + u1[p] * u1[p] + u2[p] * u2[p]).sqrt())
            .fold(0.0, f64::max);

        let prod = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
        let (p00, p01) = self.forward_pair(&prod(u0, u0), Some(&prod(u0, u1)));
        let (p02, p11) = self.forward_pair(&prod(u0, u2), Some(&prod(u1, u1)));
        let (p12, p22) = self.forward_pair(&prod(u1, u2), Some(&prod(u2, u2)));

        let mut f = SpectralField::zeros(g);
        let comps = &mut f.comps;
        g.for_each_mode(|idx, k| {
            if !mask.keeps(idx) {
                return;
            }
            let ik = [I * k[0] as f64, I * k[1] as f64, I * k[2] as f64];
            comps[0][idx] = ik[0] * p00[idx] + ik[1] * p01[idx] + ik[2] * p02[idx];
            comps[1][idx] = ik[0] * p01[idx] + ik[1] * p11[idx] + ik[2] * p12[idx];
            comps[2][idx] = ik[0] * p02[idx] + ik[1] * p12[idx] + ik[2] * p22[idx];
        });
        Ok((f, umax))
    }

    /// Largest pointwise speed `|u(x)|` on the collocation grid.
    pub fn max_speed(&self, u: &SpectralField) -> Result<f64> {
        self.check(u.grid())?;
        let p = self.to_physical_unchecked(u);
        Ok((0..self.grid.len())
            .map(|i| (0..3).map(|c| p.comps[c][i].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max))
    }
}

/// Per-index wavenumber components along each axis.
fn wavenumber_axes(g: Grid) -> [Vec<f64>; 3] {
    let mut k = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    g.for_each_mode(|idx, m| {
        for j in 0..3 {
            k[j][idx] = m[j] as f64;
        }
    });
    k
}

/// Helmholtz-Leray projection in place:
/// `c(k) ← c(k) − k (k·c(k)) / |k|²`, with the mean mode left at zero.
pub fn leray_project_mut(f: &mut SpectralField) {
    let g = f.grid();
    let comps = &mut f.comps;
    g.for_each_mode(|idx, k| {
        let q = ksq(k);
        if q == 0.0 {
            for c in comps.iter_mut() {
                c[idx] = ZERO;
            }
            return;
        }
        let kk = [k[0] as f64, k[1] as f64, k[2] as f64];
        let dot = comps[0][idx] * kk[0] + comps[1][idx] * kk[1] + comps[2][idx] * kk[2];
        let s = dot / q;
        for (c, kc) in comps.iter_mut().zip(kk) {
            c[idx] -= s * kc;
        }
    });
}

pub fn leray_project(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    leray_project_mut(&mut out);
    out
}

/// Direct evaluation of the truncated Galerkin convolution
/// `Σ_{p+q=k} i (q·â_p) b̂_q` over modes kept by the 2/3 rule.
///
/// Reference semantics for [`Transforms::convect`]; limited to `n <= 8`.
pub fn brute_force_convect(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    let g = a.grid();
    if b.grid() != g {
        return Err(RadmError::GridMismatch {
            expected: g.n(),
            found: b.grid().n(),
        });
    }
    if g.n() > 8 {
        return Err(RadmError::OracleTooLarge(g.n()));
    }
    let cut = g.dealias_cutoff();
    let range = || -cut..=cut;
    let retained = |k: [i64; 3]| k.iter().all(|c| c.abs() <= cut);
    let mut out = SpectralField::zeros(g);
    for k1 in range() {
        for k2 in range() {
            for k3 in range() {
                let k = [k1, k2, k3];
                let mut acc = [ZERO; 3];
                for p1 in range() {
                    for p2 in range() {
                        for p3 in range() {
                            let p = [p1, p2, p3];
                            let q = [k1 - p1, k2 - p2, k3 - p3];
                            if !retained(q) {
                                continue;
                            }
                            let ap = a.coeff_at(p).expect("retained");
                            let bq = b.coeff_at(q).expect("retained");
                            let qa = ap[0] * q[0] as f64 + ap[1] * q[1] as f64 + ap[2] * q[2] as f64;
                            for (s, bc) in acc.iter_mut().zip(bq) {
                                *s += I * qa * bc;
                            }
                        }
                    }
                }
                let idx = g.index(k).expect("retained");
                out.set_coeff(idx, acc);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(n: usize, seed: u64) -> SpectralField {
        let g = Grid::new(n).unwrap();
        let mask = DealiasMask::new(g);
        let mut rng = CounterRng::new(seed);
        SpectralField::random_solenoidal(&mask, &mut rng, |k| 1.0 / (1.0 + k * k))
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(3).is_err());
        assert!(Grid::new(2).is_err());
        assert!(Grid::new(7).is_err());
        assert!(Grid::new(4).is_ok());
    }

    #[test]
    fn wavenumber_index_roundtrip() {
        let g = Grid::new(8).unwrap();
        for i in 0..8 {
            assert_eq!(g.index_of(g.wavenumber(i)), Some(i));
        }
        assert_eq!(g.wavenumber(4), 4);
        assert_eq!(g.wavenumber(5), -3);
        assert_eq!(g.index_of(-4), None);
        let idx = g.index([1, -2, 3]).unwrap();
        assert_eq!(g.mode(idx), [1, -2, 3]);
        assert_eq!(g.mode(g.conjugate_index(idx)), [-1, 2, -3]);
    }

    #[test]
    fn dealias_cutoff_values() {
        assert_eq!(Grid::new(4).unwrap().dealias_cutoff(), 1);
        assert_eq!(Grid::new(8).unwrap().dealias_cutoff(), 2);
        assert_eq!(Grid::new(32).unwrap().dealias_cutoff(), 10);
        assert_eq!(Grid::new(64).unwrap().dealias_cutoff(), 21);
        // n divisible by 3 stays strictly below n/3
        assert_eq!(Grid::new(48).unwrap().dealias_cutoff(), 15);
    }

    #[test]
    fn mask_is_symmetric() {
        for n in [4, 6, 8, 16] {
            let g = Grid::new(n).unwrap();
            let m = DealiasMask::new(g);
            for idx in 0..g.len() {
                assert_eq!(m.keeps(idx), m.keeps(g.conjugate_index(idx)));
            }
        }
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = Grid::new(8).unwrap();
        let t = Transforms::new(g);
        let p = t.to_physical(&SpectralField::zeros(g)).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn single_pair_is_cosine() {
        let g = Grid::new(8).unwrap();
        let t = Transforms::new(g);
        let mut f = SpectralField::zeros(g);
        f.set_pair([1, 0, 0], [c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
        let p = t.to_physical(&f).unwrap();
        let expect = PhysicalField::from_fn(g, |x| [0.0, x[0].cos(), 0.0]);
        assert!(p.max_abs_diff(&expect) < 1e-14);

        let back = t.to_spectral(&expect, true).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-15);
    }

    #[test]
    fn constant_field_with_mean_removal_is_zero() {
        let g = Grid::new(8).unwrap();
        let t = Transforms::new(g);
        let p = PhysicalField::from_fn(g, |_| [1.5, -2.0, 0.25]);
        assert!(t.to_spectral(&p, true).unwrap().max_abs() < 1e-15);
        let kept = t.to_spectral(&p, false).unwrap();
        assert!((kept.coeff_at([0, 0, 0]).unwrap()[1] - c(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reality_violation_is_rejected() {
        let g = Grid::new(8).unwrap();
        let t = Transforms::new(g);
        let mut f = SpectralField::zeros(g);
        let idx = g.index([1, 0, 0]).unwrap();
        f.set_coeff(idx, [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(t.to_physical(&f), Err(RadmError::RealityViolation(_))));
    }

    #[test]
    fn roundtrips_are_identity() {
        for n in [4, 8, 16, 32] {
            let f = random_field(n, n as u64);
            let t = Transforms::new(f.grid());
            let p = t.to_physical(&f).unwrap();
            let back = t.to_spectral(&p, true).unwrap();
            let scale = f.max_abs();
            assert!(back.max_abs_diff(&f).unwrap() <= 1e-12 * scale, "n = {n}");
            let p2 = t.to_physical(&back).unwrap();
            assert!(p2.max_abs_diff(&p) <= 1e-12 * p.max_abs(), "n = {n}");
        }
    }

    #[test]
    fn leray_axis_aligned() {
        let g = Grid::new(8).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set_pair([1, 0, 0], [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let p = leray_project(&f);
        let got = p.coeff_at([1, 0, 0]).unwrap();
        assert_eq!(got, [c(0.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
    }

    #[test]
    fn leray_diagonal_mode() {
        let g = Grid::new(8).unwrap();
        let mut f = SpectralField::zeros(g);
        f.set_pair([1, 1, 0], [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let got = leray_project(&f).coeff_at([1, 1, 0]).unwrap();
        assert!((got[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((got[1] - c(-0.5, 0.0)).norm() < 1e-15);
        assert_eq!(got[2], c(0.0, 0.0));
    }

    #[test]
    fn leray_fixes_solenoidal_fields() {
        let f = random_field(16, 3);
        let p = leray_project(&f);
        assert!(p.max_abs_diff(&f).unwrap() <= 1e-14 * f.max_abs());
    }

    #[test]
    fn convect_of_zero_is_zero() {
        let b = random_field(8, 1);
        let g = b.grid();
        let t = Transforms::new(g);
        let out = t.convect(&SpectralField::zeros(g), &b, &DealiasMask::new(g)).unwrap();
        assert!(out.max_abs() < 1e-15);
    }

    #[test]
    fn convect_grid_mismatch() {
        let a = random_field(8, 1);
        let b = random_field(4, 2);
        let t = Transforms::new(a.grid());
        let err = t.convect(&a, &b, &DealiasMask::new(a.grid()));
        assert!(matches!(err, Err(RadmError::GridMismatch { .. })));
    }

    #[test]
    fn brute_force_rejects_large_grids() {
        let a = random_field(16, 1);
        assert!(matches!(brute_force_convect(&a, &a), Err(RadmError::OracleTooLarge(16))));
    }

    #[test]
    fn taylor_green_pair() {
        // a = (sin x cos y, -cos x sin y, 0), b = a: (a·∇)a = (½ sin 2x, ½ sin 2y, 0)
        // expanding the four-mode products by hand.
        let g = Grid::new(8).unwrap();
        let t = Transforms::new(g);
        let p = PhysicalField::from_fn(g, |x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]);
        let a = t.to_spectral(&p, true).unwrap();
        let mask = DealiasMask::new(g);
        let got = t.convect(&a, &a, &mask).unwrap();
        let expect = PhysicalField::from_fn(g, |x| [0.5 * (2.0 * x[0]).sin(), 0.5 * (2.0 * x[1]).sin(), 0.0]);
        let expect = t.to_spectral(&expect, true).unwrap();
        assert!(got.max_abs_diff(&expect).unwrap() < 1e-14);
        let brute = brute_force_convect(&a, &a).unwrap();
        assert!(brute.max_abs_diff(&expect).unwrap() < 1e-14);
    }

    #[test]
    fn divergence_form_matches_convective_form() {
        let u = random_field(16, 11);
        let g = u.grid();
        let t = Transforms::new(g);
        let mask = DealiasMask::new(g);
        let a = t.convect(&u, &u, &mask).unwrap();
        let (b, _) = t.convect_solenoidal(&u, &mask).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12 * a.max_abs());
    }
}
