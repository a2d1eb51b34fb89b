//! Zeroth-order Bessel function of complex argument by its power series
//! `J₀(z) = Σ_m (−z²/4)^m / (m!)²`.
//!
//! The series is first summed in double precision with compensated
//! summation together with a running rounding-error bound. When the bound
//! exceeds `1e-13` relative to the sum (strong cancellation, e.g. large real
//! arguments or points near a zero), the series is re-summed in 256-bit
//! fixed-point integer arithmetic, which is exact to far below double
//! precision on the whole disk `|z| <= 50`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{RadmError, Result};

/// Largest accepted `|z|`.
pub const MAX_ARGUMENT: f64 = 50.0;

const FRACTION_BITS: usize = 256;
const MAX_TERMS: u64 = 1000;

pub fn bessel_j0(z: Complex64) -> Result<Complex64> {
    let r = z.norm();
    if !(r <= MAX_ARGUMENT) {
        return Err(RadmError::BesselOutOfRange(r));
    }
    let (sum, err_bound) = series_f64(z);
    if err_bound <= 1e-13 * sum.norm() {
        return Ok(sum);
    }
    Ok(series_fixed_point(z))
}

/// Compensated double-precision series and a bound on its rounding error.
fn series_f64(z: Complex64) -> (Complex64, f64) {
    let w = -z * z * 0.25;
    let wn = w.norm();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut comp = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut m = 0u64;
    loop {
        m += 1;
        term = term * w / (m * m) as f64;
        // Kahan step on both parts
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        err += term.norm() * (4 * m + 4) as f64 * f64::EPSILON;
        let past_peak = (m * m) as f64 > wn;
        if term.norm() == 0.0 || (past_peak && term.norm() <= 1e-18 * sum.norm()) || m >= MAX_TERMS {
            break;
        }
    }
    (sum, err + 2.0 * f64::EPSILON * sum.norm())
}

fn to_fixed(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1i8 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let (mant, exp) = if exp == 0 {
        ((bits & 0xf_ffff_ffff_ffff) << 1, -1075)
    } else {
        ((bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000, exp - 1075)
    };
    let shift = exp + FRACTION_BITS as i64;
    let m = BigInt::from(mant);
    let v = if shift >= 0 { m << shift as usize } else { m >> (-shift) as usize };
    if sign < 0 {
        -v
    } else {
        v
    }
}

fn from_fixed(v: &BigInt) -> f64 {
    // exact power-of-two rescaling
    v.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(FRACTION_BITS as i32))
}

/// Series summed in fixed point with `FRACTION_BITS` fractional bits.
fn series_fixed_point(z: Complex64) -> Complex64 {
    let (a, b) = (to_fixed(z.re), to_fixed(z.im));
    // w = −z²/4
    let wr: BigInt = -((&a * &a - &b * &b) >> (FRACTION_BITS + 2));
    let wi: BigInt = -((&a * &b) >> (FRACTION_BITS + 1));
    let wn = (from_fixed(&wr).powi(2) + from_fixed(&wi).powi(2)).sqrt();

    let one = BigInt::from(1u8) << FRACTION_BITS;
    let (mut tr, mut ti) = (one.clone(), BigInt::zero());
    let (mut sr, mut si) = (one, BigInt::zero());
    for m in 1..MAX_TERMS {
        let nr = (&tr * &wr - &ti * &wi) >> FRACTION_BITS;
        let ni = (&tr * &wi + &ti * &wr) >> FRACTION_BITS;
        let d = BigInt::from(m * m);
        tr = nr / &d;
        ti = ni / &d;
        sr += &tr;
        si += &ti;
        if (m * m) as f64 > wn && tr.abs().bits() <= 8 && ti.abs().bits() <= 8 {
            break;
        }
    }
    Complex64::new(from_fixed(&sr), from_fixed(&si))
}
