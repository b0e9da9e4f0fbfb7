//! Scaled complementary error function erfcx(x) = e^{x²} erfc(x).
//!
//! The partition kernel is f(ω) = ½√(π/A)·erfcx(Bω/(2√A)); the scaled form
//! never materializes e^{+x²}-type overflow, and for the positive arguments
//! used here erfcx decays smoothly from 1 toward the 1/(√π x) asymptote.
//!
//! Evaluation switches at two documented points:
//! - x ≤ 1: e^{x²}(1 − erf(x)) with erf from its alternating Maclaurin
//!   series (the series is fully converged at double precision by k ≈ 25,
//!   and erfc(1) ≈ 0.157 keeps the 1 − erf cancellation below one digit);
//! - 1 < x ≤ 5e7: trapezoidal expansion of the integral representation
//!   erfcx(x) = (2x/π)∫₀^∞ e^{−t²}/(x²+t²) dt with step h = 1/2; for
//!   x < π/h the integrand's pole at t = ix sits inside the summation
//!   strip and contributes the residue term 2e^{x²}/(e^{2πx/h} − 1),
//!   which is subtracted (beyond π/h it is absent); the remaining
//!   discretization error is O(e^{−π²/h²}) ≈ 7e−18, and 13 terms cover
//!   the Gaussian to below 1e−18;
//! - x > 5e7: two-term asymptote (1 − 1/(2x²))/(√π x), whose next term is
//!   below 1e−31 there.
//!
//! Negative arguments use the reflection erfcx(−x) = 2e^{x²} − erfcx(x)
//! (overflowing to +inf below x ≈ −26.6; spectra are positive so this
//! branch is never hot).
//!
//! A double-double evaluation (`erfcx_dd`) is provided for x ≥ 7 through
//! the asymptotic series: its truncation floor e^{−x²} is below double-double
//! resolution from x ≈ 8.6 and below 5e−22 already at x = 7. The
//! ill-conditioned determinant regimes that need extended-precision matrix
//! entries sit at large kernel arguments, where the series applies.

use super::dd::Dd;
use std::f64::consts::PI;

/// Trapezoidal step of the mid-range rule.
const H: f64 = 0.5;
/// Number of trapezoidal terms; e^{−(13·H)²} ≈ 4.5e−19.
const K_MAX: usize = 13;
/// Switch points between the three branches.
const SWITCH_LOW: f64 = 1.0;
const SWITCH_HIGH: f64 = 5e7;

/// erf(x) by the alternating Maclaurin series; used only for |x| ≤ 1.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..=40 {
        term *= -x2 / k as f64;
        let contrib = term / (2 * k + 1) as f64;
        sum += contrib;
        if contrib.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / PI.sqrt()
}

/// e^{x²} erfc(x) to relative accuracy ≤ 1e−13 for all x ≥ 0.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    if x < 0.0 {
        // reflection; e^{x²} overflows (to +inf) once x < −26.7
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x <= SWITCH_LOW {
        return (x * x).exp() * (1.0 - erf_series(x));
    }
    if x <= SWITCH_HIGH {
        let x2 = x * x;
        let mut sum = 0.5 / x2;
        for k in 1..=K_MAX {
            let kh = k as f64 * H;
            sum += (-kh * kh).exp() / (x2 + kh * kh);
        }
        let mut v = 2.0 * H * x / PI * sum;
        if x < PI / H {
            // residue of the pole at t = ix, present only while it lies
            // inside the summation strip; e^{x²} ≤ e^{39.5} here, no overflow
            v -= 2.0 * x2.exp() / ((2.0 * PI * x / H).exp() - 1.0);
        }
        return v;
    }
    (1.0 - 0.5 / (x * x)) / (PI.sqrt() * x)
}

/// √π split into double-double limbs.
const SQRT_PI_DD: Dd = Dd {
    hi: 1.772453850905516,
    lo: -7.666586499825799e-17,
};

/// Smallest argument served by [`erfcx_dd`]. The asymptotic series truncates
/// at a term of order e^{−x²} relative: full double-double resolution
/// (~1e−32) from x ≈ 8.6 upward, and still ~5e−22 at x = 7, far below the
/// 1e−16 entry rounding of the plain double path it replaces. Below 7 the
/// gain over promoted doubles stops being decisive.
pub(crate) const ERFCX_DD_MIN_X: f64 = 7.0;

/// erfcx in double-double through the asymptotic series
/// erfcx(x) = (√π x)⁻¹ Σ_k (−1)^k (2k−1)!!/(2x²)^k.
///
/// Returns `None` for x below [`ERFCX_DD_MIN_X`], where the series cannot
/// reach extended accuracy; callers promote the double value there. The
/// argument is taken as a `Dd` so the caller can build B(ω_m+Λ_n)/2√A
/// without a double rounding of its own (entry accuracy, not just
/// elimination accuracy, is the point of this path).
pub(crate) fn erfcx_dd(x: Dd) -> Option<Dd> {
    if !(x.hi >= ERFCX_DD_MIN_X) {
        return None;
    }
    let inv_2x2 = Dd::from_f64(1.0).div(Dd::from_f64(2.0).mul(x).mul(x));
    let mut term = Dd::from_f64(1.0);
    let mut sum = term;
    for k in 0..200u32 {
        let next = term
            .mul(inv_2x2)
            .mul(Dd::from_f64(-((2 * k + 1) as f64)));
        if next.abs().to_f64() >= term.abs().to_f64() {
            break; // smallest term reached (x ≥ 12 converges long before)
        }
        term = next;
        sum = sum.add(term);
        if term.abs().to_f64() <= 1e-35 * sum.abs().to_f64() {
            break;
        }
    }
    Some(sum.div(SQRT_PI_DD.mul(x)))
}
