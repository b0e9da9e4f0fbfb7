//! Signed log-domain scalars.
//!
//! Determinants, Vandermonde products and the normalization N^j overflow the
//! double range for modest j (N^{10} alone is ~10^{-1277}), so every such
//! quantity is carried as a sign and the natural log of its magnitude.

use serde::{Deserialize, Serialize};

/// A real number represented as sign ∈ {−1, 0, +1} and ln|value|.
///
/// Zero is canonical: sign 0 with `log_abs = -inf`. Multiplication and
/// division are exact up to rounding of the log sum; addition of mixed-sign
/// values factors out the larger magnitude before summing, so no
/// intermediate exponential can overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNumber {
    pub sign: i8,
    pub log_abs: f64,
}

impl LogNumber {
    pub const ZERO: LogNumber = LogNumber {
        sign: 0,
        log_abs: f64::NEG_INFINITY,
    };

    pub const ONE: LogNumber = LogNumber {
        sign: 1,
        log_abs: 0.0,
    };

    /// Builds from a sign and ln|value|; a −inf log collapses to zero.
    pub fn from_ln(sign: i8, log_abs: f64) -> Self {
        assert!(matches!(sign, -1..=1), "sign must be -1, 0 or 1");
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            LogNumber::ZERO
        } else {
            LogNumber { sign, log_abs }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            LogNumber::ZERO
        } else {
            LogNumber {
                sign: if x > 0.0 { 1 } else { -1 },
                log_abs: x.abs().ln(),
            }
        }
    }

    /// Converts back to f64; magnitudes beyond the double range become ±inf
    /// or ±0 as appropriate.
    pub fn to_f64(self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// ln of the value, defined only for strictly positive values.
    pub fn signed_ln(self) -> Option<f64> {
        (self.sign == 1).then_some(self.log_abs)
    }

    pub fn abs(self) -> Self {
        LogNumber {
            sign: self.sign.abs(),
            log_abs: self.log_abs,
        }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "division by zero LogNumber");
        LogNumber {
            sign: self.sign,
            log_abs: -self.log_abs,
        }
    }

    /// Integer power (exact on the log).
    pub fn powi(self, k: i64) -> Self {
        if self.sign == 0 {
            assert!(k > 0, "zero to a non-positive power");
            return LogNumber::ZERO;
        }
        let sign = if self.sign == -1 && k % 2 != 0 { -1 } else { 1 };
        LogNumber::from_ln(sign, self.log_abs * k as f64)
    }

    /// n! as a LogNumber, via the log sum Σ ln k.
    pub fn factorial(n: u64) -> Self {
        LogNumber::from_ln(1, ln_factorial(n))
    }
}

/// ln(n!) as a plain log sum; exact to roundoff for the small n used here.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

impl std::ops::Mul for LogNumber {
    type Output = LogNumber;
    fn mul(self, rhs: LogNumber) -> LogNumber {
        if self.sign == 0 || rhs.sign == 0 {
            LogNumber::ZERO
        } else {
            LogNumber {
                sign: self.sign * rhs.sign,
                log_abs: self.log_abs + rhs.log_abs,
            }
        }
    }
}

impl std::ops::Div for LogNumber {
    type Output = LogNumber;
    fn div(self, rhs: LogNumber) -> LogNumber {
        self * rhs.recip()
    }
}

impl std::ops::Neg for LogNumber {
    type Output = LogNumber;
    fn neg(self) -> LogNumber {
        LogNumber {
            sign: -self.sign,
            log_abs: self.log_abs,
        }
    }
}

impl std::ops::Add for LogNumber {
    type Output = LogNumber;
    fn add(self, rhs: LogNumber) -> LogNumber {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        // order by magnitude so the factored exponential is ≤ 1
        let (hi, lo) = if self.log_abs >= rhs.log_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = lo.log_abs - hi.log_abs; // ≤ 0
        if hi.sign == lo.sign {
            LogNumber {
                sign: hi.sign,
                log_abs: hi.log_abs + d.exp().ln_1p(),
            }
        } else if d == 0.0 {
            LogNumber::ZERO
        } else {
            LogNumber::from_ln(hi.sign, hi.log_abs + (-d.exp()).ln_1p())
        }
    }
}

impl std::ops::Sub for LogNumber {
    type Output = LogNumber;
    fn sub(self, rhs: LogNumber) -> LogNumber {
        self + (-rhs)
    }
}

impl std::fmt::Display for LogNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            1 => write!(f, "exp({})", self.log_abs),
            _ => write!(f, "-exp({})", self.log_abs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn roundtrip_and_algebra() {
        let a = LogNumber::from_f64(2.5);
        let b = LogNumber::from_f64(-4.0);
        assert_relative_eq!(a.to_f64(), 2.5, max_relative = 1e-15);
        assert_relative_eq!((a * b).to_f64(), -10.0, max_relative = 1e-14);
        assert_relative_eq!((a / b).to_f64(), -0.625, max_relative = 1e-14);
        assert_relative_eq!((a + b).to_f64(), -1.5, max_relative = 1e-13);
        assert_relative_eq!((a - b).to_f64(), 6.5, max_relative = 1e-13);
        assert_relative_eq!(a.powi(3).to_f64(), 15.625, max_relative = 1e-13);
    }

    #[test]
    fn zero_is_absorbing_and_cancellation_is_exact() {
        let a = LogNumber::from_f64(7.25);
        assert_eq!((a * LogNumber::ZERO), LogNumber::ZERO);
        assert_eq!(a + LogNumber::ZERO, a);
        assert_eq!(a - a, LogNumber::ZERO);
        assert_eq!(LogNumber::from_f64(0.0), LogNumber::ZERO);
    }

    #[test]
    fn magnitudes_beyond_double_range_survive() {
        let big = LogNumber::from_ln(1, 900.0); // e^900 overflows f64
        let prod = big * big;
        assert_eq!(prod.sign, 1);
        assert_relative_eq!(prod.log_abs, 1800.0, max_relative = 1e-15);
        assert_eq!((prod / big).log_abs, 900.0);
        // stable addition: e^900 + e^899 = e^900 (1 + e^-1)
        let sum = big + LogNumber::from_ln(1, 899.0);
        assert_relative_eq!(
            sum.log_abs,
            900.0 + (-1.0f64).exp().ln_1p(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn factorial_matches_direct_products() {
        for n in 0u64..=12 {
            let direct: f64 = (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
            assert_relative_eq!(
                LogNumber::factorial(n).to_f64(),
                direct,
                max_relative = 1e-13
            );
        }
    }
}
