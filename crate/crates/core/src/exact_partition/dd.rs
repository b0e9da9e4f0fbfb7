//! Software double-double arithmetic (~31 significant digits).
//!
//! Used as an optional extended-precision path for the determinant
//! factorizations when the condition diagnostic of the f-matrix exceeds
//! 1e12: the factorization-internal cancellation then eats more than half
//! of the double mantissa. The redo recomputes the matrix *entries* in
//! double-double too whenever the asymptotic kernel series covers the
//! arguments (which is every regime that is ill-conditioned in practice);
//! entry rounding, not elimination rounding, is what otherwise caps the
//! attainable log-determinant accuracy at κ·1e−16.

/// An unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// Error-free sum: returns (fl(a+b), exact error).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Error-free sum assuming |a| ≥ |b|.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Error-free product via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s1, e1) = two_sum(self.hi, o.hi);
        let (s2, e2) = two_sum(self.lo, o.lo);
        let (s1, e1b) = quick_two_sum(s1, e1 + s2);
        let (hi, lo) = quick_two_sum(s1, e1b + e2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        // long division with two correction steps
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from_f64(q2)));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        let (hi, lo) = quick_two_sum(s, e + q3);
        Dd { hi, lo }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        // one Newton step on x² = a doubles the seed's precision
        let x = self.hi.sqrt();
        let xd = Dd::from_f64(x);
        let r = self.sub(xd.mul(xd)).div(Dd::from_f64(2.0 * x));
        xd.add(r)
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catastrophic_cancellation_is_exact() {
        // (1 + 2^-60) - 1 is lost in f64 but exact in Dd
        let tiny = 2.0f64.powi(-60);
        let a = Dd::from_f64(1.0).add(Dd::from_f64(tiny));
        let d = a.sub(Dd::from_f64(1.0));
        assert_eq!(d.to_f64(), tiny);
    }

    #[test]
    fn product_keeps_the_low_part() {
        // (1 + 2^-30)² = 1 + 2^-29 + 2^-60; f64 drops the last term
        let x = Dd::from_f64(1.0).add(Dd::from_f64(2.0f64.powi(-30)));
        let sq = x.mul(x);
        let expected_lo = 2.0f64.powi(-60);
        let residual = sq
            .sub(Dd::from_f64(1.0))
            .sub(Dd::from_f64(2.0f64.powi(-29)));
        assert_eq!(residual.to_f64(), expected_lo);
    }

    #[test]
    fn division_and_sqrt_roundtrip() {
        let a = Dd::from_f64(std::f64::consts::PI);
        let b = Dd::from_f64(std::f64::consts::E);
        let q = a.div(b).mul(b);
        assert!((q.sub(a)).to_f64().abs() < 1e-30);
        let r = a.sqrt().mul(a.sqrt());
        assert!((r.sub(a)).to_f64().abs() < 1e-30);
    }
}
