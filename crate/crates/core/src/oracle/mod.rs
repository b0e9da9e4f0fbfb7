//! Independent brute-force validators for each analytic step of the exact
//! solution: 1-D quadrature for the kernel f, Haar Monte Carlo for the
//! unitary group integral, explicit permutation sums for the determinant
//! identity, tensor quadrature for the radial integral, and full
//! matrix-integral Monte Carlo for the partition function itself.
//!
//! Everything here is deliberately dumb: no shared code with the closed-form
//! engine beyond the kernel parameter container, so an agreement is evidence
//! rather than tautology.

pub mod haar;
pub mod matrix_mc;
pub mod quadrature;

use serde::{Deserialize, Serialize};

pub use haar::{mc_haar_hciz, HaarHciz};
pub use matrix_mc::{mc_condensate, mc_full_partition_ratio};
pub use quadrature::{quad_kernel_f, radial_quadrature_z, radial_quadrature_z_with_source};

use crate::error::{Error, Result};
use crate::exact_partition::dd::Dd;
use crate::exact_partition::{kernel_f, KernelParams, LogNumber};
use crate::kinetic::Spectrum;

/// Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// |mean − reference| in units of std_err.
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        (self.mean - reference).abs() / self.std_err
    }
}

/// Quadrature scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Adaptive Simpson on a truncated interval (1-D).
    AdaptiveSimpson,
    /// Tensor-product Gauss-Legendre on a truncated box (n ≤ 3).
    TensorGauss,
}

/// Tolerances and limits for the quadrature oracles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: u32,
    pub scheme: Scheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 48,
            scheme: Scheme::AdaptiveSimpson,
        }
    }
}

impl QuadratureSpec {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "abs_tol",
                message: format!("must be > 0, got {}", self.abs_tol),
            });
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rel_tol",
                message: format!("must be > 0, got {}", self.rel_tol),
            });
        }
        Ok(())
    }
}

/// Brute-force check of the step from the double permutation sum to the
/// determinant: returns
///
/// ```text
/// ( Σ_{σ₁,σ₂} sgn σ₁ sgn σ₂ ∏_k f(ω_{σ₁(k)} + ω_{σ₂(k)}),
///   n! · det[f(ω_m + ω_n)] )
/// ```
///
/// where the determinant on the right is expanded by its own (single)
/// Leibniz sum, so equality of the two values is exactly the identity being
/// validated, not a computational echo. n ≤ 4 keeps the (n!)² term count
/// at desk scale. Both sums cancel down by a few e-folds, so chaining
/// (n!)² log-domain additions would cost ~n·u times the cancellation
/// headroom; the signed log-sum-exp below keeps the error at the per-term
/// exponential rounding instead.
pub fn andreief_check(s: &Spectrum, kp: &KernelParams) -> Result<(LogNumber, LogNumber)> {
    let n = s.len();
    if n > 4 {
        return Err(Error::DimensionTooLarge { n, max: 4 });
    }
    let omegas = s.omegas();

    // f-values cached on the (m, n) grid
    let mut f = vec![LogNumber::ZERO; n * n];
    for m in 0..n {
        for l in 0..n {
            f[m * n + l] = kernel_f(omegas[m] + omegas[l], kp)?;
        }
    }

    let perms = permutations_with_sign(n);

    let mut double_terms = Vec::with_capacity(perms.len() * perms.len());
    for (p1, s1) in &perms {
        for (p2, s2) in &perms {
            let mut ln = Dd::from_f64(0.0);
            let mut sign = s1 * s2;
            for k in 0..n {
                let fv = f[p1[k] * n + p2[k]];
                sign *= fv.sign as i32;
                ln = ln.add(Dd::from_f64(fv.log_abs));
            }
            double_terms.push((sign, ln));
        }
    }
    let double_sum = signed_lse_dd(&double_terms);

    let mut det_terms = Vec::with_capacity(perms.len());
    for (p, sg) in &perms {
        let mut ln = Dd::from_f64(0.0);
        let mut sign = *sg;
        for m in 0..n {
            let fv = f[m * n + p[m]];
            sign *= fv.sign as i32;
            ln = ln.add(Dd::from_f64(fv.log_abs));
        }
        det_terms.push((sign, ln));
    }
    let det = signed_lse_dd(&det_terms);

    Ok((double_sum, LogNumber::factorial(n as u64) * det))
}

/// Signed log-sum-exp over double-double logs with Neumaier-compensated
/// linear accumulation: Σ sign_i · e^{l_i}. Factoring out the largest log
/// keeps every exponential ≤ 1, and the compensation removes the n·u
/// accumulation term, leaving only per-term exp rounding times the
/// cancellation headroom.
fn signed_lse_dd(terms: &[(i32, Dd)]) -> LogNumber {
    let lmax = terms
        .iter()
        .filter(|t| t.0 != 0)
        .map(|t| t.1.hi)
        .fold(f64::NEG_INFINITY, f64::max);
    if lmax == f64::NEG_INFINITY {
        return LogNumber::ZERO;
    }
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &(sign, l) in terms {
        if sign == 0 {
            continue;
        }
        let d = l.sub(Dd::from_f64(lmax));
        // e^{hi+lo} = e^{hi}(1 + lo) to well below double rounding
        let x = sign as f64 * d.hi.exp() * (1.0 + d.lo);
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    let total = sum + comp;
    if total == 0.0 {
        return LogNumber::ZERO;
    }
    LogNumber::from_ln(if total > 0.0 { 1 } else { -1 }, lmax + total.abs().ln())
}

/// All permutations of 0..n with signatures, in lexicographic order.
pub(crate) fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, i32)> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, i32)>) {
        if rest.is_empty() {
            let sign = permutation_sign(prefix);
            out.push((prefix.clone(), sign));
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    rec(&mut Vec::new(), &mut items, &mut out);
    out
}

fn permutation_sign(p: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy_algebra::HalfInt;
    use crate::kinetic::custom_spectrum;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn permutations_are_complete_and_signed() {
        let p3 = permutations_with_sign(3);
        assert_eq!(p3.len(), 6);
        assert_eq!(p3.iter().map(|(_, s)| s).sum::<i32>(), 0);
        assert_eq!(p3[0], (vec![0, 1, 2], 1));
        // one transposition away from identity
        assert!(p3.contains(&(vec![1, 0, 2], -1)));
    }

    #[test]
    fn andreief_n1_is_the_kernel_value() {
        let j = HalfInt::from_twice(0);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        let s = custom_spectrum(j, &[1.3]).unwrap();
        let (lhs, rhs) = andreief_check(&s, &kp).unwrap();
        let f = kernel_f(2.6, &kp).unwrap();
        assert_eq!(lhs, f);
        assert_eq!(rhs, f);
    }

    #[test]
    fn andreief_n2_matches_explicit_expansion() {
        let j = HalfInt::from_twice(1);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        let s = custom_spectrum(j, &[1.0, 2.0]).unwrap();
        let (lhs, rhs) = andreief_check(&s, &kp).unwrap();
        let f2 = kernel_f(2.0, &kp).unwrap();
        let f3 = kernel_f(3.0, &kp).unwrap();
        let f4 = kernel_f(4.0, &kp).unwrap();
        let expect = LogNumber::from_f64(2.0) * (f2 * f4 - f3 * f3);
        assert_relative_eq!(
            lhs.signed_ln().unwrap(),
            expect.signed_ln().unwrap(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            rhs.signed_ln().unwrap(),
            expect.signed_ln().unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn andreief_n3_and_n4_agree_to_themselves() {
        for (tj, omegas) in [(2u32, vec![0.7, 1.9, 3.2]), (3, vec![0.5, 1.1, 2.0, 4.4])] {
            let j = HalfInt::from_twice(tj);
            let kp = KernelParams::from_model(j, 1.3, 0.9).unwrap();
            let s = custom_spectrum(j, &omegas).unwrap();
            let (lhs, rhs) = andreief_check(&s, &kp).unwrap();
            assert_eq!(lhs.sign, rhs.sign);
            assert_abs_diff_eq!(lhs.log_abs, rhs.log_abs, epsilon = 1e-12);
        }
    }

    #[test]
    fn andreief_rejects_large_dimension() {
        let j = HalfInt::from_twice(4);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        let s = custom_spectrum(j, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(matches!(
            andreief_check(&s, &kp),
            Err(Error::DimensionTooLarge { n: 5, max: 4 })
        ));
    }
}
