//! Haar Monte Carlo validation of the unitary group integral
//!
//! ```text
//! ∫ dU e^{z tr(M U N U†)} = (∏_{k=1}^{n−1} k!) · z^{n(1−n)/2}
//!                           · det[e^{z λ^M_k λ^N_l}] / (Δ(M) Δ(N))
//! ```
//!
//! for real diagonal M, N with distinct eigenvalues and real z ≠ 0 (the
//! engine only ever uses real z = −B, so the oracle covers the real axis).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha12Rng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::MCEstimate;
use crate::error::{Error, Result};

/// Monte Carlo estimate together with the closed-form prediction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HaarHciz {
    pub estimate: MCEstimate,
    pub closed_form: f64,
}

/// Draws a Haar-distributed n×n unitary (row-major) by modified
/// Gram-Schmidt QR of a complex standard-Gaussian matrix. MGS produces the
/// unique Q with positive real R-diagonal, which is exactly Haar.
pub fn sample_haar_unitary(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    for k in 0..n {
        for prev in 0..k {
            let proj: Complex64 = (0..n).map(|i| cols[prev][i].conj() * cols[k][i]).sum();
            for i in 0..n {
                let sub = proj * cols[prev][i];
                cols[k][i] -= sub;
            }
        }
        let norm: f64 = cols[k].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in &mut cols[k] {
            *v /= norm;
        }
    }
    let mut u = vec![Complex64::new(0.0, 0.0); n * n];
    for (k, col) in cols.iter().enumerate() {
        for i in 0..n {
            u[i * n + k] = col[i];
        }
    }
    u
}

fn vandermonde(xs: &[f64]) -> f64 {
    let mut v = 1.0;
    for i in 0..xs.len() {
        for k in i + 1..xs.len() {
            v *= xs[k] - xs[i];
        }
    }
    v
}

fn det_dense(m: &mut [f64], n: usize) -> f64 {
    // plain partial-pivot elimination; n ≤ 4 and well-scaled entries here
    let mut det = 1.0;
    for k in 0..n {
        let piv = (k..n).max_by(|&a, &b| {
            m[a * n + k].abs().partial_cmp(&m[b * n + k].abs()).unwrap()
        })
        .unwrap();
        if piv != k {
            for c in 0..n {
                m.swap(k * n + c, piv * n + c);
            }
            det = -det;
        }
        let p = m[k * n + k];
        if p == 0.0 {
            return 0.0;
        }
        det *= p;
        for r in k + 1..n {
            let f = m[r * n + k] / p;
            for c in k..n {
                m[r * n + c] -= f * m[k * n + c];
            }
        }
    }
    det
}

/// Closed-form right side of the integral.
fn hciz_closed_form(lam_m: &[f64], lam_n: &[f64], z: f64) -> f64 {
    let n = lam_m.len();
    let mut mat = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            mat[k * n + l] = (z * lam_m[k] * lam_n[l]).exp();
        }
    }
    let det = det_dense(&mut mat, n);
    let fact_prod: f64 = (1..n).map(|k| (1..=k).map(|v| v as f64).product::<f64>()).product();
    let exponent = (n as i32 * (1 - n as i32)) / 2;
    fact_prod * z.powi(exponent) * det / (vandermonde(lam_m) * vandermonde(lam_n))
}

/// Estimates ∫dU e^{z tr(M U N U†)} by direct Haar sampling and returns the
/// estimate alongside the closed form.
///
/// Workers own independent ChaCha12 streams derived from (seed, worker
/// index); merging is in fixed worker order, so the result is a bit-exact
/// function of (seed, n_samples, workers).
pub fn mc_haar_hciz(
    lam_m: &[f64],
    lam_n: &[f64],
    z: f64,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<HaarHciz> {
    let n = lam_m.len();
    if n == 0 || n > 4 {
        return Err(Error::DimensionTooLarge { n, max: 4 });
    }
    if lam_n.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: lam_n.len(),
        });
    }
    for lam in [lam_m, lam_n] {
        if lam.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::DegenerateEigenvalues);
        }
    }
    if z == 0.0 || !z.is_finite() {
        return Err(Error::InvalidParameter {
            name: "z",
            message: format!("must be nonzero and finite, got {z}"),
        });
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            message: "need at least 2 samples for a standard error".into(),
        });
    }
    let workers = workers.max(1);

    let shares = split_samples(n_samples, workers);
    let mut partials: Vec<(f64, f64)> = vec![(0.0, 0.0); workers];
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (w, &count) in shares.iter().enumerate() {
            handles.push(scope.spawn(move || {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(w as u64);
                let mut sum = 0.0;
                let mut sumsq = 0.0;
                for _ in 0..count {
                    let u = sample_haar_unitary(n, &mut rng);
                    let mut tr = 0.0;
                    for k in 0..n {
                        for l in 0..n {
                            tr += lam_m[k] * lam_n[l] * u[k * n + l].norm_sqr();
                        }
                    }
                    let v = (z * tr).exp();
                    sum += v;
                    sumsq += v * v;
                }
                (sum, sumsq)
            }));
        }
        for (w, h) in handles.into_iter().enumerate() {
            partials[w] = h.join().expect("worker panicked");
        }
    });

    let (sum, sumsq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
    let nf = n_samples as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean * mean).max(0.0);
    let std_err = (var / (nf - 1.0)).sqrt();

    Ok(HaarHciz {
        estimate: MCEstimate {
            mean,
            std_err,
            n_samples,
            seed,
        },
        closed_form: hciz_closed_form(lam_m, lam_n, z),
    })
}

/// Deterministic near-even split of the sample budget across workers.
pub(crate) fn split_samples(n_samples: u64, workers: usize) -> Vec<u64> {
    let w = workers as u64;
    (0..w)
        .map(|i| n_samples / w + u64::from(i < n_samples % w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn sample_split_is_exact_and_even() {
        assert_eq!(split_samples(10, 3), vec![4, 3, 3]);
        assert_eq!(split_samples(6, 3), vec![2, 2, 2]);
        assert_eq!(split_samples(1, 4), vec![1, 0, 0, 0]);
    }

    #[test]
    fn haar_sample_is_unitary() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for n in 1..=4 {
            let u = sample_haar_unitary(n, &mut rng);
            for i in 0..n {
                for k in 0..n {
                    let dot: Complex64 =
                        (0..n).map(|l| u[i * n + l] * u[k * n + l].conj()).sum();
                    let expect = if i == k { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(dot.re, expect, epsilon = 1e-12);
                    assert_abs_diff_eq!(dot.im, 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn haar_first_and_second_moments() {
        // E[U₁₁] = 0 and E[|U₁₁|²] = 1/n within 3 standard errors
        let n = 3;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let samples = 40_000;
        let (mut sre, mut sim, mut sabs, mut sabs2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..samples {
            let u = sample_haar_unitary(n, &mut rng);
            let v = u[0];
            sre += v.re;
            sim += v.im;
            sabs += v.norm_sqr();
            sabs2 += v.norm_sqr() * v.norm_sqr();
        }
        let nf = samples as f64;
        let mean_abs = sabs / nf;
        let se_abs = ((sabs2 / nf - mean_abs * mean_abs) / (nf - 1.0)).sqrt();
        assert!((mean_abs - 1.0 / n as f64).abs() < 3.0 * se_abs);
        // |U₁₁| ≤ 1, so Var(Re U₁₁) ≤ 1 and 3/√n bounds the 3σ band
        assert!(sre.abs() / nf < 3.0 / nf.sqrt());
        assert!(sim.abs() / nf < 3.0 / nf.sqrt());
    }

    #[test]
    fn closed_form_n1_is_a_plain_exponential() {
        let r = mc_haar_hciz(&[2.0], &[3.0], -0.1, 100, 1, 1).unwrap();
        assert_relative_eq!(r.closed_form, (-0.6f64).exp(), max_relative = 1e-14);
        // n=1: U is a phase, the trace is invariant, every sample equals it
        assert_relative_eq!(r.estimate.mean, (-0.6f64).exp(), max_relative = 1e-13);
        assert_abs_diff_eq!(r.estimate.std_err, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn closed_form_n2_matches_frozen_reference() {
        let v = hciz_closed_form(&[1.0, 2.0], &[3.0, 4.0], -0.1);
        assert_relative_eq!(
            v,
            0.3500835747336276830667686373014534583333,
            max_relative = 1e-13
        );
    }

    #[test]
    fn closed_form_n3_matches_frozen_reference() {
        let v = hciz_closed_form(&[0.3, 1.1, 2.0], &[0.5, 1.5, 2.5], -0.05);
        assert_relative_eq!(
            v,
            0.7752668881517406807573168876619570707543,
            max_relative = 1e-13
        );
    }

    #[test]
    fn mc_agrees_with_closed_form_at_n2() {
        let r = mc_haar_hciz(&[1.0, 2.0], &[3.0, 4.0], -0.1, 60_000, 42, 2).unwrap();
        assert!(
            r.estimate.sigmas_from(r.closed_form) < 3.0,
            "mean {} vs closed {} ({}σ)",
            r.estimate.mean,
            r.closed_form,
            r.estimate.sigmas_from(r.closed_form)
        );
    }

    #[test]
    fn mc_is_reproducible_for_fixed_worker_count() {
        let a = mc_haar_hciz(&[1.0, 2.0], &[3.0, 4.0], -0.1, 5_000, 9, 3).unwrap();
        let b = mc_haar_hciz(&[1.0, 2.0], &[3.0, 4.0], -0.1, 5_000, 9, 3).unwrap();
        assert_eq!(a.estimate.mean.to_bits(), b.estimate.mean.to_bits());
        assert_eq!(a.estimate.std_err.to_bits(), b.estimate.std_err.to_bits());
        let c = mc_haar_hciz(&[1.0, 2.0], &[3.0, 4.0], -0.1, 5_000, 10, 3).unwrap();
        assert_ne!(a.estimate.mean.to_bits(), c.estimate.mean.to_bits());
    }

    #[test]
    fn rejects_degenerate_and_invalid_inputs() {
        assert!(matches!(
            mc_haar_hciz(&[1.0, 1.0], &[3.0, 4.0], -0.1, 100, 1, 1),
            Err(Error::DegenerateEigenvalues)
        ));
        assert!(matches!(
            mc_haar_hciz(&[1.0, 2.0], &[3.0, 4.0], 0.0, 100, 1, 1),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            mc_haar_hciz(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0, 5.0], -0.1, 100, 1, 1),
            Err(Error::DimensionTooLarge { .. })
        ));
    }
}
