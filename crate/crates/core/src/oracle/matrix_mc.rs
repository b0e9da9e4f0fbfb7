//! Full matrix-integral Monte Carlo at j = 1/2: importance sampling over
//! the 8 real degrees of freedom of Φ ∈ M₂(ℂ) with the Boltzmann weight
//!
//! ```text
//! S(Φ) = B Σ_{mn} |Φ_{mn}|² (ω_m + ω_n) + A tr((ΦΦ†)²)
//! ```
//!
//! whose SVD/unitary-integral reduction is exactly the determinant formula
//! of the engine (with flat-measure constant 1). The absolute measure
//! constant is convention-laden, so only ratios are estimated: proposal q
//! matched to one quadratic form makes every weight e^{−S+Q} bounded (the
//! quartic trace dominates any quadratic mismatch, since
//! tr((ΦΦ†)²) ≥ (tr ΦΦ†)²/2).

use rand_chacha::{rand_core::SeedableRng, ChaCha12Rng};
use rand_distr::{Distribution, StandardNormal};

use super::haar::split_samples;
use super::MCEstimate;
use crate::error::{Error, Result};
use crate::exact_partition::KernelParams;
use crate::fuzzy_algebra::{HalfInt, ModelParams};
use crate::kinetic::radial_spectrum;

/// Minimum acceptable effective sample size as a fraction of n_samples.
pub const ESS_FRACTION_MIN: f64 = 0.01;

const OMEGA_TOL: f64 = 1e-12;

/// Per-entry quadratic coefficients B(ω_m + ω_n) and the quartic
/// coefficient A for one parameter point at j = 1/2.
struct ActionCoeffs {
    quad: [f64; 4],
    quartic: f64,
}

fn action_coeffs(params: &ModelParams) -> Result<ActionCoeffs> {
    if (params.omega - 1.0 / 3.0).abs() > OMEGA_TOL {
        return Err(Error::InvalidParameter {
            name: "omega",
            message: format!(
                "matrix-integral oracle is defined at the solvable point Ω = 1/3, got {}",
                params.omega
            ),
        });
    }
    let j = HalfInt::from_twice(1);
    let kp = KernelParams::from_model(j, params.g2, params.lambda)?;
    let s = radial_spectrum(j, params);
    let w = s.omegas();
    let mut quad = [0.0; 4];
    for m in 0..2 {
        for n in 0..2 {
            quad[m * 2 + n] = kp.b * (w[m] + w[n]);
        }
    }
    Ok(ActionCoeffs {
        quad,
        quartic: kp.a,
    })
}

/// One sampled Φ: the quadratic forms Σ|Φ_mn|²(ω_m+ω_n) need the per-entry
/// norms, the quartic needs tr((ΦΦ†)²).
struct PhiSample {
    norm_sq: [f64; 4],
    tr_quartic: f64,
}

fn sample_phi(proposal: &ActionCoeffs, rng: &mut ChaCha12Rng) -> PhiSample {
    let mut re = [0.0; 4];
    let mut im = [0.0; 4];
    let mut norm_sq = [0.0; 4];
    for k in 0..4 {
        // weight e^{−c(x²+y²)} per complex entry: x, y ~ N(0, 1/(2c))
        let sd = (0.5 / proposal.quad[k]).sqrt();
        let gx: f64 = StandardNormal.sample(rng);
        let gy: f64 = StandardNormal.sample(rng);
        re[k] = sd * gx;
        im[k] = sd * gy;
        norm_sq[k] = re[k] * re[k] + im[k] * im[k];
    }
    // X = ΦΦ† for Φ = [[0,1],[2,3]] (row-major): tr X² = X₁₁² + X₂₂² + 2|X₁₂|²
    let x11 = norm_sq[0] + norm_sq[1];
    let x22 = norm_sq[2] + norm_sq[3];
    let x12_re = re[0] * re[2] + im[0] * im[2] + re[1] * re[3] + im[1] * im[3];
    let x12_im = im[0] * re[2] - re[0] * im[2] + im[1] * re[3] - re[1] * im[3];
    PhiSample {
        norm_sq,
        tr_quartic: x11 * x11 + x22 * x22 + 2.0 * (x12_re * x12_re + x12_im * x12_im),
    }
}

fn quad_form(coeffs: &ActionCoeffs, phi: &PhiSample) -> f64 {
    (0..4).map(|k| coeffs.quad[k] * phi.norm_sq[k]).sum()
}

/// Accumulated sums for a ratio estimator E[a]/E[b] with shared samples.
#[derive(Clone, Copy, Default)]
struct RatioSums {
    a: f64,
    a2: f64,
    b: f64,
    b2: f64,
    ab: f64,
}

impl RatioSums {
    fn add(&mut self, a: f64, b: f64) {
        self.a += a;
        self.a2 += a * a;
        self.b += b;
        self.b2 += b * b;
        self.ab += a * b;
    }
    fn merge(&mut self, o: &RatioSums) {
        self.a += o.a;
        self.a2 += o.a2;
        self.b += o.b;
        self.b2 += o.b2;
        self.ab += o.ab;
    }

    /// Ratio of means with the first-order delta-method standard error
    /// (covariance term included).
    fn ratio_estimate(&self, n: u64, seed: u64) -> MCEstimate {
        let nf = n as f64;
        let ma = self.a / nf;
        let mb = self.b / nf;
        let va = (self.a2 - nf * ma * ma) / (nf - 1.0);
        let vb = (self.b2 - nf * mb * mb) / (nf - 1.0);
        let cab = (self.ab - nf * ma * mb) / (nf - 1.0);
        let ratio = ma / mb;
        let var = (va / (mb * mb) + ratio * ratio * vb / (mb * mb)
            - 2.0 * ratio * cab / (mb * mb))
            / nf;
        MCEstimate {
            mean: ratio,
            std_err: var.max(0.0).sqrt(),
            n_samples: n,
            seed,
        }
    }

    fn check_ess(&self, n: u64) -> Result<()> {
        for (sum, sumsq) in [(self.a, self.a2), (self.b, self.b2)] {
            let ess = sum * sum / sumsq;
            let threshold = ESS_FRACTION_MIN * n as f64;
            if !(ess >= threshold) {
                return Err(Error::LowEffectiveSampleSize {
                    ess,
                    n,
                    threshold,
                });
            }
        }
        Ok(())
    }
}

fn run_workers(
    n_samples: u64,
    seed: u64,
    workers: usize,
    body: impl Fn(&mut ChaCha12Rng, &mut RatioSums) + Sync,
) -> RatioSums {
    let workers = workers.max(1);
    let shares = split_samples(n_samples, workers);
    let mut partials = vec![RatioSums::default(); workers];
    std::thread::scope(|scope| {
        let body = &body;
        let mut handles = Vec::new();
        for (w, &count) in shares.iter().enumerate() {
            handles.push(scope.spawn(move || {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(w as u64);
                let mut sums = RatioSums::default();
                for _ in 0..count {
                    body(&mut rng, &mut sums);
                }
                sums
            }));
        }
        for (w, h) in handles.into_iter().enumerate() {
            partials[w] = h.join().expect("worker panicked");
        }
    });
    let mut total = RatioSums::default();
    for p in &partials {
        total.merge(p);
    }
    total
}

/// Estimates Z_{1/2}(params1) / Z_{1/2}(params2) by importance sampling
/// with the proposal matched to the quadratic part of params2. Weights for
/// the numerator are e^{−S₁+Q₂}, for the denominator e^{−A₂ tr((ΦΦ†)²)};
/// the measure constant cancels in the ratio.
///
/// Bit-exact reproducible for fixed (seed, n_samples, workers).
pub fn mc_full_partition_ratio(
    params1: &ModelParams,
    params2: &ModelParams,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<MCEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            message: "need at least 2 samples for a standard error".into(),
        });
    }
    let c1 = action_coeffs(params1)?;
    let c2 = action_coeffs(params2)?;

    let sums = run_workers(n_samples, seed, workers, |rng, sums| {
        let phi = sample_phi(&c2, rng);
        let q1 = quad_form(&c1, &phi);
        let q2 = quad_form(&c2, &phi);
        let w1 = (q2 - q1 - c1.quartic * phi.tr_quartic).exp();
        let w2 = (-c2.quartic * phi.tr_quartic).exp();
        sums.add(w1, w2);
    });
    sums.check_ess(n_samples)?;
    Ok(sums.ratio_estimate(n_samples, seed))
}

/// Estimates the condensate ⟨tr(Φ†Φ)⟩ at j = 1/2 as
/// E_q[t e^{−A tr((ΦΦ†)²)}] / E_q[e^{−A tr((ΦΦ†)²)}] with t = Σ|Φ_mn|²
/// and the proposal q matched to the full quadratic part of the action.
pub fn mc_condensate(
    params: &ModelParams,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<MCEstimate> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            message: "need at least 2 samples for a standard error".into(),
        });
    }
    let c = action_coeffs(params)?;
    let sums = run_workers(n_samples, seed, workers, |rng, sums| {
        let phi = sample_phi(&c, rng);
        let t: f64 = phi.norm_sq.iter().sum();
        let w = (-c.quartic * phi.tr_quartic).exp();
        sums.add(t * w, w);
    });
    sums.check_ess(n_samples)?;
    Ok(sums.ratio_estimate(n_samples, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params_m(m: f64) -> ModelParams {
        ModelParams::new(1.0, m, 1.0, 1.0 / 3.0, 1.0).unwrap()
    }

    fn params_mu(mu: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, mu, 1.0 / 3.0, 1.0).unwrap()
    }

    #[test]
    fn identical_parameters_give_ratio_one_with_zero_error() {
        let p = params_m(1.0);
        let r = mc_full_partition_ratio(&p, &p, 1000, 3, 2).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_abs_diff_eq!(r.std_err, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mass_ratio_matches_engine_value() {
        // frozen engine value of Z(M=1)/Z(M=2) at λ=μ=g²=1
        let reference = 3.860878244980590138900190239561976006295;
        let r =
            mc_full_partition_ratio(&params_m(1.0), &params_m(2.0), 300_000, 42, 4).unwrap();
        assert!(
            r.sigmas_from(reference) < 3.0,
            "ratio {} ± {} vs {} ({}σ)",
            r.mean,
            r.std_err,
            reference,
            r.sigmas_from(reference)
        );
    }

    #[test]
    fn oscillator_mass_ratio_matches_engine_value() {
        // frozen engine value of Z(μ=1)/Z(μ=4) at λ=M=g²=1
        let reference = 13.21914104466393676040599394035883439217;
        let r =
            mc_full_partition_ratio(&params_mu(1.0), &params_mu(4.0), 300_000, 42, 4).unwrap();
        assert!(
            r.sigmas_from(reference) < 3.0,
            "ratio {} ± {} vs {} ({}σ)",
            r.mean,
            r.std_err,
            reference,
            r.sigmas_from(reference)
        );
    }

    #[test]
    fn condensate_matches_frozen_reference() {
        // 50-digit finite-difference value of ⟨trΦ†Φ⟩ at λ=μ=M=g²=1
        let reference = 0.007955610520507486081640207848124693905432;
        let r = mc_condensate(&params_m(1.0), 300_000, 7, 4).unwrap();
        assert!(
            r.sigmas_from(reference) < 3.0,
            "condensate {} ± {} vs {} ({}σ)",
            r.mean,
            r.std_err,
            reference,
            r.sigmas_from(reference)
        );
    }

    #[test]
    fn condensate_decreases_with_mass() {
        let light = mc_condensate(&params_m(1.0), 60_000, 5, 2).unwrap();
        let heavy = mc_condensate(&params_m(4.0), 60_000, 5, 2).unwrap();
        assert!(heavy.mean < light.mean);
    }

    #[test]
    fn estimates_are_bit_reproducible() {
        let a = mc_full_partition_ratio(&params_m(1.0), &params_m(2.0), 20_000, 11, 3).unwrap();
        let b = mc_full_partition_ratio(&params_m(1.0), &params_m(2.0), 20_000, 11, 3).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
        let c = mc_full_partition_ratio(&params_m(1.0), &params_m(2.0), 20_000, 11, 4).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn severe_proposal_mismatch_reports_low_ess() {
        let r = mc_full_partition_ratio(&params_m(200.0), &params_m(1.0), 5_000, 1, 1);
        assert!(matches!(r, Err(Error::LowEffectiveSampleSize { .. })));
    }

    #[test]
    fn rejects_wrong_oscillator_parameter() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        assert!(matches!(
            mc_condensate(&p, 100, 1, 1),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
