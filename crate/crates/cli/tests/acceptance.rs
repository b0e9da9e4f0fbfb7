//! End-to-end acceptance suite. Each test covers one release criterion,
//! prints one pass/fail line (visible with --nocapture) and pins its
//! numerical bound as a named constant. Everything is seeded, so the suite
//! is deterministic for a fixed toolchain.

use std::process::Command;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use r3lambda::exact_partition::{kernel_f, partition_level};
use r3lambda::fuzzy_algebra::{check_structure, curvature, make_coordinates};
use r3lambda::kinetic::{custom_spectrum, radial_spectrum};
use r3lambda::oracle::{
    andreief_check, mc_condensate, mc_full_partition_ratio, mc_haar_hciz, quad_kernel_f,
    radial_quadrature_z,
};
use r3lambda::resummation::{resum, SpectrumSource};
use r3lambda::toda::{
    condensate, default_step, partition_with_source, toda_times, SourceSpectrum,
};
use r3lambda::{DegeneracyPolicy, HalfInt, KernelParams, ModelParams, QuadratureSpec};

const TOL_ALGEBRA: f64 = 1e-10;
const TOL_CURVATURE: f64 = 1e-12;
const TOL_KERNEL: f64 = 1e-10;
const TOL_ANDREIEF: f64 = 1e-12;
const TOL_ENGINE_VS_QUAD_N2: f64 = 1e-6;
const TOL_ENGINE_VS_QUAD_N3: f64 = 1e-5;
const TOL_POLICY_AGREE: f64 = 1e-6;
const TOL_CONDENSATE_J0: f64 = 1e-8;
const TOL_INCREMENT_TJ10: f64 = 1e-6;
const MC_SIGMAS: f64 = 3.0;
const HCIZ_SAMPLES: u64 = 1_000_000;
const RATIO_SAMPLES: u64 = 10_000_000;
const CONDENSATE_SAMPLES: u64 = 1_000_000;
const SEED: u64 = 20260814;

/// ln Z at 2j = 10, unit parameters: engine value cross-checked against
/// 80-digit quadrature of the defining t-integral.
#[allow(clippy::excessive_precision)]
const INCREMENT_TJ10: f64 = -1187.874881829553585182436;

fn report(number: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number:02} ({name}): {verdict}; {detail}");
    assert!(pass, "criterion {number:02} ({name}): FAIL; {detail}");
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn ln_z(
    omegas: &[f64],
    j: HalfInt,
    kp: &KernelParams,
    policy: DegeneracyPolicy,
) -> f64 {
    let s = custom_spectrum(j, omegas).expect("valid spectrum");
    partition_level(&s, kp, j, 1.0, 1.0, policy)
        .expect("partition evaluates")
        .log_z
        .signed_ln()
        .expect("positive Z")
}

/// n positive values, log-uniform in [lo, hi], redrawn until every
/// adjacent sorted gap is at least 2% relative (distinctness).
fn random_distinct(rng: &mut ChaCha12Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(lo.ln()..hi.ln())).exp())
            .collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] > 0.02 * w[0]) {
            return v;
        }
    }
}

#[test]
fn criterion_01_algebra_identities_and_flatness() {
    let mut worst_structure = 0.0_f64;
    let mut worst_curvature = 0.0_f64;
    for tj in 0..=15u32 {
        for lambda in [0.37, 1.0, 2.5] {
            let coords = make_coordinates(HalfInt::from_twice(tj), lambda).unwrap();
            worst_structure = worst_structure.max(check_structure(&coords));
            let i = Complex64::new(0.0, 1.0);
            let a = [
                coords.theta[0].scale(i),
                coords.theta[1].scale(i),
                coords.theta[2].scale(i),
            ];
            for f in &curvature(&a, lambda).unwrap() {
                worst_curvature = worst_curvature.max(f.max_abs_entry());
            }
        }
    }
    report(
        1,
        "algebra identities",
        worst_structure <= TOL_ALGEBRA && worst_curvature <= TOL_CURVATURE,
        &format!(
            "structure residual {worst_structure:.2e} (bound {TOL_ALGEBRA:.0e}), \
             flat curvature {worst_curvature:.2e} (bound {TOL_CURVATURE:.0e})"
        ),
    );
}

#[test]
fn criterion_02_kernel_closed_form_vs_quadrature() {
    let mut rng = ChaCha12Rng::seed_from_u64(SEED);
    let q = QuadratureSpec::default();
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let a = rng.random_range(0.5_f64.ln()..200.0_f64.ln()).exp();
        let b = rng.random_range(0.1_f64.ln()..20.0_f64.ln()).exp();
        let omega = rng.random_range(0.02_f64.ln()..50.0_f64.ln()).exp();
        let kp = KernelParams::raw(a, b, 1.0).unwrap();
        let closed = kernel_f(omega, &kp).unwrap().to_f64();
        let oracle = quad_kernel_f(omega, &kp, &q).unwrap();
        worst = worst.max(rel_diff(closed, oracle));
    }
    report(
        2,
        "kernel quadrature",
        worst <= TOL_KERNEL,
        &format!("worst relative error {worst:.2e} over 100 draws (bound {TOL_KERNEL:.0e})"),
    );
}

#[test]
fn criterion_03_unitary_group_integral() {
    let exact = mc_haar_hciz(&[0.7], &[1.3], 0.9, 128, SEED, 1).unwrap();
    let n1 = rel_diff(exact.estimate.mean, exact.closed_form);

    let cases: [(&[f64], &[f64], f64); 2] = [
        (&[0.3, 1.1], &[0.5, 1.7], 0.8),
        (&[0.2, 0.9, 1.6], &[0.4, 1.0, 2.1], 0.6),
    ];
    let mut worst_sigmas = 0.0_f64;
    for (lm, ln, z) in cases {
        let r = mc_haar_hciz(lm, ln, z, HCIZ_SAMPLES, SEED, 2).unwrap();
        worst_sigmas = worst_sigmas.max(r.estimate.sigmas_from(r.closed_form));
    }
    report(
        3,
        "unitary group integral",
        n1 <= 1e-12 && worst_sigmas <= MC_SIGMAS,
        &format!(
            "n=1 exact to {n1:.2e}; n=2,3 worst deviation {worst_sigmas:.2} sigma \
             at {HCIZ_SAMPLES} samples (bound {MC_SIGMAS} sigma)"
        ),
    );
}

#[test]
fn criterion_04_determinant_expansion_identity() {
    let mut rng = ChaCha12Rng::seed_from_u64(SEED ^ 4);
    let mut worst = 0.0_f64;
    for n in 2..=4usize {
        for _ in 0..2 {
            let a = rng.random_range(1.0..50.0);
            let b = rng.random_range(0.5..5.0);
            let kp = KernelParams::raw(a, b, 1.0).unwrap();
            let omegas = random_distinct(&mut rng, n, 0.3, 5.0);
            let j = HalfInt::from_twice(n as u32 - 1);
            let s = custom_spectrum(j, &omegas).unwrap();
            let (lhs, rhs) = andreief_check(&s, &kp).unwrap();
            assert_eq!(lhs.sign, rhs.sign, "expansion flipped the sign");
            worst = worst.max((lhs.log_abs - rhs.log_abs).abs());
        }
    }
    report(
        4,
        "determinant expansion",
        worst <= TOL_ANDREIEF,
        &format!("worst relative gap {worst:.2e} for n = 2..4 (bound {TOL_ANDREIEF:.0e})"),
    );
}

#[test]
fn criterion_05_engine_vs_radial_quadrature() {
    let mut rng = ChaCha12Rng::seed_from_u64(SEED ^ 5);
    let q = QuadratureSpec::default();
    let mut worst_n2 = 0.0_f64;
    let mut worst_n3 = 0.0_f64;
    for (tj, worst) in [(1u32, &mut worst_n2), (2u32, &mut worst_n3)] {
        let j = HalfInt::from_twice(tj);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        for _ in 0..5 {
            let omegas = random_distinct(&mut rng, tj as usize + 1, 0.4, 4.0);
            let s = custom_spectrum(j, &omegas).unwrap();
            let engine = partition_level(&s, &kp, j, 1.0, 1.0, DegeneracyPolicy::default())
                .unwrap()
                .log_z
                .signed_ln()
                .unwrap();
            let oracle = radial_quadrature_z(&s, &kp, j, 1.0, 1.0, &q)
                .unwrap()
                .signed_ln()
                .unwrap();
            *worst = worst.max(rel_diff(engine, oracle));
        }
    }
    report(
        5,
        "engine vs quadrature",
        worst_n2 <= TOL_ENGINE_VS_QUAD_N2 && worst_n3 <= TOL_ENGINE_VS_QUAD_N3,
        &format!(
            "ln Z relative gap {worst_n2:.2e} at 2j=1 (bound {TOL_ENGINE_VS_QUAD_N2:.0e}), \
             {worst_n3:.2e} at 2j=2 (bound {TOL_ENGINE_VS_QUAD_N3:.0e}), 5 spectra each"
        ),
    );
}

#[test]
fn criterion_06_full_matrix_integral_ratios() {
    let j = HalfInt::from_twice(1);
    let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
    let policy = DegeneracyPolicy::DividedDifference;
    let mut worst_sigmas = 0.0_f64;
    let mut details = Vec::new();
    // (name, numerator params, denominator params)
    let cases = [
        (
            "M=1/M=2",
            ModelParams::new(1.0, 1.0, 1.0, 1.0 / 3.0, 1.0).unwrap(),
            ModelParams::new(1.0, 2.0, 1.0, 1.0 / 3.0, 1.0).unwrap(),
        ),
        (
            "mu=1/mu=4",
            ModelParams::new(1.0, 1.0, 1.0, 1.0 / 3.0, 1.0).unwrap(),
            ModelParams::new(1.0, 1.0, 4.0, 1.0 / 3.0, 1.0).unwrap(),
        ),
    ];
    for (name, p1, p2) in cases {
        let z1 = partition_level(&radial_spectrum(j, &p1), &kp, j, 1.0, 1.0, policy)
            .unwrap()
            .log_z
            .signed_ln()
            .unwrap();
        let z2 = partition_level(&radial_spectrum(j, &p2), &kp, j, 1.0, 1.0, policy)
            .unwrap()
            .log_z
            .signed_ln()
            .unwrap();
        let engine_ratio = (z1 - z2).exp();
        let est = mc_full_partition_ratio(&p1, &p2, RATIO_SAMPLES, SEED, 4).unwrap();
        let sigmas = est.sigmas_from(engine_ratio);
        worst_sigmas = worst_sigmas.max(sigmas);
        details.push(format!(
            "{name}: engine {engine_ratio:.9}, mc {:.9} +- {:.1e} ({sigmas:.2} sigma)",
            est.mean, est.std_err
        ));
    }
    report(
        6,
        "matrix integral ratios",
        worst_sigmas <= MC_SIGMAS,
        &format!(
            "{} at {RATIO_SAMPLES} samples (bound {MC_SIGMAS} sigma)",
            details.join("; ")
        ),
    );
}

#[test]
fn criterion_07_degeneracy_continuity() {
    let j = HalfInt::from_twice(1);
    let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
    let unit = ModelParams::unit_third();

    // the physical j = 1/2 spectrum is an exactly degenerate pair
    let s = radial_spectrum(j, &unit);
    let split = partition_level(&s, &kp, j, 1.0, 1.0, DegeneracyPolicy::default())
        .unwrap()
        .log_z
        .signed_ln()
        .unwrap();
    let confluent = partition_level(&s, &kp, j, 1.0, 1.0, DegeneracyPolicy::DividedDifference)
        .unwrap()
        .log_z
        .signed_ln()
        .unwrap();
    let policy_gap = rel_diff(split, confluent);

    // ln Z(c(1-d), c(1+d)) approaches ln Z(c, c) quadratically: each decade
    // in d shrinks the gap by ~100. Probed down to d = 1e-3 only; below
    // ~3e-4 the generic-path determinant rounding (cond ~ d^-2 times 1e-16)
    // overtakes the true gap and the scaling is no longer observable.
    let c = 29.0 / 12.0;
    let at = ln_z(&[c, c], j, &kp, DegeneracyPolicy::DividedDifference);
    let gap = |d: f64| {
        (ln_z(
            &[c * (1.0 - d), c * (1.0 + d)],
            j,
            &kp,
            DegeneracyPolicy::default(),
        ) - at)
            .abs()
    };
    let g1 = gap(1e-1);
    let g2 = gap(1e-2);
    let g3 = gap(1e-3);
    let (r21, r32) = (g2 / g1, g3 / g2);
    let quadratic = (0.005..0.02).contains(&r21) && (0.005..0.02).contains(&r32);

    report(
        7,
        "degeneracy continuity",
        policy_gap <= TOL_POLICY_AGREE && quadratic,
        &format!(
            "policy gap {policy_gap:.2e} (bound {TOL_POLICY_AGREE:.0e}); \
             gap ratios per decade {r21:.4}, {r32:.4} (expected ~0.01)"
        ),
    );
}

#[test]
fn criterion_08_source_sector() {
    let unit = ModelParams::unit_third();
    let j = HalfInt::from_twice(1);
    let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
    let s = radial_spectrum(j, &unit);
    let zeros = SourceSpectrum::zeros(s.len());

    let plain = partition_level(&s, &kp, j, 1.0, 1.0, DegeneracyPolicy::DividedDifference)
        .unwrap()
        .log_z;
    let sourced = partition_with_source(
        &s,
        &zeros,
        &kp,
        j,
        1.0,
        1.0,
        DegeneracyPolicy::DividedDifference,
    )
    .unwrap()
    .log_z;
    let reduction_exact =
        plain.sign == sourced.sign && plain.log_abs.to_bits() == sourced.log_abs.to_bits();

    let times = toda_times(&s, &zeros, 6).unwrap();
    let times_match = times
        .t
        .iter()
        .zip(&times.t_bar)
        .all(|(a, b)| a.to_bits() == b.to_bits());

    let fd = condensate(&s, &kp, j, 1.0, 1.0, default_step(&s)).unwrap();
    let mc = mc_condensate(&unit, CONDENSATE_SAMPLES, SEED, 2).unwrap();
    let sigmas = mc.sigmas_from(fd.value);

    // level zero is 1x1: with y = 2 omega, Z proportional to f(y + sigma),
    // so the condensate is -(1/B) f'(y)/f(y) = (1 - B y f(y)) / (2 A f(y))
    let j0 = HalfInt::from_twice(0);
    let kp0 = KernelParams::from_model(j0, 1.0, 1.0).unwrap();
    let s0 = radial_spectrum(j0, &unit);
    let y = 2.0 * s0.omegas()[0];
    let f = kernel_f(y, &kp0).unwrap().to_f64();
    let analytic = (1.0 - kp0.b * y * f) / (2.0 * kp0.a * f);
    let fd0 = condensate(&s0, &kp0, j0, 1.0, 1.0, default_step(&s0)).unwrap();
    let j0_gap = rel_diff(fd0.value, analytic);

    report(
        8,
        "source sector",
        reduction_exact && times_match && sigmas <= MC_SIGMAS && j0_gap <= TOL_CONDENSATE_J0,
        &format!(
            "zero-source reduction bitwise {reduction_exact}, t_bar=t bitwise {times_match}, \
             fd vs mc {sigmas:.2} sigma at {CONDENSATE_SAMPLES} samples, \
             1x1 analytic gap {j0_gap:.2e} (bound {TOL_CONDENSATE_J0:.0e})"
        ),
    );
}

#[test]
fn criterion_09_resummation_mechanics() {
    let unit = ModelParams::unit_third();
    let report_data = resum(&unit, HalfInt::from_twice(20), &SpectrumSource::Radial).unwrap();

    let mut running = 0.0_f64;
    let mut refold_exact = true;
    for (inc, ps) in report_data
        .increments
        .iter()
        .zip(&report_data.partial_sums)
    {
        running += inc;
        refold_exact &= running.to_bits() == ps.to_bits();
    }

    let spot = rel_diff(report_data.increments[10], INCREMENT_TJ10);
    let fit = report_data.tail_fit.expect("tail fit present");
    let slope_sane = (1.5..2.5).contains(&fit.power_slope);

    report(
        9,
        "resummation mechanics",
        refold_exact && spot <= TOL_INCREMENT_TJ10 && slope_sane,
        &format!(
            "refold bitwise {refold_exact} over 21 levels, increment(2j=10) gap {spot:.2e} \
             (bound {TOL_INCREMENT_TJ10:.0e}), tail power slope {:.3}",
            fit.power_slope
        ),
    );
}

#[test]
fn criterion_10_byte_identical_reports() {
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_r3lambda"))
            .args([
                "validate",
                "--no-timestamp",
                "--seed",
                "123",
                "--threads",
                "2",
                "--samples",
                "50000",
            ])
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "validate exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let first = run();
    let second = run();
    let identical = first == second;
    report(
        10,
        "byte-identical reports",
        identical && !first.is_empty(),
        &format!(
            "two validate runs, same seed/threads, {} bytes each, identical: {identical}",
            first.len()
        ),
    );
}
