//! Deterministic quadrature oracles: the 1-D kernel integral and the
//! (2j+1)-dimensional radial integral that precedes the determinant step.

use super::QuadratureSpec;
use crate::error::{Error, Result};
use crate::exact_partition::{log_normalization, KernelParams, LogNumber};
use crate::fuzzy_algebra::HalfInt;
use crate::kinetic::{group_sorted, Spectrum};

/// Adaptive Simpson quadrature of f(ω) = ∫₀^∞ e^{−At²−Bωt} dt.
///
/// The interval is truncated at T chosen so the discarded tail, bounded
/// rigorously by ∫_T^∞ e^{−At²−Bωt} dt ≤ e^{−AT²−BωT}/(Bω), stays below a
/// tenth of the absolute tolerance budget.
pub fn quad_kernel_f(omega: f64, kp: &KernelParams, q: &QuadratureSpec) -> Result<f64> {
    q.validate()?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "omega",
            message: format!("must be > 0 and finite, got {omega}"),
        });
    }
    let (a, b) = (kp.a, kp.b * omega);
    let tail_budget = q.abs_tol / 10.0;
    let mut t_cut = 1.0_f64;
    while (-a * t_cut * t_cut - b * t_cut).exp() / b > tail_budget {
        t_cut *= 2.0;
        if t_cut > 1e30 {
            return Err(Error::ToleranceNotAchieved {
                requested: q.abs_tol,
                achieved: f64::INFINITY,
            });
        }
    }
    let g = |t: f64| (-a * t * t - b * t).exp();
    adaptive_simpson(&g, 0.0, t_cut, q.abs_tol - tail_budget, q.max_subdivisions)
}

/// Classic adaptive Simpson with an absolute tolerance that halves with
/// each bisection; the 1/15 Richardson correction is applied on acceptance.
fn adaptive_simpson(
    g: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    fn simpson(lo: f64, hi: f64, flo: f64, fmid: f64, fhi: f64) -> f64 {
        (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        g: &impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        flo: f64,
        fmid: f64,
        fhi: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let mid = 0.5 * (lo + hi);
        let flm = g(0.5 * (lo + mid));
        let fmh = g(0.5 * (mid + hi));
        let left = simpson(lo, mid, flo, flm, fmid);
        let right = simpson(mid, hi, fmid, fmh, fhi);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::ToleranceNotAchieved {
                requested: tol,
                achieved: delta.abs() / 15.0,
            });
        }
        let l = rec(g, lo, mid, flo, flm, fmid, left, tol / 2.0, depth - 1)?;
        let r = rec(g, mid, hi, fmid, fmh, fhi, right, tol / 2.0, depth - 1)?;
        Ok(l + r)
    }
    let (flo, fmid, fhi) = (g(lo), g(0.5 * (lo + hi)), g(hi));
    let whole = simpson(lo, hi, flo, fmid, fhi);
    rec(g, lo, hi, flo, fmid, fhi, whole, tol, max_depth)
}

/// Gauss-Legendre nodes and weights on [−1, 1] by Newton iteration on the
/// three-term recurrence.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P'_n(x) via the recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// ln Z_j by direct tensor quadrature of the radial integral
///
/// ```text
/// Z_j = N^j · I / (Δ(ω) Δ(ω)),
/// I = ∫_{[0,∞)^n} e^{−A Σ s_k²} det[e^{−B ω_m s_k}]² ∏ ds_k
/// ```
///
/// (the (2j+1)! of the determinant formula is produced by the integral
/// itself). Supports n ≤ 3 and degenerate spectra, where the alternant
/// rows pass to their divided-difference limits and the Vandermonde factors
/// to the products over distinct group values.
pub fn radial_quadrature_z(
    s: &Spectrum,
    kp: &KernelParams,
    j: HalfInt,
    g2: f64,
    lambda: f64,
    q: &QuadratureSpec,
) -> Result<LogNumber> {
    radial_mixed(s, None, kp, j, g2, lambda, q)
}

/// Source-coupled variant: the second alternant is built on Λ = ω + σ.
pub fn radial_quadrature_z_with_source(
    s: &Spectrum,
    sigmas: &[f64],
    kp: &KernelParams,
    j: HalfInt,
    g2: f64,
    lambda: f64,
    q: &QuadratureSpec,
) -> Result<LogNumber> {
    if sigmas.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            got: sigmas.len(),
        });
    }
    let shifted: Vec<f64> = s
        .omegas()
        .iter()
        .zip(sigmas)
        .map(|(w, sg)| w + sg)
        .collect();
    radial_mixed(s, Some(&shifted), kp, j, g2, lambda, q)
}

/// One alternant row in confluent form: order-r divided difference of
/// ω ↦ e^{−Bωs} at the group value c, with the common decay e^{−B c_min s}
/// factored out into the weight.
struct AltRow {
    /// group value minus the spectrum minimum
    shift: f64,
    /// derivative order within the group
    order: usize,
    /// 1/r!
    inv_fact: f64,
}

fn alt_rows(values: &[f64]) -> (Vec<AltRow>, f64, f64) {
    let groups = group_sorted(values);
    let c_min = values[0];
    let mut rows = Vec::new();
    let mut ln_denominator = 0.0;
    for (gi, g) in groups.iter().enumerate() {
        for r in 0..g.len {
            let inv_fact = 1.0 / (1..=r).map(|v| v as f64).product::<f64>();
            rows.push(AltRow {
                shift: values[g.start] - c_min,
                order: r,
                inv_fact,
            });
        }
        for h in groups.iter().skip(gi + 1) {
            ln_denominator +=
                (g.len * h.len) as f64 * (values[h.start] - values[g.start]).ln();
        }
    }
    (rows, c_min, ln_denominator)
}

/// Laplace-expansion determinant for the tiny matrices of this oracle.
fn det_small(m: &[f64], n: usize) -> f64 {
    match n {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => unreachable!("radial oracle is limited to n <= 3"),
    }
}

fn radial_mixed(
    s: &Spectrum,
    right: Option<&[f64]>,
    kp: &KernelParams,
    j: HalfInt,
    g2: f64,
    lambda: f64,
    q: &QuadratureSpec,
) -> Result<LogNumber> {
    q.validate()?;
    let n = s.len();
    if n > 3 {
        return Err(Error::DimensionTooLarge { n, max: 3 });
    }
    if s.j() != j {
        return Err(Error::LevelMismatch {
            expected: j.twice(),
            got: s.j().twice(),
        });
    }
    kp.consistent_with(j, g2, lambda)?;

    let left = s.omegas().to_vec();
    let right: Vec<f64> = match right {
        None => left.clone(),
        Some(r) => {
            for (index, &value) in r.iter().enumerate() {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::NonPositiveSpectrum { index, value });
                }
            }
            let mut v = r.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        }
    };

    let (rows_l, min_l, ln_den_l) = alt_rows(&left);
    let (rows_r, min_r, ln_den_r) = alt_rows(&right);

    // Weight after factoring e^{−B min s} out of each alternant column:
    // exp(−A s² − B(ω_min + Λ_min) s) per coordinate. Residual alternant
    // entries are (−Bs)^r e^{−B(c−min)s}/r!, all polynomially bounded, so
    // the truncation point T only needs the weight to be negligible:
    //   A T² + lin T ≥ −ln(tiny), tiny = 1e−22, with a 1.25 safety factor
    // (heuristic margin for the polynomial prefactors, generous because
    // the weight decays super-exponentially past its scale).
    let lin = kp.b * (min_l + min_r);
    let neg_ln_tiny = 50.0;
    let t_cut =
        1.25 * (-lin + (lin * lin + 4.0 * kp.a * neg_ln_tiny).sqrt()) / (2.0 * kp.a);

    let m_nodes = 80usize;
    let (xs, ws) = gauss_legendre(m_nodes);
    let half = 0.5 * t_cut;
    let nodes: Vec<f64> = xs.iter().map(|x| half * (x + 1.0)).collect();
    let wts: Vec<f64> = ws.iter().map(|w| w * half).collect();

    // per-node column entries for both alternants
    let col_l: Vec<Vec<f64>> = nodes.iter().map(|&t| alt_column(&rows_l, t, kp.b)).collect();
    let col_r: Vec<Vec<f64>> = nodes.iter().map(|&t| alt_column(&rows_r, t, kp.b)).collect();
    let node_w: Vec<f64> = nodes
        .iter()
        .zip(&wts)
        .map(|(&t, &w)| w * (-kp.a * t * t - lin * t).exp())
        .collect();

    let mut total = 0.0_f64;
    let mut m1 = vec![0.0; n * n];
    let mut m2 = vec![0.0; n * n];
    let mut idx = vec![0usize; n];
    loop {
        let mut wprod = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            wprod *= node_w[i];
            for r in 0..n {
                m1[r * n + k] = col_l[i][r];
                m2[r * n + k] = col_r[i][r];
            }
        }
        total += wprod * det_small(&m1, n) * det_small(&m2, n);

        // odometer over the tensor grid
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < m_nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == n {
                break;
            }
        }
        if k == n {
            break;
        }
    }

    if total == 0.0 {
        return Err(Error::ToleranceNotAchieved {
            requested: q.abs_tol,
            achieved: f64::INFINITY,
        });
    }
    let sign = if total > 0.0 { 1 } else { -1 };
    let ln_norm = log_normalization(j, g2, lambda)?;
    Ok(LogNumber::from_ln(
        sign,
        ln_norm.log_abs + total.abs().ln() - ln_den_l - ln_den_r,
    ))
}

/// Evaluates the residual alternant rows at one node t.
fn alt_column(rows: &[AltRow], t: f64, b: f64) -> Vec<f64> {
    rows.iter()
        .map(|row| {
            (-b * t).powi(row.order as i32) * row.inv_fact * (-b * row.shift * t).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_partition::{
        kernel_f, partition_level, DegeneracyPolicy,
    };
    use crate::kinetic::custom_spectrum;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn quad_matches_gaussian_limit() {
        let kp = KernelParams::raw(1.0, 1.0, 1.0).unwrap();
        let v = quad_kernel_f(1e-9, &kp, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(v, PI.sqrt() / 2.0, max_relative = 1e-8);
    }

    #[test]
    fn quad_matches_closed_form_at_formal_units() {
        let kp = KernelParams::raw(64.0 / 3.0, 2.0, 1.0).unwrap();
        let quad = quad_kernel_f(1.0, &kp, &QuadratureSpec::default()).unwrap();
        let closed = kernel_f(1.0, &kp).unwrap().to_f64();
        assert_relative_eq!(quad, closed, max_relative = 1e-10);
    }

    #[test]
    fn quad_matches_large_omega_asymptote() {
        let kp = KernelParams::raw(64.0 / 3.0, 2.0, 1.0).unwrap();
        let quad = quad_kernel_f(100.0, &kp, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(quad, 1.0 / (2.0 * 100.0), max_relative = 1e-2);
    }

    #[test]
    fn quad_reports_unachievable_tolerance() {
        let kp = KernelParams::raw(64.0 / 3.0, 2.0, 1.0).unwrap();
        let q = QuadratureSpec {
            abs_tol: 1e-13,
            max_subdivisions: 1,
            ..QuadratureSpec::default()
        };
        assert!(matches!(
            quad_kernel_f(1.0, &kp, &q),
            Err(Error::ToleranceNotAchieved { .. })
        ));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is exact for 8 nodes: ∫_{-1}^{1} t^14 dt = 2/15
        let v: f64 = x.iter().zip(&w).map(|(&t, &wt)| wt * t.powi(14)).sum();
        assert_relative_eq!(v, 2.0 / 15.0, max_relative = 1e-13);
        let odd: f64 = x.iter().zip(&w).map(|(&t, &wt)| wt * t.powi(7)).sum();
        assert_abs_diff_eq!(odd, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn radial_oracle_matches_engine_at_half_level() {
        let j = HalfInt::from_twice(1);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        let s = custom_spectrum(j, &[1.0, 2.0]).unwrap();
        let engine = partition_level(&s, &kp, j, 1.0, 1.0, DegeneracyPolicy::default())
            .unwrap()
            .log_z
            .signed_ln()
            .unwrap();
        let oracle = radial_quadrature_z(&s, &kp, j, 1.0, 1.0, &QuadratureSpec::default())
            .unwrap()
            .signed_ln()
            .unwrap();
        assert_relative_eq!(oracle, engine, max_relative = 1e-8);
    }

    #[test]
    fn radial_oracle_handles_the_degenerate_pair() {
        let j = HalfInt::from_twice(1);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        let c = 29.0 / 12.0;
        let s = custom_spectrum(j, &[c, c]).unwrap();
        let oracle = radial_quadrature_z(&s, &kp, j, 1.0, 1.0, &QuadratureSpec::default())
            .unwrap()
            .signed_ln()
            .unwrap();
        assert_abs_diff_eq!(
            oracle,
            -24.12069221707655612272977999936627185101,
            epsilon = 1e-7
        );
    }

    #[test]
    fn radial_oracle_matches_engine_at_level_one() {
        let j = HalfInt::from_twice(2);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        let s = custom_spectrum(j, &[1.0, 2.0, 3.0]).unwrap();
        let engine = partition_level(&s, &kp, j, 1.0, 1.0, DegeneracyPolicy::default())
            .unwrap()
            .log_z
            .signed_ln()
            .unwrap();
        let oracle = radial_quadrature_z(&s, &kp, j, 1.0, 1.0, &QuadratureSpec::default())
            .unwrap()
            .signed_ln()
            .unwrap();
        assert_relative_eq!(oracle, engine, max_relative = 1e-7);
    }

    #[test]
    fn radial_oracle_rejects_large_levels() {
        let j = HalfInt::from_twice(3);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        let s = custom_spectrum(j, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            radial_quadrature_z(&s, &kp, j, 1.0, 1.0, &QuadratureSpec::default()),
            Err(Error::DimensionTooLarge { n: 4, max: 3 })
        ));
    }

    #[test]
    fn sourced_radial_matches_frozen_reference() {
        // j=1/2, ω={1,2}, σ={0.1,0.2}: 40-digit reference for the mixed ln Z
        let j = HalfInt::from_twice(1);
        let kp = KernelParams::from_model(j, 1.0, 1.0).unwrap();
        let s = custom_spectrum(j, &[1.0, 2.0]).unwrap();
        let v = radial_quadrature_z_with_source(
            &s,
            &[0.1, 0.2],
            &kp,
            j,
            1.0,
            1.0,
            &QuadratureSpec::default(),
        )
        .unwrap()
        .signed_ln()
        .unwrap();
        assert_abs_diff_eq!(v, -22.39838741002582429059974952934148062942, epsilon = 1e-7);
    }
}
