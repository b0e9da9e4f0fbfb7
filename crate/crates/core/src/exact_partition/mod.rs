//! Exact level partition function ln Z_j in log-domain.
//!
//! The closed form evaluated here is
//!
//! ```text
//! Z_j = N^j(g²) · (2j+1)! · det[ f(ω_m + Λ_n) ] / (Δ(ω) Δ(Λ)),
//! f(ω) = ∫₀^∞ e^{−A t² − B ω t} dt = ½√(π/A) · erfcx(Bω / 2√A),
//! A = 64 w/3g²,   B = 2 w/g²,   w = 8πλ³(2j+1),
//! N^j = (∏_{k=1}^{2j} k!)² (2w/g²)^{−2j(2j+1)},
//! ```
//!
//! with Λ = ω for the plain partition function and Λ = ω + σ when a source
//! is coupled. Known transcription issue in circulated forms of f: the
//! printed constants (prefactor √(π/2A)-style, quartic coefficient without
//! the /3) do not satisfy the defining t-integral; this module takes the
//! integral itself as the definition, and the adaptive-quadrature oracle
//! pins the convention.
//!
//! Degenerate spectra make both det f and Δ² vanish; their ratio stays
//! finite and is evaluated either by ε-splitting the degenerate entries
//! with Richardson extrapolation (default; reuses the generic path) or by
//! the exact confluent determinant with divided-difference rows built from
//! kernel derivatives (cross-check).

pub mod confluent;
pub mod dd;
pub mod erfcx;
pub mod linalg;
pub mod lognum;

use serde::{Deserialize, Serialize};

pub use erfcx::erfcx;
pub use lognum::LogNumber;

use crate::error::{Error, Result};
use crate::fuzzy_algebra::HalfInt;
use crate::kinetic::{group_sorted, Spectrum};
use dd::Dd;
use linalg::{
    cholesky, condition_1norm, lu_full_pivot, rowcol_equilibrate, sym_equilibrate, Scalar,
};
use lognum::ln_factorial;

/// Condition threshold above which factorizations are redone in software
/// double-double. The extended pass rebuilds the matrix entries in
/// double-double as well whenever the asymptotic kernel series covers the
/// arguments (erfcx for the distinct path, Watson moments for the confluent
/// path), so the κ·u accuracy floor drops from κ·1e−16 to κ·1e−32; below
/// the series domain the double entries are promoted and only elimination
/// cancellation is removed. The reported condition number makes the
/// remaining floor visible either way.
pub const DD_CONDITION_THRESHOLD: f64 = 1e12;

/// Absolute convergence tolerance for the ε-split Richardson extrapolation
/// of ln(det/ΔΔ), scaled by max(1, |value|·1e−2).
pub const EXTRAPOLATION_TOL: f64 = 1e-7;

/// Relative slack allowed between caller-supplied kernel parameters and the
/// (j, g², λ)-derived values.
const KP_CONSISTENCY_RTOL: f64 = 1e-9;

/// Kernel constants of one level.
///
/// `a` = A = 64w/3g² (quartic Gaussian coefficient), `b` = B = 2w/g²
/// (linear coefficient), `w` = 8πλ³(2j+1) (trace weight).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub a: f64,
    pub b: f64,
    pub w: f64,
}

impl KernelParams {
    /// Derives the level constants from (j, g², λ).
    pub fn from_model(j: HalfInt, g2: f64, lambda: f64) -> Result<Self> {
        if !(g2 > 0.0 && g2.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "g2",
                message: format!("must be > 0 and finite, got {g2}"),
            });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                message: format!("must be > 0 and finite, got {lambda}"),
            });
        }
        let w = 8.0 * std::f64::consts::PI * lambda.powi(3) * j.dim() as f64;
        Ok(KernelParams {
            a: 64.0 * w / (3.0 * g2),
            b: 2.0 * w / g2,
            w,
        })
    }

    /// Formal-unit constants for kernel-level work (e.g. A = 64/3, B = 2).
    /// [`partition_level`] requires model-consistent constants and rejects
    /// raw ones that do not match its (j, g², λ).
    pub fn raw(a: f64, b: f64, w: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("w", w)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: match name {
                        "a" => "a",
                        "b" => "b",
                        _ => "w",
                    },
                    message: format!("must be > 0 and finite, got {v}"),
                });
            }
        }
        Ok(KernelParams { a, b, w })
    }

    pub(crate) fn consistent_with(&self, j: HalfInt, g2: f64, lambda: f64) -> Result<()> {
        let expect = KernelParams::from_model(j, g2, lambda)?;
        let close = |x: f64, y: f64| (x - y).abs() <= KP_CONSISTENCY_RTOL * y.abs();
        if close(self.a, expect.a) && close(self.b, expect.b) && close(self.w, expect.w) {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "kernel_params",
                message: format!(
                    "inconsistent with (2j={}, g2={g2}, lambda={lambda}): \
                     got (A={}, B={}, w={}), expected (A={}, B={}, w={})",
                    j.twice(),
                    self.a,
                    self.b,
                    self.w,
                    expect.a,
                    expect.b,
                    expect.w
                ),
            })
        }
    }
}

/// The partition kernel f(ω) = ∫₀^∞ e^{−At²−Bωt} dt as a LogNumber,
/// evaluated through erfcx so no e^{+x²}-scale intermediate appears.
///
/// Strictly positive and strictly decreasing in ω; behaves as √π/(2√A) for
/// Bω ≪ √A and as 1/(Bω) for Bω ≫ √A.
pub fn kernel_f(omega: f64, kp: &KernelParams) -> Result<LogNumber> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "omega",
            message: format!("kernel argument must be > 0 and finite, got {omega}"),
        });
    }
    Ok(LogNumber::from_ln(1, ln_kernel_f(omega, kp)))
}

/// ln f(ω) as a plain f64 (see [`kernel_f`]).
pub(crate) fn ln_kernel_f(omega: f64, kp: &KernelParams) -> f64 {
    let z = kp.b * omega / (2.0 * kp.a.sqrt());
    0.5 * (std::f64::consts::PI / kp.a).ln() - std::f64::consts::LN_2 + erfcx(z).ln()
}

/// Vandermonde product ∏_{k<l}(x_l − x_k) of an arbitrary (not necessarily
/// sorted) list; sign 0 iff two entries coincide exactly.
pub fn log_vandermonde_slice(xs: &[f64]) -> LogNumber {
    let mut sign = 1i8;
    let mut ln = 0.0;
    for k in 0..xs.len() {
        for l in k + 1..xs.len() {
            let d = xs[l] - xs[k];
            if d == 0.0 {
                return LogNumber::ZERO;
            }
            if d < 0.0 {
                sign = -sign;
            }
            ln += d.abs().ln();
        }
    }
    LogNumber::from_ln(sign, ln)
}

/// Vandermonde product of a spectrum (sorted, so the sign is +1 unless an
/// exact degeneracy collapses it to zero).
pub fn log_vandermonde(s: &Spectrum) -> LogNumber {
    log_vandermonde_slice(s.omegas())
}

/// Normalization N^j = (∏_{k=1}^{2j} k!)² (2w/g²)^{−2j(2j+1)} via log sums.
pub fn log_normalization(j: HalfInt, g2: f64, lambda: f64) -> Result<LogNumber> {
    let kp = KernelParams::from_model(j, g2, lambda)?;
    let tj = j.twice() as u64;
    let ln_fact_sum: f64 = (1..=tj).map(ln_factorial).sum();
    // exponent −2j(2j+1) = −tj(tj+1), exact in integers
    let exponent = -((tj * (tj + 1)) as f64);
    Ok(LogNumber::from_ln(
        1,
        2.0 * ln_fact_sum + exponent * kp.b.ln(),
    ))
}

/// How a degenerate (multiplicity > 1) spectrum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DegeneracyPolicy {
    /// Split each multiplicity-m group value c into c(1 + εδ_i) with
    /// symmetric integer offsets δ_i, evaluate the generic path at ε, ε/2,
    /// ε/4 and Richardson-extrapolate ln(det/ΔΔ) (even in ε, so the error
    /// order after two stages is ε⁶). `eps0` is the relative split width,
    /// automatically capped so split clusters never cross group gaps.
    EpsilonSplit { eps0: f64 },
    /// Exact confluent determinant: one row/column block per group with
    /// divided-difference entries f^{(a+b)}(c_g+c_h)/(a!b!), denominator
    /// ∏_{g<h}(c_h−c_g)^{m_g m_h} per side.
    DividedDifference,
}

impl Default for DegeneracyPolicy {
    fn default() -> Self {
        DegeneracyPolicy::EpsilonSplit { eps0: 1e-2 }
    }
}

/// Which evaluation path actually ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyUsed {
    /// Distinct spectrum, plain determinant.
    Direct,
    EpsilonSplit,
    DividedDifference,
}

/// Numerical health of the determinant evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConditionDiagnostics {
    /// Exact 1-norm condition number of the equilibrated f-matrix (the
    /// worst one across ε-split evaluations). Attainable log-det accuracy
    /// is bounded by n·κ·u with u the entry rounding unit (1e−16 plain,
    /// ~1e−32 when the extended pass rebuilt the entries).
    pub f_matrix_cond_1norm: f64,
    /// True when the double-double pass ran (entries rebuilt in extended
    /// precision when the asymptotic series covers the kernel arguments,
    /// promoted doubles otherwise).
    pub extended_precision_used: bool,
    /// Richardson residual |R₂ − R₁'| of the ε-split extrapolation, when
    /// that policy ran.
    pub extrapolation_residual: Option<f64>,
}

/// Result of one level evaluation. The representation identity
/// `log_z = log_n · (2j+1)! · log_det_f / log_vdm_sq` holds exactly (the
/// output is assembled as that very product). For confluent evaluations
/// via ε-splitting, the finite ratio det/ΔΔ is carried entirely in
/// `log_det_f` and `log_vdm_sq` is 1; the divided-difference policy stores
/// the confluent determinant and the confluent denominator separately.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionResult {
    pub j: HalfInt,
    pub log_z: LogNumber,
    pub log_n: LogNumber,
    pub log_det_f: LogNumber,
    pub log_vdm_sq: LogNumber,
    pub policy_used: PolicyUsed,
    pub diagnostics: ConditionDiagnostics,
}

/// Evaluates ln Z_j for a level spectrum.
///
/// `kp` must be consistent with (j, g², λ) to 1e−9 relative. The result is
/// invariant under input spectrum order (spectra are sorted at
/// construction), and its sign is +1: for distinct positive spectra the
/// f-matrix is the Gram matrix of the exponentials e^{−Bω_m t} under the
/// measure e^{−At²}dt on t > 0, hence positive definite, and confluent
/// values are limits of such determinants.
pub fn partition_level(
    s: &Spectrum,
    kp: &KernelParams,
    j: HalfInt,
    g2: f64,
    lambda: f64,
    policy: DegeneracyPolicy,
) -> Result<PartitionResult> {
    partition_mixed(s, None, kp, j, g2, lambda, policy)
}

/// Shared engine for Λ = ω (plain) and Λ = ω + σ (source-coupled): the two
/// cases run the identical code path, so a zero source reproduces
/// [`partition_level`] bit for bit.
pub(crate) fn partition_mixed(
    s: &Spectrum,
    right: Option<&[f64]>,
    kp: &KernelParams,
    j: HalfInt,
    g2: f64,
    lambda: f64,
    policy: DegeneracyPolicy,
) -> Result<PartitionResult> {
    if s.j() != j {
        return Err(Error::LevelMismatch {
            expected: j.twice(),
            got: s.j().twice(),
        });
    }
    kp.consistent_with(j, g2, lambda)?;
    let n = s.len();
    let left: &[f64] = s.omegas();

    // Right spectrum Λ: sorted copy. Sorting permutes determinant columns
    // and Δ(Λ) factors by the same signature, so the ratio is unchanged.
    let right_sorted: Vec<f64> = match right {
        None => left.to_vec(),
        Some(r) => {
            if r.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
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
    let symmetric = right_sorted.as_slice() == left;

    let groups_l: Vec<(f64, usize)> = s
        .groups()
        .iter()
        .map(|g| (s.group_value(*g), g.len))
        .collect();
    let groups_r: Vec<(f64, usize)> = if symmetric {
        groups_l.clone()
    } else {
        group_sorted(&right_sorted)
            .iter()
            .map(|g| (right_sorted[g.start], g.len))
            .collect()
    };
    let degenerate =
        groups_l.iter().any(|&(_, m)| m > 1) || groups_r.iter().any(|&(_, m)| m > 1);

    let log_n = log_normalization(j, g2, lambda)?;
    let fact = LogNumber::factorial(n as u64);

    let (log_det_f, log_vdm_sq, policy_used, diagnostics) = if !degenerate {
        let (det, cond, ext) = logdet_f_matrix(left, &right_sorted, kp, symmetric)?;
        // e^{−Bxt} is a strictly totally positive kernel, so det f > 0 for
        // sorted distinct spectra; a flipped sign is a numerical failure
        if det.sign != 1 {
            return Err(Error::FactorizationFailed(
                "f-matrix determinant lost positivity".into(),
            ));
        }
        let vdm = log_vandermonde_slice(left) * log_vandermonde_slice(&right_sorted);
        (
            det,
            vdm,
            PolicyUsed::Direct,
            ConditionDiagnostics {
                f_matrix_cond_1norm: cond,
                extended_precision_used: ext,
                extrapolation_residual: None,
            },
        )
    } else {
        match policy {
            DegeneracyPolicy::DividedDifference => {
                let (det, cond, ext) = confluent_logdet(&groups_l, &groups_r, kp)?;
                if det.sign != 1 {
                    return Err(Error::FactorizationFailed(
                        "confluent determinant lost positivity".into(),
                    ));
                }
                let vdm = confluent_vandermonde(&groups_l) * confluent_vandermonde(&groups_r);
                (
                    det,
                    vdm,
                    PolicyUsed::DividedDifference,
                    ConditionDiagnostics {
                        f_matrix_cond_1norm: cond,
                        extended_precision_used: ext,
                        extrapolation_residual: None,
                    },
                )
            }
            DegeneracyPolicy::EpsilonSplit { eps0 } => {
                let eps = cap_split_width(eps0, &groups_l).min(cap_split_width(eps0, &groups_r));
                let mut ln_ratios = [0.0; 3];
                let mut worst_cond: f64 = 0.0;
                let mut ext_any = false;
                for (k, scale) in [1.0, 0.5, 0.25].into_iter().enumerate() {
                    let e = eps * scale;
                    let lv = split_groups(&groups_l, e);
                    let rv = if symmetric {
                        lv.clone()
                    } else {
                        split_groups(&groups_r, e)
                    };
                    let (det, cond, ext) = logdet_f_matrix(&lv, &rv, kp, symmetric)?;
                    let vdm = log_vandermonde_slice(&lv) * log_vandermonde_slice(&rv);
                    let ratio = det / vdm;
                    if ratio.sign != 1 {
                        return Err(Error::FactorizationFailed(format!(
                            "split determinant ratio lost positivity at eps={e:e}"
                        )));
                    }
                    ln_ratios[k] = ratio.log_abs;
                    worst_cond = worst_cond.max(cond);
                    ext_any |= ext;
                }
                let (ln_ratio, residual) = richardson3(ln_ratios);
                let tol = EXTRAPOLATION_TOL * 1.0f64.max(ln_ratio.abs());
                if !(residual <= tol) {
                    return Err(Error::ExtrapolationFailed { residual, tol });
                }
                (
                    LogNumber::from_ln(1, ln_ratio),
                    LogNumber::ONE,
                    PolicyUsed::EpsilonSplit,
                    ConditionDiagnostics {
                        f_matrix_cond_1norm: worst_cond,
                        extended_precision_used: ext_any,
                        extrapolation_residual: Some(residual),
                    },
                )
            }
        }
    };

    let log_z = log_n * fact * log_det_f / log_vdm_sq;
    Ok(PartitionResult {
        j,
        log_z,
        log_n,
        log_det_f,
        log_vdm_sq,
        policy_used,
        diagnostics,
    })
}

/// Two-stage Richardson extrapolation of an even-order sequence
/// L(ε), L(ε/2), L(ε/4); returns (limit, residual).
fn richardson3(l: [f64; 3]) -> (f64, f64) {
    let r1 = (4.0 * l[1] - l[0]) / 3.0;
    let r1b = (4.0 * l[2] - l[1]) / 3.0;
    let r2 = (16.0 * r1b - r1) / 15.0;
    (r2, (r2 - r1b).abs())
}

/// Widest safe split width: clusters of adjacent groups must stay disjoint
/// (with a 4x margin), and every split value must stay positive.
fn cap_split_width(eps0: f64, groups: &[(f64, usize)]) -> f64 {
    let max_half_span = groups
        .iter()
        .map(|&(_, m)| (m as f64 - 1.0) / 2.0)
        .fold(0.5, f64::max);
    let mut eps = eps0.min(0.5 / max_half_span);
    for pair in groups.windows(2) {
        let gap_rel = (pair[1].0 - pair[0].0) / pair[1].0;
        eps = eps.min(gap_rel / (4.0 * max_half_span));
    }
    eps
}

/// Replaces each group (c, m) by the m values c(1 + ε δ_i), δ_i symmetric
/// integers-plus-half offsets around 0; multiplicity-1 groups pass through
/// bit-exactly.
fn split_groups(groups: &[(f64, usize)], eps: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &(c, m) in groups {
        if m == 1 {
            out.push(c);
        } else {
            for i in 0..m {
                let delta = i as f64 - (m as f64 - 1.0) / 2.0;
                out.push(c * (1.0 + eps * delta));
            }
        }
    }
    out
}

/// Confluent Vandermonde ∏_{g<h}(c_h − c_g)^{m_g m_h} over a sorted group
/// list (the finite part of Δ after dividing out the coincident factors).
fn confluent_vandermonde(groups: &[(f64, usize)]) -> LogNumber {
    let mut ln = 0.0;
    for g in 0..groups.len() {
        for h in g + 1..groups.len() {
            let d = groups[h].0 - groups[g].0;
            ln += (groups[g].1 * groups[h].1) as f64 * d.ln();
        }
    }
    LogNumber::from_ln(1, ln)
}

/// Signed log-determinant of the f-matrix f(l_i + r_j), with the 1-norm
/// condition number of the equilibrated matrix and whether the
/// double-double pass ran.
///
/// Symmetric inputs (r == l) go through diagonally pivoted Cholesky on the
/// unit-diagonal equilibrated matrix (falling back to LU on breakdown);
/// general inputs go through full-pivot LU after row/column equilibration.
fn logdet_f_matrix(
    left: &[f64],
    right: &[f64],
    kp: &KernelParams,
    symmetric: bool,
) -> Result<(LogNumber, f64, bool)> {
    let n = left.len();
    debug_assert_eq!(right.len(), n);
    // G_ij = erfcx(B(l_i + r_j)/2√A): all entries in (0, 1], so the scalar
    // prefactor ½√(π/A) per row is pulled out as n·ln s.
    let inv_2sqrt_a = 1.0 / (2.0 * kp.a.sqrt());
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for jc in 0..n {
            let omega = left[i] + right[jc];
            if !(omega > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "omega",
                    message: format!("kernel argument must be > 0, got {omega}"),
                });
            }
            g[i * n + jc] = erfcx(kp.b * omega * inv_2sqrt_a);
        }
    }
    let ln_s = 0.5 * (std::f64::consts::PI / kp.a).ln() - std::f64::consts::LN_2;

    let (sign, ln_det_g, cond, ext) = if symmetric {
        let (s_mat, ln_scale) = sym_equilibrate(&g, n);
        match cholesky::<f64>(&s_mat, n) {
            Some(f) => {
                let cond = condition_1norm(&s_mat, n, |b| Some(f.solve(b)));
                if cond > DD_CONDITION_THRESHOLD {
                    sym_dd_redo(left, right, kp, &s_mat, ln_scale, n, cond)?
                } else {
                    (1i8, f.logdet().ln_abs + ln_scale, cond, false)
                }
            }
            None => {
                // SPD in exact arithmetic; breakdown means severe
                // ill-conditioning, so go straight to the extended pass.
                sym_dd_redo(left, right, kp, &s_mat, ln_scale, n, f64::INFINITY)?
            }
        }
    } else {
        let (m, ln_scale) = rowcol_equilibrate(&g, n);
        let lu = lu_full_pivot::<f64>(&m, n);
        let cond = condition_1norm(&m, n, |b| lu.solve(b));
        if cond > DD_CONDITION_THRESHOLD {
            if let Some(gd) = build_erfcx_dd_matrix(left, right, kp) {
                lu_logdet::<Dd>(&gd, n, 0.0, cond, true)?
            } else {
                let md: Vec<Dd> = m.iter().map(|&v| Dd::from_f64(v)).collect();
                lu_logdet::<Dd>(&md, n, ln_scale, cond, true)?
            }
        } else {
            let ld = lu.logdet();
            (ld.sign, ld.ln_abs + ln_scale, cond, false)
        }
    };

    Ok((
        LogNumber::from_ln(sign, n as f64 * ln_s + ln_det_g),
        cond,
        ext,
    ))
}

/// Extended-precision redo of the symmetric branch: entries rebuilt in
/// double-double when the asymptotic erfcx series covers every kernel
/// argument (then factored unequilibrated, full pivoting copes with the
/// scale spread), promoted equilibrated doubles otherwise.
fn sym_dd_redo(
    left: &[f64],
    right: &[f64],
    kp: &KernelParams,
    s_mat: &[f64],
    ln_scale: f64,
    n: usize,
    cond: f64,
) -> Result<(i8, f64, f64, bool)> {
    if let Some(gd) = build_erfcx_dd_matrix(left, right, kp) {
        return match cholesky::<Dd>(&gd, n) {
            Some(fd) => Ok((1i8, fd.logdet().ln_abs, cond, true)),
            None => lu_logdet::<Dd>(&gd, n, 0.0, cond, true),
        };
    }
    let sd: Vec<Dd> = s_mat.iter().map(|&v| Dd::from_f64(v)).collect();
    match cholesky::<Dd>(&sd, n) {
        Some(fd) => Ok((1i8, fd.logdet().ln_abs + ln_scale, cond, true)),
        None => lu_logdet::<Dd>(&sd, n, ln_scale, cond, true),
    }
}

/// erfcx-matrix entries in double-double, with the argument product
/// B(l_i + r_j)/2√A itself formed in double-double so no f64 rounding
/// enters ahead of the series. `None` as soon as one argument falls below
/// the asymptotic-series domain.
fn build_erfcx_dd_matrix(left: &[f64], right: &[f64], kp: &KernelParams) -> Option<Vec<Dd>> {
    let n = left.len();
    let bd = Dd::from_f64(kp.b);
    let sqrt_a2 = Dd::from_f64(kp.a).sqrt().mul(Dd::from_f64(2.0));
    let mut g = Vec::with_capacity(n * n);
    for &l in left {
        for &r in right {
            let x = bd
                .mul(Dd::from_f64(l).add(Dd::from_f64(r)))
                .div(sqrt_a2);
            g.push(erfcx::erfcx_dd(x)?);
        }
    }
    Some(g)
}

/// Full-pivot LU log-determinant in scalar type S, keeping a
/// previously-computed condition estimate in the result tuple.
fn lu_logdet<S: Scalar>(
    m: &[S],
    n: usize,
    ln_scale: f64,
    cond: f64,
    ext: bool,
) -> Result<(i8, f64, f64, bool)> {
    let lu = lu_full_pivot(m, n);
    let ld = lu.logdet();
    if ld.sign == 0 {
        return Err(Error::FactorizationFailed(
            "determinant numerically zero".into(),
        ));
    }
    Ok((ld.sign, ld.ln_abs + ln_scale, cond, ext))
}

/// Exact confluent determinant over multiplicity groups: block rows carry
/// derivative orders a = 0..m_g−1, entries f^{(a+b)}(c_g + c_h)/(a! b!)
/// with f^{(k)}(x) = (−B)^k m_k(Bx).
fn confluent_logdet(
    groups_l: &[(f64, usize)],
    groups_r: &[(f64, usize)],
    kp: &KernelParams,
) -> Result<(LogNumber, f64, bool)> {
    let n: usize = groups_l.iter().map(|&(_, m)| m).sum();
    debug_assert_eq!(n, groups_r.iter().map(|&(_, m)| m).sum::<usize>());
    let rows: Vec<(usize, usize)> = block_indices(groups_l);
    let cols: Vec<(usize, usize)> = block_indices(groups_r);

    let mut mat = vec![0.0; n * n];
    for (g, &(cg, ml)) in groups_l.iter().enumerate() {
        for (h, &(ch, mr)) in groups_r.iter().enumerate() {
            let kmax = (ml - 1) + (mr - 1);
            let mom = confluent::moments(kp.a, kp.b * (cg + ch), kmax);
            for (r, &(rg, a)) in rows.iter().enumerate() {
                if rg != g {
                    continue;
                }
                for (c, &(ch_idx, b)) in cols.iter().enumerate() {
                    if ch_idx != h {
                        continue;
                    }
                    let k = a + b;
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let fac_a: f64 = (1..=a).map(|v| v as f64).product();
                    let fac_b: f64 = (1..=b).map(|v| v as f64).product();
                    mat[r * n + c] = sign * kp.b.powi(k as i32) * mom[k] / (fac_a * fac_b);
                }
            }
        }
    }

    let (m, ln_scale) = rowcol_equilibrate(&mat, n);
    let lu = lu_full_pivot::<f64>(&m, n);
    let cond = condition_1norm(&m, n, |b| lu.solve(b));
    let (sign, ln_det, cond, ext) = if cond > DD_CONDITION_THRESHOLD {
        if let Some(matd) = confluent_matrix_dd(groups_l, groups_r, &rows, &cols, kp) {
            lu_logdet::<Dd>(&matd, n, 0.0, cond, true)?
        } else {
            let md: Vec<Dd> = m.iter().map(|&v| Dd::from_f64(v)).collect();
            lu_logdet::<Dd>(&md, n, ln_scale, cond, true)?
        }
    } else {
        let ld = lu.logdet();
        if ld.sign == 0 {
            return Err(Error::FactorizationFailed(
                "confluent determinant numerically zero".into(),
            ));
        }
        (ld.sign, ld.ln_abs + ln_scale, cond, false)
    };
    // no ½√(π/A) prefactor here: the moment integrals m_k carry the full
    // kernel scale (f itself is m_0), unlike the erfcx-based distinct path
    Ok((LogNumber::from_ln(sign, ln_det), cond, ext))
}

/// Confluent derivative matrix in double-double, available when every
/// group-pair argument B(c_g + c_h) sits on the asymptotic moment branch.
/// Arguments are formed in double-double before entering the series.
fn confluent_matrix_dd(
    groups_l: &[(f64, usize)],
    groups_r: &[(f64, usize)],
    rows: &[(usize, usize)],
    cols: &[(usize, usize)],
    kp: &KernelParams,
) -> Option<Vec<Dd>> {
    let n = rows.len();
    let bd = Dd::from_f64(kp.b);
    let mut mat = vec![Dd::ZERO; n * n];
    for (g, &(cg, ml)) in groups_l.iter().enumerate() {
        for (h, &(ch, mr)) in groups_r.iter().enumerate() {
            let kmax = (ml - 1) + (mr - 1);
            let arg = bd.mul(Dd::from_f64(cg).add(Dd::from_f64(ch)));
            let mom = confluent::moments_dd(kp.a, arg, kmax)?;
            let mut bpow = Vec::with_capacity(kmax + 1);
            let mut p = Dd::from_f64(1.0);
            for _ in 0..=kmax {
                bpow.push(p);
                p = p.mul(bd);
            }
            for (r, &(rg, a)) in rows.iter().enumerate() {
                if rg != g {
                    continue;
                }
                for (c, &(ch_idx, b)) in cols.iter().enumerate() {
                    if ch_idx != h {
                        continue;
                    }
                    let k = a + b;
                    let fac_a: f64 = (1..=a).map(|v| v as f64).product();
                    let fac_b: f64 = (1..=b).map(|v| v as f64).product();
                    let mut v = bpow[k].mul(mom[k]).div(Dd::from_f64(fac_a * fac_b));
                    if k % 2 == 1 {
                        v = v.neg();
                    }
                    mat[r * n + c] = v;
                }
            }
        }
    }
    Some(mat)
}

/// Flattens group multiplicities into (group index, derivative order) pairs.
fn block_indices(groups: &[(f64, usize)]) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for (g, &(_, m)) in groups.iter().enumerate() {
        for a in 0..m {
            v.push((g, a));
        }
    }
    v
}
