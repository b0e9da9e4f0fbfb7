//! Partial sums W = Σ_j ln Z_j over fuzzy-sphere levels with tail
//! diagnostics.
//!
//! Whether the full product Z = ∏_j Z_j converges, or needs regularization,
//! is an open question; this module therefore reports and never decides:
//! increments ln Z_j, their cumulative sums, whether the increment
//! magnitudes are eventually monotone, and least-squares tail fits of
//! ln|ln Z_j| against ln j (power law) and against j (exponential). At unit
//! parameters the increments *grow* like j^≈2 (the normalization's
//! (2w/g²)^{−2j(2j+1)} dominates the spectral decay of f), so the partial
//! sums diverge level by level; the report says so via the fitted slope.
//!
//! Levels are evaluated through the divided-difference policy: radial
//! spectra carry exactly degenerate ±m pairs, and the confluent determinant
//! (half dimension, extended-precision entries past condition 1e12) is the
//! evaluation that stays sign-correct deepest into the level range.
//! Engine failures surface annotated with the offending level.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_partition::{partition_level, DegeneracyPolicy, KernelParams};
use crate::fuzzy_algebra::{HalfInt, ModelParams};
use crate::kinetic::{custom_spectrum, radial_spectrum, Spectrum};

/// Engine validity: the level decoupling holds at Ω = 1/3 only.
const OMEGA_TOL: f64 = 1e-12;

/// Where each level's spectrum comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpectrumSource {
    /// Radial kinetic eigenvalues ω_m = M + μλ²j(j+1) + 8Ω m²/λ².
    Radial,
    /// Explicit per-level spectra keyed by 2j; every requested level must
    /// be present.
    CustomTable(BTreeMap<u32, Vec<f64>>),
}

/// Least-squares tail models of ln|increment| over the levels with j > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Slope s of ln|ln Z_j| ≈ a + s·ln j.
    pub power_slope: f64,
    /// RMS residual of the power-law fit.
    pub power_residual: f64,
    /// Rate c of ln|ln Z_j| ≈ a + c·j.
    pub exp_rate: f64,
    /// RMS residual of the exponential fit.
    pub exp_residual: f64,
    pub n_points: usize,
}

/// Whether |increments| are monotone from some level onward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneTail {
    /// First level (as 2j) from which every following step moves the same
    /// direction.
    pub from_twice_j: u32,
    pub increasing: bool,
}

/// Level-resolved resummation data. `partial_sums` are the left-to-right
/// cumulative sums of `increments` (so re-accumulating the increments
/// reproduces them bitwise), and entry i of every list belongs to
/// `twice_j[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResumReport {
    pub j_max: HalfInt,
    pub twice_j: Vec<u32>,
    pub increments: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub monotone_tail: Option<MonotoneTail>,
    pub tail_fit: Option<TailFit>,
}

/// Evaluates ln Z_j for every half-integer level 0, 1/2, …, j_max and
/// assembles the diagnostic report. Iteration is over 2j = 0, 1, 2, …; no
/// floating-point level index exists anywhere.
pub fn resum(
    params: &ModelParams,
    j_max: HalfInt,
    source: &SpectrumSource,
) -> Result<ResumReport> {
    if (params.omega - 1.0 / 3.0).abs() > OMEGA_TOL {
        return Err(Error::InvalidParameter {
            name: "omega",
            message: format!(
                "level decoupling requires Omega = 1/3, got {}",
                params.omega
            ),
        });
    }
    let mut twice_j = Vec::new();
    let mut increments = Vec::new();
    let mut partial_sums = Vec::new();
    let mut running = 0.0;
    for tj in 0..=j_max.twice() {
        let jj = HalfInt::from_twice(tj);
        let s: Spectrum = match source {
            SpectrumSource::Radial => radial_spectrum(jj, params),
            SpectrumSource::CustomTable(table) => {
                let omegas = table.get(&tj).ok_or_else(|| {
                    Error::InvalidParameter {
                        name: "spectrum_table",
                        message: format!("no spectrum provided for level 2j = {tj}"),
                    }
                    .at_level(tj)
                })?;
                custom_spectrum(jj, omegas).map_err(|e| e.at_level(tj))?
            }
        };
        let kp =
            KernelParams::from_model(jj, params.g2, params.lambda).map_err(|e| e.at_level(tj))?;
        let r = partition_level(
            &s,
            &kp,
            jj,
            params.g2,
            params.lambda,
            DegeneracyPolicy::DividedDifference,
        )
        .map_err(|e| e.at_level(tj))?;
        let inc = r.log_z.signed_ln().ok_or_else(|| {
            Error::FactorizationFailed("level partition value lost positivity".into())
                .at_level(tj)
        })?;
        running += inc;
        twice_j.push(tj);
        increments.push(inc);
        partial_sums.push(running);
    }
    let monotone_tail = monotone_tail(&twice_j, &increments);
    let tail_fit = tail_fit(&twice_j, &increments);
    Ok(ResumReport {
        j_max,
        twice_j,
        increments,
        partial_sums,
        monotone_tail,
        tail_fit,
    })
}

/// Longest suffix over which |increments| move in one direction.
fn monotone_tail(twice_j: &[u32], increments: &[f64]) -> Option<MonotoneTail> {
    if increments.len() < 2 {
        return None;
    }
    let mags: Vec<f64> = increments.iter().map(|v| v.abs()).collect();
    let diffs: Vec<f64> = mags.windows(2).map(|w| w[1] - w[0]).collect();
    let increasing = *diffs.last().unwrap() > 0.0;
    let mut start = diffs.len() - 1;
    while start > 0 && ((diffs[start - 1] > 0.0) == increasing || diffs[start - 1] == 0.0) {
        start -= 1;
    }
    Some(MonotoneTail {
        from_twice_j: twice_j[start],
        increasing,
    })
}

/// Ordinary least squares of y over (1, x); returns (intercept, slope, rms).
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (intercept, slope, rms)
}

/// Fits ln|increment| against ln j and against j over levels with j > 0.
fn tail_fit(twice_j: &[u32], increments: &[f64]) -> Option<TailFit> {
    let mut xs_j = Vec::new();
    let mut xs_ln = Vec::new();
    let mut ys = Vec::new();
    for (&tj, &inc) in twice_j.iter().zip(increments) {
        if tj == 0 || inc == 0.0 {
            continue;
        }
        let jv = tj as f64 / 2.0;
        xs_j.push(jv);
        xs_ln.push(jv.ln());
        ys.push(inc.abs().ln());
    }
    if ys.len() < 3 {
        return None;
    }
    let (_, power_slope, power_residual) = fit_line(&xs_ln, &ys);
    let (_, exp_rate, exp_residual) = fit_line(&xs_j, &ys);
    Some(TailFit {
        power_slope,
        power_residual,
        exp_rate,
        exp_residual,
        n_points: ys.len(),
    })
}
