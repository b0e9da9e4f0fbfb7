//! Gauge-fixed kinetic data of one level: the 4-index quadratic kernel at
//! general Ω and the (2j+1)-entry radial spectrum consumed by the exact
//! engine at Ω = 1/3.
//!
//! The kernel on the matrix-unit basis is diagonal with values
//!
//! ```text
//! q(k,l) = M + μλ²j(j+1) + (2Ω/λ²)(k+l)² + (2/λ²)(k−l)²,   k,l = −j..j,
//! ```
//!
//! strictly positive for M>0, μ>0, Ω≥0. The exact solution consumes a
//! (2j+1)-eigenvalue family ω^j_m; the map from the 4-index kernel to that
//! family is not pinned down by the quadratic form alone, so this module
//! adopts the diagonal restriction k = l = m as the default bridge
//! ([`radial_spectrum`], ω_m = q(m,m) = M + μλ²j(j+1) + (8Ω/λ²)m²) and keeps
//! the engine spectrum-parametric through [`custom_spectrum`]. Conclusions
//! drawn from the radial choice carry that caveat.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy_algebra::{HalfInt, ModelParams};

/// Relative tolerance for declaring two spectrum entries equal. Radial
/// spectra produce exact ties (identical expressions for ±m), so this only
/// matters for user-supplied custom spectra.
pub const DEGENERACY_REL_TOL: f64 = 1e-12;

/// The quartic-form kernel values q(k,l) of one level.
#[derive(Debug, Clone)]
pub struct QuadraticKernel {
    pub j: HalfInt,
    pub params: ModelParams,
    /// Row-major (k,l) table in the storage order k,l = −j..j.
    values: Vec<f64>,
}

impl QuadraticKernel {
    /// Kernel value at magnetic labels (2k, 2l).
    pub fn value(&self, twice_k: i64, twice_l: i64) -> f64 {
        let tj = self.j.twice() as i64;
        let row = ((twice_k + tj) / 2) as usize;
        let col = ((twice_l + tj) / 2) as usize;
        self.values[row * self.j.dim() + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Builds the full (2j+1)² kernel table.
pub fn kernel(j: HalfInt, params: &ModelParams) -> QuadraticKernel {
    let base = params.m + params.mu * params.lambda * params.lambda * j.casimir();
    let inv_l2 = 1.0 / (params.lambda * params.lambda);
    let mut values = Vec::with_capacity(j.dim() * j.dim());
    for tk in j.twice_m_values() {
        for tl in j.twice_m_values() {
            // (k±l)² = (2k±2l)²/4, all exact in integers
            let sum2 = ((tk + tl) * (tk + tl)) as f64 / 4.0;
            let diff2 = ((tk - tl) * (tk - tl)) as f64 / 4.0;
            let q = base + 2.0 * inv_l2 * (params.omega * sum2 + diff2);
            debug_assert!(q > 0.0);
            values.push(q);
        }
    }
    QuadraticKernel {
        j,
        params: *params,
        values,
    }
}

/// A contiguous run of equal eigenvalues in a sorted spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityGroup {
    pub start: usize,
    pub len: usize,
}

/// Sorted positive eigenvalue list of one level with multiplicity
/// bookkeeping.
///
/// Entries are non-decreasing; `groups` partitions the index range into
/// maximal runs equal under [`DEGENERACY_REL_TOL`] (each run compared
/// against its first element, so groups cannot drift).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    j: HalfInt,
    omegas: Vec<f64>,
    groups: Vec<MultiplicityGroup>,
}

impl Spectrum {
    pub fn j(&self) -> HalfInt {
        self.j
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn groups(&self) -> &[MultiplicityGroup] {
        &self.groups
    }

    /// Representative value of a multiplicity group (its first entry).
    pub fn group_value(&self, g: MultiplicityGroup) -> f64 {
        self.omegas[g.start]
    }

    pub fn has_degeneracy(&self) -> bool {
        self.groups.iter().any(|g| g.len > 1)
    }

    /// Number of groups with multiplicity > 1.
    pub fn degenerate_group_count(&self) -> usize {
        self.groups.iter().filter(|g| g.len > 1).count()
    }
}

/// Groups a sorted slice into equal-value runs under the relative tolerance.
pub(crate) fn group_sorted(omegas: &[f64]) -> Vec<MultiplicityGroup> {
    let mut groups: Vec<MultiplicityGroup> = Vec::new();
    for (i, &w) in omegas.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if {
                let rep = omegas[g.start];
                (w - rep).abs() <= DEGENERACY_REL_TOL * rep.abs().max(w.abs())
            } =>
            {
                g.len += 1;
            }
            _ => groups.push(MultiplicityGroup { start: i, len: 1 }),
        }
    }
    groups
}

/// The diagonal-restriction spectrum ω_m = M + μλ²j(j+1) + (8Ω/λ²)m²,
/// m = −j..j, sorted with ±m ties marked as multiplicity-2 groups.
pub fn radial_spectrum(j: HalfInt, params: &ModelParams) -> Spectrum {
    let base = params.m + params.mu * params.lambda * params.lambda * j.casimir();
    let inv_l2 = 1.0 / (params.lambda * params.lambda);
    let mut omegas: Vec<f64> = j
        .twice_m_values()
        .map(|tm| base + 2.0 * params.omega * inv_l2 * (tm * tm) as f64)
        .collect();
    omegas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let groups = group_sorted(&omegas);
    Spectrum { j, omegas, groups }
}

/// Wraps an arbitrary positive eigenvalue list as a level-j spectrum,
/// sorting it and detecting multiplicities.
pub fn custom_spectrum(j: HalfInt, omegas: &[f64]) -> Result<Spectrum> {
    if omegas.len() != j.dim() {
        return Err(Error::LengthMismatch {
            expected: j.dim(),
            got: omegas.len(),
        });
    }
    for (index, &value) in omegas.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveSpectrum { index, value });
        }
    }
    let mut sorted = omegas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let groups = group_sorted(&sorted);
    Ok(Spectrum {
        j,
        omegas: sorted,
        groups,
    })
}
