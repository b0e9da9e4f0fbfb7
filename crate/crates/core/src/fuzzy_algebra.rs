//! Matrix realization of one fuzzy-sphere level of R³_λ.
//!
//! The level j ∈ ℕ/2 algebra is M_{2j+1}(ℂ). Its distinguished hermitian
//! coordinates x₁, x₂, x₃ are λ times the spin-j angular momentum generators,
//! x₀ = λj is central, and the trace carries the weight 8πλ³(2j+1) that makes
//! level sums mimic 3-volume. Inner derivations D_α = i[θ_α, ·] with
//! θ_α = x_α/λ² close on the bracket [D_α, D_β] = −(1/λ)ε_{αβγ} D_γ, and the
//! covariant-coordinate curvature F_{μν} = [𝒜_μ, 𝒜_ν] + (1/λ)ε_{μνγ}𝒜_γ
//! vanishes on the gauge-invariant connection 𝒜 = iθ.
//!
//! Index convention, fixed once and used everywhere: the magnetic label
//! m = −j, −j+1, …, j maps to storage row m + j (m increasing downward).
//! Half-integers are carried exactly as doubled integers, never as floats.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute max-entry tolerance for (anti-)hermiticity checks. All
/// constructions here are exact up to rounding of square roots, so 1e-12
/// leaves three orders of headroom over accumulated roundoff.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A half-integer j ∈ ℕ/2 stored exactly as the integer 2j.
///
/// Ordering and arithmetic are integer-exact; `dim` = 2j+1 is the size of
/// the level-j matrix algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt {
    twice_j: u32,
}

impl HalfInt {
    pub fn from_twice(twice_j: u32) -> Self {
        HalfInt { twice_j }
    }

    /// The doubled value 2j.
    pub fn twice(self) -> u32 {
        self.twice_j
    }

    /// Matrix dimension 2j+1 of the level.
    pub fn dim(self) -> usize {
        self.twice_j as usize + 1
    }

    /// j as a float (exact: 2j fits well below 2^53).
    pub fn as_f64(self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    /// The Casimir value j(j+1), computed from integers so it is exact.
    pub fn casimir(self) -> f64 {
        let tj = self.twice_j as u64;
        (tj * (tj + 2)) as f64 / 4.0
    }

    /// Iterates the doubled magnetic labels 2m = −2j, −2j+2, …, 2j.
    pub fn twice_m_values(self) -> impl Iterator<Item = i64> {
        let tj = self.twice_j as i64;
        (0..=tj).map(move |k| -tj + 2 * k)
    }
}

impl std::fmt::Display for HalfInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.twice_j.is_multiple_of(2) {
            write!(f, "{}", self.twice_j / 2)
        } else {
            write!(f, "{}/2", self.twice_j)
        }
    }
}

/// Physical couplings of the model.
///
/// `lambda` is the deformation length scale, `m` the mass² coefficient of
/// the tr(Φ†Φ) term, `mu` the mass⁴ coefficient of the harmonic (x²) term,
/// `omega` the dimensionless oscillator parameter (the exact solution holds
/// at Ω = 1/3), `g2` the coupling g² of mass dimension 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub m: f64,
    pub mu: f64,
    pub omega: f64,
    pub g2: f64,
}

impl ModelParams {
    /// Validates positivity: λ, M, μ, g² strictly positive; Ω ≥ 0.
    pub fn new(lambda: f64, m: f64, mu: f64, omega: f64, g2: f64) -> Result<Self> {
        let check = |name: &'static str, v: f64, strict: bool| -> Result<()> {
            let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    message: format!(
                        "must be {} and finite, got {v}",
                        if strict { "> 0" } else { ">= 0" }
                    ),
                })
            }
        };
        check("lambda", lambda, true)?;
        check("m", m, true)?;
        check("mu", mu, true)?;
        check("omega", omega, false)?;
        check("g2", g2, true)?;
        Ok(ModelParams {
            lambda,
            m,
            mu,
            omega,
            g2,
        })
    }

    /// Unit couplings at the exactly solvable point: λ=M=μ=g²=1, Ω=1/3.
    pub fn unit_third() -> Self {
        ModelParams {
            lambda: 1.0,
            m: 1.0,
            mu: 1.0,
            omega: 1.0 / 3.0,
            g2: 1.0,
        }
    }
}

/// Dense complex square matrix attached to one level j.
///
/// Rows and columns are indexed by m = −j..j in increasing order through the
/// fixed bijection row = m + j.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMatrix {
    j: HalfInt,
    entries: Vec<Complex64>,
}

impl LevelMatrix {
    pub fn zero(j: HalfInt) -> Self {
        LevelMatrix {
            j,
            entries: vec![Complex64::ZERO; j.dim() * j.dim()],
        }
    }

    pub fn identity(j: HalfInt) -> Self {
        let mut x = Self::zero(j);
        for k in 0..j.dim() {
            x.entries[k * j.dim() + k] = Complex64::ONE;
        }
        x
    }

    /// Builds a matrix entrywise from storage indices (row, col).
    pub fn from_fn(j: HalfInt, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let n = j.dim();
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                entries.push(f(r, c));
            }
        }
        LevelMatrix { j, entries }
    }

    /// The canonical basis matrix unit v_{mn} with a single 1 at magnetic
    /// labels (2m_row, 2m_col).
    pub fn basis_unit(j: HalfInt, twice_m_row: i64, twice_m_col: i64) -> Self {
        let mut x = Self::zero(j);
        let r = x.row_of(twice_m_row);
        let c = x.row_of(twice_m_col);
        x.entries[r * j.dim() + c] = Complex64::ONE;
        x
    }

    pub fn j(&self) -> HalfInt {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    /// Storage row of magnetic label 2m (panics if 2m is not a valid label).
    pub fn row_of(&self, twice_m: i64) -> usize {
        let tj = self.j.twice() as i64;
        assert!(
            twice_m.abs() <= tj && (twice_m + tj) % 2 == 0,
            "invalid magnetic label 2m={twice_m} at 2j={tj}"
        );
        ((twice_m + tj) / 2) as usize
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        let n = self.dim();
        self.entries[row * n + col] = v;
    }

    fn same_level(&self, other: &LevelMatrix) -> Result<()> {
        if self.j != other.j {
            Err(Error::LevelMismatch {
                expected: self.j.twice(),
                got: other.j.twice(),
            })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &LevelMatrix) -> Result<LevelMatrix> {
        self.same_level(other)?;
        Ok(LevelMatrix {
            j: self.j,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &LevelMatrix) -> Result<LevelMatrix> {
        self.same_level(other)?;
        Ok(LevelMatrix {
            j: self.j,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> LevelMatrix {
        LevelMatrix {
            j: self.j,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, other: &LevelMatrix) -> Result<LevelMatrix> {
        self.same_level(other)?;
        let n = self.dim();
        let mut out = LevelMatrix::zero(self.j);
        for r in 0..n {
            for k in 0..n {
                let a = self.entries[r * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                for c in 0..n {
                    out.entries[r * n + c] += a * other.entries[k * n + c];
                }
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &LevelMatrix) -> Result<LevelMatrix> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn dagger(&self) -> LevelMatrix {
        let n = self.dim();
        LevelMatrix::from_fn(self.j, |r, c| self.entries[c * n + r].conj())
    }

    /// Plain matrix trace (no volume weight).
    pub fn trace(&self) -> Complex64 {
        let n = self.dim();
        (0..n).map(|k| self.entries[k * n + k]).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |X − X†| over entries; 0 for exactly hermitian X.
    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.dagger()).map(|d| d.max_abs_entry()).unwrap()
    }

    /// max |X + X†| over entries; 0 for exactly anti-hermitian X.
    pub fn anti_hermiticity_residual(&self) -> f64 {
        self.add(&self.dagger()).map(|d| d.max_abs_entry()).unwrap()
    }
}

/// The coordinate data of one level: hermitian x₁, x₂, x₃ (length units),
/// the central scalar x₀ = λj, and the derivation generators θ_α = x_α/λ².
#[derive(Debug, Clone)]
pub struct CoordinateSet {
    pub j: HalfInt,
    pub lambda: f64,
    pub x1: LevelMatrix,
    pub x2: LevelMatrix,
    pub x3: LevelMatrix,
    pub x0: f64,
    pub theta: [LevelMatrix; 3],
}

/// Builds the coordinate matrices of level j at deformation scale λ.
///
/// With the spin raising operator (J₊)_{m+1,m} = √((j−m)(j+m+1)) in the
/// m-increasing storage convention, the coordinates are x₁ = λ(J₊+J₋)/2,
/// x₂ = λ(J₊−J₋)/2i and x₃ = λ·diag(m), so [x_a, x_b] = iλ ε_{abc} x_c and
/// x₁²+x₂²+x₃² = λ²j(j+1)·1. Note that x₃'s diagonal runs from −λj up to +λj
/// in storage order.
pub fn make_coordinates(j: HalfInt, lambda: f64) -> Result<CoordinateSet> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            message: format!("must be > 0 and finite, got {lambda}"),
        });
    }
    let n = j.dim();
    let tj = j.twice() as i64;
    let mut jp = LevelMatrix::zero(j); // raising operator J₊
    for (k, twice_m) in j.twice_m_values().enumerate() {
        if twice_m == tj {
            break;
        }
        // √((j−m)(j+m+1)) with the products done in integers.
        let val = (((tj - twice_m) * (tj + twice_m + 2)) as f64).sqrt() / 2.0;
        jp.set(k + 1, k, Complex64::new(val, 0.0));
    }
    let jm = jp.dagger();
    let x1 = jp.add(&jm)?.scale(Complex64::new(lambda / 2.0, 0.0));
    let x2 = jp.sub(&jm)?.scale(Complex64::new(0.0, -lambda / 2.0));
    let mut x3 = LevelMatrix::zero(j);
    for (k, twice_m) in j.twice_m_values().enumerate() {
        x3.set(k, k, Complex64::new(lambda * twice_m as f64 / 2.0, 0.0));
    }
    let inv_l2 = Complex64::new(1.0 / (lambda * lambda), 0.0);
    let theta = [x1.scale(inv_l2), x2.scale(inv_l2), x3.scale(inv_l2)];
    let _ = n;
    Ok(CoordinateSet {
        j,
        lambda,
        x1,
        x2,
        x3,
        x0: lambda * j.as_f64(),
        theta,
    })
}

/// Verifies the defining relations of the level.
///
/// Returns the maximum absolute entry residual over
/// [x_a, x_b] − iλ ε_{abc} x_c for the three independent pairs, and over the
/// Casimir identity x₀² + λx₀ = Σ x_i² (whose right side must equal
/// λ²j(j+1)·1).
pub fn check_structure(coords: &CoordinateSet) -> f64 {
    let l = coords.lambda;
    let i_l = Complex64::new(0.0, l);
    let xs = [&coords.x1, &coords.x2, &coords.x3];
    let mut residual: f64 = 0.0;
    // cyclic pairs (1,2)->3, (2,3)->1, (3,1)->2
    for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let comm = xs[a].commutator(xs[b]).unwrap();
        let target = xs[c].scale(i_l);
        residual = residual.max(comm.sub(&target).unwrap().max_abs_entry());
    }
    let mut sq = LevelMatrix::zero(coords.j);
    for x in xs {
        sq = sq.add(&x.mul(x).unwrap()).unwrap();
    }
    // x₀² + λx₀ = λ²j(j+1), exactly the Casimir value
    let casimir = coords.x0 * coords.x0 + l * coords.x0;
    let target = LevelMatrix::identity(coords.j).scale(Complex64::new(casimir, 0.0));
    residual.max(sq.sub(&target).unwrap().max_abs_entry())
}

/// The weighted trace of R³_λ restricted to one level: 8πλ³(2j+1)·tr_j(ab).
pub fn ncg_trace(a: &LevelMatrix, b: &LevelMatrix, lambda: f64) -> Result<Complex64> {
    if a.j() != b.j() {
        return Err(Error::LevelMismatch {
            expected: a.j().twice(),
            got: b.j().twice(),
        });
    }
    let weight = 8.0 * std::f64::consts::PI * lambda.powi(3) * a.dim() as f64;
    Ok(a.mul(b)?.trace() * weight)
}

/// Partial sum Σ_{j=0,1/2,…,J} 8πλ³(2j+1)² of the per-level volume weights.
///
/// The sum grows cubically in J, mimicking the volume of a ball of radius
/// ~λ·2J; only the growth rate is meaningful, no equality is asserted.
pub fn volume_partial_sum(j_max: HalfInt, lambda: f64) -> f64 {
    let w = 8.0 * std::f64::consts::PI * lambda.powi(3);
    (0..=j_max.twice())
        .map(|tj| {
            let d = (tj + 1) as f64;
            w * d * d
        })
        .sum()
}

/// The inner derivation D_α(a) = i(θ_α a − a θ_α), α ∈ {1,2,3}.
///
/// These close on [D_α, D_β] = −(1/λ) ε_{αβγ} D_γ and annihilate the
/// identity; each D_α is a derivation of the matrix product.
pub fn derivation(alpha: usize, a: &LevelMatrix, coords: &CoordinateSet) -> Result<LevelMatrix> {
    assert!((1..=3).contains(&alpha), "alpha must be 1, 2 or 3");
    let theta = &coords.theta[alpha - 1];
    if a.j() != theta.j() {
        return Err(Error::LevelMismatch {
            expected: theta.j().twice(),
            got: a.j().twice(),
        });
    }
    Ok(theta.commutator(a)?.scale(Complex64::new(0.0, 1.0)))
}

/// Curvature of a covariant coordinate triple:
/// F_{μν} = [𝒜_μ, 𝒜_ν] + (1/λ) ε_{μνγ} 𝒜_γ, returned as (F₁₂, F₂₃, F₃₁).
///
/// Inputs must be anti-hermitian (𝒜† = −𝒜) to 1e-12 on the max entry; the
/// gauge-invariant connection 𝒜 = iθ is flat.
pub fn curvature(a: &[LevelMatrix; 3], lambda: f64) -> Result<[LevelMatrix; 3]> {
    for m in a {
        let residual = m.anti_hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(Error::HermiticityViolation {
                kind: "anti-hermitian",
                residual,
                tol: HERMITICITY_TOL,
            });
        }
    }
    let inv_l = Complex64::new(1.0 / lambda, 0.0);
    let f = |p: usize, q: usize, r: usize| -> Result<LevelMatrix> {
        a[p].commutator(&a[q])?.add(&a[r].scale(inv_l))
    };
    Ok([f(0, 1, 2)?, f(1, 2, 0)?, f(2, 0, 1)?])
}
