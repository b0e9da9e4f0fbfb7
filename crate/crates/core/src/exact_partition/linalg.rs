//! Log-domain determinant factorizations, generic over the working scalar
//! so the same elimination code runs in double and in double-double.
//!
//! Two factorizations are provided:
//! - diagonally pivoted Cholesky for the symmetric positive definite
//!   f-matrix (after symmetric equilibration to unit diagonal), which is
//!   the default path for distinct spectra;
//! - LU with full pivoting as the general/fallback path (mixed left/right
//!   spectra, confluent derivative matrices, or a Cholesky breakdown).
//!
//! Both report ln|det| plus sign and support column solves, from which an
//! exact 1-norm condition number of the (equilibrated) matrix is computed;
//! the dimensions here are tiny, so the explicit n solves are cheaper than
//! any estimator is to maintain.

use super::dd::Dd;

/// Minimal scalar interface needed by the eliminations.
pub trait Scalar: Copy {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn sqrt(self) -> Self;
    fn abs_f64(self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn div(self, o: Self) -> Self {
        self / o
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs_f64(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Dd {
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    fn add(self, o: Self) -> Self {
        Dd::add(self, o)
    }
    fn sub(self, o: Self) -> Self {
        Dd::sub(self, o)
    }
    fn mul(self, o: Self) -> Self {
        Dd::mul(self, o)
    }
    fn div(self, o: Self) -> Self {
        Dd::div(self, o)
    }
    fn sqrt(self) -> Self {
        Dd::sqrt(self)
    }
    fn abs_f64(self) -> f64 {
        self.abs().to_f64()
    }
}

/// Signed log-determinant of a factorization.
#[derive(Debug, Clone, Copy)]
pub struct LogDet {
    pub sign: i8,
    pub ln_abs: f64,
}

/// Pivoted Cholesky factor P A Pᵀ = L Lᵀ of a symmetric positive definite
/// matrix. The symmetric permutation leaves the determinant unchanged.
pub struct CholeskyFactor<S: Scalar> {
    n: usize,
    l: Vec<S>,
    perm: Vec<usize>,
}

/// Attempts the pivoted Cholesky factorization; `None` on a non-positive
/// or non-finite pivot (the caller then falls back to LU).
pub fn cholesky<S: Scalar>(a: &[S], n: usize) -> Option<CholeskyFactor<S>> {
    assert_eq!(a.len(), n * n);
    let mut m: Vec<S> = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let swap = |m: &mut Vec<S>, i: usize, j: usize| {
        if i == j {
            return;
        }
        for c in 0..n {
            m.swap(i * n + c, j * n + c);
        }
        for r in 0..n {
            m.swap(r * n + i, r * n + j);
        }
    };
    for k in 0..n {
        // diagonal pivoting: bring the largest remaining diagonal entry up
        let mut p = k;
        let mut best = m[k * n + k].to_f64();
        for i in k + 1..n {
            let d = m[i * n + i].to_f64();
            if d > best {
                best = d;
                p = i;
            }
        }
        swap(&mut m, k, p);
        perm.swap(k, p);

        let d = m[k * n + k];
        let df = d.to_f64();
        if !(df > 0.0) || !df.is_finite() {
            return None;
        }
        let root = d.sqrt();
        m[k * n + k] = root;
        for i in k + 1..n {
            m[i * n + k] = m[i * n + k].div(root);
        }
        for i in k + 1..n {
            let lik = m[i * n + k];
            for c in k + 1..=i {
                let v = m[i * n + c].sub(lik.mul(m[c * n + k]));
                m[i * n + c] = v;
            }
        }
        // keep the strictly upper triangle mirrored for the diagonal search
        for i in k + 1..n {
            for c in i + 1..n {
                m[i * n + c] = m[c * n + i];
            }
        }
    }
    Some(CholeskyFactor { n, l: m, perm })
}

impl<S: Scalar> CholeskyFactor<S> {
    /// ln det A = 2 Σ ln L_kk (always positive for a completed factor).
    pub fn logdet(&self) -> LogDet {
        let ln_abs = (0..self.n)
            .map(|k| self.l[k * self.n + k].to_f64().ln())
            .sum::<f64>()
            * 2.0;
        LogDet { sign: 1, ln_abs }
    }

    /// Solves A x = b through the permuted factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<S> = (0..n).map(|i| S::from_f64(b[self.perm[i]])).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i].sub(self.l[i * n + k].mul(y[k]));
            }
            y[i] = y[i].div(self.l[i * n + i]);
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] = y[i].sub(self.l[k * n + i].mul(y[k]));
            }
            y[i] = y[i].div(self.l[i * n + i]);
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = y[i].to_f64();
        }
        x
    }
}

/// LU factorization with full pivoting: P A Q = L U.
pub struct LuFactor<S: Scalar> {
    n: usize,
    lu: Vec<S>,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    perm_sign: i8,
}

pub fn lu_full_pivot<S: Scalar>(a: &[S], n: usize) -> LuFactor<S> {
    assert_eq!(a.len(), n * n);
    let mut m: Vec<S> = a.to_vec();
    let mut row_perm: Vec<usize> = (0..n).collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut perm_sign = 1i8;
    for k in 0..n {
        let mut best = -1.0;
        let (mut pr, mut pc) = (k, k);
        for r in k..n {
            for c in k..n {
                let v = m[r * n + c].abs_f64();
                if v > best {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if pr != k {
            for c in 0..n {
                m.swap(k * n + c, pr * n + c);
            }
            row_perm.swap(k, pr);
            perm_sign = -perm_sign;
        }
        if pc != k {
            for r in 0..n {
                m.swap(r * n + k, r * n + pc);
            }
            col_perm.swap(k, pc);
            perm_sign = -perm_sign;
        }
        let piv = m[k * n + k];
        if piv.to_f64() == 0.0 {
            break; // singular: remaining pivots stay zero
        }
        for r in k + 1..n {
            let f = m[r * n + k].div(piv);
            m[r * n + k] = f;
            for c in k + 1..n {
                let v = m[r * n + c].sub(f.mul(m[k * n + c]));
                m[r * n + c] = v;
            }
        }
    }
    LuFactor {
        n,
        lu: m,
        row_perm,
        col_perm,
        perm_sign,
    }
}

impl<S: Scalar> LuFactor<S> {
    pub fn logdet(&self) -> LogDet {
        let mut sign = self.perm_sign;
        let mut ln_abs = 0.0;
        for k in 0..self.n {
            let u = self.lu[k * self.n + k].to_f64();
            if u == 0.0 {
                return LogDet {
                    sign: 0,
                    ln_abs: f64::NEG_INFINITY,
                };
            }
            if u < 0.0 {
                sign = -sign;
            }
            ln_abs += u.abs().ln();
        }
        LogDet { sign, ln_abs }
    }

    /// Solves A x = b (returns None when a pivot is exactly zero).
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let mut y: Vec<S> = (0..n).map(|i| S::from_f64(b[self.row_perm[i]])).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i].sub(self.lu[i * n + k].mul(y[k]));
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] = y[i].sub(self.lu[i * n + k].mul(y[k]));
            }
            let u = self.lu[i * n + i];
            if u.to_f64() == 0.0 {
                return None;
            }
            y[i] = y[i].div(u);
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.col_perm[i]] = y[i].to_f64();
        }
        Some(x)
    }
}

/// 1-norm of a row-major matrix (max absolute column sum).
pub fn norm_1(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|c| (0..n).map(|r| a[r * n + c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Exact 1-norm condition number κ₁ = ‖A‖₁‖A⁻¹‖₁ computed by n column
/// solves against the supplied solver. Returns +inf if any solve fails or
/// produces non-finite entries.
pub fn condition_1norm(a: &[f64], n: usize, solve: impl Fn(&[f64]) -> Option<Vec<f64>>) -> f64 {
    let norm_a = norm_1(a, n);
    let mut norm_inv: f64 = 0.0;
    let mut e = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        let col = match solve(&e) {
            Some(x) => x,
            None => return f64::INFINITY,
        };
        e[c] = 0.0;
        let s: f64 = col.iter().map(|v| v.abs()).sum();
        if !s.is_finite() {
            return f64::INFINITY;
        }
        norm_inv = norm_inv.max(s);
    }
    norm_a * norm_inv
}

/// Symmetric equilibration G → D G D with D = diag(1/√G_kk). Returns the
/// unit-diagonal matrix and Σ ln G_kk (so ln det G = ln det(DGD) + Σ ln G_kk).
pub fn sym_equilibrate(g: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut d = vec![0.0; n];
    let mut ln_scale = 0.0;
    for k in 0..n {
        let gkk = g[k * n + k];
        debug_assert!(gkk > 0.0);
        d[k] = 1.0 / gkk.sqrt();
        ln_scale += gkk.ln();
    }
    let mut s = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            s[r * n + c] = g[r * n + c] * d[r] * d[c];
        }
    }
    (s, ln_scale)
}

/// Row/column max-magnitude equilibration for general matrices. Returns the
/// scaled matrix and Σ ln(scales) to add back to its log-determinant.
pub fn rowcol_equilibrate(a: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut m = a.to_vec();
    let mut ln_scale = 0.0;
    for r in 0..n {
        let mx = (0..n).map(|c| m[r * n + c].abs()).fold(0.0, f64::max);
        if mx > 0.0 && mx.is_finite() {
            for c in 0..n {
                m[r * n + c] /= mx;
            }
            ln_scale += mx.ln();
        }
    }
    for c in 0..n {
        let mx = (0..n).map(|r| m[r * n + c].abs()).fold(0.0, f64::max);
        if mx > 0.0 && mx.is_finite() {
            for r in 0..n {
                m[r * n + c] /= mx;
            }
            ln_scale += mx.ln();
        }
    }
    (m, ln_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn cholesky_logdet_on_a_known_spd_matrix() {
        // A = [[4,2],[2,3]], det = 8
        let a = [4.0, 2.0, 2.0, 3.0];
        let f = cholesky(&a, 2).unwrap();
        let ld = f.logdet();
        assert_eq!(ld.sign, 1);
        assert_relative_eq!(ld.ln_abs, 8.0f64.ln(), max_relative = 1e-14);
        let x = f.solve(&[1.0, 0.0]);
        // A⁻¹ = [[3,−2],[−2,4]]/8
        assert_abs_diff_eq!(x[0], 3.0 / 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], -2.0 / 8.0, epsilon = 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite_input() {
        let a = [1.0, 2.0, 2.0, 1.0]; // eigenvalues 3, −1
        assert!(cholesky(&a, 2).is_none());
    }

    #[test]
    fn lu_signed_logdet_and_solve() {
        // det = −2 for [[0,1],[2,3]]
        let a = [0.0, 1.0, 2.0, 3.0];
        let f = lu_full_pivot(&a, 2);
        let ld = f.logdet();
        assert_eq!(ld.sign, -1);
        assert_relative_eq!(ld.ln_abs, 2.0f64.ln(), max_relative = 1e-14);
        let x = f.solve(&[1.0, 1.0]).unwrap();
        // solution of [[0,1],[2,3]] x = (1,1): x = (−1, 1)
        assert_abs_diff_eq!(x[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn lu_detects_singularity() {
        let a = [1.0, 2.0, 2.0, 4.0];
        let f = lu_full_pivot(&a, 2);
        assert_eq!(f.logdet().sign, 0);
    }

    #[test]
    fn condition_of_identity_is_one() {
        let a = [1.0, 0.0, 0.0, 1.0];
        let f = lu_full_pivot(&a, 2);
        let c = condition_1norm(&a, 2, |b| f.solve(b));
        assert_relative_eq!(c, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn double_double_cholesky_beats_f64_on_an_ill_conditioned_matrix() {
        // Gram matrix of nearly parallel vectors, G = [[1, off],[off, 1]]
        // with off = 1 − ε²/2 as stored in f64. The determinant of the
        // stored matrix is (1 − off)(1 + off); 1 − off is exact (Sterbenz),
        // so this reference is good to ~1e-16 while plain f64 elimination
        // loses ~κ·u ≈ 1e-6 of it
        let eps = 1e-5_f64;
        let off = 1.0 - eps * eps / 2.0;
        let exact = ((1.0 - off) * (1.0 + off)).ln();
        let a64 = [1.0, off, off, 1.0];
        let f64_ln = cholesky(&a64, 2).unwrap().logdet().ln_abs;
        let ldd: Vec<Dd> = a64.iter().map(|&v| Dd::from_f64(v)).collect();
        let dd_ln = cholesky(&ldd, 2).unwrap().logdet().ln_abs;
        assert_relative_eq!(dd_ln, exact, max_relative = 1e-13);
        assert!(
            (f64_ln - exact).abs() > 100.0 * (dd_ln - exact).abs(),
            "double-double gained nothing: f64 err {:e}, dd err {:e}",
            (f64_ln - exact).abs(),
            (dd_ln - exact).abs()
        );
    }
}
