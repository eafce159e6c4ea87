//! Dense non-Hermitian eigendecomposition with biorthogonal left vectors.
//!
//! The complex Schur form A = Q T Qᴴ is computed with nalgebra; right
//! eigenvectors of the triangular factor come from back-substitution and
//! left eigenvectors are the rows of the inverse right-vector matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition number of the right-vector matrix above which a matrix is
/// treated as numerically defective.
pub const MAX_CONDITION: f64 = 1e8;

/// Eigenvalues closer than this (same units as the matrix) count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Full eigensystem of a square complex matrix.
#[derive(Debug, Clone)]
pub struct EigenModes {
    /// Eigenvalues in the order of the columns of `right`.
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns, unit 2-norm, largest component real positive.
    pub right: DMatrix<Complex64>,
    /// Left eigenvectors as rows; `left * right = I`.
    pub left: DMatrix<Complex64>,
    /// 2-norm condition number of `right`.
    pub condition: f64,
    /// Smallest pairwise eigenvalue distance.
    pub min_separation: f64,
}

impl EigenModes {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when two eigenvalues coincide within [`DEGENERACY_TOL`].
    pub fn is_degenerate(&self) -> bool {
        self.min_separation < DEGENERACY_TOL
    }

    /// Modes whose imaginary part reaches `cutoff` in magnitude.
    pub fn oscillatory(&self, cutoff: f64) -> Vec<bool> {
        self.values.iter().map(|v| v.im.abs() >= cutoff).collect()
    }

    /// Spectral projector |r_l⟩⟨l_l| of mode `l`.
    pub fn projector(&self, l: usize) -> DMatrix<Complex64> {
        self.right.column(l) * self.left.row(l)
    }

    /// Σ_l f(υ_l) |r_l⟩⟨l_l|.
    pub fn function<F: Fn(Complex64) -> Complex64>(&self, f: F) -> DMatrix<Complex64> {
        let n = self.len();
        let mut scaled = self.right.clone();
        for l in 0..n {
            let s = f(self.values[l]);
            for i in 0..n {
                scaled[(i, l)] *= s;
            }
        }
        scaled * &self.left
    }

    /// Σ_l υ_l |r_l⟩⟨l_l|, which must reproduce the input matrix.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        self.function(|v| v)
    }

    /// Mode indices sorted by ascending |Im υ|, ties broken by Re υ.
    pub fn rank_by_frequency(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            let (x, y) = (self.values[a], self.values[b]);
            x.im.abs().total_cmp(&y.im.abs()).then(y.re.total_cmp(&x.re))
        });
        idx
    }
}

/// Rotates `v` so its largest-magnitude component is real positive and
/// scales it to unit 2-norm.
pub fn normalize_phase(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let mut k = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[k].norm() * (1.0 + 1e-12) {
            k = i;
        }
    }
    let phase = v[k].conj() / v[k].norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

/// Eigendecomposition of a square complex matrix.
///
/// Fails when the eigenvector matrix has condition number above
/// [`MAX_CONDITION`] (near-defective input).
pub fn eigendecompose(a: &DMatrix<Complex64>) -> Result<EigenModes> {
    let modes = eigendecompose_unchecked(a)?;
    if !(modes.condition <= MAX_CONDITION) {
        return Err(Error::Numerical(format!(
            "eigenvector matrix is ill-conditioned (cond = {:.3e}); matrix is close to defective",
            modes.condition
        )));
    }
    Ok(modes)
}

/// Eigendecomposition without the conditioning check.
pub fn eigendecompose_unchecked(a: &DMatrix<Complex64>) -> Result<EigenModes> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Numerical("eigendecomposition needs a square matrix".into()));
    }
    if n == 0 {
        return Ok(EigenModes {
            values: vec![],
            right: DMatrix::zeros(0, 0),
            left: DMatrix::zeros(0, 0),
            condition: 1.0,
            min_separation: f64::INFINITY,
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("matrix contains non-finite entries".into()));
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let tiny = scale * 1e-14;
    let mut vt = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lam = values[k];
        vt[(k, k)] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for i in j + 1..=k {
                s += t[(j, i)] * vt[(i, k)];
            }
            let mut d = t[(j, j)] - lam;
            if s.norm() <= tiny {
                vt[(j, k)] = Complex64::new(0.0, 0.0);
                continue;
            }
            if d.norm() < tiny {
                d = Complex64::new(tiny, 0.0);
            }
            vt[(j, k)] = -s / d;
        }
    }
    let mut right = q * vt;
    for k in 0..n {
        let mut col: Vec<Complex64> = right.column(k).iter().copied().collect();
        normalize_phase(&mut col);
        for (i, z) in col.into_iter().enumerate() {
            right[(i, k)] = z;
        }
    }
    let svd = right.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let left = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("eigenvector matrix is singular".into()))?;
    let mut min_separation = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_separation = min_separation.min((values[i] - values[j]).norm());
        }
    }
    Ok(EigenModes { values, right, left, condition, min_separation })
}
