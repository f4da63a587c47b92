//! Shared numerical kernels.
//!
//! Everything in this module is deliberately dumb and deterministic:
//! central differences with one Richardson extrapolation level, SVD-based
//! rank and kernel extraction with an explicit ambiguity band, and spectral
//! distances between subspaces.  Higher layers own all tolerance *policy*;
//! this module only reports what it measured.

use nalgebra::{DMatrix, DVector};

/// Default finite-difference step used across the crate.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Relative disagreement between the two central-difference estimates that
/// enter the Richardson extrapolation above which a derivative is rejected.
pub const FD_DISAGREEMENT: f64 = 1e-4;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-8;

/// Width (in decades, on each side) of the guard band around the rank
/// cutoff.  A singular value inside the band makes the rank ambiguous.
const RANK_BAND: f64 = 10.0;

/// A directional derivative estimate together with its internal
/// consistency measure.
#[derive(Debug, Clone)]
pub struct DerivativeEstimate {
    /// Richardson-extrapolated central difference.
    pub value: DVector<f64>,
    /// Relative disagreement between the step-`h` and step-`h/2` estimates.
    pub disagreement: f64,
}

/// Central difference at steps `h` and `h/2`, combined by one Richardson
/// extrapolation level.  `f` is the restriction of the map to the line
/// being differentiated, with `f(0.0)` the base point.
pub fn richardson_derivative<F>(f: F, h: f64) -> DerivativeEstimate
where
    F: Fn(f64) -> DVector<f64>,
{
    let coarse = (f(h) - f(-h)) / (2.0 * h);
    let half = h / 2.0;
    let fine = (f(half) - f(-half)) / (2.0 * half);
    let value = (&fine * 4.0 - &coarse) / 3.0;
    let scale = value.norm().max(1.0);
    let disagreement = (&fine - &coarse).norm() / scale;
    DerivativeEstimate { value, disagreement }
}

/// Plain central-difference Jacobian of `f` at `x`.  Used for constraint
/// and moment Jacobians, where one `O(h^2)` sweep is accurate enough and
/// the extrapolated variant would double the evaluation count.
pub fn jacobian<F>(f: F, x: &DVector<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let column = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(j, &column);
    }
    jac
}

/// Rank decision that refused to commit: some singular value sits inside
/// the guard band around the cutoff, so "numerically zero" and
/// "numerically nonzero" cannot be told apart.
#[derive(Debug, Clone)]
pub struct RankAmbiguity {
    pub singular_values: Vec<f64>,
    pub cutoff: f64,
}

impl std::fmt::Display for RankAmbiguity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "singular values {:?} straddle the rank cutoff {:.3e}",
            self.singular_values, self.cutoff
        )
    }
}

/// Rank, kernel, and spectrum of a matrix, as decided by [`ranked`].
#[derive(Debug, Clone)]
pub struct RankInfo {
    pub rank: usize,
    /// Orthonormal basis of the (right) kernel, one column per dimension.
    pub kernel: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

/// Singular-value rank of `mat` with relative cutoff `cutoff_rel`.
///
/// Errors with [`RankAmbiguity`] whenever a singular value falls within a
/// factor of ten of the cutoff, instead of silently rounding it either way.
pub fn ranked(mat: &DMatrix<f64>, cutoff_rel: f64) -> Result<RankInfo, RankAmbiguity> {
    let n = mat.ncols();
    if mat.nrows() == 0 || n == 0 {
        // A map with no rows (or no columns) has rank zero and full kernel.
        return Ok(RankInfo {
            rank: 0,
            kernel: DMatrix::identity(n, n),
            singular_values: Vec::new(),
        });
    }
    // nalgebra computes the thin SVD, which lacks the kernel directions of
    // a wide matrix; padding with zero rows restores them without touching
    // the spectrum.
    let work = if mat.nrows() < n {
        let mut padded = DMatrix::zeros(n, n);
        padded.view_mut((0, 0), (mat.nrows(), n)).copy_from(mat);
        padded
    } else {
        mat.clone()
    };
    let mut svd = work.svd(true, true);
    svd.sort_by_singular_values();
    let spectrum_len = mat.nrows().min(n);
    let singular_values: Vec<f64> = svd
        .singular_values
        .iter()
        .copied()
        .take(spectrum_len)
        .collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Ok(RankInfo {
            rank: 0,
            kernel: DMatrix::identity(n, n),
            singular_values,
        });
    }
    let cutoff = cutoff_rel * sigma_max;
    if singular_values
        .iter()
        .any(|&s| s > cutoff / RANK_BAND && s < cutoff * RANK_BAND)
    {
        return Err(RankAmbiguity {
            singular_values,
            cutoff,
        });
    }
    let rank = singular_values.iter().filter(|&&s| s >= cutoff).count();
    let v_t = svd.v_t.expect("SVD was requested with singular vectors");
    let mut kernel = DMatrix::zeros(n, n - rank);
    for (out, row) in (rank..n).enumerate() {
        kernel.set_column(out, &v_t.row(row).transpose());
    }
    Ok(RankInfo {
        rank,
        kernel,
        singular_values,
    })
}

/// Orthonormal basis of the column space of `mat` (left singular vectors
/// above the relative cutoff).
pub fn orthonormal_columns(mat: &DMatrix<f64>, cutoff_rel: f64) -> DMatrix<f64> {
    let mut svd = mat.clone().svd(true, true);
    svd.sort_by_singular_values();
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s >= cutoff_rel * sigma_max && sigma_max > 0.0)
        .count();
    let u = svd.u.expect("SVD was requested with singular vectors");
    u.columns(0, rank).into_owned()
}

/// Spectral-norm distance between the orthogonal projectors onto the
/// column spaces of `a` and `b`.  Equal-dimensional subspaces coincide
/// exactly when this is zero; transverse ones give 1.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows(), "subspaces live in different ambients");
    let qa = orthonormal_columns(a, RANK_CUTOFF);
    let qb = orthonormal_columns(b, RANK_CUTOFF);
    let pa = &qa * qa.transpose();
    let pb = &qb * qb.transpose();
    spectral_norm(&(pa - pb))
}

/// Largest singular value.
pub fn spectral_norm(mat: &DMatrix<f64>) -> f64 {
    mat.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Largest absolute entry of a vector (0 for the empty vector).
pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
