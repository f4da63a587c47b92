//! Weight multiplicities for the rotation group, computed from matrices.
//!
//! The degree-`ℓ` harmonic polynomials on `R³` form the `(2ℓ+1)`-dimensional
//! irreducible representation `V_ℓ` of `SO(3)`.  Restricted to the subgroup
//! `H = SO(2)` of rotations about the third axis, `V_ℓ` splits into weight
//! lines — one for each integer `m` with `|m| ≤ ℓ`.  The dimension
//! `dim Hom_H(V_ℓ, χ_m)` of intertwiners onto the character `χ_m` is
//! therefore `1` when `|m| ≤ ℓ` and `0` otherwise; the invariant count
//! `m = 0` is what the geometric side of the reciprocity suite (one reduced
//! point per level) must reproduce.
//!
//! Nothing here is read off a formula.  The carrier is the harmonic part of
//! the symmetric power [`crate::constructions::SymPower`] — the kernel of
//! the Laplacian coefficient matrix, extracted numerically — and the weights
//! come from diagonalizing the restricted rotation generator:
//!
//! * `A = dρ(e₃-spin)` is real and skew on the weighted monomial basis;
//! * restricted to the harmonic kernel `K`, the symmetric matrix
//!   `(KᵀAK)ᵀ(KᵀAK)` has eigenvalues `m²`;
//! * eigenvalues of a real matrix come in conjugate pairs, so each `m² > 0`
//!   eigenspace splits evenly between the signed weights `±m`.
//!
//! Eigenvalues are snapped to integers with tolerance [`WEIGHT_ROUNDING`];
//! anything further away panics rather than guessing, since a misidentified
//! weight would silently corrupt every count downstream.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::constructions::SymPower;
use crate::lie::hat3;
use crate::numeric;

/// Largest polynomial degree the weighted-monomial carrier supports without
/// overflowing the factorial weights.
pub const MAX_DEGREE: usize = 20;

/// Tolerance for snapping squared-generator eigenvalues to integers.
pub const WEIGHT_ROUNDING: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Weight profiles
// ---------------------------------------------------------------------------

/// Multiplicities of the `SO(2)` weights in the degree-`ℓ` harmonic
/// representation, indexed by `m ∈ {−ℓ, …, ℓ}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightProfile {
    ell: usize,
    /// `multiplicities[i]` is the count for weight `m = i − ℓ`.
    multiplicities: Vec<usize>,
}

impl WeightProfile {
    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Multiplicity of the weight `m`; zero outside `|m| ≤ ℓ`.
    pub fn multiplicity(&self, m: i64) -> usize {
        let ell = self.ell as i64;
        if m.abs() > ell {
            return 0;
        }
        self.multiplicities[(m + ell) as usize]
    }

    /// Total dimension carried by the profile.
    pub fn total(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// `(weight, count)` pairs in increasing weight order.
    pub fn pairs(&self) -> Vec<(i64, usize)> {
        let ell = self.ell as i64;
        self.multiplicities
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as i64 - ell, c))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Computation
// ---------------------------------------------------------------------------

/// Orthonormal basis of the harmonic subspace: the numerical kernel of the
/// Laplacian coefficient matrix (the whole space for `ℓ < 2`).
fn harmonic_basis(sym: &SymPower) -> DMatrix<f64> {
    let d = sym.dim();
    if sym.ell() < 2 {
        return DMatrix::identity(d, d);
    }
    let lap = sym.laplacian(&SymPower::new(sym.ell() - 2));
    let info = numeric::ranked(&lap, numeric::RANK_CUTOFF)
        .expect("the Laplacian spectrum has a clean gap at zero");
    info.kernel
}

/// Compute the weight profile of the degree-`ell` harmonic representation
/// by restricting the rotation generator to the harmonic kernel and
/// diagonalizing its square.
///
/// Panics if `ell` exceeds [`MAX_DEGREE`] or if an eigenvalue refuses to
/// snap to an integer square within [`WEIGHT_ROUNDING`].
pub fn weight_profile(ell: usize) -> WeightProfile {
    assert!(
        ell <= MAX_DEGREE,
        "degree {ell} exceeds the supported maximum {MAX_DEGREE}"
    );
    let sym = SymPower::new(ell);
    let kernel = harmonic_basis(&sym);
    let expected = 2 * ell + 1;
    assert_eq!(
        kernel.ncols(),
        expected,
        "harmonic kernel of degree {ell} should have dimension {expected}"
    );

    let generator = sym.algebra_action(&hat3(&Vector3::new(0.0, 0.0, 1.0)));
    let restricted = kernel.transpose() * &generator * &kernel;
    let skew_defect = numeric::spectral_norm(&(&restricted + restricted.transpose()));
    assert!(
        skew_defect < 1e-10,
        "restricted generator should stay skew, defect {skew_defect:.3e}"
    );

    let squared = restricted.transpose() * &restricted;
    let eigen = squared.symmetric_eigen();

    let mut absolute = vec![0usize; ell + 1];
    for &lambda in eigen.eigenvalues.iter() {
        let snapped = lambda.round();
        assert!(
            (lambda - snapped).abs() <= WEIGHT_ROUNDING * snapped.abs().max(1.0),
            "eigenvalue {lambda} does not snap to an integer"
        );
        let m = snapped.max(0.0).sqrt().round();
        assert!(
            (m * m - snapped).abs() < 0.5,
            "eigenvalue {snapped} is not a perfect square"
        );
        absolute[m as usize] += 1;
    }

    let mut multiplicities = vec![0usize; expected];
    multiplicities[ell] = absolute[0];
    for m in 1..=ell {
        let count = absolute[m];
        assert!(
            count.is_multiple_of(2),
            "conjugate pairing forces an even count at |m| = {m}, got {count}"
        );
        multiplicities[ell + m] = count / 2;
        multiplicities[ell - m] = count / 2;
    }
    WeightProfile {
        ell,
        multiplicities,
    }
}

/// Multiplicity of the `SO(2)` weight `m` in the degree-`ell` harmonic
/// representation — equivalently `dim Hom_H(V_ℓ, χ_m)`.
pub fn weight_multiplicity(ell: usize, m: i64) -> usize {
    weight_profile(ell).multiplicity(m)
}

/// Dimension of the `H`-invariants `Hom_H(V_ℓ, C)` — the representation-
/// theoretic count that the geometric suite matches against its single
/// reduced point.
pub fn frobenius_dimension(ell: usize) -> usize {
    weight_multiplicity(ell, 0)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
