//! Matrix realization of the group catalog.
//!
//! Every group this crate knows is a block-diagonal family of real special
//! orthogonal matrices:
//!
//! * `U1`, `SO2` — one 2×2 rotation block (the real picture of a phase);
//! * `SO3` — one 3×3 rotation block;
//! * `Torus2` — two independent 2×2 rotation blocks;
//! * `Product(a, b)` — the concatenated blocks of the factors (nesting is
//!   capped at two levels, which is all the constructions need).
//!
//! Algebra elements are coordinate vectors in a *fixed* basis: the hat-map
//! generators for a 3×3 block and the single spin generator
//! `J = [[0,-1],[1,0]]` for each 2×2 block.  Coalgebra vectors pair with
//! algebra vectors by the plain coordinate dot product, so the adjoint and
//! coadjoint actions are honest matrix transposes of one another.
//!
//! All blocks are orthogonal, hence inversion is blockwise transposition,
//! and a single Frobenius projection recovers algebra coordinates from any
//! block matrix (the fixed bases are Frobenius-orthogonal).

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rng;

/// Errors for group-level operations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum LieError {
    #[error("group mismatch: {left} vs {right}")]
    GroupMismatch { left: String, right: String },
    #[error("coordinate length {got} does not match dimension {want} of {group}")]
    DimensionMismatch {
        group: String,
        want: usize,
        got: usize,
    },
    #[error("matrix violates the group relations: residual {residual:.3e} exceeds {tol:.1e}")]
    InvalidElement { residual: f64, tol: f64 },
    #[error("direct products may only be nested two levels deep")]
    NestingTooDeep,
}

/// Tolerance to which group relations (orthogonality, unit determinant)
/// must hold for an element to be accepted.
pub const RELATION_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Catalog identifiers and block layout
// ---------------------------------------------------------------------------

/// Shape of one diagonal block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Rot2,
    Rot3,
}

impl BlockKind {
    pub fn size(self) -> usize {
        match self {
            BlockKind::Rot2 => 2,
            BlockKind::Rot3 => 3,
        }
    }

    pub fn algebra_dim(self) -> usize {
        match self {
            BlockKind::Rot2 => 1,
            BlockKind::Rot3 => 3,
        }
    }

    /// Fixed algebra basis for this block, as matrices.
    pub fn basis(self) -> Vec<DMatrix<f64>> {
        match self {
            BlockKind::Rot2 => vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])],
            BlockKind::Rot3 => vec![
                DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]),
                DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]),
                DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            ],
        }
    }
}

/// Identifier of a catalog group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupId {
    U1,
    SO2,
    SO3,
    Torus2,
    Product(Box<GroupId>, Box<GroupId>),
}

impl GroupId {
    /// Direct product with the nesting-depth guard.
    pub fn product(a: GroupId, b: GroupId) -> Result<GroupId, LieError> {
        let depth = 1 + a.depth().max(b.depth());
        if depth > 2 {
            return Err(LieError::NestingTooDeep);
        }
        Ok(GroupId::Product(Box::new(a), Box::new(b)))
    }

    fn depth(&self) -> usize {
        match self {
            GroupId::Product(a, b) => 1 + a.depth().max(b.depth()),
            _ => 0,
        }
    }

    /// Diagonal blocks, in order.
    pub fn blocks(&self) -> Vec<BlockKind> {
        match self {
            GroupId::U1 | GroupId::SO2 => vec![BlockKind::Rot2],
            GroupId::SO3 => vec![BlockKind::Rot3],
            GroupId::Torus2 => vec![BlockKind::Rot2, BlockKind::Rot2],
            GroupId::Product(a, b) => {
                let mut blocks = a.blocks();
                blocks.extend(b.blocks());
                blocks
            }
        }
    }

    /// Dimension of the Lie algebra.
    pub fn dim(&self) -> usize {
        self.blocks().iter().map(|b| b.algebra_dim()).sum()
    }

    /// Length of the flattened matrix representation.
    pub fn ambient_dim(&self) -> usize {
        self.blocks().iter().map(|b| b.size() * b.size()).sum()
    }

    pub fn is_product(&self) -> bool {
        matches!(self, GroupId::Product(_, _))
    }

    /// Algebra dimensions of the two product factors.
    pub fn factor_dims(&self) -> Option<(usize, usize)> {
        match self {
            GroupId::Product(a, b) => Some((a.dim(), b.dim())),
            _ => None,
        }
    }
}

impl std::fmt::Display for GroupId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupId::U1 => write!(f, "U1"),
            GroupId::SO2 => write!(f, "SO2"),
            GroupId::SO3 => write!(f, "SO3"),
            GroupId::Torus2 => write!(f, "T2"),
            GroupId::Product(a, b) => write!(f, "{a}x{b}"),
        }
    }
}

fn mismatch(left: &GroupId, right: &GroupId) -> LieError {
    LieError::GroupMismatch {
        left: left.to_string(),
        right: right.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Group elements
// ---------------------------------------------------------------------------

/// An element of a catalog group, stored blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    group: GroupId,
    blocks: Vec<DMatrix<f64>>,
}

impl GroupElement {
    pub fn identity(group: &GroupId) -> Self {
        let blocks = group
            .blocks()
            .iter()
            .map(|b| DMatrix::identity(b.size(), b.size()))
            .collect();
        GroupElement {
            group: group.clone(),
            blocks,
        }
    }

    pub fn group(&self) -> &GroupId {
        &self.group
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// The single 3×3 block of an SO3 element, as a statically sized matrix.
    pub fn rotation3(&self) -> Matrix3<f64> {
        assert_eq!(self.group, GroupId::SO3, "rotation3 requires an SO3 element");
        Matrix3::from_fn(|r, c| self.blocks[0][(r, c)])
    }

    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement, LieError> {
        if self.group != other.group {
            return Err(mismatch(&self.group, &other.group));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(other.blocks.iter())
            .map(|(a, b)| a * b)
            .collect();
        Ok(GroupElement {
            group: self.group.clone(),
            blocks,
        })
    }

    /// Inverse; blockwise transpose since every block is orthogonal.
    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            group: self.group.clone(),
            blocks: self.blocks.iter().map(|b| b.transpose()).collect(),
        }
    }

    /// Worst violation of orthogonality and orientation over all blocks.
    pub fn relation_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            let gram = b.transpose() * b - DMatrix::identity(b.nrows(), b.ncols());
            worst = worst.max(gram.amax());
            worst = worst.max((b.determinant() - 1.0).abs());
        }
        worst
    }

    /// Accept the element only if the group relations hold to `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), LieError> {
        let residual = self.relation_residual();
        if residual > tol {
            Err(LieError::InvalidElement { residual, tol })
        } else {
            Ok(())
        }
    }

    /// Project each block back onto the group (polar decomposition).
    ///
    /// Exposed for callers that accumulate drift over long products; never
    /// applied implicitly by any operation in this crate.
    pub fn renormalized(&self) -> GroupElement {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let svd = b.clone().svd(true, true);
                let u = svd.u.expect("SVD with vectors");
                let v_t = svd.v_t.expect("SVD with vectors");
                let mut q = &u * &v_t;
                if q.determinant() < 0.0 {
                    // Flip the last column of U to restore orientation.
                    let mut u = u.clone();
                    let last = u.ncols() - 1;
                    let negated = -u.column(last);
                    u.set_column(last, &negated);
                    q = &u * &v_t;
                }
                q
            })
            .collect();
        GroupElement {
            group: self.group.clone(),
            blocks,
        }
    }

    /// Row-major concatenation of all blocks.
    pub fn flatten(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.group.ambient_dim());
        for b in &self.blocks {
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    out.push(b[(r, c)]);
                }
            }
        }
        DVector::from_vec(out)
    }

    /// Rebuild an element from flattened coordinates.  No validation; call
    /// [`GroupElement::validate`] when the data is untrusted.
    pub fn from_flat(group: &GroupId, flat: &DVector<f64>) -> Self {
        assert_eq!(
            flat.len(),
            group.ambient_dim(),
            "flattened length mismatch for {group}"
        );
        let mut blocks = Vec::new();
        let mut offset = 0;
        for kind in group.blocks() {
            let n = kind.size();
            let mut m = DMatrix::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    m[(r, c)] = flat[offset + r * n + c];
                }
            }
            offset += n * n;
            blocks.push(m);
        }
        GroupElement {
            group: group.clone(),
            blocks,
        }
    }

    /// Split a product-group element into its two factors.
    pub fn split(&self) -> Option<(GroupElement, GroupElement)> {
        let GroupId::Product(a, b) = &self.group else {
            return None;
        };
        let na = a.blocks().len();
        Some((
            GroupElement {
                group: (**a).clone(),
                blocks: self.blocks[..na].to_vec(),
            },
            GroupElement {
                group: (**b).clone(),
                blocks: self.blocks[na..].to_vec(),
            },
        ))
    }

    /// Assemble a product-group element from its factors.
    pub fn pair(group: &GroupId, a: &GroupElement, b: &GroupElement) -> Result<Self, LieError> {
        let GroupId::Product(ga, gb) = group else {
            return Err(mismatch(group, a.group()));
        };
        if **ga != a.group {
            return Err(mismatch(ga, &a.group));
        }
        if **gb != b.group {
            return Err(mismatch(gb, &b.group));
        }
        let mut blocks = a.blocks.clone();
        blocks.extend(b.blocks.iter().cloned());
        Ok(GroupElement {
            group: group.clone(),
            blocks,
        })
    }
}

// ---------------------------------------------------------------------------
// Algebra and coalgebra coordinates
// ---------------------------------------------------------------------------

/// Lie-algebra element in the fixed basis of its group.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    group: GroupId,
    coords: DVector<f64>,
}

/// Dual vector; pairs with [`AlgebraElement`] by the coordinate dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalgebraElement {
    group: GroupId,
    coords: DVector<f64>,
}

macro_rules! coordinate_impls {
    ($ty:ident) => {
        impl $ty {
            pub fn zero(group: &GroupId) -> Self {
                $ty {
                    group: group.clone(),
                    coords: DVector::zeros(group.dim()),
                }
            }

            pub fn from_coords(group: &GroupId, coords: DVector<f64>) -> Result<Self, LieError> {
                if coords.len() != group.dim() {
                    return Err(LieError::DimensionMismatch {
                        group: group.to_string(),
                        want: group.dim(),
                        got: coords.len(),
                    });
                }
                Ok($ty {
                    group: group.clone(),
                    coords,
                })
            }

            pub fn group(&self) -> &GroupId {
                &self.group
            }

            pub fn coords(&self) -> &DVector<f64> {
                &self.coords
            }

            pub fn scale(&self, s: f64) -> Self {
                $ty {
                    group: self.group.clone(),
                    coords: &self.coords * s,
                }
            }

            pub fn add(&self, other: &Self) -> Result<Self, LieError> {
                if self.group != other.group {
                    return Err(mismatch(&self.group, &other.group));
                }
                Ok($ty {
                    group: self.group.clone(),
                    coords: &self.coords + &other.coords,
                })
            }
        }
    };
}

coordinate_impls!(AlgebraElement);
coordinate_impls!(CoalgebraElement);

impl AlgebraElement {
    /// Blockwise matrix form in the fixed basis.
    pub fn to_blocks(&self) -> Vec<DMatrix<f64>> {
        let mut out = Vec::new();
        let mut offset = 0;
        for kind in self.group.blocks() {
            let basis = kind.basis();
            let n = kind.size();
            let mut m = DMatrix::zeros(n, n);
            for (i, e) in basis.iter().enumerate() {
                m += e * self.coords[offset + i];
            }
            offset += basis.len();
            out.push(m);
        }
        out
    }

    /// Exponential.  Catalog groups use their closed forms (rotation
    /// matrices, Rodrigues); products fall back to a scaled-and-squared
    /// Taylor series on each block.
    pub fn exp(&self) -> GroupElement {
        let blocks = if self.group.is_product() {
            self.to_blocks().iter().map(exp_taylor).collect()
        } else {
            let mut out = Vec::new();
            let mut offset = 0;
            for kind in self.group.blocks() {
                match kind {
                    BlockKind::Rot2 => {
                        out.push(rot2(self.coords[offset]));
                        offset += 1;
                    }
                    BlockKind::Rot3 => {
                        let a = Vector3::new(
                            self.coords[offset],
                            self.coords[offset + 1],
                            self.coords[offset + 2],
                        );
                        out.push(rodrigues(&a));
                        offset += 3;
                    }
                }
            }
            out
        };
        GroupElement {
            group: self.group.clone(),
            blocks,
        }
    }

    /// Split a product-algebra element into factor coordinates.
    pub fn split(&self) -> Option<(AlgebraElement, AlgebraElement)> {
        let (da, _db) = self.group.factor_dims()?;
        let GroupId::Product(a, b) = &self.group else {
            return None;
        };
        Some((
            AlgebraElement {
                group: (**a).clone(),
                coords: self.coords.rows(0, da).into_owned(),
            },
            AlgebraElement {
                group: (**b).clone(),
                coords: self.coords.rows(da, self.coords.len() - da).into_owned(),
            },
        ))
    }
}

impl CoalgebraElement {
    /// Split a product-coalgebra element into factor coordinates.
    pub fn split(&self) -> Option<(CoalgebraElement, CoalgebraElement)> {
        let (da, _db) = self.group.factor_dims()?;
        let GroupId::Product(a, b) = &self.group else {
            return None;
        };
        Some((
            CoalgebraElement {
                group: (**a).clone(),
                coords: self.coords.rows(0, da).into_owned(),
            },
            CoalgebraElement {
                group: (**b).clone(),
                coords: self.coords.rows(da, self.coords.len() - da).into_owned(),
            },
        ))
    }
}

/// Duality pairing `⟨μ, Z⟩`.
pub fn pairing(mu: &CoalgebraElement, z: &AlgebraElement) -> Result<f64, LieError> {
    if mu.group != z.group {
        return Err(mismatch(&mu.group, &z.group));
    }
    Ok(mu.coords.dot(&z.coords))
}

// ---------------------------------------------------------------------------
// Closed-form block exponentials
// ---------------------------------------------------------------------------

fn rot2(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Hat map: `hat3(a) v = a × v`.
pub fn hat3(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

fn rodrigues(a: &Vector3<f64>) -> DMatrix<f64> {
    let theta = a.norm();
    let k = hat3(a);
    let k2 = k * k;
    let m = if theta < 1e-8 {
        // Series through second order; error O(theta^3) is below roundoff.
        Matrix3::identity() + k + k2 * 0.5
    } else {
        Matrix3::identity() + k * (theta.sin() / theta) + k2 * ((1.0 - theta.cos()) / (theta * theta))
    };
    DMatrix::from_fn(3, 3, |r, c| m[(r, c)])
}

/// Scaled-and-squared Taylor exponential for a single block.
fn exp_taylor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);
    let mut acc = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=16 {
        term = &term * &scaled / k as f64;
        acc += &term;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

// ---------------------------------------------------------------------------
// Adjoint machinery
// ---------------------------------------------------------------------------

/// Frobenius projection of blockwise matrices onto algebra coordinates.
/// Returns the coordinates together with the norm of the part of the input
/// that is *not* in the algebra (which is zero for genuine tangent data).
pub fn project_to_algebra(group: &GroupId, blocks: &[DMatrix<f64>]) -> (DVector<f64>, f64) {
    let mut coords = Vec::with_capacity(group.dim());
    let mut off_part = 0.0_f64;
    for (kind, block) in group.blocks().iter().zip(blocks.iter()) {
        let basis = kind.basis();
        let mut remainder = block.clone();
        for e in &basis {
            let c = block.dot(e) / e.dot(e);
            coords.push(c);
            remainder -= e * c;
        }
        off_part += remainder.norm_squared();
    }
    (DVector::from_vec(coords), off_part.sqrt())
}

/// Matrix of the adjoint action `Z ↦ g Z g⁻¹` in the fixed basis.
pub fn adjoint_matrix(g: &GroupElement) -> DMatrix<f64> {
    let dim = g.group.dim();
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let mut basis_coords = DVector::zeros(dim);
        basis_coords[i] = 1.0;
        let e = AlgebraElement {
            group: g.group.clone(),
            coords: basis_coords,
        };
        let conjugated: Vec<DMatrix<f64>> = e
            .to_blocks()
            .iter()
            .zip(g.blocks.iter())
            .map(|(z, q)| q * z * q.transpose())
            .collect();
        let (coords, _) = project_to_algebra(&g.group, &conjugated);
        out.set_column(i, &coords);
    }
    out
}

/// Adjoint action on algebra coordinates.
pub fn adjoint(g: &GroupElement, z: &AlgebraElement) -> Result<AlgebraElement, LieError> {
    if g.group != z.group {
        return Err(mismatch(&g.group, &z.group));
    }
    Ok(AlgebraElement {
        group: z.group.clone(),
        coords: adjoint_matrix(g) * &z.coords,
    })
}

/// Coadjoint action, defined by `⟨Ad*_g μ, Z⟩ = ⟨μ, Ad_{g⁻¹} Z⟩`.
pub fn coadjoint(g: &GroupElement, mu: &CoalgebraElement) -> Result<CoalgebraElement, LieError> {
    if g.group != mu.group {
        return Err(mismatch(&g.group, &mu.group));
    }
    let ad_inv = adjoint_matrix(&g.inverse());
    Ok(CoalgebraElement {
        group: mu.group.clone(),
        coords: ad_inv.transpose() * &mu.coords,
    })
}

/// Lie bracket via block commutators, re-expressed in the fixed basis.
pub fn bracket(z: &AlgebraElement, w: &AlgebraElement) -> Result<AlgebraElement, LieError> {
    if z.group != w.group {
        return Err(mismatch(&z.group, &w.group));
    }
    let commutators: Vec<DMatrix<f64>> = z
        .to_blocks()
        .iter()
        .zip(w.to_blocks().iter())
        .map(|(a, b)| a * b - b * a)
        .collect();
    let (coords, off) = project_to_algebra(&z.group, &commutators);
    debug_assert!(off < 1e-12, "commutator left the algebra: {off}");
    Ok(AlgebraElement {
        group: z.group.clone(),
        coords,
    })
}

/// Right logarithmic derivative `(δq) q⁻¹` from an ambient velocity.
///
/// `dq` is a tangent vector in the flattened coordinates of
/// [`GroupElement::flatten`].  Returns algebra coordinates and the norm of
/// the component of `(δq) q⁻¹` outside the algebra, which measures how far
/// `dq` is from being a genuine tangent vector at `q`.
pub fn log_derivative(q: &GroupElement, dq: &DVector<f64>) -> (AlgebraElement, f64) {
    let dq_el = GroupElement::from_flat(&q.group, dq);
    let products: Vec<DMatrix<f64>> = dq_el
        .blocks
        .iter()
        .zip(q.blocks.iter())
        .map(|(d, b)| d * b.transpose())
        .collect();
    let (coords, off) = project_to_algebra(&q.group, &products);
    (
        AlgebraElement {
            group: q.group.clone(),
            coords,
        },
        off,
    )
}

/// Left logarithmic derivative `q⁻¹ (δq)`.
pub fn left_log_derivative(q: &GroupElement, dq: &DVector<f64>) -> (AlgebraElement, f64) {
    let dq_el = GroupElement::from_flat(&q.group, dq);
    let products: Vec<DMatrix<f64>> = dq_el
        .blocks
        .iter()
        .zip(q.blocks.iter())
        .map(|(d, b)| b.transpose() * d)
        .collect();
    let (coords, off) = project_to_algebra(&q.group, &products);
    (
        AlgebraElement {
            group: q.group.clone(),
            coords,
        },
        off,
    )
}

/// Ambient velocity of the curve `t ↦ exp(tZ) q` at `t = 0`, i.e. the
/// flattening of the blockwise product `Z_mat · q`.  This is the exact
/// left-translation-invariant extension of `Z` at `q`.
pub fn algebra_velocity_at(q: &GroupElement, z: &AlgebraElement) -> Result<DVector<f64>, LieError> {
    if q.group != z.group {
        return Err(mismatch(&q.group, &z.group));
    }
    let blocks: Vec<DMatrix<f64>> = z
        .to_blocks()
        .iter()
        .zip(q.blocks.iter())
        .map(|(zb, qb)| zb * qb)
        .collect();
    Ok(GroupElement {
        group: q.group.clone(),
        blocks,
    }
    .flatten())
}

// ---------------------------------------------------------------------------
// Subgroups
// ---------------------------------------------------------------------------

/// A connected subgroup of a catalog group, described by an orthonormal
/// basis of its Lie algebra inside the ambient algebra coordinates.
///
/// This covers everything the constructions need: the full group, the
/// trivial subgroup, a circle inside SO3, an (irrational) winding line
/// inside the 2-torus, and `G × H` sitting inside `G × G`.
#[derive(Debug, Clone)]
pub struct Subgroup {
    ambient: GroupId,
    /// `ambient.dim() × dim` matrix with orthonormal columns.
    basis: DMatrix<f64>,
    label: String,
}

impl Subgroup {
    pub fn full(group: GroupId) -> Self {
        let d = group.dim();
        Subgroup {
            label: group.to_string(),
            basis: DMatrix::identity(d, d),
            ambient: group,
        }
    }

    pub fn trivial(group: GroupId) -> Self {
        let d = group.dim();
        Subgroup {
            label: format!("1<{group}"),
            basis: DMatrix::zeros(d, 0),
            ambient: group,
        }
    }

    /// Rotations about the third axis inside SO3.
    pub fn so2_in_so3() -> Self {
        Subgroup {
            ambient: GroupId::SO3,
            basis: DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]),
            label: "SO2<SO3".to_string(),
        }
    }

    /// The line of slope `alpha` inside the 2-torus.  Irrational slopes
    /// wind densely; no rationality check happens here.
    pub fn winding(alpha: f64) -> Self {
        let norm = (1.0 + alpha * alpha).sqrt();
        Subgroup {
            ambient: GroupId::Torus2,
            basis: DMatrix::from_column_slice(2, 1, &[1.0 / norm, alpha / norm]),
            label: format!("line(alpha={alpha})<T2"),
        }
    }

    /// `G × H` inside `G × G_H`, where `H` is a subgroup of `G_H`: the full
    /// first factor times the given subgroup of the second.
    pub fn pair_with_full(g: GroupId, h: &Subgroup) -> Result<Self, LieError> {
        let ambient = GroupId::product(g.clone(), h.ambient.clone())?;
        let dg = g.dim();
        let dh = h.dim();
        let mut basis = DMatrix::zeros(ambient.dim(), dg + dh);
        for i in 0..dg {
            basis[(i, i)] = 1.0;
        }
        for c in 0..dh {
            for r in 0..h.ambient.dim() {
                basis[(dg + r, dg + c)] = h.basis[(r, c)];
            }
        }
        Ok(Subgroup {
            label: format!("{g}x({})", h.label),
            ambient,
            basis,
        })
    }

    pub fn ambient(&self) -> &GroupId {
        &self.ambient
    }

    /// Dimension of the subgroup.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Include subgroup coordinates into the ambient algebra.
    pub fn embed(&self, coords: &DVector<f64>) -> Result<AlgebraElement, LieError> {
        if coords.len() != self.dim() {
            return Err(LieError::DimensionMismatch {
                group: self.label.clone(),
                want: self.dim(),
                got: coords.len(),
            });
        }
        AlgebraElement::from_coords(&self.ambient, &self.basis * coords)
    }

    /// Restrict an ambient dual vector to subgroup coordinates (`Bᵀ μ`).
    pub fn restrict(&self, mu: &CoalgebraElement) -> Result<DVector<f64>, LieError> {
        if *mu.group() != self.ambient {
            return Err(mismatch(&self.ambient, mu.group()));
        }
        Ok(self.basis.transpose() * mu.coords())
    }

    /// Exponential of embedded subgroup coordinates.
    pub fn exp(&self, coords: &DVector<f64>) -> Result<GroupElement, LieError> {
        Ok(self.embed(coords)?.exp())
    }

    /// Orthonormal basis of the annihilator of the subalgebra in the dual.
    pub fn annihilator_basis(&self) -> DMatrix<f64> {
        let bt = self.basis.transpose();
        if self.dim() == 0 {
            return DMatrix::identity(self.ambient.dim(), self.ambient.dim());
        }
        let info = crate::numeric::ranked(&bt, crate::numeric::RANK_CUTOFF)
            .expect("orthonormal basis cannot have ambiguous rank");
        info.kernel
    }

    /// Coadjoint action of a subgroup element on the subgroup's own dual:
    /// `ν ↦ Bᵀ · Ad*_h (B ν)`.
    pub fn coadjoint_on_dual(
        &self,
        h: &GroupElement,
        nu: &DVector<f64>,
    ) -> Result<DVector<f64>, LieError> {
        if *h.group() != self.ambient {
            return Err(mismatch(&self.ambient, h.group()));
        }
        let lifted = CoalgebraElement::from_coords(&self.ambient, &self.basis * nu)?;
        let moved = coadjoint(h, &lifted)?;
        Ok(self.basis.transpose() * moved.coords())
    }

    /// Seeded random element `exp(scale · ξ)` with Gaussian `ξ`.
    pub fn sample(&self, rng: &mut ChaCha8Rng, scale: f64) -> GroupElement {
        let coords = rng::normal_vector(rng, self.dim()) * scale;
        self.exp(&coords).expect("dimensions match by construction")
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn so3() -> GroupId {
        GroupId::SO3
    }

    fn sample_algebra(group: &GroupId, rng: &mut ChaCha8Rng, scale: f64) -> AlgebraElement {
        AlgebraElement::from_coords(group, rng::normal_vector(rng, group.dim()) * scale).unwrap()
    }

    fn sample_group(group: &GroupId, rng: &mut ChaCha8Rng) -> GroupElement {
        sample_algebra(group, rng, 1.0).exp()
    }

    /// Brute-force block product, written independently of `multiply`.
    fn multiply_oracle(a: &GroupElement, b: &GroupElement) -> Vec<DMatrix<f64>> {
        a.blocks()
            .iter()
            .zip(b.blocks().iter())
            .map(|(x, y)| {
                let n = x.nrows();
                let mut out = DMatrix::zeros(n, n);
                for r in 0..n {
                    for c in 0..n {
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += x[(r, k)] * y[(k, c)];
                        }
                        out[(r, c)] = acc;
                    }
                }
                out
            })
            .collect()
    }

    #[test]
    fn multiply_matches_brute_force() {
        let group = GroupId::product(GroupId::SO3, GroupId::Torus2).unwrap();
        let mut rng = rng::stream(3, &["lie", "multiply"]);
        for _ in 0..20 {
            let a = sample_group(&group, &mut rng);
            let b = sample_group(&group, &mut rng);
            let prod = a.multiply(&b).unwrap();
            for (got, want) in prod.blocks().iter().zip(multiply_oracle(&a, &b)) {
                assert!((got - want).amax() < 1e-13);
            }
        }
    }

    #[test]
    fn multiply_rejects_mixed_groups() {
        let a = GroupElement::identity(&GroupId::U1);
        let b = GroupElement::identity(&GroupId::SO2);
        assert!(matches!(
            a.multiply(&b),
            Err(LieError::GroupMismatch { .. })
        ));
    }

    #[test]
    fn exp_quarter_turn_about_e3() {
        let z = AlgebraElement::from_coords(
            &so3(),
            DVector::from_vec(vec![0.0, 0.0, std::f64::consts::FRAC_PI_2]),
        )
        .unwrap();
        let g = z.exp();
        let expected =
            DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((g.block(0) - expected).amax() < 1e-15);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        for group in [
            GroupId::U1,
            GroupId::SO2,
            GroupId::SO3,
            GroupId::Torus2,
            GroupId::product(GroupId::SO3, GroupId::SO3).unwrap(),
        ] {
            let e = AlgebraElement::zero(&group).exp();
            assert!((e.flatten() - GroupElement::identity(&group).flatten()).amax() < 1e-15);
        }
    }

    #[test]
    fn exp_is_a_one_parameter_homomorphism() {
        let mut rng = rng::stream(5, &["lie", "one-param"]);
        for group in [GroupId::SO3, GroupId::Torus2] {
            for _ in 0..25 {
                let z = sample_algebra(&group, &mut rng, 1.5);
                let s = rng::normal(&mut rng);
                let t = rng::normal(&mut rng);
                let lhs = z.scale(s + t).exp();
                let rhs = z.scale(s).exp().multiply(&z.scale(t).exp()).unwrap();
                assert!((lhs.flatten() - rhs.flatten()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_inverse_cancels_to_identity() {
        // 100 draws with coordinate norm up to 5, all catalog shapes.
        let mut rng = rng::stream(11, &["lie", "exp-inverse"]);
        let groups = [
            GroupId::U1,
            GroupId::SO3,
            GroupId::Torus2,
            GroupId::product(GroupId::SO3, GroupId::Torus2).unwrap(),
        ];
        for group in &groups {
            for _ in 0..100 {
                let mut z = sample_algebra(group, &mut rng, 2.0);
                if z.coords().norm() > 5.0 {
                    z = z.scale(5.0 / z.coords().norm());
                }
                let g = z.exp().multiply(&z.scale(-1.0).exp()).unwrap();
                let id = GroupElement::identity(group);
                assert!((g.flatten() - id.flatten()).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn product_exp_agrees_with_blockwise_closed_form() {
        // Oracle: exponentiate each factor with its closed form, then glue.
        let group = GroupId::product(GroupId::SO3, GroupId::Torus2).unwrap();
        let mut rng = rng::stream(13, &["lie", "taylor-oracle"]);
        for _ in 0..50 {
            let z = sample_algebra(&group, &mut rng, 2.0);
            let (za, zb) = z.split().unwrap();
            let via_taylor = z.exp();
            let glued = GroupElement::pair(&group, &za.exp(), &zb.exp()).unwrap();
            assert!((via_taylor.flatten() - glued.flatten()).amax() < 1e-13);
        }
    }

    #[test]
    fn coadjoint_quarter_turn_moves_e1_to_e2() {
        let g = AlgebraElement::from_coords(
            &so3(),
            DVector::from_vec(vec![0.0, 0.0, std::f64::consts::FRAC_PI_2]),
        )
        .unwrap()
        .exp();
        let mu =
            CoalgebraElement::from_coords(&so3(), DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        let moved = coadjoint(&g, &mu).unwrap();
        let expected = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!((moved.coords() - expected).amax() < 1e-14);
    }

    #[test]
    fn coadjoint_satisfies_the_pairing_identity() {
        // ⟨Ad*_g μ, Z⟩ = ⟨μ, Ad_{g⁻¹} Z⟩, with the right side computed by
        // direct matrix conjugation.
        let mut rng = rng::stream(17, &["lie", "pairing-duality"]);
        for group in [
            GroupId::SO3,
            GroupId::Torus2,
            GroupId::product(GroupId::SO3, GroupId::SO2).unwrap(),
        ] {
            for _ in 0..100 {
                let g = sample_group(&group, &mut rng);
                let mu = CoalgebraElement::from_coords(
                    &group,
                    rng::normal_vector(&mut rng, group.dim()),
                )
                .unwrap();
                let z = sample_algebra(&group, &mut rng, 1.0);
                let lhs = pairing(&coadjoint(&g, &mu).unwrap(), &z).unwrap();
                let ginv = g.inverse();
                let conj: Vec<DMatrix<f64>> = z
                    .to_blocks()
                    .iter()
                    .zip(ginv.blocks().iter())
                    .map(|(zb, qb)| qb * zb * qb.transpose())
                    .collect();
                let (coords, off) = project_to_algebra(&group, &conj);
                assert!(off < 1e-12);
                let rhs = mu.coords().dot(&coords);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn coadjoint_is_a_homomorphism() {
        // 1000 seeded pairs across the catalog, residual below 1e-9.
        let mut rng = rng::stream(19, &["lie", "coadjoint-hom"]);
        let groups = [
            GroupId::SO3,
            GroupId::Torus2,
            GroupId::product(GroupId::SO3, GroupId::SO3).unwrap(),
        ];
        let mut checked = 0;
        while checked < 1000 {
            for group in &groups {
                let g = sample_group(group, &mut rng);
                let h = sample_group(group, &mut rng);
                let mu = CoalgebraElement::from_coords(
                    group,
                    rng::normal_vector(&mut rng, group.dim()),
                )
                .unwrap();
                let gh = g.multiply(&h).unwrap();
                let joint = coadjoint(&gh, &mu).unwrap();
                let staged = coadjoint(&g, &coadjoint(&h, &mu).unwrap()).unwrap();
                assert!((joint.coords() - staged.coords()).amax() < 1e-9);
                checked += 1;
            }
        }
    }

    #[test]
    fn bracket_of_the_first_two_rotation_generators() {
        let e1 = AlgebraElement::from_coords(&so3(), DVector::from_vec(vec![1.0, 0.0, 0.0]))
            .unwrap();
        let e2 = AlgebraElement::from_coords(&so3(), DVector::from_vec(vec![0.0, 1.0, 0.0]))
            .unwrap();
        let b = bracket(&e1, &e2).unwrap();
        assert!((b.coords() - DVector::from_vec(vec![0.0, 0.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi() {
        let group = GroupId::product(GroupId::SO3, GroupId::Torus2).unwrap();
        let mut rng = rng::stream(23, &["lie", "jacobi"]);
        for _ in 0..50 {
            let x = sample_algebra(&group, &mut rng, 1.0);
            let y = sample_algebra(&group, &mut rng, 1.0);
            let z = sample_algebra(&group, &mut rng, 1.0);
            let xy = bracket(&x, &y).unwrap();
            let yx = bracket(&y, &x).unwrap();
            assert!((xy.coords() + yx.coords()).amax() < 1e-13);
            let jac = bracket(&x, &bracket(&y, &z).unwrap())
                .unwrap()
                .add(&bracket(&y, &bracket(&z, &x).unwrap()).unwrap())
                .unwrap()
                .add(&bracket(&z, &bracket(&x, &y).unwrap()).unwrap())
                .unwrap();
            assert!(jac.coords().amax() < 1e-12);
        }
    }

    #[test]
    fn log_derivative_recovers_the_generator_exactly() {
        // Velocity of exp(tZ) q at t = 0 is Z q; the right logarithmic
        // derivative must return Z without finite differencing.
        let mut rng = rng::stream(29, &["lie", "logderiv"]);
        for group in [GroupId::SO3, GroupId::Torus2] {
            for _ in 0..25 {
                let q = sample_group(&group, &mut rng);
                let z = sample_algebra(&group, &mut rng, 1.0);
                let velocity = algebra_velocity_at(&q, &z).unwrap();
                let (recovered, off) = log_derivative(&q, &velocity);
                assert!(off < 1e-12, "off-algebra part {off}");
                assert!((recovered.coords() - z.coords()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn left_and_right_log_derivatives_differ_by_adjoint() {
        let mut rng = rng::stream(31, &["lie", "left-right"]);
        let group = GroupId::SO3;
        for _ in 0..25 {
            let q = sample_group(&group, &mut rng);
            let z = sample_algebra(&group, &mut rng, 1.0);
            let velocity = algebra_velocity_at(&q, &z).unwrap();
            let (right, _) = log_derivative(&q, &velocity);
            let (left, _) = left_log_derivative(&q, &velocity);
            let adj = adjoint(&q, &left).unwrap();
            assert!((adj.coords() - right.coords()).amax() < 1e-12);
        }
    }

    #[test]
    fn validate_flags_drift_and_renormalize_repairs_it() {
        let mut rng = rng::stream(37, &["lie", "renorm"]);
        let q = sample_group(&GroupId::SO3, &mut rng);
        let mut flat = q.flatten();
        flat[1] += 3e-6;
        let drifted = GroupElement::from_flat(&GroupId::SO3, &flat);
        assert!(drifted.validate(RELATION_TOL).is_err());
        let repaired = drifted.renormalized();
        assert!(repaired.validate(RELATION_TOL).is_ok());
        assert!((repaired.flatten() - flat).amax() < 1e-5);
    }

    #[test]
    fn nesting_deeper_than_two_is_rejected() {
        let depth1 = GroupId::product(GroupId::U1, GroupId::SO2).unwrap();
        let depth2 = GroupId::product(depth1.clone(), GroupId::SO3).unwrap();
        assert_eq!(depth2.dim(), 1 + 1 + 3);
        assert!(matches!(
            GroupId::product(depth2, GroupId::U1),
            Err(LieError::NestingTooDeep)
        ));
    }

    #[test]
    fn torus_blocks_stay_independent() {
        let z = AlgebraElement::from_coords(&GroupId::Torus2, DVector::from_vec(vec![0.4, -1.1]))
            .unwrap();
        let g = z.exp();
        assert!((g.block(0) - rot2(0.4)).amax() < 1e-15);
        assert!((g.block(1) - rot2(-1.1)).amax() < 1e-15);
        assert_eq!(GroupId::Torus2.ambient_dim(), 8);
    }

    #[test]
    fn winding_annihilator_is_orthogonal_to_the_line() {
        let alpha = std::f64::consts::SQRT_2;
        let h = Subgroup::winding(alpha);
        assert_eq!(h.dim(), 1);
        let ann = h.annihilator_basis();
        assert_eq!(ann.ncols(), 1);
        let dot = ann.column(0).dot(&h.basis().column(0));
        assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-14);
        // The annihilator direction is ±(-alpha, 1)/sqrt(1+alpha^2).
        let expected = DVector::from_vec(vec![-alpha, 1.0]) / (1.0 + alpha * alpha).sqrt();
        let got = ann.column(0).into_owned();
        let aligned = (got.clone() - expected.clone())
            .amax()
            .min((got + expected).amax());
        assert!(aligned < 1e-12);
    }

    #[test]
    fn subgroup_embed_restrict_roundtrip() {
        let h = Subgroup::so2_in_so3();
        let nu = DVector::from_vec(vec![0.7]);
        let embedded = h.embed(&nu).unwrap();
        assert!((embedded.coords() - DVector::from_vec(vec![0.0, 0.0, 0.7])).amax() < 1e-15);
        let mu = CoalgebraElement::from_coords(&GroupId::SO3, DVector::from_vec(vec![0.3, -0.2, 0.9]))
            .unwrap();
        let restricted = h.restrict(&mu).unwrap();
        assert_abs_diff_eq!(restricted[0], 0.9, epsilon = 1e-15);
    }

    #[test]
    fn pair_with_full_builds_the_acting_group() {
        let h = Subgroup::so2_in_so3();
        let gh = Subgroup::pair_with_full(GroupId::SO3, &h).unwrap();
        assert_eq!(gh.dim(), 4);
        assert_eq!(gh.ambient().dim(), 6);
        let coords = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.5]);
        let embedded = gh.embed(&coords).unwrap();
        let expected = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.0, 0.0, 0.5]);
        assert!((embedded.coords() - expected).amax() < 1e-15);
    }

    #[test]
    fn split_and_pair_are_inverse() {
        let group = GroupId::product(GroupId::SO3, GroupId::Torus2).unwrap();
        let mut rng = rng::stream(41, &["lie", "split"]);
        let g = sample_group(&group, &mut rng);
        let (a, b) = g.split().unwrap();
        assert_eq!(*a.group(), GroupId::SO3);
        assert_eq!(*b.group(), GroupId::Torus2);
        let glued = GroupElement::pair(&group, &a, &b).unwrap();
        assert_eq!(glued, g);
    }
}
