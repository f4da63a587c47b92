//! Plots, embedded spaces, and differential forms.
//!
//! Carriers are embedded submanifolds of some `R^n`, described by a
//! constraint map whose zero set is the space; tangent spaces are numeric
//! kernels of the constraint Jacobian.  Smooth test maps into a carrier are
//! [`Plot`]s: closures on a rectangular parameter box.  Differential forms
//! are evaluated on *ambient* tangent vectors through smooth extensions of
//! the defining formulas, so pullbacks only ever need plot derivatives.
//!
//! Derivatives are central differences at steps `h` and `h/2` combined by
//! one Richardson extrapolation level; the two raw estimates must agree to
//! [`numeric::FD_DISAGREEMENT`] or the derivative is rejected rather than
//! silently returned.  Parameters closer than twice the step to the domain
//! boundary are rejected up front.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::lie::{self, AlgebraElement, GroupElement, GroupId, LieError};
use crate::numeric::{self, RankAmbiguity};
use crate::report::{CheckReport, ResidualAccumulator, Thresholds, Tolerances};
use crate::rng;

/// Step used to differentiate constraint maps (fixed; constraints are
/// polynomial and well-scaled).
const CONSTRAINT_FD: f64 = 1e-6;

/// Errors raised by the calculus layer.
#[derive(Debug, Clone, thiserror::Error)]
pub enum CalcError {
    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("space mismatch: form lives on {form_space}, plot maps into {plot_space}")]
    SpaceMismatch {
        form_space: String,
        plot_space: String,
    },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("parameter {param:?} is within {margin:.3e} of the domain boundary")]
    BoundaryViolation { param: Vec<f64>, margin: f64 },
    #[error(
        "derivative rejected at {param:?}: step disagreement {disagreement:.3e} exceeds {limit:.3e}"
    )]
    DerivativeFailure {
        param: Vec<f64>,
        disagreement: f64,
        limit: f64,
    },
    #[error("tangent space has dimension {got}, expected {want}")]
    TangentDimension { want: usize, got: usize },
    #[error("rank decision failed: {0}")]
    Rank(RankAmbiguity),
    #[error(transparent)]
    Lie(#[from] LieError),
}

pub type PointFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type SampleFn = Arc<dyn Fn(&mut ChaCha8Rng) -> DVector<f64> + Send + Sync>;
pub type FormFn = Arc<dyn Fn(&DVector<f64>, &[DVector<f64>]) -> f64 + Send + Sync>;
type DomainFormFn =
    Arc<dyn Fn(&DVector<f64>, &[DVector<f64>]) -> Result<f64, CalcError> + Send + Sync>;
type PlotDerivativeFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;

// ---------------------------------------------------------------------------
// Embedded spaces
// ---------------------------------------------------------------------------

/// A submanifold of `R^n` cut out by a constraint map.
#[derive(Clone)]
pub struct EmbeddedSpace {
    name: String,
    ambient_dim: usize,
    /// Expected manifold dimension; tangent computations must reproduce it.
    dim: usize,
    constraint: PointFn,
    sampler: SampleFn,
}

impl std::fmt::Debug for EmbeddedSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddedSpace")
            .field("name", &self.name)
            .field("ambient_dim", &self.ambient_dim)
            .field("dim", &self.dim)
            .finish()
    }
}

impl EmbeddedSpace {
    pub fn new(
        name: impl Into<String>,
        ambient_dim: usize,
        dim: usize,
        constraint: PointFn,
        sampler: SampleFn,
    ) -> Self {
        EmbeddedSpace {
            name: name.into(),
            ambient_dim,
            dim,
            constraint,
            sampler,
        }
    }

    /// All of `R^n`, sampled with standard normals.
    pub fn euclidean(name: impl Into<String>, n: usize) -> Self {
        EmbeddedSpace {
            name: name.into(),
            ambient_dim: n,
            dim: n,
            constraint: Arc::new(|_| DVector::zeros(0)),
            sampler: Arc::new(move |rng| rng::normal_vector(rng, n)),
        }
    }

    /// The zero-dimensional one-point space.
    pub fn point(name: impl Into<String>) -> Self {
        Self::euclidean(name, 0)
    }

    /// A catalog group as a manifold of flattened block matrices, cut out by
    /// blockwise orthogonality (upper triangle of `QᵀQ - I`).
    pub fn group_manifold(group: &GroupId) -> Self {
        let blocks = group.blocks();
        let ambient_dim = group.ambient_dim();
        let dim = group.dim();
        let g = group.clone();
        let g2 = group.clone();
        let constraint = Arc::new(move |x: &DVector<f64>| {
            let el = GroupElement::from_flat(&g, x);
            let mut out = Vec::new();
            for b in el.blocks() {
                let gram = b.transpose() * b;
                for r in 0..b.nrows() {
                    for c in r..b.ncols() {
                        let target = if r == c { 1.0 } else { 0.0 };
                        out.push(gram[(r, c)] - target);
                    }
                }
            }
            DVector::from_vec(out)
        });
        let sampler = Arc::new(move |rng: &mut ChaCha8Rng| {
            let coords = rng::normal_vector(rng, g2.dim());
            AlgebraElement::from_coords(&g2, coords)
                .expect("dimension matches by construction")
                .exp()
                .flatten()
        });
        let constraint_count: usize = blocks.iter().map(|b| b.size() * (b.size() + 1) / 2).sum();
        debug_assert_eq!(ambient_dim - constraint_count, dim);
        EmbeddedSpace {
            name: format!("group({group})"),
            ambient_dim,
            dim,
            constraint,
            sampler,
        }
    }

    /// Product space: coordinates of `a` followed by coordinates of `b`.
    pub fn product(name: impl Into<String>, a: &EmbeddedSpace, b: &EmbeddedSpace) -> Self {
        let (na, nb) = (a.ambient_dim, b.ambient_dim);
        let (ca, cb) = (a.constraint.clone(), b.constraint.clone());
        let (sa, sb) = (a.sampler.clone(), b.sampler.clone());
        let constraint = Arc::new(move |x: &DVector<f64>| {
            let xa = x.rows(0, na).into_owned();
            let xb = x.rows(na, nb).into_owned();
            let ra = ca(&xa);
            let rb = cb(&xb);
            let mut out = Vec::with_capacity(ra.len() + rb.len());
            out.extend(ra.iter().copied());
            out.extend(rb.iter().copied());
            DVector::from_vec(out)
        });
        let sampler = Arc::new(move |rng: &mut ChaCha8Rng| {
            let xa = sa(rng);
            let xb = sb(rng);
            let mut out = Vec::with_capacity(na + nb);
            out.extend(xa.iter().copied());
            out.extend(xb.iter().copied());
            DVector::from_vec(out)
        });
        EmbeddedSpace {
            name: name.into(),
            ambient_dim: na + nb,
            dim: a.dim + b.dim,
            constraint,
            sampler,
        }
    }

    /// Same set, extra constraints: used for level sets inside a carrier.
    /// `extra` must cut `codim` further dimensions; `sampler` must land on
    /// the restricted set.
    pub fn restricted(
        &self,
        name: impl Into<String>,
        extra: PointFn,
        codim: usize,
        sampler: SampleFn,
    ) -> Self {
        let base = self.constraint.clone();
        let constraint = Arc::new(move |x: &DVector<f64>| {
            let rb = base(x);
            let re = extra(x);
            let mut out = Vec::with_capacity(rb.len() + re.len());
            out.extend(rb.iter().copied());
            out.extend(re.iter().copied());
            DVector::from_vec(out)
        });
        EmbeddedSpace {
            name: name.into(),
            ambient_dim: self.ambient_dim,
            dim: self.dim - codim,
            constraint,
            sampler,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraint_residual(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.constraint)(x)
    }

    /// Largest constraint violation at `x`.
    pub fn residual_max(&self, x: &DVector<f64>) -> f64 {
        numeric::max_abs(&self.constraint_residual(x))
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        (self.sampler)(rng)
    }

    /// Orthonormal basis of the tangent space at `x` (numeric kernel of the
    /// constraint Jacobian).  Errors if the kernel dimension is ambiguous or
    /// disagrees with the declared dimension.
    pub fn tangent_basis(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, CalcError> {
        if self.ambient_dim == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let constraint = self.constraint.clone();
        let jac = numeric::jacobian(move |p| constraint(p), x, CONSTRAINT_FD);
        let info = numeric::ranked(&jac, numeric::RANK_CUTOFF).map_err(CalcError::Rank)?;
        if info.kernel.ncols() != self.dim {
            return Err(CalcError::TangentDimension {
                want: self.dim,
                got: info.kernel.ncols(),
            });
        }
        Ok(info.kernel)
    }

    /// Orthogonal projection of an ambient vector onto the tangent space.
    pub fn project_tangent(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>, CalcError> {
        let basis = self.tangent_basis(x)?;
        Ok(&basis * (basis.transpose() * v))
    }

    /// Seeded random tangent vector at `x` (projected ambient Gaussian).
    pub fn tangent_sample(
        &self,
        x: &DVector<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<DVector<f64>, CalcError> {
        let ambient = rng::normal_vector(rng, self.ambient_dim);
        self.project_tangent(x, &ambient)
    }

    /// Max constraint residual over `n` declared samples.
    pub fn sampler_residual(&self, rng: &mut ChaCha8Rng, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let x = self.sample(rng);
            worst = worst.max(self.residual_max(&x));
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Plots
// ---------------------------------------------------------------------------

/// A smooth test map from a rectangular parameter box into a carrier.
#[derive(Clone)]
pub struct Plot {
    name: String,
    space: String,
    ambient_dim: usize,
    domain_box: Vec<(f64, f64)>,
    map: PointFn,
    /// Optional analytic directional derivative `(u, du) ↦ D map(u) du`,
    /// carried by plots whose construction knows it in closed form.
    exact_derivative: Option<PlotDerivativeFn>,
}

impl std::fmt::Debug for Plot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plot")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("domain_box", &self.domain_box)
            .field("has_exact_derivative", &self.exact_derivative.is_some())
            .finish()
    }
}

impl Plot {
    pub fn new(
        name: impl Into<String>,
        space: impl Into<String>,
        ambient_dim: usize,
        domain_box: Vec<(f64, f64)>,
        map: PointFn,
    ) -> Self {
        Plot {
            name: name.into(),
            space: space.into(),
            ambient_dim,
            domain_box,
            map,
            exact_derivative: None,
        }
    }

    pub fn with_exact_derivative(mut self, derivative: PlotDerivativeFn) -> Self {
        self.exact_derivative = Some(derivative);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &str {
        &self.space
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_box.len()
    }

    pub fn domain_box(&self) -> &[(f64, f64)] {
        &self.domain_box
    }

    pub fn has_exact_derivative(&self) -> bool {
        self.exact_derivative.is_some()
    }

    pub fn eval(&self, u: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(u.len(), self.domain_dim());
        (self.map)(u)
    }

    /// Analytic derivative, if the plot carries one.
    pub fn exact_derivative(&self, u: &DVector<f64>, du: &DVector<f64>) -> Option<DVector<f64>> {
        self.exact_derivative.as_ref().map(|d| d(u, du))
    }

    /// Distance from `u` to the nearest domain boundary.
    pub fn boundary_distance(&self, u: &DVector<f64>) -> f64 {
        self.domain_box
            .iter()
            .zip(u.iter())
            .map(|((lo, hi), &x)| (x - lo).min(hi - x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Uniform sample from the domain shrunk by an absolute `margin`.
    pub fn sample_domain(&self, rng: &mut ChaCha8Rng, margin: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.domain_dim(),
            self.domain_box
                .iter()
                .map(|(lo, hi)| rng::uniform(rng, lo + margin, hi - margin)),
        )
    }

    /// Max constraint residual of plot values against `space` over a seeded
    /// probe grid.
    pub fn probe_against(&self, space: &EmbeddedSpace, rng: &mut ChaCha8Rng, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let u = self.sample_domain(rng, 1e-3);
            worst = worst.max(space.residual_max(&self.eval(&u)));
        }
        worst
    }

    /// Post-compose with a smooth ambient map into another carrier.  The
    /// composite is differentiated numerically; any exact derivative of the
    /// original plot is dropped.
    pub fn then(
        &self,
        name: impl Into<String>,
        space: impl Into<String>,
        ambient_dim: usize,
        map: PointFn,
    ) -> Plot {
        let inner = self.map.clone();
        Plot {
            name: name.into(),
            space: space.into(),
            ambient_dim,
            domain_box: self.domain_box.clone(),
            map: Arc::new(move |u| map(&inner(u))),
            exact_derivative: None,
        }
    }

    /// Pre-compose with the affine map `u ↦ A u + b` on a new domain box.
    pub fn precompose_affine(
        &self,
        name: impl Into<String>,
        a: DMatrix<f64>,
        b: DVector<f64>,
        domain_box: Vec<(f64, f64)>,
    ) -> Plot {
        let inner = self.map.clone();
        let a0 = a.clone();
        let b0 = b.clone();
        let map: PointFn = Arc::new(move |u| inner(&(&a0 * u + &b0)));
        let exact = self.exact_derivative.clone().map(|d| {
            let a1 = a.clone();
            let b1 = b.clone();
            let out: PlotDerivativeFn = Arc::new(move |u, du| d(&(&a1 * u + &b1), &(&a1 * du)));
            out
        });
        Plot {
            name: name.into(),
            space: self.space.clone(),
            ambient_dim: self.ambient_dim,
            domain_box,
            map,
            exact_derivative: exact,
        }
    }
}

// ---------------------------------------------------------------------------
// Plot derivatives
// ---------------------------------------------------------------------------

fn check_boundary(plot: &Plot, u: &DVector<f64>, reach: f64) -> Result<(), CalcError> {
    let margin = 2.0 * reach;
    if plot.boundary_distance(u) < margin {
        return Err(CalcError::BoundaryViolation {
            param: u.iter().copied().collect(),
            margin,
        });
    }
    Ok(())
}

/// Directional derivative of a plot: Richardson-extrapolated central
/// differences with a step-consistency guard.
pub fn plot_derivative(
    plot: &Plot,
    u: &DVector<f64>,
    du: &DVector<f64>,
    fd_step: f64,
) -> Result<DVector<f64>, CalcError> {
    if u.len() != plot.domain_dim() || du.len() != plot.domain_dim() {
        return Err(CalcError::DomainMismatch(format!(
            "parameter length {} vs domain dimension {}",
            u.len(),
            plot.domain_dim()
        )));
    }
    let step_reach = fd_step * numeric::max_abs(du).max(1.0);
    check_boundary(plot, u, step_reach)?;
    let estimate = numeric::richardson_derivative(|t| plot.eval(&(u + du * t)), fd_step);
    if estimate.disagreement > numeric::FD_DISAGREEMENT {
        return Err(CalcError::DerivativeFailure {
            param: u.iter().copied().collect(),
            disagreement: estimate.disagreement,
            limit: numeric::FD_DISAGREEMENT,
        });
    }
    Ok(estimate.value)
}

/// Like [`plot_derivative`], but uses the plot's analytic derivative when
/// one is attached.  Identities that must hold to near roundoff go through
/// this entry point.
pub fn plot_derivative_exact_or_fd(
    plot: &Plot,
    u: &DVector<f64>,
    du: &DVector<f64>,
    fd_step: f64,
) -> Result<DVector<f64>, CalcError> {
    match plot.exact_derivative(u, du) {
        Some(v) => Ok(v),
        None => plot_derivative(plot, u, du, fd_step),
    }
}

/// Right logarithmic derivative of a group-valued plot: the algebra
/// coordinates of `(D q(u) du) · q(u)⁻¹`.
pub fn maurer_cartan(
    group: &GroupId,
    plot: &Plot,
    u: &DVector<f64>,
    du: &DVector<f64>,
    fd_step: f64,
) -> Result<AlgebraElement, CalcError> {
    if plot.ambient_dim() != group.ambient_dim() {
        return Err(CalcError::SpaceMismatch {
            form_space: format!("group({group})"),
            plot_space: plot.space.clone(),
        });
    }
    let dq = plot_derivative_exact_or_fd(plot, u, du, fd_step)?;
    let q = GroupElement::from_flat(group, &plot.eval(u));
    let (z, off) = lie::log_derivative(&q, &dq);
    let relative_off = off / z.coords().norm().max(1.0);
    if relative_off > numeric::FD_DISAGREEMENT {
        return Err(CalcError::DerivativeFailure {
            param: u.iter().copied().collect(),
            disagreement: relative_off,
            limit: numeric::FD_DISAGREEMENT,
        });
    }
    Ok(z)
}

// ---------------------------------------------------------------------------
// Forms
// ---------------------------------------------------------------------------

/// A differential `k`-form on an embedded carrier, evaluated on ambient
/// tangent vectors through a smooth extension of its defining formula.
/// Constructors antisymmetrize the supplied closure, so evaluation is
/// alternating whatever the input.
#[derive(Clone)]
pub struct KForm {
    name: String,
    space: String,
    ambient_dim: usize,
    arity: usize,
    eval: FormFn,
    exact_d: Option<FormFn>,
}

impl std::fmt::Debug for KForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KForm")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("arity", &self.arity)
            .field("has_exact_d", &self.exact_d.is_some())
            .finish()
    }
}

fn antisymmetrize(arity: usize, raw: FormFn) -> FormFn {
    match arity {
        0 | 1 => raw,
        2 => Arc::new(move |x, vs| 0.5 * (raw(x, vs) - raw(x, &[vs[1].clone(), vs[0].clone()]))),
        3 => Arc::new(move |x, vs| {
            let p = |i: usize, j: usize, k: usize| {
                raw(x, &[vs[i].clone(), vs[j].clone(), vs[k].clone()])
            };
            (p(0, 1, 2) + p(1, 2, 0) + p(2, 0, 1) - p(0, 2, 1) - p(1, 0, 2) - p(2, 1, 0)) / 6.0
        }),
        n => panic!("forms of arity {n} are not supported"),
    }
}

impl KForm {
    pub fn new(
        name: impl Into<String>,
        space: impl Into<String>,
        ambient_dim: usize,
        arity: usize,
        eval: FormFn,
    ) -> Self {
        KForm {
            name: name.into(),
            space: space.into(),
            ambient_dim,
            arity,
            eval: antisymmetrize(arity, eval),
            exact_d: None,
        }
    }

    /// Attach a closed-form exterior derivative (also antisymmetrized).
    pub fn with_exact_d(mut self, exact_d: FormFn) -> Self {
        self.exact_d = Some(antisymmetrize(self.arity + 1, exact_d));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &str {
        &self.space
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, x: &DVector<f64>, tangents: &[DVector<f64>]) -> f64 {
        assert_eq!(
            tangents.len(),
            self.arity,
            "form {} expects {} tangent arguments",
            self.name,
            self.arity
        );
        (self.eval)(x, tangents)
    }

    /// Closed-form exterior derivative, when attached.
    pub fn exact_d(&self) -> Option<KForm> {
        self.exact_d.as_ref().map(|d| KForm {
            name: format!("d({})", self.name),
            space: self.space.clone(),
            ambient_dim: self.ambient_dim,
            arity: self.arity + 1,
            eval: d.clone(),
            exact_d: None,
        })
    }

    /// Pointwise rescaling under a fresh name; keeps the exact derivative.
    pub fn scaled(&self, name: impl Into<String>, factor: f64) -> KForm {
        let f = self.eval.clone();
        let exact = self.exact_d.clone().map(|d| {
            Arc::new(move |x: &DVector<f64>, vs: &[DVector<f64>]| factor * d(x, vs)) as FormFn
        });
        KForm {
            name: name.into(),
            space: self.space.clone(),
            ambient_dim: self.ambient_dim,
            arity: self.arity,
            eval: Arc::new(move |x, vs| factor * f(x, vs)),
            exact_d: exact,
        }
    }

    /// The same form under a fresh name (combinations pick up unwieldy ones).
    pub fn renamed(mut self, name: impl Into<String>) -> KForm {
        self.name = name.into();
        self
    }

    /// Pointwise linear combination `a·self + b·other` (same space/arity).
    pub fn combine(&self, a: f64, other: &KForm, b: f64) -> Result<KForm, CalcError> {
        if self.arity != other.arity {
            return Err(CalcError::ArityMismatch {
                left: self.arity,
                right: other.arity,
            });
        }
        if self.ambient_dim != other.ambient_dim {
            return Err(CalcError::DomainMismatch(format!(
                "ambient {} vs {}",
                self.ambient_dim, other.ambient_dim
            )));
        }
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let exact = match (&self.exact_d, &other.exact_d) {
            (Some(df), Some(dg)) => {
                let (df, dg) = (df.clone(), dg.clone());
                Some(Arc::new(move |x: &DVector<f64>, vs: &[DVector<f64>]| {
                    a * df(x, vs) + b * dg(x, vs)
                }) as FormFn)
            }
            _ => None,
        };
        Ok(KForm {
            name: format!("{}*{} + {}*{}", a, self.name, b, other.name),
            space: self.space.clone(),
            ambient_dim: self.ambient_dim,
            arity: self.arity,
            eval: Arc::new(move |x, vs| a * f(x, vs) + b * g(x, vs)),
            exact_d: exact,
        })
    }
}

/// A `k`-form on a plot domain (an open box), e.g. the pullback of a
/// carrier form.  Evaluation is fallible because it may involve plot
/// derivatives near the boundary.
#[derive(Clone)]
pub struct DomainForm {
    name: String,
    domain_dim: usize,
    domain_box: Vec<(f64, f64)>,
    arity: usize,
    eval: DomainFormFn,
}

impl std::fmt::Debug for DomainForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DomainForm")
            .field("name", &self.name)
            .field("domain_dim", &self.domain_dim)
            .field("arity", &self.arity)
            .finish()
    }
}

impl DomainForm {
    pub fn new(
        name: impl Into<String>,
        domain_dim: usize,
        domain_box: Vec<(f64, f64)>,
        arity: usize,
        eval: DomainFormFn,
    ) -> Self {
        DomainForm {
            name: name.into(),
            domain_dim,
            domain_box,
            arity,
            eval,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn domain_box(&self) -> &[(f64, f64)] {
        &self.domain_box
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, u: &DVector<f64>, tangents: &[DVector<f64>]) -> Result<f64, CalcError> {
        if tangents.len() != self.arity {
            return Err(CalcError::ArityMismatch {
                left: tangents.len(),
                right: self.arity,
            });
        }
        (self.eval)(u, tangents)
    }

    /// Pointwise linear combination on a shared domain.
    pub fn combine(&self, a: f64, other: &DomainForm, b: f64) -> Result<DomainForm, CalcError> {
        if self.arity != other.arity {
            return Err(CalcError::ArityMismatch {
                left: self.arity,
                right: other.arity,
            });
        }
        if self.domain_dim != other.domain_dim {
            return Err(CalcError::DomainMismatch(format!(
                "domain {} vs {}",
                self.domain_dim, other.domain_dim
            )));
        }
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Ok(DomainForm {
            name: format!("{}*{} + {}*{}", a, self.name, b, other.name),
            domain_dim: self.domain_dim,
            domain_box: self.domain_box.clone(),
            arity: self.arity,
            eval: Arc::new(move |u, vs| Ok(a * f(u, vs)? + b * g(u, vs)?)),
        })
    }
}

/// Pullback of a carrier form along a plot, differentiating the plot by
/// finite differences.
pub fn pullback(form: &KForm, plot: &Plot, fd_step: f64) -> Result<DomainForm, CalcError> {
    pullback_impl(form, plot, fd_step, false)
}

/// Pullback that uses the plot's analytic derivative when attached (and
/// finite differences otherwise).
pub fn pullback_exact_or_fd(
    form: &KForm,
    plot: &Plot,
    fd_step: f64,
) -> Result<DomainForm, CalcError> {
    pullback_impl(form, plot, fd_step, true)
}

fn pullback_impl(
    form: &KForm,
    plot: &Plot,
    fd_step: f64,
    prefer_exact: bool,
) -> Result<DomainForm, CalcError> {
    if form.space != plot.space {
        return Err(CalcError::SpaceMismatch {
            form_space: form.space.clone(),
            plot_space: plot.space.clone(),
        });
    }
    if form.ambient_dim != plot.ambient_dim {
        return Err(CalcError::DomainMismatch(format!(
            "form ambient {} vs plot ambient {}",
            form.ambient_dim, plot.ambient_dim
        )));
    }
    let arity = form.arity;
    let name = format!("{}^*({})", plot.name, form.name);
    let form = form.clone();
    let plot_inner = plot.clone();
    let eval: DomainFormFn = Arc::new(move |u, vs| {
        let mut pushed = Vec::with_capacity(vs.len());
        for v in vs {
            let dv = if prefer_exact {
                plot_derivative_exact_or_fd(&plot_inner, u, v, fd_step)?
            } else {
                plot_derivative(&plot_inner, u, v, fd_step)?
            };
            pushed.push(dv);
        }
        Ok(form.eval(&plot_inner.eval(u), &pushed))
    });
    Ok(DomainForm {
        name,
        domain_dim: plot.domain_dim(),
        domain_box: plot.domain_box.clone(),
        arity,
        eval,
    })
}

/// Exterior derivative of a domain form by central differences of its
/// coefficient functions.  `fd_step` here is the *outer* step; it should be
/// chosen coarser than the plot-derivative step when the form is itself a
/// numeric pullback, to keep inner noise from being amplified.
pub fn domain_exterior_derivative(form: &DomainForm, fd_step: f64) -> DomainForm {
    let inner = form.clone();
    let arity = form.arity + 1;
    let eval: DomainFormFn = Arc::new(move |u, vs| {
        let mut total = 0.0;
        for i in 0..vs.len() {
            let rest: Vec<DVector<f64>> = vs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.clone())
                .collect();
            let plus = inner.eval(&(u + &vs[i] * fd_step), &rest)?;
            let minus = inner.eval(&(u - &vs[i] * fd_step), &rest)?;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * (plus - minus) / (2.0 * fd_step);
        }
        Ok(total)
    });
    DomainForm {
        name: format!("d({})", form.name),
        domain_dim: form.domain_dim,
        domain_box: form.domain_box.clone(),
        arity,
        eval,
    }
}

// ---------------------------------------------------------------------------
// Sampled equality of forms
// ---------------------------------------------------------------------------

/// Configuration for sampled form comparisons.
#[derive(Debug, Clone)]
pub struct EqualityConfig {
    pub seed: u64,
    /// Stream label; distinct comparisons must use distinct labels.
    pub label: String,
    /// Number of domain points.
    pub samples: usize,
    /// Tangent tuples drawn per domain point.
    pub tuples: usize,
    /// Margin kept from the domain boundary when sampling.
    pub margin: f64,
    pub tolerances: Tolerances,
    /// Residuals above this are a hard failure.
    pub fail_above: f64,
}

impl EqualityConfig {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        EqualityConfig {
            seed,
            label: label.into(),
            samples: 100,
            tuples: 4,
            margin: 0.05,
            tolerances: Tolerances::default(),
            fail_above: 1e-3,
        }
    }

    pub fn with_samples(mut self, samples: usize, tuples: usize) -> Self {
        self.samples = samples;
        self.tuples = tuples;
        self
    }
}

/// Compare two domain forms at seeded samples; the report carries the worst
/// witness.  Pass/fail thresholds follow the mixed tolerance at the
/// observed scale.
pub fn forms_equal_on_samples(
    a: &DomainForm,
    b: &DomainForm,
    config: &EqualityConfig,
) -> Result<CheckReport, CalcError> {
    if a.arity != b.arity {
        return Err(CalcError::ArityMismatch {
            left: a.arity,
            right: b.arity,
        });
    }
    if a.domain_dim != b.domain_dim {
        return Err(CalcError::DomainMismatch(format!(
            "domain {} vs {}",
            a.domain_dim, b.domain_dim
        )));
    }
    let mut rng = rng::stream(config.seed, &["forms-equal", &config.label]);
    let mut acc = ResidualAccumulator::new();
    for _ in 0..config.samples {
        let u = DVector::from_iterator(
            a.domain_dim,
            a.domain_box
                .iter()
                .map(|(lo, hi)| rng::uniform(&mut rng, lo + config.margin, hi - config.margin)),
        );
        for _ in 0..config.tuples {
            let tangents: Vec<DVector<f64>> = (0..a.arity)
                .map(|_| rng::normal_vector(&mut rng, a.domain_dim))
                .collect();
            let va = a.eval(&u, &tangents)?;
            let vb = b.eval(&u, &tangents)?;
            acc.push(
                (va - vb).abs(),
                va.abs().max(vb.abs()),
                u.as_slice(),
                &format!("{} = {:.6e}, {} = {:.6e}", a.name, va, b.name, vb),
            );
        }
    }
    let pass = config.tolerances.threshold(acc.scale());
    let thresholds = Thresholds::new(pass, config.fail_above.max(pass * 10.0));
    Ok(acc.finish(
        format!("{} == {}", a.name, b.name),
        "forms_equal_on_samples",
        thresholds,
        config.seed,
    ))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{AlgebraElement, GroupId};
    use approx::assert_abs_diff_eq;

    fn unit_sphere() -> EmbeddedSpace {
        EmbeddedSpace::new(
            "S2",
            3,
            2,
            Arc::new(|x: &DVector<f64>| DVector::from_vec(vec![x.norm_squared() - 1.0])),
            Arc::new(|rng: &mut ChaCha8Rng| {
                let g = rng::normal_vector(rng, 3);
                g.normalize()
            }),
        )
    }

    fn so3_plot_two_generators() -> (Plot, AlgebraElement, AlgebraElement) {
        let z1 = AlgebraElement::from_coords(&GroupId::SO3, DVector::from_vec(vec![0.3, -0.2, 0.5]))
            .unwrap();
        let z2 = AlgebraElement::from_coords(&GroupId::SO3, DVector::from_vec(vec![-0.1, 0.4, 0.2]))
            .unwrap();
        let (a, b) = (z1.clone(), z2.clone());
        let plot = Plot::new(
            "two-generator",
            "group(SO3)",
            9,
            vec![(-1.0, 1.0)],
            Arc::new(move |u: &DVector<f64>| {
                a.scale(u[0])
                    .exp()
                    .multiply(&b.scale(u[0]).exp())
                    .unwrap()
                    .flatten()
            }),
        );
        (plot, z1, z2)
    }

    #[test]
    fn sphere_tangent_space_at_a_pole() {
        let sphere = unit_sphere();
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let basis = sphere.tangent_basis(&x).unwrap();
        assert_eq!(basis.ncols(), 2);
        // Tangent plane is orthogonal to x.
        for c in 0..2 {
            assert_abs_diff_eq!(basis.column(c).dot(&x), 0.0, epsilon = 1e-9);
        }
        let mut expected = DMatrix::zeros(3, 2);
        expected[(1, 0)] = 1.0;
        expected[(2, 1)] = 1.0;
        assert!(numeric::subspace_distance(&basis, &expected) < 1e-9);
    }

    #[test]
    fn wrong_declared_dimension_is_caught() {
        let bad = EmbeddedSpace::new(
            "bad-sphere",
            3,
            1, // actually 2-dimensional
            Arc::new(|x: &DVector<f64>| DVector::from_vec(vec![x.norm_squared() - 1.0])),
            Arc::new(|rng: &mut ChaCha8Rng| rng::normal_vector(rng, 3).normalize()),
        );
        let x = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!(matches!(
            bad.tangent_basis(&x),
            Err(CalcError::TangentDimension { want: 1, got: 2 })
        ));
    }

    #[test]
    fn group_manifold_samples_satisfy_constraints() {
        for group in [
            GroupId::SO3,
            GroupId::Torus2,
            GroupId::product(GroupId::SO3, GroupId::Torus2).unwrap(),
        ] {
            let manifold = EmbeddedSpace::group_manifold(&group);
            let mut rng = rng::stream(1, &["calculus", "group-samples"]);
            assert!(manifold.sampler_residual(&mut rng, 50) < 1e-9);
            let x = manifold.sample(&mut rng);
            let basis = manifold.tangent_basis(&x).unwrap();
            assert_eq!(basis.ncols(), group.dim());
        }
    }

    #[test]
    fn plot_derivative_matches_analytic_rotation_curve() {
        // q(t) = exp(tZ): velocity Z·q(t), compared at fd 1e-5 below 1e-8.
        let z = AlgebraElement::from_coords(&GroupId::SO3, DVector::from_vec(vec![0.7, -0.4, 0.2]))
            .unwrap();
        let zc = z.clone();
        let plot = Plot::new(
            "exp-curve",
            "group(SO3)",
            9,
            vec![(-1.0, 1.0)],
            Arc::new(move |u: &DVector<f64>| zc.scale(u[0]).exp().flatten()),
        );
        let u = DVector::from_vec(vec![0.3]);
        let du = DVector::from_vec(vec![1.0]);
        let got = plot_derivative(&plot, &u, &du, 1e-5).unwrap();
        let q = z.scale(0.3).exp();
        let expected = lie::algebra_velocity_at(&q, &z).unwrap();
        assert!((got - expected).amax() < 1e-8);
    }

    #[test]
    fn plot_derivative_is_linear_in_the_direction() {
        let (plot, _, _) = so3_plot_two_generators();
        let u = DVector::from_vec(vec![0.2]);
        let v = DVector::from_vec(vec![0.8]);
        let w = DVector::from_vec(vec![-0.5]);
        let dv = plot_derivative(&plot, &u, &v, 1e-5).unwrap();
        let dw = plot_derivative(&plot, &u, &w, 1e-5).unwrap();
        let combo = plot_derivative(&plot, &u, &(2.0 * &v + 3.0 * &w), 1e-5).unwrap();
        assert!((combo - (dv * 2.0 + dw * 3.0)).amax() < 1e-8);
    }

    #[test]
    fn boundary_violation_is_reported() {
        let (plot, _, _) = so3_plot_two_generators();
        let u = DVector::from_vec(vec![0.999999]);
        let du = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            plot_derivative(&plot, &u, &du, 1e-3),
            Err(CalcError::BoundaryViolation { .. })
        ));
    }

    #[test]
    fn kinked_plot_fails_the_consistency_guard() {
        let plot = Plot::new(
            "kinked",
            "line",
            1,
            vec![(-1.0, 1.0)],
            Arc::new(|u: &DVector<f64>| DVector::from_vec(vec![(u[0] - 0.10001234).abs()])),
        );
        let u = DVector::from_vec(vec![0.1]);
        let du = DVector::from_vec(vec![1.0]);
        assert!(matches!(
            plot_derivative(&plot, &u, &du, 1e-3),
            Err(CalcError::DerivativeFailure { .. })
        ));
    }

    #[test]
    fn maurer_cartan_adds_the_generators_at_zero() {
        let (plot, z1, z2) = so3_plot_two_generators();
        let u = DVector::from_vec(vec![0.0]);
        let du = DVector::from_vec(vec![1.0]);
        let z = maurer_cartan(&GroupId::SO3, &plot, &u, &du, 1e-5).unwrap();
        let expected = z1.add(&z2).unwrap();
        assert!((z.coords() - expected.coords()).amax() < 1e-6);
    }

    #[test]
    fn maurer_cartan_of_translated_one_parameter_curve_is_constant() {
        // q(t) = exp(tZ) q0 has constant right logarithmic derivative Z.
        let z = AlgebraElement::from_coords(&GroupId::SO3, DVector::from_vec(vec![0.2, 0.9, -0.3]))
            .unwrap();
        let q0 = AlgebraElement::from_coords(&GroupId::SO3, DVector::from_vec(vec![1.0, 0.1, 0.4]))
            .unwrap()
            .exp();
        let zc = z.clone();
        let plot = Plot::new(
            "translated-curve",
            "group(SO3)",
            9,
            vec![(-1.2, 1.2)],
            Arc::new(move |u: &DVector<f64>| {
                zc.scale(u[0]).exp().multiply(&q0).unwrap().flatten()
            }),
        );
        let du = DVector::from_vec(vec![1.0]);
        for k in 0..9 {
            let t = -1.0 + 0.25 * k as f64;
            let got = maurer_cartan(&GroupId::SO3, &plot, &DVector::from_vec(vec![t]), &du, 1e-5)
                .unwrap();
            assert!(
                (got.coords() - z.coords()).amax() < 1e-6,
                "drift at t = {t}"
            );
        }
    }

    #[test]
    fn pullback_of_right_invariant_form_is_constant() {
        // μ = (0.3, -1.0, 0.7): the 1-form ⟨μ, δq q⁻¹⟩ pulled back along
        // exp(tZ) q0 is the constant ⟨μ, Z⟩ dt.
        let mu = DVector::from_vec(vec![0.3, -1.0, 0.7]);
        let mu_form = mu.clone();
        let form = KForm::new(
            "right-invariant",
            "group(SO3)",
            9,
            1,
            Arc::new(move |x: &DVector<f64>, vs: &[DVector<f64>]| {
                let q = GroupElement::from_flat(&GroupId::SO3, x);
                let (z, _) = lie::log_derivative(&q, &vs[0]);
                mu_form.dot(z.coords())
            }),
        );
        let z = AlgebraElement::from_coords(&GroupId::SO3, DVector::from_vec(vec![0.5, 0.2, -0.8]))
            .unwrap();
        let q0 = AlgebraElement::from_coords(&GroupId::SO3, DVector::from_vec(vec![-0.3, 0.9, 0.1]))
            .unwrap()
            .exp();
        let zc = z.clone();
        let plot = Plot::new(
            "invariant-curve",
            "group(SO3)",
            9,
            vec![(-1.0, 1.0)],
            Arc::new(move |u: &DVector<f64>| {
                zc.scale(u[0]).exp().multiply(&q0).unwrap().flatten()
            }),
        );
        let pulled = pullback(&form, &plot, 1e-5).unwrap();
        let expected = mu.dot(z.coords());
        let dt = DVector::from_vec(vec![1.0]);
        for k in 0..7 {
            let t = -0.9 + 0.3 * k as f64;
            let got = pulled
                .eval(&DVector::from_vec(vec![t]), std::slice::from_ref(&dt))
                .unwrap();
            assert_abs_diff_eq!(got, expected, epsilon = 1e-7);
        }
    }

    #[test]
    fn pullback_checks_the_space_tag() {
        let form = KForm::new("x dx", "line-a", 1, 1, Arc::new(|_: &DVector<f64>, _: &[DVector<f64>]| 0.0));
        let plot = Plot::new(
            "into-b",
            "line-b",
            1,
            vec![(0.0, 1.0)],
            Arc::new(|u: &DVector<f64>| u.clone()),
        );
        assert!(matches!(
            pullback(&form, &plot, 1e-5),
            Err(CalcError::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn exterior_derivative_of_u1_du2() {
        let alpha = DomainForm::new(
            "u1 du2",
            2,
            vec![(-1.0, 1.0), (-1.0, 1.0)],
            1,
            Arc::new(|u: &DVector<f64>, vs: &[DVector<f64>]| Ok(u[0] * vs[0][1])),
        );
        let d_alpha = domain_exterior_derivative(&alpha, 1e-4);
        let u = DVector::from_vec(vec![0.3, -0.2]);
        let v = DVector::from_vec(vec![1.0, 0.5]);
        let w = DVector::from_vec(vec![-0.3, 2.0]);
        let got = d_alpha.eval(&u, &[v.clone(), w.clone()]).unwrap();
        // du1 ∧ du2 (v, w) = v1 w2 − w1 v2
        let expected = v[0] * w[1] - w[0] * v[1];
        assert_abs_diff_eq!(got, expected, epsilon = 1e-9);
    }

    #[test]
    fn pullback_is_functorial_under_affine_reparametrization() {
        let (plot, _, _) = so3_plot_two_generators();
        let mu = DVector::from_vec(vec![-0.4, 0.6, 1.1]);
        let form = KForm::new(
            "right-invariant",
            "group(SO3)",
            9,
            1,
            Arc::new(move |x: &DVector<f64>, vs: &[DVector<f64>]| {
                let q = GroupElement::from_flat(&GroupId::SO3, x);
                let (z, _) = lie::log_derivative(&q, &vs[0]);
                mu.dot(z.coords())
            }),
        );
        // s ↦ 0.5 s − 0.2 maps [−1, 1] into [−0.7, 0.3].
        let a = DMatrix::from_vec(1, 1, vec![0.5]);
        let b = DVector::from_vec(vec![-0.2]);
        let reparam = plot.precompose_affine("reparam", a.clone(), b.clone(), vec![(-1.0, 1.0)]);
        let direct = pullback(&form, &reparam, 1e-5).unwrap();
        let staged = pullback(&form, &plot, 1e-5).unwrap();
        let mut rng = rng::stream(9, &["calculus", "functorial"]);
        for _ in 0..20 {
            let s = DVector::from_vec(vec![rng::uniform(&mut rng, -0.8, 0.8)]);
            let ds = DVector::from_vec(vec![rng::normal(&mut rng)]);
            let lhs = direct.eval(&s, std::slice::from_ref(&ds)).unwrap();
            let rhs = staged
                .eval(&(&a * &s + &b), &[&a * &ds])
                .unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-7);
        }
    }

    #[test]
    fn forms_are_antisymmetric_by_construction() {
        // Deliberately non-antisymmetric closure.
        let form = KForm::new(
            "raw",
            "R3",
            3,
            2,
            Arc::new(|_: &DVector<f64>, vs: &[DVector<f64>]| vs[0][0] * vs[1][1]),
        );
        let x = DVector::zeros(3);
        let v = DVector::from_vec(vec![1.0, 2.0, 0.0]);
        let w = DVector::from_vec(vec![-0.5, 0.7, 0.0]);
        let vw = form.eval(&x, &[v.clone(), w.clone()]);
        let wv = form.eval(&x, &[w, v]);
        assert_abs_diff_eq!(vw, -wv, epsilon = 1e-15);
    }

    #[test]
    fn sampled_equality_accepts_equal_and_rejects_perturbed() {
        let alpha = DomainForm::new(
            "alpha",
            2,
            vec![(-1.0, 1.0), (-1.0, 1.0)],
            1,
            Arc::new(|u: &DVector<f64>, vs: &[DVector<f64>]| {
                Ok(u[0] * vs[0][1] - u[1] * vs[0][0])
            }),
        );
        let same = DomainForm::new(
            "same",
            2,
            vec![(-1.0, 1.0), (-1.0, 1.0)],
            1,
            Arc::new(|u: &DVector<f64>, vs: &[DVector<f64>]| {
                Ok(u[0] * vs[0][1] - u[1] * vs[0][0])
            }),
        );
        let shifted = DomainForm::new(
            "shifted",
            2,
            vec![(-1.0, 1.0), (-1.0, 1.0)],
            1,
            Arc::new(|u: &DVector<f64>, vs: &[DVector<f64>]| {
                Ok(u[0] * vs[0][1] - u[1] * vs[0][0] + 0.01 * vs[0][0])
            }),
        );
        let cfg = EqualityConfig::new(42, "unit-test");
        let good = forms_equal_on_samples(&alpha, &same, &cfg).unwrap();
        assert!(good.is_pass(), "{:?}", good);
        let bad = forms_equal_on_samples(&alpha, &shifted, &cfg).unwrap();
        assert_eq!(bad.verdict, crate::report::Verdict::Fail);
        assert!(bad.witness.is_some());
    }

    #[test]
    fn combine_mismatched_arities_errors() {
        let one = KForm::new("a", "R2", 2, 1, Arc::new(|_: &DVector<f64>, _: &[DVector<f64>]| 0.0));
        let two = KForm::new("b", "R2", 2, 2, Arc::new(|_: &DVector<f64>, _: &[DVector<f64>]| 0.0));
        assert!(matches!(
            one.combine(1.0, &two, 1.0),
            Err(CalcError::ArityMismatch { .. })
        ));
    }
}
