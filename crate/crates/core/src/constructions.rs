//! Constructions that assemble new Hamiltonian data out of catalog pieces.
//!
//! Everything here follows the sign conventions of [`crate::spaces`]: the
//! moment condition reads `ω(ξ_X(x), v) + D_v⟨Φ(·), ξ⟩ = 0`, so negating a
//! symplectic form negates its moment map.  The constructions:
//!
//! * [`dual`] — same carrier and action, `ω ↦ -ω` and `Φ ↦ -Φ`;
//! * [`hom_data`] — the product carrier with the diagonal action,
//!   `ω = ω₂ - ω₁` and `Φ = Φ₂ - Φ₁`; its zero moment level pairs points
//!   whose moments agree, which is the raw material for graph/level
//!   comparisons between two spaces over the same group;
//! * [`cotangent_group`] — `T*G` for a catalog group in the right
//!   trivialization `(q, μ)`: the invariant 1-form is
//!   `ϖ(δq, δμ) = ⟨μ, δq·q⁻¹⟩` and its exterior derivative has the closed
//!   form `dϖ(V, W) = ⟨δμ_V, Z_W⟩ - ⟨δμ_W, Z_V⟩ + ⟨μ, [Z_V, Z_W]⟩` with
//!   `Z = δq·q⁻¹`.  The left `G`-action `(q, μ) ↦ (gq, Ad*_g μ)` has moment
//!   `φ(q, μ) = μ`; the right action of a subgroup `H ≤ G`,
//!   `(q, μ) ↦ (qh⁻¹, μ)`, has moment `ψ(q, μ) = -(Ad*_{q⁻¹} μ)|_𝔥`;
//! * [`induction_data`] — given a `G`-space `X` and an `H`-space `Y`, the
//!   big product `M = X⁻ × T*G × Y` carrying `G × H` and the small product
//!   `N = X⁻ × Y` carrying `H`, with moments
//!   `φ_M = μ - Φ_X`, `ψ_M = Ψ_Y - (Ad*_{q⁻¹}μ)|_𝔥` and
//!   `ψ_N = Ψ_Y - Φ_X|_𝔥`.  Reduction of `M` at zero is the induction
//!   model whose levels the reciprocity maps compare;
//! * [`SymPower`] / [`fusion_power`] — the `ℓ`-th symmetric power of `C³`
//!   in the weighted monomial basis `η_k = √(ℓ!/k!) ξ^k`, together with the
//!   rotation action, its exact infinitesimal generator, the Laplacian
//!   contraction, and the embedded carrier of `ℓ`-th powers of isotropic
//!   unit vectors (phase circle included): the fusion power of the frame
//!   circle bundle;
//! * [`prequantum_product`] — the gauge product `X̃₁⁻ ⊠ X̃₂` modelled
//!   un-quotiented: product carrier, 1-form `ϖ₂ - ϖ₁`, the diagonal circle
//!   as null gauge direction and the second-factor circle as the residual
//!   contact direction, plus chart-based gauge normalization;
//! * [`symplectize`] — `R × X̃` with `ω = d(e^s ϖ)` and moment `e^s Φ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

use crate::calculus::{CalcError, EmbeddedSpace, FormFn, KForm, PointFn, SampleFn};
use crate::lie::{
    self, CoalgebraElement, GroupElement, GroupId, LieError, Subgroup,
};
use crate::spaces::{random_frame, ActionFn, CircleActionFn, HamiltonianSpace, MomentFn, PrequantumSpace};

/// Modulus below which a designated gauge coordinate is considered unusable.
pub const CHART_FLOOR: f64 = 1e-3;

/// Errors raised while assembling or normalizing constructed spaces.
#[derive(Debug, Error)]
pub enum ConsError {
    /// Every designated complex coordinate had modulus below the chart floor.
    #[error("gauge chart miss: all designated coordinates have modulus < {limit:e}")]
    GaugeChartMiss { limit: f64 },
    /// Two factors are acted on by different subgroups.
    #[error("acting groups do not line up: {left} vs {right}")]
    ActingMismatch { left: String, right: String },
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

// ---------------------------------------------------------------------------
// Small vector/form helpers shared by the product constructions
// ---------------------------------------------------------------------------

pub(crate) fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

pub(crate) fn concat3(a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
    concat(&concat(a, b), c)
}

/// View a form living on a factor through a coordinate window of a product
/// ambient space.  The exact exterior derivative is carried along when the
/// factor form has one.
pub fn window_form(
    form: &KForm,
    offset: usize,
    len: usize,
    total: usize,
    space: impl Into<String>,
) -> KForm {
    assert_eq!(form.ambient_dim(), len, "window does not fit the factor form");
    let name = format!("{}@[{}..{}]", form.name(), offset, offset + len);
    let arity = form.arity();
    let inner = form.clone();
    let exact = form.exact_d();
    let raw: FormFn = Arc::new(move |x, vs| {
        let xs = x.rows(offset, len).into_owned();
        let vss: Vec<DVector<f64>> = vs
            .iter()
            .map(|v| v.rows(offset, len).into_owned())
            .collect();
        inner.eval(&xs, &vss)
    });
    let mut out = KForm::new(name, space, total, arity, raw);
    if let Some(d) = exact {
        out = out.with_exact_d(Arc::new(move |x, vs| {
            let xs = x.rows(offset, len).into_owned();
            let vss: Vec<DVector<f64>> = vs
                .iter()
                .map(|v| v.rows(offset, len).into_owned())
                .collect();
            d.eval(&xs, &vss)
        }));
    }
    out
}

// ---------------------------------------------------------------------------
// Duals and hom data
// ---------------------------------------------------------------------------

/// The opposite space: same carrier and action, `ω ↦ -ω`, `Φ ↦ -Φ`.
/// An involution up to naming.
pub fn dual(space: &HamiltonianSpace) -> HamiltonianSpace {
    let name = format!("dual({})", space.name());
    let omega = space.omega().scaled(format!("omega[{name}]"), -1.0);
    let moment = space.moment_fn().clone();
    let neg: MomentFn = Arc::new(move |x| -moment(x));
    HamiltonianSpace::new(
        name,
        space.carrier().clone(),
        space.acting().clone(),
        space.action().clone(),
        omega,
        neg,
    )
}

/// The product `X₁ × X₂` with the diagonal action, `ω = ω₂ - ω₁` and moment
/// `Φ₂ - Φ₁`.  Both factors must be acted on by the same subgroup so the
/// moment coordinates subtract meaningfully.
pub fn hom_data(
    x1: &HamiltonianSpace,
    x2: &HamiltonianSpace,
) -> Result<HamiltonianSpace, ConsError> {
    if x1.acting().label() != x2.acting().label()
        || x1.acting().ambient() != x2.acting().ambient()
    {
        return Err(ConsError::ActingMismatch {
            left: x1.acting().label().to_string(),
            right: x2.acting().label().to_string(),
        });
    }
    let (n1, n2) = (x1.carrier().ambient_dim(), x2.carrier().ambient_dim());
    let total = n1 + n2;
    let name = format!("hom({}, {})", x1.name(), x2.name());
    let carrier = EmbeddedSpace::product(name.clone(), x1.carrier(), x2.carrier());
    let w1 = window_form(x1.omega(), 0, n1, total, name.clone());
    let w2 = window_form(x2.omega(), n1, n2, total, name.clone());
    let omega = w2
        .combine(1.0, &w1, -1.0)?
        .renamed(format!("omega[{name}]"));
    let (a1, a2) = (x1.action().clone(), x2.action().clone());
    let action: ActionFn = Arc::new(move |g, x| {
        concat(
            &a1(g, &x.rows(0, n1).into_owned()),
            &a2(g, &x.rows(n1, n2).into_owned()),
        )
    });
    let (m1, m2) = (x1.moment_fn().clone(), x2.moment_fn().clone());
    let moment: MomentFn = Arc::new(move |x| {
        m2(&x.rows(n1, n2).into_owned()) - m1(&x.rows(0, n1).into_owned())
    });
    Ok(HamiltonianSpace::new(
        name,
        carrier,
        x1.acting().clone(),
        action,
        omega,
        moment,
    ))
}

// ---------------------------------------------------------------------------
// Cotangent bundles of catalog groups
// ---------------------------------------------------------------------------

/// `T*G` in the right trivialization.  Points are stored as the flattened
/// group element followed by coalgebra coordinates `μ`.
#[derive(Clone)]
pub struct CotangentGroup {
    group: GroupId,
    gamb: usize,
    gdim: usize,
    carrier: EmbeddedSpace,
    varpi: KForm,
    omega: KForm,
    left: HamiltonianSpace,
}

impl std::fmt::Debug for CotangentGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CotangentGroup")
            .field("group", &self.group)
            .finish()
    }
}

/// Build `T*G` with its invariant 1-form, closed-form `dϖ`, and the left
/// `G`-action with moment `φ(q, μ) = μ`.
pub fn cotangent_group(group: &GroupId) -> CotangentGroup {
    let gamb = group.ambient_dim();
    let gdim = group.dim();
    let total = gamb + gdim;
    let name = format!("T*({group})");

    let gman = EmbeddedSpace::group_manifold(group);
    let fiber = EmbeddedSpace::euclidean("fiber", gdim);
    let carrier = EmbeddedSpace::product(name.clone(), &gman, &fiber);

    let g1 = group.clone();
    let varpi_eval: FormFn = Arc::new(move |x, vs| {
        let q = GroupElement::from_flat(&g1, &x.rows(0, gamb).into_owned());
        let (z, _) = lie::log_derivative(&q, &vs[0].rows(0, gamb).into_owned());
        x.rows(gamb, gdim).into_owned().dot(z.coords())
    });
    let g2 = group.clone();
    let varpi_d: FormFn = Arc::new(move |x, vs| {
        let q = GroupElement::from_flat(&g2, &x.rows(0, gamb).into_owned());
        let mu = x.rows(gamb, gdim).into_owned();
        let (zv, _) = lie::log_derivative(&q, &vs[0].rows(0, gamb).into_owned());
        let (zw, _) = lie::log_derivative(&q, &vs[1].rows(0, gamb).into_owned());
        let dmv = vs[0].rows(gamb, gdim).into_owned();
        let dmw = vs[1].rows(gamb, gdim).into_owned();
        let br = lie::bracket(&zv, &zw).expect("brackets in one group");
        dmv.dot(zw.coords()) - dmw.dot(zv.coords()) + mu.dot(br.coords())
    });
    let varpi = KForm::new(format!("liouville[{name}]"), name.clone(), total, 1, varpi_eval)
        .with_exact_d(varpi_d);
    let omega = varpi
        .exact_d()
        .expect("exterior derivative is attached")
        .renamed(format!("omega[{name}]"))
        .with_exact_d(Arc::new(|_, _| 0.0));

    let g3 = group.clone();
    let action: ActionFn = Arc::new(move |g, x| {
        let q = GroupElement::from_flat(&g3, &x.rows(0, gamb).into_owned());
        let mu = CoalgebraElement::from_coords(&g3, x.rows(gamb, gdim).into_owned())
            .expect("fiber coordinates");
        let q2 = g.multiply(&q).expect("left translation");
        let mu2 = lie::coadjoint(g, &mu).expect("coadjoint transport");
        concat(&q2.flatten(), mu2.coords())
    });
    let phi: MomentFn = Arc::new(move |x| x.rows(gamb, gdim).into_owned());
    let left = HamiltonianSpace::new(
        name,
        carrier.clone(),
        Subgroup::full(group.clone()),
        action,
        omega.clone(),
        phi,
    );

    CotangentGroup {
        group: group.clone(),
        gamb,
        gdim,
        carrier,
        varpi,
        omega,
        left,
    }
}

impl CotangentGroup {
    pub fn group(&self) -> &GroupId {
        &self.group
    }

    pub fn carrier(&self) -> &EmbeddedSpace {
        &self.carrier
    }

    /// The invariant 1-form `ϖ(δq, δμ) = ⟨μ, δq·q⁻¹⟩`, exact `dϖ` attached.
    pub fn varpi(&self) -> &KForm {
        &self.varpi
    }

    /// `dϖ` under its own name, with the (zero) exterior derivative attached.
    pub fn omega(&self) -> &KForm {
        &self.omega
    }

    /// Left translation `(q, μ) ↦ (gq, Ad*_g μ)` with moment `φ(q, μ) = μ`.
    pub fn left_space(&self) -> &HamiltonianSpace {
        &self.left
    }

    pub fn point(&self, q: &GroupElement, mu: &DVector<f64>) -> DVector<f64> {
        assert_eq!(mu.len(), self.gdim, "coalgebra coordinate count");
        concat(&q.flatten(), mu)
    }

    pub fn split(&self, x: &DVector<f64>) -> (GroupElement, DVector<f64>) {
        (
            GroupElement::from_flat(&self.group, &x.rows(0, self.gamb).into_owned()),
            x.rows(self.gamb, self.gdim).into_owned(),
        )
    }

    /// Moment of the left action: the fiber coordinate itself.
    pub fn phi(&self, x: &DVector<f64>) -> DVector<f64> {
        x.rows(self.gamb, self.gdim).into_owned()
    }

    /// Moment of the right `H`-action `(q, μ) ↦ (qh⁻¹, μ)`:
    /// `ψ(q, μ) = -(Ad*_{q⁻¹} μ)|_𝔥`.
    pub fn psi(&self, h: &Subgroup, x: &DVector<f64>) -> Result<DVector<f64>, ConsError> {
        let (q, mu_vec) = self.split(x);
        let mu = CoalgebraElement::from_coords(&self.group, mu_vec)?;
        let ad = lie::coadjoint(&q.inverse(), &mu)?;
        Ok(-h.restrict(&ad)?)
    }

    /// The combined `G × H` structure on the same carrier: `(g, h)` sends
    /// `(q, μ)` to `(g q h⁻¹, Ad*_g μ)`, with moment `(φ, ψ)`.
    pub fn two_sided(&self, h: &Subgroup) -> Result<HamiltonianSpace, ConsError> {
        let pair = Subgroup::pair_with_full(self.group.clone(), h)?;
        let (gamb, gdim) = (self.gamb, self.gdim);
        let g1 = self.group.clone();
        let action: ActionFn = Arc::new(move |e, x| {
            let (g, hh) = e.split().expect("product element");
            let q = GroupElement::from_flat(&g1, &x.rows(0, gamb).into_owned());
            let mu = CoalgebraElement::from_coords(&g1, x.rows(gamb, gdim).into_owned())
                .expect("fiber coordinates");
            let q2 = g
                .multiply(&q)
                .expect("left translation")
                .multiply(&hh.inverse())
                .expect("right translation");
            let mu2 = lie::coadjoint(&g, &mu).expect("coadjoint transport");
            concat(&q2.flatten(), mu2.coords())
        });
        let g2 = self.group.clone();
        let hsub = h.clone();
        let hdim = h.dim();
        let moment: MomentFn = Arc::new(move |x| {
            let q = GroupElement::from_flat(&g2, &x.rows(0, gamb).into_owned());
            let mu_vec = x.rows(gamb, gdim).into_owned();
            let mu = CoalgebraElement::from_coords(&g2, mu_vec.clone())
                .expect("fiber coordinates");
            let ad = lie::coadjoint(&q.inverse(), &mu).expect("coadjoint transport");
            let psi = -hsub.restrict(&ad).expect("subalgebra restriction");
            let mut out = DVector::zeros(gdim + hdim);
            out.rows_mut(0, gdim).copy_from(&mu_vec);
            out.rows_mut(gdim, hdim).copy_from(&psi);
            out
        });
        Ok(HamiltonianSpace::new(
            format!("T*({})~{}", self.group, h.label()),
            self.carrier.clone(),
            pair,
            action,
            self.omega.clone(),
            moment,
        ))
    }
}

// ---------------------------------------------------------------------------
// Induction data
// ---------------------------------------------------------------------------

/// The two product spaces whose reductions the reciprocity maps compare:
/// `M = X⁻ × T*G × Y` with the `G × H` action and `N = X⁻ × Y` with `H`.
#[derive(Clone)]
pub struct InductionData {
    group: GroupId,
    h: Subgroup,
    x: HamiltonianSpace,
    y: HamiltonianSpace,
    tstar: CotangentGroup,
    m: HamiltonianSpace,
    n: HamiltonianSpace,
    nx: usize,
    gamb: usize,
    gdim: usize,
    ny: usize,
}

impl std::fmt::Debug for InductionData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InductionData")
            .field("m", &self.m.name())
            .field("n", &self.n.name())
            .finish()
    }
}

/// Assemble induction data from a `G`-space `X` and an `H`-space `Y`.
///
/// `X` must carry the full catalog group; `Y` must carry exactly the
/// subgroup `h` (same label, same ambient group), so that its moment
/// coordinates live on the dual of `𝔥`.
pub fn induction_data(
    x: &HamiltonianSpace,
    y: &HamiltonianSpace,
    h: &Subgroup,
) -> Result<InductionData, ConsError> {
    let group = x.acting().ambient().clone();
    if x.acting().dim() != group.dim() {
        return Err(ConsError::ActingMismatch {
            left: x.acting().label().to_string(),
            right: format!("full {group}"),
        });
    }
    if h.ambient() != &group || y.acting().ambient() != &group || y.acting().label() != h.label()
    {
        return Err(ConsError::ActingMismatch {
            left: y.acting().label().to_string(),
            right: h.label().to_string(),
        });
    }

    let tstar = cotangent_group(&group);
    let nx = x.carrier().ambient_dim();
    let (gamb, gdim) = (group.ambient_dim(), group.dim());
    let nt = gamb + gdim;
    let ny = y.carrier().ambient_dim();
    let hdim = h.dim();

    // M = X⁻ × T*G × Y with (g, h)·(x, (q, μ), y) = (gx, (gqh⁻¹, Ad*_g μ), hy)
    let m_name = format!("M[{} | {}]", x.name(), y.name());
    let left2 = EmbeddedSpace::product(format!("{}*T", x.name()), x.carrier(), tstar.carrier());
    let m_carrier = EmbeddedSpace::product(m_name.clone(), &left2, y.carrier());
    let m_total = nx + nt + ny;
    let wx = window_form(x.omega(), 0, nx, m_total, m_name.clone());
    let wt = window_form(tstar.omega(), nx, nt, m_total, m_name.clone());
    let wy = window_form(y.omega(), nx + nt, ny, m_total, m_name.clone());
    let m_omega = wt
        .combine(1.0, &wy, 1.0)?
        .combine(1.0, &wx, -1.0)?
        .renamed(format!("omega[{m_name}]"));

    let pair = Subgroup::pair_with_full(group.clone(), h)?;
    let (ax, ay) = (x.action().clone(), y.action().clone());
    let g1 = group.clone();
    let m_action: ActionFn = Arc::new(move |e, xx| {
        let (g, hh) = e.split().expect("product element");
        let xp = ax(&g, &xx.rows(0, nx).into_owned());
        let q = GroupElement::from_flat(&g1, &xx.rows(nx, gamb).into_owned());
        let mu = CoalgebraElement::from_coords(&g1, xx.rows(nx + gamb, gdim).into_owned())
            .expect("fiber coordinates");
        let q2 = g
            .multiply(&q)
            .expect("left translation")
            .multiply(&hh.inverse())
            .expect("right translation");
        let mu2 = lie::coadjoint(&g, &mu).expect("coadjoint transport");
        let yp = ay(&hh, &xx.rows(nx + nt, ny).into_owned());
        concat3(&xp, &concat(&q2.flatten(), mu2.coords()), &yp)
    });

    let (mx, my) = (x.moment_fn().clone(), y.moment_fn().clone());
    let g2 = group.clone();
    let h2 = h.clone();
    let m_moment: MomentFn = Arc::new(move |xx| {
        let phix = mx(&xx.rows(0, nx).into_owned());
        let q = GroupElement::from_flat(&g2, &xx.rows(nx, gamb).into_owned());
        let mu_vec = xx.rows(nx + gamb, gdim).into_owned();
        let mu = CoalgebraElement::from_coords(&g2, mu_vec.clone()).expect("fiber coordinates");
        let ad = lie::coadjoint(&q.inverse(), &mu).expect("coadjoint transport");
        let psit = -h2.restrict(&ad).expect("subalgebra restriction");
        let psiy = my(&xx.rows(nx + nt, ny).into_owned());
        let mut out = DVector::zeros(gdim + hdim);
        out.rows_mut(0, gdim).copy_from(&(mu_vec - phix));
        out.rows_mut(gdim, hdim).copy_from(&(psiy + psit));
        out
    });
    let m = HamiltonianSpace::new(m_name, m_carrier, pair, m_action, m_omega, m_moment);

    // N = X⁻ × Y with the restricted diagonal H-action
    let n_name = format!("N[{} | {}]", x.name(), y.name());
    let n_carrier = EmbeddedSpace::product(n_name.clone(), x.carrier(), y.carrier());
    let n_total = nx + ny;
    let wxn = window_form(x.omega(), 0, nx, n_total, n_name.clone());
    let wyn = window_form(y.omega(), nx, ny, n_total, n_name.clone());
    let n_omega = wyn
        .combine(1.0, &wxn, -1.0)?
        .renamed(format!("omega[{n_name}]"));
    let (ax2, ay2) = (x.action().clone(), y.action().clone());
    let n_action: ActionFn = Arc::new(move |hh, xx| {
        concat(
            &ax2(hh, &xx.rows(0, nx).into_owned()),
            &ay2(hh, &xx.rows(nx, ny).into_owned()),
        )
    });
    let (mx2, my2) = (x.moment_fn().clone(), y.moment_fn().clone());
    let basis = h.basis().clone();
    let n_moment: MomentFn = Arc::new(move |xx| {
        my2(&xx.rows(nx, ny).into_owned())
            - basis.transpose() * mx2(&xx.rows(0, nx).into_owned())
    });
    let n = HamiltonianSpace::new(n_name, n_carrier, h.clone(), n_action, n_omega, n_moment);

    Ok(InductionData {
        group,
        h: h.clone(),
        x: x.clone(),
        y: y.clone(),
        tstar,
        m,
        n,
        nx,
        gamb,
        gdim,
        ny,
    })
}

impl InductionData {
    pub fn group(&self) -> &GroupId {
        &self.group
    }

    pub fn h(&self) -> &Subgroup {
        &self.h
    }

    pub fn x(&self) -> &HamiltonianSpace {
        &self.x
    }

    pub fn y(&self) -> &HamiltonianSpace {
        &self.y
    }

    pub fn tstar(&self) -> &CotangentGroup {
        &self.tstar
    }

    /// `M = X⁻ × T*G × Y` with the `G × H` action.
    pub fn m(&self) -> &HamiltonianSpace {
        &self.m
    }

    /// `N = X⁻ × Y` with the `H` action.
    pub fn n(&self) -> &HamiltonianSpace {
        &self.n
    }

    pub fn m_point(
        &self,
        x: &DVector<f64>,
        q: &GroupElement,
        mu: &DVector<f64>,
        y: &DVector<f64>,
    ) -> DVector<f64> {
        assert_eq!(x.len(), self.nx);
        assert_eq!(y.len(), self.ny);
        concat3(x, &self.tstar.point(q, mu), y)
    }

    pub fn split_m(
        &self,
        m: &DVector<f64>,
    ) -> (DVector<f64>, GroupElement, DVector<f64>, DVector<f64>) {
        let x = m.rows(0, self.nx).into_owned();
        let q = GroupElement::from_flat(&self.group, &m.rows(self.nx, self.gamb).into_owned());
        let mu = m.rows(self.nx + self.gamb, self.gdim).into_owned();
        let y = m
            .rows(self.nx + self.gamb + self.gdim, self.ny)
            .into_owned();
        (x, q, mu, y)
    }

    pub fn n_point(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.nx);
        assert_eq!(y.len(), self.ny);
        concat(x, y)
    }

    pub fn split_n(&self, n: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (
            n.rows(0, self.nx).into_owned(),
            n.rows(self.nx, self.ny).into_owned(),
        )
    }

    /// `φ_M(x, (q, μ), y) = μ - Φ_X(x)`, the `G`-part of the `M` moment.
    pub fn phi_m(&self, m: &DVector<f64>) -> DVector<f64> {
        self.m.moment(m).rows(0, self.gdim).into_owned()
    }

    /// `ψ_M(x, (q, μ), y) = Ψ_Y(y) - (Ad*_{q⁻¹}μ)|_𝔥`, the `H`-part.
    pub fn psi_m(&self, m: &DVector<f64>) -> DVector<f64> {
        self.m
            .moment(m)
            .rows(self.gdim, self.h.dim())
            .into_owned()
    }

    /// `ψ_N(x, y) = Ψ_Y(y) - Φ_X(x)|_𝔥`.
    pub fn psi_n(&self, n: &DVector<f64>) -> DVector<f64> {
        self.n.moment(n)
    }
}

// ---------------------------------------------------------------------------
// Symmetric powers of C³
// ---------------------------------------------------------------------------

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn mono_count(deg: usize) -> usize {
    (deg + 1) * (deg + 2) / 2
}

/// Position of the exponent triple `k` (with `|k| = deg`) in descending
/// lexicographic order.
fn mono_position(deg: usize, k: [usize; 3]) -> usize {
    let m = deg - k[0];
    m * (m + 1) / 2 + (m - k[1])
}

fn multi_indices(deg: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(mono_count(deg));
    for k1 in (0..=deg).rev() {
        for k2 in (0..=deg - k1).rev() {
            out.push([k1, k2, deg - k1 - k2]);
        }
    }
    out
}

/// Multiply a homogeneous polynomial of degree `deg` by a linear form.
fn mul_linear(coeffs: &[f64], deg: usize, lin: &[f64; 3]) -> Vec<f64> {
    let indices = multi_indices(deg);
    let mut out = vec![0.0; mono_count(deg + 1)];
    for (pos, k) in indices.iter().enumerate() {
        let c = coeffs[pos];
        if c == 0.0 {
            continue;
        }
        for (m, l) in lin.iter().enumerate() {
            let mut t = *k;
            t[m] += 1;
            out[mono_position(deg + 1, t)] += c * l;
        }
    }
    out
}

/// The `ℓ`-th symmetric power of `C³` in the weighted monomial basis.
///
/// A degree-`ℓ` polynomial `Q(w) = Σ_k c_k w^k` is stored by the coordinates
/// `η_k = c_k / w_k` with `w_k = √(ℓ!/(k₁!k₂!k₃!))`; in these coordinates
/// rotations act orthogonally and the `ℓ`-th power of a unit vector is a
/// unit vector.  Real carriers pack `η` as `[re; im]`.
#[derive(Clone, Debug)]
pub struct SymPower {
    ell: usize,
    dim: usize,
    indices: Vec<[usize; 3]>,
    weights: Vec<f64>,
}

impl SymPower {
    pub fn new(ell: usize) -> Self {
        let indices = multi_indices(ell);
        let dim = indices.len();
        let fl = factorial(ell);
        let weights = indices
            .iter()
            .map(|k| {
                let denom = factorial(k[0]) * factorial(k[1]) * factorial(k[2]);
                ((fl / denom) as f64).sqrt()
            })
            .collect();
        SymPower {
            ell,
            dim,
            indices,
            weights,
        }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Complex dimension `(ℓ+1)(ℓ+2)/2`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[[usize; 3]] {
        &self.indices
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    fn position(&self, k: [usize; 3]) -> usize {
        mono_position(self.ell, k)
    }

    /// Real matrix of the substitution action `Q ↦ Q(gᵀ·)` in the weighted
    /// basis.  Orthogonal for rotations, and a group homomorphism.
    pub fn action_matrix(&self, g: &Matrix3<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut s = DMatrix::zeros(d, d);
        for j in 0..d {
            let k = self.indices[j];
            let mut deg = 0usize;
            let mut coeffs = vec![1.0f64];
            for i in 0..3 {
                let lin = [g[(0, i)], g[(1, i)], g[(2, i)]];
                for _ in 0..k[i] {
                    coeffs = mul_linear(&coeffs, deg, &lin);
                    deg += 1;
                }
            }
            debug_assert_eq!(deg, self.ell);
            for (r, kr) in self.indices.iter().enumerate() {
                s[(r, j)] = self.weights[j] * coeffs[mono_position(self.ell, *kr)]
                    / self.weights[r];
            }
        }
        s
    }

    /// Exact infinitesimal substitution action: the derivative of
    /// [`SymPower::action_matrix`] along `exp(tA)` at `t = 0`, assembled
    /// combinatorially rather than by differencing.
    pub fn algebra_action(&self, a: &Matrix3<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut out = DMatrix::zeros(d, d);
        for (j, k) in self.indices.iter().enumerate() {
            for i in 0..3 {
                if k[i] == 0 {
                    continue;
                }
                for m in 0..3 {
                    let mut t = *k;
                    t[i] -= 1;
                    t[m] += 1;
                    let r = self.position(t);
                    out[(r, j)] +=
                        self.weights[j] / self.weights[r] * k[i] as f64 * a[(m, i)];
                }
            }
        }
        out
    }

    /// Coefficient matrix of the Laplacian `Σ ∂ᵢ²` from degree `ℓ` to
    /// degree `ℓ-2`, in weighted coordinates on both sides.
    pub fn laplacian(&self, target: &SymPower) -> DMatrix<f64> {
        assert_eq!(target.ell + 2, self.ell, "laplacian drops the degree by two");
        let mut l = DMatrix::zeros(target.dim, self.dim);
        for (j, k) in self.indices.iter().enumerate() {
            for i in 0..3 {
                if k[i] < 2 {
                    continue;
                }
                let mut t = *k;
                t[i] -= 2;
                let r = target.position(t);
                l[(r, j)] +=
                    self.weights[j] / target.weights[r] * (k[i] * (k[i] - 1)) as f64;
            }
        }
        l
    }

    /// Raw polynomial coefficients `c_k = w_k η_k` from packed `[re; im]`.
    pub fn raw_coefficients(&self, x: &DVector<f64>) -> Vec<Complex64> {
        assert_eq!(x.len(), 2 * self.dim);
        (0..self.dim)
            .map(|i| Complex64::new(x[i], x[self.dim + i]) * self.weights[i])
            .collect()
    }

    /// The flattening `F[i][k'] = c_{k'+eᵢ} (k'ᵢ + 1)` of the partial
    /// derivatives `∂ᵢQ` over the degree-`ℓ-1` monomials.  Rank one exactly
    /// on powers of a single linear form.
    pub fn partial_flattening(
        &self,
        target: &SymPower,
        x: &DVector<f64>,
    ) -> DMatrix<Complex64> {
        assert_eq!(target.ell + 1, self.ell, "partials drop the degree by one");
        let c = self.raw_coefficients(x);
        let mut f = DMatrix::<Complex64>::zeros(3, target.dim);
        for (col, kp) in target.indices.iter().enumerate() {
            for i in 0..3 {
                let mut k = *kp;
                k[i] += 1;
                f[(i, col)] = c[self.position(k)] * (kp[i] + 1) as f64;
            }
        }
        f
    }

    /// Packed `[re; im]` coordinates of the `ℓ`-th power of `ξ = a + ib`.
    pub fn power(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> DVector<f64> {
        let xi = [
            Complex64::new(a[0], b[0]),
            Complex64::new(a[1], b[1]),
            Complex64::new(a[2], b[2]),
        ];
        let mut out = DVector::zeros(2 * self.dim);
        for (i, k) in self.indices.iter().enumerate() {
            let mut z = Complex64::new(self.weights[i], 0.0);
            for (c, &count) in k.iter().enumerate() {
                for _ in 0..count {
                    z *= xi[c];
                }
            }
            out[i] = z.re;
            out[self.dim + i] = z.im;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Fusion powers of the frame circle bundle
// ---------------------------------------------------------------------------

/// The embedded carrier of `ℓ`-th powers of isotropic unit vectors in the
/// symmetric power, with its phase circle, rotation action, invariant
/// 1-form and closed-form moment.
pub struct FusionPower {
    ell: usize,
    sym: SymPower,
    space: PrequantumSpace,
    moment: MomentFn,
}

impl std::fmt::Debug for FusionPower {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FusionPower").field("ell", &self.ell).finish()
    }
}

/// Build the `ℓ`-th fusion power.  For `ℓ = 1` this is the frame circle
/// bundle itself in complex coordinates `ξ = a + ib`; for `ℓ ≥ 2` the
/// carrier is cut out inside the symmetric power by the rank-one condition
/// on the partial-derivative flattening, harmonicity, and unit norm.
pub fn fusion_power(ell: usize) -> FusionPower {
    assert!(ell >= 1, "fusion powers start at ℓ = 1");
    let sym = SymPower::new(ell);
    let d = sym.dim();
    let ambient = 2 * d;
    let name = format!("fusion({ell})");

    let constraint: PointFn = if ell == 1 {
        Arc::new(|x: &DVector<f64>| {
            let a = x.rows(0, 3);
            let b = x.rows(3, 3);
            DVector::from_vec(vec![
                x.norm_squared() - 1.0,
                a.norm_squared() - b.norm_squared(),
                2.0 * a.dot(&b),
            ])
        })
    } else {
        let s_l = sym.clone();
        let s_1 = SymPower::new(ell - 1);
        let lap = sym.laplacian(&SymPower::new(ell - 2));
        Arc::new(move |x: &DVector<f64>| {
            let dd = s_l.dim();
            let mut out = Vec::new();
            out.push(x.norm_squared() - 1.0);
            let f = s_l.partial_flattening(&s_1, x);
            let d1 = s_1.dim();
            for r1 in 0..3 {
                for r2 in (r1 + 1)..3 {
                    for c1 in 0..d1 {
                        for c2 in (c1 + 1)..d1 {
                            let m = f[(r1, c1)] * f[(r2, c2)] - f[(r1, c2)] * f[(r2, c1)];
                            out.push(m.re);
                            out.push(m.im);
                        }
                    }
                }
            }
            let re = x.rows(0, dd).into_owned();
            let im = x.rows(dd, dd).into_owned();
            let hre = &lap * re;
            let him = &lap * im;
            out.extend(hre.iter());
            out.extend(him.iter());
            DVector::from_vec(out)
        })
    };

    let s_samp = sym.clone();
    let sampler: SampleFn = Arc::new(move |rng| {
        let (u1, u2, _) = random_frame(rng);
        let a = u1 / 2.0f64.sqrt();
        let b = -u2 / 2.0f64.sqrt();
        s_samp.power(&a, &b)
    });

    let carrier = EmbeddedSpace::new(name.clone(), ambient, 3, constraint, sampler);

    let s_act = sym.clone();
    let action: ActionFn = Arc::new(move |g, x| {
        let s = s_act.action_matrix(&g.rotation3());
        let dd = s_act.dim();
        let re = x.rows(0, dd).into_owned();
        let im = x.rows(dd, dd).into_owned();
        concat(&(&s * re), &(&s * im))
    });

    let varpi_eval: FormFn = Arc::new(move |x, vs| {
        let v = &vs[0];
        let mut acc = 0.0;
        for i in 0..d {
            acc += x[i] * v[d + i] - x[d + i] * v[i];
        }
        acc
    });
    let varpi_d: FormFn = Arc::new(move |_x, vs| {
        let (v, w) = (&vs[0], &vs[1]);
        let mut acc = 0.0;
        for i in 0..d {
            acc += v[i] * w[d + i] - v[d + i] * w[i];
        }
        2.0 * acc
    });
    let varpi = KForm::new(format!("varpi[{name}]"), name.clone(), ambient, 1, varpi_eval)
        .with_exact_d(varpi_d);

    let circle: CircleActionFn = Arc::new(move |t, x| {
        let (c, s) = (t.cos(), t.sin());
        let mut out = DVector::zeros(2 * d);
        for i in 0..d {
            out[i] = c * x[i] - s * x[d + i];
            out[d + i] = s * x[i] + c * x[d + i];
        }
        out
    });

    let gens: Vec<DMatrix<f64>> = (0..3)
        .map(|i| {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            sym.algebra_action(&lie::hat3(&e))
        })
        .collect();
    let moment: MomentFn = Arc::new(move |x| {
        let re = x.rows(0, d).into_owned();
        let im = x.rows(d, d).into_owned();
        DVector::from_iterator(
            3,
            gens.iter()
                .map(|g| re.dot(&(g * &im)) - im.dot(&(g * &re))),
        )
    });

    let space = PrequantumSpace::new(
        name,
        carrier,
        Subgroup::full(GroupId::SO3),
        action,
        varpi,
        circle,
    );

    FusionPower {
        ell,
        sym,
        space,
        moment,
    }
}

impl FusionPower {
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn sym(&self) -> &SymPower {
        &self.sym
    }

    pub fn space(&self) -> &PrequantumSpace {
        &self.space
    }

    /// Closed-form moment `Φᵢ(η) = ϖ(dS(êᵢ)η) = Im⟨η, dS(êᵢ)η⟩`.
    pub fn moment_fn(&self) -> &MomentFn {
        &self.moment
    }

    /// The fusion map: `ℓ`-th power of a frame-circle carrier point
    /// `[a; b]`, `ξ = a + ib`.
    pub fn power_point(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), 6, "frame carrier points pack [a; b]");
        let a = Vector3::new(x[0], x[1], x[2]);
        let b = Vector3::new(x[3], x[4], x[5]);
        self.sym.power(&a, &b)
    }

    /// Complex index pairs `(re, im)` of the carrier coordinates, in the
    /// order gauge charts should try them.
    pub fn chart_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.sym.dim()).map(|i| (i, self.sym.dim() + i)).collect()
    }
}

// ---------------------------------------------------------------------------
// Gauge products
// ---------------------------------------------------------------------------

/// Orientation of a gauge product: `Sum` composes the 1-forms as
/// `ϖ₁ + ϖ₂` (null direction = the antidiagonal circle `(z⁻¹, z)`),
/// `Difference` as `ϖ₂ - ϖ₁` — the first factor dualized, so the null
/// direction is the plain diagonal `(z, z)` in the original phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductSign {
    Sum,
    Difference,
}

/// Un-quotiented model of the gauge product of two prequantum spaces: the
/// product carrier with the signed sum of the 1-forms.  The gauge circle
/// (diagonal or antidiagonal per [`ProductSign`]) is the null direction the
/// quotient forgets; points are compared through chart-based normalization.
pub struct PrequantumProduct {
    space: PrequantumSpace,
    sign: ProductSign,
    split_at: usize,
    circle1: CircleActionFn,
    circle2: CircleActionFn,
    chart_pairs: Vec<(usize, usize)>,
    chart_floor: f64,
}

impl std::fmt::Debug for PrequantumProduct {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrequantumProduct")
            .field("space", &self.space.name())
            .field("split_at", &self.split_at)
            .finish()
    }
}

/// Build the gauge product of `p1` and `p2` with the given sign
/// (`Difference` models `p1⁻ ⊠ p2`).  `chart_pairs` lists the `(re, im)`
/// coordinate pairs of the *first* factor usable for gauge normalization,
/// in order of preference; the first with modulus at least [`CHART_FLOOR`]
/// wins.
pub fn prequantum_product(
    p1: &PrequantumSpace,
    p2: &PrequantumSpace,
    sign: ProductSign,
    chart_pairs: Vec<(usize, usize)>,
) -> Result<PrequantumProduct, ConsError> {
    if p1.acting().label() != p2.acting().label()
        || p1.acting().ambient() != p2.acting().ambient()
    {
        return Err(ConsError::ActingMismatch {
            left: p1.acting().label().to_string(),
            right: p2.acting().label().to_string(),
        });
    }
    let (n1, n2) = (p1.carrier().ambient_dim(), p2.carrier().ambient_dim());
    let total = n1 + n2;
    let name = format!("box({}, {})", p1.name(), p2.name());
    let carrier = EmbeddedSpace::product(name.clone(), p1.carrier(), p2.carrier());
    let w1 = window_form(p1.varpi(), 0, n1, total, name.clone());
    let w2 = window_form(p2.varpi(), n1, n2, total, name.clone());
    let first_weight = match sign {
        ProductSign::Sum => 1.0,
        ProductSign::Difference => -1.0,
    };
    let varpi = w2
        .combine(1.0, &w1, first_weight)?
        .renamed(format!("varpi[{name}]"));
    let (a1, a2) = (p1.action().clone(), p2.action().clone());
    let action: ActionFn = Arc::new(move |g, x| {
        concat(
            &a1(g, &x.rows(0, n1).into_owned()),
            &a2(g, &x.rows(n1, n2).into_owned()),
        )
    });
    let c2 = p2.circle_fn().clone();
    let circle: CircleActionFn = Arc::new(move |t, x| {
        let mut out = x.clone();
        out.rows_mut(n1, n2)
            .copy_from(&c2(t, &x.rows(n1, n2).into_owned()));
        out
    });
    let space = PrequantumSpace::new(name, carrier, p1.acting().clone(), action, varpi, circle);
    Ok(PrequantumProduct {
        space,
        sign,
        split_at: n1,
        circle1: p1.circle_fn().clone(),
        circle2: p2.circle_fn().clone(),
        chart_pairs,
        chart_floor: CHART_FLOOR,
    })
}

impl PrequantumProduct {
    pub fn space(&self) -> &PrequantumSpace {
        &self.space
    }

    pub fn split_at(&self) -> usize {
        self.split_at
    }

    pub fn point(&self, x1: &DVector<f64>, x2: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x1.len(), self.split_at);
        concat(x1, x2)
    }

    pub fn split(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n2 = self.space.carrier().ambient_dim() - self.split_at;
        (
            x.rows(0, self.split_at).into_owned(),
            x.rows(self.split_at, n2).into_owned(),
        )
    }

    /// Rotate along the null gauge circle: both factors by the same phase
    /// for `Difference`, opposite phases (`z⁻¹`, `z`) for `Sum`.
    pub fn gauge_rotate(&self, angle: f64, x: &DVector<f64>) -> DVector<f64> {
        let (x1, x2) = self.split(x);
        let first = match self.sign {
            ProductSign::Sum => -angle,
            ProductSign::Difference => angle,
        };
        concat(&(self.circle1)(first, &x1), &(self.circle2)(angle, &x2))
    }

    /// Chart representative: the preferred usable designated coordinate of
    /// the first factor is rotated onto the positive real axis.  Returns
    /// the representative and the chart index used (the gauge flag).
    pub fn gauge_normalize(&self, x: &DVector<f64>) -> Result<(DVector<f64>, usize), ConsError> {
        for (chart, &(i, j)) in self.chart_pairs.iter().enumerate() {
            let r = x[i].hypot(x[j]);
            if r >= self.chart_floor {
                let theta = x[j].atan2(x[i]);
                let angle = match self.sign {
                    ProductSign::Sum => theta,
                    ProductSign::Difference => -theta,
                };
                return Ok((self.gauge_rotate(angle, x), chart));
            }
        }
        Err(ConsError::GaugeChartMiss {
            limit: self.chart_floor,
        })
    }

    /// Whether two points differ by a diagonal gauge rotation (coordinate
    /// agreement of chart representatives within `tol`).
    pub fn gauge_equivalent(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        tol: f64,
    ) -> Result<bool, ConsError> {
        let (nx, chart) = self.gauge_normalize(x)?;
        let (i, j) = self.chart_pairs[chart];
        let ry = y[i].hypot(y[j]);
        if (x[i].hypot(x[j]) - ry).abs() > tol || ry < self.chart_floor {
            return Ok(false);
        }
        let theta = y[j].atan2(y[i]);
        let angle = match self.sign {
            ProductSign::Sum => theta,
            ProductSign::Difference => -theta,
        };
        let ny = self.gauge_rotate(angle, y);
        Ok((nx - ny).amax() <= tol)
    }
}

// ---------------------------------------------------------------------------
// Restriction and symplectization
// ---------------------------------------------------------------------------

/// The same prequantum data acted on by a subgroup of the original group.
pub fn restrict_prequantum(space: &PrequantumSpace, sub: Subgroup) -> PrequantumSpace {
    assert_eq!(
        space.acting().ambient(),
        sub.ambient(),
        "restriction needs a subgroup of the same catalog group"
    );
    PrequantumSpace::new(
        format!("{}|{}", space.name(), sub.label()),
        space.carrier().clone(),
        sub,
        space.action().clone(),
        space.varpi().clone(),
        space.circle_fn().clone(),
    )
}

/// The symplectization `R × X̃` with `ω = d(e^s ϖ)`:
/// `ω((σ, v), (σ', v')) = e^s (σ ϖ(v') - σ' ϖ(v) + dϖ(v, v'))`,
/// moment `e^s Φ̃` for the closed-form contact moment `Φ̃` supplied by the
/// caller.
pub fn symplectize(space: &PrequantumSpace, moment: &MomentFn) -> HamiltonianSpace {
    let n = space.carrier().ambient_dim();
    let total = n + 1;
    let name = format!("sympl({})", space.name());
    let ray = EmbeddedSpace::euclidean("ray", 1);
    let carrier = EmbeddedSpace::product(name.clone(), &ray, space.carrier());
    let varpi = space.varpi().clone();
    let dvarpi = varpi
        .exact_d()
        .expect("symplectization needs the exact derivative of the contact form");
    let omega_eval: FormFn = Arc::new(move |x, vs| {
        let s = x[0];
        let xp = x.rows(1, n).into_owned();
        let (sv, vv) = (vs[0][0], vs[0].rows(1, n).into_owned());
        let (sw, wv) = (vs[1][0], vs[1].rows(1, n).into_owned());
        s.exp()
            * (sv * varpi.eval(&xp, std::slice::from_ref(&wv))
                - sw * varpi.eval(&xp, std::slice::from_ref(&vv))
                + dvarpi.eval(&xp, &[vv, wv]))
    });
    let omega = KForm::new(format!("omega[{name}]"), name.clone(), total, 2, omega_eval)
        .with_exact_d(Arc::new(|_, _| 0.0));
    let act = space.action().clone();
    let action: ActionFn = Arc::new(move |g, x| {
        concat(
            &DVector::from_element(1, x[0]),
            &act(g, &x.rows(1, n).into_owned()),
        )
    });
    let mm = moment.clone();
    let smoment: MomentFn = Arc::new(move |x| mm(&x.rows(1, n).into_owned()) * x[0].exp());
    HamiltonianSpace::new(
        name,
        carrier,
        space.acting().clone(),
        action,
        omega,
        smoment,
    )
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{
        domain_exterior_derivative, pullback, Plot,
    };
    use crate::lie::AlgebraElement;
    use crate::rng;
    use crate::spaces::{
        axiom_gate, circle_space, frame_moment, frame_to_carrier, prequantized_sphere,
        prequantum_axiom_gate, prequantum_moment, restrict_action, sphere_orbit, tangent_sphere,
        trivial_space, GateConfig,
    };
    use approx::assert_abs_diff_eq;

    fn sample_pair(
        space: &HamiltonianSpace,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let x = space.carrier().sample(rng);
        let v = space.carrier().tangent_sample(&x, rng).unwrap();
        let w = space.carrier().tangent_sample(&x, rng).unwrap();
        (x, v, w)
    }

    #[test]
    fn dual_negates_omega_and_moment() {
        let ts = tangent_sphere();
        let d = dual(&ts);
        let mut rng = rng::stream(7, &["cons", "dual"]);
        for _ in 0..50 {
            let (x, v, w) = sample_pair(&ts, &mut rng);
            assert_abs_diff_eq!(
                d.omega().eval(&x, &[v.clone(), w.clone()]),
                -ts.omega().eval(&x, &[v, w]),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(d.moment(&x), -ts.moment(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn dual_is_an_involution() {
        let ts = tangent_sphere();
        let dd = dual(&dual(&ts));
        let mut rng = rng::stream(9, &["cons", "dual-inv"]);
        for _ in 0..25 {
            let (x, v, w) = sample_pair(&ts, &mut rng);
            assert_abs_diff_eq!(
                dd.omega().eval(&x, &[v.clone(), w.clone()]),
                ts.omega().eval(&x, &[v, w]),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(dd.moment(&x), ts.moment(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn dual_passes_axiom_gate() {
        let d = dual(&tangent_sphere());
        let config = GateConfig::new(11, "dual-gate").with_samples(60);
        for report in axiom_gate(&d, &config).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn hom_with_point_factor_reduces_to_second_factor() {
        let pt = trivial_space(Subgroup::full(GroupId::SO3));
        let ts = tangent_sphere();
        let hom = hom_data(&pt, &ts).unwrap();
        let mut rng = rng::stream(13, &["cons", "hom-pt"]);
        for _ in 0..50 {
            let (x, v, w) = sample_pair(&ts, &mut rng);
            assert_abs_diff_eq!(
                hom.omega().eval(&x, &[v.clone(), w.clone()]),
                ts.omega().eval(&x, &[v, w]),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(hom.moment(&x), ts.moment(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn hom_moment_vanishes_on_the_diagonal() {
        let ts = tangent_sphere();
        let hom = hom_data(&ts, &ts).unwrap();
        let mut rng = rng::stream(17, &["cons", "hom-diag"]);
        for _ in 0..50 {
            let x = ts.carrier().sample(&mut rng);
            let m = hom.moment(&concat(&x, &x));
            assert!(m.amax() < 1e-12, "diagonal moment {m}");
        }
    }

    #[test]
    fn hom_moment_vanishes_on_matched_sphere_data() {
        // A point of the zero level of hom(sphere(2), TS²): the sphere point
        // 2u₃ paired with the tangent vector (u₁, 2u₂), whose moments agree.
        let hom = hom_data(&sphere_orbit(2), &tangent_sphere()).unwrap();
        let mut rng = rng::stream(19, &["cons", "hom-sphere"]);
        for _ in 0..50 {
            let (u1, u2, u3) = random_frame(&mut rng);
            let x1 = DVector::from_vec(vec![2.0 * u3[0], 2.0 * u3[1], 2.0 * u3[2]]);
            let x2 = DVector::from_vec(vec![
                u1[0],
                u1[1],
                u1[2],
                2.0 * u2[0],
                2.0 * u2[1],
                2.0 * u2[2],
            ]);
            let m = hom.moment(&concat(&x1, &x2));
            assert!(m.amax() < 1e-12, "matched moment {m}");
        }
    }

    #[test]
    fn hom_rejects_mismatched_acting_groups() {
        let ts = tangent_sphere();
        let restricted = restrict_action(&ts, Subgroup::so2_in_so3());
        assert!(matches!(
            hom_data(&ts, &restricted),
            Err(ConsError::ActingMismatch { .. })
        ));
    }

    #[test]
    fn cotangent_left_space_passes_axiom_gate() {
        let tg = cotangent_group(&GroupId::SO3);
        let config = GateConfig::new(23, "tstar-so3").with_samples(60);
        for report in axiom_gate(tg.left_space(), &config).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn cotangent_left_moment_is_the_fiber_coordinate() {
        let tg = cotangent_group(&GroupId::SO3);
        let mut rng = rng::stream(29, &["cons", "tstar-phi"]);
        for _ in 0..50 {
            let x = tg.carrier().sample(&mut rng);
            let (_, mu) = tg.split(&x);
            assert_abs_diff_eq!(tg.left_space().moment(&x), mu, epsilon = 1e-14);
            assert_abs_diff_eq!(tg.phi(&x), mu, epsilon = 1e-14);
        }
    }

    #[test]
    fn cotangent_exterior_derivative_matches_numeric_differential() {
        // Pull ϖ back along a curved 3-parameter plot and compare the
        // numeric exterior derivative of the pullback with the pullback of
        // the closed-form dϖ.
        let tg = cotangent_group(&GroupId::SO3);
        let space_name = tg.carrier().name().to_string();
        let map: PointFn = Arc::new(move |u: &DVector<f64>| {
            let z = AlgebraElement::from_coords(
                &GroupId::SO3,
                DVector::from_vec(vec![
                    0.3 + u[0],
                    0.2 * u[1].sin() + 0.1 * u[2],
                    u[1] - 0.4 * u[0] * u[2],
                ]),
            )
            .unwrap();
            let q = z.exp();
            let mu = DVector::from_vec(vec![
                0.5 + u[1] * u[2],
                0.3 * u[0] - u[2],
                0.2 + u[0] * u[1],
            ]);
            concat(&q.flatten(), &mu)
        });
        let plot = Plot::new("spin", space_name, 12, vec![(-0.8, 0.8); 3], map);
        let pulled = pullback(tg.varpi(), &plot, 1e-5).unwrap();
        let numeric_d = domain_exterior_derivative(&pulled, 1e-4);
        let closed_d = pullback(tg.omega(), &plot, 1e-5).unwrap();
        let mut rng = rng::stream(31, &["cons", "tstar-dvarpi"]);
        let mut worst = 0.0f64;
        for _ in 0..25 {
            let u = plot.sample_domain(&mut rng, 0.1);
            for _ in 0..3 {
                let du = rng::normal_vector(&mut rng, 3);
                let dv = rng::normal_vector(&mut rng, 3);
                let a = numeric_d.eval(&u, &[du.clone(), dv.clone()]).unwrap();
                let b = closed_d.eval(&u, &[du, dv]).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-6, "numeric vs closed dϖ disagreement {worst:e}");
    }

    #[test]
    fn cotangent_right_moment_norm_matches_fiber_norm() {
        // ψ for the full group is -Ad*_{q⁻¹}μ; for rotations the coadjoint
        // action is orthogonal, so ‖ψ‖ = ‖μ‖ and ψ = 0 exactly when μ = 0.
        let tg = cotangent_group(&GroupId::SO3);
        let full = Subgroup::full(GroupId::SO3);
        let mut rng = rng::stream(37, &["cons", "tstar-psi"]);
        for _ in 0..50 {
            let x = tg.carrier().sample(&mut rng);
            let (q, mu) = tg.split(&x);
            let psi = tg.psi(&full, &x).unwrap();
            assert_abs_diff_eq!(psi.norm(), mu.norm(), epsilon = 1e-10);
            let zeroed = tg.point(&q, &DVector::zeros(3));
            assert!(tg.psi(&full, &zeroed).unwrap().amax() < 1e-14);
        }
    }

    #[test]
    fn cotangent_winding_moment_is_the_projected_fiber() {
        // On the 2-torus the coadjoint action is trivial, so the right
        // moment of the winding line is -(μ₁ + αμ₂)/√(1 + α²) at every q.
        let alpha = 2.0f64.sqrt();
        let tg = cotangent_group(&GroupId::Torus2);
        let h = Subgroup::winding(alpha);
        let mut rng = rng::stream(41, &["cons", "tstar-winding"]);
        for _ in 0..50 {
            let x = tg.carrier().sample(&mut rng);
            let (_, mu) = tg.split(&x);
            let psi = tg.psi(&h, &x).unwrap();
            let expected = -(mu[0] + alpha * mu[1]) / (1.0 + alpha * alpha).sqrt();
            assert_eq!(psi.len(), 1);
            assert_abs_diff_eq!(psi[0], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn cotangent_two_sided_passes_axiom_gate() {
        let tg = cotangent_group(&GroupId::SO3);
        let two = tg.two_sided(&Subgroup::so2_in_so3()).unwrap();
        let config = GateConfig::new(43, "two-sided").with_samples(60);
        for report in axiom_gate(&two, &config).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn induction_with_trivial_factors_reduces_to_the_cotangent_bundle() {
        let h = Subgroup::so2_in_so3();
        let x = trivial_space(Subgroup::full(GroupId::SO3));
        let y = trivial_space(h.clone());
        let ind = induction_data(&x, &y, &h).unwrap();
        let tg = cotangent_group(&GroupId::SO3);
        let mut rng = rng::stream(47, &["cons", "ind-trivial"]);
        let empty = DVector::zeros(0);
        for _ in 0..50 {
            let p = tg.carrier().sample(&mut rng);
            let (q, mu) = tg.split(&p);
            let m = ind.m_point(&empty, &q, &mu, &empty);
            assert_abs_diff_eq!(ind.phi_m(&m), mu, epsilon = 1e-14);
            assert_abs_diff_eq!(
                ind.psi_m(&m),
                tg.psi(&h, &p).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn induction_spherical_instance_passes_axiom_gates() {
        let h = Subgroup::so2_in_so3();
        let x = sphere_orbit(1);
        let y = trivial_space(h.clone());
        let ind = induction_data(&x, &y, &h).unwrap();
        let config = GateConfig::new(53, "ind-sphere").with_samples(60);
        for report in axiom_gate(ind.m(), &config).unwrap() {
            assert!(report.is_pass(), "M: {}", report.summary_line());
        }
        for report in axiom_gate(ind.n(), &config).unwrap() {
            assert!(report.is_pass(), "N: {}", report.summary_line());
        }
    }

    #[test]
    fn induction_moment_pieces_have_the_product_form() {
        let h = Subgroup::so2_in_so3();
        let x = sphere_orbit(1);
        let y = trivial_space(h.clone());
        let ind = induction_data(&x, &y, &h).unwrap();
        let tg = cotangent_group(&GroupId::SO3);
        let mut rng = rng::stream(59, &["cons", "ind-pieces"]);
        let empty = DVector::zeros(0);
        for _ in 0..50 {
            let xp = x.carrier().sample(&mut rng);
            let p = tg.carrier().sample(&mut rng);
            let (q, mu) = tg.split(&p);
            let m = ind.m_point(&xp, &q, &mu, &empty);
            assert_abs_diff_eq!(ind.phi_m(&m), &mu - x.moment(&xp), epsilon = 1e-13);
            assert_abs_diff_eq!(ind.psi_m(&m), tg.psi(&h, &p).unwrap(), epsilon = 1e-13);
            let n = ind.n_point(&xp, &empty);
            assert_abs_diff_eq!(
                ind.psi_n(&n),
                -h.basis().transpose() * x.moment(&xp),
                epsilon = 1e-13
            );
        }
    }

    // ------------------------------------------------------------------ sym

    #[test]
    fn sym_tables_have_the_expected_layout() {
        let s = SymPower::new(2);
        assert_eq!(s.dim(), 6);
        assert_eq!(
            s.indices(),
            &[
                [2, 0, 0],
                [1, 1, 0],
                [1, 0, 1],
                [0, 2, 0],
                [0, 1, 1],
                [0, 0, 2]
            ]
        );
        let expected = [1.0, 2.0f64.sqrt(), 2.0f64.sqrt(), 1.0, 2.0f64.sqrt(), 1.0];
        for (i, w) in expected.iter().enumerate() {
            assert_abs_diff_eq!(s.weight(i), *w, epsilon = 1e-15);
        }
        for ell in 0..=5 {
            let s = SymPower::new(ell);
            for (i, k) in s.indices().iter().enumerate() {
                assert_eq!(s.position(*k), i);
            }
        }
    }

    #[test]
    fn sym_action_is_orthogonal_and_intertwines_powers() {
        let mut rng = rng::stream(61, &["cons", "sym-action"]);
        for ell in [2usize, 3] {
            let s = SymPower::new(ell);
            for _ in 0..10 {
                let g = Subgroup::full(GroupId::SO3).sample(&mut rng, 1.0);
                let m = s.action_matrix(&g.rotation3());
                let gram = m.transpose() * &m;
                let eye = DMatrix::identity(s.dim(), s.dim());
                assert!((gram - eye).amax() < 1e-10, "orthogonality at ℓ={ell}");

                let (u1, u2, _) = random_frame(&mut rng);
                let a = u1 / 2.0f64.sqrt();
                let b = -u2 / 2.0f64.sqrt();
                let eta = s.power(&a, &b);
                let ga = g.rotation3() * a;
                let gb = g.rotation3() * b;
                let d = s.dim();
                let re = eta.rows(0, d).into_owned();
                let im = eta.rows(d, d).into_owned();
                let mapped = concat(&(&m * re), &(&m * im));
                assert!(
                    (mapped - s.power(&ga, &gb)).amax() < 1e-10,
                    "power equivariance at ℓ={ell}"
                );
            }
        }
    }

    #[test]
    fn sym_action_is_a_homomorphism() {
        let mut rng = rng::stream(67, &["cons", "sym-hom"]);
        let s = SymPower::new(3);
        let full = Subgroup::full(GroupId::SO3);
        for _ in 0..10 {
            let g1 = full.sample(&mut rng, 1.0);
            let g2 = full.sample(&mut rng, 1.0);
            let lhs = s.action_matrix(&g1.multiply(&g2).unwrap().rotation3());
            let rhs = s.action_matrix(&g1.rotation3()) * s.action_matrix(&g2.rotation3());
            assert!((lhs - rhs).amax() < 1e-10);
        }
    }

    #[test]
    fn sym_algebra_action_matches_the_finite_difference() {
        let mut rng = rng::stream(71, &["cons", "sym-alg"]);
        for ell in [1usize, 2, 3] {
            let s = SymPower::new(ell);
            let z = Vector3::new(0.4, -0.7, 0.2);
            let gen = s.algebra_action(&lie::hat3(&z));
            let (u1, u2, _) = random_frame(&mut rng);
            let a = u1 / 2.0f64.sqrt();
            let b = -u2 / 2.0f64.sqrt();
            let eta = s.power(&a, &b);
            let d = s.dim();
            let re = eta.rows(0, d).into_owned();
            let im = eta.rows(d, d).into_owned();
            let exact = concat(&(&gen * re), &(&gen * im));
            // central difference of t ↦ S(exp(tZ))·η
            let h = 1e-5;
            let zt = AlgebraElement::from_coords(
                &GroupId::SO3,
                DVector::from_vec(vec![z[0], z[1], z[2]]),
            )
            .unwrap();
            let eval = |t: f64| {
                let g = zt.scale(t).exp();
                let m = s.action_matrix(&g.rotation3());
                let re = eta.rows(0, d).into_owned();
                let im = eta.rows(d, d).into_owned();
                concat(&(&m * re), &(&m * im))
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            assert!(
                (exact - fd).amax() < 1e-8,
                "generator mismatch at ℓ={ell}"
            );
        }
    }

    #[test]
    fn sym_laplacian_annihilates_isotropic_powers() {
        let mut rng = rng::stream(73, &["cons", "sym-lap"]);
        for ell in [2usize, 3, 4] {
            let s = SymPower::new(ell);
            let target = SymPower::new(ell - 2);
            let lap = s.laplacian(&target);
            let (u1, u2, _) = random_frame(&mut rng);
            let a = u1 / 2.0f64.sqrt();
            let b = -u2 / 2.0f64.sqrt();
            let eta = s.power(&a, &b);
            let d = s.dim();
            let hre = &lap * eta.rows(0, d).into_owned();
            let him = &lap * eta.rows(d, d).into_owned();
            assert!(hre.amax() < 1e-12 && him.amax() < 1e-12, "harmonic at ℓ={ell}");

            // non-isotropic control: Δ(w₁^ℓ) = ℓ(ℓ-1) w₁^(ℓ-2)
            let e1 = s.power(&Vector3::x(), &Vector3::zeros());
            let lre = &lap * e1.rows(0, d).into_owned();
            assert_abs_diff_eq!(lre[0], (ell * (ell - 1)) as f64, epsilon = 1e-12);
        }
    }

    // --------------------------------------------------------------- fusion

    #[test]
    fn fusion_one_is_the_frame_circle_bundle() {
        let f = fusion_power(1);
        let mut rng = rng::stream(79, &["cons", "fusion-1"]);
        for _ in 0..20 {
            let x = prequantized_sphere().carrier().sample(&mut rng);
            assert_abs_diff_eq!(f.power_point(&x), x, epsilon = 1e-14);
        }
        let config = GateConfig::new(83, "fusion-1-gate").with_samples(60);
        for report in prequantum_axiom_gate(f.space(), &config).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn fusion_two_identifies_antipodal_phases() {
        let f = fusion_power(2);
        let mut rng = rng::stream(89, &["cons", "fusion-2-fiber"]);
        for _ in 0..20 {
            let x = prequantized_sphere().carrier().sample(&mut rng);
            let p = f.power_point(&x);
            assert_abs_diff_eq!(f.power_point(&(-x.clone())), p, epsilon = 1e-14);
            // a quarter phase turn of ξ lands elsewhere: (iξ)² = -ξ²
            let quarter = prequantized_sphere().rotate(std::f64::consts::FRAC_PI_2, &x);
            assert!((f.power_point(&quarter) + &p).amax() < 1e-12);
            assert!((f.power_point(&quarter) - &p).amax() > 0.5);
        }
    }

    #[test]
    fn fusion_moment_scales_linearly() {
        let mut rng = rng::stream(97, &["cons", "fusion-moment"]);
        for ell in [1usize, 2, 3] {
            let f = fusion_power(ell);
            for _ in 0..10 {
                let (u1, u2, u3) = random_frame(&mut rng);
                let x = frame_to_carrier(&u1, &u2);
                let eta = f.power_point(&x);
                let phi = (f.moment_fn())(&eta);
                let expected = DVector::from_vec(vec![
                    ell as f64 * u3[0],
                    ell as f64 * u3[1],
                    ell as f64 * u3[2],
                ]);
                assert_abs_diff_eq!(phi, expected, epsilon = 1e-10);
                assert_abs_diff_eq!(
                    frame_moment(&x) * ell as f64,
                    expected,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn fusion_moment_agrees_with_the_contact_derivation() {
        let f = fusion_power(2);
        let mut rng = rng::stream(101, &["cons", "fusion-derived"]);
        for _ in 0..10 {
            let x = f.space().carrier().sample(&mut rng);
            let derived = prequantum_moment(f.space(), &x, 1e-5).unwrap();
            assert_abs_diff_eq!(derived, (f.moment_fn())(&x), epsilon = 1e-6);
        }
    }

    #[test]
    fn fusion_power_rescales_the_contact_form() {
        // Pulling the fusion carrier's 1-form back through the power map
        // gives ℓ times the frame bundle's 1-form, plot by plot.
        let ps = prequantized_sphere();
        let x0 = frame_to_carrier(&Vector3::x(), &Vector3::y());
        let base_map: PointFn = {
            let action = ps.action().clone();
            let circle = ps.circle_fn().clone();
            let x0 = x0.clone();
            Arc::new(move |u: &DVector<f64>| {
                let z = AlgebraElement::from_coords(
                    &GroupId::SO3,
                    DVector::from_vec(vec![u[0], 0.4 * u[1], u[2] - 0.3 * u[0]]),
                )
                .unwrap();
                let rotated = action(&z.exp(), &x0);
                circle(0.7 * u[1] + u[0] * u[2], &rotated)
            })
        };
        for ell in [2usize, 3] {
            let f = fusion_power(ell);
            let base = Plot::new(
                "frame-curve",
                ps.carrier().name(),
                6,
                vec![(-0.8, 0.8); 3],
                base_map.clone(),
            );
            let fmap = {
                let bm = base_map.clone();
                let sym = f.sym().clone();
                Arc::new(move |u: &DVector<f64>| {
                    let x = bm(u);
                    let a = Vector3::new(x[0], x[1], x[2]);
                    let b = Vector3::new(x[3], x[4], x[5]);
                    sym.power(&a, &b)
                }) as PointFn
            };
            let lifted = Plot::new(
                "power-curve",
                f.space().carrier().name(),
                2 * f.sym().dim(),
                vec![(-0.8, 0.8); 3],
                fmap,
            );
            let pb_base = pullback(ps.varpi(), &base, 1e-5).unwrap();
            let pb_lift = pullback(f.space().varpi(), &lifted, 1e-5).unwrap();
            let mut rng = rng::stream(149, &["cons", "fusion-pushforward"]);
            for _ in 0..15 {
                let u = base.sample_domain(&mut rng, 0.1);
                let du = rng::normal_vector(&mut rng, 3);
                let a = pb_lift.eval(&u, std::slice::from_ref(&du)).unwrap();
                let b = pb_base.eval(&u, std::slice::from_ref(&du)).unwrap();
                assert_abs_diff_eq!(a, ell as f64 * b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn fusion_two_passes_the_prequantum_gate() {
        let f = fusion_power(2);
        let config = GateConfig::new(103, "fusion-2-gate").with_samples(40);
        for report in prequantum_axiom_gate(f.space(), &config).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    // -------------------------------------------------------------- product

    fn equator_product() -> PrequantumProduct {
        let h = Subgroup::so2_in_so3();
        let frames = restrict_prequantum(&prequantized_sphere(), h.clone());
        let torus = circle_space(h);
        let pairs = vec![(0, 3), (1, 4), (2, 5)];
        prequantum_product(&frames, &torus, ProductSign::Difference, pairs).unwrap()
    }

    #[test]
    fn product_gauge_rotation_is_an_equivalence() {
        let pp = equator_product();
        let mut rng = rng::stream(107, &["cons", "prod-gauge"]);
        for _ in 0..25 {
            let x = pp.space().carrier().sample(&mut rng);
            let y = pp.gauge_rotate(rng::uniform(&mut rng, -3.0, 3.0), &x);
            assert!(pp.gauge_equivalent(&x, &y, 1e-9).unwrap());
            // rotating only the residual circle leaves the gauge class
            let z = pp.space().rotate(1.0, &x);
            assert!(!pp.gauge_equivalent(&x, &z, 1e-6).unwrap());
        }
    }

    #[test]
    fn sum_product_gauge_is_the_antidiagonal() {
        let ps = prequantized_sphere();
        let pairs = vec![(0, 3), (1, 4), (2, 5)];
        let pp = prequantum_product(&ps, &ps, ProductSign::Sum, pairs).unwrap();
        let mut rng = rng::stream(137, &["cons", "prod-sum"]);
        for _ in 0..20 {
            let x1 = ps.carrier().sample(&mut rng);
            let x2 = ps.carrier().sample(&mut rng);
            let x = pp.point(&x1, &x2);
            let t = rng::uniform(&mut rng, -3.0, 3.0);
            // (z⁻¹ x₁, z x₂) is gauge-equivalent to (x₁, x₂)...
            let anti = pp.point(&ps.rotate(-t, &x1), &ps.rotate(t, &x2));
            assert!(pp.gauge_equivalent(&x, &anti, 1e-9).unwrap());
            // ...while the plain diagonal is not.
            let diag = pp.point(&ps.rotate(t, &x1), &ps.rotate(t, &x2));
            assert!(!pp.gauge_equivalent(&x, &diag, 1e-6).unwrap());
        }
    }

    #[test]
    fn difference_product_moment_vanishes_on_the_diagonal() {
        let ps = prequantized_sphere();
        let pairs = vec![(0, 3), (1, 4), (2, 5)];
        let pp = prequantum_product(&ps, &ps, ProductSign::Difference, pairs).unwrap();
        let mut rng = rng::stream(139, &["cons", "prod-diag-moment"]);
        for _ in 0..10 {
            let x1 = ps.carrier().sample(&mut rng);
            let x = pp.point(&x1, &x1);
            let m = prequantum_moment(pp.space(), &x, 1e-5).unwrap();
            assert!(m.amax() < 1e-8, "diagonal moment {m}");
        }
    }

    #[test]
    fn product_normalization_reports_chart_misses() {
        let pp = equator_product();
        let dim = pp.space().carrier().ambient_dim();
        let err = pp.gauge_normalize(&DVector::zeros(dim));
        assert!(matches!(err, Err(ConsError::GaugeChartMiss { .. })));
    }

    #[test]
    fn product_passes_the_prequantum_gate() {
        let pp = equator_product();
        let config = GateConfig::new(109, "prod-gate").with_samples(60);
        for report in prequantum_axiom_gate(pp.space(), &config).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn product_moment_cuts_the_equator() {
        // Φ for the H-restricted product is Φ₂ - Φ₁|𝔥 = -u₃: it vanishes on
        // equator frames and is ∓1 at the poles.
        let pp = equator_product();
        let equator = concat(
            &frame_to_carrier(&Vector3::z(), &Vector3::y()),
            &DVector::from_vec(vec![1.0, 0.0]),
        );
        let derived = prequantum_moment(pp.space(), &equator, 1e-5).unwrap();
        assert!(derived.amax() < 1e-8, "equator moment {derived}");
        let pole = concat(
            &frame_to_carrier(&Vector3::x(), &Vector3::y()),
            &DVector::from_vec(vec![1.0, 0.0]),
        );
        let derived = prequantum_moment(pp.space(), &pole, 1e-5).unwrap();
        assert_abs_diff_eq!(derived[0], -1.0, epsilon = 1e-8);
    }

    // -------------------------------------------------------- symplectization

    #[test]
    fn symplectization_restores_the_contact_form_radially() {
        let base = prequantized_sphere();
        let moment: MomentFn = Arc::new(frame_moment);
        let sym = symplectize(&base, &moment);
        let mut rng = rng::stream(113, &["cons", "sympl"]);
        for _ in 0..25 {
            let x = sym.carrier().sample(&mut rng);
            let s = x[0];
            let xp = x.rows(1, 6).into_owned();
            let v = base.carrier().tangent_sample(&xp, &mut rng).unwrap();
            let radial = concat(&DVector::from_element(1, 1.0), &DVector::zeros(6));
            let lifted = concat(&DVector::zeros(1), &v);
            assert_abs_diff_eq!(
                sym.omega().eval(&x, &[radial, lifted]),
                s.exp() * base.varpi().eval(&xp, &[v]),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn symplectization_moment_restricts_to_the_slice() {
        let base = prequantized_sphere();
        let moment: MomentFn = Arc::new(frame_moment);
        let sym = symplectize(&base, &moment);
        let mut rng = rng::stream(127, &["cons", "sympl-slice"]);
        for _ in 0..25 {
            let xp = base.carrier().sample(&mut rng);
            let at_zero = concat(&DVector::zeros(1), &xp);
            assert_abs_diff_eq!(sym.moment(&at_zero), frame_moment(&xp), epsilon = 1e-13);
        }
    }

    #[test]
    fn symplectization_passes_the_axiom_gate() {
        let base = prequantized_sphere();
        let moment: MomentFn = Arc::new(frame_moment);
        let sym = symplectize(&base, &moment);
        let config = GateConfig::new(131, "sympl-gate").with_samples(60);
        for report in axiom_gate(&sym, &config).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }
}
