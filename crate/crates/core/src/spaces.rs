//! Hamiltonian and prequantum spaces, their axiom gates, and the base
//! catalog of examples.
//!
//! A [`HamiltonianSpace`] bundles a carrier, an acting group (always a
//! connected subgroup of a catalog group), a 2-form, and a declared moment
//! map with values in the dual of the acting algebra.  The sign convention
//! ties them together as
//!
//! ```text
//!     ω(ξ_X(x), v) + D_v ⟨Φ(·), ξ⟩(x) = 0
//! ```
//!
//! for every algebra direction ξ and tangent vector v; this is exactly what
//! [`check_moment_condition`] samples.  Moment maps must also intertwine
//! the action with the coadjoint action ([`check_equivariance`]), and the
//! form must be invariant ([`check_omega_invariance`]).
//!
//! Two linear-algebra consequences of the moment condition are checked by
//! [`cardinal_checks_at`]: the kernel of DΦ(x) on the tangent space is the
//! ω-orthogonal of the orbit directions, and the image of DΦ(x) is the
//! annihilator of the stabilizer subalgebra.
//!
//! A [`PrequantumSpace`] replaces the 2-form by an invariant 1-form ϖ with
//! a free circle action; the moment pairing is read off as ⟨Φ(x), ξ⟩ =
//! ϖ(ξ_X(x)) ([`prequantum_moment`]), and the axioms are phrased against
//! dϖ.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{CalcError, EmbeddedSpace, KForm};
use crate::lie::{CoalgebraElement, GroupElement, GroupId, Subgroup};
use crate::numeric;
use crate::report::{CheckReport, ResidualAccumulator, Thresholds};
use crate::rng;

pub type ActionFn = Arc<dyn Fn(&GroupElement, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type MomentFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type CircleActionFn = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;
type SelectorFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type SampleFn = Arc<dyn Fn(&mut ChaCha8Rng) -> DVector<f64> + Send + Sync>;

/// Residual tolerance for membership in a level set.
pub const LEVEL_TOL: f64 = 1e-9;

/// Outer step for derivatives whose integrand is itself a finite
/// difference: coarse enough that the inner noise (≈1e-11) stays two
/// orders below the Richardson truncation error.
const NESTED_OUTER_FD: f64 = 1e-3;

// ---------------------------------------------------------------------------
// Structures
// ---------------------------------------------------------------------------

/// A symplectic carrier with a group action and declared moment map.
#[derive(Clone)]
pub struct HamiltonianSpace {
    name: String,
    carrier: EmbeddedSpace,
    acting: Subgroup,
    action: ActionFn,
    omega: KForm,
    /// Moment map with values in coordinates on the dual of the acting
    /// subalgebra (length = `acting.dim()`), smoothly extended off the
    /// carrier.
    moment: MomentFn,
}

impl std::fmt::Debug for HamiltonianSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSpace")
            .field("name", &self.name)
            .field("carrier", &self.carrier)
            .field("acting", &self.acting.label())
            .finish()
    }
}

impl HamiltonianSpace {
    pub fn new(
        name: impl Into<String>,
        carrier: EmbeddedSpace,
        acting: Subgroup,
        action: ActionFn,
        omega: KForm,
        moment: MomentFn,
    ) -> Self {
        let space = HamiltonianSpace {
            name: name.into(),
            carrier,
            acting,
            action,
            omega,
            moment,
        };
        debug_assert_eq!(space.omega.arity(), 2);
        debug_assert_eq!(space.omega.ambient_dim(), space.carrier.ambient_dim());
        space
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn carrier(&self) -> &EmbeddedSpace {
        &self.carrier
    }

    pub fn acting(&self) -> &Subgroup {
        &self.acting
    }

    pub fn omega(&self) -> &KForm {
        &self.omega
    }

    pub fn action(&self) -> &ActionFn {
        &self.action
    }

    pub fn moment_fn(&self) -> &MomentFn {
        &self.moment
    }

    pub fn apply(&self, g: &GroupElement, x: &DVector<f64>) -> DVector<f64> {
        (self.action)(g, x)
    }

    pub fn moment(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.moment)(x)
    }

    /// `⟨Φ(x), ξ⟩` for subalgebra coordinates `ξ`.
    pub fn moment_pairing(&self, x: &DVector<f64>, xi: &DVector<f64>) -> f64 {
        self.moment(x).dot(xi)
    }
}

/// A contact-type carrier: invariant 1-form, free circle action.
#[derive(Clone)]
pub struct PrequantumSpace {
    name: String,
    carrier: EmbeddedSpace,
    acting: Subgroup,
    action: ActionFn,
    varpi: KForm,
    circle: CircleActionFn,
}

impl std::fmt::Debug for PrequantumSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrequantumSpace")
            .field("name", &self.name)
            .field("carrier", &self.carrier)
            .field("acting", &self.acting.label())
            .finish()
    }
}

impl PrequantumSpace {
    pub fn new(
        name: impl Into<String>,
        carrier: EmbeddedSpace,
        acting: Subgroup,
        action: ActionFn,
        varpi: KForm,
        circle: CircleActionFn,
    ) -> Self {
        let space = PrequantumSpace {
            name: name.into(),
            carrier,
            acting,
            action,
            varpi,
            circle,
        };
        debug_assert_eq!(space.varpi.arity(), 1);
        space
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn carrier(&self) -> &EmbeddedSpace {
        &self.carrier
    }

    pub fn acting(&self) -> &Subgroup {
        &self.acting
    }

    pub fn varpi(&self) -> &KForm {
        &self.varpi
    }

    pub fn action(&self) -> &ActionFn {
        &self.action
    }

    pub fn circle_fn(&self) -> &CircleActionFn {
        &self.circle
    }

    pub fn apply(&self, g: &GroupElement, x: &DVector<f64>) -> DVector<f64> {
        (self.action)(g, x)
    }

    pub fn rotate(&self, angle: f64, x: &DVector<f64>) -> DVector<f64> {
        (self.circle)(angle, x)
    }
}

/// The zero set of a selector on a parent carrier, with an analytic
/// on-level sampler.
#[derive(Clone)]
pub struct LevelSet {
    name: String,
    /// Name of the parent carrier the selector lives on.
    space: String,
    selector: SelectorFn,
    tolerance: f64,
    sampler: SampleFn,
}

impl std::fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LevelSet")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl LevelSet {
    pub fn new(
        name: impl Into<String>,
        space: impl Into<String>,
        selector: SelectorFn,
        sampler: SampleFn,
    ) -> Self {
        LevelSet {
            name: name.into(),
            space: space.into(),
            selector,
            tolerance: LEVEL_TOL,
            sampler,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &str {
        &self.space
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Largest violated selector component at `x`.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        numeric::max_abs(&(self.selector)(x))
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.violation(x) <= self.tolerance
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        (self.sampler)(rng)
    }

    /// Max violation over `n` declared samples.
    pub fn sampler_violation(&self, rng: &mut ChaCha8Rng, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let x = self.sample(rng);
            worst = worst.max(self.violation(&x));
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Infinitesimal action and derived moments
// ---------------------------------------------------------------------------

fn directional_derivative<F>(f: F, fd_step: f64) -> Result<DVector<f64>, CalcError>
where
    F: Fn(f64) -> DVector<f64>,
{
    let est = numeric::richardson_derivative(f, fd_step);
    if est.disagreement > numeric::FD_DISAGREEMENT {
        return Err(CalcError::DerivativeFailure {
            param: vec![0.0],
            disagreement: est.disagreement,
            limit: numeric::FD_DISAGREEMENT,
        });
    }
    Ok(est.value)
}

/// Generator vector field: velocity at `x` of `exp(t · ξ)` acting, for
/// subalgebra coordinates `ξ` of the acting group.
pub fn infinitesimal_action(
    action: &ActionFn,
    acting: &Subgroup,
    x: &DVector<f64>,
    xi: &DVector<f64>,
    fd_step: f64,
) -> Result<DVector<f64>, CalcError> {
    let z = acting.embed(xi)?;
    let action = action.clone();
    let x = x.clone();
    directional_derivative(move |t| action(&z.scale(t).exp(), &x), fd_step)
}

/// Moment coordinates of a prequantum space at `x`, read off from the
/// 1-form: `⟨Φ(x), ξ_i⟩ = ϖ(ξ_{i,X}(x))` over the subalgebra basis.
pub fn prequantum_moment(
    space: &PrequantumSpace,
    x: &DVector<f64>,
    fd_step: f64,
) -> Result<DVector<f64>, CalcError> {
    let h = space.acting.dim();
    let mut out = DVector::zeros(h);
    for i in 0..h {
        let mut xi = DVector::zeros(h);
        xi[i] = 1.0;
        let v = infinitesimal_action(&space.action, &space.acting, x, &xi, fd_step)?;
        out[i] = space.varpi.eval(x, &[v]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gate configuration
// ---------------------------------------------------------------------------

/// Sampling configuration shared by the axiom gates.
#[derive(Debug, Clone)]
pub struct GateConfig {
    pub seed: u64,
    pub label: String,
    pub samples: usize,
    pub fd_step: f64,
    pub thresholds: Thresholds,
}

impl GateConfig {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        GateConfig {
            seed,
            label: label.into(),
            samples: 200,
            fd_step: numeric::DEFAULT_FD_STEP,
            thresholds: Thresholds::default(),
        }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    fn stream(&self, purpose: &str) -> ChaCha8Rng {
        rng::stream(self.seed, &["gate", &self.label, purpose])
    }
}

// ---------------------------------------------------------------------------
// Hamiltonian gates
// ---------------------------------------------------------------------------

/// Sampled residual of `ω(ξ_X(x), v) + D_v⟨Φ(·), ξ⟩(x)`.
pub fn check_moment_condition(
    space: &HamiltonianSpace,
    config: &GateConfig,
) -> Result<CheckReport, CalcError> {
    let mut rng = config.stream("moment-condition");
    let mut acc = ResidualAccumulator::new();
    let h = space.acting.dim();
    for _ in 0..config.samples {
        let x = space.carrier.sample(&mut rng);
        let xi = rng::normal_vector(&mut rng, h);
        let v = space.carrier.tangent_sample(&x, &mut rng)?;
        let gen = infinitesimal_action(&space.action, &space.acting, &x, &xi, config.fd_step)?;
        let omega_term = space.omega.eval(&x, &[gen, v.clone()]);
        let space_ref = space.clone();
        let x0 = x.clone();
        let pairing_derivative = directional_derivative(
            move |t| {
                DVector::from_vec(vec![space_ref.moment_pairing(&(&x0 + &v * t), &xi)])
            },
            config.fd_step,
        )?[0];
        let residual = (omega_term + pairing_derivative).abs();
        let scale = omega_term.abs().max(pairing_derivative.abs());
        acc.push(residual, scale, x.as_slice(), "moment condition residual");
    }
    Ok(acc.finish(
        format!("moment-condition[{}]", space.name),
        "check_moment_condition",
        config.thresholds,
        config.seed,
    ))
}

/// Sampled residual of `Φ(g·x) − g·Φ(x)` (coadjoint action on the
/// subalgebra dual).
pub fn check_equivariance(
    space: &HamiltonianSpace,
    config: &GateConfig,
) -> Result<CheckReport, CalcError> {
    let mut rng = config.stream("equivariance");
    let mut acc = ResidualAccumulator::new();
    for _ in 0..config.samples {
        let x = space.carrier.sample(&mut rng);
        let g = space.acting.sample(&mut rng, 1.0);
        let lhs = space.moment(&space.apply(&g, &x));
        let rhs = space.acting.coadjoint_on_dual(&g, &space.moment(&x))?;
        let residual = numeric::max_abs(&(lhs.clone() - &rhs));
        let scale = numeric::max_abs(&lhs).max(numeric::max_abs(&rhs));
        acc.push(residual, scale, x.as_slice(), "equivariance residual");
    }
    Ok(acc.finish(
        format!("equivariance[{}]", space.name),
        "check_equivariance",
        config.thresholds,
        config.seed,
    ))
}

/// Sampled invariance of the 2-form under the acting group.
pub fn check_omega_invariance(
    space: &HamiltonianSpace,
    config: &GateConfig,
) -> Result<CheckReport, CalcError> {
    let mut rng = config.stream("omega-invariance");
    let mut acc = ResidualAccumulator::new();
    for _ in 0..config.samples {
        let x = space.carrier.sample(&mut rng);
        let g = space.acting.sample(&mut rng, 1.0);
        let v = space.carrier.tangent_sample(&x, &mut rng)?;
        let w = space.carrier.tangent_sample(&x, &mut rng)?;
        let gx = space.apply(&g, &x);
        let push = |vec: &DVector<f64>| -> Result<DVector<f64>, CalcError> {
            let action = space.action.clone();
            let g = g.clone();
            let x = x.clone();
            let vec = vec.clone();
            directional_derivative(move |t| action(&g, &(&x + &vec * t)), config.fd_step)
        };
        let gv = push(&v)?;
        let gw = push(&w)?;
        let before = space.omega.eval(&x, &[v, w]);
        let after = space.omega.eval(&gx, &[gv, gw]);
        acc.push(
            (before - after).abs(),
            before.abs().max(after.abs()),
            x.as_slice(),
            "omega invariance residual",
        );
    }
    Ok(acc.finish(
        format!("omega-invariance[{}]", space.name),
        "check_omega_invariance",
        config.thresholds,
        config.seed,
    ))
}

/// Identity and composition laws of the action, plus carrier preservation.
pub fn check_action_axioms(
    space: &HamiltonianSpace,
    config: &GateConfig,
) -> Result<CheckReport, CalcError> {
    let mut rng = config.stream("action-axioms");
    let mut acc = ResidualAccumulator::new();
    let identity = GroupElement::identity(space.acting.ambient());
    for _ in 0..config.samples {
        let x = space.carrier.sample(&mut rng);
        let g = space.acting.sample(&mut rng, 1.0);
        let h = space.acting.sample(&mut rng, 1.0);
        let id_res = numeric::max_abs(&(space.apply(&identity, &x) - &x));
        let staged = space.apply(&g, &space.apply(&h, &x));
        let joint = space.apply(&g.multiply(&h)?, &x);
        let comp_res = numeric::max_abs(&(staged - &joint));
        let carrier_res = space.carrier.residual_max(&joint);
        let residual = id_res.max(comp_res).max(carrier_res);
        acc.push(residual, 1.0, x.as_slice(), "action axiom residual");
    }
    Ok(acc.finish(
        format!("action-axioms[{}]", space.name),
        "check_action_axioms",
        config.thresholds,
        config.seed,
    ))
}

/// Declared-sampler constraint residual, reported as a check.
pub fn check_sampler(space: &EmbeddedSpace, config: &GateConfig) -> CheckReport {
    let mut rng = config.stream("sampler");
    let mut acc = ResidualAccumulator::new();
    for _ in 0..config.samples {
        let x = space.sample(&mut rng);
        acc.push(space.residual_max(&x), 1.0, x.as_slice(), "constraint residual");
    }
    acc.finish(
        format!("sampler[{}]", space.name()),
        "check_sampler",
        Thresholds::new(1e-9, 1e-6),
        config.seed,
    )
}

/// The full Hamiltonian axiom gate.
pub fn axiom_gate(
    space: &HamiltonianSpace,
    config: &GateConfig,
) -> Result<Vec<CheckReport>, CalcError> {
    Ok(vec![
        check_sampler(&space.carrier, config),
        check_moment_condition(space, config)?,
        check_equivariance(space, config)?,
        check_omega_invariance(space, config)?,
        check_action_axioms(space, config)?,
    ])
}

// ---------------------------------------------------------------------------
// Cardinal rank checks
// ---------------------------------------------------------------------------

/// Pointwise linear-algebra consequences of the moment condition.
#[derive(Debug, Clone)]
pub struct CardinalReport {
    pub tangent_dim: usize,
    pub moment_rank: usize,
    pub stabilizer_dim: usize,
    /// Subspace distance between Ker DΦ(x) and the ω-orthogonal of the
    /// orbit directions inside the tangent space.
    pub kernel_vs_omega_orthogonal: f64,
    /// Subspace distance between Im DΦ(x) and the annihilator of the
    /// stabilizer subalgebra.
    pub image_vs_annihilator: f64,
}

/// Compute ranks and compare the distinguished subspaces at one point.
pub fn cardinal_checks_at(
    space: &HamiltonianSpace,
    x: &DVector<f64>,
    fd_step: f64,
) -> Result<CardinalReport, CalcError> {
    let tangent = space.carrier.tangent_basis(x)?;
    let tangent_dim = tangent.ncols();
    let h = space.acting.dim();

    // Moment Jacobian restricted to the tangent space.
    let moment = space.moment.clone();
    let jac_ambient = numeric::jacobian(move |p| moment(p), x, 1e-6);
    let jac_tangent = &jac_ambient * &tangent; // h × tangent_dim

    let moment_info = numeric::ranked(&jac_tangent, numeric::RANK_CUTOFF).map_err(CalcError::Rank)?;
    let kernel_ambient = &tangent * &moment_info.kernel;

    // Orbit directions and stabilizer.
    let mut orbit = DMatrix::zeros(space.carrier.ambient_dim(), h);
    for i in 0..h {
        let mut xi = DVector::zeros(h);
        xi[i] = 1.0;
        let gen = infinitesimal_action(&space.action, &space.acting, x, &xi, fd_step)?;
        orbit.set_column(i, &gen);
    }
    let orbit_info = numeric::ranked(&orbit, numeric::RANK_CUTOFF).map_err(CalcError::Rank)?;
    let stabilizer_dim = h - orbit_info.rank;
    let stabilizer_basis = orbit_info.kernel.clone(); // h × stabilizer_dim

    // ω-orthogonal of the orbit inside the tangent space.
    let mut pairing = DMatrix::zeros(h, tangent_dim);
    for i in 0..h {
        for j in 0..tangent_dim {
            pairing[(i, j)] = space.omega.eval(
                x,
                &[orbit.column(i).into_owned(), tangent.column(j).into_owned()],
            );
        }
    }
    let pairing_info = numeric::ranked(&pairing, numeric::RANK_CUTOFF).map_err(CalcError::Rank)?;
    let omega_orthogonal_ambient = &tangent * &pairing_info.kernel;

    // Im DΦ(x) versus the annihilator of the stabilizer.
    let image = numeric::orthonormal_columns(&jac_tangent, numeric::RANK_CUTOFF);
    let annihilator = if stabilizer_dim == 0 {
        DMatrix::identity(h, h)
    } else {
        numeric::ranked(&stabilizer_basis.transpose(), numeric::RANK_CUTOFF)
            .map_err(CalcError::Rank)?
            .kernel
    };

    Ok(CardinalReport {
        tangent_dim,
        moment_rank: moment_info.rank,
        stabilizer_dim,
        kernel_vs_omega_orthogonal: numeric::subspace_distance(
            &kernel_ambient,
            &omega_orthogonal_ambient,
        ),
        image_vs_annihilator: numeric::subspace_distance(&image, &annihilator),
    })
}

// ---------------------------------------------------------------------------
// Prequantum gates
// ---------------------------------------------------------------------------

/// Reeb normalization `ϖ(d/dθ) = 1` and circle invariance of ϖ.
pub fn check_reeb(space: &PrequantumSpace, config: &GateConfig) -> Result<CheckReport, CalcError> {
    let mut rng = config.stream("reeb");
    let mut acc = ResidualAccumulator::new();
    for _ in 0..config.samples {
        let x = space.carrier.sample(&mut rng);
        let circle = space.circle.clone();
        let x0 = x.clone();
        let reeb = directional_derivative(move |t| circle(t, &x0), config.fd_step)?;
        let normalization = (space.varpi.eval(&x, &[reeb]) - 1.0).abs();

        // Invariance of ϖ under a finite circle rotation.
        let angle = rng::uniform(&mut rng, -3.0, 3.0);
        let v = space.carrier.tangent_sample(&x, &mut rng)?;
        let circle = space.circle.clone();
        let x1 = x.clone();
        let v1 = v.clone();
        let pushed =
            directional_derivative(move |t| circle(angle, &(&x1 + &v1 * t)), config.fd_step)?;
        let rotated = space.rotate(angle, &x);
        let invariance =
            (space.varpi.eval(&x, &[v]) - space.varpi.eval(&rotated, &[pushed])).abs();

        acc.push(
            normalization.max(invariance),
            1.0,
            x.as_slice(),
            "reeb/circle residual",
        );
    }
    Ok(acc.finish(
        format!("reeb[{}]", space.name),
        "check_reeb",
        config.thresholds,
        config.seed,
    ))
}

/// Invariance of ϖ under the acting group.
pub fn check_varpi_invariance(
    space: &PrequantumSpace,
    config: &GateConfig,
) -> Result<CheckReport, CalcError> {
    let mut rng = config.stream("varpi-invariance");
    let mut acc = ResidualAccumulator::new();
    for _ in 0..config.samples {
        let x = space.carrier.sample(&mut rng);
        let g = space.acting.sample(&mut rng, 1.0);
        let v = space.carrier.tangent_sample(&x, &mut rng)?;
        let action = space.action.clone();
        let g2 = g.clone();
        let x2 = x.clone();
        let v2 = v.clone();
        let pushed = directional_derivative(move |t| action(&g2, &(&x2 + &v2 * t)), config.fd_step)?;
        let before = space.varpi.eval(&x, &[v]);
        let after = space.varpi.eval(&space.apply(&g, &x), &[pushed]);
        acc.push(
            (before - after).abs(),
            before.abs().max(after.abs()),
            x.as_slice(),
            "varpi invariance residual",
        );
    }
    Ok(acc.finish(
        format!("varpi-invariance[{}]", space.name),
        "check_varpi_invariance",
        config.thresholds,
        config.seed,
    ))
}

/// Moment condition against dϖ: `dϖ(ξ_X(x), v) + D_v ϖ(ξ_X(·))(x) = 0`
/// follows from invariance; we check it with the derived moment, i.e.
/// `dϖ(ξ_X, v) + D_v ⟨Φ(·), ξ⟩ = 0` with ⟨Φ, ξ⟩ = ϖ(ξ_X).
pub fn check_prequantum_moment_condition(
    space: &PrequantumSpace,
    config: &GateConfig,
) -> Result<CheckReport, CalcError> {
    let d_varpi = space
        .varpi
        .exact_d()
        .expect("catalog prequantum forms carry their exterior derivative");
    let mut rng = config.stream("prequantum-moment");
    let mut acc = ResidualAccumulator::new();
    let h = space.acting.dim();
    for _ in 0..config.samples {
        let x = space.carrier.sample(&mut rng);
        let xi = rng::normal_vector(&mut rng, h);
        let v = space.carrier.tangent_sample(&x, &mut rng)?;
        let gen = infinitesimal_action(&space.action, &space.acting, &x, &xi, config.fd_step)?;
        let d_term = d_varpi.eval(&x, &[gen, v.clone()]);
        let space2 = space.clone();
        let xi2 = xi.clone();
        let x2 = x.clone();
        let pairing_derivative = directional_derivative(
            move |t| {
                let point = &x2 + &v * t;
                let mut out = DVector::zeros(1);
                let mut total = 0.0;
                for i in 0..space2.acting.dim() {
                    let mut e = DVector::zeros(space2.acting.dim());
                    e[i] = 1.0;
                    let gen = infinitesimal_action(
                        &space2.action,
                        &space2.acting,
                        &point,
                        &e,
                        config.fd_step,
                    )
                    .expect("generator derivative");
                    total += xi2[i] * space2.varpi.eval(&point, &[gen]);
                }
                out[0] = total;
                out
            },
            NESTED_OUTER_FD,
        )?[0];
        let residual = (d_term + pairing_derivative).abs();
        acc.push(
            residual,
            d_term.abs().max(pairing_derivative.abs()),
            x.as_slice(),
            "prequantum moment residual",
        );
    }
    Ok(acc.finish(
        format!("prequantum-moment[{}]", space.name),
        "check_prequantum_moment_condition",
        config.thresholds,
        config.seed,
    ))
}

/// The full prequantum axiom gate.
pub fn prequantum_axiom_gate(
    space: &PrequantumSpace,
    config: &GateConfig,
) -> Result<Vec<CheckReport>, CalcError> {
    Ok(vec![
        check_sampler(&space.carrier, config),
        check_reeb(space, config)?,
        check_varpi_invariance(space, config)?,
        check_prequantum_moment_condition(space, config)?,
    ])
}

// ---------------------------------------------------------------------------
// Base catalog
// ---------------------------------------------------------------------------

fn vec3(x: &DVector<f64>, offset: usize) -> Vector3<f64> {
    Vector3::new(x[offset], x[offset + 1], x[offset + 2])
}

/// Rotation action of SO3 on stacked 3-vectors.
fn so3_stacked_action(copies: usize) -> ActionFn {
    Arc::new(move |g: &GroupElement, x: &DVector<f64>| {
        let r = g.block(0);
        let mut out = DVector::zeros(3 * copies);
        for k in 0..copies {
            let piece = r * x.rows(3 * k, 3).into_owned();
            out.rows_mut(3 * k, 3).copy_from(&piece);
        }
        out
    })
}

/// Tangent bundle of the unit sphere with its canonical symplectic form
/// (fiber coordinate paired against base displacement) and angular-momentum
/// moment map for the rotation group.
pub fn tangent_sphere() -> HamiltonianSpace {
    let carrier = EmbeddedSpace::new(
        "TS2",
        6,
        4,
        Arc::new(|x: &DVector<f64>| {
            let r = vec3(x, 0);
            let p = vec3(x, 3);
            DVector::from_vec(vec![r.norm_squared() - 1.0, r.dot(&p)])
        }),
        Arc::new(|rng: &mut ChaCha8Rng| {
            let r = Vector3::new(rng::normal(rng), rng::normal(rng), rng::normal(rng)).normalize();
            let raw = Vector3::new(rng::normal(rng), rng::normal(rng), rng::normal(rng));
            let p = raw - r * r.dot(&raw);
            DVector::from_vec(vec![r.x, r.y, r.z, p.x, p.y, p.z])
        }),
    );
    let omega = KForm::new(
        "omega[TS2]",
        "TS2",
        6,
        2,
        Arc::new(|_x: &DVector<f64>, vs: &[DVector<f64>]| {
            let (vr, vp) = (vec3(&vs[0], 0), vec3(&vs[0], 3));
            let (wr, wp) = (vec3(&vs[1], 0), vec3(&vs[1], 3));
            vp.dot(&wr) - wp.dot(&vr)
        }),
    );
    let moment: MomentFn = Arc::new(|x: &DVector<f64>| {
        let r = vec3(x, 0);
        let p = vec3(x, 3);
        let m = r.cross(&p);
        DVector::from_vec(vec![m.x, m.y, m.z])
    });
    HamiltonianSpace::new(
        "TS2",
        carrier,
        Subgroup::full(GroupId::SO3),
        so3_stacked_action(2),
        omega,
        moment,
    )
}

/// Sphere of radius `ell` with the rotation-invariant area form scaled so
/// that the inclusion is the moment map.
pub fn sphere_orbit(ell: usize) -> HamiltonianSpace {
    assert!(ell >= 1, "the sphere radius must be a positive integer");
    let radius = ell as f64;
    let r2 = radius * radius;
    let name = format!("sphere({ell})");
    let carrier = EmbeddedSpace::new(
        name.clone(),
        3,
        2,
        Arc::new(move |x: &DVector<f64>| {
            DVector::from_vec(vec![x.norm_squared() - r2])
        }),
        Arc::new(move |rng: &mut ChaCha8Rng| {
            let g = Vector3::new(rng::normal(rng), rng::normal(rng), rng::normal(rng)).normalize()
                * radius;
            DVector::from_vec(vec![g.x, g.y, g.z])
        }),
    );
    let omega = KForm::new(
        format!("omega[{name}]"),
        name.clone(),
        3,
        2,
        Arc::new(move |x: &DVector<f64>, vs: &[DVector<f64>]| {
            let v = vec3(&vs[0], 0);
            let w = vec3(&vs[1], 0);
            -vec3(x, 0).dot(&v.cross(&w)) / r2
        }),
    );
    let moment: MomentFn = Arc::new(|x: &DVector<f64>| x.clone());
    HamiltonianSpace::new(
        name,
        carrier,
        Subgroup::full(GroupId::SO3),
        so3_stacked_action(1),
        omega,
        moment,
    )
}

/// The one-point space with the trivial action of `acting`.
pub fn trivial_space(acting: Subgroup) -> HamiltonianSpace {
    let h = acting.dim();
    let carrier = EmbeddedSpace::point(format!("point[{}]", acting.label()));
    let omega = KForm::new(
        "omega[point]",
        carrier.name(),
        0,
        2,
        Arc::new(|_: &DVector<f64>, _: &[DVector<f64>]| 0.0),
    );
    HamiltonianSpace::new(
        carrier.name().to_string(),
        carrier,
        acting,
        Arc::new(|_: &GroupElement, x: &DVector<f64>| x.clone()),
        omega,
        Arc::new(move |_: &DVector<f64>| DVector::zeros(h)),
    )
}

/// Restrict the action of a Hamiltonian space to a subgroup of the same
/// catalog group; the moment map is composed with the dual restriction.
pub fn restrict_action(space: &HamiltonianSpace, sub: Subgroup) -> HamiltonianSpace {
    assert_eq!(
        sub.ambient(),
        space.acting.ambient(),
        "restriction must stay inside the same catalog group"
    );
    let old_basis = space.acting.basis().clone();
    let new_basis = sub.basis().clone();
    let ambient = space.acting.ambient().clone();
    let moment = space.moment.clone();
    let restricted: MomentFn = Arc::new(move |x: &DVector<f64>| {
        let ambient_mu = &old_basis * moment(x);
        let mu = CoalgebraElement::from_coords(&ambient, ambient_mu)
            .expect("basis produces ambient coordinates");
        new_basis.transpose() * mu.coords()
    });
    HamiltonianSpace::new(
        format!("{}|{}", space.name, sub.label()),
        space.carrier.clone(),
        sub,
        space.action.clone(),
        space.omega.clone(),
        restricted,
    )
}

/// The unit-norm isotropic complex frame carrier: points `a + ib` in C³
/// with `|a|² + |b|² = 1`, `|a| = |b|`, `a ⟂ b`.  Rotations act diagonally,
/// the circle acts by phase, and the invariant 1-form is `Im⟨ξ, dξ⟩`.
pub fn prequantized_sphere() -> PrequantumSpace {
    let carrier = EmbeddedSpace::new(
        "frame-circle",
        6,
        3,
        Arc::new(|x: &DVector<f64>| {
            let a = vec3(x, 0);
            let b = vec3(x, 3);
            DVector::from_vec(vec![
                a.norm_squared() + b.norm_squared() - 1.0,
                a.norm_squared() - b.norm_squared(),
                2.0 * a.dot(&b),
            ])
        }),
        Arc::new(|rng: &mut ChaCha8Rng| {
            let (u1, u2, _) = random_frame(rng);
            frame_to_carrier(&u1, &u2)
        }),
    );
    let varpi = KForm::new(
        "varpi[frame-circle]",
        "frame-circle",
        6,
        1,
        Arc::new(|x: &DVector<f64>, vs: &[DVector<f64>]| {
            let a = vec3(x, 0);
            let b = vec3(x, 3);
            let va = vec3(&vs[0], 0);
            let vb = vec3(&vs[0], 3);
            a.dot(&vb) - b.dot(&va)
        }),
    )
    .with_exact_d(Arc::new(|_x: &DVector<f64>, vs: &[DVector<f64>]| {
        let (va, vb) = (vec3(&vs[0], 0), vec3(&vs[0], 3));
        let (wa, wb) = (vec3(&vs[1], 0), vec3(&vs[1], 3));
        2.0 * (va.dot(&wb) - vb.dot(&wa))
    }));
    PrequantumSpace::new(
        "frame-circle",
        carrier,
        Subgroup::full(GroupId::SO3),
        so3_stacked_action(2),
        varpi,
        circle_phase_action(),
    )
}

/// Phase rotation `ξ ↦ e^{iθ} ξ` on `[a; b]` coordinates.
pub fn circle_phase_action() -> CircleActionFn {
    Arc::new(|theta: f64, x: &DVector<f64>| {
        let n = x.len() / 2;
        let (s, c) = theta.sin_cos();
        let a = x.rows(0, n).into_owned();
        let b = x.rows(n, n).into_owned();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&(&a * c - &b * s));
        out.rows_mut(n, n).copy_from(&(&a * s + &b * c));
        out
    })
}

/// Seeded random oriented orthonormal frame `(u1, u2, u3 = u1 × u2)`.
pub fn random_frame(rng: &mut ChaCha8Rng) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let u1 = Vector3::new(rng::normal(rng), rng::normal(rng), rng::normal(rng)).normalize();
    let raw = Vector3::new(rng::normal(rng), rng::normal(rng), rng::normal(rng));
    let u2 = (raw - u1 * u1.dot(&raw)).normalize();
    (u1, u2, u1.cross(&u2))
}

/// Carrier coordinates of the isotropic frame vector `(u1 − i u2)/√2`.
pub fn frame_to_carrier(u1: &Vector3<f64>, u2: &Vector3<f64>) -> DVector<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![
        u1.x * s,
        u1.y * s,
        u1.z * s,
        -u2.x * s,
        -u2.y * s,
        -u2.z * s,
    ])
}

/// Closed-form moment map of [`prequantized_sphere`]: `Φ(a + ib) = −2 a × b`.
pub fn frame_moment(x: &DVector<f64>) -> DVector<f64> {
    let a = vec3(x, 0);
    let b = vec3(x, 3);
    let m = a.cross(&b) * -2.0;
    DVector::from_vec(vec![m.x, m.y, m.z])
}

/// Circle carrier `{|z| = 1}` with a trivial action of `acting`; the
/// 1-form is the angle form, so the derived moment is zero.
pub fn circle_space(acting: Subgroup) -> PrequantumSpace {
    let carrier = EmbeddedSpace::new(
        "circle",
        2,
        1,
        Arc::new(|x: &DVector<f64>| DVector::from_vec(vec![x.norm_squared() - 1.0])),
        Arc::new(|rng: &mut ChaCha8Rng| {
            let t = rng::uniform(rng, -std::f64::consts::PI, std::f64::consts::PI);
            DVector::from_vec(vec![t.cos(), t.sin()])
        }),
    );
    let varpi = KForm::new(
        "varpi[circle]",
        "circle",
        2,
        1,
        Arc::new(|x: &DVector<f64>, vs: &[DVector<f64>]| x[0] * vs[0][1] - x[1] * vs[0][0]),
    )
    .with_exact_d(Arc::new(|_x: &DVector<f64>, vs: &[DVector<f64>]| {
        2.0 * (vs[0][0] * vs[1][1] - vs[0][1] * vs[1][0])
    }));
    PrequantumSpace::new(
        "circle",
        carrier,
        acting,
        Arc::new(|_: &GroupElement, x: &DVector<f64>| x.clone()),
        varpi,
        Arc::new(|theta: f64, x: &DVector<f64>| {
            let (s, c) = theta.sin_cos();
            DVector::from_vec(vec![c * x[0] - s * x[1], s * x[0] + c * x[1]])
        }),
    )
}

/// Circle-bundle version of [`tangent_sphere`]: carrier `(r, p, z)` with
/// `ϖ = ⟨p, dr⟩ + dθ`, rotations acting on `(r, p)` and the circle on `z`.
pub fn prequantized_tangent_sphere() -> PrequantumSpace {
    let carrier = EmbeddedSpace::new(
        "TS2-circle",
        8,
        5,
        Arc::new(|x: &DVector<f64>| {
            let r = vec3(x, 0);
            let p = vec3(x, 3);
            let z = (x[6], x[7]);
            DVector::from_vec(vec![
                r.norm_squared() - 1.0,
                r.dot(&p),
                z.0 * z.0 + z.1 * z.1 - 1.0,
            ])
        }),
        Arc::new(|rng: &mut ChaCha8Rng| {
            let r = Vector3::new(rng::normal(rng), rng::normal(rng), rng::normal(rng)).normalize();
            let raw = Vector3::new(rng::normal(rng), rng::normal(rng), rng::normal(rng));
            let p = raw - r * r.dot(&raw);
            let t = rng::uniform(rng, -std::f64::consts::PI, std::f64::consts::PI);
            DVector::from_vec(vec![r.x, r.y, r.z, p.x, p.y, p.z, t.cos(), t.sin()])
        }),
    );
    let varpi = KForm::new(
        "varpi[TS2-circle]",
        "TS2-circle",
        8,
        1,
        Arc::new(|x: &DVector<f64>, vs: &[DVector<f64>]| {
            let p = vec3(x, 3);
            let vr = vec3(&vs[0], 0);
            p.dot(&vr) + x[6] * vs[0][7] - x[7] * vs[0][6]
        }),
    )
    .with_exact_d(Arc::new(|_x: &DVector<f64>, vs: &[DVector<f64>]| {
        let (vr, vp) = (vec3(&vs[0], 0), vec3(&vs[0], 3));
        let (wr, wp) = (vec3(&vs[1], 0), vec3(&vs[1], 3));
        vp.dot(&wr) - wp.dot(&vr) + 2.0 * (vs[0][6] * vs[1][7] - vs[0][7] * vs[1][6])
    }));
    let action: ActionFn = Arc::new(|g: &GroupElement, x: &DVector<f64>| {
        let r = g.block(0);
        let mut out = x.clone();
        let new_r = r * vec3(x, 0);
        let new_p = r * vec3(x, 3);
        for i in 0..3 {
            out[i] = new_r[i];
            out[3 + i] = new_p[i];
        }
        out
    });
    PrequantumSpace::new(
        "TS2-circle",
        carrier,
        Subgroup::full(GroupId::SO3),
        action,
        varpi,
        Arc::new(|theta: f64, x: &DVector<f64>| {
            let (s, c) = theta.sin_cos();
            let mut out = x.clone();
            out[6] = c * x[6] - s * x[7];
            out[7] = s * x[6] + c * x[7];
            out
        }),
    )
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(label: &str) -> GateConfig {
        GateConfig::new(42, label).with_samples(50)
    }

    #[test]
    fn rotation_generator_at_the_first_pole() {
        // Generator of rotations about e3 at e1 points along e2.
        let sphere = sphere_orbit(1);
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let xi = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let v = infinitesimal_action(&sphere.action, &sphere.acting, &x, &xi, 1e-5).unwrap();
        let expected = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!((v - expected).amax() < 1e-10);
    }

    #[test]
    fn tangent_sphere_passes_the_axiom_gate() {
        let space = tangent_sphere();
        for report in axiom_gate(&space, &cfg("ts2")).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn sphere_orbits_pass_the_axiom_gate() {
        for ell in [1, 2, 3] {
            let space = sphere_orbit(ell);
            for report in axiom_gate(&space, &cfg(&format!("sphere{ell}"))).unwrap() {
                assert!(report.is_pass(), "{}", report.summary_line());
            }
        }
    }

    #[test]
    fn negated_moment_fails_with_twice_the_omega_term() {
        let good = tangent_sphere();
        let moment = good.moment_fn().clone();
        let bad = HamiltonianSpace::new(
            "TS2-negated",
            good.carrier().clone(),
            good.acting().clone(),
            good.action().clone(),
            good.omega().clone(),
            Arc::new(move |x: &DVector<f64>| -moment(x)),
        );
        let report = check_moment_condition(&bad, &cfg("ts2-neg")).unwrap();
        assert_eq!(report.verdict, crate::report::Verdict::Fail);
        // Flipping the moment turns ω + dΦ = 0 into ω − dΦ = 2ω.
        assert!(report.max_residual > 0.1, "{}", report.summary_line());
    }

    #[test]
    fn restricted_action_still_passes_and_projects_the_moment() {
        let space = restrict_action(&sphere_orbit(1), Subgroup::so2_in_so3());
        let x = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let mu = space.moment(&x);
        assert_eq!(mu.len(), 1);
        assert_abs_diff_eq!(mu[0], 0.8, epsilon = 1e-12);
        for report in axiom_gate(&space, &cfg("sphere-res")).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn cardinal_report_at_the_zero_section() {
        // At (e1, 0): moment rank 2, stabilizer of dimension 1.
        let space = tangent_sphere();
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let report = cardinal_checks_at(&space, &x, 1e-5).unwrap();
        assert_eq!(report.tangent_dim, 4);
        assert_eq!(report.moment_rank, 2);
        assert_eq!(report.stabilizer_dim, 1);
        assert!(report.kernel_vs_omega_orthogonal < 1e-6);
        assert!(report.image_vs_annihilator < 1e-6);
    }

    #[test]
    fn cardinal_report_at_a_generic_tangent_vector() {
        let space = tangent_sphere();
        let mut rng = rng::stream(7, &["spaces", "cardinal"]);
        let x = space.carrier().sample(&mut rng);
        let report = cardinal_checks_at(&space, &x, 1e-5).unwrap();
        // Locally free generic point: full moment rank, no stabilizer.
        assert_eq!(report.moment_rank, 3);
        assert_eq!(report.stabilizer_dim, 0);
        assert!(report.kernel_vs_omega_orthogonal < 1e-6);
        assert!(report.image_vs_annihilator < 1e-6);
    }

    #[test]
    fn trivial_space_gates_are_vacuous_but_green() {
        let space = trivial_space(Subgroup::so2_in_so3());
        for report in axiom_gate(&space, &cfg("point")).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn frame_carrier_moment_is_the_third_frame_vector() {
        let space = prequantized_sphere();
        let mut rng = rng::stream(11, &["spaces", "frame"]);
        for _ in 0..10 {
            let (u1, u2, u3) = random_frame(&mut rng);
            let x = frame_to_carrier(&u1, &u2);
            assert!(space.carrier().residual_max(&x) < 1e-12);
            let derived = prequantum_moment(&space, &x, 1e-5).unwrap();
            let closed = frame_moment(&x);
            assert!((derived.clone() - &closed).amax() < 1e-9);
            assert!((derived - DVector::from_vec(vec![u3.x, u3.y, u3.z])).amax() < 1e-9);
        }
    }

    #[test]
    fn prequantum_gates_pass_on_the_catalog() {
        let frame = prequantized_sphere();
        for report in prequantum_axiom_gate(&frame, &cfg("frame")).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
        let circle = circle_space(Subgroup::so2_in_so3());
        for report in prequantum_axiom_gate(&circle, &cfg("circle")).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
        let ts2 = prequantized_tangent_sphere();
        for report in prequantum_axiom_gate(&ts2, &cfg("ts2-circle")).unwrap() {
            assert!(report.is_pass(), "{}", report.summary_line());
        }
    }

    #[test]
    fn circle_space_moment_vanishes() {
        let circle = circle_space(Subgroup::so2_in_so3());
        let mut rng = rng::stream(13, &["spaces", "circle-moment"]);
        let x = circle.carrier().sample(&mut rng);
        let mu = prequantum_moment(&circle, &x, 1e-5).unwrap();
        assert!(mu.amax() < 1e-12);
    }

    #[test]
    fn level_set_accepts_its_sampler_and_reports_violations() {
        // Zero level of the third moment component on the unit sphere.
        let level = LevelSet::new(
            "equator",
            "sphere(1)",
            Arc::new(|x: &DVector<f64>| DVector::from_vec(vec![x[2]])),
            Arc::new(|rng: &mut ChaCha8Rng| {
                let t = rng::uniform(rng, -std::f64::consts::PI, std::f64::consts::PI);
                DVector::from_vec(vec![t.cos(), t.sin(), 0.0])
            }),
        );
        let mut rng = rng::stream(17, &["spaces", "level"]);
        assert!(level.sampler_violation(&mut rng, 100) < 1e-12);
        assert!(!level.contains(&DVector::from_vec(vec![0.0, 0.8, 0.6])));
    }
}
