//! Descent checks for forms on level sets: gauge pairs, the pullback
//! criterion, and the smooth-division probe.
//!
//! A form on a level set descends to the orbit quotient exactly when any
//! two plots with the same composite into the quotient pull it back to the
//! same domain form.  Two plots `P, Q : U → level` project to the same
//! quotient plot precisely when they differ by a pointwise gauge: `Q(u) =
//! R(u)(P(u))` for some map `R : U → G`.  When `R` can always be chosen
//! smooth, checking the criterion reduces to checking it on pairs of this
//! shape — which is what this module generates and tests:
//!
//! * [`generate_gauge_pairs`] manufactures `(P, R, Q)` triples with `R` a
//!   seeded real-analytic curve into a chosen subgroup, so `Q` is exactly
//!   as smooth as `P`.
//! * [`souriau_check`] pulls a form back along both plots of every pair
//!   and aggregates the residual `|P*α − Q*α|` into a [`DescentVerdict`].
//!   When the acting group's moment map is available,
//!   [`souriau_check_with_moment`] additionally reports the three terms
//!   that make the cancellation work: for `Q = R·P` and an invariant
//!   2-form `ω` with moment `Φ`,
//!
//!   ```text
//!   Q*ω(δu, δ′u) − P*ω(δu, δ′u) = ⟨δμ, Z′⟩ − ⟨δ′μ, Z⟩ + ⟨μ, [Z′, Z]⟩,
//!   ```
//!
//!   where `μ(u) = Φ(P(u))` and `Z = R⁻¹δR` is the left logarithmic
//!   derivative of the gauge.  On the zero level every term vanishes
//!   separately; each gets its own report.
//!
//! The converse failure mode is probed rather than proved: when the gauge
//! exists pointwise but cannot be chosen continuously, the moved plot can
//! carry different pullbacks.  [`smooth_division_probe`] reconstructs the
//! unique pointwise gauge on a grid straddling the suspect parameter and
//! reports its worst jump between neighbouring grid points.  The stock
//! example is the pair of curves flattening to all orders at `0`,
//!
//! ```text
//! P(u) = (0, e^{−1/u²}),    Q(u) = (0, sign(u) · e^{−1/u²}),
//! ```
//!
//! which agree orbitwise under planar rotations while the reconstructed
//! angle jumps by π across the origin ([`flat_exponential_pair`], with
//! [`derivative_flatness`] certifying the flatness side of the story).

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{
    plot_derivative_exact_or_fd, pullback, CalcError, KForm, Plot, PointFn,
};
use crate::lie::{
    bracket, left_log_derivative, log_derivative, AlgebraElement, GroupElement, GroupId, LieError,
    Subgroup,
};
use crate::numeric;
use crate::report::{CheckReport, ResidualAccumulator, Thresholds, Verdict, Witness};
use crate::rng;
use crate::spaces::{ActionFn, MomentFn};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum DescentError {
    #[error("gauge pair generation needs at least one base plot")]
    EmptyCatalog,
    #[error("stabilizer is nontrivial at grid point u = {u:.6}: {detail}")]
    NonFreePoint { u: f64, detail: String },
    #[error("plots leave a common orbit at u = {u:.6} (residual {residual:.3e})")]
    OrbitMismatch { u: f64, residual: f64 },
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

// ---------------------------------------------------------------------------
// Gauge pairs
// ---------------------------------------------------------------------------

/// A base plot `P`, a group-valued curve `R`, and the moved plot
/// `Q(u) = R(u)(P(u))`.  Both plots land in the same carrier, and by
/// construction project to the same plot of the orbit quotient.
#[derive(Clone)]
pub struct GaugePair {
    group: GroupId,
    p: Plot,
    r: Plot,
    q: Plot,
}

impl std::fmt::Debug for GaugePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaugePair")
            .field("group", &self.group.to_string())
            .field("p", &self.p.name())
            .field("r", &self.r.name())
            .finish()
    }
}

impl GaugePair {
    /// Assemble a pair from a base plot and a gauge curve; the moved plot
    /// is derived by applying the action pointwise.  `r` must take values
    /// in the flattened elements of `group`.
    pub fn from_parts(p: Plot, group: GroupId, r: Plot, action: &ActionFn) -> GaugePair {
        assert_eq!(
            r.ambient_dim(),
            group.ambient_dim(),
            "gauge curve must land in the flattened group"
        );
        let action = action.clone();
        let (pm, rm) = (p.clone(), r.clone());
        let g = group.clone();
        let map: PointFn = Arc::new(move |u: &DVector<f64>| {
            let rel = GroupElement::from_flat(&g, &rm.eval(u));
            action(&rel, &pm.eval(u))
        });
        let q = Plot::new(
            format!("{}({})", r.name(), p.name()),
            p.space(),
            p.ambient_dim(),
            p.domain_box().to_vec(),
            map,
        );
        GaugePair { group, p, r, q }
    }

    pub fn group(&self) -> &GroupId {
        &self.group
    }

    pub fn p(&self) -> &Plot {
        &self.p
    }

    pub fn r(&self) -> &Plot {
        &self.r
    }

    pub fn q(&self) -> &Plot {
        &self.q
    }
}

/// Seeded real-analytic curve into a subgroup: coefficientwise
/// trigonometric polynomials of degree ≤ 3 with amplitude ≤ 2 in each
/// subgroup coordinate, exponentiated.  Analyticity keeps the moved plot
/// of a gauge pair exactly as smooth as its base plot.
fn gauge_curve(
    sub: &Subgroup,
    domain_box: Vec<(f64, f64)>,
    index: usize,
    seed: u64,
) -> Plot {
    let dim = sub.dim();
    let domain_dim = domain_box.len();
    let mut rng = rng::stream(seed, &["descent", "gauge-curve", &index.to_string()]);
    // Per subgroup coordinate: a direction through the domain and 7
    // coefficients (constant + 3 cos + 3 sin), each bounded by 2/7.
    let mut directions = Vec::with_capacity(dim);
    let mut coefficients = Vec::with_capacity(dim);
    for _ in 0..dim {
        let d = rng::normal_vector(&mut rng, domain_dim);
        let n = d.norm();
        directions.push(if n > 0.0 { d / n } else { d });
        let c: Vec<f64> = (0..7)
            .map(|_| rng::uniform(&mut rng, -2.0 / 7.0, 2.0 / 7.0))
            .collect();
        coefficients.push(c);
    }
    let ambient = sub.ambient().clone();
    let sub = sub.clone();
    let map: PointFn = Arc::new(move |u: &DVector<f64>| {
        let tau = DVector::from_iterator(
            dim,
            directions.iter().zip(coefficients.iter()).map(|(d, c)| {
                let s = d.dot(u);
                let mut t = c[0];
                for k in 1..4 {
                    t += c[2 * k - 1] * (k as f64 * s).cos() + c[2 * k] * (k as f64 * s).sin();
                }
                t
            }),
        );
        sub.exp(&tau)
            .expect("coordinate count matches the subgroup dimension")
            .flatten()
    });
    Plot::new(
        format!("gauge-curve[{index}]"),
        format!("group({ambient})"),
        ambient.ambient_dim(),
        domain_box,
        map,
    )
}

/// Build `count` gauge pairs over a catalog of base plots.  Base plots are
/// cycled through in order; each pair gets an independent seeded gauge
/// curve into `sub`, moved by `action`.
pub fn generate_gauge_pairs(
    catalog: &[Plot],
    sub: &Subgroup,
    action: &ActionFn,
    count: usize,
    seed: u64,
) -> Result<Vec<GaugePair>, DescentError> {
    if catalog.is_empty() {
        return Err(DescentError::EmptyCatalog);
    }
    Ok((0..count)
        .map(|i| {
            let p = catalog[i % catalog.len()].clone();
            let r = gauge_curve(sub, p.domain_box().to_vec(), i, seed);
            GaugePair::from_parts(p, sub.ambient().clone(), r, action)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// The pullback criterion
// ---------------------------------------------------------------------------

/// Sampling plan for [`souriau_check`].
#[derive(Debug, Clone)]
pub struct DescentConfig {
    pub seed: u64,
    /// Domain points drawn per gauge pair.
    pub samples: usize,
    /// Tangent tuples drawn per domain point.
    pub tuples: usize,
    /// Margin kept from the domain boundary.
    pub margin: f64,
    pub fd_step: f64,
    pub thresholds: Thresholds,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            seed: 42,
            samples: 10,
            tuples: 2,
            margin: 0.05,
            fd_step: numeric::DEFAULT_FD_STEP,
            thresholds: Thresholds::default(),
        }
    }
}

impl DescentConfig {
    pub fn new(seed: u64) -> Self {
        DescentConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn with_samples(mut self, samples: usize, tuples: usize) -> Self {
        self.samples = samples;
        self.tuples = tuples;
        self
    }
}

/// Aggregated outcome of the pullback criterion over a family of gauge
/// pairs.  `Fail` always carries the worst witness; `Approx` marks
/// residuals between the two thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentVerdict {
    /// Name of the form that was tested.
    pub form: String,
    pub pairs: usize,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    /// Magnitude of the pullback values compared.
    pub scale: f64,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Per-term cancellation reports (moment variant only).
    pub cancellation: Vec<CheckReport>,
}

impl DescentVerdict {
    pub fn is_pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{:7} descent[{}]  max={:.3e} mean={:.3e} over {} pairs / {} samples",
            self.verdict.to_string(),
            self.form,
            self.max_residual,
            self.mean_residual,
            self.pairs,
            self.samples
        )
    }
}

/// The three gauge-difference terms at one domain point and tangent pair:
/// `⟨δμ, Z′⟩`, `⟨δ′μ, Z⟩`, `⟨μ, [Z′, Z]⟩`, with `μ(u) = Φ(P(u))` lifted to
/// ambient algebra-dual coordinates and `Z` the left logarithmic
/// derivative of the gauge curve.
fn gauge_terms(
    pair: &GaugePair,
    acting: &Subgroup,
    moment: &MomentFn,
    u: &DVector<f64>,
    du1: &DVector<f64>,
    du2: &DVector<f64>,
    fd_step: f64,
) -> Result<[f64; 3], DescentError> {
    let basis = acting.basis();
    let mu = |v: &DVector<f64>| basis * moment(&pair.p.eval(v));
    let mu0 = mu(u);
    let dmu1 = numeric::richardson_derivative(|t| mu(&(u + du1 * t)), fd_step).value;
    let dmu2 = numeric::richardson_derivative(|t| mu(&(u + du2 * t)), fd_step).value;
    let q = GroupElement::from_flat(&pair.group, &pair.r.eval(u));
    let dq1 = plot_derivative_exact_or_fd(&pair.r, u, du1, fd_step)?;
    let dq2 = plot_derivative_exact_or_fd(&pair.r, u, du2, fd_step)?;
    let (z1, _) = left_log_derivative(&q, &dq1);
    let (z2, _) = left_log_derivative(&q, &dq2);
    let t1 = dmu1.dot(z2.coords());
    let t2 = dmu2.dot(z1.coords());
    let t3 = mu0.dot(bracket(&z2, &z1)?.coords());
    Ok([t1, t2, t3])
}

fn souriau_core(
    form: &KForm,
    pairs: &[GaugePair],
    moment: Option<(&Subgroup, &MomentFn)>,
    config: &DescentConfig,
) -> Result<DescentVerdict, DescentError> {
    let mut acc = ResidualAccumulator::new();
    let mut term_accs = [
        ResidualAccumulator::new(),
        ResidualAccumulator::new(),
        ResidualAccumulator::new(),
    ];
    let with_terms = moment.is_some() && form.arity() == 2;
    for (idx, pair) in pairs.iter().enumerate() {
        let pb_p = pullback(form, &pair.p, config.fd_step)?;
        let pb_q = pullback(form, &pair.q, config.fd_step)?;
        let mut rng = rng::stream(config.seed, &["descent", "souriau", &idx.to_string()]);
        let domain_dim = pair.p.domain_dim();
        for _ in 0..config.samples {
            let u = pair.p.sample_domain(&mut rng, config.margin);
            for _ in 0..config.tuples {
                let tangents: Vec<DVector<f64>> = (0..form.arity())
                    .map(|_| rng::normal_vector(&mut rng, domain_dim))
                    .collect();
                let a = pb_p.eval(&u, &tangents)?;
                let b = pb_q.eval(&u, &tangents)?;
                acc.push(
                    (a - b).abs(),
                    a.abs().max(b.abs()),
                    u.as_slice(),
                    &format!("pair {idx}: base pullback {a:.6e}, moved pullback {b:.6e}"),
                );
                if with_terms {
                    let (acting, m) = moment.expect("checked above");
                    let terms = gauge_terms(
                        pair,
                        acting,
                        m,
                        &u,
                        &tangents[0],
                        &tangents[1],
                        config.fd_step,
                    )?;
                    for (k, t) in terms.iter().enumerate() {
                        term_accs[k].push(t.abs(), t.abs(), u.as_slice(), &format!("pair {idx}"));
                    }
                }
            }
        }
    }
    let cancellation = if with_terms {
        let names = [
            "gauge-term <dmu, Z2>",
            "gauge-term <dmu, Z1>",
            "gauge-term <mu, [Z2, Z1]>",
        ];
        term_accs
            .into_iter()
            .zip(names)
            .map(|(a, n)| a.finish(n, "souriau_check", config.thresholds, config.seed))
            .collect()
    } else {
        Vec::new()
    };
    let core = acc.finish(
        format!("descent[{}]", form.name()),
        "souriau_check",
        config.thresholds,
        config.seed,
    );
    Ok(DescentVerdict {
        form: form.name().to_string(),
        pairs: pairs.len(),
        samples: core.samples,
        max_residual: core.max_residual,
        mean_residual: core.mean_residual,
        scale: core.scale,
        verdict: core.verdict,
        witness: core.witness,
        cancellation,
    })
}

/// Test whether `form` pulls back equally along both plots of every gauge
/// pair.  This is the checkable form of the descent criterion: descent to
/// the quotient requires the residual to vanish for every pair.
pub fn souriau_check(
    form: &KForm,
    pairs: &[GaugePair],
    config: &DescentConfig,
) -> Result<DescentVerdict, DescentError> {
    souriau_core(form, pairs, None, config)
}

/// [`souriau_check`] for an invariant 2-form whose moment map is at hand:
/// additionally reports the three gauge-difference terms, which must each
/// vanish on the zero level of the moment map.
pub fn souriau_check_with_moment(
    form: &KForm,
    pairs: &[GaugePair],
    acting: &Subgroup,
    moment: &MomentFn,
    config: &DescentConfig,
) -> Result<DescentVerdict, DescentError> {
    souriau_core(form, pairs, Some((acting, moment)), config)
}

// ---------------------------------------------------------------------------
// Smooth-division probe
// ---------------------------------------------------------------------------

/// Pointwise gauge solver for the probe: names the action and knows how to
/// reconstruct the unique relating element on free orbits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeSolver {
    /// Rotations of the plane; the gauge is the angle difference, singular
    /// exactly at the origin (full stabilizer).
    PlanarRotation,
    /// Rotations acting on flattened orthonormal 3-frames; the action is
    /// free and the gauge is `F_q · F_pᵀ`.
    FrameRotation,
}

impl GaugeSolver {
    fn group(&self) -> GroupId {
        match self {
            GaugeSolver::PlanarRotation => GroupId::SO2,
            GaugeSolver::FrameRotation => GroupId::SO3,
        }
    }

    /// How far the two values are from lying on one orbit.
    fn orbit_residual(&self, p: &DVector<f64>, q: &DVector<f64>) -> f64 {
        match self {
            GaugeSolver::PlanarRotation => (p.norm() - q.norm()).abs(),
            GaugeSolver::FrameRotation => {
                let pe = GroupElement::from_flat(&GroupId::SO3, p);
                let qe = GroupElement::from_flat(&GroupId::SO3, q);
                pe.relation_residual().max(qe.relation_residual())
            }
        }
    }

    fn solve(
        &self,
        u: f64,
        p: &DVector<f64>,
        q: &DVector<f64>,
        free_tol: f64,
    ) -> Result<GroupElement, DescentError> {
        match self {
            GaugeSolver::PlanarRotation => {
                if p.norm() < free_tol || q.norm() < free_tol {
                    return Err(DescentError::NonFreePoint {
                        u,
                        detail: format!(
                            "planar radius {:.3e} below the free-orbit cutoff {free_tol:.1e}",
                            p.norm().min(q.norm())
                        ),
                    });
                }
                let theta = wrap_angle(q[1].atan2(q[0]) - p[1].atan2(p[0]));
                Ok(AlgebraElement::from_coords(&GroupId::SO2, DVector::from_vec(vec![theta]))
                    .expect("SO2 has one algebra coordinate")
                    .exp())
            }
            GaugeSolver::FrameRotation => {
                let pe = GroupElement::from_flat(&GroupId::SO3, p);
                let qe = GroupElement::from_flat(&GroupId::SO3, q);
                Ok(qe
                    .multiply(&pe.inverse())
                    .expect("both elements flattened from SO3"))
            }
        }
    }

    /// Rotation-angle distance between two reconstructed gauges.
    fn distance(&self, a: &GroupElement, b: &GroupElement) -> f64 {
        let rel = a
            .inverse()
            .multiply(b)
            .expect("gauges live in the same group");
        let m = rel.block(0);
        match self {
            GaugeSolver::PlanarRotation => m[(1, 0)].atan2(m[(0, 0)]).abs(),
            GaugeSolver::FrameRotation => {
                let cos = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
                cos.acos()
            }
        }
    }
}

fn wrap_angle(t: f64) -> f64 {
    let mut t = t % TAU;
    if t > PI {
        t -= TAU;
    } else if t < -PI {
        t += TAU;
    }
    t
}

/// Grid plan for [`smooth_division_probe`].  The grid straddles `u = 0` at
/// half-mesh offsets `±(k + ½)·mesh`, so the suspect parameter itself is
/// never evaluated and jumps across it are still seen by adjacent points.
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub mesh: f64,
    /// Grid points on each side of the origin.
    pub points: usize,
    /// Precondition tolerance: both plots must stay on one orbit.
    pub orbit_tol: f64,
    /// Values smaller than this count as stabilized (excluded, reported).
    pub free_tol: f64,
    /// Thresholds on the max adjacent jump of the reconstructed gauge.
    pub jump_pass: f64,
    pub jump_fail: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            mesh: 1e-3,
            points: 100,
            orbit_tol: 1e-6,
            free_tol: 1e-12,
            jump_pass: 1e-1,
            jump_fail: 1.0,
        }
    }
}

/// Reconstruct the pointwise gauge `R(u)` with `Q(u) = R(u)(P(u))` on a
/// grid around `u = 0` and report its largest jump between neighbouring
/// solved grid points.  A smooth gauge keeps the jump at mesh scale; a
/// gauge that exists pointwise but not continuously shows up as an O(1)
/// jump.  Grid points with nontrivial stabilizer are excluded from the
/// statistic and counted in the report notes.
pub fn smooth_division_probe(
    p: &Plot,
    q: &Plot,
    solver: GaugeSolver,
    config: &ProbeConfig,
) -> Result<CheckReport, DescentError> {
    if p.domain_dim() != 1 || q.domain_dim() != 1 {
        return Err(DescentError::Calc(CalcError::DomainMismatch(
            "smooth-division probe needs one-parameter plots".to_string(),
        )));
    }
    let reach = (config.points as f64 - 0.5) * config.mesh;
    let (lo, hi) = p.domain_box()[0];
    if -reach < lo || reach > hi {
        return Err(DescentError::Calc(CalcError::DomainMismatch(format!(
            "probe grid [±{reach:.3}] exceeds the plot domain [{lo}, {hi}]"
        ))));
    }
    let mut grid = Vec::with_capacity(2 * config.points);
    for k in (0..config.points).rev() {
        grid.push(-(k as f64 + 0.5) * config.mesh);
    }
    for k in 0..config.points {
        grid.push((k as f64 + 0.5) * config.mesh);
    }
    let mut solved: Vec<(f64, GroupElement)> = Vec::with_capacity(grid.len());
    let mut excluded = 0usize;
    for &u in &grid {
        let uv = DVector::from_vec(vec![u]);
        let pv = p.eval(&uv);
        let qv = q.eval(&uv);
        let residual = solver.orbit_residual(&pv, &qv);
        if residual > config.orbit_tol {
            return Err(DescentError::OrbitMismatch { u, residual });
        }
        match solver.solve(u, &pv, &qv, config.free_tol) {
            Ok(g) => solved.push((u, g)),
            Err(DescentError::NonFreePoint { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let mut acc = ResidualAccumulator::new();
    for w in solved.windows(2) {
        let jump = solver.distance(&w[0].1, &w[1].1);
        acc.push(
            jump,
            PI,
            &[w[0].0, w[1].0],
            &format!("gauge jump between u = {:.4} and u = {:.4}", w[0].0, w[1].0),
        );
    }
    let mut report = acc.finish(
        format!("gauge-continuity[{} vs {}]", p.name(), q.name()),
        "smooth_division_probe",
        Thresholds::new(config.jump_pass, config.jump_fail),
        0,
    );
    report.notes.push(format!(
        "grid: {} points at mesh {:.1e}, {} excluded as stabilized",
        grid.len(),
        config.mesh,
        excluded
    ));
    report.notes.push(format!("group: {}", solver.group()));
    Ok(report)
}

// ---------------------------------------------------------------------------
// Flatness stencils
// ---------------------------------------------------------------------------

/// Central-difference estimates of `|f⁽ᵏ⁾(at)|` for `k = 1..=order`
/// (`order ≤ 3`), each reduced to the max-abs over components.  Used to
/// certify that a one-parameter plot is flat to the given order at a
/// point, independently of the probe machinery.
pub fn derivative_flatness(plot: &Plot, at: f64, h: f64, order: usize) -> Vec<f64> {
    assert_eq!(plot.domain_dim(), 1, "flatness stencils need a 1d domain");
    assert!((1..=3).contains(&order), "orders 1..=3 are supported");
    let f = |t: f64| plot.eval(&DVector::from_vec(vec![at + t]));
    let (fm2, fm1, f0, fp1, fp2) = (f(-2.0 * h), f(-h), f(0.0), f(h), f(2.0 * h));
    let d1 = (&fp1 - &fm1) / (2.0 * h);
    let d2 = (&fp1 - 2.0 * &f0 + &fm1) / (h * h);
    let d3 = (&fp2 - 2.0 * &fp1 + 2.0 * &fm1 - &fm2) / (2.0 * h * h * h);
    [d1, d2, d3]
        .iter()
        .take(order)
        .map(numeric::max_abs)
        .collect()
}

/// The classic non-strict pair under planar rotations: both curves flatten
/// to all orders at `u = 0`, both trace the same orbits, yet the pointwise
/// gauge relating them must jump by π across the origin.
pub fn flat_exponential_pair() -> (Plot, Plot) {
    let bump = |u: f64| {
        if u == 0.0 {
            0.0
        } else {
            (-1.0 / (u * u)).exp()
        }
    };
    let p = Plot::new(
        "flat-exponential",
        "plane",
        2,
        vec![(-1.0, 1.0)],
        Arc::new(move |u: &DVector<f64>| DVector::from_vec(vec![0.0, bump(u[0])])),
    );
    let q = Plot::new(
        "signed-flat-exponential",
        "plane",
        2,
        vec![(-1.0, 1.0)],
        Arc::new(move |u: &DVector<f64>| {
            DVector::from_vec(vec![0.0, u[0].signum() * bump(u[0])])
        }),
    );
    (p, q)
}

// ---------------------------------------------------------------------------
// Right-invariant 1-forms on a group carrier
// ---------------------------------------------------------------------------

/// The right-invariant extension of a fixed covector: `α_q(δq) = ⟨μ,
/// δq·q⁻¹⟩` on the flattened group manifold.  These are exactly the
/// 1-forms whose descent along a dense subgroup the torus scenarios probe:
/// the pullbacks along gauge-related plots agree precisely when `μ`
/// annihilates the subgroup's algebra.
pub fn right_invariant_form(group: &GroupId, mu: &DVector<f64>) -> KForm {
    assert_eq!(
        mu.len(),
        group.dim(),
        "covector length must match the group dimension"
    );
    let g = group.clone();
    let m = mu.clone();
    let coords: Vec<String> = mu.iter().map(|c| format!("{c:.4}")).collect();
    KForm::new(
        format!("right-invariant[{}]", coords.join(", ")),
        format!("group({group})"),
        group.ambient_dim(),
        1,
        Arc::new(move |x: &DVector<f64>, vs: &[DVector<f64>]| {
            let q = GroupElement::from_flat(&g, x);
            let (z, _) = log_derivative(&q, &vs[0]);
            m.dot(z.coords())
        }),
    )
}

// ---------------------------------------------------------------------------
