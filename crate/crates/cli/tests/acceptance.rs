//! Acceptance gate: ten numbered criteria covering the whole tool, with
//! every tolerance pinned as a constant at the top of the file.  Each test
//! prints exactly one `criterion NN [label]: PASS/FAIL` line (visible under
//! `--nocapture` or on failure) and asserts the same condition, so a
//! regression both flips the line and fails the build.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use tempfile::TempDir;

use redmap_core::constructions::{cotangent_group, fusion_power};
use redmap_core::descent::{self, GaugeSolver, ProbeConfig};
use redmap_core::frobenius::{
    kms_instance, paired_spheres_instance, peter_weyl_instance, prequantum_spherical_instance,
    spherical_frame_solve, spherical_instance, FrobeniusConfig,
};
use redmap_core::lie::GroupId;
use redmap_core::report::{CheckReport, Verdict};
use redmap_core::rng;
use redmap_core::spaces::{
    axiom_gate, cardinal_checks_at, prequantized_sphere, prequantum_axiom_gate, sphere_orbit,
    tangent_sphere, GateConfig, HamiltonianSpace,
};
use redmap_core::suites::{run_scenario, ScenarioParams, SuiteConfig};
use redmap_core::unitary;

// ---------------------------------------------------------------------------
// Pinned tolerances and budgets
// ---------------------------------------------------------------------------

const SEED: u64 = 42;

/// 1 — structure gates: scaled moment/equivariance residual bound, samples
/// per space, and the total wall-clock budget.
const GATE_TOL: f64 = 1e-6;
const GATE_SAMPLES: usize = 200;
const GATE_BUDGET: Duration = Duration::from_secs(30);

/// 2/3 — pullback agreement bound and the minimum contraction factor when
/// the finite-difference step is halved.
const PULLBACK_TOL: f64 = 1e-6;
const PULLBACK_SAMPLES: usize = 200;
const PULLBACK_TUPLES: usize = 10;
const HALVING_FACTOR: f64 = 3.0;

/// 4 — retraction and level transport are exact to this bound on raw
/// (unscaled) residuals.
const EXACT_TOL: f64 = 1e-9;
const EXACT_SAMPLES: usize = 500;

/// 5 — descent bound and the floor a broken form must exceed.
const DESCENT_TOL: f64 = 1e-6;
const NEGATIVE_FLOOR: f64 = 1e-3;

/// 6 — winding family: gauge-exchange and Liouville bounds, the floor for
/// the non-annihilating witness, the exact moment-chain bound, and the
/// number of gauge pairs the precondition must consume.
const KMS_TOL: f64 = 1e-7;
const KMS_WITNESS_FLOOR: f64 = 1e-2;
const CHAIN_TOL: f64 = 1e-12;
const KMS_PAIRS: usize = 100;

/// 7 — gauge reconstruction must jump by at least a half turn minus this
/// slack while both probe curves are flat to third order within the bound.
const JUMP_SLACK: f64 = 0.01;
const FLATNESS_TOL: f64 = 1e-8;

/// 8 — subspace distances at sampled level points.
const SUBSPACE_TOL: f64 = 1e-6;

/// 9 — closed-form transitivity bound (built into the frame solve) and the
/// degree range of the multiplicity match.
const FRAME_SAMPLES: usize = 50;
const MAX_DEGREE: usize = 10;

/// 10 — the full default suite must finish within this budget and two
/// identical runs must produce byte-identical reports.
const SUITE_BUDGET: Duration = Duration::from_secs(300);

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn conclude(number: usize, label: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {number:02} [{label}]: {verdict} — {detail}");
    assert!(ok, "criterion {number:02} [{label}]: {detail}");
}

fn find<'a>(reports: &'a [CheckReport], name: &str) -> &'a CheckReport {
    reports
        .iter()
        .find(|r| r.name == name)
        .unwrap_or_else(|| panic!("no check named `{name}`"))
}

// ---------------------------------------------------------------------------
// 1 — structure gates across the catalog
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_structure_gates_across_the_catalog() {
    let started = Instant::now();
    let gate = |label: &str| {
        let mut config = GateConfig::new(SEED, label);
        config.samples = GATE_SAMPLES;
        config
    };

    let spherical = spherical_instance(1).expect("construction");
    let peter = peter_weyl_instance(1).expect("construction");
    let paired = paired_spheres_instance(1, 2).expect("construction");
    let hamiltonian: Vec<(HamiltonianSpace, &str)> = vec![
        (tangent_sphere(), "tangent sphere"),
        (sphere_orbit(1), "orbit sphere 1"),
        (sphere_orbit(2), "orbit sphere 2"),
        (
            cotangent_group(&GroupId::SO3).left_space().clone(),
            "rotation cotangent",
        ),
        (
            cotangent_group(&GroupId::Torus2).left_space().clone(),
            "torus cotangent",
        ),
        (spherical.data().m().clone(), "circle induction total"),
        (spherical.data().n().clone(), "circle induction product"),
        (peter.data().m().clone(), "trivial induction total"),
        (peter.data().n().clone(), "trivial induction product"),
        (paired.data().m().clone(), "paired induction total"),
        (paired.data().n().clone(), "paired induction product"),
    ];

    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for (space, label) in &hamiltonian {
        for report in axiom_gate(space, &gate(label)).expect("gate evaluation") {
            assert!(report.is_pass(), "{label}: {}", report.summary_line());
            if report.name.contains("moment") || report.name.contains("equivariance") {
                worst = worst.max(report.max_residual);
            }
            checked += 1;
        }
    }

    let circle_bundle = prequantized_sphere();
    let lens = fusion_power(2);
    for (space, label) in [
        (&circle_bundle, "prequantum sphere"),
        (lens.space(), "lens quotient"),
    ] {
        for report in prequantum_axiom_gate(space, &gate(label)).expect("gate evaluation") {
            assert!(report.is_pass(), "{label}: {}", report.summary_line());
            if report.name.contains("moment") || report.name.contains("equivariance") {
                worst = worst.max(report.max_residual);
            }
            checked += 1;
        }
    }

    let elapsed = started.elapsed();
    conclude(
        1,
        "structure gates",
        worst < GATE_TOL && elapsed < GATE_BUDGET,
        &format!(
            "worst moment/equivariance residual {worst:.3e} over {checked} checks \
             at {GATE_SAMPLES} samples each in {elapsed:.2?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2 — symplectic pullback identity with step-halving
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_symplectic_pullback_identity() {
    let config = FrobeniusConfig::new(SEED).with_samples(PULLBACK_SAMPLES, PULLBACK_TUPLES);
    let mut worst: f64 = 0.0;
    for ell in 1..=3 {
        let instance = spherical_instance(ell).expect("construction");
        for report in instance.check_frobenius_pullback(&config).expect("pullback") {
            assert!(report.is_pass(), "degree {ell}: {}", report.summary_line());
            worst = worst.max(report.max_residual);
        }
    }

    // The circle-subgroup family has point reduced spaces, so both sides of
    // the agreement vanish identically and the truncation order is invisible
    // there.  The paired companion carries the same identity with a
    // nonvanishing right-hand side; halving the step on it must contract the
    // (truncation-dominated) residual by at least the pinned factor.
    let paired = paired_spheres_instance(1, 2).expect("construction");
    let residual_at = |fd_step: f64| -> f64 {
        let config = FrobeniusConfig::new(SEED)
            .with_samples(60, 4)
            .with_fd_step(fd_step);
        let reports = paired.check_frobenius_pullback(&config).expect("pullback");
        reports
            .iter()
            .find(|r| r.name.starts_with("pullback-agreement"))
            .expect("agreement report")
            .max_residual
    };
    let coarse = residual_at(1e-3);
    let fine = residual_at(5e-4);
    let ratio = coarse / fine;

    conclude(
        2,
        "symplectic pullback",
        worst < PULLBACK_TOL && ratio >= HALVING_FACTOR,
        &format!(
            "worst residual {worst:.3e}; halving the step contracts the paired \
             residual {coarse:.3e} → {fine:.3e} (×{ratio:.2})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 3 — prequantum pullback identity
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_prequantum_pullback_identity() {
    let config = FrobeniusConfig::new(SEED).with_samples(PULLBACK_SAMPLES, PULLBACK_TUPLES);
    let mut worst: f64 = 0.0;
    for ell in 1..=2 {
        let instance = prequantum_spherical_instance(ell).expect("construction");
        for report in instance
            .check_prequantum_frobenius_pullback(&config)
            .expect("pullback")
        {
            assert!(report.is_pass(), "level {ell}: {}", report.summary_line());
            worst = worst.max(report.max_residual);
        }
    }
    conclude(
        3,
        "prequantum pullback",
        worst < PULLBACK_TOL,
        &format!("worst residual {worst:.3e} for levels 1 and 2"),
    );
}

// ---------------------------------------------------------------------------
// 4 — retraction and level transport are exact
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_retraction_and_level_transport_are_exact() {
    let config = FrobeniusConfig::new(SEED).with_samples(EXACT_SAMPLES, 2);
    let mut worst: f64 = 0.0;
    for (instance, label) in [
        (spherical_instance(1).expect("construction"), "circle subgroup"),
        (peter_weyl_instance(1).expect("construction"), "trivial subgroup"),
    ] {
        let reports = instance.check_reciprocity(&config);
        for name in ["retraction[r∘r']", "level-transport[r]", "level-transport[r']"] {
            let report = find(&reports, name);
            assert_eq!(report.samples, EXACT_SAMPLES, "{label}: {name}");
            assert!(
                report.max_residual < EXACT_TOL,
                "{label}: {}",
                report.summary_line()
            );
            worst = worst.max(report.max_residual);
        }
    }
    conclude(
        4,
        "retraction exactness",
        worst < EXACT_TOL,
        &format!("worst raw residual {worst:.3e} over {EXACT_SAMPLES} samples per family"),
    );
}

// ---------------------------------------------------------------------------
// 5 — descent criterion with both subgroups and a negative control
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_descent_with_negative_control() {
    let config = SuiteConfig::new(SEED).with_samples(40);
    let scenario = run_scenario("strict_subgroup", &ScenarioParams::default(), &config)
        .expect("registered scenario");
    assert!(scenario.matched, "{}", scenario.summary());

    let reports: Vec<CheckReport> =
        scenario.checks.iter().map(|c| c.report.clone()).collect();
    let closed = find(&reports, "descent[closed circle subgroup]");
    let dense = find(&reports, "descent[dense winding]");
    let broken = find(&reports, "descent-negative[perturbed form]");

    let ok = closed.verdict == Verdict::Pass
        && closed.max_residual < DESCENT_TOL
        && dense.verdict == Verdict::Pass
        && dense.max_residual < DESCENT_TOL
        && broken.verdict == Verdict::Fail
        && broken.max_residual > NEGATIVE_FLOOR;
    conclude(
        5,
        "descent criterion",
        ok,
        &format!(
            "closed {:.3e}, dense {:.3e}, perturbed form rejected at {:.3e}",
            closed.max_residual,
            dense.max_residual,
            broken.max_residual
        ),
    );
}

// ---------------------------------------------------------------------------
// 6 — winding family at slope sqrt(2)
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_winding_family_identities() {
    let instance = kms_instance(std::f64::consts::SQRT_2);
    let config = FrobeniusConfig::new(SEED)
        .with_samples(50, 4)
        .with_plots(KMS_PAIRS);
    let reports = instance.check_kms(&config).expect("winding checks");

    let precondition = find(&reports, "descent-precondition[annihilator]");
    let pair_note = format!("over {KMS_PAIRS} gauge pairs");
    assert!(
        precondition.notes.iter().any(|n| n.contains(&pair_note)),
        "expected `{pair_note}` in {:?}",
        precondition.notes
    );

    let liouville = find(&reports, "invariant-form-matches-liouville");
    let chain = find(&reports, "moment-chain[exact]");

    let witness = instance
        .check_nonannihilating(&config)
        .expect("negative control");

    let ok = precondition.verdict == Verdict::Pass
        && precondition.max_residual < KMS_TOL
        && liouville.verdict == Verdict::Pass
        && liouville.max_residual < KMS_TOL
        && chain.verdict == Verdict::Pass
        && chain.max_residual < CHAIN_TOL
        && witness.verdict == Verdict::Fail
        && witness.max_residual > KMS_WITNESS_FLOOR;
    conclude(
        6,
        "winding family",
        ok,
        &format!(
            "gauge exchange {:.3e} over {KMS_PAIRS} pairs, Liouville {:.3e}, \
             exact moment chain {:.3e}, transverse covector rejected at {:.3e}",
            precondition.max_residual,
            liouville.max_residual,
            chain.max_residual,
            witness.max_residual
        ),
    );
}

// ---------------------------------------------------------------------------
// 7 — non-smoothable gauge with flat probe curves
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_gauge_jump_with_flat_probes() {
    let (p, q) = descent::flat_exponential_pair();
    let probe_config = ProbeConfig {
        mesh: 0.05,
        points: 10,
        ..ProbeConfig::default()
    };
    let probe = descent::smooth_division_probe(&p, &q, GaugeSolver::PlanarRotation, &probe_config)
        .expect("probe evaluation");
    let jump = probe.max_residual;

    let mut flatness: f64 = 0.0;
    for plot in [&p, &q] {
        for bound in descent::derivative_flatness(plot, 0.0, 0.05, 3) {
            flatness = flatness.max(bound);
        }
    }

    let floor = std::f64::consts::PI - JUMP_SLACK;
    let ok = probe.verdict == Verdict::Fail && jump >= floor && flatness < FLATNESS_TOL;
    conclude(
        7,
        "gauge obstruction",
        ok,
        &format!(
            "reconstructed angle jumps {jump:.4} rad (floor {floor:.4}) while both curves \
             are flat to third order within {flatness:.3e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 8 — rank signatures at level points
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_rank_signatures_at_level_points() {
    let mut worst: f64 = 0.0;
    let mut stream = rng::stream(SEED, &["acceptance", "rank"]);

    // Graph level of the trivial-subgroup induction: the moment has full
    // rank 3 and its kernel is the symplectic orthogonal of the (free)
    // orbit directions.
    let peter = peter_weyl_instance(1).expect("construction");
    for _ in 0..12 {
        let x = peter.level_m().sample(&mut stream);
        let card =
            cardinal_checks_at(peter.data().m(), &x, 1e-5).expect("pointwise linear algebra");
        assert_eq!(card.moment_rank, 3, "graph level rank");
        assert_eq!(card.stabilizer_dim, 0, "graph level stabilizer");
        worst = worst.max(card.kernel_vs_omega_orthogonal.max(card.image_vs_annihilator));
    }

    // Zero section of the tangent sphere: each point is fixed by the circle
    // around its axis, so the rank drops to 2 with a 1-dimensional
    // stabilizer.
    let sphere = tangent_sphere();
    for _ in 0..12 {
        let direction = rng::normal_vector(&mut stream, 3);
        let unit = &direction / direction.norm().max(1e-12);
        let x = DVector::from_vec(vec![unit[0], unit[1], unit[2], 0.0, 0.0, 0.0]);
        let card = cardinal_checks_at(&sphere, &x, 1e-5).expect("pointwise linear algebra");
        assert_eq!(card.moment_rank, 2, "zero section rank");
        assert_eq!(card.stabilizer_dim, 1, "zero section stabilizer");
        worst = worst.max(card.kernel_vs_omega_orthogonal.max(card.image_vs_annihilator));
    }

    conclude(
        8,
        "rank signatures",
        worst < SUBSPACE_TOL,
        &format!(
            "graph level rank 3 (free), zero section rank 2 (circle stabilizer); \
             worst subspace distance {worst:.3e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 9 — multiplicity match across degrees
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_multiplicity_match() {
    let mut worst: f64 = 0.0;
    for ell in 1..=MAX_DEGREE {
        assert_eq!(
            unitary::frobenius_dimension(ell),
            1,
            "degree {ell}: the invariant line must be unique"
        );
        let config = FrobeniusConfig::new(SEED ^ ell as u64).with_samples(FRAME_SAMPLES, 2);
        let report = spherical_frame_solve(ell, &config).expect("frame transitivity");
        assert!(report.is_pass(), "degree {ell}: {}", report.summary_line());
        assert_eq!(report.samples, FRAME_SAMPLES);
        worst = worst.max(report.max_residual);
    }
    conclude(
        9,
        "multiplicity match",
        worst < 1e-10,
        &format!(
            "levels are singly transitive for degrees 1..={MAX_DEGREE} \
             (worst frame residual {worst:.3e}), matching the algebraic count 1"
        ),
    );
}

// ---------------------------------------------------------------------------
// 10 — determinism and runtime budget of the full default suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_default_suite_is_deterministic_and_fast() {
    let dir = TempDir::new().expect("temp dir");
    let run = |name: &str| -> (Duration, Vec<u8>) {
        let path = dir.path().join(name);
        let started = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_verify"))
            .env_remove("VERIFY_SEED")
            .arg("run")
            .arg("--report")
            .arg(&path)
            .status()
            .expect("binary runs");
        let elapsed = started.elapsed();
        assert!(status.success(), "default suite must match expectations");
        (elapsed, std::fs::read(&path).expect("report written"))
    };

    let (first_time, first) = run("first.json");
    let (second_time, second) = run("second.json");

    let ok = first == second && first_time < SUITE_BUDGET && second_time < SUITE_BUDGET;
    conclude(
        10,
        "determinism",
        ok,
        &format!(
            "two default runs are byte-identical ({} bytes) in {first_time:.2?} and \
             {second_time:.2?}",
            first.len()
        ),
    );
}
