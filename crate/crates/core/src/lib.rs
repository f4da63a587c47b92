//! redmap-core: numerical verification of moment-map geometry.
//!
//! The crate builds a small catalog of Hamiltonian and prequantum group
//! actions (spheres, cotangent bundles of compact groups, symmetric-power
//! carriers, tori with irrational windings), the standard constructions on
//! them (duals, hom-spaces, induction data, fusion products,
//! symplectizations), and the reduction-level comparison maps between them.
//! Every claimed identity is checked numerically at seeded sample points:
//! moment conditions, equivariance, pullback equalities on level sets,
//! descent of forms along quotient maps, and weight-multiplicity counts.
//!
//! The layering is strictly bottom-up:
//!
//! * [`numeric`] — finite-difference kernels, SVD rank/subspace helpers;
//! * [`rng`] — deterministic, stream-labelled random sampling;
//! * [`report`] — verdicts, residual statistics, witnesses;
//! * [`lie`] — the matrix group catalog with algebra/coalgebra coordinates;
//! * [`calculus`] — embedded spaces, plots, differential forms, pullbacks;
//! * [`spaces`] — Hamiltonian/prequantum structures and their axiom gates;
//! * [`constructions`] — duals, homs, cotangent groups, induction data,
//!   fusion powers, symplectization;
//! * [`frobenius`] — the reciprocity maps between induction levels and the
//!   cotangent-lattice checks for irrational torus windings;
//! * [`descent`] — gauge-pair descent tests and quotient smoothness probes;
//! * [`unitary`] — weight multiplicities of the corresponding circle actions;
//! * [`suites`] — named end-to-end scenarios consumed by the CLI.

pub mod calculus;
pub mod constructions;
pub mod descent;
pub mod frobenius;
pub mod lie;
pub mod numeric;
pub mod report;
pub mod rng;
pub mod spaces;
pub mod suites;
pub mod unitary;

pub use calculus::{DomainForm, EmbeddedSpace, KForm, Plot};
pub use lie::{AlgebraElement, CoalgebraElement, GroupElement, GroupId, LieError, Subgroup};
pub use report::{CheckReport, Thresholds, Tolerances, Verdict, Witness};
pub use spaces::{HamiltonianSpace, LevelSet, PrequantumSpace};
