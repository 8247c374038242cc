//! Numerical laboratory for the Dirac-harmonic-map functional on flat
//! 2-D domains with a round-sphere target.
//!
//! The crate is organized bottom-up: exact Clifford algebra on the spinor
//! fiber, grids and difference operators, sphere-target geometry and the
//! coupled Euler-Lagrange system, conservation-law diagnostics, relaxation
//! solvers, and bubble/concentration experiments.

pub mod bubble;
pub mod clifford;
pub mod conservation;
pub mod diff;
pub mod error;
pub mod grid;
pub mod report;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod sphere;

pub use bubble::{
    annulus_energy, concentration_family, detect_blowup_set, energy_identity_experiment,
    epsilon_regularity_probe, local_energy, stereographic_bubble, BubbleSpec,
    ConcentrationFamily, IdentityTable,
};
pub use clifford::{clifford_mul, spinor_inner, vector_clifford, Axis, CliffordBasis, Spinor};
pub use conservation::{
    coefficient_matrices, identity_chain_defect, reconstruction_residual, wente_residual,
    CoefficientMatrices, DiffScheme,
};
pub use error::{DhError, Result};
pub use grid::{Field2D, Grid, ScalarField, SpinorGrid, Topology};
pub use snapshot::{load_state, save_state};
pub use solver::{
    relax_coupled, relax_harmonic, vanishing_probe, InitKind, SolveTrace, SolverParams,
    VanishingReport,
};
pub use sphere::{
    curvature_term, curvature_term_extrinsic, dirac_along_map, el_residuals, energies,
    project_sphere, project_tangent, second_fundamental, shape_operator, EnergyReport, MapField,
    SpinorAlongMap,
};
