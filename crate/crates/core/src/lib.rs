//! Pressure functions of locally constant potentials on shift spaces, their
//! derivatives, and the inverse problem of fitting a prescribed jet.
//!
//! ```
//! use thermoforge::{pressure, CylinderPotential};
//!
//! let phi = CylinderPotential::full_shift(vec![0.0, 3f64.ln()]).unwrap();
//! assert!((pressure(&phi, 1.0).unwrap() - 4f64.ln()).abs() < 1e-15);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod cltsim;
pub mod combinatorics;
pub mod error;
pub mod germfit;
pub mod numeric;
pub mod pressure;
pub mod rigidity;
pub mod selftest;
pub mod symbolic;

pub use approx::{convergence_study, discretize, ConvergenceRow, DecayingPotentialSpec, DiscretizeMode};
pub use cltsim::{center_potential, edgeworth_correction, simulate_gm, CltReport, CltRow, SimConfig};
pub use combinatorics::{compose_derivatives, fdb_coefficient, partitions, Partition};
pub use error::{Error, ErrorClass, Result};
pub use germfit::{
    feasibility_level1, feasible_a2_range, fit_level1, fit_level2, table3_solve, varsigma_inverse, Branch, FitResult,
    Germ, Table3Row,
};
pub use pressure::{
    finite_difference_jet, pressure, pressure_jet, pressure_spectral, q_values, verify_derivative_formulas,
    DerivativeCheck, QValues, TaylorJet,
};
pub use rigidity::{
    divergence_diagnostic, f_abc_derivs, rigidity_inequalities, CandidateFunction, RigidityPoint, RigidityReport,
};
pub use symbolic::{equilibrium_weights, word_index, BernoulliWeights, CylinderPotential, SubshiftSpec};
