//! Fixtures shared by the benchmarks.

use thermoforge::{CylinderPotential, SubshiftSpec};

/// Deterministic spread-out values in `[-2, 2]`.
pub fn values(len: usize) -> Vec<f64> {
    (0..len).map(|i| 2.0 * (1.0 + i as f64 * 0.7).sin()).collect()
}

pub fn full_shift(n: usize) -> CylinderPotential {
    CylinderPotential::full_shift(values(n)).unwrap()
}

/// Window-`w` potential on the golden mean shift.
pub fn golden_mean(window: usize) -> CylinderPotential {
    let space = SubshiftSpec::with_transition(vec![vec![1, 1], vec![1, 0]]).unwrap();
    CylinderPotential::new(space, window, values(1 << window)).unwrap()
}
