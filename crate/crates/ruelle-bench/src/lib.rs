//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use ruelle::{CylinderPotential, TransitionMatrix};

pub fn full(n: usize) -> Arc<TransitionMatrix> {
    Arc::new(TransitionMatrix::validate(&vec![vec![1; n]; n]).expect("full shift"))
}

pub fn golden() -> Arc<TransitionMatrix> {
    Arc::new(TransitionMatrix::validate(&[vec![1, 1], vec![1, 0]]).expect("golden shift"))
}

/// A fixed non-constant range-2 potential on the golden shift.
pub fn golden_potential() -> CylinderPotential {
    CylinderPotential::from_values(golden(), 2, vec![0.3, -0.2, 0.45]).expect("admissible values")
}
