//! Analytic gradients against central finite differences.

mod common;

use common::gradcheck;

const POINTS: usize = 100;

#[test]
fn smooth_l1_gradient() {
    assert_eq!(gradcheck::smooth_l1(POINTS, 1), Vec::<String>::new());
}

#[test]
fn bce_gradient() {
    assert_eq!(gradcheck::bce(POINTS, 2), Vec::<String>::new());
}

#[test]
fn track_loss_gradient_and_indicator() {
    assert_eq!(gradcheck::track_loss(POINTS, 3), Vec::<String>::new());
}

#[test]
fn triplet_gradient() {
    assert_eq!(gradcheck::triplet(POINTS, 4), Vec::<String>::new());
}

#[test]
fn mlp_backward_matches_finite_differences() {
    assert_eq!(gradcheck::mlp(POINTS, 5), Vec::<String>::new());
}
