//! Randomized invariant suites over fixed seeds: channel composition,
//! partial-transpose involution, trace preservation, negativity bounds and
//! truncation convergence.

mod common;

#[test]
fn loss_channels_compose_multiplicatively() {
    assert_eq!(common::check_loss_composition(0x10ad, 100), 100);
}

#[test]
fn partial_transpose_is_an_involution() {
    assert_eq!(common::check_pt_involution(0x9a57, 100), 100);
}

#[test]
fn channels_preserve_trace() {
    assert_eq!(common::check_trace_preservation(0x7ace, 100), 100);
}

#[test]
fn negativity_stays_within_bounds() {
    assert_eq!(common::check_negativity_bounds(0xbead, 100), 100);
}

#[test]
fn constructions_converge_with_dimension() {
    assert_eq!(common::check_truncation_convergence(0x7420, 50), 50);
}
