//! Deterministic randomized property checks shared by the `properties` and
//! `acceptance` test targets. Every generator is seeded explicitly, so a
//! passing run is reproducible bit for bit.

use hybrid_fock::channels::{loss_channel, phase_noise_channel, PhaseNoiseSpec};
use hybrid_fock::metrics::entanglement_negativity;
use hybrid_fock::states::{
    coherent_tail_mass, squeezed_vacuum_tail, subtracted_squeezed_with_tail_limit, CatParity,
    SqueezeParam,
};
use hybrid_fock::{C64, DensityOperator, ModeSpace, PureState};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_ket(rng: &mut ChaCha8Rng, space: ModeSpace) -> PureState {
    let n = space.total_dim();
    let amps = DVector::from_iterator(
        n,
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
    );
    PureState::from_amplitudes(space, amps)
        .expect("random amplitudes are valid")
        .normalized()
        .expect("random kets are nonzero with probability one")
        .with_unit_weight()
}

fn random_density(rng: &mut ChaCha8Rng, space: ModeSpace, components: usize) -> DensityOperator {
    let mut weights: Vec<f64> = (0..components).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut rho = DensityOperator::zeros(space);
    for &w in &weights {
        let ket = random_ket(rng, space);
        rho.accumulate(&ket.to_density(), w).expect("same space");
    }
    rho
}

fn max_abs_diff(a: &DensityOperator, b: &DensityOperator) -> f64 {
    a.matrix()
        .iter()
        .zip(b.matrix().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Two sequential loss channels compose multiplicatively:
/// `L_eta2 (L_eta1 rho) = L_{eta1 eta2} rho`. Returns the case count.
pub fn check_loss_composition(seed: u64, cases: usize) -> usize {
    let mut rng = seeded(seed);
    let space = ModeSpace::new(2, 5).expect("valid space");
    for case in 0..cases {
        let rho = random_density(&mut rng, space, 3);
        let eta1 = rng.random_range(0.2..1.0);
        let eta2 = rng.random_range(0.2..1.0);
        let mode = usize::from(rng.random_range(0..2u8) == 1);
        let two_step = loss_channel(&loss_channel(&rho, mode, eta1).unwrap(), mode, eta2).unwrap();
        let one_step = loss_channel(&rho, mode, eta1 * eta2).unwrap();
        let diff = max_abs_diff(&two_step, &one_step);
        assert!(
            diff < 1e-12,
            "loss composition violated at case {case}: eta1={eta1}, eta2={eta2}, diff={diff:e}"
        );
    }
    cases
}

/// Partial transposition is an involution, and the negativity does not
/// depend on which side of the cut is transposed.
pub fn check_pt_involution(seed: u64, cases: usize) -> usize {
    let mut rng = seeded(seed);
    let space = ModeSpace::new(2, 4).expect("valid space");
    for case in 0..cases {
        let rho = random_density(&mut rng, space, 2);
        let round_trip = rho
            .partial_transpose(&[0])
            .unwrap()
            .partial_transpose(&[0])
            .unwrap();
        let diff = max_abs_diff(&rho, &round_trip);
        assert!(diff < 1e-14, "PT involution violated at case {case}: diff={diff:e}");
        let n0 = entanglement_negativity(&rho, &[0]).unwrap();
        let n1 = entanglement_negativity(&rho, &[1]).unwrap();
        assert!(
            (n0 - n1).abs() < 1e-10,
            "negativity depends on transposed side at case {case}: {n0} vs {n1}"
        );
    }
    cases
}

/// Loss and dephasing channels preserve the trace.
pub fn check_trace_preservation(seed: u64, cases: usize) -> usize {
    let mut rng = seeded(seed);
    let space = ModeSpace::new(2, 5).expect("valid space");
    for case in 0..cases {
        let rho = random_density(&mut rng, space, 3);
        let eta = rng.random_range(0.1..1.0);
        let sigma = rng.random_range(0.0..0.8);
        let mode = usize::from(rng.random_range(0..2u8) == 1);
        let lossy = loss_channel(&rho, mode, eta).unwrap();
        let spec = PhaseNoiseSpec::from_radians(sigma).unwrap();
        let dephased = phase_noise_channel(&rho, mode, &spec).unwrap();
        for (name, op) in [("loss", &lossy), ("dephasing", &dephased)] {
            let tr = op.trace();
            assert!(
                (tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12,
                "{name} channel broke the trace at case {case}: {tr}"
            );
        }
    }
    cases
}

/// Negativity lies in `[0, (d-1)/2]` for a two-mode state with per-mode
/// dimension `d`, and channels never increase it past the bound.
pub fn check_negativity_bounds(seed: u64, cases: usize) -> usize {
    let mut rng = seeded(seed);
    let dim = 4;
    let space = ModeSpace::new(2, dim).expect("valid space");
    let bound = (dim as f64 - 1.0) / 2.0;
    for case in 0..cases {
        let rho = random_density(&mut rng, space, 2);
        let n = entanglement_negativity(&rho, &[0]).unwrap();
        assert!(
            (-1e-12..=bound + 1e-9).contains(&n),
            "negativity out of range at case {case}: {n}"
        );
        let eta = rng.random_range(0.3..1.0);
        let lossy = loss_channel(&rho, 0, eta).unwrap();
        let n_lossy = entanglement_negativity(&lossy, &[0]).unwrap();
        assert!(
            (-1e-12..=bound + 1e-9).contains(&n_lossy),
            "lossy negativity out of range at case {case}: {n_lossy}"
        );
    }
    cases
}

fn prefix_overlap(shorter: &PureState, longer: &PureState) -> f64 {
    let a = shorter.amplitudes();
    let b = longer.amplitudes();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.len() {
        s += a[i].conj() * b[i];
    }
    s.norm_sqr()
}

/// Raising the truncation dimension changes the constructed states by no
/// more than their analytic tail mass, and the agreement improves
/// monotonically with dimension.
pub fn check_truncation_convergence(seed: u64, cases: usize) -> usize {
    let mut rng = seeded(seed);
    for case in 0..cases {
        let zeta = rng.random_range(0.1..0.5);
        let z = SqueezeParam::from_zeta(zeta).unwrap();
        let build = |dim: usize| {
            subtracted_squeezed_with_tail_limit(0, &z, dim, 1e-3)
                .unwrap()
                .with_unit_weight()
        };
        let coarse = build(20);
        let mid = build(28);
        let fine = build(36);
        let fid_coarse = prefix_overlap(&coarse, &fine);
        let fid_mid = prefix_overlap(&mid, &fine);
        let tail = squeezed_vacuum_tail(zeta, 20);
        assert!(
            fid_coarse >= 1.0 - 2.0 * tail - 1e-12,
            "squeezed state convergence too slow at case {case}: 1-F={:e}, tail={tail:e}",
            1.0 - fid_coarse
        );
        assert!(
            fid_mid >= fid_coarse - 1e-12,
            "squeezed state convergence not monotone at case {case}"
        );

        let alpha = rng.random_range(0.6..1.5);
        let parity = if rng.random_range(0..2u8) == 1 { CatParity::Even } else { CatParity::Odd };
        let cat = |dim: usize| hybrid_fock::states::cat_state(alpha, parity, dim).unwrap();
        let cat_coarse = cat(20);
        let cat_fine = cat(28);
        let cat_fid = prefix_overlap(&cat_coarse, &cat_fine);
        let cat_tail = coherent_tail_mass(alpha, 20);
        assert!(
            cat_fid >= 1.0 - 4.0 * cat_tail - 1e-12,
            "cat state convergence too slow at case {case}: 1-F={:e}, tail={cat_tail:e}",
            1.0 - cat_fid
        );
    }
    cases
}
