//! Quantitative state characterization: Wigner maps of single-mode operators
//! (including non-Hermitian coherence blocks), origin Wigner negativity,
//! entanglement negativity from the partial transpose, fidelities, and the
//! DV x CV block-grid representation of hybrid states.
//!
//! Wigner values are displaced-parity expectations, `Tr[op D(2 beta) Pi]`
//! with `beta = (x + i p)/2`, anchored so the vacuum gives +1 at the origin
//! and a single photon gives -1. Off-origin points are evaluated in a padded
//! Fock space sized from the displacement radius; the truncated-generator
//! exponential at the operator's own dimension is badly wrong once the
//! displaced packet crosses the truncation edge.

use nalgebra::DMatrix;

use crate::error::{FockError, Result};
use crate::fock::{hermitian_eigenvalues, C64, DensityOperator, PureState};
use crate::states::Displacer;

/// Hard cap on the padded evaluation dimension for displaced-parity traces.
const MAX_EVAL_DIM: usize = 512;

/// Uniform square grid for phase-space evaluation, in vacuum-variance units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || min >= max {
            return Err(FockError::InvalidParameter(format!(
                "grid range [{min},{max}] must be finite and increasing"
            )));
        }
        if points < 2 {
            return Err(FockError::InvalidParameter(format!(
                "grid needs at least 2 points per axis, got {points}"
            )));
        }
        Ok(Self { min, max, points })
    }

    /// Default rendering window: [-4, 4] with 81 points per axis.
    pub fn default_square() -> Self {
        Self { min: -4.0, max: 4.0, points: 81 }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn axis(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| self.min + h * i as f64).collect()
    }

    /// Largest displacement radius `|x + i p|` reached on the grid.
    fn max_radius(&self) -> f64 {
        let m = self.min.abs().max(self.max.abs());
        m * std::f64::consts::SQRT_2
    }
}

/// Sampled Wigner map; `values[i][j]` is the value at `(x_axis[i], p_axis[j])`.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<Vec<C64>>,
}

impl WignerGrid {
    /// Discrete `(1/2pi) integral W dx dp`; approximates the operator trace.
    pub fn integral(&self) -> C64 {
        if self.x_axis.len() < 2 || self.p_axis.len() < 2 {
            return C64::new(0.0, 0.0);
        }
        let dx = self.x_axis[1] - self.x_axis[0];
        let dp = self.p_axis[1] - self.p_axis[0];
        let sum: C64 = self.values.iter().flatten().sum();
        sum * dx * dp / (2.0 * std::f64::consts::PI)
    }
}

/// Scalar summary of one heralded run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityReport {
    pub wigner_origin: f64,
    pub entanglement_negativity: f64,
    pub herald_probability: f64,
}

/// DV measurement basis for hybrid block grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvBasis {
    /// Fock levels |0>, |1>, (qutrit: |2>).
    Number,
    /// Qubit superposition basis |+>, |->.
    Rotated,
}

/// Wigner maps of every DV block <k|rho|l> of a two-mode hybrid state.
#[derive(Debug, Clone)]
pub struct HybridBlockGrid {
    pub dv_dim: usize,
    pub basis: DvBasis,
    /// Row-major: entry `k * dv_dim + l` is the map of `<k|rho|l>`.
    pub blocks: Vec<WignerGrid>,
    /// DV-mode population beyond the declared qubit/qutrit levels.
    pub dv_leakage: f64,
}

impl HybridBlockGrid {
    pub fn block(&self, k: usize, l: usize) -> &WignerGrid {
        &self.blocks[k * self.dv_dim + l]
    }
}

/// Padded dimension needed for an accurate displacement by radius `r` acting
/// on operators supported below `op_dim`. The displaced packet from level
/// `n` reaches mean occupation about `(sqrt(n) + r)^2`.
fn eval_dim_for(op_dim: usize, r: f64) -> Result<usize> {
    let needed = ((op_dim as f64).sqrt() + r).powi(2).ceil() as usize + 16;
    let dim = needed.max(op_dim);
    if dim > MAX_EVAL_DIM {
        return Err(FockError::TruncationInsufficient {
            what: format!("displacement radius {r:.2} needs evaluation dimension {dim}"),
            tail: r,
            limit: MAX_EVAL_DIM as f64,
        });
    }
    Ok(dim)
}

/// `Tr[op D(gamma) Pi]` with the displacement evaluated on a padded space.
fn displaced_parity(op: &DMatrix<C64>, displacer: &Displacer, gamma: C64) -> Result<C64> {
    let d = op.nrows();
    let block = displacer.op_block(gamma, d)?;
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..d {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..d {
            acc += op[(m, n)] * block[(n, m)] * sign;
        }
    }
    Ok(acc)
}

fn require_single_mode(op: &DensityOperator) -> Result<()> {
    if op.space().modes() != 1 {
        return Err(FockError::InvalidMode(format!(
            "Wigner evaluation needs a single-mode operator, got {} modes",
            op.space().modes()
        )));
    }
    Ok(())
}

/// Wigner value of a single-mode operator at one phase-space point.
/// Complex in general; real for Hermitian input.
pub fn wigner_value(op: &DensityOperator, x: f64, p: f64) -> Result<C64> {
    require_single_mode(op)?;
    if !x.is_finite() || !p.is_finite() {
        return Err(FockError::InvalidParameter(format!(
            "phase-space point ({x},{p}) must be finite"
        )));
    }
    let gamma = C64::new(x, p);
    let dim = op.space().dim_per_mode();
    let displacer = Displacer::new(eval_dim_for(dim, gamma.norm())?);
    displaced_parity(op.matrix(), &displacer, gamma)
}

/// Shared-displacer evaluation of several same-space operators on one grid.
fn grid_eval(ops: &[&DMatrix<C64>], dim: usize, grid: &GridSpec) -> Result<Vec<WignerGrid>> {
    let displacer = Displacer::new(eval_dim_for(dim, grid.max_radius())?);
    let xs = grid.axis();
    let ps = grid.axis();
    let mut out: Vec<Vec<Vec<C64>>> = vec![Vec::with_capacity(xs.len()); ops.len()];
    for &x in &xs {
        let mut rows: Vec<Vec<C64>> = vec![Vec::with_capacity(ps.len()); ops.len()];
        for &p in &ps {
            let gamma = C64::new(x, p);
            let block = displacer.op_block(gamma, dim)?;
            for (o, op) in ops.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..dim {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    for n in 0..dim {
                        acc += op[(m, n)] * block[(n, m)] * sign;
                    }
                }
                rows[o].push(acc);
            }
        }
        for (o, row) in rows.into_iter().enumerate() {
            out[o].push(row);
        }
    }
    Ok(out
        .into_iter()
        .map(|values| WignerGrid { x_axis: xs.clone(), p_axis: ps.clone(), values })
        .collect())
}

/// Wigner map of a single-mode operator over a square grid.
pub fn wigner_grid(op: &DensityOperator, grid: &GridSpec) -> Result<WignerGrid> {
    require_single_mode(op)?;
    let dim = op.space().dim_per_mode();
    Ok(grid_eval(&[op.matrix()], dim, grid)?.pop().expect("one grid per op"))
}

/// Origin Wigner value of the given mode's reduced state: the parity
/// expectation, normalized by the trace. +1 for vacuum, -1 for one photon.
pub fn wigner_origin_negativity(rho: &DensityOperator, mode: usize) -> Result<f64> {
    let reduced;
    let one_mode = if rho.space().modes() == 1 {
        if mode != 0 {
            return Err(FockError::InvalidMode(format!(
                "mode {mode} out of range for a single-mode operator"
            )));
        }
        rho
    } else {
        reduced = rho.partial_trace(&[mode])?;
        &reduced
    };
    let d = one_mode.space().dim_per_mode();
    let m = one_mode.matrix();
    let mut parity = C64::new(0.0, 0.0);
    let mut trace = C64::new(0.0, 0.0);
    for n in 0..d {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        parity += m[(n, n)] * sign;
        trace += m[(n, n)];
    }
    if trace.norm() < 1e-300 {
        return Err(FockError::ZeroNorm("reduced state has zero trace".into()));
    }
    Ok((parity / trace).re)
}

/// Entanglement negativity `(1/2) sum_i (|lambda_i| - lambda_i)` over the
/// spectrum of the partial transpose on `transposed_modes`. The input is
/// trace-normalized first, so unnormalized heralded blocks are accepted.
pub fn entanglement_negativity(rho: &DensityOperator, transposed_modes: &[usize]) -> Result<f64> {
    let tr = rho.trace().re;
    if tr.abs() < 1e-300 {
        return Err(FockError::ZeroNorm("operator has zero trace".into()));
    }
    let pt = rho.partial_transpose(transposed_modes)?;
    let eigs = hermitian_eigenvalues(pt.matrix())?;
    Ok(eigs.iter().map(|&l| (l.abs() - l).max(0.0)).sum::<f64>() / (2.0 * tr))
}

/// Overlap fidelity `|<a|b>|^2` between two pure states, insensitive to the
/// amplitude normalization and carried weights of either input.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na < 1e-300 || nb < 1e-300 {
        return Err(FockError::ZeroNorm("fidelity of a zero-norm state".into()));
    }
    let ov = a.inner(b)?;
    Ok((ov.norm() / (na * nb)).powi(2))
}

/// Fidelity `<a|rho|a>` between a pure reference and a density operator,
/// normalized by the reference norm and the operator trace.
pub fn fidelity_mixed(a: &PureState, rho: &DensityOperator) -> Result<f64> {
    if a.space() != rho.space() {
        return Err(FockError::SpaceMismatch(
            "fidelity arguments live on different spaces".into(),
        ));
    }
    let na2 = a.norm().powi(2);
    let tr = rho.trace().re;
    if na2 < 1e-300 || tr.abs() < 1e-300 {
        return Err(FockError::ZeroNorm("fidelity of a zero-weight input".into()));
    }
    let v = a.amplitudes();
    let quad = (v.adjoint() * rho.matrix() * v)[(0, 0)];
    Ok((quad.re / (na2 * tr)).clamp(0.0, 1.0))
}

/// Population of the DV mode beyond the declared qubit/qutrit levels.
pub fn dv_leakage(rho: &DensityOperator, dv_mode: usize, dv_dim: usize) -> Result<f64> {
    let d = rho.space().dim_per_mode();
    let mut leak = 0.0;
    for k in dv_dim..d {
        leak += rho.mode_population(dv_mode, k)?;
    }
    Ok(leak)
}

/// Wigner maps of all `dv_dim x dv_dim` DV blocks `<k|rho|l>` of a two-mode
/// hybrid state, in the number or (qubit-only) rotated basis.
pub fn hybrid_blocks(
    rho: &DensityOperator,
    dv_mode: usize,
    dv_dim: usize,
    basis: DvBasis,
    grid: &GridSpec,
) -> Result<HybridBlockGrid> {
    if rho.space().modes() != 2 {
        return Err(FockError::InvalidMode(format!(
            "hybrid block grids need a two-mode state, got {} modes",
            rho.space().modes()
        )));
    }
    if !(dv_dim == 2 || dv_dim == 3) {
        return Err(FockError::InvalidParameter(format!(
            "DV dimension must be 2 or 3, got {dv_dim}"
        )));
    }
    if basis == DvBasis::Rotated && dv_dim != 2 {
        return Err(FockError::InvalidParameter(
            "rotated |+>/|-> basis is defined for qubit blocks only".into(),
        ));
    }
    let leak = dv_leakage(rho, dv_mode, dv_dim)?;
    let mut raw: Vec<DMatrix<C64>> = Vec::with_capacity(dv_dim * dv_dim);
    for k in 0..dv_dim {
        for l in 0..dv_dim {
            raw.push(rho.mode_block(dv_mode, k, l)?.matrix().clone());
        }
    }
    let ops: Vec<DMatrix<C64>> = match basis {
        DvBasis::Number => raw,
        DvBasis::Rotated => {
            // |u_0> = |+>, |u_1> = |->; <u_k|rho|u_l> = (1/2) sum s_ki s_lj B_ij.
            let sign = [[1.0, 1.0], [1.0, -1.0]];
            let mut rotated = Vec::with_capacity(4);
            for k in 0..2 {
                for l in 0..2 {
                    let mut acc = &raw[0] * C64::new(0.0, 0.0);
                    for i in 0..2 {
                        for j in 0..2 {
                            acc += &raw[i * 2 + j] * C64::new(0.5 * sign[k][i] * sign[l][j], 0.0);
                        }
                    }
                    rotated.push(acc);
                }
            }
            rotated
        }
    };
    let refs: Vec<&DMatrix<C64>> = ops.iter().collect();
    let blocks = grid_eval(&refs, rho.space().dim_per_mode(), grid)?;
    Ok(HybridBlockGrid { dv_dim, basis, blocks, dv_leakage: leak })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ModeSpace, PureState};
    use crate::states::{cat_state, subtracted_squeezed, CatParity, SqueezeParam};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn vacuum_density(dim: usize) -> DensityOperator {
        PureState::vacuum(ModeSpace::single(dim).unwrap())
            .to_density()
    }

    fn fock_density(level: usize, dim: usize) -> DensityOperator {
        PureState::basis_state(ModeSpace::single(dim).unwrap(), &[level])
            .unwrap()
            .to_density()
    }

    #[test]
    fn grid_spec_axis_and_default() {
        let g = GridSpec::default_square();
        assert_eq!(g.points, 81);
        let ax = g.axis();
        assert_abs_diff_eq!(ax[0], -4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ax[80], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.step(), 0.1, epsilon = 1e-15);
        assert!(GridSpec::new(1.0, 1.0, 5).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 1).is_err());
    }

    #[test]
    fn vacuum_wigner_is_unit_gaussian() {
        let rho = vacuum_density(8);
        let w0 = wigner_value(&rho, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(w0.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w0.im, 0.0, epsilon = 1e-12);
        let w = wigner_value(&rho, 1.2, -0.7).unwrap();
        assert_abs_diff_eq!(w.re, (-0.5f64 * (1.2 * 1.2 + 0.7 * 0.7)).exp(), epsilon = 1e-10);
        // Far corner: true value ~1.1e-7; demands the padded evaluation space.
        let far = wigner_value(&rho, 4.0, 4.0).unwrap();
        assert_abs_diff_eq!(far.re, (-16.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn single_photon_wigner_profile() {
        let rho = fock_density(1, 8);
        assert_abs_diff_eq!(wigner_value(&rho, 0.0, 0.0).unwrap().re, -1.0, epsilon = 1e-12);
        // -(1 - 4|beta|^2) e^{-2|beta|^2}, beta = (x+ip)/2: zero ring at |beta| = 1/2.
        assert_abs_diff_eq!(wigner_value(&rho, 1.0, 0.0).unwrap().re, 0.0, epsilon = 1e-12);
        let x = 2.0;
        assert_abs_diff_eq!(
            wigner_value(&rho, x, 0.0).unwrap().re,
            3.0 * (-2.0f64).exp(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn lossy_photon_origin_crosses_at_half() {
        // diag(1-eta, eta) at the origin gives 1 - 2 eta.
        for eta in [0.0, 0.3, 0.5, 0.9] {
            let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
                C64::new(1.0 - eta, 0.0),
                C64::new(eta, 0.0),
                C64::new(0.0, 0.0),
            ]));
            let rho = DensityOperator::from_matrix(ModeSpace::single(3).unwrap(), m).unwrap();
            assert_abs_diff_eq!(
                wigner_value(&rho, 0.0, 0.0).unwrap().re,
                1.0 - 2.0 * eta,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                wigner_origin_negativity(&rho, 0).unwrap(),
                1.0 - 2.0 * eta,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn grid_integral_approximates_trace() {
        let grid = GridSpec::new(-5.0, 5.0, 101).unwrap();
        let zeta = SqueezeParam::from_db(3.0).unwrap();
        let sq = subtracted_squeezed(0, &zeta, 16).unwrap().to_density();
        let g = wigner_grid(&sq, &grid).unwrap();
        assert_abs_diff_eq!(g.integral().re, 1.0, epsilon = 0.02);
        assert_abs_diff_eq!(g.integral().im, 0.0, epsilon = 1e-10);
        let cat = cat_state(1.0, CatParity::Even, 16)
            .unwrap()
            .to_density();
        let gc = wigner_grid(&cat, &grid).unwrap();
        assert_abs_diff_eq!(gc.integral().re, 1.0, epsilon = 0.02);
    }

    #[test]
    fn origin_negativity_is_parity_expectation() {
        let zeta = SqueezeParam::from_db(3.0).unwrap();
        // Squeezed vacuum is even: parity exactly +1.
        let sq = subtracted_squeezed(0, &zeta, 20).unwrap().to_density();
        assert_abs_diff_eq!(wigner_origin_negativity(&sq, 0).unwrap(), 1.0, epsilon = 1e-12);
        // One subtraction flips parity.
        let sub = subtracted_squeezed(1, &zeta, 20)
            .unwrap()
            .normalized()
            .unwrap()
            .to_density();
        assert_abs_diff_eq!(wigner_origin_negativity(&sub, 0).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn origin_negativity_reduces_multimode_input() {
        // |1>|0> : mode 0 has parity -1, mode 1 has +1.
        let space = ModeSpace::new(2, 6).unwrap();
        let rho = PureState::basis_state(space, &[1, 0])
            .unwrap()
            .to_density();
        assert_abs_diff_eq!(wigner_origin_negativity(&rho, 0).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wigner_origin_negativity(&rho, 1).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn negativity_of_bell_pair_is_half() {
        let space = ModeSpace::new(2, 4).unwrap();
        let mut amps = DVector::from_element(space.total_dim(), C64::new(0.0, 0.0));
        amps[space.index(&[0, 1]).unwrap()] = C64::new(1.0, 0.0);
        amps[space.index(&[1, 0]).unwrap()] = C64::new(1.0, 0.0);
        let rho = PureState::from_amplitudes(space, amps)
            .unwrap()
            .normalized()
            .unwrap()
            .to_density();
        assert_abs_diff_eq!(entanglement_negativity(&rho, &[0]).unwrap(), 0.5, epsilon = 1e-12);
        // Same answer transposing the other side, and for unnormalized input.
        assert_abs_diff_eq!(entanglement_negativity(&rho, &[1]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn negativity_product_state_is_zero() {
        let space = ModeSpace::new(2, 5).unwrap();
        let rho = PureState::basis_state(space, &[2, 1])
            .unwrap()
            .to_density();
        assert!(entanglement_negativity(&rho, &[0]).unwrap() < 1e-12);
    }

    #[test]
    fn negativity_maximally_entangled_qutrit_is_one() {
        let space = ModeSpace::new(2, 4).unwrap();
        let mut amps = DVector::from_element(space.total_dim(), C64::new(0.0, 0.0));
        for k in 0..3 {
            amps[space.index(&[k, k]).unwrap()] = C64::new(1.0, 0.0);
        }
        let rho = PureState::from_amplitudes(space, amps)
            .unwrap()
            .normalized()
            .unwrap()
            .to_density();
        assert_abs_diff_eq!(entanglement_negativity(&rho, &[0]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_properties() {
        let cat = cat_state(1.0, CatParity::Even, 16).unwrap();
        let odd = cat_state(1.0, CatParity::Odd, 16).unwrap();
        assert_abs_diff_eq!(fidelity(&cat, &cat).unwrap(), 1.0, epsilon = 1e-12);
        assert!(fidelity(&cat, &odd).unwrap() < 1e-12);
        // Symmetric, and insensitive to scaling of either argument.
        let scaled = cat.scaled(C64::new(0.0, 2.5));
        let f1 = fidelity(&scaled, &odd).unwrap();
        let f2 = fidelity(&odd, &scaled).unwrap();
        assert_abs_diff_eq!(f1, f2, epsilon = 1e-15);
        // Mixed-state form agrees with the pure overlap.
        let rho = cat.to_density();
        let zeta = SqueezeParam::from_db(3.0).unwrap();
        let sq = subtracted_squeezed(0, &zeta, 16).unwrap();
        assert_abs_diff_eq!(
            fidelity_mixed(&sq, &rho).unwrap(),
            fidelity(&sq, &cat).unwrap(),
            epsilon = 1e-12
        );
    }

    /// (|0>|f0> + |1>|f1>)/sqrt(2) with f0 = squeezed vacuum, f1 = 1PS.
    fn hybrid_fixture(dim: usize) -> DensityOperator {
        // dim >= 16 keeps the 3 dB squeeze tail under the strict constructor limit.
        let zeta = SqueezeParam::from_db(3.0).unwrap();
        let f0 = subtracted_squeezed(0, &zeta, dim).unwrap();
        let f1 = subtracted_squeezed(1, &zeta, dim)
            .unwrap()
            .normalized()
            .unwrap()
            .with_unit_weight();
        let dv0 = PureState::basis_state(ModeSpace::single(dim).unwrap(), &[0]).unwrap();
        let dv1 = PureState::basis_state(ModeSpace::single(dim).unwrap(), &[1]).unwrap();
        let branch0 = dv0.tensor(&f0).unwrap();
        let branch1 = dv1.tensor(&f1).unwrap();
        branch0
            .add(&branch1)
            .unwrap()
            .normalized()
            .unwrap()
            .to_density()
    }

    #[test]
    fn hybrid_blocks_number_basis_diagonals() {
        let rho = hybrid_fixture(16);
        let grid = GridSpec::new(-2.0, 2.0, 9).unwrap();
        let hb = hybrid_blocks(&rho, 0, 2, DvBasis::Number, &grid).unwrap();
        assert!(hb.dv_leakage < 1e-12);
        // Block weights are 1/2 each; origin parities +1 (0PS) and -1 (1PS).
        let mid = 4;
        assert_abs_diff_eq!(hb.block(0, 0).values[mid][mid].re, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(hb.block(1, 1).values[mid][mid].re, -0.5, epsilon = 1e-10);
        // Conjugate symmetry pointwise.
        let mut worst: f64 = 0.0;
        for k in 0..2 {
            for l in 0..2 {
                for (row_kl, row_lk) in hb.block(k, l).values.iter().zip(&hb.block(l, k).values) {
                    for (v, w) in row_kl.iter().zip(row_lk) {
                        worst = worst.max((v - w.conj()).norm());
                    }
                }
            }
        }
        assert!(worst < 1e-10, "conjugate symmetry violated: {worst}");
    }

    #[test]
    fn rotated_blocks_displace_oppositely() {
        let rho = hybrid_fixture(16);
        // Wide enough that the antisqueezed axis (variance 2 at 3 dB) is covered.
        let grid = GridSpec::new(-5.0, 5.0, 41).unwrap();
        let hb = hybrid_blocks(&rho, 0, 2, DvBasis::Rotated, &grid).unwrap();
        let xm = |g: &WignerGrid| -> f64 {
            let mut acc = 0.0;
            for (i, &x) in g.x_axis.iter().enumerate() {
                for v in &g.values[i] {
                    acc += x * v.re;
                }
            }
            acc
        };
        let plus = xm(hb.block(0, 0));
        let minus = xm(hb.block(1, 1));
        assert!(plus > 0.01, "|+> block should displace to +x, got {plus}");
        assert!(minus < -0.01, "|-> block should displace to -x, got {minus}");
        assert_abs_diff_eq!(plus + minus, 0.0, epsilon = 1e-8);
        // Traces of the rotated diagonals still sum to 1.
        let tr = hb.block(0, 0).integral().re + hb.block(1, 1).integral().re;
        assert_abs_diff_eq!(tr, 1.0, epsilon = 0.03);
    }

    #[test]
    fn dv_dephasing_scales_off_diagonal_blocks_only() {
        let rho = hybrid_fixture(16);
        let sigma = 0.35;
        let noisy = crate::channels::phase_noise_channel(
            &rho,
            0,
            &crate::channels::PhaseNoiseSpec::from_radians(sigma).unwrap(),
        )
        .unwrap();
        let grid = GridSpec::new(-2.0, 2.0, 7).unwrap();
        let before = hybrid_blocks(&rho, 0, 2, DvBasis::Number, &grid).unwrap();
        let after = hybrid_blocks(&noisy, 0, 2, DvBasis::Number, &grid).unwrap();
        let decay = (-sigma * sigma / 2.0).exp();
        for k in 0..2 {
            for l in 0..2 {
                let scale = if k == l { 1.0 } else { decay };
                for (rb, ra) in before.block(k, l).values.iter().zip(&after.block(k, l).values) {
                    for (vb, va) in rb.iter().zip(ra) {
                        assert_abs_diff_eq!(va.re, vb.re * scale, epsilon = 1e-6);
                        assert_abs_diff_eq!(va.im, vb.im * scale, epsilon = 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn block_grid_input_validation() {
        let rho = hybrid_fixture(16);
        let grid = GridSpec::new(-1.0, 1.0, 3).unwrap();
        assert!(hybrid_blocks(&rho, 0, 4, DvBasis::Number, &grid).is_err());
        assert!(hybrid_blocks(&rho, 0, 3, DvBasis::Rotated, &grid).is_err());
        let one_mode = vacuum_density(4);
        assert!(hybrid_blocks(&one_mode, 0, 2, DvBasis::Number, &grid).is_err());
        assert!(wigner_value(&rho, 0.0, 0.0).is_err());
        // Absurd displacement radius overflows the padded evaluation space.
        assert!(matches!(
            wigner_value(&vacuum_density(4), 60.0, 0.0),
            Err(FockError::TruncationInsufficient { .. })
        ));
    }
}
