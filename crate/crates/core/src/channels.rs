//! Decoherence channels on the truncated lattice: photon loss, Gaussian
//! phase noise, and a block-resolved fast path for hybrid states whose first
//! subsystem occupies only a few Fock levels.
//!
//! Loss is applied through the photon-number Kraus decomposition of the
//! beam-splitter-to-vacuum-ancilla model; the two are the same channel, and
//! the tests compare them directly. Gaussian dephasing averages the phase
//! rotation `exp(i phi n)` over `phi ~ N(0, sigma^2)`, either by
//! Gauss-Hermite quadrature over caller-built states or analytically through
//! the characteristic function `exp(-sigma^2 k^2 / 2)`.

use nalgebra::DMatrix;

use crate::error::{FockError, Result};
use crate::fock::{hermitian_eigenvalues, C64, DensityOperator, ModeSpace, PureState};

/// Intensity transmissions for the two channel arms: `eta_a` on the DV mode,
/// `eta_b` on the CV mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub eta_a: f64,
    pub eta_b: f64,
}

impl LossSpec {
    pub fn new(eta_a: f64, eta_b: f64) -> Result<Self> {
        check_eta(eta_a)?;
        check_eta(eta_b)?;
        Ok(Self { eta_a, eta_b })
    }

    pub fn lossless() -> Self {
        Self { eta_a: 1.0, eta_b: 1.0 }
    }

    pub fn symmetric(eta: f64) -> Result<Self> {
        Self::new(eta, eta)
    }

    pub fn is_lossless(&self) -> bool {
        self.eta_a == 1.0 && self.eta_b == 1.0
    }
}

/// Standard deviation of the Gaussian phase distribution, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseNoiseSpec {
    sigma: f64,
}

impl PhaseNoiseSpec {
    pub fn from_radians(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(FockError::InvalidParameter(format!(
                "phase-noise sigma must be finite and nonnegative, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        Self::from_radians(degrees * std::f64::consts::PI / 180.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_zero(&self) -> bool {
        self.sigma == 0.0
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(FockError::InvalidParameter(format!(
            "transmission must lie in [0,1], got {eta}"
        )));
    }
    Ok(())
}

/// Kraus operators of the loss channel with intensity transmission `eta`:
/// `K_k[n-k, n] = sqrt(binom(n,k) eta^(n-k) (1-eta)^k)`.
pub fn kraus_loss_ops(eta: f64, dim: usize) -> Result<Vec<DMatrix<C64>>> {
    check_eta(eta)?;
    let mut ops = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut m: DMatrix<C64> = DMatrix::zeros(dim, dim);
        // Running amplitude a(n,k) = sqrt(binom(n,k)) eta^((n-k)/2) (1-eta)^(k/2),
        // built multiplicatively to stay accurate at large n.
        let mut amp = (1.0 - eta).powf(k as f64 / 2.0);
        for n in k..dim {
            if n > k {
                // a(n,k)/a(n-1,k) = sqrt(n/(n-k)) * sqrt(eta)
                amp *= (n as f64 / (n - k) as f64).sqrt() * eta.sqrt();
            }
            m[(n - k, n)] = C64::new(amp, 0.0);
        }
        ops.push(m);
    }
    Ok(ops)
}

/// Photon loss with intensity transmission `eta` on one mode.
///
/// Equivalent to mixing the mode with a vacuum ancilla on a beam splitter
/// with `cos^2 theta = eta` and tracing the ancilla; implemented through the
/// Kraus decomposition of that map.
pub fn loss_channel(rho: &DensityOperator, mode: usize, eta: f64) -> Result<DensityOperator> {
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let ops = kraus_loss_ops(eta, rho.space().dim_per_mode())?;
    rho.apply_kraus_one_mode(&ops, mode)
}

/// Gaussian dephasing of one mode: matrix element between levels `n_i`, `n_j`
/// scales by the Gaussian characteristic function `exp(-sigma^2 (n_i-n_j)^2 / 2)`.
pub fn phase_noise_channel(
    rho: &DensityOperator,
    mode: usize,
    spec: &PhaseNoiseSpec,
) -> Result<DensityOperator> {
    if spec.is_zero() {
        return Ok(rho.clone());
    }
    let space = *rho.space();
    if mode >= space.modes() {
        return Err(FockError::InvalidMode(format!(
            "mode {mode} out of range for {} modes",
            space.modes()
        )));
    }
    let dim = space.dim_per_mode();
    let stride = space.stride(mode);
    let n = space.total_dim();
    let half_var = spec.sigma() * spec.sigma() / 2.0;
    let mut decay = vec![0.0f64; dim];
    for (k, d) in decay.iter_mut().enumerate() {
        *d = (-half_var * (k * k) as f64).exp();
    }
    let mut matrix = rho.matrix().clone();
    for i in 0..n {
        let ni = (i / stride) % dim;
        for j in 0..n {
            let nj = (j / stride) % dim;
            let diff = ni.abs_diff(nj);
            if diff > 0 {
                matrix[(i, j)] *= decay[diff];
            }
        }
    }
    DensityOperator::from_matrix(space, matrix)
}

/// Nodes and weights of the `n`-point Gauss-Hermite rule (weight `e^{-x^2}`),
/// computed from the Jacobi-matrix eigendecomposition.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(FockError::InvalidParameter(
            "quadrature order must be positive".into(),
        ));
    }
    let mut jacobi: DMatrix<f64> = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (node, std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

const PHASE_QUAD_NODES: usize = 21;
const PHASE_QUAD_TOL: f64 = 1e-8;

/// Ensemble average `rho = E_phi |Psi(phi)><Psi(phi)|` over a Gaussian phase
/// by Gauss-Hermite quadrature; the node count is doubled and the result
/// accepted only if the two rules agree elementwise within 1e-8.
///
/// The builder must return normalized states (total weight 1 within 1e-8).
pub fn phase_noise_average<F>(state_builder: F, spec: &PhaseNoiseSpec) -> Result<DensityOperator>
where
    F: Fn(f64) -> Result<PureState>,
{
    if spec.is_zero() {
        let psi = built_normalized(&state_builder, 0.0)?;
        return Ok(psi.to_density());
    }
    let coarse = quadrature_average(&state_builder, spec.sigma(), PHASE_QUAD_NODES)?;
    let fine = quadrature_average(&state_builder, spec.sigma(), 2 * PHASE_QUAD_NODES)?;
    let mut delta = 0.0f64;
    for (a, b) in coarse.matrix().iter().zip(fine.matrix().iter()) {
        delta = delta.max((a - b).norm());
    }
    if delta > PHASE_QUAD_TOL {
        return Err(FockError::QuadratureNotConverged { delta });
    }
    Ok(fine)
}

fn built_normalized<F>(builder: &F, phi: f64) -> Result<PureState>
where
    F: Fn(f64) -> Result<PureState>,
{
    let psi = builder(phi)?;
    if (psi.total_weight() - 1.0).abs() > 1e-8 {
        return Err(FockError::InvalidParameter(format!(
            "phase-noise state builder returned weight {} at phi={phi}; states must be normalized",
            psi.total_weight()
        )));
    }
    Ok(psi)
}

fn quadrature_average<F>(builder: &F, sigma: f64, nodes: usize) -> Result<DensityOperator>
where
    F: Fn(f64) -> Result<PureState>,
{
    let (xs, ws) = gauss_hermite(nodes)?;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mut acc: Option<DensityOperator> = None;
    for (x, w) in xs.iter().zip(ws.iter()) {
        // Substitution phi = sqrt(2) sigma x maps the Gaussian density onto
        // the e^{-x^2} weight.
        let phi = std::f64::consts::SQRT_2 * sigma * x;
        let psi = built_normalized(builder, phi)?;
        let rho = psi.to_density();
        match &mut acc {
            None => {
                let mut z = DensityOperator::zeros(*rho.space());
                z.accumulate(&rho, w * inv_sqrt_pi)?;
                acc = Some(z);
            }
            Some(a) => a.accumulate(&rho, w * inv_sqrt_pi)?,
        }
    }
    acc.ok_or_else(|| FockError::InvalidParameter("empty quadrature".into()))
}

/// Two-mode hybrid operator stored block-resolved: a DV mode confined to
/// `dv_dim` Fock levels tensored with a CV mode of dimension `cv_dim`, kept
/// as the grid of CV-mode operators `B[k][l] = <k|rho|l>`.
///
/// Loss on the DV mode reduces to index algebra on block labels and loss on
/// the CV mode acts inside each block, so lossy sweeps never materialize the
/// full square-lattice density matrix. `to_density` embeds back for
/// cross-checks against the generic route.
#[derive(Debug, Clone)]
pub struct DvBlocks {
    dv_dim: usize,
    cv_dim: usize,
    blocks: Vec<DMatrix<C64>>,
}

impl DvBlocks {
    /// Builds from a two-mode pure state; `dv_mode` selects which tensor
    /// factor is the DV mode. Population on DV levels >= `dv_dim` is
    /// reported as an error if it exceeds `1e-9` of the total (raise
    /// `dv_dim` instead of silently truncating). The carried weight is
    /// dropped; blocks describe the normalized state.
    pub fn from_pure(state: &PureState, dv_mode: usize, dv_dim: usize) -> Result<Self> {
        let space = *state.space();
        if space.modes() != 2 {
            return Err(FockError::SpaceMismatch(format!(
                "block representation needs a two-mode state, got {} modes",
                space.modes()
            )));
        }
        if dv_mode > 1 {
            return Err(FockError::InvalidMode(format!(
                "dv_mode must be 0 or 1, got {dv_mode}"
            )));
        }
        let dim = space.dim_per_mode();
        if dv_dim == 0 || dv_dim > dim {
            return Err(FockError::InvalidParameter(format!(
                "dv_dim must lie in 1..={dim}, got {dv_dim}"
            )));
        }
        let psi = state.normalized()?;
        let mut leak = 0.0;
        for k in dv_dim..dim {
            leak += psi.mode_population(dv_mode, k)?;
        }
        if leak > 1e-9 {
            return Err(FockError::TruncationInsufficient {
                what: format!("DV support beyond {dv_dim} levels"),
                tail: leak,
                limit: 1e-9,
            });
        }
        let amps = psi.amplitudes();
        let at = |k: usize, m: usize| -> C64 {
            let idx = if dv_mode == 0 { k * dim + m } else { m * dim + k };
            amps[idx]
        };
        let mut blocks = Vec::with_capacity(dv_dim * dv_dim);
        for k in 0..dv_dim {
            for l in 0..dv_dim {
                let mut b = DMatrix::zeros(dim, dim);
                for m in 0..dim {
                    let akm = at(k, m);
                    if akm == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for n in 0..dim {
                        b[(m, n)] = akm * at(l, n).conj();
                    }
                }
                blocks.push(b);
            }
        }
        Ok(Self { dv_dim, cv_dim: dim, blocks })
    }

    /// Builds from a two-mode density operator (same conventions as
    /// [`DvBlocks::from_pure`]).
    pub fn from_density(rho: &DensityOperator, dv_mode: usize, dv_dim: usize) -> Result<Self> {
        let space = *rho.space();
        if space.modes() != 2 {
            return Err(FockError::SpaceMismatch(format!(
                "block representation needs a two-mode operator, got {} modes",
                space.modes()
            )));
        }
        if dv_mode > 1 {
            return Err(FockError::InvalidMode(format!(
                "dv_mode must be 0 or 1, got {dv_mode}"
            )));
        }
        let dim = space.dim_per_mode();
        if dv_dim == 0 || dv_dim > dim {
            return Err(FockError::InvalidParameter(format!(
                "dv_dim must lie in 1..={dim}, got {dv_dim}"
            )));
        }
        let total = rho.trace().re;
        let mut leak = 0.0;
        for k in dv_dim..dim {
            leak += rho.mode_population(dv_mode, k)?;
        }
        if total > 0.0 && leak / total > 1e-9 {
            return Err(FockError::TruncationInsufficient {
                what: format!("DV support beyond {dv_dim} levels"),
                tail: leak / total,
                limit: 1e-9,
            });
        }
        let m = rho.matrix();
        let idx = |k: usize, i: usize| -> usize {
            if dv_mode == 0 { k * dim + i } else { i * dim + k }
        };
        let mut blocks = Vec::with_capacity(dv_dim * dv_dim);
        for k in 0..dv_dim {
            for l in 0..dv_dim {
                let mut b = DMatrix::zeros(dim, dim);
                for i in 0..dim {
                    for j in 0..dim {
                        b[(i, j)] = m[(idx(k, i), idx(l, j))];
                    }
                }
                blocks.push(b);
            }
        }
        Ok(Self { dv_dim, cv_dim: dim, blocks })
    }

    pub fn dv_dim(&self) -> usize {
        self.dv_dim
    }

    pub fn cv_dim(&self) -> usize {
        self.cv_dim
    }

    /// Block `<k|rho|l>` as a CV-mode matrix.
    pub fn block(&self, k: usize, l: usize) -> Result<&DMatrix<C64>> {
        if k >= self.dv_dim || l >= self.dv_dim {
            return Err(FockError::InvalidParameter(format!(
                "block ({k},{l}) out of range for dv_dim {}",
                self.dv_dim
            )));
        }
        Ok(&self.blocks[k * self.dv_dim + l])
    }

    pub fn trace(&self) -> f64 {
        let mut t = C64::new(0.0, 0.0);
        for k in 0..self.dv_dim {
            let b = &self.blocks[k * self.dv_dim + k];
            for i in 0..self.cv_dim {
                t += b[(i, i)];
            }
        }
        t.re
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t.abs() < 1e-300 {
            return Err(FockError::ZeroNorm("block operator trace".into()));
        }
        let f = C64::new(1.0 / t, 0.0);
        Ok(Self {
            dv_dim: self.dv_dim,
            cv_dim: self.cv_dim,
            blocks: self.blocks.iter().map(|b| b * f).collect(),
        })
    }

    /// Population of DV level `k` (trace of the diagonal block).
    pub fn dv_populations(&self) -> Vec<f64> {
        (0..self.dv_dim)
            .map(|k| {
                let b = &self.blocks[k * self.dv_dim + k];
                (0..self.cv_dim).map(|i| b[(i, i)].re).sum()
            })
            .collect()
    }

    /// Photon loss on the DV mode: `B'_{kl} = sum_j a(k+j,j) a(l+j,j) B_{k+j,l+j}`
    /// with the loss Kraus amplitudes `a(n,j)`.
    pub fn apply_dv_loss(&self, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let s = self.dv_dim;
        let d = self.cv_dim;
        // a[n][j]: amplitude of |n> -> |n-j>.
        let kraus = kraus_loss_ops(eta, s)?;
        let amp = |n: usize, j: usize| -> f64 { kraus[j][(n - j, n)].re };
        let mut blocks = vec![DMatrix::zeros(d, d); s * s];
        for k in 0..s {
            for l in 0..s {
                let mut b: DMatrix<C64> = DMatrix::zeros(d, d);
                for j in 0..s {
                    let (ks, ls) = (k + j, l + j);
                    if ks >= s || ls >= s {
                        break;
                    }
                    let w = amp(ks, j) * amp(ls, j);
                    if w != 0.0 {
                        b += &self.blocks[ks * s + ls] * C64::new(w, 0.0);
                    }
                }
                blocks[k * s + l] = b;
            }
        }
        Ok(Self { dv_dim: s, cv_dim: d, blocks })
    }

    /// Photon loss on the CV mode, applied inside each block.
    pub fn apply_cv_loss(&self, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        if eta == 1.0 {
            return Ok(self.clone());
        }
        let ops = kraus_loss_ops(eta, self.cv_dim)?;
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut out: DMatrix<C64> = DMatrix::zeros(self.cv_dim, self.cv_dim);
                for k in &ops {
                    out += k * b * k.adjoint();
                }
                out
            })
            .collect();
        Ok(Self { dv_dim: self.dv_dim, cv_dim: self.cv_dim, blocks })
    }

    /// Gaussian dephasing of the DV mode: block `(k,l)` scales by
    /// `exp(-sigma^2 (k-l)^2 / 2)`.
    pub fn apply_dv_phase_noise(&self, spec: &PhaseNoiseSpec) -> Self {
        let half_var = spec.sigma() * spec.sigma() / 2.0;
        let s = self.dv_dim;
        let blocks = (0..s * s)
            .map(|i| {
                let (k, l) = (i / s, i % s);
                let diff = k.abs_diff(l) as f64;
                &self.blocks[i] * C64::new((-half_var * diff * diff).exp(), 0.0)
            })
            .collect();
        Self { dv_dim: s, cv_dim: self.cv_dim, blocks }
    }

    /// Entanglement negativity across the DV|CV cut: eigenvalues of the
    /// partial transpose on the DV label, `1/2 sum (|e| - e)`, after trace
    /// normalization.
    pub fn pt_negativity(&self) -> Result<f64> {
        let normed = self.normalized()?;
        let s = normed.dv_dim;
        let d = normed.cv_dim;
        let n = s * d;
        let mut m: DMatrix<C64> = DMatrix::zeros(n, n);
        // (rho^T_DV)[(k,i),(l,j)] = <l,i| rho |k,j> = B_{lk}[i,j]
        for k in 0..s {
            for l in 0..s {
                let b = &normed.blocks[l * s + k];
                for i in 0..d {
                    for j in 0..d {
                        m[(k * d + i, l * d + j)] = b[(i, j)];
                    }
                }
            }
        }
        let eigs = hermitian_eigenvalues(&m)?;
        Ok(eigs.iter().map(|e| (e.abs() - e) / 2.0).sum())
    }

    /// Origin Wigner value (photon-number parity) of diagonal block `k`,
    /// normalized by the block trace.
    pub fn block_origin_parity(&self, k: usize) -> Result<f64> {
        let b = self.block(k, k)?;
        let mut parity = 0.0;
        let mut trace = 0.0;
        for i in 0..self.cv_dim {
            let p = b[(i, i)].re;
            trace += p;
            parity += if i % 2 == 0 { p } else { -p };
        }
        if trace.abs() < 1e-300 {
            return Err(FockError::ZeroNorm(format!("diagonal block {k}")));
        }
        Ok(parity / trace)
    }

    /// Embeds into a square two-mode lattice (DV mode first) of per-mode
    /// dimension `dim >= max(dv_dim, cv_dim)`, for cross-checks against the
    /// generic route.
    pub fn to_density(&self, dim: usize) -> Result<DensityOperator> {
        if dim < self.cv_dim.max(self.dv_dim) {
            return Err(FockError::DimensionMismatch {
                expected: self.cv_dim.max(self.dv_dim),
                got: dim,
            });
        }
        let space = ModeSpace::new(2, dim)?;
        let n = space.total_dim();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..self.dv_dim {
            for l in 0..self.dv_dim {
                let b = &self.blocks[k * self.dv_dim + l];
                for i in 0..self.cv_dim {
                    for j in 0..self.cv_dim {
                        m[(k * dim + i, l * dim + j)] = b[(i, j)];
                    }
                }
            }
        }
        DensityOperator::from_matrix(space, m)
    }
}
