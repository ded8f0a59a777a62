//! Truncated Fock-space containers and the linear algebra they need.
//!
//! A [`ModeSpace`] is `modes` harmonic oscillators, each truncated to Fock
//! levels `0..dim`. Multimode indices flatten with mode 0 as the most
//! significant digit: `index = sum_m occ[m] * dim^(modes-1-m)`, which makes
//! `tensor` a plain Kronecker product with earlier factors on the left.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{FockError, Result};

/// Complex scalar used everywhere.
pub type C64 = Complex64;

/// Tolerance for Hermiticity checks on matrices that claim to be Hermitian.
const HERMITICITY_TOL: f64 = 1e-8;

/// A fixed number of modes, each truncated to the same Fock dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSpace {
    modes: usize,
    dim: usize,
}

impl ModeSpace {
    /// Default per-mode truncation used by the scheme drivers.
    pub const DEFAULT_DIM: usize = 20;

    pub fn new(modes: usize, dim: usize) -> Result<Self> {
        if modes == 0 {
            return Err(FockError::InvalidParameter(
                "mode count must be at least 1".into(),
            ));
        }
        if dim < 2 {
            return Err(FockError::InvalidParameter(
                "per-mode dimension must be at least 2".into(),
            ));
        }
        // Guard against index overflow on the flattened lattice.
        let total = (dim as u128).checked_pow(modes as u32);
        match total {
            Some(t) if t <= (usize::MAX as u128) && t <= (1u128 << 32) => Ok(Self { modes, dim }),
            _ => Err(FockError::InvalidParameter(format!(
                "lattice {modes} modes x dim {dim} is too large"
            ))),
        }
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(1, dim)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim_per_mode(&self) -> usize {
        self.dim
    }

    /// Total flattened dimension `dim^modes`.
    pub fn total_dim(&self) -> usize {
        self.dim.pow(self.modes as u32)
    }

    /// Stride of `mode` in the flattened index.
    pub fn stride(&self, mode: usize) -> usize {
        debug_assert!(mode < self.modes);
        self.dim.pow((self.modes - 1 - mode) as u32)
    }

    /// Flattened index of an occupation-number tuple.
    pub fn index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes {
            return Err(FockError::DimensionMismatch {
                expected: self.modes,
                got: occupations.len(),
            });
        }
        let mut idx = 0usize;
        for (m, &n) in occupations.iter().enumerate() {
            if n >= self.dim {
                return Err(FockError::InvalidParameter(format!(
                    "occupation {n} exceeds per-mode dimension {}",
                    self.dim
                )));
            }
            idx = idx * self.dim + n;
            let _ = m;
        }
        Ok(idx)
    }

    /// Occupation-number tuple of a flattened index.
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.total_dim());
        let mut occ = vec![0usize; self.modes];
        let mut rem = index;
        for m in (0..self.modes).rev() {
            occ[m] = rem % self.dim;
            rem /= self.dim;
        }
        occ
    }

    /// Space with `other`'s modes appended after this one's.
    pub fn join(&self, other: &ModeSpace) -> Result<ModeSpace> {
        if self.dim != other.dim {
            return Err(FockError::SpaceMismatch(format!(
                "per-mode dims differ: {} vs {}",
                self.dim, other.dim
            )));
        }
        ModeSpace::new(self.modes + other.modes, self.dim)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(FockError::InvalidMode(format!(
                "mode {mode} out of range for {} modes",
                self.modes
            )));
        }
        Ok(())
    }

    fn check_distinct_modes(&self, modes: &[usize]) -> Result<()> {
        for (i, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..i].contains(&m) {
                return Err(FockError::InvalidMode(format!("mode {m} repeated")));
            }
        }
        Ok(())
    }
}

/// A multimode ket on a truncated lattice.
///
/// The physical vector is `norm_weight * amplitudes`. Operations that
/// renormalize fold the discarded norm into `norm_weight`, so heralding
/// amplitudes survive normalization and remain available for probabilities
/// and amplitude-ratio (`mu`) measurements.
#[derive(Debug, Clone)]
pub struct PureState {
    space: ModeSpace,
    amplitudes: DVector<C64>,
    norm_weight: f64,
}

impl PureState {
    /// Wraps raw amplitudes with unit carried weight.
    pub fn from_amplitudes(space: ModeSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(FockError::DimensionMismatch {
                expected: space.total_dim(),
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            space,
            amplitudes,
            norm_weight: 1.0,
        })
    }

    /// Fock basis state `|occ[0], occ[1], ...>`.
    pub fn basis_state(space: ModeSpace, occupations: &[usize]) -> Result<Self> {
        let idx = space.index(occupations)?;
        let mut amplitudes = DVector::zeros(space.total_dim());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self {
            space,
            amplitudes,
            norm_weight: 1.0,
        })
    }

    pub fn vacuum(space: ModeSpace) -> Self {
        let occ = vec![0usize; space.modes()];
        Self::basis_state(space, &occ).expect("vacuum always representable")
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm_weight(&self) -> f64 {
        self.norm_weight
    }

    /// Norm of the amplitude vector, ignoring the carried weight.
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Norm of the physical vector including the carried weight.
    pub fn total_weight(&self) -> f64 {
        self.norm_weight * self.norm()
    }

    /// Amplitude on a basis state.
    pub fn amplitude(&self, occupations: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.space.index(occupations)?])
    }

    /// Unit-norm copy; the removed norm multiplies into `norm_weight`.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(FockError::ZeroNorm("state vector".into()));
        }
        Ok(Self {
            space: self.space,
            amplitudes: &self.amplitudes / C64::new(n, 0.0),
            norm_weight: self.norm_weight * n,
        })
    }

    /// Copy with carried weight reset to 1 (amplitudes untouched).
    pub fn with_unit_weight(&self) -> Self {
        Self {
            space: self.space,
            amplitudes: self.amplitudes.clone(),
            norm_weight: 1.0,
        }
    }

    /// `<self|other>` on matching spaces, ignoring carried weights.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.space != other.space {
            return Err(FockError::SpaceMismatch(
                "inner product across different spaces".into(),
            ));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Kronecker product; `self`'s modes come first. Weights multiply.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let space = self.space.join(&other.space)?;
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(PureState {
            space,
            amplitudes,
            norm_weight: self.norm_weight * other.norm_weight,
        })
    }

    /// Applies a single-mode operator (`dim x dim`) to one mode.
    pub fn apply_one_mode(&self, op: &DMatrix<C64>, mode: usize) -> Result<PureState> {
        self.space.check_mode(mode)?;
        let d = self.space.dim_per_mode();
        if op.nrows() != d || op.ncols() != d {
            return Err(FockError::DimensionMismatch {
                expected: d,
                got: op.nrows(),
            });
        }
        let s = self.space.stride(mode);
        let total = self.space.total_dim();
        let mut out = DVector::zeros(total);
        let mut vin = DVector::zeros(d);
        let mut vout = DVector::zeros(d);
        let block = s * d;
        let mut hi = 0;
        while hi < total {
            for lo in 0..s {
                let base = hi + lo;
                for a in 0..d {
                    vin[a] = self.amplitudes[base + a * s];
                }
                op.mul_to(&vin, &mut vout);
                for i in 0..d {
                    out[base + i * s] = vout[i];
                }
            }
            hi += block;
        }
        Ok(PureState {
            space: self.space,
            amplitudes: out,
            norm_weight: self.norm_weight,
        })
    }

    /// Applies a two-mode operator (`dim^2 x dim^2`) to an ordered mode pair.
    ///
    /// The operator's first tensor factor acts on `mode_a`, the second on
    /// `mode_b`, regardless of their relative position in this state.
    pub fn apply_two_mode(&self, op: &DMatrix<C64>, mode_a: usize, mode_b: usize) -> Result<PureState> {
        self.space.check_distinct_modes(&[mode_a, mode_b])?;
        let d = self.space.dim_per_mode();
        let dd = d * d;
        if op.nrows() != dd || op.ncols() != dd {
            return Err(FockError::DimensionMismatch {
                expected: dd,
                got: op.nrows(),
            });
        }
        let sa = self.space.stride(mode_a);
        let sb = self.space.stride(mode_b);
        let total = self.space.total_dim();
        let mut out = DVector::zeros(total);
        let mut vin = DVector::zeros(dd);
        let mut vout = DVector::zeros(dd);
        for base in 0..total {
            if (base / sa) % d != 0 || (base / sb) % d != 0 {
                continue;
            }
            for ia in 0..d {
                for ib in 0..d {
                    vin[ia * d + ib] = self.amplitudes[base + ia * sa + ib * sb];
                }
            }
            op.mul_to(&vin, &mut vout);
            for ia in 0..d {
                for ib in 0..d {
                    out[base + ia * sa + ib * sb] = vout[ia * d + ib];
                }
            }
        }
        Ok(PureState {
            space: self.space,
            amplitudes: out,
            norm_weight: self.norm_weight,
        })
    }

    /// Projects one mode onto Fock level `level` and removes it.
    ///
    /// The result is unnormalized; its `total_weight` squared is the
    /// projection probability when the input was normalized with unit weight.
    pub fn project_mode(&self, mode: usize, level: usize) -> Result<PureState> {
        self.space.check_mode(mode)?;
        if self.space.modes() == 1 {
            return Err(FockError::InvalidMode(
                "cannot project away the only mode".into(),
            ));
        }
        let d = self.space.dim_per_mode();
        if level >= d {
            return Err(FockError::InvalidParameter(format!(
                "projection level {level} exceeds per-mode dimension {d}"
            )));
        }
        let reduced = ModeSpace::new(self.space.modes() - 1, d)?;
        let s = self.space.stride(mode);
        let block = s * d;
        let mut out = DVector::zeros(reduced.total_dim());
        let mut ridx = 0usize;
        let total = self.space.total_dim();
        let mut hi = 0;
        while hi < total {
            for lo in 0..s {
                out[ridx] = self.amplitudes[hi + lo + level * s];
                ridx += 1;
            }
            hi += block;
        }
        Ok(PureState {
            space: reduced,
            amplitudes: out,
            norm_weight: self.norm_weight,
        })
    }

    /// Population of Fock level `level` in `mode` (amplitude-norm weighted,
    /// carried weight ignored).
    pub fn mode_population(&self, mode: usize, level: usize) -> Result<f64> {
        self.space.check_mode(mode)?;
        let d = self.space.dim_per_mode();
        if level >= d {
            return Err(FockError::InvalidParameter(format!(
                "level {level} exceeds per-mode dimension {d}"
            )));
        }
        let s = self.space.stride(mode);
        let mut pop = 0.0;
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            if (idx / s) % d == level {
                pop += amp.norm_sqr();
            }
        }
        Ok(pop)
    }

    /// Reduced density operator on `keep`, tracing out every other mode.
    ///
    /// `keep` lists distinct modes; the result's modes follow that order, so
    /// `keep = [2, 0]` also reorders. Carried weight is dropped: the result is
    /// built from the raw amplitudes and then holds `|psi><psi|` unnormalized
    /// if the amplitudes were unnormalized.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityOperator> {
        self.space.check_distinct_modes(keep)?;
        if keep.is_empty() {
            return Err(FockError::InvalidMode("keep set must be non-empty".into()));
        }
        let d = self.space.dim_per_mode();
        let traced: Vec<usize> = (0..self.space.modes())
            .filter(|m| !keep.contains(m))
            .collect();
        let kd = d.pow(keep.len() as u32);
        let td = d.pow(traced.len() as u32);
        let keep_offsets = digit_offsets(&self.space, keep, kd);
        let trace_offsets = digit_offsets(&self.space, &traced, td);
        let mut out = DMatrix::zeros(kd, kd);
        for t in 0..td {
            let toff = trace_offsets[t];
            for i in 0..kd {
                let ai = self.amplitudes[keep_offsets[i] + toff];
                if ai == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..kd {
                    let aj = self.amplitudes[keep_offsets[j] + toff];
                    out[(i, j)] += ai * aj.conj();
                }
            }
        }
        let space = ModeSpace::new(keep.len(), d)?;
        Ok(DensityOperator {
            space,
            matrix: out,
            hermitian: true,
        })
    }

    /// `|psi><psi|` from the raw amplitudes (carried weight dropped).
    pub fn to_density(&self) -> DensityOperator {
        let n = self.space.total_dim();
        let mut matrix = DMatrix::zeros(n, n);
        for i in 0..n {
            let ai = self.amplitudes[i];
            if ai == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                matrix[(i, j)] = ai * self.amplitudes[j].conj();
            }
        }
        DensityOperator {
            space: self.space,
            matrix,
            hermitian: true,
        }
    }

    /// Scales the amplitudes by a complex factor.
    pub fn scaled(&self, factor: C64) -> PureState {
        PureState {
            space: self.space,
            amplitudes: &self.amplitudes * factor,
            norm_weight: self.norm_weight,
        }
    }

    /// Copy with the carried weight replaced (amplitudes untouched).
    pub fn weighted(&self, norm_weight: f64) -> PureState {
        PureState {
            space: self.space,
            amplitudes: self.amplitudes.clone(),
            norm_weight,
        }
    }

    /// Sum of two states on the same space (weights must match; the carried
    /// weight is kept).
    pub fn add(&self, other: &PureState) -> Result<PureState> {
        if self.space != other.space {
            return Err(FockError::SpaceMismatch("adding states".into()));
        }
        if (self.norm_weight - other.norm_weight).abs() > 1e-12 * self.norm_weight.max(1.0) {
            return Err(FockError::InvalidParameter(
                "adding states with different carried weights".into(),
            ));
        }
        Ok(PureState {
            space: self.space,
            amplitudes: &self.amplitudes + &other.amplitudes,
            norm_weight: self.norm_weight,
        })
    }
}

/// Flattened offsets contributed by `modes`' digits, enumerated in the given
/// mode order (first listed mode is the most significant digit).
fn digit_offsets(space: &ModeSpace, modes: &[usize], count: usize) -> Vec<usize> {
    let d = space.dim_per_mode();
    let mut offsets = vec![0usize; count];
    for (r, slot) in offsets.iter_mut().enumerate() {
        let mut rem = r;
        let mut off = 0usize;
        for q in (0..modes.len()).rev() {
            off += (rem % d) * space.stride(modes[q]);
            rem /= d;
        }
        *slot = off;
    }
    offsets
}

/// A multimode operator on the truncated lattice, usually a density operator.
///
/// `hermitian` tracks whether the matrix is Hermitian by construction; it is
/// metadata for cheap assertions, not a substitute for the numerical check in
/// [`hermitian_eigenvalues`].
#[derive(Debug, Clone)]
pub struct DensityOperator {
    space: ModeSpace,
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl DensityOperator {
    pub fn from_matrix(space: ModeSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(FockError::DimensionMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        let hermitian = hermiticity_deviation(&matrix) < HERMITICITY_TOL;
        Ok(Self {
            space,
            matrix,
            hermitian,
        })
    }

    pub fn zeros(space: ModeSpace) -> Self {
        let n = space.total_dim();
        Self {
            space,
            matrix: DMatrix::zeros(n, n),
            hermitian: true,
        }
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn trace(&self) -> C64 {
        let mut t = C64::new(0.0, 0.0);
        for i in 0..self.matrix.nrows() {
            t += self.matrix[(i, i)];
        }
        t
    }

    /// Unit-trace copy.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t.norm() < 1e-300 {
            return Err(FockError::ZeroNorm("operator trace".into()));
        }
        Ok(Self {
            space: self.space,
            matrix: &self.matrix / t,
            hermitian: self.hermitian,
        })
    }

    /// Adds `weight * other` in place (spaces must match).
    pub fn accumulate(&mut self, other: &DensityOperator, weight: f64) -> Result<()> {
        if self.space != other.space {
            return Err(FockError::SpaceMismatch("accumulating operators".into()));
        }
        self.matrix += &other.matrix * C64::new(weight, 0.0);
        self.hermitian = self.hermitian && other.hermitian;
        Ok(())
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let space = self.space.join(&other.space)?;
        Ok(DensityOperator {
            space,
            matrix: self.matrix.kronecker(&other.matrix),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// Partial trace keeping `keep` (distinct, result modes in that order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        self.space.check_distinct_modes(keep)?;
        if keep.is_empty() {
            return Err(FockError::InvalidMode("keep set must be non-empty".into()));
        }
        let d = self.space.dim_per_mode();
        let traced: Vec<usize> = (0..self.space.modes())
            .filter(|m| !keep.contains(m))
            .collect();
        let kd = d.pow(keep.len() as u32);
        let td = d.pow(traced.len() as u32);
        let keep_offsets = digit_offsets(&self.space, keep, kd);
        let trace_offsets = digit_offsets(&self.space, &traced, td);
        let mut out = DMatrix::zeros(kd, kd);
        for i in 0..kd {
            for j in 0..kd {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..td {
                    acc += self.matrix[(keep_offsets[i] + trace_offsets[t], keep_offsets[j] + trace_offsets[t])];
                }
                out[(i, j)] = acc;
            }
        }
        let space = ModeSpace::new(keep.len(), d)?;
        Ok(DensityOperator {
            space,
            matrix: out,
            hermitian: self.hermitian,
        })
    }

    /// Transposes the listed modes' indices (partial transpose).
    pub fn partial_transpose(&self, modes: &[usize]) -> Result<DensityOperator> {
        self.space.check_distinct_modes(modes)?;
        let d = self.space.dim_per_mode();
        let n = self.space.total_dim();
        let strides: Vec<usize> = modes.iter().map(|&m| self.space.stride(m)).collect();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut si = i;
                let mut sj = j;
                for &s in &strides {
                    let di = (i / s) % d;
                    let dj = (j / s) % d;
                    si = si + dj * s - di * s;
                    sj = sj + di * s - dj * s;
                }
                out[(i, j)] = self.matrix[(si, sj)];
            }
        }
        Ok(DensityOperator {
            space: self.space,
            matrix: out,
            hermitian: self.hermitian,
        })
    }

    /// `<k|_mode rho |l>_mode`: the operator block on the remaining modes.
    ///
    /// Off-diagonal blocks (`k != l`) are generally not Hermitian.
    pub fn mode_block(&self, mode: usize, k: usize, l: usize) -> Result<DensityOperator> {
        self.space.check_mode(mode)?;
        if self.space.modes() == 1 {
            return Err(FockError::InvalidMode(
                "block extraction needs at least two modes".into(),
            ));
        }
        let d = self.space.dim_per_mode();
        if k >= d || l >= d {
            return Err(FockError::InvalidParameter(format!(
                "block levels ({k},{l}) exceed per-mode dimension {d}"
            )));
        }
        let reduced = ModeSpace::new(self.space.modes() - 1, d)?;
        let rest: Vec<usize> = (0..self.space.modes()).filter(|&m| m != mode).collect();
        let rd = reduced.total_dim();
        let offsets = digit_offsets(&self.space, &rest, rd);
        let s = self.space.stride(mode);
        let mut out = DMatrix::zeros(rd, rd);
        for i in 0..rd {
            for j in 0..rd {
                out[(i, j)] = self.matrix[(offsets[i] + k * s, offsets[j] + l * s)];
            }
        }
        Ok(DensityOperator {
            space: reduced,
            matrix: out,
            hermitian: self.hermitian && k == l,
        })
    }

    /// Applies `U . U^dagger` with a single-mode operator.
    pub fn conjugate_one_mode(&self, op: &DMatrix<C64>, mode: usize) -> Result<DensityOperator> {
        let tmp = apply_rows_one_mode(&self.space, &self.matrix, op, mode)?;
        let out = apply_cols_one_mode_adjoint(&self.space, &tmp, op, mode)?;
        Ok(DensityOperator {
            space: self.space,
            matrix: out,
            hermitian: self.hermitian,
        })
    }

    /// Applies a Kraus channel `rho -> sum_k K_k rho K_k^dagger` on one mode.
    pub fn apply_kraus_one_mode(&self, ops: &[DMatrix<C64>], mode: usize) -> Result<DensityOperator> {
        let n = self.space.total_dim();
        let mut acc = DMatrix::zeros(n, n);
        for op in ops {
            let tmp = apply_rows_one_mode(&self.space, &self.matrix, op, mode)?;
            let term = apply_cols_one_mode_adjoint(&self.space, &tmp, op, mode)?;
            acc += term;
        }
        Ok(DensityOperator {
            space: self.space,
            matrix: acc,
            hermitian: self.hermitian,
        })
    }

    /// Expectation value `Tr[rho O]` of a single-mode observable.
    pub fn expect_one_mode(&self, op: &DMatrix<C64>, mode: usize) -> Result<C64> {
        let tmp = apply_rows_one_mode(&self.space, &self.matrix, op, mode)?;
        // Tr[O rho] with O applied on the row side of rho gives Tr[O rho];
        // trace of (O rho) equals Tr[rho O].
        let mut t = C64::new(0.0, 0.0);
        for i in 0..tmp.nrows() {
            t += tmp[(i, i)];
        }
        Ok(t)
    }

    /// Population of Fock level `level` in `mode`.
    pub fn mode_population(&self, mode: usize, level: usize) -> Result<f64> {
        self.space.check_mode(mode)?;
        let d = self.space.dim_per_mode();
        if level >= d {
            return Err(FockError::InvalidParameter(format!(
                "level {level} exceeds per-mode dimension {d}"
            )));
        }
        let s = self.space.stride(mode);
        let mut pop = 0.0;
        for i in 0..self.space.total_dim() {
            if (i / s) % d == level {
                pop += self.matrix[(i, i)].re;
            }
        }
        Ok(pop)
    }

    /// Max deviation from Hermiticity, `max |M - M^dagger|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }

    /// Checks the density-operator invariants: Hermitian within 1e-10,
    /// unit trace within 1e-8, eigenvalues above -1e-8.
    pub fn check_state_invariants(&self) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > 1e-10 {
            return Err(FockError::NotHermitian { deviation: dev });
        }
        let t = self.trace();
        if (t.re - 1.0).abs() > 1e-8 || t.im.abs() > 1e-8 {
            return Err(FockError::InvalidParameter(format!(
                "trace {t} is not 1 within 1e-8"
            )));
        }
        let eigs = hermitian_eigenvalues(&self.matrix)?;
        if let Some(min) = eigs.first() {
            if *min < -1e-8 {
                return Err(FockError::InvalidParameter(format!(
                    "negative eigenvalue {min:.3e} below -1e-8"
                )));
            }
        }
        Ok(())
    }
}

fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Applies `op` to the row index of `mode`: `out = (op on mode) * m`.
fn apply_rows_one_mode(
    space: &ModeSpace,
    m: &DMatrix<C64>,
    op: &DMatrix<C64>,
    mode: usize,
) -> Result<DMatrix<C64>> {
    space.check_mode(mode)?;
    let d = space.dim_per_mode();
    if op.nrows() != d || op.ncols() != d {
        return Err(FockError::DimensionMismatch {
            expected: d,
            got: op.nrows(),
        });
    }
    let s = space.stride(mode);
    let n = space.total_dim();
    let block = s * d;
    let mut out = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut hi = 0;
        while hi < n {
            for lo in 0..s {
                let base = hi + lo;
                for i in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..d {
                        let v = m[(base + a * s, col)];
                        if v != C64::new(0.0, 0.0) {
                            acc += op[(i, a)] * v;
                        }
                    }
                    out[(base + i * s, col)] = acc;
                }
            }
            hi += block;
        }
    }
    Ok(out)
}

/// Applies `op^dagger` to the column index of `mode`: `out = m * (op^dagger on mode)`.
fn apply_cols_one_mode_adjoint(
    space: &ModeSpace,
    m: &DMatrix<C64>,
    op: &DMatrix<C64>,
    mode: usize,
) -> Result<DMatrix<C64>> {
    space.check_mode(mode)?;
    let d = space.dim_per_mode();
    if op.nrows() != d || op.ncols() != d {
        return Err(FockError::DimensionMismatch {
            expected: d,
            got: op.nrows(),
        });
    }
    let s = space.stride(mode);
    let n = space.total_dim();
    let block = s * d;
    let mut out = DMatrix::zeros(n, n);
    for row in 0..n {
        let mut hi = 0;
        while hi < n {
            for lo in 0..s {
                let base = hi + lo;
                for j in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for b in 0..d {
                        let v = m[(row, base + b * s)];
                        if v != C64::new(0.0, 0.0) {
                            // (m * Op^dagger)[row, j] = sum_b m[row, b] * conj(Op[j, b])
                            acc += v * op[(j, b)].conj();
                        }
                    }
                    out[(row, base + j * s)] = acc;
                }
            }
            hi += block;
        }
    }
    Ok(out)
}

/// Eigenvalues of a Hermitian matrix, ascending. Errors if the matrix
/// deviates from Hermiticity by more than 1e-8.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let dev = hermiticity_deviation(m);
    if dev > HERMITICITY_TOL {
        return Err(FockError::NotHermitian { deviation: dev });
    }
    let sym = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = sym.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    Ok(vals)
}

/// Full eigendecomposition of a Hermitian matrix: `(eigenvalues, columns)`
/// with real eigenvalues ascending. Assumes Hermiticity (callers construct
/// the matrix to be Hermitian).
pub(crate) fn hermitian_eig(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let sym = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..sym.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        sym.eigenvalues[a]
            .partial_cmp(&sym.eigenvalues[b])
            .expect("eigenvalues are finite")
    });
    let vals: Vec<f64> = order.iter().map(|&i| sym.eigenvalues[i]).collect();
    let n = m.nrows();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &sym.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// `exp(G)` for an anti-Hermitian generator `G` (so the result is unitary),
/// via the eigendecomposition of `iG`.
pub(crate) fn exp_anti_hermitian(g: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let h = g.map(|z| z * C64::new(0.0, 1.0));
    let dev = hermiticity_deviation(&h);
    if dev > HERMITICITY_TOL {
        return Err(FockError::NotHermitian { deviation: dev });
    }
    let (vals, vecs) = hermitian_eig(&h);
    // exp(G) = exp(-i (iG)) = V exp(-i Lambda) V^dagger
    let n = h.nrows();
    let mut scaled = vecs.clone();
    for (c, lam) in vals.iter().enumerate() {
        let phase = C64::new(0.0, -lam).exp();
        for r in 0..n {
            scaled[(r, c)] *= phase;
        }
    }
    Ok(&scaled * vecs.adjoint())
}
