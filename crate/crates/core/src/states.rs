//! Single- and two-mode state and operator factories: Fock-basis ladder
//! operators, coherent and cat states, squeezed vacuum and its
//! photon-subtracted variants, two-mode squeezed vacuum, beam-splitter,
//! phase-rotation, and displacement unitaries.
//!
//! Constructors that place analytic states on the truncated lattice check the
//! analytic tail mass (probability beyond the cutoff) instead of silently
//! truncating.

use nalgebra::{DMatrix, DVector};

use crate::error::{FockError, Result};
use crate::fock::{exp_anti_hermitian, C64, ModeSpace, PureState};

/// Tail-mass limit for coherent and cat state construction.
const COHERENT_TAIL_LIMIT: f64 = 1e-10;
/// Tail-mass limit for squeezed-vacuum construction.
const SQUEEZE_TAIL_LIMIT: f64 = 1e-8;

/// Photon-number parity of a cat state: even carries the `+` superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatParity {
    Even,
    Odd,
}

/// Single-mode squeeze strength. The dB value follows the quadrature-variance
/// convention `e^{-2 zeta}`, i.e. `db = (20/ln 10) * zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParam {
    zeta: f64,
}

impl SqueezeParam {
    pub fn from_zeta(zeta: f64) -> Result<Self> {
        if !(zeta >= 0.0) || !zeta.is_finite() {
            return Err(FockError::InvalidParameter(format!(
                "squeeze parameter must be finite and nonnegative, got {zeta}"
            )));
        }
        Ok(Self { zeta })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::from_zeta(db * (10f64.ln() / 20.0))
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn db(&self) -> f64 {
        self.zeta * (20.0 / 10f64.ln())
    }
}

/// Two-mode squeezed vacuum gain, `0 <= lambda < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmssParam {
    lambda: f64,
}

impl TmssParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(FockError::InvalidParameter(format!(
                "TMSS gain must lie in [0,1), got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Expansion order for the two-mode squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmssOrder {
    /// `|00> + lambda |11>`, unnormalized.
    First,
    /// `|00> + lambda |11> + lambda^2 |22>`, unnormalized.
    Second,
    /// `sqrt(1-lambda^2) * sum lambda^n |nn>`, normalized.
    Exact,
}

/// Annihilation operator on one truncated mode: `a[n-1, n] = sqrt(n)`.
pub fn annihilation_op(dim: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Creation operator, the adjoint of [`annihilation_op`].
pub fn creation_op(dim: usize) -> DMatrix<C64> {
    annihilation_op(dim).adjoint()
}

/// Photon-number operator `diag(0, 1, ..., dim-1)`.
pub fn number_op(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Photon-number parity operator `diag((-1)^n)`.
pub fn parity_op(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Phase rotation `exp(i phi n)` as a diagonal unitary.
pub fn phase_rotation_op(phi: f64, dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(0.0, phi * i as f64).exp()
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Analytic probability mass of a coherent state beyond Fock level `dim-1`.
pub fn coherent_tail_mass(alpha: f64, dim: usize) -> f64 {
    let a2 = alpha * alpha;
    let mut term = (-a2).exp();
    let mut cumulative = 0.0;
    for n in 0..dim {
        cumulative += term;
        term *= a2 / (n as f64 + 1.0);
    }
    (1.0 - cumulative).max(0.0)
}

/// Coherent state `|alpha>` with real amplitude.
pub fn coherent_state(alpha: f64, dim: usize) -> Result<PureState> {
    let tail = coherent_tail_mass(alpha, dim);
    if tail > COHERENT_TAIL_LIMIT {
        return Err(FockError::TruncationInsufficient {
            what: format!("coherent state alpha={alpha}"),
            tail,
            limit: COHERENT_TAIL_LIMIT,
        });
    }
    let space = ModeSpace::single(dim)?;
    let mut amps = DVector::zeros(dim);
    // c_n = e^{-alpha^2/2} alpha^n / sqrt(n!)
    let mut c = (-alpha * alpha / 2.0).exp();
    for n in 0..dim {
        amps[n] = C64::new(c, 0.0);
        c *= alpha / ((n as f64 + 1.0)).sqrt();
    }
    PureState::from_amplitudes(space, amps)
}

/// Cat state `(|alpha> +- |-alpha>) / N_pm`, `N_pm = sqrt(2(1 +- e^{-2 alpha^2}))`.
pub fn cat_state(alpha: f64, parity: CatParity, dim: usize) -> Result<PureState> {
    if alpha == 0.0 && parity == CatParity::Odd {
        return Err(FockError::InvalidParameter(
            "odd cat state is undefined at alpha = 0".into(),
        ));
    }
    let overlap = (-2.0 * alpha * alpha).exp();
    let norm = match parity {
        CatParity::Even => (2.0 * (1.0 + overlap)).sqrt(),
        CatParity::Odd => (2.0 * (1.0 - overlap)).sqrt(),
    };
    // Tail bound: |c_n|^2 <= 4 e^{-alpha^2} alpha^{2n}/n! / N^2.
    let tail = 4.0 * coherent_tail_mass(alpha, dim) / (norm * norm);
    if tail > COHERENT_TAIL_LIMIT {
        return Err(FockError::TruncationInsufficient {
            what: format!("cat state alpha={alpha}"),
            tail,
            limit: COHERENT_TAIL_LIMIT,
        });
    }
    let space = ModeSpace::single(dim)?;
    let mut amps = DVector::zeros(dim);
    let keep_even = parity == CatParity::Even;
    let mut c = (-alpha * alpha / 2.0).exp();
    for n in 0..dim {
        if (n % 2 == 0) == keep_even {
            amps[n] = C64::new(2.0 * c / norm, 0.0);
        }
        c *= alpha / ((n as f64 + 1.0)).sqrt();
    }
    PureState::from_amplitudes(space, amps)
}

/// Applies the annihilation operator to one mode.
///
/// The result carries unit-norm amplitudes with the removed norm folded into
/// `norm_weight`, so for a normalized unit-weight input the weight equals
/// `sqrt(<n>)`. Annihilating vacuum yields the zero vector with zero weight.
pub fn annihilate(state: &PureState, mode: usize) -> Result<PureState> {
    let a = annihilation_op(state.space().dim_per_mode());
    let raw = state.apply_one_mode(&a, mode)?;
    match raw.normalized() {
        Ok(n) => Ok(n),
        Err(FockError::ZeroNorm(_)) => Ok(raw.scaled(C64::new(0.0, 0.0)).weighted(0.0)),
        Err(e) => Err(e),
    }
}

/// Analytic probability mass of squeezed vacuum `S(zeta)|0>` beyond `dim-1`.
pub fn squeezed_vacuum_tail(zeta: f64, dim: usize) -> f64 {
    // |c_{2n}|^2 = (2n)!/(4^n n!^2) tanh^{2n} / cosh, recurrence ratio
    // tanh^2 * (2n+1)/(2n+2).
    if zeta == 0.0 {
        return 0.0;
    }
    let t2 = zeta.tanh().powi(2);
    let mut term = 1.0 / zeta.cosh();
    let mut below = 0.0;
    let mut n = 0usize;
    while 2 * n < dim {
        below += term;
        term *= t2 * (2.0 * n as f64 + 1.0) / (2.0 * n as f64 + 2.0);
        n += 1;
    }
    (1.0 - below).max(0.0)
}

/// Squeeze unitary `S(zeta) = exp((zeta/2)(a'^2 - a^2))` (`a'` = creation).
///
/// The generator sign makes the squeezed-vacuum even amplitudes carry
/// `(+tanh zeta)^n`, so overlaps with even cat states are real positive.
/// Errors unless the squeezed-vacuum tail beyond the truncation is below
/// 1e-8.
pub fn squeeze_unitary(zeta: &SqueezeParam, dim: usize) -> Result<DMatrix<C64>> {
    squeeze_unitary_with_tail_limit(zeta, dim, SQUEEZE_TAIL_LIMIT)
}

/// [`squeeze_unitary`] with an explicit tail-mass limit, for small-dimension
/// comparison runs whose downstream metrics carry their own convergence
/// checks.
pub fn squeeze_unitary_with_tail_limit(
    zeta: &SqueezeParam,
    dim: usize,
    tail_limit: f64,
) -> Result<DMatrix<C64>> {
    let tail = squeezed_vacuum_tail(zeta.zeta(), dim);
    if tail > tail_limit {
        return Err(FockError::TruncationInsufficient {
            what: format!("squeeze unitary zeta={}", zeta.zeta()),
            tail,
            limit: tail_limit,
        });
    }
    let a = annihilation_op(dim);
    let a2 = &a * &a;
    let adag2 = a2.adjoint();
    let half = C64::new(zeta.zeta() / 2.0, 0.0);
    let gen = (adag2 - a2) * half;
    exp_anti_hermitian(&gen)
}

/// `n`-photon-subtracted squeezed vacuum, normalized:
/// `S|0>`, `a S|0> / sinh`, or `a^2 S|0>` normalized, for n = 0, 1, 2.
pub fn subtracted_squeezed(n_subtract: usize, zeta: &SqueezeParam, dim: usize) -> Result<PureState> {
    subtracted_squeezed_with_tail_limit(n_subtract, zeta, dim, SQUEEZE_TAIL_LIMIT)
}

/// [`subtracted_squeezed`] with an explicit squeeze tail-mass limit.
///
/// The returned state has unit-norm amplitudes; `norm_weight` carries the
/// accumulated subtraction weight `||a^n S|0>||` (1 for n = 0).
pub fn subtracted_squeezed_with_tail_limit(
    n_subtract: usize,
    zeta: &SqueezeParam,
    dim: usize,
    tail_limit: f64,
) -> Result<PureState> {
    if n_subtract > 2 {
        return Err(FockError::InvalidParameter(format!(
            "photon subtraction order must be 0, 1, or 2, got {n_subtract}"
        )));
    }
    if n_subtract > 0 && zeta.zeta() == 0.0 {
        return Err(FockError::InvalidParameter(
            "photon subtraction from unsqueezed vacuum yields the zero state".into(),
        ));
    }
    let s = squeeze_unitary_with_tail_limit(zeta, dim, tail_limit)?;
    let space = ModeSpace::single(dim)?;
    let mut state = PureState::vacuum(space).apply_one_mode(&s, 0)?;
    for _ in 0..n_subtract {
        state = annihilate(&state, 0)?;
    }
    Ok(state)
}

/// Two-mode beam splitter `exp(theta (a b' - a' b))` followed on the input
/// side by per-mode phase rotations `exp(i phi_k n_k)`.
///
/// With `t = cos theta`, `r = sin theta`, the first mode's creation operator
/// maps as `a1' -> e^{i phi_1} (t a1' + r a2')` and the second as
/// `a2' -> e^{i phi_2} (t a2' - r a1')`.
pub fn beam_splitter_unitary(theta: f64, phases: (f64, f64), dim: usize) -> Result<DMatrix<C64>> {
    let a = annihilation_op(dim);
    let adag = creation_op(dim);
    let th = C64::new(theta, 0.0);
    let gen = (a.kronecker(&adag) - adag.kronecker(&a)) * th;
    let mixer = exp_anti_hermitian(&gen)?;
    if phases == (0.0, 0.0) {
        return Ok(mixer);
    }
    let p = phase_rotation_op(phases.0, dim).kronecker(&phase_rotation_op(phases.1, dim));
    Ok(mixer * p)
}

/// Two-mode squeezed vacuum on a fresh two-mode space.
///
/// `First` and `Second` orders are returned unnormalized (leading coefficient
/// 1); `Exact` is normalized. Exact construction errors if the tail
/// `lambda^{2 dim}` exceeds 1e-10.
pub fn tmss_state(param: &TmssParam, order: TmssOrder, dim: usize) -> Result<PureState> {
    let space = ModeSpace::new(2, dim)?;
    let lambda = param.lambda();
    let mut amps = DVector::zeros(dim * dim);
    match order {
        TmssOrder::First | TmssOrder::Second => {
            let keep = if order == TmssOrder::First { 2 } else { 3 };
            let mut c = 1.0;
            for n in 0..keep.min(dim) {
                amps[n * dim + n] = C64::new(c, 0.0);
                c *= lambda;
            }
        }
        TmssOrder::Exact => {
            let tail = lambda.powi(2 * dim as i32);
            if tail > 1e-10 {
                return Err(FockError::TruncationInsufficient {
                    what: format!("two-mode squeezed vacuum lambda={lambda}"),
                    tail,
                    limit: 1e-10,
                });
            }
            let mut c = (1.0 - lambda * lambda).sqrt();
            for n in 0..dim {
                amps[n * dim + n] = C64::new(c, 0.0);
                c *= lambda;
            }
        }
    }
    PureState::from_amplitudes(space, amps)
}

/// Displacement-operator factory caching the eigendecomposition of the
/// quadrature generator, so grids of displacements cost two matrix products
/// each.
pub struct Displacer {
    dim: usize,
    vecs: DMatrix<C64>,
    vals: Vec<f64>,
}

impl Displacer {
    pub fn new(dim: usize) -> Self {
        // H = i(a' - a) is Hermitian; D(|b|) = exp(-i |b| H).
        let a = annihilation_op(dim);
        let g = creation_op(dim) - a;
        let h = g.map(|z| z * C64::new(0.0, 1.0));
        let (vals, vecs) = crate::fock::hermitian_eig(&h);
        Self { dim, vecs, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `D(beta) = exp(beta a' - conj(beta) a)` on the truncated mode.
    pub fn op(&self, beta: C64) -> DMatrix<C64> {
        let r = beta.norm();
        let phi = if r == 0.0 { 0.0 } else { beta.arg() };
        let n = self.dim;
        // D(r e^{i phi}) = R(phi) V e^{-i r Lambda} V' R(-phi)
        let mut scaled = self.vecs.clone();
        for (c, lam) in self.vals.iter().enumerate() {
            let ph = C64::new(0.0, -r * lam).exp();
            for row in 0..n {
                scaled[(row, c)] *= ph;
            }
        }
        let core = &scaled * self.vecs.adjoint();
        if phi == 0.0 {
            return core;
        }
        let mut out = core;
        for i in 0..n {
            for j in 0..n {
                // R(phi) M R(-phi): multiply entry by e^{i phi (i - j)}
                out[(i, j)] *= C64::new(0.0, phi * (i as f64 - j as f64)).exp();
            }
        }
        out
    }

    /// Top-left `rows x rows` block of `D(beta)`, computed without forming
    /// the full matrix. Used for displaced-parity traces where the operator
    /// of interest lives in a much smaller space than the evaluation space
    /// needed for an accurate truncated displacement.
    pub fn op_block(&self, beta: C64, rows: usize) -> Result<DMatrix<C64>> {
        if rows > self.dim {
            return Err(FockError::DimensionMismatch { expected: self.dim, got: rows });
        }
        let r = beta.norm();
        let phi = if r == 0.0 { 0.0 } else { beta.arg() };
        // (V e^{-i r Lambda} V')_{mn} over the leading rows only.
        let top = self.vecs.rows(0, rows);
        let mut scaled = top.clone_owned();
        for (c, lam) in self.vals.iter().enumerate() {
            let ph = C64::new(0.0, -r * lam).exp();
            for row in 0..rows {
                scaled[(row, c)] *= ph;
            }
        }
        let mut out = &scaled * top.adjoint();
        if phi != 0.0 {
            for i in 0..rows {
                for j in 0..rows {
                    out[(i, j)] *= C64::new(0.0, phi * (i as f64 - j as f64)).exp();
                }
            }
        }
        Ok(out)
    }
}

/// One-off displacement operator; prefer [`Displacer`] for grids.
pub fn displacement_op(beta: C64, dim: usize) -> DMatrix<C64> {
    Displacer::new(dim).op(beta)
}
