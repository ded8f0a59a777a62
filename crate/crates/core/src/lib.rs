//! Truncated Fock-space simulation of heralded hybrid entanglement between a
//! discrete-variable (photon-number qubit or qutrit) mode and a
//! continuous-variable (squeezed/cat-like) mode.
//!
//! The crate has two evolution routes that deliberately never share code:
//!
//! * an exact route ([`schemes`]) that builds the full multimode interferometer
//!   (photon taps, a two-mode squeezed source, a central beam splitter) on a
//!   truncated Fock lattice and projects on the heralding detector, and
//! * a perturbative route ([`schemes`] closed-form state constructors plus
//!   [`analytic`] closed-form metric expressions) valid at small tap and
//!   squeezing parameters.
//!
//! Agreement between the two routes is the main correctness oracle and is
//! exercised by the `acceptance` integration test target.
//!
//! Conventions used throughout:
//!
//! * Mode 0 of a multimode state is the most significant digit of the flattened
//!   index; `tensor` appends modes on the right.
//! * The single-mode squeeze operator is `S(z) = exp((z/2)(a'^2 - a^2))` with
//!   `a'` the creation operator, so squeezed-vacuum number amplitudes carry
//!   positive powers of `tanh z`.
//! * Quadratures are in vacuum-standard-deviation units: the displaced-parity
//!   Wigner function of vacuum is `exp(-(x^2+p^2)/2)` with value +1 at the
//!   origin, and `(1/2pi) * integral W dx dp` recovers the trace.

pub mod analytic;
pub mod channels;
pub mod error;
pub mod fock;
pub mod metrics;
pub mod schemes;
pub mod states;

pub use error::{FockError, Result};
pub use fock::{DensityOperator, ModeSpace, PureState, C64};
