//! Single-point evaluation: builds the heralded state for a resolved
//! configuration, applies the loss and phase-noise channels, and reports the
//! requested metrics together with a truncation-convergence verdict.

use hybrid_fock::channels::{phase_noise_channel, DvBlocks, LossSpec, PhaseNoiseSpec};
use hybrid_fock::metrics::{dv_leakage, entanglement_negativity, fidelity_mixed};
use hybrid_fock::schemes::{
    balancing_mu, central_r_for_mu, enhanced_perturbative_ket, qubit_perturbative_ket,
    qutrit_perturbative_ket, scheme_exact_with_tmss, SchemeKind, SchemeParams, SourceSpec,
};
use hybrid_fock::states::SqueezeParam;
use hybrid_fock::{DensityOperator, FockError, PureState, Result};

use crate::config::{AutoOr, Metric, Model, PointSpec};

/// Dimension increase used for the per-row convergence probe.
pub const DIM_BUMP: usize = 4;

/// A row converges when the dimension bump moves no reported value by more
/// than this.
pub const CONVERGENCE_TOL: f64 = 1e-6;

/// Metric values for one evaluated point, ordered as requested.
#[derive(Debug, Clone)]
pub struct PointValues {
    pub metrics: Vec<f64>,
    pub prob: Option<f64>,
}

fn perturbative_ket(kind: SchemeKind, mu: f64, z: &SqueezeParam, dim: usize) -> Result<PureState> {
    match kind {
        SchemeKind::Qubit => qubit_perturbative_ket(mu, z, dim),
        SchemeKind::Enhanced => enhanced_perturbative_ket(mu, z, dim),
        SchemeKind::Qutrit => qutrit_perturbative_ket(mu, z, dim),
    }
}

fn resolve_mu(spec: &PointSpec, z: &SqueezeParam, loss: &LossSpec) -> Result<f64> {
    match spec.mu {
        AutoOr::Auto => balancing_mu(spec.scheme.kind(), z, loss),
        AutoOr::Value(v) => Ok(v),
    }
}

fn phase_noise(spec: &PointSpec) -> Result<Option<PhaseNoiseSpec>> {
    if spec.sigma_deg == 0.0 {
        return Ok(None);
    }
    PhaseNoiseSpec::from_degrees(spec.sigma_deg).map(Some)
}

/// Origin Wigner value (parity) of the DV block `<k|rho|k>`, normalized by
/// the block trace. Dense-route counterpart of the block-resolved channel
/// representation.
fn block_origin_parity_dense(rho: &DensityOperator, k: usize) -> Result<f64> {
    let d = rho.space().dim_per_mode();
    if rho.space().modes() != 2 || k >= d {
        return Err(FockError::InvalidMode(format!(
            "block {k} out of range for the heralded state"
        )));
    }
    let m = rho.matrix();
    let mut parity = 0.0;
    let mut trace = 0.0;
    for n in 0..d {
        let p = m[(k * d + n, k * d + n)].re;
        parity += if n % 2 == 0 { p } else { -p };
        trace += p;
    }
    if trace.abs() < 1e-300 {
        return Err(FockError::ZeroNorm(format!("DV block {k} has zero trace")));
    }
    Ok(parity / trace)
}

fn evaluate_closed_form(spec: &PointSpec, metrics: &[Metric]) -> Result<PointValues> {
    let z = SqueezeParam::from_db(spec.squeezing_db)?;
    let loss = LossSpec::new(spec.eta_a, spec.eta_b)?;
    let kind = spec.scheme.kind();
    let mu = resolve_mu(spec, &z, &loss)?;
    let ket = perturbative_ket(kind, mu, &z, spec.dim)?;
    let mut blocks = DvBlocks::from_pure(&ket, 0, spec.scheme.dv_dim())?
        .apply_dv_loss(loss.eta_a)?
        .apply_cv_loss(loss.eta_b)?;
    if let Some(noise) = phase_noise(spec)? {
        blocks = blocks.apply_dv_phase_noise(&noise);
    }
    let needs_dense = metrics
        .iter()
        .any(|m| matches!(m, Metric::Fidelity | Metric::Leakage));
    let dense = if needs_dense {
        Some(blocks.to_density(spec.dim)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(metrics.len());
    for m in metrics {
        let v = match m {
            Metric::Negativity => blocks.pt_negativity()?,
            Metric::Wigner0 => blocks.block_origin_parity(0)?,
            Metric::Wigner1 => blocks.block_origin_parity(1)?,
            Metric::Wigner2 => blocks.block_origin_parity(2)?,
            Metric::Fidelity => fidelity_mixed(&ket, dense.as_ref().expect("dense computed"))?,
            Metric::Leakage => dv_leakage(
                dense.as_ref().expect("dense computed"),
                0,
                spec.scheme.dv_dim(),
            )?,
            Metric::Mu => mu,
        };
        out.push(v);
    }
    Ok(PointValues { metrics: out, prob: None })
}

fn evaluate_exact(spec: &PointSpec, metrics: &[Metric]) -> Result<PointValues> {
    let z = SqueezeParam::from_db(spec.squeezing_db)?;
    let loss = LossSpec::new(spec.eta_a, spec.eta_b)?;
    let kind = spec.scheme.kind();
    let mu = resolve_mu(spec, &z, &loss)?;
    let source = SourceSpec::Squeezed(z);
    let central_r = match spec.exact.central_r {
        AutoOr::Auto => central_r_for_mu(mu, spec.exact.theta, spec.exact.lambda, &source)?,
        AutoOr::Value(v) => v,
    };
    let params = SchemeParams {
        source,
        tap_theta: spec.exact.theta,
        tap_theta0: spec.exact.theta0,
        tmss_lambda: spec.exact.lambda,
        central_r,
        delta_phi: spec.exact.delta_phi,
        loss,
    };
    let heralded = scheme_exact_with_tmss(kind, &params, spec.dim, spec.exact.tmss_order.to_core())?;
    let mut rho = heralded.state;
    if let Some(noise) = phase_noise(spec)? {
        rho = phase_noise_channel(&rho, 0, &noise)?;
    }
    let mut out = Vec::with_capacity(metrics.len());
    for m in metrics {
        let v = match m {
            Metric::Negativity => entanglement_negativity(&rho, &[0])?,
            Metric::Wigner0 => block_origin_parity_dense(&rho, 0)?,
            Metric::Wigner1 => block_origin_parity_dense(&rho, 1)?,
            Metric::Wigner2 => block_origin_parity_dense(&rho, 2)?,
            Metric::Fidelity => {
                let reference = perturbative_ket(kind, mu, &z, spec.dim)?;
                fidelity_mixed(&reference, &rho)?
            }
            Metric::Leakage => dv_leakage(&rho, 0, spec.scheme.dv_dim())?,
            Metric::Mu => heralded.mu,
        };
        out.push(v);
    }
    Ok(PointValues { metrics: out, prob: heralded.herald_probability })
}

/// Evaluates one point at its configured dimension.
pub fn evaluate(spec: &PointSpec, metrics: &[Metric]) -> Result<PointValues> {
    let values = match spec.model {
        Model::ClosedForm => evaluate_closed_form(spec, metrics),
        Model::Exact => evaluate_exact(spec, metrics),
    }?;
    if let Some(bad) = values.metrics.iter().find(|v| !v.is_finite()) {
        return Err(FockError::InvalidParameter(format!(
            "metric evaluated to a non-finite value {bad}"
        )));
    }
    Ok(values)
}

/// Evaluates one point and probes convergence by repeating the evaluation
/// with the dimension raised by [`DIM_BUMP`]. The row converges when every
/// reported value moves by at most [`CONVERGENCE_TOL`]; a truncation error at
/// the raised dimension counts as unconverged.
pub fn evaluate_row(spec: &PointSpec, metrics: &[Metric]) -> Result<(PointValues, bool)> {
    let base = evaluate(spec, metrics)?;
    let mut bumped_spec = spec.clone();
    bumped_spec.dim += DIM_BUMP;
    let converged = match evaluate(&bumped_spec, metrics) {
        Ok(bumped) => {
            let metrics_close = base
                .metrics
                .iter()
                .zip(&bumped.metrics)
                .all(|(a, b)| (a - b).abs() <= CONVERGENCE_TOL);
            let prob_close = match (base.prob, bumped.prob) {
                (Some(a), Some(b)) => (a - b).abs() <= CONVERGENCE_TOL,
                _ => true,
            };
            metrics_close && prob_close
        }
        Err(FockError::TruncationInsufficient { .. }) => false,
        Err(e) => return Err(e),
    };
    Ok((base, converged))
}

/// The heralded density operator after channels, plus the resolved weight
/// parameter; used by block tomography, which needs the full state rather
/// than scalar metrics.
pub fn dense_state(spec: &PointSpec) -> Result<(DensityOperator, f64)> {
    let z = SqueezeParam::from_db(spec.squeezing_db)?;
    let loss = LossSpec::new(spec.eta_a, spec.eta_b)?;
    let mu = resolve_mu(spec, &z, &loss)?;
    match spec.model {
        Model::ClosedForm => {
            let ket = perturbative_ket(spec.scheme.kind(), mu, &z, spec.dim)?;
            let mut blocks = DvBlocks::from_pure(&ket, 0, spec.scheme.dv_dim())?
                .apply_dv_loss(loss.eta_a)?
                .apply_cv_loss(loss.eta_b)?;
            if let Some(noise) = phase_noise(spec)? {
                blocks = blocks.apply_dv_phase_noise(&noise);
            }
            Ok((blocks.to_density(spec.dim)?, mu))
        }
        Model::Exact => {
            let source = SourceSpec::Squeezed(z);
            let central_r = match spec.exact.central_r {
                AutoOr::Auto => {
                    central_r_for_mu(mu, spec.exact.theta, spec.exact.lambda, &source)?
                }
                AutoOr::Value(v) => v,
            };
            let params = SchemeParams {
                source,
                tap_theta: spec.exact.theta,
                tap_theta0: spec.exact.theta0,
                tmss_lambda: spec.exact.lambda,
                central_r,
                delta_phi: spec.exact.delta_phi,
                loss,
            };
            let heralded = scheme_exact_with_tmss(
                spec.scheme.kind(),
                &params,
                spec.dim,
                spec.exact.tmss_order.to_core(),
            )?;
            let mut rho = heralded.state;
            if let Some(noise) = phase_noise(spec)? {
                rho = phase_noise_channel(&rho, 0, &noise)?;
            }
            Ok((rho, heralded.mu))
        }
    }
}
