//! Block tomography output: the Wigner map of every DV block `<k|rho|l>` is
//! written as one CSV grid file, with an index manifest tying the files to
//! their block indices and the run parameters. Diagonal blocks are real;
//! conjugate off-diagonal pairs are split into the real part for `k > l` and
//! the imaginary part for `k < l`.

use std::path::Path;

use clap::ValueEnum;
use serde_json::json;

use hybrid_fock::metrics::{hybrid_blocks, DvBasis, GridSpec, WignerGrid};

use crate::config::PointSpec;
use crate::point;
use crate::CliError;

/// DV basis selector for the emitted maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    /// Fock levels |0>, |1> (qutrit: |2>).
    Number,
    /// Superposition basis |+>, |-> (qubit only).
    Rotated,
}

impl BasisArg {
    pub fn to_core(self) -> DvBasis {
        match self {
            BasisArg::Number => DvBasis::Number,
            BasisArg::Rotated => DvBasis::Rotated,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            BasisArg::Number => "number",
            BasisArg::Rotated => "rotated",
        }
    }
}

/// Which part of the complex map a block file carries.
fn component_of(k: usize, l: usize) -> &'static str {
    if k >= l {
        "real"
    } else {
        "imag"
    }
}

/// CSV matrix with axis header lines: the first row carries the p axis, the
/// first column the x axis.
fn grid_csv(grid: &WignerGrid, k: usize, l: usize) -> String {
    let component = component_of(k, l);
    let mut out = String::new();
    out.push_str(&format!("# Wigner map of DV block <{k}|rho|{l}>, {component} part\n"));
    out.push_str("x\\p");
    for p in &grid.p_axis {
        out.push(',');
        out.push_str(&p.to_string());
    }
    out.push('\n');
    for (i, x) in grid.x_axis.iter().enumerate() {
        out.push_str(&x.to_string());
        for v in &grid.values[i] {
            let part = if component == "real" { v.re } else { v.im };
            out.push(',');
            out.push_str(&part.to_string());
        }
        out.push('\n');
    }
    out
}

/// Writes every block map plus `index.json` into `dir`. Returns the number
/// of block files and the DV leakage recorded in the manifest.
pub fn emit_blocks(
    spec: &PointSpec,
    basis: BasisArg,
    grid: &GridSpec,
    dir: &Path,
) -> Result<(usize, f64), CliError> {
    let (rho, mu) = point::dense_state(spec)?;
    let maps = hybrid_blocks(&rho, 0, spec.scheme.dv_dim(), basis.to_core(), grid)?;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for k in 0..maps.dv_dim {
        for l in 0..maps.dv_dim {
            let name = format!("block-{k}-{l}.csv");
            std::fs::write(dir.join(&name), grid_csv(maps.block(k, l), k, l))?;
            files.push(json!({
                "k": k,
                "l": l,
                "component": component_of(k, l),
                "file": name,
            }));
        }
    }
    let manifest = json!({
        "scheme": spec.scheme.id(),
        "model": spec.model.id(),
        "basis": basis.id(),
        "dv-dim": maps.dv_dim,
        "dv-leakage": maps.dv_leakage,
        "squeezing-db": spec.squeezing_db,
        "mu": mu,
        "eta-a": spec.eta_a,
        "eta-b": spec.eta_b,
        "sigma-deg": spec.sigma_deg,
        "dim": spec.dim,
        "grid": { "min": grid.min, "max": grid.max, "points": grid.points },
        "files": files,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(dir.join("index.json"), text)?;
    Ok((maps.dv_dim * maps.dv_dim, maps.dv_leakage))
}
