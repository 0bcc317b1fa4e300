//! Lowest eigenpairs of symmetric operators.

mod dense;
mod feshbach;
mod lanczos;

use serde::{Deserialize, Serialize};

use crate::lattice::IVec3;

pub use dense::dense_eigs;
pub use feshbach::{reduced_levels, ReducedOptions};
pub use lanczos::{lanczos_lowest, lanczos_with, LanczosOptions};

/// Sector and truncation data attached to a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisMeta {
    pub lambda: f64,
    pub n_max: usize,
    pub p_total: IVec3,
    pub dim: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub residual_norms: Vec<f64>,
    /// Number of eigenvalues within the cluster width of each eigenvalue.
    pub multiplicities: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    pub method: String,
    pub basis_meta: Option<BasisMeta>,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectrumReport {
    pub fn with_meta(mut self, meta: BasisMeta) -> Self {
        self.basis_meta = Some(meta);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV row per eigenvalue.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue,residual_norm,multiplicity,converged\n");
        for i in 0..self.eigenvalues.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i,
                crate::io::fmt17(self.eigenvalues[i]),
                crate::io::fmt17(self.residual_norms[i]),
                self.multiplicities[i],
                self.converged
            ));
        }
        out
    }
}

pub(crate) fn multiplicities(vals: &[f64], width: f64) -> Vec<usize> {
    vals.iter()
        .map(|&x| vals.iter().filter(|&&y| (x - y).abs() <= width).count())
        .collect()
}
