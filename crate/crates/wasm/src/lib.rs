//! Browser bindings for a few quick polaron computations. Every function
//! takes momenta in units of `2π` and returns JSON text.

use std::sync::Arc;

use polaron_core::asymptotics::{lhy_summand, lhy_sum};
use polaron_core::eig::dense_eigs;
use polaron_core::lattice::TWO_PI;
use polaron_core::renorm::counterterms;
use polaron_core::{hbf_operator, ModelParams, MomentumLattice, SectorBasis};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest sector the page will diagonalize densely.
const MAX_DIM: usize = 1500;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Lowest `levels` eigenvalues of the cutoff Hamiltonian in the sector of
/// total momentum `(px, py, pz)`.
#[wasm_bindgen]
pub fn sector_spectrum(
    a_v: f64,
    a_w: f64,
    lambda_2pi: f64,
    n_max: usize,
    px: i32,
    py: i32,
    pz: i32,
    levels: usize,
) -> Result<String, JsError> {
    let p = [px, py, pz];
    let params = ModelParams::new(a_v, a_w, lambda_2pi * TWO_PI, 0.0, n_max).with_total_momentum(p);
    let lattice = Arc::new(MomentumLattice::build(params.lambda).map_err(js_err)?);
    let modes = lattice.len();
    let basis = SectorBasis::enumerate_with_cap(lattice, n_max, p, MAX_DIM).map_err(js_err)?;
    let dim = basis.len();
    let op = hbf_operator(Arc::new(basis), &params).map_err(js_err)?;
    let rep = dense_eigs(&op.to_dense().map_err(js_err)?, levels.clamp(1, dim)).map_err(js_err)?;
    Ok(json!({
        "modes": modes,
        "dim": dim,
        "eigenvalues": rep.eigenvalues,
        "multiplicities": rep.multiplicities,
    })
    .to_string())
}

/// The two counterterms at cutoff `Λ` and Gross threshold `κ`.
#[wasm_bindgen]
pub fn counterterm_pair(a_v: f64, a_w: f64, lambda_2pi: f64, kappa_2pi: f64) -> Result<String, JsError> {
    let params = ModelParams::new(a_v, a_w, lambda_2pi * TWO_PI, kappa_2pi * TWO_PI, 1);
    let ct = counterterms(&params).map_err(js_err)?;
    Ok(json!({
        "E1": ct.e1,
        "E2": ct.e2,
        "total": ct.e_total,
        "lattice_points": ct.lattice_size,
    })
    .to_string())
}

/// Partial sums of the Bogoliubov lattice sum at dyadic cutoffs
/// `c, 2c, 4c, …` (`count` of them), plus the summand on a radial grid.
#[wasm_bindgen]
pub fn lhy_series(a_v: f64, cutoff_2pi: f64, count: usize) -> Result<String, JsError> {
    let mut sums = Vec::new();
    let mut c = cutoff_2pi * TWO_PI;
    for _ in 0..count.clamp(1, 6) {
        sums.push(json!({ "cutoff": c, "sum": lhy_sum(a_v, c).map_err(js_err)? }));
        c *= 2.0;
    }
    let profile: Vec<[f64; 2]> = (1..=60)
        .map(|i| {
            let p = i as f64 * 0.5 * TWO_PI;
            [p, lhy_summand(a_v, p * p)]
        })
        .collect();
    Ok(json!({ "sums": sums, "summand": profile }).to_string())
}
