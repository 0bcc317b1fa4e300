//! Zero-energy scattering on the unit torus and in free space.
//!
//! On the torus the solution is found in Fourier space from
//! `p² φ̂(p) + ½ Σ_q v̂(p − q) φ̂(q) = −½ v̂(p)` over the nonzero lattice
//! momenta. The system is symmetric positive definite for `v ≥ 0` and is
//! solved by preconditioned conjugate gradients.

mod convolve;
mod potential;
mod radial;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::MomentumLattice;
use crate::sum::{indexed_sum, pairwise_sum};

pub use convolve::DIRECT_LIMIT;
pub use potential::{PotentialKind, PotentialSpec};
pub use radial::{born_length, free_space_scattering_length, free_space_scattering_length_with_tol, RADIAL_TOL};

use convolve::Convolver;

/// Iteration budget used by [`solve_torus_scattering`].
pub const DEFAULT_CG_ITERATIONS: usize = 500;

/// Ratio `v̂(cutoff)/v̂(0)` above which the lattice is considered too small.
pub const EDGE_WARNING: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub lattice: Arc<MomentumLattice>,
    pub phi_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub v_hat0: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Torus scattering length at unit coupling.
    pub torus_length: f64,
    pub source_potential: PotentialSpec,
    /// Radius below which `φ̂` has been zeroed (0 when untruncated).
    pub truncation: f64,
    /// `v̂` at the lattice cutoff relative to `v̂(0)`.
    pub edge_ratio: f64,
}

impl ScatteringSolution {
    /// `max |φ̂(p)|`.
    pub fn sup_hat(&self) -> f64 {
        self.phi_hat.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max p² |φ̂(p)|`, the constant in the pointwise `C/p²` decay.
    pub fn sup_p2_hat(&self) -> f64 {
        self.phi_hat
            .iter()
            .enumerate()
            .fold(0.0, |m, (i, v)| m.max(self.lattice.p2(i) * v.abs()))
    }

    /// `Σ |φ̂(p)|`, an upper bound on `‖φ‖∞`.
    pub fn l1_hat(&self) -> f64 {
        let abs: Vec<f64> = self.phi_hat.iter().map(|v| v.abs()).collect();
        pairwise_sum(&abs)
    }

    /// `max |φ̂(p) − φ̂(−p)|`.
    pub fn evenness_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, p) in self.lattice.points().iter().enumerate() {
            let j = self.lattice.index_of([-p[0], -p[1], -p[2]]).expect("lattice is symmetric");
            worst = worst.max((self.phi_hat[i] - self.phi_hat[j]).abs());
        }
        worst
    }

    /// Recomputes the residual vector of the scattering equation for the
    /// stored coefficients and returns its 2-norm.
    pub fn substitution_residual(&self) -> f64 {
        let mut conv = self.convolver();
        let mut r = vec![0.0; self.phi_hat.len()];
        residual(&mut conv, &self.lattice, &self.phi_hat, &self.v_hat, &mut r);
        norm(&r)
    }

    /// `⟨φ, v φ⟩` computed with the lattice convolution.
    pub fn potential_energy(&self) -> f64 {
        let mut conv = self.convolver();
        let mut vphi = vec![0.0; self.phi_hat.len()];
        conv.apply(&self.phi_hat, &mut vphi);
        dot(&self.phi_hat, &vphi)
    }

    fn convolver(&self) -> Convolver {
        let v = self.source_potential.clone();
        Convolver::new(&self.lattice, &move |k| v.fourier(k))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&terms)
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn apply_system(conv: &mut Convolver, lat: &MomentumLattice, x: &[f64], y: &mut [f64]) {
    conv.apply(x, y);
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = lat.p2(i) * x[i] + 0.5 * *yi;
    }
}

/// `r = −½ v̂ − A φ̂`.
fn residual(conv: &mut Convolver, lat: &MomentumLattice, phi: &[f64], v_hat: &[f64], r: &mut [f64]) {
    apply_system(conv, lat, phi, r);
    for (ri, v) in r.iter_mut().zip(v_hat) {
        *ri = -0.5 * v - *ri;
    }
}

/// Solves the torus scattering equation for `v` on `lattice` with the
/// default iteration budget.
pub fn solve_torus_scattering(v: &PotentialSpec, lattice: Arc<MomentumLattice>, tol: f64) -> Result<ScatteringSolution> {
    solve_torus_scattering_with(v, lattice, tol, DEFAULT_CG_ITERATIONS)
}

pub fn solve_torus_scattering_with(
    v: &PotentialSpec,
    lattice: Arc<MomentumLattice>,
    tol: f64,
    max_iter: usize,
) -> Result<ScatteringSolution> {
    v.validate()?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("solver tolerance must be > 0, got {tol}")));
    }
    let v_hat0 = v.fourier(0.0);
    let m = lattice.len();
    let v_hat: Vec<f64> = (0..m).map(|i| v.fourier(lattice.p2(i).sqrt())).collect();
    let edge_ratio = if v_hat0 > 0.0 {
        v.fourier(lattice.cutoff_radius()).abs() / v_hat0
    } else {
        0.0
    };
    let mut sol = ScatteringSolution {
        lattice: lattice.clone(),
        phi_hat: vec![0.0; m],
        v_hat,
        v_hat0,
        residual_norm: 0.0,
        iterations: 0,
        torus_length: 0.0,
        source_potential: v.clone(),
        truncation: 0.0,
        edge_ratio,
    };
    if v.is_zero() {
        return Ok(sol);
    }
    if !(v_hat0 > 0.0) {
        return Err(Error::contract("potential has vanishing integral but is not identically zero"));
    }
    if edge_ratio > EDGE_WARNING {
        log::warn!("v̂ has only decayed to {edge_ratio:.2e} of v̂(0) at the lattice cutoff");
    }

    let target = tol * norm(&sol.v_hat);
    let precond: Vec<f64> = (0..m).map(|i| 1.0 / (lattice.p2(i) + 0.5 * v_hat0)).collect();
    let v2 = v.clone();
    let mut conv = Convolver::new(&lattice, &move |k| v2.fourier(k));
    let x = &mut sol.phi_hat;
    let mut r = vec![0.0; m];
    let mut ap = vec![0.0; m];
    let mut iters = 0;
    let mut res;
    // Restarted from the true residual until it meets the target, so the
    // reported residual is never the recursively updated one.
    loop {
        residual(&mut conv, &lattice, x, &sol.v_hat, &mut r);
        res = norm(&r);
        if res <= target {
            break;
        }
        if iters >= max_iter {
            return Err(Error::NonConvergence {
                iterations: iters,
                residual: res,
            });
        }
        let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iters < max_iter {
            apply_system(&mut conv, &lattice, &p, &mut ap);
            iters += 1;
            let alpha = rz / dot(&p, &ap);
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) <= 0.5 * target {
                break;
            }
            for i in 0..m {
                z[i] = r[i] * precond[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..m {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    sol.residual_norm = res;
    sol.iterations = iters;
    sol.torus_length = torus_scattering_length(&sol, 1.0);
    Ok(sol)
}

/// `(s/8π)(v̂(0) + Σ_p v̂(−p) φ̂(p))`; `s` is the coupling prefactor.
pub fn torus_scattering_length(sol: &ScatteringSolution, coupling_scale: f64) -> f64 {
    let cross = indexed_sum(sol.phi_hat.len(), |i| sol.v_hat[i] * sol.phi_hat[i]);
    coupling_scale * (sol.v_hat0 + cross) / (8.0 * PI)
}

/// Zeroes `φ̂` on `|p| ≤ m`.
pub fn truncate_solution(sol: &ScatteringSolution, m: f64) -> Result<ScatteringSolution> {
    if !(m >= 0.0) {
        return Err(Error::contract(format!("truncation radius must be >= 0, got {m}")));
    }
    let mut out = sol.clone();
    let m2 = m * m;
    for (i, phi) in out.phi_hat.iter_mut().enumerate() {
        if sol.lattice.p2(i) <= m2 * (1.0 + 1e-12) {
            *phi = 0.0;
        }
    }
    out.truncation = m.max(sol.truncation);
    out.torus_length = torus_scattering_length(&out, 1.0);
    Ok(out)
}

/// `(Σ_p |p|^{2s} |φ̂(p)|²)^{1/2}` for `−1 ≤ s ≤ 2`.
pub fn sobolev_norm(sol: &ScatteringSolution, s: f64) -> Result<f64> {
    if !(-1.0..=2.0).contains(&s) {
        return Err(Error::contract(format!("Sobolev index must lie in [-1, 2], got {s}")));
    }
    let total = indexed_sum(sol.phi_hat.len(), |i| sol.lattice.p2(i).powf(s) * sol.phi_hat[i].powi(2));
    Ok(total.sqrt())
}

/// Least-squares fit of `log value = exponent · log n + log constant`.
pub fn rate_fit(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 3 {
        return Err(Error::domain(format!("rate fit needs at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(&(n, v)) = pairs.iter().find(|&&(n, v)| !(v > 0.0) || !(n > 0.0)) {
        return Err(Error::domain(format!("rate fit needs positive data, got ({n}, {v})")));
    }
    let k = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = pairwise_sum(&xs) / k;
    let my = pairwise_sum(&ys) / k;
    let sxy: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx).powi(2)).collect();
    let denom = pairwise_sum(&sxx);
    if denom == 0.0 {
        return Err(Error::domain("rate fit needs at least two distinct n"));
    }
    let slope = pairwise_sum(&sxy) / denom;
    Ok((slope, (my - slope * mx).exp()))
}
