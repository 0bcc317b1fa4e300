use std::f64::consts::PI;

use super::PotentialSpec;
use crate::error::{Error, Result};

/// Default relative tolerance for the grid-refinement check.
pub const RADIAL_TOL: f64 = 1e-9;

/// Scattering length of `v` in `R³`, from `−u'' + ½ v u = 0`, `u(0) = 0`.
pub fn free_space_scattering_length(v: &PotentialSpec, grid_points: usize, r_max: f64) -> Result<f64> {
    free_space_scattering_length_with_tol(v, grid_points, r_max, RADIAL_TOL)
}

/// As [`free_space_scattering_length`]; the answer is accepted only if
/// doubling the grid moves it by at most `tol` relative, plus an absolute
/// allowance for accumulated rounding (about `64 ε · steps · r_max`).
pub fn free_space_scattering_length_with_tol(
    v: &PotentialSpec,
    grid_points: usize,
    r_max: f64,
    tol: f64,
) -> Result<f64> {
    v.validate()?;
    if grid_points < 16 {
        return Err(Error::domain(format!("radial grid needs at least 16 points, got {grid_points}")));
    }
    if !(r_max > 0.0) || r_max < v.effective_range() {
        return Err(Error::contract(format!(
            "r_max = {r_max} lies inside the effective range {} of the potential",
            v.effective_range()
        )));
    }
    if v.is_zero() {
        return Ok(0.0);
    }
    let coarse = numerov(v, grid_points, r_max);
    let fine = numerov(v, 2 * grid_points, r_max);
    let change = (fine - coarse).abs();
    // Each Numerov step carries relative rounding of order ε, and the length
    // is read off as a difference of O(r_max) quantities.
    let rounding = 64.0 * f64::EPSILON * (2 * grid_points) as f64 * r_max;
    if !fine.is_finite() || change > tol * fine.abs().max(1e-6 * r_max) + rounding {
        return Err(Error::Accuracy(format!(
            "scattering length moved by {change:.3e} under grid refinement ({coarse} -> {fine})"
        )));
    }
    Ok(fine)
}

/// Numerov in summed form: with `y = (1 − h²g/12) u` the scheme reads
/// `y_{i+1} − 2y_i + y_{i−1} = h² g_i u_i`, and carrying the first
/// difference `D = y_i − y_{i−1}` keeps rounding growth linear in the step
/// count instead of the n^{3/2} drift of the two-term recurrence.
fn numerov(v: &PotentialSpec, n: usize, r_max: f64) -> f64 {
    let h = r_max / n as f64;
    let c = h * h / 12.0;
    let g = |r: f64| 0.5 * v.value(r);
    let g0 = g(0.0);
    let mut g_cur = g(h);
    // Series start u ≈ r (1 + g(0) r² / 6), with u(0) = y(0) = 0.
    let mut u = h * (1.0 + g0 * h * h / 6.0);
    let mut y = (1.0 - c * g_cur) * u;
    let mut d = y;
    let mut u_prev = 0.0;
    // The slope is read off between a far reference point and r_max, which
    // is much less sensitive to rounding than adjacent grid values.
    let i_ref = ((v.effective_range().max(0.5 * r_max) / h).ceil() as usize).clamp(1, n - 1);
    let mut u_ref = if i_ref == 1 { u } else { 0.0 };
    for i in 1..n {
        let g_next = g((i + 1) as f64 * h);
        d += h * h * g_cur * u;
        y += d;
        u_prev = u;
        u = y / (1.0 - c * g_next);
        g_cur = g_next;
        if i + 1 == i_ref {
            u_ref = u;
        }
        // Rescale to keep steep hard-core growth in range.
        if u.abs() > 1e200 {
            for x in [&mut u, &mut u_prev, &mut u_ref, &mut y, &mut d] {
                *x *= 1e-200;
            }
        }
    }
    // u is linear once the potential has died out: u ∝ r − a.
    let r_ref = i_ref as f64 * h;
    if i_ref + 1 >= n || u == u_ref {
        return r_max - u * h / (u - u_prev);
    }
    r_max - u * (r_max - r_ref) / (u - u_ref)
}

/// `(1/8π) ∫ v`, the first Born approximation to the scattering length.
pub fn born_length(v: &PotentialSpec) -> f64 {
    v.fourier(0.0) / (8.0 * PI)
}
