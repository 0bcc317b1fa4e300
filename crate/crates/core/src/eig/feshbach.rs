//! Eigenvalues through the top-shell Schur complement.
//!
//! The `j`-th eigenvalue of the truncated operator is the root of
//! `g_j(E) = λ_j(S(E)) − E` below the top-shell threshold. Since
//! `S'(E) = −B (E − D)⁻² Bᵀ` is negative semidefinite, `g_j` decreases with
//! slope at most −1, so a root is unique and Newton steps are safeguarded by
//! a bracket.

use super::{dense_eigs, lanczos_with, multiplicities, LanczosOptions, SpectrumReport};
use crate::error::{Error, Result};
use crate::operators::{DenseOperator, TopShellReduction};

#[derive(Debug, Clone)]
pub struct ReducedOptions {
    pub k: usize,
    /// Relative tolerance on the nonlinear residual `|g_j(E)|`.
    pub tol: f64,
    pub seed: u64,
    /// Operator-apply budget for each inner Lanczos solve.
    pub max_iter: usize,
    /// Newton steps allowed per eigenvalue.
    pub max_newton: usize,
}

impl ReducedOptions {
    pub fn new(k: usize, tol: f64, seed: u64) -> Self {
        ReducedOptions {
            k,
            tol,
            seed,
            max_iter: 20_000,
            max_newton: 60,
        }
    }
}

/// Below this lower-space dimension the inner problem is solved densely.
const DENSE_BELOW: usize = 400;

/// Krylov basis sizes for warm-started and cold inner solves.
const WARM_BASIS: usize = 24;
const COLD_BASIS: usize = 80;
/// Inner eigensolver tolerance. Dense matrix-vector products with `S(E)`
/// carry rounding near `1e-13 ‖S‖`, so a tighter target can stall.
const INNER_TOL: f64 = 1e-12;

struct Eval {
    e: f64,
    lams: Vec<f64>,
    vecs: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

/// Lowest `want` eigenpairs of `S(e)`. `warm` holds eigenvectors from a
/// nearby spectral parameter; a warm solve skips the random deflation
/// passes, so its result must be confirmed by a cold one before it is
/// reported.
fn inner(red: &TopShellReduction, e: f64, want: usize, opts: &ReducedOptions, warm: Option<&[Vec<f64>]>, solves: &mut usize) -> Result<Eval> {
    let clock = std::time::Instant::now();
    let s = DenseOperator::real(red.effective_matrix(e)?, "S(E)");
    let built = clock.elapsed().as_secs_f64();
    *solves += 1;
    let rep = if s.dim() <= DENSE_BELOW {
        dense_eigs(&s, want)?
    } else {
        let mut lo = LanczosOptions::new(want, INNER_TOL, opts.max_iter, opts.seed);
        match warm {
            Some(w) => {
                lo.start = w.to_vec();
                lo.confirm = false;
                lo.max_basis = Some(WARM_BASIS);
            }
            None => lo.max_basis = Some(COLD_BASIS),
        }
        let r = lanczos_with(&s, &lo)?;
        if !r.converged {
            return Err(Error::NonConvergence {
                iterations: r.iterations,
                residual: r.residual_norms.iter().fold(0.0, |a: f64, b| a.max(*b)),
            });
        }
        r
    };
    log::debug!(
        "S({e}) dim {} warm {}: build {built:.3}s, solve {:.3}s, {} applies",
        s.dim(),
        warm.is_some(),
        clock.elapsed().as_secs_f64() - built,
        rep.iterations
    );
    Ok(Eval {
        e,
        lams: rep.eigenvalues,
        vecs: rep.eigenvectors,
        residuals: rep.residual_norms,
    })
}

/// Safeguarded Newton for the root of `g_j(E) = λ_j(S(E)) − E` on
/// `(lo, hi)`, starting at `e`.
fn newton(
    red: &TopShellReduction,
    j: usize,
    mut lo: f64,
    mut hi: f64,
    mut e: f64,
    opts: &ReducedOptions,
    warm_start: bool,
    warm: &mut Option<Vec<Vec<f64>>>,
    solves: &mut usize,
) -> Result<f64> {
    for _ in 0..opts.max_newton {
        let ev = inner(red, e, opts.k, opts, if warm_start { warm.as_deref() } else { None }, solves)?;
        *warm = Some(ev.vecs.clone());
        let g = ev.lams[j] - e;
        let scale = e.abs().max(1.0);
        if g.abs() <= opts.tol * scale {
            return Ok(e);
        }
        if g > 0.0 {
            lo = lo.max(e);
        } else {
            hi = hi.min(e);
        }
        if hi.is_finite() && lo.is_finite() && (hi - lo).abs() <= opts.tol * scale * 1e-3 {
            return Ok(e);
        }
        let slope = 1.0 + red.energy_derivative(e, &ev.vecs[j])?;
        let mut next = e + g / slope;
        if !(next > lo && next < hi) {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 2.0 * (e - lo).abs().max(1.0),
                // Only the lower end is open: step down by at least |g|.
                (false, _) => e - 2.0 * g.abs().max(1.0),
            };
        }
        e = next;
    }
    Err(Error::NonConvergence {
        iterations: *solves,
        residual: f64::NAN,
    })
}

/// Lowest `k` eigenvalues of the truncated `H_BF` that lie below the
/// top-shell threshold.
///
/// The lowest branch `λ_0(S(E))` is concave in `E` (`S'' ≤ 0`), so Newton
/// started anywhere to the right of the root decreases monotonically onto
/// it and no lower bracket is needed. Iterates use warm-started inner
/// solves; every root is then re-checked with a cold, fully deflated solve
/// and Newton is rerun cold if the check disagrees.
pub fn reduced_levels(red: &TopShellReduction, opts: &ReducedOptions) -> Result<SpectrumReport> {
    if opts.k == 0 || opts.k > red.lower_dim() {
        return Err(Error::contract(format!(
            "requested {} levels from a {}-dimensional reduced space",
            opts.k,
            red.lower_dim()
        )));
    }
    let thr = red.threshold();
    let mut levels: Vec<f64> = Vec::with_capacity(opts.k);
    let mut residuals = Vec::with_capacity(opts.k);
    let mut vectors = Vec::with_capacity(opts.k);
    let mut solves = 0usize;
    let mut warm: Option<Vec<Vec<f64>>> = None;
    let mut last_check: Option<Eval> = None;

    for j in 0..opts.k {
        let accepts = |ev: &Eval| (ev.lams[j] - ev.e).abs() <= 10.0 * opts.tol * ev.e.abs().max(1.0);
        // Degenerate levels are often already roots at the previous check.
        let check = match last_check.take() {
            Some(ev) if accepts(&ev) => ev,
            _ => {
                let (lo, start) = match levels.last() {
                    Some(&prev) => (prev, prev),
                    None => {
                        let base = if thr.is_finite() { thr.min(0.0) } else { 0.0 };
                        (f64::NEG_INFINITY, base - 1.0)
                    }
                };
                let root = newton(red, j, lo, thr, start, opts, true, &mut warm, &mut solves)?;
                let mut check = inner(red, root, opts.k, opts, None, &mut solves)?;
                if !accepts(&check) {
                    let root = newton(red, j, lo, thr, start, opts, false, &mut warm, &mut solves)?;
                    check = inner(red, root, opts.k, opts, None, &mut solves)?;
                }
                check
            }
        };
        let root = check.e;
        if !(root < thr) {
            return Err(Error::Accuracy(format!("level {j} is not below the top-shell threshold {thr}")));
        }
        if !accepts(&check) {
            return Err(Error::Accuracy(format!(
                "level {j}: λ_{j}(S(E)) − E = {:e} at the Newton root {root}",
                check.lams[j] - root
            )));
        }
        residuals.push(check.residuals[j].max((check.lams[j] - root).abs()));
        levels.push(root);
        vectors.push(check.vecs[j].clone());
        warm = Some(check.vecs.clone());
        last_check = Some(check);
    }

    Ok(SpectrumReport {
        multiplicities: multiplicities(&levels, 1e3 * opts.tol * levels[0].abs().max(1.0)),
        eigenvalues: levels,
        residual_norms: residuals,
        iterations: solves,
        converged: true,
        tolerance: opts.tol,
        method: "top-shell Schur complement, safeguarded Newton".into(),
        basis_meta: None,
        eigenvectors: vectors,
    })
}
