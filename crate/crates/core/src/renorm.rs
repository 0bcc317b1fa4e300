//! Gross profile, renormalization counterterms and the normal-ordered
//! zero-particle kernel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    dispersion_p2, form_factor_p2, norm2, orbit_representatives, CubicSymmetry, MomentumLattice,
    ModelParams, Vec3, TWO_PI,
};
use crate::sum::{indexed_sum, pairwise_sum};

/// Shift added to the two-phonon resolvent denominators.
pub const RESOLVENT_SHIFT: f64 = 1.0;

/// Default budget of evaluated `(p, q)` pairs in a double sum.
pub const DEFAULT_PAIR_BUDGET: u128 = 20_000_000_000;

/// `f̂(p) = −ŵ^Λ(p) / (p² + ε(p))` on `κ < |p| ≤ Λ`, zero elsewhere.
pub fn gross_profile(p: Vec3, params: &ModelParams) -> Result<f64> {
    let p2 = norm2(p);
    if p2 == 0.0 {
        return Err(Error::domain("Gross profile is undefined at the zero mode"));
    }
    Ok(gross_profile_p2(p2, params))
}

pub(crate) fn gross_profile_p2(p2: f64, params: &ModelParams) -> f64 {
    if p2 <= params.kappa * params.kappa * (1.0 + 1e-12) {
        return 0.0;
    }
    let w = form_factor_p2(p2, params.a_w, params.a_v, params.lambda);
    -w / (p2 + dispersion_p2(p2, params.a_v))
}

fn check_window(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.lambda.is_infinite() {
        return Err(Error::domain("counterterms diverge at infinite cutoff"));
    }
    Ok(())
}

/// `E1 = −(8π a_W)² Σ p² / (ε (p² + ε))` over `κ ≤ |p| ≤ Λ`.
pub fn e_lambda_1(params: &ModelParams) -> Result<f64> {
    check_window(params)?;
    if params.kappa > params.lambda || params.a_w == 0.0 {
        return Ok(0.0);
    }
    let lat = MomentumLattice::build(params.lambda)?;
    let k2 = params.kappa * params.kappa * (1.0 - 1e-12);
    let c = (8.0 * PI * params.a_w).powi(2);
    let s = indexed_sum(lat.len(), |i| {
        let p2 = lat.p2(i);
        if p2 < k2 {
            return 0.0;
        }
        let e = dispersion_p2(p2, params.a_v);
        p2 / (e * (p2 + e))
    });
    Ok(-c * s)
}

/// Points carrying a nonzero weight, in struct-of-arrays form.
pub(crate) struct Window {
    p: Vec<Vec3>,
    eps: Vec<f64>,
    f2: Vec<f64>,
    ints: Vec<crate::lattice::IVec3>,
}

impl Window {
    fn new(params: &ModelParams, cutoff: f64) -> Result<Self> {
        let lat = MomentumLattice::build(cutoff)?;
        Ok(Self::from_weights(&lat, |i| {
            let p2 = lat.p2(i);
            let f = gross_profile_p2(p2, params);
            (f != 0.0).then(|| (dispersion_p2(p2, params.a_v), f * f))
        }))
    }

    /// `weight(i)` returns `(ε, w²)` for kept points.
    pub(crate) fn from_weights(lat: &MomentumLattice, weight: impl Fn(usize) -> Option<(f64, f64)>) -> Self {
        let mut w = Window {
            p: Vec::new(),
            eps: Vec::new(),
            f2: Vec::new(),
            ints: Vec::new(),
        };
        for i in 0..lat.len() {
            if let Some((eps, f2)) = weight(i) {
                w.p.push(lat.momentum(i));
                w.eps.push(eps);
                w.f2.push(f2);
                w.ints.push(lat.point(i));
            }
        }
        w
    }

    fn len(&self) -> usize {
        self.p.len()
    }
}

/// `Σ_{p,q} (p·q)² w(p)² w(q)² / ((p+q)² + ε(p) + ε(q) + 1)` over a window.
/// The window must be invariant under the cubic group when `reduce` is set.
pub(crate) fn resolvent_pair_sum(win: &Window, reduce: bool, budget: u128) -> Result<f64> {
    let outer = outer_indices(win, reduce.then(crate::lattice::cubic_group));
    check_pairs(outer.len(), win.len(), budget)?;
    Ok(double_sum(win, &outer, e2_kernel(win)))
}

fn check_pairs(outer: usize, inner: usize, budget: u128) -> Result<()> {
    let pairs = outer as u128 * inner as u128;
    if pairs > budget {
        return Err(Error::capacity(
            "double-sum pairs (use a coarser cutoff grid)",
            pairs,
            budget,
        ));
    }
    Ok(())
}

/// Sum over `(outer, all q)` of `kernel(p, q)`, weighted by orbit sizes.
fn double_sum<K>(win: &Window, outer: &[(usize, usize)], kernel: K) -> f64
where
    K: Fn(usize, usize) -> f64 + Sync + Send,
{
    let n = win.len();
    indexed_sum(outer.len(), |o| {
        let (i, mult) = outer[o];
        let mut buf = Vec::with_capacity(n);
        for j in 0..n {
            buf.push(kernel(i, j));
        }
        mult as f64 * pairwise_sum(&buf)
    })
}

fn e2_kernel(win: &Window) -> impl Fn(usize, usize) -> f64 + Sync + Send + '_ {
    move |i, j| {
        let (p, q) = (win.p[i], win.p[j]);
        let pq = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        let s = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
        let den = norm2(s) + win.eps[i] + win.eps[j] + RESOLVENT_SHIFT;
        pq * pq * win.f2[i] * win.f2[j] / den
    }
}

/// `E2 = −2 Σ_{p,q} (p·q)² f̂(p)² f̂(q)² / ((p+q)² + ε(p) + ε(q) + 1)`,
/// with the outer sum reduced by the 48 cubic symmetries.
pub fn e_lambda_2(params: &ModelParams) -> Result<f64> {
    e_lambda_2_with(params, true, DEFAULT_PAIR_BUDGET)
}

/// As [`e_lambda_2`], optionally without the symmetry reduction.
pub fn e_lambda_2_with(params: &ModelParams, reduce: bool, budget: u128) -> Result<f64> {
    check_window(params)?;
    if params.kappa >= params.lambda || params.a_w == 0.0 {
        return Ok(0.0);
    }
    let win = Window::new(params, params.lambda)?;
    Ok(-2.0 * resolvent_pair_sum(&win, reduce, budget)?)
}

fn outer_indices(win: &Window, group: Option<Vec<CubicSymmetry>>) -> Vec<(usize, usize)> {
    match group {
        Some(g) => orbit_representatives(&win.ints, &g),
        None => (0..win.len()).map(|i| (i, 1)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountertermReport {
    pub lambda: f64,
    pub kappa: f64,
    pub e1: f64,
    pub e2: f64,
    pub e_total: f64,
    pub lattice_size: usize,
    pub tail_bound: f64,
}

impl CountertermReport {
    pub const CSV_HEADER: &'static str = "lambda,kappa,E1,E2,E_total,tail_bound";

    pub fn csv_row(&self) -> String {
        use crate::io::fmt17;
        format!(
            "{},{},{},{},{},{}",
            fmt17(self.lambda),
            fmt17(self.kappa),
            fmt17(self.e1),
            fmt17(self.e2),
            fmt17(self.e_total),
            fmt17(self.tail_bound)
        )
    }
}

/// `E_Λ = E1 + E2` with bookkeeping.
pub fn counterterms(params: &ModelParams) -> Result<CountertermReport> {
    let e1 = e_lambda_1(params)?;
    let e2 = e_lambda_2(params)?;
    Ok(CountertermReport {
        lambda: params.lambda,
        kappa: params.kappa,
        e1,
        e2,
        e_total: e1 + e2,
        lattice_size: MomentumLattice::build(params.lambda)?.len(),
        tail_bound: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta0Value {
    pub value: f64,
    /// Bound on the omitted tail; zero for a finite cutoff.
    pub tail_bound: f64,
    /// Cutoff actually summed to.
    pub cutoff_used: f64,
}

/// Normal-ordered zero-particle kernel at a spectral point, where the
/// impurity gradient is replaced by `impurity_momentum` and `dΓ(ε)` by
/// `phonon_energy`:
///
/// `Θ = −2 Σ X/((ι+k+ℓ)² + ε_k + ε_ℓ + E_ph + 1) − E2`,
/// `X = (k·ℓ)² f̂(k)² f̂(ℓ)²`, evaluated in common-denominator form.
///
/// `params.lambda = ∞` sums over growing cutoffs until the tail bound is
/// below `tol`.
pub fn theta0(params: &ModelParams, impurity_momentum: Vec3, phonon_energy: f64, tol: f64) -> Result<Theta0Value> {
    params.validate()?;
    if !(phonon_energy >= 0.0) {
        return Err(Error::domain("phonon energy must be >= 0"));
    }
    if params.a_w == 0.0 || params.kappa >= params.lambda {
        return Ok(Theta0Value {
            value: 0.0,
            tail_bound: 0.0,
            cutoff_used: params.lambda,
        });
    }
    let group: Vec<CubicSymmetry> = crate::lattice::cubic_group()
        .into_iter()
        .filter(|g| g.apply_real(impurity_momentum) == impurity_momentum)
        .collect();
    if params.lambda.is_finite() {
        let value = theta0_at(params, params.lambda, impurity_momentum, phonon_energy, &group, DEFAULT_PAIR_BUDGET)?;
        return Ok(Theta0Value {
            value,
            tail_bound: 0.0,
            cutoff_used: params.lambda,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let mut cutoff = (2.0 * params.kappa).max(8.0 * TWO_PI);
    loop {
        let bound = theta0_tail_bound(params.a_w, impurity_momentum, phonon_energy, cutoff);
        if bound <= tol {
            let p = ModelParams { lambda: cutoff, ..*params };
            let value = theta0_at(&p, cutoff, impurity_momentum, phonon_energy, &group, DEFAULT_PAIR_BUDGET)
                .map_err(|e| match e {
                    Error::Capacity { .. } => Error::Accuracy(format!(
                        "tail bound {bound:e} needs cutoff {cutoff}, beyond the pair budget"
                    )),
                    other => other,
                })?;
            return Ok(Theta0Value {
                value,
                tail_bound: bound,
                cutoff_used: cutoff,
            });
        }
        cutoff *= 2.0_f64.sqrt();
        // Rough pair count of a double sum at this cutoff.
        let m = 4.0 / 3.0 * PI * (cutoff / TWO_PI).powi(3);
        if (m * m / group.len() as f64) as u128 > DEFAULT_PAIR_BUDGET {
            return Err(Error::Accuracy(format!(
                "tolerance {tol:e} unreachable within the pair budget (tail bound {bound:e} at cutoff {cutoff})"
            )));
        }
    }
}

/// Integral-comparison bound for the part of the `Θ` sum with
/// `max(|k|, |ℓ|) > K`, using `|f̂(k)| ≤ 4π a_W / k²` and pairing
/// `(k, ℓ)` with `(−k, −ℓ)`.
pub fn theta0_tail_bound(a_w: f64, iota: Vec3, phonon_energy: f64, cutoff: f64) -> f64 {
    let k = cutoff - 3f64.sqrt() * PI;
    if k <= 0.0 {
        return f64::INFINITY;
    }
    let i2 = norm2(iota);
    let pref = 2.0 * (4.0 * PI * a_w).powi(4) * (4.0 * PI).powi(2) / TWO_PI.powi(6);
    pref * (9.0 * i2 + phonon_energy) * PI / (4.0 * k * k)
}

fn theta0_at(
    params: &ModelParams,
    cutoff: f64,
    iota: Vec3,
    e_ph: f64,
    group: &[CubicSymmetry],
    budget: u128,
) -> Result<f64> {
    let p = ModelParams { lambda: cutoff, ..*params };
    let win = Window::new(&p, cutoff)?;
    let outer = outer_indices(&win, Some(group.to_vec()));
    check_pairs(outer.len(), win.len(), budget)?;
    let i2 = norm2(iota);
    let kernel = |i: usize, j: usize| {
        let (k, l) = (win.p[i], win.p[j]);
        let kl = k[0] * l[0] + k[1] * l[1] + k[2] * l[2];
        let s = [k[0] + l[0], k[1] + l[1], k[2] + l[2]];
        let s2 = norm2(s);
        let is = iota[0] * s[0] + iota[1] * s[1] + iota[2] * s[2];
        let base = win.eps[i] + win.eps[j] + RESOLVENT_SHIFT;
        let d0 = s2 + base;
        let di = s2 + 2.0 * is + i2 + base + e_ph;
        let x = kl * kl * win.f2[i] * win.f2[j];
        2.0 * x * (i2 + 2.0 * is + e_ph) / (di * d0)
    };
    Ok(double_sum(&win, &outer, kernel))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lam: f64, kappa: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, TWO_PI * lam, TWO_PI * kappa, 2)
    }

    #[test]
    fn profile_cases() {
        let p = params(200.0, 2.0);
        assert_eq!(gross_profile([TWO_PI, 0.0, 0.0], &p).unwrap(), 0.0);
        assert_eq!(gross_profile([TWO_PI * 2.0, 0.0, 0.0], &p).unwrap(), 0.0);
        assert!(gross_profile([TWO_PI * 3.0, 0.0, 0.0], &p).unwrap() < 0.0);
        assert!(gross_profile([0.0; 3], &p).is_err());
        let zero = ModelParams { a_w: 0.0, ..p };
        assert_eq!(gross_profile([TWO_PI * 3.0, 0.0, 0.0], &zero).unwrap(), 0.0);
        let k = 100.0 * TWO_PI;
        let f = gross_profile([k, 0.0, 0.0], &p).unwrap();
        let asym = -4.0 * PI / (k * k);
        assert!((f / asym - 1.0).abs() < 0.01);
    }

    #[test]
    fn empty_windows_vanish() {
        assert_eq!(e_lambda_1(&params(2.0, 3.0)).unwrap(), 0.0);
        assert_eq!(e_lambda_2(&params(3.0, 3.0)).unwrap(), 0.0);
        let zero = ModelParams { a_w: 0.0, ..params(4.0, 1.0) };
        assert_eq!(e_lambda_1(&zero).unwrap(), 0.0);
        assert_eq!(e_lambda_2(&zero).unwrap(), 0.0);
    }

    #[test]
    fn e1_direct_small_case() {
        // Only the first shell: κ = 0, Λ = 2π.
        let p = ModelParams::new(1.0, 0.5, TWO_PI, 0.0, 2);
        let p2 = TWO_PI * TWO_PI;
        let e = (p2 * p2 + 16.0 * PI * p2).sqrt();
        let expect = -(8.0 * PI * 0.5f64).powi(2) * 6.0 * p2 / (e * (p2 + e));
        assert!((e_lambda_1(&p).unwrap() - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn e2_symmetry_reduction_matches_plain_sum() {
        for (lam, kap) in [(3.0, 0.0), (4.5, 1.0), (6.0, 2.0)] {
            let p = params(lam, kap);
            let a = e_lambda_2_with(&p, true, DEFAULT_PAIR_BUDGET).unwrap();
            let b = e_lambda_2_with(&p, false, DEFAULT_PAIR_BUDGET).unwrap();
            assert!(a < 0.0);
            assert!((a - b).abs() <= 1e-10 * b.abs(), "{a} {b}");
        }
        assert!(matches!(e_lambda_2_with(&params(6.0, 0.0), false, 10), Err(Error::Capacity { .. })));
    }

    #[test]
    fn counterterms_are_monotone() {
        let mut prev = 0.0;
        for lam in [3.0, 4.0, 5.0, 6.0] {
            let r = counterterms(&params(lam, 1.0)).unwrap();
            assert!(r.e1 <= 0.0 && r.e2 <= 0.0);
            assert!(r.e_total < prev);
            prev = r.e_total;
        }
        // Nondecreasing in κ.
        let a = counterterms(&params(5.0, 1.0)).unwrap();
        let b = counterterms(&params(5.0, 2.0)).unwrap();
        assert!(b.e1 >= a.e1 && b.e2 >= a.e2);
    }

    #[test]
    fn theta0_vanishes_at_subtraction_point() {
        for lam in [3.0, 5.0] {
            let t = theta0(&params(lam, 1.0), [0.0; 3], 0.0, 1e-6).unwrap();
            assert_eq!(t.value, 0.0);
        }
        let zero = ModelParams { a_w: 0.0, ..params(4.0, 1.0) };
        assert_eq!(theta0(&zero, [TWO_PI, 0.0, 0.0], 3.0, 1e-6).unwrap().value, 0.0);
    }

    #[test]
    fn theta0_matches_difference_form() {
        let p = params(4.0, 1.0);
        let iota = [TWO_PI, 0.0, 0.0];
        let eph = 20.0;
        let t = theta0(&p, iota, eph, 1e-6).unwrap().value;
        // Direct evaluation of the uncombined form.
        let lat = MomentumLattice::build(p.lambda).unwrap();
        let mut s = 0.0;
        for i in 0..lat.len() {
            for j in 0..lat.len() {
                let (k, l) = (lat.momentum(i), lat.momentum(j));
                let fk = gross_profile_p2(lat.p2(i), &p);
                let fl = gross_profile_p2(lat.p2(j), &p);
                let kl = k[0] * l[0] + k[1] * l[1] + k[2] * l[2];
                let x = kl * kl * fk * fk * fl * fl;
                let sh = [iota[0] + k[0] + l[0], k[1] + l[1], k[2] + l[2]];
                let d = norm2(sh) + dispersion_p2(lat.p2(i), p.a_v) + dispersion_p2(lat.p2(j), p.a_v) + eph + 1.0;
                s += x / d;
            }
        }
        let direct = -2.0 * s - e_lambda_2(&p).unwrap();
        assert!((t - direct).abs() < 1e-9 * direct.abs().max(1e-3), "{t} {direct}");
    }

    #[test]
    fn theta0_infinite_cutoff() {
        let p = ModelParams::new(1.0, 0.05, f64::INFINITY, TWO_PI, 2);
        let iota = [TWO_PI, 0.0, 0.0];
        let t = theta0(&p, iota, 10.0, 1e-5).unwrap();
        assert!(t.tail_bound <= 1e-5);
        assert!(t.value.is_finite());
        let strict = theta0(&ModelParams { a_w: 1.0, ..p }, iota, 10.0, 1e-12);
        assert!(matches!(strict, Err(Error::Accuracy(_))));
        // Cauchy behaviour along a cutoff sequence.
        let vals: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&l| theta0(&ModelParams { lambda: TWO_PI * l, ..p }, iota, 10.0, 0.0).unwrap().value)
            .collect();
        assert!((vals[2] - vals[1]).abs() < (vals[1] - vals[0]).abs());
    }
}
