//! Explicit scalars of the large-`N` energy expansion.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dispersion_p2, in_ball, integer_radius, MomentumLattice, ModelParams, TWO_PI};
use crate::renorm::{resolvent_pair_sum, Window, DEFAULT_PAIR_BUDGET};
use crate::scattering::ScatteringSolution;
use crate::sum::pairwise_sum;

/// Largest momentum-split exponent allowed by the order-one analysis.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// `2π/3 − √3`.
pub fn log_constant() -> f64 {
    2.0 * PI / 3.0 - 3f64.sqrt()
}

/// Coefficient of `log N`: `−32π(2π/3 − √3) a_W⁴`.
pub fn log_coefficient(a_w: f64) -> f64 {
    -32.0 * PI * log_constant() * a_w.powi(4)
}

/// `(1/x) arcsin x − √(1 − x²)`, with a series for small `x`.
fn mass_bracket(x: f64) -> f64 {
    if x < 0.1 {
        // arcsin(x)/x = Σ a_k x^{2k},  √(1−x²) = Σ b_k x^{2k}; the k = 0 terms cancel.
        let y = x * x;
        let mut a = 1.0;
        let mut b = 1.0;
        let mut yk = 1.0;
        let mut sum = 0.0;
        for k in 0..60 {
            let kf = k as f64;
            // a_{k+1} / a_k = (2k+1)² / ((2k+2)(2k+3)),  b_{k+1} / b_k = (k − ½)/(k + 1).
            a *= (2.0 * kf + 1.0).powi(2) / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
            b *= (kf - 0.5) / (kf + 1.0);
            yk *= y;
            let term = (a - b) * yk;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x.asin() / x - (1.0 - x * x).sqrt()
    }
}

/// `c_m = −16π μ⁻¹ a⁴ ((m/μ) arcsin(μ/m) − √(1 − (μ/m)²))` with
/// `μ⁻¹ = m⁻¹ + 2`; `a_eff` is supplied by the caller.
pub fn mass_coefficient(m: f64, a_eff: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::domain(format!("impurity mass must be positive and finite, got {m}")));
    }
    let mu_inv = 1.0 / m + 2.0;
    let x = 1.0 / (1.0 + 2.0 * m);
    Ok(-16.0 * PI * mu_inv * a_eff.powi(4) * mass_bracket(x))
}

/// `½√(p⁴ + 16π a p²) − ½p² − 4π a + (4π a)²/p²`, evaluated without
/// cancellation at large `p`.
pub fn lhy_summand(a_v: f64, p2: f64) -> f64 {
    let x = 16.0 * PI * a_v / p2;
    let rest = if x < 0.5 {
        // √(1+x) − 1 − x/2 + x²/8 = Σ_{k≥3} binom(½, k) x^k
        let mut c = 1.0 / 16.0;
        let mut xk = x * x * x;
        let mut sum = 0.0;
        for k in 3..200 {
            let term = c * xk;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            c *= (0.5 - k as f64) / (k as f64 + 1.0);
            xk *= x;
        }
        sum
    } else {
        (1.0 + x).sqrt() - 1.0 - 0.5 * x + x * x / 8.0
    };
    0.5 * p2 * rest
}

/// `(n², multiplicity)` for the nonzero lattice points in the closed ball.
fn shells(cutoff: f64) -> Vec<(i64, u64)> {
    let r = integer_radius(cutoff);
    let max = 3 * (r as i64).pow(2);
    let mut counts = vec![0u64; max as usize + 1];
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let n2 = (x * x + y * y + z * z) as i64;
                if n2 > 0 && n2 <= max && in_ball(n2, cutoff) {
                    counts[n2 as usize] += 1;
                }
            }
        }
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(n2, c)| (n2 as i64, c))
        .collect()
}

fn shell_sum(cutoff: f64, f: impl Fn(f64) -> f64) -> f64 {
    let terms: Vec<f64> = shells(cutoff)
        .into_iter()
        .map(|(n2, c)| c as f64 * f(TWO_PI * TWO_PI * n2 as f64))
        .collect();
    pairwise_sum(&terms)
}

/// Lattice sum of [`lhy_summand`] over `0 < |p| ≤ cutoff`. An infinite
/// cutoff returns the tail-corrected estimate of [`lhy_sum_infinite`].
pub fn lhy_sum(a_v: f64, cutoff: f64) -> Result<f64> {
    if !(a_v >= 0.0) {
        return Err(Error::domain(format!("a_V must be >= 0, got {a_v}")));
    }
    if cutoff.is_infinite() {
        return Ok(lhy_sum_infinite(a_v)?.value);
    }
    if !(cutoff > 0.0) {
        return Err(Error::domain(format!("cutoff must be > 0, got {cutoff}")));
    }
    Ok(shell_sum(cutoff, |p2| lhy_summand(a_v, p2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LhyEstimate {
    pub value: f64,
    pub tail: f64,
    pub error_estimate: f64,
    pub cutoff_used: f64,
}

/// Integral of the two leading large-`p` terms of the summand beyond `c`.
fn lhy_tail(a_v: f64, c: f64) -> f64 {
    let a = 4.0 * PI * a_v;
    4.0 * PI / TWO_PI.powi(3) * (2.0 * a.powi(3) / c - 5.0 * a.powi(4) / (3.0 * c.powi(3)))
}

/// Radius of the continuum ball with as many points as the lattice ball
/// (the origin included), which absorbs most of the boundary mismatch.
fn effective_radius(cutoff: f64) -> f64 {
    let count: u64 = shells(cutoff).iter().map(|s| s.1).sum();
    TWO_PI * (3.0 * (count + 1) as f64 / (4.0 * PI)).cbrt()
}

/// Full lattice sum: sum to `64·2π`, add the integral tail, and compare
/// against the same procedure at half the radius.
pub fn lhy_sum_infinite(a_v: f64) -> Result<LhyEstimate> {
    let estimate = |c: f64| -> Result<(f64, f64)> {
        let tail = lhy_tail(a_v, effective_radius(c));
        Ok((lhy_sum(a_v, c)? + tail, tail))
    };
    let c = 64.0 * TWO_PI;
    let (value, tail) = estimate(c)?;
    let (coarse, _) = estimate(0.5 * c)?;
    Ok(LhyEstimate {
        value,
        tail,
        error_estimate: (value - coarse).abs(),
        cutoff_used: c,
    })
}

/// Torus and free-space scattering lengths of one potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthPair {
    pub torus: f64,
    pub free: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScatteringInputs {
    pub v: Option<LengthPair>,
    pub w: Option<LengthPair>,
}

impl ScatteringInputs {
    /// Torus lengths equal to the free ones, so both differences vanish.
    pub fn exact(params: &ModelParams) -> Self {
        ScatteringInputs {
            v: Some(LengthPair {
                torus: params.a_v,
                free: params.a_v,
            }),
            w: Some(LengthPair {
                torus: params.a_w,
                free: params.a_w,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderOneScalar {
    pub boson_length: f64,
    pub impurity_length: f64,
    pub boson_sum: f64,
    pub impurity_sum: f64,
    pub alpha: f64,
    pub total: f64,
}

/// The order-one scalar `e^(U)_N` split into its four pieces.
pub fn scalar_e_u(n: f64, params: &ModelParams, inputs: &ScatteringInputs, alpha: f64) -> Result<OrderOneScalar> {
    if !(n >= 1.0) || !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!("need N >= 1 and 0 < alpha <= 1, got N = {n}, alpha = {alpha}")));
    }
    if alpha > DEFAULT_ALPHA {
        log::warn!("alpha = {alpha} exceeds the admissible range (0, 1/10]");
    }
    let pair = |p: Option<LengthPair>, coupling: f64, name: &str| match p {
        Some(lp) => Ok(lp.torus - lp.free),
        None if coupling == 0.0 => Ok(0.0),
        None => Err(Error::contract(format!("missing {name} scattering lengths"))),
    };
    let dv = pair(inputs.v, params.a_v, "boson")?;
    let dw = pair(inputs.w, params.a_w, "impurity")?;
    let split = n.powf(alpha);
    let boson_sum = if params.a_v == 0.0 {
        0.0
    } else {
        shell_sum(split, |p2| lhy_summand(params.a_v, p2))
    };
    let strict = split * (1.0 - 1e-12);
    let k2 = params.kappa * params.kappa * (1.0 + 1e-12);
    let impurity_sum = if params.a_w == 0.0 || strict <= 0.0 {
        0.0
    } else {
        let s = shell_sum(strict, |p2| {
            let tail = if p2 > k2 {
                let e = dispersion_p2(p2, params.a_v);
                p2 / ((p2 + e) * e)
            } else {
                0.0
            };
            0.5 / p2 - tail
        });
        (8.0 * PI * params.a_w).powi(2) * s
    };
    let boson_length = 4.0 * PI * n * dv;
    let impurity_length = 8.0 * PI * n.sqrt() * dw;
    Ok(OrderOneScalar {
        boson_length,
        impurity_length,
        boson_sum,
        impurity_sum,
        alpha,
        total: pairwise_sum(&[boson_length, impurity_length, boson_sum, impurity_sum]),
    })
}

/// How `v̂_N` enters the `E_N` double sum.
#[derive(Debug, Clone, Copy)]
pub enum VnModel<'a> {
    /// `v̂_N(p) = 4π a_W / p²` on every nonzero momentum.
    CoulombTail,
    /// The two-regime profile: the Gross form on `κ < |p| ≤ N^α` and
    /// `√N φ̂_I(p)` from a solved impurity problem above `N^α`.
    Exact {
        impurity: &'a ScatteringSolution,
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionModel {
    Bogoliubov,
    Free,
}

#[derive(Debug, Clone, Copy)]
pub struct EnOptions {
    pub dispersion: DispersionModel,
    pub reduce: bool,
    pub budget: u128,
}

impl Default for EnOptions {
    fn default() -> Self {
        EnOptions {
            dispersion: DispersionModel::Bogoliubov,
            reduce: true,
            budget: DEFAULT_PAIR_BUDGET,
        }
    }
}

/// `E_N = −2 Σ_{p,q} (p·q)² v̂_N(p)² v̂_N(q)² / ((p+q)² + ε(p) + ε(q) + 1)`
/// over `|p|, |q| ≤ cutoff`.
pub fn e_n_sum(n: f64, params: &ModelParams, model: VnModel<'_>, cutoff: f64) -> Result<f64> {
    e_n_sum_with(n, params, model, cutoff, &EnOptions::default())
}

pub fn e_n_sum_with(n: f64, params: &ModelParams, model: VnModel<'_>, cutoff: f64, opts: &EnOptions) -> Result<f64> {
    if !(n >= 1.0) || !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::domain(format!("need N >= 1 and a finite cutoff > 0, got N = {n}, cutoff = {cutoff}")));
    }
    if params.a_w == 0.0 {
        return Ok(0.0);
    }
    let lat = MomentumLattice::build(cutoff)?;
    let eps = |p2: f64| match opts.dispersion {
        DispersionModel::Bogoliubov => dispersion_p2(p2, params.a_v),
        DispersionModel::Free => p2,
    };
    let win = match model {
        VnModel::CoulombTail => {
            let c = 4.0 * PI * params.a_w;
            Window::from_weights(&lat, |i| {
                let p2 = lat.p2(i);
                Some((eps(p2), (c / p2).powi(2)))
            })
        }
        VnModel::Exact { impurity, alpha } => {
            if impurity.lattice.cutoff_radius() < cutoff {
                return Err(Error::contract(format!(
                    "impurity solution covers |p| <= {} but the sum needs {cutoff}",
                    impurity.lattice.cutoff_radius()
                )));
            }
            let split2 = n.powf(2.0 * alpha);
            let k2 = params.kappa * params.kappa * (1.0 + 1e-12);
            let root_n = n.sqrt();
            Window::from_weights(&lat, |i| {
                let p2 = lat.p2(i);
                if p2 <= k2 {
                    return None;
                }
                let v = if p2 <= split2 * (1.0 + 1e-12) {
                    let e = dispersion_p2(p2, params.a_v);
                    8.0 * PI * params.a_w * p2.sqrt() / ((p2 + e) * e.sqrt())
                } else {
                    let j = impurity.lattice.index_of(lat.point(i)).expect("cutoff checked above");
                    root_n * impurity.phi_hat[j]
                };
                Some((eps(p2), v * v))
            })
        }
    };
    Ok(-2.0 * resolvent_pair_sum(&win, opts.reduce, opts.budget)?)
}

/// Continuum version of `E_N` in coulomb-tail form with `ε(p) = p²`:
/// `−2 (2π)⁻⁶ (4π a_W)⁴ ∫∫_{|p|,|q| ≤ K} (p·q)² / (p⁴ q⁴ (2p² + 2q² + 2p·q + 1))`.
pub fn e_n_integral(a_w: f64, cutoff: f64) -> Result<f64> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::domain(format!("cutoff must be finite and > 0, got {cutoff}")));
    }
    // Angular integral ∫_{-1}^{1} s² / (A + B s) ds.
    let angular = |a: f64, b: f64| {
        let u = b / a;
        if u < 0.3 {
            let mut sum = 0.0;
            let mut uk = 1.0;
            for k in (0..200).step_by(2) {
                let term = uk * 2.0 / (k as f64 + 3.0);
                sum += term;
                if term < 1e-18 * sum {
                    break;
                }
                uk *= u * u;
            }
            sum / a
        } else {
            -2.0 * a / (b * b) + a * a / (b * b * b) * ((a + b) / (a - b)).ln()
        }
    };
    // After the angular reduction the measure is 8π² dp dq.
    let integrand = |p: f64, q: f64| angular(2.0 * p * p + 2.0 * q * q + 1.0, 2.0 * p * q);
    let mut edges = vec![0.0, 0.5];
    while *edges.last().unwrap() * 1.5 < cutoff {
        let next = edges.last().unwrap() * 1.5;
        edges.push(next);
    }
    edges.push(cutoff);
    let (nodes, weights) = gauss_legendre_16();
    let mut abscissae = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (x, wt) in nodes.iter().zip(&weights) {
            abscissae.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * wt));
        }
    }
    let rows: Vec<f64> = abscissae
        .iter()
        .map(|&(p, wp)| {
            let inner: Vec<f64> = abscissae.iter().map(|&(q, wq)| wq * integrand(p, q)).collect();
            wp * pairwise_sum(&inner)
        })
        .collect();
    let integral = 8.0 * PI * PI * pairwise_sum(&rows);
    Ok(-2.0 * (4.0 * PI * a_w).powi(4) / TWO_PI.powi(6) * integral)
}

fn gauss_legendre_16() -> ([f64; 16], [f64; 16]) {
    let half = [
        (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
        (0.281_603_550_779_258_9, 0.182_603_415_044_923_6),
        (0.458_016_777_657_227_4, 0.169_156_519_395_002_5),
        (0.617_876_244_402_643_7, 0.149_595_988_816_576_7),
        (0.755_404_408_355_003, 0.124_628_971_255_533_9),
        (0.865_631_202_387_831_7, 0.095_158_511_682_492_78),
        (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
        (0.989_400_934_991_649_9, 0.027_152_459_411_754_09),
    ];
    let mut x = [0.0; 16];
    let mut w = [0.0; 16];
    for (i, &(xi, wi)) in half.iter().enumerate() {
        x[2 * i] = -xi;
        x[2 * i + 1] = xi;
        w[2 * i] = wi;
        w[2 * i + 1] = wi;
    }
    (x, w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionBreakdown {
    #[serde(rename = "N")]
    pub n: f64,
    pub alpha: f64,
    pub terms: BTreeMap<String, f64>,
    pub total: f64,
    pub method_notes: String,
}

impl ExpansionBreakdown {
    pub const CSV_HEADER: &'static str = "N,alpha,mean_field_V,mean_field_W,log_term,order_one,total";

    pub fn term(&self, name: &str) -> f64 {
        self.terms.get(name).copied().unwrap_or(0.0)
    }

    pub fn csv_row(&self) -> String {
        use crate::io::fmt17;
        [
            fmt17(self.n),
            fmt17(self.alpha),
            fmt17(self.term("mean_field_V")),
            fmt17(self.term("mean_field_W")),
            fmt17(self.term("log_term")),
            fmt17(self.term("order_one")),
            fmt17(self.total),
        ]
        .join(",")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExpansionOptions<'a> {
    pub alpha: f64,
    pub model: VnModel<'a>,
    pub en: EnOptions,
}

impl Default for ExpansionOptions<'_> {
    fn default() -> Self {
        ExpansionOptions {
            alpha: DEFAULT_ALPHA,
            model: VnModel::CoulombTail,
            en: EnOptions::default(),
        }
    }
}

/// `4π a_V (N−1) + 8π a_W √N + E_N + e^(U)_N` with `E_N` cut at `√N`.
pub fn energy_expansion(
    n: f64,
    params: &ModelParams,
    inputs: &ScatteringInputs,
    opts: &ExpansionOptions<'_>,
) -> Result<ExpansionBreakdown> {
    let order_one = scalar_e_u(n, params, inputs, opts.alpha)?;
    let log_term = e_n_sum_with(n, params, opts.model, n.sqrt(), &opts.en)?;
    let mut terms = BTreeMap::new();
    terms.insert("mean_field_V".to_string(), 4.0 * PI * params.a_v * (n - 1.0));
    terms.insert("mean_field_W".to_string(), 8.0 * PI * params.a_w * n.sqrt());
    terms.insert("log_term".to_string(), log_term);
    terms.insert("order_one".to_string(), order_one.total);
    let values: Vec<f64> = terms.values().copied().collect();
    let model = match opts.model {
        VnModel::CoulombTail => "coulomb_tail",
        VnModel::Exact { .. } => "exact_vN",
    };
    Ok(ExpansionBreakdown {
        n,
        alpha: opts.alpha,
        total: pairwise_sum(&values),
        terms,
        method_notes: format!(
            "E_N used in place of E_N,W (difference is O(1)); v_N model {model}; \
             dispersion {:?}; E_N cut at sqrt(N); alpha = {}",
            opts.en.dispersion, opts.alpha
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiluteUnits {
    pub gas_parameter: f64,
    pub polaron_alpha: f64,
    #[serde(rename = "N_equiv")]
    pub n_equiv: f64,
    pub gp_length: f64,
    pub leading: f64,
    pub correction_w: f64,
    pub correction_log: f64,
}

impl DiluteUnits {
    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("gas_parameter", self.gas_parameter),
            ("polaron_alpha", self.polaron_alpha),
            ("N_equiv", self.n_equiv),
            ("gp_length", self.gp_length),
            ("leading", self.leading),
            ("correction_W", self.correction_w),
            ("correction_log", self.correction_log),
        ])
    }
}

/// The expansion rewritten for a gas of density `ρ` and scattering length
/// `a` with an impurity of scattering length `a_W`, all in physical units.
///
/// The log correction is the image of [`log_coefficient`] under the map
/// `N = (ρa³)^{-1/2}`, `ℓ = (ρa)^{-1/2}`, which gives
/// `4π a ρ² · 4(2π/3 − √3) α² √(ρa³) log(ρa³)`.
pub fn dilute_units(rho: f64, a: f64, a_w: f64) -> Result<DiluteUnits> {
    if !(rho > 0.0) || !(a > 0.0) || !(a_w >= 0.0) {
        return Err(Error::domain("need rho > 0, a > 0 and a_W >= 0"));
    }
    let gas = rho * a.powi(3);
    if gas >= 1.0 {
        return Err(Error::domain(format!("rho a^3 = {gas} is not dilute")));
    }
    let gp_length = (rho * a).powf(-0.5);
    let alpha = a_w * a_w / (a * gp_length);
    let leading = 4.0 * PI * a * rho * rho;
    Ok(DiluteUnits {
        gas_parameter: gas,
        polaron_alpha: alpha,
        n_equiv: gas.powf(-0.5),
        gp_length,
        leading,
        correction_w: leading * 2.0 * alpha.sqrt() * gas.powf(0.25),
        correction_log: leading * 4.0 * log_constant() * alpha * alpha * gas.sqrt() * gas.ln(),
    })
}

#[cfg(test)]
mod tests;
