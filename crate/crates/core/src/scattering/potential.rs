use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::io::RadialTable;

/// Radial profile of a repulsive potential.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `A exp(−r² / 2R²)`.
    Gaussian,
    /// `A (1 − r²/R²)²` for `r < R`, zero outside.
    CompactBump,
    /// `A · table(r / R)` with linear interpolation.
    TabulatedRadial(Arc<RadialTable>),
}

/// A member `v_s(x) = s² v(s x)` of the scaling family of a radial
/// potential. `scale` is real so that `s = √N` can be represented for any `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub amplitude: f64,
    pub range: f64,
    pub scale: f64,
}

impl PotentialSpec {
    pub fn gaussian(amplitude: f64, range: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::Gaussian,
            amplitude,
            range,
            scale: 1.0,
        }
    }

    pub fn compact_bump(amplitude: f64, range: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::CompactBump,
            amplitude,
            range,
            scale: 1.0,
        }
    }

    pub fn tabulated(table: RadialTable, amplitude: f64, range: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::TabulatedRadial(Arc::new(table)),
            amplitude,
            range,
            scale: 1.0,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        PotentialSpec {
            scale: s,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::contract(format!("amplitude must be >= 0, got {}", self.amplitude)));
        }
        if !(self.range > 0.0) || !(self.scale >= 1.0) {
            return Err(Error::contract("range must be > 0 and scale >= 1"));
        }
        if let PotentialKind::TabulatedRadial(t) = &self.kind {
            if t.v.iter().any(|&v| v < 0.0) {
                return Err(Error::contract("tabulated potential takes negative values"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
            || matches!(&self.kind, PotentialKind::TabulatedRadial(t) if t.v.iter().all(|&v| v == 0.0))
    }

    /// Unscaled profile.
    fn base(&self, r: f64) -> f64 {
        let a = self.amplitude;
        let u = r / self.range;
        match &self.kind {
            PotentialKind::Gaussian => a * (-0.5 * u * u).exp(),
            PotentialKind::CompactBump => {
                if u < 1.0 {
                    a * (1.0 - u * u).powi(2)
                } else {
                    0.0
                }
            }
            PotentialKind::TabulatedRadial(t) => a * t.eval(u),
        }
    }

    /// Unscaled three-dimensional Fourier transform at `|k|`.
    fn base_hat(&self, k: f64) -> f64 {
        let a = self.amplitude;
        let r = self.range;
        match &self.kind {
            PotentialKind::Gaussian => a * (2.0 * PI * r * r).powf(1.5) * (-0.5 * r * r * k * k).exp(),
            PotentialKind::CompactBump => {
                let x = k * r;
                32.0 * PI * a * r.powi(3) * j3_over_x3(x)
            }
            PotentialKind::TabulatedRadial(t) => a * r.powi(3) * radial_transform(t, k * r),
        }
    }

    /// Value of the scaled potential at radius `r`.
    pub fn value(&self, r: f64) -> f64 {
        self.scale * self.scale * self.base(self.scale * r)
    }

    /// Fourier transform of the scaled potential at `|p|`.
    pub fn fourier(&self, p: f64) -> f64 {
        self.base_hat(p / self.scale) / self.scale
    }

    /// Radius beyond which the scaled potential is negligible (below
    /// `1e-16` of its peak for the Gaussian).
    pub fn effective_range(&self) -> f64 {
        let base = match &self.kind {
            PotentialKind::Gaussian => self.range * (2.0 * 16.0 * 10f64.ln()).sqrt(),
            PotentialKind::CompactBump => self.range,
            PotentialKind::TabulatedRadial(t) => self.range * t.r[t.r.len() - 1],
        };
        base / self.scale
    }
}

/// `j₃(x) / x³`, with a power series near the origin.
fn j3_over_x3(x: f64) -> f64 {
    if x.abs() < 2.0 {
        // Σ_k (−x²/2)^k / (k! · 9·11·…·(7+2k)) / 105
        let y = -0.5 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            term *= y / (k as f64 * (7.0 + 2.0 * k as f64));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum / 105.0
    } else {
        let (s, c) = x.sin_cos();
        let j3 = (15.0 / x.powi(3) - 6.0 / x) * s / x - (15.0 / (x * x) - 1.0) * c / x;
        j3 / x.powi(3)
    }
}

/// `4π ∫ t(u) u² sinc(x u) du` for a piecewise-linear table, using
/// 8-point Gauss–Legendre on each table interval.
fn radial_transform(t: &RadialTable, x: f64) -> f64 {
    const NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    let mut total = 0.0;
    let f = |u: f64| {
        let s = if x * u == 0.0 { 1.0 } else { (x * u).sin() / (x * u) };
        t.eval(u) * u * u * s
    };
    // The segment below the first radius is taken as constant v[0].
    let mut knots = Vec::with_capacity(t.r.len() + 1);
    if t.r[0] > 0.0 {
        knots.push(0.0);
    }
    knots.extend_from_slice(&t.r);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = (((b - a) * x.abs()) / 2.0).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for i in 0..pieces {
            let lo = a + i as f64 * h;
            let mid = lo + 0.5 * h;
            for (n, wgt) in NODES.iter().zip(WEIGHTS) {
                total += wgt * 0.5 * h * (f(mid - 0.5 * h * n) + f(mid + 0.5 * h * n));
            }
        }
    }
    4.0 * PI * total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_transform(v: &PotentialSpec, k: f64) -> f64 {
        // Plain midpoint rule on a fine grid as an independent check.
        let rmax = v.effective_range() * 1.2;
        let n = 200_000;
        let h = rmax / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * h;
            let sinc = if k == 0.0 { 1.0 } else { (k * r).sin() / (k * r) };
            s += v.value(r) * r * r * sinc;
        }
        4.0 * PI * s * h
    }

    #[test]
    fn transforms_match_quadrature() {
        let pots = [
            PotentialSpec::gaussian(2.0, 0.7),
            PotentialSpec::compact_bump(3.0, 0.9),
            PotentialSpec::gaussian(1.0, 0.5).scaled(4.0),
            PotentialSpec::compact_bump(1.0, 0.5).scaled(3.0),
        ];
        for v in &pots {
            for k in [0.0, 0.3, 1.9, 2.1, 7.5, 20.0] {
                let a = v.fourier(k);
                let b = numeric_transform(v, k);
                assert!((a - b).abs() < 1e-8 * v.fourier(0.0), "{v:?} k={k}: {a} {b}");
            }
        }
    }

    #[test]
    fn tabulated_bump_matches_closed_form() {
        let n = 2001;
        let r: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let v: Vec<f64> = r.iter().map(|&x| (1.0 - x * x).powi(2)).collect();
        let tab = PotentialSpec::tabulated(RadialTable::new(r, v).unwrap(), 2.0, 0.8);
        let exact = PotentialSpec::compact_bump(2.0, 0.8);
        for k in [0.0, 1.0, 5.0, 12.0] {
            let (a, b) = (tab.fourier(k), exact.fourier(k));
            assert!((a - b).abs() < 1e-6 * exact.fourier(0.0), "k={k}: {a} {b}");
            assert!((tab.value(0.3) - exact.value(0.3)).abs() < 1e-6);
        }
    }

    #[test]
    fn validation() {
        assert!(PotentialSpec::gaussian(-1.0, 1.0).validate().is_err());
        assert!(PotentialSpec::gaussian(1.0, 0.0).validate().is_err());
        let neg = RadialTable::new(vec![0.0, 1.0], vec![1.0, -1.0]).unwrap();
        assert!(PotentialSpec::tabulated(neg, 1.0, 1.0).validate().is_err());
        assert!(PotentialSpec::gaussian(0.0, 1.0).is_zero());
    }
}
