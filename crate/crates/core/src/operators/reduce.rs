//! Exact elimination of the top boson-number shell.
//!
//! Creation and annihilation change the boson number by one, so the block of
//! `H_BF` on the states with exactly `n_max` bosons is diagonal, `D`. For a
//! spectral parameter `E` below `min D` the Schur complement
//!
//! ```text
//! S(E) = A + B (E − D)⁻¹ Bᵀ
//! ```
//!
//! acts on the states with fewer bosons, and `E` is an eigenvalue of the full
//! truncated operator exactly when it is an eigenvalue of `S(E)`. The lower
//! space is far smaller than the full sector, which is what makes cutoff
//! sweeps at `n_max = 2` affordable.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{hbf_operator, mode_form_factors, LinearOperator};
use crate::error::{Error, Result};
use crate::fock::SectorBasis;
use crate::lattice::{dispersion_p2, inorm2, isub, iadd, MomentumLattice, ModelParams, TWO_PI};

/// Largest lower-space dimension for which `S(E)` is stored densely.
pub const DEFAULT_REDUCED_CAP: usize = 12_000;

pub struct TopShellReduction {
    lower: Arc<SectorBasis>,
    a: DMatrix<f64>,
    eps: Vec<f64>,
    w: Vec<f64>,
    n_top: usize,
    threshold: f64,
    top_states: u128,
}

impl TopShellReduction {
    pub fn new(lattice: Arc<MomentumLattice>, params: &ModelParams) -> Result<Self> {
        Self::with_cap(lattice, params, DEFAULT_REDUCED_CAP)
    }

    pub fn with_cap(lattice: Arc<MomentumLattice>, params: &ModelParams, cap: usize) -> Result<Self> {
        params.validate()?;
        if params.n_max == 0 {
            return Err(Error::contract("top-shell reduction needs n_max >= 1"));
        }
        let n_top = params.n_max;
        let lower_params = ModelParams { n_max: n_top - 1, ..*params };
        let lower = Arc::new(SectorBasis::enumerate_with_cap(lattice.clone(), n_top - 1, params.p_total, cap)?);
        let h = hbf_operator(lower.clone(), &lower_params)?;
        let n = lower.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut col = vec![0.0; n];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            h.apply(&e, &mut col);
            e[j] = 0.0;
            a.column_mut(j).copy_from_slice(&col);
        }
        let eps = (0..lattice.len()).map(|i| dispersion_p2(lattice.p2(i), params.a_v)).collect();
        let w = mode_form_factors(&lower, params);
        let mut red = TopShellReduction {
            lower,
            a,
            eps,
            w,
            n_top,
            threshold: f64::INFINITY,
            top_states: 0,
        };
        let mut thr = f64::INFINITY;
        let mut count: u128 = 0;
        red.for_each_top(|d, _| {
            thr = thr.min(d);
            count += 1;
        });
        red.threshold = thr;
        red.top_states = count;
        Ok(red)
    }

    pub fn lower_basis(&self) -> &Arc<SectorBasis> {
        &self.lower
    }

    pub fn lower_dim(&self) -> usize {
        self.lower.len()
    }

    /// Number of eliminated top-shell states.
    pub fn top_dim(&self) -> u128 {
        self.top_states
    }

    /// Lowest diagonal energy in the eliminated shell.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Visits every top-shell state once as `(D_s, links)`, where `links`
    /// lists `(lower index, amplitude)` of the states it couples to.
    fn for_each_top(&self, mut f: impl FnMut(f64, &[(usize, f64)])) {
        let lat = self.lower.lattice();
        let m = lat.len() as u32;
        let p_total = self.lower.p_total();
        let mut seq: Vec<u32> = Vec::with_capacity(self.n_top);
        let mut buf: Vec<u32> = Vec::with_capacity(self.n_top);
        let mut links: Vec<(usize, f64)> = Vec::with_capacity(self.n_top);
        for u in self.lower.shell(self.n_top - 1) {
            let useq = self.lower.modes_of(u);
            let start = useq.last().copied().unwrap_or(0);
            let ku = self.lower.boson_momentum(u);
            let eu: f64 = useq.iter().map(|&i| self.eps[i as usize]).sum();
            for q in start..m {
                let k = iadd(ku, lat.point(q as usize));
                let d = TWO_PI * TWO_PI * inorm2(isub(p_total, k)) as f64 + eu + self.eps[q as usize];
                seq.clear();
                seq.extend_from_slice(useq);
                seq.push(q);
                links.clear();
                let mut j = 0;
                while j < seq.len() {
                    let mode = seq[j];
                    let mut run = 1;
                    while j + run < seq.len() && seq[j + run] == mode {
                        run += 1;
                    }
                    let amp = self.w[mode as usize] * (run as f64).sqrt();
                    if amp != 0.0 {
                        let idx = match self.n_top {
                            1 => 0,
                            2 => 1 + seq[if j == 0 && run == 1 { 1 } else { 0 }] as usize,
                            _ => {
                                buf.clear();
                                buf.extend_from_slice(&seq[..j]);
                                buf.extend_from_slice(&seq[j + 1..]);
                                self.lower.index_of_modes(&buf).expect("lower state present")
                            }
                        };
                        links.push((idx, amp));
                    }
                    j += run;
                }
                f(d, &links);
            }
        }
    }

    fn check_below(&self, e: f64) -> Result<()> {
        if !(e < self.threshold) {
            return Err(Error::domain(format!(
                "spectral parameter {e} is not below the top-shell threshold {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// Dense `S(E)`.
    pub fn effective_matrix(&self, e: f64) -> Result<DMatrix<f64>> {
        self.check_below(e)?;
        let mut s = self.a.clone();
        self.for_each_top(|d, links| {
            let inv = 1.0 / (e - d);
            for &(i, ai) in links {
                let c = ai * inv;
                for &(j, aj) in links {
                    s[(i, j)] += c * aj;
                }
            }
        });
        Ok(s)
    }

    /// `vᵀ B (E − D)⁻² Bᵀ v`, i.e. minus the derivative of `vᵀ S(E) v`.
    pub fn energy_derivative(&self, e: f64, v: &[f64]) -> Result<f64> {
        self.check_below(e)?;
        let mut terms = Vec::with_capacity(1024);
        let mut total = 0.0;
        self.for_each_top(|d, links| {
            let c: f64 = links.iter().map(|&(i, a)| a * v[i]).sum();
            if c != 0.0 {
                let inv = 1.0 / (e - d);
                terms.push(c * c * inv * inv);
                if terms.len() == 4096 {
                    total += crate::sum::pairwise_sum(&terms);
                    terms.clear();
                }
            }
        });
        Ok(total + crate::sum::pairwise_sum(&terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::dense_eigs;
    use crate::operators::DenseOperator;

    #[test]
    fn schur_eigenvalue_condition_holds_at_exact_eigenvalues() {
        // Every low eigenvalue e of the full truncated operator is an
        // eigenvalue of S(e).
        let lat = Arc::new(MomentumLattice::build(TWO_PI * 1.5).unwrap());
        for n_max in 1..=3 {
            let params = ModelParams::new(0.6, 0.4, TWO_PI * 1.5, 0.0, n_max);
            let full = Arc::new(SectorBasis::enumerate(lat.clone(), n_max, [0; 3]).unwrap());
            let h = hbf_operator(full, &params).unwrap().to_dense().unwrap();
            let spec = dense_eigs(&h, 4).unwrap();
            let red = TopShellReduction::new(lat.clone(), &params).unwrap();
            for &e in &spec.eigenvalues {
                // Eigenvalues at the threshold belong to states decoupled from
                // the lower block, where S(e) is singular.
                if e >= red.threshold() - 1e-6 * red.threshold().abs().max(1.0) {
                    continue;
                }
                let s = DenseOperator::real(red.effective_matrix(e).unwrap(), "S");
                let ss = dense_eigs(&s, s.dim()).unwrap();
                let closest = ss.eigenvalues.iter().map(|x| (x - e).abs()).fold(f64::INFINITY, f64::min);
                assert!(closest < 1e-9, "n_max {n_max}: e {e} closest {closest}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let lat = Arc::new(MomentumLattice::build(TWO_PI * 1.5).unwrap());
        let params = ModelParams::new(1.0, 0.3, TWO_PI * 1.5, 0.0, 2);
        let red = TopShellReduction::new(lat, &params).unwrap();
        let n = red.lower_dim();
        let v: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let quad = |e: f64| {
            let s = red.effective_matrix(e).unwrap();
            let x = nalgebra::DVector::from_column_slice(&v);
            x.dot(&(&s * &x))
        };
        let e = -3.0;
        let h = 1e-4;
        let fd = (quad(e + h) - quad(e - h)) / (2.0 * h);
        let d = red.energy_derivative(e, &v).unwrap();
        assert!((fd + d).abs() < 1e-6 * d.abs(), "{fd} {d}");
        assert!(red.effective_matrix(red.threshold()).is_err());
    }
}
