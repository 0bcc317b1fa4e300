//! Operators on a [`SectorBasis`].
//!
//! Matrix-free operators store only the diagonal and the list of
//! one-boson creation links, each link counted once; memory grows like
//! `n_max · dim`. Dense assemblies exist for verification work.

mod dressed;
mod oracle;
mod reduce;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::SectorBasis;
use crate::lattice::{dispersion_p2, form_factor_p2, inorm2, ModelParams, TWO_PI};

pub use dressed::{annihilation_dense, creation_dense, dressed_rhs, dressing_residual, weyl_unitary};
pub use oracle::{sector_union_spectrum, tensor_product_spectrum};
pub use reduce::TopShellReduction;

/// Default dimension cap for dense assemblies.
pub const DEFAULT_DENSE_CAP: usize = 4000;

/// A real symmetric linear map given by its action on vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Link {
    lo: u32,
    hi: u32,
    amp: f64,
}

/// Matrix-free symmetric operator on a sector basis.
#[derive(Debug, Clone)]
pub struct OperatorHandle {
    basis: Arc<SectorBasis>,
    diag: Vec<f64>,
    links: Vec<Link>,
    label: String,
}

impl OperatorHandle {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Dense real assembly of the same operator.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let n = self.dim();
        check_dense_cap(n, DEFAULT_DENSE_CAP)?;
        let mut m = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for l in &self.links {
            m[(l.hi as usize, l.lo as usize)] += l.amp;
            m[(l.lo as usize, l.hi as usize)] += l.amp;
        }
        Ok(DenseOperator {
            basis: Some(self.basis.clone()),
            matrix: DenseMatrix::Real(m),
            label: self.label.clone(),
        })
    }
}

impl LinearOperator for OperatorHandle {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        for ((yi, &d), &xi) in y.iter_mut().zip(&self.diag).zip(x) {
            *yi = d * xi;
        }
        for l in &self.links {
            let (lo, hi) = (l.lo as usize, l.hi as usize);
            y[hi] += l.amp * x[lo];
            y[lo] += l.amp * x[hi];
        }
    }
}

/// `(P − K)² + Σ n_k ε(k)` for every state.
pub(crate) fn free_diagonal(basis: &SectorBasis, a_v: f64) -> Vec<f64> {
    let lat = basis.lattice();
    let eps: Vec<f64> = (0..lat.len()).map(|i| dispersion_p2(lat.p2(i), a_v)).collect();
    (0..basis.len())
        .map(|i| {
            let kin = TWO_PI * TWO_PI * inorm2(basis.impurity_momentum(i)) as f64;
            kin + basis.modes_of(i).iter().map(|&m| eps[m as usize]).sum::<f64>()
        })
        .collect()
}

/// Per-mode form factor `ŵ^Λ` on the basis lattice.
pub(crate) fn mode_form_factors(basis: &SectorBasis, params: &ModelParams) -> Vec<f64> {
    let lat = basis.lattice();
    (0..lat.len())
        .map(|i| form_factor_p2(lat.p2(i), params.a_w, params.a_v, params.lambda))
        .collect()
}

/// The cutoff Bogoliubov–Fröhlich Hamiltonian restricted to a sector.
pub fn hbf_operator(basis: Arc<SectorBasis>, params: &ModelParams) -> Result<OperatorHandle> {
    params.validate()?;
    if params.lambda > basis.lattice().cutoff_radius() * (1.0 + 1e-12) {
        return Err(Error::contract(format!(
            "cutoff {} exceeds the basis lattice radius {}",
            params.lambda,
            basis.lattice().cutoff_radius()
        )));
    }
    if params.p_total != basis.p_total() {
        return Err(Error::contract("model total momentum differs from the basis sector"));
    }
    let diag = free_diagonal(&basis, params.a_v);
    let w = mode_form_factors(&basis, params);
    let links = creation_links(&basis, &w);
    Ok(OperatorHandle {
        basis,
        diag,
        links,
        label: "H_BF".into(),
    })
}

/// Links `s → s + e_p` with amplitude `g_p √(n_p(s) + 1)`, enumerated from
/// the annihilation side so each pair appears once.
pub(crate) fn creation_links(basis: &SectorBasis, g: &[f64]) -> Vec<Link> {
    let mut links = Vec::new();
    let mut buf: Vec<u32> = Vec::with_capacity(basis.n_max());
    for t in 0..basis.len() {
        let seq = basis.modes_of(t);
        let mut j = 0;
        while j < seq.len() {
            let m = seq[j];
            let mut run = 1;
            while j + run < seq.len() && seq[j + run] == m {
                run += 1;
            }
            let amp = g[m as usize] * (run as f64).sqrt();
            if amp != 0.0 {
                buf.clear();
                buf.extend_from_slice(&seq[..j]);
                buf.extend_from_slice(&seq[j + 1..]);
                if let Some(s) = basis.index_of_modes(&buf) {
                    links.push(Link {
                        lo: s as u32,
                        hi: t as u32,
                        amp,
                    });
                }
            }
            j += run;
        }
    }
    links
}

/// Diagonal operator `Σ n_k symbol(k)`.
pub fn dgamma_operator(basis: Arc<SectorBasis>, symbol: &dyn Fn(usize) -> f64) -> OperatorHandle {
    let vals: Vec<f64> = (0..basis.lattice().len()).map(symbol).collect();
    let diag = (0..basis.len())
        .map(|i| basis.modes_of(i).iter().map(|&m| vals[m as usize]).sum())
        .collect();
    OperatorHandle {
        basis,
        diag,
        links: Vec::new(),
        label: "dGamma".into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DenseMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl DenseMatrix {
    pub fn dim(&self) -> usize {
        match self {
            DenseMatrix::Real(m) => m.nrows(),
            DenseMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        match self {
            DenseMatrix::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
            DenseMatrix::Complex(m) => m.clone(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        match self {
            DenseMatrix::Real(m) => m.iter().fold(0.0, |a, x| a.max(x.abs())),
            DenseMatrix::Complex(m) => m.iter().fold(0.0, |a, x| a.max(x.norm())),
        }
    }

    /// `max |A − A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let c = self.to_complex();
        (&c - c.adjoint()).iter().fold(0.0, |a, x| a.max(x.norm()))
    }

    /// `max |A†A − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let c = self.to_complex();
        let n = c.nrows();
        (c.adjoint() * &c - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .fold(0.0, |a, x| a.max(x.norm()))
    }
}

/// A dense matrix on a sector basis (or on an abstract index set).
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub basis: Option<Arc<SectorBasis>>,
    pub matrix: DenseMatrix,
    pub label: String,
}

impl DenseOperator {
    pub fn real(matrix: DMatrix<f64>, label: impl Into<String>) -> Self {
        DenseOperator {
            basis: None,
            matrix: DenseMatrix::Real(matrix),
            label: label.into(),
        }
    }

    pub fn complex(matrix: DMatrix<Complex64>, label: impl Into<String>) -> Self {
        DenseOperator {
            basis: None,
            matrix: DenseMatrix::Complex(matrix),
            label: label.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Real part of the action; exact for real symmetric matrices.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.matrix {
            DenseMatrix::Real(m) => dense_apply(m, x, y),
            DenseMatrix::Complex(m) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = (0..x.len()).map(|j| m[(i, j)].re * x[j]).sum();
                }
            }
        }
    }
}

/// Dense symmetric matrix-vector product (uses column access, which equals
/// row access for symmetric input).
pub(crate) fn dense_apply(m: &DMatrix<f64>, x: &[f64], y: &mut [f64]) {
    let n = m.nrows();
    let data = m.as_slice();
    let row = |i: usize| -> f64 {
        let col = &data[i * n..(i + 1) * n];
        let mut acc = [0.0f64; 4];
        let chunks = n / 4;
        for c in 0..chunks {
            for l in 0..4 {
                acc[l] += col[4 * c + l] * x[4 * c + l];
            }
        }
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for j in 4 * chunks..n {
            s += col[j] * x[j];
        }
        s
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = row(i);
        }
    }
}

pub(crate) fn check_dense_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::capacity("dense matrix dimension", n as u128, cap as u128));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
