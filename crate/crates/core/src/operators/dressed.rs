//! Dense Weyl dressing: the unitary `exp(a*(f) − a(f))` and the normal-form
//! right-hand side of the dressed Hamiltonian.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_dense_cap, free_diagonal, mode_form_factors, DenseMatrix, DenseOperator, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::fock::SectorBasis;
use crate::lattice::{TWO_PI, Vec3};
use crate::renorm::gross_profile_p2;

/// Visits every creation link `s → t = s + e_p` as `(s, t, p, √n_p(t))`.
fn for_each_link(basis: &SectorBasis, mut f: impl FnMut(usize, usize, usize, f64)) {
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
            buf.clear();
            buf.extend_from_slice(&seq[..j]);
            buf.extend_from_slice(&seq[j + 1..]);
            if let Some(s) = basis.index_of_modes(&buf) {
                f(s, t, m as usize, (run as f64).sqrt());
            }
            j += run;
        }
    }
}

/// `a*(g) = Σ_p g_p a*_p` as a dense sector matrix.
pub fn creation_dense(basis: &SectorBasis, g: &[Complex64]) -> Result<DMatrix<Complex64>> {
    check_profile(basis, g.len())?;
    let n = basis.len();
    check_dense_cap(n, DEFAULT_DENSE_CAP)?;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for_each_link(basis, |s, t, p, r| m[(t, s)] += g[p] * r);
    Ok(m)
}

/// `a(g) = Σ_p conj(g_p) a_p`, the adjoint of [`creation_dense`].
pub fn annihilation_dense(basis: &SectorBasis, g: &[Complex64]) -> Result<DMatrix<Complex64>> {
    Ok(creation_dense(basis, g)?.adjoint())
}

fn check_profile(basis: &SectorBasis, len: usize) -> Result<()> {
    if len != basis.lattice().len() {
        return Err(Error::contract(format!(
            "profile has {len} coefficients, lattice has {} modes",
            basis.lattice().len()
        )));
    }
    Ok(())
}

/// `U = exp(a*(f) − a(f))` on the truncated sector.
pub fn weyl_unitary(basis: Arc<SectorBasis>, profile: &[Complex64]) -> Result<DenseOperator> {
    let c = creation_dense(&basis, profile)?;
    let gen = &c - c.adjoint();
    Ok(DenseOperator {
        basis: Some(basis),
        matrix: DenseMatrix::Complex(gen.exp()),
        label: "U".into(),
    })
}

/// Normal-form right-hand side of `U† H_BF^Λ U` with the Gross profile
/// built from `params`.
///
/// The impurity gradient `i∇_x` acts on a state with implicit impurity
/// momentum `ξ` as multiplication by `−ξ`.
pub fn dressed_rhs(basis: Arc<SectorBasis>, params: &crate::lattice::ModelParams) -> Result<DenseOperator> {
    params.validate_gross()?;
    let n = basis.len();
    check_dense_cap(n, DEFAULT_DENSE_CAP)?;
    let lat = basis.lattice().clone();
    let m = lat.len();

    let w = mode_form_factors(&basis, params);
    let f: Vec<f64> = (0..m).map(|i| gross_profile_p2(lat.p2(i), params)).collect();
    let mut h = DMatrix::<Complex64>::zeros(n, n);

    // −Δ_x + dΓ(ε) and the constant ⟨w, f⟩.
    let constant: f64 = w.iter().zip(&f).map(|(a, b)| a * b).sum();
    for (i, d) in free_diagonal(&basis, params.a_v).into_iter().enumerate() {
        h[(i, i)] += Complex64::new(d + constant, 0.0);
    }

    // Infrared remainder a*(w^κ) + a(w^κ).
    let w_kappa: Vec<Complex64> = (0..m)
        .map(|i| {
            let p = lat.p2(i).sqrt();
            if p <= params.kappa * (1.0 + 1e-12) {
                Complex64::new(w[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let a_w = creation_dense(&basis, &w_kappa)?;
    h += &a_w + a_w.adjoint();

    // Components of a*(i∇f): coefficients −p_α f̂(p).
    let xi: Vec<Vec3> = (0..n)
        .map(|s| basis.impurity_momentum(s).map(|c| TWO_PI * c as f64))
        .collect();
    for alpha in 0..3 {
        let g: Vec<Complex64> = (0..m)
            .map(|i| Complex64::new(-lat.momentum(i)[alpha] * f[i], 0.0))
            .collect();
        let c = creation_dense(&basis, &g)?;
        let cd = c.adjoint();
        h += &c * &c;
        h += &cd * &cd;
        h += (&c * &cd) * Complex64::new(2.0, 0.0);
        // i∇_x on the right: column s scaled by −ξ_α(s); on the left: row t.
        let mut right = c.clone();
        let mut left = cd.clone();
        for s in 0..n {
            let g_s = Complex64::new(-xi[s][alpha], 0.0);
            for t in 0..n {
                right[(t, s)] *= g_s;
                left[(s, t)] *= g_s;
            }
        }
        h -= (right + left) * Complex64::new(2.0, 0.0);
    }

    Ok(DenseOperator {
        basis: Some(basis),
        matrix: DenseMatrix::Complex(h),
        label: "dressed H_BF".into(),
    })
}

/// Largest entry of `U† H U − dressed_rhs` on the boson-number shells
/// `0..=keep`, paired with `max |H_st|` for scale.
///
/// Truncation only corrupts the top shells, so `keep` should stay below
/// `n_max − 1` for the identity to hold to rounding.
pub fn dressing_residual(basis: Arc<SectorBasis>, params: &crate::lattice::ModelParams, keep: usize) -> Result<(f64, f64)> {
    if keep > basis.n_max() {
        return Err(Error::contract(format!(
            "cannot keep {keep} shells of a basis capped at {} bosons",
            basis.n_max()
        )));
    }
    let lat = basis.lattice().clone();
    let h = super::hbf_operator(basis.clone(), params)?.to_dense()?;
    let f: Vec<Complex64> = (0..lat.len())
        .map(|i| Complex64::new(gross_profile_p2(lat.p2(i), params), 0.0))
        .collect();
    let u = weyl_unitary(basis.clone(), &f)?.matrix.to_complex();
    let lhs = u.adjoint() * h.matrix.to_complex() * &u;
    let rhs = dressed_rhs(basis.clone(), params)?.matrix.to_complex();
    let low = basis.shell(0).start..basis.shell(keep).end;
    let mut err = 0.0f64;
    for t in low.clone() {
        for s in low.clone() {
            err = err.max((lhs[(t, s)] - rhs[(t, s)]).norm());
        }
    }
    Ok((err, h.matrix.max_abs()))
}
