//! Small-instance cross-check of the sector reduction.
//!
//! With the impurity confined to a finite momentum set, the full
//! Hamiltonian on `impurity ⊗ Fock` splits into total-momentum blocks.
//! [`tensor_product_spectrum`] assembles the unsplit matrix directly from
//! occupation vectors, with no reference to [`SectorBasis`], while
//! [`sector_union_spectrum`] goes through the restricted sector bases and
//! [`hbf_operator`]. The two must agree.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_dense_cap, hbf_operator, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::fock::SectorBasis;
use crate::lattice::{dispersion_p2, form_factor_p2, iadd, inorm2, isub, IVec3, ModelParams, MomentumLattice, TWO_PI};

fn check_impurities(impurities: &[IVec3]) -> Result<()> {
    let distinct: BTreeSet<IVec3> = impurities.iter().copied().collect();
    if distinct.len() != impurities.len() || impurities.is_empty() {
        return Err(Error::contract("impurity momenta must be non-empty and distinct"));
    }
    Ok(())
}

/// Every occupation vector on `m` modes with at most `n_max` bosons.
fn occupations(m: usize, n_max: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; m]];
    let mut frontier = out.clone();
    for _ in 0..n_max {
        let mut next = BTreeSet::new();
        for occ in &frontier {
            for k in 0..m {
                let mut o = occ.clone();
                o[k] += 1;
                next.insert(o);
            }
        }
        frontier = next.into_iter().collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

/// Ascending spectrum of the impurity–phonon Hamiltonian on
/// `span{impurities} ⊗ Fock_{≤ n_max}(lattice)`. Emitting a phonon `k`
/// takes the impurity from `ξ` to `ξ − k`; transitions leaving the
/// impurity set are dropped.
pub fn tensor_product_spectrum(lattice: &MomentumLattice, impurities: &[IVec3], params: &ModelParams) -> Result<Vec<f64>> {
    params.validate()?;
    check_impurities(impurities)?;
    let m = lattice.len();
    let occ = occupations(m, params.n_max);
    let dim = impurities.len() * occ.len();
    check_dense_cap(dim, DEFAULT_DENSE_CAP)?;
    let occ_index: HashMap<&[u32], usize> = occ.iter().enumerate().map(|(i, o)| (o.as_slice(), i)).collect();
    let imp_index: HashMap<IVec3, usize> = impurities.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let state = |xi: usize, o: usize| xi * occ.len() + o;
    let eps: Vec<f64> = (0..m).map(|k| dispersion_p2(lattice.p2(k), params.a_v)).collect();
    let w: Vec<f64> = (0..m)
        .map(|k| form_factor_p2(lattice.p2(k), params.a_w, params.a_v, params.lambda))
        .collect();

    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (xi, &x) in impurities.iter().enumerate() {
        for (oi, o) in occ.iter().enumerate() {
            let s = state(xi, oi);
            let phonons: f64 = o.iter().zip(&eps).map(|(&n, e)| n as f64 * e).sum();
            h[(s, s)] = TWO_PI * TWO_PI * inorm2(x) as f64 + phonons;
            if o.iter().sum::<u32>() as usize == params.n_max {
                continue;
            }
            for k in 0..m {
                let Some(&xj) = imp_index.get(&isub(x, lattice.point(k))) else {
                    continue;
                };
                let mut up = o.clone();
                up[k] += 1;
                let t = state(xj, occ_index[up.as_slice()]);
                let amp = w[k] * (up[k] as f64).sqrt();
                h[(t, s)] += amp;
                h[(s, t)] += amp;
            }
        }
    }
    let mut vals: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Ascending union of the spectra of every total-momentum sector reachable
/// from the impurity set, each sector restricted to states whose implicit
/// impurity momentum lies in the set.
pub fn sector_union_spectrum(lattice: Arc<MomentumLattice>, impurities: &[IVec3], params: &ModelParams) -> Result<Vec<f64>> {
    check_impurities(impurities)?;
    let allowed: BTreeSet<IVec3> = impurities.iter().copied().collect();
    // Sectors are total momenta ξ + Σk; enumerate them from the boson side.
    let mut sectors = BTreeSet::new();
    for occ in occupations(lattice.len(), params.n_max) {
        let k = occ
            .iter()
            .enumerate()
            .fold([0, 0, 0], |acc, (i, &n)| iadd(acc, lattice.point(i).map(|c| c * n as i32)));
        for &x in impurities {
            sectors.insert(iadd(x, k));
        }
    }
    let mut vals = Vec::new();
    for p in sectors {
        let basis = SectorBasis::enumerate_restricted(lattice.clone(), params.n_max, p, &|xi| allowed.contains(&xi))?;
        if basis.is_empty() {
            continue;
        }
        let h = hbf_operator(Arc::new(basis), &params.with_total_momentum(p))?.to_dense()?;
        let super::DenseMatrix::Real(m) = h.matrix else {
            unreachable!("the sector Hamiltonian is real")
        };
        vals.extend(SymmetricEigen::new(m).eigenvalues.iter().copied());
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}
