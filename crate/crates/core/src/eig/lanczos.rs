//! Thick-restart Lanczos with full reorthogonalization.
//!
//! A single-vector Krylov method sees only one direction per degenerate
//! eigenvalue. After the main run, the solver therefore repeats a short
//! search in the orthogonal complement of everything found so far, starting
//! from a fresh random vector, and keeps adding pairs while new ones appear
//! inside the wanted window. Cubic symmetry makes such clusters common.
//!
//! Callers solving a sequence of nearby problems can pass the previous
//! eigenvectors as warm starts.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{multiplicities, SpectrumReport};
use crate::error::{Error, Result};
use crate::operators::LinearOperator;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub k: usize,
    pub tol: f64,
    /// Budget of operator applications.
    pub max_iter: usize,
    pub seed: u64,
    /// Krylov basis size before a restart; `None` picks `max(2k + 20, 40)`.
    pub max_basis: Option<usize>,
    /// Warm-start vectors: the first seeds the main run, the rest seed the
    /// deflation passes in order.
    pub start: Vec<Vec<f64>>,
    /// Whether to finish with random-start deflation passes. Without them a
    /// degenerate copy not represented in `start` can be missed, so `false`
    /// is only for iterates that are verified some other way.
    pub confirm: bool,
}

impl LanczosOptions {
    pub fn new(k: usize, tol: f64, max_iter: usize, seed: u64) -> Self {
        LanczosOptions {
            k,
            tol,
            max_iter,
            seed,
            max_basis: None,
            start: Vec::new(),
            confirm: true,
        }
    }
}

/// Lowest `k` eigenpairs of a symmetric operator.
///
/// Failure to converge is reported through `converged = false`, never by
/// returning unverified values as converged.
pub fn lanczos_lowest(
    op: &dyn LinearOperator,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectrumReport> {
    lanczos_with(op, &LanczosOptions::new(k, tol, max_iter, seed))
}

pub fn lanczos_with(op: &dyn LinearOperator, opts: &LanczosOptions) -> Result<SpectrumReport> {
    let n = op.dim();
    if opts.k == 0 || opts.k > n {
        return Err(Error::contract(format!("requested {} eigenvalues of a {n}-dimensional operator", opts.k)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::contract("tolerance must be positive"));
    }
    if opts.start.iter().any(|v| v.len() != n) {
        return Err(Error::contract(format!("start vectors must have length {n}")));
    }
    let mut state = Run {
        op,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        budget: opts.max_iter,
        used: 0,
        norm_est: 0.0,
        tol: opts.tol,
        max_basis: opts.max_basis,
    };

    let mut seeds = opts.start.iter();
    // A warm start converges one pair per seed; the others come from the
    // seeded deflation passes.
    let first = if opts.start.is_empty() { opts.k } else { 1 };
    let (mut vals, mut vecs, mut ok) = state.search(&[], first, seeds.next());
    // Deflation passes for missed copies inside degenerate clusters: seeded
    // ones first, then random ones if confirmation is wanted.
    let mut seeded = true;
    while ok && vecs.len() < n {
        let seed = if seeded { seeds.next() } else { None };
        if seed.is_none() {
            if !opts.confirm && vecs.len() >= opts.k {
                break;
            }
            seeded = false;
        }
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        // Until k pairs exist every new pair is wanted.
        let top = if sorted.len() < opts.k { f64::INFINITY } else { sorted[opts.k - 1] };
        let width = 1e3 * opts.tol * (top.abs() + state.norm_est);
        let (v2, x2, ok2) = state.search(&vecs, 1, seed);
        ok = ok2;
        match v2.first() {
            Some(&theta) if ok2 && theta <= top + width => {
                vals.push(theta);
                vecs.push(x2.into_iter().next().unwrap());
            }
            // A seed that leads nowhere new is not a proof of completeness.
            _ if seed.is_some() => ok = true,
            _ => break,
        }
    }

    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    order.truncate(opts.k);
    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order.iter().map(|&i| vecs[i].clone()).collect();

    // Independent residual check.
    let mut y = vec![0.0; n];
    let mut residual_norms = Vec::with_capacity(eigenvalues.len());
    for (lam, v) in eigenvalues.iter().zip(&eigenvectors) {
        op.apply(v, &mut y);
        state.used += 1;
        let r: f64 = y.iter().zip(v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
        residual_norms.push(r);
    }
    let converged = ok
        && eigenvalues.len() == opts.k
        && eigenvalues
            .iter()
            .zip(&residual_norms)
            .all(|(l, r)| *r <= opts.tol * (l.abs() + state.norm_est));
    Ok(SpectrumReport {
        multiplicities: multiplicities(&eigenvalues, 1e3 * opts.tol * state.norm_est.max(1.0)),
        eigenvalues,
        residual_norms,
        iterations: state.used,
        converged,
        tolerance: opts.tol,
        method: "thick-restart Lanczos, full reorthogonalization".into(),
        basis_meta: None,
        eigenvectors,
    })
}

struct Run<'a> {
    op: &'a dyn LinearOperator,
    rng: ChaCha8Rng,
    budget: usize,
    used: usize,
    norm_est: f64,
    tol: f64,
    max_basis: Option<usize>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) -> Vec<f64> {
    let mut h = vec![0.0; against.len()];
    for _ in 0..2 {
        for (hi, v) in h.iter_mut().zip(against) {
            let c = dot(v, w);
            *hi += c;
            axpy(-c, v, w);
        }
    }
    h
}

impl Run<'_> {
    fn random_unit(&mut self, locked: &[Vec<f64>], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
        let n = self.op.dim();
        for _ in 0..5 {
            let mut v: Vec<f64> = (0..n).map(|_| self.rng.random_range(-1.0..1.0)).collect();
            orthogonalize(&mut v, locked);
            orthogonalize(&mut v, basis);
            let nv = dot(&v, &v).sqrt();
            if nv > 1e-8 * (n as f64).sqrt() {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    }

    /// Lowest `nev` eigenpairs of the operator compressed to the orthogonal
    /// complement of `locked`.
    fn search(&mut self, locked: &[Vec<f64>], nev: usize, seed: Option<&Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>, bool) {
        let n = self.op.dim();
        let avail = n - locked.len();
        let nev = nev.min(avail);
        if nev == 0 {
            return (Vec::new(), Vec::new(), true);
        }
        let m = self.max_basis.unwrap_or((2 * nev + 20).max(40)).max(nev + 2).min(avail);
        let seeded = seed.and_then(|v| {
            let mut v = v.clone();
            orthogonalize(&mut v, locked);
            let nv = dot(&v, &v).sqrt();
            (nv > 1e-8).then(|| v.into_iter().map(|x| x / nv).collect::<Vec<f64>>())
        });
        let Some(start) = seeded.or_else(|| self.random_unit(locked, &[])) else {
            return (Vec::new(), Vec::new(), true);
        };
        let mut basis: Vec<Vec<f64>> = vec![start];
        let mut t = DMatrix::<f64>::zeros(m, m);
        let mut w = vec![0.0; n];
        loop {
            // Extend the basis, one new column of T per operator apply.
            let mut residual: Vec<f64>;
            loop {
                let j = basis.len() - 1;
                self.op.apply(&basis[j], &mut w);
                self.used += 1;
                self.budget = self.budget.saturating_sub(1);
                orthogonalize(&mut w, locked);
                let h = orthogonalize(&mut w, &basis);
                // Rounding in the basis pass leaks locked directions back in;
                // left alone they grow through restarts toward the lowest
                // locked eigenvalue.
                orthogonalize(&mut w, locked);
                for (i, &hi) in h.iter().enumerate() {
                    t[(i, j)] = hi;
                    t[(j, i)] = hi;
                }
                let beta = dot(&w, &w).sqrt();
                self.norm_est = self.norm_est.max(h[j].abs()).max(beta);
                if basis.len() == m || self.budget == 0 {
                    residual = w.clone();
                    break;
                }
                if beta <= 1e-12 * self.norm_est.max(f64::MIN_POSITIVE) {
                    // Invariant subspace; continue with a fresh direction.
                    match self.random_unit(locked, &basis) {
                        Some(v) => basis.push(v),
                        None => {
                            residual = vec![0.0; n];
                            break;
                        }
                    }
                } else {
                    basis.push(w.iter().map(|x| x / beta).collect());
                }
            }

            let s = basis.len();
            let eig = SymmetricEigen::new(t.view((0, 0), (s, s)).into_owned());
            let mut order: Vec<usize> = (0..s).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            self.norm_est = self.norm_est.max(theta[0].abs()).max(theta[s - 1].abs());
            let rnorm = dot(&residual, &residual).sqrt();
            let want = nev.min(s);
            let res = |i: usize| rnorm * eig.eigenvectors[(s - 1, order[i])].abs();
            let converged = (0..want).all(|i| res(i) <= self.tol * (theta[i].abs() + self.norm_est));
            let exhausted = s == avail && rnorm <= 1e-10 * self.norm_est.max(f64::MIN_POSITIVE);

            if converged || exhausted || self.budget == 0 {
                let vecs = (0..want).map(|i| self.ritz(&basis, &eig.eigenvectors, order[i])).collect();
                return (theta[..want].to_vec(), vecs, converged || exhausted);
            }

            // Thick restart: keep the lowest Ritz vectors and the residual.
            let keep = (nev + (s - nev) / 2).min(s - 1).max(nev.min(s - 1));
            let mut new_basis: Vec<Vec<f64>> = (0..keep).map(|i| self.ritz(&basis, &eig.eigenvectors, order[i])).collect();
            t.fill(0.0);
            for (i, &th) in theta.iter().take(keep).enumerate() {
                t[(i, i)] = th;
            }
            if rnorm > 0.0 {
                residual.iter_mut().for_each(|x| *x /= rnorm);
                orthogonalize(&mut residual, locked);
                orthogonalize(&mut residual, &new_basis);
                let nr = dot(&residual, &residual).sqrt();
                residual.iter_mut().for_each(|x| *x /= nr);
                new_basis.push(residual);
            } else if let Some(v) = self.random_unit(locked, &new_basis) {
                new_basis.push(v);
            }
            basis = new_basis;
        }
    }

    fn ritz(&self, basis: &[Vec<f64>], s: &DMatrix<f64>, col: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.op.dim()];
        for (l, v) in basis.iter().enumerate() {
            axpy(s[(l, col)], v, &mut x);
        }
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|e| *e /= nx);
        x
    }
}
