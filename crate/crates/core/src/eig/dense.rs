use nalgebra::SymmetricEigen;

use super::{multiplicities, SpectrumReport};
use crate::error::{Error, Result};
use crate::operators::{check_dense_cap, DenseMatrix, DenseOperator, DEFAULT_DENSE_CAP};

/// Full Hermitian eigendecomposition, lowest `k` pairs.
///
/// Real matrices keep their eigenvectors; for complex input only the
/// eigenvalues are reported.
pub fn dense_eigs(op: &DenseOperator, k: usize) -> Result<SpectrumReport> {
    let n = op.dim();
    check_dense_cap(n, DEFAULT_DENSE_CAP.max(12_000))?;
    if k == 0 || k > n {
        return Err(Error::contract(format!("requested {k} eigenvalues of a {n}-dimensional matrix")));
    }
    let (mut pairs, vectors): (Vec<(f64, usize)>, Option<nalgebra::DMatrix<f64>>) = match &op.matrix {
        DenseMatrix::Real(m) => {
            let eig = SymmetricEigen::new(m.clone());
            let p = eig.eigenvalues.iter().copied().enumerate().map(|(i, v)| (v, i)).collect();
            (p, Some(eig.eigenvectors))
        }
        DenseMatrix::Complex(m) => {
            let eig = SymmetricEigen::new(m.clone());
            (eig.eigenvalues.iter().copied().enumerate().map(|(i, v)| (v, i)).collect(), None)
        }
    };
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(k);
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = match &vectors {
        Some(v) => pairs.iter().map(|p| v.column(p.1).iter().copied().collect()).collect(),
        None => Vec::new(),
    };
    let scale = op.matrix.max_abs().max(f64::MIN_POSITIVE);
    Ok(SpectrumReport {
        multiplicities: multiplicities(&eigenvalues, 1e-10 * scale),
        residual_norms: vec![0.0; eigenvalues.len()],
        eigenvalues,
        iterations: 1,
        converged: true,
        tolerance: 0.0,
        method: "dense symmetric eigendecomposition".into(),
        basis_meta: None,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    #[test]
    fn closed_forms() {
        let one = DenseOperator::real(DMatrix::from_element(1, 1, 2.5), "c");
        assert_eq!(dense_eigs(&one, 1).unwrap().eigenvalues, vec![2.5]);
        let (t, d) = (0.7, 3.0);
        let m = DenseOperator::real(DMatrix::from_row_slice(2, 2, &[0.0, t, t, d]), "2x2");
        let r = dense_eigs(&m, 2).unwrap();
        let root = (d * d + 4.0 * t * t).sqrt();
        assert!((r.eigenvalues[0] - 0.5 * (d - root)).abs() < 1e-14);
        assert!((r.eigenvalues[1] - 0.5 * (d + root)).abs() < 1e-14);
        assert!(dense_eigs(&m, 3).is_err());
    }

    #[test]
    fn trace_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::<f64>::from_fn(50, 50, |_, _| rng.random_range(-1.0..1.0));
        let s = (&a + a.transpose()) * 0.5;
        let r = dense_eigs(&DenseOperator::real(s.clone(), "rand"), 50).unwrap();
        let sum: f64 = r.eigenvalues.iter().sum();
        assert!((sum - s.trace()).abs() <= 1e-10 * s.trace().abs().max(1.0));
    }
}
