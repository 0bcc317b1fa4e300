use super::*;
use crate::eig::dense_eigs;
use crate::lattice::{cubic_group, dispersion, MomentumLattice};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lattice(radius_2pi: f64) -> Arc<MomentumLattice> {
    Arc::new(MomentumLattice::build(radius_2pi * TWO_PI).unwrap())
}

fn sector(lat: &Arc<MomentumLattice>, n_max: usize, p: [i32; 3]) -> Arc<SectorBasis> {
    Arc::new(SectorBasis::enumerate(lat.clone(), n_max, p).unwrap())
}

fn lowest(op: &OperatorHandle) -> f64 {
    dense_eigs(&op.to_dense().unwrap(), 1).unwrap().eigenvalues[0]
}

#[test]
fn six_mode_single_boson_closed_form() {
    let lat = lattice(1.0);
    assert_eq!(lat.len(), 6);
    let p = ModelParams::new(1.0, 0.8, TWO_PI, 0.0, 1);
    let h = hbf_operator(sector(&lat, 1, [0, 0, 0]), &p).unwrap();
    let gap = TWO_PI * TWO_PI + dispersion([TWO_PI, 0.0, 0.0], 1.0);
    let w = form_factor_p2(TWO_PI * TWO_PI, 0.8, 1.0, TWO_PI);
    let exact = 0.5 * (gap - (gap * gap + 24.0 * w * w).sqrt());
    assert!((lowest(&h) - exact).abs() < 1e-12 * exact.abs());
}

#[test]
fn matrix_free_action_matches_dense() {
    let lat = lattice(1.5);
    let p = ModelParams::new(0.7, 1.3, 1.5 * TWO_PI, 0.0, 3).with_total_momentum([1, 0, 0]);
    let h = hbf_operator(sector(&lat, 3, [1, 0, 0]), &p).unwrap();
    let dense = h.to_dense().unwrap();
    let DenseMatrix::Real(m) = &dense.matrix else { panic!("real assembly expected") };
    assert_eq!(dense.matrix.hermiticity_error(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = h.dim();
    for _ in 0..20 {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut y = vec![0.0; n];
        h.apply(&x, &mut y);
        let z = m * DVector::from_column_slice(&x);
        let scale = z.amax().max(1.0);
        for i in 0..n {
            assert!((y[i] - z[i]).abs() <= 1e-12 * scale);
        }
        let mut y2 = vec![0.0; n];
        dense.apply(&x, &mut y2);
        for i in 0..n {
            assert!((y2[i] - z[i]).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn wrong_sector_or_cutoff_is_rejected() {
    let lat = lattice(1.0);
    let basis = sector(&lat, 2, [0, 0, 0]);
    let p = ModelParams::new(1.0, 1.0, 2.0 * TWO_PI, 0.0, 2);
    assert!(matches!(hbf_operator(basis.clone(), &p), Err(Error::Contract(_))));
    let p = ModelParams::new(1.0, 1.0, TWO_PI, 0.0, 2).with_total_momentum([0, 1, 0]);
    assert!(matches!(hbf_operator(basis, &p), Err(Error::Contract(_))));
}

#[test]
fn dgamma_counts_occupations() {
    let lat = lattice(1.0);
    let basis = sector(&lat, 3, [0, 0, 0]);
    let number = dgamma_operator(basis.clone(), &|_| 1.0);
    for i in 0..basis.len() {
        assert_eq!(number.diag()[i], basis.boson_count(i) as f64);
    }
    let x = vec![1.0; basis.len()];
    let mut y = vec![0.0; basis.len()];
    number.apply(&x, &mut y);
    assert_eq!(y, number.diag());
}

#[test]
fn weyl_of_zero_profile_is_identity() {
    let lat = lattice(1.0);
    let basis = sector(&lat, 2, [0, 0, 0]);
    let u = weyl_unitary(basis.clone(), &vec![Complex64::new(0.0, 0.0); 6]).unwrap();
    let c = u.matrix.to_complex();
    let id = DMatrix::<Complex64>::identity(basis.len(), basis.len());
    assert_eq!(c, id);
}

#[test]
fn weyl_is_unitary_and_shifts_annihilators() {
    let lat = lattice(1.0);
    let n_max = 6;
    let basis = sector(&lat, n_max, [0, 0, 0]);
    let f: Vec<Complex64> = (0..6).map(|i| Complex64::new(0.004 * (i as f64 + 1.0), -0.002 * i as f64)).collect();
    let u = weyl_unitary(basis.clone(), &f).unwrap();
    assert!(u.matrix.unitarity_error() < 1e-13);
    let u = u.matrix.to_complex();
    // U† a_p U = a_p + f_p on the low shells.
    let low = basis.shell(0).start..basis.shell(2).end;
    for p in 0..6 {
        let mut e = vec![Complex64::new(0.0, 0.0); 6];
        e[p] = Complex64::new(1.0, 0.0);
        let a = annihilation_dense(&basis, &e).unwrap();
        let lhs = u.adjoint() * &a * &u;
        for t in low.clone() {
            for s in low.clone() {
                let shift = if s == t { f[p] } else { Complex64::new(0.0, 0.0) };
                let err = (lhs[(t, s)] - a[(t, s)] - shift).norm();
                assert!(err < 1e-10, "p={p} ({t},{s}): {err}");
            }
        }
    }
}

#[test]
fn dressed_rhs_reduces_to_h_without_dressing() {
    let lat = lattice(1.0);
    let basis = sector(&lat, 3, [0, 0, 0]);
    for p in [
        ModelParams::new(1.0, 0.0, TWO_PI, 0.0, 3),
        ModelParams::new(1.0, 0.6, TWO_PI, TWO_PI, 3),
    ] {
        let h = hbf_operator(basis.clone(), &p).unwrap().to_dense().unwrap().matrix.to_complex();
        let rhs = dressed_rhs(basis.clone(), &p).unwrap().matrix.to_complex();
        let err = (&h - &rhs).iter().fold(0.0f64, |m, x| m.max(x.norm()));
        assert!(err < 1e-12, "{err}");
    }
}

/// `U† H U − rhs` on states with at most `keep` bosons.
fn dressing_residual(lat: &Arc<MomentumLattice>, n_max: usize, p_total: [i32; 3], p: &ModelParams, keep: usize) -> (f64, f64) {
    super::dressing_residual(sector(lat, n_max, p_total), p, keep).unwrap()
}

#[test]
fn dressing_identity_on_low_shells() {
    let lat = lattice(1.0);
    let p = ModelParams::new(1.0, 0.02, TWO_PI, 0.0, 4);
    let (err, scale) = dressing_residual(&lat, 4, [0, 0, 0], &p, 2);
    assert!(err <= 1e-8 * scale, "{err} vs {scale}");
    let p = p.with_total_momentum([1, 0, 0]);
    let (err, scale) = dressing_residual(&lat, 4, [1, 0, 0], &p, 2);
    assert!(err <= 1e-8 * scale, "{err} vs {scale}");
}

#[test]
fn spectrum_is_cubic_covariant() {
    let lat = lattice(1.5);
    let base = [1, 1, 0];
    let p = ModelParams::new(0.5, 0.9, 1.5 * TWO_PI, 0.0, 2);
    let spec = |q: [i32; 3]| {
        let op = hbf_operator(sector(&lat, 2, q), &p.with_total_momentum(q)).unwrap();
        dense_eigs(&op.to_dense().unwrap(), 5).unwrap().eigenvalues
    };
    let reference = spec(base);
    for g in cubic_group().iter().step_by(7) {
        let other = spec(g.apply(base));
        for (a, b) in reference.iter().zip(&other) {
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn ground_state_decreases_with_boson_cap(a_w in 0.1f64..2.0, a_v in 0.0f64..2.0) {
        let lat = lattice(1.0);
        let mut last = f64::INFINITY;
        for n_max in 1..=4 {
            let p = ModelParams::new(a_v, a_w, TWO_PI, 0.0, n_max);
            let e0 = lowest(&hbf_operator(sector(&lat, n_max, [0, 0, 0]), &p).unwrap());
            prop_assert!(e0 <= last + 1e-12 * last.abs().min(1e12));
            last = e0;
        }
    }
}
