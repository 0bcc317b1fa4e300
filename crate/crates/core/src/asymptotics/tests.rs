use super::*;
use proptest::prelude::*;

fn params(a_v: f64, a_w: f64) -> ModelParams {
    ModelParams::new(a_v, a_w, f64::INFINITY, 2.0 * TWO_PI, 1)
}

#[test]
fn log_coefficient_values() {
    assert_eq!(log_coefficient(0.0), 0.0);
    // 32π(2π/3 − √3) evaluated in 50-digit arithmetic.
    assert!((log_coefficient(1.0) + 36.426_821_590_08).abs() < 1e-10);
    assert!((log_coefficient(2.0) / log_coefficient(1.0) - 16.0).abs() < 1e-14);
}

#[test]
fn mass_coefficient_limits() {
    assert_eq!(mass_coefficient(1.0, 0.0).unwrap(), 0.0);
    for a in [0.3, 1.0, 1.7] {
        let c = mass_coefficient(0.5, a).unwrap();
        assert!((c - log_coefficient(a)).abs() <= 1e-12 * c.abs());
    }
    let half = mass_coefficient(0.5, 1.0).unwrap().abs();
    let big = mass_coefficient(1e3, 1.0).unwrap().abs();
    let huge = mass_coefficient(1e6, 1.0).unwrap().abs();
    assert!(huge < big && big < half);
    assert!(huge <= 1e-5 * half);
    assert!(mass_coefficient(0.0, 1.0).is_err());
    assert!(mass_coefficient(-2.0, 1.0).is_err());
}

#[test]
fn mass_bracket_branches_meet() {
    for x in [0.099_999_9f64, 0.1] {
        let series = {
            let y = x * x;
            // Five leading terms of the series directly.
            2.0 / 3.0 * y + y * y / 5.0 + 3.0 * y.powi(3) / 28.0 + 5.0 * y.powi(4) / 72.0 + 35.0 * y.powi(5) / 704.0
        };
        assert!((mass_bracket(x) - series).abs() < 1e-9 * series);
    }
    let x: f64 = 0.3;
    assert!((mass_bracket(x) - (x.asin() / x - (1.0 - x * x).sqrt())).abs() < 1e-15);
}

#[test]
fn lhy_summand_taylor_oracle() {
    let a = 0.7;
    for n2 in [1e4, 1e6, 1e8] {
        let p2 = TWO_PI * TWO_PI * n2;
        let lead = 2.0 * (4.0 * PI * a).powi(3) / (p2 * p2);
        let s = lhy_summand(a, p2);
        assert!(s > 0.0);
        assert!((s / lead - 1.0).abs() < 40.0 * a / p2, "{s} vs {lead}");
    }
    // Branch switch is continuous.
    let p2 = 16.0 * PI * a / 0.5;
    let direct = 0.5 * p2 * (1.5f64.sqrt() - 1.0 - 0.25 + 0.25 / 8.0);
    assert!((lhy_summand(a, p2 * (1.0 + 1e-12)) - direct).abs() < 1e-10 * direct);
}

#[test]
fn lhy_sum_cases() {
    assert_eq!(lhy_sum(0.0, 20.0 * TWO_PI).unwrap(), 0.0);
    let s = |c: f64| lhy_sum(0.5, c * TWO_PI).unwrap();
    let d1 = s(20.0) - s(10.0);
    let d2 = s(40.0) - s(20.0);
    assert!(d2.abs() < d1.abs());
    assert!(lhy_sum(-1.0, 10.0).is_err());
    let inf = lhy_sum_infinite(0.5).unwrap();
    assert!(inf.error_estimate < 1e-3 * inf.tail.abs().max(1e-12) + 1e-9);
    assert!((inf.value - s(64.0) - inf.tail).abs() < 1e-12 * inf.value.abs());
}

#[test]
fn lhy_quadratic_at_small_coupling() {
    let c = 8.0 * TWO_PI;
    let r = lhy_sum(2e-4, c).unwrap() / lhy_sum(1e-4, c).unwrap();
    // Leading summand ∝ a³ at large p; near the origin it is ∝ a² (the (4πa)²/p² piece
    // survives the expansion in p²/a). A finite cutoff sits between.
    assert!(r > 3.9 && r < 8.1, "{r}");
}

#[test]
fn shells_match_lattice() {
    let c = 7.3 * TWO_PI;
    let lat = MomentumLattice::build(c).unwrap();
    let total: u64 = shells(c).iter().map(|s| s.1).sum();
    assert_eq!(total as usize, lat.len());
}

#[test]
fn scalar_e_u_cases() {
    let zero = scalar_e_u(1e4, &params(0.0, 0.0), &ScatteringInputs::default(), DEFAULT_ALPHA).unwrap();
    assert_eq!(zero.total, 0.0);
    let p = params(0.4, 0.6);
    let exact = scalar_e_u(1e4, &p, &ScatteringInputs::exact(&p), DEFAULT_ALPHA).unwrap();
    assert_eq!(exact.boson_length, 0.0);
    assert_eq!(exact.impurity_length, 0.0);
    assert!(scalar_e_u(1e4, &p, &ScatteringInputs::default(), DEFAULT_ALPHA).is_err());
    // With alpha = 1 the split reaches the lattice and both sums contribute.
    let wide = scalar_e_u(1e3, &p, &ScatteringInputs::exact(&p), 0.5).unwrap();
    assert!(wide.boson_sum > 0.0 && wide.impurity_sum != 0.0);
    let totals: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&n| scalar_e_u(n, &p, &ScatteringInputs::exact(&p), DEFAULT_ALPHA).unwrap().total)
        .collect();
    assert!(totals.iter().all(|t| t.abs() < 10.0));
}

#[test]
fn e_n_basic_properties() {
    let p = params(1.0, 0.0);
    assert_eq!(e_n_sum(1e4, &p, VnModel::CoulombTail, 100.0).unwrap(), 0.0);
    let p = params(1.0, 1.0);
    let cut = 6.0 * TWO_PI;
    let reduced = e_n_sum(1e4, &p, VnModel::CoulombTail, cut).unwrap();
    let plain = e_n_sum_with(
        1e4,
        &p,
        VnModel::CoulombTail,
        cut,
        &EnOptions {
            reduce: false,
            ..EnOptions::default()
        },
    )
    .unwrap();
    assert!(reduced < 0.0);
    assert!((reduced - plain).abs() <= 1e-12 * plain.abs());
    let bigger = e_n_sum(1e4, &p, VnModel::CoulombTail, 8.0 * TWO_PI).unwrap();
    assert!(bigger < reduced);
    let tight = EnOptions {
        budget: 10,
        ..EnOptions::default()
    };
    assert!(matches!(
        e_n_sum_with(1e4, &p, VnModel::CoulombTail, cut, &tight),
        Err(Error::Capacity { .. })
    ));
}

#[test]
fn e_n_integral_log_slope() {
    // The continuum integral grows like −16π(2π/3 − √3) log K per unit log K.
    let k = [400.0, 800.0, 1600.0];
    let v: Vec<f64> = k.iter().map(|&c| e_n_integral(1.0, c).unwrap()).collect();
    let slope = (v[2] - v[1]) / 2f64.ln();
    let expected = -32.0 * PI * log_constant();
    assert!((slope / expected - 1.0).abs() < 0.02, "{slope} vs {expected}");
    assert!(((v[2] - v[1]) - (v[1] - v[0])).abs() < 0.02 * (v[1] - v[0]).abs());
}

#[test]
fn dilute_units_cases() {
    let d = dilute_units(1e-4, 1.0, 0.0).unwrap();
    assert_eq!(d.correction_w, 0.0);
    assert_eq!(d.correction_log, 0.0);
    assert!((d.n_equiv - 100.0).abs() < 1e-10);
    assert!(dilute_units(2.0, 1.0, 0.1).is_err());
    assert_eq!(d.to_map().len(), 7);
}

#[test]
fn dilute_round_trip() {
    let (rho, a, a_w_phys) = (3e-5, 1.3, 0.4);
    let d = dilute_units(rho, a, a_w_phys).unwrap();
    let n = d.n_equiv;
    let l = d.gp_length;
    let a_v = a * n / l;
    let a_w = a_w_phys * n.sqrt() / l;
    assert!((a_v - 1.0).abs() < 1e-12);
    let scale = l.powi(5);
    let rel = |x: f64, y: f64| ((x - y) / y).abs();
    assert!(rel(4.0 * PI * a_v * n / scale, d.leading) < 1e-13);
    assert!(rel(8.0 * PI * a_w * n.sqrt() / scale, d.correction_w) < 1e-13);
    assert!(rel(log_coefficient(a_w) * n.ln() / scale, d.correction_log) < 1e-13);
}

#[test]
fn expansion_breakdown_sums() {
    let p = params(1.0, 0.0);
    let b = energy_expansion(1e3, &p, &ScatteringInputs::exact(&p), &ExpansionOptions::default()).unwrap();
    assert_eq!(b.term("mean_field_W"), 0.0);
    assert_eq!(b.term("log_term"), 0.0);
    assert!((b.term("mean_field_V") - 4.0 * PI * 999.0).abs() < 1e-9);
    let sum: f64 = b.terms.values().sum();
    assert!((b.total - sum).abs() <= 1e-12 * sum.abs());
    assert!(b.method_notes.contains("E_N"));
    assert_eq!(b.csv_row().split(',').count(), ExpansionBreakdown::CSV_HEADER.split(',').count());
}

#[test]
fn expansion_increases_with_small_impurity_coupling() {
    let mut last = f64::NEG_INFINITY;
    for a_w in [0.0, 0.01, 0.02, 0.03] {
        let p = params(1.0, a_w);
        let b = energy_expansion(1e3, &p, &ScatteringInputs::exact(&p), &ExpansionOptions::default()).unwrap();
        assert!(b.total > last);
        last = b.total;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn log_coefficient_is_quartic(a in 0.0f64..3.0, t in 0.1f64..4.0) {
        let lhs = log_coefficient(t * a);
        let rhs = t.powi(4) * log_coefficient(a);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
    }

    #[test]
    fn mass_coefficient_shrinks_with_mass(m in 0.5f64..1e4, f in 1.01f64..10.0) {
        let a = mass_coefficient(m, 1.0).unwrap().abs();
        let b = mass_coefficient(m * f, 1.0).unwrap().abs();
        prop_assert!(b < a);
    }
}
