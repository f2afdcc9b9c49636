use fqcorr::stats::{empirical_distribution, ks_distance, sieve_diagnostics};
use fqcorr::{AdditiveSpec, Domain, FieldSpec, IrreducibleTable, Poly};

#[test]
fn ks_successive_degrees_shrink() {
    let f = FieldSpec::new(2).unwrap();
    let table = IrreducibleTable::build(f, 8).unwrap();
    let a = AdditiveSpec::log_phi_ratio(f);
    let dists: Vec<_> = (8..=16)
        .step_by(2)
        .map(|n| {
            empirical_distribution(
                &[a.clone(), a.clone()],
                &[Poly::zero(f), Poly::one(f)],
                n,
                Domain::Monic,
                &table,
                4,
            )
            .unwrap()
        })
        .collect();
    let ks: Vec<f64> = dists
        .windows(2)
        .map(|w| ks_distance(&w[0], &w[1]))
        .collect();
    println!("{ks:?}");
    assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
}

/// With `h = 0` the only modulus of degree above `n/2` dividing `P` is `P`,
/// so the statistic is exactly `N_n (q^n - 1)`.
#[test]
fn theta_at_zero_shift_is_exact() {
    let f = FieldSpec::new(2).unwrap();
    let table = IrreducibleTable::build(f, 12).unwrap();
    for n in [6, 9, 12] {
        let d = sieve_diagnostics(n, &Poly::zero(f), 1.0, &table, 4).unwrap();
        let expected = table.count(n) as f64 * (2f64.powi(n as i32) - 1.0);
        assert_eq!(d.theta, expected);
    }
}

#[test]
fn h_over_n_squared_stays_positive() {
    let f = FieldSpec::new(2).unwrap();
    let table = IrreducibleTable::build(f, 14).unwrap();
    let d = sieve_diagnostics(14, &Poly::one(f), 1.0, &table, 4).unwrap();
    // Decreasing in n but bounded away from zero at this scale.
    assert!(d.h_over_n2.windows(2).skip(2).all(|w| w[1] < w[0]));
    assert!(d.h_over_n2.iter().all(|&r| r > 0.05), "{:?}", d.h_over_n2);
    assert!(d.divprod_ratio < 2.0);
}
