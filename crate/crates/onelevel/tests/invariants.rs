//! Cross-module properties that tie the coefficient sources to the
//! arithmetic tables at ranges the per-module unit tests do not reach.

use std::sync::Arc;

use onelevel::arith::build_tables;
use onelevel::coeffs::{
    delta_empirical, provider_delta, provider_delta_from_lambda, provider_gl1,
    provider_sym2_delta, provider_sym2_delta_from_lambda, tau_table, CoefficientProvider,
    LambdaTable,
};

#[test]
fn degree_one_averages_approach_their_limit_monotonically() {
    let tables = build_tables(1_000_001).unwrap();
    let gl1 = provider_gl1();
    let deviations: Vec<f64> = [1e4, 1e5, 1e6]
        .iter()
        .map(|&x| (delta_empirical(&gl1, x, &tables).unwrap() - 1.0).abs())
        .collect();
    assert!(
        deviations[0] >= deviations[1] && deviations[1] >= deviations[2],
        "deviations from +1 not nonincreasing: {deviations:?}"
    );
}

#[test]
fn every_provider_respects_the_degree_bound_at_scale() {
    let tables = build_tables(100_001).unwrap();
    let tau = Arc::new(tau_table(100_000).unwrap());
    let lambda = Arc::new(LambdaTable::build(100_001, &tables).unwrap());
    let providers: [Box<dyn CoefficientProvider>; 5] = [
        Box::new(provider_gl1()),
        Box::new(provider_delta(Arc::clone(&tau))),
        Box::new(provider_sym2_delta(Arc::clone(&tau))),
        Box::new(provider_delta_from_lambda(Arc::clone(&lambda))),
        Box::new(provider_sym2_delta_from_lambda(Arc::clone(&lambda))),
    ];
    for provider in &providers {
        let bound = f64::from(provider.degree()) + 1e-9;
        for &p in tables.primes() {
            for k in 1..=10 {
                let a = provider.coefficient(p, k).unwrap();
                assert!(
                    a.abs() <= bound,
                    "{} a({p}, {k}) = {a}",
                    provider.label()
                );
            }
        }
    }
}
