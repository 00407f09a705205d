//! Randomized invariants.

use proptest::prelude::*;
use serde_json::json;

use pdspectra::arith::{g_eval, poly_root_count, recipe_c, GFunctionSpec};
use pdspectra::experiment::{run, ExperimentConfig};
use pdspectra::factor::{factorize, PrimeTable};
use pdspectra::pdprocess::{sample_pd_indexed, DEFAULT_TRUNCATION};
use pdspectra::{BoxFunction, Polynomial, SequenceSpec, WeightedBox};

fn table() -> &'static PrimeTable {
    static T: std::sync::OnceLock<PrimeTable> = std::sync::OnceLock::new();
    T.get_or_init(|| PrimeTable::build(1_000_001, 1 << 31).unwrap())
}

fn is_prime(n: u128) -> bool {
    n >= 2 && (2..).take_while(|d: &u128| d * d <= n).all(|d| n % d != 0)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

const POLYS: [&[i64]; 4] = [&[1, 0, 1], &[-2, 0, 0, 1], &[-1, -1, 1], &[1, 1, 0, 2]];

proptest! {
    #![proptest_config(config(2000))]

    #[test]
    fn factorization_round_trips(u in 1u64..=1_000_000_000_000) {
        let f = factorize(u as u128, table()).unwrap();
        prop_assert_eq!(f.product(), Some(u as u128));
        let ps: Vec<u128> = f.factors().iter().map(|&(p, _)| p).collect();
        prop_assert!(ps.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ps.iter().take(3).all(|&p| is_prime(p)));
    }

    #[test]
    fn spectrum_is_normalized_and_descending(u in 2u64..=1_000_000_000_000) {
        let s = factorize(u as u128, table()).unwrap().spectrum();
        let e = s.entries();
        prop_assert!((e.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(e.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(e.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn stick_breaking_conserves_mass(seed in any::<u64>(), index in any::<u64>()) {
        let s = sample_pd_indexed(seed, index, DEFAULT_TRUNCATION).unwrap();
        let total: f64 = s.entries().iter().sum::<f64>() + s.tail_mass();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(s.tail_mass() < DEFAULT_TRUNCATION);
        prop_assert!(s.entries().windows(2).all(|w| w[0] >= w[1]));
    }
}

proptest! {
    #![proptest_config(config(300))]

    #[test]
    fn root_count_is_multiplicative(which in 0usize..4, m in 1u64..=1000, n in 1u64..=1000) {
        prop_assume!(num_integer::gcd(m, n) == 1);
        let f = Polynomial::new(POLYS[which].to_vec()).unwrap();
        let h = |d| poly_root_count(&f, d).unwrap();
        prop_assert_eq!(h(m * n), f.scan_root_count(m) * f.scan_root_count(n));
        prop_assert_eq!(h(m * n), h(m) * h(n));
    }

    #[test]
    fn unramified_root_counts_are_bounded_by_degree(which in 0usize..4, i in 0usize..300, k in 1u32..4) {
        let f = Polynomial::new(POLYS[which].to_vec()).unwrap();
        let p = table().primes()[i];
        prop_assume!(!f.disc_divisible_by(p) && f.leading() % p as i64 != 0);
        prop_assert!(f.root_count_prime_power(p, k).unwrap() <= f.degree() as u64);
        prop_assert_eq!(f.root_count_prime_power(p, k).unwrap(), f.root_count_prime_power(p, 1).unwrap());
    }

    #[test]
    fn g_is_bounded_by_c_to_omega_over_d(which in 0usize..6, d in 1u64..=100_000) {
        let g = match which {
            0 => GFunctionSpec::Reciprocal,
            1 => GFunctionSpec::ReciprocalTotient { shift: 1 },
            2 => GFunctionSpec::ReciprocalTotient { shift: -3 },
            w => GFunctionSpec::RootDensity { poly: Polynomial::new(POLYS[w - 3].to_vec()).unwrap() },
        };
        let c = recipe_c(&g).unwrap() as f64;
        let v = g_eval(&g, d).unwrap();
        let omega: u32 = factorize(d as u128, table()).unwrap().big_omega();
        let value = *v.numer() as f64 / *v.denom() as f64;
        prop_assert!((0.0..=1.0).contains(&value));
        prop_assert!(value <= c.powi(omega as i32) / d as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn distinct_tuple_sums_ignore_coordinate_order(
        a in prop::collection::vec(0.01f64..0.5, 3),
        w in prop::collection::vec(0.01f64..0.3, 3),
        points in prop::collection::vec(0.0f64..1.0, 0..8),
    ) {
        let upper: Vec<f64> = a.iter().zip(&w).map(|(a, w)| a + w).collect();
        let eta = BoxFunction::new(vec![WeightedBox::new(a.clone(), upper, 2.5)]).unwrap();
        let base = eta.distinct_tuple_sum(&points);
        for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let got = eta.permuted(&perm).unwrap().distinct_tuple_sum(&points);
            prop_assert!((got - base).abs() <= 1e-12 * base.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn sequence_specs_round_trip_through_json(which in 0usize..4, shift in -50i64..50) {
        let spec = match which {
            0 => SequenceSpec::Uniform,
            1 => SequenceSpec::ShiftedPrimes { shift },
            2 => SequenceSpec::polynomial(POLYS[(shift.unsigned_abs() % 4) as usize].to_vec()).unwrap(),
            _ => SequenceSpec::ThueMorse,
        };
        let text = serde_json::to_string(&spec).unwrap();
        prop_assert_eq!(serde_json::from_str::<SequenceSpec>(&text).unwrap(), spec);
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let configs = [
        json!({"experiment": "tail", "spec": {"kind": "uniform"}, "x": 200000, "eps": 0.1}),
        json!({"experiment": "seq-corr", "spec": {"kind": "uniform"}, "x": 1000000, "max_members": 50000, "seed": 3,
               "boxes": [{"lower": [0.15, 0.3], "upper": [0.25, 0.4]}]}),
        json!({"experiment": "joint-cdf", "thresholds": [0.5, 0.3], "n_samples": 100000, "seed": 4}),
        json!({"experiment": "pd-corr", "boxes": [{"lower": [0.1], "upper": [0.3]}], "n_samples": 100000, "seed": 5}),
        json!({"experiment": "lod", "spec": {"kind": "shifted_primes"}, "x": 100000, "c": 0.4}),
        json!({"experiment": "repeated", "spec": {"kind": "poly", "coeffs": [1, 0, 1]}, "x": 1000000, "alpha": 0.1, "c": 0.3}),
    ];
    for cfg in configs {
        let payload = |threads: usize| {
            let mut v = cfg.clone();
            v["threads"] = json!(threads);
            run(&ExperimentConfig::from_value(v).unwrap()).unwrap().payload_json()
        };
        assert_eq!(payload(1), payload(8), "{cfg}");
    }
}
