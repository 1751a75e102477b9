//! Property tests for the structural invariants: index arithmetic, value
//! serialization, bound homogeneity, and the exact transfer identities.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use varopkit::fourier::AFn;
use varopkit::group::{build_group, FiniteGroup, GroupDescriptor, TupleIndex};
use varopkit::la;
use varopkit::multifn::MultiFn;
use varopkit::norm::{schur_norm, SolveOpts};
use varopkit::transfer::{e_star, n_map, p_map, q_map, ClosedSet};
use varopkit::varopoulos::{HaagFactorization, VFn};
use varopkit::{c64, cx};

fn group(alias: &str) -> Arc<FiniteGroup> {
    Arc::new(build_group(&GroupDescriptor::parse(alias).unwrap()).unwrap())
}

fn alias() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("c2"), Just("c3"), Just("s3")]
}

fn random_factorization(
    g: &Arc<FiniteGroup>,
    arity: usize,
    rank: usize,
    seed: u64,
) -> HaagFactorization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = g.order();
    let columns: Vec<Vec<Vec<c64>>> = (0..arity)
        .map(|_| {
            (0..rank)
                .map(|_| (0..q).map(|_| la::randn_c(&mut rng)).collect())
                .collect()
        })
        .collect();
    HaagFactorization::new(g.clone(), columns).unwrap()
}

proptest! {
    #[test]
    fn tuple_indexing_round_trips(
        (q, arity, flat) in (1usize..=6, 1usize..=4).prop_flat_map(|(q, arity)| {
            let len = q.pow(arity as u32);
            (Just(q), Just(arity), 0..len)
        })
    ) {
        let idx = TupleIndex::new(q, arity);
        let tuple = idx.from_flat(flat).unwrap();
        prop_assert_eq!(tuple.len(), arity);
        prop_assert!(tuple.iter().all(|&x| x < q));
        prop_assert_eq!(idx.to_flat(&tuple).unwrap(), flat);
    }

    #[test]
    fn function_json_round_trips_bitwise(
        (name, arity, vals) in (alias(), 1usize..=2).prop_flat_map(|(name, arity)| {
            let q = group(name).order();
            let len = q.pow(arity as u32);
            (
                Just(name),
                Just(arity),
                prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), len),
            )
        })
    ) {
        let g = group(name);
        let idx = TupleIndex::new(g.order(), arity);
        let fun = MultiFn::from_fn(g, arity, |t| {
            let (re, im) = vals[idx.to_flat(t).unwrap()];
            cx(re, im)
        });
        let text = serde_json::to_string(&fun.to_json()).unwrap();
        let back = MultiFn::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert!(back.bit_eq(&fun));
    }

    #[test]
    fn factorization_bounds_are_absolutely_homogeneous(
        name in alias(),
        arity in 2usize..=3,
        rank in 1usize..=3,
        seed in any::<u64>(),
        scale in prop_oneof![-3.0f64..-0.01, 0.01f64..3.0],
    ) {
        let g = group(name);
        let fact = random_factorization(&g, arity, rank, seed);
        let mut columns = fact.columns().to_vec();
        for col in &mut columns[0] {
            for v in col.iter_mut() {
                *v *= cx(scale, 0.0);
            }
        }
        let scaled = HaagFactorization::new(g, columns).unwrap();
        let expect = scale.abs() * fact.bound();
        prop_assert!((scaled.bound() - expect).abs() <= 1e-12 * (1.0 + expect));
    }

    #[test]
    fn pullback_composes_to_the_identity(
        name in alias(),
        arity in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let g = group(name);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = AFn::new(MultiFn::random(g, arity, &mut rng)).unwrap();
        prop_assert!(q_map(&n_map(&u)).fun().bit_eq(u.fun()));
    }

    #[test]
    fn orbit_averaging_is_idempotent(
        name in alias(),
        arity in 2usize..=3,
        seed in any::<u64>(),
    ) {
        let g = group(name);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = VFn::new(MultiFn::random(g, arity, &mut rng)).unwrap();
        let once = p_map(&w);
        prop_assert!(p_map(&once).values().bit_eq(once.values()));
    }

    #[test]
    fn pullback_supports_scale_by_the_group_order(
        (name, arity, mask) in (alias(), 1usize..=2).prop_flat_map(|(name, arity)| {
            let len = group(name).order().pow(arity as u32);
            (Just(name), Just(arity), prop::collection::vec(any::<bool>(), len))
        })
    ) {
        let g = group(name);
        let flats: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter_map(|(f, &keep)| keep.then_some(f))
            .collect();
        let e = ClosedSet::from_flats(g.clone(), arity, flats).unwrap();
        let lifted = e_star(&e);
        prop_assert_eq!(lifted.len(), e.len() * g.order());
        prop_assert_eq!(lifted.arity(), arity + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn schur_certificates_scale_with_the_input(
        q in 2usize..=3,
        seed in any::<u64>(),
        scale in 0.25f64..4.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = la::randn_cmat(q, q, &mut rng);
        let opts = SolveOpts::default();
        let base = schur_norm(&w, &opts).unwrap();
        let scaled = schur_norm(&w.map(|v| v * cx(scale, 0.0)), &opts).unwrap();
        prop_assert!(scaled.lower <= scale * base.upper + 1e-6);
        prop_assert!(scale * base.lower <= scaled.upper + 1e-6);
    }
}
