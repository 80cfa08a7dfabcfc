//! Randomized invariants of the public API.

use choimetric::algebra::{matrix_algebra, Algebra, TraceFunctional};
use choimetric::channels::{
    compose, is_completely_positive, is_trace_channel, omega_tau, tensor_channel, trace_adjoint,
    ChannelMap,
};
use choimetric::geometry::Seminorm;
use choimetric::groups::{FiniteGroup, PositiveDefiniteFunction, TwistedGroupAlgebra};
use choimetric::linalg::{CVec, C64};
use choimetric::metrics::{mk_distance, MkOptions, MkProblem};
use choimetric::oracle::cp_oracle_npositivity;
use choimetric::random::{self, random_map, MapKind};
use proptest::prelude::*;
use rand::Rng;

fn trace(alg: &Algebra) -> TraceFunctional {
    TraceFunctional::ambient(alg, 1.0, "Tr").unwrap()
}

fn kind_of(k: u8) -> MapKind {
    match k % 3 {
        0 => MapKind::TraceChannel,
        1 => MapKind::CompletelyPositive,
        _ => MapKind::NotCompletelyPositive,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn omega_positivity_matches_choi_oracle(seed in any::<u64>(), k in any::<u8>(), n in 2usize..4) {
        let a = matrix_algebra(n);
        let tau = trace(&a);
        let mut rng = random::rng(seed);
        let f = random_map(&mut rng, &a, &tau, kind_of(k)).unwrap();
        let verdict = is_completely_positive(&f, &tau).unwrap();
        prop_assert_eq!(verdict.is_cp, cp_oracle_npositivity(&f).is_psd);
    }

    #[test]
    fn omega_is_a_state_exactly_for_trace_channels(seed in any::<u64>(), k in 0u8..2) {
        let a = matrix_algebra(2);
        let tau = trace(&a);
        let mut rng = random::rng(seed);
        let f = random_map(&mut rng, &a, &tau, kind_of(k)).unwrap();
        let w = omega_tau(&f, &tau).unwrap().functional;
        prop_assert_eq!(w.is_state(), is_trace_channel(&f, &tau).unwrap());
    }

    #[test]
    fn trace_adjoint_identity(seed in any::<u64>()) {
        let (a, b) = (matrix_algebra(2), matrix_algebra(3));
        let (ta, tb) = (trace(&a), trace(&b));
        let mut rng = random::rng(seed);
        let f = random::random_kraus_channel(&mut rng, &a, &b, 2).unwrap();
        let fs = trace_adjoint(&f, &ta, &tb).unwrap();
        let x = random::random_element(&mut rng, &a);
        let y = random::random_element(&mut rng, &b);
        let lhs = tb.eval(&b.multiply(&f.apply(&x), &y));
        let rhs = ta.eval(&a.multiply(&x, &fs.apply(&y)));
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn trace_channels_compose_with_unital_maps(seed in any::<u64>()) {
        // A unital CP map followed by a trace channel is a trace channel.
        let a = matrix_algebra(2);
        let tau = trace(&a);
        let mut rng = random::rng(seed);
        let g = random_map(&mut rng, &a, &tau, MapKind::TraceChannel).unwrap();
        // Mixture of unitary conjugations.
        let w = rng.random_range(0.0..1.0f64);
        let us: Vec<_> = (0..2).map(|_| random::complex_matrix(&mut rng, 2, 2).qr().q()).collect();
        let kraus = [&us[0] * C64::new(w.sqrt(), 0.0), &us[1] * C64::new((1.0 - w).sqrt(), 0.0)];
        let ucp = ChannelMap::from_kraus(&a, &a, &kraus).unwrap();
        prop_assert!(choimetric::channels::is_unital(&ucp));
        prop_assert!(is_trace_channel(&compose(&g, &ucp).unwrap(), &tau).unwrap());
    }

    #[test]
    fn tensor_of_trace_channels_is_a_trace_channel(seed in any::<u64>()) {
        let (a, b) = (matrix_algebra(2), choimetric::algebra::diagonal_algebra(2));
        let (ta, tb) = (trace(&a), trace(&b));
        let mut rng = random::rng(seed);
        let f = random_map(&mut rng, &a, &ta, MapKind::TraceChannel).unwrap();
        let g = random_map(&mut rng, &b, &tb, MapKind::TraceChannel).unwrap();
        prop_assert!(is_trace_channel(&tensor_channel(&f, &g), &ta.tensor(&tb)).unwrap());
    }

    #[test]
    fn multipliers_compose_pointwise(seed in any::<u64>()) {
        let g = FiniteGroup::symmetric(3);
        let alg = TwistedGroupAlgebra::untwisted(&g);
        let mut rng = random::rng(seed);
        let (p, q) = (random::random_pd_function(&mut rng, &g), random::random_pd_function(&mut rng, &g));
        let pq = PositiveDefiniteFunction::new(&g, p.values.component_mul(&q.values)).unwrap();
        let lhs: ChannelMap = compose(&alg.multiplier(&p).unwrap(), &alg.multiplier(&q).unwrap()).unwrap();
        let rhs = alg.multiplier(&pq).unwrap();
        prop_assert!((lhs.matrix - rhs.matrix).norm() < 1e-12);
    }

    #[test]
    fn multiplier_adjoint_is_the_reversed_function(seed in any::<u64>()) {
        let g = FiniteGroup::dihedral(4);
        let alg = TwistedGroupAlgebra::untwisted(&g);
        let tau = alg.canonical_trace();
        let mut rng = random::rng(seed);
        let p = random::random_pd_function(&mut rng, &g);
        let adj = trace_adjoint(&alg.multiplier(&p).unwrap(), &tau, &tau).unwrap();
        let expected = alg.multiplier(&p.reversed(&g)).unwrap();
        prop_assert!((adj.matrix - expected.matrix).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn mk_is_symmetric_and_vanishes_on_the_diagonal(seed in any::<u64>()) {
        let a = matrix_algebra(2);
        let mut rng = random::rng(seed);
        let ls = [random::indefinite_hermitian(&mut rng, 2), random::indefinite_hermitian(&mut rng, 2)];
        let t = choimetric::geometry::ambient_triple(&a, &ls).unwrap();
        let l = Seminorm::commutator(&t);
        let (p, q) = (random::random_state(&mut rng, &a), random::random_state(&mut rng, &a));
        let d = |x: &_, y: &_| mk_distance(&MkProblem::new(Clone::clone(x), Clone::clone(y), l.clone())).unwrap();
        let (pq, qp, pp) = (d(&p, &q), d(&q, &p), d(&p, &p));
        prop_assert_eq!(pp.value.finite(), Some(0.0));
        let (pq, qp) = (pq.value.finite().unwrap(), qp.value.finite().unwrap());
        prop_assert!((pq - qp).abs() <= 1e-12);
        prop_assert!(pq > 0.0);
    }

    #[test]
    fn mk_scales_inversely_with_the_dirac(seed in any::<u64>(), s in 0.5..3.0f64) {
        let a = matrix_algebra(2);
        let mut rng = random::rng(seed);
        let ls = [random::indefinite_hermitian(&mut rng, 2), random::indefinite_hermitian(&mut rng, 2)];
        let scaled: Vec<_> = ls.iter().map(|m| m * C64::new(s, 0.0)).collect();
        let (p, q) = (random::random_state(&mut rng, &a), random::random_state(&mut rng, &a));
        let run = |ls: &[_]| {
            let t = choimetric::geometry::ambient_triple(&a, ls).unwrap();
            let mut prob = MkProblem::new(p.clone(), q.clone(), Seminorm::commutator(&t));
            prob.options = MkOptions::default();
            mk_distance(&prob).unwrap().value.finite().unwrap()
        };
        let (d1, ds) = (run(&ls), run(&scaled));
        prop_assert!((d1 - s * ds).abs() < 1e-6 * (1.0 + d1));
    }
}

#[test]
fn pointwise_product_is_positive_definite() {
    let g = FiniteGroup::cyclic(5);
    let mut rng = random::rng(3);
    for _ in 0..20 {
        let (p, q) = (
            random::random_pd_function(&mut rng, &g),
            random::random_pd_function(&mut rng, &g),
        );
        let values: CVec = p.values.component_mul(&q.values);
        assert!(PositiveDefiniteFunction::new(&g, values).is_ok());
    }
}
