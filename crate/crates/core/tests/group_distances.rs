use choimetric::channels::omega_tau;
use choimetric::harness::chaining_setup;
use choimetric::io::builtin_group;
use choimetric::metrics::{delta_distance, MkOptions};
use choimetric::oracle::{search_mk_sup, SearchOptions};
use choimetric::random::z2_pd_function;

// On Z/2 the difference of two multiplier functionals lives on λ_1 ⊗ λ_1^op,
// so Δ(M_t, M_s) is linear in |t - s|.
#[test]
fn z2_multiplier_distance_is_linear() {
    let setup = chaining_setup(&builtin_group("Z2").unwrap()).unwrap();
    let opts = MkOptions::default();
    let m = |t: f64| {
        setup
            .algebra
            .multiplier(&z2_pd_function(t).unwrap())
            .unwrap()
    };
    let pairs = [
        (0.9, 0.1),
        (0.5, -0.5),
        (-0.3, 0.2),
        (1.0, -1.0),
        (0.25, 0.3),
    ];
    let mut kappas = Vec::new();
    for (t, s) in pairs {
        let d = delta_distance(&m(t), &m(s), &setup.tau, &setup.seminorm, &opts).unwrap();
        kappas.push(d.value.finite().unwrap() / (t - s).abs());
    }
    let kappa = kappas[0];
    assert!(kappa > 0.0);
    for k in &kappas {
        assert!((k - kappa).abs() < 1e-6 * kappa, "{kappas:?}");
    }

    let w = omega_tau(&m(0.9), &setup.tau).unwrap().functional;
    let v = omega_tau(&m(0.1), &setup.tau).unwrap().functional;
    let oracle = search_mk_sup(
        &w.sub(&v).unwrap(),
        &setup.seminorm,
        &SearchOptions::default(),
    )
    .unwrap();
    assert!((oracle.finite().unwrap() / 0.8 - kappa).abs() < 1e-5 * kappa);
}

#[test]
fn equal_multipliers_are_at_distance_zero() {
    let setup = chaining_setup(&builtin_group("Z3").unwrap()).unwrap();
    let mut rng = choimetric::random::rng(1);
    let g = &setup.algebra.group;
    let phi = choimetric::random::random_pd_function(&mut rng, g);
    let m = setup.algebra.multiplier(&phi).unwrap();
    let d = delta_distance(&m, &m, &setup.tau, &setup.seminorm, &MkOptions::default()).unwrap();
    assert_eq!(d.value.finite(), Some(0.0));
}
