mod common;

use bcd_core::bench::{
    chi_square_statistic, random_ba_dag, random_chordal_dag, random_cpt_scm, random_intervention_baseline,
    run_benchmark, BenchConfig, GraphModel,
};
use bcd_core::discovery::{
    config_priors, enumerate_cut_configurations, greedy_assemble, undirected_cut, Discovery, DiscoveryOptions,
    PosteriorState, PriorMode,
};
use bcd_core::graph::{clique_number, cpdag_of, MixedGraph};
use bcd_core::mec::MecCounter;
use bcd_core::scm::{kl_divergence, truncated_factorization, tvd, DiscreteScm, Intervention};
use bcd_core::separating::{
    g_separating_system, system_for_essential, verify_separating, SepSysKind, SeparatingSystem,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncated_factorization_matches_product(seed in any::<u64>(), n in 2usize..=6, card in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_chordal_dag(n, rng.random_range(0.1..1.0), &mut rng).unwrap();
        let scm = random_cpt_scm(&dag, card, 0.02, &mut rng).unwrap();
        let joint = scm.joint_distribution().unwrap();
        prop_assert!((joint.total_mass() - 1.0).abs() < 1e-9);
        let targets: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
        let values: Vec<usize> = targets.iter().map(|_| rng.random_range(0..card)).collect();
        let iv = Intervention::new(&targets, &values).unwrap();
        let tf = truncated_factorization(&joint, &dag, &iv).unwrap();
        prop_assert!(common::tvd(tf.probs(), &product_table(&scm, &iv)) < 1e-9);
        let obs = truncated_factorization(&joint, &dag, &Intervention::observational()).unwrap();
        prop_assert!(tvd(&obs, &joint).unwrap() < 1e-12);
        prop_assert!(kl_divergence(&tf, &tf).unwrap().abs() < 1e-12);
    }

    #[test]
    fn equivalent_dags_give_equal_interventional_tables(seed in any::<u64>(), n in 3usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_chordal_dag(n, rng.random_range(0.2..1.0), &mut rng).unwrap();
        let essential = cpdag_of(&dag).unwrap();
        let scm = random_cpt_scm(&dag, 2, 0.01, &mut rng).unwrap();
        let joint = scm.joint_distribution().unwrap();
        let counter = MecCounter::default();
        let other = counter.sample_uniform_dag(&essential, &mut rng).unwrap();
        let obs = Intervention::observational();
        let a = truncated_factorization(&joint, &dag, &obs).unwrap();
        let b = truncated_factorization(&joint, &other, &obs).unwrap();
        prop_assert!(tvd(&a, &b).unwrap() < 1e-9);
    }

    #[test]
    fn configurations_partition_the_class(seed in any::<u64>(), n in 3usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_chordal_dag(n, rng.random_range(0.2..1.0), &mut rng).unwrap();
        let essential = cpdag_of(&dag).unwrap();
        let counter = MecCounter::default();
        let total = counter.mec_size(&essential).unwrap();
        let sys = system_for_essential(&essential, SepSysKind::Coloring).unwrap();
        for target in &sys.targets {
            let cs = config_priors(enumerate_cut_configurations(&essential, target).unwrap(), PriorMode::MecSize, &counter)
                .unwrap();
            prop_assert_eq!(cs.mec_sizes.iter().sum::<u128>(), total);
            prop_assert!((cs.priors.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(cs.index_of(&dag).is_some());
            let cut = undirected_cut(&essential, target);
            for c in &cs.configs {
                prop_assert_eq!(c.arcs.len(), cut.len());
            }
        }
    }

    #[test]
    fn greedy_assembly_recovers_truth_from_certain_posteriors(seed in any::<u64>(), n in 3usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_chordal_dag(n, rng.random_range(0.2..1.0), &mut rng).unwrap();
        let essential = cpdag_of(&dag).unwrap();
        let counter = MecCounter::default();
        let sys = system_for_essential(&essential, SepSysKind::Coloring).unwrap();
        let sets: Vec<_> = sys
            .targets
            .iter()
            .map(|t| config_priors(enumerate_cut_configurations(&essential, t).unwrap(), PriorMode::Uniform, &counter).unwrap())
            .collect();
        let truth: Vec<usize> = sets.iter().map(|s| s.index_of(&dag).unwrap()).collect();
        let mut state = PosteriorState::new(sets);
        for (t, &j) in truth.iter().enumerate() {
            let ll: Vec<f64> = (0..state.sets[t].len()).map(|i| if i == j { 0.0 } else { -1e6 }).collect();
            state.update(t, &ll).unwrap();
        }
        prop_assert_eq!(greedy_assemble(&essential, &state).unwrap(), dag);
    }

    #[test]
    fn sequential_updates_equal_a_batch(seed in any::<u64>(), len in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let path = MixedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cs = config_priors(enumerate_cut_configurations(&path, &[1]).unwrap(), PriorMode::MecSize, &MecCounter::default())
            .unwrap();
        let k = cs.len();
        let rows: Vec<Vec<f64>> = (0..len).map(|_| (0..k).map(|_| -rng.random_range(0.0..5.0)).collect()).collect();
        let mut seq = PosteriorState::new(vec![cs.clone()]);
        for r in &rows {
            seq.update(0, r).unwrap();
        }
        let mut batch = PosteriorState::new(vec![cs]);
        let sum: Vec<f64> = (0..k).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
        batch.update(0, &sum).unwrap();
        for (a, b) in seq.posterior(0).iter().zip(batch.posterior(0)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert_eq!(seq.samples(0), len);
    }

    #[test]
    fn coloring_system_has_clique_number_targets(seed in any::<u64>(), n in 1usize..=20, p in 0.1f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_chordal(n, p, &mut rng);
        let s = g_separating_system(&g).unwrap();
        prop_assert_eq!(s.len(), clique_number(&g).unwrap());
        prop_assert!(verify_separating(&s, Some(&g)));
    }

    #[test]
    fn essential_systems_cut_every_undirected_edge(seed in any::<u64>(), n in 2usize..=12, k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_chordal_dag(n, rng.random_range(0.1..1.0), &mut rng).unwrap();
        let e = cpdag_of(&dag).unwrap();
        let und = MixedGraph::from_edges(n, &e.edges()).unwrap();
        for kind in [SepSysKind::Coloring, SepSysKind::Nk(k)] {
            let s = system_for_essential(&e, kind).unwrap();
            prop_assert!(verify_separating(&s, Some(&und)));
            if let SepSysKind::Nk(k) = kind {
                prop_assert!(s.targets.iter().all(|t| t.len() <= k));
            }
        }
    }

    #[test]
    fn discovery_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_chordal_dag(4, 0.7, &mut rng).unwrap();
        let scm = random_cpt_scm(&dag, 2, 0.01, &mut rng).unwrap();
        let sys = system_for_essential(&cpdag_of(&dag).unwrap(), SepSysKind::Coloring).unwrap();
        let opts = DiscoveryOptions { samples: 200, seed, ..Default::default() };
        let a = Discovery::new(&scm, &sys, &opts).unwrap().run(&opts).unwrap();
        let b = Discovery::new(&scm, &sys, &opts).unwrap().run(&opts).unwrap();
        prop_assert_eq!(a.dag, b.dag);
        for t in 0..sys.len() {
            prop_assert_eq!(a.state.posterior(t), b.state.posterior(t));
        }
    }
}

#[test]
fn generators_are_reproducible() {
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_chordal_dag(7, 0.4, &mut rng).unwrap();
        let b = random_ba_dag(7, 2, &mut rng).unwrap();
        (random_cpt_scm(&d, 3, 0.01, &mut rng).unwrap().to_json(), b)
    };
    assert_eq!(draw(8), draw(8));
}

#[test]
fn ba_tree_mode_is_a_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..15 {
        let d = random_ba_dag(n, 1, &mut rng).unwrap();
        assert_eq!(d.num_arcs(), n - 1);
        assert!(d.is_connected());
    }
}

#[test]
fn chi_square_by_hand() {
    // expected counts are all 30, so each cell contributes 400/30
    let (stat, dof) = chi_square_statistic(&[vec![50, 10], vec![10, 50]]).unwrap();
    assert!((stat - 4.0 * 400.0 / 30.0).abs() < 1e-9);
    assert_eq!(dof, 1);
}

#[test]
fn baseline_orients_a_strong_chain() {
    let dag = MixedGraph::from_arcs(2, &[(0, 1)]).unwrap();
    let scm = DiscreteScm::new(
        dag.clone(),
        vec![2, 2],
        vec![vec![vec![0.5, 0.5]], vec![vec![0.9, 0.1], vec![0.2, 0.8]]],
    )
    .unwrap();
    let sys = SeparatingSystem {
        n: 2,
        k: None,
        targets: vec![vec![0]],
    };
    let hits = (0..200)
        .filter(|&rep| random_intervention_baseline(&scm, &sys, 10_000, 0.05, rep).unwrap() == dag)
        .count();
    assert!(hits >= 198, "{hits}/200");
}

#[test]
fn benchmark_is_deterministic_and_well_formed() {
    let mut cfg = BenchConfig::new(5, GraphModel::Density(0.5), 6, vec![0, 50, 500], 17);
    cfg.sepsys = SepSysKind::Nk(1);
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 6);
    assert!(a.failed.is_empty());
    for r in &a.rows {
        assert!(r.mean_shd >= 0.0 && r.std_shd >= 0.0 && r.trials == 6);
    }
    let bad = BenchConfig::new(5, GraphModel::Density(1.5), 1, vec![0], 1);
    assert!(run_benchmark(&bad).is_err());
    let bad = BenchConfig::new(5, GraphModel::Density(0.5), 1, vec![10, 10], 1);
    assert!(run_benchmark(&bad).is_err());
}
