mod common;

use std::collections::BTreeSet;

use bcd_core::bench::random_chordal_dag;
use bcd_core::graph::{
    clique_number, consistent_extension, cpdag_of, d_separated, is_chordal, max_cardinality_search, meek_closure, shd,
    v_structures, MixedGraph,
};
use bcd_core::mec::{enumerate_amos, MecCounter};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> MixedGraph {
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|_| rng.random_bool(p))
        .collect();
    MixedGraph::from_edges(n, &edges).unwrap()
}

/// Random DAG along the identity order.
fn random_dag(n: usize, p: f64, rng: &mut ChaCha8Rng) -> MixedGraph {
    let arcs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .filter(|_| rng.random_bool(p))
        .collect();
    MixedGraph::from_arcs(n, &arcs).unwrap()
}

/// A graph has a chordless cycle iff some vertex subset of size >= 4
/// induces a connected 2-regular subgraph.
fn has_chordless_cycle(g: &MixedGraph) -> bool {
    let n = g.n();
    (0u32..1 << n).filter(|m| m.count_ones() >= 4).any(|m| {
        let vs: Vec<usize> = (0..n).filter(|&v| m >> v & 1 == 1).collect();
        if !vs
            .iter()
            .all(|&v| vs.iter().filter(|&&w| g.adjacent(v, w)).count() == 2)
        {
            return false;
        }
        let mut seen = BTreeSet::from([vs[0]]);
        let mut stack = vec![vs[0]];
        while let Some(v) = stack.pop() {
            for &w in &vs {
                if g.adjacent(v, w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == vs.len()
    })
}

fn is_peo(g: &MixedGraph, order: &[usize]) -> bool {
    let mut pos = vec![0; g.n()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    order.iter().all(|&v| {
        let later: Vec<usize> = g.adjacents(v).into_iter().filter(|&w| pos[w] > pos[v]).collect();
        later.iter().all(|&a| later.iter().all(|&b| a == b || g.adjacent(a, b)))
    })
}

fn max_clique(g: &MixedGraph) -> usize {
    let n = g.n();
    (0u32..1 << n)
        .filter(|&m| {
            let vs: Vec<usize> = (0..n).filter(|&v| m >> v & 1 == 1).collect();
            vs.iter().all(|&a| vs.iter().all(|&b| a == b || g.adjacent(a, b)))
        })
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap()
}

/// d-separation by enumerating every simple path between x and y.
fn d_separated_by_paths(d: &MixedGraph, x: usize, y: usize, z: &[usize]) -> bool {
    let n = d.n();
    let mut desc_in_z = vec![false; n];
    for v in 0..n {
        let mut seen = vec![false; n];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(u) = stack.pop() {
            if z.contains(&u) {
                desc_in_z[v] = true;
            }
            for c in d.children(u) {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
    }
    fn walk(d: &MixedGraph, path: &mut Vec<usize>, y: usize, z: &[usize], desc_in_z: &[bool]) -> bool {
        let last = *path.last().unwrap();
        if last == y {
            let open = path.windows(3).all(|w| {
                let collider = d.has_arc(w[0], w[1]) && d.has_arc(w[2], w[1]);
                if collider {
                    desc_in_z[w[1]]
                } else {
                    !z.contains(&w[1])
                }
            });
            return open;
        }
        for w in d.adjacents(last) {
            if !path.contains(&w) {
                path.push(w);
                if walk(d, path, y, z, desc_in_z) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    !walk(d, &mut vec![x], y, z, &desc_in_z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mcs_reverse_is_peo_on_chordal(seed in any::<u64>(), n in 1usize..=9, p in 0.1f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_chordal(n, p, &mut rng);
        let order = max_cardinality_search(&g).unwrap();
        let rev: Vec<usize> = order.as_slice().iter().rev().copied().collect();
        prop_assert!(is_peo(&g, &rev));
        prop_assert_eq!(clique_number(&g).unwrap(), max_clique(&g));
    }

    #[test]
    fn chordality_matches_cycle_search(seed in any::<u64>(), n in 1usize..=7, p in 0.1f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, p, &mut rng);
        prop_assert_eq!(is_chordal(&g).unwrap(), !has_chordless_cycle(&g));
    }

    #[test]
    fn cpdag_arcs_are_those_shared_by_the_class(seed in any::<u64>(), n in 1usize..=6, p in 0.1f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dag(n, p, &mut rng);
        let members = brute_force_mec(&d);
        let first = members.iter().next().unwrap();
        let shared: ArcSet = first.iter().filter(|a| members.iter().all(|m| m.contains(a))).copied().collect();
        let c = cpdag_of(&d).unwrap();
        prop_assert_eq!(arc_set(&c), shared);
        prop_assert_eq!(c.num_edges() + c.num_arcs(), d.num_arcs());
        let size = MecCounter::default().mec_size(&c).unwrap();
        prop_assert_eq!(size, members.len() as u128);
        let listed: BTreeSet<ArcSet> = MecCounter::default().enumerate_mec(&c).unwrap().iter().map(arc_set).collect();
        prop_assert_eq!(&listed, &members);
    }

    #[test]
    fn extension_of_cpdag_is_equivalent(seed in any::<u64>(), n in 1usize..=8, p in 0.1f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dag(n, p, &mut rng);
        let c = cpdag_of(&d).unwrap();
        let e = consistent_extension(&c).unwrap();
        prop_assert!(e.is_dag());
        prop_assert_eq!(v_structures(&e), v_structures(&d));
        prop_assert_eq!(cpdag_of(&e).unwrap(), c.clone());
        prop_assert_eq!(meek_closure(&c).unwrap(), c);
    }

    #[test]
    fn closure_is_idempotent_after_orienting_an_edge(seed in any::<u64>(), n in 2usize..=8, p in 0.2f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_chordal(n, p, &mut rng);
        let edges = g.edges();
        prop_assume!(!edges.is_empty());
        let (u, v) = edges[rng.random_range(0..edges.len())];
        let mut h = g.clone();
        h.orient(u, v).unwrap();
        let once = meek_closure(&h).unwrap();
        prop_assert_eq!(meek_closure(&once).unwrap(), once.clone());
        prop_assert!(once.has_arc(u, v));
    }

    #[test]
    fn amo_members_have_no_v_structures(seed in any::<u64>(), n in 1usize..=7, p in 0.1f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_chordal(n, p, &mut rng);
        let amos = enumerate_amos(&g).unwrap();
        let listed: BTreeSet<ArcSet> = amos.members.iter().map(arc_set).collect();
        prop_assert_eq!(listed.len(), amos.len());
        for m in &amos.members {
            prop_assert!(m.is_dag());
            prop_assert!(v_structures(m).is_empty());
            prop_assert_eq!(m.skeleton(), g.clone());
        }
        prop_assert_eq!(listed, brute_force_amos(&g));
    }

    #[test]
    fn unranking_is_a_bijection(seed in any::<u64>(), n in 1usize..=6, p in 0.2f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_chordal(n, p, &mut rng);
        let counter = MecCounter::default();
        let count = counter.count_amos(&g).unwrap();
        let all: BTreeSet<ArcSet> = (0..count).map(|i| arc_set(&counter.unrank(&g, i).unwrap())).collect();
        prop_assert_eq!(all.len() as u128, count);
    }

    #[test]
    fn d_separation_matches_path_search(seed in any::<u64>(), n in 3usize..=7, p in 0.2f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dag(n, p, &mut rng);
        let x = rng.random_range(0..n);
        let y = (x + 1 + rng.random_range(0..n - 1)) % n;
        let z: Vec<usize> = (0..n).filter(|&v| v != x && v != y && rng.random_bool(0.4)).collect();
        prop_assert_eq!(d_separated(&d, &[x], &[y], &z).unwrap(), d_separated_by_paths(&d, x, y, &z));
    }

    #[test]
    fn shd_is_a_metric(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_dag(n, 0.4, &mut rng);
        let b = random_dag(n, 0.4, &mut rng);
        let c = random_dag(n, 0.4, &mut rng);
        prop_assert_eq!(shd(&a, &a).unwrap(), 0);
        prop_assert_eq!(shd(&a, &b).unwrap(), shd(&b, &a).unwrap());
        prop_assert!(shd(&a, &c).unwrap() <= shd(&a, &b).unwrap() + shd(&b, &c).unwrap());
    }

    #[test]
    fn json_and_dot_roundtrip(seed in any::<u64>(), n in 1usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_dag(n, 0.3, &mut rng);
        let c = cpdag_of(&d).unwrap();
        prop_assert_eq!(MixedGraph::from_json(&c.to_json()).unwrap(), c.clone());
        prop_assert_eq!(MixedGraph::from_dot(&c.to_dot()).unwrap(), c);
    }
}

#[test]
fn generated_dags_are_chordal_and_moral() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..500 {
        let n = 5 + i % 16;
        let rho = 0.1 * (1 + i % 10) as f64;
        let d = random_chordal_dag(n, rho, &mut rng).unwrap();
        assert!(d.is_dag() && d.is_connected());
        assert!(is_chordal(&d.skeleton()).unwrap());
        let c = cpdag_of(&d).unwrap();
        for comp in c.chain_components() {
            assert!(is_chordal(&comp.graph).unwrap());
        }
    }
}

#[test]
fn uniform_sampling_of_a_star() {
    // star with centre 0 and leaves 1..=3 has 4 members, one per source
    let g = MixedGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
    let counter = MecCounter::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut counts = [0usize; 4];
    let draws = 40_000;
    for _ in 0..draws {
        let d = counter.sample_uniform_dag(&g, &mut rng).unwrap();
        let source = (0..4).find(|&v| d.parents(v).count() == 0).unwrap();
        counts[source] += 1;
    }
    for c in counts {
        assert!((c as f64 / draws as f64 - 0.25).abs() < 0.01, "{counts:?}");
    }
}
