//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use bcd_core::graph::MixedGraph;
use bcd_core::scm::{DiscreteScm, Intervention, JointTable};
use rand::seq::SliceRandom;
use rand::Rng;

pub type ArcSet = BTreeSet<(usize, usize)>;

/// Undirected chordal graph grown by adding simplicial vertices: each new
/// vertex joins a random earlier vertex and a random clique around it.
pub fn random_chordal<R: Rng>(n: usize, density: f64, rng: &mut R) -> MixedGraph {
    let mut adj = vec![BTreeSet::new(); n];
    for v in 1..n {
        let u = rng.random_range(0..v);
        let mut nb: Vec<usize> = adj[u].iter().copied().collect();
        nb.shuffle(rng);
        let mut clique = vec![u];
        for w in nb {
            if rng.random_bool(density) && clique.iter().all(|c| adj[w].contains(c)) {
                clique.push(w);
            }
        }
        for c in clique {
            adj[v].insert(c);
            adj[c].insert(v);
        }
    }
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| adj[u].iter().filter(move |&&w| w > u).map(move |&w| (u, w)))
        .collect::<Vec<_>>();
    MixedGraph::from_edges(n, &edges).unwrap()
}

pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> MixedGraph {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    MixedGraph::from_edges(n, &edges).unwrap()
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn has_v_structure(n: usize, arcs: &ArcSet, adjacent: impl Fn(usize, usize) -> bool) -> bool {
    (0..n).any(|c| {
        let pa: Vec<usize> = arcs.iter().filter(|a| a.1 == c).map(|a| a.0).collect();
        pa.iter()
            .enumerate()
            .any(|(i, &a)| pa[i + 1..].iter().any(|&b| !adjacent(a, b)))
    })
}

/// Every acyclic orientation of `g`'s undirected edges (keeping its arcs)
/// without a v-structure among the newly oriented edges' endpoints, found by
/// orienting along every vertex order.
pub fn brute_force_amos(g: &MixedGraph) -> BTreeSet<ArcSet> {
    let n = g.n();
    let edges = g.edges();
    let fixed: ArcSet = g.arcs().into_iter().collect();
    let mut out = BTreeSet::new();
    for perm in permutations(n) {
        let mut pos = vec![0; n];
        for (i, &v) in perm.iter().enumerate() {
            pos[v] = i;
        }
        if fixed.iter().any(|&(u, v)| pos[u] > pos[v]) {
            continue;
        }
        let mut arcs = fixed.clone();
        for &(u, v) in &edges {
            arcs.insert(if pos[u] < pos[v] { (u, v) } else { (v, u) });
        }
        if !has_v_structure(n, &arcs, |a, b| g.adjacent(a, b)) {
            out.insert(arcs);
        }
    }
    out
}

/// Members of the Markov equivalence class of `dag`: all acyclic
/// orientations of its skeleton with the same v-structures.
pub fn brute_force_mec(dag: &MixedGraph) -> BTreeSet<ArcSet> {
    let n = dag.n();
    let vs = v_structure_set(n, &dag.arcs().into_iter().collect(), |a, b| dag.adjacent(a, b));
    let skel = dag.skeleton();
    let mut out = BTreeSet::new();
    for perm in permutations(n) {
        let mut pos = vec![0; n];
        for (i, &v) in perm.iter().enumerate() {
            pos[v] = i;
        }
        let arcs: ArcSet = skel
            .edges()
            .into_iter()
            .map(|(u, v)| if pos[u] < pos[v] { (u, v) } else { (v, u) })
            .collect();
        if v_structure_set(n, &arcs, |a, b| dag.adjacent(a, b)) == vs {
            out.insert(arcs);
        }
    }
    out
}

pub fn v_structure_set(
    n: usize,
    arcs: &ArcSet,
    adjacent: impl Fn(usize, usize) -> bool,
) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for c in 0..n {
        let pa: Vec<usize> = arcs.iter().filter(|a| a.1 == c).map(|a| a.0).collect();
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if !adjacent(a, b) {
                    out.insert((a.min(b), c, a.max(b)));
                }
            }
        }
    }
    out
}

pub fn arc_set(g: &MixedGraph) -> ArcSet {
    g.arcs().into_iter().collect()
}

/// Interventional distribution as a direct product of CPT entries over
/// every assignment, in the library's row-major layout.
pub fn product_table(scm: &DiscreteScm, iv: &Intervention) -> Vec<f64> {
    let cards = scm.cardinalities().to_vec();
    let n = cards.len();
    let total: usize = cards.iter().product();
    let mut out = vec![0.0; total];
    let mut a = vec![0usize; n];
    for cell in out.iter_mut() {
        let consistent = iv.targets().iter().zip(iv.values()).all(|(&t, &x)| a[t] == x);
        if consistent {
            let mut p = 1.0;
            for v in 0..n {
                if iv.value_of(v).is_none() {
                    let row = scm.dag().parents(v).fold(0, |r, u| r * cards[u] + a[u]);
                    p *= scm.cpts()[v][row][a[v]];
                }
            }
            *cell = p;
        }
        for i in (0..n).rev() {
            a[i] += 1;
            if a[i] < cards[i] {
                break;
            }
            a[i] = 0;
        }
    }
    out
}

pub fn tvd(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn kl(p: &JointTable, q: &JointTable) -> f64 {
    p.probs()
        .iter()
        .zip(q.probs())
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

pub fn factorial(n: u128) -> u128 {
    (1..=n).product()
}

/// Closed form of the sample bound, evaluated independently.
pub fn sample_bound(beta: f64, d: f64, k: f64, dm: f64, delta: f64, gamma: f64, p_star: f64) -> u64 {
    let a = 2.0 * beta * beta / (d * d) * (2f64.powf((k + 1.0) * dm) / delta).ln();
    let b = 2.0 / d * (2f64.powf(k * dm) * (1.0 - gamma) * (1.0 - p_star) / (p_star * gamma)).ln();
    (a + b).ceil() as u64
}
