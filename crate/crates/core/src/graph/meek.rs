use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use super::MixedGraph;
use crate::{Error, Result};

/// Unshielded collider `left -> collider <- right` with `left < right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VStructure {
    pub left: usize,
    pub collider: usize,
    pub right: usize,
}

/// All unshielded colliders formed by the arcs of `g`.
pub fn v_structures(g: &MixedGraph) -> BTreeSet<VStructure> {
    let mut out = BTreeSet::new();
    for b in 0..g.n() {
        let pa: Vec<usize> = g.parents(b).collect();
        for (i, &a) in pa.iter().enumerate() {
            for &c in &pa[i + 1..] {
                if !g.adjacent(a, c) {
                    out.insert(VStructure {
                        left: a,
                        collider: b,
                        right: c,
                    });
                }
            }
        }
    }
    out
}

fn intersects(a: &FixedBitSet, b: &FixedBitSet) -> bool {
    a.intersection(b).next().is_some()
}

/// Whether one of Meek's rules R1-R4 forces the undirected edge `a - b`
/// to become `a -> b`.
fn forced(g: &MixedGraph, a: usize, b: usize) -> bool {
    let adj_b = g.adjacency_set(b);

    // R1: c -> a - b, c and b non-adjacent
    if g.parents_set(a).ones().any(|c| !adj_b.contains(c)) {
        return true;
    }

    // R2: a -> c -> b
    if intersects(g.children_set(a), g.parents_set(b)) {
        return true;
    }

    // R3: a - c -> b, a - d -> b, c and d non-adjacent
    let cand: Vec<usize> = g.parents_set(b).intersection(g.undirected_set(a)).collect();
    for (i, &c) in cand.iter().enumerate() {
        if cand[i + 1..].iter().any(|&d| !g.adjacent(c, d)) {
            return true;
        }
    }

    // R4: c -> d -> b with c adjacent to a, d adjacent to a, c and b non-adjacent
    let adj_a = g.adjacency_set(a);
    for d in g.parents_set(b).ones() {
        if !adj_a.contains(d) {
            continue;
        }
        if g.parents_set(d)
            .ones()
            .any(|c| c != a && adj_a.contains(c) && !adj_b.contains(c))
        {
            return true;
        }
    }
    false
}

/// Closes `g` under Meek's rules R1-R4.
///
/// The skeleton is unchanged; undirected edges are oriented only when every
/// consistent extension agrees. Fails if the input arcs are cyclic, if two
/// rules demand opposite orientations of one edge, or if the closure
/// produces a directed cycle.
pub fn meek_closure(g: &MixedGraph) -> Result<MixedGraph> {
    if g.has_directed_cycle() {
        return Err(Error::DirectedCycle);
    }
    let mut g = g.clone();
    loop {
        let mut wanted: Vec<(usize, usize)> = Vec::new();
        for (u, v) in g.edges() {
            let fwd = forced(&g, u, v);
            let bwd = forced(&g, v, u);
            match (fwd, bwd) {
                (true, true) => return Err(Error::MeekConflict(u, v)),
                (true, false) => wanted.push((u, v)),
                (false, true) => wanted.push((v, u)),
                (false, false) => {}
            }
        }
        if wanted.is_empty() {
            break;
        }
        for (u, v) in wanted {
            g.orient_unchecked(u, v);
        }
    }
    if g.has_directed_cycle() {
        return Err(Error::DirectedCycle);
    }
    Ok(g)
}

/// Essential graph (CPDAG) of a DAG: v-structure arcs plus their Meek
/// closure, every other adjacency left undirected.
pub fn cpdag_of(d: &MixedGraph) -> Result<MixedGraph> {
    if !d.is_dag() {
        return Err(Error::NotDag);
    }
    let mut g = d.skeleton();
    for vs in v_structures(d) {
        if g.has_edge(vs.left, vs.collider) {
            g.orient_unchecked(vs.left, vs.collider);
        }
        if g.has_edge(vs.right, vs.collider) {
            g.orient_unchecked(vs.right, vs.collider);
        }
    }
    meek_closure(&g)
}

/// A DAG with the skeleton and arcs of `g` that has no directed cycle and no
/// v-structure beyond those already formed by the arcs of `g`, or `None`
/// when no such DAG exists.
///
/// Repeatedly removes a vertex that has no outgoing arcs and whose
/// undirected neighbours are adjacent to all of its other neighbours,
/// orienting its undirected edges towards it.
pub fn consistent_extension(g: &MixedGraph) -> Option<MixedGraph> {
    let n = g.n();
    let mut alive = FixedBitSet::with_capacity(n);
    alive.insert_range(..);
    let adj: Vec<FixedBitSet> = (0..n).map(|v| g.adjacency_set(v)).collect();
    let mut out = g.clone();
    for _ in 0..n {
        let sink = alive.ones().find(|&x| {
            if intersects(g.children_set(x), &alive) {
                return false;
            }
            let mut nb = adj[x].clone();
            nb.intersect_with(&alive);
            g.undirected_set(x)
                .ones()
                .filter(|&y| alive.contains(y))
                .all(|y| nb.ones().all(|z| z == y || adj[y].contains(z)))
        })?;
        for y in g.undirected_set(sink).ones().filter(|&y| alive.contains(y)) {
            out.orient_unchecked(y, sink);
        }
        alive.set(sink, false);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v_structure_examples() {
        let collider = MixedGraph::from_arcs(3, &[(0, 2), (1, 2)]).unwrap();
        let vs: Vec<_> = v_structures(&collider).into_iter().collect();
        assert_eq!(
            vs,
            vec![VStructure {
                left: 0,
                collider: 2,
                right: 1
            }]
        );
        let shielded = MixedGraph::from_arcs(3, &[(0, 2), (1, 2), (0, 1)]).unwrap();
        assert!(v_structures(&shielded).is_empty());
        let chain = MixedGraph::from_arcs(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(v_structures(&chain).is_empty());
    }

    #[test]
    fn meek_r1_propagates() {
        // A -> B - C, A and C non-adjacent
        let g = MixedGraph::from_parts(3, &[(0, 1)], &[(1, 2)]).unwrap();
        let m = meek_closure(&g).unwrap();
        assert!(m.has_arc(1, 2));
    }

    #[test]
    fn meek_leaves_undirected_triangle() {
        let g = MixedGraph::complete(3);
        assert_eq!(meek_closure(&g).unwrap(), g);
    }

    #[test]
    fn meek_identity_on_dag() {
        let d = MixedGraph::from_arcs(4, &[(0, 1), (1, 2), (0, 3)]).unwrap();
        assert_eq!(meek_closure(&d).unwrap(), d);
    }

    #[test]
    fn meek_r2() {
        // a -> c -> b, a - b
        let g = MixedGraph::from_parts(3, &[(0, 2), (2, 1)], &[(0, 1)]).unwrap();
        assert!(meek_closure(&g).unwrap().has_arc(0, 1));
    }

    #[test]
    fn meek_r3() {
        // a - c, a - d, a - b, c -> b <- d, c and d non-adjacent
        let (a, b, c, d) = (0, 1, 2, 3);
        let g = MixedGraph::from_parts(4, &[(c, b), (d, b)], &[(a, c), (a, d), (a, b)]).unwrap();
        assert!(meek_closure(&g).unwrap().has_arc(a, b));
    }

    #[test]
    fn meek_r4() {
        // a - b, c -> d -> b, a - c, a - d, c and b non-adjacent
        let (a, b, c, d) = (0, 1, 2, 3);
        let g = MixedGraph::from_parts(4, &[(c, d), (d, b)], &[(a, b), (a, c), (a, d)]).unwrap();
        let m = meek_closure(&g).unwrap();
        assert!(m.has_arc(a, b));
    }

    #[test]
    fn meek_rejects_cycles() {
        let g = MixedGraph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(meek_closure(&g), Err(Error::DirectedCycle));
    }

    #[test]
    fn meek_reports_conflicts() {
        // 0 -> 1 - 2 <- 3 with 0,2 and 1,3 non-adjacent: R1 wants 1 -> 2 and 2 -> 1
        let g = MixedGraph::from_parts(4, &[(0, 1), (3, 2)], &[(1, 2)]).unwrap();
        assert_eq!(meek_closure(&g), Err(Error::MeekConflict(1, 2)));
    }

    #[test]
    fn cpdag_examples() {
        let collider = MixedGraph::from_arcs(3, &[(0, 2), (1, 2)]).unwrap();
        assert_eq!(cpdag_of(&collider).unwrap(), collider);

        let path = MixedGraph::from_arcs(3, &[(0, 1), (1, 2)]).unwrap();
        let c = cpdag_of(&path).unwrap();
        assert!(c.is_undirected());
        assert_eq!(c.edges(), vec![(0, 1), (1, 2)]);

        let single = MixedGraph::from_arcs(2, &[(0, 1)]).unwrap();
        assert_eq!(cpdag_of(&single).unwrap().edges(), vec![(0, 1)]);

        assert_eq!(cpdag_of(&MixedGraph::complete(2)), Err(Error::NotDag));
    }

    #[test]
    fn extension_examples() {
        let e = consistent_extension(&MixedGraph::complete(2)).unwrap();
        assert!(e.is_dag());
        assert_eq!(e.num_arcs(), 1);

        let g = MixedGraph::from_parts(3, &[(0, 1), (2, 1)], &[(0, 2)]).unwrap();
        let e = consistent_extension(&g).unwrap();
        assert!(e.is_dag());
        assert!(e.has_arc(0, 1) && e.has_arc(2, 1));

        let cyc = MixedGraph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(consistent_extension(&cyc).is_none());
    }

    #[test]
    fn extension_refuses_forced_new_collider() {
        // 0 -> 1 - 2 <- 3: any orientation of 1 - 2 adds a new collider
        let g = MixedGraph::from_parts(4, &[(0, 1), (3, 2)], &[(1, 2)]).unwrap();
        assert!(consistent_extension(&g).is_none());
    }
}
