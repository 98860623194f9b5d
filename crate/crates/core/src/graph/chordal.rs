use super::{MixedGraph, VertexOrder};
use crate::{Error, Result};

/// Maximum cardinality search. Visits next the unvisited vertex with the
/// most visited neighbours (lowest index on ties), starting from vertex 0.
///
/// On a chordal graph the reverse of the returned order is a perfect
/// elimination ordering.
pub fn max_cardinality_search(g: &MixedGraph) -> Result<VertexOrder> {
    if !g.is_undirected() {
        return Err(Error::HasArcs);
    }
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !visited[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited vertex remains");
        visited[v] = true;
        order.push(v);
        for w in g.undirected_neighbors(v) {
            if !visited[w] {
                weight[w] += 1;
            }
        }
    }
    VertexOrder::new(order)
}

/// True if, for every vertex, its neighbours later in `order` form a clique.
pub fn is_perfect_elimination_order(g: &MixedGraph, order: &VertexOrder) -> bool {
    if order.len() != g.n() {
        return false;
    }
    let pos = order.positions();
    for &v in order.as_slice() {
        let later: Vec<usize> = g.adjacents(v).into_iter().filter(|&w| pos[w] > pos[v]).collect();
        for (i, &a) in later.iter().enumerate() {
            if later[i + 1..].iter().any(|&b| !g.adjacent(a, b)) {
                return false;
            }
        }
    }
    true
}

pub fn is_chordal(g: &MixedGraph) -> Result<bool> {
    let order = max_cardinality_search(g)?;
    Ok(is_perfect_elimination_order(g, &order.reversed()))
}

/// Size of the largest clique of a chordal graph.
pub fn clique_number(g: &MixedGraph) -> Result<usize> {
    let peo = max_cardinality_search(g)?.reversed();
    if !is_perfect_elimination_order(g, &peo) {
        return Err(Error::NotChordal);
    }
    let pos = peo.positions();
    Ok(peo
        .as_slice()
        .iter()
        .map(|&v| 1 + g.undirected_neighbors(v).filter(|&w| pos[w] > pos[v]).count())
        .max()
        .unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4() -> MixedGraph {
        MixedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    fn all_perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_perms(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn mcs_single_vertex() {
        let g = MixedGraph::new(1);
        assert_eq!(max_cardinality_search(&g).unwrap().as_slice(), &[0]);
    }

    #[test]
    fn mcs_triangle_gives_peo() {
        let g = MixedGraph::complete(3);
        let order = max_cardinality_search(&g).unwrap();
        assert!(is_perfect_elimination_order(&g, &order.reversed()));
    }

    #[test]
    fn four_cycle_has_no_peo() {
        let g = cycle4();
        let order = max_cardinality_search(&g).unwrap();
        assert!(!is_perfect_elimination_order(&g, &order.reversed()));
        // exhaustive: none of the 24 orderings is a PEO
        for p in all_perms(4) {
            assert!(!is_perfect_elimination_order(&g, &VertexOrder::new(p).unwrap()));
        }
    }

    #[test]
    fn mcs_rejects_arcs() {
        let g = MixedGraph::from_arcs(2, &[(0, 1)]).unwrap();
        assert_eq!(max_cardinality_search(&g), Err(Error::HasArcs));
        assert_eq!(is_chordal(&g), Err(Error::HasArcs));
    }

    #[test]
    fn chordality_examples() {
        let tree = MixedGraph::from_edges(5, &[(0, 1), (0, 2), (2, 3), (2, 4)]).unwrap();
        assert!(is_chordal(&tree).unwrap());
        assert!(!is_chordal(&cycle4()).unwrap());
        let mut chorded = cycle4();
        chorded.add_edge(0, 2).unwrap();
        assert!(is_chordal(&chorded).unwrap());
    }

    #[test]
    fn clique_number_examples() {
        assert_eq!(clique_number(&MixedGraph::new(3)).unwrap(), 1);
        assert_eq!(clique_number(&MixedGraph::complete(3)).unwrap(), 3);
        let path = MixedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(clique_number(&path).unwrap(), 2);
        assert_eq!(clique_number(&cycle4()), Err(Error::NotChordal));
    }
}
