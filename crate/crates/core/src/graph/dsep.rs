use std::collections::VecDeque;

use fixedbitset::FixedBitSet;

use super::MixedGraph;
use crate::{Error, Result};

/// d-separation of `xs` and `ys` given `zs` in a DAG, decided on the
/// moralised ancestral graph of `xs ∪ ys ∪ zs`.
pub fn d_separated(d: &MixedGraph, xs: &[usize], ys: &[usize], zs: &[usize]) -> Result<bool> {
    if !d.is_dag() {
        return Err(Error::NotDag);
    }
    let n = d.n();
    let mut member = vec![0u8; n];
    for (tag, set) in [(1u8, xs), (2, ys), (4, zs)] {
        for &v in set {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            if member[v] != 0 && member[v] != tag {
                return Err(Error::OverlappingSets);
            }
            member[v] = tag;
        }
    }

    // ancestors of all three sets
    let mut anc = FixedBitSet::with_capacity(n);
    let mut stack: Vec<usize> = xs.iter().chain(ys).chain(zs).copied().collect();
    while let Some(v) = stack.pop() {
        if anc.contains(v) {
            continue;
        }
        anc.insert(v);
        stack.extend(d.parents(v).filter(|&p| !anc.contains(p)));
    }

    // moral graph restricted to the ancestral set
    let mut nb = vec![FixedBitSet::with_capacity(n); n];
    for v in anc.ones() {
        let pa: Vec<usize> = d.parents(v).collect();
        for (i, &p) in pa.iter().enumerate() {
            nb[p].insert(v);
            nb[v].insert(p);
            for &q in &pa[i + 1..] {
                nb[p].insert(q);
                nb[q].insert(p);
            }
        }
    }

    let mut seen = FixedBitSet::with_capacity(n);
    let mut queue: VecDeque<usize> = xs.iter().copied().collect();
    for &x in xs {
        seen.insert(x);
    }
    while let Some(v) = queue.pop_front() {
        if member[v] == 2 {
            return Ok(false);
        }
        for w in nb[v].ones() {
            if !seen.contains(w) && member[w] != 4 {
                seen.insert(w);
                queue.push_back(w);
            }
        }
    }
    Ok(true)
}
