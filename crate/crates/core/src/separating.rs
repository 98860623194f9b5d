//! Separating systems: families of vertex sets that split every pair of
//! elements, or every edge of a graph.

use serde::{Deserialize, Serialize};

use crate::graph::{clique_number, max_cardinality_search, MixedGraph};
use crate::{Error, Result};

/// A family of intervention targets over `n` elements.
///
/// `k` is the size bound of an (n, k)-system and is absent for systems
/// built from a graph colouring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatingSystem {
    pub n: usize,
    pub k: Option<usize>,
    pub targets: Vec<Vec<usize>>,
}

impl SeparatingSystem {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("separating system is always serialisable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sys: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        for t in &sys.targets {
            if let Some(&v) = t.iter().find(|&&v| v >= sys.n) {
                return Err(Error::VertexOutOfRange { vertex: v, n: sys.n });
            }
        }
        Ok(sys)
    }
}

/// `n` labels of length `l = ceil(log_a n)` over the letters `0..=a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMatrix {
    pub a: usize,
    pub rows: Vec<Vec<usize>>,
}

impl LabelMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Number of letters per label.
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn column(&self, d: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(move |r| r[d])
    }
}

/// Smallest `l >= 1` with `a^l >= n`.
pub fn ceil_log(n: usize, a: usize) -> usize {
    let mut l = 0;
    let mut p = 1usize;
    while p < n {
        p = p.saturating_mul(a);
        l += 1;
    }
    l.max(1)
}

fn div_ceil(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Builds distinct labels digit by digit. For digit `d` with block length
/// `a^(d-1)`: the first `p_d * a^d` positions cycle through `0..a` in
/// blocks, the `r_d` leftover positions count up in blocks of
/// `ceil(r_d / a)`, and every position beyond `a^(d-1) * p_(d-1)` is shifted
/// up by one letter.
pub fn label_elements(n: usize, a: usize) -> Result<LabelMatrix> {
    if n < 2 || a < 2 {
        return Err(Error::InvalidArgument(format!(
            "labelling needs n >= 2 and a >= 2, got n={n}, a={a}"
        )));
    }
    let l = ceil_log(n, a);
    let mut rows = vec![Vec::with_capacity(l); n];
    let mut block = 1usize;
    for _ in 0..l {
        let span = block.saturating_mul(a);
        let (p_d, r_d) = (n / span, n % span);
        let limit = block * (n / block);
        let mut col = Vec::with_capacity(n);
        for j in 0..p_d * span {
            col.push((j / block) % a);
        }
        if r_d > 0 {
            let rep = div_ceil(r_d, a);
            for j in 0..r_d {
                col.push(j / rep);
            }
        }
        for (i, letter) in col.into_iter().enumerate() {
            rows[i].push(if i + 1 > limit { letter + 1 } else { letter });
        }
        block = span;
    }
    let m = LabelMatrix { a, rows };
    let mut sorted = m.rows.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), n, "labelling produced duplicate labels for n={n}, a={a}");
    Ok(m)
}

/// An (n, k)-separating system with every target of size at most `k`.
/// Targets are the sets of elements sharing a non-zero letter at one label
/// position.
pub fn nk_separating_system(n: usize, k: usize) -> Result<SeparatingSystem> {
    if k == 0 || 2 * k >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= k < n/2, got n={n}, k={k}")));
    }
    let a = div_ceil(n, k);
    let labels = label_elements(n, a)?;
    let mut targets = Vec::new();
    for pos in 0..labels.width() {
        for b in 1..=a {
            let t: Vec<usize> = (0..n).filter(|&j| labels.rows[j][pos] == b).collect();
            if !t.is_empty() {
                targets.push(t);
            }
        }
    }
    Ok(SeparatingSystem { n, k: Some(k), targets })
}

/// Colour classes of a greedy colouring along the maximum cardinality
/// search order. Uses exactly `clique_number(g)` colours on a chordal graph.
pub fn g_separating_system(g: &MixedGraph) -> Result<SeparatingSystem> {
    let omega = clique_number(g)?;
    let order = max_cardinality_search(g)?;
    let mut color = vec![usize::MAX; g.n()];
    for &v in order.as_slice() {
        let used: Vec<usize> = g
            .undirected_neighbors(v)
            .map(|w| color[w])
            .filter(|&c| c != usize::MAX)
            .collect();
        color[v] = (0..).find(|c| !used.contains(c)).expect("unbounded range");
    }
    let colors = color.iter().copied().max().map_or(0, |c| c + 1);
    debug_assert!(g.n() == 0 || colors == omega);
    let mut targets = vec![Vec::new(); colors];
    for (v, &c) in color.iter().enumerate() {
        targets[c].push(v);
    }
    Ok(SeparatingSystem {
        n: g.n(),
        k: None,
        targets,
    })
}

/// With `g` absent, checks that every pair of elements is split by some
/// target. With `g` present, checks that every adjacency of `g` is cut.
pub fn verify_separating(s: &SeparatingSystem, g: Option<&MixedGraph>) -> bool {
    let mut member = vec![vec![false; s.targets.len()]; s.n];
    for (t, target) in s.targets.iter().enumerate() {
        for &v in target {
            if v >= s.n {
                return false;
            }
            member[v][t] = true;
        }
    }
    let split = |u: usize, v: usize| member[u] != member[v];
    match g {
        None => (0..s.n).all(|u| (u + 1..s.n).all(|v| split(u, v))),
        Some(g) => g.n() == s.n && g.edges().into_iter().chain(g.arcs()).all(|(u, v)| split(u, v)),
    }
}

/// Which construction to apply to each chain component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SepSysKind {
    /// Greedy colouring, one target per colour.
    Coloring,
    /// (n, k)-system with the given size bound.
    Nk(usize),
}

/// Targets covering every undirected edge of an essential graph, built per
/// chain component and expressed in global vertex ids.
///
/// For (n, k)-systems a component of size `n_c` uses the bound
/// `min(k, ceil(n_c/2) - 1)`; components of size two get the single target
/// holding their first vertex.
pub fn system_for_essential(essential: &MixedGraph, kind: SepSysKind) -> Result<SeparatingSystem> {
    let mut targets = Vec::new();
    for comp in essential.chain_components() {
        if comp.is_singleton() {
            continue;
        }
        let local = match kind {
            SepSysKind::Coloring => g_separating_system(&comp.graph)?.targets,
            SepSysKind::Nk(k) => {
                if k == 0 {
                    return Err(Error::InvalidArgument("k must be at least 1".into()));
                }
                let nc = comp.len();
                let kc = k.min(div_ceil(nc, 2).saturating_sub(1));
                if kc == 0 {
                    vec![vec![0]]
                } else {
                    nk_separating_system(nc, kc)?.targets
                }
            }
        };
        for t in local {
            let mut global: Vec<usize> = t.into_iter().map(|v| comp.vertices[v]).collect();
            global.sort_unstable();
            targets.push(global);
        }
    }
    let k = match kind {
        SepSysKind::Coloring => None,
        SepSysKind::Nk(k) => Some(k),
    };
    Ok(SeparatingSystem {
        n: essential.n(),
        k,
        targets,
    })
}
