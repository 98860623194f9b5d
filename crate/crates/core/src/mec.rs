//! Counting, enumeration and uniform sampling of Markov equivalence classes.
//!
//! Every acyclic moral orientation (AMO) of a connected chordal graph has a
//! unique source. Fixing the source `v`, orienting its edges outwards and
//! closing under Meek's rules leaves a chain graph whose undirected
//! components are again connected and chordal, so
//!
//! ```text
//! |AMO(G)| = sum over v of  prod over components H of G_v  |AMO(H)|
//! ```
//!
//! The same decomposition fixes a canonical enumeration order, and uniform
//! sampling draws an index and unranks it.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;

use crate::graph::{is_chordal, meek_closure, ChainComponent, MixedGraph};
use crate::{Error, Result};

/// Default ceiling on the number of DAGs materialised by an enumeration.
pub const DEFAULT_MEMBER_CAP: u128 = 10_000_000;

/// All AMOs of a connected chordal graph, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmoList {
    pub component: MixedGraph,
    pub members: Vec<MixedGraph>,
}

impl AmoList {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

type Key = Vec<u32>;

fn key_of(g: &MixedGraph) -> Key {
    let mut k = Vec::with_capacity(1 + 2 * g.num_edges());
    k.push(g.n() as u32);
    for (u, v) in g.edges() {
        k.push(u as u32);
        k.push(v as u32);
    }
    k
}

/// Orients every edge at `root` away from it and closes under Meek's rules.
/// Returns the closed graph and its non-trivial chain components.
fn root_split(g: &MixedGraph, root: usize) -> Result<(MixedGraph, Vec<ChainComponent>)> {
    let mut h = g.clone();
    let nbrs: Vec<usize> = g.undirected_neighbors(root).collect();
    for w in nbrs {
        h.orient_unchecked(root, w);
    }
    let closed = meek_closure(&h)?;
    let comps = closed
        .chain_components()
        .into_iter()
        .filter(|c| !c.is_singleton())
        .collect();
    Ok((closed, comps))
}

fn overflow() -> Error {
    Error::ResourceLimit("MEC size overflows 128 bits".into())
}

fn check_uccg(g: &MixedGraph) -> Result<()> {
    if !g.is_undirected() {
        return Err(Error::HasArcs);
    }
    if !is_chordal(g)? {
        return Err(Error::NotChordal);
    }
    if !g.is_connected() {
        return Err(Error::NotConnected);
    }
    Ok(())
}

/// Memoised AMO counter keyed by the labelled edge list of a component.
/// Safe to share between threads.
#[derive(Debug)]
pub struct MecCounter {
    memo: Mutex<HashMap<Key, u128>>,
    cap: u128,
}

impl Default for MecCounter {
    fn default() -> Self {
        Self::new(DEFAULT_MEMBER_CAP)
    }
}

impl MecCounter {
    /// `cap` bounds how many DAGs an enumeration may materialise.
    pub fn new(cap: u128) -> Self {
        Self {
            memo: Mutex::new(HashMap::new()),
            cap,
        }
    }

    pub fn cap(&self) -> u128 {
        self.cap
    }

    /// Number of AMOs of a connected chordal undirected graph.
    pub fn count_amos(&self, g: &MixedGraph) -> Result<u128> {
        check_uccg(g)?;
        self.count_unchecked(g)
    }

    fn count_unchecked(&self, g: &MixedGraph) -> Result<u128> {
        if g.n() <= 1 {
            return Ok(1);
        }
        if g.num_edges() == 1 {
            return Ok(2);
        }
        let key = key_of(g);
        if let Some(&c) = self.memo.lock().expect("memo poisoned").get(&key) {
            return Ok(c);
        }
        let mut total: u128 = 0;
        for root in 0..g.n() {
            let (_, comps) = root_split(g, root)?;
            let mut prod: u128 = 1;
            for c in &comps {
                prod = prod.checked_mul(self.count_unchecked(&c.graph)?).ok_or_else(overflow)?;
            }
            total = total.checked_add(prod).ok_or_else(overflow)?;
        }
        self.memo.lock().expect("memo poisoned").insert(key, total);
        Ok(total)
    }

    /// Product of component AMO counts of a chain graph.
    pub fn mec_size(&self, m: &MixedGraph) -> Result<u128> {
        let mut total: u128 = 1;
        for c in m.chain_components() {
            if c.is_singleton() {
                continue;
            }
            if !is_chordal(&c.graph)? {
                return Err(Error::NotChordal);
            }
            total = total
                .checked_mul(self.count_unchecked(&c.graph)?)
                .ok_or_else(overflow)?;
        }
        Ok(total)
    }

    /// All AMOs of `g` in canonical order.
    pub fn enumerate_amos(&self, g: &MixedGraph) -> Result<AmoList> {
        check_uccg(g)?;
        let count = self.count_unchecked(g)?;
        self.ensure_within_cap(count)?;
        let mut cache = HashMap::new();
        let members = self.enumerate_unchecked(g, &mut cache)?;
        debug_assert_eq!(members.len() as u128, count);
        Ok(AmoList {
            component: g.clone(),
            members,
        })
    }

    fn ensure_within_cap(&self, count: u128) -> Result<()> {
        if count > self.cap {
            return Err(Error::ResourceLimit(format!(
                "equivalence class has {count} members, cap is {}",
                self.cap
            )));
        }
        Ok(())
    }

    fn enumerate_unchecked(
        &self,
        g: &MixedGraph,
        cache: &mut HashMap<Key, Vec<MixedGraph>>,
    ) -> Result<Vec<MixedGraph>> {
        if g.num_edges() == 0 {
            return Ok(vec![g.clone()]);
        }
        let key = key_of(g);
        if let Some(v) = cache.get(&key) {
            return Ok(v.clone());
        }
        let mut out = Vec::new();
        for root in 0..g.n() {
            let (closed, comps) = root_split(g, root)?;
            let lists: Vec<Vec<MixedGraph>> = comps
                .iter()
                .map(|c| self.enumerate_unchecked(&c.graph, cache))
                .collect::<Result<_>>()?;
            // odometer over the component lists, last component fastest
            let mut idx = vec![0usize; lists.len()];
            'odometer: loop {
                let mut d = closed.clone();
                for (ci, c) in comps.iter().enumerate() {
                    stitch(&mut d, c, &lists[ci][idx[ci]]);
                }
                out.push(d);
                for pos in (0..lists.len()).rev() {
                    idx[pos] += 1;
                    if idx[pos] < lists[pos].len() {
                        continue 'odometer;
                    }
                    idx[pos] = 0;
                }
                break;
            }
        }
        cache.insert(key, out.clone());
        Ok(out)
    }

    /// The AMO at position `index` of the canonical enumeration, without
    /// materialising the list.
    pub fn unrank(&self, g: &MixedGraph, index: u128) -> Result<MixedGraph> {
        check_uccg(g)?;
        let count = self.count_unchecked(g)?;
        if index >= count {
            return Err(Error::InvalidArgument(format!("index {index} out of range 0..{count}")));
        }
        self.unrank_unchecked(g, index)
    }

    fn unrank_unchecked(&self, g: &MixedGraph, mut index: u128) -> Result<MixedGraph> {
        if g.num_edges() == 0 {
            return Ok(g.clone());
        }
        for root in 0..g.n() {
            let (closed, comps) = root_split(g, root)?;
            let counts: Vec<u128> = comps
                .iter()
                .map(|c| self.count_unchecked(&c.graph))
                .collect::<Result<_>>()?;
            let block = counts
                .iter()
                .try_fold(1u128, |a, &c| a.checked_mul(c))
                .ok_or_else(overflow)?;
            if index >= block {
                index -= block;
                continue;
            }
            let mut digits = vec![0u128; counts.len()];
            for i in (0..counts.len()).rev() {
                digits[i] = index % counts[i];
                index /= counts[i];
            }
            let mut d = closed;
            for (c, &digit) in comps.iter().zip(&digits) {
                let member = self.unrank_unchecked(&c.graph, digit)?;
                stitch(&mut d, c, &member);
            }
            return Ok(d);
        }
        unreachable!("index checked against the total count")
    }

    /// Uniform draw from the DAGs that extend the chain graph `m`.
    pub fn sample_uniform_dag<R: Rng + ?Sized>(&self, m: &MixedGraph, rng: &mut R) -> Result<MixedGraph> {
        let mut d = m.clone();
        for c in m.chain_components() {
            if c.is_singleton() {
                continue;
            }
            if !is_chordal(&c.graph)? {
                return Err(Error::NotChordal);
            }
            let count = self.count_unchecked(&c.graph)?;
            let idx = rng.random_range(0..count);
            let member = self.unrank_unchecked(&c.graph, idx)?;
            stitch(&mut d, &c, &member);
        }
        Ok(d)
    }

    /// Every DAG extending the chain graph `m`, components varied in
    /// odometer order with the last component fastest.
    pub fn enumerate_mec(&self, m: &MixedGraph) -> Result<Vec<MixedGraph>> {
        let size = self.mec_size(m)?;
        self.ensure_within_cap(size)?;
        let comps: Vec<ChainComponent> = m.chain_components().into_iter().filter(|c| !c.is_singleton()).collect();
        let mut cache = HashMap::new();
        let lists: Vec<Vec<MixedGraph>> = comps
            .iter()
            .map(|c| self.enumerate_unchecked(&c.graph, &mut cache))
            .collect::<Result<_>>()?;
        let mut out: Vec<MixedGraph> = vec![m.clone()];
        for (c, list) in comps.iter().zip(&lists) {
            let mut next = Vec::with_capacity(out.len() * list.len());
            for base in &out {
                for member in list {
                    let mut d = base.clone();
                    stitch(&mut d, c, member);
                    next.push(d);
                }
            }
            out = next;
        }
        Ok(out)
    }
}

/// Copies the arcs of a component-local DAG into `d`.
fn stitch(d: &mut MixedGraph, c: &ChainComponent, member: &MixedGraph) {
    for (u, v) in member.arcs() {
        d.orient_unchecked(c.vertices[u], c.vertices[v]);
    }
}

/// AMOs of a connected chordal undirected graph, default cap.
pub fn enumerate_amos(g: &MixedGraph) -> Result<AmoList> {
    MecCounter::default().enumerate_amos(g)
}

pub fn count_amos(g: &MixedGraph) -> Result<u128> {
    MecCounter::default().count_amos(g)
}

/// Number of DAGs extending the chain graph `m`.
pub fn mec_size(m: &MixedGraph) -> Result<u128> {
    MecCounter::default().mec_size(m)
}

pub fn sample_uniform_dag<R: Rng + ?Sized>(m: &MixedGraph, rng: &mut R) -> Result<MixedGraph> {
    MecCounter::default().sample_uniform_dag(m, rng)
}

pub fn enumerate_mec(m: &MixedGraph) -> Result<Vec<MixedGraph>> {
    MecCounter::default().enumerate_mec(m)
}
