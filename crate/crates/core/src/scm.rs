//! Discrete structural causal models and exact dense probability tables.
//!
//! Joint tables are stored row-major with the last vertex varying fastest.
//! A CPT row is addressed by the values of the vertex's parents taken in
//! ascending vertex order, again with the last parent varying fastest.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::MixedGraph;
use crate::{Error, Result};

/// Largest dense table built unless a caller asks otherwise.
pub const DEFAULT_TABLE_BUDGET: usize = 1 << 24;
/// Smallest CPT entry accepted by [`DiscreteScm::new`].
pub const DEFAULT_MIN_PROB: f64 = 0.01;
const MASS_TOL: f64 = 1e-9;

/// One value per vertex.
pub type Assignment = Vec<usize>;

/// A perfect intervention `do(W = w)`; empty `targets` is observational.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Intervention {
    targets: Vec<usize>,
    values: Vec<usize>,
}

impl Intervention {
    /// Pairs are sorted by target vertex.
    pub fn new(targets: &[usize], values: &[usize]) -> Result<Self> {
        if targets.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} targets but {} values",
                targets.len(),
                values.len()
            )));
        }
        let mut pairs: Vec<(usize, usize)> = targets.iter().copied().zip(values.iter().copied()).collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("repeated intervention target".into()));
        }
        Ok(Self {
            targets: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn observational() -> Self {
        Self::default()
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn is_observational(&self) -> bool {
        self.targets.is_empty()
    }

    /// Value forced on `v`, if any.
    pub fn value_of(&self, v: usize) -> Option<usize> {
        self.targets.binary_search(&v).ok().map(|i| self.values[i])
    }

    pub fn check(&self, cards: &[usize]) -> Result<()> {
        for (&t, &x) in self.targets.iter().zip(&self.values) {
            if t >= cards.len() {
                return Err(Error::VertexOutOfRange {
                    vertex: t,
                    n: cards.len(),
                });
            }
            if x >= cards[t] {
                return Err(Error::InvalidArgument(format!(
                    "value {x} outside alphabet of vertex {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Dense probability table over all joint assignments.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    cards: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<f64>,
}

fn strides_of(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

fn table_size(cards: &[usize], budget: usize) -> Result<usize> {
    let mut size = 1usize;
    for &c in cards {
        size = size.checked_mul(c).filter(|&s| s <= budget).ok_or_else(|| {
            Error::ResourceLimit(format!(
                "joint table over {} vertices exceeds budget {budget}",
                cards.len()
            ))
        })?;
    }
    Ok(size)
}

/// Advances `digits` as a mixed-radix counter, last digit fastest.
fn step(digits: &mut [usize], cards: &[usize]) {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < cards[i] {
            return;
        }
        digits[i] = 0;
    }
}

impl JointTable {
    pub fn new(cards: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let size = table_size(&cards, usize::MAX)?;
        if probs.len() != size {
            return Err(Error::InvalidArgument(format!(
                "expected {size} entries, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument("negative or non-finite probability".into()));
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("total mass {mass} is not 1")));
        }
        Ok(Self {
            strides: strides_of(&cards),
            cards,
            probs,
        })
    }

    /// Relative frequencies of `samples`.
    pub fn empirical(cards: &[usize], samples: &[Assignment]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::ZeroMass);
        }
        let size = table_size(cards, DEFAULT_TABLE_BUDGET)?;
        let strides = strides_of(cards);
        let mut probs = vec![0.0; size];
        let w = 1.0 / samples.len() as f64;
        for s in samples {
            let idx: usize = s.iter().zip(&strides).map(|(x, st)| x * st).sum();
            probs[idx] += w;
        }
        Ok(Self {
            cards: cards.to_vec(),
            strides,
            probs,
        })
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n(&self) -> usize {
        self.cards.len()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, a: &[usize]) -> usize {
        a.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    pub fn assignment_of(&self, mut idx: usize) -> Assignment {
        let mut a = vec![0; self.n()];
        for i in (0..self.n()).rev() {
            a[i] = idx % self.cards[i];
            idx /= self.cards[i];
        }
        a
    }

    pub fn prob(&self, a: &[usize]) -> f64 {
        self.probs[self.index_of(a)]
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal over `vars`, axes in the order given.
    pub fn marginal(&self, vars: &[usize]) -> Result<JointTable> {
        for &v in vars {
            if v >= self.n() {
                return Err(Error::VertexOutOfRange { vertex: v, n: self.n() });
            }
        }
        let cards: Vec<usize> = vars.iter().map(|&v| self.cards[v]).collect();
        let strides = strides_of(&cards);
        let mut probs = vec![0.0; cards.iter().product()];
        let mut digits = vec![0usize; self.n()];
        for &p in &self.probs {
            let idx: usize = vars.iter().zip(&strides).map(|(&v, s)| digits[v] * s).sum();
            probs[idx] += p;
            step(&mut digits, &self.cards);
        }
        Ok(JointTable { cards, strides, probs })
    }
}

/// `P(target | given = given_values)` as a vector over the target alphabet.
pub fn conditional(j: &JointTable, target: usize, given: &[usize], given_values: &[usize]) -> Result<Vec<f64>> {
    if given.len() != given_values.len() {
        return Err(Error::InvalidArgument("given and given_values differ in length".into()));
    }
    if given.contains(&target) {
        return Err(Error::OverlappingSets);
    }
    let mut vars = given.to_vec();
    vars.push(target);
    let m = j.marginal(&vars)?;
    for (&v, &x) in given.iter().zip(given_values) {
        if x >= j.cards[v] {
            return Err(Error::InvalidArgument(format!(
                "value {x} outside alphabet of vertex {v}"
            )));
        }
    }
    let base: usize = given_values.iter().zip(&m.strides).map(|(x, s)| x * s).sum();
    let row: Vec<f64> = (0..j.cards[target]).map(|y| m.probs[base + y]).collect();
    let mass: f64 = row.iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(row.into_iter().map(|p| p / mass).collect())
}

/// `prod over v not in W of P(v | pa_d(v))` on assignments that agree with
/// the intervention, zero elsewhere. Every conditional is read off `j`
/// under the parent sets of `d`.
pub fn truncated_factorization(j: &JointTable, d: &MixedGraph, iv: &Intervention) -> Result<JointTable> {
    if d.n() != j.n() {
        return Err(Error::VertexCountMismatch(d.n(), j.n()));
    }
    if !d.is_dag() {
        return Err(Error::NotDag);
    }
    iv.check(&j.cards)?;

    // family tables P(v | pa(v)) indexed over (pa ascending, v)
    struct Factor {
        vars: Vec<usize>,
        strides: Vec<usize>,
        table: Vec<f64>,
    }
    let mut factors = Vec::new();
    for v in 0..j.n() {
        if iv.value_of(v).is_some() {
            continue;
        }
        let mut vars: Vec<usize> = d.parents(v).collect();
        vars.push(v);
        let m = j.marginal(&vars)?;
        let cv = j.cards[v];
        let mut table = m.probs.clone();
        for row in table.chunks_mut(cv) {
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                row.iter_mut().for_each(|p| *p /= mass);
            } else {
                row.iter_mut().for_each(|p| *p = f64::NAN);
            }
        }
        factors.push(Factor {
            strides: m.strides,
            vars,
            table,
        });
    }

    let mut probs = vec![0.0; j.len()];
    let mut digits = vec![0usize; j.n()];
    for p in probs.iter_mut() {
        let consistent = iv.targets.iter().zip(&iv.values).all(|(&t, &x)| digits[t] == x);
        if consistent {
            let mut prod = 1.0;
            for f in &factors {
                let idx: usize = f.vars.iter().zip(&f.strides).map(|(&v, s)| digits[v] * s).sum();
                prod *= f.table[idx];
            }
            if prod.is_nan() {
                return Err(Error::ZeroMass);
            }
            *p = prod;
        }
        step(&mut digits, &j.cards);
    }
    Ok(JointTable {
        cards: j.cards.clone(),
        strides: j.strides.clone(),
        probs,
    })
}

fn check_same_shape(p: &JointTable, q: &JointTable) -> Result<()> {
    if p.cards != q.cards {
        return Err(Error::InvalidArgument("tables have different shapes".into()));
    }
    Ok(())
}

/// `sum p ln(p / q)` with `0 ln(0 / q) = 0`.
pub fn kl_divergence(p: &JointTable, q: &JointTable) -> Result<f64> {
    check_same_shape(p, q)?;
    let mut s = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::NotAbsolutelyContinuous);
            }
            s += a * (a / b).ln();
        }
    }
    Ok(s.max(0.0))
}

/// Total variation distance `½ sum |p - q|`.
pub fn tvd(p: &JointTable, q: &JointTable) -> Result<f64> {
    check_same_shape(p, q)?;
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// A DAG with one conditional probability table per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteScm {
    dag: MixedGraph,
    cards: Vec<usize>,
    cpts: Vec<Vec<Vec<f64>>>,
    order: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ScmJson {
    dag: MixedGraph,
    cardinalities: Vec<usize>,
    cpts: Vec<Vec<Vec<f64>>>,
}

impl Serialize for DiscreteScm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScmJson {
            dag: self.dag.clone(),
            cardinalities: self.cards.clone(),
            cpts: self.cpts.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteScm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ScmJson::deserialize(d)?;
        DiscreteScm::new(j.dag, j.cardinalities, j.cpts).map_err(serde::de::Error::custom)
    }
}

impl DiscreteScm {
    /// Validates with the default positivity floor.
    pub fn new(dag: MixedGraph, cards: Vec<usize>, cpts: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Self::with_min_prob(dag, cards, cpts, DEFAULT_MIN_PROB)
    }

    /// `cpts[v][row][x]` is `P(v = x | parents = row)`; every entry must be at
    /// least `min_prob` and every row must sum to one.
    pub fn with_min_prob(dag: MixedGraph, cards: Vec<usize>, cpts: Vec<Vec<Vec<f64>>>, min_prob: f64) -> Result<Self> {
        let order = dag.topological_order().ok_or(Error::NotDag)?;
        if dag.num_edges() > 0 {
            return Err(Error::NotDag);
        }
        let n = dag.n();
        if cards.len() != n {
            return Err(Error::VertexCountMismatch(n, cards.len()));
        }
        if cpts.len() != n {
            return Err(Error::VertexCountMismatch(n, cpts.len()));
        }
        if let Some(v) = cards.iter().position(|&c| c < 2) {
            return Err(Error::InvalidArgument(format!("vertex {v} has fewer than two values")));
        }
        for v in 0..n {
            let rows: usize = dag.parents(v).map(|p| cards[p]).product();
            if cpts[v].len() != rows {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v}: expected {rows} CPT rows, got {}",
                    cpts[v].len()
                )));
            }
            for row in &cpts[v] {
                if row.len() != cards[v] {
                    return Err(Error::InvalidArgument(format!("vertex {v}: CPT row has wrong width")));
                }
                if row.iter().any(|&p| !(p >= min_prob && p <= 1.0)) {
                    return Err(Error::InvalidArgument(format!(
                        "vertex {v}: CPT entry below {min_prob}"
                    )));
                }
                if (row.iter().sum::<f64>() - 1.0).abs() > MASS_TOL {
                    return Err(Error::InvalidArgument(format!("vertex {v}: CPT row does not sum to 1")));
                }
            }
        }
        Ok(Self {
            dag,
            cards,
            cpts,
            order,
        })
    }

    pub fn dag(&self) -> &MixedGraph {
        &self.dag
    }

    pub fn n(&self) -> usize {
        self.dag.n()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn cpts(&self) -> &[Vec<Vec<f64>>] {
        &self.cpts
    }

    /// `P(v = x | parents)` where `a` holds at least the parent values.
    pub fn cpt_entry(&self, v: usize, a: &[usize], x: usize) -> f64 {
        self.cpts[v][self.row_index(v, a)][x]
    }

    fn row_index(&self, v: usize, a: &[usize]) -> usize {
        self.dag.parents(v).fold(0, |acc, p| acc * self.cards[p] + a[p])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scm is always serialisable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn joint_distribution(&self) -> Result<JointTable> {
        self.joint_distribution_with_budget(DEFAULT_TABLE_BUDGET)
    }

    pub fn joint_distribution_with_budget(&self, budget: usize) -> Result<JointTable> {
        let size = table_size(&self.cards, budget)?;
        let mut probs = vec![0.0; size];
        let mut digits = vec![0usize; self.n()];
        for p in probs.iter_mut() {
            *p = (0..self.n()).map(|v| self.cpt_entry(v, &digits, digits[v])).product();
            step(&mut digits, &self.cards);
        }
        Ok(JointTable {
            strides: strides_of(&self.cards),
            cards: self.cards.clone(),
            probs,
        })
    }

    /// One ancestral sample from the mutilated model.
    pub fn sample_interventional<R: Rng + ?Sized>(&self, iv: &Intervention, rng: &mut R) -> Result<Assignment> {
        iv.check(&self.cards)?;
        let mut a = vec![0usize; self.n()];
        for &v in &self.order {
            a[v] = match iv.value_of(v) {
                Some(x) => x,
                None => {
                    let row = &self.cpts[v][self.row_index(v, &a)];
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = row.len() - 1;
                    for (x, &p) in row.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = x;
                            break;
                        }
                    }
                    pick
                }
            };
        }
        Ok(a)
    }
}
