//! Causal effect estimation when the cause cannot be intervened on, and
//! posterior probabilities of adjustment sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discovery::{Discovery, DiscoveryOptions, FamilyTables, PriorMode, TraceMode};
use crate::graph::{cpdag_of, d_separated, MixedGraph};
use crate::mec::MecCounter;
use crate::scm::{kl_divergence, truncated_factorization, Assignment, DiscreteScm, Intervention, JointTable};
use crate::separating::SeparatingSystem;
use crate::{Error, Result};

/// `P(y | do(x = x_value)) = sum_z P(y | x, z) P(z)`, read off `joint`.
pub fn backdoor_effect(joint: &JointTable, x: usize, x_value: usize, y: usize, z: &[usize]) -> Result<Vec<f64>> {
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(Error::OverlappingSets);
    }
    let cards = joint.cardinalities();
    if x_value >= cards[x] {
        return Err(Error::InvalidArgument(format!(
            "value {x_value} outside alphabet of vertex {x}"
        )));
    }
    let mut vars = z.to_vec();
    vars.push(x);
    vars.push(y);
    let m = joint.marginal(&vars)?;
    let (cx, cy) = (cards[x], cards[y]);
    let mut out = vec![0.0; cy];
    for block in m.probs().chunks(cx * cy) {
        let pz: f64 = block.iter().sum();
        let row = &block[x_value * cy..(x_value + 1) * cy];
        let px: f64 = row.iter().sum();
        if px <= 0.0 {
            if pz > 0.0 {
                return Err(Error::ZeroMass);
            }
            continue;
        }
        for (o, &p) in out.iter_mut().zip(row) {
            *o += pz * p / px;
        }
    }
    Ok(out)
}

/// Marginal of `y` under `do(x = x_value)` in the true model.
pub fn true_effect(scm: &DiscreteScm, joint: &JointTable, x: usize, x_value: usize, y: usize) -> Result<Vec<f64>> {
    let iv = Intervention::new(&[x], &[x_value])?;
    let t = truncated_factorization(joint, scm.dag(), &iv)?;
    Ok(t.marginal(&[y])?.probs().to_vec())
}

fn as_table(p: &[f64]) -> JointTable {
    let s: f64 = p.iter().sum();
    JointTable::new(vec![p.len()], p.iter().map(|x| x / s).collect()).expect("normalised vector")
}

/// `sum_i D(truth || estimate_i) * weight_i` for KL and TVD.
pub fn average_divergence(truth: &[f64], estimates: &[Vec<f64>], weights: &[f64]) -> Result<(f64, f64)> {
    let p = as_table(truth);
    let mut kl = 0.0;
    let mut tv = 0.0;
    for (e, &w) in estimates.iter().zip(weights) {
        let q = as_table(e);
        kl += w * kl_divergence(&p, &q)?;
        tv += w * crate::scm::tvd(&p, &q)?;
    }
    Ok((kl, tv))
}

/// Geometric grid 10, 30, 100, 300, ... capped by and ending at `n`.
pub fn default_grid(n: usize) -> Vec<usize> {
    let mut g = Vec::new();
    let mut base = 10usize;
    while base < n {
        g.push(base);
        if base * 3 < n {
            g.push(base * 3);
        }
        base *= 10;
    }
    if n > 0 {
        g.push(n);
    }
    g
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseStudyResult {
    pub grid: Vec<usize>,
    pub dbar_kl: Vec<f64>,
    pub dbar_tvd: Vec<f64>,
    /// Vertices intervened on: the neighbours of `x`.
    pub target: Vec<usize>,
    /// Parent set of `x` under each configuration.
    pub parent_sets: Vec<Vec<usize>>,
    pub estimates: Vec<Vec<f64>>,
    pub posterior: Vec<f64>,
    pub truth: Vec<f64>,
}

/// Intervenes on the neighbours of `x` in the essential graph, tracks the
/// posterior over their cut configurations, and at each grid point reports
/// the posterior-weighted divergence between the true effect of `x` on `y`
/// and the parent-adjusted estimate under each configuration.
pub fn run_case_study(
    scm: &DiscreteScm,
    x: usize,
    y: usize,
    x_value: usize,
    samples: usize,
    grid: &[usize],
    seed: u64,
) -> Result<CaseStudyResult> {
    let n = scm.n();
    for v in [x, y] {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
    }
    if grid.first() == Some(&0) || grid.windows(2).any(|w| w[0] >= w[1]) || grid.last().is_some_and(|&g| g > samples) {
        return Err(Error::InvalidArgument(
            "grid must be positive, strictly increasing and within the sample budget".into(),
        ));
    }
    let essential = cpdag_of(scm.dag())?;
    if x == y || essential.adjacent(x, y) {
        return Err(Error::InvalidArgument(format!(
            "{x} and {y} must be distinct and non-adjacent"
        )));
    }
    let target = essential.adjacents(x);
    let system = SeparatingSystem {
        n,
        k: None,
        targets: vec![target.clone()],
    };
    let opts = DiscoveryOptions {
        samples,
        prior: PriorMode::MecSize,
        fixed_do: false,
        trace: TraceMode::None,
        seed,
    };
    let mut disc = Discovery::new(scm, &system, &opts)?;

    let joint = scm.joint_distribution()?;
    let truth = true_effect(scm, &joint, x, x_value, y)?;
    let set = &disc.state().sets[0];
    let parent_sets: Vec<Vec<usize>> = set.mpdags.iter().map(|m| m.parents(x).collect()).collect();
    let estimates: Vec<Vec<f64>> = parent_sets
        .iter()
        .map(|z| backdoor_effect(&joint, x, x_value, y, z))
        .collect::<Result<_>>()?;

    let mut dbar_kl = Vec::with_capacity(grid.len());
    let mut dbar_tvd = Vec::with_capacity(grid.len());
    let mut next = 0;
    for i in 1..=samples {
        disc.step()?;
        if next < grid.len() && grid[next] == i {
            let (kl, tv) = average_divergence(&truth, &estimates, &disc.state().posterior(0))?;
            dbar_kl.push(kl);
            dbar_tvd.push(tv);
            next += 1;
        }
    }
    let posterior = disc.state().posterior(0);
    Ok(CaseStudyResult {
        grid: grid.to_vec(),
        dbar_kl,
        dbar_tvd,
        target,
        parent_sets,
        estimates,
        posterior,
        truth,
    })
}

/// Whether `s` satisfies the back-door criterion for `(x, y)` in `dag`:
/// no member descends from `x`, and `s` d-separates `x` from `y` once the
/// arcs out of `x` are removed.
pub fn is_backdoor_set(dag: &MixedGraph, x: usize, y: usize, s: &[usize]) -> Result<bool> {
    if s.contains(&x) || s.contains(&y) || x == y {
        return Err(Error::OverlappingSets);
    }
    let mut desc = vec![false; dag.n()];
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        for c in dag.children(v) {
            if !desc[c] {
                desc[c] = true;
                stack.push(c);
            }
        }
    }
    if s.iter().any(|&v| desc[v]) {
        return Ok(false);
    }
    let mut cut = dag.clone();
    let out: Vec<usize> = dag.children(x).collect();
    for c in out {
        cut.remove_adjacency(x, c);
    }
    d_separated(&cut, &[x], &[y], s)
}

/// One record of observed data: the intervention it was drawn under and
/// the full assignment.
pub type Record = (Intervention, Assignment);

fn data_log_likelihood(fam: &mut FamilyTables, dag: &MixedGraph, data: &[Record]) -> Result<f64> {
    let mut ll = 0.0;
    for (iv, v) in data {
        for f in fam.truncated_factors(dag, iv.targets())? {
            ll += f.prob(v).ln();
        }
        if iv.targets().iter().zip(iv.values()).any(|(&t, &x)| v[t] != x) {
            return Ok(f64::NEG_INFINITY);
        }
    }
    Ok(ll)
}

fn weighted_indicator(items: &[(bool, f64)]) -> Result<f64> {
    let m = items.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::ZeroMass);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(a, ll) in items {
        let w = (ll - m).exp();
        den += w;
        if a {
            num += w;
        }
    }
    Ok(num / den)
}

/// Monte Carlo estimate of the posterior probability that `s` is a valid
/// back-door adjustment set for `(x, y)`, from `m` uniform draws of the
/// equivalence class of `essential`, each weighted by the likelihood of
/// `data` under it.
#[allow(clippy::too_many_arguments)]
pub fn adjustment_set_posterior(
    essential: &MixedGraph,
    s: &[usize],
    x: usize,
    y: usize,
    data: &[Record],
    m: usize,
    joint: &JointTable,
    seed: u64,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one DAG sample".into()));
    }
    let counter = MecCounter::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fam = FamilyTables::new(joint.clone());
    let mut items = Vec::with_capacity(m);
    for _ in 0..m {
        let d = counter.sample_uniform_dag(essential, &mut rng)?;
        items.push((is_backdoor_set(&d, x, y, s)?, data_log_likelihood(&mut fam, &d, data)?));
    }
    weighted_indicator(&items)
}

/// The same posterior computed over every member of the class.
pub fn adjustment_set_posterior_exact(
    essential: &MixedGraph,
    s: &[usize],
    x: usize,
    y: usize,
    data: &[Record],
    joint: &JointTable,
) -> Result<f64> {
    let members = MecCounter::default().enumerate_mec(essential)?;
    let mut fam = FamilyTables::new(joint.clone());
    let items: Vec<(bool, f64)> = members
        .iter()
        .map(|d| Ok((is_backdoor_set(d, x, y, s)?, data_log_likelihood(&mut fam, d, data)?)))
        .collect::<Result<_>>()?;
    weighted_indicator(&items)
}

/// Draws `count` records from `scm` under `iv`.
pub fn draw_records<R: Rng + ?Sized>(
    scm: &DiscreteScm,
    iv: &Intervention,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Record>> {
    (0..count)
        .map(|_| Ok((iv.clone(), scm.sample_interventional(iv, rng)?)))
        .collect()
}
