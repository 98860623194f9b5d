//! Random instance generation, the random-intervention baseline and
//! SHD-versus-samples benchmark runs.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::discovery::{greedy_assemble, undirected_cut, Discovery, DiscoveryOptions, PriorMode};
use crate::graph::{consistent_extension, cpdag_of, meek_closure, shd, v_structures, MixedGraph};
use crate::scm::{Assignment, DiscreteScm, Intervention};
use crate::separating::{system_for_essential, SepSysKind, SeparatingSystem};
use crate::{Error, Result};

/// Adds the fill edges of eliminating vertices in the reverse of `tau`,
/// each oriented from the earlier to the later vertex of `tau`.
fn eliminate_reverse(d: &mut MixedGraph, tau: &[usize]) {
    let n = d.n();
    let mut pos = vec![0; n];
    for (i, &v) in tau.iter().enumerate() {
        pos[v] = i;
    }
    let mut gone = vec![false; n];
    for &v in tau.iter().rev() {
        let nb: Vec<usize> = d.adjacents(v).into_iter().filter(|&w| !gone[w]).collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !d.adjacent(a, b) {
                    let (u, w) = if pos[a] < pos[b] { (a, b) } else { (b, a) };
                    d.insert_arc(u, w);
                }
            }
        }
        gone[v] = true;
    }
}

/// DAG over a random order `tau`: each non-first vertex takes
/// `max(1, Bin(n-1, rho))` parents (at most its predecessors) uniformly from
/// its predecessors, then elimination in the reverse of `tau` adds the
/// fill-in. The skeleton is connected and chordal and the DAG has no
/// v-structures.
pub fn random_chordal_dag<R: Rng + ?Sized>(n: usize, rho: f64, rng: &mut R) -> Result<MixedGraph> {
    if n < 2 || !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 and 0 < rho <= 1, got n={n}, rho={rho}"
        )));
    }
    let bin = Binomial::new((n - 1) as u64, rho).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    loop {
        let mut tau: Vec<usize> = (0..n).collect();
        tau.shuffle(rng);
        let mut d = MixedGraph::new(n);
        for i in 1..n {
            let k = (bin.sample(rng) as usize).max(1).min(i);
            for &p in tau[..i].choose_multiple(rng, k) {
                d.insert_arc(p, tau[i]);
            }
        }
        eliminate_reverse(&mut d, &tau);
        if d.is_connected() {
            return Ok(d);
        }
    }
}

/// Preferential-attachment DAG: a star on `m + 1` vertices, then each new
/// vertex attaches to `m` distinct earlier vertices drawn proportionally to
/// degree. Arcs point from older to newer vertices; the same elimination
/// step then makes the skeleton chordal.
pub fn random_ba_dag<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<MixedGraph> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= m < n, got n={n}, m={m}")));
    }
    let mut d = MixedGraph::new(n);
    let mut repeated: Vec<usize> = Vec::new();
    for leaf in 1..=m {
        d.insert_arc(0, leaf);
        repeated.push(0);
        repeated.push(leaf);
    }
    for source in m + 1..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = *repeated.choose(rng).expect("non-empty pool");
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            d.insert_arc(t, source);
        }
        repeated.extend(&targets);
        repeated.extend(std::iter::repeat_n(source, m));
    }
    let tau: Vec<usize> = (0..n).collect();
    eliminate_reverse(&mut d, &tau);
    Ok(d)
}

/// Each CPT row is a uniform draw `p` from the simplex mixed with the
/// uniform floor: `eps + (1 - card * eps) p`.
pub fn random_cpt_scm<R: Rng + ?Sized>(
    d: &MixedGraph,
    cardinality: usize,
    eps: f64,
    rng: &mut R,
) -> Result<DiscreteScm> {
    if cardinality < 2 || !(eps > 0.0 && eps * cardinality as f64 <= 1.0) {
        return Err(Error::InvalidArgument(
            "need cardinality >= 2 and 0 < eps <= 1/cardinality".into(),
        ));
    }
    let cards = vec![cardinality; d.n()];
    let scale = 1.0 - cardinality as f64 * eps;
    let cpts = (0..d.n())
        .map(|v| {
            let rows = cardinality.pow(d.parents(v).count() as u32);
            (0..rows)
                .map(|_| {
                    let g: Vec<f64> = (0..cardinality).map(|_| Exp1.sample(rng)).collect();
                    let s: f64 = g.iter().sum();
                    g.into_iter().map(|x| eps + scale * x / s).collect()
                })
                .collect()
        })
        .collect();
    DiscreteScm::with_min_prob(d.clone(), cards, cpts, eps)
}

/// Pearson statistic and degrees of freedom of a contingency table, after
/// dropping empty rows and columns. `None` when fewer than two rows or
/// columns remain.
pub fn chi_square_statistic(table: &[Vec<u64>]) -> Option<(f64, usize)> {
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    let width = table.first().map_or(0, Vec::len);
    let cols: Vec<usize> = (0..width)
        .filter(|&c| rows.iter().map(|r| r[c]).sum::<u64>() > 0)
        .collect();
    if rows.len() < 2 || cols.len() < 2 {
        return None;
    }
    let total: f64 = rows.iter().map(|r| r.iter().sum::<u64>() as f64).sum();
    let col_sum: Vec<f64> = cols.iter().map(|&c| rows.iter().map(|r| r[c] as f64).sum()).collect();
    let mut stat = 0.0;
    for r in &rows {
        let rs: f64 = r.iter().sum::<u64>() as f64;
        for (ci, &c) in cols.iter().enumerate() {
            let e = rs * col_sum[ci] / total;
            stat += (r[c] as f64 - e).powi(2) / e;
        }
    }
    Some((stat, (rows.len() - 1) * (cols.len() - 1)))
}

/// Upper-tail p-value of the Pearson test, `None` if the table is
/// degenerate.
pub fn chi_square_p_value(table: &[Vec<u64>]) -> Option<f64> {
    let (stat, dof) = chi_square_statistic(table)?;
    let dist = ChiSquared::new(dof as f64).ok()?;
    Some(dist.sf(stat))
}

/// Critical value of the chi-square distribution at level `alpha`.
pub fn chi_square_critical(dof: usize, alpha: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha)
}

/// Random-intervention baseline with per-edge independence tests.
pub struct RandomBaseline<'a> {
    scm: &'a DiscreteScm,
    essential: MixedGraph,
    targets: Vec<Vec<usize>>,
    samples: Vec<Vec<(Vec<usize>, Assignment)>>,
    alpha: f64,
    rng: ChaCha8Rng,
}

struct Vote {
    arc: (usize, usize),
    rejected: bool,
    p: f64,
}

impl<'a> RandomBaseline<'a> {
    pub fn new(scm: &'a DiscreteScm, system: &SeparatingSystem, alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if system.n != scm.n() {
            return Err(Error::VertexCountMismatch(system.n, scm.n()));
        }
        let essential = cpdag_of(scm.dag())?;
        let mut targets = system.targets.clone();
        targets.iter_mut().for_each(|t| t.sort_unstable());
        Ok(Self {
            scm,
            essential,
            samples: vec![Vec::new(); targets.len()],
            targets,
            alpha,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn essential(&self) -> &MixedGraph {
        &self.essential
    }

    /// One sample on a uniformly chosen target with uniform do-values.
    pub fn step(&mut self) -> Result<()> {
        if self.targets.is_empty() {
            return Ok(());
        }
        let t = self.rng.random_range(0..self.targets.len());
        let cards = self.scm.cardinalities();
        let values: Vec<usize> = self.targets[t]
            .iter()
            .map(|&v| self.rng.random_range(0..cards[v]))
            .collect();
        let iv = Intervention::new(&self.targets[t], &values)?;
        let obs = self.scm.sample_interventional(&iv, &mut self.rng)?;
        self.samples[t].push((values, obs));
        Ok(())
    }

    fn votes(&self) -> Vec<Vote> {
        let cards = self.scm.cardinalities();
        let mut votes = Vec::new();
        for (t, target) in self.targets.iter().enumerate() {
            for (a, b) in undirected_cut(&self.essential, target) {
                let (u, v) = if target.contains(&a) { (a, b) } else { (b, a) };
                let ui = target.iter().position(|&x| x == u).expect("u in target");
                let mut table = vec![vec![0u64; cards[v]]; cards[u]];
                for (vals, obs) in &self.samples[t] {
                    table[vals[ui]][obs[v]] += 1;
                }
                if let Some(p) = chi_square_p_value(&table) {
                    let rejected = p < self.alpha;
                    votes.push(Vote {
                        arc: if rejected { (u, v) } else { (v, u) },
                        rejected,
                        p,
                    });
                }
            }
        }
        votes
    }

    /// Orientations decided by the tests so far, most confident first.
    /// Rejections outrank acceptances; among rejections the smaller
    /// p-value wins. Edges with only disagreeing acceptances stay open.
    pub fn decisions(&self) -> Vec<(usize, usize)> {
        let votes = self.votes();
        let mut by_edge: std::collections::BTreeMap<(usize, usize), Vec<&Vote>> = Default::default();
        for v in &votes {
            let key = (v.arc.0.min(v.arc.1), v.arc.0.max(v.arc.1));
            by_edge.entry(key).or_default().push(v);
        }
        let mut chosen: Vec<(bool, f64, (usize, usize))> = Vec::new();
        for vs in by_edge.values() {
            let best_rej = vs
                .iter()
                .filter(|v| v.rejected)
                .min_by(|a, b| a.p.total_cmp(&b.p).then(a.arc.cmp(&b.arc)));
            if let Some(r) = best_rej {
                chosen.push((true, r.p, r.arc));
            } else if vs.iter().all(|v| v.arc == vs[0].arc) {
                let p = vs.iter().map(|v| v.p).fold(0.0, f64::max);
                chosen.push((false, p, vs[0].arc));
            }
        }
        // rejections by ascending p, then acceptances by descending p
        chosen.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then_with(|| if a.0 { a.1.total_cmp(&b.1) } else { b.1.total_cmp(&a.1) })
                .then(a.2.cmp(&b.2))
        });
        chosen.into_iter().map(|c| c.2).collect()
    }

    /// Applies the decided arcs one by one, skipping any that would create
    /// a cycle or a new v-structure, then completes to a DAG.
    pub fn assemble(&self) -> Result<MixedGraph> {
        let evs = v_structures(&self.essential);
        let mut g = self.essential.clone();
        for (u, v) in self.decisions() {
            if !g.has_edge(u, v) {
                continue;
            }
            let mut cand = g.clone();
            cand.orient(u, v)?;
            if v_structures(&cand) != evs || consistent_extension(&cand).is_none() {
                continue;
            }
            if let Ok(closed) = meek_closure(&cand) {
                if v_structures(&closed) == evs {
                    g = closed;
                }
            }
        }
        consistent_extension(&g).ok_or(Error::DirectedCycle)
    }
}

/// Runs the baseline for `samples` steps and returns its DAG.
pub fn random_intervention_baseline(
    scm: &DiscreteScm,
    system: &SeparatingSystem,
    samples: usize,
    alpha: f64,
    seed: u64,
) -> Result<MixedGraph> {
    let mut b = RandomBaseline::new(scm, system, alpha, seed)?;
    for _ in 0..samples {
        b.step()?;
    }
    b.assemble()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphModel {
    /// Order-based random DAG with density `rho`, chordalised.
    Density(f64),
    /// Preferential attachment with `m` edges per new vertex, chordalised.
    BarabasiAlbert(usize),
}

impl GraphModel {
    /// Value written to the `rho` column: the density, or `m`.
    pub fn parameter(&self) -> f64 {
        match *self {
            GraphModel::Density(r) => r,
            GraphModel::BarabasiAlbert(m) => m as f64,
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<MixedGraph> {
        match *self {
            GraphModel::Density(rho) => random_chordal_dag(n, rho, rng),
            GraphModel::BarabasiAlbert(m) => random_ba_dag(n, m, rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Bayes,
    RandomBaseline,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Bayes => "bayes",
            Algorithm::RandomBaseline => "random",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub model: GraphModel,
    pub trials: usize,
    pub grid: Vec<usize>,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub sepsys: SepSysKind,
    pub prior: PriorMode,
    pub cardinality: usize,
    pub epsilon: f64,
    pub alpha: f64,
}

impl BenchConfig {
    pub fn new(n: usize, model: GraphModel, trials: usize, grid: Vec<usize>, seed: u64) -> Self {
        Self {
            n,
            model,
            trials,
            grid,
            seed,
            algorithms: vec![Algorithm::Bayes, Algorithm::RandomBaseline],
            sepsys: SepSysKind::Coloring,
            prior: PriorMode::MecSize,
            cardinality: 2,
            epsilon: 0.01,
            alpha: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        if self.grid.is_empty() || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "grid must be non-empty and strictly increasing".into(),
            ));
        }
        if let GraphModel::Density(rho) = self.model {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {rho}")));
            }
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("no algorithm selected".into()));
        }
        Ok(())
    }
}

/// One line of the benchmark CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub algorithm: String,
    pub n: usize,
    pub rho: f64,
    pub samples: usize,
    pub mean_shd: f64,
    pub std_shd: f64,
    pub trials: usize,
}

/// SHD at every grid point for every algorithm, for one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub shd: Vec<(Algorithm, Vec<usize>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub outcomes: Vec<TrialOutcome>,
    /// Trials that failed, with the error message.
    pub failed: Vec<(usize, String)>,
}

/// Independent generator for `trial`, derived from the master seed.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial as u64);
    r
}

/// SHD of an algorithm's output at each grid point.
pub fn shd_curve(
    alg: Algorithm,
    scm: &DiscreteScm,
    system: &SeparatingSystem,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<Vec<usize>> {
    let truth = scm.dag();
    let mut out = Vec::with_capacity(cfg.grid.len());
    let mut done = 0;
    match alg {
        Algorithm::Bayes => {
            let opts = DiscoveryOptions {
                prior: cfg.prior,
                seed,
                ..Default::default()
            };
            let mut disc = Discovery::new(scm, system, &opts)?;
            for &g in &cfg.grid {
                while done < g {
                    disc.step()?;
                    done += 1;
                }
                out.push(shd(&greedy_assemble(disc.essential(), disc.state())?, truth)?);
            }
        }
        Algorithm::RandomBaseline => {
            let mut base = RandomBaseline::new(scm, system, cfg.alpha, seed)?;
            for &g in &cfg.grid {
                while done < g {
                    base.step()?;
                    done += 1;
                }
                out.push(shd(&base.assemble()?, truth)?);
            }
        }
    }
    Ok(out)
}

/// Draws the instance of `trial`: DAG, SCM and separating system.
pub fn trial_instance(cfg: &BenchConfig, trial: usize) -> Result<(DiscreteScm, SeparatingSystem, u64)> {
    let mut rng = trial_rng(cfg.seed, trial);
    let dag = cfg.model.generate(cfg.n, &mut rng)?;
    let scm = random_cpt_scm(&dag, cfg.cardinality, cfg.epsilon, &mut rng)?;
    let system = system_for_essential(&cpdag_of(&dag)?, cfg.sepsys)?;
    Ok((scm, system, rng.random()))
}

fn run_trial(cfg: &BenchConfig, trial: usize) -> Result<TrialOutcome> {
    let (scm, system, alg_seed) = trial_instance(cfg, trial)?;
    let shd = cfg
        .algorithms
        .iter()
        .map(|&a| Ok((a, shd_curve(a, &scm, &system, cfg, alg_seed)?)))
        .collect::<Result<_>>()?;
    Ok(TrialOutcome { trial, shd })
}

fn mean_std(xs: &[usize]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every trial in parallel and aggregates mean and population
/// standard deviation of SHD per algorithm and grid point. Failed trials
/// are reported and left out of the aggregates.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let results: Vec<Result<TrialOutcome>> = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect();
    let mut outcomes = Vec::new();
    let mut failed = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) if e.is_resource_limit() => return Err(e),
            Err(e) => failed.push((t, e.to_string())),
        }
    }
    let mut rows = Vec::new();
    for (ai, &alg) in cfg.algorithms.iter().enumerate() {
        for (gi, &g) in cfg.grid.iter().enumerate() {
            let xs: Vec<usize> = outcomes.iter().map(|o| o.shd[ai].1[gi]).collect();
            let (mean_shd, std_shd) = mean_std(&xs);
            rows.push(BenchRow {
                algorithm: alg.name().to_string(),
                n: cfg.n,
                rho: cfg.model.parameter(),
                samples: g,
                mean_shd,
                std_shd,
                trials: xs.len(),
            });
        }
    }
    Ok(BenchReport { rows, outcomes, failed })
}
