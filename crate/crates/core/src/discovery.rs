//! Posterior tracking over cut configurations of intervention targets and
//! greedy assembly of a DAG from the posteriors.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::{consistent_extension, cpdag_of, meek_closure, shd, v_structures, MixedGraph};
use crate::mec::MecCounter;
use crate::scm::{kl_divergence, truncated_factorization, Assignment, DiscreteScm, Intervention, JointTable};
use crate::separating::SeparatingSystem;
use crate::{Error, Result};

/// Largest undirected cut whose orientations are enumerated.
pub const MAX_CUT_EDGES: usize = 24;

/// One orientation of the undirected edges between a target and the rest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CutConfiguration {
    pub target: Vec<usize>,
    /// Every cut edge as an arc, sorted.
    pub arcs: Vec<(usize, usize)>,
}

/// The valid cut configurations of one target, with the Meek closure of the
/// essential graph under each and their priors.
#[derive(Clone, Debug)]
pub struct ConfigSet {
    pub target: Vec<usize>,
    pub configs: Vec<CutConfiguration>,
    pub mpdags: Vec<MixedGraph>,
    pub mec_sizes: Vec<u128>,
    pub priors: Vec<f64>,
}

impl ConfigSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Index of the configuration that agrees with `dag` on the cut.
    pub fn index_of(&self, dag: &MixedGraph) -> Option<usize> {
        self.configs
            .iter()
            .position(|c| c.arcs.iter().all(|&(u, v)| dag.has_arc(u, v)))
    }
}

/// Undirected edges of `g` with exactly one endpoint in `s`, as `(u, v)` with
/// `u < v`.
pub fn undirected_cut(g: &MixedGraph, s: &[usize]) -> Vec<(usize, usize)> {
    let mut inside = vec![false; g.n()];
    for &v in s {
        inside[v] = true;
    }
    g.edges().into_iter().filter(|&(u, v)| inside[u] != inside[v]).collect()
}

/// Whether `g` keeps exactly the v-structures of `essential` and admits a
/// consistent extension; returns its Meek closure if so.
fn admissible(
    g: &MixedGraph,
    essential_vs: &std::collections::BTreeSet<crate::graph::VStructure>,
) -> Option<MixedGraph> {
    if &v_structures(g) != essential_vs {
        return None;
    }
    consistent_extension(g)?;
    let closed = meek_closure(g).ok()?;
    (&v_structures(&closed) == essential_vs).then_some(closed)
}

/// All valid orientations of the undirected cut of `s`, in mask order
/// (bit `i` set orients the `i`-th cut edge into `s`). Priors are left
/// uniform; see [`config_priors`].
pub fn enumerate_cut_configurations(essential: &MixedGraph, s: &[usize]) -> Result<ConfigSet> {
    for &v in s {
        if v >= essential.n() {
            return Err(Error::VertexOutOfRange {
                vertex: v,
                n: essential.n(),
            });
        }
    }
    let mut target = s.to_vec();
    target.sort_unstable();
    target.dedup();
    let cut = undirected_cut(essential, &target);
    if cut.len() > MAX_CUT_EDGES {
        return Err(Error::ResourceLimit(format!(
            "target cut has {} undirected edges",
            cut.len()
        )));
    }
    let mut inside = vec![false; essential.n()];
    for &v in &target {
        inside[v] = true;
    }
    let evs = v_structures(essential);
    let mut configs = Vec::new();
    let mut mpdags = Vec::new();
    for mask in 0u64..(1u64 << cut.len()) {
        let mut arcs: Vec<(usize, usize)> = cut
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| {
                let (a, b) = if inside[u] { (v, u) } else { (u, v) };
                // (a, b): a outside, b inside
                if mask >> i & 1 == 1 {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        arcs.sort_unstable();
        let mut g = essential.clone();
        g.merge_arcs(&arcs)?;
        if let Some(closed) = admissible(&g, &evs) {
            configs.push(CutConfiguration {
                target: target.clone(),
                arcs,
            });
            mpdags.push(closed);
        }
    }
    let k = configs.len();
    Ok(ConfigSet {
        target,
        configs,
        mpdags,
        mec_sizes: vec![0; k],
        priors: vec![1.0 / k as f64; k],
    })
}

/// How configuration priors are set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PriorMode {
    /// Proportional to the size of the interventional equivalence class.
    #[default]
    MecSize,
    Uniform,
}

/// Fills `mec_sizes` and sets the priors.
pub fn config_priors(mut cs: ConfigSet, mode: PriorMode, counter: &MecCounter) -> Result<ConfigSet> {
    cs.mec_sizes = cs.mpdags.iter().map(|m| counter.mec_size(m)).collect::<Result<_>>()?;
    let k = cs.len();
    cs.priors = match mode {
        PriorMode::Uniform => vec![1.0 / k as f64; k],
        PriorMode::MecSize => {
            let total: f64 = cs.mec_sizes.iter().map(|&s| s as f64).sum();
            cs.mec_sizes.iter().map(|&s| s as f64 / total).collect()
        }
    };
    Ok(cs)
}

/// Interventional table of configuration `index`: one DAG is drawn
/// uniformly from its class and the truncated factorisation is applied
/// under it.
pub fn config_interventional_table<R: Rng + ?Sized>(
    joint: &JointTable,
    cs: &ConfigSet,
    index: usize,
    iv: &Intervention,
    counter: &MecCounter,
    rng: &mut R,
) -> Result<JointTable> {
    if iv.targets() != cs.target.as_slice() {
        return Err(Error::InvalidArgument(
            "intervention targets differ from the configuration target".into(),
        ));
    }
    let mpdag = cs
        .mpdags
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("configuration index {index} out of range")))?;
    let dag = counter.sample_uniform_dag(mpdag, rng)?;
    truncated_factorization(joint, &dag, iv)
}

/// Conditional tables `P(v | pa(v))` read off an observational joint,
/// memoised by family.
#[derive(Debug)]
pub struct FamilyTables {
    joint: JointTable,
    memo: HashMap<(usize, Vec<usize>), Factor>,
}

/// `P(v | parents)` over `(parents ascending, v)`, last axis fastest.
#[derive(Clone, Debug)]
pub struct Factor {
    vars: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    pub fn prob(&self, a: &[usize]) -> f64 {
        let idx: usize = self.vars.iter().zip(&self.strides).map(|(&v, s)| a[v] * s).sum();
        self.table[idx]
    }
}

impl FamilyTables {
    pub fn new(joint: JointTable) -> Self {
        Self {
            joint,
            memo: HashMap::new(),
        }
    }

    pub fn joint(&self) -> &JointTable {
        &self.joint
    }

    pub fn factor(&mut self, v: usize, parents: &[usize]) -> Result<Factor> {
        let key = (v, parents.to_vec());
        if let Some(f) = self.memo.get(&key) {
            return Ok(f.clone());
        }
        let mut vars = parents.to_vec();
        vars.push(v);
        let m = self.joint.marginal(&vars)?;
        let card = self.joint.cardinalities()[v];
        let mut table = m.probs().to_vec();
        for row in table.chunks_mut(card) {
            let mass: f64 = row.iter().sum();
            if mass <= 0.0 {
                return Err(Error::ZeroMass);
            }
            row.iter_mut().for_each(|p| *p /= mass);
        }
        let cards: Vec<usize> = vars.iter().map(|&x| self.joint.cardinalities()[x]).collect();
        let mut strides = vec![1usize; cards.len()];
        for i in (0..cards.len() - 1).rev() {
            strides[i] = strides[i + 1] * cards[i + 1];
        }
        let f = Factor { vars, strides, table };
        self.memo.insert(key, f.clone());
        Ok(f)
    }

    /// The factors of the truncated product for `dag` under an intervention
    /// on `target`.
    pub fn truncated_factors(&mut self, dag: &MixedGraph, target: &[usize]) -> Result<Vec<Factor>> {
        (0..dag.n())
            .filter(|v| !target.contains(v))
            .map(|v| {
                let pa: Vec<usize> = dag.parents(v).collect();
                self.factor(v, &pa)
            })
            .collect()
    }
}

/// `ln P_s(observed)` under the truncated product given by `factors`.
pub fn log_likelihood(factors: &[Factor], observed: &[usize]) -> f64 {
    factors.iter().map(|f| f.prob(observed).ln()).sum()
}

/// Running log-posteriors per target.
#[derive(Clone, Debug)]
pub struct PosteriorState {
    pub sets: Vec<ConfigSet>,
    log_post: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl PosteriorState {
    /// Starts every target at its priors.
    pub fn new(sets: Vec<ConfigSet>) -> Self {
        let log_post = sets.iter().map(|s| s.priors.iter().map(|p| p.ln()).collect()).collect();
        let counts = vec![0; sets.len()];
        Self { sets, log_post, counts }
    }

    pub fn num_targets(&self) -> usize {
        self.sets.len()
    }

    pub fn log_posterior(&self, t: usize) -> &[f64] {
        &self.log_post[t]
    }

    pub fn posterior(&self, t: usize) -> Vec<f64> {
        self.log_post[t].iter().map(|l| l.exp()).collect()
    }

    /// Samples absorbed by target `t`.
    pub fn samples(&self, t: usize) -> usize {
        self.counts[t]
    }

    pub fn total_samples(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Adds one sample's log-likelihoods to target `t` and renormalises.
    pub fn update(&mut self, t: usize, log_lik: &[f64]) -> Result<()> {
        let lp = &mut self.log_post[t];
        if log_lik.len() != lp.len() {
            return Err(Error::InvalidArgument(
                "likelihood count differs from configuration count".into(),
            ));
        }
        let next: Vec<f64> = lp.iter().zip(log_lik).map(|(a, b)| a + b).collect();
        let z = log_sum_exp(&next);
        if !z.is_finite() {
            return Err(Error::ZeroMass);
        }
        *lp = next.into_iter().map(|x| x - z).collect();
        self.counts[t] += 1;
        Ok(())
    }
}

/// Commits configurations in order of decreasing posterior, skipping those
/// that clash with what is already committed, then completes the result to
/// a DAG. Ties go to the lower target index, then the lower configuration
/// index.
pub fn greedy_assemble(essential: &MixedGraph, state: &PosteriorState) -> Result<MixedGraph> {
    let evs = v_structures(essential);
    let t_count = state.num_targets();
    let post: Vec<Vec<f64>> = (0..t_count).map(|t| state.posterior(t)).collect();
    let mut live: Vec<Vec<bool>> = state.sets.iter().map(|s| vec![true; s.len()]).collect();
    let mut visited = vec![false; t_count];
    let mut current = essential.clone();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for t in (0..t_count).filter(|&t| !visited[t]) {
            for j in (0..live[t].len()).filter(|&j| live[t][j]) {
                if best.is_none_or(|(bt, bj)| post[t][j] > post[bt][bj]) {
                    best = Some((t, j));
                }
            }
        }
        let Some((t, j)) = best else { break };
        let mut cand = current.clone();
        let ok = cand.merge_arcs(&state.sets[t].configs[j].arcs).is_ok();
        match ok.then(|| admissible(&cand, &evs)).flatten() {
            Some(closed) => {
                current = closed;
                visited[t] = true;
            }
            None => {
                live[t][j] = false;
                if !live[t].contains(&true) {
                    visited[t] = true;
                }
            }
        }
    }
    consistent_extension(&current).ok_or(Error::DirectedCycle)
}

/// When SHD is recorded during a run.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum TraceMode {
    #[default]
    None,
    EverySample,
    /// After the listed (1-based) sample counts.
    Grid(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscoveryOptions {
    pub samples: usize,
    pub prior: PriorMode,
    pub fixed_do: bool,
    pub trace: TraceMode,
    pub seed: u64,
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        Self {
            samples: 0,
            prior: PriorMode::MecSize,
            fixed_do: false,
            trace: TraceMode::None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRow {
    pub sample_index: usize,
    pub target: usize,
    pub do_values: Vec<usize>,
    pub shd: usize,
}

#[derive(Clone, Debug)]
pub struct DiscoveryResult {
    pub dag: MixedGraph,
    pub essential: MixedGraph,
    pub state: PosteriorState,
    pub trace: Vec<TraceRow>,
}

/// Initialised sampler: configuration sets, priors and the likelihood
/// factors of one representative DAG per configuration.
pub struct Discovery<'a> {
    scm: &'a DiscreteScm,
    essential: MixedGraph,
    state: PosteriorState,
    factors: Vec<Vec<Vec<Factor>>>,
    fixed: Option<Vec<Vec<usize>>>,
    rng: ChaCha8Rng,
}

impl<'a> Discovery<'a> {
    pub fn new(scm: &'a DiscreteScm, system: &SeparatingSystem, opts: &DiscoveryOptions) -> Result<Self> {
        if system.n != scm.n() {
            return Err(Error::VertexCountMismatch(system.n, scm.n()));
        }
        let essential = cpdag_of(scm.dag())?;
        let joint = scm.joint_distribution()?;
        let counter = MecCounter::default();
        let sets: Vec<ConfigSet> = system
            .targets
            .par_iter()
            .map(|t| config_priors(enumerate_cut_configurations(&essential, t)?, opts.prior, &counter))
            .collect::<Result<_>>()?;
        if let Some(s) = sets.iter().find(|s| s.is_empty()) {
            return Err(Error::InvalidArgument(format!(
                "target {:?} has no valid configuration",
                s.target
            )));
        }

        let mut rep_rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rep_rng.set_stream(1);
        let mut fam = FamilyTables::new(joint);
        let mut factors = Vec::with_capacity(sets.len());
        for s in &sets {
            let mut per = Vec::with_capacity(s.len());
            for m in &s.mpdags {
                let rep = counter.sample_uniform_dag(m, &mut rep_rng)?;
                per.push(fam.truncated_factors(&rep, &s.target)?);
            }
            factors.push(per);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let fixed = opts
            .fixed_do
            .then(|| sets.iter().map(|s| draw_values(scm, &s.target, &mut rng)).collect());
        Ok(Self {
            scm,
            essential,
            state: PosteriorState::new(sets),
            factors,
            fixed,
            rng,
        })
    }

    pub fn essential(&self) -> &MixedGraph {
        &self.essential
    }

    pub fn state(&self) -> &PosteriorState {
        &self.state
    }

    /// Log-likelihood of `observed` under every configuration of target `t`.
    pub fn log_likelihoods(&self, t: usize, observed: &[usize]) -> Vec<f64> {
        self.factors[t].iter().map(|f| log_likelihood(f, observed)).collect()
    }

    /// Draws one interventional sample on a uniformly chosen target and
    /// updates that target's posterior.
    pub fn step(&mut self) -> Result<(usize, Vec<usize>, Assignment)> {
        let t = self.rng.random_range(0..self.state.num_targets());
        let target = self.state.sets[t].target.clone();
        let values = match &self.fixed {
            Some(f) => f[t].clone(),
            None => draw_values(self.scm, &target, &mut self.rng),
        };
        let iv = Intervention::new(&target, &values)?;
        let observed = self.scm.sample_interventional(&iv, &mut self.rng)?;
        self.absorb(t, &observed)?;
        Ok((t, values, observed))
    }

    /// Updates target `t` with an externally supplied sample.
    pub fn absorb(&mut self, t: usize, observed: &[usize]) -> Result<()> {
        let ll = self.log_likelihoods(t, observed);
        self.state.update(t, &ll)
    }

    pub fn assemble(&self) -> Result<MixedGraph> {
        greedy_assemble(&self.essential, &self.state)
    }

    pub fn run(mut self, opts: &DiscoveryOptions) -> Result<DiscoveryResult> {
        let truth = self.scm.dag().clone();
        let mut trace = Vec::new();
        let mut grid_pos = 0;
        for i in 1..=opts.samples {
            let (t, values, _) = self.step()?;
            let record = match &opts.trace {
                TraceMode::None => false,
                TraceMode::EverySample => true,
                TraceMode::Grid(g) => {
                    while grid_pos < g.len() && g[grid_pos] < i {
                        grid_pos += 1;
                    }
                    grid_pos < g.len() && g[grid_pos] == i
                }
            };
            if record {
                let d = self.assemble()?;
                trace.push(TraceRow {
                    sample_index: i,
                    target: t,
                    do_values: values,
                    shd: shd(&d, &truth)?,
                });
            }
        }
        let dag = self.assemble()?;
        Ok(DiscoveryResult {
            dag,
            essential: self.essential,
            state: self.state,
            trace,
        })
    }
}

fn draw_values<R: Rng + ?Sized>(scm: &DiscreteScm, target: &[usize], rng: &mut R) -> Vec<usize> {
    target
        .iter()
        .map(|&v| rng.random_range(0..scm.cardinalities()[v]))
        .collect()
}

/// Runs the sampler for `opts.samples` interventional samples.
pub fn run_discovery(scm: &DiscreteScm, system: &SeparatingSystem, opts: &DiscoveryOptions) -> Result<DiscoveryResult> {
    Discovery::new(scm, system, opts)?.run(opts)
}

/// Smallest KL divergence over ordered pairs of distinct tables.
pub fn min_pairwise_kl(tables: &[JointTable]) -> Result<f64> {
    if tables.len() < 2 {
        return Err(Error::InvalidArgument("need at least two tables".into()));
    }
    let mut best = f64::INFINITY;
    for (a, p) in tables.iter().enumerate() {
        for (b, q) in tables.iter().enumerate() {
            if a != b {
                best = best.min(kl_divergence(p, q)?);
            }
        }
    }
    Ok(best)
}

/// Largest `|ln(p_a(v) / p_b(v))|` over pairs of tables and assignments
/// where either table is positive.
pub fn beta_bound(tables: &[JointTable]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (a, p) in tables.iter().enumerate() {
        for q in &tables[a + 1..] {
            if p.cardinalities() != q.cardinalities() {
                return Err(Error::InvalidArgument("tables have different shapes".into()));
            }
            for (&x, &y) in p.probs().iter().zip(q.probs()) {
                match (x > 0.0, y > 0.0) {
                    (true, true) => best = best.max((x / y).ln().abs()),
                    (false, false) => {}
                    _ => return Err(Error::NotAbsolutelyContinuous),
                }
            }
        }
    }
    Ok(best)
}

/// Inputs of the sample-size bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleComplexityInput {
    pub beta: f64,
    pub d_min: f64,
    pub k: u32,
    pub d_m: u32,
    pub delta: f64,
    pub gamma: f64,
    pub p_star: f64,
    pub p_targets: u32,
}

/// Interventional samples per target so that the true configuration's
/// posterior exceeds `1 - gamma` with probability at least `1 - delta`:
///
/// ```text
/// m = 2 beta^2 / D^2 ln(2^((k+1) d_m) / delta')
///   + 2 / D ln(2^(k d_m) (1 - gamma)(1 - p*) / (p* gamma))
/// ```
///
/// with `delta' = delta`, or `delta / p` when every one of `p` targets must
/// succeed simultaneously (`per_target`).
pub fn required_samples(inp: &SampleComplexityInput, per_target: bool) -> Result<u64> {
    if inp.d_min <= 0.0 {
        return Err(Error::Indistinguishable);
    }
    let unit = |x: f64| x > 0.0 && x < 1.0;
    if !(inp.beta > 0.0 && unit(inp.delta) && unit(inp.gamma) && unit(inp.p_star)) {
        return Err(Error::InvalidArgument(
            "need beta > 0 and delta, gamma, p* in (0, 1)".into(),
        ));
    }
    if per_target && inp.p_targets == 0 {
        return Err(Error::InvalidArgument("target count must be positive".into()));
    }
    let delta = if per_target {
        inp.delta / inp.p_targets as f64
    } else {
        inp.delta
    };
    let ln2 = std::f64::consts::LN_2;
    let (k, dm) = (inp.k as f64, inp.d_m as f64);
    let first = 2.0 * inp.beta.powi(2) / inp.d_min.powi(2) * ((k + 1.0) * dm * ln2 - delta.ln());
    let odds = (1.0 - inp.gamma) * (1.0 - inp.p_star) / (inp.p_star * inp.gamma);
    let second = 2.0 / inp.d_min * (k * dm * ln2 + odds.ln());
    Ok((first + second).max(0.0).ceil() as u64)
}
