use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bcd_core::bench::{self, Algorithm, BenchConfig, GraphModel};
use bcd_core::discovery::{
    required_samples, run_discovery, DiscoveryOptions, PriorMode, SampleComplexityInput, TraceMode,
};
use bcd_core::effect::{default_grid, run_case_study};
use bcd_core::graph::{cpdag_of, shd, MixedGraph};
use bcd_core::mec::MecCounter;
use bcd_core::scm::DiscreteScm;
use bcd_core::separating::{nk_separating_system, system_for_essential, SepSysKind, SeparatingSystem};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "bcd",
    version,
    about = "Bayesian causal discovery from interventional samples"
)]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random DAG with random CPTs and print the SCM as JSON.
    Generate {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        cardinality: usize,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn the DAG of an SCM with the Bayesian sampler.
    Discover {
        #[arg(long)]
        scm: PathBuf,
        #[command(flatten)]
        sys: SysArgs,
        #[arg(long)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Prior::Mec)]
        prior: Prior,
        /// Use one fixed do-value per target.
        #[arg(long)]
        fixed_do: bool,
        /// Write the SHD after every sample to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn the DAG of an SCM with random interventions and chi-square tests.
    Baseline {
        #[arg(long)]
        scm: PathBuf,
        #[command(flatten)]
        sys: SysArgs,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SHD against sample count over random instances, as CSV.
    Benchmark {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Comma-separated sample counts.
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 10, 100, 1000, 10000])]
        grid: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Alg::Bayes, Alg::Random])]
        algorithms: Vec<Alg>,
        #[arg(long, value_enum, default_value_t = SysKind::G)]
        sepsys: SysKind,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = Prior::Mec)]
        prior: Prior,
        #[arg(long, default_value_t = 2)]
        cardinality: usize,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior-weighted error of the adjusted effect of x on y, as CSV.
    CaseStudy {
        #[arg(long)]
        scm: PathBuf,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y: usize,
        #[arg(long, default_value_t = 1)]
        x_value: usize,
        #[arg(long)]
        samples: usize,
        /// Comma-separated sample counts; defaults to a 1-3-10 ladder.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Markov equivalence class utilities.
    Mec {
        #[command(subcommand)]
        action: MecAction,
    },
    /// Build a separating system as JSON.
    Sepsys {
        /// Element count for an (n, k)-system.
        #[arg(long, conflicts_with = "graph")]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// Essential graph (JSON or DOT); one system per chain component.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interventional samples needed for a target posterior.
    SampleComplexity {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        d_min: f64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d_m: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        p_star: f64,
        /// Number of targets; splits delta across them.
        #[arg(long)]
        targets: Option<u32>,
    },
}

#[derive(Subcommand)]
enum MecAction {
    /// Number of DAGs in the class of an essential graph.
    Count {
        #[arg(long)]
        graph: PathBuf,
    },
    /// A uniformly random member of the class, as JSON.
    Sample {
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Edge density of the order-based generator.
    #[arg(long, conflicts_with = "ba_m")]
    rho: Option<f64>,
    /// Attachment count of the preferential-attachment generator.
    #[arg(long)]
    ba_m: Option<usize>,
}

impl ModelArgs {
    fn model(&self) -> GraphModel {
        match (self.rho, self.ba_m) {
            (_, Some(m)) => GraphModel::BarabasiAlbert(m),
            (Some(r), None) => GraphModel::Density(r),
            (None, None) => GraphModel::Density(0.3),
        }
    }
}

#[derive(Args)]
struct SysArgs {
    #[arg(long, value_enum, default_value_t = SysKind::G)]
    sepsys: SysKind,
    /// Size bound for `--sepsys nk`.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SysKind {
    G,
    Nk,
}

#[derive(Clone, Copy, ValueEnum)]
enum Prior {
    Mec,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Alg {
    Bayes,
    Random,
}

fn sepsys_kind(kind: SysKind, k: Option<usize>) -> Result<SepSysKind> {
    match (kind, k) {
        (SysKind::G, _) => Ok(SepSysKind::Coloring),
        (SysKind::Nk, Some(k)) => Ok(SepSysKind::Nk(k)),
        (SysKind::Nk, None) => Err(bcd_core::Error::InvalidArgument("--sepsys nk needs --k".into()).into()),
    }
}

fn prior_mode(p: Prior) -> PriorMode {
    match p {
        Prior::Mec => PriorMode::MecSize,
        Prior::Uniform => PriorMode::Uniform,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_scm(path: &Path) -> Result<DiscreteScm> {
    Ok(DiscreteScm::from_json(&read(path)?)?)
}

fn load_graph(path: &Path) -> Result<MixedGraph> {
    let text = read(path)?;
    let g = if text.trim_start().starts_with('{') {
        MixedGraph::from_json(&text)?
    } else {
        MixedGraph::from_dot(&text)?
    };
    Ok(g)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    let mut w = sink(out)?;
    writeln!(w, "{text}")?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate {
            n,
            model,
            cardinality,
            epsilon,
            out,
        } => {
            let mut rng = bench::trial_rng(seed, 0);
            let dag = model.model().generate(n, &mut rng)?;
            let scm = bench::random_cpt_scm(&dag, cardinality, epsilon, &mut rng)?;
            emit(out.as_deref(), &scm.to_json())
        }
        Command::Discover {
            scm,
            sys,
            samples,
            prior,
            fixed_do,
            trace,
            out,
        } => {
            let scm = load_scm(&scm)?;
            let system = system_for_essential(&cpdag_of(scm.dag())?, sepsys_kind(sys.sepsys, sys.k)?)?;
            let opts = DiscoveryOptions {
                samples,
                prior: prior_mode(prior),
                fixed_do,
                trace: if trace.is_some() {
                    TraceMode::EverySample
                } else {
                    TraceMode::None
                },
                seed,
            };
            let res = run_discovery(&scm, &system, &opts)?;
            if let Some(path) = trace {
                let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
                w.write_record(["sample_index", "target", "do_values", "shd"])?;
                for row in &res.trace {
                    let values: Vec<String> = row.do_values.iter().map(usize::to_string).collect();
                    w.write_record([
                        row.sample_index.to_string(),
                        row.target.to_string(),
                        values.join(";"),
                        row.shd.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            let report = json!({
                "dag": res.dag,
                "shd": shd(&res.dag, scm.dag())?,
                "system": system,
                "posteriors": (0..res.state.num_targets()).map(|t| res.state.posterior(t)).collect::<Vec<_>>(),
            });
            emit(out.as_deref(), &report.to_string())
        }
        Command::Baseline {
            scm,
            sys,
            samples,
            alpha,
            out,
        } => {
            let scm = load_scm(&scm)?;
            let system = system_for_essential(&cpdag_of(scm.dag())?, sepsys_kind(sys.sepsys, sys.k)?)?;
            let dag = bench::random_intervention_baseline(&scm, &system, samples, alpha, seed)?;
            let report = json!({ "dag": dag, "shd": shd(&dag, scm.dag())?, "system": system });
            emit(out.as_deref(), &report.to_string())
        }
        Command::Benchmark {
            n,
            model,
            trials,
            grid,
            algorithms,
            sepsys,
            k,
            prior,
            cardinality,
            epsilon,
            alpha,
            out,
        } => {
            let mut cfg = BenchConfig::new(n, model.model(), trials, grid, seed);
            cfg.algorithms = algorithms
                .iter()
                .map(|a| match a {
                    Alg::Bayes => Algorithm::Bayes,
                    Alg::Random => Algorithm::RandomBaseline,
                })
                .collect();
            cfg.sepsys = sepsys_kind(sepsys, k)?;
            cfg.prior = prior_mode(prior);
            cfg.cardinality = cardinality;
            cfg.epsilon = epsilon;
            cfg.alpha = alpha;
            let report = bench::run_benchmark(&cfg)?;
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            for row in &report.rows {
                w.serialize(row)?;
            }
            w.flush()?;
            for (t, msg) in &report.failed {
                eprintln!("trial {t} failed: {msg}");
            }
            Ok(())
        }
        Command::CaseStudy {
            scm,
            x,
            y,
            x_value,
            samples,
            grid,
            out,
        } => {
            let scm = load_scm(&scm)?;
            let grid = grid.unwrap_or_else(|| default_grid(samples));
            let res = run_case_study(&scm, x, y, x_value, samples, &grid, seed)?;
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            w.write_record(["samples", "dbar_kl", "dbar_tvd"])?;
            for ((g, kl), tv) in res.grid.iter().zip(&res.dbar_kl).zip(&res.dbar_tvd) {
                w.write_record([g.to_string(), kl.to_string(), tv.to_string()])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Mec { action } => {
            let counter = MecCounter::default();
            match action {
                MecAction::Count { graph } => {
                    let g = load_graph(&graph)?;
                    emit(None, &counter.mec_size(&g)?.to_string())
                }
                MecAction::Sample { graph } => {
                    let g = load_graph(&graph)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    emit(None, &counter.sample_uniform_dag(&g, &mut rng)?.to_json())
                }
            }
        }
        Command::Sepsys { n, k, graph, out } => {
            let sys: SeparatingSystem = match (n, graph) {
                (Some(n), None) => {
                    let k = k.ok_or_else(|| bcd_core::Error::InvalidArgument("--n needs --k".into()))?;
                    nk_separating_system(n, k)?
                }
                (None, Some(path)) => {
                    let kind = match k {
                        Some(k) => SepSysKind::Nk(k),
                        None => SepSysKind::Coloring,
                    };
                    system_for_essential(&load_graph(&path)?, kind)?
                }
                _ => return Err(bcd_core::Error::InvalidArgument("give either --n and --k or --graph".into()).into()),
            };
            emit(out.as_deref(), &sys.to_json())
        }
        Command::SampleComplexity {
            beta,
            d_min,
            k,
            d_m,
            delta,
            gamma,
            p_star,
            targets,
        } => {
            let inp = SampleComplexityInput {
                beta,
                d_min,
                k,
                d_m,
                delta,
                gamma,
                p_star,
                p_targets: targets.unwrap_or(1),
            };
            emit(None, &required_samples(&inp, targets.is_some())?.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<bcd_core::Error>() {
                Some(err) if err.is_resource_limit() => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
