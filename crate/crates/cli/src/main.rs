use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use subcover_cli::experiment::{run_experiment, Algo, EvalMode, ExperimentSpec};
use subcover_cli::format::{load_instance, save_instance, transcript_to_json, AnyInstance};
use subcover_cli::report::{report_to_csv, report_to_json, write_report_csv, write_report_json};
use subcover_cli::{graph, parse_ratio, parse_rounds, parse_u64_list};
use subcover_core::generators::{
    gen_correlated_knapsack, gen_filter_eval, gen_graph_coverage, gen_hard_instance, gen_odt,
    gen_odt_from_table, CostMode,
};
use subcover_core::oracles::{
    entropy_lower_bound, offline_optimal, optimal_adaptive_independent, optimal_adaptive_scenario,
};
use subcover_core::parca::{ParcaConfig, Sampler, SscRunner};
use subcover_core::ratio::{frac_to_f64, Ratio64};
use subcover_core::setbased::{
    run_set_based_independent, run_set_based_scenario, SetMode, SetRoundPolicy,
};
use subcover_core::sparca::NscRunner;
use subcover_core::{ElemSet, IndSource, ScnSource};

/// Solvers and evaluation harness for stochastic submodular cover with a
/// limited number of adaptive rounds.
#[derive(Parser)]
#[command(name = "subcover", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Generate(GenerateArgs),
    /// Run one policy execution and print its transcript.
    Solve(SolveArgs),
    /// Estimate or exactly compute a policy's expected cost at one round
    /// budget.
    Evaluate(EvaluateArgs),
    /// Compute a lower bound for an instance.
    Lowerbound(LowerboundArgs),
    /// Sweep round budgets and emit a report (JSON and/or CSV).
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Graph,
    Odt,
    OdtTable,
    Hard,
    Filter,
    Knapsack,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Unit,
    Random,
}

impl From<CostArg> for CostMode {
    fn from(c: CostArg) -> CostMode {
        match c {
            CostArg::Unit => CostMode::Unit,
            CostArg::Random => CostMode::Random,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Output instance path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Edge list file (kind graph).
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Restrict to the top-k nodes by out-degree before generating.
    #[arg(long)]
    top: Option<usize>,
    /// Neighbor inclusion probability (kind graph) or positive-outcome
    /// probability (kind odt).
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Empirical sample count per item (kind graph).
    #[arg(long, default_value_t = 500)]
    samples: u32,
    /// Coverage fraction of the groundset, e.g. 0.5 or 1/2 (kind graph).
    #[arg(long, default_value = "1/2")]
    fraction: String,

    /// Scenario count (kind odt).
    #[arg(long)]
    scenarios: Option<u32>,
    /// Test count (kind odt).
    #[arg(long)]
    tests: Option<u32>,
    /// Cost assignment (kinds odt, odt-table).
    #[arg(long, value_enum, default_value_t = CostArg::Unit)]
    costs: CostArg,
    /// Outcome table file with cells 0, 1 or ? (kind odt-table).
    #[arg(long)]
    table: Option<PathBuf>,

    /// Bits per tree level (kind hard).
    #[arg(long)]
    ell: Option<u32>,
    /// Tree depth (kind hard).
    #[arg(long)]
    depth: Option<u32>,

    /// Filter count (kind filter).
    #[arg(long)]
    filters: Option<u32>,
    /// Query as a comma-separated filter list; repeatable (kind filter).
    #[arg(long = "query")]
    queries: Vec<String>,
    /// Per-filter true probabilities, comma separated, e.g. "1/2,0.3".
    #[arg(long)]
    probs: Option<String>,
    /// Per-item costs, comma separated (kinds filter, knapsack).
    #[arg(long)]
    cost_list: Option<String>,

    /// Per-scenario item values, scenarios separated by ';' (kind knapsack).
    #[arg(long)]
    values: Option<String>,
    /// Scenario weights, comma separated (kind knapsack).
    #[arg(long)]
    weights: Option<String>,
    /// Coverage target (kind knapsack).
    #[arg(long)]
    target: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetBasedArg {
    Small,
    Large,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Independent,
    Scenario,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// ssc (independent), nsc or nsc2r (scenario).
    #[arg(long, default_value = "ssc")]
    algo: String,
    #[arg(long)]
    rounds: u32,
    /// Check that the instance has this model.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, value_enum, default_value_t = SamplerArg::Exact)]
    sampler: SamplerArg,
    /// Per-item sample count for sampled scoring (default: formula-based).
    #[arg(long)]
    k_samples: Option<u64>,
    /// Fix the hidden scenario instead of sampling it.
    #[arg(long)]
    scenario: Option<u32>,
    /// Run the set-based conversion instead of the permutation policy.
    #[arg(long, value_enum)]
    set_based: Option<SetBasedArg>,
    /// Failure budget for --set-based small.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Monte-Carlo samples for per-round cost estimation.
    #[arg(long, default_value_t = 200)]
    mu_trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "nsc")]
    algo: String,
    #[arg(long)]
    rounds: u32,
    /// Exact expectation over all scenarios (scenario model).
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, default_value_t = 20)]
    trials: u32,
    #[arg(long, value_enum, default_value_t = SamplerArg::Exact)]
    sampler: SamplerArg,
    /// Per-item sample count for sampled scoring (default: formula-based).
    #[arg(long)]
    k_samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    eta: f64,
    #[arg(long, default_value_t = 200)]
    mu_trials: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LbKind {
    Offline,
    Adaptive,
    Entropy,
}

#[derive(Args)]
struct LowerboundArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    kind: LbKind,
    /// Realization seed (offline bound on independent instances).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed scenario (offline bound on scenario instances); omitted means
    /// the prior-weighted mean over all scenarios.
    #[arg(long)]
    scenario: Option<u32>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "nsc")]
    algo: String,
    /// Inclusive round range, e.g. "1..6" or "3".
    #[arg(long)]
    rounds: String,
    #[arg(long, default_value_t = 20)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SamplerArg::Exact)]
    sampler: SamplerArg,
    /// Per-item sample count for sampled scoring (default: formula-based).
    #[arg(long)]
    k_samples: Option<u64>,
    /// Force Monte-Carlo evaluation even when exhaustive is possible.
    #[arg(long)]
    monte_carlo: bool,
    /// Skip the per-trial offline bound.
    #[arg(long)]
    no_offline: bool,
    #[arg(long, default_value_t = 0.2)]
    eta: f64,
    #[arg(long, default_value_t = 200)]
    mu_trials: u32,
    /// Worker thread count (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<subcover_core::Error>()
                .map(|e| e.exit_code())
                .unwrap_or(2);
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Lowerbound(args) => lowerbound(args),
        Command::Bench(args) => bench(args),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let instance = match args.kind {
        KindArg::Graph => {
            let path = args.edges.ok_or_else(|| anyhow!("--edges is required"))?;
            let mut edges = graph::load_edge_list(&path)?;
            if let Some(k) = args.top {
                edges = graph::top_k_by_out_degree(&edges, k);
            }
            let fraction = parse_ratio(&args.fraction)?;
            AnyInstance::Independent(gen_graph_coverage(
                &edges,
                args.p,
                args.samples,
                fraction,
                &mut rng,
            )?)
        }
        KindArg::Odt => {
            let s = args
                .scenarios
                .ok_or_else(|| anyhow!("--scenarios is required"))?;
            let m = args.tests.ok_or_else(|| anyhow!("--tests is required"))?;
            AnyInstance::Scenario(gen_odt(s, m, args.p, args.costs.into(), &mut rng)?)
        }
        KindArg::OdtTable => {
            let path = args.table.ok_or_else(|| anyhow!("--table is required"))?;
            let table = graph::load_odt_table(&path)?;
            AnyInstance::Scenario(gen_odt_from_table(&table, args.costs.into(), &mut rng)?)
        }
        KindArg::Hard => {
            let ell = args.ell.ok_or_else(|| anyhow!("--ell is required"))?;
            let depth = args.depth.ok_or_else(|| anyhow!("--depth is required"))?;
            AnyInstance::Scenario(gen_hard_instance(ell, depth)?)
        }
        KindArg::Filter => {
            let n = args.filters.ok_or_else(|| anyhow!("--filters is required"))?;
            if args.queries.is_empty() {
                bail!("at least one --query is required");
            }
            let queries: Vec<Vec<u32>> = args
                .queries
                .iter()
                .map(|q| {
                    q.split(',')
                        .map(|x| Ok(x.trim().parse()?))
                        .collect::<Result<Vec<u32>>>()
                })
                .collect::<Result<_>>()?;
            let probs: Vec<Ratio64> = match &args.probs {
                Some(list) => list
                    .split(',')
                    .map(|x| parse_ratio(x.trim()))
                    .collect::<Result<_>>()?,
                None => vec![Ratio64::new(1, 2); n as usize],
            };
            let costs = match &args.cost_list {
                Some(list) => parse_u64_list(list)?,
                None => vec![1; n as usize],
            };
            AnyInstance::Independent(gen_filter_eval(n, queries, &probs, &costs)?)
        }
        KindArg::Knapsack => {
            let spec = args.values.ok_or_else(|| anyhow!("--values is required"))?;
            let values: Vec<Vec<u64>> =
                spec.split(';').map(parse_u64_list).collect::<Result<_>>()?;
            let target = args.target.ok_or_else(|| anyhow!("--target is required"))?;
            let n_items = values.first().map(|v| v.len()).unwrap_or(0);
            let weights = match &args.weights {
                Some(list) => parse_u64_list(list)?,
                None => vec![1; values.len()],
            };
            let costs = match &args.cost_list {
                Some(list) => parse_u64_list(list)?,
                None => vec![1; n_items],
            };
            AnyInstance::Scenario(gen_correlated_knapsack(&values, &weights, &costs, target)?)
        }
    };
    save_instance(&instance, &args.out)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn sampler_of(arg: SamplerArg) -> Sampler {
    match arg {
        SamplerArg::Exact => Sampler::Exact,
        SamplerArg::Sampled => Sampler::Sampled,
    }
}

fn check_model(inst: &AnyInstance, expected: Option<ModelArg>) -> Result<()> {
    match (expected, inst) {
        (Some(ModelArg::Independent), AnyInstance::Scenario(_)) => Err(
            subcover_core::Error::InvalidParameter(
                "instance is scenario-model, expected independent".into(),
            )
            .into(),
        ),
        (Some(ModelArg::Scenario), AnyInstance::Independent(_)) => Err(
            subcover_core::Error::InvalidParameter(
                "instance is independent-model, expected scenario".into(),
            )
            .into(),
        ),
        _ => Ok(()),
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    check_model(&inst, args.model)?;
    let scoring = ParcaConfig {
        delta: Ratio64::new(1, 2),
        sampler: sampler_of(args.sampler),
        k_samples: args.k_samples,
        epsilon: None,
        rng_seed: args.seed,
    };
    let output = if let Some(mode) = args.set_based {
        let mode = match mode {
            SetBasedArg::Small => SetMode::SmallR { eta: args.eta },
            SetBasedArg::Large => SetMode::LargeR,
        };
        let mut policy = SetRoundPolicy::new(args.rounds, mode);
        policy.mu_trials = args.mu_trials;
        policy.rng_seed = args.seed;
        let t = match &inst {
            AnyInstance::Independent(ind) => {
                let mut src = IndSource::sampling(ChaCha8Rng::seed_from_u64(args.seed));
                run_set_based_independent(ind, &policy, &scoring, &mut src)?
            }
            AnyInstance::Scenario(scn) => {
                let mut src = scenario_source(args.scenario, args.seed);
                run_set_based_scenario(scn, &policy, &mut src)?
            }
        };
        serde_json::to_string_pretty(&serde_json::json!({
            "mode": match mode { SetMode::SmallR { .. } => "set-small", SetMode::LargeR => "set-large" },
            "rounds_used": t.rounds_used,
            "total_cost": t.total_cost,
            "covered": t.covered,
            "final_value": t.final_value,
            "max_value": t.max_value,
            "rounds": t.rounds.iter().map(|r| serde_json::json!({
                "probed": r.probed,
                "cost": r.cost,
                "budget": r.budget,
                "mu_estimate": r.mu_estimate,
                "success": r.success,
            })).collect::<Vec<_>>(),
        }))? + "\n"
    } else {
        let algo: Algo = args.algo.parse()?;
        let transcript = match (&inst, algo) {
            (AnyInstance::Independent(ind), Algo::Ssc) => {
                let mut runner = SscRunner::new(ind, scoring);
                let outcomes = ind.draw_outcomes(&mut ChaCha8Rng::seed_from_u64(args.seed));
                runner.solve(args.rounds, &mut IndSource::Fixed(&outcomes))?
            }
            (AnyInstance::Scenario(scn), Algo::Nsc) => {
                let mut src = scenario_source(args.scenario, args.seed);
                NscRunner::new(scn).solve(args.rounds, &mut src)?
            }
            (AnyInstance::Scenario(scn), Algo::Nsc2r) => {
                let mut src = scenario_source(args.scenario, args.seed);
                NscRunner::new(scn).solve_2r(args.rounds, &mut src)?
            }
            _ => {
                return Err(subcover_core::Error::InvalidParameter(format!(
                    "algorithm {:?} does not match the {} model",
                    args.algo,
                    inst.model()
                ))
                .into())
            }
        };
        transcript_to_json(&transcript)
    };
    emit(&output, args.out.as_deref())
}

fn scenario_source(fixed: Option<u32>, seed: u64) -> ScnSource {
    match fixed {
        Some(w) => ScnSource::Fixed(w),
        None => ScnSource::sampling(ChaCha8Rng::seed_from_u64(seed)),
    }
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let algo: Algo = args.algo.parse()?;
    let mut spec = ExperimentSpec::new(algo, (args.rounds, args.rounds), args.seed);
    spec.trials = args.trials;
    spec.eval = if args.exhaustive {
        EvalMode::Exhaustive
    } else {
        EvalMode::MonteCarlo
    };
    spec.sampler = sampler_of(args.sampler);
    spec.k_samples = args.k_samples;
    spec.eta = args.eta;
    spec.mu_trials = args.mu_trials;
    let report = run_experiment(&inst, &spec)?;
    let entry = &report.entries[0];
    let output = serde_json::to_string_pretty(&serde_json::json!({
        "algo": args.algo,
        "r": entry.r,
        "eval_mode": entry.eval_mode,
        "trials": entry.trials,
        "mean_cost": entry.mean_cost,
        "stderr": entry.stderr,
        "coverage_rate": entry.coverage_rate,
        "lb_offline": entry.lb_offline,
        "lb_entropy": entry.lb_entropy,
    }))? + "\n";
    emit(&output, args.out.as_deref())
}

fn lowerbound(args: LowerboundArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let value = match (args.kind, &inst) {
        (LbKind::Entropy, AnyInstance::Scenario(scn)) => {
            let b = entropy_lower_bound(scn);
            serde_json::json!({"kind": "entropy", "bits": b.bits, "heuristic": b.heuristic})
        }
        (LbKind::Entropy, AnyInstance::Independent(_)) => {
            bail!("the entropy bound applies to scenario instances")
        }
        (LbKind::Adaptive, AnyInstance::Scenario(scn)) => {
            let opt = optimal_adaptive_scenario(scn)?;
            serde_json::json!({"kind": "adaptive", "expected_cost": frac_to_f64(&opt)})
        }
        (LbKind::Adaptive, AnyInstance::Independent(ind)) => {
            let opt = optimal_adaptive_independent(ind)?;
            serde_json::json!({"kind": "adaptive", "expected_cost": frac_to_f64(&opt)})
        }
        (LbKind::Offline, AnyInstance::Scenario(scn)) => match args.scenario {
            Some(omega) => {
                let realized: Vec<ElemSet> = (0..scn.m())
                    .map(|e| scn.realization(e, omega).clone())
                    .collect();
                let b = offline_optimal(scn.costs(), &realized, scn.objective())?;
                serde_json::json!({"kind": "offline", "scenario": omega,
                                   "cost": b.value(), "exact": b.is_exact()})
            }
            None => {
                let mut mean = 0.0;
                let mut exact = true;
                for omega in 0..scn.s() {
                    let realized: Vec<ElemSet> = (0..scn.m())
                        .map(|e| scn.realization(e, omega).clone())
                        .collect();
                    let b = offline_optimal(scn.costs(), &realized, scn.objective())?;
                    exact &= b.is_exact();
                    mean += b.value() as f64 * scn.weight(omega) as f64;
                }
                mean /= scn.weight_total() as f64;
                serde_json::json!({"kind": "offline", "mean_cost": mean, "exact": exact})
            }
        },
        (LbKind::Offline, AnyInstance::Independent(ind)) => {
            let outcomes = ind.draw_outcomes(&mut ChaCha8Rng::seed_from_u64(args.seed));
            let costs: Vec<u64> = ind.items().iter().map(|i| i.cost).collect();
            let realized: Vec<ElemSet> = ind
                .items()
                .iter()
                .zip(&outcomes)
                .map(|(item, &o)| item.support()[o as usize].0.clone())
                .collect();
            let b = offline_optimal(&costs, &realized, ind.objective())?;
            serde_json::json!({"kind": "offline", "seed": args.seed,
                               "cost": b.value(), "exact": b.is_exact()})
        }
    };
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let algo: Algo = args.algo.parse()?;
    let rounds = parse_rounds(&args.rounds)?;
    let mut spec = ExperimentSpec::new(algo, rounds, args.seed);
    spec.trials = args.trials;
    spec.eval = if args.monte_carlo {
        EvalMode::MonteCarlo
    } else {
        EvalMode::Auto
    };
    spec.sampler = sampler_of(args.sampler);
    spec.k_samples = args.k_samples;
    spec.offline_bound = !args.no_offline;
    spec.eta = args.eta;
    spec.mu_trials = args.mu_trials;

    let started = std::time::Instant::now();
    let report = if args.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .context("cannot build worker pool")?;
        pool.install(|| run_experiment(&inst, &spec))?
    } else {
        run_experiment(&inst, &spec)?
    };
    eprintln!(
        "bench finished in {:.2}s ({} round budgets)",
        started.elapsed().as_secs_f64(),
        report.entries.len()
    );
    if let Some(path) = &args.out_json {
        write_report_json(&report, path)?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = &args.out_csv {
        write_report_csv(&report, path)?;
        eprintln!("wrote {}", path.display());
    }
    if args.out_json.is_none() && args.out_csv.is_none() {
        print!("{}", report_to_csv(&report));
        let _ = report_to_json(&report);
    }
    Ok(())
}

fn emit(text: &str, path: Option<&std::path::Path>) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
