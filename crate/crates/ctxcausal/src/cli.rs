//! `ctxcausal` command line: `generate`, `discover`, `evaluate`, `bench`.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use ctxcausal_core::causal::CausalParams;
use ctxcausal_core::eval::{evaluate, EvalOptions, Matching, Pooling};
use ctxcausal_core::synth::{generate_pair, CbnConfig, GroundTruth, PairOptions};
use ctxcausal_core::tree::TreeConfig;
use ctxcausal_core::{discover, Assignment, Dataset, Discovery, Executor, Sequential, TccParams, VarId};

use crate::bench;
use crate::error::{AppError, Result};
use crate::exec::RayonExecutor;
use crate::format::{
    ancestors_json, meta_path, read_file, rules_json, truth_json, write_file, MetaJson, MetricsJson, ParamsJson,
    RuleJson, TreeJson, TruthJson,
};
use crate::io::{load_csv, save_csv};

#[derive(Debug, Parser)]
#[command(name = "ctxcausal", version, about = "Context-specific causal rule discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a two-context synthetic benchmark with known causes.
    Generate(GenerateArgs),
    /// Discover causal rules in a CSV file.
    Discover(DiscoverArgs),
    /// Score discovered rules against planted causes.
    Evaluate(EvaluateArgs),
    /// Time discovery over variable counts and ensemble sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Predictor variables per network.
    #[arg(long)]
    vars: usize,
    /// Total rows, split evenly between the two contexts.
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
    /// Output JSON with the direct causes of Y per context value.
    #[arg(long)]
    truth: PathBuf,
    /// Output JSON with every ancestor of Y per context value.
    #[arg(long)]
    ancestors: Option<PathBuf>,
    /// Draw an independent DAG for the second context.
    #[arg(long)]
    independent_dags: bool,
    /// Shuffle rows instead of stacking the two contexts.
    #[arg(long)]
    shuffle: bool,
    /// Edge probability of the random DAGs (default: expected in-degree 2).
    #[arg(long)]
    edge_prob: Option<f64>,
}

#[derive(Debug, Args)]
struct DiscoverArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Binary target column.
    #[arg(long)]
    target: String,
    /// Minimum confidence of a decision rule.
    #[arg(long, default_value_t = 0.6)]
    theta: f64,
    /// Minimum absolute causal effect.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Trees in the ensemble (1 for a single tree).
    #[arg(long, default_value_t = 1)]
    trees: usize,
    /// Largest context size considered.
    #[arg(long, default_value_t = 2)]
    max_context: usize,
    /// Minimum rows per leaf (default: max(20, 1% of the rows)).
    #[arg(long)]
    min_leaf: Option<usize>,
    /// Significance level of the covariate association test.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Significance level of the split-pruning test.
    #[arg(long, default_value_t = 0.05)]
    fisher_alpha: f64,
    /// Propensity strata.
    #[arg(long, default_value_t = 5)]
    strata: usize,
    /// Minimum treated and control rows in a kept stratum.
    #[arg(long, default_value_t = 5)]
    min_arm: usize,
    #[arg(long, default_value_t = 8)]
    max_depth: usize,
    /// Comma-separated whitelist of treatment variables.
    #[arg(long, value_delimiter = ',')]
    treatments: Option<Vec<String>>,
    /// Output JSON; run metadata goes to the matching `.meta.json`.
    #[arg(long)]
    out: PathBuf,
    /// Recorded in the metadata; discovery itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0: one per CPU). Output does not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also write the fitted trees as JSON.
    #[arg(long)]
    dump_trees: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Rules JSON written by `discover`.
    #[arg(long)]
    rules: PathBuf,
    /// Truth JSON written by `generate`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value = "Xc")]
    context_var: String,
    /// Only rules whose context fixes the context variable count.
    #[arg(long)]
    strict: bool,
    /// Score (variable, context value) pairs instead of variables.
    #[arg(long)]
    pairs: bool,
    /// Also write the metrics as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,150,200,250")]
    vars_list: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    trees: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    max_context: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Also write the cells as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("CTXCAUSAL_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Discover(a) => run_discover(&a),
        Command::Evaluate(a) => run_evaluate(&a),
        Command::Bench(a) => run_bench(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let opts = PairOptions {
        cbn: CbnConfig {
            edge_prob: a.edge_prob,
            ..CbnConfig::default()
        },
        independent_dags: a.independent_dags,
        shuffle: a.shuffle,
    };
    let (data, truth) = generate_pair(a.vars, a.samples, a.seed, &opts)?;
    save_csv(&data, &a.out)?;
    write_file(&a.truth, &to_json(&truth_json(&truth, &data))?)?;
    if let Some(path) = &a.ancestors {
        write_file(path, &to_json(&ancestors_json(&truth, &data))?)?;
    }
    println!(
        "wrote {} rows x {} columns to {}; causes of Y: Xc=0 {:?}, Xc=1 {:?}",
        data.n_rows(),
        data.variables().len(),
        a.out.display(),
        names(&data, &truth.causes[0]),
        names(&data, &truth.causes[1]),
    );
    Ok(())
}

fn names(data: &Dataset, ids: &BTreeSet<VarId>) -> Vec<String> {
    ids.iter().map(|&v| data.variable(v).name.clone()).collect()
}

fn discover_params(a: &DiscoverArgs, data: &Dataset) -> Result<TccParams> {
    let treatments = match &a.treatments {
        None => None,
        Some(list) => Some(
            list.iter()
                .map(|name| data.var_id(name).ok_or_else(|| ctxcausal_core::Error::UnknownVariable(name.clone())))
                .collect::<std::result::Result<BTreeSet<VarId>, _>>()?,
        ),
    };
    let params = TccParams {
        theta: a.theta,
        eta: a.eta,
        trees: a.trees,
        max_context_size: a.max_context,
        tree: TreeConfig {
            min_leaf: a.min_leaf,
            fisher_alpha: a.fisher_alpha,
            max_depth: a.max_depth,
            ..TreeConfig::default()
        },
        causal: CausalParams {
            strata: a.strata,
            min_arm: a.min_arm,
            alpha: a.alpha,
            ..CausalParams::default()
        },
        treatments,
    };
    params.validate()?;
    Ok(params)
}

fn discover_with(data: &Dataset, params: &TccParams, workers: usize) -> Result<(Discovery, usize)> {
    if workers == 1 {
        return Ok((discover(data, params, &Sequential)?, 1));
    }
    let pool = RayonExecutor::new(workers)?;
    Ok((discover(data, params, &pool)?, pool.workers()))
}

fn run_discover(a: &DiscoverArgs) -> Result<()> {
    let (data, report) = load_csv(&a.data, &a.target)?;
    let params = discover_params(a, &data)?;
    let start = Instant::now();
    let (found, workers) = discover_with(&data, &params, a.workers)?;
    log::info!("discovery took {:.2}s", start.elapsed().as_secs_f64());

    let echoed = ParamsJson::new(&params, &data, a.seed);
    write_file(&a.out, &rules_json(&found.rules, &data, &echoed)?)?;
    let meta = MetaJson {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        data: a.data.display().to_string(),
        target: a.target.clone(),
        rows: data.n_rows(),
        variables: data.variables().len(),
        load: (&report).into(),
        params: echoed,
        workers,
        stats: (&found.stats).into(),
        rules: found.rules.len(),
    };
    write_file(&meta_path(&a.out), &to_json(&meta)?)?;
    if let Some(path) = &a.dump_trees {
        let trees: Vec<TreeJson> = found.trees.iter().map(|t| TreeJson::new(t, &data)).collect();
        write_file(path, &to_json(&trees)?)?;
        for (i, t) in found.trees.iter().enumerate() {
            log::debug!("tree {i}:\n{}", t.display(&data));
        }
    }

    for rule in &found.rules {
        println!(
            "{:<12} {:<40} ace={:+.4} support={}",
            data.variable(rule.treatment).name,
            format!("[{}]", rule.context.display(&data)),
            rule.ace,
            rule.support
        );
    }
    println!(
        "{} rules from {} candidates ({} tested, {} untestable, {} redundant)",
        found.rules.len(),
        found.stats.candidates,
        found.stats.tested,
        found.stats.untestable,
        found.stats.redundant
    );
    if found.stats.tested == 0 {
        return Err(AppError::NoTestableCandidates);
    }
    Ok(())
}

/// Context restriction of a rule on the context variable, as seen by the
/// scorer: `None` when the rule is compatible with neither value.
fn context_on(rule: &RuleJson, context_var: &str, id: VarId) -> Option<Assignment> {
    let mut holds = [true, true];
    for cond in rule.context.iter().filter(|c| c.var == context_var) {
        for (v, h) in holds.iter_mut().enumerate() {
            *h &= cond.holds_for(&v.to_string());
        }
    }
    match holds {
        [true, true] => Some(Assignment::new()),
        [false, false] => None,
        [false, true] => Some(Assignment::equals(id, 1)),
        [true, false] => Some(Assignment::equals(id, 0)),
    }
}

fn run_evaluate(a: &EvaluateArgs) -> Result<()> {
    let rules: Vec<RuleJson> = serde_json::from_str(&read_file(&a.rules)?)?;
    let truth_doc: TruthJson = serde_json::from_str(&read_file(&a.truth)?)?;

    let mut ids: BTreeMap<String, VarId> = BTreeMap::new();
    let mut intern = |name: &str| {
        let next = ids.len();
        *ids.entry(name.to_string()).or_insert(next)
    };
    let context_var = intern(&a.context_var);
    let mut causes = [BTreeSet::new(), BTreeSet::new()];
    for (key, vars) in &truth_doc {
        let v: usize = match key.as_str() {
            "0" => 0,
            "1" => 1,
            other => return Err(AppError::Usage(format!("truth key `{other}` is not a context value 0/1"))),
        };
        causes[v] = vars.iter().map(|n| intern(n)).collect();
    }
    let scored: Vec<(VarId, Assignment)> = rules
        .iter()
        .filter_map(|r| Some((intern(&r.treatment), context_on(r, &a.context_var, context_var)?)))
        .collect();

    let truth = GroundTruth {
        context_var,
        ancestors: causes.clone(),
        causes,
    };
    let opts = EvalOptions {
        matching: if a.strict { Matching::Strict } else { Matching::Lenient },
        pooling: if a.pairs { Pooling::Pairs } else { Pooling::Variables },
    };
    let metrics = evaluate(scored.iter().map(|(t, c)| (*t, c)), &truth, context_var, opts);
    let by_id: BTreeMap<VarId, &str> = ids.iter().map(|(n, &i)| (i, n.as_str())).collect();
    let doc = MetricsJson::new(&metrics, opts, |id| by_id[&id].to_string());
    print!("{}", doc.table());
    if let Some(path) = &a.out {
        write_file(path, &to_json(&doc)?)?;
    }
    Ok(())
}

fn run_bench(a: &BenchArgs) -> Result<()> {
    let base = TccParams {
        max_context_size: a.max_context,
        ..TccParams::default()
    };
    base.validate()?;
    let cells = if a.workers == 1 {
        bench_with(a, &base, &Sequential)?
    } else {
        bench_with(a, &base, &RayonExecutor::new(a.workers)?)?
    };
    print!("{}", bench::table(&cells));
    if let Some(path) = &a.out {
        write_file(path, &to_json(&cells)?)?;
    }
    Ok(())
}

fn bench_with<E: Executor>(a: &BenchArgs, base: &TccParams, exec: &E) -> Result<Vec<bench::BenchCell>> {
    bench::sweep(&a.vars_list, &a.trees, a.samples, a.seed, base, exec)
}
