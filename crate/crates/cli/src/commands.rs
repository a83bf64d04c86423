use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use bdt_core::averaging::{ensure_trainable, run_fold, summarize_folds};
use bdt_core::diagnostics::{summarize_trace, EmulatorConfig};
use bdt_core::{
    emulate_moves, generate_xor3, make_folds, run_chain, ChipmanPrior, CvReport, Dataset,
    DirichletPrior, MoveConfig, RuleProposalMode, SamplerConfig, StepSize, Strategy,
    UnavailablePolicy,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::io::{self, LabelColumn};
use crate::manifest::Manifest;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Parser)]
#[command(
    name = "bdt",
    version,
    about = "Bayesian averaging over decision trees sampled by reversible-jump MCMC"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the XOR3 dataset as CSV
    GenXor3(GenXor3Args),
    /// Run one chain and save retained trees, trace and summary
    Run(RunArgs),
    /// Cross-validate one or both strategies
    Cv(CvArgs),
    /// Emulate realized move frequencies under unavailable moves
    Emulate(EmulateArgs),
    /// Re-run the command recorded in a manifest and compare output digests
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Standard,
    Sweeping,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Standard => Strategy::Standard,
            StrategyArg::Sweeping => Strategy::Sweeping,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CvStrategyArg {
    Standard,
    Sweeping,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleModeArg {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnavailableArg {
    Resample,
    Reject,
}

#[derive(Debug, Args)]
pub struct GenXor3Args {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Label column name, or `last`
    #[arg(long, default_value = "last")]
    pub label_column: LabelColumn,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Minimal number of training rows per terminal
    #[arg(long, default_value_t = 5)]
    pub pmin: usize,
    /// Birth, death, change-split, change-rule probabilities
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.1,0.1,0.7",
        allow_hyphen_values = true
    )]
    pub moves: Vec<f64>,
    #[arg(long, default_value_t = 50_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 10_000)]
    pub post: usize,
    #[arg(long, default_value_t = 7)]
    pub thin: usize,
    /// Dirichlet parameter: one value for every class, or one per class
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1",
        allow_hyphen_values = true
    )]
    pub alpha: Vec<f64>,
    /// Change-rule step as a fraction of each feature's range
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub sigma_frac: f64,
    /// Depth-dependent split prior `gamma,delta`
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub chipman: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Rule proposal; defaults to discrete for standard and continuous for sweeping
    #[arg(long)]
    pub rule_mode: Option<RuleModeArg>,
    /// What to do with a move that violates `pmin`
    #[arg(long, value_enum, default_value_t = UnavailableArg::Resample)]
    pub unavailable: UnavailableArg,
    /// Cap on the number of terminals (default: training rows − 1)
    #[arg(long)]
    pub max_terminals: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::Sweeping)]
    pub strategy: StrategyArg,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Seed of the fold assignment (default: --seed)
    #[arg(long)]
    pub fold_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = CvStrategyArg::Both)]
    pub strategy: CvStrategyArg,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Dataset name in the output tables (default: file stem)
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmulateArgs {
    #[arg(long, default_value_t = 0.2)]
    pub pb: f64,
    #[arg(long, default_value_t = 0.2)]
    pub pd: f64,
    #[arg(long, default_value_t = 0.6)]
    pub pc: f64,
    /// Probability that a drawn move is an unavailable birth
    #[arg(long, default_value_t = 0.0)]
    pub pbu: f64,
    /// Probability that a drawn move is an unavailable change
    #[arg(long, default_value_t = 0.0)]
    pub pcu: f64,
    /// Share of unavailable changes that are redrawn (sweeping)
    #[arg(long, default_value_t = 0.1)]
    pub case3: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Standard)]
    pub mode: StrategyArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the replayed outputs (default: `replay/` next to the manifest)
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Runs a parsed command line. `argv` excludes the program name and is recorded
/// in the manifest.
pub fn execute(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::GenXor3(a) => cmd_gen_xor3(&a, argv),
        Command::Run(a) => cmd_run(&a, argv),
        Command::Cv(a) => cmd_cv(&a, argv),
        Command::Emulate(a) => cmd_emulate(&a, argv),
        Command::Replay(a) => cmd_replay(&a),
    }
}

pub fn cmd_gen_xor3(args: &GenXor3Args, argv: &[String]) -> Result<()> {
    if args.n < 2 {
        return Err(CliError::usage(
            "--n",
            format!("need at least 2 rows, got {}", args.n),
        ));
    }
    let ds = generate_xor3(args.n, args.seed)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    io::write_csv(&ds, &args.out)?;
    let mut manifest = Manifest::new("gen-xor3", argv);
    manifest.set("n", args.n);
    manifest.set("seed", args.seed);
    manifest.add_output("data", &args.out)?;
    manifest.write(&sidecar_manifest(&args.out))?;
    println!("wrote {} rows to {}", ds.n(), args.out.display());
    Ok(())
}

/// Manifest path for a single-file output: `<file>.manifest`.
pub fn sidecar_manifest(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    out.with_file_name(name)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::io(path, std::io::Error::other(e))
}

/// Validates chain flags against `ds` and resolves them into a sampler config.
pub fn sampler_config(
    chain: &ChainArgs,
    strategy: Strategy,
    ds: &Dataset,
) -> Result<SamplerConfig> {
    let probs: [f64; 4] = chain.moves.as_slice().try_into().map_err(|_| {
        CliError::usage(
            "--moves",
            format!("expected 4 probabilities, got {}", chain.moves.len()),
        )
    })?;
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(CliError::usage(
            "--moves",
            "probabilities must lie in [0, 1]",
        ));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CliError::usage(
            "--moves",
            format!("probabilities sum to {sum}, not 1"),
        ));
    }
    if probs[0] == 0.0 {
        return Err(CliError::usage(
            "--moves",
            "birth probability must be positive",
        ));
    }
    if chain.pmin < 1 || chain.pmin >= ds.n() {
        return Err(CliError::usage(
            "--pmin",
            format!("must lie in 1..{} for {} training rows", ds.n(), ds.n()),
        ));
    }
    if chain.post < 1 {
        return Err(CliError::usage("--post", "must be >= 1"));
    }
    if chain.thin < 1 {
        return Err(CliError::usage("--thin", "must be >= 1"));
    }
    if !(chain.sigma_frac.is_finite() && chain.sigma_frac > 0.0) {
        return Err(CliError::usage("--sigma-frac", "must be positive"));
    }
    let c = ds.n_classes();
    if chain.alpha.len() != 1 && chain.alpha.len() != c {
        return Err(CliError::usage(
            "--alpha",
            format!("give 1 or {c} values, got {}", chain.alpha.len()),
        ));
    }
    let dirichlet = DirichletPrior::new(chain.alpha.clone())
        .map_err(|e| CliError::usage("--alpha", e.to_string()))?;
    let chipman = match chain.chipman.as_deref() {
        None => ChipmanPrior::disabled(),
        Some(&[gamma, delta]) => ChipmanPrior::new(gamma, delta)
            .map_err(|e| CliError::usage("--chipman", e.to_string()))?,
        Some(_) => return Err(CliError::usage("--chipman", "expected gamma,delta")),
    };
    if chain.max_terminals.is_some_and(|k| k < 2) {
        return Err(CliError::usage("--max-terminals", "must be >= 2"));
    }
    let rule_mode = match chain.rule_mode {
        None => strategy.default_rule_mode(),
        Some(RuleModeArg::Discrete) => RuleProposalMode::DiscreteObserved,
        Some(RuleModeArg::Continuous) => RuleProposalMode::ContinuousRootRange,
    };
    let mut moves = MoveConfig::default_mix(chain.pmin, rule_mode).with_probabilities(probs);
    moves.p_change_rule = (1.0 - probs[0] - probs[1] - probs[2]).max(0.0);
    moves.step = StepSize::RangeFraction(chain.sigma_frac);
    moves.max_terminals = chain.max_terminals;

    let mut cfg = SamplerConfig::new(strategy, chain.pmin)
        .with_schedule(chain.burnin, chain.post, chain.thin)
        .with_seed(chain.seed);
    cfg.moves = moves;
    cfg.dirichlet = dirichlet;
    cfg.chipman = chipman;
    cfg.unavailable = match chain.unavailable {
        UnavailableArg::Resample => UnavailablePolicy::Resample,
        UnavailableArg::Reject => UnavailablePolicy::Reject,
    };
    cfg.validate(ds)?;
    Ok(cfg)
}

fn record_config(m: &mut Manifest, cfg: &SamplerConfig) {
    let [b, d, cs, cr] = cfg.moves.probabilities();
    m.set("strategy", cfg.strategy.as_str());
    m.set("p_min", cfg.moves.p_min);
    m.set("moves", format!("{b},{d},{cs},{cr}"));
    m.set("rule_mode", format!("{:?}", cfg.moves.rule_mode));
    m.set("step", format!("{:?}", cfg.moves.step));
    m.set(
        "max_terminals",
        cfg.moves
            .max_terminals
            .map_or_else(|| "n-1".to_string(), |k| k.to_string()),
    );
    m.set("burn_in", cfg.burn_in);
    m.set("post_burn_in", cfg.post_burn_in);
    m.set("thin", cfg.thin);
    m.set("seed", cfg.seed);
    m.set("alpha", format!("{:?}", cfg.dirichlet.alpha()));
    m.set(
        "chipman",
        if cfg.chipman.enabled {
            format!("{},{}", cfg.chipman.gamma, cfg.chipman.delta)
        } else {
            "off".into()
        },
    );
    m.set("unavailable", cfg.unavailable.as_str());
    m.set("max_redraws", cfg.max_redraws);
}

pub fn cmd_run(args: &RunArgs, argv: &[String]) -> Result<()> {
    let ds = io::load_csv(&args.data.data, &args.data.label_column)?;
    let cfg = sampler_config(&args.chain, args.strategy.into(), &ds)?;
    let out = run_chain(&ds, &cfg)?;
    let summary = summarize_trace(&out.trace)?;

    let dir = &args.out_dir;
    create_dir(dir)?;
    let trees = dir.join("trees.txt");
    let trace = dir.join("trace.csv");
    let hist = dir.join("k_histogram.csv");
    let stats = dir.join("summary.csv");
    io::trees::write_samples(&out.samples, &trees)?;
    io::trace::write_trace(&out.trace, create(&trace)?).map_err(csv_err(&trace))?;
    io::trace::write_k_histogram(&summary, create(&hist)?).map_err(csv_err(&hist))?;
    io::trace::write_run_summary(&out, &summary, create(&stats)?).map_err(csv_err(&stats))?;

    let mut manifest = Manifest::new("run", argv);
    record_config(&mut manifest, &cfg);
    manifest.add_input("data", &args.data.data)?;
    for (name, path) in [
        ("trees", &trees),
        ("trace", &trace),
        ("k_histogram", &hist),
        ("summary", &stats),
    ] {
        manifest.add_output(name, path)?;
    }
    manifest.write(&dir.join(MANIFEST))?;

    println!(
        "{}: {} retained trees, acceptance {:.3} (burn-in) / {:.3} (post), mean splits {:.2}, mean nodes {:.2}",
        cfg.strategy.label(),
        out.samples.len(),
        out.acceptance.burn_in,
        out.acceptance.post,
        out.mean_splits(),
        out.mean_total_nodes()
    );
    Ok(())
}

/// Cross-validates every strategy in `strategies` on the same folds. Fold chains
/// run on the current rayon pool; results do not depend on the pool size.
pub fn cross_validate_parallel(
    ds: &Dataset,
    folds: usize,
    fold_seed: u64,
    configs: &[SamplerConfig],
) -> Result<Vec<CvReport>> {
    let split =
        make_folds(ds, folds, fold_seed).map_err(|e| CliError::usage("--folds", e.to_string()))?;
    let (split, restratified) = ensure_trainable(ds, &split)?;
    if restratified {
        eprintln!("warning: a training split lacked a class; folds were re-stratified");
    }
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..split.fold_count).map(move |f| (c, f)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(c, f)| run_fold(ds, &split, f, &configs[c]).map(|r| (c, r)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(configs
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let mine = results
                .iter()
                .filter(|(i, _)| *i == c)
                .map(|(_, r)| r.clone())
                .collect();
            summarize_folds(cfg.strategy, mine, restratified)
        })
        .collect())
}

pub fn cmd_cv(args: &CvArgs, argv: &[String]) -> Result<()> {
    let ds = io::load_csv(&args.data.data, &args.data.label_column)?;
    if args.folds < 2 || args.folds > ds.n() {
        return Err(CliError::usage(
            "--folds",
            format!("must lie in 2..={}", ds.n()),
        ));
    }
    let strategies = match args.strategy {
        CvStrategyArg::Standard => vec![Strategy::Standard],
        CvStrategyArg::Sweeping => vec![Strategy::Sweeping],
        CvStrategyArg::Both => vec![Strategy::Standard, Strategy::Sweeping],
    };
    // p_min is checked against the smallest training split
    let smallest_train = ds.n() - ds.n().div_ceil(args.folds);
    if args.chain.pmin >= smallest_train {
        return Err(CliError::usage(
            "--pmin",
            format!("must be below the smallest training split ({smallest_train})"),
        ));
    }
    let configs = strategies
        .iter()
        .map(|&s| sampler_config(&args.chain, s, &ds))
        .collect::<Result<Vec<_>>>()?;
    let fold_seed = args.fold_seed.unwrap_or(args.chain.seed);
    if args.jobs == Some(0) {
        return Err(CliError::usage("--jobs", "must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage("--jobs", e.to_string()))?;
    let reports = pool.install(|| cross_validate_parallel(&ds, args.folds, fold_seed, &configs))?;

    let name = args.name.clone().unwrap_or_else(|| {
        args.data
            .data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    });
    let dir = &args.out_dir;
    create_dir(dir)?;
    let folds_path = dir.join("cv_folds.csv");
    let summary_path = dir.join("cv_summary.csv");
    io::results::write_folds(&name, &reports, create(&folds_path)?)
        .map_err(csv_err(&folds_path))?;
    io::results::write_summary(&name, &reports, create(&summary_path)?)
        .map_err(csv_err(&summary_path))?;

    let mut manifest = Manifest::new("cv", argv);
    record_config(&mut manifest, &configs[0]);
    manifest.set(
        "strategy",
        strategies
            .iter()
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.set("folds", args.folds);
    manifest.set("fold_seed", fold_seed);
    manifest.add_input("data", &args.data.data)?;
    manifest.add_output("cv_folds", &folds_path)?;
    manifest.add_output("cv_summary", &summary_path)?;
    manifest.write(&dir.join(MANIFEST))?;

    println!(
        "{:<8} {:>16} {:>16} {:>14} {:>14}",
        "strategy", "accuracy %", "entropy/fold", "splits", "nodes"
    );
    for r in &reports {
        println!(
            "{:<8} {:>8.1} ± {:<5.1} {:>8.2} ± {:<5.2} {:>6.1} ± {:<5.1} {:>6.1} ± {:<5.1}",
            r.strategy.label(),
            100.0 * r.accuracy.mean,
            100.0 * r.accuracy.two_sigma,
            r.entropy.mean,
            r.entropy.two_sigma,
            r.splits.mean,
            r.splits.two_sigma,
            r.total_nodes.mean,
            r.total_nodes.two_sigma
        );
    }
    Ok(())
}

pub fn emulator_config(args: &EmulateArgs) -> Result<EmulatorConfig> {
    let cfg = EmulatorConfig {
        p_birth: args.pb,
        p_death: args.pd,
        p_change: args.pc,
        p_birth_unavailable: args.pbu,
        p_change_unavailable: args.pcu,
        case3_fraction: args.case3,
        mode: args.mode.into(),
        trials: args.trials,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| {
        CliError::usage("--pb/--pd/--pc/--pbu/--pcu/--case3/--trials", e.to_string())
    })?;
    Ok(cfg)
}

pub fn cmd_emulate(args: &EmulateArgs, argv: &[String]) -> Result<()> {
    let cfg = emulator_config(args)?;
    let freq = emulate_moves(&cfg)?;
    let mut table = Vec::new();
    io::results::write_frequencies(&cfg, &freq, &mut table)
        .map_err(csv_err(Path::new("<stdout>")))?;
    print!("{}", String::from_utf8_lossy(&table));
    if let Some(dir) = &args.out_dir {
        create_dir(dir)?;
        let path = dir.join("frequencies.csv");
        std::fs::write(&path, &table).map_err(|e| CliError::io(&path, e))?;
        let mut manifest = Manifest::new("emulate", argv);
        manifest.set("p_birth", cfg.p_birth);
        manifest.set("p_death", cfg.p_death);
        manifest.set("p_change", cfg.p_change);
        manifest.set("p_birth_unavailable", cfg.p_birth_unavailable);
        manifest.set("p_change_unavailable", cfg.p_change_unavailable);
        manifest.set("case3_fraction", cfg.case3_fraction);
        manifest.set("mode", cfg.mode.as_str());
        manifest.set("trials", cfg.trials);
        manifest.set("seed", cfg.seed);
        manifest.add_output("frequencies", &path)?;
        manifest.write(&dir.join(MANIFEST))?;
    }
    Ok(())
}

/// Replaces the value of `--out-dir` (or `--out` for single-file commands) in a
/// recorded command line.
fn redirect(args: &[String], out_dir: &Path) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        match a.as_str() {
            "--out-dir" => {
                iter.next();
                out.push(a.clone());
                out.push(out_dir.display().to_string());
            }
            "--out" => {
                let file = iter.next().map(PathBuf::from).unwrap_or_default();
                out.push(a.clone());
                out.push(
                    out_dir
                        .join(file.file_name().unwrap_or_default())
                        .display()
                        .to_string(),
                );
            }
            s if s.starts_with("--out-dir=") => {
                out.push(format!("--out-dir={}", out_dir.display()))
            }
            s if s.starts_with("--out=") => {
                let file = PathBuf::from(&s["--out=".len()..]);
                out.push(format!(
                    "--out={}",
                    out_dir.join(file.file_name().unwrap_or_default()).display()
                ));
            }
            _ => out.push(a.clone()),
        }
    }
    out
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<()> {
    let recorded = Manifest::read(&args.manifest)?;
    let out_dir = args.out_dir.clone().unwrap_or_else(|| {
        args.manifest
            .parent()
            .unwrap_or(Path::new("."))
            .join("replay")
    });
    let argv = redirect(&recorded.args(), &out_dir);
    let cli = Cli::try_parse_from(std::iter::once("bdt".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| {
        CliError::data(
            &args.manifest,
            format!("recorded command line does not parse: {e}"),
        )
    })?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::data(
            &args.manifest,
            "a replay manifest cannot be replayed",
        ));
    }
    execute(cli, &argv)?;

    let mut mismatches = Vec::new();
    for (name, path, digest) in recorded.outputs() {
        let fresh = out_dir.join(path.file_name().unwrap_or_default());
        let now = crate::manifest::sha256_file(&fresh)?;
        if now == digest {
            println!("{name}: identical ({})", fresh.display());
        } else {
            mismatches.push(name);
        }
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "outputs differ: {}",
            mismatches.join(", ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(extra: &[&str]) -> ChainArgs {
        #[derive(Parser)]
        struct Wrap {
            #[command(flatten)]
            chain: ChainArgs,
        }
        Wrap::try_parse_from(std::iter::once("x").chain(extra.iter().copied()))
            .unwrap()
            .chain
    }

    fn flag_of(err: CliError) -> &'static str {
        match err {
            CliError::Usage { flag, .. } => flag,
            other => panic!("expected usage error, got {other}"),
        }
    }

    #[test]
    fn validation_names_offending_flag() {
        let ds = generate_xor3(100, 1).unwrap();
        let s = Strategy::Sweeping;
        assert_eq!(
            flag_of(sampler_config(&chain(&["--moves", "0.3,0.3,0.3,0.3"]), s, &ds).unwrap_err()),
            "--moves"
        );
        assert_eq!(
            flag_of(sampler_config(&chain(&["--moves", "0.5,0.5"]), s, &ds).unwrap_err()),
            "--moves"
        );
        assert_eq!(
            flag_of(sampler_config(&chain(&["--pmin", "100"]), s, &ds).unwrap_err()),
            "--pmin"
        );
        assert_eq!(
            flag_of(sampler_config(&chain(&["--thin", "0"]), s, &ds).unwrap_err()),
            "--thin"
        );
        assert_eq!(
            flag_of(sampler_config(&chain(&["--alpha", "1,1,1"]), s, &ds).unwrap_err()),
            "--alpha"
        );
        assert_eq!(
            flag_of(sampler_config(&chain(&["--alpha", "-1"]), s, &ds).unwrap_err()),
            "--alpha"
        );
        assert_eq!(
            flag_of(sampler_config(&chain(&["--chipman", "0.9"]), s, &ds).unwrap_err()),
            "--chipman"
        );
        assert_eq!(
            flag_of(sampler_config(&chain(&["--sigma-frac", "0"]), s, &ds).unwrap_err()),
            "--sigma-frac"
        );
    }

    #[test]
    fn defaults_resolve_per_strategy() {
        let ds = generate_xor3(100, 1).unwrap();
        let sweep = sampler_config(&chain(&[]), Strategy::Sweeping, &ds).unwrap();
        assert_eq!(sweep.moves.rule_mode, RuleProposalMode::ContinuousRootRange);
        assert_eq!(
            (sweep.burn_in, sweep.post_burn_in, sweep.thin),
            (50_000, 10_000, 7)
        );
        let std_cfg =
            sampler_config(&chain(&["--chipman", "0.95,1"]), Strategy::Standard, &ds).unwrap();
        assert_eq!(std_cfg.moves.rule_mode, RuleProposalMode::DiscreteObserved);
        assert!(std_cfg.chipman.enabled);
    }

    #[test]
    fn redirect_rewrites_outputs_only() {
        let args: Vec<String> = ["run", "--data", "d.csv", "--out-dir", "old", "--seed", "3"]
            .map(String::from)
            .to_vec();
        assert_eq!(
            redirect(&args, Path::new("new")),
            ["run", "--data", "d.csv", "--out-dir", "new", "--seed", "3"]
        );
        let args: Vec<String> = ["gen-xor3", "--n", "5", "--out", "a/b.csv"]
            .map(String::from)
            .to_vec();
        assert_eq!(
            redirect(&args, Path::new("z")),
            ["gen-xor3", "--n", "5", "--out", "z/b.csv"]
        );
    }
}
