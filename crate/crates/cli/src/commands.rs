use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use survival_core::bench;
use survival_core::env::{replay, Env, RawReplay, Replay, VariantConfig, PRESETS};
use survival_core::policy::{run_episode, Policy, RandomPolicy, ZoneFollower};

use crate::scene::render_episode;

#[derive(Parser, Debug)]
#[command(name = "survival", version, about = "Run, replay, render and benchmark survival episodes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run episodes with a scripted policy and print their statistics.
    Run(RunArgs),
    /// Re-run a replay file, verifying recorded state hashes.
    Replay(ReplayArgs),
    /// Time environment steps.
    Bench(BenchArgs),
    /// Write PPM frames of a replay.
    Render(RenderArgs),
}

#[derive(Args, Debug, Clone)]
pub struct VariantArgs {
    /// Preset name.
    #[arg(long, default_value = "ffa-1")]
    pub preset: String,
    /// TOML file; may name a `preset` and override any field.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyName {
    Random,
    ZoneFollower,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub variant: VariantArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyName::Random)]
    pub policy: PolicyName,
    #[arg(long, default_value_t = 1)]
    pub episodes: u64,
    /// Replay output path; with several episodes, `-<k>` is added to the stem
    /// for episode k > 0.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Leave state hashes out of the replay.
    #[arg(long)]
    pub no_hashes: bool,
    /// One line per episode instead of key=value lines.
    #[arg(long)]
    pub lines: bool,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub lines: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Presets to time (default: all).
    #[arg(long, value_delimiter = ',')]
    pub presets: Vec<String>,
    /// Episodes per configuration.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub every: u32,
    /// Frame side in pixels.
    #[arg(long, default_value_t = 400)]
    pub size: usize,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<survival_core::Error> for CliError {
    fn from(e: survival_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub fn load_variant(args: &VariantArgs) -> Result<VariantConfig, CliError> {
    match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            VariantConfig::from_toml(&text).map_err(|e| CliError::Usage(e.to_string()))
        }
        None => VariantConfig::preset(&args.preset).map_err(|e| CliError::Usage(e.to_string())),
    }
}

fn policies(name: PolicyName, n: usize, seed: u64) -> Vec<Box<dyn Policy>> {
    (0..n)
        .map(|i| -> Box<dyn Policy> {
            match name {
                PolicyName::Random => Box::new(RandomPolicy::new(seed.wrapping_add(i as u64))),
                PolicyName::ZoneFollower => Box::new(ZoneFollower::default()),
            }
        })
        .collect()
}

fn replay_path(base: &Path, k: u64) -> PathBuf {
    if k == 0 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}-{k}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{k}"),
    };
    base.with_file_name(name)
}

pub fn run(args: &RunArgs) -> Result<String, CliError> {
    let config = load_variant(&args.variant)?;
    let mut env = Env::new(config.clone())?;
    let mut out = String::new();
    for k in 0..args.episodes {
        let seed = args.seed + k;
        let mut ps = policies(args.policy, env.n_agents(), seed);
        let mut rec = args.replay.as_ref().map(|_| Replay::new(config.clone(), seed, !args.no_hashes));
        let stats = run_episode(&mut env, seed, &mut ps, rec.as_mut())?;
        if let (Some(rec), Some(base)) = (rec, &args.replay) {
            rec.save(&replay_path(base, k))?;
        }
        if args.lines {
            out.push_str(&stats.to_line());
            out.push('\n');
        } else {
            out.push_str(&stats.to_text());
        }
    }
    Ok(out)
}

pub fn replay_file(args: &ReplayArgs) -> Result<String, CliError> {
    let raw = RawReplay::load(&args.file)?;
    let outcome = replay(&raw)?;
    let mut s = if args.lines {
        outcome.stats.to_line() + "\n"
    } else {
        outcome.stats.to_text()
    };
    s.push_str(&format!("final_hash={:#018x}\n", outcome.final_hash));
    Ok(s)
}

pub fn bench_cmd(args: &BenchArgs) -> Result<String, CliError> {
    let names: Vec<&str> = if args.presets.is_empty() {
        PRESETS.to_vec()
    } else {
        args.presets.iter().map(String::as_str).collect()
    };
    for n in &names {
        if !PRESETS.contains(n) {
            return Err(CliError::Usage(format!("unknown preset `{n}`")));
        }
    }
    Ok(bench::benchmark(&names, args.repeats.max(1), args.seed)?.to_text())
}

pub fn render(args: &RenderArgs) -> Result<String, CliError> {
    if args.size == 0 {
        return Err(CliError::Usage("--size must be positive".into()));
    }
    let raw = RawReplay::load(&args.file)?;
    let frames = render_episode(&raw, &args.out, args.every, args.size)?;
    Ok(frames.iter().map(|p| format!("{}\n", p.display())).collect())
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Run(a) => run(a),
        Command::Replay(a) => replay_file(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Render(a) => render(a),
    }
}
