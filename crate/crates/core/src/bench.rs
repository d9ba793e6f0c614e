//! Step timing: mean and standard deviation over the first steps of an
//! episode, driven by uniform random actions drawn outside the timed region.

use std::fmt::Write as _;
use std::time::Instant;

use crate::env::{apply_actions, build_simulation, AgentAction, Env, Features, VariantConfig, PRESETS};
use crate::error::Result;
use crate::perception::IndexBodies;
use crate::policy::RandomPolicy;

pub const BENCH_STEPS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchEntry {
    pub name: String,
    /// `env` (full env step) or `sim` (simulation step only).
    pub level: &'static str,
    pub mean: f64,
    pub std: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub entries: Vec<BenchEntry>,
}

impl BenchReport {
    pub fn get(&self, name: &str) -> Option<&BenchEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn get_at(&self, name: &str, level: &str) -> Option<&BenchEntry> {
        self.entries.iter().find(|e| e.name == name && e.level == level)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:<44} {:<4} mean={:.3e}s std={:.3e}s n={}",
                e.name, e.level, e.mean, e.std, e.samples
            );
        }
        s
    }
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Times `Env::step` over the first `steps` steps of `repeats` episodes.
/// Episodes that end early contribute fewer samples.
pub fn time_env(config: &VariantConfig, features: Features, seed: u64, steps: usize, repeats: usize) -> Result<BenchEntry> {
    let mut env = Env::with_features(config.clone(), features)?;
    let mut policy = RandomPolicy::new(seed);
    let mut samples = Vec::with_capacity(steps * repeats);
    for r in 0..repeats {
        env.reset(seed + r as u64);
        for _ in 0..steps {
            let actions: Vec<AgentAction> = (0..env.n_agents()).map(|_| policy.sample()).collect();
            let t = Instant::now();
            let done = env.step(&actions)?.done;
            samples.push(t.elapsed().as_secs_f64());
            if done {
                break;
            }
        }
    }
    let (mean, std) = mean_std(&samples);
    Ok(BenchEntry {
        name: config.name.clone(),
        level: "env",
        mean,
        std,
        samples: samples.len(),
    })
}

/// Times `Simulation::step` alone, with random controls applied untimed.
pub fn time_sim(config: &VariantConfig, features: Features, seed: u64, steps: usize, repeats: usize) -> Result<BenchEntry> {
    config.validate()?;
    let (mut sim, groups) = build_simulation(config, features);
    let mut policy = RandomPolicy::new(seed);
    let mut samples = Vec::with_capacity(steps * repeats);
    for r in 0..repeats {
        sim.reset(seed + r as u64);
        let ix = sim.get_module::<IndexBodies>(groups.agents)?;
        let handles: Vec<_> = (0..ix.len()).filter_map(|i| ix.get(i)).collect();
        for _ in 0..steps {
            let actions: Vec<AgentAction> = handles.iter().map(|_| policy.sample()).collect();
            apply_actions(&mut sim, &groups, &handles, &actions)?;
            let t = Instant::now();
            sim.step()?;
            samples.push(t.elapsed().as_secs_f64());
        }
    }
    let (mean, std) = mean_std(&samples);
    Ok(BenchEntry {
        name: config.name.clone(),
        level: "sim",
        mean,
        std,
        samples: samples.len(),
    })
}

/// Feature configurations `(label, agents, heals, boxes, cameras)`.
pub const FEATURE_CONFIGS: [(&str, usize, usize, usize, bool); 7] = [
    ("5 agents (no cameras)", 5, 0, 0, false),
    ("5 agents (no cameras), 10 heals", 5, 10, 0, false),
    ("5 agents (no cameras), 10 heals, 10 boxes", 5, 10, 10, false),
    ("5 agents", 5, 0, 0, true),
    ("5 agents, 10 heals, 10 boxes", 5, 10, 10, true),
    ("10 agents, 10 heals, 20 boxes", 10, 10, 20, true),
    ("10 agents (no cameras), 10 heals, 20 boxes", 10, 10, 20, false),
];

pub fn feature_config(agents: usize, heals: usize, boxes: usize) -> VariantConfig {
    VariantConfig::custom(agents, heals, boxes)
}

/// Every preset at env level, the feature table at sim level, and the
/// largest feature configuration at env level with and without cameras.
pub fn benchmark(presets: &[&str], repeats: usize, seed: u64) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for name in presets {
        let config = VariantConfig::preset(name)?;
        report
            .entries
            .push(time_env(&config, Features::default(), seed, BENCH_STEPS, repeats)?);
    }
    for (label, agents, heals, boxes, cameras) in FEATURE_CONFIGS {
        let mut config = feature_config(agents, heals, boxes);
        config.name = label.to_string();
        let features = Features { cameras };
        report.entries.push(time_sim(&config, features, seed, BENCH_STEPS, repeats)?);
        if agents == 10 {
            report.entries.push(time_env(&config, features, seed, BENCH_STEPS, repeats)?);
        }
    }
    Ok(report)
}

pub fn benchmark_all(repeats: usize, seed: u64) -> Result<BenchReport> {
    benchmark(&PRESETS, repeats, seed)
}
