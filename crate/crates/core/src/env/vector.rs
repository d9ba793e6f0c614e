use crate::env::{AgentAction, EpisodeStats, Env, Features, VariantConfig};
use crate::error::Result;

/// Output of one vectorized step. Observations are flat, `n_envs * n_agents`
/// rows of `obs_len` values.
#[derive(Clone, Debug, Default)]
pub struct VecStep {
    pub observations: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Per agent slot: the agent is dead (its observation is zero).
    pub dead: Vec<bool>,
    /// Stats of episodes that finished this step, with their env index.
    pub finished: Vec<(usize, EpisodeStats)>,
}

/// `n` independent copies of one variant with auto-reset. Env `k` starts at
/// seed `base_seed + k` and each later episode takes the next unused seed.
pub struct VecEnv {
    envs: Vec<Env>,
    next_seed: u64,
    obs_len: usize,
}

impl VecEnv {
    pub fn new(config: VariantConfig, n: usize, base_seed: u64) -> Result<Self> {
        Self::with_features(config, n, base_seed, Features::default())
    }

    pub fn with_features(config: VariantConfig, n: usize, base_seed: u64, features: Features) -> Result<Self> {
        let envs = (0..n)
            .map(|_| Env::with_features(config.clone(), features))
            .collect::<Result<Vec<_>>>()?;
        let obs_len = envs.first().map_or(0, |e| e.layout().len);
        let mut v = Self {
            envs,
            next_seed: base_seed,
            obs_len,
        };
        for e in &mut v.envs {
            e.reset(v.next_seed);
            v.next_seed += 1;
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn obs_len(&self) -> usize {
        self.obs_len
    }

    pub fn n_agents(&self) -> usize {
        self.envs.first().map_or(0, |e| e.n_agents())
    }

    pub fn env(&self, k: usize) -> &Env {
        &self.envs[k]
    }

    pub fn observations(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.envs.len() * self.n_agents() * self.obs_len);
        for e in &self.envs {
            for o in e.observations() {
                o.flatten_into(&mut out);
            }
        }
        out
    }

    /// Steps every env with its slice of `actions` (`n_agents` per env).
    /// Finished envs are reset and the returned observation is the first one
    /// of the new episode.
    pub fn step(&mut self, actions: &[AgentAction]) -> Result<VecStep> {
        let na = self.n_agents();
        if actions.len() != na * self.envs.len() {
            return Err(crate::Error::MalformedAction(format!(
                "expected {} actions, got {}",
                na * self.envs.len(),
                actions.len()
            )));
        }
        let mut out = VecStep::default();
        out.observations.reserve(self.envs.len() * na * self.obs_len);
        for (k, (env, acts)) in self.envs.iter_mut().zip(actions.chunks(na)).enumerate() {
            let r = env.step(acts)?;
            out.rewards.extend_from_slice(&r.rewards);
            out.dones.push(r.done);
            let obs = if r.done {
                out.finished.push((k, env.stats().clone()));
                env.reset(self.next_seed);
                self.next_seed += 1;
                env.observations()
            } else {
                r.observations
            };
            for (i, o) in obs.iter().enumerate() {
                out.dead.push(!env.alive(i));
                o.flatten_into(&mut out.observations);
            }
        }
        Ok(out)
    }
}
