//! Binary episode replays.
//!
//! Layout (little endian): magic `SRVA`, `u16` version, `u32` length and
//! canonical TOML of the variant, `u64` seed, `u32` step count, then six
//! category bytes per live agent per step (index order). If state hashes were
//! recorded, `8 * steps` hash bytes follow. The last byte is `1` when hashes
//! are present, `0` otherwise.

use std::io::{Read, Write};
use std::path::Path;

use crate::env::{AgentAction, EpisodeStats, Env, VariantConfig};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SRVA";
pub const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub config: VariantConfig,
    pub seed: u64,
    /// Actions of the agents alive before each step.
    pub steps: Vec<Vec<AgentAction>>,
    /// State hash after each step, when recorded.
    pub hashes: Option<Vec<u64>>,
}

impl Replay {
    pub fn new(config: VariantConfig, seed: u64, with_hashes: bool) -> Self {
        Self {
            config,
            seed,
            steps: Vec::new(),
            hashes: with_hashes.then(Vec::new),
        }
    }

    /// Records one step taken by `env`. Call after `env.step` with the
    /// actions passed to it and the liveness before the step.
    pub fn push(&mut self, alive_before: &[bool], actions: &[AgentAction], hash_after: u64) {
        self.steps.push(
            actions
                .iter()
                .zip(alive_before)
                .filter(|(_, a)| **a)
                .map(|(x, _)| *x)
                .collect(),
        );
        if let Some(h) = &mut self.hashes {
            h.push(hash_after);
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let toml = self.config.to_toml();
        let mut out = Vec::with_capacity(64 + toml.len() + self.steps.len() * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(toml.len() as u32).to_le_bytes());
        out.extend_from_slice(toml.as_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.steps.len() as u32).to_le_bytes());
        for step in &self.steps {
            for a in step {
                out.extend_from_slice(&a.to_categories());
            }
        }
        if let Some(hashes) = &self.hashes {
            for h in hashes {
                out.extend_from_slice(&h.to_le_bytes());
            }
        }
        out.push(self.hashes.is_some() as u8);
        out
    }

    /// Parses the header and keeps the action bytes flat; they are split per
    /// step by [`replay`], which knows how many agents are alive.
    pub fn from_bytes(bytes: &[u8]) -> Result<RawReplay> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Replay("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Replay(format!("unsupported version {version}")));
        }
        let toml_len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let toml = std::str::from_utf8(r.take(toml_len)?).map_err(|e| Error::Replay(e.to_string()))?;
        let config = VariantConfig::from_toml(toml)?;
        let seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let steps = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        let rest = &bytes[r.pos..];
        let (&flag, body) = rest.split_last().ok_or_else(|| Error::Replay("truncated".into()))?;
        let (actions, hashes) = match flag {
            0 => (body, None),
            1 => {
                let n = 8 * steps as usize;
                if body.len() < n {
                    return Err(Error::Replay("truncated hash table".into()));
                }
                let (a, h) = body.split_at(body.len() - n);
                let hashes = h.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
                (a, Some(hashes))
            }
            f => return Err(Error::Replay(format!("bad trailing flag {f}"))),
        };
        if actions.len() % 6 != 0 {
            return Err(Error::Replay("action bytes not a multiple of 6".into()));
        }
        Ok(RawReplay {
            config,
            seed,
            steps,
            actions: actions.to_vec(),
            hashes,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }
}

/// Replay file with per-step boundaries not yet known.
#[derive(Clone, Debug, PartialEq)]
pub struct RawReplay {
    pub config: VariantConfig,
    pub seed: u64,
    pub steps: u32,
    pub actions: Vec<u8>,
    pub hashes: Option<Vec<u64>>,
}

impl RawReplay {
    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Replay::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Replay("truncated header".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayOutcome {
    pub replay: Replay,
    pub stats: EpisodeStats,
    pub final_hash: u64,
}

/// Re-runs a recorded episode, checking recorded hashes step by step.
pub fn replay(raw: &RawReplay) -> Result<ReplayOutcome> {
    replay_with(raw, |_, _| Ok(()))
}

/// As [`replay`], calling `visit(env, step)` after the reset (step 0) and
/// after every replayed step.
pub fn replay_with<F>(raw: &RawReplay, mut visit: F) -> Result<ReplayOutcome>
where
    F: FnMut(&Env, u32) -> Result<()>,
{
    let mut env = Env::new(raw.config.clone())?;
    env.reset(raw.seed);
    visit(&env, 0)?;
    let n = env.n_agents();
    let mut out = Replay::new(raw.config.clone(), raw.seed, raw.hashes.is_some());
    let mut chunks = raw.actions.chunks_exact(6);
    for step in 0..raw.steps {
        let alive: Vec<bool> = (0..n).map(|i| env.alive(i)).collect();
        let mut actions = vec![AgentAction::NOOP; n];
        for (i, a) in actions.iter_mut().enumerate().filter(|(i, _)| alive[*i]) {
            let c = chunks
                .next()
                .ok_or_else(|| Error::Replay(format!("actions end early at step {step}, agent {i}")))?;
            *a = AgentAction::from_categories(c.try_into().unwrap())?;
        }
        env.step(&actions)?;
        let hash = env.state_hash();
        if let Some(recorded) = raw.hashes.as_ref().map(|h| h[step as usize]) {
            if recorded != hash {
                return Err(Error::ReplayDivergence {
                    step,
                    recorded,
                    replayed: hash,
                });
            }
        }
        out.push(&alive, &actions, hash);
        visit(&env, step + 1)?;
    }
    if chunks.next().is_some() {
        return Err(Error::Replay("trailing action bytes".into()));
    }
    Ok(ReplayOutcome {
        replay: out,
        stats: env.stats().clone(),
        final_hash: env.state_hash(),
    })
}
