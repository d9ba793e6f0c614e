//! Scripted policies acting on observations, and an episode runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::obs::{AgentObservation, EntityType, Layout};
use crate::env::{AgentAction, Env, EpisodeStats, Replay};
use crate::error::Result;
use crate::geom::wrap_angle;
use crate::Vec2;

pub trait Policy {
    fn act(&mut self, obs: &AgentObservation, layout: &Layout) -> AgentAction;

    /// Called before each episode.
    fn reset(&mut self, _seed: u64) {}
}

/// Fields of `x_self` by name.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfState {
    pub health: f64,
    pub position: Vec2,
    pub angle: f64,
    pub velocity: Vec2,
}

impl SelfState {
    pub fn read(x_self: &[f64], layout: &Layout) -> Self {
        let b = layout.self_width - 7;
        Self {
            health: x_self[b],
            position: Vec2::new(x_self[b + 1], x_self[b + 2]),
            angle: x_self[b + 3],
            velocity: Vec2::new(x_self[b + 4], x_self[b + 5]),
        }
    }
}

/// Uniform over the action space.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> AgentAction {
        let r = &mut self.rng;
        AgentAction {
            x: r.gen_range(-1..=1),
            y: r.gen_range(-1..=1),
            turn: r.gen_range(-1..=1),
            attack: r.gen(),
            use_item: r.gen(),
            give: r.gen(),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, obs: &AgentObservation, layout: &Layout) -> AgentAction {
        if SelfState::read(&obs.x_self, layout).health <= 0.0 {
            return AgentAction::NOOP;
        }
        self.sample()
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZoneFollowerConfig {
    /// Heals farther than this are ignored.
    pub heal_range: f64,
    /// Use a held heal below this health.
    pub heal_below: f64,
    /// Swing at visible opponents closer than this.
    pub attack_range: f64,
    /// Half-angle of the swing cone.
    pub attack_cone: f64,
    pub max_speed: f64,
    pub gain: f64,
    /// Distance kept from the edge of the current circle.
    pub zone_margin: f64,
}

impl Default for ZoneFollowerConfig {
    fn default() -> Self {
        Self {
            heal_range: 6.0,
            heal_below: 75.0,
            attack_range: 1.3,
            attack_cone: 0.4,
            max_speed: 5.0,
            gain: 3.0,
            zone_margin: 1.0,
        }
    }
}

/// Heads for visible heals inside the zone, otherwise for the center of the
/// next zone circle; uses held heals when hurt and swings at close enemies.
pub struct ZoneFollower {
    pub config: ZoneFollowerConfig,
}

impl ZoneFollower {
    pub fn new(config: ZoneFollowerConfig) -> Self {
        Self { config }
    }

    fn target(&self, me: &SelfState, obs: &AgentObservation) -> Vec2 {
        let z = &obs.x_zone;
        let (center, radius) = (Vec2::new(z[0], z[1]), z[2]);
        let next = Vec2::new(z[3], z[4]);
        let heals = obs.block(EntityType::Heal);
        let mut best: Option<(f64, Vec2)> = None;
        for i in 0..heals.len() {
            if heals.mask[i] == 0 {
                continue;
            }
            let p = Vec2::new(heals.row(i)[0], heals.row(i)[1]);
            let d = p.distance(me.position);
            if d < self.config.heal_range && p.distance(center) < radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, p));
            }
        }
        best.map_or_else(|| clamp_into(next, center, radius - self.config.zone_margin), |(_, p)| p)
    }

    fn should_attack(&self, me: &SelfState, obs: &AgentObservation, layout: &Layout) -> bool {
        let others = obs.block(EntityType::Other);
        let teams = layout.self_width == 9;
        (0..others.len()).any(|i| {
            if others.mask[i] == 0 {
                return false;
            }
            let row = others.row(i);
            if teams && row[1] == obs.x_self[1] {
                return false;
            }
            let o = SelfState::read(row, layout);
            let d = o.position - me.position;
            let bearing = wrap_angle(d.y.atan2(d.x) - me.angle);
            d.length() < self.config.attack_range && bearing.abs() < self.config.attack_cone
        })
    }
}

impl Default for ZoneFollower {
    fn default() -> Self {
        Self::new(ZoneFollowerConfig::default())
    }
}

/// Nearest point to `p` within `radius` of `center`.
fn clamp_into(p: Vec2, center: Vec2, radius: f64) -> Vec2 {
    let d = p - center;
    let r = radius.max(0.0);
    if d.length() <= r {
        p
    } else {
        center + d.normalized() * r
    }
}

fn sign(v: f64, deadband: f64) -> i8 {
    if v > deadband {
        1
    } else if v < -deadband {
        -1
    } else {
        0
    }
}

impl Policy for ZoneFollower {
    fn act(&mut self, obs: &AgentObservation, layout: &Layout) -> AgentAction {
        let me = SelfState::read(&obs.x_self, layout);
        if me.health <= 0.0 {
            return AgentAction::NOOP;
        }
        let to = self.target(&me, obs) - me.position;
        let speed = (to.length() * self.config.gain).min(self.config.max_speed);
        let desired = if to.length() > 1e-9 { to.normalized() * speed } else { Vec2::zero() };
        let local = (desired - me.velocity).rotated(-me.angle);
        let holds_heal = obs.block(EntityType::HealSlot).mask[0] == 1;
        AgentAction {
            x: sign(local.x, 0.1),
            y: sign(local.y, 0.1),
            turn: 0,
            attack: self.should_attack(&me, obs, layout),
            use_item: holds_heal && me.health < self.config.heal_below,
            give: false,
        }
    }
}

/// Runs one episode from `seed` with one policy per agent. Records into
/// `replay` when given (which must be fresh and match the env's config).
pub fn run_episode(
    env: &mut Env,
    seed: u64,
    policies: &mut [Box<dyn Policy>],
    mut replay: Option<&mut Replay>,
) -> Result<EpisodeStats> {
    let mut obs = env.reset(seed);
    for (i, p) in policies.iter_mut().enumerate() {
        p.reset(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
    }
    let n = env.n_agents();
    loop {
        let alive: Vec<bool> = (0..n).map(|i| env.alive(i)).collect();
        let actions: Vec<AgentAction> = (0..n)
            .map(|i| if alive[i] { policies[i].act(&obs[i], env.layout()) } else { AgentAction::NOOP })
            .collect();
        let r = env.step(&actions)?;
        if let Some(rec) = replay.as_deref_mut() {
            rec.push(&alive, &actions, env.state_hash());
        }
        obs = r.observations;
        if r.done {
            return Ok(env.stats().clone());
        }
    }
}

/// `"random"` or `"zone-follower"`.
pub fn policy_by_name(name: &str, seed: u64) -> Option<Box<dyn Policy>> {
    match name {
        "random" => Some(Box::new(RandomPolicy::new(seed))),
        "zone-follower" => Some(Box::new(ZoneFollower::default())),
        _ => None,
    }
}
