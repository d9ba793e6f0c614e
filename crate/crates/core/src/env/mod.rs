//! Multi-agent environment on top of the simulation: variant presets,
//! action decoding, observations with visibility masks, rewards,
//! termination, statistics, replays and a vectorized view.

pub mod config;
pub mod obs;
pub mod replay;
pub mod vector;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{rect_vertices, wrap_angle};
use crate::items::{
    AutoPickup, BoxSpec, DeathDrop, GiveLast, Heal, Inventory, ItemData, ItemKind, ItemModule, Object, ObjectItem,
    RandomizedBoxShapes, UseLast,
};
use crate::mechanics::{
    DamageKind, Health, Melee, ResetSpawns, SafeZone, SpawnPlacer, TeamId, Teams,
};
use crate::perception::{Cameras, DynamicMotors, IndexBodies, TrackDeaths};
use crate::physics::{BodyDef, BodyHandle};
use crate::sim::{GroupId, SimModule, Simulation};

pub use config::{Competitiveness, RewardParams, Teaming, Termination, VariantConfig, PRESETS};
pub use obs::{AgentObservation, EntityBlock, EntityType, Layout};
pub use replay::{replay, replay_with, RawReplay, Replay, ReplayOutcome};
pub use vector::{VecEnv, VecStep};

pub const HEALS: &str = "heals";
pub const BOXES: &str = "boxes";
pub const BOX_ITEMS: &str = "boxitems";
pub const AGENTS: &str = "agents";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Groups {
    pub heals: GroupId,
    pub boxes: GroupId,
    pub boxitems: GroupId,
    pub agents: GroupId,
}

/// Optional parts of the simulation, toggled for benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Features {
    pub cameras: bool,
}

impl Default for Features {
    fn default() -> Self {
        Self { cameras: true }
    }
}

/// Builds the four body groups of a variant.
pub fn build_simulation(config: &VariantConfig, features: Features) -> (Simulation, Groups) {
    let mut sim = Simulation::new(config.sim.clone());
    let placer = SpawnPlacer::shared(config.spawn.clone());
    let items = &config.items;

    let heals = sim.add_group(
        HEALS,
        vec![
            Box::new(IndexBodies::new()),
            Box::new(ResetSpawns::new(
                placer.clone(),
                config.heals,
                crate::items::item_def(items.radius, crate::Vec2::zero()),
            )),
            Box::new(Heal::new(items.heal_amount, items.radius)),
        ],
    );

    let object = Object::new(items.objects.clone(), BOX_ITEMS);
    let box_health = Health::new(crate::mechanics::HealthConfig {
        initial: items.box_health,
        max: None,
    })
    .with_filter(object.ownership_filter());
    let boxes = sim.add_group(
        BOXES,
        vec![
            Box::new(IndexBodies::new()),
            Box::new(box_health),
            Box::new(object),
            Box::new(RandomizedBoxShapes::new(
                placer.clone(),
                config.boxes,
                (items.box_min, items.box_max),
            )),
        ],
    );
    let boxitems = sim.add_group(
        BOX_ITEMS,
        vec![Box::new(IndexBodies::new()), Box::new(ObjectItem::new(BOXES, items.radius))],
    );

    let mut health = Health::new(config.agent.health.clone());
    let teams = config.teams().then(|| Teams::new(config.n_teams()));
    if let Some(t) = &teams {
        health.add_filter(t.friendly_fire_filter());
    }
    let mut modules: Vec<Box<dyn SimModule>> = vec![Box::new(IndexBodies::new()), Box::new(health)];
    if let Some(t) = teams {
        modules.push(Box::new(t));
    }
    let template = BodyDef::circle(config.agent.radius).with_density(config.agent.density);
    modules.push(Box::new(ResetSpawns::new(placer, config.agents, template)));
    modules.push(Box::new(DynamicMotors::new(config.agent.motors.clone())));
    modules.push(Box::new(SafeZone::new(config.zone.clone())));
    modules.push(Box::new(Melee::new(config.melee.clone())));
    modules.push(Box::new(Inventory::new(config.inventory.clone())));
    modules.push(Box::new(UseLast::new()));
    modules.push(Box::new(GiveLast::new()));
    modules.push(Box::new(AutoPickup::new()));
    modules.push(Box::new(DeathDrop::new()));
    if features.cameras {
        modules.push(Box::new(Cameras::new(config.agent.camera.clone())));
    }
    modules.push(Box::new(TrackDeaths::new()));
    let agents = sim.add_group(AGENTS, modules);

    (
        sim,
        Groups {
            heals,
            boxes,
            boxitems,
            agents,
        },
    )
}

/// `(a_x, a_y, a_θ, a_atk, a_use, a_give)`; the first three in {-1, 0, 1}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct AgentAction {
    pub x: i8,
    pub y: i8,
    pub turn: i8,
    pub attack: bool,
    pub use_item: bool,
    pub give: bool,
}

impl AgentAction {
    pub const NOOP: AgentAction = AgentAction {
        x: 0,
        y: 0,
        turn: 0,
        attack: false,
        use_item: false,
        give: false,
    };

    /// Decodes categories: `0, 1, 2` map to `-1, 0, 1` for the motor axes.
    pub fn from_categories(c: [u8; 6]) -> Result<Self> {
        let axis = |v: u8| match v {
            0..=2 => Ok(v as i8 - 1),
            _ => Err(Error::MalformedAction(format!("motor category {v} not in 0..=2"))),
        };
        let flag = |v: u8| match v {
            0 | 1 => Ok(v == 1),
            _ => Err(Error::MalformedAction(format!("binary category {v} not in 0..=1"))),
        };
        Ok(Self {
            x: axis(c[0])?,
            y: axis(c[1])?,
            turn: axis(c[2])?,
            attack: flag(c[3])?,
            use_item: flag(c[4])?,
            give: flag(c[5])?,
        })
    }

    pub fn to_categories(self) -> [u8; 6] {
        [
            (self.x + 1) as u8,
            (self.y + 1) as u8,
            (self.turn + 1) as u8,
            self.attack as u8,
            self.use_item as u8,
            self.give as u8,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.x, self.y, self.turn] {
            if !(-1..=1).contains(&v) {
                return Err(Error::MalformedAction(format!("motor value {v} not in -1..=1")));
            }
        }
        Ok(())
    }
}

/// Hands one step's actions to the agent modules. Use takes priority over
/// give; dead agents are skipped.
pub fn apply_actions(sim: &mut Simulation, groups: &Groups, handles: &[BodyHandle], actions: &[AgentAction]) -> Result<()> {
    let g = groups.agents;
    for (&h, a) in handles.iter().zip(actions) {
        if !sim.group(g).contains(h) {
            if *a != AgentAction::NOOP {
                log::warn!("ignoring action for dead agent {h}");
            }
            continue;
        }
        sim.get_module_mut::<DynamicMotors>(g)?.set_motor(h, [a.x, a.y, a.turn])?;
        if a.attack {
            sim.get_module_mut::<Melee>(g)?.set_attack(h, true)?;
        }
        if a.use_item {
            sim.get_module_mut::<UseLast>(g)?.request(h);
        } else if a.give {
            sim.get_module_mut::<GiveLast>(g)?.request(h);
        }
    }
    Ok(())
}

/// What happened to each agent during one step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepEvents {
    /// Alive after the step.
    pub alive: Vec<bool>,
    /// Died during the step.
    pub died: Vec<bool>,
    /// Enemy agents killed by this agent's melee during the step.
    pub kills: Vec<u32>,
    pub heals_used: Vec<u32>,
    pub boxes_placed: Vec<u32>,
    pub pickups: Vec<u32>,
    /// (giver, receiver) agent indices.
    pub gives: Vec<(usize, usize)>,
}

/// `R = I_alive r_alive + (1 - I_alive) r_dead + n_kills r_kill + I_death r_death`,
/// evaluated per team (any member alive, team wiped this step, summed kills)
/// when `teams` is given.
pub fn compute_rewards(params: &RewardParams, events: &StepEvents, teams: Option<&[u32]>) -> Vec<f64> {
    let formula = |alive: bool, kills: u32, death: bool| {
        let i_alive = alive as u8 as f64;
        i_alive * params.r_alive
            + (1.0 - i_alive) * params.r_dead
            + kills as f64 * params.r_kill
            + (death as u8 as f64) * params.r_death
    };
    let n = events.alive.len();
    match teams {
        None => (0..n)
            .map(|i| formula(events.alive[i], events.kills[i], events.died[i]))
            .collect(),
        Some(team) => (0..n)
            .map(|i| {
                let members: Vec<usize> = (0..n).filter(|&j| team[j] == team[i]).collect();
                let alive = members.iter().any(|&j| events.alive[j]);
                let kills = members.iter().map(|&j| events.kills[j]).sum();
                let wiped = !alive && members.iter().any(|&j| events.died[j]);
                formula(alive, kills, wiped)
            })
            .collect(),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AgentStats {
    pub team: u32,
    pub episode_return: f64,
    pub kills: u32,
    pub heals_used: u32,
    pub boxes_placed: u32,
    /// Steps the agent was alive at the end of.
    pub survived: u64,
    pub death_cause: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeStats {
    pub variant: String,
    pub seed: u64,
    pub length: u64,
    pub truncated: bool,
    pub agents: Vec<AgentStats>,
}

impl EpisodeStats {
    pub fn total_kills(&self) -> u32 {
        self.agents.iter().map(|a| a.kills).sum()
    }

    pub fn mean_survival(&self) -> f64 {
        self.agents.iter().map(|a| a.survived as f64).sum::<f64>() / self.agents.len().max(1) as f64
    }

    /// One `key=value` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "variant={}", self.variant);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "length={}", self.length);
        let _ = writeln!(s, "truncated={}", self.truncated);
        for (i, a) in self.agents.iter().enumerate() {
            let _ = writeln!(s, "agent.{i}.team={}", a.team);
            let _ = writeln!(s, "agent.{i}.return={}", a.episode_return);
            let _ = writeln!(s, "agent.{i}.kills={}", a.kills);
            let _ = writeln!(s, "agent.{i}.heals_used={}", a.heals_used);
            let _ = writeln!(s, "agent.{i}.boxes_placed={}", a.boxes_placed);
            let _ = writeln!(s, "agent.{i}.survived={}", a.survived);
            let _ = writeln!(s, "agent.{i}.death_cause={}", a.death_cause.as_deref().unwrap_or("none"));
        }
        s
    }

    /// Single-line form for machine consumption.
    pub fn to_line(&self) -> String {
        let mut s = format!(
            "variant={} seed={} length={} truncated={}",
            self.variant, self.seed, self.length, self.truncated
        );
        for (i, a) in self.agents.iter().enumerate() {
            let _ = write!(
                s,
                " a{i}.return={} a{i}.kills={} a{i}.heals={} a{i}.boxes={} a{i}.survived={}",
                a.episode_return, a.kills, a.heals_used, a.boxes_placed, a.survived
            );
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct StepResult {
    /// One per agent; dead agents get all-zero observations.
    pub observations: Vec<AgentObservation>,
    pub rewards: Vec<f64>,
    pub done: bool,
    /// Ended by the step limit rather than by termination.
    pub truncated: bool,
    pub events: StepEvents,
}

/// Seeded multi-agent environment for one variant.
pub struct Env {
    config: VariantConfig,
    layout: Layout,
    sim: Simulation,
    groups: Groups,
    handles: Vec<BodyHandle>,
    teams: Vec<u32>,
    done: bool,
    stats: EpisodeStats,
}

impl Env {
    pub fn new(config: VariantConfig) -> Result<Self> {
        Self::with_features(config, Features::default())
    }

    /// Without cameras nothing is visible and every entity row is masked.
    pub fn with_features(config: VariantConfig, features: Features) -> Result<Self> {
        config.validate()?;
        let (sim, groups) = build_simulation(&config, features);
        Ok(Self {
            layout: Layout::for_variant(&config),
            config,
            sim,
            groups,
            handles: Vec::new(),
            teams: Vec::new(),
            done: true,
            stats: EpisodeStats::default(),
        })
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        Self::new(VariantConfig::preset(name)?)
    }

    pub fn config(&self) -> &VariantConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn sim(&self) -> &Simulation {
        &self.sim
    }

    pub fn groups(&self) -> &Groups {
        &self.groups
    }

    pub fn n_agents(&self) -> usize {
        self.config.agents
    }

    pub fn agent_handle(&self, i: usize) -> Option<BodyHandle> {
        self.handles.get(i).copied()
    }

    pub fn alive(&self, i: usize) -> bool {
        self.handles.get(i).is_some_and(|&h| self.sim.group(self.groups.agents).contains(h))
    }

    pub fn team(&self, i: usize) -> u32 {
        self.teams[i]
    }

    /// Team of every agent (all 0 in free-for-all).
    pub fn teams(&self) -> &[u32] {
        &self.teams
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn step_count(&self) -> u64 {
        self.sim.step_count()
    }

    pub fn stats(&self) -> &EpisodeStats {
        &self.stats
    }

    pub fn state_hash(&self) -> u64 {
        self.sim.state_hash()
    }

    pub fn reset(&mut self, seed: u64) -> Vec<AgentObservation> {
        self.sim.reset(seed);
        let ix = self.sim.get_module::<IndexBodies>(self.groups.agents).expect("agents are indexed");
        self.handles = (0..ix.len()).filter_map(|i| ix.get(i)).collect();
        self.teams = match self.sim.get_module::<Teams>(self.groups.agents) {
            Ok(t) => self.handles.iter().map(|&h| t.team_of(h).map_or(0, |t| t.0)).collect(),
            Err(_) => vec![0; self.handles.len()],
        };
        self.done = false;
        self.stats = EpisodeStats {
            variant: self.config.name.clone(),
            seed,
            length: 0,
            truncated: false,
            agents: self
                .teams
                .iter()
                .map(|&team| AgentStats {
                    team,
                    ..AgentStats::default()
                })
                .collect(),
        };
        self.observations()
    }

    /// Drops the last held item of agent `i` in front of it. Not part of the
    /// action space.
    pub fn drop_last(&mut self, i: usize) -> Result<bool> {
        let h = self.live_handle(i)?;
        Ok(crate::items::inventory::drop_last(&mut self.sim, self.groups.agents, h)?.is_some())
    }

    fn live_handle(&self, i: usize) -> Result<BodyHandle> {
        let h = *self
            .handles
            .get(i)
            .ok_or_else(|| Error::MalformedAction(format!("no agent {i}")))?;
        if !self.alive(i) {
            return Err(Error::DeadBody(h));
        }
        Ok(h)
    }

    /// Advances one step with one action per agent (in index order; entries
    /// of dead agents are ignored).
    pub fn step(&mut self, actions: &[AgentAction]) -> Result<StepResult> {
        if self.done {
            return Err(if self.handles.is_empty() { Error::NotReset } else { Error::EpisodeDone });
        }
        if actions.len() != self.handles.len() {
            return Err(Error::MalformedAction(format!(
                "expected {} actions, got {}",
                self.handles.len(),
                actions.len()
            )));
        }
        for a in actions {
            a.validate()?;
        }
        apply_actions(&mut self.sim, &self.groups, &self.handles, actions)?;
        self.sim.step()?;

        let events = self.collect_events()?;
        let rewards = compute_rewards(
            &self.config.rewards,
            &events,
            self.config.teams().then_some(self.teams.as_slice()),
        );
        let truncated_limit = self.sim.step_count() >= self.config.max_steps;
        let terminated = self.terminated(&events.alive);
        self.done = terminated || truncated_limit;
        self.update_stats(&events, &rewards);
        self.stats.truncated = self.done && !terminated;
        Ok(StepResult {
            observations: self.observations(),
            rewards,
            done: self.done,
            truncated: self.stats.truncated,
            events,
        })
    }

    fn terminated(&self, alive: &[bool]) -> bool {
        let units = if self.config.teams() {
            let mut live: Vec<u32> = (0..alive.len()).filter(|&i| alive[i]).map(|i| self.teams[i]).collect();
            live.sort_unstable();
            live.dedup();
            live.len()
        } else {
            alive.iter().filter(|a| **a).count()
        };
        match self.config.termination {
            Termination::AllDead => units == 0,
            Termination::LastAlive => units <= 1,
        }
    }

    fn agent_index(&self, h: BodyHandle) -> Option<usize> {
        self.handles.iter().position(|&x| x == h)
    }

    fn collect_events(&self) -> Result<StepEvents> {
        let g = self.groups.agents;
        let n = self.handles.len();
        let mut ev = StepEvents {
            alive: (0..n).map(|i| self.alive(i)).collect(),
            died: vec![false; n],
            kills: vec![0; n],
            heals_used: vec![0; n],
            boxes_placed: vec![0; n],
            pickups: vec![0; n],
            gives: Vec::new(),
        };
        for (victim, cause) in self.sim.get_module::<Health>(g)?.step_deaths() {
            if let Some(v) = self.agent_index(*victim) {
                ev.died[v] = true;
            }
            if cause.kind == DamageKind::Melee {
                if let Some(a) = cause.attacker.and_then(|a| self.agent_index(a)) {
                    ev.kills[a] += 1;
                }
            }
        }
        for u in self.sim.get_module::<UseLast>(g)?.used() {
            if let Some(i) = self.agent_index(u.user) {
                match u.kind {
                    ItemKind::Heal => ev.heals_used[i] += 1,
                    ItemKind::Box => ev.boxes_placed[i] += 1,
                }
            }
        }
        for p in self.sim.get_module::<AutoPickup>(g)?.picked() {
            if let Some(i) = self.agent_index(p.agent) {
                ev.pickups[i] += 1;
            }
        }
        for give in self.sim.get_module::<GiveLast>(g)?.given() {
            if let (Some(a), Some(b)) = (self.agent_index(give.giver), self.agent_index(give.receiver)) {
                ev.gives.push((a, b));
            }
        }
        Ok(ev)
    }

    fn update_stats(&mut self, ev: &StepEvents, rewards: &[f64]) {
        self.stats.length = self.sim.step_count();
        let health = self.sim.get_module::<Health>(self.groups.agents).ok();
        for (i, a) in self.stats.agents.iter_mut().enumerate() {
            a.episode_return += rewards[i];
            a.kills += ev.kills[i];
            a.heals_used += ev.heals_used[i];
            a.boxes_placed += ev.boxes_placed[i];
            if ev.alive[i] {
                a.survived = self.stats.length;
            }
            if ev.died[i] {
                a.death_cause = health
                    .and_then(|h| h.cause_of_death(self.handles[i]))
                    .map(|c| c.to_string());
            }
        }
    }

    pub fn observations(&self) -> Vec<AgentObservation> {
        (0..self.handles.len()).map(|i| self.observe(i)).collect()
    }

    /// Observation of agent `i`; all zeros once it is dead.
    pub fn observe(&self, i: usize) -> AgentObservation {
        let mut obs = AgentObservation::zeros(&self.layout);
        if !self.alive(i) {
            return obs;
        }
        let sim = &self.sim;
        let g = &self.groups;
        let me = self.handles[i];
        let cameras = sim.get_module::<Cameras>(g.agents).ok();
        let visible = |t: BodyHandle| cameras.is_some_and(|c| c.is_visible(me, t));
        let world = sim.world();

        obs.x_self = self.self_row(i);
        if let Ok(zone) = sim.get_module::<SafeZone>(g.agents) {
            let z = zone.state();
            obs.x_zone = [
                z.current.center.x,
                z.current.center.y,
                z.current.radius,
                z.next.center.x,
                z.next.center.y,
                z.next.radius,
            ];
        }

        let others = obs.block_mut(EntityType::Other);
        for (row, j) in (0..self.handles.len()).filter(|&j| j != i).enumerate() {
            if self.alive(j) && visible(self.handles[j]) {
                others.set_row(row, &self.self_row(j));
            }
        }

        let live = |group: GroupId| -> Vec<BodyHandle> {
            sim.get_module::<IndexBodies>(group)
                .map(|ix| ix.live().map(|(_, h)| h).collect())
                .unwrap_or_default()
        };

        let heals = obs.block_mut(EntityType::Heal);
        for (row, h) in live(g.heals).into_iter().enumerate().take(heals.len()) {
            if visible(h) {
                let p = world.position(h).expect("live heal");
                heals.set_row(row, &[p.x, p.y]);
            }
        }

        if let Ok(object) = sim.get_module::<Object>(g.boxes) {
            let boxes = obs.block_mut(EntityType::Box);
            for (row, h) in live(g.boxes).into_iter().enumerate().take(boxes.len()) {
                if visible(h) {
                    let spec = object.spec(h).expect("live box has a spec");
                    let p = world.position(h).expect("live box");
                    let mut v = spec_vertices(&spec);
                    v.extend([p.x, p.y, wrap_angle(world.angle(h).expect("live box"))]);
                    boxes.set_row(row, &v);
                }
            }
        }

        if let Ok(items) = sim.get_module::<ObjectItem>(g.boxitems) {
            let block = obs.block_mut(EntityType::BoxItem);
            for (row, h) in live(g.boxitems).into_iter().enumerate().take(block.len()) {
                if visible(h) {
                    let Some(ItemData::Box(spec)) = items.store().payload(h) else { continue };
                    let p = world.position(h).expect("live item");
                    let mut v = spec_vertices(spec);
                    v.extend([p.x, p.y]);
                    block.set_row(row, &v);
                }
            }
        }

        if let Ok(inv) = sim.get_module::<Inventory>(g.agents) {
            let p = world.position(me).expect("live agent");
            match inv.last(me).map(|held| &held.data) {
                Some(ItemData::Heal) => obs.block_mut(EntityType::HealSlot).set_row(0, &[p.x, p.y]),
                Some(ItemData::Box(spec)) => {
                    let mut v = spec_vertices(spec);
                    v.extend([p.x, p.y]);
                    obs.block_mut(EntityType::BoxSlot).set_row(0, &v);
                }
                None => {}
            }
        }
        obs
    }

    /// `(i, [team,] h, x, y, θ, v_x, v_y, ω)` of agent `i`.
    fn self_row(&self, i: usize) -> Vec<f64> {
        let h = self.handles[i];
        let world = self.sim.world();
        let hp = self
            .sim
            .get_module::<Health>(self.groups.agents)
            .ok()
            .and_then(|m| m.health(h))
            .unwrap_or(0);
        let p = world.position(h).expect("live agent");
        let v = world.linear_velocity(h).expect("live agent");
        let mut row = Vec::with_capacity(self.layout.self_width);
        row.push(i as f64);
        if self.config.teams() {
            row.push(self.teams[i] as f64);
        }
        row.extend([
            hp as f64,
            p.x,
            p.y,
            wrap_angle(world.angle(h).expect("live agent")),
            v.x,
            v.y,
            world.angular_velocity(h).expect("live agent"),
        ]);
        row
    }

    /// Team of agent `i` as a [`TeamId`], when teams are enabled.
    pub fn team_id(&self, i: usize) -> Option<TeamId> {
        self.config.teams().then(|| TeamId(self.teams[i]))
    }
}

/// Origin-centered, unrotated box corners as 8 values.
pub fn spec_vertices(spec: &BoxSpec) -> Vec<f64> {
    rect_vertices(spec.half_w, spec.half_h).iter().flat_map(|v| [v.x, v.y]).collect()
}
