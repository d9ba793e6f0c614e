//! Simulation / group / module framework.
//!
//! A [`Simulation`] owns the physics world and an ordered list of body
//! groups. Each group owns an ordered list of [`SimModule`]s whose callbacks
//! implement all gameplay semantics. Callbacks fire in group declaration
//! order, then module declaration order.
//!
//! While a callback runs, its module is temporarily moved out of the group so
//! the callback can borrow the whole simulation mutably. A module therefore
//! cannot look itself up through [`Simulation::get_module`], and bodies it
//! spawns into its own group do not trigger its own `post_spawn`.

use std::any::{type_name, Any};
use std::hash::Hasher;

use fnv::FnvHashMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::ItemModule;
use crate::physics::{BodyDef, BodyHandle, Contact, PhysicsParams, Room, World};
use crate::{Real, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupId(pub usize);

#[allow(unused_variables)]
pub trait SimModule: Any + Send {
    fn post_reset(&mut self, sim: &mut Simulation, group: GroupId) {}
    /// Runs after every module has seen `post_reset`; spawners belong here.
    fn populate(&mut self, sim: &mut Simulation, group: GroupId) {}
    fn pre_step(&mut self, sim: &mut Simulation, group: GroupId) {}
    fn post_step(&mut self, sim: &mut Simulation, group: GroupId) {}
    fn post_spawn(&mut self, sim: &mut Simulation, group: GroupId, bodies: &[BodyHandle]) {}
    fn pre_despawn(&mut self, sim: &mut Simulation, group: GroupId, bodies: &[BodyHandle]) {}

    /// Item modules expose the `use` contract through this.
    fn as_item(&mut self) -> Option<&mut dyn ItemModule> {
        None
    }

    /// Mixes module state into the simulation state hash. Implementations
    /// must not feed raw handle values, which differ between episodes.
    fn hash_state(&self, state: &mut dyn Hasher) {}
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Seconds per simulation step.
    pub dt: Real,
    /// Physics substeps per simulation step.
    pub substeps: usize,
    pub room: Room<Real>,
    pub physics: PhysicsParams<Real>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 60.0,
            substeps: 2,
            room: Room::default(),
            physics: PhysicsParams::default(),
        }
    }
}

pub struct Group {
    name: String,
    modules: Vec<Option<Box<dyn SimModule>>>,
    live: Vec<BodyHandle>,
}

impl Group {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Live bodies in spawn order.
    pub fn bodies(&self) -> &[BodyHandle] {
        &self.live
    }

    pub fn contains(&self, h: BodyHandle) -> bool {
        self.live.contains(&h)
    }
}

#[derive(Clone, Copy)]
enum Phase {
    Reset,
    Populate,
    Pre,
    Post,
}

pub struct Simulation {
    world: World<Real>,
    groups: Vec<Group>,
    rng: ChaCha8Rng,
    steps: u64,
    resets: u64,
    owners: FnvHashMap<BodyHandle, GroupId>,
    despawn_queue: Vec<BodyHandle>,
    contacts: Vec<Contact>,
    walls: Vec<BodyHandle>,
    config: SimConfig,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Self {
        Self {
            world: World::new(config.physics.clone()),
            groups: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            steps: 0,
            resets: 0,
            owners: FnvHashMap::default(),
            despawn_queue: Vec::new(),
            contacts: Vec::new(),
            walls: Vec::new(),
            config,
        }
    }

    /// Declares a new group. Groups are fixed once the simulation is reset.
    pub fn add_group(&mut self, name: impl Into<String>, modules: Vec<Box<dyn SimModule>>) -> GroupId {
        assert_eq!(self.resets, 0, "groups must be declared before the first reset");
        self.groups.push(Group {
            name: name.into(),
            modules: modules.into_iter().map(Some).collect(),
            live: Vec::new(),
        });
        GroupId(self.groups.len() - 1)
    }

    pub fn add_module(&mut self, group: GroupId, module: Box<dyn SimModule>) {
        assert_eq!(self.resets, 0, "modules must be declared before the first reset");
        self.groups[group.0].modules.push(Some(module));
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn room(&self) -> &Room<Real> {
        &self.config.room
    }

    pub fn world(&self) -> &World<Real> {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World<Real> {
        &mut self.world
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Number of completed steps since the last reset.
    pub fn step_count(&self) -> u64 {
        self.steps
    }

    /// Number of resets performed; lets shared helpers notice a new episode.
    pub fn reset_count(&self) -> u64 {
        self.resets
    }

    pub fn walls(&self) -> &[BodyHandle] {
        &self.walls
    }

    pub fn is_wall(&self, h: BodyHandle) -> bool {
        self.walls.contains(&h)
    }

    /// Contact events produced by the most recent physics step.
    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    pub fn groups(&self) -> impl Iterator<Item = (GroupId, &Group)> {
        self.groups.iter().enumerate().map(|(i, g)| (GroupId(i), g))
    }

    pub fn group(&self, id: GroupId) -> &Group {
        &self.groups[id.0]
    }

    pub fn group_by_name(&self, name: &str) -> Option<GroupId> {
        self.groups.iter().position(|g| g.name == name).map(GroupId)
    }

    pub fn group_of(&self, h: BodyHandle) -> Option<GroupId> {
        self.owners.get(&h).copied()
    }

    pub fn position(&self, h: BodyHandle) -> Result<Vec2> {
        Ok(self.world.position(h)?)
    }

    pub fn reset(&mut self, seed: u64) {
        self.world.clear();
        self.walls.clear();
        for def in self.config.room.wall_defs() {
            let h = self.world.create_body(&def).expect("wall definitions are valid");
            self.walls.push(h);
        }
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.steps = 0;
        self.resets += 1;
        self.owners.clear();
        self.despawn_queue.clear();
        self.contacts.clear();
        for g in &mut self.groups {
            g.live.clear();
        }
        self.fire_all(Phase::Reset);
        self.fire_all(Phase::Populate);
    }

    pub fn step(&mut self) -> Result<()> {
        if self.resets == 0 {
            return Err(Error::NotReset);
        }
        self.fire_all(Phase::Pre);
        self.contacts = self.world.step(self.config.dt, self.config.substeps);
        self.fire_all(Phase::Post);
        self.flush_despawns()?;
        self.steps += 1;
        Ok(())
    }

    fn fire_all(&mut self, phase: Phase) {
        for gi in 0..self.groups.len() {
            for mi in 0..self.groups[gi].modules.len() {
                let Some(mut module) = self.groups[gi].modules[mi].take() else {
                    continue;
                };
                let gid = GroupId(gi);
                match phase {
                    Phase::Reset => module.post_reset(self, gid),
                    Phase::Populate => module.populate(self, gid),
                    Phase::Pre => module.pre_step(self, gid),
                    Phase::Post => module.post_step(self, gid),
                }
                self.groups[gi].modules[mi] = Some(module);
            }
        }
    }

    fn fire_group<F>(&mut self, gid: GroupId, mut f: F)
    where
        F: FnMut(&mut dyn SimModule, &mut Simulation),
    {
        for mi in 0..self.groups[gid.0].modules.len() {
            let Some(mut module) = self.groups[gid.0].modules[mi].take() else {
                continue;
            };
            f(module.as_mut(), self);
            self.groups[gid.0].modules[mi] = Some(module);
        }
    }

    /// Spawns bodies into `group`; either all definitions are valid and
    /// every body spawns, or nothing changes.
    pub fn spawn(&mut self, group: GroupId, defs: &[BodyDef<Real>]) -> Result<Vec<BodyHandle>> {
        for def in defs {
            def.validate()?;
        }
        let mut handles = Vec::with_capacity(defs.len());
        for def in defs {
            let h = self.world.create_body(def)?;
            self.owners.insert(h, group);
            self.groups[group.0].live.push(h);
            handles.push(h);
        }
        if !handles.is_empty() {
            self.fire_group(group, |m, sim| m.post_spawn(sim, group, &handles));
        }
        Ok(handles)
    }

    /// Despawns bodies immediately, firing `pre_despawn` first.
    pub fn despawn(&mut self, group: GroupId, handles: &[BodyHandle]) -> Result<()> {
        for &h in handles {
            if self.owners.get(&h) != Some(&group) {
                return Err(Error::NotInGroup {
                    body: h,
                    group: self.groups[group.0].name.clone(),
                });
            }
        }
        if handles.is_empty() {
            return Ok(());
        }
        self.fire_group(group, |m, sim| m.pre_despawn(sim, group, handles));
        for &h in handles {
            self.world.destroy_body(h)?;
            self.owners.remove(&h);
        }
        self.groups[group.0].live.retain(|h| !handles.contains(h));
        self.despawn_queue.retain(|h| !handles.contains(h));
        Ok(())
    }

    /// Queues a despawn applied after the post-step phase.
    pub fn request_despawn(&mut self, h: BodyHandle) {
        if !self.despawn_queue.contains(&h) {
            self.despawn_queue.push(h);
        }
    }

    pub fn is_despawn_pending(&self, h: BodyHandle) -> bool {
        self.despawn_queue.contains(&h)
    }

    fn flush_despawns(&mut self) -> Result<()> {
        while !self.despawn_queue.is_empty() {
            let queue = std::mem::take(&mut self.despawn_queue);
            let mut by_group: Vec<(GroupId, Vec<BodyHandle>)> = Vec::new();
            for h in queue {
                let Some(gid) = self.group_of(h) else { continue };
                match by_group.iter_mut().find(|(g, _)| *g == gid) {
                    Some((_, hs)) => hs.push(h),
                    None => by_group.push((gid, vec![h])),
                }
            }
            for (gid, hs) in by_group {
                self.despawn(gid, &hs)?;
            }
        }
        Ok(())
    }

    /// First module of type `M` in the group, in declaration order.
    pub fn get_module<M: SimModule>(&self, group: GroupId) -> Result<&M> {
        self.groups[group.0]
            .modules
            .iter()
            .flatten()
            .find_map(|m| (m.as_ref() as &dyn Any).downcast_ref::<M>())
            .ok_or_else(|| self.not_found::<M>(group))
    }

    pub fn get_module_mut<M: SimModule>(&mut self, group: GroupId) -> Result<&mut M> {
        let name = self.groups[group.0].name.clone();
        self.groups[group.0]
            .modules
            .iter_mut()
            .flatten()
            .find_map(|m| (m.as_mut() as &mut dyn Any).downcast_mut::<M>())
            .ok_or(Error::ModuleNotFound {
                module: type_name::<M>(),
                group: name,
            })
    }

    pub fn has_module<M: SimModule>(&self, group: GroupId) -> bool {
        self.get_module::<M>(group).is_ok()
    }

    /// Runs `f` with the first module of type `M` moved out of its group so
    /// it can act on the rest of the simulation.
    pub fn with_module<M: SimModule, R>(
        &mut self,
        group: GroupId,
        f: impl FnOnce(&mut M, &mut Simulation) -> R,
    ) -> Result<R> {
        let idx = self.groups[group.0]
            .modules
            .iter()
            .position(|m| m.as_ref().is_some_and(|m| (m.as_ref() as &dyn Any).is::<M>()))
            .ok_or_else(|| self.not_found::<M>(group))?;
        let mut boxed = self.groups[group.0].modules[idx].take().expect("module present");
        let out = {
            let module = (boxed.as_mut() as &mut dyn Any)
                .downcast_mut::<M>()
                .expect("type checked above");
            f(module, self)
        };
        self.groups[group.0].modules[idx] = Some(boxed);
        Ok(out)
    }

    /// Runs `f` with the group's item module moved out.
    pub fn with_item_module<R>(
        &mut self,
        group: GroupId,
        f: impl FnOnce(&mut dyn ItemModule, &mut Simulation) -> R,
    ) -> Result<R> {
        let idx = self.groups[group.0]
            .modules
            .iter_mut()
            .position(|m| m.as_mut().is_some_and(|m| m.as_item().is_some()))
            .ok_or_else(|| Error::ModuleNotFound {
                module: "ItemModule",
                group: self.groups[group.0].name.clone(),
            })?;
        let mut boxed = self.groups[group.0].modules[idx].take().expect("module present");
        let out = f(boxed.as_item().expect("checked above"), self);
        self.groups[group.0].modules[idx] = Some(boxed);
        Ok(out)
    }

    /// Whether the group holds an item module.
    pub fn is_item_group(&mut self, group: GroupId) -> bool {
        self.groups[group.0].modules.iter_mut().flatten().any(|m| m.as_item().is_some())
    }

    fn not_found<M>(&self, group: GroupId) -> Error {
        Error::ModuleNotFound {
            module: type_name::<M>(),
            group: self.groups[group.0].name.clone(),
        }
    }

    pub fn hash_state(&self, state: &mut dyn Hasher) {
        state.write_u64(self.steps);
        let mut adapter = HashAdapter(state);
        self.world.hash_state(&mut adapter);
        for g in &self.groups {
            adapter.0.write_u64(g.live.len() as u64);
            for m in g.modules.iter().flatten() {
                m.hash_state(adapter.0);
            }
        }
    }

    /// 64-bit FNV-1a digest of the full simulation state.
    pub fn state_hash(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        self.hash_state(&mut h);
        h.finish()
    }
}

struct HashAdapter<'a>(&'a mut dyn Hasher);

impl Hasher for HashAdapter<'_> {
    fn finish(&self) -> u64 {
        self.0.finish()
    }

    fn write(&mut self, bytes: &[u8]) {
        self.0.write(bytes)
    }

    fn write_u64(&mut self, v: u64) {
        self.0.write_u64(v)
    }
}
