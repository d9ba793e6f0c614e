//! General-purpose modules: body indexing, death tracking, vision cameras
//! and motor controls.

use std::hash::Hasher;

use fnv::FnvHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::{DamageCause, Health};
use crate::physics::{BodyHandle, ShapeSnapshot};
use crate::sim::{GroupId, SimModule, Simulation};
use crate::{Real, Vec2};

/// Assigns each spawned body the next integer index. Entries of despawned
/// bodies become `None` and are never reused.
#[derive(Default)]
pub struct IndexBodies {
    slots: Vec<Option<BodyHandle>>,
    index: FnvHashMap<BodyHandle, usize>,
}

impl IndexBodies {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of a body spawned this episode, alive or not.
    pub fn body_index(&self, body: BodyHandle) -> Result<usize> {
        self.index.get(&body).copied().ok_or(Error::UnknownBody(body))
    }

    pub fn index_live(&self, i: usize) -> bool {
        matches!(self.slots.get(i), Some(Some(_)))
    }

    pub fn get(&self, i: usize) -> Option<BodyHandle> {
        self.slots.get(i).copied().flatten()
    }

    /// Number of indices handed out this episode.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Live bodies in index order.
    pub fn live(&self) -> impl Iterator<Item = (usize, BodyHandle)> + '_ {
        self.slots.iter().enumerate().filter_map(|(i, s)| s.map(|h| (i, h)))
    }
}

impl SimModule for IndexBodies {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.slots.clear();
        self.index.clear();
    }

    fn post_spawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        for &b in bodies {
            self.index.insert(b, self.slots.len());
            self.slots.push(Some(b));
        }
    }

    fn pre_despawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        for b in bodies {
            if let Some(&i) = self.index.get(b) {
                self.slots[i] = None;
            }
        }
    }

    fn hash_state(&self, state: &mut dyn Hasher) {
        for s in &self.slots {
            state.write_u8(s.is_some() as u8);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Death {
    pub body: BodyHandle,
    /// Index from the group's [`IndexBodies`], when present.
    pub index: Option<usize>,
    pub cause: Option<DamageCause>,
}

/// Records the bodies of its group that despawned during the current step.
#[derive(Default)]
pub struct TrackDeaths {
    step: Vec<Death>,
    episode: Vec<Death>,
    log: bool,
    lines: Vec<String>,
}

impl TrackDeaths {
    pub fn new() -> Self {
        Self::default()
    }

    /// Despawns of the current step.
    pub fn deaths(&self) -> &[Death] {
        &self.step
    }

    /// Every despawn since the last reset.
    pub fn episode_deaths(&self) -> &[Death] {
        &self.episode
    }
}

impl SimModule for TrackDeaths {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.step.clear();
        self.episode.clear();
        self.lines.clear();
    }

    fn pre_step(&mut self, _: &mut Simulation, _: GroupId) {
        self.step.clear();
    }

    fn pre_despawn(&mut self, sim: &mut Simulation, group: GroupId, bodies: &[BodyHandle]) {
        for &body in bodies {
            let index = sim
                .get_module::<IndexBodies>(group)
                .ok()
                .and_then(|ix| ix.body_index(body).ok());
            let cause = sim
                .get_module::<Health>(group)
                .ok()
                .and_then(|hp| hp.cause_of_death(body).cloned());
            let death = Death { body, index, cause };
            if self.log {
                let line = format_death_line(sim.step_count() + 1, sim.group(group).name(), &death);
                log::info!(target: "deaths", "{line}");
                self.lines.push(line);
            }
            self.step.push(death.clone());
            self.episode.push(death);
        }
    }
}

/// `death step=<n> group=<name> index=<i> cause=<cause>`
pub fn format_death_line(step: u64, group: &str, death: &Death) -> String {
    let index = death.index.map_or_else(|| "-".to_string(), |i| i.to_string());
    let cause = death.cause.as_ref().map_or_else(|| "none".to_string(), |c| c.to_string());
    format!("death step={step} group={group} index={index} cause={cause}")
}

/// [`TrackDeaths`] that also emits one log line per death on the `deaths`
/// log target.
pub struct LogDeaths(pub TrackDeaths);

impl LogDeaths {
    pub fn new() -> Self {
        LogDeaths(TrackDeaths {
            log: true,
            ..TrackDeaths::default()
        })
    }

    /// Lines emitted since the last reset.
    pub fn lines(&self) -> &[String] {
        &self.0.lines
    }
}

impl Default for LogDeaths {
    fn default() -> Self {
        Self::new()
    }
}

impl SimModule for LogDeaths {
    fn post_reset(&mut self, sim: &mut Simulation, group: GroupId) {
        self.0.post_reset(sim, group)
    }

    fn pre_step(&mut self, sim: &mut Simulation, group: GroupId) {
        self.0.pre_step(sim, group)
    }

    fn pre_despawn(&mut self, sim: &mut Simulation, group: GroupId, bodies: &[BodyHandle]) {
        self.0.pre_despawn(sim, group, bodies)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    /// Half of the cone aperture, radians.
    pub half_angle: Real,
    /// `None` means unlimited (bounded by the room).
    pub range: Option<Real>,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            half_angle: std::f64::consts::FRAC_PI_3,
            range: None,
        }
    }
}

/// Vision cones attached to every body of the group.
///
/// A body is visible to an observer when its center is inside the cone
/// (and range), and a ray from the observer's center to the target's center
/// hits the target before any other solid body. Sensors never occlude.
pub struct Cameras {
    pub config: CameraConfig,
    visible: FnvHashMap<BodyHandle, Vec<BodyHandle>>,
}

impl Cameras {
    pub fn new(config: CameraConfig) -> Self {
        Self {
            config,
            visible: FnvHashMap::default(),
        }
    }

    pub fn visible_set(&self, observer: BodyHandle) -> Result<&[BodyHandle]> {
        self.visible
            .get(&observer)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownBody(observer))
    }

    pub fn is_visible(&self, observer: BodyHandle, target: BodyHandle) -> bool {
        self.visible
            .get(&observer)
            .is_some_and(|v| v.binary_search(&target).is_ok())
    }

    /// Recomputes every observer's visible set from the current world.
    pub fn refresh(&mut self, sim: &Simulation, group: GroupId) {
        let snapshot = sim.world().snapshot();
        self.visible.clear();
        for &observer in sim.group(group).bodies() {
            let set = visible_from(&snapshot, observer, &self.config, sim.walls());
            self.visible.insert(observer, set);
        }
    }
}

/// Visible set of `observer` against a frozen world, sorted by handle.
pub fn visible_from(
    snapshot: &ShapeSnapshot<Real>,
    observer: BodyHandle,
    config: &CameraConfig,
    exclude: &[BodyHandle],
) -> Vec<BodyHandle> {
    let Some(obs) = snapshot.get(observer) else {
        return Vec::new();
    };
    let origin = obs.position;
    let facing = Vec2::from_angle(obs.angle);
    let cos_half = config.half_angle.cos();
    let mut out = Vec::new();
    for target in snapshot.entries() {
        if target.handle == observer || exclude.contains(&target.handle) {
            continue;
        }
        let d = target.position - origin;
        let dist = d.length();
        if dist == 0.0 || config.range.is_some_and(|r| dist > r) {
            continue;
        }
        if facing.dot(d) < dist * cos_half {
            continue;
        }
        let hit = snapshot
            .raycast(origin, target.position, |e| {
                e.handle != observer && (e.handle == target.handle || !e.sensor)
            })
            .ok()
            .flatten();
        if hit.is_some_and(|h| h.body == target.handle) {
            out.push(target.handle);
        }
    }
    out
}

impl SimModule for Cameras {
    fn populate(&mut self, sim: &mut Simulation, group: GroupId) {
        self.refresh(sim, group);
    }

    fn post_step(&mut self, sim: &mut Simulation, group: GroupId) {
        self.refresh(sim, group);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotorConfig {
    /// Force magnitude per unit of longitudinal/lateral control.
    pub force: Real,
    /// Torque magnitude per unit of angular control.
    pub torque: Real,
}

impl Default for MotorConfig {
    fn default() -> Self {
        Self { force: 5.0, torque: 0.5 }
    }
}

/// Per-body (longitudinal, lateral, angular) controls in {-1, 0, 1},
/// applied as body-frame forces at the next pre-step and then cleared.
pub struct DynamicMotors {
    pub config: MotorConfig,
    controls: FnvHashMap<BodyHandle, [i8; 3]>,
    order: Vec<BodyHandle>,
}

impl DynamicMotors {
    pub fn new(config: MotorConfig) -> Self {
        Self {
            config,
            controls: FnvHashMap::default(),
            order: Vec::new(),
        }
    }

    pub fn set_motor(&mut self, body: BodyHandle, controls: [i8; 3]) -> Result<()> {
        if let Some(bad) = controls.iter().find(|c| !(-1..=1).contains(*c)) {
            return Err(Error::InvalidControl(format!("motor control {bad} not in {{-1, 0, 1}}")));
        }
        let slot = self.controls.get_mut(&body).ok_or(Error::UnknownBody(body))?;
        *slot = controls;
        Ok(())
    }

    pub fn control(&self, body: BodyHandle) -> Option<[i8; 3]> {
        self.controls.get(&body).copied()
    }
}

impl SimModule for DynamicMotors {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.controls.clear();
        self.order.clear();
    }

    fn post_spawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        for &b in bodies {
            self.controls.insert(b, [0; 3]);
            self.order.push(b);
        }
    }

    fn pre_despawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        for b in bodies {
            self.controls.remove(b);
        }
        self.order.retain(|b| !bodies.contains(b));
    }

    fn pre_step(&mut self, sim: &mut Simulation, _: GroupId) {
        for &b in &self.order {
            let c = self.controls.insert(b, [0; 3]).unwrap_or_default();
            if c == [0; 3] {
                continue;
            }
            let force = Vec2::new(c[0] as Real, c[1] as Real) * self.config.force;
            let torque = c[2] as Real * self.config.torque;
            sim.world_mut()
                .apply_control(b, force, torque)
                .expect("motor bodies are live");
        }
    }
}
