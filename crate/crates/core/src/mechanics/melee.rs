use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::health::{damage, DamageCause, Health};
use crate::mechanics::teams::Teams;
use crate::perception::IndexBodies;
use crate::physics::BodyHandle;
use crate::sim::{GroupId, SimModule, Simulation};
use crate::{Real, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeleeConfig {
    /// Segment length measured from the body perimeter.
    pub length: Real,
    pub damage: i64,
    /// Steps between two attacks of the same body.
    pub cooldown: u32,
}

impl Default for MeleeConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            damage: 20,
            cooldown: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeleeHit {
    pub attacker: BodyHandle,
    pub victim: BodyHandle,
    pub killed: bool,
}

#[derive(Clone, Debug, Default)]
struct Slot {
    body: BodyHandle,
    control: bool,
    cooldown: u32,
}

/// Melee segment of a circular body of radius `radius` facing `angle`.
pub fn melee_segment(center: Vec2, angle: Real, radius: Real, length: Real) -> (Vec2, Vec2) {
    let facing = Vec2::from_angle(angle);
    let origin = center + facing * radius;
    (origin, origin + facing * length)
}

/// One binary attack control per body. An attack damages the nearest body
/// with health along the melee segment; walls and other solid bodies stop
/// the segment, item sensors never do.
pub struct Melee {
    pub config: MeleeConfig,
    slots: Vec<Slot>,
    attacking: Vec<BodyHandle>,
    hits: Vec<MeleeHit>,
}

impl Melee {
    pub fn new(config: MeleeConfig) -> Self {
        Self {
            config,
            slots: Vec::new(),
            attacking: Vec::new(),
            hits: Vec::new(),
        }
    }

    pub fn set_attack(&mut self, body: BodyHandle, on: bool) -> Result<()> {
        let slot = self.slots.iter_mut().find(|s| s.body == body).ok_or(Error::UnknownBody(body))?;
        slot.control = on;
        Ok(())
    }

    pub fn cooldown(&self, body: BodyHandle) -> Option<u32> {
        self.slots.iter().find(|s| s.body == body).map(|s| s.cooldown)
    }

    /// Bodies that swung during the current step, hit or miss.
    pub fn attacking(&self) -> &[BodyHandle] {
        &self.attacking
    }

    pub fn hits(&self) -> &[MeleeHit] {
        &self.hits
    }

    /// Resolves one attack from `attacker`; `None` on a miss.
    pub fn melee_attack(&self, sim: &mut Simulation, group: GroupId, attacker: BodyHandle) -> Result<Option<MeleeHit>> {
        let world = sim.world();
        let radius = world.shape(attacker)?.bounding_radius();
        let (from, to) = melee_segment(world.position(attacker)?, world.angle(attacker)?, radius, self.config.length);
        let hit = world.raycast(from, to, |h| h != attacker && !world.is_sensor(h).unwrap_or(true))?;
        let Some(hit) = hit else { return Ok(None) };
        let victim = hit.body;
        let Some(victim_group) = sim.group_of(victim) else {
            return Ok(None);
        };
        if !sim.has_module::<Health>(victim_group) {
            return Ok(None);
        }
        let index = sim.get_module::<IndexBodies>(group).ok().and_then(|ix| ix.body_index(attacker).ok());
        let team = sim.get_module::<Teams>(group).ok().and_then(|t| t.team_of(attacker));
        let cause = DamageCause::melee(attacker, index, team);
        let was_alive = sim.get_module::<Health>(victim_group)?.is_alive(victim);
        damage(sim, victim, self.config.damage, cause)?;
        let killed = was_alive && !sim.get_module::<Health>(victim_group)?.is_alive(victim);
        Ok(Some(MeleeHit { attacker, victim, killed }))
    }
}

impl SimModule for Melee {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.slots.clear();
        self.attacking.clear();
        self.hits.clear();
    }

    fn pre_step(&mut self, sim: &mut Simulation, group: GroupId) {
        self.attacking.clear();
        self.hits.clear();
        for i in 0..self.slots.len() {
            let slot = &mut self.slots[i];
            slot.cooldown = slot.cooldown.saturating_sub(1);
            let fire = std::mem::take(&mut slot.control) && slot.cooldown == 0;
            if !fire {
                continue;
            }
            slot.cooldown = self.config.cooldown;
            let body = slot.body;
            self.attacking.push(body);
            if let Some(hit) = self.melee_attack(sim, group, body).expect("attacker is a live body") {
                self.hits.push(hit);
            }
        }
    }

    fn post_spawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        for &body in bodies {
            self.slots.push(Slot {
                body,
                ..Slot::default()
            });
        }
    }

    fn pre_despawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        self.slots.retain(|s| !bodies.contains(&s.body));
    }

    fn hash_state(&self, state: &mut dyn Hasher) {
        for s in &self.slots {
            state.write_u32(s.cooldown);
        }
    }
}
