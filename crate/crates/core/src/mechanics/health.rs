use std::fmt;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::BodyHandle;
use crate::sim::{GroupId, SimModule, Simulation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TeamId(pub u32);

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DamageKind {
    Melee,
    Zone,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DamageCause {
    pub kind: DamageKind,
    pub attacker: Option<BodyHandle>,
    /// Index of the attacker in its group, when known.
    pub attacker_index: Option<usize>,
    pub team: Option<TeamId>,
}

impl DamageCause {
    pub fn melee(attacker: BodyHandle, attacker_index: Option<usize>, team: Option<TeamId>) -> Self {
        Self {
            kind: DamageKind::Melee,
            attacker: Some(attacker),
            attacker_index,
            team,
        }
    }

    pub fn zone() -> Self {
        Self {
            kind: DamageKind::Zone,
            attacker: None,
            attacker_index: None,
            team: None,
        }
    }

    pub fn other() -> Self {
        Self {
            kind: DamageKind::Other,
            ..Self::zone()
        }
    }
}

impl fmt::Display for DamageCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DamageKind::Melee => {
                write!(f, "melee")?;
                if let Some(i) = self.attacker_index {
                    write!(f, ":{i}")?;
                }
                if let Some(t) = self.team {
                    write!(f, ":team{t}")?;
                }
                Ok(())
            }
            DamageKind::Zone => write!(f, "zone"),
            DamageKind::Other => write!(f, "other"),
        }
    }
}

/// Marks a damage cause as ineffective against a body.
pub trait DamageFilter: Send {
    fn immune(&self, target: BodyHandle, cause: &DamageCause) -> bool;
}

impl<F> DamageFilter for F
where
    F: Fn(BodyHandle, &DamageCause) -> bool + Send,
{
    fn immune(&self, target: BodyHandle, cause: &DamageCause) -> bool {
        self(target, cause)
    }
}

type DeathCallback = Box<dyn FnMut(BodyHandle, &DamageCause) + Send>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HealthConfig {
    pub initial: i64,
    /// No cap when `None`; healing at full health then still adds health.
    pub max: Option<i64>,
}

impl Default for HealthConfig {
    fn default() -> Self {
        Self { initial: 100, max: None }
    }
}

/// One damage application that changed health.
#[derive(Clone, Debug, PartialEq)]
pub struct DamageEvent {
    pub target: BodyHandle,
    pub amount: i64,
    pub cause: DamageCause,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HealEvent {
    pub target: BodyHandle,
    pub amount: i64,
}

/// Integer health for every body of the group.
///
/// A body whose health drops to 0 or below is queued for despawn at the end
/// of the step and its cause of death is recorded; later damage in the same
/// step is ignored.
pub struct Health {
    pub config: HealthConfig,
    hp: Vec<(BodyHandle, i64)>,
    causes: Vec<(BodyHandle, DamageCause)>,
    step_deaths: Vec<(BodyHandle, DamageCause)>,
    step_heals: Vec<HealEvent>,
    step_damage: Vec<DamageEvent>,
    filters: Vec<Box<dyn DamageFilter>>,
    on_death: Vec<DeathCallback>,
}

impl Health {
    pub fn new(config: HealthConfig) -> Self {
        Self {
            config,
            hp: Vec::new(),
            causes: Vec::new(),
            step_deaths: Vec::new(),
            step_heals: Vec::new(),
            step_damage: Vec::new(),
            filters: Vec::new(),
            on_death: Vec::new(),
        }
    }

    pub fn with_filter(mut self, filter: impl DamageFilter + 'static) -> Self {
        self.add_filter(filter);
        self
    }

    pub fn add_filter(&mut self, filter: impl DamageFilter + 'static) {
        self.filters.push(Box::new(filter));
    }

    pub fn on_death(&mut self, callback: impl FnMut(BodyHandle, &DamageCause) + Send + 'static) {
        self.on_death.push(Box::new(callback));
    }

    fn slot(&mut self, body: BodyHandle) -> Result<&mut i64> {
        self.hp
            .iter_mut()
            .find(|(b, _)| *b == body)
            .map(|(_, hp)| hp)
            .ok_or(Error::UnknownBody(body))
    }

    pub fn health(&self, body: BodyHandle) -> Option<i64> {
        self.hp.iter().find(|(b, _)| *b == body).map(|(_, hp)| *hp)
    }

    pub fn set_health(&mut self, body: BodyHandle, value: i64) -> Result<()> {
        *self.slot(body)? = value;
        Ok(())
    }

    pub fn is_alive(&self, body: BodyHandle) -> bool {
        self.health(body).is_some_and(|hp| hp > 0)
    }

    pub fn is_immune(&self, target: BodyHandle, cause: &DamageCause) -> bool {
        self.filters.iter().any(|f| f.immune(target, cause))
    }

    /// Applies damage; returns whether it was applied and whether it killed.
    /// Callers use [`damage`] so the death also queues a despawn.
    pub fn apply_damage(&mut self, target: BodyHandle, amount: i64, cause: &DamageCause) -> Result<(bool, bool)> {
        if amount <= 0 {
            return Err(Error::InvalidControl(format!("damage amount {amount} must be positive")));
        }
        let current = self.health(target).ok_or(Error::UnknownBody(target))?;
        if current <= 0 || self.is_immune(target, cause) {
            return Ok((false, false));
        }
        let hp = current - amount;
        *self.slot(target)? = hp;
        self.step_damage.push(DamageEvent {
            target,
            amount,
            cause: cause.clone(),
        });
        if hp > 0 {
            return Ok((true, false));
        }
        self.causes.push((target, cause.clone()));
        self.step_deaths.push((target, cause.clone()));
        for cb in &mut self.on_death {
            cb(target, cause);
        }
        Ok((true, true))
    }

    pub fn heal(&mut self, target: BodyHandle, amount: i64) -> Result<()> {
        if amount <= 0 {
            return Err(Error::InvalidControl(format!("heal amount {amount} must be positive")));
        }
        let max = self.config.max;
        let hp = self.slot(target)?;
        if *hp <= 0 {
            return Err(Error::DeadBody(target));
        }
        let healed = *hp + amount;
        *hp = max.map_or(healed, |m| healed.min(m.max(*hp)));
        self.step_heals.push(HealEvent { target, amount });
        Ok(())
    }

    pub fn cause_of_death(&self, body: BodyHandle) -> Option<&DamageCause> {
        self.causes.iter().find(|(b, _)| *b == body).map(|(_, c)| c)
    }

    /// Deaths (health reaching 0) during the current step.
    pub fn step_deaths(&self) -> &[(BodyHandle, DamageCause)] {
        &self.step_deaths
    }

    /// Damage applied during the current step.
    pub fn step_damage(&self) -> &[DamageEvent] {
        &self.step_damage
    }

    /// Heals applied during the current step.
    pub fn step_heals(&self) -> &[HealEvent] {
        &self.step_heals
    }
}

impl SimModule for Health {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.hp.clear();
        self.causes.clear();
        self.step_deaths.clear();
        self.step_heals.clear();
        self.step_damage.clear();
    }

    fn pre_step(&mut self, _: &mut Simulation, _: GroupId) {
        self.step_deaths.clear();
        self.step_heals.clear();
        self.step_damage.clear();
    }

    fn post_spawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        for &b in bodies {
            self.hp.push((b, self.config.initial));
        }
    }

    fn pre_despawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        self.hp.retain(|(b, _)| !bodies.contains(b));
    }

    fn hash_state(&self, state: &mut dyn Hasher) {
        for (_, hp) in &self.hp {
            state.write_i64(*hp);
        }
    }
}

/// Damages `target` through the [`Health`] module of its group, queueing a
/// despawn when it dies. Returns whether the damage was applied.
pub fn damage(sim: &mut Simulation, target: BodyHandle, amount: i64, cause: DamageCause) -> Result<bool> {
    let group = sim.group_of(target).ok_or(Error::UnknownBody(target))?;
    let (applied, killed) = sim.get_module_mut::<Health>(group)?.apply_damage(target, amount, &cause)?;
    if killed {
        sim.request_despawn(target);
    }
    Ok(applied)
}

pub fn heal(sim: &mut Simulation, target: BodyHandle, amount: i64) -> Result<()> {
    let group = sim.group_of(target).ok_or(Error::UnknownBody(target))?;
    sim.get_module_mut::<Health>(group)?.heal(target, amount)
}
