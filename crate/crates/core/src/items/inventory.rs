use std::hash::Hasher;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::{drop_item, ItemData, ItemKind};
use crate::mechanics::Teams;
use crate::physics::BodyHandle;
use crate::sim::{GroupId, SimModule, Simulation};
use crate::{Real, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InventoryConfig {
    pub capacity: usize,
    pub give_radius: Real,
    /// Radius of the disk death drops are scattered in.
    pub scatter_radius: Real,
    /// Distance in front of the perimeter where dropped items land.
    pub drop_offset: Real,
}

impl Default for InventoryConfig {
    fn default() -> Self {
        Self {
            capacity: 4,
            give_radius: 1.5,
            scatter_radius: 1.0,
            drop_offset: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeldItem {
    /// Item group the item returns to when dropped.
    pub group: GroupId,
    pub data: ItemData,
}

/// Fixed-capacity item slots per body. Slots fill in pickup order and only
/// the last occupied slot can be used, dropped or given.
pub struct Inventory {
    pub config: InventoryConfig,
    slots: Vec<(BodyHandle, Vec<HeldItem>)>,
}

impl Inventory {
    pub fn new(config: InventoryConfig) -> Self {
        Self {
            config,
            slots: Vec::new(),
        }
    }

    pub fn items(&self, body: BodyHandle) -> &[HeldItem] {
        self.slots
            .iter()
            .find(|(b, _)| *b == body)
            .map_or(&[], |(_, items)| items.as_slice())
    }

    pub fn last(&self, body: BodyHandle) -> Option<&HeldItem> {
        self.items(body).last()
    }

    pub fn has_free_slot(&self, body: BodyHandle) -> bool {
        self.slots
            .iter()
            .any(|(b, items)| *b == body && items.len() < self.config.capacity)
    }

    fn entry(&mut self, body: BodyHandle) -> Result<&mut Vec<HeldItem>> {
        self.slots
            .iter_mut()
            .find(|(b, _)| *b == body)
            .map(|(_, items)| items)
            .ok_or(Error::UnknownBody(body))
    }

    /// Appends an item; `false` when full.
    pub fn push(&mut self, body: BodyHandle, item: HeldItem) -> Result<bool> {
        let cap = self.config.capacity;
        let items = self.entry(body)?;
        if items.len() >= cap {
            return Ok(false);
        }
        items.push(item);
        Ok(true)
    }

    pub fn pop(&mut self, body: BodyHandle) -> Result<Option<HeldItem>> {
        Ok(self.entry(body)?.pop())
    }

    pub fn take_all(&mut self, body: BodyHandle) -> Result<Vec<HeldItem>> {
        Ok(std::mem::take(self.entry(body)?))
    }

    /// Held items per kind over every tracked body.
    pub fn count(&self, kind: ItemKind) -> usize {
        self.slots
            .iter()
            .flat_map(|(_, items)| items)
            .filter(|i| i.data.kind() == kind)
            .count()
    }
}

impl SimModule for Inventory {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.slots.clear();
    }

    fn pre_step(&mut self, sim: &mut Simulation, group: GroupId) {
        let g = sim.group(group);
        self.slots.retain(|(b, _)| g.contains(*b));
    }

    fn post_spawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        self.slots.extend(bodies.iter().map(|&b| (b, Vec::new())));
    }

    fn hash_state(&self, state: &mut dyn Hasher) {
        for (_, items) in &self.slots {
            state.write_usize(items.len());
            for i in items {
                state.write_u8(i.data.kind() as u8);
            }
        }
    }
}

/// Moves ground item `item` into `agent`'s inventory. `false` when full.
pub fn pickup(sim: &mut Simulation, group: GroupId, agent: BodyHandle, item: BodyHandle) -> Result<bool> {
    if !sim.get_module::<Inventory>(group)?.has_free_slot(agent) {
        return Ok(false);
    }
    let item_group = sim.group_of(item).ok_or(Error::UnknownBody(item))?;
    let data = sim
        .with_item_module(item_group, |m, _| m.store().payload(item).cloned())?
        .ok_or(Error::UnknownBody(item))?;
    sim.despawn(item_group, &[item])?;
    sim.get_module_mut::<Inventory>(group)?.push(agent, HeldItem { group: item_group, data })
}

/// Uses the last item; returns its kind when consumed.
pub fn use_last(sim: &mut Simulation, group: GroupId, agent: BodyHandle) -> Result<Option<ItemKind>> {
    let Some(held) = sim.get_module::<Inventory>(group)?.last(agent).cloned() else {
        return Ok(None);
    };
    let used = sim.with_item_module(held.group, |m, sim| m.use_item(sim, agent, &held.data))??;
    if !used {
        return Ok(None);
    }
    sim.get_module_mut::<Inventory>(group)?.pop(agent)?;
    Ok(Some(held.data.kind()))
}

/// Drops the last item just in front of the agent.
pub fn drop_last(sim: &mut Simulation, group: GroupId, agent: BodyHandle) -> Result<Option<BodyHandle>> {
    let Some(held) = sim.get_module_mut::<Inventory>(group)?.pop(agent)? else {
        return Ok(None);
    };
    let offset = sim.get_module::<Inventory>(group)?.config.drop_offset;
    let world = sim.world();
    let reach = world.shape(agent)?.bounding_radius() + offset;
    let at = world.position(agent)? + Vec2::from_angle(world.angle(agent)?) * reach;
    drop_item(sim, held.group, held.data, at).map(Some)
}

/// Drops every held item scattered uniformly in a disk around the agent.
pub fn drop_all(sim: &mut Simulation, group: GroupId, agent: BodyHandle) -> Result<Vec<BodyHandle>> {
    let items = sim.get_module_mut::<Inventory>(group)?.take_all(agent)?;
    let radius = sim.get_module::<Inventory>(group)?.config.scatter_radius;
    let center = sim.position(agent)?;
    let mut out = Vec::with_capacity(items.len());
    for held in items {
        let rng = sim.rng();
        let r = radius * rng.gen::<f64>().sqrt();
        let a = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        out.push(drop_item(sim, held.group, held.data, center + Vec2::from_angle(a) * r)?);
    }
    Ok(out)
}

/// Nearest live body of the group within the give radius that has a free
/// slot (and shares the giver's team when the group has teams).
pub fn give_target(sim: &Simulation, group: GroupId, giver: BodyHandle) -> Result<Option<BodyHandle>> {
    let inv = sim.get_module::<Inventory>(group)?;
    let teams = sim.get_module::<Teams>(group).ok();
    let from = sim.position(giver)?;
    let mut best: Option<(Real, BodyHandle)> = None;
    for &b in sim.group(group).bodies() {
        if b == giver || sim.is_despawn_pending(b) || !inv.has_free_slot(b) {
            continue;
        }
        if teams.is_some_and(|t| !t.same_team(giver, b)) {
            continue;
        }
        let d = sim.position(b)?.distance(from);
        if d <= inv.config.give_radius && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, b));
        }
    }
    Ok(best.map(|(_, b)| b))
}

pub fn give_last(sim: &mut Simulation, group: GroupId, giver: BodyHandle) -> Result<Option<(BodyHandle, ItemKind)>> {
    if sim.get_module::<Inventory>(group)?.last(giver).is_none() {
        return Ok(None);
    }
    let Some(to) = give_target(sim, group, giver)? else {
        return Ok(None);
    };
    let inv = sim.get_module_mut::<Inventory>(group)?;
    let held = inv.pop(giver)?.expect("checked above");
    let kind = held.data.kind();
    inv.push(to, held)?;
    Ok(Some((to, kind)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pickup {
    pub agent: BodyHandle,
    pub kind: ItemKind,
}

/// Agents pick up every item body they touch, lowest spawn order first.
#[derive(Default)]
pub struct AutoPickup {
    picked: Vec<Pickup>,
}

impl AutoPickup {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn picked(&self) -> &[Pickup] {
        &self.picked
    }
}

impl SimModule for AutoPickup {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.picked.clear();
    }

    fn pre_step(&mut self, _: &mut Simulation, _: GroupId) {
        self.picked.clear();
    }

    fn post_step(&mut self, sim: &mut Simulation, group: GroupId) {
        let pairs: Vec<(BodyHandle, BodyHandle)> = sim.world().touching().collect();
        if pairs.is_empty() {
            return;
        }
        let agents = sim.group(group).bodies().to_vec();
        for agent in agents {
            if sim.is_despawn_pending(agent) {
                continue;
            }
            let mut touched: Vec<BodyHandle> = pairs
                .iter()
                .filter_map(|&(a, b)| match (a == agent, b == agent) {
                    (true, _) => Some(b),
                    (_, true) => Some(a),
                    _ => None,
                })
                .collect();
            touched.sort();
            for item in touched {
                let Some(g) = sim.group_of(item) else { continue };
                if !sim.is_item_group(g) {
                    continue;
                }
                let kind = sim
                    .with_item_module(g, |m, _| m.kind())
                    .expect("item group has an item module");
                if !pickup(sim, group, agent, item).expect("live agent and item") {
                    break;
                }
                self.picked.push(Pickup { agent, kind });
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UseEvent {
    pub user: BodyHandle,
    pub kind: ItemKind,
}

/// Per-body control to use the last held item during the next step.
#[derive(Default)]
pub struct UseLast {
    requests: Vec<BodyHandle>,
    used: Vec<UseEvent>,
}

impl UseLast {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn request(&mut self, body: BodyHandle) {
        if !self.requests.contains(&body) {
            self.requests.push(body);
        }
    }

    pub fn used(&self) -> &[UseEvent] {
        &self.used
    }
}

impl SimModule for UseLast {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.requests.clear();
        self.used.clear();
    }

    fn pre_step(&mut self, sim: &mut Simulation, group: GroupId) {
        self.used.clear();
        let requests = std::mem::take(&mut self.requests);
        for &body in sim.group(group).bodies().to_vec().iter() {
            if !requests.contains(&body) || sim.is_despawn_pending(body) {
                continue;
            }
            if let Some(kind) = use_last(sim, group, body).expect("live user") {
                self.used.push(UseEvent { user: body, kind });
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GiveEvent {
    pub giver: BodyHandle,
    pub receiver: BodyHandle,
    pub kind: ItemKind,
}

/// Per-body control to give the last held item to the nearest eligible body.
#[derive(Default)]
pub struct GiveLast {
    requests: Vec<BodyHandle>,
    given: Vec<GiveEvent>,
}

impl GiveLast {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn request(&mut self, body: BodyHandle) {
        if !self.requests.contains(&body) {
            self.requests.push(body);
        }
    }

    pub fn given(&self) -> &[GiveEvent] {
        &self.given
    }
}

impl SimModule for GiveLast {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.requests.clear();
        self.given.clear();
    }

    fn pre_step(&mut self, sim: &mut Simulation, group: GroupId) {
        self.given.clear();
        let requests = std::mem::take(&mut self.requests);
        for &body in sim.group(group).bodies().to_vec().iter() {
            if !requests.contains(&body) || sim.is_despawn_pending(body) {
                continue;
            }
            if let Some((receiver, kind)) = give_last(sim, group, body).expect("live giver") {
                self.given.push(GiveEvent {
                    giver: body,
                    receiver,
                    kind,
                });
            }
        }
    }
}

/// Scatters the inventory of bodies about to despawn.
#[derive(Default)]
pub struct DeathDrop {
    dropped: Vec<BodyHandle>,
}

impl DeathDrop {
    pub fn new() -> Self {
        Self::default()
    }

    /// Item bodies dropped by deaths during the current step.
    pub fn dropped(&self) -> &[BodyHandle] {
        &self.dropped
    }
}

impl SimModule for DeathDrop {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.dropped.clear();
    }

    fn pre_step(&mut self, _: &mut Simulation, _: GroupId) {
        self.dropped.clear();
    }

    fn pre_despawn(&mut self, sim: &mut Simulation, group: GroupId, bodies: &[BodyHandle]) {
        for &b in bodies {
            let items = drop_all(sim, group, b).expect("dying body is still in the world");
            self.dropped.extend(items);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::items::Heal;
    use crate::mechanics::{Health, HealthConfig};
    use crate::physics::BodyDef;
    use crate::sim::SimConfig;

    struct Scene {
        sim: Simulation,
        heals: GroupId,
        agents: GroupId,
    }

    fn scene(teams: bool) -> Scene {
        let mut sim = Simulation::new(SimConfig::default());
        let heals = sim.add_group("heals", vec![Box::new(Heal::new(30, 0.2))]);
        let mut modules: Vec<Box<dyn SimModule>> = vec![
            Box::new(Health::new(HealthConfig::default())),
            Box::new(Inventory::new(InventoryConfig::default())),
            Box::new(UseLast::new()),
            Box::new(GiveLast::new()),
            Box::new(AutoPickup::new()),
            Box::new(DeathDrop::new()),
        ];
        if teams {
            modules.insert(0, Box::new(Teams::new(2)));
        }
        let agents = sim.add_group("agents", modules);
        sim.reset(0);
        Scene { sim, heals, agents }
    }

    fn ground(s: &Scene) -> usize {
        s.sim.group(s.heals).bodies().len()
    }

    #[test]
    fn pickup_on_touch_until_full() {
        let mut s = scene(false);
        let a = s.sim.spawn(s.agents, &[BodyDef::circle(0.4)]).unwrap()[0];
        for _ in 0..5 {
            drop_item(&mut s.sim, s.heals, ItemData::Heal, Vec2::new(0.3, 0.0)).unwrap();
        }
        s.sim.step().unwrap();
        let inv = s.sim.get_module::<Inventory>(s.agents).unwrap();
        assert_eq!(inv.items(a).len(), 4);
        assert_eq!(ground(&s), 1);
        assert_eq!(s.sim.get_module::<AutoPickup>(s.agents).unwrap().picked().len(), 4);
    }

    #[test]
    fn simultaneous_touch_goes_to_lower_index() {
        let mut s = scene(false);
        let hs = s
            .sim
            .spawn(
                s.agents,
                &[BodyDef::circle(0.4).at(Vec2::new(-0.5, 0.0)), BodyDef::circle(0.4).at(Vec2::new(0.5, 0.0))],
            )
            .unwrap();
        drop_item(&mut s.sim, s.heals, ItemData::Heal, Vec2::new(0.0, 0.0)).unwrap();
        s.sim.step().unwrap();
        let inv = s.sim.get_module::<Inventory>(s.agents).unwrap();
        assert_eq!(inv.items(hs[0]).len(), 1);
        assert_eq!(inv.items(hs[1]).len(), 0);
    }

    #[test]
    fn use_heals_holder() {
        let mut s = scene(false);
        let a = s.sim.spawn(s.agents, &[BodyDef::circle(0.4)]).unwrap()[0];
        drop_item(&mut s.sim, s.heals, ItemData::Heal, Vec2::zero()).unwrap();
        s.sim.step().unwrap();
        s.sim.get_module_mut::<Health>(s.agents).unwrap().set_health(a, 40).unwrap();
        s.sim.get_module_mut::<UseLast>(s.agents).unwrap().request(a);
        s.sim.step().unwrap();
        assert_eq!(s.sim.get_module::<Health>(s.agents).unwrap().health(a), Some(70));
        assert!(s.sim.get_module::<Inventory>(s.agents).unwrap().items(a).is_empty());
        // empty inventory: no-op
        s.sim.get_module_mut::<UseLast>(s.agents).unwrap().request(a);
        s.sim.step().unwrap();
        assert!(s.sim.get_module::<UseLast>(s.agents).unwrap().used().is_empty());
    }

    #[test]
    fn give_to_teammate_only() {
        let mut s = scene(true);
        // team 0: hs[0], hs[2]; team 1: hs[1]
        let hs = s
            .sim
            .spawn(
                s.agents,
                &[
                    BodyDef::circle(0.4),
                    BodyDef::circle(0.4).at(Vec2::new(0.9, 0.0)),
                    BodyDef::circle(0.4).at(Vec2::new(-5.0, 0.0)),
                ],
            )
            .unwrap();
        s.sim
            .get_module_mut::<Inventory>(s.agents)
            .unwrap()
            .push(hs[0], HeldItem { group: s.heals, data: ItemData::Heal })
            .unwrap();
        s.sim.get_module_mut::<GiveLast>(s.agents).unwrap().request(hs[0]);
        s.sim.step().unwrap();
        assert_eq!(s.sim.get_module::<Inventory>(s.agents).unwrap().items(hs[0]).len(), 1);

        s.sim.world_mut().set_position(hs[2], Vec2::new(0.0, -1.2)).unwrap();
        s.sim.get_module_mut::<GiveLast>(s.agents).unwrap().request(hs[0]);
        s.sim.step().unwrap();
        let inv = s.sim.get_module::<Inventory>(s.agents).unwrap();
        assert_eq!(inv.items(hs[0]).len(), 0);
        assert_eq!(inv.items(hs[2]).len(), 1);
        assert_eq!(s.sim.get_module::<GiveLast>(s.agents).unwrap().given()[0].receiver, hs[2]);
    }

    #[test]
    fn drop_last_lands_in_front() {
        let mut s = scene(false);
        let a = s.sim.spawn(s.agents, &[BodyDef::circle(0.4)]).unwrap()[0];
        s.sim
            .get_module_mut::<Inventory>(s.agents)
            .unwrap()
            .push(a, HeldItem { group: s.heals, data: ItemData::Heal })
            .unwrap();
        let item = drop_last(&mut s.sim, s.agents, a).unwrap().unwrap();
        assert_eq!(ground(&s), 1);
        assert!((s.sim.position(item).unwrap() - Vec2::new(0.7, 0.0)).length() < 1e-12);
    }

    #[test]
    fn death_drop_scatters_within_radius_and_room() {
        let mut s = scene(false);
        for k in 0..50u64 {
            s.sim.reset(k);
            let corner = Vec2::new(9.55, -9.55);
            let a = s.sim.spawn(s.agents, &[BodyDef::circle(0.4).at(corner)]).unwrap()[0];
            for _ in 0..3 {
                s.sim
                    .get_module_mut::<Inventory>(s.agents)
                    .unwrap()
                    .push(a, HeldItem { group: s.heals, data: ItemData::Heal })
                    .unwrap();
            }
            s.sim.despawn(s.agents, &[a]).unwrap();
            assert_eq!(ground(&s), 3);
            for &h in s.sim.group(s.heals).bodies() {
                let p = s.sim.position(h).unwrap();
                assert!(p.distance(corner) <= 1.0 + 1e-9);
                assert!(s.sim.room().contains_disk(p, 0.2));
            }
        }
    }
}
