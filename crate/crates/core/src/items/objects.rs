use std::collections::VecDeque;
use std::hash::Hasher;
use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Shape, Transform, WorldShape};
use crate::items::{drop_item, item_callbacks, ItemData, ItemKind, ItemModule, ItemStore, BoxSpec, Owner};
use crate::mechanics::{place_spawns, DamageCause, DamageKind, Health, SharedPlacer};
use crate::physics::{shapes_overlap, BodyDef, BodyHandle};
use crate::sim::{GroupId, SimModule, Simulation};
use crate::{Real, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectConfig {
    pub density: Real,
    /// Once broken, only the breaker may break a box again.
    pub owned: bool,
}

impl Default for ObjectConfig {
    fn default() -> Self {
        Self {
            density: 2.0,
            owned: true,
        }
    }
}

type SharedSpecs = Arc<Mutex<Vec<(BodyHandle, BoxSpec)>>>;

fn owner_matches(owner: Owner, cause: &DamageCause) -> bool {
    match owner {
        Owner::Agent(i) => cause.attacker_index == Some(i),
        Owner::Team(t) => cause.team == Some(t),
    }
}

fn breaker(cause: &DamageCause) -> Option<Owner> {
    if cause.kind != DamageKind::Melee {
        return None;
    }
    cause.team.map(Owner::Team).or(cause.attacker_index.map(Owner::Agent))
}

/// Intact boxes. Remembers the spec of every box and, when one is about to
/// despawn, spawns a box item carrying that spec in the item group.
pub struct Object {
    pub config: ObjectConfig,
    item_group: String,
    pending: VecDeque<BoxSpec>,
    specs: SharedSpecs,
}

impl Object {
    pub fn new(config: ObjectConfig, item_group: impl Into<String>) -> Self {
        Self {
            config,
            item_group: item_group.into(),
            pending: VecDeque::new(),
            specs: SharedSpecs::default(),
        }
    }

    /// Next spawned box takes this spec.
    pub fn queue_spec(&mut self, spec: BoxSpec) {
        self.pending.push_back(spec);
    }

    pub fn spec(&self, body: BodyHandle) -> Option<BoxSpec> {
        let specs = self.specs.lock().expect("spec lock");
        specs.iter().find(|(b, _)| *b == body).map(|(_, s)| s.clone())
    }

    pub fn box_def(&self, spec: &BoxSpec, at: Vec2, angle: Real) -> BodyDef<Real> {
        BodyDef::new(Shape::rect(spec.half_w, spec.half_h))
            .at(at)
            .with_angle(angle)
            .with_density(self.config.density)
    }

    /// Damage filter for the group's health: owned boxes ignore melee from
    /// anyone but their owner.
    pub fn ownership_filter(&self) -> impl Fn(BodyHandle, &DamageCause) -> bool + Send + Sync + 'static {
        let specs = Arc::clone(&self.specs);
        let owned = self.config.owned;
        move |target, cause| {
            if !owned || cause.kind != DamageKind::Melee {
                return false;
            }
            let specs = specs.lock().expect("spec lock");
            match specs.iter().find(|(b, _)| *b == target).and_then(|(_, s)| s.owner) {
                Some(owner) => !owner_matches(owner, cause),
                None => false,
            }
        }
    }
}

fn spec_from_shape(shape: &Shape<Real>) -> BoxSpec {
    match shape {
        Shape::Polygon { vertices } => {
            let w = vertices.iter().fold(0.0, |m: Real, v| m.max(v.x.abs()));
            let h = vertices.iter().fold(0.0, |m: Real, v| m.max(v.y.abs()));
            BoxSpec::new(w, h)
        }
        Shape::Circle { radius } => BoxSpec::new(*radius, *radius),
    }
}

impl SimModule for Object {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.pending.clear();
        self.specs.lock().expect("spec lock").clear();
    }

    fn post_spawn(&mut self, sim: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        let mut specs = self.specs.lock().expect("spec lock");
        for &b in bodies {
            let spec = self
                .pending
                .pop_front()
                .unwrap_or_else(|| spec_from_shape(sim.world().shape(b).expect("spawned body")));
            specs.push((b, spec));
        }
    }

    fn pre_despawn(&mut self, sim: &mut Simulation, group: GroupId, bodies: &[BodyHandle]) {
        let item_group = sim.group_by_name(&self.item_group).expect("box item group exists");
        for &b in bodies {
            let Some(mut spec) = self.spec(b) else { continue };
            let cause = sim.get_module::<Health>(group).ok().and_then(|h| h.cause_of_death(b).cloned());
            spec.owner = if self.config.owned {
                spec.owner.or_else(|| cause.as_ref().and_then(breaker))
            } else {
                None
            };
            let at = sim.position(b).expect("despawning body still exists");
            drop_item(sim, item_group, ItemData::Box(spec), at).expect("box item spawns");
        }
        self.specs.lock().expect("spec lock").retain(|(b, _)| !bodies.contains(b));
    }

    fn hash_state(&self, state: &mut dyn Hasher) {
        for (_, s) in self.specs.lock().expect("spec lock").iter() {
            state.write_u64(s.half_w.to_bits());
            state.write_u64(s.half_h.to_bits());
            match s.owner {
                None => state.write_u8(0),
                Some(Owner::Agent(i)) => state.write_usize(i + 1),
                Some(Owner::Team(t)) => state.write_u32(t.0 + 1000),
            }
        }
    }
}

/// Box items. Using one places the recorded box at the user's position and
/// orientation, unless it would overlap another agent or box.
pub struct ObjectItem {
    object_group: String,
    store: ItemStore,
}

impl ObjectItem {
    pub fn new(object_group: impl Into<String>, radius: Real) -> Self {
        Self {
            object_group: object_group.into(),
            store: ItemStore::new(radius, None),
        }
    }
}

impl ItemModule for ObjectItem {
    fn kind(&self) -> ItemKind {
        ItemKind::Box
    }

    fn store(&self) -> &ItemStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ItemStore {
        &mut self.store
    }

    fn use_item(&mut self, sim: &mut Simulation, user: BodyHandle, data: &ItemData) -> Result<bool> {
        let ItemData::Box(spec) = data else {
            return Err(Error::InvalidControl("box item without box payload".into()));
        };
        let boxes = sim
            .group_by_name(&self.object_group)
            .ok_or_else(|| Error::Config(format!("no group named `{}`", self.object_group)))?;
        let user_group = sim.group_of(user).ok_or(Error::UnknownBody(user))?;
        let at = sim.position(user)?;
        let angle = sim.world().angle(user)?;
        let candidate = WorldShape::place(&Shape::rect(spec.half_w, spec.half_h), &Transform::new(at, angle));
        let blockers = sim
            .group(user_group)
            .bodies()
            .iter()
            .chain(sim.group(boxes).bodies())
            .filter(|&&b| b != user);
        for &b in blockers {
            if shapes_overlap(&candidate, &sim.world().world_shape(b)?) {
                return Ok(false);
            }
        }
        let object = sim.get_module_mut::<Object>(boxes)?;
        let def = object.box_def(spec, at, angle);
        object.queue_spec(spec.clone());
        sim.spawn(boxes, &[def])?;
        Ok(true)
    }
}

impl SimModule for ObjectItem {
    item_callbacks!();
}

/// `count` box specs with both half extents uniform in `range`.
pub fn randomize_box_shapes<R: Rng + ?Sized>(rng: &mut R, count: usize, range: (Real, Real)) -> Vec<BoxSpec> {
    (0..count)
        .map(|_| BoxSpec::new(rng.gen_range(range.0..=range.1), rng.gen_range(range.0..=range.1)))
        .collect()
}

/// Spawns the episode's boxes with random dimensions at placer positions.
pub struct RandomizedBoxShapes {
    placer: SharedPlacer,
    count: usize,
    range: (Real, Real),
}

impl RandomizedBoxShapes {
    pub fn new(placer: SharedPlacer, count: usize, range: (Real, Real)) -> Self {
        assert!(0.0 < range.0 && range.0 <= range.1, "box range must be positive and ordered");
        Self { placer, count, range }
    }
}

impl SimModule for RandomizedBoxShapes {
    fn populate(&mut self, sim: &mut Simulation, group: GroupId) {
        let specs = randomize_box_shapes(sim.rng(), self.count, self.range);
        let points = place_spawns(sim, &self.placer, self.count).expect("spawn region has room for every box");
        let mut defs = Vec::with_capacity(self.count);
        for (spec, p) in specs.into_iter().zip(points) {
            let angle = sim.rng().gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let object = sim.get_module_mut::<Object>(group).expect("boxes group has an Object module");
            defs.push(object.box_def(&spec, p, angle));
            object.queue_spec(spec);
        }
        sim.spawn(group, &defs).expect("box definitions are valid");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::items::{Inventory, InventoryConfig, UseLast, AutoPickup, HeldItem};
    use crate::mechanics::{damage, HealthConfig, TeamId};
    use crate::perception::IndexBodies;
    use crate::sim::SimConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Scene {
        sim: Simulation,
        boxes: GroupId,
        items: GroupId,
        agents: GroupId,
    }

    fn scene(owned: bool) -> Scene {
        let mut sim = Simulation::new(SimConfig::default());
        let object = Object::new(ObjectConfig { owned, ..Default::default() }, "boxitems");
        let filter = object.ownership_filter();
        let boxes = sim.add_group(
            "boxes",
            vec![
                Box::new(Health::new(HealthConfig { initial: 40, max: None }).with_filter(filter)),
                Box::new(object),
            ],
        );
        let items = sim.add_group("boxitems", vec![Box::new(ObjectItem::new("boxes", 0.2))]);
        let agents = sim.add_group(
            "agents",
            vec![
                Box::new(IndexBodies::new()),
                Box::new(Health::new(HealthConfig::default())),
                Box::new(Inventory::new(InventoryConfig::default())),
                Box::new(UseLast::new()),
                Box::new(AutoPickup::new()),
            ],
        );
        sim.reset(0);
        Scene { sim, boxes, items, agents }
    }

    fn spawn_box(s: &mut Scene, spec: BoxSpec, at: Vec2) -> BodyHandle {
        let object = s.sim.get_module_mut::<Object>(s.boxes).unwrap();
        let def = object.box_def(&spec, at, 0.0);
        object.queue_spec(spec);
        s.sim.spawn(s.boxes, &[def]).unwrap()[0]
    }

    fn hit(agent_index: usize) -> DamageCause {
        DamageCause::melee(BodyHandle::default(), Some(agent_index), None)
    }

    #[test]
    fn break_round_trip_is_bit_exact() {
        let mut s = scene(true);
        let spec = BoxSpec::new(0.6123456789, 0.9000000001);
        let b = spawn_box(&mut s, spec.clone(), Vec2::new(3.0, 3.0));
        damage(&mut s.sim, b, 40, hit(2)).unwrap();
        s.sim.step().unwrap();
        assert!(s.sim.group(s.boxes).bodies().is_empty());
        let item = s.sim.group(s.items).bodies()[0];
        let payload = s.sim.get_module::<ObjectItem>(s.items).unwrap().store().payload(item).cloned().unwrap();
        let ItemData::Box(dropped) = payload.clone() else { panic!() };
        assert_eq!((dropped.half_w, dropped.half_h), (spec.half_w, spec.half_h));
        assert_eq!(dropped.owner, Some(Owner::Agent(2)));

        let a = s.sim.spawn(s.agents, &[BodyDef::circle(0.4).at(Vec2::new(-4.0, -4.0))]).unwrap()[0];
        s.sim
            .get_module_mut::<Inventory>(s.agents)
            .unwrap()
            .push(a, HeldItem { group: s.items, data: payload })
            .unwrap();
        s.sim.get_module_mut::<UseLast>(s.agents).unwrap().request(a);
        s.sim.step().unwrap();
        let placed = s.sim.group(s.boxes).bodies()[0];
        let respawned = s.sim.get_module::<Object>(s.boxes).unwrap().spec(placed).unwrap();
        assert_eq!(respawned, dropped);
    }

    #[test]
    fn owned_box_ignores_other_attackers() {
        let mut s = scene(true);
        let mut spec = BoxSpec::new(0.5, 0.5);
        spec.owner = Some(Owner::Agent(2));
        let b = spawn_box(&mut s, spec, Vec2::zero());
        assert!(!damage(&mut s.sim, b, 20, hit(3)).unwrap());
        assert!(damage(&mut s.sim, b, 20, hit(2)).unwrap());
        assert!(damage(&mut s.sim, b, 1, DamageCause::zone()).unwrap());

        let mut team_spec = BoxSpec::new(0.5, 0.5);
        team_spec.owner = Some(Owner::Team(TeamId(1)));
        let t = spawn_box(&mut s, team_spec, Vec2::new(4.0, 0.0));
        let teammate = DamageCause::melee(BodyHandle::default(), Some(3), Some(TeamId(1)));
        let opponent = DamageCause::melee(BodyHandle::default(), Some(2), Some(TeamId(0)));
        assert!(!damage(&mut s.sim, t, 20, opponent).unwrap());
        assert!(damage(&mut s.sim, t, 20, teammate).unwrap());
    }

    #[test]
    fn unowned_variant_never_records_owner() {
        let mut s = scene(false);
        let b = spawn_box(&mut s, BoxSpec::new(0.5, 0.5), Vec2::zero());
        damage(&mut s.sim, b, 40, hit(1)).unwrap();
        s.sim.step().unwrap();
        let item = s.sim.group(s.items).bodies()[0];
        let payload = s.sim.get_module::<ObjectItem>(s.items).unwrap().store().payload(item).cloned();
        assert!(matches!(payload, Some(ItemData::Box(BoxSpec { owner: None, .. }))));
    }

    #[test]
    fn placement_blocked_by_other_agent() {
        let mut s = scene(true);
        let hs = s
            .sim
            .spawn(s.agents, &[BodyDef::circle(0.4), BodyDef::circle(0.4).at(Vec2::new(1.0, 0.0))])
            .unwrap();
        let data = ItemData::Box(BoxSpec::new(0.8, 0.8));
        s.sim
            .get_module_mut::<Inventory>(s.agents)
            .unwrap()
            .push(hs[0], HeldItem { group: s.items, data })
            .unwrap();
        s.sim.get_module_mut::<UseLast>(s.agents).unwrap().request(hs[0]);
        s.sim.step().unwrap();
        assert!(s.sim.group(s.boxes).bodies().is_empty());
        assert_eq!(s.sim.get_module::<Inventory>(s.agents).unwrap().items(hs[0]).len(), 1);
    }

    #[test]
    fn randomized_specs_in_range_and_deterministic() {
        let a = randomize_box_shapes(&mut ChaCha8Rng::seed_from_u64(4), 10, (0.3, 0.8));
        let b = randomize_box_shapes(&mut ChaCha8Rng::seed_from_u64(4), 10, (0.3, 0.8));
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.iter().all(|s| (0.3..=0.8).contains(&s.half_w) && (0.3..=0.8).contains(&s.half_h)));
        assert!(randomize_box_shapes(&mut ChaCha8Rng::seed_from_u64(4), 0, (0.3, 0.8)).is_empty());
    }
}
