//! Items: intangible sensor bodies carrying a payload, consumed through the
//! [`ItemModule`] contract. Inventories and breakable boxes live in the
//! submodules.

use std::collections::VecDeque;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mechanics::{heal, TeamId};
use crate::physics::{BodyDef, BodyHandle};
use crate::sim::{GroupId, SimModule, Simulation};
use crate::{Real, Vec2};

pub mod inventory;
pub mod objects;

pub use inventory::{
    AutoPickup, DeathDrop, GiveEvent, GiveLast, HeldItem, Inventory, InventoryConfig, Pickup, UseEvent, UseLast,
};
pub use objects::{randomize_box_shapes, Object, ObjectConfig, ObjectItem, RandomizedBoxShapes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ItemKind {
    Heal,
    Box,
}

/// Entity allowed to break an owned box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    /// Agent by body index.
    Agent(usize),
    Team(TeamId),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub half_w: Real,
    pub half_h: Real,
    pub owner: Option<Owner>,
}

impl BoxSpec {
    pub fn new(half_w: Real, half_h: Real) -> Self {
        Self {
            half_w,
            half_h,
            owner: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ItemData {
    Heal,
    Box(BoxSpec),
}

impl ItemData {
    pub fn kind(&self) -> ItemKind {
        match self {
            ItemData::Heal => ItemKind::Heal,
            ItemData::Box(_) => ItemKind::Box,
        }
    }
}

/// Payload bookkeeping shared by every item module. Bodies spawned in the
/// group take the next pending payload, or the default one.
#[derive(Debug)]
pub struct ItemStore {
    pub radius: Real,
    default: Option<ItemData>,
    pending: VecDeque<ItemData>,
    payloads: Vec<(BodyHandle, ItemData)>,
}

impl ItemStore {
    pub fn new(radius: Real, default: Option<ItemData>) -> Self {
        Self {
            radius,
            default,
            pending: VecDeque::new(),
            payloads: Vec::new(),
        }
    }

    pub fn payload(&self, item: BodyHandle) -> Option<&ItemData> {
        self.payloads.iter().find(|(b, _)| *b == item).map(|(_, d)| d)
    }

    /// Ground items in spawn order with their payloads.
    pub fn items(&self) -> &[(BodyHandle, ItemData)] {
        &self.payloads
    }

    pub fn push_pending(&mut self, data: ItemData) {
        self.pending.push_back(data);
    }

    fn reset(&mut self) {
        self.pending.clear();
        self.payloads.clear();
    }

    fn spawned(&mut self, bodies: &[BodyHandle]) {
        for &b in bodies {
            let data = self
                .pending
                .pop_front()
                .or_else(|| self.default.clone())
                .expect("item spawned without a payload");
            self.payloads.push((b, data));
        }
    }

    fn despawning(&mut self, bodies: &[BodyHandle]) {
        self.payloads.retain(|(b, _)| !bodies.contains(b));
    }

    fn hash(&self, state: &mut dyn Hasher) {
        for (_, d) in &self.payloads {
            match d {
                ItemData::Heal => state.write_u8(0),
                ItemData::Box(spec) => {
                    state.write_u8(1);
                    state.write_u64(spec.half_w.to_bits());
                    state.write_u64(spec.half_h.to_bits());
                }
            }
        }
    }
}

/// The item contract. `use_item` returns `false` when the use failed and the
/// item must stay with its holder.
pub trait ItemModule {
    fn kind(&self) -> ItemKind;
    fn store(&self) -> &ItemStore;
    fn store_mut(&mut self) -> &mut ItemStore;
    fn use_item(&mut self, sim: &mut Simulation, user: BodyHandle, data: &ItemData) -> Result<bool>;
}

pub fn item_def(radius: Real, at: Vec2) -> BodyDef<Real> {
    BodyDef::circle(radius).sensor().fixed().at(at)
}

/// Spawns an item carrying `data` in `group` at `at`, clamped inside the room.
pub fn drop_item(sim: &mut Simulation, group: GroupId, data: ItemData, at: Vec2) -> Result<BodyHandle> {
    let radius = sim.with_item_module(group, |m, _| {
        m.store_mut().push_pending(data);
        m.store().radius
    })?;
    let at = sim.room().clamp_inside(at, radius);
    Ok(sim.spawn(group, &[item_def(radius, at)])?[0])
}

/// Implements the item-store callbacks of a module holding an `ItemStore`
/// in field `store`.
macro_rules! item_callbacks {
    () => {
        fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
            self.store.reset();
        }

        fn post_spawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
            self.store.spawned(bodies);
        }

        fn pre_despawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
            self.store.despawning(bodies);
        }

        fn as_item(&mut self) -> Option<&mut dyn ItemModule> {
            Some(self)
        }

        fn hash_state(&self, state: &mut dyn Hasher) {
            self.store.hash(state);
        }
    };
}
pub(crate) use item_callbacks;

/// Heal item: using it adds `amount` health to the user.
pub struct Heal {
    pub amount: i64,
    store: ItemStore,
}

impl Heal {
    pub fn new(amount: i64, radius: Real) -> Self {
        Self {
            amount,
            store: ItemStore::new(radius, Some(ItemData::Heal)),
        }
    }
}

impl ItemModule for Heal {
    fn kind(&self) -> ItemKind {
        ItemKind::Heal
    }

    fn store(&self) -> &ItemStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ItemStore {
        &mut self.store
    }

    fn use_item(&mut self, sim: &mut Simulation, user: BodyHandle, _: &ItemData) -> Result<bool> {
        heal(sim, user, self.amount)?;
        Ok(true)
    }
}

impl SimModule for Heal {
    item_callbacks!();
}
