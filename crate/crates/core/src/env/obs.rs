use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::env::config::VariantConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntityType {
    Other,
    Heal,
    Box,
    BoxItem,
    HealSlot,
    BoxSlot,
}

impl EntityType {
    /// Flattening order.
    pub const ALL: [EntityType; 6] = [
        EntityType::Other,
        EntityType::Heal,
        EntityType::Box,
        EntityType::BoxItem,
        EntityType::HealSlot,
        EntityType::BoxSlot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityType::Other => "other",
            EntityType::Heal => "heal",
            EntityType::Box => "box",
            EntityType::BoxItem => "boxitem",
            EntityType::HealSlot => "healslot",
            EntityType::BoxSlot => "boxslot",
        }
    }
}

pub const ZONE_WIDTH: usize = 6;
pub const HEAL_WIDTH: usize = 2;
pub const BOX_WIDTH: usize = 11;
pub const BOXITEM_WIDTH: usize = 10;

/// Rows of one entity type plus the visibility mask.
#[derive(Clone, Debug, PartialEq)]
pub struct EntityBlock {
    pub width: usize,
    /// Row-major, `mask.len() * width` values.
    pub rows: Vec<f64>,
    pub mask: Vec<u8>,
}

impl EntityBlock {
    pub fn zeros(rows: usize, width: usize) -> Self {
        Self {
            width,
            rows: vec![0.0; rows * width],
            mask: vec![0; rows],
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.width..(i + 1) * self.width]
    }

    /// Writes row `i` and marks it visible.
    pub fn set_row(&mut self, i: usize, values: &[f64]) {
        assert_eq!(values.len(), self.width, "row width");
        self.rows[i * self.width..(i + 1) * self.width].copy_from_slice(values);
        self.mask[i] = 1;
    }
}

/// Observation of one agent: `x_self`, `x_zone` and one block per entity
/// type in [`EntityType::ALL`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentObservation {
    pub x_self: Vec<f64>,
    pub x_zone: [f64; ZONE_WIDTH],
    pub entities: Vec<EntityBlock>,
}

impl AgentObservation {
    pub fn zeros(layout: &Layout) -> Self {
        Self {
            x_self: vec![0.0; layout.self_width],
            x_zone: [0.0; ZONE_WIDTH],
            entities: layout.blocks.iter().map(|b| EntityBlock::zeros(b.rows, b.width)).collect(),
        }
    }

    pub fn block(&self, t: EntityType) -> &EntityBlock {
        &self.entities[t as usize]
    }

    pub fn block_mut(&mut self, t: EntityType) -> &mut EntityBlock {
        &mut self.entities[t as usize]
    }

    /// Values in layout order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        self.flatten_into(&mut out);
        out
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.x_self);
        out.extend_from_slice(&self.x_zone);
        for b in &self.entities {
            out.extend_from_slice(&b.rows);
            out.extend(b.mask.iter().map(|&m| m as f64));
        }
    }

    fn flat_len(&self) -> usize {
        self.x_self.len() + ZONE_WIDTH + self.entities.iter().map(|b| b.rows.len() + b.mask.len()).sum::<usize>()
    }

    pub fn unflatten(flat: &[f64], layout: &Layout) -> Result<Self> {
        if flat.len() != layout.len {
            return Err(Error::MalformedAction(format!(
                "flat observation has {} values, layout expects {}",
                flat.len(),
                layout.len
            )));
        }
        let mut obs = Self::zeros(layout);
        obs.x_self.copy_from_slice(&flat[..layout.self_width]);
        obs.x_zone.copy_from_slice(&flat[layout.zone_offset..layout.zone_offset + ZONE_WIDTH]);
        for (b, spec) in obs.entities.iter_mut().zip(&layout.blocks) {
            b.rows
                .copy_from_slice(&flat[spec.offset..spec.offset + spec.rows * spec.width]);
            for (m, v) in b.mask.iter_mut().zip(&flat[spec.mask_offset..spec.mask_offset + spec.rows]) {
                *m = (*v != 0.0) as u8;
            }
        }
        Ok(obs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub entity: EntityType,
    pub name: String,
    pub rows: usize,
    pub width: usize,
    /// Offset of the first row value.
    pub offset: usize,
    pub mask_offset: usize,
}

/// Offsets and shapes of the flat observation vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub self_width: usize,
    pub zone_offset: usize,
    pub blocks: Vec<BlockLayout>,
    pub len: usize,
    /// Action sizes per component, (a_x, a_y, a_θ, a_atk, a_use, a_give).
    pub action_sizes: [usize; 6],
}

impl Layout {
    pub fn for_variant(config: &VariantConfig) -> Self {
        let self_width = if config.teams() { 9 } else { 8 };
        let counts = [
            (EntityType::Other, config.agents - 1, self_width),
            (EntityType::Heal, config.heals, HEAL_WIDTH),
            (EntityType::Box, config.boxes, BOX_WIDTH),
            (EntityType::BoxItem, config.boxes, BOXITEM_WIDTH),
            (EntityType::HealSlot, 1, HEAL_WIDTH),
            (EntityType::BoxSlot, 1, BOXITEM_WIDTH),
        ];
        let zone_offset = self_width;
        let mut offset = zone_offset + ZONE_WIDTH;
        let mut blocks = Vec::with_capacity(counts.len());
        for (entity, rows, width) in counts {
            let mask_offset = offset + rows * width;
            blocks.push(BlockLayout {
                entity,
                name: entity.name().to_string(),
                rows,
                width,
                offset,
                mask_offset,
            });
            offset = mask_offset + rows;
        }
        Self {
            self_width,
            zone_offset,
            blocks,
            len: offset,
            action_sizes: [3, 3, 3, 2, 2, 2],
        }
    }

    pub fn block(&self, t: EntityType) -> &BlockLayout {
        &self.blocks[t as usize]
    }

    /// One `name offset rows width mask_offset` line per block.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "x_self offset=0 width={}\nx_zone offset={} width={}\n",
            self.self_width, self.zone_offset, ZONE_WIDTH
        );
        for b in &self.blocks {
            s.push_str(&format!(
                "{} offset={} rows={} width={} mask_offset={}\n",
                b.name, b.offset, b.rows, b.width, b.mask_offset
            ));
        }
        s.push_str(&format!("total={}\n", self.len));
        s
    }
}
