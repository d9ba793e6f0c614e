use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::{InventoryConfig, ObjectConfig};
use crate::mechanics::{HealthConfig, MeleeConfig, PlacerConfig, ZoneParams};
use crate::perception::{CameraConfig, MotorConfig};
use crate::sim::SimConfig;
use crate::Real;

/// Names of the shipped variants.
pub const PRESETS: [&str; 8] = ["ffa-1", "ffa-2", "ffa-3", "ffa-4", "2v2-1", "2v2-2", "2v2-3", "2v2-4"];

/// Grace steps after the zone closes before an episode is truncated.
pub const GRACE_STEPS: u64 = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Teaming {
    FreeForAll,
    TwoTeams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Competitiveness {
    Low,
    Medium,
    High,
    /// Rewards and termination set by hand.
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Done when no agent (team) is left.
    AllDead,
    /// Done when at most one agent (team) is left.
    LastAlive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub r_alive: Real,
    pub r_dead: Real,
    pub r_kill: Real,
    pub r_death: Real,
}

impl Competitiveness {
    /// Reward parameters and termination mode of a named level.
    pub fn bundle(self) -> Option<(RewardParams, Termination)> {
        let r = |r_alive, r_dead, r_kill, r_death| RewardParams {
            r_alive,
            r_dead,
            r_kill,
            r_death,
        };
        match self {
            Competitiveness::Low => Some((r(1.0, 0.0, 0.0, 0.0), Termination::AllDead)),
            Competitiveness::Medium => Some((r(1.0, -1.0, 0.0, 0.0), Termination::LastAlive)),
            Competitiveness::High => Some((r(1.0, -1.0, 100.0, -100.0), Termination::LastAlive)),
            Competitiveness::Custom => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub radius: Real,
    pub density: Real,
    pub health: HealthConfig,
    pub motors: MotorConfig,
    pub camera: CameraConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            radius: 0.4,
            density: 1.0,
            health: HealthConfig::default(),
            motors: MotorConfig::default(),
            camera: CameraConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItemConfig {
    /// Radius of item sensor bodies.
    pub radius: Real,
    pub heal_amount: i64,
    pub box_health: i64,
    /// Range of box half extents.
    pub box_min: Real,
    pub box_max: Real,
    pub objects: ObjectConfig,
}

impl Default for ItemConfig {
    fn default() -> Self {
        Self {
            radius: 0.2,
            heal_amount: 30,
            box_health: 40,
            box_min: 0.3,
            box_max: 0.8,
            objects: ObjectConfig::default(),
        }
    }
}

/// Complete definition of an environment variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantConfig {
    pub name: String,
    pub agents: usize,
    pub teaming: Teaming,
    pub competitiveness: Competitiveness,
    pub termination: Termination,
    pub heals: usize,
    /// 0 removes boxes from the variant.
    pub boxes: usize,
    pub max_steps: u64,
    pub rewards: RewardParams,
    pub agent: AgentConfig,
    pub melee: MeleeConfig,
    pub zone: ZoneParams,
    pub inventory: InventoryConfig,
    pub items: ItemConfig,
    pub spawn: PlacerConfig,
    pub sim: SimConfig,
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self::preset("ffa-1").expect("built-in preset")
    }
}

impl VariantConfig {
    fn base(name: &str, agents: usize, teaming: Teaming, level: Competitiveness, heals: usize, boxes: usize) -> Self {
        let (rewards, termination) = level.bundle().expect("named level");
        let zone = ZoneParams::default();
        Self {
            name: name.to_string(),
            agents,
            teaming,
            competitiveness: level,
            termination,
            heals,
            boxes,
            max_steps: zone.schedule_steps() + GRACE_STEPS,
            rewards,
            agent: AgentConfig::default(),
            melee: MeleeConfig::default(),
            zone,
            inventory: InventoryConfig::default(),
            items: ItemConfig::default(),
            spawn: PlacerConfig::default(),
            sim: SimConfig::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        use Competitiveness::*;
        use Teaming::*;
        let (teaming, level, boxes) = match name {
            "ffa-1" => (FreeForAll, Low, false),
            "ffa-2" => (FreeForAll, Medium, false),
            "ffa-3" => (FreeForAll, Medium, true),
            "ffa-4" => (FreeForAll, High, true),
            "2v2-1" => (TwoTeams, Low, true),
            "2v2-2" => (TwoTeams, Medium, false),
            "2v2-3" => (TwoTeams, Medium, true),
            "2v2-4" => (TwoTeams, High, true),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}` (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        };
        let (agents, heals, box_count) = match teaming {
            FreeForAll => (2, 4, 4),
            TwoTeams => (4, 8, 6),
        };
        Ok(Self::base(name, agents, teaming, level, heals, if boxes { box_count } else { 0 }))
    }

    /// Feature configuration used for scaling benchmarks.
    pub fn custom(agents: usize, heals: usize, boxes: usize) -> Self {
        let mut c = Self::base("custom", agents, Teaming::FreeForAll, Competitiveness::Low, heals, boxes);
        c.name = format!("{agents}-agents-{heals}-heals-{boxes}-boxes");
        c
    }

    pub fn n_teams(&self) -> u32 {
        match self.teaming {
            Teaming::FreeForAll => 1,
            Teaming::TwoTeams => 2,
        }
    }

    pub fn teams(&self) -> bool {
        self.teaming == Teaming::TwoTeams
    }

    // Negated comparisons so NaN fails.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.agents == 0 {
            return bad("at least one agent is required".into());
        }
        if self.teams() && self.agents < 2 {
            return bad("two-teams mode needs at least two agents".into());
        }
        if !(self.agent.radius > 0.0) || !(self.agent.density > 0.0) {
            return bad("agent radius and density must be positive".into());
        }
        if !(self.items.radius > 0.0) {
            return bad("item radius must be positive".into());
        }
        if !(0.0 < self.items.box_min && self.items.box_min <= self.items.box_max) {
            return bad("box extents must satisfy 0 < box_min <= box_max".into());
        }
        if self.items.heal_amount <= 0 || self.items.box_health <= 0 || self.agent.health.initial <= 0 {
            return bad("health and heal amounts must be positive".into());
        }
        if self.melee.damage <= 0 || !(self.melee.length > 0.0) {
            return bad("melee damage and length must be positive".into());
        }
        if self.inventory.capacity == 0 {
            return bad("inventory capacity must be positive".into());
        }
        if !(self.sim.dt > 0.0) || self.sim.substeps == 0 {
            return bad("dt must be positive and substeps at least 1".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if ![self.rewards.r_alive, self.rewards.r_dead, self.rewards.r_kill, self.rewards.r_death]
            .iter()
            .all(|r| r.is_finite())
        {
            return bad("reward parameters must be finite".into());
        }
        self.zone.validate(self.sim.room.half_extent)?;
        let cells = ((2.0 * self.spawn.half_extent) / self.spawn.cell_size).floor().max(1.0) as usize;
        let cells = cells * cells;
        let needed = self.agents + self.heals + self.boxes;
        if needed > cells {
            return Err(Error::NotEnoughCells {
                requested: needed,
                free: cells,
            });
        }
        Ok(())
    }

    /// Canonical text form, used in replay headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Parses a config file. A top-level `preset = "<name>"` key selects the
    /// starting variant; every other key overrides it field by field.
    /// Overriding `competitiveness` alone also applies its reward and
    /// termination bundle.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut overrides: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let preset = match overrides.remove("preset") {
            Some(toml::Value::String(p)) => p,
            Some(_) => return Err(Error::Config("`preset` must be a string".into())),
            None => "ffa-1".to_string(),
        };
        let mut base = Self::preset(&preset)?;
        if let Some(level) = overrides.get("competitiveness") {
            let level: Competitiveness = level
                .clone()
                .try_into()
                .map_err(|e| Error::Config(format!("competitiveness: {e}")))?;
            if let Some((rewards, termination)) = level.bundle() {
                base.competitiveness = level;
                base.rewards = rewards;
                base.termination = termination;
            }
        }
        let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Config(format!("{e}")))?;
        merge(&mut merged, overrides);
        let config: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e| Error::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

fn merge(base: &mut toml::Table, overrides: toml::Table) {
    for (k, v) in overrides {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_competitiveness_levels() {
        for name in PRESETS {
            let c = VariantConfig::preset(name).unwrap();
            c.validate().unwrap();
            let r = c.rewards;
            let tuple = (r.r_alive, r.r_dead, r.r_kill, r.r_death);
            match c.competitiveness {
                Competitiveness::Low => {
                    assert_eq!(tuple, (1.0, 0.0, 0.0, 0.0));
                    assert_eq!(c.termination, Termination::AllDead);
                }
                Competitiveness::Medium => {
                    assert_eq!(tuple, (1.0, -1.0, 0.0, 0.0));
                    assert_eq!(c.termination, Termination::LastAlive);
                }
                Competitiveness::High => {
                    assert_eq!(tuple, (1.0, -1.0, 100.0, -100.0));
                    assert_eq!(c.termination, Termination::LastAlive);
                }
                Competitiveness::Custom => unreachable!(),
            }
            assert_eq!(c.max_steps, 3000);
        }
        assert_eq!(VariantConfig::preset("ffa-1").unwrap().boxes, 0);
        assert_eq!(VariantConfig::preset("2v2-2").unwrap().boxes, 0);
        assert!(VariantConfig::preset("2v2-1").unwrap().boxes > 0);
        assert_eq!(VariantConfig::preset("2v2-3").unwrap().agents, 4);
        assert!(VariantConfig::preset("nonsense").is_err());
    }

    #[test]
    fn toml_round_trip() {
        for name in PRESETS {
            let c = VariantConfig::preset(name).unwrap();
            let text = c.to_toml();
            let back: VariantConfig = toml::from_str(&text).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn overrides_apply_on_top_of_preset() {
        let c = VariantConfig::from_toml(
            r#"
            preset = "2v2-3"
            heals = 2
            [melee]
            damage = 35
            "#,
        )
        .unwrap();
        assert_eq!(c.heals, 2);
        assert_eq!(c.melee.damage, 35);
        assert_eq!(c.melee.cooldown, 10);
        assert_eq!(c.agents, 4);

        let c = VariantConfig::from_toml("preset = \"ffa-1\"\ncompetitiveness = \"high\"").unwrap();
        assert_eq!(c.rewards.r_kill, 100.0);
        assert_eq!(c.termination, Termination::LastAlive);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(VariantConfig::from_toml("preset = \"ffa-1\"\nagents = 0").is_err());
        assert!(VariantConfig::from_toml("preset = \"ffa-1\"\nbogus = 1").is_err());
        assert!(VariantConfig::from_toml("preset = \"zzz\"").is_err());
        assert!(matches!(
            VariantConfig::from_toml("agents = 60\nheals = 10"),
            Err(Error::NotEnoughCells { .. })
        ));
    }
}
