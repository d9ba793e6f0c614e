//! Agent-facing gameplay: health, safe zone, melee, teams and spawning.

pub mod health;
pub mod melee;
pub mod spawn;
pub mod teams;
pub mod zone;

pub use health::{damage, heal, DamageCause, DamageEvent, DamageFilter, DamageKind, HealEvent, Health, HealthConfig, TeamId};
pub use melee::{melee_segment, Melee, MeleeConfig, MeleeHit};
pub use spawn::{place_spawns, PlacerConfig, ResetSpawns, SharedPlacer, SpawnPlacer};
pub use teams::{SharedTeams, TeamTable, Teams};
pub use zone::{SafeZone, ZoneCircle, ZoneParams, ZonePhase, ZoneSchedule, ZoneState};
