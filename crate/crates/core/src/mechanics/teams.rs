use std::hash::Hasher;
use std::sync::{Arc, RwLock};

use crate::mechanics::health::{DamageCause, DamageKind};
use crate::physics::BodyHandle;
use crate::sim::{GroupId, SimModule, Simulation};

use super::TeamId;

/// Team membership shared between [`Teams`] and the damage filter it hands
/// to the group's health module.
#[derive(Debug, Default)]
pub struct TeamTable {
    members: Vec<(BodyHandle, TeamId)>,
}

impl TeamTable {
    pub fn team_of(&self, body: BodyHandle) -> Option<TeamId> {
        self.members.iter().find(|(b, _)| *b == body).map(|(_, t)| *t)
    }
}

pub type SharedTeams = Arc<RwLock<TeamTable>>;

/// Splits the agents of its group into `n` teams, assigning the k-th spawned
/// body to team `k % n`. Membership is fixed for the episode.
pub struct Teams {
    n: u32,
    table: SharedTeams,
}

impl Teams {
    pub fn new(n: u32) -> Self {
        assert!(n > 0, "at least one team");
        Self {
            n,
            table: SharedTeams::default(),
        }
    }

    pub fn count(&self) -> u32 {
        self.n
    }

    pub fn table(&self) -> SharedTeams {
        Arc::clone(&self.table)
    }

    pub fn team_of(&self, body: BodyHandle) -> Option<TeamId> {
        self.table.read().expect("team table lock").team_of(body)
    }

    /// Members of `team` in spawn order, dead ones included.
    pub fn members(&self, team: TeamId) -> Vec<BodyHandle> {
        let t = self.table.read().expect("team table lock");
        t.members.iter().filter(|(_, m)| *m == team).map(|(b, _)| *b).collect()
    }

    pub fn teammates(&self, body: BodyHandle) -> Vec<BodyHandle> {
        match self.team_of(body) {
            Some(team) => self.members(team).into_iter().filter(|b| *b != body).collect(),
            None => Vec::new(),
        }
    }

    pub fn opponents(&self, body: BodyHandle) -> Vec<BodyHandle> {
        let t = self.table.read().expect("team table lock");
        let own = t.team_of(body);
        t.members.iter().filter(|(_, m)| Some(*m) != own).map(|(b, _)| *b).collect()
    }

    pub fn same_team(&self, a: BodyHandle, b: BodyHandle) -> bool {
        let t = self.table.read().expect("team table lock");
        matches!((t.team_of(a), t.team_of(b)), (Some(x), Some(y)) if x == y)
    }

    /// Whether every member of `team` has left the group.
    pub fn team_dead(&self, sim: &Simulation, group: GroupId, team: TeamId) -> bool {
        self.members(team).iter().all(|b| !sim.group(group).contains(*b))
    }

    /// Melee damage filter making teammates immune to each other.
    pub fn friendly_fire_filter(&self) -> impl Fn(BodyHandle, &DamageCause) -> bool + Send + Sync + 'static {
        let table = self.table();
        move |target, cause| {
            if cause.kind != DamageKind::Melee {
                return false;
            }
            let t = table.read().expect("team table lock");
            let Some(target_team) = t.team_of(target) else {
                return false;
            };
            let attacker_team = cause.team.or_else(|| cause.attacker.and_then(|a| t.team_of(a)));
            attacker_team == Some(target_team)
        }
    }
}

impl SimModule for Teams {
    fn post_reset(&mut self, _: &mut Simulation, _: GroupId) {
        self.table.write().expect("team table lock").members.clear();
    }

    fn post_spawn(&mut self, _: &mut Simulation, _: GroupId, bodies: &[BodyHandle]) {
        let mut t = self.table.write().expect("team table lock");
        for &b in bodies {
            let team = TeamId(t.members.len() as u32 % self.n);
            t.members.push((b, team));
        }
    }

    fn hash_state(&self, state: &mut dyn Hasher) {
        for (_, team) in &self.table.read().expect("team table lock").members {
            state.write_u32(team.0);
        }
    }
}
