use std::sync::{Arc, Mutex};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{BodyDef, BodyHandle};
use crate::sim::{GroupId, SimModule, Simulation};
use crate::{Real, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlacerConfig {
    /// Half side of the square spawn region, centered on the origin.
    pub half_extent: Real,
    pub cell_size: Real,
    /// Maximum offset from the cell center along each axis.
    pub jitter: Real,
}

impl Default for PlacerConfig {
    fn default() -> Self {
        Self {
            half_extent: 10.0,
            cell_size: 2.5,
            jitter: 0.25,
        }
    }
}

/// Grid placer handing out random unused cells. One placer may be shared by
/// several groups so their bodies never share a cell.
#[derive(Debug)]
pub struct SpawnPlacer {
    config: PlacerConfig,
    per_side: usize,
    used: Vec<bool>,
    epoch: u64,
}

pub type SharedPlacer = Arc<Mutex<SpawnPlacer>>;

impl SpawnPlacer {
    pub fn new(config: PlacerConfig) -> Self {
        let per_side = ((2.0 * config.half_extent) / config.cell_size).floor().max(1.0) as usize;
        Self {
            config,
            per_side,
            used: vec![false; per_side * per_side],
            epoch: 0,
        }
    }

    pub fn shared(config: PlacerConfig) -> SharedPlacer {
        Arc::new(Mutex::new(Self::new(config)))
    }

    pub fn cells(&self) -> usize {
        self.used.len()
    }

    pub fn free(&self) -> usize {
        self.used.iter().filter(|u| !**u).count()
    }

    pub fn clear(&mut self) {
        self.used.iter_mut().for_each(|u| *u = false);
    }

    /// Clears used cells the first time it is called for a new episode.
    pub fn begin_episode(&mut self, epoch: u64) {
        if self.epoch != epoch {
            self.epoch = epoch;
            self.clear();
        }
    }

    fn cell_center(&self, cell: usize) -> Vec2 {
        let (cx, cy) = (cell % self.per_side, cell / self.per_side);
        let span = self.per_side as Real * self.config.cell_size;
        let origin = -span / 2.0 + self.config.cell_size / 2.0;
        Vec2::new(
            origin + cx as Real * self.config.cell_size,
            origin + cy as Real * self.config.cell_size,
        )
    }

    /// `count` jittered points in distinct unused cells.
    pub fn place<R: Rng + ?Sized>(&mut self, rng: &mut R, count: usize) -> Result<Vec<Vec2>> {
        let free: Vec<usize> = (0..self.used.len()).filter(|&c| !self.used[c]).collect();
        if count > free.len() {
            return Err(Error::NotEnoughCells {
                requested: count,
                free: free.len(),
            });
        }
        let j = self.config.jitter;
        let picks = sample(rng, free.len(), count);
        let mut out = Vec::with_capacity(count);
        for k in picks.iter() {
            let cell = free[k];
            self.used[cell] = true;
            let offset = Vec2::new(rng.gen_range(-j..=j), rng.gen_range(-j..=j));
            out.push(self.cell_center(cell) + offset);
        }
        Ok(out)
    }
}

/// Spawns `count` copies of a template body at placer positions after every
/// reset, each with a uniformly random orientation.
pub struct ResetSpawns {
    placer: SharedPlacer,
    count: usize,
    template: BodyDef<Real>,
}

impl ResetSpawns {
    pub fn new(placer: SharedPlacer, count: usize, template: BodyDef<Real>) -> Self {
        Self { placer, count, template }
    }
}

/// Positions from a shared placer for the current episode.
pub fn place_spawns(sim: &mut Simulation, placer: &SharedPlacer, count: usize) -> Result<Vec<Vec2>> {
    let epoch = sim.reset_count();
    let mut p = placer.lock().expect("placer lock");
    p.begin_episode(epoch);
    p.place(sim.rng(), count)
}

impl SimModule for ResetSpawns {
    fn populate(&mut self, sim: &mut Simulation, group: GroupId) {
        let points = place_spawns(sim, &self.placer, self.count).expect("spawn region has room for every body");
        let defs: Vec<BodyDef<Real>> = points
            .into_iter()
            .map(|p| {
                let angle = sim.rng().gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                self.template.clone().at(p).with_angle(angle)
            })
            .collect();
        let _: Vec<BodyHandle> = sim.spawn(group, &defs).expect("template body is valid");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid4() -> SpawnPlacer {
        SpawnPlacer::new(PlacerConfig {
            half_extent: 5.0,
            cell_size: 2.5,
            jitter: 0.0,
        })
    }

    #[test]
    fn pigeonhole() {
        let mut p = grid4();
        assert_eq!(p.cells(), 16);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = p.place(&mut rng, 16).unwrap();
        let mut keys: Vec<_> = pts.iter().map(|v| ((v.x * 4.0) as i64, (v.y * 4.0) as i64)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 16);
        assert_eq!(p.free(), 0);
        p.clear();
        let err = p.place(&mut rng, 17).unwrap_err();
        assert!(matches!(err, Error::NotEnoughCells { requested: 17, free: 16 }));
    }

    #[test]
    fn deterministic_and_jittered_within_cell() {
        let cfg = PlacerConfig::default();
        let a = SpawnPlacer::new(cfg.clone()).place(&mut ChaCha8Rng::seed_from_u64(9), 20).unwrap();
        let b = SpawnPlacer::new(cfg.clone()).place(&mut ChaCha8Rng::seed_from_u64(9), 20).unwrap();
        assert_eq!(a, b);
        for p in a {
            let fx = (p.x + 10.0).rem_euclid(2.5);
            assert!((fx - 1.25).abs() <= 0.25 + 1e-12);
        }
    }

    #[test]
    fn shared_across_groups_and_reset() {
        use crate::sim::SimConfig;
        let placer = SpawnPlacer::shared(PlacerConfig::default());
        let mut sim = Simulation::new(SimConfig::default());
        sim.add_group("a", vec![Box::new(ResetSpawns::new(placer.clone(), 30, BodyDef::circle(0.2).sensor()))]);
        sim.add_group("b", vec![Box::new(ResetSpawns::new(placer.clone(), 30, BodyDef::circle(0.4)))]);
        for seed in 0..3 {
            sim.reset(seed);
            assert_eq!(placer.lock().unwrap().free(), 4);
        }
    }
}
