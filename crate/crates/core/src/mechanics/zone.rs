//! Safe zone: a circle alternating between stationary phases and
//! shrinking-moving phases, damaging bodies whose center lies outside it.

use std::hash::Hasher;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Real as Scalar, Vec2};
use crate::mechanics::health::{damage, DamageCause, Health};
use crate::physics::Room;
use crate::sim::{GroupId, SimModule, Simulation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneCircle<T> {
    pub center: Vec2<T>,
    pub radius: T,
}

impl<T: Scalar> ZoneCircle<T> {
    pub fn new(center: Vec2<T>, radius: T) -> Self {
        Self { center, radius }
    }

    /// Strictly-outside test on a point.
    pub fn excludes(&self, p: Vec2<T>) -> bool {
        (p - self.center).length() > self.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ZonePhase<T> {
    Stationary { circle: ZoneCircle<T>, duration: u64 },
    Shrink { from: ZoneCircle<T>, to: ZoneCircle<T>, duration: u64 },
}

impl<T: Scalar> ZonePhase<T> {
    pub fn duration(&self) -> u64 {
        match self {
            ZonePhase::Stationary { duration, .. } | ZonePhase::Shrink { duration, .. } => *duration,
        }
    }

    /// Circle `k` steps into the phase.
    pub fn circle_at(&self, k: u64) -> ZoneCircle<T> {
        match self {
            ZonePhase::Stationary { circle, .. } => *circle,
            ZonePhase::Shrink { from, to, duration } => {
                let s = T::lit(k as f64) / T::lit(*duration as f64);
                ZoneCircle {
                    center: from.center + (to.center - from.center) * s,
                    radius: from.radius + (to.radius - from.radius) * s,
                }
            }
        }
    }

    /// Circle the zone settles into once this phase ends.
    pub fn end_circle(&self) -> ZoneCircle<T> {
        match self {
            ZonePhase::Stationary { circle, .. } => *circle,
            ZonePhase::Shrink { to, .. } => *to,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZoneParams {
    pub stationary_phases: usize,
    pub stationary_steps: u64,
    pub shrink_steps: u64,
    pub initial_radius: f64,
    /// Radius ratio between consecutive stationary phases.
    pub shrink_factor: f64,
    /// Health lost per step outside the zone.
    pub damage: i64,
}

impl Default for ZoneParams {
    fn default() -> Self {
        Self {
            stationary_phases: 4,
            stationary_steps: 300,
            shrink_steps: 300,
            initial_radius: 8.0,
            shrink_factor: 0.55,
            damage: 1,
        }
    }
}

impl ZoneParams {
    pub fn schedule_steps(&self) -> u64 {
        self.stationary_phases as u64 * (self.stationary_steps + self.shrink_steps)
    }

    pub fn validate(&self, room_half_extent: f64) -> Result<()> {
        if self.stationary_phases == 0 {
            return Err(Error::Config("zone needs at least one stationary phase".into()));
        }
        if self.stationary_steps == 0 || self.shrink_steps == 0 {
            return Err(Error::Config("zone phase durations must be positive".into()));
        }
        if !(self.initial_radius > 0.0 && self.initial_radius <= room_half_extent) {
            return Err(Error::Config(format!(
                "zone initial radius {} must be in (0, {room_half_extent}]",
                self.initial_radius
            )));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor <= 1.0) {
            return Err(Error::Config("zone shrink factor must be in (0, 1]".into()));
        }
        if self.damage <= 0 {
            return Err(Error::Config("zone damage must be positive".into()));
        }
        Ok(())
    }
}

/// Full phase list of one episode; the last phase shrinks to radius 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneSchedule<T> {
    phases: Vec<ZonePhase<T>>,
}

impl<T: Scalar> ZoneSchedule<T> {
    pub fn from_phases(phases: Vec<ZonePhase<T>>) -> Self {
        assert!(!phases.is_empty(), "schedule needs at least one phase");
        Self { phases }
    }

    /// Samples stationary centers uniformly among positions keeping each
    /// circle inside the room. The terminal point is sampled the same way.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, room: &Room<T>, params: &ZoneParams) -> Self {
        let uniform_center = |radius: T, rng: &mut R| {
            let lim = room.half_extent - radius;
            let x = T::lit(rng.gen::<f64>() * 2.0 - 1.0) * lim;
            let y = T::lit(rng.gen::<f64>() * 2.0 - 1.0) * lim;
            Vec2::new(x, y)
        };
        let mut circles = Vec::with_capacity(params.stationary_phases + 1);
        let mut radius = T::lit(params.initial_radius);
        for _ in 0..params.stationary_phases {
            circles.push(ZoneCircle::new(uniform_center(radius, rng), radius));
            radius = radius * T::lit(params.shrink_factor);
        }
        circles.push(ZoneCircle::new(uniform_center(T::zero(), rng), T::zero()));
        let mut phases = Vec::with_capacity(2 * params.stationary_phases);
        for pair in circles.windows(2) {
            phases.push(ZonePhase::Stationary {
                circle: pair[0],
                duration: params.stationary_steps,
            });
            phases.push(ZonePhase::Shrink {
                from: pair[0],
                to: pair[1],
                duration: params.shrink_steps,
            });
        }
        Self { phases }
    }

    pub fn phases(&self) -> &[ZonePhase<T>] {
        &self.phases
    }

    pub fn total_steps(&self) -> u64 {
        self.phases.iter().map(ZonePhase::duration).sum()
    }

    pub fn final_circle(&self) -> ZoneCircle<T> {
        self.phases.last().expect("non-empty").end_circle()
    }

    /// (phase index, steps into phase) after `t` zone steps; `None` once the
    /// schedule has run out.
    pub fn locate(&self, t: u64) -> Option<(usize, u64)> {
        let mut start = 0;
        for (i, p) in self.phases.iter().enumerate() {
            if t < start + p.duration() {
                return Some((i, t - start));
            }
            start += p.duration();
        }
        None
    }

    pub fn circle_at(&self, t: u64) -> ZoneCircle<T> {
        match self.locate(t) {
            Some((i, k)) => self.phases[i].circle_at(k),
            None => self.final_circle(),
        }
    }

    /// Circle of the next stationary phase after the one in effect at `t`;
    /// the terminal circle (radius 0) when none is left.
    pub fn next_stationary_at(&self, t: u64) -> ZoneCircle<T> {
        let Some((i, _)) = self.locate(t) else {
            return self.final_circle();
        };
        let from = match self.phases[i] {
            ZonePhase::Stationary { .. } => i + 1,
            ZonePhase::Shrink { .. } => i,
        };
        self.phases[from..]
            .iter()
            .find_map(|p| match p {
                ZonePhase::Shrink { to, .. } => Some(*to),
                ZonePhase::Stationary { .. } => None,
            })
            .unwrap_or_else(|| self.final_circle())
    }

    pub fn validate(&self, room: &Room<T>) -> Result<()> {
        let mut last = T::infinity();
        for p in &self.phases {
            let circles = match p {
                ZonePhase::Stationary { circle, .. } => vec![*circle],
                ZonePhase::Shrink { from, to, .. } => vec![*from, *to],
            };
            for c in circles {
                if !room.contains_disk(c.center, c.radius) {
                    return Err(Error::Config(format!(
                        "zone circle at ({}, {}) r={} leaves the room",
                        c.center.x, c.center.y, c.radius
                    )));
                }
                if c.radius > last {
                    return Err(Error::Config("zone radii must be non-increasing".into()));
                }
                last = c.radius;
            }
        }
        if self.final_circle().radius != T::zero() {
            return Err(Error::Config("zone must end with radius 0".into()));
        }
        Ok(())
    }
}

/// Current and next-stationary zone circles as observed by agents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneState {
    pub current: ZoneCircle<f64>,
    pub next: ZoneCircle<f64>,
}

/// Zone mechanic for the agents group. Counts phases with integer counters
/// and damages, through the group's [`Health`], every body outside.
pub struct SafeZone {
    pub params: ZoneParams,
    schedule: Option<ZoneSchedule<f64>>,
    phase: usize,
    into_phase: u64,
    elapsed: u64,
}

impl SafeZone {
    pub fn new(params: ZoneParams) -> Self {
        Self {
            params,
            schedule: None,
            phase: 0,
            into_phase: 0,
            elapsed: 0,
        }
    }

    pub fn schedule(&self) -> Option<&ZoneSchedule<f64>> {
        self.schedule.as_ref()
    }

    /// Replaces the sampled schedule and rewinds the counters.
    pub fn set_schedule(&mut self, schedule: ZoneSchedule<f64>) {
        self.schedule = Some(schedule);
        self.phase = 0;
        self.into_phase = 0;
        self.elapsed = 0;
    }

    pub fn phase_index(&self) -> usize {
        self.phase
    }

    pub fn steps_into_phase(&self) -> u64 {
        self.into_phase
    }

    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    pub fn finished(&self) -> bool {
        self.schedule.as_ref().is_none_or(|s| self.phase >= s.phases().len())
    }

    pub fn current(&self) -> ZoneCircle<f64> {
        let s = self.schedule.as_ref().expect("zone schedule sampled at reset");
        match s.phases().get(self.phase) {
            Some(p) => p.circle_at(self.into_phase),
            None => s.final_circle(),
        }
    }

    pub fn state(&self) -> ZoneState {
        let s = self.schedule.as_ref().expect("zone schedule sampled at reset");
        ZoneState {
            current: self.current(),
            next: s.next_stationary_at(self.elapsed),
        }
    }

    fn advance(&mut self) {
        let Some(s) = &self.schedule else { return };
        self.elapsed += 1;
        if let Some(p) = s.phases().get(self.phase) {
            self.into_phase += 1;
            if self.into_phase >= p.duration() {
                self.phase += 1;
                self.into_phase = 0;
            }
        }
    }

    /// Advances one step and damages bodies outside the circle.
    pub fn zone_step(&mut self, sim: &mut Simulation, group: GroupId) -> Result<()> {
        self.advance();
        let circle = self.current();
        let outside: Vec<_> = sim
            .group(group)
            .bodies()
            .iter()
            .copied()
            .filter(|&b| sim.position(b).is_ok_and(|p| circle.excludes(p)))
            .collect();
        if outside.is_empty() || !sim.has_module::<Health>(group) {
            return Ok(());
        }
        for b in outside {
            damage(sim, b, self.params.damage, DamageCause::zone())?;
        }
        Ok(())
    }
}

impl SimModule for SafeZone {
    fn post_reset(&mut self, sim: &mut Simulation, _: GroupId) {
        let room = sim.room().clone();
        let schedule = ZoneSchedule::sample(sim.rng(), &room, &self.params);
        self.set_schedule(schedule);
    }

    fn pre_step(&mut self, sim: &mut Simulation, group: GroupId) {
        self.zone_step(sim, group).expect("zone damages live group bodies");
    }

    fn hash_state(&self, state: &mut dyn Hasher) {
        state.write_u64(self.phase as u64);
        state.write_u64(self.into_phase);
        if let Some(s) = &self.schedule {
            let c = s.circle_at(0);
            state.write_u64(c.center.x.to_bits());
            state.write_u64(c.center.y.to_bits());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::BodyDef;
    use crate::sim::SimConfig;
    use crate::mechanics::HealthConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64, y: f64, r: f64) -> ZoneCircle<f64> {
        ZoneCircle::new(Vec2::new(x, y), r)
    }

    #[test]
    fn linear_shrink_oracle() {
        let p = ZonePhase::Shrink {
            from: c(0.0, 0.0, 5.0),
            to: c(2.0, 0.0, 0.0),
            duration: 100,
        };
        let at40 = p.circle_at(40);
        // (D - k)/D * r_from + k/D * r_to
        assert!((at40.radius - 3.0).abs() < 1e-12);
        assert!((at40.center.x - 0.8).abs() < 1e-12);
    }

    #[test]
    fn default_schedule_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let room = Room::default();
        let params = ZoneParams::default();
        let s = ZoneSchedule::<f64>::sample(&mut rng, &room, &params);
        assert_eq!(s.phases().len(), 8);
        assert_eq!(s.total_steps(), 2400);
        s.validate(&room).unwrap();
        let radii: Vec<f64> = s
            .phases()
            .iter()
            .filter_map(|p| match p {
                ZonePhase::Stationary { circle, .. } => Some(circle.radius),
                _ => None,
            })
            .collect();
        let expected = [8.0, 4.4, 2.42, 1.331];
        for (r, e) in radii.iter().zip(expected) {
            assert!((r - e).abs() < 1e-12);
        }
        assert_eq!(s.circle_at(2400).radius, 0.0);
        assert_eq!(s.circle_at(10_000).radius, 0.0);
    }

    #[test]
    fn next_stationary_lookup() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = ZoneSchedule::<f64>::sample(&mut rng, &Room::default(), &ZoneParams::default());
        let stationary: Vec<ZoneCircle<f64>> = s
            .phases()
            .iter()
            .filter_map(|p| match p {
                ZonePhase::Stationary { circle, .. } => Some(*circle),
                _ => None,
            })
            .collect();
        // stationary phase 0 -> stationary phase 1
        assert_eq!(s.circle_at(10), stationary[0]);
        assert_eq!(s.next_stationary_at(10), stationary[1]);
        // during the first shrink the target is stationary phase 1
        assert_eq!(s.next_stationary_at(450), stationary[1]);
        // last stationary phase -> terminal circle
        assert_eq!(s.next_stationary_at(2000).radius, 0.0);
        assert_eq!(s.next_stationary_at(2500), s.final_circle());
    }

    fn zone_sim() -> (Simulation, GroupId) {
        let mut sim = Simulation::new(SimConfig::default());
        let g = sim.add_group(
            "agents",
            vec![
                Box::new(Health::new(HealthConfig::default())),
                Box::new(SafeZone::new(ZoneParams::default())),
            ],
        );
        sim.reset(3);
        (sim, g)
    }

    #[test]
    fn damage_only_outside() {
        let (mut sim, g) = zone_sim();
        let center = sim.get_module::<SafeZone>(g).unwrap().current().center;
        let inside = sim.spawn(g, &[BodyDef::circle(0.4).at(center)]).unwrap()[0];
        let far = Vec2::new(if center.x > 0.0 { -9.5 } else { 9.5 }, if center.y > 0.0 { -9.5 } else { 9.5 });
        let outside = sim.spawn(g, &[BodyDef::circle(0.4).at(far)]).unwrap()[0];
        sim.step().unwrap();
        let hp = sim.get_module::<Health>(g).unwrap();
        assert_eq!(hp.health(inside), Some(100));
        assert_eq!(hp.health(outside), Some(99));
    }

    #[test]
    fn counters_track_phases() {
        let (mut sim, g) = zone_sim();
        for _ in 0..301 {
            sim.step().unwrap();
        }
        let z = sim.get_module::<SafeZone>(g).unwrap();
        assert_eq!((z.phase_index(), z.steps_into_phase(), z.elapsed()), (1, 1, 301));
        let expected = z.schedule().unwrap().circle_at(301);
        assert_eq!(z.current(), expected);
    }
}
