//! Acceptance suite: one PASS/FAIL line per criterion, then a single assert.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use survival_core::bench;
use survival_core::env::obs::{AgentObservation, EntityType, Layout};
use survival_core::env::{AgentAction, Env, StepEvents, Termination, VariantConfig, PRESETS};
use survival_core::geom::{wrap_angle, Shape, WorldShape};
use survival_core::items::{Inventory, ItemKind};
use survival_core::mechanics::{DamageKind, Health, Melee, ZoneParams, ZonePhase, ZoneSchedule};
use survival_core::perception::{visible_from, CameraConfig};
use survival_core::physics::{BodyDef, BodyHandle};
use survival_core::policy::{run_episode, Policy, RandomPolicy, SelfState, ZoneFollower};
use survival_core::sim::{SimConfig, Simulation};
use survival_core::{Room, Vec2};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn random_actions(policies: &mut [RandomPolicy], env: &Env) -> Vec<AgentAction> {
    (0..env.n_agents())
        .map(|i| if env.alive(i) { policies[i].sample() } else { AgentAction::NOOP })
        .collect()
}

fn obs_digest(obs: &[AgentObservation]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for o in obs {
        for v in o.flatten() {
            h = (h ^ v.to_bits()).wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

// ---------------------------------------------------------------- determinism

fn determinism_trace(preset: &str, steps: usize) -> Vec<(u64, u64, Vec<u64>)> {
    let mut env = Env::from_preset(preset).unwrap();
    let mut policies: Vec<RandomPolicy> = (0..env.n_agents()).map(|i| RandomPolicy::new(42 + i as u64)).collect();
    let mut episode = 0;
    env.reset(42);
    let mut trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let actions = random_actions(&mut policies, &env);
        let r = env.step(&actions).unwrap();
        let rewards = r.rewards.iter().map(|x| x.to_bits()).collect();
        trace.push((env.state_hash(), obs_digest(&r.observations), rewards));
        if r.done {
            episode += 1;
            env.reset(42 + episode);
        }
    }
    trace
}

fn determinism() -> Outcome {
    let t = Instant::now();
    let mut mismatches = Vec::new();
    for preset in PRESETS {
        let a = determinism_trace(preset, 1000);
        let b = determinism_trace(preset, 1000);
        if let Some(step) = a.iter().zip(&b).position(|(x, y)| x != y) {
            mismatches.push(format!("{preset}@{step}"));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        "determinism",
        mismatches.is_empty() && secs < 60.0,
        format!(
            "8 presets x 2 runs x 1000 steps, seed 42: {} mismatching presets {:?}, {secs:.2}s (limit 60s)",
            mismatches.len(),
            mismatches
        ),
    )
}

// -------------------------------------------------------------- reward oracle

fn oracle_reward(c: &VariantConfig, ev: &StepEvents, teams: &[u32], i: usize) -> f64 {
    let p = &c.rewards;
    let (alive, kills, death) = if c.teams() {
        let members: Vec<usize> = (0..teams.len()).filter(|&j| teams[j] == teams[i]).collect();
        let alive = members.iter().any(|&j| ev.alive[j]);
        let kills: u32 = members.iter().map(|&j| ev.kills[j]).sum();
        let death = !alive && members.iter().any(|&j| ev.died[j]);
        (alive, kills, death)
    } else {
        (ev.alive[i], ev.kills[i], ev.died[i])
    };
    let ia = if alive { 1.0 } else { 0.0 };
    let id = if death { 1.0 } else { 0.0 };
    ia * p.r_alive + (1.0 - ia) * p.r_dead + kills as f64 * p.r_kill + id * p.r_death
}

fn reward_oracle() -> Outcome {
    let mut steps = 0u64;
    let mut mismatches = 0u64;
    let mut team_unequal = 0u64;
    let mut kill_mismatch = 0u64;
    let mut death_twice = 0u64;
    let mut bad_params = Vec::new();
    let mut kill_steps = 0u64;
    for preset in PRESETS {
        let c = VariantConfig::preset(preset).unwrap();
        let r = &c.rewards;
        let expected = match preset {
            "ffa-1" | "2v2-1" => ((1.0, 0.0, 0.0, 0.0), Termination::AllDead),
            "ffa-4" | "2v2-4" => ((1.0, -1.0, 100.0, -100.0), Termination::LastAlive),
            _ => ((1.0, -1.0, 0.0, 0.0), Termination::LastAlive),
        };
        if ((r.r_alive, r.r_dead, r.r_kill, r.r_death), c.termination) != expected {
            bad_params.push(preset);
        }
        let mut env = Env::new(c.clone()).unwrap();
        for ep in 0..50u64 {
            // Odd episodes use the brawler so kill and death terms fire.
            let mut policies: Vec<Box<dyn Policy>> = (0..env.n_agents())
                .map(|i| -> Box<dyn Policy> {
                    let seed = ep * 31 + i as u64;
                    if ep % 2 == 0 { Box::new(RandomPolicy::new(seed)) } else { Box::new(Brawler::new(seed, 0.05, 0.1)) }
                })
                .collect();
            let layout = env.layout().clone();
            let mut obs = env.reset(ep);
            let teams = env.teams().to_vec();
            let mut died_before = vec![false; env.n_agents()];
            loop {
                let actions: Vec<AgentAction> = (0..env.n_agents())
                    .map(|i| if env.alive(i) { policies[i].act(&obs[i], &layout) } else { AgentAction::NOOP })
                    .collect();
                let res = env.step(&actions).unwrap();
                steps += 1;
                let ev = &res.events;
                for i in 0..env.n_agents() {
                    if res.rewards[i] != oracle_reward(&c, ev, &teams, i) {
                        mismatches += 1;
                    }
                    if ev.died[i] && died_before[i] {
                        death_twice += 1;
                    }
                    died_before[i] |= ev.died[i];
                    for j in 0..env.n_agents() {
                        if c.teams() && teams[i] == teams[j] && res.rewards[i] != res.rewards[j] {
                            team_unequal += 1;
                        }
                    }
                }
                let health = env.sim().get_module::<Health>(env.groups().agents).unwrap();
                let melee_deaths = health
                    .step_deaths()
                    .iter()
                    .filter(|(_, cause)| cause.kind == DamageKind::Melee && cause.attacker.is_some())
                    .count() as u32;
                let kills: u32 = ev.kills.iter().sum();
                if kills != melee_deaths {
                    kill_mismatch += 1;
                }
                if kills > 0 {
                    kill_steps += 1;
                }
                obs = res.observations;
                if res.done {
                    break;
                }
            }
        }
    }
    outcome(
        "reward oracle",
        mismatches == 0 && team_unequal == 0 && kill_mismatch == 0 && death_twice == 0 && bad_params.is_empty(),
        format!(
            "400 episodes (half random, half brawler), {steps} steps: {mismatches} reward mismatches, {team_unequal} unequal teammate rewards, \
             {kill_mismatch} kill-count mismatches ({kill_steps} steps with kills), {death_twice} repeated deaths, \
             preset parameter errors {bad_params:?}"
        ),
    )
}

// -------------------------------------------------------------- zone geometry

fn random_params(rng: &mut ChaCha8Rng) -> ZoneParams {
    ZoneParams {
        stationary_phases: rng.gen_range(1..=6),
        stationary_steps: rng.gen_range(1..=400),
        shrink_steps: rng.gen_range(1..=400),
        initial_radius: rng.gen_range(0.5..10.0),
        shrink_factor: rng.gen_range(0.1..0.95),
        damage: 1,
    }
}

fn zone_geometry() -> Outcome {
    let room: Room = Room::default();
    let h = room.half_extent;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut outside, mut interp, mut increasing, mut nonzero, mut discont) = (0, 0, 0, 0, 0);
    let mut max_err: f64 = 0.0;
    for n in 0..10_000 {
        let params = if n % 2 == 0 { ZoneParams::default() } else { random_params(&mut rng) };
        let s = ZoneSchedule::<f64>::sample(&mut rng, &room, &params);
        let total = s.total_steps();
        let mut last_r = f64::INFINITY;
        let mut start = 0u64;
        let mut prev_end: Option<(Vec2, f64)> = None;
        for phase in s.phases() {
            let d = phase.duration();
            let (a, b) = match phase {
                ZonePhase::Stationary { circle, .. } => (*circle, *circle),
                ZonePhase::Shrink { from, to, .. } => (*from, *to),
            };
            if let Some((c, r)) = prev_end {
                if (c - a.center).length() > 1e-12 || (r - a.radius).abs() > 1e-12 {
                    discont += 1;
                }
            }
            prev_end = Some((b.center, b.radius));
            for k in 0..d {
                let circle = s.circle_at(start + k);
                let f = k as f64 / d as f64;
                let expect_r = a.radius * (1.0 - f) + b.radius * f;
                let expect_c = a.center * (1.0 - f) + b.center * f;
                let err = (circle.radius - expect_r).abs().max((circle.center - expect_c).length());
                max_err = max_err.max(err);
                if err > 1e-9 {
                    interp += 1;
                }
                if circle.center.x.abs() + circle.radius > h + 1e-12 || circle.center.y.abs() + circle.radius > h + 1e-12 {
                    outside += 1;
                }
                if circle.radius > last_r {
                    increasing += 1;
                }
                last_r = circle.radius;
            }
            start += d;
        }
        if s.final_circle().radius != 0.0 || s.circle_at(total).radius != 0.0 || s.circle_at(total + 1000).radius != 0.0 {
            nonzero += 1;
        }
    }
    outcome(
        "zone geometry",
        outside + interp + increasing + nonzero + discont == 0,
        format!(
            "10000 schedules (half default, half random params): {outside} circles outside room, \
             {interp} interpolation errors > 1e-9 (max {max_err:.2e}), {increasing} radius increases, \
             {discont} phase discontinuities, {nonzero} non-zero final radii"
        ),
    )
}

// ----------------------------------------------------------------- visibility

fn circle_entry(o: Vec2, d: Vec2, c: Vec2, r: f64) -> Option<f64> {
    let f = o - c;
    if f.dot(f) <= r * r {
        return Some(0.0);
    }
    let a = d.dot(d);
    let b = 2.0 * f.dot(d);
    let cc = f.dot(f) - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    (0.0..=1.0).contains(&t).then_some(t)
}

/// Cyrus-Beck clipping against a counter-clockwise convex polygon.
fn polygon_entry(o: Vec2, d: Vec2, v: &[Vec2]) -> Option<f64> {
    let (mut te, mut tl) = (0.0f64, 1.0f64);
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        let e = b - a;
        let n = Vec2::new(e.y, -e.x);
        let num = n.dot(a - o);
        let den = n.dot(d);
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else if den < 0.0 {
            te = te.max(num / den);
        } else {
            tl = tl.min(num / den);
        }
    }
    (te <= tl).then_some(te)
}

fn entry(shape: &WorldShape<f64>, o: Vec2, d: Vec2) -> Option<f64> {
    match shape {
        WorldShape::Circle { center, radius } => circle_entry(o, d, *center, *radius),
        WorldShape::Polygon { vertices } => polygon_entry(o, d, vertices),
    }
}

fn oracle_visible(sim: &Simulation, observer: BodyHandle, cam: &CameraConfig) -> Vec<BodyHandle> {
    let w = sim.world();
    let o = w.position(observer).unwrap();
    let facing = w.angle(observer).unwrap();
    let bodies: Vec<BodyHandle> = w.handles().collect();
    let mut out = Vec::new();
    for &t in &bodies {
        if t == observer || sim.is_wall(t) {
            continue;
        }
        let d = w.position(t).unwrap() - o;
        if d.length() == 0.0 || cam.range.is_some_and(|r| d.length() > r) {
            continue;
        }
        if wrap_angle(d.y.atan2(d.x) - facing).abs() > cam.half_angle {
            continue;
        }
        let Some(tt) = entry(&w.world_shape(t).unwrap(), o, d) else { continue };
        let blocked = bodies.iter().any(|&b| {
            b != observer
                && b != t
                && !w.is_sensor(b).unwrap()
                && entry(&w.world_shape(b).unwrap(), o, d).is_some_and(|tb| tb < tt)
        });
        if !blocked {
            out.push(t);
        }
    }
    out.sort();
    out
}

fn visibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut checked, mut mismatched, mut visible_total) = (0usize, 0usize, 0usize);
    for scene in 0..1000u64 {
        let mut sim = Simulation::new(SimConfig::default());
        let g = sim.add_group("bodies", vec![]);
        sim.reset(scene);
        let h = sim.room().half_extent;
        let n = rng.gen_range(3..16);
        let mut placed: Vec<(Vec2, f64)> = Vec::new();
        let mut attempts = 0;
        while placed.len() < n && attempts < 1000 {
            attempts += 1;
            let kind = rng.gen_range(0..3);
            let (def, bound) = match kind {
                0 => (BodyDef::circle(0.4), 0.4),
                1 => (BodyDef::circle(0.2).sensor().fixed(), 0.2),
                _ => {
                    let (hw, hh) = (rng.gen_range(0.3..0.8), rng.gen_range(0.3..0.8));
                    (BodyDef::new(Shape::rect(hw, hh)), f64::hypot(hw, hh))
                }
            };
            let p = Vec2::new(rng.gen_range(-h + bound..h - bound), rng.gen_range(-h + bound..h - bound));
            if placed.iter().any(|(q, r)| q.distance(p) < r + bound + 1e-3) {
                continue;
            }
            placed.push((p, bound));
            let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            sim.spawn(g, &[def.at(p).with_angle(angle)]).unwrap();
        }
        let cam = CameraConfig {
            half_angle: rng.gen_range(0.2..2.5),
            range: if scene % 3 == 0 { Some(rng.gen_range(2.0..12.0)) } else { None },
        };
        let snapshot = sim.world().snapshot();
        for &observer in sim.group(g).bodies() {
            let got = visible_from(&snapshot, observer, &cam, sim.walls());
            let want = oracle_visible(&sim, observer, &cam);
            checked += 1;
            visible_total += want.len();
            if got != want {
                mismatched += 1;
            }
        }
    }
    outcome(
        "visibility oracle",
        mismatched == 0,
        format!("1000 scenes, {checked} observers, {visible_total} visible pairs: {mismatched} visible sets differ"),
    )
}

// -------------------------------------------------------------- mask hygiene

fn check_masks(env: &Env, obs: &[AgentObservation], layout: &Layout) -> (usize, usize) {
    let inv = env.sim().get_module::<Inventory>(env.groups().agents).unwrap();
    let (mut leaks, mut slot_errors) = (0, 0);
    for (i, o) in obs.iter().enumerate() {
        if !env.alive(i) {
            if o.flatten().iter().any(|v| *v != 0.0) {
                leaks += 1;
            }
            continue;
        }
        for t in EntityType::ALL {
            let b = o.block(t);
            assert_eq!(b.len(), layout.block(t).rows);
            for r in 0..b.len() {
                if b.mask[r] > 1 || (b.mask[r] == 0 && b.row(r).iter().any(|v| *v != 0.0)) {
                    leaks += 1;
                }
            }
        }
        let others = o.block(EntityType::Other);
        for (row, j) in (0..env.n_agents()).filter(|&j| j != i).enumerate() {
            if !env.alive(j) && others.mask[row] != 0 {
                leaks += 1;
            }
        }
        let last = inv.last(env.agent_handle(i).unwrap()).map(|held| held.data.kind());
        let heal = o.block(EntityType::HealSlot).mask[0] == 1;
        let boxed = o.block(EntityType::BoxSlot).mask[0] == 1;
        if heal != (last == Some(ItemKind::Heal)) || boxed != (last == Some(ItemKind::Box)) {
            slot_errors += 1;
        }
    }
    (leaks, slot_errors)
}

fn mask_hygiene() -> Outcome {
    let (mut leaks, mut slot_errors, mut steps, mut held_steps) = (0, 0, 0u64, 0u64);
    for preset in PRESETS {
        let mut env = Env::from_preset(preset).unwrap();
        let layout = env.layout().clone();
        for ep in 0..10u64 {
            let mut policies: Vec<Box<dyn Policy>> = (0..env.n_agents())
                .map(|i| Box::new(Brawler::new(ep * 7 + i as u64, 0.05, 0.1)) as Box<dyn Policy>)
                .collect();
            let mut obs = env.reset(ep);
            loop {
                let (l, s) = check_masks(&env, &obs, &layout);
                leaks += l;
                slot_errors += s;
                held_steps += obs.iter().filter(|o| o.block(EntityType::HealSlot).mask[0] == 1
                    || o.block(EntityType::BoxSlot).mask[0] == 1).count() as u64;
                let actions: Vec<AgentAction> = (0..env.n_agents())
                    .map(|i| if env.alive(i) { policies[i].act(&obs[i], &layout) } else { AgentAction::NOOP })
                    .collect();
                let r = env.step(&actions).unwrap();
                steps += 1;
                obs = r.observations;
                if r.done {
                    let (l, s) = check_masks(&env, &obs, &layout);
                    leaks += l;
                    slot_errors += s;
                    break;
                }
            }
        }
    }
    outcome(
        "mask hygiene",
        leaks == 0 && slot_errors == 0,
        format!(
            "80 full episodes, {steps} steps: {leaks} masked rows with non-zero data, \
             {slot_errors} slot masks disagreeing with inventory ({held_steps} agent-steps holding an item)"
        ),
    )
}

// ------------------------------------------------------------- forced policy

/// Chases the nearest visible agent or item, swings constantly and uses or
/// gives items with fixed probabilities.
struct Brawler {
    rng: ChaCha8Rng,
    p_use: f64,
    p_give: f64,
}

impl Brawler {
    fn new(seed: u64, p_use: f64, p_give: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            p_use,
            p_give,
        }
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.05 {
        1
    } else if v < -0.05 {
        -1
    } else {
        0
    }
}

impl Policy for Brawler {
    fn act(&mut self, obs: &AgentObservation, layout: &Layout) -> AgentAction {
        let me = SelfState::read(&obs.x_self, layout);
        if me.health <= 0.0 {
            return AgentAction::NOOP;
        }
        let mut targets: Vec<Vec2> = Vec::new();
        let others = obs.block(EntityType::Other);
        for r in 0..others.len() {
            if others.mask[r] == 1 {
                let o = SelfState::read(others.row(r), layout);
                targets.push(o.position);
            }
        }
        let chase_agents = !targets.is_empty() && self.rng.gen_bool(0.7);
        if !chase_agents {
            targets.clear();
            for t in [EntityType::Heal, EntityType::BoxItem] {
                let b = obs.block(t);
                let w = b.width;
                for r in 0..b.len() {
                    if b.mask[r] == 1 {
                        targets.push(Vec2::new(b.row(r)[w - 2], b.row(r)[w - 1]));
                    }
                }
            }
        }
        let target = targets
            .into_iter()
            .min_by(|a, b| a.distance(me.position).total_cmp(&b.distance(me.position)));
        let (x, y, turn) = match target {
            Some(t) => {
                let local = (t - me.position).rotated(-me.angle);
                (sign(local.x), sign(local.y), sign(local.y.atan2(local.x)))
            }
            None => (self.rng.gen_range(-1..=1), self.rng.gen_range(-1..=1), 1),
        };
        AgentAction {
            x,
            y,
            turn,
            attack: true,
            use_item: self.rng.gen_bool(self.p_use),
            give: self.rng.gen_bool(self.p_give),
        }
    }
}

// ---------------------------------------------------------------- item ledger

#[derive(Default)]
struct Activity {
    pickups: u64,
    heals_used: u64,
    boxes_placed: u64,
    gives: u64,
    deaths_holding: u64,
    api_drops: u64,
}

fn ledger_counts(env: &Env) -> (usize, usize) {
    let sim = env.sim();
    let g = env.groups();
    let inv = sim.get_module::<Inventory>(g.agents).unwrap();
    let heals = sim.group(g.heals).bodies().len() + inv.count(ItemKind::Heal);
    let boxes = sim.group(g.boxes).bodies().len() + sim.group(g.boxitems).bodies().len() + inv.count(ItemKind::Box);
    (heals, boxes)
}

fn item_ledger() -> Outcome {
    let mut violations = 0u64;
    let mut act = Activity::default();
    let mut steps = 0u64;
    let presets = ["ffa-3", "ffa-4", "2v2-1", "2v2-3", "2v2-4"];
    for ep in 0..100u64 {
        let preset = presets[ep as usize % presets.len()];
        let mut env = Env::from_preset(preset).unwrap();
        let layout = env.layout().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + ep);
        let mut policies: Vec<Brawler> =
            (0..env.n_agents()).map(|i| Brawler::new(ep * 13 + i as u64, 0.2, 0.4)).collect();
        let mut obs = env.reset(ep);
        let (heals0, boxes0) = ledger_counts(&env);
        let mut consumed = 0usize;
        loop {
            for i in 0..env.n_agents() {
                if env.alive(i) && rng.gen_bool(0.01) && env.drop_last(i).unwrap() {
                    act.api_drops += 1;
                }
            }
            let holding: Vec<bool> = (0..env.n_agents())
                .map(|i| {
                    let inv = env.sim().get_module::<Inventory>(env.groups().agents).unwrap();
                    env.agent_handle(i).is_some_and(|h| !inv.items(h).is_empty())
                })
                .collect();
            let actions: Vec<AgentAction> = (0..env.n_agents())
                .map(|i| if env.alive(i) { policies[i].act(&obs[i], &layout) } else { AgentAction::NOOP })
                .collect();
            let r = env.step(&actions).unwrap();
            steps += 1;
            let ev = &r.events;
            consumed += ev.heals_used.iter().sum::<u32>() as usize;
            act.heals_used += ev.heals_used.iter().sum::<u32>() as u64;
            act.boxes_placed += ev.boxes_placed.iter().sum::<u32>() as u64;
            act.pickups += ev.pickups.iter().sum::<u32>() as u64;
            act.gives += ev.gives.len() as u64;
            act.deaths_holding += (0..env.n_agents()).filter(|&i| ev.died[i] && holding[i]).count() as u64;
            let (heals, boxes) = ledger_counts(&env);
            if heals + consumed != heals0 || boxes != boxes0 {
                violations += 1;
            }
            obs = r.observations;
            if r.done {
                break;
            }
        }
    }
    let active = act.pickups > 0
        && act.heals_used > 0
        && act.boxes_placed > 0
        && act.gives > 0
        && act.deaths_holding > 0
        && act.api_drops > 0;
    outcome(
        "item ledger",
        violations == 0 && active,
        format!(
            "100 episodes, {steps} steps: {violations} conservation violations; activity: {} pickups, \
             {} heals used, {} boxes placed, {} gives, {} deaths while holding, {} API drops",
            act.pickups, act.heals_used, act.boxes_placed, act.gives, act.deaths_holding, act.api_drops
        ),
    )
}

// ---------------------------------------------------------------------- teams

fn teams() -> Outcome {
    let (mut friendly_damage, mut cross_gives) = (0u64, 0u64);
    let (mut blocked_friendly_hits, mut enemy_damage, mut gives) = (0u64, 0u64, 0u64);
    let presets = ["2v2-1", "2v2-2", "2v2-3", "2v2-4"];
    for ep in 0..100u64 {
        let mut env = Env::from_preset(presets[ep as usize % 4]).unwrap();
        let layout = env.layout().clone();
        let mut policies: Vec<Brawler> =
            (0..env.n_agents()).map(|i| Brawler::new(ep * 17 + i as u64, 0.05, 0.5)).collect();
        let mut obs = env.reset(ep);
        let team: Vec<u32> = env.teams().to_vec();
        let handles: Vec<BodyHandle> = (0..env.n_agents()).map(|i| env.agent_handle(i).unwrap()).collect();
        let index_of = |h: BodyHandle| handles.iter().position(|&x| x == h);
        loop {
            let actions: Vec<AgentAction> = (0..env.n_agents())
                .map(|i| if env.alive(i) { policies[i].act(&obs[i], &layout) } else { AgentAction::NOOP })
                .collect();
            let r = env.step(&actions).unwrap();
            let g = env.groups().agents;
            let health = env.sim().get_module::<Health>(g).unwrap();
            for d in health.step_damage() {
                if d.cause.kind != DamageKind::Melee {
                    continue;
                }
                let (Some(a), Some(t)) = (d.cause.attacker.and_then(index_of), index_of(d.target)) else { continue };
                if team[a] == team[t] {
                    friendly_damage += 1;
                } else {
                    enemy_damage += 1;
                }
            }
            for hit in env.sim().get_module::<Melee>(g).unwrap().hits() {
                if let (Some(a), Some(v)) = (index_of(hit.attacker), index_of(hit.victim)) {
                    if team[a] == team[v] {
                        blocked_friendly_hits += 1;
                    }
                }
            }
            for &(a, b) in &r.events.gives {
                gives += 1;
                if team[a] != team[b] {
                    cross_gives += 1;
                }
            }
            obs = r.observations;
            if r.done {
                break;
            }
        }
    }
    outcome(
        "teams",
        friendly_damage == 0 && cross_gives == 0 && blocked_friendly_hits > 0 && gives > 0,
        format!(
            "100 2v2 episodes: {friendly_damage} friendly-fire damage events ({blocked_friendly_hits} friendly \
             swings connected and were blocked, {enemy_damage} enemy damage events), {cross_gives} cross-team \
             gives out of {gives}"
        ),
    )
}

// ---------------------------------------------------------------- performance

fn performance() -> Outcome {
    let report = bench::benchmark_all(3, 0).unwrap();
    let mut worst_preset = ("", 0.0f64);
    for p in PRESETS {
        let m = report.get_at(p, "env").unwrap().mean;
        if m > worst_preset.1 {
            worst_preset = (p, m);
        }
    }
    let big = report.get_at("10 agents, 10 heals, 20 boxes", "env").unwrap().mean;
    let big_nocam = report.get_at("10 agents (no cameras), 10 heals, 20 boxes", "env").unwrap().mean;
    let sim_cam = report.get_at("10 agents, 10 heals, 20 boxes", "sim").unwrap().mean;
    let sim_nocam = report.get_at("10 agents (no cameras), 10 heals, 20 boxes", "sim").unwrap().mean;
    let ratio = sim_cam / sim_nocam;
    outcome(
        "performance",
        worst_preset.1 <= 2e-3 && big <= 5e-3 && ratio >= 1.2,
        format!(
            "slowest preset {} {:.3e}s/step (limit 2e-3); 10/10/20 env step {:.3e}s (limit 5e-3); \
             cameras on/off sim step {:.3e}/{:.3e} = {:.2}x (limit 1.2x; env step {:.2}x)",
            worst_preset.0,
            worst_preset.1,
            big,
            sim_cam,
            sim_nocam,
            ratio,
            big / big_nocam
        ),
    )
}

// ---------------------------------------------------------- behavioral sanity

/// Half the zone-follower minus random mean-survival margin measured on seeds
/// 1000..1100 before this check was written (1981.16 vs 393.40 steps).
const MIN_SURVIVAL_MARGIN: f64 = 790.0;

fn behavioral_sanity() -> Outcome {
    let mut env = Env::from_preset("ffa-1").unwrap();
    let (mut zf, mut rnd) = (0.0, 0.0);
    for seed in 0..100u64 {
        let mut p: Vec<Box<dyn Policy>> = vec![Box::new(ZoneFollower::default()), Box::new(ZoneFollower::default())];
        zf += run_episode(&mut env, seed, &mut p, None).unwrap().mean_survival();
        let mut p: Vec<Box<dyn Policy>> = vec![Box::new(RandomPolicy::new(0)), Box::new(RandomPolicy::new(0))];
        rnd += run_episode(&mut env, seed, &mut p, None).unwrap().mean_survival();
    }
    let (zf, rnd) = (zf / 100.0, rnd / 100.0);
    outcome(
        "behavioral sanity",
        zf - rnd >= MIN_SURVIVAL_MARGIN,
        format!(
            "ffa-1, 100 seeds: zone-follower mean survival {zf:.1} vs random {rnd:.1} steps, margin {:.1} \
             (pinned minimum {MIN_SURVIVAL_MARGIN})",
            zf - rnd
        ),
    )
}

type Check = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let checks: [Check; 9] = [
        ("determinism", determinism),
        ("reward oracle", reward_oracle),
        ("zone geometry", zone_geometry),
        ("visibility oracle", visibility),
        ("mask hygiene", mask_hygiene),
        ("item ledger", item_ledger),
        ("teams", teams),
        ("performance", performance),
        ("behavioral sanity", behavioral_sanity),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        let t = Instant::now();
        let o = check();
        assert_eq!(o.name, name);
        println!(
            "{} {}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(o.name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
