use std::path::{Path, PathBuf};

use survival_core::env::{replay_with, Env, RawReplay};
use survival_core::geom::WorldShape;
use survival_core::mechanics::{melee_segment, Health, Melee, SafeZone};
use survival_core::physics::BodyHandle;
use survival_core::{Result, Vec2};

use crate::canvas::{Canvas, Painter, Rgb, Transform};

pub const BACKGROUND: Rgb = [24, 24, 28];
const WALL: Rgb = [110, 110, 120];
const ZONE: Rgb = [230, 230, 230];
const NEXT_ZONE: Rgb = [90, 140, 230];
const HEAL: Rgb = [240, 90, 160];
const BOX: Rgb = [150, 105, 60];
const BOX_ITEM: Rgb = [200, 160, 90];
const HEALTH_BAR: Rgb = [40, 200, 60];
const MELEE: Rgb = [255, 60, 40];
const TEXT: Rgb = [255, 255, 255];
const AGENT_COLORS: [Rgb; 6] = [
    [230, 200, 40],
    [60, 200, 220],
    [200, 80, 220],
    [240, 130, 40],
    [120, 220, 120],
    [180, 180, 255],
];

fn fill_shape(p: &mut Painter, shape: &WorldShape<f64>, c: Rgb) {
    match shape {
        WorldShape::Circle { center, radius } => p.circle(*center, *radius, c),
        WorldShape::Polygon { vertices } => p.polygon(vertices, c),
    }
}

fn draw_group(p: &mut Painter, env: &Env, bodies: &[BodyHandle], c: Rgb) {
    for &h in bodies {
        if let Ok(s) = env.sim().world().world_shape(h) {
            fill_shape(p, &s, c);
        }
    }
}

fn walls(p: &mut Painter, env: &Env) {
    draw_group(p, env, env.sim().walls(), WALL);
}

fn zone(p: &mut Painter, env: &Env) {
    if let Ok(z) = env.sim().get_module::<SafeZone>(env.groups().agents) {
        let s = z.state();
        p.ring(s.next.center, s.next.radius, 1.0, NEXT_ZONE);
        p.ring(s.current.center, s.current.radius, 2.0, ZONE);
    }
}

fn items(p: &mut Painter, env: &Env) {
    let g = env.groups();
    draw_group(p, env, env.sim().group(g.heals).bodies(), HEAL);
    draw_group(p, env, env.sim().group(g.boxitems).bodies(), BOX_ITEM);
}

fn boxes(p: &mut Painter, env: &Env) {
    draw_group(p, env, env.sim().group(env.groups().boxes).bodies(), BOX);
}

fn agents(p: &mut Painter, env: &Env) {
    let sim = env.sim();
    let world = sim.world();
    let health = sim.get_module::<Health>(env.groups().agents).ok();
    let initial = env.config().agent.health.initial.max(1) as f64;
    let team_colors = env.config().teams();
    for i in 0..env.n_agents() {
        if !env.alive(i) {
            continue;
        }
        let h = env.agent_handle(i).expect("live agent");
        let (Ok(pos), Ok(angle)) = (world.position(h), world.angle(h)) else { continue };
        let r = env.config().agent.radius;
        let color = AGENT_COLORS[if team_colors { env.team(i) as usize } else { i } % AGENT_COLORS.len()];
        p.circle(pos, r, color);
        p.segment(pos, pos + Vec2::from_angle(angle) * r, BACKGROUND);
        let hp = health.and_then(|m| m.health(h)).unwrap_or(0) as f64;
        let top = pos + Vec2::new(-r, r);
        let full = (2.0 * r * p.transform.scale).round().max(2.0) as i64;
        let bar = ((hp / initial).clamp(0.0, 1.0) * full as f64).round() as i64;
        p.pixel_rect(top, 0, -4, bar, 2, HEALTH_BAR);
        p.number(pos + Vec2::new(r, r), 1, -6, i, TEXT);
    }
}

fn melee(p: &mut Painter, env: &Env) {
    let Ok(m) = env.sim().get_module::<Melee>(env.groups().agents) else { return };
    let world = env.sim().world();
    for &h in m.attacking() {
        if let (Ok(pos), Ok(angle)) = (world.position(h), world.angle(h)) {
            let (a, b) = melee_segment(pos, angle, env.config().agent.radius, m.config.length);
            p.segment(a, b, MELEE);
        }
    }
}

/// Canvas with the standard scene views: walls, zone circles, items, boxes,
/// agents with health bar and index, melee segments.
pub fn scene_canvas(env: &Env, size: usize) -> Canvas<Env> {
    let half = env.sim().room().half_extent + env.sim().room().wall_thickness;
    let mut c = Canvas::new(size, size, Transform::fit(half, size), BACKGROUND);
    c.add_view(walls);
    c.add_view(zone);
    c.add_view(items);
    c.add_view(boxes);
    c.add_view(agents);
    c.add_view(melee);
    c
}

/// Steps at which frames are written: every `every` steps from 0, plus the
/// last step.
pub fn frame_steps(total: u32, every: u32) -> Vec<u32> {
    let every = every.max(1);
    let mut v: Vec<u32> = (0..=total).step_by(every as usize).collect();
    if v.last() != Some(&total) {
        v.push(total);
    }
    v
}

/// Replays `raw` and writes `frame_<step>.ppm` files into `out`.
pub fn render_episode(raw: &RawReplay, out: &Path, every: u32, size: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let wanted = frame_steps(raw.steps, every);
    let mut canvas: Option<Canvas<Env>> = None;
    let mut written = Vec::new();
    replay_with(raw, |env, step| {
        if wanted.binary_search(&step).is_ok() {
            let c = canvas.get_or_insert_with(|| scene_canvas(env, size));
            let path = out.join(format!("frame_{step:06}.ppm"));
            std::fs::write(&path, c.render(env).to_ppm())?;
            written.push(path);
        }
        Ok(())
    })?;
    Ok(written)
}
