//! Minimal rigid-body world: circles and convex polygons, fixed-step
//! semi-implicit Euler integration with impulse contact response, contact
//! begin/end events and segment raycasts.
//!
//! Bodies are stored in handle order and every pass iterates them in that
//! order, so a step is a pure function of the prior state and controls.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Real, Transform, Vec2, WorldShape};
pub use crate::geom::Shape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct BodyHandle(u64);

impl BodyHandle {
    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for BodyHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("{0}")]
    InvalidShape(String),
    #[error("invalid body definition: {0}")]
    InvalidBody(String),
    #[error("stale or unknown body handle {0}")]
    StaleHandle(BodyHandle),
    #[error("degenerate raycast: from == to")]
    DegenerateRay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BodyKind {
    Dynamic,
    /// Infinite mass; never integrated.
    Static,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodyDef<T> {
    pub shape: Shape<T>,
    pub position: Vec2<T>,
    pub angle: T,
    pub linear_velocity: Vec2<T>,
    pub angular_velocity: T,
    pub density: T,
    /// Sensors report contacts but never collide.
    pub sensor: bool,
    pub kind: BodyKind,
}

impl<T: Real> BodyDef<T> {
    pub fn new(shape: Shape<T>) -> Self {
        Self {
            shape,
            position: Vec2::zero(),
            angle: T::zero(),
            linear_velocity: Vec2::zero(),
            angular_velocity: T::zero(),
            density: T::one(),
            sensor: false,
            kind: BodyKind::Dynamic,
        }
    }

    pub fn circle(radius: T) -> Self {
        Self::new(Shape::circle(radius))
    }

    pub fn at(mut self, position: Vec2<T>) -> Self {
        self.position = position;
        self
    }

    pub fn with_angle(mut self, angle: T) -> Self {
        self.angle = angle;
        self
    }

    pub fn with_velocity(mut self, v: Vec2<T>) -> Self {
        self.linear_velocity = v;
        self
    }

    pub fn with_density(mut self, density: T) -> Self {
        self.density = density;
        self
    }

    pub fn sensor(mut self) -> Self {
        self.sensor = true;
        self
    }

    pub fn fixed(mut self) -> Self {
        self.kind = BodyKind::Static;
        self
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        self.shape.validate().map_err(PhysicsError::InvalidShape)?;
        if !(self.density.is_finite() && self.density > T::zero()) {
            return Err(PhysicsError::InvalidBody(format!("density {} must be > 0", self.density)));
        }
        let finite = [
            self.position.x,
            self.position.y,
            self.angle,
            self.linear_velocity.x,
            self.linear_velocity.y,
            self.angular_velocity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(PhysicsError::InvalidBody("non-finite kinematic state".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ContactPhase {
    Began,
    Ended,
}

/// Contact event between two bodies; `a < b` always.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Contact {
    pub a: BodyHandle,
    pub b: BodyHandle,
    pub phase: ContactPhase,
}

impl Contact {
    pub fn began(&self) -> bool {
        self.phase == ContactPhase::Began
    }

    pub fn involves(&self, h: BodyHandle) -> bool {
        self.a == h || self.b == h
    }

    pub fn other(&self, h: BodyHandle) -> Option<BodyHandle> {
        if self.a == h {
            Some(self.b)
        } else if self.b == h {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaycastHit<T> {
    pub body: BodyHandle,
    pub point: Vec2<T>,
    pub fraction: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams<T> {
    /// s^-1
    pub linear_damping: T,
    /// s^-1
    pub angular_damping: T,
    pub max_speed: T,
    pub max_angular_speed: T,
    pub velocity_iterations: usize,
    pub position_iterations: usize,
    /// Penetration allowed before position correction kicks in.
    pub slop: T,
    pub correction: T,
}

impl<T: Real> Default for PhysicsParams<T> {
    fn default() -> Self {
        Self {
            linear_damping: T::lit(2.0),
            angular_damping: T::lit(3.0),
            max_speed: T::lit(15.0),
            max_angular_speed: T::lit(30.0),
            velocity_iterations: 6,
            position_iterations: 2,
            slop: T::lit(0.005),
            correction: T::lit(0.8),
        }
    }
}

#[derive(Clone, Debug)]
struct Body<T> {
    handle: BodyHandle,
    shape: Shape<T>,
    kind: BodyKind,
    sensor: bool,
    inv_mass: T,
    inv_inertia: T,
    position: Vec2<T>,
    angle: T,
    velocity: Vec2<T>,
    angular_velocity: T,
    force: Vec2<T>,
    torque: T,
}

impl<T: Real> Body<T> {
    fn world_shape(&self) -> WorldShape<T> {
        WorldShape::place(&self.shape, &Transform::new(self.position, self.angle))
    }

    fn is_dynamic(&self) -> bool {
        self.kind == BodyKind::Dynamic
    }
}

struct Manifold<T> {
    /// Unit normal pointing from body A to body B.
    normal: Vec2<T>,
    depth: T,
    points: [Vec2<T>; 2],
    count: usize,
}

#[derive(Clone, Debug)]
pub struct World<T> {
    bodies: Vec<Body<T>>,
    next_handle: u64,
    touching: BTreeSet<(BodyHandle, BodyHandle)>,
    pub params: PhysicsParams<T>,
}

impl<T: Real> Default for World<T> {
    fn default() -> Self {
        Self::new(PhysicsParams::default())
    }
}

impl<T: Real> World<T> {
    pub fn new(params: PhysicsParams<T>) -> Self {
        Self {
            bodies: Vec::new(),
            next_handle: 0,
            touching: BTreeSet::new(),
            params,
        }
    }

    /// Removes every body. Handles keep increasing so old ones stay invalid.
    pub fn clear(&mut self) {
        self.bodies.clear();
        self.touching.clear();
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn handles(&self) -> impl Iterator<Item = BodyHandle> + '_ {
        self.bodies.iter().map(|b| b.handle)
    }

    pub fn create_body(&mut self, def: &BodyDef<T>) -> Result<BodyHandle, PhysicsError> {
        def.validate()?;
        let handle = BodyHandle(self.next_handle);
        self.next_handle += 1;
        let (inv_mass, inv_inertia) = match def.kind {
            BodyKind::Static => (T::zero(), T::zero()),
            BodyKind::Dynamic => {
                let mass = def.shape.area() * def.density;
                let inertia = def.shape.unit_inertia() * def.density;
                (T::one() / mass, T::one() / inertia)
            }
        };
        self.bodies.push(Body {
            handle,
            shape: def.shape.clone(),
            kind: def.kind,
            sensor: def.sensor,
            inv_mass,
            inv_inertia,
            position: def.position,
            angle: def.angle,
            velocity: def.linear_velocity,
            angular_velocity: def.angular_velocity,
            force: Vec2::zero(),
            torque: T::zero(),
        });
        Ok(handle)
    }

    pub fn destroy_body(&mut self, h: BodyHandle) -> Result<(), PhysicsError> {
        let idx = self.index(h)?;
        self.bodies.remove(idx);
        self.touching.retain(|&(a, b)| a != h && b != h);
        Ok(())
    }

    fn index(&self, h: BodyHandle) -> Result<usize, PhysicsError> {
        self.bodies
            .binary_search_by_key(&h, |b| b.handle)
            .map_err(|_| PhysicsError::StaleHandle(h))
    }

    fn body(&self, h: BodyHandle) -> Result<&Body<T>, PhysicsError> {
        self.index(h).map(|i| &self.bodies[i])
    }

    fn body_mut(&mut self, h: BodyHandle) -> Result<&mut Body<T>, PhysicsError> {
        let i = self.index(h)?;
        Ok(&mut self.bodies[i])
    }

    pub fn contains(&self, h: BodyHandle) -> bool {
        self.index(h).is_ok()
    }

    pub fn position(&self, h: BodyHandle) -> Result<Vec2<T>, PhysicsError> {
        self.body(h).map(|b| b.position)
    }

    pub fn angle(&self, h: BodyHandle) -> Result<T, PhysicsError> {
        self.body(h).map(|b| b.angle)
    }

    pub fn linear_velocity(&self, h: BodyHandle) -> Result<Vec2<T>, PhysicsError> {
        self.body(h).map(|b| b.velocity)
    }

    pub fn angular_velocity(&self, h: BodyHandle) -> Result<T, PhysicsError> {
        self.body(h).map(|b| b.angular_velocity)
    }

    pub fn shape(&self, h: BodyHandle) -> Result<&Shape<T>, PhysicsError> {
        self.body(h).map(|b| &b.shape)
    }

    pub fn world_shape(&self, h: BodyHandle) -> Result<WorldShape<T>, PhysicsError> {
        self.body(h).map(|b| b.world_shape())
    }

    pub fn is_sensor(&self, h: BodyHandle) -> Result<bool, PhysicsError> {
        self.body(h).map(|b| b.sensor)
    }

    pub fn kind(&self, h: BodyHandle) -> Result<BodyKind, PhysicsError> {
        self.body(h).map(|b| b.kind)
    }

    pub fn mass(&self, h: BodyHandle) -> Result<T, PhysicsError> {
        self.body(h).map(|b| {
            if b.inv_mass > T::zero() {
                T::one() / b.inv_mass
            } else {
                T::infinity()
            }
        })
    }

    pub fn set_position(&mut self, h: BodyHandle, p: Vec2<T>) -> Result<(), PhysicsError> {
        self.body_mut(h).map(|b| b.position = p)
    }

    pub fn set_angle(&mut self, h: BodyHandle, angle: T) -> Result<(), PhysicsError> {
        self.body_mut(h).map(|b| b.angle = angle)
    }

    pub fn set_linear_velocity(&mut self, h: BodyHandle, v: Vec2<T>) -> Result<(), PhysicsError> {
        self.body_mut(h).map(|b| b.velocity = v)
    }

    pub fn set_angular_velocity(&mut self, h: BodyHandle, w: T) -> Result<(), PhysicsError> {
        self.body_mut(h).map(|b| b.angular_velocity = w)
    }

    /// Accumulates a body-frame force and a torque for the next step.
    pub fn apply_control(&mut self, h: BodyHandle, force: Vec2<T>, torque: T) -> Result<(), PhysicsError> {
        let b = self.body_mut(h)?;
        let world_force = force.rotated(b.angle);
        b.force += world_force;
        b.torque += torque;
        Ok(())
    }

    /// Accumulated world-frame force and torque pending for the next step.
    pub fn pending_control(&self, h: BodyHandle) -> Result<(Vec2<T>, T), PhysicsError> {
        self.body(h).map(|b| (b.force, b.torque))
    }

    /// Pairs currently in contact (including sensor overlaps).
    pub fn touching(&self) -> impl Iterator<Item = (BodyHandle, BodyHandle)> + '_ {
        self.touching.iter().copied()
    }

    pub fn step(&mut self, dt: T, substeps: usize) -> Vec<Contact> {
        assert!(dt > T::zero() && substeps >= 1, "step requires dt > 0 and substeps >= 1");
        let h = dt / T::lit(substeps as f64);
        let mut events = Vec::new();
        for _ in 0..substeps {
            self.integrate_velocities(h);
            self.solve_velocities();
            self.integrate_positions(h);
            for _ in 0..self.params.position_iterations {
                self.solve_positions();
            }
            self.update_touching(&mut events);
        }
        for b in &mut self.bodies {
            b.force = Vec2::zero();
            b.torque = T::zero();
        }
        events
    }

    fn integrate_velocities(&mut self, h: T) {
        let p = &self.params;
        let lin = T::one() / (T::one() + h * p.linear_damping);
        let ang = T::one() / (T::one() + h * p.angular_damping);
        for b in self.bodies.iter_mut().filter(|b| b.is_dynamic()) {
            b.velocity += b.force * (b.inv_mass * h);
            b.angular_velocity += b.torque * b.inv_inertia * h;
            b.velocity = b.velocity * lin;
            b.angular_velocity = b.angular_velocity * ang;
            Self::clamp(b, p);
        }
    }

    fn clamp(b: &mut Body<T>, p: &PhysicsParams<T>) {
        let speed = b.velocity.length();
        if speed > p.max_speed {
            b.velocity = b.velocity * (p.max_speed / speed);
        }
        b.angular_velocity = b.angular_velocity.max(-p.max_angular_speed).min(p.max_angular_speed);
    }

    fn integrate_positions(&mut self, h: T) {
        for b in self.bodies.iter_mut().filter(|b| b.is_dynamic()) {
            b.position += b.velocity * h;
            b.angle += b.angular_velocity * h;
        }
    }

    fn solid_manifolds(&self) -> Vec<(usize, usize, Manifold<T>)> {
        let shapes: Vec<_> = self.bodies.iter().map(|b| b.world_shape()).collect();
        let boxes: Vec<_> = shapes.iter().map(|s| s.aabb()).collect();
        let mut out = Vec::new();
        for i in 0..self.bodies.len() {
            let bi = &self.bodies[i];
            if bi.sensor {
                continue;
            }
            for j in (i + 1)..self.bodies.len() {
                let bj = &self.bodies[j];
                if bj.sensor || !(bi.is_dynamic() || bj.is_dynamic()) || !boxes[i].overlaps(&boxes[j]) {
                    continue;
                }
                if let Some(m) = collide(&shapes[i], &shapes[j]) {
                    out.push((i, j, m));
                }
            }
        }
        out
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_velocities(&mut self) {
        let manifolds = self.solid_manifolds();
        if manifolds.is_empty() {
            return;
        }
        let mut accumulated: Vec<[T; 2]> = vec![[T::zero(); 2]; manifolds.len()];
        for _ in 0..self.params.velocity_iterations {
            for (k, (i, j, m)) in manifolds.iter().enumerate() {
                for p in 0..m.count {
                    let (a, b) = (&self.bodies[*i], &self.bodies[*j]);
                    let ra = m.points[p] - a.position;
                    let rb = m.points[p] - b.position;
                    let va = a.velocity + ra.perp() * a.angular_velocity;
                    let vb = b.velocity + rb.perp() * b.angular_velocity;
                    let vn = (vb - va).dot(m.normal);
                    let rna = ra.cross(m.normal);
                    let rnb = rb.cross(m.normal);
                    let k_normal = a.inv_mass + b.inv_mass + rna * rna * a.inv_inertia + rnb * rnb * b.inv_inertia;
                    if k_normal <= T::zero() {
                        continue;
                    }
                    let lambda = -vn / k_normal;
                    let old = accumulated[k][p];
                    let new = (old + lambda).max(T::zero());
                    accumulated[k][p] = new;
                    let impulse = m.normal * (new - old);
                    let (ia, ib) = (a.inv_mass, b.inv_mass);
                    let (iia, iib) = (a.inv_inertia, b.inv_inertia);
                    let a = &mut self.bodies[*i];
                    a.velocity -= impulse * ia;
                    a.angular_velocity -= ra.cross(impulse) * iia;
                    let b = &mut self.bodies[*j];
                    b.velocity += impulse * ib;
                    b.angular_velocity += rb.cross(impulse) * iib;
                }
            }
        }
    }

    fn solve_positions(&mut self) {
        let manifolds = self.solid_manifolds();
        for (i, j, m) in manifolds {
            let (ia, ib) = (self.bodies[i].inv_mass, self.bodies[j].inv_mass);
            let total = ia + ib;
            let excess = m.depth - self.params.slop;
            if total <= T::zero() || excess <= T::zero() {
                continue;
            }
            let push = m.normal * (excess * self.params.correction / total);
            self.bodies[i].position -= push * ia;
            self.bodies[j].position += push * ib;
        }
    }

    fn update_touching(&mut self, events: &mut Vec<Contact>) {
        let shapes: Vec<_> = self.bodies.iter().map(|b| b.world_shape()).collect();
        let boxes: Vec<_> = shapes.iter().map(|s| s.aabb()).collect();
        let mut now = BTreeSet::new();
        for i in 0..self.bodies.len() {
            for j in (i + 1)..self.bodies.len() {
                if !(self.bodies[i].is_dynamic() || self.bodies[j].is_dynamic()) || !boxes[i].overlaps(&boxes[j]) {
                    continue;
                }
                if collide(&shapes[i], &shapes[j]).is_some() {
                    now.insert((self.bodies[i].handle, self.bodies[j].handle));
                }
            }
        }
        for &(a, b) in now.difference(&self.touching) {
            events.push(Contact { a, b, phase: ContactPhase::Began });
        }
        for &(a, b) in self.touching.difference(&now) {
            events.push(Contact { a, b, phase: ContactPhase::Ended });
        }
        self.touching = now;
    }

    /// Nearest body accepted by `filter` along `from -> to`.
    pub fn raycast<F>(&self, from: Vec2<T>, to: Vec2<T>, mut filter: F) -> Result<Option<RaycastHit<T>>, PhysicsError>
    where
        F: FnMut(BodyHandle) -> bool,
    {
        if from == to {
            return Err(PhysicsError::DegenerateRay);
        }
        let bounds = Aabb::segment_bounds(from, to);
        let mut best: Option<(T, BodyHandle)> = None;
        for b in &self.bodies {
            if !filter(b.handle) {
                continue;
            }
            let shape = b.world_shape();
            if !shape.aabb().overlaps(&bounds) {
                continue;
            }
            if let Some(t) = shape.segment_entry(from, to) {
                // ties go to the lower handle since bodies are visited in order
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, b.handle));
                }
            }
        }
        Ok(best.map(|(fraction, body)| RaycastHit {
            body,
            point: from.lerp(to, fraction),
            fraction,
        }))
    }

    /// Placed shapes of every body, for issuing many queries against one
    /// frozen state.
    pub fn snapshot(&self) -> ShapeSnapshot<T> {
        ShapeSnapshot {
            entries: self
                .bodies
                .iter()
                .map(|b| {
                    let shape = b.world_shape();
                    SnapshotEntry {
                        handle: b.handle,
                        aabb: shape.aabb(),
                        shape,
                        position: b.position,
                        angle: b.angle,
                        sensor: b.sensor,
                    }
                })
                .collect(),
        }
    }

    /// Feeds the kinematic state of every body into `state` in handle order.
    pub fn hash_state<H: Hasher>(&self, state: &mut H) {
        // handle values are excluded: they depend on how many bodies earlier
        // episodes created
        state.write_u64(self.bodies.len() as u64);
        for b in &self.bodies {
            for v in [b.position.x, b.position.y, b.angle, b.velocity.x, b.velocity.y, b.angular_velocity] {
                state.write_u64(v.to_f64_lossy().to_bits());
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SnapshotEntry<T> {
    pub handle: BodyHandle,
    pub shape: WorldShape<T>,
    pub aabb: Aabb<T>,
    pub position: Vec2<T>,
    pub angle: T,
    pub sensor: bool,
}

/// Read-only copy of all placed shapes, in handle order.
#[derive(Clone, Debug)]
pub struct ShapeSnapshot<T> {
    entries: Vec<SnapshotEntry<T>>,
}

impl<T: Real> ShapeSnapshot<T> {
    pub fn entries(&self) -> &[SnapshotEntry<T>] {
        &self.entries
    }

    pub fn get(&self, h: BodyHandle) -> Option<&SnapshotEntry<T>> {
        self.entries
            .binary_search_by_key(&h, |e| e.handle)
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Same contract as [`World::raycast`].
    pub fn raycast<F>(&self, from: Vec2<T>, to: Vec2<T>, mut filter: F) -> Result<Option<RaycastHit<T>>, PhysicsError>
    where
        F: FnMut(&SnapshotEntry<T>) -> bool,
    {
        if from == to {
            return Err(PhysicsError::DegenerateRay);
        }
        let bounds = Aabb::segment_bounds(from, to);
        let mut best: Option<(T, BodyHandle)> = None;
        for e in &self.entries {
            if !e.aabb.overlaps(&bounds) || !filter(e) {
                continue;
            }
            if let Some(t) = e.shape.segment_entry(from, to) {
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, e.handle));
                }
            }
        }
        Ok(best.map(|(fraction, body)| RaycastHit {
            body,
            point: from.lerp(to, fraction),
            fraction,
        }))
    }
}

/// Whether two placed shapes overlap (touching counts).
pub fn shapes_overlap<T: Real>(a: &WorldShape<T>, b: &WorldShape<T>) -> bool {
    a.aabb().overlaps(&b.aabb()) && collide(a, b).is_some()
}

fn collide<T: Real>(a: &WorldShape<T>, b: &WorldShape<T>) -> Option<Manifold<T>> {
    match (a, b) {
        (WorldShape::Circle { center: ca, radius: ra }, WorldShape::Circle { center: cb, radius: rb }) => {
            collide_circles(*ca, *ra, *cb, *rb)
        }
        (WorldShape::Polygon { vertices }, WorldShape::Circle { center, radius }) => {
            collide_polygon_circle(vertices, *center, *radius)
        }
        (WorldShape::Circle { center, radius }, WorldShape::Polygon { vertices }) => {
            collide_polygon_circle(vertices, *center, *radius).map(flip)
        }
        (WorldShape::Polygon { vertices: va }, WorldShape::Polygon { vertices: vb }) => collide_polygons(va, vb),
    }
}

fn flip<T: Real>(mut m: Manifold<T>) -> Manifold<T> {
    m.normal = -m.normal;
    m
}

fn collide_circles<T: Real>(ca: Vec2<T>, ra: T, cb: Vec2<T>, rb: T) -> Option<Manifold<T>> {
    let d = cb - ca;
    let dist2 = d.length_squared();
    let rsum = ra + rb;
    if dist2 >= rsum * rsum {
        return None;
    }
    let dist = dist2.sqrt();
    let normal = if dist > T::zero() { d / dist } else { Vec2::new(T::one(), T::zero()) };
    let point = ca + normal * (ra - (rsum - dist) / T::lit(2.0));
    Some(Manifold {
        normal,
        depth: rsum - dist,
        points: [point, point],
        count: 1,
    })
}

fn collide_polygon_circle<T: Real>(verts: &[Vec2<T>], center: Vec2<T>, radius: T) -> Option<Manifold<T>> {
    let n = verts.len();
    // face of maximum separation
    let mut best_sep = -T::infinity();
    let mut best_face = 0;
    for i in 0..n {
        let e = verts[(i + 1) % n] - verts[i];
        let normal = Vec2::new(e.y, -e.x).normalized();
        let sep = normal.dot(center - verts[i]);
        if sep > radius {
            return None;
        }
        if sep > best_sep {
            best_sep = sep;
            best_face = i;
        }
    }
    let v1 = verts[best_face];
    let v2 = verts[(best_face + 1) % n];
    let e = v2 - v1;
    let face_normal = Vec2::new(e.y, -e.x).normalized();
    if best_sep <= T::zero() {
        // center inside the polygon
        return Some(Manifold {
            normal: face_normal,
            depth: radius - best_sep,
            points: [center, center],
            count: 1,
        });
    }
    let u1 = (center - v1).dot(v2 - v1);
    let u2 = (center - v2).dot(v1 - v2);
    let closest = if u1 <= T::zero() {
        v1
    } else if u2 <= T::zero() {
        v2
    } else {
        v1 + e * (u1 / e.length_squared())
    };
    let d = center - closest;
    let dist2 = d.length_squared();
    if dist2 >= radius * radius {
        return None;
    }
    let dist = dist2.sqrt();
    let normal = if dist > T::zero() { d / dist } else { face_normal };
    Some(Manifold {
        normal,
        depth: radius - dist,
        points: [closest, closest],
        count: 1,
    })
}

/// Axis of least penetration among `a`'s face normals: (separation, face).
fn max_separation<T: Real>(a: &[Vec2<T>], b: &[Vec2<T>]) -> (T, usize) {
    let n = a.len();
    let mut best = (-T::infinity(), 0);
    for i in 0..n {
        let e = a[(i + 1) % n] - a[i];
        let normal = Vec2::new(e.y, -e.x).normalized();
        let min_b = b.iter().map(|v| normal.dot(*v - a[i])).fold(T::infinity(), T::min);
        if min_b > best.0 {
            best = (min_b, i);
        }
    }
    best
}

fn collide_polygons<T: Real>(a: &[Vec2<T>], b: &[Vec2<T>]) -> Option<Manifold<T>> {
    let (sep_a, face_a) = max_separation(a, b);
    if sep_a >= T::zero() {
        return None;
    }
    let (sep_b, face_b) = max_separation(b, a);
    if sep_b >= T::zero() {
        return None;
    }
    // reference face on whichever polygon gives the shallower overlap
    let (reference, incident, face, flipped) = if sep_b > sep_a + T::lit(1e-9) {
        (b, a, face_b, true)
    } else {
        (a, b, face_a, false)
    };
    let n = reference.len();
    let r1 = reference[face];
    let e = reference[(face + 1) % n] - r1;
    let normal = Vec2::new(e.y, -e.x).normalized();
    let mut deepest: Vec<(T, Vec2<T>)> = incident
        .iter()
        .map(|v| (normal.dot(*v - r1), *v))
        .filter(|(d, _)| *d < T::zero())
        .collect();
    if deepest.is_empty() {
        return None;
    }
    deepest.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let depth = -deepest[0].0;
    let mut points = [deepest[0].1, deepest[0].1];
    let mut count = 1;
    if deepest.len() > 1 {
        points[1] = deepest[1].1;
        count = 2;
    }
    let normal = if flipped { -normal } else { normal };
    Some(Manifold {
        normal,
        depth,
        points,
        count,
    })
}

/// Axis-aligned square room enclosed by four static walls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room<T> {
    pub half_extent: T,
    pub wall_thickness: T,
}

impl<T: Real> Default for Room<T> {
    fn default() -> Self {
        Self {
            half_extent: T::lit(10.0),
            wall_thickness: T::lit(0.5),
        }
    }
}

impl<T: Real> Room<T> {
    pub fn size(&self) -> T {
        self.half_extent * T::lit(2.0)
    }

    /// Whether a disk lies fully inside the room interior.
    pub fn contains_disk(&self, center: Vec2<T>, radius: T) -> bool {
        let lim = self.half_extent - radius;
        center.x.abs() <= lim && center.y.abs() <= lim
    }

    /// Clamps a point so a disk of `radius` around it stays inside the room.
    pub fn clamp_inside(&self, p: Vec2<T>, radius: T) -> Vec2<T> {
        let lim = self.half_extent - radius;
        Vec2::new(p.x.max(-lim).min(lim), p.y.max(-lim).min(lim))
    }

    pub fn wall_defs(&self) -> [BodyDef<T>; 4] {
        let h = self.half_extent;
        let t = self.wall_thickness / T::lit(2.0);
        let long = h + self.wall_thickness;
        let make = |pos: Vec2<T>, hw: T, hh: T| BodyDef::new(Shape::rect(hw, hh)).at(pos).fixed();
        [
            make(Vec2::new(T::zero(), -(h + t)), long, t),
            make(Vec2::new(h + t, T::zero()), t, long),
            make(Vec2::new(T::zero(), h + t), long, t),
            make(Vec2::new(-(h + t), T::zero()), t, long),
        ]
    }
}
