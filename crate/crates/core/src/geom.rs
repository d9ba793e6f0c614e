//! Planar geometry shared by the physics layer and the gameplay modules.
//!
//! Everything here is generic over the scalar type so the same code runs
//! in `f32` or `f64`; the gameplay layer pins `f64` through the aliases at
//! the crate root.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Scalar types the geometry and physics code can be instantiated with.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + Default
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Widening conversion used for hashing and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at angle `theta` from the +x axis.
    pub fn from_angle(theta: T) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn length_squared(self) -> T {
        self.dot(self)
    }

    pub fn length(self) -> T {
        self.length_squared().sqrt()
    }

    pub fn normalized(self) -> Self {
        let len = self.length();
        if len > T::zero() {
            self / len
        } else {
            Self::zero()
        }
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn rotated(self, theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).length()
    }

    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }

    pub fn cast<U: Real>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> SubAssign for Vec2<T> {
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Real> Div<T> for Vec2<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let tau = T::TAU();
    let mut a = theta % tau;
    if a > T::PI() {
        a -= tau;
    } else if a <= -T::PI() {
        a += tau;
    }
    a
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape<T> {
    Circle { radius: T },
    /// Convex polygon, vertices counter-clockwise in the body frame.
    Polygon { vertices: Vec<Vec2<T>> },
}

pub const MAX_POLYGON_VERTICES: usize = 8;

impl<T: Real> Shape<T> {
    pub fn circle(radius: T) -> Self {
        Shape::Circle { radius }
    }

    /// Axis-aligned box with the given half-extents, vertices starting at
    /// the bottom-left corner and running counter-clockwise.
    pub fn rect(half_w: T, half_h: T) -> Self {
        Shape::Polygon {
            vertices: rect_vertices(half_w, half_h).to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Shape::Circle { radius } => {
                if !(radius.is_finite() && *radius > T::zero()) {
                    return Err(format!("invalid shape: circle radius {radius} must be > 0"));
                }
                Ok(())
            }
            Shape::Polygon { vertices } => validate_polygon(vertices),
        }
    }

    pub fn area(&self) -> T {
        match self {
            Shape::Circle { radius } => T::PI() * *radius * *radius,
            Shape::Polygon { vertices } => polygon_area(vertices),
        }
    }

    /// Polar moment of inertia about the body origin per unit density.
    pub fn unit_inertia(&self) -> T {
        match self {
            Shape::Circle { radius } => {
                let r2 = *radius * *radius;
                T::PI() * r2 * r2 / T::lit(2.0)
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut num = T::zero();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = a.cross(b);
                    num += c * (a.dot(a) + a.dot(b) + b.dot(b));
                }
                num / T::lit(12.0)
            }
        }
    }

    /// Radius of the smallest origin-centered circle containing the shape.
    pub fn bounding_radius(&self) -> T {
        match self {
            Shape::Circle { radius } => *radius,
            Shape::Polygon { vertices } => vertices
                .iter()
                .map(|v| v.length())
                .fold(T::zero(), T::max),
        }
    }
}

pub fn rect_vertices<T: Real>(half_w: T, half_h: T) -> [Vec2<T>; 4] {
    [
        Vec2::new(-half_w, -half_h),
        Vec2::new(half_w, -half_h),
        Vec2::new(half_w, half_h),
        Vec2::new(-half_w, half_h),
    ]
}

pub fn polygon_area<T: Real>(vertices: &[Vec2<T>]) -> T {
    let n = vertices.len();
    let mut twice = T::zero();
    for i in 0..n {
        twice += vertices[i].cross(vertices[(i + 1) % n]);
    }
    twice / T::lit(2.0)
}

fn validate_polygon<T: Real>(vertices: &[Vec2<T>]) -> Result<(), String> {
    let n = vertices.len();
    if !(3..=MAX_POLYGON_VERTICES).contains(&n) {
        return Err(format!(
            "invalid shape: polygon needs 3..={MAX_POLYGON_VERTICES} vertices, got {n}"
        ));
    }
    if vertices.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
        return Err("invalid shape: non-finite polygon vertex".into());
    }
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        if (b - a).cross(c - b) <= T::zero() {
            return Err("invalid shape: polygon must be strictly convex and counter-clockwise".into());
        }
    }
    if polygon_area(vertices) <= T::zero() {
        return Err("invalid shape: polygon has no area".into());
    }
    Ok(())
}

/// Rigid transform: rotate by `angle`, then translate by `position`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform<T> {
    pub position: Vec2<T>,
    pub angle: T,
    cos: T,
    sin: T,
}

impl<T: Real> Transform<T> {
    pub fn new(position: Vec2<T>, angle: T) -> Self {
        let (sin, cos) = angle.sin_cos();
        Self {
            position,
            angle,
            cos,
            sin,
        }
    }

    pub fn rotate(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(self.cos * v.x - self.sin * v.y, self.sin * v.x + self.cos * v.y)
    }

    pub fn apply(&self, v: Vec2<T>) -> Vec2<T> {
        self.rotate(v) + self.position
    }
}

/// Shape placed in the world.
#[derive(Clone, Debug)]
pub enum WorldShape<T> {
    Circle { center: Vec2<T>, radius: T },
    Polygon { vertices: Vec<Vec2<T>> },
}

impl<T: Real> WorldShape<T> {
    pub fn place(shape: &Shape<T>, xf: &Transform<T>) -> Self {
        match shape {
            Shape::Circle { radius } => WorldShape::Circle {
                center: xf.position,
                radius: *radius,
            },
            Shape::Polygon { vertices } => WorldShape::Polygon {
                vertices: vertices.iter().map(|v| xf.apply(*v)).collect(),
            },
        }
    }

    /// Entry fraction of the segment `from -> to` into this shape. A segment
    /// starting inside the shape enters at fraction 0.
    pub fn segment_entry(&self, from: Vec2<T>, to: Vec2<T>) -> Option<T> {
        match self {
            WorldShape::Circle { center, radius } => segment_circle_entry(from, to, *center, *radius),
            WorldShape::Polygon { vertices } => segment_polygon_entry(from, to, vertices),
        }
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        match self {
            WorldShape::Circle { center, radius } => (p - *center).length_squared() <= *radius * *radius,
            WorldShape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| (vertices[(i + 1) % n] - vertices[i]).cross(p - vertices[i]) >= T::zero())
            }
        }
    }

    pub fn aabb(&self) -> Aabb<T> {
        match self {
            WorldShape::Circle { center, radius } => Aabb {
                min: Vec2::new(center.x - *radius, center.y - *radius),
                max: Vec2::new(center.x + *radius, center.y + *radius),
            },
            WorldShape::Polygon { vertices } => {
                let mut min = vertices[0];
                let mut max = vertices[0];
                for v in &vertices[1..] {
                    min = Vec2::new(min.x.min(v.x), min.y.min(v.y));
                    max = Vec2::new(max.x.max(v.x), max.y.max(v.y));
                }
                Aabb { min, max }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec2<T>,
    pub max: Vec2<T>,
}

impl<T: Real> Aabb<T> {
    pub fn overlaps(&self, o: &Self) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn segment_bounds(a: Vec2<T>, b: Vec2<T>) -> Self {
        Self {
            min: Vec2::new(a.x.min(b.x), a.y.min(b.y)),
            max: Vec2::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }
}

pub fn segment_circle_entry<T: Real>(from: Vec2<T>, to: Vec2<T>, center: Vec2<T>, radius: T) -> Option<T> {
    let d = to - from;
    let f = from - center;
    let c = f.length_squared() - radius * radius;
    if c <= T::zero() {
        return Some(T::zero());
    }
    let a = d.length_squared();
    if a == T::zero() {
        return None;
    }
    let b = f.dot(d);
    if b >= T::zero() {
        // moving away from the center while outside
        return None;
    }
    let disc = b * b - a * c;
    if disc < T::zero() {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    (t >= T::zero() && t <= T::one()).then_some(t)
}

/// Cyrus-Beck clipping of a segment against a convex CCW polygon.
pub fn segment_polygon_entry<T: Real>(from: Vec2<T>, to: Vec2<T>, vertices: &[Vec2<T>]) -> Option<T> {
    let d = to - from;
    let mut t_enter = T::zero();
    let mut t_exit = T::one();
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let edge = b - a;
        // outward normal for a CCW polygon
        let normal = Vec2::new(edge.y, -edge.x);
        let num = normal.dot(a - from);
        let den = normal.dot(d);
        if den == T::zero() {
            if num < T::zero() {
                return None;
            }
            continue;
        }
        let t = num / den;
        if den < T::zero() {
            if t > t_enter {
                t_enter = t;
            }
        } else if t < t_exit {
            t_exit = t;
        }
        if t_enter > t_exit {
            return None;
        }
    }
    Some(t_enter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_two_vertex_polygon() {
        let s: Shape<f64> = Shape::Polygon {
            vertices: vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)],
        };
        assert!(s.validate().unwrap_err().contains("invalid shape"));
    }

    #[test]
    fn rejects_clockwise_and_concave() {
        let cw: Shape<f64> = Shape::Polygon {
            vertices: vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)],
        };
        assert!(cw.validate().is_err());
        let concave: Shape<f64> = Shape::Polygon {
            vertices: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(2.0, 0.0),
                Vec2::new(1.0, 0.5),
                Vec2::new(2.0, 2.0),
                Vec2::new(0.0, 2.0),
            ],
        };
        assert!(concave.validate().is_err());
        assert!(Shape::<f64>::circle(0.0).validate().is_err());
        assert!(Shape::<f64>::rect(0.5, 0.2).validate().is_ok());
    }

    #[test]
    fn rect_inertia_matches_closed_form() {
        // m (w^2 + h^2) / 12 with full widths, unit density
        let s = Shape::<f64>::rect(0.5, 1.0);
        let (w, h) = (1.0, 2.0);
        let expected = w * h * (w * w + h * h) / 12.0;
        assert!((s.unit_inertia() - expected).abs() < 1e-12);
        assert!((s.area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn circle_entry_point_before_center() {
        let t = segment_circle_entry(Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(2.0, 0.0), 0.5).unwrap();
        assert!((t - 1.5 / 4.0).abs() < 1e-12);
        assert!(t < 0.5);
        assert!(segment_circle_entry(Vec2::new(0.0, 2.0), Vec2::new(4.0, 2.0), Vec2::new(2.0, 0.0), 0.5).is_none());
    }

    #[test]
    fn polygon_entry_and_inside_start() {
        let verts = rect_vertices(1.0, 1.0).to_vec();
        let t = segment_polygon_entry(Vec2::new(-3.0, 0.0), Vec2::new(3.0, 0.0), &verts).unwrap();
        assert!((t - 2.0 / 6.0).abs() < 1e-12);
        let inside = segment_polygon_entry(Vec2::new(0.0, 0.0), Vec2::new(3.0, 0.0), &verts).unwrap();
        assert_eq!(inside, 0.0);
        assert!(segment_polygon_entry(Vec2::new(-3.0, 2.0), Vec2::new(3.0, 2.0), &verts).is_none());
        assert!(segment_polygon_entry(Vec2::new(-3.0, 0.0), Vec2::new(-2.0, 0.0), &verts).is_none());
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let a = wrap_angle(k as f64 * 0.77);
            assert!(a > -std::f64::consts::PI && a <= std::f64::consts::PI);
        }
    }

    #[test]
    fn generic_over_f32() {
        let v = Vec2::<f32>::new(1.0, 0.0).rotated(std::f32::consts::FRAC_PI_2);
        assert!(v.x.abs() < 1e-6 && (v.y - 1.0).abs() < 1e-6);
    }
}
